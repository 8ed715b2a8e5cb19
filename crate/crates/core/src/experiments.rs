//! Monte Carlo rejection tables and the minimum-variance hedging study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::LogPricePanel;
use crate::pipeline::{EstimationConfig, MethodSelection, TestRunConfig};
use crate::seeding;
use crate::simulation::SimConfig;
use crate::spot::BlockSpec;
use crate::testing::Method;

/// The `(n, k_n)` menu used throughout the rejection tables.
pub const CELL_MENU: [(usize, usize); 7] = [
    (26, 13),
    (39, 13),
    (78, 26),
    (390, 130),
    (780, 195),
    (1_560, 390),
    (4_680, 936),
];

/// Grid of Monte Carlo cells for a rejection table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McGrid {
    pub cells: Vec<(usize, usize)>,
    pub t_values: Vec<usize>,
    pub intercepts: Vec<f64>,
    pub alphas: Vec<f64>,
    pub reps: usize,
    pub draws: usize,
    pub seed: u64,
    pub methods: MethodSelection,
    /// Fine Euler steps per simulated day; must be a multiple of every `n`.
    pub steps_per_day: usize,
}

impl McGrid {
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() || self.t_values.is_empty() || self.intercepts.is_empty() {
            return Err(Error::InvalidConfig("empty Monte Carlo grid".into()));
        }
        for &(n, k_n) in &self.cells {
            BlockSpec::new(n, k_n)?;
            if !self.steps_per_day.is_multiple_of(n) {
                return Err(Error::InvalidConfig(format!(
                    "steps_per_day = {} is not a multiple of n = {n}",
                    self.steps_per_day
                )));
            }
        }
        for &a in &self.intercepts {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidConfig(format!("intercept {a} outside (0, 1]")));
            }
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be positive".into()));
        }
        Ok(())
    }
}

/// One rejection-rate entry with its Monte Carlo standard error.
#[derive(Debug, Clone, Serialize)]
pub struct RejectionCell {
    pub n: usize,
    pub k_n: usize,
    pub t_days: usize,
    pub intercept: f64,
    pub method: Method,
    pub alpha: f64,
    pub rate: f64,
    pub mc_se: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectionTable {
    pub grid: McGrid,
    pub cells: Vec<RejectionCell>,
}

fn cell_label(n: usize, k_n: usize, t_days: usize, intercept: f64) -> u64 {
    let base = u64::from_le_bytes(*b"rejtable");
    seeding::derive(
        base,
        &[n as u64, k_n as u64, t_days as u64, intercept.to_bits()],
    )
}

/// Simulate `reps` panels per grid cell, run the selected tests, and report
/// the fraction rejecting at each level, with `sqrt(p(1-p)/R)` standard
/// errors. Replications use counter-based seeds, so parallel and serial runs
/// produce identical tables.
pub fn rejection_table(grid: &McGrid) -> Result<RejectionTable> {
    grid.validate()?;
    let mut cells = Vec::new();
    for &(n, k_n) in &grid.cells {
        for &t_days in &grid.t_values {
            for &a in &grid.intercepts {
                let outcomes = run_cell(grid, n, k_n, t_days, a)?;
                cells.extend(outcomes);
            }
        }
    }
    Ok(RejectionTable {
        grid: grid.clone(),
        cells,
    })
}

fn run_cell(
    grid: &McGrid,
    n: usize,
    k_n: usize,
    t_days: usize,
    intercept: f64,
) -> Result<Vec<RejectionCell>> {
    let label = cell_label(n, k_n, t_days, intercept);
    let methods: Vec<Method> = match grid.methods {
        MethodSelection::Pivotal => vec![Method::Pivotal],
        MethodSelection::Nonpivotal => vec![Method::Nonpivotal],
        _ => vec![Method::Pivotal, Method::Nonpivotal],
    };
    let n_alphas = grid.alphas.len();

    let per_rep = |rep: usize| -> Result<Vec<bool>> {
        let rep_seed = seeding::derive(grid.seed, &[label, rep as u64]);
        let mut sim = SimConfig::new(n, t_days, intercept, seeding::derive(rep_seed, &[1]));
        sim.steps_per_day = grid.steps_per_day;
        let out = crate::simulation::simulate_paths(&sim)?;
        let cfg = TestRunConfig {
            est: EstimationConfig::new(BlockSpec::new(n, k_n)?),
            methods: grid.methods,
            alphas: grid.alphas.clone(),
            draws: grid.draws,
            seed: seeding::derive(rep_seed, &[2]),
        };
        let (reports, _) = crate::pipeline::run_tests(&out.panel, &cfg)?;
        // Reports arrive grouped by method in alpha order; flatten to a
        // fixed-size decision vector.
        let mut decisions = vec![false; methods.len() * n_alphas];
        for report in reports {
            let mi = methods.iter().position(|&m| m == report.method);
            let ai = grid.alphas.iter().position(|&a| a == report.alpha);
            if let (Some(mi), Some(ai)) = (mi, ai) {
                decisions[mi * n_alphas + ai] = report.reject;
            }
        }
        Ok(decisions)
    };

    let decisions: Vec<Vec<bool>> = (0..grid.reps)
        .into_par_iter()
        .map(per_rep)
        .collect::<Result<Vec<_>>>()?;
    let mut tally = vec![0usize; methods.len() * n_alphas];
    for d in &decisions {
        for (slot, &hit) in tally.iter_mut().zip(d) {
            *slot += hit as usize;
        }
    }

    let mut out = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        for (ai, &alpha) in grid.alphas.iter().enumerate() {
            let rate = tally[mi * n_alphas + ai] as f64 / grid.reps as f64;
            out.push(RejectionCell {
                n,
                k_n,
                t_days,
                intercept,
                method,
                alpha,
                rate,
                mc_se: (rate * (1.0 - rate) / grid.reps as f64).sqrt(),
                reps: grid.reps,
            });
        }
    }
    Ok(out)
}

impl RejectionTable {
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "# meta: {}", serde_json::to_string(&self.grid)?)?;
        writeln!(file, "n,k_n,t_days,a,method,alpha,rate,mc_se,reps")?;
        for c in &self.cells {
            writeln!(
                file,
                "{},{},{},{},{},{},{:.4},{:.4},{}",
                c.n, c.k_n, c.t_days, c.intercept, c.method, c.alpha, c.rate, c.mc_se, c.reps
            )?;
        }
        Ok(())
    }

    /// Panel-style plain-text rendering: one panel per (method, T), rows per
    /// `(n, k_n)`, column groups per level with intercepts side by side.
    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let methods: Vec<Method> = dedup(self.cells.iter().map(|c| c.method));
        let t_values: Vec<usize> = dedup(self.cells.iter().map(|c| c.t_days));
        let alphas: Vec<f64> = dedup(self.cells.iter().map(|c| c.alpha));
        let intercepts: Vec<f64> = dedup(self.cells.iter().map(|c| c.intercept));
        let pairs: Vec<(usize, usize)> = dedup(self.cells.iter().map(|c| (c.n, c.k_n)));

        for &method in &methods {
            for &t in &t_values {
                writeln!(s, "Panel: {method} test, T = {t}, reps = {}", self.grid.reps).unwrap();
                write!(s, "{:>6} {:>6}", "n", "k_n").unwrap();
                for &alpha in &alphas {
                    write!(s, "  | {:>4.0}%:", alpha * 100.0).unwrap();
                    for &a in &intercepts {
                        write!(s, " a={:<5.3}", a).unwrap();
                    }
                }
                writeln!(s).unwrap();
                for &(n, k_n) in &pairs {
                    write!(s, "{n:>6} {k_n:>6}").unwrap();
                    for &alpha in &alphas {
                        write!(s, "  |      ").unwrap();
                        for &a in &intercepts {
                            let cell = self.cells.iter().find(|c| {
                                c.method == method
                                    && c.t_days == t
                                    && c.alpha == alpha
                                    && c.intercept == a
                                    && c.n == n
                                    && c.k_n == k_n
                            });
                            match cell {
                                Some(c) => write!(s, " {:>7.3}", c.rate).unwrap(),
                                None => write!(s, " {:>7}", "-").unwrap(),
                            }
                        }
                    }
                    writeln!(s).unwrap();
                }
                writeln!(s).unwrap();
            }
        }
        s
    }
}

fn dedup<T: PartialEq + Copy>(iter: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for v in iter {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Minimum-variance hedging
// ---------------------------------------------------------------------------

/// One intraday hedging interval.
#[derive(Debug, Clone, Serialize)]
pub struct HedgeBin {
    pub day: usize,
    pub bin: usize,
    pub ret_x: f64,
    pub ret_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    /// Hedge ratio using the bin's own realized correlation.
    pub phi: f64,
    /// Hedge ratio using the day-average correlation instead.
    pub phi_bar: f64,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct HedgeSeries {
    pub bins_per_day: usize,
    pub bins: Vec<HedgeBin>,
    /// Day-average realized correlation over valid bins.
    pub rho_sc_daily: Vec<f64>,
}

pub const HEDGE_BINS_PER_DAY: usize = 78;

/// Compute per-bin realized hedge ratios on a panel whose grid is a multiple
/// of 78 intervals per day (five-minute bins from finer data).
pub fn hedge_ratios(panel: &LogPricePanel) -> Result<HedgeSeries> {
    if !panel.n.is_multiple_of(HEDGE_BINS_PER_DAY) {
        return Err(Error::InvalidConfig(format!(
            "panel n = {} is not a multiple of {HEDGE_BINS_PER_DAY}",
            panel.n
        )));
    }
    let sub = panel.n / HEDGE_BINS_PER_DAY;
    let days = panel.days();
    let mut bins = Vec::with_capacity(days * HEDGE_BINS_PER_DAY);
    let mut rho_sc_daily = Vec::with_capacity(days);
    let mut any_valid = false;

    for t in 0..days {
        let row_x = panel.x.row(t);
        let row_y = panel.y.row(t);
        let day_start = bins.len();
        let mut rho_sum = 0.0;
        let mut rho_count = 0usize;
        for b in 0..HEDGE_BINS_PER_DAY {
            let mut vx = 0.0;
            let mut vy = 0.0;
            let mut cxy = 0.0;
            for s in 0..sub {
                let i = b * sub + s;
                let dx = row_x[i + 1] - row_x[i];
                let dy = row_y[i + 1] - row_y[i];
                vx += dx * dx;
                vy += dy * dy;
                cxy += dx * dy;
            }
            let valid = vx > 0.0 && vy > 0.0;
            let (sigma_x, sigma_y, rho) = if valid {
                let sx = vx.sqrt();
                let sy = vy.sqrt();
                (sx, sy, cxy / (sx * sy))
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            if valid {
                rho_sum += rho;
                rho_count += 1;
            }
            bins.push(HedgeBin {
                day: t,
                bin: b,
                ret_x: row_x[(b + 1) * sub] - row_x[b * sub],
                ret_y: row_y[(b + 1) * sub] - row_y[b * sub],
                sigma_x,
                sigma_y,
                rho,
                phi: if valid { rho * sigma_x / sigma_y } else { f64::NAN },
                phi_bar: f64::NAN,
                valid,
            });
        }
        let rho_sc = if rho_count > 0 {
            rho_sum / rho_count as f64
        } else {
            f64::NAN
        };
        rho_sc_daily.push(rho_sc);
        for bin in bins[day_start..].iter_mut() {
            if bin.valid {
                if rho_sc.is_nan() {
                    bin.valid = false;
                } else {
                    bin.phi_bar = rho_sc * bin.sigma_x / bin.sigma_y;
                    any_valid = true;
                }
            }
        }
    }

    if !any_valid {
        return Err(Error::NoValidBins);
    }
    Ok(HedgeSeries {
        bins_per_day: HEDGE_BINS_PER_DAY,
        bins,
        rho_sc_daily,
    })
}

impl HedgeSeries {
    /// `var(dX - phi dY) / var(dX - phi_bar dY)` over all valid bins.
    pub fn variance_ratio(&self) -> Result<f64> {
        let adaptive: Vec<f64> = self
            .bins
            .iter()
            .filter(|b| b.valid)
            .map(|b| b.ret_x - b.phi * b.ret_y)
            .collect();
        let daily: Vec<f64> = self
            .bins
            .iter()
            .filter(|b| b.valid)
            .map(|b| b.ret_x - b.phi_bar * b.ret_y)
            .collect();
        if adaptive.len() < 2 {
            return Err(Error::NoValidBins);
        }
        let denom = sample_variance(&daily);
        if denom == 0.0 {
            return Err(Error::ZeroHedgeDenominator);
        }
        Ok(sample_variance(&adaptive) / denom)
    }

    pub fn write_csv(&self, path: &std::path::Path, meta: &serde_json::Value) -> Result<()> {
        use std::io::Write;
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "# meta: {}", serde_json::to_string(meta)?)?;
        writeln!(
            file,
            "day,bin,ret_x,ret_y,sigma_x,sigma_y,rho,phi,phi_bar,valid"
        )?;
        for b in &self.bins {
            writeln!(
                file,
                "{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}",
                b.day + 1,
                b.bin + 1,
                b.ret_x,
                b.ret_y,
                b.sigma_x,
                b.sigma_y,
                b.rho,
                b.phi,
                b.phi_bar,
                b.valid as u8
            )?;
        }
        Ok(())
    }
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}
