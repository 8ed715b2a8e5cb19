//! Localized bipower variation, jump truncation thresholds, and block
//! realized covariance matrices.
//!
//! Each trading day is split into `m = n/k_n` blocks of `k_n` log-price
//! increments. Per block we estimate the spot covariance matrix by the
//! realized covariance of the increments, discarding increment pairs where
//! either asset moves beyond a bipower-based threshold (jump truncation). The
//! indicator is joint: one indicator gates the whole outer product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::IncrementPanel;

/// Block layout: `n` intraday intervals, `k_n` increments per block,
/// `m = n/k_n` blocks per day with left endpoints `tau_j = (j-1)/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub n: usize,
    pub k_n: usize,
    pub m: usize,
}

impl BlockSpec {
    pub fn new(n: usize, k_n: usize) -> Result<Self> {
        if k_n < 2 {
            return Err(Error::InvalidConfig(
                "k_n must be >= 2 (bipower variation needs adjacent pairs)".into(),
            ));
        }
        if !n.is_multiple_of(k_n) {
            return Err(Error::InvalidConfig(format!(
                "k_n = {k_n} must divide n = {n}"
            )));
        }
        let m = n / k_n;
        if m < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 blocks per day, got m = {m}"
            )));
        }
        Ok(BlockSpec { n, k_n, m })
    }

    /// Left endpoint of block `j` (0-based) as a fraction of the day.
    pub fn tau(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    /// Midpoint of block `j` (0-based); used for plotting and oracle grids.
    pub fn midpoint(&self, j: usize) -> f64 {
        (j as f64 + 0.5) / self.m as f64
    }

    /// Block index (0-based) owning increment `i` (0-based).
    pub fn block_of(&self, i: usize) -> usize {
        i / self.k_n
    }
}

/// Threshold convention for the jump indicator.
///
/// `Simulation` flags an increment as jump-contaminated when the
/// `sqrt(n)`-scaled move exceeds `q * sqrt(BV) * n^(0.5 - varpi)`, i.e. about
/// `q` diffusive standard deviations. `Theory` keeps the alternative
/// convention with a threshold linear in BV. `Off` disables truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Simulation,
    Theory,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub q: f64,
    pub varpi: f64,
    pub mode: ThresholdMode,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            q: 5.0,
            varpi: 0.49,
            mode: ThresholdMode::Simulation,
        }
    }
}

impl TruncationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0) {
            return Err(Error::InvalidConfig("truncation scale q must be > 0".into()));
        }
        if !(self.varpi > 0.0 && self.varpi < 0.5) {
            return Err(Error::InvalidConfig("varpi must lie in (0, 0.5)".into()));
        }
        Ok(())
    }

    /// No truncation; thresholds become infinite.
    pub fn off() -> Self {
        TruncationConfig {
            mode: ThresholdMode::Off,
            ..TruncationConfig::default()
        }
    }
}

/// Symmetric 2x2 covariance triple `(c^X, c^XY, c^Y)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CovTriple {
    pub x: f64,
    pub xy: f64,
    pub y: f64,
}

impl std::ops::Add for CovTriple {
    type Output = CovTriple;

    fn add(self, o: CovTriple) -> CovTriple {
        CovTriple {
            x: self.x + o.x,
            xy: self.xy + o.xy,
            y: self.y + o.y,
        }
    }
}

impl std::ops::Sub for CovTriple {
    type Output = CovTriple;

    fn sub(self, o: CovTriple) -> CovTriple {
        CovTriple {
            x: self.x - o.x,
            xy: self.xy - o.xy,
            y: self.y - o.y,
        }
    }
}

impl CovTriple {
    pub fn scale(self, s: f64) -> CovTriple {
        CovTriple {
            x: self.x * s,
            xy: self.xy * s,
            y: self.y * s,
        }
    }

    /// Entrywise (Hadamard) division.
    pub fn hadamard_div(self, o: CovTriple) -> CovTriple {
        CovTriple {
            x: self.x / o.x,
            xy: self.xy / o.xy,
            y: self.y / o.y,
        }
    }

    /// Smallest eigenvalue of the implied symmetric 2x2 matrix.
    pub fn min_eigenvalue(self) -> f64 {
        let tr = self.x + self.y;
        let det = self.x * self.y - self.xy * self.xy;
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        0.5 * (tr - disc)
    }

    /// Implied correlation; `None` unless both diagonals are positive.
    pub fn correlation(self) -> Option<f64> {
        if self.x > 0.0 && self.y > 0.0 {
            Some(self.xy / (self.x.sqrt() * self.y.sqrt()))
        } else {
            None
        }
    }
}

/// Per-day, per-block truncated realized covariance matrices plus the
/// thresholds and truncation counts that produced them.
#[derive(Debug, Clone)]
pub struct SpotCovariancePanel {
    pub spec: BlockSpec,
    /// `T * m` triples, day-major.
    pub blocks: Vec<CovTriple>,
    /// Per-block thresholds in `sqrt(n)`-scaled units `(v^X, v^Y)`.
    pub thresholds: Vec<(f64, f64)>,
    /// Per-block bipower variation `(BV^X, BV^Y)`.
    pub bipower: Vec<(f64, f64)>,
    /// Increments removed by the joint indicator per block.
    pub truncated_joint: Vec<u32>,
    /// Increments that individually breach the X (resp. Y) threshold.
    pub truncated_x: Vec<u32>,
    pub truncated_y: Vec<u32>,
    days: usize,
}

impl SpotCovariancePanel {
    /// Build a panel directly from per-day block triples, with infinite
    /// thresholds and zero truncation counts. Useful for synthetic panels in
    /// oracles and tests.
    pub fn from_triples(spec: BlockSpec, days: Vec<Vec<CovTriple>>) -> SpotCovariancePanel {
        let t = days.len();
        let blocks: Vec<CovTriple> = days.into_iter().flatten().collect();
        assert_eq!(blocks.len(), t * spec.m, "triple layout mismatch");
        let cells = blocks.len();
        SpotCovariancePanel {
            spec,
            blocks,
            thresholds: vec![(f64::INFINITY, f64::INFINITY); cells],
            bipower: vec![(0.0, 0.0); cells],
            truncated_joint: vec![0; cells],
            truncated_x: vec![0; cells],
            truncated_y: vec![0; cells],
            days: t,
        }
    }

    pub fn days(&self) -> usize {
        self.days
    }

    #[inline]
    pub fn idx(&self, t: usize, j: usize) -> usize {
        t * self.spec.m + j
    }

    #[inline]
    pub fn triple(&self, t: usize, j: usize) -> CovTriple {
        self.blocks[self.idx(t, j)]
    }

    pub fn write_csv(&self, path: &std::path::Path, meta: &serde_json::Value) -> Result<()> {
        use std::io::Write;
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "# meta: {}", serde_json::to_string(meta)?)?;
        writeln!(
            file,
            "day,block,tau,c_x,c_xy,c_y,threshold_x,threshold_y,bv_x,bv_y,truncated_joint,truncated_x,truncated_y"
        )?;
        for t in 0..self.days {
            for j in 0..self.spec.m {
                let k = self.idx(t, j);
                let c = self.blocks[k];
                writeln!(
                    file,
                    "{},{},{:.6},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{}",
                    t + 1,
                    j + 1,
                    self.spec.tau(j),
                    c.x,
                    c.xy,
                    c.y,
                    self.thresholds[k].0,
                    self.thresholds[k].1,
                    self.bipower[k].0,
                    self.bipower[k].1,
                    self.truncated_joint[k],
                    self.truncated_x[k],
                    self.truncated_y[k],
                )?;
            }
        }
        Ok(())
    }
}

/// Localized bipower variation of one block of raw returns:
/// `(pi/2) * (1/(k_n - 1)) * sum |sqrt(n) r_(l-1)| * |sqrt(n) r_l|`.
pub fn block_bipower(block: &[f64], n: usize) -> f64 {
    debug_assert!(block.len() >= 2);
    let k = block.len();
    let sum: f64 = block.windows(2).map(|w| (w[0] * w[1]).abs()).sum();
    std::f64::consts::FRAC_PI_2 * n as f64 / (k - 1) as f64 * sum
}

/// Truncation threshold for the `sqrt(n)`-scaled increment of one block.
pub fn block_threshold(bv: f64, cfg: &TruncationConfig, n: usize) -> f64 {
    debug_assert!(bv >= 0.0);
    match cfg.mode {
        ThresholdMode::Simulation => cfg.q * bv.sqrt() * (n as f64).powf(0.5 - cfg.varpi),
        ThresholdMode::Theory => cfg.q * bv * (n as f64).powf(0.5 - cfg.varpi),
        ThresholdMode::Off => f64::INFINITY,
    }
}

/// Jump-truncated realized covariance of one block:
/// `(n/k_n) * sum (dZ)(dZ)^T 1{ |sqrt(n) dX| <= vx and |sqrt(n) dY| <= vy }`.
///
/// Returns the triple together with the number of increments removed by the
/// joint indicator.
pub fn block_truncated_covariance(
    block_x: &[f64],
    block_y: &[f64],
    vx: f64,
    vy: f64,
    n: usize,
) -> (CovTriple, u32) {
    debug_assert_eq!(block_x.len(), block_y.len());
    let k = block_x.len();
    let sqrt_n = (n as f64).sqrt();
    let mut acc = CovTriple::default();
    let mut dropped = 0u32;
    for (&dx, &dy) in block_x.iter().zip(block_y) {
        if (sqrt_n * dx).abs() <= vx && (sqrt_n * dy).abs() <= vy {
            acc.x += dx * dx;
            acc.xy += dx * dy;
            acc.y += dy * dy;
        } else {
            dropped += 1;
        }
    }
    (acc.scale(n as f64 / k as f64), dropped)
}

/// Assemble the full `T x m` truncated covariance panel.
pub fn spot_covariance_panel(
    inc: &IncrementPanel,
    spec: BlockSpec,
    cfg: &TruncationConfig,
) -> Result<SpotCovariancePanel> {
    if cfg.mode != ThresholdMode::Off {
        cfg.validate()?;
    }
    if inc.n != spec.n {
        return Err(Error::SpecMismatch(format!(
            "increment panel has n = {}, block spec expects {}",
            inc.n, spec.n
        )));
    }
    let days = inc.days();
    let m = spec.m;
    let k = spec.k_n;
    let sqrt_n = (spec.n as f64).sqrt();

    let cells = days * m;
    let mut panel = SpotCovariancePanel {
        spec,
        blocks: vec![CovTriple::default(); cells],
        thresholds: vec![(0.0, 0.0); cells],
        bipower: vec![(0.0, 0.0); cells],
        truncated_joint: vec![0; cells],
        truncated_x: vec![0; cells],
        truncated_y: vec![0; cells],
        days,
    };

    for t in 0..days {
        let row_x = inc.x.row(t);
        let row_y = inc.y.row(t);
        for j in 0..m {
            let bx = &row_x[j * k..(j + 1) * k];
            let by = &row_y[j * k..(j + 1) * k];
            let bv_x = block_bipower(bx, spec.n);
            let bv_y = block_bipower(by, spec.n);
            let vx = block_threshold(bv_x, cfg, spec.n);
            let vy = block_threshold(bv_y, cfg, spec.n);
            let (triple, dropped) = block_truncated_covariance(bx, by, vx, vy, spec.n);
            let idx = t * m + j;
            panel.blocks[idx] = triple;
            panel.thresholds[idx] = (vx, vy);
            panel.bipower[idx] = (bv_x, bv_y);
            panel.truncated_joint[idx] = dropped;
            panel.truncated_x[idx] = bx.iter().filter(|&&v| (sqrt_n * v).abs() > vx).count() as u32;
            panel.truncated_y[idx] = by.iter().filter(|&&v| (sqrt_n * v).abs() > vy).count() as u32;
        }
    }
    Ok(panel)
}

/// Daily truncated sums `(RV^X_t, RCV^XY_t, RV^Y_t)`.
///
/// `RV^X` gates each squared increment by its own block's X threshold only;
/// the cross term uses the joint indicator. Increment `i` uses the thresholds
/// of the block that contains it.
#[derive(Debug, Clone)]
pub struct DailyTruncatedRv {
    pub rv_x: Vec<f64>,
    pub rcv_xy: Vec<f64>,
    pub rv_y: Vec<f64>,
}

pub fn daily_truncated_rv(inc: &IncrementPanel, panel: &SpotCovariancePanel) -> DailyTruncatedRv {
    let days = inc.days();
    let spec = panel.spec;
    let sqrt_n = (spec.n as f64).sqrt();
    let mut out = DailyTruncatedRv {
        rv_x: vec![0.0; days],
        rcv_xy: vec![0.0; days],
        rv_y: vec![0.0; days],
    };
    for t in 0..days {
        let row_x = inc.x.row(t);
        let row_y = inc.y.row(t);
        let mut rvx = 0.0;
        let mut rxy = 0.0;
        let mut rvy = 0.0;
        for i in 0..spec.n {
            let (vx, vy) = panel.thresholds[panel.idx(t, spec.block_of(i))];
            let keep_x = (sqrt_n * row_x[i]).abs() <= vx;
            let keep_y = (sqrt_n * row_y[i]).abs() <= vy;
            if keep_x {
                rvx += row_x[i] * row_x[i];
            }
            if keep_y {
                rvy += row_y[i] * row_y[i];
            }
            if keep_x && keep_y {
                rxy += row_x[i] * row_y[i];
            }
        }
        out.rv_x[t] = rvx;
        out.rcv_xy[t] = rxy;
        out.rv_y[t] = rvy;
    }
    out
}
