//! Bivariate jump-diffusion simulator with known diurnal volatility and
//! correlation components.
//!
//! Per fine Euler step of size `dt`: square-root (Heston-type) stochastic
//! variance per asset with a leverage pairing to the price noise, a bounded
//! stochastic correlation diffusion, deterministic V-shaped diurnal
//! volatility and affine diurnal correlation factors, and compound Poisson
//! jumps per asset. Variance is floored at zero inside the diffusion
//! coefficient and the correlation state is clipped into the open unit
//! interval after every step (full truncation).
//!
//! The coarse observed panel is an exact subsample of the fine path: coarse
//! increments equal sums of fine increments bit for bit.

use rand::Rng;
use rand_distr::{Beta, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::market_data::LogPricePanel;
use crate::seeding;
use crate::spot::{BlockSpec, CovTriple};

pub const BASE_STEPS_PER_DAY: usize = 23_400;

/// Square-root stochastic variance parameters (one copy per asset).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HestonConfig {
    pub mean_reversion: f64,
    pub mean_level: f64,
    pub vol_of_vol: f64,
    /// Correlation between an asset's price noise and its variance noise.
    pub leverage: f64,
}

impl Default for HestonConfig {
    fn default() -> Self {
        HestonConfig {
            mean_reversion: 0.05,
            mean_level: 1.0,
            vol_of_vol: 0.2,
            leverage: -(0.5f64.sqrt()),
        }
    }
}

/// V-shaped diurnal volatility factor `sigma_u(tau) = sqrt(base + slope |tau - 1/2|)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VolCurveConfig {
    pub base: f64,
    pub slope: f64,
}

impl Default for VolCurveConfig {
    fn default() -> Self {
        VolCurveConfig {
            base: 0.5,
            slope: 2.0,
        }
    }
}

/// Bounded correlation diffusion
/// `d rho = (1 - rho^2) [kappa (mean - rho) dt + vol dB]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrSdeConfig {
    pub kappa: f64,
    pub mean: f64,
    pub vol: f64,
}

impl Default for CorrSdeConfig {
    fn default() -> Self {
        CorrSdeConfig {
            kappa: 1.5,
            mean: 0.6,
            vol: 0.3,
        }
    }
}

impl CorrSdeConfig {
    /// The state stays inside `(-1, 1)` when `kappa > vol^2 / (1 +- mean)`.
    pub fn feller_ok(&self) -> bool {
        let s2 = self.vol * self.vol;
        self.kappa > s2 / (1.0 + self.mean) && self.kappa > s2 / (1.0 - self.mean)
    }
}

/// Compound Poisson jumps: `intensity` arrivals per day per asset with
/// centered Gaussian sizes tuned so jumps contribute `variance_share` of the
/// quadratic variation when the diffusive variance averages `base_variance`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JumpConfig {
    pub intensity: f64,
    pub variance_share: f64,
    pub base_variance: f64,
}

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig {
            intensity: 0.2,
            variance_share: 0.1,
            base_variance: 1.0,
        }
    }
}

impl JumpConfig {
    pub fn size_sigma(&self) -> f64 {
        if self.intensity == 0.0 {
            return 0.0;
        }
        ((1.0 / self.intensity) * (self.variance_share / (1.0 - self.variance_share))
            * self.base_variance)
            .sqrt()
    }

    pub fn none() -> Self {
        JumpConfig {
            intensity: 0.0,
            ..JumpConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Observed intraday intervals per day.
    pub n: usize,
    pub t_days: usize,
    /// Fine Euler steps per day; must be a multiple of `n`.
    pub steps_per_day: usize,
    pub heston: HestonConfig,
    pub vol_curve: VolCurveConfig,
    /// Intercept `a` of the diurnal correlation line; slope is `2(1 - a)`.
    pub corr_intercept: f64,
    pub corr_sde: CorrSdeConfig,
    pub jumps: JumpConfig,
    #[serde(default)]
    pub record_latent: bool,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, t_days: usize, corr_intercept: f64, seed: u64) -> Self {
        SimConfig {
            n,
            t_days,
            steps_per_day: BASE_STEPS_PER_DAY,
            heston: HestonConfig::default(),
            vol_curve: VolCurveConfig::default(),
            corr_intercept,
            corr_sde: CorrSdeConfig::default(),
            jumps: JumpConfig::default(),
            record_latent: false,
            seed,
        }
    }

    pub fn corr_slope(&self) -> f64 {
        2.0 * (1.0 - self.corr_intercept)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.t_days == 0 {
            return Err(Error::InvalidConfig("n and T must be positive".into()));
        }
        if !self.steps_per_day.is_multiple_of(self.n) {
            return Err(Error::InvalidConfig(format!(
                "steps_per_day = {} must be a multiple of n = {}",
                self.steps_per_day, self.n
            )));
        }
        if !(self.corr_intercept > 0.0 && self.corr_intercept <= 1.0) {
            return Err(Error::InvalidConfig(
                "corr intercept a must lie in (0, 1]".into(),
            ));
        }
        if !(self.vol_curve.base > 0.0) || self.vol_curve.slope < 0.0 {
            return Err(Error::InvalidConfig(
                "vol curve needs base > 0 and slope >= 0".into(),
            ));
        }
        if self.heston.mean_reversion < 0.0
            || self.heston.mean_level < 0.0
            || self.heston.vol_of_vol < 0.0
            || self.heston.leverage.abs() > 1.0
        {
            return Err(Error::InvalidConfig("bad variance parameters".into()));
        }
        if self.corr_sde.mean.abs() >= 1.0 {
            return Err(Error::InvalidConfig(
                "correlation mean must lie in (-1, 1)".into(),
            ));
        }
        if self.corr_sde.vol > 0.0 && !self.corr_sde.feller_ok() {
            return Err(Error::Feller(format!(
                "kappa = {} must exceed vol^2/(1 +- mean) = {}",
                self.corr_sde.kappa,
                (self.corr_sde.vol * self.corr_sde.vol) / (1.0 - self.corr_sde.mean.abs())
            )));
        }
        if self.jumps.intensity < 0.0
            || !(0.0..1.0).contains(&self.jumps.variance_share)
            || !(self.jumps.base_variance > 0.0)
        {
            return Err(Error::InvalidConfig("bad jump parameters".into()));
        }
        Ok(())
    }
}

/// `sigma_u(tau) = sqrt(base + slope * |tau - 1/2|)` for `tau` in `[0, 1)`.
pub fn diurnal_vol(tau: f64, curve: &VolCurveConfig) -> f64 {
    (curve.base + curve.slope * (tau - 0.5).abs()).sqrt()
}

/// `rho_u(tau) = a + 2(1 - a) tau`; integrates to one for any `a`.
pub fn diurnal_corr(tau: f64, intercept: f64) -> f64 {
    intercept + 2.0 * (1.0 - intercept) * tau
}

/// Stationary density of the correlation diffusion on `(-1, 1)`:
/// `f(x) ∝ (1 + x)^(p + q) (1 - x)^(p - q)` with `p = (kappa - 2 vol^2)/vol^2`
/// and `q = kappa mean / vol^2`, normalized so it integrates to one.
pub fn stationary_correlation_pdf(x: f64, sde: &CorrSdeConfig) -> f64 {
    if x <= -1.0 || x >= 1.0 {
        return 0.0;
    }
    let s2 = sde.vol * sde.vol;
    let p = (sde.kappa - 2.0 * s2) / s2;
    let q = sde.kappa * sde.mean / s2;
    // Change of variable y = (1 + x)/2 maps the density onto a Beta law.
    let alpha = p + q + 1.0;
    let beta = p - q + 1.0;
    let y = 0.5 * (1.0 + x);
    let ln_pdf = (alpha - 1.0) * y.ln() + (beta - 1.0) * (1.0 - y).ln()
        - statrs::function::beta::ln_beta(alpha, beta);
    0.5 * ln_pdf.exp()
}

/// Draw from the stationary law via the Beta representation. With `vol = 0`
/// the diffusion is deterministic and the draw collapses to `mean`.
pub fn sample_stationary_correlation<R: Rng + ?Sized>(
    sde: &CorrSdeConfig,
    rng: &mut R,
) -> Result<f64> {
    if sde.vol == 0.0 {
        return Ok(sde.mean);
    }
    if !sde.feller_ok() {
        return Err(Error::Feller(
            "stationary distribution undefined without the Feller-type condition".into(),
        ));
    }
    let s2 = sde.vol * sde.vol;
    let p = (sde.kappa - 2.0 * s2) / s2;
    let q = sde.kappa * sde.mean / s2;
    let beta = Beta::new(p + q + 1.0, p - q + 1.0)
        .map_err(|e| Error::InvalidConfig(format!("beta parameters: {e}")))?;
    Ok(2.0 * beta.sample(rng) - 1.0)
}

/// A price jump inserted into one asset's path.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpEvent {
    /// 0 for X, 1 for Y.
    pub asset: u8,
    pub day: usize,
    /// Position within the day as a fraction in `[0, 1)`.
    pub time: f64,
    pub size: f64,
}

/// Fine-grid latent records, kept only when `record_latent` is set.
#[derive(Debug, Clone)]
pub struct LatentPaths {
    pub steps_per_day: usize,
    /// Log prices on the fine grid, `T * steps + 1` points.
    pub log_x: Vec<f64>,
    pub log_y: Vec<f64>,
    /// Per fine step (left endpoint): total spot volatilities and correlations.
    pub sigma_x: Vec<f64>,
    pub sigma_y: Vec<f64>,
    pub rho_sc: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub panel: LogPricePanel,
    /// Per-day diffusive quadratic variation, per asset.
    pub qv_diffusive_x: Vec<f64>,
    pub qv_diffusive_y: Vec<f64>,
    /// Per-day squared jump sizes, per asset.
    pub qv_jump_x: Vec<f64>,
    pub qv_jump_y: Vec<f64>,
    pub jump_count_x: Vec<u32>,
    pub jump_count_y: Vec<u32>,
    pub jumps: Vec<JumpEvent>,
    pub initial_rho_sc: f64,
    pub latent: Option<LatentPaths>,
}

impl SimOutput {
    /// Pooled share of jump variation in total quadratic variation across
    /// days and assets.
    pub fn jump_qv_share(&self) -> f64 {
        let jump: f64 = self.qv_jump_x.iter().chain(&self.qv_jump_y).sum();
        let diff: f64 = self.qv_diffusive_x.iter().chain(&self.qv_diffusive_y).sum();
        jump / (jump + diff)
    }

    /// Block averages of the latent spot covariance, `m * integral` over each
    /// block, for estimator-versus-truth oracles. Requires latent records.
    pub fn latent_block_integrals(&self, spec: BlockSpec) -> Option<Vec<Vec<CovTriple>>> {
        let latent = self.latent.as_ref()?;
        let steps = latent.steps_per_day;
        let days = self.panel.days();
        let per_block = steps / spec.m;
        let dt = 1.0 / steps as f64;
        let mut out = Vec::with_capacity(days);
        for t in 0..days {
            let mut day = Vec::with_capacity(spec.m);
            for j in 0..spec.m {
                let mut acc = CovTriple::default();
                for s in 0..per_block {
                    let idx = t * steps + j * per_block + s;
                    let sx = latent.sigma_x[idx];
                    let sy = latent.sigma_y[idx];
                    let rho = latent.rho[idx];
                    acc.x += sx * sx * dt;
                    acc.xy += sx * sy * rho * dt;
                    acc.y += sy * sy * dt;
                }
                day.push(acc.scale(spec.m as f64));
            }
            out.push(day);
        }
        Some(out)
    }

    /// Write the latent records to CSV for diagnostics.
    pub fn write_latent_csv(&self, path: &std::path::Path, meta: &serde_json::Value) -> Result<()> {
        use std::io::Write;
        let latent = self
            .latent
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("latent records were not kept".into()))?;
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "# meta: {}", serde_json::to_string(meta)?)?;
        writeln!(file, "day,step,tau,sigma_x,sigma_y,rho_sc,rho,log_x,log_y")?;
        let steps = latent.steps_per_day;
        for t in 0..self.panel.days() {
            for s in 0..steps {
                let idx = t * steps + s;
                writeln!(
                    file,
                    "{},{},{:.8},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                    t + 1,
                    s,
                    s as f64 / steps as f64,
                    latent.sigma_x[idx],
                    latent.sigma_y[idx],
                    latent.rho_sc[idx],
                    latent.rho[idx],
                    latent.log_x[idx],
                    latent.log_y[idx],
                )?;
            }
        }
        Ok(())
    }
}

const RHO_CLIP: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, Copy)]
struct PathState {
    cx: f64,
    cy: f64,
    rho_sc: f64,
    log_x: f64,
    log_y: f64,
}

#[derive(Debug, Clone, Copy)]
struct StepRecord {
    sigma_x: f64,
    sigma_y: f64,
    rho: f64,
}

/// One Euler step over `dt` starting at intraday position `tau`, driven by
/// five standard normals. Returns the left-endpoint spot quantities.
#[inline]
fn euler_step(
    cfg: &SimConfig,
    state: &mut PathState,
    tau: f64,
    dt: f64,
    z: [f64; 5],
) -> StepRecord {
    let sqdt = dt.sqrt();
    let [zx, zy, zbx, zby, zr] = z;

    let su = diurnal_vol(tau, &cfg.vol_curve);
    let sigma_x = su * state.cx.max(0.0).sqrt();
    let sigma_y = su * state.cy.max(0.0).sqrt();
    let rho_u = diurnal_corr(tau, cfg.corr_intercept);
    let rho = (rho_u * state.rho_sc).clamp(-RHO_CLIP, RHO_CLIP);

    // Price increments with the current (left-endpoint) state.
    state.log_x += sigma_x * sqdt * zx;
    state.log_y += sigma_y * (rho * sqdt * zx + (1.0 - rho * rho).sqrt() * sqdt * zy);

    // Variance noise with leverage pairing to the own-price noise.
    let h = &cfg.heston;
    let db_x = sqdt * (h.leverage * zx + (1.0 - h.leverage * h.leverage).sqrt() * zbx);
    let db_y = sqdt * (h.leverage * zy + (1.0 - h.leverage * h.leverage).sqrt() * zby);
    state.cx += h.mean_reversion * (h.mean_level - state.cx) * dt
        + h.vol_of_vol * state.cx.max(0.0).sqrt() * db_x;
    state.cy += h.mean_reversion * (h.mean_level - state.cy) * dt
        + h.vol_of_vol * state.cy.max(0.0).sqrt() * db_y;

    // Bounded correlation diffusion, clipped into (-1, 1) after the step.
    let s = &cfg.corr_sde;
    let one_minus = 1.0 - state.rho_sc * state.rho_sc;
    state.rho_sc += one_minus * (s.kappa * (s.mean - state.rho_sc) * dt + s.vol * sqdt * zr);
    state.rho_sc = state.rho_sc.clamp(-RHO_CLIP, RHO_CLIP);

    StepRecord {
        sigma_x,
        sigma_y,
        rho,
    }
}

/// Jump arrivals for one asset over one day.
fn draw_day_jumps<R: Rng + ?Sized>(
    rng: &mut R,
    intensity: f64,
    size_sigma: f64,
) -> Vec<(f64, f64)> {
    if intensity == 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(intensity).expect("positive intensity").sample(rng) as usize;
    (0..count)
        .map(|_| {
            let time: f64 = rng.random::<f64>();
            let z: f64 = StandardNormal.sample(rng);
            (time, size_sigma * z)
        })
        .collect()
}

/// Simulate the panel at the configured fine step; seeds and output are
/// deterministic functions of the configuration.
pub fn simulate_paths(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let mut rng = seeding::rng_from(cfg.seed);
    let steps = cfg.steps_per_day;
    let per_obs = steps / cfg.n;
    let days = cfg.t_days;
    let size_sigma = cfg.jumps.size_sigma();

    let rho_sc0 = sample_stationary_correlation(&cfg.corr_sde, &mut rng)?;
    let mut state = PathState {
        cx: cfg.heston.mean_level,
        cy: cfg.heston.mean_level,
        rho_sc: rho_sc0,
        log_x: 0.0,
        log_y: 0.0,
    };

    let dt = 1.0 / steps as f64;
    let mut panel_x = Grid::zeros(days, cfg.n + 1);
    let mut panel_y = Grid::zeros(days, cfg.n + 1);
    let mut out = SimOutput {
        panel: LogPricePanel {
            n: cfg.n,
            dates: vec![String::new(); days],
            x: Grid::zeros(0, 0),
            y: Grid::zeros(0, 0),
        },
        qv_diffusive_x: vec![0.0; days],
        qv_diffusive_y: vec![0.0; days],
        qv_jump_x: vec![0.0; days],
        qv_jump_y: vec![0.0; days],
        jump_count_x: vec![0; days],
        jump_count_y: vec![0; days],
        jumps: Vec::new(),
        initial_rho_sc: rho_sc0,
        latent: None,
    };
    let mut latent = if cfg.record_latent {
        Some(LatentPaths {
            steps_per_day: steps,
            log_x: Vec::with_capacity(days * steps + 1),
            log_y: Vec::with_capacity(days * steps + 1),
            sigma_x: Vec::with_capacity(days * steps),
            sigma_y: Vec::with_capacity(days * steps),
            rho_sc: Vec::with_capacity(days * steps),
            rho: Vec::with_capacity(days * steps),
        })
    } else {
        None
    };
    if let Some(l) = latent.as_mut() {
        l.log_x.push(state.log_x);
        l.log_y.push(state.log_y);
    }

    for t in 0..days {
        // Jump times and sizes for the day, bucketed by fine step.
        let mut jump_at_x = vec![0.0f64; 0];
        let mut jump_at_y = vec![0.0f64; 0];
        let jumps_x = draw_day_jumps(&mut rng, cfg.jumps.intensity, size_sigma);
        let jumps_y = draw_day_jumps(&mut rng, cfg.jumps.intensity, size_sigma);
        if !jumps_x.is_empty() || !jumps_y.is_empty() {
            jump_at_x = vec![0.0; steps];
            jump_at_y = vec![0.0; steps];
            for &(time, size) in &jumps_x {
                let s = ((time * steps as f64) as usize).min(steps - 1);
                jump_at_x[s] += size;
                out.qv_jump_x[t] += size * size;
                out.jump_count_x[t] += 1;
                out.jumps.push(JumpEvent {
                    asset: 0,
                    day: t,
                    time,
                    size,
                });
            }
            for &(time, size) in &jumps_y {
                let s = ((time * steps as f64) as usize).min(steps - 1);
                jump_at_y[s] += size;
                out.qv_jump_y[t] += size * size;
                out.jump_count_y[t] += 1;
                out.jumps.push(JumpEvent {
                    asset: 1,
                    day: t,
                    time,
                    size,
                });
            }
        }

        panel_x.set(t, 0, state.log_x);
        panel_y.set(t, 0, state.log_y);
        for s in 0..steps {
            let z: [f64; 5] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let tau = s as f64 * dt;
            let rec = euler_step(cfg, &mut state, tau, dt, z);
            if !jump_at_x.is_empty() {
                state.log_x += jump_at_x[s];
                state.log_y += jump_at_y[s];
            }
            out.qv_diffusive_x[t] += rec.sigma_x * rec.sigma_x * dt;
            out.qv_diffusive_y[t] += rec.sigma_y * rec.sigma_y * dt;
            if let Some(l) = latent.as_mut() {
                l.sigma_x.push(rec.sigma_x);
                l.sigma_y.push(rec.sigma_y);
                l.rho_sc.push(state.rho_sc);
                l.rho.push(rec.rho);
                l.log_x.push(state.log_x);
                l.log_y.push(state.log_y);
            }
            if (s + 1).is_multiple_of(per_obs) {
                let i = (s + 1) / per_obs;
                panel_x.set(t, i, state.log_x);
                panel_y.set(t, i, state.log_y);
            }
        }
    }

    out.panel = LogPricePanel {
        n: cfg.n,
        dates: vec![String::new(); days],
        x: panel_x,
        y: panel_y,
    };
    out.latent = latent;
    Ok(out)
}

/// Simulate the same randomness under two Euler step sizes: the scheme at
/// `cfg.steps_per_day` and a refinement with `refine` times more steps. The
/// Brownian increments of the coarse scheme are the aggregated fine normals,
/// and jump draws are shared, so any difference between the two outputs is
/// pure discretization effect.
pub fn simulate_refined_pair(cfg: &SimConfig, refine: usize) -> Result<(SimOutput, SimOutput)> {
    cfg.validate()?;
    if refine < 1 {
        return Err(Error::InvalidConfig("refine must be >= 1".into()));
    }
    let mut fine_cfg = cfg.clone();
    fine_cfg.steps_per_day = cfg.steps_per_day * refine;
    fine_cfg.validate()?;

    let mut rng = seeding::rng_from(cfg.seed);
    let steps_c = cfg.steps_per_day;
    let steps_f = steps_c * refine;
    let per_obs_c = steps_c / cfg.n;
    let days = cfg.t_days;
    let size_sigma = cfg.jumps.size_sigma();
    let dt_c = 1.0 / steps_c as f64;
    let dt_f = 1.0 / steps_f as f64;
    let agg = 1.0 / (refine as f64).sqrt();

    let rho_sc0 = sample_stationary_correlation(&cfg.corr_sde, &mut rng)?;
    let init = PathState {
        cx: cfg.heston.mean_level,
        cy: cfg.heston.mean_level,
        rho_sc: rho_sc0,
        log_x: 0.0,
        log_y: 0.0,
    };
    let mut state_c = init;
    let mut state_f = init;

    let make_output = |n: usize| SimOutput {
        panel: LogPricePanel {
            n,
            dates: vec![String::new(); days],
            x: Grid::zeros(days, n + 1),
            y: Grid::zeros(days, n + 1),
        },
        qv_diffusive_x: vec![0.0; days],
        qv_diffusive_y: vec![0.0; days],
        qv_jump_x: vec![0.0; days],
        qv_jump_y: vec![0.0; days],
        jump_count_x: vec![0; days],
        jump_count_y: vec![0; days],
        jumps: Vec::new(),
        initial_rho_sc: rho_sc0,
        latent: None,
    };
    let mut out_c = make_output(cfg.n);
    let mut out_f = make_output(cfg.n);

    for t in 0..days {
        let jumps_x = draw_day_jumps(&mut rng, cfg.jumps.intensity, size_sigma);
        let jumps_y = draw_day_jumps(&mut rng, cfg.jumps.intensity, size_sigma);
        let mut jump_c_x = vec![0.0f64; steps_c];
        let mut jump_c_y = vec![0.0f64; steps_c];
        let mut jump_f_x = vec![0.0f64; steps_f];
        let mut jump_f_y = vec![0.0f64; steps_f];
        for (events, cx, fx, qc, qf, nc, nf, asset) in [
            (
                &jumps_x,
                &mut jump_c_x,
                &mut jump_f_x,
                &mut out_c.qv_jump_x[t],
                &mut out_f.qv_jump_x[t],
                &mut out_c.jump_count_x[t],
                &mut out_f.jump_count_x[t],
                0u8,
            ),
            (
                &jumps_y,
                &mut jump_c_y,
                &mut jump_f_y,
                &mut out_c.qv_jump_y[t],
                &mut out_f.qv_jump_y[t],
                &mut out_c.jump_count_y[t],
                &mut out_f.jump_count_y[t],
                1u8,
            ),
        ] {
            for &(time, size) in events {
                cx[((time * steps_c as f64) as usize).min(steps_c - 1)] += size;
                fx[((time * steps_f as f64) as usize).min(steps_f - 1)] += size;
                *qc += size * size;
                *qf += size * size;
                *nc += 1;
                *nf += 1;
                let ev = JumpEvent {
                    asset,
                    day: t,
                    time,
                    size,
                };
                out_c.jumps.push(ev);
                out_f.jumps.push(ev);
            }
        }

        out_c.panel.x.set(t, 0, state_c.log_x);
        out_c.panel.y.set(t, 0, state_c.log_y);
        out_f.panel.x.set(t, 0, state_f.log_x);
        out_f.panel.y.set(t, 0, state_f.log_y);

        let mut zsum = [0.0f64; 5];
        for sf in 0..steps_f {
            let z: [f64; 5] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let tau_f = sf as f64 * dt_f;
            let rec = euler_step(&fine_cfg, &mut state_f, tau_f, dt_f, z);
            state_f.log_x += jump_f_x[sf];
            state_f.log_y += jump_f_y[sf];
            out_f.qv_diffusive_x[t] += rec.sigma_x * rec.sigma_x * dt_f;
            out_f.qv_diffusive_y[t] += rec.sigma_y * rec.sigma_y * dt_f;
            for k in 0..5 {
                zsum[k] += z[k];
            }

            if (sf + 1).is_multiple_of(refine) {
                let sc = sf / refine;
                let zc = [
                    zsum[0] * agg,
                    zsum[1] * agg,
                    zsum[2] * agg,
                    zsum[3] * agg,
                    zsum[4] * agg,
                ];
                zsum = [0.0; 5];
                let tau_c = sc as f64 * dt_c;
                let rec_c = euler_step(cfg, &mut state_c, tau_c, dt_c, zc);
                state_c.log_x += jump_c_x[sc];
                state_c.log_y += jump_c_y[sc];
                out_c.qv_diffusive_x[t] += rec_c.sigma_x * rec_c.sigma_x * dt_c;
                out_c.qv_diffusive_y[t] += rec_c.sigma_y * rec_c.sigma_y * dt_c;
                if (sc + 1).is_multiple_of(per_obs_c) {
                    let i = (sc + 1) / per_obs_c;
                    out_c.panel.x.set(t, i, state_c.log_x);
                    out_c.panel.y.set(t, i, state_c.log_y);
                }
            }
            if (sf + 1).is_multiple_of(steps_f / cfg.n) {
                let i = (sf + 1) / (steps_f / cfg.n);
                out_f.panel.x.set(t, i, state_f.log_x);
                out_f.panel.y.set(t, i, state_f.log_y);
            }
        }
    }
    Ok((out_c, out_f))
}
