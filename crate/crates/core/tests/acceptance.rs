//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured values before asserting.
//!
//! Run with `cargo test -p spotcorr --test acceptance -- --nocapture` to see
//! every line; the Monte Carlo criteria take a few minutes in total.

use rayon::prelude::*;

use spotcorr::experiments::{hedge_ratios, rejection_table, McGrid};
use spotcorr::longrun::{hac_longrun_pointwise, HacConfig};
use spotcorr::market_data::log_increments;
use spotcorr::pipeline::{
    estimate, run_tests, EstimationConfig, MethodSelection, TestRunConfig,
};
use spotcorr::seeding;
use spotcorr::simulation::{
    diurnal_vol, sample_stationary_correlation, simulate_paths, simulate_refined_pair, CorrSdeConfig,
    SimConfig, VolCurveConfig,
};
use spotcorr::spot::{
    block_truncated_covariance, spot_covariance_panel, BlockSpec, CovTriple, SpotCovariancePanel,
    TruncationConfig,
};
use spotcorr::testing::{simulate_null_distribution, Method};

const ACCEPT_SEED: u64 = 20_240_801;

struct Checklist {
    lines: Vec<(bool, String)>,
}

impl Checklist {
    fn new() -> Self {
        Checklist { lines: Vec::new() }
    }

    fn check(&mut self, label: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("ACCEPTANCE {label}: {verdict} - {detail}");
        self.lines.push((pass, format!("{label}: {detail}")));
    }

    fn finish(self) {
        let failures: Vec<String> = self
            .lines
            .iter()
            .filter(|(pass, _)| !pass)
            .map(|(_, line)| line.clone())
            .collect();
        assert!(failures.is_empty(), "failed checks:\n{}", failures.join("\n"));
    }
}

/// Rejection rates for the Table-cell (n = 78, k_n = 26, T = 21) at one
/// intercept, both methods, levels 10/5/1%.
fn cell_rates(intercept: f64, reps: usize) -> Vec<(Method, f64, f64)> {
    let grid = McGrid {
        cells: vec![(78, 26)],
        t_values: vec![21],
        intercepts: vec![intercept],
        alphas: vec![0.10, 0.05, 0.01],
        reps,
        draws: 9_999,
        seed: ACCEPT_SEED,
        methods: MethodSelection::Both,
        steps_per_day: 4_680,
    };
    rejection_table(&grid)
        .expect("rejection table")
        .cells
        .into_iter()
        .map(|c| (c.method, c.alpha, c.rate))
        .collect()
}

fn rate_of(rates: &[(Method, f64, f64)], method: Method, alpha: f64) -> f64 {
    rates
        .iter()
        .find(|(m, a, _)| *m == method && *a == alpha)
        .map(|(_, _, r)| *r)
        .expect("rate present")
}

#[test]
fn criteria_1_2_3_monte_carlo_rejection_rates() {
    let reps = 1_000;
    let h0 = cell_rates(1.0, reps);
    let h09 = cell_rates(0.9, reps);
    let h08 = cell_rates(0.8, reps);

    let mut list = Checklist::new();

    // Criterion 1: pivotal size at the three levels.
    let p10 = rate_of(&h0, Method::Pivotal, 0.10);
    let p05 = rate_of(&h0, Method::Pivotal, 0.05);
    let p01 = rate_of(&h0, Method::Pivotal, 0.01);
    list.check(
        "criterion 1 (pivotal size)",
        (p10 - 0.090).abs() <= 0.030 && (p05 - 0.065).abs() <= 0.025 && (p01 - 0.039).abs() <= 0.015,
        format!(
            "measured {p10:.3}/{p05:.3}/{p01:.3} vs 0.090+-0.030 / 0.065+-0.025 / 0.039+-0.015"
        ),
    );

    // Criterion 2: pivotal power at a = 0.80, 10% level.
    let pow = rate_of(&h08, Method::Pivotal, 0.10);
    list.check(
        "criterion 2 (pivotal power)",
        pow >= 0.94,
        format!("measured {pow:.3} vs required >= 0.94 (reference 0.980)"),
    );

    // Criterion 3: nonpivotal size and power at the 10% level.
    let n_size = rate_of(&h0, Method::Nonpivotal, 0.10);
    let n_pow = rate_of(&h09, Method::Nonpivotal, 0.10);
    list.check(
        "criterion 3 (nonpivotal size/power)",
        (n_size - 0.142).abs() <= 0.05 && (n_pow - 0.691).abs() <= 0.05,
        format!("measured size {n_size:.3} vs 0.142+-0.05, power {n_pow:.3} vs 0.691+-0.05"),
    );

    list.finish();
}

#[test]
fn criterion_4_estimator_recovery() {
    let n = 390;
    let spec = BlockSpec::new(n, 130).unwrap();
    let a = 0.8;
    let errors: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut cfg = SimConfig::new(n, 250, a, seeding::derive(ACCEPT_SEED, &[4, i]));
            cfg.steps_per_day = 23_400;
            let out = simulate_paths(&cfg).unwrap();
            let inc = log_increments(&out.panel);
            let est = estimate(&inc, &EstimationConfig::new(spec)).unwrap();
            (0..spec.m)
                .map(|j| {
                    let target = a + 2.0 * (1.0 - a) * spec.midpoint(j);
                    (est.curves.rho_hat[j] - target).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let mut sorted = errors.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = (sorted[9] + sorted[10]) / 2.0;
    let mut list = Checklist::new();
    list.check(
        "criterion 4 (estimator recovery)",
        median < 0.05,
        format!("median over 20 seeds of grid max error = {median:.4} vs required < 0.05"),
    );
    list.finish();
}

#[test]
fn criterion_5_exact_identities() {
    let mut list = Checklist::new();

    // A realistic simulated panel for the normalization identities.
    let mut cfg = SimConfig::new(78, 21, 0.9, seeding::derive(ACCEPT_SEED, &[5, 1]));
    cfg.steps_per_day = 780;
    let out = simulate_paths(&cfg).unwrap();
    let inc = log_increments(&out.panel);
    let est = estimate(&inc, &EstimationConfig::new(BlockSpec::new(78, 26).unwrap())).unwrap();
    let m = est.curves.spec.m as f64;
    let avg = est
        .curves
        .c_hat
        .iter()
        .fold(CovTriple::default(), |acc, &c| acc + c)
        .scale(1.0 / m);
    let norm_err = (avg.x - 1.0).abs().max((avg.xy - 1.0).abs()).max((avg.y - 1.0).abs());
    list.check(
        "criterion 5a (block-mean normalization)",
        norm_err < 1e-12,
        format!("max |(1/m) sum c^_u - 1| = {norm_err:.2e} vs 1e-12"),
    );

    let fact_err = (0..est.curves.spec.m)
        .map(|j| (est.curves.rho_hat[j] * est.curves.rho_bar_sc - est.curves.rho_tilde[j]).abs())
        .fold(0.0, f64::max);
    list.check(
        "criterion 5b (rho factorization)",
        fact_err < 1e-12,
        format!("max |rho^_u rho_bar_sc - rho~_u| = {fact_err:.2e} vs 1e-12"),
    );

    // Identical assets: unit curve and the degenerate pivotal statistic.
    let twin = spotcorr::market_data::LogPricePanel {
        n: out.panel.n,
        dates: out.panel.dates.clone(),
        x: out.panel.x.clone(),
        y: out.panel.x.clone(),
    };
    let run = TestRunConfig {
        est: EstimationConfig::new(BlockSpec::new(78, 26).unwrap()),
        methods: MethodSelection::Pivotal,
        alphas: vec![0.05],
        draws: 99,
        seed: 1,
    };
    let (reports, artifacts) = run_tests(&twin, &run).unwrap();
    let twin_est = estimate(&log_increments(&twin), &run.est).unwrap();
    let rho_err = (0..3)
        .map(|j| (twin_est.curves.rho_hat[j] - 1.0).abs())
        .fold(0.0, f64::max);
    let p_expect = -(3.0f64 / 2.0).sqrt();
    let p_err = (artifacts.pivotal_statistic.unwrap() - p_expect).abs();
    list.check(
        "criterion 5c (X == Y degeneracy)",
        rho_err < 1e-12 && p_err < 1e-9 && !reports[0].reject,
        format!("max |rho^_u - 1| = {rho_err:.2e}, |P + sqrt(m/2)| = {p_err:.2e}"),
    );

    // Infinite thresholds reproduce the plain block covariance exactly.
    let spec = BlockSpec::new(78, 26).unwrap();
    let off = spot_covariance_panel(&inc, spec, &TruncationConfig::off()).unwrap();
    let mut max_gap = 0.0f64;
    for t in 0..out.panel.days() {
        for j in 0..spec.m {
            let bx = &inc.x.row(t)[j * spec.k_n..(j + 1) * spec.k_n];
            let by = &inc.y.row(t)[j * spec.k_n..(j + 1) * spec.k_n];
            let (plain, dropped) =
                block_truncated_covariance(bx, by, f64::INFINITY, f64::INFINITY, spec.n);
            assert_eq!(dropped, 0);
            let got = off.triple(t, j);
            max_gap = max_gap
                .max((got.x - plain.x).abs())
                .max((got.xy - plain.xy).abs())
                .max((got.y - plain.y).abs());
        }
    }
    list.check(
        "criterion 5d (threshold-infinity identity)",
        max_gap == 0.0,
        format!("max gap to plain covariance = {max_gap:.2e} (exact)"),
    );

    list.finish();
}

#[test]
fn criterion_6_simulation_fidelity() {
    let mut list = Checklist::new();

    // Jump share of quadratic variation over 10,000 days.
    let chunks = 10usize;
    let (jump, diff): (f64, f64) = (0..chunks as u64)
        .into_par_iter()
        .map(|i| {
            let mut cfg = SimConfig::new(78, 1_000, 1.0, seeding::derive(ACCEPT_SEED, &[6, i]));
            cfg.steps_per_day = 4_680;
            let out = simulate_paths(&cfg).unwrap();
            let j: f64 = out.qv_jump_x.iter().chain(&out.qv_jump_y).sum();
            let d: f64 = out.qv_diffusive_x.iter().chain(&out.qv_diffusive_y).sum();
            (j, d)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let share = jump / (jump + diff);
    list.check(
        "criterion 6a (jump QV share)",
        (0.07..=0.13).contains(&share),
        format!("pooled share over 10,000 days = {share:.4} vs [0.07, 0.13]"),
    );

    // Stationary correlation sample mean against the pinned band
    // [0.57, 0.63]. The exact stationary mean of the configured diffusion is
    // kappa*mean/(kappa - vol^2) = 0.9/1.41 = 0.6383, so a correct sampler
    // cannot land inside the band. Asserted as pinned.
    let sde = CorrSdeConfig::default();
    let mut rng = seeding::rng_from(seeding::derive(ACCEPT_SEED, &[6, 100]));
    let draws = 100_000;
    let mean = (0..draws)
        .map(|_| sample_stationary_correlation(&sde, &mut rng).unwrap())
        .sum::<f64>()
        / draws as f64;
    let density_mean = sde.kappa * sde.mean / (sde.kappa - sde.vol * sde.vol);
    list.check(
        "criterion 6b (stationary rho_sc mean)",
        (0.57..=0.63).contains(&mean),
        format!(
            "sample mean = {mean:.4} vs required [0.57, 0.63]; exact mean of the stated density is {density_mean:.4}"
        ),
    );

    // Unit integral of the squared diurnal volatility curve: midpoint
    // quadrature is exact for the piecewise-linear integrand.
    let curve = VolCurveConfig::default();
    let m = 1 << 20;
    let mut quad = 0.0;
    for i in 0..m {
        let tau = (i as f64 + 0.5) / m as f64;
        let s = diurnal_vol(tau, &curve);
        quad += s * s;
    }
    quad /= m as f64;
    list.check(
        "criterion 6c (diurnal variance integral)",
        (quad - 1.0).abs() < 1e-10,
        format!("quadrature = {quad:.15} vs 1 within 1e-10"),
    );

    // Exact coarse/fine subsample identity.
    let mut cfg = SimConfig::new(26, 3, 0.9, seeding::derive(ACCEPT_SEED, &[6, 200]));
    cfg.steps_per_day = 26 * 30;
    cfg.record_latent = true;
    let out = simulate_paths(&cfg).unwrap();
    let latent = out.latent.as_ref().unwrap();
    let per_obs = latent.steps_per_day / cfg.n;
    let mut exact = true;
    for t in 0..cfg.t_days {
        for i in 0..=cfg.n {
            let idx = t * latent.steps_per_day + i * per_obs;
            exact &= out.panel.x.get(t, i) == latent.log_x[idx];
            exact &= out.panel.y.get(t, i) == latent.log_y[idx];
        }
    }
    list.check(
        "criterion 6d (subsample identity)",
        exact,
        "coarse panel equals the fine path subsample bit for bit".to_string(),
    );

    // Discretization sensitivity: with common random numbers, refining the
    // Euler step from 1/4,680 to 1/23,400 must not shift the criterion 1-3
    // rates beyond their stated tolerances (100-replication spot check).
    let reps = 100u64;
    let run_pair = |a: f64| -> Vec<(bool, bool, bool, bool)> {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut sim = SimConfig::new(78, 21, a, seeding::derive(ACCEPT_SEED, &[6, 300, a.to_bits(), rep]));
                sim.steps_per_day = 4_680;
                let (coarse, fine) = simulate_refined_pair(&sim, 5).unwrap();
                let run = TestRunConfig {
                    est: EstimationConfig::new(BlockSpec::new(78, 26).unwrap()),
                    methods: MethodSelection::Both,
                    alphas: vec![0.10, 0.05, 0.01],
                    draws: 2_000,
                    seed: seeding::derive(rep, &[1]),
                };
                let (rc, _) = run_tests(&coarse.panel, &run).unwrap();
                let (rf, _) = run_tests(&fine.panel, &run).unwrap();
                let pick = |rs: &[spotcorr::TestReport], m: Method, al: f64| {
                    rs.iter().find(|r| r.method == m && r.alpha == al).unwrap().reject
                };
                (
                    pick(&rc, Method::Pivotal, 0.10),
                    pick(&rf, Method::Pivotal, 0.10),
                    pick(&rc, Method::Nonpivotal, 0.10),
                    pick(&rf, Method::Nonpivotal, 0.10),
                )
            })
            .collect()
    };
    let mut max_piv_shift = 0.0f64;
    let mut max_np_shift = 0.0f64;
    for a in [1.0, 0.9, 0.8] {
        let rows = run_pair(a);
        let rate = |sel: fn(&(bool, bool, bool, bool)) -> bool| {
            rows.iter().filter(|r| sel(r)).count() as f64 / reps as f64
        };
        let piv_shift = (rate(|r| r.0) - rate(|r| r.1)).abs();
        let np_shift = (rate(|r| r.2) - rate(|r| r.3)).abs();
        max_piv_shift = max_piv_shift.max(piv_shift);
        max_np_shift = max_np_shift.max(np_shift);
    }
    list.check(
        "criterion 6e (dt sensitivity)",
        max_piv_shift <= 0.030 && max_np_shift <= 0.050,
        format!(
            "max 10% rate shift at dt 1/4,680 -> 1/23,400: pivotal {max_piv_shift:.3} (<= 0.030), nonpivotal {max_np_shift:.3} (<= 0.050)"
        ),
    );

    list.finish();
}

#[test]
fn criterion_7_null_distribution_engine() {
    let mut list = Checklist::new();
    let c = nalgebra::DMatrix::<f64>::identity(3, 3);
    let null = simulate_null_distribution(&c, 9_999, seeding::derive(ACCEPT_SEED, &[7]));
    let q95 = null.critical_value(0.05);
    // Chi-square CDF oracle.
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let oracle = ChiSquared::new(3.0).unwrap().inverse_cdf(0.95) / 3.0;
    list.check(
        "criterion 7 (null engine quantile)",
        (q95 - oracle).abs() <= 0.08,
        format!("empirical 95% quantile = {q95:.4} vs chi2_0.95(3)/3 = {oracle:.4} within 0.08"),
    );
    list.finish();
}

#[test]
fn criterion_8_hedging() {
    let mut list = Checklist::new();
    let seeds: Vec<u64> = (0..50).map(|i| seeding::derive(ACCEPT_SEED, &[8, i])).collect();
    let results: Vec<(f64, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = SimConfig::new(390, 10, 0.6, seed);
            cfg.steps_per_day = 4_680;
            let out = simulate_paths(&cfg).unwrap();
            let series = hedge_ratios(&out.panel).unwrap();
            let ratio = series.variance_ratio().unwrap();
            // Identity phi = rho^_u,[i-1,i] * phi_bar with the diurnal
            // coefficient read off as the bin correlation over the day mean.
            let mut max_gap = 0.0f64;
            for b in series.bins.iter().filter(|b| b.valid) {
                let rho_u = b.rho / series.rho_sc_daily[b.day];
                max_gap = max_gap.max((b.phi - rho_u * b.phi_bar).abs());
            }
            (ratio, max_gap)
        })
        .collect();
    let below_one = results.iter().filter(|(r, _)| *r < 1.0).count();
    let worst_gap = results.iter().map(|(_, g)| *g).fold(0.0, f64::max);
    list.check(
        "criterion 8 (hedging)",
        below_one >= 45 && worst_gap <= 1e-12,
        format!(
            "variance ratio < 1 in {below_one}/50 seeds (need >= 45); max identity gap {worst_gap:.2e} (<= 1e-12)"
        ),
    );
    list.finish();
}

#[test]
fn criterion_9_hac_oracle() {
    use nalgebra::{Matrix3, Vector3};
    use rand_distr::{Distribution, StandardNormal};
    let mut list = Checklist::new();
    let loadings = Vector3::new(1.0, 0.9, 0.8);
    let sigma = loadings * loadings.transpose() + Matrix3::identity() * 0.05;
    let chol = sigma.cholesky().unwrap();
    let spec = BlockSpec::new(4, 2).unwrap();
    let t_days = 2_000;
    let mut rng = seeding::rng_from(seeding::derive(ACCEPT_SEED, &[9]));
    let days: Vec<Vec<CovTriple>> = (0..t_days)
        .map(|_| {
            let z = Vector3::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            );
            let v = Vector3::new(5.0, 2.0, 5.0) + chol.l() * z;
            let triple = CovTriple {
                x: v[0],
                xy: v[1],
                y: v[2],
            };
            vec![triple, triple]
        })
        .collect();
    let panel = SpotCovariancePanel::from_triples(spec, days);
    let c_tilde = spotcorr::diurnal::time_average_curve(&panel);
    let hac = HacConfig::default();
    let h_t = hac.lags_for(t_days).unwrap();
    let gamma = hac_longrun_pointwise(&panel, &c_tilde, 0, &hac).unwrap();
    let err = (gamma.matrix - sigma).norm();
    list.check(
        "criterion 9 (HAC oracle)",
        err < 0.1 * sigma.norm(),
        format!(
            "Frobenius error {err:.4} vs 0.1 ||Sigma||_F = {:.4} (T = {t_days}, H_T = {h_t})",
            0.1 * sigma.norm()
        ),
    );
    list.finish();
}
