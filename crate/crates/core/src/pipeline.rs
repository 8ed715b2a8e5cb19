//! End-to-end wiring: increments -> spot panel -> diurnal curves -> tests.

use serde::{Deserialize, Serialize};

use crate::diurnal::DiurnalCurves;
use crate::error::Result;
use crate::longrun::{self, HacConfig};
use crate::market_data::{log_increments, IncrementPanel, LogPricePanel};
use crate::seeding;
use crate::spot::{
    daily_truncated_rv, spot_covariance_panel, BlockSpec, DailyTruncatedRv, SpotCovariancePanel,
    TruncationConfig,
};
use crate::testing::{
    self, Method, NullDistribution, TestReport, TuningRecord,
};

/// Estimator tuning shared by every subcommand.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub block: BlockSpec,
    pub trunc: TruncationConfig,
    pub hac: HacConfig,
}

impl EstimationConfig {
    pub fn new(block: BlockSpec) -> Self {
        EstimationConfig {
            block,
            trunc: TruncationConfig::default(),
            hac: HacConfig::default(),
        }
    }
}

/// Everything the estimators produce for one panel.
#[derive(Debug, Clone)]
pub struct Estimates {
    pub spot: SpotCovariancePanel,
    pub daily: DailyTruncatedRv,
    pub curves: DiurnalCurves,
}

pub fn estimate(inc: &IncrementPanel, cfg: &EstimationConfig) -> Result<Estimates> {
    let spot = spot_covariance_panel(inc, cfg.block, &cfg.trunc)?;
    let daily = daily_truncated_rv(inc, &spot);
    let curves = DiurnalCurves::from_panel(&spot)?;
    Ok(Estimates { spot, daily, curves })
}

/// Test selection for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodSelection {
    Pivotal,
    Nonpivotal,
    Both,
    UnivariateX,
    UnivariateY,
}

impl MethodSelection {
    fn wants_pivotal(self) -> bool {
        matches!(self, MethodSelection::Pivotal | MethodSelection::Both)
    }
    fn wants_nonpivotal(self) -> bool {
        matches!(self, MethodSelection::Nonpivotal | MethodSelection::Both)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestRunConfig {
    pub est: EstimationConfig,
    pub methods: MethodSelection,
    pub alphas: Vec<f64>,
    /// Null-distribution draws for the nonpivotal test.
    pub draws: usize,
    pub seed: u64,
}

impl TestRunConfig {
    pub fn new(est: EstimationConfig, methods: MethodSelection, seed: u64) -> Self {
        TestRunConfig {
            est,
            methods,
            alphas: vec![0.05],
            draws: 9_999,
            seed,
        }
    }
}

/// Artifacts of one full test run, kept so callers can inspect or export the
/// intermediate estimates without recomputing them.
#[derive(Debug, Clone)]
pub struct TestArtifacts {
    pub pivotal_statistic: Option<f64>,
    pub t_bars: Vec<f64>,
    pub nonpivotal_statistic: Option<f64>,
    pub null: Option<NullDistribution>,
    /// Pointwise long-run matrices for the retained blocks (pivotal path).
    pub longrun: Vec<longrun::LongRunMatrix>,
    /// Cross-grid covariance kernel (nonpivotal path).
    pub kernel: Option<nalgebra::DMatrix<f64>>,
    /// Retained block indices, aligned with `longrun` and the kernel axes.
    pub included: Vec<usize>,
    pub tuning: TuningRecord,
}

/// Run the selected bivariate tests on a log-price panel at every requested
/// significance level.
pub fn run_tests(panel: &LogPricePanel, cfg: &TestRunConfig) -> Result<(Vec<TestReport>, TestArtifacts)> {
    panel.validate()?;
    let inc = log_increments(panel);
    run_tests_on_increments(&inc, cfg)
}

pub fn run_tests_on_increments(
    inc: &IncrementPanel,
    cfg: &TestRunConfig,
) -> Result<(Vec<TestReport>, TestArtifacts)> {
    let t_days = inc.days();

    // Univariate runs pair an asset with itself and must not depend on the
    // other column (which may be degenerate).
    match cfg.methods {
        MethodSelection::UnivariateX | MethodSelection::UnivariateY => {
            let method = if cfg.methods == MethodSelection::UnivariateX {
                Method::UnivariateX
            } else {
                Method::UnivariateY
            };
            let reports = univariate_reports(inc, cfg, method)?;
            let artifacts = TestArtifacts {
                pivotal_statistic: reports.first().map(|r| r.statistic),
                t_bars: Vec::new(),
                nonpivotal_statistic: None,
                null: None,
                longrun: Vec::new(),
                kernel: None,
                included: Vec::new(),
                tuning: reports
                    .first()
                    .map(|r| r.tuning.clone())
                    .unwrap_or_else(|| {
                        TuningRecord::new(cfg.est.block, &cfg.est.trunc, &cfg.est.hac, t_days)
                    }),
            };
            return Ok((reports, artifacts));
        }
        _ => {}
    }

    let est = estimate(inc, &cfg.est)?;
    let included = est.curves.included_blocks();
    let rho: Vec<f64> = included.iter().map(|&j| est.curves.rho_hat[j]).collect();

    let mut tuning = TuningRecord::new(cfg.est.block, &cfg.est.trunc, &cfg.est.hac, t_days);
    tuning.excluded_blocks = est.curves.excluded_count();
    tuning.m = included.len();

    let mut artifacts = TestArtifacts {
        pivotal_statistic: None,
        t_bars: Vec::new(),
        nonpivotal_statistic: None,
        null: None,
        longrun: Vec::new(),
        kernel: None,
        included: included.clone(),
        tuning: tuning.clone(),
    };
    let mut reports = Vec::new();

    if cfg.methods.wants_pivotal() {
        let mut gammas = Vec::with_capacity(included.len());
        let mut clamped = 0usize;
        for &j in &included {
            let lrm = longrun::hac_longrun_pointwise(&est.spot, &est.curves.c_tilde, j, &cfg.est.hac)?;
            let gh = longrun::gamma_hat(&lrm.matrix, est.curves.c_hat[j], j)?;
            if gh.clamped {
                clamped += 1;
            }
            gammas.push(gh.value);
            artifacts.longrun.push(lrm);
        }
        let (p_stat, t_bars) = testing::pivotal_statistic(&rho, &gammas, t_days)?;
        let mut tun = tuning.clone();
        tun.gamma_clamped = clamped;
        artifacts.pivotal_statistic = Some(p_stat);
        artifacts.t_bars = t_bars;
        artifacts.tuning.gamma_clamped = clamped;
        for &alpha in &cfg.alphas {
            reports.push(testing::pivotal_test(p_stat, alpha, tun.clone()));
        }
    }

    if cfg.methods.wants_nonpivotal() {
        let n_stat = testing::nonpivotal_statistic(&rho, t_days);
        let a_hat = longrun::a_hat_series(&est.spot, &est.daily, &est.curves.c_hat);
        let kernel = longrun::covariance_kernel_matrix(
            &a_hat,
            est.curves.c_bar_sv,
            &est.curves.c_hat,
            &included,
            &cfg.est.hac,
        )?;
        let null_seed = seeding::derive(cfg.seed, &[u64::from_le_bytes(*b"nullsim\0")]);
        let null = testing::simulate_null_distribution(&kernel, cfg.draws, null_seed);
        for &alpha in &cfg.alphas {
            reports.push(testing::nonpivotal_test(n_stat, &null, alpha, tuning.clone()));
        }
        artifacts.nonpivotal_statistic = Some(n_stat);
        artifacts.null = Some(null);
        artifacts.kernel = Some(kernel);
    }

    Ok((reports, artifacts))
}

/// Univariate volatility test: run the shared machinery on an asset paired
/// with itself and standardize the variance curve by `Gamma^11 / c_bar^2`.
fn univariate_reports(
    inc: &IncrementPanel,
    cfg: &TestRunConfig,
    method: Method,
) -> Result<Vec<TestReport>> {
    let series = match method {
        Method::UnivariateX => inc.x.clone(),
        Method::UnivariateY => inc.y.clone(),
        _ => unreachable!("univariate methods only"),
    };
    let solo = IncrementPanel {
        n: inc.n,
        x: series.clone(),
        y: series,
    };
    let t_days = solo.days();
    let est = estimate(&solo, &cfg.est)?;
    let included = est.curves.included_blocks();
    let mut tuning = TuningRecord::new(cfg.est.block, &cfg.est.trunc, &cfg.est.hac, t_days);
    tuning.excluded_blocks = est.curves.excluded_count();
    tuning.m = included.len();

    let c_bar = est.curves.c_bar_sv.x;
    let curve: Vec<f64> = included.iter().map(|&j| est.curves.c_hat[j].x).collect();
    let gammas: Vec<f64> = included
        .iter()
        .map(|&j| {
            longrun::hac_longrun_pointwise(&est.spot, &est.curves.c_tilde, j, &cfg.est.hac)
                .map(|lrm| lrm.matrix[(0, 0)] / (c_bar * c_bar))
        })
        .collect::<Result<_>>()?;
    let (stat, _) = testing::univariate_statistic(&curve, &gammas, t_days)?;
    Ok(cfg
        .alphas
        .iter()
        .map(|&alpha| testing::univariate_test(method, stat, alpha, tuning.clone()))
        .collect())
}

/// Result of one month in the monthly testing protocol.
#[derive(Debug, Clone)]
pub struct MonthOutcome {
    pub month: String,
    pub t_days: usize,
    pub reports: Vec<TestReport>,
    /// Reports at the Bonferroni-adjusted family levels `alpha / #months`.
    pub bonferroni_reports: Vec<TestReport>,
    pub skipped: Option<String>,
}

/// Slice a dated panel into calendar months and run the tests per month.
/// Months shorter than `min_days` are skipped with a reason. When
/// `bonferroni` is set, each level `alpha` is additionally tested at
/// `alpha / M` where `M` counts the tested months.
pub fn run_monthly(
    panel: &LogPricePanel,
    cfg: &TestRunConfig,
    min_days: usize,
    bonferroni: bool,
) -> Result<Vec<MonthOutcome>> {
    let slices = panel.month_slices();
    let tested = slices.iter().filter(|(_, _, len)| *len >= min_days).count().max(1);
    let mut out = Vec::with_capacity(slices.len());
    for (idx, (month, start, len)) in slices.into_iter().enumerate() {
        if len < min_days {
            out.push(MonthOutcome {
                month,
                t_days: len,
                reports: Vec::new(),
                bonferroni_reports: Vec::new(),
                skipped: Some(format!("only {len} days, need at least {min_days}")),
            });
            continue;
        }
        let slice = panel.slice_days(start, len);
        let mut month_cfg = cfg.clone();
        month_cfg.seed = seeding::derive(cfg.seed, &[idx as u64]);
        if bonferroni {
            let adjusted: Vec<f64> = cfg.alphas.iter().map(|a| a / tested as f64).collect();
            month_cfg.alphas = [cfg.alphas.clone(), adjusted].concat();
        }
        let (mut reports, _) = run_tests(&slice, &month_cfg)?;
        let mut bonf = Vec::new();
        if bonferroni {
            let keep = cfg.alphas.len();
            // Reports come out grouped per method in alpha order.
            let mut standard = Vec::new();
            for chunk in reports.chunks(month_cfg.alphas.len()) {
                standard.extend_from_slice(&chunk[..keep]);
                bonf.extend_from_slice(&chunk[keep..]);
            }
            reports = standard;
        }
        out.push(MonthOutcome {
            month,
            t_days: len,
            reports,
            bonferroni_reports: bonf,
            skipped: None,
        });
    }
    Ok(out)
}
