//! Pivotal and nonpivotal test statistics for diurnal variation in the
//! correlation process, plus the univariate volatility variant.
//!
//! The pivotal statistic standardizes each block deviation by its HAC-based
//! long-run variance and refers the normalized sum of squares to a standard
//! normal. The nonpivotal statistic compares the time-scaled mean squared
//! deviation against a simulated weighted chi-square mixture whose weights
//! are the positive eigenvalues of the estimated covariance kernel.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::longrun::{HacConfig, Kernel};
use crate::seeding;
use crate::spot::{BlockSpec, TruncationConfig};

/// Which test produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pivotal,
    Nonpivotal,
    UnivariateX,
    UnivariateY,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Pivotal => "pivotal",
            Method::Nonpivotal => "nonpivotal",
            Method::UnivariateX => "univariate-x",
            Method::UnivariateY => "univariate-y",
        };
        write!(f, "{s}")
    }
}

/// Every tuning knob that went into a test run; embedded in each report so
/// output files are self-describing.
#[derive(Debug, Clone, Serialize)]
pub struct TuningRecord {
    pub n: usize,
    pub k_n: usize,
    pub m: usize,
    pub t_days: usize,
    pub h_t: usize,
    pub kernel: Kernel,
    pub q: f64,
    pub varpi: f64,
    pub truncation_mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub excluded_blocks: usize,
    pub gamma_clamped: usize,
}

impl TuningRecord {
    pub fn new(spec: BlockSpec, trunc: &TruncationConfig, hac: &HacConfig, t_days: usize) -> Self {
        TuningRecord {
            n: spec.n,
            k_n: spec.k_n,
            m: spec.m,
            t_days,
            h_t: hac.lags_for(t_days).unwrap_or(0),
            kernel: hac.kernel,
            q: trunc.q,
            varpi: trunc.varpi,
            truncation_mode: format!("{:?}", trunc.mode).to_lowercase(),
            draws: None,
            seed: None,
            excluded_blocks: 0,
            gamma_clamped: 0,
        }
    }
}

/// Outcome of a single hypothesis test at one significance level.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: f64,
    pub alpha: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub tuning: TuningRecord,
}

impl TestReport {
    fn from_parts(
        method: Method,
        statistic: f64,
        alpha: f64,
        critical_value: f64,
        p_value: f64,
        tuning: TuningRecord,
    ) -> TestReport {
        TestReport {
            method,
            statistic,
            alpha,
            critical_value,
            p_value,
            // The decision rule in one place: reject iff strictly above.
            reject: statistic > critical_value,
            tuning,
        }
    }
}

/// `(1 - alpha)` quantile of the standard normal.
pub fn normal_quantile(prob: f64) -> f64 {
    Normal::standard().inverse_cdf(prob)
}

/// Standardized block t-statistics and the pivotal statistic
/// `P = (1/sqrt(2)) (1/sqrt(m)) sum_j (Tbar_j^2 - 1)`.
///
/// A block with zero long-run variance is legal only when its deviation is
/// itself zero (e.g. identical assets); the t-statistic is then zero.
pub fn pivotal_statistic(
    rho_hat: &[f64],
    gamma: &[f64],
    t_days: usize,
) -> Result<(f64, Vec<f64>)> {
    assert_eq!(rho_hat.len(), gamma.len());
    let sqrt_t = (t_days as f64).sqrt();
    let mut tbars = Vec::with_capacity(rho_hat.len());
    for (j, (&rho, &g)) in rho_hat.iter().zip(gamma).enumerate() {
        let num = sqrt_t * (rho - 1.0);
        let tbar = if g > 0.0 {
            num / g.sqrt()
        } else if num.abs() < 1e-12 {
            0.0
        } else {
            return Err(Error::ZeroGamma(j + 1));
        };
        tbars.push(tbar);
    }
    let m = tbars.len() as f64;
    let sum: f64 = tbars.iter().map(|t| t * t - 1.0).sum();
    let stat = sum / (2.0 * m).sqrt();
    Ok((stat, tbars))
}

/// One-sided normal test: reject when `P > z_(1-alpha)`.
pub fn pivotal_test(statistic: f64, alpha: f64, tuning: TuningRecord) -> TestReport {
    let z = normal_quantile(1.0 - alpha);
    let p_value = 1.0 - Normal::standard().cdf(statistic);
    TestReport::from_parts(Method::Pivotal, statistic, alpha, z, p_value, tuning)
}

/// `N = (T/m) sum_j (rho^_(u,tau_j) - 1)^2` over the retained blocks.
pub fn nonpivotal_statistic(rho_hat: &[f64], t_days: usize) -> f64 {
    let m = rho_hat.len() as f64;
    let sum: f64 = rho_hat.iter().map(|&r| (r - 1.0) * (r - 1.0)).sum();
    t_days as f64 / m * sum
}

/// Simulated null law of the nonpivotal statistic: a weighted chi-square
/// mixture `(1/m) sum_j lambda_j chi^2_j` over the positive eigenvalues of
/// the covariance kernel estimate.
#[derive(Debug, Clone)]
pub struct NullDistribution {
    /// Retained (positive) eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Dimension of the kernel matrix, i.e. the number of grid blocks.
    pub m: usize,
    /// Sorted ascending sample of the mixture.
    pub draws: Vec<f64>,
    pub seed: u64,
    /// True when no eigenvalue is retained; every draw is zero then.
    pub degenerate: bool,
}

impl NullDistribution {
    /// Empirical `(1 - alpha)` critical value: the k-th largest draw with
    /// `k = max(1, floor(alpha (R + 1)))`, consistent with the p-value
    /// convention below.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        let r = self.draws.len();
        let k = ((alpha * (r + 1) as f64).floor() as usize).clamp(1, r);
        self.draws[r - k]
    }

    /// `p = (1 + #{draws >= N}) / (R + 1)`.
    pub fn p_value(&self, statistic: f64) -> f64 {
        let above = self.draws.iter().filter(|&&d| d >= statistic).count();
        (1 + above) as f64 / (self.draws.len() + 1) as f64
    }
}

/// Eigendecompose the symmetric kernel matrix, retain eigenvalues above
/// `1e-10 * max |lambda|`, and simulate `draws` realizations of the mixture.
pub fn simulate_null_distribution(
    c_kernel: &DMatrix<f64>,
    draws: usize,
    seed: u64,
) -> NullDistribution {
    let m = c_kernel.nrows();
    let eig = c_kernel.clone().symmetric_eigenvalues();
    let max_abs = eig.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let cutoff = 1e-10 * max_abs;
    let retained: Vec<f64> = eig.iter().copied().filter(|&l| l > cutoff).collect();
    let degenerate = retained.is_empty();

    let mut rng = seeding::rng_from(seed);
    let mut sample = vec![0.0f64; draws];
    if !degenerate {
        for slot in sample.iter_mut() {
            let mut acc = 0.0;
            for &lambda in &retained {
                let z: f64 = StandardNormal.sample(&mut rng);
                acc += lambda * z * z;
            }
            *slot = acc / m as f64;
        }
    }
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    NullDistribution {
        eigenvalues: retained,
        m,
        draws: sample,
        seed,
        degenerate,
    }
}

/// Compare `N` against the simulated null.
pub fn nonpivotal_test(
    statistic: f64,
    null: &NullDistribution,
    alpha: f64,
    mut tuning: TuningRecord,
) -> TestReport {
    tuning.draws = Some(null.draws.len());
    tuning.seed = Some(null.seed);
    let critical = null.critical_value(alpha);
    let p_value = null.p_value(statistic);
    TestReport::from_parts(Method::Nonpivotal, statistic, alpha, critical, p_value, tuning)
}

/// Assemble a univariate-style pivotal statistic from a normalized variance
/// curve and its per-block long-run variances `Gamma^11 / (c_bar)^2`.
pub fn univariate_statistic(
    c_hat_diag: &[f64],
    gamma_scaled: &[f64],
    t_days: usize,
) -> Result<(f64, Vec<f64>)> {
    // Identical assembly to the bivariate pivotal statistic with the
    // variance curve in place of the correlation curve.
    pivotal_statistic(c_hat_diag, gamma_scaled, t_days)
}

/// Report wrapper for the univariate test on asset X or Y.
pub fn univariate_test(
    method: Method,
    statistic: f64,
    alpha: f64,
    tuning: TuningRecord,
) -> TestReport {
    debug_assert!(matches!(method, Method::UnivariateX | Method::UnivariateY));
    let z = normal_quantile(1.0 - alpha);
    let p_value = 1.0 - Normal::standard().cdf(statistic);
    TestReport::from_parts(method, statistic, alpha, z, p_value, tuning)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::longrun::HacConfig;
    use crate::spot::{BlockSpec, TruncationConfig};

    fn tuning() -> TuningRecord {
        TuningRecord::new(
            BlockSpec::new(78, 26).unwrap(),
            &TruncationConfig::default(),
            &HacConfig::default(),
            21,
        )
    }

    #[test]
    fn pivotal_statistic_examples() {
        // All Tbar_j^2 = 1 -> P = 0: T = 4, gamma = 1, rho = 1.5 gives Tbar = 1.
        let (p, tb) = pivotal_statistic(&[1.5, 1.5, 1.5], &[1.0; 3], 4).unwrap();
        assert!(tb.iter().all(|t| (t - 1.0).abs() < 1e-15));
        assert!(p.abs() < 1e-12);

        // m = 2, Tbar = (0, 2) -> P = 1.
        let (p, tb) = pivotal_statistic(&[1.0, 3.0], &[1.0, 1.0], 1).unwrap();
        assert_eq!(tb, vec![0.0, 2.0]);
        assert!((p - 1.0).abs() < 1e-12);

        // Identical assets: rho^ = 1 and gamma^ = 0 on every block, so
        // P = -sqrt(m/2); for m = 4 that is -sqrt(2).
        let (p, _) = pivotal_statistic(&[1.0; 4], &[0.0; 4], 21).unwrap();
        assert!((p + 2f64.sqrt()).abs() < 1e-12);

        // Zero gamma with a real deviation is an error.
        assert!(matches!(
            pivotal_statistic(&[1.2], &[0.0], 21),
            Err(Error::ZeroGamma(1))
        ));
    }

    #[test]
    fn pivotal_decision_rule() {
        let r = pivotal_test(0.0, 0.05, tuning());
        assert!(!r.reject);
        assert!((r.p_value - 0.5).abs() < 1e-12);

        // Exactly at the boundary: strictly-greater means no rejection.
        let z95 = normal_quantile(0.95);
        assert!((z95 - 1.6448536269514722).abs() < 1e-9);
        let r = pivotal_test(z95, 0.05, tuning());
        assert!(!r.reject);

        let r = pivotal_test(3.0, 0.01, tuning());
        assert!((r.critical_value - 2.3263478740408408).abs() < 1e-9);
        assert!(r.reject);
    }

    #[test]
    fn nonpivotal_statistic_examples() {
        assert_eq!(nonpivotal_statistic(&[1.0; 5], 10), 0.0);
        let n = nonpivotal_statistic(&[0.9, 1.1], 4);
        assert!((n - 0.04).abs() < 1e-15);
    }

    #[test]
    fn nonpivotal_statistic_approximates_integral_on_fine_grid() {
        // (1/m) sum (rho_u(tau) - 1)^2 at block midpoints approximates
        // int_0^1 (0.4 t - 0.2)^2 dt = 0.16/12.
        let m = 20_000;
        let curve: Vec<f64> = (0..m)
            .map(|j| 0.8 + 0.4 * ((j as f64 + 0.5) / m as f64))
            .collect();
        let mean_sq = nonpivotal_statistic(&curve, 1);
        assert!((mean_sq - 0.16 / 12.0).abs() < 1e-7);
    }

    #[test]
    fn null_distribution_of_identity_kernel() {
        // C = I_3: Z ~ chi^2(3)/3 with 95% quantile 7.8147/3.
        let c = DMatrix::<f64>::identity(3, 3);
        let null = simulate_null_distribution(&c, 9_999, 2024);
        assert_eq!(null.eigenvalues.len(), 3);
        let q95 = null.critical_value(0.05);
        assert!(
            (q95 - 2.6049).abs() < 0.1,
            "empirical quantile {q95} too far from 2.6049"
        );
        // Known statistic above/below the critical value.
        let report = nonpivotal_test(2.7, &null, 0.05, tuning());
        assert!(report.reject);
        let report = nonpivotal_test(0.0, &null, 0.05, tuning());
        assert!(!report.reject);
    }

    #[test]
    fn null_distribution_retention_rule() {
        let c = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0]));
        let null = simulate_null_distribution(&c, 4_000, 3);
        assert_eq!(null.eigenvalues, vec![1.0]);
        // Z ~ chi^2(1)/2 has mean 0.5.
        let mean: f64 = null.draws.iter().sum::<f64>() / null.draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn degenerate_kernel_gives_zero_draws() {
        let c = DMatrix::<f64>::zeros(3, 3);
        let null = simulate_null_distribution(&c, 100, 9);
        assert!(null.degenerate);
        assert!(null.draws.iter().all(|&d| d == 0.0));
        // Any positive N rejects; N = 0 does not (strictly-greater rule).
        let r = nonpivotal_test(0.5, &null, 0.01, tuning());
        assert!(r.reject);
        let r = nonpivotal_test(0.0, &null, 0.01, tuning());
        assert!(!r.reject);
    }

    #[test]
    fn tail_convention_above_sample_maximum() {
        let c = DMatrix::<f64>::identity(2, 2);
        let null = simulate_null_distribution(&c, 999, 5);
        let n = null.draws.last().unwrap() + 1.0;
        for alpha in [0.1, 0.05, 0.01] {
            let r = nonpivotal_test(n, &null, alpha, tuning());
            assert!(r.reject);
            assert!((r.p_value - 1.0 / 1000.0).abs() < 1e-12);
        }
    }

    #[test]
    fn draws_are_deterministic_given_seed() {
        let c = DMatrix::<f64>::identity(3, 3);
        let a = simulate_null_distribution(&c, 1_000, 77);
        let b = simulate_null_distribution(&c, 1_000, 77);
        assert_eq!(a.draws, b.draws);
        let c2 = simulate_null_distribution(&c, 1_000, 78);
        assert_ne!(a.draws, c2.draws);
    }

    #[test]
    fn monotonicity_of_statistics() {
        // N is nondecreasing in each |rho - 1|.
        let base = nonpivotal_statistic(&[1.05, 0.97], 10);
        let worse = nonpivotal_statistic(&[1.08, 0.97], 10);
        assert!(worse >= base);
        // P is nondecreasing in each Tbar^2.
        let (p1, _) = pivotal_statistic(&[1.1, 1.0], &[1.0, 1.0], 4).unwrap();
        let (p2, _) = pivotal_statistic(&[1.2, 1.0], &[1.0, 1.0], 4).unwrap();
        assert!(p2 > p1);
    }

    #[test]
    fn reports_serialize_to_json() {
        let r = pivotal_test(1.0, 0.05, tuning());
        let line = serde_json::to_string(&r).unwrap();
        assert!(line.contains("\"method\":\"pivotal\""));
        assert!(line.contains("\"kernel\":\"parzen\""));
    }
}
