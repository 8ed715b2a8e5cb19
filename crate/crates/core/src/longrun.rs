//! HAC estimation of long-run covariance matrices.
//!
//! Two flavors are needed: the pointwise `Gamma^_(tau_j)` built from centered
//! daily triples (feeding the pivotal test), and the cross-grid kernel
//! `Gamma^_(kappa,tau)` / `C^(kappa,tau)` built from the `A^` series (feeding
//! the simulated null of the nonpivotal test). Lag-h autocovariances divide by
//! `T` rather than `T - h`, and day shifts read the one-periodic extension of
//! the grid: the lag pairs day `t` with day `t + h` at the same time of day.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spot::{CovTriple, DailyTruncatedRv, SpotCovariancePanel};

/// Kernel weight family for the HAC sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Parzen,
    Bartlett,
}

impl Kernel {
    /// Weight at lag fraction `x >= 0`; `w(0) = 1` and `w(x) = 0` for `x > 1`.
    pub fn weight(self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match self {
            Kernel::Parzen => {
                if x <= 0.5 {
                    1.0 - 6.0 * x * x + 6.0 * x * x * x
                } else if x <= 1.0 {
                    2.0 * (1.0 - x).powi(3)
                } else {
                    0.0
                }
            }
            Kernel::Bartlett => (1.0 - x).max(0.0),
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Parzen => write!(f, "parzen"),
            Kernel::Bartlett => write!(f, "bartlett"),
        }
    }
}

/// HAC configuration: kernel and lag length, `None` meaning `floor(T^(1/3))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HacConfig {
    pub kernel: Kernel,
    pub lags: Option<usize>,
}

impl Default for HacConfig {
    fn default() -> Self {
        HacConfig {
            kernel: Kernel::Parzen,
            lags: None,
        }
    }
}

impl HacConfig {
    /// Resolve the lag length for a sample of `t_days` days.
    pub fn lags_for(&self, t_days: usize) -> Result<usize> {
        let h = match self.lags {
            Some(h) => h,
            None => (t_days as f64).powf(1.0 / 3.0).floor() as usize,
        };
        if h >= t_days {
            return Err(Error::LagTooLong {
                lags: h,
                days: t_days,
            });
        }
        Ok(h)
    }
}

/// Symmetric 3x3 long-run matrix over components ordered `(X, XY, Y)`.
#[derive(Debug, Clone)]
pub struct LongRunMatrix {
    pub matrix: Matrix3<f64>,
    pub block: usize,
}

impl LongRunMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.symmetric_eigenvalues().iter().copied().collect()
    }

    pub fn symmetry_error(&self) -> f64 {
        let m = &self.matrix;
        (m[(0, 1)] - m[(1, 0)])
            .abs()
            .max((m[(0, 2)] - m[(2, 0)]).abs())
            .max((m[(1, 2)] - m[(2, 1)]).abs())
    }
}

fn triple_vec(c: CovTriple) -> Vector3<f64> {
    Vector3::new(c.x, c.xy, c.y)
}

/// Lag-`h` cross-products `(1/T) sum_t u_t w_(t+h)^T` of two day series.
fn lag_product(u: &[Vector3<f64>], w: &[Vector3<f64>], h: usize) -> Matrix3<f64> {
    let t_days = u.len();
    let mut acc = Matrix3::zeros();
    for t in 0..t_days - h {
        acc += u[t] * w[t + h].transpose();
    }
    acc / t_days as f64
}

/// Pointwise HAC long-run matrix `Gamma^_(tau_j)` from centered daily triples
/// at block `j`.
pub fn hac_longrun_pointwise(
    panel: &SpotCovariancePanel,
    c_tilde: &[CovTriple],
    j: usize,
    cfg: &HacConfig,
) -> Result<LongRunMatrix> {
    let t_days = panel.days();
    let h_t = cfg.lags_for(t_days)?;
    let center = triple_vec(c_tilde[j]);
    let series: Vec<Vector3<f64>> = (0..t_days)
        .map(|t| triple_vec(panel.triple(t, j)) - center)
        .collect();
    let mut gamma = lag_product(&series, &series, 0);
    for h in 1..=h_t {
        let w = cfg.kernel.weight(h as f64 / h_t as f64);
        if w == 0.0 {
            continue;
        }
        let nu_h = lag_product(&series, &series, h);
        gamma += w * (nu_h + nu_h.transpose());
    }
    Ok(LongRunMatrix { matrix: gamma, block: j })
}

/// Result of the sandwich `gamma^_(tau_j)`; tiny negative values are clamped
/// to zero and flagged.
#[derive(Debug, Clone, Copy)]
pub struct GammaHat {
    pub value: f64,
    pub clamped: bool,
}

/// Delta-rule gradient `(c^XY/c^X, -2, c^XY/c^Y)` at a normalized triple.
fn gradient(c: CovTriple) -> Vector3<f64> {
    Vector3::new(c.xy / c.x, -2.0, c.xy / c.y)
}

/// `gamma^ = (4 c^X_u c^Y_u)^(-1) g Gamma^ g^T`.
pub fn gamma_hat(gamma: &Matrix3<f64>, c_u: CovTriple, block: usize) -> Result<GammaHat> {
    if !(c_u.x > 0.0) || !(c_u.y > 0.0) {
        return Err(Error::NonpositiveDiagonal {
            component: "c_u",
            block: block + 1,
        });
    }
    let g = gradient(c_u);
    let raw = (g.transpose() * gamma * g)[(0, 0)] / (4.0 * c_u.x * c_u.y);
    if raw < 0.0 {
        Ok(GammaHat {
            value: 0.0,
            clamped: true,
        })
    } else {
        Ok(GammaHat {
            value: raw,
            clamped: false,
        })
    }
}

/// Day-by-block panel of centered triples
/// `A^_(t,kappa) = c^_(t,kappa) - c^_(u,kappa) * (daily truncated sum)_t`.
#[derive(Debug, Clone)]
pub struct AHatPanel {
    pub m: usize,
    pub days: usize,
    /// Day-major `T * m` layout.
    pub data: Vec<Vector3<f64>>,
}

impl AHatPanel {
    #[inline]
    pub fn at(&self, t: usize, j: usize) -> &Vector3<f64> {
        &self.data[t * self.m + j]
    }
}

/// Assemble the `A^` series. The X component pairs with the X-only indicator
/// daily sum, XY with the joint-indicator cross sum, Y with the Y-only sum.
pub fn a_hat_series(
    panel: &SpotCovariancePanel,
    daily: &DailyTruncatedRv,
    c_hat: &[CovTriple],
) -> AHatPanel {
    let m = panel.spec.m;
    let days = panel.days();
    let mut data = Vec::with_capacity(days * m);
    for t in 0..days {
        for (j, cu) in c_hat.iter().enumerate() {
            let c = panel.triple(t, j);
            data.push(Vector3::new(
                c.x - cu.x * daily.rv_x[t],
                c.xy - cu.xy * daily.rcv_xy[t],
                c.y - cu.y * daily.rv_y[t],
            ));
        }
    }
    AHatPanel { m, days, data }
}

/// Cross-grid covariance kernel `C^(kappa, tau)` over the included blocks.
///
/// For every grid pair the deflated HAC matrix
/// `Gamma^ = D (x) (v^_0 + sum_h w(h/H) (v^_h + v^_(-h)))` is sandwiched
/// between the delta-rule gradients, with `D_(ab) = 1/(c_bar_a c_bar_b)`. The
/// output is symmetrized as `(C + C^T)/2`.
pub fn covariance_kernel_matrix(
    a_hat: &AHatPanel,
    c_bar: CovTriple,
    c_hat: &[CovTriple],
    included: &[usize],
    cfg: &HacConfig,
) -> Result<DMatrix<f64>> {
    let t_days = a_hat.days;
    let h_t = cfg.lags_for(t_days)?;
    let mm = included.len();
    if mm < 2 {
        return Err(Error::InvalidConfig(
            "covariance kernel needs at least 2 retained blocks".into(),
        ));
    }
    for &j in included {
        if !(c_hat[j].x > 0.0) || !(c_hat[j].y > 0.0) {
            return Err(Error::NonpositiveDiagonal {
                component: "c_u",
                block: j + 1,
            });
        }
    }

    let c_bar_vec = Vector3::new(c_bar.x, c_bar.xy, c_bar.y);
    let deflation =
        Matrix3::from_fn(|r, c| 1.0 / (c_bar_vec[r] * c_bar_vec[c]));
    // Column view per block of the A^ series.
    let column = |j: usize| -> Vec<Vector3<f64>> {
        (0..t_days).map(|t| *a_hat.at(t, j)).collect()
    };
    let cols: Vec<Vec<Vector3<f64>>> = included.iter().map(|&j| column(j)).collect();
    let grads: Vec<Vector3<f64>> = included.iter().map(|&j| gradient(c_hat[j])).collect();
    let scales: Vec<f64> = included
        .iter()
        .map(|&j| (c_hat[j].x * c_hat[j].y).sqrt())
        .collect();

    let mut out = DMatrix::<f64>::zeros(mm, mm);
    for a in 0..mm {
        for b in 0..mm {
            let mut v = lag_product(&cols[a], &cols[b], 0);
            for h in 1..=h_t {
                let w = cfg.kernel.weight(h as f64 / h_t as f64);
                if w == 0.0 {
                    continue;
                }
                // v^_h pairs day t at kappa with day t+h at tau; v^_(-h) is
                // the transpose pairing.
                let fwd = lag_product(&cols[a], &cols[b], h);
                let bwd = lag_product(&cols[b], &cols[a], h).transpose();
                v += w * (fwd + bwd);
            }
            let gamma = v.component_mul(&deflation);
            let sandwich = (grads[a].transpose() * gamma * grads[b])[(0, 0)];
            out[(a, b)] = 0.25 / (scales[a] * scales[b]) * sandwich;
        }
    }
    let sym = (&out + out.transpose()) * 0.5;
    Ok(sym)
}

/// Write the per-block pointwise long-run matrices to CSV: one row per block
/// with the six unique entries and the eigenvalues.
pub fn write_longrun_csv(
    matrices: &[LongRunMatrix],
    taus: &[f64],
    path: &std::path::Path,
    meta: &serde_json::Value,
) -> crate::error::Result<()> {
    use std::io::Write;
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# meta: {}", serde_json::to_string(meta)?)?;
    writeln!(
        file,
        "block,tau,g_xx,g_x_xy,g_x_y,g_xy_xy,g_xy_y,g_yy,eig_1,eig_2,eig_3"
    )?;
    for (lrm, &tau) in matrices.iter().zip(taus) {
        let m = &lrm.matrix;
        let mut eig = lrm.eigenvalues();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        writeln!(
            file,
            "{},{:.6},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            lrm.block + 1,
            tau,
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 2)],
            eig[0],
            eig[1],
            eig[2],
        )?;
    }
    Ok(())
}

/// Write the cross-grid covariance kernel to CSV as (i, j, tau_i, tau_j, value).
pub fn write_kernel_csv(
    kernel: &DMatrix<f64>,
    taus: &[f64],
    path: &std::path::Path,
    meta: &serde_json::Value,
) -> crate::error::Result<()> {
    use std::io::Write;
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "# meta: {}", serde_json::to_string(meta)?)?;
    writeln!(file, "i,j,tau_i,tau_j,c_kernel")?;
    for i in 0..kernel.nrows() {
        for j in 0..kernel.ncols() {
            writeln!(
                file,
                "{},{},{:.6},{:.6},{:.10e}",
                i + 1,
                j + 1,
                taus[i],
                taus[j],
                kernel[(i, j)]
            )?;
        }
    }
    Ok(())
}
