//! Diurnal covariance and correlation curves.
//!
//! The block panel is averaged across days into `c~_u`, normalized by the
//! grand block average `c¯_sv` so that the block mean of the resulting curve
//! is exactly one entrywise, and mapped into the deflated correlation curve
//! `rho^_u = c^_u^XY / sqrt(c^_u^X c^_u^Y)`. The factorization
//! `rho^_u * rho¯_sc = rho~_u` holds identically.
//!
//! `rho^_u` is a deflated ratio, not a correlation: it may stray outside
//! `[-1, 1]` on individual blocks even though the underlying correlation
//! cannot.

use crate::error::{Error, Result};
use crate::spot::{BlockSpec, CovTriple, SpotCovariancePanel};

/// Entrywise day average `c~_(u,tau_j) = (1/T) sum_t c^_(t,tau_j)`.
pub fn time_average_curve(panel: &SpotCovariancePanel) -> Vec<CovTriple> {
    let m = panel.spec.m;
    let t_days = panel.days();
    let mut out = vec![CovTriple::default(); m];
    for t in 0..t_days {
        for (j, acc) in out.iter_mut().enumerate() {
            *acc = *acc + panel.triple(t, j);
        }
    }
    let scale = 1.0 / t_days as f64;
    out.into_iter().map(|c| c.scale(scale)).collect()
}

/// Entrywise block average of the day-averaged curve.
pub fn grand_average(curve: &[CovTriple]) -> CovTriple {
    let m = curve.len();
    curve
        .iter()
        .fold(CovTriple::default(), |acc, &c| acc + c)
        .scale(1.0 / m as f64)
}

/// Hadamard division `c^_u = c~_u (/) c¯_sv`; errors on a zero denominator.
pub fn diurnal_covariance(curve: &[CovTriple], c_bar: CovTriple) -> Result<Vec<CovTriple>> {
    if c_bar.x == 0.0 {
        return Err(Error::ZeroNormalization("X"));
    }
    if c_bar.xy == 0.0 {
        return Err(Error::ZeroNormalization("XY"));
    }
    if c_bar.y == 0.0 {
        return Err(Error::ZeroNormalization("Y"));
    }
    Ok(curve.iter().map(|c| c.hadamard_div(c_bar)).collect())
}

/// Correlation-shaped ratio of a covariance triple; errors on nonpositive
/// diagonal entries.
pub fn correlation_ratio(c: CovTriple, block: usize) -> Result<f64> {
    if !(c.x > 0.0) {
        return Err(Error::NonpositiveDiagonal {
            component: "c_u^X",
            block: block + 1,
        });
    }
    if !(c.y > 0.0) {
        return Err(Error::NonpositiveDiagonal {
            component: "c_u^Y",
            block: block + 1,
        });
    }
    Ok(c.xy / (c.x.sqrt() * c.y.sqrt()))
}

/// Diurnal curves with the normalization scalars.
///
/// Blocks whose day-averaged diagonals are nonpositive (possible only when
/// every increment of the block was truncated on every day) are excluded from
/// the grid; the normalization is then taken over the surviving blocks and
/// the correlation curves carry `NaN` at excluded positions.
#[derive(Debug, Clone)]
pub struct DiurnalCurves {
    pub spec: BlockSpec,
    pub c_tilde: Vec<CovTriple>,
    pub c_bar_sv: CovTriple,
    pub c_hat: Vec<CovTriple>,
    pub rho_tilde: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub rho_bar_sc: f64,
    pub included: Vec<bool>,
}

impl DiurnalCurves {
    pub fn from_panel(panel: &SpotCovariancePanel) -> Result<Self> {
        let spec = panel.spec;
        let c_tilde = time_average_curve(panel);
        let included: Vec<bool> = c_tilde.iter().map(|c| c.x > 0.0 && c.y > 0.0).collect();
        let kept = included.iter().filter(|&&b| b).count();
        if kept == 0 {
            return Err(Error::Other(
                "every block has nonpositive day-averaged variance".into(),
            ));
        }

        let c_bar_sv = c_tilde
            .iter()
            .zip(&included)
            .filter(|(_, &inc)| inc)
            .fold(CovTriple::default(), |acc, (&c, _)| acc + c)
            .scale(1.0 / kept as f64);
        let c_hat = diurnal_covariance(&c_tilde, c_bar_sv)?;

        let rho_bar_sc = correlation_ratio(c_bar_sv, usize::MAX - 1)?;
        let mut rho_tilde = vec![f64::NAN; spec.m];
        let mut rho_hat = vec![f64::NAN; spec.m];
        for j in 0..spec.m {
            if included[j] {
                rho_tilde[j] = correlation_ratio(c_tilde[j], j)?;
                rho_hat[j] = correlation_ratio(c_hat[j], j)?;
            }
        }

        Ok(DiurnalCurves {
            spec,
            c_tilde,
            c_bar_sv,
            c_hat,
            rho_tilde,
            rho_hat,
            rho_bar_sc,
            included,
        })
    }

    pub fn included_blocks(&self) -> Vec<usize> {
        (0..self.spec.m).filter(|&j| self.included[j]).collect()
    }

    pub fn excluded_count(&self) -> usize {
        self.included.iter().filter(|&&b| !b).count()
    }

    pub fn write_csv(&self, path: &std::path::Path, meta: &serde_json::Value) -> Result<()> {
        use std::io::Write;
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "# meta: {}", serde_json::to_string(meta)?)?;
        writeln!(
            file,
            "# c_bar_sv_x: {:.17e}  c_bar_sv_xy: {:.17e}  c_bar_sv_y: {:.17e}  rho_bar_sc: {:.17e}",
            self.c_bar_sv.x, self.c_bar_sv.xy, self.c_bar_sv.y, self.rho_bar_sc
        )?;
        writeln!(
            file,
            "block,tau,midpoint,c_u_x,c_u_xy,c_u_y,rho_u,rho_tilde,included"
        )?;
        for j in 0..self.spec.m {
            writeln!(
                file,
                "{},{:.6},{:.6},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                j + 1,
                self.spec.tau(j),
                self.spec.midpoint(j),
                self.c_hat[j].x,
                self.c_hat[j].xy,
                self.c_hat[j].y,
                self.rho_hat[j],
                self.rho_tilde[j],
                self.included[j] as u8,
            )?;
        }
        Ok(())
    }
}
