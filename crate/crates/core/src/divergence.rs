//! Closed-form Rényi divergence between multivariate normals.
//!
//! For `α > 1` and `T_α = αΣ₁⁻¹ + (1−α)Σ₂⁻¹` positive-definite,
//!
//! ```text
//! D_α(N(μ₁,Σ₁) ‖ N(μ₂,Σ₂)) = (α/2)·L1 − log(L2) / (2(α−1))
//! L1 = (μ₁−μ₂)ᵗ Σ_α⁻¹ (μ₁−μ₂)
//! L2 = |Σ_α| / (|Σ₁|^{1−α} |Σ₂|^α),      Σ_α = (1−α)Σ₁ + αΣ₂
//! ```
//!
//! `L2` is only ever handled as a logarithm since `|Σ|` underflows quickly
//! for small-variance data.

use thiserror::Error;

use crate::dataset::GaussianParams;
use crate::symmat::{dot, MatrixError, SymmetricMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivergenceError {
    #[error("order must satisfy alpha > 1, got {0}")]
    InvalidOrder(f64),
    #[error("closed form inapplicable: alpha*inv(S1) + (1-alpha)*inv(S2) is not positive-definite (min eigenvalue {t_alpha_min:e})")]
    ClosedFormInapplicable { t_alpha_min: f64, sigma_alpha_min: f64 },
    #[error("input covariance is not positive-definite: {0}")]
    InputNotPositiveDefinite(MatrixError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn check_order(alpha: f64) -> Result<(), DivergenceError> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(DivergenceError::InvalidOrder(alpha))
    }
}

/// `(1−α)Σ₁ + αΣ₂`; not necessarily positive-definite.
pub fn sigma_alpha(
    s1: &SymmetricMatrix,
    s2: &SymmetricMatrix,
    alpha: f64,
) -> Result<SymmetricMatrix, DivergenceError> {
    check_order(alpha)?;
    Ok(s1.linear_combination(1.0 - alpha, s2, alpha)?)
}

/// `αΣ₁⁻¹ + (1−α)Σ₂⁻¹`.
pub fn t_alpha(
    s1: &SymmetricMatrix,
    s2: &SymmetricMatrix,
    alpha: f64,
) -> Result<SymmetricMatrix, DivergenceError> {
    check_order(alpha)?;
    let i1 = s1
        .inverse()
        .map_err(DivergenceError::InputNotPositiveDefinite)?;
    let i2 = s2
        .inverse()
        .map_err(DivergenceError::InputNotPositiveDefinite)?;
    Ok(i1.linear_combination(alpha, &i2, 1.0 - alpha)?)
}

/// Both positive-definiteness tests that gate the closed form.
///
/// `T_α = Σ₁⁻¹ Σ_α Σ₂⁻¹`, so the two verdicts must coincide; disagreement
/// means the configuration sits within round-off of the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityCheck {
    pub t_alpha_min: f64,
    pub sigma_alpha_min: f64,
    pub t_alpha_pd: bool,
    pub sigma_alpha_pd: bool,
}

impl PositivityCheck {
    pub fn agree(&self) -> bool {
        self.t_alpha_pd == self.sigma_alpha_pd
    }
}

pub fn positivity(
    s1: &SymmetricMatrix,
    s2: &SymmetricMatrix,
    alpha: f64,
) -> Result<PositivityCheck, DivergenceError> {
    let t = t_alpha(s1, s2, alpha)?;
    let sa = sigma_alpha(s1, s2, alpha)?;
    let t_alpha_min = t.min_eigenvalue()?;
    let sigma_alpha_min = sa.min_eigenvalue()?;
    Ok(PositivityCheck {
        t_alpha_min,
        sigma_alpha_min,
        t_alpha_pd: t_alpha_min > t.pd_tolerance(),
        sigma_alpha_pd: sigma_alpha_min > sa.pd_tolerance(),
    })
}

/// Whether `T_α` is positive-definite.
pub fn t_alpha_positive(
    s1: &SymmetricMatrix,
    s2: &SymmetricMatrix,
    alpha: f64,
) -> Result<bool, DivergenceError> {
    Ok(positivity(s1, s2, alpha)?.t_alpha_pd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceTerms {
    pub sigma_alpha: SymmetricMatrix,
    pub t_alpha_pd: bool,
    /// Quadratic mean-shift term.
    pub l1: f64,
    /// `log L2`.
    pub log_l2: f64,
    pub value: f64,
}

impl DivergenceTerms {
    pub fn l2(&self) -> f64 {
        self.log_l2.exp()
    }
}

/// `D_α(P1 ‖ P2)` in nats.
pub fn renyi_gaussian(
    p1: &GaussianParams,
    p2: &GaussianParams,
    alpha: f64,
) -> Result<DivergenceTerms, DivergenceError> {
    check_order(alpha)?;
    if p1.dim() != p2.dim() {
        return Err(MatrixError::DimensionMismatch {
            left: p1.dim(),
            right: p2.dim(),
        }
        .into());
    }
    let log_det1 = p1
        .covariance
        .log_determinant()
        .map_err(DivergenceError::InputNotPositiveDefinite)?;
    let log_det2 = p2
        .covariance
        .log_determinant()
        .map_err(DivergenceError::InputNotPositiveDefinite)?;

    let check = positivity(&p1.covariance, &p2.covariance, alpha)?;
    if !(check.t_alpha_pd && check.sigma_alpha_pd) {
        return Err(DivergenceError::ClosedFormInapplicable {
            t_alpha_min: check.t_alpha_min,
            sigma_alpha_min: check.sigma_alpha_min,
        });
    }

    let sa = sigma_alpha(&p1.covariance, &p2.covariance, alpha)?;
    let diff: Vec<f64> = p1.mean.iter().zip(&p2.mean).map(|(a, b)| a - b).collect();
    let l1 = dot(&diff, &sa.solve(&diff)?);
    let log_l2 = sa.log_determinant()? - (1.0 - alpha) * log_det1 - alpha * log_det2;
    let value = 0.5 * alpha * l1 - log_l2 / (2.0 * (alpha - 1.0));
    Ok(DivergenceTerms {
        sigma_alpha: sa,
        t_alpha_pd: true,
        l1,
        log_l2,
        value,
    })
}
