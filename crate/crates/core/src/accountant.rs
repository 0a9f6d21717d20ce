//! Rényi-DP guarantees for the statistics-based generator.
//!
//! The unbounded bound is a closed form in `(α, n, d, τ)` with `τ = 4d/σ`,
//! where `σ` is the floor on the smallest covariance eigenvalue. It takes the
//! larger of two branches: `ε_α1` covers adding a record to a dataset of
//! size `n`, `ε_α2` covers removing one from a dataset of size `n + 1`.
//!
//! The bounded bound chains two unbounded hops through the weak triangle
//! inequality and minimizes over the Hölder exponent `p`.
//!
//! All values are in nats.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Grid size for the bounded-mode prescan.
pub const BOUNDED_GRID_POINTS: usize = 512;
/// Each end of the feasible `p` interval is pulled in by this fraction of
/// its width.
pub const BOUNDED_EDGE_MARGIN: f64 = 1e-9;
/// Relative tolerance of the golden-section refinement in `p`.
pub const BOUNDED_REFINE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AccountantError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("conditions violated: {0}")]
    ConditionViolated(ConditionReport),
    #[error("empty order grid")]
    EmptyGrid,
    #[error("no order in the grid satisfies the conditions")]
    AllInfeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Neighbors differ by adding or removing one record.
    Unbounded,
    /// Neighbors differ by replacing one record.
    Bounded,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Unbounded => "unbounded",
            Mode::Bounded => "bounded",
        })
    }
}

/// Inputs shared by every bound. `tau` is always derived from `d` and
/// `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    d: usize,
    n: u64,
    sigma: f64,
    alpha: f64,
    mode: Mode,
}

impl PrivacyParams {
    pub fn new(d: usize, n: u64, sigma: f64, alpha: f64, mode: Mode) -> Result<Self, AccountantError> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        if n == 0 {
            return Err(invalid("n", "dataset size must be at least 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be positive, got {sigma}")));
        }
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must exceed 1, got {alpha}")));
        }
        Ok(Self {
            d,
            n,
            sigma,
            alpha,
            mode,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// `4d / σ`.
    pub fn tau(&self) -> f64 {
        tau(self.d, self.sigma)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self, AccountantError> {
        Self::new(self.d, self.n, self.sigma, alpha, self.mode)
    }
}

pub fn tau(d: usize, sigma: f64) -> f64 {
    4.0 * d as f64 / sigma
}

fn invalid(name: &'static str, reason: impl Into<String>) -> AccountantError {
    AccountantError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// One inequality `lhs < rhs`; `margin = rhs − lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passed: bool,
}

impl ConditionCheck {
    fn less_than(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_owned(),
            lhs,
            rhs,
            margin: rhs - lhs,
            passed: lhs < rhs,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionReport {
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<String> = self
            .failures()
            .map(|c| format!("{} (lhs {:.6}, rhs {:.6})", c.name, c.lhs, c.rhs))
            .collect();
        if failed.is_empty() {
            f.write_str("all conditions hold")
        } else {
            f.write_str(&failed.join("; "))
        }
    }
}

pub const COND_TAU: &str = "n/(n+1) < tau";
pub const COND_ALPHA_SIZE: &str = "alpha < n+1";
pub const COND_ALPHA_TAU: &str = "alpha < n^2/(tau(n+1)-n)";
pub const COND_ADD_LOG: &str = "1 - alpha/(n+1) > 0";
pub const COND_REMOVE_BASE: &str = "1 - tau/n > 0";
pub const COND_REMOVE_DENOM: &str = "n(n+alpha) - alpha(n+1)tau > 0";
pub const COND_REMOVE_LOG: &str = "1 - alpha(n+1)tau/((n+alpha)n) > 0";
pub const COND_BOUNDED: &str = "alpha < c^2/(2c-1)";
pub const COND_BOUNDED_GRID: &str = "feasible p found";

/// Conditions for the unbounded closed form at a real-valued order and size.
pub fn unbounded_conditions(alpha: f64, n: f64, tau: f64) -> ConditionReport {
    let denom = tau * (n + 1.0) - n;
    let alpha_tau_limit = if denom > 0.0 { n * n / denom } else { f64::INFINITY };
    ConditionReport {
        checks: vec![
            ConditionCheck::less_than(COND_TAU, n / (n + 1.0), tau),
            ConditionCheck::less_than(COND_ALPHA_SIZE, alpha, n + 1.0),
            ConditionCheck::less_than(COND_ALPHA_TAU, alpha, alpha_tau_limit),
            ConditionCheck::less_than(COND_ADD_LOG, 0.0, 1.0 - alpha / (n + 1.0)),
            ConditionCheck::less_than(COND_REMOVE_BASE, 0.0, 1.0 - tau / n),
            ConditionCheck::less_than(
                COND_REMOVE_DENOM,
                0.0,
                n * (n + alpha) - alpha * (n + 1.0) * tau,
            ),
            ConditionCheck::less_than(
                COND_REMOVE_LOG,
                0.0,
                1.0 - alpha * (n + 1.0) * tau / ((n + alpha) * n),
            ),
        ],
    }
}

pub fn check_unbounded_conditions(p: &PrivacyParams) -> ConditionReport {
    unbounded_conditions(p.alpha, p.n as f64, p.tau())
}

/// The two branches of the unbounded bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnboundedBranches {
    /// Adding a record to a dataset of size `n`.
    pub eps_add: f64,
    /// Removing a record from a dataset of size `n + 1`.
    pub eps_remove: f64,
}

impl UnboundedBranches {
    pub fn max(&self) -> f64 {
        self.eps_add.max(self.eps_remove)
    }
}

/// Evaluates both branches of the unbounded closed form, or returns the
/// condition report when any guard fails.
pub fn unbounded_branches(
    alpha: f64,
    n: f64,
    d: usize,
    tau: f64,
) -> Result<UnboundedBranches, ConditionReport> {
    let report = unbounded_conditions(alpha, n, tau);
    if !report.all_passed() {
        return Err(report);
    }
    let d = d as f64;
    let am1 = alpha - 1.0;
    let n1 = n + 1.0;

    let eps_add = {
        let quad = 0.5 * alpha * tau / (n1 * (n1 - alpha));
        // log(n/(n+1)) and log(1 − α/(n+1))
        let logs = -alpha * d / (2.0 * am1) * (1.0 / n).ln_1p()
            - d / (2.0 * am1) * (-alpha / n1).ln_1p();
        let correction = ((alpha * n * tau / (n1 * (n1 - alpha))).ln_1p()
            - alpha * (tau / n1).ln_1p())
        .min(0.0);
        quad + logs - correction / (2.0 * am1)
    };

    let eps_remove = {
        let quad = 0.5 * alpha * tau / (n * (n + alpha) - alpha * n1 * tau);
        let logs = alpha * d / (2.0 * am1) * (1.0 / n).ln_1p() - d / (2.0 * am1) * (alpha / n).ln_1p();
        let correction = ((-alpha * n1 * tau / ((n + alpha) * n)).ln_1p()
            - alpha * (-tau / n).ln_1p())
        .min(0.0);
        quad + logs - correction / (2.0 * am1)
    };

    Ok(UnboundedBranches {
        eps_add,
        eps_remove,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominant {
    /// `ε_α1`.
    EpsAlpha1,
    /// `ε_α2`.
    EpsAlpha2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    Unbounded {
        branches: UnboundedBranches,
        dominant: Dominant,
    },
    Bounded {
        /// Minimizing Hölder exponent.
        p_opt: f64,
        /// `min{n+1, n²/(τ(n+1)−n)}`.
        c: f64,
        /// Unbounded bound at order `pα`, size `n`.
        first_hop: f64,
        /// Unbounded bound at order `(pα−1)/(p−1)`, size `n+1`.
        second_hop: f64,
        /// Grid points where both hops were admissible.
        feasible_grid_points: usize,
    },
}

/// Per-record RDP bound for one output record.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub epsilon: f64,
    pub branch: Branch,
    pub conditions: ConditionReport,
}

impl BoundResult {
    pub fn p_opt(&self) -> Option<f64> {
        match self.branch {
            Branch::Bounded { p_opt, .. } => Some(p_opt),
            Branch::Unbounded { .. } => None,
        }
    }

    pub fn c(&self) -> Option<f64> {
        match self.branch {
            Branch::Bounded { c, .. } => Some(c),
            Branch::Unbounded { .. } => None,
        }
    }
}

/// Unbounded-neighbor guarantee for a single output record.
pub fn eps_unbounded(p: &PrivacyParams) -> Result<BoundResult, AccountantError> {
    let branches = unbounded_branches(p.alpha, p.n as f64, p.d, p.tau())
        .map_err(AccountantError::ConditionViolated)?;
    let dominant = if branches.eps_add >= branches.eps_remove {
        Dominant::EpsAlpha1
    } else {
        Dominant::EpsAlpha2
    };
    Ok(BoundResult {
        epsilon: branches.max(),
        branch: Branch::Unbounded { branches, dominant },
        conditions: check_unbounded_conditions(p),
    })
}

/// `min{n+1, n²/(τ(n+1)−n)}`.
pub fn c_constant(n: f64, tau: f64) -> f64 {
    let denom = tau * (n + 1.0) - n;
    if denom > 0.0 {
        (n + 1.0).min(n * n / denom)
    } else {
        n + 1.0
    }
}

/// Largest order admitted in bounded mode, `c²/(2c−1)`.
pub fn bounded_order_limit(c: f64) -> f64 {
    c * c / (2.0 * c - 1.0)
}

/// The bounded-mode objective at Hölder exponent `p`, or `None` when either
/// unbounded hop is outside its conditions.
pub fn bounded_objective(alpha: f64, p: f64, n: f64, d: usize, tau: f64) -> Option<(f64, f64, f64)> {
    let first = unbounded_branches(p * alpha, n, d, tau).ok()?.max();
    let second = unbounded_branches((p * alpha - 1.0) / (p - 1.0), n + 1.0, d, tau)
        .ok()?
        .max();
    let value = (alpha - 1.0 / p) / (alpha - 1.0) * first + second;
    value.is_finite().then_some((value, first, second))
}

/// Bounded-neighbor guarantee for a single output record.
pub fn eps_bounded(p: &PrivacyParams) -> Result<BoundResult, AccountantError> {
    let n = p.n as f64;
    let tau = p.tau();
    let alpha = p.alpha;
    let c = c_constant(n, tau);
    let limit = bounded_order_limit(c);
    let mut report = ConditionReport {
        checks: vec![ConditionCheck::less_than(COND_BOUNDED, alpha, limit)],
    };
    if !(c > 1.0 && alpha < limit) {
        report.checks[0].passed = false;
        return Err(AccountantError::ConditionViolated(report));
    }

    let lo = (c - 1.0) / (c - alpha);
    let hi = c / alpha;
    let width = hi - lo;
    let (lo, hi) = (lo + BOUNDED_EDGE_MARGIN * width, hi - BOUNDED_EDGE_MARGIN * width);
    let step = (hi - lo) / (BOUNDED_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..BOUNDED_GRID_POINTS)
        .map(|i| lo + step * i as f64)
        .collect();

    let mut feasible = 0;
    let mut best: Option<(usize, f64)> = None;
    for (i, &pp) in grid.iter().enumerate() {
        if let Some((v, _, _)) = bounded_objective(alpha, pp, n, p.d, tau) {
            feasible += 1;
            // strict comparison keeps the smallest p on ties
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    report.checks.push(ConditionCheck {
        name: COND_BOUNDED_GRID.to_owned(),
        lhs: 0.0,
        rhs: feasible as f64,
        margin: feasible as f64,
        passed: feasible > 0,
    });
    let Some((best_index, _)) = best else {
        return Err(AccountantError::ConditionViolated(report));
    };

    let a = grid[best_index.saturating_sub(1)];
    let b = grid[(best_index + 1).min(grid.len() - 1)];
    let objective = |pp: f64| {
        bounded_objective(alpha, pp, n, p.d, tau).map_or(f64::INFINITY, |(v, _, _)| v)
    };
    let refined = golden_section_min(objective, a, b, BOUNDED_REFINE_TOLERANCE);
    let grid_p = grid[best_index];
    let p_opt = if objective(refined) < objective(grid_p) {
        refined
    } else {
        grid_p
    };
    let (epsilon, first_hop, second_hop) =
        bounded_objective(alpha, p_opt, n, p.d, tau).expect("p_opt was feasible");

    Ok(BoundResult {
        epsilon,
        branch: Branch::Bounded {
            p_opt,
            c,
            first_hop,
            second_hop,
            feasible_grid_points: feasible,
        },
        conditions: report,
    })
}

/// Dispatches on `p.mode()`.
pub fn epsilon(p: &PrivacyParams) -> Result<BoundResult, AccountantError> {
    match p.mode {
        Mode::Unbounded => eps_unbounded(p),
        Mode::Bounded => eps_bounded(p),
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()) * 0.5 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// RDP of `k` sequential releases at the same order.
pub fn compose(eps_single: f64, k: u64) -> f64 {
    debug_assert!(eps_single >= 0.0);
    k as f64 * eps_single
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpGuarantee {
    pub epsilon_dp: f64,
    pub delta: f64,
    pub alpha_used: f64,
    pub composed_over: u64,
}

/// `(ε + log(1/δ)/(α−1), δ)`-DP from `(α, ε)`-RDP.
pub fn rdp_to_dp(alpha: f64, eps: f64, delta: f64) -> Result<DpGuarantee, AccountantError> {
    rdp_to_dp_composed(alpha, eps, delta, 1)
}

/// As [`rdp_to_dp`], recording that `eps` is already composed over
/// `composed_over` releases.
pub fn rdp_to_dp_composed(
    alpha: f64,
    eps: f64,
    delta: f64,
    composed_over: u64,
) -> Result<DpGuarantee, AccountantError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must exceed 1, got {alpha}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be non-negative, got {eps}")));
    }
    Ok(DpGuarantee {
        epsilon_dp: eps + (1.0 / delta).ln() / (alpha - 1.0),
        delta,
        alpha_used: alpha,
        composed_over,
    })
}

/// Mechanism description without the order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseParams {
    pub d: usize,
    pub n: u64,
    pub sigma: f64,
    pub mode: Mode,
}

impl BaseParams {
    pub fn at(&self, alpha: f64) -> Result<PrivacyParams, AccountantError> {
        PrivacyParams::new(self.d, self.n, self.sigma, alpha, self.mode)
    }
}

/// Smallest `(ε, δ)`-DP epsilon over a grid of orders, with the RDP bound
/// composed over `composed_over` output records. Ties go to the earlier
/// grid entry; infeasible orders are skipped.
pub fn best_dp_over_alpha(
    base: &BaseParams,
    grid: &[f64],
    delta: f64,
    composed_over: u64,
) -> Result<DpGuarantee, AccountantError> {
    if grid.is_empty() {
        return Err(AccountantError::EmptyGrid);
    }
    let mut best: Option<DpGuarantee> = None;
    for &alpha in grid {
        let params = base.at(alpha)?;
        let bound = match epsilon(&params) {
            Ok(b) => b,
            Err(AccountantError::ConditionViolated(_)) => continue,
            Err(e) => return Err(e),
        };
        let g = rdp_to_dp_composed(alpha, compose(bound.epsilon, composed_over), delta, composed_over)?;
        if best.is_none_or(|b| g.epsilon_dp < b.epsilon_dp) {
            best = Some(g);
        }
    }
    best.ok_or(AccountantError::AllInfeasible)
}

/// Flat JSON record for a computed bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub alpha: f64,
    pub n: u64,
    pub d: usize,
    pub sigma: f64,
    pub tau: f64,
    pub mode: Mode,
    pub epsilon_single: f64,
    pub epsilon_composed: f64,
    pub composed_over: u64,
    /// `eps_alpha1`, `eps_alpha2` or `bounded`.
    pub branch: String,
    pub eps_alpha1: Option<f64>,
    pub eps_alpha2: Option<f64>,
    pub p_opt: Option<f64>,
    pub c: Option<f64>,
    pub conditions: ConditionReport,
}

impl BoundSummary {
    pub fn new(params: &PrivacyParams, result: &BoundResult, composed_over: u64) -> Self {
        let (branch, eps_alpha1, eps_alpha2) = match &result.branch {
            Branch::Unbounded { branches, dominant } => (
                match dominant {
                    Dominant::EpsAlpha1 => "eps_alpha1",
                    Dominant::EpsAlpha2 => "eps_alpha2",
                },
                Some(branches.eps_add),
                Some(branches.eps_remove),
            ),
            Branch::Bounded { .. } => ("bounded", None, None),
        };
        Self {
            alpha: params.alpha(),
            n: params.n(),
            d: params.d(),
            sigma: params.sigma(),
            tau: params.tau(),
            mode: params.mode(),
            epsilon_single: result.epsilon,
            epsilon_composed: compose(result.epsilon, composed_over),
            composed_over,
            branch: branch.to_owned(),
            eps_alpha1,
            eps_alpha2,
            p_opt: result.p_opt(),
            c: result.c(),
            conditions: result.conditions.clone(),
        }
    }
}
