//! Independent numerical checks of the closed forms and bounds.
//!
//! Nothing in here is used to produce a guarantee. The quadrature routine
//! evaluates the Rényi integral directly, the lemma checks compare exact
//! divergence terms against their analytic bounds, and the worst-case
//! search tries hard to find a neighbor pair whose exact divergence beats
//! the unbounded bound. A search that finds nothing is evidence, not proof.

use serde::Serialize;
use thiserror::Error;

use crate::accountant::{self, ConditionReport, UnboundedBranches};
use crate::dataset::{Dataset, DatasetError, Edit, GaussianParams, NeighborSign};
use crate::divergence::{self, renyi_gaussian, DivergenceError};
use crate::mechanism::SeededRng;
use crate::symmat::SymmetricMatrix;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integral did not converge: {0}")]
    NonConvergent(String),
    #[error("conditions violated: {0}")]
    ConditionViolated(ConditionReport),
    #[error("dataset minimum eigenvalue {min_eigenvalue:e} is below sigma = {sigma}")]
    NotInFloor { min_eigenvalue: f64, sigma: f64 },
    #[error("no dataset with minimum eigenvalue >= {sigma} after {attempts} draws")]
    BaseGeneration { sigma: f64, attempts: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBINTERVALS: usize = 20_000;

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with global absolute error
/// target `abs_tol`. Intervals are bisected largest-error first.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<f64, OracleError> {
    let mut pieces = vec![{
        let (v, e) = gauss_kronrod(&f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(OracleError::NonConvergent(format!(
                "integrand is not finite on [{a}, {b}]"
            )));
        }
        if err <= abs_tol {
            return Ok(total);
        }
        if pieces.len() >= MAX_SUBINTERVALS {
            return Err(OracleError::NonConvergent(format!(
                "error estimate {err:e} after {} subintervals",
                pieces.len()
            )));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (v, e) = gauss_kronrod(&f, l, h);
            pieces.push((l, h, v, e));
        }
    }
}

fn ln_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (std::f64::consts::TAU * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

/// `D_α(P1 ‖ P2)` for one-dimensional normals by direct integration of
/// `P1^α P2^{1−α}`.
pub fn quadrature_renyi_1d(
    p1: &GaussianParams,
    p2: &GaussianParams,
    alpha: f64,
) -> Result<f64, OracleError> {
    if p1.dim() != 1 || p2.dim() != 1 {
        return Err(OracleError::InvalidInput(
            "quadrature is one-dimensional".into(),
        ));
    }
    if !(alpha > 1.0) {
        return Err(OracleError::InvalidInput(format!(
            "alpha must exceed 1, got {alpha}"
        )));
    }
    let (m1, v1) = (p1.mean[0], p1.covariance.get(0, 0));
    let (m2, v2) = (p2.mean[0], p2.covariance.get(0, 0));
    if !(v1 > 0.0 && v2 > 0.0) {
        return Err(OracleError::InvalidInput("variances must be positive".into()));
    }
    let log_integrand =
        |x: f64| alpha * ln_normal_pdf(x, m1, v1) + (1.0 - alpha) * ln_normal_pdf(x, m2, v2);

    let spread = 40.0 * v1.sqrt().max(v2.sqrt());
    let mut lo = m1.min(m2) - spread;
    let mut hi = m1.max(m2) + spread;
    // When the integrand decays it is a scaled normal; widen the window to
    // hold its peak and factor the peak value out.
    let precision = alpha / v1 + (1.0 - alpha) / v2;
    if !(precision > 0.0) {
        return Err(OracleError::NonConvergent(
            "integrand does not decay in the tails".into(),
        ));
    }
    let peak = (alpha * m1 / v1 + (1.0 - alpha) * m2 / v2) / precision;
    let width = 40.0 / precision.sqrt();
    lo = lo.min(peak - width);
    hi = hi.max(peak + width);
    let log_peak = log_integrand(peak);
    let integrand = |x: f64| (log_integrand(x) - log_peak).exp();

    for end in [lo, hi] {
        let v = integrand(end);
        if !(v.is_finite() && v <= 1e-300) {
            return Err(OracleError::NonConvergent(format!(
                "integrand does not decay (relative value {v:e} at x = {end})"
            )));
        }
    }
    // The scaled integral is about sqrt(2π/precision).
    let tol = 1e-13 * (std::f64::consts::TAU / precision).sqrt();
    let integral = integrate_adaptive(integrand, lo, peak, 0.5 * tol)?
        + integrate_adaptive(integrand, peak, hi, 0.5 * tol)?;
    Ok((log_peak + integral.ln()) / (alpha - 1.0))
}

/// Exact divergence terms next to their analytic bounds for one
/// `(D1, x, s)` configuration, using `|D1| = n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub n: usize,
    pub sign: NeighborSign,
    pub alpha: f64,
    pub sigma: f64,
    /// Largest deviation of the mean-shift identity.
    pub mean_identity_residual: f64,
    /// Largest deviation of the rank-one covariance identity.
    pub covariance_identity_residual: f64,
    pub sigma_alpha_min_eigenvalue: f64,
    pub t_alpha_min_eigenvalue: f64,
    pub positive_definite: bool,
    pub l1: f64,
    pub l1_bound: f64,
    pub log_l2: f64,
    pub log_l2_bound: f64,
    /// `log L2` recomputed from the rank-one eigenvalue alone.
    pub log_l2_from_lambda: f64,
    pub lambda: f64,
    pub lambda_range: (f64, f64),
}

impl LemmaReport {
    pub fn identities_hold(&self, tol: f64) -> bool {
        self.mean_identity_residual <= tol && self.covariance_identity_residual <= tol
    }

    pub fn l1_within_bound(&self) -> bool {
        self.l1 <= self.l1_bound * (1.0 + 1e-12) + 1e-15
    }

    pub fn l2_within_bound(&self) -> bool {
        self.log_l2 >= self.log_l2_bound - 1e-12 * (1.0 + self.log_l2_bound.abs())
    }

    pub fn lambda_in_range(&self) -> bool {
        let (lo, hi) = self.lambda_range;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        self.lambda >= lo - slack && self.lambda <= hi + slack
    }

    pub fn passed(&self) -> bool {
        self.identities_hold(1e-10)
            && self.positive_definite
            && self.l1_within_bound()
            && self.l2_within_bound()
            && self.lambda_in_range()
    }
}

/// Conditions under which `T_α` is guaranteed positive-definite for a base
/// dataset of size `n`.
pub fn positivity_conditions(alpha: f64, n: f64, tau: f64) -> ConditionReport {
    use accountant::ConditionCheck;
    let denom = tau * n - (n - 1.0);
    let limit = if denom > 0.0 {
        (n - 1.0) * (n - 1.0) / denom
    } else {
        f64::INFINITY
    };
    let check = |name: &str, lhs: f64, rhs: f64| ConditionCheck {
        name: name.to_owned(),
        lhs,
        rhs,
        margin: rhs - lhs,
        passed: lhs < rhs,
    };
    ConditionReport {
        checks: vec![
            check("(n-1)/n < tau", (n - 1.0) / n, tau),
            check("alpha < n+1", alpha, n + 1.0),
            check("alpha < (n-1)^2/(tau n - (n-1))", alpha, limit),
        ],
    }
}

/// Analytic upper bound on the mean-shift term.
pub fn l1_bound(alpha: f64, n: f64, tau: f64, sign: NeighborSign) -> f64 {
    match sign {
        NeighborSign::Add => tau / ((n + 1.0) * (n + 1.0 - alpha)),
        NeighborSign::Remove => tau / ((n - 1.0) * (n - 1.0 + alpha) - alpha * n * tau),
    }
}

/// Analytic lower bound on `log L2`; `-inf` when the bound degenerates.
pub fn log_l2_bound(alpha: f64, n: f64, d: usize, tau: f64, sign: NeighborSign) -> f64 {
    let s = sign.value();
    let d = d as f64;
    let ns = n + s;
    let log_a = d * (-s * alpha / ns).ln_1p() - alpha * d * (n / ns).ln();
    let numerator = 1.0 + alpha * n * s * tau / ((ns - s * alpha) * ns);
    let base = 1.0 + s * tau / ns;
    if numerator <= 0.0 || base <= 0.0 {
        return f64::NEG_INFINITY;
    }
    log_a + (numerator.ln() - alpha * base.ln()).min(0.0)
}

fn log_l2_from_lambda(alpha: f64, n: f64, d: usize, lambda: f64, sign: NeighborSign) -> f64 {
    let s = sign.value();
    let d = d as f64;
    let ns = n + s;
    let log_a = d * (-s * alpha / ns).ln_1p() - alpha * d * (n / ns).ln();
    log_a + (ns / (ns - s * alpha) * alpha * lambda).ln_1p() - alpha * (ns / n * lambda).ln_1p()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Checks the moment identities, `T_α` positivity and the `L1`/`L2`
/// bounds for one neighbor of `d1`. For `Remove`, `x` must be a record of
/// `d1`.
pub fn lemma_bounds(
    d1: &Dataset,
    x: &[f64],
    sign: NeighborSign,
    alpha: f64,
    sigma: f64,
) -> Result<LemmaReport, OracleError> {
    let floor = d1.in_sigma_floor(sigma)?;
    if !floor.member {
        return Err(OracleError::NotInFloor {
            min_eigenvalue: floor.min_eigenvalue,
            sigma,
        });
    }
    let n = d1.len() as f64;
    let dim = d1.dim();
    let tau = accountant::tau(dim, sigma);
    let conditions = positivity_conditions(alpha, n, tau);
    if !conditions.all_passed() {
        return Err(OracleError::ConditionViolated(conditions));
    }

    let d2 = match sign {
        NeighborSign::Add => d1.neighbor(&Edit::Add(x.to_vec()))?,
        NeighborSign::Remove => {
            let index = d1
                .records()
                .iter()
                .position(|r| r.as_slice() == x)
                .ok_or(DatasetError::NotARecord)?;
            d1.neighbor(&Edit::Remove(index))?
        }
    };
    let delta = d1.neighbor_delta(x, sign)?;
    let p1 = d1.mean_cov()?;
    let p2 = d2.mean_cov()?;

    let direct_shift: Vec<f64> = p2.mean.iter().zip(&p1.mean).map(|(a, b)| a - b).collect();
    let direct_rank_one = p2
        .covariance
        .linear_combination(1.0, &p1.covariance, -n / (n + sign.value()))
        .map_err(DivergenceError::from)?;

    let check = divergence::positivity(&p1.covariance, &p2.covariance, alpha)?;
    let terms = renyi_gaussian(&p1, &p2, alpha)?;

    Ok(LemmaReport {
        n: d1.len(),
        sign,
        alpha,
        sigma,
        mean_identity_residual: max_abs_diff(&delta.mean_shift, &direct_shift),
        covariance_identity_residual: max_abs_diff(
            delta.rank_one.as_row_major(),
            direct_rank_one.as_row_major(),
        ),
        sigma_alpha_min_eigenvalue: check.sigma_alpha_min,
        t_alpha_min_eigenvalue: check.t_alpha_min,
        positive_definite: check.t_alpha_pd && check.sigma_alpha_pd,
        l1: terms.l1,
        l1_bound: l1_bound(alpha, n, tau, sign),
        log_l2: terms.log_l2,
        log_l2_bound: log_l2_bound(alpha, n, dim, tau, sign),
        log_l2_from_lambda: log_l2_from_lambda(alpha, n, dim, delta.lambda, sign),
        lambda: delta.lambda,
        lambda_range: delta.lambda_range(dim, sigma),
    })
}

const BASE_ATTEMPTS: usize = 10_000;

/// Draws `n` records uniformly in `[-1, 1]^d`, redrawing the whole dataset
/// until its covariance clears `sigma`. Returns the dataset and the number
/// of rejected draws.
pub fn random_base_dataset(
    d: usize,
    n: usize,
    sigma: f64,
    rng: &mut SeededRng,
) -> Result<(Dataset, usize), OracleError> {
    for attempt in 0..BASE_ATTEMPTS {
        let records = (0..n)
            .map(|_| (0..d).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let data = Dataset::new(d, records)?;
        if data.in_sigma_floor(sigma)?.member {
            return Ok((data, attempt));
        }
    }
    Err(OracleError::BaseGeneration {
        sigma,
        attempts: BASE_ATTEMPTS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub sign: NeighborSign,
    pub trials: usize,
    pub seed: u64,
}

pub const HILL_CLIMB_STEP: f64 = 0.01;
pub const HILL_CLIMB_ITERATIONS: usize = 200;
pub const MAX_CORNER_DIM: usize = 10;

/// Outcome of a worst-case neighbor search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub sign: NeighborSign,
    pub max_divergence_found: f64,
    pub argmax_record: Vec<f64>,
    /// The branch of the unbounded bound matching `sign`.
    pub theorem_bound: f64,
    /// Worst divergence in the opposite direction over the same pairs.
    pub reverse_max_divergence: f64,
    pub reverse_bound: f64,
    pub trials: usize,
    /// Candidates actually evaluated (corners, random and hill-climb).
    pub evaluated: usize,
    /// Candidates dropped because the first dataset fell below `sigma`.
    pub skipped: usize,
    /// Candidates where the closed form did not apply.
    pub inapplicable: usize,
    pub base_rejections: usize,
    pub seed: u64,
    /// `min(bound − max found)` over both directions.
    pub margin: f64,
    pub passed: bool,
}

/// Runs [`worst_case_search_on`] with a random base drawn from `spec.seed`.
pub fn worst_case_search(spec: &SearchSpec) -> Result<SearchReport, OracleError> {
    let mut rng = SeededRng::new(spec.seed);
    let (base, rejections) = random_base_dataset(spec.d, spec.n, spec.sigma, &mut rng)?;
    let mut report = worst_case_search_on(&base, spec, &mut rng)?;
    report.base_rejections = rejections;
    Ok(report)
}

/// Searches for the record `x` that maximizes the divergence between the
/// generator's outputs on `base` and `base ∪ {x}`.
///
/// With `Add`, the first argument of the divergence is `base` (size `n`)
/// and the bound is `ε_α1`. With `Remove`, it is `base ∪ {x}` (size
/// `n + 1`) and the bound is `ε_α2`. The opposite direction of every pair
/// is checked against the other branch.
pub fn worst_case_search_on(
    base: &Dataset,
    spec: &SearchSpec,
    rng: &mut SeededRng,
) -> Result<SearchReport, OracleError> {
    let d = base.dim();
    let n = base.len() as f64;
    let tau = accountant::tau(d, spec.sigma);
    let bounds: UnboundedBranches = accountant::unbounded_branches(spec.alpha, n, d, tau)
        .map_err(OracleError::ConditionViolated)?;
    let floor = base.in_sigma_floor(spec.sigma)?;
    if !floor.member {
        return Err(OracleError::NotInFloor {
            min_eigenvalue: floor.min_eigenvalue,
            sigma: spec.sigma,
        });
    }
    let small = base.mean_cov()?;
    let (bound, reverse_bound) = match spec.sign {
        NeighborSign::Add => (bounds.eps_add, bounds.eps_remove),
        NeighborSign::Remove => (bounds.eps_remove, bounds.eps_add),
    };

    let mut state = SearchState {
        best: f64::NEG_INFINITY,
        best_x: vec![0.0; d],
        reverse_best: f64::NEG_INFINITY,
        evaluated: 0,
        skipped: 0,
        inapplicable: 0,
    };

    // Returns the forward divergence, or None when the pair is not admissible.
    let evaluate = |x: &[f64], state: &mut SearchState| -> Result<Option<f64>, OracleError> {
        state.evaluated += 1;
        let large_set = base.neighbor(&Edit::Add(x.to_vec()))?;
        let large = large_set.mean_cov()?;
        let large_in_floor = large.covariance.min_eigenvalue().map_err(DatasetError::from)? >= spec.sigma;
        let (first, second, first_ok, second_ok) = match spec.sign {
            NeighborSign::Add => (&small, &large, true, large_in_floor),
            NeighborSign::Remove => (&large, &small, large_in_floor, true),
        };
        if second_ok {
            match renyi_gaussian(second, first, spec.alpha) {
                Ok(t) => state.reverse_best = state.reverse_best.max(t.value),
                Err(DivergenceError::ClosedFormInapplicable { .. }) => state.inapplicable += 1,
                Err(e) => return Err(e.into()),
            }
        }
        if !first_ok {
            state.skipped += 1;
            return Ok(None);
        }
        match renyi_gaussian(first, second, spec.alpha) {
            Ok(t) => {
                if t.value > state.best {
                    state.best = t.value;
                    state.best_x = x.to_vec();
                }
                Ok(Some(t.value))
            }
            Err(DivergenceError::ClosedFormInapplicable { .. }) => {
                state.inapplicable += 1;
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    };

    if d <= MAX_CORNER_DIM {
        for mask in 0u32..(1 << d) {
            let x: Vec<f64> = (0..d)
                .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            evaluate(&x, &mut state)?;
        }
    }
    for _ in 0..spec.trials {
        let x: Vec<f64> = (0..d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        evaluate(&x, &mut state)?;
    }
    if state.best.is_finite() {
        let mut current = state.best_x.clone();
        let mut current_value = state.best;
        for _ in 0..HILL_CLIMB_ITERATIONS {
            let mut step_best: Option<(Vec<f64>, f64)> = None;
            for i in 0..d {
                for dir in [-1.0, 1.0] {
                    let mut y = current.clone();
                    y[i] = (y[i] + dir * HILL_CLIMB_STEP).clamp(-1.0, 1.0);
                    if y[i] == current[i] {
                        continue;
                    }
                    if let Some(v) = evaluate(&y, &mut state)? {
                        if v > current_value && step_best.as_ref().is_none_or(|(_, b)| v > *b) {
                            step_best = Some((y, v));
                        }
                    }
                }
            }
            match step_best {
                Some((y, v)) => {
                    current = y;
                    current_value = v;
                }
                None => break,
            }
        }
    }

    let forward_margin = bound - state.best.max(0.0);
    let reverse_margin = reverse_bound - state.reverse_best.max(0.0);
    let margin = forward_margin.min(reverse_margin);
    Ok(SearchReport {
        sign: spec.sign,
        max_divergence_found: state.best,
        argmax_record: state.best_x,
        theorem_bound: bound,
        reverse_max_divergence: state.reverse_best,
        reverse_bound,
        trials: spec.trials,
        evaluated: state.evaluated,
        skipped: state.skipped,
        inapplicable: state.inapplicable,
        base_rejections: 0,
        seed: spec.seed,
        margin,
        passed: margin >= 0.0 && state.inapplicable == 0 && state.best.is_finite(),
    })
}

struct SearchState {
    best: f64,
    best_x: Vec<f64>,
    reverse_best: f64,
    evaluated: usize,
    skipped: usize,
    inapplicable: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivitySweepReport {
    pub inside_samples: usize,
    pub inside_positive: usize,
    /// Smallest `Σ_α` eigenvalue seen inside the region.
    pub inside_min_eigenvalue: f64,
    pub outside_samples: usize,
    /// Samples outside the region where `Σ_α` was not positive-definite.
    pub outside_failures: usize,
    pub seed: u64,
}

impl PositivitySweepReport {
    pub fn all_inside_positive(&self) -> bool {
        self.inside_positive == self.inside_samples
    }
}

/// Samples `(D1, x, s)` inside the positivity region and checks `Σ_α`,
/// `T_α`; then samples a small-`n` configuration with `α > n + 1` to show
/// the guard can trip.
pub fn lemma3_positivity_sweep(
    spec: &SweepSpec,
    trials: usize,
    seed: u64,
) -> Result<PositivitySweepReport, OracleError> {
    let tau = accountant::tau(spec.d, spec.sigma);
    let conditions = positivity_conditions(spec.alpha, spec.n as f64, tau);
    if !conditions.all_passed() {
        return Err(OracleError::ConditionViolated(conditions));
    }
    let mut rng = SeededRng::new(seed);
    let mut inside_positive = 0;
    let mut inside_min = f64::INFINITY;
    let mut base = random_base_dataset(spec.d, spec.n, spec.sigma, &mut rng)?.0;
    for t in 0..trials {
        if t % 50 == 0 && t > 0 {
            base = random_base_dataset(spec.d, spec.n, spec.sigma, &mut rng)?.0;
        }
        let d2 = if rng.next_u64().is_multiple_of(2) {
            let x: Vec<f64> = (0..spec.d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            base.neighbor(&Edit::Add(x))?
        } else {
            let i = (rng.next_u64() % base.len() as u64) as usize;
            base.neighbor(&Edit::Remove(i))?
        };
        let p1 = base.mean_cov()?;
        let p2 = d2.mean_cov()?;
        let c = divergence::positivity(&p1.covariance, &p2.covariance, spec.alpha)?;
        inside_min = inside_min.min(c.sigma_alpha_min);
        if c.t_alpha_pd && c.sigma_alpha_pd {
            inside_positive += 1;
        }
    }

    // Outside the region: α beyond n + 1 at small n. The rank-one update
    // cannot lift directions orthogonal to x − μ₁, so with d ≥ 2 the
    // mixture goes indefinite.
    let small_n = 6;
    let out_dim = spec.d.max(2);
    let outside_alpha = 1.5 * (small_n as f64 + 1.0);
    let outside_samples = trials.clamp(1, 200);
    let mut outside_failures = 0;
    for _ in 0..outside_samples {
        let records = (0..small_n)
            .map(|_| (0..out_dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
            .collect();
        let small = Dataset::new(out_dim, records)?;
        let p1 = small.mean_cov()?;
        if !p1.covariance.is_positive_definite(p1.covariance.pd_tolerance()) {
            outside_failures += 1;
            continue;
        }
        let x: Vec<f64> = (0..out_dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let p2 = small.neighbor(&Edit::Add(x))?.mean_cov()?;
        let sa = divergence::sigma_alpha(&p1.covariance, &p2.covariance, outside_alpha)?;
        if !sa.is_positive_definite(sa.pd_tolerance()) {
            outside_failures += 1;
        }
    }

    Ok(PositivitySweepReport {
        inside_samples: trials,
        inside_positive,
        inside_min_eigenvalue: inside_min,
        outside_samples,
        outside_failures,
        seed,
    })
}

/// Smallest eigenvalue of `Σ_α` in the extremal removal configuration:
/// `Σ₁ = σI` and `x − μ₁` of squared length `4d` along an eigenvector.
pub fn extremal_sigma_alpha_min(d: usize, n: f64, sigma: f64, alpha: f64) -> f64 {
    let s1 = SymmetricMatrix::from_diagonal(&vec![sigma; d]);
    let mut u = vec![0.0; d];
    u[0] = 2.0 * (d as f64).sqrt();
    let rank_one = SymmetricMatrix::outer(&u, -n / ((n - 1.0) * (n - 1.0)));
    let s2 = s1
        .linear_combination(n / (n - 1.0), &rank_one, 1.0)
        .expect("same dimension");
    let sa = s1
        .linear_combination(1.0 - alpha, &s2, alpha)
        .expect("same dimension");
    sa.min_eigenvalue().expect("diagonal input converges")
}
