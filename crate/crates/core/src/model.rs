//! DeGroot and Friedkin-Johnsen recursions, the effective dynamic matrix,
//! steady states, the static gain and settling-time measurement.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::spectral::{self, GraphPattern};

/// Row sums must match 1 to this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// `max p_i` must match 1 to this tolerance.
pub const SIGMA_TILDE_MAX_TOL: f64 = 1e-12;
/// Default margin keeping `sigma_max <= 1 - epsilon`.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Settling simulations run for `ceil(SETTLING_HORIZON_FACTOR / sigma_max)` steps.
pub const SETTLING_HORIZON_FACTOR: f64 = 50.0;

/// Nonnegative, row-stochastic, irreducible influence matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    w: Matrix,
    pattern: GraphPattern,
}

impl InfluenceMatrix {
    pub fn new(w: Matrix) -> Result<Self> {
        if !w.is_square() || w.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "influence matrix must be square and non-empty, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                if w[(i, j)] < 0.0 {
                    return Err(Error::AssumptionViolated(format!(
                        "nonnegativity: W[{}][{}] = {}",
                        i, j, w[(i, j)]
                    )));
                }
            }
        }
        for (i, s) in w.row_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::AssumptionViolated(format!(
                    "row stochasticity: row {} sums to {}",
                    i, s
                )));
            }
        }
        let pattern = GraphPattern::from_matrix(&w);
        if !spectral::is_irreducible(&pattern) {
            return Err(Error::AssumptionViolated(
                "irreducibility: the graph of W is not strongly connected".into(),
            ));
        }
        Ok(InfluenceMatrix { w, pattern })
    }

    pub fn n(&self) -> usize {
        self.w.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn pattern(&self) -> &GraphPattern {
        &self.pattern
    }

    pub fn is_primitive(&self) -> bool {
        spectral::is_primitive(&self.pattern).unwrap_or(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Margin keeping every `sigma_i <= 1 - epsilon`.
    pub epsilon: f64,
    /// Accept `p_i = 0` for some (never all) agents.
    pub allow_zero: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            epsilon: DEFAULT_EPSILON,
            allow_zero: false,
        }
    }
}

/// Immunity weights `Sigma = sigma_max * diag(p)` with `max p = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmunityProfile {
    sigma_max: f64,
    p: Vec<f64>,
    options: ProfileOptions,
}

impl ImmunityProfile {
    pub fn new(sigma_max: f64, p: Vec<f64>) -> Result<Self> {
        Self::with_options(sigma_max, p, ProfileOptions::default())
    }

    pub fn with_options(sigma_max: f64, p: Vec<f64>, options: ProfileOptions) -> Result<Self> {
        validate_sigma_tilde(&p, options.allow_zero)?;
        check_sigma_max(sigma_max, options.epsilon)?;
        Ok(ImmunityProfile {
            sigma_max,
            p,
            options,
        })
    }

    /// Rescales `p` so its largest entry is 1, moving the factor into
    /// `sigma_max` so that `Sigma` itself is unchanged.
    pub fn renormalized(sigma_max: f64, p: Vec<f64>, options: ProfileOptions) -> Result<Self> {
        let top = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(top > 0.0) || !top.is_finite() {
            return Err(Error::AssumptionViolated(
                "sigma_tilde: no positive entry to normalize by".into(),
            ));
        }
        let p = p.iter().map(|x| x / top).collect();
        Self::with_options(sigma_max * top, p, options)
    }

    /// Same `p`, different `sigma_max`.
    pub fn with_sigma_max(&self, sigma_max: f64) -> Result<Self> {
        check_sigma_max(sigma_max, self.options.epsilon)?;
        Ok(ImmunityProfile {
            sigma_max,
            ..self.clone()
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn options(&self) -> ProfileOptions {
        self.options
    }

    /// Diagonal of `Sigma`.
    pub fn sigma(&self) -> Vec<f64> {
        self.p.iter().map(|p| self.sigma_max * p).collect()
    }

    /// Diagonal of `Lambda = I - Sigma`.
    pub fn lambda(&self) -> Vec<f64> {
        self.sigma().iter().map(|s| 1.0 - s).collect()
    }
}

/// Checks `0 < p_i <= 1` (or `0 <= p_i` when relaxed) and `max p_i = 1`.
pub fn validate_sigma_tilde(p: &[f64], allow_zero: bool) -> Result<()> {
    if p.is_empty() {
        return Err(Error::AssumptionViolated("sigma_tilde: empty".into()));
    }
    for (i, &x) in p.iter().enumerate() {
        let low_ok = if allow_zero { x >= 0.0 } else { x > 0.0 };
        if !x.is_finite() || !low_ok || x > 1.0 + SIGMA_TILDE_MAX_TOL {
            return Err(Error::AssumptionViolated(format!(
                "sigma_tilde: entry {} = {} outside {}",
                i,
                x,
                if allow_zero { "[0, 1]" } else { "(0, 1]" }
            )));
        }
    }
    let top = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (top - 1.0).abs() > SIGMA_TILDE_MAX_TOL {
        return Err(Error::AssumptionViolated(format!(
            "sigma_tilde normalization: max entry is {}, expected 1",
            top
        )));
    }
    Ok(())
}

fn check_sigma_max(sigma_max: f64, epsilon: f64) -> Result<()> {
    if !(sigma_max > 0.0 && sigma_max <= 1.0 - epsilon) {
        return Err(Error::AssumptionViolated(format!(
            "sigma_max = {} outside (0, {}]",
            sigma_max,
            1.0 - epsilon
        )));
    }
    Ok(())
}

/// A vector of agent opinions. Entries outside `[0, 1]` are accepted with a
/// warning attached.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionVector {
    y: Vec<f64>,
    warning: Option<String>,
}

impl OpinionVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some(i) = y.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let warning = y
            .iter()
            .position(|x| !(0.0..=1.0).contains(x))
            .map(|i| format!("opinion {} = {} lies outside [0, 1]", i, y[i]));
        Ok(OpinionVector { y, warning })
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn into_values(self) -> Vec<f64> {
        self.y
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainKind {
    Exact(f64),
    Limit,
}

/// Static gain `H(sigma_max)` or its rank-one limit.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub h: Matrix,
    pub kind: GainKind,
}

impl GainMatrix {
    pub fn apply(&self, y0: &[f64]) -> Vec<f64> {
        self.h.mul_vec(y0)
    }
}

/// Opinion vectors `y(0), y(1), ...`; `steps[0]` is the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.steps.last().expect("trajectory holds y0")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn check_dims(w: &InfluenceMatrix, n: usize, what: &str) -> Result<()> {
    if w.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} has length {}, W is {}x{}",
            what,
            n,
            w.n(),
            w.n()
        )));
    }
    Ok(())
}

/// `W~ = (I - Sigma) W`, row `i` scaled by `1 - sigma_i`.
pub fn effective_matrix(w: &InfluenceMatrix, prof: &ImmunityProfile) -> Result<Matrix> {
    check_dims(w, prof.n(), "sigma_tilde")?;
    Ok(w.matrix().scale_rows(&prof.lambda()))
}

/// `y(k+1) = W y(k)` for `k < k_max`.
pub fn degroot_simulate(w: &InfluenceMatrix, y0: &OpinionVector, k_max: usize) -> Result<Trajectory> {
    check_dims(w, y0.len(), "y0")?;
    let mut steps = Vec::with_capacity(k_max + 1);
    steps.push(y0.values().to_vec());
    for k in 0..k_max {
        let next = w.matrix().mul_vec(&steps[k]);
        steps.push(next);
    }
    Ok(Trajectory { steps })
}

// y(k+1)_i = a_i (W y(k))_i + b_i y0_i
fn affine_recursion(w: &Matrix, a: &[f64], b: &[f64], y0: &[f64], k_max: usize) -> Trajectory {
    let mut steps = Vec::with_capacity(k_max + 1);
    steps.push(y0.to_vec());
    for k in 0..k_max {
        let wy = w.mul_vec(&steps[k]);
        let next = (0..wy.len()).map(|i| a[i] * wy[i] + b[i] * y0[i]).collect();
        steps.push(next);
    }
    Trajectory { steps }
}

/// `y(k+1) = (I - Sigma) W y(k) + Sigma y0`.
pub fn fj_simulate(
    w: &InfluenceMatrix,
    prof: &ImmunityProfile,
    y0: &OpinionVector,
    k_max: usize,
) -> Result<Trajectory> {
    check_dims(w, prof.n(), "sigma_tilde")?;
    check_dims(w, y0.len(), "y0")?;
    Ok(affine_recursion(
        w.matrix(),
        &prof.lambda(),
        &prof.sigma(),
        y0.values(),
        k_max,
    ))
}

/// Susceptibility form `y(k+1) = Lambda W y(k) + (I - Lambda) y0`.
pub fn fj_simulate_lambda(
    w: &InfluenceMatrix,
    lambda: &[f64],
    y0: &OpinionVector,
    k_max: usize,
) -> Result<Trajectory> {
    check_dims(w, lambda.len(), "lambda")?;
    check_dims(w, y0.len(), "y0")?;
    if let Some(i) = lambda.iter().position(|l| !(0.0..=1.0).contains(l)) {
        return Err(Error::InvalidArgument(format!(
            "lambda[{}] = {} outside [0, 1]",
            i, lambda[i]
        )));
    }
    let one_minus: Vec<f64> = lambda.iter().map(|l| 1.0 - l).collect();
    Ok(affine_recursion(w.matrix(), lambda, &one_minus, y0.values(), k_max))
}

/// `I - (I - Sigma) W`, assembled as `(I - W) + Sigma W` so that the small
/// `Sigma W` term is not lost to cancellation against the identity.
fn fj_system_matrix(w: &InfluenceMatrix, sigma: &[f64]) -> Matrix {
    let n = w.n();
    let mut a = Matrix::identity(n).sub(w.matrix());
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += sigma[i] * w.matrix()[(i, j)];
        }
    }
    a
}

/// `y_bar = [I - (I - Sigma) W]^-1 Sigma y0`.
pub fn steady_state(
    w: &InfluenceMatrix,
    prof: &ImmunityProfile,
    y0: &OpinionVector,
) -> Result<OpinionVector> {
    check_dims(w, prof.n(), "sigma_tilde")?;
    check_dims(w, y0.len(), "y0")?;
    let sigma = prof.sigma();
    let rhs: Vec<f64> = sigma.iter().zip(y0.values()).map(|(s, y)| s * y).collect();
    let y_bar = linalg::solve_vec(&fj_system_matrix(w, &sigma), &rhs)?;
    OpinionVector::new(y_bar)
}

/// `H(sigma_max) = sigma_max [I - (I - sigma_max S) W]^-1 S`, with `S = diag(p)`.
pub fn static_gain(w: &InfluenceMatrix, prof: &ImmunityProfile) -> Result<GainMatrix> {
    check_dims(w, prof.n(), "sigma_tilde")?;
    let sigma = prof.sigma();
    let h = linalg::solve_linear(&fj_system_matrix(w, &sigma), &Matrix::diag(&sigma))?;
    Ok(GainMatrix {
        h,
        kind: GainKind::Exact(prof.sigma_max()),
    })
}

/// Step count used when measuring settling: `ceil(50 / sigma_max)`.
pub fn settling_horizon(sigma_max: f64) -> usize {
    (SETTLING_HORIZON_FACTOR / sigma_max).ceil() as usize
}

/// Smallest `k` with `|y(j) - y_bar|_inf <= (1 - fraction) |y(0) - y_bar|_inf`
/// for every `j >= k` in the trajectory.
pub fn settling_time(traj: &Trajectory, y_bar: &[f64], fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "settling fraction {} outside [0, 1)",
            fraction
        )));
    }
    let dist = |y: &[f64]| {
        y.iter()
            .zip(y_bar)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let e0 = dist(&traj.steps[0]);
    // floor at a few ulps of the target so exact fixed points count as settled
    let floor = 64.0 * f64::EPSILON * linalg::norm_inf(y_bar).max(1.0);
    let band = ((1.0 - fraction) * e0).max(floor);
    match traj.steps.iter().rposition(|y| dist(y) > band) {
        None => Ok(0),
        Some(last) if last + 1 == traj.len() => Err(Error::NotSettled(traj.len() - 1)),
        Some(last) => Ok(last + 1),
    }
}

/// Simulates `ceil(50 / sigma_max)` FJ steps and measures the settling time
/// against the exact steady state.
pub fn fj_settling_time(
    w: &InfluenceMatrix,
    prof: &ImmunityProfile,
    y0: &OpinionVector,
    fraction: f64,
) -> Result<usize> {
    let y_bar = steady_state(w, prof, y0)?;
    let traj = fj_simulate(w, prof, y0, settling_horizon(prof.sigma_max()))?;
    settling_time(&traj, y_bar.values(), fraction)
}
