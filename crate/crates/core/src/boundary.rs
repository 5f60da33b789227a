//! The investment boundary: pointwise solver, closed forms for the
//! Cobb-Douglas and CES families, and the integral-equation check.
//!
//! For each log-shock level `u` the boundary `b(u)` is the unique root in
//! `y > 0` of
//!
//! ```text
//! Phi(u, y) = E[ pi_c(exp(u + I_{T_r}), y) ] - r,
//! ```
//!
//! which is strictly decreasing in `y`, tends to `+inf` as `y -> 0` and to
//! `kappa - r < 0` as `y -> inf`. The expectation is taken either against the
//! exact law of `-I_{T_r}` (adaptive quadrature) or against a fixed pool of
//! sampled minima shared by every evaluation, so that the empirical `Phi` is
//! itself strictly monotone in `y` and nondecreasing in `u`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{ExtremaSample, LevyModel, PathOptions};
use crate::profit::ProfitFunction;
use crate::quadrature::QuadOptions;
use crate::rng::Streams;
use crate::roots::{bisect, expand_decreasing_bracket, Tolerance};
use crate::stats::{mean_se, Estimate};
use crate::wiener_hopf::{FactorMode, WienerHopfFactors};
use crate::Scalar;

/// Bracket expansions allowed before giving up on a boundary point.
pub const MAX_EXPANSIONS: usize = 60;
/// Relative tolerance on boundary roots.
pub const ROOT_REL_TOL: f64 = 1e-10;
/// Absolute tolerance of the quadrature behind exact-mode `Phi`.
pub const PHI_ABS_TOL: f64 = 1e-10;
/// Relative slack of the monotonicity assertion on solved grids.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// A nondecreasing investment boundary `u -> b(u)`.
pub trait Boundary<T>: Sync {
    fn level(&self, u: T) -> T;

    /// Whether `u` lies inside the region where the boundary is tabulated.
    fn covers(&self, _u: T) -> bool {
        true
    }
}

impl<T, B: Boundary<T> + ?Sized> Boundary<T> for &B {
    fn level(&self, u: T) -> T {
        (**self).level(u)
    }

    fn covers(&self, u: T) -> bool {
        (**self).covers(u)
    }
}

/// `scale * b(u)`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<B, T> {
    pub inner: B,
    pub scale: T,
}

impl<T: Scalar, B: Boundary<T>> Boundary<T> for Scaled<B, T> {
    fn level(&self, u: T) -> T {
        self.scale * self.inner.level(u)
    }

    fn covers(&self, u: T) -> bool {
        self.inner.covers(u)
    }
}

/// The policy that never invests.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoInvestment;

impl<T: Scalar> Boundary<T> for NoInvestment {
    fn level(&self, _u: T) -> T {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GenericSolver,
    CobbDouglasClosedForm,
    CesClosedForm,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::GenericSolver => "generic_solver",
            Provenance::CobbDouglasClosedForm => "cobb_douglas_closed_form",
            Provenance::CesClosedForm => "ces_closed_form",
        }
    }
}

/// Boundary values on a strictly increasing grid, interpolated piecewise
/// linearly in `(u, ln b)` and extrapolated with the slope of the outermost
/// segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryTable<T = f64> {
    grid: Vec<T>,
    values: Vec<T>,
    #[serde(skip)]
    log_values: Vec<T>,
    se: Option<Vec<T>>,
    provenance: Provenance,
}

impl<T: Scalar> BoundaryTable<T> {
    /// Builds a table, rejecting non-positive values and asserting (never
    /// repairing) `b(u_{i+1}) >= b(u_i) (1 - 1e-9)`.
    pub fn new(grid: Vec<T>, values: Vec<T>, se: Option<Vec<T>>, provenance: Provenance) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Construction(
                "a boundary table needs at least two grid points and one value per point".into(),
            ));
        }
        if se.as_ref().is_some_and(|s| s.len() != grid.len()) {
            return Err(Error::Construction("standard errors must match the grid".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Construction("grid must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v > T::zero() && v.is_finite())) {
            return Err(Error::Construction(format!(
                "boundary values must be positive and finite, got {v}"
            )));
        }
        let slack = T::one() - T::lit(MONOTONE_SLACK);
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0] * slack) {
            return Err(Error::MonotonicityViolation {
                index: i,
                left: values[i].to_f64_lossy(),
                right: values[i + 1].to_f64_lossy(),
            });
        }
        let log_values = values.iter().map(|v| v.ln()).collect();
        Ok(Self {
            grid,
            values,
            log_values,
            se,
            provenance,
        })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn standard_errors(&self) -> Option<&[T]> {
        self.se.as_deref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest `|ln b(u_{i+1}) - ln b(u_i)|` over adjacent grid points.
    pub fn max_log_gap(&self) -> T {
        self.log_values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(T::zero(), T::max)
    }

    /// Same table with every value multiplied by `scale`.
    pub fn scaled(&self, scale: T) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| v * scale).collect(),
            self.se.as_ref().map(|s| s.iter().map(|&v| v * scale).collect()),
            self.provenance,
        )
    }

    /// Interpolated `b(u)`.
    pub fn eval(&self, u: T) -> T {
        let n = self.grid.len();
        // Segment index k such that u is interpolated on [grid[k], grid[k+1]].
        let k = self.grid.partition_point(|&g| g <= u).clamp(1, n - 1) - 1;
        let (u0, u1) = (self.grid[k], self.grid[k + 1]);
        let (l0, l1) = (self.log_values[k], self.log_values[k + 1]);
        let w = (u - u0) / (u1 - u0);
        (l0 + w * (l1 - l0)).exp()
    }
}

impl<T: Scalar> Boundary<T> for BoundaryTable<T> {
    fn level(&self, u: T) -> T {
        self.eval(u)
    }

    fn covers(&self, u: T) -> bool {
        u >= self.grid[0] && u <= self.grid[self.grid.len() - 1]
    }
}

fn uniform_grid<T: Scalar>(u_min: T, u_max: T, n: usize) -> Result<Vec<T>> {
    if !(u_min < u_max) || n < 2 {
        return Err(Error::Domain(format!(
            "grid needs u_min < u_max and n >= 2 (got {u_min}, {u_max}, {n})"
        )));
    }
    let h = (u_max - u_min) / T::lit((n - 1) as f64);
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                u_max
            } else {
                u_min + T::lit(i as f64) * h
            }
        })
        .collect())
}

fn check_rate<T: Scalar>(r: T) -> Result<()> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "discount rate must be positive and finite, got {r}"
        )))
    }
}

/// `E[pi_c(exp(u + I), y)]` without subtracting `r`.
fn expected_marginal<T: Scalar>(p: &ProfitFunction<T>, wh: &WienerHopfFactors<T>, u: T, y: T) -> Estimate<T> {
    match wh.mode() {
        FactorMode::ExactRational => {
            let law = wh.inf_law().expect("exact factors carry the law of -I");
            let opts = QuadOptions {
                abs_tol: PHI_ABS_TOL,
                ..QuadOptions::default()
            };
            Estimate::exact(law.expect(|s| p.marginal_unchecked((u - s).exp(), y), opts))
        }
        FactorMode::MonteCarlo => mean_se(wh.samples().iter().map(|s| p.marginal_unchecked((u + s.i_t).exp(), y))),
    }
}

/// `Phi(u, y) = E[pi_c(exp(u + I_{T_r}), y)] - r`, exact or with the sampling
/// standard error of the shared pool.
pub fn phi<T: Scalar>(p: &ProfitFunction<T>, wh: &WienerHopfFactors<T>, r: T, u: T, y: T) -> Result<Estimate<T>> {
    if !(y > T::zero()) {
        return Err(Error::Domain(format!("Phi needs capacity y > 0, got {y}")));
    }
    check_rate(r)?;
    let e = expected_marginal(p, wh, u, y);
    Ok(Estimate {
        value: e.value - r,
        se: e.se,
    })
}

/// A solved boundary level with its standard error (zero in exact mode).
pub type BoundaryPoint<T> = Estimate<T>;

/// Unique root `y*` of `Phi(u, .)`. Brackets by multiplying or dividing
/// `y = 1` by ten (at most 60 times) and then bisects to relative
/// tolerance 1e-10. In Monte Carlo mode the standard error of the root is
/// `se(Phi) / |dPhi/dy|` at the root.
pub fn solve_boundary_point<T: Scalar>(
    p: &ProfitFunction<T>,
    wh: &WienerHopfFactors<T>,
    r: T,
    u: T,
) -> Result<BoundaryPoint<T>> {
    check_rate(r)?;
    // Phi decreases to kappa - r, so without r > kappa there is no root and
    // any apparent sign change far out would be rounding noise.
    if !(r > p.kappa()) {
        return Err(Error::BracketFailure {
            u: u.to_f64_lossy(),
            expansions: 0,
            reason: format!(
                "Phi(u, y) stays positive for every y because r = {r} <= kappa = {}; the no-investment region is empty",
                p.kappa()
            ),
        });
    }
    let f = |y: T| expected_marginal(p, wh, u, y).value - r;
    let (lo, hi) =
        expand_decreasing_bracket(f, T::one(), T::lit(10.0), MAX_EXPANSIONS).map_err(|e| Error::BracketFailure {
            u: u.to_f64_lossy(),
            expansions: e.expansions,
            reason: format!(
                "Phi(u, y) never changed sign up to y = {}; r = {r}, kappa = {} (need r > kappa)",
                e.last,
                p.kappa()
            ),
        })?;
    let root =
        bisect(f, lo, hi, Tolerance::relative(ROOT_REL_TOL)).expect("expansion returned a sign-changing bracket");
    let se = match wh.mode() {
        FactorMode::ExactRational => T::zero(),
        FactorMode::MonteCarlo => {
            let at = expected_marginal(p, wh, u, root);
            let h = root * T::lit(1e-4);
            let slope = (f(root + h) - f(root - h)) / (h + h);
            if slope != T::zero() {
                (at.se / slope).abs()
            } else {
                T::infinity()
            }
        }
    };
    Ok(Estimate { value: root, se })
}

/// Solves the boundary on `n` uniformly spaced points of `[u_min, u_max]`.
/// Points are independent and solved concurrently; a decrease beyond the
/// relative slack 1e-9 is reported as [`Error::MonotonicityViolation`].
pub fn solve_boundary_grid<T: Scalar>(
    p: &ProfitFunction<T>,
    wh: &WienerHopfFactors<T>,
    r: T,
    u_min: T,
    u_max: T,
    n: usize,
) -> Result<BoundaryTable<T>> {
    let grid = uniform_grid(u_min, u_max, n)?;
    let points = grid
        .par_iter()
        .map(|&u| solve_boundary_point(p, wh, r, u))
        .collect::<Result<Vec<_>>>()?;
    let values = points.iter().map(|e| e.value).collect();
    let se = (wh.mode() == FactorMode::MonteCarlo).then(|| points.iter().map(|e| e.se).collect());
    BoundaryTable::new(grid, values, se, Provenance::GenericSolver)
}

/// Closed-form Cobb-Douglas boundary `b(u) = (theta e^u)^(alpha / (1 - beta))`
/// with `theta = (beta E[e^{alpha I}] / r)^(1 / alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CobbDouglasBoundary<T = f64> {
    pub alpha: T,
    pub beta: T,
    pub theta: T,
    /// Standard error of `E[e^{alpha I}]` relative to its value.
    pub moment_rel_se: T,
}

impl<T: Scalar> CobbDouglasBoundary<T> {
    pub fn exponent(&self) -> T {
        self.alpha / (T::one() - self.beta)
    }

    pub fn at(&self, u: T) -> T {
        (self.theta * u.exp()).powf(self.exponent())
    }

    pub fn tabulate(&self, u_min: T, u_max: T, n: usize) -> Result<BoundaryTable<T>> {
        let grid = uniform_grid(u_min, u_max, n)?;
        let values: Vec<T> = grid.iter().map(|&u| self.at(u)).collect();
        let se = (self.moment_rel_se > T::zero()).then(|| {
            let k = self.moment_rel_se / (T::one() - self.beta);
            values.iter().map(|&b| b * k).collect()
        });
        BoundaryTable::new(grid, values, se, Provenance::CobbDouglasClosedForm)
    }
}

impl<T: Scalar> Boundary<T> for CobbDouglasBoundary<T> {
    fn level(&self, u: T) -> T {
        self.at(u)
    }
}

/// Closed-form Cobb-Douglas boundary. Requires
/// `r > max(0, psi(alpha / (1 - beta)), psi(alpha + beta))`.
pub fn cobb_douglas_boundary<T: Scalar>(
    alpha: T,
    beta: T,
    wh: &WienerHopfFactors<T>,
    r: T,
) -> Result<CobbDouglasBoundary<T>> {
    check_rate(r)?;
    let model = wh.model();
    let a = alpha / (T::one() - beta);
    let psi_a = model
        .laplace_exponent(a)
        .map_err(|e| Error::ConditionViolation(format!("psi({a}) undefined: {e}")))?;
    let psi_b = model
        .laplace_exponent(alpha + beta)
        .map_err(|e| Error::ConditionViolation(format!("psi({}) undefined: {e}", alpha + beta)))?;
    let bound = T::zero().max(psi_a).max(psi_b);
    if !(r > bound) {
        return Err(Error::ConditionViolation(format!(
            "Cobb-Douglas boundary needs r > max(0, psi(alpha/(1-beta)), psi(alpha+beta)) = {bound}, got r = {r}"
        )));
    }
    let m = wh.inf_moment(alpha)?;
    Ok(CobbDouglasBoundary {
        alpha,
        beta,
        theta: (beta * m.value / r).powf(T::one() / alpha),
        moment_rel_se: m.se / m.value,
    })
}

/// Closed-form CES boundary `b(u) = K e^u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CesBoundary<T = f64> {
    pub k: Estimate<T>,
}

impl<T: Scalar> CesBoundary<T> {
    pub fn at(&self, u: T) -> T {
        self.k.value * u.exp()
    }

    pub fn tabulate(&self, u_min: T, u_max: T, n: usize) -> Result<BoundaryTable<T>> {
        let grid = uniform_grid(u_min, u_max, n)?;
        let values: Vec<T> = grid.iter().map(|&u| self.at(u)).collect();
        let se = (self.k.se > T::zero()).then(|| grid.iter().map(|&u| self.k.se * u.exp()).collect());
        BoundaryTable::new(grid, values, se, Provenance::CesClosedForm)
    }
}

impl<T: Scalar> Boundary<T> for CesBoundary<T> {
    fn level(&self, u: T) -> T {
        self.at(u)
    }
}

fn ces_condition<T: Scalar>(alpha: T, gamma: T, model: &LevyModel<T>, r: T) -> Result<T> {
    let kappa = (T::one() - alpha).powf(T::one() / gamma);
    let psi1 = model
        .laplace_exponent(T::one())
        .map_err(|e| Error::ConditionViolation(format!("psi(1) undefined: {e}")))?;
    if !(r > kappa.max(psi1)) {
        return Err(Error::ConditionViolation(format!(
            "CES boundary needs r > max((1-alpha)^(1/gamma) = {kappa}, psi(1) = {psi1}), got r = {r}"
        )));
    }
    Ok(kappa)
}

/// `F(K) = E[(1 + (alpha/(1-alpha)) e^{gamma I} K^{-gamma})^((1-gamma)/gamma)] - r / (1-alpha)^(1/gamma)`.
pub fn ces_constant_equation<T: Scalar>(alpha: T, gamma: T, wh: &WienerHopfFactors<T>, r: T, k: T) -> Estimate<T> {
    let one = T::one();
    let ratio = alpha / (one - alpha);
    let power = (one - gamma) / gamma;
    let target = r / (one - alpha).powf(one / gamma);
    let scale = ratio * k.powf(-gamma);
    let e = match wh.mode() {
        FactorMode::ExactRational => {
            let law = wh.inf_law().expect("exact factors carry the law of -I");
            let opts = QuadOptions {
                abs_tol: PHI_ABS_TOL,
                ..QuadOptions::default()
            };
            Estimate::exact(law.expect(|s| (one + scale * (-gamma * s).exp()).powf(power), opts))
        }
        FactorMode::MonteCarlo => mean_se(
            wh.samples()
                .iter()
                .map(|smp| (one + scale * (gamma * smp.i_t).exp()).powf(power)),
        ),
    };
    Estimate {
        value: e.value - target,
        se: e.se,
    }
}

/// Unique positive root `K` of [`ces_constant_equation`], so that the CES
/// boundary is `K e^u`. Requires `r > max((1-alpha)^(1/gamma), psi(1))`.
pub fn ces_boundary_constant<T: Scalar>(alpha: T, gamma: T, wh: &WienerHopfFactors<T>, r: T) -> Result<CesBoundary<T>> {
    check_rate(r)?;
    if !(alpha > T::zero() && alpha < T::one() && gamma > T::zero() && gamma < T::one()) {
        return Err(Error::Domain(format!(
            "CES needs alpha, gamma in (0, 1), got {alpha}, {gamma}"
        )));
    }
    ces_condition(alpha, gamma, wh.model(), r)?;
    let f = |k: T| ces_constant_equation(alpha, gamma, wh, r, k).value;
    let (lo, hi) =
        expand_decreasing_bracket(f, T::one(), T::lit(10.0), MAX_EXPANSIONS).map_err(|e| Error::BracketFailure {
            u: 0.0,
            expansions: e.expansions,
            reason: "CES constant equation never changed sign".into(),
        })?;
    let k = bisect(f, lo, hi, Tolerance::machine()).expect("sign-changing bracket");
    let se = match wh.mode() {
        FactorMode::ExactRational => T::zero(),
        FactorMode::MonteCarlo => {
            let at = ces_constant_equation(alpha, gamma, wh, r, k);
            let h = k * T::lit(1e-4);
            let slope = (f(k + h) - f(k - h)) / (h + h);
            (at.se / slope).abs()
        }
    };
    Ok(CesBoundary {
        k: Estimate { value: k, se },
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Left side of the degree `n - 1` polynomial equation for the CES constant
/// when `gamma = 1/n`, written in `w = K^(-1/n)`:
/// `sum_{j=1}^{n-1} C(n-1, j) A_j (alpha/(1-alpha))^j w^j - (r/(1-alpha)^n - 1)`.
pub fn ces_polynomial<T: Scalar>(n: usize, alpha: T, r: T, moments: &[T], w: T) -> T {
    let ratio = alpha / (T::one() - alpha);
    let rhs = r / (T::one() - alpha).powi(n as i32) - T::one();
    let lhs: T = (1..n)
        .map(|j| T::lit(binomial(n - 1, j)) * moments[j - 1] * ratio.powi(j as i32) * w.powi(j as i32))
        .sum();
    lhs - rhs
}

/// CES constant for `gamma = 1/n` from the polynomial equation, with
/// `moments[j-1] = E[exp((j/n) I_{T_r})]` for `j = 1..n-1`. All coefficients
/// in `w` are positive, so the positive root is unique.
pub fn ces_polynomial_constant<T: Scalar>(n: usize, alpha: T, r: T, moments: &[T]) -> Result<T> {
    if n < 2 {
        return Err(Error::Domain(format!("polynomial form needs n >= 2, got {n}")));
    }
    if moments.len() != n - 1 {
        return Err(Error::Domain(format!("need {} moments, got {}", n - 1, moments.len())));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let rhs = r / (T::one() - alpha).powi(n as i32) - T::one();
    if !(rhs > T::zero()) {
        return Err(Error::Domain(format!(
            "r / (1 - alpha)^n - 1 = {rhs} <= 0: no positive solution (need r > (1-alpha)^n)"
        )));
    }
    let w = if n == 2 {
        rhs / (moments[0] * alpha / (T::one() - alpha))
    } else {
        let poly = |w: T| ces_polynomial(n, alpha, r, moments, w);
        let mut hi = T::one();
        while poly(hi) <= T::zero() {
            hi = hi * T::lit(2.0);
            if !hi.is_finite() {
                return Err(Error::Domain("polynomial root not bracketed".into()));
            }
        }
        bisect(poly, T::zero(), hi, Tolerance::machine()).expect("sign-changing bracket")
    };
    Ok(w.powi(-(n as i32)))
}

/// Monte Carlo residual of the integral equation at log-level `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralResidual<T = f64> {
    pub y: T,
    pub residual: Estimate<T>,
    /// Number of evaluations of the boundary outside its tabulated range.
    pub extrapolated: usize,
}

/// `E[pi_c(exp(y + M + I), b(y + M))] - r` where `M` and `I` come from two
/// independent pools (`sup_pool[k].m_t` is paired with `inf_pool[k].i_t`).
/// The factorization makes this the integral equation the optimal boundary
/// satisfies.
pub fn integral_equation_residual<T: Scalar, B: Boundary<T>>(
    b: &B,
    p: &ProfitFunction<T>,
    r: T,
    y: T,
    sup_pool: &[ExtremaSample<T>],
    inf_pool: &[ExtremaSample<T>],
) -> IntegralResidual<T> {
    let n = sup_pool.len().min(inf_pool.len());
    let mut extrapolated = 0usize;
    let residual = mean_se(sup_pool[..n].iter().zip(&inf_pool[..n]).map(|(s, i)| {
        let level = y + s.m_t;
        if !b.covers(level) {
            extrapolated += 1;
        }
        p.marginal_unchecked((level + i.i_t).exp(), b.level(level)) - r
    }));
    if extrapolated > 0 {
        log::warn!(
            "integral equation at y = {y}: boundary extrapolated beyond its table for {extrapolated} of {n} samples"
        );
    }
    IntegralResidual {
        y,
        residual,
        extrapolated,
    }
}

/// Draws two independent pools of `n` triplets and evaluates
/// [`integral_equation_residual`] on them.
#[allow(clippy::too_many_arguments)]
pub fn integral_equation_residual_sampled<T: Scalar, B: Boundary<T>>(
    b: &B,
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    r: T,
    y: T,
    n: usize,
    opts: &PathOptions<T>,
    streams: &Streams,
) -> Result<IntegralResidual<T>> {
    let sup = WienerHopfFactors::sample_triplet(model, r, n, opts, &streams.fork(1))?;
    let inf = WienerHopfFactors::sample_triplet(model, r, n, opts, &streams.fork(2))?;
    Ok(integral_equation_residual(b, p, r, y, sup.samples(), inf.samples()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench() -> (LevyModel<f64>, WienerHopfFactors<f64>) {
        let m = LevyModel::brownian(0.0, 2f64.sqrt()).unwrap();
        let wh = WienerHopfFactors::exact(&m, 2.0).unwrap();
        (m, wh)
    }

    #[test]
    fn table_interpolates_log_linearly() {
        let t = BoundaryTable::new(
            vec![0.0, 1.0, 2.0],
            vec![1.0, 1f64.exp(), 3f64.exp()],
            None,
            Provenance::GenericSolver,
        )
        .unwrap();
        assert!((t.eval(0.5) - 0.5f64.exp()).abs() < 1e-14);
        assert!((t.eval(1.5) - 2f64.exp()).abs() < 1e-13);
        // extrapolation by outer slopes
        assert!((t.eval(-1.0) - (-1f64).exp()).abs() < 1e-14);
        assert!((t.eval(3.0) - 5f64.exp()).abs() < 1e-12);
        assert!(t.covers(1.0) && !t.covers(2.5));
    }

    #[test]
    fn table_rejects_decrease_and_nonpositive() {
        let e = BoundaryTable::new(vec![0.0, 1.0], vec![2.0, 1.0], None, Provenance::GenericSolver).unwrap_err();
        assert!(matches!(e, Error::MonotonicityViolation { index: 0, .. }));
        assert!(BoundaryTable::new(vec![0.0, 1.0], vec![0.0, 1.0], None, Provenance::GenericSolver).is_err());
        assert!(BoundaryTable::new(vec![0.0, 0.0], vec![1.0, 1.0], None, Provenance::GenericSolver).is_err());
    }

    #[test]
    fn phi_cobb_douglas_form() {
        let (_, wh) = bench();
        let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
        let s2 = 2f64.sqrt();
        let m = s2 / (s2 + 0.5);
        for (u, y) in [(0.0f64, 1.0f64), (1.0, 0.3), (-2.0, 4.0)] {
            let expected = 0.5 * (0.5 * u).exp() * m * y.powf(-0.5) - 2.0;
            let got = phi(&p, &wh, 2.0, u, y).unwrap();
            assert!((got.value - expected).abs() < 1e-9, "{got:?} vs {expected}");
            assert!(got.is_exact());
        }
    }

    #[test]
    fn phi_limits_and_domain() {
        let (_, wh) = bench();
        let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
        assert!(phi(&p, &wh, 2.0, 0.0, 1e8).unwrap().value < 0.0);
        assert!(phi(&p, &wh, 2.0, 0.0, 1e-8).unwrap().value > 0.0);
        assert!(matches!(phi(&p, &wh, 2.0, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn cobb_douglas_benchmark_theta() {
        let (_, wh) = bench();
        let cd = cobb_douglas_boundary(0.5, 0.5, &wh, 2.0).unwrap();
        let s2 = 2f64.sqrt();
        let theta = (0.25 * s2 / (s2 + 0.5)).powi(2);
        assert!((cd.theta - theta).abs() < 1e-15);
        for u in [-1.0, 0.5, 2.0] {
            assert!(((cd.at(u).ln() - cd.at(0.0).ln()) - u).abs() < 1e-14);
        }
    }

    #[test]
    fn cobb_douglas_condition_violation() {
        let m = LevyModel::brownian(0.0, 2f64.sqrt()).unwrap();
        let wh = WienerHopfFactors::exact(&m, 0.9).unwrap();
        // psi(1) = 1 >= r
        assert!(matches!(
            cobb_douglas_boundary(0.5, 0.5, &wh, 0.9),
            Err(Error::ConditionViolation(_))
        ));
    }

    #[test]
    fn generic_point_matches_closed_form() {
        let (_, wh) = bench();
        let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
        let cd = cobb_douglas_boundary(0.5, 0.5, &wh, 2.0).unwrap();
        for u in [-2.0, 0.0, 2.0] {
            let b = solve_boundary_point(&p, &wh, 2.0, u).unwrap();
            assert!((b.value / cd.at(u) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn kappa_at_or_above_rate_fails_to_bracket() {
        let (_, wh) = bench();
        let p = ProfitFunction::ces(0.5, 0.5).unwrap();
        for r in [0.2, 0.25] {
            let wh_r = WienerHopfFactors::exact(wh.model(), r).unwrap();
            let e = solve_boundary_point(&p, &wh_r, r, 0.0).unwrap_err();
            assert!(matches!(e, Error::BracketFailure { .. }), "{e}");
        }
    }

    #[test]
    fn two_point_grid_has_endpoints() {
        let (_, wh) = bench();
        let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
        let t = solve_boundary_grid(&p, &wh, 2.0, -1.0, 1.0, 2).unwrap();
        assert_eq!(t.grid(), &[-1.0, 1.0]);
    }

    #[test]
    fn polynomial_constant_cases() {
        // n = 2 closed form vs all-moments-one reduction.
        let k2: f64 = ces_polynomial_constant(2, 0.5, 2.0, &[1.0]).unwrap();
        // I == 0: (1 + K^{-1/2})^1 = r / (1 - alpha)^2 = 8 -> K = 1/49
        assert!((k2 - 1.0 / 49.0).abs() < 1e-15);
        let k3: f64 = ces_polynomial_constant(3, 0.4, 1.0, &[0.8, 0.7]).unwrap();
        assert!(ces_polynomial(3, 0.4, 1.0, &[0.8, 0.7], k3.powf(-1.0 / 3.0)).abs() < 1e-12);
        assert!(matches!(
            ces_polynomial_constant(2, 0.5, 0.25, &[1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 5), 1.0);
    }
}
