//! Operating profit functions `pi(z, c)`, their marginals in capacity and
//! the standing-assumption checks that make the boundary well defined.

use std::fmt;
use std::sync::Arc;

use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{walk_path, Family, LevyModel, PathOptions};
use crate::rng::{tags, Streams};
use crate::stats::{mean_se, Estimate};
use crate::Scalar;

pub type ProfitFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfitKind<T> {
    /// `z^alpha c^beta`.
    CobbDouglas {
        alpha: T,
        beta: T,
    },
    /// `(alpha z^gamma + (1 - alpha) c^gamma)^(1/gamma)`.
    Ces {
        alpha: T,
        gamma: T,
    },
    /// `ln(1 + z^alpha c^beta)`; its marginal is bounded by `beta / c`
    /// uniformly in `z`, so it pairs with models lacking exponential moments.
    Log {
        alpha: T,
        beta: T,
    },
    Custom,
}

/// Relative step of the central finite difference used for custom profits
/// without an explicit marginal.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

#[derive(Clone)]
pub struct ProfitFunction<T = f64> {
    kind: ProfitKind<T>,
    custom_eval: Option<ProfitFn<T>>,
    custom_marginal: Option<ProfitFn<T>>,
    kappa: T,
}

impl<T: Scalar> fmt::Debug for ProfitFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfitFunction")
            .field("kind", &self.kind)
            .field("kappa", &self.kappa)
            .field("custom_marginal", &self.custom_marginal.is_some())
            .finish()
    }
}

fn unit_open<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v > T::zero() && v < T::one() {
        Ok(())
    } else {
        Err(Error::Construction(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl<T: Scalar> ProfitFunction<T> {
    pub fn cobb_douglas(alpha: T, beta: T) -> Result<Self> {
        unit_open("alpha", alpha)?;
        unit_open("beta", beta)?;
        Ok(Self::builtin(ProfitKind::CobbDouglas { alpha, beta }, T::zero()))
    }

    pub fn ces(alpha: T, gamma: T) -> Result<Self> {
        unit_open("alpha", alpha)?;
        if gamma < T::zero() {
            return Err(Error::Construction(format!(
                "CES with gamma = {gamma} < 0 has a finite marginal at zero capacity; gamma must lie in (0, 1)"
            )));
        }
        unit_open("gamma", gamma)?;
        let kappa = (T::one() - alpha).powf(T::one() / gamma);
        Ok(Self::builtin(ProfitKind::Ces { alpha, gamma }, kappa))
    }

    pub fn log(alpha: T, beta: T) -> Result<Self> {
        unit_open("alpha", alpha)?;
        unit_open("beta", beta)?;
        Ok(Self::builtin(ProfitKind::Log { alpha, beta }, T::zero()))
    }

    /// A user-supplied profit. Without `marginal`, `pi_c` is a central finite
    /// difference of `eval` with relative step [`FD_RELATIVE_STEP`].
    pub fn custom(eval: ProfitFn<T>, marginal: Option<ProfitFn<T>>, kappa: T) -> Result<Self> {
        if !(kappa >= T::zero() && kappa.is_finite()) {
            return Err(Error::Construction(format!(
                "kappa must be finite and >= 0, got {kappa}"
            )));
        }
        Ok(Self {
            kind: ProfitKind::Custom,
            custom_eval: Some(eval),
            custom_marginal: marginal,
            kappa,
        })
    }

    fn builtin(kind: ProfitKind<T>, kappa: T) -> Self {
        Self {
            kind,
            custom_eval: None,
            custom_marginal: None,
            kappa,
        }
    }

    pub fn kind(&self) -> &ProfitKind<T> {
        &self.kind
    }

    /// `lim_{c -> inf} pi_c(z, c)`.
    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// `pi(z, c)` for `z >= 0`, `c >= 0`.
    pub fn eval(&self, z: T, c: T) -> T {
        match self.kind {
            ProfitKind::CobbDouglas { alpha, beta } => z.powf(alpha) * c.powf(beta),
            ProfitKind::Ces { alpha, gamma } => {
                (alpha * z.powf(gamma) + (T::one() - alpha) * c.powf(gamma)).powf(T::one() / gamma)
            }
            ProfitKind::Log { alpha, beta } => (z.powf(alpha) * c.powf(beta)).ln_1p(),
            ProfitKind::Custom => (self.custom_eval.as_ref().expect("custom profit has eval"))(z, c),
        }
    }

    /// `pi_c(z, c)`; errors for `c <= 0`.
    pub fn marginal(&self, z: T, c: T) -> Result<T> {
        if !(c > T::zero()) {
            return Err(Error::Domain(format!("marginal profit needs capacity c > 0, got {c}")));
        }
        Ok(self.marginal_unchecked(z, c))
    }

    /// `pi_c(z, c)` without the domain check, for inner loops with `c > 0`.
    #[inline]
    pub fn marginal_unchecked(&self, z: T, c: T) -> T {
        match self.kind {
            ProfitKind::CobbDouglas { alpha, beta } => beta * z.powf(alpha) * c.powf(beta - T::one()),
            ProfitKind::Ces { alpha, gamma } => {
                let one = T::one();
                (one - alpha)
                    * c.powf(gamma - one)
                    * (alpha * z.powf(gamma) + (one - alpha) * c.powf(gamma)).powf((one - gamma) / gamma)
            }
            ProfitKind::Log { alpha, beta } => {
                let f = z.powf(alpha) * c.powf(beta);
                beta / c * (f / (T::one() + f))
            }
            ProfitKind::Custom => match &self.custom_marginal {
                Some(m) => m(z, c),
                None => {
                    let eval = self.custom_eval.as_ref().expect("custom profit has eval");
                    let h = c * T::lit(FD_RELATIVE_STEP);
                    (eval(z, c + h) - eval(z, c - h)) / (h + h)
                }
            },
        }
    }

    /// Growth rate of `E[pi]` along the optimal policy implied by the moment
    /// conditions, used for truncation tail estimates. `None` when the
    /// required exponential moments do not exist.
    pub(crate) fn moment_growth(&self, model: &LevyModel<T>) -> Option<T> {
        let psi = |l: T| model.laplace_exponent(l).ok();
        match self.kind {
            ProfitKind::CobbDouglas { alpha, beta } => {
                Some(T::zero().max(psi(alpha / (T::one() - beta))?).max(psi(alpha + beta)?))
            }
            ProfitKind::Ces { .. } => Some(T::zero().max(psi(T::one())?)),
            ProfitKind::Log { alpha, beta } => {
                if matches!(model.family, Family::SymmetricStable { .. }) {
                    Some(T::zero())
                } else {
                    Some(T::zero().max(psi(alpha / (T::one() - beta))?).max(psi(alpha + beta)?))
                }
            }
            ProfitKind::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    /// No check failed (warnings allowed).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &'static str, status: CheckStatus, detail: impl Into<String>) {
        self.checks.push(AssumptionCheck {
            name,
            status,
            detail: detail.into(),
        });
    }
}

/// Settings of the sampled checks in [`check_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions<T> {
    pub seed: u64,
    /// Number of paths in the integrability spot-check; zero skips it.
    pub spot_paths: usize,
    pub path: PathOptions<T>,
    pub t_max: T,
}

impl<T: Scalar> CheckOptions<T> {
    pub fn for_rate(r: T, seed: u64) -> Self {
        Self {
            seed,
            spot_paths: 1000,
            path: PathOptions::for_rate(r),
            t_max: T::lit(20.0) / r,
        }
    }
}

/// Number of sampled `(z, c)` points in the shape checks.
pub const SHAPE_SAMPLES: usize = 100;

/// Checks the discount condition `r > kappa`, the moment condition of the
/// closed-form families, the sampled shape of `pi_c` (monotone in `c` and `z`,
/// Inada limits, strict concavity) and spot-checks integrability of
/// `e^{-rt} pi_c(e^{X_t}, 1)` by simulation. Integrability is only ever a
/// warning because it cannot be certified from finitely many paths.
pub fn check_assumptions<T: Scalar>(
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    r: T,
    opts: &CheckOptions<T>,
) -> AssumptionReport {
    let mut report = AssumptionReport { checks: Vec::new() };
    let kappa = p.kappa();

    if r > kappa {
        report.push(
            "discount_exceeds_kappa",
            CheckStatus::Pass,
            format!("r = {r} > kappa = {kappa}"),
        );
    } else {
        report.push(
            "discount_exceeds_kappa",
            CheckStatus::Fail,
            format!(
                "r = {r} <= kappa = {kappa}: the no-investment region is empty (v = 1 everywhere), so no finite boundary exists"
            ),
        );
    }

    moment_condition(&mut report, p, model, r);
    shape_checks(&mut report, p, opts.seed);

    if opts.spot_paths > 0 {
        match integrability_spot_check(p, model, r, opts) {
            Ok(est) if est.value.is_finite() && est.se.is_finite() && est.se <= T::lit(0.5) * est.value.abs() => {
                report.push(
                    "integrability_spot_check",
                    CheckStatus::Pass,
                    format!(
                        "E int_0^{} e^(-rt) pi_c(e^X_t, 1) dt ~ {} (se {}) over {} paths; spot-check only",
                        opts.t_max, est.value, est.se, opts.spot_paths
                    ),
                );
            }
            Ok(est) => report.push(
                "integrability_spot_check",
                CheckStatus::Warn,
                format!(
                    "unstable estimate {} (se {}) over {} paths; integrability doubtful",
                    est.value, est.se, opts.spot_paths
                ),
            ),
            Err(e) => report.push("integrability_spot_check", CheckStatus::Warn, e.to_string()),
        }
    }
    report
}

fn moment_condition<T: Scalar>(report: &mut AssumptionReport, p: &ProfitFunction<T>, model: &LevyModel<T>, r: T) {
    let psi = |l: T| model.laplace_exponent(l);
    match *p.kind() {
        ProfitKind::CobbDouglas { alpha, beta } => {
            let a = alpha / (T::one() - beta);
            let b = alpha + beta;
            match (psi(a), psi(b)) {
                (Ok(pa), Ok(pb)) => {
                    let bound = T::zero().max(pa).max(pb);
                    let status = if r > bound {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    };
                    report.push(
                        "cobb_douglas_moment_condition",
                        status,
                        format!("need r > max(0, psi({a}) = {pa}, psi({b}) = {pb}) = {bound}; r = {r}"),
                    );
                }
                (Err(e), _) | (_, Err(e)) => report.push(
                    "cobb_douglas_moment_condition",
                    CheckStatus::Fail,
                    format!("required exponential moment missing: {e}"),
                ),
            }
        }
        ProfitKind::Ces { alpha, gamma } => {
            let kappa = (T::one() - alpha).powf(T::one() / gamma);
            match psi(T::one()) {
                Ok(p1) => {
                    let bound = kappa.max(p1);
                    let status = if r > bound {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    };
                    report.push(
                        "ces_moment_condition",
                        status,
                        format!("need r > max(kappa = {kappa}, psi(1) = {p1}) = {bound}; r = {r}"),
                    );
                }
                Err(e) => report.push(
                    "ces_moment_condition",
                    CheckStatus::Fail,
                    format!("required exponential moment missing: {e}"),
                ),
            }
        }
        ProfitKind::Log { alpha, beta } => {
            report.push(
                "log_marginal_bounded_in_z",
                CheckStatus::Pass,
                format!("pi_c(z, c) <= {beta} / c for every z"),
            );
            // ln(1 + x) <= x, so the Cobb-Douglas condition bounds the profit.
            let a = alpha / (T::one() - beta);
            let b = alpha + beta;
            let (status, detail) = match (psi(a), psi(b)) {
                (Ok(pa), Ok(pb)) if r > T::zero().max(pa).max(pb) => (
                    CheckStatus::Pass,
                    format!("dominating Cobb-Douglas condition holds: r = {r} > max(0, {pa}, {pb})"),
                ),
                (Ok(pa), Ok(pb)) => (
                    CheckStatus::Warn,
                    format!("dominating Cobb-Douglas condition fails (r = {r}, psi = {pa}, {pb}); finiteness of J not certified"),
                ),
                _ => (
                    CheckStatus::Warn,
                    "no exponential moments; logarithmic growth only, finiteness of J not certified by moments".to_string(),
                ),
            };
            report.push("log_growth_condition", status, detail);
        }
        ProfitKind::Custom => report.push(
            "moment_condition",
            CheckStatus::Warn,
            "custom profit: no closed-form moment condition available",
        ),
    }
}

fn shape_checks<T: Scalar>(report: &mut AssumptionReport, p: &ProfitFunction<T>, seed: u64) {
    let mut rng = Streams::new(seed).rng(tags::ASSUMPTIONS, 0);
    let mut failures: Vec<String> = Vec::new();
    let mut push_fail = |name: &str, z: T, c: T| {
        if failures.len() < 5 {
            failures.push(format!("{name} at (z, c) = ({z}, {c})"));
        }
    };
    let kappa = p.kappa();
    let mut inada_fail = 0usize;
    for _ in 0..SHAPE_SAMPLES {
        let u: f64 = rng.random_range(-5.0..5.0);
        let lc: f64 = rng.random_range(-4.0..4.0);
        let z = T::lit(u.exp());
        let c = T::lit(10f64.powf(lc));
        let m = p.marginal_unchecked(z, c);
        if !(m > T::zero() && m.is_finite()) {
            push_fail("non-positive marginal", z, c);
        }
        let c_up = c * T::lit(1.5);
        if !(p.marginal_unchecked(z, c_up) < m) {
            push_fail("marginal not strictly decreasing in c", z, c);
        }
        if p.marginal_unchecked(z * T::lit(1.5), c) < m {
            push_fail("marginal decreasing in z", z, c);
        }
        let h = c * T::lit(1e-3);
        let second = p.eval(z, c + h) - T::lit(2.0) * p.eval(z, c) + p.eval(z, c - h);
        if !(second < T::zero()) {
            push_fail("profit not strictly concave in c", z, c);
        }
        // Limits cannot be certified from samples; require the right trend.
        let grows = p.marginal_unchecked(z, T::lit(1e-12)) >= T::lit(2.0) * p.marginal_unchecked(z, T::lit(1e-4));
        let far = (p.marginal_unchecked(z, T::lit(1e4)) - kappa).abs();
        let farther = (p.marginal_unchecked(z, T::lit(1e12)) - kappa).abs();
        let settles = farther <= T::lit(0.5) * far || farther <= T::lit(1e-9) * T::one().max(kappa);
        if !(grows && settles) {
            inada_fail += 1;
        }
    }
    if failures.is_empty() {
        report.push(
            "marginal_shape",
            CheckStatus::Pass,
            format!("{SHAPE_SAMPLES} sampled points: pi_c > 0, strictly decreasing in c, nondecreasing in z, pi strictly concave"),
        );
    } else {
        report.push("marginal_shape", CheckStatus::Fail, failures.join("; "));
    }
    if inada_fail == 0 {
        report.push(
            "inada_limits",
            CheckStatus::Pass,
            format!(
                "pi_c grows as c -> 0 and settles towards kappa = {kappa} as c -> inf at {SHAPE_SAMPLES} sampled z"
            ),
        );
    } else {
        report.push(
            "inada_limits",
            CheckStatus::Fail,
            format!("{inada_fail} of {SHAPE_SAMPLES} sampled points violate the limits pi_c -> inf (c -> 0) or pi_c -> kappa (c -> inf)"),
        );
    }
}

fn integrability_spot_check<T: Scalar>(
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    r: T,
    opts: &CheckOptions<T>,
) -> Result<Estimate<T>> {
    let streams = Streams::new(opts.seed);
    let values = (0..opts.spot_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(tags::ASSUMPTIONS, i + 1);
            let mut acc = T::zero();
            let y = T::one();
            let half = T::lit(0.5);
            walk_path(model, opts.t_max, &opts.path, &mut rng, |seg| {
                let f0 = (-r * seg.t0).exp() * p.marginal_unchecked(seg.start.exp(), y);
                let f1 = (-r * seg.t1).exp() * p.marginal_unchecked(seg.end_pre_jump.exp(), y);
                acc = acc + half * (f0 + f1) * (seg.t1 - seg.t0);
                true
            })?;
            Ok(acc)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(mean_se(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cobb_douglas_marginal_value() {
        let p = ProfitFunction::<f64>::cobb_douglas(0.5, 0.5).unwrap();
        assert!((p.marginal(1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(p.kappa(), 0.0);
    }

    #[test]
    fn ces_marginal_at_zero_shock_equals_kappa() {
        let p = ProfitFunction::<f64>::ces(0.5, 0.5).unwrap();
        assert!((p.marginal(0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((p.kappa() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn negative_gamma_rejected() {
        assert!(matches!(ProfitFunction::ces(0.5, -0.5), Err(Error::Construction(_))));
        assert!(ProfitFunction::ces(0.5, 1.5).is_err());
        assert!(ProfitFunction::cobb_douglas(1.0, 0.5).is_err());
    }

    #[test]
    fn marginal_domain_error() {
        let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
        assert!(matches!(p.marginal(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(p.marginal(1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn custom_fallback_uses_finite_difference() {
        let eval: ProfitFn<f64> = Arc::new(|z, c| z.powf(0.3) * c.powf(0.6));
        let p = ProfitFunction::custom(eval, None, 0.0).unwrap();
        let exact = 0.6 * 2f64.powf(0.3) * 3f64.powf(-0.4);
        assert!((p.marginal(2.0, 3.0).unwrap() / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ces_kappa_gate() {
        let p = ProfitFunction::ces(0.5, 0.5).unwrap();
        let m = LevyModel::brownian(0.0, 2f64.sqrt()).unwrap();
        let mut opts = CheckOptions::for_rate(0.2, 1);
        opts.spot_paths = 0;
        let rep = check_assumptions(&p, &m, 0.2, &opts);
        assert_eq!(rep.get("discount_exceeds_kappa").unwrap().status, CheckStatus::Fail);
        assert!(!rep.passed());
        let rep = check_assumptions(&p, &m, 0.25, &opts);
        let c = rep.get("discount_exceeds_kappa").unwrap();
        assert_eq!(c.status, CheckStatus::Fail);
        assert!(c.detail.contains("no-investment region is empty"));
    }

    #[test]
    fn cobb_douglas_condition_on_benchmark() {
        let p = ProfitFunction::cobb_douglas(0.5, 0.5).unwrap();
        let m = LevyModel::brownian(0.0, 2f64.sqrt()).unwrap();
        let mut opts = CheckOptions::for_rate(2.0, 1);
        opts.spot_paths = 0;
        let rep = check_assumptions(&p, &m, 2.0, &opts);
        assert!(rep.passed(), "{rep:?}");
        let rep = check_assumptions(&p, &m, 1.0, &opts);
        assert_eq!(
            rep.get("cobb_douglas_moment_condition").unwrap().status,
            CheckStatus::Fail
        );
    }

    #[test]
    fn stable_needs_bounded_marginal() {
        let m = LevyModel::symmetric_stable(0.0, 0.0, 1.5, 0.5).unwrap();
        let mut opts = CheckOptions::for_rate(1.0, 1);
        opts.spot_paths = 0;
        let cd = check_assumptions(&ProfitFunction::cobb_douglas(0.5, 0.5).unwrap(), &m, 1.0, &opts);
        assert!(!cd.passed());
        let lg = check_assumptions(&ProfitFunction::log(0.5, 0.5).unwrap(), &m, 1.0, &opts);
        assert!(lg.passed(), "{lg:?}");
    }

    #[test]
    fn builtins_pass_shape_checks() {
        let m = LevyModel::brownian(0.0, 1.0).unwrap();
        let mut opts = CheckOptions::for_rate(2.0, 3);
        opts.spot_paths = 0;
        for p in [
            ProfitFunction::cobb_douglas(0.3, 0.6).unwrap(),
            ProfitFunction::ces(0.4, 0.5).unwrap(),
            ProfitFunction::log(0.5, 0.5).unwrap(),
        ] {
            let rep = check_assumptions(&p, &m, 2.0, &opts);
            assert_eq!(
                rep.get("marginal_shape").unwrap().status,
                CheckStatus::Pass,
                "{p:?}: {rep:?}"
            );
            assert_eq!(
                rep.get("inada_limits").unwrap().status,
                CheckStatus::Pass,
                "{p:?}: {rep:?}"
            );
        }
    }
}
