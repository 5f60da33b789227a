//! Simulation of the reflection policy driven by a boundary.
//!
//! Given a nondecreasing boundary `b`, the policy started from capacity `y`
//! at log-shock `x` keeps
//!
//! ```text
//! C_t = max(y, sup_{0 <= s < t} b(x + X_s)),
//! ```
//!
//! the least capacity that is never below the boundary. Because `b` is
//! nondecreasing, the supremum only moves when `X` reaches a new running
//! maximum, so paths are streamed step by step and `b` is evaluated only at
//! those updates. Per-step maxima come from the path sampler (exact bridge
//! extrema by default), which keeps the supremum free of the `O(sqrt(h))`
//! grid bias.
//!
//! Every estimator here draws replicate `i` from its own substream, collects
//! per-path results in replicate order and only then reduces them, so a
//! fixed seed gives identical numbers at any thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::levy::{walk_path, LevyModel, PathOptions, SamplePath, Segment};
use crate::profit::ProfitFunction;
use crate::rng::{tags, Streams};
use crate::stats::{mean_se, Estimate, PairedSamples};
use crate::Scalar;

/// Monte Carlo settings shared by the policy estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions<T> {
    pub n_paths: usize,
    pub path: PathOptions<T>,
    /// Truncation horizon of the time integrals.
    pub t_max: T,
}

impl<T: Scalar> SimulationOptions<T> {
    /// Step `1e-3 / r`, bridge extrema, `t_max = 20 / r`.
    pub fn for_rate(r: T, n_paths: usize) -> Self {
        Self {
            n_paths,
            path: PathOptions::for_rate(r),
            t_max: T::lit(20.0) / r,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Domain("n_paths must be at least 1".into()));
        }
        if !(self.t_max > T::zero() && self.t_max.is_finite()) {
            return Err(Error::Domain(format!(
                "t_max must be positive and finite, got {}",
                self.t_max
            )));
        }
        if !(self.path.step > T::zero()) {
            return Err(Error::Domain(format!("step must be positive, got {}", self.path.step)));
        }
        Ok(())
    }
}

fn check_state<T: Scalar>(x: T, y: T, r: T) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    if !(y > T::zero() && y.is_finite()) {
        return Err(Error::Domain(format!("capacity y must be positive, got {y}")));
    }
    if !(r > T::zero() && r.is_finite()) {
        return Err(Error::Domain(format!("discount rate must be positive, got {r}")));
    }
    Ok(())
}

/// Capacity `C_{t_i}` on the grid of `path` for the policy reflected at `b`.
/// `C_0 = y` and each later value uses only the path strictly before `t_i`.
pub fn simulate_policy<T: Scalar, B: Boundary<T>>(b: &B, x: T, y: T, path: &SamplePath<T>) -> Result<Vec<T>> {
    if !(y > T::zero()) {
        return Err(Error::Domain(format!("capacity y must be positive, got {y}")));
    }
    let sup = path.left_open_running_max();
    let mut out = Vec::with_capacity(sup.len());
    let mut cap = y;
    let mut last = T::neg_infinity();
    for s in sup {
        if s > last {
            last = s;
            cap = cap.max(b.level(x + s));
        }
        out.push(cap);
    }
    Ok(out)
}

/// Running capacities of the policies driven by `scale * b` for several scales
/// along one streamed path.
struct Reflection<'a, T, B> {
    b: &'a B,
    x: T,
    scales: &'a [T],
    run_max: T,
    cap: Vec<T>,
}

impl<'a, T: Scalar, B: Boundary<T>> Reflection<'a, T, B> {
    fn new(b: &'a B, x: T, y: T, scales: &'a [T]) -> Self {
        Self {
            b,
            x,
            scales,
            run_max: T::neg_infinity(),
            cap: vec![y; scales.len()],
        }
    }

    /// Folds the supremum of one step into the capacities.
    fn absorb(&mut self, seg_max: T) {
        if seg_max > self.run_max {
            self.run_max = seg_max;
            let level = self.b.level(self.x + seg_max);
            for (c, &s) in self.cap.iter_mut().zip(self.scales) {
                *c = c.max(s * level);
            }
        }
    }
}

/// Monte Carlo estimate of the objective for one policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyEvaluation<T = f64> {
    /// Multiple of the boundary that drove the policy.
    pub scale: T,
    pub j_estimate: T,
    pub j_se: T,
    pub pv_investment: Estimate<T>,
    pub truncation_horizon: T,
    /// Estimated size of the profit integral beyond the horizon.
    pub tail_bound: T,
    pub n_paths: usize,
}

/// Per-path results for every scale: objective, discounted investment, and the
/// discounted profit rate at the horizon.
struct ScaleOutcome<T> {
    j: Vec<T>,
    inv: Vec<T>,
    terminal: Vec<T>,
}

#[allow(clippy::too_many_arguments)]
fn walk_scales<T: Scalar, B: Boundary<T>>(
    b: &B,
    scales: &[T],
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    x: T,
    y: T,
    r: T,
    opts: &SimulationOptions<T>,
    streams: &Streams,
    replicate: u64,
) -> Result<ScaleOutcome<T>> {
    let k = scales.len();
    let mut rng = streams.rng(tags::POLICY, replicate);
    let mut refl = Reflection::new(b, x, y, scales);
    let mut j = vec![T::zero(); k];
    let mut inv = vec![T::zero(); k];
    let half = T::lit(0.5);
    // Discounted profit rate at the left end of the current step.
    let mut left: Vec<T> = refl.cap.iter().map(|&c| p.eval(x.exp(), c)).collect();
    let mut right = vec![T::zero(); k];
    walk_path(model, opts.t_max, &opts.path, &mut rng, |seg: &Segment<T>| {
        let d0 = (-r * seg.t0).exp();
        let d1 = (-r * seg.t1).exp();
        let dt = seg.t1 - seg.t0;
        let old = refl.cap.clone();
        refl.absorb(seg.max);
        let z_pre = (x + seg.end_pre_jump).exp();
        for i in 0..k {
            right[i] = d1 * p.eval(z_pre, refl.cap[i]);
            j[i] = j[i] + half * (left[i] + right[i]) * dt;
            inv[i] = inv[i] + d0 * (refl.cap[i] - old[i]);
        }
        if seg.jump {
            let z = (x + seg.end).exp();
            for (l, &c) in left.iter_mut().zip(&refl.cap) {
                *l = d1 * p.eval(z, c);
            }
        } else {
            left.copy_from_slice(&right);
        }
        true
    })?;
    for i in 0..k {
        j[i] = j[i] - inv[i];
    }
    Ok(ScaleOutcome { j, inv, terminal: left })
}

/// Objective estimates for the policies driven by `c * b`, one per scale,
/// together with paired differences against scale 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyComparison<T = f64> {
    pub rows: Vec<ComparisonRow<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow<T = f64> {
    pub evaluation: PolicyEvaluation<T>,
    /// `J(b) - J(scale * b)` on the shared path pool.
    pub gap_to_reference: Estimate<T>,
}

impl<T: Scalar> PolicyComparison<T> {
    pub fn row(&self, scale: T) -> Option<&ComparisonRow<T>> {
        self.rows.iter().find(|r| r.evaluation.scale == scale)
    }

    pub fn reference(&self) -> &ComparisonRow<T> {
        self.row(T::one()).expect("comparisons always include scale 1")
    }
}

fn tail_growth<T: Scalar>(p: &ProfitFunction<T>, model: &LevyModel<T>, r: T) -> Result<T> {
    match p.moment_growth(model) {
        Some(g) if g < r => Ok(g),
        Some(g) => Err(Error::ConditionViolation(format!(
            "profit growth rate {g} is not below r = {r}; the objective may be infinite"
        ))),
        None => Err(Error::ConditionViolation(
            "the moment conditions needed to bound the truncated tail are unavailable for this profit/model pair"
                .into(),
        )),
    }
}

/// Evaluates the policies driven by `c * b` for each `c` in `scales` on one
/// shared pool of paths (common random numbers). `scales` must contain 1.
#[allow(clippy::too_many_arguments)]
pub fn compare_policies<T: Scalar, B: Boundary<T>>(
    b: &B,
    scales: &[T],
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    x: T,
    y: T,
    r: T,
    opts: &SimulationOptions<T>,
    streams: &Streams,
) -> Result<PolicyComparison<T>> {
    check_state(x, y, r)?;
    opts.validate()?;
    if let Some(c) = scales.iter().find(|c| !(**c > T::zero() && c.is_finite())) {
        return Err(Error::Domain(format!("scales must be positive, got {c}")));
    }
    let reference = scales
        .iter()
        .position(|&c| c == T::one())
        .ok_or_else(|| Error::Domain("scales must include 1".into()))?;
    let growth = tail_growth(p, model, r)?;

    let outcomes = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| walk_scales(b, scales, p, model, x, y, r, opts, streams, i))
        .collect::<Result<Vec<_>>>()?;

    let j_rows: Vec<Vec<T>> = outcomes.iter().map(|o| o.j.clone()).collect();
    let paired = PairedSamples::from_rows(&j_rows);
    let rows = scales
        .iter()
        .enumerate()
        .map(|(k, &scale)| {
            let j = paired.estimate(k);
            let terminal = mean_se(outcomes.iter().map(|o| o.terminal[k]));
            ComparisonRow {
                evaluation: PolicyEvaluation {
                    scale,
                    j_estimate: j.value,
                    j_se: j.se,
                    pv_investment: mean_se(outcomes.iter().map(|o| o.inv[k])),
                    truncation_horizon: opts.t_max,
                    tail_bound: terminal.value.abs() / (r - growth),
                    n_paths: opts.n_paths,
                },
                gap_to_reference: paired.difference(reference, k),
            }
        })
        .collect();
    Ok(PolicyComparison { rows })
}

/// Estimates the discounted net profit of the policy reflected at `b`,
/// truncated at `opts.t_max`. Requires the moment conditions that bound the
/// neglected tail.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_profit<T: Scalar, B: Boundary<T>>(
    b: &B,
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    x: T,
    y: T,
    r: T,
    opts: &SimulationOptions<T>,
    streams: &Streams,
) -> Result<PolicyEvaluation<T>> {
    let cmp = compare_policies(b, &[T::one()], p, model, x, y, r, opts, streams)?;
    Ok(cmp.rows[0].evaluation)
}

/// A stopping time measurable from the path history, realized on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "at", rename_all = "snake_case")]
pub enum StoppingRule<T> {
    /// First grid time at or after `t`.
    Fixed(T),
    /// First grid time at which `X` is at or beyond the level (above it for a
    /// nonnegative level, below it for a negative one).
    Hitting(T),
}

impl<T: Scalar> StoppingRule<T> {
    fn triggered(&self, t: T, x: T, step: T) -> bool {
        match *self {
            StoppingRule::Fixed(s) => t + step * T::lit(1e-9) >= s,
            StoppingRule::Hitting(level) => {
                if level >= T::zero() {
                    x >= level
                } else {
                    x <= level
                }
            }
        }
    }
}

impl<T: Scalar> std::fmt::Display for StoppingRule<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StoppingRule::Fixed(t) => write!(f, "fixed({t})"),
            StoppingRule::Hitting(l) => write!(f, "hitting({l})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocRow<T = f64> {
    pub rule: StoppingRule<T>,
    /// `E[int_tau^T e^{-rs} pi_c ds] - E[e^{-r tau}]`; never positive at the optimum.
    pub supergradient: Estimate<T>,
}

/// First-order-condition residuals of the policy reflected at `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocReport<T = f64> {
    pub rows: Vec<FocRow<T>>,
    /// `E[sum_i (int_{t_i}^T e^{-rs} pi_c ds - e^{-r t_i}) dC_i]`; zero at the optimum.
    pub slackness: Estimate<T>,
    pub truncation_horizon: T,
    pub n_paths: usize,
}

/// Supergradient residual at each stopping rule and the complementary
/// slackness term, both computed pathwise. The conditional expectation inside
/// the slackness term is replaced by the realized future integral, which has
/// the same expectation once multiplied by an adapted increment.
#[allow(clippy::too_many_arguments)]
pub fn foc_residuals<T: Scalar, B: Boundary<T>>(
    b: &B,
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    x: T,
    y: T,
    r: T,
    rules: &[StoppingRule<T>],
    opts: &SimulationOptions<T>,
    streams: &Streams,
) -> Result<FocReport<T>> {
    check_state(x, y, r)?;
    opts.validate()?;
    let one = [T::one()];
    let per_path = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(tags::FOC, i);
            let mut refl = Reflection::new(b, x, y, &one);
            let half = T::lit(0.5);
            // Integral accumulated so far and, per rule, its value and the
            // discount factor at the stopping time.
            let mut acc = T::zero();
            let mut stops: Vec<Option<(T, T)>> = vec![None; rules.len()];
            let (mut dc_sum, mut weighted) = (T::zero(), T::zero());
            let mut left = p.marginal_unchecked(x.exp(), y);
            let mark = |t: T, xv: T, acc: T, stops: &mut Vec<Option<(T, T)>>| {
                for (s, rule) in stops.iter_mut().zip(rules) {
                    if s.is_none() && rule.triggered(t, xv, opts.path.step) {
                        *s = Some((acc, (-r * t).exp()));
                    }
                }
            };
            mark(T::zero(), T::zero(), acc, &mut stops);
            walk_path(model, opts.t_max, &opts.path, &mut rng, |seg: &Segment<T>| {
                let d0 = (-r * seg.t0).exp();
                let d1 = (-r * seg.t1).exp();
                let old = refl.cap[0];
                refl.absorb(seg.max);
                let cap = refl.cap[0];
                let dc = cap - old;
                if dc > T::zero() {
                    dc_sum = dc_sum + dc;
                    weighted = weighted + (acc + d0) * dc;
                }
                let right = d1 * p.marginal_unchecked((x + seg.end_pre_jump).exp(), cap);
                acc = acc + half * (left + right) * (seg.t1 - seg.t0);
                left = if seg.jump {
                    d1 * p.marginal_unchecked((x + seg.end).exp(), cap)
                } else {
                    right
                };
                mark(seg.t1, seg.end, acc, &mut stops);
                true
            })?;
            let total = acc;
            let mut row: Vec<T> = stops
                .iter()
                .map(|s| match s {
                    Some((a, d)) => total - *a - *d,
                    None => T::zero(),
                })
                .collect();
            row.push(total * dc_sum - weighted);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let paired = PairedSamples::from_rows(&per_path);
    let rows = rules
        .iter()
        .enumerate()
        .map(|(k, &rule)| FocRow {
            rule,
            supergradient: paired.estimate(k),
        })
        .collect();
    Ok(FocReport {
        rows,
        slackness: paired.estimate(rules.len()),
        truncation_horizon: opts.t_max,
        n_paths: opts.n_paths,
    })
}

/// Stopping values `v(x_j, y_j)` at several points on one shared pool of paths.
/// Column `j` of the result holds the per-path values for point `j`, so
/// differences between points carry paired standard errors.
///
/// `v(x, y) = E[int_0^tau e^{-rs} pi_c(e^{x+X_s}, y) ds + e^{-r tau}]` with
/// `tau` the first grid time at which the policy has invested, i.e. at which
/// `sup_{s<t} b(x + X_s) >= y`; `e^{-r tau}` counts as zero past `t_max`.
/// When `b(x) >= y` the value is exactly 1.
#[allow(clippy::too_many_arguments)]
pub fn stopping_values<T: Scalar, B: Boundary<T>>(
    b: &B,
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    points: &[(T, T)],
    r: T,
    opts: &SimulationOptions<T>,
    streams: &Streams,
) -> Result<PairedSamples<T>> {
    opts.validate()?;
    for &(x, y) in points {
        check_state(x, y, r)?;
    }
    let immediate: Vec<bool> = points.iter().map(|&(x, y)| b.level(x) >= y).collect();
    let per_path = (0..opts.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut values: Vec<Option<T>> = immediate.iter().map(|&s| s.then_some(T::one())).collect();
            let mut open = values.iter().filter(|v| v.is_none()).count();
            if open > 0 {
                let mut rng = streams.rng(tags::STOPPING, i);
                let half = T::lit(0.5);
                let mut acc = vec![T::zero(); points.len()];
                let mut left: Vec<T> = points.iter().map(|&(x, y)| p.marginal_unchecked(x.exp(), y)).collect();
                let mut run_max = T::neg_infinity();
                walk_path(model, opts.t_max, &opts.path, &mut rng, |seg: &Segment<T>| {
                    let d1 = (-r * seg.t1).exp();
                    let dt = seg.t1 - seg.t0;
                    let moved = seg.max > run_max;
                    if moved {
                        run_max = seg.max;
                    }
                    for (j, &(x, y)) in points.iter().enumerate() {
                        if values[j].is_some() {
                            continue;
                        }
                        let right = d1 * p.marginal_unchecked((x + seg.end_pre_jump).exp(), y);
                        acc[j] = acc[j] + half * (left[j] + right) * dt;
                        if moved && b.level(x + run_max) >= y {
                            values[j] = Some(acc[j] + d1);
                            open -= 1;
                        } else {
                            left[j] = if seg.jump {
                                d1 * p.marginal_unchecked((x + seg.end).exp(), y)
                            } else {
                                right
                            };
                        }
                    }
                    open > 0
                })?;
                for (v, a) in values.iter_mut().zip(acc) {
                    v.get_or_insert(a);
                }
            }
            Ok(values.into_iter().map(|v| v.expect("filled above")).collect::<Vec<T>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairedSamples::from_rows(&per_path))
}

/// Stopping value `v(x, y)` with its standard error; see [`stopping_values`].
#[allow(clippy::too_many_arguments)]
pub fn stopping_value<T: Scalar, B: Boundary<T>>(
    b: &B,
    p: &ProfitFunction<T>,
    model: &LevyModel<T>,
    x: T,
    y: T,
    r: T,
    opts: &SimulationOptions<T>,
    streams: &Streams,
) -> Result<Estimate<T>> {
    Ok(stopping_values(b, p, model, &[(x, y)], r, opts, streams)?.estimate(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{cobb_douglas_boundary, NoInvestment};
    use crate::wiener_hopf::WienerHopfFactors;

    fn bench() -> (LevyModel<f64>, ProfitFunction<f64>) {
        (
            LevyModel::brownian(0.0, 2f64.sqrt()).unwrap(),
            ProfitFunction::cobb_douglas(0.5, 0.5).unwrap(),
        )
    }

    fn quick(n: usize) -> SimulationOptions<f64> {
        SimulationOptions {
            n_paths: n,
            path: PathOptions::bridge(0.01),
            t_max: 10.0,
        }
    }

    struct Identity;
    impl Boundary<f64> for Identity {
        fn level(&self, u: f64) -> f64 {
            u.exp()
        }
    }

    #[test]
    fn capacity_on_monotone_path_tracks_previous_point() {
        let path = SamplePath::from_grid(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.5, 1.0, 1.5]).unwrap();
        let c = simulate_policy(&Identity, 0.0, 0.1, &path).unwrap();
        assert_eq!(c[0], 0.1);
        for (ci, v) in c[1..].iter().zip(&path.values) {
            assert!((ci - v.exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn capacity_stays_at_y_below_boundary() {
        let path = SamplePath::from_grid(vec![0.0, 1.0, 2.0], vec![0.0, -0.5, 0.3]).unwrap();
        let c = simulate_policy(&Identity, 0.0, 5.0, &path).unwrap();
        assert!(c.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn zero_policy_matches_closed_form() {
        let (m, p) = bench();
        let opts = quick(4000);
        let e = evaluate_profit(&NoInvestment, &p, &m, 0.2, 1.5, 2.0, &opts, &Streams::new(11)).unwrap();
        // psi(alpha) = 0.25
        let exact = 1.5f64.sqrt() * 0.1f64.exp() * (1.0 - (-1.75 * 10.0f64).exp()) / 1.75;
        assert!(e.pv_investment.value == 0.0 && e.pv_investment.se == 0.0);
        assert!(((e.j_estimate - exact) / e.j_se).abs() < 3.0, "{e:?} vs {exact}");
    }

    #[test]
    fn comparison_with_unit_scale_only_matches_evaluation() {
        let (m, p) = bench();
        let wh = WienerHopfFactors::exact(&m, 2.0).unwrap();
        let b = cobb_douglas_boundary(0.5, 0.5, &wh, 2.0).unwrap();
        let opts = quick(50);
        let s = Streams::new(3);
        let e = evaluate_profit(&b, &p, &m, 0.0, 0.5, 2.0, &opts, &s).unwrap();
        let c = compare_policies(&b, &[1.0], &p, &m, 0.0, 0.5, 2.0, &opts, &s).unwrap();
        assert_eq!(c.rows.len(), 1);
        assert_eq!(c.rows[0].evaluation, e);
        assert!(compare_policies(&b, &[2.0], &p, &m, 0.0, 0.5, 2.0, &opts, &s).is_err());
    }

    #[test]
    fn stopping_value_is_one_below_boundary() {
        let (m, p) = bench();
        let wh = WienerHopfFactors::exact(&m, 2.0).unwrap();
        let b = cobb_douglas_boundary(0.5, 0.5, &wh, 2.0).unwrap();
        let v = stopping_value(&b, &p, &m, 0.0, 0.5 * b.at(0.0), 2.0, &quick(10), &Streams::new(1)).unwrap();
        assert_eq!(v, Estimate { value: 1.0, se: 0.0 });
    }

    #[test]
    fn custom_profit_has_no_tail_bound() {
        let (m, _) = bench();
        let p = ProfitFunction::custom(std::sync::Arc::new(|z: f64, c: f64| z * c.sqrt()), None, 0.0).unwrap();
        let e = evaluate_profit(&NoInvestment, &p, &m, 0.0, 1.0, 2.0, &quick(2), &Streams::new(1));
        assert!(matches!(e, Err(Error::ConditionViolation(_))));
    }
}
