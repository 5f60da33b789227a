//! Parametric Lévy families, their Laplace exponents and path sampling.
//!
//! Paths are simulated on a grid that starts at zero, advances by a fixed
//! step and always contains the horizon and every jump time of the
//! finite-activity component. For the Gaussian part the supremum and infimum
//! inside each step can be drawn exactly from the Brownian-bridge law, which
//! removes the `O(sqrt(h))` bias of grid-only extrema.

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Exp1, OpenClosed01, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::Scalar;

/// Jump component of a [`LevyModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family<T> {
    BrownianDrift,
    /// Compound Poisson jumps with normally distributed sizes.
    Merton {
        intensity: T,
        jump_mean: T,
        jump_sd: T,
    },
    /// Compound Poisson jumps with double-exponential sizes: upward with
    /// probability `p_up` and rate `eta_up`, downward with rate `eta_down`.
    Kou {
        intensity: T,
        p_up: T,
        eta_up: T,
        eta_down: T,
    },
    /// Symmetric alpha-stable component with index in (1, 2).
    SymmetricStable {
        index: T,
        scale: T,
    },
}

impl<T> Family<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Family::BrownianDrift => "brownian_drift",
            Family::Merton { .. } => "merton",
            Family::Kou { .. } => "kou",
            Family::SymmetricStable { .. } => "symmetric_stable",
        }
    }
}

/// `X_t = mu t + sigma B_t + J_t` with `J` given by [`Family`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevyModel<T = f64> {
    pub mu: T,
    pub sigma: T,
    pub family: Family<T>,
}

impl<T: Scalar> LevyModel<T> {
    pub fn brownian(mu: T, sigma: T) -> Result<Self> {
        Self::new(mu, sigma, Family::BrownianDrift)
    }

    pub fn merton(mu: T, sigma: T, intensity: T, jump_mean: T, jump_sd: T) -> Result<Self> {
        Self::new(
            mu,
            sigma,
            Family::Merton {
                intensity,
                jump_mean,
                jump_sd,
            },
        )
    }

    pub fn kou(mu: T, sigma: T, intensity: T, p_up: T, eta_up: T, eta_down: T) -> Result<Self> {
        Self::new(
            mu,
            sigma,
            Family::Kou {
                intensity,
                p_up,
                eta_up,
                eta_down,
            },
        )
    }

    pub fn symmetric_stable(mu: T, sigma: T, index: T, scale: T) -> Result<Self> {
        Self::new(mu, sigma, Family::SymmetricStable { index, scale })
    }

    pub fn new(mu: T, sigma: T, family: Family<T>) -> Result<Self> {
        let model = Self { mu, sigma, family };
        model.validate()?;
        Ok(model)
    }

    /// Pure drift `X_t = mu t`; rejected by [`LevyModel::new`] and only used
    /// as an analytic oracle in tests.
    #[cfg(test)]
    pub(crate) fn pure_drift_for_tests(mu: T) -> Self {
        Self {
            mu,
            sigma: T::zero(),
            family: Family::BrownianDrift,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Construction(msg));
        if !self.mu.is_finite() {
            return bad(format!("drift mu must be finite, got {}", self.mu));
        }
        if !self.sigma.is_finite() || self.sigma < T::zero() {
            return bad(format!("volatility sigma must be finite and >= 0, got {}", self.sigma));
        }
        let zero = T::zero();
        match self.family {
            Family::BrownianDrift => {
                if self.sigma == zero {
                    return bad("brownian_drift with sigma = 0 is a pure drift, not an admissible Lévy model".into());
                }
            }
            Family::Merton {
                intensity,
                jump_mean,
                jump_sd,
            } => {
                check_rate("intensity", intensity)?;
                if !jump_mean.is_finite() {
                    return bad(format!("jump_mean must be finite, got {jump_mean}"));
                }
                if !jump_sd.is_finite() || jump_sd < zero {
                    return bad(format!("jump_sd must be finite and >= 0, got {jump_sd}"));
                }
                if self.sigma == zero {
                    return bad(
                        "merton requires sigma > 0 (point-hitting is not established without a Gaussian part)".into(),
                    );
                }
            }
            Family::Kou {
                intensity,
                p_up,
                eta_up,
                eta_down,
            } => {
                check_rate("intensity", intensity)?;
                if !(p_up >= zero && p_up <= T::one()) {
                    return bad(format!("p_up must lie in [0, 1], got {p_up}"));
                }
                if !(eta_up > zero && eta_up.is_finite()) {
                    return bad(format!("eta_up must be > 0, got {eta_up}"));
                }
                if !(eta_down > zero && eta_down.is_finite()) {
                    return bad(format!("eta_down must be > 0, got {eta_down}"));
                }
                if self.sigma == zero {
                    if intensity == zero {
                        return bad("kou with sigma = 0 and no jumps is a pure drift".into());
                    }
                    if self.mu == zero {
                        return bad("kou with sigma = 0 and mu = 0 is a compound Poisson process".into());
                    }
                    if p_up == T::one() && self.mu > zero {
                        return bad("kou with sigma = 0, upward jumps only and mu > 0 is a subordinator".into());
                    }
                }
            }
            Family::SymmetricStable { index, scale } => {
                if !(index > T::one() && index < T::lit(2.0)) {
                    return bad(format!("stable index must lie in (1, 2), got {index}"));
                }
                if !(scale > zero && scale.is_finite()) {
                    return bad(format!("stable scale must be > 0, got {scale}"));
                }
            }
        }
        Ok(())
    }

    pub fn jump_intensity(&self) -> T {
        match self.family {
            Family::Merton { intensity, .. } | Family::Kou { intensity, .. } => intensity,
            _ => T::zero(),
        }
    }

    /// Every supported family hits every point of the real line with positive
    /// probability (Gaussian component, or symmetric stable with index in (1, 2)).
    pub fn hits_points(&self) -> bool {
        true
    }

    /// Open interval of `lambda` on which `E[exp(lambda X_1)]` is finite.
    /// `None` when only `lambda = 0` qualifies.
    pub fn exponent_domain(&self) -> Option<(T, T)> {
        let inf = T::infinity();
        match self.family {
            Family::BrownianDrift | Family::Merton { .. } => Some((-inf, inf)),
            Family::Kou {
                intensity,
                p_up,
                eta_up,
                eta_down,
            } => {
                let hi = if intensity > T::zero() && p_up > T::zero() {
                    eta_up
                } else {
                    inf
                };
                let lo = if intensity > T::zero() && p_up < T::one() {
                    -eta_down
                } else {
                    -inf
                };
                Some((lo, hi))
            }
            Family::SymmetricStable { .. } => None,
        }
    }

    /// `log E[exp(lambda X_1)]`.
    pub fn laplace_exponent(&self, lambda: T) -> Result<T> {
        if lambda == T::zero() {
            return Ok(T::zero());
        }
        let half = T::lit(0.5);
        let diffusive = self.mu * lambda + half * self.sigma * self.sigma * lambda * lambda;
        match self.family {
            Family::BrownianDrift => Ok(diffusive),
            Family::Merton {
                intensity,
                jump_mean,
                jump_sd,
            } => {
                let mgf = (jump_mean * lambda + half * jump_sd * jump_sd * lambda * lambda).exp();
                Ok(diffusive + intensity * (mgf - T::one()))
            }
            Family::Kou {
                intensity,
                p_up,
                eta_up,
                eta_down,
            } => {
                let (lo, hi) = self.exponent_domain().expect("kou has an exponent domain");
                if !(lambda > lo && lambda < hi) {
                    return Err(Error::Domain(format!(
                        "laplace exponent of kou model is infinite at lambda = {lambda} (finite on ({lo}, {hi}))"
                    )));
                }
                let up = p_up * eta_up / (eta_up - lambda);
                let down = (T::one() - p_up) * eta_down / (eta_down + lambda);
                Ok(diffusive + intensity * (up + down - T::one()))
            }
            Family::SymmetricStable { .. } => Err(Error::Domain(format!(
                "symmetric stable laws have no exponential moments (lambda = {lambda})"
            ))),
        }
    }
}

fn check_rate<T: Scalar>(key: &str, v: T) -> Result<()> {
    if v.is_finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(Error::Construction(format!("{key} must be finite and >= 0, got {v}")))
    }
}

/// Exponential horizon with rate `r`, drawn from `rng`.
pub fn sample_horizon<T: Scalar, R: Rng + ?Sized>(r: T, rng: &mut R) -> T {
    let e: f64 = Exp1.sample(rng);
    T::lit(e) / r
}

/// How extrema inside a grid step are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExtremaMethod {
    /// Maximum and minimum over grid values only.
    Grid,
    /// Exact Brownian-bridge extrema of the Gaussian part within each step.
    /// Falls back to grid values for stable models.
    #[default]
    BrownianBridge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions<T> {
    pub step: T,
    pub extrema: ExtremaMethod,
}

impl<T: Scalar> PathOptions<T> {
    /// Step `1e-3 / r` with bridge extrema.
    pub fn for_rate(r: T) -> Self {
        Self {
            step: T::lit(1e-3) / r,
            extrema: ExtremaMethod::BrownianBridge,
        }
    }

    pub fn grid(step: T) -> Self {
        Self {
            step,
            extrema: ExtremaMethod::Grid,
        }
    }

    pub fn bridge(step: T) -> Self {
        Self {
            step,
            extrema: ExtremaMethod::BrownianBridge,
        }
    }
}

/// One step of a simulated path, from grid time `t0` to grid time `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub t0: T,
    pub t1: T,
    /// `X_{t0}`.
    pub start: T,
    /// Left limit `X_{t1-}`.
    pub end_pre_jump: T,
    /// `X_{t1}`, including a jump at `t1` if there is one.
    pub end: T,
    /// Supremum over `[t0, t1)` (includes the left limit at `t1`).
    pub max: T,
    /// Infimum over `[t0, t1)`.
    pub min: T,
    pub jump: bool,
}

/// A discretized path of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T = f64> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub jump_times: Vec<T>,
    /// Per-step supremum over `[t_i, t_{i+1})`, when the sampler recorded one.
    pub step_max: Option<Vec<T>>,
    /// Per-step infimum over `[t_i, t_{i+1})`, when the sampler recorded one.
    pub step_min: Option<Vec<T>>,
}

impl<T: Scalar> SamplePath<T> {
    /// A path known only through its grid values.
    pub fn from_grid(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::Construction(
                "times and values must be non-empty and equally long".into(),
            ));
        }
        if times[0] != T::zero() || values[0] != T::zero() {
            return Err(Error::Construction("paths start at (0, 0)".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Construction("times must be strictly increasing".into()));
        }
        Ok(Self {
            times,
            values,
            jump_times: Vec::new(),
            step_max: None,
            step_min: None,
        })
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("non-empty path")
    }

    /// Supremum of `X` over `[0, t_i)` for each grid index `i` (`-inf` at `i = 0`).
    pub fn left_open_running_max(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.times.len());
        let mut run = T::neg_infinity();
        out.push(run);
        for i in 0..self.times.len() - 1 {
            let step = match &self.step_max {
                Some(m) => m[i],
                None => self.values[i],
            };
            run = run.max(step);
            out.push(run);
        }
        out
    }
}

/// `(X_T, M_T, I_T)` for one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremaSample<T = f64> {
    pub x_t: T,
    pub m_t: T,
    pub i_t: T,
}

/// Drives the simulation of one path on `[0, horizon]`, handing each step to
/// `visit`. Returning `false` from `visit` stops the walk early.
pub fn walk_path<T, R, F>(
    model: &LevyModel<T>,
    horizon: T,
    opts: &PathOptions<T>,
    rng: &mut R,
    mut visit: F,
) -> Result<()>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(&Segment<T>) -> bool,
{
    if !(horizon > T::zero()) || !(opts.step > T::zero()) {
        return Err(Error::Domain(format!(
            "horizon ({horizon}) and step ({}) must be positive",
            opts.step
        )));
    }
    let stable = match model.family {
        Family::SymmetricStable { index, scale } => Some((index.to_f64_lossy(), scale.to_f64_lossy())),
        _ => None,
    };
    let bridge = opts.extrema == ExtremaMethod::BrownianBridge && stable.is_none() && model.sigma > T::zero();
    let intensity = model.jump_intensity().to_f64_lossy();
    let mu = model.mu.to_f64_lossy();
    let sigma = model.sigma.to_f64_lossy();
    let step = opts.step.to_f64_lossy();
    let horizon = horizon.to_f64_lossy();

    let mut next_jump = if intensity > 0.0 {
        let e: f64 = Exp1.sample(rng);
        e / intensity
    } else {
        f64::INFINITY
    };
    let mut t = 0.0_f64;
    let mut x = 0.0_f64;
    while t < horizon {
        let grid_next = (t + step).min(horizon);
        let (t1, jump) = if next_jump < grid_next {
            (next_jump, true)
        } else {
            (grid_next, false)
        };
        // Guard against a step that rounds to nothing.
        let t1 = if t1 <= t { grid_next } else { t1 };
        let dt = t1 - t;
        let mut pre = x + mu * dt;
        if sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            pre += sigma * dt.sqrt() * z;
        }
        if let Some((alpha, scale)) = stable {
            pre += scale * dt.powf(1.0 / alpha) * stable_symmetric_standard(alpha, rng);
        }
        let (max, min) = if bridge {
            let gap2 = (pre - x) * (pre - x);
            let two_var = 2.0 * sigma * sigma * dt;
            let u1: f64 = OpenClosed01.sample(rng);
            let u2: f64 = OpenClosed01.sample(rng);
            let hi = 0.5 * (x + pre + (gap2 - two_var * u1.ln()).sqrt());
            let lo = 0.5 * (x + pre - (gap2 - two_var * u2.ln()).sqrt());
            (hi.max(x).max(pre), lo.min(x).min(pre))
        } else {
            (x.max(pre), x.min(pre))
        };
        let end = if jump {
            let size = draw_jump(&model.family, rng);
            let e: f64 = Exp1.sample(rng);
            next_jump = t1 + e / intensity;
            pre + size
        } else {
            pre
        };
        let seg = Segment {
            t0: T::lit(t),
            t1: T::lit(t1),
            start: T::lit(x),
            end_pre_jump: T::lit(pre),
            end: T::lit(end),
            max: T::lit(max),
            min: T::lit(min),
            jump,
        };
        t = t1;
        x = end;
        if !visit(&seg) {
            break;
        }
    }
    Ok(())
}

fn draw_jump<T: Scalar, R: Rng + ?Sized>(family: &Family<T>, rng: &mut R) -> f64 {
    match *family {
        Family::Merton { jump_mean, jump_sd, .. } => {
            let z: f64 = StandardNormal.sample(rng);
            jump_mean.to_f64_lossy() + jump_sd.to_f64_lossy() * z
        }
        Family::Kou {
            p_up, eta_up, eta_down, ..
        } => {
            let u: f64 = rng.random();
            let e: f64 = Exp1.sample(rng);
            if u < p_up.to_f64_lossy() {
                e / eta_up.to_f64_lossy()
            } else {
                -e / eta_down.to_f64_lossy()
            }
        }
        _ => 0.0,
    }
}

/// Standard symmetric alpha-stable variate with characteristic function
/// `exp(-|theta|^alpha)`, by the Chambers-Mallows-Stuck transform.
pub fn stable_symmetric_standard<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let v = loop {
        let u: f64 = rng.random();
        let v = (u - 0.5) * std::f64::consts::PI;
        if v.abs() < half_pi {
            break v;
        }
    };
    let w: f64 = loop {
        let w: f64 = Exp1.sample(rng);
        if w > 0.0 {
            break w;
        }
    };
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Simulates `X` on `[0, horizon]`.
pub fn sample_path<T, R>(model: &LevyModel<T>, horizon: T, opts: &PathOptions<T>, rng: &mut R) -> Result<SamplePath<T>>
where
    T: Scalar,
    R: Rng + ?Sized,
{
    let expected = (horizon / opts.step).ceil().to_usize().unwrap_or(0) + 2;
    let mut times = Vec::with_capacity(expected);
    let mut values = Vec::with_capacity(expected);
    let mut step_max = Vec::with_capacity(expected);
    let mut step_min = Vec::with_capacity(expected);
    let mut jump_times = Vec::new();
    times.push(T::zero());
    values.push(T::zero());
    walk_path(model, horizon, opts, rng, |seg| {
        times.push(seg.t1);
        values.push(seg.end);
        step_max.push(seg.max);
        step_min.push(seg.min);
        if seg.jump {
            jump_times.push(seg.t1);
        }
        true
    })?;
    Ok(SamplePath {
        times,
        values,
        jump_times,
        step_max: Some(step_max),
        step_min: Some(step_min),
    })
}

/// Terminal value, running maximum and running minimum of a path.
pub fn path_extrema<T: Scalar>(path: &SamplePath<T>) -> ExtremaSample<T> {
    let x_t = *path.values.last().expect("non-empty path");
    let grid_max = path.values.iter().copied().fold(T::neg_infinity(), T::max);
    let grid_min = path.values.iter().copied().fold(T::infinity(), T::min);
    let m_t = path
        .step_max
        .as_ref()
        .map_or(grid_max, |m| m.iter().copied().fold(grid_max, T::max));
    let i_t = path
        .step_min
        .as_ref()
        .map_or(grid_min, |m| m.iter().copied().fold(grid_min, T::min));
    ExtremaSample { x_t, m_t, i_t }
}

/// Extrema of a freshly simulated path, without materializing the grid.
pub fn sample_extrema<T, R>(
    model: &LevyModel<T>,
    horizon: T,
    opts: &PathOptions<T>,
    rng: &mut R,
) -> Result<ExtremaSample<T>>
where
    T: Scalar,
    R: Rng + ?Sized,
{
    let mut out = ExtremaSample {
        x_t: T::zero(),
        m_t: T::zero(),
        i_t: T::zero(),
    };
    walk_path(model, horizon, opts, rng, |seg| {
        out.x_t = seg.end;
        out.m_t = out.m_t.max(seg.max).max(seg.end);
        out.i_t = out.i_t.min(seg.min).min(seg.end);
        true
    })?;
    Ok(out)
}
