//! Wiener-Hopf quantities at an independent exponential time `T_r`.
//!
//! For Brownian motion with drift and for Kou double-exponential jump
//! diffusions, `M_{T_r}` and `-I_{T_r}` are finite mixtures of exponential
//! laws whose rates are the real roots of `psi(lambda) = r`. Those exact
//! laws give tolerance-free oracles. Every other model (and every model on
//! request) is handled by sampling `(X, M, I)` at independent exponential
//! horizons.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{sample_extrema, sample_horizon, ExtremaSample, Family, LevyModel, PathOptions};
use crate::quadrature::{integrate, QuadOptions};
use crate::rng::{tags, Streams};
use crate::roots::{bisect, Tolerance};
use crate::stats::{covariance, mean_se, Estimate};
use crate::Scalar;

/// Below this many samples, Monte Carlo moments are flagged as unreliable.
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Law of a non-negative variable with density `sum_j w_j rho_j exp(-rho_j x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpMixture<T = f64> {
    pub weights: Vec<T>,
    pub rates: Vec<T>,
}

impl<T: Scalar> ExpMixture<T> {
    /// Mixture whose Laplace transform is
    /// `prod_j rho_j/(rho_j + s) * prod_k (eta_k + s)/eta_k`, as produced by a
    /// rational Wiener-Hopf factor with roots `rho_j` and poles `eta_k`.
    pub fn from_roots_and_poles(roots: &[T], poles: &[T]) -> Self {
        let weights = roots
            .iter()
            .enumerate()
            .map(|(j, &rj)| {
                let pole_part = poles.iter().fold(T::one(), |acc, &eta| acc * (eta - rj) / eta);
                let root_part = roots
                    .iter()
                    .enumerate()
                    .filter(|&(l, _)| l != j)
                    .fold(T::one(), |acc, (_, &rl)| acc * rl / (rl - rj));
                pole_part * root_part
            })
            .collect();
        Self {
            weights,
            rates: roots.to_vec(),
        }
    }

    /// `E[exp(-s Y)]`, finite for `s > -min(rates)`.
    pub fn laplace(&self, s: T) -> T {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(&w, &rho)| w * rho / (rho + s))
            .sum()
    }

    pub fn min_rate(&self) -> T {
        self.rates.iter().copied().fold(T::infinity(), T::min)
    }

    /// `E[g(Y)]` by adaptive quadrature of each exponential component after
    /// the substitution `v = 1 - exp(-rho y)`.
    pub fn expect<F: FnMut(T) -> T>(&self, mut g: F, opts: QuadOptions) -> T {
        let n = T::lit(self.weights.len() as f64);
        let per = QuadOptions {
            abs_tol: opts.abs_tol / n.to_f64_lossy(),
            ..opts
        };
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(&w, &rho)| {
                let r = integrate(|v: T| g(-(-v).ln_1p() / rho), T::zero(), T::one(), per);
                w * r.value
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorMode {
    ExactRational,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
enum FactorLaw<T> {
    Exact {
        roots: Vec<T>,
        sup: ExpMixture<T>,
        inf: ExpMixture<T>,
    },
    MonteCarlo {
        samples: Vec<ExtremaSample<T>>,
    },
}

/// Exact or sampled laws of `(X_{T_r}, M_{T_r}, I_{T_r})` for one model and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerHopfFactors<T = f64> {
    model: LevyModel<T>,
    r: T,
    law: FactorLaw<T>,
}

/// Evaluates `psi(lambda) - r` as a rational function, ignoring the finite
/// moment domain so that roots beyond the poles can be bracketed.
fn cramer_function<T: Scalar>(model: &LevyModel<T>, r: T, lambda: T) -> T {
    let half = T::lit(0.5);
    let diffusive = model.mu * lambda + half * model.sigma * model.sigma * lambda * lambda;
    let jumps = match model.family {
        Family::Kou {
            intensity,
            p_up,
            eta_up,
            eta_down,
        } => {
            let up = if p_up > T::zero() {
                p_up * eta_up / (eta_up - lambda)
            } else {
                T::zero()
            };
            let down = if p_up < T::one() {
                (T::one() - p_up) * eta_down / (eta_down + lambda)
            } else {
                T::zero()
            };
            intensity * (up + down - T::one())
        }
        _ => T::zero(),
    };
    diffusive + jumps - r
}

/// Real solutions of `psi(lambda) = r`, sorted ascending.
///
/// Brownian motion with drift has the two roots of a quadratic. A Kou model
/// with `sigma > 0` has one root per interval delimited by its poles `-eta_down`,
/// `0`, `eta_up` and infinity: four when jumps go both ways. All roots are simple.
pub fn cramer_roots<T: Scalar>(model: &LevyModel<T>, r: T) -> Result<Vec<T>> {
    if !(r > T::zero()) {
        return Err(Error::Domain(format!("discount rate must be positive, got {r}")));
    }
    match model.family {
        Family::BrownianDrift => {
            let s2 = model.sigma * model.sigma;
            let disc = (model.mu * model.mu + T::lit(2.0) * s2 * r).sqrt();
            Ok(vec![(-model.mu - disc) / s2, (-model.mu + disc) / s2])
        }
        Family::Kou {
            intensity,
            p_up,
            eta_up,
            eta_down,
        } => {
            if model.sigma == T::zero() {
                return Err(Error::UnsupportedModel(
                    "exact Wiener-Hopf factors for kou need sigma > 0".into(),
                ));
            }
            let f = |l: T| cramer_function(model, r, l);
            let eps = T::lit(4.0) * T::epsilon();
            let mut roots = Vec::with_capacity(4);
            let mut side = |pole: Option<T>, sign: T| -> Result<()> {
                // Search on sign * (0, inf); f(0) = -r < 0 and f -> +inf at the
                // pole from inside and at infinity, f -> -inf just past the pole.
                let inner_hi = match pole {
                    Some(eta) => eta * (T::one() - eps),
                    None => grow_until_positive(|x| f(sign * x), T::one())?,
                };
                roots.push(sign * solve_on(|x| f(sign * x), T::zero(), inner_hi)?);
                if let Some(eta) = pole {
                    let outer_lo = eta * (T::one() + eps);
                    let outer_hi = grow_until_positive(|x| f(sign * x), T::lit(2.0) * eta)?;
                    roots.push(sign * solve_on(|x| f(sign * x), outer_lo, outer_hi)?);
                }
                Ok(())
            };
            let jumps = intensity > T::zero();
            side((jumps && p_up > T::zero()).then_some(eta_up), T::one())?;
            side((jumps && p_up < T::one()).then_some(eta_down), -T::one())?;
            roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
            Ok(roots)
        }
        Family::Merton { .. } | Family::SymmetricStable { .. } => Err(Error::UnsupportedModel(format!(
            "{} has no rational Wiener-Hopf factorization",
            model.family.name()
        ))),
    }
}

fn solve_on<T: Scalar, F: FnMut(T) -> T>(f: F, lo: T, hi: T) -> Result<T> {
    bisect(f, lo, hi, Tolerance::machine())
        .ok_or_else(|| Error::Domain(format!("no sign change of psi - r on [{lo}, {hi}]")))
}

fn grow_until_positive<T: Scalar, F: FnMut(T) -> T>(mut f: F, start: T) -> Result<T> {
    let mut x = start;
    for _ in 0..200 {
        if f(x) > T::zero() {
            return Ok(x);
        }
        x = x * T::lit(2.0);
    }
    Err(Error::Domain("psi - r stays negative; no root found".into()))
}

/// Sampled `E[exp(lambda M)]` together with diagnostics for heavy tails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentDiagnostics<T = f64> {
    pub estimate: Estimate<T>,
    /// Largest single term divided by the sum of all terms.
    pub max_term_share: T,
    /// Running means after 1/8, 1/4, 1/2 and all of the samples.
    pub running_means: Vec<T>,
}

/// `E[e^M] E[e^I]` against `r / (r - psi(1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck<T = f64> {
    pub sup_moment: Estimate<T>,
    pub inf_moment: Estimate<T>,
    pub product: Estimate<T>,
    pub target: T,
    pub residual: Estimate<T>,
}

impl<T: Scalar> WienerHopfFactors<T> {
    /// Exact rational factors (Brownian motion with drift, Kou with `sigma > 0`).
    pub fn exact(model: &LevyModel<T>, r: T) -> Result<Self> {
        let roots = cramer_roots(model, r)?;
        let positive: Vec<T> = roots.iter().copied().filter(|&x| x > T::zero()).collect();
        let negative: Vec<T> = roots.iter().copied().filter(|&x| x < T::zero()).map(|x| -x).collect();
        let (up_poles, down_poles) = match model.family {
            Family::Kou {
                intensity,
                p_up,
                eta_up,
                eta_down,
            } if intensity > T::zero() => (
                if p_up > T::zero() { vec![eta_up] } else { vec![] },
                if p_up < T::one() { vec![eta_down] } else { vec![] },
            ),
            _ => (vec![], vec![]),
        };
        Ok(Self {
            model: *model,
            r,
            law: FactorLaw::Exact {
                roots,
                sup: ExpMixture::from_roots_and_poles(&positive, &up_poles),
                inf: ExpMixture::from_roots_and_poles(&negative, &down_poles),
            },
        })
    }

    /// `n` independent triplets, each from a fresh exponential horizon and a
    /// fresh path. Replicate `i` uses substream `i`, so the pool is identical
    /// for any number of worker threads.
    pub fn sample_triplet(
        model: &LevyModel<T>,
        r: T,
        n: usize,
        opts: &PathOptions<T>,
        streams: &Streams,
    ) -> Result<Self> {
        if !(r > T::zero()) {
            return Err(Error::Domain(format!("discount rate must be positive, got {r}")));
        }
        if n == 0 {
            return Err(Error::Domain("need at least one sample".into()));
        }
        let samples = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.rng(tags::TRIPLETS, i);
                let horizon = sample_horizon(r, &mut rng);
                sample_extrema(model, horizon, opts, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_samples(model, r, samples))
    }

    pub fn from_samples(model: &LevyModel<T>, r: T, samples: Vec<ExtremaSample<T>>) -> Self {
        Self {
            model: *model,
            r,
            law: FactorLaw::MonteCarlo { samples },
        }
    }

    pub fn mode(&self) -> FactorMode {
        match self.law {
            FactorLaw::Exact { .. } => FactorMode::ExactRational,
            FactorLaw::MonteCarlo { .. } => FactorMode::MonteCarlo,
        }
    }

    pub fn model(&self) -> &LevyModel<T> {
        &self.model
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn roots(&self) -> &[T] {
        match &self.law {
            FactorLaw::Exact { roots, .. } => roots,
            FactorLaw::MonteCarlo { .. } => &[],
        }
    }

    pub fn samples(&self) -> &[ExtremaSample<T>] {
        match &self.law {
            FactorLaw::Exact { .. } => &[],
            FactorLaw::MonteCarlo { samples } => samples,
        }
    }

    /// Law of `-I_{T_r}` in exact mode.
    pub fn inf_law(&self) -> Option<&ExpMixture<T>> {
        match &self.law {
            FactorLaw::Exact { inf, .. } => Some(inf),
            FactorLaw::MonteCarlo { .. } => None,
        }
    }

    /// Law of `M_{T_r}` in exact mode.
    pub fn sup_law(&self) -> Option<&ExpMixture<T>> {
        match &self.law {
            FactorLaw::Exact { sup, .. } => Some(sup),
            FactorLaw::MonteCarlo { .. } => None,
        }
    }

    fn warn_if_small(&self, what: &str) {
        let n = self.samples().len();
        if self.mode() == FactorMode::MonteCarlo && n < MIN_MC_SAMPLES {
            log::warn!("{what} estimated from {n} samples (< {MIN_MC_SAMPLES})");
        }
    }

    /// `E[exp(lambda I_{T_r})]` for `lambda >= 0`.
    pub fn inf_moment(&self, lambda: T) -> Result<Estimate<T>> {
        if !(lambda >= T::zero()) {
            return Err(Error::Domain(format!("inf_moment needs lambda >= 0, got {lambda}")));
        }
        match &self.law {
            FactorLaw::Exact { inf, .. } => Ok(Estimate::exact(inf.laplace(lambda))),
            FactorLaw::MonteCarlo { samples } => {
                self.warn_if_small("inf_moment");
                Ok(mean_se(samples.iter().map(|s| (lambda * s.i_t).exp())))
            }
        }
    }

    /// `E[exp(lambda M_{T_r})]`. In exact mode this is infinite, and an error,
    /// once `lambda` reaches the smallest positive root.
    pub fn sup_moment(&self, lambda: T) -> Result<Estimate<T>> {
        match &self.law {
            FactorLaw::Exact { sup, .. } => {
                let b_plus = sup.min_rate();
                if lambda >= b_plus {
                    return Err(Error::Domain(format!(
                        "E[exp({lambda} M)] is infinite: lambda >= smallest positive root {b_plus}"
                    )));
                }
                Ok(Estimate::exact(sup.laplace(-lambda)))
            }
            FactorLaw::MonteCarlo { samples } => {
                self.warn_if_small("sup_moment");
                Ok(mean_se(samples.iter().map(|s| (lambda * s.m_t).exp())))
            }
        }
    }

    /// Heavy-tail diagnostics for the sampled `E[exp(lambda M)]`.
    pub fn sup_moment_diagnostics(&self, lambda: T) -> Option<MomentDiagnostics<T>> {
        let samples = self.samples();
        if samples.is_empty() {
            return None;
        }
        let terms: Vec<T> = samples.iter().map(|s| (lambda * s.m_t).exp()).collect();
        let total: T = terms.iter().copied().sum();
        let max = terms.iter().copied().fold(T::zero(), T::max);
        let n = terms.len();
        let running_means = [8usize, 4, 2, 1]
            .iter()
            .map(|&d| {
                let k = (n / d).max(1);
                terms[..k].iter().copied().sum::<T>() / T::lit(k as f64)
            })
            .collect();
        Some(MomentDiagnostics {
            estimate: mean_se(terms.iter().copied()),
            max_term_share: max / total,
            running_means,
        })
    }

    /// Checks `E[e^M] E[e^I] = r / (r - psi(1))`. In Monte Carlo mode the
    /// standard error of the product is propagated by the delta method,
    /// including the covariance of the two sample means.
    pub fn identity_residual(&self) -> Result<IdentityCheck<T>> {
        let psi1 = self.model.laplace_exponent(T::one())?;
        if !(self.r > psi1) {
            return Err(Error::Domain(format!(
                "factorization identity needs r > psi(1): r = {}, psi(1) = {psi1}",
                self.r
            )));
        }
        let target = self.r / (self.r - psi1);
        let sup = self.sup_moment(T::one())?;
        let inf = self.inf_moment(T::one())?;
        let product_se = match &self.law {
            FactorLaw::Exact { .. } => T::zero(),
            FactorLaw::MonteCarlo { samples } => {
                let a: Vec<T> = samples.iter().map(|s| s.m_t.exp()).collect();
                let b: Vec<T> = samples.iter().map(|s| s.i_t.exp()).collect();
                let n = T::lit(samples.len() as f64);
                let cov_means = covariance(&a, &b) / n;
                let var = inf.value * inf.value * sup.se * sup.se
                    + sup.value * sup.value * inf.se * inf.se
                    + T::lit(2.0) * sup.value * inf.value * cov_means;
                var.max(T::zero()).sqrt()
            }
        };
        let product = Estimate {
            value: sup.value * inf.value,
            se: product_se,
        };
        Ok(IdentityCheck {
            sup_moment: sup,
            inf_moment: inf,
            product,
            target,
            residual: Estimate {
                value: product.value - target,
                se: product_se,
            },
        })
    }
}

/// Samples `n` triplets and checks the factorization identity on them.
pub fn wh_identity_residual<T: Scalar>(
    model: &LevyModel<T>,
    r: T,
    n: usize,
    opts: &PathOptions<T>,
    streams: &Streams,
) -> Result<IdentityCheck<T>> {
    let psi1 = model.laplace_exponent(T::one())?;
    if !(r > psi1) {
        return Err(Error::Domain(format!(
            "factorization identity needs r > psi(1): r = {r}, psi(1) = {psi1}"
        )));
    }
    WienerHopfFactors::sample_triplet(model, r, n, opts, streams)?.identity_residual()
}
