//! Exact finite-N locking threshold.
//!
//! At the saddle-node the maximal phase `θ_N` satisfies
//!
//! ```text
//! G(s) = 2⟨√(1 - ν_j² s²)⟩ - ⟨1/√(1 - ν_j² s²)⟩ = 0,   s = sin θ_N
//! ```
//!
//! where `ν_j = ω_j / ω_N`. `G` is the derivative of the locked maximal
//! frequency `ω_N(s) = s⟨√(1 - ν_j² s²)⟩`, so the threshold is the maximum of
//! that curve. Near the root `s` is within `C₁/N` of 1, so the solver works
//! in the complement `t = 1 - s`, which keeps full relative precision, and
//! every `1 - |ν_j| s` is formed without cancellation from the gap
//! `g_j = 1 - |ν_j|`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::specfun::qrs_constants;
use crate::sum::{pairwise_sum_by, Compensated};
use crate::Real;

/// Placement rule for the natural frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyRule<T> {
    /// Midpoints of `N` equal subintervals of `[-γ, γ]`.
    Midpoint,
    /// `N` points from `-γ` to `γ` inclusive.
    Endpoint,
    /// `γ (1 - β N^{-σ})(1 - 1/N) · 2(j-1)/(N-1)`, with `0 < σ < 3/2`, `β ≠ 0`.
    SigmaBeta { sigma: T, beta: T },
    /// `γ [1 - 1/N + (16/π) ζ(-1/2, C₁/2) N^{-3/2}] · 2(j-1)/(N-1)`.
    ZetaCorrected,
}

impl<T: Real> FrequencyRule<T> {
    pub fn name(&self) -> &'static str {
        match self {
            FrequencyRule::Midpoint => "midpoint",
            FrequencyRule::Endpoint => "endpoint",
            FrequencyRule::SigmaBeta { .. } => "sigma-beta",
            FrequencyRule::ZetaCorrected => "zeta-corrected",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let FrequencyRule::SigmaBeta { sigma, beta } = *self {
            if !(sigma > T::zero() && sigma < T::lit(1.5)) {
                return domain(format!("sigma must lie in (0, 3/2), got {sigma}"));
            }
            if beta == T::zero() || !beta.is_finite() {
                return domain(format!("beta must be finite and nonzero, got {beta}"));
            }
        }
        Ok(())
    }

    /// The factor multiplying `γ` in the half-width of the frequency set,
    /// i.e. `ω_max = scale · γ` after centring.
    pub fn scale(&self, n: usize) -> T {
        let nf = T::from_count(n);
        let one = T::one();
        match *self {
            FrequencyRule::Midpoint => one - one / nf,
            FrequencyRule::Endpoint => one,
            FrequencyRule::SigmaBeta { sigma, beta } => (one - beta / nf.powf(sigma)) * (one - one / nf),
            FrequencyRule::ZetaCorrected => {
                let z = T::lit(qrs_constants().zeta_neg_half_at_c1);
                one - one / nf + T::lit(16.0) / T::PI() * z * nf.powf(T::lit(-1.5))
            }
        }
    }
}

/// Frequency rule plus population size and half-width `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencySpec<T> {
    pub rule: FrequencyRule<T>,
    pub n: usize,
    pub gamma: T,
}

impl<T: Real> FrequencySpec<T> {
    pub fn new(rule: FrequencyRule<T>, n: usize, gamma: T) -> Result<Self> {
        let spec = Self { rule, n, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return domain(format!("need at least 2 oscillators, got {}", self.n));
        }
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return domain(format!("gamma must be positive and finite, got {}", self.gamma));
        }
        self.rule.validate()?;
        if !(self.rule.scale(self.n) > T::zero()) {
            return domain(format!(
                "{} rule degenerates at N = {}: frequency scale is not positive",
                self.rule.name(),
                self.n
            ));
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: T) -> Self {
        Self { gamma, ..*self }
    }
}

/// Natural frequencies `ω_1 < … < ω_N` for the given rule.
///
/// The sigma-beta and zeta-corrected rules are written, like their defining
/// formulas, on `[0, 2·scale·γ]` rather than centred on zero.
pub fn make_frequencies<T: Real>(spec: &FrequencySpec<T>) -> Result<Vec<T>> {
    spec.validate()?;
    let n = spec.n;
    let nf = T::from_count(n);
    let m = T::from_count(n - 1);
    let g = spec.gamma;
    let two = T::lit(2.0);
    let omegas = (1..=n).map(|j| {
        let jf = T::from_count(j);
        match spec.rule {
            // integer numerators keep ω_j = -ω_{N+1-j} exact
            FrequencyRule::Midpoint => g * (two * jf - T::one() - nf) / nf,
            FrequencyRule::Endpoint => g * (two * (jf - T::one()) - m) / m,
            FrequencyRule::SigmaBeta { .. } | FrequencyRule::ZetaCorrected => {
                g * spec.rule.scale(n) * (two * (jf - T::one()) / m)
            }
        }
    });
    Ok(omegas.collect())
}

/// Normalized frequencies `ν_j = ω_j / ω_N` (in the zero-mean frame),
/// ascending, with `max |ν_j| = 1`.
///
/// Besides the values themselves this keeps each magnitude's gap
/// `1 - |ν_j|` and a multiplicity, so symmetric ladders are summed over
/// unique magnitudes only.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFrequencies<T> {
    nu: Vec<T>,
    // (1 - |ν|, multiplicity)
    magnitudes: Vec<(T, T)>,
}

impl<T: Real> NormalizedFrequencies<T> {
    /// The evenly spaced ladder `ν_j = -1 + 2(j-1)/(N-1)`, shared by every
    /// supported rule.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("need at least 2 oscillators, got {n}"));
        }
        let m = n - 1;
        let mf = T::from_count(m);
        let gap = |k: usize| T::from_count(2 * k) / mf;
        let nu = (0..n)
            .map(|k| {
                if 2 * k < m {
                    -(T::one() - gap(k))
                } else if 2 * k > m {
                    T::one() - gap(m - k)
                } else {
                    T::zero()
                }
            })
            .collect();
        let two = T::lit(2.0);
        let magnitudes = (0..=m / 2)
            .map(|k| (gap(k), if 2 * k == m { T::one() } else { two }))
            .collect();
        Ok(Self { nu, magnitudes })
    }

    /// Arbitrary normalized values; each must satisfy `|ν| ≤ 1`.
    pub fn from_values(nu: Vec<T>) -> Result<Self> {
        if nu.is_empty() {
            return domain("empty frequency list");
        }
        if let Some(bad) = nu.iter().find(|v| !(v.abs() <= T::one())) {
            return domain(format!("normalized frequency {bad} outside [-1, 1]"));
        }
        let magnitudes = nu.iter().map(|v| (T::one() - v.abs(), T::one())).collect();
        Ok(Self { nu, magnitudes })
    }

    /// Normalizes raw frequencies: shift to zero mean, then divide by the
    /// largest magnitude.
    pub fn from_omegas(omegas: &[T]) -> Result<Self> {
        if omegas.is_empty() {
            return domain("empty frequency list");
        }
        let mean = omegas.iter().copied().collect::<Compensated<T>>().value() / T::from_count(omegas.len());
        let centred: Vec<T> = omegas.iter().map(|&w| w - mean).collect();
        let peak = centred.iter().fold(T::zero(), |a, w| a.max(w.abs()));
        if !(peak > T::zero()) {
            return domain("degenerate frequencies: all equal, omega_N = 0");
        }
        let nu = centred
            .iter()
            .map(|&w| (w / peak).max(-T::one()).min(T::one()))
            .collect();
        Self::from_values(nu)
    }

    pub fn values(&self) -> &[T] {
        &self.nu
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    fn has_unit_magnitude(&self) -> bool {
        self.magnitudes.iter().any(|&(g, _)| g == T::zero())
    }

    /// `⟨f(1 - |ν_j| s)⟩` for `s = 1 - t`, pairwise-summed.
    fn average<F: Fn(T) -> T>(&self, t: T, f: F) -> T {
        let mags = &self.magnitudes;
        let total = pairwise_sum_by(0, mags.len(), &|i| {
            let (g, w) = mags[i];
            w * f(g + t * (T::one() - g))
        });
        total / T::from_count(self.nu.len())
    }
}

/// Frequencies of `spec` normalized by the maximal one.
pub fn normalized<T: Real>(spec: &FrequencySpec<T>) -> Result<NormalizedFrequencies<T>> {
    spec.validate()?;
    NormalizedFrequencies::uniform(spec.n)
}

// With a = 1 - |ν|s: 1 - ν²s² = a (2 - a).
#[inline]
fn cos_sq<T: Real>(a: T) -> T {
    a * (T::lit(2.0) - a)
}

fn margin_t<T: Real>(nu: &NormalizedFrequencies<T>, t: T) -> T {
    let two = T::lit(2.0);
    nu.average(t, |a| {
        let w = cos_sq(a);
        (two * w - T::one()) / w.sqrt()
    })
}

// dG/dt = ⟨ν²s (2/√w + w^{-3/2})⟩, with ν²s = (1 - a)²/s.
fn margin_t_deriv<T: Real>(nu: &NormalizedFrequencies<T>, t: T) -> T {
    let s = T::one() - t;
    let two = T::lit(2.0);
    nu.average(t, |a| {
        let w = cos_sq(a);
        let c = w.sqrt();
        let b = T::one() - a;
        b * b / s * (two / c + T::one() / (w * c))
    })
}

fn inverse_cos_mean<T: Real>(nu: &NormalizedFrequencies<T>, t: T) -> T {
    nu.average(t, |a| T::one() / cos_sq(a).sqrt())
}

fn cos_mean<T: Real>(nu: &NormalizedFrequencies<T>, t: T) -> T {
    nu.average(t, |a| cos_sq(a).sqrt())
}

fn check_s<T: Real>(s: T) -> Result<T> {
    if !(s >= T::zero() && s < T::one()) {
        return domain(format!("sin(theta_N) must lie in [0, 1), got {s}"));
    }
    Ok(T::one() - s)
}

/// `G(s) = 2⟨√(1 - ν_j² s²)⟩ - ⟨1/√(1 - ν_j² s²)⟩`. `G(0) = 1`; the locking
/// threshold is its root.
pub fn lock_margin<T: Real>(nu: &NormalizedFrequencies<T>, s: T) -> Result<T> {
    let t = check_s(s)?;
    Ok(margin_t(nu, t))
}

/// Order parameter at the threshold, `r = ½⟨1/√(1 - ν_j² s²)⟩`.
pub fn order_param_at_threshold<T: Real>(nu: &NormalizedFrequencies<T>, s: T) -> Result<T> {
    let t = check_s(s)?;
    Ok(inverse_cos_mean(nu, t) / T::lit(2.0))
}

/// Self-consistent form `r = ⟨√(1 - ν_j² s²)⟩`; agrees with
/// [`order_param_at_threshold`] exactly where `G(s) = 0`.
pub fn order_param_self_consistent<T: Real>(nu: &NormalizedFrequencies<T>, s: T) -> Result<T> {
    let t = check_s(s)?;
    Ok(cos_mean(nu, t))
}

/// Root-finder settings for the maximal-phase equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Accept the root once `|G| ≤ residual_tol` and the Newton step is at
    /// rounding level.
    pub residual_tol: T,
    pub max_iter: usize,
    /// Geometric bisection in `t` until `hi/lo - 1` drops below this, then
    /// safeguarded Newton.
    pub newton_switch: T,
    /// Smallest `t = 1 - s` searched.
    pub t_min: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            residual_tol: T::lit(1e-13).max(T::epsilon() * T::lit(16.0)),
            max_iter: 200,
            newton_switch: T::lit(1e-6),
            t_min: T::lit(2f64.powi(-40)).max(T::epsilon() * T::lit(4.0)),
        }
    }
}

/// Root of the maximal-phase equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRoot<T> {
    /// `sin θ_N`.
    pub s: T,
    /// `1 - sin θ_N`, carried at full relative precision.
    pub t: T,
    /// `G` at the returned root.
    pub residual: T,
    pub iterations: usize,
}

/// Solves `G(s) = 0` for `s ∈ (0, 1)` with the default configuration.
pub fn solve_sin_theta_max<T: Real>(nu: &NormalizedFrequencies<T>) -> Result<T> {
    solve_phase(nu, &SolverConfig::default()).map(|root| root.s)
}

/// Bracketed solve in `t = 1 - s`: geometric bisection on `[t_min, 1]`, then
/// Newton with the analytic derivative, falling back to bisection whenever a
/// step leaves the bracket. If the bracket collapses to adjacent floats the
/// best point found is returned with its residual, whatever its size.
pub fn solve_phase<T: Real>(nu: &NormalizedFrequencies<T>, cfg: &SolverConfig<T>) -> Result<PhaseRoot<T>> {
    if !nu.has_unit_magnitude() {
        return domain("normalized frequencies must contain an entry with |nu| = 1");
    }
    let mut lo = cfg.t_min;
    let mut hi = T::one();
    let g_lo = margin_t(nu, lo);
    if !(g_lo < T::zero()) {
        return domain(format!(
            "no sign change of the lock margin on [t_min, 1] (G(t_min) = {g_lo})"
        ));
    }
    let mut best = (hi, margin_t(nu, hi));
    let consider = |best: &mut (T, T), t: T, g: T| {
        if g.abs() < best.1.abs() {
            *best = (t, g);
        }
    };
    let finish = |(t, g): (T, T), iterations| PhaseRoot {
        s: T::one() - t,
        t,
        residual: g,
        iterations,
    };

    let mut t = (lo * hi).sqrt();
    for it in 1..=cfg.max_iter {
        let g = margin_t(nu, t);
        consider(&mut best, t, g);
        if g == T::zero() {
            return Ok(finish(best, it));
        }
        if g > T::zero() {
            hi = t;
        } else {
            lo = t;
        }
        if hi - lo <= T::lit(4.0) * T::epsilon() * hi {
            return Ok(finish(best, it));
        }
        if hi / lo - T::one() > cfg.newton_switch {
            t = (lo * hi).sqrt();
            continue;
        }
        let step = g / margin_t_deriv(nu, t);
        if step.abs() <= T::lit(2.0) * T::epsilon() * t && g.abs() <= cfg.residual_tol {
            return Ok(finish(best, it));
        }
        let next = t - step;
        t = if next > lo && next < hi && step.is_finite() {
            next
        } else {
            lo + (hi - lo) / T::lit(2.0)
        };
    }
    if best.1.abs() <= cfg.residual_tol {
        return Ok(finish(best, cfg.max_iter));
    }
    Err(Error::Convergence {
        what: "maximal-phase equation",
        iterations: cfg.max_iter,
        residual: best.1.to_f64_lossy().abs(),
    })
}

/// Exact finite-N solution at the locking threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockingSolution<T> {
    /// `sin θ_N` at the saddle-node.
    pub sin_theta_max: T,
    /// `1 - sin θ_N` at full relative precision.
    pub one_minus_sin_theta_max: T,
    /// Order parameter `r` at the threshold.
    pub r: T,
    /// Half-width of the centred frequency set at the threshold, `r sin θ_N`.
    pub omega_max: T,
    /// Locking threshold for the rule's `γ`.
    pub gamma_l: T,
    /// Lock margin at the returned root.
    pub residual: T,
    pub iterations: usize,
}

/// Exact locking threshold `γ_L` for the rule of `spec` (its `γ` is ignored).
pub fn locking_threshold_exact<T: Real>(spec: &FrequencySpec<T>) -> Result<LockingSolution<T>> {
    locking_threshold_with(spec, &SolverConfig::default())
}

pub fn locking_threshold_with<T: Real>(spec: &FrequencySpec<T>, cfg: &SolverConfig<T>) -> Result<LockingSolution<T>> {
    let nu = normalized(spec)?;
    let root = solve_phase(&nu, cfg)?;
    let r = inverse_cos_mean(&nu, root.t) / T::lit(2.0);
    let omega_max = r * root.s;
    Ok(LockingSolution {
        sin_theta_max: root.s,
        one_minus_sin_theta_max: root.t,
        r,
        omega_max,
        gamma_l: omega_max / spec.rule.scale(spec.n),
        residual: root.residual,
        iterations: root.iterations,
    })
}
