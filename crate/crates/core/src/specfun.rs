//! Hurwitz zeta function and the constants of the large-N expansion of the
//! maximal locked phase.
//!
//! `ζ(s, q) = Σ_{n≥0} (n + q)^{-s}` is evaluated by Euler–Maclaurin
//! summation: a short direct sum, the integral tail, the half-endpoint
//! correction and Bernoulli corrections through `B₁₀`. The same formula
//! continues analytically to `s < 1`, which is where the constants below
//! need it (`s = ±1/2`).

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::sum::Compensated;
use crate::Real;

/// Even Bernoulli numbers `B₂ … B₁₆` as exact rationals `(num, den)`.
const BERNOULLI_EVEN: [(i64, i64); 8] = [
    (1, 6),
    (-1, 30),
    (1, 42),
    (-1, 30),
    (5, 66),
    (-691, 2730),
    (7, 6),
    (-3617, 510),
];

/// Number of Bernoulli corrections applied (`B₂ … B₁₀`).
const CORRECTIONS: usize = 5;

const MIN_DIRECT_TERMS: usize = 16;
const MAX_DIRECT_TERMS: usize = 1 << 16;
const TRUNCATION_TOL: f64 = 1e-14;

/// `B_{2j} / (2j)!` for `j = 1..=8`, rendered into `T`.
fn bernoulli_over_factorial<T: Real>(j: usize) -> T {
    let (num, den) = BERNOULLI_EVEN[j - 1];
    let fact: f64 = (1..=2 * j).map(|k| k as f64).product();
    T::lit(num as f64) / T::lit(den as f64) / T::lit(fact)
}

/// Validated argument pair for the Hurwitz zeta function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaArgs<T> {
    pub s: T,
    pub q: T,
}

impl<T: Real> ZetaArgs<T> {
    pub fn new(s: T, q: T) -> Result<Self> {
        if !(q > T::zero()) || !q.is_finite() {
            return domain(format!("Hurwitz zeta needs q > 0, got q = {q}"));
        }
        if !s.is_finite() {
            return domain(format!("Hurwitz zeta needs finite s, got s = {s}"));
        }
        if s == T::one() {
            return domain("Hurwitz zeta has a pole at s = 1");
        }
        Ok(Self { s, q })
    }

    /// `s ∈ [-1, 2]` and `q ∈ (0, 3]`, where the accuracy has been checked.
    pub fn in_validated_range(&self) -> bool {
        self.s >= -T::one() && self.s <= T::lit(2.0) && self.q <= T::lit(3.0)
    }
}

/// A zeta value together with the validated-range flag of its arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaValue<T> {
    pub value: T,
    pub validated: bool,
}

/// Rising factorial `s (s+1) … (s+m-1)`.
fn pochhammer<T: Real>(s: T, m: usize) -> T {
    (0..m).fold(T::one(), |acc, i| acc * (s + T::from_count(i)))
}

/// Euler–Maclaurin evaluation with `terms` direct summands. Returns
/// `(value, first omitted correction, magnitude of the combined pieces)`.
fn zeta_em<T: Real>(s: T, q: T, terms: usize) -> (T, T, T) {
    let direct: Compensated<T> = (0..terms).map(|n| (T::from_count(n) + q).powf(-s)).collect();
    let direct = direct.value();
    let a = T::from_count(terms) + q;
    let tail = a.powf(T::one() - s) / (s - T::one());
    let half = a.powf(-s) / T::lit(2.0);
    let mut corr = Compensated::new();
    for j in 1..=CORRECTIONS {
        let k = 2 * j - 1;
        corr.add(bernoulli_over_factorial::<T>(j) * pochhammer(s, k) * a.powf(-s - T::from_count(k)));
    }
    let j = CORRECTIONS + 1;
    let k = 2 * j - 1;
    let omitted = bernoulli_over_factorial::<T>(j) * pochhammer(s, k) * a.powf(-s - T::from_count(k));
    let mut total = Compensated::new();
    total.add(direct);
    total.add(tail);
    total.add(half);
    total.add(corr.value());
    let value = total.value();
    let scale = value.abs().max(direct.abs()).max(tail.abs());
    (value, omitted, scale)
}

/// `ζ(s, q)` for validated arguments, including the range flag.
pub fn hurwitz_zeta_at<T: Real>(args: ZetaArgs<T>) -> ZetaValue<T> {
    let tol = T::lit(TRUNCATION_TOL);
    let mut terms = MIN_DIRECT_TERMS;
    loop {
        let (value, omitted, scale) = zeta_em(args.s, args.q, terms);
        if omitted.abs() <= tol * scale || terms >= MAX_DIRECT_TERMS {
            return ZetaValue {
                value,
                validated: args.in_validated_range(),
            };
        }
        terms *= 2;
    }
}

/// Hurwitz zeta `ζ(s, q)`, analytically continued to `s < 1`.
pub fn hurwitz_zeta<T: Real>(s: T, q: T) -> Result<T> {
    Ok(hurwitz_zeta_at(ZetaArgs::new(s, q)?).value)
}

/// `∂ζ/∂q (s, q)` by differentiating the Euler–Maclaurin formula term by
/// term. Equals `-s ζ(s+1, q)`, but stays finite at `s = 0`.
pub fn hurwitz_zeta_dq_at<T: Real>(args: ZetaArgs<T>) -> ZetaValue<T> {
    let ZetaArgs { s, q } = args;
    let tol = T::lit(TRUNCATION_TOL);
    let mut terms = MIN_DIRECT_TERMS;
    loop {
        let direct: Compensated<T> = (0..terms)
            .map(|n| -s * (T::from_count(n) + q).powf(-s - T::one()))
            .collect();
        let direct = direct.value();
        let a = T::from_count(terms) + q;
        let tail = -a.powf(-s);
        let half = -s * a.powf(-s - T::one()) / T::lit(2.0);
        let mut total = Compensated::new();
        total.add(direct);
        total.add(tail);
        total.add(half);
        for j in 1..=CORRECTIONS {
            let k = 2 * j - 1;
            let e = -s - T::from_count(k);
            total.add(bernoulli_over_factorial::<T>(j) * pochhammer(s, k) * e * a.powf(e - T::one()));
        }
        let j = CORRECTIONS + 1;
        let k = 2 * j - 1;
        let e = -s - T::from_count(k);
        let omitted = bernoulli_over_factorial::<T>(j) * pochhammer(s, k) * e * a.powf(e - T::one());
        let value = total.value();
        let scale = value.abs().max(direct.abs()).max(tail.abs());
        if omitted.abs() <= tol * scale || terms >= MAX_DIRECT_TERMS {
            return ZetaValue {
                value,
                validated: args.in_validated_range(),
            };
        }
        terms *= 2;
    }
}

pub fn hurwitz_zeta_dq<T: Real>(s: T, q: T) -> Result<T> {
    Ok(hurwitz_zeta_dq_at(ZetaArgs::new(s, q)?).value)
}

/// Three-term large-M form of the partial sum `Σ_{k=0}^{M} (k + q)^{-s}`:
/// `ζ(s,q) - ½(M+1+q)^{-s} + (M+1+q)^{1-s} / (1-s)`.
///
/// The first neglected term is `-(s/12)(M+1+q)^{-s-1}`.
pub fn psum_asymptotic<T: Real>(s: T, q: T, m: usize) -> Result<T> {
    if m < 1 {
        return domain("partial-sum asymptotic needs M >= 1");
    }
    let z = hurwitz_zeta(s, q)?;
    let a = T::from_count(m + 1) + q;
    Ok(z - a.powf(-s) / T::lit(2.0) + a.powf(T::one() - s) / (T::one() - s))
}

/// Constants of `sin θ_N ∼ 1 - C₁/N - C₂/N²` plus the zeta values they
/// are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QrsConstants {
    pub c1: f64,
    pub c2: f64,
    /// `ζ(1/2, c1/2)`, which vanishes by definition of `c1`.
    pub zeta_half_at_c1: f64,
    pub zeta_neg_half_at_c1: f64,
    pub zeta_three_half_at_c1: f64,
    /// Newton/bisection iterations spent locating `c1`.
    pub iterations: usize,
}

impl QrsConstants {
    /// `4 ζ(-1/2, c1/2)`, the coefficient of `N^{-3/2}` in the threshold.
    pub fn prefactor(&self) -> f64 {
        4.0 * self.zeta_neg_half_at_c1
    }
}

const C1_GUESS: f64 = 0.6;
const C1_BRACKET: (f64, f64) = (0.5, 0.7);
const C1_STEP_TOL: f64 = 1e-14;
const C1_RESIDUAL_TOL: f64 = 1e-12;
const C1_MAX_ITER: usize = 100;

/// Locates `c1`, the zero of `z ↦ ζ(1/2, z/2)` in `(0, 2)`, by Newton's
/// method kept inside the bracket `[0.5, 0.7]`.
pub fn qrs_c1() -> Result<QrsConstants> {
    let f = |z: f64| hurwitz_zeta(0.5, z / 2.0);
    let df = |z: f64| hurwitz_zeta_dq(0.5, z / 2.0).map(|d| d / 2.0);

    let (mut lo, mut hi) = C1_BRACKET;
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Convergence {
            what: "c1 bracket",
            iterations: 0,
            residual: f_lo.abs().min(f_hi.abs()),
        });
    }
    let increasing = f_hi > f_lo;

    let mut z = C1_GUESS;
    let mut fz = f(z)?;
    for it in 1..=C1_MAX_ITER {
        // shrink the bracket with the current point
        if (fz > 0.0) == increasing {
            hi = z;
        } else {
            lo = z;
        }
        let newton = z - fz / df(z)?;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = next - z;
        z = next;
        fz = f(z)?;
        if step.abs() <= C1_STEP_TOL && fz.abs() <= C1_RESIDUAL_TOL {
            return qrs_from_c1(z, it);
        }
    }
    Err(Error::Convergence {
        what: "c1 root",
        iterations: C1_MAX_ITER,
        residual: fz.abs(),
    })
}

fn qrs_from_c1(c1: f64, iterations: usize) -> Result<QrsConstants> {
    let q = c1 / 2.0;
    let zeta_half_at_c1 = hurwitz_zeta(0.5, q)?;
    let zeta_neg_half_at_c1 = hurwitz_zeta(-0.5, q)?;
    let zeta_three_half_at_c1 = hurwitz_zeta(1.5, q)?;
    Ok(QrsConstants {
        c1,
        c2: c1 - c1 * c1 - 30.0 * zeta_neg_half_at_c1 / zeta_three_half_at_c1,
        zeta_half_at_c1,
        zeta_neg_half_at_c1,
        zeta_three_half_at_c1,
        iterations,
    })
}

/// `C₂ = C₁ - C₁² - 30 ζ(-1/2, C₁/2) / ζ(3/2, C₁/2)`.
pub fn qrs_c2(c1: f64) -> Result<f64> {
    if !(c1 > 0.0 && c1 < 2.0) {
        return domain(format!("c1 must lie in (0, 2), got {c1}"));
    }
    let q = c1 / 2.0;
    Ok(c1 - c1 * c1 - 30.0 * hurwitz_zeta(-0.5, q)? / hurwitz_zeta(1.5, q)?)
}

static QRS: OnceLock<QrsConstants> = OnceLock::new();

/// Process-wide cached constants, computed on first use.
pub fn qrs_constants() -> &'static QrsConstants {
    QRS.get_or_init(|| qrs_c1().expect("c1 root finder failed; Hurwitz zeta accuracy bug"))
}
