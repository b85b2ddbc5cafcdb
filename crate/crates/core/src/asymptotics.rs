//! Large-N expansion of the threshold sum.
//!
//! With `M = N - 1` the midpoint threshold is `γ_L = α_N / 4`, where
//!
//! ```text
//! α = Σ_{k=0}^{M} A_M(k),   A_M(k) = Δu / √(1 - u_k²),
//! u_k = -S_M + k Δu,        Δu = 2 S_M / M,
//! ```
//!
//! and `S_M` is `sin θ_N`. The summands blow up near both ends of the mesh.
//! `D⁻_M(k)` captures the left-edge behaviour; subtracting it (and its
//! mirror image) leaves a regular bulk sum, while the fringe sum `2 Σ D⁻_M`
//! is evaluated through Hurwitz zeta partial sums.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::locking::{solve_phase, FrequencyRule, NormalizedFrequencies, SolverConfig};
use crate::specfun::{qrs_constants, QrsConstants};
use crate::sum::pairwise_sum_by;
use crate::Real;

/// Where `S_M = sin θ_N` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshMode {
    /// Root of the exact saddle-node equation.
    Exact,
    /// `1 - C₁/M - (C₂ - C₁)/M²`.
    Asymptotic,
}

/// The mesh `u_k = -S_M + k Δu`, `k = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshContext<T> {
    pub m: usize,
    pub s_m: T,
    /// `1 - S_M` at full relative precision.
    pub t_m: T,
    pub delta_u: T,
    pub mode: MeshMode,
}

fn qrs<T: Real>() -> (T, T) {
    let k = qrs_constants();
    (T::lit(k.c1), T::lit(k.c2))
}

pub fn mesh_context<T: Real>(n: usize, mode: MeshMode) -> Result<MeshContext<T>> {
    if n < 2 {
        return domain(format!("need N >= 2, got {n}"));
    }
    let m = n - 1;
    let mf = T::from_count(m);
    let t_m = match mode {
        MeshMode::Exact => solve_phase(&NormalizedFrequencies::uniform(n)?, &SolverConfig::default())?.t,
        MeshMode::Asymptotic => {
            let (c1, c2) = qrs::<T>();
            c1 / mf + (c2 - c1) / (mf * mf)
        }
    };
    let s_m = T::one() - t_m;
    Ok(MeshContext {
        m,
        s_m,
        t_m,
        delta_u: T::lit(2.0) * s_m / mf,
        mode,
    })
}

impl<T: Real> MeshContext<T> {
    pub fn u(&self, k: usize) -> T {
        -self.s_m + T::from_count(k) * self.delta_u
    }

    // 1 - |u_k|, built from the complement so that u_k² = u_{M-k}² exactly.
    fn edge_distance(&self, k: usize) -> T {
        let j = k.min(self.m - k);
        self.t_m + T::from_count(j) * self.delta_u
    }

    fn a_unchecked(&self, k: usize) -> T {
        let d = self.edge_distance(k);
        self.delta_u / (d * (T::lit(2.0) - d)).sqrt()
    }

    fn d_unchecked(&self, k: usize, k_consts: &QrsConstants) -> T {
        let mf = T::from_count(self.m);
        let c1 = T::lit(k_consts.c1);
        let c2 = T::lit(k_consts.c2);
        let two = T::lit(2.0);
        let x = (c1 / two + T::from_count(k)) / mf;
        let sx = x.sqrt();
        (T::one() - c1 / (two * mf)) / (mf * sx)
            + sx / (two * mf)
            + (c1 - c1 * c1 - c2) / T::lit(4.0) / (mf * mf * mf * x * sx)
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.m {
            return domain(format!("mesh index {k} outside 0..={}", self.m));
        }
        Ok(())
    }
}

/// `A_M(k) = Δu / √(1 - u_k²)`.
pub fn summand_a<T: Real>(ctx: &MeshContext<T>, k: usize) -> Result<T> {
    ctx.check_k(k)?;
    if !(ctx.t_m > T::zero()) {
        return domain("mesh touches the singularity: S_M >= 1");
    }
    Ok(ctx.a_unchecked(k))
}

/// Left-edge dominant part of `A_M(k)`, with `x = (C₁/2 + k)/M`:
///
/// ```text
/// D⁻_M(k) = (1/M)(1 - C₁/2M) x^{-1/2} + (1/2M) x^{1/2}
///         + (1/M³)((C₁ - C₁² - C₂)/4) x^{-3/2}
/// ```
pub fn fringe_dominant<T: Real>(ctx: &MeshContext<T>, k: usize) -> Result<T> {
    ctx.check_k(k)?;
    Ok(ctx.d_unchecked(k, qrs_constants()))
}

/// Right-edge counterpart, `D⁺_M(k) = D⁻_M(M - k)`.
pub fn fringe_dominant_right<T: Real>(ctx: &MeshContext<T>, k: usize) -> Result<T> {
    ctx.check_k(k)?;
    Ok(ctx.d_unchecked(ctx.m - k, qrs_constants()))
}

/// `α_M = Σ_k A_M(k)`.
pub fn alpha_sum<T: Real>(ctx: &MeshContext<T>) -> T {
    pairwise_sum_by(0, ctx.m + 1, &|k| ctx.a_unchecked(k))
}

/// Bulk sum `Σ_k [A_M(k) - 2 D⁻_M(k)]`.
pub fn bulk_sum<T: Real>(ctx: &MeshContext<T>) -> T {
    let k = qrs_constants();
    let two = T::lit(2.0);
    pairwise_sum_by(0, ctx.m + 1, &|i| ctx.a_unchecked(i) - two * ctx.d_unchecked(i, k))
}

/// Fringe sum `2 Σ_k D⁻_M(k)`.
pub fn fringe_sum<T: Real>(ctx: &MeshContext<T>) -> T {
    let k = qrs_constants();
    T::lit(2.0) * pairwise_sum_by(0, ctx.m + 1, &|i| ctx.d_unchecked(i, k))
}

/// `B_M ≈ π - 14/3 + (C₁ - 3)/(2M)`.
pub fn bulk_closed_form<T: Real>(m: usize) -> Result<T> {
    if m < 1 {
        return domain("bulk closed form needs M >= 1");
    }
    let (c1, _) = qrs::<T>();
    Ok(T::PI() - T::lit(14.0) / T::lit(3.0) + (c1 - T::lit(3.0)) / (T::lit(2.0) * T::from_count(m)))
}

/// Coefficients of the fringe closed form
/// `F_M ≈ 14/3 + a M^{-1/2} + b M^{-1} + c M^{-3/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeCoefficients<T> {
    pub constant: T,
    /// `2 ζ(1/2, C₁/2)`; zero by the definition of `C₁`.
    pub inv_sqrt: T,
    /// `(3 - C₁)/2`.
    pub inv: T,
    /// `((C₁ - C₂ - C₁²)/2) ζ(3/2, C₁/2) - C₁ ζ(1/2, C₁/2) + ζ(-1/2, C₁/2)`.
    pub inv_three_halves: T,
}

pub fn fringe_coefficients<T: Real>() -> FringeCoefficients<T> {
    let k = qrs_constants();
    let (c1, c2) = (k.c1, k.c2);
    FringeCoefficients {
        constant: T::lit(14.0) / T::lit(3.0),
        inv_sqrt: T::lit(2.0 * k.zeta_half_at_c1),
        inv: T::lit((3.0 - c1) / 2.0),
        inv_three_halves: T::lit(
            (c1 - c2 - c1 * c1) / 2.0 * k.zeta_three_half_at_c1 - c1 * k.zeta_half_at_c1 + k.zeta_neg_half_at_c1,
        ),
    }
}

pub fn fringe_closed_form<T: Real>(m: usize) -> Result<T> {
    if m < 1 {
        return domain("fringe closed form needs M >= 1");
    }
    let c = fringe_coefficients::<T>();
    let mf = T::from_count(m);
    Ok(c.constant + c.inv_sqrt / mf.sqrt() + c.inv / mf + c.inv_three_halves / (mf * mf.sqrt()))
}

/// Closed-form estimate of `γ_L` with its term breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticPrediction<T> {
    pub rule: FrequencyRule<T>,
    pub n: usize,
    pub gamma_l: T,
    pub term_pi4: T,
    pub term_inv_n: T,
    pub term_n32: T,
    pub error_order: &'static str,
}

/// `γ_L ≈ π/4 + 4ζ(-1/2, C₁/2) N^{-3/2}` (midpoint), with an extra
/// `-(π/4)/N` for the endpoint rule. The zeta-corrected rule is built so
/// that both corrections cancel, leaving `π/4`.
pub fn predict_gamma<T: Real>(rule: FrequencyRule<T>, n: usize) -> Result<AsymptoticPrediction<T>> {
    if n < 2 {
        return domain(format!("need N >= 2, got {n}"));
    }
    let nf = T::from_count(n);
    let quarter_pi = T::FRAC_PI_4();
    let n32 = T::lit(qrs_constants().prefactor()) / (nf * nf.sqrt());
    let (term_inv_n, term_n32) = match rule {
        FrequencyRule::Midpoint => (T::zero(), n32),
        FrequencyRule::Endpoint => (-quarter_pi / nf, n32),
        FrequencyRule::ZetaCorrected => (T::zero(), T::zero()),
        FrequencyRule::SigmaBeta { .. } => {
            return domain("sigma-beta rule: use predict_gamma_custom");
        }
    };
    Ok(AsymptoticPrediction {
        rule,
        n,
        gamma_l: quarter_pi + term_inv_n + term_n32,
        term_pi4: quarter_pi,
        term_inv_n,
        term_n32,
        error_order: "O(N^-2)",
    })
}

/// Leading-order threshold `π/4 + (βπ/4) N^{-σ}` for the sigma-beta rule.
pub fn predict_gamma_custom<T: Real>(sigma: T, beta: T, n: usize) -> Result<T> {
    if !(sigma > T::zero() && sigma < T::lit(1.5)) {
        return domain(format!("sigma must lie in (0, 3/2), got {sigma}"));
    }
    if beta == T::zero() || !beta.is_finite() {
        return domain(format!("beta must be finite and nonzero, got {beta}"));
    }
    if n < 2 {
        return domain(format!("need N >= 2, got {n}"));
    }
    let q = T::FRAC_PI_4();
    Ok(q + beta * q * T::from_count(n).powf(-sigma))
}

/// Every piece of the bulk/fringe split at one `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition<T> {
    pub n: usize,
    pub mesh: MeshContext<T>,
    pub alpha: T,
    pub bulk_sum: T,
    pub bulk_closed: T,
    pub fringe_sum: T,
    pub fringe_closed: T,
    /// `α / 4`, the midpoint threshold on this mesh.
    pub gamma_from_alpha: T,
    /// `(B_M + F_M) / 4` from the closed forms.
    pub gamma_closed: T,
}

pub fn decompose<T: Real>(n: usize, mode: MeshMode) -> Result<Decomposition<T>> {
    let mesh = mesh_context::<T>(n, mode)?;
    let alpha = alpha_sum(&mesh);
    let bulk_closed = bulk_closed_form(mesh.m)?;
    let fringe_closed = fringe_closed_form(mesh.m)?;
    let four = T::lit(4.0);
    Ok(Decomposition {
        n,
        mesh,
        alpha,
        bulk_sum: bulk_sum(&mesh),
        bulk_closed,
        fringe_sum: fringe_sum(&mesh),
        fringe_closed,
        gamma_from_alpha: alpha / four,
        gamma_closed: (bulk_closed + fringe_closed) / four,
    })
}

/// Ratio test on a geometric ladder: `errors[i]` is taken at
/// `x_0 · factor^i`; passes when every successive ratio is at most
/// `factor^{-order} · (1 + 0.2)`.
pub fn decays_at_least(errors: &[f64], factor: f64, order: f64) -> bool {
    let limit = factor.powf(-order) * 1.2;
    errors.windows(2).all(|w| w[1].abs() <= w[0].abs() * limit)
}
