//! Direct simulation of the Kuramoto ODEs with `K = 1`,
//!
//! ```text
//! dθ_i/dt = ω_i + (1/N) Σ_j sin(θ_j - θ_i) = ω_i + r sin(ψ - θ_i),
//! ```
//!
//! integrated by classical fixed-step RK4, plus lock detection and a
//! bisection on `γ` that brackets the locking threshold.
//!
//! Lock detection uses effective frequencies `(θ_i(t+T) - θ_i(t)) / T` over
//! identification windows of length `T`, measured on unwrapped phases. A run
//! is locked as soon as one window has a frequency spread below
//! `lock_tolerance`.

use log::warn;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::locking::{make_frequencies, normalized, solve_sin_theta_max, FrequencyRule, FrequencySpec};
use crate::Real;

/// Initial phases for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedPhases {
    /// `θ_j = arcsin(ν_j sin θ_N)`, the locked configuration at threshold.
    FromExactSolution,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig<T> {
    pub dt: T,
    pub identification_time: T,
    pub max_transient: T,
    /// Largest effective-frequency spread accepted as locked.
    pub lock_tolerance: T,
    /// Bisection stops once the `γ` bracket is this narrow.
    pub gamma_bisect_tol: T,
    pub seed_phases: SeedPhases,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(0.10),
            identification_time: T::lit(1e3),
            max_transient: T::lit(8e4),
            lock_tolerance: T::lit(1e-6),
            gamma_bisect_tol: T::lit(1e-4),
            seed_phases: SeedPhases::FromExactSolution,
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return domain(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.identification_time >= T::lit(10.0) * self.dt) {
            return domain("identification time must be at least 10 time steps");
        }
        if !(self.max_transient >= self.identification_time) {
            return domain("max transient must be at least the identification time");
        }
        if !(self.lock_tolerance > T::zero()) {
            return domain("lock tolerance must be positive");
        }
        if !(self.gamma_bisect_tol > T::zero()) {
            return domain("bisection tolerance must be positive");
        }
        Ok(())
    }

    fn window_steps(&self) -> usize {
        (self.identification_time / self.dt)
            .round()
            .to_usize()
            .unwrap_or(usize::MAX)
            .max(1)
    }
}

/// Unwrapped phases at a given time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillatorState<T> {
    pub phases: Vec<T>,
    pub time: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Locked,
    Unlocked,
    /// Transient cap reached with a spread within ten times the tolerance.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome<T> {
    pub verdict: Verdict,
    /// Max minus min effective frequency over the last window.
    pub freq_spread: T,
    pub elapsed: T,
    pub order_param_final: T,
    /// Largest number of full turns any oscillator drifted away from the
    /// population mean.
    pub slips: u64,
    pub effective_frequencies: Vec<T>,
}

fn mean_phasor<T: Real>(phases: &[T]) -> (T, T) {
    let (mut c, mut s) = (T::zero(), T::zero());
    for &p in phases {
        let (sp, cp) = p.sin_cos();
        c += cp;
        s += sp;
    }
    let n = T::from_count(phases.len());
    (c / n, s / n)
}

/// `(r, ψ)` with `r e^{iψ} = (1/N) Σ_j e^{iθ_j}`.
pub fn order_parameter<T: Real>(phases: &[T]) -> Result<(T, T)> {
    if phases.is_empty() {
        return domain("order parameter of an empty population");
    }
    let (x, y) = mean_phasor(phases);
    Ok((x.hypot(y), y.atan2(x)))
}

fn field_into<T: Real>(phases: &[T], omegas: &[T], out: &mut [T]) {
    // r sin(ψ - θ) = Y cos θ - X sin θ with X + iY the mean phasor
    let (x, y) = mean_phasor(phases);
    for ((o, &p), &w) in out.iter_mut().zip(phases).zip(omegas) {
        let (sp, cp) = p.sin_cos();
        *o = w + y * cp - x * sp;
    }
}

/// Right-hand side of the ODEs in `O(N)` via the order parameter.
pub fn vector_field<T: Real>(phases: &[T], omegas: &[T]) -> Result<Vec<T>> {
    if phases.len() != omegas.len() {
        return domain(format!("{} phases but {} frequencies", phases.len(), omegas.len()));
    }
    let mut out = vec![T::zero(); phases.len()];
    field_into(phases, omegas, &mut out);
    Ok(out)
}

/// Classical RK4 with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4<T> {
    omegas: Vec<T>,
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Real> Rk4<T> {
    pub fn new(omegas: Vec<T>) -> Self {
        let n = omegas.len();
        Self {
            omegas,
            k1: vec![T::zero(); n],
            k2: vec![T::zero(); n],
            k3: vec![T::zero(); n],
            k4: vec![T::zero(); n],
            tmp: vec![T::zero(); n],
        }
    }

    pub fn step(&mut self, state: &mut OscillatorState<T>, dt: T) {
        let half = dt / T::lit(2.0);
        let th = &mut state.phases;
        field_into(th, &self.omegas, &mut self.k1);
        axpy(&mut self.tmp, th, half, &self.k1);
        field_into(&self.tmp, &self.omegas, &mut self.k2);
        axpy(&mut self.tmp, th, half, &self.k2);
        field_into(&self.tmp, &self.omegas, &mut self.k3);
        axpy(&mut self.tmp, th, dt, &self.k3);
        field_into(&self.tmp, &self.omegas, &mut self.k4);
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        let stages = self.k1.iter().zip(&self.k2).zip(&self.k3).zip(&self.k4);
        for (p, (((a, b), c), d)) in th.iter_mut().zip(stages) {
            *p += sixth * (*a + two * (*b + *c) + *d);
        }
        state.time += dt;
    }
}

// out = x + h·k
fn axpy<T: Real>(out: &mut [T], x: &[T], h: T, k: &[T]) {
    for ((o, &xi), &ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + h * ki;
    }
}

/// Initial phases for `spec` under the given seeding.
pub fn seed_state<T: Real>(spec: &FrequencySpec<T>, seed: SeedPhases) -> Result<OscillatorState<T>> {
    let phases = match seed {
        SeedPhases::Zero => vec![T::zero(); spec.n],
        SeedPhases::FromExactSolution => {
            let nu = normalized(spec)?;
            let s = solve_sin_theta_max(&nu)?;
            nu.values().iter().map(|&v| (v * s).asin()).collect()
        }
    };
    Ok(OscillatorState {
        phases,
        time: T::zero(),
    })
}

// Any oscillator this far from the pack mean has slipped at least twice.
fn slip_limit<T: Real>() -> T {
    T::lit(4.0) * T::PI()
}

/// Runs the simulation for `spec` and classifies it.
pub fn integrate<T: Real>(spec: &FrequencySpec<T>, config: &SimConfig<T>) -> Result<SimOutcome<T>> {
    let omegas = make_frequencies(spec)?;
    let state = seed_state(spec, config.seed_phases)?;
    integrate_from(omegas, state, config)
}

/// Runs from an explicit frequency set and initial state.
pub fn integrate_from<T: Real>(
    omegas: Vec<T>,
    mut state: OscillatorState<T>,
    config: &SimConfig<T>,
) -> Result<SimOutcome<T>> {
    config.validate()?;
    if omegas.len() != state.phases.len() || omegas.is_empty() {
        return domain(format!(
            "{} phases but {} frequencies",
            state.phases.len(),
            omegas.len()
        ));
    }
    let n = omegas.len();
    let nf = T::from_count(n);
    let initial = state.phases.clone();
    let mut rk = Rk4::new(omegas);
    let steps = config.window_steps();
    let window = T::from_count(steps) * config.dt;
    let two_pi = T::lit(2.0) * T::PI();
    let mut max_drift = T::zero();
    let mut elapsed;

    loop {
        let start = state.phases.clone();
        let t0 = state.time;
        let mut slipped = false;
        for _ in 0..steps {
            rk.step(&mut state, config.dt);
            let mean = state.phases.iter().zip(&initial).map(|(&p, &p0)| p - p0).sum::<T>() / nf;
            let drift = state
                .phases
                .iter()
                .zip(&initial)
                .fold(T::zero(), |acc, (&p, &p0)| acc.max((p - p0 - mean).abs()));
            if !drift.is_finite() {
                return Err(Error::NonFinite {
                    time: state.time.to_f64_lossy(),
                });
            }
            max_drift = max_drift.max(drift);
            if drift > slip_limit() {
                slipped = true;
                break;
            }
        }
        // effective frequencies over the (possibly truncated) window
        let span = state.time - t0;
        elapsed = state.time;
        let freqs: Vec<T> = state
            .phases
            .iter()
            .zip(&start)
            .map(|(&p, &p0)| (p - p0) / span)
            .collect();
        let (lo, hi) = freqs.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &f| {
            (lo.min(f), hi.max(f))
        });
        let spread = hi - lo;

        let verdict = if slipped {
            Some(Verdict::Unlocked)
        } else if spread <= config.lock_tolerance {
            Some(Verdict::Locked)
        } else if elapsed + window / T::lit(2.0) > config.max_transient {
            if spread <= T::lit(10.0) * config.lock_tolerance {
                Some(Verdict::Undecided)
            } else {
                Some(Verdict::Unlocked)
            }
        } else {
            None
        };
        if let Some(verdict) = verdict {
            let (r, _) = order_parameter(&state.phases)?;
            return Ok(SimOutcome {
                verdict,
                freq_spread: spread,
                elapsed,
                order_param_final: r,
                slips: (max_drift / two_pi).floor().to_u64().unwrap_or(u64::MAX),
                effective_frequencies: freqs,
            });
        }
    }
}

/// One simulation made during bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe<T> {
    pub gamma: T,
    pub verdict: Verdict,
    pub freq_spread: T,
    pub elapsed: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectResult<T> {
    /// Midpoint of the final bracket.
    pub gamma_l: T,
    /// Largest `γ` seen locked.
    pub gamma_lo: T,
    /// Smallest `γ` seen unlocked (or undecided).
    pub gamma_hi: T,
    pub probes: Vec<Probe<T>>,
}

const BRACKET_EXPANSIONS: usize = 10;

/// Locates the locking threshold of `rule` with `n` oscillators by
/// bisection on `γ`, starting from the bracket `[0.5, 1.2]`. Undecided runs
/// count as unlocked.
pub fn threshold_bisect<T: Real>(rule: FrequencyRule<T>, n: usize, config: &SimConfig<T>) -> Result<BisectResult<T>> {
    config.validate()?;
    FrequencySpec::new(rule, n, T::one())?;
    let mut probes = Vec::new();
    let locked = |gamma: T, probes: &mut Vec<Probe<T>>| -> Result<bool> {
        let spec = FrequencySpec::new(rule, n, gamma)?;
        let out = integrate(&spec, config)?;
        if out.verdict == Verdict::Undecided {
            warn!(
                "undecided run at gamma = {gamma} (N = {n}, spread {}); treating as unlocked",
                out.freq_spread
            );
        }
        probes.push(Probe {
            gamma,
            verdict: out.verdict,
            freq_spread: out.freq_spread,
            elapsed: out.elapsed,
        });
        Ok(out.verdict == Verdict::Locked)
    };

    let two = T::lit(2.0);
    let mut lo = T::lit(0.5);
    let mut hi = T::lit(1.2);
    let mut tries = 0;
    while !locked(lo, &mut probes)? {
        tries += 1;
        if tries > BRACKET_EXPANSIONS {
            return Err(Error::Bracket(format!("no locked state found down to gamma = {lo}")));
        }
        hi = lo;
        lo /= two;
    }
    tries = 0;
    while locked(hi, &mut probes)? {
        tries += 1;
        if tries > BRACKET_EXPANSIONS {
            return Err(Error::Bracket(format!("still locked at gamma = {hi}")));
        }
        lo = hi;
        hi *= two;
    }
    while hi - lo > config.gamma_bisect_tol {
        let mid = lo + (hi - lo) / two;
        if locked(mid, &mut probes)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BisectResult {
        gamma_l: lo + (hi - lo) / two,
        gamma_lo: lo,
        gamma_hi: hi,
        probes,
    })
}
