//! Method-of-lines time stepping of `u_t = -∂ₓΛ⁻² f(u)` with classical RK4,
//! and a Picard iteration on the integral form of the same flow.

use serde::Serialize;
use thiserror::Error;

use crate::fields::{h1_norm, Field};
use crate::kernel::{self, KernelError, KernelSpec};
use crate::nonlinearity::{lipschitz_estimate, NonlinearitySpec};

/// Default `‖u‖_∞` ceiling beyond which a run counts as blown up.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

/// Sup of `|κ| / (1 + κ²)`, the norm of `∂ₓΛ⁻²` on every domain.
const DX_KERNEL_BOUND: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub step_count: u64,
}

impl SimState {
    pub fn initial(u: Field) -> Self {
        Self {
            t: 0.0,
            u,
            step_count: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub t_final: f64,
    pub dt: f64,
    pub blowup_threshold: f64,
    pub spec: KernelSpec,
    pub nonlinearity: NonlinearitySpec,
    /// Record every this many steps (the initial and final states are
    /// always recorded).
    pub callback_stride: usize,
}

impl SimConfig {
    pub fn new(spec: KernelSpec, nonlinearity: NonlinearitySpec, dt: f64, t_final: f64) -> Self {
        Self {
            t_final,
            dt,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            spec,
            nonlinearity,
            callback_stride: 1,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.callback_stride = stride;
        self
    }

    pub fn with_blowup_threshold(mut self, threshold: f64) -> Self {
        self.blowup_threshold = threshold;
        self
    }

    pub fn validate(&self, u0: &Field) -> Result<(), EvolutionError> {
        let bad = |field: &'static str, reason: String| Err(EvolutionError::InvalidConfig { field, reason });
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return bad("t_final", format!("must be at least dt = {}, got {}", self.dt, self.t_final));
        }
        if self.callback_stride == 0 {
            return bad("callback_stride", "must be at least 1".into());
        }
        if u0.domain() != self.spec.domain() {
            return Err(EvolutionError::DomainMismatch);
        }
        if !u0.is_finite() {
            return bad("u0", "initial data is not finite".into());
        }
        if !(self.blowup_threshold > u0.max_abs()) {
            return bad(
                "blowup_threshold",
                format!("must exceed ‖u0‖∞ = {}, got {}", u0.max_abs(), self.blowup_threshold),
            );
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`; the last one is shortened if
    /// `t_final` is not a multiple of `dt`.
    pub fn n_steps(&self) -> u64 {
        (self.t_final / self.dt - 1e-9).ceil().max(1.0) as u64
    }
}

/// The solution left the admissible region.
#[derive(Debug, Clone, PartialEq)]
pub struct Blowup {
    /// Last time at which the solution was finite and below threshold.
    pub lifespan: f64,
    pub step: u64,
    pub sup_norm: f64,
    pub last_state: SimState,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("initial data and kernel live on different domains")]
    DomainMismatch,
    #[error("blowup after t = {} (step {}, ‖u‖∞ = {:e})", .0.lifespan, .0.step, .0.sup_norm)]
    Blowup(Box<Blowup>),
    #[error("Picard iterates diverge: distances {0:?}")]
    PicardDivergence(Vec<f64>),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn admissible(values: &[f64], threshold: f64) -> Result<(), f64> {
    let mut sup = 0.0f64;
    for &v in values {
        if !v.is_finite() {
            return Err(f64::INFINITY);
        }
        sup = sup.max(v.abs());
    }
    if sup > threshold {
        Err(sup)
    } else {
        Ok(())
    }
}

fn axpy(base: &Field, a: f64, k: &Field) -> Field {
    let v = base.values().iter().zip(k.values()).map(|(b, k)| b + a * k).collect();
    Field::from_raw(*base.domain(), v)
}

/// One classical RK4 step of size `dt` (may be negative).
pub fn step_rk4_dt(state: &SimState, dt: f64, config: &SimConfig) -> Result<SimState, EvolutionError> {
    let nl = &config.nonlinearity;
    let spec = &config.spec;
    let blowup = |sup: f64| {
        EvolutionError::Blowup(Box::new(Blowup {
            lifespan: state.t,
            step: state.step_count,
            sup_norm: sup,
            last_state: state.clone(),
        }))
    };
    let stage = |u: &Field| -> Result<Field, EvolutionError> {
        admissible(u.values(), config.blowup_threshold).map_err(blowup)?;
        Ok(kernel::rhs(u, nl, spec)?)
    };

    let u = &state.u;
    let k1 = stage(u)?;
    let k2 = stage(&axpy(u, 0.5 * dt, &k1))?;
    let k3 = stage(&axpy(u, 0.5 * dt, &k2))?;
    let k4 = stage(&axpy(u, dt, &k3))?;
    let next: Vec<f64> = (0..u.values().len())
        .map(|j| {
            u.values()[j]
                + dt / 6.0
                    * (k1.values()[j] + 2.0 * k2.values()[j] + 2.0 * k3.values()[j] + k4.values()[j])
        })
        .collect();
    admissible(&next, config.blowup_threshold).map_err(blowup)?;
    Ok(SimState {
        t: state.t + dt,
        u: Field::from_raw(*u.domain(), next),
        step_count: state.step_count + 1,
    })
}

pub fn step_rk4(state: &SimState, config: &SimConfig) -> Result<SimState, EvolutionError> {
    step_rk4_dt(state, config.dt, config)
}

/// Integrates from `u0` to `config.t_final`, calling `on_record` on the
/// initial state, every `callback_stride` steps, and on the final state.
pub fn simulate<C>(u0: Field, config: &SimConfig, mut on_record: C) -> Result<SimState, EvolutionError>
where
    C: FnMut(&SimState),
{
    config.validate(&u0)?;
    let n = config.n_steps();
    let mut state = SimState::initial(u0);
    on_record(&state);
    for step in 1..=n {
        let t_next = if step == n {
            config.t_final
        } else {
            step as f64 * config.dt
        };
        let mut next = step_rk4_dt(&state, t_next - state.t, config)?;
        next.t = t_next;
        state = next;
        if step % config.callback_stride as u64 == 0 || step == n {
            on_record(&state);
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardReport {
    /// `d_k = ‖u^{k+1}(T) - u^k(T)‖_{H¹}`.
    pub distances: Vec<f64>,
    /// Subintervals of the time quadrature after refinement.
    pub subintervals: usize,
    #[serde(skip)]
    pub final_iterate: Field,
}

const PICARD_BASE_SUBINTERVALS: usize = 1000;
const PICARD_MAX_REFINEMENTS: usize = 4;

fn picard_pass(
    u0: &Field,
    t_small: f64,
    n_iters: usize,
    subintervals: usize,
    config: &SimConfig,
) -> Result<(Vec<f64>, Field), EvolutionError> {
    let h = t_small / subintervals as f64;
    let n = u0.values().len();
    let domain = *u0.domain();
    let mut iterate: Vec<Field> = vec![u0.clone(); subintervals + 1];
    let mut distances = Vec::with_capacity(n_iters);
    for _ in 0..n_iters {
        let rates = iterate
            .iter()
            .map(|u| kernel::rhs(u, &config.nonlinearity, &config.spec))
            .collect::<Result<Vec<_>, _>>()?;
        let mut next = Vec::with_capacity(subintervals + 1);
        let mut acc = vec![0.0; n];
        next.push(u0.clone());
        for i in 1..=subintervals {
            let (a, b) = (rates[i - 1].values(), rates[i].values());
            for j in 0..n {
                acc[j] += 0.5 * h * (a[j] + b[j]);
            }
            let v = u0.values().iter().zip(&acc).map(|(u, s)| u + s).collect();
            next.push(Field::from_raw(domain, v));
        }
        let diff = next[subintervals]
            .zip_with(&iterate[subintervals], |a, b| a - b)
            .expect("same domain");
        distances.push(h1_norm(&diff));
        iterate = next;
    }
    Ok((distances, iterate.pop().expect("nonempty")))
}

/// Picard iteration `u^{k+1}(t) = u0 + ∫₀ᵗ rhs(u^k(s)) ds` on `[0, t_small]`
/// with composite trapezoid time quadrature, refined until the reported
/// distances agree to three digits.
pub fn picard_iterate(
    u0: &Field,
    t_small: f64,
    n_iters: usize,
    config: &SimConfig,
) -> Result<PicardReport, EvolutionError> {
    if u0.domain() != config.spec.domain() {
        return Err(EvolutionError::DomainMismatch);
    }
    let radius = (2.0 * u0.max_abs()).max(1e-12);
    let lip = lipschitz_estimate(&config.nonlinearity, radius, 1001);
    if !(t_small > 0.0 && t_small * lip * DX_KERNEL_BOUND < 0.5) {
        return Err(EvolutionError::InvalidConfig {
            field: "t_small",
            reason: format!(
                "need 0 < t_small·Lip·{DX_KERNEL_BOUND} < 1/2, got t_small = {t_small}, Lip = {lip}"
            ),
        });
    }

    let floor = 1e-13 * h1_norm(u0).max(1e-300);
    let mut subintervals = PICARD_BASE_SUBINTERVALS;
    let (mut distances, mut last) = picard_pass(u0, t_small, n_iters, subintervals, config)?;
    for _ in 0..PICARD_MAX_REFINEMENTS {
        let (finer, finer_last) = picard_pass(u0, t_small, n_iters, 2 * subintervals, config)?;
        let settled = distances
            .iter()
            .zip(&finer)
            .all(|(a, b)| a.max(*b) < floor || (a - b).abs() <= 1e-3 * a.abs().max(b.abs()));
        subintervals *= 2;
        distances = finer;
        last = finer_last;
        if settled {
            break;
        }
    }

    let growing = distances.windows(2).map(|w| w[1] > w[0]).collect::<Vec<_>>();
    if growing.windows(3).any(|w| w.iter().all(|&g| g)) {
        return Err(EvolutionError::PicardDivergence(distances));
    }
    Ok(PicardReport {
        distances,
        subintervals,
        final_iterate: last,
    })
}

/// Exact solution of the linear flow `f(u) = u`: Fourier mode `κ` rotates
/// with frequency `κ / (1 + κ²)`.
pub fn linear_exact(u0: &Field, t: f64) -> Field {
    use crate::fields::{from_spectral, to_spectral};
    use rustfft::num_complex::Complex64;
    let d = *u0.domain();
    let sf = to_spectral(u0).apply(|j| {
        if d.is_nyquist(j) {
            return Complex64::new(1.0, 0.0);
        }
        let k = d.angular_wavenumber(j);
        Complex64::from_polar(1.0, -k / (1.0 + k * k) * t)
    });
    from_spectral(&sf)
}
