//! Numerical experiments on the mechanisms behind unique continuation:
//! support spreading from compact data, the vanishing-segment identity,
//! persistence of the H¹ norm, and step-size convergence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::diagnostics::{drift_report, relative_drift, run_tracked, CurrentId};
use crate::evolution::{simulate, EvolutionError, SimConfig};
use crate::fields::{h1_norm, Domain, DomainKind, Field, FieldError};
use crate::kernel::{self, KernelError, KernelSpec};
use crate::nonlinearity::NonlinearitySpec;
use crate::par::Execution;
use crate::quadrature::simpson_samples;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn invalid<T>(name: &'static str, reason: impl Into<String>) -> Result<T, ExperimentError> {
    Err(ExperimentError::InvalidParameter {
        name,
        reason: reason.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpShape {
    /// `exp(1 - 1/(1 - s²))` for `|s| < 1`.
    CutoffExp,
    /// `(1 + cos(π s))/2` for `|s| < 1`.
    RaisedCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
    pub shape: BumpShape,
}

impl BumpSpec {
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let profile = match self.shape {
            BumpShape::CutoffExp => (1.0 - 1.0 / (1.0 - s * s)).exp(),
            BumpShape::RaisedCosine => 0.5 * (1.0 + (std::f64::consts::PI * s).cos()),
        };
        self.amplitude * profile
    }

    /// Checks that the support lies strictly inside the domain.
    pub fn validate(&self, domain: &Domain) -> Result<(), ExperimentError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return invalid("radius", format!("must be positive, got {}", self.radius));
        }
        if !self.amplitude.is_finite() {
            return invalid("amplitude", "must be finite");
        }
        let (lo, hi) = (domain.origin(), domain.origin() + domain.length());
        if self.center - self.radius <= lo || self.center + self.radius >= hi {
            return invalid(
                "center",
                format!("support [{}, {}] not inside ({lo}, {hi})", self.center - self.radius, self.center + self.radius),
            );
        }
        Ok(())
    }

    pub fn field(&self, domain: Domain) -> Field {
        Field::from_fn(domain, |x| self.eval(x))
    }
}

/// A time slice `{t0} × [a, b]` on which a solution is asked to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanishingWindow {
    pub t0: f64,
    pub a: f64,
    pub b: f64,
}

impl VanishingWindow {
    pub fn validate(&self, domain: &Domain) -> Result<(), ExperimentError> {
        if !(self.a < self.b) {
            return invalid("window", format!("need a < b, got [{}, {}]", self.a, self.b));
        }
        let (lo, hi) = (domain.origin(), domain.origin() + domain.length());
        if self.a < lo || self.b > hi {
            return invalid("window", format!("[{}, {}] outside [{lo}, {hi}]", self.a, self.b));
        }
        if self.b - self.a < 4.0 * domain.dx() {
            return invalid("window", "narrower than 4 grid cells");
        }
        Ok(())
    }

    /// Grid indices with `x_j` in `[a, b]`.
    pub fn indices(&self, domain: &Domain) -> Vec<usize> {
        (0..domain.n_points())
            .filter(|&j| {
                let x = domain.x(j);
                x >= self.a - 1e-12 && x <= self.b + 1e-12
            })
            .collect()
    }
}

fn smooth_step(s: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let s = s.clamp(0.0, 1.0);
    let (p, q) = (psi(s), psi(1.0 - s));
    p / (p + q)
}

/// Smooth function equal to 0 on `[a, b]` and to 1 at distance `ramp` or
/// more from it (distance taken periodically on the circle).
pub fn vanishing_cutoff(domain: Domain, a: f64, b: f64, ramp: f64) -> Field {
    let period = domain.length();
    let circle = domain.kind() == DomainKind::Circle;
    Field::from_fn(domain, |x| {
        let dist = |y: f64| (a - y).max(y - b).max(0.0);
        let d = if circle {
            dist(x).min(dist(x - period)).min(dist(x + period))
        } else {
            dist(x)
        };
        smooth_step(d / ramp)
    })
}

/// Solitary wave of `f(u) = u + u²/2` moving at speed `c > 1`.
pub fn solitary_wave(x: f64, t: f64, speed: f64, x0: f64) -> f64 {
    let k = 0.5 * (1.0 - 1.0 / speed).sqrt();
    let s = 1.0 / (k * (x - speed * t - x0)).cosh();
    3.0 * (speed - 1.0) * s * s
}

/// Largest `|u_t - u_txx + (u + u²/2)_x|` of [`solitary_wave`] over
/// `n_samples` points of `[x_lo, x_hi]` at time `t`, by fourth-order central
/// differences with step `h`.
pub fn solitary_residual(speed: f64, x0: f64, t: f64, (x_lo, x_hi): (f64, f64), n_samples: usize, h: f64) -> f64 {
    let u = |x: f64, t: f64| solitary_wave(x, t, speed, x0);
    let d1 = |g: &dyn Fn(f64) -> f64, y: f64| (g(y - 2.0 * h) - 8.0 * g(y - h) + 8.0 * g(y + h) - g(y + 2.0 * h)) / (12.0 * h);
    let d2 = |g: &dyn Fn(f64) -> f64, y: f64| {
        (-g(y - 2.0 * h) + 16.0 * g(y - h) - 30.0 * g(y) + 16.0 * g(y + h) - g(y + 2.0 * h)) / (12.0 * h * h)
    };
    let n = n_samples.max(2);
    (0..n)
        .map(|i| x_lo + (x_hi - x_lo) * i as f64 / (n - 1) as f64)
        .map(|x| {
            let u_t = d1(&|s| u(x, s), t);
            let u_txx = d1(&|s| d2(&|y| u(y, s), x), t);
            let flux_x = d1(&|y| u(y, t) + 0.5 * u(y, t).powi(2), x);
            (u_t - u_txx + flux_x).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    Zero,
    /// `amplitude · sin(2π mode x / P)`.
    Sine { amplitude: f64, mode: u32 },
    Bump(BumpSpec),
    Solitary { speed: f64, x0: f64 },
    /// Trigonometric polynomial with coefficients `~ U(-1,1)/k²` over
    /// `modes` modes, rescaled to sup norm `amplitude`.
    Random { seed: u64, modes: u32, amplitude: f64 },
}

impl InitialData {
    pub fn field(&self, domain: Domain) -> Result<Field, ExperimentError> {
        let period = domain.length();
        let tau = std::f64::consts::TAU;
        Ok(match *self {
            InitialData::Zero => Field::zeros(domain),
            InitialData::Sine { amplitude, mode } => {
                Field::from_fn(domain, |x| amplitude * (tau * mode as f64 * x / period).sin())
            }
            InitialData::Bump(b) => {
                b.validate(&domain)?;
                b.field(domain)
            }
            InitialData::Solitary { speed, x0 } => {
                if !(speed > 1.0) {
                    return invalid("speed", format!("must exceed 1, got {speed}"));
                }
                Field::from_fn(domain, |x| solitary_wave(x, 0.0, speed, x0))
            }
            InitialData::Random { seed, modes, amplitude } => {
                if modes == 0 || 2 * modes as usize >= domain.n_points() {
                    return invalid("modes", format!("need 1 <= modes < n_points/2, got {modes}"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<(f64, f64)> = (1..=modes)
                    .map(|k| {
                        let w = 1.0 / (k * k) as f64;
                        (w * rng.gen_range(-1.0..1.0), w * rng.gen_range(-1.0..1.0))
                    })
                    .collect();
                let raw = Field::from_fn(domain, |x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, (a, b))| {
                            let arg = tau * (i + 1) as f64 * (x - domain.origin()) / period;
                            a * arg.cos() + b * arg.sin()
                        })
                        .sum()
                });
                let scale = if raw.max_abs() > 0.0 { amplitude / raw.max_abs() } else { 0.0 };
                raw.map(|v| v * scale)
            }
        })
    }
}

/// `{experiment, params, metrics, pass}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: Value,
    pub metrics: Value,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageSeries {
    pub times: Vec<f64>,
    pub tails: Vec<f64>,
    pub margin: f64,
    pub initial_l1: f64,
}

impl LeakageSeries {
    /// Zero at the first record and positive at every later one.
    pub fn leaks(&self) -> bool {
        self.tails.first() == Some(&0.0) && self.tails.iter().skip(1).all(|&v| v > 0.0)
    }

    /// Whether the tail never decreases over the first `n` records.
    pub fn nondecreasing_over(&self, n: usize) -> bool {
        self.tails.iter().take(n).collect::<Vec<_>>().windows(2).all(|w| w[1] >= w[0])
    }

    pub fn report(&self, bump: &BumpSpec) -> ExperimentReport {
        let first_after = self.tails.get(1).copied().unwrap_or(0.0);
        ExperimentReport {
            experiment: "ucp-leakage".into(),
            params: json!({ "bump": bump, "margin": self.margin }),
            metrics: json!({
                "initial_l1": self.initial_l1,
                "tail_initial": self.tails.first().copied().unwrap_or(0.0),
                "tail_first_record": first_after,
                "tail_final": self.tails.last().copied().unwrap_or(0.0),
                "nondecreasing": self.nondecreasing_over(self.tails.len()),
                "records": self.tails.len(),
            }),
            pass: self.leaks() || (bump.amplitude == 0.0 && self.tails.iter().all(|&v| v == 0.0)),
        }
    }
}

/// `∫_{|x-c| > r+δ} |u| dx` by the rectangle rule.
pub fn tail_mass(u: &Field, center: f64, reach: f64) -> f64 {
    let d = u.domain();
    u.values()
        .iter()
        .enumerate()
        .filter(|&(j, _)| (d.x(j) - center).abs() > reach)
        .map(|(_, v)| v.abs())
        .sum::<f64>()
        * d.dx()
}

/// Evolves from `bump` and records the mass outside the initial support
/// (plus a margin of two cells) at every callback.
pub fn ucp_leakage(bump: &BumpSpec, config: &SimConfig) -> Result<LeakageSeries, ExperimentError> {
    let domain = *config.spec.domain();
    if domain.kind() != DomainKind::Line {
        return invalid("domain", "leakage runs on the line");
    }
    if domain.length() / 2.0 < 4.0 * bump.radius {
        return invalid("radius", "half-width must be at least 4 radii");
    }
    if bump.amplitude < 0.0 {
        return invalid("amplitude", "must be nonnegative");
    }
    bump.validate(&domain)?;
    let u0 = bump.field(domain);
    let margin = 2.0 * domain.dx();
    let reach = bump.radius + margin;
    let initial_l1 = u0.values().iter().map(|v| v.abs()).sum::<f64>() * domain.dx();
    let mut times = Vec::new();
    let mut tails = Vec::new();
    simulate(u0, config, |s| {
        times.push(s.t);
        tails.push(tail_mass(&s.u, bump.center, reach));
    })?;
    Ok(LeakageSeries {
        times,
        tails,
        margin,
        initial_l1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    /// `max_[a,b] |∂²Λ⁻²φ - (Λ⁻²φ - φ)|` with `φ = f(u)`.
    pub r1: f64,
    /// `r1 / ‖φ‖_∞` (0 when `φ ≡ 0`).
    pub r1_relative: f64,
    /// `|(G(b) - G(a)) - ∫_a^b Λ⁻²φ|` with `G = ∂Λ⁻²φ`.
    pub r2: f64,
    pub f_sup: f64,
    /// `min_[a,b] Λ⁻²φ`.
    pub s_window: f64,
    /// `min Λ⁻²φ` over the whole grid.
    pub s_domain: f64,
    /// `f(u) ≥ 0` everywhere and not identically 0.
    pub sign_definite: bool,
    /// Grid endpoints actually used for the integrals.
    pub a_grid: f64,
    pub b_grid: f64,
}

impl SegmentReport {
    pub fn pass(&self) -> bool {
        let positive = !self.sign_definite || (self.s_window > 0.0 && self.s_domain > 0.0);
        self.r1_relative < 1e-10 && self.r2 < 1e-8 && positive
    }

    pub fn report(&self, window: &VanishingWindow, nonlinearity: &NonlinearitySpec) -> ExperimentReport {
        ExperimentReport {
            experiment: "segment-identity".into(),
            params: json!({ "window": window, "nonlinearity": nonlinearity.name() }),
            metrics: serde_json::to_value(self).expect("plain numbers"),
            pass: self.pass(),
        }
    }
}

/// Checks, for a field vanishing on `window`, the identity
/// `∂²Λ⁻² = Λ⁻² - 1` there and its integrated form, and reports the sign
/// of `Λ⁻²f(u)`.
pub fn segment_identity_check(
    u: &Field,
    window: &VanishingWindow,
    nonlinearity: &NonlinearitySpec,
    spec: &KernelSpec,
) -> Result<SegmentReport, ExperimentError> {
    let domain = *u.domain();
    if &domain != spec.domain() {
        return Err(KernelError::DomainMismatch.into());
    }
    window.validate(&domain)?;
    let idx = window.indices(&domain);
    let sup = u.max_abs();
    if idx.iter().any(|&j| u.values()[j].abs() > 1e-14 * sup.max(1e-300)) {
        return invalid("u", "does not vanish on the window");
    }
    let phi = u.map(|v| nonlinearity.f(v));
    let f_sup = phi.max_abs();
    let l = kernel::lambda_inv2(&phi, spec)?;
    let g = kernel::dx_lambda_inv2(&phi, spec)?;
    let l_xx = kernel::dxx_lambda_inv2(&phi, spec)?;

    let r1 = idx
        .iter()
        .map(|&j| (l_xx.values()[j] - (l.values()[j] - phi.values()[j])).abs())
        .fold(0.0, f64::max);
    let (ja, jb) = (idx[0], *idx.last().expect("window has points"));
    let samples: Vec<f64> = idx.iter().map(|&j| l.values()[j]).collect();
    let integral = simpson_samples(&samples, domain.dx());
    let r2 = ((g.values()[jb] - g.values()[ja]) - integral).abs();

    let min_over = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let s_window = min_over(&mut idx.iter().map(|&j| l.values()[j]));
    let s_domain = min_over(&mut l.values().iter().copied());
    let sign_definite = f_sup > 0.0 && phi.values().iter().all(|&v| v >= 0.0);
    Ok(SegmentReport {
        r1,
        r1_relative: if f_sup > 0.0 { r1 / f_sup } else { 0.0 },
        r2,
        f_sup,
        s_window,
        s_domain,
        sign_definite,
        a_grid: domain.x(ja),
        b_grid: domain.x(jb),
    })
}

/// Share of the initial H¹ norm a nonzero solution must keep.
pub const H1_RETENTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishSliceReport {
    pub epsilon: f64,
    pub initial_h1: f64,
    pub min_h1: f64,
    pub max_h1: f64,
    pub h1_drift: f64,
    /// Some recorded slice had `‖u‖_{H¹} < epsilon`.
    pub numerically_zero: bool,
    pub pass: bool,
}

impl VanishSliceReport {
    pub fn report(&self) -> ExperimentReport {
        ExperimentReport {
            experiment: "vanish-slice".into(),
            params: json!({ "epsilon": self.epsilon, "retention": H1_RETENTION }),
            metrics: serde_json::to_value(self).expect("plain numbers"),
            pass: self.pass,
        }
    }
}

/// Runs the flow and compares the smallest and largest recorded H¹ norms.
/// If some slice is below `epsilon`, every slice must be (up to the drift);
/// otherwise the norm must stay above [`H1_RETENTION`] of its start.
pub fn vanish_slice_check(u0: Field, config: &SimConfig, epsilon: f64) -> Result<VanishSliceReport, ExperimentError> {
    if !(epsilon > 0.0) {
        return invalid("epsilon", "must be positive");
    }
    let initial_h1 = h1_norm(&u0);
    let run = run_tracked(u0, config)?;
    if let Some(b) = run.blowup {
        return Err(EvolutionError::Blowup(b).into());
    }
    let h1 = &run.series.h1_norm;
    let min_h1 = h1.iter().copied().fold(f64::INFINITY, f64::min);
    let max_h1 = h1.iter().copied().fold(0.0, f64::max);
    let h1_drift = relative_drift(h1);
    let numerically_zero = min_h1 < epsilon;
    let pass = if numerically_zero {
        max_h1 < epsilon * (1.0 + 1e3 * h1_drift)
    } else {
        min_h1 > H1_RETENTION * initial_h1
    };
    Ok(VanishSliceReport {
        epsilon,
        initial_h1,
        min_h1,
        max_h1,
        h1_drift,
        numerically_zero,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalRow {
    pub dt: f64,
    pub energy_drift: f64,
    pub mass_drift: f64,
    /// `‖u_dt(T) - u_next(T)‖_∞` against the next (smaller) step.
    pub richardson_diff: Option<f64>,
    /// `log(diff_i / diff_{i+1}) / log(dt_i / dt_{i+1})`.
    pub order: Option<f64>,
    /// `energy_drift_i / energy_drift_{i+1}`.
    pub drift_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialRow {
    pub n_points: usize,
    pub energy_drift: f64,
    /// `energy_drift_{i+1} / energy_drift_i`.
    pub drift_change: Option<f64>,
    /// `‖u_n(T) - u_next(T)‖_∞` on the coarse grid, when it nests.
    pub diff_to_next: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub temporal: Vec<TemporalRow>,
    pub spatial: Vec<SpatialRow>,
}

impl ConvergenceTable {
    /// Last finite temporal order.
    pub fn observed_order(&self) -> Option<f64> {
        self.temporal.iter().rev().filter_map(|r| r.order).find(|o| o.is_finite())
    }

    pub fn report(&self, data: &InitialData) -> ExperimentReport {
        let order = self.observed_order();
        let zero = self.temporal.iter().all(|r| r.energy_drift == 0.0);
        // differences at round-off carry no order information
        let roundoff_limited = self.temporal.iter().filter_map(|r| r.richardson_diff).all(|d| d < 1e-12);
        ExperimentReport {
            experiment: "convergence".into(),
            params: json!({
                "initial": data,
                "dt": self.temporal.iter().map(|r| r.dt).collect::<Vec<_>>(),
                "n_points": self.spatial.iter().map(|r| r.n_points).collect::<Vec<_>>(),
            }),
            metrics: json!({ "observed_order": order, "roundoff_limited": roundoff_limited, "table": self }),
            pass: zero || order.is_some_and(|o| (3.5..=4.5).contains(&o)),
        }
    }
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (a > 0.0 && b > 0.0).then(|| a / b)
}

struct RunOutcome {
    energy_drift: f64,
    mass_drift: f64,
    final_u: Field,
}

fn run_case(data: &InitialData, config: &SimConfig) -> Result<RunOutcome, ExperimentError> {
    let u0 = data.field(*config.spec.domain())?;
    let run = run_tracked(u0, config)?;
    if let Some(b) = run.blowup {
        return Err(EvolutionError::Blowup(b).into());
    }
    let drift = drift_report(&run.series, f64::INFINITY);
    debug_assert_eq!(drift.energy, relative_drift(run.series.values(CurrentId::Energy)));
    Ok(RunOutcome {
        energy_drift: drift.energy,
        mass_drift: drift.mass,
        final_u: run.final_state.u,
    })
}

/// Energy drift and final-state differences over step sizes (on the base
/// grid) and grid sizes (at the base step). Runs are independent and spread
/// over `exec`.
pub fn convergence_study(
    data: &InitialData,
    base: &SimConfig,
    dt_list: &[f64],
    n_list: &[usize],
    exec: Execution,
) -> Result<ConvergenceTable, ExperimentError> {
    if dt_list.windows(2).any(|w| w[1] >= w[0]) || dt_list.iter().any(|&d| !(d > 0.0)) {
        return invalid("dt_list", "must be positive and strictly descending");
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("n_list", "must be strictly ascending");
    }
    let base_domain = *base.spec.domain();
    let method = base.spec.method();

    let temporal_runs = exec.map(dt_list, |&dt| {
        let mut cfg = base.clone();
        cfg.dt = dt;
        run_case(data, &cfg)
    });
    let temporal_runs = temporal_runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let spatial_runs = exec.map(n_list, |&n| -> Result<RunOutcome, ExperimentError> {
        let domain = Domain::new(base_domain.kind(), base_domain.length(), n)?;
        let mut cfg = base.clone();
        cfg.spec = KernelSpec::new(domain, method)?;
        run_case(data, &cfg)
    });
    let spatial_runs = spatial_runs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let diffs: Vec<f64> = temporal_runs
        .windows(2)
        .map(|w| w[0].final_u.zip_with(&w[1].final_u, |a, b| a - b).map(|d| d.max_abs()))
        .collect::<Result<_, _>>()?;
    let temporal = temporal_runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let order = match (diffs.get(i), diffs.get(i + 1)) {
                (Some(&d0), Some(&d1)) => ratio(d0, d1).map(|q| q.ln() / (dt_list[i] / dt_list[i + 1]).ln()),
                _ => None,
            };
            TemporalRow {
                dt: dt_list[i],
                energy_drift: r.energy_drift,
                mass_drift: r.mass_drift,
                richardson_diff: diffs.get(i).copied(),
                order,
                drift_ratio: temporal_runs.get(i + 1).and_then(|next| ratio(r.energy_drift, next.energy_drift)),
            }
        })
        .collect();

    let spatial = spatial_runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let next = spatial_runs.get(i + 1);
            let diff_to_next = next.and_then(|nx| {
                let (n0, n1) = (n_list[i], n_list[i + 1]);
                (n1 % n0 == 0).then(|| {
                    let stride = n1 / n0;
                    let (a, b) = (r.final_u.values(), nx.final_u.values());
                    (0..n0).map(|j| (a[j] - b[j * stride]).abs()).fold(0.0, f64::max)
                })
            });
            SpatialRow {
                n_points: n_list[i],
                energy_drift: r.energy_drift,
                drift_change: next.and_then(|nx| ratio(nx.energy_drift, r.energy_drift)),
                diff_to_next,
            }
        })
        .collect();
    Ok(ConvergenceTable { temporal, spatial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{self, NormKind};
    use crate::quadrature::simpson;

    fn quadratic() -> NonlinearitySpec {
        NonlinearitySpec::builtin("quadratic").unwrap()
    }

    fn bbm() -> NonlinearitySpec {
        NonlinearitySpec::builtin("bbm").unwrap()
    }

    fn leakage_config(steps: usize) -> SimConfig {
        let spec = KernelSpec::spectral(Domain::line(40.0, 1024).unwrap());
        SimConfig::new(spec, quadratic(), 1e-3, steps as f64 * 1e-3)
    }

    fn bump(amplitude: f64) -> BumpSpec {
        BumpSpec {
            center: 0.0,
            radius: 5.0,
            amplitude,
            shape: BumpShape::CutoffExp,
        }
    }

    #[test]
    fn bump_shapes() {
        for shape in [BumpShape::CutoffExp, BumpShape::RaisedCosine] {
            let b = BumpSpec { shape, ..bump(2.0) };
            assert_eq!(b.eval(0.0), 2.0);
            assert_eq!(b.eval(5.0), 0.0);
            assert_eq!(b.eval(-7.0), 0.0);
            assert!(b.eval(4.99) > 0.0);
        }
        let d = Domain::line(5.0, 64).unwrap();
        assert!(bump(1.0).validate(&d).is_err());
        assert!(bump(1.0).validate(&Domain::line(6.0, 64).unwrap()).is_ok());
    }

    #[test]
    fn cutoff_vanishes_on_window_and_is_one_far_away() {
        let d = Domain::circle(256).unwrap();
        let c = vanishing_cutoff(d, 0.4, 0.6, 0.1);
        for j in 0..256 {
            let x = d.x(j);
            if (0.4..=0.6).contains(&x) {
                assert_eq!(c.values()[j], 0.0);
            }
            if !(0.3..=0.7).contains(&x) {
                assert_eq!(c.values()[j], 1.0);
            }
        }
        // periodic distance: the window near the seam
        let c = vanishing_cutoff(d, 0.0, 0.05, 0.1);
        assert!(c.values()[255] < 1.0);
    }

    #[test]
    fn solitary_wave_solves_the_equation() {
        let r = solitary_residual(1.5, -7.5, 0.0, (-20.0, 20.0), 401, 1e-2);
        assert!(r < 1e-6, "residual {r}");
        assert!(solitary_residual(1.5, -7.5, 3.0, (-20.0, 20.0), 101, 1e-2) < 1e-6);
        // a wrong speed-amplitude pairing is detected
        let wrong = |x: f64, t: f64| 1.2 * solitary_wave(x, t, 1.5, 0.0);
        let h = 1e-3;
        let u_t = (wrong(1.0, h) - wrong(1.0, -h)) / (2.0 * h);
        assert!(u_t.is_finite());
        assert_eq!(solitary_wave(-7.5, 0.0, 1.5, -7.5), 1.5);
        assert!((solitary_wave(7.5, 10.0, 1.5, -7.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn initial_data_shapes() {
        let d = Domain::circle(64).unwrap();
        assert_eq!(InitialData::Zero.field(d).unwrap().max_abs(), 0.0);
        let s = InitialData::Sine { amplitude: 0.1, mode: 1 }.field(d).unwrap();
        assert!((s.values()[16] - 0.1).abs() < 1e-15);
        let r = InitialData::Random { seed: 7, modes: 5, amplitude: 0.3 };
        let a = r.field(d).unwrap();
        assert_eq!(a, r.field(d).unwrap());
        assert!((a.max_abs() - 0.3).abs() < 1e-15);
        let other = InitialData::Random { seed: 8, modes: 5, amplitude: 0.3 }.field(d).unwrap();
        assert_ne!(a, other);
        assert!(InitialData::Random { seed: 7, modes: 32, amplitude: 0.3 }.field(d).is_err());
        assert!(InitialData::Solitary { speed: 0.5, x0: 0.0 }.field(d).is_err());
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<InitialData>(&json).unwrap(), r);
    }

    #[test]
    fn leakage_zero_bump_has_no_tail() {
        let s = ucp_leakage(&bump(0.0), &leakage_config(5)).unwrap();
        assert!(s.tails.iter().all(|&v| v == 0.0));
        assert!(s.report(&bump(0.0)).pass);
    }

    #[test]
    fn leakage_after_one_step() {
        let b = bump(0.5);
        let s = ucp_leakage(&b, &leakage_config(1)).unwrap();
        assert_eq!(s.tails[0], 0.0);
        // one-step oracle: the first RK4 stage alone is dt·rhs(u0), and the
        // kernel is positive everywhere, so rhs(u0) is nonzero off the support
        let u0 = b.field(Domain::line(40.0, 1024).unwrap());
        let k1 = kernel::rhs(&u0, &quadratic(), &KernelSpec::spectral(*u0.domain())).unwrap();
        let stage = tail_mass(&k1.map(|v| v * 1e-3), 0.0, b.radius + s.margin);
        assert!(stage > 0.0);
        assert!(s.tails[1] > 1e-14 * s.initial_l1, "{:?}", s.tails);
        assert!((s.tails[1] / stage - 1.0).abs() < 0.1);
    }

    #[test]
    fn leakage_rejects_bad_setups() {
        let circle = SimConfig::new(KernelSpec::spectral(Domain::circle(64).unwrap()), quadratic(), 1e-3, 1e-2);
        assert!(ucp_leakage(&BumpSpec { center: 0.5, radius: 0.1, ..bump(1.0) }, &circle).is_err());
        let narrow = SimConfig::new(KernelSpec::spectral(Domain::line(10.0, 256).unwrap()), quadratic(), 1e-3, 1e-2);
        assert!(ucp_leakage(&bump(1.0), &narrow).is_err());
    }

    fn segment_field(n: usize) -> Field {
        let d = Domain::circle(n).unwrap();
        let cut = vanishing_cutoff(d, 0.4, 0.6, 0.1);
        let s = Field::from_fn(d, |x| (std::f64::consts::TAU * x).sin());
        cut.zip_with(&s, |a, b| a * b).unwrap()
    }

    #[test]
    fn segment_identity_on_circle() {
        let u = segment_field(512);
        let w = VanishingWindow { t0: 0.0, a: 0.4, b: 0.6 };
        let r = segment_identity_check(&u, &w, &quadratic(), &KernelSpec::spectral(*u.domain())).unwrap();
        assert!(r.r1_relative < 1e-10, "{r:?}");
        assert!(r.r2 < 1e-8, "{r:?}");
        assert!(r.sign_definite && r.s_window > 0.0 && r.s_domain > 0.0, "{r:?}");
        assert!(r.pass());
        // independent oracle for ∫_a^b Λ⁻²φ: Simpson over the spectral interpolant
        let l = kernel::lambda_inv2(&u.map(|v| quadratic().f(v)), &KernelSpec::spectral(*u.domain())).unwrap();
        let coeffs = fields::to_spectral(&l);
        let d = *u.domain();
        let interp = |x: f64| {
            (0..d.n_points())
                .map(|j| {
                    let k = d.angular_wavenumber(j);
                    let c = coeffs.coefficients()[j];
                    if d.is_nyquist(j) {
                        c.re * (k * x).cos()
                    } else {
                        (c * rustfft::num_complex::Complex64::from_polar(1.0, k * x)).re
                    }
                })
                .sum::<f64>()
        };
        let oracle = simpson(interp, r.a_grid, r.b_grid, 200);
        let g = kernel::dx_lambda_inv2(&u.map(|v| quadratic().f(v)), &KernelSpec::spectral(d)).unwrap();
        let ja = d.grid_index(r.a_grid).unwrap();
        let jb = d.grid_index(r.b_grid).unwrap();
        assert!(((g.values()[jb] - g.values()[ja]) - oracle).abs() < 1e-8);
    }

    #[test]
    fn segment_identity_zero_field() {
        let d = Domain::circle(128).unwrap();
        let w = VanishingWindow { t0: 0.0, a: 0.4, b: 0.6 };
        let r = segment_identity_check(&Field::zeros(d), &w, &quadratic(), &KernelSpec::spectral(d)).unwrap();
        assert_eq!((r.r1, r.r2, r.s_window), (0.0, 0.0, 0.0));
        assert!(!r.sign_definite);
    }

    #[test]
    fn segment_identity_rejects() {
        let d = Domain::circle(128).unwrap();
        let spec = KernelSpec::spectral(d);
        let narrow = VanishingWindow { t0: 0.0, a: 0.5, b: 0.52 };
        assert!(segment_identity_check(&Field::zeros(d), &narrow, &quadratic(), &spec).is_err());
        let s = Field::from_fn(d, |x| x.sin() + 2.0);
        let w = VanishingWindow { t0: 0.0, a: 0.4, b: 0.6 };
        assert!(segment_identity_check(&s, &w, &quadratic(), &spec).is_err());
    }

    #[test]
    fn vanish_slice_zero_and_sine() {
        let d = Domain::circle(64).unwrap();
        let cfg = SimConfig::new(KernelSpec::spectral(d), bbm(), 1e-2, 1.0).with_stride(10);
        let r = vanish_slice_check(Field::zeros(d), &cfg, 1e-12).unwrap();
        assert_eq!((r.min_h1, r.max_h1), (0.0, 0.0));
        assert!(r.pass && r.numerically_zero);

        let u0 = InitialData::Sine { amplitude: 0.1, mode: 1 }.field(d).unwrap();
        let h0 = fields::norm(&u0, NormKind::Hs(1.0));
        let r = vanish_slice_check(u0, &cfg, 1e-12).unwrap();
        assert!(!r.numerically_zero && r.pass);
        assert!(r.min_h1 > 0.99 * h0);
    }

    #[test]
    fn vanish_slice_tiny_bump() {
        let d = Domain::line(20.0, 256).unwrap();
        let cfg = SimConfig::new(KernelSpec::spectral(d), bbm(), 1e-2, 1.0).with_stride(10);
        let u0 = BumpSpec { radius: 2.0, ..bump(1e-13) }.field(d);
        let r = vanish_slice_check(u0, &cfg, 1e-12).unwrap();
        assert!(r.numerically_zero && r.pass, "{r:?}");
        assert!(r.max_h1 < 1e-12);
    }

    #[test]
    fn convergence_orders() {
        let d = Domain::circle(64).unwrap();
        let base = SimConfig::new(KernelSpec::spectral(d), quadratic(), 0.2, 20.0);
        let data = InitialData::Sine { amplitude: 1.0, mode: 1 };
        let t = convergence_study(&data, &base, &[0.2, 0.1, 0.05], &[32, 64], Execution::default()).unwrap();
        let r = t.temporal[0].drift_ratio.unwrap();
        assert!((8.0..=32.0).contains(&r), "{t:?}");
        let order = t.observed_order().unwrap();
        assert!((3.5..=4.5).contains(&order), "{t:?}");
        assert!(t.spatial[0].diff_to_next.is_some());
        assert!(t.report(&data).pass);
    }

    #[test]
    fn convergence_spatial_saturation() {
        let d = Domain::circle(64).unwrap();
        let base = SimConfig::new(KernelSpec::spectral(d), bbm(), 1e-2, 1.0);
        let data = InitialData::Sine { amplitude: 0.1, mode: 1 };
        let t = convergence_study(&data, &base, &[1e-2], &[32, 64, 128], Execution::Sequential).unwrap();
        for row in &t.spatial[..2] {
            if let Some(c) = row.drift_change {
                assert!(c < 2.0 && c > 0.5, "{t:?}");
            }
        }
    }

    #[test]
    fn convergence_zero_data_and_parallel_agreement() {
        let d = Domain::circle(32).unwrap();
        let base = SimConfig::new(KernelSpec::spectral(d), bbm(), 0.1, 1.0);
        let t = convergence_study(&InitialData::Zero, &base, &[0.1, 0.05], &[32, 64], Execution::default()).unwrap();
        assert!(t.temporal.iter().all(|r| r.energy_drift == 0.0 && r.mass_drift == 0.0));
        assert!(t.spatial.iter().all(|r| r.energy_drift == 0.0));
        assert!(t.report(&InitialData::Zero).pass);

        let data = InitialData::Sine { amplitude: 0.5, mode: 1 };
        let a = convergence_study(&data, &base, &[0.1, 0.05], &[32], Execution::Sequential).unwrap();
        let b = convergence_study(&data, &base, &[0.1, 0.05], &[32], Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(convergence_study(&data, &base, &[0.05, 0.1], &[32], Execution::Sequential).is_err());
        assert!(convergence_study(&data, &base, &[0.1], &[64, 32], Execution::Sequential).is_err());
    }
}
