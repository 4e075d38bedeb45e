//! Green's kernels of `(1 - ∂ₓ²)`, the smoothing operator `Λ⁻² = (1 - ∂ₓ²)⁻¹`
//! and its derivative `∂ₓΛ⁻²`, realized three ways:
//!
//! * `SpectralMultiplier`: multiply Fourier mode `κ` by `1 / (1 + κ²)`.
//! * `DirectConvolution`: O(N²) trapezoid sum against the sampled kernel,
//!   with the leading kink correction at the diagonal.
//! * `ExpFilter` (line only): two O(N) recursive sweeps that integrate the
//!   exponential kernel exactly against a local degree-7 interpolant.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{self, derivative_symbol, Domain, DomainKind, Field, FieldError};
use crate::nonlinearity::NonlinearitySpec;
use crate::par::Execution;
use crate::quadrature::simpson;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("the exponential filter needs a line domain; the circle has no causal ordering")]
    ExpFilterOnCircle,
    #[error("field domain does not match the kernel domain")]
    DomainMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMethod {
    SpectralMultiplier,
    DirectConvolution,
    ExpFilter,
}

/// Green's kernel of `1 - ∂ₓ²` on the line or on the unit circle.
pub fn green_eval(x: f64, kind: DomainKind) -> f64 {
    match kind {
        DomainKind::Line => 0.5 * (-x.abs()).exp(),
        DomainKind::Circle => periodic_green(x, 1.0),
    }
}

/// Green's kernel on a circle of circumference `period`:
/// `cosh(x' - P/2) / (2 sinh(P/2))` with `x' = x - P⌊x/P⌋`.
pub fn periodic_green(x: f64, period: f64) -> f64 {
    let xr = x - period * (x / period).floor();
    (xr - 0.5 * period).cosh() / (2.0 * (0.5 * period).sinh())
}

/// The kernel a domain's `Λ⁻²` convolves with: periodic on the circle, the
/// free-space exponential on the line.
pub fn domain_green(x: f64, domain: &Domain) -> f64 {
    match domain.kind() {
        DomainKind::Circle => periodic_green(x, domain.length()),
        DomainKind::Line => green_eval(x, DomainKind::Line),
    }
}

/// `∫ g` over the domain (one period on the circle, `[-L, L]` on the line),
/// by composite Simpson on each smooth piece of the kernel.
pub fn kernel_mass(domain: &Domain) -> f64 {
    const PANELS: usize = 20_000;
    match domain.kind() {
        DomainKind::Circle => {
            let p = domain.length();
            // kink only at the period ends
            simpson(|x| periodic_green(x, p), 0.0, p, PANELS)
        }
        DomainKind::Line => {
            let l = 0.5 * domain.length();
            let g = |x: f64| green_eval(x, DomainKind::Line);
            simpson(g, -l, 0.0, PANELS) + simpson(g, 0.0, l, PANELS)
        }
    }
}

/// Stencil width of the exponential filter's local interpolant.
const STENCIL: usize = 8;

#[derive(Debug)]
struct ExpFilterTables {
    decay: f64,
    /// `weights[s][m]`: weight of node `j + s - (STENCIL - 1) + m` for the
    /// step `x_j -> x_{j+1}`, for each window shift `s`.
    weights: Vec<[f64; STENCIL]>,
}

/// `∫₀¹ e^{-h(1-τ)} τⁿ dτ` for `n < STENCIL`, summed as
/// `e^{-h} Σ_k h^k / (k! (k+n+1))` (positive terms, no cancellation).
fn exp_moments(h: f64) -> [f64; STENCIL] {
    let mut out = [0.0; STENCIL];
    for (n, slot) in out.iter_mut().enumerate() {
        let mut term = 1.0; // h^k / k!
        let mut sum = 0.0;
        for k in 0..400 {
            let add = term / (k + n + 1) as f64;
            sum += add;
            if add < 1e-18 * sum {
                break;
            }
            term *= h / (k + 1) as f64;
        }
        *slot = (-h).exp() * sum;
    }
    out
}

/// Monomial coefficients of the Lagrange basis polynomial for `nodes[m]`.
fn lagrange_coefficients(nodes: &[f64; STENCIL], m: usize) -> [f64; STENCIL] {
    let mut poly = [0.0; STENCIL];
    poly[0] = 1.0;
    let mut deg = 0;
    let mut denom = 1.0;
    for (i, &p) in nodes.iter().enumerate() {
        if i == m {
            continue;
        }
        // poly *= (τ - p)
        for d in (0..=deg + 1).rev() {
            let lower = if d > 0 { poly[d - 1] } else { 0.0 };
            poly[d] = lower - p * poly[d];
        }
        deg += 1;
        denom *= nodes[m] - p;
    }
    poly.map(|c| c / denom)
}

impl ExpFilterTables {
    fn new(h: f64) -> Self {
        let mu = exp_moments(h);
        let weights = (0..STENCIL)
            .map(|s| {
                // node positions relative to x_j, in units of h
                let nodes: [f64; STENCIL] =
                    std::array::from_fn(|m| (s + m) as f64 - (STENCIL - 1) as f64);
                std::array::from_fn(|m| {
                    let c = lagrange_coefficients(&nodes, m);
                    0.5 * h * c.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>()
                })
            })
            .collect();
        Self {
            decay: (-h).exp(),
            weights,
        }
    }

    /// `y₊(x_j) = ½ ∫_{-∞}^{x_j} e^{-(x_j - s)} φ(s) ds`, zero state at the
    /// left end.
    fn causal(&self, phi: &[f64]) -> Vec<f64> {
        let n = phi.len();
        let mut y = vec![0.0; n];
        // preferred window: nodes j-3 ..= j+4
        let preferred = STENCIL / 2 - 1;
        for j in 0..n - 1 {
            let start = (j as isize - preferred as isize).clamp(0, (n - STENCIL) as isize) as usize;
            let shift = start + STENCIL - 1 - j;
            let w = &self.weights[shift];
            let local: f64 = w.iter().zip(&phi[start..start + STENCIL]).map(|(a, b)| a * b).sum();
            y[j + 1] = self.decay * y[j] + local;
        }
        y
    }

    /// Returns `(y₊, y₋)` with `g ∗ φ = y₊ + y₋` and `∂ₓ(g ∗ φ) = y₋ - y₊`.
    fn sweeps(&self, phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let forward = self.causal(phi);
        let reversed: Vec<f64> = phi.iter().rev().copied().collect();
        let mut backward = self.causal(&reversed);
        backward.reverse();
        (forward, backward)
    }
}

/// Operator configuration for one domain. Multiplier and filter tables are
/// built once; the spec is immutable and shareable afterwards.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    domain: Domain,
    method: KernelMethod,
    multiplier: Arc<Vec<f64>>,
    exp_filter: Option<Arc<ExpFilterTables>>,
}

impl KernelSpec {
    pub fn new(domain: Domain, method: KernelMethod) -> Result<Self, KernelError> {
        if method == KernelMethod::ExpFilter && domain.kind() == DomainKind::Circle {
            return Err(KernelError::ExpFilterOnCircle);
        }
        let multiplier = (0..domain.n_points())
            .map(|j| {
                let k = domain.angular_wavenumber(j);
                1.0 / (1.0 + k * k)
            })
            .collect();
        let exp_filter = (method == KernelMethod::ExpFilter)
            .then(|| Arc::new(ExpFilterTables::new(domain.dx())));
        Ok(Self {
            domain,
            method,
            multiplier: Arc::new(multiplier),
            exp_filter,
        })
    }

    pub fn spectral(domain: Domain) -> Self {
        Self::new(domain, KernelMethod::SpectralMultiplier).expect("spectral kernel is valid on every domain")
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    fn check(&self, field: &Field) -> Result<(), KernelError> {
        if field.domain() != &self.domain {
            return Err(KernelError::DomainMismatch);
        }
        Ok(())
    }
}

/// Trapezoid sum `Δx Σ_m g(x_j - x_m) φ_m` minus the kink term `Δx²/12 φ_j`.
///
/// The kernel's first derivative jumps by -1 at the origin, which leaves an
/// `Δx²/12 φ(x_j)` defect in the plain trapezoid sum; removing it leaves an
/// `O(Δx⁴)` error.
pub fn direct_convolve(phi: &Field, exec: Execution) -> Field {
    let domain = *phi.domain();
    let n = domain.n_points();
    let h = domain.dx();
    let table: Vec<f64> = (0..n).map(|d| domain_green(d as f64 * h, &domain)).collect();
    let v = phi.values();
    let periodic = domain.kind() == DomainKind::Circle;
    let out = exec.map_range(n, |j| {
        let mut acc = 0.0;
        for (m, &p) in v.iter().enumerate() {
            let d = if periodic {
                (j + n - m) % n
            } else {
                j.abs_diff(m)
            };
            acc += table[d] * p;
        }
        h * acc - h * h / 12.0 * v[j]
    });
    Field::from_raw(domain, out)
}

/// `Λ⁻²φ = g ∗ φ`.
pub fn lambda_inv2(field: &Field, spec: &KernelSpec) -> Result<Field, KernelError> {
    spec.check(field)?;
    Ok(match spec.method {
        KernelMethod::SpectralMultiplier => {
            let m = &spec.multiplier;
            let sf = fields::to_spectral(field).apply(|j| Complex64::new(m[j], 0.0));
            fields::from_spectral(&sf)
        }
        KernelMethod::DirectConvolution => direct_convolve(field, Execution::default()),
        KernelMethod::ExpFilter => {
            let tables = spec.exp_filter.as_ref().expect("tables built for ExpFilter");
            let (fwd, bwd) = tables.sweeps(field.values());
            Field::from_raw(spec.domain, fwd.iter().zip(&bwd).map(|(a, b)| a + b).collect())
        }
    })
}

/// `∂ₓΛ⁻²φ`.
pub fn dx_lambda_inv2(field: &Field, spec: &KernelSpec) -> Result<Field, KernelError> {
    spec.check(field)?;
    Ok(match spec.method {
        KernelMethod::SpectralMultiplier => {
            let m = &spec.multiplier;
            let d = spec.domain;
            let sf = fields::to_spectral(field).apply(|j| derivative_symbol(&d, j, 1) * m[j]);
            fields::from_spectral(&sf)
        }
        KernelMethod::DirectConvolution => {
            fields::derivative(&direct_convolve(field, Execution::default()), 1)?
        }
        KernelMethod::ExpFilter => {
            let tables = spec.exp_filter.as_ref().expect("tables built for ExpFilter");
            let (fwd, bwd) = tables.sweeps(field.values());
            Field::from_raw(spec.domain, fwd.iter().zip(&bwd).map(|(a, b)| b - a).collect())
        }
    })
}

/// `∂ₓ²Λ⁻²φ`. The spectral method applies `-κ²/(1+κ²)` in one pass so that
/// round-off in `Λ⁻²φ` is not amplified by `κ²`.
pub fn dxx_lambda_inv2(field: &Field, spec: &KernelSpec) -> Result<Field, KernelError> {
    spec.check(field)?;
    match spec.method {
        KernelMethod::SpectralMultiplier => {
            let m = &spec.multiplier;
            let d = spec.domain;
            let sf = fields::to_spectral(field).apply(|j| derivative_symbol(&d, j, 2) * m[j]);
            Ok(fields::from_spectral(&sf))
        }
        _ => Ok(fields::derivative(&lambda_inv2(field, spec)?, 2)?),
    }
}

/// Time derivative of the nonlocal flow: `u_t = -∂ₓΛ⁻² f(u)`.
pub fn rhs(u: &Field, nonlinearity: &NonlinearitySpec, spec: &KernelSpec) -> Result<Field, KernelError> {
    let fu = u.map(|v| nonlinearity.f(v));
    Ok(dx_lambda_inv2(&fu, spec)?.map(|v| -v))
}

/// L∞ norms of `(1 - ∂ₓ²)Λ⁻²φ - φ` and `∂ₓ²Λ⁻²φ - (Λ⁻²φ - φ)`.
pub fn identity_residuals(field: &Field, spec: &KernelSpec) -> Result<(f64, f64), KernelError> {
    let lam = lambda_inv2(field, spec)?;
    let lam_xx = dxx_lambda_inv2(field, spec)?;
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for ((&v, &l), &lxx) in field.values().iter().zip(lam.values()).zip(lam_xx.values()) {
        r1 = r1.max(((l - lxx) - v).abs());
        r2 = r2.max((lxx - (l - v)).abs());
    }
    Ok((r1, r2))
}

/// Fourier multiplier of `Λ⁻²` for integer wavenumber `k` on a period.
pub fn multiplier(k: i64, period: f64) -> f64 {
    let kappa = 2.0 * PI * k as f64 / period;
    1.0 / (1.0 + kappa * kappa)
}
