//! Uniform 1-D grids, sampled fields and their Fourier representation.
//!
//! Both domain kinds are handled spectrally as periodic grids: the circle of
//! circumference `length`, and the line truncated to `[-L, L)` with period
//! `2L`. Fields on the line must be negligible near `±L` for the periodic
//! wrap to be harmless.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest grid accepted by [`Domain::new`].
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("domain length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("domain needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("field has {got} values but the domain has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("derivative order must be 1 or 2, got {0}")]
    BadOrder(u32),
    #[error("fields live on different domains")]
    DomainMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Circle,
    Line,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::Circle => f.write_str("circle"),
            DomainKind::Line => f.write_str("line"),
        }
    }
}

/// A uniform periodic grid.
///
/// `length` is the full period: the circumference for a circle, `2L` for the
/// line truncated to `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    kind: DomainKind,
    length: f64,
    n_points: usize,
}

impl Domain {
    pub fn new(kind: DomainKind, length: f64, n_points: usize) -> Result<Self, FieldError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FieldError::BadLength(length));
        }
        if n_points < MIN_POINTS {
            return Err(FieldError::TooFewPoints(n_points));
        }
        Ok(Self {
            kind,
            length,
            n_points,
        })
    }

    /// The unit circle `[0, 1)`.
    pub fn circle(n_points: usize) -> Result<Self, FieldError> {
        Self::new(DomainKind::Circle, 1.0, n_points)
    }

    /// The line truncated to `[-half_width, half_width)`.
    pub fn line(half_width: f64, n_points: usize) -> Result<Self, FieldError> {
        Self::new(DomainKind::Line, 2.0 * half_width, n_points)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Period of the grid.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_points as f64
    }

    /// Left end of the grid: 0 on the circle, `-L` on the line.
    pub fn origin(&self) -> f64 {
        match self.kind {
            DomainKind::Circle => 0.0,
            DomainKind::Line => -0.5 * self.length,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Signed integer wavenumber stored at FFT slot `j`.
    pub fn wavenumber_index(&self, j: usize) -> i64 {
        let n = self.n_points as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Angular wavenumber `2πk / length` at FFT slot `j`.
    pub fn angular_wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.wavenumber_index(j) as f64 / self.length
    }

    /// Whether slot `j` holds the unpaired Nyquist mode of an even grid.
    pub fn is_nyquist(&self, j: usize) -> bool {
        self.n_points.is_multiple_of(2) && j == self.n_points / 2
    }

    /// Index of the grid point at `x`, if `x` is one (to within 1e-9 Δx).
    pub fn grid_index(&self, x: f64) -> Option<usize> {
        let s = (x - self.origin()) / self.dx();
        let j = s.round();
        if (s - j).abs() > 1e-9 || j < 0.0 || j >= self.n_points as f64 {
            return None;
        }
        Some(j as usize)
    }
}

/// Real samples of a function on a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Domain,
    values: Vec<f64>,
}

impl Field {
    pub fn new(domain: Domain, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != domain.n_points() {
            return Err(FieldError::LengthMismatch {
                expected: domain.n_points(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(FieldError::NonFinite { index, value });
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: Domain) -> Self {
        Self {
            domain,
            values: vec![0.0; domain.n_points()],
        }
    }

    pub fn from_fn(domain: Domain, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..domain.n_points()).map(|j| f(domain.x(j))).collect();
        Self { domain, values }
    }

    /// Builds a field without the finiteness check. Used by the integrator,
    /// which validates separately so it can report blowup.
    pub(crate) fn from_raw(domain: Domain, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.n_points());
        Self { domain, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field, FieldError> {
        if self.domain != other.domain {
            return Err(FieldError::DomainMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_raw(self.domain, values))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Fourier coefficients of a real [`Field`] in FFT slot order.
///
/// Normalized so that `u(x_j) = Σ_k c_k exp(2πi k x_j / length)`: a unit
/// constant has `c_0 = 1` and `sin(2πx)` has `|c_{±1}| = 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: Domain,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(domain: Domain, coefficients: Vec<Complex64>) -> Result<Self, FieldError> {
        if coefficients.len() != domain.n_points() {
            return Err(FieldError::LengthMismatch {
                expected: domain.n_points(),
                got: coefficients.len(),
            });
        }
        Ok(Self {
            domain,
            coefficients,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Coefficient of the signed wavenumber `k`, zero if it is not resolved.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        let n = self.domain.n_points() as i64;
        if k.abs() > n / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let slot = k.rem_euclid(n) as usize;
        self.coefficients[slot]
    }

    /// Multiplies slot `j` by `m(j)`.
    pub fn apply(mut self, m: impl Fn(usize) -> Complex64) -> Self {
        for (j, c) in self.coefficients.iter_mut().enumerate() {
            *c *= m(j);
        }
        self
    }

    /// Largest coefficient magnitude in the top third of the resolved band,
    /// relative to the largest overall. Zero for the zero field.
    pub fn tail_fraction(&self) -> f64 {
        let n = self.domain.n_points() as i64;
        let cutoff = n / 3;
        let mut top = 0.0f64;
        let mut all = 0.0f64;
        for (j, c) in self.coefficients.iter().enumerate() {
            let a = c.norm();
            all = all.max(a);
            if self.domain.wavenumber_index(j).abs() > cutoff {
                top = top.max(a);
            }
        }
        if all == 0.0 {
            0.0
        } else {
            top / all
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

pub fn to_spectral(field: &Field) -> SpectralField {
    let n = field.values.len();
    let mut buf: Vec<Complex64> = field
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_in_place(&mut buf, false);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    SpectralField {
        domain: field.domain,
        coefficients: buf,
    }
}

pub fn from_spectral(sf: &SpectralField) -> Field {
    let mut buf = sf.coefficients.clone();
    fft_in_place(&mut buf, true);
    Field::from_raw(sf.domain, buf.into_iter().map(|c| c.re).collect())
}

/// Fourier symbol of `∂ₓ^order` at slot `j`. The Nyquist mode has no real
/// odd derivative and is dropped for odd orders.
pub(crate) fn derivative_symbol(domain: &Domain, j: usize, order: u32) -> Complex64 {
    if order % 2 == 1 && domain.is_nyquist(j) {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, domain.angular_wavenumber(j)).powu(order)
}

/// Spectral derivative of order 1 or 2.
pub fn derivative(field: &Field, order: u32) -> Result<Field, FieldError> {
    if !(1..=2).contains(&order) {
        return Err(FieldError::BadOrder(order));
    }
    let domain = field.domain;
    let sf = to_spectral(field).apply(|j| derivative_symbol(&domain, j, order));
    Ok(from_spectral(&sf))
}

/// Rectangle-rule quadrature `Δx Σ u_j`, spectrally exact for band-limited
/// periodic integrands.
pub fn integrate(field: &Field) -> f64 {
    field.domain.dx() * field.values.iter().sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    Linf,
    /// Sobolev norm with Fourier weight `(1 + κ²)^s`, so that
    /// `‖u‖²_{H¹} = ∫(u² + u_x²) dx`.
    Hs(f64),
}

pub fn norm(field: &Field, kind: NormKind) -> f64 {
    match kind {
        NormKind::Linf => field.max_abs(),
        NormKind::L2 => integrate(&field.map(|v| v * v)).sqrt(),
        NormKind::Hs(s) => {
            assert!(s >= 0.0, "Sobolev index must be nonnegative");
            let domain = field.domain;
            let sf = to_spectral(field);
            let sum: f64 = sf
                .coefficients
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let kappa = domain.angular_wavenumber(j);
                    (1.0 + kappa * kappa).powf(s) * c.norm_sqr()
                })
                .sum();
            (domain.length() * sum).sqrt()
        }
    }
}

pub fn h1_norm(field: &Field) -> f64 {
    norm(field, NormKind::Hs(1.0))
}
