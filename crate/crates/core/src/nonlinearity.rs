//! Polynomial nonlinearities `f(u) = Σ cᵢ uⁱ` together with the
//! antiderivatives the conserved currents need:
//! `F_anti' = f` and `h_anti' = u f'`, both pinned to vanish at 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("unknown nonlinearity `{0}` (expected bbm, linear, quadratic or quartic)")]
    UnknownName(String),
    #[error("polynomial nonlinearity needs at least one coefficient")]
    Empty,
    #[error("constant coefficient c0 must be 0, got {0}")]
    NonzeroConstant(f64),
    #[error("coefficient c{index} is not finite")]
    NonFinite { index: usize },
    #[error("all coefficients vanish; f must not be identically zero")]
    Vanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignClass {
    NonNegative,
    NonPositive,
    SignChanging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    name: String,
    /// `coefficients[i]` multiplies `u^i`.
    coefficients: Vec<f64>,
    sign_class: SignClass,
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

impl NonlinearitySpec {
    pub fn builtin(name: &str) -> Result<Self, NonlinearityError> {
        let (coefficients, sign_class) = match name {
            "bbm" => (vec![0.0, 1.0, 0.5], SignClass::SignChanging),
            "linear" => (vec![0.0, 1.0], SignClass::SignChanging),
            "quadratic" => (vec![0.0, 0.0, 1.0], SignClass::NonNegative),
            "quartic" => (vec![0.0, 0.0, 0.0, 0.0, 1.0], SignClass::NonNegative),
            other => return Err(NonlinearityError::UnknownName(other.to_string())),
        };
        Ok(Self {
            name: name.to_string(),
            coefficients,
            sign_class,
        })
    }

    /// User polynomial `c₀ + c₁u + … + c_d u^d` with `c₀ = 0`. The sign class
    /// is inferred by sampling `[-10, 10]`.
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self, NonlinearityError> {
        if coefficients.is_empty() {
            return Err(NonlinearityError::Empty);
        }
        if let Some(index) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(NonlinearityError::NonFinite { index });
        }
        if coefficients[0] != 0.0 {
            return Err(NonlinearityError::NonzeroConstant(coefficients[0]));
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(NonlinearityError::Vanishing);
        }
        let mut spec = Self {
            name: format!("poly{coefficients:?}"),
            coefficients,
            sign_class: SignClass::SignChanging,
        };
        spec.sign_class = sampled_sign_class(&spec, -10.0, 10.0, 2001);
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn sign_class(&self) -> SignClass {
        self.sign_class
    }

    pub fn f(&self, u: f64) -> f64 {
        horner(&self.coefficients, u)
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        let d: Vec<f64> = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| i as f64 * c)
            .collect();
        horner(&d, u)
    }

    /// `F_anti(u) = Σ cᵢ u^{i+1}/(i+1)`.
    pub fn f_anti(&self, u: f64) -> f64 {
        let a: Vec<f64> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| c / (i + 1) as f64)
            .collect();
        u * horner(&a, u)
    }

    /// `h_anti(u) = Σ i cᵢ u^{i+1}/(i+1)`, so `h_anti' = u f'(u)`.
    pub fn h_anti(&self, u: f64) -> f64 {
        let a: Vec<f64> = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| i as f64 * c / (i + 1) as f64)
            .collect();
        u * horner(&a, u)
    }
}

fn sampled_sign_class(spec: &NonlinearitySpec, lo: f64, hi: f64, n: usize) -> SignClass {
    let (mut pos, mut neg) = (false, false);
    for i in 0..n {
        let v = spec.f(lo + (hi - lo) * i as f64 / (n - 1) as f64);
        pos |= v > 0.0;
        neg |= v < 0.0;
    }
    match (pos, neg) {
        (true, true) => SignClass::SignChanging,
        (_, false) => SignClass::NonNegative,
        (false, true) => SignClass::NonPositive,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub range: (f64, f64),
    pub n_samples: usize,
    pub sign_change: bool,
    /// Sample points (away from 0) where `f` vanishes or changes sign.
    pub extra_zeros: Vec<f64>,
    pub declared: SignClass,
    pub observed: SignClass,
    pub declared_consistent: bool,
    /// Sign-definite with zero only at the origin.
    pub passes: bool,
}

/// Samples `f` on `range` and checks that it keeps one sign and vanishes only
/// at 0.
pub fn check_sign_hypotheses(
    spec: &NonlinearitySpec,
    range: (f64, f64),
    n_samples: usize,
) -> HypothesisReport {
    let (lo, hi) = range;
    let n = n_samples.max(2);
    let xs: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| spec.f(x)).collect();
    let observed = sampled_sign_class(spec, lo, hi, n);

    let mut extra_zeros = Vec::new();
    for (i, (&x, &v)) in xs.iter().zip(&vals).enumerate() {
        if x.abs() > 1e-6 && v.abs() < 1e-12 {
            extra_zeros.push(x);
            continue;
        }
        // bracketed root strictly away from the origin
        if i + 1 < n {
            let (x1, v1) = (xs[i + 1], vals[i + 1]);
            let brackets_origin = x <= 1e-6 && x1 >= -1e-6;
            if v * v1 < 0.0 && v1.abs() >= 1e-12 && !brackets_origin {
                extra_zeros.push(0.5 * (x + x1));
            }
        }
    }
    let sign_change = observed == SignClass::SignChanging;
    let declared_consistent = match spec.sign_class {
        SignClass::SignChanging => true,
        declared => declared == observed,
    };
    HypothesisReport {
        range,
        n_samples: n,
        sign_change,
        passes: !sign_change && extra_zeros.is_empty(),
        extra_zeros,
        declared: spec.sign_class,
        observed,
        declared_consistent,
    }
}

/// Empirical Lipschitz constant `max |f'|` over `[-radius, radius]`.
pub fn lipschitz_estimate(spec: &NonlinearitySpec, radius: f64, n_samples: usize) -> f64 {
    let n = n_samples.max(2);
    (0..n)
        .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
        .map(|u| spec.f_prime(u).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUILTINS: [&str; 4] = ["bbm", "linear", "quadratic", "quartic"];

    #[test]
    fn bbm_values() {
        let s = NonlinearitySpec::builtin("bbm").unwrap();
        assert_eq!(s.f(1.0), 1.5);
        assert!((s.f_anti(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.h_anti(1.0) - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.f_prime(2.0), 3.0);
    }

    #[test]
    fn quadratic_and_linear() {
        let q = NonlinearitySpec::builtin("quadratic").unwrap();
        assert_eq!(q.f(-2.0), 4.0);
        assert!((q.h_anti(1.5) - 2.0 * 1.5f64.powi(3) / 3.0).abs() < 1e-15);
        let l = NonlinearitySpec::builtin("linear").unwrap();
        assert_eq!(l.f_anti(3.0), 4.5);
        assert!(matches!(
            NonlinearitySpec::builtin("cubic"),
            Err(NonlinearityError::UnknownName(_))
        ));
    }

    #[test]
    fn antiderivatives_match_by_central_differences() {
        let eps = 1e-5;
        for name in BUILTINS {
            let s = NonlinearitySpec::builtin(name).unwrap();
            assert_eq!(s.f(0.0), 0.0);
            assert_eq!(s.f_anti(0.0), 0.0);
            assert_eq!(s.h_anti(0.0), 0.0);
            for i in 0..=60 {
                let u = -3.0 + 0.1 * i as f64;
                let df = (s.f_anti(u + eps) - s.f_anti(u - eps)) / (2.0 * eps);
                let dh = (s.h_anti(u + eps) - s.h_anti(u - eps)) / (2.0 * eps);
                assert!((df - s.f(u)).abs() < 1e-6, "{name} F' at {u}");
                assert!((dh - u * s.f_prime(u)).abs() < 1e-6, "{name} h' at {u}");
            }
        }
    }

    #[test]
    fn declared_sign_classes_match_samples() {
        for name in BUILTINS {
            let s = NonlinearitySpec::builtin(name).unwrap();
            assert_eq!(sampled_sign_class(&s, -10.0, 10.0, 2001), s.sign_class(), "{name}");
        }
    }

    #[test]
    fn hypotheses() {
        let q = NonlinearitySpec::builtin("quadratic").unwrap();
        let r = check_sign_hypotheses(&q, (-5.0, 5.0), 101);
        assert!(r.passes && !r.sign_change && r.extra_zeros.is_empty());

        let b = NonlinearitySpec::builtin("bbm").unwrap();
        let r = check_sign_hypotheses(&b, (-5.0, 5.0), 101);
        assert!(!r.passes && r.sign_change);
        assert!(r.extra_zeros.iter().any(|z| (z + 2.0).abs() < 0.06), "{:?}", r.extra_zeros);

        // grid that straddles -2 without hitting it
        let r = check_sign_hypotheses(&b, (-5.0, 5.0), 128);
        assert!(r.extra_zeros.iter().any(|z| (z + 2.0).abs() < 0.1));

        let l = NonlinearitySpec::builtin("linear").unwrap();
        let r = check_sign_hypotheses(&l, (-1.0, 1.0), 100);
        assert!(!r.passes && r.sign_change && r.extra_zeros.is_empty());
    }

    #[test]
    fn lipschitz() {
        let get = |n: &str| NonlinearitySpec::builtin(n).unwrap();
        assert_eq!(lipschitz_estimate(&get("linear"), 7.0, 100), 1.0);
        assert_eq!(lipschitz_estimate(&get("quadratic"), 2.0, 100), 4.0);
        assert_eq!(lipschitz_estimate(&get("bbm"), 1.0, 100), 2.0);
    }

    #[test]
    fn user_polynomials() {
        let s = NonlinearitySpec::polynomial(vec![0.0, 0.0, 3.0]).unwrap();
        assert_eq!(s.sign_class(), SignClass::NonNegative);
        let s = NonlinearitySpec::polynomial(vec![0.0, 0.0, -1.0]).unwrap();
        assert_eq!(s.sign_class(), SignClass::NonPositive);
        assert_eq!(
            NonlinearitySpec::polynomial(vec![1.0, 1.0]),
            Err(NonlinearityError::NonzeroConstant(1.0))
        );
        assert_eq!(
            NonlinearitySpec::polynomial(vec![0.0, 0.0]),
            Err(NonlinearityError::Vanishing)
        );
        assert_eq!(NonlinearitySpec::polynomial(vec![]), Err(NonlinearityError::Empty));
    }
}
