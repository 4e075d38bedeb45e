//! Exact verification of conservation laws for `u_t - u_txx + (f(u))_x = 0`
//! with `f` kept as a formal symbol.
//!
//! A multiplier `Q` is a characteristic when `Q·Δ` is a total divergence,
//! which is decided by the Euler operator vanishing identically.

mod parse;
mod poly;

pub use parse::{parse, parse_expr, Expr, ParseError, ParseErrorKind};
pub use poly::{Atom, DiffPoly, Direction, FuncBase, FuncSym, JetVar, Monomial};

use serde::Serialize;
use thiserror::Error;

/// Highest jet order accepted for a multiplier.
pub const MAX_Q_ORDER: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("multiplier has jet order {0}, at most {MAX_Q_ORDER} is supported")]
    OrderTooHigh(u32),
}

/// `D_t C0 + D_x C1`.
pub fn divergence(c0: &DiffPoly, c1: &DiffPoly) -> DiffPoly {
    c0.total_d(Direction::T) + c1.total_d(Direction::X)
}

/// `Δ = u_t - u_txx + f'(u) u_x`.
pub fn delta() -> DiffPoly {
    DiffPoly::jet(JetVar::new(1, 0)) - DiffPoly::jet(JetVar::new(1, 2))
        + DiffPoly::func(FuncSym::f(1)) * DiffPoly::jet(JetVar::new(0, 1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verification {
    ExactZero,
    Residual(DiffPoly),
}

impl Verification {
    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Verification::ExactZero)
    }
}

/// Computes `E_u(Q·Δ)`.
pub fn verify_characteristic(q: &DiffPoly) -> Result<Verification, SymbolicError> {
    let order = q.jet_order();
    if order > MAX_Q_ORDER {
        return Err(SymbolicError::OrderTooHigh(order));
    }
    let r = (q * &delta()).euler_op();
    Ok(if r.is_zero() {
        Verification::ExactZero
    } else {
        Verification::Residual(r)
    })
}

/// A conserved current with its multiplier: `D_t density + D_x flux = Q·Δ`.
#[derive(Debug, Clone)]
pub struct Current {
    pub name: &'static str,
    pub density: DiffPoly,
    pub flux: DiffPoly,
    pub characteristic: DiffPoly,
}

impl Current {
    /// `divergence(density, flux) - Q·Δ`; zero when the identity holds.
    pub fn defect(&self) -> DiffPoly {
        divergence(&self.density, &self.flux) - &self.characteristic * &delta()
    }
}

fn p(text: &str) -> DiffPoly {
    parse(text).expect("built-in expression parses")
}

/// Mass, energy and potential currents.
pub fn standard_currents() -> Vec<Current> {
    vec![
        Current {
            name: "mass",
            density: p("u"),
            flux: p("-u_tx + f(u)"),
            characteristic: p("1"),
        },
        Current {
            name: "energy",
            density: p("(u^2 + u_x^2)/2"),
            flux: p("-u*u_tx + h(u)"),
            characteristic: p("u"),
        },
        Current {
            name: "potential",
            density: p("F(u)"),
            flux: p("(u_tx^2 - u_t^2)/2 - f(u)*u_tx + f(u)^2/2"),
            characteristic: p("f(u) - u_tx"),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub query: String,
    pub result: &'static str,
    pub residual_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn sign_note(q: &DiffPoly) -> Option<String> {
    if *q == p("f(u) + u_tx") {
        Some("the plus sign on u_tx does not give a characteristic; f(u) - u_tx does".into())
    } else if *q == p("f(u) - u_tx") {
        Some("the minus sign on u_tx is the one that gives a characteristic".into())
    } else {
        None
    }
}

/// Parses `query` as a multiplier and reports whether it is a characteristic.
pub fn verify_query(query: &str) -> Result<VerificationReport, SymbolicError> {
    let q = parse(query)?;
    let v = verify_characteristic(&q)?;
    let (result, residual_text) = match &v {
        Verification::ExactZero => ("exact-zero", "0".to_string()),
        Verification::Residual(r) => ("residual", r.to_string()),
    };
    Ok(VerificationReport {
        query: query.to_string(),
        result,
        residual_text,
        note: sign_note(&q),
    })
}

/// Divergence check of each standard current, reported in the same shape.
pub fn current_reports() -> Vec<VerificationReport> {
    let mut out: Vec<VerificationReport> = standard_currents()
        .iter()
        .map(|c| {
            let d = c.defect();
            VerificationReport {
                query: format!("div({}, {}) - ({})*Δ", c.density, c.flux, c.characteristic),
                result: if d.is_zero() { "exact-zero" } else { "residual" },
                residual_text: d.to_string(),
                note: None,
            }
        })
        .collect();
    // the mass flux with the opposite sign on f(u)
    let d = divergence(&p("u"), &p("-u_tx - f(u)")) - delta();
    out.push(VerificationReport {
        query: "div(u, -u_tx - f(u)) - Δ".into(),
        result: if d.is_zero() { "exact-zero" } else { "residual" },
        residual_text: d.to_string(),
        note: Some("a minus sign on f(u) in the mass flux leaves a residual".into()),
    });
    out
}
