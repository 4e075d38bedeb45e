use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The jet coordinate `∂_t^a ∂_x^b u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub t_order: u32,
    pub x_order: u32,
}

impl JetVar {
    pub const U: JetVar = JetVar::new(0, 0);

    pub const fn new(t_order: u32, x_order: u32) -> Self {
        Self { t_order, x_order }
    }

    pub fn order(&self) -> u32 {
        self.t_order + self.x_order
    }

    pub fn shifted(&self, dir: Direction) -> Self {
        match dir {
            Direction::T => Self::new(self.t_order + 1, self.x_order),
            Direction::X => Self::new(self.t_order, self.x_order + 1),
        }
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("u")?;
        if self.order() > 0 {
            f.write_str("_")?;
            for _ in 0..self.t_order {
                f.write_str("t")?;
            }
            for _ in 0..self.x_order {
                f.write_str("x")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    T,
    X,
}

/// Formal function of `u`: the nonlinearity `f`, its antiderivative `F`
/// (`F' = f`) and `h` (`h' = u f'`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FuncBase {
    /// `f`
    Nonlinearity,
    /// `F`
    Antiderivative,
    /// `h`
    H,
}

/// `base^{(deriv_order)}(u)`. Only `f` carries derivatives; `F'` and `h'`
/// are rewritten through their defining relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncSym {
    base: FuncBase,
    deriv_order: u32,
}

impl FuncSym {
    pub fn f(deriv_order: u32) -> Self {
        Self {
            base: FuncBase::Nonlinearity,
            deriv_order,
        }
    }

    pub fn anti() -> Self {
        Self {
            base: FuncBase::Antiderivative,
            deriv_order: 0,
        }
    }

    pub fn h() -> Self {
        Self {
            base: FuncBase::H,
            deriv_order: 0,
        }
    }

    pub fn base(&self) -> FuncBase {
        self.base
    }

    pub fn deriv_order(&self) -> u32 {
        self.deriv_order
    }

    /// `d/du` of this symbol.
    pub fn du(&self) -> DiffPoly {
        match self.base {
            FuncBase::Nonlinearity => DiffPoly::func(FuncSym::f(self.deriv_order + 1)),
            FuncBase::Antiderivative => DiffPoly::func(FuncSym::f(0)),
            FuncBase::H => DiffPoly::jet(JetVar::U) * DiffPoly::func(FuncSym::f(1)),
        }
    }
}

impl fmt::Display for FuncSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.base {
            FuncBase::Nonlinearity => "f",
            FuncBase::Antiderivative => "F",
            FuncBase::H => "h",
        };
        f.write_str(name)?;
        for _ in 0..self.deriv_order {
            f.write_str("'")?;
        }
        f.write_str("(u)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Jet(JetVar),
    Func(FuncSym),
}

impl Atom {
    fn depends_on(&self, var: JetVar) -> bool {
        match self {
            Atom::Jet(v) => *v == var,
            Atom::Func(_) => var == JetVar::U,
        }
    }

    fn d(&self, var: JetVar) -> DiffPoly {
        match self {
            Atom::Jet(v) if *v == var => DiffPoly::one(),
            Atom::Jet(_) => DiffPoly::zero(),
            Atom::Func(s) if var == JetVar::U => s.du(),
            Atom::Func(_) => DiffPoly::zero(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Jet(v) => v.fmt(f),
            Atom::Func(s) => s.fmt(f),
        }
    }
}

/// Product of atom powers; the empty product is 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<Atom, u32>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn atom(a: Atom) -> Self {
        Self(BTreeMap::from([(a, 1)]))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Atom, &u32)> {
        self.0.iter()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (a, p) in &other.0 {
            *out.entry(*a).or_insert(0) += p;
        }
        Monomial(out)
    }

    fn without_one(&self, a: &Atom) -> Monomial {
        let mut out = self.0.clone();
        match out.get_mut(a) {
            Some(p) if *p > 1 => *p -= 1,
            Some(_) => {
                out.remove(a);
            }
            None => {}
        }
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (a, p)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{a}")?;
            if *p > 1 {
                write!(f, "^{p}")?;
            }
        }
        Ok(())
    }
}

/// Differential polynomial with exact rational coefficients, kept in normal
/// form: like terms merged, zero coefficients dropped. Structural equality
/// is therefore polynomial identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DiffPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Self::constant(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn term(c: BigRational, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn jet(v: JetVar) -> Self {
        Self::term(BigRational::one(), Monomial::atom(Atom::Jet(v)))
    }

    pub fn func(s: FuncSym) -> Self {
        Self::term(BigRational::one(), Monomial::atom(Atom::Func(s)))
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// The constant term's value if the polynomial is a constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    pub fn scale(&self, c: &BigRational) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> DiffPoly {
        (0..e).fold(DiffPoly::one(), |acc, _| &acc * self)
    }

    /// Jet variables appearing explicitly, plus `u` if any function symbol
    /// appears.
    pub fn variables(&self) -> Vec<JetVar> {
        let mut vars = std::collections::BTreeSet::new();
        for m in self.terms.keys() {
            for a in m.0.keys() {
                match a {
                    Atom::Jet(v) => {
                        vars.insert(*v);
                    }
                    Atom::Func(_) => {
                        vars.insert(JetVar::U);
                    }
                }
            }
        }
        vars.into_iter().collect()
    }

    /// Highest derivative order among the jet variables (0 for polynomials
    /// in `u` and function symbols only).
    pub fn jet_order(&self) -> u32 {
        self.variables().iter().map(JetVar::order).max().unwrap_or(0)
    }

    /// `∂P/∂u_J`, with the chain rule through the function symbols when
    /// `var` is `u`.
    pub fn partial(&self, var: JetVar) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            for (a, p) in &m.0 {
                if !a.depends_on(var) {
                    continue;
                }
                let rest = DiffPoly::term(c * BigRational::from_integer(BigInt::from(*p)), m.without_one(a));
                out = out + &rest * &a.d(var);
            }
        }
        out
    }

    /// Total derivative `D_t` or `D_x`: `Σ_J u_{J+dir} ∂P/∂u_J`.
    pub fn total_d(&self, dir: Direction) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for v in self.variables() {
            out = out + &DiffPoly::jet(v.shifted(dir)) * &self.partial(v);
        }
        out
    }

    pub fn total_d_n(&self, t_times: u32, x_times: u32) -> DiffPoly {
        let mut p = self.clone();
        for _ in 0..t_times {
            p = p.total_d(Direction::T);
        }
        for _ in 0..x_times {
            p = p.total_d(Direction::X);
        }
        p
    }

    /// Euler-Lagrange operator `E_u(P) = Σ_J (-1)^{|J|} D_J ∂P/∂u_J`.
    pub fn euler_op(&self) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for v in self.variables() {
            let term = self.partial(v).total_d_n(v.t_order, v.x_order);
            out = if v.order() % 2 == 0 { out + term } else { out - term };
        }
        out
    }
}

impl Add for DiffPoly {
    type Output = DiffPoly;
    fn add(mut self, rhs: DiffPoly) -> DiffPoly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: DiffPoly) -> DiffPoly {
        self + (-rhs)
    }
}

impl Neg for DiffPoly {
    type Output = DiffPoly;
    fn neg(mut self) -> DiffPoly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Mul<&DiffPoly> for &DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: DiffPoly) -> DiffPoly {
        &self * &rhs
    }
}

fn fmt_rational(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Canonical text form; parses back to the same polynomial.
impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            match (i, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                f.write_str(&fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&mag))?;
            }
        }
        Ok(())
    }
}
