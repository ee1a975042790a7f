//! Summands built from dyadic variables: monomials, Japanese brackets, minima and maxima.
//!
//! A dyadic variable `X` ranges over `2^k` for integer `k`, so every quantity here is
//! handled through its base-2 logarithm. Exponents are exact and may still mention
//! symbolic parameters such as `s` or `theta` until [`Summand::substitute_params`] binds them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{fmt_rational, int, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("variable `{0}` has no value in the assignment")]
    MissingVariable(String),
    #[error("exponent `{exponent}` still depends on unbound symbol `{symbol}`")]
    UnboundSymbol { exponent: String, symbol: String },
    #[error("{kind} needs at least {min} arguments, got {got}")]
    TooFewArguments { kind: &'static str, min: usize, got: usize },
    #[error("{kind} has a repeated argument `{arg}`")]
    RepeatedArgument { kind: &'static str, arg: String },
}

/// How a variable participates in a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRole {
    Summation,
    Parameter,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicVar {
    pub name: String,
    pub role: VarRole,
}

impl DyadicVar {
    pub fn new(name: impl Into<String>, role: VarRole) -> Self {
        DyadicVar { name: name.into(), role }
    }
}

/// An affine combination of symbols with a rational constant, such as `-2*s+2*theta-5/2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Exponent {
    pub constant: Rational,
    pub symbols: BTreeMap<String, Rational>,
}

impl Exponent {
    pub fn zero() -> Self {
        Exponent::default()
    }

    pub fn constant(r: Rational) -> Self {
        Exponent { constant: r, symbols: BTreeMap::new() }
    }

    pub fn int(n: i64) -> Self {
        Exponent::constant(int(n))
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        let mut symbols = BTreeMap::new();
        symbols.insert(name.into(), Rational::one());
        Exponent { constant: Rational::zero(), symbols }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.symbols.is_empty()
    }

    /// The value when no symbol remains.
    pub fn as_rational(&self) -> Option<Rational> {
        self.symbols.is_empty().then_some(self.constant)
    }

    /// The value, or an error naming the first unbound symbol.
    pub fn require(&self) -> Result<Rational, ExprError> {
        match self.symbols.keys().next() {
            None => Ok(self.constant),
            Some(sym) => Err(ExprError::UnboundSymbol { exponent: self.to_string(), symbol: sym.clone() }),
        }
    }

    /// Replaces every bound symbol by its value; unbound symbols stay symbolic.
    pub fn substitute(&self, bindings: &BTreeMap<String, Rational>) -> Exponent {
        let mut out = Exponent::constant(self.constant);
        for (sym, c) in &self.symbols {
            match bindings.get(sym) {
                Some(v) => out.constant += *c * *v,
                None => out.add_symbol(sym, *c),
            }
        }
        out
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.symbols.keys().map(String::as_str)
    }

    fn add_symbol(&mut self, sym: &str, c: Rational) {
        let entry = self.symbols.entry(sym.to_string()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.symbols.remove(sym);
        }
    }

    pub fn scale(&self, r: Rational) -> Exponent {
        if r.is_zero() {
            return Exponent::zero();
        }
        Exponent {
            constant: self.constant * r,
            symbols: self.symbols.iter().map(|(k, v)| (k.clone(), *v * r)).collect(),
        }
    }

    /// Product of two exponents, defined when at least one side is constant.
    pub fn checked_mul(&self, other: &Exponent) -> Option<Exponent> {
        match (self.as_rational(), other.as_rational()) {
            (Some(a), _) => Some(other.scale(a)),
            (_, Some(b)) => Some(self.scale(b)),
            _ => None,
        }
    }
}

impl From<i64> for Exponent {
    fn from(n: i64) -> Self {
        Exponent::int(n)
    }
}

impl From<Rational> for Exponent {
    fn from(r: Rational) -> Self {
        Exponent::constant(r)
    }
}

impl Add for &Exponent {
    type Output = Exponent;
    fn add(self, rhs: &Exponent) -> Exponent {
        let mut out = self.clone();
        out.constant += rhs.constant;
        for (s, c) in &rhs.symbols {
            out.add_symbol(s, *c);
        }
        out
    }
}

impl Sub for &Exponent {
    type Output = Exponent;
    fn sub(self, rhs: &Exponent) -> Exponent {
        self + &(-rhs)
    }
}

impl Neg for &Exponent {
    type Output = Exponent;
    fn neg(self) -> Exponent {
        self.scale(-Rational::one())
    }
}

impl Mul<Rational> for &Exponent {
    type Output = Exponent;
    fn mul(self, rhs: Rational) -> Exponent {
        self.scale(rhs)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            return f.write_str(&fmt_rational(&self.constant));
        }
        let mut first = true;
        if !self.constant.is_zero() {
            f.write_str(&fmt_rational(&self.constant))?;
            first = false;
        }
        for (sym, c) in &self.symbols {
            let neg = c.is_negative();
            let mag = c.abs();
            if neg {
                f.write_str("-")?;
            } else if !first {
                f.write_str("+")?;
            }
            if !mag.is_one() {
                write!(f, "{}*", fmt_rational(&mag))?;
            }
            f.write_str(sym)?;
            first = false;
        }
        Ok(())
    }
}

/// `2^coeff * prod X^p` over dyadic variables. Zero exponents are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    pub coeff: Exponent,
    pub powers: BTreeMap<String, Exponent>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut powers = BTreeMap::new();
        powers.insert(name.into(), Exponent::int(1));
        Monomial { coeff: Exponent::zero(), powers }
    }

    /// `2^e`.
    pub fn two_pow(e: impl Into<Exponent>) -> Self {
        Monomial { coeff: e.into(), powers: BTreeMap::new() }
    }

    /// `X^p` for a single variable.
    pub fn power(name: impl Into<String>, p: impl Into<Exponent>) -> Self {
        Monomial::var(name).pow(&p.into())
    }

    pub fn is_one(&self) -> bool {
        self.coeff.is_zero() && self.powers.is_empty()
    }

    /// Raises to a power. Symbolic times symbolic is not affine, so one side must be constant.
    pub fn pow(&self, p: &Exponent) -> Monomial {
        let mul = |e: &Exponent| {
            e.checked_mul(p).expect("product of two symbolic exponents is not affine")
        };
        let mut out = Monomial { coeff: mul(&self.coeff), powers: BTreeMap::new() };
        for (v, e) in &self.powers {
            let q = mul(e);
            if !q.is_zero() {
                out.powers.insert(v.clone(), q);
            }
        }
        out
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        out.coeff = &out.coeff + &other.coeff;
        for (v, e) in &other.powers {
            let sum = match out.powers.get(v) {
                Some(cur) => cur + e,
                None => e.clone(),
            };
            if sum.is_zero() {
                out.powers.remove(v);
            } else {
                out.powers.insert(v.clone(), sum);
            }
        }
        out
    }

    pub fn inv(&self) -> Monomial {
        self.pow(&Exponent::int(-1))
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        self.mul(&other.inv())
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.powers.keys().map(String::as_str)
    }

    pub fn substitute_params(&self, bindings: &BTreeMap<String, Rational>) -> Monomial {
        let mut out = Monomial { coeff: self.coeff.substitute(bindings), powers: BTreeMap::new() };
        for (v, e) in &self.powers {
            let q = e.substitute(bindings);
            if !q.is_zero() {
                out.powers.insert(v.clone(), q);
            }
        }
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        out.extend(self.coeff.symbols().map(str::to_string));
        for e in self.powers.values() {
            out.extend(e.symbols().map(str::to_string));
        }
    }

    /// Exact base-2 logarithm as `(constant, coefficient per variable)`.
    pub fn log_form(&self) -> Result<(Rational, BTreeMap<String, Rational>), ExprError> {
        let c = self.coeff.require()?;
        let mut map = BTreeMap::new();
        for (v, e) in &self.powers {
            map.insert(v.clone(), e.require()?);
        }
        Ok((c, map))
    }

    /// Base-2 logarithm at an assignment of `k` values.
    pub fn log2_at(&self, assignment: &BTreeMap<String, i64>) -> Result<f64, ExprError> {
        let mut acc = to_f64(&self.coeff.require()?);
        for (v, e) in &self.powers {
            let k = assignment.get(v).ok_or_else(|| ExprError::MissingVariable(v.clone()))?;
            acc += to_f64(&e.require()?) * (*k as f64);
        }
        Ok(acc)
    }
}

fn fmt_power(f: &mut fmt::Formatter<'_>, e: &Exponent) -> fmt::Result {
    match e.as_rational() {
        Some(r) if r.is_one() => Ok(()),
        Some(r) if r.is_integer() && r.is_positive() => write!(f, "^{}", r.numer()),
        _ => write!(f, "^({e})"),
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.coeff.is_zero() {
            f.write_str("2")?;
            fmt_power(f, &self.coeff)?;
            first = false;
        }
        for (v, e) in &self.powers {
            if !first {
                f.write_str("*")?;
            }
            f.write_str(v)?;
            fmt_power(f, e)?;
            first = false;
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// One multiplicative piece of a summand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Factor {
    Mono(Monomial),
    /// `<X>^p = (1 + X^2)^(p/2)`.
    Bracket { arg: Monomial, power: Exponent },
    Min { args: Vec<Monomial>, power: Exponent },
    Max { args: Vec<Monomial>, power: Exponent },
}

impl Factor {
    pub fn bracket(arg: Monomial, power: impl Into<Exponent>) -> Factor {
        Factor::Bracket { arg, power: power.into() }
    }

    pub fn min(args: Vec<Monomial>, power: impl Into<Exponent>) -> Result<Factor, ExprError> {
        check_args("min", &args)?;
        Ok(Factor::Min { args, power: power.into() })
    }

    pub fn max(args: Vec<Monomial>, power: impl Into<Exponent>) -> Result<Factor, ExprError> {
        check_args("max", &args)?;
        Ok(Factor::Max { args, power: power.into() })
    }

    pub fn is_mono(&self) -> bool {
        matches!(self, Factor::Mono(_))
    }

    /// All monomials appearing inside the factor.
    pub fn monomials(&self) -> Vec<&Monomial> {
        match self {
            Factor::Mono(m) => vec![m],
            Factor::Bracket { arg, .. } => vec![arg],
            Factor::Min { args, .. } | Factor::Max { args, .. } => args.iter().collect(),
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.monomials().into_iter().flat_map(|m| m.variables().map(str::to_string)).collect()
    }

    pub fn substitute_params(&self, b: &BTreeMap<String, Rational>) -> Factor {
        match self {
            Factor::Mono(m) => Factor::Mono(m.substitute_params(b)),
            Factor::Bracket { arg, power } => {
                Factor::Bracket { arg: arg.substitute_params(b), power: power.substitute(b) }
            }
            Factor::Min { args, power } => Factor::Min {
                args: args.iter().map(|m| m.substitute_params(b)).collect(),
                power: power.substitute(b),
            },
            Factor::Max { args, power } => Factor::Max {
                args: args.iter().map(|m| m.substitute_params(b)).collect(),
                power: power.substitute(b),
            },
        }
    }

    /// Base-2 logarithm of the factor at an assignment.
    pub fn log2_at(&self, assignment: &BTreeMap<String, i64>) -> Result<f64, ExprError> {
        match self {
            Factor::Mono(m) => m.log2_at(assignment),
            Factor::Bracket { arg, power } => {
                Ok(bracket_log2(arg.log2_at(assignment)?, to_f64(&power.require()?)))
            }
            Factor::Min { args, power } => {
                let mut best = f64::INFINITY;
                for a in args {
                    best = best.min(a.log2_at(assignment)?);
                }
                Ok(to_f64(&power.require()?) * best)
            }
            Factor::Max { args, power } => {
                let mut best = f64::NEG_INFINITY;
                for a in args {
                    best = best.max(a.log2_at(assignment)?);
                }
                Ok(to_f64(&power.require()?) * best)
            }
        }
    }
}

fn check_args(kind: &'static str, args: &[Monomial]) -> Result<(), ExprError> {
    if args.len() < 2 {
        return Err(ExprError::TooFewArguments { kind, min: 2, got: args.len() });
    }
    for (i, a) in args.iter().enumerate() {
        if args[..i].contains(a) {
            return Err(ExprError::RepeatedArgument { kind, arg: a.to_string() });
        }
    }
    Ok(())
}

/// `log2((1 + 2^(2x))^(p/2))`, stable for large `|x|`.
pub(crate) fn bracket_log2(x: f64, p: f64) -> f64 {
    let y = 2.0 * x;
    let l = if y > 0.0 {
        y + (-y).exp2().ln_1p() / std::f64::consts::LN_2
    } else {
        y.exp2().ln_1p() / std::f64::consts::LN_2
    };
    0.5 * p * l
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, args: &[Monomial]| -> fmt::Result {
            write!(f, "{name}{{")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str("}")
        };
        match self {
            Factor::Mono(m) => {
                if m.powers.len() + usize::from(!m.coeff.is_zero()) > 1 {
                    write!(f, "({m})")
                } else {
                    write!(f, "{m}")
                }
            }
            Factor::Bracket { arg, power } => {
                write!(f, "<{arg}>")?;
                fmt_power(f, power)
            }
            Factor::Min { args, power } => {
                list(f, "min", args)?;
                fmt_power(f, power)
            }
            Factor::Max { args, power } => {
                list(f, "max", args)?;
                fmt_power(f, power)
            }
        }
    }
}

/// A product of factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Summand {
    pub factors: Vec<Factor>,
}

impl Summand {
    pub fn new(factors: Vec<Factor>) -> Self {
        Summand { factors }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.factors.iter().flat_map(Factor::variables).collect()
    }

    /// Symbols that still appear in some exponent.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.factors {
            for m in f.monomials() {
                m.collect_symbols(&mut out);
            }
            match f {
                Factor::Mono(_) => {}
                Factor::Bracket { power, .. } | Factor::Min { power, .. } | Factor::Max { power, .. } => {
                    out.extend(power.symbols().map(str::to_string))
                }
            }
        }
        out
    }

    pub fn substitute_params(&self, bindings: &BTreeMap<String, Rational>) -> Summand {
        Summand { factors: self.factors.iter().map(|f| f.substitute_params(bindings)).collect() }
    }

    pub fn log2_at(&self, assignment: &BTreeMap<String, i64>) -> Result<f64, ExprError> {
        let mut total = 0.0;
        for f in &self.factors {
            total += f.log2_at(assignment)?;
        }
        Ok(total)
    }

    /// The value `2^(log2)` at an assignment. Always positive and finite for bounded `k`.
    pub fn eval(&self, assignment: &BTreeMap<String, i64>) -> Result<f64, ExprError> {
        Ok(self.log2_at(assignment)?.exp2())
    }
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        for (i, fac) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            write!(f, "{fac}")?;
        }
        Ok(())
    }
}

/// Evaluates a summand at an assignment of `k` values.
pub fn eval_summand(s: &Summand, assignment: &BTreeMap<String, i64>) -> Result<f64, ExprError> {
    s.eval(assignment)
}

/// Evaluates a monomial at an assignment of `k` values.
pub fn eval_mono(m: &Monomial, assignment: &BTreeMap<String, i64>) -> Result<f64, ExprError> {
    Ok(m.log2_at(assignment)?.exp2())
}

/// Binds symbolic exponents.
pub fn substitute_params(s: &Summand, bindings: &BTreeMap<String, Rational>) -> Summand {
    s.substitute_params(bindings)
}
