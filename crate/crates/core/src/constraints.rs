//! Comparability constraints between monomials and their linear form in log space.
//!
//! `X ≲ Y` becomes `log2 X - log2 Y <= c_lesssim`, `X ∼ Y` becomes two such inequalities
//! with `c_sim`, and `X ≪ Y` becomes `log2 X - log2 Y <= -gap_ll`. The exact relations
//! `<=` and `>=` carry no slack.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, Monomial};
use crate::rational::{ceil_i64, floor_i64, fmt_rational, int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("variable `{0}` is missing from the point")]
    MissingVariable(String),
    #[error("not eliminable here: bounds on `{var}` depend on unfixed `{other}`")]
    NotEliminable { var: String, other: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Lesssim,
    Gtrsim,
    Sim,
    Ll,
    Gg,
    Le,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lesssim => "<~",
            Relation::Gtrsim => ">~",
            Relation::Sim => "~",
            Relation::Ll => "<<",
            Relation::Gg => ">>",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Relation> {
        Some(match s {
            "<~" => Relation::Lesssim,
            ">~" => Relation::Gtrsim,
            "~" => Relation::Sim,
            "<<" => Relation::Ll,
            ">>" => Relation::Gg,
            "<=" => Relation::Le,
            ">=" => Relation::Ge,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub lhs: Monomial,
    pub rel: Relation,
    pub rhs: Monomial,
}

impl Constraint {
    pub fn new(lhs: Monomial, rel: Relation, rhs: Monomial) -> Self {
        Constraint { lhs, rel, rhs }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.lhs.variables().chain(self.rhs.variables()).map(str::to_string).collect()
    }

    pub fn substitute_params(&self, b: &BTreeMap<String, Rational>) -> Constraint {
        Constraint { lhs: self.lhs.substitute_params(b), rel: self.rel, rhs: self.rhs.substitute_params(b) }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

/// Slack constants used when linearizing the asymptotic relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlackConfig {
    pub c_lesssim: u32,
    pub c_sim: u32,
    pub gap_ll: u32,
}

impl Default for SlackConfig {
    fn default() -> Self {
        SlackConfig { c_lesssim: 2, c_sim: 1, gap_ll: 3 }
    }
}

impl SlackConfig {
    pub fn doubled(self) -> SlackConfig {
        SlackConfig { c_lesssim: 2 * self.c_lesssim, c_sim: 2 * self.c_sim, gap_ll: 2 * self.gap_ll }
    }
}

/// `sum coeffs[v] * k_v <= bound`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearIneq {
    pub coeffs: BTreeMap<String, Rational>,
    pub bound: Rational,
}

impl LinearIneq {
    pub fn new(coeffs: BTreeMap<String, Rational>, bound: Rational) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        LinearIneq { coeffs, bound }
    }

    /// `lhs - rhs <= bound` where both sides are log forms of monomials.
    fn from_difference(lhs: &Monomial, rhs: &Monomial, bound: Rational) -> Result<Self, ExprError> {
        let (cl, ml) = lhs.log_form()?;
        let (cr, mr) = rhs.log_form()?;
        let mut coeffs = ml;
        for (v, c) in mr {
            *coeffs.entry(v).or_insert_with(Rational::zero) -= c;
        }
        Ok(LinearIneq::new(coeffs, bound - (cl - cr)))
    }

    pub fn negated_coeffs(&self) -> BTreeMap<String, Rational> {
        self.coeffs.iter().map(|(k, v)| (k.clone(), -*v)).collect()
    }

    pub fn lhs_at(&self, point: &BTreeMap<String, i64>) -> Result<Rational, RegionError> {
        let mut acc = Rational::zero();
        for (v, c) in &self.coeffs {
            let k = point.get(v).ok_or_else(|| RegionError::MissingVariable(v.clone()))?;
            acc += *c * int(*k);
        }
        Ok(acc)
    }

    pub fn holds_at(&self, point: &BTreeMap<String, i64>) -> Result<bool, RegionError> {
        Ok(self.lhs_at(point)? <= self.bound)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(String::as_str)
    }
}

impl fmt::Display for LinearIneq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            f.write_str("0")?;
        }
        let mut first = true;
        for (v, c) in &self.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            match (first, neg) {
                (true, true) => f.write_str("-")?,
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
                (true, false) => {}
            }
            if mag != int(1) {
                write!(f, "{}*", fmt_rational(&mag))?;
            }
            write!(f, "k_{v}")?;
            first = false;
        }
        write!(f, " <= {}", fmt_rational(&self.bound))
    }
}

/// A conjunction of linear inequalities over integer `k` values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LogRegion {
    pub ineqs: Vec<LinearIneq>,
}

/// A closed integer interval with optional infinite ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl Interval {
    pub const ALL: Interval = Interval { lo: None, hi: None };

    pub fn is_empty(&self) -> bool {
        matches!((self.lo, self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo.is_none_or(|l| l <= k) && self.hi.is_none_or(|h| k <= h)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            Some(l) => write!(f, "[{l}, ")?,
            None => f.write_str("(-inf, ")?,
        }
        match self.hi {
            Some(h) => write!(f, "{h}]"),
            None => f.write_str("+inf)"),
        }
    }
}

impl LogRegion {
    pub fn new(ineqs: Vec<LinearIneq>) -> Self {
        LogRegion { ineqs }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.ineqs.iter().flat_map(|i| i.variables().map(str::to_string)).collect()
    }

    pub fn extend(&mut self, more: impl IntoIterator<Item = LinearIneq>) {
        self.ineqs.extend(more);
    }

    /// Whether the point satisfies every inequality.
    pub fn contains(&self, point: &BTreeMap<String, i64>) -> Result<bool, RegionError> {
        for ineq in &self.ineqs {
            if !ineq.holds_at(point)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Integer bounds on `v` given values for every other variable its inequalities mention.
    pub fn bounds_for(&self, v: &str, fixed: &BTreeMap<String, i64>) -> Result<Interval, RegionError> {
        for ineq in self.ineqs.iter().filter(|i| i.coeffs.contains_key(v)) {
            if let Some(other) = ineq.variables().find(|u| *u != v && !fixed.contains_key(*u)) {
                return Err(RegionError::NotEliminable { var: v.to_string(), other: other.to_string() });
            }
        }
        Ok(self.bounds_for_partial(v, fixed))
    }

    /// Like [`LogRegion::bounds_for`], but inequalities that mention unfixed variables are skipped.
    pub fn bounds_for_partial(&self, v: &str, fixed: &BTreeMap<String, i64>) -> Interval {
        let mut out = Interval::ALL;
        'ineqs: for ineq in &self.ineqs {
            let Some(a) = ineq.coeffs.get(v) else { continue };
            let mut rest = ineq.bound;
            for (u, c) in &ineq.coeffs {
                if u == v {
                    continue;
                }
                match fixed.get(u) {
                    Some(k) => rest -= *c * int(*k),
                    None => continue 'ineqs,
                }
            }
            let q = rest / *a;
            if a.is_positive() {
                let h = floor_i64(&q);
                out.hi = Some(out.hi.map_or(h, |c| c.min(h)));
            } else {
                let l = ceil_i64(&q);
                out.lo = Some(out.lo.map_or(l, |c| c.max(l)));
            }
        }
        out
    }
}

impl fmt::Display for LogRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ineq) in self.ineqs.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{ineq}")?;
        }
        Ok(())
    }
}

/// Translates constraints into linear inequalities over `k` values.
pub fn linearize(constraints: &[Constraint], slack: &SlackConfig) -> Result<LogRegion, ExprError> {
    let mut out = Vec::new();
    for c in constraints {
        linearize_one(c, slack, &mut out)?;
    }
    Ok(LogRegion::new(out))
}

fn linearize_one(c: &Constraint, slack: &SlackConfig, out: &mut Vec<LinearIneq>) -> Result<(), ExprError> {
    let (l, r) = (&c.lhs, &c.rhs);
    let ls = int(slack.c_lesssim as i64);
    let sim = int(slack.c_sim as i64);
    let gap = int(slack.gap_ll as i64);
    match c.rel {
        Relation::Lesssim => out.push(LinearIneq::from_difference(l, r, ls)?),
        Relation::Gtrsim => out.push(LinearIneq::from_difference(r, l, ls)?),
        Relation::Sim => {
            out.push(LinearIneq::from_difference(l, r, sim)?);
            out.push(LinearIneq::from_difference(r, l, sim)?);
        }
        Relation::Ll => out.push(LinearIneq::from_difference(l, r, -gap)?),
        Relation::Gg => out.push(LinearIneq::from_difference(r, l, -gap)?),
        Relation::Le => out.push(LinearIneq::from_difference(l, r, Rational::zero())?),
        Relation::Ge => out.push(LinearIneq::from_difference(r, l, Rational::zero())?),
    }
    Ok(())
}
