//! Symbolic reduction: splitting brackets and extrema into monomial branches, then
//! eliminating summation variables one at a time by geometric-sum rules.
//!
//! A geometric sum of `2^(c k)` over an integer range is comparable to its largest term,
//! so each elimination substitutes the dominant endpoint. When `c = 0` the sum counts
//! lattice points and the range length is kept as a linear "extent" factor; extents that
//! still depend on the parameter at the end become powers of `log N`.

mod elim;
pub(crate) mod lin;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::constraints::{LinearIneq, LogRegion};
use crate::expr::{ExprError, Factor, Monomial, Summand};
use crate::problem::Problem;
use crate::rational::{floor_i64, fmt_rational, int, lcm_denominators, Rational};

pub use elim::{eliminate_var, symbolic_growth, Reduction, StepOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("not eliminable: {0}")]
    NotEliminable(String),
    #[error("variable `{0}` is not part of the reduction")]
    UnknownVariable(String),
}

/// Which alternative of which factor a branch took.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplitDecision {
    pub factor: usize,
    pub choice: String,
}

impl fmt::Display for SplitDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}:{}", self.factor, self.choice)
    }
}

/// A pure-monomial summand valid on the part of the lattice cut out by `extra`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub summand: Summand,
    pub extra: Vec<LinearIneq>,
    pub provenance: Vec<SplitDecision>,
}

impl Branch {
    pub fn monomial(&self) -> Monomial {
        self.summand.factors.iter().fold(Monomial::one(), |acc, f| match f {
            Factor::Mono(m) => acc.mul(m),
            _ => unreachable!("branch summands hold monomials only"),
        })
    }

    pub fn region(&self) -> LogRegion {
        LogRegion::new(self.extra.clone())
    }
}

/// Exponent and log power of the dominant growth `N^exponent (log N)^log_degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicGrowth {
    pub exponent: Rational,
    pub log_degree: u32,
}

impl fmt::Display for SymbolicGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N^({})", fmt_rational(&self.exponent))?;
        if self.log_degree > 0 {
            write!(f, " (log N)^{}", self.log_degree)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolicOutcome {
    Growth(SymbolicGrowth),
    /// Every branch is confined to bounded parameter values, or no branch is feasible.
    Vanishing { empty: bool },
    /// Some summation variable has an infinite sum at a fixed parameter value.
    Divergent { variable: String, provenance: Vec<SplitDecision> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicReport {
    pub outcome: SymbolicOutcome,
    pub branches: usize,
    pub feasible_branches: usize,
    pub final_terms: usize,
}

/// `lhs <= rhs` over log forms, as a named inequality.
fn le_forms(l: &(Rational, BTreeMap<String, Rational>), r: &(Rational, BTreeMap<String, Rational>)) -> LinearIneq {
    let mut coeffs = l.1.clone();
    for (v, c) in &r.1 {
        *coeffs.entry(v.clone()).or_insert_with(Rational::zero) -= c;
    }
    LinearIneq::new(coeffs, r.0 - l.0)
}

/// The lattice complement of `sum a k <= b`, i.e. `sum a k >= b + 1/D` where `D` clears denominators.
pub fn complement(q: &LinearIneq) -> LinearIneq {
    let d = lcm_denominators(q.coeffs.values());
    let scaled = floor_i64(&(q.bound * int(d))) + 1;
    LinearIneq::new(q.negated_coeffs().into_iter().map(|(k, v)| (k, v * int(d))).collect(), -int(scaled))
}

/// `lhs < rhs` on the lattice.
fn lt_forms(l: &(Rational, BTreeMap<String, Rational>), r: &(Rational, BTreeMap<String, Rational>)) -> LinearIneq {
    complement(&le_forms(r, l))
}

fn constant_false(q: &LinearIneq) -> bool {
    q.coeffs.is_empty() && q.bound < Rational::zero()
}

/// Splits every bracket, minimum and maximum into exact lattice cases.
///
/// `<X>^p` becomes `1` where `log2 X <= 0` and `X^p` elsewhere. An extremum becomes its
/// `i`-th argument where that argument wins, with ties going to the earliest argument.
/// The branch regions partition the lattice exactly.
///
/// ```
/// use dyadsum::expr::{Factor, Monomial, Summand};
/// use dyadsum::rational::rat;
/// use dyadsum::reducer::split;
///
/// let s = Summand::new(vec![
///     Factor::bracket(Monomial::var("Nmin"), rat(-1, 2)),
///     Factor::Mono(Monomial::power("Nmin", rat(1, 2))),
/// ]);
/// let branches = split(&s).unwrap();
/// assert_eq!(branches.len(), 2);
/// assert_eq!(branches[0].monomial(), Monomial::power("Nmin", rat(1, 2)));
/// assert!(branches[1].monomial().is_one());
/// ```
pub fn split(s: &Summand) -> Result<Vec<Branch>, ExprError> {
    struct Partial {
        mono: Monomial,
        extra: Vec<LinearIneq>,
        prov: Vec<SplitDecision>,
    }
    let mut parts = vec![Partial { mono: Monomial::one(), extra: vec![], prov: vec![] }];
    for (idx, f) in s.factors.iter().enumerate() {
        let alternatives: Vec<(Monomial, Vec<LinearIneq>, String)> = match f {
            Factor::Mono(m) => vec![(m.clone(), vec![], String::new())],
            Factor::Bracket { arg, power } => {
                let lf = arg.log_form()?;
                let zero = (Rational::zero(), BTreeMap::new());
                let low = le_forms(&lf, &zero);
                let high = complement(&low);
                vec![
                    (Monomial::one(), vec![low], format!("{arg}<=1")),
                    (arg.pow(power), vec![high], format!("{arg}>1")),
                ]
            }
            Factor::Min { args, power } | Factor::Max { args, power } => {
                let is_min = matches!(f, Factor::Min { .. });
                let forms = args.iter().map(Monomial::log_form).collect::<Result<Vec<_>, _>>()?;
                (0..args.len())
                    .map(|i| {
                        let mut conds = Vec::new();
                        for j in 0..args.len() {
                            if i == j {
                                continue;
                            }
                            let strict = j < i;
                            let (a, b) = if is_min { (&forms[i], &forms[j]) } else { (&forms[j], &forms[i]) };
                            conds.push(if strict { lt_forms(a, b) } else { le_forms(a, b) });
                        }
                        let label = format!("{}={}", if is_min { "min" } else { "max" }, args[i]);
                        (args[i].pow(power), conds, label)
                    })
                    .collect()
            }
        };
        let mut next = Vec::with_capacity(parts.len() * alternatives.len());
        for p in &parts {
            for (m, conds, label) in &alternatives {
                if conds.iter().any(constant_false) {
                    continue;
                }
                let mut extra = p.extra.clone();
                extra.extend(conds.iter().filter(|q| !q.coeffs.is_empty()).cloned());
                let mut prov = p.prov.clone();
                if !label.is_empty() {
                    prov.push(SplitDecision { factor: idx, choice: label.clone() });
                }
                next.push(Partial { mono: p.mono.mul(m), extra, prov });
            }
        }
        parts = next;
    }
    Ok(parts
        .into_iter()
        .map(|p| Branch {
            summand: if p.mono.is_one() { Summand::default() } else { Summand::new(vec![Factor::Mono(p.mono)]) },
            extra: p.extra,
            provenance: p.prov,
        })
        .collect())
}

/// Convenience wrapper: split, linearize and eliminate in reverse declaration order.
pub fn analyze(problem: &Problem) -> Result<SymbolicReport, SymbolicError> {
    let mut order = problem.summation_vars();
    order.reverse();
    analyze_with_order(problem, &order)
}

pub fn analyze_with_order(problem: &Problem, order: &[String]) -> Result<SymbolicReport, SymbolicError> {
    let p = problem.pin_fixed();
    let region = p.region()?;
    let branches = split(&p.summand)?;
    symbolic_growth(&branches, &region, p.param(), order)
}
