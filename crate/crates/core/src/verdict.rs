//! Classification of a problem as bounded, growing, or logarithmically divergent in its parameter.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{growth_estimate, LadderResult, NumericError, DEFAULT_POINT_BUDGET};
use crate::problem::Problem;
use crate::rational::{fmt_rational, rat, to_f64, Rational};
use crate::reducer::{analyze_with_order, SymbolicError, SymbolicOutcome, SymbolicReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerdictError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Classification {
    Bounded,
    LogDivergent,
    Unbounded,
    Inconclusive,
}

impl Classification {
    pub fn exit_code(self) -> i32 {
        match self {
            Classification::Bounded => 0,
            Classification::Unbounded => 1,
            Classification::LogDivergent => 2,
            Classification::Inconclusive => 3,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Bounded => "Bounded",
            Classification::LogDivergent => "LogDivergent",
            Classification::Unbounded => "Unbounded",
            Classification::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Engine {
    Symbolic,
    Numeric,
    Both,
}

impl FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "symbolic" => Ok(Engine::Symbolic),
            "numeric" => Ok(Engine::Numeric),
            "both" => Ok(Engine::Both),
            other => Err(format!("unknown engine `{other}` (expected symbolic, numeric or both)")),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Symbolic => "symbolic",
            Engine::Numeric => "numeric",
            Engine::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    pub ladder: (i64, i64),
    pub cutoff: u32,
    #[serde(serialize_with = "ser_rational")]
    pub tol: Rational,
    pub engine: Engine,
    pub point_budget: u64,
    /// Elimination order; reverse declaration order when empty.
    pub order: Vec<String>,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(r))
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ladder: (4, 12),
            cutoff: 64,
            tol: rat(1, 20),
            engine: Engine::Both,
            point_budget: DEFAULT_POINT_BUDGET,
            order: Vec::new(),
        }
    }
}

impl EngineConfig {
    pub fn ladder_points(&self) -> Vec<i64> {
        (self.ladder.0..=self.ladder.1).collect()
    }

    pub fn with_engine(mut self, e: Engine) -> Self {
        self.engine = e;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthVerdict {
    pub classification: Classification,
    /// Exact exponent when the symbolic engine decided, otherwise the fitted slope.
    pub exponent: f64,
    pub exact_exponent: Option<Rational>,
    pub log_degree: u32,
    pub divergent_at_fixed_parameter: bool,
    pub symbolic: Option<SymbolicReport>,
    pub ladder: Option<LadderResult>,
    pub notes: Vec<String>,
}

impl GrowthVerdict {
    pub fn exponent_text(&self) -> String {
        match (&self.exact_exponent, self.divergent_at_fixed_parameter) {
            (_, true) => "inf".to_string(),
            (Some(r), _) => fmt_rational(r),
            (None, _) if self.exponent == f64::NEG_INFINITY => "-inf".to_string(),
            (None, _) => format!("{:.6}", self.exponent),
        }
    }
}

/// Classification of an exact symbolic outcome.
pub fn classify_symbolic(outcome: &SymbolicOutcome) -> (Classification, Option<Rational>, u32, bool) {
    match outcome {
        SymbolicOutcome::Divergent { .. } => (Classification::Unbounded, None, 0, true),
        SymbolicOutcome::Vanishing { .. } => (Classification::Bounded, None, 0, false),
        SymbolicOutcome::Growth(g) => {
            let c = if g.exponent > Rational::from_integer(0) {
                Classification::Unbounded
            } else if g.exponent < Rational::from_integer(0) || g.log_degree == 0 {
                Classification::Bounded
            } else {
                Classification::LogDivergent
            };
            (c, Some(g.exponent), g.log_degree, false)
        }
    }
}

/// Classification of a numeric ladder at tolerance `tol`.
pub fn classify_numeric(l: &LadderResult, tol: f64) -> Classification {
    if l.divergent_at.is_some() {
        return Classification::Unbounded;
    }
    if l.fit_quality < 0.9 {
        return Classification::Inconclusive;
    }
    let e = l.effective_exponent();
    if e > tol {
        Classification::Unbounded
    } else if e < -tol {
        Classification::Bounded
    } else if l.log_degree_estimate > 0 {
        Classification::LogDivergent
    } else {
        Classification::Bounded
    }
}

/// Runs the configured engines and combines their answers. The symbolic answer, when
/// available, decides; the numeric ladder is attached as evidence.
pub fn verdict(p: &Problem, cfg: &EngineConfig) -> Result<GrowthVerdict, VerdictError> {
    let mut notes = Vec::new();
    let symbolic = if cfg.engine == Engine::Numeric {
        None
    } else {
        let order = if cfg.order.is_empty() {
            let mut o = p.summation_vars();
            o.reverse();
            o
        } else {
            cfg.order.clone()
        };
        match analyze_with_order(p, &order) {
            Ok(r) => Some(r),
            Err(SymbolicError::NotEliminable(why)) => {
                notes.push(format!("symbolic engine gave up: {why}"));
                None
            }
            Err(e) => return Err(e.into()),
        }
    };
    let need_numeric = cfg.engine != Engine::Symbolic || symbolic.is_none();
    let ladder = if need_numeric {
        match growth_estimate(p, &cfg.ladder_points(), cfg.cutoff, cfg.point_budget) {
            Ok(l) => Some(l),
            Err(NumericError::CostExceeded { k_n, cutoff, budget }) if symbolic.is_some() => {
                notes.push(format!("numeric run skipped: more than {budget} terms at kN={k_n}, K={cutoff}"));
                None
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let tol = to_f64(&cfg.tol);
    let v = match (&symbolic, &ladder) {
        (Some(s), l) => {
            let (c, exact, deg, div) = classify_symbolic(&s.outcome);
            if let Some(l) = l {
                let nc = classify_numeric(l, tol);
                if nc != c {
                    notes.push(format!("numeric ladder suggests {nc}"));
                }
            }
            let exponent = match (&exact, div) {
                (_, true) => f64::INFINITY,
                (Some(r), _) => to_f64(r),
                (None, _) => f64::NEG_INFINITY,
            };
            GrowthVerdict {
                classification: c,
                exponent,
                exact_exponent: exact,
                log_degree: deg,
                divergent_at_fixed_parameter: div,
                symbolic: symbolic.clone(),
                ladder: ladder.clone(),
                notes,
            }
        }
        (None, Some(l)) => {
            let c = classify_numeric(l, tol);
            GrowthVerdict {
                classification: c,
                exponent: l.effective_exponent(),
                exact_exponent: None,
                log_degree: l.log_degree_estimate,
                divergent_at_fixed_parameter: l.divergent_at.is_some(),
                symbolic: None,
                ladder: ladder.clone(),
                notes,
            }
        }
        (None, None) => unreachable!("numeric runs whenever symbolic is unavailable"),
    };
    Ok(v)
}
