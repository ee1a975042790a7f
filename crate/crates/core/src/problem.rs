//! A dyadic summation problem: summand, constraints, variables and the growth parameter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::constraints::{linearize, Constraint, LogRegion, SlackConfig};
use crate::expr::{DyadicVar, ExprError, Factor, Monomial, Summand, VarRole};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("variable `{0}` is used but not declared")]
    Undeclared(String),
    #[error("variable `{0}` is declared twice")]
    Duplicate(String),
    #[error("exactly one parameter is required, found {0}")]
    ParameterCount(usize),
    #[error("parameter `{0}` does not appear in any constraint")]
    ParameterUnconstrained(String),
    #[error("fixed variable `{0}` has no value")]
    FixedWithoutValue(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub summand: Summand,
    pub constraints: Vec<Constraint>,
    /// Declared variables, outermost first.
    pub variables: Vec<DyadicVar>,
    pub slack: SlackConfig,
    /// `k` values of variables with role [`VarRole::Fixed`].
    pub fixed_values: BTreeMap<String, i64>,
}

impl Problem {
    /// Builds and validates a problem.
    pub fn new(
        summand: Summand,
        constraints: Vec<Constraint>,
        variables: Vec<DyadicVar>,
        slack: SlackConfig,
    ) -> Result<Problem, ProblemError> {
        let p = Problem { summand, constraints, variables, slack, fixed_values: BTreeMap::new() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_fixed(mut self, name: &str, k: i64) -> Self {
        self.fixed_values.insert(name.to_string(), k);
        self
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let mut seen = BTreeSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.clone()) {
                return Err(ProblemError::Duplicate(v.name.clone()));
            }
            if v.role == VarRole::Fixed && !self.fixed_values.contains_key(&v.name) {
                return Err(ProblemError::FixedWithoutValue(v.name.clone()));
            }
        }
        let params: Vec<_> = self.variables.iter().filter(|v| v.role == VarRole::Parameter).collect();
        if params.len() != 1 {
            return Err(ProblemError::ParameterCount(params.len()));
        }
        for name in self.summand.variables().into_iter().chain(self.constraints.iter().flat_map(Constraint::variables)) {
            if !seen.contains(&name) {
                return Err(ProblemError::Undeclared(name));
            }
        }
        let param = &params[0].name;
        if !self.constraints.iter().any(|c| c.variables().contains(param)) {
            return Err(ProblemError::ParameterUnconstrained(param.clone()));
        }
        Ok(())
    }

    pub fn param(&self) -> &str {
        self.variables
            .iter()
            .find(|v| v.role == VarRole::Parameter)
            .map(|v| v.name.as_str())
            .expect("validated problem has a parameter")
    }

    /// Summation variables in declaration order.
    pub fn summation_vars(&self) -> Vec<String> {
        self.variables.iter().filter(|v| v.role == VarRole::Summation).map(|v| v.name.clone()).collect()
    }

    pub fn region(&self) -> Result<LogRegion, ExprError> {
        linearize(&self.constraints, &self.slack)
    }

    /// Binds symbolic exponents in the summand and the constraints.
    pub fn substitute_params(&self, bindings: &BTreeMap<String, Rational>) -> Problem {
        Problem {
            summand: self.summand.substitute_params(bindings),
            constraints: self.constraints.iter().map(|c| c.substitute_params(bindings)).collect(),
            ..self.clone()
        }
    }

    /// Replaces fixed variables by their values, leaving a problem over summation variables and the parameter.
    pub fn pin_fixed(&self) -> Problem {
        if self.fixed_values.is_empty() {
            return self.clone();
        }
        let pin = |m: &Monomial| -> Monomial {
            let mut out = Monomial { coeff: m.coeff.clone(), powers: BTreeMap::new() };
            for (v, e) in &m.powers {
                match self.fixed_values.get(v) {
                    Some(k) => out.coeff = &out.coeff + &e.scale(crate::rational::int(*k)),
                    None => {
                        out.powers.insert(v.clone(), e.clone());
                    }
                }
            }
            out
        };
        let factors = self
            .summand
            .factors
            .iter()
            .map(|f| match f {
                Factor::Mono(m) => Factor::Mono(pin(m)),
                Factor::Bracket { arg, power } => Factor::Bracket { arg: pin(arg), power: power.clone() },
                Factor::Min { args, power } => Factor::Min { args: args.iter().map(pin).collect(), power: power.clone() },
                Factor::Max { args, power } => Factor::Max { args: args.iter().map(pin).collect(), power: power.clone() },
            })
            .collect();
        Problem {
            summand: Summand::new(factors),
            constraints: self
                .constraints
                .iter()
                .map(|c| Constraint::new(pin(&c.lhs), c.rel, pin(&c.rhs)))
                .collect(),
            variables: self.variables.iter().filter(|v| v.role != VarRole::Fixed).cloned().collect(),
            slack: self.slack,
            fixed_values: BTreeMap::new(),
        }
    }

    /// Adds constraints and returns the enlarged problem.
    pub fn with_constraints(&self, more: impl IntoIterator<Item = Constraint>) -> Problem {
        let mut p = self.clone();
        p.constraints.extend(more);
        p
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "param {}", self.param())?;
        let vars = self.summation_vars();
        if !vars.is_empty() {
            writeln!(f, "var {}", vars.join(" "))?;
        }
        for v in self.variables.iter().filter(|v| v.role == VarRole::Fixed) {
            writeln!(f, "fixed {} = {}", v.name, self.fixed_values[&v.name])?;
        }
        let d = SlackConfig::default();
        for (name, v, dv) in [
            ("lesssim", self.slack.c_lesssim, d.c_lesssim),
            ("sim", self.slack.c_sim, d.c_sim),
            ("gap", self.slack.gap_ll, d.gap_ll),
        ] {
            if v != dv {
                writeln!(f, "set {name} = {v}")?;
            }
        }
        writeln!(f, "sum {}", self.summand)?;
        for c in &self.constraints {
            writeln!(f, "where {c}")?;
        }
        Ok(())
    }
}
