use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::lin::{canonical, collect, feasible, normalize, single_var_interval, Ineq, Lin, Norm};
use super::{Branch, SplitDecision, SymbolicError, SymbolicGrowth, SymbolicOutcome, SymbolicReport};
use crate::constraints::{LinearIneq, LogRegion};
use crate::expr::Monomial;
use crate::rational::Rational;

const MAX_TERMS: usize = 200_000;

#[derive(Debug, Clone)]
struct Term {
    exp: Lin,
    extents: Vec<Lin>,
    region: Vec<Ineq>,
    prov: Arc<Vec<SplitDecision>>,
}

type Key = (Lin, Vec<Lin>, Vec<Ineq>);

impl Term {
    fn key(&self) -> Key {
        (self.exp.clone(), self.extents.clone(), self.region.clone())
    }
}

enum Step {
    Terms(Vec<Term>),
    Divergent,
}

fn tidy_extents(mut ex: Vec<Lin>) -> Vec<Lin> {
    ex.retain(|e| !e.is_constant());
    ex.sort();
    ex
}

fn finish(
    exp: Lin,
    extents: Vec<Lin>,
    region: Option<Vec<Ineq>>,
    prov: &Arc<Vec<SplitDecision>>,
) -> Option<Term> {
    let region = canonical(region?)?;
    if !feasible(&region) {
        return None;
    }
    Some(Term { exp, extents: tidy_extents(extents), region, prov: prov.clone() })
}

fn step(t: &Term, v: usize) -> Step {
    if t.region.iter().any(|q| q.b < 0 && q.a.iter().all(|x| *x == 0)) {
        return Step::Terms(Vec::new());
    }
    let c = t.exp.a[v];
    let (mut ups, mut lows, mut rest) = (Vec::new(), Vec::new(), Vec::new());
    for q in &t.region {
        match q.a[v].signum() {
            1 => ups.push(q),
            -1 => lows.push(q),
            _ => rest.push(q.clone()),
        }
    }
    let up_forms: Vec<Lin> = ups.iter().map(|q| q.bound_form(v)).collect();
    let low_forms: Vec<Lin> = lows.iter().map(|q| q.bound_form(v)).collect();
    let mut out = Vec::new();

    if c.is_positive() {
        if ups.is_empty() {
            return Step::Divergent;
        }
        for (j, uj) in up_forms.iter().enumerate() {
            let mut reg = rest.clone();
            let extra = lows
                .iter()
                .map(|l| ups[j].combine(l, v))
                .chain(up_forms.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, ui)| Ineq::le(uj, ui)));
            let Some(extra) = collect(extra) else { continue };
            reg.extend(extra);
            let exp = t.exp.substitute(v, uj);
            let ex = t.extents.iter().map(|e| e.substitute(v, uj)).collect();
            out.extend(finish(exp, ex, Some(reg), &t.prov));
        }
    } else if c.is_negative() {
        if lows.is_empty() {
            return Step::Divergent;
        }
        for (i, li) in low_forms.iter().enumerate() {
            let mut reg = rest.clone();
            let extra = ups
                .iter()
                .map(|u| u.combine(lows[i], v))
                .chain(low_forms.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, lk)| Ineq::le(lk, li)));
            let Some(extra) = collect(extra) else { continue };
            reg.extend(extra);
            let exp = t.exp.substitute(v, li);
            let ex = t.extents.iter().map(|e| e.substitute(v, li)).collect();
            out.extend(finish(exp, ex, Some(reg), &t.prov));
        }
    } else {
        if ups.is_empty() || lows.is_empty() {
            return Step::Divergent;
        }
        for (i, li) in low_forms.iter().enumerate() {
            for (j, uj) in up_forms.iter().enumerate() {
                let mut reg = rest.clone();
                let extra = lows
                    .iter()
                    .map(|l| ups[j].combine(l, v))
                    .chain(ups.iter().map(|u| u.combine(lows[i], v)))
                    .chain(up_forms.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, uk)| Ineq::le(uj, uk)))
                    .chain(low_forms.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, lk)| Ineq::le(lk, li)));
                let Some(extra) = collect(extra) else { continue };
                reg.extend(extra);
                let mut ex: Vec<Lin> = Vec::with_capacity(t.extents.len() + 1);
                ex.push(uj.sub(li).plus_const(Rational::one()));
                for e in &t.extents {
                    if e.a[v].is_zero() {
                        ex.push(e.clone());
                    } else {
                        ex.push(e.substitute(v, li).add(&e.substitute(v, uj)));
                    }
                }
                out.extend(finish(t.exp.clone(), ex, Some(reg), &t.prov));
            }
        }
    }
    Step::Terms(out)
}

/// A monomial sum in log space together with its extent factors and region, over named variables.
#[derive(Debug, Clone)]
pub struct Reduction {
    names: Arc<Vec<String>>,
    term: Term,
}

/// Result of eliminating one variable.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    /// The sum over the variable, one reduction per choice of dominant bound. Empty if infeasible.
    Reduced(Vec<Reduction>),
    /// The variable's sum is infinite for some fixed values of the others.
    Divergent,
}

fn index_of(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
}

fn dense_ineq(q: &LinearIneq, idx: &HashMap<&str, usize>, n: usize) -> Result<Norm, SymbolicError> {
    let mut a = vec![Rational::zero(); n];
    for (v, c) in &q.coeffs {
        let i = *idx.get(v.as_str()).ok_or_else(|| SymbolicError::UnknownVariable(v.clone()))?;
        a[i] = *c;
    }
    Ok(normalize(&a, q.bound))
}

fn dense_mono(m: &Monomial, idx: &HashMap<&str, usize>, n: usize) -> Result<Lin, SymbolicError> {
    let (c, map) = m.log_form()?;
    let mut l = Lin::zero(n);
    l.c = c;
    for (v, x) in map {
        let i = *idx.get(v.as_str()).ok_or(SymbolicError::UnknownVariable(v))?;
        l.a[i] = x;
    }
    Ok(l)
}

fn named_ineq(q: &Ineq, names: &[String]) -> LinearIneq {
    LinearIneq::new(
        q.a.iter().zip(names).filter(|(x, _)| **x != 0).map(|(x, n)| (n.clone(), Rational::from_integer(*x))).collect(),
        Rational::from_integer(q.b),
    )
}

impl Reduction {
    /// Starts a reduction of `sum over region of mono`; `vars` fixes the variable space.
    pub fn new(vars: &[&str], mono: Monomial, region: LogRegion) -> Result<Reduction, SymbolicError> {
        let mut names: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        for v in mono.variables().map(str::to_string).chain(region.variables()) {
            if !names.contains(&v) {
                names.push(v);
            }
        }
        let idx = index_of(&names);
        let n = names.len();
        let exp = dense_mono(&mono, &idx, n)?;
        let mut ineqs = Vec::new();
        for q in &region.ineqs {
            ineqs.push(dense_ineq(q, &idx, n)?);
        }
        let region = collect(ineqs).and_then(canonical).filter(|r| feasible(r)).unwrap_or_else(|| vec![Ineq { a: vec![0; n], b: -1 }]);
        let term = Term { exp, extents: vec![], region, prov: Arc::new(vec![]) };
        Ok(Reduction { names: Arc::new(names), term })
    }

    /// Exponent of 2 as `(coefficients, constant)`.
    pub fn exponent(&self) -> (BTreeMap<String, Rational>, Rational) {
        self.term.exp.to_named(&self.names)
    }

    /// Extent factors, each an affine form counting lattice points.
    pub fn extents(&self) -> Vec<(BTreeMap<String, Rational>, Rational)> {
        self.term.extents.iter().map(|e| e.to_named(&self.names)).collect()
    }

    pub fn region(&self) -> LogRegion {
        LogRegion::new(self.term.region.iter().map(|q| named_ineq(q, &self.names)).collect())
    }
}

/// Sums out `v` from a reduction.
pub fn eliminate_var(r: &Reduction, v: &str) -> Result<StepOutcome, SymbolicError> {
    let i = r.names.iter().position(|n| n == v).ok_or_else(|| SymbolicError::UnknownVariable(v.to_string()))?;
    Ok(match step(&r.term, i) {
        Step::Divergent => StepOutcome::Divergent,
        Step::Terms(ts) => StepOutcome::Reduced(
            ts.into_iter().map(|term| Reduction { names: r.names.clone(), term }).collect(),
        ),
    })
}

#[cfg(test)]
pub(crate) fn region_feasible(region: &LogRegion, names: &[String]) -> bool {
    let idx = index_of(names);
    let n = names.len();
    let Ok(qs) = region.ineqs.iter().map(|q| dense_ineq(q, &idx, n)).collect::<Result<Vec<_>, _>>() else {
        return true;
    };
    match collect(qs) {
        None => false,
        Some(qs) => feasible(&qs),
    }
}

/// Growth of `sum over region` of the branch summands as the parameter tends to infinity.
///
/// Variables are eliminated in `order`; any summation variable missing from `order` is
/// eliminated afterwards in first-appearance order. The parameter is taken to satisfy `N >= 1`.
pub fn symbolic_growth(
    branches: &[Branch],
    region: &LogRegion,
    param: &str,
    order: &[String],
) -> Result<SymbolicReport, SymbolicError> {
    let mut names: Vec<String> = order.iter().filter(|v| *v != param).cloned().collect();
    let mut extra_vars: Vec<String> = region.variables().into_iter().collect();
    for b in branches {
        extra_vars.extend(b.monomial().variables().map(str::to_string));
        for q in &b.extra {
            extra_vars.extend(q.variables().map(str::to_string));
        }
    }
    for v in extra_vars {
        if v != param && !names.contains(&v) {
            names.push(v);
        }
    }
    let elim_order: Vec<usize> = (0..names.len()).collect();
    names.push(param.to_string());
    let p = names.len() - 1;
    let n = names.len();
    let idx = index_of(&names);

    let mut base = Vec::new();
    for q in &region.ineqs {
        base.push(dense_ineq(q, &idx, n)?);
    }
    let mut nonneg = vec![0; n];
    nonneg[p] = -1;
    base.push(Norm::Ineq(Ineq { a: nonneg, b: 0 }));
    let base = collect(base);

    let mut terms = Vec::new();
    if let Some(base) = base {
        for b in branches {
            let exp = dense_mono(&b.monomial(), &idx, n)?;
            let mut reg = base.clone();
            let mut ok = true;
            for q in &b.extra {
                match dense_ineq(q, &idx, n)? {
                    Norm::True => {}
                    Norm::False => ok = false,
                    Norm::Ineq(q) => reg.push(q),
                }
            }
            if !ok {
                continue;
            }
            if let Some(t) = finish(exp, vec![], Some(reg), &Arc::new(b.provenance.clone())) {
                terms.push(t);
            }
        }
    }
    let feasible_branches = terms.len();

    for v in elim_order {
        let mut seen: HashMap<Key, ()> = HashMap::new();
        let mut next = Vec::new();
        for t in &terms {
            match step(t, v) {
                Step::Divergent => {
                    return Ok(SymbolicReport {
                        outcome: SymbolicOutcome::Divergent {
                            variable: names[v].clone(),
                            provenance: t.prov.as_ref().clone(),
                        },
                        branches: branches.len(),
                        feasible_branches,
                        final_terms: 0,
                    })
                }
                Step::Terms(ts) => {
                    for nt in ts {
                        if seen.insert(nt.key(), ()).is_none() {
                            next.push(nt);
                        }
                    }
                }
            }
            if next.len() > MAX_TERMS {
                return Err(SymbolicError::NotEliminable(format!(
                    "more than {MAX_TERMS} terms after eliminating `{}`",
                    names[v]
                )));
            }
        }
        terms = next;
    }

    let mut best: Option<SymbolicGrowth> = None;
    let mut any_feasible = false;
    for t in &terms {
        let (lo, hi) = single_var_interval(&t.region, p);
        if matches!((lo, hi), (Some(l), Some(h)) if l > h) {
            continue;
        }
        any_feasible = true;
        if hi.is_some() {
            continue;
        }
        let g = SymbolicGrowth {
            exponent: t.exp.a[p],
            log_degree: t.extents.iter().filter(|e| e.a[p].is_positive()).count() as u32,
        };
        best = Some(match best {
            Some(b) if b >= g => b,
            _ => g,
        });
    }
    let outcome = match best {
        Some(g) => SymbolicOutcome::Growth(g),
        None => SymbolicOutcome::Vanishing { empty: !any_feasible },
    };
    Ok(SymbolicReport { outcome, branches: branches.len(), feasible_branches, final_terms: terms.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{linearize, Constraint, Relation, SlackConfig};
    use crate::rational::{int, rat};

    fn v(n: &str) -> Monomial {
        Monomial::var(n)
    }

    fn reduce_all(r: Reduction, vars: &[&str]) -> Vec<Reduction> {
        let mut cur = vec![r];
        for x in vars {
            let mut next = vec![];
            for t in &cur {
                match eliminate_var(t, x).unwrap() {
                    StepOutcome::Reduced(ts) => next.extend(ts),
                    StepOutcome::Divergent => panic!("divergent on {x}"),
                }
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn sum_below_b_is_b() {
        let region = linearize(&[Constraint::new(v("A"), Relation::Lesssim, v("B"))], &SlackConfig::default()).unwrap();
        let r = Reduction::new(&["A", "B"], v("A"), region).unwrap();
        let out = reduce_all(r, &["A"]);
        assert_eq!(out.len(), 1);
        let (coeffs, c) = out[0].exponent();
        assert_eq!(coeffs.get("B"), Some(&int(1)));
        assert_eq!(c, int(2));
    }

    #[test]
    fn negative_power_above_one_is_constant() {
        let region = linearize(&[Constraint::new(v("Lmin"), Relation::Gtrsim, Monomial::one())], &SlackConfig::default()).unwrap();
        let r = Reduction::new(&["Lmin"], Monomial::power("Lmin", rat(-1, 8)), region).unwrap();
        let out = reduce_all(r, &["Lmin"]);
        assert_eq!(out.len(), 1);
        assert!(out[0].exponent().0.is_empty());
        assert!(out[0].extents().is_empty());
    }

    #[test]
    fn zero_power_counts_scales() {
        let cs = vec![
            Constraint::new(v("Nmin"), Relation::Gtrsim, v("N").inv()),
            Constraint::new(v("Nmin"), Relation::Lesssim, v("N")),
        ];
        let region = linearize(&cs, &SlackConfig::default()).unwrap();
        let r = Reduction::new(&["Nmin", "N"], Monomial::power("Nmin", int(0)), region).unwrap();
        let out = reduce_all(r, &["Nmin"]);
        assert_eq!(out.len(), 1);
        let ex = out[0].extents();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].0.get("N"), Some(&int(2)));
    }

    #[test]
    fn missing_upper_bound_diverges() {
        let region = linearize(&[Constraint::new(v("A"), Relation::Gtrsim, v("N"))], &SlackConfig::default()).unwrap();
        let r = Reduction::new(&["A", "N"], v("A"), region).unwrap();
        assert!(matches!(eliminate_var(&r, "A").unwrap(), StepOutcome::Divergent));
    }

    #[test]
    fn infeasible_choices_are_dropped() {
        // A <= B - 3 and A >= B: empty.
        let cs = vec![
            Constraint::new(v("A"), Relation::Ll, v("B")),
            Constraint::new(v("A"), Relation::Ge, v("B")),
        ];
        let region = linearize(&cs, &SlackConfig::default()).unwrap();
        let r = Reduction::new(&["A", "B"], v("A"), region).unwrap();
        match eliminate_var(&r, "A").unwrap() {
            StepOutcome::Reduced(ts) => assert!(ts.is_empty()),
            StepOutcome::Divergent => panic!(),
        }
    }
}
