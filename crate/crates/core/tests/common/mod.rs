#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use dyadsum::constraints::{Constraint, Relation, SlackConfig};
use dyadsum::expr::{DyadicVar, Factor, Monomial, Summand, VarRole};
use dyadsum::numeric::{growth_estimate, summation_order, truncated_sum, truncated_sum_unfactored, CompensatedSum};
use dyadsum::problem::Problem;
use dyadsum::rational::{rat, to_f64, Rational};
use dyadsum::reducer::{eliminate_var, split, Reduction, StepOutcome, SymbolicOutcome};
use dyadsum::verdict::{verdict, Engine, EngineConfig};
use dyadsum::LogRegion;

pub const VARS: [&str; 3] = ["A", "B", "C"];

const HALVES: [(i64, i64); 8] = [(-2, 1), (-3, 2), (-1, 1), (-1, 2), (1, 2), (1, 1), (3, 2), (2, 1)];

fn exponent(rng: &mut impl Rng) -> Rational {
    let (a, b) = *HALVES.choose(rng).unwrap();
    rat(a, b)
}

pub fn random_mono(rng: &mut impl Rng, vars: &[&str]) -> Monomial {
    let mut m = Monomial::two_pow(rng.gen_range(-2i64..=2));
    for _ in 0..rng.gen_range(1..=2) {
        m = m.mul(&Monomial::power(*vars.choose(rng).unwrap(), exponent(rng)));
    }
    m
}

pub fn random_factor(rng: &mut impl Rng, vars: &[&str]) -> Factor {
    let p = exponent(rng);
    match rng.gen_range(0..4) {
        0 => Factor::Mono(random_mono(rng, vars)),
        1 => Factor::bracket(random_mono(rng, vars), p),
        k => {
            let a = random_mono(rng, vars);
            let mut b = random_mono(rng, vars);
            while b == a {
                b = random_mono(rng, vars);
            }
            if k == 2 {
                Factor::min(vec![a, b], p).unwrap()
            } else {
                Factor::max(vec![a, b], p).unwrap()
            }
        }
    }
}

const RELATIONS: [Relation; 7] =
    [Relation::Lesssim, Relation::Gtrsim, Relation::Sim, Relation::Ll, Relation::Gg, Relation::Le, Relation::Ge];

/// A problem with `nvars` summation variables, parameter `N`, and arbitrary factors and constraints.
pub fn random_problem(rng: &mut impl Rng, nvars: usize) -> Problem {
    let vars = &VARS[..nvars];
    let mut all: Vec<&str> = vars.to_vec();
    all.push("N");
    let factors = (0..rng.gen_range(1..=3)).map(|_| random_factor(rng, &all)).collect();
    let mut cs = vec![Constraint::new(Monomial::var(*vars.choose(rng).unwrap()), *RELATIONS.choose(rng).unwrap(), Monomial::var("N"))];
    for _ in 0..rng.gen_range(0..=3) {
        cs.push(Constraint::new(random_mono(rng, &all), *RELATIONS.choose(rng).unwrap(), random_mono(rng, &all)));
    }
    let mut decl = vec![DyadicVar::new("N", VarRole::Parameter)];
    decl.extend(vars.iter().map(|v| DyadicVar::new(*v, VarRole::Summation)));
    Problem::new(Summand::new(factors), cs, decl, SlackConfig::default()).unwrap()
}

pub fn random_constraint(rng: &mut impl Rng, nvars: usize) -> Constraint {
    let mut all: Vec<&str> = VARS[..nvars].to_vec();
    all.push("N");
    Constraint::new(random_mono(rng, &all), *RELATIONS.choose(rng).unwrap(), random_mono(rng, &all))
}

/// Enumerates the full box `[-k, k]^d` in the engine's loop order and filters by membership.
pub fn brute_force(p: &Problem, k_n: i64, k: i64) -> f64 {
    let mut order = summation_order(p, k_n).unwrap();
    if order.is_empty() {
        order = p.summation_vars();
    }
    let region = p.region().unwrap();
    let mut at: BTreeMap<String, i64> = p.fixed_values.clone();
    at.insert(p.param().to_string(), k_n);
    let mut acc = CompensatedSum::default();
    fn go(i: usize, order: &[String], k: i64, at: &mut BTreeMap<String, i64>, p: &Problem, r: &LogRegion, acc: &mut CompensatedSum) {
        if i == order.len() {
            if r.contains(at).unwrap() {
                acc.add(p.summand.eval(at).unwrap());
            }
            return;
        }
        for x in -k..=k {
            at.insert(order[i].clone(), x);
            go(i + 1, order, k, at, p, r, acc);
        }
    }
    go(0, &order, k, &mut at, p, &region, &mut acc);
    acc.value()
}

/// Unfactored truncated sum equals brute force bit for bit; the factorized sum agrees to rounding.
pub fn check_oracle(p: &Problem, k_n: i64, k: u32) -> Result<(), String> {
    let b = brute_force(p, k_n, k as i64);
    let u = truncated_sum_unfactored(p, k_n, k).unwrap();
    if u.to_bits() != b.to_bits() {
        return Err(format!("unfactored {u:e} != brute force {b:e} at kN={k_n}, K={k}\n{p}"));
    }
    let f = truncated_sum(p, k_n, k).unwrap();
    if (f - b).abs() > 1e-12 * b.abs() {
        return Err(format!("factorized {f:e} != brute force {b:e} at kN={k_n}, K={k}\n{p}"));
    }
    Ok(())
}

const REL_TOL: f64 = 1e-12;

pub fn check_cutoff_monotone(p: &Problem, k_n: i64, k: u32) -> Result<(), String> {
    let a = truncated_sum(p, k_n, k).unwrap();
    let b = truncated_sum(p, k_n, k + 1).unwrap();
    if b < a * (1.0 - REL_TOL) {
        return Err(format!("sum dropped from {a:e} to {b:e} when K grew to {}\n{p}", k + 1));
    }
    Ok(())
}

pub fn check_region_monotone(p: &Problem, extra: Constraint, k_n: i64, k: u32) -> Result<(), String> {
    let q = p.with_constraints([extra.clone()]);
    let a = truncated_sum(p, k_n, k).unwrap();
    let b = truncated_sum(&q, k_n, k).unwrap();
    if b > a * (1.0 + REL_TOL) {
        return Err(format!("adding `{extra}` raised the sum from {a:e} to {b:e}\n{p}"));
    }
    Ok(())
}

/// Every lattice point of `[-6, 6]^3` lies in exactly one branch of the split.
pub fn check_partition(s: &Summand) -> Result<(), String> {
    let branches = split(s).map_err(|e| e.to_string())?;
    let regions: Vec<LogRegion> = branches.iter().map(|b| b.region()).collect();
    let mut at = BTreeMap::new();
    for a in -6..=6 {
        for b in -6..=6 {
            for c in -6..=6 {
                for (v, x) in [("A", a), ("B", b), ("C", c), ("N", 0)] {
                    at.insert(v.to_string(), x);
                }
                let hits = regions.iter().filter(|r| r.contains(&at).unwrap()).count();
                if hits != 1 {
                    return Err(format!("{hits} branches contain {at:?} for {s}"));
                }
            }
        }
    }
    Ok(())
}

fn reduced_value(r: &Reduction, at: &BTreeMap<String, i64>) -> f64 {
    let lin = |(coeffs, c): &(BTreeMap<String, Rational>, Rational)| {
        to_f64(c) + coeffs.iter().map(|(v, a)| to_f64(a) * at[v] as f64).sum::<f64>()
    };
    let e = lin(&r.exponent());
    r.extents().iter().map(lin).product::<f64>() * e.exp2()
}

/// Closed-form elimination of `X` in `sum 2^(c k_X + d k_Y)` over `lo <= k_X <= m k_Y + w`, against direct summation.
///
/// Returns `(closed, direct)` at every `k_Y` in `[-6, 6]`.
pub fn geometric_pairs(c: Rational, d: Rational, lo: i64, m: i64, w: i64) -> Result<Vec<(f64, f64)>, String> {
    let x = Monomial::power("X", c).mul(&Monomial::power("Y", d));
    let lower = Constraint::new(Monomial::var("X"), Relation::Ge, Monomial::two_pow(lo));
    let upper = Constraint::new(Monomial::var("X"), Relation::Le, Monomial::power("Y", m).mul(&Monomial::two_pow(w)));
    let region = dyadsum::constraints::linearize(&[lower, upper], &SlackConfig::default()).unwrap();
    let r = Reduction::new(&["X", "Y"], x, region).map_err(|e| e.to_string())?;
    let terms = match eliminate_var(&r, "X").map_err(|e| e.to_string())? {
        StepOutcome::Reduced(ts) => ts,
        StepOutcome::Divergent => return Err("bounded range reported divergent".into()),
    };
    let mut out = Vec::new();
    for ky in -6..=6i64 {
        let at: BTreeMap<String, i64> = [("Y".to_string(), ky)].into();
        let closed: f64 = terms.iter().filter(|t| t.region().contains(&at).unwrap()).map(|t| reduced_value(t, &at)).sum();
        let direct: f64 = (lo..=m * ky + w).map(|kx| (to_f64(&c) * kx as f64 + to_f64(&d) * ky as f64).exp2()).sum();
        out.push((closed, direct));
    }
    Ok(out)
}

/// A bounded two-variable problem whose growth the symbolic engine can decide.
pub fn random_eliminable(rng: &mut impl Rng) -> Problem {
    let powers = [rat(-2, 1), rat(-3, 2), rat(-1, 1), rat(1, 1), rat(3, 2), rat(2, 1)];
    let a = *powers.choose(rng).unwrap();
    let b = *powers.choose(rng).unwrap();
    let v = Monomial::var;
    let one = Monomial::one;
    use Relation::*;
    let cs = match rng.gen_range(0..5) {
        0 => vec![
            Constraint::new(v("A"), Gtrsim, one()),
            Constraint::new(v("A"), Lesssim, v("N")),
            Constraint::new(v("B"), Gtrsim, one()),
            Constraint::new(v("B"), Lesssim, v("N")),
        ],
        1 => vec![
            Constraint::new(v("B"), Gtrsim, one()),
            Constraint::new(v("B"), Le, v("A")),
            Constraint::new(v("A"), Lesssim, v("N")),
        ],
        2 => vec![
            Constraint::new(v("A"), Sim, v("N")),
            Constraint::new(v("B"), Gtrsim, one()),
            Constraint::new(v("B"), Lesssim, v("A")),
        ],
        3 => vec![
            Constraint::new(v("A"), Gtrsim, v("N")),
            Constraint::new(v("A"), Lesssim, Monomial::power("N", 2)),
            Constraint::new(v("B"), Sim, v("A")),
        ],
        _ => vec![
            Constraint::new(v("A"), Ge, one()),
            Constraint::new(v("A"), Le, v("N")),
            Constraint::new(v("B"), Ge, v("A")),
            Constraint::new(v("B"), Le, v("N")),
        ],
    };
    let mut factors = vec![Factor::Mono(Monomial::power("A", a).mul(&Monomial::power("B", b)))];
    if rng.gen_bool(0.3) {
        factors.push(Factor::bracket(v("B"), *powers.choose(rng).unwrap()));
    }
    let decl = vec![
        DyadicVar::new("N", VarRole::Parameter),
        DyadicVar::new("A", VarRole::Summation),
        DyadicVar::new("B", VarRole::Summation),
    ];
    Problem::new(Summand::new(factors), cs, decl, SlackConfig::default()).unwrap()
}

/// `Some((symbolic, numeric))` when the symbolic engine finds pure power growth.
pub fn exponent_pair(p: &Problem) -> Option<(f64, f64)> {
    let cfg = EngineConfig::default().with_engine(Engine::Symbolic);
    let v = verdict(p, &cfg).ok()?;
    let SymbolicOutcome::Growth(g) = &v.symbolic.as_ref()?.outcome else { return None };
    if g.log_degree != 0 {
        return None;
    }
    let l = growth_estimate(p, &cfg.ladder_points(), cfg.cutoff, cfg.point_budget).ok()?;
    Some((to_f64(&g.exponent), l.effective_exponent()))
}
