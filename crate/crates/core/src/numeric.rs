//! Brute-force evaluation of truncated dyadic sums and log-log growth fits.
//!
//! Every summation variable is restricted to the box `[-K, K]`. Loops run in declaration
//! order except that a variable whose bounds are already determined by assigned variables is
//! pulled forward, so constraints prune whole loops instead of filtering points. Terms are
//! added in lexicographic order of the loop variables into a compensated accumulator.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constraints::LogRegion;
use crate::expr::{bracket_log2, ExprError, Factor, Monomial, Summand};
use crate::problem::Problem;
use crate::rational::{to_f64, Rational};
use crate::reducer::lin::{normalize, Norm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("truncated sum at kN={k_n}, K={cutoff} needs more than {budget} terms")]
    CostExceeded { k_n: i64, cutoff: u32, budget: u64 },
    #[error("ladder needs at least 3 points, got {0}")]
    LadderTooShort(usize),
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Level(usize),
    Const(f64),
}

#[derive(Debug, Clone)]
struct CMono {
    coeff: f64,
    terms: Vec<(Src, f64)>,
}

impl CMono {
    #[inline]
    fn log2(&self, vals: &[i64]) -> f64 {
        let mut acc = self.coeff;
        for (s, p) in &self.terms {
            let k = match s {
                Src::Level(l) => vals[*l] as f64,
                Src::Const(k) => *k,
            };
            acc += p * k;
        }
        acc
    }
}

#[derive(Debug, Clone)]
enum CFactor {
    Mono(CMono),
    Bracket(CMono, f64),
    Min(Vec<CMono>, f64),
    Max(Vec<CMono>, f64),
}

impl CFactor {
    #[inline]
    fn log2(&self, vals: &[i64]) -> f64 {
        match self {
            CFactor::Mono(m) => m.log2(vals),
            CFactor::Bracket(m, p) => bracket_log2(m.log2(vals), *p),
            CFactor::Min(ms, p) => {
                let mut best = f64::INFINITY;
                for m in ms {
                    best = best.min(m.log2(vals));
                }
                p * best
            }
            CFactor::Max(ms, p) => {
                let mut best = f64::NEG_INFINITY;
                for m in ms {
                    best = best.max(m.log2(vals));
                }
                p * best
            }
        }
    }
}

#[derive(Debug, Clone)]
struct CSummand(Vec<CFactor>);

impl CSummand {
    #[inline]
    fn log2(&self, vals: &[i64]) -> f64 {
        let mut total = 0.0;
        for f in &self.0 {
            total += f.log2(vals);
        }
        total
    }
}

/// Integer inequality `a_self * k_self + sum a_i * k_{level_i} <= b` with the parameter folded in.
#[derive(Debug, Clone)]
struct LevelIneq {
    a: i64,
    others: Vec<(usize, i64)>,
    b: i64,
}

#[derive(Debug, Clone)]
struct Component {
    /// Variable names in loop order.
    order: Vec<String>,
    levels: Vec<Vec<LevelIneq>>,
    summand: CSummand,
}

struct Compiled {
    components: Vec<Component>,
    /// Log of the factor shared by every term (coefficients and parameter powers), when factorized.
    const_log2: Option<f64>,
    empty: bool,
}

fn compile_mono(m: &Monomial, level_of: &BTreeMap<String, usize>, fixed: &BTreeMap<String, i64>, keep: &dyn Fn(&str) -> bool, with_coeff: bool) -> Result<CMono, ExprError> {
    let coeff = if with_coeff { to_f64(&m.coeff.require()?) } else { 0.0 };
    let mut terms = Vec::new();
    for (v, e) in &m.powers {
        if !keep(v) {
            continue;
        }
        let p = to_f64(&e.require()?);
        let src = match level_of.get(v) {
            Some(l) => Src::Level(*l),
            None => Src::Const(*fixed.get(v).ok_or_else(|| ExprError::MissingVariable(v.clone()))? as f64),
        };
        terms.push((src, p));
    }
    Ok(CMono { coeff, terms })
}

fn compile_factor(f: &Factor, level_of: &BTreeMap<String, usize>, fixed: &BTreeMap<String, i64>) -> Result<CFactor, ExprError> {
    let all = |_: &str| true;
    let cm = |m: &Monomial| compile_mono(m, level_of, fixed, &all, true);
    Ok(match f {
        Factor::Mono(m) => CFactor::Mono(cm(m)?),
        Factor::Bracket { arg, power } => CFactor::Bracket(cm(arg)?, to_f64(&power.require()?)),
        Factor::Min { args, power } => {
            CFactor::Min(args.iter().map(cm).collect::<Result<_, _>>()?, to_f64(&power.require()?))
        }
        Factor::Max { args, power } => {
            CFactor::Max(args.iter().map(cm).collect::<Result<_, _>>()?, to_f64(&power.require()?))
        }
    })
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
        }
        self.0[x]
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Dense integer form of the region with the parameter value substituted.
fn integer_region(region: &LogRegion, vars: &[String], param: &str, k_n: i64) -> Option<Vec<(Vec<i64>, i64)>> {
    let mut out = Vec::new();
    for q in &region.ineqs {
        let mut a: Vec<Rational> = vars.iter().map(|v| q.coeffs.get(v).copied().unwrap_or_default()).collect();
        a.push(q.coeffs.get(param).copied().unwrap_or_default());
        match normalize(&a, q.bound) {
            Norm::True => {}
            Norm::False => return None,
            Norm::Ineq(iq) => {
                let ap = iq.a[vars.len()];
                let b = iq.b as i128 - ap as i128 * k_n as i128;
                let coeffs = iq.a[..vars.len()].to_vec();
                if coeffs.iter().all(|x| *x == 0) {
                    if b < 0 {
                        return None;
                    }
                    continue;
                }
                out.push((coeffs, b as i64));
            }
        }
    }
    Some(out)
}

/// Greedy loop order: the first variable in declaration order whose bounds are fixed by
/// variables already placed, or the first remaining one.
fn choose_order(vars: &[usize], ineqs: &[&(Vec<i64>, i64)]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = vars.to_vec();
    while !remaining.is_empty() {
        let pick = remaining
            .iter()
            .position(|&v| {
                let mut up = false;
                let mut down = false;
                for (a, _) in ineqs {
                    if a[v] == 0 {
                        continue;
                    }
                    let ok = a.iter().enumerate().all(|(u, c)| *c == 0 || u == v || order.contains(&u));
                    if ok {
                        up |= a[v] > 0;
                        down |= a[v] < 0;
                    }
                }
                up && down
            })
            .unwrap_or(0);
        order.push(remaining.remove(pick));
    }
    order
}

fn compile(p: &Problem, k_n: i64, factorize: bool) -> Result<Compiled, ExprError> {
    let p = p.pin_fixed();
    let vars = p.summation_vars();
    let param = p.param().to_string();
    let region = p.region()?;
    let Some(ineqs) = integer_region(&region, &vars, &param, k_n) else {
        return Ok(Compiled { components: vec![], const_log2: None, empty: true });
    };
    let n = vars.len();
    let mut uf = UnionFind((0..n).collect());
    let index: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    if factorize {
        for (a, _) in &ineqs {
            let vs: Vec<usize> = (0..n).filter(|i| a[*i] != 0).collect();
            for w in vs.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        for f in &p.summand.factors {
            if f.is_mono() {
                continue;
            }
            let vs: Vec<usize> = f.variables().iter().filter_map(|v| index.get(v.as_str()).copied()).collect();
            for w in vs.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
    } else {
        for i in 1..n {
            uf.union(0, i);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let single = groups.len() <= 1;
    let fixed: BTreeMap<String, i64> = [(param.clone(), k_n)].into();
    let mut components = Vec::new();
    let mut const_log2 = 0.0;
    if single {
        let vs: Vec<usize> = (0..n).collect();
        let comp_ineqs: Vec<&(Vec<i64>, i64)> = ineqs.iter().collect();
        components.push(build_component(&p.summand, &vars, &vs, &comp_ineqs, &fixed, None)?);
    } else {
        let sum_vars: std::collections::BTreeSet<&str> = vars.iter().map(String::as_str).collect();
        let none = |v: &str| !sum_vars.contains(v);
        for f in &p.summand.factors {
            match f {
                Factor::Mono(m) => {
                    const_log2 += compile_mono(m, &BTreeMap::new(), &fixed, &none, true)?.log2(&[]);
                }
                _ if f.variables().iter().all(|v| !sum_vars.contains(v.as_str())) => {
                    const_log2 += compile_factor(f, &BTreeMap::new(), &fixed)?.log2(&[]);
                }
                _ => {}
            }
        }
        for vs in groups.values() {
            let comp_ineqs: Vec<&(Vec<i64>, i64)> =
                ineqs.iter().filter(|(a, _)| vs.iter().any(|i| a[*i] != 0)).collect();
            components.push(build_component(&p.summand, &vars, vs, &comp_ineqs, &fixed, Some(vs))?);
        }
    }
    Ok(Compiled { components, const_log2: (!single).then_some(const_log2), empty: false })
}

fn build_component(
    summand: &Summand,
    vars: &[String],
    members: &[usize],
    ineqs: &[&(Vec<i64>, i64)],
    fixed: &BTreeMap<String, i64>,
    restrict: Option<&Vec<usize>>,
) -> Result<Component, ExprError> {
    let order = choose_order(members, ineqs);
    let level_of_var: BTreeMap<usize, usize> = order.iter().enumerate().map(|(l, v)| (*v, l)).collect();
    let mut levels: Vec<Vec<LevelIneq>> = vec![Vec::new(); order.len()];
    for (a, b) in ineqs {
        let last = order.iter().rposition(|v| a[*v] != 0).expect("inequality mentions a member");
        let v = order[last];
        let others = order[..last].iter().enumerate().filter(|(_, u)| a[**u] != 0).map(|(l, u)| (l, a[*u])).collect();
        levels[last].push(LevelIneq { a: a[v], others, b: *b });
    }
    let level_of: BTreeMap<String, usize> = level_of_var.iter().map(|(v, l)| (vars[*v].clone(), *l)).collect();
    let summand = match restrict {
        None => CSummand(summand.factors.iter().map(|f| compile_factor(f, &level_of, fixed)).collect::<Result<_, _>>()?),
        Some(members) => {
            let mine: std::collections::BTreeSet<&str> = members.iter().map(|i| vars[*i].as_str()).collect();
            let keep = |v: &str| mine.contains(v);
            let mut out = Vec::new();
            for f in &summand.factors {
                match f {
                    Factor::Mono(m) => {
                        let cm = compile_mono(m, &level_of, fixed, &keep, false)?;
                        if !cm.terms.is_empty() {
                            out.push(CFactor::Mono(cm));
                        }
                    }
                    _ if f.variables().iter().any(|v| mine.contains(v.as_str())) => {
                        out.push(compile_factor(f, &level_of, fixed)?)
                    }
                    _ => {}
                }
            }
            CSummand(out)
        }
    };
    Ok(Component { order: order.iter().map(|v| vars[*v].clone()).collect(), levels, summand })
}

struct Walk<'a> {
    comp: &'a Component,
    cutoff: i64,
    vals: Vec<i64>,
    acc: CompensatedSum,
    clipped: bool,
    points: u64,
    budget: u64,
}

impl Walk<'_> {
    fn bounds(&mut self, level: usize) -> (i64, i64) {
        let (mut lo, mut hi): (Option<i64>, Option<i64>) = (None, None);
        for q in &self.comp.levels[level] {
            let mut rhs = q.b as i128;
            for (l, a) in &q.others {
                rhs -= *a as i128 * self.vals[*l] as i128;
            }
            let a = q.a as i128;
            if a > 0 {
                let h = num_integer::Integer::div_floor(&rhs, &a) as i64;
                hi = Some(hi.map_or(h, |x| x.min(h)));
            } else {
                let l = num_integer::Integer::div_ceil(&rhs, &a) as i64;
                lo = Some(lo.map_or(l, |x| x.max(l)));
            }
        }
        let k = self.cutoff;
        let (lo_b, hi_b) = (lo.map_or(-k, |l| l.max(-k)), hi.map_or(k, |h| h.min(k)));
        if lo_b <= hi_b && (lo.is_none_or(|l| l < -k) || hi.is_none_or(|h| h > k)) {
            self.clipped = true;
        }
        (lo_b, hi_b)
    }

    fn run(&mut self, level: usize) -> bool {
        let (lo, hi) = self.bounds(level);
        if level + 1 == self.vals.len() {
            if lo <= hi {
                self.points += (hi - lo + 1) as u64;
                if self.points > self.budget {
                    return false;
                }
            }
            for k in lo..=hi {
                self.vals[level] = k;
                let t = self.comp.summand.log2(&self.vals).exp2();
                self.acc.add(t);
            }
            return true;
        }
        for k in lo..=hi {
            self.vals[level] = k;
            if !self.run(level + 1) {
                return false;
            }
        }
        true
    }
}

/// A truncated sum with the bookkeeping needed for convergence checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedSum {
    pub value: f64,
    /// Whether the box `[-K, K]` cut some loop short; if not, the sum is the same for every larger `K`.
    pub clipped: bool,
    pub points: u64,
}

pub const DEFAULT_POINT_BUDGET: u64 = 100_000_000;

pub fn truncated_sum_detail(p: &Problem, k_n: i64, cutoff: u32, budget: u64) -> Result<TruncatedSum, NumericError> {
    truncated_sum_with(p, k_n, cutoff, budget, true)
}

fn truncated_sum_with(p: &Problem, k_n: i64, cutoff: u32, budget: u64, factorize: bool) -> Result<TruncatedSum, NumericError> {
    let c = compile(p, k_n, factorize)?;
    if c.empty {
        return Ok(TruncatedSum { value: 0.0, clipped: false, points: 0 });
    }
    let mut product = 1.0;
    let mut clipped = false;
    let mut points = 0;
    for comp in &c.components {
        let mut w = Walk {
            comp,
            cutoff: cutoff as i64,
            vals: vec![0; comp.order.len()],
            acc: CompensatedSum::default(),
            clipped: false,
            points: 0,
            budget: budget.saturating_sub(points),
        };
        let value = if comp.order.is_empty() {
            comp.summand.log2(&[]).exp2()
        } else {
            if !w.run(0) {
                return Err(NumericError::CostExceeded { k_n, cutoff, budget });
            }
            w.acc.value()
        };
        points += w.points;
        clipped |= w.clipped;
        product *= value;
    }
    if let Some(l) = c.const_log2 {
        product *= l.exp2();
    }
    Ok(TruncatedSum { value: product, clipped, points })
}

/// `sum` of the summand over the region at `k_N = k_n`, each variable in `[-cutoff, cutoff]`.
pub fn truncated_sum(p: &Problem, k_n: i64, cutoff: u32) -> Result<f64, NumericError> {
    Ok(truncated_sum_detail(p, k_n, cutoff, DEFAULT_POINT_BUDGET)?.value)
}

/// The loop order used when the problem is summed without factorization.
pub fn summation_order(p: &Problem, k_n: i64) -> Result<Vec<String>, ExprError> {
    let c = compile(p, k_n, false)?;
    Ok(c.components.into_iter().next().map(|c| c.order).unwrap_or_default())
}

/// Sum as a single nested loop, no factorization. Used to compare against brute force.
pub fn truncated_sum_unfactored(p: &Problem, k_n: i64, cutoff: u32) -> Result<f64, NumericError> {
    Ok(truncated_sum_with(p, k_n, cutoff, DEFAULT_POINT_BUDGET, false)?.value)
}

/// Whether the sum has stopped changing along the cutoff ladder.
///
/// True when the top cutoff clips nothing, or when the last two cutoffs differ by less than 1%.
pub fn cutoff_converged(p: &Problem, k_n: i64, ladder: &[u32]) -> Result<bool, NumericError> {
    Ok(cutoff_check(p, k_n, ladder, DEFAULT_POINT_BUDGET)?.0)
}

fn cutoff_check(p: &Problem, k_n: i64, ladder: &[u32], budget: u64) -> Result<(bool, f64), NumericError> {
    let Some(&top) = ladder.last() else { return Ok((false, f64::NAN)) };
    let t = truncated_sum_detail(p, k_n, top, budget)?;
    if !t.clipped {
        return Ok((true, t.value));
    }
    if ladder.len() < 2 {
        return Ok((false, t.value));
    }
    let prev = truncated_sum_detail(p, k_n, ladder[ladder.len() - 2], budget)?.value;
    let ok = (t.value - prev).abs() < 0.01 * t.value.abs() || (t.value == 0.0 && prev == 0.0);
    Ok((ok, t.value))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderPoint {
    pub k_n: i64,
    pub sum: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderResult {
    pub points: Vec<LadderPoint>,
    /// Slope of `log2(sum)` against `kN`.
    pub fitted_exponent: f64,
    /// Slope in the model with an extra `log2(kN)` term.
    pub log_model_exponent: f64,
    pub log_degree_estimate: u32,
    pub fit_quality: f64,
    /// First ladder point whose cutoff ladder did not converge.
    pub divergent_at: Option<i64>,
}

impl LadderResult {
    /// The exponent to classify with: the log-model slope if the log term was selected.
    pub fn effective_exponent(&self) -> f64 {
        if self.log_degree_estimate > 0 {
            self.log_model_exponent
        } else {
            self.fitted_exponent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub ss_res: f64,
    pub ss_tot: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_linear(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot = ys.iter().map(|y| (y - my).powi(2)).sum();
    LinearFit { slope, intercept, ss_res, ss_tot }
}

/// Least squares of `y` on `1, x, log2 x`; returns `(slope, log coefficient, ss_res)`.
pub fn fit_with_log(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let cols: Vec<[f64; 3]> = xs.iter().map(|x| [1.0, *x, x.log2()]).collect();
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (r, y) in cols.iter().zip(ys) {
        for i in 0..3 {
            aty[i] += r[i] * y;
            for j in 0..3 {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let Some(beta) = solve3(ata, aty) else { return (f64::NAN, f64::NAN, f64::INFINITY) };
    let ss = cols.iter().zip(ys).map(|(r, y)| (y - beta[0] * r[0] - beta[1] * r[1] - beta[2] * r[2]).powi(2)).sum();
    (beta[1], beta[2], ss)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                let pivot = a[col];
                for (x, p) in a[row].iter_mut().zip(pivot) {
                    *x -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some([b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]])
}

/// Smallest change in `log2(sum)` across the ladder that a log factor must explain.
pub const MIN_LOG_EFFECT: f64 = 0.1;

/// Chooses between a pure power law and a power law with one `log` factor.
pub fn fit_ladder(points: &[(i64, f64)]) -> (f64, f64, u32, f64) {
    let pos: Vec<(f64, f64)> = points.iter().filter(|(_, s)| *s > 0.0).map(|(k, s)| (*k as f64, s.log2())).collect();
    let vanishing = points.last().is_some_and(|(_, s)| *s == 0.0);
    if pos.len() < 3 || vanishing {
        return (f64::NEG_INFINITY, f64::NEG_INFINITY, 0, 1.0);
    }
    let xs: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pos.iter().map(|p| p.1).collect();
    let lin = fit_linear(&xs, &ys);
    let n = xs.len() as f64;
    let quality = 1.0 - lin.ss_res / lin.ss_tot.max(n * 1e-4);
    let (log_slope, log_coeff, log_ss) = if xs.len() >= 4 { fit_with_log(&xs, &ys) } else { (f64::NAN, 0.0, f64::INFINITY) };
    let log_span = xs[xs.len() - 1].log2() - xs[0].log2();
    let log_selected = lin.ss_res > n * 1e-8
        && log_ss * 10.0 < lin.ss_res
        && log_coeff > 0.0
        && log_coeff * log_span >= MIN_LOG_EFFECT;
    let quality = if log_selected { 1.0 - log_ss / lin.ss_tot.max(n * 1e-4) } else { quality };
    (lin.slope, if log_selected { log_slope } else { lin.slope }, log_selected as u32, quality.clamp(0.0, 1.0))
}

/// Cutoffs used for the convergence check at a given top cutoff.
pub fn cutoff_ladder(cutoff: u32) -> Vec<u32> {
    [cutoff.saturating_sub(16), cutoff.saturating_sub(8), cutoff].into_iter().filter(|k| *k > 0).collect()
}

/// Truncated sums over the parameter ladder and the fitted growth.
pub fn growth_estimate(p: &Problem, ladder: &[i64], cutoff: u32, budget: u64) -> Result<LadderResult, NumericError> {
    if ladder.len() < 3 {
        return Err(NumericError::LadderTooShort(ladder.len()));
    }
    let cl = cutoff_ladder(cutoff);
    let raw: Vec<Result<(bool, f64), NumericError>> =
        ladder.par_iter().map(|k| cutoff_check(p, *k, &cl, budget)).collect();
    let mut points = Vec::with_capacity(ladder.len());
    for (k, r) in ladder.iter().zip(raw) {
        let (converged, sum) = r?;
        points.push(LadderPoint { k_n: *k, sum, converged });
    }
    let divergent_at = points.iter().find(|p| !p.converged).map(|p| p.k_n);
    if divergent_at.is_some() {
        return Ok(LadderResult {
            points,
            fitted_exponent: f64::INFINITY,
            log_model_exponent: f64::INFINITY,
            log_degree_estimate: 0,
            fit_quality: 0.0,
            divergent_at,
        });
    }
    let pairs: Vec<(i64, f64)> = points.iter().map(|p| (p.k_n, p.sum)).collect();
    let (slope, log_slope, deg, quality) = fit_ladder(&pairs);
    Ok(LadderResult {
        points,
        fitted_exponent: slope,
        log_model_exponent: log_slope,
        log_degree_estimate: deg,
        fit_quality: quality,
        divergent_at: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{Constraint, Relation, SlackConfig};
    use crate::expr::{DyadicVar, VarRole};
    use crate::rational::{int, rat};

    fn v(n: &str) -> Monomial {
        Monomial::var(n)
    }

    fn problem(summand: Vec<Factor>, cs: Vec<Constraint>, vars: &[&str], param: &str) -> Problem {
        let mut vs: Vec<DyadicVar> = vars.iter().map(|n| DyadicVar::new(*n, VarRole::Summation)).collect();
        vs.push(DyadicVar::new(param, VarRole::Parameter));
        Problem::new(Summand::new(summand), cs, vs, SlackConfig::default()).unwrap()
    }

    #[test]
    fn geometric_sum_below_b() {
        let p = problem(
            vec![Factor::Mono(v("A"))],
            vec![Constraint::new(v("A"), Relation::Lesssim, v("B"))],
            &["A"],
            "B",
        );
        let s = truncated_sum(&p, 5, 64).unwrap();
        let exact = 2f64.powi(8) * (1.0 - 2f64.powi(-72));
        assert!((s / exact - 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn unclipped_sums_are_flagged() {
        let p = problem(
            vec![Factor::Mono(v("A"))],
            vec![
                Constraint::new(v("A"), Relation::Le, v("N")),
                Constraint::new(v("A"), Relation::Ge, Monomial::one()),
            ],
            &["A"],
            "N",
        );
        let t = truncated_sum_detail(&p, 5, 64, DEFAULT_POINT_BUDGET).unwrap();
        assert!(!t.clipped);
        assert_eq!(t.value, 63.0);
        assert!(cutoff_converged(&p, 5, &cutoff_ladder(64)).unwrap());
    }

    #[test]
    fn divergence_is_detected() {
        let p = problem(
            vec![Factor::Mono(Monomial::power("A", rat(1, 2)))],
            vec![Constraint::new(v("A"), Relation::Gtrsim, v("N"))],
            &["A"],
            "N",
        );
        assert!(!cutoff_converged(&p, 4, &cutoff_ladder(64)).unwrap());
        let r = growth_estimate(&p, &[4, 5, 6], 64, DEFAULT_POINT_BUDGET).unwrap();
        assert_eq!(r.divergent_at, Some(4));
    }

    #[test]
    fn factorized_equals_single_loop() {
        let p = problem(
            vec![
                Factor::Mono(Monomial::power("A", rat(1, 2)).mul(&Monomial::power("B", rat(-1, 2)))),
                Factor::bracket(v("B"), int(1)),
                Factor::Mono(Monomial::power("N", rat(1, 3))),
            ],
            vec![
                Constraint::new(v("A"), Relation::Lesssim, v("N")),
                Constraint::new(v("A"), Relation::Gtrsim, Monomial::one()),
                Constraint::new(v("B"), Relation::Sim, v("N")),
            ],
            &["A", "B"],
            "N",
        );
        let a = truncated_sum(&p, 6, 20).unwrap();
        let b = truncated_sum_unfactored(&p, 6, 20).unwrap();
        assert!((a / b - 1.0).abs() < 1e-13);
    }

    #[test]
    fn point_budget_is_enforced() {
        let p = problem(
            vec![Factor::Mono(Monomial::one())],
            vec![Constraint::new(v("A"), Relation::Lesssim, v("N")), Constraint::new(v("B"), Relation::Lesssim, v("A"))],
            &["A", "B"],
            "N",
        );
        assert!(matches!(truncated_sum_detail(&p, 4, 64, 100), Err(NumericError::CostExceeded { .. })));
    }

    #[test]
    fn linear_fit_recovers_slope() {
        let xs: Vec<f64> = (4..=12).map(|x| x as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.125 * x + 3.0).collect();
        let f = fit_linear(&xs, &ys);
        assert!((f.slope - 0.125).abs() < 1e-12);
    }

    #[test]
    fn log_term_is_detected() {
        let pts: Vec<(i64, f64)> = (4..=12).map(|k| (k, 2.0 * k as f64 + 5.0)).collect();
        let (_, slope, deg, q) = fit_ladder(&pts);
        assert_eq!(deg, 1);
        assert!(slope.abs() < 0.05, "{slope}");
        assert!(q > 0.9);
    }

    #[test]
    fn flat_data_has_no_log_term() {
        let pts: Vec<(i64, f64)> = (4..=12).map(|k| (k, 3.0 + 1e-9 * k as f64)).collect();
        let (slope, _, deg, q) = fit_ladder(&pts);
        assert_eq!(deg, 0);
        assert!(slope.abs() < 1e-6);
        assert!(q > 0.99);
    }

    #[test]
    fn compensated_sum_is_accurate() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }
}
