//! Bilinear-estimate case analysis compiled into summation problems.
//!
//! Each estimate kind has a weight in the index variables `N1, N2, N3, L1, L2, L3`. Under a
//! role assignment those become the ordered variables `Nmax >= Nmed >= Nmin` and
//! `Lmax >= Lmed >= Lmin`; the multiplier norm bound and the structural constraints of the
//! modulation regime and size pattern complete one [`Problem`] per case.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::constraints::{Constraint, Relation, SlackConfig};
use crate::expr::{DyadicVar, Exponent, Factor, Monomial, Summand, VarRole};
use crate::problem::Problem;
use crate::rational::{fmt_rational, int, rat, to_f64, Rational};
use crate::verdict::{verdict, Classification, EngineConfig, GrowthVerdict, VerdictError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaseError {
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(u32),
    #[error("unknown estimate kind `{0}` (expected cucv, uv, cuv or omega-cuv)")]
    UnknownKind(String),
    #[error(transparent)]
    Verdict(#[from] VerdictError),
}

/// `(n, s, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub n: u32,
    pub s: Rational,
    pub theta: Rational,
}

impl Triple {
    pub fn new(n: u32, s: Rational, theta: Rational) -> Triple {
        Triple { n, s, theta }
    }

    /// The small loss used in the generic bound: `min(1/16, (theta - 1/2)/2)` for `n = 3`, zero for `n = 2`.
    pub fn epsilon(&self) -> Rational {
        if self.n == 2 {
            int(0)
        } else {
            rat(1, 16).min((self.theta - rat(1, 2)) / int(2))
        }
    }

    pub fn bindings(&self) -> BTreeMap<String, Rational> {
        [
            ("s".to_string(), self.s),
            ("theta".to_string(), self.theta),
            ("n".to_string(), int(self.n as i64)),
            ("eps".to_string(), self.epsilon()),
        ]
        .into()
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.n, fmt_rational(&self.s), fmt_rational(&self.theta))
    }
}

/// Whether `(n, s, theta)` is admissible.
///
/// ```
/// use dyadsum::cases::{is_admissible, Triple};
/// use dyadsum::rational::rat;
/// assert!(is_admissible(&Triple::new(2, rat(-1, 2), rat(5, 8))).unwrap());
/// assert!(!is_admissible(&Triple::new(3, rat(-9, 20), rat(11, 20))).unwrap());
/// ```
pub fn is_admissible(t: &Triple) -> Result<bool, CaseError> {
    let (s, th) = (t.s, t.theta);
    let zero = int(0);
    match t.n {
        2 if th == rat(3, 4) => Ok(rat(-1, 2) < s && s < zero),
        2 => Ok(th > rat(1, 2) && (th - rat(5, 4)).max(int(2) * th - int(2)) <= s && s < zero),
        3 => Ok(th > rat(1, 2) && int(2) * th - rat(3, 2) <= s && s < zero),
        n => Err(CaseError::Dimension(n)),
    }
}

/// `(theta - 1)/2 < s < 0` with `theta > 1/2` and `n` in `{2, 3}`.
pub fn satisfies_23ts(t: &Triple) -> bool {
    matches!(t.n, 2 | 3) && t.theta > rat(1, 2) && (t.theta - int(1)) / int(2) < t.s && t.s < int(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EstimateKind {
    Cucv,
    Uv,
    Cuv,
    OmegaCuv,
}

impl EstimateKind {
    pub const ALL: [EstimateKind; 4] = [EstimateKind::Cucv, EstimateKind::Uv, EstimateKind::Cuv, EstimateKind::OmegaCuv];

    /// The predicate the verdicts are compared with.
    pub fn reference(self, t: &Triple) -> bool {
        match self {
            EstimateKind::Cucv | EstimateKind::Uv => is_admissible(t).unwrap_or(false),
            EstimateKind::Cuv | EstimateKind::OmegaCuv => satisfies_23ts(t),
        }
    }

    pub fn reference_name(self) -> &'static str {
        match self {
            EstimateKind::Cucv | EstimateKind::Uv => "admissible",
            EstimateKind::Cuv | EstimateKind::OmegaCuv => "23ts",
        }
    }

    /// Distance from `t` to the edge of the reference region, in the `s` direction,
    /// together with `|theta - 3/4|` for `n = 2` when the reference is admissibility.
    pub fn boundary_distance(self, t: &Triple) -> f64 {
        let (s, th) = (to_f64(&t.s), to_f64(&t.theta));
        match self {
            EstimateKind::Cucv | EstimateKind::Uv => {
                if t.n == 2 {
                    let edge = (th - 1.25).max(2.0 * th - 2.0);
                    (s - edge).abs().min((th - 0.75).abs())
                } else {
                    (s - (2.0 * th - 1.5)).abs()
                }
            }
            EstimateKind::Cuv | EstimateKind::OmegaCuv => (s - (th - 1.0) / 2.0).abs(),
        }
    }
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateKind::Cucv => "cucv",
            EstimateKind::Uv => "uv",
            EstimateKind::Cuv => "cuv",
            EstimateKind::OmegaCuv => "omega-cuv",
        })
    }
}

impl FromStr for EstimateKind {
    type Err = CaseError;
    fn from_str(s: &str) -> Result<Self, CaseError> {
        match s.to_ascii_lowercase().as_str() {
            "cucv" => Ok(EstimateKind::Cucv),
            "uv" => Ok(EstimateKind::Uv),
            "cuv" => Ok(EstimateKind::Cuv),
            "omega-cuv" | "omegacuv" | "ocuv" => Ok(EstimateKind::OmegaCuv),
            other => Err(CaseError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Modulation {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Subcase {
    /// The `(+++)` interaction.
    Triple,
    /// `N1 ~ N2 >> N3` with `H ~ N1^2`.
    Separated,
    /// `N1 ~ N3 >> N2` with `H ~ L2 >> L1, L3, N2^2`, or indices 1 and 2 swapped.
    Coherence,
    /// All remaining `(++-)` configurations.
    Generic,
}

/// Relative sizes of `N1, N2, N3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SizePattern {
    Any,
    AllComparable,
    /// `N1 ~ N2`, `N3` smallest.
    ThreeSmall,
    /// `N1 ~ N3`, `N2` smallest.
    TwoSmall,
    /// `N2 ~ N3`, `N1` smallest.
    OneSmall,
}

impl SizePattern {
    fn small_index(self) -> Option<usize> {
        match self {
            SizePattern::ThreeSmall => Some(2),
            SizePattern::TwoSmall => Some(1),
            SizePattern::OneSmall => Some(0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rank {
    Max,
    Med,
    Min,
}

impl Rank {
    const ALL: [Rank; 3] = [Rank::Max, Rank::Med, Rank::Min];

    fn short(self) -> &'static str {
        match self {
            Rank::Max => "max",
            Rank::Med => "med",
            Rank::Min => "min",
        }
    }
}

pub fn n_var(r: Rank) -> &'static str {
    match r {
        Rank::Max => "Nmax",
        Rank::Med => "Nmed",
        Rank::Min => "Nmin",
    }
}

pub fn l_var(r: Rank) -> &'static str {
    match r {
        Rank::Max => "Lmax",
        Rank::Med => "Lmed",
        Rank::Min => "Lmin",
    }
}

/// One concrete case: modulation regime, subcase, size pattern and role assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EstimateCase {
    pub kind: EstimateKind,
    pub modulation: Modulation,
    pub subcase: Subcase,
    pub pattern: SizePattern,
    /// `n_roles[i]` is the rank of `N_{i+1}`.
    pub n_roles: [Rank; 3],
    /// `l_roles[i]` is the rank of `L_{i+1}`.
    pub l_roles: [Rank; 3],
}

impl fmt::Display for EstimateCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = match self.subcase {
            Subcase::Triple => "(+++)",
            Subcase::Separated => "(++-)1",
            Subcase::Coherence => "(++-)2",
            Subcase::Generic => "(++-)3",
        };
        let pat = match self.pattern {
            SizePattern::Any => "any",
            SizePattern::AllComparable => "N1~N2~N3",
            SizePattern::ThreeSmall => "N1~N2>N3",
            SizePattern::TwoSmall => "N1~N3>N2",
            SizePattern::OneSmall => "N2~N3>N1",
        };
        let r = |rs: &[Rank; 3]| rs.iter().map(|r| r.short()).collect::<Vec<_>>().join(",");
        write!(
            f,
            "{:?} {} {} N=({}) L=({})",
            self.modulation,
            sub,
            pat,
            r(&self.n_roles),
            r(&self.l_roles)
        )
    }
}

fn permutations() -> Vec<[Rank; 3]> {
    let mut out = Vec::new();
    for a in Rank::ALL {
        for b in Rank::ALL {
            for c in Rank::ALL {
                if a != b && b != c && a != c {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

fn sym(name: &str) -> Exponent {
    Exponent::symbol(name)
}

fn c(r: Rational) -> Exponent {
    Exponent::constant(r)
}

fn nv(roles: &[Rank; 3], i: usize) -> Monomial {
    Monomial::var(n_var(roles[i]))
}

fn lv(roles: &[Rank; 3], i: usize) -> Monomial {
    Monomial::var(l_var(roles[i]))
}

/// The weight of an estimate in role variables, with `s` and `theta` left symbolic.
pub fn weight_symbolic(kind: EstimateKind, n_roles: &[Rank; 3], l_roles: &[Rank; 3]) -> Summand {
    let s = sym("s");
    let th = sym("theta");
    let neg_s = -&s;
    let neg_th = -&th;
    let th_minus_1 = &th - &c(int(1));
    let mut f = Vec::new();
    match kind {
        EstimateKind::Cucv | EstimateKind::Uv => {
            f.push(Factor::bracket(nv(n_roles, 0), neg_s.clone()));
            f.push(Factor::bracket(nv(n_roles, 1), neg_s));
            f.push(Factor::bracket(nv(n_roles, 2), s));
            f.push(Factor::Mono(lv(l_roles, 0).pow(&neg_th)));
            f.push(Factor::Mono(lv(l_roles, 1).pow(&neg_th)));
            f.push(Factor::Mono(lv(l_roles, 2).pow(&th_minus_1)));
        }
        EstimateKind::Cuv => {
            f.push(Factor::bracket(nv(n_roles, 0), neg_s.clone()));
            f.push(Factor::bracket(nv(n_roles, 1), s));
            f.push(Factor::bracket(nv(n_roles, 2), neg_s));
            f.push(Factor::Mono(lv(l_roles, 0).pow(&neg_th)));
            f.push(Factor::Mono(lv(l_roles, 1).pow(&th_minus_1)));
            f.push(Factor::Mono(lv(l_roles, 2).pow(&neg_th)));
        }
        EstimateKind::OmegaCuv => {
            f.push(Factor::bracket(nv(n_roles, 0), neg_s.clone()));
            f.push(Factor::Mono(nv(n_roles, 1).pow(&Exponent::int(2))));
            f.push(Factor::bracket(nv(n_roles, 1), &s - &c(int(2))));
            f.push(Factor::bracket(nv(n_roles, 2), neg_s));
            f.push(Factor::Mono(lv(l_roles, 0).pow(&neg_th)));
            f.push(Factor::Mono(lv(l_roles, 1).pow(&th_minus_1)));
            f.push(Factor::Mono(lv(l_roles, 2).pow(&neg_th)));
        }
    }
    Summand::new(f)
}

/// The weight with `s` and `theta` bound.
pub fn weight(kind: EstimateKind, n_roles: &[Rank; 3], l_roles: &[Rank; 3], t: &Triple) -> Summand {
    weight_symbolic(kind, n_roles, l_roles).substitute_params(&t.bindings())
}

/// The multiplier norm bound for a case, with `n` and `eps` left symbolic.
pub fn norm_bound_symbolic(case: &EstimateCase) -> Summand {
    let v = Monomial::var;
    let half = rat(1, 2);
    let mut f = vec![
        Factor::Mono(Monomial::power("Lmin", half)),
        Factor::Mono(Monomial::power("Nmax", rat(-1, 2))),
        Factor::Mono(Monomial::power("Nmin", &(&sym("n") * half) - &c(half))),
    ];
    match case.subcase {
        Subcase::Triple | Subcase::Separated => {
            f.push(Factor::min(vec![v("Nmax").mul(&v("Nmin")), v("Lmed")], half).expect("distinct arguments"));
        }
        Subcase::Coherence => {
            let h_over = v("H").div(&Monomial::power("Nmin", int(2)));
            f.push(Factor::min(vec![v("H"), h_over.mul(&v("Lmed"))], half).expect("distinct arguments"));
        }
        Subcase::Generic => {
            let h_over = v("H").div(&Monomial::power("Nmin", int(2)));
            f.push(Factor::min(vec![v("H"), v("Lmed")], half).expect("distinct arguments"));
            f.push(Factor::min(vec![Monomial::one(), h_over], &c(half) - &sym("eps")).expect("distinct arguments"));
        }
    }
    Summand::new(f)
}

/// The multiplier norm bound with `n` and `eps` bound.
pub fn norm_bound(case: &EstimateCase, t: &Triple) -> Summand {
    norm_bound_symbolic(case).substitute_params(&t.bindings())
}

fn cons(l: Monomial, rel: Relation, r: Monomial) -> Constraint {
    Constraint::new(l, rel, r)
}

/// Constraints describing a case.
pub fn structural_constraints(case: &EstimateCase) -> Vec<Constraint> {
    use Relation::*;
    let v = Monomial::var;
    let one = Monomial::one;
    let sq = |m: Monomial| m.pow(&Exponent::int(2));
    let n = &case.n_roles;
    let l = &case.l_roles;
    let mut out = vec![
        cons(v("Nmin"), Le, v("Nmed")),
        cons(v("Nmed"), Le, v("Nmax")),
        cons(v("Lmin"), Le, v("Lmed")),
        cons(v("Lmed"), Le, v("Lmax")),
        cons(v("Nmax"), Sim, v("Nmed")),
        cons(v("Nmax"), Sim, v("N")),
        cons(v("Nmax"), Gtrsim, one()),
        cons(v("Lmin"), Gtrsim, one()),
    ];
    match case.modulation {
        Modulation::Low => out.push(cons(v("H"), Sim, v("Lmax"))),
        Modulation::High => {
            out.push(cons(v("Lmax"), Sim, v("Lmed")));
            out.push(cons(v("H"), Ll, v("Lmax")));
        }
    }
    if case.subcase == Subcase::Triple {
        out.push(cons(v("H"), Sim, sq(v("Nmax"))));
    } else {
        out.push(cons(v("H"), Lesssim, nv(n, 0).mul(&nv(n, 1))));
    }
    match case.pattern {
        SizePattern::AllComparable => out.push(cons(v("Nmin"), Sim, v("Nmed"))),
        SizePattern::ThreeSmall | SizePattern::TwoSmall | SizePattern::OneSmall
            if matches!(case.subcase, Subcase::Separated | Subcase::Coherence) =>
        {
            out.push(cons(v("Nmin"), Ll, v("Nmed")))
        }
        _ => {}
    }
    match case.subcase {
        Subcase::Separated => {
            out.push(cons(v("H"), Sim, sq(nv(n, 0))));
            if case.modulation == Modulation::High {
                out.push(cons(sq(v("Nmax")), Ll, v("Lmax")));
            }
        }
        Subcase::Coherence => {
            let small = case.pattern.small_index().expect("coherence has a small index");
            out.push(cons(v("H"), Sim, lv(l, small)));
            for j in 0..3 {
                if j != small {
                    out.push(cons(lv(l, j), Ll, lv(l, small)));
                }
            }
            out.push(cons(sq(nv(n, small)), Ll, v("H")));
        }
        _ => {}
    }
    out
}

/// Declared variables, outermost first; elimination runs innermost first.
pub fn case_variables() -> Vec<DyadicVar> {
    let mut vs: Vec<DyadicVar> = ["Nmax", "Nmed", "Nmin", "Lmax", "H", "Lmed", "Lmin"]
        .into_iter()
        .map(|n| DyadicVar::new(n, VarRole::Summation))
        .collect();
    vs.push(DyadicVar::new("N", VarRole::Parameter));
    vs
}

fn problem_for(case: &EstimateCase, t: &Triple, slack: SlackConfig) -> Problem {
    let mut factors = weight(case.kind, &case.n_roles, &case.l_roles, t).factors;
    factors.extend(norm_bound(case, t).factors);
    Problem::new(Summand::new(factors), structural_constraints(case), case_variables(), slack)
        .expect("case problems are well formed")
}

/// Every case of an estimate kind, in a fixed order.
pub fn enumerate_cases(kind: EstimateKind) -> Vec<EstimateCase> {
    let perms = permutations();
    let mut out = Vec::new();
    let mods = [Modulation::Low, Modulation::High];
    let mk = |modulation, subcase, pattern, n_roles, l_roles| EstimateCase { kind, modulation, subcase, pattern, n_roles, l_roles };
    let with_min_at = |i: usize| perms.iter().copied().filter(move |p| p[i] == Rank::Min);
    let with_max_at = |i: usize| perms.iter().copied().filter(move |p| p[i] == Rank::Max);
    match kind {
        EstimateKind::Cucv => {
            for m in mods {
                for np in &perms {
                    for lp in &perms {
                        out.push(mk(m, Subcase::Triple, SizePattern::Any, *np, *lp));
                    }
                }
            }
        }
        EstimateKind::Uv | EstimateKind::Cuv => {
            for m in mods {
                for np in with_min_at(2) {
                    for lp in &perms {
                        out.push(mk(m, Subcase::Separated, SizePattern::ThreeSmall, np, *lp));
                    }
                }
            }
            for (pattern, small) in [(SizePattern::TwoSmall, 1), (SizePattern::OneSmall, 0)] {
                for np in with_min_at(small) {
                    for lp in with_max_at(small) {
                        out.push(mk(Modulation::Low, Subcase::Coherence, pattern, np, lp));
                    }
                }
            }
            for m in mods {
                for np in &perms {
                    for lp in &perms {
                        out.push(mk(m, Subcase::Generic, SizePattern::AllComparable, *np, *lp));
                    }
                }
                for (pattern, small) in [(SizePattern::TwoSmall, 1), (SizePattern::OneSmall, 0)] {
                    for np in with_min_at(small) {
                        for lp in &perms {
                            out.push(mk(m, Subcase::Generic, pattern, np, *lp));
                        }
                    }
                }
            }
        }
        EstimateKind::OmegaCuv => {
            for np in with_min_at(1) {
                for lp in with_max_at(1) {
                    out.push(mk(Modulation::Low, Subcase::Coherence, SizePattern::TwoSmall, np, lp));
                }
            }
        }
    }
    out
}

/// One problem per case.
pub fn build_problems(kind: EstimateKind, t: &Triple) -> Vec<(EstimateCase, Problem)> {
    build_problems_with(kind, t, SlackConfig::default())
}

pub fn build_problems_with(kind: EstimateKind, t: &Triple, slack: SlackConfig) -> Vec<(EstimateCase, Problem)> {
    enumerate_cases(kind).into_iter().map(|c| (c, problem_for(&c, t, slack))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseVerdict {
    pub case: EstimateCase,
    pub verdict: GrowthVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub kind: EstimateKind,
    pub triple: Triple,
    pub cases: Vec<CaseVerdict>,
    pub overall: Classification,
    /// Largest exact exponent among growing cases.
    pub exponent: Option<Rational>,
    pub log_degree: u32,
    pub divergent: bool,
    /// Cases that are not bounded, or inconclusive ones when the overall verdict is inconclusive.
    pub failing: Vec<EstimateCase>,
}

impl EstimateReport {
    pub fn exponent_text(&self) -> String {
        if self.divergent {
            "inf".to_string()
        } else {
            self.exponent.map_or_else(|| "-inf".to_string(), |e| fmt_rational(&e))
        }
    }
}

/// Combines case verdicts: bounded only if every case is.
pub fn combine(kind: EstimateKind, t: &Triple, cases: Vec<CaseVerdict>) -> EstimateReport {
    let any = |c: Classification| cases.iter().any(|v| v.verdict.classification == c);
    let overall = if any(Classification::Inconclusive) {
        Classification::Inconclusive
    } else if any(Classification::Unbounded) {
        Classification::Unbounded
    } else if any(Classification::LogDivergent) {
        Classification::LogDivergent
    } else {
        Classification::Bounded
    };
    let failing = cases
        .iter()
        .filter(|v| match overall {
            Classification::Inconclusive => v.verdict.classification == Classification::Inconclusive,
            _ => v.verdict.classification != Classification::Bounded,
        })
        .map(|v| v.case)
        .collect();
    let divergent = cases.iter().any(|v| v.verdict.divergent_at_fixed_parameter);
    let mut exponent: Option<Rational> = None;
    let mut log_degree = 0;
    for v in &cases {
        if let Some(e) = v.verdict.exact_exponent {
            match exponent {
                Some(cur) if cur > e => {}
                Some(cur) if cur == e => log_degree = log_degree.max(v.verdict.log_degree),
                _ => {
                    exponent = Some(e);
                    log_degree = v.verdict.log_degree;
                }
            }
        }
    }
    EstimateReport { kind, triple: *t, cases, overall, exponent, log_degree, divergent, failing }
}

/// Runs every case of an estimate and combines the verdicts.
pub fn verify_estimate(kind: EstimateKind, t: &Triple, cfg: &EngineConfig) -> Result<EstimateReport, CaseError> {
    verify_estimate_with(kind, t, cfg, SlackConfig::default())
}

pub fn verify_estimate_with(
    kind: EstimateKind,
    t: &Triple,
    cfg: &EngineConfig,
    slack: SlackConfig,
) -> Result<EstimateReport, CaseError> {
    if !matches!(t.n, 2 | 3) {
        return Err(CaseError::Dimension(t.n));
    }
    let problems = build_problems_with(kind, t, slack);
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut distinct: Vec<&Problem> = Vec::new();
    let index: Vec<usize> = problems
        .iter()
        .map(|(_, p)| {
            *slot.entry(problem_key(p)).or_insert_with(|| {
                distinct.push(p);
                distinct.len() - 1
            })
        })
        .collect();
    let verdicts = distinct.par_iter().map(|p| verdict(p, cfg)).collect::<Result<Vec<_>, _>>()?;
    let cases = problems
        .iter()
        .zip(index)
        .map(|((case, _), i)| CaseVerdict { case: *case, verdict: verdicts[i].clone() })
        .collect();
    Ok(combine(kind, t, cases))
}

fn problem_key(p: &Problem) -> String {
    let mut f: Vec<String> = p.summand.factors.iter().map(|x| x.to_string()).collect();
    let mut c: Vec<String> = p.constraints.iter().map(|x| x.to_string()).collect();
    f.sort();
    c.sort();
    c.dedup();
    format!("{}|{}", f.join("*"), c.join(";"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub s: String,
    pub theta: String,
    pub kind: EstimateKind,
    pub verdict: Classification,
    pub exponent: String,
    pub log_degree: u32,
    pub reference: bool,
    pub boundary: bool,
    pub matches: bool,
}

impl SweepRow {
    pub fn match_label(&self) -> &'static str {
        match (self.boundary, self.matches) {
            (true, _) => "boundary",
            (false, true) => "true",
            (false, false) => "false",
        }
    }
}

pub const BOUNDARY_WIDTH: f64 = 0.01;

/// Classifies every grid point and compares with the reference predicate.
pub fn sweep(
    kind: EstimateKind,
    n: u32,
    s_grid: &[Rational],
    theta_grid: &[Rational],
    cfg: &EngineConfig,
) -> Result<Vec<SweepRow>, CaseError> {
    let points: Vec<Triple> = s_grid
        .iter()
        .flat_map(|s| theta_grid.iter().map(move |th| Triple::new(n, *s, *th)))
        .collect();
    points
        .par_iter()
        .map(|t| {
            let r = verify_estimate(kind, t, cfg)?;
            let reference = kind.reference(t);
            let bounded = r.overall == Classification::Bounded;
            Ok(SweepRow {
                n,
                s: fmt_rational(&t.s),
                theta: fmt_rational(&t.theta),
                kind,
                verdict: r.overall,
                exponent: r.exponent_text(),
                log_degree: r.log_degree,
                reference,
                boundary: kind.boundary_distance(t) <= BOUNDARY_WIDTH + 1e-12,
                matches: bounded == reference,
            })
        })
        .collect()
}

/// `lo, lo+step, ..., hi` inclusive.
pub fn grid(lo: Rational, hi: Rational, step: Rational) -> Vec<Rational> {
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi {
        out.push(x);
        x += step;
    }
    out
}

/// The summand of the worked low-modulation example at `(2, -1/2, 5/8)` after resolving
/// `min{Nmax*Nmin, Lmed} = Lmed`, with `N3` smallest and `L3` largest.
pub fn stage_summand() -> Summand {
    let h = rat(1, 2);
    Summand::new(vec![
        Factor::bracket(Monomial::var("Nmin"), -h),
        Factor::Mono(Monomial::power("Nmin", h)),
        Factor::bracket(Monomial::var("Nmed"), h),
        Factor::bracket(Monomial::var("Nmax"), h),
        Factor::Mono(Monomial::power("Nmax", -h)),
        Factor::Mono(Monomial::power("Lmin", rat(-1, 8))),
        Factor::Mono(Monomial::power("Lmed", rat(-1, 8))),
        Factor::Mono(Monomial::power("Lmax", rat(-3, 8))),
    ])
}

/// Constraints added at each refinement stage of the worked example (stage 1 adds none).
pub fn stage_constraints(stage: u32) -> Vec<Constraint> {
    use Relation::*;
    let v = Monomial::var;
    let one = Monomial::one;
    match stage {
        1 => vec![cons(v("N"), Gtrsim, one())],
        2 => vec![
            cons(v("Nmax"), Ge, Monomial::two_pow(int(1))),
            cons(v("Nmax"), Sim, v("Nmed")),
            cons(v("Nmed"), Le, v("Nmax")),
            cons(v("Nmed"), Gtrsim, one()),
            cons(v("Nmin"), Lesssim, one()),
            cons(v("Nmin"), Le, v("Nmed")),
            cons(v("Lmax"), Gg, v("Lmed")),
            cons(v("Lmed"), Ge, v("Lmin")),
            cons(v("Lmin"), Gtrsim, one()),
            cons(v("H"), Sim, v("Lmax")),
        ],
        3 => vec![
            cons(v("Lmed"), Lesssim, v("Nmax").mul(&v("Nmin"))),
            cons(v("Lmax"), Gtrsim, v("Nmax").mul(&v("Nmin"))),
            cons(v("Nmax"), Sim, v("N")),
        ],
        4 => vec![cons(v("Lmax"), Sim, Monomial::power("Nmax", int(2)))],
        _ => vec![],
    }
}

/// The worked example with the constraints of stages `1..=stage`.
pub fn stage_problem(stage: u32) -> Problem {
    let cs = (1..=stage).flat_map(stage_constraints).collect();
    Problem::new(stage_summand(), cs, case_variables(), SlackConfig::default()).expect("stage problems are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::Engine;

    fn t(n: u32, s: Rational, th: Rational) -> Triple {
        Triple::new(n, s, th)
    }

    fn sym_cfg() -> EngineConfig {
        EngineConfig::default().with_engine(Engine::Symbolic)
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(&t(2, rat(-1, 2), rat(5, 8))).unwrap());
        assert!(is_admissible(&t(2, rat(-2, 5), rat(3, 4))).unwrap());
        assert!(!is_admissible(&t(3, rat(-9, 20), rat(11, 20))).unwrap());
        assert!(is_admissible(&t(4, rat(-1, 2), rat(5, 8))).is_err());
    }

    #[test]
    fn twenty_three_examples() {
        assert!(satisfies_23ts(&t(2, rat(-3, 20), rat(3, 5))));
        assert!(!satisfies_23ts(&t(3, rat(-3, 10), rat(11, 20))));
    }

    fn rational_grid() -> Vec<(Rational, Rational)> {
        let mut out = Vec::new();
        for si in -100..0 {
            for ti in 51..100 {
                out.push((rat(si, 100), rat(ti, 100)));
            }
        }
        out
    }

    #[test]
    fn admissible_implies_lower_bound() {
        for n in [2, 3] {
            for (s, th) in rational_grid() {
                let tr = t(n, s, th);
                if is_admissible(&tr).unwrap() {
                    assert!(s >= int(2) * th + rat(n as i64 - 6, 2), "{tr}");
                }
            }
        }
    }

    #[test]
    fn twenty_three_implies_admissible_in_two_dimensions() {
        for (s, th) in rational_grid() {
            let tr = t(2, s, th);
            if satisfies_23ts(&tr) {
                assert!(is_admissible(&tr).unwrap(), "{tr}");
            }
        }
    }

    #[test]
    fn twenty_three_implies_admissible_in_three_dimensions_up_to_two_thirds() {
        for (s, th) in rational_grid() {
            let tr = t(3, s, th);
            if th <= rat(2, 3) && satisfies_23ts(&tr) {
                assert!(is_admissible(&tr).unwrap(), "{tr}");
            }
        }
    }

    #[test]
    fn twenty_three_without_admissibility_in_three_dimensions() {
        // (theta - 1)/2 = -3/20 < -3/25 but 2 theta - 3/2 = -1/10 > -3/25.
        let tr = t(3, rat(-3, 25), rat(7, 10));
        assert!(satisfies_23ts(&tr));
        assert!(!is_admissible(&tr).unwrap());
    }

    #[test]
    fn cucv_weight_example() {
        let roles_n = [Rank::Max, Rank::Med, Rank::Min];
        let roles_l = [Rank::Min, Rank::Med, Rank::Max];
        let w = weight(EstimateKind::Cucv, &roles_n, &roles_l, &t(2, rat(-1, 2), rat(5, 8)));
        let expected = Summand::new(vec![
            Factor::bracket(Monomial::var("Nmax"), rat(1, 2)),
            Factor::bracket(Monomial::var("Nmed"), rat(1, 2)),
            Factor::bracket(Monomial::var("Nmin"), rat(-1, 2)),
            Factor::Mono(Monomial::power("Lmin", rat(-5, 8))),
            Factor::Mono(Monomial::power("Lmed", rat(-5, 8))),
            Factor::Mono(Monomial::power("Lmax", rat(-3, 8))),
        ]);
        assert_eq!(w, expected);
    }

    #[test]
    fn cuv_weight_example() {
        let roles_n = [Rank::Max, Rank::Med, Rank::Min];
        let roles_l = [Rank::Min, Rank::Med, Rank::Max];
        let w = weight(EstimateKind::Cuv, &roles_n, &roles_l, &t(2, rat(-1, 2), rat(5, 8)));
        let powers: Vec<String> = w.factors.iter().map(|f| f.to_string()).collect();
        assert_eq!(
            powers,
            vec!["<Nmax>^(1/2)", "<Nmed>^(-1/2)", "<Nmin>^(1/2)", "Lmin^(-5/8)", "Lmed^(-3/8)", "Lmax^(-5/8)"]
        );
    }

    #[test]
    fn omega_weight_at_unit_shell() {
        let roles = [Rank::Max, Rank::Min, Rank::Med];
        let w = weight(EstimateKind::OmegaCuv, &roles, &[Rank::Min, Rank::Max, Rank::Med], &t(2, rat(-1, 2), rat(5, 8)));
        let part = Summand::new(w.factors[1..3].to_vec());
        let at: BTreeMap<String, i64> = [("Nmin".to_string(), 0)].into();
        let v = part.eval(&at).unwrap();
        assert!((v - 2f64.powf((-0.5 - 2.0) / 2.0)).abs() < 1e-15);
        assert!(v <= 1.0);
    }

    fn case(kind: EstimateKind, subcase: Subcase, pattern: SizePattern, m: Modulation) -> EstimateCase {
        EstimateCase {
            kind,
            modulation: m,
            subcase,
            pattern,
            n_roles: [Rank::Max, Rank::Min, Rank::Med],
            l_roles: [Rank::Min, Rank::Max, Rank::Med],
        }
    }

    #[test]
    fn norm_bound_forms() {
        let c1 = case(EstimateKind::Cucv, Subcase::Triple, SizePattern::Any, Modulation::Low);
        assert_eq!(
            norm_bound(&c1, &t(2, rat(-1, 2), rat(5, 8))).to_string(),
            "Lmin^(1/2) * Nmax^(-1/2) * Nmin^(1/2) * min{Nmax*Nmin, Lmed}^(1/2)"
        );
        let c2 = case(EstimateKind::Uv, Subcase::Coherence, SizePattern::TwoSmall, Modulation::Low);
        assert_eq!(
            norm_bound(&c2, &t(3, rat(-1, 5), rat(3, 5))).to_string(),
            "Lmin^(1/2) * Nmax^(-1/2) * Nmin * min{H, H*Lmed*Nmin^(-2)}^(1/2)"
        );
        let c3 = case(EstimateKind::Uv, Subcase::Generic, SizePattern::AllComparable, Modulation::Low);
        assert_eq!(
            norm_bound(&c3, &t(2, rat(-1, 5), rat(3, 5))).to_string(),
            "Lmin^(1/2) * Nmax^(-1/2) * Nmin^(1/2) * min{H, Lmed}^(1/2) * min{1, H*Nmin^(-2)}^(1/2)"
        );
        let eps3 = norm_bound(&c3, &t(3, rat(-1, 5), rat(7, 10)));
        assert!(eps3.to_string().ends_with("min{1, H*Nmin^(-2)}^(7/16)"));
    }

    #[test]
    fn structural_examples() {
        let c1 = case(EstimateKind::Cucv, Subcase::Triple, SizePattern::Any, Modulation::Low);
        let cs: Vec<String> = structural_constraints(&c1).iter().map(|c| c.to_string()).collect();
        for want in ["H ~ Nmax^2", "H ~ Lmax", "Nmax ~ Nmed", "Nmax ~ N", "Lmin >~ 1"] {
            assert!(cs.contains(&want.to_string()), "{want} in {cs:?}");
        }
        let mut c2 = case(EstimateKind::Uv, Subcase::Separated, SizePattern::ThreeSmall, Modulation::High);
        c2.n_roles = [Rank::Max, Rank::Med, Rank::Min];
        let cs: Vec<String> = structural_constraints(&c2).iter().map(|c| c.to_string()).collect();
        for want in ["Nmax^2 << Lmax", "Lmax ~ Lmed", "H ~ Nmax^2"] {
            assert!(cs.contains(&want.to_string()), "{want} in {cs:?}");
        }
        assert!(!cs.iter().any(|c| c.contains("min{")));
    }

    #[test]
    fn case_counts() {
        assert_eq!(enumerate_cases(EstimateKind::Cucv).len(), 72);
        assert_eq!(enumerate_cases(EstimateKind::Uv).len(), 152);
        assert_eq!(enumerate_cases(EstimateKind::Cuv).len(), 152);
        assert_eq!(enumerate_cases(EstimateKind::OmegaCuv).len(), 4);
        for c in enumerate_cases(EstimateKind::Uv) {
            if c.subcase == Subcase::Coherence {
                assert_eq!(c.modulation, Modulation::Low);
            }
        }
    }

    #[test]
    fn reversed_coherence_is_present() {
        for kind in [EstimateKind::Uv, EstimateKind::Cuv] {
            assert!(enumerate_cases(kind)
                .iter()
                .any(|c| c.subcase == Subcase::Coherence && c.pattern == SizePattern::OneSmall && c.l_roles[0] == Rank::Max));
        }
    }

    #[test]
    fn low_case_specializes_to_worked_example() {
        let tr = t(2, rat(-1, 2), rat(5, 8));
        let problems = build_problems(EstimateKind::Cucv, &tr);
        let (_, p) = problems
            .iter()
            .find(|(c, _)| {
                c.modulation == Modulation::Low
                    && c.n_roles[2] == Rank::Min
                    && c.l_roles == [Rank::Min, Rank::Med, Rank::Max]
                    && c.n_roles[0] == Rank::Max
            })
            .unwrap();
        let mut factors = p.summand.factors.clone();
        let last = factors.pop().unwrap();
        assert!(matches!(last, Factor::Min { .. }));
        factors.push(Factor::Mono(Monomial::power("Lmed", rat(1, 2))));
        let resolved = Summand::new(factors);
        let stage = stage_problem(4);
        let region = stage.region().unwrap();
        let case_region = p.region().unwrap();
        let mut checked = 0;
        for nmax in 1..=5 {
            for nmed in nmax - 1..=nmax {
                for nmin in -nmax - 2..=2 {
                    for lmax in 2 * nmax - 1..=2 * nmax + 1 {
                        for lmed in 0..=nmax + nmin + 2 {
                            for lmin in 0..=lmed {
                                for h in lmax - 1..=lmax + 1 {
                                    let at: BTreeMap<String, i64> = [
                                        ("N", nmax),
                                        ("Nmax", nmax),
                                        ("Nmed", nmed),
                                        ("Nmin", nmin),
                                        ("Lmax", lmax),
                                        ("Lmed", lmed),
                                        ("Lmin", lmin),
                                        ("H", h),
                                    ]
                                    .into_iter()
                                    .map(|(k, v)| (k.to_string(), v))
                                    .collect();
                                    if !region.contains(&at).unwrap() {
                                        continue;
                                    }
                                    if (h - 2 * nmax).abs() <= 1 {
                                        assert!(case_region.contains(&at).unwrap());
                                    }
                                    let a = resolved.eval(&at).unwrap();
                                    let b = stage.summand.eval(&at).unwrap();
                                    assert!((a / b - 1.0).abs() < 1e-12);
                                    checked += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn worked_triple_is_bounded() {
        let r = verify_estimate(EstimateKind::Cucv, &t(2, rat(-1, 2), rat(5, 8)), &sym_cfg()).unwrap();
        assert_eq!(r.overall, Classification::Bounded, "{:?}", r.failing);
    }

    #[test]
    fn below_admissible_is_unbounded() {
        let r = verify_estimate(EstimateKind::Cucv, &t(2, rat(-7, 10), rat(5, 8)), &sym_cfg()).unwrap();
        assert_eq!(r.overall, Classification::Unbounded);
        assert!(r.failing.iter().any(|c| c.modulation == Modulation::Low));
    }

    #[test]
    fn separated_subcase_vanishes_off_the_resonance() {
        let c = EstimateCase {
            kind: EstimateKind::Uv,
            modulation: Modulation::Low,
            subcase: Subcase::Separated,
            pattern: SizePattern::ThreeSmall,
            n_roles: [Rank::Max, Rank::Med, Rank::Min],
            l_roles: [Rank::Min, Rank::Med, Rank::Max],
        };
        let tr = t(2, rat(-1, 2), rat(5, 8));
        let p = problem_for(&c, &tr, SlackConfig::default())
            .with_constraints([cons(Monomial::var("H"), Relation::Ll, Monomial::power("Nmax", int(2)).div(&Monomial::two_pow(int(2))))]);
        let rep = crate::reducer::analyze(&p).unwrap();
        assert_eq!(rep.outcome, crate::reducer::SymbolicOutcome::Vanishing { empty: true });
        assert_eq!(crate::numeric::truncated_sum(&p, 5, 24).unwrap(), 0.0);
    }

    #[test]
    fn grid_is_inclusive() {
        let g = grid(rat(-7, 10), rat(-1, 20), rat(1, 20));
        assert_eq!(g.len(), 14);
        assert_eq!(*g.last().unwrap(), rat(-1, 20));
    }
}
