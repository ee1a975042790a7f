//! Dense affine forms and integer-normalized inequalities over a fixed variable space.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::rational::{int, lcm_denominators, Rational};

/// `sum a[i] * k_i + c`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Lin {
    pub a: Vec<Rational>,
    pub c: Rational,
}

impl Lin {
    pub fn zero(n: usize) -> Lin {
        Lin { a: vec![Rational::zero(); n], c: Rational::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }

    pub fn add(&self, o: &Lin) -> Lin {
        Lin { a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(), c: self.c + o.c }
    }

    pub fn sub(&self, o: &Lin) -> Lin {
        Lin { a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(), c: self.c - o.c }
    }

    /// Replaces `k_v` by the form `f` (which must not mention `v`).
    pub fn substitute(&self, v: usize, f: &Lin) -> Lin {
        let cv = self.a[v];
        if cv.is_zero() {
            return self.clone();
        }
        let mut out = self.clone();
        out.a[v] = Rational::zero();
        for (i, x) in f.a.iter().enumerate() {
            out.a[i] += cv * x;
        }
        out.c += cv * f.c;
        out
    }

    pub fn plus_const(&self, r: Rational) -> Lin {
        Lin { a: self.a.clone(), c: self.c + r }
    }

    pub fn to_named(&self, names: &[String]) -> (BTreeMap<String, Rational>, Rational) {
        let m = self
            .a
            .iter()
            .zip(names)
            .filter(|(x, _)| !x.is_zero())
            .map(|(x, n)| (n.clone(), *x))
            .collect();
        (m, self.c)
    }
}

/// `sum a[i] * k_i <= b` with coprime integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Ineq {
    pub a: Vec<i64>,
    pub b: i64,
}

pub(crate) enum Norm {
    True,
    False,
    Ineq(Ineq),
}

fn floor_div(n: i128, d: i128) -> i128 {
    Integer::div_floor(&n, &d)
}

/// Normalizes `sum a k <= b` to coprime integer coefficients, tightening the bound on the lattice.
pub(crate) fn normalize(a: &[Rational], b: Rational) -> Norm {
    let l = lcm_denominators(a.iter()) as i128;
    let ints: Vec<i128> = a.iter().map(|x| (*x.numer() as i128) * (l / *x.denom() as i128)).collect();
    let g = ints.iter().fold(0i128, |acc, x| acc.gcd(x));
    if g == 0 {
        return if b.is_negative() { Norm::False } else { Norm::True };
    }
    let num = (*b.numer() as i128) * l;
    let den = (*b.denom() as i128) * g;
    let bound = floor_div(num, den);
    Norm::Ineq(Ineq { a: ints.iter().map(|x| (x / g) as i64).collect(), b: bound as i64 })
}

fn normalize_int(a: Vec<i128>, b: i128) -> Norm {
    let g = a.iter().fold(0i128, |acc, x| acc.gcd(x));
    if g == 0 {
        return if b < 0 { Norm::False } else { Norm::True };
    }
    Norm::Ineq(Ineq { a: a.iter().map(|x| (x / g) as i64).collect(), b: floor_div(b, g) as i64 })
}

impl Ineq {
    /// `f <= 0`.
    pub fn le_zero(f: &Lin) -> Norm {
        normalize(&f.a, -f.c)
    }

    /// `f <= g`.
    pub fn le(f: &Lin, g: &Lin) -> Norm {
        Ineq::le_zero(&f.sub(g))
    }

    /// The bound on `k_v` as an affine form in the remaining variables.
    pub fn bound_form(&self, v: usize) -> Lin {
        let av = int(self.a[v]);
        let mut f = Lin::zero(self.a.len());
        for (i, x) in self.a.iter().enumerate() {
            if i != v && *x != 0 {
                f.a[i] = -int(*x) / av;
            }
        }
        f.c = int(self.b) / av;
        f
    }

    /// Eliminates `v` between an upper bound (`self.a[v] > 0`) and a lower bound.
    pub fn combine(&self, lower: &Ineq, v: usize) -> Norm {
        let p = self.a[v] as i128;
        let q = -(lower.a[v] as i128);
        debug_assert!(p > 0 && q > 0);
        let a = self.a.iter().zip(&lower.a).map(|(x, y)| q * *x as i128 + p * *y as i128).collect();
        normalize_int(a, q * self.b as i128 + p * lower.b as i128)
    }
}

/// Deduplicates by direction, keeping the tightest bound. `None` if a contradiction is visible.
pub(crate) fn canonical(ineqs: Vec<Ineq>) -> Option<Vec<Ineq>> {
    let mut by_dir: BTreeMap<Vec<i64>, i64> = BTreeMap::new();
    for q in ineqs {
        let q = match normalize_int(q.a.iter().map(|x| *x as i128).collect(), q.b as i128) {
            Norm::True => continue,
            Norm::False => return None,
            Norm::Ineq(q) => q,
        };
        by_dir.entry(q.a).and_modify(|b| *b = (*b).min(q.b)).or_insert(q.b);
    }
    for (a, b) in &by_dir {
        let neg: Vec<i64> = a.iter().map(|x| -x).collect();
        if let Some(nb) = by_dir.get(&neg) {
            if (*b as i128) + (*nb as i128) < 0 {
                return None;
            }
        }
    }
    Some(by_dir.into_iter().map(|(a, b)| Ineq { a, b }).collect())
}

/// Collects normalized inequalities; `None` if any is a contradiction.
pub(crate) fn collect(items: impl IntoIterator<Item = Norm>) -> Option<Vec<Ineq>> {
    let mut out = Vec::new();
    for n in items {
        match n {
            Norm::True => {}
            Norm::False => return None,
            Norm::Ineq(q) => out.push(q),
        }
    }
    Some(out)
}

const FM_LIMIT: usize = 4000;

/// Fourier-Motzkin emptiness test with lattice tightening.
///
/// Returns `false` only when the system provably has no integer solution. Systems that grow
/// past an internal size limit are reported feasible.
pub(crate) fn feasible(ineqs: &[Ineq]) -> bool {
    let Some(mut cur) = canonical(ineqs.to_vec()) else { return false };
    loop {
        let n = match cur.first() {
            Some(q) => q.a.len(),
            None => return true,
        };
        let mut best: Option<(usize, usize)> = None;
        for v in 0..n {
            let pos = cur.iter().filter(|q| q.a[v] > 0).count();
            let neg = cur.iter().filter(|q| q.a[v] < 0).count();
            if pos + neg == 0 {
                continue;
            }
            let cost = pos * neg;
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((v, cost));
            }
        }
        let Some((v, _)) = best else { return true };
        let (mut ups, mut lows, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for q in cur {
            match q.a[v].signum() {
                1 => ups.push(q),
                -1 => lows.push(q),
                _ => rest.push(q),
            }
        }
        for u in &ups {
            for l in &lows {
                match u.combine(l, v) {
                    Norm::True => {}
                    Norm::False => return false,
                    Norm::Ineq(q) => rest.push(q),
                }
            }
        }
        match canonical(rest) {
            None => return false,
            Some(next) => {
                if next.len() > FM_LIMIT {
                    return true;
                }
                cur = next;
            }
        }
    }
}

/// Integer interval of `k_v` when every inequality mentions only `v`.
pub(crate) fn single_var_interval(ineqs: &[Ineq], v: usize) -> (Option<i64>, Option<i64>) {
    let (mut lo, mut hi): (Option<i64>, Option<i64>) = (None, None);
    for q in ineqs {
        let a = q.a[v];
        if a > 0 {
            let h = Integer::div_floor(&(q.b as i128), &(a as i128)) as i64;
            hi = Some(hi.map_or(h, |x| x.min(h)));
        } else if a < 0 {
            let l = Integer::div_ceil(&(q.b as i128), &(a as i128)) as i64;
            lo = Some(lo.map_or(l, |x| x.max(l)));
        }
    }
    (lo, hi)
}
