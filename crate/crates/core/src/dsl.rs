//! Text format for problems (`.dsum` files).
//!
//! ```text
//! # comment
//! param N
//! var A B
//! let s = -1/2
//! set sim = 1
//! sum <A>^(s) * B^(-1) * min{A, B}^(1/2)
//! where A <~ B
//! where B ~ N
//! ```
//!
//! Lines may appear in any order. Numbers inside monomials must be powers of two.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::constraints::{Constraint, Relation, SlackConfig};
use crate::expr::{DyadicVar, Exponent, ExprError, Factor, Monomial, Summand, VarRole};
use crate::problem::{Problem, ProblemError};
use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: undeclared variable `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("line {line}: second `param` declaration")]
    DuplicateParam { line: usize },
    #[error("line {line}: `{name}` is already declared")]
    Duplicate { line: usize, name: String },
    #[error("no `sum` line")]
    MissingSum,
    #[error("line {line}: second `sum` line")]
    DuplicateSum { line: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Punct(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(text: &str, line: usize, offset: usize) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let col = offset + i + 1;
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push(Token { tok: Tok::Num(chars[start..i].iter().collect()), col });
        } else if "*/^(){}<>~=+-,".contains(ch) {
            out.push(Token { tok: Tok::Punct(ch), col });
            i += 1;
        } else {
            return Err(DslError::Syntax { line, col, msg: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

struct Ctx<'a> {
    declared: &'a BTreeMap<String, VarRole>,
    lets: &'a BTreeMap<String, Rational>,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_col: usize,
    ctx: Ctx<'a>,
    /// First name-resolution error; reported only if the line is syntactically valid.
    deferred: Option<DslError>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax { line: self.line, col: self.col(), msg: msg.into() })
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn eat(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), DslError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    /// Consumes a closing delimiter, reporting the opening one if the line ended first.
    fn close(&mut self, c: char, open: char, open_col: usize) -> Result<(), DslError> {
        if self.eat(c) {
            Ok(())
        } else if self.peek().is_none() {
            Err(DslError::Syntax { line: self.line, col: open_col, msg: format!("unclosed `{open}`") })
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn resolved<T>(&mut self, v: T) -> Result<T, DslError> {
        match self.deferred.take() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn variable(&mut self, name: &str, col: usize) -> Result<Monomial, DslError> {
        if !self.ctx.declared.contains_key(name) && self.deferred.is_none() {
            self.deferred = Some(DslError::Undeclared { line: self.line, col, name: name.to_string() });
        }
        Ok(Monomial::var(name))
    }

    fn number(&mut self) -> Result<Rational, DslError> {
        let col = self.col();
        let Some(Tok::Num(n)) = self.peek().cloned() else { return self.err("expected a number") };
        self.pos += 1;
        let mut text = n;
        if self.is_punct('/') {
            if let Some(Token { tok: Tok::Num(d), .. }) = self.toks.get(self.pos + 1).cloned() {
                self.pos += 2;
                text = format!("{text}/{d}");
            }
        }
        parse_rational(&text).map_err(|e| DslError::Syntax { line: self.line, col, msg: e.to_string() })
    }

    fn exp_term(&mut self) -> Result<Exponent, DslError> {
        match self.peek().cloned() {
            Some(Tok::Num(_)) => {
                let r = self.number()?;
                if self.eat('*') {
                    let s = self.symbol()?;
                    Ok(&s * r)
                } else {
                    Ok(Exponent::constant(r))
                }
            }
            Some(Tok::Ident(_)) => self.symbol(),
            Some(Tok::Punct('(')) => {
                let open = self.col();
                self.pos += 1;
                let e = self.affine()?;
                self.close(')', '(', open)?;
                Ok(e)
            }
            _ => self.err("expected an exponent"),
        }
    }

    fn symbol(&mut self) -> Result<Exponent, DslError> {
        let col = self.col();
        let Some(Tok::Ident(name)) = self.peek().cloned() else { return self.err("expected a symbol") };
        self.pos += 1;
        match self.ctx.lets.get(&name) {
            Some(r) => Ok(Exponent::constant(*r)),
            None => {
                if self.deferred.is_none() {
                    let msg = format!("unbound symbol `{name}` (bind it with `let`)");
                    self.deferred = Some(DslError::Syntax { line: self.line, col, msg });
                }
                Ok(Exponent::zero())
            }
        }
    }

    fn affine(&mut self) -> Result<Exponent, DslError> {
        let neg = self.eat('-');
        if !neg {
            self.eat('+');
        }
        let first = self.exp_term()?;
        let mut acc = if neg { -&first } else { first };
        loop {
            if self.eat('+') {
                acc = &acc + &self.exp_term()?;
            } else if self.eat('-') {
                acc = &acc - &self.exp_term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<Exponent, DslError> {
        if !self.eat('^') {
            return Ok(Exponent::int(1));
        }
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                let col = self.col();
                self.pos += 1;
                n.parse::<i64>().map(Exponent::int).map_err(|_| DslError::Syntax {
                    line: self.line,
                    col,
                    msg: "a bare exponent must be an integer; use `^(p/q)`".into(),
                })
            }
            Some(Tok::Ident(_)) => self.symbol(),
            Some(Tok::Punct('(')) => {
                let open = self.col();
                self.pos += 1;
                let e = self.affine()?;
                self.close(')', '(', open)?;
                Ok(e)
            }
            _ => self.err("expected an exponent after `^`"),
        }
    }

    fn mono_atom(&mut self) -> Result<Monomial, DslError> {
        let col = self.col();
        let base = match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.variable(&name, col)?
            }
            Some(Tok::Num(n)) => {
                self.pos += 1;
                power_of_two(&n).map(|k| Monomial::two_pow(Exponent::int(k))).ok_or_else(|| DslError::Syntax {
                    line: self.line,
                    col,
                    msg: format!("`{n}` is not a power of two"),
                })?
            }
            Some(Tok::Punct('(')) => {
                self.pos += 1;
                let m = self.mono()?;
                self.close(')', '(', col)?;
                m
            }
            _ => return self.err("expected a variable, a power of two or `(`"),
        };
        let p = self.power()?;
        Ok(base.pow(&p))
    }

    fn mono(&mut self) -> Result<Monomial, DslError> {
        let mut m = self.mono_atom()?;
        loop {
            if self.eat('*') {
                m = m.mul(&self.mono_atom()?);
            } else if self.eat('/') {
                m = m.div(&self.mono_atom()?);
            } else {
                return Ok(m);
            }
        }
    }

    fn mono_list(&mut self) -> Result<Vec<Monomial>, DslError> {
        let open = self.col();
        self.expect('{')?;
        let mut args = vec![self.mono()?];
        while self.eat(',') {
            args.push(self.mono()?);
        }
        self.close('}', '{', open)?;
        Ok(args)
    }

    fn factor(&mut self) -> Result<Factor, DslError> {
        let col = self.col();
        let mk = |r: Result<Factor, ExprError>, line: usize| {
            r.map_err(|e| DslError::Syntax { line, col, msg: e.to_string() })
        };
        match self.peek().cloned() {
            Some(Tok::Punct('<')) => {
                self.pos += 1;
                let arg = self.mono()?;
                self.close('>', '<', col)?;
                let p = self.power()?;
                Ok(Factor::bracket(arg, p))
            }
            Some(Tok::Ident(name)) if (name == "min" || name == "max") && self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Punct('{')) => {
                self.pos += 1;
                let args = self.mono_list()?;
                let p = self.power()?;
                let f = if name == "min" { Factor::min(args, p) } else { Factor::max(args, p) };
                mk(f, self.line)
            }
            _ => {
                let m = self.mono_atom()?;
                Ok(Factor::Mono(m))
            }
        }
    }

    fn summand(&mut self) -> Result<Summand, DslError> {
        let mut fs = vec![self.factor()?];
        while self.eat('*') {
            fs.push(self.factor()?);
        }
        if !self.at_end() {
            return self.err("expected `*` or end of line");
        }
        self.resolved(Summand::new(fs))
    }

    /// One side of a constraint: a monomial or a `min`/`max` list.
    fn side(&mut self) -> Result<(Option<bool>, Vec<Monomial>), DslError> {
        if let Some(Tok::Ident(name)) = self.peek().cloned() {
            if (name == "min" || name == "max") && self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Punct('{')) {
                self.pos += 1;
                return Ok((Some(name == "min"), self.mono_list()?));
            }
        }
        Ok((None, vec![self.mono()?]))
    }

    fn relation(&mut self) -> Result<Relation, DslError> {
        let col = self.col();
        let mut sym = String::new();
        while let Some(Token { tok: Tok::Punct(c), col: cc }) = self.toks.get(self.pos).cloned() {
            if !"<>~=".contains(c) || cc != col + sym.len() || sym.len() == 2 {
                break;
            }
            sym.push(c);
            self.pos += 1;
        }
        Relation::from_symbol(&sym).ok_or_else(|| DslError::Syntax {
            line: self.line,
            col,
            msg: format!("expected one of ~ <~ >~ << >> <= >=, found `{sym}`"),
        })
    }

    fn constraint(&mut self) -> Result<Vec<Constraint>, DslError> {
        let start = self.col();
        let (lk, lhs) = self.side()?;
        let rel = self.relation()?;
        let (rk, rhs) = self.side()?;
        if !self.at_end() {
            return self.err("expected end of line");
        }
        let upper = matches!(rel, Relation::Lesssim | Relation::Ll | Relation::Le);
        let lower = matches!(rel, Relation::Gtrsim | Relation::Gg | Relation::Ge);
        let ok_left = match lk {
            None => true,
            Some(is_min) => (upper && !is_min) || (lower && is_min),
        };
        let ok_right = match rk {
            None => true,
            Some(is_min) => (upper && is_min) || (lower && !is_min),
        };
        self.resolved(())?;
        if !ok_left || !ok_right {
            return Err(DslError::Syntax {
                line: self.line,
                col: start,
                msg: "this min/max constraint is a disjunction; only conjunctive forms are supported".into(),
            });
        }
        Ok(lhs.iter().flat_map(|l| rhs.iter().map(move |r| Constraint::new(l.clone(), rel, r.clone()))).collect())
    }
}

fn power_of_two(n: &str) -> Option<i64> {
    let v: u64 = n.parse().ok()?;
    v.is_power_of_two().then(|| v.trailing_zeros() as i64)
}

struct Line<'t> {
    no: usize,
    keyword: &'t str,
    rest: &'t str,
    offset: usize,
}

fn split_lines(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let lead = body.len() - trimmed.len();
        let kw_len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let keyword = &trimmed[..kw_len];
        out.push(Line { no: i + 1, keyword, rest: &trimmed[kw_len..], offset: lead + kw_len });
    }
    out
}

fn ident_list(l: &Line<'_>) -> Result<Vec<(String, usize)>, DslError> {
    let toks = lex(l.rest, l.no, l.offset)?;
    toks.into_iter()
        .map(|t| match t.tok {
            Tok::Ident(s) => Ok((s, t.col)),
            _ => Err(DslError::Syntax { line: l.no, col: t.col, msg: "expected a name".into() }),
        })
        .collect()
}

/// `name = value` with a rational (or integer) value.
fn binding(l: &Line<'_>) -> Result<(String, Rational), DslError> {
    let eq = l.rest.find('=').ok_or_else(|| DslError::Syntax {
        line: l.no,
        col: l.offset + l.rest.len() + 1,
        msg: "expected `=`".into(),
    })?;
    let name = l.rest[..eq].trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(DslError::Syntax { line: l.no, col: l.offset + 1, msg: "expected a name before `=`".into() });
    }
    let value = l.rest[eq + 1..].trim();
    let col = l.offset + eq + 2;
    let r = parse_rational(value).map_err(|e| DslError::Syntax { line: l.no, col, msg: e.to_string() })?;
    Ok((name.to_string(), r))
}

/// Parses a problem file.
///
/// ```
/// use dyadsum::dsl::parse_problem;
/// let p = parse_problem("param B\nvar A\nsum A\nwhere A <~ B").unwrap();
/// assert_eq!(p.param(), "B");
/// assert_eq!(p.summation_vars(), vec!["A".to_string()]);
/// assert!(parse_problem("param N\nvar A\nsum A^(1/2\nwhere A <~ N").is_err());
/// ```
pub fn parse_problem(text: &str) -> Result<Problem, DslError> {
    let lines = split_lines(text);
    let mut variables: Vec<DyadicVar> = Vec::new();
    let mut declared: BTreeMap<String, VarRole> = BTreeMap::new();
    let mut lets: BTreeMap<String, Rational> = BTreeMap::new();
    let mut fixed_values: BTreeMap<String, i64> = BTreeMap::new();
    let mut slack = SlackConfig::default();
    let mut param_line: Option<usize> = None;
    let mut declare = |name: String, role: VarRole, line: usize, vars: &mut Vec<DyadicVar>| {
        if declared.insert(name.clone(), role).is_some() {
            return Err(DslError::Duplicate { line, name });
        }
        vars.push(DyadicVar::new(name, role));
        Ok(())
    };
    for l in &lines {
        match l.keyword {
            "param" => {
                if param_line.is_some() {
                    return Err(DslError::DuplicateParam { line: l.no });
                }
                param_line = Some(l.no);
                let names = ident_list(l)?;
                if names.len() != 1 {
                    return Err(DslError::Syntax { line: l.no, col: l.offset + 1, msg: "`param` takes exactly one name".into() });
                }
                declare(names[0].0.clone(), VarRole::Parameter, l.no, &mut variables)?;
            }
            "var" => {
                for (n, _) in ident_list(l)? {
                    declare(n, VarRole::Summation, l.no, &mut variables)?;
                }
            }
            "fixed" => {
                let (n, v) = binding(l)?;
                if !v.is_integer() {
                    return Err(DslError::Syntax { line: l.no, col: l.offset + 1, msg: "a fixed value must be an integer".into() });
                }
                declare(n.clone(), VarRole::Fixed, l.no, &mut variables)?;
                fixed_values.insert(n, *v.numer());
            }
            "let" => {
                let (n, v) = binding(l)?;
                if lets.insert(n.clone(), v).is_some() {
                    return Err(DslError::Duplicate { line: l.no, name: n });
                }
            }
            "set" => {
                let (n, v) = binding(l)?;
                let bad = || DslError::Syntax { line: l.no, col: l.offset + 1, msg: "slack values are non-negative integers".into() };
                if !v.is_integer() || *v.numer() < 0 {
                    return Err(bad());
                }
                let v = u32::try_from(*v.numer()).map_err(|_| bad())?;
                match n.as_str() {
                    "lesssim" => slack.c_lesssim = v,
                    "sim" => slack.c_sim = v,
                    "gap" => slack.gap_ll = v,
                    other => {
                        return Err(DslError::Syntax {
                            line: l.no,
                            col: l.offset + 1,
                            msg: format!("unknown setting `{other}` (expected lesssim, sim or gap)"),
                        })
                    }
                }
            }
            "sum" | "where" => {}
            other => {
                return Err(DslError::Syntax {
                    line: l.no,
                    col: l.offset - other.len() + 1,
                    msg: format!("unknown keyword `{other}`"),
                })
            }
        }
    }
    let mut summand = None;
    let mut constraints = Vec::new();
    for l in &lines {
        let ctx = Ctx { declared: &declared, lets: &lets };
        let mut p = Parser { toks: lex(l.rest, l.no, l.offset)?, pos: 0, line: l.no, end_col: l.offset + l.rest.len() + 1, ctx, deferred: None };
        match l.keyword {
            "sum" => {
                if summand.is_some() {
                    return Err(DslError::DuplicateSum { line: l.no });
                }
                summand = Some(p.summand()?);
            }
            "where" => constraints.extend(p.constraint()?),
            _ => {}
        }
    }
    let summand = summand.ok_or(DslError::MissingSum)?;
    let problem = Problem { summand, constraints, variables, slack, fixed_values };
    problem.validate()?;
    Ok(problem)
}

/// Parses the text after `where` against the variables of `p`.
pub fn parse_constraint(text: &str, p: &Problem) -> Result<Vec<Constraint>, DslError> {
    let declared: BTreeMap<String, VarRole> = p.variables.iter().map(|v| (v.name.clone(), v.role)).collect();
    let lets = BTreeMap::new();
    let ctx = Ctx { declared: &declared, lets: &lets };
    let mut parser = Parser { toks: lex(text, 1, 0)?, pos: 0, line: 1, end_col: text.len() + 1, ctx, deferred: None };
    parser.constraint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    #[test]
    fn elementary_sum() {
        let p = parse_problem("param B\nvar A\nsum A\nwhere A <~ B").unwrap();
        assert_eq!(p.summand, Summand::new(vec![Factor::Mono(Monomial::var("A"))]));
        assert_eq!(p.constraints, vec![Constraint::new(Monomial::var("A"), Relation::Lesssim, Monomial::var("B"))]);
        assert_eq!(p.param(), "B");
    }

    #[test]
    fn unclosed_parenthesis_points_at_it() {
        let err = parse_problem("sum A^(1/2").unwrap_err();
        assert_eq!(err, DslError::Syntax { line: 1, col: 7, msg: "unclosed `(`".into() });
    }

    #[test]
    fn undeclared_variable() {
        let err = parse_problem("param N\nvar A\nsum A * C\nwhere A <~ N").unwrap_err();
        assert_eq!(err, DslError::Undeclared { line: 3, col: 9, name: "C".into() });
    }

    #[test]
    fn two_params() {
        let err = parse_problem("param N\nparam M\nsum 1").unwrap_err();
        assert_eq!(err, DslError::DuplicateParam { line: 2 });
    }

    #[test]
    fn factors_and_exponents() {
        let text = "param N\nvar A B\nlet s = -1/2\nsum <A>^(s) * (A*B^2)^(1/2) * max{A, B/4}^(-1) * 8 * B^3\nwhere A <= N\nwhere B ~ N";
        let p = parse_problem(text).unwrap();
        let f = &p.summand.factors;
        assert_eq!(f[0], Factor::bracket(Monomial::var("A"), rat(-1, 2)));
        assert_eq!(f[1], Factor::Mono(Monomial::var("A").mul(&Monomial::power("B", 2)).pow(&Exponent::constant(rat(1, 2)))));
        assert_eq!(
            f[2],
            Factor::max(vec![Monomial::var("A"), Monomial::var("B").div(&Monomial::two_pow(Exponent::int(2)))], -1).unwrap()
        );
        assert_eq!(f[3], Factor::Mono(Monomial::two_pow(Exponent::int(3))));
        assert_eq!(f[4], Factor::Mono(Monomial::power("B", 3)));
    }

    #[test]
    fn bare_exponent_is_an_integer() {
        let p = parse_problem("param N\nvar A\nsum A\nwhere A <= N^2/4").unwrap();
        assert_eq!(p.constraints[0].rhs, Monomial::power("N", 2).div(&Monomial::two_pow(Exponent::int(2))));
    }

    #[test]
    fn not_a_power_of_two() {
        let err = parse_problem("param N\nvar A\nsum 3 * A\nwhere A <~ N").unwrap_err();
        assert!(matches!(err, DslError::Syntax { line: 3, col: 5, .. }));
    }

    #[test]
    fn conjunctive_min_expands() {
        let p = parse_problem("param N\nvar A B\nsum A\nwhere A <~ min{B, N}\nwhere max{A, B} <= N").unwrap();
        assert_eq!(p.constraints.len(), 4);
        let err = parse_problem("param N\nvar A B\nsum A\nwhere A <~ max{B, N}").unwrap_err();
        assert!(err.to_string().contains("disjunction"));
    }

    #[test]
    fn relations_need_adjacent_symbols() {
        assert!(parse_problem("param N\nvar A\nsum A\nwhere A < ~ N").is_err());
        for r in ["~", "<~", ">~", "<<", ">>", "<=", ">="] {
            let p = parse_problem(&format!("param N\nvar A\nsum A\nwhere A {r} N")).unwrap();
            assert_eq!(p.constraints[0].rel.symbol(), r);
        }
    }

    #[test]
    fn settings_and_fixed() {
        let p = parse_problem("param N\nvar A\nfixed X = 3\nset sim = 2\nsum A * X\nwhere A ~ N").unwrap();
        assert_eq!(p.slack.c_sim, 2);
        assert_eq!(p.fixed_values["X"], 3);
        assert!(parse_problem("param N\nvar A\nset loose = 2\nsum A\nwhere A ~ N").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let p = parse_problem("# header\n\nparam N   # the parameter\nvar A\nsum A\nwhere A ~ N\n").unwrap();
        assert_eq!(p.constraints.len(), 1);
    }

    #[test]
    fn stage_file_matches_constructed_problem() {
        let text = include_str!("../../../problems/stage4.dsum");
        let p = parse_problem(text).unwrap();
        let q = crate::cases::stage_problem(4);
        assert_eq!(p.summand, q.summand);
        assert_eq!(p.variables.iter().filter(|v| v.role == VarRole::Summation).count(), 7);
        assert_eq!(p.region().unwrap(), q.region().unwrap());
    }

    #[test]
    fn display_round_trips_case_problems() {
        let t = crate::cases::Triple::new(3, rat(-1, 5), rat(7, 10));
        for kind in crate::cases::EstimateKind::ALL {
            for (_, p) in crate::cases::build_problems(kind, &t).into_iter().take(12) {
                let q = parse_problem(&p.to_string()).unwrap();
                assert_eq!(q.summand, p.summand);
                assert_eq!(q.constraints, p.constraints);
                assert_eq!(q.to_string(), p.to_string());
            }
        }
    }

    fn arb_exp() -> impl Strategy<Value = Rational> {
        (-8i64..=8, 1i64..=4).prop_map(|(a, b)| rat(a, b))
    }

    fn arb_mono(vars: &'static [&'static str]) -> impl Strategy<Value = Monomial> {
        (-3i64..=3, proptest::collection::vec((0..vars.len(), arb_exp()), 0..3)).prop_map(move |(c, ps)| {
            let mut m = Monomial::two_pow(Exponent::int(c));
            for (i, e) in ps {
                m = m.mul(&Monomial::power(vars[i], e));
            }
            m
        })
    }

    fn arb_factor() -> impl Strategy<Value = Factor> {
        const V: &[&str] = &["A", "B", "N"];
        prop_oneof![
            arb_mono(V).prop_map(Factor::Mono),
            (arb_mono(V), arb_exp()).prop_map(|(m, p)| Factor::bracket(m, p)),
            (arb_mono(V), arb_mono(V), arb_exp(), any::<bool>()).prop_filter_map("distinct", |(a, b, p, is_min)| {
                if is_min { Factor::min(vec![a, b], p).ok() } else { Factor::max(vec![a, b], p).ok() }
            }),
        ]
    }

    proptest! {
        #[test]
        fn printed_problems_parse_back(
            factors in proptest::collection::vec(arb_factor(), 1..4),
            rels in proptest::collection::vec((0usize..7, arb_mono(&["A", "B"])), 0..3),
        ) {
            let rel_all = [Relation::Lesssim, Relation::Gtrsim, Relation::Sim, Relation::Ll, Relation::Gg, Relation::Le, Relation::Ge];
            let mut cs = vec![Constraint::new(Monomial::var("B"), Relation::Sim, Monomial::var("N"))];
            for (r, m) in rels {
                cs.push(Constraint::new(Monomial::var("A"), rel_all[r], m));
            }
            let p = Problem::new(
                Summand::new(factors),
                cs,
                vec![DyadicVar::new("N", VarRole::Parameter), DyadicVar::new("A", VarRole::Summation), DyadicVar::new("B", VarRole::Summation)],
                SlackConfig::default(),
            ).unwrap();
            let q = parse_problem(&p.to_string()).unwrap();
            prop_assert_eq!(&q, &p);
        }
    }
}
