//! Deterministic text and JSON renderings of verdicts, estimate runs and sweeps.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cases::{EstimateReport, SweepRow};
use crate::problem::Problem;
use crate::rational::fmt_rational;
use crate::reducer::SymbolicOutcome;
use crate::verdict::{Classification, EngineConfig, GrowthVerdict};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_HEADER: &str = "n,s,theta,kind,verdict,exponent,log_degree,reference,match";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub engine: String,
    pub ladder: (i64, i64),
    pub cutoff: u32,
    pub tol: String,
    pub slack_lesssim: u32,
    pub slack_sim: u32,
    pub gap_ll: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolicEcho {
    pub outcome: String,
    pub exponent: Option<String>,
    pub log_degree: u32,
    pub branches: usize,
    pub feasible_branches: usize,
    pub final_terms: usize,
    pub divergent_variable: Option<String>,
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEcho {
    pub k_n: i64,
    pub sum: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitEcho {
    pub fitted_exponent: f64,
    pub log_model_exponent: f64,
    pub log_degree_estimate: u32,
    pub fit_quality: f64,
    pub divergent_at: Option<i64>,
}

/// One run in an interactive session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub index: usize,
    pub constraints: Vec<String>,
    pub classification: Classification,
    pub exponent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool_version: String,
    pub problem: String,
    pub region: Vec<String>,
    pub config: ConfigEcho,
    pub symbolic: Option<SymbolicEcho>,
    pub ladder: Vec<PointEcho>,
    pub fit: Option<FitEcho>,
    pub classification: Classification,
    pub exponent: String,
    pub log_degree: u32,
    pub divergent_at_fixed_parameter: bool,
    pub evidence: Vec<String>,
    pub notes: Vec<String>,
    pub stages: Vec<Stage>,
}

impl Report {
    pub fn new(p: &Problem, cfg: &EngineConfig, v: &GrowthVerdict) -> Report {
        let region = p.region().map(|r| r.ineqs.iter().map(|q| q.to_string()).collect()).unwrap_or_default();
        let mut evidence = Vec::new();
        let symbolic = v.symbolic.as_ref().map(|s| {
            let (outcome, exponent, log_degree, var, prov) = match &s.outcome {
                SymbolicOutcome::Growth(g) => ("growth", Some(fmt_rational(&g.exponent)), g.log_degree, None, vec![]),
                SymbolicOutcome::Vanishing { empty: true } => ("empty region", None, 0, None, vec![]),
                SymbolicOutcome::Vanishing { empty: false } => ("vanishing for large parameter", None, 0, None, vec![]),
                SymbolicOutcome::Divergent { variable, provenance } => (
                    "divergent",
                    None,
                    0,
                    Some(variable.clone()),
                    provenance.iter().map(|d| d.choice.clone()).collect(),
                ),
            };
            match &s.outcome {
                SymbolicOutcome::Divergent { variable, .. } => {
                    evidence.push(format!("divergent at fixed parameter: the sum over {variable} has no finite bound"))
                }
                SymbolicOutcome::Vanishing { empty: true } => evidence.push("empty region: the sum is identically 0".into()),
                SymbolicOutcome::Vanishing { empty: false } => {
                    evidence.push("the region is empty once the parameter is large".into())
                }
                SymbolicOutcome::Growth(_) => {}
            }
            SymbolicEcho {
                outcome: outcome.to_string(),
                exponent,
                log_degree,
                branches: s.branches,
                feasible_branches: s.feasible_branches,
                final_terms: s.final_terms,
                divergent_variable: var,
                provenance: prov,
            }
        });
        let ladder = v
            .ladder
            .as_ref()
            .map(|l| l.points.iter().map(|pt| PointEcho { k_n: pt.k_n, sum: pt.sum, converged: pt.converged }).collect())
            .unwrap_or_default();
        let fit = v.ladder.as_ref().map(|l| {
            if let Some(k) = l.divergent_at {
                if v.symbolic.is_none() {
                    evidence.push(format!("divergent at fixed parameter: truncated sums at kN={k} do not settle as K grows"));
                }
            }
            FitEcho {
                fitted_exponent: l.fitted_exponent,
                log_model_exponent: l.log_model_exponent,
                log_degree_estimate: l.log_degree_estimate,
                fit_quality: l.fit_quality,
                divergent_at: l.divergent_at,
            }
        });
        Report {
            tool_version: TOOL_VERSION.to_string(),
            problem: p.to_string(),
            region,
            config: ConfigEcho {
                engine: cfg.engine.to_string(),
                ladder: cfg.ladder,
                cutoff: cfg.cutoff,
                tol: fmt_rational(&cfg.tol),
                slack_lesssim: p.slack.c_lesssim,
                slack_sim: p.slack.c_sim,
                gap_ll: p.slack.gap_ll,
            },
            symbolic,
            ladder,
            fit,
            classification: v.classification,
            exponent: v.exponent_text(),
            log_degree: v.log_degree,
            divergent_at_fixed_parameter: v.divergent_at_fixed_parameter,
            evidence,
            notes: v.notes.clone(),
            stages: Vec::new(),
        }
    }

    pub fn with_stages(mut self, stages: Vec<Stage>) -> Report {
        self.stages = stages;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "dyadsum {}", self.tool_version);
        let _ = writeln!(o, "== problem");
        for line in self.problem.lines() {
            let _ = writeln!(o, "  {line}");
        }
        let _ = writeln!(o, "== region (log2 scale)");
        for q in &self.region {
            let _ = writeln!(o, "  {q}");
        }
        let c = &self.config;
        let _ = writeln!(o, "== config");
        let _ = writeln!(
            o,
            "  engine={} ladder={}:{} cutoff={} tol={} slack: lesssim={} sim={} gap={}",
            c.engine, c.ladder.0, c.ladder.1, c.cutoff, c.tol, c.slack_lesssim, c.slack_sim, c.gap_ll
        );
        if !self.stages.is_empty() {
            let _ = writeln!(o, "== stages");
            for s in &self.stages {
                let _ = writeln!(o, "  [{}] {} (exponent {})", s.index, s.classification, s.exponent);
                for c in &s.constraints {
                    let _ = writeln!(o, "      where {c}");
                }
            }
        }
        if let Some(s) = &self.symbolic {
            let _ = writeln!(o, "== symbolic");
            let _ = writeln!(
                o,
                "  branches: {} ({} feasible), final terms: {}",
                s.branches, s.feasible_branches, s.final_terms
            );
            let _ = write!(o, "  outcome: {}", s.outcome);
            if let Some(e) = &s.exponent {
                let _ = write!(o, ", exponent {e}, log degree {}", s.log_degree);
            }
            if let Some(v) = &s.divergent_variable {
                let _ = write!(o, " in {v}");
                if !s.provenance.is_empty() {
                    let _ = write!(o, " on branch {}", s.provenance.join(", "));
                }
            }
            let _ = writeln!(o);
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(o, "== numeric ladder");
            for p in &self.ladder {
                let _ = writeln!(o, "  kN={:>3}  sum={:.9e}{}", p.k_n, p.sum, if p.converged { "" } else { "  (not converged)" });
            }
            match f.divergent_at {
                Some(k) => {
                    let _ = writeln!(o, "  divergent at kN={k}");
                }
                None => {
                    let _ = writeln!(
                        o,
                        "  fitted exponent {:.4}, log-model exponent {:.4}, log degree {}, quality {:.4}",
                        f.fitted_exponent, f.log_model_exponent, f.log_degree_estimate, f.fit_quality
                    );
                }
            }
        }
        let _ = writeln!(o, "== verdict");
        let _ = writeln!(o, "  {} exponent={} log_degree={}", self.classification, self.exponent, self.log_degree);
        for e in &self.evidence {
            let _ = writeln!(o, "  evidence: {e}");
        }
        for n in &self.notes {
            let _ = writeln!(o, "  note: {n}");
        }
        o
    }
}

/// Per-case table and overall verdict of an estimate run.
pub fn estimate_text(r: &EstimateReport) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "dyadsum {TOOL_VERSION}");
    let _ = writeln!(o, "estimate {} at (n, s, theta) = {}", r.kind, r.triple);
    let _ = writeln!(o, "{:<52} {:<13} {:>8} {:>3}", "case", "verdict", "exponent", "log");
    for c in &r.cases {
        let _ = writeln!(
            o,
            "{:<52} {:<13} {:>8} {:>3}",
            c.case.to_string(),
            c.verdict.classification.to_string(),
            c.verdict.exponent_text(),
            c.verdict.log_degree
        );
    }
    let reference = r.kind.reference(&r.triple);
    let bounded = r.overall == Classification::Bounded;
    let _ = writeln!(o, "overall: {} (exponent {}, log degree {})", r.overall, r.exponent_text(), r.log_degree);
    let _ = writeln!(o, "reference {}={}", r.kind.reference_name(), reference);
    let _ = writeln!(o, "{}", if bounded == reference { "match" } else { "MISMATCH" });
    if !r.failing.is_empty() && r.overall != Classification::Bounded {
        let _ = writeln!(o, "failing cases: {}", r.failing.len());
    }
    o
}

#[derive(Serialize)]
struct CaseEcho {
    case: String,
    verdict: Classification,
    exponent: String,
    log_degree: u32,
}

#[derive(Serialize)]
struct EstimateEcho {
    tool_version: &'static str,
    kind: String,
    n: u32,
    s: String,
    theta: String,
    overall: Classification,
    exponent: String,
    log_degree: u32,
    reference_name: &'static str,
    reference: bool,
    matches: bool,
    cases: Vec<CaseEcho>,
}

pub fn estimate_json(r: &EstimateReport) -> String {
    let reference = r.kind.reference(&r.triple);
    let echo = EstimateEcho {
        tool_version: TOOL_VERSION,
        kind: r.kind.to_string(),
        n: r.triple.n,
        s: fmt_rational(&r.triple.s),
        theta: fmt_rational(&r.triple.theta),
        overall: r.overall,
        exponent: r.exponent_text(),
        log_degree: r.log_degree,
        reference_name: r.kind.reference_name(),
        reference,
        matches: (r.overall == Classification::Bounded) == reference,
        cases: r
            .cases
            .iter()
            .map(|c| CaseEcho {
                case: c.case.to_string(),
                verdict: c.verdict.classification,
                exponent: c.verdict.exponent_text(),
                log_degree: c.verdict.log_degree,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&echo).expect("reports serialize")
}

/// CSV with a fixed header and LF line endings.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut o = String::new();
    o.push_str(CSV_HEADER);
    o.push('\n');
    for r in rows {
        let _ = writeln!(
            o,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.s,
            r.theta,
            r.kind,
            r.verdict,
            r.exponent,
            r.log_degree,
            r.reference,
            r.match_label()
        );
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{stage_problem, EstimateKind};
    use crate::dsl::parse_problem;
    use crate::rational::rat;
    use crate::verdict::{verdict, Engine};

    #[test]
    fn reports_are_reproducible() {
        let p = stage_problem(4);
        let cfg = EngineConfig { ladder: (4, 8), cutoff: 40, ..EngineConfig::default() };
        let a = Report::new(&p, &cfg, &verdict(&p, &cfg).unwrap());
        let b = Report::new(&p, &cfg, &verdict(&p, &cfg).unwrap());
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_text().contains("Bounded exponent=-1/4"));
    }

    #[test]
    fn divergence_evidence() {
        let p = stage_problem(1);
        let cfg = EngineConfig::default().with_engine(Engine::Symbolic);
        let r = Report::new(&p, &cfg, &verdict(&p, &cfg).unwrap());
        assert!(r.evidence.iter().any(|e| e.starts_with("divergent at fixed parameter")));
        assert_eq!(r.classification, Classification::Unbounded);
    }

    #[test]
    fn empty_region_evidence() {
        let p = parse_problem("param N\nvar A\nsum A\nwhere A << N\nwhere A >= N").unwrap();
        let cfg = EngineConfig::default().with_engine(Engine::Symbolic);
        let r = Report::new(&p, &cfg, &verdict(&p, &cfg).unwrap());
        assert_eq!(r.classification, Classification::Bounded);
        assert!(r.evidence.iter().any(|e| e.contains("empty region")));
    }

    #[test]
    fn csv_layout() {
        let cfg = EngineConfig::default().with_engine(Engine::Symbolic);
        let rows =
            crate::cases::sweep(EstimateKind::Cucv, 2, &[rat(-1, 2), rat(-7, 10)], &[rat(5, 8)], &cfg).unwrap();
        let csv = sweep_csv(&rows);
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("2,-1/2,5/8,cucv,Bounded,"));
        assert!(lines[1].ends_with(",true,true"));
        assert!(lines[2].starts_with("2,-7/10,5/8,cucv,Unbounded,"));
        assert!(!csv.contains('\r'));
    }
}
