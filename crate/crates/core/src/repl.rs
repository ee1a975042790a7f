//! Interactive refinement: tighten constraints, re-run, and keep a history of stages.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::constraints::Constraint;
use crate::dsl::{parse_constraint, DslError};
use crate::problem::{Problem, ProblemError};
use crate::report::{Report, Stage};
use crate::verdict::{verdict, EngineConfig, VerdictError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplError {
    #[error("unknown command `{0}` (try `help`)")]
    UnknownCommand(String),
    #[error("usage: {0}")]
    Usage(&'static str),
    #[error(transparent)]
    Parse(#[from] DslError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("no constraint number {0}")]
    NoSuchConstraint(usize),
    #[error(transparent)]
    Verdict(#[from] VerdictError),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Run,
    AddWhere(String),
    Drop(usize),
    Show,
    History,
    Save(String),
    Help,
    Quit,
}

pub const HELP: &str = "commands:
  run                 verify the current problem and record a stage
  add where <c>       add a constraint, e.g. `add where Lmax ~ Nmax^2`
  drop <k>            remove constraint k (numbering as in `show`)
  show                print the current problem
  history             list recorded stages
  save <path>         write the command history for replay
  quit";

pub fn parse_command(line: &str) -> Result<Option<Command>, ReplError> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim();
    let cmd = match head {
        "run" => Command::Run,
        "show" => Command::Show,
        "history" => Command::History,
        "help" => Command::Help,
        "quit" | "exit" => Command::Quit,
        "add" => {
            let text = rest.strip_prefix("where").ok_or(ReplError::Usage("add where <constraint>"))?.trim();
            if text.is_empty() {
                return Err(ReplError::Usage("add where <constraint>"));
            }
            Command::AddWhere(text.to_string())
        }
        "drop" => Command::Drop(rest.parse().map_err(|_| ReplError::Usage("drop <k>"))?),
        "save" if !rest.is_empty() => Command::Save(rest.to_string()),
        "save" => return Err(ReplError::Usage("save <path>")),
        other => return Err(ReplError::UnknownCommand(other.to_string())),
    };
    Ok(Some(cmd))
}

#[derive(Debug, Clone)]
pub struct Session {
    problem: Problem,
    cfg: EngineConfig,
    stages: Vec<Stage>,
    log: Vec<String>,
    last: Option<Report>,
}

impl Session {
    pub fn new(problem: Problem, cfg: EngineConfig) -> Session {
        Session { problem, cfg, stages: Vec::new(), log: Vec::new(), last: None }
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// The report of the latest `run`, with the stage history attached.
    pub fn report(&self) -> Option<Report> {
        self.last.clone().map(|r| r.with_stages(self.stages.clone()))
    }

    /// Runs one command line. On error the session is unchanged.
    pub fn execute(&mut self, line: &str) -> Result<String, ReplError> {
        let Some(cmd) = parse_command(line)? else { return Ok(String::new()) };
        let out = match &cmd {
            Command::Run => self.run()?,
            Command::AddWhere(text) => {
                let cs = parse_constraint(text, &self.problem)?;
                let mut next = self.problem.clone();
                next.constraints.extend(cs.iter().cloned());
                next.validate()?;
                self.problem = next;
                let n = self.problem.constraints.len();
                cs.iter()
                    .enumerate()
                    .map(|(i, c)| format!("[{}] {c}", n - cs.len() + i + 1))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            Command::Drop(k) => {
                if *k == 0 || *k > self.problem.constraints.len() {
                    return Err(ReplError::NoSuchConstraint(*k));
                }
                let mut next = self.problem.clone();
                let gone = next.constraints.remove(k - 1);
                next.validate()?;
                self.problem = next;
                format!("dropped {gone}")
            }
            Command::Show => self.show(),
            Command::History => self.history(),
            Command::Save(path) => {
                self.save(Path::new(path))?;
                format!("saved {} commands to {path}", self.log.len())
            }
            Command::Help => HELP.to_string(),
            Command::Quit => String::new(),
        };
        if matches!(cmd, Command::Run | Command::AddWhere(_) | Command::Drop(_)) {
            self.log.push(line.trim().to_string());
        }
        Ok(out)
    }

    fn run(&mut self) -> Result<String, ReplError> {
        let v = verdict(&self.problem, &self.cfg)?;
        let report = Report::new(&self.problem, &self.cfg, &v);
        let stage = Stage {
            index: self.stages.len() + 1,
            constraints: self.problem.constraints.iter().map(Constraint::to_string).collect(),
            classification: v.classification,
            exponent: v.exponent_text(),
        };
        let mut out = format!("stage {}: {} exponent={} log_degree={}", stage.index, v.classification, stage.exponent, v.log_degree);
        for e in report.evidence.iter().chain(&report.notes) {
            out.push_str("\n  ");
            out.push_str(e);
        }
        self.stages.push(stage);
        self.last = Some(report);
        Ok(out)
    }

    fn show(&self) -> String {
        let p = &self.problem;
        let mut out = String::new();
        for line in p.to_string().lines().filter(|l| !l.starts_with("where ")) {
            out.push_str(line);
            out.push('\n');
        }
        for (i, c) in p.constraints.iter().enumerate() {
            out.push_str(&format!("[{}] where {c}\n", i + 1));
        }
        out.trim_end().to_string()
    }

    fn history(&self) -> String {
        if self.stages.is_empty() {
            return "no stages yet".to_string();
        }
        self.stages
            .iter()
            .map(|s| format!("[{}] {} exponent={} ({} constraints)", s.index, s.classification, s.exponent, s.constraints.len()))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// The replayable command log.
    pub fn script(&self) -> String {
        let mut s = String::from("# dyadsum session\n");
        for l in &self.log {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), ReplError> {
        fs::write(path, self.script()).map_err(|e| ReplError::Io(format!("{}: {e}", path.display())))
    }

    /// Re-executes a saved script from the starting problem.
    pub fn replay(problem: Problem, cfg: EngineConfig, script: &str) -> Result<Session, ReplError> {
        let mut s = Session::new(problem, cfg);
        for line in script.lines() {
            s.execute(line)?;
        }
        Ok(s)
    }
}
