use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dyadsum::cases::{grid, sweep, verify_estimate_with, EstimateKind, Triple};
use dyadsum::dsl::parse_problem;
use dyadsum::problem::Problem;
use dyadsum::rational::{parse_rational, Rational};
use dyadsum::repl::{parse_command, Command, Session};
use dyadsum::report::{estimate_json, estimate_text, sweep_csv, Report};
use dyadsum::verdict::{verdict, Classification, Engine, EngineConfig};
use dyadsum::SlackConfig;

const EXIT_USAGE: u8 = 64;
const EXIT_PARSE: u8 = 65;
const EXIT_IO: u8 = 66;
const EXIT_ENGINE: u8 = 70;

/// Decide whether weighted sums over dyadic scales stay bounded as a parameter grows.
#[derive(Parser)]
#[command(name = "dyadsum", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify a problem file and print a report.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Refine a problem interactively.
    Repl {
        file: PathBuf,
        /// Execute a saved command history before reading input.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check one bilinear estimate at a triple (n, s, theta).
    Paper {
        #[arg(long)]
        kind: EstimateKind,
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        s: Rational,
        #[arg(long, allow_hyphen_values = true, value_parser = rational)]
        theta: Rational,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check an estimate over a grid and write CSV.
    Sweep {
        #[arg(long)]
        kind: EstimateKind,
        #[arg(long)]
        n: u32,
        /// `lo:hi:step`
        #[arg(long, allow_hyphen_values = true, value_parser = range)]
        s: (Rational, Rational, Rational),
        /// `lo:hi:step`
        #[arg(long, allow_hyphen_values = true, value_parser = range)]
        theta: (Rational, Rational, Rational),
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone)]
struct Opts {
    /// Parameter ladder `lo:hi` in log2 scale.
    #[arg(long, value_parser = ladder, default_value = "4:12")]
    ladder: (i64, i64),
    /// Truncation cutoff K for the numeric engine.
    #[arg(long, default_value_t = 64)]
    cutoff: u32,
    #[arg(long)]
    slack_sim: Option<u32>,
    #[arg(long)]
    slack_lesssim: Option<u32>,
    #[arg(long)]
    gap_ll: Option<u32>,
    /// Growth tolerance for numeric classification.
    #[arg(long, value_parser = rational, default_value = "0.05")]
    tol: Rational,
    /// symbolic, numeric or both (default: both for files, symbolic for estimates).
    #[arg(long)]
    engine: Option<Engine>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write CSV here instead of stdout (sweep).
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Opts {
    fn config(&self, default_engine: Engine) -> EngineConfig {
        EngineConfig {
            ladder: self.ladder,
            cutoff: self.cutoff,
            tol: self.tol,
            engine: self.engine.unwrap_or(default_engine),
            ..EngineConfig::default()
        }
    }

    fn slack(&self, base: SlackConfig) -> SlackConfig {
        SlackConfig {
            c_lesssim: self.slack_lesssim.unwrap_or(base.c_lesssim),
            c_sim: self.slack_sim.unwrap_or(base.c_sim),
            gap_ll: self.gap_ll.unwrap_or(base.gap_ll),
        }
    }
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn ladder(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: i64 = a.trim().parse().map_err(|_| format!("bad ladder start `{a}`"))?;
    let hi: i64 = b.trim().parse().map_err(|_| format!("bad ladder end `{b}`"))?;
    if hi - lo < 4 {
        return Err("the ladder needs at least 5 points".into());
    }
    Ok((lo, hi))
}

fn range(s: &str) -> Result<(Rational, Rational, Rational), String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let step = rational(step)?;
            if step <= Rational::from_integer(0) {
                return Err("step must be positive".into());
            }
            Ok((rational(lo)?, rational(hi)?, step))
        }
        [x] => {
            let x = rational(x)?;
            Ok((x, x, Rational::from_integer(1)))
        }
        _ => Err("expected lo:hi:step or a single value".into()),
    }
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> Failure {
    Failure { code, msg: msg.to_string() }
}

fn load(file: &Path, opts: &Opts) -> Result<Problem, Failure> {
    let text = fs::read_to_string(file).map_err(|e| fail(EXIT_IO, format!("{}: {e}", file.display())))?;
    let mut p = parse_problem(&text).map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", file.display())))?;
    p.slack = opts.slack(p.slack);
    Ok(p)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn check_n(n: u32) -> Result<(), Failure> {
    if matches!(n, 2 | 3) {
        Ok(())
    } else {
        Err(fail(EXIT_USAGE, format!("--n must be 2 or 3, got {n}")))
    }
}

fn run(cli: Cli) -> Result<Classification, Failure> {
    match cli.command {
        Cmd::Verify { file, opts } => {
            let p = load(&file, &opts)?;
            let cfg = opts.config(Engine::Both);
            let v = verdict(&p, &cfg).map_err(|e| fail(EXIT_ENGINE, e))?;
            let report = Report::new(&p, &cfg, &v);
            print!("{}", report.to_text());
            if let Some(path) = &opts.json {
                write_file(path, &report.to_json())?;
            }
            Ok(v.classification)
        }
        Cmd::Repl { file, replay, opts } => {
            let p = load(&file, &opts)?;
            let cfg = opts.config(Engine::Both);
            let mut session = match &replay {
                Some(path) => {
                    let script = fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
                    let s = Session::replay(p, cfg, &script).map_err(|e| fail(EXIT_PARSE, e))?;
                    for st in s.stages() {
                        println!("stage {}: {} exponent={}", st.index, st.classification, st.exponent);
                    }
                    s
                }
                None => Session::new(p, cfg),
            };
            let stdin = io::stdin();
            let interactive = stdin.is_terminal();
            loop {
                if interactive {
                    print!("dyadsum> ");
                    let _ = io::stdout().flush();
                }
                let mut line = String::new();
                if stdin.lock().read_line(&mut line).map_err(|e| fail(EXIT_IO, e))? == 0 {
                    break;
                }
                if matches!(parse_command(&line), Ok(Some(Command::Quit))) {
                    break;
                }
                match session.execute(&line) {
                    Ok(out) if out.is_empty() => {}
                    Ok(out) => println!("{out}"),
                    Err(e) => println!("error: {e}"),
                }
            }
            let report = session.report();
            if let (Some(path), Some(r)) = (&opts.json, &report) {
                write_file(path, &r.to_json())?;
            }
            Ok(session.stages().last().map_or(Classification::Bounded, |s| s.classification))
        }
        Cmd::Paper { kind, n, s, theta, opts } => {
            check_n(n)?;
            let cfg = opts.config(Engine::Symbolic);
            let t = Triple::new(n, s, theta);
            let r = verify_estimate_with(kind, &t, &cfg, opts.slack(SlackConfig::default())).map_err(|e| fail(EXIT_ENGINE, e))?;
            print!("{}", estimate_text(&r));
            if let Some(path) = &opts.json {
                write_file(path, &estimate_json(&r))?;
            }
            Ok(r.overall)
        }
        Cmd::Sweep { kind, n, s, theta, opts } => {
            check_n(n)?;
            if opts.slack(SlackConfig::default()) != SlackConfig::default() {
                return Err(fail(EXIT_USAGE, "slack flags are not supported by sweep"));
            }
            let cfg = opts.config(Engine::Symbolic);
            let rows = sweep(kind, n, &grid(s.0, s.1, s.2), &grid(theta.0, theta.1, theta.2), &cfg)
                .map_err(|e| fail(EXIT_ENGINE, e))?;
            let csv = sweep_csv(&rows);
            match &opts.csv {
                Some(path) => write_file(path, &csv)?,
                None => print!("{csv}"),
            }
            if let Some(path) = &opts.json {
                let json = serde_json::to_string_pretty(&rows).map_err(|e| fail(EXIT_IO, e))?;
                write_file(path, &json)?;
            }
            let all_match = rows.iter().all(|r| r.boundary || r.matches);
            Ok(if all_match { Classification::Bounded } else { Classification::Unbounded })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(c) => ExitCode::from(c.exit_code() as u8),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
