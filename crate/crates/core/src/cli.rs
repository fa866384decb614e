//! Command dispatch for the `spectral-mfg` binary.
//!
//! Every command writes `summary.txt` (`key = value` lines) into the output
//! directory plus command-specific CSV and field files. Exit status is 0 on
//! success, 2 when a hypothesis or verification verdict fails, 1 on error.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::config::{parse_config, ProblemConfig};
use crate::error::{Error, Result};
use crate::fieldio::write_space_time;
use crate::solver::{max_passing_delta_g, picard_solve, smallness_check, SmallnessReport};
use crate::verify::{
    bound_suite, continuous_dependence_experiment, default_partner, refinement_study,
    weak_star_experiment,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_HYPOTHESIS: u8 = 2;

/// Largest allowed relative gap between the Picard and oracle solutions.
pub const ORACLE_GAP_TOL: f64 = 1e-4;
/// Smallest acceptable observed order of the Picard/oracle gap.
pub const ORACLE_MIN_ORDER: f64 = 1.8;
/// Largest allowed final/first pairing error ratio in the weak-* run.
pub const WEAK_STAR_REDUCTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    CheckSmallness,
    VerifyBounds,
    ContinuousDependence,
    WeakStar,
    OracleCompare,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Solve,
        Command::CheckSmallness,
        Command::VerifyBounds,
        Command::ContinuousDependence,
        Command::WeakStar,
        Command::OracleCompare,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::CheckSmallness => "check-smallness",
            Command::VerifyBounds => "verify-bounds",
            Command::ContinuousDependence => "continuous-dependence",
            Command::WeakStar => "weak-star",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Command::ALL.iter().map(Command::name).collect();
                Error::InvalidArgument(format!(
                    "unknown command `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// How a command that ran to completion ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Success,
    VerdictFailed(String),
}

/// Ordered `key = value` lines.
#[derive(Debug, Default)]
struct Summary {
    lines: Vec<String>,
}

impl Summary {
    fn put(&mut self, key: &str, value: impl Display) {
        self.lines.push(format!("{key} = {value}"));
    }

    /// Shortest round-trip form, scientific for very small or large values.
    fn num(&mut self, key: &str, value: f64) {
        self.lines.push(format!("{key} = {value:?}"));
    }

    fn write(&self, out: &Path) -> Result<()> {
        let path = out.join("summary.txt");
        let mut text = self.lines.join("\n");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }
}

fn write_rows<T: Serialize>(path: PathBuf, rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(&path, source),
        other => Error::InvalidArgument(format!("csv serialization failed: {other:?}")),
    };
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Parses the config, runs the command and maps the result to an exit status,
/// printing diagnostics to stderr.
pub fn run(command: &str, config: &Path, out: &Path, seed: Option<u64>) -> u8 {
    let result = command.parse::<Command>().and_then(|cmd| {
        let cfg = parse_config(config)?;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let seed = seed.unwrap_or(cfg.experiment.seed);
        execute(cmd, &cfg, out, seed)
    });
    match result {
        Ok(Outcome::Success) => EXIT_OK,
        Ok(Outcome::VerdictFailed(msg)) => {
            eprintln!("{command}: {msg}");
            EXIT_HYPOTHESIS
        }
        Err(err @ Error::Smallness(_)) => {
            eprintln!("{command}: {err}");
            EXIT_HYPOTHESIS
        }
        Err(err) => {
            eprintln!("{command}: error: {err}");
            EXIT_ERROR
        }
    }
}

/// Runs one command against a parsed config.
pub fn execute(command: Command, cfg: &ProblemConfig, out: &Path, seed: u64) -> Result<Outcome> {
    let mut summary = Summary::default();
    summary.put("command", command.name());
    summary.put("seed", seed);
    let outcome = match command {
        Command::Solve => solve(cfg, out, seed, &mut summary),
        Command::CheckSmallness => check(cfg, out, seed, &mut summary),
        Command::VerifyBounds => bounds(cfg, out, seed, &mut summary),
        Command::ContinuousDependence => dependence(cfg, out, seed, &mut summary),
        Command::WeakStar => weak_star(cfg, out, seed, &mut summary),
        Command::OracleCompare => oracle(cfg, out, seed, &mut summary),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            summary.put("status", "error");
            summary.put("error", &e);
            summary.write(out)?;
            return Err(e);
        }
    };
    summary.put(
        "status",
        match &outcome {
            Outcome::Success => "ok",
            Outcome::VerdictFailed(_) => "verdict_failed",
        },
    );
    summary.write(out)?;
    Ok(outcome)
}

fn put_smallness(s: &mut Summary, rep: &SmallnessReport) {
    s.num("delta_g", rep.delta_g);
    s.put("smallness_pass", rep.pass);
    s.put("route", rep.route.label());
    s.put("failed_conditions", rep.failed().join(" "));
    s.num("r0", rep.r0);
    s.num("r1", rep.r1);
    s.num("r1_payoff_bound", rep.r1_payoff_bound);
    s.num("upsilon", rep.upsilon);
    s.num("upsilon_tilde", rep.upsilon_tilde);
    s.put(
        "upsilon_choice",
        format!("{:?}", rep.upsilon_choice).to_lowercase(),
    );
    s.num("c_g", rep.payoff.c_g);
    s.num("c_g_tilde", rep.payoff.c_g_tilde);
    s.put("psi1", rep.payoff.psi1.describe());
    s.put("psi2", rep.payoff.psi2.describe());
    s.put("payoff_constants", &rep.payoff.derivation);
    s.num("lip_t1_payoff", rep.lip_t1_payoff);
    s.num("lip_t1_hamiltonian", rep.lip_t1_hamiltonian);
    s.num("lip_t2", rep.lip_t2);
    s.num("contraction_constant", rep.contraction_constant);
    s.num("contraction_target", rep.contraction_target);
}

#[derive(Serialize)]
struct HistoryRow {
    iteration: usize,
    update: f64,
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct ConditionRow<'a> {
    condition: &'a str,
    lhs: f64,
    rhs: f64,
    pass: bool,
}

fn solve(cfg: &ProblemConfig, out: &Path, seed: u64, s: &mut Summary) -> Result<Outcome> {
    let problem = cfg.build(seed)?;
    let rep = picard_solve(&problem)?;
    s.put("iterations", rep.iterations);
    s.num("v_residual", rep.v_residual);
    s.num("m_residual", rep.m_residual);
    s.put(
        "worst_update_ratio",
        rep.worst_ratio(0.0)
            .map_or("none".to_string(), |r| format!("{r:?}")),
    );
    put_smallness(s, &rep.smallness);
    let history: Vec<HistoryRow> = rep
        .updates
        .iter()
        .enumerate()
        .map(|(i, &u)| HistoryRow {
            iteration: i + 1,
            update: u,
            ratio: i.checked_sub(1).map(|j| rep.ratios[j]),
        })
        .collect();
    write_rows(out.join("history.csv"), &history)?;
    write_space_time(&out.join("m.field"), &rep.m)?;
    for (n, c) in rep.v.components().iter().enumerate() {
        write_space_time(&out.join(format!("v{}.field", n + 1)), c)?;
    }
    Ok(Outcome::Success)
}

fn check(cfg: &ProblemConfig, out: &Path, seed: u64, s: &mut Summary) -> Result<Outcome> {
    let problem = cfg.build(seed)?;
    let rep = smallness_check(&problem)?;
    put_smallness(s, &rep);
    let threshold = max_passing_delta_g(&problem)?;
    s.put(
        "max_passing_delta_g",
        threshold.map_or("none".to_string(), |t| format!("{t:?}")),
    );
    let rows: Vec<ConditionRow> = rep
        .conditions
        .iter()
        .map(|c| ConditionRow {
            condition: c.name,
            lhs: c.lhs,
            rhs: c.rhs,
            pass: c.pass,
        })
        .collect();
    write_rows(out.join("conditions.csv"), &rows)?;
    Ok(if rep.pass {
        Outcome::Success
    } else {
        Outcome::VerdictFailed(format!(
            "smallness fails: {} (delta_g = {})",
            rep.failed().join(", "),
            rep.delta_g
        ))
    })
}

fn bounds(cfg: &ProblemConfig, out: &Path, seed: u64, s: &mut Summary) -> Result<Outcome> {
    let cells = bound_suite(cfg.experiment.trials, &cfg.bound_matrix(), seed)?;
    write_rows(out.join("bounds.csv"), &cells)?;
    let failed: Vec<String> = cells
        .iter()
        .filter(|c| !c.pass)
        .map(|c| {
            format!(
                "{:?}/{}/d{}/K{}/a{}",
                c.bound, c.detail, c.dim, c.trunc, c.alpha
            )
        })
        .collect();
    s.put("cells", cells.len());
    s.put("failed_cells", failed.len());
    Ok(if failed.is_empty() {
        Outcome::Success
    } else {
        Outcome::VerdictFailed(format!("bound cells failed: {}", failed.join(", ")))
    })
}

fn dependence(cfg: &ProblemConfig, out: &Path, seed: u64, s: &mut Summary) -> Result<Outcome> {
    let problem = cfg.build(seed)?;
    let m0_a = &cfg.problem.m0;
    let m0_b = match &cfg.experiment.m0_b {
        Some(m) => m.clone(),
        None => default_partner(m0_a, cfg.problem.dim, cfg.experiment.perturbation)?,
    };
    s.num("delta_g", problem.payoff().delta_g);
    let rep = continuous_dependence_experiment(&problem, m0_a, &m0_b)?;
    s.num("v_distance", rep.v_distance);
    s.num("m_distance", rep.m_distance);
    s.num("data_distance", rep.data_distance);
    s.num("ratio", rep.ratio);
    s.num("allowed", rep.allowed);
    write_rows(out.join("dependence.csv"), std::slice::from_ref(&rep))?;
    Ok(if rep.pass {
        Outcome::Success
    } else {
        Outcome::VerdictFailed(format!("ratio {} exceeds {}", rep.ratio, rep.allowed))
    })
}

fn weak_star(cfg: &ProblemConfig, out: &Path, seed: u64, s: &mut Summary) -> Result<Outcome> {
    let problem = cfg.build(seed)?;
    s.num("delta_g", problem.payoff().delta_g);
    let rep = weak_star_experiment(
        &problem,
        &cfg.problem.m0,
        &cfg.experiment.eps,
        &cfg.test_functions(),
        &cfg.probe_times(),
    )?;
    write_rows(out.join("weak_star_pairings.csv"), &rep.pairings)?;
    write_rows(out.join("weak_star_members.csv"), &rep.members)?;
    let monotone = rep.monotone();
    let reduction = rep.worst_reduction();
    s.put("monotone", monotone);
    s.num("worst_reduction", reduction);
    s.num("min_data_distance", rep.min_data_distance());
    Ok(if monotone && reduction <= WEAK_STAR_REDUCTION {
        Outcome::Success
    } else {
        Outcome::VerdictFailed(format!(
            "weak-* errors not convergent (monotone = {monotone}, reduction = {reduction})"
        ))
    })
}

fn oracle(cfg: &ProblemConfig, out: &Path, seed: u64, s: &mut Summary) -> Result<Outcome> {
    let problem = cfg.build(seed)?;
    s.num("delta_g", problem.payoff().delta_g);
    let rows = refinement_study(&problem, &cfg.experiment.refinement_steps)?;
    write_rows(out.join("oracle.csv"), &rows)?;
    let last = rows
        .last()
        .ok_or_else(|| Error::Config("refinement_steps is empty".into()))?;
    let gap = last.v_gap.max(last.m_gap);
    let order = rows
        .iter()
        .filter_map(|r| r.order)
        .fold(f64::INFINITY, f64::min);
    s.num("final_v_gap", last.v_gap);
    s.num("final_m_gap", last.m_gap);
    s.num("min_order", order);
    let order_ok = rows.len() < 2 || order >= ORACLE_MIN_ORDER;
    Ok(if gap <= ORACLE_GAP_TOL && order_ok {
        Outcome::Success
    } else {
        Outcome::VerdictFailed(format!("oracle gap {gap} or order {order} out of range"))
    })
}
