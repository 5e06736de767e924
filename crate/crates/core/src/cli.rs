//! Command-line front end: scenario files in, CSV tables out.
//!
//! Every output file starts with `#` comment lines recording the command, the scenario
//! file and where each run parameter came from (flags override scenario fields).
//! Exit status is 0 on success, 1 for usage or validation errors and 2 for internal
//! failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Agent, Error};
use crate::grid;
use crate::model::{region_grid, DerivedConstants, SystemParams, TargetRule};
use crate::payoffs::ActionProfile;
use crate::potential_game::{br_dynamics, enumerate_equilibria, q_sweep, Equilibrium};
use crate::repeated_game::{
    agreement_region, analytic_values, full_disclosure_by_convention, simulate_repeated, Policy,
    RepeatedConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error(transparent)]
    Model(Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Validation { .. } => 1,
            CliError::Model(e) => match e {
                Error::DomainError(_)
                | Error::InvariantViolation(_)
                | Error::MaxIterExceeded(_) => 2,
                _ => 1,
            },
            CliError::Io { .. } => 2,
        }
    }

    fn validation(field: &str, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Scenario file contents. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub alpha1: f64,
    pub alpha2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    #[serde(default)]
    pub target_rule: TargetRule,
    pub q: Option<f64>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub rho_sim: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioFile {
    pub fn params(&self) -> SystemParams {
        SystemParams::new(self.alpha1, self.alpha2, self.sigma1_sq, self.sigma2_sq)
            .with_target(self.target_rule)
    }

    pub fn validate(&self) -> CliResult<DerivedConstants> {
        let c = self.params().derive().map_err(|e| match e {
            Error::InvalidParameter { field, reason } => CliError::validation(field, reason),
            Error::TargetOutOfRange { agent, .. } => {
                CliError::validation(&format!("dbar{agent}"), e.to_string())
            }
            other => CliError::Model(other),
        })?;
        for (field, v) in [("q", self.q), ("q1", self.q1), ("q2", self.q2)] {
            if let Some(v) = v {
                check_weight(field, v)?;
            }
        }
        for (field, v) in [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("rho_sim", self.rho_sim),
        ] {
            if let Some(v) = v {
                check_probability(field, v)?;
            }
        }
        Ok(c)
    }
}

pub fn load_scenario(path: &Path) -> CliResult<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    file.validate()?;
    Ok(file)
}

fn check_weight(field: &str, v: f64) -> CliResult<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::validation(
            field,
            format!("must be finite and non-negative, got {v}"),
        ))
    }
}

fn check_probability(field: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(CliError::validation(
            field,
            format!("must lie in (0, 1), got {v}"),
        ))
    }
}

/// `%.9g` formatting.
pub fn format_float(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "compriv",
    version,
    about = "Competitive-privacy games: DL region, potential game, repeated game"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distortion-leakage tuples on a grid of distortion pairs.
    Region(RegionArgs),
    /// Nash equilibria of the common-goal game for one weight.
    Potential(PotentialArgs),
    /// Nash equilibria over a range of weights.
    Qsweep(QsweepArgs),
    /// Agreement region of the repeated game.
    Repeated(RepeatedArgs),
    /// Monte Carlo play of grim-trigger strategies.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[command(flatten)]
    common: Common,
    /// Points per axis.
    #[arg(long, default_value_t = 101)]
    grid: usize,
}

#[derive(Debug, Args)]
struct PotentialArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    q: Option<f64>,
    /// Run best-response dynamics from this profile (`a1,a2`).
    #[arg(long, value_parser = parse_pair)]
    start: Option<(f64, f64)>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct QsweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    q_min: f64,
    #[arg(long)]
    q_max: f64,
    #[arg(long)]
    steps: usize,
}

#[derive(Debug, Args)]
struct RepeatedArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    q1: Option<f64>,
    #[arg(long)]
    q2: Option<f64>,
    /// Points per axis.
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    q1: Option<f64>,
    #[arg(long)]
    q2: Option<f64>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    #[arg(long)]
    rho_sim: Option<f64>,
    /// Agreement distortions `d2,d1`.
    #[arg(long, value_parser = parse_pair)]
    agreement: (f64, f64),
    /// One-stage deviation `agent,stage,action` (agent 1 or 2, stage from 1).
    #[arg(long, value_parser = parse_deviation)]
    deviation: Option<(u8, usize, f64)>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn parse_deviation(s: &str) -> std::result::Result<(u8, usize, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [agent, stage, action] = parts[..] else {
        return Err(format!("expected `agent,stage,action`, got `{s}`"));
    };
    let agent: u8 = agent.parse().map_err(|e| format!("agent: {e}"))?;
    if agent != 1 && agent != 2 {
        return Err(format!("agent must be 1 or 2, got {agent}"));
    }
    let stage: usize = stage.parse().map_err(|e| format!("stage: {e}"))?;
    let action: f64 = action.parse().map_err(|e| format!("action: {e}"))?;
    Ok((agent, stage, action))
}

/// Resolved value of a run parameter and where it came from.
struct Setting {
    name: &'static str,
    value: String,
    source: &'static str,
}

fn resolve(name: &'static str, flag: Option<f64>, file: Option<f64>) -> CliResult<(f64, Setting)> {
    let (v, source) = match (flag, file) {
        (Some(v), _) => (v, "flag"),
        (None, Some(v)) => (v, "config"),
        (None, None) => {
            return Err(CliError::Usage(format!(
                "`{name}` must be given with --{} or in the scenario file",
                name.replace('_', "-")
            )))
        }
    };
    Ok((
        v,
        Setting {
            name,
            value: format_float(v),
            source,
        },
    ))
}

struct Output {
    command: &'static str,
    config: PathBuf,
    settings: Vec<Setting>,
    notes: Vec<String>,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Output {
    fn new(command: &'static str, config: &Path, header: &'static [&'static str]) -> Self {
        Output {
            command,
            config: config.to_path_buf(),
            settings: Vec::new(),
            notes: Vec::new(),
            header,
            rows: Vec::new(),
        }
    }

    fn write(&self, path: &Path) -> CliResult<()> {
        let io_err = |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "# compriv {} --config {}",
            self.command,
            self.config.display()
        )
        .map_err(io_err)?;
        writeln!(
            w,
            "# precedence: command-line flags override scenario-file fields"
        )
        .map_err(io_err)?;
        for s in &self.settings {
            writeln!(w, "# {}={} ({})", s.name, s.value, s.source).map_err(io_err)?;
        }
        for n in &self.notes {
            writeln!(w, "# {n}").map_err(io_err)?;
        }
        let mut csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let csv_err = |e: csv::Error| CliError::Io {
            path: path.to_path_buf(),
            source: io::Error::other(e),
        };
        csv.write_record(self.header).map_err(csv_err)?;
        for row in &self.rows {
            csv.write_record(row).map_err(csv_err)?;
        }
        csv.flush().map_err(io_err)?;
        Ok(())
    }
}

fn equilibrium_row(q: f64, e: &Equilibrium) -> Vec<String> {
    vec![
        format_float(q),
        format_float(e.profile.a1),
        format_float(e.profile.a2),
        e.kind.as_str().to_string(),
        e.stable.as_str().to_string(),
        format_float(e.potential_value),
    ]
}

const REGION_HEADER: &[&str] = &["d1", "d2", "l1", "l2"];
const EQUILIBRIUM_HEADER: &[&str] = &["q", "a1", "a2", "kind", "stable", "potential"];
const REPEATED_HEADER: &[&str] = &[
    "d2_star",
    "d1_star",
    "rational",
    "rho_min_1",
    "rho_min_2",
    "sustainable",
];
const SIMULATE_HEADER: &[&str] = &["agent", "rho", "mean", "std_err", "analytic"];

fn run_region(args: &RegionArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.common.config)?;
    let c = scenario.validate()?;
    let mut out = Output::new("region", &args.common.config, REGION_HEADER);
    out.settings.push(Setting {
        name: "grid",
        value: args.grid.to_string(),
        source: "flag",
    });
    for t in region_grid(&c, args.grid)? {
        out.rows
            .push([t.d1, t.d2, t.l1, t.l2].map(format_float).to_vec());
    }
    out.write(&args.common.out)
}

fn run_potential(args: &PotentialArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.common.config)?;
    let c = scenario.validate()?;
    let (q, setting) = resolve("q", args.q, scenario.q)?;
    check_weight("q", q)?;
    let mut out = Output::new("potential", &args.common.config, EQUILIBRIUM_HEADER);
    out.settings.push(setting);
    let set = enumerate_equilibria(&c, q)?;
    if let Some(seg) = set.continuum {
        out.notes.push(format!(
            "continuum of equilibria a1 = a2 + {} from ({}, {}) to ({}, {})",
            format_float(seg.offset),
            format_float(seg.start.a1),
            format_float(seg.start.a2),
            format_float(seg.end.a1),
            format_float(seg.end.a2)
        ));
    }
    if let Some((a1, a2)) = args.start {
        let start = ActionProfile::new(a1, a2);
        if !start.in_range(&c) {
            return Err(CliError::validation(
                "start",
                format!("({a1}, {a2}) is outside the action rectangle"),
            ));
        }
        check_tol(args.tol)?;
        let trace = br_dynamics(&c, start, q, args.tol, args.max_iter)?;
        out.notes.push(format!(
            "dynamics start=({}, {}) limit=({}, {}) sweeps={} converged={}",
            format_float(a1),
            format_float(a2),
            format_float(trace.limit.a1),
            format_float(trace.limit.a2),
            trace.iterations,
            trace.converged
        ));
    }
    out.rows = set.points.iter().map(|e| equilibrium_row(q, e)).collect();
    out.write(&args.common.out)
}

fn check_tol(tol: f64) -> CliResult<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(
            "tol",
            format!("must be positive, got {tol}"),
        ))
    }
}

fn run_qsweep(args: &QsweepArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.common.config)?;
    let c = scenario.validate()?;
    check_weight("q_min", args.q_min)?;
    check_weight("q_max", args.q_max)?;
    if args.q_max < args.q_min {
        return Err(CliError::validation("q_max", "must not be below q_min"));
    }
    if args.steps < 2 {
        return Err(CliError::validation("steps", "at least 2 steps are needed"));
    }
    let mut out = Output::new("qsweep", &args.common.config, EQUILIBRIUM_HEADER);
    out.settings.push(Setting {
        name: "q_range",
        value: format!(
            "{}..{} in {} steps",
            format_float(args.q_min),
            format_float(args.q_max),
            args.steps
        ),
        source: "flag",
    });
    for entry in q_sweep(&c, &grid::linspace(args.q_min, args.q_max, args.steps))? {
        if entry.equilibria.continuum.is_some() {
            out.notes.push(format!(
                "q={}: continuum of equilibria, endpoints listed",
                format_float(entry.q)
            ));
        }
        out.rows.extend(
            entry
                .equilibria
                .points
                .iter()
                .map(|e| equilibrium_row(entry.q, e)),
        );
    }
    out.write(&args.common.out)
}

fn run_repeated(args: &RepeatedArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.common.config)?;
    let c = scenario.validate()?;
    let (q1, s1) = resolve("q1", args.q1, scenario.q1)?;
    let (q2, s2) = resolve("q2", args.q2, scenario.q2)?;
    check_weight("q1", q1)?;
    check_weight("q2", q2)?;
    if args.grid < 2 {
        return Err(CliError::validation(
            "grid",
            "at least 2 points per axis are needed",
        ));
    }
    let mut out = Output::new("repeated", &args.common.config, REPEATED_HEADER);
    out.settings.extend([s1, s2]);
    let region = agreement_region(&c, [q1, q2], args.grid)?;
    let sustainable = region.iter().filter(|a| a.sustainable).count();
    out.notes.push(format!(
        "sustainable points: {sustainable} of {}",
        region.len()
    ));
    if q1 > 0.0 && q2 > 0.0 {
        for (rule, a) in full_disclosure_by_convention(&scenario.params(), [q1, q2])? {
            let name = match rule {
                TargetRule::Max => "max",
                _ => "midpoint",
            };
            out.notes.push(format!(
                "full disclosure under {name} targets: rational={},{} rho_min={},{} sustainable={}",
                a.rational[0],
                a.rational[1],
                format_float(a.rho_min[0]),
                format_float(a.rho_min[1]),
                a.sustainable
            ));
        }
    }
    out.rows = region
        .iter()
        .map(|a| {
            vec![
                format_float(a.d2_star()),
                format_float(a.d1_star()),
                a.is_rational().to_string(),
                format_float(a.rho_min[0]),
                format_float(a.rho_min[1]),
                a.sustainable.to_string(),
            ]
        })
        .collect();
    out.write(&args.common.out)
}

fn run_simulate(args: &SimulateArgs) -> CliResult<()> {
    let scenario = load_scenario(&args.common.config)?;
    let c = scenario.validate()?;
    let (q1, s_q1) = resolve("q1", args.q1, scenario.q1)?;
    let (q2, s_q2) = resolve("q2", args.q2, scenario.q2)?;
    let (rho1, s_r1) = resolve("rho1", args.rho1, scenario.rho1)?;
    let (rho2, s_r2) = resolve("rho2", args.rho2, scenario.rho2)?;
    check_weight("q1", q1)?;
    check_weight("q2", q2)?;
    check_probability("rho1", rho1)?;
    check_probability("rho2", rho2)?;
    let rho_sim = args.rho_sim.or(scenario.rho_sim);
    if let Some(r) = rho_sim {
        check_probability("rho_sim", r)?;
    }
    let seed = args.seed.unwrap_or(scenario.seed);
    let (d2, d1) = args.agreement;
    let agreement = ActionProfile::new(d2, d1);
    for (field, j) in [("agreement", Agent::One), ("agreement", Agent::Two)] {
        let (lo, hi) = c.action_range(j);
        let a = agreement.action(j);
        if !(a >= lo && a <= hi) {
            return Err(CliError::validation(
                field,
                format!("{a} outside [{lo}, {hi}] for agent {j}"),
            ));
        }
    }
    if args.trials == 0 {
        return Err(CliError::validation(
            "trials",
            "at least one trial is needed",
        ));
    }
    let mut policies = [
        Policy::GrimTrigger(agreement),
        Policy::GrimTrigger(agreement),
    ];
    if let Some((agent, stage, action)) = args.deviation {
        let j = if agent == 1 { Agent::One } else { Agent::Two };
        let (lo, hi) = c.action_range(j);
        if stage == 0 {
            return Err(CliError::validation(
                "deviation",
                "stages are numbered from 1",
            ));
        }
        if !(action >= lo && action <= hi) {
            return Err(CliError::validation(
                "deviation",
                format!("action {action} outside [{lo}, {hi}]"),
            ));
        }
        policies[j.index()] = Policy::deviate(Policy::GrimTrigger(agreement), stage, action);
    }
    let config = RepeatedConfig {
        rho_sim,
        ..RepeatedConfig::statistical(rho1, rho2)
    };
    let report = simulate_repeated(&c, [q1, q2], &policies, &config, args.trials, seed).map_err(
        |e| match e {
            Error::InvalidParameter {
                field: "rho_sim",
                reason,
            } => CliError::validation("rho_sim", reason),
            other => CliError::Model(other),
        },
    )?;
    let exact = analytic_values(&c, [q1, q2], &policies, &config)?;

    let mut out = Output::new("simulate", &args.common.config, SIMULATE_HEADER);
    out.settings.extend([s_q1, s_q2, s_r1, s_r2]);
    out.settings.push(Setting {
        name: "rho_sim",
        value: format_float(report.rho_sim),
        source: if args.rho_sim.is_some() {
            "flag"
        } else if scenario.rho_sim.is_some() {
            "config"
        } else {
            "default"
        },
    });
    out.settings.push(Setting {
        name: "seed",
        value: seed.to_string(),
        source: if args.seed.is_some() {
            "flag"
        } else {
            "config"
        },
    });
    out.notes.push(format!(
        "agreement d2,d1 = {},{}; trials={}",
        format_float(d2),
        format_float(d1),
        report.trials
    ));
    if let Some((agent, stage, action)) = args.deviation {
        out.notes.push(format!(
            "agent {agent} deviates at stage {stage} to {}",
            format_float(action)
        ));
    }
    for j in Agent::BOTH {
        let k = j.index();
        out.rows.push(vec![
            j.to_string(),
            format_float(config.rho[k]),
            format_float(report.mean[k]),
            format_float(report.std_err[k]),
            format_float(exact[k]),
        ]);
    }
    out.write(&args.common.out)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Region(a) => run_region(a),
        Command::Potential(a) => run_potential(a),
        Command::Qsweep(a) => run_qsweep(a),
        Command::Repeated(a) => run_repeated(a),
        Command::Simulate(a) => run_simulate(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.30881234567, "0.308812346"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (0.999999999, "0.999999999"),
            (0.9999999999, "1"),
            (f64::INFINITY, "inf"),
        ];
        for (x, s) in cases {
            assert_eq!(format_float(x), s, "{x}");
        }
    }

    #[test]
    fn g_format_round_trips_to_nine_digits() {
        for x in [0.123456789123, -7.7e-7, 3.0e12, 0.2183, 1.0 / 3.0] {
            let back: f64 = format_float(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 5e-9, "{x}");
        }
    }

    #[test]
    fn scenario_defaults() {
        let f: ScenarioFile =
            serde_json::from_str(r#"{"alpha1":0.9,"alpha2":0.5,"sigma1_sq":0.1,"sigma2_sq":0.1}"#)
                .unwrap();
        assert_eq!(f.target_rule, TargetRule::Fraction { t: 0.5 });
        assert_eq!(f.seed, 0);
        assert!(f.q.is_none());
        assert!(f.validate().is_ok());
    }

    #[test]
    fn scenario_rejections() {
        let bad_key = serde_json::from_str::<ScenarioFile>(
            r#"{"alpha1":0.9,"alpha2":0.5,"sigma1_sq":0.1,"sigma2_sq":0.1,"beta":1}"#,
        );
        assert!(bad_key.unwrap_err().to_string().contains("beta"));

        let neg: ScenarioFile =
            serde_json::from_str(r#"{"alpha1":-1,"alpha2":0.5,"sigma1_sq":0.1,"sigma2_sq":0.1}"#)
                .unwrap();
        match neg.validate() {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "alpha1"),
            other => panic!("{other:?}"),
        }

        let high: ScenarioFile = serde_json::from_str(
            r#"{"alpha1":0.9,"alpha2":0.5,"sigma1_sq":0.1,"sigma2_sq":0.1,
                "target_rule":{"type":"explicit","dbar1":0.6,"dbar2":0.25}}"#,
        )
        .unwrap();
        match high.validate() {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "dbar1"),
            other => panic!("{other:?}"),
        }

        let rho: ScenarioFile = serde_json::from_str(
            r#"{"alpha1":0.9,"alpha2":0.5,"sigma1_sq":0.1,"sigma2_sq":0.1,"rho2":1.0}"#,
        )
        .unwrap();
        match rho.validate() {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "rho2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pair_and_deviation_parsing() {
        assert_eq!(parse_pair("0.22, 0.35").unwrap(), (0.22, 0.35));
        assert!(parse_pair("0.22").is_err());
        assert_eq!(parse_deviation("1,3,0.2").unwrap(), (1, 3, 0.2));
        assert!(parse_deviation("3,1,0.2").is_err());
        assert!(parse_deviation("1,1").is_err());
    }

    #[test]
    fn flag_precedence() {
        let (v, s) = resolve("q", Some(2.0), Some(5.0)).unwrap();
        assert_eq!((v, s.source), (2.0, "flag"));
        let (v, s) = resolve("q", None, Some(5.0)).unwrap();
        assert_eq!((v, s.source), (5.0, "config"));
        assert!(matches!(resolve("q", None, None), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["compriv", "frobnicate"]), 1);
        assert_eq!(run(["compriv", "--help"]), 0);
        assert_eq!(
            run([
                "compriv",
                "region",
                "--config",
                "/nonexistent.json",
                "--out",
                "x.csv"
            ]),
            1
        );
        assert_eq!(
            CliError::Model(Error::InvariantViolation("x".into())).exit_code(),
            2
        );
    }
}
