//! Command-line front end. Every command writes newline-delimited JSON
//! records to stdout (or `-o`); diagnostics go to stderr.
//!
//! Exit codes: 0 when everything succeeded, 2 when some cell or player
//! failed while the rest completed, 1 on usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use statcost_core::estimators::{
    curvature_factor, curvature_scaled_estimate, empirical_dd_shapley, exact_dd_shapley, marginal_estimate,
    shapley_dsh_estimate, EmptyBucketPolicy,
};
use statcost_core::oracles::{closed_form_profile, exact_expected_marginal, marginal_profile};
use statcost_core::solvers::{empirical_core, empirical_core_bounded, evaluate_stability, exact_core, EvalMode, ExactCore};
use statcost_core::structure::{check_structure, curvature, spread};
use statcost_core::{CostAllocation, Dataset, EXHAUSTIVE_LIMIT};

use crate::descriptor::{parse_descriptor, DistSpec, GameSpec};
use crate::error::{CliError, CliResult};
use crate::experiments::{self, exact_shapley_any, ExperimentSpec};
use crate::{format, report};

#[derive(Debug, Parser)]
#[command(name = "statcost", version, about = "Cost sharing from samples of cooperative games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset of (S, C(S)) samples.
    Generate(GenerateArgs),
    /// Run a sample-based value estimator.
    Estimate(EstimateArgs),
    /// Compute an empirical core allocation.
    Core(CoreArgs),
    /// Measure how often an allocation violates the (relaxed) core.
    Stability(StabilityArgs),
    /// Exact values by enumeration.
    Oracle(OracleArgs),
    /// Run or list experiments.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Game descriptor: inline table or TOML file.
    #[arg(long)]
    pub game: String,
    /// Distribution descriptor: inline table or TOML file.
    #[arg(long)]
    pub dist: String,
    #[arg(short = 'm', long)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Marginal,
    Dsh,
    Curvature,
    DdEmpirical,
    DdExact,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Zero-based player index.
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    pub player: Option<usize>,
    #[arg(long)]
    pub all: bool,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Treat empty size buckets as zero instead of failing (dsh only).
    #[arg(long)]
    pub impute_zero: bool,
    /// Override the game descriptor stored in the dataset (dd-exact).
    #[arg(long)]
    pub game: Option<String>,
    /// Override the distribution descriptor stored in the dataset (dd-exact).
    #[arg(long)]
    pub dist: Option<String>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoreMode {
    Lp,
    Bounded,
}

#[derive(Debug, Args)]
pub struct CoreArgs {
    #[arg(long, value_enum, default_value = "lp")]
    pub mode: CoreMode,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub grand_cost: f64,
    /// Upper bound on max_S |C(S)| (bounded mode); defaults to the largest
    /// of C(N) and the sampled costs.
    #[arg(long)]
    pub max_cost: Option<f64>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Allocation file written by `core`, or a JSON array of shares.
    #[arg(long)]
    pub alloc: PathBuf,
    #[arg(long)]
    pub game: String,
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// `exhaustive` or `fresh:<m>[:<seed>]`.
    #[arg(long, value_parser = parse_eval, default_value = "exhaustive")]
    pub eval: EvalMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleWhat {
    Shapley,
    Profile,
    Core,
    ExpectedMarginal,
    Structure,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub what: OracleWhat,
    #[arg(long)]
    pub game: String,
    #[arg(long)]
    pub dist: Option<String>,
    /// Zero-based player index; all players when absent.
    #[arg(long)]
    pub player: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Run an experiment from a TOML spec, or re-run the spec embedded in
    /// a report.
    Run {
        spec: PathBuf,
        /// Worker threads; defaults to STATCOST_WORKERS, then all cores.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Write (x, y, series) rows for plotting.
        #[arg(long)]
        emit_plot_data: Option<PathBuf>,
        /// Skip the summary table on stderr.
        #[arg(long, short)]
        quiet: bool,
    },
    /// List experiment kinds.
    List,
}

fn parse_eval(s: &str) -> Result<EvalMode, String> {
    if s == "exhaustive" {
        return Ok(EvalMode::Exhaustive);
    }
    let rest = s
        .strip_prefix("fresh:")
        .ok_or_else(|| format!("expected `exhaustive` or `fresh:<m>[:<seed>]`, got {s:?}"))?;
    let (m, seed) = match rest.split_once(':') {
        Some((m, seed)) => (m, seed.parse::<u64>().map_err(|e| format!("seed {seed:?}: {e}"))?),
        None => (rest, 0),
    };
    let m = m.parse::<usize>().map_err(|e| format!("m {m:?}: {e}"))?;
    Ok(EvalMode::Fresh { m, seed })
}

struct Output {
    text: String,
    failed: bool,
}

impl Output {
    fn new() -> Self {
        Output {
            text: String::new(),
            failed: false,
        }
    }

    fn record(&mut self, v: Value) {
        self.text.push_str(&v.to_string());
        self.text.push('\n');
    }
}

fn write_out(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn players(n: usize, player: Option<usize>) -> CliResult<Vec<usize>> {
    match player {
        Some(p) if p >= n => Err(CliError::Usage(format!("player {p} out of range for n={n}"))),
        Some(p) => Ok(vec![p]),
        None => Ok((0..n).collect()),
    }
}

fn generate(a: &GenerateArgs) -> CliResult<()> {
    let game_spec: GameSpec = parse_descriptor(&a.game)?;
    let dist_spec: DistSpec = parse_descriptor(&a.dist)?;
    let game = game_spec.build()?;
    let dist = dist_spec.build()?;
    let ds = Dataset::generate(&game, &dist, a.m, a.seed)?.with_descriptors(game_spec.canonical(), dist_spec.canonical());
    format::save(&ds, &a.output)
}

fn stored_or<T: for<'de> serde::Deserialize<'de>>(flag: Option<&String>, stored: &str, what: &str) -> CliResult<T> {
    match flag {
        Some(s) => parse_descriptor(s),
        None if stored.starts_with('{') => parse_descriptor(stored),
        None => Err(CliError::Usage(format!(
            "dataset carries no {what} descriptor; pass --{what}"
        ))),
    }
}

fn estimate(a: &EstimateArgs, out: &mut Output) -> CliResult<()> {
    let ds = format::load(&a.input)?;
    let targets = players(ds.n(), if a.all { None } else { a.player })?;
    let exact_inputs = if a.method == Method::DdExact {
        let g: GameSpec = stored_or(a.game.as_ref(), &ds.meta().game, "game")?;
        let d: DistSpec = stored_or(a.dist.as_ref(), &ds.meta().distribution, "dist")?;
        Some((g.build()?, d.build()?))
    } else {
        None
    };
    let method = a.method.to_possible_value().expect("named").get_name().to_owned();
    for i in targets {
        let result: CliResult<(f64, Value)> = match a.method {
            Method::Marginal => marginal_estimate(&ds, i).map(|v| (v, json!({}))).map_err(Into::into),
            Method::Dsh => {
                let policy = if a.impute_zero {
                    EmptyBucketPolicy::ImputeZero
                } else {
                    EmptyBucketPolicy::Error
                };
                shapley_dsh_estimate(&ds, i, policy)
                    .map(|e| {
                        let imputed: Vec<Value> = e
                            .imputed
                            .iter()
                            .map(|b| json!({ "size": b.size, "side": b.side.to_string() }))
                            .collect();
                        (e.value, json!({ "imputed": imputed, "warnings": e.warnings }))
                    })
                    .map_err(Into::into)
            }
            Method::Curvature => match a.kappa {
                None => Err(CliError::Usage("--method curvature needs --kappa".into())),
                Some(k) => curvature_scaled_estimate(&ds, i, k)
                    .and_then(|v| Ok((v, json!({ "kappa": k, "factor": curvature_factor(k)? }))))
                    .map_err(Into::into),
            },
            Method::DdEmpirical => empirical_dd_shapley(&ds, i).map(|v| (v, json!({}))).map_err(Into::into),
            Method::DdExact => {
                let (g, d) = exact_inputs.as_ref().expect("built above");
                exact_dd_shapley(g, d, i)
                    .map(|v| (v, json!({ "game": g.label(), "dist": d.label() })))
                    .map_err(Into::into)
            }
        };
        match result {
            Ok((estimate, diagnostics)) => out.record(json!({
                "i": i,
                "estimate": estimate,
                "method": method,
                "m": ds.m(),
                "diagnostics": diagnostics,
            })),
            Err(CliError::Usage(u)) => return Err(CliError::Usage(u)),
            Err(e) => {
                out.failed = true;
                out.record(json!({ "i": i, "method": method, "m": ds.m(), "error": e.to_string() }));
            }
        }
    }
    Ok(())
}

fn core(a: &CoreArgs) -> CliResult<Value> {
    let ds = format::load(&a.input)?;
    let (sol, bound) = match a.mode {
        CoreMode::Lp => (empirical_core(&ds, a.grand_cost)?, None),
        CoreMode::Bounded => {
            let b = a.max_cost.unwrap_or_else(|| {
                ds.records()
                    .iter()
                    .map(|r| r.cost)
                    .fold(a.grand_cost.abs(), f64::max)
            });
            (empirical_core_bounded(&ds, a.grand_cost, b)?, Some(2.0 * b))
        }
    };
    Ok(json!({
        "shares": sol.allocation.shares,
        "method": sol.allocation.method,
        "balanced_to": sol.allocation.balanced_to,
        "raw_samples": sol.raw_samples,
        "constraints": sol.constraints,
        "margin": sol.margin,
        "l1_norm": sol.allocation.l1_norm(),
        "norm_bound": bound,
    }))
}

fn read_allocation(path: &Path) -> CliResult<CostAllocation> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: Value = serde_json::from_str(&text)?;
    let shares = match &v {
        Value::Array(_) => &v,
        _ => &v["shares"],
    };
    let shares: Vec<f64> = serde_json::from_value(shares.clone())
        .map_err(|e| CliError::Descriptor(format!("{}: shares: {e}", path.display())))?;
    let method = v["method"].as_str().unwrap_or("file").to_owned();
    Ok(CostAllocation::new(shares, method))
}

fn stability(a: &StabilityArgs) -> CliResult<Value> {
    let psi = read_allocation(&a.alloc)?;
    let game = parse_descriptor::<GameSpec>(&a.game)?.build()?;
    let dist = parse_descriptor::<DistSpec>(&a.dist)?.build()?;
    let r = evaluate_stability(&psi, &game, &dist, a.epsilon, a.eval)?;
    let mode = match r.eval_mode {
        EvalMode::Exhaustive => json!({ "mode": "exhaustive" }),
        EvalMode::Fresh { m, seed } => json!({ "mode": "fresh", "m": m, "seed": seed }),
    };
    Ok(json!({
        "epsilon": r.epsilon,
        "violation_rate": r.violation_rate,
        "eval_mode": mode,
        "worst_violation": r.worst_violation,
        "evaluated": r.evaluated,
    }))
}

fn oracle(a: &OracleArgs, out: &mut Output) -> CliResult<()> {
    let game = parse_descriptor::<GameSpec>(&a.game)?.build()?;
    let n = game.n();
    match a.what {
        OracleWhat::Shapley => {
            let phi = exact_shapley_any(&game)?;
            for i in players(n, a.player)? {
                out.record(json!({ "what": "shapley", "i": i, "value": phi[i] }));
            }
        }
        OracleWhat::Profile => {
            for i in players(n, a.player)? {
                let profile = if n <= EXHAUSTIVE_LIMIT {
                    marginal_profile(&game, i)?
                } else {
                    closed_form_profile(&game, i).ok_or(statcost_core::Error::Capability {
                        n,
                        limit: EXHAUSTIVE_LIMIT,
                    })?
                };
                out.record(json!({
                    "what": "profile",
                    "i": i,
                    "by_size": profile.by_size,
                    "shapley": profile.shapley(),
                    "nonincreasing": profile.is_nonincreasing(1e-12),
                }));
            }
        }
        OracleWhat::Core => match exact_core(&game)? {
            ExactCore::NonEmpty(psi) => out.record(json!({ "what": "core", "status": "nonempty", "psi": psi })),
            ExactCore::Empty => out.record(json!({ "what": "core", "status": "empty" })),
        },
        OracleWhat::ExpectedMarginal => {
            let d = a
                .dist
                .as_ref()
                .ok_or_else(|| CliError::Usage("--what expected-marginal needs --dist".into()))?;
            let dist = parse_descriptor::<DistSpec>(d)?.build()?;
            for i in players(n, a.player)? {
                out.record(json!({
                    "what": "expected-marginal",
                    "i": i,
                    "value": exact_expected_marginal(&game, &dist, i)?,
                }));
            }
        }
        OracleWhat::Structure => {
            let s = check_structure(&game)?;
            out.record(json!({
                "what": "structure",
                "monotone": s.monotone,
                "submodular": s.submodular,
                "monotone_witness": s.monotone_witness.map(|(set, i)| json!({ "set": set.to_string(), "player": i })),
                "submodular_witness": s.witness.map(|(a, b, i)| json!({ "s": a.to_string(), "t": b.to_string(), "player": i })),
                "curvature": curvature(&game).ok(),
                "spread": spread(&game).ok(),
                "max_cost": game.max_cost()?,
            }));
        }
    }
    Ok(())
}

fn load_spec(path: &Path) -> CliResult<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim_start().starts_with('{') {
        report::embedded_spec(&text)
    } else {
        ExperimentSpec::from_toml(&text)
    }
}

fn run_command(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<i32> {
    let mut out = Output::new();
    let target: Option<&Path> = match &cli.command {
        Command::Generate(a) => {
            generate(a)?;
            return Ok(0);
        }
        Command::Estimate(a) => {
            estimate(a, &mut out)?;
            a.output.as_deref()
        }
        Command::Core(a) => {
            let v = core(a)?;
            match &a.output {
                Some(p) => {
                    let text = serde_json::to_string_pretty(&v)? + "\n";
                    std::fs::write(p, text).map_err(|e| CliError::io(p, e))?;
                    return Ok(0);
                }
                None => out.record(v),
            }
            None
        }
        Command::Stability(a) => {
            out.record(stability(a)?);
            None
        }
        Command::Oracle(a) => {
            oracle(a, &mut out)?;
            None
        }
        Command::Experiment {
            command: ExperimentCommand::List,
        } => {
            for (kind, about) in experiments::KINDS {
                out.text.push_str(&format!("{kind:<22}{about}\n"));
            }
            None
        }
        Command::Experiment {
            command:
                ExperimentCommand::Run {
                    spec,
                    workers,
                    output,
                    emit_plot_data,
                    quiet,
                },
        } => {
            let spec = load_spec(spec)?;
            let report = experiments::run(&spec, experiments::worker_count(*workers)?)?;
            write_out(output.as_deref(), &report.to_ndjson(), stdout)?;
            if let Some(p) = emit_plot_data {
                std::fs::write(p, report.plot_tsv()).map_err(|e| CliError::io(p, e))?;
            }
            if !quiet {
                let _ = stderr.write_all(report.summary_text().as_bytes());
            }
            return Ok(if report.failed_cells() > 0 { 2 } else { 0 });
        }
    };
    write_out(target, &out.text, stdout)?;
    Ok(if out.failed { 2 } else { 0 })
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match run_command(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
