//! Command-line front end for `wsal`.
//!
//! Every subcommand is a thin wrapper over a library call; [`main_with`]
//! takes the arguments and the output sinks so it can be driven in-process.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};

use wsal::bounds::{
    diff_classifier_sample_size, epoch_schedule, final_epoch, gamma, initial_sample_size, min_n_for_sigma, sigma,
};
use wsal::engine::{AlgoConfig, EpsilonPassMode};
use wsal::lab::{diagnose, sweep_rows, write_csv, ComparisonRow, DiagnosticOptions, TrialOptions, TrialResult};
use wsal::world::InstanceSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TRIAL_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wsal", version, about = "Active learning from a strong oracle and a weak labeler")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Instance description (JSON). `sweep` also accepts a JSON array of them.
    #[arg(long, value_name = "PATH", global = true)]
    pub instance: Option<PathBuf>,

    /// Target excess error [default: 0.05]
    #[arg(long, value_name = "F", global = true)]
    pub epsilon: Option<f64>,

    /// Failure probability [default: 0.1]
    #[arg(long, value_name = "F", global = true)]
    pub delta: Option<f64>,

    /// Multiplier on every sample size [default: 0.01; 1 for `formulas`]
    #[arg(long, value_name = "F", global = true)]
    pub scale: Option<f64>,

    /// World seed [default: the instance's `seed` field]
    #[arg(long, value_name = "N", global = true, conflicts_with = "seeds")]
    pub seed: Option<u64>,

    /// Seed range for `sweep` and `compare`: `N..M` (exclusive) or `N..=M`
    #[arg(long, value_name = "N..M", global = true)]
    pub seeds: Option<String>,

    /// Accuracy parameter of the difference classifier
    #[arg(long, value_name = "MODE", global = true, value_parser = ["main-text", "appendix"])]
    pub mode: Option<String>,

    /// Also run the baseline learner on an identically seeded world
    #[arg(long, global = true)]
    pub baseline: bool,

    /// Write a JSON-lines trace of every trial next to the output
    #[arg(long, global = true)]
    pub trace: bool,

    /// Output file [default: standard output]
    #[arg(long, value_name = "PATH", global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads [default: number of cores]
    #[arg(long, value_name = "N", global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the main learner on one seed and print the result as JSON
    Run(Overrides),
    /// Run a grid of instances over a seed range and print one CSV row per trial
    Sweep(Overrides),
    /// Run the main learner and the baseline over a seed range (CSV)
    Compare(Overrides),
    /// Run with retained samples and print the invariant checks as JSON
    Diagnose(Overrides),
    /// Print the sample-size formulas for the given parameters
    Formulas(FormulaArgs),
}

#[derive(Debug, clap::Args)]
pub struct Overrides {
    /// `key=value` settings applied after the instance file: instance fields
    /// (family, nu, weak_mode, g, p, beta, seed), learner settings
    /// (max_unlabeled, max_doubling_t, retain) and harness settings (n_test,
    /// grid, n_mc, max_points)
    #[arg(value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, clap::Args)]
pub struct FormulaArgs {
    /// VC dimension of the hypothesis class
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub d: u32,
    /// VC dimension of the difference class
    #[arg(long = "d-prime", value_name = "N", default_value_t = 2)]
    pub d_prime: u32,
    /// Sample size at which `sigma` and `gamma` are evaluated
    #[arg(long, value_name = "N", default_value_t = 1000)]
    pub n: u64,
    /// Region-mass estimate used for the triple count `m`
    #[arg(long = "p-hat", value_name = "F", default_value_t = 0.5)]
    pub p_hat: f64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
}

impl From<wsal::Error> for CliError {
    fn from(e: wsal::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

struct Settings {
    specs: Vec<InstanceSpec>,
    config: AlgoConfig,
    opts: TrialOptions,
    diag: DiagnosticOptions,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("bad seed range {s:?}; expected N..M or N..=M"));
    let (lo, hi, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        let n = s.parse().map_err(|_| bad())?;
        return Ok(vec![n]);
    };
    let lo: u64 = lo.parse().map_err(|_| bad())?;
    let hi: u64 = hi.parse().map_err(|_| bad())?;
    let seeds: Vec<u64> = if inclusive { (lo..=hi).collect() } else { (lo..hi).collect() };
    if seeds.is_empty() {
        return Err(CliError::Usage(format!("seed range {s:?} is empty")));
    }
    Ok(seeds)
}

fn read_specs(path: &Path) -> Result<Vec<InstanceSpec>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        let specs: Vec<InstanceSpec> = serde_json::from_str(&text).map_err(bad)?;
        if specs.is_empty() {
            return Err(CliError::Usage(format!("{} holds no instances", path.display())));
        }
        Ok(specs)
    } else {
        Ok(vec![serde_json::from_str(&text).map_err(bad)?])
    }
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Usage(format!("bad value {value:?} for {key}")))
}

fn settings(cli: &Cli, overrides: &Overrides) -> Result<Settings, CliError> {
    let path = cli.instance.as_ref().ok_or_else(|| CliError::Usage("--instance is required".into()))?;
    let mut specs = read_specs(path)?;
    let mut config = AlgoConfig::default();
    let mut opts = TrialOptions { baseline: cli.baseline, ..TrialOptions::default() };
    let mut diag = DiagnosticOptions::default();
    for kv in &overrides.set {
        let (key, value) =
            kv.split_once('=').ok_or_else(|| CliError::Usage(format!("expected KEY=VALUE, got {kv:?}")))?;
        match key {
            "family" | "nu" | "weak_mode" | "g" | "p" | "beta" | "seed" => {
                for s in &mut specs {
                    s.set(key, value)?;
                }
            }
            "n_test" => opts.n_test = number(key, value)?,
            "grid" => diag.grid = number(key, value)?,
            "n_mc" => diag.n_mc = number(key, value)?,
            "max_points" => diag.max_points = number(key, value)?,
            _ => config.set(key, value)?,
        }
    }
    if let Some(e) = cli.epsilon {
        config.target_epsilon = e;
    }
    if let Some(d) = cli.delta {
        config.delta = d;
    }
    if let Some(s) = cli.scale {
        config.scale = s;
    }
    if let Some(m) = &cli.mode {
        config.epsilon_pass_mode = m.parse::<EpsilonPassMode>()?;
    }
    if let Some(w) = cli.workers {
        opts.workers = w as usize;
    }
    config.validate()?;
    for s in &specs {
        s.validate()?;
    }
    Ok(Settings { specs, config, opts, diag })
}

fn seeds_for(cli: &Cli, specs: &[InstanceSpec]) -> Result<Vec<u64>, CliError> {
    match (&cli.seeds, cli.seed) {
        (Some(range), _) => parse_seeds(range),
        (None, Some(seed)) => Ok(vec![seed]),
        (None, None) => Ok(vec![specs[0].seed]),
    }
}

fn single_seed(cli: &Cli, specs: &[InstanceSpec]) -> Result<u64, CliError> {
    if cli.seeds.is_some() {
        return Err(CliError::Usage("this subcommand takes --seed, not --seeds".into()));
    }
    if specs.len() != 1 {
        return Err(CliError::Usage("this subcommand takes a single instance".into()));
    }
    Ok(cli.seed.unwrap_or(specs[0].seed))
}

/// Sibling of the output file (or of `wsal` in the working directory) named
/// `<stem>.<index>.<learner>.seed<seed>.trace.jsonl`.
fn trace_path(output: Option<&Path>, index: usize, t: &TrialResult) -> PathBuf {
    let base = output.map_or_else(|| PathBuf::from("wsal"), Path::to_path_buf);
    let stem = base.file_stem().map_or_else(|| "wsal".into(), |s| s.to_string_lossy().into_owned());
    base.with_file_name(format!("{stem}.{index}.{}.seed{}.trace.jsonl", t.learner.as_str(), t.seed))
}

fn write_traces(cli: &Cli, rows: &[ComparisonRow], per_spec: usize) -> Result<(), CliError> {
    for (i, row) in rows.iter().enumerate() {
        for t in std::iter::once(&row.main).chain(&row.baseline) {
            let mut text = String::new();
            for rec in &t.trace {
                let line = serde_json::to_string(rec).map_err(|e| CliError::Failed(e.to_string()))?;
                text.push_str(&line);
                text.push('\n');
            }
            let path = trace_path(cli.output.as_deref(), i / per_spec.max(1), t);
            fs::write(&path, text).map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn row_errors(rows: &[ComparisonRow]) -> Vec<String> {
    rows.iter()
        .flat_map(|r| std::iter::once(&r.main).chain(&r.baseline))
        .filter_map(|t| t.error.as_ref().map(|e| format!("{} seed {}: {e}", t.learner.as_str(), t.seed)))
        .collect()
}

fn json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::Failed(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn formulas(cli: &Cli, args: &FormulaArgs) -> Result<Vec<u8>, CliError> {
    let epsilon = cli.epsilon.unwrap_or(0.05);
    let delta = cli.delta.unwrap_or(0.1);
    let scale = cli.scale.unwrap_or(1.0);
    let k0 = final_epoch(epsilon)?;
    let schedule = epoch_schedule(epsilon, delta)?;
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "epsilon = {epsilon}");
    let _ = writeln!(w, "delta = {delta}");
    let _ = writeln!(w, "d = {}", args.d);
    let _ = writeln!(w, "d_prime = {}", args.d_prime);
    let _ = writeln!(w, "scale = {scale}");
    let _ = writeln!(w, "k_0 = {k0}");
    let _ = writeln!(w, "sigma(n = {}) = {}", args.n, sigma(args.n, args.d, delta)?);
    let _ = writeln!(w, "gamma(n = {}) = {}", args.n, gamma(args.n, delta)?);
    let _ = writeln!(w, "min n with sigma <= epsilon = {}", min_n_for_sigma(epsilon, args.d, delta)?);
    let _ = writeln!(w, "n_0 = {}", initial_sample_size(delta, args.d, scale)?);
    let _ = writeln!(w, "epochs:");
    for e in &schedule {
        let m = diff_classifier_sample_size(args.p_hat, e.epsilon, args.d_prime, e.delta, scale)?;
        let _ = writeln!(
            w,
            "  k = {}  epsilon_k = {}  delta_k = {}  m(p_hat = {}) = {m}",
            e.k, e.epsilon, e.delta, args.p_hat
        );
    }
    Ok(s.into_bytes())
}

fn execute(cli: &Cli) -> Result<(Vec<u8>, Vec<String>), CliError> {
    match &cli.command {
        Command::Formulas(args) => Ok((formulas(cli, args)?, Vec::new())),
        Command::Run(o) => {
            let st = settings(cli, o)?;
            let seed = single_seed(cli, &st.specs)?;
            let rows = sweep_rows(&st.specs, &[seed], &st.config, &st.opts)?;
            if cli.trace {
                write_traces(cli, &rows, 1)?;
            }
            let errors = row_errors(&rows);
            Ok((json(&rows[0])?, errors))
        }
        Command::Sweep(o) | Command::Compare(o) => {
            let mut st = settings(cli, o)?;
            let seeds = seeds_for(cli, &st.specs)?;
            if matches!(cli.command, Command::Compare(_)) {
                if st.specs.len() != 1 {
                    return Err(CliError::Usage("compare takes a single instance".into()));
                }
                if seeds.len() < 2 {
                    return Err(CliError::Usage("compare needs at least two seeds".into()));
                }
                st.opts.baseline = true;
            }
            let rows = sweep_rows(&st.specs, &seeds, &st.config, &st.opts)?;
            if cli.trace {
                write_traces(cli, &rows, seeds.len())?;
            }
            let mut out = Vec::new();
            write_csv(&rows, &mut out).map_err(|e| CliError::Failed(e.to_string()))?;
            Ok((out, row_errors(&rows)))
        }
        Command::Diagnose(o) => {
            let st = settings(cli, o)?;
            let seed = single_seed(cli, &st.specs)?;
            match diagnose(&st.specs[0], &st.config, seed, &st.diag) {
                Ok(report) => Ok((json(&report)?, Vec::new())),
                Err(e) => Err(CliError::Failed(e.to_string())),
            }
        }
    }
}

fn usage(cli: Option<&Cli>) -> String {
    let mut cmd = Cli::command();
    let name = cli.map(|c| match c.command {
        Command::Run(_) => "run",
        Command::Sweep(_) => "sweep",
        Command::Compare(_) => "compare",
        Command::Diagnose(_) => "diagnose",
        Command::Formulas(_) => "formulas",
    });
    match name.and_then(|n| cmd.find_subcommand_mut(n)) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit code: 0 on success, 1 when a trial failed, 2 on a usage
/// error. Results go to `--output` or `stdout`; messages go to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (out, errors) = match execute(&cli) {
        Ok(v) => v,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}\n\n{}\nFor more information, try '--help'.", usage(Some(&cli)));
            return EXIT_USAGE;
        }
        Err(CliError::Failed(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_TRIAL_FAILURE;
        }
    };
    let written = match &cli.output {
        Some(path) => fs::write(path, &out).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(&out).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return EXIT_TRIAL_FAILURE;
    }
    for e in &errors {
        let _ = writeln!(stderr, "trial failed: {e}");
    }
    if errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_TRIAL_FAILURE
    }
}
