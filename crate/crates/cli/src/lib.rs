//! Argument handling and command dispatch for the `mia` binary.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Deserialize;

use mia_core::analysis::{max_users_convergence, max_users_ddm, MAX_ESTIMATE_TERMS};
use mia_core::montecarlo::{run_experiment, ExperimentKind, ExperimentSpec, RunOptions, MAX_SIR_TERMS};
use mia_core::report::{Report, ReportMeta, ReportSpec, RowKind, Rows, ThresholdRow};

/// Seed used when neither the command line nor a config file sets one.
pub const DEFAULT_SEED: u64 = 20_170_419;

pub const TABLE_ANTENNAS: [usize; 4] = [64, 128, 256, 512];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Convergence probability at the largest K per M
    Table1,
    /// Diagonal-dominance probability at the largest K per M
    Table2,
    Convergence,
    Ddm,
    /// Exact and estimated SIR
    Sir,
    /// Exact, estimated and bound-derived SIR
    Bound,
    /// Antenna-to-user thresholds per M
    Thresholds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::Table2 => "table2",
            Command::Convergence => "convergence",
            Command::Ddm => "ddm",
            Command::Sir => "sir",
            Command::Bound => "bound",
            Command::Thresholds => "thresholds",
        }
    }

    fn default_trials(self) -> usize {
        match self {
            Command::Table1 | Command::Table2 => 10_000,
            _ => 1_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "mia", version, about = "Neumann-series matrix inversion experiments")]
pub struct Cli {
    pub command: Command,
    /// Antenna counts: `128`, `64,128`, `64:512` or `64:64:512`
    #[arg(long = "m", value_name = "LIST")]
    pub m: Option<String>,
    /// User counts as a list, or `auto` for the threshold maximum
    #[arg(long = "k", value_name = "LIST|auto")]
    pub k: Option<String>,
    /// Series lengths
    #[arg(long = "n", value_name = "LIST")]
    pub n: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Output file; `-` or absent writes to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Round probabilities to three decimals
    #[arg(long)]
    pub paper_rounding: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// TOML file with defaults for any of the flags above
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

/// Keys accepted in a config file. Lists may be written as TOML arrays or
/// as the same strings the flags accept.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub m: Option<ListValue>,
    pub k: Option<ListValue>,
    pub n: Option<ListValue>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub paper_rounding: Option<bool>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ListValue {
    One(usize),
    Many(Vec<usize>),
    Text(String),
}

impl ListValue {
    fn to_text(&self) -> String {
        match self {
            ListValue::One(v) => v.to_string(),
            ListValue::Many(v) => v.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            ListValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserSpec {
    Auto,
    List(Vec<usize>),
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    pub antennas: Vec<usize>,
    pub users: UserSpec,
    pub terms: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub paper_rounding: bool,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mia_core::Error> for CliError {
    fn from(e: mia_core::Error) -> Self {
        match e {
            mia_core::Error::Serialization(m) => CliError::Io(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Parses `a`, `a,b,c`, `a:b` or `a:step:b` (ranges inclusive). Parts may
/// be mixed: `8,16:4:32`.
pub fn parse_list(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = |part: &str| CliError::Usage(format!("bad list element `{part}` in `{text}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        let nums: Vec<usize> = part
            .split(':')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad(part)))
            .collect::<Result<_, _>>()?;
        match nums[..] {
            [v] => out.push(v),
            [lo, hi] if lo <= hi => out.extend(lo..=hi),
            [lo, step, hi] if lo <= hi && step > 0 => out.extend((lo..=hi).step_by(step)),
            _ => return Err(bad(part)),
        }
    }
    Ok(out)
}

fn parse_users(text: &str) -> Result<UserSpec, CliError> {
    if text.trim().eq_ignore_ascii_case("auto") {
        Ok(UserSpec::Auto)
    } else {
        parse_list(text).map(UserSpec::List)
    }
}

pub fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Flags override the config file, which overrides the defaults.
    pub fn resolve(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(p) => load_file_config(p)?,
            None => FileConfig::default(),
        };
        let text = |flag: Option<String>, key: Option<ListValue>| flag.or_else(|| key.map(|v| v.to_text()));
        let command = cli.command;

        let antennas = match text(cli.m, file.m) {
            Some(t) => parse_list(&t)?,
            None => match command {
                Command::Sir | Command::Bound | Command::Convergence | Command::Ddm => vec![128],
                _ => TABLE_ANTENNAS.to_vec(),
            },
        };
        let users = match text(cli.k, file.k) {
            Some(t) => parse_users(&t)?,
            None => UserSpec::Auto,
        };
        let terms = match text(cli.n, file.n) {
            Some(t) => parse_list(&t)?,
            None => (1..=MAX_ESTIMATE_TERMS).collect(),
        };
        let workers = cli
            .workers
            .or(file.workers)
            .unwrap_or_else(|| RunOptions::default().workers);
        let config = RunConfig {
            command,
            antennas,
            users,
            terms,
            trials: cli.trials.or(file.trials).unwrap_or(command.default_trials()),
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            format: cli.format.or(file.format).unwrap_or_default(),
            out: cli.out.or(file.out).filter(|p| p.as_os_str() != "-"),
            paper_rounding: cli.paper_rounding || file.paper_rounding.unwrap_or(false),
            workers,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.antennas.is_empty() {
            return usage("empty --m list".into());
        }
        if self.trials == 0 {
            return usage("--trials must be at least 1".into());
        }
        if self.workers == 0 {
            return usage("--workers must be at least 1".into());
        }
        if let UserSpec::List(k) = &self.users {
            if k.is_empty() {
                return usage("empty --k list".into());
            }
        }
        let max_n = match self.command {
            Command::Sir => MAX_ESTIMATE_TERMS,
            Command::Bound => MAX_SIR_TERMS,
            _ => return Ok(()),
        };
        if self.terms.is_empty() {
            return usage("empty --n list".into());
        }
        if let Some(n) = self.terms.iter().find(|n| !(1..=max_n).contains(*n)) {
            return usage(format!("N = {n} outside 1..={max_n} for `{}`", self.command.name()));
        }
        Ok(())
    }

    fn users_for(&self, antennas: usize) -> Result<Vec<usize>, CliError> {
        match &self.users {
            UserSpec::List(k) => Ok(k.clone()),
            UserSpec::Auto => {
                let k = match self.command {
                    Command::Table1 | Command::Convergence => max_users_convergence(antennas)?,
                    _ => max_users_ddm(antennas)?,
                };
                Ok(vec![k])
            }
        }
    }

    fn kind(&self) -> Option<ExperimentKind> {
        match self.command {
            Command::Table1 | Command::Convergence => Some(ExperimentKind::Convergence),
            Command::Table2 | Command::Ddm => Some(ExperimentKind::Ddm),
            Command::Sir => Some(ExperimentKind::Sir),
            Command::Bound => Some(ExperimentKind::BoundComparison),
            Command::Thresholds => None,
        }
    }
}

/// Runs the resolved command. Progress lines go to `progress`.
pub fn execute(config: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut all_users = Vec::new();
    let mut configurations = Vec::new();
    let rows = match config.kind() {
        None => Rows::Thresholds(
            config
                .antennas
                .iter()
                .map(|&m| ThresholdRow::for_antennas(m))
                .collect::<Result<_, _>>()?,
        ),
        Some(kind) => {
            let opts = RunOptions {
                workers: config.workers,
                ..RunOptions::default()
            };
            let mut rows = Rows::empty(match kind {
                ExperimentKind::Convergence => RowKind::Convergence,
                ExperimentKind::Ddm => RowKind::Ddm,
                ExperimentKind::Sir | ExperimentKind::BoundComparison => RowKind::Sir,
            });
            for &m in &config.antennas {
                let k_list = config.users_for(m)?;
                progress(&format!(
                    "{}: M = {m}, K = {k_list:?}, {} trials",
                    config.command.name(),
                    config.trials
                ));
                let spec = ExperimentSpec {
                    antennas: m,
                    k_list: k_list.clone(),
                    n_list: config.terms.clone(),
                    trials: config.trials,
                    base_seed: config.seed,
                    kind,
                };
                let report = run_experiment(&spec, &opts)?;
                rows.extend(report.rows)?;
                configurations.extend(report.meta.configurations);
                all_users.extend(k_list);
            }
            rows
        }
    };
    let rows = if config.paper_rounding {
        rows.rounded_probabilities()
    } else {
        rows
    };
    Ok(Report {
        spec: ReportSpec {
            command: config.command.name().to_string(),
            antennas: config.antennas.clone(),
            users: all_users,
            terms: match config.command {
                Command::Sir | Command::Bound => config.terms.clone(),
                _ => Vec::new(),
            },
            trials: config.trials,
            seed: config.seed,
        },
        rows,
        meta: ReportMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            wall_time_s: start.elapsed().as_secs_f64(),
            configurations,
        },
    })
}

pub fn render(report: &Report, format: OutputFormat) -> Result<String, CliError> {
    Ok(match format {
        OutputFormat::Csv => report.rows.to_csv()?,
        OutputFormat::Json => report.to_json()? + "\n",
    })
}

/// Parses `args`, runs the command and writes the output. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run_cli(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mia: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::resolve(cli)?;
    let report = execute(&config, &mut |line| eprintln!("{line}"))?;
    let text = render(&report, config.format)?;
    match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
