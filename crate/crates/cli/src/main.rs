mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Sepsis-3 labeling, inference-chain corpora and chain evaluation.
///
/// Every flag can also be set through a `SOFACHAIN_*` environment variable
/// or a TOML file given with `--config`. Flags win over the environment,
/// which wins over the file.
///
/// Exit codes: 0 success, 1 input error, 2 contract violation.
#[derive(Debug, Parser)]
#[command(name = "sofachain", version)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, env = "SOFACHAIN_CONFIG", global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every window and write its ground truth as JSON lines.
    Label(LabelArgs),
    /// Build a prompt / gold-answer corpus with splits and preconditions.
    Corpus(CorpusArgs),
    /// Write persistence forecasts, or validate and normalize an external file.
    ///
    /// Forecast files use either a sparse layout (`stay,hour,feature,value`
    /// records) or dense blocks (`@stay <id>` followed by 24 rows of 131
    /// comma-separated values in catalog order). Grids are keyed
    /// `<stay>#<window>`; a bare stay id is accepted for window 0.
    Forecast(ForecastArgs),
    /// Evaluate generated inference chains against a corpus.
    Eval(EvalArgs),
    /// Render a saved evaluation report.
    Report(ReportArgs),
    /// Generate a seeded synthetic cohort.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Observations file (`feature,time,value,stay`).
    #[arg(long, env = "SOFACHAIN_OBSERVATIONS")]
    pub observations: Option<PathBuf>,
    /// Demographics file (`stay,age,gender,weight,los_hours,suspected_infection`).
    #[arg(long, env = "SOFACHAIN_DEMOGRAPHICS")]
    pub demographics: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output file; standard output when neither this nor an output directory is set.
    #[arg(long, env = "SOFACHAIN_OUT")]
    pub out: Option<PathBuf>,
    /// Directory receiving outputs under their default names.
    #[arg(long, env = "SOFACHAIN_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// Score respiratory 3 and 4 only under mechanical ventilation.
    #[arg(long, env = "SOFACHAIN_MV_GATING")]
    pub mv_gating: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForecastSourceArg {
    /// No forecast in the prompt.
    Truth,
    Persistence,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutArgs,
    #[arg(long, env = "SOFACHAIN_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "SOFACHAIN_MV_GATING")]
    pub mv_gating: Option<bool>,
    /// Precondition pool: none, ID or ID+OOD.
    #[arg(long, env = "SOFACHAIN_PRECONDITION_POOL")]
    pub precondition_pool: Option<String>,
    /// Forecast shown in pipeline prompts.
    #[arg(long, env = "SOFACHAIN_FORECAST_SOURCE", value_enum)]
    pub forecast_source: Option<ForecastSourceArg>,
    /// Forecast file for the external source.
    #[arg(long, env = "SOFACHAIN_FORECASTS")]
    pub forecasts: Option<PathBuf>,
    #[arg(long, env = "SOFACHAIN_TRAIN")]
    pub train: Option<usize>,
    #[arg(long, env = "SOFACHAIN_DEV")]
    pub dev: Option<usize>,
    #[arg(long, env = "SOFACHAIN_TEST_ID")]
    pub test_id: Option<usize>,
    #[arg(long, env = "SOFACHAIN_TEST_OOD")]
    pub test_ood: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutArgs,
    /// External forecast file to validate instead of computing persistence.
    #[arg(long, env = "SOFACHAIN_FORECASTS")]
    pub forecasts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnswerSource {
    /// The corpus gold answers.
    Gold,
    /// The corpus pipeline answers.
    Pipeline,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Corpus file written by `corpus`.
    #[arg(long, env = "SOFACHAIN_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// Model outputs: JSON lines of `{stay, window, generated_text}`.
    #[arg(long, env = "SOFACHAIN_OUTPUTS")]
    pub outputs: Option<PathBuf>,
    /// Evaluate answers stored in the corpus instead of model outputs.
    #[arg(long, env = "SOFACHAIN_ANSWERS", value_enum, conflicts_with = "outputs")]
    pub answers: Option<AnswerSource>,
    /// Forced completions: JSON lines of `{stay, window, target, completion}`.
    #[arg(long, env = "SOFACHAIN_FORCED")]
    pub forced: Option<PathBuf>,
    #[arg(long, env = "SOFACHAIN_MARGIN")]
    pub margin: Option<f64>,
    #[arg(long, env = "SOFACHAIN_MV_GATING")]
    pub mv_gating: Option<bool>,
    /// Also write the ratio histogram as CSV.
    #[arg(long, env = "SOFACHAIN_HISTOGRAM")]
    pub histogram: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
    /// Ratio histogram with interval markers.
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Report written by `eval`.
    #[arg(long, env = "SOFACHAIN_REPORT")]
    pub report: PathBuf,
    #[arg(long, env = "SOFACHAIN_FORMAT", value_enum, default_value = "table")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Directory receiving observations.csv and demographics.csv.
    #[arg(long, env = "SOFACHAIN_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, env = "SOFACHAIN_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "SOFACHAIN_STAYS", default_value_t = 100)]
    pub stays: usize,
    #[arg(long, env = "SOFACHAIN_DAYS", default_value_t = 3)]
    pub days: usize,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let contract = err
        .chain()
        .filter_map(|e| e.downcast_ref::<sofachain::Error>())
        .any(sofachain::Error::is_contract_violation);
    if contract {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn contract_errors_map_to_two() {
        let e = anyhow::Error::new(sofachain::Error::Contract("x".into())).context("building corpus");
        assert_eq!(exit_code(&e), 2);
        let e = anyhow::Error::new(sofachain::Error::Input("x".into()));
        assert_eq!(exit_code(&e), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), 1);
    }
}
