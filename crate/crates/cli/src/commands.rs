use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use sofachain::catalog::FeatureCatalog;
use sofachain::chain::{evaluate, evaluate_forced, EvalItem, EvalOptions, EvalReport, ForcedItem};
use sofachain::cohort::{assemble_stays, cohort, parse_demographics, serialize_demographics, slide_windows, StayWindow, WindowKey};
use sofachain::corpus::{
    build_corpus, forecast_key, gold_outputs, parse_forced_outputs, parse_jsonl, parse_model_outputs,
    pipeline_outputs, to_jsonl, CorpusOptions, CorpusRecord, ForecastSource, LabelRecord, ModelOutput,
};
use sofachain::dense::{densify, FeatureStats};
use sofachain::forecast::{import_external_forecast, masked_mse, persistence_forecast, serialize_forecasts};
use sofachain::label::label_window;
use sofachain::observation::{parse_observations, serialize_observations};
use sofachain::sofa::RuleConfig;
use sofachain::synth::{synth_stays, SynthOptions};

use crate::config::{check_margin, parse_pool, pool_name, resolve_sizes, FileConfig};
use crate::{
    AnswerSource, Cli, Command, CorpusArgs, EvalArgs, ForecastArgs, ForecastSourceArg, InputArgs, LabelArgs,
    OutArgs, ReportArgs, ReportFormat, SynthArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let mut meta = BTreeMap::new();
    if let Some(path) = &cli.config {
        meta.insert("config".to_string(), path.display().to_string());
    }
    match cli.command {
        Command::Label(args) => label(args, &file),
        Command::Corpus(args) => corpus(args, &file),
        Command::Forecast(args) => forecast(args, &file),
        Command::Eval(args) => eval(args, &file, meta),
        Command::Report(args) => report(args, &file),
        Command::Synth(args) => synth(args, &file),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn required(flag: &Option<PathBuf>, file: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| file.clone())
        .ok_or_else(|| anyhow!("no {name} file given (flag, environment or config)"))
}

fn write_output(out: &OutArgs, file: &FileConfig, default_name: &str, content: &str) -> Result<()> {
    let target = match (&out.out, out.out_dir.as_ref().or(file.out_dir.as_ref())) {
        (Some(path), _) => Some(path.clone()),
        (None, Some(dir)) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Some(dir.join(default_name))
        }
        (None, None) => None,
    };
    match target {
        Some(path) => std::fs::write(&path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn rule_config(flag: Option<bool>, file: &FileConfig) -> RuleConfig {
    RuleConfig {
        mv_gating: flag.or(file.mv_gating).unwrap_or(true),
    }
}

struct Loaded {
    windows: Vec<StayWindow>,
    observations: Vec<sofachain::observation::Observation>,
}

fn load_windows(input: &InputArgs, file: &FileConfig) -> Result<Loaded> {
    let obs_path = required(&input.observations, &file.observations, "observations")?;
    let demo_path = required(&input.demographics, &file.demographics, "demographics")?;
    let observations = parse_observations(&read(&obs_path)?, FeatureCatalog::standard())
        .with_context(|| format!("parsing {}", obs_path.display()))?;
    let infos =
        parse_demographics(&read(&demo_path)?).with_context(|| format!("parsing {}", demo_path.display()))?;
    let stays = cohort(assemble_stays(observations.clone(), infos));
    let windows: Vec<StayWindow> = stays.iter().flat_map(slide_windows).collect();
    Ok(Loaded { windows, observations })
}

fn label(args: LabelArgs, file: &FileConfig) -> Result<()> {
    let config = rule_config(args.mv_gating, file);
    let loaded = load_windows(&args.input, file)?;
    let records: Vec<LabelRecord> = loaded
        .windows
        .iter()
        .map(|w| LabelRecord {
            stay: w.key.stay.clone(),
            window: w.key.window,
            precondition: w.precondition,
            ground_truth: label_window(w, config),
        })
        .collect();
    let septic = records.iter().filter(|r| r.ground_truth.verdict.septic).count();
    let rate = if records.is_empty() {
        0.0
    } else {
        septic as f64 / records.len() as f64
    };
    eprintln!(
        "labeled {} windows, {septic} septic, positive rate {:.2}%",
        records.len(),
        100.0 * rate
    );
    write_output(&args.output, file, "labels.jsonl", &to_jsonl(&records))
}

fn corpus(args: CorpusArgs, file: &FileConfig) -> Result<()> {
    let seed = args
        .seed
        .or(file.seed)
        .ok_or_else(|| anyhow!("corpus generation needs a seed"))?;
    let config = rule_config(args.mv_gating, file);
    let pool = match args.precondition_pool.as_deref().or(file.precondition_pool.as_deref()) {
        Some(s) => parse_pool(s)?,
        None => Default::default(),
    };
    let source = match args.forecast_source {
        Some(s) => s,
        None => match file.forecast_source.as_deref() {
            Some(s) => <ForecastSourceArg as clap::ValueEnum>::from_str(s, true)
                .map_err(|_| anyhow!("forecast source `{s}` is not one of truth, persistence, external"))?,
            None => ForecastSourceArg::Truth,
        },
    };
    let loaded = load_windows(&args.input, file)?;
    let external = match source {
        ForecastSourceArg::External => {
            let path = required(&args.forecasts, &file.forecasts, "forecasts")?;
            Some(
                import_external_forecast(&read(&path)?, FeatureCatalog::standard())
                    .with_context(|| format!("parsing {}", path.display()))?,
            )
        }
        _ => None,
    };
    let forecast = match (source, &external) {
        (ForecastSourceArg::Truth, _) => ForecastSource::GroundTruth,
        (ForecastSourceArg::Persistence, _) => ForecastSource::Persistence,
        (ForecastSourceArg::External, Some(map)) => ForecastSource::External(map),
        (ForecastSourceArg::External, None) => unreachable!("external forecasts are loaded above"),
    };
    let sizes = resolve_sizes([args.train, args.dev, args.test_id, args.test_ood], file, loaded.windows.len());
    let options = CorpusOptions {
        seed,
        sizes,
        preconditions: pool,
        forecast,
        config,
    };
    let records = build_corpus(&loaded.windows, &options).context("building corpus")?;
    eprintln!(
        "{} records (train {}, dev {}, test-ID {}, test-OOD {}), seed {seed}, pool {}",
        records.len(),
        sizes.train,
        sizes.dev,
        sizes.test_id,
        sizes.test_ood,
        pool_name(pool)
    );
    write_output(&args.output, file, "corpus.jsonl", &to_jsonl(&records))
}

fn forecast(args: ForecastArgs, file: &FileConfig) -> Result<()> {
    if let Some(path) = args.forecasts.clone().or_else(|| file.forecasts.clone()) {
        let grids = import_external_forecast(&read(&path)?, FeatureCatalog::standard())
            .with_context(|| format!("parsing {}", path.display()))?;
        eprintln!("validated {} forecast grids", grids.len());
        return write_output(&args.output, file, "forecasts.csv", &serialize_forecasts(&grids));
    }
    let loaded = load_windows(&args.input, file)?;
    let stats = FeatureStats::fit(&loaded.observations);
    let mut grids = BTreeMap::new();
    let mut mse = 0.0;
    for w in &loaded.windows {
        let grid = persistence_forecast(&w.observation);
        mse += masked_mse(&grid, &densify(&w.prediction, 0.0, &stats), &stats);
        grids.insert(forecast_key(&w.key), grid);
    }
    if !grids.is_empty() {
        eprintln!(
            "{} persistence forecasts, mean masked MSE {:.4}",
            grids.len(),
            mse / grids.len() as f64
        );
    }
    write_output(&args.output, file, "forecasts.csv", &serialize_forecasts(&grids))
}

fn eval(args: EvalArgs, file: &FileConfig, mut meta: BTreeMap<String, String>) -> Result<()> {
    let margin = check_margin(args.margin.or(file.margin).unwrap_or(sofachain::chain::DEFAULT_MARGIN))?;
    let config = rule_config(args.mv_gating, file);
    let corpus_path = required(&args.corpus, &file.corpus, "corpus")?;
    let records: Vec<CorpusRecord> =
        parse_jsonl(&read(&corpus_path)?).with_context(|| format!("parsing {}", corpus_path.display()))?;
    let index: BTreeMap<WindowKey, &CorpusRecord> = records.iter().map(|r| (r.key(), r)).collect();
    meta.insert("corpus".into(), corpus_path.display().to_string());

    let outputs: Vec<ModelOutput> = match args.answers {
        Some(AnswerSource::Gold) => {
            meta.insert("answers".into(), "gold".into());
            gold_outputs(&records)
        }
        Some(AnswerSource::Pipeline) => {
            meta.insert("answers".into(), "pipeline".into());
            pipeline_outputs(&records)
        }
        None => {
            let path = required(&args.outputs, &file.outputs, "model outputs")?;
            meta.insert("outputs".into(), path.display().to_string());
            parse_model_outputs(&read(&path)?).with_context(|| format!("parsing {}", path.display()))?
        }
    };
    let lookup = |stay: &sofachain::observation::StayId, window: u32| {
        let key = WindowKey {
            stay: stay.clone(),
            window,
        };
        index
            .get(&key)
            .copied()
            .ok_or_else(|| anyhow!("stay `{stay}` window {window} is not in the corpus"))
    };
    let items = outputs
        .iter()
        .map(|o| {
            let r = lookup(&o.stay, o.window)?;
            Ok(EvalItem {
                prompt: &r.prompt,
                generated: &o.generated_text,
                truth: &r.ground_truth,
                split: Some(r.split),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let options = EvalOptions { margin, config };
    let mut report: EvalReport = evaluate(&items, options)?;

    if let Some(path) = args.forced.clone().or_else(|| file.forced.clone()) {
        let forced = parse_forced_outputs(&read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
        let items = forced
            .iter()
            .map(|f| {
                let r = lookup(&f.stay, f.window)?;
                Ok(ForcedItem {
                    prompt: &r.prompt,
                    gold: &r.gold_answer,
                    target: f.target,
                    completion: &f.completion,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        report.forced_derivation = evaluate_forced(&items, options)?;
        meta.insert("forced".into(), path.display().to_string());
    }
    meta.insert("margin".into(), margin.to_string());
    meta.insert("mv_gating".into(), config.mv_gating.to_string());
    report.meta = meta;

    if let Some(path) = &args.histogram {
        std::fs::write(path, report.histogram.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    eprint!("{}", report.to_table());
    let json = serde_json::to_string_pretty(&report)? + "\n";
    write_output(&args.output, file, "report.json", &json)
}

fn report(args: ReportArgs, file: &FileConfig) -> Result<()> {
    let text = std::fs::read_to_string(&args.report).with_context(|| format!("reading {}", args.report.display()))?;
    let report: EvalReport =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.report.display()))?;
    let (content, name) = match args.format {
        ReportFormat::Table => (report.to_table(), "report.txt"),
        ReportFormat::Json => (serde_json::to_string_pretty(&report)? + "\n", "report.json"),
        ReportFormat::Csv => (report.histogram.to_csv(), "histogram.csv"),
    };
    write_output(&args.output, file, name, &content)
}

fn synth(args: SynthArgs, file: &FileConfig) -> Result<()> {
    let dir = args
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .ok_or_else(|| anyhow!("synth needs an output directory"))?;
    if args.days < 2 {
        bail!("synthetic stays need at least 2 days to form a window");
    }
    let stays = synth_stays(&SynthOptions {
        stays: args.stays,
        days: args.days,
        seed: args.seed.or(file.seed).unwrap_or(0),
        ..Default::default()
    });
    let observations: Vec<_> = stays.iter().flat_map(|s| s.observations.iter().cloned()).collect();
    let infos: Vec<_> = stays.iter().map(|s| s.info.clone()).collect();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, content) in [
        ("observations.csv", serialize_observations(&observations)),
        ("demographics.csv", serialize_demographics(&infos)),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("wrote {} stays to {}", stays.len(), dir.display());
    Ok(())
}
