//! Corpus assembly: split assignment, precondition injection, gold answers
//! and the line-delimited record files exchanged with model runners.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chain::NodeKey;
use crate::cohort::{StayWindow, WindowKey};
use crate::error::{Error, Result};
use crate::forecast::{persistence_forecast, ForecastGrid};
use crate::label::{label_window, label_with_forecast, GroundTruth};
use crate::observation::{Observation, StayId};
use crate::sofa::{Precondition, PreconditionGroup, RuleConfig};
use crate::verbalize::{verbalize_chain, verbalize_pipeline_prompt, verbalize_prompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "dev")]
    Dev,
    #[serde(rename = "test-ID")]
    TestId,
    #[serde(rename = "test-OOD")]
    TestOod,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::TestId, Split::TestOod];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::TestId => "test-ID",
            Split::TestOod => "test-OOD",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test_id: usize,
    pub test_ood: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.dev + self.test_id + self.test_ood
    }

    fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Dev => self.dev,
            Split::TestId => self.test_id,
            Split::TestOod => self.test_ood,
        }
    }
}

/// Code pool a precondition is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodePool {
    #[serde(rename = "ID")]
    Id,
    #[serde(rename = "ID+OOD")]
    IdOod,
}

/// Which preconditions a corpus receives. With `IdOod`, only the test-OOD
/// split draws from the out-of-distribution codes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreconditionMode {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "ID")]
    Id,
    #[default]
    #[serde(rename = "ID+OOD")]
    IdOod,
}

/// One of six equally likely outcomes (five organ groups or none); within a
/// group the code is uniform over the pool.
pub fn assign_precondition<R: Rng + ?Sized>(rng: &mut R, pool: CodePool) -> Option<Precondition> {
    let outcome = rng.gen_range(0..=PreconditionGroup::ALL.len());
    let group = *PreconditionGroup::ALL.get(outcome)?;
    let codes = Precondition::pool(group, pool == CodePool::IdOod);
    codes.get(rng.gen_range(0..codes.len())).cloned()
}

/// Where the prediction day shown in pipeline prompts comes from.
#[derive(Debug, Clone, Copy)]
pub enum ForecastSource<'a> {
    /// No forecast in the prompt.
    GroundTruth,
    Persistence,
    External(&'a BTreeMap<StayId, ForecastGrid>),
}

/// Key of a window's grid in a forecast file: `stay#window`. A plain stay
/// id is accepted for window 0.
pub fn forecast_key(key: &WindowKey) -> StayId {
    StayId::new(format!("{}#{}", key.stay, key.window))
}

fn lookup_forecast<'a>(
    forecasts: &'a BTreeMap<StayId, ForecastGrid>,
    key: &WindowKey,
) -> Option<&'a ForecastGrid> {
    forecasts
        .get(&forecast_key(key))
        .or_else(|| (key.window == 0).then(|| forecasts.get(&key.stay)).flatten())
}

/// Forecast observations for a window, `None` for ground-truth mode.
pub fn window_forecast(window: &StayWindow, source: ForecastSource<'_>) -> Result<Option<Vec<Observation>>> {
    let grid = match source {
        ForecastSource::GroundTruth => return Ok(None),
        ForecastSource::Persistence => persistence_forecast(&window.observation),
        ForecastSource::External(map) => lookup_forecast(map, &window.key)
            .cloned()
            .ok_or_else(|| {
                Error::Input(format!(
                    "no forecast for stay `{}` window {}",
                    window.key.stay, window.key.window
                ))
            })?,
    };
    Ok(Some(grid.to_observations(&window.key.stay)))
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusOptions<'a> {
    pub seed: u64,
    pub sizes: SplitSizes,
    pub preconditions: PreconditionMode,
    pub forecast: ForecastSource<'a>,
    pub config: RuleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub stay: StayId,
    pub window: u32,
    pub split: Split,
    pub precondition: Option<Precondition>,
    pub prompt: String,
    pub gold_answer: String,
    pub ground_truth: GroundTruth,
    /// Answer derived from the forecast instead of the real prediction day.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_answer: Option<String>,
}

impl CorpusRecord {
    pub fn key(&self) -> WindowKey {
        WindowKey {
            stay: self.stay.clone(),
            window: self.window,
        }
    }
}

/// Shuffles windows under `seed`, cuts them into the requested splits and
/// renders prompts and gold answers. Deterministic for a given seed.
pub fn build_corpus(windows: &[StayWindow], options: &CorpusOptions<'_>) -> Result<Vec<CorpusRecord>> {
    let wanted = options.sizes.total();
    if wanted > windows.len() {
        return Err(Error::Contract(format!(
            "split sizes request {wanted} windows but only {} are available",
            windows.len()
        )));
    }
    let mut order: Vec<&StayWindow> = windows.iter().collect();
    order.sort_by(|a, b| a.key.cmp(&b.key));
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    order.shuffle(&mut rng);
    let mut codes = ChaCha8Rng::seed_from_u64(options.seed);
    codes.set_stream(1);

    let mut records = Vec::with_capacity(wanted);
    let mut next = order.into_iter();
    for split in Split::ALL {
        for source in next.by_ref().take(options.sizes.get(split)) {
            let pool = match (options.preconditions, split) {
                (PreconditionMode::None, _) => None,
                (PreconditionMode::IdOod, Split::TestOod) => Some(CodePool::IdOod),
                _ => Some(CodePool::Id),
            };
            let mut window = source.clone();
            window.precondition = pool.and_then(|p| assign_precondition(&mut codes, p));
            records.push(render_record(&window, split, options)?);
        }
    }
    Ok(records)
}

fn render_record(window: &StayWindow, split: Split, options: &CorpusOptions<'_>) -> Result<CorpusRecord> {
    let truth = label_window(window, options.config);
    let forecast = window_forecast(window, options.forecast)?;
    let (prompt, pipeline_answer) = match &forecast {
        None => (verbalize_prompt(window), None),
        Some(obs) => {
            let pipeline = label_with_forecast(window, obs, options.config);
            (
                verbalize_pipeline_prompt(window, obs),
                Some(verbalize_chain(&pipeline, options.config)),
            )
        }
    };
    Ok(CorpusRecord {
        stay: window.key.stay.clone(),
        window: window.key.window,
        split,
        precondition: window.precondition,
        prompt,
        gold_answer: verbalize_chain(&truth, options.config),
        ground_truth: truth,
        pipeline_answer,
    })
}

/// Ground truth of one window, as written by labeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub stay: StayId,
    pub window: u32,
    pub precondition: Option<Precondition>,
    pub ground_truth: GroundTruth,
}

/// A model answer to a corpus prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutput {
    pub stay: StayId,
    #[serde(default)]
    pub window: u32,
    pub generated_text: String,
}

/// A model completion of a forced gold prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedOutput {
    pub stay: StayId,
    #[serde(default)]
    pub window: u32,
    pub target: NodeKey,
    pub completion: String,
}

/// One JSON object per line.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Reads one JSON object per non-blank line.
pub fn parse_jsonl<T: DeserializeOwned>(source: &[u8]) -> Result<Vec<T>> {
    let text = std::str::from_utf8(source)
        .map_err(|e| Error::parse(0, format!("input is not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn parse_model_outputs(source: &[u8]) -> Result<Vec<ModelOutput>> {
    parse_jsonl(source)
}

pub fn parse_forced_outputs(source: &[u8]) -> Result<Vec<ForcedOutput>> {
    parse_jsonl(source)
}

/// Pipeline answers of a corpus as model outputs.
pub fn pipeline_outputs(records: &[CorpusRecord]) -> Vec<ModelOutput> {
    records
        .iter()
        .filter_map(|r| {
            r.pipeline_answer.as_ref().map(|text| ModelOutput {
                stay: r.stay.clone(),
                window: r.window,
                generated_text: text.clone(),
            })
        })
        .collect()
}

/// Gold answers of a corpus as model outputs.
pub fn gold_outputs(records: &[CorpusRecord]) -> Vec<ModelOutput> {
    records
        .iter()
        .map(|r| ModelOutput {
            stay: r.stay.clone(),
            window: r.window,
            generated_text: r.gold_answer.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{Demographics, Gender};
    use crate::sofa::Distribution;

    fn windows(n: usize) -> Vec<StayWindow> {
        (0..n)
            .map(|i| StayWindow {
                key: WindowKey {
                    stay: StayId::new(format!("s{i}")),
                    window: 0,
                },
                observation: vec![],
                prediction: vec![],
                demographics: Demographics {
                    age: 50.0,
                    gender: Some(Gender::Male),
                    weight: None,
                },
                suspected_infection: i % 2 == 0,
                precondition: None,
                prior_worst: None,
            })
            .collect()
    }

    fn options(sizes: SplitSizes) -> CorpusOptions<'static> {
        CorpusOptions {
            seed: 7,
            sizes,
            preconditions: PreconditionMode::IdOod,
            forecast: ForecastSource::GroundTruth,
            config: RuleConfig::default(),
        }
    }

    #[test]
    fn partition_six_two_two() {
        let sizes = SplitSizes {
            train: 6,
            dev: 2,
            test_id: 2,
            test_ood: 0,
        };
        let records = build_corpus(&windows(10), &options(sizes)).unwrap();
        assert_eq!(records.len(), 10);
        let count = |s| records.iter().filter(|r| r.split == s).count();
        assert_eq!((count(Split::Train), count(Split::Dev), count(Split::TestId)), (6, 2, 2));
        let mut stays: Vec<_> = records.iter().map(|r| r.stay.clone()).collect();
        stays.sort();
        stays.dedup();
        assert_eq!(stays.len(), 10);
    }

    #[test]
    fn overflowing_sizes_are_a_contract_violation() {
        let sizes = SplitSizes {
            train: 8,
            dev: 3,
            ..Default::default()
        };
        assert!(build_corpus(&windows(10), &options(sizes)).unwrap_err().is_contract_violation());
    }

    #[test]
    fn same_seed_same_corpus() {
        let sizes = SplitSizes {
            train: 20,
            test_ood: 20,
            ..Default::default()
        };
        let a = to_jsonl(&build_corpus(&windows(40), &options(sizes)).unwrap());
        let b = to_jsonl(&build_corpus(&windows(40), &options(sizes)).unwrap());
        assert_eq!(a, b);
        let records: Vec<CorpusRecord> = parse_jsonl(a.as_bytes()).unwrap();
        assert_eq!(to_jsonl(&records), a);
    }

    #[test]
    fn ood_codes_only_in_ood_split() {
        let sizes = SplitSizes {
            train: 300,
            test_ood: 300,
            ..Default::default()
        };
        let records = build_corpus(&windows(600), &options(sizes)).unwrap();
        let ood = |r: &CorpusRecord| {
            r.precondition
                .as_ref()
                .is_some_and(|p| p.distribution == Distribution::OutOfDistribution)
        };
        assert!(records.iter().filter(|r| r.split == Split::Train).all(|r| !ood(r)));
        assert!(records.iter().filter(|r| r.split == Split::TestOod).any(ood));
    }

    #[test]
    fn id_pool_never_draws_ood_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5000 {
            if let Some(p) = assign_precondition(&mut rng, CodePool::Id) {
                assert_eq!(p.distribution, Distribution::InDistribution);
            }
        }
    }

    #[test]
    fn model_output_window_defaults_to_zero() {
        let outputs = parse_model_outputs(b"{\"stay\":\"a\",\"generated_text\":\"x\"}\n\n").unwrap();
        assert_eq!(outputs[0].window, 0);
        let err = parse_model_outputs(b"{\"stay\":\"a\"}\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn persistence_prompts_and_pipeline_answers() {
        let mut ws = windows(1);
        ws[0].observation = vec![Observation::new(crate::catalog::FeatureId::PLATELETS, -3.0, 90.0, "s0")];
        let mut opts = options(SplitSizes {
            train: 1,
            ..Default::default()
        });
        opts.forecast = ForecastSource::Persistence;
        opts.preconditions = PreconditionMode::None;
        let records = build_corpus(&ws, &opts).unwrap();
        assert!(records[0].prompt.contains("Here are the forecasted measurements: Platelet Count at time 0.00: 90.0"));
        let pipeline = records[0].pipeline_answer.as_ref().unwrap();
        assert!(pipeline.contains("Because the Platelet count will be 90.0 the coagulation SOFA is going to be 2."));
        assert_eq!(pipeline_outputs(&records).len(), 1);
    }
}
