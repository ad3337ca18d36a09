//! Hourly dense encoding of a 24 hour window with an observation mask.

use serde::{Deserialize, Serialize};

use crate::catalog::{FeatureId, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::observation::Observation;

pub const HOURS: usize = 24;

/// Per-feature standardization statistics, fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    /// Mean 0 and standard deviation 1 for every feature.
    pub fn identity() -> Self {
        FeatureStats {
            mean: vec![0.0; FEATURE_COUNT],
            std: vec![1.0; FEATURE_COUNT],
        }
    }

    /// Population mean/std per feature. Features never observed, or with
    /// zero spread, get std 1 so standardization stays finite.
    pub fn fit<'a>(observations: impl IntoIterator<Item = &'a Observation>) -> Self {
        let mut n = vec![0usize; FEATURE_COUNT];
        let mut mean = vec![0.0; FEATURE_COUNT];
        let mut m2 = vec![0.0; FEATURE_COUNT];
        for o in observations {
            let i = o.feature.index();
            n[i] += 1;
            let delta = o.value - mean[i];
            mean[i] += delta / n[i] as f64;
            m2[i] += delta * (o.value - mean[i]);
        }
        let std = (0..FEATURE_COUNT)
            .map(|i| {
                let var = if n[i] > 0 { m2[i] / n[i] as f64 } else { 0.0 };
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        FeatureStats { mean, std }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != FEATURE_COUNT || self.std.len() != FEATURE_COUNT {
            return Err(Error::Shape(format!(
                "statistics must cover {FEATURE_COUNT} features"
            )));
        }
        if self.std.iter().any(|s| !(s.is_finite() && *s > 0.0))
            || self.mean.iter().any(|m| !m.is_finite())
        {
            return Err(Error::Input("statistics must be finite with positive std".into()));
        }
        Ok(())
    }

    pub fn standardize(&self, feature: FeatureId, value: f64) -> f64 {
        (value - self.mean[feature.index()]) / self.std[feature.index()]
    }
}

/// 24 hourly rows of 131 standardized values plus the observed-mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseGrid {
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl DenseGrid {
    pub fn empty() -> Self {
        DenseGrid {
            values: vec![0.0; HOURS * FEATURE_COUNT],
            mask: vec![false; HOURS * FEATURE_COUNT],
        }
    }

    pub fn value(&self, hour: usize, feature: FeatureId) -> f64 {
        self.values[hour * FEATURE_COUNT + feature.index()]
    }

    pub fn observed(&self, hour: usize, feature: FeatureId) -> bool {
        self.mask[hour * FEATURE_COUNT + feature.index()]
    }

    /// Row-major model input: each hour's 131 values followed by its 131
    /// mask bits (1.0 observed, 0.0 imputed).
    pub fn to_input_rows(&self) -> Vec<Vec<f64>> {
        (0..HOURS)
            .map(|h| {
                let row = h * FEATURE_COUNT..(h + 1) * FEATURE_COUNT;
                self.values[row.clone()]
                    .iter()
                    .copied()
                    .chain(self.mask[row].iter().map(|m| if *m { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect()
    }
}

/// Encodes a window starting at `start` (hours): hour `h` covers
/// `[start + h, start + h + 1)`. Each cell holds the standardized first
/// observation of that hour (earliest time, ties broken by input order),
/// or 0.0 with mask false when nothing was observed.
pub fn densify(window: &[Observation], start: f64, stats: &FeatureStats) -> DenseGrid {
    let mut grid = DenseGrid::empty();
    let mut first_time = vec![f64::INFINITY; HOURS * FEATURE_COUNT];
    for o in window {
        let offset = o.time - start;
        if !(0.0..HOURS as f64).contains(&offset) {
            continue;
        }
        let hour = (offset.floor() as usize).min(HOURS - 1);
        let cell = hour * FEATURE_COUNT + o.feature.index();
        if o.time < first_time[cell] {
            first_time[cell] = o.time;
            grid.values[cell] = stats.standardize(o.feature, o.value);
            grid.mask[cell] = true;
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_observation_in_hour_wins() {
        let obs = [
            Observation::new(FeatureId::DBP, -22.10, 60.0, "s"),
            Observation::new(FeatureId::DBP, -22.37, 49.0, "s"),
            Observation::new(FeatureId::DBP, -22.37, 51.0, "s"),
        ];
        let grid = densify(&obs, -24.0, &FeatureStats::identity());
        assert_eq!(grid.value(1, FeatureId::DBP), 49.0);
        assert!(grid.observed(1, FeatureId::DBP));
        assert!(!grid.observed(0, FeatureId::DBP));
    }

    #[test]
    fn never_observed_feature_is_zero_and_unmasked() {
        let grid = densify(&[], -24.0, &FeatureStats::identity());
        for h in 0..HOURS {
            assert_eq!(grid.value(h, FeatureId::URINE), 0.0);
            assert!(!grid.observed(h, FeatureId::URINE));
        }
    }

    #[test]
    fn value_at_training_mean_standardizes_to_zero() {
        let train = [
            Observation::new(FeatureId::PLATELETS, -3.0, 100.0, "a"),
            Observation::new(FeatureId::PLATELETS, -2.0, 300.0, "a"),
        ];
        let stats = FeatureStats::fit(&train);
        assert_eq!(stats.mean[FeatureId::PLATELETS.index()], 200.0);
        assert_eq!(stats.std[FeatureId::PLATELETS.index()], 100.0);
        let grid = densify(
            &[Observation::new(FeatureId::PLATELETS, -5.5, 200.0, "b")],
            -24.0,
            &stats,
        );
        assert_eq!(grid.value(18, FeatureId::PLATELETS), 0.0);
        assert!(grid.observed(18, FeatureId::PLATELETS));
        assert_eq!(grid.to_input_rows()[18].len(), 2 * FEATURE_COUNT);
    }

    #[test]
    fn prediction_windows_start_at_zero() {
        let grid = densify(
            &[Observation::new(FeatureId::URINE, 23.5, 1.0, "s")],
            0.0,
            &FeatureStats::identity(),
        );
        assert!(grid.observed(23, FeatureId::URINE));
    }

    proptest! {
        #[test]
        fn mask_matches_first_observation_per_hour(
            raw in prop::collection::vec((0usize..FEATURE_COUNT, -24.0f64..0.0, -100.0f64..100.0), 0..60)
        ) {
            let obs: Vec<Observation> = raw
                .iter()
                .map(|(f, t, v)| Observation::new(FeatureId::from_index(*f).unwrap(), *t, *v, "s"))
                .collect();
            let grid = densify(&obs, -24.0, &FeatureStats::identity());
            for h in 0..HOURS {
                for f in FeatureId::all() {
                    let in_hour: Vec<&Observation> = obs
                        .iter()
                        .filter(|o| o.feature == f && (o.time + 24.0).floor() as usize == h)
                        .collect();
                    let first = in_hour
                        .iter()
                        .fold(None::<&Observation>, |acc, o| match acc {
                            Some(a) if a.time <= o.time => Some(a),
                            _ => Some(o),
                        });
                    match first {
                        Some(o) => {
                            prop_assert!(grid.observed(h, f));
                            prop_assert_eq!(grid.value(h, f), o.value);
                        }
                        None => {
                            prop_assert!(!grid.observed(h, f));
                            prop_assert_eq!(grid.value(h, f), 0.0);
                        }
                    }
                }
            }
        }
    }
}
