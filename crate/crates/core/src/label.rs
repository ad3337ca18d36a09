//! Deterministic Sepsis-3 labels for sliding windows.

use serde::{Deserialize, Serialize};

use crate::cohort::StayWindow;
use crate::observation::Observation;
use crate::sofa::{worst_values, RuleConfig, SepsisVerdict, SofaSnapshot};

/// Current and future SOFA snapshots of a window with the resulting verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub current: SofaSnapshot,
    pub future: SofaSnapshot,
    pub verdict: SepsisVerdict,
}

impl GroundTruth {
    pub fn new(current: SofaSnapshot, future: SofaSnapshot, suspected_infection: bool) -> Self {
        let verdict = SepsisVerdict::from_totals(current.total, future.total, suspected_infection);
        GroundTruth {
            current,
            future,
            verdict,
        }
    }
}

fn score_days(window: &StayWindow, future_day: &[Observation], config: RuleConfig) -> GroundTruth {
    let raw_current = worst_values(&window.observation, &window.demographics, None);
    let current_inputs = match &window.prior_worst {
        Some(prior) => raw_current.clone().carry_forward(prior),
        None => raw_current.clone(),
    };
    let future_inputs = worst_values(future_day, &window.demographics, Some(&raw_current));
    let exception = window.precondition.as_ref();
    GroundTruth::new(
        SofaSnapshot::new(current_inputs, exception, config),
        SofaSnapshot::new(future_inputs, exception, config),
        window.suspected_infection,
    )
}

/// Labels a window from its real prediction-day measurements.
pub fn label_window(window: &StayWindow, config: RuleConfig) -> GroundTruth {
    score_days(window, &window.prediction, config)
}

/// Labels a window with the prediction day replaced by forecast
/// observations (pipeline mode).
pub fn label_with_forecast(
    window: &StayWindow,
    forecast: &[Observation],
    config: RuleConfig,
) -> GroundTruth {
    score_days(window, forecast, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FeatureId;
    use crate::cohort::{Demographics, Gender, WindowKey};
    use crate::forecast::persistence_forecast;
    use crate::observation::StayId;
    use crate::sofa::Precondition;

    fn window(observation: Vec<Observation>, prediction: Vec<Observation>) -> StayWindow {
        StayWindow {
            key: WindowKey {
                stay: StayId::new("s"),
                window: 0,
            },
            observation,
            prediction,
            demographics: Demographics {
                age: 70.0,
                gender: Some(Gender::Female),
                weight: Some(70.0),
            },
            suspected_infection: true,
            precondition: None,
            prior_worst: None,
        }
    }

    #[test]
    fn renal_failure_makes_the_window_septic() {
        let w = window(
            vec![Observation::new(FeatureId::URINE, -3.0, 1095.0, "s")],
            vec![Observation::new(FeatureId::URINE, 3.0, 150.0, "s")],
        );
        let truth = label_window(&w, RuleConfig::default());
        assert_eq!(truth.current.total, 0);
        assert_eq!(truth.future.total, 4);
        assert!(truth.verdict.septic);

        let mut excepted = w.clone();
        excepted.precondition = Precondition::from_code("N18.9");
        let truth = label_window(&excepted, RuleConfig::default());
        assert_eq!(truth.future.total, 0);
        assert!(!truth.verdict.septic);
    }

    #[test]
    fn prediction_day_carries_forward_from_observation_day_only() {
        let mut w = window(
            vec![],
            vec![],
        );
        w.prior_worst = Some(crate::sofa::WorstValues {
            platelets_min: Some(40.0),
            ..Default::default()
        });
        let truth = label_window(&w, RuleConfig::default());
        assert_eq!(truth.current.subscores.coag, 3);
        assert_eq!(truth.future.subscores.coag, 0);
    }

    #[test]
    fn persistence_never_raises_the_total() {
        let obs = vec![
            Observation::new(FeatureId::PLATELETS, -5.0, 90.0, "s"),
            Observation::new(FeatureId::SBP, -4.0, 80.0, "s"),
            Observation::new(FeatureId::DBP, -4.0, 40.0, "s"),
        ];
        let w = window(obs.clone(), vec![]);
        let grid = persistence_forecast(&obs);
        let pipeline = label_with_forecast(&w, &grid.to_observations(&w.key.stay), RuleConfig::default());
        let truth = label_window(&w, RuleConfig::default());
        assert_eq!(pipeline.future.inputs, truth.current.inputs);
        assert!(!pipeline.verdict.sofa_diff_indicator);
    }
}
