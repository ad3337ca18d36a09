//! Worst-value extraction over one 24 hour day.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::FeatureId;
use crate::cohort::Demographics;
use crate::numfmt::quantize;
use crate::observation::Observation;

use super::score::{horowitz, mean_arterial_pressure, vasopressor_rate, Vasopressors};

/// Per-day extrema feeding the organ step functions. Every field is
/// optional; a missing field contributes nothing to its organ score.
/// Vasopressor rates are weight-normalized (mcg/kg/min). All values are
/// quantized to three decimals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorstValues {
    pub gcs_eye: Option<f64>,
    pub gcs_motor: Option<f64>,
    pub gcs_verbal: Option<f64>,
    pub map_min: Option<f64>,
    pub dopamine_max: Option<f64>,
    pub dobutamine_max: Option<f64>,
    pub epinephrine_max: Option<f64>,
    pub norepinephrine_max: Option<f64>,
    pub pao2_min: Option<f64>,
    pub fio2_min: Option<f64>,
    pub mech_vent: Option<bool>,
    pub platelets_min: Option<f64>,
    pub bilirubin_max: Option<f64>,
    pub creatinine_max: Option<f64>,
    pub urine_total: Option<f64>,
    pub weight: Option<f64>,
}

impl WorstValues {
    pub fn gcs_sum(&self) -> Option<f64> {
        Some(quantize(self.gcs_eye? + self.gcs_motor? + self.gcs_verbal?))
    }

    /// PaO2/FiO2 computed from the day's minima, quantized.
    pub fn pf_ratio(&self) -> Option<f64> {
        horowitz(self.pao2_min?, self.fio2_min?).ok().map(quantize)
    }

    pub fn vasopressors(&self) -> Vasopressors {
        Vasopressors {
            dopamine: self.dopamine_max,
            dobutamine: self.dobutamine_max,
            epinephrine: self.epinephrine_max,
            norepinephrine: self.norepinephrine_max,
        }
    }

    /// Fills every missing field from `prior`.
    pub fn carry_forward(mut self, prior: &WorstValues) -> WorstValues {
        fn fill<T: Copy>(slot: &mut Option<T>, prior: Option<T>) {
            if slot.is_none() {
                *slot = prior;
            }
        }
        fill(&mut self.gcs_eye, prior.gcs_eye);
        fill(&mut self.gcs_motor, prior.gcs_motor);
        fill(&mut self.gcs_verbal, prior.gcs_verbal);
        fill(&mut self.map_min, prior.map_min);
        fill(&mut self.dopamine_max, prior.dopamine_max);
        fill(&mut self.dobutamine_max, prior.dobutamine_max);
        fill(&mut self.epinephrine_max, prior.epinephrine_max);
        fill(&mut self.norepinephrine_max, prior.norepinephrine_max);
        fill(&mut self.pao2_min, prior.pao2_min);
        fill(&mut self.fio2_min, prior.fio2_min);
        fill(&mut self.mech_vent, prior.mech_vent);
        fill(&mut self.platelets_min, prior.platelets_min);
        fill(&mut self.bilirubin_max, prior.bilirubin_max);
        fill(&mut self.creatinine_max, prior.creatinine_max);
        fill(&mut self.urine_total, prior.urine_total);
        fill(&mut self.weight, prior.weight);
        self
    }
}

/// FiO2 charted above 1 is a percentage.
pub fn normalize_fio2(value: f64) -> Option<f64> {
    let fraction = if value > 1.0 { value / 100.0 } else { value };
    (fraction > 0.0 && fraction <= 1.0).then_some(fraction)
}

/// Whether a raw value is usable for worst-value extraction. Non-positive
/// PaO2 and weight, and negative infusion rates or urine volumes, are
/// charting artifacts and are skipped.
pub fn admissible(feature: FeatureId, value: f64) -> bool {
    if feature == FeatureId::PAO2 || feature == FeatureId::WEIGHT {
        value > 0.0
    } else if feature == FeatureId::URINE
        || feature == FeatureId::DOPAMINE
        || feature == FeatureId::DOBUTAMINE
        || feature == FeatureId::EPINEPHRINE
        || feature == FeatureId::NOREPINEPHRINE
    {
        value >= 0.0
    } else {
        value.is_finite()
    }
}

fn min_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

/// Hour bucket index of a time, relative to the start of its day.
fn hour_bucket(time: f64) -> i64 {
    time.floor() as i64
}

/// Minimum MAP over co-timed SBP/DBP pairs. A pair is an SBP and a DBP
/// reading with the same timestamp (hence the same hour bucket); unpaired
/// or physiologically invalid readings are skipped.
pub fn map_minimum(window: &[Observation]) -> Option<f64> {
    let mut sbp: BTreeMap<(i64, u64), f64> = BTreeMap::new();
    for o in window.iter().filter(|o| o.feature == FeatureId::SBP) {
        sbp.entry((hour_bucket(o.time), o.time.to_bits())).or_insert(o.value);
    }
    min_of(
        window
            .iter()
            .filter(|o| o.feature == FeatureId::DBP)
            .filter_map(|d| {
                let s = sbp.get(&(hour_bucket(d.time), d.time.to_bits()))?;
                mean_arterial_pressure(*s, d.value).ok()
            }),
    )
}

/// Extracts the day's worst values. Fields not observed in `window` are
/// taken from `prior` (the preceding day's record) when present there.
///
/// Weight is the last `Weight` observation of the window, else the
/// demographic weight, else the prior day's weight. Vasopressor rates are
/// divided by that weight; without a weight they are missing.
pub fn worst_values(
    window: &[Observation],
    demographics: &Demographics,
    prior: Option<&WorstValues>,
) -> WorstValues {
    let values = |id: FeatureId| {
        window
            .iter()
            .filter(move |o| o.feature == id && admissible(id, o.value))
            .map(|o| o.value)
    };

    let weight = window
        .iter()
        .filter(|o| o.feature == FeatureId::WEIGHT && admissible(o.feature, o.value))
        .max_by(|a, b| a.time.total_cmp(&b.time))
        .map(|o| o.value)
        .or(demographics.weight)
        .or_else(|| prior.and_then(|p| p.weight));

    let vaso = |id: FeatureId| {
        max_of(values(id))
            .and_then(|rate| vasopressor_rate(rate, 1.0, weight))
    };

    let mech_vent = {
        let mut flags = values(FeatureId::MECH_VENT).peekable();
        flags.peek().is_some().then(|| flags.any(|v| v > 0.0))
    };

    let urine: Vec<f64> = values(FeatureId::URINE).collect();

    let q = |v: Option<f64>| v.map(quantize);
    let current = WorstValues {
        gcs_eye: q(min_of(values(FeatureId::GCS_EYE))),
        gcs_motor: q(min_of(values(FeatureId::GCS_MOTOR))),
        gcs_verbal: q(min_of(values(FeatureId::GCS_VERBAL))),
        map_min: q(map_minimum(window)),
        dopamine_max: q(vaso(FeatureId::DOPAMINE)),
        dobutamine_max: q(vaso(FeatureId::DOBUTAMINE)),
        epinephrine_max: q(vaso(FeatureId::EPINEPHRINE)),
        norepinephrine_max: q(vaso(FeatureId::NOREPINEPHRINE)),
        pao2_min: q(min_of(values(FeatureId::PAO2))),
        fio2_min: q(min_of(values(FeatureId::FIO2).filter_map(normalize_fio2))),
        mech_vent,
        platelets_min: q(min_of(values(FeatureId::PLATELETS))),
        bilirubin_max: q(max_of(values(FeatureId::BILIRUBIN))),
        creatinine_max: q(max_of(values(FeatureId::CREATININE))),
        urine_total: q((!urine.is_empty()).then(|| urine.iter().sum())),
        weight: q(weight),
    };
    match prior {
        Some(p) => current.carry_forward(p),
        None => current,
    }
}
