//! Sepsis-3 rule system: organ step functions, total SOFA with precondition
//! exceptions, SOFA change indicator and the sepsis label.

mod precondition;
pub mod score;
mod worst;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use precondition::{Distribution, Precondition, PreconditionGroup, PRECONDITIONS};
pub use score::{
    horowitz, mean_arterial_pressure, score_cardio, score_cns, score_coag, score_liver,
    score_renal, score_resp, vasopressor_rate, Score, Vasopressors,
};
pub use worst::{admissible, map_minimum, normalize_fio2, worst_values, WorstValues};

/// Scoring options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleConfig {
    /// Require mechanical ventilation for respiratory scores 3 and 4.
    pub mv_gating: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig { mv_gating: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Organ {
    Cns,
    Cardio,
    Resp,
    Coag,
    Liver,
    Renal,
}

impl Organ {
    pub const ALL: [Organ; 6] = [
        Organ::Cns,
        Organ::Cardio,
        Organ::Resp,
        Organ::Coag,
        Organ::Liver,
        Organ::Renal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Organ::Cns => "CNS",
            Organ::Cardio => "cardio",
            Organ::Resp => "resp",
            Organ::Coag => "coag",
            Organ::Liver => "liver",
            Organ::Renal => "renal",
        }
    }

    /// Name used in the organ-failure remark ("a kidney failure").
    pub fn failure_name(self) -> &'static str {
        match self {
            Organ::Cns => "central nervous system",
            Organ::Cardio => "cardiovascular",
            Organ::Resp => "respiratory",
            Organ::Coag => "coagulation",
            Organ::Liver => "liver",
            Organ::Renal => "kidney",
        }
    }

    pub fn from_label(label: &str) -> Option<Organ> {
        Organ::ALL
            .into_iter()
            .find(|o| o.label().eq_ignore_ascii_case(label))
    }
}

impl fmt::Display for Organ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Six organ subscores in `Organ::ALL` order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subscores {
    pub cns: Score,
    pub cardio: Score,
    pub resp: Score,
    pub coag: Score,
    pub liver: Score,
    pub renal: Score,
}

impl Subscores {
    pub fn from_array(s: [Score; 6]) -> Self {
        Subscores {
            cns: s[0],
            cardio: s[1],
            resp: s[2],
            coag: s[3],
            liver: s[4],
            renal: s[5],
        }
    }

    pub fn get(&self, organ: Organ) -> Score {
        match organ {
            Organ::Cns => self.cns,
            Organ::Cardio => self.cardio,
            Organ::Resp => self.resp,
            Organ::Coag => self.coag,
            Organ::Liver => self.liver,
            Organ::Renal => self.renal,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Organ, Score)> + '_ {
        Organ::ALL.into_iter().map(|o| (o, self.get(o)))
    }

    /// Scores each organ from a day's worst values.
    pub fn from_worst(w: &WorstValues, config: RuleConfig) -> Subscores {
        let cns = w
            .gcs_sum()
            .and_then(|sum| score_cns(sum.round() as i32).ok())
            .unwrap_or(0);
        Subscores {
            cns,
            cardio: score_cardio(w.map_min, w.vasopressors()),
            resp: score_resp(w.pf_ratio(), w.mech_vent.unwrap_or(false), config.mv_gating),
            coag: score_coag(w.platelets_min),
            liver: score_liver(w.bilirubin_max),
            renal: score_renal(w.creatinine_max, w.urine_total),
        }
    }
}

/// Sum of the subscores, skipping the organ disregarded by an exception.
pub fn total_sofa(subscores: &Subscores, excluded: Option<Organ>) -> u8 {
    subscores
        .iter()
        .filter(|(organ, _)| Some(*organ) != excluded)
        .map(|(_, s)| s)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SofaSnapshot {
    pub subscores: Subscores,
    pub total: u8,
    pub inputs: WorstValues,
    pub excluded: Option<Organ>,
}

impl SofaSnapshot {
    pub fn new(inputs: WorstValues, exception: Option<&Precondition>, config: RuleConfig) -> Self {
        let subscores = Subscores::from_worst(&inputs, config);
        Self::from_subscores(subscores, inputs, exception)
    }

    pub fn from_subscores(
        subscores: Subscores,
        inputs: WorstValues,
        exception: Option<&Precondition>,
    ) -> Self {
        let excluded = exception.map(Precondition::organ);
        SofaSnapshot {
            total: total_sofa(&subscores, excluded),
            subscores,
            inputs,
            excluded,
        }
    }

    /// Re-totals under a different exception.
    pub fn with_exception(&self, exception: Option<&Precondition>) -> Self {
        Self::from_subscores(self.subscores, self.inputs.clone(), exception)
    }
}

/// Acute change indicator: future total exceeds the current one by 2 or more.
pub fn sofa_diff(current_total: u8, future_total: u8) -> bool {
    i32::from(future_total) - i32::from(current_total) >= 2
}

pub fn sepsis_label(diff: bool, infection: bool) -> bool {
    diff && infection
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SepsisVerdict {
    pub sofa_diff_indicator: bool,
    pub suspected_infection: bool,
    pub septic: bool,
    /// Future minus current total.
    pub delta: i32,
}

impl SepsisVerdict {
    pub fn from_totals(current_total: u8, future_total: u8, suspected_infection: bool) -> Self {
        let diff = sofa_diff(current_total, future_total);
        SepsisVerdict {
            sofa_diff_indicator: diff,
            suspected_infection,
            septic: sepsis_label(diff, suspected_infection),
            delta: i32::from(future_total) - i32::from(current_total),
        }
    }
}
