//! Value correctness: stated values against the ground truth.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::{within_margin, InferenceChain, NodeKey};
use crate::label::GroundTruth;
use crate::sofa::{Organ, WorstValues};
use crate::verbalize::Tense;

/// The 16 clinical variables stated in a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    GcsEye,
    GcsMotor,
    GcsVerbal,
    Map,
    Dopamine,
    Dobutamine,
    Epinephrine,
    Norepinephrine,
    Weight,
    PfRatio,
    Pao2,
    Fio2,
    Platelets,
    Bilirubin,
    Urine,
    Creatinine,
}

impl Variable {
    pub const ALL: [Variable; 16] = [
        Variable::GcsEye,
        Variable::GcsMotor,
        Variable::GcsVerbal,
        Variable::Map,
        Variable::Dopamine,
        Variable::Dobutamine,
        Variable::Epinephrine,
        Variable::Norepinephrine,
        Variable::Weight,
        Variable::PfRatio,
        Variable::Pao2,
        Variable::Fio2,
        Variable::Platelets,
        Variable::Bilirubin,
        Variable::Urine,
        Variable::Creatinine,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variable::GcsEye => "GCS-eye",
            Variable::GcsMotor => "GCS-motor",
            Variable::GcsVerbal => "GCS-verbal",
            Variable::Map => "MAP",
            Variable::Dopamine => "Dopamine",
            Variable::Dobutamine => "Dobutamine",
            Variable::Epinephrine => "Epinephrine",
            Variable::Norepinephrine => "Norepinephrine",
            Variable::Weight => "Weight",
            Variable::PfRatio => "PaO2/FiO2",
            Variable::Pao2 => "PaO2",
            Variable::Fio2 => "FiO2",
            Variable::Platelets => "Platelet",
            Variable::Bilirubin => "Bilirubin",
            Variable::Urine => "Urine",
            Variable::Creatinine => "Creatinine",
        }
    }

    fn organ(self) -> Organ {
        match self {
            Variable::GcsEye | Variable::GcsMotor | Variable::GcsVerbal => Organ::Cns,
            Variable::Map
            | Variable::Dopamine
            | Variable::Dobutamine
            | Variable::Epinephrine
            | Variable::Norepinephrine
            | Variable::Weight => Organ::Cardio,
            Variable::PfRatio | Variable::Pao2 | Variable::Fio2 => Organ::Resp,
            Variable::Platelets => Organ::Coag,
            Variable::Bilirubin => Organ::Liver,
            Variable::Urine | Variable::Creatinine => Organ::Renal,
        }
    }

    fn slot(self) -> &'static str {
        match self {
            Variable::GcsEye => "gcs_eye",
            Variable::GcsMotor => "gcs_motor",
            Variable::GcsVerbal => "gcs_verbal",
            Variable::Map => "map",
            Variable::Dopamine => "dopamine",
            Variable::Dobutamine => "dobutamine",
            Variable::Epinephrine => "epinephrine",
            Variable::Norepinephrine => "norepinephrine",
            Variable::Weight => "weight",
            Variable::PfRatio => "pf_ratio",
            Variable::Pao2 => "pao2",
            Variable::Fio2 => "fio2",
            Variable::Platelets => "platelets",
            Variable::Bilirubin => "bilirubin",
            Variable::Urine => "urine",
            Variable::Creatinine => "creatinine",
        }
    }

    pub fn truth(self, w: &WorstValues) -> Option<f64> {
        match self {
            Variable::GcsEye => w.gcs_eye,
            Variable::GcsMotor => w.gcs_motor,
            Variable::GcsVerbal => w.gcs_verbal,
            Variable::Map => w.map_min,
            Variable::Dopamine => w.dopamine_max,
            Variable::Dobutamine => w.dobutamine_max,
            Variable::Epinephrine => w.epinephrine_max,
            Variable::Norepinephrine => w.norepinephrine_max,
            Variable::Weight => w.weight,
            Variable::PfRatio => w.pf_ratio(),
            Variable::Pao2 => w.pao2_min,
            Variable::Fio2 => w.fio2_min,
            Variable::Platelets => w.platelets_min,
            Variable::Bilirubin => w.bilirubin_max,
            Variable::Urine => w.urine_total,
            Variable::Creatinine => w.creatinine_max,
        }
    }
}

/// A row of the value-correctness table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKey {
    Variable(Variable, Tense),
    Subscore(Organ, Tense),
    Total(Tense),
    Diff,
    Sepsis,
}

impl ValueKey {
    /// Clinical variables (current then future), then scores.
    pub fn all() -> Vec<ValueKey> {
        let mut keys = Vec::new();
        for tense in Tense::BOTH {
            keys.extend(Variable::ALL.into_iter().map(|v| ValueKey::Variable(v, tense)));
        }
        for tense in Tense::BOTH {
            keys.extend(Organ::ALL.into_iter().map(|o| ValueKey::Subscore(o, tense)));
            keys.push(ValueKey::Total(tense));
        }
        keys.push(ValueKey::Diff);
        keys.push(ValueKey::Sepsis);
        keys
    }

    pub fn label(&self) -> String {
        match self {
            ValueKey::Variable(v, t) => format!("{t}/{}", v.label()),
            ValueKey::Subscore(o, t) => format!("{t}/S_{}", o.label()),
            ValueKey::Total(t) => format!("{t}/SOFA"),
            ValueKey::Diff => "SOFA_diff".to_string(),
            ValueKey::Sepsis => "SEPSIS".to_string(),
        }
    }
}

impl fmt::Display for ValueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for ValueKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

fn snapshot(truth: &GroundTruth, tense: Tense) -> &crate::sofa::SofaSnapshot {
    match tense {
        Tense::Current => &truth.current,
        Tense::Future => &truth.future,
    }
}

fn compare(stated: Option<Option<f64>>, truth: Option<f64>, margin: f64) -> bool {
    match (stated, truth) {
        (None, _) => false,
        (Some(None), None) => true,
        (Some(Some(s)), Some(t)) => within_margin(s, t, margin),
        _ => false,
    }
}

/// Compares every stated value with its ground-truth counterpart. An
/// unstated value fails; `unknown` matches a missing truth.
pub fn check_values(
    chain: &InferenceChain,
    truth: &GroundTruth,
    margin: f64,
) -> BTreeMap<ValueKey, bool> {
    let score = |key: NodeKey| chain.conclusion(key).map(Some);
    ValueKey::all()
        .into_iter()
        .map(|key| {
            let ok = match key {
                ValueKey::Variable(v, tense) => {
                    let stated = chain
                        .get(NodeKey::Organ(v.organ(), tense))
                        .and_then(|n| n.premise(v.slot()));
                    compare(stated, v.truth(&snapshot(truth, tense).inputs), margin)
                }
                ValueKey::Subscore(o, tense) => compare(
                    score(NodeKey::Organ(o, tense)),
                    Some(f64::from(snapshot(truth, tense).subscores.get(o))),
                    margin,
                ),
                ValueKey::Total(tense) => compare(
                    score(NodeKey::Total(tense)),
                    Some(f64::from(snapshot(truth, tense).total)),
                    margin,
                ),
                ValueKey::Diff => compare(
                    score(NodeKey::Diff),
                    Some(f64::from(truth.verdict.delta)),
                    margin,
                ),
                ValueKey::Sepsis => {
                    chain.conclusion(NodeKey::Sepsis) == Some(f64::from(u8::from(truth.verdict.septic)))
                }
            };
            (key, ok)
        })
        .collect()
}
