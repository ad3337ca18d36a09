//! Derivation correctness: does each stated conclusion follow from the
//! stated premises under the scoring rules?

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChainNode, InferenceChain, NodeKey, PromptContext};
use crate::sofa::{
    horowitz, score_cardio, score_cns, score_coag, score_liver, score_renal, score_resp, Organ,
    RuleConfig, Vasopressors,
};
use crate::verbalize::{Tense, MV_RELEVANT_BELOW};

pub const DEFAULT_MARGIN: f64 = 0.05;

/// Ratio rule: `pred / truth` within `[1 - margin, 1 + margin]`. A zero
/// truth requires `|pred| <= 1e-9`.
pub fn within_margin(pred: f64, truth: f64, margin: f64) -> bool {
    if !pred.is_finite() || !truth.is_finite() {
        return false;
    }
    if truth == 0.0 {
        return pred.abs() <= 1e-9;
    }
    let ratio = pred / truth;
    ratio >= 1.0 - margin && ratio <= 1.0 + margin
}

/// What a derivation may take from outside the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivationContext {
    /// Infection flag from the prompt; when absent the closing sentence's
    /// own clause is used.
    pub suspected_infection: Option<bool>,
    pub exception: Option<Organ>,
    pub config: RuleConfig,
    pub margin: f64,
}

impl DerivationContext {
    pub fn new(prompt: &PromptContext, config: RuleConfig, margin: f64) -> Self {
        DerivationContext {
            suspected_infection: prompt.suspected_infection,
            exception: prompt.precondition.as_ref().map(|p| p.organ()),
            config,
            margin,
        }
    }
}

impl Default for DerivationContext {
    fn default() -> Self {
        DerivationContext {
            suspected_infection: None,
            exception: None,
            config: RuleConfig::default(),
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Reads the stated premises named in `names`; `None` if any is unstated.
fn premises<const N: usize>(node: &ChainNode, names: [&str; N]) -> Option<[Option<f64>; N]> {
    let mut out = [None; N];
    for (slot, name) in out.iter_mut().zip(names) {
        *slot = node.premise(name)?;
    }
    Some(out)
}

/// A derived quantity must be stated as `unknown` exactly when it cannot
/// be computed, and otherwise agree within the margin.
fn consistent(stated: Option<f64>, expected: Option<f64>, margin: f64) -> bool {
    match (stated, expected) {
        (None, None) => true,
        (Some(s), Some(e)) => within_margin(s, e, margin),
        _ => false,
    }
}

/// Subscore implied by an organ node's stated premises, or `None` when the
/// premises are incomplete or inconsistent.
fn derive_organ(organ: Organ, node: &ChainNode, ctx: &DerivationContext) -> Option<u8> {
    let m = ctx.margin;
    match organ {
        Organ::Cns => {
            let [eye, motor, verbal, sum] =
                premises(node, ["gcs_eye", "gcs_motor", "gcs_verbal", "gcs_sum"])?;
            let expected = match (eye, motor, verbal) {
                (Some(e), Some(mo), Some(v)) => Some(e + mo + v),
                _ => None,
            };
            if !consistent(sum, expected, m) {
                return None;
            }
            Some(sum.map_or(0, |s| score_cns(s.round() as i32).unwrap_or(0)))
        }
        Organ::Cardio => {
            let [map, dopamine, dobutamine, epinephrine, norepinephrine, _weight] = premises(
                node,
                ["map", "dopamine", "dobutamine", "epinephrine", "norepinephrine", "weight"],
            )?;
            Some(score_cardio(
                map,
                Vasopressors {
                    dopamine,
                    dobutamine,
                    epinephrine,
                    norepinephrine,
                },
            ))
        }
        Organ::Resp => {
            let [pao2, fio2, ratio] = premises(node, ["pao2", "fio2", "pf_ratio"])?;
            let expected = match (pao2, fio2) {
                (Some(p), Some(f)) => horowitz(p, f).ok(),
                _ => None,
            };
            if !consistent(ratio, expected, m) {
                return None;
            }
            let ventilated = node.premise("mv");
            let gated = ctx.config.mv_gating && ratio.is_some_and(|r| r < MV_RELEVANT_BELOW);
            if gated && ventilated.is_none() {
                return None;
            }
            let ventilated = ventilated.flatten() == Some(1.0);
            Some(score_resp(ratio, ventilated, ctx.config.mv_gating))
        }
        Organ::Coag => {
            let [platelets] = premises(node, ["platelets"])?;
            Some(score_coag(platelets))
        }
        Organ::Liver => {
            let [bilirubin] = premises(node, ["bilirubin"])?;
            Some(score_liver(bilirubin))
        }
        Organ::Renal => {
            let [urine, creatinine] = premises(node, ["urine", "creatinine"])?;
            Some(score_renal(creatinine, urine))
        }
    }
}

fn check_node(key: NodeKey, chain: &InferenceChain, ctx: &DerivationContext) -> bool {
    let m = ctx.margin;
    let Some(node) = chain.get(key) else {
        return false;
    };
    let Some(stated) = node.conclusion else {
        return false;
    };
    match key {
        NodeKey::Organ(organ, _) => {
            derive_organ(organ, node, ctx).is_some_and(|s| within_margin(stated, f64::from(s), m))
        }
        NodeKey::Total(tense) => {
            let mut sum = 0.0;
            for organ in Organ::ALL {
                if Some(organ) == ctx.exception {
                    continue;
                }
                match chain.conclusion(NodeKey::Organ(organ, tense)) {
                    Some(s) => sum += s,
                    None => return false,
                }
            }
            within_margin(stated, sum, m)
        }
        NodeKey::Diff => match (
            chain.conclusion(NodeKey::Total(Tense::Current)),
            chain.conclusion(NodeKey::Total(Tense::Future)),
        ) {
            (Some(cur), Some(fut)) => within_margin(stated, fut - cur, m),
            _ => false,
        },
        NodeKey::Sepsis => {
            let Some(Some(delta)) = node.premise("delta") else {
                return false;
            };
            let infection = match ctx.suspected_infection {
                Some(flag) => flag,
                None => node.premise("infection").flatten() == Some(1.0),
            };
            let expected = delta >= 2.0 && infection;
            (stated == 1.0) == expected
        }
    }
}

/// Checks all 16 nodes; a missing node or premise scores false.
pub fn check_derivation(chain: &InferenceChain, ctx: &DerivationContext) -> BTreeMap<NodeKey, bool> {
    NodeKey::all()
        .into_iter()
        .map(|key| (key, check_node(key, chain, ctx)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::parse_chain;

    fn ctx() -> DerivationContext {
        DerivationContext {
            suspected_infection: Some(true),
            ..Default::default()
        }
    }

    #[test]
    fn margin_boundaries() {
        assert!(within_margin(100.0, 100.0, 0.05));
        assert!(within_margin(104.9, 100.0, 0.05));
        assert!(!within_margin(105.1, 100.0, 0.05));
        assert!(within_margin(0.0, 0.0, 0.05));
        assert!(!within_margin(1e-6, 0.0, 0.05));
        assert!(!within_margin(f64::NAN, 1.0, 0.05));
    }

    #[test]
    fn cns_rule() {
        let ok = parse_chain("The minimum value of GCS_eye is 4.0, GCS_motor is 6.0 and GCS_verbal is 1.0, this produces the sum 11.0 and means the CNS SOFA is 2.");
        let bad = parse_chain("The minimum value of GCS_eye is 4.0, GCS_motor is 6.0 and GCS_verbal is 1.0, this produces the sum 11.0 and means the CNS SOFA is 3.");
        let key = NodeKey::Organ(Organ::Cns, Tense::Current);
        assert!(check_derivation(&ok, &ctx())[&key]);
        assert!(!check_derivation(&bad, &ctx())[&key]);
    }

    #[test]
    fn total_from_stated_subscores() {
        let text = "The minimum value of GCS_eye will be 4.0, GCS_motor will be 6.0 and GCS_verbal will be 1.0, this produces the sum 11.0 and means the CNS SOFA will be 2.
Because future minimum MAP will be 65.333, future max Dopamine will be 0, future max Dobutamine will be 0, future max Epinephrine will be 0 and future max Norepinephrine will be 0 with a patient weight of 62.8 kg, the cardiovascular SOFA will be 1.
Given that minimum PO2 will be 100.0 and minimum FiO2 will be 0.5 the forecasted PAO2FIO2 will be 200.0, this means the respiratory SOFA will be 2.
Because the Platelet count will be 310.0 the coagulation SOFA is going to be 0.
The maximum Bilirubin (Total) will be 1 leading to a liver SOFA of 0.
Because Urine output will be 150.0 and maximum creatinine in the blood will be 0.4 the renal SOFA will be 4.
To summarize: the patient will have a future total SOFA score of 9.";
        let chain = parse_chain(text);
        let result = check_derivation(&chain, &ctx());
        assert!(result[&NodeKey::Total(Tense::Future)]);
        for organ in Organ::ALL {
            assert!(result[&NodeKey::Organ(organ, Tense::Future)], "{organ}");
        }
        let excepted = DerivationContext {
            exception: Some(Organ::Renal),
            ..ctx()
        };
        assert!(!check_derivation(&chain, &excepted)[&NodeKey::Total(Tense::Future)]);
    }

    #[test]
    fn conclusion_without_premises_is_false() {
        let chain = parse_chain("Because the minimum Platelet count is high the coagulation SOFA is 0.");
        assert!(!check_derivation(&chain, &ctx())[&NodeKey::Organ(Organ::Coag, Tense::Current)]);
    }

    #[test]
    fn sepsis_uses_prompt_infection_flag() {
        let chain = parse_chain(
            "The patient will develop sepsis in the next 24 hours, because total SOFA increased by 4 and infection is suspected.",
        );
        assert!(check_derivation(&chain, &ctx())[&NodeKey::Sepsis]);
        let no_infection = DerivationContext {
            suspected_infection: Some(false),
            ..ctx()
        };
        assert!(!check_derivation(&chain, &no_infection)[&NodeKey::Sepsis]);
        // Diff needs both totals.
        assert!(!check_derivation(&chain, &ctx())[&NodeKey::Diff]);
    }

    #[test]
    fn gated_ratio_needs_ventilation_premise() {
        let without = parse_chain("Given that minimum PO2 is 141.0 and minimum FiO2 is 1 the calculated PAO2FIO2 is 141.0, this means the respiratory SOFA is 3.");
        let with = parse_chain("Given that minimum PO2 is 141.0 and minimum FiO2 is 1 with mechanical ventilation the calculated PAO2FIO2 is 141.0, this means the respiratory SOFA is 3.");
        let key = NodeKey::Organ(Organ::Resp, Tense::Current);
        assert!(!check_derivation(&without, &ctx())[&key]);
        assert!(check_derivation(&with, &ctx())[&key]);
        let ungated = DerivationContext {
            config: RuleConfig { mv_gating: false },
            ..ctx()
        };
        assert!(check_derivation(&without, &ungated)[&key]);
    }

    #[test]
    fn inconsistent_ratio_fails() {
        let chain = parse_chain("Given that minimum PO2 is 100.0 and minimum FiO2 is 0.5 the calculated PAO2FIO2 is 300.0, this means the respiratory SOFA is 1.");
        assert!(!check_derivation(&chain, &ctx())[&NodeKey::Organ(Organ::Resp, Tense::Current)]);
    }
}
