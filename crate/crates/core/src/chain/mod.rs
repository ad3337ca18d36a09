//! Parsing of generated inference chains and their evaluation.

mod derive;
mod forced;
mod metrics;
mod report;
mod values;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::sofa::{Organ, Precondition};
use crate::verbalize::{total_sentence, Tense, CLOSING, ORGAN_SENTENCES};

pub use derive::{check_derivation, within_margin, DerivationContext, DEFAULT_MARGIN};
pub use forced::forced_prefix;
pub use metrics::{contingency, margin_histogram, Contingency, Histogram, Marker};
pub use report::{
    evaluate, evaluate_forced, EvalItem, EvalOptions, EvalReport, ExceptionRow, ForcedItem, Rate,
};
pub use values::{check_values, ValueKey, Variable};

/// Identity of a node in the inference graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Organ(Organ, Tense),
    Total(Tense),
    Diff,
    Sepsis,
}

impl NodeKey {
    /// The 16 nodes in text order.
    pub fn all() -> Vec<NodeKey> {
        let mut keys = Vec::with_capacity(16);
        for tense in Tense::BOTH {
            keys.extend(Organ::ALL.into_iter().map(|o| NodeKey::Organ(o, tense)));
            keys.push(NodeKey::Total(tense));
        }
        keys.push(NodeKey::Diff);
        keys.push(NodeKey::Sepsis);
        keys
    }

    pub fn label(&self) -> String {
        match self {
            NodeKey::Organ(o, t) => format!("{}/{}", o.label(), t),
            NodeKey::Total(t) => format!("total/{t}"),
            NodeKey::Diff => "diff".to_string(),
            NodeKey::Sepsis => "sepsis".to_string(),
        }
    }

    /// Parses `renal/future`, `renal:future`, `total/current`, `diff` or
    /// `sepsis` (case-insensitive).
    pub fn parse(s: &str) -> Option<NodeKey> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "diff" => return Some(NodeKey::Diff),
            "sepsis" => return Some(NodeKey::Sepsis),
            _ => {}
        }
        let (head, tense) = s.split_once(['/', ':'])?;
        let tense = match tense {
            "current" => Tense::Current,
            "future" => Tense::Future,
            _ => return None,
        };
        if head == "total" {
            return Some(NodeKey::Total(tense));
        }
        Organ::from_label(head).map(|o| NodeKey::Organ(o, tense))
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for NodeKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for NodeKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        NodeKey::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown node `{s}`")))
    }
}

/// A node as stated in the text. `premises` maps slot names to values;
/// an explicit `unknown` is `None`, an unstated premise has no entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainNode {
    pub key: NodeKey,
    pub premises: BTreeMap<String, Option<f64>>,
    pub conclusion: Option<f64>,
    /// Byte range of the sentence in the source text.
    pub span: (usize, usize),
}

impl ChainNode {
    pub fn premise(&self, name: &str) -> Option<Option<f64>> {
        self.premises.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceChain {
    pub nodes: Vec<ChainNode>,
    pub raw: String,
    pub complete: bool,
}

impl InferenceChain {
    pub fn get(&self, key: NodeKey) -> Option<&ChainNode> {
        self.nodes.iter().find(|n| n.key == key)
    }

    pub fn conclusion(&self, key: NodeKey) -> Option<f64> {
        self.get(key).and_then(|n| n.conclusion)
    }
}

fn take_conclusion(slots: &mut BTreeMap<String, Option<f64>>, name: &str) -> Option<f64> {
    slots.remove(name).flatten()
}

/// Keyword-anchored extraction of the 16 nodes. Never fails; sentences
/// that are absent leave their node out. A sentence whose premise values
/// cannot be read still yields its conclusion, with no premises.
pub fn parse_chain(text: &str) -> InferenceChain {
    let mut nodes = Vec::new();
    for sentence in ORGAN_SENTENCES.iter() {
        let key = NodeKey::Organ(sentence.organ, sentence.tense);
        let node = if let Some(mut m) = sentence.template.find(text) {
            let conclusion = take_conclusion(&mut m.slots, "score");
            Some(ChainNode {
                key,
                premises: m.slots,
                conclusion,
                span: (m.start, m.end),
            })
        } else {
            sentence.template.find_loose(text).map(|mut m| ChainNode {
                key,
                conclusion: take_conclusion(&mut m.slots, "score"),
                premises: BTreeMap::new(),
                span: (m.start, m.end),
            })
        };
        nodes.extend(node);
    }
    for tense in Tense::BOTH {
        if let Some(mut m) = total_sentence(tense).find(text) {
            nodes.push(ChainNode {
                key: NodeKey::Total(tense),
                conclusion: take_conclusion(&mut m.slots, "score"),
                premises: BTreeMap::new(),
                span: (m.start, m.end),
            });
        }
    }
    if let Some(m) = CLOSING.find(text) {
        let flag = |name: &str| m.slots.get(name).copied().flatten().unwrap_or(0.0);
        let delta = m.slots.get("delta").copied().flatten();
        nodes.push(ChainNode {
            key: NodeKey::Diff,
            premises: BTreeMap::new(),
            conclusion: delta,
            span: (m.start, m.end),
        });
        let mut premises = BTreeMap::new();
        premises.insert("delta".to_string(), delta);
        premises.insert("infection".to_string(), Some(1.0 - flag("noinf")));
        nodes.push(ChainNode {
            key: NodeKey::Sepsis,
            premises,
            conclusion: Some(1.0 - flag("neg")),
            span: (m.start, m.end),
        });
    }
    nodes.sort_by_key(|n| (n.span.0, n.key));
    let complete = nodes.len() == 16;
    InferenceChain {
        nodes,
        raw: text.to_string(),
        complete,
    }
}

/// Facts stated in a prompt.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PromptContext {
    pub suspected_infection: Option<bool>,
    /// ICD-10 code as written, recognized or not.
    pub precondition_code: Option<String>,
    pub precondition: Option<Precondition>,
}

static INFECTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\bdoctors\s+(don't\s+|do\s+not\s+)?suspect\s+an\s+infection").expect("regex")
});
static PRECONDITION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"precondition\s+given\s+by\s+the\s+ICD-10\s+code\s+([A-Z][0-9]{2}(?:\.[0-9A-Z]+)?)")
        .expect("regex")
});

pub fn parse_prompt_context(prompt: &str) -> PromptContext {
    let suspected_infection = INFECTION.captures(prompt).map(|c| c.get(1).is_none());
    let precondition_code = PRECONDITION
        .captures(prompt)
        .map(|c| c[1].to_string());
    let precondition = precondition_code.as_deref().and_then(Precondition::from_code);
    PromptContext {
        suspected_infection,
        precondition_code,
        precondition,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cns_sentence() {
        let chain = parse_chain(
            "The minimum value of GCS_eye is 4.0, GCS_motor is 6.0 and GCS_verbal is 1.0, this produces the sum 11.0 and means the CNS SOFA is 2.",
        );
        let node = chain.get(NodeKey::Organ(Organ::Cns, Tense::Current)).unwrap();
        assert_eq!(node.premise("gcs_sum"), Some(Some(11.0)));
        assert_eq!(node.conclusion, Some(2.0));
        assert!(!chain.complete);
    }

    #[test]
    fn future_total() {
        let chain = parse_chain("To summarize: the patient will have a future total SOFA score of 9.");
        assert_eq!(chain.conclusion(NodeKey::Total(Tense::Future)), Some(9.0));
        assert_eq!(chain.conclusion(NodeKey::Total(Tense::Current)), None);
    }

    #[test]
    fn empty_text() {
        let chain = parse_chain("");
        assert!(chain.nodes.is_empty());
        assert!(!chain.complete);
    }

    #[test]
    fn example_numbers_parse() {
        let chain = parse_chain(
            "Because minimum MAP is 55.333, max Dopamine is 0, max Dobutamine is 0, max Epinephrine is 0 and max Norepinephrine is 0 with a patient weight of 62.8 kg, the cardiovascular SOFA is 1.\n\
             The maximum Bilirubin (Total) is 1 leading to a liver SOFA of 0.",
        );
        let cardio = chain.get(NodeKey::Organ(Organ::Cardio, Tense::Current)).unwrap();
        assert_eq!(cardio.premise("dopamine"), Some(Some(0.0)));
        assert_eq!(cardio.premise("weight"), Some(Some(62.8)));
        assert_eq!(chain.conclusion(NodeKey::Organ(Organ::Liver, Tense::Current)), Some(0.0));
        assert!(chain.get(NodeKey::Organ(Organ::Liver, Tense::Future)).is_none());
    }

    #[test]
    fn closing_sentence_yields_diff_and_sepsis() {
        let chain = parse_chain(
            "The patient will not develop sepsis in the next 24 hours, because total SOFA increased only by -1 and infection is suspected.",
        );
        assert_eq!(chain.conclusion(NodeKey::Diff), Some(-1.0));
        let sepsis = chain.get(NodeKey::Sepsis).unwrap();
        assert_eq!(sepsis.conclusion, Some(0.0));
        assert_eq!(sepsis.premise("infection"), Some(Some(1.0)));
    }

    #[test]
    fn garbled_premise_keeps_conclusion_only() {
        let chain = parse_chain("Because the minimum Platelet count is high the coagulation SOFA is 0.");
        let node = chain.get(NodeKey::Organ(Organ::Coag, Tense::Current)).unwrap();
        assert!(node.premises.is_empty());
        assert_eq!(node.conclusion, Some(0.0));
    }

    #[test]
    fn first_statement_wins() {
        let chain = parse_chain(
            "To summarize: the patient has a total SOFA score of 5. To summarize: the patient has a total SOFA score of 7.",
        );
        assert_eq!(chain.conclusion(NodeKey::Total(Tense::Current)), Some(5.0));
    }

    #[test]
    fn node_keys_round_trip() {
        let keys = NodeKey::all();
        assert_eq!(keys.len(), 16);
        for k in keys {
            assert_eq!(NodeKey::parse(&k.label()), Some(k));
        }
        assert_eq!(
            NodeKey::parse("renal:future"),
            Some(NodeKey::Organ(Organ::Renal, Tense::Future))
        );
        assert_eq!(NodeKey::parse("kidney:future"), None);
    }

    #[test]
    fn prompt_context() {
        let ctx = parse_prompt_context(
            "Now answer the following question:\nThe patient has an existing precondition given by the ICD-10 code N18.9.\nThe doctors suspect an infection, based on",
        );
        assert_eq!(ctx.suspected_infection, Some(true));
        assert_eq!(ctx.precondition.unwrap().icd_code, "N18.9");
        let ctx = parse_prompt_context("The doctors don't suspect an infection");
        assert_eq!(ctx.suspected_infection, Some(false));
        assert_eq!(ctx.precondition, None);
        let ctx = parse_prompt_context("Doctors suspect an infection, based on");
        assert_eq!(ctx.suspected_infection, Some(true));
        assert_eq!(parse_prompt_context("").suspected_infection, None);
    }
}
