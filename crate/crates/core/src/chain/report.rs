//! Aggregation of per-record checks into an evaluation report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    check_derivation, check_values, contingency, forced_prefix, margin_histogram, parse_chain,
    parse_prompt_context, Contingency, DerivationContext, Histogram, NodeKey, ValueKey,
};
use crate::corpus::Split;
use crate::error::{Error, Result};
use crate::label::GroundTruth;
use crate::sofa::RuleConfig;
use crate::verbalize::Tense;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub margin: f64,
    pub config: RuleConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            margin: super::DEFAULT_MARGIN,
            config: RuleConfig::default(),
        }
    }
}

/// One generated answer with the prompt it answered and its ground truth.
#[derive(Debug, Clone, Copy)]
pub struct EvalItem<'a> {
    pub prompt: &'a str,
    pub generated: &'a str,
    pub truth: &'a GroundTruth,
    pub split: Option<Split>,
}

/// A completion of a gold prefix for one target node.
#[derive(Debug, Clone, Copy)]
pub struct ForcedItem<'a> {
    pub prompt: &'a str,
    pub gold: &'a str,
    pub target: NodeKey,
    pub completion: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub row: String,
    pub correct: usize,
    pub total: usize,
    pub rate: f64,
}

impl Rate {
    pub fn new(row: impl Into<String>, correct: usize, total: usize) -> Self {
        Rate {
            row: row.into(),
            correct,
            total,
            rate: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
        }
    }
}

/// Effect of preconditions on a total, split by test distribution.
/// `changes_*` is the share of records whose total differs from the total
/// without the exception; `score_*` the derivation correctness of the total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionRow {
    pub variable: String,
    pub changes_id: Option<f64>,
    pub changes_ood: Option<f64>,
    pub score_id: Option<f64>,
    pub score_ood: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub margin: f64,
    pub mv_gating: bool,
    /// Resolved run configuration, filled in by the caller.
    pub meta: BTreeMap<String, String>,
    pub records: usize,
    pub complete_chains: usize,
    pub derivation: Vec<Rate>,
    pub forced_derivation: Vec<Rate>,
    pub value: Vec<Rate>,
    pub sepsis: Contingency,
    pub diff: Contingency,
    pub exceptions: Vec<ExceptionRow>,
    /// Ratios of stated to true future total SOFA.
    pub histogram: Histogram,
}

#[derive(Default)]
struct Tally {
    correct: usize,
    total: usize,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += usize::from(ok);
    }

    fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

pub fn evaluate(items: &[EvalItem<'_>], options: EvalOptions) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::Input("no model outputs to evaluate".into()));
    }
    let mut derivation: BTreeMap<NodeKey, Tally> = BTreeMap::new();
    let mut value: BTreeMap<ValueKey, Tally> = BTreeMap::new();
    let mut changes: BTreeMap<(Tense, Split), Tally> = BTreeMap::new();
    let mut total_scores: BTreeMap<(Tense, Split), Tally> = BTreeMap::new();
    let (mut sepsis_pred, mut sepsis_truth) = (Vec::new(), Vec::new());
    let (mut diff_pred, mut diff_truth) = (Vec::new(), Vec::new());
    let mut ratios = Vec::new();
    let mut complete = 0;

    for item in items {
        let chain = parse_chain(item.generated);
        complete += usize::from(chain.complete);
        let prompt = parse_prompt_context(item.prompt);
        let ctx = DerivationContext::new(&prompt, options.config, options.margin);
        let derived = check_derivation(&chain, &ctx);
        for (key, ok) in &derived {
            derivation.entry(*key).or_default().add(*ok);
        }
        for (key, ok) in check_values(&chain, item.truth, options.margin) {
            value.entry(key).or_default().add(ok);
        }

        sepsis_pred.push(chain.conclusion(NodeKey::Sepsis) == Some(1.0));
        sepsis_truth.push(item.truth.verdict.septic);
        diff_pred.push(chain.conclusion(NodeKey::Diff).is_some_and(|d| d >= 2.0));
        diff_truth.push(item.truth.verdict.sofa_diff_indicator);
        if let Some(stated) = chain.conclusion(NodeKey::Total(Tense::Future)) {
            ratios.push((stated, f64::from(item.truth.future.total)));
        }

        if let Some(split @ (Split::TestId | Split::TestOod)) = item.split {
            for tense in Tense::BOTH {
                let snap = match tense {
                    Tense::Current => &item.truth.current,
                    Tense::Future => &item.truth.future,
                };
                let plain = snap.with_exception(None).total;
                changes.entry((tense, split)).or_default().add(plain != snap.total);
                total_scores
                    .entry((tense, split))
                    .or_default()
                    .add(derived[&NodeKey::Total(tense)]);
            }
        }
    }

    let exceptions = Tense::BOTH
        .into_iter()
        .map(|tense| {
            let get = |m: &BTreeMap<(Tense, Split), Tally>, s| m.get(&(tense, s)).and_then(Tally::rate);
            ExceptionRow {
                variable: format!("{tense}/SOFA"),
                changes_id: get(&changes, Split::TestId),
                changes_ood: get(&changes, Split::TestOod),
                score_id: get(&total_scores, Split::TestId),
                score_ood: get(&total_scores, Split::TestOod),
            }
        })
        .collect();

    Ok(EvalReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        margin: options.margin,
        mv_gating: options.config.mv_gating,
        meta: BTreeMap::new(),
        records: items.len(),
        complete_chains: complete,
        derivation: NodeKey::all()
            .into_iter()
            .map(|k| {
                let t = &derivation[&k];
                Rate::new(k.label(), t.correct, t.total)
            })
            .collect(),
        forced_derivation: Vec::new(),
        value: ValueKey::all()
            .into_iter()
            .map(|k| {
                let t = &value[&k];
                Rate::new(k.label(), t.correct, t.total)
            })
            .collect(),
        sepsis: contingency(&sepsis_pred, &sepsis_truth)?,
        diff: contingency(&diff_pred, &diff_truth)?,
        exceptions,
        histogram: margin_histogram(&ratios),
    })
}

impl EvalReport {
    /// Plain-text tables: derivation (forced in brackets), values, and the
    /// SEPSIS contingency metrics.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "sofachain {} margin {} mv_gating {} records {} complete {}",
            self.tool_version, self.margin, self.mv_gating, self.records, self.complete_chains
        );
        let _ = writeln!(out, "\nderivation correctness (forced in brackets)");
        for r in &self.derivation {
            let forced = self
                .forced_derivation
                .iter()
                .find(|f| f.row == r.row)
                .map(|f| format!(" ({:.3})", f.rate))
                .unwrap_or_default();
            let _ = writeln!(out, "  {:<16} {:.3}{forced}", r.row, r.rate);
        }
        let _ = writeln!(out, "\nvalue correctness");
        for r in &self.value {
            let _ = writeln!(out, "  {:<28} {:.3}", r.row, r.rate);
        }
        for (name, c) in [("SEPSIS", &self.sepsis), ("SOFA_diff", &self.diff)] {
            let _ = writeln!(
                out,
                "\n{name} accuracy {:.3} specificity {:.3} sensitivity {:.3} F1 {:.3} (tp {} fp {} fn {} tn {})",
                c.accuracy, c.specificity, c.sensitivity, c.f1, c.tp, c.fp, c.fn_, c.tn
            );
            if !c.undefined.is_empty() {
                let _ = writeln!(out, "  undefined, reported as 0: {}", c.undefined.join(", "));
            }
        }
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(out, "\nexceptions: % changes ID, % changes OOD, ID score, OOD score");
        for e in &self.exceptions {
            let _ = writeln!(
                out,
                "  {:<16} {} {} {} {}",
                e.variable,
                fmt(e.changes_id),
                fmt(e.changes_ood),
                fmt(e.score_id),
                fmt(e.score_ood)
            );
        }
        out
    }
}

/// Forced derivation correctness per target node.
pub fn evaluate_forced(items: &[ForcedItem<'_>], options: EvalOptions) -> Result<Vec<Rate>> {
    let mut tallies: BTreeMap<NodeKey, Tally> = BTreeMap::new();
    for item in items {
        let mut text = forced_prefix(item.gold, item.target)?;
        text.push_str(item.completion);
        let chain = parse_chain(&text);
        let prompt = parse_prompt_context(item.prompt);
        let ctx = DerivationContext::new(&prompt, options.config, options.margin);
        let ok = check_derivation(&chain, &ctx)[&item.target];
        tallies.entry(item.target).or_default().add(ok);
    }
    Ok(NodeKey::all()
        .into_iter()
        .filter_map(|k| tallies.get(&k).map(|t| Rate::new(k.label(), t.correct, t.total)))
        .collect())
}
