//! Sentence templates shared by the verbalizer and the chain parser.
//!
//! Template syntax:
//! - `{name}`: a number slot, rendered with `format_value` or `unknown`.
//! - `{#name}`: an integer slot (scores, SOFA change).
//! - `{?name:word}`: an optional word, rendered as ` word` when set.
//! - `{?name:a|b}`: an optional choice, ` a` for true, ` b` for false,
//!   nothing when absent.
//!
//! Literal spaces match any run of whitespace when parsing.

use std::collections::BTreeMap;

use regex::{Captures, Regex};

use crate::numfmt::{format_value, parse_number};

pub(crate) const NUMBER: &str = r"-?\d+(?:\.\d+)?";

#[derive(Debug, Clone, PartialEq)]
enum Part {
    Literal(&'static str),
    Value(&'static str),
    Integer(&'static str),
    Flag(&'static str, &'static str),
    Choice(&'static str, &'static str, &'static str),
}

/// A compiled sentence template.
#[derive(Debug)]
pub(crate) struct Template {
    parts: Vec<Part>,
    full: Regex,
    loose: Regex,
}

/// Values for rendering. Missing value slots render as `unknown`; missing
/// flags and choices render as nothing.
#[derive(Debug, Default, Clone)]
pub(crate) struct Slots {
    pub values: BTreeMap<&'static str, Option<f64>>,
    pub integers: BTreeMap<&'static str, i64>,
    pub flags: BTreeMap<&'static str, bool>,
}

impl Slots {
    pub fn value(mut self, name: &'static str, v: Option<f64>) -> Self {
        self.values.insert(name, v);
        self
    }

    pub fn integer(mut self, name: &'static str, v: i64) -> Self {
        self.integers.insert(name, v);
        self
    }

    pub fn flag(mut self, name: &'static str, v: Option<bool>) -> Self {
        if let Some(v) = v {
            self.flags.insert(name, v);
        }
        self
    }
}

/// A stated slot: `Some(None)` is an explicit `unknown`.
pub(crate) type Stated = BTreeMap<String, Option<f64>>;

/// One template match inside a larger text.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Match {
    pub start: usize,
    pub end: usize,
    /// Slot values; absent keys were not stated.
    pub slots: Stated,
    /// Byte offset just past each matched slot.
    pub slot_ends: BTreeMap<String, usize>,
}

fn split(text: &'static str) -> Vec<Part> {
    let mut parts = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            parts.push(Part::Literal(&rest[..open]));
        }
        let close = open + rest[open..].find('}').expect("unterminated slot");
        let body = &rest[open + 1..close];
        let part = if let Some(flag) = body.strip_prefix('?') {
            let (name, words) = flag.split_once(':').expect("flag without words");
            match words.split_once('|') {
                Some((a, b)) => Part::Choice(name, a, b),
                None => Part::Flag(name, words),
            }
        } else if let Some(name) = body.strip_prefix('#') {
            Part::Integer(name)
        } else {
            Part::Value(body)
        };
        parts.push(part);
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        parts.push(Part::Literal(rest));
    }
    parts
}

fn literal_pattern(s: &str) -> String {
    s.split(' ')
        .map(regex::escape)
        .collect::<Vec<_>>()
        .join(r"\s+")
}

fn build(parts: &[Part], loose: bool) -> Regex {
    let mut pattern = String::new();
    for part in parts {
        match part {
            Part::Literal(s) => pattern.push_str(&literal_pattern(s)),
            Part::Value(_) if loose => pattern.push_str(r"[^\n]*?"),
            Part::Value(name) => {
                pattern.push_str(&format!(r"(?P<{name}>{NUMBER}|unknown)"));
            }
            Part::Integer(name) => pattern.push_str(&format!(r"(?P<{name}>{NUMBER})")),
            Part::Flag(name, word) => {
                pattern.push_str(&format!(r"(?P<{name}>\s+{})?", literal_pattern(word)));
            }
            Part::Choice(_, _, _) if loose => {}
            Part::Choice(name, a, b) => {
                // Longer alternative first so `without` is not cut to `with`.
                let (first, second) = if a.len() >= b.len() { (a, b) } else { (b, a) };
                pattern.push_str(&format!(
                    r"(?:\s+(?P<{name}>{}|{}))?",
                    literal_pattern(first),
                    literal_pattern(second)
                ));
            }
        }
    }
    Regex::new(&pattern).expect("template pattern")
}

impl Template {
    pub fn new(text: &'static str) -> Template {
        let parts = split(text);
        Template {
            full: build(&parts, false),
            loose: build(&parts, true),
            parts,
        }
    }

    pub fn render(&self, slots: &Slots) -> String {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                Part::Literal(s) => out.push_str(s),
                Part::Value(name) => match slots.values.get(name).copied().flatten() {
                    Some(v) => out.push_str(&format_value(v)),
                    None => out.push_str("unknown"),
                },
                Part::Integer(name) => {
                    let v = slots.integers.get(name).expect("integer slot");
                    out.push_str(&v.to_string());
                }
                Part::Flag(name, word) => {
                    if slots.flags.get(name).copied().unwrap_or(false) {
                        out.push(' ');
                        out.push_str(word);
                    }
                }
                Part::Choice(name, a, b) => match slots.flags.get(name) {
                    Some(true) => {
                        out.push(' ');
                        out.push_str(a);
                    }
                    Some(false) => {
                        out.push(' ');
                        out.push_str(b);
                    }
                    None => {}
                },
            }
        }
        out
    }

    fn collect(&self, caps: &Captures<'_>, offset: usize) -> Match {
        let whole = caps.get(0).expect("group 0");
        let mut slots = Stated::new();
        let mut slot_ends = BTreeMap::new();
        for part in &self.parts {
            match part {
                Part::Literal(_) => {}
                Part::Value(name) | Part::Integer(name) => {
                    if let Some(m) = caps.name(name) {
                        let v = if m.as_str() == "unknown" {
                            None
                        } else {
                            parse_number(m.as_str())
                        };
                        slots.insert(name.to_string(), v);
                        slot_ends.insert(name.to_string(), offset + m.end());
                    }
                }
                Part::Flag(name, _) => {
                    let m = caps.name(name);
                    slots.insert(name.to_string(), Some(if m.is_some() { 1.0 } else { 0.0 }));
                    if let Some(m) = m {
                        slot_ends.insert(name.to_string(), offset + m.end());
                    }
                }
                Part::Choice(name, a, _) => {
                    if let Some(m) = caps.name(name) {
                        let is_a = m.as_str().split_whitespace().eq(a.split_whitespace());
                        slots.insert(name.to_string(), Some(if is_a { 1.0 } else { 0.0 }));
                        slot_ends.insert(name.to_string(), offset + m.end());
                    }
                }
            }
        }
        Match {
            start: offset + whole.start(),
            end: offset + whole.end(),
            slots,
            slot_ends,
        }
    }

    /// First strict match in `text`.
    pub fn find(&self, text: &str) -> Option<Match> {
        self.full.captures(text).map(|c| self.collect(&c, 0))
    }

    /// First match with value slots loosened to any text on the line; only
    /// integer slots and flags are captured.
    pub fn find_loose(&self, text: &str) -> Option<Match> {
        self.loose.captures(text).map(|c| self.collect(&c, 0))
    }

    #[cfg(test)]
    pub fn slot_names(&self) -> Vec<&'static str> {
        self.parts
            .iter()
            .filter_map(|p| match p {
                Part::Literal(_) => None,
                Part::Value(n) | Part::Integer(n) | Part::Flag(n, _) | Part::Choice(n, _, _) => {
                    Some(*n)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_and_parses_values() {
        let t = Template::new("Because total Urine output is {urine} and the renal SOFA is {#score}.");
        let text = t.render(&Slots::default().value("urine", Some(1095.0)).integer("score", 0));
        assert_eq!(text, "Because total Urine output is 1095.0 and the renal SOFA is 0.");
        let m = t.find(&text).unwrap();
        assert_eq!(m.slots["urine"], Some(1095.0));
        assert_eq!(m.slots["score"], Some(0.0));
        assert_eq!(&text[..m.slot_ends["urine"]], "Because total Urine output is 1095.0");
    }

    #[test]
    fn unknown_values_round_trip() {
        let t = Template::new("weight of {weight} kg");
        let text = t.render(&Slots::default().value("weight", None));
        assert_eq!(text, "weight of unknown kg");
        assert_eq!(t.find(&text).unwrap().slots["weight"], None);
    }

    #[test]
    fn flags_and_choices() {
        let t = Template::new("will{?neg:not} develop, FiO2 is {f}{?mv:with mechanical ventilation|without mechanical ventilation} the");
        let s = Slots::default()
            .flag("neg", Some(true))
            .value("f", Some(0.5))
            .flag("mv", Some(false));
        let text = t.render(&s);
        assert_eq!(text, "will not develop, FiO2 is 0.5 without mechanical ventilation the");
        let m = t.find(&text).unwrap();
        assert_eq!(m.slots["neg"], Some(1.0));
        assert_eq!(m.slots["mv"], Some(0.0));

        let plain = t.render(&Slots::default().value("f", Some(0.5)));
        assert_eq!(plain, "will develop, FiO2 is 0.5 the");
        let m = t.find(&plain).unwrap();
        assert_eq!(m.slots["neg"], Some(0.0));
        assert!(!m.slots.contains_key("mv"));
    }

    #[test]
    fn whitespace_is_flexible() {
        let t = Template::new("infection is{?noinf:not} suspected.");
        assert!(t.find("infection is  suspected.").is_some());
        assert!(t.find("infection is\nnot suspected.").is_some());
    }

    #[test]
    fn loose_match_keeps_integer_conclusion() {
        let t = Template::new("The maximum Bilirubin (Total) is {b} leading to a liver SOFA of {#score}.");
        let m = t
            .find_loose("The maximum Bilirubin (Total) is about one leading to a liver SOFA of 1.")
            .unwrap();
        assert_eq!(m.slots["score"], Some(1.0));
        assert!(!m.slots.contains_key("b"));
        assert!(t.find("The maximum Bilirubin (Total) is about one leading to a liver SOFA of 1.").is_none());
    }
}
