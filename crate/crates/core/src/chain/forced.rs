//! Gold prefixes for forced derivation.

use super::NodeKey;
use crate::error::{Error, Result};
use crate::verbalize::{organ_sentence, total_sentence, Tense, CLOSING};

/// Truncates a gold answer right after the last measurement token of the
/// target sentence. Totals cut before their summary sentence; the SOFA
/// change and the verdict cut before the closing block.
pub fn forced_prefix(gold: &str, target: NodeKey) -> Result<String> {
    let missing = || Error::Contract(format!("gold answer has no sentence for `{target}`"));
    let end = match target {
        NodeKey::Organ(organ, tense) => {
            let sentence = organ_sentence(organ, tense);
            let m = sentence.template.find(gold).ok_or_else(missing)?;
            sentence
                .cut
                .iter()
                .filter_map(|slot| m.slot_ends.get(*slot).copied())
                .max()
                .ok_or_else(missing)?
        }
        NodeKey::Total(tense) => total_sentence(tense).find(gold).ok_or_else(missing)?.start,
        NodeKey::Diff | NodeKey::Sepsis => {
            CLOSING.find(gold).ok_or_else(missing)?;
            total_sentence(Tense::Future).find(gold).ok_or_else(missing)?.end
        }
    };
    Ok(gold[..end].to_string())
}
