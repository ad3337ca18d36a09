//! Prompt and gold-answer text.

use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::cohort::StayWindow;
use crate::label::GroundTruth;
use crate::numfmt::{format_time, format_value};
use crate::observation::Observation;
use crate::sofa::{Organ, RuleConfig, SofaSnapshot, WorstValues};
use crate::template::{Slots, Template};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tense {
    Current,
    Future,
}

impl Tense {
    pub const BOTH: [Tense; 2] = [Tense::Current, Tense::Future];

    pub fn as_str(self) -> &'static str {
        match self {
            Tense::Current => "current",
            Tense::Future => "future",
        }
    }
}

impl fmt::Display for Tense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) struct OrganSentence {
    pub organ: Organ,
    pub tense: Tense,
    pub template: Template,
    /// Slots whose end marks the last measurement token of the sentence.
    pub cut: &'static [&'static str],
}

pub(crate) static ORGAN_SENTENCES: LazyLock<Vec<OrganSentence>> = LazyLock::new(|| {
    let rows: [(Organ, Tense, &'static str, &'static [&'static str]); 12] = [
        (
            Organ::Cns,
            Tense::Current,
            "The minimum value of GCS_eye is {gcs_eye}, GCS_motor is {gcs_motor} and GCS_verbal is {gcs_verbal}, this produces the sum {gcs_sum} and means the CNS SOFA is {#score}.",
            &["gcs_verbal"],
        ),
        (
            Organ::Cns,
            Tense::Future,
            "The minimum value of GCS_eye will be {gcs_eye}, GCS_motor will be {gcs_motor} and GCS_verbal will be {gcs_verbal}, this produces the sum {gcs_sum} and means the CNS SOFA will be {#score}.",
            &["gcs_verbal"],
        ),
        (
            Organ::Cardio,
            Tense::Current,
            "Because minimum MAP is {map}, max Dopamine is {dopamine}, max Dobutamine is {dobutamine}, max Epinephrine is {epinephrine} and max Norepinephrine is {norepinephrine} with a patient weight of {weight} kg, the cardiovascular SOFA is {#score}.",
            &["weight"],
        ),
        (
            Organ::Cardio,
            Tense::Future,
            "Because future minimum MAP will be {map}, future max Dopamine will be {dopamine}, future max Dobutamine will be {dobutamine}, future max Epinephrine will be {epinephrine} and future max Norepinephrine will be {norepinephrine} with a patient weight of {weight} kg, the cardiovascular SOFA will be {#score}.",
            &["weight"],
        ),
        (
            Organ::Resp,
            Tense::Current,
            "Given that minimum PO2 is {pao2} and minimum FiO2 is {fio2}{?mv:with mechanical ventilation|without mechanical ventilation} the calculated PAO2FIO2 is {pf_ratio}, this means the respiratory SOFA is {#score}.",
            &["fio2", "mv"],
        ),
        (
            Organ::Resp,
            Tense::Future,
            "Given that minimum PO2 will be {pao2} and minimum FiO2 will be {fio2}{?mv:with mechanical ventilation|without mechanical ventilation} the forecasted PAO2FIO2 will be {pf_ratio}, this means the respiratory SOFA will be {#score}.",
            &["fio2", "mv"],
        ),
        (
            Organ::Coag,
            Tense::Current,
            "Because the minimum Platelet count is {platelets} the coagulation SOFA is {#score}.",
            &["platelets"],
        ),
        (
            Organ::Coag,
            Tense::Future,
            "Because the Platelet count will be {platelets} the coagulation SOFA is going to be {#score}.",
            &["platelets"],
        ),
        (
            Organ::Liver,
            Tense::Current,
            "The maximum Bilirubin (Total) is {bilirubin} leading to a liver SOFA of {#score}.",
            &["bilirubin"],
        ),
        (
            Organ::Liver,
            Tense::Future,
            "The maximum Bilirubin (Total) will be {bilirubin} leading to a liver SOFA of {#score}.",
            &["bilirubin"],
        ),
        (
            Organ::Renal,
            Tense::Current,
            "Because total Urine output is {urine} and maximum creatinine in the blood is {creatinine} the renal SOFA is {#score}.",
            &["creatinine"],
        ),
        (
            Organ::Renal,
            Tense::Future,
            "Because Urine output will be {urine} and maximum creatinine in the blood will be {creatinine} the renal SOFA will be {#score}.",
            &["creatinine"],
        ),
    ];
    rows.into_iter()
        .map(|(organ, tense, text, cut)| OrganSentence {
            organ,
            tense,
            template: Template::new(text),
            cut,
        })
        .collect()
});

pub(crate) fn organ_sentence(organ: Organ, tense: Tense) -> &'static OrganSentence {
    ORGAN_SENTENCES
        .iter()
        .find(|s| s.organ == organ && s.tense == tense)
        .expect("every organ has both tenses")
}

pub(crate) static TOTAL_CURRENT: LazyLock<Template> =
    LazyLock::new(|| Template::new("To summarize: the patient has a total SOFA score of {#score}."));
pub(crate) static TOTAL_FUTURE: LazyLock<Template> = LazyLock::new(|| {
    Template::new("To summarize: the patient will have a future total SOFA score of {#score}.")
});
pub(crate) static CLOSING: LazyLock<Template> = LazyLock::new(|| {
    Template::new(
        "The patient will{?neg:not} develop sepsis in the next 24 hours, because total SOFA increased{?only:only} by {#delta} and infection is{?noinf:not} suspected.",
    )
});

pub(crate) fn total_sentence(tense: Tense) -> &'static Template {
    match tense {
        Tense::Current => &TOTAL_CURRENT,
        Tense::Future => &TOTAL_FUTURE,
    }
}

pub(crate) const CURRENT_HEADER: &str = "First we need to calculate the SOFA scores given the extracted values. The SOFA scores for the current time are the following:";
pub(crate) const FUTURE_HEADER: &str = "Now we need to calculate the SOFA scores with forecasted values. The SOFA scores in the future based on the forecasted values are the following:";

/// Ratio below which mechanical ventilation changes the respiratory score.
pub(crate) const MV_RELEVANT_BELOW: f64 = 200.0;

fn organ_slots(w: &WorstValues, organ: Organ, score: u8, config: RuleConfig) -> Slots {
    let slots = Slots::default().integer("score", i64::from(score));
    match organ {
        Organ::Cns => slots
            .value("gcs_eye", w.gcs_eye)
            .value("gcs_motor", w.gcs_motor)
            .value("gcs_verbal", w.gcs_verbal)
            .value("gcs_sum", w.gcs_sum()),
        Organ::Cardio => slots
            .value("map", w.map_min)
            .value("dopamine", w.dopamine_max)
            .value("dobutamine", w.dobutamine_max)
            .value("epinephrine", w.epinephrine_max)
            .value("norepinephrine", w.norepinephrine_max)
            .value("weight", w.weight),
        Organ::Resp => {
            let ratio = w.pf_ratio();
            let mv = (config.mv_gating && ratio.is_some_and(|r| r < MV_RELEVANT_BELOW))
                .then(|| w.mech_vent.unwrap_or(false));
            slots
                .value("pao2", w.pao2_min)
                .value("fio2", w.fio2_min)
                .value("pf_ratio", ratio)
                .flag("mv", mv)
        }
        Organ::Coag => slots.value("platelets", w.platelets_min),
        Organ::Liver => slots.value("bilirubin", w.bilirubin_max),
        Organ::Renal => slots
            .value("urine", w.urine_total)
            .value("creatinine", w.creatinine_max),
    }
}

fn render_block(snapshot: &SofaSnapshot, tense: Tense, config: RuleConfig) -> String {
    let mut lines = vec![match tense {
        Tense::Current => CURRENT_HEADER.to_string(),
        Tense::Future => FUTURE_HEADER.to_string(),
    }];
    for organ in Organ::ALL {
        let slots = organ_slots(&snapshot.inputs, organ, snapshot.subscores.get(organ), config);
        lines.push(organ_sentence(organ, tense).template.render(&slots));
    }
    lines.push(
        total_sentence(tense).render(&Slots::default().integer("score", i64::from(snapshot.total))),
    );
    lines.join("\n")
}

/// The single organ whose subscore rose, when the total rose by 2 or more
/// and no other counted organ rose with it.
pub fn failing_organ(current: &SofaSnapshot, future: &SofaSnapshot) -> Option<Organ> {
    if i32::from(future.total) - i32::from(current.total) < 2 {
        return None;
    }
    let mut risen = Organ::ALL.into_iter().filter(|o| {
        Some(*o) != future.excluded && future.subscores.get(*o) > current.subscores.get(*o)
    });
    match (risen.next(), risen.next()) {
        (Some(o), None) => Some(o),
        _ => None,
    }
}

/// Gold answer: current block, future block and the closing verdict.
pub fn verbalize_chain(truth: &GroundTruth, config: RuleConfig) -> String {
    let verdict = &truth.verdict;
    let mut closing = Vec::new();
    if let Some(organ) = failing_organ(&truth.current, &truth.future) {
        closing.push(format!(
            "This calculation means that the patient will likely experience a {} failure since SOFA increased by {}.",
            organ.failure_name(),
            verdict.delta
        ));
    }
    closing.push(
        CLOSING.render(
            &Slots::default()
                .flag("neg", Some(!verdict.septic))
                .flag("only", Some(verdict.delta < 0))
                .integer("delta", i64::from(verdict.delta))
                .flag("noinf", Some(!verdict.suspected_infection)),
        ),
    );
    [
        render_block(&truth.current, Tense::Current, config),
        render_block(&truth.future, Tense::Future, config),
        closing.join("\n"),
    ]
    .join("\n\n")
}

/// `Here are the measurements: ...` with observations ordered by time, then
/// feature name. Equal keys keep their input order.
pub fn verbalize_measurements(window: &[Observation]) -> String {
    render_observations("Here are the measurements: ", window)
}

fn render_observations(lead: &str, window: &[Observation]) -> String {
    let mut sorted: Vec<&Observation> = window.iter().collect();
    sorted.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| a.feature.name().cmp(b.feature.name()))
    });
    let items: Vec<String> = sorted
        .iter()
        .map(|o| {
            format!(
                "{} at time {}: {}",
                o.feature.name(),
                format_time(o.time),
                format_value(o.value)
            )
        })
        .collect();
    format!("{lead}{}", items.join(", "))
}

fn header(window: &StayWindow) -> String {
    let gender = window
        .demographics
        .gender
        .map(|g| g.as_str())
        .unwrap_or("of unknown gender");
    format!(
        "Patient is {} years old and is {gender}. Given all the information in this text, answer the question at the end.",
        format_value(window.demographics.age)
    )
}

fn question(window: &StayWindow) -> String {
    let mut out = String::from("Now answer the following question:\n");
    if let Some(p) = &window.precondition {
        out.push_str(&format!(
            "The patient has an existing precondition given by the ICD-10 code {}.\n",
            p.icd_code
        ));
    }
    out.push_str(if window.suspected_infection {
        "The doctors suspect an infection"
    } else {
        "The doctors don't suspect an infection"
    });
    out.push_str(", based on this information and the other information in this text, will the patient be classified as septic tomorrow?");
    out
}

/// Prompt: demographics header, observation-day measurements and the
/// question with the optional precondition sentence.
pub fn verbalize_prompt(window: &StayWindow) -> String {
    format!(
        "{}\n{}\n\n{}",
        header(window),
        verbalize_measurements(&window.observation),
        question(window)
    )
}

/// Prompt augmented with forecast observations of the prediction day.
pub fn verbalize_pipeline_prompt(window: &StayWindow, forecast: &[Observation]) -> String {
    format!(
        "{}\n{}\n{}\n\n{}",
        header(window),
        verbalize_measurements(&window.observation),
        render_observations("Here are the forecasted measurements: ", forecast),
        question(window)
    )
}
