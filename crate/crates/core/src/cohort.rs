//! Cohort selection and sliding 24h + 24h windows.
//!
//! Demographics file: `stay,age,gender,weight`, optionally followed by
//! `los_hours` (length of stay) and `suspected_infection` columns. With a
//! header line columns are matched by name; without one they are positional.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::{Observation, StayId};
use crate::sofa::{worst_values, Precondition, WorstValues};

pub const DAY_HOURS: f64 = 24.0;
pub const MIN_AGE: f64 = 18.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Some(Gender::Male),
            "f" | "female" => Some(Gender::Female),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: f64,
    pub gender: Option<Gender>,
    pub weight: Option<f64>,
}

/// One row of the demographics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StayInfo {
    pub stay: StayId,
    pub demographics: Demographics,
    pub los_hours: Option<f64>,
    pub suspected_infection: bool,
}

const COLUMNS: [&str; 6] = [
    "stay",
    "age",
    "gender",
    "weight",
    "los_hours",
    "suspected_infection",
];

fn parse_flag(s: &str, line: usize) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Ok(false),
        "1" | "true" | "yes" => Ok(true),
        other => Err(Error::parse(line, format!("`{other}` is not a boolean"))),
    }
}

fn parse_optional_real(s: &str, what: &str, line: usize) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::parse(line, format!("{what} `{s}` is not a finite number"))),
    }
}

pub fn parse_demographics(source: &[u8]) -> Result<Vec<StayInfo>> {
    let text = std::str::from_utf8(source)
        .map_err(|e| Error::parse(0, format!("input is not UTF-8: {e}")))?;
    let mut layout: Option<Vec<usize>> = None;
    let mut out = Vec::new();
    let mut seen_record = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let record = raw.trim_end_matches('\r');
        if record.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = record.split(',').collect();
        if !seen_record && fields[0].trim().eq_ignore_ascii_case("stay") {
            let mut columns = Vec::with_capacity(fields.len());
            for name in &fields {
                let name = name.trim().to_ascii_lowercase();
                let col = COLUMNS
                    .iter()
                    .position(|c| *c == name)
                    .ok_or_else(|| Error::parse(line, format!("unknown column `{name}`")))?;
                if columns.contains(&col) {
                    return Err(Error::parse(line, format!("duplicate column `{name}`")));
                }
                columns.push(col);
            }
            if !(0..4).all(|c| columns.contains(&c)) {
                return Err(Error::parse(line, "header must name stay, age, gender and weight"));
            }
            layout = Some(columns);
            seen_record = true;
            continue;
        }
        seen_record = true;
        let columns: Vec<usize> = layout.clone().unwrap_or_else(|| (0..fields.len()).collect());
        if fields.len() != columns.len() || !(4..=6).contains(&fields.len()) {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", columns.len().max(4), fields.len()),
            ));
        }
        let mut cells = [""; 6];
        for (field, col) in fields.iter().zip(&columns) {
            cells[*col] = field.trim();
        }
        if cells[0].is_empty() {
            return Err(Error::parse(line, "empty stay identifier"));
        }
        let age = parse_optional_real(cells[1], "age", line)?
            .ok_or_else(|| Error::parse(line, "missing age"))?;
        if age < 0.0 {
            return Err(Error::parse(line, format!("negative age {age}")));
        }
        let gender = if cells[2].is_empty() {
            None
        } else {
            Some(
                Gender::parse(cells[2])
                    .ok_or_else(|| Error::parse(line, format!("unknown gender `{}`", cells[2])))?,
            )
        };
        let weight = parse_optional_real(cells[3], "weight", line)?.filter(|w| *w > 0.0);
        out.push(StayInfo {
            stay: StayId::new(cells[0]),
            demographics: Demographics {
                age,
                gender,
                weight,
            },
            los_hours: parse_optional_real(cells[4], "los_hours", line)?,
            suspected_infection: parse_flag(cells[5], line)?,
        });
    }
    Ok(out)
}

pub fn serialize_demographics(infos: &[StayInfo]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for info in infos {
        let d = &info.demographics;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:?},{},{},{},{}\n",
            info.stay,
            d.age,
            d.gender.map(Gender::as_str).unwrap_or(""),
            opt(d.weight),
            opt(info.los_hours),
            u8::from(info.suspected_infection)
        ));
    }
    out
}

/// Keeps stays of at least 24 hours with an adult patient of known gender.
/// Order-preserving.
pub fn filter_cohort(stays: &[(StayId, Demographics, f64)]) -> Vec<StayId> {
    stays
        .iter()
        .filter(|(_, d, duration)| *duration >= DAY_HOURS && d.age >= MIN_AGE && d.gender.is_some())
        .map(|(stay, _, _)| stay.clone())
        .collect()
}

/// A stay with its observations timed in hours since admission.
#[derive(Debug, Clone, PartialEq)]
pub struct StayRecord {
    pub info: StayInfo,
    pub observations: Vec<Observation>,
}

impl StayRecord {
    /// Length of stay: the explicit value, else the time of the last observation.
    pub fn duration_hours(&self) -> f64 {
        self.info.los_hours.unwrap_or_else(|| {
            self.observations
                .iter()
                .map(|o| o.time)
                .fold(0.0, f64::max)
        })
    }
}

/// Groups observations by stay and joins them with demographics. Stays
/// without a demographics row are dropped, since they cannot pass the
/// cohort filter. Output is sorted by stay id.
pub fn assemble_stays(observations: Vec<Observation>, infos: Vec<StayInfo>) -> Vec<StayRecord> {
    let mut by_stay: BTreeMap<StayId, StayRecord> = infos
        .into_iter()
        .map(|info| {
            (
                info.stay.clone(),
                StayRecord {
                    info,
                    observations: Vec::new(),
                },
            )
        })
        .collect();
    for o in observations {
        if let Some(record) = by_stay.get_mut(&o.stay) {
            record.observations.push(o);
        }
    }
    for record in by_stay.values_mut() {
        record.observations.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    by_stay.into_values().collect()
}

/// Applies [`filter_cohort`] to assembled stays.
pub fn cohort(stays: Vec<StayRecord>) -> Vec<StayRecord> {
    let keys: Vec<(StayId, Demographics, f64)> = stays
        .iter()
        .map(|s| (s.info.stay.clone(), s.info.demographics.clone(), s.duration_hours()))
        .collect();
    let kept: HashSet<StayId> = filter_cohort(&keys).into_iter().collect();
    stays
        .into_iter()
        .filter(|s| kept.contains(&s.info.stay))
        .collect()
}

/// Identifies a window: the stay and the index of its observation day.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowKey {
    pub stay: StayId,
    pub window: u32,
}

/// A full observation day paired with the following prediction day. Times
/// are relative to the end of the observation day: observations lie in
/// `[-24, 0)`, predictions in `[0, 24)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StayWindow {
    pub key: WindowKey,
    pub observation: Vec<Observation>,
    pub prediction: Vec<Observation>,
    pub demographics: Demographics,
    pub suspected_infection: bool,
    pub precondition: Option<Precondition>,
    /// Raw worst values of the day before the observation day.
    pub prior_worst: Option<WorstValues>,
}

fn day_slice(observations: &[Observation], day: usize, origin: f64) -> Vec<Observation> {
    let start = day as f64 * DAY_HOURS;
    let end = start + DAY_HOURS;
    observations
        .iter()
        .filter(|o| o.time >= start && o.time < end)
        .map(|o| Observation {
            time: o.time - origin,
            ..o.clone()
        })
        .collect()
}

/// Cuts a stay into consecutive (observation day, prediction day) pairs.
/// A stay with `n` full days yields `max(0, n - 1)` windows.
pub fn slide_windows(stay: &StayRecord) -> Vec<StayWindow> {
    let full_days = (stay.duration_hours() / DAY_HOURS).floor().max(0.0) as usize;
    let mut observations = stay.observations.clone();
    observations.sort_by(|a, b| a.time.total_cmp(&b.time));
    let demographics = &stay.info.demographics;
    (0..full_days.saturating_sub(1))
        .map(|day| {
            let origin = (day + 1) as f64 * DAY_HOURS;
            let prior_worst = day.checked_sub(1).map(|prev| {
                worst_values(&day_slice(&observations, prev, origin), demographics, None)
            });
            StayWindow {
                key: WindowKey {
                    stay: stay.info.stay.clone(),
                    window: day as u32,
                },
                observation: day_slice(&observations, day, origin),
                prediction: day_slice(&observations, day + 1, origin),
                demographics: demographics.clone(),
                suspected_infection: stay.info.suspected_infection,
                precondition: None,
                prior_worst,
            }
        })
        .collect()
}
