//! Quadruplet observations and their line-delimited text format.
//!
//! One record per line: `feature,time,value,stay`. A header line with those
//! four names is optional; blank lines are skipped. Times are hours since
//! ICU admission in the files and hours relative to the window end once a
//! stay has been cut into windows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{FeatureCatalog, FeatureId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StayId(pub String);

impl StayId {
    pub fn new(id: impl Into<String>) -> Self {
        StayId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub feature: FeatureId,
    pub time: f64,
    pub value: f64,
    pub stay: StayId,
}

impl Observation {
    pub fn new(feature: FeatureId, time: f64, value: f64, stay: impl Into<String>) -> Self {
        Observation {
            feature,
            time,
            value,
            stay: StayId::new(stay),
        }
    }
}

const HEADER: [&str; 4] = ["feature", "time", "value", "stay"];

fn parse_real(field: &str, what: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("{what} `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{what} `{field}` is not finite")));
    }
    Ok(v)
}

/// Parses an observations stream. Every record becomes one [`Observation`];
/// the first unknown feature or malformed record aborts with its line number.
pub fn parse_observations(source: &[u8], catalog: &FeatureCatalog) -> Result<Vec<Observation>> {
    let text = std::str::from_utf8(source)
        .map_err(|e| Error::parse(0, format!("input is not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let record = raw.trim_end_matches('\r');
        if record.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = record.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected 4 comma-separated fields, found {}", fields.len()),
            ));
        }
        if out.is_empty()
            && fields
                .iter()
                .zip(HEADER)
                .all(|(f, h)| f.trim().eq_ignore_ascii_case(h))
        {
            continue;
        }
        let name = fields[0].trim();
        let feature = catalog.lookup(name).ok_or_else(|| Error::UnknownFeature {
            line,
            name: name.to_string(),
        })?;
        let time = parse_real(fields[1], "time", line)?;
        let value = parse_real(fields[2], "value", line)?;
        let stay = fields[3].trim();
        if stay.is_empty() {
            return Err(Error::parse(line, "empty stay identifier"));
        }
        out.push(Observation::new(feature, time, value, stay));
    }
    Ok(out)
}

/// Writes observations in the same format [`parse_observations`] reads,
/// with a header line. Reals use the shortest round-tripping representation.
pub fn serialize_observations(observations: &[Observation]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for o in observations {
        out.push_str(&format!(
            "{},{:?},{:?},{}\n",
            o.feature.name(),
            o.time,
            o.value,
            o.stay
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn catalog() -> &'static FeatureCatalog {
        FeatureCatalog::standard()
    }

    #[test]
    fn parses_example_record() {
        let obs = parse_observations(b"DBP,-22.37,49.0,stayA\n", catalog()).unwrap();
        assert_eq!(obs, vec![Observation::new(FeatureId::DBP, -22.37, 49.0, "stayA")]);
    }

    #[test]
    fn empty_stream_is_empty_list() {
        assert!(parse_observations(b"", catalog()).unwrap().is_empty());
        assert!(parse_observations(b"feature,time,value,stay\n", catalog())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unknown_feature_is_a_catalog_error_with_line() {
        let err = parse_observations(b"DBP,1,2,s\nXYZ,1,2,s\n", catalog()).unwrap_err();
        assert_eq!(
            err,
            Error::UnknownFeature {
                line: 2,
                name: "XYZ".into()
            }
        );
    }

    #[test]
    fn malformed_records_report_line_numbers() {
        let err = parse_observations(b"DBP,1,2,s\n\nDBP,1,2\n", catalog()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse_observations(b"DBP,abc,2,s\n", catalog()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_observations(b"DBP,1,NaN,s\n", catalog()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_observations(b"DBP,1,2, \n", catalog()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn accepts_crlf_and_names_with_spaces() {
        let obs = parse_observations(b"Bilirubin (Total),3.5,1.2,7\r\n", catalog()).unwrap();
        assert_eq!(obs[0].feature, FeatureId::BILIRUBIN);
        assert_eq!(obs[0].stay.as_str(), "7");
    }

    fn observation() -> impl Strategy<Value = Observation> {
        (
            0..crate::catalog::FEATURE_COUNT,
            -1.0e4f64..1.0e4,
            -1.0e6f64..1.0e6,
            "[a-zA-Z0-9_-]{1,8}",
        )
            .prop_map(|(i, t, v, s)| {
                Observation::new(FeatureId::from_index(i).unwrap(), t, v, s)
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(obs in prop::collection::vec(observation(), 0..40)) {
            let text = serialize_observations(&obs);
            prop_assert_eq!(parse_observations(text.as_bytes(), catalog()).unwrap(), obs);
        }
    }
}
