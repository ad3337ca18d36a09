//! Forecasts of the prediction day in native units, the persistence
//! baseline, external forecast import and masked-MSE scoring.
//!
//! Forecast files hold one or more stays in either of two layouts:
//!
//! ```text
//! # sparse: one record per cell, unlisted cells are missing
//! stay,hour,feature,value
//! A,0,Platelet Count,310.0
//!
//! # dense: a block of 24 rows x 131 values in catalog order
//! @stay B
//! 0.5,12.0,...
//! ```
//!
//! A stay may use only one layout within a file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{Aggregation, FeatureCatalog, FeatureId, FEATURE_COUNT};
use crate::dense::{DenseGrid, FeatureStats, HOURS};
use crate::error::{Error, Result};
use crate::numfmt::quantize;
use crate::observation::{Observation, StayId};
use crate::sofa::{admissible, mean_arterial_pressure, normalize_fio2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Persistence,
    External,
}

/// 24 hourly rows of 131 native-unit values; `None` marks a feature the
/// forecaster does not predict for that hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastGrid {
    cells: Vec<Option<f64>>,
    pub provenance: Provenance,
}

impl ForecastGrid {
    pub fn empty(provenance: Provenance) -> Self {
        ForecastGrid {
            cells: vec![None; HOURS * FEATURE_COUNT],
            provenance,
        }
    }

    pub fn get(&self, hour: usize, feature: FeatureId) -> Option<f64> {
        self.cells[hour * FEATURE_COUNT + feature.index()]
    }

    /// Sets a cell; non-finite values are rejected.
    pub fn set(&mut self, hour: usize, feature: FeatureId, value: f64) -> Result<()> {
        if hour >= HOURS {
            return Err(Error::Shape(format!("hour {hour} outside 0..{HOURS}")));
        }
        if !value.is_finite() {
            return Err(Error::Input(format!(
                "non-finite forecast for {feature} at hour {hour}"
            )));
        }
        self.cells[hour * FEATURE_COUNT + feature.index()] = Some(value);
        Ok(())
    }

    fn hold(&mut self, feature: FeatureId, value: f64) {
        for h in 0..HOURS {
            self.cells[h * FEATURE_COUNT + feature.index()] = Some(value);
        }
    }

    /// Forecast cells as prediction-day observations, timed at the start
    /// of their hour so same-hour SBP/DBP cells pair up for MAP.
    pub fn to_observations(&self, stay: &StayId) -> Vec<Observation> {
        let mut out = Vec::new();
        for h in 0..HOURS {
            for f in FeatureId::all() {
                if let Some(v) = self.get(h, f) {
                    out.push(Observation {
                        feature: f,
                        time: h as f64,
                        value: v,
                        stay: stay.clone(),
                    });
                }
            }
        }
        out
    }
}

/// Persistence baseline over the observation day (native units).
///
/// Each observed feature is held constant over the 24 forecast hours so
/// that the forecast day reproduces the observation day's worst values:
/// min-worst and max-worst variables hold their daily extreme, summed
/// variables hold the daily total spread evenly over the hours, and the
/// rest hold their last observation. SBP and DBP hold the co-timed pair
/// with the lowest MAP (missing when the day has no valid pair).
/// Features never observed in the window stay missing.
pub fn persistence_forecast(raw: &[Observation]) -> ForecastGrid {
    let mut grid = ForecastGrid::empty(Provenance::Persistence);
    let mut sorted: Vec<&Observation> = raw.iter().collect();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));

    for f in FeatureId::all() {
        if f == FeatureId::SBP || f == FeatureId::DBP {
            continue;
        }
        let values: Vec<f64> = sorted
            .iter()
            .filter(|o| o.feature == f)
            .map(|o| o.value)
            .filter(|v| admissible(f, *v))
            .collect();
        let Some(&last) = values.last() else { continue };
        let held = match f.spec().aggregation {
            Aggregation::MinWorst if f == FeatureId::FIO2 => {
                match values.iter().filter_map(|v| normalize_fio2(*v)).reduce(f64::min) {
                    Some(v) => v,
                    None => continue,
                }
            }
            Aggregation::MinWorst => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregation::MaxWorst => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregation::Sum => {
                let total: f64 = values.iter().sum();
                quantize(total) / HOURS as f64
            }
            Aggregation::None => last,
        };
        grid.hold(f, held);
    }

    let mut best: Option<(f64, f64, f64)> = None;
    for d in sorted.iter().filter(|o| o.feature == FeatureId::DBP) {
        for s in sorted
            .iter()
            .filter(|o| o.feature == FeatureId::SBP && o.time == d.time)
        {
            if let Ok(map) = mean_arterial_pressure(s.value, d.value) {
                if best.is_none_or(|(m, _, _)| map < m) {
                    best = Some((map, s.value, d.value));
                }
            }
        }
    }
    if let Some((_, sbp, dbp)) = best {
        grid.hold(FeatureId::SBP, sbp);
        grid.hold(FeatureId::DBP, dbp);
    }
    grid
}

fn parse_cell(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("`{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::Input(format!("line {line}: non-finite forecast value")));
    }
    Ok(v)
}

/// Reads a forecast file in either layout. Every grid is validated:
/// dense blocks must be exactly 24 x 131, every value finite.
pub fn import_external_forecast(
    source: &[u8],
    catalog: &FeatureCatalog,
) -> Result<BTreeMap<StayId, ForecastGrid>> {
    let text = std::str::from_utf8(source)
        .map_err(|e| Error::parse(0, format!("input is not UTF-8: {e}")))?;
    let mut grids: BTreeMap<StayId, ForecastGrid> = BTreeMap::new();
    let mut dense_stays: Vec<StayId> = Vec::new();
    let mut sparse_stays: Vec<StayId> = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, raw)) = lines.next() {
        let line = idx + 1;
        let record = raw.trim_end_matches('\r');
        if record.trim().is_empty() {
            continue;
        }
        if let Some(name) = record.strip_prefix("@stay") {
            let stay = StayId::new(name.trim());
            if stay.as_str().is_empty() {
                return Err(Error::parse(line, "dense block without a stay id"));
            }
            if stay.as_str().contains(',') || stay.as_str().starts_with('@') {
                return Err(Error::parse(line, format!("stay id `{stay}` cannot be written back")));
            }
            if grids.contains_key(&stay) {
                return Err(Error::parse(line, format!("stay `{stay}` appears twice")));
            }
            let mut grid = ForecastGrid::empty(Provenance::External);
            let mut rows = 0;
            while let Some((row_idx, row)) = lines.peek() {
                let row = row.trim_end_matches('\r');
                if row.starts_with("@stay") {
                    break;
                }
                let row_line = row_idx + 1;
                lines.next();
                if row.trim().is_empty() {
                    continue;
                }
                let cells: Vec<&str> = row.split(',').collect();
                if cells.len() != FEATURE_COUNT {
                    return Err(Error::Shape(format!(
                        "line {row_line}: dense row has {} values, expected {FEATURE_COUNT}",
                        cells.len()
                    )));
                }
                if rows >= HOURS {
                    return Err(Error::Shape(format!(
                        "stay `{stay}`: more than {HOURS} dense rows"
                    )));
                }
                for (f, cell) in FeatureId::all().zip(cells) {
                    grid.set(rows, f, parse_cell(cell, row_line)?)?;
                }
                rows += 1;
            }
            if rows != HOURS {
                return Err(Error::Shape(format!(
                    "stay `{stay}`: dense block has {rows} rows, expected {HOURS}"
                )));
            }
            dense_stays.push(stay.clone());
            grids.insert(stay, grid);
            continue;
        }
        let fields: Vec<&str> = record.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line,
                format!("expected `stay,hour,feature,value`, found {} fields", fields.len()),
            ));
        }
        if fields[1].trim() == "hour" && fields[2].trim() == "feature" {
            continue;
        }
        let stay = StayId::new(fields[0].trim());
        if stay.as_str().is_empty() {
            return Err(Error::parse(line, "empty stay identifier"));
        }
        if dense_stays.contains(&stay) {
            return Err(Error::parse(line, format!("stay `{stay}` mixes layouts")));
        }
        let hour: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("hour `{}` is not an index", fields[1])))?;
        if hour >= HOURS {
            return Err(Error::Shape(format!("line {line}: hour {hour} outside 0..{HOURS}")));
        }
        let name = fields[2].trim();
        let feature = catalog.lookup(name).ok_or_else(|| Error::UnknownFeature {
            line,
            name: name.to_string(),
        })?;
        let value = parse_cell(fields[3], line)?;
        if !sparse_stays.contains(&stay) {
            sparse_stays.push(stay.clone());
        }
        grids
            .entry(stay)
            .or_insert_with(|| ForecastGrid::empty(Provenance::External))
            .set(hour, feature, value)?;
    }
    Ok(grids)
}

/// Writes grids in the sparse layout (missing cells omitted).
pub fn serialize_forecasts<'a>(grids: impl IntoIterator<Item = (&'a StayId, &'a ForecastGrid)>) -> String {
    let mut out = String::from("stay,hour,feature,value\n");
    for (stay, grid) in grids {
        for h in 0..HOURS {
            for f in FeatureId::all() {
                if let Some(v) = grid.get(h, f) {
                    out.push_str(&format!("{stay},{h},{},{v:?}\n", f.name()));
                }
            }
        }
    }
    out
}

/// Mean squared error over the cells observed in `truth`, in standardized
/// units. Forecast cells left empty count as the standardized mean (0.0).
/// Returns 0.0 when nothing was observed.
pub fn masked_mse(pred: &ForecastGrid, truth: &DenseGrid, stats: &FeatureStats) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for h in 0..HOURS {
        for f in FeatureId::all() {
            if !truth.observed(h, f) {
                continue;
            }
            let p = pred.get(h, f).map_or(0.0, |v| stats.standardize(f, v));
            let e = p - truth.value(h, f);
            sum += e * e;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{Demographics, Gender};
    use crate::dense::densify;
    use crate::sofa::worst_values;

    fn catalog() -> &'static FeatureCatalog {
        FeatureCatalog::standard()
    }

    fn obs(feature: FeatureId, time: f64, value: f64) -> Observation {
        Observation::new(feature, time, value, "s")
    }

    #[test]
    fn persistence_holds_observed_values() {
        let grid = persistence_forecast(&[obs(FeatureId::PLATELETS, -4.0, 310.0)]);
        for h in 0..HOURS {
            assert_eq!(grid.get(h, FeatureId::PLATELETS), Some(310.0));
            assert_eq!(grid.get(h, FeatureId::BILIRUBIN), None);
        }
        assert_eq!(grid.provenance, Provenance::Persistence);
    }

    #[test]
    fn persistence_reproduces_worst_values() {
        let day = [
            obs(FeatureId::SBP, -22.37, 105.0),
            obs(FeatureId::DBP, -22.37, 49.0),
            obs(FeatureId::SBP, -18.37, 80.0),
            obs(FeatureId::DBP, -18.37, 43.0),
            obs(FeatureId::URINE, -20.0, 300.0),
            obs(FeatureId::URINE, -12.0, 400.0),
            obs(FeatureId::URINE, -2.0, 395.0),
            obs(FeatureId::FIO2, -19.0, 50.0),
            obs(FeatureId::FIO2, -9.0, 0.6),
            obs(FeatureId::PAO2, -9.0, 100.0),
            obs(FeatureId::WEIGHT, -9.0, 62.8),
            obs(FeatureId::NOREPINEPHRINE, -5.0, 3.0),
            obs(FeatureId::NOREPINEPHRINE, -4.0, 6.0),
        ];
        let demo = Demographics {
            age: 70.0,
            gender: Some(Gender::Female),
            weight: None,
        };
        let grid = persistence_forecast(&day);
        let forecast_day = grid.to_observations(&StayId::new("s"));
        assert_eq!(
            worst_values(&forecast_day, &demo, None),
            worst_values(&day, &demo, None)
        );
    }

    fn dense_block(rows: usize, cols: usize) -> String {
        let mut s = String::from("@stay A\n");
        for _ in 0..rows {
            s.push_str(&vec!["1.5"; cols].join(","));
            s.push('\n');
        }
        s
    }

    #[test]
    fn imports_dense_blocks() {
        let grids = import_external_forecast(dense_block(24, 131).as_bytes(), catalog()).unwrap();
        let g = &grids[&StayId::new("A")];
        assert_eq!(g.provenance, Provenance::External);
        assert_eq!(g.get(23, FeatureId::URINE), Some(1.5));
    }

    #[test]
    fn dense_shape_errors() {
        let err = import_external_forecast(dense_block(23, 131).as_bytes(), catalog()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)), "{err:?}");
        let err = import_external_forecast(dense_block(24, 130).as_bytes(), catalog()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        let err = import_external_forecast(dense_block(25, 131).as_bytes(), catalog()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn nan_cell_is_a_value_error() {
        let text = dense_block(24, 131).replacen("1.5", "NaN", 1);
        let err = import_external_forecast(text.as_bytes(), catalog()).unwrap_err();
        assert!(matches!(err, Error::Input(_)), "{err:?}");
        let err = import_external_forecast(b"A,0,Urine,inf\n", catalog()).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn sparse_records_round_trip() {
        let text = "stay,hour,feature,value\nA,0,Platelet Count,310.0\nA,5,Urine,20.5\nB,23,DBP,40.0\n";
        let grids = import_external_forecast(text.as_bytes(), catalog()).unwrap();
        assert_eq!(grids.len(), 2);
        assert_eq!(serialize_forecasts(&grids), text);
        assert!(import_external_forecast(b"A,24,Urine,1\n", catalog()).is_err());
        assert!(import_external_forecast(b"A,0,XYZ,1\n", catalog()).is_err());
        let mixed = format!("{}A,0,Urine,1\n", dense_block(24, 131));
        assert!(import_external_forecast(mixed.as_bytes(), catalog()).is_err());
    }

    #[test]
    fn masked_mse_examples() {
        let stats = FeatureStats::identity();
        let truth_obs = [obs(FeatureId::URINE, -23.5, 5.0)];
        let truth = densify(&truth_obs, -24.0, &stats);
        let mut pred = ForecastGrid::empty(Provenance::External);
        pred.set(0, FeatureId::URINE, 5.0).unwrap();
        assert_eq!(masked_mse(&pred, &truth, &stats), 0.0);
        pred.set(0, FeatureId::URINE, 7.0).unwrap();
        assert_eq!(masked_mse(&pred, &truth, &stats), 4.0);
        let empty = densify(&[], -24.0, &stats);
        assert_eq!(masked_mse(&pred, &empty, &stats), 0.0);
    }

    #[test]
    fn masked_mse_scales_quadratically() {
        let stats = FeatureStats::identity();
        let truth_obs = [
            obs(FeatureId::URINE, -23.5, 5.0),
            obs(FeatureId::DBP, -3.5, 50.0),
        ];
        let truth = densify(&truth_obs, -24.0, &stats);
        let mut pred = ForecastGrid::empty(Provenance::External);
        pred.set(0, FeatureId::URINE, 6.0).unwrap();
        pred.set(20, FeatureId::DBP, 47.0).unwrap();
        let base = masked_mse(&pred, &truth, &stats);
        pred.set(0, FeatureId::URINE, 5.0 + 3.0).unwrap();
        pred.set(20, FeatureId::DBP, 50.0 - 9.0).unwrap();
        assert!((masked_mse(&pred, &truth, &stats) - 9.0 * base).abs() < 1e-12);
    }
}
