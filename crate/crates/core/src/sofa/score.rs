//! Organ step functions and the derived quantities they consume.
//!
//! Table ranges with gaps between rows (bilirubin `1.2-1.9` then `2.0-5.9`)
//! are treated as half-open intervals `[lo, next_lo)`.

use crate::error::{Error, Result};

/// Organ subscore, always in `0..=4`.
pub type Score = u8;

/// Mean arterial pressure from a systolic/diastolic pair: `(sbp + 2 dbp) / 3`.
pub fn mean_arterial_pressure(sbp: f64, dbp: f64) -> Result<f64> {
    if !(sbp.is_finite() && dbp.is_finite()) || dbp <= 0.0 {
        return Err(Error::Input(format!(
            "blood pressure pair ({sbp}, {dbp}) must be positive and finite"
        )));
    }
    if sbp < dbp {
        return Err(Error::Input(format!(
            "systolic pressure {sbp} is below diastolic {dbp}"
        )));
    }
    Ok((sbp + 2.0 * dbp) / 3.0)
}

/// Horowitz coefficient `PaO2 / FiO2` in mmHg.
pub fn horowitz(pao2: f64, fio2: f64) -> Result<f64> {
    if fio2 <= 0.0 || !fio2.is_finite() || !pao2.is_finite() {
        return Err(Error::Input(format!("FiO2 {fio2} must be positive")));
    }
    Ok(pao2 / fio2)
}

/// Weight-normalized vasopressor rate in mcg/kg/min. `None` when weight or
/// duration is unusable, which downstream scoring treats as a missing value.
pub fn vasopressor_rate(total_dose: f64, duration_min: f64, weight_kg: Option<f64>) -> Option<f64> {
    let weight = weight_kg.filter(|w| *w > 0.0 && w.is_finite())?;
    if duration_min.is_nan() || duration_min <= 0.0 || !total_dose.is_finite() {
        return None;
    }
    Some(total_dose / (weight * duration_min))
}

pub fn score_cns(gcs_sum: i32) -> Result<Score> {
    match gcs_sum {
        15 => Ok(0),
        13..=14 => Ok(1),
        10..=12 => Ok(2),
        6..=9 => Ok(3),
        3..=5 => Ok(4),
        _ => Err(Error::Input(format!("GCS sum {gcs_sum} outside 3..=15"))),
    }
}

/// Vasopressor rates in mcg/kg/min.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Vasopressors {
    pub dopamine: Option<f64>,
    pub dobutamine: Option<f64>,
    pub epinephrine: Option<f64>,
    pub norepinephrine: Option<f64>,
}

/// Highest-severity matching row wins; the MAP row applies only when no
/// vasopressor row matches.
pub fn score_cardio(map_min: Option<f64>, vaso: Vasopressors) -> Score {
    let gt = |v: Option<f64>, t: f64| v.is_some_and(|x| x > t);
    let in_range = |v: Option<f64>, lo: f64, hi: f64| v.is_some_and(|x| x > lo && x <= hi);
    let Vasopressors {
        dopamine,
        dobutamine,
        epinephrine,
        norepinephrine,
    } = vaso;
    if gt(norepinephrine, 0.1) || gt(epinephrine, 0.1) || gt(dopamine, 15.0) {
        4
    } else if in_range(norepinephrine, 0.0, 0.1)
        || in_range(epinephrine, 0.0, 0.1)
        || in_range(dopamine, 5.0, 15.0)
    {
        3
    } else if in_range(dopamine, 0.0, 5.0) || gt(dobutamine, 0.0) {
        2
    } else if map_min.is_some_and(|m| m < 70.0) {
        1
    } else {
        0
    }
}

/// With `mv_gating` on, scores 3 and 4 additionally require mechanical
/// ventilation; otherwise ventilation status is ignored.
pub fn score_resp(ratio: Option<f64>, mech_vent: bool, mv_gating: bool) -> Score {
    let Some(r) = ratio else { return 0 };
    let ventilated = mech_vent || !mv_gating;
    if r < 100.0 && ventilated {
        4
    } else if r < 200.0 && ventilated {
        3
    } else if r < 300.0 {
        2
    } else if r < 400.0 {
        1
    } else {
        0
    }
}

pub fn score_coag(platelets_min: Option<f64>) -> Score {
    match platelets_min {
        None => 0,
        Some(p) if p >= 150.0 => 0,
        Some(p) if p >= 100.0 => 1,
        Some(p) if p >= 50.0 => 2,
        Some(p) if p >= 20.0 => 3,
        Some(_) => 4,
    }
}

pub fn score_liver(bilirubin_max: Option<f64>) -> Score {
    match bilirubin_max {
        None => 0,
        Some(b) if b < 1.2 => 0,
        Some(b) if b < 2.0 => 1,
        Some(b) if b < 6.0 => 2,
        Some(b) if b < 12.0 => 3,
        Some(_) => 4,
    }
}

fn creatinine_score(creatinine: f64) -> Score {
    if creatinine < 1.2 {
        0
    } else if creatinine < 2.0 {
        1
    } else if creatinine < 3.5 {
        2
    } else if creatinine < 5.0 {
        3
    } else {
        4
    }
}

fn urine_score(urine: f64) -> Score {
    if urine < 200.0 {
        4
    } else if urine < 500.0 {
        3
    } else {
        0
    }
}

/// The worse of the creatinine arm and the urine-output arm.
pub fn score_renal(creatinine_max: Option<f64>, urine_total: Option<f64>) -> Score {
    let c = creatinine_max.map_or(0, creatinine_score);
    let u = urine_total.map_or(0, urine_score);
    c.max(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none() -> Vasopressors {
        Vasopressors::default()
    }

    fn zeros() -> Vasopressors {
        Vasopressors {
            dopamine: Some(0.0),
            dobutamine: Some(0.0),
            epinephrine: Some(0.0),
            norepinephrine: Some(0.0),
        }
    }

    #[test]
    fn map_examples() {
        assert_eq!(mean_arterial_pressure(70.0, 70.0).unwrap(), 70.0);
        assert!((mean_arterial_pressure(80.0, 43.0).unwrap() - 55.333).abs() < 1e-3);
        assert!((mean_arterial_pressure(105.0, 49.0).unwrap() - 67.667).abs() < 1e-3);
        assert!(mean_arterial_pressure(40.0, 50.0).is_err());
        assert!(mean_arterial_pressure(40.0, 0.0).is_err());
    }

    #[test]
    fn horowitz_examples() {
        assert_eq!(horowitz(100.0, 0.5).unwrap(), 200.0);
        assert_eq!(horowitz(141.0, 1.0).unwrap(), 141.0);
        assert_eq!(horowitz(400.0, 1.0).unwrap(), 400.0);
        assert!(horowitz(100.0, 0.0).is_err());
        assert!(horowitz(100.0, -0.2).is_err());
    }

    #[test]
    fn vasopressor_rate_examples() {
        assert_eq!(vasopressor_rate(0.0, 60.0, Some(62.8)), Some(0.0));
        assert!((vasopressor_rate(6280.0, 10.0, Some(62.8)).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(vasopressor_rate(1.0, 1.0, Some(1.0)), Some(1.0));
        assert_eq!(vasopressor_rate(1.0, 1.0, None), None);
        assert_eq!(vasopressor_rate(1.0, 0.0, Some(70.0)), None);
    }

    #[test]
    fn cns_examples() {
        assert_eq!(score_cns(11).unwrap(), 2);
        assert_eq!(score_cns(15).unwrap(), 0);
        assert_eq!(score_cns(5).unwrap(), 4);
        assert!(score_cns(2).is_err());
        assert!(score_cns(16).is_err());
    }

    #[test]
    fn cardio_examples() {
        assert_eq!(score_cardio(Some(55.333), zeros()), 1);
        assert_eq!(score_cardio(Some(72.0), zeros()), 0);
        let dopa16 = Vasopressors {
            dopamine: Some(16.0),
            ..none()
        };
        assert_eq!(score_cardio(Some(60.0), dopa16), 4);
        assert_eq!(score_cardio(None, none()), 0);
        let dobu = Vasopressors {
            dobutamine: Some(0.01),
            ..none()
        };
        assert_eq!(score_cardio(Some(90.0), dobu), 2);
        let norepi = Vasopressors {
            norepinephrine: Some(0.1),
            ..none()
        };
        assert_eq!(score_cardio(None, norepi), 3);
    }

    #[test]
    fn resp_examples() {
        assert_eq!(score_resp(Some(200.0), false, true), 2);
        assert_eq!(score_resp(Some(200.0), true, true), 2);
        assert_eq!(score_resp(Some(141.0), true, true), 3);
        assert_eq!(score_resp(Some(141.0), false, true), 2);
        assert_eq!(score_resp(Some(141.0), false, false), 3);
        assert_eq!(score_resp(Some(450.0), false, true), 0);
        assert_eq!(score_resp(None, true, true), 0);
    }

    #[test]
    fn coag_liver_renal_examples() {
        assert_eq!(score_coag(Some(310.0)), 0);
        assert_eq!(score_coag(Some(19.0)), 4);
        assert_eq!(score_coag(None), 0);
        assert_eq!(score_liver(Some(1.0)), 0);
        assert_eq!(score_liver(Some(1.8)), 1);
        assert_eq!(score_liver(Some(12.5)), 4);
        assert_eq!(score_liver(Some(1.95)), 1);
        assert_eq!(score_renal(Some(0.4), Some(1095.0)), 0);
        assert_eq!(score_renal(Some(0.4), Some(150.0)), 4);
        assert_eq!(score_renal(Some(1.4), Some(1585.0)), 1);
        assert_eq!(score_renal(None, None), 0);
        assert_eq!(score_renal(None, Some(499.0)), 3);
    }
}
