//! Seeded synthetic ICU stays for demos, tests and benchmarks.
//!
//! Each stay follows a per-organ severity walk over whole days; some stays
//! escalate sharply on one day. Measurements are drawn from ranges that map
//! to the severity, with random gaps so that carry-forward and unknown
//! values are exercised.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::FeatureId;
use crate::cohort::{Demographics, Gender, StayInfo, StayRecord, DAY_HOURS};
use crate::observation::{Observation, StayId};
use crate::sofa::Organ;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub stays: usize,
    /// Full days per stay; at least 2 gives one window.
    pub days: usize,
    pub seed: u64,
    pub infection_rate: f64,
    pub escalation_rate: f64,
    /// Chance that a feature is not measured on a given day.
    pub missing_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            stays: 100,
            days: 3,
            seed: 0,
            infection_rate: 0.5,
            escalation_rate: 0.3,
            missing_rate: 0.1,
        }
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

struct DayWriter<'a> {
    rng: &'a mut ChaCha8Rng,
    out: Vec<Observation>,
    stay: String,
    day: usize,
    missing_rate: f64,
}

impl DayWriter<'_> {
    fn hours(&mut self, count: usize) -> Vec<f64> {
        let mut hours: Vec<f64> = (0..count)
            .map(|_| {
                let h = self.rng.gen_range(0..24) as f64 + f64::from(self.rng.gen_range(0..60u8)) / 60.0;
                self.day as f64 * DAY_HOURS + round1(h).min(23.9)
            })
            .collect();
        hours.sort_by(f64::total_cmp);
        hours
    }

    fn skip(&mut self) -> bool {
        self.rng.gen_bool(self.missing_rate)
    }

    fn emit(&mut self, feature: FeatureId, time: f64, value: f64) {
        self.out.push(Observation::new(feature, time, value, self.stay.clone()));
    }

    /// `count` samples in `[lo, hi]`; one of them is pinned to `worst`.
    fn series(&mut self, feature: FeatureId, count: usize, worst: f64, lo: f64, hi: f64) {
        if self.skip() {
            return;
        }
        let times = self.hours(count);
        let pinned = self.rng.gen_range(0..times.len());
        for (i, t) in times.into_iter().enumerate() {
            let v = if i == pinned {
                worst
            } else {
                round1(self.rng.gen_range(lo..=hi))
            };
            self.emit(feature, t, v);
        }
    }
}

fn gcs_for(severity: u8, rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let (lo, hi) = match severity {
        0 => (15, 15),
        1 => (13, 14),
        2 => (10, 12),
        3 => (6, 9),
        _ => (3, 5),
    };
    let target: i32 = rng.gen_range(lo..=hi);
    let mut parts = [4, 6, 5];
    let mut excess = 15 - target;
    while excess > 0 {
        let k = rng.gen_range(0..3);
        if parts[k] > 1 {
            parts[k] -= 1;
            excess -= 1;
        }
    }
    (f64::from(parts[0]), f64::from(parts[1]), f64::from(parts[2]))
}

fn write_day(w: &mut DayWriter<'_>, sev: &[u8; 6], weight: f64) {
    let mut rng = ChaCha8Rng::from_rng(&mut *w.rng).expect("seeded");

    let (eye, motor, verbal) = gcs_for(sev[0], &mut rng);
    for (id, v, max) in [
        (FeatureId::GCS_EYE, eye, 4.0),
        (FeatureId::GCS_MOTOR, motor, 6.0),
        (FeatureId::GCS_VERBAL, verbal, 5.0),
    ] {
        w.series(id, 3, v, v, max);
    }

    if !w.skip() {
        let map_floor = if sev[1] == 0 { 72.0 } else { 55.0 };
        for t in w.hours(6) {
            let dbp = round1(rng.gen_range(map_floor - 15.0..map_floor + 10.0));
            let sbp = round1(dbp + rng.gen_range(30.0..60.0));
            w.emit(FeatureId::SBP, t, sbp);
            w.emit(FeatureId::DBP, t, dbp);
        }
    }
    let drug = match sev[1] {
        2 => Some((FeatureId::DOBUTAMINE, rng.gen_range(1.0..8.0))),
        3 => Some((FeatureId::NOREPINEPHRINE, rng.gen_range(0.02..0.1))),
        4 => Some((FeatureId::EPINEPHRINE, rng.gen_range(0.11..0.4))),
        _ => None,
    };
    if let Some((id, rate)) = drug {
        let t = w.hours(1)[0];
        w.emit(id, t, round1(rate * weight * 10.0) / 10.0);
    }

    let ratio = match sev[2] {
        0 => rng.gen_range(420.0..520.0),
        1 => rng.gen_range(310.0..390.0),
        2 => rng.gen_range(210.0..290.0),
        3 => rng.gen_range(110.0..190.0),
        _ => rng.gen_range(50.0..95.0),
    };
    let fio2 = if sev[2] >= 3 { rng.gen_range(0.5..1.0) } else { rng.gen_range(0.21..0.5) };
    let fio2 = (fio2 * 100.0_f64).round() / 100.0;
    let pao2 = round1(ratio * fio2);
    w.series(FeatureId::PAO2, 2, pao2, pao2, pao2 + 40.0);
    w.series(FeatureId::FIO2, 2, fio2, fio2, 1.0);
    if sev[2] >= 3 && !w.skip() {
        let t = w.hours(1)[0];
        w.emit(FeatureId::MECH_VENT, t, if rng.gen_bool(0.8) { 1.0 } else { 0.0 });
    }

    let platelets = match sev[3] {
        0 => rng.gen_range(160.0..400.0),
        1 => rng.gen_range(100.0..149.0),
        2 => rng.gen_range(50.0..99.0),
        3 => rng.gen_range(20.0..49.0),
        _ => rng.gen_range(5.0..19.0),
    };
    let platelets = round1(platelets);
    w.series(FeatureId::PLATELETS, 1, platelets, platelets, platelets + 30.0);

    let bilirubin = match sev[4] {
        0 => rng.gen_range(0.2..1.1),
        1 => rng.gen_range(1.3..1.9),
        2 => rng.gen_range(2.1..5.9),
        3 => rng.gen_range(6.1..11.9),
        _ => rng.gen_range(12.1..20.0),
    };
    let bilirubin = round1(bilirubin);
    w.series(FeatureId::BILIRUBIN, 1, bilirubin, 0.1, bilirubin);

    let (creatinine, urine) = match sev[5] {
        0 => (rng.gen_range(0.4..1.1), rng.gen_range(800.0..2000.0)),
        1 => (rng.gen_range(1.3..1.9), rng.gen_range(800.0..2000.0)),
        2 => (rng.gen_range(2.1..3.4), rng.gen_range(600.0..1500.0)),
        3 => (rng.gen_range(3.6..4.9), rng.gen_range(250.0..480.0)),
        _ => (rng.gen_range(5.1..7.0), rng.gen_range(20.0..180.0)),
    };
    let creatinine = round1(creatinine);
    w.series(FeatureId::CREATININE, 2, creatinine, 0.3, creatinine);
    if !w.skip() {
        let times = w.hours(4);
        let share = round1(urine / times.len() as f64);
        for t in times {
            w.emit(FeatureId::URINE, t, share);
        }
    }
}

/// Generates `options.stays` stays with ids `synth-0000`, ...
pub fn synth_stays(options: &SynthOptions) -> Vec<StayRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let days = options.days.max(1);
    (0..options.stays)
        .map(|i| {
            let stay = format!("synth-{i:04}");
            let weight = round1(rng.gen_range(50.0..110.0));
            let demographics = Demographics {
                age: f64::from(rng.gen_range(18u8..95)),
                gender: Some(if rng.gen_bool(0.5) { Gender::Male } else { Gender::Female }),
                weight: rng.gen_bool(0.9).then_some(weight),
            };
            let infection = rng.gen_bool(options.infection_rate);
            let escalate_on = rng.gen_bool(options.escalation_rate).then(|| rng.gen_range(1..days.max(2)));

            let mut severity = [0u8; 6];
            for s in &mut severity {
                *s = if rng.gen_bool(0.6) { 0 } else { rng.gen_range(1..=2) };
            }
            let mut w = DayWriter {
                rng: &mut rng,
                out: Vec::new(),
                stay: stay.clone(),
                day: 0,
                missing_rate: options.missing_rate,
            };
            for day in 0..days {
                w.day = day;
                if Some(day) == escalate_on {
                    for _ in 0..3 {
                        let k = w.rng.gen_range(0..Organ::ALL.len());
                        severity[k] = (severity[k] + 1).min(4);
                    }
                } else if day > 0 {
                    for s in &mut severity {
                        let step: i8 = w.rng.gen_range(-1..=1);
                        *s = (*s as i8 + step).clamp(0, 4) as u8;
                    }
                }
                write_day(&mut w, &severity, weight);
            }
            let mut observations = w.out;
            observations.sort_by(|a, b| a.time.total_cmp(&b.time));
            StayRecord {
                info: StayInfo {
                    stay: StayId::new(stay),
                    demographics,
                    los_hours: Some(days as f64 * DAY_HOURS),
                    suspected_infection: infection,
                },
                observations,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{cohort, slide_windows};
    use crate::label::label_window;
    use crate::sofa::RuleConfig;

    #[test]
    fn deterministic_for_a_seed() {
        let opts = SynthOptions {
            stays: 20,
            ..Default::default()
        };
        assert_eq!(synth_stays(&opts), synth_stays(&opts));
        let other = SynthOptions { seed: 1, ..opts };
        assert_ne!(synth_stays(&opts), synth_stays(&other));
    }

    #[test]
    fn stays_pass_the_cohort_and_yield_windows() {
        let opts = SynthOptions {
            stays: 30,
            days: 4,
            ..Default::default()
        };
        let stays = cohort(synth_stays(&opts));
        assert_eq!(stays.len(), 30);
        for s in &stays {
            assert_eq!(slide_windows(s).len(), 3);
            assert!(s.observations.iter().all(|o| o.time >= 0.0 && o.time < 96.0));
        }
    }

    #[test]
    fn escalations_produce_septic_windows() {
        let opts = SynthOptions {
            stays: 200,
            escalation_rate: 0.5,
            ..Default::default()
        };
        let verdicts: Vec<bool> = synth_stays(&opts)
            .iter()
            .flat_map(slide_windows)
            .map(|w| label_window(&w, RuleConfig::default()).verdict.septic)
            .collect();
        assert!(verdicts.iter().any(|v| *v));
        assert!(verdicts.iter().any(|v| !*v));
    }
}
