use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Organ;

/// Organ group a precondition code belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionGroup {
    Lung,
    Kidney,
    Coagulation,
    Liver,
    Cardiovascular,
}

impl PreconditionGroup {
    pub const ALL: [PreconditionGroup; 5] = [
        PreconditionGroup::Lung,
        PreconditionGroup::Kidney,
        PreconditionGroup::Coagulation,
        PreconditionGroup::Liver,
        PreconditionGroup::Cardiovascular,
    ];

    /// The SOFA organ system disregarded when this group applies.
    pub fn organ(self) -> Organ {
        match self {
            PreconditionGroup::Lung => Organ::Resp,
            PreconditionGroup::Kidney => Organ::Renal,
            PreconditionGroup::Coagulation => Organ::Coag,
            PreconditionGroup::Liver => Organ::Liver,
            PreconditionGroup::Cardiovascular => Organ::Cardio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Distribution {
    #[serde(rename = "ID")]
    InDistribution,
    #[serde(rename = "OOD")]
    OutOfDistribution,
}

/// A medical precondition given as an ICD-10 code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Precondition {
    pub icd_code: &'static str,
    pub group: PreconditionGroup,
    pub distribution: Distribution,
}

const fn code(
    icd_code: &'static str,
    group: PreconditionGroup,
    distribution: Distribution,
) -> Precondition {
    Precondition {
        icd_code,
        group,
        distribution,
    }
}

use Distribution::{InDistribution as Id, OutOfDistribution as Ood};
use PreconditionGroup::{Cardiovascular, Coagulation, Kidney, Liver, Lung};

pub static PRECONDITIONS: [Precondition; 16] = [
    code("J40", Lung, Id),
    code("J41", Lung, Id),
    code("J42", Lung, Id),
    code("J44.9", Lung, Ood),
    code("N18.9", Kidney, Id),
    code("N28", Kidney, Id),
    code("N19", Kidney, Ood),
    code("D68.4", Coagulation, Id),
    code("D68.5", Coagulation, Id),
    code("D68.6", Coagulation, Ood),
    code("K70.0", Liver, Id),
    code("K70.41", Liver, Id),
    code("K70.3", Liver, Ood),
    code("I50.0", Cardiovascular, Id),
    code("I50.9", Cardiovascular, Id),
    code("I50.1", Cardiovascular, Ood),
];

impl Precondition {
    pub fn all() -> impl Iterator<Item = &'static Precondition> {
        PRECONDITIONS.iter()
    }

    pub fn from_code(icd_code: &str) -> Option<Precondition> {
        Self::all().find(|p| p.icd_code == icd_code).copied()
    }

    pub fn organ(&self) -> Organ {
        self.group.organ()
    }

    /// Codes of `group` available to a pool; the OOD pool also contains
    /// the ID codes.
    pub fn pool(group: PreconditionGroup, include_ood: bool) -> Vec<Precondition> {
        Self::all()
            .filter(|p| p.group == group)
            .filter(|p| include_ood || p.distribution == Distribution::InDistribution)
            .copied()
            .collect()
    }
}

impl fmt::Display for Precondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.icd_code)
    }
}

impl Serialize for Precondition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.icd_code)
    }
}

impl<'de> Deserialize<'de> for Precondition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        Precondition::from_code(&code)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown precondition code `{code}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_codes_eleven_in_distribution() {
        assert_eq!(Precondition::all().count(), 16);
        assert_eq!(
            Precondition::all()
                .filter(|p| p.distribution == Distribution::InDistribution)
                .count(),
            11
        );
    }

    #[test]
    fn id_pools_exclude_ood_codes() {
        let ood = ["J44.9", "N19", "D68.6", "K70.3", "I50.1"];
        for group in PreconditionGroup::ALL {
            let pool = Precondition::pool(group, false);
            assert!(pool.iter().all(|p| !ood.contains(&p.icd_code)));
            assert_eq!(Precondition::pool(group, true).len(), pool.len() + 1);
        }
    }

    #[test]
    fn n18_9_is_kidney() {
        let p = Precondition::from_code("N18.9").unwrap();
        assert_eq!(p.organ(), Organ::Renal);
        assert_eq!(Precondition::from_code("Z00"), None);
    }
}
