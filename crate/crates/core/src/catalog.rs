//! The closed catalog of 131 dynamic ICU variables.
//!
//! Feature ids are positions in [`FEATURES`]; grids and forecast files use
//! the same ordering.

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Direction in which a variable becomes clinically "worse" over a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    MinWorst,
    MaxWorst,
    Sum,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: &'static str,
    pub unit: &'static str,
    pub aggregation: Aggregation,
    pub sofa_relevant: bool,
}

const fn f(name: &'static str, unit: &'static str) -> FeatureSpec {
    FeatureSpec {
        name,
        unit,
        aggregation: Aggregation::None,
        sofa_relevant: false,
    }
}

const fn sofa(name: &'static str, unit: &'static str, aggregation: Aggregation) -> FeatureSpec {
    FeatureSpec {
        name,
        unit,
        aggregation,
        sofa_relevant: true,
    }
}

use Aggregation::{MaxWorst, MinWorst, Sum};

pub const FEATURE_COUNT: usize = 131;

/// Vasopressor infusions are recorded as rates in mcg/min and normalized by
/// body weight during worst-value extraction.
pub static FEATURES: [FeatureSpec; FEATURE_COUNT] = [
    f("ALP", "IU/L"),
    f("ALT", "IU/L"),
    f("AST", "IU/L"),
    f("Albumin", "g/dL"),
    f("Albumin 25%", "mL"),
    f("Albumin 5%", "mL"),
    f("Amiodarone", "mg"),
    f("Anion Gap", "mEq/L"),
    f("BUN", "mg/dL"),
    f("Base Excess", "mEq/L"),
    f("Basophils", "%"),
    f("Bicarbonate", "mEq/L"),
    f("Bilirubin (Direct)", "mg/dL"),
    f("Bilirubin (Indirect)", "mg/dL"),
    sofa("Bilirubin (Total)", "mg/dL", MaxWorst),
    f("CRR", "s"),
    f("Calcium Free", "mmol/L"),
    f("Calcium Gluconate", "mg"),
    f("Calcium Total", "mg/dL"),
    f("Cefazolin", "mg"),
    f("Chest Tube", "mL"),
    f("Chloride", "mEq/L"),
    f("Colloid", "mL"),
    sofa("Creatinine Blood", "mg/dL", MaxWorst),
    f("Creatinine Urine", "mg/dL"),
    f("D5W", "mL"),
    sofa("DBP", "mmHg", MinWorst),
    f("Dextrose Other", "mL"),
    sofa("Dobutamine", "mcg/min", MaxWorst),
    sofa("Dopamine", "mcg/min", MaxWorst),
    f("EBL", "mL"),
    f("Emesis", "mL"),
    f("Eoisinophils", "%"),
    sofa("Epinephrine", "mcg/min", MaxWorst),
    f("Famotidine", "mg"),
    f("Fentanyl", "mcg"),
    sofa("FiO2", "fraction", MinWorst),
    f("Fiber", "mL"),
    f("Free Water", "mL"),
    f("Fresh Frozen Plasma", "mL"),
    f("Furosemide", "mg"),
    sofa("GCS_eye", "points", MinWorst),
    sofa("GCS_motor", "points", MinWorst),
    sofa("GCS_verbal", "points", MinWorst),
    f("GT Flush", "mL"),
    f("Gastric", "mL"),
    f("Gastric Meds", "mL"),
    f("Glucose (Blood)", "mg/dL"),
    f("Glucose (Serum)", "mg/dL"),
    f("Glucose (Whole Blood)", "mg/dL"),
    f("HR", "bpm"),
    f("Half Normal Saline", "mL"),
    f("Hct", "%"),
    f("Height", "cm"),
    f("Heparin", "units"),
    f("Hgb", "g/dL"),
    f("Hydralazine", "mg"),
    f("Hydromorphone", "mg"),
    f("INR", "ratio"),
    f("Insulin Humalog", "units"),
    f("Insulin NPH", "units"),
    f("Insulin Regular", "units"),
    f("Insulin largine", "units"),
    f("Intubated", "flag"),
    f("Jackson-Pratt", "mL"),
    f("KCl", "mEq"),
    f("KCl (Bolus)", "mEq"),
    f("LDH", "IU/L"),
    f("Lactate", "mmol/L"),
    f("Lactated Ringers", "mL"),
    f("Levofloxacin", "mg"),
    f("Lorazepam", "mg"),
    f("Lymphocytes", "%"),
    f("Lymphocytes (Absolute)", "K/uL"),
    f("MBP", "mmHg"),
    f("MCH", "pg"),
    f("MCHC", "g/dL"),
    f("MCV", "fL"),
    f("Magnesium", "mg/dL"),
    f("Magnesium Sulfate (Bolus)", "g"),
    f("Magnesium Sulphate", "g"),
    FeatureSpec {
        name: "Mechanically ventilated",
        unit: "flag",
        aggregation: MaxWorst,
        sofa_relevant: false,
    },
    f("Metoprolol", "mg"),
    f("Midazolam", "mg"),
    f("Milrinone", "mcg/kg/min"),
    f("Monocytes", "%"),
    f("Morphine Sulfate", "mg"),
    f("Neosynephrine", "mcg/min"),
    f("Neutrophils", "%"),
    f("Nitroglycerine", "mcg/min"),
    f("Nitroprusside", "mcg/min"),
    sofa("Norepinephrine", "mcg/min", MaxWorst),
    f("Normal Saline", "mL"),
    f("O2 Saturation", "%"),
    f("OR/PACU Crystalloid", "mL"),
    f("PCO2", "mmHg"),
    f("PO intake", "mL"),
    f("PT", "s"),
    f("PTT", "s"),
    sofa("PaO2", "mmHg", MinWorst),
    f("Packed RBC", "mL"),
    f("Pantoprazole", "mg"),
    f("Phosphate", "mg/dL"),
    f("Piggyback", "mL"),
    f("Piperacillin", "g"),
    sofa("Platelet Count", "K/uL", MinWorst),
    f("Potassium", "mEq/L"),
    f("Pre-admission Intake", "mL"),
    f("Pre-admission Output", "mL"),
    f("Propofol", "mg"),
    f("RBC", "m/uL"),
    f("RDW", "%"),
    f("RR", "breaths/min"),
    f("Residual", "mL"),
    sofa("SBP", "mmHg", MinWorst),
    f("SG Urine", ""),
    f("Sodium", "mEq/L"),
    f("Solution", "mL"),
    f("Sterile Water", "mL"),
    f("Stool", "mL"),
    f("TPN", "mL"),
    f("Temperature", "C"),
    f("Total CO2", "mEq/L"),
    f("Ultrafiltrate", "mL"),
    sofa("Urine", "mL", Sum),
    f("Vancomycin", "mg"),
    f("Vasopressin", "units/hr"),
    f("WBC", "K/uL"),
    f("Weight", "kg"),
    f("pH Blood", ""),
    f("pH Urine", ""),
];

const fn str_eq(a: &str, b: &str) -> bool {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    if a.len() != b.len() {
        return false;
    }
    let mut i = 0;
    while i < a.len() {
        if a[i] != b[i] {
            return false;
        }
        i += 1;
    }
    true
}

const fn index_of(name: &str) -> u16 {
    let mut i = 0;
    while i < FEATURE_COUNT {
        if str_eq(FEATURES[i].name, name) {
            return i as u16;
        }
        i += 1;
    }
    panic!("feature missing from catalog")
}

/// Index of a feature in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(u16);

impl FeatureId {
    pub const GCS_EYE: FeatureId = FeatureId(index_of("GCS_eye"));
    pub const GCS_MOTOR: FeatureId = FeatureId(index_of("GCS_motor"));
    pub const GCS_VERBAL: FeatureId = FeatureId(index_of("GCS_verbal"));
    pub const SBP: FeatureId = FeatureId(index_of("SBP"));
    pub const DBP: FeatureId = FeatureId(index_of("DBP"));
    pub const DOPAMINE: FeatureId = FeatureId(index_of("Dopamine"));
    pub const DOBUTAMINE: FeatureId = FeatureId(index_of("Dobutamine"));
    pub const EPINEPHRINE: FeatureId = FeatureId(index_of("Epinephrine"));
    pub const NOREPINEPHRINE: FeatureId = FeatureId(index_of("Norepinephrine"));
    pub const PAO2: FeatureId = FeatureId(index_of("PaO2"));
    pub const FIO2: FeatureId = FeatureId(index_of("FiO2"));
    pub const MECH_VENT: FeatureId = FeatureId(index_of("Mechanically ventilated"));
    pub const PLATELETS: FeatureId = FeatureId(index_of("Platelet Count"));
    pub const BILIRUBIN: FeatureId = FeatureId(index_of("Bilirubin (Total)"));
    pub const CREATININE: FeatureId = FeatureId(index_of("Creatinine Blood"));
    pub const URINE: FeatureId = FeatureId(index_of("Urine"));
    pub const WEIGHT: FeatureId = FeatureId(index_of("Weight"));

    pub fn from_index(index: usize) -> Option<FeatureId> {
        (index < FEATURE_COUNT).then_some(FeatureId(index as u16))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn spec(self) -> &'static FeatureSpec {
        &FEATURES[self.index()]
    }

    pub fn name(self) -> &'static str {
        self.spec().name
    }

    pub fn all() -> impl Iterator<Item = FeatureId> {
        (0..FEATURE_COUNT as u16).map(FeatureId)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for FeatureId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for FeatureId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        FeatureCatalog::standard()
            .lookup(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown feature `{name}`")))
    }
}

/// Name-indexed view over [`FEATURES`].
#[derive(Debug)]
pub struct FeatureCatalog {
    by_name: HashMap<&'static str, FeatureId>,
}

static STANDARD: LazyLock<FeatureCatalog> = LazyLock::new(|| FeatureCatalog {
    by_name: FeatureId::all().map(|id| (id.name(), id)).collect(),
});

impl FeatureCatalog {
    pub fn standard() -> &'static FeatureCatalog {
        &STANDARD
    }

    pub fn lookup(&self, name: &str) -> Option<FeatureId> {
        self.by_name.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }

    pub fn sofa_relevant(&self) -> impl Iterator<Item = FeatureId> {
        FeatureId::all().filter(|id| id.spec().sofa_relevant)
    }

    /// Reference listing, one `name,unit,aggregation,sofa_relevant` row per feature.
    pub fn listing(&self) -> String {
        let mut out = String::from("name,unit,aggregation,sofa_relevant\n");
        for id in FeatureId::all() {
            let spec = id.spec();
            let aggregation = match spec.aggregation {
                Aggregation::MinWorst => "min-worst",
                Aggregation::MaxWorst => "max-worst",
                Aggregation::Sum => "sum",
                Aggregation::None => "none",
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                spec.name, spec.unit, aggregation, spec.sofa_relevant
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_131_entries_and_15_sofa_variables() {
        let catalog = FeatureCatalog::standard();
        assert_eq!(catalog.len(), 131);
        assert_eq!(catalog.sofa_relevant().count(), 15);
    }

    #[test]
    fn names_are_unique_and_contain_no_commas() {
        for id in FeatureId::all() {
            assert!(!id.name().contains(','), "{}", id.name());
            assert_eq!(FeatureCatalog::standard().lookup(id.name()), Some(id));
        }
    }

    #[test]
    fn named_constants_point_at_their_names() {
        assert_eq!(FeatureId::DBP.name(), "DBP");
        assert_eq!(FeatureId::PLATELETS.name(), "Platelet Count");
        assert_eq!(FeatureId::URINE.spec().aggregation, Aggregation::Sum);
        assert_eq!(FeatureId::FIO2.spec().aggregation, Aggregation::MinWorst);
        assert!(!FeatureId::WEIGHT.spec().sofa_relevant);
    }

    #[test]
    fn listing_has_header_plus_one_row_per_feature() {
        let listing = FeatureCatalog::standard().listing();
        assert_eq!(listing.lines().count(), 132);
        assert!(listing.contains("Urine,mL,sum,true"));
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert_eq!(FeatureCatalog::standard().lookup("XYZ"), None);
    }
}
