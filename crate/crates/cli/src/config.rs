//! TOML run configuration. Values here sit below flags and environment
//! variables in precedence.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sofachain::corpus::{PreconditionMode, SplitSizes};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub observations: Option<PathBuf>,
    pub demographics: Option<PathBuf>,
    pub forecasts: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub outputs: Option<PathBuf>,
    pub forced: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub margin: Option<f64>,
    pub mv_gating: Option<bool>,
    pub precondition_pool: Option<String>,
    pub forecast_source: Option<String>,
    pub train: Option<usize>,
    pub dev: Option<usize>,
    pub test_id: Option<usize>,
    pub test_ood: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

pub fn parse_pool(s: &str) -> Result<PreconditionMode> {
    match s.to_ascii_uppercase().as_str() {
        "NONE" => Ok(PreconditionMode::None),
        "ID" => Ok(PreconditionMode::Id),
        "ID+OOD" | "ID_OOD" => Ok(PreconditionMode::IdOod),
        _ => bail!("precondition pool `{s}` is not one of none, ID, ID+OOD"),
    }
}

pub fn pool_name(mode: PreconditionMode) -> &'static str {
    match mode {
        PreconditionMode::None => "none",
        PreconditionMode::Id => "ID",
        PreconditionMode::IdOod => "ID+OOD",
    }
}

pub fn check_margin(margin: f64) -> Result<f64> {
    if margin > 0.0 && margin < 1.0 {
        Ok(margin)
    } else {
        bail!("margin {margin} is outside (0, 1)")
    }
}

/// Split sizes from flags or file; with none given every window goes to
/// the training split.
pub fn resolve_sizes(
    flags: [Option<usize>; 4],
    file: &FileConfig,
    windows: usize,
) -> SplitSizes {
    let [train, dev, test_id, test_ood] = [
        flags[0].or(file.train),
        flags[1].or(file.dev),
        flags[2].or(file.test_id),
        flags[3].or(file.test_ood),
    ];
    if [train, dev, test_id, test_ood].iter().all(Option::is_none) {
        return SplitSizes {
            train: windows,
            ..Default::default()
        };
    }
    SplitSizes {
        train: train.unwrap_or(0),
        dev: dev.unwrap_or(0),
        test_id: test_id.unwrap_or(0),
        test_ood: test_ood.unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_file() {
        let cfg: FileConfig = toml::from_str(
            "seed = 3\nmargin = 0.1\nmv_gating = false\nprecondition_pool = \"ID\"\ntrain = 6\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.mv_gating, Some(false));
        assert_eq!(parse_pool(cfg.precondition_pool.as_deref().unwrap()).unwrap(), PreconditionMode::Id);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("sed = 3\n").is_err());
    }

    #[test]
    fn margin_bounds() {
        assert!(check_margin(0.05).is_ok());
        assert!(check_margin(0.0).is_err());
        assert!(check_margin(1.0).is_err());
    }

    #[test]
    fn flags_override_file_sizes() {
        let file = FileConfig {
            train: Some(5),
            dev: Some(5),
            ..Default::default()
        };
        let sizes = resolve_sizes([Some(1), None, None, None], &file, 10);
        assert_eq!((sizes.train, sizes.dev), (1, 5));
        let all = resolve_sizes([None; 4], &FileConfig::default(), 10);
        assert_eq!(all.train, 10);
    }

    #[test]
    fn pool_names_round_trip() {
        for mode in [PreconditionMode::None, PreconditionMode::Id, PreconditionMode::IdOod] {
            assert_eq!(parse_pool(pool_name(mode)).unwrap(), mode);
        }
    }
}
