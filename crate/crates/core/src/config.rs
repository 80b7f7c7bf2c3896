//! Plain key=value configuration files.
//!
//! Recognized keys: `method`, `family`, `alpha_s`, `alpha`, `beta`, `base`,
//! `axis_dims` (comma-separated), `train_extent` and `target_extent`
//! (`HxW`). Blank lines and `#` comments are ignored; later duplicates win;
//! unknown keys are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Extent;
use crate::spectral::SpectrumShape;

/// Optional values parsed from a config file. The caller layers these under
/// any explicitly supplied flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub method: Option<String>,
    pub family: Option<String>,
    pub alpha_s: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub base: Option<f64>,
    pub axis_dims: Option<Vec<usize>>,
    pub train_extent: Option<Extent>,
    pub target_extent: Option<Extent>,
    pub spectrum: Option<SpectrumShape>,
    pub noise: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |e: &dyn std::fmt::Display| {
            Error::Config(format!("line {}: bad {key} value {value:?}: {e}", lineno + 1))
        };
        match key {
            "method" => cfg.method = Some(value.to_string()),
            "family" => cfg.family = Some(value.to_string()),
            "alpha_s" => cfg.alpha_s = Some(value.parse().map_err(|e| bad(&e))?),
            "alpha" => cfg.alpha = Some(value.parse().map_err(|e| bad(&e))?),
            "beta" => cfg.beta = Some(value.parse().map_err(|e| bad(&e))?),
            "base" => cfg.base = Some(value.parse().map_err(|e| bad(&e))?),
            "axis_dims" => {
                cfg.axis_dims = Some(
                    value
                        .split(',')
                        .map(|p| p.trim().parse().map_err(|e| bad(&e)))
                        .collect::<Result<Vec<usize>>>()?,
                )
            }
            "train_extent" => cfg.train_extent = Some(value.parse()?),
            "target_extent" => cfg.target_extent = Some(value.parse()?),
            "spectrum" => cfg.spectrum = Some(SpectrumShape::parse(value)?),
            "noise" => cfg.noise = Some(value.parse().map_err(|e| bad(&e))?),
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys_with_comments() {
        let cfg = parse_config(
            "# sample\nmethod = sharp\nfamily=rational\nalpha_s=3\nalpha=1\nbeta = 32\n\
             base=10000\naxis_dims=32,32\ntrain_extent=64x64\ntarget_extent = 128x128 # 2x\n\
             spectrum=powerlaw:1:2\nnoise=1.0\n\n",
        )
        .unwrap();
        assert_eq!(cfg.method.as_deref(), Some("sharp"));
        assert_eq!(cfg.alpha_s, Some(3.0));
        assert_eq!(cfg.axis_dims, Some(vec![32, 32]));
        assert_eq!(cfg.train_extent, Some(Extent::new(64, 64).unwrap()));
        assert_eq!(cfg.target_extent, Some(Extent::new(128, 128).unwrap()));
        assert_eq!(cfg.noise, Some(1.0));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(parse_config("wat=1").is_err());
        assert!(parse_config("alpha_s=three").is_err());
        assert!(parse_config("just a line").is_err());
        assert!(parse_config("train_extent=64").is_err());
    }

    #[test]
    fn later_duplicates_win() {
        let cfg = parse_config("alpha=1\nalpha=2").unwrap();
        assert_eq!(cfg.alpha, Some(2.0));
    }
}
