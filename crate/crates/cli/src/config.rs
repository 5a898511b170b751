//! JSON config files and the small value parsers shared by the commands.
//!
//! A config file is a JSON object whose keys are flag names:
//!
//! ```json
//! { "model": "fgn:H=0.75", "n": [100, 400], "rel-tol": 1e-9, "seed": 7 }
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use crate::output::Format;
use crate::usage;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// A number, or a string such as `"2pi"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Num(f64),
    Text(String),
}

impl Angle {
    pub fn into_string(self) -> String {
        match self {
            Angle::Num(v) => format!("{v:e}"),
            Angle::Text(s) => s,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub model: Option<OneOrMany<String>>,
    pub params: Option<BTreeMap<String, f64>>,
    pub n: Option<OneOrMany<usize>>,
    pub interval: Option<String>,
    pub rel_tol: Option<f64>,
    pub max_refinements: Option<usize>,
    pub points_per_panel: Option<usize>,
    pub grid_points: Option<usize>,
    pub points: Option<usize>,
    pub lo: Option<Angle>,
    pub hi: Option<Angle>,
    pub fejer: Option<bool>,
    pub compare: Option<bool>,
    pub trials: Option<usize>,
    pub oversampling: Option<usize>,
    pub montecarlo: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| usage(format!("config file {}: {e}", path.display())))
    }
}

/// Parses `1.5`, `pi`, `2pi`, `0.5pi` or `0.5*pi`.
pub fn parse_angle(s: &str) -> anyhow::Result<f64> {
    let t = s.trim();
    let value = match t.strip_suffix("pi") {
        Some(prefix) => {
            let prefix = prefix.trim().trim_end_matches('*').trim();
            let factor = if prefix.is_empty() {
                1.0
            } else {
                prefix
                    .parse::<f64>()
                    .map_err(|_| usage(format!("cannot parse `{s}`")))?
            };
            factor * PI
        }
        None => t
            .parse::<f64>()
            .map_err(|_| usage(format!("cannot parse `{s}` as a number")))?,
    };
    if !value.is_finite() {
        return Err(usage(format!("`{s}` is not finite")));
    }
    Ok(value)
}

/// Parses `lo:hi`.
pub fn parse_interval(s: &str) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("interval `{s}` must look like lo:hi")))?;
    Ok((parse_angle(lo)?, parse_angle(hi)?))
}

/// Parses `key=value,...`.
pub fn parse_params(s: &str) -> anyhow::Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("expected key=value, got `{pair}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("parameter `{k}` has non-numeric value `{v}`")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_angle(" 0.3 ").unwrap(), 0.3);
        assert!(parse_angle("x").is_err());
        assert_eq!(parse_interval("0:2pi").unwrap(), (0.0, 2.0 * PI));
        assert!(parse_interval("0,1").is_err());
    }

    #[test]
    fn params() {
        let p = parse_params("H=0.8, r = 0.5").unwrap();
        assert_eq!(p["H"], 0.8);
        assert_eq!(p["r"], 0.5);
        assert!(parse_params("H").is_err());
        assert!(parse_params("H=a").is_err());
    }

    #[test]
    fn file_config_accepts_scalars_and_lists() {
        let c: FileConfig = serde_json::from_str(
            r#"{"model": "iid", "n": 5, "lo": "pi", "hi": 6.0, "rel-tol": 1e-8}"#,
        )
        .unwrap();
        assert_eq!(c.model.unwrap().into_vec(), vec!["iid".to_string()]);
        assert_eq!(c.n.unwrap().into_vec(), vec![5]);
        assert_eq!(parse_angle(&c.lo.unwrap().into_string()).unwrap(), PI);
        assert_eq!(parse_angle(&c.hi.unwrap().into_string()).unwrap(), 6.0);
        assert!(serde_json::from_str::<FileConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
