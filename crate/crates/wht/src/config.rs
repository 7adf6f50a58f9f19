//! Run configuration: JSON in, validated model out.

use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use wht_core::model::{Color, ModelParams};
use wht_core::ring::Q;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub toprec: ToprecConfig,
    #[serde(default = "all_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parameters are strings holding integers, fractions (`"-2/3"`) or decimals (`"0.25"`);
/// all are read as exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub num: Vec<ColorConfig>,
    #[serde(default)]
    pub den: Vec<ColorConfig>,
    #[serde(default)]
    pub u_exp: Option<String>,
    pub p: Vec<String>,
    pub q: Vec<String>,
    #[serde(default)]
    pub scalar_mode: ScalarMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorConfig {
    pub u: String,
    #[serde(default = "one")]
    pub mult: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarMode {
    #[default]
    Exact,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub d_max: usize,
    /// Emit only connected counts in `table`.
    pub connected: bool,
    /// Cap on each run length; defaults to what genus `toprec.g_max` needs.
    #[serde(default)]
    pub exp_run_max: Option<u32>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { d_max: 4, connected: true, exp_run_max: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    #[serde(rename = "T")]
    pub order: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { order: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToprecConfig {
    pub t_value: [f64; 2],
    pub g_max: usize,
    pub n_max: usize,
    pub tol: f64,
    pub depth_margin: usize,
    /// Sample radius as a fraction of the smallest ramification point.
    #[serde(default = "default_fraction")]
    pub sample_fraction: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for ToprecConfig {
    fn default() -> Self {
        ToprecConfig {
            t_value: [1e-3, 0.0],
            g_max: 1,
            n_max: 3,
            tol: 1e-6,
            depth_margin: 4,
            sample_fraction: default_fraction(),
            samples: default_samples(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    OracleVsSchur,
    W01,
    W02,
    HColor,
    ArtificialPoles,
    SetToZero,
    Insertion,
    Tr,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::OracleVsSchur,
        Task::W01,
        Task::W02,
        Task::HColor,
        Task::ArtificialPoles,
        Task::SetToZero,
        Task::Insertion,
        Task::Tr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::OracleVsSchur => "oracle-vs-schur",
            Task::W01 => "w01",
            Task::W02 => "w02",
            Task::HColor => "h-color",
            Task::ArtificialPoles => "artificial-poles",
            Task::SetToZero => "set-to-zero",
            Task::Insertion => "insertion",
            Task::Tr => "tr",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), formats: vec![Format::Json] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn one() -> u64 {
    1
}

fn all_tasks() -> Vec<Task> {
    Task::ALL.to_vec()
}

fn default_fraction() -> f64 {
    wht_core::toprec::DEFAULT_SAMPLE_FRACTION
}

fn default_samples() -> usize {
    5
}

/// Reads `"3"`, `"-2/3"` or `"0.125"` as an exact rational.
pub fn parse_rational(s: &str) -> Result<Q, CliError> {
    let bad = || CliError::Config(format!("not a rational number: {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if let Some((i, f)) = s.split_once('.') {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = i.starts_with('-');
        let int: BigInt = if i.is_empty() || i == "-" || i == "+" { BigInt::from(0) } else { i.parse().map_err(|_| bad())? };
        let frac: BigInt = f.parse().map_err(|_| bad())?;
        let den = BigInt::from(10).pow(f.len() as u32);
        let mag = int.magnitude().clone();
        let total = BigInt::from(mag) * &den + frac;
        return Ok(Q::new(if neg { -total } else { total }, den));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Q::from_integer(n))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<ModelParams<Q>, CliError> {
        let colors = |v: &[ColorConfig]| -> Result<Vec<Color<Q>>, CliError> {
            v.iter().map(|c| Ok(Color { u: parse_rational(&c.u)?, mult: c.mult })).collect()
        };
        let list = |v: &[String]| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>();
        let params = ModelParams {
            num: colors(&self.model.num)?,
            den: colors(&self.model.den)?,
            u_exp: self.model.u_exp.as_deref().map(parse_rational).transpose()?,
            p: list(&self.model.p)?,
            q: list(&self.model.q)?,
        };
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }

    pub fn t_value(&self) -> wht_core::ring::C64 {
        wht_core::ring::C64::new(self.toprec.t_value[0], self.toprec.t_value[1])
    }

    /// Checks ranges. The limits keep every command within laptop memory and time.
    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        let params = self.params()?;
        if params.m() + params.r() > 6 {
            return err("at most 6 colors counted with multiplicity".into());
        }
        if params.d1() > 6 || params.d2() > 6 {
            return err("D1 and D2 must be at most 6".into());
        }
        if !(1..=7).contains(&self.oracle.d_max) {
            return err(format!("oracle.d_max = {} outside 1..=7", self.oracle.d_max));
        }
        if !(1..=16).contains(&self.spectral.order) {
            return err(format!("spectral.T = {} outside 1..=16", self.spectral.order));
        }
        let tp = &self.toprec;
        let tn = self.t_value().norm();
        if !(tn > 0.0 && tn <= 0.1) || tp.t_value.iter().any(|x| !x.is_finite()) {
            return err("toprec.t_value must be nonzero with modulus at most 0.1".into());
        }
        if tp.g_max > 2 || !(1..=4).contains(&tp.n_max) {
            return err("toprec needs g_max <= 2 and 1 <= n_max <= 4".into());
        }
        if !(tp.tol > 0.0 && tp.tol < 1.0) {
            return err("toprec.tol must lie in (0, 1)".into());
        }
        if tp.depth_margin > 32 {
            return err("toprec.depth_margin must be at most 32".into());
        }
        if !(tp.sample_fraction > 0.0 && tp.sample_fraction < 0.5) || !(1..=64).contains(&tp.samples) {
            return err("toprec.sample_fraction must lie in (0, 0.5) and samples in 1..=64".into());
        }
        if self.output.formats.is_empty() {
            return err("output.formats is empty".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        let q = |n: i64, d: i64| Q::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational(" -2/6 ").unwrap(), q(-1, 3));
        assert_eq!(parse_rational("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_rational("-0.5").unwrap(), q(-1, 2));
        for bad in ["", "1/0", "x", "1.", "1.2e3", "1/2/3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_json(r#"{"model": {"num": [{"u": "1"}], "p": ["1/2"], "q": ["1", "1/3"]}}"#).unwrap();
        assert_eq!(cfg.tasks.len(), 8);
        assert_eq!(cfg.model.num[0].mult, 1);
        assert_eq!(cfg.spectral.order, 6);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"model": {"num": [{"u": "0"}], "p": ["1"], "q": ["1"]}}"#,
            r#"{"model": {"num": [{"u": "1"}], "p": [], "q": ["1"]}}"#,
            r#"{"model": {"num": [{"u": "1"}], "p": ["1"], "q": ["1"]}, "tasks": ["nope"]}"#,
            r#"{"model": {"num": [{"u": "1"}], "p": ["1"], "q": ["1"]}, "oracle": {"d_max": 9, "connected": true}}"#,
            r#"{"model": {"num": [{"u": "1"}], "p": ["1"], "q": ["1"], "extra": 1}}"#,
        ] {
            assert!(matches!(RunConfig::from_json(text), Err(CliError::Config(_))), "{text}");
        }
    }
}
