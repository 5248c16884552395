//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cmc::DEFAULT_ENUMERATION_CAP;
use crate::error::{CsdpError, Result};
use crate::utility::{log_spaced, LeakageKind, Mechanism};

pub const DEFAULT_ROOT_SEED: u64 = 20240901;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    LeakageVsLambda,
    LeakageVsAge,
    LeakageVsNoise,
    UtilitySweep,
    Frontier,
    OracleValidate,
    ReduceCheck,
}

impl SweepKind {
    pub const ALL: [SweepKind; 7] = [
        Self::LeakageVsLambda,
        Self::LeakageVsAge,
        Self::LeakageVsNoise,
        Self::UtilitySweep,
        Self::Frontier,
        Self::OracleValidate,
        Self::ReduceCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LeakageVsLambda => "leakage-vs-lambda",
            Self::LeakageVsAge => "leakage-vs-age",
            Self::LeakageVsNoise => "leakage-vs-noise",
            Self::UtilitySweep => "utility-sweep",
            Self::Frontier => "frontier",
            Self::OracleValidate => "oracle-validate",
            Self::ReduceCheck => "reduce-check",
        }
    }

    fn required_axes(self) -> &'static [&'static str] {
        match self {
            Self::LeakageVsLambda => &["lambda", "ages", "eps"],
            Self::LeakageVsAge => &["ages", "eps"],
            Self::LeakageVsNoise => &["ages", "eps"],
            Self::UtilitySweep => &["ages", "eps"],
            Self::Frontier => &["caps"],
            Self::OracleValidate => &["ages", "eps"],
            Self::ReduceCheck => &["eps"],
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKind {
    type Err = CsdpError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| unknown_kind(s))
    }
}

fn unknown_kind(s: &str) -> CsdpError {
    let names: Vec<_> = SweepKind::ALL.iter().map(|k| k.name()).collect();
    CsdpError::Config(format!(
        "field `kind`: unknown sweep kind `{s}`, expected one of {}",
        names.join(", ")
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = CsdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(CsdpError::Config(format!(
                "field `format`: unknown format `{other}`, expected csv or json"
            ))),
        }
    }
}

/// How per-sequence ages are built from a grid value `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgingPattern {
    /// Every sequence aged by `t`.
    Uniform,
    /// Sequence `j` aged by `t + (j mod 2)`.
    Varying,
}

impl AgingPattern {
    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Varying => "varying",
        }
    }

    pub fn ages(self, num_sequences: usize, t: usize) -> Vec<usize> {
        (0..num_sequences)
            .map(|j| match self {
                Self::Uniform => t,
                Self::Varying => t + j % 2,
            })
            .collect()
    }
}

/// A numeric axis: an explicit list or a generated range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Linear { start: f64, stop: f64, step: f64 },
    Log { from: f64, to: f64, count: usize },
}

impl Axis {
    pub fn values(&self, field: &str) -> Result<Vec<f64>> {
        let bad = |msg: &str| CsdpError::Config(format!("field `grid.{field}`: {msg}"));
        let v = match self {
            Axis::List(v) => v.clone(),
            Axis::Linear { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Err(bad("needs step > 0 and stop >= start"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // rounded to kill accumulation noise such as 0.30000000000000004
                (0..=n)
                    .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
                    .collect()
            }
            Axis::Log { from, to, count } => {
                if !(*from > 0.0) || to < from || *count == 0 {
                    return Err(bad("needs 0 < from <= to and count >= 1"));
                }
                log_spaced(*from, *to, *count)
            }
        };
        if v.is_empty() {
            return Err(bad("must not be empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(bad("values must be finite"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lambda: Option<Axis>,
    pub ages: Option<Axis>,
    pub eps: Option<Axis>,
    pub caps: Option<Axis>,
    pub aging: Option<Vec<AgingPattern>>,
    pub mechanisms: Option<Vec<Mechanism>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    kind: String,
    model: Option<PathBuf>,
    flip: Option<f64>,
    query: Option<String>,
    k: Option<usize>,
    seed: Option<u64>,
    cap: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    leakage_kind: Option<LeakageKind>,
    samples: Option<usize>,
    #[serde(default)]
    grid: GridConfig,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: SweepKind,
    /// Model file, resolved against the config's directory. Without one the
    /// two-sequence binary setup with flip probability `flip` is used.
    pub model: Option<PathBuf>,
    pub flip: f64,
    pub query: String,
    /// Correlation degree; defaults to the number of sequences.
    pub k: Option<usize>,
    pub seed: u64,
    pub cap: usize,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub leakage_kind: LeakageKind,
    /// Monte-Carlo samples for simulated columns; zero disables them.
    pub samples: usize,
    pub grid: GridConfig,
    /// The text the config was parsed from.
    #[serde(skip)]
    pub source: String,
}

pub const BUNDLED: [(&str, &str); 7] = [
    ("fig3a", include_str!("../../configs/fig3a.toml")),
    ("fig3b", include_str!("../../configs/fig3b.toml")),
    ("fig3c", include_str!("../../configs/fig3c.toml")),
    ("fig4a", include_str!("../../configs/fig4a.toml")),
    ("fig4b", include_str!("../../configs/fig4b.toml")),
    ("fig4c", include_str!("../../configs/fig4c.toml")),
    ("fig5", include_str!("../../configs/fig5.toml")),
];

impl ExperimentConfig {
    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            CsdpError::Config(match field_of(&e) {
                Some(field) => format!("field `{field}`: {}", e.message()),
                None => e.message().to_string(),
            })
        })?;
        let kind: SweepKind = raw.kind.parse()?;
        let format = raw.format.as_deref().map_or(Ok(OutputFormat::Csv), str::parse)?;
        let name = raw.name.unwrap_or_else(|| kind.name().to_string());
        let cfg = ExperimentConfig {
            out: raw.out.map_or_else(|| PathBuf::from("results").join(&name), |p| base_dir.join(p)),
            name,
            kind,
            model: raw.model.map(|p| base_dir.join(p)),
            flip: raw.flip.unwrap_or(0.3),
            query: raw.query.unwrap_or_else(|| "mean".into()),
            k: raw.k,
            seed: raw.seed.unwrap_or(DEFAULT_ROOT_SEED),
            cap: raw.cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
            format,
            leakage_kind: raw.leakage_kind.unwrap_or(LeakageKind::LooseLinear),
            samples: raw.samples.unwrap_or(0),
            grid: raw.grid,
            source: text.to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CsdpError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            CsdpError::Config(m) => CsdpError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// One of the configs shipped with the crate, by name.
    pub fn bundled(name: &str) -> Result<Self> {
        let text = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<_> = BUNDLED.iter().map(|(n, _)| *n).collect();
                CsdpError::Config(format!(
                    "no bundled config `{name}`, expected one of {}",
                    names.join(", ")
                ))
            })?;
        Self::parse(text, Path::new("."))
    }

    /// Loads `spec` as a bundled name when one matches, else as a path.
    pub fn resolve(spec: &str) -> Result<Self> {
        if BUNDLED.iter().any(|(n, _)| *n == spec) {
            Self::bundled(spec)
        } else {
            Self::load(Path::new(spec))
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(CsdpError::Config(format!("field `{field}`: {msg}")));
        for axis in self.kind.required_axes() {
            let present = match *axis {
                "lambda" => self.grid.lambda.is_some(),
                "ages" => self.grid.ages.is_some(),
                "eps" => self.grid.eps.is_some(),
                "caps" => self.grid.caps.is_some(),
                _ => unreachable!(),
            };
            if !present {
                return bad(&format!("grid.{axis}"), format!("required by sweep kind `{}`", self.kind));
            }
        }
        if let Some(l) = self.lambdas()? {
            if let Some(x) = l.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return bad("grid.lambda", format!("{x} is outside [0, 1]"));
            }
        }
        self.ages()?;
        if let Some(e) = self.eps()? {
            if let Some(x) = e.iter().find(|x| **x <= 0.0) {
                return bad("grid.eps", format!("{x} is not a positive budget"));
            }
        }
        if let Some(c) = self.caps()? {
            if let Some(x) = c.iter().find(|x| **x <= 0.0) {
                return bad("grid.caps", format!("{x} is not a positive MSE cap"));
            }
        }
        if !(self.flip > 0.0 && self.flip < 1.0) {
            return bad("flip", format!("{} is outside (0, 1)", self.flip));
        }
        if self.cap == 0 {
            return bad("cap", "must be positive".into());
        }
        if self.kind == SweepKind::OracleValidate && self.samples == 0 {
            return bad("samples", "oracle-validate needs a positive sample count".into());
        }
        if self.samples > 0 && self.kind == SweepKind::UtilitySweep && self.samples < crate::utility::MIN_MSE_SAMPLES {
            return bad("samples", format!("at least {} required", crate::utility::MIN_MSE_SAMPLES));
        }
        if matches!(self.grid.aging.as_deref(), Some([])) {
            return bad("grid.aging", "must not be empty".into());
        }
        if matches!(self.grid.mechanisms.as_deref(), Some([])) {
            return bad("grid.mechanisms", "must not be empty".into());
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Result<Option<Vec<f64>>> {
        self.grid.lambda.as_ref().map(|a| a.values("lambda")).transpose()
    }

    pub fn eps(&self) -> Result<Option<Vec<f64>>> {
        self.grid.eps.as_ref().map(|a| a.values("eps")).transpose()
    }

    pub fn caps(&self) -> Result<Option<Vec<f64>>> {
        self.grid.caps.as_ref().map(|a| a.values("caps")).transpose()
    }

    /// Age grid values as non-negative integers.
    pub fn ages(&self) -> Result<Option<Vec<usize>>> {
        let Some(values) = self.grid.ages.as_ref().map(|a| a.values("ages")).transpose()? else {
            return Ok(None);
        };
        values
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CsdpError::Config(format!("field `grid.ages`: {v} is not a non-negative integer")))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn aging(&self) -> Vec<AgingPattern> {
        self.grid.aging.clone().unwrap_or_else(|| vec![AgingPattern::Uniform])
    }

    pub fn mechanisms(&self) -> Vec<Mechanism> {
        self.grid.mechanisms.clone().unwrap_or_else(|| Mechanism::ALL.to_vec())
    }
}

fn field_of(e: &toml::de::Error) -> Option<String> {
    let msg = e.message();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        return rest.split('`').next().map(str::to_string);
    }
    if let Some(rest) = msg.strip_prefix("missing field `") {
        return rest.split('`').next().map(str::to_string);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_config_parses() {
        for (name, _) in BUNDLED {
            let cfg = ExperimentConfig::bundled(name).unwrap();
            assert_eq!(cfg.name, name);
        }
    }

    #[test]
    fn unknown_kind_names_the_field() {
        let err = ExperimentConfig::parse("kind = \"heatmap\"\n", Path::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("field `kind`"), "{msg}");
        assert!(msg.contains("heatmap"), "{msg}");
    }

    #[test]
    fn missing_axis_is_reported() {
        let err = ExperimentConfig::parse("kind = \"frontier\"\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("grid.caps"));
    }

    #[test]
    fn unknown_key_names_the_field() {
        let err = ExperimentConfig::parse("kind = \"frontier\"\ncolour = 1\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("field `colour`"), "{err}");
    }

    #[test]
    fn linear_axis_is_clean() {
        let a = Axis::Linear { start: 0.0, stop: 1.0, step: 0.1 };
        let v = a.values("lambda").unwrap();
        assert_eq!(v.len(), 11);
        assert_eq!(v[3], 0.3);
        assert_eq!(v[10], 1.0);
    }

    #[test]
    fn fractional_age_rejected() {
        let text = "kind = \"leakage-vs-age\"\n[grid]\nages = [1.5]\neps = [1.0]\n";
        assert!(ExperimentConfig::parse(text, Path::new(".")).is_err());
    }

    #[test]
    fn varying_pattern_offsets_odd_sequences() {
        assert_eq!(AgingPattern::Varying.ages(3, 2), vec![2, 3, 2]);
        assert_eq!(AgingPattern::Uniform.ages(2, 4), vec![4, 4]);
    }
}
