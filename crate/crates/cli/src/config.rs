//! Run configuration: a JSON document, overridable from the command line.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use chiralflow::experiments::DisorderKind;
use chiralflow::hilbert::Statistics;
use chiralflow::models::{asgf, chiral_n_node, ladder, sgf_ring, GaugeChoice, NetworkSpec};

/// Angle in radians. Parsed from numbers, `"pi"`, `"0.5pi"`, `"-1.5pi"` or `"pi/2"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl std::str::FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let bad = || format!("malformed angle {s:?}; expected e.g. 1.5pi, pi/2 or 0.7");
        let number = |x: &str| -> Result<f64, String> {
            match x {
                "" | "+" => Ok(1.0),
                "-" => Ok(-1.0),
                _ => x.parse::<f64>().map_err(|_| bad()),
            }
        };
        let value = if let Some(i) = t.find("pi") {
            let (head, tail) = (&t[..i], &t[i + 2..]);
            let scale = number(head.trim_end_matches('*'))?;
            let divisor = match tail.strip_prefix('/') {
                Some(d) => d.parse::<f64>().map_err(|_| bad())?,
                None if tail.is_empty() => 1.0,
                None => return Err(bad()),
            };
            scale * PI / divisor
        } else {
            t.parse::<f64>().map_err(|_| bad())?
        };
        if !value.is_finite() {
            return Err(bad());
        }
        Ok(Angle(value))
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Angle(x)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    #[default]
    Symmetric,
    Landau,
}

/// Model selector. `flux` is the total phase around the ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Sgf {
        n: usize,
        flux: Angle,
        #[serde(default)]
        gauge: Gauge,
    },
    Asgf {
        n: usize,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flux: Option<Angle>,
    },
    Chiral {
        n: usize,
    },
    Ladder {
        copies: usize,
        #[serde(default = "default_profile")]
        profile: Vec<f64>,
    },
    Custom {
        spec: NetworkSpec,
    },
}

fn default_profile() -> Vec<f64> {
    vec![2.0]
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Sgf { n: 3, flux: Angle(1.5 * PI), gauge: Gauge::Symmetric }
    }
}

impl ModelConfig {
    pub fn build(&self) -> chiralflow::Result<NetworkSpec> {
        match self {
            ModelConfig::Sgf { n, flux, gauge } => {
                let g = match gauge {
                    Gauge::Symmetric => GaugeChoice::Symmetric,
                    Gauge::Landau => GaugeChoice::Landau,
                };
                sgf_ring(*n, flux.0, g)
            }
            ModelConfig::Asgf { n, beta, flux } => {
                let per_link = flux.map_or(PI / 2.0, |f| f.0 / *n as f64);
                asgf(*n, *beta, per_link)
            }
            ModelConfig::Chiral { n } => chiral_n_node(*n),
            ModelConfig::Ladder { copies, profile } => ladder(*copies, profile),
            ModelConfig::Custom { spec } => Ok(spec.clone()),
        }
    }
}

/// Starting state: one excitation on a 1-based node, or a full occupation list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Node(usize),
    Occupation(Vec<u32>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Node(1)
    }
}

impl InitialState {
    pub fn excitations(&self) -> usize {
        match self {
            InitialState::Node(_) => 1,
            InitialState::Occupation(o) => o.iter().map(|&k| k as usize).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    /// Defaults to one fundamental period of the spectrum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    1001
}

impl Default for TimeWindow {
    fn default() -> Self {
        TimeWindow { t_max: None, points: default_points() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudyConfig {
    Disorder {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_amplitudes")]
        amplitudes: Vec<f64>,
        #[serde(default = "default_disorder_kinds")]
        kinds: Vec<DisorderKind>,
    },
    Ladder {
        #[serde(default = "default_ladder_copies")]
        copies: Vec<usize>,
    },
    Optimize {
        #[serde(default = "default_optimize_copies")]
        copies: Vec<usize>,
        #[serde(default = "default_budget")]
        budget_per_parameter: usize,
    },
    Bell {
        #[serde(default = "default_bell_window")]
        t_max: f64,
        #[serde(default = "default_bell_points")]
        points: usize,
    },
    Floquet {
        #[serde(default = "default_ratios")]
        ratios: Vec<f64>,
    },
}

fn default_samples() -> usize {
    200
}

fn default_amplitudes() -> Vec<f64> {
    (0..=6).map(|i| 0.05 * i as f64).collect()
}

fn default_disorder_kinds() -> Vec<DisorderKind> {
    vec![DisorderKind::Frequency, DisorderKind::HoppingStrength, DisorderKind::HoppingPhase]
}

fn default_ladder_copies() -> Vec<usize> {
    (1..=8).collect()
}

fn default_optimize_copies() -> Vec<usize> {
    (2..=6).collect()
}

fn default_budget() -> usize {
    100
}

fn default_bell_window() -> f64 {
    3.7
}

fn default_bell_points() -> usize {
    2000
}

fn default_ratios() -> Vec<f64> {
    vec![5.0, 10.0, 20.0, 40.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StudyKind {
    Disorder,
    Ladder,
    Optimize,
    Bell,
    Floquet,
}

impl StudyConfig {
    pub fn defaults(kind: StudyKind) -> Self {
        match kind {
            StudyKind::Disorder => StudyConfig::Disorder {
                samples: default_samples(),
                amplitudes: default_amplitudes(),
                kinds: default_disorder_kinds(),
            },
            StudyKind::Ladder => StudyConfig::Ladder { copies: default_ladder_copies() },
            StudyKind::Optimize => StudyConfig::Optimize {
                copies: default_optimize_copies(),
                budget_per_parameter: default_budget(),
            },
            StudyKind::Bell => StudyConfig::Bell { t_max: default_bell_window(), points: default_bell_points() },
            StudyKind::Floquet => StudyConfig::Floquet { ratios: default_ratios() },
        }
    }

    pub fn kind(&self) -> StudyKind {
        match self {
            StudyConfig::Disorder { .. } => StudyKind::Disorder,
            StudyConfig::Ladder { .. } => StudyKind::Ladder,
            StudyConfig::Optimize { .. } => StudyKind::Optimize,
            StudyConfig::Bell { .. } => StudyKind::Bell,
            StudyConfig::Floquet { .. } => StudyKind::Floquet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    /// Overrides the model's particle statistics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub time: TimeWindow,
    #[serde(default)]
    pub output: Outputs,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
}

fn default_seed() -> u64 {
    42
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            statistics: None,
            initial: InitialState::default(),
            time: TimeWindow::default(),
            output: Outputs::default(),
            seed: default_seed(),
            study: None,
        }
    }
}

impl RunConfig {
    /// Parses a config document; errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config line {}, column {}: {e}", e.line(), e.column()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn network(&self) -> chiralflow::Result<NetworkSpec> {
        let spec = self.model.build()?;
        Ok(match self.statistics {
            Some(s) => spec.with_statistics(s),
            None => spec,
        })
    }
}

/// Model-related command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct ModelOverrides {
    pub model: Option<ModelName>,
    pub n: Option<usize>,
    pub flux: Option<Angle>,
    pub beta: Option<f64>,
    pub profile: Option<Vec<f64>>,
    pub gauge: Option<Gauge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelName {
    Sgf,
    Asgf,
    Chiral,
    Ladder,
}

impl ModelOverrides {
    fn is_empty(&self) -> bool {
        self.model.is_none()
            && self.n.is_none()
            && self.flux.is_none()
            && self.beta.is_none()
            && self.profile.is_none()
            && self.gauge.is_none()
    }

    /// Rebuilds `base` with the given fields replaced; unset fields keep their values
    /// when the model kind is unchanged and fall back to defaults otherwise.
    pub fn apply(&self, base: &ModelConfig) -> Result<ModelConfig, String> {
        if self.is_empty() {
            return Ok(base.clone());
        }
        let current = match base {
            ModelConfig::Sgf { .. } => Some(ModelName::Sgf),
            ModelConfig::Asgf { .. } => Some(ModelName::Asgf),
            ModelConfig::Chiral { .. } => Some(ModelName::Chiral),
            ModelConfig::Ladder { .. } => Some(ModelName::Ladder),
            ModelConfig::Custom { .. } => None,
        };
        let name = match (self.model, current) {
            (Some(m), _) => m,
            (None, Some(m)) => m,
            (None, None) => return Err("model flags need --model when the config holds a custom spec".into()),
        };
        let same = Some(name) == current;
        let unused = |flag: &str, set: bool| {
            if set {
                Err(format!("--{flag} does not apply to model {name:?}").to_lowercase())
            } else {
                Ok(())
            }
        };
        Ok(match name {
            ModelName::Sgf => {
                unused("beta", self.beta.is_some())?;
                unused("profile", self.profile.is_some())?;
                let (n0, f0, g0) = match base {
                    ModelConfig::Sgf { n, flux, gauge } if same => (*n, *flux, *gauge),
                    _ => (3, Angle(1.5 * PI), Gauge::Symmetric),
                };
                let n = self.n.unwrap_or(n0);
                let flux = self.flux.unwrap_or(if self.n.is_some() && !same { Angle(n as f64 * PI / 2.0) } else { f0 });
                ModelConfig::Sgf { n, flux, gauge: self.gauge.unwrap_or(g0) }
            }
            ModelName::Asgf => {
                unused("profile", self.profile.is_some())?;
                unused("gauge", self.gauge.is_some())?;
                let (n0, b0, f0) = match base {
                    ModelConfig::Asgf { n, beta, flux } if same => (*n, *beta, *flux),
                    _ => (4, 2.0, None),
                };
                ModelConfig::Asgf {
                    n: self.n.unwrap_or(n0),
                    beta: self.beta.unwrap_or(b0),
                    flux: self.flux.or(f0),
                }
            }
            ModelName::Chiral => {
                for (flag, set) in [
                    ("flux", self.flux.is_some()),
                    ("beta", self.beta.is_some()),
                    ("profile", self.profile.is_some()),
                    ("gauge", self.gauge.is_some()),
                ] {
                    unused(flag, set)?;
                }
                let n0 = match base {
                    ModelConfig::Chiral { n } if same => *n,
                    _ => 5,
                };
                ModelConfig::Chiral { n: self.n.unwrap_or(n0) }
            }
            ModelName::Ladder => {
                for (flag, set) in [
                    ("flux", self.flux.is_some()),
                    ("gauge", self.gauge.is_some()),
                ] {
                    unused(flag, set)?;
                }
                let (c0, p0) = match base {
                    ModelConfig::Ladder { copies, profile } if same => (*copies, profile.clone()),
                    _ => (3, default_profile()),
                };
                let profile = match (&self.profile, self.beta) {
                    (Some(_), Some(_)) => return Err("give either --profile or --beta for a ladder".into()),
                    (Some(p), None) => p.clone(),
                    (None, Some(b)) => vec![b],
                    (None, None) => p0,
                };
                ModelConfig::Ladder { copies: self.n.unwrap_or(c0), profile }
            }
        })
    }
}

/// Parses a comma-separated list of couplings.
pub fn parse_profile(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("malformed profile entry {x:?}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        let a = |s: &str| s.parse::<Angle>().map(|a| a.0);
        assert_eq!(a("pi"), Ok(PI));
        assert_eq!(a("1.5pi"), Ok(1.5 * PI));
        assert_eq!(a("-0.5pi"), Ok(-0.5 * PI));
        assert_eq!(a("-pi"), Ok(-PI));
        assert_eq!(a("pi/2"), Ok(PI / 2.0));
        assert_eq!(a("3pi/8"), Ok(3.0 * PI / 8.0));
        assert_eq!(a("0.25"), Ok(0.25));
        for bad in ["", "1.5p", "pix", "pi/", "1..5pi", "nan", "inf"] {
            assert!(a(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{
            "model": {"kind": "asgf", "n": 4, "beta": 2, "flux": "2pi"},
            "statistics": "spin",
            "initial": {"occupation": [1, 1, 0, 0, 0]},
            "time": {"t_max": 3.5, "points": 11},
            "output": {"csv": "out.csv"},
            "seed": 7,
            "study": {"kind": "disorder", "samples": 5}
        }"#;
        let a = RunConfig::from_json(text).unwrap();
        let b = RunConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.initial.excitations(), 2);
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let e = RunConfig::from_json("{\n \"model\": {\"kind\": \"sgf\", \"n\": 3, \"flux\": 1, \"beta\": 2}\n}").unwrap_err();
        assert!(e.contains("line ") && e.contains("beta"), "{e}");
        assert!(RunConfig::from_json(r#"{"seeds": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"model": {"kind": "sgf", "n": 3, "flux": "1.5q"}}"#).is_err());
    }

    #[test]
    fn overrides() {
        let base = ModelConfig::default();
        let o = ModelOverrides { model: Some(ModelName::Asgf), beta: Some(3.0), ..Default::default() };
        assert_eq!(o.apply(&base).unwrap(), ModelConfig::Asgf { n: 4, beta: 3.0, flux: None });
        let o = ModelOverrides { n: Some(5), ..Default::default() };
        assert_eq!(
            o.apply(&base).unwrap(),
            ModelConfig::Sgf { n: 5, flux: Angle(1.5 * PI), gauge: Gauge::Symmetric }
        );
        let o = ModelOverrides { model: Some(ModelName::Sgf), n: Some(5), ..Default::default() };
        let ladder = ModelConfig::Ladder { copies: 2, profile: vec![2.0] };
        assert_eq!(
            o.apply(&ladder).unwrap(),
            ModelConfig::Sgf { n: 5, flux: Angle(2.5 * PI), gauge: Gauge::Symmetric }
        );
        let o = ModelOverrides { beta: Some(1.0), ..Default::default() };
        assert!(o.apply(&base).is_err());
        assert_eq!(parse_profile("2, 3.5").unwrap(), vec![2.0, 3.5]);
        assert!(parse_profile("2,x").is_err());
    }
}
