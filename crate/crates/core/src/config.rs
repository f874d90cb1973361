//! Run configuration in sectioned `key = value` (TOML) form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AnnulusSpec, BoundaryTraces, FieldProfile};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("cannot serialize configuration: {0}")]
    Emit(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSection {
    pub r1: f64,
    pub r2: f64,
    pub delta0: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nr: usize,
    pub np: usize,
    pub p_max: f64,
    /// Continue with a warning when `p_max` is below the provable bound.
    #[serde(default)]
    pub allow_undersized_box: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_end: f64,
    /// `dt / dr`; anything but 1 needs the unit-CFL override.
    #[serde(default = "one")]
    pub cfl: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    #[default]
    Ring,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub kind: InitialKind,
    #[serde(default)]
    pub center_r: f64,
    #[serde(default)]
    pub width_r: f64,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub m0: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub modulation_modes: usize,
    #[serde(default)]
    pub modulation_strength: f64,
    #[serde(default)]
    pub etheta0: FieldProfile,
    #[serde(default)]
    pub b0: FieldProfile,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialChoice {
    #[default]
    None,
    ExplicitCsc,
    Tabulated,
}

fn default_floor() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub kind: PotentialChoice,
    #[serde(default)]
    pub table_r: Vec<f64>,
    #[serde(default)]
    pub table_psi: Vec<f64>,
    #[serde(default = "default_floor")]
    pub divergence_floor: f64,
    /// Evaluate the constants with the end-time ceiling throughout.
    #[serde(default = "yes")]
    pub freeze_constants: bool,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            kind: PotentialChoice::None,
            table_r: Vec::new(),
            table_psi: Vec::new(),
            divergence_floor: default_floor(),
            freeze_constants: true,
        }
    }
}

fn default_dir() -> String {
    "out".to_string()
}

fn default_cadence() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default = "yes")]
    pub fields: bool,
    #[serde(default = "yes")]
    pub final_snapshot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            cadence: default_cadence(),
            fields: true,
            final_snapshot: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleChoice {
    #[default]
    None,
    FreeStreaming,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSection {
    #[serde(default = "yes")]
    pub energy: bool,
    #[serde(default = "yes")]
    pub bounds: bool,
    #[serde(default = "yes")]
    pub recursion: bool,
    #[serde(default)]
    pub oracle: OracleChoice,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            energy: true,
            bounds: true,
            recursion: true,
            oracle: OracleChoice::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Self-consistent fields; off means free streaming.
    #[serde(default = "yes")]
    pub fields: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { fields: true, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub annulus: AnnulusSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub boundary: BoundaryTraces,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub run: RunSection,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates, reporting every semantic violation.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(v))
    }
}

/// `emit(parse(text))`.
pub fn normalize(text: &str) -> Result<String, ConfigError> {
    parse_config(text)?.to_toml()
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Emit(e.to_string()))
    }

    pub fn annulus_spec(&self) -> AnnulusSpec {
        let a = &self.annulus;
        AnnulusSpec {
            r1: a.r1,
            r2: a.r2,
            delta0: a.delta0,
            delta: a.delta,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.annulus_spec().violations();
        let g = &self.grid;
        if g.nr < 8 {
            v.push(format!("grid.nr = {} must be at least 8", g.nr));
        }
        if g.np < 8 || g.np % 2 == 0 {
            v.push(format!("grid.np = {} must be odd and at least 8", g.np));
        }
        if !(g.p_max > 0.0 && g.p_max.is_finite()) {
            v.push(format!("grid.p_max = {} must be positive", g.p_max));
        }
        let t = &self.time;
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            v.push(format!("time.t_end = {} must be nonnegative", t.t_end));
        }
        if !(t.cfl > 0.0 && t.cfl <= 1.0) {
            v.push(format!("time.cfl = {} must lie in (0, 1]", t.cfl));
        }
        let i = &self.initial;
        if !i.lambda.is_finite() {
            v.push("initial.lambda must be finite".into());
        }
        if i.kind == InitialKind::Ring {
            if !(i.width_r > 0.0) {
                v.push(format!("initial.width_r = {} must be positive", i.width_r));
            }
            if !(i.temperature > 0.0) {
                v.push(format!("initial.temperature = {} must be positive", i.temperature));
            }
            if !(i.amplitude >= 0.0) {
                v.push(format!("initial.amplitude = {} must be nonnegative", i.amplitude));
            }
            if !(i.m0 > 0.0) {
                v.push(format!("initial.m0 = {} must be positive", i.m0));
            } else if i.m0 >= g.p_max {
                v.push(format!("initial.m0 = {} must be below grid.p_max = {}", i.m0, g.p_max));
            }
            let (lo, hi) = (self.annulus.r1 + self.annulus.delta0, self.annulus.r2 - self.annulus.delta0);
            let (a, b) = (i.center_r - 3.0 * i.width_r, i.center_r + 3.0 * i.width_r);
            if a < lo || b > hi {
                v.push(format!(
                    "initial ring support [{a}, {b}] must lie within [r1 + delta0, r2 - delta0] = [{lo}, {hi}]"
                ));
            }
            if !(0.0..1.0).contains(&i.modulation_strength) {
                v.push(format!(
                    "initial.modulation_strength = {} must lie in [0, 1)",
                    i.modulation_strength
                ));
            }
        }
        v.extend(self.boundary.inner.violations("boundary.inner"));
        v.extend(self.boundary.outer.violations("boundary.outer"));
        let p = &self.potential;
        if p.kind == PotentialChoice::Tabulated {
            if p.table_r.len() < 3 || p.table_r.len() != p.table_psi.len() {
                v.push("potential.table_r and potential.table_psi need equal lengths of at least 3".into());
            }
        } else if !p.table_r.is_empty() || !p.table_psi.is_empty() {
            v.push("potential tables are only allowed with kind = \"tabulated\"".into());
        }
        if self.output.cadence == 0 {
            v.push("output.cadence must be at least 1".into());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[annulus]
r1 = 1.0
r2 = 3.0
delta0 = 0.5
delta = 0.25

[grid]
nr = 32
np = 17
p_max = 1.2

[time]
t_end = 1.0

[initial]
center_r = 2.0
width_r = 0.1
temperature = 0.3
amplitude = 1.0
m0 = 0.8
"#;

    #[test]
    fn minimal_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.nr, 32);
        assert_eq!(c.grid.np, 17);
        assert_eq!(c.time.cfl, 1.0);
        assert_eq!(c.output.cadence, 1);
        assert_eq!(c.potential.kind, PotentialChoice::None);
        assert!(c.run.fields);
    }

    #[test]
    fn wide_margin_rejected() {
        let text = MINIMAL.replace("delta0 = 0.5", "delta0 = 1.0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("delta0"), "{err}");
        assert!(err.contains("(r2 - r1)/2"), "{err}");
    }

    #[test]
    fn unknown_key_named() {
        let text = MINIMAL.replace("nr = 32", "nr = 32\nbogus = 3");
        match parse_config(&text).unwrap_err() {
            ConfigError::Syntax { line, message } => {
                assert!(message.contains("bogus"), "{message}");
                assert!(line >= 9, "{line}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn all_violations_reported() {
        let text = MINIMAL.replace("nr = 32", "nr = 4").replace("np = 17", "np = 16");
        match parse_config(&text).unwrap_err() {
            ConfigError::Invalid(v) => assert_eq!(v.len(), 2, "{v:?}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn emit_parse_is_stable() {
        let once = normalize(MINIMAL).unwrap();
        let twice = normalize(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(parse_config(&once).unwrap(), parse_config(MINIMAL).unwrap());
    }

    #[test]
    fn traces_parse() {
        let text = format!(
            "{MINIMAL}\n[boundary.inner]\nkind = \"sinusoid\"\namplitude = 0.1\nomega = 2.0\n\n[boundary.outer]\nkind = \"tabulated\"\ntimes = [0.0, 1.0]\nvalues = [0.0, 0.2]\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.boundary.sup_norm(), 0.2);
        assert_eq!(normalize(&normalize(&text).unwrap()).unwrap(), normalize(&text).unwrap());
    }
}
