//! Run and sweep configuration files (TOML) and their validation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::datum::InitialData;
use crate::diagnostics::{UtProxy, DEFAULT_REL_TOL};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::groove::GrooveSpec;
use crate::integrator::IntegratorConfig;

/// Cell counts in canonical order: periodic axis, width, truncated half line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: [usize; 3],
}

fn default_stride() -> u64 {
    10
}
fn default_series() -> String {
    "series.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}
fn default_checkpoint() -> String {
    "checkpoint.ksg".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Steps between series samples.
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default = "default_series")]
    pub series: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    /// Steps between checkpoints; 0 disables them.
    #[serde(default)]
    pub checkpoint_stride: u64,
    #[serde(default = "default_checkpoint")]
    pub checkpoint: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            stride: default_stride(),
            series: default_series(),
            summary: default_summary(),
            checkpoint_stride: 0,
            checkpoint: default_checkpoint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    EnergyInequality,
    DecayBound,
    UtDecay,
    DecayFit,
}

fn default_checks() -> Vec<CheckKind> {
    vec![
        CheckKind::EnergyInequality,
        CheckKind::DecayBound,
        CheckKind::UtDecay,
        CheckKind::DecayFit,
    ]
}
fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSection {
    #[serde(default = "default_checks")]
    pub enabled: Vec<CheckKind>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Decay-fit window; defaults to `[0.1·t_end, t_end]`.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default)]
    pub ut_proxy: UtProxy,
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            enabled: default_checks(),
            rel_tol: default_rel_tol(),
            fit_window: None,
            ut_proxy: UtProxy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub groove: GrooveSpec,
    pub grid: GridSection,
    #[serde(default)]
    pub initial: InitialData,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub checks: ChecksSection,
}

impl Default for RunConfig {
    /// The reference experiment: `B = 2`, `ε = 10⁻²`, a 32×48×48 grid on
    /// an 8 × 2 × 8 box, `dt = 10⁻³` up to `t = 2`.
    fn default() -> Self {
        RunConfig {
            groove: GrooveSpec::new(2.0, 8.0, 8.0).expect("valid default groove"),
            grid: GridSection { n: [32, 48, 48] },
            initial: InitialData::default(),
            integrator: IntegratorConfig::new(1e-3, 2.0),
            output: OutputSection::default(),
            checks: ChecksSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(s).map_err(|e| Error::Config(vec![e.message().to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if let Err(e) = self.groove.validate() {
            v.push(e.to_string());
        } else if let Err(e) = Grid::groove(&self.groove, self.grid.n) {
            v.push(e.to_string());
        }
        v.extend(self.initial.violations());
        v.extend(self.integrator.violations());
        if self.output.stride == 0 {
            v.push("output.stride must be at least 1".into());
        }
        if !(self.checks.rel_tol.is_finite() && self.checks.rel_tol >= 0.0) {
            v.push(format!(
                "checks.rel_tol must be nonnegative, got {}",
                self.checks.rel_tol
            ));
        }
        if let Some([lo, hi]) = self.checks.fit_window {
            if !(lo >= 0.0 && lo < hi && hi <= self.integrator.t_end) {
                v.push(format!(
                    "checks.fit_window [{lo}, {hi}] must satisfy 0 ≤ lo < hi ≤ t_end"
                ));
            }
        }
        v
    }

    /// Collects every violated invariant, not just the first.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::groove(&self.groove, self.grid.n)
    }

    pub fn fit_window(&self) -> [f64; 2] {
        self.checks
            .fit_window
            .unwrap_or([0.1 * self.integrator.t_end, self.integrator.t_end])
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configuration serializes");
    hex::encode(Sha256::digest(&canonical))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Values of one sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Values {
        values: Vec<f64>,
    },
    Range {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            AxisSpec::Values { ref values } => values.clone(),
            AxisSpec::Range {
                min,
                max,
                count,
                spacing,
            } => {
                if count == 1 {
                    return vec![min];
                }
                (0..count)
                    .map(|i| {
                        let s = i as f64 / (count - 1) as f64;
                        match spacing {
                            Spacing::Linear => min + s * (max - min),
                            Spacing::Log => (min.ln() + s * (max.ln() - min.ln())).exp(),
                        }
                    })
                    .collect()
            }
        }
    }

    fn violations(&self, name: &str) -> Vec<String> {
        let mut v = Vec::new();
        match *self {
            AxisSpec::Values { ref values } => {
                if values.is_empty() {
                    v.push(format!("sweep.{name} has no values"));
                }
                if values.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    v.push(format!("sweep.{name} values must be positive and finite"));
                }
            }
            AxisSpec::Range {
                min,
                max,
                count,
                spacing: _,
            } => {
                if count == 0 {
                    v.push(format!("sweep.{name}.count must be at least 1"));
                }
                if !(min.is_finite() && max.is_finite() && min > 0.0 && min <= max) {
                    v.push(format!(
                        "sweep.{name} needs 0 < min ≤ max, got [{min}, {max}]"
                    ));
                }
            }
        }
        v
    }
}

fn default_parallelism() -> usize {
    4
}
fn default_sweep_output() -> String {
    "sweep.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub width: AxisSpec,
    pub epsilon: AxisSpec,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_sweep_output")]
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep: SweepSection,
    /// Per-cell run configuration; width and amplitude are overridden.
    pub template: RunConfig,
}

impl SweepConfig {
    /// A 6×6 map over `B ∈ [1, 3.5]` and log-spaced `ε ∈ [10⁻³, 1]` on a
    /// coarse 16×24×24 template run to `t = 0.5`.
    pub fn threshold_map() -> Self {
        let mut template = RunConfig::default();
        template.grid.n = [16, 24, 24];
        template.integrator.t_end = 0.5;
        template.checks.enabled = vec![CheckKind::DecayFit];
        SweepConfig {
            sweep: SweepSection {
                width: AxisSpec::Range {
                    min: 1.0,
                    max: 3.5,
                    count: 6,
                    spacing: Spacing::Linear,
                },
                epsilon: AxisSpec::Range {
                    min: 1e-3,
                    max: 1.0,
                    count: 6,
                    spacing: Spacing::Log,
                },
                parallelism: default_parallelism(),
                output: default_sweep_output(),
            },
            template,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig =
            toml::from_str(s).map_err(|e| Error::Config(vec![e.message().to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        SweepConfig::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.sweep.width.violations("width");
        v.extend(self.sweep.epsilon.violations("epsilon"));
        if self.sweep.parallelism == 0 {
            v.push("sweep.parallelism must be at least 1".into());
        }
        // The template's own width and amplitude are replaced per cell, so
        // its other invariants are checked with the first cell's values.
        let mut t = self.template.clone();
        if let (Some(&b), Some(&e)) = (
            self.sweep.width.values().first(),
            self.sweep.epsilon.values().first(),
        ) {
            t.groove.width = b;
            t.initial.amplitude = e;
        }
        v.extend(t.violations().into_iter().map(|s| format!("template: {s}")));
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Cells in row-major order, width outermost.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        let eps = self.sweep.epsilon.values();
        self.sweep
            .width
            .values()
            .into_iter()
            .flat_map(|b| eps.iter().map(move |&e| (b, e)))
            .collect()
    }

    pub fn cell_config(&self, width: f64, epsilon: f64) -> RunConfig {
        let mut c = self.template.clone();
        c.groove.width = width;
        c.initial.amplitude = epsilon;
        c
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let c = RunConfig::default();
        let text = c.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_toml_str(
            r#"
            [groove]
            width = 2.0
            trunc_x1 = 8.0
            trunc_x3 = 8.0
            [grid]
            n = [32, 48, 48]
            [integrator]
            dt = 1e-3
            t_end = 2.0
            "#,
        )
        .unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn hash_changes_with_any_field() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.initial.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation_lists_every_violation() {
        let mut c = RunConfig::default();
        c.grid.n = [2, 48, 48];
        c.integrator.dt = 5.0;
        c.initial.support_fraction = 0.99;
        c.output.stride = 0;
        match c.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = RunConfig::default().to_toml_string();
        text.push_str("\n[extra]\nkey = 1\n");
        assert!(matches!(RunConfig::from_toml_str(&text), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_toml_str("not toml ]["),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn threshold_map_axes() {
        let s = SweepConfig::threshold_map();
        assert_eq!(s.sweep.width.values(), vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5]);
        let e = s.sweep.epsilon.values();
        assert_eq!(e.len(), 6);
        assert!((e[0] - 1e-3).abs() < 1e-15 && (e[5] - 1.0).abs() < 1e-12);
        assert_eq!(s.cells().len(), 36);
        let back = SweepConfig::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn explicit_axis_values() {
        let s = SweepConfig::from_toml_str(&format!(
            "[sweep]\nwidth = {{ values = [2.0] }}\nepsilon = {{ values = [0.01, 0.02] }}\n\n{}",
            RunConfig::default()
                .to_toml_string()
                .lines()
                .map(|l| if l.starts_with('[') {
                    format!("[template.{}", &l[1..])
                } else {
                    l.to_string()
                })
                .collect::<Vec<_>>()
                .join("\n")
        ))
        .unwrap();
        assert_eq!(s.cells(), vec![(2.0, 0.01), (2.0, 0.02)]);
    }
}
