//! Scenario configuration. A config file names a scenario `kind`; every
//! field it leaves out is taken from that kind's template, so a one-line
//! file `kind = "surgery_sweep"` is a complete config.

use relspec_core::geometry::{BumpSpec, EndModel, FunnelFactor, SurfaceSpec, Truncation};
use relspec_core::spectral::log_times;
use relspec_core::zeta::{FitOptions, ZetaOptions};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScenarioKind {
    Validate,
    SurgerySweep,
    IsospectralCheck,
    DecayCheck,
    ContinuityCheck,
    FunnelConformalCheck,
    OffdiagCheck,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::Validate,
        ScenarioKind::SurgerySweep,
        ScenarioKind::IsospectralCheck,
        ScenarioKind::DecayCheck,
        ScenarioKind::ContinuityCheck,
        ScenarioKind::FunnelConformalCheck,
        ScenarioKind::OffdiagCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Validate => "validate",
            ScenarioKind::SurgerySweep => "surgery_sweep",
            ScenarioKind::IsospectralCheck => "isospectral_check",
            ScenarioKind::DecayCheck => "decay_check",
            ScenarioKind::ContinuityCheck => "continuity_check",
            ScenarioKind::FunnelConformalCheck => "funnel_conformal_check",
            ScenarioKind::OffdiagCheck => "offdiag_check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn log(start: f64, end: f64, count: usize) -> Self {
        TimeGrid { start, end, count, spacing: Spacing::Log }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => log_times(self.start, self.end, self.count),
            Spacing::Linear => {
                let n = self.count - 1;
                (0..=n).map(|i| self.start + (self.end - self.start) * i as f64 / n as f64).collect()
            }
        }
    }

    fn validate(&self, what: &str) -> Result<(), ConfigError> {
        if !(self.start > 0.0 && self.end > self.start && self.count >= 2) {
            return Err(ConfigError::Invalid(format!("{what}: need 0 < start < end and count >= 2")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    /// Cells of the adapted s-grid (N).
    pub cells: usize,
    /// Floor of the adapted grid density `√w + kappa`.
    pub kappa: f64,
    pub lambda_cut: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSettings {
    /// Number of subtracted terms K.
    pub terms: usize,
    pub window: (f64, f64),
    pub residual_threshold: f64,
}

impl FitSettings {
    pub fn options(&self) -> FitOptions {
        FitOptions { window: self.window, residual_threshold: self.residual_threshold }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    pub enabled: bool,
    /// Finest 2D grid; the coarse partner halves both counts.
    pub s_cells: usize,
    pub theta_nodes: usize,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffdiagSettings {
    /// Region `U` in the s-coordinate.
    pub region: (f64, f64),
    pub y_s: f64,
    pub y2_s: f64,
    pub times: TimeGrid,
    /// The check compares N = `grid.cells` with `refine · N`.
    pub refine: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub flat_relative: f64,
    pub flat_count: usize,
    pub oracle_relative: f64,
    pub oracle_exponent: f64,
    pub oracle_residual: f64,
    pub heat_invariant: f64,
    pub area: f64,
    pub log_det: f64,
    pub monotone: f64,
    /// Pinned Dsup values for the non-zero ε of a continuity check, in order.
    pub dsup_baseline: Vec<f64>,
    pub dsup_baseline_relative: f64,
    pub offdiag_change: f64,
    /// Relative slack on the decay bound (round-off at the fitting time).
    pub decay_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            flat_relative: 1e-5,
            flat_count: 12,
            oracle_relative: 1e-3,
            oracle_exponent: 1.8,
            oracle_residual: 1e-8,
            heat_invariant: 5e-3,
            area: 1e-3,
            log_det: 1e-2,
            monotone: 1e-4,
            dsup_baseline: Vec::new(),
            dsup_baseline_relative: 1e-6,
            offdiag_change: 0.05,
            decay_slack: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Seed for sampled test points (the off-diagonal angle, Krylov start blocks).
    pub seed: u64,
    pub surface_a: SurfaceSpec,
    pub surface_b: SurfaceSpec,
    pub truncation: Truncation,
    pub grid: GridSettings,
    /// Surgery parameters; the first entry is the reference (must be 0 for
    /// scenarios comparing against ε = 0).
    pub epsilons: Vec<f64>,
    pub times: TimeGrid,
    pub fit: FitSettings,
    pub zeta: ZetaOptions,
    pub oracle: OracleSettings,
    pub offdiag: OffdiagSettings,
    pub funnel_factors: Vec<FunnelFactor>,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

/// Bump used by the cusp+funnel scenarios.
pub fn default_bump() -> BumpSpec {
    BumpSpec { center: 2.5, radius: 1.2, amplitude: 0.2 }
}

/// Compact boundary + cap family used by the decay check: its uniform gap
/// (≈ 0.22) puts t = 10 inside the exponential regime.
pub fn compact_family() -> SurfaceSpec {
    SurfaceSpec {
        left: EndModel::DirichletBoundary { collar_exponent: -1.0, collar_length: 0.5 },
        right: EndModel::FilledCap { junction: 2.0, epsilon: 0.0 },
        core_length: 2.5,
        blend_width: 0.5,
        bump: BumpSpec { center: 0.8466, radius: 0.2773, amplitude: 0.0 },
        boundary_surgery_epsilon: None,
        funnel_factor: None,
    }
}

fn eps_grid(step_count: usize) -> Vec<f64> {
    (0..=step_count).map(|i| i as f64 / step_count as f64).collect()
}

impl ScenarioConfig {
    /// Defaults for `kind`.
    pub fn template(kind: ScenarioKind) -> Self {
        let bumped = SurfaceSpec::cusp_funnel().with_bump(default_bump());
        let flat = SurfaceSpec { bump: BumpSpec { amplitude: 0.0, ..default_bump() }, ..bumped };
        let mut cfg = ScenarioConfig {
            kind,
            seed: 7,
            surface_a: bumped,
            surface_b: flat,
            truncation: Truncation::default(),
            grid: GridSettings { cells: 4000, kappa: 0.5, lambda_cut: 1000.0 },
            epsilons: eps_grid(20),
            times: TimeGrid::log(0.02, 20.0, 60),
            fit: FitSettings { terms: 3, window: (0.02, 0.3), residual_threshold: 1e-4 },
            zeta: ZetaOptions::default(),
            oracle: OracleSettings { enabled: true, s_cells: 400, theta_nodes: 64, count: 20 },
            offdiag: OffdiagSettings {
                region: (0.6, 4.0),
                y_s: -0.5,
                y2_s: -0.4,
                times: TimeGrid::log(0.05, 1.0, 24),
                refine: 2,
            },
            funnel_factors: vec![
                FunnelFactor { constant: 0.5, inner: 0.3, outer: 0.8 },
                FunnelFactor { constant: -0.5, inner: 0.3, outer: 0.8 },
            ],
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("relspec-out").join(kind.name()),
        };
        match kind {
            ScenarioKind::Validate | ScenarioKind::SurgerySweep | ScenarioKind::FunnelConformalCheck => {}
            ScenarioKind::IsospectralCheck => {
                cfg.surface_b = cfg.surface_a;
                cfg.grid.cells = 2000;
                cfg.grid.lambda_cut = 400.0;
            }
            ScenarioKind::ContinuityCheck => cfg.epsilons = vec![0.0, 0.4, 0.2, 0.1, 0.05],
            ScenarioKind::DecayCheck => {
                let family = compact_family();
                cfg.surface_a = family.with_bump(BumpSpec { amplitude: 0.2, ..family.bump });
                cfg.surface_b = family;
                cfg.grid = GridSettings { cells: 2000, kappa: 0.5, lambda_cut: 200.0 };
                cfg.times = TimeGrid { start: 10.0, end: 20.0, count: 21, spacing: Spacing::Linear };
            }
            ScenarioKind::OffdiagCheck => {
                cfg.surface_a = cfg.surface_a.with_left(EndModel::boundary());
                cfg.surface_b = cfg.surface_a;
                cfg.grid = GridSettings { cells: 1000, kappa: 0.5, lambda_cut: 700.0 };
            }
        }
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let kind = match user.get("kind") {
            Some(v) => ScenarioKind::deserialize(v.clone()).map_err(|e| ConfigError::Parse(format!("kind: {e}")))?,
            None => return Err(ConfigError::Parse("missing `kind`".into())),
        };
        let mut merged = toml::Table::try_from(Self::template(kind)).map_err(|e| ConfigError::Parse(e.to_string()))?;
        merge(&mut merged, user);
        let cfg: ScenarioConfig =
            toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        for (name, spec) in [("surface_a", &self.surface_a), ("surface_b", &self.surface_b)] {
            if let Err(e) = spec.validate() {
                return bad(format!("{name}: {e}"));
            }
        }
        if let Err(e) = self.truncation.validate() {
            return bad(e.to_string());
        }
        if self.grid.cells < 8 || !(self.grid.kappa > 0.0) || !(self.grid.lambda_cut > 0.0) {
            return bad("grid: need cells >= 8, kappa > 0, lambda_cut > 0".into());
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return bad("epsilons must be a non-empty list in [0, 1]".into());
        }
        let needs_zero = matches!(
            self.kind,
            ScenarioKind::SurgerySweep | ScenarioKind::ContinuityCheck | ScenarioKind::DecayCheck
        );
        if needs_zero && self.epsilons[0] != 0.0 {
            return bad(format!("{}: the first epsilon must be the reference 0", self.kind.name()));
        }
        self.times.validate("times")?;
        self.offdiag.times.validate("offdiag.times")?;
        if self.fit.terms == 0 || !(self.fit.window.0 > 0.0 && self.fit.window.1 > self.fit.window.0) {
            return bad("fit: need terms >= 1 and 0 < window.0 < window.1".into());
        }
        if self.oracle.count == 0 || self.oracle.count > relspec_core::oracle::MAX_ORACLE_COUNT {
            return bad("oracle.count must be in 1..=50".into());
        }
        if self.oracle.s_cells > 400 || self.oracle.theta_nodes > 64 {
            return bad("oracle grid is capped at 400 x 64".into());
        }
        if self.oracle.s_cells % 2 != 0 || self.oracle.theta_nodes % 2 != 0 {
            return bad("oracle grid counts must be even (the coarse partner halves them)".into());
        }
        if self.offdiag.refine < 2 {
            return bad("offdiag.refine must be at least 2".into());
        }
        Ok(())
    }
}

/// Overlays `user` on `base`. Tables merge key by key, except that a user
/// table naming a key the base table lacks (a different enum variant)
/// replaces the base table wholesale.
fn merge(base: &mut toml::Table, user: toml::Table) {
    for (key, value) in user {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) if u.keys().all(|k| b.contains_key(k)) => merge(b, u),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_template_round_trips() {
        for kind in ScenarioKind::ALL {
            let cfg = ScenarioConfig::template(kind);
            cfg.validate().unwrap();
            let text = cfg.to_toml_string();
            let back = ScenarioConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, cfg, "{}", kind.name());
        }
    }

    #[test]
    fn one_line_config_is_complete() {
        let cfg = ScenarioConfig::from_toml_str("kind = \"decay_check\"").unwrap();
        assert_eq!(cfg, ScenarioConfig::template(ScenarioKind::DecayCheck));
    }

    #[test]
    fn partial_tables_merge_and_variants_replace() {
        let text = r#"
kind = "surgery_sweep"
epsilons = [0.0, 0.5]
[grid]
cells = 500
[surface_a.left]
kind = "dirichlet_boundary"
collar_exponent = 0.0
collar_length = 1.0
"#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.grid.cells, 500);
        assert_eq!(cfg.grid.lambda_cut, 1000.0);
        assert_eq!(cfg.epsilons, vec![0.0, 0.5]);
        assert_eq!(cfg.surface_a.left, EndModel::boundary());
        assert_eq!(cfg.surface_b.left, EndModel::funnel());
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(matches!(ScenarioConfig::from_toml_str("seed = 3"), Err(ConfigError::Parse(_))));
        assert!(matches!(ScenarioConfig::from_toml_str("kind = \"nope\""), Err(ConfigError::Parse(_))));
        assert!(matches!(
            ScenarioConfig::from_toml_str("kind = \"validate\"\ntypo = 1"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            ScenarioConfig::from_toml_str("kind = \"surgery_sweep\"\nepsilons = [0.5, 0.0]"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ScenarioConfig::from_toml_str("kind = \"validate\"\n[oracle]\ns_cells = 800"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn time_grids() {
        let lin = TimeGrid { start: 10.0, end: 20.0, count: 11, spacing: Spacing::Linear }.points();
        assert_eq!(lin.first(), Some(&10.0));
        assert_eq!(lin.last(), Some(&20.0));
        assert_eq!(lin[5], 15.0);
        let log = TimeGrid::log(0.02, 20.0, 60).points();
        assert_eq!(log.len(), 60);
    }
}
