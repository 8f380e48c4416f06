//! Experiment configuration: a TOML file, environment, flags and
//! `key=value` overrides, resolved in that order.

use std::fmt;
use std::path::{Path, PathBuf};

use reflekt_core::backward::{SolverParams, Transition};
use reflekt_core::cadlag::{Regressor, DEFAULT_BINS};
use reflekt_core::forward::{validate_assumptions, AssumptionReport, DomainKind, Reflection};
use reflekt_core::pde_oracle::FDGrid;
use reflekt_core::valuefn::{Engine, EngineConfig};
use reflekt_core::{ConvexSpec, Domain, PresetName, Problem};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "REFLEKT_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    pub t: f64,
    pub x: Vec<f64>,
    pub n_steps: usize,
    pub n_paths: usize,
    pub reflection: Reflection,
    /// Paths written out in full; the rest enter the summary only.
    pub write_paths: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            t: 0.0,
            x: vec![0.0],
            n_steps: 500,
            n_paths: 10_000,
            reflection: Reflection::Projection,
            write_paths: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Start point of the regression engine.
    pub t: f64,
    pub x: f64,
    pub write_paths: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { t: 0.0, x: 0.0, write_paths: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityConfig {
    pub limit: [f64; 2],
    pub direction: [f64; 2],
    pub n_max: usize,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig { limit: [0.0, 0.25], direction: [1.0, 0.5], n_max: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Grid-engine resolution compared against the oracle.
    pub n_t: usize,
    pub n_x: usize,
    pub tolerance: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { n_t: 50, n_x: 50, tolerance: 2e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightnessConfig {
    /// Members are `(2^-n, 2^-n)` for `n` in `n_first..=n_last`.
    pub n_first: u32,
    pub n_last: u32,
    pub n_intervals: usize,
    pub bins: usize,
}

impl Default for TightnessConfig {
    fn default() -> Self {
        TightnessConfig { n_first: 3, n_last: 8, n_intervals: 10, bins: DEFAULT_BINS }
    }
}

impl TightnessConfig {
    pub fn sequence(&self) -> Vec<(f64, f64)> {
        (self.n_first..=self.n_last).map(|n| (0.5f64.powi(n as i32), 0.5f64.powi(n as i32))).collect()
    }

    pub fn regressor(&self) -> Regressor {
        Regressor::Bucket { bins: self.bins }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { samples: 2000, tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    pub trials: usize,
    pub depth: u32,
    pub pairs: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig { trials: 10_000, depth: 14, pairs: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: PresetName,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Replaces the preset's domain.
    pub domain: Option<DomainKind>,
    /// Replace the preset's convex terms.
    pub phi: Option<ConvexSpec>,
    pub psi: Option<ConvexSpec>,
    pub solver: SolverParams,
    pub engine: Engine,
    pub forward: ForwardConfig,
    pub solve: SolveConfig,
    pub oracle: FDGrid,
    pub compare: CompareConfig,
    pub continuity: ContinuityConfig,
    pub tightness: TightnessConfig,
    pub validation: ValidationConfig,
    pub selftest: SelftestConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: PresetName::Heat,
            seed: 0,
            out: PathBuf::from("out"),
            domain: None,
            phi: None,
            psi: None,
            solver: SolverParams::default(),
            engine: Engine::Grid { n_t: 50, n_x: 51, transition: Transition::ReflectedGaussian },
            forward: ForwardConfig::default(),
            solve: SolveConfig::default(),
            oracle: FDGrid::default(),
            compare: CompareConfig::default(),
            continuity: ContinuityConfig::default(),
            tightness: TightnessConfig::default(),
            validation: ValidationConfig::default(),
            selftest: SelftestConfig::default(),
        }
    }
}

/// Per-field problems found while resolving or validating a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "config: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    fn one(msg: impl Into<String>) -> Self {
        ConfigErrors(vec![msg.into()])
    }
}

/// Engine variant named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EngineKind {
    Grid,
    Regression,
}

/// Everything that feeds the resolved config besides the file.
#[derive(Debug, Clone, Default)]
pub struct Sources {
    pub config: Option<PathBuf>,
    pub preset: Option<PresetName>,
    pub seed: Option<u64>,
    pub env_seed: Option<String>,
    pub out: Option<PathBuf>,
    pub engine: Option<EngineKind>,
    pub overrides: Vec<String>,
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(format!("override key '{key}' has an empty segment"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| format!("override key '{key}': '{p}' is not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

const TAGS: [&str; 2] = ["engine", "kind"];

/// Deep merge; a table whose tag differs from the base replaces it whole.
fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                let retagged = TAGS.iter().any(|t| o.get(*t).is_some_and(|tag| b.get(*t) != Some(tag)));
                if retagged {
                    *b = o;
                } else {
                    merge(b, o);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn engine_table(kind: EngineKind, n_t: usize) -> toml::Value {
    let engine = match kind {
        EngineKind::Grid => Engine::Grid { n_t, n_x: 51, transition: Transition::ReflectedGaussian },
        EngineKind::Regression => Engine::Regression { n_t, n_paths: 20_000, reflection: Reflection::Symmetrized },
    };
    toml::Value::try_from(engine).expect("engine serializes")
}

impl ExperimentConfig {
    /// File, then `REFLEKT_SEED`, then flags, then overrides.
    pub fn resolve(src: &Sources) -> Result<Self, ConfigErrors> {
        let mut table = toml::Table::try_from(ExperimentConfig::default()).expect("defaults serialize");
        if let Some(path) = &src.config {
            let text =
                std::fs::read_to_string(path).map_err(|e| ConfigErrors::one(format!("{}: {e}", path.display())))?;
            let file = toml::from_str::<toml::Table>(&text)
                .map_err(|e| ConfigErrors::one(format!("{}: {}", path.display(), e.message())))?;
            merge(&mut table, file);
        }
        let mut errors = Vec::new();
        if let Some(raw) = &src.env_seed {
            match raw.trim().parse::<u64>() {
                Ok(seed) => {
                    table.insert("seed".into(), toml::Value::Integer(seed as i64));
                }
                Err(e) => errors.push(format!("{SEED_ENV}: '{raw}' is not a seed: {e}")),
            }
        }
        if let Some(p) = src.preset {
            table.insert("preset".into(), toml::Value::String(p.as_str().into()));
        }
        if let Some(seed) = src.seed {
            table.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        if let Some(out) = &src.out {
            table.insert("out".into(), toml::Value::String(out.display().to_string()));
        }
        if let Some(kind) = src.engine {
            let current = table.get("engine").and_then(|e| e.get("engine")).and_then(|v| v.as_str());
            let wanted = match kind {
                EngineKind::Grid => "grid",
                EngineKind::Regression => "regression",
            };
            if current != Some(wanted) {
                let n_t = table
                    .get("engine")
                    .and_then(|e| e.get("n_t"))
                    .and_then(|v| v.as_integer())
                    .map_or(50, |v| v.max(1) as usize);
                table.insert("engine".into(), engine_table(kind, n_t));
            }
        }
        for ov in &src.overrides {
            match ov.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = set_path(&mut table, k.trim(), parse_value(v.trim())) {
                        errors.push(e);
                    }
                }
                None => errors.push(format!("override '{ov}' is not key=value")),
            }
        }
        if !errors.is_empty() {
            return Err(ConfigErrors(errors));
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigErrors::one(e.message().to_string()))?;
        cfg.check_fields()?;
        Ok(cfg)
    }

    /// Range checks that do not need the numerical engine.
    pub fn check_fields(&self) -> Result<(), ConfigErrors> {
        let mut e = Vec::new();
        if let Err(err) = self.solver.validate() {
            e.push(format!("solver: {err}"));
        }
        if let Err(err) = self.oracle.validate() {
            e.push(format!("oracle: {err}"));
        }
        match self.engine {
            Engine::Grid { n_t, n_x, transition } => {
                if n_t == 0 {
                    e.push("engine.n_t: must be positive".into());
                }
                if n_x < 2 {
                    e.push("engine.n_x: need at least two nodes".into());
                }
                if let Transition::Mc { n_paths: 0 } = transition {
                    e.push("engine.transition.n_paths: must be positive".into());
                }
            }
            Engine::Regression { n_t, n_paths, .. } => {
                if n_t == 0 {
                    e.push("engine.n_t: must be positive".into());
                }
                if n_paths < reflekt_core::backward::MIN_REGRESSION_PATHS {
                    e.push(format!(
                        "engine.n_paths: {n_paths} is below the minimum of {}",
                        reflekt_core::backward::MIN_REGRESSION_PATHS
                    ));
                }
            }
        }
        if self.forward.n_steps == 0 || self.forward.n_paths == 0 {
            e.push("forward: n_steps and n_paths must be positive".into());
        }
        if self.compare.n_t == 0 || self.compare.n_x < 2 {
            e.push("compare: need n_t >= 1 and n_x >= 2".into());
        }
        if !(self.compare.tolerance > 0.0) {
            e.push("compare.tolerance: must be positive".into());
        }
        if self.continuity.n_max == 0 {
            e.push("continuity.n_max: must be positive".into());
        }
        let t = &self.tightness;
        if t.n_last < t.n_first + 2 {
            e.push("tightness: need at least three members (n_last >= n_first + 2)".into());
        }
        if t.n_intervals == 0 || !self.engine_config().n_t().is_multiple_of(t.n_intervals) {
            e.push(format!("tightness.n_intervals: {} does not divide engine.n_t", t.n_intervals));
        }
        if t.bins == 0 {
            e.push("tightness.bins: must be positive".into());
        }
        if self.validation.samples == 0 || !(self.validation.tolerance >= 0.0) {
            e.push("validation: need samples >= 1 and tolerance >= 0".into());
        }
        if self.selftest.trials == 0 || self.selftest.depth == 0 || self.selftest.depth > 20 {
            e.push("selftest: need trials >= 1 and depth in 1..=20".into());
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(e))
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig { engine: self.engine, params: self.solver, seed: self.seed }
    }

    pub fn grid_config(&self, n_t: usize, n_x: usize) -> EngineConfig {
        EngineConfig {
            engine: Engine::Grid { n_t, n_x, transition: Transition::ReflectedGaussian },
            params: self.solver,
            seed: self.seed,
        }
    }

    /// The preset with the configured domain and convex terms.
    pub fn problem(&self) -> Result<Problem, ConfigErrors> {
        let mut p = Problem::preset(self.preset);
        let mut e = Vec::new();
        if let Some(kind) = self.domain {
            match Domain::from_kind(kind) {
                Ok(d) if d.dim() == p.coeffs.state_dim => p.domain = d,
                Ok(d) => {
                    e.push(format!("domain: dimension {} but the coefficients act on {}", d.dim(), p.coeffs.state_dim))
                }
                Err(err) => e.push(format!("domain: {err}")),
            }
        }
        for (name, spec, slot) in [("phi", &self.phi, &mut p.phi), ("psi", &self.psi, &mut p.psi)] {
            if let Some(s) = spec {
                match s.validate() {
                    Ok(()) if s.dim() == p.coeffs.value_dim => *slot = s.clone(),
                    Ok(()) => e.push(format!("{name}: dimension {} but Y has {}", s.dim(), p.coeffs.value_dim)),
                    Err(err) => e.push(format!("{name}: {err}")),
                }
            }
        }
        if e.is_empty() {
            Ok(p)
        } else {
            Err(ConfigErrors(e))
        }
    }

    pub fn assumption_report(&self, p: &Problem) -> reflekt_core::Result<AssumptionReport> {
        validate_assumptions(
            &p.domain,
            &p.coeffs,
            &p.phi,
            &p.psi,
            self.validation.samples,
            self.seed,
            self.validation.tolerance,
        )
    }

    /// Rejects problems whose sampled assumption checks exceed the tolerance.
    pub fn validated_problem(&self) -> Result<Problem, ConfigErrors> {
        let p = self.problem()?;
        let report = self.assumption_report(&p).map_err(|e| ConfigErrors::one(format!("assumptions: {e}")))?;
        if report.passed() {
            Ok(p)
        } else {
            Err(ConfigErrors(
                report.failures().map(|c| format!("assumption {}: residual {:.3e}", c.name, c.residual)).collect(),
            ))
        }
    }

    /// Canonical TOML of the resolved config.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sources(overrides: &[&str]) -> Sources {
        Sources { overrides: overrides.iter().map(|s| s.to_string()).collect(), ..Sources::default() }
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let back: ExperimentConfig = toml::from_str(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_are_typed() {
        let cfg =
            ExperimentConfig::resolve(&sources(&["seed=7", "forward.x=[0.5]", "preset=obstacle_interior"])).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.forward.x, vec![0.5]);
        assert_eq!(cfg.preset, PresetName::ObstacleInterior);
    }

    #[test]
    fn precedence() {
        let src = Sources {
            seed: Some(3),
            env_seed: Some("5".into()),
            overrides: vec!["seed=9".into()],
            ..Sources::default()
        };
        assert_eq!(ExperimentConfig::resolve(&src).unwrap().seed, 9);
        let src = Sources { seed: Some(3), env_seed: Some("5".into()), ..Sources::default() };
        assert_eq!(ExperimentConfig::resolve(&src).unwrap().seed, 3);
        let src = Sources { env_seed: Some("5".into()), ..Sources::default() };
        assert_eq!(ExperimentConfig::resolve(&src).unwrap().seed, 5);
    }

    #[test]
    fn engine_flag_switches_variant() {
        let src = Sources { engine: Some(EngineKind::Regression), ..Sources::default() };
        let cfg = ExperimentConfig::resolve(&src).unwrap();
        assert!(matches!(cfg.engine, Engine::Regression { n_t: 50, .. }));
    }

    #[test]
    fn field_errors_are_collected() {
        let err = ExperimentConfig::resolve(&sources(&["oracle.theta=0.2", "compare.tolerance=-1"])).unwrap_err();
        assert_eq!(err.0.len(), 2, "{err}");
        assert!(ExperimentConfig::resolve(&sources(&["bogus=1"])).is_err());
        assert!(ExperimentConfig::resolve(&sources(&["noequals"])).is_err());
        let env = Sources { env_seed: Some("x".into()), ..Sources::default() };
        assert!(ExperimentConfig::resolve(&env).is_err());
    }

    #[test]
    fn convex_override_replaces_phi() {
        let cfg = ExperimentConfig::resolve(&sources(&[
            "phi.kind=\"indicator_box\"",
            "phi.lo=[-0.5]",
            "phi.hi=[0.5]",
            "phi.dim=1",
        ]))
        .unwrap();
        let p = cfg.problem().unwrap();
        assert_eq!(p.phi, ConvexSpec::indicator_box(vec![-0.5], vec![0.5]).unwrap());
    }

    #[test]
    fn presets_validate() {
        for name in PresetName::ALL {
            let cfg = ExperimentConfig { preset: name, ..ExperimentConfig::default() };
            assert!(cfg.validated_problem().is_ok(), "{name}");
        }
    }
}
