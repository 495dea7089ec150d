//! Study configuration: TOML files, dotted `--set` overrides and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{WorkbenchError, WorkbenchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    LandauBenchmark,
    WassersteinTrend,
    RegularityRate,
    ScalingVerify,
    AsetReport,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::LandauBenchmark => "landau-benchmark",
            StudyKind::WassersteinTrend => "wasserstein-trend",
            StudyKind::RegularityRate => "regularity-rate",
            StudyKind::ScalingVerify => "scaling-verify",
            StudyKind::AsetReport => "aset-report",
        }
    }

    /// Default eps list used when the configuration leaves it empty.
    pub fn default_eps(&self) -> Vec<f64> {
        match self {
            StudyKind::LandauBenchmark => vec![1.0],
            StudyKind::WassersteinTrend | StudyKind::AsetReport => vec![0.2, 0.1, 0.05],
            StudyKind::RegularityRate => vec![0.5, 0.25, 0.125],
            StudyKind::ScalingVerify => vec![0.5, 0.25],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub nx: usize,
    pub nv: usize,
    pub length: f64,
    pub vmax: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 64, nv: 256, length: 4.0 * std::f64::consts::PI, vmax: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot spacing in steps.
    pub snapshot_every: usize,
    pub interpolation: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { epsilon: 1.0, dt: 0.05, t_end: 30.0, snapshot_every: 20, interpolation: "cubic".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub alpha: f64,
    pub wavenumber: u32,
    pub z_shift: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { alpha: 0.001, wavenumber: 1, z_shift: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    /// `amplitude` (`base (1 + slope z)`) or `drift` (`slope z`).
    pub family: String,
    pub base: f64,
    pub slope: f64,
    pub support: [f64; 2],
    pub nodes: usize,
    /// `gauss-legendre` or `chebyshev-lobatto`.
    pub rule: String,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            family: "amplitude".into(),
            base: 0.05,
            slope: 0.1,
            support: [-1.0, 1.0],
            nodes: 3,
            rule: "gauss-legendre".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormConfig {
    pub a: f64,
    pub t0: f64,
    pub m: u32,
    pub k_max: usize,
    /// Allowed excess of a measured log-norm over the predicted log-rate.
    pub slack: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { a: 1.0, t0: 2.0, m: 1, k_max: 1, slack: std::f64::consts::LN_10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsetConfig {
    pub delta: f64,
    /// Factor used for the membership column of the trend table.
    pub m_factor: f64,
    pub m_list: Vec<f64>,
    pub z0: f64,
    pub horizon: f64,
}

impl Default for AsetConfig {
    fn default() -> Self {
        Self { delta: 0.5, m_factor: 1.5, m_list: vec![1.0, 1.1, 1.5, 2.0, 4.0], z0: 0.0, horizon: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandauConfig {
    pub fit_start: f64,
    pub fit_end: f64,
    pub record_every: f64,
    pub a_tilde: f64,
    pub t0: f64,
    pub tolerance: f64,
}

impl Default for LandauConfig {
    fn default() -> Self {
        Self { fit_start: 0.0, fit_end: 30.0, record_every: 1.0, a_tilde: 0.1, t0: 2.0, tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrendConfig {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    /// Thermal spread of the kinetic beam in units of eps.
    pub sigma_factor: f64,
    /// Time step in units of eps.
    pub dt_factor: f64,
    pub t_end: f64,
    pub record_every: f64,
    pub mass_floor: f64,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self {
            nx: 32,
            nv: 512,
            vmax: 1.0,
            sigma_factor: 0.4,
            dt_factor: 0.05,
            t_end: 1.0,
            record_every: 0.05,
            mass_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularityConfig {
    pub nx: usize,
    pub nv: usize,
    pub vmax: f64,
    pub dt: f64,
    /// Horizon in quasineutral time; the normal run covers `t_end / eps`.
    pub t_end: f64,
    pub record_every: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self { nx: 32, nv: 128, vmax: 8.0, dt: 0.1, t_end: 3.0, record_every: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    /// Refinement levels `[nx, nv, dt]`.
    pub levels: Vec<[f64; 3]>,
    pub t_end: f64,
    pub alpha: f64,
    pub pair_nx: usize,
    pub pair_nv: usize,
    pub pair_dt: f64,
    pub pair_t_end: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            levels: vec![[32.0, 128.0, 0.1], [64.0, 256.0, 0.05]],
            t_end: 2.0,
            alpha: 0.05,
            pair_nx: 16,
            pair_nv: 64,
            pair_dt: 0.1,
            pair_t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub d: u32,
    pub k0: u32,
    pub z: f64,
    pub l_max: u32,
    pub a1: f64,
    pub a2: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { d: 1, k0: 1, z: 0.0, l_max: 1, a1: 0.05, a2: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub study: Option<StudyKind>,
    pub seed: u64,
    /// Worker threads for independent runs; 0 uses all cores.
    pub workers: usize,
    pub eps_list: Vec<f64>,
    pub grid: GridConfig,
    pub solver: SolverSection,
    pub initial: InitialConfig,
    pub ensemble: EnsembleConfig,
    pub norm: NormConfig,
    pub aset: AsetConfig,
    pub landau: LandauConfig,
    pub trend: TrendConfig,
    pub regularity: RegularityConfig,
    pub scaling: ScalingConfig,
    pub bounds: BoundsConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            study: None,
            seed: 0,
            workers: 0,
            eps_list: Vec::new(),
            grid: GridConfig::default(),
            solver: SolverSection::default(),
            initial: InitialConfig::default(),
            ensemble: EnsembleConfig::default(),
            norm: NormConfig::default(),
            aset: AsetConfig::default(),
            landau: LandauConfig::default(),
            trend: TrendConfig::default(),
            regularity: RegularityConfig::default(),
            scaling: ScalingConfig::default(),
            bounds: BoundsConfig::default(),
        }
    }
}

impl StudyConfig {
    /// The configured eps list, or the study default when empty.
    pub fn eps_for(&self, kind: StudyKind) -> Vec<f64> {
        if self.eps_list.is_empty() {
            kind.default_eps()
        } else {
            self.eps_list.clone()
        }
    }

    pub fn validate(&self) -> WorkbenchResult<()> {
        check_eps_list(&self.eps_list)?;
        if self.ensemble.nodes < 2 {
            return Err(WorkbenchError::Validation("ensemble.nodes must be at least 2".into()));
        }
        if !matches!(self.ensemble.family.as_str(), "amplitude" | "drift") {
            return Err(WorkbenchError::Validation(format!("unknown ensemble family `{}`", self.ensemble.family)));
        }
        if !matches!(self.ensemble.rule.as_str(), "gauss-legendre" | "chebyshev-lobatto") {
            return Err(WorkbenchError::Validation(format!("unknown node rule `{}`", self.ensemble.rule)));
        }
        if !matches!(self.solver.interpolation.as_str(), "cubic" | "linear") {
            return Err(WorkbenchError::Validation(format!("unknown interpolation `{}`", self.solver.interpolation)));
        }
        if self.aset.m_list.iter().chain([&self.aset.m_factor]).any(|m| !(*m >= 1.0)) {
            return Err(WorkbenchError::Validation("aset.m_list entries must be at least 1".into()));
        }
        Ok(())
    }
}

/// Eps lists must be strictly decreasing and lie in `(0, 1]`.
pub fn check_eps_list(eps: &[f64]) -> WorkbenchResult<()> {
    if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(WorkbenchError::Validation("eps_list entries must lie in (0, 1]".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(WorkbenchError::Validation("eps_list must be strictly decreasing".into()));
    }
    Ok(())
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

fn parse_error(source: &str, text: &str, err: &toml::de::Error) -> WorkbenchError {
    let (line, column) = err.span().map_or((0, 0), |s| line_col(text, s.start));
    WorkbenchError::ConfigParse { file: source.into(), line, column, message: err.message().to_string() }
}

/// Parses a `key=value` override; the value is read as TOML, falling back to a string.
fn parse_override(item: &str) -> WorkbenchResult<(Vec<String>, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| WorkbenchError::Validation(format!("override `{item}` is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(WorkbenchError::Validation(format!("bad override key `{key}`")));
    }
    let raw = raw.trim();
    let doc = format!("v = {raw}");
    let value = match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    };
    Ok((path, value))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> WorkbenchResult<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| WorkbenchError::Validation(format!("override path through non-table key `{p}`")))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Builds a configuration from optional TOML text plus overrides.
pub fn load_str(text: Option<(&str, &str)>, overrides: &[String]) -> WorkbenchResult<StudyConfig> {
    let mut table = match text {
        Some((source, body)) => {
            toml::from_str::<StudyConfig>(body).map_err(|e| parse_error(source, body, &e))?;
            body.parse::<toml::Table>().map_err(|e| parse_error(source, body, &e))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        let (path, value) = parse_override(item)?;
        apply_override(&mut table, &path, value)?;
    }
    let cfg: StudyConfig = table.try_into().map_err(|e: toml::de::Error| WorkbenchError::ConfigParse {
        file: "--set".into(),
        line: 0,
        column: 0,
        message: e.message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads the configuration file (if any) and applies overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> WorkbenchResult<StudyConfig> {
    match path {
        Some(p) => {
            let body = std::fs::read_to_string(p)
                .map_err(|e| WorkbenchError::Validation(format!("cannot read config {}: {e}", p.display())))?;
            load_str(Some((&p.display().to_string(), &body)), overrides)
        }
        None => load_str(None, overrides),
    }
}
