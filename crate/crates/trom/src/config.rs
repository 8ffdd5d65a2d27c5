//! Run configuration: a TOML file with one section per subsystem, merged over
//! per-case defaults. Every numeric default for the shipped benchmark cases
//! lives in the preset files under `presets/`; unset keys fall back to the
//! values here.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::shifts::{CalibrationMode, ShiftInterp};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub case: CaseSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub fom: FomSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub shifts: ShiftsSection,
    #[serde(default)]
    pub hyper: HyperSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub io: IoSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub label: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_x: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomSection {
    pub cfl_fraction: Option<f64>,
    /// Explicit time step; overrides the CFL-derived one when set.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub n_t: Option<usize>,
    pub n_mu: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftsSection {
    pub theta: Option<f64>,
    pub candidate_cap: Option<usize>,
    pub mode: Option<String>,
    pub interpolation: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSection {
    pub m_hyp: Option<usize>,
    /// Reduced-mesh size as a percentage of the total cell count.
    pub n_pct: Option<f64>,
    /// Absolute reduced-mesh size; takes precedence over `n_pct`.
    pub n: Option<usize>,
    /// Residual sampling times per training run for cases without time
    /// stepping.
    pub residual_times: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub target_mu_count: Option<usize>,
    /// Target time-sample count for cases without time stepping (time-stepped
    /// cases use every step time).
    pub target_t_count: Option<usize>,
    pub timing_reps: Option<usize>,
    pub parallel: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub workdir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    Test1,
    Test2,
    Test3,
}

impl CaseLabel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "test1" => Ok(CaseLabel::Test1),
            "test2" => Ok(CaseLabel::Test2),
            "test3" => Ok(CaseLabel::Test3),
            other => Err(Error::config(format!("unknown case label '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::Test1 => "test1",
            CaseLabel::Test2 => "test2",
            CaseLabel::Test3 => "test3",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub label: CaseLabel,
    pub n_x: usize,
    pub cfl_fraction: f64,
    pub dt_override: Option<f64>,
    pub n_t: usize,
    pub n_mu: usize,
    pub theta: f64,
    pub candidate_cap: usize,
    pub calibration_mode: CalibrationMode,
    pub interp: ShiftInterp,
    pub m_hyp: usize,
    pub n_pct: f64,
    pub n_abs: Option<usize>,
    pub residual_times: usize,
    pub target_mu_count: usize,
    pub target_t_count: usize,
    pub timing_reps: usize,
    pub parallel: bool,
    pub workdir: PathBuf,
}

impl RunConfig {
    /// Per-case defaults (the benchmark settings of the shipped cases).
    pub fn defaults(label: CaseLabel) -> RunConfig {
        let (n_x, n_t, n_mu, m_hyp, n_pct, targets_mu, targets_t, residual_times) = match label {
            CaseLabel::Test1 => (1000, 2, 2, 5, 0.5, 40, 0, 0),
            CaseLabel::Test2 => (600, 3, 3, 4, 1.0, 100, 100, 3),
            CaseLabel::Test3 => (800, 6, 6, 5, 2.0, 50, 0, 0),
        };
        // test1 runs at the benchmark's literal step dt = 1/N_x (stable for
        // its linear flux, though above the generic two-sided bound); the
        // other cases use the bound itself.
        let dt_override = match label {
            CaseLabel::Test1 => Some(1.0 / n_x as f64),
            _ => None,
        };
        RunConfig {
            label,
            n_x,
            cfl_fraction: 1.0,
            dt_override,
            n_t,
            n_mu,
            theta: 0.25,
            candidate_cap: 20000,
            calibration_mode: CalibrationMode::ReferenceComposed,
            interp: ShiftInterp::GlobalLagrange,
            m_hyp,
            n_pct,
            n_abs: None,
            residual_times,
            target_mu_count: targets_mu,
            target_t_count: targets_t,
            timing_reps: 3,
            parallel: true,
            workdir: PathBuf::from(format!("runs/{}", label.as_str())),
        }
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let file: ConfigFile = toml::from_str(&text)
            .map_err(|e| Error::config(format!("cannot parse config {}: {e}", path.display())))?;
        Self::from_sections(file)
    }

    pub fn from_sections(file: ConfigFile) -> Result<RunConfig> {
        let label = CaseLabel::parse(
            file.case
                .label
                .as_deref()
                .ok_or_else(|| Error::config("config needs case.label".to_string()))?,
        )?;
        let mut cfg = Self::defaults(label);
        if let Some(n_x) = file.grid.n_x {
            cfg.n_x = n_x;
            if label == CaseLabel::Test1 {
                // keep the literal-step default tied to the actual resolution
                cfg.dt_override = Some(1.0 / n_x as f64);
            }
        }
        if let Some(f) = file.fom.cfl_fraction {
            cfg.cfl_fraction = f;
        }
        if file.fom.dt.is_some() {
            cfg.dt_override = file.fom.dt;
        }
        if let Some(v) = file.sampling.n_t {
            cfg.n_t = v;
        }
        if let Some(v) = file.sampling.n_mu {
            cfg.n_mu = v;
        }
        if let Some(v) = file.shifts.theta {
            cfg.theta = v;
        }
        if let Some(v) = file.shifts.candidate_cap {
            cfg.candidate_cap = v;
        }
        if let Some(v) = file.shifts.mode.as_deref() {
            cfg.calibration_mode = CalibrationMode::parse(v)?;
        }
        if let Some(v) = file.shifts.interpolation.as_deref() {
            cfg.interp = ShiftInterp::parse(v)?;
        }
        if let Some(v) = file.hyper.m_hyp {
            cfg.m_hyp = v;
        }
        if let Some(v) = file.hyper.n_pct {
            cfg.n_pct = v;
        }
        cfg.n_abs = file.hyper.n;
        if let Some(v) = file.hyper.residual_times {
            cfg.residual_times = v;
        }
        if let Some(v) = file.bench.target_mu_count {
            cfg.target_mu_count = v;
        }
        if let Some(v) = file.bench.target_t_count {
            cfg.target_t_count = v;
        }
        if let Some(v) = file.bench.timing_reps {
            cfg.timing_reps = v.max(1);
        }
        if let Some(v) = file.bench.parallel {
            cfg.parallel = v;
        }
        if let Some(v) = file.io.workdir {
            cfg.workdir = PathBuf::from(v);
        }
        Ok(cfg)
    }

    /// Reduced-mesh size for a grid of `n_cells` cells: the absolute override
    /// when given, otherwise `round(n_pct/100 * n_cells)`, at least 1.
    pub fn reduced_mesh_size(&self, n_cells: usize) -> usize {
        match self.n_abs {
            Some(n) => n.min(n_cells).max(1),
            None => (((self.n_pct / 100.0) * n_cells as f64).round() as usize).clamp(1, n_cells),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_case_settings() {
        let c1 = RunConfig::defaults(CaseLabel::Test1);
        assert_eq!((c1.n_x, c1.n_t, c1.n_mu, c1.m_hyp), (1000, 2, 2, 5));
        assert_eq!(c1.reduced_mesh_size(1000), 5);
        let c2 = RunConfig::defaults(CaseLabel::Test2);
        assert_eq!((c2.n_x, c2.n_t, c2.n_mu, c2.m_hyp), (600, 3, 3, 4));
        assert_eq!(c2.reduced_mesh_size(600 * 600), 3600);
        let c3 = RunConfig::defaults(CaseLabel::Test3);
        assert_eq!((c3.n_x, c3.n_t, c3.n_mu, c3.m_hyp), (800, 6, 6, 5));
        assert_eq!(c3.reduced_mesh_size(800 * 800), 12800);
    }

    #[test]
    fn file_overrides_defaults() {
        let file: ConfigFile = toml::from_str(
            r#"
            [case]
            label = "test1"
            [grid]
            n_x = 200
            [hyper]
            n = 17
            [bench]
            timing_reps = 1
            parallel = false
            "#,
        )
        .unwrap();
        let cfg = RunConfig::from_sections(file).unwrap();
        assert_eq!(cfg.n_x, 200);
        assert_eq!(cfg.reduced_mesh_size(200), 17);
        assert_eq!(cfg.timing_reps, 1);
        assert!(!cfg.parallel);
        // untouched keys keep defaults
        assert_eq!(cfg.n_t, 2);
        assert_eq!(cfg.theta, 0.25);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: std::result::Result<ConfigFile, _> = toml::from_str("[case]\nlabel = \"test1\"\nbogus = 1\n");
        assert!(r.is_err());
    }

    #[test]
    fn unknown_label_is_rejected() {
        let file: ConfigFile = toml::from_str("[case]\nlabel = \"test9\"\n").unwrap();
        assert!(RunConfig::from_sections(file).is_err());
    }
}
