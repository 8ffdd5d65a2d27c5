//! Error and runtime metrics plus CSV report emission.

use std::path::Path;

use crate::config::CaseLabel;
use crate::error::{Error, Result};
use crate::grid::Field;

/// Relative errors above this flag a run as unstable in the reports.
pub const UNSTABLE_ERROR_THRESHOLD: f64 = 1e6;

/// Relative discrete-L2 error `||u_ref - u_m|| / ||u_ref||`.
pub fn compute_error(u_ref: &Field, u_m: &Field) -> Result<f64> {
    let denom = u_ref.l2_norm();
    if !(denom > 0.0) {
        return Err(Error::ZeroReferenceNorm);
    }
    Ok(u_ref.l2_distance(u_m) / denom)
}

/// The compared reduced-model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomVariant {
    /// Shifted snapshots, online-adaptive reduced mesh.
    AdpSs,
    /// Shifted snapshots, fixed offline reduced mesh.
    NAdpSs,
    /// Shifted snapshots, full mesh.
    Ss,
    /// Raw snapshots (linear space), full mesh.
    S,
}

impl RomVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            RomVariant::AdpSs => "Adp-SS",
            RomVariant::NAdpSs => "N-Adp-SS",
            RomVariant::Ss => "SS",
            RomVariant::S => "S",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adp-ss" | "adp" => Ok(RomVariant::AdpSs),
            "n-adp-ss" | "nadp-ss" | "nadp" => Ok(RomVariant::NAdpSs),
            "ss" => Ok(RomVariant::Ss),
            "s" => Ok(RomVariant::S),
            other => Err(Error::config(format!("unknown variant '{other}'"))),
        }
    }

    pub fn uses_reduced_mesh(&self) -> bool {
        matches!(self, RomVariant::AdpSs | RomVariant::NAdpSs)
    }

    pub fn all() -> [RomVariant; 4] {
        [RomVariant::AdpSs, RomVariant::NAdpSs, RomVariant::Ss, RomVariant::S]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TargetError {
    pub t: f64,
    pub mu: f64,
    pub e: f64,
}

/// Per-target relative errors and their maximum over the target set.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub case: CaseLabel,
    pub variant: RomVariant,
    pub per_target: Vec<TargetError>,
    pub e_max: f64,
    pub unstable: bool,
}

impl ErrorReport {
    pub fn from_targets(case: CaseLabel, variant: RomVariant, per_target: Vec<TargetError>) -> Self {
        let mut e_max = 0.0f64;
        let mut unstable = false;
        for te in &per_target {
            if te.e.is_finite() {
                e_max = e_max.max(te.e);
            } else {
                e_max = f64::INFINITY;
            }
            if !te.e.is_finite() || te.e > UNSTABLE_ERROR_THRESHOLD {
                unstable = true;
            }
        }
        ErrorReport { case, variant, per_target, e_max, unstable }
    }

    /// Largest error among targets at parameter `mu`.
    pub fn max_at_mu(&self, mu: f64) -> f64 {
        self.per_target
            .iter()
            .filter(|te| te.mu == mu)
            .map(|te| te.e)
            .fold(0.0, |m, e| if e.is_nan() { f64::INFINITY } else { m.max(e) })
    }
}

/// Average online cost per target and its phase split, in seconds.
#[derive(Debug, Clone, Default)]
pub struct RuntimeReport {
    /// Average total online time per target (Eq.-style mean over the target
    /// set), including initialization.
    pub c_avg: f64,
    pub c_adapt: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub c_ls: f64,
    /// Average per-step online time, initialization excluded.
    pub per_step_avg: f64,
    /// Average reference (full-order) time per target where measured.
    pub fom_avg: Option<f64>,
    /// Reduced-mesh size the run was configured with (total cells for
    /// full-mesh variants).
    pub n_used: usize,
}

/// One CSV row of an experiment.
#[derive(Debug, Clone)]
pub struct ExperimentRow {
    pub case: CaseLabel,
    pub variant: RomVariant,
    pub n_x: usize,
    pub n_t: usize,
    pub n_mu: usize,
    pub n: usize,
    pub n_pct: f64,
    pub e_max: f64,
    pub c: f64,
    pub c_adapt: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub c_ls: f64,
    pub unstable: bool,
}

pub fn experiment_row(
    case: CaseLabel,
    n_x: usize,
    n_t: usize,
    n_mu: usize,
    n_cells: usize,
    errors: &ErrorReport,
    runtime: &RuntimeReport,
) -> ExperimentRow {
    ExperimentRow {
        case,
        variant: errors.variant,
        n_x,
        n_t,
        n_mu,
        n: runtime.n_used,
        n_pct: 100.0 * runtime.n_used as f64 / n_cells as f64,
        e_max: errors.e_max,
        c: runtime.c_avg,
        c_adapt: runtime.c_adapt,
        c_a: runtime.c_a,
        c_b: runtime.c_b,
        c_ls: runtime.c_ls,
        unstable: errors.unstable,
    }
}

const CSV_HEADER: &str = "case,variant,N_x,N_t,N_mu,n,n_pct,E,C,C_adapt,C_A,C_b,C_ls,unstable_flag";

fn csv_line(r: &ExperimentRow) -> String {
    format!(
        "{},{},{},{},{},{},{:.4},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}",
        r.case.as_str(),
        r.variant.as_str(),
        r.n_x,
        r.n_t,
        r.n_mu,
        r.n,
        r.n_pct,
        r.e_max,
        r.c,
        r.c_adapt,
        r.c_a,
        r.c_b,
        r.c_ls,
        if r.unstable { 1 } else { 0 }
    )
}

fn write_csv(path: &Path, rows: &[&ExperimentRow]) -> Result<()> {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&csv_line(r));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes `report.csv` plus the plot-data files `error_vs_n.csv` (rows sorted
/// by variant then mesh size) and `error_vs_runtime.csv` (sorted by variant
/// then runtime), all with the same schema.
pub fn emit_report(rows: &[ExperimentRow], dir: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::config("no experiment rows to report".to_string()));
    }
    std::fs::create_dir_all(dir)?;
    let all: Vec<&ExperimentRow> = rows.iter().collect();
    write_csv(&dir.join("report.csv"), &all)?;

    let mut by_n = all.clone();
    by_n.sort_by(|a, b| a.variant.as_str().cmp(b.variant.as_str()).then(a.n.cmp(&b.n)));
    write_csv(&dir.join("error_vs_n.csv"), &by_n)?;

    let mut by_c = all;
    by_c.sort_by(|a, b| {
        a.variant
            .as_str()
            .cmp(b.variant.as_str())
            .then(a.c.partial_cmp(&b.c).unwrap_or(std::cmp::Ordering::Equal))
    });
    write_csv(&dir.join("error_vs_runtime.csv"), &by_c)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CartesianGrid;

    fn field(vals: Vec<f64>) -> Field {
        let g = CartesianGrid::new_1d(0.0, 1.0, vals.len()).unwrap();
        Field::new(g, vals).unwrap()
    }

    #[test]
    fn identical_fields_have_zero_error() {
        let u = field(vec![1.0, 2.0, -0.5, 0.0]);
        assert_eq!(compute_error(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn zero_approximation_has_unit_error() {
        let u = field(vec![1.0, 2.0, -0.5, 3.0]);
        let z = field(vec![0.0; 4]);
        assert_eq!(compute_error(&u, &z).unwrap(), 1.0);
    }

    #[test]
    fn orthogonal_error_example() {
        let u = field(vec![1.0, 0.0]);
        let v = field(vec![1.0, 1.0]);
        assert_eq!(compute_error(&u, &v).unwrap(), 1.0);
    }

    #[test]
    fn zero_reference_is_rejected() {
        let z = field(vec![0.0; 4]);
        assert!(matches!(compute_error(&z, &z), Err(Error::ZeroReferenceNorm)));
    }

    #[test]
    fn unstable_flag_tracks_threshold_and_nan() {
        let targets = vec![
            TargetError { t: 0.0, mu: 1.0, e: 0.5 },
            TargetError { t: 0.1, mu: 1.0, e: 2e6 },
        ];
        let rep = ErrorReport::from_targets(CaseLabel::Test1, RomVariant::NAdpSs, targets);
        assert!(rep.unstable);
        let rep2 = ErrorReport::from_targets(
            CaseLabel::Test1,
            RomVariant::Ss,
            vec![TargetError { t: 0.0, mu: 1.0, e: f64::NAN }],
        );
        assert!(rep2.unstable);
        assert!(rep2.e_max.is_infinite());
    }

    #[test]
    fn empty_report_is_a_precondition_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&[], dir.path()).is_err());
    }

    #[test]
    fn single_row_report_has_header_and_row() {
        let dir = tempfile::tempdir().unwrap();
        let row = ExperimentRow {
            case: CaseLabel::Test1,
            variant: RomVariant::Ss,
            n_x: 100,
            n_t: 2,
            n_mu: 2,
            n: 100,
            n_pct: 100.0,
            e_max: 0.11,
            c: 0.5,
            c_adapt: 0.0,
            c_a: 0.1,
            c_b: 0.3,
            c_ls: 0.05,
            unstable: false,
        };
        emit_report(&[row], dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("case,variant"));
        assert!(lines[1].starts_with("test1,SS,100,2,2,100,100.0000,"));
        assert!(dir.path().join("error_vs_n.csv").exists());
        assert!(dir.path().join("error_vs_runtime.csv").exists());
    }

    #[test]
    fn variant_parsing_round_trips() {
        for v in RomVariant::all() {
            assert_eq!(RomVariant::parse(v.as_str()).unwrap(), v);
        }
        assert!(RomVariant::parse("bogus").is_err());
    }
}
