//! Residual snapshot collection, reduced-mesh selection, the shifted-residual
//! pipeline, and online mesh adaptation.
//!
//! Offline, residuals of full-mesh reduced runs are collected as (sparse)
//! columns. The non-adaptive route selects the cells with the largest
//! row-norms of that matrix directly; the adaptive route first shifts every
//! residual back to a reference parameter, selects on the shifted matrix, and
//! then translates the selected cells online with the interpolated shift of
//! the target parameter.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fv::FluxModel;
use crate::grid::{CartesianGrid, GridShift, Point};
use crate::rom::{self, BasisMode, MeshProvider, RomRunInputs, SnapshotSet};
use crate::sampling::ParamGrid;
use crate::shifts::{ShiftInterp, ShiftTable};

/// Storage threshold: entries at or below this magnitude are dropped from the
/// sparse columns. Selection results are unchanged by construction.
const SPARSE_EPS: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ResidualColumn {
    pub t: f64,
    pub mu: f64,
    /// `(cell id, value)` sorted by cell id.
    pub entries: Vec<(u32, f64)>,
}

/// Residual snapshot matrix, stored column-compressed.
#[derive(Debug, Clone)]
pub struct ResidualSnapshots {
    n_cells: usize,
    shifted: bool,
    columns: Vec<ResidualColumn>,
}

impl ResidualSnapshots {
    pub fn new(n_cells: usize) -> Self {
        ResidualSnapshots { n_cells, shifted: false, columns: Vec::new() }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    pub fn columns(&self) -> &[ResidualColumn] {
        &self.columns
    }

    pub fn push_dense_column(&mut self, t: f64, mu: f64, values: &[f64]) {
        debug_assert_eq!(values.len(), self.n_cells);
        let entries: Vec<(u32, f64)> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > SPARSE_EPS)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        self.columns.push(ResidualColumn { t, mu, entries });
    }

    /// Dense view of one column (test and plotting helper).
    pub fn dense_column(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cells];
        for &(i, v) in &self.columns[k].entries {
            out[i as usize] = v;
        }
        out
    }

    /// Per-row l2 norms over all columns.
    pub fn row_norms(&self) -> Vec<f64> {
        let mut acc = vec![0.0f64; self.n_cells];
        for col in &self.columns {
            for &(i, v) in &col.entries {
                acc[i as usize] += v * v;
            }
        }
        acc.iter_mut().for_each(|v| *v = v.sqrt());
        acc
    }

    /// Hash of the matrix content; identifies the source of a selection.
    pub fn source_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_cells as u64).to_le_bytes());
        h.update([self.shifted as u8]);
        for col in &self.columns {
            h.update(col.t.to_le_bytes());
            h.update(col.mu.to_le_bytes());
            for &(i, v) in &col.entries {
                h.update(i.to_le_bytes());
                h.update(v.to_le_bytes());
            }
        }
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Runs the full-mesh shifted-snapshot reduced model at each training
/// parameter and records the step residuals `U_m(t_{k+1}) - b(t_k)` for
/// steps `k >= 1`, columns ordered run-major and time-minor.
#[allow(clippy::too_many_arguments)]
pub fn collect_residual_snapshots(
    store: &SnapshotSet,
    table: &ShiftTable,
    flux: &FluxModel,
    mu_bars: &[f64],
    t_end: f64,
    dt: f64,
    interp: ShiftInterp,
    u0: &(dyn Fn(Point, f64) -> f64 + Sync),
) -> Result<ResidualSnapshots> {
    let n = store.grid().n_cells();
    let mut snaps = ResidualSnapshots::new(n);
    for (run_idx, &mu_bar) in mu_bars.iter().enumerate() {
        let mut sink = |k: usize, t: f64, residual: &[f64]| {
            if k >= 2 {
                snaps.push_dense_column(t, mu_bar, residual);
            }
        };
        rom::run_rom(
            RomRunInputs {
                store,
                table,
                flux,
                mu: mu_bar,
                t_end,
                dt,
                mode: BasisMode::Shifted,
                interp,
                mesh: MeshProvider::Full,
                u0: &|p| u0(p, mu_bar),
            },
            Some(&mut sink),
        )
        .map_err(|e| Error::TrainingRun { index: run_idx, source: Box::new(e) })?;
    }
    Ok(snaps)
}

/// Shifts every column back to the reference parameter:
/// column `(t, mu)` becomes `T[-c_m(t, mu, z_ref)]` applied to itself.
pub fn shift_residuals(
    s: &ResidualSnapshots,
    table: &ShiftTable,
    pg: &ParamGrid,
    grid: &CartesianGrid,
    interp: ShiftInterp,
) -> Result<ResidualSnapshots> {
    let mut out = ResidualSnapshots { n_cells: s.n_cells, shifted: true, columns: Vec::with_capacity(s.columns.len()) };
    for col in &s.columns {
        let c = table.interpolate_to_ref(pg, (col.t, col.mu), interp)?;
        let shift = grid.snap_shift([-c[0], -c[1]]);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(col.entries.len());
        for &(i, v) in &col.entries {
            // entry i moves to i + shift (T[c] pulls from id - c).
            let mi = grid.multi_index(i as usize);
            let nx = grid.cells_per_axis() as i64;
            let ix = mi[0] as i64 + shift.cells[0];
            if ix < 0 || ix >= nx {
                continue;
            }
            let target = if grid.dim() == 1 {
                ix as usize
            } else {
                let iy = mi[1] as i64 + shift.cells[1];
                if iy < 0 || iy >= nx {
                    continue;
                }
                (iy * nx + ix) as usize
            };
            entries.push((target as u32, v));
        }
        entries.sort_unstable_by_key(|e| e.0);
        out.columns.push(ResidualColumn { t: col.t, mu: col.mu, entries });
    }
    Ok(out)
}

/// Reduced-mesh selection: the `n` cells with the largest residual row-norms,
/// ordered by descending norm with ties broken by ascending cell id.
pub fn select_reduced_mesh(s: &ResidualSnapshots, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > s.n_cells {
        return Err(Error::config(format!(
            "reduced mesh size {n} out of range (1..={})",
            s.n_cells
        )));
    }
    let norms = s.row_norms();
    let mut idx: Vec<usize> = (0..s.n_cells).collect();
    idx.sort_unstable_by(|&a, &b| {
        norms[b].partial_cmp(&norms[a]).unwrap().then_with(|| a.cmp(&b))
    });
    idx.truncate(n);
    Ok(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshProvenance {
    Offline,
    Adapted,
}

/// An ordered reduced mesh with its provenance and the shift applied to it.
#[derive(Debug, Clone)]
pub struct ReducedMesh {
    pub ids: Vec<usize>,
    pub provenance: MeshProvenance,
    pub shift: GridShift,
}

impl ReducedMesh {
    pub fn offline(ids: Vec<usize>) -> Self {
        ReducedMesh { ids, provenance: MeshProvenance::Offline, shift: GridShift::ZERO }
    }
}

/// Translates the offline mesh to the target parameter: each cell centre is
/// moved by the snapped interpolated shift `c_m(z, z_ref)` and the cell
/// containing the moved point is looked up; centres leaving the domain are
/// dropped. O(n).
pub fn adapt_reduced_mesh(
    e_off: &[usize],
    table: &ShiftTable,
    pg: &ParamGrid,
    grid: &CartesianGrid,
    z: (f64, f64),
    interp: ShiftInterp,
) -> Result<ReducedMesh> {
    if e_off.is_empty() {
        return Err(Error::HyperReduction("offline reduced mesh is empty".to_string()));
    }
    let c = table.interpolate_to_ref(pg, z, interp)?;
    let shift = grid.snap_shift(c);
    let offset = shift.to_physical(grid);
    let mut ids = Vec::with_capacity(e_off.len());
    for &id in e_off {
        let centre = grid.cell_centre(id)?;
        let moved = [centre[0] + offset[0], centre[1] + offset[1]];
        if let Ok(target) = grid.locate(moved) {
            ids.push(target);
        }
    }
    // A uniform translation of mid-cell points cannot collide distinct cells,
    // so no dedup pass is needed on this path (the general-transform hook
    // dedups).
    if ids.is_empty() {
        return Err(Error::HyperReduction(format!(
            "adapted mesh is empty: shift {:?} pushed every centre outside the domain",
            shift.cells
        )));
    }
    Ok(ReducedMesh { ids, provenance: MeshProvenance::Adapted, shift })
}

/// Extension hook: adapts the mesh with an arbitrary centre transform.
/// Off-domain images are dropped; duplicates keep their first occurrence.
pub fn adapt_reduced_mesh_with(
    e_off: &[usize],
    grid: &CartesianGrid,
    transform: impl Fn(Point) -> Point,
) -> Result<ReducedMesh> {
    if e_off.is_empty() {
        return Err(Error::HyperReduction("offline reduced mesh is empty".to_string()));
    }
    let mut seen = std::collections::HashSet::with_capacity(e_off.len());
    let mut ids = Vec::with_capacity(e_off.len());
    for &id in e_off {
        let centre = grid.cell_centre(id)?;
        if let Ok(target) = grid.locate(transform(centre)) {
            if seen.insert(target) {
                ids.push(target);
            }
        }
    }
    if ids.is_empty() {
        return Err(Error::HyperReduction("transformed mesh is empty".to_string()));
    }
    Ok(ReducedMesh { ids, provenance: MeshProvenance::Adapted, shift: GridShift::ZERO })
}
