//! Offline shift calibration between snapshots and online interpolation of
//! the calibrated shifts over the parameter grid.
//!
//! Calibration enumerates candidate shifts built from detected discontinuity
//! cells, evaluates the L2 mismatch of the shifted snapshot against the
//! target, and keeps the minimizer. `calibrate_shift(a, b)` returns the shift
//! that moves `a` onto `b`; the table stores, per sample `j`, the shift
//! `c(z_j, z_ref)` taking the reference snapshot onto snapshot `j`. Shifts
//! between arbitrary samples compose through the reference:
//! `c(z_j, z_i) = c(z_j, z_ref) - c(z_i, z_ref)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, GridShift, Point};
use crate::sampling::ParamGrid;

/// Cells flagged as discontinuous for one snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscontinuitySet {
    cells: Vec<usize>,
}

impl DiscontinuitySet {
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }
}

/// Jump indicator: cell `i` is flagged iff some face-neighbour difference
/// exceeds `theta` times the largest face jump anywhere in the field.
/// Normalizing by the largest jump (rather than the value range) keeps the
/// indicator effective on numerically diffused fronts, where every per-cell
/// jump is a small fraction of the range; on sharp data the two agree.
/// Fields whose total range is below an absolute floor of 1e-12 produce an
/// empty set.
pub fn detect_discontinuity(u: &Field, theta: f64) -> DiscontinuitySet {
    assert!(theta > 0.0 && theta < 1.0, "threshold must lie in (0, 1), got {theta}");
    let grid = u.grid();
    let vals = u.values();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;
    if !(range > 1e-12) {
        return DiscontinuitySet { cells: Vec::new() };
    }
    let n = grid.n_cells();
    let mut jumps = vec![0.0f64; n];
    let mut max_jump = 0.0f64;
    for (id, jump) in jumps.iter_mut().enumerate() {
        let v = vals[id];
        for axis in 0..grid.dim() {
            for side in [-1i64, 1] {
                if let Some(nb) = grid.neighbor(id, axis, side) {
                    *jump = jump.max((v - vals[nb]).abs());
                }
            }
        }
        max_jump = max_jump.max(*jump);
    }
    let cut = theta * max_jump;
    let cells = (0..n).filter(|&id| jumps[id] > cut).collect();
    DiscontinuitySet { cells }
}

/// Result of one shift calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedShift {
    /// Physical shift (an exact integer multiple of `dx` per axis).
    pub physical: Point,
    pub cells: GridShift,
    /// Set when either discontinuity set was empty and the zero shift was
    /// returned by convention.
    pub degenerate: bool,
}

/// Candidate shifts in integer cells: differences of discontinuity-cell
/// centres, oriented so that the set contains the shift aligning `from`
/// onto `to`. Deduplicated, capped (uniform subsample with a fixed seed) and
/// always containing zero.
fn candidate_shifts(
    u_from: &Field,
    d_from: &DiscontinuitySet,
    d_to: &DiscontinuitySet,
    cap: usize,
) -> Vec<[i64; 2]> {
    let grid = u_from.grid();
    let mut set = std::collections::HashSet::with_capacity(d_from.len() * d_to.len());
    for &ct in d_to.cells() {
        let mt = grid.multi_index(ct);
        for &cf in d_from.cells() {
            let mf = grid.multi_index(cf);
            set.insert([mt[0] as i64 - mf[0] as i64, mt[1] as i64 - mf[1] as i64]);
        }
    }
    let mut cands: Vec<[i64; 2]> = set.into_iter().collect();
    cands.sort_unstable();
    if cands.len() > cap {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7A0_5EED);
        let mut keep = rand::seq::index::sample(&mut rng, cands.len(), cap).into_vec();
        keep.sort_unstable();
        cands = keep.into_iter().map(|k| cands[k]).collect();
    }
    if !cands.contains(&[0, 0]) {
        cands.push([0, 0]);
        cands.sort_unstable();
    }
    cands
}

/// Squared L2 mismatch `|| T[c] u_from - u_to ||^2` (cell-weighted), computed
/// from the support of `u_from` plus the full norm of `u_to`. Values below
/// 1e-12 of the sup norm are treated as zero in the support list; their
/// contribution is far below calibration resolution.
fn shift_objective(
    support_from: &[(usize, f64)],
    u_to: &[f64],
    norm2_to: f64,
    grid: &crate::grid::CartesianGrid,
    cells: [i64; 2],
) -> f64 {
    let shift = GridShift::new(cells);
    let n_x = grid.cells_per_axis() as i64;
    let dim = grid.dim();
    let mut from2 = 0.0;
    let mut cross = 0.0;
    for &(id, v) in support_from {
        let mi = grid.multi_index(id);
        let ix = mi[0] as i64 + shift.cells[0];
        if ix < 0 || ix >= n_x {
            continue;
        }
        let target = if dim == 1 {
            ix as usize
        } else {
            let iy = mi[1] as i64 + shift.cells[1];
            if iy < 0 || iy >= n_x {
                continue;
            }
            (iy * n_x + ix) as usize
        };
        from2 += v * v;
        cross += v * u_to[target];
    }
    (from2 + norm2_to - 2.0 * cross).max(0.0)
}

/// Enumerative shift calibration: returns the candidate minimizing
/// `|| T[c] u_from - u_to ||_{L2}`, i.e. the shift that moves `u_from` onto
/// `u_to`. Ties resolve to the smaller `||c||`, then lexicographically.
/// If either discontinuity set is empty the zero shift is returned with the
/// degenerate flag set.
pub fn calibrate_shift(u_from: &Field, u_to: &Field, theta: f64, cap: usize) -> Result<CalibratedShift> {
    if u_from.grid() != u_to.grid() {
        return Err(Error::config("calibration requires both fields on the same grid".to_string()));
    }
    let grid = *u_from.grid();
    let d_from = detect_discontinuity(u_from, theta);
    let d_to = detect_discontinuity(u_to, theta);
    if d_from.is_empty() || d_to.is_empty() {
        return Ok(CalibratedShift { physical: [0.0, 0.0], cells: GridShift::ZERO, degenerate: true });
    }

    let cands = candidate_shifts(u_from, &d_from, &d_to, cap);

    let tau = 1e-12 * u_from.linf_norm();
    let support_from: Vec<(usize, f64)> = u_from
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tau)
        .map(|(i, &v)| (i, v))
        .collect();
    let norm2_to: f64 = u_to.values().iter().map(|v| v * v).sum();

    let scored: Vec<(f64, [i64; 2])> = cands
        .par_iter()
        .map(|&c| (shift_objective(&support_from, u_to.values(), norm2_to, &grid, c), c))
        .collect();
    let best = scored
        .into_iter()
        .min_by(|(oa, ca), (ob, cb)| {
            oa.partial_cmp(ob)
                .unwrap()
                .then_with(|| {
                    let na = ca[0] * ca[0] + ca[1] * ca[1];
                    let nb = cb[0] * cb[0] + cb[1] * cb[1];
                    na.cmp(&nb)
                })
                .then_with(|| ca.cmp(cb))
        })
        .expect("candidate set contains zero");

    let cells = GridShift::new(best.1);
    Ok(CalibratedShift { physical: cells.to_physical(&grid), cells, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMode {
    /// Calibrate each sample against the reference only and derive cross
    /// terms by additivity; validates a random quarter of the direct pairs.
    ReferenceComposed,
    /// Calibrate every ordered pair directly; the stored table is still the
    /// reference column, the remaining pairs feed the additivity check.
    Pairwise,
}

impl CalibrationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CalibrationMode::ReferenceComposed => "reference-composed",
            CalibrationMode::Pairwise => "pairwise",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "reference-composed" => Ok(CalibrationMode::ReferenceComposed),
            "pairwise" => Ok(CalibrationMode::Pairwise),
            other => Err(Error::config(format!("unknown calibration mode '{other}'"))),
        }
    }
}

/// Shift interpolation scheme over the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftInterp {
    /// Tensor-product Lagrange interpolation through all samples
    /// (barycentric form), degree `(n_t - 1) x (n_mu - 1)`.
    GlobalLagrange,
    /// Bilinear interpolation within the containing parameter element; a
    /// fallback for sample counts where global polynomials oscillate.
    PiecewiseBilinear,
}

impl ShiftInterp {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShiftInterp::GlobalLagrange => "global",
            ShiftInterp::PiecewiseBilinear => "bilinear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(ShiftInterp::GlobalLagrange),
            "bilinear" => Ok(ShiftInterp::PiecewiseBilinear),
            other => Err(Error::config(format!("unknown shift interpolation '{other}'"))),
        }
    }
}

/// Calibrated shifts against a reference sample, in physical length units.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftTable {
    z_ref: usize,
    shifts: Vec<Point>,
    mode: CalibrationMode,
    max_additivity_defect: f64,
    degenerate_count: usize,
}

impl ShiftTable {
    /// Builds a table from raw per-sample shift values `c(z_j, z_ref)`.
    pub fn from_values(z_ref: usize, shifts: Vec<Point>, mode: CalibrationMode) -> Result<Self> {
        if z_ref >= shifts.len() {
            return Err(Error::config(format!(
                "reference index {z_ref} out of range for {} samples",
                shifts.len()
            )));
        }
        Ok(ShiftTable { z_ref, shifts, mode, max_additivity_defect: 0.0, degenerate_count: 0 })
    }

    pub fn z_ref(&self) -> usize {
        self.z_ref
    }

    pub fn mode(&self) -> CalibrationMode {
        self.mode
    }

    pub fn n_samples(&self) -> usize {
        self.shifts.len()
    }

    /// `c(z_j, z_ref)` in physical units.
    pub fn shift_to_ref(&self, j: usize) -> Point {
        self.shifts[j]
    }

    pub fn shifts(&self) -> &[Point] {
        &self.shifts
    }

    /// `c(z_j, z_i)` by composition through the reference.
    pub fn shift_between(&self, j: usize, i: usize) -> Point {
        [self.shifts[j][0] - self.shifts[i][0], self.shifts[j][1] - self.shifts[i][1]]
    }

    pub fn max_additivity_defect(&self) -> f64 {
        self.max_additivity_defect
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate_count
    }

    pub(crate) fn set_validation(&mut self, defect: f64, degenerate: usize) {
        self.max_additivity_defect = defect;
        self.degenerate_count = degenerate;
    }

    /// Interpolated shift `c_m(z, z_i)`: the map `z_j -> c(z_j, z_i)` is
    /// interpolated over all samples and evaluated at `z`. The result is
    /// returned un-snapped; callers project onto the grid where needed.
    pub fn interpolate(
        &self,
        pg: &ParamGrid,
        z: (f64, f64),
        against: usize,
        method: ShiftInterp,
    ) -> Result<Point> {
        let l = self.interpolate_raw(pg, z, method)?;
        let base = self.shifts[against];
        Ok([l[0] - base[0], l[1] - base[1]])
    }

    /// `c_m(z, z_ref)`.
    pub fn interpolate_to_ref(&self, pg: &ParamGrid, z: (f64, f64), method: ShiftInterp) -> Result<Point> {
        self.interpolate(pg, z, self.z_ref, method)
    }

    fn interpolate_raw(&self, pg: &ParamGrid, z: (f64, f64), method: ShiftInterp) -> Result<Point> {
        if self.shifts.len() != pg.n_samples() {
            return Err(Error::config(format!(
                "shift table has {} entries but the parameter grid has {} samples",
                self.shifts.len(),
                pg.n_samples()
            )));
        }
        match method {
            ShiftInterp::GlobalLagrange => {
                if !pg_contains(pg, z) {
                    return Err(Error::OutsideParamDomain(z.0, z.1));
                }
                let bt = lagrange_basis(pg.n_t(), pg.t_range(), z.0);
                let bm = lagrange_basis(pg.n_mu(), pg.mu_range(), z.1);
                let mut out = [0.0, 0.0];
                for (i_mu, wm) in bm.iter().enumerate() {
                    if *wm == 0.0 {
                        continue;
                    }
                    for (i_t, wt) in bt.iter().enumerate() {
                        let w = wm * wt;
                        if w == 0.0 {
                            continue;
                        }
                        let s = self.shifts[pg.sample_index(i_t, i_mu)];
                        out[0] += w * s[0];
                        out[1] += w * s[1];
                    }
                }
                Ok(out)
            }
            ShiftInterp::PiecewiseBilinear => {
                let el = pg.containing_element(z)?;
                let (t1, m1) = el.vertices[0];
                let (t2, m2) = el.vertices[2];
                let s = (z.0 - t1) / (t2 - t1);
                let r = (z.1 - m1) / (m2 - m1);
                let w = [(1.0 - s) * (1.0 - r), s * (1.0 - r), s * r, (1.0 - s) * r];
                let mut out = [0.0, 0.0];
                for (k, &sample) in el.vertex_samples.iter().enumerate() {
                    out[0] += w[k] * self.shifts[sample][0];
                    out[1] += w[k] * self.shifts[sample][1];
                }
                Ok(out)
            }
        }
    }
}

fn pg_contains(pg: &ParamGrid, z: (f64, f64)) -> bool {
    let (t0, t1) = pg.t_range();
    let (m0, m1) = pg.mu_range();
    let tol_t = 1e-12 * (t1 - t0).abs();
    let tol_m = 1e-12 * (m1 - m0).abs();
    z.0 >= t0 - tol_t && z.0 <= t1 + tol_t && z.1 >= m0 - tol_m && z.1 <= m1 + tol_m
}

/// Barycentric Lagrange basis on `n` uniform nodes spanning `range`,
/// evaluated at `x`. Exact at the nodes.
fn lagrange_basis(n: usize, range: (f64, f64), x: f64) -> Vec<f64> {
    let (lo, hi) = range;
    let h = (hi - lo) / (n - 1) as f64;
    let tol = 1e-12 * (hi - lo).abs();
    // Exact-node fast path.
    for k in 0..n {
        let xk = lo + k as f64 * h;
        if (x - xk).abs() <= tol {
            let mut b = vec![0.0; n];
            b[k] = 1.0;
            return b;
        }
    }
    // Uniform-node barycentric weights w_k = (-1)^k C(n-1, k), built by
    // recurrence; the common scale cancels in the normalized form.
    let mut w = vec![0.0; n];
    w[0] = 1.0;
    for k in 1..n {
        w[k] = -w[k - 1] * (n - k) as f64 / k as f64;
    }
    let mut terms = vec![0.0; n];
    let mut denom = 0.0;
    for k in 0..n {
        let xk = lo + k as f64 * h;
        terms[k] = w[k] / (x - xk);
        denom += terms[k];
    }
    terms.iter_mut().for_each(|t| *t /= denom);
    terms
}

/// Calibrates the table of shifts `c(z_j, z_ref)` from the complete snapshot
/// set. Reference-composed mode performs one calibration per sample plus a
/// validation pass over `ceil(m / 4)` random direct pairs; pairwise mode
/// calibrates every ordered pair and validates all of them.
pub fn build_shift_table(
    snapshots: &[&Field],
    pg: &ParamGrid,
    z_ref: usize,
    mode: CalibrationMode,
    theta: f64,
    cap: usize,
) -> Result<ShiftTable> {
    let m = pg.n_samples();
    if snapshots.len() != m {
        return Err(Error::config(format!(
            "expected {m} snapshots matching the parameter grid, got {}",
            snapshots.len()
        )));
    }
    if z_ref >= m {
        return Err(Error::config(format!("reference sample {z_ref} out of range ({m} samples)")));
    }

    let calibrated: Vec<CalibratedShift> = (0..m)
        .into_par_iter()
        .map(|j| {
            if j == z_ref {
                Ok(CalibratedShift { physical: [0.0, 0.0], cells: GridShift::ZERO, degenerate: false })
            } else {
                calibrate_shift(snapshots[z_ref], snapshots[j], theta, cap)
            }
        })
        .collect::<Result<_>>()?;
    let degenerate = calibrated.iter().filter(|c| c.degenerate).count();
    let shifts: Vec<Point> = calibrated.iter().map(|c| c.physical).collect();
    let mut table = ShiftTable::from_values(z_ref, shifts, mode)?;

    let pairs: Vec<(usize, usize)> = match mode {
        CalibrationMode::ReferenceComposed => {
            let count = m.div_ceil(4);
            let mut rng = ChaCha8Rng::seed_from_u64(0xDEC1DE);
            let mut pairs = Vec::with_capacity(count);
            while pairs.len() < count {
                let i = rand::Rng::gen_range(&mut rng, 0..m);
                let j = rand::Rng::gen_range(&mut rng, 0..m);
                if i != j {
                    pairs.push((i, j));
                }
            }
            pairs
        }
        CalibrationMode::Pairwise => {
            let mut pairs = Vec::with_capacity(m * (m - 1));
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        }
    };
    let defect = pairs
        .into_par_iter()
        .map(|(i, j)| -> Result<f64> {
            let direct = calibrate_shift(snapshots[i], snapshots[j], theta, cap)?;
            let composed = table.shift_between(j, i);
            Ok((direct.physical[0] - composed[0])
                .abs()
                .max((direct.physical[1] - composed[1]).abs()))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    table.set_validation(defect, degenerate);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::{run_fom, FluxModel, FomProblem, TimeStepSpec};
    use crate::grid::CartesianGrid;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn box_field(grid: CartesianGrid, lo_cell: usize, width: usize, height: f64) -> Field {
        let mut f = Field::zeros(grid);
        for i in lo_cell..lo_cell + width {
            f.values_mut()[i] = height;
        }
        f
    }

    #[test]
    fn constant_field_has_no_discontinuities() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 16).unwrap();
        let u = Field::new(g, vec![3.0; 16]).unwrap();
        assert!(detect_discontinuity(&u, 0.25).is_empty());
    }

    #[test]
    fn step_flags_both_sides_of_jump() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 4).unwrap();
        let u = Field::new(g, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(detect_discontinuity(&u, 0.5).cells(), &[1, 2]);
    }

    #[test]
    fn flags_invariant_under_positive_scaling() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 32).unwrap();
        let u = Field::from_fn(g, |p| if p[0] > 0.4 && p[0] < 0.7 { 2.0 + p[0] } else { 0.1 * p[0] });
        let scaled = Field::new(g, u.values().iter().map(|v| 7.5 * v).collect()).unwrap();
        assert_eq!(detect_discontinuity(&u, 0.3).cells(), detect_discontinuity(&scaled, 0.3).cells());
    }

    #[test]
    fn identical_fields_calibrate_to_zero() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 64).unwrap();
        let u = box_field(g, 20, 10, 2.0);
        let c = calibrate_shift(&u, &u, 0.25, 20000).unwrap();
        assert_eq!(c.cells, GridShift::ZERO);
        assert!(!c.degenerate);
    }

    #[test]
    fn recovers_seven_cell_shift_exactly() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 64).unwrap();
        let a = box_field(g, 20, 10, 1.0);
        let b = box_field(g, 27, 10, 1.0);
        let c = calibrate_shift(&a, &b, 0.25, 20000).unwrap();
        assert_eq!(c.cells.cells, [7, 0]);
        assert_relative_eq!(c.physical[0], 7.0 * g.dx(), max_relative = 1e-14);
    }

    #[test]
    fn antisymmetric_on_synthetic_pair() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 64).unwrap();
        let a = box_field(g, 20, 10, 1.0);
        let b = box_field(g, 27, 10, 1.0);
        let fwd = calibrate_shift(&a, &b, 0.25, 20000).unwrap();
        let bwd = calibrate_shift(&b, &a, 0.25, 20000).unwrap();
        assert_eq!(fwd.cells.cells[0], -bwd.cells.cells[0]);
    }

    #[test]
    fn degenerate_inputs_return_flagged_zero() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 16).unwrap();
        let flat = Field::new(g, vec![1.0; 16]).unwrap();
        let stepy = Field::new(g, {
            let mut v = vec![0.0; 16];
            v[8] = 1.0;
            v
        })
        .unwrap();
        let c = calibrate_shift(&flat, &stepy, 0.25, 20000).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.cells, GridShift::ZERO);
    }

    #[test]
    fn calibrated_shift_never_beats_zero_baseline() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 100).unwrap();
        let a = Field::from_fn(g, |p| if p[0] > 0.2 && p[0] < 0.45 { 1.0 + p[0] } else { 0.0 });
        let b = Field::from_fn(g, |p| if p[0] > 0.5 && p[0] < 0.75 { 1.3 } else { 0.0 });
        let c = calibrate_shift(&a, &b, 0.25, 20000).unwrap();
        let shifted = a.shifted(c.cells);
        assert!(shifted.l2_distance(&b) <= a.l2_distance(&b) + 1e-14);
    }

    #[test]
    fn two_by_two_advection_table_matches_transport() {
        // Pure advection with speed mu: the shift against z_ref = (0, 1) is
        // mu * t up to one cell.
        let n_x = 120;
        let problem = FomProblem {
            grid: CartesianGrid::new_1d(0.0, 3.0, n_x).unwrap(),
            flux: FluxModel::Advection,
            mu_range: (1.0, 3.0),
            t_final: 0.5,
            step: TimeStepSpec::CflFraction(1.0),
            u0: Arc::new(|p, mu| if p[0] >= 0.5 && p[0] <= 1.0 { mu } else { 0.0 }),
        };
        let pg = ParamGrid::new((0.0, 0.5), (1.0, 3.0), 2, 2).unwrap();
        let mut snaps = Vec::new();
        for i_mu in 0..2 {
            let mu = pg.mu_sample(i_mu);
            let traj = run_fom(&problem, mu, &[0.0, 0.5]).unwrap();
            snaps.push(traj.entries[0].1.clone());
            snaps.push(traj.entries[1].1.clone());
        }
        // flatten to sample order (t fastest): already (t0,mu0), (t1,mu0), ...
        let refs: Vec<&Field> = snaps.iter().collect();
        let table = build_shift_table(&refs, &pg, 0, CalibrationMode::ReferenceComposed, 0.25, 20000).unwrap();
        let dx = problem.grid.dx();
        for j in 0..4 {
            let (t, mu) = pg.sample(j);
            assert!(
                (table.shift_to_ref(j)[0] - mu * t).abs() <= dx + 1e-12,
                "sample {j}: got {}, want {} within {dx}",
                table.shift_to_ref(j)[0],
                mu * t
            );
        }
        assert!(table.max_additivity_defect() <= 2.0 * dx + 1e-12);
        assert_eq!(table.degenerate_count(), 0);
    }

    #[test]
    fn interpolation_reproduces_nodes_exactly() {
        let pg = ParamGrid::new((0.0, 1.0), (0.0, 2.0), 3, 4).unwrap();
        let shifts: Vec<Point> = (0..pg.n_samples()).map(|j| [j as f64 * 0.37 - 1.0, (j * j) as f64 * 0.11]).collect();
        let table = ShiftTable::from_values(0, shifts.clone(), CalibrationMode::ReferenceComposed).unwrap();
        for j in 0..pg.n_samples() {
            let z = pg.sample(j);
            for method in [ShiftInterp::GlobalLagrange, ShiftInterp::PiecewiseBilinear] {
                let got = table.interpolate(&pg, z, 0, method).unwrap();
                assert_relative_eq!(got[0], shifts[j][0] - shifts[0][0], epsilon = 1e-12);
                assert_relative_eq!(got[1], shifts[j][1] - shifts[0][1], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_affine_tables() {
        let pg = ParamGrid::new((0.0, 1.0), (1.0, 3.0), 4, 3).unwrap();
        let affine = |t: f64, mu: f64| [0.3 * t - 0.8 * mu + 0.1, 1.1 * t + 0.25 * mu];
        let shifts: Vec<Point> = (0..pg.n_samples())
            .map(|j| {
                let (t, mu) = pg.sample(j);
                affine(t, mu)
            })
            .collect();
        let table = ShiftTable::from_values(0, shifts, CalibrationMode::ReferenceComposed).unwrap();
        for k in 0..50 {
            let z = (k as f64 / 49.0, 1.0 + 2.0 * ((k * 13 % 50) as f64 / 49.0));
            let want = affine(z.0, z.1);
            let base = affine(0.0, 1.0);
            for method in [ShiftInterp::GlobalLagrange, ShiftInterp::PiecewiseBilinear] {
                let got = table.interpolate(&pg, z, 0, method).unwrap();
                assert_relative_eq!(got[0], want[0] - base[0], epsilon = 1e-11);
                assert_relative_eq!(got[1], want[1] - base[1], epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn element_centre_averages_corners_on_two_by_two() {
        let pg = ParamGrid::new((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let shifts = vec![[1.0, 0.0], [2.0, 0.0], [5.0, 0.0], [10.0, 0.0]];
        let table = ShiftTable::from_values(0, shifts, CalibrationMode::ReferenceComposed).unwrap();
        let got = table.interpolate_raw(&pg, (0.5, 0.5), ShiftInterp::GlobalLagrange).unwrap();
        assert_relative_eq!(got[0], (1.0 + 2.0 + 5.0 + 10.0) / 4.0, epsilon = 1e-13);
    }

    #[test]
    fn interpolation_rejects_out_of_domain_targets() {
        let pg = ParamGrid::new((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let table = ShiftTable::from_values(0, vec![[0.0, 0.0]; 4], CalibrationMode::ReferenceComposed).unwrap();
        for method in [ShiftInterp::GlobalLagrange, ShiftInterp::PiecewiseBilinear] {
            assert!(table.interpolate(&pg, (1.5, 0.5), 0, method).is_err());
        }
    }
}
