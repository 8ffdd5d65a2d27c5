//! Cartesian mesh geometry, cell indexing, the discrete shift operator and
//! stencil halos.
//!
//! Cells are flattened 0-based row-major with the first spatial axis fastest:
//! in 2D, `id = iy * n_x + ix`. Every axis shares the same spacing `dx` and
//! per-axis cell count `n_x`, so the domain is an interval (1D) or a square
//! (2D).

use crate::error::{Error, Result};

/// Spatial point. In 1D only the first component is meaningful; the second is
/// kept at zero.
pub type Point = [f64; 2];

/// Uniform Cartesian mesh over an interval or square domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianGrid {
    dim: usize,
    origin: [f64; 2],
    extent: f64,
    n_x: usize,
    dx: f64,
}

impl CartesianGrid {
    pub fn new_1d(origin: f64, extent: f64, n_x: usize) -> Result<Self> {
        Self::new(1, [origin, 0.0], extent, n_x)
    }

    pub fn new_2d(origin: [f64; 2], extent: f64, n_x: usize) -> Result<Self> {
        Self::new(2, origin, extent, n_x)
    }

    fn new(dim: usize, origin: [f64; 2], extent: f64, n_x: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if n_x < 2 {
            return Err(Error::config(format!("cells per axis must be at least 2, got {n_x}")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::config(format!("grid extent must be positive, got {extent}")));
        }
        Ok(Self { dim, origin, extent, n_x, dx: extent / n_x as f64 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn cells_per_axis(&self) -> usize {
        self.n_x
    }

    /// Total cell count: `n_x^dim`.
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_x.pow(self.dim as u32)
    }

    #[inline]
    pub fn origin(&self) -> Point {
        self.origin
    }

    #[inline]
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Decodes a flat id into per-axis indices, first axis fastest.
    #[inline]
    pub fn multi_index(&self, id: usize) -> [usize; 2] {
        if self.dim == 1 {
            [id, 0]
        } else {
            [id % self.n_x, id / self.n_x]
        }
    }

    /// Inverse of [`multi_index`](Self::multi_index).
    #[inline]
    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        if self.dim == 1 {
            mi[0]
        } else {
            mi[1] * self.n_x + mi[0]
        }
    }

    /// Centre of cell `id`: `origin + (multi_index + 0.5) * dx` per axis.
    pub fn cell_centre(&self, id: usize) -> Result<Point> {
        let n = self.n_cells();
        if id >= n {
            return Err(Error::IndexOutOfRange { id, n });
        }
        let mi = self.multi_index(id);
        let mut p = [0.0; 2];
        for axis in 0..self.dim {
            p[axis] = self.origin[axis] + (mi[axis] as f64 + 0.5) * self.dx;
        }
        Ok(p)
    }

    /// Flat id of the cell whose half-open box `[origin + i*dx, origin + (i+1)*dx)`
    /// contains `x`. A point exactly on the far boundary is clamped into the
    /// last cell so that lookup is the inverse of `cell_centre` on all centres.
    pub fn locate(&self, x: Point) -> Result<usize> {
        let mut mi = [0usize; 2];
        for axis in 0..self.dim {
            let hi = self.origin[axis] + self.extent;
            if x[axis] < self.origin[axis] || x[axis] > hi {
                return Err(Error::OutsideDomain(x[0], x[1]));
            }
            let rel = (x[axis] - self.origin[axis]) / self.dx;
            let mut i = rel.floor() as i64;
            if i >= self.n_x as i64 {
                // exact right boundary (or a rounding hair past it)
                i = self.n_x as i64 - 1;
            }
            mi[axis] = i.max(0) as usize;
        }
        Ok(self.flat_index(mi))
    }

    /// Projects a physical shift onto the grid: `floor(c / dx)` cells per axis.
    pub fn snap_shift(&self, c: Point) -> GridShift {
        let mut cells = [0i64; 2];
        for axis in 0..self.dim {
            cells[axis] = (c[axis] / self.dx).floor() as i64;
        }
        GridShift { cells }
    }

    /// Face neighbour of `id` along `axis` (`side` is -1 or +1); `None` past
    /// the boundary.
    #[inline]
    pub fn neighbor(&self, id: usize, axis: usize, side: i64) -> Option<usize> {
        let mi = self.multi_index(id);
        let i = mi[axis] as i64 + side;
        if i < 0 || i >= self.n_x as i64 {
            return None;
        }
        let mut out = mi;
        out[axis] = i as usize;
        Some(self.flat_index(out))
    }

    /// Cell that the shift operator reads from when filling cell `id`:
    /// `T[c]v(x) = v(x - c)`, so cell `id` pulls from `multi_index(id) - c`.
    /// `None` when the source lies outside the domain (zero fill).
    #[inline]
    pub fn shift_source(&self, id: usize, shift: GridShift) -> Option<usize> {
        let mi = self.multi_index(id);
        let mut src = [0usize; 2];
        for axis in 0..self.dim {
            let i = mi[axis] as i64 - shift.cells[axis];
            if i < 0 || i >= self.n_x as i64 {
                return None;
            }
            src[axis] = i as usize;
        }
        Some(self.flat_index(src))
    }

    /// `ids` together with their von-Neumann face neighbours, clipped at the
    /// boundary, in ascending order without duplicates.
    pub fn halo(&self, ids: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity((2 * self.dim + 1) * ids.len());
        for &id in ids {
            out.push(id);
            for axis in 0..self.dim {
                for side in [-1i64, 1] {
                    if let Some(nb) = self.neighbor(id, axis, side) {
                        out.push(nb);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Shift by an integer number of cells per axis (the projection of a physical
/// shift onto the mesh).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GridShift {
    pub cells: [i64; 2],
}

impl GridShift {
    pub const ZERO: GridShift = GridShift { cells: [0, 0] };

    pub fn new(cells: [i64; 2]) -> Self {
        GridShift { cells }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.cells == [0, 0]
    }

    pub fn to_physical(self, grid: &CartesianGrid) -> Point {
        [self.cells[0] as f64 * grid.dx(), self.cells[1] as f64 * grid.dx()]
    }
}

impl std::ops::Add for GridShift {
    type Output = GridShift;
    fn add(self, rhs: GridShift) -> GridShift {
        GridShift { cells: [self.cells[0] + rhs.cells[0], self.cells[1] + rhs.cells[1]] }
    }
}

impl std::ops::Neg for GridShift {
    type Output = GridShift;
    fn neg(self) -> GridShift {
        GridShift { cells: [-self.cells[0], -self.cells[1]] }
    }
}

/// Finite-volume cell averages tied to a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: CartesianGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: CartesianGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::config(format!(
                "field length {} does not match grid cell count {}",
                values.len(),
                grid.n_cells()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: CartesianGrid) -> Self {
        let n = grid.n_cells();
        Field { grid, values: vec![0.0; n] }
    }

    /// Midpoint-rule projection: cell value = `f(cell centre)`.
    pub fn from_fn(grid: CartesianGrid, f: impl Fn(Point) -> f64) -> Self {
        let n = grid.n_cells();
        let mut values = Vec::with_capacity(n);
        for id in 0..n {
            let c = grid.cell_centre(id).expect("id in range");
            values.push(f(c));
        }
        Field { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Swaps the backing storage with `other` (lengths must match the grid).
    pub(crate) fn swap_values(&mut self, other: &mut Vec<f64>) {
        debug_assert_eq!(other.len(), self.grid.n_cells());
        std::mem::swap(&mut self.values, other);
    }

    /// Discrete L2 norm: `sqrt(dx^dim * sum v_i^2)`.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.dx().powi(self.grid.dim() as i32);
        (w * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm of `self - other` (fields must share the grid).
    pub fn l2_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let w = self.grid.dx().powi(self.grid.dim() as i32);
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (w * s).sqrt()
    }

    /// The shift operator `T[c]`: output cell `i` holds the value at
    /// `cell_centre(i) - c`, and zero where that point falls outside the
    /// domain.
    pub fn shifted(&self, shift: GridShift) -> Field {
        if shift.is_zero() {
            return self.clone();
        }
        let n = self.grid.n_cells();
        let mut values = vec![0.0; n];
        for (id, out) in values.iter_mut().enumerate() {
            if let Some(src) = self.grid.shift_source(id, shift) {
                *out = self.values[src];
            }
        }
        Field { grid: self.grid, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_2d_4() -> CartesianGrid {
        CartesianGrid::new_2d([0.0, 0.0], 1.0, 4).unwrap()
    }

    #[test]
    fn centre_of_first_cell_1d() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 4).unwrap();
        let c = g.cell_centre(0).unwrap();
        assert_eq!(c[0], 0.125);
    }

    #[test]
    fn centre_decodes_row_major_first_axis_fastest() {
        // id 6 on a 4x4 grid decodes as (ix, iy) = (2, 1).
        let g = grid_2d_4();
        let c = g.cell_centre(6).unwrap();
        assert_eq!(c, [0.625, 0.375]);
    }

    #[test]
    fn centre_out_of_range_errors() {
        let g = grid_2d_4();
        assert!(matches!(g.cell_centre(16), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn locate_first_cell() {
        let g = grid_2d_4();
        assert_eq!(g.locate([0.1, 0.1]).unwrap(), 0);
    }

    #[test]
    fn locate_inverts_centre_example() {
        let g = grid_2d_4();
        assert_eq!(g.locate([0.625, 0.375]).unwrap(), 6);
    }

    #[test]
    fn locate_outside_domain() {
        let g = grid_2d_4();
        assert!(matches!(g.locate([-0.1, 0.5]), Err(Error::OutsideDomain(..))));
    }

    #[test]
    fn locate_clamps_far_boundary() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 4).unwrap();
        assert_eq!(g.locate([1.0, 0.0]).unwrap(), 3);
    }

    #[test]
    fn locate_supports_nonzero_origin() {
        let g = CartesianGrid::new_2d([-0.5, -0.5], 3.0, 6).unwrap();
        for id in 0..g.n_cells() {
            let c = g.cell_centre(id).unwrap();
            assert_eq!(g.locate(c).unwrap(), id);
        }
    }

    #[test]
    fn snap_shift_floors() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 4).unwrap();
        assert_eq!(g.snap_shift([0.0, 0.0]).cells, [0, 0]);
        assert_eq!(g.snap_shift([0.26, 0.0]).cells, [1, 0]);
        // floor(-1.04) = -2: snapping is asymmetric for negative shifts.
        assert_eq!(g.snap_shift([-0.26, 0.0]).cells, [-2, 0]);
    }

    #[test]
    fn halo_1d() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 10).unwrap();
        assert_eq!(g.halo(&[5]), vec![4, 5, 6]);
        assert_eq!(g.halo(&[0]), vec![0, 1]);
    }

    #[test]
    fn halo_2d_face_neighbors() {
        let g = grid_2d_4();
        assert_eq!(g.halo(&[6]), vec![2, 5, 6, 7, 10]);
    }

    #[test]
    fn shift_zero_is_identity() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 4).unwrap();
        let u = Field::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(u.shifted(GridShift::ZERO).values(), u.values());
    }

    #[test]
    fn shift_right_one_cell_zero_fills() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 4).unwrap();
        let u = Field::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = u.shifted(GridShift::new([1, 0]));
        assert_eq!(v.values(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn shift_matches_locate_route() {
        // The integer-index implementation agrees with the definition via
        // cell_centre and locate.
        let g = CartesianGrid::new_2d([-0.5, -0.5], 3.0, 9).unwrap();
        let u = Field::from_fn(g, |p| (7.3 * p[0]).sin() + 0.3 * p[1]);
        for shift in [GridShift::new([2, -1]), GridShift::new([-3, 4]), GridShift::new([9, 0])] {
            let v = u.shifted(shift);
            let c_phys = shift.to_physical(&g);
            for id in 0..g.n_cells() {
                let centre = g.cell_centre(id).unwrap();
                let moved = [centre[0] - c_phys[0], centre[1] - c_phys[1]];
                let expect = match g.locate(moved) {
                    Ok(src) => u.values()[src],
                    Err(_) => 0.0,
                };
                assert_eq!(v.values()[id], expect, "cell {id} shift {shift:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn locate_centre_round_trip(n_x in 2usize..40, origin in -3.0f64..3.0, extent in 0.1f64..10.0) {
            let g = CartesianGrid::new_1d(origin, extent, n_x).unwrap();
            for id in 0..g.n_cells() {
                prop_assert_eq!(g.locate(g.cell_centre(id).unwrap()).unwrap(), id);
            }
        }

        #[test]
        fn shift_composition_on_interior_support(offset in 1i64..4, a in -2i64..3, b in -2i64..3) {
            // A compactly supported bump stays interior under both the
            // intermediate and the combined shift, so T[a]T[b] = T[a+b].
            let g = CartesianGrid::new_1d(0.0, 1.0, 32).unwrap();
            let mut vals = vec![0.0; 32];
            for (k, v) in vals.iter_mut().enumerate().skip(12 + offset as usize).take(3) {
                *v = (k as f64).sin() + 2.0;
            }
            let u = Field::new(g, vals).unwrap();
            let sa = GridShift::new([a, 0]);
            let sb = GridShift::new([b, 0]);
            let two_step = u.shifted(sb).shifted(sa);
            let one_step = u.shifted(sa + sb);
            prop_assert_eq!(two_step.values(), one_step.values());
        }

        #[test]
        fn shift_never_grows_sup_norm(sx in -40i64..40, sy in -40i64..40, seed in 0u64..1000) {
            let g = CartesianGrid::new_2d([0.0, 0.0], 1.0, 8).unwrap();
            let u = Field::from_fn(g, |p| ((seed as f64) + 31.0 * p[0] + 17.0 * p[1]).sin());
            let v = u.shifted(GridShift::new([sx, sy]));
            prop_assert!(v.linf_norm() <= u.linf_norm() + 1e-15);
        }

        #[test]
        fn halo_contains_ids_and_is_bounded(ids in proptest::collection::btree_set(0usize..64, 1..10)) {
            let g = CartesianGrid::new_2d([0.0, 0.0], 1.0, 8).unwrap();
            let ids: Vec<usize> = ids.into_iter().collect();
            let h = g.halo(&ids);
            for id in &ids {
                prop_assert!(h.contains(id));
            }
            prop_assert!(h.len() <= (2 * g.dim() + 1) * ids.len());
            prop_assert!(h.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
