//! The shipped benchmark cases and their projections.
//!
//! test1: 1D linear advection with parametrized speed on [0, 3],
//!        box initial data of height mu on [0.5, 1], D = [0, 0.5], P = [1, 3].
//! test2: a moving, amplitude-decaying box on [-0.5, 2.5]^2 given in closed
//!        form; the reference is its finite-volume projection (no PDE).
//! test3: 2D collisionless radiative transport at unit speed in direction
//!        (cos mu, sin mu) on [-1, 1]^2, disc initial data, P = [0, 2 pi].

use std::sync::Arc;

use crate::config::{CaseLabel, RunConfig};
use crate::error::Result;
use crate::fv::{FluxModel, FomProblem, InitialCondition, TimeStepSpec};
use crate::grid::{CartesianGrid, Field, Point};
use crate::sampling::ParamGrid;

#[derive(Debug, Clone)]
pub struct BenchCase {
    pub label: CaseLabel,
    pub grid: CartesianGrid,
    /// `None` for the projection-only case (test2).
    pub flux: Option<FluxModel>,
    pub t_range: (f64, f64),
    pub mu_range: (f64, f64),
}

impl BenchCase {
    pub fn from_config(cfg: &RunConfig) -> Result<BenchCase> {
        let case = match cfg.label {
            CaseLabel::Test1 => BenchCase {
                label: cfg.label,
                grid: CartesianGrid::new_1d(0.0, 3.0, cfg.n_x)?,
                flux: Some(FluxModel::Advection),
                t_range: (0.0, 0.5),
                mu_range: (1.0, 3.0),
            },
            CaseLabel::Test2 => BenchCase {
                label: cfg.label,
                grid: CartesianGrid::new_2d([-0.5, -0.5], 3.0, cfg.n_x)?,
                flux: None,
                t_range: (0.0, 1.0),
                mu_range: (0.0, 1.0),
            },
            CaseLabel::Test3 => BenchCase {
                label: cfg.label,
                grid: CartesianGrid::new_2d([-1.0, -1.0], 2.0, cfg.n_x)?,
                flux: Some(FluxModel::Rotation),
                t_range: (0.0, 0.5),
                mu_range: (0.0, std::f64::consts::TAU),
            },
        };
        Ok(case)
    }

    /// Whether the case is a stationary fit (no time stepping).
    pub fn is_static(&self) -> bool {
        self.flux.is_none()
    }

    pub fn t_final(&self) -> f64 {
        self.t_range.1
    }

    pub fn initial_condition(&self) -> InitialCondition {
        match self.label {
            CaseLabel::Test1 => {
                Arc::new(|p: Point, mu: f64| if p[0] >= 0.5 && p[0] <= 1.0 { mu } else { 0.0 })
            }
            CaseLabel::Test2 => Arc::new(|p: Point, mu: f64| test2_exact(p, 0.0, mu)),
            CaseLabel::Test3 => Arc::new(|p: Point, _mu: f64| {
                if (p[0] * p[0] + p[1] * p[1]).sqrt() <= 0.2 {
                    1.0
                } else {
                    0.0
                }
            }),
        }
    }

    pub fn fom_problem(&self, cfg: &RunConfig) -> Result<FomProblem> {
        let flux = self
            .flux
            .clone()
            .ok_or_else(|| crate::error::Error::config("this case has no evolution model".to_string()))?;
        let step = match cfg.dt_override {
            Some(dt) => TimeStepSpec::Explicit(dt),
            None => TimeStepSpec::CflFraction(cfg.cfl_fraction),
        };
        Ok(FomProblem {
            grid: self.grid,
            flux,
            mu_range: self.mu_range,
            t_final: self.t_final(),
            step,
            u0: self.initial_condition(),
        })
    }

    pub fn param_grid(&self, cfg: &RunConfig) -> Result<ParamGrid> {
        ParamGrid::new(self.t_range, self.mu_range, cfg.n_t, cfg.n_mu)
    }
}

/// The closed-form solution of test2: a box of side 0.6 centred at
/// `(mu + t, t)` with amplitude `exp(-mu t)`.
pub fn test2_exact(p: Point, t: f64, mu: f64) -> f64 {
    if (p[0] - (mu + t)).abs() <= 0.3 && (p[1] - t).abs() <= 0.3 {
        (-mu * t).exp()
    } else {
        0.0
    }
}

/// Nodes and weights of 5-point Gauss-Legendre quadrature on [-1, 1].
pub fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let r70 = 70.0f64.sqrt();
    let n1 = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let n2 = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let w1 = (322.0 + 13.0 * r70) / 900.0;
    let w2 = (322.0 - 13.0 * r70) / 900.0;
    ([-n2, -n1, 0.0, n1, n2], [w2, w1, 128.0 / 225.0, w1, w2])
}

/// Finite-volume projection by tensorized 5-point Gauss-Legendre quadrature
/// per cell (5 points in 1D, 25 in 2D).
pub fn project_gl5(grid: &CartesianGrid, f: impl Fn(Point) -> f64) -> Field {
    let (nodes, weights) = gauss_legendre_5();
    let h = 0.5 * grid.dx();
    let n = grid.n_cells();
    let mut values = Vec::with_capacity(n);
    for id in 0..n {
        let c = grid.cell_centre(id).expect("id in range");
        let mut avg = 0.0;
        if grid.dim() == 1 {
            for q in 0..5 {
                avg += weights[q] * f([c[0] + h * nodes[q], 0.0]);
            }
            avg *= 0.5;
        } else {
            for qx in 0..5 {
                for qy in 0..5 {
                    avg += weights[qx] * weights[qy] * f([c[0] + h * nodes[qx], c[1] + h * nodes[qy]]);
                }
            }
            avg *= 0.25;
        }
        values.push(avg);
    }
    Field::new(*grid, values).expect("length matches grid")
}

/// Projection of the test2 solution at `(t, mu)`. The integrand factorizes
/// per axis, so the tensorized 5x5 quadrature reduces exactly to a product of
/// two 5-point axis sums; this computes the identical values in O(N) instead
/// of O(25 N).
pub fn test2_projection(grid: &CartesianGrid, t: f64, mu: f64) -> Field {
    debug_assert_eq!(grid.dim(), 2);
    let (nodes, weights) = gauss_legendre_5();
    let h = 0.5 * grid.dx();
    let n_x = grid.cells_per_axis();
    let axis_factor = |centre_of: &dyn Fn(usize) -> f64, box_centre: f64| -> Vec<f64> {
        (0..n_x)
            .map(|i| {
                let c = centre_of(i);
                let mut s = 0.0;
                for q in 0..5 {
                    if (c + h * nodes[q] - box_centre).abs() <= 0.3 {
                        s += weights[q];
                    }
                }
                0.5 * s
            })
            .collect()
    };
    let origin = grid.origin();
    let dx = grid.dx();
    let wx = axis_factor(&|i| origin[0] + (i as f64 + 0.5) * dx, mu + t);
    let wy = axis_factor(&|i| origin[1] + (i as f64 + 0.5) * dx, t);
    let amp = (-mu * t).exp();
    let mut values = Vec::with_capacity(grid.n_cells());
    for iy in 0..n_x {
        let a = amp * wy[iy];
        for ix in 0..n_x {
            values.push(a * wx[ix]);
        }
    }
    Field::new(*grid, values).expect("length matches grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gl5_integrates_degree_nine_polynomials() {
        let (nodes, weights) = gauss_legendre_5();
        // integral of x^8 over [-1, 1] = 2/9
        let got: f64 = (0..5).map(|q| weights[q] * nodes[q].powi(8)).sum();
        assert_relative_eq!(got, 2.0 / 9.0, epsilon = 1e-14);
        let sum: f64 = weights.iter().sum();
        assert_relative_eq!(sum, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn separable_projection_matches_tensor_quadrature() {
        let grid = CartesianGrid::new_2d([-0.5, -0.5], 3.0, 30).unwrap();
        for &(t, mu) in &[(0.0, 0.0), (0.37, 0.62), (1.0, 1.0), (0.5, 0.21)] {
            let fast = test2_projection(&grid, t, mu);
            let slow = project_gl5(&grid, |p| test2_exact(p, t, mu));
            for id in 0..grid.n_cells() {
                assert_relative_eq!(fast.values()[id], slow.values()[id], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn test2_projection_mass_matches_box_area() {
        let grid = CartesianGrid::new_2d([-0.5, -0.5], 3.0, 60).unwrap();
        let (t, mu) = (0.4, 0.3);
        let f = test2_projection(&grid, t, mu);
        let mass: f64 = f.values().iter().sum::<f64>() * grid.dx() * grid.dx();
        assert_relative_eq!(mass, 0.36 * (-mu * t).exp(), epsilon = 1e-3);
    }

    #[test]
    fn case_geometry_matches_labels() {
        let cfg = RunConfig::defaults(CaseLabel::Test3);
        let case = BenchCase::from_config(&cfg).unwrap();
        assert_eq!(case.grid.dim(), 2);
        assert_eq!(case.grid.origin(), [-1.0, -1.0]);
        assert_relative_eq!(case.grid.extent(), 2.0);
        assert!(!case.is_static());
        let cfg2 = RunConfig::defaults(CaseLabel::Test2);
        let case2 = BenchCase::from_config(&cfg2).unwrap();
        assert!(case2.is_static());
    }

    #[test]
    fn test3_initial_mass_approximates_disc_area() {
        let cfg = {
            let mut c = RunConfig::defaults(CaseLabel::Test3);
            c.n_x = 200;
            c
        };
        let case = BenchCase::from_config(&cfg).unwrap();
        let u0 = case.initial_condition();
        let f = Field::from_fn(case.grid, |p| u0(p, 0.0));
        let mass: f64 = f.values().iter().sum::<f64>() * case.grid.dx() * case.grid.dx();
        assert_relative_eq!(mass, std::f64::consts::PI * 0.04, max_relative = 0.02);
    }
}
