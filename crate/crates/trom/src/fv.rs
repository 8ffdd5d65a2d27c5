//! First-order finite-volume full-order model: flux models, local
//! Lax-Friedrichs numerical flux, CFL time step, explicit Euler evolution.
//!
//! Boundary condition is zero ghost cells on every face.

use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{CartesianGrid, Field, Point};

/// Scalar flux function per spatial axis, `f_axis(u; mu)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FluxModel {
    /// 1D linear advection with parametrized speed: `f(u) = mu * u`.
    Advection,
    /// 2D transport at unit speed in direction `(cos mu, sin mu)`:
    /// `f(u) = (cos(mu) u, sin(mu) u)`.
    Rotation,
}

impl FluxModel {
    pub fn label(&self) -> &'static str {
        match self {
            FluxModel::Advection => "advection",
            FluxModel::Rotation => "rotation",
        }
    }

    #[inline]
    pub fn flux(&self, axis: usize, u: f64, mu: f64) -> f64 {
        match self {
            FluxModel::Advection => mu * u,
            FluxModel::Rotation => {
                if axis == 0 {
                    mu.cos() * u
                } else {
                    mu.sin() * u
                }
            }
        }
    }

    /// `|d/du f_axis|` at state `u`. Both shipped models are linear, so this
    /// is independent of `u`.
    #[inline]
    pub fn wave_speed(&self, axis: usize, _u: f64, mu: f64) -> f64 {
        match self {
            FluxModel::Advection => mu.abs(),
            FluxModel::Rotation => {
                if axis == 0 {
                    mu.cos().abs()
                } else {
                    mu.sin().abs()
                }
            }
        }
    }

    /// Per-axis bound on `|d/du f_axis|` at parameter `mu`, valid for every
    /// state in the solution range.
    pub fn derivative_bound(&self, mu: f64) -> [f64; 2] {
        match self {
            FluxModel::Advection => [mu.abs(), 0.0],
            FluxModel::Rotation => [mu.cos().abs(), mu.sin().abs()],
        }
    }
}

/// Time-step policy for the explicit Euler scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStepSpec {
    /// `dt = fraction * dx / (2 sup |f'|)` with the sup taken over the
    /// parameter range; `fraction` in (0, 1].
    CflFraction(f64),
    /// Fixed step. May violate the stability bound; the run metadata records
    /// whether it complies.
    Explicit(f64),
}

pub type InitialCondition = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// Everything needed to evolve one parametrized problem.
#[derive(Clone)]
pub struct FomProblem {
    pub grid: CartesianGrid,
    pub flux: FluxModel,
    pub mu_range: (f64, f64),
    pub t_final: f64,
    pub step: TimeStepSpec,
    pub u0: InitialCondition,
}

impl FomProblem {
    /// Resolved constant time step together with a CFL-compliance flag.
    pub fn resolve_dt(&self) -> Result<(f64, bool)> {
        let stable = cfl_dt(&self.grid, &self.flux, self.mu_range, 1.0)?;
        match self.step {
            TimeStepSpec::CflFraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::config(format!("CFL fraction must be in (0, 1], got {f}")));
                }
                Ok((f * stable, true))
            }
            TimeStepSpec::Explicit(dt) => {
                if !(dt > 0.0) {
                    return Err(Error::config(format!("explicit time step must be positive, got {dt}")));
                }
                Ok((dt, dt <= stable * (1.0 + 1e-12)))
            }
        }
    }

    pub fn initial_field(&self, mu: f64) -> Field {
        Field::from_fn(self.grid, |p| (self.u0)(p, mu))
    }
}

/// Largest stable explicit step: `fraction * dx / (2 sup_mu |f'|)`, where
/// `|f'|` is the Euclidean norm of the per-axis derivative bounds. The sup is
/// taken over a dense sample of the parameter range including both endpoints,
/// which is exact for the shipped (monotone or constant-speed) models.
pub fn cfl_dt(
    grid: &CartesianGrid,
    flux: &FluxModel,
    mu_range: (f64, f64),
    fraction: f64,
) -> Result<f64> {
    let (lo, hi) = mu_range;
    let samples = 1025;
    let mut sup: f64 = 0.0;
    for k in 0..samples {
        let mu = if samples == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (samples - 1) as f64
        };
        let b = flux.derivative_bound(mu);
        sup = sup.max((b[0] * b[0] + b[1] * b[1]).sqrt());
    }
    if sup <= 0.0 {
        return Err(Error::DegenerateFlux);
    }
    Ok(fraction * grid.dx() / (2.0 * sup))
}

/// Read-only access to cell values by flat id. `None` means the value is not
/// available (as opposed to a ghost cell outside the domain, which is zero by
/// the boundary condition).
pub trait CellValues {
    fn value(&self, id: usize) -> Option<f64>;
}

impl CellValues for Field {
    #[inline]
    fn value(&self, id: usize) -> Option<f64> {
        Some(self.values()[id])
    }
}

/// Values known only on a sorted id list; lookups elsewhere report missing.
pub struct SparseValues<'a> {
    pub ids: &'a [usize],
    pub values: &'a [f64],
}

impl CellValues for SparseValues<'_> {
    #[inline]
    fn value(&self, id: usize) -> Option<f64> {
        self.ids
            .binary_search(&id)
            .ok()
            .map(|pos| self.values[pos])
    }
}

/// Local Lax-Friedrichs two-point flux,
/// `H(uL, uR) = (f(uL) + f(uR)) / 2 - lambda/2 (uR - uL)` with
/// `lambda = max(|f'(uL)|, |f'(uR)|)`.
#[inline]
pub fn llf_flux(flux: &FluxModel, axis: usize, u_l: f64, u_r: f64, mu: f64) -> f64 {
    let lambda = flux.wave_speed(axis, u_l, mu).max(flux.wave_speed(axis, u_r, mu));
    0.5 * (flux.flux(axis, u_l, mu) + flux.flux(axis, u_r, mu)) - 0.5 * lambda * (u_r - u_l)
}

#[inline]
fn stencil_rate<V: CellValues>(
    u: &V,
    grid: &CartesianGrid,
    flux: &FluxModel,
    mu: f64,
    id: usize,
    u_c: f64,
) -> Result<f64> {
    let inv_dx = 1.0 / grid.dx();
    let mut rate = 0.0;
    for axis in 0..grid.dim() {
        let u_minus = match grid.neighbor(id, axis, -1) {
            Some(nb) => u.value(nb).ok_or(Error::MissingHaloValue(nb))?,
            None => 0.0,
        };
        let u_plus = match grid.neighbor(id, axis, 1) {
            Some(nb) => u.value(nb).ok_or(Error::MissingHaloValue(nb))?,
            None => 0.0,
        };
        let h_plus = llf_flux(flux, axis, u_c, u_plus, mu);
        let h_minus = llf_flux(flux, axis, u_minus, u_c, mu);
        rate -= (h_plus - h_minus) * inv_dx;
    }
    Ok(rate)
}

/// Discrete evolution rate `F_i = -(1/dx) sum_faces (outward LLF flux)` on the
/// listed cells. Requires values on the halo of `ids`.
pub fn apply_f<V: CellValues>(
    u: &V,
    grid: &CartesianGrid,
    flux: &FluxModel,
    mu: f64,
    ids: &[usize],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let u_c = u.value(id).ok_or(Error::MissingHaloValue(id))?;
        out.push(stencil_rate(u, grid, flux, mu, id, u_c)?);
    }
    Ok(out)
}

/// One fused explicit Euler update on the listed cells: `u_i + dt * F_i`.
pub fn euler_step_values<V: CellValues>(
    u: &V,
    grid: &CartesianGrid,
    flux: &FluxModel,
    mu: f64,
    dt: f64,
    ids: &[usize],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(ids.len());
    euler_step_values_into(u, grid, flux, mu, dt, ids, &mut out)?;
    Ok(out)
}

pub(crate) fn euler_step_values_into<V: CellValues>(
    u: &V,
    grid: &CartesianGrid,
    flux: &FluxModel,
    mu: f64,
    dt: f64,
    ids: &[usize],
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    out.reserve(ids.len());
    for &id in ids {
        let u_c = u.value(id).ok_or(Error::MissingHaloValue(id))?;
        out.push(u_c + dt * stencil_rate(u, grid, flux, mu, id, u_c)?);
    }
    Ok(())
}

/// One full-mesh explicit Euler step.
pub fn fom_step(u: &Field, flux: &FluxModel, mu: f64, dt: f64) -> Field {
    let grid = *u.grid();
    let ids: Vec<usize> = (0..grid.n_cells()).collect();
    let values = euler_step_values(u, &grid, flux, mu, dt, &ids).expect("full field has no missing values");
    Field::new(grid, values).expect("length preserved")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FomRunMeta {
    pub dt: f64,
    pub steps: usize,
    pub cfl_compliant: bool,
    /// Final step shortened to land exactly on the requested end time.
    pub short_final_step: bool,
    pub wall_seconds: f64,
}

/// Solution fields at the requested record times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub entries: Vec<(f64, Field)>,
    pub meta: FomRunMeta,
}

/// Step-by-step driver for the explicit Euler FOM; used by [`run_fom`] and by
/// error sweeps that walk a reference solution in lockstep with a reduced
/// model.
pub struct FomStepper {
    grid: CartesianGrid,
    flux: FluxModel,
    mu: f64,
    dt: f64,
    t_end: f64,
    n_steps: usize,
    step_index: usize,
    current: Field,
    ids: Vec<usize>,
    scratch: Vec<f64>,
}

impl FomStepper {
    pub fn new(problem: &FomProblem, mu: f64, dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config(format!("time step must be positive, got {dt}")));
        }
        if t_end < 0.0 {
            return Err(Error::config(format!("end time must be non-negative, got {t_end}")));
        }
        let n_steps = steps_to_reach(t_end, dt);
        let grid = problem.grid;
        Ok(FomStepper {
            grid,
            flux: problem.flux.clone(),
            mu,
            dt,
            t_end,
            n_steps,
            step_index: 0,
            current: problem.initial_field(mu),
            ids: (0..grid.n_cells()).collect(),
            scratch: Vec::new(),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        if self.step_index == self.n_steps {
            self.t_end
        } else {
            self.step_index as f64 * self.dt
        }
    }

    pub fn current(&self) -> &Field {
        &self.current
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.n_steps
    }

    /// Whether the final step is shorter than `dt`.
    pub fn short_final_step(&self) -> bool {
        self.n_steps > 0 && (self.n_steps as f64 * self.dt - self.t_end).abs() > 1e-9 * self.dt
    }

    pub fn advance(&mut self) -> Result<()> {
        if self.is_done() {
            return Ok(());
        }
        let target = if self.step_index + 1 == self.n_steps {
            self.t_end
        } else {
            (self.step_index + 1) as f64 * self.dt
        };
        let step_dt = target - self.step_index as f64 * self.dt;
        let mut scratch = std::mem::take(&mut self.scratch);
        euler_step_values_into(&self.current, &self.grid, &self.flux, self.mu, step_dt, &self.ids, &mut scratch)?;
        self.current.swap_values(&mut scratch);
        self.scratch = scratch;
        self.step_index += 1;
        Ok(())
    }
}

pub(crate) fn steps_to_reach(t_end: f64, dt: f64) -> usize {
    if t_end <= 0.0 {
        return 0;
    }
    let k = (t_end / dt).round();
    if (k * dt - t_end).abs() <= 1e-9 * dt {
        k as usize
    } else {
        (t_end / dt).ceil() as usize
    }
}

/// Evolves the problem at parameter `mu` and records the solution at the
/// requested times, each of which must land within `dt/2` of a computed step.
pub fn run_fom(problem: &FomProblem, mu: f64, record_times: &[f64]) -> Result<Trajectory> {
    let (dt, cfl_compliant) = problem.resolve_dt()?;
    let t_final = problem.t_final;
    let mut record_steps: Vec<(usize, usize)> = Vec::with_capacity(record_times.len());
    let n_steps = steps_to_reach(t_final, dt);
    for (slot, &t) in record_times.iter().enumerate() {
        let k = (t / dt).round() as i64;
        if k < 0 || (t - k as f64 * dt).abs() > dt / 2.0 + 1e-12 * dt || k as usize > n_steps {
            return Err(Error::UnreachableRecordTime(t));
        }
        record_steps.push((k as usize, slot));
    }
    record_steps.sort_unstable();

    let start = Instant::now();
    let mut stepper = FomStepper::new(problem, mu, dt, t_final)?;
    let mut entries: Vec<Option<(f64, Field)>> = vec![None; record_times.len()];
    let mut next = 0;
    loop {
        while next < record_steps.len() && record_steps[next].0 == stepper.step_index() {
            let (_, slot) = record_steps[next];
            entries[slot] = Some((stepper.time(), stepper.current().clone()));
            next += 1;
        }
        if stepper.is_done() {
            break;
        }
        stepper.advance()?;
    }
    let short_final_step = stepper.short_final_step();
    let meta = FomRunMeta {
        dt,
        steps: n_steps,
        cfl_compliant,
        short_final_step,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Trajectory {
        entries: entries.into_iter().map(|e| e.expect("every record time mapped")).collect(),
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test1_problem(n_x: usize, step: TimeStepSpec) -> FomProblem {
        FomProblem {
            grid: CartesianGrid::new_1d(0.0, 3.0, n_x).unwrap(),
            flux: FluxModel::Advection,
            mu_range: (1.0, 3.0),
            t_final: 0.5,
            step,
            u0: Arc::new(|p: Point, mu: f64| if p[0] >= 0.5 && p[0] <= 1.0 { mu } else { 0.0 }),
        }
    }

    /// Straightforward reference LLF update, written independently of the
    /// production stencil: dense 1D sweep with explicit ghost cells.
    fn naive_llf_step_1d(u: &[f64], a: f64, dx: f64, dt: f64) -> Vec<f64> {
        let n = u.len();
        let get = |i: i64| -> f64 {
            if i < 0 || i >= n as i64 {
                0.0
            } else {
                u[i as usize]
            }
        };
        let h = |ul: f64, ur: f64| 0.5 * (a * ul + a * ur) - 0.5 * a.abs() * (ur - ul);
        (0..n as i64)
            .map(|i| get(i) - dt / dx * (h(get(i), get(i + 1)) - h(get(i - 1), get(i))))
            .collect()
    }

    #[test]
    fn cfl_test3_unit_speed_gives_half_dx() {
        let g = CartesianGrid::new_2d([-1.0, -1.0], 2.0, 8).unwrap();
        let dt = cfl_dt(&g, &FluxModel::Rotation, (0.0, std::f64::consts::TAU), 1.0).unwrap();
        assert_relative_eq!(dt, g.dx() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn cfl_test1_range_gives_dx_over_six() {
        let g = CartesianGrid::new_1d(0.0, 3.0, 10).unwrap();
        let dt = cfl_dt(&g, &FluxModel::Advection, (1.0, 3.0), 1.0).unwrap();
        assert_relative_eq!(dt, g.dx() / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn cfl_zero_bound_errors() {
        let g = CartesianGrid::new_1d(0.0, 3.0, 10).unwrap();
        assert!(matches!(
            cfl_dt(&g, &FluxModel::Advection, (0.0, 0.0), 1.0),
            Err(Error::DegenerateFlux)
        ));
    }

    #[test]
    fn rate_vanishes_on_constant_interior() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 10).unwrap();
        let mut vals = vec![2.5; 10];
        vals[0] = 0.0;
        vals[9] = 0.0;
        let u = Field::new(g, vals).unwrap();
        let f = apply_f(&u, &g, &FluxModel::Advection, 1.3, &[4, 5]).unwrap();
        assert_eq!(f, vec![0.0, 0.0]);
    }

    #[test]
    fn rate_matches_hand_llf_stencil() {
        let g = CartesianGrid::new_1d(0.0, 8.0, 8).unwrap();
        // dx = 1; step data [0, 0, 0, 1, 1, 0, 0, 0] with a = 1.
        let u = Field::new(g, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let ids: Vec<usize> = (0..8).collect();
        let f = apply_f(&u, &g, &FluxModel::Advection, 1.0, &ids).unwrap();
        // LLF with a = lambda = 1 is pure upwinding: F_i = -(u_i - u_{i-1}).
        let expect = [0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0];
        for (got, want) in f.iter().zip(expect) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn rate_sums_to_zero_on_interior_support() {
        let g = CartesianGrid::new_1d(0.0, 8.0, 8).unwrap();
        let u = Field::new(g, vec![0.0, 0.0, 1.0, 3.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        let ids: Vec<usize> = (0..8).collect();
        let f = apply_f(&u, &g, &FluxModel::Advection, 0.7, &ids).unwrap();
        let total: f64 = f.iter().sum::<f64>() * g.dx();
        assert_relative_eq!(total, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn missing_halo_value_is_reported() {
        let g = CartesianGrid::new_1d(0.0, 1.0, 10).unwrap();
        let ids = [4usize, 5];
        let vals = [1.0, 2.0];
        let sparse = SparseValues { ids: &ids, values: &vals };
        let err = apply_f(&sparse, &g, &FluxModel::Advection, 1.0, &[5]).unwrap_err();
        assert!(matches!(err, Error::MissingHaloValue(6)));
    }

    #[test]
    fn one_step_matches_naive_reference() {
        let problem = test1_problem(8, TimeStepSpec::CflFraction(1.0));
        let (dt, _) = problem.resolve_dt().unwrap();
        let u = problem.initial_field(2.0);
        let next = fom_step(&u, &problem.flux, 2.0, dt);
        let expect = naive_llf_step_1d(u.values(), 2.0, problem.grid.dx(), dt);
        for (got, want) in next.values().iter().zip(expect) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn max_principle_holds_along_run() {
        let problem = test1_problem(60, TimeStepSpec::CflFraction(1.0));
        let (dt, _) = problem.resolve_dt().unwrap();
        let mut stepper = FomStepper::new(&problem, 3.0, dt, 0.5).unwrap();
        let mut prev = stepper.current().linf_norm();
        while !stepper.is_done() {
            stepper.advance().unwrap();
            let cur = stepper.current().linf_norm();
            assert!(cur <= prev + 1e-13, "sup norm grew: {cur} > {prev}");
            prev = cur;
        }
    }

    #[test]
    fn commutes_with_interior_shift() {
        // Translation-invariant flux and interior supports: F(T[c]v) = T[c]F(v)
        // exactly.
        let g = CartesianGrid::new_2d([-1.0, -1.0], 2.0, 16).unwrap();
        let mut u = Field::zeros(g);
        for iy in 5..8 {
            for ix in 4..7 {
                u.values_mut()[iy * 16 + ix] = ((ix * 31 + iy * 7) % 11) as f64 / 3.0;
            }
        }
        let ids: Vec<usize> = (0..g.n_cells()).collect();
        let shift = crate::grid::GridShift::new([3, -2]);
        for (flux, mu) in [(FluxModel::Rotation, 2.2), (FluxModel::Rotation, 5.1)] {
            let f_u = Field::new(g, apply_f(&u, &g, &flux, mu, &ids).unwrap()).unwrap();
            let shifted_then_f = apply_f(&u.shifted(shift), &g, &flux, mu, &ids).unwrap();
            let f_then_shifted = f_u.shifted(shift);
            for (a, b) in shifted_then_f.iter().zip(f_then_shifted.values()) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn run_fom_t_zero_returns_initial_projection() {
        let mut problem = test1_problem(20, TimeStepSpec::CflFraction(1.0));
        problem.t_final = 0.0;
        let traj = run_fom(&problem, 2.0, &[0.0]).unwrap();
        assert_eq!(traj.entries.len(), 1);
        assert_eq!(traj.meta.steps, 0);
        assert_eq!(traj.entries[0].1, problem.initial_field(2.0));
    }

    #[test]
    fn run_fom_transports_support() {
        // mu = 2, T = 0.5: the box should land on [1.5, 2.0] up to smearing.
        let problem = test1_problem(300, TimeStepSpec::CflFraction(1.0));
        let traj = run_fom(&problem, 2.0, &[0.5]).unwrap();
        let u = &traj.entries[0].1;
        let g = &problem.grid;
        let exact = Field::from_fn(*g, |p| if p[0] >= 1.5 && p[0] <= 2.0 { 2.0 } else { 0.0 });
        // Centroid of the profile tracks the exact transported box closely.
        let centroid = |f: &Field| -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for (id, v) in f.values().iter().enumerate() {
                let x = g.cell_centre(id).unwrap()[0];
                num += x * v;
                den += v;
            }
            num / den
        };
        assert!((centroid(u) - centroid(&exact)).abs() < 2.0 * g.dx());
    }

    #[test]
    fn run_fom_conserves_mass_on_interior_support() {
        let problem = test1_problem(200, TimeStepSpec::CflFraction(1.0));
        let traj = run_fom(&problem, 2.0, &[0.0, 0.5]).unwrap();
        let mass = |f: &Field| f.values().iter().sum::<f64>() * problem.grid.dx();
        let m0 = mass(&traj.entries[0].1);
        let m1 = mass(&traj.entries[1].1);
        assert!((m1 - m0).abs() / m0.abs() < 1e-12, "mass drift {m0} -> {m1}");
    }

    #[test]
    fn run_fom_rejects_unreachable_record_time() {
        let problem = test1_problem(20, TimeStepSpec::CflFraction(1.0));
        let (dt, _) = problem.resolve_dt().unwrap();
        // Past the final time by more than half a step: no computed step matches.
        let err = run_fom(&problem, 2.0, &[0.5 + dt]).unwrap_err();
        assert!(matches!(err, Error::UnreachableRecordTime(_)));
    }

    #[test]
    fn explicit_override_is_flagged() {
        let problem = test1_problem(20, TimeStepSpec::Explicit(1.0));
        let (_, compliant) = problem.resolve_dt().unwrap();
        assert!(!compliant);
        let problem = test1_problem(20, TimeStepSpec::Explicit(1e-4));
        let (_, compliant) = problem.resolve_dt().unwrap();
        assert!(compliant);
    }

    #[test]
    fn fom_converges_first_order_against_exact_advection() {
        // Smeared-discontinuity regime: halving dx should shrink the L2 error
        // by a factor in [1.2, 2.2].
        let mu = 2.0;
        let errs: Vec<f64> = [50usize, 100]
            .iter()
            .map(|&n_x| {
                let problem = test1_problem(n_x, TimeStepSpec::CflFraction(1.0));
                let traj = run_fom(&problem, mu, &[0.5]).unwrap();
                let exact = Field::from_fn(problem.grid, |p| {
                    if p[0] >= 0.5 + mu * 0.5 && p[0] <= 1.0 + mu * 0.5 {
                        mu
                    } else {
                        0.0
                    }
                });
                traj.entries[0].1.l2_distance(&exact)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(
            (1.2..=2.2).contains(&ratio),
            "error ratio {ratio} outside smeared first-order band ({errs:?})"
        );
    }
}
