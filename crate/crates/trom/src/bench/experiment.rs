//! Offline artifact construction and online experiment sweeps over the
//! target-parameter set.

use std::time::Instant;

use rayon::prelude::*;

use super::cases::{test2_projection, BenchCase};
use super::metrics::{compute_error, ErrorReport, RomVariant, RuntimeReport, TargetError};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fv::{run_fom, FomStepper};
use crate::grid::Field;
use crate::hyper::{
    adapt_reduced_mesh, collect_residual_snapshots, select_reduced_mesh, shift_residuals,
    ResidualSnapshots,
};
use crate::rom::{
    assemble_basis, static_fit, BasisMode, MeshProvider, RomRun, RomRunInputs, SnapshotSet,
};
use crate::sampling::ParamGrid;
use crate::shifts::{build_shift_table, ShiftTable};

/// `count` uniformly spaced samples strictly inside `range` (endpoints
/// excluded): `lo + j (hi - lo) / (count + 1)`, `j = 1..count`.
pub fn interior_uniform(range: (f64, f64), count: usize) -> Vec<f64> {
    let (lo, hi) = range;
    (1..=count).map(|j| lo + (hi - lo) * j as f64 / (count + 1) as f64).collect()
}

/// Everything the online phase needs: snapshots, the calibrated shift table,
/// and (when built) the residual snapshot matrices for mesh selection.
pub struct OfflineArtifacts {
    pub cfg: RunConfig,
    pub case: BenchCase,
    pub pg: ParamGrid,
    /// Constant time step of the evolution cases; zero for the static case.
    pub dt: f64,
    pub store: SnapshotSet,
    pub table: ShiftTable,
    pub residuals: Option<ResidualSnapshots>,
    pub residuals_shifted: Option<ResidualSnapshots>,
}

/// Builds snapshots and the shift table; with `with_hyper` also collects
/// residual snapshots (plain and shifted) for reduced-mesh selection.
pub fn build_offline(cfg: &RunConfig, with_hyper: bool) -> Result<OfflineArtifacts> {
    let case = BenchCase::from_config(cfg)?;
    let pg = case.param_grid(cfg)?;
    let z_ref = pg.central_sample();

    let (dt, fields) = if case.is_static() {
        let fields: Vec<Field> = (0..pg.n_samples())
            .into_par_iter()
            .map(|j| {
                let (t, mu) = pg.sample(j);
                test2_projection(&case.grid, t, mu)
            })
            .collect();
        (0.0, fields)
    } else {
        let problem = case.fom_problem(cfg)?;
        let (dt, _) = problem.resolve_dt()?;
        pg.validate_time_samples(dt)?;
        let t_samples: Vec<f64> = (0..pg.n_t()).map(|i| pg.t_sample(i)).collect();
        let per_mu: Vec<Vec<Field>> = (0..pg.n_mu())
            .into_par_iter()
            .map(|i_mu| -> Result<Vec<Field>> {
                let traj = run_fom(&problem, pg.mu_sample(i_mu), &t_samples)?;
                Ok(traj.entries.into_iter().map(|(_, f)| f).collect())
            })
            .collect::<Result<_>>()?;
        let mut fields = Vec::with_capacity(pg.n_samples());
        for row in per_mu {
            fields.extend(row);
        }
        (dt, fields)
    };

    let store = SnapshotSet::from_fields(pg, fields)?;
    let refs = store.complete_refs()?;
    let table = build_shift_table(&refs, &pg, z_ref, cfg.calibration_mode, cfg.theta, cfg.candidate_cap)?;

    let mut art = OfflineArtifacts {
        cfg: cfg.clone(),
        case,
        pg,
        dt,
        store,
        table,
        residuals: None,
        residuals_shifted: None,
    };
    if with_hyper {
        build_hyper_offline(&mut art)?;
    }
    Ok(art)
}

/// Collects residual snapshots from full-mesh shifted-snapshot runs at the
/// training parameters, plus their shifted counterpart.
pub fn build_hyper_offline(art: &mut OfflineArtifacts) -> Result<()> {
    let cfg = &art.cfg;
    let mu_bars = interior_uniform(art.case.mu_range, cfg.m_hyp);
    let grid = *art.store.grid();
    let residuals = if art.case.is_static() {
        // Residual sampling times follow the same interior-uniform convention
        // as the training parameters.
        let times = interior_uniform(art.case.t_range, cfg.residual_times);
        let full: Vec<usize> = (0..grid.n_cells()).collect();
        let mut pairs = Vec::with_capacity(mu_bars.len() * times.len());
        for &mu in &mu_bars {
            for &t in &times {
                pairs.push((t, mu));
            }
        }
        let cols: Vec<(f64, f64, Vec<f64>)> = pairs
            .par_iter()
            .map(|&(t, mu)| -> Result<(f64, f64, Vec<f64>)> {
                let b = test2_projection(&grid, t, mu);
                let el = art.pg.containing_element((t, mu))?;
                let spec = assemble_basis(&art.pg, &art.table, &grid, &el, (t, mu), BasisMode::Shifted, cfg.interp)?;
                let basis = spec.bind(&art.store)?;
                let (fit, _) = static_fit(&basis, &b, &full);
                let residual: Vec<f64> = (0..grid.n_cells())
                    .map(|id| basis.reconstruct_cell(id, &fit.alpha) - b.values()[id])
                    .collect();
                Ok((t, mu, residual))
            })
            .collect::<Result<_>>()?;
        let mut snaps = ResidualSnapshots::new(grid.n_cells());
        for (t, mu, r) in cols {
            snaps.push_dense_column(t, mu, &r);
        }
        snaps
    } else {
        let flux = art.case.flux.as_ref().expect("evolution case");
        let u0 = art.case.initial_condition();
        collect_residual_snapshots(
            &art.store,
            &art.table,
            flux,
            &mu_bars,
            art.case.t_final(),
            art.dt,
            cfg.interp,
            &move |p, mu| u0(p, mu),
        )?
    };
    art.residuals_shifted = Some(shift_residuals(&residuals, &art.table, &art.pg, &grid, cfg.interp)?);
    art.residuals = Some(residuals);
    Ok(())
}

/// Cell containing the amplitude-weighted centroid of the snapshots aligned
/// to the reference parameter.
///
/// Rationale: the ranked residual rows concentrate on the few cells where the
/// transported fronts sit, and for reduced meshes near the basis dimension a
/// front-only mesh leaves the restricted least-squares matrix with a
/// collapsing small singular value (wild coefficient cancellations fit the
/// front cells while diverging in the bulk). One bulk cell pins the plateau
/// amplitude and removes that failure mode; for realistic mesh sizes it is
/// one cell among hundreds and changes nothing.
pub fn alignment_anchor_cell(art: &OfflineArtifacts) -> Result<usize> {
    let grid = art.store.grid();
    let mut num = [0.0f64; 2];
    let mut den = 0.0f64;
    for j in 0..art.pg.n_samples() {
        let snap = art.store.get(j)?;
        let shift = grid.snap_shift(art.table.shift_to_ref(j));
        let aligned = snap.shifted(-shift);
        for (id, v) in aligned.values().iter().enumerate() {
            let w = v * v;
            let c = grid.cell_centre(id)?;
            num[0] += w * c[0];
            num[1] += w * c[1];
            den += w;
        }
    }
    if !(den > 0.0) {
        return Err(Error::HyperReduction("snapshots carry no amplitude to anchor on".to_string()));
    }
    grid.locate([num[0] / den, num[1] / den])
}

/// Offline reduced mesh of size `n`, selected from the shifted residuals for
/// the adaptive route and from the raw ones otherwise. The adaptive mesh
/// reserves its first slot for the bulk anchor cell (see
/// [`alignment_anchor_cell`]); the rest is the ranked residual selection.
pub fn select_mesh(art: &OfflineArtifacts, shifted: bool, n: usize) -> Result<Vec<usize>> {
    let s = if shifted { art.residuals_shifted.as_ref() } else { art.residuals.as_ref() }
        .ok_or_else(|| Error::config("hyper-reduction artifacts not built".to_string()))?;
    if !shifted {
        return select_reduced_mesh(s, n);
    }
    let anchor = alignment_anchor_cell(art)?;
    let ranked = select_reduced_mesh(s, n)?;
    let mut ids = Vec::with_capacity(n);
    ids.push(anchor);
    for id in ranked {
        if ids.len() == n {
            break;
        }
        if id != anchor {
            ids.push(id);
        }
    }
    Ok(ids)
}

#[derive(Debug, Clone, Copy, Default)]
struct TargetTiming {
    total: f64,
    adapt: f64,
    a: f64,
    b: f64,
    ls: f64,
    steps: usize,
    step_seconds: f64,
    fom: f64,
}

/// Runs a full experiment for one variant: offline mesh selection (if any),
/// online runs over the target set (repeated `timing_reps` times with the
/// median-time run reported), and the error sweep against the reference.
pub fn run_experiment(
    art: &OfflineArtifacts,
    variant: RomVariant,
    n_override: Option<usize>,
) -> Result<(ErrorReport, RuntimeReport)> {
    let n_cells = art.store.grid().n_cells();
    let n = n_override.unwrap_or_else(|| art.cfg.reduced_mesh_size(n_cells));
    let e_off: Option<Vec<usize>> = match variant {
        RomVariant::AdpSs => Some(select_mesh(art, true, n)?),
        RomVariant::NAdpSs => Some(select_mesh(art, false, n)?),
        _ => None,
    };
    let (targets, timings) = if art.case.is_static() {
        static_sweep(art, variant, e_off.as_deref())?
    } else {
        stepped_sweep(art, variant, e_off.as_deref())?
    };

    let errors = ErrorReport::from_targets(art.cfg.label, variant, targets);
    let m = timings.len().max(1) as f64;
    let total_steps: usize = timings.iter().map(|t| t.steps).sum();
    let runtime = RuntimeReport {
        c_avg: timings.iter().map(|t| t.total).sum::<f64>() / m,
        c_adapt: timings.iter().map(|t| t.adapt).sum::<f64>() / m,
        c_a: timings.iter().map(|t| t.a).sum::<f64>() / m,
        c_b: timings.iter().map(|t| t.b).sum::<f64>() / m,
        c_ls: timings.iter().map(|t| t.ls).sum::<f64>() / m,
        per_step_avg: if total_steps > 0 {
            timings.iter().map(|t| t.step_seconds).sum::<f64>() / total_steps as f64
        } else {
            0.0
        },
        fom_avg: Some(timings.iter().map(|t| t.fom).sum::<f64>() / m),
        n_used: if variant.uses_reduced_mesh() { n } else { n_cells },
    };
    Ok((errors, runtime))
}

fn basis_mode(variant: RomVariant) -> BasisMode {
    if variant == RomVariant::S {
        BasisMode::Plain
    } else {
        BasisMode::Shifted
    }
}

fn run_variant_once(
    art: &OfflineArtifacts,
    variant: RomVariant,
    e_off: Option<&[usize]>,
    mu: f64,
) -> Result<RomRun> {
    let case = &art.case;
    let flux = case.flux.as_ref().expect("evolution case");
    let u0 = case.initial_condition();
    let u0_at_mu = move |p: crate::grid::Point| u0(p, mu);
    let mut provider;
    let mesh = match variant {
        RomVariant::Ss | RomVariant::S => MeshProvider::Full,
        RomVariant::NAdpSs => MeshProvider::Fixed(e_off.expect("mesh selected")),
        RomVariant::AdpSs => {
            let e_off = e_off.expect("mesh selected");
            provider = move |z: (f64, f64)| -> Result<Vec<usize>> {
                Ok(adapt_reduced_mesh(e_off, &art.table, &art.pg, art.store.grid(), z, art.cfg.interp)?.ids)
            };
            MeshProvider::Dynamic(&mut provider)
        }
    };
    crate::rom::run_rom(
        RomRunInputs {
            store: &art.store,
            table: &art.table,
            flux,
            mu,
            t_end: case.t_final(),
            dt: art.dt,
            mode: basis_mode(variant),
            interp: art.cfg.interp,
            mesh,
            u0: &u0_at_mu,
        },
        None,
    )
}

fn median_run(mut runs: Vec<RomRun>) -> RomRun {
    let mid = runs.len() / 2;
    runs.sort_by(|a, b| a.timings.total.partial_cmp(&b.timings.total).unwrap());
    runs.swap_remove(mid)
}

/// Time-stepped cases: per target parameter, run the reduced model, then walk
/// the full-order reference in lockstep over every recorded step and take the
/// relative error at each step time.
fn stepped_sweep(
    art: &OfflineArtifacts,
    variant: RomVariant,
    e_off: Option<&[usize]>,
) -> Result<(Vec<TargetError>, Vec<TargetTiming>)> {
    let cfg = &art.cfg;
    let problem = art.case.fom_problem(cfg)?;
    let mu_targets = interior_uniform(art.case.mu_range, cfg.target_mu_count);

    let process = |&mu: &f64| -> Result<(Vec<TargetError>, TargetTiming)> {
        let runs: Vec<RomRun> = (0..cfg.timing_reps)
            .map(|_| run_variant_once(art, variant, e_off, mu))
            .collect::<Result<_>>()?;
        let run = median_run(runs);

        let mut stepper = FomStepper::new(&problem, mu, art.dt, art.case.t_final())?;
        let mut fom_seconds = 0.0;
        let mut targets = Vec::with_capacity(run.records.len());
        for (k, rec) in run.records.iter().enumerate() {
            while stepper.step_index() < k {
                let t0 = Instant::now();
                stepper.advance()?;
                fom_seconds += t0.elapsed().as_secs_f64();
            }
            let basis = rec.basis.bind(&art.store)?;
            let recon = basis.reconstruct_field(&rec.alpha);
            let e = compute_error(stepper.current(), &recon)?;
            targets.push(TargetError { t: rec.t, mu, e });
        }
        let timing = TargetTiming {
            total: run.timings.total,
            adapt: run.timings.adapt,
            a: run.timings.assemble_a,
            b: run.timings.assemble_b,
            ls: run.timings.solve,
            steps: run.timings.per_step.len(),
            step_seconds: run.timings.per_step.iter().sum(),
            fom: fom_seconds,
        };
        Ok((targets, timing))
    };

    let results: Vec<(Vec<TargetError>, TargetTiming)> = if cfg.parallel {
        mu_targets.par_iter().map(process).collect::<Result<_>>()?
    } else {
        mu_targets.iter().map(process).collect::<Result<_>>()?
    };
    let mut targets = Vec::new();
    let mut timings = Vec::with_capacity(results.len());
    for (te, ti) in results {
        targets.extend(te);
        timings.push(ti);
    }
    Ok((targets, timings))
}

/// The stationary case: per target, one reduced fit against the projected
/// reference; the reference projection itself is the "full-order" cost.
fn static_sweep(
    art: &OfflineArtifacts,
    variant: RomVariant,
    e_off: Option<&[usize]>,
) -> Result<(Vec<TargetError>, Vec<TargetTiming>)> {
    let cfg = &art.cfg;
    let grid = *art.store.grid();
    let full_ids: Vec<usize> = (0..grid.n_cells()).collect();
    let t_targets = interior_uniform(art.case.t_range, cfg.target_t_count);
    let mu_targets = interior_uniform(art.case.mu_range, cfg.target_mu_count);
    let mut pairs = Vec::with_capacity(t_targets.len() * mu_targets.len());
    for &mu in &mu_targets {
        for &t in &t_targets {
            pairs.push((t, mu));
        }
    }

    let process = |&(t, mu): &(f64, f64)| -> Result<(Vec<TargetError>, TargetTiming)> {
        let z = (t, mu);
        let t_fom = Instant::now();
        let b = test2_projection(&grid, t, mu);
        let fom_seconds = t_fom.elapsed().as_secs_f64();

        let mut samples = Vec::with_capacity(cfg.timing_reps);
        for _ in 0..cfg.timing_reps {
            let t_total = Instant::now();
            let t_adapt = Instant::now();
            let owned: Option<Vec<usize>> = match variant {
                RomVariant::AdpSs => Some(
                    adapt_reduced_mesh(e_off.expect("mesh selected"), &art.table, &art.pg, &grid, z, cfg.interp)?
                        .ids,
                ),
                _ => None,
            };
            let ids: &[usize] = match variant {
                RomVariant::Ss | RomVariant::S => &full_ids,
                RomVariant::NAdpSs => e_off.expect("mesh selected"),
                RomVariant::AdpSs => owned.as_deref().expect("adapted"),
            };
            let adapt_seconds = t_adapt.elapsed().as_secs_f64();
            let el = art.pg.containing_element(z)?;
            let spec = assemble_basis(&art.pg, &art.table, &grid, &el, z, basis_mode(variant), cfg.interp)?;
            let basis = spec.bind(&art.store)?;
            let (fit, phases) = static_fit(&basis, &b, ids);
            let total = t_total.elapsed().as_secs_f64();
            let timing = TargetTiming {
                total,
                adapt: adapt_seconds,
                a: phases.assemble_a,
                b: phases.assemble_b,
                ls: phases.solve,
                steps: 1,
                step_seconds: total,
                fom: fom_seconds,
            };
            samples.push((total, timing, fit.alpha));
        }
        samples.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let (_, timing, alpha) = samples.swap_remove(samples.len() / 2);

        let el = art.pg.containing_element(z)?;
        let spec = assemble_basis(&art.pg, &art.table, &grid, &el, z, basis_mode(variant), cfg.interp)?;
        let basis = spec.bind(&art.store)?;
        let recon = basis.reconstruct_field(&alpha);
        let e = compute_error(&b, &recon)?;
        Ok((vec![TargetError { t, mu, e }], timing))
    };

    let results: Vec<(Vec<TargetError>, TargetTiming)> = if cfg.parallel {
        pairs.par_iter().map(process).collect::<Result<_>>()?
    } else {
        pairs.iter().map(process).collect::<Result<_>>()?
    };
    let mut targets = Vec::new();
    let mut timings = Vec::with_capacity(results.len());
    for (te, ti) in results {
        targets.extend(te);
        timings.push(ti);
    }
    Ok((targets, timings))
}

/// Runs every `(variant, n)` combination, reusing the offline artifacts.
pub fn run_sweep(
    art: &OfflineArtifacts,
    variants: &[RomVariant],
    n_list: &[usize],
) -> Result<Vec<super::metrics::ExperimentRow>> {
    let mut rows = Vec::new();
    let n_cells = art.store.grid().n_cells();
    for &variant in variants {
        if variant.uses_reduced_mesh() {
            for &n in n_list {
                let (errors, runtime) = run_experiment(art, variant, Some(n))?;
                rows.push(super::metrics::experiment_row(
                    art.cfg.label,
                    art.cfg.n_x,
                    art.pg.n_t(),
                    art.pg.n_mu(),
                    n_cells,
                    &errors,
                    &runtime,
                ));
            }
        } else {
            let (errors, runtime) = run_experiment(art, variant, None)?;
            rows.push(super::metrics::experiment_row(
                art.cfg.label,
                art.cfg.n_x,
                art.pg.n_t(),
                art.pg.n_mu(),
                n_cells,
                &errors,
                &runtime,
            ));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CaseLabel;

    fn tiny_test1_config() -> RunConfig {
        let mut cfg = RunConfig::defaults(CaseLabel::Test1);
        cfg.n_x = 120;
        cfg.target_mu_count = 3;
        cfg.timing_reps = 1;
        cfg.m_hyp = 2;
        cfg
    }

    #[test]
    fn interior_uniform_excludes_endpoints() {
        let s = interior_uniform((0.0, 2.0), 5);
        assert_eq!(s.len(), 5);
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((s[4] - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn offline_build_produces_complete_store() {
        let cfg = tiny_test1_config();
        let art = build_offline(&cfg, false).unwrap();
        assert!(art.store.is_complete());
        assert_eq!(art.pg.n_samples(), 4);
        assert!(art.dt > 0.0);
        assert!(art.residuals.is_none());
    }

    #[test]
    fn hyper_offline_collects_expected_column_count() {
        let cfg = tiny_test1_config();
        let art = build_offline(&cfg, true).unwrap();
        let s = art.residuals.as_ref().unwrap();
        // Per training run: steps K, residuals recorded from the second step on.
        let k = (art.case.t_final() / art.dt).round() as usize;
        assert_eq!(s.n_columns(), cfg.m_hyp * (k - 1));
        assert!(art.residuals_shifted.as_ref().unwrap().is_shifted());
    }

    #[test]
    fn full_mesh_experiment_beats_plain_variant_on_test1() {
        let cfg = tiny_test1_config();
        let art = build_offline(&cfg, false).unwrap();
        let (ss, _) = run_experiment(&art, RomVariant::Ss, None).unwrap();
        let (s, _) = run_experiment(&art, RomVariant::S, None).unwrap();
        assert!(ss.e_max < s.e_max, "shifted {} vs plain {}", ss.e_max, s.e_max);
        assert!(!ss.unstable);
    }

    #[test]
    fn sweep_emits_one_row_per_combination() {
        let mut cfg = tiny_test1_config();
        cfg.target_mu_count = 2;
        let art = build_offline(&cfg, true).unwrap();
        let rows = run_sweep(&art, &[RomVariant::AdpSs, RomVariant::Ss], &[6, 12]).unwrap();
        // Adp at two sizes + SS once.
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].n, 6);
        assert_eq!(rows[1].n, 12);
        assert_eq!(rows[2].n, art.store.grid().n_cells());
    }
}
