//! Experiment orchestration: single runs, ε-sweeps with rate fitting,
//! snapshot audits, and the self-test suite.

use crate::boundary::BoundaryData;
use crate::config::{RunConfig, SweepConfig};
use crate::diagnostics::{
    self, energy_record, fit_gronwall_constant, fit_rate, relative_entropy, EnergyRecord,
    EntropyRecord,
};
use crate::error::{Error, Result};
use crate::fields::{well_prepared_init, IntensityField, KineticState, TemperatureField};
use crate::grid::SpatialGrid;
use crate::kinetic::KineticSolver;
use crate::limit::{u_of_t, LimitSolver, LimitState};
use crate::output::{
    config_hash, energy_row, entropy_row, read_snapshot, steps_row, write_snapshot, CsvWriter,
    Snapshot, ENERGY_HEADER, ENTROPY_HEADER, STEPS_HEADER,
};
use crate::params::{BcMode, Params};
use crate::quadrature::AngularQuadrature;
use crate::spectral::FourierProjector;
use crate::stencil::FieldHistory;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Incremental audit residual for the energy.csv `residual` column: the
/// torus inequality gap, or the pre-Gronwall gap `LHS(t) − LHS(0)` on
/// walled domains.
struct ResidualTracker {
    torus: bool,
    baseline: Option<f64>,
    cum: f64,
    prev: Option<(f64, f64)>,
}

impl ResidualTracker {
    fn new(bc: BcMode) -> Self {
        Self {
            torus: bc == BcMode::Torus,
            baseline: None,
            cum: 0.0,
            prev: None,
        }
    }

    fn push(&mut self, r: &EnergyRecord) -> f64 {
        let (inst, diss) = if self.torus {
            (
                r.total_energy(),
                r.dissipation_grad + r.dissipation_relax,
            )
        } else {
            (
                5.0 * r.energy_t5 + 2.0 * r.energy_psi2,
                25.0 / 16.0 * r.dissipation_grad
                    + r.dissipation_relax
                    + r.boundary_psi_out
                    + r.boundary_t_robin,
            )
        };
        if let Some((pt, pd)) = self.prev {
            self.cum += 0.5 * (diss + pd) * (r.time - pt);
        }
        self.prev = Some((r.time, diss));
        let baseline = *self.baseline.get_or_insert(inst);
        inst + self.cum - baseline
    }
}

/// Artifacts of one kinetic run.
pub struct KineticRunResult {
    pub final_state: KineticState,
    pub records: Vec<EnergyRecord>,
    pub out_dir: PathBuf,
    pub hash: String,
}

pub fn build_kinetic_solver(cfg: &RunConfig) -> Result<KineticSolver> {
    KineticSolver::new(
        cfg.build_grid()?,
        cfg.build_quadrature()?,
        cfg.build_params()?,
        cfg.build_solver_config(),
        cfg.build_boundary()?,
    )
}

/// Initial kinetic state for a run: well-prepared equilibrium from the
/// configured temperature profile, or an exact restart (temperature,
/// intensity and time) when the initial spec names a kinetic snapshot with
/// a matching ordinate count.
pub fn build_initial_state(
    cfg: &RunConfig,
    grid: &SpatialGrid,
    quad: &crate::quadrature::AngularQuadrature,
) -> Result<KineticState> {
    if let crate::config::InitialSpec::File { path } = &cfg.initial {
        let snap = crate::output::read_snapshot(path)?;
        if snap.n_ord != 0 {
            if snap.grid != *grid {
                return Err(Error::Config(format!(
                    "snapshot grid in {} does not match the configured grid",
                    path.display()
                )));
            }
            if snap.n_ord != quad.len() {
                return Err(Error::Config(format!(
                    "snapshot has {} ordinates but the configured quadrature has {}",
                    snap.n_ord,
                    quad.len()
                )));
            }
            return KineticState::new(
                snap.time,
                TemperatureField::new(snap.temperature)?,
                IntensityField::new(snap.intensity, snap.n_ord)?,
            );
        }
        // Limit snapshots carry only a temperature; fall through to the
        // well-prepared construction below.
    }
    let t0 = cfg.build_initial(grid)?;
    well_prepared_init(&t0, quad)
}

/// Runs the kinetic solver per the config, writing `energy.csv`,
/// `steps.csv` and snapshots into `out_dir`.
pub fn run_kinetic(cfg: &RunConfig, out_dir: &Path) -> Result<KineticRunResult> {
    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_toml()?);
    let solver = build_kinetic_solver(cfg)?;
    let grid = solver.grid().clone();
    let quad = solver.quad().clone();
    let params = *solver.params();
    let boundary = solver.boundary().clone();
    let state = build_initial_state(cfg, &grid, &quad)?;

    let projector = match cfg.solver.galerkin_modes {
        Some(m) => Some(FourierProjector::new(&grid, m)?),
        None => None,
    };

    let mut energy_csv = CsvWriter::create(&out_dir.join("energy.csv"), &hash, ENERGY_HEADER)?;
    let mut steps_csv = CsvWriter::create(&out_dir.join("steps.csv"), &hash, STEPS_HEADER)?;
    let mut tracker = ResidualTracker::new(params.bc_mode);
    let mut records: Vec<EnergyRecord> = Vec::new();

    let initial_record =
        energy_record(&state, &quad, &grid, &params, &boundary, projector.as_ref())?;
    let res0 = tracker.push(&initial_record);
    energy_csv.write_row(&energy_row(&initial_record, res0))?;
    records.push(initial_record);
    write_snapshot(
        &out_dir.join("snap_000000.bin"),
        &snapshot_of(&grid, &state),
        &hash,
    )?;

    let record_every = cfg.run.record_every;
    let snapshot_every = cfg.run.snapshot_every;
    let mut step_idx = 0usize;
    let mut observer_error: Option<Error> = None;

    let final_state = {
        let obs = |st: &KineticState, rep: &crate::kinetic::StepReport| {
            step_idx += 1;
            if observer_error.is_some() {
                return;
            }
            let due = step_idx.is_multiple_of(record_every) || st.time == cfg.run.t_end;
            if !due {
                return;
            }
            let mut run = || -> Result<()> {
                let rec =
                    energy_record(st, &quad, &grid, &params, &boundary, projector.as_ref())?;
                let res = tracker.push(&rec);
                energy_csv.write_row(&energy_row(&rec, res))?;
                steps_csv.write_mixed_row(&steps_row(st.time, rep))?;
                records.push(rec);
                if snapshot_every > 0 && step_idx.is_multiple_of(snapshot_every) && st.time != cfg.run.t_end
                {
                    write_snapshot(
                        &out_dir.join(format!("snap_{step_idx:06}.bin")),
                        &snapshot_of(&grid, st),
                        &hash,
                    )?;
                }
                Ok(())
            };
            if let Err(e) = run() {
                observer_error = Some(e);
            }
        };
        if projector.is_some() {
            solver.galerkin_advance(state, cfg.run.t_end, obs)?
        } else {
            solver.advance(state, cfg.run.t_end, obs)?
        }
    };
    if let Some(e) = observer_error {
        return Err(e);
    }

    write_snapshot(
        &out_dir.join("snap_final.bin"),
        &snapshot_of(&grid, &final_state),
        &hash,
    )?;
    energy_csv.finish()?;
    steps_csv.finish()?;
    Ok(KineticRunResult {
        final_state,
        records,
        out_dir: out_dir.to_path_buf(),
        hash,
    })
}

fn snapshot_of(grid: &SpatialGrid, state: &KineticState) -> Snapshot {
    Snapshot {
        grid: grid.clone(),
        time: state.time,
        temperature: state.temperature.values().to_vec(),
        intensity: state.intensity.values().to_vec(),
        n_ord: state.intensity.n_ord(),
    }
}

/// Artifacts of one limit run.
pub struct LimitRunResult {
    pub final_state: LimitState,
    pub history: FieldHistory,
    pub out_dir: PathBuf,
    pub hash: String,
}

/// Largest step `<= dt_max` that divides `span` into a whole number of
/// steps, so recorded histories are exactly uniform.
pub fn uniform_step(span: f64, dt_max: f64) -> f64 {
    let steps = ((span / dt_max) - 1e-9).ceil().max(1.0);
    span / steps
}

/// Runs the limit solver, writing `limit.csv` and snapshots, and returning
/// the full per-step temperature history. The step is the largest uniform
/// divisor of `t_end` not exceeding `dt` (default: the kinetic stable step
/// of the configured ε), so the history is exactly uniformly spaced.
pub fn run_limit(cfg: &RunConfig, out_dir: &Path, dt: Option<f64>) -> Result<LimitRunResult> {
    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_toml()?);
    let grid = cfg.build_grid()?;
    let params = cfg.build_params()?;
    let boundary = cfg.build_boundary()?;
    let solver = LimitSolver::new(grid.clone(), params, boundary)?;
    let dt_max = match dt {
        Some(v) => v,
        None => build_kinetic_solver(cfg)?.stable_dt(),
    };
    let dt = uniform_step(cfg.run.t_end, dt_max);
    let t0 = cfg.build_initial(&grid)?;
    let state = LimitState::new(0.0, t0)?;

    let mut csv = CsvWriter::create(
        &out_dir.join("limit.csv"),
        &hash,
        &["time", "mass_u", "t_min", "t_max"],
    )?;
    let vol = grid.cell_volume();
    let mass = |f: &TemperatureField| -> Result<f64> {
        let mut acc = 0.0;
        for &t in f.values() {
            acc += u_of_t(t)?;
        }
        Ok(acc * vol)
    };
    csv.write_row(&[
        0.0,
        mass(&state.temperature)?,
        state.temperature.min(),
        state.temperature.max(),
    ])?;
    write_snapshot(
        &out_dir.join("snap_000000.bin"),
        &limit_snapshot(&grid, &state),
        &hash,
    )?;

    let mut times = vec![0.0];
    let mut fields = vec![state.temperature.values().to_vec()];
    let mut observer_error: Option<Error> = None;
    let final_state = solver.advance(state, cfg.run.t_end, dt, |st| {
        times.push(st.time);
        fields.push(st.temperature.values().to_vec());
        if observer_error.is_none() {
            let mut run = || -> Result<()> {
                csv.write_row(&[
                    st.time,
                    mass(&st.temperature)?,
                    st.temperature.min(),
                    st.temperature.max(),
                ])?;
                Ok(())
            };
            if let Err(e) = run() {
                observer_error = Some(e);
            }
        }
    })?;
    if let Some(e) = observer_error {
        return Err(e);
    }
    write_snapshot(
        &out_dir.join("snap_final.bin"),
        &limit_snapshot(&grid, &final_state),
        &hash,
    )?;
    csv.finish()?;

    let history = FieldHistory::new(times, fields)?;
    Ok(LimitRunResult {
        final_state,
        history,
        out_dir: out_dir.to_path_buf(),
        hash,
    })
}

fn limit_snapshot(grid: &SpatialGrid, state: &LimitState) -> Snapshot {
    Snapshot {
        grid: grid.clone(),
        time: state.time,
        temperature: state.temperature.values().to_vec(),
        intensity: Vec::new(),
        n_ord: 0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateMember {
    pub epsilon: f64,
    pub error_l4_4: f64,
    pub error_l2_2: f64,
    pub error_total: f64,
    /// Final-time error with the one-cell wall ring excluded; equals
    /// `error_total` on the torus.
    pub error_total_interior: f64,
    pub h_initial: f64,
    pub h_final: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub scenario: String,
    pub bc_mode: String,
    pub robin_r: f64,
    /// Target exponent of the regime (2, 1 or min(1, r)); informational.
    pub rate_target: f64,
    pub synthetic: bool,
    pub dt_used: f64,
    pub members: Vec<RateMember>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Smallest Gronwall constant bounding every member's entropy series,
    /// when the fit succeeds below the cap of 1e3.
    pub gronwall_c: Option<f64>,
}

pub fn rate_target(params: &Params) -> f64 {
    match params.bc_mode {
        BcMode::Torus => 2.0,
        BcMode::Dirichlet => 1.0,
        BcMode::Robin => params.robin_r.min(1.0),
    }
}

/// Runs the ε-sweep study: one shared limit run, one kinetic run per ε,
/// relative-entropy series against the corrected profile, and a log-log
/// rate fit of the final-time errors. Member artifacts land in
/// `out_dir/eps_*`; the fit in `rate.csv` and `report.json`.
///
/// `threads > 1` runs sweep members concurrently; each member is internally
/// deterministic and writes only to its own directory.
pub fn run_rate_study(sweep: &SweepConfig, out_dir: &Path, threads: usize) -> Result<RateReport> {
    sweep.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let base = &sweep.base;
    let params = base.build_params()?;
    let target = rate_target(&params);

    if let Some(s) = sweep.sweep.synthetic_exponent {
        let coeff = sweep.sweep.synthetic_coefficient;
        let members: Vec<RateMember> = sweep
            .sweep
            .epsilons
            .iter()
            .map(|&e| RateMember {
                epsilon: e,
                error_l4_4: 0.0,
                error_l2_2: coeff * e.powf(s),
                error_total: coeff * e.powf(s),
                error_total_interior: coeff * e.powf(s),
                h_initial: 0.0,
                h_final: 0.0,
            })
            .collect();
        let pairs: Vec<(f64, f64)> = members
            .iter()
            .map(|m| (m.epsilon, m.error_total))
            .collect();
        let (slope, intercept, r2) = fit_rate(&pairs)?;
        let report = RateReport {
            scenario: base.run.scenario.clone(),
            bc_mode: format!("{:?}", params.bc_mode).to_lowercase(),
            robin_r: params.robin_r,
            rate_target: target,
            synthetic: true,
            dt_used: 0.0,
            members,
            slope,
            intercept,
            r_squared: r2,
            gronwall_c: None,
        };
        write_rate_outputs(out_dir, &report, &config_hash(&sweep.canonical_toml()?))?;
        return Ok(report);
    }

    // Shared step size: slave every run to the smallest ε's stable step,
    // snapped to a uniform divisor of t_end so that record times align
    // exactly across the kinetic members and the limit history.
    let dt_stable = if sweep.sweep.slave_dt {
        let mut smallest = base.clone();
        smallest.params.epsilon = *sweep.sweep.epsilons.last().unwrap();
        build_kinetic_solver(&smallest)?.stable_dt()
    } else {
        build_kinetic_solver(base)?.stable_dt()
    };
    let dt = uniform_step(base.run.t_end, dt_stable);

    // One shared limit run (the limit equation is ε-free).
    let limit = run_limit(base, &out_dir.join("limit"), Some(dt))?;
    let history = std::sync::Arc::new(limit.history);

    type MemberOutcome = Result<(RateMember, Vec<(f64, f64)>)>;
    let mut member_results: Vec<Option<MemberOutcome>> =
        (0..sweep.sweep.epsilons.len()).map(|_| None).collect();
    let threads = threads.max(1);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (i, &eps) in sweep.sweep.epsilons.iter().enumerate() {
            let mut cfg = base.clone();
            cfg.params.epsilon = eps;
            cfg.solver.dt_override = Some(dt);
            let dir = out_dir.join(format!("eps_{eps}"));
            let history = history.clone();
            handles.push((
                i,
                scope.spawn(move || rate_member(&cfg, &dir, &history)),
            ));
            if handles.len() >= threads {
                let (idx, h) = handles.remove(0);
                member_results[idx] = Some(h.join().expect("sweep member panicked"));
            }
        }
        for (idx, h) in handles {
            member_results[idx] = Some(h.join().expect("sweep member panicked"));
        }
    });

    let mut members = Vec::new();
    let mut gronwall_runs = Vec::new();
    for (i, slot) in member_results.into_iter().enumerate() {
        let eps = sweep.sweep.epsilons[i];
        let (member, series) =
            slot.expect("member scheduled").map_err(|e| {
                Error::Solver(format!("sweep member eps={eps} failed: {e}"))
            })?;
        gronwall_runs.push((eps.powf(target.max(f64::MIN_POSITIVE)), member.h_initial, series));
        members.push(member);
    }

    let pairs: Vec<(f64, f64)> = members
        .iter()
        .map(|m| (m.epsilon, m.error_total))
        .collect();
    let (slope, intercept, r2) = fit_rate(&pairs)?;
    let gronwall_c = fit_gronwall_constant(&gronwall_runs, 1e3);

    let report = RateReport {
        scenario: base.run.scenario.clone(),
        bc_mode: format!("{:?}", params.bc_mode).to_lowercase(),
        robin_r: params.robin_r,
        rate_target: target,
        synthetic: false,
        dt_used: dt,
        members,
        slope,
        intercept,
        r_squared: r2,
        gronwall_c,
    };
    write_rate_outputs(out_dir, &report, &config_hash(&sweep.canonical_toml()?))?;
    Ok(report)
}

/// One sweep member: kinetic run plus entropy series against the shared
/// limit history. Returns the member summary and the `(t, H)` series.
fn rate_member(
    cfg: &RunConfig,
    out_dir: &Path,
    history: &FieldHistory,
) -> Result<(RateMember, Vec<(f64, f64)>)> {
    std::fs::create_dir_all(out_dir)?;
    let hash = config_hash(&cfg.canonical_toml()?);
    let solver = build_kinetic_solver(cfg)?;
    let grid = solver.grid().clone();
    let quad = solver.quad().clone();
    let params = *solver.params();
    let boundary = solver.boundary().clone();
    let eps = params.epsilon;
    let t0 = cfg.build_initial(&grid)?;
    let state = well_prepared_init(&t0, &quad)?;

    let mut energy_csv = CsvWriter::create(&out_dir.join("energy.csv"), &hash, ENERGY_HEADER)?;
    let mut entropy_csv = CsvWriter::create(&out_dir.join("entropy.csv"), &hash, ENTROPY_HEADER)?;
    let mut tracker = ResidualTracker::new(params.bc_mode);
    let mut h_series: Vec<(f64, f64)> = Vec::new();
    let mut observer_error: Option<Error> = None;

    let entropy_at = |st: &KineticState| -> Result<EntropyRecord> {
        let idx = history.index_of(st.time)?;
        let tbar = TemperatureField::new(history.field(idx).to_vec())?;
        let psibar = diagnostics::corrected_intensity(history, idx, eps, &quad, &grid)?;
        relative_entropy(st, &tbar, &psibar, &quad, &grid)
    };

    // Initial records.
    let rec = energy_record(&state, &quad, &grid, &params, &boundary, None)?;
    let res = tracker.push(&rec);
    energy_csv.write_row(&energy_row(&rec, res))?;
    let ent0 = entropy_at(&state)?;
    entropy_csv.write_row(&entropy_row(&ent0))?;
    h_series.push((ent0.time, ent0.h));
    let h_initial = ent0.h;
    let mut last_entropy: Option<EntropyRecord> = Some(ent0);

    let record_every = cfg.run.record_every;
    let mut step_idx = 0usize;
    let final_state = solver.advance(state, cfg.run.t_end, |st, _rep| {
        step_idx += 1;
        if observer_error.is_some() {
            return;
        }
        if !step_idx.is_multiple_of(record_every) && st.time != cfg.run.t_end {
            return;
        }
        let mut run = || -> Result<()> {
            let rec = energy_record(st, &quad, &grid, &params, &boundary, None)?;
            let res = tracker.push(&rec);
            energy_csv.write_row(&energy_row(&rec, res))?;
            let ent = entropy_at(st)?;
            entropy_csv.write_row(&entropy_row(&ent))?;
            h_series.push((ent.time, ent.h));
            last_entropy = Some(ent);
            Ok(())
        };
        if let Err(e) = run() {
            observer_error = Some(e);
        }
    })?;
    if let Some(e) = observer_error {
        return Err(e);
    }
    write_snapshot(
        &out_dir.join("snap_final.bin"),
        &snapshot_of(&grid, &final_state),
        &hash,
    )?;
    energy_csv.finish()?;
    entropy_csv.finish()?;

    let last = last_entropy.expect("at least the initial entropy record exists");
    let interior = {
        let idx = history.index_of(final_state.time)?;
        let tbar = TemperatureField::new(history.field(idx).to_vec())?;
        let psibar = diagnostics::corrected_intensity(history, idx, eps, &quad, &grid)?;
        let rec = diagnostics::relative_entropy_interior(
            &final_state,
            &tbar,
            &psibar,
            &quad,
            &grid,
            1,
        )?;
        rec.error_l4_4 + rec.error_l2_2
    };
    let member = RateMember {
        epsilon: eps,
        error_l4_4: last.error_l4_4,
        error_l2_2: last.error_l2_2,
        error_total: last.error_l4_4 + last.error_l2_2,
        error_total_interior: interior,
        h_initial,
        h_final: last.h,
    };
    Ok((member, h_series))
}

fn write_rate_outputs(out_dir: &Path, report: &RateReport, hash: &str) -> Result<()> {
    let mut csv = CsvWriter::create(
        &out_dir.join("rate.csv"),
        hash,
        &["epsilon", "error_L4_4", "error_L2_2", "error_total"],
    )?;
    for m in &report.members {
        csv.write_row(&[m.epsilon, m.error_l4_4, m.error_l2_2, m.error_total])?;
    }
    csv.finish()?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    std::fs::write(out_dir.join("report.json"), json)?;
    Ok(())
}

/// Recomputes energy diagnostics from the snapshots of a finished run and
/// re-audits the regime's inequality. Returns the audit report and writes
/// `audit.csv` next to the snapshots.
pub fn audit(cfg: &RunConfig, run_dir: &Path) -> Result<diagnostics::AuditReport> {
    let grid = cfg.build_grid()?;
    let quad = cfg.build_quadrature()?;
    let params = cfg.build_params()?;
    let boundary = cfg.build_boundary()?;
    let projector = match cfg.solver.galerkin_modes {
        Some(m) => Some(FourierProjector::new(&grid, m)?),
        None => None,
    };

    let mut snaps: Vec<Snapshot> = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(run_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().map(|e| e == "bin").unwrap_or(false)
                && p.file_name()
                    .map(|n| n.to_string_lossy().starts_with("snap_"))
                    .unwrap_or(false)
        })
        .collect();
    entries.sort();
    for path in entries {
        let snap = read_snapshot(&path)?;
        if snap.n_ord == 0 {
            continue; // limit snapshots carry no intensity to audit
        }
        snaps.push(snap);
    }
    if snaps.is_empty() {
        return Err(Error::Config(format!(
            "no kinetic snapshots found in {}",
            run_dir.display()
        )));
    }
    snaps.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());

    let mut records = Vec::new();
    for snap in &snaps {
        if snap.grid != grid {
            return Err(Error::Config(
                "snapshot grid does not match the configured grid".into(),
            ));
        }
        let state = KineticState::new(
            snap.time,
            TemperatureField::new(snap.temperature.clone())?,
            IntensityField::new(snap.intensity.clone(), snap.n_ord)?,
        )?;
        records.push(energy_record(
            &state,
            &quad,
            &grid,
            &params,
            &boundary,
            projector.as_ref(),
        )?);
    }
    let report = diagnostics::energy_audit(&records, &params)?;

    let hash = config_hash(&cfg.canonical_toml()?);
    let mut csv = CsvWriter::create(&run_dir.join("audit.csv"), &hash, ENERGY_HEADER)?;
    for (rec, res) in records.iter().zip(&report.residuals) {
        csv.write_row(&energy_row(rec, *res))?;
    }
    csv.finish()?;
    Ok(report)
}

/// Invariant self-test suite. Returns the list of `(name, passed, detail)`
/// outcomes; the caller decides how to render them.
pub fn selftest(seed: u64) -> Vec<(&'static str, bool, String)> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let mut results: Vec<(&'static str, bool, String)> = Vec::new();
    let mut push = |name: &'static str, outcome: Result<String>| match outcome {
        Ok(detail) => results.push((name, true, detail)),
        Err(e) => results.push((name, false, format!("{e}"))),
    };

    push("quadrature moments", {
        (|| {
            for (np, na) in [(2usize, 4usize), (4, 8), (8, 8)] {
                AngularQuadrature::product_rule(np, na)?.certify_moments(1e-12)?;
            }
            Ok("rules (2,4), (4,8), (8,8) certified at 1e-12".into())
        })()
    });

    push("reflection involution", {
        (|| {
            let quad = AngularQuadrature::product_rule(4, 8)?;
            for axis in 0..3 {
                let map = crate::quadrature::ReflectionMap::new(&quad, axis)?;
                for q in 0..quad.len() {
                    if map.apply(map.apply(q)) != q {
                        return Err(Error::Quadrature(format!(
                            "axis {axis} node {q} not involutive"
                        )));
                    }
                }
            }
            Ok("axis reflections are weight-preserving involutions".into())
        })()
    });

    push("relaxation conservation", {
        (|| {
            let grid = crate::grid::make_grid(1, &[8], &[1.0], &[true])?;
            let quad = AngularQuadrature::product_rule(4, 8)?;
            let params = Params::torus(0.1)?;
            let solver = KineticSolver::new(
                grid.clone(),
                quad.clone(),
                params,
                Default::default(),
                BoundaryData::uniform(1.0)?,
            )?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..125 {
                let tvals: Vec<f64> = (0..8).map(|_| rng.gen_range(0.0..2.0)).collect();
                let pvals: Vec<f64> =
                    (0..8 * quad.len()).map(|_| rng.gen_range(0.0..16.0)).collect();
                let mut state = KineticState::new(
                    0.0,
                    TemperatureField::new(tvals)?,
                    IntensityField::new(pvals, quad.len())?,
                )?;
                let before: Vec<f64> = (0..8)
                    .map(|c| {
                        state.temperature.values()[c]
                            + quad.integrate_unchecked(state.intensity.cell(c))
                    })
                    .collect();
                solver.step_relaxation(&mut state, rng.gen_range(1e-5..1.0))?;
                for c in 0..8 {
                    let after = state.temperature.values()[c]
                        + quad.integrate_unchecked(state.intensity.cell(c));
                    worst = worst.max((after - before[c]).abs());
                }
            }
            if worst > 1e-10 {
                return Err(Error::Solver(format!("conservation drift {worst:.3e}")));
            }
            Ok(format!("1000 random cells, worst drift {worst:.3e}"))
        })()
    });

    push("quintic gap bound", {
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            for _ in 0..100_000 {
                let c = rng.gen_range(1e-6..2.0);
                let a = c + rng.gen_range(0.0..5.0);
                let g = rng.gen_range(-a..5.0);
                let (ok, margin) = diagnostics::quintic_gap_check(a, g, c)?;
                if !ok {
                    return Err(Error::Diagnostics(format!(
                        "violated at A={a}, g={g}, c={c}: margin {margin:.3e}"
                    )));
                }
            }
            Ok("100000 random admissible triples hold".into())
        })()
    });

    push("conserved-variable inverse", {
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xface);
            let mut worst = 0.0f64;
            for _ in 0..10_000 {
                let t = rng.gen_range(0.0..10.0);
                let back = crate::limit::t_of_u(u_of_t(t)?)?;
                worst = worst.max((back - t).abs() / t.max(1.0));
            }
            if worst > 1e-12 {
                return Err(Error::Solver(format!("round-trip error {worst:.3e}")));
            }
            Ok(format!("10000 round-trips, worst relative error {worst:.3e}"))
        })()
    });

    push("equilibrium preservation", {
        (|| {
            let grid = crate::grid::make_grid(1, &[32], &[1.0], &[true])?;
            let quad = AngularQuadrature::product_rule(4, 8)?;
            let solver = KineticSolver::new(
                grid.clone(),
                quad.clone(),
                Params::torus(0.1)?,
                Default::default(),
                BoundaryData::uniform(1.0)?,
            )?;
            let t0 = TemperatureField::uniform(&grid, 1.3);
            let state = well_prepared_init(&t0, &quad)?;
            let dt = solver.stable_dt();
            let out = solver.advance(state, 50.0 * dt, |_, _| {})?;
            let mut drift = 0.0f64;
            for v in out.temperature.values() {
                drift = drift.max((v - 1.3).abs());
            }
            let eq = 1.3f64.powi(4);
            for v in out.intensity.values() {
                drift = drift.max((v - eq).abs());
            }
            if drift > 1e-11 {
                return Err(Error::Solver(format!("equilibrium drift {drift:.3e}")));
            }
            Ok(format!("50 steps, max drift {drift:.3e}"))
        })()
    });

    results
}
