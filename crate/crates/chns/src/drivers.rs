//! Convergence sweeps, rising bubble and Rayleigh-Taylor runs.

use crate::config::{ProblemKind, RunConfig};
use crate::error::RunError;
use crate::io;
use crate::solver::FaerLu;
use chns_core::forms::{Discretization, QuadratureOrders};
use chns_core::manufactured::Manufactured;
use chns_core::materials::PhaseParams;
use chns_core::postproc::{benchmark_record, l2_error, l2_error_velocity, BenchmarkRecord};
use chns_core::stepper::{initialize, InitialVelocity, SimState, Sources, StepRecord, Stepper, TimeControl};
use chns_core::StructuredMesh;
use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;

/// Called after every completed time step.
pub type Progress<'a> = &'a mut dyn FnMut(&StepRecord);

pub fn discretization(cfg: &RunConfig, mesh: StructuredMesh) -> Result<Discretization, RunError> {
    let quad = QuadratureOrders {
        volume: cfg.quad_volume,
        edge: cfg.quad_edge,
    };
    Ok(Discretization::new(mesh, cfg.k, cfg.alpha, cfg.mesh.sides, quad)?)
}

fn stepper(disc: Discretization, params: PhaseParams, time: TimeControl, sources: Sources) -> Result<Stepper, RunError> {
    Ok(Stepper::new(
        disc,
        params,
        time,
        sources,
        Box::new(FaerLu::new()),
        Box::new(FaerLu::new()),
    )?)
}

/// Circular bubble of fluid 2 (`phi < 0`) with radius 0.25 centred at (0.5, 0.5).
pub fn bubble_phase(eps: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| {
        let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
        ((r - 0.25) / (SQRT_2 * eps)).tanh()
    }
}

/// Heavy fluid above the interface `y = -0.1 cos(2 pi x)`.
pub fn rayleigh_taylor_phase(eps: f64, amplitude: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| ((y + amplitude * (2.0 * PI * x).cos()) / (SQRT_2 * eps)).tanh()
}

/// Builds the stepper and initial state of a bubble or Rayleigh-Taylor run
/// from an arbitrary initial phase field.
pub fn setup_with(cfg: &RunConfig, phi0: &dyn Fn(f64, f64) -> f64) -> Result<(Stepper, SimState), RunError> {
    let time = cfg
        .time_control()
        .ok_or_else(|| RunError::Usage(format!("problem `{}` needs `cfl` or `dt`", cfg.kind.name())))?;
    let mesh = cfg.mesh.build()?;
    let params = cfg.phase_params(mesh.h_min());
    let disc = discretization(cfg, mesh)?;
    let state = initialize(&disc, 0.0, phi0, None)?;
    let stepper = stepper(disc, params, time, Sources::gravity(cfg.physics.g))?;
    Ok((stepper, state))
}

/// Builds the stepper and initial state of a bubble or Rayleigh-Taylor run.
pub fn setup(cfg: &RunConfig) -> Result<(Stepper, SimState), RunError> {
    let eps = cfg.phase_params(cfg.mesh.h()).eps;
    match cfg.kind {
        ProblemKind::Bubble1 | ProblemKind::Bubble2 => setup_with(cfg, &bubble_phase(eps)),
        ProblemKind::RayleighTaylor => setup_with(cfg, &rayleigh_taylor_phase(eps, 0.1)),
        ProblemKind::Converge => Err(RunError::Usage("the convergence problem has no single run".into())),
    }
}

/// Extremes of a benchmark time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub c_min: f64,
    pub t_c_min: f64,
    pub vc_max: f64,
    pub t_vc_max: f64,
    pub y_c_final: f64,
    pub t_final: f64,
    pub initial_mass: f64,
    /// Largest `|int phi(t) - int phi(0)|` over all steps.
    pub mass_drift: f64,
    pub steps: usize,
}

impl Summary {
    fn from_run(records: &[BenchmarkRecord], log: &[StepRecord], initial_mass: f64) -> Self {
        let mut s = Summary {
            c_min: f64::NAN,
            t_c_min: f64::NAN,
            vc_max: f64::NAN,
            t_vc_max: f64::NAN,
            y_c_final: records.last().map_or(f64::NAN, |r| r.y_c),
            t_final: records.last().map_or(0.0, |r| r.t),
            initial_mass,
            mass_drift: log.iter().map(|r| (r.mass - initial_mass).abs()).fold(0.0, f64::max),
            steps: log.len(),
        };
        for r in records {
            if r.circularity.is_finite() && !(r.circularity >= s.c_min) {
                s.c_min = r.circularity;
                s.t_c_min = r.t;
            }
            if r.v_c.is_finite() && !(r.v_c <= s.vc_max) {
                s.vc_max = r.v_c;
                s.t_vc_max = r.t;
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,value\n");
        for (k, v) in [
            ("c_min", self.c_min),
            ("t_c_min", self.t_c_min),
            ("vc_max", self.vc_max),
            ("t_vc_max", self.t_vc_max),
            ("y_c_final", self.y_c_final),
            ("t_final", self.t_final),
            ("initial_mass", self.initial_mass),
            ("mass_drift", self.mass_drift),
        ] {
            let _ = writeln!(s, "{k},{}", io::fmt_sci(v));
        }
        let _ = writeln!(s, "steps,{}", self.steps);
        s
    }
}

pub struct BenchmarkRun {
    pub records: Vec<BenchmarkRecord>,
    pub log: Vec<StepRecord>,
    pub summary: Summary,
    pub state: SimState,
    pub disc: Discretization,
}

fn create_dir(dir: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))
}

/// Writes the resolved configuration into the output directory.
pub fn echo_config(cfg: &RunConfig, dir: &Path) -> Result<(), RunError> {
    create_dir(dir)?;
    io::write_text(&dir.join("config.resolved.ini"), &cfg.to_ini())
}

/// Advances a bubble or Rayleigh-Taylor configuration to `t_end`.
///
/// Steps are shortened to land exactly on every series and snapshot time.
/// With `out` set, the series, the step log, the summary and VTK snapshots
/// are written there.
pub fn run_benchmark(cfg: &RunConfig, out: Option<&Path>, progress: Progress<'_>) -> Result<BenchmarkRun, RunError> {
    let (stepper, state) = setup(cfg)?;
    run_from(cfg, stepper, state, out, progress)
}

/// Same as [`run_benchmark`] with a prepared stepper and state.
pub fn run_from(
    cfg: &RunConfig,
    mut stepper: Stepper,
    mut state: SimState,
    out: Option<&Path>,
    progress: Progress<'_>,
) -> Result<BenchmarkRun, RunError> {
    if let Some(dir) = out {
        echo_config(cfg, dir)?;
    }
    let (samples, points) = (cfg.contour_samples, cfg.region_points);
    let record = |disc: &Discretization, s: &SimState, dt: f64| {
        benchmark_record(disc, &s.phi, &s.xi, s.t, dt, samples, points)
    };
    let mut snapshot = 0usize;
    let mut write_vtk = |disc: &Discretization, s: &SimState| -> Result<(), RunError> {
        if let Some(dir) = out {
            io::write_fields(disc, &s.phi, &s.xi, s.t, &dir.join(format!("fields_{snapshot:05}.vtk")))?;
            snapshot += 1;
        }
        Ok(())
    };
    let initial_mass = stepper.disc.integral_w(&state.phi);
    let mut records = vec![record(&stepper.disc, &state, 0.0)?];
    let mut log = Vec::new();
    write_vtk(&stepper.disc, &state)?;
    let t_end = cfg.t_end;
    let tol = 1e-9 * t_end.max(1.0);
    let next_multiple = |period: f64, t: f64| {
        if period > 0.0 {
            ((t + tol) / period).floor() * period + period
        } else {
            f64::INFINITY
        }
    };
    let h = stepper.disc.mesh.h_min();
    while state.t < t_end - tol {
        let next_series = next_multiple(cfg.series_period, state.t);
        let next_vtk = next_multiple(cfg.vtk_period, state.t);
        let stop = t_end.min(next_series).min(next_vtk);
        let v_max = stepper.disc.max_velocity(&state.xi);
        let mut dt = stepper.time.step_size(h, v_max);
        let gap = stop - state.t;
        if gap <= dt * (1.0 + 1e-6) {
            dt = gap;
        }
        let rec = stepper.advance_with(&mut state, dt, v_max)?;
        if (state.t - stop).abs() <= tol {
            state.t = stop;
        }
        progress(&rec);
        log.push(rec);
        if cfg.series_period == 0.0 || state.t >= next_series - tol {
            records.push(record(&stepper.disc, &state, dt)?);
        }
        if cfg.vtk_period > 0.0 && state.t >= next_vtk - tol {
            write_vtk(&stepper.disc, &state)?;
        }
    }
    if records.last().is_some_and(|r| r.t < state.t - tol) {
        records.push(record(&stepper.disc, &state, state.dt_prev.unwrap_or(0.0))?);
    }
    if cfg.vtk_period == 0.0 && !log.is_empty() {
        write_vtk(&stepper.disc, &state)?;
    }
    let summary = Summary::from_run(&records, &log, initial_mass);
    if let Some(dir) = out {
        io::write_series(&records, &dir.join(&cfg.csv))?;
        io::write_steps(&log, &dir.join("steps.csv"))?;
        io::write_text(&dir.join("summary.csv"), &summary.to_csv())?;
    }
    Ok(BenchmarkRun {
        records,
        log,
        summary,
        state,
        disc: stepper.disc,
    })
}

/// Errors of one manufactured-solution run and the observed orders against
/// the previous row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub steps: usize,
    pub dt: f64,
    pub err_u: f64,
    pub err_phi: f64,
    pub err_mu: f64,
    pub order_u: f64,
    pub order_phi: f64,
    pub order_mu: f64,
}

/// Number of uniform steps on `[0, t_end]` with `dt <= h^{(k+1)/2}`.
pub fn convergence_steps(t_end: f64, h: f64, k: usize) -> usize {
    let dt = h.powf((k as f64 + 1.0) / 2.0);
    ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Runs the manufactured solution on an `n x n` mesh with `steps` uniform
/// steps. `phi` and `u` are compared at `t_end`, `mu` at `t_end - dt / 2`.
pub fn manufactured_run(cfg: &RunConfig, n: usize, steps: usize, progress: Progress<'_>) -> Result<ConvergenceRow, RunError> {
    let b = cfg.mesh.bounds;
    let mesh = StructuredMesh::new(n, n, b, cfg.mesh.periodic_x, cfg.mesh.periodic_y)?;
    let h = mesh.h_min();
    let params = cfg.phase_params(h);
    let m = Manufactured::new(params);
    let dt = cfg.t_end / steps as f64;
    let disc = discretization(cfg, mesh)?;
    let state = initialize(
        &disc,
        0.0,
        &|x, y| m.phi(x, y, 0.0),
        Some(InitialVelocity {
            stream: &|x, y| m.stream(x, y, 0.0),
            velocity: &|x, y| m.velocity(x, y, 0.0),
        }),
    )?;
    let sources = Sources {
        phase: Some(Box::new(move |x, y, t| m.phase_source(x, y, t))),
        force: Some(Box::new(move |x, y, t| m.force(x, y, t))),
    };
    let mut stepper = stepper(disc, params, TimeControl::Fixed { dt }, sources)?;
    let mut state = state;
    for _ in 0..steps {
        let rec = stepper.advance_with(&mut state, dt, 0.0)?;
        progress(&rec);
    }
    let t = state.t;
    let disc = &stepper.disc;
    Ok(ConvergenceRow {
        n,
        h,
        steps,
        dt,
        err_u: l2_error_velocity(disc, &state.xi, &|x, y| m.velocity(x, y, t))?,
        err_phi: l2_error(disc, &state.phi, &|x, y| m.phi(x, y, t))?,
        err_mu: l2_error(disc, &state.mu, &|x, y| m.mu(x, y, t - 0.5 * dt))?,
        order_u: f64::NAN,
        order_phi: f64::NAN,
        order_mu: f64::NAN,
    })
}

fn fill_orders(rows: &mut [ConvergenceRow], scale: impl Fn(&ConvergenceRow) -> f64) {
    for i in 1..rows.len() {
        let (a, b) = (rows[i - 1], rows[i]);
        let r = (scale(&a) / scale(&b)).ln();
        rows[i].order_u = (a.err_u / b.err_u).ln() / r;
        rows[i].order_phi = (a.err_phi / b.err_phi).ln() / r;
        rows[i].order_mu = (a.err_mu / b.err_mu).ln() / r;
    }
}

/// Spatial sweep over `levels` with `dt = h^{(k+1)/2}`; orders are per mesh
/// refinement.
pub fn spatial_sweep(cfg: &RunConfig, progress: Progress<'_>) -> Result<Vec<ConvergenceRow>, RunError> {
    let mut rows = Vec::new();
    for &n in &cfg.levels {
        let h = (cfg.mesh.bounds[1] - cfg.mesh.bounds[0]) / n as f64;
        let steps = convergence_steps(cfg.t_end, h, cfg.k);
        rows.push(manufactured_run(cfg, n, steps, progress)?);
    }
    fill_orders(&mut rows, |r| r.h);
    Ok(rows)
}

/// Temporal sweep on the last level over `time_steps`; orders are per step
/// size reduction.
pub fn temporal_sweep(cfg: &RunConfig, progress: Progress<'_>) -> Result<Vec<ConvergenceRow>, RunError> {
    let n = *cfg
        .levels
        .last()
        .ok_or_else(|| RunError::Usage("temporal sweep needs a mesh level".into()))?;
    let mut rows = Vec::new();
    for &steps in &cfg.time_steps {
        rows.push(manufactured_run(cfg, n, steps, progress)?);
    }
    fill_orders(&mut rows, |r| r.dt);
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("n,h,steps,dt,err_u,err_phi,err_mu,order_u,order_phi,order_mu\n");
    for r in rows {
        let f = [r.h];
        let g = [r.dt, r.err_u, r.err_phi, r.err_mu, r.order_u, r.order_phi, r.order_mu];
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.n,
            io::fmt_sci(f[0]),
            r.steps,
            g.iter().map(|v| io::fmt_sci(*v)).collect::<Vec<_>>().join(",")
        );
    }
    s
}

/// Spatial or temporal sweep depending on `time_steps`.
pub fn run_convergence(cfg: &RunConfig, out: Option<&Path>, progress: Progress<'_>) -> Result<Vec<ConvergenceRow>, RunError> {
    if cfg.kind != ProblemKind::Converge {
        return Err(RunError::Usage(format!("`{}` is not a convergence problem", cfg.kind.name())));
    }
    if let Some(dir) = out {
        echo_config(cfg, dir)?;
    }
    let rows = if cfg.time_steps.is_empty() {
        spatial_sweep(cfg, progress)?
    } else {
        temporal_sweep(cfg, progress)?
    };
    if let Some(dir) = out {
        io::write_text(&dir.join(&cfg.csv), &convergence_csv(&rows))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn convergence_step_rule() {
        assert_eq!(convergence_steps(0.5, 0.125, 1), 4);
        assert_eq!(convergence_steps(0.5, 0.125, 2), 12);
        assert_eq!(convergence_steps(0.5, 1.0 / 32.0, 2), 91);
        assert_eq!(convergence_steps(0.5, 1.0 / 16.0, 1), 8);
    }

    #[test]
    fn initial_phases_have_the_right_sign() {
        let b = bubble_phase(0.02);
        assert!(b(0.5, 0.5) < -0.99 && b(0.5, 1.5) > 0.99);
        assert!(b(0.75, 0.5).abs() < 1e-12);
        let r = rayleigh_taylor_phase(0.02, 0.1);
        assert!(r(0.25, -0.1 * (PI / 2.0).cos()).abs() < 1e-12);
        assert!(r(0.0, -0.1).abs() < 1e-12);
        assert!(r(0.1, 1.0) > 0.99 && r(0.1, -1.0) < -0.99);
    }

    #[test]
    fn records_land_on_series_times() {
        let cfg = parse_config(
            "[problem]\nkind = bubble1\n[mesh]\nnx = 2\nny = 4\n[discretization]\nk = 1\n[time]\ndt = 0.03\nt_end = 0.1\n[output]\nseries_period = 0.05\n",
        )
        .unwrap();
        let mut n = 0;
        let run = run_benchmark(&cfg, None, &mut |_| n += 1).unwrap();
        let times: Vec<f64> = run.records.iter().map(|r| r.t).collect();
        assert_eq!(times, vec![0.0, 0.05, 0.1]);
        assert_eq!(n, 4);
        assert_eq!(run.summary.steps, 4);
        assert!(run.summary.mass_drift < 1e-12);
    }

    #[test]
    fn summary_picks_extremes() {
        let r = |t: f64, c: f64, v: f64| BenchmarkRecord {
            t,
            dt: 0.1,
            vmax: 0.0,
            mass: 0.0,
            y_c: t,
            circularity: c,
            v_c: v,
            y_bubble: 0.0,
            y_spike: 0.0,
        };
        let s = Summary::from_run(&[r(0.0, 1.0, 0.0), r(1.0, 0.9, 0.3), r(2.0, f64::NAN, 0.2)], &[], 0.0);
        assert_eq!((s.c_min, s.t_c_min, s.vc_max, s.t_vc_max, s.y_c_final), (0.9, 1.0, 0.3, 1.0, 2.0));
    }
}
