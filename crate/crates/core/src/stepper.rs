//! Fully discrete IMEX time stepping.
//!
//! One step selects the step size, extrapolates velocity and phase data to the
//! half step, solves the linearized Cahn-Hilliard system for
//! `(phi, phi_hat, mu, mu_hat)` and then the stream-function momentum system
//! for `(xi, u_hat)`. Both systems are condensed onto skeleton unknowns.

use crate::error::{Error, Result};
use crate::forms::{kernels, BlockLayout, BlockSystem, CoefficientField, Discretization};
use crate::linalg::{condense, relative_residual, LinearSolver};
use crate::materials::{double_well, PhaseParams};
use crate::mesh::Side;
use crate::spaces::FieldCoeffs;
use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Scalar source `f(x, y, t)`.
pub type ScalarSource = Box<dyn Fn(f64, f64, f64) -> f64>;
/// Vector source `f(x, y, t)`.
pub type VectorSource = Box<dyn Fn(f64, f64, f64) -> [f64; 2]>;

/// Default relative floor of the mobility and interface coefficients.
pub const DEFAULT_COEFFICIENT_FLOOR: f64 = 1e-8;

/// Step size selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeControl {
    Fixed { dt: f64 },
    Cfl { cfl: f64, v_floor: f64, dt_max: f64 },
}

impl TimeControl {
    pub fn cfl(cfl: f64) -> Self {
        TimeControl::Cfl {
            cfl,
            v_floor: 1e-8,
            dt_max: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TimeControl::Fixed { dt } => dt > 0.0 && dt.is_finite(),
            TimeControl::Cfl { cfl, v_floor, dt_max } => {
                cfl > 0.0 && v_floor > 0.0 && dt_max > 0.0 && cfl.is_finite() && dt_max.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid time control {self:?}")))
        }
    }

    /// `dt = min(cfl h / max(v_max, v_floor), dt_max)`, or the fixed step.
    pub fn step_size(&self, h: f64, v_max: f64) -> f64 {
        match *self {
            TimeControl::Fixed { dt } => dt,
            TimeControl::Cfl { cfl, v_floor, dt_max } => (cfl * h / v_max.max(v_floor)).min(dt_max),
        }
    }
}

/// Right-hand sides of the phase and momentum equations.
#[derive(Default)]
pub struct Sources {
    /// Source added to the phase equation.
    pub phase: Option<ScalarSource>,
    /// Body force per unit mass.
    pub force: Option<VectorSource>,
}

impl Sources {
    pub fn gravity(g: f64) -> Self {
        Self {
            phase: None,
            force: Some(Box::new(move |_, _, _| [0.0, -g])),
        }
    }
}

/// Two time levels of the discrete solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub t: f64,
    /// Size of the step that produced the current level (`None` before the
    /// first step).
    pub dt_prev: Option<f64>,
    pub phi: FieldCoeffs,
    pub phihat: FieldCoeffs,
    pub xi: FieldCoeffs,
    pub uhat: FieldCoeffs,
    pub phi_old: FieldCoeffs,
    pub phihat_old: FieldCoeffs,
    pub xi_old: FieldCoeffs,
    pub uhat_old: FieldCoeffs,
    /// Chemical potential of the last step, at `t - dt_prev / 2`.
    pub mu: FieldCoeffs,
    pub muhat: FieldCoeffs,
}

/// Initial velocity given by a stream function and its curl.
pub struct InitialVelocity<'a> {
    pub stream: &'a dyn Fn(f64, f64) -> f64,
    pub velocity: &'a dyn Fn(f64, f64) -> [f64; 2],
}

/// Builds the starting state: nodal interpolants of `phi0` in `W` and `X`,
/// the stream interpolant and tangential projection of the velocity (zero when
/// absent). The previous level is a copy of the initial one.
pub fn initialize(
    disc: &Discretization,
    t0: f64,
    phi0: &dyn Fn(f64, f64) -> f64,
    velocity: Option<InitialVelocity<'_>>,
) -> Result<SimState> {
    let phi = disc.w.interpolate(&disc.mesh, phi0)?;
    let phihat = disc.x.interpolate(&disc.mesh, phi0)?;
    let (xi, uhat) = match velocity {
        Some(v) => (
            disc.phi.interpolate(&disc.mesh, v.stream)?,
            disc.m.project_tangential(&disc.mesh, v.velocity)?,
        ),
        None => (disc.phi.zeros(), disc.m.zeros()),
    };
    Ok(SimState {
        step: 0,
        t: t0,
        dt_prev: None,
        phi_old: phi.clone(),
        phihat_old: phihat.clone(),
        xi_old: xi.clone(),
        uhat_old: uhat.clone(),
        mu: disc.w.zeros(),
        muhat: disc.x.zeros(),
        phi,
        phihat,
        xi,
        uhat,
    })
}

/// `f^j + dt / (2 dt_prev) (f^j - f^{j-1})`.
pub fn extrapolate_half(old: &FieldCoeffs, cur: &FieldCoeffs, dt_prev: f64, dt: f64) -> Result<FieldCoeffs> {
    if !(dt_prev > 0.0) {
        return Err(Error::InvalidArgument(format!("previous step size {dt_prev} must be positive")));
    }
    if old.len() != cur.len() {
        return Err(Error::SpaceMismatch("extrapolation levels differ in length".into()));
    }
    Ok(cur.extrapolate(old, dt / (2.0 * dt_prev)))
}

/// Diagnostics of one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub v_max: f64,
    pub mass: f64,
    pub ch_residual: f64,
    pub momentum_residual: f64,
}

/// Outputs of the Cahn-Hilliard solve.
#[derive(Debug, Clone)]
pub struct PhaseUpdate {
    pub phi: FieldCoeffs,
    pub phihat: FieldCoeffs,
    pub mu: FieldCoeffs,
    pub muhat: FieldCoeffs,
    pub residual: f64,
}

/// Outputs of the momentum solve.
#[derive(Debug, Clone)]
pub struct VelocityUpdate {
    pub xi: FieldCoeffs,
    pub uhat: FieldCoeffs,
    pub residual: f64,
}

/// Owner of the discretization, model parameters, sources and solvers.
pub struct Stepper {
    pub disc: Discretization,
    pub params: PhaseParams,
    pub time: TimeControl,
    /// Relative floor of the mobility (`floor * gamma`) and of the interface
    /// diffusion (`floor * eps`).
    pub coefficient_floor: f64,
    pub sources: Sources,
    ch_layout: BlockLayout,
    mom_layout: BlockLayout,
    /// Velocity skeleton unknowns: `(is_hat, dof)`.
    mom_skeleton: Vec<(bool, usize)>,
    ch_solver: Box<dyn LinearSolver>,
    mom_solver: Box<dyn LinearSolver>,
}

fn ch_layout(disc: &Discretization) -> Result<BlockLayout> {
    let (nw, nx) = (disc.basis.nw, disc.basis.nx);
    let n_x = disc.x.num_dofs();
    let mut map = Vec::with_capacity(disc.mesh.num_elements() * 2 * nx);
    for e in 0..disc.mesh.num_elements() {
        let dofs = disc.x.element_dofs(e);
        map.extend(dofs.iter().map(|&g| Some(g)));
        map.extend(dofs.iter().map(|&g| Some(n_x + g)));
    }
    BlockLayout::new(
        disc.mesh.num_elements(),
        2 * nw + 2 * nx,
        (0..2 * nw).collect(),
        (2 * nw..2 * nw + 2 * nx).collect(),
        2 * n_x,
        map,
    )
}

fn mom_layout(disc: &Discretization) -> Result<(BlockLayout, Vec<(bool, usize)>)> {
    let b = &disc.basis;
    let (ns, nm) = (b.ns, b.nm);
    let n_phi_skel = disc.phi.num_skeleton();
    let mut compressed = vec![None; n_phi_skel + disc.m.num_dofs()];
    let mut inverse = Vec::new();
    for g in 0..n_phi_skel {
        if !disc.phi.is_masked(g) {
            compressed[g] = Some(inverse.len());
            inverse.push((false, g));
        }
    }
    for g in 0..disc.m.num_dofs() {
        if !disc.m.is_masked(g) {
            compressed[n_phi_skel + g] = Some(inverse.len());
            inverse.push((true, g));
        }
    }
    let interior = b.s_interior.clone();
    let mut skeleton: Vec<usize> = (0..ns).filter(|l| !interior.contains(l)).collect();
    skeleton.extend(ns..ns + nm);
    let mut map = Vec::with_capacity(disc.mesh.num_elements() * skeleton.len());
    for e in 0..disc.mesh.num_elements() {
        let pd = disc.phi.element_dofs(e);
        let md = disc.m.element_dofs(e);
        for &l in &skeleton {
            let g = if l < ns { pd[l] } else { n_phi_skel + md[l - ns] };
            if l < ns && g >= n_phi_skel {
                return Err(Error::InvalidArgument("stream skeleton node has an interior dof".into()));
            }
            map.push(compressed[g]);
        }
    }
    let layout = BlockLayout::new(disc.mesh.num_elements(), ns + nm, interior, skeleton, inverse.len(), map)?;
    Ok((layout, inverse))
}

fn pair_vector(disc: &Discretization, w: &FieldCoeffs, x: &FieldCoeffs, e: usize) -> Vec<f64> {
    let mut v = disc.w.gather(w, e);
    v.extend(disc.x.gather(x, e));
    v
}

fn velocity_vector(disc: &Discretization, xi: &FieldCoeffs, uhat: &FieldCoeffs, e: usize) -> Vec<f64> {
    let mut v = disc.phi.gather(xi, e);
    v.extend(disc.m.gather(uhat, e));
    v
}

impl Stepper {
    pub fn new(
        disc: Discretization,
        params: PhaseParams,
        time: TimeControl,
        sources: Sources,
        ch_solver: Box<dyn LinearSolver>,
        mom_solver: Box<dyn LinearSolver>,
    ) -> Result<Self> {
        params.validate()?;
        time.validate()?;
        if !(params.gamma > 0.0) {
            return Err(Error::InvalidArgument("mobility coefficient gamma must be positive".into()));
        }
        let ch = ch_layout(&disc)?;
        let (mom, mom_skeleton) = mom_layout(&disc)?;
        Ok(Self {
            disc,
            params,
            time,
            coefficient_floor: DEFAULT_COEFFICIENT_FLOOR,
            sources,
            ch_layout: ch,
            mom_layout: mom,
            mom_skeleton,
            ch_solver,
            mom_solver,
        })
    }

    /// Number of unknowns of the condensed phase and velocity systems.
    pub fn skeleton_sizes(&self) -> (usize, usize) {
        (self.ch_layout.n_skeleton(), self.mom_layout.n_skeleton())
    }

    /// Step size for the current velocity.
    pub fn compute_dt(&self, state: &SimState) -> f64 {
        let v = match self.time {
            TimeControl::Fixed { .. } => 0.0,
            TimeControl::Cfl { .. } => self.disc.max_velocity(&state.xi),
        };
        self.time.step_size(self.disc.mesh.h_min(), v)
    }

    /// Runs one step with the CFL or fixed step size.
    pub fn advance(&mut self, state: &mut SimState) -> Result<StepRecord> {
        self.advance_capped(state, f64::INFINITY)
    }

    /// Runs one step whose size is at most `dt_cap`.
    pub fn advance_capped(&mut self, state: &mut SimState, dt_cap: f64) -> Result<StepRecord> {
        let v_max = self.disc.max_velocity(&state.xi);
        let dt = self.compute_dt(state).min(dt_cap);
        self.advance_with(state, dt, v_max)
    }

    /// Runs one step of size `dt`.
    pub fn advance_with(&mut self, state: &mut SimState, dt: f64, v_max: f64) -> Result<StepRecord> {
        let wrap = |err: Error| Error::Step {
            step: state.step + 1,
            time: state.t,
            source: Box::new(err),
        };
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(wrap(Error::InvalidArgument(format!("step size {dt} must be positive"))));
        }
        let (xi_t, phi_t, phihat_t) = match state.dt_prev {
            None => (state.xi.clone(), state.phi.clone(), state.phihat.clone()),
            Some(prev) => (
                extrapolate_half(&state.xi_old, &state.xi, prev, dt).map_err(wrap)?,
                extrapolate_half(&state.phi_old, &state.phi, prev, dt).map_err(wrap)?,
                extrapolate_half(&state.phihat_old, &state.phihat, prev, dt).map_err(wrap)?,
            ),
        };
        let ch = self.ch_step(state, dt, &xi_t, &phi_t, &phihat_t).map_err(wrap)?;
        let phi_mid = ch.phi.midpoint(&state.phi);
        let phihat_mid = ch.phihat.midpoint(&state.phihat);
        let mom = self
            .momentum_step(state, dt, &xi_t, &phi_mid, &phihat_mid, &ch.mu)
            .map_err(wrap)?;
        state.phi_old = core::mem::replace(&mut state.phi, ch.phi);
        state.phihat_old = core::mem::replace(&mut state.phihat, ch.phihat);
        state.xi_old = core::mem::replace(&mut state.xi, mom.xi);
        state.uhat_old = core::mem::replace(&mut state.uhat, mom.uhat);
        state.mu = ch.mu;
        state.muhat = ch.muhat;
        state.t += dt;
        state.step += 1;
        state.dt_prev = Some(dt);
        Ok(StepRecord {
            step: state.step,
            t: state.t,
            dt,
            v_max,
            mass: self.disc.integral_w(&state.phi),
            ch_residual: ch.residual,
            momentum_residual: mom.residual,
        })
    }

    /// Linearized Cahn-Hilliard solve with transport velocity `curl xi_t` and
    /// mobility evaluated at `(phi_t, phihat_t)`.
    pub fn ch_step(
        &mut self,
        state: &SimState,
        dt: f64,
        xi_t: &FieldCoeffs,
        phi_t: &FieldCoeffs,
        phihat_t: &FieldCoeffs,
    ) -> Result<PhaseUpdate> {
        let disc = &self.disc;
        let b = &disc.basis;
        let (nw, nx) = (b.nw, b.nx);
        let np = nw + nx;
        let p = self.params;
        let st = p.sigma_tilde();
        let floor = self.coefficient_floor;
        let mob_floor = floor * p.gamma;
        let mob_law = move |v: f64| p.mobility(v).max(mob_floor);
        let mobility = CoefficientField::Discrete {
            volume: phi_t,
            skeleton: phihat_t,
            law: &mob_law,
        };
        let interface = CoefficientField::Constant(st.max(floor) * p.eps);
        let d_sigma = kernels::diffusion(b, &interface.sample(disc, 0));
        let mass = kernels::scalar_mass(b, &vec![1.0; b.num_vol_points()]);
        let t_mid = state.t + 0.5 * dt;
        let pphi = |i: usize| if i < nw { i } else { nw + i };
        let pmu = |i: usize| if i < nw { nw + i } else { nw + nx + i };
        let source = self.sources.phase.as_deref();
        let system = BlockSystem::assemble(&self.ch_layout, |e, a, r| {
            let (vol, un) = crate::forms::global::sample_transport(disc, xi_t, e);
            let c1 = kernels::phase_convection(b, &vol, &un);
            let d_mob = kernels::diffusion(b, &mobility.sample(disc, e));
            let old = disc.w_vol(&state.phi, e);
            let w2: Vec<f64> = old.iter().map(|s| double_well(s.value).2).collect();
            let m_w2 = kernels::scalar_mass(b, &w2);
            let lin: Vec<f64> = old
                .iter()
                .map(|s| {
                    let (_, d1, d2) = double_well(s.value);
                    -(st / p.eps) * (d1 - 0.5 * d2 * s.value)
                })
                .collect();
            let lin_load = kernels::scalar_load(b, &lin);
            let pair_old = pair_vector(disc, &state.phi, &state.phihat, e);
            let c1_old = c1.matvec(&pair_old);
            let d_old = d_sigma.matvec(&pair_old);
            let m_old = mass.matvec(&pair_old[..nw]);
            for i in 0..np {
                let (ri, ei) = (pphi(i), pmu(i));
                for j in 0..np {
                    let (cj, mj) = (pphi(j), pmu(j));
                    a.add(ri, cj, 0.5 * c1.get(i, j));
                    a.add(ri, mj, d_mob.get(i, j));
                    a.add(ei, cj, 0.5 * d_sigma.get(i, j));
                }
                r[ri] -= 0.5 * c1_old[i];
                r[ei] -= 0.5 * d_old[i];
            }
            for i in 0..nw {
                for j in 0..nw {
                    a.add(i, j, mass.get(i, j) / dt);
                    a.add(nw + i, nw + j, -mass.get(i, j));
                    a.add(nw + i, j, 0.5 * (st / p.eps) * m_w2.get(i, j));
                }
                r[i] += m_old[i] / dt;
                r[nw + i] += lin_load[i];
            }
            if let Some(f) = source {
                let fv: Vec<f64> = disc.vol_points(e).iter().map(|x| f(x[0], x[1], t_mid)).collect();
                for (i, v) in kernels::scalar_load(b, &fv).into_iter().enumerate() {
                    r[i] += v;
                }
            }
            Ok(())
        })?;
        let condensed = condense(system)?;
        let xs = condensed.solve(self.ch_solver.as_mut())?;
        let residual = relative_residual(&condensed.matrix, &xs, &condensed.rhs);
        let interior = condensed.recover(&xs)?;
        let mut phi = disc.w.zeros();
        let mut mu = disc.w.zeros();
        for e in 0..disc.mesh.num_elements() {
            let off = self.ch_layout.interior_offset(e);
            for (i, &g) in disc.w.element_dofs(e).iter().enumerate() {
                phi.values[g] = interior[off + i];
                mu.values[g] = interior[off + nw + i];
            }
        }
        let n_x = disc.x.num_dofs();
        let mut phihat = disc.x.zeros();
        let mut muhat = disc.x.zeros();
        phihat.values.copy_from_slice(&xs[..n_x]);
        muhat.values.copy_from_slice(&xs[n_x..]);
        Ok(PhaseUpdate {
            phi,
            phihat,
            mu,
            muhat,
            residual,
        })
    }

    /// Momentum solve: Crank-Nicolson viscous and inertial terms, explicit
    /// convection with the extrapolated velocity `curl xi_t`, surface tension
    /// and body force at the half step.
    pub fn momentum_step(
        &mut self,
        state: &SimState,
        dt: f64,
        xi_t: &FieldCoeffs,
        phi_mid: &FieldCoeffs,
        phihat_mid: &FieldCoeffs,
        mu: &FieldCoeffs,
    ) -> Result<VelocityUpdate> {
        let disc = &self.disc;
        let b = &disc.basis;
        let (ns, nm) = (b.ns, b.nm);
        let p = self.params;
        let rho_law = move |v: f64| p.density_clamped(v);
        let nu_law = move |v: f64| p.viscosity_clamped(v);
        let rho = CoefficientField::Discrete {
            volume: phi_mid,
            skeleton: phihat_mid,
            law: &rho_law,
        };
        let nu = CoefficientField::Discrete {
            volume: phi_mid,
            skeleton: phihat_mid,
            law: &nu_law,
        };
        let t_mid = state.t + 0.5 * dt;
        let force = self.sources.force.as_deref();
        let system = BlockSystem::assemble(&self.mom_layout, |e, a, r| {
            let rs = rho.sample(disc, e);
            let mass = kernels::velocity_mass(b, &rs.volume);
            let visc = kernels::viscous(b, &nu.sample(disc, e), disc.m_sign(e));
            let old = velocity_vector(disc, &state.xi, &state.uhat, e);
            let m_old = mass.matvec(&old[..ns]);
            let b_old = visc.matvec(&old);
            let wv = disc.velocity_vol(xi_t, e);
            let ws = Side::ALL.map(|s| disc.velocity_side(xi_t, e, s));
            let up = Side::ALL.map(|s| {
                disc.mesh
                    .neighbor(e, s)
                    .map(|o| disc.velocity_side(xi_t, o, s.opposite()))
            });
            let c2 = kernels::momentum_convection(b, &rs, &wv, &wv, &ws, &ws, &up);
            let pv: Vec<f64> = disc.w_vol(phi_mid, e).iter().map(|s| s.value).collect();
            let gm: Vec<[f64; 2]> = disc.w_vol(mu, e).iter().map(|s| s.grad).collect();
            let ph = Side::ALL.map(|s| disc.x_side(phihat_mid, e, s));
            let ms = Side::ALL.map(|s| disc.w_side(mu, e, s));
            let c3 = kernels::surface_tension(b, &pv, &gm, &ph, &ms);
            for i in 0..ns + nm {
                for j in 0..ns + nm {
                    a.add(i, j, 0.5 * visc.get(i, j));
                }
                r[i] -= 0.5 * b_old[i];
            }
            for i in 0..ns {
                for j in 0..ns {
                    a.add(i, j, mass.get(i, j) / dt);
                }
                r[i] += m_old[i] / dt - c2[i] + c3[i];
            }
            if let Some(f) = force {
                let fv: Vec<[f64; 2]> = disc.vol_points(e).iter().map(|x| f(x[0], x[1], t_mid)).collect();
                for (i, v) in kernels::velocity_load(b, &rs.volume, &fv).into_iter().enumerate() {
                    r[i] += v;
                }
            }
            Ok(())
        })?;
        let condensed = condense(system)?;
        let xs = condensed.solve(self.mom_solver.as_mut())?;
        let residual = relative_residual(&condensed.matrix, &xs, &condensed.rhs);
        let interior = condensed.recover(&xs)?;
        let mut xi = disc.phi.zeros();
        let mut uhat = disc.m.zeros();
        for e in 0..disc.mesh.num_elements() {
            let off = self.mom_layout.interior_offset(e);
            let dofs = disc.phi.element_dofs(e);
            for (r, &l) in b.s_interior.iter().enumerate() {
                xi.values[dofs[l]] = interior[off + r];
            }
        }
        for (c, &(is_hat, g)) in self.mom_skeleton.iter().enumerate() {
            if is_hat {
                uhat.values[g] = xs[c];
            } else {
                xi.values[g] = xs[c];
            }
        }
        Ok(VelocityUpdate { xi, uhat, residual })
    }
}
