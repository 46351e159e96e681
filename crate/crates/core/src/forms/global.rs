//! Global assembly of single operators in full (unconstrained) numbering.
//!
//! Phase-pair operators act on `[W dofs, X dofs]`, velocity operators on
//! `[Phi dofs, M dofs]`. Masked DOFs are kept so that tests can inspect the
//! raw operators; [`free_submatrix`] restricts to unconstrained DOFs.

use super::{check_positive, kernels, CoefficientField, Discretization};
use crate::error::Result;
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::mesh::Side;
use crate::spaces::FieldCoeffs;
use alloc::vec;
use alloc::vec::Vec;

fn pair_map(disc: &Discretization, e: usize) -> Vec<usize> {
    let nw_total = disc.w.num_dofs();
    let mut map: Vec<usize> = disc.w.element_dofs(e).to_vec();
    map.extend(disc.x.element_dofs(e).iter().map(|g| nw_total + g));
    map
}

fn velocity_map(disc: &Discretization, e: usize) -> Vec<usize> {
    let ns_total = disc.phi.num_dofs();
    let mut map: Vec<usize> = disc.phi.element_dofs(e).to_vec();
    map.extend(disc.m.element_dofs(e).iter().map(|g| ns_total + g));
    map
}

fn scatter(
    n: usize,
    n_elements: usize,
    map: impl Fn(usize) -> Vec<usize>,
    mut local: impl FnMut(usize) -> Result<DenseMatrix>,
) -> Result<CsrMatrix> {
    let mut t = Vec::new();
    for e in 0..n_elements {
        let a = local(e)?;
        let m = map(e);
        for i in 0..a.nrows {
            for j in 0..a.ncols {
                let v = a.get(i, j);
                if v != 0.0 {
                    t.push((m[i], m[j], v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

fn pair_size(disc: &Discretization) -> usize {
    disc.w.num_dofs() + disc.x.num_dofs()
}

fn velocity_size(disc: &Discretization) -> usize {
    disc.phi.num_dofs() + disc.m.num_dofs()
}

/// Diffusion form `D_h(c)` on `[W, X]`.
pub fn assemble_diffusion(disc: &Discretization, c: &CoefficientField) -> Result<CsrMatrix> {
    scatter(pair_size(disc), disc.mesh.num_elements(), |e| pair_map(disc, e), |e| {
        Ok(kernels::diffusion(&disc.basis, &c.sample(disc, e)))
    })
}

/// Velocity of a stream field at the volume points and the outward normal
/// velocity on each side.
pub fn sample_transport(disc: &Discretization, xi: &FieldCoeffs, e: usize) -> (Vec<[f64; 2]>, [Vec<f64>; 4]) {
    let vol = disc.velocity_vol(xi, e).iter().map(|s| s.u).collect();
    let un = Side::ALL.map(|s| {
        let n = s.outward_normal();
        disc.velocity_side(xi, e, s)
            .iter()
            .map(|u| u[0] * n[0] + u[1] * n[1])
            .collect()
    });
    (vol, un)
}

/// Upwind phase convection `C1_h(u)` on `[W, X]` for `u = curl xi`.
pub fn assemble_phase_convection(disc: &Discretization, xi: &FieldCoeffs) -> Result<CsrMatrix> {
    disc.phi.check(xi)?;
    scatter(pair_size(disc), disc.mesh.num_elements(), |e| pair_map(disc, e), |e| {
        let (vol, un) = sample_transport(disc, xi, e);
        Ok(kernels::phase_convection(&disc.basis, &vol, &un))
    })
}

/// Viscous form `B_h(c)` on `[Phi, M]`.
pub fn assemble_viscous(disc: &Discretization, c: &CoefficientField) -> Result<CsrMatrix> {
    scatter(velocity_size(disc), disc.mesh.num_elements(), |e| velocity_map(disc, e), |e| {
        Ok(kernels::viscous(&disc.basis, &c.sample(disc, e), disc.m_sign(e)))
    })
}

/// Momentum convection `C2_h(rho, w; u, v)` on `Phi x Phi` for frozen `w = curl xi_w`.
pub fn assemble_momentum_convection(
    disc: &Discretization,
    rho: &CoefficientField,
    w: &FieldCoeffs,
) -> Result<CsrMatrix> {
    disc.phi.check(w)?;
    let n = disc.phi.num_dofs();
    let mut t = Vec::new();
    for e in 0..disc.mesh.num_elements() {
        let r = rho.sample(disc, e);
        let wv = disc.velocity_vol(w, e);
        let ws = Side::ALL.map(|s| disc.velocity_side(w, e, s));
        let has_nb = Side::ALL.map(|s| disc.mesh.neighbor(e, s).is_some());
        let (own, nb) = kernels::momentum_convection_matrix(&disc.basis, &r, &wv, &ws, has_nb);
        let rows = disc.phi.element_dofs(e);
        let mut push = |a: &DenseMatrix, cols: &[usize]| {
            for i in 0..a.nrows {
                for j in 0..a.ncols {
                    let v = a.get(i, j);
                    if v != 0.0 {
                        t.push((rows[i], cols[j], v));
                    }
                }
            }
        };
        push(&own, rows);
        for s in Side::ALL {
            if let Some(other) = disc.mesh.neighbor(e, s) {
                push(&nb[s.index()], disc.phi.element_dofs(other));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t)
}

/// Surface tension vector `C3_h(phi, phi_hat, mu; v)` over all `Phi` DOFs.
pub fn assemble_surface_tension(
    disc: &Discretization,
    phi: &FieldCoeffs,
    phihat: &FieldCoeffs,
    mu: &FieldCoeffs,
) -> Result<Vec<f64>> {
    disc.w.check(phi)?;
    disc.x.check(phihat)?;
    disc.w.check(mu)?;
    let mut out = vec![0.0; disc.phi.num_dofs()];
    for e in 0..disc.mesh.num_elements() {
        let pv: Vec<f64> = disc.w_vol(phi, e).iter().map(|s| s.value).collect();
        let gm: Vec<[f64; 2]> = disc.w_vol(mu, e).iter().map(|s| s.grad).collect();
        let ph = Side::ALL.map(|s| disc.x_side(phihat, e, s));
        let ms = Side::ALL.map(|s| disc.w_side(mu, e, s));
        let r = kernels::surface_tension(&disc.basis, &pv, &gm, &ph, &ms);
        for (i, &g) in disc.phi.element_dofs(e).iter().enumerate() {
            out[g] += r[i];
        }
    }
    Ok(out)
}

/// Weighted `W` mass matrix. Fails on non-positive weights.
pub fn assemble_weighted_mass(disc: &Discretization, c: &CoefficientField) -> Result<CsrMatrix> {
    let n = disc.w.num_dofs();
    scatter(n, disc.mesh.num_elements(), |e| disc.w.element_dofs(e).to_vec(), |e| {
        let s = c.sample(disc, e);
        check_positive(&s, e)?;
        Ok(kernels::scalar_mass(&disc.basis, &s.volume))
    })
}

/// Weighted velocity mass in stream coordinates. Fails on non-positive weights.
pub fn assemble_velocity_mass(disc: &Discretization, c: &CoefficientField) -> Result<CsrMatrix> {
    let n = disc.phi.num_dofs();
    scatter(n, disc.mesh.num_elements(), |e| disc.phi.element_dofs(e).to_vec(), |e| {
        let s = c.sample(disc, e);
        check_positive(&s, e)?;
        Ok(kernels::velocity_mass(&disc.basis, &s.volume))
    })
}

/// `(f, psi)` over all `W` DOFs.
pub fn assemble_scalar_load(disc: &Discretization, f: &dyn Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; disc.w.num_dofs()];
    for e in 0..disc.mesh.num_elements() {
        let fv: Vec<f64> = disc.vol_points(e).iter().map(|p| f(p[0], p[1])).collect();
        let r = kernels::scalar_load(&disc.basis, &fv);
        for (i, &g) in disc.w.element_dofs(e).iter().enumerate() {
            out[g] += r[i];
        }
    }
    out
}

/// `(rho f, v)` over all `Phi` DOFs.
pub fn assemble_velocity_load(
    disc: &Discretization,
    rho: &CoefficientField,
    f: &dyn Fn(f64, f64) -> [f64; 2],
) -> Vec<f64> {
    let mut out = vec![0.0; disc.phi.num_dofs()];
    for e in 0..disc.mesh.num_elements() {
        let fv: Vec<[f64; 2]> = disc.vol_points(e).iter().map(|p| f(p[0], p[1])).collect();
        let r = kernels::velocity_load(&disc.basis, &rho.sample(disc, e).volume, &fv);
        for (i, &g) in disc.phi.element_dofs(e).iter().enumerate() {
            out[g] += r[i];
        }
    }
    out
}

/// Indices of unmasked DOFs of the `[Phi, M]` velocity numbering.
pub fn free_velocity_dofs(disc: &Discretization) -> Vec<usize> {
    let ns = disc.phi.num_dofs();
    let mut out: Vec<usize> = (0..ns).filter(|&i| !disc.phi.is_masked(i)).collect();
    out.extend((0..disc.m.num_dofs()).filter(|&i| !disc.m.is_masked(i)).map(|i| ns + i));
    out
}

/// Dense submatrix on the given index set.
pub fn free_submatrix(a: &CsrMatrix, idx: &[usize]) -> DenseMatrix {
    let d = a.to_dense();
    DenseMatrix::from_fn(idx.len(), idx.len(), |i, j| d.get(idx[i], idx[j]))
}
