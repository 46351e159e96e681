//! Local element matrices and vectors.
//!
//! Rows index test functions and columns trial functions. Phase-pair kernels
//! use the ordering `[W (nw), X (nx)]`, velocity kernels `[Phi (ns), M (nm)]`.
//! `M` entries are scaled by the element's tangent signs so that local hat
//! values are components along the counter-clockwise element tangent.

use super::{CoefficientSamples, ElementBasis};
use crate::linalg::DenseMatrix;
use crate::spaces::VelocitySample;
use alloc::vec;
use alloc::vec::Vec;

/// Sparse row of one side quadrature point: `(local index, value)` pairs.
type SideRow = Vec<(usize, f64)>;

fn w_row(b: &ElementBasis, vals: &[f64], q: usize) -> SideRow {
    (0..b.nw).map(|i| (i, vals[q * b.nw + i])).collect()
}

fn x_row(b: &ElementBasis, s: usize, q: usize, scale: f64) -> SideRow {
    let sb = &b.sides[s];
    let n = b.k + 1;
    sb.x_local
        .iter()
        .enumerate()
        .map(|(i, &l)| (b.nw + l, scale * sb.x_val[q * n + i]))
        .collect()
}

fn add_outer(a: &mut DenseMatrix, rows: &SideRow, cols: &SideRow, w: f64) {
    for &(r, vr) in rows {
        let t = w * vr;
        if t == 0.0 {
            continue;
        }
        for &(c, vc) in cols {
            a.add(r, c, t * vc);
        }
    }
}

/// Interior-penalty EDG diffusion form with coefficient `c`.
pub fn diffusion(b: &ElementBasis, c: &CoefficientSamples) -> DenseMatrix {
    let (nw, n) = (b.nw, b.nw + b.nx);
    let mut a = DenseMatrix::zeros(n, n);
    for q in 0..b.num_vol_points() {
        let wc = b.vol_weights[q] * c.volume[q];
        if wc == 0.0 {
            continue;
        }
        let o = q * nw;
        for i in 0..nw {
            let (gxi, gyi) = (wc * b.w_dx[o + i], wc * b.w_dy[o + i]);
            let row = &mut a.data[i * n..i * n + nw];
            for j in 0..nw {
                row[j] += gxi * b.w_dx[o + j] + gyi * b.w_dy[o + j];
            }
        }
    }
    for (s, sb) in b.sides.iter().enumerate() {
        for q in 0..b.num_edge_points() {
            let wc = sb.weights[q] * c.sides[s][q];
            if wc == 0.0 {
                continue;
            }
            // Jump (mu - mu_hat) and normal derivative rows.
            let mut jump = w_row(b, &sb.w_val, q);
            jump.extend(x_row(b, s, q, -1.0));
            let grad = w_row(b, &sb.w_dn, q);
            add_outer(&mut a, &jump, &grad, -wc);
            add_outer(&mut a, &grad, &jump, -wc);
            add_outer(&mut a, &jump, &jump, wc * sb.penalty);
        }
    }
    a
}

/// Upwind EDG convection of the phase field by a frozen velocity.
///
/// `u_vol` is the velocity at the volume points, `un_side[s][q]` the normal
/// velocity `u . n` (outward) on each side.
pub fn phase_convection(b: &ElementBasis, u_vol: &[[f64; 2]], un_side: &[Vec<f64>; 4]) -> DenseMatrix {
    let (nw, n) = (b.nw, b.nw + b.nx);
    let mut a = DenseMatrix::zeros(n, n);
    for q in 0..b.num_vol_points() {
        let w = b.vol_weights[q];
        let u = u_vol[q];
        if u == [0.0, 0.0] {
            continue;
        }
        let o = q * nw;
        for i in 0..nw {
            let adv = -w * (u[0] * b.w_dx[o + i] + u[1] * b.w_dy[o + i]);
            if adv == 0.0 {
                continue;
            }
            let row = &mut a.data[i * n..i * n + nw];
            for j in 0..nw {
                row[j] += adv * b.w_val[o + j];
            }
        }
    }
    for (s, sb) in b.sides.iter().enumerate() {
        for q in 0..b.num_edge_points() {
            let un = un_side[s][q];
            if un == 0.0 {
                continue;
            }
            let mut test = w_row(b, &sb.w_val, q);
            test.extend(x_row(b, s, q, -1.0));
            let trial = if un >= 0.0 {
                w_row(b, &sb.w_val, q)
            } else {
                x_row(b, s, q, 1.0)
            };
            add_outer(&mut a, &test, &trial, sb.weights[q] * un);
        }
    }
    a
}

/// Weighted `W` mass matrix `int c phi psi`.
pub fn scalar_mass(b: &ElementBasis, c_vol: &[f64]) -> DenseMatrix {
    let nw = b.nw;
    let mut a = DenseMatrix::zeros(nw, nw);
    for q in 0..b.num_vol_points() {
        let wc = b.vol_weights[q] * c_vol[q];
        let o = q * nw;
        for i in 0..nw {
            let t = wc * b.w_val[o + i];
            let row = &mut a.data[i * nw..(i + 1) * nw];
            for j in 0..nw {
                row[j] += t * b.w_val[o + j];
            }
        }
    }
    a
}

/// `int f psi` for every `W` test function.
pub fn scalar_load(b: &ElementBasis, f_vol: &[f64]) -> Vec<f64> {
    let nw = b.nw;
    let mut r = vec![0.0; nw];
    for q in 0..b.num_vol_points() {
        let wf = b.vol_weights[q] * f_vol[q];
        for i in 0..nw {
            r[i] += wf * b.w_val[q * nw + i];
        }
    }
    r
}

/// Weighted velocity mass `int c u . v` in stream coordinates.
pub fn velocity_mass(b: &ElementBasis, c_vol: &[f64]) -> DenseMatrix {
    let ns = b.ns;
    let mut a = DenseMatrix::zeros(ns, ns);
    for q in 0..b.num_vol_points() {
        let wc = b.vol_weights[q] * c_vol[q];
        let o = q * ns;
        for i in 0..ns {
            let vi = b.v_val[o + i];
            let (t0, t1) = (wc * vi[0], wc * vi[1]);
            let row = &mut a.data[i * ns..(i + 1) * ns];
            for j in 0..ns {
                let vj = b.v_val[o + j];
                row[j] += t0 * vj[0] + t1 * vj[1];
            }
        }
    }
    a
}

/// `int rho f . v` for every stream test function.
pub fn velocity_load(b: &ElementBasis, rho_vol: &[f64], f_vol: &[[f64; 2]]) -> Vec<f64> {
    let ns = b.ns;
    let mut r = vec![0.0; ns];
    for q in 0..b.num_vol_points() {
        let w = b.vol_weights[q] * rho_vol[q];
        let f = f_vol[q];
        for i in 0..ns {
            let v = b.v_val[q * ns + i];
            r[i] += w * (f[0] * v[0] + f[1] * v[1]);
        }
    }
    r
}

/// HDG viscous form with projected tangential jumps.
pub fn viscous(b: &ElementBasis, c: &CoefficientSamples, m_sign: [f64; 4]) -> DenseMatrix {
    let (ns, k) = (b.ns, b.k);
    let n = ns + b.nm;
    let mut a = DenseMatrix::zeros(n, n);
    for q in 0..b.num_vol_points() {
        let wc = 2.0 * b.vol_weights[q] * c.volume[q];
        let o = q * ns;
        for i in 0..ns {
            let di = b.v_strain[o + i];
            let (t0, t1, t2) = (wc * di[0], 2.0 * wc * di[1], wc * di[2]);
            let row = &mut a.data[i * n..i * n + ns];
            for j in 0..ns {
                let dj = b.v_strain[o + j];
                row[j] += t0 * dj[0] + t1 * dj[1] + t2 * dj[2];
            }
        }
    }
    for (s, sb) in b.sides.iter().enumerate() {
        let sign = m_sign[s];
        for q in 0..b.num_edge_points() {
            let wc = 2.0 * sb.weights[q] * c.sides[s][q];
            let o = q * ns;
            let stress: SideRow = (0..ns).map(|i| (i, sb.v_tdn[o + i])).collect();
            let hat: SideRow = (0..k)
                .map(|j| (ns + s * k + j, -sign * sb.m_val[q * k + j]))
                .collect();
            let mut pjump: SideRow = (0..ns).map(|i| (i, sb.v_tproj[o + i])).collect();
            pjump.extend_from_slice(&hat);
            add_outer(&mut a, &pjump, &stress, -wc);
            add_outer(&mut a, &stress, &pjump, -wc);
            add_outer(&mut a, &pjump, &pjump, wc * sb.penalty);
        }
    }
    a
}

/// Upwind DG momentum convection `C2(rho, w, u; v)` as a vector over stream
/// test functions.
///
/// `w_side` and `u_side` are the element's own traces. `u_upwind[s]` is the
/// trace of `u` from the element across side `s` (`None` on boundaries); it
/// is used where `w . n < 0`.
pub fn momentum_convection(
    b: &ElementBasis,
    rho: &CoefficientSamples,
    w_vol: &[VelocitySample],
    u_vol: &[VelocitySample],
    w_side: &[Vec<[f64; 2]>; 4],
    u_side: &[Vec<[f64; 2]>; 4],
    u_upwind: &[Option<Vec<[f64; 2]>>; 4],
) -> Vec<f64> {
    let ns = b.ns;
    let mut r = vec![0.0; ns];
    for q in 0..b.num_vol_points() {
        let (w, u) = (&w_vol[q], &u_vol[q]);
        let divw = w.divergence();
        let conv = [
            w.u[0] * u.grad[0][0] + w.u[1] * u.grad[0][1] + divw * u.u[0],
            w.u[0] * u.grad[1][0] + w.u[1] * u.grad[1][1] + divw * u.u[1],
        ];
        let wr = b.vol_weights[q] * rho.volume[q];
        if conv == [0.0, 0.0] || wr == 0.0 {
            continue;
        }
        for i in 0..ns {
            let v = b.v_val[q * ns + i];
            r[i] += wr * (conv[0] * v[0] + conv[1] * v[1]);
        }
    }
    for (s, sb) in b.sides.iter().enumerate() {
        let Some(up) = &u_upwind[s] else { continue };
        for q in 0..b.num_edge_points() {
            let wv = w_side[s][q];
            let wn = wv[0] * sb.normal[0] + wv[1] * sb.normal[1];
            if wn >= 0.0 {
                continue;
            }
            let d = [up[q][0] - u_side[s][q][0], up[q][1] - u_side[s][q][1]];
            let f = sb.weights[q] * rho.sides[s][q] * wn;
            for i in 0..ns {
                let v = sb.v_val[q * ns + i];
                r[i] += f * (d[0] * v[0] + d[1] * v[1]);
            }
        }
    }
    r
}

/// Bilinear form of [`momentum_convection`] for a frozen `w`.
///
/// Returns the element's own block and, per side, the coupling to the stream
/// basis of the element across that side (zero where `w . n >= 0` and on
/// sides without a neighbor).
pub fn momentum_convection_matrix(
    b: &ElementBasis,
    rho: &CoefficientSamples,
    w_vol: &[VelocitySample],
    w_side: &[Vec<[f64; 2]>; 4],
    has_neighbor: [bool; 4],
) -> (DenseMatrix, [DenseMatrix; 4]) {
    let ns = b.ns;
    let mut own = DenseMatrix::zeros(ns, ns);
    let mut nb: [DenseMatrix; 4] = core::array::from_fn(|_| DenseMatrix::zeros(ns, ns));
    for q in 0..b.num_vol_points() {
        let w = &w_vol[q];
        let divw = w.divergence();
        let wr = b.vol_weights[q] * rho.volume[q];
        let o = q * ns;
        for i in 0..ns {
            let v = b.v_val[o + i];
            for j in 0..ns {
                let (u, g) = (b.v_val[o + j], b.v_grad[o + j]);
                let conv = [
                    w.u[0] * g[0][0] + w.u[1] * g[0][1] + divw * u[0],
                    w.u[0] * g[1][0] + w.u[1] * g[1][1] + divw * u[1],
                ];
                own.add(i, j, wr * (conv[0] * v[0] + conv[1] * v[1]));
            }
        }
    }
    for (s, sb) in b.sides.iter().enumerate() {
        if !has_neighbor[s] {
            continue;
        }
        let ob = &b.sides[sb.side.opposite().index()];
        for q in 0..b.num_edge_points() {
            let wv = w_side[s][q];
            let wn = wv[0] * sb.normal[0] + wv[1] * sb.normal[1];
            if wn >= 0.0 {
                continue;
            }
            let f = sb.weights[q] * rho.sides[s][q] * wn;
            let o = q * ns;
            for i in 0..ns {
                let v = sb.v_val[o + i];
                for j in 0..ns {
                    let uo = sb.v_val[o + j];
                    let un = ob.v_val[o + j];
                    own.add(i, j, -f * (uo[0] * v[0] + uo[1] * v[1]));
                    nb[s].add(i, j, f * (un[0] * v[0] + un[1] * v[1]));
                }
            }
        }
    }
    (own, nb)
}

/// Surface tension `C3(phi, phi_hat, mu; v) = -int phi grad mu . v +
/// int_{dT} (v . n) phi_hat mu` over stream test functions.
pub fn surface_tension(
    b: &ElementBasis,
    phi_vol: &[f64],
    grad_mu_vol: &[[f64; 2]],
    phihat_side: &[Vec<f64>; 4],
    mu_side: &[Vec<f64>; 4],
) -> Vec<f64> {
    let ns = b.ns;
    let mut r = vec![0.0; ns];
    for q in 0..b.num_vol_points() {
        let f = [
            -b.vol_weights[q] * phi_vol[q] * grad_mu_vol[q][0],
            -b.vol_weights[q] * phi_vol[q] * grad_mu_vol[q][1],
        ];
        for i in 0..ns {
            let v = b.v_val[q * ns + i];
            r[i] += f[0] * v[0] + f[1] * v[1];
        }
    }
    for (s, sb) in b.sides.iter().enumerate() {
        for q in 0..b.num_edge_points() {
            let f = sb.weights[q] * phihat_side[s][q] * mu_side[s][q];
            if f == 0.0 {
                continue;
            }
            for i in 0..ns {
                let v = sb.v_val[q * ns + i];
                r[i] += f * (v[0] * sb.normal[0] + v[1] * sb.normal[1]);
            }
        }
    }
    r
}
