//! Element kernels for the five operators, mass matrices and loads, and the
//! block systems fed to static condensation.
//!
//! All kernels work on one element and return dense local matrices in a
//! canonical ordering: `[W (nw), X (4k)]` for the phase pair and
//! `[Phi ((k+2)^2), M (4k)]` for velocity. Because the mesh is uniform, one
//! [`ElementBasis`] holds the physical basis data for every element.

mod blocks;
pub mod global;
pub mod kernels;

pub use blocks::{BlockLayout, BlockSystem, ElementBlocks};

use crate::error::{Error, Result};
use crate::mesh::{Side, SideConditions, StructuredMesh};
use crate::quadbasis::{
    eval_edge_basis, eval_element_basis, gauss_rule, EdgeProjector, QuadRule1D, QuadRule2D,
};
use crate::spaces::{DofSpace, FieldCoeffs, ScalarSample, SpaceKind, VelocitySample};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Default penalty constant of the interior-penalty terms.
pub const DEFAULT_ALPHA: f64 = 4.0;

/// Physical basis data on one side of the element.
#[derive(Debug, Clone)]
pub struct SideBasis {
    pub side: Side,
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Outward normal rotated counter-clockwise.
    pub tangent: [f64; 2],
    /// `alpha (k+1)^2 / h_perp`.
    pub penalty: f64,
    /// Edge parameters of the quadrature points.
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
    /// `W` trace and normal derivative, `[q * nw + i]`.
    pub w_val: Vec<f64>,
    pub w_dn: Vec<f64>,
    /// `X` side basis `[q * (k+1) + i]` and the local X indices of the side nodes.
    pub x_val: Vec<f64>,
    pub x_local: Vec<usize>,
    /// `M` side basis `[q * k + j]`; local M indices are `side * k + j`.
    pub m_val: Vec<f64>,
    /// Velocity of each stream basis function, `[q * ns + i]`.
    pub v_val: Vec<[f64; 2]>,
    /// `tangent . D(u) normal`.
    pub v_tdn: Vec<f64>,
    /// `u . tangent`, and its edge projection onto `P^{k-1}`.
    pub v_t: Vec<f64>,
    pub v_tproj: Vec<f64>,
    /// Stream basis values (needed to build traces of `xi`).
    pub s_val: Vec<f64>,
}

/// Physical basis data of the reference element mapped to an `hx x hy` cell.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub k: usize,
    pub alpha: f64,
    pub hx: f64,
    pub hy: f64,
    /// Local counts of `W`, `X`, `Phi`, `M`.
    pub nw: usize,
    pub nx: usize,
    pub ns: usize,
    pub nm: usize,
    pub vol_rule: QuadRule2D,
    pub edge_rule: QuadRule1D,
    /// Physical volume weights.
    pub vol_weights: Vec<f64>,
    pub w_val: Vec<f64>,
    pub w_dx: Vec<f64>,
    pub w_dy: Vec<f64>,
    pub s_val: Vec<f64>,
    pub v_val: Vec<[f64; 2]>,
    /// `grad[i][j] = d u_i / d x_j` of each stream basis velocity.
    pub v_grad: Vec<[[f64; 2]; 2]>,
    /// Strain `(D11, D12, D22)` of each stream basis velocity.
    pub v_strain: Vec<[f64; 3]>,
    pub sides: [SideBasis; 4],
    /// Local `Phi` indices of element-interior nodes.
    pub s_interior: Vec<usize>,
}

/// Quadrature sizes (points per direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureOrders {
    pub volume: usize,
    pub edge: usize,
}

impl QuadratureOrders {
    pub fn default_for(k: usize) -> Self {
        Self {
            volume: k + 2,
            edge: k + 2,
        }
    }
}

fn velocity_of(dx: f64, dy: f64, ix: f64, iy: f64) -> [f64; 2] {
    [dy * iy, -dx * ix]
}

impl ElementBasis {
    pub fn new(
        mesh: &StructuredMesh,
        k: usize,
        alpha: f64,
        x_space: &DofSpace,
        quad: QuadratureOrders,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("polynomial degree k must be >= 1".into()));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("penalty alpha must be positive, got {alpha}")));
        }
        if x_space.kind != SpaceKind::X || x_space.degree != k {
            return Err(Error::SpaceMismatch("basis needs the X space of degree k".into()));
        }
        let (hx, hy) = (mesh.hx, mesh.hy);
        let (ix, iy) = (1.0 / hx, 1.0 / hy);
        let vol_1d = gauss_rule(quad.volume)?;
        let vol_rule = QuadRule2D::tensor(&vol_1d);
        let edge_rule = gauss_rule(quad.edge)?;
        let nw = (k + 1) * (k + 1);
        let ns = (k + 2) * (k + 2);
        let nx = 4 * k;
        let nm = 4 * k;
        let wt = eval_element_basis(k, &vol_rule.points);
        let st = eval_element_basis(k + 1, &vol_rule.points);
        let nqv = vol_rule.len();
        let vol_weights = vol_rule.weights.iter().map(|w| w * hx * hy).collect();
        let mut w_dx = wt.dx.clone();
        let mut w_dy = wt.dy.clone();
        w_dx.iter_mut().for_each(|v| *v *= ix);
        w_dy.iter_mut().for_each(|v| *v *= iy);
        let mut v_val = Vec::with_capacity(nqv * ns);
        let mut v_grad = Vec::with_capacity(nqv * ns);
        let mut v_strain = Vec::with_capacity(nqv * ns);
        for idx in 0..nqv * ns {
            v_val.push(velocity_of(st.dx[idx], st.dy[idx], ix, iy));
            let (sxx, sxy, syy) = (st.dxx[idx] * ix * ix, st.dxy[idx] * ix * iy, st.dyy[idx] * iy * iy);
            v_grad.push([[sxy, syy], [-sxx, -sxy]]);
            v_strain.push([sxy, 0.5 * (syy - sxx), -sxy]);
        }
        let proj = EdgeProjector::new(k - 1, &edge_rule)?.sample_projection_matrix();
        let nqe = edge_rule.len();
        let xt = eval_edge_basis(k, &edge_rule.points);
        let mt = eval_edge_basis(k - 1, &edge_rule.points);
        let sides = Side::ALL.map(|side| {
            let pts: Vec<[f64; 2]> = edge_rule.points.iter().map(|&s| side.reference_point(s)).collect();
            let n = side.outward_normal();
            let t = [-n[1], n[0]];
            let (len, hperp) = if side.is_horizontal() { (hx, hy) } else { (hy, hx) };
            let w = eval_element_basis(k, &pts);
            let s = eval_element_basis(k + 1, &pts);
            let mut w_dn = vec![0.0; nqe * nw];
            for idx in 0..nqe * nw {
                w_dn[idx] = w.dx[idx] * ix * n[0] + w.dy[idx] * iy * n[1];
            }
            let mut sv = Vec::with_capacity(nqe * ns);
            let mut v_tdn = Vec::with_capacity(nqe * ns);
            let mut v_t = Vec::with_capacity(nqe * ns);
            for idx in 0..nqe * ns {
                let u = velocity_of(s.dx[idx], s.dy[idx], ix, iy);
                let (sxx, sxy, syy) = (s.dxx[idx] * ix * ix, s.dxy[idx] * ix * iy, s.dyy[idx] * iy * iy);
                let d = [sxy, 0.5 * (syy - sxx), -sxy];
                let dn = [d[0] * n[0] + d[1] * n[1], d[1] * n[0] + d[2] * n[1]];
                sv.push(u);
                v_tdn.push(t[0] * dn[0] + t[1] * dn[1]);
                v_t.push(u[0] * t[0] + u[1] * t[1]);
            }
            let mut v_tproj = vec![0.0; nqe * ns];
            for q in 0..nqe {
                for i in 0..ns {
                    let mut acc = 0.0;
                    for r in 0..nqe {
                        acc += proj.get(q, r) * v_t[r * ns + i];
                    }
                    v_tproj[q * ns + i] = acc;
                }
            }
            SideBasis {
                side,
                normal: n,
                tangent: t,
                penalty: alpha * ((k + 1) * (k + 1)) as f64 / hperp,
                params: edge_rule.points.clone(),
                weights: edge_rule.weights.iter().map(|w| w * len).collect(),
                w_val: w.values,
                w_dn,
                x_val: xt.values.clone(),
                x_local: x_space.side_local(side).to_vec(),
                m_val: mt.values.clone(),
                v_val: sv,
                v_tdn,
                v_t,
                v_tproj,
                s_val: s.values,
            }
        });
        let n1 = k + 2;
        let mut s_interior = Vec::new();
        for b in 1..n1 - 1 {
            for a in 1..n1 - 1 {
                s_interior.push(b * n1 + a);
            }
        }
        Ok(Self {
            k,
            alpha,
            hx,
            hy,
            nw,
            nx,
            ns,
            nm,
            vol_rule,
            edge_rule,
            vol_weights,
            w_val: wt.values,
            w_dx,
            w_dy,
            s_val: st.values,
            v_val,
            v_grad,
            v_strain,
            sides,
            s_interior,
        })
    }

    pub fn num_vol_points(&self) -> usize {
        self.vol_weights.len()
    }

    pub fn num_edge_points(&self) -> usize {
        self.edge_rule.len()
    }
}

/// Spaces, mesh and basis data shared by assembly, stepping and postprocessing.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: StructuredMesh,
    pub k: usize,
    pub bc: SideConditions,
    pub w: DofSpace,
    pub x: DofSpace,
    pub phi: DofSpace,
    pub m: DofSpace,
    pub basis: ElementBasis,
    /// Per element side: `+1` when the stored edge tangent equals the
    /// element's counter-clockwise tangent.
    m_sign: Vec<[f64; 4]>,
}

impl Discretization {
    pub fn new(
        mesh: StructuredMesh,
        k: usize,
        alpha: f64,
        bc: SideConditions,
        quad: QuadratureOrders,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("polynomial degree k must be >= 1".into()));
        }
        let w = DofSpace::build(&mesh, SpaceKind::W, k, &bc)?;
        let x = DofSpace::build(&mesh, SpaceKind::X, k, &bc)?;
        let phi = DofSpace::build(&mesh, SpaceKind::Phi, k + 1, &bc)?;
        let m = DofSpace::build(&mesh, SpaceKind::M, k - 1, &bc)?;
        let basis = ElementBasis::new(&mesh, k, alpha, &x, quad)?;
        let m_sign = (0..mesh.num_elements())
            .map(|e| mesh.element_edges_unchecked(e).map(|inc| inc.sign as f64))
            .collect();
        Ok(Self {
            mesh,
            k,
            bc,
            w,
            x,
            phi,
            m,
            basis,
            m_sign,
        })
    }

    pub fn with_defaults(mesh: StructuredMesh, k: usize, bc: SideConditions) -> Result<Self> {
        Self::new(mesh, k, DEFAULT_ALPHA, bc, QuadratureOrders::default_for(k))
    }

    pub fn m_sign(&self, element: usize) -> [f64; 4] {
        self.m_sign[element]
    }

    /// Physical coordinates of the volume quadrature points of an element.
    pub fn vol_points(&self, element: usize) -> Vec<[f64; 2]> {
        self.basis
            .vol_rule
            .points
            .iter()
            .map(|&p| self.mesh.map_point(element, p))
            .collect()
    }

    /// Physical coordinates of the edge quadrature points on a side.
    pub fn side_points(&self, element: usize, side: Side) -> Vec<[f64; 2]> {
        self.basis
            .edge_rule
            .points
            .iter()
            .map(|&s| self.mesh.map_point(element, side.reference_point(s)))
            .collect()
    }

    /// Value and gradient of a `W` field at the volume points.
    pub fn w_vol(&self, f: &FieldCoeffs, element: usize) -> Vec<ScalarSample> {
        let b = &self.basis;
        let c = self.w.gather(f, element);
        (0..b.num_vol_points())
            .map(|q| {
                let mut s = ScalarSample::default();
                let o = q * b.nw;
                for i in 0..b.nw {
                    s.value += c[i] * b.w_val[o + i];
                    s.grad[0] += c[i] * b.w_dx[o + i];
                    s.grad[1] += c[i] * b.w_dy[o + i];
                }
                s
            })
            .collect()
    }

    /// Trace of a `W` field on a side.
    pub fn w_side(&self, f: &FieldCoeffs, element: usize, side: Side) -> Vec<f64> {
        let b = &self.basis;
        let sb = &b.sides[side.index()];
        let c = self.w.gather(f, element);
        (0..b.num_edge_points())
            .map(|q| (0..b.nw).map(|i| c[i] * sb.w_val[q * b.nw + i]).sum())
            .collect()
    }

    /// Values of an `X` field on a side.
    pub fn x_side(&self, f: &FieldCoeffs, element: usize, side: Side) -> Vec<f64> {
        let b = &self.basis;
        let sb = &b.sides[side.index()];
        let dofs = self.x.element_dofs(element);
        let n = self.k + 1;
        (0..b.num_edge_points())
            .map(|q| {
                sb.x_local
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| f.values[dofs[l]] * sb.x_val[q * n + i])
                    .sum()
            })
            .collect()
    }

    /// Velocity of a stream field at the volume points.
    pub fn velocity_vol(&self, xi: &FieldCoeffs, element: usize) -> Vec<VelocitySample> {
        let b = &self.basis;
        let c = self.phi.gather(xi, element);
        (0..b.num_vol_points())
            .map(|q| {
                let mut s = VelocitySample::default();
                let o = q * b.ns;
                for i in 0..b.ns {
                    let ci = c[i];
                    if ci == 0.0 {
                        continue;
                    }
                    let v = b.v_val[o + i];
                    let g = b.v_grad[o + i];
                    s.u[0] += ci * v[0];
                    s.u[1] += ci * v[1];
                    s.grad[0][0] += ci * g[0][0];
                    s.grad[0][1] += ci * g[0][1];
                    s.grad[1][0] += ci * g[1][0];
                    s.grad[1][1] += ci * g[1][1];
                }
                s
            })
            .collect()
    }

    /// Velocity of a stream field on a side.
    pub fn velocity_side(&self, xi: &FieldCoeffs, element: usize, side: Side) -> Vec<[f64; 2]> {
        let b = &self.basis;
        let sb = &b.sides[side.index()];
        let c = self.phi.gather(xi, element);
        (0..b.num_edge_points())
            .map(|q| {
                let mut u = [0.0; 2];
                for i in 0..b.ns {
                    let v = sb.v_val[q * b.ns + i];
                    u[0] += c[i] * v[0];
                    u[1] += c[i] * v[1];
                }
                u
            })
            .collect()
    }

    /// Tangential hat velocity `u_hat . t` on a side, `t` the element's
    /// counter-clockwise tangent.
    pub fn hat_side(&self, uhat: &FieldCoeffs, element: usize, side: Side) -> Vec<f64> {
        let b = &self.basis;
        let sb = &b.sides[side.index()];
        let dofs = self.m.element_dofs(element);
        let sign = self.m_sign[element][side.index()];
        (0..b.num_edge_points())
            .map(|q| {
                (0..self.k)
                    .map(|j| sign * uhat.values[dofs[side.index() * self.k + j]] * sb.m_val[q * self.k + j])
                    .sum()
            })
            .collect()
    }

    /// Largest velocity magnitude over all volume quadrature points.
    pub fn max_velocity(&self, xi: &FieldCoeffs) -> f64 {
        let mut vmax: f64 = 0.0;
        for e in 0..self.mesh.num_elements() {
            for s in self.velocity_vol(xi, e) {
                vmax = vmax.max(num_traits::Float::sqrt(s.u[0] * s.u[0] + s.u[1] * s.u[1]));
            }
        }
        vmax
    }

    /// `int phi` over the domain.
    pub fn integral_w(&self, f: &FieldCoeffs) -> f64 {
        let b = &self.basis;
        let mut total = 0.0;
        for e in 0..self.mesh.num_elements() {
            let c = self.w.gather(f, e);
            for q in 0..b.num_vol_points() {
                let v: f64 = (0..b.nw).map(|i| c[i] * b.w_val[q * b.nw + i]).sum();
                total += b.vol_weights[q] * v;
            }
        }
        total
    }
}



/// Scalar coefficient sampled at the quadrature points of an element.
pub enum CoefficientField<'a> {
    Constant(f64),
    Function(&'a dyn Fn(f64, f64) -> f64),
    /// Pointwise law applied to a `W` field in volumes and an `X` field on edges.
    Discrete {
        volume: &'a FieldCoeffs,
        skeleton: &'a FieldCoeffs,
        law: &'a dyn Fn(f64) -> f64,
    },
}

/// Coefficient values at the volume points and on the four sides.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSamples {
    pub volume: Vec<f64>,
    pub sides: [Vec<f64>; 4],
}

impl CoefficientField<'_> {
    pub fn sample(&self, disc: &Discretization, element: usize) -> CoefficientSamples {
        let nqv = disc.basis.num_vol_points();
        let nqe = disc.basis.num_edge_points();
        match self {
            CoefficientField::Constant(c) => CoefficientSamples {
                volume: vec![*c; nqv],
                sides: core::array::from_fn(|_| vec![*c; nqe]),
            },
            CoefficientField::Function(f) => CoefficientSamples {
                volume: disc.vol_points(element).iter().map(|p| f(p[0], p[1])).collect(),
                sides: Side::ALL.map(|s| {
                    disc.side_points(element, s).iter().map(|p| f(p[0], p[1])).collect()
                }),
            },
            CoefficientField::Discrete { volume, skeleton, law } => CoefficientSamples {
                volume: disc.w_vol(volume, element).iter().map(|s| law(s.value)).collect(),
                sides: Side::ALL.map(|s| disc.x_side(skeleton, element, s).into_iter().map(|v| law(v)).collect()),
            },
        }
    }
}

/// Rejects coefficients that are not strictly positive at some point.
pub fn check_positive(samples: &CoefficientSamples, element: usize) -> Result<()> {
    for &v in samples.volume.iter().chain(samples.sides.iter().flatten()) {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveWeight { element, value: v });
        }
    }
    Ok(())
}
