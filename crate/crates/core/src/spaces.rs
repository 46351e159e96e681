//! DOF layouts of the discrete spaces and field evaluation.
//!
//! * `W` - discontinuous `Q^k`, `(k+1)^2` nodal DOFs per element.
//! * `X` - skeleton traces of continuous `Q^k`: one DOF per vertex and `k-1`
//!   per edge. Each element sees the `4k` nodes on the boundary of its grid.
//! * `Phi` - continuous `Q^{k+1}` stream function.
//! * `M` - tangential hat velocity, `P^{k-1}` per edge, storing the component
//!   along the edge's stored tangent.
//!
//! Continuous spaces of degree `p` number vertices first, then `p-1` nodes per
//! edge (ordered along increasing `x` or `y`), then `(p-1)^2` interior nodes
//! per element. The first `num_vertices + (p-1) * num_edges` DOFs therefore
//! live on the skeleton.

use crate::error::{Error, Result};
use crate::mesh::{BoundaryCondition, Side, SideConditions, StructuredMesh};
use crate::quadbasis::{
    eval_edge_basis, eval_element_basis, gauss_rule, lobatto_nodes, EdgeProjector,
};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Discontinuous `Q^k`.
    W,
    /// Skeleton-continuous trace space.
    X,
    /// Continuous stream-function space.
    Phi,
    /// Tangential hat velocity on edges.
    M,
}

/// DOF layout of one discrete space on a mesh.
#[derive(Debug, Clone)]
pub struct DofSpace {
    pub kind: SpaceKind,
    pub degree: usize,
    n_dofs: usize,
    n_skeleton: usize,
    local_count: usize,
    element_dofs: Vec<usize>,
    mask: Vec<bool>,
    /// Local indices of the DOFs on each element side, ordered along the side.
    side_local: [Vec<usize>; 4],
    /// Reference coordinates of each local DOF (`W`, `X`, `Phi`).
    local_nodes: Vec<[f64; 2]>,
}

/// Continuous numbering of node `(a, b)` of an element grid of degree `p`.
fn continuous_dof(mesh: &StructuredMesh, p: usize, e: usize, a: usize, b: usize) -> usize {
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let edges = mesh.element_edges_unchecked(e);
    let a_end = a == 0 || a == p;
    let b_end = b == 0 || b == p;
    match (a_end, b_end) {
        (true, true) => mesh.element_vertex(e, a / p, b / p),
        (false, true) => {
            let side = if b == 0 { Side::Bottom } else { Side::Top };
            nv + edges[side.index()].edge * (p - 1) + (a - 1)
        }
        (true, false) => {
            let side = if a == 0 { Side::Left } else { Side::Right };
            nv + edges[side.index()].edge * (p - 1) + (b - 1)
        }
        (false, false) => {
            nv + ne * (p - 1) + e * (p - 1) * (p - 1) + (b - 1) * (p - 1) + (a - 1)
        }
    }
}

/// Grid positions along a side of a `(p+1) x (p+1)` grid, in side order.
fn side_grid_nodes(p: usize, side: Side) -> Vec<(usize, usize)> {
    (0..=p)
        .map(|i| match side {
            Side::Bottom => (i, 0),
            Side::Top => (i, p),
            Side::Left => (0, i),
            Side::Right => (p, i),
        })
        .collect()
}

fn wall(bc: BoundaryCondition) -> bool {
    matches!(bc, BoundaryCondition::NoSlip | BoundaryCondition::Slip)
}

impl DofSpace {
    /// Builds a space of the given kind and polynomial degree.
    ///
    /// `degree` is the actual polynomial degree of the space: `k` for `W` and
    /// `X`, `k+1` for `Phi`, `k-1` for `M`. Side conditions drive the masks:
    /// `Phi` is fixed on every wall side, `M` on no-slip sides.
    pub fn build(
        mesh: &StructuredMesh,
        kind: SpaceKind,
        degree: usize,
        bc: &SideConditions,
    ) -> Result<Self> {
        match kind {
            SpaceKind::X if degree == 0 => {
                return Err(Error::InvalidArgument("trace space needs degree >= 1".into()))
            }
            SpaceKind::Phi if degree < 2 => {
                return Err(Error::InvalidArgument(
                    "stream space needs degree k+1 >= 2".into(),
                ))
            }
            _ => {}
        }
        let nel = mesh.num_elements();
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let p = degree;
        let mut side_local: [Vec<usize>; 4] = Default::default();
        let mut local_nodes = Vec::new();
        let (n_dofs, n_skeleton, local_count, element_dofs, mut mask);
        match kind {
            SpaceKind::W => {
                let n1 = p + 1;
                local_count = n1 * n1;
                n_dofs = nel * local_count;
                n_skeleton = 0;
                element_dofs = (0..n_dofs).collect();
                mask = vec![false; n_dofs];
                let z = lobatto_nodes(p);
                for b in 0..n1 {
                    for a in 0..n1 {
                        local_nodes.push([z[a], z[b]]);
                    }
                }
                for side in Side::ALL {
                    side_local[side.index()] = side_grid_nodes(p, side)
                        .into_iter()
                        .map(|(a, b)| b * n1 + a)
                        .collect();
                }
            }
            SpaceKind::X => {
                let n1 = p + 1;
                let z = lobatto_nodes(p);
                // Boundary nodes of the grid in row-major order.
                let mut grid_to_local = vec![usize::MAX; n1 * n1];
                let mut grid_pos = Vec::new();
                for b in 0..n1 {
                    for a in 0..n1 {
                        if a == 0 || a == p || b == 0 || b == p {
                            grid_to_local[b * n1 + a] = grid_pos.len();
                            grid_pos.push((a, b));
                            local_nodes.push([z[a], z[b]]);
                        }
                    }
                }
                local_count = grid_pos.len();
                n_dofs = nv + ne * (p - 1);
                n_skeleton = n_dofs;
                let mut dofs = Vec::with_capacity(nel * local_count);
                for e in 0..nel {
                    for &(a, b) in &grid_pos {
                        dofs.push(continuous_dof(mesh, p, e, a, b));
                    }
                }
                element_dofs = dofs;
                mask = vec![false; n_dofs];
                for side in Side::ALL {
                    side_local[side.index()] = side_grid_nodes(p, side)
                        .into_iter()
                        .map(|(a, b)| grid_to_local[b * n1 + a])
                        .collect();
                }
            }
            SpaceKind::Phi => {
                let n1 = p + 1;
                let z = lobatto_nodes(p);
                local_count = n1 * n1;
                n_skeleton = nv + ne * (p - 1);
                n_dofs = n_skeleton + nel * (p - 1) * (p - 1);
                let mut dofs = Vec::with_capacity(nel * local_count);
                for e in 0..nel {
                    for b in 0..n1 {
                        for a in 0..n1 {
                            dofs.push(continuous_dof(mesh, p, e, a, b));
                        }
                    }
                }
                for b in 0..n1 {
                    for a in 0..n1 {
                        local_nodes.push([z[a], z[b]]);
                    }
                }
                element_dofs = dofs;
                mask = vec![false; n_dofs];
                for v in 0..nv {
                    let on = mesh.vertex_sides(v);
                    if Side::ALL.iter().any(|s| on[s.index()] && wall(bc[s.index()])) {
                        mask[v] = true;
                    }
                }
                for edge in 0..ne {
                    if let Some(side) = mesh.edge_geom(edge)?.boundary {
                        if wall(bc[side.index()]) {
                            for j in 0..p - 1 {
                                mask[nv + edge * (p - 1) + j] = true;
                            }
                        }
                    }
                }
                if !mask.iter().any(|&m| m) {
                    // Fixes the additive constant of the stream function.
                    mask[0] = true;
                }
                for side in Side::ALL {
                    side_local[side.index()] = side_grid_nodes(p, side)
                        .into_iter()
                        .map(|(a, b)| b * n1 + a)
                        .collect();
                }
            }
            SpaceKind::M => {
                let per_edge = p + 1;
                local_count = 4 * per_edge;
                n_dofs = ne * per_edge;
                n_skeleton = n_dofs;
                let mut dofs = Vec::with_capacity(nel * local_count);
                for e in 0..nel {
                    let edges = mesh.element_edges_unchecked(e);
                    for side in Side::ALL {
                        for j in 0..per_edge {
                            dofs.push(edges[side.index()].edge * per_edge + j);
                        }
                    }
                }
                element_dofs = dofs;
                mask = vec![false; n_dofs];
                for edge in 0..ne {
                    if let Some(side) = mesh.edge_geom(edge)?.boundary {
                        if bc[side.index()] == BoundaryCondition::NoSlip {
                            for j in 0..per_edge {
                                mask[edge * per_edge + j] = true;
                            }
                        }
                    }
                }
                for side in Side::ALL {
                    side_local[side.index()] =
                        (0..per_edge).map(|j| side.index() * per_edge + j).collect();
                }
            }
        }
        Ok(Self {
            kind,
            degree,
            n_dofs,
            n_skeleton,
            local_count,
            element_dofs,
            mask,
            side_local,
            local_nodes,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.n_dofs
    }

    /// Number of DOFs living on vertices and edges (the leading block).
    pub fn num_skeleton(&self) -> usize {
        self.n_skeleton
    }

    pub fn num_free(&self) -> usize {
        self.mask.iter().filter(|&&m| !m).count()
    }

    pub fn local_count(&self) -> usize {
        self.local_count
    }

    pub fn num_elements(&self) -> usize {
        self.element_dofs.len() / self.local_count
    }

    /// Global DOF ids of an element in local order.
    pub fn element_dofs(&self, element: usize) -> &[usize] {
        &self.element_dofs[element * self.local_count..(element + 1) * self.local_count]
    }

    pub fn is_masked(&self, dof: usize) -> bool {
        self.mask[dof]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Local indices of the DOFs on one side of the element, in side order.
    pub fn side_local(&self, side: Side) -> &[usize] {
        &self.side_local[side.index()]
    }

    /// Reference coordinates of the local nodes (empty for `M`).
    pub fn local_nodes(&self) -> &[[f64; 2]] {
        &self.local_nodes
    }

    /// True for a continuous-space DOF that belongs to an element interior.
    pub fn is_interior_dof(&self, dof: usize) -> bool {
        dof >= self.n_skeleton
    }

    pub fn zeros(&self) -> FieldCoeffs {
        FieldCoeffs {
            kind: self.kind,
            degree: self.degree,
            values: vec![0.0; self.n_dofs],
        }
    }

    /// Coefficients of an element in local order.
    pub fn gather(&self, field: &FieldCoeffs, element: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.local_count];
        self.gather_into(field, element, &mut out);
        out
    }

    pub fn gather_into(&self, field: &FieldCoeffs, element: usize, out: &mut [f64]) {
        for (o, &g) in out.iter_mut().zip(self.element_dofs(element)) {
            *o = field.values[g];
        }
    }

    pub fn check(&self, field: &FieldCoeffs) -> Result<()> {
        if field.kind != self.kind || field.degree != self.degree || field.values.len() != self.n_dofs
        {
            return Err(Error::SpaceMismatch(format!(
                "field {:?}/{} with {} values used with space {:?}/{} with {} DOFs",
                field.kind,
                field.degree,
                field.values.len(),
                self.kind,
                self.degree,
                self.n_dofs
            )));
        }
        Ok(())
    }

    /// Nodal interpolant of `f` (`W`, `X`, `Phi`). Masked DOFs are left at 0.
    pub fn interpolate(
        &self,
        mesh: &StructuredMesh,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<FieldCoeffs> {
        if self.kind == SpaceKind::M {
            return Err(Error::SpaceMismatch(
                "nodal interpolation is not defined for the hat velocity".into(),
            ));
        }
        let mut out = self.zeros();
        for e in 0..self.num_elements() {
            for (l, &g) in self.element_dofs(e).iter().enumerate() {
                if self.mask[g] {
                    continue;
                }
                let x = mesh.map_point(e, self.local_nodes[l]);
                out.values[g] = f(x[0], x[1]);
            }
        }
        Ok(out)
    }

    /// Edgewise L2 projection of the tangential component of `f` (`M` only).
    pub fn project_tangential(
        &self,
        mesh: &StructuredMesh,
        f: impl Fn(f64, f64) -> [f64; 2],
    ) -> Result<FieldCoeffs> {
        if self.kind != SpaceKind::M {
            return Err(Error::SpaceMismatch("tangential projection needs M".into()));
        }
        let rule = gauss_rule(self.degree + 3)?;
        let proj = EdgeProjector::new(self.degree, &rule)?;
        let per_edge = self.degree + 1;
        let mut out = self.zeros();
        for edge in 0..mesh.num_edges() {
            if self.mask[edge * per_edge] {
                continue;
            }
            let (nb, _) = mesh.edge_elements(edge)?;
            let g = mesh.edge_geom(edge)?;
            let e = nb[0].element;
            let samples: Vec<f64> = rule
                .points
                .iter()
                .map(|&s| {
                    let x = mesh.map_point(e, nb[0].side.reference_point(s));
                    let v = f(x[0], x[1]);
                    v[0] * g.tangent[0] + v[1] * g.tangent[1]
                })
                .collect();
            let c = proj.project(&samples);
            out.values[edge * per_edge..(edge + 1) * per_edge].copy_from_slice(&c);
        }
        Ok(out)
    }
}

/// Coefficient vector of a discrete field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoeffs {
    pub kind: SpaceKind,
    pub degree: usize,
    pub values: Vec<f64>,
}

impl FieldCoeffs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `self + s * (self - other)`.
    pub fn extrapolate(&self, other: &FieldCoeffs, s: f64) -> FieldCoeffs {
        let mut out = self.clone();
        for (o, (a, b)) in out.values.iter_mut().zip(self.values.iter().zip(&other.values)) {
            *o = a + s * (a - b);
        }
        out
    }

    /// `(self + other) / 2`.
    pub fn midpoint(&self, other: &FieldCoeffs) -> FieldCoeffs {
        let mut out = self.clone();
        for (o, b) in out.values.iter_mut().zip(&other.values) {
            *o = 0.5 * (*o + b);
        }
        out
    }
}

/// Value and physical gradient of a scalar field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalarSample {
    pub value: f64,
    pub grad: [f64; 2],
}

/// Velocity and its gradient `grad[i][j] = d u_i / d x_j` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocitySample {
    pub u: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

impl VelocitySample {
    pub fn divergence(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }
}

/// Evaluates a `W` or `Phi` field at reference points of an element.
pub fn eval_field(
    mesh: &StructuredMesh,
    space: &DofSpace,
    field: &FieldCoeffs,
    element: usize,
    points: &[[f64; 2]],
) -> Result<Vec<ScalarSample>> {
    space.check(field)?;
    if !matches!(space.kind, SpaceKind::W | SpaceKind::Phi) {
        return Err(Error::SpaceMismatch(format!(
            "volume evaluation of a {:?} field",
            space.kind
        )));
    }
    if element >= mesh.num_elements() {
        return Err(Error::OutOfRange {
            kind: "element",
            id: element,
            count: mesh.num_elements(),
        });
    }
    let c = space.gather(field, element);
    let t = eval_element_basis(space.degree, points);
    Ok((0..points.len())
        .map(|q| {
            let mut s = ScalarSample::default();
            for f in 0..t.nfun {
                let i = q * t.nfun + f;
                s.value += c[f] * t.values[i];
                s.grad[0] += c[f] * t.dx[i] / mesh.hx;
                s.grad[1] += c[f] * t.dy[i] / mesh.hy;
            }
            s
        })
        .collect())
}

/// Evaluates a field on one side of an element at edge parameters `s`.
///
/// `W` and `Phi` give the element trace, `X` the skeleton value and `M` the
/// component along the stored edge tangent.
pub fn eval_side(
    space: &DofSpace,
    field: &FieldCoeffs,
    element: usize,
    side: Side,
    s: &[f64],
) -> Result<Vec<f64>> {
    space.check(field)?;
    let c = space.gather(field, element);
    Ok(match space.kind {
        SpaceKind::W | SpaceKind::Phi => {
            let pts: Vec<[f64; 2]> = s.iter().map(|&x| side.reference_point(x)).collect();
            let t = eval_element_basis(space.degree, &pts);
            (0..s.len())
                .map(|q| t.row(q).iter().zip(&c).map(|(b, v)| b * v).sum())
                .collect()
        }
        SpaceKind::X | SpaceKind::M => {
            let t = eval_edge_basis(space.degree, s);
            let idx = space.side_local(side);
            (0..s.len())
                .map(|q| idx.iter().enumerate().map(|(i, &l)| t.value(q, i) * c[l]).sum())
                .collect()
        }
    })
}

/// Velocity `u = curl xi = (d_y xi, -d_x xi)` with its gradient.
pub fn velocity_from_stream(
    mesh: &StructuredMesh,
    space: &DofSpace,
    xi: &FieldCoeffs,
    element: usize,
    points: &[[f64; 2]],
) -> Result<Vec<VelocitySample>> {
    space.check(xi)?;
    if space.kind != SpaceKind::Phi {
        return Err(Error::SpaceMismatch("velocity needs a stream function".into()));
    }
    let c = space.gather(xi, element);
    let t = eval_element_basis(space.degree, points);
    let (ix, iy) = (1.0 / mesh.hx, 1.0 / mesh.hy);
    Ok((0..points.len())
        .map(|q| {
            let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for f in 0..t.nfun {
                let i = q * t.nfun + f;
                sx += c[f] * t.dx[i];
                sy += c[f] * t.dy[i];
                sxx += c[f] * t.dxx[i];
                sxy += c[f] * t.dxy[i];
                syy += c[f] * t.dyy[i];
            }
            let (sx, sy) = (sx * ix, sy * iy);
            let (sxx, sxy, syy) = (sxx * ix * ix, sxy * ix * iy, syy * iy * iy);
            VelocitySample {
                u: [sy, -sx],
                grad: [[sxy, syy], [-sxx, -sxy]],
            }
        })
        .collect())
}
