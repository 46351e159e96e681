//! Structural invariants of the discrete operators on small meshes.

use crate::Outcome;
use chns_core::forms::global::*;
use chns_core::forms::{kernels, BlockLayout, BlockSystem, CoefficientField, Discretization};
use chns_core::linalg::{condense, CsrMatrix, DenseLuSolver, DenseMatrix};
use chns_core::mesh::SideConditions;
use chns_core::postproc::max_divergence;
use chns_core::quadbasis::EdgeProjector;
use chns_core::BoundaryCondition::{Natural, NoSlip, Slip};
use chns_core::{DofSpace, Side, SpaceKind, StructuredMesh};
use nalgebra::DMatrix;

/// Bivariate polynomial as `(i, j, c)` terms of `c x^i y^j`.
#[derive(Clone)]
struct Poly(Vec<(i32, i32, f64)>);

impl Poly {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.0.iter().map(|&(i, j, c)| c * x.powi(i) * y.powi(j)).sum()
    }

    fn dx(&self) -> Poly {
        Poly(self.0.iter().filter(|t| t.0 > 0).map(|&(i, j, c)| (i - 1, j, c * i as f64)).collect())
    }

    fn dy(&self) -> Poly {
        Poly(self.0.iter().filter(|t| t.1 > 0).map(|&(i, j, c)| (i, j - 1, c * j as f64)).collect())
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|&(i, j, c)| (i, j, -c)).collect())
    }

    fn plus(&self, other: &Poly) -> Poly {
        Poly(self.0.iter().chain(&other.0).copied().collect())
    }
}

fn disc(n: usize, k: usize, bc: SideConditions) -> Discretization {
    Discretization::with_defaults(StructuredMesh::unit_square(n, n).unwrap(), k, bc).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

fn eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let m = DMatrix::from_fn(a.nrows, a.ncols, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn coefficient(x: f64, y: f64) -> f64 {
    1.0 + 0.5 * x + 0.25 * y
}

/// Worst value of one check over the degrees and meshes it covers.
struct Check {
    name: &'static str,
    worst: f64,
    bound: Bound,
}

enum Bound {
    Below(f64),
    Above(f64),
}

impl Check {
    fn below(name: &'static str, worst: f64, tol: f64) -> Self {
        Check {
            name,
            worst,
            bound: Bound::Below(tol),
        }
    }

    fn ok(&self) -> bool {
        match self.bound {
            Bound::Below(t) => self.worst <= t,
            Bound::Above(t) => self.worst > t,
        }
    }
}

fn divergence_free() -> Check {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        for bc in [[Natural; 4], [NoSlip, Slip, NoSlip, Slip]] {
            let d = disc(4, k, bc);
            let xi = d
                .phi
                .interpolate(&d.mesh, |x, y| (3.0 * x).sin() * (2.0 * y).cos() + x * y * y)
                .unwrap();
            worst = worst.max(max_divergence(&d, &xi).unwrap());
        }
    }
    Check::below("max |div u_h|", worst, 1e-11)
}

/// `(grad p, v)` on every velocity that satisfies the wall conditions.
fn pressure_orthogonality() -> Check {
    let mut worst: f64 = 0.0;
    let p = Poly(vec![(2, 1, 1.0), (0, 2, 0.3), (1, 0, -2.0)]);
    let (px, py) = (p.dx(), p.dy());
    for k in 1..=3 {
        let d = disc(3, k, [NoSlip; 4]);
        let load = assemble_velocity_load(&d, &CoefficientField::Constant(1.0), &|x, y| [px.eval(x, y), py.eval(x, y)]);
        for g in (0..d.phi.num_dofs()).filter(|&g| !d.phi.is_masked(g)) {
            worst = worst.max(load[g].abs());
        }
    }
    Check::below("max |(grad p, v_h)|", worst, 1e-11)
}

fn symmetry() -> Check {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let d = disc(3, k, [Natural; 4]);
        let c = CoefficientField::Function(&coefficient);
        for a in [assemble_diffusion(&d, &c).unwrap(), assemble_viscous(&d, &c).unwrap()] {
            let a = a.to_dense();
            worst = worst.max(a.asymmetry() / a.max_abs());
        }
    }
    Check::below("relative asymmetry of D_h and B_h", worst, 1e-12)
}

/// Smallest and second smallest eigenvalue of `D_h` relative to the largest.
/// The constants are the only kernel.
fn diffusion_semidefinite() -> [Check; 2] {
    let (mut first, mut second) = (f64::INFINITY, f64::INFINITY);
    for k in 1..=3 {
        let d = disc(2, k, [Natural; 4]);
        let ev = eigenvalues(&assemble_diffusion(&d, &CoefficientField::Constant(1.0)).unwrap().to_dense());
        let scale = ev.last().unwrap().abs();
        first = first.min(ev[0] / scale);
        second = second.min(ev[1] / scale);
    }
    [
        Check {
            name: "D_h smallest relative eigenvalue",
            worst: first,
            bound: Bound::Above(-1e-12),
        },
        Check {
            name: "D_h second smallest relative eigenvalue",
            worst: second,
            bound: Bound::Above(1e-8),
        },
    ]
}

/// Smallest relative eigenvalue of `B_h` on the wall-compatible velocities.
fn viscous_definite() -> Check {
    let mut smallest = f64::INFINITY;
    for k in 1..=3 {
        for bc in [[NoSlip; 4], [Slip, NoSlip, Slip, NoSlip]] {
            let d = disc(2, k, bc);
            let a = assemble_viscous(&d, &CoefficientField::Constant(1.0)).unwrap();
            let ev = eigenvalues(&free_submatrix(&a, &free_velocity_dofs(&d)));
            smallest = smallest.min(ev[0] / ev.last().unwrap());
        }
    }
    Check {
        name: "B_h smallest relative eigenvalue",
        worst: smallest,
        bound: Bound::Above(1e-8),
    }
}

fn condensed_solve() -> Check {
    let mut worst: f64 = 0.0;
    let mut seed = 11u64;
    let mut rnd = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    for k in 1..=3 {
        let d = disc(3, k, [Natural; 4]);
        let (nw, nx) = (d.basis.nw, d.basis.nx);
        let skel = (0..d.mesh.num_elements())
            .flat_map(|e| d.x.element_dofs(e).iter().map(|&g| Some(g)).collect::<Vec<_>>())
            .collect();
        let layout = BlockLayout::new(
            d.mesh.num_elements(),
            nw + nx,
            (0..nw).collect(),
            (nw..nw + nx).collect(),
            d.x.num_dofs(),
            skel,
        )
        .unwrap();
        let c = CoefficientField::Function(&coefficient);
        let mass = kernels::scalar_mass(&d.basis, &vec![1.0; d.basis.num_vol_points()]);
        let loads: Vec<Vec<f64>> = (0..d.mesh.num_elements()).map(|_| (0..nw + nx).map(|_| rnd()).collect()).collect();
        let sys = BlockSystem::assemble(&layout, |e, a, b| {
            let dm = kernels::diffusion(&d.basis, &c.sample(&d, e));
            for i in 0..nw + nx {
                for j in 0..nw + nx {
                    a.add(i, j, dm.get(i, j) + if i < nw && j < nw { mass.get(i, j) } else { 0.0 });
                }
                b[i] = loads[e][i];
            }
            Ok(())
        })
        .unwrap();
        let (ad, bd) = sys.to_dense();
        let reference = ad.lu().unwrap().solve(&bd);
        let x = condense(sys).unwrap().solve_full(&mut DenseLuSolver).unwrap();
        worst = worst.max(max_diff(&x, &reference) / max_abs(&reference));
    }
    Check::below("condensed vs dense solve (relative)", worst, 1e-8)
}

fn projection_idempotence() -> Check {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let d = disc(1, k, [Natural; 4]);
        let p = EdgeProjector::new(k - 1, &d.basis.edge_rule).unwrap().sample_projection_matrix();
        let pp = p.matmul(&p);
        for i in 0..p.nrows {
            for j in 0..p.ncols {
                worst = worst.max((pp.get(i, j) - p.get(i, j)).abs());
            }
        }
    }
    Check::below("Pi_{k-1} idempotence", worst, 1e-12)
}

/// `int_{dOmega} c d_n mu psi_hat` for every `X` DOF.
fn boundary_flux(d: &Discretization, c: f64, grad: &dyn Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let mut out = vec![0.0; d.x.num_dofs()];
    let n1 = d.k + 1;
    for e in 0..d.mesh.num_elements() {
        let dofs = d.x.element_dofs(e);
        for s in Side::ALL {
            if d.mesh.neighbor(e, s).is_some() {
                continue;
            }
            let sb = &d.basis.sides[s.index()];
            for (q, p) in d.side_points(e, s).iter().enumerate() {
                let g = grad(p[0], p[1]);
                let dn = g[0] * sb.normal[0] + g[1] * sb.normal[1];
                for (i, &l) in sb.x_local.iter().enumerate() {
                    out[dofs[l]] += sb.weights[q] * c * dn * sb.x_val[q * n1 + i];
                }
            }
        }
    }
    out
}

fn scalar_coeffs(d: &Discretization, p: &Poly) -> Vec<f64> {
    let f = |x: f64, y: f64| p.eval(x, y);
    let mut v = d.w.interpolate(&d.mesh, f).unwrap().values;
    v.extend(d.x.interpolate(&d.mesh, f).unwrap().values);
    v
}

/// Relative mismatch `max|lhs - rhs| / (1 + max|rhs|)`.
fn mismatch(lhs: &[f64], rhs: &[f64]) -> f64 {
    max_diff(lhs, rhs) / (1.0 + max_abs(rhs))
}

fn diffusion_patch() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let d = disc(3, k, [Natural; 4]);
        let mu = match k {
            1 => Poly(vec![(1, 1, 1.0), (1, 0, -0.5), (0, 1, 0.7), (0, 0, 0.2)]),
            2 => Poly(vec![(2, 1, 1.0), (1, 2, -0.5), (2, 0, 0.3), (0, 0, 1.0), (1, 1, 2.0)]),
            _ => Poly(vec![(3, 2, 0.4), (1, 3, -1.0), (2, 2, 0.5), (0, 2, 1.5), (1, 0, 1.0)]),
        };
        let c = 1.7;
        let lhs = assemble_diffusion(&d, &CoefficientField::Constant(c)).unwrap().matvec(&scalar_coeffs(&d, &mu));
        let lap = mu.dx().dx().plus(&mu.dy().dy());
        let mut rhs = assemble_scalar_load(&d, &|x, y| -c * lap.eval(x, y));
        let (mx, my) = (mu.dx(), mu.dy());
        rhs.extend(boundary_flux(&d, c, &|x, y| [mx.eval(x, y), my.eval(x, y)]));
        worst = worst.max(mismatch(&lhs, &rhs));
    }
    worst
}

/// `x (1 - x) y (1 - y)`, vanishing on the boundary of the unit square.
fn bubble_stream() -> Poly {
    Poly(vec![(1, 1, 1.0), (2, 1, -1.0), (1, 2, -1.0), (2, 2, 1.0)])
}

fn phase_convection_patch() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let d = disc(3, k, [Natural; 4]);
        let s = bubble_stream();
        let xi = d.phi.interpolate(&d.mesh, |x, y| s.eval(x, y)).unwrap();
        let phi = match k {
            1 => Poly(vec![(1, 1, 1.0), (1, 0, 0.5), (0, 0, -0.2)]),
            _ => Poly(vec![(2, 1, 1.0), (0, 2, -0.5), (1, 0, 0.3), (0, 0, 0.1)]),
        };
        let lhs = assemble_phase_convection(&d, &xi).unwrap().matvec(&scalar_coeffs(&d, &phi));
        let (sx, sy, px, py) = (s.dx(), s.dy(), phi.dx(), phi.dy());
        let mut rhs = assemble_scalar_load(&d, &|x, y| sy.eval(x, y) * px.eval(x, y) - sx.eval(x, y) * py.eval(x, y));
        rhs.extend(vec![0.0; d.x.num_dofs()]);
        worst = worst.max(mismatch(&lhs, &rhs));
    }
    worst
}

/// Rows of velocity DOFs compatible with walls on every side.
fn wall_free_rows(d: &Discretization) -> Vec<usize> {
    let phi = DofSpace::build(&d.mesh, SpaceKind::Phi, d.k + 1, &[NoSlip; 4]).unwrap();
    let m = DofSpace::build(&d.mesh, SpaceKind::M, d.k - 1, &[NoSlip; 4]).unwrap();
    let ns = phi.num_dofs();
    let mut rows: Vec<usize> = (0..ns).filter(|&g| !phi.is_masked(g)).collect();
    rows.extend((0..m.num_dofs()).filter(|&g| !m.is_masked(g)).map(|g| ns + g));
    rows
}

fn viscous_patch() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 2..=3 {
        let d = disc(3, k, [Natural; 4]);
        // Total degree k keeps the tangential traces inside the hat space.
        let xi = if k == 2 {
            Poly(vec![(2, 0, 1.0), (1, 1, 1.0), (0, 2, -0.5), (1, 0, 0.3), (0, 1, -0.2)])
        } else {
            Poly(vec![(3, 0, 1.0), (2, 1, -2.0), (1, 2, 0.5), (0, 3, 1.0), (2, 0, 1.0), (1, 1, -1.0), (0, 2, 0.3), (1, 0, 1.0)])
        };
        let (sx, sy) = (xi.dx(), xi.dy());
        let mut v = d.phi.interpolate(&d.mesh, |x, y| xi.eval(x, y)).unwrap().values;
        v.extend(
            d.m.project_tangential(&d.mesh, |x, y| [sy.eval(x, y), -sx.eval(x, y)])
                .unwrap()
                .values,
        );
        let a = assemble_viscous(&d, &CoefficientField::Function(&coefficient)).unwrap();
        let lhs = a.matvec(&v);
        let u = [xi.dy(), xi.neg().dx()];
        let grad = |i: usize, j: usize| if j == 0 { u[i].dx() } else { u[i].dy() };
        let lap = [grad(0, 0).dx().plus(&grad(0, 1).dy()), grad(1, 0).dx().plus(&grad(1, 1).dy())];
        let grads = [[grad(0, 0), grad(0, 1)], [grad(1, 0), grad(1, 1)]];
        let force = |x: f64, y: f64| {
            let c = coefficient(x, y);
            let gc = [0.5, 0.25];
            let mut f = [0.0; 2];
            for i in 0..2 {
                let mut s = c * lap[i].eval(x, y);
                for j in 0..2 {
                    s += gc[j] * (grads[i][j].eval(x, y) + grads[j][i].eval(x, y));
                }
                f[i] = -s;
            }
            f
        };
        let mut rhs = assemble_velocity_load(&d, &CoefficientField::Constant(1.0), &force);
        rhs.extend(vec![0.0; d.m.num_dofs()]);
        let scale = a.norm_inf() * max_abs(&v);
        for r in wall_free_rows(&d) {
            worst = worst.max((lhs[r] - rhs[r]).abs() / scale);
        }
    }
    worst
}

fn momentum_convection_patch() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=2 {
        let d = disc(3, k, [Natural; 4]);
        let xi_w = if k == 1 {
            Poly(vec![(2, 0, 1.0), (1, 1, 0.5), (0, 2, -1.0), (1, 0, 0.2)])
        } else {
            Poly(vec![(2, 1, 1.0), (1, 2, -0.5), (3, 0, 0.2), (0, 1, 0.4)])
        };
        let xi_u = Poly(vec![(1, 1, 1.0), (2, 0, -0.3), (0, 2, 0.6), (0, 1, 1.0)]);
        let w = d.phi.interpolate(&d.mesh, |x, y| xi_w.eval(x, y)).unwrap();
        let u = d.phi.interpolate(&d.mesh, |x, y| xi_u.eval(x, y)).unwrap();
        let rho = 2.5;
        let lhs = assemble_momentum_convection(&d, &CoefficientField::Constant(rho), &w)
            .unwrap()
            .matvec(&u.values);
        let wv = [xi_w.dy(), xi_w.neg().dx()];
        let uv = [xi_u.dy(), xi_u.neg().dx()];
        let force = |x: f64, y: f64| {
            let ww = [wv[0].eval(x, y), wv[1].eval(x, y)];
            [0, 1].map(|i| rho * (ww[0] * uv[i].dx().eval(x, y) + ww[1] * uv[i].dy().eval(x, y)))
        };
        let rhs = assemble_velocity_load(&d, &CoefficientField::Constant(1.0), &force);
        worst = worst.max(mismatch(&lhs, &rhs));
    }
    worst
}

fn surface_tension_patch() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=2 {
        let d = disc(3, k, [Natural; 4]);
        let phi_p = Poly(vec![(1, 1, 1.0), (1, 0, -0.4), (0, 0, 0.3)]);
        let mu_p = if k == 1 {
            Poly(vec![(1, 1, 0.5), (0, 1, 1.0), (0, 0, 2.0)])
        } else {
            Poly(vec![(2, 1, 0.5), (0, 2, 1.0), (1, 0, 2.0)])
        };
        let phi = d.w.interpolate(&d.mesh, |x, y| phi_p.eval(x, y)).unwrap();
        let phihat = d.x.interpolate(&d.mesh, |x, y| phi_p.eval(x, y)).unwrap();
        let mu = d.w.interpolate(&d.mesh, |x, y| mu_p.eval(x, y)).unwrap();
        let lhs = assemble_surface_tension(&d, &phi, &phihat, &mu).unwrap();
        let (px, py) = (phi_p.dx(), phi_p.dy());
        let rhs = assemble_velocity_load(&d, &CoefficientField::Constant(1.0), &|x, y| {
            let m = mu_p.eval(x, y);
            [m * px.eval(x, y), m * py.eval(x, y)]
        });
        worst = worst.max(mismatch(&lhs, &rhs));
    }
    worst
}

fn transpose(a: &CsrMatrix) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..a.nrows {
        for p in a.row_ptr[i]..a.row_ptr[i + 1] {
            t.push((a.col_idx[p], i, a.values[p]));
        }
    }
    CsrMatrix::from_triplets(a.ncols, a.nrows, &t).unwrap()
}

/// `C1 1 = 0` and `1^T C1 = 0` for a wall-compatible velocity.
fn phase_convection_conservation() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let d = disc(3, k, [NoSlip; 4]);
        let s = bubble_stream();
        let xi = d.phi.interpolate(&d.mesh, |x, y| 3.0 * s.eval(x, y) * (1.0 + x)).unwrap();
        let a = assemble_phase_convection(&d, &xi).unwrap();
        let ones = vec![1.0; a.nrows];
        let scale = a.norm_inf();
        worst = worst.max(max_abs(&a.matvec(&ones)) / scale);
        worst = worst.max(max_abs(&transpose(&a).matvec(&ones)) / scale);
    }
    worst
}

pub fn run() -> Outcome {
    let mut checks = vec![divergence_free(), pressure_orthogonality(), symmetry()];
    checks.extend(diffusion_semidefinite());
    checks.extend([viscous_definite(), condensed_solve(), projection_idempotence()]);
    for (name, worst) in [
        ("patch test D_h", diffusion_patch()),
        ("patch test C1_h", phase_convection_patch()),
        ("patch test B_h", viscous_patch()),
        ("patch test C2_h", momentum_convection_patch()),
        ("patch test C3_h", surface_tension_patch()),
        ("C1_h conservation", phase_convection_conservation()),
    ] {
        checks.push(Check::below(name, worst, 1e-11));
    }
    for c in &checks {
        let bound = match c.bound {
            Bound::Below(t) => format!("<= {t:.0e}"),
            Bound::Above(t) => format!(">  {t:.0e}"),
        };
        println!("    {:<45} {:>11.3e}  {bound:<9} {}", c.name, c.worst, if c.ok() { "ok" } else { "FAIL" });
    }
    let failed = checks.iter().filter(|c| !c.ok()).count();
    Outcome::new(failed == 0, format!("{} checks, {failed} failed", checks.len()))
}
