//! Gauss quadrature, nodal Lagrange bases on Gauss-Lobatto points, and the
//! edge L2 projection.
//!
//! Everything lives on the reference interval `[0,1]` or square `[0,1]^2`.
//! Tensor-product element functions are numbered `b * (p + 1) + a` where `a`
//! indexes the x-direction node and `b` the y-direction node.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

/// Quadrature rule on `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule1D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.len() - 1
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Tensor-product rule on `[0,1]^2`, points ordered with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule2D {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule2D {
    pub fn tensor(rule: &QuadRule1D) -> Self {
        let n = rule.len();
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([rule.points[i], rule.points[j]]);
                weights.push(rule.weights[i] * rule.weights[j]);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Legendre polynomial `P_n` and its derivative at `x` in `[-1,1]`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for m in 2..=n {
        let mf = m as f64;
        let p2 = ((2.0 * mf - 1.0) * x * p1 - (mf - 1.0) * p0) / mf;
        p0 = p1;
        p1 = p2;
    }
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        let s = if x > 0.0 { 1.0 } else { (-1.0).powi(n as i32 + 1) };
        s * (n * (n + 1)) as f64 / 2.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule on `[0,1]`, exact for degree `2n - 1`.
pub fn gauss_rule(n: usize) -> Result<QuadRule1D> {
    if n == 0 {
        return Err(Error::InvalidArgument("quadrature needs at least one point".into()));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        points[i] = 0.5 * (x + 1.0);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    Ok(QuadRule1D { points, weights })
}

/// Gauss-Lobatto nodes of a degree-`p` nodal basis on `[0,1]`; `p = 0` gives
/// the midpoint.
pub fn lobatto_nodes(p: usize) -> Vec<f64> {
    match p {
        0 => vec![0.5],
        1 => vec![0.0, 1.0],
        _ => {
            let mut nodes = vec![0.0; p + 1];
            nodes[p] = 1.0;
            // Interior nodes are the roots of P_p'.
            for i in 1..p {
                let mut x = -(PI * i as f64 / p as f64).cos();
                for _ in 0..100 {
                    let (pp, dp) = legendre(p, x);
                    let ddp = (2.0 * x * dp - (p * (p + 1)) as f64 * pp) / (1.0 - x * x);
                    let dx = dp / ddp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                nodes[i] = 0.5 * (x + 1.0);
            }
            nodes
        }
    }
}

/// 1D Lagrange basis on a node set.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrange1D {
    pub nodes: Vec<f64>,
}

impl Lagrange1D {
    pub fn lobatto(p: usize) -> Self {
        Self {
            nodes: lobatto_nodes(p),
        }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Values, first and second derivatives of every basis function at `x`.
    pub fn eval(&self, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        let z = &self.nodes;
        let mut val = vec![0.0; n];
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 0..n {
            let mut denom = 1.0;
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            // Products over subsets of the factors (x - z_j), j != i.
            let mut v = 1.0;
            for j in 0..n {
                if j != i {
                    v *= x - z[j];
                }
            }
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for m in 0..n {
                if m == i {
                    continue;
                }
                let mut prod_m = 1.0;
                for j in 0..n {
                    if j != i && j != m {
                        prod_m *= x - z[j];
                    }
                }
                s1 += prod_m;
                for l in 0..n {
                    if l == i || l == m {
                        continue;
                    }
                    let mut prod_ml = 1.0;
                    for j in 0..n {
                        if j != i && j != m && j != l {
                            prod_ml *= x - z[j];
                        }
                    }
                    s2 += prod_ml;
                }
            }
            val[i] = v / denom;
            d1[i] = s1 / denom;
            d2[i] = s2 / denom;
        }
        (val, d1, d2)
    }
}

/// Basis values and reference derivatives at a point set.
///
/// Entry `(point, function)` is stored at `point * nfun + function`. Edge
/// tables only fill `values` and `dx` (derivative along the edge).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTable {
    pub degree: usize,
    pub npts: usize,
    pub nfun: usize,
    pub values: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dxy: Vec<f64>,
    pub dyy: Vec<f64>,
}

impl BasisTable {
    #[inline]
    pub fn value(&self, pt: usize, f: usize) -> f64 {
        self.values[pt * self.nfun + f]
    }

    #[inline]
    pub fn row(&self, pt: usize) -> &[f64] {
        &self.values[pt * self.nfun..(pt + 1) * self.nfun]
    }
}

/// Tensor-product `Q^k` Lagrange basis on Gauss-Lobatto nodes at reference
/// points, with gradients and Hessians.
pub fn eval_element_basis(k: usize, points: &[[f64; 2]]) -> BasisTable {
    let lag = Lagrange1D::lobatto(k);
    let n1 = k + 1;
    let nfun = n1 * n1;
    let npts = points.len();
    let mut t = BasisTable {
        degree: k,
        npts,
        nfun,
        values: vec![0.0; npts * nfun],
        dx: vec![0.0; npts * nfun],
        dy: vec![0.0; npts * nfun],
        dxx: vec![0.0; npts * nfun],
        dxy: vec![0.0; npts * nfun],
        dyy: vec![0.0; npts * nfun],
    };
    for (q, p) in points.iter().enumerate() {
        let (vx, dx, ddx) = lag.eval(p[0]);
        let (vy, dy, ddy) = lag.eval(p[1]);
        for b in 0..n1 {
            for a in 0..n1 {
                let f = b * n1 + a;
                let idx = q * nfun + f;
                t.values[idx] = vx[a] * vy[b];
                t.dx[idx] = dx[a] * vy[b];
                t.dy[idx] = vx[a] * dy[b];
                t.dxx[idx] = ddx[a] * vy[b];
                t.dxy[idx] = dx[a] * dy[b];
                t.dyy[idx] = vx[a] * ddy[b];
            }
        }
    }
    t
}

/// `P^k` Lagrange basis on Gauss-Lobatto nodes of `[0,1]` with derivatives.
pub fn eval_edge_basis(k: usize, points: &[f64]) -> BasisTable {
    let lag = Lagrange1D::lobatto(k);
    let nfun = k + 1;
    let npts = points.len();
    let mut t = BasisTable {
        degree: k,
        npts,
        nfun,
        values: vec![0.0; npts * nfun],
        dx: vec![0.0; npts * nfun],
        dy: Vec::new(),
        dxx: vec![0.0; npts * nfun],
        dxy: Vec::new(),
        dyy: Vec::new(),
    };
    for (q, &s) in points.iter().enumerate() {
        let (v, d, dd) = lag.eval(s);
        t.values[q * nfun..(q + 1) * nfun].copy_from_slice(&v);
        t.dx[q * nfun..(q + 1) * nfun].copy_from_slice(&d);
        t.dxx[q * nfun..(q + 1) * nfun].copy_from_slice(&dd);
    }
    t
}

/// L2 projection onto `P^m(F)` from samples at the points of an edge rule.
///
/// The projection is expressed in the nodal Gauss-Lobatto basis of degree `m`.
#[derive(Debug, Clone)]
pub struct EdgeProjector {
    pub target_degree: usize,
    rule: QuadRule1D,
    basis: BasisTable,
    /// `G^{-1} B^T W`: maps samples to nodal coefficients.
    sample_to_coeff: DenseMatrix,
}

impl EdgeProjector {
    /// Requires the rule to integrate `P^{m+2} x P^m` products exactly.
    pub fn new(target_degree: usize, rule: &QuadRule1D) -> Result<Self> {
        let needed = 2 * target_degree + 2;
        if rule.exactness() < needed {
            return Err(Error::InvalidArgument(format!(
                "edge rule with {} points is exact to degree {}, projection onto P^{} needs {}",
                rule.len(),
                rule.exactness(),
                target_degree,
                needed
            )));
        }
        let basis = eval_edge_basis(target_degree, &rule.points);
        let nf = basis.nfun;
        let nq = rule.len();
        let mut gram = DenseMatrix::zeros(nf, nf);
        for q in 0..nq {
            let w = rule.weights[q];
            for i in 0..nf {
                for j in 0..nf {
                    gram.add(i, j, w * basis.value(q, i) * basis.value(q, j));
                }
            }
        }
        let lu = gram.lu().map_err(|_| Error::SingularMatrix("edge Gram matrix".into()))?;
        let mut bt = DenseMatrix::zeros(nf, nq);
        for q in 0..nq {
            for i in 0..nf {
                bt.set(i, q, rule.weights[q] * basis.value(q, i));
            }
        }
        let sample_to_coeff = lu.solve_matrix(&bt);
        Ok(Self {
            target_degree,
            rule: rule.clone(),
            basis,
            sample_to_coeff,
        })
    }

    pub fn rule(&self) -> &QuadRule1D {
        &self.rule
    }

    /// Nodal coefficients of the projection of the sampled function.
    pub fn project(&self, samples: &[f64]) -> Vec<f64> {
        self.sample_to_coeff.matvec(samples)
    }

    /// Projection evaluated back at the rule's points.
    pub fn project_to_samples(&self, samples: &[f64]) -> Vec<f64> {
        let c = self.project(samples);
        (0..self.rule.len())
            .map(|q| (0..self.basis.nfun).map(|i| c[i] * self.basis.value(q, i)).sum())
            .collect()
    }

    /// Matrix mapping samples to projected samples (`nq x nq`).
    pub fn sample_projection_matrix(&self) -> DenseMatrix {
        let nq = self.rule.len();
        let nf = self.basis.nfun;
        let mut p = DenseMatrix::zeros(nq, nq);
        for q in 0..nq {
            for r in 0..nq {
                let mut s = 0.0;
                for i in 0..nf {
                    s += self.basis.value(q, i) * self.sample_to_coeff.get(i, r);
                }
                p.set(q, r, s);
            }
        }
        p
    }
}

/// One-shot edge projection: samples at `rule` points onto `P^target_degree`.
pub fn project_edge(target_degree: usize, rule: &QuadRule1D, samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() != rule.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for a {}-point rule",
            samples.len(),
            rule.len()
        )));
    }
    Ok(EdgeProjector::new(target_degree, rule)?.project(samples))
}
