//! Benchmark quantities, L2 errors and level-set contours.

use crate::error::{Error, Result};
use crate::forms::Discretization;
use crate::quadbasis::{eval_element_basis, gauss_rule, BasisTable, QuadRule2D};
use crate::spaces::{velocity_from_stream, FieldCoeffs};
use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

/// Gauss points per direction used by [`l2_error`] and friends: `k + 3`.
pub fn error_points(k: usize) -> usize {
    k + 3
}

fn tensor_rule(n: usize) -> Result<QuadRule2D> {
    Ok(QuadRule2D::tensor(&gauss_rule(n)?))
}

fn combine(table: &BasisTable, coeffs: &[f64], q: usize) -> f64 {
    table.row(q).iter().zip(coeffs).map(|(b, c)| b * c).sum()
}

/// `||phi_h - exact||_{L2}` for a `W` field.
pub fn l2_error(disc: &Discretization, field: &FieldCoeffs, exact: &dyn Fn(f64, f64) -> f64) -> Result<f64> {
    disc.w.check(field)?;
    let rule = tensor_rule(error_points(disc.k))?;
    let table = eval_element_basis(disc.w.degree, &rule.points);
    let jac = disc.mesh.hx * disc.mesh.hy;
    let mut sum = 0.0;
    for e in 0..disc.mesh.num_elements() {
        let c = disc.w.gather(field, e);
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = disc.mesh.map_point(e, p);
            let d = combine(&table, &c, q) - exact(x[0], x[1]);
            sum += w * jac * d * d;
        }
    }
    Ok(sum.sqrt())
}

/// `||curl xi_h - exact||_{L2}` for a stream field.
pub fn l2_error_velocity(
    disc: &Discretization,
    xi: &FieldCoeffs,
    exact: &dyn Fn(f64, f64) -> [f64; 2],
) -> Result<f64> {
    disc.phi.check(xi)?;
    let rule = tensor_rule(error_points(disc.k))?;
    let jac = disc.mesh.hx * disc.mesh.hy;
    let mut sum = 0.0;
    for e in 0..disc.mesh.num_elements() {
        let vals = velocity_from_stream(&disc.mesh, &disc.phi, xi, e, &rule.points)?;
        for ((&p, &w), v) in rule.points.iter().zip(&rule.weights).zip(&vals) {
            let x = disc.mesh.map_point(e, p);
            let u = exact(x[0], x[1]);
            let (a, b) = (v.u[0] - u[0], v.u[1] - u[1]);
            sum += w * jac * (a * a + b * b);
        }
    }
    Ok(sum.sqrt())
}

/// Largest `|div u_h|` over a Gauss grid of every element.
pub fn max_divergence(disc: &Discretization, xi: &FieldCoeffs) -> Result<f64> {
    let rule = tensor_rule(error_points(disc.k))?;
    let mut m: f64 = 0.0;
    for e in 0..disc.mesh.num_elements() {
        for v in velocity_from_stream(&disc.mesh, &disc.phi, xi, e, &rule.points)? {
            m = m.max(v.divergence().abs());
        }
    }
    Ok(m)
}

/// Polyline approximating a level set.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .sum()
    }

    /// Shoelace area of a closed polyline, positive when counter-clockwise.
    pub fn signed_area(&self) -> f64 {
        let p = &self.points;
        let n = p.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (p[i], p[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContourSet {
    pub lines: Vec<Polyline>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.lines.iter().map(Polyline::length).sum()
    }

    /// Total area enclosed by the contour, or `None` when it is empty or has
    /// an open line.
    pub fn enclosed_area(&self) -> Option<f64> {
        if self.lines.is_empty() || self.lines.iter().any(|l| !l.closed) {
            return None;
        }
        Some(self.lines.iter().map(|l| l.signed_area().abs()).sum())
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.lines.iter().flat_map(|l| l.points.iter())
    }
}

/// Default marching-squares resolution per element: `2 (k + 1)`.
pub fn default_samples(k: usize) -> usize {
    2 * (k + 1)
}

/// Samples of a `W` field on the global `(nx m + 1) x (ny m + 1)` grid.
/// Nodes shared by several elements take the average of their values.
fn sample_grid(disc: &Discretization, field: &FieldCoeffs, m: usize) -> (Vec<f64>, usize, usize) {
    let mesh = &disc.mesh;
    let (gx, gy) = (mesh.nx * m + 1, mesh.ny * m + 1);
    let pts: Vec<[f64; 2]> = (0..=m)
        .flat_map(|b| (0..=m).map(move |a| [a as f64 / m as f64, b as f64 / m as f64]))
        .collect();
    let table = eval_element_basis(disc.w.degree, &pts);
    let mut sum = vec![0.0; gx * gy];
    let mut cnt = vec![0u32; gx * gy];
    for e in 0..mesh.num_elements() {
        let (i, j) = mesh.element_ij(e);
        let c = disc.w.gather(field, e);
        for b in 0..=m {
            for a in 0..=m {
                let node = (j * m + b) * gx + i * m + a;
                sum[node] += combine(&table, &c, b * (m + 1) + a);
                cnt[node] += 1;
            }
        }
    }
    for (s, c) in sum.iter_mut().zip(&cnt) {
        *s /= *c as f64;
    }
    (sum, gx, gy)
}

/// Marching squares on a sampled `W` field.
///
/// A node counts as inside when its value is below `level`. Crossings are
/// placed by linear interpolation along grid edges; saddle cells are resolved
/// with the cell-centre average.
pub fn extract_contour(disc: &Discretization, field: &FieldCoeffs, level: f64, m: usize) -> Result<ContourSet> {
    if m < 2 {
        return Err(Error::InvalidArgument("contour sampling needs m >= 2".into()));
    }
    disc.w.check(field)?;
    let mesh = &disc.mesh;
    let (vals, gx, gy) = sample_grid(disc, field, m);
    let dx = mesh.hx / m as f64;
    let dy = mesh.hy / m as f64;
    let v = |i: usize, j: usize| vals[j * gx + i] - level;
    let node = |i: usize, j: usize| [mesh.x0 + i as f64 * dx, mesh.y0 + j as f64 * dy];
    // Edge keys: horizontal (i,j)-(i+1,j) -> 2 (j gx + i), vertical (i,j)-(i,j+1) -> 2 (j gx + i) + 1.
    let mut points: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
    let mut cross = |key: usize, a: (usize, usize), b: (usize, usize)| {
        points.entry(key).or_insert_with(|| {
            let (va, vb) = (v(a.0, a.1), v(b.0, b.1));
            let t = va / (va - vb);
            let (pa, pb) = (node(a.0, a.1), node(b.0, b.1));
            [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
        });
        key
    };
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..gy - 1 {
        for i in 0..gx - 1 {
            let c = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            let inside = c.map(|x| x < 0.0);
            let code = inside.iter().enumerate().fold(0u8, |acc, (n, &b)| acc | ((b as u8) << n));
            if code == 0 || code == 15 {
                continue;
            }
            let bottom = 2 * (j * gx + i);
            let top = 2 * ((j + 1) * gx + i);
            let left = 2 * (j * gx + i) + 1;
            let right = 2 * (j * gx + i + 1) + 1;
            let mut e = |k: usize| match k {
                0 => cross(bottom, (i, j), (i + 1, j)),
                1 => cross(right, (i + 1, j), (i + 1, j + 1)),
                2 => cross(top, (i, j + 1), (i + 1, j + 1)),
                _ => cross(left, (i, j), (i, j + 1)),
            };
            // Edge k joins corners k and k+1; crossings sit where the flags differ.
            let crossed: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
            if crossed.len() == 2 {
                segments.push((e(crossed[0]), e(crossed[1])));
            } else {
                let centre_inside = (c[0] + c[1] + c[2] + c[3]) < 0.0;
                // Corners 0 and 2 share a flag. Separate the corners of the
                // opposite flag unless the centre joins them.
                let pair_first = inside[0] == centre_inside;
                if pair_first {
                    segments.push((e(0), e(1)));
                    segments.push((e(2), e(3)));
                } else {
                    segments.push((e(3), e(0)));
                    segments.push((e(1), e(2)));
                }
            }
        }
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        adj.entry(a).or_default().push(s);
        adj.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |start_seg: usize, start_key: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut keys = vec![start_key];
        let mut seg = start_seg;
        let mut key = start_key;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            key = if a == key { b } else { a };
            keys.push(key);
            if key == start_key {
                return (keys, true);
            }
            match adj[&key].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => return (keys, false),
            }
        }
    };
    // Open polylines start at keys with a single incident segment.
    for (&key, segs) in &adj {
        if segs.len() == 1 && !used[segs[0]] {
            let (keys, closed) = walk(segs[0], key, &mut used);
            lines.push((keys, closed));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (keys, closed) = walk(s, segments[s].0, &mut used);
            lines.push((keys, closed));
        }
    }
    let mut out = ContourSet::default();
    for (keys, closed) in lines {
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(keys.len());
        for k in keys {
            let p = points[&k];
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        if pts.len() >= 2 {
            out.lines.push(Polyline { points: pts, closed });
        }
    }
    Ok(out)
}

/// Points per direction of the indicator quadrature used for region
/// integrals over `{phi < 0}`.
pub fn default_region_points(k: usize) -> usize {
    2 * (k + 1)
}

/// Measure, `int y` and `int v` over `{phi_h < 0}` by quadrature-point
/// indicator sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMoments {
    pub area: f64,
    pub y_moment: f64,
    pub v_moment: f64,
}

pub fn region_moments(
    disc: &Discretization,
    phi: &FieldCoeffs,
    xi: Option<&FieldCoeffs>,
    points: usize,
) -> Result<RegionMoments> {
    disc.w.check(phi)?;
    let rule = tensor_rule(points)?;
    let table = eval_element_basis(disc.w.degree, &rule.points);
    let jac = disc.mesh.hx * disc.mesh.hy;
    let mut m = RegionMoments {
        area: 0.0,
        y_moment: 0.0,
        v_moment: 0.0,
    };
    for e in 0..disc.mesh.num_elements() {
        let c = disc.w.gather(phi, e);
        let mut vel = None;
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            if combine(&table, &c, q) >= 0.0 {
                continue;
            }
            let x = disc.mesh.map_point(e, p);
            let wj = w * jac;
            m.area += wj;
            m.y_moment += wj * x[1];
            if let Some(xi) = xi {
                if vel.is_none() {
                    vel = Some(velocity_from_stream(&disc.mesh, &disc.phi, xi, e, &rule.points)?);
                }
                m.v_moment += wj * vel.as_ref().map_or(0.0, |v| v[q].u[1]);
            }
        }
    }
    Ok(m)
}

/// Centre of mass `y_c` of `{phi_h < 0}`.
pub fn center_of_mass(disc: &Discretization, phi: &FieldCoeffs, points: usize) -> Result<f64> {
    let m = region_moments(disc, phi, None, points)?;
    if m.area <= 0.0 {
        return Err(Error::EmptyRegion("phi < 0"));
    }
    Ok(m.y_moment / m.area)
}

/// Mean vertical velocity `V_c` over `{phi_h < 0}`.
pub fn rise_velocity(disc: &Discretization, phi: &FieldCoeffs, xi: &FieldCoeffs, points: usize) -> Result<f64> {
    disc.phi.check(xi)?;
    let m = region_moments(disc, phi, Some(xi), points)?;
    if m.area <= 0.0 {
        return Err(Error::EmptyRegion("phi < 0"));
    }
    Ok(m.v_moment / m.area)
}

/// `2 sqrt(pi A) / P` from the region area and the contour length.
pub fn circularity_from(area: f64, contour: &ContourSet) -> Result<f64> {
    let p = contour.length();
    if !(p > 0.0) {
        return Err(Error::EmptyRegion("contour"));
    }
    if !(area > 0.0) {
        return Err(Error::EmptyRegion("phi < 0"));
    }
    Ok(2.0 * (core::f64::consts::PI * area).sqrt() / p)
}

/// Circularity of `{phi_h < 0}`. The area is the one enclosed by the
/// contour; the indicator quadrature is used only if the contour is open.
pub fn circularity(disc: &Discretization, phi: &FieldCoeffs, samples: usize, points: usize) -> Result<f64> {
    let contour = extract_contour(disc, phi, 0.0, samples)?;
    let area = match contour.enclosed_area() {
        Some(a) => a,
        None => region_moments(disc, phi, None, points)?.area,
    };
    circularity_from(area, &contour)
}

/// Lowest and highest `y` over the contour vertices.
pub fn bubble_spike(contour: &ContourSet) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in contour.vertices() {
        lo = lo.min(p[1]);
        hi = hi.max(p[1]);
    }
    if lo > hi {
        return Err(Error::EmptyRegion("contour"));
    }
    Ok((lo, hi))
}

/// One row of a benchmark time series. Quantities that are not defined for a
/// state (for example an empty region) are `NaN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRecord {
    pub t: f64,
    pub dt: f64,
    pub vmax: f64,
    pub mass: f64,
    pub y_c: f64,
    pub circularity: f64,
    pub v_c: f64,
    pub y_bubble: f64,
    pub y_spike: f64,
}

/// Evaluates every benchmark quantity of a state.
pub fn benchmark_record(
    disc: &Discretization,
    phi: &FieldCoeffs,
    xi: &FieldCoeffs,
    t: f64,
    dt: f64,
    samples: usize,
    points: usize,
) -> Result<BenchmarkRecord> {
    let m = region_moments(disc, phi, Some(xi), points)?;
    let contour = extract_contour(disc, phi, 0.0, samples)?;
    let (y_bubble, y_spike) = bubble_spike(&contour).unwrap_or((f64::NAN, f64::NAN));
    let (y_c, v_c) = if m.area > 0.0 {
        (m.y_moment / m.area, m.v_moment / m.area)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(BenchmarkRecord {
        t,
        dt,
        vmax: disc.max_velocity(xi),
        mass: disc.integral_w(phi),
        y_c,
        circularity: circularity_from(contour.enclosed_area().unwrap_or(m.area), &contour).unwrap_or(f64::NAN),
        v_c,
        y_bubble,
        y_spike,
    })
}

/// Nodal values of `phi` and `u` at the mesh vertices, averaged over the
/// elements sharing a vertex. Vertices are numbered row by row over the
/// `(nx + 1) x (ny + 1)` grid (periodic copies included).
pub fn vertex_fields(disc: &Discretization, phi: &FieldCoeffs, xi: &FieldCoeffs) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
    disc.w.check(phi)?;
    disc.phi.check(xi)?;
    let mesh = &disc.mesh;
    let gx = mesh.nx + 1;
    let n = gx * (mesh.ny + 1);
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    let table = eval_element_basis(disc.w.degree, &corners);
    let mut p = vec![0.0; n];
    let mut u = vec![[0.0; 2]; n];
    let mut cnt = vec![0.0; n];
    for e in 0..mesh.num_elements() {
        let (i, j) = mesh.element_ij(e);
        let c = disc.w.gather(phi, e);
        let vel = velocity_from_stream(mesh, &disc.phi, xi, e, &corners)?;
        for (q, r) in corners.iter().enumerate() {
            let node = (j + r[1] as usize) * gx + i + r[0] as usize;
            p[node] += combine(&table, &c, q);
            u[node][0] += vel[q].u[0];
            u[node][1] += vel[q].u[1];
            cnt[node] += 1.0;
        }
    }
    for k in 0..n {
        p[k] /= cnt[k];
        u[k][0] /= cnt[k];
        u[k][1] /= cnt[k];
    }
    Ok((p, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{BoundaryCondition, StructuredMesh};
    use core::f64::consts::PI;

    fn disc(n: usize, k: usize) -> Discretization {
        let m = StructuredMesh::unit_square(n, n).unwrap();
        Discretization::with_defaults(m, k, [BoundaryCondition::NoSlip; 4]).unwrap()
    }

    fn circle(x: f64, y: f64) -> f64 {
        ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt() - 0.25
    }

    #[test]
    fn l2_error_trivial_cases() {
        let d = disc(4, 2);
        let f = |x: f64, y: f64| x * y + 0.3;
        let phi = d.w.interpolate(&d.mesh, f).unwrap();
        assert!(l2_error(&d, &phi, &f).unwrap() < 1e-14);
        assert!((l2_error(&d, &d.w.zeros(), &|_, _| 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_error_order() {
        let f = |x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        let errs: Vec<f64> = [8, 16]
            .iter()
            .map(|&n| {
                let d = disc(n, 2);
                l2_error(&d, &d.w.interpolate(&d.mesh, f).unwrap(), &f).unwrap()
            })
            .collect();
        let rate = (errs[0] / errs[1]).log2();
        assert!((rate - 3.0).abs() < 0.25, "rate {rate}");
    }

    #[test]
    fn horizontal_line_contour() {
        let d = disc(4, 1);
        let phi = d.w.interpolate(&d.mesh, |_, y| y - 0.5).unwrap();
        let c = extract_contour(&d, &phi, 0.0, default_samples(1)).unwrap();
        assert_eq!(c.lines.len(), 1);
        assert!((c.length() - 1.0).abs() < 1e-10);
        assert!(!c.lines[0].closed);
        assert_eq!(c.enclosed_area(), None);
        let (lo, hi) = bubble_spike(&c).unwrap();
        assert!((lo - 0.5).abs() < 1e-12 && (hi - 0.5).abs() < 1e-12);
        for l in &c.lines {
            for w in l.points.windows(2) {
                assert_ne!(w[0], w[1]);
            }
        }
    }

    #[test]
    fn circle_contour_and_circularity() {
        let d = disc(16, 2);
        let phi = d.w.interpolate(&d.mesh, circle).unwrap();
        let c = extract_contour(&d, &phi, 0.0, 8).unwrap();
        assert_eq!(c.lines.len(), 1);
        assert!(c.lines[0].closed);
        assert_eq!(c.lines[0].points.first(), c.lines[0].points.last());
        let exact = 2.0 * PI * 0.25;
        assert!((c.length() - exact).abs() / exact < 5e-3);
        let area = c.enclosed_area().unwrap();
        assert!((area - PI / 16.0).abs() / (PI / 16.0) < 5e-3, "area {area}");
        let circ = circularity(&d, &phi, 8, default_region_points(2)).unwrap();
        assert!((circ - 1.0).abs() < 2e-3, "circularity {circ}");
    }

    #[test]
    fn constant_field_has_empty_contour() {
        let d = disc(4, 2);
        let phi = d.w.interpolate(&d.mesh, |_, _| 1.0).unwrap();
        let c = extract_contour(&d, &phi, 0.0, 6).unwrap();
        assert!(c.is_empty());
        assert!(bubble_spike(&c).is_err());
        assert!(center_of_mass(&d, &phi, 4).is_err());
        assert!(extract_contour(&d, &phi, 0.0, 1).is_err());
    }

    #[test]
    fn centre_of_mass_of_disk() {
        let d = disc(32, 2);
        let phi = d.w.interpolate(&d.mesh, circle).unwrap();
        let yc = center_of_mass(&d, &phi, default_region_points(2)).unwrap();
        assert!((yc - 0.5).abs() < 2e-3);
    }

    #[test]
    fn half_plane_moments() {
        let d = disc(8, 2);
        let phi = d.w.interpolate(&d.mesh, |_, y| y - 0.375).unwrap();
        let pts = default_region_points(2);
        let m = region_moments(&d, &phi, None, pts).unwrap();
        assert!((m.area - 0.375).abs() < 2.0 / pts as f64 * 0.375);
        let yc = center_of_mass(&d, &phi, pts).unwrap();
        assert!((yc - 0.1875).abs() < 2.0 / pts as f64 * 0.1875);
    }

    #[test]
    fn uniform_rise_velocity() {
        // xi = -x gives u = (0, 1); natural sides keep the stream unconstrained
        // apart from the pinned corner where -x vanishes.
        let m = StructuredMesh::unit_square(4, 4).unwrap();
        let d = Discretization::with_defaults(m, 2, [BoundaryCondition::Natural; 4]).unwrap();
        let phi = d.w.interpolate(&d.mesh, circle).unwrap();
        let xi = d.phi.interpolate(&d.mesh, |x, _| -x).unwrap();
        let vc = rise_velocity(&d, &phi, &xi, 6).unwrap();
        assert!((vc - 1.0).abs() < 1e-12);
    }
}
