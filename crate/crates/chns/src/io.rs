//! CSV time series, step logs and legacy VTK snapshots.

use crate::error::RunError;
use chns_core::postproc::{vertex_fields, BenchmarkRecord};
use chns_core::spaces::FieldCoeffs;
use chns_core::stepper::StepRecord;
use chns_core::forms::Discretization;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const SERIES_HEADER: &str = "t,dt,vmax,mass,y_c,circularity,V_c,y_bubble,y_spike";
pub const STEPS_HEADER: &str = "step,t,dt,vmax,mass,ch_residual,momentum_residual";

/// Formats like C's `%.10e`: ten mantissa digits and a signed, two digit
/// exponent.
pub fn fmt_sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.10e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent in LowerExp output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_sci(*v)).collect::<Vec<_>>().join(",")
}

pub fn series_csv(records: &[BenchmarkRecord]) -> String {
    let mut s = String::from(SERIES_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&row(&[r.t, r.dt, r.vmax, r.mass, r.y_c, r.circularity, r.v_c, r.y_bubble, r.y_spike]));
        s.push('\n');
    }
    s
}

pub fn steps_csv(log: &[StepRecord]) -> String {
    let mut s = String::from(STEPS_HEADER);
    s.push('\n');
    for r in log {
        let _ = writeln!(
            s,
            "{},{}",
            r.step,
            row(&[r.t, r.dt, r.v_max, r.mass, r.ch_residual, r.momentum_residual])
        );
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

pub fn write_series(records: &[BenchmarkRecord], path: &Path) -> Result<(), RunError> {
    write_text(path, &series_csv(records))
}

pub fn write_steps(log: &[StepRecord], path: &Path) -> Result<(), RunError> {
    write_text(path, &steps_csv(log))
}

/// Reads a time series written by [`write_series`].
pub fn read_series(path: &Path) -> Result<Vec<BenchmarkRecord>, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    let bad = |line: usize, msg: &str| RunError::Format {
        path: path.into(),
        msg: format!("line {line}: {msg}"),
    };
    let mut lines = text.lines();
    if lines.next() != Some(SERIES_HEADER) {
        return Err(bad(1, "unexpected header"));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(i + 2, "not a number"))?;
            if v.len() != 9 {
                return Err(bad(i + 2, "expected 9 columns"));
            }
            Ok(BenchmarkRecord {
                t: v[0],
                dt: v[1],
                vmax: v[2],
                mass: v[3],
                y_c: v[4],
                circularity: v[5],
                v_c: v[6],
                y_bubble: v[7],
                y_spike: v[8],
            })
        })
        .collect()
}

/// Legacy ASCII VTK unstructured grid of the `(nx + 1) x (ny + 1)` vertex
/// lattice with `phi` and `velocity` at the vertices.
pub fn vtk_string(disc: &Discretization, phi: &FieldCoeffs, xi: &FieldCoeffs, t: f64) -> Result<String, RunError> {
    let (p, u) = vertex_fields(disc, phi, xi)?;
    let mesh = &disc.mesh;
    let gx = mesh.nx + 1;
    let n = gx * (mesh.ny + 1);
    let cells = mesh.nx * mesh.ny;
    let (x0, y0) = (mesh.x0, mesh.y0);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nchns t = {}\nASCII\nDATASET UNSTRUCTURED_GRID", fmt_sci(t));
    let _ = writeln!(s, "POINTS {n} double");
    for j in 0..=mesh.ny {
        for i in 0..=mesh.nx {
            let _ = writeln!(s, "{} {} 0", x0 + i as f64 * mesh.hx, y0 + j as f64 * mesh.hy);
        }
    }
    let _ = writeln!(s, "CELLS {cells} {}", 5 * cells);
    for j in 0..mesh.ny {
        for i in 0..mesh.nx {
            let a = j * gx + i;
            let _ = writeln!(s, "4 {} {} {} {}", a, a + 1, a + 1 + gx, a + gx);
        }
    }
    let _ = writeln!(s, "CELL_TYPES {cells}");
    for _ in 0..cells {
        s.push_str("9\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}\nSCALARS phi double 1\nLOOKUP_TABLE default");
    for v in &p {
        let _ = writeln!(s, "{v}");
    }
    let _ = writeln!(s, "VECTORS velocity double");
    for v in &u {
        let _ = writeln!(s, "{} {} 0", v[0], v[1]);
    }
    Ok(s)
}

pub fn write_fields(
    disc: &Discretization,
    phi: &FieldCoeffs,
    xi: &FieldCoeffs,
    t: f64,
    path: &Path,
) -> Result<(), RunError> {
    write_text(path, &vtk_string(disc, phi, xi, t)?)
}

/// Contents of a VTK file written by [`write_fields`].
#[derive(Debug, Clone, PartialEq)]
pub struct VtkData {
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 4]>,
    pub phi: Vec<f64>,
    pub velocity: Vec<[f64; 3]>,
}

pub fn read_vtk(path: &Path) -> Result<VtkData, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    parse_vtk(&text).map_err(|msg| RunError::Format { path: path.into(), msg })
}

fn parse_vtk(text: &str) -> Result<VtkData, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err("missing VTK signature".into());
    }
    lines.next();
    if lines.next() != Some("ASCII") || lines.next() != Some("DATASET UNSTRUCTURED_GRID") {
        return Err("expected an ASCII unstructured grid".into());
    }
    fn count(line: Option<&str>, keyword: &str) -> Result<usize, String> {
        let line = line.ok_or(format!("missing {keyword}"))?;
        let mut it = line.split_whitespace();
        if it.next() != Some(keyword) {
            return Err(format!("expected {keyword}, got `{line}`"));
        }
        it.next()
            .and_then(|n| n.parse().ok())
            .ok_or(format!("bad count in `{line}`"))
    }
    fn numbers<T: std::str::FromStr>(line: Option<&str>, n: usize) -> Result<Vec<T>, String> {
        let line = line.ok_or("unexpected end of file")?;
        let v: Vec<T> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| format!("bad number in `{line}`")))
            .collect::<Result<_, _>>()?;
        if v.len() != n {
            return Err(format!("expected {n} values in `{line}`"));
        }
        Ok(v)
    }
    let n = count(lines.next(), "POINTS")?;
    let points = (0..n)
        .map(|_| numbers::<f64>(lines.next(), 3).map(|v| [v[0], v[1], v[2]]))
        .collect::<Result<Vec<_>, _>>()?;
    let nc = count(lines.next(), "CELLS")?;
    let cells = (0..nc)
        .map(|_| {
            let v = numbers::<usize>(lines.next(), 5)?;
            if v[0] != 4 || v[1..].iter().any(|&i| i >= n) {
                return Err("invalid quad cell".to_string());
            }
            Ok([v[1], v[2], v[3], v[4]])
        })
        .collect::<Result<Vec<_>, _>>()?;
    if count(lines.next(), "CELL_TYPES")? != nc {
        return Err("cell type count mismatch".into());
    }
    for _ in 0..nc {
        if lines.next() != Some("9") {
            return Err("expected quad cell type 9".into());
        }
    }
    if count(lines.next(), "POINT_DATA")? != n {
        return Err("point data count mismatch".into());
    }
    if lines.next() != Some("SCALARS phi double 1") || lines.next() != Some("LOOKUP_TABLE default") {
        return Err("expected scalars `phi`".into());
    }
    let phi = (0..n)
        .map(|_| numbers::<f64>(lines.next(), 1).map(|v| v[0]))
        .collect::<Result<Vec<_>, _>>()?;
    if lines.next() != Some("VECTORS velocity double") {
        return Err("expected vectors `velocity`".into());
    }
    let velocity = (0..n)
        .map(|_| numbers::<f64>(lines.next(), 3).map(|v| [v[0], v[1], v[2]]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VtkData {
        points,
        cells,
        phi,
        velocity,
    })
}
