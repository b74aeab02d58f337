//! Export: VTK legacy ASCII (unstructured grid, point data), CSV, and the
//! fixed float formatting used by all table outputs.

use crate::fem::FeFunction;
use crate::mesh::Mesh2D;
use crate::Result;
use std::fmt::Write as _;
use std::path::Path;

/// Format with a fixed number of significant digits, in the style of
/// C's `%g`: fixed notation for moderate exponents, scientific otherwise,
/// trailing zeros stripped. Deterministic for identical inputs.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp_str) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp_str.parse().expect("exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = strip_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    strip_zeros(&format!("{x:.decimals$}"))
}

fn strip_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

/// VTK legacy ASCII unstructured grid with named scalar point-data fields.
/// Coordinates and values use shortest round-trip formatting.
pub fn vtk_unstructured(mesh: &Mesh2D, fields: &[(&str, &[f64])]) -> String {
    let n = mesh.n_vertices();
    let k = mesh.n_triangles();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("curvectrl output\n");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {n} double").unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{} {} 0", v[0], v[1]).unwrap();
    }
    writeln!(out, "CELLS {k} {}", 4 * k).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {k}").unwrap();
    for _ in 0..k {
        out.push_str("5\n");
    }
    writeln!(out, "POINT_DATA {n}").unwrap();
    for (name, values) in fields {
        assert_eq!(values.len(), n, "field {name} has wrong length");
        writeln!(out, "SCALARS {name} double 1").unwrap();
        out.push_str("LOOKUP_TABLE default\n");
        for v in *values {
            writeln!(out, "{v}").unwrap();
        }
    }
    out
}

/// Write the state, adjoint and control (sampled at vertices) of a solve.
pub fn write_solution_vtk(
    path: &Path,
    mesh: &Mesh2D,
    y: &FeFunction,
    p: &FeFunction,
    u_at_vertices: &[f64],
) -> Result<()> {
    let text = vtk_unstructured(
        mesh,
        &[
            ("state", y.coeffs()),
            ("adjoint", p.coeffs()),
            ("control", u_at_vertices),
        ],
    );
    std::fs::write(path, text)?;
    Ok(())
}

/// CSV with a header row; all numeric cells should already be formatted.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// FeFunction to CSV: vertex index, coordinates, value.
pub fn write_fe_csv(path: &Path, f: &FeFunction) -> Result<()> {
    let mesh = f.mesh();
    let rows: Vec<Vec<String>> = (0..mesh.n_vertices())
        .map(|v| {
            vec![
                v.to_string(),
                fmt_sig(mesh.vertices()[v][0], 9),
                fmt_sig(mesh.vertices()[v][1], 9),
                fmt_sig(f.coeffs()[v], 9),
            ]
        })
        .collect();
    write_csv(path, &["vertex", "x", "y", "value"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0, 9), "0");
        assert_eq!(fmt_sig(0.146281, 9), "0.146281");
        assert_eq!(fmt_sig(1089.0, 9), "1089");
        assert_eq!(fmt_sig(-0.5, 9), "-0.5");
        assert_eq!(fmt_sig(0.3535533905932738, 9), "0.353553391");
        assert_eq!(fmt_sig(1.0e-7, 9), "1e-7");
        assert_eq!(fmt_sig(123456789012.0, 9), "1.23456789e11");
        assert_eq!(fmt_sig(0.89674110, 8), "0.8967411");
    }

    #[test]
    fn formatting_is_stable_under_repetition() {
        let xs = [1.0 / 3.0, 2.0f64.sqrt(), -1.734e-13];
        for x in xs {
            assert_eq!(fmt_sig(x, 9), fmt_sig(x, 9));
        }
    }

    #[test]
    fn vtk_contains_all_sections() {
        let mesh = build_structured_mesh(2).unwrap();
        let zeros = vec![0.0; mesh.n_vertices()];
        let text = vtk_unstructured(&mesh, &[("state", &zeros)]);
        for needle in [
            "# vtk DataFile Version 3.0",
            "DATASET UNSTRUCTURED_GRID",
            "POINTS 9 double",
            "CELLS 8 32",
            "CELL_TYPES 8",
            "POINT_DATA 9",
            "SCALARS state double 1",
        ] {
            assert!(text.contains(needle), "missing {needle:?}");
        }
    }
}
