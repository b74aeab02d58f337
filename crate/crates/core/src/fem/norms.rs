//! L2 norms and errors by composite order-6 quadrature, and experimental
//! orders of convergence.

use super::FeFunction;
use crate::mesh::Mesh2D;
use crate::quad::TRI_ORDER6;
use crate::{Error, Result};
use std::cell::Cell;

/// Anything evaluable per element at quadrature points. Implementations
/// receive the triangle index and barycentric coordinates on `mesh` plus the
/// physical position.
pub trait MeshFunction {
    fn eval(&self, mesh: &Mesh2D, tri: usize, bary: [f64; 3], xy: [f64; 2]) -> f64;
}

/// A plain closure of the physical coordinates.
pub struct FnField<F: Fn(f64, f64) -> f64>(pub F);

impl<F: Fn(f64, f64) -> f64> MeshFunction for FnField<F> {
    fn eval(&self, _mesh: &Mesh2D, _tri: usize, _bary: [f64; 3], xy: [f64; 2]) -> f64 {
        (self.0)(xy[0], xy[1])
    }
}

impl MeshFunction for FeFunction {
    fn eval(&self, mesh: &Mesh2D, tri: usize, bary: [f64; 3], xy: [f64; 2]) -> f64 {
        if std::ptr::eq(mesh, self.mesh().as_ref()) {
            self.eval_in_tri(tri, bary)
        } else {
            // evaluation on a foreign mesh falls back to point location
            self.eval_at(xy).unwrap_or(0.0)
        }
    }
}

/// The control recovered from an adjoint state by the pointwise projection
/// `u(x) = clamp(-p(x)/nu, [lower, upper])`. Evaluating on a different mesh
/// locates points in the adjoint's own mesh with a walking seed, so sweeps
/// over a fine mesh stay cheap. Not `Sync`: clone per thread if needed.
pub struct ProjectedControl {
    p: FeFunction,
    nu: f64,
    lower: f64,
    upper: f64,
    seed: Cell<usize>,
}

impl ProjectedControl {
    pub fn new(p: FeFunction, nu: f64, lower: f64, upper: f64) -> Self {
        ProjectedControl {
            p,
            nu,
            lower,
            upper,
            seed: Cell::new(0),
        }
    }

    pub fn adjoint(&self) -> &FeFunction {
        &self.p
    }

    pub fn eval_at(&self, xy: [f64; 2]) -> Option<f64> {
        let (tri, bary) = self
            .p
            .mesh()
            .locate_point_seeded(xy, self.seed.get())?;
        self.seed.set(tri);
        let pv = self.p.eval_in_tri(tri, bary);
        Some(crate::optimizer::project_box(
            -pv / self.nu,
            self.lower,
            self.upper,
        ))
    }
}

impl MeshFunction for ProjectedControl {
    fn eval(&self, mesh: &Mesh2D, tri: usize, bary: [f64; 3], xy: [f64; 2]) -> f64 {
        let pv = if std::ptr::eq(mesh, self.p.mesh().as_ref()) {
            self.p.eval_in_tri(tri, bary)
        } else {
            match self.p.mesh().locate_point_seeded(xy, self.seed.get()) {
                Some((t, b)) => {
                    self.seed.set(t);
                    self.p.eval_in_tri(t, b)
                }
                None => 0.0,
            }
        };
        crate::optimizer::project_box(-pv / self.nu, self.lower, self.upper)
    }
}



/// L2 norm over the mesh (order-6 quadrature per element; kinks of projected
/// controls are resolved by the rule within the tolerances used here).
pub fn l2_norm(mesh: &Mesh2D, f: &impl MeshFunction) -> f64 {
    let mut acc = 0.0;
    for k in 0..mesh.n_triangles() {
        let p = mesh.tri_vertices(k);
        let area = mesh.tri_area(k);
        for &(bary, w) in TRI_ORDER6.iter() {
            let xy = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            let v = f.eval(mesh, k, bary, xy);
            acc += w * area * v * v;
        }
    }
    acc.sqrt()
}

/// L2 distance between two fields, integrated on `mesh`.
pub fn l2_error(mesh: &Mesh2D, a: &impl MeshFunction, b: &impl MeshFunction) -> f64 {
    let mut acc = 0.0;
    for k in 0..mesh.n_triangles() {
        let p = mesh.tri_vertices(k);
        let area = mesh.tri_area(k);
        for &(bary, w) in TRI_ORDER6.iter() {
            let xy = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            let d = a.eval(mesh, k, bary, xy) - b.eval(mesh, k, bary, xy);
            acc += w * area * d * d;
        }
    }
    acc.sqrt()
}

/// Experimental orders of convergence: `out[k] = log(e[k] / e[k+1]) / log(ratio)`.
pub fn eoc(errors: &[f64], ratio: f64) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two errors for an order".into(),
        ));
    }
    if ratio <= 1.0 {
        return Err(Error::InvalidArgument("ratio must exceed 1".into()));
    }
    if let Some(&bad) = errors.iter().find(|&&e| e <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "errors must be positive, found {bad}"
        )));
    }
    Ok(errors
        .windows(2)
        .map(|w| (w[0] / w[1]).ln() / ratio.ln())
        .collect())
}
