//! Semismooth Newton solver for the coupled optimality system of the
//! curve-fidelity control problem with box constraints.
//!
//! The state and adjoint satisfy, with `u = clamp(-p/nu, [a, b])` never
//! interpolated into the finite element space,
//!
//! ```text
//!   A y = (u(p), phi)          A p = M y - G
//! ```
//!
//! Each Newton step linearizes the projection through the indicator of the
//! inactive set at quadrature points and solves the nonsymmetric block
//! system with a sparse LU whose symbolic factorization is reused across
//! iterations.

use crate::fem::{
    assemble_mass, assemble_operator, assemble_rhs, assemble_weighted_mass_interior, DofMap,
    EllipticCoefficients, FeFunction, LinearSolverKind, MeshFunction, ProjectedControl,
    SparseOperator, StateSolver,
};
use crate::fidelity::FidelityOperator;
use crate::linalg::{bicgstab, CholeskySolver, CsrMatrix, SparseLu};
use crate::mesh::Mesh2D;
use crate::quad::{TRI_ORDER4, TRI_ORDER6};
use crate::{Error, Result};
use std::sync::Arc;

/// Clamp `v` to `[lower, upper]`; infinite bounds disable the clamp on that
/// side. Equivalent to `v + max(0, lower - v) - max(0, v - upper)`.
pub fn project_box(v: f64, lower: f64, upper: f64) -> f64 {
    v.max(lower).min(upper)
}

/// Bounds must satisfy `lower < upper` (infinities allowed).
pub fn validate_bounds(lower: f64, upper: f64) -> Result<()> {
    if !(lower < upper) {
        return Err(Error::InvalidArgument(format!(
            "bounds must satisfy lower < upper, got [{lower}, {upper}]"
        )));
    }
    Ok(())
}

/// The discrete control problem: elliptic operator, fidelity term, control
/// cost and box bounds.
pub struct ControlProblem {
    pub coeffs: EllipticCoefficients,
    pub fidelity: FidelityOperator,
    pub nu: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ControlProblem {
    pub fn new(
        coeffs: EllipticCoefficients,
        fidelity: FidelityOperator,
        nu: f64,
        lower: f64,
        upper: f64,
    ) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
        }
        validate_bounds(lower, upper)?;
        Ok(ControlProblem {
            coeffs,
            fidelity,
            nu,
            lower,
            upper,
        })
    }

    pub fn unconstrained(coeffs: EllipticCoefficients, fidelity: FidelityOperator, nu: f64) -> Result<Self> {
        Self::new(coeffs, fidelity, nu, f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Norm used for the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualNorm {
    /// Energy norm of the Riesz representative: solve the discrete
    /// Laplacian with the residual as load and take sqrt(w . r). Mesh
    /// independent.
    RieszH1,
    /// Plain Euclidean norm of the residual vectors.
    Euclidean,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub norm: ResidualNorm,
    pub linear: LinearSolverKind,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-8,
            max_iter: 50,
            norm: ResidualNorm::RieszH1,
            linear: LinearSolverKind::Direct,
        }
    }
}

/// Converged state/adjoint pair. The control is not stored as coefficients:
/// it is the projection formula applied to the adjoint, exposed through
/// [`SolveResult::control`].
pub struct SolveResult {
    pub y: FeFunction,
    pub p: FeFunction,
    pub nu: f64,
    pub lower: f64,
    pub upper: f64,
    /// Newton steps taken
    pub iterations: usize,
    /// stopping-norm values, one before each step plus the final one
    pub residual_history: Vec<f64>,
    /// interior vertices where the control sits at the lower bound
    pub active_lower: Vec<usize>,
    /// interior vertices where the control sits at the upper bound
    pub active_upper: Vec<usize>,
}

impl SolveResult {
    pub fn control(&self) -> ProjectedControl {
        ProjectedControl::new(self.p.clone(), self.nu, self.lower, self.upper)
    }
}

/// Workspace for the coupled Newton systems: fixed CSC pattern
/// `[[A, (1/nu) M_chi], [-M_fid, A]]` over interior dofs, with the symbolic
/// LU computed once.
struct CoupledSystem {
    m: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    lu: Option<SparseLu>,
}

impl CoupledSystem {
    fn new(a: &CsrMatrix, mass_pattern: &CsrMatrix, fid: &CsrMatrix, direct: bool) -> Result<Self> {
        let m = a.nrows();
        let dim = 2 * m;
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        // symmetric blocks: CSR rows double as CSC columns
        for j in 0..m {
            let (cols_a, _) = a.row(j);
            let (cols_f, _) = fid.row(j);
            row_idx.extend(cols_a.iter().copied());
            row_idx.extend(cols_f.iter().map(|&i| i + m));
            col_ptr.push(row_idx.len());
        }
        for j in 0..m {
            let (cols_c, _) = mass_pattern.row(j);
            let (cols_a, _) = a.row(j);
            row_idx.extend(cols_c.iter().copied());
            row_idx.extend(cols_a.iter().map(|&i| i + m));
            col_ptr.push(row_idx.len());
        }
        let values = vec![0.0; row_idx.len()];
        let lu = if direct {
            Some(SparseLu::from_pattern(dim, col_ptr.clone(), row_idx.clone())?)
        } else {
            None
        };
        Ok(CoupledSystem {
            m,
            col_ptr,
            row_idx,
            values,
            lu,
        })
    }

    /// Refill values from the blocks (`chi_mass` varies per iteration).
    fn fill(&mut self, a: &CsrMatrix, chi_mass: &CsrMatrix, fid: &CsrMatrix, inv_nu: f64) {
        let m = self.m;
        let mut k = 0;
        for j in 0..m {
            let (_, vals_a) = a.row(j);
            let (_, vals_f) = fid.row(j);
            for &v in vals_a {
                self.values[k] = v;
                k += 1;
            }
            for &v in vals_f {
                self.values[k] = -v;
                k += 1;
            }
        }
        for j in 0..m {
            let (_, vals_c) = chi_mass.row(j);
            let (_, vals_a) = a.row(j);
            for &v in vals_c {
                self.values[k] = inv_nu * v;
                k += 1;
            }
            for &v in vals_a {
                self.values[k] = v;
                k += 1;
            }
        }
        debug_assert_eq!(k, self.values.len());
    }

    fn solve(&mut self, rhs: &[f64], linear: LinearSolverKind) -> Result<Vec<f64>> {
        match linear {
            LinearSolverKind::Direct => {
                let lu = self.lu.as_mut().expect("direct mode has an LU");
                lu.refactor(&self.values)?;
                lu.solve(rhs)
            }
            LinearSolverKind::Krylov { tol } => {
                // convert the CSC arrays to CSR triplets (the matrix is not
                // symmetric as a whole)
                let dim = 2 * self.m;
                let mut triplets = Vec::with_capacity(self.row_idx.len());
                for j in 0..dim {
                    for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                        triplets.push((self.row_idx[k], j, self.values[k]));
                    }
                }
                let mat = CsrMatrix::from_triplets(dim, dim, &triplets);
                let (x, _its) = bicgstab(&mat, rhs, tol, 400 * dim.max(50), true)?;
                Ok(x)
            }
        }
    }
}

/// Interior-dof restriction of the fidelity operator.
fn restrict_fidelity(fid: &FidelityOperator, dofs: &DofMap) -> (CsrMatrix, Vec<f64>) {
    let m = dofs.n_dofs();
    let mut triplets = Vec::new();
    for v in 0..fid.m.nrows() {
        let Some(i) = dofs.dof_of_vertex(v) else {
            continue;
        };
        let (cols, vals) = fid.m.row(v);
        for (&c, &val) in cols.iter().zip(vals) {
            if let Some(j) = dofs.dof_of_vertex(c) {
                triplets.push((i, j, val));
            }
        }
    }
    let g = dofs.restrict(&fid.g);
    (CsrMatrix::from_triplets(m, m, &triplets), g)
}

/// Load vector of the projected control: `(clamp(-p/nu), phi_z)` with the
/// order-4 rule; the projection is applied at quadrature points, never
/// interpolated.
fn projected_control_rhs(
    mesh: &Mesh2D,
    dofs: &DofMap,
    p: &FeFunction,
    nu: f64,
    lower: f64,
    upper: f64,
) -> Vec<f64> {
    let mut rhs = vec![0.0; dofs.n_dofs()];
    for k in 0..mesh.n_triangles() {
        let area = mesh.tri_area(k);
        let t = mesh.triangles()[k];
        for &(bary, w) in TRI_ORDER4.iter() {
            let pv = p.eval_in_tri(k, bary);
            let u = project_box(-pv / nu, lower, upper);
            for i in 0..3 {
                if let Some(di) = dofs.dof_of_vertex(t[i]) {
                    rhs[di] += w * area * u * bary[i];
                }
            }
        }
    }
    rhs
}

/// The two residual blocks of the optimality system at `(y, p)`:
/// `(A y - (u(p), phi), A p - (M y - G))` over interior dofs.
pub fn residual(
    problem: &ControlProblem,
    op: &SparseOperator,
    y: &FeFunction,
    p: &FeFunction,
) -> (Vec<f64>, Vec<f64>) {
    let mesh = y.mesh();
    let dofs = op.dofs();
    let yi = dofs.restrict(y.coeffs());
    let pi = dofs.restrict(p.coeffs());
    let rhs_u = projected_control_rhs(mesh, dofs, p, problem.nu, problem.lower, problem.upper);
    let ay = op.matrix().matvec(&yi);
    let r1: Vec<f64> = ay.iter().zip(&rhs_u).map(|(a, b)| a - b).collect();
    let (m_int, g_int) = restrict_fidelity(&problem.fidelity, dofs);
    let my = m_int.matvec(&yi);
    let ap = op.matrix().matvec(&pi);
    let r2: Vec<f64> = ap
        .iter()
        .zip(my.iter().zip(&g_int))
        .map(|(a, (b, c))| a - (b - c))
        .collect();
    (r1, r2)
}

/// Solve the optimality system by a semismooth Newton iteration from the
/// zero initial iterate with full steps. Unconstrained problems are linear
/// and converge in one step.
pub fn semismooth_newton(
    problem: &ControlProblem,
    mesh: &Arc<Mesh2D>,
    opts: NewtonOptions,
) -> Result<SolveResult> {
    let op = assemble_operator(mesh, &problem.coeffs)?;
    let dofs = op.dofs().clone();
    let m = dofs.n_dofs();
    if m == 0 {
        return Err(Error::InvalidArgument("mesh has no interior vertices".into()));
    }
    if problem.fidelity.m.nrows() != mesh.n_vertices() {
        return Err(Error::InvalidArgument(
            "fidelity operator does not match the mesh".into(),
        ));
    }
    let (fid_int, g_int) = restrict_fidelity(&problem.fidelity, &dofs);
    // mass pattern fixes the sparsity of the chi-weighted block
    let mass_pattern =
        assemble_weighted_mass_interior(mesh, &dofs, &TRI_ORDER4, |_, _, _| 1.0);

    // Riesz lift via the discrete Laplacian (coincides with A for the
    // Laplace operator; assembled separately otherwise)
    let riesz_chol = match opts.norm {
        ResidualNorm::RieszH1 => {
            let lap = if problem.coeffs.is_laplace() {
                op.matrix().clone()
            } else {
                assemble_operator(mesh, &EllipticCoefficients::laplace())?
                    .matrix()
                    .clone()
            };
            Some(CholeskySolver::new(&lap)?)
        }
        ResidualNorm::Euclidean => None,
    };
    let res_norm = |r1: &[f64], r2: &[f64]| -> f64 {
        match &riesz_chol {
            Some(chol) => {
                let w1 = chol.solve(r1);
                let w2 = chol.solve(r2);
                let e1: f64 = w1.iter().zip(r1).map(|(a, b)| a * b).sum();
                let e2: f64 = w2.iter().zip(r2).map(|(a, b)| a * b).sum();
                (e1.max(0.0) + e2.max(0.0)).sqrt()
            }
            None => {
                let s1: f64 = r1.iter().map(|v| v * v).sum();
                let s2: f64 = r2.iter().map(|v| v * v).sum();
                (s1 + s2).sqrt()
            }
        }
    };

    let direct = matches!(opts.linear, LinearSolverKind::Direct);
    let mut coupled = CoupledSystem::new(op.matrix(), &mass_pattern, &fid_int, direct)?;

    let mut yi = vec![0.0; m];
    let mut pi = vec![0.0; m];
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let inv_nu = 1.0 / problem.nu;

    loop {
        let p_fe = FeFunction::from_interior(mesh.clone(), &dofs, &pi);
        let rhs_u = projected_control_rhs(mesh, &dofs, &p_fe, problem.nu, problem.lower, problem.upper);
        let ay = op.matrix().matvec(&yi);
        let r1: Vec<f64> = ay.iter().zip(&rhs_u).map(|(a, b)| a - b).collect();
        let my = fid_int.matvec(&yi);
        let ap = op.matrix().matvec(&pi);
        let r2: Vec<f64> = ap
            .iter()
            .zip(my.iter().zip(&g_int))
            .map(|(a, (b, c))| a - (b - c))
            .collect();
        let res = res_norm(&r1, &r2);
        history.push(res);
        if res <= opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                last: res,
                residual_history: history,
            });
        }
        // generalized derivative: indicator of the strictly inactive set at
        // quadrature points (the boundary of the active set counts active)
        let chi_mass = assemble_weighted_mass_interior(mesh, &dofs, &TRI_ORDER4, |tri, bary, _| {
            let pv = p_fe.eval_in_tri(tri, bary);
            let v = -pv * inv_nu;
            if problem.lower < v && v < problem.upper {
                1.0
            } else {
                0.0
            }
        });
        coupled.fill(op.matrix(), &chi_mass, &fid_int, inv_nu);
        let mut rhs = Vec::with_capacity(2 * m);
        rhs.extend(r1.iter().map(|v| -v));
        rhs.extend(r2.iter().map(|v| -v));
        let delta = coupled.solve(&rhs, opts.linear)?;
        for i in 0..m {
            yi[i] += delta[i];
            pi[i] += delta[m + i];
        }
        iterations += 1;
    }

    let y = FeFunction::from_interior(mesh.clone(), &dofs, &yi);
    let p = FeFunction::from_interior(mesh.clone(), &dofs, &pi);
    let mut active_lower = Vec::new();
    let mut active_upper = Vec::new();
    for dof in 0..m {
        let v = dofs.vertex_of_dof(dof);
        let u = -p.coeffs()[v] * inv_nu;
        if u <= problem.lower {
            active_lower.push(v);
        }
        if u >= problem.upper {
            active_upper.push(v);
        }
    }
    Ok(SolveResult {
        y,
        p,
        nu: problem.nu,
        lower: problem.lower,
        upper: problem.upper,
        iterations,
        residual_history: history,
        active_lower,
        active_upper,
    })
}

/// The reduced objective `1/2 ||S u - g||_fid^2 + nu/2 ||u||^2` for an
/// arbitrary control field.
pub fn objective(
    problem: &ControlProblem,
    mesh: &Arc<Mesh2D>,
    control: &impl MeshFunction,
) -> Result<f64> {
    let solver = StateSolver::new(mesh.clone(), &problem.coeffs)?;
    let rhs = assemble_rhs(mesh, solver.dofs(), &TRI_ORDER4, control);
    let yi = solver.solve_interior(&rhs)?;
    let y = FeFunction::from_interior(mesh.clone(), solver.dofs(), &yi);
    let fid = problem.fidelity.value(y.coeffs());
    let u_norm = crate::fem::l2_norm(mesh, control);
    Ok(fid + 0.5 * problem.nu * u_norm * u_norm)
}

/// Directional derivative residual `(p + nu u, d)` where `p` is the adjoint
/// of the state driven by `u`. Vanishes at the unconstrained optimum; at a
/// constrained optimum it is nonnegative for feasible directions `v - u`.
pub fn gradient_residual(
    problem: &ControlProblem,
    mesh: &Arc<Mesh2D>,
    control: &impl MeshFunction,
    direction: &impl MeshFunction,
) -> Result<f64> {
    let solver = StateSolver::new(mesh.clone(), &problem.coeffs)?;
    let dofs = solver.dofs();
    let rhs = assemble_rhs(mesh, dofs, &TRI_ORDER4, control);
    let yi = solver.solve_interior(&rhs)?;
    let y = FeFunction::from_interior(mesh.clone(), dofs, &yi);
    let (m_int, g_int) = restrict_fidelity(&problem.fidelity, dofs);
    let my = m_int.matvec(&yi);
    let adj_rhs: Vec<f64> = my.iter().zip(&g_int).map(|(a, b)| a - b).collect();
    let pi = solver.solve_interior(&adj_rhs)?;
    let p = FeFunction::from_interior(mesh.clone(), dofs, &pi);
    let _ = y;
    // (p + nu u, d) with the order-6 rule
    let mut acc = 0.0;
    for k in 0..mesh.n_triangles() {
        let pts = mesh.tri_vertices(k);
        let area = mesh.tri_area(k);
        for &(bary, w) in TRI_ORDER6.iter() {
            let xy = [
                bary[0] * pts[0][0] + bary[1] * pts[1][0] + bary[2] * pts[2][0],
                bary[0] * pts[0][1] + bary[1] * pts[1][1] + bary[2] * pts[2][1],
            ];
            let pv = p.eval_in_tri(k, bary);
            let u = control.eval(mesh, k, bary, xy);
            let d = direction.eval(mesh, k, bary, xy);
            acc += w * area * (pv + problem.nu * u) * d;
        }
    }
    Ok(acc)
}

/// Mass matrix pattern helper for tests and diagnostics.
pub fn mass_interior(mesh: &Mesh2D, dofs: &DofMap) -> CsrMatrix {
    let full = assemble_mass(mesh);
    let m = dofs.n_dofs();
    let mut triplets = Vec::new();
    for v in 0..mesh.n_vertices() {
        let Some(i) = dofs.dof_of_vertex(v) else {
            continue;
        };
        let (cols, vals) = full.row(v);
        for (&c, &val) in cols.iter().zip(vals) {
            if let Some(j) = dofs.dof_of_vertex(c) {
                triplets.push((i, j, val));
            }
        }
    }
    CsrMatrix::from_triplets(m, m, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FnField;
    use crate::fidelity::{
        assemble_surface_terms, CurveInput, FidelityMethod, GammaData,
    };
    use crate::geometry::{make_builtin_curve, polygonal_interpolation, BuiltinCurve};
    use crate::mesh::build_structured_mesh;
    use rand::{Rng, SeedableRng};

    fn segment_problem(
        mesh: &Arc<Mesh2D>,
        g: GammaData,
        method: FidelityMethod,
        nu: f64,
        lower: f64,
        upper: f64,
    ) -> ControlProblem {
        let curve = make_builtin_curve(BuiltinCurve::Segment).unwrap();
        let fid = match method {
            FidelityMethod::One => assemble_surface_terms(
                mesh,
                CurveInput::Smooth(&curve),
                &g,
                FidelityMethod::One,
                8,
                None,
            )
            .unwrap(),
            FidelityMethod::Two => {
                let poly = polygonal_interpolation(&curve, mesh.h_max()).unwrap();
                assemble_surface_terms(
                    mesh,
                    CurveInput::Polygon(&poly),
                    &g,
                    FidelityMethod::Two,
                    8,
                    None,
                )
                .unwrap()
            }
        };
        ControlProblem::new(
            EllipticCoefficients::laplace(),
            FidelityOperator::from_surface(&fid),
            nu,
            lower,
            upper,
        )
        .unwrap()
    }

    #[test]
    fn projection_basics() {
        assert_eq!(project_box(-3.0, -5.0, 5.0), -3.0);
        assert_eq!(project_box(7.0, -5.0, 5.0), 5.0);
        assert_eq!(project_box(-7.0, -5.0, 5.0), -5.0);
        let v = 123.456;
        assert_eq!(project_box(v, f64::NEG_INFINITY, f64::INFINITY), v);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(validate_bounds(1.0, 1.0).is_err());
        assert!(validate_bounds(2.0, 1.0).is_err());
        assert!(validate_bounds(-1.0, 1.0).is_ok());
        assert!(validate_bounds(f64::NEG_INFINITY, f64::INFINITY).is_ok());
    }

    #[test]
    fn unconstrained_rhs_is_mass_product() {
        // without active bounds u = -p/nu lies in the FE space, so the
        // order-4 rule integrates (u, phi) exactly: rhs = -(1/nu) M p
        let mesh = Arc::new(build_structured_mesh(6).unwrap());
        let dofs = DofMap::new(&mesh);
        let nu = 0.37;
        let p = FeFunction::from_interior(
            mesh.clone(),
            &dofs,
            &(0..dofs.n_dofs())
                .map(|i| ((i * 29 % 17) as f64 - 8.0) / 8.0)
                .collect::<Vec<_>>(),
        );
        let rhs = projected_control_rhs(
            &mesh,
            &dofs,
            &p,
            nu,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let want = mass_interior(&mesh, &dofs)
            .matvec(&dofs.restrict(p.coeffs()))
            .iter()
            .map(|v| -v / nu)
            .collect::<Vec<_>>();
        for (a, b) in rhs.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn residual_at_zero_iterate_is_data_vector() {
        let mesh = Arc::new(build_structured_mesh(8).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::Sin3PiX1,
            FidelityMethod::Two,
            1e-2,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let op = assemble_operator(&mesh, &problem.coeffs).unwrap();
        let zero = FeFunction::zero(mesh.clone());
        let (r1, r2) = residual(&problem, &op, &zero, &zero);
        assert!(r1.iter().all(|&v| v.abs() < 1e-15));
        let g_int = op.dofs().restrict(&problem.fidelity.g);
        for (a, b) in r2.iter().zip(&g_int) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn unconstrained_problem_converges_in_one_step() {
        let mesh = Arc::new(build_structured_mesh(8).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::Sin3PiX1,
            FidelityMethod::Two,
            1e-2,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let result = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
        assert_eq!(result.iterations, 1);
        assert!(result.active_lower.is_empty() && result.active_upper.is_empty());
        // converged residual blocks are tiny in the Euclidean norm too
        let op = assemble_operator(&mesh, &problem.coeffs).unwrap();
        let (r1, r2) = residual(&problem, &op, &result.y, &result.p);
        let n1: f64 = r1.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n2: f64 = r2.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n1 <= 1e-8 && n2 <= 1e-8, "residuals {n1:e}, {n2:e}");
    }

    #[test]
    fn constrained_problem_activates_bounds_and_contracts() {
        // data with a sign flip and tight bounds: both bounds activate
        let mesh = Arc::new(build_structured_mesh(16).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::JumpMidflip,
            FidelityMethod::One,
            1e-2,
            -5.0,
            5.0,
        );
        let result = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
        assert!(
            !result.active_lower.is_empty() && !result.active_upper.is_empty(),
            "expected active bounds, got {} lower / {} upper",
            result.active_lower.len(),
            result.active_upper.len()
        );
        assert!(result.iterations <= 30);
        // monotone decrease after the first iteration, superlinear tail
        let h = &result.residual_history;
        for k in 1..h.len() - 1 {
            assert!(h[k + 1] < h[k], "history not decreasing: {h:?}");
        }
        let last = h[h.len() - 1] / h[h.len() - 2];
        assert!(last <= 0.2, "final contraction {last}");
        // the control stays inside the box by construction
        let u = result.control();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let v = u.eval_at(x).unwrap();
            assert!((-5.0..=5.0).contains(&v));
        }
    }

    #[test]
    fn huge_cost_suppresses_the_control() {
        let mesh = Arc::new(build_structured_mesh(8).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::Const(1.0),
            FidelityMethod::Two,
            1e6,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let result = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
        let norm = crate::fem::l2_norm(&mesh, &result.control());
        assert!(norm <= 1e-3, "control norm {norm:e}");
    }

    #[test]
    fn objective_of_zero_control_is_half_data_constant() {
        let mesh = Arc::new(build_structured_mesh(8).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::Sin3PiX1,
            FidelityMethod::Two,
            1e-2,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let j = objective(&problem, &mesh, &FnField(|_, _| 0.0)).unwrap();
        assert!((j - 0.5 * problem.fidelity.g_const).abs() < 1e-14);
    }

    struct Combination<'a, A, B> {
        a: &'a A,
        b: &'a B,
        ca: f64,
        cb: f64,
    }

    impl<A: MeshFunction, B: MeshFunction> MeshFunction for Combination<'_, A, B> {
        fn eval(&self, mesh: &Mesh2D, tri: usize, bary: [f64; 3], xy: [f64; 2]) -> f64 {
            self.ca * self.a.eval(mesh, tri, bary, xy) + self.cb * self.b.eval(mesh, tri, bary, xy)
        }
    }

    #[test]
    fn finite_differences_match_gradient() {
        let mesh = Arc::new(build_structured_mesh(16).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::Sin3PiX1,
            FidelityMethod::Two,
            1e-2,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let base = FnField(|x: f64, y: f64| (2.0 * x - y).sin());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let eps = 1e-5;
        for _ in 0..5 {
            let (c1, c2, c3): (f64, f64, f64) = (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let dir = FnField(move |x: f64, y: f64| {
                c1 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
                    + c2 * x * (1.0 - x) * y
                    + c3 * (3.0 * x * y).cos()
            });
            let grad = gradient_residual(&problem, &mesh, &base, &dir).unwrap();
            let plus = objective(
                &problem,
                &mesh,
                &Combination { a: &base, b: &dir, ca: 1.0, cb: eps },
            )
            .unwrap();
            let minus = objective(
                &problem,
                &mesh,
                &Combination { a: &base, b: &dir, ca: 1.0, cb: -eps },
            )
            .unwrap();
            let fd = (plus - minus) / (2.0 * eps);
            assert!(
                (fd - grad).abs() <= 1e-6 * grad.abs().max(1.0),
                "fd {fd} vs gradient {grad}"
            );
        }
    }

    #[test]
    fn first_order_condition_at_the_unconstrained_optimum() {
        let mesh = Arc::new(build_structured_mesh(12).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::Sin3PiX1,
            FidelityMethod::Two,
            1e-2,
            f64::NEG_INFINITY,
            f64::INFINITY,
        );
        let result = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
        let u = result.control();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (c1, c2): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let dir = FnField(move |x: f64, y: f64| c1 * (x * y).sin() + c2 * (x - y));
            let dnorm = crate::fem::l2_norm(&mesh, &dir);
            let grad = gradient_residual(&problem, &mesh, &u, &dir).unwrap();
            assert!(grad.abs() <= 1e-8 * dnorm.max(1.0), "gradient {grad:e}");
        }
    }

    #[test]
    fn variational_inequality_at_the_constrained_optimum() {
        let mesh = Arc::new(build_structured_mesh(12).unwrap());
        let (lower, upper) = (-5.0, 5.0);
        let problem = segment_problem(
            &mesh,
            GammaData::JumpMidflip,
            FidelityMethod::One,
            1e-2,
            lower,
            upper,
        );
        let result = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
        let u = result.control();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let (c1, c2): (f64, f64) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let feasible = move |x: f64, y: f64| {
                project_box(c1 * (3.0 * x).sin() + c2 * y, lower, upper)
            };
            let v = FnField(feasible);
            let dir = Combination { a: &v, b: &u, ca: 1.0, cb: -1.0 };
            let grad = gradient_residual(&problem, &mesh, &u, &dir).unwrap();
            assert!(grad >= -1e-8, "variational inequality violated: {grad:e}");
        }
    }

    #[test]
    fn iteration_counts_are_mesh_independent() {
        let mut counts = vec![];
        for n in [8usize, 16, 32] {
            let mesh = Arc::new(build_structured_mesh(n).unwrap());
            let problem = segment_problem(
                &mesh,
                GammaData::JumpMidflip,
                FidelityMethod::One,
                1e-2,
                -5.0,
                5.0,
            );
            let result = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
            counts.push(result.iterations);
        }
        let max = *counts.iter().max().unwrap();
        let min = *counts.iter().min().unwrap();
        assert!(max - min <= 3, "iteration counts {counts:?}");
    }

    #[test]
    fn krylov_mode_matches_direct_solve() {
        let mesh = Arc::new(build_structured_mesh(8).unwrap());
        let problem = segment_problem(
            &mesh,
            GammaData::JumpMidflip,
            FidelityMethod::One,
            1e-2,
            -5.0,
            5.0,
        );
        let direct = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
        let krylov = semismooth_newton(
            &problem,
            &mesh,
            NewtonOptions {
                linear: LinearSolverKind::Krylov { tol: 1e-12 },
                ..NewtonOptions::default()
            },
        )
        .unwrap();
        for (a, b) in direct.p.coeffs().iter().zip(krylov.p.coeffs()) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn antisymmetric_data_gives_antisymmetric_solution_on_symmetric_mesh() {
        use crate::mesh::{crisscross_ele, crisscross_node};
        let n = 8;
        let mesh = Arc::new(
            crate::mesh::import_triangle_mesh(&crisscross_node(n), &crisscross_ele(n)).unwrap(),
        );
        let problem = segment_problem(
            &mesh,
            GammaData::JumpMidflip,
            FidelityMethod::One,
            1e-2,
            -5.0,
            5.0,
        );
        let result = semismooth_newton(&problem, &mesh, NewtonOptions::default()).unwrap();
        // mirror map: x1 -> 1 - x1
        for (v, &pos) in mesh.vertices().iter().enumerate() {
            let mirrored = [1.0 - pos[0], pos[1]];
            let w = mesh
                .vertices()
                .iter()
                .position(|q| {
                    (q[0] - mirrored[0]).abs() < 1e-12 && (q[1] - mirrored[1]).abs() < 1e-12
                })
                .unwrap();
            let d = (result.p.coeffs()[v] + result.p.coeffs()[w]).abs();
            assert!(d < 1e-8, "antisymmetry violated by {d:e} at vertex {v}");
        }
    }
}
