//! P1 finite elements on triangulations of the unit square: operator and
//! mass assembly, state solves against interior degrees of freedom, norms
//! and convergence orders.

mod norms;

pub use norms::{eoc, l2_error, l2_norm, FnField, MeshFunction, ProjectedControl};

use crate::linalg::{cg, CholeskySolver, CsrMatrix};
use crate::mesh::Mesh2D;
use crate::quad::{TriPoint, TRI_ORDER2, TRI_ORDER4};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use std::sync::Arc;

type CoeffFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Coefficients of the elliptic operator
/// `A z = -div(a grad z) + a0 z` with `a = [[a11, a12], [a12, a22]]`.
#[derive(Clone)]
pub struct EllipticCoefficients {
    a11: CoeffFn,
    a12: CoeffFn,
    a22: CoeffFn,
    a0: CoeffFn,
    /// set when all four coefficients are constants; enables exact assembly
    constants: Option<[f64; 4]>,
}

impl EllipticCoefficients {
    /// The Laplacian: `a11 = a22 = 1`, `a12 = 0`, `a0 = 0`.
    pub fn laplace() -> Self {
        Self::constants(1.0, 0.0, 1.0, 0.0)
    }

    pub fn constants(a11: f64, a12: f64, a22: f64, a0: f64) -> Self {
        EllipticCoefficients {
            a11: Arc::new(move |_, _| a11),
            a12: Arc::new(move |_, _| a12),
            a22: Arc::new(move |_, _| a22),
            a0: Arc::new(move |_, _| a0),
            constants: Some([a11, a12, a22, a0]),
        }
    }

    pub fn variable(a11: CoeffFn, a12: CoeffFn, a22: CoeffFn, a0: CoeffFn) -> Self {
        EllipticCoefficients {
            a11,
            a12,
            a22,
            a0,
            constants: None,
        }
    }

    pub fn is_laplace(&self) -> bool {
        self.constants == Some([1.0, 0.0, 1.0, 0.0])
    }

    /// Sampled ellipticity check: the coefficient matrix must have positive
    /// eigenvalues and `a0 >= 0` at 1000 points drawn from a fixed seed.
    pub fn validate(&self) -> Result<()> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0e11_1bc0);
        for _ in 0..1000 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let a11 = (self.a11)(x, y);
            let a12 = (self.a12)(x, y);
            let a22 = (self.a22)(x, y);
            let a0 = (self.a0)(x, y);
            if a0 < 0.0 {
                return Err(Error::Validation(format!(
                    "a0({x}, {y}) = {a0} is negative"
                )));
            }
            // smaller eigenvalue of the symmetric 2x2 block
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a12;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let lambda_min = tr / 2.0 - disc;
            if lambda_min <= 1e-12 {
                return Err(Error::Validation(format!(
                    "coefficient matrix at ({x}, {y}) has eigenvalue {lambda_min:e}"
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for EllipticCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.constants {
            Some(c) => write!(f, "EllipticCoefficients::constants({c:?})"),
            None => write!(f, "EllipticCoefficients::variable(..)"),
        }
    }
}

/// Map between mesh vertices and interior degrees of freedom.
#[derive(Debug, Clone)]
pub struct DofMap {
    index_of_vertex: Vec<Option<usize>>,
    vertex_of_index: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh2D) -> Self {
        let mut index_of_vertex = vec![None; mesh.n_vertices()];
        let vertex_of_index = mesh.interior_vertices().to_vec();
        for (dof, &v) in vertex_of_index.iter().enumerate() {
            index_of_vertex[v] = Some(dof);
        }
        DofMap {
            index_of_vertex,
            vertex_of_index,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.vertex_of_index.len()
    }

    pub fn dof_of_vertex(&self, v: usize) -> Option<usize> {
        self.index_of_vertex[v]
    }

    pub fn vertex_of_dof(&self, dof: usize) -> usize {
        self.vertex_of_index[dof]
    }

    /// Gather the interior entries of a full vertex vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.vertex_of_index.iter().map(|&v| full[v]).collect()
    }

    /// Scatter interior values into a full vertex vector (boundary zero).
    pub fn prolong(&self, interior: &[f64], n_vertices: usize) -> Vec<f64> {
        let mut full = vec![0.0; n_vertices];
        for (dof, &v) in self.vertex_of_index.iter().enumerate() {
            full[v] = interior[dof];
        }
        full
    }
}

/// A piecewise linear function on a mesh, vanishing on the boundary:
/// one coefficient per vertex with boundary entries pinned to zero.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<Mesh2D>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zero(mesh: Arc<Mesh2D>) -> Self {
        let n = mesh.n_vertices();
        FeFunction {
            mesh,
            coeffs: vec![0.0; n],
        }
    }

    /// From a full coefficient vector; boundary entries must be exactly 0.
    pub fn from_full(mesh: Arc<Mesh2D>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.n_vertices() {
            return Err(Error::InvalidArgument(
                "coefficient count does not match vertex count".into(),
            ));
        }
        for (v, &c) in coeffs.iter().enumerate() {
            if mesh.is_boundary(v) && c != 0.0 {
                return Err(Error::Validation(format!(
                    "boundary vertex {v} has nonzero coefficient {c}"
                )));
            }
        }
        Ok(FeFunction { mesh, coeffs })
    }

    /// From interior values in dof order; boundary entries are zero.
    pub fn from_interior(mesh: Arc<Mesh2D>, dofs: &DofMap, interior: &[f64]) -> Self {
        let coeffs = dofs.prolong(interior, mesh.n_vertices());
        FeFunction { mesh, coeffs }
    }

    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval_in_tri(&self, tri: usize, bary: [f64; 3]) -> f64 {
        let t = self.mesh.triangles()[tri];
        bary[0] * self.coeffs[t[0]] + bary[1] * self.coeffs[t[1]] + bary[2] * self.coeffs[t[2]]
    }

    /// Evaluate at a point via location; `None` outside the mesh.
    pub fn eval_at(&self, x: [f64; 2]) -> Option<f64> {
        let (tri, bary) = self.mesh.locate_point(x)?;
        Some(self.eval_in_tri(tri, bary))
    }
}

/// The operator of the bilinear form restricted to interior vertices.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    matrix: CsrMatrix,
    dofs: DofMap,
}

impl SparseOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Positive definiteness probe: attempt a Cholesky factorization.
    pub fn check_positive_definite(&self) -> Result<()> {
        CholeskySolver::new(&self.matrix).map(|_| ())
    }
}

/// P1 basis gradients (constant per triangle) and the element area.
pub(crate) fn p1_gradients(p: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    let area = 0.5 * det;
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        // rotate (b - a) by +90 degrees, divide by twice the area
        grads[i] = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det];
    }
    (grads, area)
}

const LOCAL_MASS: [[f64; 3]; 3] = [
    [2.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0],
    [1.0 / 12.0, 2.0 / 12.0, 1.0 / 12.0],
    [1.0 / 12.0, 1.0 / 12.0, 2.0 / 12.0],
];

fn local_operator(coeffs: &EllipticCoefficients, p: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let (grads, area) = p1_gradients(p);
    let mut local = [[0.0; 3]; 3];
    match coeffs.constants {
        Some([a11, a12, a22, a0]) => {
            for i in 0..3 {
                for j in 0..3 {
                    let gi = grads[i];
                    let gj = grads[j];
                    let flux = a11 * gi[0] * gj[0]
                        + a12 * (gi[0] * gj[1] + gi[1] * gj[0])
                        + a22 * gi[1] * gj[1];
                    local[i][j] = area * flux + a0 * area * LOCAL_MASS[i][j];
                }
            }
        }
        None => {
            for &(bary, w) in TRI_ORDER2.iter() {
                let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
                let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
                let a11 = (coeffs.a11)(x, y);
                let a12 = (coeffs.a12)(x, y);
                let a22 = (coeffs.a22)(x, y);
                let a0 = (coeffs.a0)(x, y);
                for i in 0..3 {
                    for j in 0..3 {
                        let gi = grads[i];
                        let gj = grads[j];
                        let flux = a11 * gi[0] * gj[0]
                            + a12 * (gi[0] * gj[1] + gi[1] * gj[0])
                            + a22 * gi[1] * gj[1];
                        local[i][j] += w * area * (flux + a0 * bary[i] * bary[j]);
                    }
                }
            }
        }
    }
    local
}

/// Assemble the bilinear form over interior vertices.
pub fn assemble_operator(mesh: &Mesh2D, coeffs: &EllipticCoefficients) -> Result<SparseOperator> {
    coeffs.validate()?;
    let dofs = DofMap::new(mesh);
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for k in 0..mesh.n_triangles() {
        let p = mesh.tri_vertices(k);
        let local = local_operator(coeffs, &p);
        let t = mesh.triangles()[k];
        for i in 0..3 {
            let Some(di) = dofs.dof_of_vertex(t[i]) else {
                continue;
            };
            for j in 0..3 {
                if let Some(dj) = dofs.dof_of_vertex(t[j]) {
                    triplets.push((di, dj, local[i][j]));
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(dofs.n_dofs(), dofs.n_dofs(), &triplets);
    Ok(SparseOperator { matrix, dofs })
}

/// Assemble the bilinear form over all vertices (no boundary conditions).
pub fn assemble_operator_full(mesh: &Mesh2D, coeffs: &EllipticCoefficients) -> Result<CsrMatrix> {
    coeffs.validate()?;
    let n = mesh.n_vertices();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for k in 0..mesh.n_triangles() {
        let p = mesh.tri_vertices(k);
        let local = local_operator(coeffs, &p);
        let t = mesh.triangles()[k];
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((t[i], t[j], local[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// L2 mass matrix over all vertices (exact local blocks `area/12 * [[2,1,1],..]`).
pub fn assemble_mass(mesh: &Mesh2D) -> CsrMatrix {
    let n = mesh.n_vertices();
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for k in 0..mesh.n_triangles() {
        let area = mesh.tri_area(k);
        let t = mesh.triangles()[k];
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((t[i], t[j], area * LOCAL_MASS[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Weighted mass matrix over interior dofs with the weight evaluated at
/// quadrature points: entries `sum_q w_q weight(x_q) phi_i phi_j`.
pub fn assemble_weighted_mass_interior(
    mesh: &Mesh2D,
    dofs: &DofMap,
    rule: &[TriPoint],
    mut weight: impl FnMut(usize, [f64; 3], [f64; 2]) -> f64,
) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for k in 0..mesh.n_triangles() {
        let p = mesh.tri_vertices(k);
        let area = mesh.tri_area(k);
        let t = mesh.triangles()[k];
        let mut local = [[0.0; 3]; 3];
        for &(bary, w) in rule {
            let xy = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            let c = weight(k, bary, xy);
            if c == 0.0 {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * area * c * bary[i] * bary[j];
                }
            }
        }
        for i in 0..3 {
            let Some(di) = dofs.dof_of_vertex(t[i]) else {
                continue;
            };
            for j in 0..3 {
                if let Some(dj) = dofs.dof_of_vertex(t[j]) {
                    // keep structural zeros so the pattern matches the mass matrix
                    triplets.push((di, dj, local[i][j]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(dofs.n_dofs(), dofs.n_dofs(), &triplets)
}

/// Right-hand side `(f, phi_z)` over interior dofs with the given rule.
pub fn assemble_rhs(
    mesh: &Mesh2D,
    dofs: &DofMap,
    rule: &[TriPoint],
    f: &impl MeshFunction,
) -> Vec<f64> {
    let mut rhs = vec![0.0; dofs.n_dofs()];
    for k in 0..mesh.n_triangles() {
        let p = mesh.tri_vertices(k);
        let area = mesh.tri_area(k);
        let t = mesh.triangles()[k];
        for &(bary, w) in rule {
            let xy = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            let val = f.eval(mesh, k, bary, xy);
            for i in 0..3 {
                if let Some(di) = dofs.dof_of_vertex(t[i]) {
                    rhs[di] += w * area * val * bary[i];
                }
            }
        }
    }
    rhs
}

/// A weighted point load.
#[derive(Debug, Clone, Copy)]
pub struct PointSource {
    pub position: [f64; 2],
    pub weight: f64,
}

/// Source term of a state solve.
pub enum SourceTerm {
    /// Evaluable function, integrated with the order-4 rule.
    Evaluable(CoeffFn),
    /// Finite element function; the load is the exact mass-matrix product.
    Fe(FeFunction),
    /// Point loads `sum_i w_i phi_z(x_i)` (used by point-control adjoints).
    Points(Vec<PointSource>),
}

/// How linear systems are solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolverKind {
    /// Sparse direct factorization (default).
    Direct,
    /// Preconditioned Krylov iteration with the given relative tolerance.
    Krylov { tol: f64 },
}

impl Default for LinearSolverKind {
    fn default() -> Self {
        LinearSolverKind::Direct
    }
}

/// Discrete solution operator for a fixed mesh and coefficients: assembles
/// once, factorizes once, then solves for many sources.
pub struct StateSolver {
    mesh: Arc<Mesh2D>,
    op: SparseOperator,
    factor: Option<CholeskySolver>,
    kind: LinearSolverKind,
}

impl StateSolver {
    pub fn new(mesh: Arc<Mesh2D>, coeffs: &EllipticCoefficients) -> Result<Self> {
        Self::with_solver(mesh, coeffs, LinearSolverKind::Direct)
    }

    pub fn with_solver(
        mesh: Arc<Mesh2D>,
        coeffs: &EllipticCoefficients,
        kind: LinearSolverKind,
    ) -> Result<Self> {
        let op = assemble_operator(&mesh, coeffs)?;
        let factor = match kind {
            LinearSolverKind::Direct => Some(CholeskySolver::new(&op.matrix)?),
            LinearSolverKind::Krylov { .. } => None,
        };
        Ok(StateSolver {
            mesh,
            op,
            factor,
            kind,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn dofs(&self) -> &DofMap {
        self.op.dofs()
    }

    /// Solve for the interior coefficient vector given an interior load.
    pub fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match (&self.factor, self.kind) {
            (Some(factor), _) => Ok(factor.solve(rhs)),
            (None, LinearSolverKind::Krylov { tol }) => {
                let (x, _its) = cg(&self.op.matrix, rhs, tol, 20 * rhs.len().max(100), true)?;
                Ok(x)
            }
            (None, LinearSolverKind::Direct) => unreachable!(),
        }
    }

    pub fn solve(&self, source: &SourceTerm) -> Result<FeFunction> {
        let dofs = self.op.dofs();
        let rhs = match source {
            SourceTerm::Evaluable(f) => {
                let field = FnField(|x: f64, y: f64| f(x, y));
                assemble_rhs(&self.mesh, dofs, &TRI_ORDER4, &field)
            }
            SourceTerm::Fe(g) => {
                if !std::ptr::eq(g.mesh().as_ref(), self.mesh.as_ref()) {
                    return Err(Error::InvalidArgument(
                        "source lives on a different mesh".into(),
                    ));
                }
                let mass = assemble_mass(&self.mesh);
                dofs.restrict(&mass.matvec(g.coeffs()))
            }
            SourceTerm::Points(points) => {
                let mut rhs = vec![0.0; dofs.n_dofs()];
                for ps in points {
                    let (tri, bary) = self.mesh.locate_point(ps.position).ok_or_else(|| {
                        Error::Locate(format!(
                            "point source at ({}, {}) is outside the mesh",
                            ps.position[0], ps.position[1]
                        ))
                    })?;
                    let t = self.mesh.triangles()[tri];
                    for i in 0..3 {
                        if let Some(di) = dofs.dof_of_vertex(t[i]) {
                            rhs[di] += ps.weight * bary[i];
                        }
                    }
                }
                rhs
            }
        };
        let interior = self.solve_interior(&rhs)?;
        Ok(FeFunction::from_interior(
            self.mesh.clone(),
            dofs,
            &interior,
        ))
    }
}

/// One-shot convenience wrapper: assemble, factorize, solve.
pub fn solve_state(
    mesh: &Arc<Mesh2D>,
    coeffs: &EllipticCoefficients,
    source: &SourceTerm,
) -> Result<FeFunction> {
    StateSolver::new(mesh.clone(), coeffs)?.solve(source)
}
