//! Conforming triangulations of the unit square: construction, validation,
//! import/export in Triangle's text format, and point location.

mod io;
mod locate;

pub use io::{export_triangle_mesh, import_triangle_mesh};

use crate::{Error, Result};

/// Vertices on the boundary are classified with this tolerance (coordinate
/// equal to 0 or 1).
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Barycentric containment tolerance for point location.
pub const BARY_TOL: f64 = 1e-10;

/// A conforming triangulation of the unit square.
///
/// Immutable after construction; all queries are pure reads, so shared
/// references may be used concurrently.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    /// neighbor across the edge opposite local vertex k, `None` on the boundary
    adjacency: Vec<[Option<usize>; 3]>,
    interior: Vec<usize>,
    h_max: f64,
}

impl Mesh2D {
    /// Assemble and validate a mesh from raw arrays. With `fix_orientation`,
    /// clockwise triangles are reordered; degenerate ones are rejected either
    /// way. `boundary_flags`, when given, must agree with the geometric
    /// classification against the unit square.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        boundary_flags: Option<Vec<bool>>,
        fix_orientation: bool,
    ) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::Validation("empty mesh".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v[0].is_finite() && v[1].is_finite()) {
                return Err(Error::Validation(format!("vertex {i} is not finite")));
            }
            if v[0] < -BOUNDARY_TOL
                || v[0] > 1.0 + BOUNDARY_TOL
                || v[1] < -BOUNDARY_TOL
                || v[1] > 1.0 + BOUNDARY_TOL
            {
                return Err(Error::Validation(format!(
                    "vertex {i} at ({}, {}) lies outside the unit square",
                    v[0], v[1]
                )));
            }
        }
        for (k, t) in triangles.iter_mut().enumerate() {
            for &v in t.iter() {
                if v >= vertices.len() {
                    return Err(Error::Validation(format!(
                        "triangle {k} references missing vertex {v}"
                    )));
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::Validation(format!("triangle {k} repeats a vertex")));
            }
            let area = signed_area(&vertices, *t);
            if area < 0.0 && fix_orientation {
                t.swap(1, 2);
            }
            let area = signed_area(&vertices, *t);
            if area <= 0.0 {
                return Err(Error::Validation(format!(
                    "triangle {k} has non-positive area {area:e}"
                )));
            }
        }

        let geometric: Vec<bool> = vertices.iter().map(|v| on_square_boundary(*v)).collect();
        let boundary = match boundary_flags {
            Some(flags) => {
                if flags.len() != vertices.len() {
                    return Err(Error::Validation(
                        "boundary flag count does not match vertex count".into(),
                    ));
                }
                for (i, (&f, &g)) in flags.iter().zip(&geometric).enumerate() {
                    if f != g {
                        return Err(Error::Validation(format!(
                            "boundary marker of vertex {i} disagrees with its position"
                        )));
                    }
                }
                flags
            }
            None => geometric,
        };

        let adjacency = build_adjacency(&vertices, &triangles)?;

        let mut h_max = 0.0f64;
        for t in &triangles {
            h_max = h_max.max(longest_edge(&vertices, *t));
        }
        let interior: Vec<usize> = (0..vertices.len()).filter(|&v| !boundary[v]).collect();

        Ok(Mesh2D {
            vertices,
            triangles,
            boundary,
            adjacency,
            interior,
            h_max,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Interior vertex indices in ascending order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn adjacency(&self) -> &[[Option<usize>; 3]] {
        &self.adjacency
    }

    pub fn tri_vertices(&self, k: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn tri_area(&self, k: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[k])
    }

    /// Barycentric coordinates of `x` with respect to triangle `k`.
    pub fn barycentric(&self, k: usize, x: [f64; 2]) -> [f64; 3] {
        let [p0, p1, p2] = self.tri_vertices(k);
        let det = cross(sub(p1, p0), sub(p2, p0));
        let l1 = cross(sub(x, p0), sub(p2, p0)) / det;
        let l2 = cross(sub(p1, p0), sub(x, p0)) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Map barycentric coordinates in triangle `k` back to a point.
    pub fn point_from_bary(&self, k: usize, b: [f64; 3]) -> [f64; 2] {
        let [p0, p1, p2] = self.tri_vertices(k);
        [
            b[0] * p0[0] + b[1] * p1[0] + b[2] * p2[0],
            b[0] * p0[1] + b[1] * p1[1] + b[2] * p2[1],
        ]
    }
}

/// Shape and size statistics of a triangulation.
#[derive(Debug, Clone, Copy)]
pub struct MeshQuality {
    pub h_max: f64,
    pub h_min: f64,
    /// max over elements of (longest edge) / (diameter of the inscribed ball)
    pub shape_ratio: f64,
    pub uniformity_ratio: f64,
}

/// Quality measures computed from geometry; the inscribed-ball diameter of a
/// triangle is 4*area/perimeter.
pub fn mesh_quality(mesh: &Mesh2D) -> MeshQuality {
    let mut h_max = 0.0f64;
    let mut h_min = f64::INFINITY;
    let mut shape = 0.0f64;
    for k in 0..mesh.n_triangles() {
        let t = mesh.triangles[k];
        let h_t = longest_edge(&mesh.vertices, t);
        let area = signed_area(&mesh.vertices, t);
        let [p0, p1, p2] = mesh.tri_vertices(k);
        let perimeter = dist(p0, p1) + dist(p1, p2) + dist(p2, p0);
        let rho = 4.0 * area / perimeter;
        h_max = h_max.max(h_t);
        h_min = h_min.min(h_t);
        shape = shape.max(h_t / rho);
    }
    MeshQuality {
        h_max,
        h_min,
        shape_ratio: shape,
        uniformity_ratio: h_max / h_min,
    }
}

/// Uniform triangulation of the unit square with `n` subdivisions per side.
/// Each cell is split along its bottom-left-to-top-right diagonal, so for
/// even `n` the line x2 = 0.5 is made of mesh edges.
pub fn build_structured_mesh(n: usize) -> Result<Mesh2D> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "subdivision count must be at least 1".into(),
        ));
    }
    let nf = n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / nf, j as f64 / nf]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let bl = idx(i, j);
            let br = idx(i + 1, j);
            let tl = idx(i, j + 1);
            let tr = idx(i + 1, j + 1);
            triangles.push([bl, br, tr]);
            triangles.push([bl, tr, tl]);
        }
    }
    Mesh2D::from_parts(vertices, triangles, None, false)
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

fn signed_area(vertices: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let p0 = vertices[t[0]];
    let p1 = vertices[t[1]];
    let p2 = vertices[t[2]];
    0.5 * cross(sub(p1, p0), sub(p2, p0))
}

fn longest_edge(vertices: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let p0 = vertices[t[0]];
    let p1 = vertices[t[1]];
    let p2 = vertices[t[2]];
    dist(p0, p1).max(dist(p1, p2)).max(dist(p2, p0))
}

fn on_square_boundary(v: [f64; 2]) -> bool {
    v[0].abs() <= BOUNDARY_TOL
        || (v[0] - 1.0).abs() <= BOUNDARY_TOL
        || v[1].abs() <= BOUNDARY_TOL
        || (v[1] - 1.0).abs() <= BOUNDARY_TOL
}

/// Adjacency from shared edges, rejecting nonconforming meshes. An edge may
/// belong to at most two triangles; a hanging node shows up as a vertex that
/// is edge-connected to an endpoint of an unshared edge while lying strictly
/// inside that edge.
fn build_adjacency(
    vertices: &[[f64; 2]],
    triangles: &[[usize; 3]],
) -> Result<Vec<[Option<usize>; 3]>> {
    use std::collections::HashMap;

    // duplicate coordinates would make cracks undetectable
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| {
        vertices[a]
            .partial_cmp(&vertices[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in order.windows(2) {
        if dist(vertices[w[0]], vertices[w[1]]) < 1e-14 {
            return Err(Error::Validation(format!(
                "vertices {} and {} coincide",
                w[0], w[1]
            )));
        }
    }

    let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (k, t) in triangles.iter().enumerate() {
        for opp in 0..3 {
            let a = t[(opp + 1) % 3];
            let b = t[(opp + 2) % 3];
            let key = (a.min(b), a.max(b));
            edges.entry(key).or_default().push((k, opp));
        }
    }
    let mut neighbors_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in edges.keys() {
        neighbors_of.entry(a).or_default().push(b);
        neighbors_of.entry(b).or_default().push(a);
    }
    let mut adjacency = vec![[None; 3]; triangles.len()];
    for (&(a, b), incident) in &edges {
        match incident.len() {
            1 => {
                // an edge seen once is allowed only when no mesh vertex sits
                // strictly inside it
                let candidates = neighbors_of[&a].iter().chain(neighbors_of[&b].iter());
                for &m in candidates {
                    if m == a || m == b {
                        continue;
                    }
                    if strictly_inside_segment(vertices[a], vertices[b], vertices[m]) {
                        return Err(Error::Validation(format!(
                            "hanging node: vertex {m} lies inside edge ({a}, {b})"
                        )));
                    }
                }
            }
            2 => {
                let (k0, o0) = incident[0];
                let (k1, o1) = incident[1];
                adjacency[k0][o0] = Some(k1);
                adjacency[k1][o1] = Some(k0);
            }
            m => {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) is shared by {m} triangles"
                )));
            }
        }
    }
    Ok(adjacency)
}

fn strictly_inside_segment(a: [f64; 2], b: [f64; 2], m: [f64; 2]) -> bool {
    let ab = sub(b, a);
    let am = sub(m, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = (am[0] * ab[0] + am[1] * ab[1]) / len2;
    if !(1e-9..=1.0 - 1e-9).contains(&t) {
        return false;
    }
    let perp = cross(ab, am).abs() / len2.sqrt();
    perp <= 1e-12
}

/// Crisscross mesh (four triangles per cell around a center vertex) in
/// Triangle text format. Unlike the diagonal-split family this one is
/// symmetric under both coordinate reflections; tests use it to check
/// symmetry inheritance.
#[cfg(test)]
pub(crate) fn crisscross_node(n: usize) -> String {
    use std::fmt::Write;
    let total = (n + 1) * (n + 1) + n * n;
    let mut s = format!("{total} 2 0 0\n");
    let mut idx = 0;
    for j in 0..=n {
        for i in 0..=n {
            writeln!(s, "{idx} {} {}", i as f64 / n as f64, j as f64 / n as f64).unwrap();
            idx += 1;
        }
    }
    for j in 0..n {
        for i in 0..n {
            writeln!(
                s,
                "{idx} {} {}",
                (i as f64 + 0.5) / n as f64,
                (j as f64 + 0.5) / n as f64
            )
            .unwrap();
            idx += 1;
        }
    }
    s
}

#[cfg(test)]
pub(crate) fn crisscross_ele(n: usize) -> String {
    use std::fmt::Write;
    let mut s = format!("{} 3 0\n", 4 * n * n);
    let lattice = |i: usize, j: usize| j * (n + 1) + i;
    let center = |i: usize, j: usize| (n + 1) * (n + 1) + j * n + i;
    let mut idx = 0;
    for j in 0..n {
        for i in 0..n {
            let (bl, br) = (lattice(i, j), lattice(i + 1, j));
            let (tl, tr) = (lattice(i, j + 1), lattice(i + 1, j + 1));
            let c = center(i, j);
            for t in [[bl, br, c], [br, tr, c], [tr, tl, c], [tl, bl, c]] {
                writeln!(s, "{idx} {} {} {}", t[0], t[1], t[2]).unwrap();
                idx += 1;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_counts_and_h() {
        let m = build_structured_mesh(2).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_triangles(), 8);
        assert_eq!(m.interior_vertices().len(), 1);
        assert!((m.h_max() - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn structured_zero_subdivisions_rejected() {
        assert!(matches!(
            build_structured_mesh(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn midline_is_made_of_vertices_and_edges() {
        let n = 4;
        let m = build_structured_mesh(n).unwrap();
        // the 5 lattice points with x2 = 0.5 are mesh vertices
        let mut on_line: Vec<usize> = (0..m.n_vertices())
            .filter(|&v| (m.vertices()[v][1] - 0.5).abs() < 1e-15)
            .collect();
        on_line.sort_by(|&a, &b| m.vertices()[a][0].partial_cmp(&m.vertices()[b][0]).unwrap());
        assert_eq!(on_line.len(), 5);
        // consecutive pairs are edges of some triangle
        for w in on_line.windows(2) {
            let found = m.triangles().iter().any(|t| {
                (0..3).any(|e| {
                    let a = t[e];
                    let b = t[(e + 1) % 3];
                    (a == w[0] && b == w[1]) || (a == w[1] && b == w[0])
                })
            });
            assert!(found, "lattice pair {w:?} is not a mesh edge");
        }
    }

    #[test]
    fn all_triangles_positively_oriented_and_conforming() {
        for n in [1, 2, 3, 5, 8] {
            let m = build_structured_mesh(n).unwrap();
            for k in 0..m.n_triangles() {
                assert!(m.tri_area(k) > 0.0);
            }
            // interior edges are shared exactly twice: implied by successful
            // adjacency construction; spot-check neighbor symmetry
            for (k, adj) in m.adjacency().iter().enumerate() {
                for nb in adj.iter().flatten() {
                    assert!(m.adjacency()[*nb].iter().flatten().any(|&x| x == k));
                }
            }
        }
    }

    #[test]
    fn quality_of_structured_family() {
        let q4 = mesh_quality(&build_structured_mesh(4).unwrap());
        assert!((q4.uniformity_ratio - 1.0).abs() < 1e-14);
        // similar elements at every n: shape ratio independent of n
        let q8 = mesh_quality(&build_structured_mesh(8).unwrap());
        let q16 = mesh_quality(&build_structured_mesh(16).unwrap());
        assert_eq!(q4.shape_ratio, q8.shape_ratio);
        assert_eq!(q8.shape_ratio, q16.shape_ratio);
        assert!(q4.shape_ratio >= 2.0 / 3.0f64.sqrt());
    }

    #[test]
    fn inscribed_ball_of_unit_right_triangle() {
        // vertices (0,0), (1,0), (0,1) scaled into the unit square as-is
        let m = Mesh2D::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            None,
            false,
        )
        .unwrap();
        let q = mesh_quality(&m);
        // rho = 4 * area / perimeter = 2 / (2 + sqrt(2))
        let rho = 2.0 / (2.0 + std::f64::consts::SQRT_2);
        assert!((q.shape_ratio - std::f64::consts::SQRT_2 / rho).abs() < 1e-14);
        assert!((rho - 0.5858).abs() < 1e-4);
    }

    #[test]
    fn hanging_node_rejected() {
        // one side of the diagonal refined at its midpoint, the other not:
        // triangle [0,2,3] sees the full edge (0,2) while the right side
        // walks through vertex 4
        let vertices = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
        ];
        let triangles = vec![[0, 2, 3], [0, 1, 4], [1, 2, 4]];
        let err = Mesh2D::from_parts(vertices, triangles, None, false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn single_triangle_is_a_valid_mesh() {
        let m = Mesh2D::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            None,
            false,
        )
        .unwrap();
        assert_eq!(m.n_triangles(), 1);
        assert!((m.tri_area(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bad_boundary_markers_rejected() {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err = Mesh2D::from_parts(
            vertices,
            vec![[0, 1, 2]],
            Some(vec![true, true, false]),
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
