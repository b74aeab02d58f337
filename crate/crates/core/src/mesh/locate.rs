//! Point location. Meshes with fewer than 5000 triangles are scanned
//! directly; larger ones use a walk through the adjacency graph. Both paths
//! return the lowest-indexed triangle containing the point, so results do
//! not depend on the seed.

use super::{Mesh2D, BARY_TOL};

/// Below this triangle count a linear scan wins over walking.
const BRUTE_FORCE_LIMIT: usize = 5000;

impl Mesh2D {
    /// Find a triangle containing `x` together with the barycentric
    /// coordinates of `x` in it. Points on shared edges or vertices resolve
    /// to the lowest triangle index. Returns `None` outside the mesh.
    pub fn locate_point(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        if self.n_triangles() < BRUTE_FORCE_LIMIT {
            self.locate_brute(x)
        } else {
            self.locate_point_seeded(x, 0)
        }
    }

    /// Walking search from `seed`; hot loops that sweep nearby points keep
    /// the previous hit as the next seed. The result equals
    /// [`Mesh2D::locate_point`] for any seed.
    pub fn locate_point_seeded(&self, x: [f64; 2], seed: usize) -> Option<(usize, [f64; 3])> {
        let mut current = seed.min(self.n_triangles() - 1);
        let mut steps = 0usize;
        loop {
            let bary = self.barycentric(current, x);
            let (worst, min_bary) = argmin(bary);
            if min_bary >= -BARY_TOL {
                return Some(self.normalize_hit(current, x));
            }
            match self.adjacency[current][worst] {
                Some(next) => {
                    current = next;
                    steps += 1;
                    // cycles can only arise from floating-point ties; fall
                    // back to the scan rather than loop forever
                    if steps > self.n_triangles() {
                        return self.locate_brute(x);
                    }
                }
                // walked off the mesh: either x is outside or roundoff sent
                // us over a boundary edge; the scan settles it
                None => return self.locate_brute(x),
            }
        }
    }

    fn locate_brute(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        for k in 0..self.n_triangles() {
            let bary = self.barycentric(k, x);
            if bary.iter().all(|&b| b >= -BARY_TOL) {
                return Some((k, bary));
            }
        }
        None
    }

    /// The walk can stop in any triangle containing `x`; expand through
    /// neighbors that also contain it (the containing set is edge-connected)
    /// and return the lowest index.
    fn normalize_hit(&self, hit: usize, x: [f64; 2]) -> (usize, [f64; 3]) {
        let mut best = hit;
        let mut stack = vec![hit];
        let mut seen = vec![hit];
        while let Some(k) = stack.pop() {
            for nb in self.adjacency[k].iter().flatten() {
                if seen.contains(nb) {
                    continue;
                }
                seen.push(*nb);
                let bary = self.barycentric(*nb, x);
                if bary.iter().all(|&b| b >= -BARY_TOL) {
                    best = best.min(*nb);
                    stack.push(*nb);
                }
            }
        }
        (best, self.barycentric(best, x))
    }
}

fn argmin(b: [f64; 3]) -> (usize, f64) {
    let mut idx = 0;
    for i in 1..3 {
        if b[i] < b[idx] {
            idx = i;
        }
    }
    (idx, b[idx])
}

#[cfg(test)]
mod tests {
    use crate::mesh::build_structured_mesh;

    #[test]
    fn centroid_locates_to_its_triangle() {
        let m = build_structured_mesh(4).unwrap();
        for k in 0..m.n_triangles() {
            let [p0, p1, p2] = m.tri_vertices(k);
            let c = [
                (p0[0] + p1[0] + p2[0]) / 3.0,
                (p0[1] + p1[1] + p2[1]) / 3.0,
            ];
            let (hit, bary) = m.locate_point(c).unwrap();
            assert_eq!(hit, k);
            for b in bary {
                assert!((b - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mesh_vertex_locates_to_lowest_incident_triangle() {
        let m = build_structured_mesh(3).unwrap();
        for v in 0..m.n_vertices() {
            let x = m.vertices()[v];
            let (hit, bary) = m.locate_point(x).unwrap();
            // one barycentric coordinate must be 1
            assert!(bary.iter().any(|&b| (b - 1.0).abs() < 1e-12));
            // lowest incident index
            let lowest = (0..m.n_triangles())
                .find(|&k| m.triangles()[k].contains(&v))
                .unwrap();
            assert_eq!(hit, lowest);
        }
    }

    #[test]
    fn exterior_point_not_found() {
        let m = build_structured_mesh(4).unwrap();
        assert!(m.locate_point([2.0, 2.0]).is_none());
        assert!(m.locate_point([-0.1, 0.5]).is_none());
    }

    #[test]
    fn seeded_walk_matches_brute_force() {
        let m = build_structured_mesh(9).unwrap(); // 162 triangles, brute path
        let probe = [
            [0.301, 0.502],
            [0.5, 0.5],
            [1.0 / 3.0, 2.0 / 3.0],
            [0.999, 0.001],
            [0.0, 0.0],
        ];
        for x in probe {
            let brute = m.locate_point(x);
            for seed in [0, 7, 100, 161] {
                assert_eq!(m.locate_point_seeded(x, seed), brute, "x={x:?} seed={seed}");
            }
        }
    }

    #[test]
    fn reconstruction_from_barycentrics() {
        let m = build_structured_mesh(6).unwrap();
        let x = [0.377, 0.613];
        let (k, bary) = m.locate_point(x).unwrap();
        let sum: f64 = bary.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let back = m.point_from_bary(k, bary);
        assert!((back[0] - x[0]).abs() < 1e-10 && (back[1] - x[1]).abs() < 1e-10);
    }
}
