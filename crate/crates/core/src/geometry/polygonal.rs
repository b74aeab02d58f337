//! Interpolating polygonal curves: vertices on the smooth curve at equal
//! arclength spacing, one polyline per component.

use super::{dist, CurveComponent, ParametricCurve};
use crate::{Error, Result};

/// One polygonal component: ordered vertices with their parameters on the
/// source curve. For closed components the first and last vertices coincide.
#[derive(Debug, Clone)]
pub struct PolygonalComponent {
    pub vertices: Vec<[f64; 2]>,
    /// parameter of each vertex on the source curve; empty for raw polylines
    pub params: Vec<f64>,
    pub closed: bool,
}

impl PolygonalComponent {
    pub fn n_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segment(&self, k: usize) -> ([f64; 2], [f64; 2]) {
        (self.vertices[k], self.vertices[k + 1])
    }

    pub fn segment_length(&self, k: usize) -> f64 {
        dist(self.vertices[k], self.vertices[k + 1])
    }

    pub fn length(&self) -> f64 {
        (0..self.n_segments()).map(|k| self.segment_length(k)).sum()
    }

    /// Point at fraction `u` of segment `k`.
    pub fn point_on_segment(&self, k: usize, u: f64) -> [f64; 2] {
        let (a, b) = self.segment(k);
        [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
    }
}

/// A polygonal curve, either interpolating a [`ParametricCurve`] or supplied
/// directly as polylines.
#[derive(Debug, Clone)]
pub struct PolygonalCurve {
    components: Vec<PolygonalComponent>,
    sigma: f64,
}

impl PolygonalCurve {
    pub fn components(&self) -> &[PolygonalComponent] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PolygonalComponent {
        &self.components[i]
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Longest chord over all segments.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(|c| c.length()).sum()
    }

    /// Whether vertex parameters on a source curve are available.
    pub fn has_params(&self) -> bool {
        self.components.iter().all(|c| !c.params.is_empty())
    }

    /// Build directly from vertex lists (no source curve; parameters absent).
    pub fn from_polylines(polylines: Vec<(Vec<[f64; 2]>, bool)>) -> Result<Self> {
        let mut components = Vec::with_capacity(polylines.len());
        let mut sigma = 0.0f64;
        for (vertices, closed) in polylines {
            let mut vertices = vertices;
            if closed {
                let first = *vertices
                    .first()
                    .ok_or_else(|| Error::InvalidArgument("empty polyline".into()))?;
                let last = *vertices.last().unwrap();
                if dist(first, last) > 1e-12 {
                    vertices.push(first);
                }
            }
            if vertices.len() < 2 {
                return Err(Error::InvalidArgument(
                    "polyline needs at least two vertices".into(),
                ));
            }
            let comp = PolygonalComponent {
                vertices,
                params: Vec::new(),
                closed,
            };
            for k in 0..comp.n_segments() {
                let len = comp.segment_length(k);
                if len < 1e-14 {
                    return Err(Error::InvalidArgument(format!(
                        "degenerate polyline segment {k}"
                    )));
                }
                sigma = sigma.max(len);
            }
            components.push(comp);
        }
        Ok(PolygonalCurve { components, sigma })
    }
}

/// Interpolate `curve` by polylines with vertices at equal arclength
/// spacing, using `ceil(length / sigma_target)` segments per component, so
/// every chord is at most `sigma_target`.
pub fn polygonal_interpolation(
    curve: &ParametricCurve,
    sigma_target: f64,
) -> Result<PolygonalCurve> {
    if sigma_target <= 0.0 {
        return Err(Error::InvalidArgument(
            "sigma_target must be positive".into(),
        ));
    }
    let shortest = curve
        .components()
        .iter()
        .map(CurveComponent::length)
        .fold(f64::INFINITY, f64::min);
    if sigma_target > shortest {
        return Err(Error::InvalidArgument(format!(
            "sigma_target {sigma_target} exceeds the shortest component length {shortest}"
        )));
    }
    let mut components = Vec::with_capacity(curve.n_components());
    let mut sigma = 0.0f64;
    for comp in curve.components() {
        let length = comp.length();
        // snap near-integer ratios so roundoff in the arclength table does
        // not flip the segment count
        let m = ((length / sigma_target - 1e-9).ceil().max(1.0)) as usize;
        let mut vertices = Vec::with_capacity(m + 1);
        let mut params = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let t = if k == m {
                1.0
            } else {
                comp.param_at_arclength(length * k as f64 / m as f64)
            };
            params.push(t);
            vertices.push(comp.eval(t));
        }
        if comp.is_closed() {
            // identical endpoints, not merely close
            vertices[m] = vertices[0];
        }
        let poly = PolygonalComponent {
            vertices,
            params,
            closed: comp.is_closed(),
        };
        for k in 0..poly.n_segments() {
            sigma = sigma.max(poly.segment_length(k));
        }
        components.push(poly);
    }
    Ok(PolygonalCurve { components, sigma })
}

/// Nodal values of `g` at the polygon vertices; the induced function on the
/// polygonal curve is the piecewise linear interpolant. `g` receives
/// `(component, parameter, position)`.
pub fn interpolate_surface_data(
    g: impl Fn(usize, f64, [f64; 2]) -> f64,
    polygon: &PolygonalCurve,
) -> Vec<Vec<f64>> {
    polygon
        .components()
        .iter()
        .enumerate()
        .map(|(ci, comp)| {
            comp.vertices
                .iter()
                .zip(params_or_chord(comp))
                .map(|(&v, t)| g(ci, t, v))
                .collect()
        })
        .collect()
}

/// Vertex parameters, falling back to normalized chord length for raw
/// polylines.
pub(crate) fn params_or_chord(comp: &PolygonalComponent) -> Vec<f64> {
    if !comp.params.is_empty() {
        return comp.params.clone();
    }
    let mut acc = vec![0.0];
    for k in 0..comp.n_segments() {
        acc.push(acc[k] + comp.segment_length(k));
    }
    let total = *acc.last().unwrap();
    acc.iter().map(|&s| s / total).collect()
}
