//! Assembly of the curve fidelity term: the surface mass matrix `M`, data
//! vector `G` and data constant, from either the smooth curve (exact
//! integration in the curve parameter) or an interpolating polygonal curve
//! (flat-measure integration, exact by Simpson's rule), plus the reduction
//! of the polygonal form to an equivalent weighted point-control problem.

use crate::fem::FeFunction;
use crate::geometry::{ParametricCurve, PolygonalCurve};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh2D;
use crate::quad::SIMPSON;
use crate::{Error, Result};
use std::sync::Arc;

/// Sub-segments shorter than this are measure-zero artifacts of clipping
/// and are dropped.
const DEGENERATE_SPAN: f64 = 1e-14;

/// Prescribed data on the curve.
#[derive(Clone)]
pub enum GammaData {
    Const(f64),
    /// `sin(3 pi x1)`
    Sin3PiX1,
    /// `1` where `x1 < 0`, `-1` where `x1 >= 0`; inside the unit square this
    /// is the constant `-1`
    JumpLiteral,
    /// `+1` for parameter `t < 0.5`, `-1` for `t >= 0.5`, per component
    JumpMidflip,
    /// nodal values at polygon vertices, one list per component (polygonal
    /// method only)
    VertexTable(Vec<Vec<f64>>),
}

impl GammaData {
    pub fn eval(&self, _component: usize, t: f64, xy: [f64; 2]) -> f64 {
        match self {
            GammaData::Const(v) => *v,
            GammaData::Sin3PiX1 => (3.0 * std::f64::consts::PI * xy[0]).sin(),
            GammaData::JumpLiteral => {
                if xy[0] < 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            GammaData::JumpMidflip => {
                if t < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            GammaData::VertexTable(_) => {
                panic!("vertex tables have no pointwise evaluation off the polygon")
            }
        }
    }

    /// Parameters where the data jumps; quadrature must break there.
    pub fn jump_params(&self) -> &'static [f64] {
        match self {
            GammaData::JumpMidflip => &[0.5],
            _ => &[],
        }
    }
}

impl std::fmt::Debug for GammaData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GammaData::Const(v) => write!(f, "Const({v})"),
            GammaData::Sin3PiX1 => write!(f, "Sin3PiX1"),
            GammaData::JumpLiteral => write!(f, "JumpLiteral"),
            GammaData::JumpMidflip => write!(f, "JumpMidflip"),
            GammaData::VertexTable(t) => write!(f, "VertexTable({} components)", t.len()),
        }
    }
}

/// Which fidelity discretization is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelityMethod {
    /// integrate on the smooth curve with Gauss quadrature and exact data
    One,
    /// integrate on the interpolating polygon with the flat measure and
    /// piecewise linear data; exact via Simpson
    Two,
}

/// The curve the fidelity term lives on.
pub enum CurveInput<'a> {
    Smooth(&'a ParametricCurve),
    Polygon(&'a PolygonalCurve),
}

/// One piece of the curve inside a single triangle.
#[derive(Debug, Clone)]
pub struct SubSegment {
    pub component: usize,
    /// polygon segment index (polygonal method); `usize::MAX` for the
    /// smooth method
    pub segment: usize,
    pub tri: usize,
    /// span in the segment chord fraction (method 2) or curve parameter
    /// (method 1)
    pub span: [f64; 2],
    pub endpoints: [[f64; 2]; 2],
    /// barycentric coordinates of the endpoints in `tri`
    pub bary: [[f64; 3]; 2],
    /// measure of the piece (flat chord length or arclength)
    pub length: f64,
    /// data values at span start, midpoint, end
    pub g_values: [f64; 3],
}

/// Assembled fidelity term: matrix and vector over all mesh vertices.
pub struct SurfaceAssembly {
    pub mesh: Arc<Mesh2D>,
    pub method: FidelityMethod,
    /// `m(phi_z, phi_zbar)`, symmetric positive semidefinite
    pub m_sigma: CsrMatrix,
    /// `m(g, phi_z)`
    pub g_sigma: Vec<f64>,
    /// `m(g, g)`
    pub g_const: f64,
    pub sub_segments: Vec<SubSegment>,
    /// total measure of the discrete curve
    pub total_length: f64,
}

impl std::fmt::Debug for SurfaceAssembly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfaceAssembly")
            .field("method", &self.method)
            .field("sub_segments", &self.sub_segments.len())
            .field("total_length", &self.total_length)
            .finish()
    }
}

/// Weighted point evaluations equivalent to a polygonal fidelity term.
#[derive(Debug, Clone, Default)]
pub struct PointControlData {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl PointControlData {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

type WeightFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Assemble the fidelity term.
///
/// Method 1 takes the smooth curve and integrates with `gauss_order` points
/// per triangle-local piece of the curve (measure `|gamma'| dt`, exact data
/// evaluation, mandatory breaks at data jumps). Method 2 takes the polygon,
/// splits each segment at triangle boundaries and integrates the piecewise
/// quadratic integrands exactly with Simpson's rule in the flat measure.
/// `weight`, when given, multiplies the measure.
pub fn assemble_surface_terms(
    mesh: &Arc<Mesh2D>,
    curve: CurveInput<'_>,
    g: &GammaData,
    method: FidelityMethod,
    gauss_order: usize,
    weight: Option<WeightFn>,
) -> Result<SurfaceAssembly> {
    let w: WeightFn = weight.unwrap_or_else(|| Arc::new(|_, _| 1.0));
    match (method, curve) {
        (FidelityMethod::One, CurveInput::Smooth(c)) => assemble_method1(mesh, c, g, gauss_order, w),
        (FidelityMethod::Two, CurveInput::Polygon(p)) => assemble_method2(mesh, p, g, w),
        (FidelityMethod::One, CurveInput::Polygon(_)) => Err(Error::InvalidArgument(
            "the exact-curve method needs the smooth curve".into(),
        )),
        (FidelityMethod::Two, CurveInput::Smooth(_)) => Err(Error::InvalidArgument(
            "the polygonal method needs an interpolating polygon (choose sigma first)".into(),
        )),
    }
}

struct Accumulator {
    triplets: Vec<(usize, usize, f64)>,
    g_vec: Vec<f64>,
    g_const: f64,
    total_length: f64,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            triplets: Vec::new(),
            g_vec: vec![0.0; n],
            g_const: 0.0,
            total_length: 0.0,
        }
    }

    /// Add one quadrature node: basis values `phi` of the triangle's three
    /// vertices, data value `g`, and the measure contribution `w`.
    fn add_node(&mut self, verts: [usize; 3], phi: [f64; 3], g: f64, w: f64) {
        for i in 0..3 {
            for j in 0..3 {
                self.triplets.push((verts[i], verts[j], w * phi[i] * phi[j]));
            }
            self.g_vec[verts[i]] += w * g * phi[i];
        }
        self.g_const += w * g * g;
    }
}

fn locate_or_err(mesh: &Mesh2D, x: [f64; 2], seed: &mut usize) -> Result<(usize, [f64; 3])> {
    match mesh.locate_point_seeded(x, *seed) {
        Some((tri, bary)) => {
            *seed = tri;
            Ok((tri, bary))
        }
        None => Err(Error::Locate(format!(
            "curve point ({}, {}) is outside the mesh",
            x[0], x[1]
        ))),
    }
}

// ---------------------------------------------------------------------
// Method 2: polygon segments clipped against the triangulation
// ---------------------------------------------------------------------

fn assemble_method2(
    mesh: &Arc<Mesh2D>,
    polygon: &PolygonalCurve,
    g: &GammaData,
    weight: WeightFn,
) -> Result<SurfaceAssembly> {
    let nodal = nodal_data(polygon, g)?;
    let mut acc = Accumulator::new(mesh.n_vertices());
    let mut subs = Vec::new();
    let mut seed = 0usize;
    for (ci, pcomp) in polygon.components().iter().enumerate() {
        for s in 0..pcomp.n_segments() {
            let (p0, p1) = pcomp.segment(s);
            let (ga, gb) = (nodal[ci][s], nodal[ci][s + 1]);
            let spans = clip_segment(mesh, p0, p1, &mut seed)?;
            for (tri, u0, u1) in spans {
                if u1 - u0 < DEGENERATE_SPAN {
                    continue;
                }
                let chord = crate::geometry::dist(p0, p1);
                let length = chord * (u1 - u0);
                let at = |u: f64| {
                    [
                        p0[0] + u * (p1[0] - p0[0]),
                        p0[1] + u * (p1[1] - p0[1]),
                    ]
                };
                let x0 = at(u0);
                let x1 = at(u1);
                let b0 = mesh.barycentric(tri, x0);
                let b1 = mesh.barycentric(tri, x1);
                let verts = mesh.triangles()[tri];
                let g_at = |u: f64| ga + (gb - ga) * u;
                let mut g3 = [0.0; 3];
                for (slot, &(frac, wq)) in g3.iter_mut().zip(SIMPSON.iter()) {
                    let u = u0 + (u1 - u0) * frac;
                    let x = at(u);
                    let phi = [
                        b0[0] + (b1[0] - b0[0]) * frac,
                        b0[1] + (b1[1] - b0[1]) * frac,
                        b0[2] + (b1[2] - b0[2]) * frac,
                    ];
                    let gv = g_at(u);
                    *slot = gv;
                    acc.add_node(verts, phi, gv, wq * length * weight(x[0], x[1]));
                }
                acc.total_length += length;
                subs.push(SubSegment {
                    component: ci,
                    segment: s,
                    tri,
                    span: [u0, u1],
                    endpoints: [x0, x1],
                    bary: [b0, b1],
                    length,
                    g_values: g3,
                });
            }
        }
    }
    finish(mesh, FidelityMethod::Two, acc, subs)
}

/// Nodal data values at polygon vertices per component.
fn nodal_data(polygon: &PolygonalCurve, g: &GammaData) -> Result<Vec<Vec<f64>>> {
    if let GammaData::VertexTable(table) = g {
        if table.len() != polygon.n_components() {
            return Err(Error::InvalidArgument(
                "vertex table component count mismatch".into(),
            ));
        }
        for (ci, (col, comp)) in table.iter().zip(polygon.components()).enumerate() {
            if col.len() != comp.vertices.len() {
                return Err(Error::InvalidArgument(format!(
                    "vertex table length mismatch in component {ci}"
                )));
            }
        }
        return Ok(table.clone());
    }
    Ok(crate::geometry::interpolate_surface_data(
        |ci, t, xy| g.eval(ci, t, xy),
        polygon,
    ))
}

/// Split the segment `p0 -> p1` into triangle-local spans of its chord
/// fraction. Exact partition: crossing fractions are affine roots of the
/// barycentric coordinates, so adjacent spans share endpoints bit-for-bit.
/// Segments riding on shared mesh edges land in the lower-indexed triangle.
fn clip_segment(
    mesh: &Mesh2D,
    p0: [f64; 2],
    p1: [f64; 2],
    seed: &mut usize,
) -> Result<Vec<(usize, f64, f64)>> {
    let mut out: Vec<(usize, f64, f64)> = Vec::new();
    let mut stack = vec![(0.0f64, 1.0f64)];
    let at = |u: f64| {
        [
            p0[0] + u * (p1[0] - p0[0]),
            p0[1] + u * (p1[1] - p0[1]),
        ]
    };
    let mut guard = 0usize;
    while let Some((ua, ub)) = stack.pop() {
        if ub - ua < DEGENERATE_SPAN {
            continue;
        }
        guard += 1;
        if guard > 64 + 8 * mesh.n_triangles() {
            return Err(Error::Locate(
                "segment clipping did not terminate".into(),
            ));
        }
        let umid = 0.5 * (ua + ub);
        let (tri, _) = locate_or_err(mesh, at(umid), seed)?;
        // barycentric coordinates are affine along the segment
        let ba = mesh.barycentric(tri, at(ua));
        let bb = mesh.barycentric(tri, at(ub));
        let mut lo = ua;
        let mut hi = ub;
        for i in 0..3 {
            let (la, lb) = (ba[i], bb[i]);
            if la.abs().max(lb.abs()) <= 1e-13 {
                continue; // runs along the edge opposite vertex i
            }
            if la >= 0.0 && lb >= 0.0 {
                continue;
            }
            if la < 0.0 && lb < 0.0 {
                // cannot happen for an affine function positive at umid
                return Err(Error::Locate(format!(
                    "inconsistent clip of segment against triangle {tri}"
                )));
            }
            let root = ua + (ub - ua) * la / (la - lb);
            if la < 0.0 {
                lo = lo.max(root);
            } else {
                hi = hi.min(root);
            }
        }
        if hi - lo >= DEGENERATE_SPAN {
            out.push((tri, lo, hi));
        }
        if lo - ua >= DEGENERATE_SPAN {
            stack.push((ua, lo));
        }
        if ub - hi >= DEGENERATE_SPAN {
            stack.push((hi, ub));
        }
    }
    out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    Ok(out)
}

// ---------------------------------------------------------------------
// Method 1: smooth curve split at triangle boundaries
// ---------------------------------------------------------------------

fn assemble_method1(
    mesh: &Arc<Mesh2D>,
    curve: &ParametricCurve,
    g: &GammaData,
    gauss_order: usize,
    weight: WeightFn,
) -> Result<SurfaceAssembly> {
    if gauss_order == 0 {
        return Err(Error::InvalidArgument("gauss_order must be positive".into()));
    }
    if matches!(g, GammaData::VertexTable(_)) {
        return Err(Error::InvalidArgument(
            "vertex tables need the polygonal method".into(),
        ));
    }
    let (nodes, wts) = crate::quad::gauss_legendre(gauss_order);
    let mut acc = Accumulator::new(mesh.n_vertices());
    let mut subs = Vec::new();
    let mut seed = 0usize;
    for (ci, comp) in curve.components().iter().enumerate() {
        // hard breakpoints: component ends plus data jumps
        let mut breaks = vec![0.0];
        breaks.extend(g.jump_params().iter().copied().filter(|t| (0.0..1.0).contains(t)));
        breaks.push(1.0);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < DEGENERATE_SPAN);
        for window in breaks.windows(2) {
            let pieces = split_curve_run(mesh, comp, window[0], window[1], &mut seed)?;
            for (tri, t0, t1) in pieces {
                let verts = mesh.triangles()[tri];
                let half = 0.5 * (t1 - t0);
                let mid = 0.5 * (t0 + t1);
                let mut arclen = 0.0;
                for (&xi, &wq) in nodes.iter().zip(&wts) {
                    let t = mid + half * xi;
                    let x = comp.eval(t);
                    let d = comp.deriv(t);
                    let speed = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    let phi = mesh.barycentric(tri, x);
                    let gv = g.eval(ci, t, x);
                    let measure = wq * half * speed;
                    arclen += measure;
                    acc.add_node(verts, phi, gv, measure * weight(x[0], x[1]));
                }
                acc.total_length += arclen;
                let (x0, x1) = (comp.eval(t0), comp.eval(t1));
                subs.push(SubSegment {
                    component: ci,
                    segment: usize::MAX,
                    tri,
                    span: [t0, t1],
                    endpoints: [x0, x1],
                    bary: [mesh.barycentric(tri, x0), mesh.barycentric(tri, x1)],
                    length: arclen,
                    g_values: [
                        g.eval(ci, t0, x0),
                        g.eval(ci, mid, comp.eval(mid)),
                        g.eval(ci, t1, x1),
                    ],
                });
            }
        }
    }
    finish(mesh, FidelityMethod::One, acc, subs)
}

/// Walk the curve over `[t_start, t_end]` and split it into triangle-local
/// runs that tile the interval exactly. Runs along shared edges stay in the
/// triangle the point locator picks (the lowest index). When the curve
/// passes through a mesh vertex, probes past the crossing grow
/// geometrically until they escape the locator's tolerance ball; the
/// skipped sliver (at most the probe distance) stays attached to the
/// neighboring run, which only moves measure between adjacent triangles at
/// the 1e-12 level.
fn split_curve_run(
    mesh: &Mesh2D,
    comp: &crate::geometry::CurveComponent,
    t_start: f64,
    t_end: f64,
    seed: &mut usize,
) -> Result<Vec<(usize, f64, f64)>> {
    const EDGE_TOL: f64 = 1e-12;
    let span = t_end - t_start;
    let mut out = Vec::new();
    if span < DEGENERATE_SPAN {
        return Ok(out);
    }
    let inside = |tri: usize, t: f64| {
        let b = mesh.barycentric(tri, comp.eval(t));
        b[0].min(b[1]).min(b[2]) >= -EDGE_TOL
    };
    // parameter step targeting about an eighth of a cell per move
    let step_at = |t: f64| {
        let d = comp.deriv(t);
        let speed = (d[0] * d[0] + d[1] * d[1]).sqrt().max(1e-12);
        (mesh.h_max() / (8.0 * speed)).min(span).max(1e-9)
    };
    // first exit of `tri` marching forward from `from` (which lies in `tri`
    // up to locator tolerance)
    let find_exit = |tri: usize, from: f64| -> f64 {
        let mut t = from;
        loop {
            if t >= t_end - DEGENERATE_SPAN {
                return t_end;
            }
            let next = (t + step_at(t)).min(t_end);
            if inside(tri, next) {
                t = next;
                continue;
            }
            let mut lo = t;
            let mut hi = next;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if inside(tri, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < DEGENERATE_SPAN {
                    break;
                }
            }
            return lo;
        }
    };
    let eps0 = (1e-13 * span.max(1e-3)).max(1e-16);
    let mut cursor = t_start;
    let mut guard = 0usize;
    while t_end - cursor > DEGENERATE_SPAN {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Locate("curve splitting did not terminate".into()));
        }
        let mut delta = eps0;
        let (tri, exit) = loop {
            let probe = (cursor + delta).min(t_end);
            let (cand, _) = locate_or_err(mesh, comp.eval(probe), seed)?;
            let exit = find_exit(cand, probe);
            // accept a run that clearly outgrows the probe distance; tiny
            // runs mean the probe sat in a vertex tolerance ball
            if exit >= t_end - DEGENERATE_SPAN || exit - cursor >= 2.0 * delta {
                break (cand, exit);
            }
            delta *= 4.0;
            if cursor + delta >= t_end {
                break (cand, t_end);
            }
        };
        out.push((tri, cursor, exit));
        cursor = exit;
    }
    Ok(out)
}

fn finish(
    mesh: &Arc<Mesh2D>,
    method: FidelityMethod,
    acc: Accumulator,
    subs: Vec<SubSegment>,
) -> Result<SurfaceAssembly> {
    if subs.is_empty() {
        return Err(Error::Validation("fidelity assembly produced no sub-segments".into()));
    }
    let n = mesh.n_vertices();
    let m_sigma = CsrMatrix::from_triplets(n, n, &acc.triplets);
    Ok(SurfaceAssembly {
        mesh: mesh.clone(),
        method,
        m_sigma,
        g_sigma: acc.g_vec,
        g_const: acc.g_const,
        sub_segments: subs,
        total_length: acc.total_length,
    })
}

/// Fidelity value `1/2 || y - g ||^2` in the assembled discrete inner
/// product: `1/2 (y M y - 2 y G + g_const)`.
pub fn fidelity_value(assembly: &SurfaceAssembly, y: &FeFunction) -> Result<f64> {
    if !std::ptr::eq(assembly.mesh.as_ref(), y.mesh().as_ref()) {
        return Err(Error::InvalidArgument(
            "state lives on a different mesh than the fidelity assembly".into(),
        ));
    }
    let ymy = assembly.m_sigma.quadratic_form(y.coeffs(), y.coeffs());
    let yg: f64 = y
        .coeffs()
        .iter()
        .zip(&assembly.g_sigma)
        .map(|(a, b)| a * b)
        .sum();
    Ok(0.5 * (ymy - 2.0 * yg + assembly.g_const))
}

/// Rewrite a polygonal fidelity term as weighted point evaluations: Simpson
/// nodes of every sub-segment, with coincident nodes merged. For functions
/// linear on each sub-segment the weighted sum reproduces the assembled
/// inner product exactly.
pub fn reduce_to_point_control(assembly: &SurfaceAssembly) -> Result<PointControlData> {
    if assembly.method != FidelityMethod::Two {
        return Err(Error::InvalidArgument(
            "point reduction applies to the polygonal method only".into(),
        ));
    }
    struct Node {
        point: [f64; 2],
        weight: f64,
        value: f64,
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(3 * assembly.sub_segments.len());
    for sub in &assembly.sub_segments {
        let l = sub.length;
        let mid = [
            0.5 * (sub.endpoints[0][0] + sub.endpoints[1][0]),
            0.5 * (sub.endpoints[0][1] + sub.endpoints[1][1]),
        ];
        for (k, &(_, w)) in SIMPSON.iter().enumerate() {
            let point = match k {
                0 => sub.endpoints[0],
                1 => mid,
                _ => sub.endpoints[1],
            };
            nodes.push(Node {
                point,
                weight: w * l,
                value: sub.g_values[k],
            });
        }
    }
    // merge nodes coincident to 1e-12 (shared endpoints of adjacent pieces)
    nodes.sort_by(|a, b| {
        a.point
            .partial_cmp(&b.point)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut data = PointControlData::default();
    for node in nodes {
        let mut merged = false;
        for k in (0..data.points.len()).rev() {
            if node.point[0] - data.points[k][0] > 1e-12 {
                break; // sorted by x: nothing earlier can match
            }
            if crate::geometry::dist(node.point, data.points[k]) <= 1e-12 {
                data.weights[k] += node.weight;
                debug_assert!(
                    (data.values[k] - node.value).abs() < 1e-9,
                    "merged nodes carry different data"
                );
                merged = true;
                break;
            }
        }
        if !merged {
            data.points.push(node.point);
            data.weights.push(node.weight);
            data.values.push(node.value);
        }
    }
    Ok(data)
}

/// The fidelity term in the form the optimizer consumes: a sparse matrix, a
/// load vector and a constant, all over mesh vertices.
#[derive(Debug, Clone)]
pub struct FidelityOperator {
    pub m: CsrMatrix,
    pub g: Vec<f64>,
    pub g_const: f64,
}

impl FidelityOperator {
    pub fn from_surface(assembly: &SurfaceAssembly) -> Self {
        FidelityOperator {
            m: assembly.m_sigma.clone(),
            g: assembly.g_sigma.clone(),
            g_const: assembly.g_const,
        }
    }

    /// Assemble from weighted point evaluations:
    /// `m = sum_i k_i phi(x_i) phi(x_i)^T`, `g = sum_i k_i g_i phi(x_i)`.
    pub fn from_points(mesh: &Mesh2D, data: &PointControlData) -> Result<Self> {
        let n = mesh.n_vertices();
        let mut triplets = Vec::with_capacity(9 * data.len());
        let mut g = vec![0.0; n];
        let mut g_const = 0.0;
        let mut seed = 0usize;
        for ((point, &kappa), &value) in data
            .points
            .iter()
            .zip(&data.weights)
            .zip(&data.values)
        {
            let (tri, bary) = locate_or_err(mesh, *point, &mut seed)?;
            let verts = mesh.triangles()[tri];
            for i in 0..3 {
                for j in 0..3 {
                    triplets.push((verts[i], verts[j], kappa * bary[i] * bary[j]));
                }
                g[verts[i]] += kappa * value * bary[i];
            }
            g_const += kappa * value * value;
        }
        Ok(FidelityOperator {
            m: CsrMatrix::from_triplets(n, n, &triplets),
            g,
            g_const,
        })
    }

    /// `1/2 (y M y - 2 y G + c)`
    pub fn value(&self, y: &[f64]) -> f64 {
        let ymy = self.m.quadratic_form(y, y);
        let yg: f64 = y.iter().zip(&self.g).map(|(a, b)| a * b).sum();
        0.5 * (ymy - 2.0 * yg + self.g_const)
    }
}
