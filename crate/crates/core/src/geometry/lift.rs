//! The normal-line lift between a smooth curve and an interpolating
//! polygonal curve, closest-point projection, and the three geometric
//! quantities that control how well the polygon approximates the curve.

use super::polygonal::params_or_chord;
use super::{dist, CurveComponent, ParametricCurve, PolygonalCurve};
use crate::{Error, Result};

/// Result of projecting a point onto the curve.
#[derive(Debug, Clone, Copy)]
pub struct ClosestPoint {
    pub component: usize,
    pub param: f64,
    pub point: [f64; 2],
    /// signed offset along the unit normal at the foot point
    pub signed_distance: f64,
}

/// Intersection of the normal line at a curve point with the polygon.
#[derive(Debug, Clone, Copy)]
pub struct LiftHit {
    pub segment: usize,
    /// fraction along the segment in `[0, 1]`
    pub local: f64,
    pub point: [f64; 2],
    /// signed offset along the curve normal
    pub offset: f64,
}

/// Summary of how far a polygonal curve is from the smooth curve it
/// interpolates. All fields vanish (to roundoff) when the two coincide.
#[derive(Debug, Clone, Copy)]
pub struct GeometryReport {
    /// sup over the curve of the normal-line distance to the polygon
    pub sup_distance: f64,
    /// max over segments of |1 - chord/arc| (measure quotient deviation)
    pub measure_quotient_dev: f64,
    /// L2(curve) error of the lifted piecewise linear data interpolant
    pub data_interp_error: f64,
}

/// Closest point on the curve. Fails when the projection is ambiguous: a
/// second local minimum closer than twice the best distance.
pub fn closest_point(curve: &ParametricCurve, x: [f64; 2]) -> Result<ClosestPoint> {
    let mut minima: Vec<(usize, f64, f64)> = Vec::new(); // (component, t, distance)
    for (ci, comp) in curve.components().iter().enumerate() {
        collect_local_minima(comp, x, &mut minima, ci);
    }
    minima.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    let &(ci, t, d_best) = minima
        .first()
        .ok_or_else(|| Error::AmbiguousProjection("no candidate minima".into()))?;
    // distinct runner-up must be at least twice as far
    for &(cj, tj, dj) in minima.iter().skip(1) {
        let same = cj == ci && {
            let comp = curve.component(ci);
            let wrap = comp.is_closed();
            let dt = (tj - t).abs();
            dt < 1e-8 || (wrap && (1.0 - dt) < 1e-8)
        };
        if !same && dj < 2.0 * d_best {
            return Err(Error::AmbiguousProjection(format!(
                "competing projections at distances {d_best:e} and {dj:e}"
            )));
        }
        if !same {
            break;
        }
    }
    let comp = curve.component(ci);
    let c = comp.eval(t);
    let n = comp.normal(t);
    let signed = (x[0] - c[0]) * n[0] + (x[1] - c[1]) * n[1];
    // the projection property: x reconstructs from foot point and normal
    let recon = [c[0] + signed * n[0], c[1] + signed * n[1]];
    if dist(recon, x) > 1e-10 {
        return Err(Error::AmbiguousProjection(format!(
            "projection residual {:e} at t = {t}",
            dist(recon, x)
        )));
    }
    Ok(ClosestPoint {
        component: ci,
        param: t,
        point: c,
        signed_distance: signed,
    })
}

fn collect_local_minima(
    comp: &CurveComponent,
    x: [f64; 2],
    out: &mut Vec<(usize, f64, f64)>,
    ci: usize,
) {
    const SAMPLES: usize = 1024;
    let d2 = |t: f64| {
        let p = comp.eval(t);
        let dx = p[0] - x[0];
        let dy = p[1] - x[1];
        dx * dx + dy * dy
    };
    let vals: Vec<f64> = (0..=SAMPLES)
        .map(|i| d2(i as f64 / SAMPLES as f64))
        .collect();
    let wrap = comp.is_closed();
    let get = |i: isize| -> Option<f64> {
        if (0..=SAMPLES as isize).contains(&i) {
            Some(vals[i as usize])
        } else if wrap {
            Some(vals[i.rem_euclid(SAMPLES as isize) as usize])
        } else {
            None
        }
    };
    for i in 0..=SAMPLES {
        if wrap && i == SAMPLES {
            continue; // duplicate of i = 0
        }
        let here = vals[i];
        let prev = get(i as isize - 1);
        let next = get(i as isize + 1);
        let is_min = prev.map_or(true, |p| here <= p) && next.map_or(true, |n| here <= n);
        if !is_min {
            continue;
        }
        let lo = ((i as f64 - 1.0) / SAMPLES as f64).max(if wrap { f64::NEG_INFINITY } else { 0.0 });
        let hi = ((i as f64 + 1.0) / SAMPLES as f64).min(if wrap { f64::INFINITY } else { 1.0 });
        let t = refine_minimum(comp, x, lo, hi);
        let t_clamped = if wrap { t.rem_euclid(1.0) } else { t };
        out.push((ci, t_clamped, d2(t_clamped).sqrt()));
    }
}

/// Refine a bracketed minimum of the squared distance by bisection on
/// phi(t) = (x - c(t)) . c'(t), which changes sign from + to - there.
fn refine_minimum(comp: &CurveComponent, x: [f64; 2], mut lo: f64, mut hi: f64) -> f64 {
    let eval = |t: f64| {
        let tt = if comp.is_closed() { t.rem_euclid(1.0) } else { t };
        (tt, comp.eval(tt), comp.deriv(tt))
    };
    let phi = |t: f64| {
        let (_, p, d) = eval(t);
        (x[0] - p[0]) * d[0] + (x[1] - p[1]) * d[1]
    };
    let (phi_lo, phi_hi) = (phi(lo), phi(hi));
    if phi_lo <= 0.0 {
        return lo; // minimum at the left edge of the bracket
    }
    if phi_hi >= 0.0 {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Intersect the normal line of the curve at `(component, t)` with the
/// matching polygon component. The nearest intersection is the lift point;
/// a second intersection at a comparable distance or no intersection at all
/// violates the covering condition.
pub fn lift_hit(
    curve: &ParametricCurve,
    polygon: &PolygonalCurve,
    component: usize,
    t: f64,
) -> Result<LiftHit> {
    let comp = curve.component(component);
    let pcomp = polygon.component(component);
    let c = comp.eval(t);
    let mu = comp.normal(t);
    let mut hits: Vec<LiftHit> = Vec::new();
    for k in 0..pcomp.n_segments() {
        let (p0, p1) = pcomp.segment(k);
        let d = [p1[0] - p0[0], p1[1] - p0[1]];
        // solve c + s*mu = p0 + u*d
        let det = d[0] * mu[1] - d[1] * mu[0];
        let seg_len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if det.abs() <= 1e-14 * seg_len {
            continue; // segment parallel to the normal line
        }
        let rx = p0[0] - c[0];
        let ry = p0[1] - c[1];
        // Cramer on s*mu - u*d = p0 - c
        let s = (d[0] * ry - d[1] * rx) / det;
        let u = (mu[0] * ry - mu[1] * rx) / det;
        let tol_u = 1e-12 / seg_len.max(1e-30);
        if !(-tol_u..=1.0 + tol_u).contains(&u) {
            continue;
        }
        let point = [p0[0] + u * d[0], p0[1] + u * d[1]];
        hits.push(LiftHit {
            segment: k,
            local: u.clamp(0.0, 1.0),
            point,
            offset: s,
        });
    }
    hits.sort_by(|a, b| a.offset.abs().partial_cmp(&b.offset.abs()).unwrap());
    // merge duplicates from adjacent segments meeting at a vertex
    let mut distinct: Vec<LiftHit> = Vec::new();
    for h in hits {
        if distinct.iter().all(|d| dist(d.point, h.point) > 1e-12) {
            distinct.push(h);
        }
    }
    match distinct.len() {
        0 => Err(Error::Covering(format!(
            "normal line at component {component}, t = {t} misses the polygon"
        ))),
        1 => Ok(distinct[0]),
        _ => {
            let best = distinct[0];
            let second = distinct[1];
            if second.offset.abs() < 2.0 * best.offset.abs() + 1e-12 {
                return Err(Error::Covering(format!(
                    "normal line at component {component}, t = {t} crosses the polygon twice \
                     at offsets {:e} and {:e}",
                    best.offset, second.offset
                )));
            }
            Ok(best)
        }
    }
}

/// Supremum (over dense samples) of the normal-line distance from the curve
/// to the polygon. Sampling is uniform per segment parameter span, endpoints
/// included, so doubling `samples_per_segment` refines the estimate.
pub fn sup_distance(
    curve: &ParametricCurve,
    polygon: &PolygonalCurve,
    samples_per_segment: usize,
) -> Result<f64> {
    let samples = samples_per_segment.max(8);
    let mut sup = 0.0f64;
    for (ci, pcomp) in polygon.components().iter().enumerate() {
        let params = params_or_chord(pcomp);
        for k in 0..pcomp.n_segments() {
            let (ta, tb) = (params[k], params[k + 1]);
            for j in 0..=samples {
                let t = ta + (tb - ta) * j as f64 / samples as f64;
                let hit = lift_hit(curve, polygon, ci, t)?;
                sup = sup.max(hit.offset.abs());
            }
        }
    }
    Ok(sup)
}

/// Max over segments of |1 - chord/arc|: the deviation of the quotient
/// between the smooth and polygonal length measures, piecewise constant per
/// segment.
pub fn measure_quotient_dev(curve: &ParametricCurve, polygon: &PolygonalCurve) -> Result<f64> {
    let mut dev = 0.0f64;
    for (ci, pcomp) in polygon.components().iter().enumerate() {
        let comp = curve.component(ci);
        let params = params_or_chord(pcomp);
        for k in 0..pcomp.n_segments() {
            let arc = if pcomp.closed && k == pcomp.n_segments() - 1 {
                comp.length() - comp.arclength(params[k])
            } else {
                comp.arclength(params[k + 1]) - comp.arclength(params[k])
            };
            if arc <= 0.0 {
                return Err(Error::Validation(format!(
                    "segment {k} of component {ci} has nonpositive arc length"
                )));
            }
            let chord = pcomp.segment_length(k);
            dev = dev.max((1.0 - chord / arc).abs());
        }
    }
    Ok(dev)
}

/// Lift values defined on the polygon to curve points: for each requested
/// `(component, t)` the value at the intersection of the normal line with
/// the polygon.
pub fn lift_values(
    curve: &ParametricCurve,
    polygon: &PolygonalCurve,
    values_on_polygon: impl Fn(usize, usize, f64, [f64; 2]) -> f64,
    curve_params: &[(usize, f64)],
) -> Result<Vec<f64>> {
    curve_params
        .iter()
        .map(|&(ci, t)| {
            let hit = lift_hit(curve, polygon, ci, t)?;
            Ok(values_on_polygon(ci, hit.segment, hit.local, hit.point))
        })
        .collect()
}

/// L2(curve) distance between `g` and the lift of its piecewise linear
/// interpolant `nodal` on the polygon. Integration uses 16-point Gauss per
/// segment parameter span.
pub fn data_interp_error(
    curve: &ParametricCurve,
    polygon: &PolygonalCurve,
    g: impl Fn(usize, f64, [f64; 2]) -> f64,
    nodal: &[Vec<f64>],
) -> Result<f64> {
    let (nodes, weights) = crate::quad::gauss_legendre(16);
    let mut acc = 0.0;
    for (ci, pcomp) in polygon.components().iter().enumerate() {
        let comp = curve.component(ci);
        let params = params_or_chord(pcomp);
        for k in 0..pcomp.n_segments() {
            let (ta, tb) = (params[k], params[k + 1]);
            let half = 0.5 * (tb - ta);
            let mid = 0.5 * (ta + tb);
            for (&xi, &w) in nodes.iter().zip(&weights) {
                let t = mid + half * xi;
                let c = comp.eval(t);
                let d = comp.deriv(t);
                let speed = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let hit = lift_hit(curve, polygon, ci, t)?;
                let interp = nodal[ci][hit.segment] * (1.0 - hit.local)
                    + nodal[ci][hit.segment + 1] * hit.local;
                let diff = g(ci, t, c) - interp;
                acc += w * half * diff * diff * speed;
            }
        }
    }
    Ok(acc.sqrt())
}

/// All three approximation measures at once, with `samples_per_segment = 32`
/// for the supremum distance.
pub fn geometry_report(
    curve: &ParametricCurve,
    polygon: &PolygonalCurve,
    g: impl Fn(usize, f64, [f64; 2]) -> f64 + Copy,
) -> Result<GeometryReport> {
    let nodal = super::interpolate_surface_data(g, polygon);
    Ok(GeometryReport {
        sup_distance: sup_distance(curve, polygon, 32)?,
        measure_quotient_dev: measure_quotient_dev(curve, polygon)?,
        data_interp_error: data_interp_error(curve, polygon, g, &nodal)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_builtin_curve, polygonal_interpolation, BuiltinCurve};
    use std::f64::consts::PI;

    #[test]
    fn closest_point_on_curve_is_identity() {
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: 0.25 }).unwrap();
        let p = curve.component(0).eval(0.3);
        let cp = closest_point(&curve, p).unwrap();
        assert!(cp.signed_distance.abs() < 1e-12);
        assert!(dist(cp.point, p) < 1e-10);
    }

    #[test]
    fn segment_vertical_drop() {
        let curve = make_builtin_curve(BuiltinCurve::Segment).unwrap();
        let cp = closest_point(&curve, [0.5, 0.6]).unwrap();
        assert!(dist(cp.point, [0.5, 0.5]) < 1e-12);
        assert!((cp.signed_distance.abs() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn circle_radial_distance() {
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: 0.25 }).unwrap();
        // a point at distance 0.3 from the center projects radially
        let x = [0.5 + 0.3 * 0.6, 0.5 + 0.3 * 0.8];
        let cp = closest_point(&curve, x).unwrap();
        assert!((cp.signed_distance.abs() - 0.05).abs() < 1e-10);
    }

    #[test]
    fn center_of_circle_is_ambiguous() {
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: 0.25 }).unwrap();
        assert!(matches!(
            closest_point(&curve, [0.5, 0.5]),
            Err(Error::AmbiguousProjection(_))
        ));
    }

    #[test]
    fn straight_polygon_has_zero_distance() {
        let curve = make_builtin_curve(BuiltinCurve::Segment).unwrap();
        let poly = polygonal_interpolation(&curve, 0.13).unwrap();
        let sup = sup_distance(&curve, &poly, 16).unwrap();
        assert!(sup <= 1e-12, "sup = {sup:e}");
        let dev = measure_quotient_dev(&curve, &poly).unwrap();
        assert!(dev <= 1e-12, "dev = {dev:e}");
    }

    #[test]
    fn circle_sagitta_matches_formula() {
        let r = 0.25;
        let total = PI / 2.0;
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: r }).unwrap();
        for m in [16usize, 32] {
            let poly = polygonal_interpolation(&curve, total / m as f64).unwrap();
            assert_eq!(poly.component(0).n_segments(), m);
            let sup = sup_distance(&curve, &poly, 16).unwrap();
            let sagitta = r * (1.0 - (PI / m as f64).cos());
            assert!(
                (sup - sagitta).abs() <= 0.01 * sagitta,
                "m={m}: sup {sup:e} vs sagitta {sagitta:e}"
            );
        }
    }

    #[test]
    fn circle_measure_quotient_matches_chord_over_arc() {
        let r = 0.25;
        let total = PI / 2.0;
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: r }).unwrap();
        for m in [16usize, 64] {
            let poly = polygonal_interpolation(&curve, total / m as f64).unwrap();
            assert_eq!(poly.component(0).n_segments(), m);
            let dev = measure_quotient_dev(&curve, &poly).unwrap();
            let x = PI / m as f64;
            let expected = 1.0 - x.sin() / x;
            assert!(
                (dev - expected).abs() <= 0.01 * expected,
                "m={m}: dev {dev:e} vs {expected:e}"
            );
        }
    }

    #[test]
    fn halving_sigma_quarters_both_measures() {
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: 0.25 }).unwrap();
        let coarse = polygonal_interpolation(&curve, 0.1).unwrap();
        let sigma_half = coarse.sigma() / 2.0;
        let fine = polygonal_interpolation(&curve, sigma_half + 1e-13).unwrap();
        let (s0, s1) = (
            sup_distance(&curve, &coarse, 16).unwrap(),
            sup_distance(&curve, &fine, 16).unwrap(),
        );
        assert!((s0 / s1 - 4.0).abs() <= 0.4, "sup ratio {}", s0 / s1);
        let (d0, d1) = (
            measure_quotient_dev(&curve, &coarse).unwrap(),
            measure_quotient_dev(&curve, &fine).unwrap(),
        );
        assert!((d0 / d1 - 4.0).abs() <= 0.4, "dev ratio {}", d0 / d1);
    }

    #[test]
    fn lift_is_identity_on_straight_curves() {
        let curve = make_builtin_curve(BuiltinCurve::Segment).unwrap();
        let poly = polygonal_interpolation(&curve, 0.1).unwrap();
        let params: Vec<(usize, f64)> = (0..=20).map(|i| (0, i as f64 / 20.0)).collect();
        // linear-in-x1 data is reproduced exactly through the lift
        let vals = lift_values(&curve, &poly, |_, _, _, p| 3.0 * p[0] - 1.0, &params).unwrap();
        for (v, &(_, t)) in vals.iter().zip(&params) {
            let x1 = 0.25 + 0.5 * t;
            assert!((v - (3.0 * x1 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_preserves_constants() {
        let curve = make_builtin_curve(BuiltinCurve::spiral_default()).unwrap();
        let poly = polygonal_interpolation(&curve, 0.05).unwrap();
        let params: Vec<(usize, f64)> = (0..=50).map(|i| (0, i as f64 / 50.0)).collect();
        let vals = lift_values(&curve, &poly, |_, _, _, _| 7.5, &params).unwrap();
        assert!(vals.iter().all(|&v| (v - 7.5).abs() < 1e-14));
    }

    #[test]
    fn radial_lift_of_angle_linear_function() {
        // on a circle, a function linear in the polygon's angular position
        // lifts to the value at the projected angle
        let r = 0.25;
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: r }).unwrap();
        let poly = polygonal_interpolation(&curve, 0.02).unwrap();
        let angle_of = |p: [f64; 2]| (p[1] - 0.5).atan2(p[0] - 0.5);
        let params: Vec<(usize, f64)> = (1..100).map(|i| (0, i as f64 / 100.0)).collect();
        let vals = lift_values(&curve, &poly, |_, _, _, p| angle_of(p), &params).unwrap();
        for (v, &(_, t)) in vals.iter().zip(&params) {
            let c = curve.component(0).eval(t);
            // radial projection preserves the angle
            let want = angle_of(c);
            let diff = (v - want).abs();
            assert!(diff < 1e-10 || (diff - 2.0 * PI).abs() < 1e-10, "t={t}: {diff:e}");
        }
    }

    #[test]
    fn geometry_report_degenerates_for_straight_curve() {
        let curve = make_builtin_curve(BuiltinCurve::Segment).unwrap();
        let poly = polygonal_interpolation(&curve, 0.1).unwrap();
        let g = |_: usize, _: f64, p: [f64; 2]| p[0];
        let report = geometry_report(&curve, &poly, g).unwrap();
        assert!(report.sup_distance <= 1e-12);
        assert!(report.measure_quotient_dev <= 1e-12);
        assert!(report.data_interp_error <= 1e-12);
    }

    #[test]
    fn smooth_data_interpolation_error_is_second_order() {
        let curve = make_builtin_curve(BuiltinCurve::Circle { radius: 0.25 }).unwrap();
        let g = |_: usize, _: f64, p: [f64; 2]| (3.0 * PI * p[0]).sin();
        let mut errors = vec![];
        let mut sigma = 0.1;
        for _ in 0..3 {
            let poly = polygonal_interpolation(&curve, sigma).unwrap();
            let nodal = crate::geometry::interpolate_surface_data(g, &poly);
            errors.push(data_interp_error(&curve, &poly, g, &nodal).unwrap());
            sigma /= 2.0;
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() <= 0.6, "ratio {ratio}");
        }
    }
}
