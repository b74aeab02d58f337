//! Smooth parametric curves in the unit square, interpolating polygonal
//! curves, and the normal-line lift connecting the two.

mod lift;
mod polygonal;

pub use lift::{
    closest_point, data_interp_error, geometry_report, lift_hit, lift_values,
    measure_quotient_dev, sup_distance, ClosestPoint, GeometryReport, LiftHit,
};
pub use polygonal::{interpolate_surface_data, polygonal_interpolation, PolygonalCurve};

use crate::{Error, Result};
use std::sync::Arc;

/// Minimum distance the curve must keep from the boundary of the square.
pub const CURVE_CLEARANCE: f64 = 1e-6;

/// Arclength tables subdivide the parameter range this finely; each cell is
/// integrated with 16-point Gauss, so table error is far below 1e-12.
const ARCLENGTH_CELLS: usize = 256;

type CurveFn = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

/// One connected component of a curve: a regular parametrization over
/// `[0, 1]` with its derivative and a cumulative arclength table.
#[derive(Clone)]
pub struct CurveComponent {
    pos: CurveFn,
    deriv: CurveFn,
    closed: bool,
    cum_len: Vec<f64>, // cumulative arclength at i / ARCLENGTH_CELLS
}

impl CurveComponent {
    fn new(pos: CurveFn, deriv: CurveFn, closed: bool) -> Result<Self> {
        let speed = |t: f64| {
            let d = deriv(t);
            (d[0] * d[0] + d[1] * d[1]).sqrt()
        };
        let mut cum_len = Vec::with_capacity(ARCLENGTH_CELLS + 1);
        cum_len.push(0.0);
        let mut acc = 0.0;
        for i in 0..ARCLENGTH_CELLS {
            let a = i as f64 / ARCLENGTH_CELLS as f64;
            let b = (i + 1) as f64 / ARCLENGTH_CELLS as f64;
            acc += crate::quad::integrate_gauss(16, a, b, speed);
            cum_len.push(acc);
        }
        let component = CurveComponent {
            pos,
            deriv,
            closed,
            cum_len,
        };
        component.validate()?;
        Ok(component)
    }

    fn validate(&self) -> Result<()> {
        if self.closed {
            let a = self.eval(0.0);
            let b = self.eval(1.0);
            if dist(a, b) > 1e-12 {
                return Err(Error::InvalidArgument(
                    "closed component does not return to its start point".into(),
                ));
            }
        }
        for i in 0..=2048 {
            let t = i as f64 / 2048.0;
            let d = self.deriv(t);
            let speed = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if speed <= 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "parametrization is singular at t = {t}"
                )));
            }
            let p = self.eval(t);
            let clearance = p[0].min(1.0 - p[0]).min(p[1]).min(1.0 - p[1]);
            if clearance < CURVE_CLEARANCE {
                return Err(Error::InvalidArgument(format!(
                    "curve point ({}, {}) is within {CURVE_CLEARANCE} of the boundary",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> [f64; 2] {
        (self.pos)(t)
    }

    pub fn deriv(&self, t: f64) -> [f64; 2] {
        (self.deriv)(t)
    }

    /// Unit normal: the tangent rotated by -90 degrees. For a
    /// counterclockwise circle this points outward.
    pub fn normal(&self, t: f64) -> [f64; 2] {
        let d = self.deriv(t);
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        [d[1] / len, -d[0] / len]
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn length(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    /// Arclength from 0 to `t`.
    pub fn arclength(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let scaled = t * ARCLENGTH_CELLS as f64;
        let cell = (scaled.floor() as usize).min(ARCLENGTH_CELLS - 1);
        let a = cell as f64 / ARCLENGTH_CELLS as f64;
        let speed = |s: f64| {
            let d = self.deriv(s);
            (d[0] * d[0] + d[1] * d[1]).sqrt()
        };
        self.cum_len[cell] + crate::quad::integrate_gauss(16, a, t, speed)
    }

    /// Inverse of [`CurveComponent::arclength`]: the parameter with the given
    /// cumulative arclength, by bisection of the table and Newton refinement.
    pub fn param_at_arclength(&self, s: f64) -> f64 {
        let total = self.length();
        let s = s.clamp(0.0, total);
        if s == 0.0 {
            return 0.0;
        }
        if s == total {
            return 1.0;
        }
        let cell = match self
            .cum_len
            .binary_search_by(|probe| probe.partial_cmp(&s).unwrap())
        {
            Ok(i) => return i as f64 / ARCLENGTH_CELLS as f64,
            Err(i) => i - 1,
        };
        let mut lo = cell as f64 / ARCLENGTH_CELLS as f64;
        let mut hi = (cell + 1) as f64 / ARCLENGTH_CELLS as f64;
        let mut t = lo + (hi - lo) * (s - self.cum_len[cell])
            / (self.cum_len[cell + 1] - self.cum_len[cell]).max(f64::MIN_POSITIVE);
        for _ in 0..60 {
            let f = self.arclength(t) - s;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            if f.abs() < 1e-15 * total.max(1.0) {
                break;
            }
            let d = self.deriv(t);
            let speed = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let mut next = t - f / speed;
            if !(lo..=hi).contains(&next) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() < 1e-16 {
                break;
            }
            t = next;
        }
        t
    }
}

/// A smooth curve inside the open unit square, possibly with several
/// connected components. Immutable; queries are pure.
#[derive(Clone)]
pub struct ParametricCurve {
    components: Vec<CurveComponent>,
}

impl ParametricCurve {
    pub fn from_components(components: Vec<CurveComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("curve needs a component".into()));
        }
        Ok(ParametricCurve { components })
    }

    pub fn components(&self) -> &[CurveComponent] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &CurveComponent {
        &self.components[i]
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(|c| c.length()).sum()
    }
}

impl std::fmt::Debug for ParametricCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametricCurve")
            .field("components", &self.components.len())
            .field("total_length", &self.total_length())
            .finish()
    }
}

impl std::fmt::Debug for CurveComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurveComponent")
            .field("closed", &self.closed)
            .field("length", &self.length())
            .finish()
    }
}

/// Default radial growth rate of the built-in spiral; together with the
/// parameter range it sweeps half a turn out to radius ~0.4.
pub const SPIRAL_SCALE: f64 = 0.1273;
/// Default parameter range (in radians) of the built-in spiral.
pub const SPIRAL_T_MAX: f64 = 3.159;

/// Built-in curves used by the experiment presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinCurve {
    /// Horizontal segment from (0.25, 0.5) to (0.75, 0.5).
    Segment,
    /// Circle centered at (0.5, 0.5).
    Circle { radius: f64 },
    /// `(0.5 + c t sin t, 0.5 + c t cos t)` for `t` in `(0, t_max)`.
    Spiral { scale: f64, t_max: f64 },
    /// `count` open radial segments from the center, equally spaced in
    /// angle, spanning radii `[inner, outer]`.
    Spokes { inner: f64, outer: f64, count: usize },
}

impl BuiltinCurve {
    pub fn spiral_default() -> Self {
        BuiltinCurve::Spiral {
            scale: SPIRAL_SCALE,
            t_max: SPIRAL_T_MAX,
        }
    }

    pub fn spokes_default() -> Self {
        BuiltinCurve::Spokes {
            inner: 0.02,
            outer: 0.4,
            count: 6,
        }
    }
}

/// Construct one of the built-in curves.
pub fn make_builtin_curve(kind: BuiltinCurve) -> Result<ParametricCurve> {
    match kind {
        BuiltinCurve::Segment => {
            let pos: CurveFn = Arc::new(|t| [0.25 + 0.5 * t, 0.5]);
            let deriv: CurveFn = Arc::new(|_| [0.5, 0.0]);
            ParametricCurve::from_components(vec![CurveComponent::new(pos, deriv, false)?])
        }
        BuiltinCurve::Circle { radius } => {
            if radius <= 0.0 || radius >= 0.5 - CURVE_CLEARANCE {
                return Err(Error::InvalidArgument(format!(
                    "circle radius {radius} does not fit inside the square"
                )));
            }
            let tau = std::f64::consts::TAU;
            let pos: CurveFn =
                Arc::new(move |t| [0.5 + radius * (tau * t).cos(), 0.5 + radius * (tau * t).sin()]);
            let deriv: CurveFn = Arc::new(move |t| {
                [
                    -radius * tau * (tau * t).sin(),
                    radius * tau * (tau * t).cos(),
                ]
            });
            ParametricCurve::from_components(vec![CurveComponent::new(pos, deriv, true)?])
        }
        BuiltinCurve::Spiral { scale, t_max } => {
            if scale <= 0.0 || t_max <= 0.0 {
                return Err(Error::InvalidArgument("spiral parameters must be positive".into()));
            }
            let pos: CurveFn = Arc::new(move |s| {
                let t = s * t_max;
                [0.5 + scale * t * t.sin(), 0.5 + scale * t * t.cos()]
            });
            let deriv: CurveFn = Arc::new(move |s| {
                let t = s * t_max;
                [
                    scale * t_max * (t.sin() + t * t.cos()),
                    scale * t_max * (t.cos() - t * t.sin()),
                ]
            });
            ParametricCurve::from_components(vec![CurveComponent::new(pos, deriv, false)?])
        }
        BuiltinCurve::Spokes {
            inner,
            outer,
            count,
        } => {
            if !(0.0 < inner && inner < outer) || count == 0 {
                return Err(Error::InvalidArgument("invalid spoke radii".into()));
            }
            if outer >= 0.5 - CURVE_CLEARANCE {
                return Err(Error::InvalidArgument(format!(
                    "spoke outer radius {outer} does not fit inside the square"
                )));
            }
            let mut components = Vec::with_capacity(count);
            for k in 0..count {
                let angle = std::f64::consts::TAU * k as f64 / count as f64;
                let dir = [angle.cos(), angle.sin()];
                let span = outer - inner;
                let pos: CurveFn = Arc::new(move |t| {
                    let r = inner + span * t;
                    [0.5 + r * dir[0], 0.5 + r * dir[1]]
                });
                let deriv: CurveFn = Arc::new(move |_| [span * dir[0], span * dir[1]]);
                components.push(CurveComponent::new(pos, deriv, false)?);
            }
            ParametricCurve::from_components(components)
        }
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_midpoint() {
        let c = make_builtin_curve(BuiltinCurve::Segment).unwrap();
        let p = c.component(0).eval(0.5);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!((c.total_length() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn circle_arclength() {
        let c = make_builtin_curve(BuiltinCurve::Circle { radius: 0.25 }).unwrap();
        assert!((c.total_length() - std::f64::consts::PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn spiral_starts_at_center_and_moves_radially() {
        let c = make_builtin_curve(BuiltinCurve::spiral_default()).unwrap();
        let comp = c.component(0);
        let start = comp.eval(0.0);
        assert!((start[0] - 0.5).abs() < 1e-15 && (start[1] - 0.5).abs() < 1e-15);
        // at physical t = pi/2 the point is at (0.5 + scale*pi/2, 0.5)
        let s = std::f64::consts::FRAC_PI_2 / SPIRAL_T_MAX;
        let p = comp.eval(s);
        assert!((p[0] - (0.5 + SPIRAL_SCALE * std::f64::consts::FRAC_PI_2)).abs() < 1e-14);
        assert!((p[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn curves_stay_inside_the_square() {
        for kind in [
            BuiltinCurve::Segment,
            BuiltinCurve::Circle { radius: 0.25 },
            BuiltinCurve::spiral_default(),
            BuiltinCurve::spokes_default(),
        ] {
            let c = make_builtin_curve(kind).unwrap();
            for comp in c.components() {
                for i in 0..=512 {
                    let p = comp.eval(i as f64 / 512.0);
                    assert!(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0);
                }
            }
        }
    }

    #[test]
    fn oversized_circle_rejected() {
        assert!(matches!(
            make_builtin_curve(BuiltinCurve::Circle { radius: 0.5 }),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn arclength_inverse_round_trip() {
        let c = make_builtin_curve(BuiltinCurve::spiral_default()).unwrap();
        let comp = c.component(0);
        for i in 0..=40 {
            let t = i as f64 / 40.0;
            let s = comp.arclength(t);
            let back = comp.param_at_arclength(s);
            assert!((back - t).abs() < 1e-11, "t={t} back={back}");
        }
    }

    #[test]
    fn normal_is_unit_and_orthogonal() {
        let c = make_builtin_curve(BuiltinCurve::Circle { radius: 0.3 }).unwrap();
        let comp = c.component(0);
        for i in 0..16 {
            let t = i as f64 / 16.0;
            let n = comp.normal(t);
            let d = comp.deriv(t);
            assert!((n[0] * n[0] + n[1] * n[1] - 1.0).abs() < 1e-13);
            assert!((n[0] * d[0] + n[1] * d[1]).abs() < 1e-12);
        }
        // outward for the counterclockwise circle
        let n = comp.normal(0.0);
        assert!(n[0] > 0.99);
    }

    #[test]
    fn spokes_have_six_components() {
        let c = make_builtin_curve(BuiltinCurve::spokes_default()).unwrap();
        assert_eq!(c.n_components(), 6);
        for comp in c.components() {
            assert!(!comp.is_closed());
            assert!((comp.length() - 0.38).abs() < 1e-12);
        }
    }
}
