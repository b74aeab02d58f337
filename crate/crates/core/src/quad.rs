//! Quadrature rules: Gauss–Legendre on intervals and symmetric rules on
//! triangles in barycentric form.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
/// iteration from Chebyshev initial guesses; accurate to machine precision
/// for the orders used here (n <= 64).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_{n-1} by the three-term recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&u| u * half).collect(),
    )
}

/// Integrate `f` over `[a, b]` with an `n`-point Gauss rule.
pub fn integrate_gauss(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre_on(n, a, b);
    x.iter().zip(&w).map(|(&t, &u)| u * f(t)).sum()
}

/// A quadrature point on a triangle: barycentric coordinates and a weight.
/// Weights sum to 1; integrals are `area * sum(w_q f(x_q))`.
pub type TriPoint = ([f64; 3], f64);

/// 3-point rule, exact for polynomials of degree 2 (edge midpoints).
pub const TRI_ORDER2: [TriPoint; 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// 6-point rule, exact for polynomials of degree 4.
pub const TRI_ORDER4: [TriPoint; 6] = {
    const A: f64 = 0.445_948_490_915_965;
    const WA: f64 = 0.223_381_589_678_011;
    const B: f64 = 0.091_576_213_509_771;
    const WB: f64 = 0.109_951_743_655_322;
    [
        ([1.0 - 2.0 * A, A, A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([A, A, 1.0 - 2.0 * A], WA),
        ([1.0 - 2.0 * B, B, B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([B, B, 1.0 - 2.0 * B], WB),
    ]
};

/// 12-point rule, exact for polynomials of degree 6.
pub const TRI_ORDER6: [TriPoint; 12] = {
    const A: f64 = 0.063_089_014_491_502;
    const WA: f64 = 0.050_844_906_370_207;
    const B: f64 = 0.249_286_745_170_910;
    const WB: f64 = 0.116_786_275_726_379;
    const C: f64 = 0.053_145_049_844_816;
    const D: f64 = 0.310_352_451_033_785;
    const WC: f64 = 0.082_851_075_618_374;
    const E: f64 = 1.0 - C - D;
    [
        ([1.0 - 2.0 * A, A, A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([A, A, 1.0 - 2.0 * A], WA),
        ([1.0 - 2.0 * B, B, B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([C, D, E], WC),
        ([D, E, C], WC),
        ([E, C, D], WC),
        ([C, E, D], WC),
        ([D, C, E], WC),
        ([E, D, C], WC),
    ]
};

/// Simpson weights on a segment (endpoints, midpoint): exact for quadratics.
pub const SIMPSON: [(f64, f64); 3] = [(0.0, 1.0 / 6.0), (0.5, 4.0 / 6.0), (1.0, 1.0 / 6.0)];
