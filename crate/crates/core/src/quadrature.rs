//! Gauss-Legendre quadrature over intervals, triangles (Duffy map) and
//! low-dimensional polytopes, with adaptive order doubling. All nodes are
//! strictly interior, so integrands may blow up in derivative (not value)
//! at the boundary.

use thiserror::Error;

use crate::polytope::DelzantPolytope;
use crate::rational::rvec_to_f64;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge (estimate {estimate}, error bound {error})")]
    NotConverged { estimate: f64, error: f64 },
    #[error("quadrature over dimension {0} polytopes is not implemented")]
    UnsupportedDimension(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub initial_order: usize,
    pub max_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-6, initial_order: 8, max_order: 128 }
    }
}

/// Nodes and weights on [-1, 1] by Newton iteration on the Legendre
/// polynomial, seeded with the Chebyshev estimate.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn integrate_interval(f: &dyn Fn(f64) -> f64, a: f64, b: f64, order: usize) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(order).iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Tensor rule on the triangle (v0, v1, v2) through the Duffy map
/// `T(u,v) = v0 + u (v1-v0) + u v (v2-v1)`, Jacobian `u det(v1-v0, v2-v1)`.
pub fn integrate_triangle(
    f: &dyn Fn(&[f64]) -> f64,
    v0: &[f64; 2],
    v1: &[f64; 2],
    v2: &[f64; 2],
    order: usize,
) -> f64 {
    let e1 = [v1[0] - v0[0], v1[1] - v0[1]];
    let e2 = [v2[0] - v1[0], v2[1] - v1[1]];
    let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    if det == 0.0 {
        return 0.0;
    }
    let rule = gauss_legendre(order);
    let mut total = 0.0;
    for &(xu, wu) in &rule {
        let u = 0.5 * (xu + 1.0);
        for &(xv, wv) in &rule {
            let v = 0.5 * (xv + 1.0);
            let p = [v0[0] + u * e1[0] + u * v * e2[0], v0[1] + u * e1[1] + u * v * e2[1]];
            total += wu * wv * u * f(&p);
        }
    }
    total * det * 0.25
}

/// Boundary vertices of a 2D polytope in counterclockwise order.
pub fn ordered_polygon(p: &DelzantPolytope) -> Vec<[f64; 2]> {
    assert_eq!(p.dim(), 2);
    let mut pts: Vec<[f64; 2]> = p
        .vertices()
        .iter()
        .map(|v| {
            let f = rvec_to_f64(v);
            [f[0], f[1]]
        })
        .collect();
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
    pts.sort_by(|a, b| {
        let aa = (a[1] - cy).atan2(a[0] - cx);
        let ab = (b[1] - cy).atan2(b[0] - cx);
        aa.partial_cmp(&ab).unwrap()
    });
    pts
}

/// Sutherland-Hodgman clip of a convex polygon against `n.x >= c`.
pub fn clip_polygon_halfplane(poly: &[[f64; 2]], n: &[f64; 2], c: f64) -> Vec<[f64; 2]> {
    let inside = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] >= c;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let ia = inside(&a);
        let ib = inside(&b);
        if ia {
            out.push(a);
        }
        if ia != ib {
            let da = n[0] * a[0] + n[1] * a[1] - c;
            let db = n[0] * b[0] + n[1] * b[1] - c;
            let t = da / (da - db);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Fixed-order integral over a convex polygon by centroid fan triangulation.
pub fn integrate_polygon(f: &dyn Fn(&[f64]) -> f64, poly: &[[f64; 2]], order: usize) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len() as f64;
    let c = [
        poly.iter().map(|p| p[0]).sum::<f64>() / n,
        poly.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let mut total = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        total += integrate_triangle(f, &c, &a, &b, order);
    }
    total
}

/// Adaptive integral over a polygon: double the order until the relative
/// change drops below `spec.rel_tol`. Returns (value, error estimate).
pub fn integrate_polygon_adaptive(
    f: &dyn Fn(&[f64]) -> f64,
    poly: &[[f64; 2]],
    spec: &QuadratureSpec,
) -> Result<(f64, f64), QuadratureError> {
    adaptive(spec, |order| integrate_polygon(f, poly, order))
}

/// Composite Gauss-Legendre on [a, b]: fixed order per panel, doubling the
/// panel count until the relative change drops below `spec.rel_tol`.
/// Resolves sharply concentrated integrands that a single global rule of
/// capped order cannot.
pub fn integrate_interval_adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), QuadratureError> {
    let order = 16;
    let eval = |panels: usize| -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels).map(|i| integrate_interval(f, a + i as f64 * h, a + (i + 1) as f64 * h, order)).sum()
    };
    let mut panels = 4;
    let mut prev = eval(panels);
    while panels * 2 <= 512 {
        panels *= 2;
        let cur = eval(panels);
        let err = (cur - prev).abs();
        if err <= spec.rel_tol * cur.abs().max(1e-300) {
            return Ok((cur, err));
        }
        prev = cur;
    }
    Err(QuadratureError::NotConverged { estimate: prev, error: f64::NAN })
}

/// Adaptive integral over a 1D or 2D polytope.
pub fn integrate_polytope(
    p: &DelzantPolytope,
    f: &dyn Fn(&[f64]) -> f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), QuadratureError> {
    match p.dim() {
        1 => {
            let mut ends: Vec<f64> = p.vertices().iter().map(|v| rvec_to_f64(v)[0]).collect();
            ends.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let g = |x: f64| f(&[x]);
            adaptive(spec, |order| integrate_interval(&g, ends[0], ends[1], order))
        }
        2 => {
            let poly = ordered_polygon(p);
            integrate_polygon_adaptive(f, &poly, spec)
        }
        d => Err(QuadratureError::UnsupportedDimension(d)),
    }
}

fn adaptive(
    spec: &QuadratureSpec,
    eval: impl Fn(usize) -> f64,
) -> Result<(f64, f64), QuadratureError> {
    let mut order = spec.initial_order.max(2);
    let mut prev = eval(order);
    while order * 2 <= spec.max_order {
        order *= 2;
        let cur = eval(order);
        let err = (cur - prev).abs();
        let scale = cur.abs().max(1e-300);
        if err <= spec.rel_tol * scale {
            return Ok((cur, err));
        }
        prev = cur;
    }
    let cur = prev;
    Err(QuadratureError::NotConverged { estimate: cur, error: f64::NAN })
}
