//! The symplectic potential family `g_s = g_P + phi + s psi` and its
//! Legendre maps: forward/inverse gradient maps of `psi`, the rescaled
//! transforms `kappa_s` and their inverses, the dual potential, and the
//! complex-structure/metric block matrices.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{self, Matrix};
use crate::polytope::DelzantPolytope;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("evaluation on or outside the boundary: l_{facet} = {value}")]
    BoundaryEvaluation { facet: usize, value: f64 },
    #[error("Hessian is not positive definite (min eigenvalue {0})")]
    NonConvex(f64),
    #[error("Newton iteration diverged (residual {residual})")]
    NewtonDiverged { best: Vec<f64>, residual: f64 },
    #[error("target point is not in the image of the gradient map")]
    NotInImage,
    #[error("Newton iteration did not reach tolerance (residual {residual})")]
    MaxIterationsExceeded { best: Vec<f64>, residual: f64 },
}

/// Second-order jet: value, gradient and (symmetric) Hessian.
#[derive(Debug, Clone)]
pub struct Jet2<S> {
    pub value: S,
    pub gradient: Vec<S>,
    pub hessian: Matrix<S>,
}

impl<S: Scalar> Jet2<S> {
    pub fn zero(n: usize) -> Self {
        Jet2 { value: S::zero(), gradient: vec![S::zero(); n], hessian: Matrix::zeros(n, n) }
    }

    pub fn add(&self, other: &Jet2<S>) -> Jet2<S> {
        Jet2 {
            value: self.value + other.value,
            gradient: linalg::add(&self.gradient, &other.gradient),
            hessian: self.hessian.add_mat(&other.hessian),
        }
    }

    pub fn scaled(&self, c: S) -> Jet2<S> {
        Jet2 {
            value: self.value * c,
            gradient: linalg::scale(&self.gradient, c),
            hessian: self.hessian.scale_mat(c),
        }
    }
}

type JetFn<S> = dyn Fn(&[S]) -> Jet2<S> + Send + Sync;

/// A smooth convex function on a neighborhood of the polytope.
#[derive(Clone)]
pub enum ConvexFunction<S> {
    Zero,
    /// `x^t G x / 2 + b^t x` with `G` symmetric positive definite.
    Quadratic { g: Matrix<S>, b: Vec<S> },
    /// `x^2/2 + ||x||^4/4`.
    QuarticRadial,
    /// User-supplied jet evaluator; Hessians are symmetrized before use.
    Custom(Arc<JetFn<S>>),
}

impl<S: std::fmt::Debug> std::fmt::Debug for ConvexFunction<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConvexFunction::Zero => write!(f, "Zero"),
            ConvexFunction::Quadratic { g, b } => write!(f, "Quadratic {{ g: {g:?}, b: {b:?} }}"),
            ConvexFunction::QuarticRadial => write!(f, "QuarticRadial"),
            ConvexFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl<S: Scalar> ConvexFunction<S> {
    /// Validated quadratic; `G` is symmetrized and must be positive definite.
    pub fn quadratic(mut g: Matrix<S>, b: Vec<S>) -> Result<Self, PotentialError> {
        g.symmetrize();
        let min = g.min_eigenvalue();
        if min <= S::zero() {
            return Err(PotentialError::NonConvex(min.to_f64_lossy()));
        }
        Ok(ConvexFunction::Quadratic { g, b })
    }

    pub fn custom(f: impl Fn(&[S]) -> Jet2<S> + Send + Sync + 'static) -> Self {
        ConvexFunction::Custom(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ConvexFunction::Zero)
    }

    pub fn jet(&self, x: &[S]) -> Jet2<S> {
        let n = x.len();
        match self {
            ConvexFunction::Zero => Jet2::zero(n),
            ConvexFunction::Quadratic { g, b } => {
                let gx = g.mul_vec(x);
                let half = S::from_f64_lossy(0.5);
                Jet2 {
                    value: linalg::dot(x, &gx) * half + linalg::dot(b, x),
                    gradient: linalg::add(&gx, b),
                    hessian: g.clone(),
                }
            }
            ConvexFunction::QuarticRadial => {
                let r2 = linalg::dot(x, x);
                let half = S::from_f64_lossy(0.5);
                let quarter = S::from_f64_lossy(0.25);
                let one = S::one();
                let two = S::from_f64_lossy(2.0);
                let value = half * r2 + quarter * r2 * r2;
                let gradient: Vec<S> = x.iter().map(|&xi| (one + r2) * xi).collect();
                // Hess = (1 + r^2) I + 2 x x^t
                let mut hessian = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut h = two * x[i] * x[j];
                        if i == j {
                            h += one + r2;
                        }
                        hessian[(i, j)] = h;
                    }
                }
                Jet2 { value, gradient, hessian }
            }
            ConvexFunction::Custom(f) => {
                let mut jet = f(x);
                jet.hessian.symmetrize();
                jet
            }
        }
    }

    pub fn value(&self, x: &[S]) -> S {
        self.jet(x).value
    }

    pub fn gradient(&self, x: &[S]) -> Vec<S> {
        self.jet(x).gradient
    }

    /// Inverse of the gradient map by damped Newton, starting from `x0`.
    pub fn grad_inverse(&self, u: &[S], x0: &[S]) -> Result<Vec<S>, PotentialError> {
        let tol = S::from_f64_lossy(1e-10);
        let mut x = x0.to_vec();
        let mut best = x.clone();
        let mut best_res = S::infinity();
        for _ in 0..200 {
            let jet = self.jet(&x);
            let res = linalg::sub(&jet.gradient, u);
            let rn = linalg::norm2(&res);
            if rn < best_res {
                best_res = rn;
                best = x.clone();
            }
            if rn <= tol {
                return Ok(x);
            }
            let step = jet
                .hessian
                .solve(&res)
                .ok_or(PotentialError::NonConvex(f64::NAN))?;
            // Backtrack until the residual norm decreases.
            let mut t = S::one();
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<S> =
                    x.iter().zip(&step).map(|(xi, si)| *xi - t * *si).collect();
                let cr = linalg::norm2(&linalg::sub(&self.jet(&cand).gradient, u));
                if cr < rn {
                    x = cand;
                    accepted = true;
                    break;
                }
                t = t * S::from_f64_lossy(0.5);
            }
            if !accepted {
                return Err(PotentialError::NewtonDiverged {
                    best: to_f64_vec(&best),
                    residual: best_res.to_f64_lossy(),
                });
            }
            if linalg::norm2(&x) > S::from_f64_lossy(1e12) {
                return Err(PotentialError::NotInImage);
            }
        }
        Err(PotentialError::MaxIterationsExceeded {
            best: to_f64_vec(&best),
            residual: best_res.to_f64_lossy(),
        })
    }

    /// Legendre conjugate `h(u) = x(u)^t u - f(x(u))` with `grad f(x(u)) = u`.
    pub fn conjugate(&self, u: &[S], x0: &[S]) -> Result<S, PotentialError> {
        let x = self.grad_inverse(u, x0)?;
        Ok(linalg::dot(&x, u) - self.value(&x))
    }
}

/// Facet value `l_r(x)` in the working scalar.
fn ell<S: Scalar>(p: &DelzantPolytope, r: usize, x: &[S]) -> S {
    let f = &p.facets()[r];
    let mut s = -S::from_f64_lossy(f.offset as f64);
    for (&n, xi) in f.normal.iter().zip(x) {
        s += S::from_f64_lossy(n as f64) * *xi;
    }
    s
}

/// Guillemin potential jet `g_P = (1/2) sum_r l_r log l_r` at an interior point.
pub fn eval_gp<S: Scalar>(p: &DelzantPolytope, x: &[S]) -> Result<Jet2<S>, PotentialError> {
    let n = p.dim();
    let half = S::from_f64_lossy(0.5);
    let mut jet = Jet2::zero(n);
    for r in 0..p.facets().len() {
        let l = ell(p, r, x);
        if l <= S::zero() {
            return Err(PotentialError::BoundaryEvaluation { facet: r, value: l.to_f64_lossy() });
        }
        let log = l.ln();
        jet.value += half * l * log;
        let nu: Vec<S> =
            p.facets()[r].normal.iter().map(|&c| S::from_f64_lossy(c as f64)).collect();
        for i in 0..n {
            jet.gradient[i] += half * nu[i] * (S::one() + log);
            for j in 0..n {
                jet.hessian[(i, j)] += half * nu[i] * nu[j] / l;
            }
        }
    }
    Ok(jet)
}

/// The family `g_s = g_P + phi + s psi` over a fixed polytope.
#[derive(Debug, Clone)]
pub struct PotentialFamily<S> {
    pub polytope: Arc<DelzantPolytope>,
    pub phi: ConvexFunction<S>,
    pub psi: ConvexFunction<S>,
}

impl<S: Scalar> PotentialFamily<S> {
    pub fn new(polytope: Arc<DelzantPolytope>, phi: ConvexFunction<S>, psi: ConvexFunction<S>) -> Self {
        PotentialFamily { polytope, phi, psi }
    }

    /// Jet of `g_P + phi` at an interior point.
    pub fn eval_g0(&self, x: &[S]) -> Result<Jet2<S>, PotentialError> {
        let gp = eval_gp(&self.polytope, x)?;
        Ok(gp.add(&self.phi.jet(x)))
    }

    /// Jet of `g_s` at an interior point.
    pub fn eval_gs(&self, s: S, x: &[S]) -> Result<Jet2<S>, PotentialError> {
        let g0 = self.eval_g0(x)?;
        Ok(g0.add(&self.psi.jet(x).scaled(s)))
    }

    /// `kappa_s(x) = grad psi(x) + grad(g_P + phi)(x) / s`.
    pub fn kappa(&self, s: S, x: &[S]) -> Result<Vec<S>, PotentialError> {
        let g0 = self.eval_g0(x)?;
        let mut out = self.psi.gradient(x);
        linalg::axpy(&mut out, S::one() / s, &g0.gradient);
        Ok(out)
    }

    /// Largest multiple of `-step` that keeps `x` at 90% distance from the
    /// nearest facet, in units of the full Newton step.
    fn clamp_factor(&self, x: &[S], step: &[S]) -> S {
        let p = &self.polytope;
        let mut t_max = S::infinity();
        for r in 0..p.facets().len() {
            let mut dl = S::zero();
            for (&n, si) in p.facets()[r].normal.iter().zip(step) {
                dl -= S::from_f64_lossy(n as f64) * *si;
            }
            if dl < S::zero() {
                let l = ell(p, r, x);
                t_max = t_max.min(-l / dl);
            }
        }
        (t_max * S::from_f64_lossy(0.9)).min(S::one())
    }

    /// Solve `kappa_s(x) = u` for the unique interior `x` by damped Newton
    /// with interior clamping. The log barrier of `g_P` guarantees a
    /// solution for every `u`.
    pub fn kappa_inv(&self, s: S, u: &[S]) -> Result<Vec<S>, PotentialError> {
        let tol = S::from_f64_lossy(1e-10);
        let mut x = self.interior_start();
        let mut best = x.clone();
        let mut best_res = S::infinity();
        // Merit function: (g_P + phi)/s + psi - <u, x>, convex with the
        // barrier keeping minimizers strictly interior.
        let merit = |x: &[S]| -> S {
            // Rounding can push a clamped candidate onto the boundary;
            // treat that as a rejected step.
            match self.eval_g0(x) {
                Ok(g0) => g0.value / s + self.psi.value(x) - linalg::dot(u, x),
                Err(_) => S::infinity(),
            }
        };
        let mut mval = merit(&x);
        for _ in 0..300 {
            let g0 = self.eval_g0(&x)?;
            let psi_jet = self.psi.jet(&x);
            let mut res = psi_jet.gradient.clone();
            linalg::axpy(&mut res, S::one() / s, &g0.gradient);
            let res = linalg::sub(&res, u);
            let rn = linalg::norm2(&res);
            if rn < best_res {
                best_res = rn;
                best = x.clone();
            }
            if rn <= tol {
                return Ok(x);
            }
            let hess = psi_jet.hessian.add_mat(&g0.hessian.scale_mat(S::one() / s));
            let step = hess.solve(&res).ok_or(PotentialError::NonConvex(f64::NAN))?;
            let mut t = self.clamp_factor(&x, &step);
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<S> =
                    x.iter().zip(&step).map(|(xi, si)| *xi - t * *si).collect();
                let cm = merit(&cand);
                if cm < mval {
                    x = cand;
                    mval = cm;
                    accepted = true;
                    break;
                }
                t = t * S::from_f64_lossy(0.5);
            }
            if !accepted {
                // Near machine precision the merit plateaus before the
                // gradient test fires; accept a damped step on residual
                // decrease instead.
                let t = self.clamp_factor(&x, &step);
                let cand: Vec<S> =
                    x.iter().zip(&step).map(|(xi, si)| *xi - t * *si).collect();
                if let Ok(g0c) = self.eval_g0(&cand) {
                    let mut resc = self.psi.jet(&cand).gradient;
                    linalg::axpy(&mut resc, S::one() / s, &g0c.gradient);
                    let resc = linalg::sub(&resc, u);
                    if linalg::norm2(&resc) < rn {
                        x = cand;
                        mval = merit(&x);
                        continue;
                    }
                }
                break;
            }
        }
        Err(PotentialError::MaxIterationsExceeded {
            best: to_f64_vec(&best),
            residual: best_res.to_f64_lossy(),
        })
    }

    /// Complex structure and metric blocks `J = [[0,-G^-1],[G,0]]`,
    /// `gamma = [[G,0],[0,G^-1]]` with `G = Hess g_s(x)`.
    pub fn complex_structure(&self, s: S, x: &[S]) -> Result<(Matrix<S>, Matrix<S>), PotentialError> {
        let n = self.polytope.dim();
        let g = self.eval_gs(s, x)?.hessian;
        let ginv = g.inverse().ok_or(PotentialError::NonConvex(f64::NAN))?;
        let mut j = Matrix::zeros(2 * n, 2 * n);
        let mut gamma = Matrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            for b in 0..n {
                j[(a, n + b)] = -ginv[(a, b)];
                j[(n + a, b)] = g[(a, b)];
                gamma[(a, b)] = g[(a, b)];
                gamma[(n + a, n + b)] = ginv[(a, b)];
            }
        }
        Ok((j, gamma))
    }

    /// Dual potential `h(u) = x(u)^t u - g_s(x(u))` where `u` is the full
    /// Legendre image `grad g_s(x(u))` (so `x(u) = kappa_s^{-1}(u/s)`).
    pub fn dual_potential(&self, s: S, u: &[S]) -> Result<S, PotentialError> {
        let scaled: Vec<S> = u.iter().map(|&c| c / s).collect();
        let x = self.kappa_inv(s, &scaled)?;
        let g = self.eval_gs(s, &x)?;
        Ok(linalg::dot(&x, u) - g.value)
    }

    pub fn interior_start(&self) -> Vec<S> {
        self.polytope
            .interior_point_f64()
            .iter()
            .map(|&c| S::from_f64_lossy(c))
            .collect()
    }
}

/// One row of the boundary regularity diagnostic.
#[derive(Debug, Clone)]
pub struct RegularitySample<S> {
    pub x: Vec<S>,
    /// `det(Hess g_s) * prod_r l_r`; should stay positive and tame.
    pub product: S,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct RegularityReport<S> {
    pub samples: Vec<RegularitySample<S>>,
    pub min_product: S,
    pub max_product: S,
}

impl<S: Scalar> RegularityReport<S> {
    pub fn any_flagged(&self) -> bool {
        self.samples.iter().any(|s| s.flagged)
    }
}

/// Evaluate `det(Hess g_s) * prod l_r` on interior samples and flag
/// non-positive values.
pub fn boundary_regularity_check<S: Scalar>(
    family: &PotentialFamily<S>,
    s: S,
    samples: &[Vec<S>],
) -> RegularityReport<S> {
    let p = &family.polytope;
    let mut rows = Vec::with_capacity(samples.len());
    let mut min_product = S::infinity();
    let mut max_product = S::neg_infinity();
    for x in samples {
        let product = match family.eval_gs(s, x) {
            Ok(jet) => {
                let mut prod = jet.hessian.det();
                for r in 0..p.facets().len() {
                    prod = prod * ell(p, r, x);
                }
                prod
            }
            Err(_) => S::nan(),
        };
        let flagged = !(product > S::zero()) || !product.is_finite();
        if product.is_finite() {
            min_product = min_product.min(product);
            max_product = max_product.max(product);
        }
        rows.push(RegularitySample { x: x.clone(), product, flagged });
    }
    RegularityReport { samples: rows, min_product, max_product }
}

fn to_f64_vec<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|c| c.to_f64_lossy()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::fixtures::{segment01, simplex};

    fn seg_family(psi: ConvexFunction<f64>) -> PotentialFamily<f64> {
        PotentialFamily::new(Arc::new(segment01()), ConvexFunction::Zero, psi)
    }

    fn psi_half_square(n: usize) -> ConvexFunction<f64> {
        ConvexFunction::quadratic(Matrix::identity(n), vec![0.0; n]).unwrap()
    }

    #[test]
    fn gp_segment_midpoint() {
        let p = segment01();
        let jet = eval_gp(&p, &[0.5]).unwrap();
        assert!((jet.value - (-(2.0f64).ln() / 2.0)).abs() < 1e-14);
        assert!(jet.gradient[0].abs() < 1e-14);
        assert!((jet.hessian[(0, 0)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gp_simplex_center() {
        let p = simplex();
        let x = [1.0 / 3.0, 1.0 / 3.0];
        let jet = eval_gp(&p, &x).unwrap();
        assert!((jet.value - (-(3.0f64).ln() / 2.0)).abs() < 1e-14);
        assert!(jet.gradient[0].abs() < 1e-13);
        assert!(jet.gradient[1].abs() < 1e-13);
        assert!(jet.hessian.is_positive_definite());
    }

    #[test]
    fn gp_boundary_rejected() {
        let p = segment01();
        assert!(matches!(
            eval_gp(&p, &[0.0]),
            Err(PotentialError::BoundaryEvaluation { facet: 0, .. })
        ));
    }

    #[test]
    fn gs_sums_jets() {
        let fam = seg_family(psi_half_square(1));
        let jet = fam.eval_gs(4.0, &[0.5]).unwrap();
        assert!((jet.hessian[(0, 0)] - 6.0).abs() < 1e-13);
        // s = 0 equals g_P when phi = 0.
        let j0 = fam.eval_gs(0.0, &[0.3]).unwrap();
        let gp = eval_gp(&fam.polytope, &[0.3]).unwrap();
        assert!((j0.value - gp.value).abs() < 1e-14);
        // Linearity in s.
        let j1 = fam.eval_gs(1.0, &[0.3]).unwrap();
        let j3 = fam.eval_gs(3.0, &[0.3]).unwrap();
        let dh = j3.hessian[(0, 0)] - j1.hessian[(0, 0)];
        assert!((dh - 2.0 * 1.0).abs() < 1e-13);
    }

    #[test]
    fn legendre_quadratic_is_affine() {
        let g = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let b = vec![0.5, -1.0];
        let psi = ConvexFunction::quadratic(g.clone(), b.clone()).unwrap();
        let x = [0.3, 0.7];
        let u = psi.gradient(&x);
        let expect = linalg::add(&g.mul_vec(&x), &b);
        assert!(linalg::norm2(&linalg::sub(&u, &expect)) < 1e-14);
        let back = psi.grad_inverse(&u, &[0.0, 0.0]).unwrap();
        assert!(linalg::norm2(&linalg::sub(&back, &x.to_vec())) < 1e-9);
    }

    #[test]
    fn legendre_identity_for_half_square() {
        let psi = psi_half_square(2);
        let x = [0.25, 0.6];
        assert_eq!(psi.gradient(&x), vec![0.25, 0.6]);
    }

    #[test]
    fn quartic_radial_inverse() {
        let psi: ConvexFunction<f64> = ConvexFunction::QuarticRadial;
        let u = psi.gradient(&[1.0, 0.0]);
        assert!((u[0] - 2.0).abs() < 1e-14 && u[1].abs() < 1e-14);
        let x = psi.grad_inverse(&[2.0, 0.0], &[0.1, 0.1]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
    }

    #[test]
    fn kappa_segment_closed_form() {
        let fam = seg_family(psi_half_square(1));
        for &s in &[1.0, 5.0, 50.0] {
            let x = 0.3;
            let k = fam.kappa(s, &[x]).unwrap()[0];
            let expect = x + (x / (1.0 - x)).ln() / (2.0 * s);
            assert!((k - expect).abs() < 1e-13);
            // Symmetry fixes the midpoint.
            assert!((fam.kappa(s, &[0.5]).unwrap()[0] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn kappa_simplex_center_fixed() {
        let fam = PotentialFamily::new(
            Arc::new(simplex()),
            ConvexFunction::Zero,
            psi_half_square(2),
        );
        for &s in &[1.0, 10.0, 1e3] {
            let k = fam.kappa(s, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
            assert!((k[0] - 1.0 / 3.0).abs() < 1e-13);
            assert!((k[1] - 1.0 / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn kappa_inv_roundtrip_and_extremes() {
        let fam = seg_family(psi_half_square(1));
        assert!((fam.kappa_inv(3.0, &[0.5]).unwrap()[0] - 0.5).abs() < 1e-10);
        for &x in &[0.1, 0.37, 0.9] {
            for &s in &[1.0, 10.0, 100.0] {
                let u = fam.kappa(s, &[x]).unwrap();
                let back = fam.kappa_inv(s, &u).unwrap();
                assert!((back[0] - x).abs() < 1e-8, "s={s} x={x} back={}", back[0]);
            }
        }
        // Outside P: solution hugs the boundary (1 - e^{-10}) but the
        // residual still closes.
        let x = fam.kappa_inv(10.0, &[1.5]).unwrap();
        assert!(x[0] > 0.999 && x[0] < 1.0);
        assert!((fam.kappa(10.0, &x).unwrap()[0] - 1.5).abs() < 1e-9);
        // So far outside that the solution 1 - e^{-80} is not representable
        // in f64: the solver reports its best iterate honestly.
        match fam.kappa_inv(10.0, &[5.0]) {
            Err(PotentialError::MaxIterationsExceeded { best, .. }) => {
                assert!(best[0] > 0.99 && best[0] < 1.0);
            }
            other => panic!("expected MaxIterationsExceeded, got {other:?}"),
        }
    }

    #[test]
    fn complex_structure_blocks() {
        let fam = seg_family(ConvexFunction::Zero);
        let (j, gamma) = fam.complex_structure(0.0, &[0.5]).unwrap();
        assert!((j[(0, 1)] + 0.5).abs() < 1e-13);
        assert!((j[(1, 0)] - 2.0).abs() < 1e-13);
        let jj = j.mul_mat(&j);
        for i in 0..2 {
            for k in 0..2 {
                let want = if i == k { -1.0 } else { 0.0 };
                assert!((jj[(i, k)] - want).abs() < 1e-10);
            }
        }
        assert!((gamma.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_of_half_square_is_half_square() {
        let psi = psi_half_square(1);
        for &u in &[-1.0, 0.0, 0.7, 2.5] {
            let h = psi.conjugate(&[u], &[0.0]).unwrap();
            assert!((h - u * u / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dual_potential_convex_and_gradient() {
        let fam = seg_family(psi_half_square(1));
        let s = 4.0;
        let h = |u: f64| fam.dual_potential(s, &[u]).unwrap();
        // Convexity on a few pairs.
        for &(u1, u2) in &[(0.0, 2.0), (-1.0, 3.0), (1.0, 1.5)] {
            let mid = h(0.5 * u1 + 0.5 * u2);
            assert!(mid <= 0.5 * h(u1) + 0.5 * h(u2) + 1e-9);
        }
        // grad h(u) = x(u) by central differences.
        let u = 1.3;
        let eps = 1e-5;
        let fd = (h(u + eps) - h(u - eps)) / (2.0 * eps);
        let x = fam.kappa_inv(s, &[u / s]).unwrap()[0];
        assert!((fd - x).abs() < 1e-6);
    }

    #[test]
    fn regularity_product_segment() {
        let fam = seg_family(ConvexFunction::Zero);
        // det(Hess g_P) * x(1-x) = 1/2 identically on (0,1).
        let samples: Vec<Vec<f64>> = [0.01, 0.2, 0.5, 0.99].iter().map(|&x| vec![x]).collect();
        let report = boundary_regularity_check(&fam, 0.0, &samples);
        for row in &report.samples {
            assert!(!row.flagged);
            assert!((row.product - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn regularity_flags_nonconvex_phi() {
        let bad = ConvexFunction::custom(|x: &[f64]| {
            let mut jet = Jet2::zero(x.len());
            jet.value = -10.0 * x[0] * x[0];
            jet.gradient[0] = -20.0 * x[0];
            jet.hessian[(0, 0)] = -20.0;
            jet
        });
        let fam = PotentialFamily::new(Arc::new(segment01()), bad, ConvexFunction::Zero);
        let report = boundary_regularity_check(&fam, 0.0, &[vec![0.5]]);
        assert!(report.any_flagged());
    }

    #[test]
    fn regularity_with_spsi_stays_bounded_near_boundary() {
        let fam = seg_family(psi_half_square(1));
        let samples: Vec<Vec<f64>> =
            [1e-2, 1e-3, 1e-4, 1e-5, 1e-6].iter().map(|&d| vec![d]).collect();
        let report = boundary_regularity_check(&fam, 7.0, &samples);
        assert!(!report.any_flagged());
        assert!(report.max_product / report.min_product < 20.0);
    }
}
