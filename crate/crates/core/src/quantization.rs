//! Section-side quantities: the convex weights `f_m`, the exponents
//! `h_m^s`, L1 section norms by quadrature over the polytope, Dirac
//! concentration of the normalized densities, the norm log-derivative,
//! Bohr-Sommerfeld counting and polarization-gap diagnostics.

use thiserror::Error;

use crate::linalg;
use crate::polytope::{DelzantPolytope, PolytopeError};
use crate::potential::{ConvexFunction, PotentialError, PotentialFamily};
use crate::quadrature::{
    clip_polygon_halfplane, integrate_interval_adaptive, integrate_polygon_adaptive,
    ordered_polygon, QuadratureError, QuadratureSpec,
};
use crate::rational::rvec_to_f64;

#[derive(Debug, Error)]
pub enum QuantizationError {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("lattice point {0:?} is not in the polytope")]
    PointOutside(Vec<i64>),
    #[error("empty integration region")]
    EmptyRegion,
}

/// `f_m(x) = (x-m)^t grad psi(x) - psi(x)`; strictly convex with minimum
/// `-psi(m)` at `x = m` for strictly convex psi.
pub fn f_m(psi: &ConvexFunction<f64>, m: &[i64], x: &[f64]) -> f64 {
    let jet = psi.jet(x);
    let diff: Vec<f64> = x.iter().zip(m).map(|(&xi, &mi)| xi - mi as f64).collect();
    linalg::dot(&diff, &jet.gradient) - jet.value
}

/// `h_m^s(x) = (x-m)^t grad g_s(x) - g_s(x)`; splits as `h_m^0 + s f_m`.
pub fn h_m_s(
    family: &PotentialFamily<f64>,
    s: f64,
    m: &[i64],
    x: &[f64],
) -> Result<f64, PotentialError> {
    let jet = family.eval_gs(s, x)?;
    let diff: Vec<f64> = x.iter().zip(m).map(|(&xi, &mi)| xi - mi as f64).collect();
    Ok(linalg::dot(&diff, &jet.gradient) - jet.value)
}

/// L1 norm of a section held in log form; the plain value underflows for
/// large `s` whenever `psi(m) > 0`.
#[derive(Debug, Clone, Copy)]
pub struct SectionNorm {
    pub log: f64,
    /// Quadrature error estimate, relative to the integral.
    pub rel_error: f64,
}

impl SectionNorm {
    pub fn value(&self) -> f64 {
        self.log.exp()
    }
}

/// Integration domain: the polytope or its intersection with a ball.
enum Region {
    Interval(f64, f64),
    Polygon(Vec<[f64; 2]>),
}

impl Region {
    fn of_polytope(p: &DelzantPolytope) -> Result<Region, QuadratureError> {
        match p.dim() {
            1 => {
                let mut ends: Vec<f64> =
                    p.vertices().iter().map(|v| rvec_to_f64(v)[0]).collect();
                ends.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Ok(Region::Interval(ends[0], ends[1]))
            }
            2 => Ok(Region::Polygon(ordered_polygon(p))),
            d => Err(QuadratureError::UnsupportedDimension(d)),
        }
    }

    /// Intersection with the euclidean ball `B_eps(c)`; in 2D the ball is
    /// the circumscribed regular 64-gon (relative area error ~ 1e-3 eps^2).
    fn clip_ball(&self, c: &[f64], eps: f64) -> Region {
        match self {
            Region::Interval(a, b) => {
                Region::Interval(a.max(c[0] - eps), b.min(c[0] + eps))
            }
            Region::Polygon(poly) => {
                let mut poly = poly.clone();
                for k in 0..64 {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                    let n = [-th.cos(), -th.sin()];
                    let off = n[0] * c[0] + n[1] * c[1] - eps;
                    poly = clip_polygon_halfplane(&poly, &n, off);
                    if poly.len() < 3 {
                        break;
                    }
                }
                Region::Polygon(poly)
            }
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Region::Interval(a, b) => a >= b,
            Region::Polygon(p) => p.len() < 3,
        }
    }

    fn integrate(
        &self,
        f: &dyn Fn(&[f64]) -> f64,
        spec: &QuadratureSpec,
    ) -> Result<(f64, f64), QuadratureError> {
        match self {
            Region::Interval(a, b) => {
                let g = |x: f64| f(&[x]);
                integrate_interval_adaptive(&g, *a, *b, spec)
            }
            Region::Polygon(poly) => integrate_polygon_adaptive(f, poly, spec),
        }
    }

    /// A few interior probe points, used to pick the underflow shift.
    fn probes(&self) -> Vec<Vec<f64>> {
        match self {
            Region::Interval(a, b) => (1..32)
                .map(|i| vec![a + (b - a) * i as f64 / 32.0])
                .collect(),
            Region::Polygon(poly) => {
                let n = poly.len() as f64;
                let c = [
                    poly.iter().map(|p| p[0]).sum::<f64>() / n,
                    poly.iter().map(|p| p[1]).sum::<f64>() / n,
                ];
                let mut out = vec![c.to_vec()];
                for p in poly {
                    for &t in &[0.25, 0.5, 0.75, 0.95] {
                        out.push(vec![c[0] + t * (p[0] - c[0]), c[1] + t * (p[1] - c[1])]);
                    }
                }
                out
            }
        }
    }
}

/// Shift that keeps `e^{-h+offset}` in range: approximate interior minimum
/// of `h_m^s`.
fn underflow_offset(family: &PotentialFamily<f64>, s: f64, m: &[i64], region: &Region) -> f64 {
    region
        .probes()
        .iter()
        .filter_map(|x| h_m_s(family, s, m, x).ok())
        .fold(f64::INFINITY, f64::min)
}

fn integrate_density(
    family: &PotentialFamily<f64>,
    s: f64,
    m: &[i64],
    region: &Region,
    offset: f64,
    weight: &dyn Fn(&[f64]) -> f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), QuadratureError> {
    let f = |x: &[f64]| match h_m_s(family, s, m, x) {
        Ok(h) => weight(x) * (offset - h).exp(),
        // Interior nodes only; a node rounding onto the boundary
        // contributes the continuous limit 0 of the density.
        Err(_) => 0.0,
    };
    region.integrate(&f, spec)
}

/// `(2 pi)^n \int_P e^{-h_m^s}` in log form.
pub fn section_norm_l1(
    family: &PotentialFamily<f64>,
    s: f64,
    m: &[i64],
    spec: &QuadratureSpec,
) -> Result<SectionNorm, QuantizationError> {
    if !family.polytope.contains_f64(&m.iter().map(|&c| c as f64).collect::<Vec<_>>(), 1e-9) {
        return Err(QuantizationError::PointOutside(m.to_vec()));
    }
    let region = Region::of_polytope(&family.polytope)?;
    let offset = underflow_offset(family, s, m, &region);
    let (val, err) = integrate_density(family, s, m, &region, offset, &|_| 1.0, spec)?;
    let n = family.polytope.dim() as f64;
    Ok(SectionNorm {
        log: n * (2.0 * std::f64::consts::PI).ln() - offset + val.ln(),
        rel_error: err / val.abs().max(1e-300),
    })
}

/// Mass fraction of the normalized density in `B_eps(m)`.
pub fn dirac_concentration(
    family: &PotentialFamily<f64>,
    s: f64,
    m: &[i64],
    eps: f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuantizationError> {
    let region = Region::of_polytope(&family.polytope)?;
    let center: Vec<f64> = m.iter().map(|&c| c as f64).collect();
    let ball = region.clip_ball(&center, eps);
    if ball.is_empty() {
        return Ok(0.0);
    }
    let offset = underflow_offset(family, s, m, &ball);
    let (num, _) = integrate_density(family, s, m, &ball, offset, &|_| 1.0, spec)?;
    let (den, _) = integrate_density(family, s, m, &region, offset, &|_| 1.0, spec)?;
    Ok((num / den).clamp(0.0, 1.0))
}

/// `d/ds log ||sigma_s^m||_1 = -\int f_m e^{-h_m^s} / \int e^{-h_m^s}`,
/// which tends to `psi(m)` as `s` grows.
pub fn norm_log_derivative(
    family: &PotentialFamily<f64>,
    s: f64,
    m: &[i64],
    spec: &QuadratureSpec,
) -> Result<f64, QuantizationError> {
    let region = Region::of_polytope(&family.polytope)?;
    let offset = underflow_offset(family, s, m, &region);
    let (den, _) = integrate_density(family, s, m, &region, offset, &|_| 1.0, spec)?;
    let w = |x: &[f64]| f_m(&family.psi, m, x);
    let (num, _) = integrate_density(family, s, m, &region, offset, &w, spec)?;
    Ok(-num / den)
}

/// Pairing of the normalized density with a test function:
/// `\int zeta_s tau -> tau(m)`.
pub fn density_pairing(
    family: &PotentialFamily<f64>,
    s: f64,
    m: &[i64],
    tau: &dyn Fn(&[f64]) -> f64,
    spec: &QuadratureSpec,
) -> Result<f64, QuantizationError> {
    let region = Region::of_polytope(&family.polytope)?;
    let offset = underflow_offset(family, s, m, &region);
    let (den, _) = integrate_density(family, s, m, &region, offset, &|_| 1.0, spec)?;
    let (num, _) = integrate_density(family, s, m, &region, offset, tau, spec)?;
    Ok(num / den)
}

/// A Bohr-Sommerfeld fiber: lattice point plus the codimension of its face
/// (fiber torus dimension = n - codim).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BSFiber {
    pub m: Vec<i64>,
    pub codim: usize,
}

impl BSFiber {
    pub fn fiber_dim(&self, n: usize) -> usize {
        n - self.codim
    }
}

/// All lattice points of the polytope with their face codimensions.
pub fn bs_fibers(p: &DelzantPolytope) -> Vec<BSFiber> {
    p.lattice_points()
        .into_iter()
        .map(|m| {
            let x: Vec<f64> = m.iter().map(|&c| c as f64).collect();
            let codim = p.locate(&x, 1e-9).expect("lattice point is in P").codim;
            BSFiber { m, codim }
        })
        .collect()
}

pub fn bs_count(p: &DelzantPolytope) -> usize {
    p.lattice_points().len()
}

/// Spectral norm of `G_s(x)^{-1}` (the polarization gap diagnostic):
/// `1/lambda_min(G_s)` for the positive definite Hessian.
pub fn polarization_gap(
    family: &PotentialFamily<f64>,
    s: f64,
    x: &[f64],
) -> Result<f64, PotentialError> {
    let hess = family.eval_gs(s, x)?.hessian;
    let min = hess.min_eigenvalue();
    if min <= 0.0 {
        return Err(PotentialError::NonConvex(min));
    }
    Ok(1.0 / min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::polytope::fixtures::{hexagon, segment01, simplex, square2};
    use std::sync::Arc;

    fn seg_family() -> PotentialFamily<f64> {
        let psi = ConvexFunction::quadratic(Matrix::identity(1), vec![0.0]).unwrap();
        PotentialFamily::new(Arc::new(segment01()), ConvexFunction::Zero, psi)
    }

    #[test]
    fn f_m_closed_forms() {
        let psi = ConvexFunction::quadratic(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        let x = [0.3, 0.7];
        let m = [1i64, 0];
        let want = 0.5 * (x[0] * x[0] + x[1] * x[1]) - x[0];
        assert!((f_m(&psi, &m, &x) - want).abs() < 1e-14);
        // f_m(m) = -psi(m)
        assert!((f_m(&psi, &m, &[1.0, 0.0]) + 0.5).abs() < 1e-14);
        assert!(f_m(&psi, &[0, 0], &[0.0, 0.0]).abs() < 1e-14);
    }

    #[test]
    fn quartic_argmin_at_m() {
        let psi: ConvexFunction<f64> = ConvexFunction::QuarticRadial;
        let m = [1i64, 0];
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in -30..=50 {
            for j in -30..=30 {
                let x = [i as f64 * 0.05, j as f64 * 0.05];
                let v = f_m(&psi, &m, &x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        assert!((best.1[0] - 1.0).abs() < 1e-12 && best.1[1].abs() < 1e-12);
    }

    #[test]
    fn h_splitting_identity() {
        let fam = seg_family();
        for &x in &[0.1, 0.5, 0.83] {
            for &s in &[0.0, 1.0, 17.5] {
                let lhs = h_m_s(&fam, s, &[1], &[x]).unwrap();
                let rhs = h_m_s(&fam, 0.0, &[1], &[x]).unwrap() + s * f_m(&fam.psi, &[1], &[x]);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn h_segment_closed_forms() {
        // h_0^0 = -ln(1-x)/2 and h_1^0 = -ln(x)/2 on [0,1] with phi=0.
        let fam = seg_family();
        for &x in &[0.05, 0.3, 0.9] {
            let h0 = h_m_s(&fam, 0.0, &[0], &[x]).unwrap();
            assert!((h0 + 0.5 * (1.0 - x).ln()).abs() < 1e-13);
            let h1 = h_m_s(&fam, 0.0, &[1], &[x]).unwrap();
            assert!((h1 + 0.5 * x.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn section_norm_s0_closed_form() {
        // e^{-h_0^0} = sqrt(1-x): 2 pi * int_0^1 sqrt(1-x) = 4 pi / 3.
        let fam = seg_family();
        let spec = QuadratureSpec::default();
        let norm = section_norm_l1(&fam, 0.0, &[0], &spec).unwrap();
        let want = 4.0 * std::f64::consts::PI / 3.0;
        assert!((norm.value() - want).abs() < 1e-5 * want);
        let norm1 = section_norm_l1(&fam, 0.0, &[1], &spec).unwrap();
        assert!((norm1.value() - want).abs() < 1e-5 * want);
    }

    #[test]
    fn log_norm_convex_in_s() {
        let fam = seg_family();
        let spec = QuadratureSpec::default();
        let logn: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&s| section_norm_l1(&fam, s, &[0], &spec).unwrap().log)
            .collect();
        for w in logn.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
    }

    #[test]
    fn dirac_concentration_segment() {
        let fam = seg_family();
        let spec = QuadratureSpec::default();
        let f1000 = dirac_concentration(&fam, 1000.0, &[0], 0.1, &spec).unwrap();
        assert!(f1000 > 0.98, "f={f1000}");
        // Monotone in s and in eps.
        let mut prev = 0.0;
        for &s in &[10.0, 100.0, 1000.0, 10000.0] {
            let f = dirac_concentration(&fam, s, &[0], 0.1, &spec).unwrap();
            assert!(f >= prev - 1e-9);
            prev = f;
        }
        assert!(prev > 0.999);
        let small = dirac_concentration(&fam, 1000.0, &[0], 0.05, &spec).unwrap();
        assert!(small <= f1000 + 1e-9);
    }

    #[test]
    fn norm_log_derivative_limits() {
        let fam = seg_family();
        let spec = QuadratureSpec::default();
        let d0 = norm_log_derivative(&fam, 1e4, &[0], &spec).unwrap();
        assert!(d0.abs() < 1e-2, "d0={d0}");
        let d1 = norm_log_derivative(&fam, 1e4, &[1], &spec).unwrap();
        assert!((d1 - 0.5).abs() < 1e-2, "d1={d1}");
        // Finite-difference cross-check at moderate s.
        let s = 50.0;
        let h = s / 100.0;
        let lp = section_norm_l1(&fam, s + h, &[1], &spec).unwrap().log;
        let lm = section_norm_l1(&fam, s - h, &[1], &spec).unwrap().log;
        let fd = (lp - lm) / (2.0 * h);
        let an = norm_log_derivative(&fam, s, &[1], &spec).unwrap();
        assert!((fd - an).abs() <= 1e-3 * an.abs().max(1e-3), "fd={fd} an={an}");
    }

    #[test]
    fn pairing_converges_to_point_mass() {
        let fam = seg_family();
        let spec = QuadratureSpec::default();
        let tau = |x: &[f64]| (1.0 + x[0]).cos();
        let want = 1.0f64.cos();
        let mut errs = Vec::new();
        for &s in &[10.0, 100.0, 1000.0] {
            let v = density_pairing(&fam, s, &[0], &tau, &spec).unwrap();
            errs.push((v - want).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        // m = 0 sits on the boundary, so the density is a half-Gaussian and
        // the pairing error decays like 1/sqrt(s).
        assert!(errs[2] < 0.03, "errs={errs:?}");
        assert!(errs[0] / errs[2] > 5.0, "errs={errs:?}");
    }

    #[test]
    fn bs_counts() {
        assert_eq!(bs_count(&simplex()), 3);
        assert_eq!(bs_count(&square2()), 9);
        assert_eq!(bs_count(&hexagon()), 7);
        let fibers = bs_fibers(&square2());
        let interior: Vec<_> = fibers.iter().filter(|f| f.codim == 0).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].m, vec![1, 1]);
        assert_eq!(interior[0].fiber_dim(2), 2);
        let simplex_fibers = bs_fibers(&simplex());
        assert!(simplex_fibers.iter().all(|f| f.codim == 2));
    }

    #[test]
    fn polarization_gap_segment() {
        let fam = seg_family();
        for &s in &[0.0, 1.0, 10.0, 100.0] {
            let gap = polarization_gap(&fam, s, &[0.5]).unwrap();
            assert!((gap - 1.0 / (2.0 + s)).abs() < 1e-12);
        }
        // Upper bound 1/(s lambda_min(Hess psi)) and monotone decrease.
        let mut prev = f64::INFINITY;
        for &s in &[1.0, 5.0, 25.0] {
            let gap = polarization_gap(&fam, s, &[0.2]).unwrap();
            assert!(gap <= 1.0 / s + 1e-12);
            assert!(gap < prev);
            prev = gap;
        }
    }
}
