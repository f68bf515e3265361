//! Finite-s amoebas: membership verdicts for points of y-space (lopsided
//! exclusion certificates plus theta-grid fiber scans), compact amoeba
//! sampling in the polytope via kappa_s^{-1}, and Hausdorff distances
//! between samples.
//!
//! Throughout, y = ln|w| (natural log); the modulus of a term at y is
//! |a_m| e^{-s v(m) + m^t y}. The rescaled coordinate used by kappa_s is
//! y/s (log base t = e^s).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg;
use crate::polytope::Face;
use crate::potential::{ConvexFunction, Jet2, PotentialError, PotentialFamily};
use crate::rational::{primitive_direction, rat_to_f64, rvec_to_f64, Rat};
use crate::tropical::{Term, TropicalPolynomial};

#[derive(Debug, Error)]
pub enum AmoebaError {
    #[error("polynomial has no terms")]
    EmptyPolynomial,
    #[error("sample is empty")]
    EmptySample,
    #[error("samples live in different spaces")]
    SpaceMismatch,
    #[error("dimension mismatch between polynomial and polytope")]
    DimensionMismatch,
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tag {
    Tropical,
    FiniteS(f64),
    Limit,
    Gq,
    Projected,
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tag::Tropical => write!(f, "tropical"),
            Tag::FiniteS(s) => write!(f, "finite_s={s}"),
            Tag::Limit => write!(f, "limit"),
            Tag::Gq => write!(f, "gq"),
            Tag::Projected => write!(f, "projected"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Polytope,
    LegendreImage,
    Ambient,
}

#[derive(Debug, Clone)]
pub struct AmoebaSample {
    pub points: Vec<Vec<f64>>,
    pub tag: Tag,
    pub space: Space,
}

impl AmoebaSample {
    pub fn new(points: Vec<Vec<f64>>, tag: Tag, space: Space) -> Self {
        AmoebaSample { points, tag, space }
    }

    /// CSV with header `x1,...,xn,tag`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let n = self.points.first().map_or(0, |p| p.len());
        let mut out = String::new();
        let cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(out, "{},tag", cols.join(",")).unwrap();
        for p in &self.points {
            let coords: Vec<String> = p.iter().map(|c| format!("{c:.6}")).collect();
            writeln!(out, "{},{}", coords.join(","), self.tag).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipVerdict {
    /// Sound exclusion: one term modulus exceeds the sum of all others.
    CertifiedOut,
    /// Small minimum modulus on the fiber torus (value relative to the
    /// largest term modulus).
    ApproxIn(f64),
    Unknown(f64),
}

impl MembershipVerdict {
    pub fn is_in(&self) -> bool {
        matches!(self, MembershipVerdict::ApproxIn(_))
    }
}

/// Term log-moduli `ln|a_m| - s v(m) + m^t y`.
fn term_logs(t: &TropicalPolynomial, s: f64, y: &[f64]) -> Vec<f64> {
    t.terms()
        .iter()
        .map(|term| {
            term.a.norm().ln() - s * term.v_f64()
                + term.m.iter().zip(y).map(|(&mi, &yi)| mi as f64 * yi).sum::<f64>()
        })
        .collect()
}

/// Sum of the non-maximal term moduli, relative to the maximal one;
/// values < 1 mean the list is lopsided.
fn lopsided_rest(logs: &[f64]) -> f64 {
    let (imax, &lmax) =
        logs.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap();
    logs.iter().enumerate().filter(|&(i, _)| i != imax).map(|(_, &l)| (l - lmax).exp()).sum()
}

/// Minimum of the normalized |f| over the theta-grid of the fiber torus;
/// stops early once below `early_exit`.
fn fiber_min(t: &TropicalPolynomial, logs: &[f64], theta_grid: usize, early_exit: f64) -> f64 {
    let terms = t.terms();
    let lmax = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let coeffs: Vec<Complex64> = terms
        .iter()
        .zip(logs)
        .map(|(term, &l)| term.a / term.a.norm() * (l - lmax).exp())
        .collect();
    let n = t.dim();
    let mut min = f64::INFINITY;
    let mut theta_idx = vec![0usize; n];
    let step = 2.0 * std::f64::consts::PI / theta_grid as f64;
    'outer: loop {
        let mut f = Complex64::new(0.0, 0.0);
        for (term, c) in terms.iter().zip(&coeffs) {
            let phase: f64 =
                term.m.iter().zip(&theta_idx).map(|(&mi, &k)| mi as f64 * k as f64 * step).sum();
            f += c * Complex64::new(phase.cos(), phase.sin());
        }
        min = min.min(f.norm());
        if min < early_exit {
            return min;
        }
        // Odometer over the n-torus grid.
        for axis in 0..n {
            theta_idx[axis] += 1;
            if theta_idx[axis] < theta_grid {
                continue 'outer;
            }
            theta_idx[axis] = 0;
        }
        break;
    }
    min
}

/// Lopsidedness certificate, else a theta-grid min-modulus scan of the
/// fiber torus over y. All moduli are normalized by the largest term.
pub fn amoeba_membership(
    t: &TropicalPolynomial,
    s: f64,
    y: &[f64],
    theta_grid: usize,
    threshold: f64,
) -> Result<MembershipVerdict, AmoebaError> {
    if t.terms().is_empty() {
        return Err(AmoebaError::EmptyPolynomial);
    }
    let logs = term_logs(t, s, y);
    if lopsided_rest(&logs) < 1.0 {
        return Ok(MembershipVerdict::CertifiedOut);
    }
    let min = fiber_min(t, &logs, theta_grid, threshold);
    if min < threshold {
        Ok(MembershipVerdict::ApproxIn(min))
    } else {
        Ok(MembershipVerdict::Unknown(min))
    }
}

/// Uniform y-grid sampler over a box, pulled back by kappa_s^{-1}.
/// Returns polytope-space points. `y` is natural-log scale.
fn sample_interior(
    family: &PotentialFamily<f64>,
    t: &TropicalPolynomial,
    s: f64,
    grid: usize,
    theta_grid: usize,
    threshold: f64,
) -> Result<Vec<Vec<f64>>, AmoebaError> {
    let n = family.polytope.dim();
    if n != t.dim() {
        return Err(AmoebaError::DimensionMismatch);
    }
    // Box: kappa_s over a radially shrunk vertex hull, scaled to natural y.
    let center = family.polytope.interior_point_f64();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for v in family.polytope.vertices_f64() {
        for &f in &[0.3f64, 0.7, 0.9, 0.99, 0.999] {
            let x: Vec<f64> =
                center.iter().zip(&v).map(|(&c, &vi)| c + f * (vi - c)).collect();
            let k = family.kappa(s, &x)?;
            for i in 0..n {
                lo[i] = lo[i].min(s * k[i]);
                hi[i] = hi[i].max(s * k[i]);
            }
        }
    }
    for i in 0..n {
        let pad = 0.05 * (hi[i] - lo[i]).max(1.0);
        lo[i] -= pad;
        hi[i] += pad;
    }
    // The theta-scan resolves |f| down to roughly the log-modulus gap a
    // grid cell induces; scale the acceptance threshold accordingly so a
    // one-cell neighborhood of the amoeba is kept.
    let cell = (0..n).map(|i| (hi[i] - lo[i]) / grid as f64).fold(0.0f64, f64::max);
    let eff_threshold = threshold.max(1.0 - (-0.75 * cell).exp());
    // The point-wise lopsidedness certificate excludes everything except
    // exact ties for two-term polynomials; to keep a one-cell neighborhood
    // of the amoeba, only discard a point when the whole cell around it is
    // certified out (moduli drift at most e^{cell * max |m|_1} across it).
    let m_norm = t
        .terms()
        .iter()
        .map(|term| term.m.iter().map(|&c| c.abs()).sum::<i64>())
        .max()
        .unwrap_or(0) as f64;
    let margin = (cell * m_norm).exp();

    let rows: Vec<usize> = (0..grid).collect();
    let verdicts: Vec<Vec<Vec<f64>>> = rows
        .par_iter()
        .map(|&i0| {
            let mut kept = Vec::new();
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            loop {
                let y: Vec<f64> = (0..n)
                    .map(|a| lo[a] + (hi[a] - lo[a]) * (idx[a] as f64 + 0.5) / grid as f64)
                    .collect();
                let logs = term_logs(t, s, &y);
                if lopsided_rest(&logs) * margin >= 1.0
                    && fiber_min(t, &logs, theta_grid, eff_threshold) < eff_threshold
                {
                    kept.push(y);
                }
                // Odometer over the remaining axes.
                let mut done = true;
                for axis in 1..n {
                    idx[axis] += 1;
                    if idx[axis] < grid {
                        done = false;
                        break;
                    }
                    idx[axis] = 0;
                }
                if done || n == 1 {
                    break;
                }
            }
            kept
        })
        .collect();
    let mut points = Vec::new();
    for row in verdicts {
        for y in row {
            let u: Vec<f64> = y.iter().map(|&c| c / s).collect();
            match family.kappa_inv(s, &u) {
                Ok(x) => points.push(x),
                Err(PotentialError::MaxIterationsExceeded { best, .. }) => points.push(best),
                Err(e) => return Err(AmoebaError::Potential(e)),
            }
        }
    }
    Ok(points)
}

/// Edge of a 2D polytope viewed as a toric segment of its own: embedding
/// `x(tau) = base + tau * dir`, the induced potential family on [0, L],
/// and the restricted polynomial in the coordinate tau.
struct EdgeRestriction {
    base: Vec<f64>,
    dir: Vec<f64>,
    family: PotentialFamily<f64>,
    poly: TropicalPolynomial,
}

fn restrict_to_edge(
    family: &PotentialFamily<f64>,
    t: &TropicalPolynomial,
    face: &Face,
) -> Option<EdgeRestriction> {
    let p = &family.polytope;
    let va: &Vec<Rat> = &p.vertices()[face.vertices[0]];
    let vb: &Vec<Rat> = &p.vertices()[face.vertices[1]];
    let diff: Vec<Rat> = crate::rational::rsub(vb, va);
    let e = primitive_direction(&diff)?;
    let i0 = (0..e.len()).find(|&i| e[i] != 0)?;
    let length = &diff[i0] / Rat::from_integer(e[i0].into());
    if !length.is_integer() {
        return None;
    }
    let length: i64 = rat_to_f64(&length) as i64;

    // Restricted terms: lattice points on the edge, coordinate k in [0, L].
    let mut terms = Vec::new();
    for term in t.terms() {
        let on_face = face.active.iter().all(|&r| {
            let f = &p.facets()[r];
            f.normal.iter().zip(&term.m).map(|(&a, &b)| a * b).sum::<i64>() == f.offset
        });
        if !on_face || !p.contains_rat(&term.m.iter().map(|&c| Rat::from_integer(c.into())).collect::<Vec<_>>()) {
            continue;
        }
        let va_i = rat_to_f64(&va[i0]);
        let k = (term.m[i0] as f64 - va_i) / e[i0] as f64;
        let k = k.round() as i64;
        if k < 0 || k > length {
            continue;
        }
        terms.push(Term { m: vec![k], v: term.v.clone(), a: term.a });
    }
    if terms.len() < 2 {
        return None;
    }
    let poly = TropicalPolynomial::new(terms).ok()?;

    let seg = crate::polytope::build_polytope(vec![(vec![1], 0), (vec![-1], -length)]).ok()?;

    let base = rvec_to_f64(va);
    let dir: Vec<f64> = e.iter().map(|&c| c as f64).collect();

    // Facets of P restricting to the segment's own barrier: the edge facet
    // itself (identically zero) and the two transverse endpoint facets,
    // which restrict to tau and L - tau by the Delzant condition.
    let mut skip: Vec<usize> = face.active.clone();
    for &vi in &face.vertices {
        for &r in p.vertex_active(vi) {
            if !skip.contains(&r) {
                let c: i64 = p.facets()[r].normal.iter().zip(&e).map(|(&a, &b)| a * b).sum();
                debug_assert_eq!(c.abs(), 1, "Delzant edge: transverse facet slope must be unimodular");
                skip.push(r);
            }
        }
    }
    // Smooth remainder of g_P along the edge: (1/2) l_r ln l_r for the
    // facets not absorbed into the segment barrier, plus phi itself.
    let smooth: Vec<(f64, f64)> = (0..p.facets().len())
        .filter(|r| !skip.contains(r))
        .map(|r| {
            let f = &p.facets()[r];
            let c: f64 = f.normal.iter().zip(&dir).map(|(&a, b)| a as f64 * b).sum();
            let l0: f64 = f.normal.iter().zip(&base).map(|(&a, b)| a as f64 * b).sum::<f64>()
                - f.offset as f64;
            (l0, c)
        })
        .collect();
    let phi_outer = family.phi.clone();
    let base_c = base.clone();
    let dir_c = dir.clone();
    let phi_face = ConvexFunction::custom(move |tau: &[f64]| {
        let x: Vec<f64> = base_c.iter().zip(&dir_c).map(|(&b, &d)| b + tau[0] * d).collect();
        let jet = phi_outer.jet(&x);
        let mut value = jet.value;
        let mut grad = linalg::dot(&jet.gradient, &dir_c);
        let mut hess = linalg::dot(&dir_c, &jet.hessian.mul_vec(&dir_c));
        for &(l0, c) in &smooth {
            let l = l0 + c * tau[0];
            let log = l.ln();
            value += 0.5 * l * log;
            grad += 0.5 * c * (1.0 + log);
            hess += 0.5 * c * c / l;
        }
        let mut out = Jet2::zero(1);
        out.value = value;
        out.gradient[0] = grad;
        out.hessian[(0, 0)] = hess;
        out
    });
    let psi_outer = family.psi.clone();
    let base_c = base.clone();
    let dir_c = dir.clone();
    let psi_face = ConvexFunction::custom(move |tau: &[f64]| {
        let x: Vec<f64> = base_c.iter().zip(&dir_c).map(|(&b, &d)| b + tau[0] * d).collect();
        let jet = psi_outer.jet(&x);
        let mut out = Jet2::zero(1);
        out.value = jet.value;
        out.gradient[0] = linalg::dot(&jet.gradient, &dir_c);
        out.hessian[(0, 0)] = linalg::dot(&dir_c, &jet.hessian.mul_vec(&dir_c));
        out
    });
    let face_family = PotentialFamily::new(Arc::new(seg), phi_face, psi_face);
    Some(EdgeRestriction { base, dir, family: face_family, poly })
}

/// Sample of the compact amoeba mu_P(Y_s): interior y-grid pulled back by
/// kappa_s^{-1}, plus the compact amoebas of the restricted polynomials on
/// the boundary faces (each edge is a toric segment of its own).
pub fn sample_compact_amoeba(
    family: &PotentialFamily<f64>,
    t: &TropicalPolynomial,
    s: f64,
    grid: usize,
    theta_grid: usize,
    threshold: f64,
) -> Result<AmoebaSample, AmoebaError> {
    let mut points = sample_interior(family, t, s, grid, theta_grid, threshold)?;
    if family.polytope.dim() == 2 {
        for face in family.polytope.faces() {
            if face.codim != 1 {
                continue;
            }
            let Some(edge) = restrict_to_edge(family, t, face) else { continue };
            let taus =
                sample_interior(&edge.family, &edge.poly, s, grid, theta_grid, threshold)?;
            for tau in taus {
                let x: Vec<f64> = edge
                    .base
                    .iter()
                    .zip(&edge.dir)
                    .map(|(&b, &d)| b + tau[0] * d)
                    .collect();
                points.push(x);
            }
        }
    }
    Ok(AmoebaSample::new(points, Tag::FiniteS(s), Space::Polytope))
}

pub fn directed_hausdorff(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| linalg::norm2(&linalg::sub(a, b)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn hausdorff(a: &AmoebaSample, b: &AmoebaSample) -> Result<f64, AmoebaError> {
    if a.space != b.space {
        return Err(AmoebaError::SpaceMismatch);
    }
    if a.points.is_empty() || b.points.is_empty() {
        return Err(AmoebaError::EmptySample);
    }
    Ok(directed_hausdorff(&a.points, &b.points).max(directed_hausdorff(&b.points, &a.points)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::polytope::fixtures::{segment01, simplex};

    fn one_plus_w() -> TropicalPolynomial {
        TropicalPolynomial::new(vec![Term::new(vec![0], 0.0), Term::new(vec![1], 0.0)]).unwrap()
    }

    #[test]
    fn lopsided_and_fiber_scan() {
        let t = one_plus_w();
        let v = amoeba_membership(&t, 1.0, &[3.0f64.ln()], 256, 1e-3).unwrap();
        assert_eq!(v, MembershipVerdict::CertifiedOut);
        let v = amoeba_membership(&t, 1.0, &[0.0], 256, 1e-3).unwrap();
        assert!(v.is_in(), "{v:?}");
        // Off the amoeba, two terms: always lopsided.
        let v = amoeba_membership(&t, 1.0, &[0.3], 256, 1e-3).unwrap();
        assert_eq!(v, MembershipVerdict::CertifiedOut);
        // Three unit terms near (but off) the amoeba of 1 + w + w^2:
        // not lopsided, minimum modulus not small -> Unknown.
        let t3 = TropicalPolynomial::new(vec![
            Term::new(vec![0], 0.0),
            Term::new(vec![1], 0.0),
            Term::new(vec![2], 0.0),
        ])
        .unwrap();
        let v = amoeba_membership(&t3, 1.0, &[0.2], 256, 1e-3).unwrap();
        assert!(matches!(v, MembershipVerdict::Unknown(_)), "{v:?}");
    }

    #[test]
    fn verdict_invariant_under_scaling() {
        let t = one_plus_w();
        let scaled = TropicalPolynomial::new(
            t.terms()
                .iter()
                .map(|term| Term {
                    m: term.m.clone(),
                    v: term.v.clone(),
                    a: term.a * Complex64::new(-7.5, 3.0),
                })
                .collect(),
        )
        .unwrap();
        for y in [-1.0, 0.0, 0.7, 2.0] {
            let a = amoeba_membership(&t, 2.0, &[y], 128, 1e-2).unwrap();
            let b = amoeba_membership(&scaled, 2.0, &[y], 128, 1e-2).unwrap();
            assert_eq!(a.is_in(), b.is_in());
            assert_eq!(
                matches!(a, MembershipVerdict::CertifiedOut),
                matches!(b, MembershipVerdict::CertifiedOut)
            );
        }
    }

    #[test]
    fn segment_compact_amoeba_is_midpoint() {
        // 1 - e^{-s/2} w on [0,1] with psi = x^2/2: the zero sits at
        // y = s/2 and kappa_s^{-1}(1/2) = 1/2 for every s.
        let psi = ConvexFunction::quadratic(Matrix::identity(1), vec![0.0]).unwrap();
        let fam = PotentialFamily::new(Arc::new(segment01()), ConvexFunction::Zero, psi);
        let t = TropicalPolynomial::new(vec![
            Term::new(vec![0], 0.0),
            Term::with_coeff(vec![1], 0.5, Complex64::new(-1.0, 0.0)),
        ])
        .unwrap();
        for &s in &[5.0, 50.0] {
            let sample = sample_compact_amoeba(&fam, &t, s, 400, 64, 1e-3).unwrap();
            assert!(!sample.points.is_empty(), "s={s}");
            for p in &sample.points {
                assert!((p[0] - 0.5).abs() < 2e-2, "s={s} p={}", p[0]);
            }
        }
    }

    #[test]
    fn lopsided_everywhere_gives_empty_sample() {
        // Zero at y = 10 s, far outside the kappa_s box of [0,1].
        let psi = ConvexFunction::quadratic(Matrix::identity(1), vec![0.0]).unwrap();
        let fam = PotentialFamily::new(Arc::new(segment01()), ConvexFunction::Zero, psi);
        let t = TropicalPolynomial::new(vec![
            Term::new(vec![0], 0.0),
            Term::new(vec![1], 10.0),
        ])
        .unwrap();
        let sample = sample_compact_amoeba(&fam, &t, 5.0, 200, 64, 1e-3).unwrap();
        assert!(sample.points.is_empty());
    }

    #[test]
    fn simplex_amoeba_with_boundary_faces() {
        let psi = ConvexFunction::quadratic(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        let fam = PotentialFamily::new(Arc::new(simplex()), ConvexFunction::Zero, psi);
        let t = TropicalPolynomial::new(vec![
            Term::new(vec![0, 0], 0.0),
            Term::new(vec![1, 0], 0.5),
            Term::new(vec![0, 1], 0.25),
        ])
        .unwrap();
        let sample = sample_compact_amoeba(&fam, &t, 20.0, 120, 64, 1e-3).unwrap();
        assert!(!sample.points.is_empty());
        // All points in P (slight tolerance for boundary samples).
        for p in &sample.points {
            assert!(fam.polytope.contains_f64(p, 1e-7), "{p:?}");
        }
        // Face recursion reaches the boundary: some sample near l=0.
        let min_ell: f64 = sample
            .points
            .iter()
            .map(|p| (0..3).map(|r| fam.polytope.ell_f64(r, p)).fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min);
        assert!(min_ell < 1e-6, "min ell {min_ell}");
    }

    #[test]
    fn hausdorff_basics() {
        let a = AmoebaSample::new(vec![vec![0.0]], Tag::Limit, Space::Polytope);
        let b = AmoebaSample::new(vec![vec![1.0]], Tag::Limit, Space::Polytope);
        assert!((hausdorff(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let c = AmoebaSample::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            Tag::Limit,
            Space::Polytope,
        );
        let d = AmoebaSample::new(vec![vec![0.0, 0.0]], Tag::Limit, Space::Polytope);
        assert!((hausdorff(&c, &d).unwrap() - 1.0).abs() < 1e-15);
        let e = AmoebaSample::new(vec![vec![0.0]], Tag::Limit, Space::Ambient);
        assert!(matches!(hausdorff(&a, &e), Err(AmoebaError::SpaceMismatch)));
        let f = AmoebaSample::new(vec![], Tag::Limit, Space::Polytope);
        assert!(matches!(hausdorff(&a, &f), Err(AmoebaError::EmptySample)));
    }

    #[test]
    fn csv_shape() {
        let a = AmoebaSample::new(vec![vec![0.5, 0.25]], Tag::Tropical, Space::Ambient);
        let csv = a.to_csv();
        assert!(csv.starts_with("x1,x2,tag\n"));
        assert!(csv.contains("0.500000,0.250000,tropical"));
    }
}
