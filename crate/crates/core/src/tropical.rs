//! Tropical polynomials `max_m (m^t u - v(m))` and their corner loci:
//! exact 2D polyhedral complexes over the rationals, membership testing in
//! any dimension.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::Zero;
use thiserror::Error;

use crate::potential::ConvexFunction;
use crate::rational::{
    gcd_vec, primitive_direction, rat, rat_from_f64, rat_to_f64, rdot_int, rscale, rvec, Rat,
};

#[derive(Debug, Error)]
pub enum TropicalError {
    #[error("a tropical polynomial needs at least two terms")]
    TooFewTerms,
    #[error("duplicate lattice point {0:?}")]
    DuplicateTerm(Vec<i64>),
    #[error("zero coefficient on term {0:?}")]
    ZeroCoefficient(Vec<i64>),
    #[error("terms have mismatched dimensions")]
    DimensionMismatch,
    #[error("exact corner loci are only computed in dimension 2")]
    NotPlanar,
    #[error("corner locus is empty")]
    DegenerateInput,
}

/// One monomial: lattice point, valuation, complex coefficient.
///
/// Valuations are held as exact rationals (every finite double is one), so
/// the corner locus downstream is exact for the values actually supplied.
#[derive(Debug, Clone)]
pub struct Term {
    pub m: Vec<i64>,
    pub v: Rat,
    pub a: Complex64,
}

impl Term {
    pub fn new(m: Vec<i64>, v: f64) -> Self {
        Term { m, v: rat_from_f64(v), a: Complex64::new(1.0, 0.0) }
    }

    pub fn with_coeff(m: Vec<i64>, v: f64, a: Complex64) -> Self {
        Term { m, v: rat_from_f64(v), a }
    }

    pub fn v_f64(&self) -> f64 {
        rat_to_f64(&self.v)
    }
}

#[derive(Debug, Clone)]
pub struct TropicalPolynomial {
    dim: usize,
    terms: Vec<Term>,
}

impl TropicalPolynomial {
    pub fn new(terms: Vec<Term>) -> Result<Self, TropicalError> {
        if terms.len() < 2 {
            return Err(TropicalError::TooFewTerms);
        }
        let dim = terms[0].m.len();
        if terms.iter().any(|t| t.m.len() != dim) {
            return Err(TropicalError::DimensionMismatch);
        }
        for (i, t) in terms.iter().enumerate() {
            if t.a.norm_sqr() == 0.0 {
                return Err(TropicalError::ZeroCoefficient(t.m.clone()));
            }
            if terms[..i].iter().any(|s| s.m == t.m) {
                return Err(TropicalError::DuplicateTerm(t.m.clone()));
            }
        }
        Ok(TropicalPolynomial { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Restriction to the terms whose lattice points satisfy `keep`.
    /// Returns `None` when fewer than two terms survive.
    pub fn restrict(&self, keep: impl Fn(&[i64]) -> bool) -> Option<TropicalPolynomial> {
        let terms: Vec<Term> = self.terms.iter().filter(|t| keep(&t.m)).cloned().collect();
        if terms.len() < 2 {
            return None;
        }
        Some(TropicalPolynomial { dim: self.dim, terms })
    }

    /// `max_m (m^t u - v(m))` with the indices of all terms within
    /// `tie_tol` of the max.
    pub fn value(&self, u: &[f64], tie_tol: f64) -> (f64, Vec<usize>) {
        let vals: Vec<f64> = self
            .terms
            .iter()
            .map(|t| t.m.iter().zip(u).map(|(&mi, &ui)| mi as f64 * ui).sum::<f64>() - t.v_f64())
            .collect();
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let argmax = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= max - tie_tol)
            .map(|(i, _)| i)
            .collect();
        (max, argmax)
    }

    /// The lattice points achieving the max within `tie_tol`.
    pub fn argmax_points(&self, u: &[f64], tie_tol: f64) -> Vec<Vec<i64>> {
        self.value(u, tie_tol).1.into_iter().map(|i| self.terms[i].m.clone()).collect()
    }

    /// Corner-locus membership: at least two terms tie at the max.
    pub fn membership(&self, u: &[f64], tie_tol: f64) -> bool {
        self.value(u, tie_tol).1.len() >= 2
    }
}

/// Terms `m -> psi(m)` with unit coefficients.
pub fn build_gq_valuation(
    psi: &ConvexFunction<f64>,
    points: &[Vec<i64>],
) -> Result<TropicalPolynomial, TropicalError> {
    let terms = points
        .iter()
        .map(|m| {
            let x: Vec<f64> = m.iter().map(|&c| c as f64).collect();
            Term::new(m.clone(), psi.value(&x))
        })
        .collect();
    TropicalPolynomial::new(terms)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub a: usize,
    pub b: usize,
    pub weight: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ray {
    pub base: usize,
    pub dir: Vec<i64>,
    pub weight: i64,
}

/// Vertices, bounded segments and unbounded rays of a 1-dimensional
/// polyhedral complex; full lines appear as opposite ray pairs.
#[derive(Debug, Clone)]
pub struct PolyhedralComplex {
    pub dim: usize,
    pub vertices: Vec<Vec<Rat>>,
    pub segments: Vec<Segment>,
    pub rays: Vec<Ray>,
}

impl PolyhedralComplex {
    pub fn vertex_f64(&self, i: usize) -> Vec<f64> {
        self.vertices[i].iter().map(rat_to_f64).collect()
    }

    /// Weighted primitive edge directions sum to zero at every vertex?
    pub fn is_balanced(&self) -> bool {
        self.unbalanced_vertices().is_empty()
    }

    pub fn unbalanced_vertices(&self) -> Vec<usize> {
        let mut sums: Vec<Vec<Rat>> = vec![vec![Rat::zero(); self.dim]; self.vertices.len()];
        let mut add = |v: usize, dir: &[Rat], w: i64| {
            for (s, d) in sums[v].iter_mut().zip(dir) {
                *s += d * rat(w);
            }
        };
        for seg in &self.segments {
            let d = crate::rational::rsub(&self.vertices[seg.b], &self.vertices[seg.a]);
            let prim = crate::rational::primitive_direction(&d).expect("distinct endpoints");
            let prim: Vec<Rat> = rvec(&prim);
            let neg: Vec<Rat> = prim.iter().map(|c| -c).collect();
            add(seg.a, &prim, seg.weight);
            add(seg.b, &neg, seg.weight);
        }
        for ray in &self.rays {
            add(ray.base, &rvec(&ray.dir), ray.weight);
        }
        sums.iter()
            .enumerate()
            .filter(|(_, s)| s.iter().any(|c| !c.is_zero()))
            .map(|(i, _)| i)
            .collect()
    }

    /// Image under translation by an integer vector.
    pub fn translated(&self, k: &[i64]) -> PolyhedralComplex {
        let vertices = self
            .vertices
            .iter()
            .map(|v| v.iter().zip(k).map(|(c, &ki)| c + rat(ki)).collect())
            .collect();
        PolyhedralComplex { vertices, ..self.clone() }
    }

    /// Image under an integer linear map `p -> A p` (rows of `a`).
    pub fn mapped(&self, a: &[Vec<i64>]) -> PolyhedralComplex {
        let vertices: Vec<Vec<Rat>> = self
            .vertices
            .iter()
            .map(|v| a.iter().map(|row| rdot_int(row, v)).collect())
            .collect();
        let rays = self
            .rays
            .iter()
            .map(|r| {
                let img: Vec<Rat> = a.iter().map(|row| rdot_int(row, &rvec(&r.dir))).collect();
                Ray {
                    base: r.base,
                    dir: primitive_direction(&img).expect("nonzero ray direction"),
                    weight: r.weight,
                }
            })
            .collect();
        PolyhedralComplex { vertices, rays, ..self.clone() }
    }

    /// Canonical sorted list of segment endpoint pairs, for exact
    /// comparison of complexes independent of construction order.
    pub fn canonical_segments(&self) -> Vec<(Vec<Rat>, Vec<Rat>)> {
        let mut out: Vec<(Vec<Rat>, Vec<Rat>)> = self
            .segments
            .iter()
            .map(|s| {
                let a = self.vertices[s.a].clone();
                let b = self.vertices[s.b].clone();
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        out.sort();
        out
    }

    /// Dense f64 point sample of all segments (step <= `step`).
    pub fn sample_segments(&self, step: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for s in &self.segments {
            let a = self.vertex_f64(s.a);
            let b = self.vertex_f64(s.b);
            let len = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            let n = (len / step).ceil().max(1.0) as usize;
            for k in 0..=n {
                let f = k as f64 / n as f64;
                out.push(a.iter().zip(&b).map(|(x, y)| x + f * (y - x)).collect());
            }
        }
        out
    }

    /// Deterministic structured-text export: vertex, edge and ray lists.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "vertices {}", self.vertices.len()).unwrap();
        for (i, v) in self.vertices.iter().enumerate() {
            let coords: Vec<String> = v.iter().map(|c| c.to_string()).collect();
            writeln!(out, "  {i}: ({})", coords.join(", ")).unwrap();
        }
        writeln!(out, "segments {}", self.segments.len()).unwrap();
        for s in &self.segments {
            writeln!(out, "  {} -- {} weight {}", s.a, s.b, s.weight).unwrap();
        }
        writeln!(out, "rays {}", self.rays.len()).unwrap();
        for r in &self.rays {
            writeln!(out, "  {} -> {:?} weight {}", r.base, r.dir, r.weight).unwrap();
        }
        out
    }
}

/// Accumulates exact cells into a deduplicated complex.
pub(crate) struct ComplexBuilder {
    dim: usize,
    vertex_ids: BTreeMap<Vec<Rat>, usize>,
    vertices: Vec<Vec<Rat>>,
    segments: BTreeMap<(usize, usize), i64>,
    rays: BTreeMap<(usize, Vec<i64>), i64>,
}

impl ComplexBuilder {
    pub fn new(dim: usize) -> Self {
        ComplexBuilder {
            dim,
            vertex_ids: BTreeMap::new(),
            vertices: Vec::new(),
            segments: BTreeMap::new(),
            rays: BTreeMap::new(),
        }
    }

    pub fn vertex(&mut self, p: Vec<Rat>) -> usize {
        if let Some(&i) = self.vertex_ids.get(&p) {
            return i;
        }
        let i = self.vertices.len();
        self.vertex_ids.insert(p.clone(), i);
        self.vertices.push(p);
        i
    }

    pub fn segment(&mut self, a: Vec<Rat>, b: Vec<Rat>, weight: i64) {
        let ia = self.vertex(a);
        let ib = self.vertex(b);
        if ia == ib {
            return;
        }
        let key = (ia.min(ib), ia.max(ib));
        let w = self.segments.entry(key).or_insert(0);
        // Coinciding cells from collinear term pairs: the dual edge with
        // the longest lattice length carries the weight.
        *w = (*w).max(weight);
    }

    pub fn ray(&mut self, base: Vec<Rat>, dir: Vec<i64>, weight: i64) {
        let ib = self.vertex(base);
        let w = self.rays.entry((ib, dir)).or_insert(0);
        *w = (*w).max(weight);
    }

    pub fn finish(self) -> PolyhedralComplex {
        PolyhedralComplex {
            dim: self.dim,
            vertices: self.vertices,
            segments: self
                .segments
                .into_iter()
                .map(|((a, b), weight)| Segment { a, b, weight })
                .collect(),
            rays: self
                .rays
                .into_iter()
                .map(|((base, dir), weight)| Ray { base, dir, weight })
                .collect(),
        }
    }
}

/// Closed interval of line parameters, unbounded ends as `None`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LineInterval {
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

impl LineInterval {
    pub fn full() -> Self {
        LineInterval { lo: None, hi: None }
    }

    pub fn clip_lo(&mut self, t: Rat) {
        match &self.lo {
            Some(cur) if *cur >= t => {}
            _ => self.lo = Some(t),
        }
    }

    pub fn clip_hi(&mut self, t: Rat) {
        match &self.hi {
            Some(cur) if *cur <= t => {}
            _ => self.hi = Some(t),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn is_point(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(l), Some(h)) if l == h)
    }

    /// Apply `a * t >= c`. Returns false if the constraint empties the line.
    pub fn constrain(&mut self, a: &Rat, c: &Rat) -> bool {
        if a.is_zero() {
            return c <= &Rat::zero();
        }
        let t = c / a;
        if a > &Rat::zero() {
            self.clip_lo(t);
        } else {
            self.clip_hi(t);
        }
        true
    }
}

/// Exact 2D corner locus by pairwise bisector enumeration: for each
/// unordered term pair the tie line is intersected with the halfplanes
/// where the pair dominates every other term.
pub fn tropical_curve_2d(t: &TropicalPolynomial) -> Result<PolyhedralComplex, TropicalError> {
    if t.dim() != 2 {
        return Err(TropicalError::NotPlanar);
    }
    let terms = t.terms();
    let mut builder = ComplexBuilder::new(2);
    for i in 0..terms.len() {
        for j in (i + 1)..terms.len() {
            let dm: Vec<i64> = terms[i].m.iter().zip(&terms[j].m).map(|(a, b)| a - b).collect();
            let dv = &terms[i].v - &terms[j].v;
            // Closest point of the bisector to the origin (canonical base).
            let nn = rat(dm[0] * dm[0] + dm[1] * dm[1]);
            let base = rscale(&rvec(&dm), &(&dv / &nn));
            // Primitive direction along the bisector.
            let mut dir = vec![-dm[1], dm[0]];
            let g = gcd_vec(&dir);
            dir.iter_mut().for_each(|c| *c /= g);
            let dir_rat = rvec(&dir);

            let mut interval = LineInterval::full();
            let mut feasible = true;
            for (k, other) in terms.iter().enumerate() {
                if k == i || k == j {
                    continue;
                }
                // m_i^t u - v_i >= m_k^t u - v_k along u = base + t*dir.
                let dmk: Vec<i64> =
                    terms[i].m.iter().zip(&other.m).map(|(a, b)| a - b).collect();
                let a = rdot_int(&dmk, &dir_rat);
                let c = (&terms[i].v - &other.v) - rdot_int(&dmk, &base);
                if !interval.constrain(&a, &c) {
                    feasible = false;
                    break;
                }
            }
            if !feasible || interval.is_empty() || interval.is_point() {
                continue;
            }
            let weight = gcd_vec(&dm);
            let at = |t: &Rat| crate::rational::radd(&base, &rscale(&dir_rat, t));
            match (interval.lo, interval.hi) {
                (None, None) => {
                    let neg: Vec<i64> = dir.iter().map(|c| -c).collect();
                    builder.ray(base.clone(), dir.clone(), weight);
                    builder.ray(base, neg, weight);
                }
                (Some(lo), None) => builder.ray(at(&lo), dir, weight),
                (None, Some(hi)) => {
                    let neg: Vec<i64> = dir.iter().map(|c| -c).collect();
                    builder.ray(at(&hi), neg, weight);
                }
                (Some(lo), Some(hi)) => builder.segment(at(&lo), at(&hi), weight),
            }
        }
    }
    let complex = builder.finish();
    if complex.segments.is_empty() && complex.rays.is_empty() {
        return Err(TropicalError::DegenerateInput);
    }
    Ok(complex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::rational::ratio;

    fn fig2() -> TropicalPolynomial {
        TropicalPolynomial::new(vec![
            Term::new(vec![0, 0], 0.0),
            Term::new(vec![1, 0], 0.5),
            Term::new(vec![0, 1], 0.25),
        ])
        .unwrap()
    }

    #[test]
    fn value_and_argmax() {
        let t = fig2();
        let (v, am) = t.value(&[0.0, 0.0], 1e-9);
        assert_eq!(v, 0.0);
        assert_eq!(am, vec![0]);
        let (v, am) = t.value(&[0.5, 0.25], 1e-9);
        assert!(v.abs() < 1e-15);
        assert_eq!(am.len(), 3);
        // Adding a constant to every valuation shifts the value, not the argmax.
        let shifted = TropicalPolynomial::new(
            t.terms().iter().map(|s| Term::new(s.m.clone(), s.v_f64() + 2.0)).collect(),
        )
        .unwrap();
        let (vs, ams) = shifted.value(&[0.3, -0.1], 1e-9);
        let (v0, am0) = t.value(&[0.3, -0.1], 1e-9);
        assert!((vs - (v0 - 2.0)).abs() < 1e-12);
        assert_eq!(ams, am0);
    }

    #[test]
    fn membership_examples() {
        let t = fig2();
        assert!(t.membership(&[0.5, 0.0], 1e-9));
        assert!(!t.membership(&[0.0, 0.0], 1e-9));
        // 1D corner: {v(0)=0, v(1)=c} is a member only at u=c.
        let line = TropicalPolynomial::new(vec![
            Term::new(vec![0], 0.0),
            Term::new(vec![1], 0.75),
        ])
        .unwrap();
        assert!(line.membership(&[0.75], 1e-9));
        assert!(!line.membership(&[0.74], 1e-9));
    }

    #[test]
    fn fig2_tripod_exact() {
        let curve = tropical_curve_2d(&fig2()).unwrap();
        assert_eq!(curve.vertices.len(), 1);
        assert_eq!(curve.vertices[0], vec![ratio(1, 2), ratio(1, 4)]);
        assert!(curve.segments.is_empty());
        let mut dirs: Vec<Vec<i64>> = curve.rays.iter().map(|r| r.dir.clone()).collect();
        dirs.sort();
        assert_eq!(dirs, vec![vec![-1, 0], vec![0, -1], vec![1, 1]]);
        assert!(curve.rays.iter().all(|r| r.weight == 1));
        assert!(curve.is_balanced());
    }

    #[test]
    fn gq_simplex_tripod() {
        let psi = ConvexFunction::quadratic(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        let pts = vec![vec![0, 0], vec![1, 0], vec![0, 1]];
        let t = build_gq_valuation(&psi, &pts).unwrap();
        assert_eq!(t.terms()[1].v, ratio(1, 2));
        let curve = tropical_curve_2d(&t).unwrap();
        assert_eq!(curve.vertices, vec![vec![ratio(1, 2), ratio(1, 2)]]);
        let mut dirs: Vec<Vec<i64>> = curve.rays.iter().map(|r| r.dir.clone()).collect();
        dirs.sort();
        assert_eq!(dirs, vec![vec![-1, 0], vec![0, -1], vec![1, 1]]);
    }

    #[test]
    fn two_terms_give_a_line() {
        let t = TropicalPolynomial::new(vec![
            Term::new(vec![0, 0], 0.0),
            Term::new(vec![1, 0], 0.25),
        ])
        .unwrap();
        let curve = tropical_curve_2d(&t).unwrap();
        assert_eq!(curve.vertices, vec![vec![ratio(1, 4), rat(0)]]);
        assert_eq!(curve.rays.len(), 2);
        let mut dirs: Vec<Vec<i64>> = curve.rays.iter().map(|r| r.dir.clone()).collect();
        dirs.sort();
        assert_eq!(dirs, vec![vec![0, -1], vec![0, 1]]);
        assert!(curve.is_balanced());
    }

    #[test]
    fn collinear_terms_carry_lattice_length() {
        let t = TropicalPolynomial::new(vec![
            Term::new(vec![0, 0], 0.0),
            Term::new(vec![1, 0], 0.0),
            Term::new(vec![2, 0], 0.0),
        ])
        .unwrap();
        let curve = tropical_curve_2d(&t).unwrap();
        // A single full line x=0 where all three terms tie; the dual edge
        // [0,2] has lattice length 2.
        assert_eq!(curve.rays.len(), 2);
        assert!(curve.rays.iter().all(|r| r.weight == 2));
        assert!(curve.is_balanced());
    }

    #[test]
    fn square_grid_curve_balanced_and_member() {
        let psi = ConvexFunction::quadratic(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        let pts: Vec<Vec<i64>> =
            (0..3).flat_map(|i| (0..3).map(move |j| vec![i, j])).collect();
        let t = build_gq_valuation(&psi, &pts).unwrap();
        let curve = tropical_curve_2d(&t).unwrap();
        assert!(curve.is_balanced());
        assert_eq!(curve.vertices.len(), 4);
        // Membership holds along every output segment.
        for seg in &curve.segments {
            let a = curve.vertex_f64(seg.a);
            let b = curve.vertex_f64(seg.b);
            for k in 0..=8 {
                let f = k as f64 / 8.0;
                let u = [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
                assert!(t.membership(&u, 1e-9), "u={u:?}");
            }
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            TropicalPolynomial::new(vec![Term::new(vec![0, 0], 0.0)]),
            Err(TropicalError::TooFewTerms)
        ));
        assert!(matches!(
            TropicalPolynomial::new(vec![
                Term::new(vec![0, 0], 0.0),
                Term::new(vec![0, 0], 1.0),
            ]),
            Err(TropicalError::DuplicateTerm(_))
        ));
        assert!(matches!(
            TropicalPolynomial::new(vec![
                Term::with_coeff(vec![0, 0], 0.0, Complex64::new(0.0, 0.0)),
                Term::new(vec![1, 0], 0.0),
            ]),
            Err(TropicalError::ZeroCoefficient(_))
        ));
    }
}
