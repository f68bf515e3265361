//! Delzant polytopes: facet data, vertices, face lattice, lattice points and
//! vertex charts. All combinatorics is done in exact rational arithmetic;
//! the Delzant determinant condition is not a question floating point can
//! answer reliably.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rational::{
    idet, irank, is_primitive, rat, rat_to_f64, rsolve, rvec, rvec_to_f64, Rat,
};

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("need at least n+1 facets whose normals span R^n")]
    TooFewFacets,
    #[error("facet {0} has a non-primitive normal")]
    NonPrimitiveNormal(usize),
    #[error("polytope is not bounded")]
    NotBounded,
    #[error("polytope has empty interior")]
    EmptyInterior,
    #[error("facet {0} is redundant (supports no vertex)")]
    RedundantFacet(usize),
    #[error("Delzant condition fails at vertex {vertex:?}: normal determinant {det}")]
    NotDelzant { vertex: Vec<Rat>, det: BigInt },
    #[error("point {0:?} is not a vertex of the polytope")]
    NotAVertex(Vec<Rat>),
    #[error("point lies outside the polytope: l_{facet} = {value}")]
    OutsidePolytope { facet: usize, value: f64 },
    #[error("chart ordering {0:?} does not match the facets active at the vertex")]
    BadChartOrdering(Vec<usize>),
}

/// One affine halfspace `l_r(x) = <nu_r, x> - lambda_r >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

/// A face of the polytope, identified by the facets active on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    /// Sorted indices of all facets vanishing identically on the face.
    pub active: Vec<usize>,
    pub codim: usize,
    /// Indices into `DelzantPolytope::vertices` of the vertices of this face.
    pub vertices: Vec<usize>,
}

/// Reference to the minimal face containing a query point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceRef {
    pub active: Vec<usize>,
    pub codim: usize,
}

/// The chart at a vertex: `l = A x - lambda` with `l(vertex) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineChart {
    pub vertex: Vec<Rat>,
    pub a: Vec<Vec<i64>>,
    pub lambda: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct DelzantPolytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<Vec<Rat>>,
    vertex_active: Vec<Vec<usize>>,
    faces: Vec<Face>,
}

/// Validate facet data and build the full combinatorial structure.
pub fn build_polytope(facets: Vec<(Vec<i64>, i64)>) -> Result<DelzantPolytope, PolytopeError> {
    let facets: Vec<Facet> = facets
        .into_iter()
        .map(|(normal, offset)| Facet { normal, offset })
        .collect();
    if facets.is_empty() {
        return Err(PolytopeError::TooFewFacets);
    }
    let dim = facets[0].normal.len();
    if facets.len() < dim + 1 || facets.iter().any(|f| f.normal.len() != dim) {
        return Err(PolytopeError::TooFewFacets);
    }
    for (r, f) in facets.iter().enumerate() {
        if !is_primitive(&f.normal) {
            return Err(PolytopeError::NonPrimitiveNormal(r));
        }
    }
    let normals: Vec<Vec<i64>> = facets.iter().map(|f| f.normal.clone()).collect();
    if irank(&normals) < dim {
        return Err(PolytopeError::TooFewFacets);
    }

    // Vertex enumeration: intersect every n-subset of facets and keep the
    // feasible intersection points. Desk-scale polytopes only.
    let mut vertices: Vec<Vec<Rat>> = Vec::new();
    let mut vertex_active: Vec<Vec<usize>> = Vec::new();
    let mut vertex_basis: Vec<Vec<usize>> = Vec::new();
    for subset in combinations(facets.len(), dim) {
        let a: Vec<Vec<Rat>> = subset.iter().map(|&r| rvec(&facets[r].normal)).collect();
        let b: Vec<Rat> = subset.iter().map(|&r| rat(facets[r].offset)).collect();
        let Some(x) = rsolve(&a, &b) else { continue };
        let feasible = facets.iter().all(|f| ell_rat(f, &x) >= Rat::zero());
        if !feasible {
            continue;
        }
        if vertices.contains(&x) {
            continue;
        }
        let active: Vec<usize> = facets
            .iter()
            .enumerate()
            .filter(|(_, f)| ell_rat(f, &x).is_zero())
            .map(|(r, _)| r)
            .collect();
        vertices.push(x);
        vertex_active.push(active);
        vertex_basis.push(subset);
    }
    if vertices.is_empty() {
        return Err(PolytopeError::NotBounded);
    }

    // Boundedness first: no edge direction leaving a vertex basis may
    // escape to infinity.
    for basis in &vertex_basis {
        for drop in 0..dim {
            let rows: Vec<Vec<Rat>> = basis.iter().map(|&r| rvec(&facets[r].normal)).collect();
            let rhs: Vec<Rat> =
                (0..dim).map(|i| if i == drop { rat(1) } else { rat(0) }).collect();
            let Some(d) = rsolve(&rows, &rhs) else { continue };
            let escapes = facets.iter().all(|f| {
                f.normal
                    .iter()
                    .zip(&d)
                    .map(|(&n, di)| di * BigInt::from(n))
                    .sum::<Rat>()
                    >= Rat::zero()
            });
            if escapes {
                return Err(PolytopeError::NotBounded);
            }
        }
    }

    // Delzant check: simple (exactly n active facets) and unimodular normals
    // at every vertex.
    for (v, active) in vertices.iter().zip(&vertex_active) {
        if active.len() != dim {
            return Err(PolytopeError::NotDelzant { vertex: v.clone(), det: BigInt::zero() });
        }
        let rows: Vec<Vec<i64>> = active.iter().map(|&r| facets[r].normal.clone()).collect();
        let det = idet(&rows);
        if det.abs() != BigInt::from(1) {
            return Err(PolytopeError::NotDelzant { vertex: v.clone(), det });
        }
    }

    // Interior: the vertex centroid must be strictly inside every facet.
    let centroid = centroid_of(&vertices);
    for (r, f) in facets.iter().enumerate() {
        let v = ell_rat(f, &centroid);
        if v <= Rat::zero() {
            return Err(PolytopeError::EmptyInterior);
        }
        if !vertex_active.iter().any(|a| a.contains(&r)) {
            return Err(PolytopeError::RedundantFacet(r));
        }
    }

    // Face lattice: every face of a bounded polytope contains a vertex, so
    // subsets of vertex active sets enumerate all candidate faces.
    let mut faces: Vec<Face> = Vec::new();
    for active in &vertex_active {
        for subset in power_set(active) {
            let members: Vec<usize> = (0..vertices.len())
                .filter(|&vi| subset.iter().all(|r| vertex_active[vi].contains(r)))
                .collect();
            let mut canonical: Vec<usize> = (0..facets.len())
                .filter(|r| members.iter().all(|&vi| vertex_active[vi].contains(r)))
                .collect();
            canonical.sort_unstable();
            if faces.iter().any(|f| f.active == canonical) {
                continue;
            }
            let rows: Vec<Vec<i64>> =
                canonical.iter().map(|&r| facets[r].normal.clone()).collect();
            let codim = irank(&rows);
            faces.push(Face { active: canonical, codim, vertices: members });
        }
    }
    faces.sort_by(|a, b| a.codim.cmp(&b.codim).then(a.active.cmp(&b.active)));

    Ok(DelzantPolytope { dim, facets, vertices, vertex_active, faces })
}

impl DelzantPolytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[Vec<Rat>] {
        &self.vertices
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| rvec_to_f64(v)).collect()
    }

    pub fn vertex_active(&self, vi: usize) -> &[usize] {
        &self.vertex_active[vi]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face_by_active(&self, active: &[usize]) -> Option<&Face> {
        self.faces.iter().find(|f| f.active == active)
    }

    /// `l_r(x)` in floating point.
    pub fn ell_f64(&self, r: usize, x: &[f64]) -> f64 {
        let f = &self.facets[r];
        f.normal.iter().zip(x).map(|(&n, xi)| n as f64 * xi).sum::<f64>() - f.offset as f64
    }

    /// `l_r(x)` exactly.
    pub fn ell_rat(&self, r: usize, x: &[Rat]) -> Rat {
        ell_rat(&self.facets[r], x)
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        (0..self.facets.len()).all(|r| self.ell_f64(r, x) >= -tol)
    }

    pub fn contains_rat(&self, x: &[Rat]) -> bool {
        (0..self.facets.len()).all(|r| self.ell_rat(r, x) >= Rat::zero())
    }

    /// Exact interior point (vertex centroid).
    pub fn interior_point(&self) -> Vec<Rat> {
        centroid_of(&self.vertices)
    }

    pub fn interior_point_f64(&self) -> Vec<f64> {
        rvec_to_f64(&self.interior_point())
    }

    /// Axis-aligned bounding box of the vertices, in floats.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let verts = self.vertices_f64();
        let mut lo = verts[0].clone();
        let mut hi = verts[0].clone();
        for v in &verts {
            for i in 0..self.dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// All lattice points of the closed polytope, lexicographically sorted.
    pub fn lattice_points(&self) -> Vec<Vec<i64>> {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for v in &self.vertices {
            for i in 0..self.dim {
                let f = v[i].floor().to_integer();
                let c = v[i].ceil().to_integer();
                lo[i] = lo[i].min(big_to_i64(&f));
                hi[i] = hi[i].max(big_to_i64(&c));
            }
        }
        let mut out = Vec::new();
        let mut cursor = lo.clone();
        'outer: loop {
            let inside = self.facets.iter().all(|f| {
                let s: i128 = f
                    .normal
                    .iter()
                    .zip(&cursor)
                    .map(|(&n, &c)| n as i128 * c as i128)
                    .sum();
                s >= f.offset as i128
            });
            if inside {
                out.push(cursor.clone());
            }
            for i in (0..self.dim).rev() {
                cursor[i] += 1;
                if cursor[i] <= hi[i] {
                    continue 'outer;
                }
                cursor[i] = lo[i];
            }
            break;
        }
        out.sort();
        out
    }

    /// Minimal face containing `x`, with tolerance on the facet values.
    pub fn locate(&self, x: &[f64], tol: f64) -> Result<FaceRef, PolytopeError> {
        let mut active = Vec::new();
        for r in 0..self.facets.len() {
            let v = self.ell_f64(r, x);
            if v < -tol {
                return Err(PolytopeError::OutsidePolytope { facet: r, value: v });
            }
            if v.abs() <= tol {
                active.push(r);
            }
        }
        let rows: Vec<Vec<i64>> = active.iter().map(|&r| self.facets[r].normal.clone()).collect();
        let codim = irank(&rows);
        Ok(FaceRef { active, codim })
    }

    /// Minimal face containing an exact rational point.
    pub fn locate_rat(&self, x: &[Rat]) -> Result<FaceRef, PolytopeError> {
        let mut active = Vec::new();
        for r in 0..self.facets.len() {
            let v = self.ell_rat(r, x);
            if v < Rat::zero() {
                return Err(PolytopeError::OutsidePolytope { facet: r, value: rat_to_f64(&v) });
            }
            if v.is_zero() {
                active.push(r);
            }
        }
        let rows: Vec<Vec<i64>> = active.iter().map(|&r| self.facets[r].normal.clone()).collect();
        let codim = irank(&rows);
        Ok(FaceRef { active, codim })
    }

    /// The chart at a vertex, rows of `A` being the normals in the given order.
    pub fn vertex_chart(
        &self,
        vertex: &[Rat],
        ordering: &[usize],
    ) -> Result<AffineChart, PolytopeError> {
        let vi = self
            .vertices
            .iter()
            .position(|v| v.as_slice() == vertex)
            .ok_or_else(|| PolytopeError::NotAVertex(vertex.to_vec()))?;
        let mut sorted = ordering.to_vec();
        sorted.sort_unstable();
        if sorted != self.vertex_active[vi] {
            return Err(PolytopeError::BadChartOrdering(ordering.to_vec()));
        }
        let a: Vec<Vec<i64>> = ordering.iter().map(|&r| self.facets[r].normal.clone()).collect();
        let lambda: Vec<i64> = ordering.iter().map(|&r| self.facets[r].offset).collect();
        Ok(AffineChart { vertex: vertex.to_vec(), a, lambda })
    }

    /// Translated polytope `P + k`.
    pub fn translate(&self, k: &[i64]) -> DelzantPolytope {
        let facets = self
            .facets
            .iter()
            .map(|f| {
                let shift: i64 = f.normal.iter().zip(k).map(|(&n, &ki)| n * ki).sum();
                (f.normal.clone(), f.offset + shift)
            })
            .collect();
        build_polytope(facets).expect("translate preserves validity")
    }

    /// Image `A P` under a lattice base change `A` with `det A = +-1`.
    pub fn base_change(&self, a: &[Vec<i64>]) -> DelzantPolytope {
        // l_r(A^{-1} x~) >= 0, so the new normal is A^{-t} nu_r.
        let n = self.dim;
        let a_rat: Vec<Vec<Rat>> = a.iter().map(|row| rvec(row)).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| {
                // Solve A^t y = nu  =>  y = A^{-t} nu.
                let at: Vec<Vec<Rat>> =
                    (0..n).map(|i| (0..n).map(|j| a_rat[j][i].clone()).collect()).collect();
                let y = rsolve(&at, &rvec(&f.normal)).expect("unimodular base change");
                let normal: Vec<i64> = y
                    .iter()
                    .map(|c| {
                        debug_assert!(c.is_integer());
                        big_to_i64(&c.to_integer())
                    })
                    .collect();
                (normal, f.offset)
            })
            .collect();
        build_polytope(facets).expect("base change preserves validity")
    }
}

fn ell_rat(f: &Facet, x: &[Rat]) -> Rat {
    let s: Rat = f.normal.iter().zip(x).map(|(&n, xi)| xi * BigInt::from(n)).sum();
    s - rat(f.offset)
}

fn centroid_of(vertices: &[Vec<Rat>]) -> Vec<Rat> {
    let n = vertices[0].len();
    let count = rat(vertices.len() as i64);
    (0..n)
        .map(|i| vertices.iter().map(|v| v[i].clone()).sum::<Rat>() / &count)
        .collect()
}

fn big_to_i64(v: &BigInt) -> i64 {
    use num_traits::ToPrimitive;
    v.to_i64().expect("coordinate fits in i64")
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn power_set(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &it in items {
        let mut more: Vec<Vec<usize>> = out
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.push(it);
                s
            })
            .collect();
        out.append(&mut more);
    }
    out
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn simplex_has_three_vertices() {
        let p = simplex();
        assert_eq!(p.vertices().len(), 3);
        let mut vs = p.vertices_f64();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(vs, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn square_vertex_determinants() {
        let p = unit_square();
        assert_eq!(p.vertices().len(), 4);
        for vi in 0..4 {
            let rows: Vec<Vec<i64>> = p
                .vertex_active(vi)
                .iter()
                .map(|&r| p.facets()[r].normal.clone())
                .collect();
            assert_eq!(idet(&rows).abs(), BigInt::from(1));
        }
    }

    #[test]
    fn non_delzant_vertex_reported() {
        let err =
            build_polytope(vec![(vec![1, 0], 0), (vec![0, 1], 0), (vec![-1, -2], -2)]).unwrap_err();
        match err {
            PolytopeError::NotDelzant { vertex, det } => {
                // Facets 1 and 3 meet at (0,1) with determinant -2.
                assert_eq!(vertex, vec![rat(0), rat(1)]);
                assert_eq!(det.abs(), BigInt::from(2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_primitive_normal_rejected() {
        let err =
            build_polytope(vec![(vec![2, 0], 0), (vec![0, 1], 0), (vec![-1, -1], -1)]).unwrap_err();
        assert!(matches!(err, PolytopeError::NonPrimitiveNormal(0)));
    }

    #[test]
    fn unbounded_rejected() {
        let err = build_polytope(vec![(vec![1, 0], 0), (vec![0, 1], 0), (vec![1, 1], 0)])
            .unwrap_err();
        assert!(matches!(err, PolytopeError::NotBounded));
    }

    #[test]
    fn lattice_points_examples() {
        let p = simplex();
        assert_eq!(p.lattice_points(), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(square2().lattice_points().len(), 9);
        let hex = hexagon();
        let pts = hex.lattice_points();
        assert_eq!(pts.len(), 7);
        assert!(pts.contains(&vec![0, 0]));
    }

    #[test]
    fn lattice_points_translation_equivariance() {
        let p = hexagon();
        let k = [3, -2];
        let q = p.translate(&k);
        let shifted: Vec<Vec<i64>> = p
            .lattice_points()
            .iter()
            .map(|m| m.iter().zip(&k).map(|(a, b)| a + b).collect())
            .collect();
        let mut shifted = shifted;
        shifted.sort();
        assert_eq!(q.lattice_points(), shifted);
    }

    #[test]
    fn locate_examples() {
        let p = simplex();
        let tol = 1e-9;
        assert_eq!(p.locate(&[0.2, 0.3], tol).unwrap().codim, 0);
        let edge = p.locate(&[0.5, 0.5], tol).unwrap();
        assert_eq!(edge.codim, 1);
        assert_eq!(edge.active, vec![2]);
        let vert = p.locate(&[1.0, 0.0], tol).unwrap();
        assert_eq!(vert.codim, 2);
        assert!(p.locate(&[-0.5, 0.2], tol).is_err());
    }

    #[test]
    fn locate_active_set_matches_tolerance() {
        let p = simplex();
        let tol = 1e-9;
        let x = [1e-12, 0.4];
        let f = p.locate(&x, tol).unwrap();
        let expected: Vec<usize> =
            (0..3).filter(|&r| p.ell_f64(r, &x).abs() <= tol).collect();
        assert_eq!(f.active, expected);
    }

    #[test]
    fn vertex_chart_examples() {
        let p = simplex();
        let origin = vec![rat(0), rat(0)];
        let c = p.vertex_chart(&origin, &[0, 1]).unwrap();
        assert_eq!(c.a, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(c.lambda, vec![0, 0]);

        let v10 = vec![rat(1), rat(0)];
        let c = p.vertex_chart(&v10, &[1, 2]).unwrap();
        assert_eq!(c.a, vec![vec![0, 1], vec![-1, -1]]);
        assert_eq!(c.lambda, vec![0, -1]);
        // l(v) = 0 exactly.
        for (row, lam) in c.a.iter().zip(&c.lambda) {
            let l: Rat = row.iter().zip(&c.vertex).map(|(&n, x)| x * BigInt::from(n)).sum();
            assert_eq!(l, rat(*lam));
        }
        assert_eq!(idet(&c.a).abs(), BigInt::from(1));

        let sq = unit_square();
        let v11 = vec![rat(1), rat(1)];
        let c = sq.vertex_chart(&v11, &[2, 3]).unwrap();
        assert_eq!(c.a, vec![vec![-1, 0], vec![0, -1]]);
        assert_eq!(c.lambda, vec![-1, -1]);

        assert!(p.vertex_chart(&[ratio(1, 2), rat(0)], &[0, 1]).is_err());
    }

    #[test]
    fn face_lattice_closed_under_intersection() {
        let p = hexagon();
        let actives: Vec<Vec<usize>> = p.faces().iter().map(|f| f.active.clone()).collect();
        for a in &actives {
            for b in &actives {
                let both: Vec<usize> =
                    a.iter().filter(|r| b.contains(r)).cloned().collect();
                // The faces whose active sets contain `both` must have a
                // least element: the face spanned by the union of vertices.
                let members: Vec<usize> = (0..p.vertices().len())
                    .filter(|&vi| both.iter().all(|r| p.vertex_active(vi).contains(r)))
                    .collect();
                if members.is_empty() {
                    continue;
                }
                let canonical: Vec<usize> = (0..p.facets().len())
                    .filter(|r| members.iter().all(|&vi| p.vertex_active(vi).contains(r)))
                    .collect();
                assert!(actives.contains(&canonical));
            }
        }
    }

    #[test]
    fn face_counts_simplex() {
        let p = simplex();
        let codims: Vec<usize> = p.faces().iter().map(|f| f.codim).collect();
        assert_eq!(codims.iter().filter(|&&c| c == 0).count(), 1);
        assert_eq!(codims.iter().filter(|&&c| c == 1).count(), 3);
        assert_eq!(codims.iter().filter(|&&c| c == 2).count(), 3);
    }
}
