//! The cone partition of R^n induced by the Legendre image of the polytope
//! and its projection pi, limit amoebas pi(A_trop) pulled back to the
//! polytope, the implosion field id - pi, and exact GQ amoebas for
//! quadratic psi (anisotropic Voronoi skeleton plus boundary pieces).

use num_traits::Zero;
use thiserror::Error;

use crate::amoeba::{AmoebaSample, Space, Tag};
use crate::linalg::{self, Matrix};
use crate::polytope::{DelzantPolytope, FaceRef};
use crate::potential::{ConvexFunction, PotentialError};
use crate::rational::{
    primitive_direction, radd, rat, rat_from_f64, rdot, rdot_int, rscale, rsub, rvec,
    rvec_to_f64, Rat,
};
use crate::tropical::{ComplexBuilder, LineInterval, PolyhedralComplex};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("no face accepted the projection system (best residual {best_residual})")]
    NoFaceAccepted { best_residual: f64 },
    #[error("ray projection did not stabilize (last {last:?}, previous {prev:?})")]
    RayNotStabilized { last: Vec<f64>, prev: Vec<f64> },
    #[error("operation requires a quadratic psi")]
    NotQuadratic,
    #[error("exact GQ amoebas are only computed in dimension 2")]
    NotPlanar,
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Generators of the (metric) normal cone at a face: `-nu_r` for the
/// active facets, or `-G^{-1} nu_r` in the G inner product.
#[derive(Debug, Clone)]
pub struct NormalCone {
    pub face: FaceRef,
    pub generators: Vec<Vec<f64>>,
    pub metric: Option<Matrix<f64>>,
}

pub fn normal_cone(
    p: &DelzantPolytope,
    face: &FaceRef,
    metric: Option<&Matrix<f64>>,
) -> NormalCone {
    let ginv = metric.map(|g| g.inverse().expect("positive definite metric"));
    let generators = face
        .active
        .iter()
        .map(|&r| {
            let nu: Vec<f64> = p.facets()[r].normal.iter().map(|&c| -c as f64).collect();
            match &ginv {
                Some(gi) => gi.mul_vec(&nu),
                None => nu,
            }
        })
        .collect();
    NormalCone { face: face.clone(), generators, metric: metric.cloned() }
}

/// Witness that `y` belongs to the shifted cone of `point`: the residual
/// `y - grad psi(point)` with its nonnegative cone coefficients.
#[derive(Debug, Clone)]
pub struct ProjectionCertificate {
    pub point: Vec<f64>,
    pub face: FaceRef,
    pub residual: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl ProjectionCertificate {
    /// The projected point in the Legendre image, `pi(y) = grad psi(p)`.
    pub fn image(&self, psi: &ConvexFunction<f64>) -> Vec<f64> {
        psi.gradient(&self.point)
    }
}

const ACCEPT_TOL: f64 = 1e-9;

/// Solve the KKT system on one face: `p` in the face's affine span,
/// `grad psi(p) - sum t_r nu_r = y`, and accept when `p` stays in the
/// closed face with coefficients `t_r >= 0`. Quadratic psi converges in a
/// single Newton step.
fn solve_face(
    psi: &ConvexFunction<f64>,
    p: &DelzantPolytope,
    active: &[usize],
    start: &[f64],
    y: &[f64],
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let n = p.dim();
    let c = active.len();
    let mut point = start.to_vec();
    let mut coeffs = vec![0.0; c];
    let mut residual = f64::INFINITY;
    for _ in 0..60 {
        let jet = psi.jet(&point);
        let mut f = vec![0.0; n + c];
        for i in 0..n {
            f[i] = jet.gradient[i] - y[i];
            for (j, &r) in active.iter().enumerate() {
                f[i] -= coeffs[j] * p.facets()[r].normal[i] as f64;
            }
        }
        for (j, &r) in active.iter().enumerate() {
            f[n + j] = p.ell_f64(r, &point);
        }
        residual = linalg::norm_inf(&f);
        if residual < 1e-11 {
            break;
        }
        let mut jac = Matrix::zeros(n + c, n + c);
        for i in 0..n {
            for k in 0..n {
                jac[(i, k)] = jet.hessian[(i, k)];
            }
            for (j, &r) in active.iter().enumerate() {
                jac[(i, n + j)] = -(p.facets()[r].normal[i] as f64);
                jac[(n + j, i)] = p.facets()[r].normal[i] as f64;
            }
        }
        let step = jac.solve(&f)?;
        for i in 0..n {
            point[i] -= step[i];
        }
        for j in 0..c {
            coeffs[j] -= step[n + j];
        }
    }
    if residual > 1e-8 {
        return None;
    }
    Some((point, coeffs, residual))
}

/// The unique p in P with `y - grad psi(p)` in the normal cone at p,
/// found by trying faces in ascending codimension.
pub fn project_pi(
    psi: &ConvexFunction<f64>,
    p: &DelzantPolytope,
    y: &[f64],
) -> Result<ProjectionCertificate, ProjectionError> {
    let mut best_residual = f64::INFINITY;
    // Codimension 0: grad psi(p) = y with p interior.
    if let Ok(point) = psi.grad_inverse(y, &p.interior_point_f64()) {
        if p.contains_f64(&point, ACCEPT_TOL) {
            let residual = linalg::sub(y, &psi.gradient(&point));
            return Ok(ProjectionCertificate {
                point,
                face: FaceRef { active: vec![], codim: 0 },
                residual,
                coeffs: vec![],
            });
        }
    }
    let mut faces: Vec<&crate::polytope::Face> =
        p.faces().iter().filter(|f| f.codim >= 1).collect();
    faces.sort_by(|a, b| (a.codim, &a.active).cmp(&(b.codim, &b.active)));
    for face in faces {
        // Start from the face centroid.
        let verts = &face.vertices;
        let mut start = vec![0.0; p.dim()];
        for &vi in verts {
            let v = rvec_to_f64(&p.vertices()[vi]);
            for i in 0..p.dim() {
                start[i] += v[i] / verts.len() as f64;
            }
        }
        let Some((point, coeffs, residual)) = solve_face(psi, p, &face.active, &start, y)
        else {
            continue;
        };
        best_residual = best_residual.min(residual);
        if p.contains_f64(&point, ACCEPT_TOL) && coeffs.iter().all(|&t| t >= -ACCEPT_TOL) {
            let res = linalg::sub(y, &psi.gradient(&point));
            return Ok(ProjectionCertificate {
                point,
                face: FaceRef { active: face.active.clone(), codim: face.codim },
                residual: res,
                coeffs,
            });
        }
    }
    Err(ProjectionError::NoFaceAccepted { best_residual })
}

/// The implosion field `y - pi(y)`; vanishes exactly on the Legendre image
/// of the polytope.
pub fn id_minus_pi(
    psi: &ConvexFunction<f64>,
    p: &DelzantPolytope,
    y: &[f64],
) -> Result<Vec<f64>, ProjectionError> {
    Ok(project_pi(psi, p, y)?.residual)
}

/// Project a parametrized path, splitting the output at every change of
/// the accepting face (cone-wall crossings located by bisection). For
/// quadratic psi each returned piece is exactly linear.
fn project_split(
    psi: &ConvexFunction<f64>,
    p: &DelzantPolytope,
    y_at: &dyn Fn(f64) -> Vec<f64>,
    ts: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>, ProjectionError> {
    let mut pieces: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut cur: Vec<Vec<f64>> = Vec::new();
    let mut prev: Option<(f64, FaceRef)> = None;
    for &t in ts {
        let cert = project_pi(psi, p, &y_at(t))?;
        if let Some((pt, pf)) = &prev {
            if *pf != cert.face {
                let (mut lo, mut hi) = (*pt, t);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if project_pi(psi, p, &y_at(mid))?.face == *pf {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                // The projected path is continuous, so the wall point
                // closes one piece and opens the next.
                let wall = project_pi(psi, p, &y_at(hi))?.point;
                cur.push(wall.clone());
                pieces.push(std::mem::take(&mut cur));
                cur.push(wall);
            }
        }
        cur.push(cert.point);
        prev = Some((t, cert.face));
    }
    if cur.len() >= 2 {
        pieces.push(cur);
    }
    Ok(pieces)
}

/// Limit amoeba sample: project the tropical curve through pi and pull
/// back to the polytope. `pieces` groups the ordered samples per curve
/// edge or ray (each is a polyline for quadratic psi).
#[derive(Debug, Clone)]
pub struct LimitAmoeba {
    pub sample: AmoebaSample,
    pub pieces: Vec<Vec<Vec<f64>>>,
}

pub fn limit_amoeba(
    psi: &ConvexFunction<f64>,
    p: &DelzantPolytope,
    curve: &PolyhedralComplex,
    samples_per_edge: usize,
    ray_tol: f64,
) -> Result<LimitAmoeba, ProjectionError> {
    let spe = samples_per_edge.max(2);
    // Scale of the Legendre image, for the uniform part of ray sampling.
    let images: Vec<Vec<f64>> =
        p.vertices_f64().iter().map(|v| psi.gradient(v)).collect();
    let n = p.dim();
    let diam = (0..n)
        .map(|i| {
            let lo = images.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min);
            let hi = images.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(1.0f64, f64::max);

    let mut pieces = Vec::new();
    for seg in &curve.segments {
        let a = curve.vertex_f64(seg.a);
        let b = curve.vertex_f64(seg.b);
        let at = |f: f64| -> Vec<f64> {
            a.iter().zip(&b).map(|(x, z)| x + f * (z - x)).collect()
        };
        let ts: Vec<f64> = (0..=spe).map(|k| k as f64 / spe as f64).collect();
        pieces.extend(project_split(psi, p, &at, &ts)?);
    }
    for ray in &curve.rays {
        let base = curve.vertex_f64(ray.base);
        let dir: Vec<f64> = ray.dir.iter().map(|&c| c as f64).collect();
        let at = |t: f64| -> Vec<f64> {
            base.iter().zip(&dir).map(|(b, d)| b + t * d).collect()
        };
        // Uniform samples out to the Legendre-image diameter, then a
        // geometric tail until pi stabilizes.
        let h = diam / spe as f64;
        let mut ts: Vec<f64> = (0..=spe).map(|k| k as f64 * h).collect();
        let mut t = diam;
        let mut prev = project_pi(psi, p, &at(t))?.point;
        let mut stabilized = false;
        while t <= 1e6 {
            t *= 2.0;
            let cur = project_pi(psi, p, &at(t))?.point;
            let delta = linalg::norm2(&linalg::sub(&cur, &prev));
            ts.push(t);
            if delta < ray_tol {
                stabilized = true;
                break;
            }
            prev = cur;
        }
        if !stabilized {
            let last = project_pi(psi, p, &at(t))?.point;
            return Err(ProjectionError::RayNotStabilized { last, prev });
        }
        pieces.extend(project_split(psi, p, &at, &ts)?);
    }
    let points: Vec<Vec<f64>> = pieces.iter().flatten().cloned().collect();
    Ok(LimitAmoeba {
        sample: AmoebaSample::new(points, Tag::Limit, Space::Polytope),
        pieces,
    })
}

/// Exact GQ amoeba for quadratic psi: `skeleton` is the G-metric Voronoi
/// edge skeleton of the lattice points clipped to P (condition 1);
/// `boundary` holds the closed subsets of boundary facets whose unique
/// G-nearest lattice point lies outside the facet (condition 2).
#[derive(Debug, Clone)]
pub struct GqAmoeba {
    pub skeleton: PolyhedralComplex,
    pub boundary: PolyhedralComplex,
}

impl GqAmoeba {
    pub fn translated(&self, k: &[i64]) -> GqAmoeba {
        GqAmoeba { skeleton: self.skeleton.translated(k), boundary: self.boundary.translated(k) }
    }

    pub fn mapped(&self, a: &[Vec<i64>]) -> GqAmoeba {
        GqAmoeba { skeleton: self.skeleton.mapped(a), boundary: self.boundary.mapped(a) }
    }

    pub fn all_points_f64(&self, step: f64) -> Vec<Vec<f64>> {
        let mut out = self.skeleton.sample_segments(step);
        out.extend(self.boundary.sample_segments(step));
        out
    }
}

/// Exact rational symmetric matrix from a quadratic psi (entrywise exact:
/// every finite double is rational).
pub fn rational_metric(psi: &ConvexFunction<f64>) -> Result<Vec<Vec<Rat>>, ProjectionError> {
    match psi {
        ConvexFunction::Quadratic { g, .. } => Ok((0..g.rows)
            .map(|i| (0..g.cols).map(|j| rat_from_f64(g[(i, j)])).collect())
            .collect()),
        _ => Err(ProjectionError::NotQuadratic),
    }
}

fn gmul(g: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    g.iter().map(|row| rdot(row, v)).collect()
}

fn site_vec(m: &[i64]) -> Vec<Rat> {
    rvec(m)
}

/// `|p - m|_G^2` difference data: the bisector/dominance constraint
/// between sites a and b is `2 (b - a)^t G p <= b^t G b - a^t G a` for
/// "a at least as close as b".
fn dominance(g: &[Vec<Rat>], a: &[i64], b: &[i64]) -> (Vec<Rat>, Rat) {
    let va = site_vec(a);
    let vb = site_vec(b);
    let w: Vec<Rat> = rscale(&gmul(g, &rsub(&vb, &va)), &rat(2));
    let rhs = rdot(&vb, &gmul(g, &vb)) - rdot(&va, &gmul(g, &va));
    (w, rhs)
}

pub fn gq_amoeba(
    p: &DelzantPolytope,
    psi: &ConvexFunction<f64>,
) -> Result<GqAmoeba, ProjectionError> {
    gq_amoeba_rational(p, &rational_metric(psi)?)
}

pub fn gq_amoeba_rational(
    p: &DelzantPolytope,
    g: &[Vec<Rat>],
) -> Result<GqAmoeba, ProjectionError> {
    if p.dim() != 2 {
        return Err(ProjectionError::NotPlanar);
    }
    let sites = p.lattice_points();
    let mut skeleton = ComplexBuilder::new(2);

    // Condition 1: pairwise G-bisectors, clipped by dominance over the
    // remaining sites and by the polytope facets.
    for i in 0..sites.len() {
        for j in (i + 1)..sites.len() {
            let (w, rhs) = dominance(g, &sites[i], &sites[j]);
            // Bisector line: w^t u = rhs; canonical base, primitive direction.
            let nn = rdot(&w, &w);
            if nn.is_zero() {
                continue;
            }
            let base = rscale(&w, &(&rhs / &nn));
            let dir_rat: Vec<Rat> = vec![-w[1].clone(), w[0].clone()];
            let dir = primitive_direction(&dir_rat).expect("nonzero bisector direction");
            let dirv = rvec(&dir);

            let mut interval = LineInterval::full();
            let mut feasible = true;
            for (k, other) in sites.iter().enumerate() {
                if k == i || k == j {
                    continue;
                }
                // site i at least as close as site k: 2(mk-mi)^t G u <= rhs_k
                let (wk, rhs_k) = dominance(g, &sites[i], other);
                // -wk^t (base + t dir) >= -rhs_k
                let a = -rdot(&wk, &dirv);
                let c = rdot(&wk, &base) - rhs_k;
                if !interval.constrain(&a, &c) {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                for f in p.facets() {
                    let nu = rvec(&f.normal);
                    let a = rdot(&nu, &dirv);
                    let c = rat(f.offset) - rdot(&nu, &base);
                    if !interval.constrain(&a, &c) {
                        feasible = false;
                        break;
                    }
                }
            }
            if !feasible || interval.is_empty() || interval.is_point() {
                continue;
            }
            let (Some(lo), Some(hi)) = (interval.lo, interval.hi) else {
                // P is bounded, so the clipped cell is always a segment.
                continue;
            };
            let at = |t: &Rat| radd(&base, &rscale(&dirv, t));
            skeleton.segment(at(&lo), at(&hi), 1);
        }
    }

    // Condition 2: on each boundary facet, the closed subsets whose unique
    // nearest site is not on the facet.
    let mut boundary = ComplexBuilder::new(2);
    for face in p.faces() {
        if face.codim != 1 || face.vertices.len() != 2 {
            continue;
        }
        let va = p.vertices()[face.vertices[0]].clone();
        let vb = p.vertices()[face.vertices[1]].clone();
        let edge = rsub(&vb, &va);
        let r = face.active[0];
        for site in &sites {
            // Only sites off the facet line contribute.
            let on_facet = {
                let f = &p.facets()[r];
                rdot_int(&f.normal, &site_vec(site)) == rat(f.offset)
            };
            if on_facet {
                continue;
            }
            let mut interval = LineInterval::full();
            interval.clip_lo(rat(0));
            interval.clip_hi(rat(1));
            let mut feasible = true;
            for other in &sites {
                if other == site {
                    continue;
                }
                let (wk, rhs_k) = dominance(g, site, other);
                // p(t) = va + t*edge; need wk^t p <= rhs_k.
                let a = -rdot(&wk, &edge);
                let c = rdot(&wk, &va) - rhs_k;
                if !interval.constrain(&a, &c) {
                    feasible = false;
                    break;
                }
            }
            if !feasible || interval.is_empty() || interval.is_point() {
                continue;
            }
            let (lo, hi) = (interval.lo.unwrap(), interval.hi.unwrap());
            let at = |t: &Rat| radd(&va, &rscale(&edge, t));
            boundary.segment(at(&lo), at(&hi), 1);
        }
    }

    Ok(GqAmoeba { skeleton: skeleton.finish(), boundary: boundary.finish() })
}
