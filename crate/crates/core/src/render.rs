//! Deterministic SVG emission: layered 2D scenes on a fixed 800x800
//! viewport with 5% padding. All coordinates are printed with {:.6} so
//! identical scenes yield byte-identical documents.

use std::fmt::Write as _;

use thiserror::Error;

use crate::amoeba::AmoebaSample;
use crate::polytope::DelzantPolytope;
use crate::quadrature::ordered_polygon;
use crate::tropical::PolyhedralComplex;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("scene has no layers")]
    EmptyScene,
}

pub const VIEWPORT: f64 = 800.0;
pub const PADDING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    PolytopeOutline,
    ConeDotted,
    TropicalEdge,
    AmoebaEdge,
    BoundaryPiece,
    LatticePoint,
    SamplePoint,
}

impl Style {
    fn stroke_attrs(self) -> &'static str {
        match self {
            Style::PolytopeOutline => "fill=\"none\" stroke=\"#222222\" stroke-width=\"1.5\"",
            Style::ConeDotted => {
                "fill=\"none\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"2,4\""
            }
            Style::TropicalEdge => "fill=\"none\" stroke=\"#2c6fbb\" stroke-width=\"2\"",
            Style::AmoebaEdge => "fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"",
            Style::BoundaryPiece => "fill=\"none\" stroke=\"#8e44ad\" stroke-width=\"3\"",
            Style::LatticePoint | Style::SamplePoint => "",
        }
    }

    fn point_attrs(self) -> (&'static str, f64) {
        match self {
            Style::LatticePoint => ("fill=\"#222222\"", 4.0),
            Style::SamplePoint => ("fill=\"#c0392b\"", 1.5),
            _ => ("fill=\"#000000\"", 2.0),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Geometry {
    Points(Vec<[f64; 2]>),
    Segments(Vec<([f64; 2], [f64; 2])>),
    /// (base, direction) pairs; clipped to the viewport at render time.
    Rays(Vec<([f64; 2], [f64; 2])>),
    Polygon(Vec<[f64; 2]>),
    /// Open polyline.
    Path(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub layers: Vec<(Geometry, Style)>,
}

impl Scene {
    pub fn new() -> Self {
        Scene::default()
    }

    pub fn push(&mut self, geometry: Geometry, style: Style) {
        self.layers.push((geometry, style));
    }

    pub fn add_polytope(&mut self, p: &DelzantPolytope) {
        assert_eq!(p.dim(), 2);
        self.push(Geometry::Polygon(ordered_polygon(p)), Style::PolytopeOutline);
        let pts: Vec<[f64; 2]> = p
            .lattice_points()
            .iter()
            .map(|m| [m[0] as f64, m[1] as f64])
            .collect();
        self.push(Geometry::Points(pts), Style::LatticePoint);
    }

    pub fn add_complex(&mut self, c: &PolyhedralComplex, style: Style) {
        let segs = c
            .segments
            .iter()
            .map(|s| {
                let a = c.vertex_f64(s.a);
                let b = c.vertex_f64(s.b);
                ([a[0], a[1]], [b[0], b[1]])
            })
            .collect();
        self.push(Geometry::Segments(segs), style);
        let rays = c
            .rays
            .iter()
            .map(|r| {
                let b = c.vertex_f64(r.base);
                ([b[0], b[1]], [r.dir[0] as f64, r.dir[1] as f64])
            })
            .collect();
        self.push(Geometry::Rays(rays), style);
    }

    pub fn add_sample(&mut self, sample: &AmoebaSample, style: Style) {
        let pts = sample.points.iter().map(|p| [p[0], p[1]]).collect();
        self.push(Geometry::Points(pts), style);
    }

    pub fn add_pieces(&mut self, pieces: &[Vec<Vec<f64>>], style: Style) {
        for piece in pieces {
            let path = piece.iter().map(|p| [p[0], p[1]]).collect();
            self.push(Geometry::Path(path), style);
        }
    }
}

/// World bounding box over the finite geometry (ray bases count, ray
/// directions do not).
fn scene_bounds(scene: &Scene) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut take = |p: &[f64; 2]| {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    };
    for (g, _) in &scene.layers {
        match g {
            Geometry::Points(pts) | Geometry::Polygon(pts) | Geometry::Path(pts) => {
                pts.iter().for_each(&mut take)
            }
            Geometry::Segments(ss) => ss.iter().for_each(|(a, b)| {
                take(a);
                take(b);
            }),
            Geometry::Rays(rs) => rs.iter().for_each(|(b, _)| take(b)),
        }
    }
    for i in 0..2 {
        if !lo[i].is_finite() || !hi[i].is_finite() {
            lo[i] = 0.0;
            hi[i] = 1.0;
        }
        if hi[i] - lo[i] < 1e-12 {
            lo[i] -= 0.5;
            hi[i] += 0.5;
        }
    }
    (lo, hi)
}

struct Mapper {
    lo: [f64; 2],
    scale: f64,
    off: [f64; 2],
}

impl Mapper {
    fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let inner = VIEWPORT * (1.0 - 2.0 * PADDING);
        let scale = inner / span;
        // Center the drawing in the viewport.
        let off = [
            (VIEWPORT - (hi[0] - lo[0]) * scale) * 0.5,
            (VIEWPORT - (hi[1] - lo[1]) * scale) * 0.5,
        ];
        Mapper { lo, scale, off }
    }

    fn map(&self, p: &[f64; 2]) -> [f64; 2] {
        [
            self.off[0] + (p[0] - self.lo[0]) * self.scale,
            VIEWPORT - self.off[1] - (p[1] - self.lo[1]) * self.scale,
        ]
    }

    /// Largest t with base + t*dir still inside the padded world window.
    fn clip_ray(&self, base: &[f64; 2], dir: &[f64; 2]) -> f64 {
        let margin = VIEWPORT / self.scale;
        let lo = [self.lo[0] - margin, self.lo[1] - margin];
        let hi = [self.lo[0] + 2.0 * margin, self.lo[1] + 2.0 * margin];
        let mut t = f64::INFINITY;
        for i in 0..2 {
            if dir[i] > 0.0 {
                t = t.min((hi[i] - base[i]) / dir[i]);
            } else if dir[i] < 0.0 {
                t = t.min((lo[i] - base[i]) / dir[i]);
            }
        }
        if t.is_finite() && t > 0.0 {
            t
        } else {
            0.0
        }
    }
}

fn fmt_pt(out: &mut String, p: &[f64; 2]) {
    let _ = write!(out, "{:.6},{:.6}", p[0], p[1]);
}

pub fn render_scene(scene: &Scene) -> Result<String, RenderError> {
    if scene.layers.is_empty() {
        return Err(RenderError::EmptyScene);
    }
    let (lo, hi) = scene_bounds(scene);
    let mapper = Mapper::new(lo, hi);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{v}\" height=\"{v}\" viewBox=\"0 0 {v} {v}\">",
        v = VIEWPORT as u32
    );
    let _ = writeln!(svg, "<rect width=\"{v}\" height=\"{v}\" fill=\"#ffffff\"/>", v = VIEWPORT as u32);
    for (g, style) in &scene.layers {
        match g {
            Geometry::Polygon(pts) if pts.len() >= 2 => {
                let mut d = String::new();
                for (i, p) in pts.iter().enumerate() {
                    d.push_str(if i == 0 { "M " } else { " L " });
                    fmt_pt(&mut d, &mapper.map(p));
                }
                d.push_str(" Z");
                let _ = writeln!(svg, "<path d=\"{}\" {}/>", d, style.stroke_attrs());
            }
            Geometry::Path(pts) if pts.len() >= 2 => {
                let mut d = String::new();
                for (i, p) in pts.iter().enumerate() {
                    d.push_str(if i == 0 { "M " } else { " L " });
                    fmt_pt(&mut d, &mapper.map(p));
                }
                let _ = writeln!(svg, "<path d=\"{}\" {}/>", d, style.stroke_attrs());
            }
            Geometry::Segments(ss) => {
                for (a, b) in ss {
                    let pa = mapper.map(a);
                    let pb = mapper.map(b);
                    let _ = writeln!(
                        svg,
                        "<line x1=\"{:.6}\" y1=\"{:.6}\" x2=\"{:.6}\" y2=\"{:.6}\" {}/>",
                        pa[0], pa[1], pb[0], pb[1], style.stroke_attrs()
                    );
                }
            }
            Geometry::Rays(rs) => {
                for (base, dir) in rs {
                    let t = mapper.clip_ray(base, dir);
                    if t == 0.0 {
                        continue;
                    }
                    let end = [base[0] + t * dir[0], base[1] + t * dir[1]];
                    let pa = mapper.map(base);
                    let pb = mapper.map(&end);
                    let _ = writeln!(
                        svg,
                        "<line x1=\"{:.6}\" y1=\"{:.6}\" x2=\"{:.6}\" y2=\"{:.6}\" {}/>",
                        pa[0], pa[1], pb[0], pb[1], style.stroke_attrs()
                    );
                }
            }
            Geometry::Points(pts) => {
                let (fill, r) = style.point_attrs();
                for p in pts {
                    let q = mapper.map(p);
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{r}\" {fill}/>",
                        q[0], q[1]
                    );
                }
            }
            _ => {}
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::fixtures::simplex;

    #[test]
    fn empty_scene_rejected() {
        assert!(matches!(render_scene(&Scene::new()), Err(RenderError::EmptyScene)));
    }

    #[test]
    fn polygon_layer_single_path() {
        let mut sc = Scene::new();
        sc.push(
            Geometry::Polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
            Style::PolytopeOutline,
        );
        let svg = render_scene(&sc).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn deterministic_bytes() {
        let mut sc = Scene::new();
        sc.add_polytope(&simplex());
        sc.push(
            Geometry::Rays(vec![([0.5, 0.25], [1.0, 1.0]), ([0.5, 0.25], [-1.0, 0.0])]),
            Style::TropicalEdge,
        );
        let a = render_scene(&sc).unwrap();
        let b = render_scene(&sc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rays_are_clipped_finite() {
        let mut sc = Scene::new();
        sc.push(Geometry::Polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), Style::PolytopeOutline);
        sc.push(Geometry::Rays(vec![([0.5, 0.5], [1.0, 1.0])]), Style::ConeDotted);
        let svg = render_scene(&sc).unwrap();
        assert!(!svg.contains("inf") && !svg.contains("NaN"));
        assert_eq!(svg.matches("<line").count(), 1);
    }
}
