//! Scenario files: a TOML document describing a polytope, one or more
//! psi's, a Laurent polynomial (explicit terms or the GQ valuation), the
//! s values to sample, and output paths. `run_scenario` orchestrates the
//! full pipeline deterministically and writes SVG/CSV/report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amoeba::{hausdorff, sample_compact_amoeba, AmoebaError, AmoebaSample};
use crate::linalg::Matrix;
use crate::polytope::{build_polytope, DelzantPolytope, PolytopeError};
use crate::potential::{ConvexFunction, PotentialError, PotentialFamily};
use crate::projection::{gq_amoeba, limit_amoeba, GqAmoeba, LimitAmoeba, ProjectionError};
use crate::render::{render_scene, RenderError, Scene, Style};
use crate::tropical::{
    build_gq_valuation, tropical_curve_2d, PolyhedralComplex, Term, TropicalError,
    TropicalPolynomial,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema error at `{0}`: {1}")]
    Schema(String, String),
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Amoeba(#[from] AmoebaError),
    #[error(transparent)]
    Quantization(#[from] crate::quantization::QuantizationError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetSpec {
    pub normal: Vec<i64>,
    pub offset: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeSpec {
    pub facets: Vec<FacetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiSpec {
    Quadratic { g: Vec<Vec<f64>>, b: Option<Vec<f64>> },
    QuarticRadial,
}

/// `[psi]` single table or `[[psi]]` array: every entry is one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PsiField {
    One(PsiSpec),
    Many(Vec<PsiSpec>),
}

impl PsiField {
    pub fn as_slice(&self) -> &[PsiSpec] {
        match self {
            PsiField::One(p) => std::slice::from_ref(p),
            PsiField::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiSpec {
    #[default]
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub m: Vec<i64>,
    pub v: f64,
    /// Complex coefficient as [re, im]; defaults to 1.
    pub a: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LaurentSpec {
    /// Use the GQ valuation v(m) = psi(m) over all lattice points of P.
    #[serde(default)]
    pub gq: bool,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

fn default_grid() -> usize {
    400
}
fn default_theta_grid() -> usize {
    256
}
fn default_threshold() -> f64 {
    1e-3
}
fn default_spe() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_theta_grid")]
    pub theta_grid: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_spe")]
    pub samples_per_edge: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            s: vec![],
            grid: default_grid(),
            theta_grid: default_theta_grid(),
            threshold: default_threshold(),
            samples_per_edge: default_spe(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputSpec {
    pub svg: Option<String>,
    pub csv: Option<String>,
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub polytope: PolytopeSpec,
    pub psi: PsiField,
    #[serde(default)]
    pub phi: PhiSpec,
    #[serde(default)]
    pub laurent: LaurentSpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Validated scenario with the polytope built and s values sorted.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub polytope: Arc<DelzantPolytope>,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        // Surface the offending field when toml reports one.
        let field = if msg.contains("psi") || !text.contains("psi") {
            "psi".to_string()
        } else {
            e.span().map_or_else(String::new, |s| format!("byte {}", s.start))
        };
        ScenarioError::Schema(field, msg)
    })?;
    validate(doc)
}

pub fn serialize_scenario(sc: &Scenario) -> String {
    toml::to_string(&sc.doc).expect("scenario serializes")
}

fn validate(mut doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
    let facets = doc
        .polytope
        .facets
        .iter()
        .map(|f| (f.normal.clone(), f.offset))
        .collect();
    let polytope = Arc::new(build_polytope(facets)?);
    if doc.s_list().iter().any(|&s| s <= 0.0) {
        return Err(ScenarioError::Semantic("s values must be positive".into()));
    }
    doc.run.s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for t in &doc.laurent.terms {
        if t.m.len() != polytope.dim() {
            return Err(ScenarioError::Semantic(format!(
                "laurent term m={:?} has wrong dimension",
                t.m
            )));
        }
        let xf: Vec<f64> = t.m.iter().map(|&c| c as f64).collect();
        if !polytope.contains_f64(&xf, 1e-12) {
            return Err(ScenarioError::Semantic(format!(
                "laurent term m={:?} lies outside the polytope",
                t.m
            )));
        }
    }
    if !doc.laurent.gq && doc.laurent.terms.len() < 2 {
        return Err(ScenarioError::Semantic(
            "laurent needs gq = true or at least 2 terms".into(),
        ));
    }
    Ok(Scenario { doc, polytope })
}

impl ScenarioDoc {
    pub fn s_list(&self) -> &[f64] {
        &self.run.s
    }
}

pub fn build_psi(spec: &PsiSpec) -> Result<ConvexFunction<f64>, ScenarioError> {
    match spec {
        PsiSpec::Quadratic { g, b } => {
            let n = g.len();
            let mut m = Matrix::zeros(n, n);
            for (i, row) in g.iter().enumerate() {
                if row.len() != n {
                    return Err(ScenarioError::Semantic("psi.g must be square".into()));
                }
                for (j, &v) in row.iter().enumerate() {
                    m[(i, j)] = v;
                }
            }
            let b = b.clone().unwrap_or_else(|| vec![0.0; n]);
            Ok(ConvexFunction::quadratic(m, b)?)
        }
        PsiSpec::QuarticRadial => Ok(ConvexFunction::QuarticRadial),
    }
}

pub fn build_laurent(
    sc: &Scenario,
    psi: &ConvexFunction<f64>,
) -> Result<TropicalPolynomial, ScenarioError> {
    if sc.doc.laurent.gq {
        Ok(build_gq_valuation(psi, &sc.polytope.lattice_points())?)
    } else {
        let terms = sc
            .doc
            .laurent
            .terms
            .iter()
            .map(|t| {
                let a = t.a.unwrap_or([1.0, 0.0]);
                Term::with_coeff(t.m.clone(), t.v, Complex64::new(a[0], a[1]))
            })
            .collect();
        Ok(TropicalPolynomial::new(terms)?)
    }
}

/// Per-run results; stages that fail record the error and leave the field
/// empty so later stages can still run.
pub struct RunResult {
    pub label: String,
    pub tropical: Option<PolyhedralComplex>,
    pub limit: Option<LimitAmoeba>,
    pub gq: Option<GqAmoeba>,
    pub finite: Vec<AmoebaSample>,
    /// (s, Hausdorff(finite-s sample, limit sample)).
    pub hausdorff: Vec<(f64, f64)>,
    pub errors: Vec<(String, String)>,
    pub svg_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

pub struct ScenarioReport {
    pub runs: Vec<RunResult>,
    pub report_path: Option<PathBuf>,
}

impl ScenarioReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for run in &self.runs {
            let _ = writeln!(out, "run {}", run.label);
            if let Some(t) = &run.tropical {
                let _ = writeln!(
                    out,
                    "  tropical: {} vertices, {} segments, {} rays",
                    t.vertices.len(),
                    t.segments.len(),
                    t.rays.len()
                );
            }
            if let Some(l) = &run.limit {
                let _ = writeln!(
                    out,
                    "  limit: {} pieces, {} samples",
                    l.pieces.len(),
                    l.sample.points.len()
                );
            }
            if let Some(g) = &run.gq {
                let _ = writeln!(
                    out,
                    "  gq: {} skeleton segments, {} boundary segments",
                    g.skeleton.segments.len(),
                    g.boundary.segments.len()
                );
            }
            for sample in &run.finite {
                let _ = writeln!(out, "  sample {}: {} points", sample.tag, sample.points.len());
            }
            for (s, d) in &run.hausdorff {
                let _ = writeln!(out, "  hausdorff s={s}: {d:.6}");
            }
            for (stage, err) in &run.errors {
                let _ = writeln!(out, "  error [{stage}]: {err}");
            }
        }
        out
    }
}

fn suffixed(path: &str, idx: usize, many: bool) -> PathBuf {
    if !many {
        return PathBuf::from(path);
    }
    let p = Path::new(path);
    let stem = p.file_stem().map_or("out", |s| s.to_str().unwrap_or("out"));
    let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
    let name = if ext.is_empty() {
        format!("{stem}_{idx}")
    } else {
        format!("{stem}_{idx}.{ext}")
    };
    p.with_file_name(name)
}

pub fn run_scenario(sc: &Scenario, out_dir: &Path) -> Result<ScenarioReport, ScenarioError> {
    let psis = sc.doc.psi.as_slice();
    let many = psis.len() > 1;
    let mut runs = Vec::new();
    for (idx, psi_spec) in psis.iter().enumerate() {
        let psi = build_psi(psi_spec)?;
        let tpoly = build_laurent(sc, &psi)?;
        let mut run = RunResult {
            label: format!("psi[{idx}]"),
            tropical: None,
            limit: None,
            gq: None,
            finite: Vec::new(),
            hausdorff: Vec::new(),
            errors: Vec::new(),
            svg_path: None,
            csv_path: None,
        };

        if sc.polytope.dim() == 2 {
            match tropical_curve_2d(&tpoly) {
                Ok(c) => run.tropical = Some(c),
                Err(e) => run.errors.push(("tropical".into(), e.to_string())),
            }
            if let Some(curve) = &run.tropical {
                match limit_amoeba(
                    &psi,
                    &sc.polytope,
                    curve,
                    sc.doc.run.samples_per_edge,
                    1e-8,
                ) {
                    Ok(l) => run.limit = Some(l),
                    Err(e) => run.errors.push(("limit".into(), e.to_string())),
                }
            }
            if sc.doc.laurent.gq && matches!(psi_spec, PsiSpec::Quadratic { .. }) {
                match gq_amoeba(&sc.polytope, &psi) {
                    Ok(g) => run.gq = Some(g),
                    Err(e) => run.errors.push(("gq".into(), e.to_string())),
                }
            }
        }

        let family =
            PotentialFamily::new(sc.polytope.clone(), ConvexFunction::Zero, psi.clone());
        for &s in sc.doc.s_list() {
            match sample_compact_amoeba(
                &family,
                &tpoly,
                s,
                sc.doc.run.grid,
                sc.doc.run.theta_grid,
                sc.doc.run.threshold,
            ) {
                Ok(sample) => {
                    if let Some(lim) = &run.limit {
                        if let Ok(d) = hausdorff(&sample, &lim.sample) {
                            run.hausdorff.push((s, d));
                        }
                    }
                    run.finite.push(sample);
                }
                Err(e) => run.errors.push((format!("finite_s={s}"), e.to_string())),
            }
        }

        if let Some(svg_name) = &sc.doc.output.svg {
            if sc.polytope.dim() == 2 {
                let mut scene = Scene::new();
                scene.add_polytope(&sc.polytope);
                if let Some(t) = &run.tropical {
                    scene.add_complex(t, Style::ConeDotted);
                }
                if let Some(l) = &run.limit {
                    scene.add_pieces(&l.pieces, Style::AmoebaEdge);
                }
                if let Some(g) = &run.gq {
                    scene.add_complex(&g.skeleton, Style::TropicalEdge);
                    scene.add_complex(&g.boundary, Style::BoundaryPiece);
                }
                if let Some(last) = run.finite.last() {
                    scene.add_sample(last, Style::SamplePoint);
                }
                match render_scene(&scene) {
                    Ok(svg) => {
                        let path = out_dir.join(suffixed(svg_name, idx, many));
                        std::fs::write(&path, svg)?;
                        run.svg_path = Some(path);
                    }
                    Err(e) => run.errors.push(("svg".into(), e.to_string())),
                }
            }
        }

        if let Some(csv_name) = &sc.doc.output.csv {
            let mut samples: Vec<&AmoebaSample> = Vec::new();
            if let Some(l) = &run.limit {
                samples.push(&l.sample);
            }
            samples.extend(run.finite.iter());
            if !samples.is_empty() {
                let mut csv = String::new();
                for (i, s) in samples.iter().enumerate() {
                    let text = s.to_csv();
                    if i == 0 {
                        csv.push_str(&text);
                    } else if let Some(pos) = text.find('\n') {
                        csv.push_str(&text[pos + 1..]);
                    }
                }
                let path = out_dir.join(suffixed(csv_name, idx, many));
                std::fs::write(&path, csv)?;
                run.csv_path = Some(path);
            }
        }

        runs.push(run);
    }

    let mut report = ScenarioReport { runs, report_path: None };
    if let Some(report_name) = &sc.doc.output.report {
        let path = out_dir.join(report_name);
        std::fs::write(&path, report.to_text())?;
        report.report_path = Some(path);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"
[polytope]
facets = [
  { normal = [1, 0], offset = 0 },
  { normal = [0, 1], offset = 0 },
  { normal = [-1, -1], offset = -1 },
]

[[psi]]
kind = "quadratic"
g = [[1.0, 0.0], [0.0, 1.0]]

[[psi]]
kind = "quadratic"
g = [[1.5, 0.75], [0.75, 1.5]]

[[psi]]
kind = "quadratic"
g = [[0.75, 0.5], [0.5, 0.75]]

[laurent]
terms = [
  { m = [0, 0], v = 0.0 },
  { m = [1, 0], v = 0.5 },
  { m = [0, 1], v = 0.25 },
]

[run]
s = [5.0, 10.0]
grid = 60
theta_grid = 32
"#;

    #[test]
    fn fig2_document_three_runs() {
        let sc = parse_scenario(FIG2).unwrap();
        assert_eq!(sc.doc.psi.as_slice().len(), 3);
        assert_eq!(sc.doc.run.grid, 60);
        assert_eq!(sc.doc.run.threshold, 1e-3);
        assert_eq!(sc.doc.run.samples_per_edge, 64);
        assert_eq!(sc.polytope.dim(), 2);
    }

    #[test]
    fn missing_psi_is_schema_error() {
        let text = "[polytope]\nfacets = [{ normal = [1], offset = 0 }, { normal = [-1], offset = -1 }]\n";
        match parse_scenario(text) {
            Err(ScenarioError::Schema(field, _)) => assert_eq!(field, "psi"),
            other => panic!("expected schema error, got {other:?}", other = other.err()),
        }
    }

    #[test]
    fn term_outside_polytope_is_semantic_error() {
        let text = r#"
[polytope]
facets = [
  { normal = [1, 0], offset = 0 },
  { normal = [0, 1], offset = 0 },
  { normal = [-1, -1], offset = -1 },
]
[psi]
kind = "quadratic"
g = [[1.0, 0.0], [0.0, 1.0]]
[laurent]
terms = [ { m = [0, 0], v = 0.0 }, { m = [3, 3], v = 0.0 } ]
"#;
        assert!(matches!(parse_scenario(text), Err(ScenarioError::Semantic(_))));
    }

    #[test]
    fn round_trip() {
        let sc = parse_scenario(FIG2).unwrap();
        let text = serialize_scenario(&sc);
        let sc2 = parse_scenario(&text).unwrap();
        assert_eq!(sc.doc, sc2.doc);
    }

    #[test]
    fn run_fig2_first_column() {
        let mut sc = parse_scenario(FIG2).unwrap();
        // Only the first psi, small grids, no file outputs.
        let first = sc.doc.psi.as_slice()[0].clone();
        sc.doc.psi = PsiField::One(first);
        let dir = tempfile::tempdir().unwrap();
        let report = run_scenario(&sc, dir.path()).unwrap();
        assert_eq!(report.runs.len(), 1);
        let run = &report.runs[0];
        assert!(run.errors.is_empty(), "{:?}", run.errors);
        assert_eq!(run.tropical.as_ref().unwrap().rays.len(), 3);
        assert_eq!(run.limit.as_ref().unwrap().pieces.len(), 6);
        assert_eq!(run.hausdorff.len(), 2);
        // Hausdorff decreases with s.
        assert!(run.hausdorff[1].1 <= run.hausdorff[0].1 + 2.0 / 60.0);
    }

    #[test]
    fn deterministic_outputs() {
        let text = r#"
[polytope]
facets = [
  { normal = [1, 0], offset = 0 },
  { normal = [0, 1], offset = 0 },
  { normal = [-1, -1], offset = -1 },
]
[psi]
kind = "quadratic"
g = [[1.0, 0.0], [0.0, 1.0]]
[laurent]
gq = true
[run]
s = [10.0]
grid = 40
theta_grid = 16
[output]
svg = "out.svg"
csv = "out.csv"
report = "report.txt"
"#;
        let sc = parse_scenario(text).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_scenario(&sc, d1.path()).unwrap();
        run_scenario(&sc, d2.path()).unwrap();
        for name in ["out.svg", "out.csv", "report.txt"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert!(!a.is_empty());
            assert_eq!(a, b, "{name} not byte-identical");
        }
    }
}
