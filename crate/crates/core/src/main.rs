use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use troamoeba::amoeba::{hausdorff, sample_compact_amoeba};
use troamoeba::potential::ConvexFunction;
use troamoeba::projection::{gq_amoeba, id_minus_pi, limit_amoeba, project_pi};
use troamoeba::quadrature::QuadratureSpec;
use troamoeba::quantization::{dirac_concentration, norm_log_derivative, section_norm_l1};
use troamoeba::scenario::{
    build_laurent, build_psi, parse_scenario, run_scenario, Scenario, ScenarioError,
};
use troamoeba::tropical::tropical_curve_2d;
use troamoeba::PotentialFamily;

#[derive(Parser)]
#[command(name = "troamoeba", about = "Compact tropical amoebas on toric varieties")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a full scenario: tropical curve, limit/GQ amoebas, finite-s
    /// samples, Hausdorff table, and all configured outputs.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print the tropical curve of the scenario's Laurent polynomial.
    Tropical { scenario: PathBuf },
    /// Sample the limit amoeba and print or write it as CSV.
    LimitAmoeba {
        scenario: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the exact GQ amoeba (quadratic psi only).
    GqAmoeba { scenario: PathBuf },
    /// Project a single point through pi and print the certificate.
    Project {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
    },
    /// CSV of the implosion field id - pi over a grid around the polytope.
    Implode {
        scenario: PathBuf,
        #[arg(long, default_value_t = 20)]
        grid: usize,
        #[arg(long, default_value_t = 2.0)]
        margin: f64,
    },
    /// Convergence table for monomial section densities: s, mass fraction
    /// in the epsilon-ball at m, log-norm, log-derivative.
    Sections {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        m: Vec<i64>,
        #[arg(long = "s-list", value_delimiter = ',')]
        s_list: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Hausdorff distances between finite-s samples and the limit amoeba.
    Hausdorff {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long = "theta-grid")]
        theta_grid: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn load(path: &PathBuf) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

fn first_psi(sc: &Scenario) -> Result<ConvexFunction<f64>, ScenarioError> {
    build_psi(&sc.doc.psi.as_slice()[0])
}

fn execute(cmd: Cmd) -> Result<(), ScenarioError> {
    match cmd {
        Cmd::Run { scenario, out_dir } => {
            let sc = load(&scenario)?;
            let report = run_scenario(&sc, &out_dir)?;
            print!("{}", report.to_text());
        }
        Cmd::Tropical { scenario } => {
            let sc = load(&scenario)?;
            let psi = first_psi(&sc)?;
            let tpoly = build_laurent(&sc, &psi)?;
            let curve = tropical_curve_2d(&tpoly)?;
            print!("{}", curve.to_text());
        }
        Cmd::LimitAmoeba { scenario, csv } => {
            let sc = load(&scenario)?;
            let psi = first_psi(&sc)?;
            let tpoly = build_laurent(&sc, &psi)?;
            let curve = tropical_curve_2d(&tpoly)?;
            let lim =
                limit_amoeba(&psi, &sc.polytope, &curve, sc.doc.run.samples_per_edge, 1e-8)?;
            let text = lim.sample.to_csv();
            match csv {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
        }
        Cmd::GqAmoeba { scenario } => {
            let sc = load(&scenario)?;
            let psi = first_psi(&sc)?;
            let gq = gq_amoeba(&sc.polytope, &psi)?;
            println!("skeleton:");
            print!("{}", gq.skeleton.to_text());
            println!("boundary:");
            print!("{}", gq.boundary.to_text());
        }
        Cmd::Project { scenario, y } => {
            let sc = load(&scenario)?;
            let psi = first_psi(&sc)?;
            if y.len() != sc.polytope.dim() {
                return Err(ScenarioError::Semantic("--y has wrong dimension".into()));
            }
            let cert = project_pi(&psi, &sc.polytope, &y)?;
            println!("point: {:?}", cert.point);
            println!("face: active={:?} codim={}", cert.face.active, cert.face.codim);
            println!("residual: {:?}", cert.residual);
            println!("coeffs: {:?}", cert.coeffs);
        }
        Cmd::Implode { scenario, grid, margin } => {
            let sc = load(&scenario)?;
            let psi = first_psi(&sc)?;
            let (lo, hi) = sc.polytope.bounding_box();
            let n = sc.polytope.dim();
            if n != 2 {
                return Err(ScenarioError::Semantic("implode needs a 2d polytope".into()));
            }
            println!("y1,y2,d1,d2");
            for i in 0..=grid {
                for j in 0..=grid {
                    let f = |k: usize, t: usize| {
                        lo[k] - margin
                            + (hi[k] - lo[k] + 2.0 * margin) * t as f64 / grid as f64
                    };
                    let y = [f(0, i), f(1, j)];
                    let d = id_minus_pi(&psi, &sc.polytope, &y)?;
                    println!("{:.6},{:.6},{:.6},{:.6}", y[0], y[1], d[0], d[1]);
                }
            }
        }
        Cmd::Sections { scenario, m, s_list, epsilon } => {
            let sc = load(&scenario)?;
            let psi = first_psi(&sc)?;
            let family =
                PotentialFamily::new(sc.polytope.clone(), ConvexFunction::Zero, psi);
            let spec = QuadratureSpec::default();
            println!("s,mass_fraction,log_norm,log_derivative");
            for &s in &s_list {
                let mass = dirac_concentration(&family, s, &m, epsilon, &spec)?;
                let norm = section_norm_l1(&family, s, &m, &spec)?;
                let deriv = norm_log_derivative(&family, s, &m, &spec)?;
                println!("{s},{mass:.6},{:.6},{deriv:.6}", norm.log);
            }
        }
        Cmd::Hausdorff { scenario, s, grid, theta_grid, threshold } => {
            let mut sc = load(&scenario)?;
            if !s.is_empty() {
                sc.doc.run.s = s;
                sc.doc.run.s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
            if let Some(g) = grid {
                sc.doc.run.grid = g;
            }
            if let Some(t) = theta_grid {
                sc.doc.run.theta_grid = t;
            }
            if let Some(t) = threshold {
                sc.doc.run.threshold = t;
            }
            let psi = first_psi(&sc)?;
            let tpoly = build_laurent(&sc, &psi)?;
            let curve = tropical_curve_2d(&tpoly)?;
            let lim =
                limit_amoeba(&psi, &sc.polytope, &curve, sc.doc.run.samples_per_edge, 1e-8)?;
            let family =
                PotentialFamily::new(sc.polytope.clone(), ConvexFunction::Zero, psi);
            println!("s,hausdorff");
            for &s in sc.doc.s_list() {
                let sample = sample_compact_amoeba(
                    &family,
                    &tpoly,
                    s,
                    sc.doc.run.grid,
                    sc.doc.run.theta_grid,
                    sc.doc.run.threshold,
                )?;
                let d = hausdorff(&sample, &lim.sample)?;
                println!("{s},{d:.6}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                ScenarioError::Schema(..)
                | ScenarioError::Semantic(_)
                | ScenarioError::Polytope(_)
                | ScenarioError::Tropical(_)
                | ScenarioError::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
