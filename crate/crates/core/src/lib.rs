//! Compact tropical amoebas on smooth projective toric varieties.
//!
//! The crate computes corner loci of tropical polynomials, finite-`s`
//! amoebas and their compact pullbacks to the moment polytope, limit
//! amoebas obtained by projecting the tropical curve through the cone
//! partition of a Legendre transform, GQ amoebas with the exact
//! anisotropic-Voronoi description for quadratic potentials, and the
//! quantization-side quantities (Dirac concentration of monomial section
//! densities, section norms, Bohr-Sommerfeld counts).
//!
//! Smooth analysis is generic over the scalar type (see [`scalar::Scalar`]);
//! combinatorics and corner loci are exact over big rationals.

pub mod amoeba;
pub mod linalg;
pub mod polytope;
pub mod potential;
pub mod projection;
pub mod quadrature;
pub mod quantization;
pub mod rational;
pub mod render;
pub mod scalar;
pub mod scenario;
pub mod tropical;

/// Default floating scalar used by the CLI and the shipped scenarios.
pub type Real = f64;

pub type Jet2 = potential::Jet2<Real>;
pub type ConvexFunction = potential::ConvexFunction<Real>;
pub type PotentialFamily = potential::PotentialFamily<Real>;
pub type Matrix = linalg::Matrix<Real>;

pub use polytope::{build_polytope, AffineChart, DelzantPolytope, FaceRef};
pub use rational::Rat;
pub use amoeba::{hausdorff, sample_compact_amoeba, AmoebaSample};
pub use projection::{gq_amoeba, limit_amoeba, project_pi, GqAmoeba, LimitAmoeba};
pub use scenario::{parse_scenario, run_scenario, Scenario};
pub use tropical::{build_gq_valuation, tropical_curve_2d, PolyhedralComplex, Term, TropicalPolynomial};
