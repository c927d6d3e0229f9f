//! Heuristics and bounds for nonconvex quadratically constrained quadratic
//! programs (QCQPs).
//!
//! The crate follows a two-step pattern. A *suggest* method produces
//! candidate points (random, spectral relaxation, or samples from a
//! cutting-plane approximation of the semidefinite relaxation). An *improve*
//! method then runs a local scheme from each candidate and never returns a
//! point that is worse in the `(violation, objective)` lexicographic order.
//!
//! ```
//! use qcqp::generators::gen_partitioning;
//! use qcqp::improve::{improve_coordinate_descent, CdOptions};
//! use qcqp::linalg::Mat;
//! use qcqp::suggest::suggest_spectral;
//!
//! let w = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
//! let problem = gen_partitioning(&w).unwrap();
//! let suggestion = suggest_spectral(&problem, None).unwrap();
//! let report = improve_coordinate_descent(&problem, &suggestion.candidates[0], &CdOptions::default()).unwrap();
//! assert_eq!(report.assessment.violation, 0.0);
//! ```

pub mod generators;
pub mod improve;
pub mod linalg;
pub mod lp;
pub mod oneconstraint;
pub mod onevar;
pub mod problem;
pub mod relax;
pub mod rng;
pub mod split;
pub mod suggest;

pub use problem::{dehomogenize, Assessment, Constraint, QcqpProblem, QuadraticForm, Sense};
