//! Kuramoto–Sivashinsky gradient systems on groove domains: geometry,
//! discrete fields, an implicit–explicit integrator, energy diagnostics and
//! numerical checks of the functional inequalities behind the decay theory.

pub mod checkpoint;
pub mod config;
pub mod convergence;
pub mod datum;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod groove;
pub mod integrator;
pub mod lab;
pub mod ops;
pub mod solver;

pub use error::{Error, Result};
pub use field::{ScalarField, VectorField3};
pub use grid::{Bc, Grid};
pub use groove::{constants, GrooveConstants, GrooveSpec, Orientation};
