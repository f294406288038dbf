//! manin-kit: numerical verification toolkit for quasi-symplectic spaces
//! with group-valued moment maps.
//!
//! The library builds finite-dimensional matrix models of metrized Lie
//! algebras and their doubles, equips homogeneous spaces with splittings and
//! the induced differential forms, and then checks the defining axioms of
//! the resulting moment-map geometry by finite differences at randomly
//! sampled points. Everything is deterministic given a seed.

pub mod config;
pub mod dirac;
pub mod error;
pub mod geomcalc;
pub mod hamspace;
pub mod moduli;
pub mod recipe;
pub mod report;
pub mod liealg;
pub mod liegroup;
pub mod linalg;
pub mod targets;

pub use config::Tolerances;
pub use error::{Error, Result};
