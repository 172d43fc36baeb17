//! Thermoviscoelastic heat generation by acoustic waves.
//!
//! A 1-D explicit finite-difference solver for a Kelvin–Voigt solid whose
//! stiffness depends on temperature, together with diagnostics that check the
//! energy identities and generalized-solution inequalities of the continuous
//! model on computed trajectories, and a small dense tensor toolkit.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod harness;
pub mod materials;
pub mod solver1d;
pub mod tensor;
