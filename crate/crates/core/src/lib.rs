//! Second-law admissibility of continuum constitutive models.
//!
//! Given a constitutive model (densities, fluxes, productions, entropy and
//! entropy flux as functions of the fields and their gradients), the balance
//! laws and the entropy inequality at a point reduce to a linear system
//! `A·y = C` and a linear inequality `B·y ≥ D` in the vector `y` of higher
//! derivatives. This crate decides whether the inequality holds on *every*
//! solution of the system (the second law then restricts the model, not the
//! processes) or whether real and over-ideal solutions coexist or no
//! admissible solution exists (the model is inadmissible).
//!
//! Modules:
//!
//! * [`kernel`]: layouts, state points and higher-derivative vectors.
//! * [`constitutive`]: the model trait and assembly of `A, C, B, D`.
//! * [`classify`]: vector and process taxonomies, amendment diagnostics.
//! * [`exploit`]: solution sets, multipliers and the verdict.
//! * [`models`]: Fourier and Cattaneo conductors.
//! * [`process`]: 1D explicit heat-conduction runs and CSV export.
//! * [`cli`]: the `dichotomy` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod constitutive;
pub mod error;
pub mod exploit;
pub mod kernel;
pub mod models;
pub mod par;
pub mod process;

pub use error::{Error, Result};
