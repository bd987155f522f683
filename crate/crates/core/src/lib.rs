//! Optimal transport calculus, Hopf-Lax evaluation and viscosity-rate
//! experiments on discrete and grid-discretised probability measures.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod cli;
pub mod convexity;
pub mod cost;
pub mod error;
pub mod functional;
pub mod grid;
pub mod hopflax;
pub mod io;
pub mod measure;
pub mod ot;
pub mod relaxed;
pub mod tangent;
pub mod viscosity;

pub use error::{Error, Result};
pub use measure::{Coupling, DiscreteMeasure, FiberFamily};
pub use ot::{transport_cost, w2, MethodTag, OtMethod, OtSolution};
