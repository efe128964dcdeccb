//! Constraint-qualification diagnostics for nonlinear programs with several
//! second-order cone and positive semidefinite constraints.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

extern crate alloc;

pub mod akkt;
pub mod alm;
pub mod certificates;
pub mod classify;
pub mod cone;
pub mod cq;
pub mod expr;
pub mod linalg;
pub mod math;
pub mod problem;
pub mod reduction;
pub mod sampling;

pub use classify::{classify, BlockStatus, ClassifyError, IndexClassification};
pub use cone::{ConeKind, SocVector, SymMatrix};
pub use expr::{parse, Expr};
pub use problem::{evaluate, ConeValue, ConicBlock, ConicProgram, Equality, EvaluatedPoint};
