//! Numerical kernel behind every constraint-qualification verdict.

mod caratheodory;
mod dependence;
mod membership;
mod rank;

pub use caratheodory::{caratheodory_reduce, CaratheodoryError, CaratheodoryResult, RECONSTRUCTION_TOL};
pub use dependence::{
    check_direction, check_witness, conic_dependence, direction_margin, Certificate, ConeTerm, ConicSystem, Verdict,
    Witness, WitnessCheck, DEFAULT_BUDGET, DEFAULT_TOL_CERT,
};
pub use membership::{cone_membership, nnls, Membership, MembershipError};
pub use rank::{greedy_basis, is_independent, numerical_rank, rank, RankInfo, DEFAULT_TOL_RANK};
