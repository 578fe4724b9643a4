//! Exact verification that classical BMO on the circle is controlled by two
//! translated dyadic BMO norms, with the supporting constructions: the dyadic
//! distance `d(δ)`, the interval fitting algorithm, sharp and maximal
//! function domination, atomic H¹ decompositions, product filtrations on the
//! torus and the level-offset filtration on the line.
//!
//! Everything is computed in exact rational arithmetic; the circle is
//! normalized to `[0, 1)`.

pub mod bmo;
pub mod circle;
pub mod error;
pub mod harness;
pub mod hardy;
pub mod multidim;
pub mod rat;
pub mod report;
mod scan;
pub mod step;

pub use bmo::{
    average, classical_bmo_lower_bound, dyadic_bmo_norm, dyadic_maximal, dyadic_sharp_function,
    hl_maximal_lower, mean_oscillation, sharp_function, verify_equivalence, EquivalenceReport,
    OscWitness,
};
pub use circle::{
    dyadic_distance, fit_interval, interval_bounds, pairwise_distance, Arc, DyadicInterval,
    Filtration, FitResult, Shift,
};
pub use error::{Error, Result};
pub use rat::Rat;
pub use step::StepFn;
