//! Higher-dimensional analogues: product filtrations on `T^m` and
//! level-offset filtrations on ℝ.

pub mod line;
pub mod torus;

pub use line::{best_fit_r, build_r_filtration, fit_interval_r, RFit, RLevelSystem};
pub use torus::{
    classical_lower_bound_md, dyadic_bmo_norm_md, fit_cube, verify_equivalence_md, Cube, CubeFit,
    CubeProofTrace, CubeWitness, DyadicCube, DyadicNormMd, EquivalenceReportMd, GridFn,
    ShiftFamily,
};
