//! Monotone wide-stencil finite differences for
//! `P⁺_{λ,Λ|p}(D²u) + b|Du| − cu = f` on planar domains (`n = 2`, `p ∈ {1, 2}`).

mod experiments;
mod grid;
mod scheme;
mod solver;
mod stencil;

pub use experiments::{
    counterexample_grid, emp_experiment, removability_experiment, CounterexampleGridReport, EmpConfig,
    EmpReport, EmpRow, RemovabilityConfig, RemovabilityReport, RemovabilityRow,
};
pub use grid::{Domain, Grid2D, NodeKind, FIELD_HEADER};
pub use scheme::{directional_second_diff, discrete_gradient_norm, discrete_pucci_plus, scheme_value};
pub use solver::{solve, SolveOptions, SolveReport};
pub use stencil::Stencil;
