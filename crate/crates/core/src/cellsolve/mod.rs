//! Periodic cell problems: the generic spectral Stokes kernel, the fast and
//! slow corrector families, and the constant-coefficient auxiliary problem.

mod auxiliary;
mod fast;
mod slow;
mod stokes;

pub(crate) use auxiliary::aux_spectra;
pub use auxiliary::{solve_stokes_auxiliary, AuxiliarySolution};
pub use fast::{solve_fast_cell, solve_fast_family, FastCellSlice, FastCorrectorFamily};
pub use slow::{
    assemble_mesoscale, assemble_mesoscale_with, fast_gradients, mesoscale_at, solve_slow_cell, MesoscaleCoefficient,
    SlowCorrectorFamily,
};
pub use stokes::{
    solve_constant, stokes_cell_solve, Forcing, SolveReport, SolverOptions, StokesOperator, StokesSolution,
};
