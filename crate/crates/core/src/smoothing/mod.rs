//! The smoothing operator `S_ε`, boundary cut-offs `ψ_r`, and evaluation of
//! cell fields at `x/ε` and `x/ε²` on macroscopic grids.

mod cutoff;
mod mollifier;
mod twoscale;

pub use cutoff::{cutoff, CutoffField};
pub use mollifier::{mollify, Kernel, Mollifier};
pub use twoscale::{eval_slow, eval_two_scale, integer_inverse, EvalRoute, TrigInterpolant};
