//! The homogenized tensor, the discrepancy tensors `I₁, I₂, I₃` and their
//! flux correctors `(E, q)`.

mod discrepancy;
mod flux;
mod tensor;

pub use discrepancy::{
    cell_flux, compute_i1, compute_i2, compute_i3, contract_with_gradient, i1_at, i3_from_i1, slow_gradients,
    SlowDiscrepancy,
};
pub use flux::{
    build_flux_correctors, build_two_scale_flux, flux_on_cell, relative_difference, CellFlux, FluxCorrectorSet,
    FluxFamily,
};
pub use tensor::{assemble_effective, assemble_effective_from, EffectiveTensor};
