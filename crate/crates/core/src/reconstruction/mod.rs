//! Patch reconstruction: element patches, the irrotational polynomial space
//! and the per-element least-squares operator that maps one flux sample per
//! element to a piecewise curl-free polynomial.

mod basis;
mod lambda;
mod operator;
mod patch;

pub use basis::{curl_coefficients, irrotational_dim, IrrotationalBasis, Potential, SparsePoly};
pub use lambda::{estimate_lambda, lambda_from_points};
pub use operator::{
    build_reconstruction, build_reconstruction_with, check_unisolvence, collocation_matrix,
    pseudo_inverse, sample_at_barycenters, ElementReconstruction, PiecewiseIrrotationalField,
    ReconstructionOperator, Unisolvence, UNISOLVENCE_RETRIES, UNISOLVENCE_THRESHOLD,
};
pub use patch::{build_patch, build_patch_with, default_patch_size, ElementPatch, PatchOrdering};
