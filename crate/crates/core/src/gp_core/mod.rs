//! Gaussian-process and matrix-algebra building blocks shared by both
//! probabilistic optimisers.

mod conditioning;
mod kernel;
mod vech;

pub use conditioning::{
    condition_gaussian, is_symmetric_psd, jittered_cholesky, nearest_psd, symmetrize,
    GaussianBlock, JitteredCholesky,
};
pub(crate) use kernel::SeJet;
pub use kernel::{se_kernel, se_kernel_jet, SeKernelParams};
pub use vech::{
    dim_from_len, duplication_matrix, elimination_matrix, unvech, vec, vech, VechIndex,
};
