//! Besov-Orlicz norms of sampled paths and the function-space tools around them.

mod extension;
mod holder;
mod modulus;
mod norms;
mod path;
mod steklov;

pub use extension::{extend_reflect, extend_zero, scale_affine, scaling_bounds};
pub(crate) use holder::max_increment;
pub use holder::{grr_zeta, grr_zeta_limit, holder_seminorm, levy_ratio, HolderMode};
pub use modulus::{
    increment_norm, increment_norm_table, lebesgue_norm, modulus, modulus_steps, modulus_table, NormMode,
    EXHAUSTIVE_MAX_CELLS,
};
pub use norms::{
    dyadic_besov_norm, dyadic_profile, full_besov_norm, gagliardo_seminorm, sup_seminorm_from_modulus, BesovNorm,
    BesovParams, FullNorm, LevelTerm, ModulusProfile, Summability,
};
pub use path::SampledPath;
pub use steklov::{steklov_k_estimate, steklov_shifts, SteklovEstimate};
