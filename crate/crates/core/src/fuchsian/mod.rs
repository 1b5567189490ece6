//! The Fuchsian reformulation: operators L, L₀, L₁, M_w, the profile w₀ and
//! the sub/super-solution envelope.

pub mod collar_ops;
pub mod construction;
pub mod envelope;
pub mod grid_ops;
pub mod holder;

pub use collar_ops::{
    apply_d, apply_l0, apply_l1, apply_l_chart, c2_sharp_norm, derivatives, minus_two_laplacian_d,
    CollarDerivatives,
};
pub use construction::{
    extend_f1, g_operator, periodize, solve_h, tilde_f2, tilde_f2_with, w0_fixed_point, w1_from_h, CollarInverse,
    Extension, HSolver, W0Options, W0Result,
};
pub use envelope::{renormalized_on_chart, search_envelope, sub_super, EnvelopeReport};
pub use grid_ops::{apply_l, apply_mw, fuchsian_residual, hyperbolic_radius, renormalize};
pub use holder::{holder_seminorm, HolderReport};
