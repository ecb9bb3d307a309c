//! Capacity of discrete memoryless channels.
//!
//! Three interchangeable iterations compute `C = max_p I(p, W)`:
//!
//! | name        | update                                                       |
//! |-------------|--------------------------------------------------------------|
//! | `classical` | `p'(x) ∝ p(x) exp(D_x)` (Blahut-Arimoto)                      |
//! | `matz`      | `p'(x) ∝ p(x) exp(D_x / λ)`, explicit, fixed or scheduled λ   |
//! | `proximal`  | implicit maximizer of `I(p) − λ (D(p‖p_k) − D(q‖q_k))`, λ chosen per step |
//!
//! where `D_x = D(W_x ‖ q)` is the divergence of channel row `x` from the
//! current output marginal. Variants are registered by name in
//! [`solvers::Registry`] and driven by [`solvers::solve`].
//!
//! ```
//! use capacity_core::{channels, solvers::{solve, SolverConfig, Variant}};
//!
//! let channel = channels::bsc(0.1).unwrap();
//! let result = solve(&channel, &SolverConfig::new(Variant::Classical)).unwrap();
//! assert!((result.capacity - 0.368_064_207_168_497).abs() < 1e-9);
//! ```

pub mod channels;
pub mod diagnostics;
pub mod error;
pub mod prob;
pub mod solvers;

pub use error::{CapacityError, Result};
pub use prob::{
    capacity_bounds, kl_divergence, mutual_information, nats_to_bits, output_marginal,
    surprisal_vector, CapacityBounds, ProbVec, SurprisalVec, TransitionMatrix,
};
