//! Greedy sparse approximation and regression over redundant dictionaries.
//!
//! The core algorithm is the orthogonal super greedy fit ([`greedy::osga_fit`]):
//! at each iteration it selects the `s` dictionary atoms most correlated with
//! the current residual and then re-projects onto the span of everything
//! selected so far.  With `s = 1` this reduces to the classical orthogonal
//! greedy algorithm.  Supporting modules provide the incremental orthonormal
//! factorization that makes the projection cheap ([`orthls`]), dictionary
//! construction and coherence measurement ([`dictionary`]), synthetic
//! regression data ([`datagen`]), and penalized baselines to compare against
//! ([`baselines`]).
//!
//! All computations use the empirical inner product `<u, v> = (1/n) sum u_i v_i`
//! (see [`empirical`]); dictionaries are normalized so every atom has unit
//! empirical norm on the sample at hand.

pub mod baselines;
pub mod datagen;
pub mod dictionary;
pub mod empirical;
pub mod error;
pub mod greedy;
pub mod orthls;

pub use error::{Error, Result};
