//! Double-ended FCFS matching queue with customer reneging.
//!
//! Two customer classes (`+1` and `-1`) arrive by independent renewal
//! processes. An arrival that finds the opposite class waiting is matched
//! with the head-of-line opposite customer and both leave at once; otherwise
//! it waits until either a match arrives or its patience expires.
//!
//! The crate covers the whole chain from the pre-limit system to its
//! heavy-traffic diffusion limit:
//!
//! * [`model`]: parameterization of the `n`-th system, inter-arrival and
//!   patience laws, the patience scaling limits `H`, seeded random streams.
//! * [`des`]: the event-driven simulator producing a [`des::PathRecord`].
//! * [`path_analysis`]: offered and virtual waiting times, eventual
//!   abandonment counters, fluid/diffusion scaling.
//! * [`picard`]: the fixed-point map `x -> (w1, w-1)` on grid functions.
//! * [`sde`]: Euler-Maruyama for the limit diffusion and its driving
//!   Brownian motion, with the coupling check `Q = lambda (Psi1 - Psi-1)(X)`.
//! * [`stationary`]: the closed-form stationary density, its normalization,
//!   CDF and sampler.
//! * [`diagnostics`]: empirical CDFs, Kolmogorov-Smirnov distances and the
//!   compensator of the abandonment process.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and
//! multi-threaded experiment drivers live in the companion `dedq` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod des;
pub mod diagnostics;
mod error;
pub mod grid;
pub mod math;
pub mod model;
pub mod path_analysis;
pub mod picard;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod stationary;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use model::{Class, ModelConfig};
pub use rng::RngStream;
