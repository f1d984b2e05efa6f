pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod exact_solutions;
pub mod experiments;
pub mod ground_state;
pub mod radial;
pub mod special;
pub mod surgery;

pub use error::{AliasRegion, BlowupReason, Error, Result};
pub use radial::{RadialField, RadialGrid, SpectralField};
