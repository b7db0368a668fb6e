//! Two-tier Euler/Prandtl expansions around degenerate shear flows in a channel.

pub mod error;
pub mod numerics;
pub mod profile;
pub mod euler;
pub mod prandtl;
pub mod composite;
pub mod verify;
pub mod ns;
pub mod pipeline;

pub use error::{Error, Result};
