//! Capacity planning for islanded offshore microgrids with tidal generation
//! and seawater desalination, deterministic or robust to load and tidal
//! uncertainty.

pub mod dpm;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod instance;
pub mod model;
pub mod recourse;
pub mod robust;
pub mod solver;
pub mod tidal;
pub mod uncertainty;

pub use error::{Error, Issue, Result};
