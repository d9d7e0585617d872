//! Planar three-body dynamics in the mass-weighted matrix formulation,
//! with syzygy detection and executable checks of syzygy-existence bounds.

pub mod conley;
pub mod error;
pub mod events;
pub mod integrator;
pub mod lab;
pub mod orbits;
pub mod state;

pub use error::{Error, Result};
pub use state::{BodyState, Masses, Vec2};
