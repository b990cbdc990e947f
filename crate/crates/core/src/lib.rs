pub mod error;
pub mod fock;
pub mod photon;
pub mod device;
pub mod bell;
pub mod witness;
pub mod sampler;
pub mod sweeps;

pub use error::{Error, Result};
