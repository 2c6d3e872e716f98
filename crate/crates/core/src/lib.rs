pub mod agent;
pub mod bench;
pub mod circuit;
pub mod device;
pub mod env;
pub mod error;
pub mod features;
pub mod mapping;
pub mod optimize;
pub mod sim;
pub mod synthesis;

pub use circuit::{Circuit, Gate, GateKind};
pub use device::{Device, Platform};
pub use error::{Error, Result};
