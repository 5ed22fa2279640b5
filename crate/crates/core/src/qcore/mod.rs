//! States, channels, instruments, ensembles and random instances.

pub mod channel;
pub mod instrument;
pub mod io;
pub mod map;
pub mod random;
pub mod state;

pub use channel::{Channel, ChannelFlags};
pub use instrument::{Ensemble, Instrument, Outcome};
pub use map::{LinearMap, Superoperator};
pub use state::{ClassicalQuantumState, DensityOperator, Purification, System};
