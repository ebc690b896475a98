//! One module per subcommand. Each exposes a filesystem-free core used by
//! the tests and a `run` wrapper that reads inputs and writes outputs.

pub mod autotune;
pub mod bench;
pub mod disturbance;
pub mod mocap;
pub mod synth;
pub mod velocimetry;
