//! Deterministic discrete-event simulator of a two-node quantum network
//! operating system stack: host program runtimes (CNPU), real-time kernels
//! (QNPU) with non-preemptive priority scheduling and a TDMA-driven network
//! process, and quantum devices (QDevice) backed by an exact density-matrix
//! engine with memory decay and readout error.

pub mod angle;
pub mod error;
pub mod netqasm;
pub mod qbackend;
pub mod qdevice;
pub mod sim;

pub use error::{BackendError, ConfigError, MetricsError, TraceError};
pub use sim::{NodeId, SimDuration, SimTime};
