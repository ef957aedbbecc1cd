//! Deterministic discrete-event engine: virtual time, the pending-event
//! queue, seeded random streams, and trace recording.

pub mod queue;
pub mod rng;
pub mod time;
pub mod trace;

pub use queue::{EventQueue, Phase};
pub use rng::RngStreams;
pub use time::{SimDuration, SimTime};
pub use trace::{Layer, NodeId, TraceEvent, TraceLog, TraceName};
