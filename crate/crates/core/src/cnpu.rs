//! Host-side runtime pieces: the latency model for CNPU processing and
//! CNPU<->QNPU communication, and the cooperative program abstraction.
//!
//! Programs are state machines driven by the event loop. Each `step` returns
//! the next action; blocking actions (awaiting results, messages, or a
//! sampled processing delay) suspend the task until the matching event.

use crate::angle::Angle;
use crate::config::{LatencySection, NodeLatencySection};
use crate::netqasm::Subroutine;
use crate::qnpu::StagedResults;
use crate::records::IterationRecord;
use crate::sim::{SimDuration, SimTime};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::collections::HashMap;

/// Resolved latency model for one node.
#[derive(Clone, Debug)]
pub struct NodeLatency {
    default_send: SimDuration,
    default_return: SimDuration,
    send_overrides: HashMap<String, SimDuration>,
    return_overrides: HashMap<String, SimDuration>,
    segments: HashMap<String, (f64, f64)>,
    spike: Option<(f64, f64, String)>,
}

impl NodeLatency {
    pub fn resolve(section: &NodeLatencySection, shared: &LatencySection) -> NodeLatency {
        NodeLatency {
            default_send: SimDuration::from_us_f64(section.default_send_us),
            default_return: SimDuration::from_us_f64(section.default_return_us),
            send_overrides: section
                .send_us
                .iter()
                .map(|(k, v)| (k.clone(), SimDuration::from_us_f64(*v)))
                .collect(),
            return_overrides: section
                .return_us
                .iter()
                .map(|(k, v)| (k.clone(), SimDuration::from_us_f64(*v)))
                .collect(),
            segments: shared
                .segments
                .iter()
                .map(|(k, v)| (k.clone(), (v.mean_us, v.sd_us)))
                .collect(),
            spike: shared
                .spike
                .as_ref()
                .map(|s| (s.probability, s.magnitude_us, s.segment.clone())),
        }
    }

    pub fn send(&self, label: &str) -> SimDuration {
        *self.send_overrides.get(label).unwrap_or(&self.default_send)
    }

    pub fn result_return(&self, label: &str) -> SimDuration {
        *self.return_overrides.get(label).unwrap_or(&self.default_return)
    }

    /// Samples a named processing segment: truncated normal, plus the
    /// configured spike with its probability when this is the spiky segment.
    pub fn sample_segment<R: Rng>(&self, name: &str, rng: &mut R) -> SimDuration {
        let (mean, sd) = self.segments.get(name).copied().unwrap_or((0.0, 0.0));
        let mut us = if sd > 0.0 {
            Normal::new(mean, sd).expect("valid normal").sample(rng).max(0.0)
        } else {
            mean
        };
        if let Some((p, magnitude, segment)) = &self.spike {
            if segment == name && rng.random::<f64>() < *p {
                us += magnitude;
            }
        }
        SimDuration::from_us_f64(us)
    }
}

/// Host-visible result of one subroutine round trip.
#[derive(Clone, Debug)]
pub struct HostResults {
    pub label: String,
    pub results: StagedResults,
}

/// What a program does next.
pub enum ProgStep {
    /// Sample the named latency segment, then continue.
    Delay { segment: &'static str },
    /// Submit a quantum block and suspend until its results return.
    Submit { label: String, sub: Subroutine, draw_cr: bool },
    /// Send a classical message to the peer program (non-blocking).
    Send { socket: u32, payload: i64 },
    /// Suspend until a classical message arrives on the socket.
    Recv { socket: u32 },
    Finished,
}

/// Client-side facts about one delegated-computation iteration, joined into
/// the server's record at the end of the iteration.
#[derive(Clone, Copy, Debug)]
pub struct ClientIterInfo {
    pub m_c: u8,
    pub delta: Angle,
    pub theta: Angle,
    pub cr_client: Option<bool>,
}

pub type Journal = HashMap<(u32, u32), ClientIterInfo>;

/// Everything a program can see when it wakes.
pub struct ProgIo<'a> {
    pub now: SimTime,
    /// Results of the last submitted block, present exactly once.
    pub results: Option<HostResults>,
    /// Last received classical message, present exactly once.
    pub message: Option<i64>,
    pub records: &'a mut Vec<IterationRecord>,
    pub journal: &'a mut Journal,
}

pub trait Program {
    fn step(&mut self, io: &mut ProgIo<'_>) -> ProgStep;
}

/// Packs an angle into a classical message payload.
pub fn encode_angle(a: Angle) -> i64 {
    ((a.n as i64) << 8) | a.d as i64
}

pub fn decode_angle(payload: i64) -> Angle {
    Angle::new(payload >> 8, (payload & 0xff) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn angle_codec_round_trip() {
        for n in 0..32 {
            let a = Angle::new(n, 4);
            assert_eq!(decode_angle(encode_angle(a)), a);
        }
    }

    #[test]
    fn per_label_latency_overrides() {
        let shared = LatencySection::default();
        let lat = NodeLatency::resolve(&shared.server, &shared);
        assert_eq!(lat.send("S1").as_us_f64(), 79.0);
        assert_eq!(lat.send("S2").as_us_f64(), 304.0);
        assert_eq!(lat.result_return("S1").as_us_f64(), 305.0);
        assert_eq!(lat.result_return("S2").as_us_f64(), 163.0);
    }

    #[test]
    fn segments_sample_nonnegative_and_spike_applies() {
        let mut shared = LatencySection::default();
        shared.spike = Some(crate::config::SpikeSection {
            probability: 1.0,
            magnitude_us: 50_000.0,
            segment: "s2_prep".into(),
        });
        let lat = NodeLatency::resolve(&shared.server, &shared);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        for _ in 0..100 {
            let d = lat.sample_segment("s2_prep", &mut rng);
            assert!(d.as_us_f64() >= 50_000.0, "spike always applied: {}", d.as_us_f64());
        }
        let d = lat.sample_segment("unknown_segment", &mut rng);
        assert_eq!(d, SimDuration::ZERO);
    }
}
