//! Experiment configuration: a schema-versioned TOML file resolving to the
//! runtime configuration of one simulation. Unknown keys are rejected.

use crate::angle::Angle;
use crate::error::ConfigError;
use crate::qbackend::{EprSource, EprSourceKind, NoiseParams, ReadoutErrorModel};
use crate::qdevice::{DeviceProfile, LinkParams, MockedEntanglement};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(default)]
    pub max_virtual_ms: Option<u64>,
    pub client: NodeSection,
    pub server: NodeSection,
    #[serde(default)]
    pub link: LinkSection,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub latency: LatencySection,
    pub app: AppSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSection {
    /// Base device profile: nv-client, nv-server, trapped-ion, or perfect.
    pub profile: String,
    #[serde(default)]
    pub num_qubits: Option<usize>,
    #[serde(default)]
    pub cr_pass_probability: Option<f64>,
    #[serde(default)]
    pub readout_f00: Option<f64>,
    #[serde(default)]
    pub readout_f11: Option<f64>,
    #[serde(default)]
    pub t_coh_ms: Option<f64>,
    #[serde(default)]
    pub noise_exponent: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    #[serde(default)]
    pub attempt_duration_ns: Option<u64>,
    #[serde(default)]
    pub attempts_per_batch: Option<u32>,
    #[serde(default)]
    pub p_success_per_attempt: Option<f64>,
    #[serde(default)]
    pub inter_batch_overhead_ns: Option<u64>,
    #[serde(default)]
    pub sync_window_ticks: Option<u64>,
    /// "ideal" or "measured".
    #[serde(default)]
    pub epr_source: Option<String>,
    #[serde(default)]
    pub bell_plus_probability: Option<f64>,
    #[serde(default)]
    pub mocked: Option<bool>,
    /// With mocked entanglement, optionally refit the per-attempt
    /// probability to hit this heralding rate. Absent: keep the link's
    /// probability (identical draws to the real mode).
    #[serde(default)]
    pub mocked_target_rate_per_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// TDMA bin length; every bin is assigned to the single link.
    pub bin_length_ns: u64,
    pub origin_ns: u64,
    /// Peer network-stack synchronization message latency.
    pub peer_latency_ns: u64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection { bin_length_ns: 10_000_000, origin_ns: 0, peer_latency_ns: 100_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentDist {
    pub mean_us: f64,
    pub sd_us: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeSection {
    pub probability: f64,
    pub magnitude_us: f64,
    pub segment: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeLatencySection {
    pub default_send_us: f64,
    pub default_return_us: f64,
    /// Per-subroutine-label overrides.
    #[serde(default)]
    pub send_us: BTreeMap<String, f64>,
    #[serde(default)]
    pub return_us: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencySection {
    pub classical_message_us: f64,
    /// Standard deviation of the per-event host clock offset walk.
    pub clock_jitter_walk_sd_us: f64,
    pub client: NodeLatencySection,
    pub server: NodeLatencySection,
    pub segments: BTreeMap<String, SegmentDist>,
    #[serde(default)]
    pub spike: Option<SpikeSection>,
}

impl Default for LatencySection {
    fn default() -> Self {
        let mut segments = BTreeMap::new();
        segments.insert("c1_prep".into(), SegmentDist { mean_us: 1500.0, sd_us: 400.0 });
        segments.insert("delta_compute".into(), SegmentDist { mean_us: 1000.0, sd_us: 300.0 });
        segments.insert("s2_prep".into(), SegmentDist { mean_us: 2000.0, sd_us: 780.0 });
        segments.insert("lgt_prep".into(), SegmentDist { mean_us: 320_000.0, sd_us: 30_000.0 });
        LatencySection {
            classical_message_us: 100.0,
            clock_jitter_walk_sd_us: 0.0,
            client: NodeLatencySection {
                default_send_us: 197.0,
                default_return_us: 197.0,
                send_us: BTreeMap::new(),
                return_us: BTreeMap::new(),
            },
            server: NodeLatencySection {
                default_send_us: 79.0,
                default_return_us: 305.0,
                send_us: BTreeMap::from([("S2".to_string(), 304.0)]),
                return_us: BTreeMap::from([("S2".to_string(), 163.0)]),
            },
            segments,
            spike: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleSpec {
    pub n: i64,
    pub d: u8,
}

impl AngleSpec {
    pub fn angle(&self) -> Angle {
        Angle::new(self.n, self.d)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppSection {
    /// dqc, lgt, or multitask.
    pub kind: String,
    #[serde(default)]
    pub alpha: Option<AngleSpec>,
    #[serde(default)]
    pub theta: Option<AngleSpec>,
    /// DQC iterations per program.
    #[serde(default)]
    pub dqc_iterations: Option<u32>,
    /// LGT rotation axis: X or Y.
    #[serde(default)]
    pub lgt_axis: Option<String>,
    #[serde(default)]
    pub lgt_angle: Option<AngleSpec>,
    /// LGT iterations per program (six outcomes each).
    #[serde(default)]
    pub lgt_iterations: Option<u32>,
    /// Concurrent program pairs for the multitask experiment.
    #[serde(default)]
    pub n_programs: Option<u32>,
    /// Run host programs one after another instead of concurrently.
    #[serde(default)]
    pub serial: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match self.app.kind.as_str() {
            "dqc" | "lgt" | "multitask" => {}
            other => return Err(ConfigError::Invalid(format!("unknown app kind `{other}`"))),
        }
        if let Some(p) = self.link.bell_plus_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::Invalid(format!("bell_plus_probability {p} outside [0,1]")));
            }
        }
        for node in [&self.client, &self.server] {
            for p in [node.cr_pass_probability, node.readout_f00, node.readout_f11] {
                if let Some(p) = p {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(ConfigError::Invalid(format!("probability {p} outside [0,1]")));
                    }
                }
            }
        }
        self.resolve_profile(&self.client)?;
        self.resolve_profile(&self.server)?;
        Ok(())
    }

    fn resolve_profile(&self, node: &NodeSection) -> Result<DeviceProfile, ConfigError> {
        let mut profile = match node.profile.as_str() {
            "nv-client" => DeviceProfile::nv_client(),
            "nv-server" => DeviceProfile::nv_server(),
            "trapped-ion" => DeviceProfile::trapped_ion(),
            "perfect" => DeviceProfile::perfect(node.num_qubits.unwrap_or(1)),
            other => return Err(ConfigError::Invalid(format!("unknown device profile `{other}`"))),
        };
        if let Some(n) = node.num_qubits {
            profile.num_qubits = n;
        }
        if let Some(p) = node.cr_pass_probability {
            profile.cr_pass_probability = p;
        }
        if let Some(f00) = node.readout_f00 {
            profile.readout.f00 = f00;
        }
        if let Some(f11) = node.readout_f11 {
            profile.readout.f11 = f11;
        }
        if let Some(t) = node.t_coh_ms {
            profile.noise.t_coh_ms = t;
        }
        if let Some(n) = node.noise_exponent {
            profile.noise.exponent = n;
        }
        Ok(profile)
    }

    pub fn client_profile(&self) -> DeviceProfile {
        self.resolve_profile(&self.client).expect("validated")
    }

    pub fn server_profile(&self) -> DeviceProfile {
        self.resolve_profile(&self.server).expect("validated")
    }

    pub fn link_params(&self) -> LinkParams {
        let d = LinkParams::default();
        LinkParams {
            attempt_duration_ns: self.link.attempt_duration_ns.unwrap_or(d.attempt_duration_ns),
            attempts_per_batch: self.link.attempts_per_batch.unwrap_or(d.attempts_per_batch),
            p_success_per_attempt: self
                .link
                .p_success_per_attempt
                .unwrap_or(d.p_success_per_attempt),
            inter_batch_overhead_ns: self
                .link
                .inter_batch_overhead_ns
                .unwrap_or(d.inter_batch_overhead_ns),
            sync_window_ticks: self.link.sync_window_ticks.unwrap_or(d.sync_window_ticks),
        }
    }

    pub fn epr_source(&self) -> EprSource {
        let kind = match self.link.epr_source.as_deref() {
            Some("ideal") => EprSourceKind::Ideal,
            _ => EprSourceKind::Measured,
        };
        EprSource {
            kind,
            psi_plus_probability: self.link.bell_plus_probability.unwrap_or(0.443),
        }
    }

    pub fn mocked(&self) -> MockedEntanglement {
        MockedEntanglement {
            enabled: self.link.mocked.unwrap_or(false),
            target_rate_per_s: self.link.mocked_target_rate_per_s.unwrap_or(f64::NAN),
        }
    }

    /// Baseline config used by in-crate tests and as a template.
    pub fn example_dqc() -> ExperimentConfig {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            seed: 1,
            max_virtual_ms: None,
            client: NodeSection {
                profile: "nv-client".into(),
                num_qubits: None,
                cr_pass_probability: None,
                readout_f00: None,
                readout_f11: None,
                t_coh_ms: None,
                noise_exponent: None,
            },
            server: NodeSection {
                profile: "nv-server".into(),
                num_qubits: None,
                cr_pass_probability: None,
                readout_f00: None,
                readout_f11: None,
                t_coh_ms: None,
                noise_exponent: None,
            },
            link: LinkSection::default(),
            network: NetworkSection::default(),
            latency: LatencySection::default(),
            app: AppSection {
                kind: "dqc".into(),
                alpha: Some(AngleSpec { n: 1, d: 1 }),
                theta: Some(AngleSpec { n: 1, d: 2 }),
                dqc_iterations: Some(10),
                lgt_axis: None,
                lgt_angle: None,
                lgt_iterations: None,
                n_programs: None,
                serial: None,
            },
        }
    }
}

pub use crate::qbackend::EprSourceKind as SourceKind;

#[allow(unused_imports)]
use ReadoutErrorModel as _ReadoutUsedInDoc;
#[allow(unused_imports)]
use NoiseParams as _NoiseUsedInDoc;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_round_trips_through_toml() {
        let cfg = ExperimentConfig::example_dqc();
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.app.kind, "dqc");
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = ExperimentConfig::example_dqc().to_toml();
        text.push_str("\nbogus_key = 3\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn missing_seed_rejected() {
        let text = ExperimentConfig::example_dqc().to_toml();
        let without: String = text.lines().filter(|l| !l.starts_with("seed")).collect::<Vec<_>>().join("\n");
        let err = ExperimentConfig::from_toml(&without).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn bad_probability_rejected() {
        let mut cfg = ExperimentConfig::example_dqc();
        cfg.link.bell_plus_probability = Some(1.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn profiles_resolve_with_overrides() {
        let mut cfg = ExperimentConfig::example_dqc();
        cfg.client.readout_f00 = Some(0.9);
        cfg.client.t_coh_ms = Some(20.0);
        let p = cfg.client_profile();
        assert_eq!(p.readout.f00, 0.9);
        assert_eq!(p.noise.t_coh_ms, 20.0);
    }
}
