//! Exact quantum state engine: density matrices, the entangled-pair source,
//! memory decay, and readout error.

pub mod dm;

pub use dm::{DensityMatrix, Ket, RotAxis};

use crate::error::BackendError;
use crate::sim::SimTime;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Memory decay parameters: survival is exp(-(t / t_coh)^n).
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct NoiseParams {
    pub t_coh_ms: f64,
    pub exponent: f64,
}

impl NoiseParams {
    pub fn survival(&self, elapsed_ms: f64) -> f64 {
        if elapsed_ms <= 0.0 {
            return 1.0;
        }
        (-(elapsed_ms / self.t_coh_ms).powf(self.exponent)).exp()
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        // Fitted coherence of the DD-protected memory.
        NoiseParams { t_coh_ms: 13.0, exponent: 1.67 }
    }
}

/// Classical bit-flip channel on measurement outcomes. `f00` is the
/// probability of reading 0 given the qubit was 0; `f11` likewise for 1.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReadoutErrorModel {
    pub f00: f64,
    pub f11: f64,
}

impl ReadoutErrorModel {
    pub const IDEAL: ReadoutErrorModel = ReadoutErrorModel { f00: 1.0, f11: 1.0 };

    pub fn apply<R: Rng>(&self, outcome: u8, rng: &mut R) -> u8 {
        let keep = if outcome == 0 { self.f00 } else { self.f11 };
        if rng.random::<f64>() < keep {
            outcome
        } else {
            1 - outcome
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BellLabel::PsiPlus => "PSI_PLUS",
            BellLabel::PsiMinus => "PSI_MINUS",
        }
    }

    pub fn target_ket(self) -> Ket {
        match self {
            BellLabel::PsiPlus => Ket::psi_plus(),
            BellLabel::PsiMinus => Ket::psi_minus(),
        }
    }
}

/// Which two-qubit state the link heralds on success.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EprSourceKind {
    /// Exact Bell states.
    Ideal,
    /// The measured source state of the benchmarked setup.
    Measured,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EprSource {
    pub kind: EprSourceKind,
    /// Probability that a success heralds Psi+ (otherwise Psi-).
    pub psi_plus_probability: f64,
}

impl Default for EprSource {
    fn default() -> Self {
        EprSource { kind: EprSourceKind::Measured, psi_plus_probability: 0.443 }
    }
}

/// The measured two-qubit source state for the Psi+ herald: diagonal
/// (0.049, 0.437, 0.454, 0.061) with 0.284 coherence between |01> and |10>.
/// The published entries sum to 1.001, so the matrix is renormalized here to
/// keep the unit-trace invariant.
pub fn measured_epr_psi_plus() -> DensityMatrix {
    let t = 0.049 + 0.437 + 0.454 + 0.061;
    let z = Complex64::ZERO;
    let d = |x: f64| Complex64::new(x / t, 0.0);
    DensityMatrix::from_entries(
        2,
        vec![
            d(0.049), z, z, z, //
            z, d(0.437), d(0.284), z, //
            z, d(0.284), d(0.454), z, //
            z, z, z, d(0.061),
        ],
    )
    .expect("static 2-qubit state")
}

impl EprSource {
    /// Draws the Bell label for one success.
    pub fn draw_label<R: Rng>(&self, rng: &mut R) -> BellLabel {
        if rng.random::<f64>() < self.psi_plus_probability {
            BellLabel::PsiPlus
        } else {
            BellLabel::PsiMinus
        }
    }

    /// The two-qubit state injected for a given heralded label. The measured
    /// source is specified for Psi+; its Psi- variant is the Z-conjugate on
    /// one side, matching the correction gates the link applies.
    pub fn pair_state(&self, label: BellLabel) -> DensityMatrix {
        match self.kind {
            EprSourceKind::Ideal => DensityMatrix::from_ket(&label.target_ket()),
            EprSourceKind::Measured => {
                let mut dm = measured_epr_psi_plus();
                if label == BellLabel::PsiMinus {
                    dm.apply_rotation(1, RotAxis::Z, std::f64::consts::PI).expect("valid addr");
                }
                dm
            }
        }
    }
}

/// The shared quantum register for all qubits of both nodes, with lazy
/// memory decay. Each qubit records when it last became live and how much
/// depolarizing survival has already been applied; on every access the
/// channel is topped up so the cumulative effect equals a single application
/// over the full elapsed time. That keeps the non-linear exponent exact no
/// matter how often the qubit is touched in between.
pub struct QuantumMemory {
    dm: DensityMatrix,
    noise: Vec<NoiseParams>,
    live_since: Vec<Option<SimTime>>,
    survival_applied: Vec<f64>,
}

impl QuantumMemory {
    pub fn new(noise_per_qubit: Vec<NoiseParams>) -> Result<QuantumMemory, BackendError> {
        let n = noise_per_qubit.len();
        Ok(QuantumMemory {
            dm: DensityMatrix::new(n)?,
            noise: noise_per_qubit,
            live_since: vec![None; n],
            survival_applied: vec![1.0; n],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.dm.n_qubits()
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.dm
    }

    pub fn is_live(&self, addr: usize) -> bool {
        self.live_since[addr].is_some()
    }

    pub fn live_since(&self, addr: usize) -> Option<SimTime> {
        self.live_since[addr]
    }

    /// Applies the decay accumulated since the qubit became live.
    pub fn touch(&mut self, addr: usize, now: SimTime) -> Result<(), BackendError> {
        let Some(t0) = self.live_since[addr] else {
            return Ok(());
        };
        let elapsed_ms = (now - t0).as_ms_f64();
        let total = self.noise[addr].survival(elapsed_ms);
        let prev = self.survival_applied[addr];
        if total < prev {
            self.dm.apply_depolarizing(addr, total / prev)?;
            self.survival_applied[addr] = total;
        }
        Ok(())
    }

    pub fn init(&mut self, addr: usize, now: SimTime) -> Result<(), BackendError> {
        self.dm.init_qubit(addr)?;
        self.live_since[addr] = Some(now);
        self.survival_applied[addr] = 1.0;
        Ok(())
    }

    pub fn apply_rotation(
        &mut self,
        addr: usize,
        axis: RotAxis,
        angle: f64,
        now: SimTime,
    ) -> Result<(), BackendError> {
        self.touch(addr, now)?;
        self.dm.apply_rotation(addr, axis, angle)
    }

    pub fn apply_controlled(
        &mut self,
        ctrl: usize,
        tgt: usize,
        axis: RotAxis,
        angle: f64,
        now: SimTime,
    ) -> Result<(), BackendError> {
        self.touch(ctrl, now)?;
        self.touch(tgt, now)?;
        self.dm.apply_controlled(ctrl, tgt, axis, angle)
    }

    pub fn apply_swap(&mut self, a: usize, b: usize, now: SimTime) -> Result<(), BackendError> {
        self.touch(a, now)?;
        self.touch(b, now)?;
        self.dm.apply_swap(a, b)?;
        self.live_since.swap(a, b);
        self.survival_applied.swap(a, b);
        Ok(())
    }

    pub fn measure<R: Rng>(
        &mut self,
        addr: usize,
        now: SimTime,
        rng: &mut R,
    ) -> Result<u8, BackendError> {
        self.touch(addr, now)?;
        self.dm.measure(addr, rng)
    }

    /// Marks a qubit no longer live (freed or its state moved away).
    pub fn release(&mut self, addr: usize) -> Result<(), BackendError> {
        self.dm.init_qubit(addr)?;
        self.live_since[addr] = None;
        self.survival_applied[addr] = 1.0;
        Ok(())
    }

    /// Injects a fresh entangled pair onto (a, b) at the given instant.
    pub fn inject_pair(
        &mut self,
        a: usize,
        b: usize,
        pair: &DensityMatrix,
        now: SimTime,
    ) -> Result<(), BackendError> {
        if self.is_live(a) {
            return Err(BackendError::AddressInUse { addr: a });
        }
        if self.is_live(b) {
            return Err(BackendError::AddressInUse { addr: b });
        }
        self.dm.load_two_qubit(a, b, pair)?;
        for q in [a, b] {
            self.live_since[q] = Some(now);
            self.survival_applied[q] = 1.0;
        }
        Ok(())
    }

    /// Fidelity of the reduced single-qubit state against a pure target.
    pub fn fidelity_single(
        &mut self,
        addr: usize,
        target: &Ket,
        now: SimTime,
    ) -> Result<f64, BackendError> {
        self.touch(addr, now)?;
        let m = self.dm.reduced_single(addr)?;
        let t = &target.0;
        assert_eq!(t.len(), 2);
        let mut acc = Complex64::ZERO;
        for r in 0..2 {
            for c in 0..2 {
                acc += t[r].conj() * m[r * 2 + c] * t[c];
            }
        }
        Ok(acc.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn measured_source_fidelity_to_psi_plus() {
        let dm = measured_epr_psi_plus();
        let f = dm.fidelity(&Ket::psi_plus()).unwrap();
        assert_close(f, 0.729, 1e-3);
        assert_close(dm.trace(), 1.0, 1e-9);
        assert!(dm.min_eigenvalue() >= dm::PSD_TOL);
    }

    #[test]
    fn measured_source_psi_minus_variant() {
        let src = EprSource { kind: EprSourceKind::Measured, psi_plus_probability: 0.443 };
        let dm = src.pair_state(BellLabel::PsiMinus);
        let f = dm.fidelity(&Ket::psi_minus()).unwrap();
        assert_close(f, 0.729, 1e-3);
    }

    #[test]
    fn ideal_source_gives_exact_bell_states() {
        let src = EprSource { kind: EprSourceKind::Ideal, psi_plus_probability: 1.0 };
        let dm = src.pair_state(BellLabel::PsiPlus);
        assert_close(dm.fidelity(&Ket::psi_plus()).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn label_frequencies_match_configuration() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(404);
        let src = EprSource::default();
        let n = 10_000;
        let plus = (0..n).filter(|_| src.draw_label(&mut rng) == BellLabel::PsiPlus).count();
        let p = 0.443;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            ((plus as f64) - n as f64 * p).abs() < 3.0 * sigma,
            "plus = {plus} out of {n}"
        );
    }

    #[test]
    fn readout_error_channels() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let ideal = ReadoutErrorModel::IDEAL;
        assert_eq!(ideal.apply(0, &mut rng), 0);
        assert_eq!(ideal.apply(1, &mut rng), 1);

        let always_flip = ReadoutErrorModel { f00: 0.0, f11: 1.0 };
        assert_eq!(always_flip.apply(0, &mut rng), 1);

        let client = ReadoutErrorModel { f00: 0.841, f11: 0.997 };
        let n = 100_000;
        let zeros = (0..n).filter(|_| client.apply(0, &mut rng) == 0).count();
        let sigma = (n as f64 * 0.841 * 0.159).sqrt();
        assert!(
            ((zeros as f64) - n as f64 * 0.841).abs() < 3.0 * sigma,
            "zeros = {zeros}"
        );
    }

    #[test]
    fn lazy_decay_matches_one_shot_application() {
        // Touching at many intermediate times must equal one application over
        // the whole span, despite the non-linear exponent.
        let noise = NoiseParams { t_coh_ms: 13.0, exponent: 1.67 };
        let mut mem = QuantumMemory::new(vec![noise]).unwrap();
        mem.init(0, SimTime::ZERO).unwrap();
        mem.apply_rotation(0, RotAxis::Y, PI / 2.0, SimTime::ZERO).unwrap();
        for ms in [1u64, 2, 3, 5, 8] {
            mem.touch(0, SimTime::from_ms(ms)).unwrap();
        }
        mem.touch(0, SimTime::from_ms(8)).unwrap();
        let f_lazy = mem.fidelity_single(0, &Ket::plus(), SimTime::from_ms(8)).unwrap();

        let mut dm = DensityMatrix::new(1).unwrap();
        dm.apply_rotation(0, RotAxis::Y, PI / 2.0).unwrap();
        dm.apply_depolarizing(0, noise.survival(8.0)).unwrap();
        let f_once = dm.fidelity(&Ket::plus()).unwrap();
        assert_close(f_lazy, f_once, 1e-12);
    }

    #[test]
    fn decay_limits() {
        let noise = NoiseParams::default();
        let mut mem = QuantumMemory::new(vec![noise]).unwrap();
        mem.init(0, SimTime::ZERO).unwrap();
        mem.apply_rotation(0, RotAxis::Y, PI / 2.0, SimTime::ZERO).unwrap();
        // t = 0: unchanged.
        mem.touch(0, SimTime::ZERO).unwrap();
        assert_close(mem.fidelity_single(0, &Ket::plus(), SimTime::ZERO).unwrap(), 1.0, 1e-12);
        // t -> infinity: maximally mixed.
        mem.touch(0, SimTime::from_ms(1_000_000)).unwrap();
        let f = mem
            .fidelity_single(0, &Ket::plus(), SimTime::from_ms(1_000_000))
            .unwrap();
        assert_close(f, 0.5, 1e-9);
    }

    #[test]
    fn inject_requires_free_addresses() {
        let mut mem = QuantumMemory::new(vec![NoiseParams::default(); 2]).unwrap();
        mem.init(0, SimTime::ZERO).unwrap();
        let pair = EprSource::default().pair_state(BellLabel::PsiPlus);
        let err = mem.inject_pair(0, 1, &pair, SimTime::ZERO).unwrap_err();
        assert!(matches!(err, BackendError::AddressInUse { addr: 0 }));
        mem.release(0).unwrap();
        mem.inject_pair(0, 1, &pair, SimTime::ZERO).unwrap();
        assert!(mem.is_live(0) && mem.is_live(1));
    }
}
