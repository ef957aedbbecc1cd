//! Exact density-matrix state for up to four qubits.
//!
//! Qubit 0 is the most significant bit of a basis index, so a two-qubit basis
//! runs |00>, |01>, |10>, |11>. All mutating operations re-symmetrize the
//! matrix to keep it exactly Hermitian against float drift.

use crate::error::BackendError;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

pub const HERMITICITY_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = -1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotAxis {
    X,
    Y,
    Z,
    /// Rotation about (x + z)/sqrt(2); lets a device expose Hadamard as a
    /// pi rotation. Supported only where a profile opts in.
    H,
}

impl RotAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            RotAxis::X => "X",
            RotAxis::Y => "Y",
            RotAxis::Z => "Z",
            RotAxis::H => "H",
        }
    }

    pub fn parse(s: &str) -> Option<RotAxis> {
        match s {
            "X" => Some(RotAxis::X),
            "Y" => Some(RotAxis::Y),
            "Z" => Some(RotAxis::Z),
            "H" => Some(RotAxis::H),
            _ => None,
        }
    }

    fn direction(self) -> [f64; 3] {
        match self {
            RotAxis::X => [1.0, 0.0, 0.0],
            RotAxis::Y => [0.0, 1.0, 0.0],
            RotAxis::Z => [0.0, 0.0, 1.0],
            RotAxis::H => [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2],
        }
    }
}

/// 2x2 unitary exp(-i angle/2 * n.sigma), row-major.
pub fn rotation_unitary(axis: RotAxis, angle: f64) -> [Complex64; 4] {
    let [nx, ny, nz] = axis.direction();
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let i = Complex64::i();
    [
        Complex64::new(c, 0.0) - i * nz * s,
        (-i * nx - ny) * s,
        (-i * nx + ny) * s,
        Complex64::new(c, 0.0) + i * nz * s,
    ]
}

/// 4x4 controlled rotation in |ctrl,tgt> basis order. The controlled block
/// carries an e^(i angle/2) phase so that a pi rotation about X or Z is
/// exactly CNOT or CZ rather than -i times it; the phase would otherwise be
/// relative between the control subspaces and observable.
pub fn controlled_rotation_unitary(axis: RotAxis, angle: f64) -> [Complex64; 16] {
    let u = rotation_unitary(axis, angle);
    let phase = Complex64::from_polar(1.0, angle / 2.0);
    let one = Complex64::ONE;
    let zero = Complex64::ZERO;
    [
        one, zero, zero, zero, //
        zero, one, zero, zero, //
        zero, zero, phase * u[0], phase * u[1], //
        zero, zero, phase * u[2], phase * u[3],
    ]
}

pub fn swap_unitary() -> [Complex64; 16] {
    let one = Complex64::ONE;
    let zero = Complex64::ZERO;
    [
        one, zero, zero, zero, //
        zero, zero, one, zero, //
        zero, one, zero, zero, //
        zero, zero, zero, one,
    ]
}

/// A pure state vector, used as a fidelity target or injection source.
#[derive(Clone, Debug)]
pub struct Ket(pub Vec<Complex64>);

impl Ket {
    pub fn from_reals(v: &[f64]) -> Ket {
        Ket(v.iter().map(|x| Complex64::new(*x, 0.0)).collect())
    }

    pub fn zero() -> Ket {
        Ket::from_reals(&[1.0, 0.0])
    }

    pub fn one() -> Ket {
        Ket::from_reals(&[0.0, 1.0])
    }

    pub fn plus() -> Ket {
        Ket::from_reals(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])
    }

    pub fn minus() -> Ket {
        Ket::from_reals(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2])
    }

    pub fn plus_y() -> Ket {
        Ket(vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, FRAC_1_SQRT_2),
        ])
    }

    pub fn minus_y() -> Ket {
        Ket(vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, -FRAC_1_SQRT_2),
        ])
    }

    /// (|00> + |11>)/sqrt(2)
    pub fn phi_plus() -> Ket {
        Ket::from_reals(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])
    }

    /// (|01> + |10>)/sqrt(2)
    pub fn psi_plus() -> Ket {
        Ket::from_reals(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])
    }

    /// (|01> - |10>)/sqrt(2)
    pub fn psi_minus() -> Ket {
        Ket::from_reals(&[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0])
    }

    /// Applies a 2x2 unitary to a single-qubit ket.
    pub fn apply_1q(&self, u: &[Complex64; 4]) -> Ket {
        assert_eq!(self.0.len(), 2);
        Ket(vec![
            u[0] * self.0[0] + u[1] * self.0[1],
            u[2] * self.0[0] + u[3] * self.0[1],
        ])
    }

    pub fn bloch(&self) -> [f64; 3] {
        assert_eq!(self.0.len(), 2);
        let a = self.0[0];
        let b = self.0[1];
        let x = 2.0 * (a.conj() * b).re;
        let y = 2.0 * (a.conj() * b).im;
        let z = (a.norm_sqr() - b.norm_sqr()) as f64;
        [x, y, z]
    }
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// All qubits in |0>.
    pub fn new(n_qubits: usize) -> Result<DensityMatrix, BackendError> {
        if !(1..=4).contains(&n_qubits) {
            return Err(BackendError::BadRegisterSize { n: n_qubits });
        }
        let dim = 1 << n_qubits;
        let mut data = vec![Complex64::ZERO; dim * dim];
        data[0] = Complex64::ONE;
        Ok(DensityMatrix { n_qubits, dim, data })
    }

    pub fn from_entries(n_qubits: usize, data: Vec<Complex64>) -> Result<DensityMatrix, BackendError> {
        if !(1..=4).contains(&n_qubits) {
            return Err(BackendError::BadRegisterSize { n: n_qubits });
        }
        let dim = 1 << n_qubits;
        assert_eq!(data.len(), dim * dim, "entry count does not match dimension");
        Ok(DensityMatrix { n_qubits, dim, data })
    }

    pub fn from_ket(ket: &Ket) -> DensityMatrix {
        let dim = ket.0.len();
        let n = dim.trailing_zeros() as usize;
        assert_eq!(1 << n, dim, "ket length must be a power of two");
        let mut data = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = ket.0[r] * ket.0[c].conj();
            }
        }
        DensityMatrix { n_qubits: n, dim, data }
    }

    /// Maximally mixed state.
    pub fn mixed(n_qubits: usize) -> Result<DensityMatrix, BackendError> {
        let mut dm = DensityMatrix::new(n_qubits)?;
        let p = 1.0 / dm.dim as f64;
        for i in 0..dm.dim * dm.dim {
            dm.data[i] = Complex64::ZERO;
        }
        for i in 0..dm.dim {
            dm.data[i * dm.dim + i] = Complex64::new(p, 0.0);
        }
        Ok(dm)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    fn check_addr(&self, addr: usize) -> Result<(), BackendError> {
        if addr >= self.n_qubits {
            Err(BackendError::BadAddress { addr, n_qubits: self.n_qubits })
        } else {
            Ok(())
        }
    }

    /// Bit of basis index `idx` for qubit `q` (qubit 0 is the MSB).
    fn bit(&self, idx: usize, q: usize) -> usize {
        (idx >> (self.n_qubits - 1 - q)) & 1
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    fn symmetrize(&mut self) {
        for r in 0..self.dim {
            for c in r..self.dim {
                let a = self.data[r * self.dim + c];
                let b = self.data[c * self.dim + r];
                let avg = (a + b.conj()) * 0.5;
                self.data[r * self.dim + c] = avg;
                self.data[c * self.dim + r] = avg.conj();
            }
        }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let d = (self.data[r * self.dim + c] - self.data[c * self.dim + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Applies an arbitrary unitary over `targets` (each target a distinct
    /// qubit address; `gate` is 2^k x 2^k in the targets' bit order).
    fn apply_unitary(&mut self, targets: &[usize], gate: &[Complex64]) {
        let k = targets.len();
        let gd = 1 << k;
        debug_assert_eq!(gate.len(), gd * gd);
        // Build the embedded dim x dim unitary.
        let mut full = vec![Complex64::ZERO; self.dim * self.dim];
        for r in 0..self.dim {
            for c in 0..self.dim {
                // Non-target bits must match.
                let mut same = true;
                for q in 0..self.n_qubits {
                    if !targets.contains(&q) && self.bit(r, q) != self.bit(c, q) {
                        same = false;
                        break;
                    }
                }
                if !same {
                    continue;
                }
                let mut gr = 0;
                let mut gc = 0;
                for (pos, q) in targets.iter().enumerate() {
                    gr |= self.bit(r, *q) << (k - 1 - pos);
                    gc |= self.bit(c, *q) << (k - 1 - pos);
                }
                full[r * self.dim + c] = gate[gr * gd + gc];
            }
        }
        // rho <- U rho U^dagger
        let tmp = mat_mul(&full, &self.data, self.dim);
        self.data = mat_mul_conj_t(&tmp, &full, self.dim);
        self.symmetrize();
    }

    pub fn apply_rotation(&mut self, addr: usize, axis: RotAxis, angle: f64) -> Result<(), BackendError> {
        self.check_addr(addr)?;
        let u = rotation_unitary(axis, angle);
        self.apply_unitary(&[addr], &u);
        Ok(())
    }

    pub fn apply_controlled(
        &mut self,
        ctrl: usize,
        tgt: usize,
        axis: RotAxis,
        angle: f64,
    ) -> Result<(), BackendError> {
        self.check_addr(ctrl)?;
        self.check_addr(tgt)?;
        if ctrl == tgt {
            return Err(BackendError::EqualAddresses { addr: ctrl });
        }
        let u = controlled_rotation_unitary(axis, angle);
        self.apply_unitary(&[ctrl, tgt], &u);
        Ok(())
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<(), BackendError> {
        self.check_addr(a)?;
        self.check_addr(b)?;
        if a == b {
            return Err(BackendError::EqualAddresses { addr: a });
        }
        self.apply_unitary(&[a, b], &swap_unitary());
        Ok(())
    }

    /// Probability of outcome 0 for a Z measurement of `addr`.
    pub fn prob_zero(&self, addr: usize) -> Result<f64, BackendError> {
        self.check_addr(addr)?;
        let mut p = 0.0;
        for i in 0..self.dim {
            if self.bit(i, addr) == 0 {
                p += self.data[i * self.dim + i].re;
            }
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// Projects `addr` onto `outcome` and renormalizes.
    pub fn project(&mut self, addr: usize, outcome: u8) -> Result<f64, BackendError> {
        self.check_addr(addr)?;
        let p = if outcome == 0 {
            self.prob_zero(addr)?
        } else {
            1.0 - self.prob_zero(addr)?
        };
        for r in 0..self.dim {
            for c in 0..self.dim {
                if self.bit(r, addr) != outcome as usize || self.bit(c, addr) != outcome as usize {
                    self.data[r * self.dim + c] = Complex64::ZERO;
                }
            }
        }
        if p > 1e-300 {
            let inv = 1.0 / p;
            for v in &mut self.data {
                *v *= inv;
            }
        }
        self.symmetrize();
        Ok(p)
    }

    /// Z-basis projective measurement sampled via the Born rule.
    pub fn measure<R: rand::Rng>(&mut self, addr: usize, rng: &mut R) -> Result<u8, BackendError> {
        let p0 = self.prob_zero(addr)?;
        let outcome = if rng.random::<f64>() < p0 { 0u8 } else { 1u8 };
        self.project(addr, outcome)?;
        Ok(outcome)
    }

    /// Resets `addr` to |0><0|, discarding its correlations with the rest.
    pub fn init_qubit(&mut self, addr: usize) -> Result<(), BackendError> {
        self.check_addr(addr)?;
        // rho' = sum_k E_k rho E_k^dagger with E_k = |0><k| on addr.
        let mut out = vec![Complex64::ZERO; self.dim * self.dim];
        for r in 0..self.dim {
            if self.bit(r, addr) != 0 {
                continue;
            }
            let r1 = r | (1 << (self.n_qubits - 1 - addr));
            for c in 0..self.dim {
                if self.bit(c, addr) != 0 {
                    continue;
                }
                let c1 = c | (1 << (self.n_qubits - 1 - addr));
                out[r * self.dim + c] =
                    self.data[r * self.dim + c] + self.data[r1 * self.dim + c1];
            }
        }
        self.data = out;
        self.symmetrize();
        Ok(())
    }

    /// Single-qubit depolarizing channel with survival probability `survival`:
    /// rho -> s rho + (1 - s) I/2 (x) tr_addr rho.
    pub fn apply_depolarizing(&mut self, addr: usize, survival: f64) -> Result<(), BackendError> {
        self.check_addr(addr)?;
        let s = survival.clamp(0.0, 1.0);
        // I/2 (x) tr_q rho = (rho + X rho X + Y rho Y + Z rho Z) / 4 on q.
        let mut acc = self.data.clone();
        for axis in [RotAxis::X, RotAxis::Y, RotAxis::Z] {
            let mut flipped = self.clone();
            flipped.apply_rotation(addr, axis, std::f64::consts::PI).expect("addr checked");
            for (a, f) in acc.iter_mut().zip(flipped.data.iter()) {
                *a += f;
            }
        }
        let w = (1.0 - s) / 4.0;
        for (v, a) in self.data.iter_mut().zip(acc.iter()) {
            *v = *v * s + a * w;
        }
        self.symmetrize();
        Ok(())
    }

    /// <tau| rho |tau> for a pure target.
    pub fn fidelity(&self, target: &Ket) -> Result<f64, BackendError> {
        if target.0.len() != self.dim {
            return Err(BackendError::DimensionMismatch {
                state_dim: self.dim,
                target_dim: target.0.len(),
            });
        }
        let mut acc = Complex64::ZERO;
        for r in 0..self.dim {
            for c in 0..self.dim {
                acc += target.0[r].conj() * self.data[r * self.dim + c] * target.0[c];
            }
        }
        Ok(acc.re)
    }

    /// Loads a two-qubit state onto qubits (a, b), which must currently be in
    /// |0> and uncorrelated with the rest (callers reset them first).
    pub fn load_two_qubit(
        &mut self,
        a: usize,
        b: usize,
        pair: &DensityMatrix,
    ) -> Result<(), BackendError> {
        self.check_addr(a)?;
        self.check_addr(b)?;
        if a == b {
            return Err(BackendError::EqualAddresses { addr: a });
        }
        assert_eq!(pair.n_qubits, 2);
        self.init_qubit(a)?;
        self.init_qubit(b)?;
        let mut out = vec![Complex64::ZERO; self.dim * self.dim];
        let ba = 1 << (self.n_qubits - 1 - a);
        let bb = 1 << (self.n_qubits - 1 - b);
        for r in 0..self.dim {
            if self.bit(r, a) != 0 || self.bit(r, b) != 0 {
                continue;
            }
            for c in 0..self.dim {
                if self.bit(c, a) != 0 || self.bit(c, b) != 0 {
                    continue;
                }
                let rest = self.data[r * self.dim + c];
                for x in 0..4usize {
                    for y in 0..4usize {
                        let rr = r | if x & 2 != 0 { ba } else { 0 } | if x & 1 != 0 { bb } else { 0 };
                        let cc = c | if y & 2 != 0 { ba } else { 0 } | if y & 1 != 0 { bb } else { 0 };
                        out[rr * self.dim + cc] += pair.entry(x, y) * rest;
                    }
                }
            }
        }
        self.data = out;
        self.symmetrize();
        Ok(())
    }

    /// Reduced state of one qubit as a 2x2 matrix.
    pub fn reduced_single(&self, addr: usize) -> Result<[Complex64; 4], BackendError> {
        self.check_addr(addr)?;
        let mut out = [Complex64::ZERO; 4];
        for r in 0..self.dim {
            for c in 0..self.dim {
                // Trace out all other qubits: indices must agree off addr.
                let mut same = true;
                for q in 0..self.n_qubits {
                    if q != addr && self.bit(r, q) != self.bit(c, q) {
                        same = false;
                        break;
                    }
                }
                if same {
                    out[self.bit(r, addr) * 2 + self.bit(c, addr)] += self.data[r * self.dim + c];
                }
            }
        }
        Ok(out)
    }

    /// Bloch vector of one qubit's reduced state.
    pub fn bloch_single(&self, addr: usize) -> Result<[f64; 3], BackendError> {
        let m = self.reduced_single(addr)?;
        Ok([2.0 * m[1].re, -2.0 * m[1].im, m[0].re - m[3].re])
    }

    /// Smallest eigenvalue, via Jacobi iteration on the real symmetric
    /// embedding [[Re, -Im], [Im, Re]].
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim;
        let n = 2 * d;
        let mut m = vec![0.0f64; n * n];
        for r in 0..d {
            for c in 0..d {
                let v = self.data[r * d + c];
                m[r * n + c] = v.re;
                m[(r + d) * n + (c + d)] = v.re;
                m[r * n + (c + d)] = -v.im;
                m[(r + d) * n + c] = v.im;
            }
        }
        jacobi_min_eigenvalue(&mut m, n)
    }

    /// Real/imag entry table for debugging dumps.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for r in 0..self.dim {
            for c in 0..self.dim {
                let v = self.data[r * self.dim + c];
                s.push_str(&format!("{:+.6}{:+.6}i ", v.re, v.im));
            }
            s.push('\n');
        }
        s
    }
}

fn mat_mul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; dim * dim];
    for r in 0..dim {
        for k in 0..dim {
            let arc = a[r * dim + k];
            if arc == Complex64::ZERO {
                continue;
            }
            for c in 0..dim {
                out[r * dim + c] += arc * b[k * dim + c];
            }
        }
    }
    out
}

/// a * b^dagger
fn mat_mul_conj_t(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = Complex64::ZERO;
            for k in 0..dim {
                acc += a[r * dim + k] * b[c * dim + k].conj();
            }
            out[r * dim + c] = acc;
        }
    }
    out
}

/// Cyclic Jacobi sweeps until off-diagonal mass is negligible.
fn jacobi_min_eigenvalue(m: &mut [f64], n: usize) -> f64 {
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn fresh_state_is_ground() {
        let dm = DensityMatrix::new(1).unwrap();
        assert_close(dm.fidelity(&Ket::zero()).unwrap(), 1.0, 1e-15);
        assert_close(dm.trace(), 1.0, 1e-15);
    }

    #[test]
    fn init_on_mixed_gives_ground() {
        let mut dm = DensityMatrix::mixed(1).unwrap();
        dm.init_qubit(0).unwrap();
        assert_close(dm.fidelity(&Ket::zero()).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn init_half_of_bell_leaves_other_mixed() {
        let mut dm = DensityMatrix::from_ket(&Ket::phi_plus());
        dm.init_qubit(0).unwrap();
        let r = dm.reduced_single(1).unwrap();
        assert_close(r[0].re, 0.5, 1e-12);
        assert_close(r[3].re, 0.5, 1e-12);
        assert_close(r[1].norm(), 0.0, 1e-12);
        // And qubit 0 is |0>.
        let r0 = dm.reduced_single(0).unwrap();
        assert_close(r0[0].re, 1.0, 1e-12);
    }

    #[test]
    fn rz_pi_then_h_gives_one() {
        // On |+>: Rz(pi) then H lands in |1> exactly.
        let mut dm = DensityMatrix::from_ket(&Ket::plus());
        dm.apply_rotation(0, RotAxis::Z, PI).unwrap();
        dm.apply_rotation(0, RotAxis::Y, PI / 2.0).unwrap();
        dm.apply_rotation(0, RotAxis::X, PI).unwrap();
        assert_close(dm.fidelity(&Ket::one()).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn full_turn_is_identity_on_density_matrix() {
        let mut dm = DensityMatrix::from_ket(&Ket::plus_y());
        let before = dm.clone();
        dm.apply_rotation(0, RotAxis::X, 2.0 * PI).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((dm.entry(r, c) - before.entry(r, c)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ry_half_pi_gives_plus_x_bloch() {
        let mut dm = DensityMatrix::new(1).unwrap();
        dm.apply_rotation(0, RotAxis::Y, PI / 2.0).unwrap();
        let b = dm.bloch_single(0).unwrap();
        assert_close(b[0], 1.0, 1e-12);
        assert_close(b[1], 0.0, 1e-12);
        assert_close(b[2], 0.0, 1e-12);
    }

    #[test]
    fn controlled_x_flips_target_when_control_set() {
        let mut dm = DensityMatrix::from_ket(&Ket::from_reals(&[0.0, 0.0, 1.0, 0.0])); // |10>
        dm.apply_controlled(0, 1, RotAxis::X, PI).unwrap();
        assert_close(dm.fidelity(&Ket::from_reals(&[0.0, 0.0, 0.0, 1.0])).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn controlled_x_identity_when_control_clear() {
        let mut dm = DensityMatrix::new(2).unwrap(); // |00>
        dm.apply_controlled(0, 1, RotAxis::X, PI).unwrap();
        assert_close(dm.fidelity(&Ket::from_reals(&[1.0, 0.0, 0.0, 0.0])).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn h_then_cnot_builds_bell_pair() {
        let mut dm = DensityMatrix::new(2).unwrap();
        // H on qubit 0 via Ry(pi/2) then Rx(pi).
        dm.apply_rotation(0, RotAxis::Y, PI / 2.0).unwrap();
        dm.apply_rotation(0, RotAxis::X, PI).unwrap();
        dm.apply_controlled(0, 1, RotAxis::X, PI).unwrap();
        assert_close(dm.fidelity(&Ket::phi_plus()).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn equal_addresses_rejected() {
        let mut dm = DensityMatrix::new(2).unwrap();
        assert!(matches!(
            dm.apply_controlled(1, 1, RotAxis::X, PI),
            Err(BackendError::EqualAddresses { .. })
        ));
    }

    #[test]
    fn measure_ground_gives_zero() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        let mut dm = DensityMatrix::new(1).unwrap();
        for _ in 0..50 {
            assert_eq!(dm.measure(0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn bell_measurement_collapses_partner() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut dm = DensityMatrix::from_ket(&Ket::phi_plus());
            let m0 = dm.measure(0, &mut rng).unwrap();
            let m1 = dm.measure(1, &mut rng).unwrap();
            assert_eq!(m0, m1);
        }
    }

    #[test]
    fn depolarizing_limits() {
        let mut dm = DensityMatrix::from_ket(&Ket::plus());
        dm.apply_depolarizing(0, 1.0).unwrap();
        assert_close(dm.fidelity(&Ket::plus()).unwrap(), 1.0, 1e-12);
        dm.apply_depolarizing(0, 0.0).unwrap();
        assert_close(dm.fidelity(&Ket::plus()).unwrap(), 0.5, 1e-12);
        assert_close(dm.fidelity(&Ket::zero()).unwrap(), 0.5, 1e-12);
    }

    #[test]
    fn fidelity_reference_points() {
        let dm = DensityMatrix::mixed(1).unwrap();
        assert_close(dm.fidelity(&Ket::plus()).unwrap(), 0.5, 1e-12);
        let err = dm.fidelity(&Ket::phi_plus()).unwrap_err();
        assert!(matches!(err, BackendError::DimensionMismatch { .. }));
    }

    #[test]
    fn swap_exchanges_states() {
        let mut dm = DensityMatrix::from_ket(&Ket::from_reals(&[0.0, 0.0, 1.0, 0.0])); // |10>
        dm.apply_swap(0, 1).unwrap();
        assert_close(dm.fidelity(&Ket::from_reals(&[0.0, 1.0, 0.0, 0.0])).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn min_eigenvalue_of_valid_states_nonnegative() {
        let dm = DensityMatrix::from_ket(&Ket::phi_plus());
        assert!(dm.min_eigenvalue() >= PSD_TOL);
        let mixed = DensityMatrix::mixed(2).unwrap();
        assert_close(mixed.min_eigenvalue(), 0.25, 1e-9);
    }
}
