//! Dense statevector simulation for small registers.
//!
//! Conventions used throughout the crate:
//!
//! * `RX(a) = exp(-i a X / 2)`, `RZ(a) = exp(-i a Z / 2)`,
//!   `XX(c) = exp(-i c X⊗X / 2)`. `XX(π/2)` is maximally entangling; the
//!   hardware phase convention of the native Mølmer–Sørensen interaction is
//!   not modelled because only basis-state probabilities are ever observed.
//! * Qubit 0 is the most significant bit of the basis index, so on four
//!   qubits `|q0 q1 q2 q3>` has index `8*q0 + 4*q1 + 2*q2 + q3`.
//! * Global phase is not tracked as meaningful.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Largest register the simulator accepts (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Structural(format!(
                "register size {n_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two and the state
    /// must be normalized to within `1e-9`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Structural(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Structural(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("state norm² is {norm}, expected 1")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Structural(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|²`.
    pub fn overlap(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Probability of measuring every qubit in `|0>`.
    pub fn prob_all_zeros(&self) -> f64 {
        self.amplitudes[0].norm_sqr().min(1.0)
    }

    fn mask(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::Structural(format!(
                "qubit {qubit} out of range for {}-qubit register",
                self.n_qubits
            )));
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    pub fn apply_rx(&mut self, qubit: usize, angle: f64) -> Result<()> {
        let mask = self.mask(qubit)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = a0 * c + a1 * mis;
                self.amplitudes[j] = a0 * mis + a1 * c;
            }
        }
        Ok(())
    }

    pub fn apply_rz(&mut self, qubit: usize, angle: f64) -> Result<()> {
        let mask = self.mask(qubit)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let phase0 = Complex64::new(c, -s);
        let phase1 = Complex64::new(c, s);
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= if i & mask == 0 { phase0 } else { phase1 };
        }
        Ok(())
    }

    pub fn apply_xx(&mut self, a: usize, b: usize, angle: f64) -> Result<()> {
        if a == b {
            return Err(Error::Structural(format!("XX targets must differ, got ({a}, {b})")));
        }
        let flip = self.mask(a)? | self.mask(b)?;
        let (s, c) = (angle / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        for i in 0..self.amplitudes.len() {
            let j = i ^ flip;
            if i < j {
                let (ai, aj) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = ai * c + aj * mis;
                self.amplitudes[j] = ai * mis + aj * c;
            }
        }
        Ok(())
    }
}

/// Shot-noise estimate of a probability: the fraction of successes in
/// `shots` independent Bernoulli(`p`) trials.
pub fn sample_probability<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(Error::Argument("shot count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        // Rounding can push an exact probability a hair outside [0, 1].
        if p.is_nan() || !(-1e-9..=1.0 + 1e-9).contains(&p) {
            return Err(Error::Argument(format!("probability {p} outside [0, 1]")));
        }
    }
    let p = p.clamp(0.0, 1.0);
    let dist = Binomial::new(shots, p).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(dist.sample(rng) as f64 / shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn plus() -> StateVector {
        StateVector::from_amplitudes(vec![
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut s = plus();
        s.apply_rz(0, 0.3).unwrap();
        let before = s.clone();
        s.apply_rx(0, 0.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn xx_half_pi_on_00() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_xx(0, 1, PI / 2.0).unwrap();
        let a = s.amplitudes();
        assert!(close(a[0], Complex64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(a[1], Complex64::new(0.0, 0.0)));
        assert!(close(a[2], Complex64::new(0.0, 0.0)));
        assert!(close(a[3], Complex64::new(0.0, -FRAC_1_SQRT_2)));
        assert!((s.prob_all_zeros() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rz_pi_on_plus() {
        let mut s = plus();
        s.apply_rz(0, PI).unwrap();
        let a = s.amplitudes();
        assert!(close(a[0], Complex64::new(0.0, -FRAC_1_SQRT_2)));
        assert!(close(a[1], Complex64::new(0.0, FRAC_1_SQRT_2)));
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let mut s = StateVector::zero(3).unwrap();
        s.apply_rx(0, PI).unwrap();
        assert!((s.amplitudes()[4].norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_targets_rejected() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(s.apply_rx(2, 0.1), Err(Error::Structural(_))));
        assert!(matches!(s.apply_xx(1, 1, 0.1), Err(Error::Structural(_))));
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn supports_twelve_qubits() {
        let mut s = StateVector::zero(12).unwrap();
        for q in 0..12 {
            s.apply_rx(q, 0.4 + q as f64).unwrap();
        }
        s.apply_xx(0, 11, 1.1).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_edges() {
        let mut rng = crate::seed::rng(3);
        assert_eq!(sample_probability(1.0, 200, &mut rng).unwrap(), 1.0);
        assert_eq!(sample_probability(0.0, 200, &mut rng).unwrap(), 0.0);
        assert!(matches!(
            sample_probability(0.5, 0, &mut rng),
            Err(Error::Argument(_))
        ));
        let a = sample_probability(0.5, 200, &mut crate::seed::rng(11)).unwrap();
        let b = sample_probability(0.5, 200, &mut crate::seed::rng(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_spread_matches_binomial() {
        let estimates: Vec<f64> = (0..1000)
            .map(|s| sample_probability(0.5, 200, &mut crate::seed::rng(s)).unwrap())
            .collect();
        let mean = estimates.iter().sum::<f64>() / 1000.0;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / 999.0;
        let expected = (0.25f64 / 200.0).sqrt();
        assert!((var.sqrt() - expected).abs() < 0.2 * expected);
        assert!((mean - 0.5).abs() < 4.0 * expected / (1000f64).sqrt());
    }
}
