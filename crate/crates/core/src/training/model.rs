//! Cached circuits for repeated loss evaluation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_a_gamma, build_overlap_circuit, u_theta, v_phi};
use crate::circuit::Circuit;
use crate::datasets::BinaryImage;
use crate::error::Result;
use crate::params::ParameterSet;
use crate::statevector::{sample_probability, StateVector};

/// How an all-zeros probability is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measurement {
    /// The exact probability.
    Exact,
    /// A binomial estimate from this many shots.
    Shots(u64),
}

impl Measurement {
    pub fn read<R: Rng + ?Sized>(self, p: f64, rng: &mut R) -> Result<f64> {
        match self {
            Measurement::Exact => Ok(p),
            Measurement::Shots(n) => sample_probability(p, n, rng),
        }
    }
}

/// The `C(2N, 2)` overlap circuits of a fixed image list.
#[derive(Debug, Clone)]
pub struct OverlapEvaluator {
    n_images: usize,
    circuits: Vec<((usize, usize), Circuit)>,
}

impl OverlapEvaluator {
    pub fn new(images: &[BinaryImage]) -> Self {
        let n = images.len();
        let circuits = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| ((i, j), build_overlap_circuit(&images[i], &images[j])))
            .collect();
        Self {
            n_images: n,
            circuits,
        }
    }

    pub fn n_circuits(&self) -> usize {
        self.circuits.len()
    }

    /// Symmetric overlap matrix with unit diagonal. Each off-diagonal pair is
    /// measured once, in circuit order.
    pub fn matrix<R: Rng + ?Sized>(
        &self,
        params: &ParameterSet,
        measurement: Measurement,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        let n = self.n_images;
        let mut m = vec![vec![1.0; n]; n];
        for ((i, j), circuit) in &self.circuits {
            let p = circuit.run(params)?.prob_all_zeros();
            let s = measurement.read(p, rng)?;
            m[*i][*j] = s;
            m[*j][*i] = s;
        }
        Ok(m)
    }
}

/// Classifier circuits `V_φ A_γ(x) U_θ` for a fixed image list. `U_θ|0>` is
/// shared across images within one evaluation.
#[derive(Debug, Clone)]
pub struct ClassifierModel {
    u: Circuit,
    v: Circuit,
    encoders: Vec<Circuit>,
}

impl ClassifierModel {
    pub fn new(images: &[BinaryImage]) -> Self {
        Self {
            u: u_theta(),
            v: v_phi(),
            encoders: images.iter().map(build_a_gamma).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.encoders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.encoders.is_empty()
    }

    /// Exact all-zeros probabilities for every image.
    pub fn scores(&self, params: &ParameterSet) -> Result<Vec<f64>> {
        let prepared = self.u.run(params)?;
        self.encoders
            .iter()
            .map(|a| {
                let mut state: StateVector = prepared.clone();
                a.apply(&mut state, params)?;
                self.v.apply(&mut state, params)?;
                Ok(state.prob_all_zeros())
            })
            .collect()
    }

    pub fn measured_scores<R: Rng + ?Sized>(
        &self,
        params: &ParameterSet,
        measurement: Measurement,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.scores(params)?
            .into_iter()
            .map(|p| measurement.read(p, rng))
            .collect()
    }
}

/// `A_γ(x) U_θ |0000>`.
pub fn feature_state(image: &BinaryImage, params: &ParameterSet) -> Result<StateVector> {
    crate::ansatz::build_feature_circuit(image).run(params)
}

/// Exact classifier score of one image.
pub fn classifier_score(image: &BinaryImage, params: &ParameterSet) -> Result<f64> {
    Ok(crate::ansatz::build_classifier_circuit(image)
        .run(params)?
        .prob_all_zeros())
}
