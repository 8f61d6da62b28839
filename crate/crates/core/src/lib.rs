//! Contrastive pretraining of a four-qubit variational image encoder.
//!
//! 4×4 binary images are encoded into four-qubit states by a data circuit
//! `A_γ(x)` preceded by a variational block `U_θ`. The encoder is pretrained
//! with a contrastive loss built from state overlaps, then a classifier block
//! `V_φ` is fine-tuned on a handful of labeled bars-and-stripes vs. diagonal
//! images. Everything runs on an exact statevector simulator with optional
//! shot sampling, optimized with SPSA.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod circuit;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod params;
pub mod seed;
pub mod statevector;
pub mod training;

pub use circuit::{apply_gate, run_circuit, Angle, Circuit, Gate, GateKind};
pub use datasets::{BinaryImage, ContrastiveSet, Label, LabeledImage};
pub use error::{Error, Result};
pub use params::{ParamGroup, ParamId, ParameterSet};
pub use statevector::{sample_probability, StateVector};
