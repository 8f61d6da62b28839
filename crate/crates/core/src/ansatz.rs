//! Builders for the encoder `A_γ(x)`, the variational block `U_θ`, the
//! classifier block `V_φ`, and the composite circuits built from them.
//!
//! All entangling gates are `XX(π/2)`. Builders return symbolic circuits whose
//! angles reference `gamma[..]`, `theta[..]` and `phi[..]` slots; bind them
//! with a [`ParameterSet`](crate::params::ParameterSet) at run time.

use std::f64::consts::FRAC_PI_2;

use crate::circuit::{Angle, Circuit, Gate};
use crate::datasets::BinaryImage;
use crate::error::{Error, Result};
use crate::params::{ParamGroup, ParamId, PHI_LEN, THETA_LEN};

pub const N_QUBITS: usize = 4;

/// Qubit pairs of the four `T` modules in `U_θ`. `V_φ` uses the first three.
pub const T_PAIRS: [(usize, usize); 4] = [(0, 1), (2, 3), (1, 2), (0, 3)];

/// Ordering of angles inside a `T` module, recorded in checkpoints.
pub const SLOT_LAYOUT_VERSION: &str = "t-rzrxrz-low-high/u01-23-12-03/v01-23-12/a-quadrant-major-rx/v1";

fn entangler(a: usize, b: usize) -> Gate {
    Gate::xx(a, b, Angle::literal(FRAC_PI_2))
}

pub fn slots(group: ParamGroup) -> Vec<Angle> {
    (0..group.len())
        .map(|i| Angle::param(ParamId::new(group, i)))
        .collect()
}

/// One `T` module: `RZ, RX, RZ` on the lower qubit, the same on the higher
/// qubit (angles consumed in that order), then `XX(π/2)` on the pair.
pub fn build_t_module(pair: (usize, usize), angles: &[Angle]) -> Result<Circuit> {
    if angles.len() != 6 {
        return Err(Error::Structural(format!(
            "T module takes 6 angles, got {}",
            angles.len()
        )));
    }
    let (a, b) = pair;
    if a == b {
        return Err(Error::Structural(format!("T module pair ({a}, {b}) is not distinct")));
    }
    let mut c = Circuit::new(N_QUBITS);
    for (qubit, triple) in [(a.min(b), &angles[..3]), (a.max(b), &angles[3..])] {
        c.push(Gate::rz(qubit, triple[0].clone()))?;
        c.push(Gate::rx(qubit, triple[1].clone()))?;
        c.push(Gate::rz(qubit, triple[2].clone()))?;
    }
    c.push(entangler(a, b))?;
    Ok(c)
}

fn t_chain(pairs: &[(usize, usize)], angles: &[Angle], name: &str) -> Result<Circuit> {
    if angles.len() != 6 * pairs.len() {
        return Err(Error::Structural(format!(
            "{name} takes {} angles, got {}",
            6 * pairs.len(),
            angles.len()
        )));
    }
    let mut c = Circuit::new(N_QUBITS);
    for (pair, chunk) in pairs.iter().zip(angles.chunks(6)) {
        c.extend(&build_t_module(*pair, chunk)?)?;
    }
    Ok(c)
}

/// `U_θ`: four `T` modules on pairs (0,1), (2,3), (1,2), (0,3).
pub fn build_u_theta(theta: &[Angle]) -> Result<Circuit> {
    t_chain(&T_PAIRS, theta, "U_theta")
}

/// `V_φ`: `U_θ`'s layout without the final (0,3) module.
pub fn build_v_phi(phi: &[Angle]) -> Result<Circuit> {
    t_chain(&T_PAIRS[..3], phi, "V_phi")
}

/// `U_θ` over the `theta[0..24]` slots.
pub fn u_theta() -> Circuit {
    build_u_theta(&slots(ParamGroup::Theta)).expect("canonical theta layout")
}

/// `V_φ` over the `phi[0..18]` slots.
pub fn v_phi() -> Circuit {
    build_v_phi(&slots(ParamGroup::Phi)).expect("canonical phi layout")
}

fn entangling_layer(c: &mut Circuit, active: [bool; 4]) -> Result<()> {
    for a in 0..N_QUBITS {
        for b in a + 1..N_QUBITS {
            if active[a] && active[b] {
                c.push(entangler(a, b))?;
            }
        }
    }
    Ok(())
}

/// Data encoder `A_γ(x)`.
///
/// For each 2×2 quadrant (TL, TR, BL, BR; bit `k` drives qubit `k`) a module
/// `M` applies `XX(π/2)` to every pair of qubits whose bits are both one,
/// then `RX(γ1)` on qubits with bit one and `RX(γ0)` elsewhere. The final
/// module `N` sees the quadrant sums `s_k`: `XX(π/2)` on pairs with
/// `s_k ≥ 2`, then `RX(γ2 + γ3·s_k/4)` on qubit `k`.
pub fn build_a_gamma_with(image: &BinaryImage, gamma: &[Angle]) -> Result<Circuit> {
    if gamma.len() != 4 {
        return Err(Error::Structural(format!(
            "A_gamma takes 4 angles, got {}",
            gamma.len()
        )));
    }
    let quads = image.quadrants();
    let mut c = Circuit::new(N_QUBITS);
    for quad in &quads {
        entangling_layer(&mut c, quad.map(|b| b == 1))?;
        for (k, &bit) in quad.iter().enumerate() {
            c.push(Gate::rx(k, gamma[usize::from(bit)].clone()))?;
        }
    }
    let sums = quads.map(|q| q.iter().map(|&b| usize::from(b)).sum::<usize>());
    entangling_layer(&mut c, sums.map(|s| s >= 2))?;
    for (k, &s) in sums.iter().enumerate() {
        let scale = s as f64 / 4.0;
        let mut angle = Angle {
            constant: 0.0,
            terms: gamma[2].terms.clone(),
        };
        angle.constant = gamma[2].constant + scale * gamma[3].constant;
        if scale != 0.0 {
            angle
                .terms
                .extend(gamma[3].terms.iter().map(|&(id, coef)| (id, coef * scale)));
        }
        c.push(Gate::rx(k, angle))?;
    }
    Ok(c)
}

/// `A_γ(x)` over the `gamma[0..4]` slots.
pub fn build_a_gamma(image: &BinaryImage) -> Circuit {
    build_a_gamma_with(image, &slots(ParamGroup::Gamma)).expect("canonical gamma layout")
}

/// `A_γ(x) U_θ`: `U_θ` runs first.
pub fn build_feature_circuit(image: &BinaryImage) -> Circuit {
    let mut c = u_theta();
    c.extend(&build_a_gamma(image)).expect("matching widths");
    c
}

/// `U_θ† A_γ(x_i)† A_γ(x_j) U_θ`; its all-zeros probability is `s(x_i, x_j)`.
pub fn build_overlap_circuit(x_i: &BinaryImage, x_j: &BinaryImage) -> Circuit {
    let u = u_theta();
    let mut c = u.clone();
    c.extend(&build_a_gamma(x_j)).expect("matching widths");
    c.extend(&build_a_gamma(x_i).adjoint()).expect("matching widths");
    c.extend(&u.adjoint()).expect("matching widths");
    c
}

/// `V_φ A_γ(x) U_θ`; its all-zeros probability is the classifier score.
pub fn build_classifier_circuit(image: &BinaryImage) -> Circuit {
    let mut c = build_feature_circuit(image);
    c.extend(&v_phi()).expect("matching widths");
    c
}

const _: () = assert!(THETA_LEN == 6 * T_PAIRS.len() && PHI_LEN == 6 * (T_PAIRS.len() - 1));
