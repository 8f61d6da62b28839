//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the simulator being tested.

#![allow(dead_code)]

use num_complex::Complex64;
use qcontrast::{Circuit, Gate};

pub type Matrix = Vec<Vec<Complex64>>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|r| (0..dim).map(|c| if r == c { real(1.0) } else { zero() }).collect())
        .collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![zero(); n]; n];
    for r in 0..n {
        for k in 0..n {
            if a[r][k] == zero() {
                continue;
            }
            for c in 0..n {
                out[r][c] += a[r][k] * b[k][c];
            }
        }
    }
    out
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![zero(); na * nb]; na * nb];
    for r1 in 0..na {
        for c1 in 0..na {
            for r2 in 0..nb {
                for c2 in 0..nb {
                    out[r1 * nb + r2][c1 * nb + c2] = a[r1][c1] * b[r2][c2];
                }
            }
        }
    }
    out
}

fn pauli_x() -> Matrix {
    vec![vec![zero(), real(1.0)], vec![real(1.0), zero()]]
}

/// `exp(-i a X / 2)`.
pub fn rx(a: f64) -> Matrix {
    let (c, s) = ((a / 2.0).cos(), (a / 2.0).sin());
    vec![vec![real(c), -I * s], vec![-I * s, real(c)]]
}

/// `exp(-i a Z / 2)`.
pub fn rz(a: f64) -> Matrix {
    vec![
        vec![(-I * (a / 2.0)).exp(), zero()],
        vec![zero(), (I * (a / 2.0)).exp()],
    ]
}

/// Embeds single-qubit operators into `n` qubits; qubit 0 is the most
/// significant tensor factor. Missing qubits get the identity.
pub fn embed(n: usize, ops: &[(usize, Matrix)]) -> Matrix {
    let mut out = vec![vec![real(1.0)]];
    for q in 0..n {
        let op = ops
            .iter()
            .find(|(t, _)| *t == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| identity(2));
        out = kron(&out, &op);
    }
    out
}

/// `exp(-i c X_a X_b / 2) = cos(c/2) I - i sin(c/2) X_a X_b`.
pub fn xx(n: usize, a: usize, b: usize, c: f64) -> Matrix {
    let xx = embed(n, &[(a, pauli_x()), (b, pauli_x())]);
    let id = identity(1 << n);
    id.iter()
        .zip(&xx)
        .map(|(ri, rx)| {
            ri.iter()
                .zip(rx)
                .map(|(&e, &x)| e * (c / 2.0).cos() - I * (c / 2.0).sin() * x)
                .collect()
        })
        .collect()
}

/// Dense unitary of a circuit whose angles are all literal.
pub fn circuit_matrix(circuit: &Circuit) -> Matrix {
    let n = circuit.n_qubits();
    let mut m = identity(1 << n);
    for gate in circuit.instructions() {
        assert!(gate.angle().terms.is_empty(), "oracle needs literal angles");
        let a = gate.angle().constant;
        let g = match *gate {
            Gate::Rx { qubit, .. } => embed(n, &[(qubit, rx(a))]),
            Gate::Rz { qubit, .. } => embed(n, &[(qubit, rz(a))]),
            Gate::Xx { a: qa, b: qb, .. } => xx(n, qa, qb, a),
        };
        m = matmul(&g, &m);
    }
    m
}

/// First column of `m`: the image of `|0…0⟩`.
pub fn apply_to_zero(m: &Matrix) -> Vec<Complex64> {
    m.iter().map(|row| row[0]).collect()
}

/// The contrastive loss written out term by term with plain `exp`/`ln`:
/// `-Σ_i ln( exp(s[i][N+i]/τ) / Σ_{j ∉ {i, N+i}} exp(s[i][j]/τ) )`.
pub fn contrastive_loss_reference(s: &[Vec<f64>], tau: f64) -> f64 {
    let n = s.len() / 2;
    let mut total = 0.0;
    for i in 0..n {
        let numerator = (s[i][n + i].clamp(0.0, 1.0) / tau).exp();
        let mut denominator = 0.0;
        for j in 0..2 * n {
            if j != i && j != n + i {
                denominator += (s[i][j].clamp(0.0, 1.0) / tau).exp();
            }
        }
        total -= (numerator / denominator).ln();
    }
    total
}
