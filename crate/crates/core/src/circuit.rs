//! Parameterized gate lists over the native `{RX, RZ, XX}` gate set.
//!
//! Circuits serialize to a line-based text form, one instruction per line:
//!
//! ```text
//! qubits 4
//! RZ 0 theta[0]
//! XX 0 1 1.5707963267948966
//! RX 2 gamma[2] + 0.25*gamma[3]
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::params::{ParamId, ParameterSet};
use crate::statevector::StateVector;

/// An angle that is an affine combination of parameter slots:
/// `constant + Σ coefficient·slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    pub constant: f64,
    pub terms: Vec<(ParamId, f64)>,
}

impl Angle {
    pub fn literal(value: f64) -> Self {
        Self {
            constant: value,
            terms: Vec::new(),
        }
    }

    pub fn param(id: ParamId) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(id, 1.0)],
        }
    }

    pub fn is_concrete(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self {
            constant: -self.constant,
            terms: self.terms.iter().map(|&(id, c)| (id, -c)).collect(),
        }
    }

    pub fn resolve(&self, params: &ParameterSet) -> Result<f64> {
        self.terms.iter().try_fold(self.constant, |acc, &(id, coef)| {
            params
                .get(id)
                .map(|v| acc + coef * v)
                .ok_or_else(|| Error::Unbound(id.to_string()))
        })
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "{:?}", self.constant);
        }
        let mut first = true;
        if self.constant != 0.0 {
            write!(f, "{:?}", self.constant)?;
            first = false;
        }
        for &(id, coef) in &self.terms {
            let (sign, mag) = if coef.is_sign_negative() { ("-", -coef) } else { ("+", coef) };
            match (first, sign) {
                (true, "+") => {}
                (true, _) => write!(f, "-")?,
                (false, s) => write!(f, " {s} ")?,
            }
            if mag == 1.0 {
                write!(f, "{id}")?;
            } else {
                write!(f, "{mag:?}*{id}")?;
            }
            first = false;
        }
        Ok(())
    }
}

fn parse_angle(tokens: &[&str]) -> std::result::Result<Angle, String> {
    let mut angle = Angle::literal(0.0);
    let mut sign = 1.0;
    let mut expect_term = true;
    for &tok in tokens {
        if !expect_term {
            sign = match tok {
                "+" => 1.0,
                "-" => -1.0,
                _ => return Err(format!("expected `+` or `-`, got `{tok}`")),
            };
            expect_term = true;
            continue;
        }
        let (neg, body) = match tok.strip_prefix('-') {
            Some(rest) if !rest.is_empty() && !rest.starts_with(|c: char| c.is_ascii_digit()) => {
                (-1.0, rest)
            }
            _ => (1.0, tok),
        };
        if let Ok(value) = body.parse::<f64>() {
            angle.constant += sign * neg * value;
        } else {
            let (coef, name) = match body.split_once('*') {
                Some((c, n)) => (c.parse::<f64>().map_err(|e| format!("`{c}`: {e}"))?, n),
                None => (1.0, body),
            };
            angle.terms.push((name.parse()?, sign * neg * coef));
        }
        expect_term = false;
    }
    if expect_term {
        return Err("missing angle".into());
    }
    Ok(angle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Rz,
    Xx,
}

impl GateKind {
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::Xx => "XX",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: Angle },
    Rz { qubit: usize, angle: Angle },
    Xx { a: usize, b: usize, angle: Angle },
}

impl Gate {
    pub fn rx(qubit: usize, angle: Angle) -> Self {
        Gate::Rx { qubit, angle }
    }

    pub fn rz(qubit: usize, angle: Angle) -> Self {
        Gate::Rz { qubit, angle }
    }

    pub fn xx(a: usize, b: usize, angle: Angle) -> Self {
        Gate::Xx { a, b, angle }
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::Xx { .. } => GateKind::Xx,
        }
    }

    pub fn angle(&self) -> &Angle {
        match self {
            Gate::Rx { angle, .. } | Gate::Rz { angle, .. } | Gate::Xx { angle, .. } => angle,
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => vec![qubit],
            Gate::Xx { a, b, .. } => vec![a, b],
        }
    }

    /// The same gate with its angle negated; for this gate set that is the inverse.
    pub fn inverse(&self) -> Self {
        match self {
            Gate::Rx { qubit, angle } => Gate::rx(*qubit, angle.negated()),
            Gate::Rz { qubit, angle } => Gate::rz(*qubit, angle.negated()),
            Gate::Xx { a, b, angle } => Gate::xx(*a, *b, angle.negated()),
        }
    }

    fn check(&self, n_qubits: usize) -> Result<()> {
        let targets = self.targets();
        if let Some(q) = targets.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::Structural(format!(
                "{} target {q} out of range for {n_qubits} qubits",
                self.kind().mnemonic()
            )));
        }
        if let Gate::Xx { a, b, .. } = self {
            if a == b {
                return Err(Error::Structural(format!("XX targets must differ, got ({a}, {b})")));
            }
        }
        Ok(())
    }

    fn apply_with(&self, state: &mut StateVector, value: f64) -> Result<()> {
        match *self {
            Gate::Rx { qubit, .. } => state.apply_rx(qubit, value),
            Gate::Rz { qubit, .. } => state.apply_rz(qubit, value),
            Gate::Xx { a, b, .. } => state.apply_xx(a, b, value),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rx { qubit, angle } => write!(f, "RX {qubit} {angle}"),
            Gate::Rz { qubit, angle } => write!(f, "RZ {qubit} {angle}"),
            Gate::Xx { a, b, angle } => write!(f, "XX {a} {b} {angle}"),
        }
    }
}

/// Applies a gate whose angle is a literal.
pub fn apply_gate(state: &mut StateVector, gate: &Gate) -> Result<()> {
    gate.check(state.n_qubits())?;
    let angle = gate.angle();
    if !angle.is_concrete() {
        return Err(Error::Unbound(angle.to_string()));
    }
    gate.apply_with(state, angle.constant)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    instructions: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            instructions: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn instructions(&self) -> &[Gate] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        self.instructions.push(gate);
        Ok(())
    }

    /// Appends all of `other`'s instructions.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::Structural(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        self.instructions.extend(other.instructions.iter().cloned());
        Ok(())
    }

    /// Reversed instruction order with every angle negated.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            instructions: self.instructions.iter().rev().map(Gate::inverse).collect(),
        }
    }

    pub fn parameter_slots(&self) -> BTreeSet<ParamId> {
        self.instructions
            .iter()
            .flat_map(|g| g.angle().terms.iter().map(|&(id, _)| id))
            .collect()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.instructions.iter().filter(|g| g.kind() == kind).count()
    }

    /// Substitutes every slot, yielding a circuit of literal angles.
    pub fn bind(&self, params: &ParameterSet) -> Result<Circuit> {
        let instructions = self
            .instructions
            .iter()
            .map(|g| {
                let angle = Angle::literal(g.angle().resolve(params)?);
                Ok(match *g {
                    Gate::Rx { qubit, .. } => Gate::rx(qubit, angle),
                    Gate::Rz { qubit, .. } => Gate::rz(qubit, angle),
                    Gate::Xx { a, b, .. } => Gate::xx(a, b, angle),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Circuit {
            n_qubits: self.n_qubits,
            instructions,
        })
    }

    /// Applies the circuit to an existing state.
    pub fn apply(&self, state: &mut StateVector, params: &ParameterSet) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Structural(format!(
                "{}-qubit circuit applied to {}-qubit state",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        for gate in &self.instructions {
            gate.apply_with(state, gate.angle().resolve(params)?)?;
        }
        Ok(())
    }

    /// Runs the circuit from `|0...0>`.
    pub fn run(&self, params: &ParameterSet) -> Result<StateVector> {
        let mut state = StateVector::zero(self.n_qubits)?;
        self.apply(&mut state, params)?;
        Ok(state)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let Some(c) = circuit.as_mut() else {
                match tokens.as_slice() {
                    ["qubits", n] => {
                        let n = n.parse().map_err(|_| perr(format!("bad qubit count `{n}`")))?;
                        circuit = Some(Circuit::new(n));
                        continue;
                    }
                    _ => return Err(perr("expected `qubits <n>` header".into())),
                }
            };
            let qubit = |t: &str| t.parse::<usize>().map_err(|_| perr(format!("bad qubit `{t}`")));
            let gate = match tokens.as_slice() {
                ["RX", q, rest @ ..] => Gate::rx(qubit(q)?, parse_angle(rest).map_err(perr)?),
                ["RZ", q, rest @ ..] => Gate::rz(qubit(q)?, parse_angle(rest).map_err(perr)?),
                ["XX", a, b, rest @ ..] => {
                    Gate::xx(qubit(a)?, qubit(b)?, parse_angle(rest).map_err(perr)?)
                }
                _ => return Err(perr(format!("unrecognized instruction `{line}`"))),
            };
            c.push(gate).map_err(|e| perr(e.to_string()))?;
        }
        circuit.ok_or_else(|| Error::Parse {
            line: 0,
            msg: "empty circuit text".into(),
        })
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for gate in &self.instructions {
            writeln!(f, "{gate}")?;
        }
        Ok(())
    }
}

/// Runs `circuit` from `|0...0>` with the given bindings.
pub fn run_circuit(circuit: &Circuit, bindings: &ParameterSet) -> Result<StateVector> {
    circuit.run(bindings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamGroup;

    fn theta(i: usize) -> Angle {
        Angle::param(ParamId::new(ParamGroup::Theta, i))
    }

    #[test]
    fn empty_circuit_gives_zero_state() {
        let s = Circuit::new(4).run(&ParameterSet::default()).unwrap();
        assert_eq!(s, StateVector::zero(4).unwrap());
    }

    #[test]
    fn adjoint_of_single_rx() {
        let mut c = Circuit::new(1);
        c.push(Gate::rx(0, Angle::literal(0.7))).unwrap();
        assert_eq!(c.adjoint().instructions(), &[Gate::rx(0, Angle::literal(-0.7))]);
        assert_eq!(c.adjoint().adjoint(), c);
    }

    #[test]
    fn unbound_slot_is_reported() {
        let mut c = Circuit::new(2);
        c.push(Gate::rz(1, theta(3))).unwrap();
        match c.run(&ParameterSet::default()) {
            Err(Error::Unbound(name)) => assert_eq!(name, "theta[3]"),
            other => panic!("unexpected {other:?}"),
        }
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(apply_gate(&mut s, &c.instructions()[0]), Err(Error::Unbound(_))));
    }

    #[test]
    fn push_validates_targets() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::rx(2, Angle::literal(0.0))).is_err());
        assert!(c.push(Gate::xx(0, 0, Angle::literal(0.0))).is_err());
    }

    #[test]
    fn bind_makes_everything_concrete() {
        let mut c = Circuit::new(2);
        c.push(Gate::rz(0, theta(0))).unwrap();
        c.push(Gate::xx(0, 1, Angle::literal(1.0))).unwrap();
        let params = ParameterSet {
            theta: vec![0.5; 24],
            ..Default::default()
        };
        let bound = c.bind(&params).unwrap();
        assert!(bound.parameter_slots().is_empty());
        assert_eq!(bound.run(&ParameterSet::default()).unwrap(), c.run(&params).unwrap());
    }

    #[test]
    fn text_format_round_trip() {
        let mut c = Circuit::new(4);
        c.push(Gate::rz(0, theta(0))).unwrap();
        c.push(Gate::rx(1, theta(1).negated())).unwrap();
        c.push(Gate::xx(0, 3, Angle::literal(std::f64::consts::FRAC_PI_2))).unwrap();
        let affine = Angle {
            constant: 0.0,
            terms: vec![
                (ParamId::new(ParamGroup::Gamma, 2), 1.0),
                (ParamId::new(ParamGroup::Gamma, 3), 0.25),
            ],
        };
        c.push(Gate::rx(2, affine.clone())).unwrap();
        c.push(Gate::rx(3, affine.negated())).unwrap();
        c.push(Gate::rz(3, Angle::literal(-0.125))).unwrap();
        let text = c.to_text();
        assert_eq!(
            text,
            "qubits 4\nRZ 0 theta[0]\nRX 1 -theta[1]\nXX 0 3 1.5707963267948966\n\
             RX 2 gamma[2] + 0.25*gamma[3]\nRX 3 -gamma[2] - 0.25*gamma[3]\nRZ 3 -0.125\n"
        );
        assert_eq!(Circuit::from_text(&text).unwrap(), c);
    }

    #[test]
    fn text_parse_errors_carry_line_numbers() {
        let err = Circuit::from_text("qubits 2\nRX 0 0.1\nXX 0 5 0.2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(Circuit::from_text("RX 0 0.1").is_err());
        assert!(Circuit::from_text("qubits 1\nRY 0 1.0").is_err());
    }
}
