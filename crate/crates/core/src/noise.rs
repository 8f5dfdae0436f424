//! Noise models: direct error sampling for code-capacity experiments and
//! circuit annotation for circuit-level experiments.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Instruction};
use crate::pauli::{Bits, PauliKind, PauliOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Bitflip,
    Depolarizing,
    Circuit,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Bitflip => "bitflip",
            NoiseKind::Depolarizing => "depolarizing",
            NoiseKind::Circuit => "circuit",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bitflip" | "bit-flip" => Ok(NoiseKind::Bitflip),
            "depolarizing" | "depolarising" => Ok(NoiseKind::Depolarizing),
            "circuit" => Ok(NoiseKind::Circuit),
            _ => Err(NoiseError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("unknown noise kind {0:?}")]
    UnknownKind(String),
    #[error("{0} noise cannot be used here")]
    WrongKind(NoiseKind),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub p: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, p: f64) -> Result<Self, NoiseError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(NoiseError::BadProbability(p));
        }
        Ok(NoiseSpec { kind, p })
    }

    pub fn bitflip(p: f64) -> Self {
        NoiseSpec::new(NoiseKind::Bitflip, p).expect("probability in range")
    }

    pub fn depolarizing(p: f64) -> Self {
        NoiseSpec::new(NoiseKind::Depolarizing, p).expect("probability in range")
    }
}

/// Calls `hit(i)` for each `i < n` independently with probability `p`,
/// skipping ahead geometrically between hits.
pub fn for_each_event<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R, mut hit: impl FnMut(usize, &mut R)) {
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..n).for_each(|i| hit(i, rng));
        return;
    }
    let mut u: f64 = 1.0 - rng.gen::<f64>();
    // No event at all: the first gap reaches n exactly when u <= (1 - p)^n.
    if n <= i32::MAX as usize && u < (1.0 - p).powi(n as i32) {
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut i = 0usize;
    loop {
        let gap = (u.ln() / log_q).floor();
        if gap >= (n - i) as f64 {
            return;
        }
        i += gap as usize;
        hit(i, rng);
        i += 1;
        u = 1.0 - rng.gen::<f64>();
    }
}

/// An independent code-capacity error on `n` qubits.
pub fn sample_code_capacity_error<R: Rng + ?Sized>(
    n: usize,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<PauliOperator, NoiseError> {
    let mut e = PauliOperator::identity(n);
    match noise.kind {
        NoiseKind::Bitflip => for_each_event(n, noise.p, rng, |q, _| e.set(q, PauliKind::X)),
        NoiseKind::Depolarizing => for_each_event(n, noise.p, rng, |q, r| {
            e.set(q, [PauliKind::X, PauliKind::Y, PauliKind::Z][r.gen_range(0..3)]);
        }),
        NoiseKind::Circuit => return Err(NoiseError::WrongKind(NoiseKind::Circuit)),
    }
    Ok(e)
}

/// The X component of a code-capacity error, which is all a Z-basis
/// readout sees. Fills `out` in place.
pub fn sample_x_component<R: Rng + ?Sized>(noise: NoiseSpec, rng: &mut R, out: &mut Bits) -> Result<(), NoiseError> {
    out.clear();
    match noise.kind {
        NoiseKind::Bitflip => for_each_event(out.len(), noise.p, rng, |q, _| out.set(q, true)),
        NoiseKind::Depolarizing => for_each_event(out.len(), noise.p, rng, |q, r| {
            // X and Y carry an X component, Z does not.
            if r.gen_range(0..3) < 2 {
                out.set(q, true);
            }
        }),
        NoiseKind::Circuit => return Err(NoiseError::WrongKind(NoiseKind::Circuit)),
    }
    Ok(())
}

/// Annotates a bare circuit with the circuit-level model: a flip after
/// every reset and before every measurement, and two-qubit depolarizing
/// noise after every CNOT.
pub fn apply_circuit_noise(circuit: &Circuit, p: f64) -> Result<Circuit, NoiseError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NoiseError::BadProbability(p));
    }
    if circuit.has_noise() {
        return Err(CircuitError::AlreadyNoisy.into());
    }
    let mut out = Circuit::new(circuit.num_qubits());
    for inst in circuit.instructions() {
        match inst {
            Instruction::MeasureZ(qs) => {
                out.append(Instruction::Flip { p, qubits: qs.clone() })?;
                out.append(inst.clone())?;
            }
            Instruction::PrepZ(qs) => {
                out.append(inst.clone())?;
                out.append(Instruction::Flip { p, qubits: qs.clone() })?;
            }
            Instruction::Cnot(qs) => {
                out.append(inst.clone())?;
                out.append(Instruction::Depolarize2 { p, qubits: qs.clone() })?;
            }
            _ => out.append(inst.clone())?,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::shot_rng;

    #[test]
    fn zero_and_one() {
        let mut rng = shot_rng(1, 0);
        for kind in [NoiseKind::Bitflip, NoiseKind::Depolarizing] {
            let e = sample_code_capacity_error(10, NoiseSpec::new(kind, 0.0).unwrap(), &mut rng).unwrap();
            assert!(e.is_identity());
        }
        let e = sample_code_capacity_error(10, NoiseSpec::bitflip(1.0), &mut rng).unwrap();
        assert_eq!(e.to_string(), "+XXXXXXXXXX");
    }

    #[test]
    fn depolarizing_x_marginal() {
        let (n, shots, p) = (50, 4000, 0.3);
        let mut xs = 0usize;
        let mut any = 0usize;
        for i in 0..shots {
            let mut rng = shot_rng(7, i);
            let e = sample_code_capacity_error(n, NoiseSpec::depolarizing(p), &mut rng).unwrap();
            xs += e.x_bits().count_ones();
            any += e.weight();
        }
        let total = (n as u64 * shots) as f64;
        let sigma = (total * p * (1.0 - p)).sqrt();
        assert!((any as f64 - total * p).abs() < 5.0 * sigma);
        let px = 2.0 * p / 3.0;
        assert!((xs as f64 - total * px).abs() < 5.0 * (total * px * (1.0 - px)).sqrt());
    }

    #[test]
    fn geometric_skipping_has_the_right_rate() {
        let mut rng = shot_rng(3, 0);
        let mut counts = vec![0usize; 20];
        for _ in 0..20_000 {
            for_each_event(20, 0.05, &mut rng, |i, _| counts[i] += 1);
        }
        for c in counts {
            assert!((c as f64 - 1000.0).abs() < 5.0 * (1000.0f64 * 0.95).sqrt(), "{c}");
        }
    }

    #[test]
    fn annotation_census() {
        let c: Circuit = "QUBITS 2\nPREPZ 0\nH 0\nCNOT 0 1\nMZ 0 1".parse().unwrap();
        let noisy = apply_circuit_noise(&c, 0.01).unwrap();
        let text = noisy.serialize();
        assert_eq!(
            text,
            "QUBITS 2\nPREPZ 0\nE_FLIP 0.01 0\nH 0\nCNOT 0 1\nE_DEPOL2 0.01 0 1\nE_FLIP 0.01 0 1\nMZ 0 1\n"
        );
        let sites: usize = noisy
            .instructions()
            .iter()
            .map(|i| match i {
                Instruction::Flip { qubits, .. } => qubits.len(),
                Instruction::Depolarize2 { qubits, .. } => qubits.len() / 2,
                _ => 0,
            })
            .sum();
        assert_eq!(sites, 4);
        assert_eq!(sites, c.fault_locations().len());
        assert!(matches!(apply_circuit_noise(&noisy, 0.01), Err(NoiseError::Circuit(CircuitError::AlreadyNoisy))));
    }

    #[test]
    fn circuit_kind_rejected_for_code_capacity() {
        let mut rng = shot_rng(0, 0);
        let spec = NoiseSpec::new(NoiseKind::Circuit, 0.1).unwrap();
        assert!(sample_code_capacity_error(3, spec, &mut rng).is_err());
        assert_eq!("bitflip".parse::<NoiseKind>(), Ok(NoiseKind::Bitflip));
        assert!(NoiseSpec::new(NoiseKind::Bitflip, 1.5).is_err());
    }
}
