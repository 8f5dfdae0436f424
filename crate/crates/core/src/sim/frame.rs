//! Pauli-frame sampler.
//!
//! Each shot tracks only the difference between the noisy run and one fixed
//! noiseless reference run. Z components are randomized after every reset
//! and measurement, which makes the sampled records exactly distributed even
//! when individual measurements are random.

use rand::Rng;
use rayon::prelude::*;

use super::tableau::{outcome_from_records, run_on_tableau, two_qubit_pauli};
use super::{parity, shot_rng, ShotOutcome, SimError};
use crate::circuit::{Circuit, Instruction};
use crate::pauli::{Bits, PauliKind};

/// Number of noiseless randomized shots used to certify that every detector
/// and observable is deterministic.
const DETERMINISM_PROBES: u64 = 64;

/// Error frame for one shot.
#[derive(Clone, Debug)]
pub struct PauliFrame {
    pub x: Bits,
    pub z: Bits,
    pub record_flips: Bits,
}

impl PauliFrame {
    pub fn new(num_qubits: usize, num_records: usize) -> Self {
        PauliFrame { x: Bits::zeros(num_qubits), z: Bits::zeros(num_qubits), record_flips: Bits::zeros(num_records) }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        if self.x.get(c) {
            self.x.toggle(t);
        }
        if self.z.get(t) {
            self.z.toggle(c);
        }
    }

    fn apply(&mut self, q: usize, kind: PauliKind) {
        match kind {
            PauliKind::I => {}
            PauliKind::X => self.x.toggle(q),
            PauliKind::Z => self.z.toggle(q),
            PauliKind::Y => {
                self.x.toggle(q);
                self.z.toggle(q);
            }
        }
    }
}

/// Propagates one shot's frame through `circuit`.
pub fn propagate_frame<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R, noisy: bool) -> PauliFrame {
    let mut f = PauliFrame::new(circuit.num_qubits(), circuit.num_records());
    // Every qubit starts in |0>, so a random Z frame is invisible.
    for q in 0..circuit.num_qubits() {
        f.z.set(q, rng.gen());
    }
    let mut next = 0;
    for inst in circuit.instructions() {
        match inst {
            Instruction::PrepZ(qs) => {
                for &q in qs {
                    f.x.set(q, false);
                    f.z.set(q, rng.gen());
                }
            }
            Instruction::H(qs) => {
                for &q in qs {
                    let (x, z) = (f.x.get(q), f.z.get(q));
                    f.x.set(q, z);
                    f.z.set(q, x);
                }
            }
            Instruction::X(_) | Instruction::Z(_) | Instruction::Detect(_) | Instruction::Observable { .. } => {}
            Instruction::Cnot(qs) => {
                for pair in qs.chunks(2) {
                    f.cnot(pair[0], pair[1]);
                }
            }
            Instruction::MeasureZ(qs) => {
                for &q in qs {
                    f.record_flips.set(next, f.x.get(q));
                    f.z.set(q, rng.gen());
                    next += 1;
                }
            }
            Instruction::Cond { pauli, qubit, records } => {
                if parity(&f.record_flips, records) {
                    f.apply(*qubit, *pauli);
                }
            }
            Instruction::Flip { p, qubits } => {
                if noisy {
                    for &q in qubits {
                        if rng.gen::<f64>() < *p {
                            f.x.toggle(q);
                        }
                    }
                }
            }
            Instruction::Depolarize2 { p, qubits } => {
                if noisy {
                    for pair in qubits.chunks(2) {
                        if rng.gen::<f64>() < *p {
                            let (a, b) = two_qubit_pauli(rng.gen_range(1..16));
                            f.apply(pair[0], a);
                            f.apply(pair[1], b);
                        }
                    }
                }
            }
        }
    }
    f
}

/// A circuit paired with its noiseless reference outcome.
pub struct FrameSampler<'a> {
    circuit: &'a Circuit,
    reference: ShotOutcome,
    master_seed: u64,
}

impl<'a> FrameSampler<'a> {
    /// Runs the reference and certifies that every detector and observable
    /// is deterministic in the absence of noise.
    pub fn new(circuit: &'a Circuit, master_seed: u64) -> Result<Self, SimError> {
        let mut rng = shot_rng(master_seed, u64::MAX);
        let (_, records) = run_on_tableau(circuit, &mut rng, false);
        let reference = outcome_from_records(circuit, records);
        for probe in 0..DETERMINISM_PROBES {
            let mut rng = shot_rng(master_seed ^ 0x5EED_F00D, probe);
            let f = propagate_frame(circuit, &mut rng, false);
            if let Some(i) = circuit.detectors().iter().position(|d| parity(&f.record_flips, d)) {
                return Err(SimError::NondeterministicReference { kind: "detector", index: i });
            }
            if let Some(i) = circuit.observables().iter().position(|(_, o)| parity(&f.record_flips, o)) {
                return Err(SimError::NondeterministicReference { kind: "observable", index: i });
            }
        }
        Ok(FrameSampler { circuit, reference, master_seed })
    }

    pub fn reference(&self) -> &ShotOutcome {
        &self.reference
    }

    pub fn shot(&self, index: u64) -> ShotOutcome {
        let mut rng = shot_rng(self.master_seed, index);
        let f = propagate_frame(self.circuit, &mut rng, true);
        let mut detectors = self.reference.detectors.clone();
        for (i, d) in self.circuit.detectors().iter().enumerate() {
            if parity(&f.record_flips, d) {
                detectors.toggle(i);
            }
        }
        let mut observables = self.reference.observables.clone();
        for (i, (_, o)) in self.circuit.observables().iter().enumerate() {
            if parity(&f.record_flips, o) {
                observables.toggle(i);
            }
        }
        let mut records = self.reference.records.clone().expect("reference keeps records");
        records.xor_assign(&f.record_flips);
        ShotOutcome { detectors, observables, records: Some(records) }
    }

    /// Shots `0..shots`, computed in parallel and returned in shot order.
    pub fn sample(&self, shots: u64) -> Vec<ShotOutcome> {
        (0..shots).into_par_iter().map(|i| self.shot(i)).collect()
    }
}

/// Samples `shots` outcomes; shot `i` is seeded from `(master_seed, i)`.
pub fn frame_sample(circuit: &Circuit, shots: u64, master_seed: u64) -> Result<Vec<ShotOutcome>, SimError> {
    Ok(FrameSampler::new(circuit, master_seed)?.sample(shots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;

    #[test]
    fn noiseless_detectors_are_quiet() {
        let c: Circuit =
            "QUBITS 3\nPREPZ 0 1 2\nH 0\nCNOT 0 1 0 2\nMZ 0 1 2\nDETECT r0 ^ r1\nDETECT r1 ^ r2".parse().unwrap();
        for o in frame_sample(&c, 200, 3).unwrap() {
            assert!(o.detectors.is_zero());
        }
    }

    #[test]
    fn certain_flip_fires_every_shot() {
        let c: Circuit = "QUBITS 2\nH 0\nCNOT 0 1\nE_FLIP 1 1\nMZ 0 1\nDETECT r0 ^ r1".parse().unwrap();
        assert!(frame_sample(&c, 100, 11).unwrap().iter().all(|o| o.detectors.get(0)));
    }

    #[test]
    fn random_detector_is_rejected() {
        let c: Circuit = "QUBITS 1\nH 0\nMZ 0\nDETECT r0".parse().unwrap();
        assert_eq!(
            FrameSampler::new(&c, 0).err(),
            Some(SimError::NondeterministicReference { kind: "detector", index: 0 })
        );
        let c: Circuit = "QUBITS 1\nH 0\nMZ 0\nOBS l r0".parse().unwrap();
        assert!(FrameSampler::new(&c, 0).is_err());
    }

    #[test]
    fn random_records_are_fair() {
        let c: Circuit = "QUBITS 2\nH 0\nCNOT 0 1\nMZ 0 1\nDETECT r0 ^ r1".parse().unwrap();
        let out = frame_sample(&c, 4000, 9).unwrap();
        let ones = out.iter().filter(|o| o.records.as_ref().unwrap().get(0)).count();
        assert!((1800..2200).contains(&ones), "{ones}");
        assert!(out.iter().all(|o| !o.any_detector()));
    }

    #[test]
    fn deterministic_across_calls() {
        let c: Circuit =
            "QUBITS 3\nPREPZ 0 1 2\nE_FLIP 0.3 0 1 2\nCNOT 0 1\nE_DEPOL2 0.2 0 1\nMZ 0 1 2\nDETECT r0\nDETECT r1 ^ r2"
                .parse()
                .unwrap();
        let a = frame_sample(&c, 500, 42).unwrap();
        let b = frame_sample(&c, 500, 42).unwrap();
        assert_eq!(a, b);
        let sampler = FrameSampler::new(&c, 42).unwrap();
        assert_eq!(sampler.shot(123), a[123]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        assert_eq!(pool.install(|| frame_sample(&c, 500, 42).unwrap()), a);
    }

    type Mat = [[C; 4]; 4];

    fn kron(a: [[C; 2]; 2], b: [[C; 2]; 2]) -> Mat {
        let mut m = [[C::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                // Qubit 0 is the high-order factor.
                m[i][j] = a[i >> 1][j >> 1] * b[i & 1][j & 1];
            }
        }
        m
    }

    fn mul(a: &Mat, b: &Mat) -> Mat {
        let mut m = [[C::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    m[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        m
    }

    fn single(kind: PauliKind) -> [[C; 2]; 2] {
        let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
        match kind {
            PauliKind::I => [[o, z], [z, o]],
            PauliKind::X => [[z, o], [o, z]],
            PauliKind::Y => [[z, -i], [i, z]],
            PauliKind::Z => [[o, z], [z, -o]],
        }
    }

    /// Every two-qubit Pauli's image under CNOT, computed with dense
    /// matrices, matches frame propagation up to phase.
    #[test]
    fn cnot_propagation_matches_matrix_conjugation() {
        let (o, z) = (C::new(1.0, 0.0), C::new(0.0, 0.0));
        let cnot: Mat = [[o, z, z, z], [z, o, z, z], [z, z, z, o], [z, z, o, z]];
        for k in 1..16 {
            let (a, b) = two_qubit_pauli(k);
            let conj = mul(&mul(&cnot, &kron(single(a), single(b))), &cnot);

            let mut f = PauliFrame::new(2, 0);
            f.apply(0, a);
            f.apply(1, b);
            f.cnot(0, 1);
            let kind_of = |q: usize| match (f.x.get(q), f.z.get(q)) {
                (false, false) => PauliKind::I,
                (true, false) => PauliKind::X,
                (false, true) => PauliKind::Z,
                (true, true) => PauliKind::Y,
            };
            let (pa, pb) = (kind_of(0), kind_of(1));
            let expected = kron(single(pa), single(pb));
            let ratio = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .find(|&(i, j)| expected[i][j].norm() > 0.5)
                .map(|(i, j)| conj[i][j] / expected[i][j])
                .unwrap();
            assert!((ratio.norm() - 1.0).abs() < 1e-12);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((conj[i][j] - ratio * expected[i][j]).norm() < 1e-12, "k={k}");
                }
            }
        }
    }
}
