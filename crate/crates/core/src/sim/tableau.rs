//! Stabilizer tableau simulator in the style of Aaronson and Gottesman.

use rand::Rng;

use super::{parity, shot_rng, ShotOutcome};
use crate::circuit::{Circuit, Instruction};
use crate::pauli::{product_phase, Bits, PauliKind, PauliOperator, Sign};

/// Destabilizer rows `0..n`, stabilizer rows `n..2n`.
#[derive(Clone, Debug)]
pub struct Tableau {
    n: usize,
    xs: Vec<Bits>,
    zs: Vec<Bits>,
    signs: Vec<bool>,
}

/// Outcome of a Z measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub value: bool,
    pub random: bool,
}

impl Tableau {
    /// The all-|0> state.
    pub fn new(n: usize) -> Self {
        let mut xs = vec![Bits::zeros(n); 2 * n];
        let mut zs = vec![Bits::zeros(n); 2 * n];
        for q in 0..n {
            xs[q].set(q, true);
            zs[n + q].set(q, true);
        }
        Tableau { n, xs, zs, signs: vec![false; 2 * n] }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn h(&mut self, q: usize) {
        for r in 0..2 * self.n {
            let (x, z) = (self.xs[r].get(q), self.zs[r].get(q));
            self.signs[r] ^= x & z;
            self.xs[r].set(q, z);
            self.zs[r].set(q, x);
        }
    }

    pub fn x(&mut self, q: usize) {
        for r in 0..2 * self.n {
            self.signs[r] ^= self.zs[r].get(q);
        }
    }

    pub fn z(&mut self, q: usize) {
        for r in 0..2 * self.n {
            self.signs[r] ^= self.xs[r].get(q);
        }
    }

    pub fn apply_pauli(&mut self, q: usize, kind: PauliKind) {
        match kind {
            PauliKind::I => {}
            PauliKind::X => self.x(q),
            PauliKind::Z => self.z(q),
            PauliKind::Y => {
                self.x(q);
                self.z(q);
            }
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        for r in 0..2 * self.n {
            let (xc, zc) = (self.xs[r].get(c), self.zs[r].get(c));
            let (xt, zt) = (self.xs[r].get(t), self.zs[r].get(t));
            self.signs[r] ^= xc & zt & !(xt ^ zc);
            self.xs[r].set(t, xt ^ xc);
            self.zs[r].set(c, zc ^ zt);
        }
    }

    /// Row `h` becomes row `i` times row `h`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let phase = product_phase(self.xs[i].words(), self.zs[i].words(), self.xs[h].words(), self.zs[h].words());
        let total = 2 * (self.signs[h] as u8) + 2 * (self.signs[i] as u8) + phase;
        self.signs[h] = total % 4 == 2;
        let (xi, zi) = (self.xs[i].clone(), self.zs[i].clone());
        self.xs[h].xor_assign(&xi);
        self.zs[h].xor_assign(&zi);
    }

    /// The forced outcome of measuring `q`, or `None` when it is random.
    pub fn peek_z(&self, q: usize) -> Option<bool> {
        let n = self.n;
        if (n..2 * n).any(|p| self.xs[p].get(q)) {
            return None;
        }
        let mut acc = PauliOperator::identity(n);
        for i in (0..n).filter(|&i| self.xs[i].get(q)) {
            acc = acc.multiply(&self.stabilizer_row(i)).expect("stabilizers commute");
        }
        Some(acc.sign() == Sign::Minus)
    }

    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Measurement {
        let n = self.n;
        match (n..2 * n).find(|&p| self.xs[p].get(q)) {
            Some(p) => {
                for i in 0..2 * n {
                    if i != p && self.xs[i].get(q) {
                        self.rowsum(i, p);
                    }
                }
                self.xs[p - n] = self.xs[p].clone();
                self.zs[p - n] = self.zs[p].clone();
                self.signs[p - n] = self.signs[p];
                self.xs[p].clear();
                self.zs[p].clear();
                self.zs[p].set(q, true);
                let value = rng.gen::<bool>();
                self.signs[p] = value;
                Measurement { value, random: true }
            }
            None => Measurement { value: self.peek_z(q).expect("deterministic"), random: false },
        }
    }

    /// Measures and flips back to |0>.
    pub fn reset_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) {
        if self.measure_z(q, rng).value {
            self.x(q);
        }
    }

    fn stabilizer_row(&self, i: usize) -> PauliOperator {
        let sign = if self.signs[self.n + i] { Sign::Minus } else { Sign::Plus };
        PauliOperator::from_parts(self.xs[self.n + i].clone(), self.zs[self.n + i].clone(), sign)
            .expect("row lengths agree")
    }

    /// Current stabilizer generators.
    pub fn stabilizers(&self) -> Vec<PauliOperator> {
        (0..self.n).map(|i| self.stabilizer_row(i)).collect()
    }

    /// If `p` or `-p` belongs to the stabilizer group, the sign that does.
    pub fn stabilizer_sign(&self, p: &PauliOperator) -> Option<Sign> {
        assert_eq!(p.num_qubits(), self.n);
        let mut acc = PauliOperator::identity(self.n);
        for i in 0..self.n {
            let stab = self.stabilizer_row(i);
            if !stab.commutes(p).expect("same length") {
                return None;
            }
            let destab = PauliOperator::from_parts(self.xs[i].clone(), self.zs[i].clone(), Sign::Plus)
                .expect("row lengths agree");
            if !destab.commutes(p).expect("same length") {
                acc = acc.multiply(&stab).expect("stabilizers commute");
            }
        }
        if acc.x_bits() != p.x_bits() || acc.z_bits() != p.z_bits() {
            return None;
        }
        Some(if acc.sign() == p.sign() { Sign::Plus } else { Sign::Minus })
    }

    /// Whether `p` itself (with its sign) stabilizes the state.
    pub fn is_stabilized_by(&self, p: &PauliOperator) -> bool {
        self.stabilizer_sign(p) == Some(Sign::Plus)
    }
}

const LETTERS: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];

/// Decodes a two-qubit Pauli index in `1..16` into (first, second) letters.
pub(crate) fn two_qubit_pauli(k: usize) -> (PauliKind, PauliKind) {
    (LETTERS[k & 3], LETTERS[k >> 2])
}

/// Runs `circuit` on a tableau. With `noisy` false every noise annotation
/// is skipped. Returns the final tableau and the measurement record.
pub fn run_on_tableau<R: Rng + ?Sized>(circuit: &Circuit, rng: &mut R, noisy: bool) -> (Tableau, Bits) {
    let mut t = Tableau::new(circuit.num_qubits());
    let mut records = Bits::zeros(circuit.num_records());
    let mut next = 0;
    for inst in circuit.instructions() {
        match inst {
            Instruction::PrepZ(qs) => qs.iter().for_each(|&q| t.reset_z(q, rng)),
            Instruction::H(qs) => qs.iter().for_each(|&q| t.h(q)),
            Instruction::X(qs) => qs.iter().for_each(|&q| t.x(q)),
            Instruction::Z(qs) => qs.iter().for_each(|&q| t.z(q)),
            Instruction::Cnot(qs) => qs.chunks(2).for_each(|p| t.cnot(p[0], p[1])),
            Instruction::MeasureZ(qs) => {
                for &q in qs {
                    records.set(next, t.measure_z(q, rng).value);
                    next += 1;
                }
            }
            Instruction::Cond { pauli, qubit, records: rs } => {
                if parity(&records, rs) {
                    t.apply_pauli(*qubit, *pauli);
                }
            }
            Instruction::Flip { p, qubits } if noisy => {
                for &q in qubits {
                    if rng.gen::<f64>() < *p {
                        t.x(q);
                    }
                }
            }
            Instruction::Depolarize2 { p, qubits } if noisy => {
                for pair in qubits.chunks(2) {
                    if rng.gen::<f64>() < *p {
                        let (a, b) = two_qubit_pauli(rng.gen_range(1..16));
                        t.apply_pauli(pair[0], a);
                        t.apply_pauli(pair[1], b);
                    }
                }
            }
            _ => {}
        }
    }
    (t, records)
}

pub(crate) fn outcome_from_records(circuit: &Circuit, records: Bits) -> ShotOutcome {
    let detectors = Bits::from_bools(&circuit.detectors().iter().map(|d| parity(&records, d)).collect::<Vec<_>>());
    let observables =
        Bits::from_bools(&circuit.observables().iter().map(|(_, o)| parity(&records, o)).collect::<Vec<_>>());
    ShotOutcome { detectors, observables, records: Some(records) }
}

/// One exact noisy shot of `circuit`.
pub fn tableau_run(circuit: &Circuit, seed: u64) -> ShotOutcome {
    let mut rng = shot_rng(seed, 0);
    let (_, records) = run_on_tableau(circuit, &mut rng, true);
    outcome_from_records(circuit, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ShotRng;
    use rand::SeedableRng;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn fresh_state_is_all_zero() {
        let t = Tableau::new(3);
        assert!(t.is_stabilized_by(&p("+Z__")));
        assert!(t.is_stabilized_by(&p("+ZZZ")));
        assert_eq!(t.stabilizer_sign(&p("+X__")), None);
        assert_eq!(t.stabilizer_sign(&p("-_Z_")), Some(Sign::Minus));
    }

    #[test]
    fn bell_pair() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cnot(0, 1);
        assert!(t.is_stabilized_by(&p("+XX")));
        assert!(t.is_stabilized_by(&p("+ZZ")));
        assert!(t.is_stabilized_by(&p("-YY")));
        assert_eq!(t.peek_z(0), None);
        let mut rng = ShotRng::seed_from_u64(1);
        let a = t.measure_z(0, &mut rng);
        assert!(a.random);
        let b = t.measure_z(1, &mut rng);
        assert!(!b.random);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn bell_records_always_agree() {
        let c: Circuit = "QUBITS 2\nH 0\nCNOT 0 1\nMZ 0 1".parse().unwrap();
        let mut seen = [false; 2];
        for seed in 0..64 {
            let r = tableau_run(&c, seed).records.unwrap();
            assert_eq!(r.get(0), r.get(1));
            seen[r.get(0) as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn ghz4_outcomes() {
        let c: Circuit = "QUBITS 4\nH 0\nCNOT 0 1 1 2 2 3\nMZ 0 1 2 3".parse().unwrap();
        for seed in 0..64 {
            let r = tableau_run(&c, seed).records.unwrap().to_bit_string();
            assert!(r == "0000" || r == "1111", "{r}");
        }
    }

    #[test]
    fn certain_flip() {
        let c: Circuit = "QUBITS 1\nE_FLIP 1.0 0\nMZ 0\nDETECT r0".parse().unwrap();
        for seed in 0..8 {
            let o = tableau_run(&c, seed);
            assert!(o.records.unwrap().get(0));
            assert!(o.detectors.get(0));
        }
    }

    #[test]
    fn conditional_pauli_corrects_teleported_bit() {
        // Teleport |1> from qubit 0 to qubit 2.
        let c: Circuit = "QUBITS 3\nX 0\nH 1\nCNOT 1 2\nCNOT 0 1\nH 0\nMZ 0 1\nCOND X 2 IF r1\nCOND Z 2 IF r0\nMZ 2"
            .parse()
            .unwrap();
        for seed in 0..64 {
            assert!(tableau_run(&c, seed).records.unwrap().get(2));
        }
    }

    #[test]
    fn reset_after_entangling() {
        let mut t = Tableau::new(2);
        t.h(0);
        t.cnot(0, 1);
        let mut rng = ShotRng::seed_from_u64(5);
        t.reset_z(0, &mut rng);
        assert_eq!(t.peek_z(0), Some(false));
        assert!(t.peek_z(1).is_some());
    }

    #[test]
    fn cnot_conjugation_table() {
        // Heisenberg picture check: prepare the +1 eigenstate of P, apply
        // CNOT, and confirm the image of P stabilizes the result.
        let images = [("X_", "XX"), ("_X", "_X"), ("Z_", "Z_"), ("_Z", "ZZ")];
        for (before, after) in images {
            let mut t = Tableau::new(2);
            for (q, ch) in before.chars().enumerate() {
                if ch == 'X' {
                    t.h(q);
                }
            }
            t.cnot(0, 1);
            assert!(t.is_stabilized_by(&p(&format!("+{after}"))), "{before} -> {after}");
        }
    }
}
