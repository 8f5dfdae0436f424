//! Clifford circuit representation with measurement records, classical
//! feed-forward, noise annotations, detectors and observables.
//!
//! Measurement records form one global append-only sequence: every `MZ`
//! target appends one record. Detectors and observables are parities of
//! records evaluated after the run; `COND` is the only feed-forward.
//!
//! The text format is line based (`#` starts a comment):
//!
//! ```text
//! QUBITS 2
//! PREPZ 0 1
//! H 0
//! CNOT 0 1
//! E_DEPOL2 0.001 0 1
//! MZ 0 1
//! DETECT r0 ^ r1
//! ```

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::pauli::PauliKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("record r{record} referenced but only {available} records exist")]
    RecordOutOfRange { record: usize, available: usize },
    #[error("two-qubit instruction needs an even number of targets, got {0}")]
    OddTargetCount(usize),
    #[error("qubit {0} appears twice in one two-qubit instruction")]
    RepeatedQubit(usize),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("conditional Pauli must be X or Z")]
    BadConditionalPauli,
    #[error("circuit already carries noise annotations")]
    AlreadyNoisy,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    PrepZ(Vec<usize>),
    H(Vec<usize>),
    X(Vec<usize>),
    Z(Vec<usize>),
    /// Flattened `(control, target)` pairs.
    Cnot(Vec<usize>),
    MeasureZ(Vec<usize>),
    /// Apply `pauli` to `qubit` iff the parity of `records` is odd.
    Cond {
        pauli: PauliKind,
        qubit: usize,
        records: Vec<usize>,
    },
    /// Independent X flip with probability `p` on each target.
    Flip {
        p: f64,
        qubits: Vec<usize>,
    },
    /// One of the 15 non-identity two-qubit Paulis, total probability `p`, per pair.
    Depolarize2 {
        p: f64,
        qubits: Vec<usize>,
    },
    Detect(Vec<usize>),
    Observable {
        label: String,
        records: Vec<usize>,
    },
}

impl Instruction {
    pub fn name(&self) -> &'static str {
        match self {
            Instruction::PrepZ(_) => "PREPZ",
            Instruction::H(_) => "H",
            Instruction::X(_) => "X",
            Instruction::Z(_) => "Z",
            Instruction::Cnot(_) => "CNOT",
            Instruction::MeasureZ(_) => "MZ",
            Instruction::Cond { .. } => "COND",
            Instruction::Flip { .. } => "E_FLIP",
            Instruction::Depolarize2 { .. } => "E_DEPOL2",
            Instruction::Detect(_) => "DETECT",
            Instruction::Observable { .. } => "OBS",
        }
    }

    pub fn qubits(&self) -> &[usize] {
        match self {
            Instruction::PrepZ(q)
            | Instruction::H(q)
            | Instruction::X(q)
            | Instruction::Z(q)
            | Instruction::Cnot(q)
            | Instruction::MeasureZ(q)
            | Instruction::Flip { qubits: q, .. }
            | Instruction::Depolarize2 { qubits: q, .. } => q,
            Instruction::Cond { qubit, .. } => std::slice::from_ref(qubit),
            Instruction::Detect(_) | Instruction::Observable { .. } => &[],
        }
    }

    pub fn is_noise(&self) -> bool {
        matches!(self, Instruction::Flip { .. } | Instruction::Depolarize2 { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    instructions: Vec<Instruction>,
    num_records: usize,
    detectors: Vec<Vec<usize>>,
    observables: Vec<(String, Vec<usize>)>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit { num_qubits, instructions: Vec::new(), num_records: 0, detectors: Vec::new(), observables: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn num_records(&self) -> usize {
        self.num_records
    }

    pub fn detectors(&self) -> &[Vec<usize>] {
        &self.detectors
    }

    pub fn observables(&self) -> &[(String, Vec<usize>)] {
        &self.observables
    }

    pub fn has_noise(&self) -> bool {
        self.instructions.iter().any(Instruction::is_noise)
    }

    /// Grows the qubit register; existing indices are unchanged.
    pub fn ensure_qubits(&mut self, n: usize) {
        self.num_qubits = self.num_qubits.max(n);
    }

    pub fn append(&mut self, inst: Instruction) -> Result<(), CircuitError> {
        self.validate(&inst)?;
        match &inst {
            Instruction::MeasureZ(q) => self.num_records += q.len(),
            Instruction::Detect(r) => self.detectors.push(r.clone()),
            Instruction::Observable { label, records } => self.observables.push((label.clone(), records.clone())),
            _ => {}
        }
        self.instructions.push(inst);
        Ok(())
    }

    fn validate(&self, inst: &Instruction) -> Result<(), CircuitError> {
        for &q in inst.qubits() {
            if q >= self.num_qubits {
                return Err(CircuitError::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
            }
        }
        let check_records = |records: &[usize]| {
            for &r in records {
                if r >= self.num_records {
                    return Err(CircuitError::RecordOutOfRange { record: r, available: self.num_records });
                }
            }
            Ok(())
        };
        let check_p = |p: f64| if (0.0..=1.0).contains(&p) { Ok(()) } else { Err(CircuitError::BadProbability(p)) };
        let check_pairs = |q: &[usize]| {
            if !q.len().is_multiple_of(2) {
                return Err(CircuitError::OddTargetCount(q.len()));
            }
            for pair in q.chunks(2) {
                if pair[0] == pair[1] {
                    return Err(CircuitError::RepeatedQubit(pair[0]));
                }
            }
            Ok(())
        };
        match inst {
            Instruction::Cnot(q) => check_pairs(q),
            Instruction::Depolarize2 { p, qubits } => {
                check_p(*p)?;
                check_pairs(qubits)
            }
            Instruction::Flip { p, .. } => check_p(*p),
            Instruction::Cond { pauli, records, .. } => {
                if !matches!(pauli, PauliKind::X | PauliKind::Z) {
                    return Err(CircuitError::BadConditionalPauli);
                }
                check_records(records)
            }
            Instruction::Detect(r) | Instruction::Observable { records: r, .. } => check_records(r),
            _ => Ok(()),
        }
    }

    // Builder helpers used by the circuit generators. They panic on malformed
    // input, which indicates a generator bug rather than a user error.

    pub fn prep_z(&mut self, qubits: &[usize]) {
        self.append(Instruction::PrepZ(qubits.to_vec())).expect("PREPZ");
    }

    pub fn h(&mut self, qubits: &[usize]) {
        self.append(Instruction::H(qubits.to_vec())).expect("H");
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        self.append(Instruction::Cnot(vec![control, target])).expect("CNOT");
    }

    /// Transversal CNOT between two equally sized registers.
    pub fn cnot_transversal(&mut self, controls: &[usize], targets: &[usize]) {
        assert_eq!(controls.len(), targets.len());
        let flat: Vec<usize> = controls.iter().zip(targets).flat_map(|(&c, &t)| [c, t]).collect();
        self.append(Instruction::Cnot(flat)).expect("CNOT");
    }

    /// Measures in the Z basis and returns the new record indices.
    pub fn measure_z(&mut self, qubits: &[usize]) -> Vec<usize> {
        let start = self.num_records;
        self.append(Instruction::MeasureZ(qubits.to_vec())).expect("MZ");
        (start..self.num_records).collect()
    }

    /// Appends a detector and returns its index.
    pub fn detect(&mut self, records: &[usize]) -> usize {
        self.append(Instruction::Detect(records.to_vec())).expect("DETECT");
        self.detectors.len() - 1
    }

    pub fn observable(&mut self, label: &str, records: &[usize]) -> usize {
        self.append(Instruction::Observable { label: label.to_string(), records: records.to_vec() }).expect("OBS");
        self.observables.len() - 1
    }

    pub fn serialize(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        text.parse()
    }

    /// Every place where the circuit-level noise model can insert a fault.
    pub fn fault_locations(&self) -> Vec<FaultLocation> {
        let mut out = Vec::new();
        for (i, inst) in self.instructions.iter().enumerate() {
            match inst {
                Instruction::PrepZ(qs) => {
                    out.extend(qs.iter().map(|&q| FaultLocation { instruction_index: i, site: FaultSite::Prep(q) }))
                }
                Instruction::MeasureZ(qs) => {
                    out.extend(qs.iter().map(|&q| FaultLocation { instruction_index: i, site: FaultSite::Measure(q) }))
                }
                Instruction::Cnot(qs) => out.extend(qs.chunks(2).map(|p| FaultLocation {
                    instruction_index: i,
                    site: FaultSite::Cnot { control: p[0], target: p[1] },
                })),
                _ => {}
            }
        }
        out
    }
}

/// Where an elementary fault acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaultSite {
    /// X flip right after preparation.
    Prep(usize),
    /// Flip of the outcome, modelled as X right before measurement.
    Measure(usize),
    /// Two-qubit Pauli right after the gate.
    Cnot { control: usize, target: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FaultLocation {
    pub instruction_index: usize,
    pub site: FaultSite,
}

/// One concrete Pauli fault: `(qubit, pauli)` pairs, at most two.
pub type FaultPaulis = Vec<(usize, PauliKind)>;

const LETTERS: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];

impl FaultLocation {
    pub fn fault_count(&self) -> usize {
        match self.site {
            FaultSite::Prep(_) | FaultSite::Measure(_) => 1,
            FaultSite::Cnot { .. } => 15,
        }
    }

    /// The elementary faults available at this location.
    pub fn faults(&self) -> Vec<FaultPaulis> {
        match self.site {
            FaultSite::Prep(q) | FaultSite::Measure(q) => vec![vec![(q, PauliKind::X)]],
            FaultSite::Cnot { control, target } => (1..16)
                .map(|k| {
                    let mut f = Vec::new();
                    if k & 3 != 0 {
                        f.push((control, LETTERS[k & 3]));
                    }
                    if k >> 2 != 0 {
                        f.push((target, LETTERS[k >> 2]));
                    }
                    f
                })
                .collect(),
        }
    }
}

fn write_records(out: &mut String, records: &[usize]) {
    for (k, r) in records.iter().enumerate() {
        if k > 0 {
            out.push_str(" ^");
        }
        let _ = write!(out, " r{r}");
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QUBITS {}", self.num_qubits)?;
        for inst in &self.instructions {
            let mut line = String::from(inst.name());
            match inst {
                Instruction::Cond { pauli, qubit, records } => {
                    let letter = if *pauli == PauliKind::X { "X" } else { "Z" };
                    let _ = write!(line, " {letter} {qubit} IF");
                    write_records(&mut line, records);
                }
                Instruction::Flip { p, qubits } | Instruction::Depolarize2 { p, qubits } => {
                    let _ = write!(line, " {p}");
                    qubits.iter().for_each(|q| {
                        let _ = write!(line, " {q}");
                    });
                }
                Instruction::Detect(records) => write_records(&mut line, records),
                Instruction::Observable { label, records } => {
                    let _ = write!(line, " {label}");
                    write_records(&mut line, records);
                }
                other => other.qubits().iter().for_each(|q| {
                    let _ = write!(line, " {q}");
                }),
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = CircuitError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| CircuitError::Parse { line: line_no, reason };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let op = tokens.next().unwrap();
            let rest: Vec<&str> = tokens.collect();
            if op == "QUBITS" {
                if circuit.is_some() {
                    return Err(err("QUBITS declared twice".into()));
                }
                let n = match rest.as_slice() {
                    [n] => n.parse().map_err(|_| err(format!("bad qubit count {n:?}")))?,
                    _ => return Err(err("QUBITS takes one argument".into())),
                };
                circuit = Some(Circuit::new(n));
                continue;
            }
            let c = circuit.as_mut().ok_or_else(|| err("QUBITS must come first".into()))?;
            let inst = parse_instruction(op, &rest).map_err(err)?;
            c.append(inst).map_err(|e| match e {
                CircuitError::Parse { .. } => e,
                other => err(other.to_string()),
            })?;
        }
        circuit.ok_or(CircuitError::Parse { line: 0, reason: "missing QUBITS header".into() })
    }
}

fn parse_usize(tok: &str) -> Result<usize, String> {
    tok.parse().map_err(|_| format!("expected an index, got {tok:?}"))
}

fn parse_qubits(tokens: &[&str]) -> Result<Vec<usize>, String> {
    if tokens.is_empty() {
        return Err("missing targets".into());
    }
    tokens.iter().map(|t| parse_usize(t)).collect()
}

/// Parses `r3 ^ r5 ^ r9`.
fn parse_records(tokens: &[&str]) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    let mut expect_record = true;
    for tok in tokens {
        if expect_record {
            let idx = tok.strip_prefix('r').ok_or_else(|| format!("expected record r<i>, got {tok:?}"))?;
            out.push(parse_usize(idx)?);
        } else if *tok != "^" {
            return Err(format!("expected '^', got {tok:?}"));
        }
        expect_record = !expect_record;
    }
    if out.is_empty() || expect_record {
        return Err("malformed record parity".into());
    }
    Ok(out)
}

fn parse_probability(tok: Option<&&str>) -> Result<f64, String> {
    let tok = tok.ok_or("missing probability")?;
    tok.parse().map_err(|_| format!("bad probability {tok:?}"))
}

fn parse_instruction(op: &str, rest: &[&str]) -> Result<Instruction, String> {
    Ok(match op {
        "PREPZ" => Instruction::PrepZ(parse_qubits(rest)?),
        "H" => Instruction::H(parse_qubits(rest)?),
        "X" => Instruction::X(parse_qubits(rest)?),
        "Z" => Instruction::Z(parse_qubits(rest)?),
        "CNOT" => Instruction::Cnot(parse_qubits(rest)?),
        "MZ" => Instruction::MeasureZ(parse_qubits(rest)?),
        "E_FLIP" => Instruction::Flip { p: parse_probability(rest.first())?, qubits: parse_qubits(&rest[1..])? },
        "E_DEPOL2" => {
            Instruction::Depolarize2 { p: parse_probability(rest.first())?, qubits: parse_qubits(&rest[1..])? }
        }
        "DETECT" => Instruction::Detect(parse_records(rest)?),
        "OBS" => {
            let label = rest.first().ok_or("OBS needs a label")?;
            Instruction::Observable { label: label.to_string(), records: parse_records(&rest[1..])? }
        }
        "COND" => {
            let [letter, qubit, kw, recs @ ..] = rest else {
                return Err("COND syntax: COND X|Z <q> IF r<i> [^ r<j> ...]".into());
            };
            let pauli = match *letter {
                "X" => PauliKind::X,
                "Z" => PauliKind::Z,
                other => return Err(format!("COND Pauli must be X or Z, got {other:?}")),
            };
            if *kw != "IF" {
                return Err("COND expects IF".into());
            }
            Instruction::Cond { pauli, qubit: parse_usize(qubit)?, records: parse_records(recs)? }
        }
        other => return Err(format!("unknown instruction {other:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_skeleton() {
        let mut c = Circuit::new(2);
        c.h(&[0]);
        c.cnot(0, 1);
        assert_eq!(c.len(), 2);
        let r = c.measure_z(&[0]);
        assert_eq!(c.detect(&r), 0);
        assert_eq!(c.detectors().len(), 1);
    }

    #[test]
    fn record_before_definition_is_rejected() {
        let mut c = Circuit::new(1);
        c.measure_z(&[0]);
        c.measure_z(&[0]);
        c.measure_z(&[0]);
        let e = c.append(Instruction::Cond { pauli: PauliKind::X, qubit: 0, records: vec![5] });
        assert_eq!(e, Err(CircuitError::RecordOutOfRange { record: 5, available: 3 }));
    }

    #[test]
    fn qubit_range_checked() {
        let mut c = Circuit::new(2);
        assert!(matches!(c.append(Instruction::H(vec![2])), Err(CircuitError::QubitOutOfRange { .. })));
        assert!(matches!(c.append(Instruction::Cnot(vec![1, 1])), Err(CircuitError::RepeatedQubit(1))));
    }

    #[test]
    fn text_round_trip() {
        let text = "QUBITS 2\nH 0\nCNOT 0 1\nMZ 0 1\n";
        let c: Circuit = text.parse().unwrap();
        assert_eq!(c.num_records(), 2);
        assert_eq!(c.serialize(), text);
        assert_eq!(Circuit::parse(&c.serialize()).unwrap(), c);
    }

    #[test]
    fn full_grammar_round_trip() {
        let text = "\
# comment line
QUBITS 3
PREPZ 0 1 2
E_FLIP 0.25 0 1 2
H 0
CNOT 0 1 1 2   # trailing comment
E_DEPOL2 0.001 0 1 1 2
MZ 0 1
COND X 2 IF r0 ^ r1
COND Z 2 IF r1
MZ 2
DETECT r0 ^ r1
OBS logical r2
";
        let c: Circuit = text.parse().unwrap();
        assert_eq!(c.detectors(), &[vec![0, 1]]);
        assert_eq!(c.observables(), &[("logical".to_string(), vec![2])]);
        assert_eq!(Circuit::parse(&c.serialize()).unwrap(), c);
        assert!(c.has_noise());
    }

    #[test]
    fn depolarizing_annotation_parses() {
        let c: Circuit = "QUBITS 2\nE_DEPOL2 0.001 0 1".parse().unwrap();
        assert_eq!(c.instructions()[0], Instruction::Depolarize2 { p: 0.001, qubits: vec![0, 1] });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = "QUBITS 2\nCNOT 0".parse::<Circuit>().unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 2, .. }), "{e}");
        let e = "H 0".parse::<Circuit>().unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 1, .. }));
        let e = "QUBITS 1\nE_FLIP 1.5 0".parse::<Circuit>().unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 2, .. }));
        let e = "QUBITS 1\nMZ 0\nDETECT r0 ^".parse::<Circuit>().unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 3, .. }));
        assert!("QUBITS 1\nFOO 0".parse::<Circuit>().is_err());
    }

    #[test]
    fn fault_census() {
        let c: Circuit = "QUBITS 1\nPREPZ 0\nMZ 0".parse().unwrap();
        let locs = c.fault_locations();
        assert_eq!(locs.len(), 2);
        assert_eq!(locs.iter().map(FaultLocation::fault_count).sum::<usize>(), 2);

        let c: Circuit = "QUBITS 4\nCNOT 0 1 2 3\nCNOT 1 2".parse().unwrap();
        let locs = c.fault_locations();
        assert_eq!(locs.len(), 3);
        assert_eq!(locs.iter().map(FaultLocation::fault_count).sum::<usize>(), 45);
        let faults = locs[0].faults();
        assert_eq!(faults.len(), 15);
        let distinct: std::collections::HashSet<_> = faults.iter().collect();
        assert_eq!(distinct.len(), 15);

        let c: Circuit = "QUBITS 2\nH 0 1\nH 0".parse().unwrap();
        assert!(c.fault_locations().is_empty());
    }
}
