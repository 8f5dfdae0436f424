//! Fault-tolerant all-zero-state encoders.
//!
//! Every encoder is a tree of preparation units. A unit owns the detectors
//! it places and is retried as a whole when one of them fires; its children
//! are retried independently before it continues. The flat [`Circuit`] is
//! the concatenation of all units in execution order, so a single noiseless
//! or noisy run without retries is an ordinary circuit execution.
//!
//! Data qubits always come first and follow the code's qubit indexing.
//! Ancillas are numbered after them, contiguously per gadget.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::code::{pairs, Basis, CodeProfile, CodeSpec};
use crate::pauli::PauliOperator;
use crate::sim::tableau::run_on_tableau;
use crate::sim::{parity, shot_rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderVariant {
    Original,
    Proposed,
}

impl EncoderVariant {
    pub const ALL: [EncoderVariant; 2] = [EncoderVariant::Original, EncoderVariant::Proposed];
}

impl fmt::Display for EncoderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderVariant::Original => "original",
            EncoderVariant::Proposed => "proposed",
        })
    }
}

impl FromStr for EncoderVariant {
    type Err = EncoderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "original" | "orig" => Ok(EncoderVariant::Original),
            "proposed" | "prop" => Ok(EncoderVariant::Proposed),
            _ => Err(EncoderError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncoderError {
    #[error("encoders exist for levels 1 to 3, not {0}")]
    UnsupportedLevel(usize),
    #[error("unknown encoder variant {0:?}")]
    UnknownVariant(String),
}

/// One piece of a unit's schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// A complete run of a child unit.
    Child(usize),
    /// Instructions placed by the unit itself.
    Ops(Range<usize>),
}

/// An independently retryable preparation unit.
#[derive(Clone, Debug)]
pub struct Unit {
    pub label: String,
    pub steps: Vec<Step>,
    /// Detectors placed by this unit (not by its children).
    pub detectors: Vec<usize>,
    /// Every qubit the unit or its children touch, sorted.
    pub qubits: Vec<usize>,
    /// Qubits touched by the unit's own instructions and by no child.
    pub own_qubits: Vec<usize>,
    /// Qubits holding the prepared state when the unit finishes.
    pub outputs: Vec<usize>,
    /// Child units grouped by the qubits they occupy. Each group re-uses
    /// the same physical qubits.
    pub slots: Vec<Vec<usize>>,
}

impl Unit {
    pub fn children(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().filter_map(|s| match s {
            Step::Child(c) => Some(*c),
            Step::Ops(_) => None,
        })
    }
}

/// A generated encoder.
#[derive(Clone, Debug)]
pub struct EncoderCircuit {
    pub profile: CodeProfile,
    pub variant: EncoderVariant,
    pub circuit: Circuit,
    pub data_qubits: Vec<usize>,
    pub ancilla_qubits: Vec<usize>,
    pub accept_detectors: Vec<usize>,
    pub units: Vec<Unit>,
    pub root: usize,
}

impl EncoderCircuit {
    pub fn num_qubits(&self) -> usize {
        self.data_qubits.len() + self.ancilla_qubits.len()
    }

    pub fn census(&self) -> Census {
        Census {
            profile: self.profile.id(),
            variant: self.variant,
            data: self.data_qubits.len(),
            ancilla: self.ancilla_qubits.len(),
            total: self.num_qubits(),
            formula_total: encoder_qubit_count(&self.profile, self.variant).expect("built encoders are in range"),
        }
    }
}

/// Qubit census of one encoder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Census {
    pub profile: String,
    pub variant: EncoderVariant,
    pub data: usize,
    pub ancilla: usize,
    pub total: usize,
    pub formula_total: usize,
}

/// Closed-form physical qubit count of an encoder.
pub fn encoder_qubit_count(profile: &CodeProfile, variant: EncoderVariant) -> Result<usize, EncoderError> {
    let l = profile.num_levels();
    let n = |i: usize| profile.n(i);
    let l1 = |n1: usize| n1 + 1;
    let l2 = |n1: usize, n2: usize, v: EncoderVariant| match v {
        EncoderVariant::Original => (n2 + 1) * l1(n1) + 4,
        EncoderVariant::Proposed => n2 * l1(n1) + (n1 - 2) + n1 / 2,
    };
    match l {
        1 => Ok(l1(n(1))),
        2 => Ok(l2(n(1), n(2), variant)),
        3 => {
            let (n1, n2, n3) = (n(1), n(2), n(3));
            Ok(match variant {
                // n3 data blocks, one logical ancilla block and two Steane ancilla blocks.
                EncoderVariant::Original => (n3 + 3) * l2(n1, n2, variant),
                EncoderVariant::Proposed => n3 * l2(n1, n2, variant) + (n2 / 2) * l1(n1) + n2 * n1 / 2,
            })
        }
        _ => Err(EncoderError::UnsupportedLevel(l)),
    }
}

/// Builds the encoder of the all-zero logical state.
pub fn build_encoder(profile: &CodeProfile, variant: EncoderVariant) -> Result<EncoderCircuit, EncoderError> {
    let levels = profile.levels().to_vec();
    let data: Vec<usize> = (0..profile.num_physical()).collect();
    let mut next = data.len();
    let mut b = Builder::new();
    match (levels.len(), variant) {
        (1, _) => {
            let lay = GhzLayout::new(&data, &mut next);
            ghz_unit(&mut b, &lay);
        }
        (2, EncoderVariant::Proposed) => {
            let lay = L2PropLayout::new(levels[0], levels[1], &data, &mut next);
            l2_proposed(&mut b, &lay);
        }
        (2, EncoderVariant::Original) => {
            let lay = L2OrigLayout::new(levels[0], levels[1], &data, &mut next);
            l2_original(&mut b, &lay);
        }
        (3, EncoderVariant::Proposed) => {
            let lay = L3PropLayout::new(&levels, &data, &mut next);
            l3_proposed(&mut b, &lay);
        }
        (3, EncoderVariant::Original) => {
            let lay = L3OrigLayout::new(&levels, &data, &mut next);
            l3_original(&mut b, &lay);
        }
        (l, _) => return Err(EncoderError::UnsupportedLevel(l)),
    }
    let (circuit, units) = b.finish();
    assert_eq!(circuit.num_qubits(), next, "every allocated qubit is used");
    let accept_detectors = (0..circuit.detectors().len()).collect();
    Ok(EncoderCircuit {
        profile: profile.clone(),
        variant,
        ancilla_qubits: (data.len()..next).collect(),
        data_qubits: data,
        circuit,
        accept_detectors,
        root: 0,
        units,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoiselessViolation {
    #[error("detector {0} fired")]
    DetectorFired(usize),
    #[error("output is not stabilized by {0}")]
    MissingStabilizer(String),
}

/// Runs `enc` without noise on the tableau simulator and checks that every
/// detector is quiet and that the data hold the all-zero logical state:
/// every stabilizer and every logical Z with sign +1.
pub fn check_noiseless(enc: &EncoderCircuit, seed: u64) -> Result<(), NoiselessViolation> {
    let spec = CodeSpec::build(&enc.profile);
    let total = enc.num_qubits();
    let (t, records) = run_on_tableau(&enc.circuit, &mut shot_rng(seed, 0), false);
    if let Some(d) = enc.circuit.detectors().iter().position(|d| parity(&records, d)) {
        return Err(NoiselessViolation::DetectorFired(d));
    }
    for s in spec.z_stabilizers.iter().chain(&spec.x_stabilizers).chain(&spec.logical_z) {
        let mut w = PauliOperator::identity(total);
        for q in s.support() {
            w.set(q, s.get(q));
        }
        if !t.is_stabilized_by(&w) {
            return Err(NoiselessViolation::MissingStabilizer(s.to_string()));
        }
    }
    Ok(())
}

struct Builder {
    circuit: Circuit,
    units: Vec<Unit>,
    /// Open units with the start of their pending instruction range.
    stack: Vec<(usize, usize)>,
}

impl Builder {
    fn new() -> Self {
        Builder { circuit: Circuit::new(0), units: Vec::new(), stack: Vec::new() }
    }

    fn flush(&mut self) {
        if let Some((id, start)) = self.stack.last_mut() {
            let end = self.circuit.len();
            if end > *start {
                self.units[*id].steps.push(Step::Ops(*start..end));
            }
            *start = end;
        }
    }

    fn open(&mut self, label: String) {
        self.flush();
        let id = self.units.len();
        self.units.push(Unit {
            label,
            steps: Vec::new(),
            detectors: Vec::new(),
            qubits: Vec::new(),
            own_qubits: Vec::new(),
            outputs: Vec::new(),
            slots: Vec::new(),
        });
        if let Some(&(parent, _)) = self.stack.last() {
            self.units[parent].steps.push(Step::Child(id));
        }
        self.stack.push((id, self.circuit.len()));
    }

    fn close(&mut self, outputs: &[usize]) {
        self.flush();
        let (id, _) = self.stack.pop().expect("open unit");
        let mut touched = BTreeSet::new();
        let mut child_qubits = BTreeSet::new();
        let mut slots: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for step in &self.units[id].steps {
            match step {
                Step::Ops(r) => {
                    for inst in &self.circuit.instructions()[r.clone()] {
                        touched.extend(inst.qubits().iter().copied());
                    }
                }
                Step::Child(c) => {
                    let qs = &self.units[*c].qubits;
                    child_qubits.extend(qs.iter().copied());
                    match slots.iter_mut().find(|(k, _)| k == qs) {
                        Some((_, members)) => members.push(*c),
                        None => slots.push((qs.clone(), vec![*c])),
                    }
                }
            }
        }
        for (i, (a, _)) in slots.iter().enumerate() {
            for (b, _) in &slots[i + 1..] {
                assert!(a.iter().all(|q| b.binary_search(q).is_err()), "child slots overlap");
            }
        }
        let own: Vec<usize> = touched.difference(&child_qubits).copied().collect();
        let mut all: Vec<usize> = touched.union(&child_qubits).copied().collect();
        all.sort_unstable();
        let unit = &mut self.units[id];
        unit.own_qubits = own;
        unit.qubits = all;
        unit.outputs = outputs.to_vec();
        unit.slots = slots.into_iter().map(|(_, m)| m).collect();
        if let Some((_, start)) = self.stack.last_mut() {
            *start = self.circuit.len();
        }
    }

    fn reserve(&mut self, qubits: &[usize]) {
        if let Some(&m) = qubits.iter().max() {
            self.circuit.ensure_qubits(m + 1);
        }
    }

    fn prep(&mut self, qubits: &[usize]) {
        self.reserve(qubits);
        self.circuit.prep_z(qubits);
    }

    fn h(&mut self, qubits: &[usize]) {
        self.circuit.h(qubits);
    }

    fn cx(&mut self, controls: &[usize], targets: &[usize]) {
        self.circuit.cnot_transversal(controls, targets);
    }

    fn measure(&mut self, qubits: &[usize]) -> Vec<usize> {
        self.circuit.measure_z(qubits)
    }

    fn detect(&mut self, records: &[usize]) {
        let d = self.circuit.detect(records);
        let (id, _) = *self.stack.last().expect("open unit");
        self.units[id].detectors.push(d);
    }

    fn finish(self) -> (Circuit, Vec<Unit>) {
        assert!(self.stack.is_empty());
        (self.circuit, self.units)
    }
}

/// Position pair checked against suffix errors of a CNOT chain over `n`
/// wires: every proper suffix of weight at least two contains exactly one
/// of them, or is equivalent to a single wire.
fn chain_check_pair(n: usize) -> (usize, usize) {
    match n {
        4 => (1, 2),
        6 => (1, 4),
        _ => panic!("block size {n}"),
    }
}

/// Detectors for a measured wire: a single record, or for a block the
/// all-qubit parity followed by each pair parity.
fn wire_detectors(b: &mut Builder, records: &[usize]) {
    if records.len() == 1 {
        b.detect(records);
        return;
    }
    b.detect(records);
    for &(p, q) in pairs(Basis::Z, records.len()) {
        b.detect(&[records[p], records[q]]);
    }
}

#[derive(Clone, Debug)]
struct GhzLayout {
    data: Vec<usize>,
    check: usize,
}

impl GhzLayout {
    fn new(data: &[usize], next: &mut usize) -> Self {
        let check = *next;
        *next += 1;
        GhzLayout { data: data.to_vec(), check }
    }
}

/// GHZ state on one block with a single parity check.
fn ghz_unit(b: &mut Builder, lay: &GhzLayout) {
    let n = lay.data.len();
    b.open(format!("ghz{n}"));
    let d = &lay.data;
    b.prep(d);
    b.prep(&[lay.check]);
    b.h(&d[..1]);
    for i in 0..n - 1 {
        b.cx(&d[i..i + 1], &d[i + 1..i + 2]);
    }
    let (x, y) = chain_check_pair(n);
    b.cx(&[d[x]], &[lay.check]);
    b.cx(&[d[y]], &[lay.check]);
    let r = b.measure(&[lay.check]);
    b.detect(&r);
    b.close(d);
}

/// Ancilla wires of a simultaneous Z and X check: physical qubits, or
/// level-1 blocks prepared as child units.
enum Ancillas<'a> {
    Qubits(&'a [usize]),
    Blocks(&'a [GhzLayout]),
}

impl Ancillas<'_> {
    fn wires(&self) -> Vec<Vec<usize>> {
        match self {
            Ancillas::Qubits(qs) => qs.iter().map(|&q| vec![q]).collect(),
            Ancillas::Blocks(ls) => ls.iter().map(|l| l.data.clone()).collect(),
        }
    }

    fn prepare(&self, b: &mut Builder) {
        match self {
            Ancillas::Qubits(qs) => b.prep(qs),
            Ancillas::Blocks(ls) => ls.iter().for_each(|l| ghz_unit(b, l)),
        }
    }
}

/// Measures the all-Z and all-X checks over `data` wires at once. Ancilla
/// `a` collects Z parity, `b` X parity, and for six wires `f` flags the
/// spread of X errors from `b`.
fn edzx(b: &mut Builder, data: &[Vec<usize>], anc: Ancillas<'_>) {
    let n = data.len();
    let w = anc.wires();
    assert_eq!(w.len(), n / 2);
    anc.prepare(b);
    let (za, xb) = (&w[0], &w[1]);
    b.h(xb);
    b.cx(xb, za);
    for (i, d) in data.iter().enumerate() {
        if n == 6 && i == 2 {
            b.cx(xb, &w[2]);
        }
        b.cx(xb, d);
        if n == 6 && i == 3 {
            b.cx(xb, &w[2]);
        }
        b.cx(d, za);
    }
    b.cx(xb, za);
    b.h(xb);
    for wire in &w {
        let r = b.measure(wire);
        wire_detectors(b, &r);
    }
}

/// Flag-assisted all-X check on one block; detects Z errors.
fn edz_flag(b: &mut Builder, data: &[usize], anc: usize, flag: usize) {
    let n = data.len();
    b.prep(&[anc, flag]);
    b.h(&[anc]);
    b.cx(&[anc], &data[..1]);
    b.cx(&[anc], &[flag]);
    for &d in &data[1..n - 1] {
        b.cx(&[anc], &[d]);
    }
    b.cx(&[anc], &[flag]);
    b.cx(&[anc], &data[n - 1..]);
    b.h(&[anc]);
    let r = b.measure(&[anc, flag]);
    b.detect(&r[..1]);
    b.detect(&r[1..]);
}

/// Flag-assisted all-Z check on one block; detects X errors.
fn edx_flag(b: &mut Builder, data: &[usize], anc: usize, flag: usize) {
    let n = data.len();
    b.prep(&[anc, flag]);
    b.h(&[flag]);
    b.cx(&data[..1], &[anc]);
    b.cx(&[flag], &[anc]);
    for &d in &data[1..n - 1] {
        b.cx(&[d], &[anc]);
    }
    b.cx(&[flag], &[anc]);
    b.cx(&data[n - 1..], &[anc]);
    b.h(&[flag]);
    let r = b.measure(&[anc, flag]);
    b.detect(&r[..1]);
    b.detect(&r[1..]);
}

/// Qubits of level-1 block `k` inside a level-2 register.
fn block(data: &[usize], n1: usize, k: usize) -> &[usize] {
    &data[k * n1..(k + 1) * n1]
}

/// Prepares `blocks` as level-1 GHZ states and entangles them into the
/// next level's all-zero state with a transversal CNOT chain.
fn chain(b: &mut Builder, blocks: &[Vec<usize>]) {
    b.h(&blocks[0]);
    for k in 0..blocks.len() - 1 {
        b.cx(&blocks[k], &blocks[k + 1]);
    }
}

#[derive(Clone, Debug)]
struct L2PropLayout {
    n1: usize,
    blocks: Vec<GhzLayout>,
    lzm: Vec<usize>,
    pool: Vec<usize>,
}

impl L2PropLayout {
    fn new(n1: usize, n2: usize, data: &[usize], next: &mut usize) -> Self {
        let blocks = (0..n2).map(|k| GhzLayout::new(block(data, n1, k), next)).collect();
        let lzm = (*next..*next + n1 - 2).collect();
        *next += n1 - 2;
        let pool = (*next..*next + n1 / 2).collect();
        *next += n1 / 2;
        L2PropLayout { n1, blocks, lzm, pool }
    }

    fn data(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|l| l.data.iter().copied()).collect()
    }
}

fn l2_proposed(b: &mut Builder, lay: &L2PropLayout) {
    let (n1, n2) = (lay.n1, lay.blocks.len());
    b.open(format!("l2-proposed{n1}{n2}"));
    lay.blocks.iter().for_each(|l| ghz_unit(b, l));
    let wires: Vec<Vec<usize>> = lay.blocks.iter().map(|l| l.data.clone()).collect();
    chain(b, &wires);

    // Logical Z parities of two blocks, one ancilla per level-1 logical.
    // The two blocks alternate so that a partial hook leaves single
    // errors in two different blocks.
    let (ka, kb) = chain_check_pair(n2);
    b.prep(&lay.lzm);
    for (i, &(p, q)) in pairs(Basis::Z, n1).iter().enumerate() {
        let anc = lay.lzm[i];
        for q in [wires[ka][p], wires[kb][p], wires[ka][q], wires[kb][q]] {
            b.cx(&[q], &[anc]);
        }
    }
    let r = b.measure(&lay.lzm);
    r.iter().for_each(|&r| b.detect(&[r]));

    for w in &wires {
        let data: Vec<Vec<usize>> = w.iter().map(|&q| vec![q]).collect();
        edzx(b, &data, Ancillas::Qubits(&lay.pool));
    }
    b.close(&lay.data());
}

#[derive(Clone, Debug)]
struct L2OrigLayout {
    n1: usize,
    blocks: Vec<GhzLayout>,
    la: GhzLayout,
    ez: [usize; 2],
    ex: [usize; 2],
}

impl L2OrigLayout {
    fn new(n1: usize, n2: usize, data: &[usize], next: &mut usize) -> Self {
        let blocks = (0..n2).map(|k| GhzLayout::new(block(data, n1, k), next)).collect();
        let la_data: Vec<usize> = (*next..*next + n1).collect();
        *next += n1;
        let la = GhzLayout::new(&la_data, next);
        let ez = [*next, *next + 1];
        let ex = [*next + 2, *next + 3];
        *next += 4;
        L2OrigLayout { n1, blocks, la, ez, ex }
    }

    fn data(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|l| l.data.iter().copied()).collect()
    }
}

fn l2_original(b: &mut Builder, lay: &L2OrigLayout) {
    let (n1, n2) = (lay.n1, lay.blocks.len());
    b.open(format!("l2-original{n1}{n2}"));
    lay.blocks.iter().for_each(|l| ghz_unit(b, l));
    ghz_unit(b, &lay.la);
    let wires: Vec<Vec<usize>> = lay.blocks.iter().map(|l| l.data.clone()).collect();
    chain(b, &wires);

    // Logical ancilla block collects the logical Z parity of two blocks.
    let (ka, kb) = chain_check_pair(n2);
    b.cx(&wires[ka], &lay.la.data);
    b.cx(&wires[kb], &lay.la.data);
    let r = b.measure(&lay.la.data);
    wire_detectors(b, &r);

    for w in &wires {
        edz_flag(b, w, lay.ez[0], lay.ez[1]);
        edx_flag(b, w, lay.ex[0], lay.ex[1]);
    }
    b.close(&lay.data());
}

#[derive(Clone, Debug)]
struct L3PropLayout {
    levels: Vec<usize>,
    blocks: Vec<L2PropLayout>,
    anc_blocks: Vec<GhzLayout>,
    pool: Vec<usize>,
}

impl L3PropLayout {
    fn new(levels: &[usize], data: &[usize], next: &mut usize) -> Self {
        let (n1, n2, n3) = (levels[0], levels[1], levels[2]);
        let size = n1 * n2;
        let blocks = (0..n3).map(|k| L2PropLayout::new(n1, n2, &data[k * size..(k + 1) * size], next)).collect();
        let anc_blocks = (0..n2 / 2)
            .map(|_| {
                let d: Vec<usize> = (*next..*next + n1).collect();
                *next += n1;
                GhzLayout::new(&d, next)
            })
            .collect();
        let pool = (*next..*next + n2 * n1 / 2).collect();
        *next += n2 * n1 / 2;
        L3PropLayout { levels: levels.to_vec(), blocks, anc_blocks, pool }
    }
}

fn l3_proposed(b: &mut Builder, lay: &L3PropLayout) {
    let (n1, n2) = (lay.levels[0], lay.levels[1]);
    b.open(format!("l3-proposed{}{}{}", n1, n2, lay.levels[2]));
    lay.blocks.iter().for_each(|l| l2_proposed(b, l));
    let wires: Vec<Vec<usize>> = lay.blocks.iter().map(L2PropLayout::data).collect();
    chain(b, &wires);
    for w in &wires {
        let sub: Vec<Vec<usize>> = (0..n2).map(|k| block(w, n1, k).to_vec()).collect();
        edzx(b, &sub, Ancillas::Blocks(&lay.anc_blocks));
        // Level-1 checks on every block at once, one pool share each.
        let share = n1 / 2;
        let per_block: Vec<(Vec<Vec<usize>>, &[usize])> = sub
            .iter()
            .enumerate()
            .map(|(k, s)| (s.iter().map(|&q| vec![q]).collect(), &lay.pool[k * share..(k + 1) * share]))
            .collect();
        for (data, pool) in per_block {
            edzx(b, &data, Ancillas::Qubits(pool));
        }
    }
    b.close(&wires.concat());
}

#[derive(Clone, Debug)]
struct L3OrigLayout {
    levels: Vec<usize>,
    blocks: Vec<L2OrigLayout>,
    la: L2OrigLayout,
    steane: [L2OrigLayout; 2],
}

impl L3OrigLayout {
    fn new(levels: &[usize], data: &[usize], next: &mut usize) -> Self {
        let (n1, n2, n3) = (levels[0], levels[1], levels[2]);
        let size = n1 * n2;
        let blocks = (0..n3).map(|k| L2OrigLayout::new(n1, n2, &data[k * size..(k + 1) * size], next)).collect();
        let fresh = |next: &mut usize| {
            let d: Vec<usize> = (*next..*next + size).collect();
            *next += size;
            L2OrigLayout::new(n1, n2, &d, next)
        };
        let la = fresh(next);
        let steane = [fresh(next), fresh(next)];
        L3OrigLayout { levels: levels.to_vec(), blocks, la, steane }
    }
}

fn l3_original(b: &mut Builder, lay: &L3OrigLayout) {
    let (n1, n2, n3) = (lay.levels[0], lay.levels[1], lay.levels[2]);
    b.open(format!("l3-original{n1}{n2}{n3}"));
    lay.blocks.iter().for_each(|l| l2_original(b, l));
    l2_original(b, &lay.la);
    let wires: Vec<Vec<usize>> = lay.blocks.iter().map(L2OrigLayout::data).collect();
    chain(b, &wires);

    let inner = CodeSpec::build(&CodeProfile::new(&[n1, n2]).expect("valid level-2 profile"));
    let supports = |basis: Basis, with_logicals: bool| -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = inner.stabilizers(basis).iter().map(|s| s.support()).collect();
        if with_logicals {
            out.extend(inner.logicals(basis).iter().map(|s| s.support()));
        }
        out
    };
    let detect_on = |b: &mut Builder, records: &[usize], sets: &[Vec<usize>]| {
        for s in sets {
            let rs: Vec<usize> = s.iter().map(|&i| records[i]).collect();
            b.detect(&rs);
        }
    };

    let (ka, kb) = chain_check_pair(n3);
    let la = lay.la.data();
    b.cx(&wires[ka], &la);
    b.cx(&wires[kb], &la);
    let r = b.measure(&la);
    detect_on(b, &r, &supports(Basis::Z, true));

    let [sz, sx] = &lay.steane;
    let (az, ax) = (sz.data(), sx.data());
    for w in &wires {
        // Steane-type checks against freshly encoded all-zero blocks.
        l2_original(b, sz);
        b.cx(&az, w);
        b.h(&az);
        let r = b.measure(&az);
        detect_on(b, &r, &supports(Basis::X, false));

        l2_original(b, sx);
        b.h(&ax);
        b.cx(w, &ax);
        let r = b.measure(&ax);
        detect_on(b, &r, &supports(Basis::Z, false));
    }
    b.close(&wires.concat());
}
