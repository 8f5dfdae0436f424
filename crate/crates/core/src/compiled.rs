//! Encoders compiled into per-unit fault tables for fast noisy sampling.
//!
//! For every unit the effect of each elementary fault on the unit's own
//! detectors and on the Pauli frame of its outputs is tabulated once by a
//! backward sensitivity sweep. The output frame of a child unit enters its
//! parent through an injection table recorded at the point where the child
//! finishes. A noisy preparation is then a recursive draw: children first,
//! own faults by geometric skipping, and a retry of the unit whenever one
//! of its own detectors fires.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{FaultLocation, FaultSite, Instruction};
use crate::encoders::{EncoderCircuit, Step};
use crate::noise::for_each_event;
use crate::pauli::{Bits, PauliKind};

pub const DEFAULT_RETRY_CAP: u64 = 1000;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("unit {unit} exceeded {cap} attempts")]
pub struct Aborted {
    pub unit: usize,
    pub cap: u64,
}

#[derive(Clone, Debug)]
struct Site {
    #[cfg_attr(not(test), allow(dead_code))]
    location: FaultLocation,
    /// Offset of the effect vectors in the unit's pool: one vector for a
    /// preparation or measurement, four (X and Z on control, X and Z on
    /// target) for a CNOT.
    offset: usize,
    pair: bool,
}

#[derive(Clone, Debug)]
struct Child {
    unit: usize,
    /// Offset of `2 * outputs` injection vectors: X on each output, then Z.
    offset: usize,
    /// Number of instances sharing this child's qubits.
    slot_size: usize,
}

#[derive(Clone, Debug)]
struct Table {
    label: String,
    outputs: usize,
    detectors: Vec<usize>,
    words: usize,
    own_qubits: usize,
    sites: Vec<Site>,
    children: Vec<Child>,
    pool: Vec<u64>,
}

impl Table {
    fn vector(&self, offset: usize) -> &[u64] {
        &self.pool[offset * self.words..(offset + 1) * self.words]
    }

    fn det_range(&self) -> (usize, usize) {
        (2 * self.outputs, 2 * self.outputs + self.detectors.len())
    }
}

/// An encoder ready for noisy sampling with unit-level retries.
#[derive(Clone, Debug)]
pub struct CompiledEncoder {
    tables: Vec<Table>,
    root: usize,
    num_data: usize,
    census: usize,
}

/// Attempt counters of one sampling run, per unit.
#[derive(Clone, Debug, Default)]
pub struct RetryCounters {
    pub invocations: Vec<u64>,
    pub attempts: Vec<u64>,
}

impl RetryCounters {
    pub fn merge(&mut self, other: &RetryCounters) {
        if self.invocations.len() < other.invocations.len() {
            self.invocations.resize(other.invocations.len(), 0);
            self.attempts.resize(other.attempts.len(), 0);
        }
        for (i, (a, b)) in other.invocations.iter().zip(&other.attempts).enumerate() {
            self.invocations[i] += a;
            self.attempts[i] += b;
        }
    }
}

/// Reusable per-thread buffers.
pub struct Scratch {
    frames: Vec<Vec<u64>>,
    pub counters: RetryCounters,
}

/// One accepted preparation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prepared {
    /// Physical qubit preparations, with reused qubits counted once per
    /// slot and retries counted in full.
    pub cost: f64,
}

fn xor_into(acc: &mut [u64], v: &[u64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a ^= b;
    }
}

fn letters(k: usize) -> (PauliKind, PauliKind) {
    const L: [PauliKind; 4] = [PauliKind::I, PauliKind::X, PauliKind::Y, PauliKind::Z];
    (L[k & 3], L[k >> 2])
}

fn has_x(k: PauliKind) -> bool {
    matches!(k, PauliKind::X | PauliKind::Y)
}

fn has_z(k: PauliKind) -> bool {
    matches!(k, PauliKind::Z | PauliKind::Y)
}

impl CompiledEncoder {
    pub fn new(enc: &EncoderCircuit) -> Self {
        let c = &enc.circuit;
        let mut record_base = Vec::with_capacity(c.len());
        let mut r = 0;
        for inst in c.instructions() {
            record_base.push(r);
            if let Instruction::MeasureZ(q) = inst {
                r += q.len();
            }
        }
        let tables = (0..enc.units.len()).map(|u| compile_unit(enc, u, &record_base)).collect();
        CompiledEncoder { tables, root: enc.root, num_data: enc.data_qubits.len(), census: enc.num_qubits() }
    }

    pub fn num_data(&self) -> usize {
        self.num_data
    }

    pub fn census(&self) -> usize {
        self.census
    }

    pub fn num_units(&self) -> usize {
        self.tables.len()
    }

    pub fn label(&self, unit: usize) -> &str {
        &self.tables[unit].label
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            frames: self.tables.iter().map(|t| vec![0; t.words]).collect(),
            counters: RetryCounters { invocations: vec![0; self.tables.len()], attempts: vec![0; self.tables.len()] },
        }
    }

    /// Prepares one accepted all-zero block. Its residual frame is written
    /// to `x` and `z`, indexed like the data qubits.
    pub fn prepare<R: Rng + ?Sized>(
        &self,
        p: f64,
        cap: u64,
        rng: &mut R,
        scratch: &mut Scratch,
        x: &mut Bits,
        z: &mut Bits,
    ) -> Result<Prepared, Aborted> {
        let cost = self.sample(self.root, p, cap, rng, scratch)?;
        let frame = &scratch.frames[self.root];
        x.clear();
        z.clear();
        for i in iter_ones(frame, 0, 2 * self.num_data) {
            if i < self.num_data {
                x.set(i, true);
            } else {
                z.set(i - self.num_data, true);
            }
        }
        Ok(Prepared { cost })
    }

    /// Runs a single attempt of every unit with no retries and reports
    /// whether any detector anywhere fired. This is the distribution of one
    /// execution of the flat circuit.
    pub fn single_pass<R: Rng + ?Sized>(&self, p: f64, rng: &mut R, scratch: &mut Scratch) -> bool {
        self.sample(self.root, p, 1, rng, scratch).is_err()
    }

    fn sample<R: Rng + ?Sized>(
        &self,
        u: usize,
        p: f64,
        cap: u64,
        rng: &mut R,
        scratch: &mut Scratch,
    ) -> Result<f64, Aborted> {
        let t = &self.tables[u];
        let mut acc = std::mem::take(&mut scratch.frames[u]);
        let (d0, d1) = t.det_range();
        let mut total = 0.0;
        scratch.counters.invocations[u] += 1;
        let mut attempts = 0;
        let result = loop {
            attempts += 1;
            if attempts > cap {
                break Err(Aborted { unit: u, cap });
            }
            scratch.counters.attempts[u] += 1;
            acc.iter_mut().for_each(|w| *w = 0);
            let mut cost = t.own_qubits as f64;
            for ch in &t.children {
                match self.sample(ch.unit, p, cap, rng, scratch) {
                    Ok(c) => cost += c / ch.slot_size as f64,
                    Err(e) => {
                        scratch.frames[u] = acc;
                        return Err(e);
                    }
                }
                let n_out = self.tables[ch.unit].outputs;
                let frame = &scratch.frames[ch.unit];
                for i in iter_ones(frame, 0, 2 * n_out) {
                    xor_into(&mut acc, t.vector(ch.offset + i));
                }
            }
            for_each_event(t.sites.len(), p, rng, |i, rng| {
                let s = &t.sites[i];
                if s.pair {
                    let (a, b) = letters(rng.gen_range(1..16));
                    for (bit, on) in [has_x(a), has_z(a), has_x(b), has_z(b)].into_iter().enumerate() {
                        if on {
                            xor_into(&mut acc, t.vector(s.offset + bit));
                        }
                    }
                } else {
                    xor_into(&mut acc, t.vector(s.offset));
                }
            });
            total += cost;
            if iter_ones(&acc, d0, d1).next().is_none() {
                break Ok(total);
            }
        };
        scratch.frames[u] = acc;
        result
    }
}

/// Indices of set bits of `words` in `lo..hi`.
fn iter_ones(words: &[u64], lo: usize, hi: usize) -> impl Iterator<Item = usize> + '_ {
    let (w0, w1) = (lo / 64, hi.div_ceil(64));
    (w0..w1).flat_map(move |w| {
        let mut bits = words[w];
        if w == lo / 64 {
            bits &= !0u64 << (lo % 64);
        }
        if w == w1 - 1 && !hi.is_multiple_of(64) {
            bits &= (1u64 << (hi % 64)) - 1;
        }
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(w * 64 + b)
        })
    })
}

fn compile_unit(enc: &EncoderCircuit, u: usize, record_base: &[usize]) -> Table {
    let c = &enc.circuit;
    let unit = &enc.units[u];
    let n_out = unit.outputs.len();
    let dim = 2 * n_out + unit.detectors.len();
    let words = dim.div_ceil(64).max(1);
    let nq = c.num_qubits();
    let mut sx = vec![Bits::zeros(dim); nq];
    let mut sz = vec![Bits::zeros(dim); nq];
    for (k, &q) in unit.outputs.iter().enumerate() {
        sx[q].set(k, true);
        sz[q].set(n_out + k, true);
    }
    let mut det_of_record: std::collections::HashMap<usize, Bits> = std::collections::HashMap::new();
    for (j, &d) in unit.detectors.iter().enumerate() {
        for &r in &c.detectors()[d] {
            det_of_record.entry(r).or_insert_with(|| Bits::zeros(dim)).toggle(2 * n_out + j);
        }
    }

    let mut pool: Vec<u64> = Vec::new();
    let push = |pool: &mut Vec<u64>, v: &Bits| {
        let at = pool.len() / words;
        pool.extend_from_slice(v.words());
        pool.resize((at + 1) * words, 0);
        at
    };
    let mut sites = Vec::new();
    let mut children = Vec::new();
    let slot_size = |c: usize| unit.slots.iter().find(|s| s.contains(&c)).map_or(1, Vec::len);

    for step in unit.steps.iter().rev() {
        match step {
            Step::Child(ch) => {
                let child = &enc.units[*ch];
                let offset = pool.len() / words;
                for &q in &child.outputs {
                    push(&mut pool, &sx[q]);
                }
                for &q in &child.outputs {
                    push(&mut pool, &sz[q]);
                }
                for &q in &child.qubits {
                    if !child.outputs.contains(&q) {
                        assert!(sx[q].is_zero() && sz[q].is_zero(), "child {} leaks qubit {q}", child.label);
                    }
                    sx[q].clear();
                    sz[q].clear();
                }
                children.push(Child { unit: *ch, offset, slot_size: slot_size(*ch) });
            }
            Step::Ops(range) => {
                for i in range.clone().rev() {
                    match &c.instructions()[i] {
                        Instruction::PrepZ(qs) => {
                            for &q in qs {
                                let offset = push(&mut pool, &sx[q]);
                                sites.push(Site {
                                    location: FaultLocation { instruction_index: i, site: FaultSite::Prep(q) },
                                    offset,
                                    pair: false,
                                });
                                sx[q].clear();
                                sz[q].clear();
                            }
                        }
                        Instruction::MeasureZ(qs) => {
                            for (k, &q) in qs.iter().enumerate().rev() {
                                if let Some(d) = det_of_record.get(&(record_base[i] + k)) {
                                    sx[q].xor_assign(d);
                                }
                                let offset = push(&mut pool, &sx[q]);
                                sites.push(Site {
                                    location: FaultLocation { instruction_index: i, site: FaultSite::Measure(q) },
                                    offset,
                                    pair: false,
                                });
                                sz[q].clear();
                            }
                        }
                        Instruction::H(qs) => {
                            for &q in qs {
                                std::mem::swap(&mut sx[q], &mut sz[q]);
                            }
                        }
                        Instruction::Cnot(qs) => {
                            for p in qs.chunks(2) {
                                let (a, b) = (p[0], p[1]);
                                let offset = push(&mut pool, &sx[a]);
                                push(&mut pool, &sz[a]);
                                push(&mut pool, &sx[b]);
                                push(&mut pool, &sz[b]);
                                sites.push(Site {
                                    location: FaultLocation {
                                        instruction_index: i,
                                        site: FaultSite::Cnot { control: a, target: b },
                                    },
                                    offset,
                                    pair: true,
                                });
                            }
                            for p in qs.chunks(2).rev() {
                                let (a, b) = (p[0], p[1]);
                                let t = sx[b].clone();
                                sx[a].xor_assign(&t);
                                let t = sz[a].clone();
                                sz[b].xor_assign(&t);
                            }
                        }
                        Instruction::Detect(_) | Instruction::Observable { .. } => {}
                        other => panic!("{} is not supported in encoder units", other.name()),
                    }
                }
            }
        }
    }
    for q in 0..nq {
        assert!(sx[q].is_zero() && sz[q].is_zero(), "unit {} uses qubit {q} before preparing it", unit.label);
    }
    children.reverse();
    sites.reverse();
    Table {
        label: unit.label.clone(),
        outputs: n_out,
        detectors: unit.detectors.clone(),
        words,
        own_qubits: unit.own_qubits.len(),
        sites,
        children,
        pool,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CodeProfile;
    use crate::encoders::{build_encoder, EncoderVariant};
    use crate::fault::propagate_fault;
    use crate::sim::{parity, shot_rng};
    use std::collections::BTreeSet;

    /// Lifts the effect of one own fault of `u` to the root, collecting
    /// every detector it fires on the way.
    fn lifted(enc: &EncoderCircuit, ce: &CompiledEncoder, u: usize, site: usize, k: usize) -> (BTreeSet<usize>, Bits) {
        let parent_of = |c: usize| {
            ce.tables
                .iter()
                .enumerate()
                .find_map(|(p, t)| t.children.iter().find(|ch| ch.unit == c).map(|ch| (p, ch.offset)))
        };
        let t = &ce.tables[u];
        let s = &t.sites[site];
        let mut v = vec![0u64; t.words];
        if s.pair {
            let (a, b) = letters(k);
            for (bit, on) in [has_x(a), has_z(a), has_x(b), has_z(b)].into_iter().enumerate() {
                if on {
                    xor_into(&mut v, t.vector(s.offset + bit));
                }
            }
        } else {
            xor_into(&mut v, t.vector(s.offset));
        }
        let mut fired = BTreeSet::new();
        let mut cur = u;
        loop {
            let t = &ce.tables[cur];
            let (d0, d1) = t.det_range();
            fired.extend(iter_ones(&v, d0, d1).map(|i| t.detectors[i - d0]));
            match parent_of(cur) {
                None => break,
                Some((p, offset)) => {
                    let pt = &ce.tables[p];
                    let mut w = vec![0u64; pt.words];
                    for i in iter_ones(&v, 0, 2 * t.outputs) {
                        xor_into(&mut w, pt.vector(offset + i));
                    }
                    v = w;
                    cur = p;
                }
            }
        }
        let n = enc.data_qubits.len();
        (fired, Bits::from_bools(&(0..2 * n).map(|i| v[i / 64] >> (i % 64) & 1 == 1).collect::<Vec<_>>()))
    }

    #[test]
    fn tables_agree_with_forward_propagation() {
        for (p, v) in
            [("D44", EncoderVariant::Proposed), ("D64", EncoderVariant::Original), ("D46", EncoderVariant::Proposed)]
        {
            let enc = build_encoder(&p.parse::<CodeProfile>().unwrap(), v).unwrap();
            let ce = CompiledEncoder::new(&enc);
            let n = enc.data_qubits.len();
            let total_sites: usize = ce.tables.iter().map(|t| t.sites.len()).sum();
            assert_eq!(total_sites, enc.circuit.fault_locations().len());
            for (u, t) in ce.tables.iter().enumerate() {
                for (si, s) in t.sites.iter().enumerate() {
                    for (k, f) in s.location.faults().iter().enumerate() {
                        let img = propagate_fault(&enc.circuit, &s.location, f);
                        let flat: BTreeSet<usize> = (0..enc.circuit.detectors().len())
                            .filter(|&d| parity(&img.record_flips, &enc.circuit.detectors()[d]))
                            .collect();
                        let (fired, frame) = lifted(&enc, &ce, u, si, if s.pair { k + 1 } else { 0 });
                        assert_eq!(fired, flat, "{p} {v} {:?}", s.location);
                        if flat.is_empty() {
                            for q in 0..n {
                                assert_eq!(frame.get(q), img.x.get(q));
                                assert_eq!(frame.get(n + q), img.z.get(q));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_cost_is_the_census() {
        for p in ["D4", "D64", "D444", "D646"] {
            for v in EncoderVariant::ALL {
                let enc = build_encoder(&p.parse().unwrap(), v).unwrap();
                let ce = CompiledEncoder::new(&enc);
                let mut s = ce.scratch();
                let (mut x, mut z) = (Bits::zeros(ce.num_data()), Bits::zeros(ce.num_data()));
                let r = ce.prepare(0.0, 10, &mut shot_rng(1, 0), &mut s, &mut x, &mut z).unwrap();
                assert!((r.cost - enc.num_qubits() as f64).abs() < 1e-9, "{p} {v} {}", r.cost);
                assert!(x.is_zero() && z.is_zero());
            }
        }
    }

    #[test]
    fn single_pass_matches_frame_sampler_acceptance() {
        let enc = build_encoder(&"D44".parse().unwrap(), EncoderVariant::Original).unwrap();
        let ce = CompiledEncoder::new(&enc);
        let p = 0.01;
        let shots = 20_000u64;
        let mut s = ce.scratch();
        let rejected = (0..shots).filter(|&i| ce.single_pass(p, &mut shot_rng(3, i), &mut s)).count() as f64;
        let noisy = crate::noise::apply_circuit_noise(&enc.circuit, p).unwrap();
        let sampler = crate::sim::FrameSampler::new(&noisy, 4).unwrap();
        let flat = (0..shots).filter(|&i| sampler.shot(i).any_detector()).count() as f64;
        let (a, b) = (rejected / shots as f64, flat / shots as f64);
        let sigma = (a * (1.0 - a) / shots as f64 + b * (1.0 - b) / shots as f64).sqrt();
        assert!((a - b).abs() < 4.0 * sigma, "{a} vs {b}");
    }

    #[test]
    fn retries_raise_the_cost_and_aborts_are_reported() {
        let enc = build_encoder(&"D44".parse().unwrap(), EncoderVariant::Proposed).unwrap();
        let ce = CompiledEncoder::new(&enc);
        let mut s = ce.scratch();
        let (mut x, mut z) = (Bits::zeros(16), Bits::zeros(16));
        let mut total = 0.0;
        for i in 0..200 {
            total += ce.prepare(0.01, 1000, &mut shot_rng(2, i), &mut s, &mut x, &mut z).unwrap().cost;
        }
        assert!(total / 200.0 > 24.0);
        let mut s = ce.scratch();
        let aborted = ce.prepare(0.5, 3, &mut shot_rng(2, 0), &mut s, &mut x, &mut z);
        assert!(aborted.is_err());
    }
}
