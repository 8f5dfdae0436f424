//! Level-by-level minimum-distance decoding of one-basis readout.
//!
//! Every block passes upward the Hamming cost of its cheapest logical
//! patterns. A level-1 block passes the cost of all of them, so a level-2
//! code is decoded exactly. From level 2 upward a block keeps only the
//! patterns within a fixed margin of its best one; any other pattern is
//! charged one more than the margin. A single `[[n, n-2, 2]]` code is
//! decoded with [`column_decode`].
//!
//! The decoded values come with soft bits: a hard value and a reliability,
//! the extra Hamming cost that would be needed to flip that value.

use thiserror::Error;

use crate::code::{block_symmetry, pairs, Basis, CodeProfile, CodeSpec};
use crate::gf2::BitMatrix;
use crate::pauli::Bits;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct SoftBit {
    pub value: bool,
    pub reliability: u32,
}

impl SoftBit {
    pub fn new(value: bool, reliability: u32) -> Self {
        SoftBit { value, reliability }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("expected {expected} readout bits, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("readout code dimension {dimension} on {qubits} qubits exceeds the oracle limit")]
    OracleTooLarge { dimension: usize, qubits: usize },
}

/// One column of an `[[n, n-2, 2]]` readout.
#[derive(Clone, Copy, Debug)]
pub struct ColumnInput<'a> {
    pub bits: &'a [SoftBit],
    pub pairs: &'a [(usize, usize)],
    /// Tie-break priority of each position; lower wins.
    pub priority: &'a [usize],
}

/// Decoded column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnOutput {
    pub logicals: Vec<SoftBit>,
    pub corrected: Vec<bool>,
}

/// Tie-break priorities for `basis`. In the X basis they follow the
/// Z-to-X block symmetry so that the two bases decode mirrored inputs
/// identically.
pub fn priorities(basis: Basis, n: usize) -> Vec<usize> {
    match basis {
        Basis::Z => (0..n).collect(),
        Basis::X => block_symmetry(n),
    }
}

/// Minimum-cost even-parity correction of one column.
///
/// With even input parity nothing is flipped, and logical `i` costs the
/// cheapest bit of its pair plus the cheapest bit outside it. With odd
/// parity the cheapest bit `j` is flipped; a logical whose pair holds `j`
/// flips next by trading `j` for the cheapest bit outside the pair, any
/// other logical by trading `j` for the cheaper of its own pair.
pub fn column_decode(input: ColumnInput<'_>) -> ColumnOutput {
    let mut logicals = vec![SoftBit::default(); input.pairs.len()];
    let mut corrected = vec![false; input.bits.len()];
    column_decode_into(input, &mut logicals, &mut corrected);
    ColumnOutput { logicals, corrected }
}

fn column_decode_into(input: ColumnInput<'_>, out: &mut [SoftBit], corrected: &mut [bool]) {
    let bits = input.bits;
    let n = bits.len();
    let mut odd = false;
    for (c, b) in corrected.iter_mut().zip(bits) {
        *c = b.value;
        odd ^= b.value;
    }
    let flipped = if odd {
        let mut j = 0;
        for k in 1..n {
            let (rk, rj) = (bits[k].reliability, bits[j].reliability);
            if rk < rj || (rk == rj && input.priority[k] < input.priority[j]) {
                j = k;
            }
        }
        corrected[j] = !corrected[j];
        Some(j)
    } else {
        None
    };
    for (o, &(a, b)) in out.iter_mut().zip(input.pairs) {
        let in_pair = bits[a].reliability.min(bits[b].reliability);
        let outside = (0..n).filter(|&k| k != a && k != b).map(|k| bits[k].reliability).min().unwrap();
        let reliability = match flipped {
            None => in_pair + outside,
            Some(j) if j == a || j == b => outside - bits[j].reliability,
            Some(j) => in_pair - bits[j].reliability,
        };
        *o = SoftBit { value: corrected[a] ^ corrected[b], reliability };
    }
}

/// Hierarchical decoder for one code profile and basis.
#[derive(Clone, Debug)]
pub struct HierarchicalDecoder {
    profile: CodeProfile,
    basis: Basis,
    pairs: Vec<Vec<(usize, usize)>>,
    priority: Vec<Vec<usize>>,
    /// Level-1 cost of every logical pattern, indexed by readout word.
    base_costs: Vec<Vec<u32>>,
    /// Level-1 codewords with their logical patterns, in tie-break order.
    base_words: Vec<(usize, usize)>,
    /// Level-2 output of an error-free level-2 block.
    clean: Vec<SoftBit>,
    margin: u32,
    /// Every pattern of a level-1 block, cheapest first, indexed by readout word.
    base_lists: Vec<CostList>,
    /// Output of an error-free block at each level from 2 upward.
    clean_lists: Vec<CostList>,
}

/// Default margin kept by the list messages above level 1.
pub const DEFAULT_MARGIN: u32 = 2;

/// Logical pattern of a block, bit `j` for logical `j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Pattern([u64; 4]);

impl Pattern {
    fn small(v: usize) -> Self {
        Pattern([v as u64, 0, 0, 0])
    }

    fn xor(self, o: Pattern) -> Pattern {
        let mut w = self.0;
        for (a, b) in w.iter_mut().zip(o.0) {
            *a ^= b;
        }
        Pattern(w)
    }

    fn bit(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    /// Copies the `k` low bits of `src` to offset `k * i`. `k` is a power of two.
    fn place(&mut self, src: Pattern, k: usize, i: usize) {
        let at = k * i;
        if k < 64 {
            self.0[at / 64] |= src.0[0] << (at % 64);
        } else {
            for w in 0..k / 64 {
                self.0[at / 64 + w] = src.0[w];
            }
        }
    }
}

/// Cheapest logical patterns of one block.
#[derive(Clone, Debug)]
struct CostList {
    /// Sorted by cost.
    items: Vec<(Pattern, u32)>,
    /// The same patterns sorted for lookup.
    by_pattern: Vec<(Pattern, u32)>,
    /// Cost charged for a pattern missing from the list.
    floor: u32,
    /// Logical pattern read directly off the uncorrected readout.
    raw: Pattern,
}

impl CostList {
    fn new(mut items: Vec<(Pattern, u32)>, floor: u32, raw: Pattern) -> Self {
        items.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        items.dedup_by_key(|e| e.0);
        let by_pattern = items.clone();
        items.sort_by_key(|e| e.1);
        CostList { items, by_pattern, floor, raw }
    }

    fn best(&self) -> u32 {
        self.items[0].1
    }

    fn cost(&self, u: &Pattern) -> u32 {
        match self.by_pattern.binary_search_by(|e| e.0.cmp(u)) {
            Ok(i) => self.by_pattern[i].1,
            Err(_) => self.floor,
        }
    }
}

/// Search state for combining the lists of the blocks of one higher-level block.
struct Combine<'a> {
    subs: &'a [&'a CostList],
    pairs: &'a [(usize, usize)],
    k: usize,
    margin: u32,
    /// Least total cost of the blocks from each index on.
    suffix: Vec<u32>,
    choice: Vec<Pattern>,
    best: u32,
    out: Vec<(Pattern, u32)>,
}

impl Combine<'_> {
    fn compose(&self, parts: &[Pattern]) -> Pattern {
        let mut u = Pattern::default();
        for (i, &(a, b)) in self.pairs.iter().enumerate() {
            u.place(parts[a].xor(parts[b]), self.k, i);
        }
        u
    }

    fn search(&mut self, x: usize, parity: Pattern, spent: u32) {
        let last = self.subs.len() - 1;
        if x == last {
            let total = spent + self.subs[x].cost(&parity);
            if total > self.best.saturating_add(self.margin) {
                return;
            }
            self.best = self.best.min(total);
            self.choice[x] = parity;
            let u = self.compose(&self.choice);
            self.out.push((u, total));
            return;
        }
        let subs = self.subs;
        for &(u, c) in &subs[x].items {
            if spent + c + self.suffix[x + 1] > self.best.saturating_add(self.margin) {
                break;
            }
            self.choice[x] = u;
            self.search(x + 1, parity.xor(u), spent + c);
        }
    }
}

/// List of every pattern of the combined block within `margin` of the best.
fn combine(subs: &[&CostList], pairs: &[(usize, usize)], k: usize, margin: u32) -> CostList {
    let n = subs.len();
    let mut suffix = vec![0; n + 1];
    for x in (0..n).rev() {
        suffix[x] = suffix[x + 1] + subs[x].best();
    }
    let mut st = Combine {
        subs,
        pairs,
        k,
        margin,
        suffix,
        choice: vec![Pattern::default(); n],
        best: u32::MAX,
        out: Vec::new(),
    };
    st.search(0, Pattern::default(), 0);
    let best = st.best;
    let raws: Vec<Pattern> = subs.iter().map(|s| s.raw).collect();
    let raw = st.compose(&raws);
    let mut items = st.out;
    items.retain(|e| e.1 <= best + margin);
    CostList::new(items, best + margin + 1, raw)
}

/// Decoded logical values with their reliabilities, in the canonical
/// logical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub values: Vec<bool>,
    pub reliabilities: Vec<u32>,
}

impl Decoded {
    pub fn any_one(&self) -> bool {
        self.values.iter().any(|&v| v)
    }
}

impl HierarchicalDecoder {
    pub fn new(profile: &CodeProfile, basis: Basis) -> Self {
        let levels = profile.levels();
        let mut dec = HierarchicalDecoder {
            profile: profile.clone(),
            basis,
            pairs: levels.iter().map(|&n| pairs(basis, n).to_vec()).collect(),
            priority: levels.iter().map(|&n| priorities(basis, n)).collect(),
            base_costs: pattern_costs(pairs(basis, levels[0])),
            base_words: ordered_codewords(pairs(basis, levels[0]), &priorities(basis, levels[0])),
            clean: Vec::new(),
            margin: DEFAULT_MARGIN,
            base_lists: Vec::new(),
            clean_lists: Vec::new(),
        };
        let logical = |w: usize| {
            pairs(basis, levels[0]).iter().enumerate().fold(0, |u, (i, &(a, b))| u | ((w >> a ^ w >> b) & 1) << i)
        };
        dec.base_lists = dec
            .base_costs
            .iter()
            .enumerate()
            .map(|(w, costs)| {
                let items = costs.iter().enumerate().map(|(u, &c)| (Pattern::small(u), c)).collect();
                CostList::new(items, u32::MAX / 4, Pattern::small(logical(w)))
            })
            .collect();
        dec.rebuild_clean_lists();
        if levels.len() >= 2 {
            let zero = vec![0; levels[1]];
            let mut clean = vec![SoftBit::default(); (levels[0] - 2) * (levels[1] - 2)];
            dec.joint_block(&zero, &mut clean);
            dec.clean = clean;
        }
        dec
    }

    /// Exact minimum-distance decoding of one level-2 block from the
    /// readout words of its level-1 blocks. Ties go to the codeword that
    /// comes first in priority order, as in [`MlOracle`].
    /// `out[j + k1 * i]` receives level-2 logical `i` of level-1 index `j`.
    fn joint_block(&self, words: &[usize], out: &mut [SoftBit]) {
        const INF: u32 = u32::MAX / 4;
        let costs: Vec<&[u32]> = words.iter().map(|&w| &self.base_costs[w][..]).collect();
        let n2 = costs.len();
        let patterns = costs[0].len();
        let k1 = patterns.trailing_zeros() as usize;
        let mut order: Vec<usize> = (0..n2).collect();
        order.sort_unstable_by_key(|&x| self.priority[1][x]);
        // Cheapest completion from step t onwards, given the column parities so far.
        let mut tail = vec![INF; (n2 + 1) * patterns];
        tail[n2 * patterns] = 0;
        for t in (0..n2).rev() {
            let c = costs[order[t]];
            for s in 0..patterns {
                tail[t * patterns + s] =
                    (0..patterns).map(|d| c[d] + tail[(t + 1) * patterns + (s ^ d)]).min().unwrap();
            }
        }
        let best = tail[0];
        let mut chosen = vec![0usize; n2];
        let mut s = 0;
        let mut spent = 0;
        for (t, &x) in order.iter().enumerate() {
            let (cost, d) = self
                .base_words
                .iter()
                .map(|&(c, d)| ((words[x] ^ c).count_ones(), d))
                .find(|&(cost, d)| spent + cost + tail[(t + 1) * patterns + (s ^ d)] == best)
                .expect("optimal step exists");
            chosen[x] = d;
            spent += cost;
            s ^= d;
        }
        // Per pair: cheapest assignment of the other blocks for every
        // parity, then both blocks of the pair explicitly.
        let mut rest = vec![INF; patterns];
        let mut next = vec![INF; patterns];
        let mut alt = vec![[INF; 2]; k1];
        for (i, &(a, b)) in self.pairs[1].iter().enumerate() {
            rest.fill(INF);
            rest[0] = 0;
            for (x, c) in costs.iter().enumerate() {
                if x == a || x == b {
                    continue;
                }
                next.fill(INF);
                for (s, &r) in rest.iter().enumerate() {
                    if r == INF {
                        continue;
                    }
                    for (d, &cd) in c.iter().enumerate() {
                        let slot = &mut next[s ^ d];
                        *slot = (*slot).min(r + cd);
                    }
                }
                std::mem::swap(&mut rest, &mut next);
            }
            alt.fill([INF; 2]);
            for (da, &ca) in costs[a].iter().enumerate() {
                for (db, &cb) in costs[b].iter().enumerate() {
                    let d = da ^ db;
                    let total = ca + cb + rest[d];
                    for (j, m) in alt.iter_mut().enumerate() {
                        let slot = &mut m[d >> j & 1];
                        *slot = (*slot).min(total);
                    }
                }
            }
            let flips = chosen[a] ^ chosen[b];
            for (j, m) in alt.iter().enumerate() {
                let flip = flips >> j & 1;
                out[j + k1 * i] = SoftBit::new(flip == 1, m[1 - flip] - best);
            }
        }
    }

    /// Sets the margin kept by the list messages of codes with three or
    /// more levels.
    pub fn with_margin(mut self, margin: u32) -> Self {
        self.margin = margin;
        self.rebuild_clean_lists();
        self
    }

    /// True when adding a readout codeword to the input always shifts the
    /// decoded values by that codeword's logical values, ties included.
    pub fn is_shift_equivariant(&self) -> bool {
        self.profile.levels().len() >= 3
    }

    pub fn margin(&self) -> u32 {
        self.margin
    }

    fn rebuild_clean_lists(&mut self) {
        let levels = self.profile.levels();
        let mut lists = Vec::new();
        let mut k = levels[0] - 2;
        for l in 1..levels.len() {
            let sub = if l == 1 { &self.base_lists[0] } else { &lists[l - 2] };
            let subs = vec![sub; levels[l]];
            let next = combine(&subs, &self.pairs[l], k, self.margin);
            lists.push(next);
            k *= levels[l] - 2;
        }
        self.clean_lists = lists;
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn num_physical(&self) -> usize {
        self.profile.num_physical()
    }

    pub fn decode(&self, bits: &Bits) -> Result<Decoded, DecodeError> {
        let n = self.num_physical();
        if bits.len() != n {
            return Err(DecodeError::LengthMismatch { expected: n, found: bits.len() });
        }
        let levels = self.profile.levels();
        if levels.len() >= 3 {
            return Ok(self.decode_lists(bits));
        }
        let (mut cur, mut k_prev, first) = if levels.len() >= 2 {
            (self.decode_base(bits), (levels[0] - 2) * (levels[1] - 2), 2)
        } else {
            ((0..n).map(|q| SoftBit::new(bits.get(q), 1)).collect(), 1, 0)
        };
        let mut next = Vec::with_capacity(n);
        let mut column = [SoftBit::default(); 6];
        let mut outs = [SoftBit::default(); 4];
        let mut scratch = [false; 6];
        let mut positions = n / levels[..first].iter().product::<usize>();
        for (l, &nl) in levels.iter().enumerate().skip(first) {
            positions /= nl;
            let k_new = k_prev * (nl - 2);
            next.clear();
            next.resize(k_new * positions, SoftBit::default());
            for h in 0..positions {
                for k in 0..k_prev {
                    for (x, slot) in column[..nl].iter_mut().enumerate() {
                        *slot = cur[k + k_prev * (x + nl * h)];
                    }
                    let input = ColumnInput { bits: &column[..nl], pairs: &self.pairs[l], priority: &self.priority[l] };
                    column_decode_into(input, &mut outs[..nl - 2], &mut scratch[..nl]);
                    for (i, o) in outs[..nl - 2].iter().enumerate() {
                        next[k + k_prev * i + k_new * h] = *o;
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
            k_prev = k_new;
        }
        Ok(Decoded {
            values: cur.iter().map(|s| s.value).collect(),
            reliabilities: cur.iter().map(|s| s.reliability).collect(),
        })
    }
}

impl HierarchicalDecoder {
    /// Level-2 soft bits of every level-2 block.
    fn decode_base(&self, bits: &Bits) -> Vec<SoftBit> {
        let levels = self.profile.levels();
        let (n1, n2) = (levels[0], levels[1]);
        let per_block = (n1 - 2) * (n2 - 2);
        let blocks = bits.len() / (n1 * n2);
        let mut out = vec![SoftBit::default(); per_block * blocks];
        let mut words = vec![0usize; n2];
        for h in 0..blocks {
            for (x, w) in words.iter_mut().enumerate() {
                let start = n1 * (x + n2 * h);
                *w = (0..n1).fold(0usize, |w, i| w | usize::from(bits.get(start + i)) << i);
            }
            let dst = &mut out[per_block * h..per_block * (h + 1)];
            if words.iter().all(|&w| w == 0) {
                dst.copy_from_slice(&self.clean);
            } else {
                self.joint_block(&words, dst);
            }
        }
        out
    }
}

impl HierarchicalDecoder {
    /// Decoding with list messages. Among the cheapest top-level patterns
    /// the one closest to the raw readout pattern wins, first in pattern
    /// order; the choice then depends on the error alone.
    fn decode_lists(&self, bits: &Bits) -> Decoded {
        let levels = self.profile.levels();
        let n1 = levels[0];
        // `None` marks an error-free block.
        let mut cur: Vec<Option<CostList>> = Vec::new();
        let mut words: Vec<usize> = (0..bits.len() / n1)
            .map(|b| (0..n1).fold(0usize, |w, i| w | usize::from(bits.get(b * n1 + i)) << i))
            .collect();
        let mut k = n1 - 2;
        for (l, &nl) in levels.iter().enumerate().skip(1) {
            let next: Vec<Option<CostList>> = if l == 1 {
                words
                    .chunks(nl)
                    .map(|ws| {
                        if ws.iter().all(|&w| w == 0) {
                            return None;
                        }
                        let subs: Vec<&CostList> = ws.iter().map(|&w| &self.base_lists[w]).collect();
                        Some(combine(&subs, &self.pairs[l], k, self.margin))
                    })
                    .collect()
            } else {
                cur.chunks(nl)
                    .map(|bs| {
                        if bs.iter().all(Option::is_none) {
                            return None;
                        }
                        let subs: Vec<&CostList> =
                            bs.iter().map(|b| b.as_ref().unwrap_or(&self.clean_lists[l - 2])).collect();
                        Some(combine(&subs, &self.pairs[l], k, self.margin))
                    })
                    .collect()
            };
            cur = next;
            k *= nl - 2;
        }
        words.clear();
        let top = cur.pop().flatten();
        let top = top.as_ref().unwrap_or(self.clean_lists.last().expect("three or more levels"));
        let best = top.best();
        let chosen = top
            .items
            .iter()
            .take_while(|e| e.1 == best)
            .map(|e| e.0)
            .min_by_key(|u| u.xor(top.raw))
            .expect("nonempty list");
        let mut reliabilities = vec![None; k];
        let mut open = k;
        for &(u, c) in &top.items {
            if open == 0 {
                break;
            }
            let d = u.xor(chosen);
            for (j, r) in reliabilities.iter_mut().enumerate() {
                if r.is_none() && d.bit(j) {
                    *r = Some(c - best);
                    open -= 1;
                }
            }
        }
        Decoded {
            values: (0..k).map(|j| chosen.bit(j)).collect(),
            reliabilities: reliabilities.into_iter().map(|r| r.unwrap_or(top.floor - best)).collect(),
        }
    }
}

/// For every readout word of one block, the Hamming distance to the
/// nearest codeword carrying each logical pattern.
fn pattern_costs(pairs: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let n = pairs.len() + 2;
    let logical = |c: usize| pairs.iter().enumerate().fold(0, |u, (i, &(a, b))| u | ((c >> a ^ c >> b) & 1) << i);
    (0..1usize << n)
        .map(|w| {
            let mut cost = vec![u32::MAX; 1 << pairs.len()];
            for c in (0..1usize << n).filter(|c| c.count_ones() % 2 == 0) {
                let d = (w ^ c).count_ones();
                let slot = &mut cost[logical(c)];
                *slot = (*slot).min(d);
            }
            cost
        })
        .collect()
}

/// Even-parity words of one block with their logical patterns, ordered as
/// bit strings read in priority order.
fn ordered_codewords(pairs: &[(usize, usize)], priority: &[usize]) -> Vec<(usize, usize)> {
    let n = priority.len();
    let key = |c: usize| (0..n).filter(|&k| c >> k & 1 == 1).map(|k| 1usize << (n - 1 - priority[k])).sum::<usize>();
    let logical = |c: usize| pairs.iter().enumerate().fold(0, |u, (i, &(a, b))| u | ((c >> a ^ c >> b) & 1) << i);
    let mut words: Vec<usize> = (0..1usize << n).filter(|c| c.count_ones() % 2 == 0).collect();
    words.sort_unstable_by_key(|&c| key(c));
    words.into_iter().map(|c| (c, logical(c))).collect()
}

pub fn hierarchical_decode(spec: &CodeSpec, bits: &Bits, basis: Basis) -> Result<Decoded, DecodeError> {
    HierarchicalDecoder::new(&spec.profile, basis).decode(bits)
}

pub const ORACLE_MAX_DIMENSION: usize = 16;

/// Exact nearest-codeword decoder over the classical readout code.
#[derive(Clone, Debug)]
pub struct MlOracle {
    n: usize,
    codewords: Vec<u64>,
    logicals: Vec<u64>,
}

fn to_mask(b: &Bits) -> u64 {
    b.iter_ones().fold(0, |m, i| m | 1 << i)
}

impl MlOracle {
    pub fn new(spec: &CodeSpec, basis: Basis) -> Result<Self, DecodeError> {
        let n = spec.num_physical;
        let checks = spec.check_matrix(basis);
        let basis_vectors = checks.null_space();
        if basis_vectors.len() > ORACLE_MAX_DIMENSION || n > 64 {
            return Err(DecodeError::OracleTooLarge { dimension: basis_vectors.len(), qubits: n });
        }
        let gens: Vec<u64> = basis_vectors.iter().map(to_mask).collect();
        let mut codewords = Vec::with_capacity(1 << gens.len());
        let mut c = 0u64;
        codewords.push(c);
        for step in 1u64..1 << gens.len() {
            c ^= gens[step.trailing_zeros() as usize];
            codewords.push(c);
        }
        let rank = reading_order(&spec.profile, basis);
        codewords.sort_unstable_by_key(|&c| {
            (0..n).filter(|&q| c >> q & 1 == 1).map(|q| 1u64 << (n - 1 - rank[q])).sum::<u64>()
        });
        let logicals = spec
            .logicals(basis)
            .iter()
            .map(|p| match basis {
                Basis::Z => to_mask(p.z_bits()),
                Basis::X => to_mask(p.x_bits()),
            })
            .collect();
        Ok(MlOracle { n, codewords, logicals })
    }

    pub fn dimension(&self) -> usize {
        self.codewords.len().trailing_zeros() as usize
    }

    /// Nearest codeword; ties go to the lexicographically smallest bit
    /// string, read from qubit 0 in the Z basis and in mirrored order in the
    /// X basis.
    pub fn nearest(&self, bits: &Bits) -> Result<u64, DecodeError> {
        if bits.len() != self.n {
            return Err(DecodeError::LengthMismatch { expected: self.n, found: bits.len() });
        }
        let v = to_mask(bits);
        Ok(*self.codewords.iter().min_by_key(|&&c| (c ^ v).count_ones()).expect("code contains zero"))
    }

    pub fn decode(&self, bits: &Bits) -> Result<Vec<bool>, DecodeError> {
        let c = self.nearest(bits)?;
        Ok(self.logicals.iter().map(|l| (l & c).count_ones() % 2 == 1).collect())
    }
}

/// Position of each qubit when a readout is read as a bit string. The X
/// basis reads every block in mirrored order.
fn reading_order(profile: &CodeProfile, basis: Basis) -> Vec<usize> {
    let n = profile.num_physical();
    if basis == Basis::Z {
        return (0..n).collect();
    }
    let maps: Vec<Vec<usize>> = profile.levels().iter().map(|&m| block_symmetry(m)).collect();
    (0..n)
        .map(|q| {
            let (mut rest, mut stride, mut out) = (q, 1, 0);
            for (m, map) in profile.levels().iter().zip(&maps) {
                out += map[rest % m] * stride;
                rest /= m;
                stride *= m;
            }
            out
        })
        .collect()
}

pub fn ml_oracle_decode(spec: &CodeSpec, bits: &Bits, basis: Basis) -> Result<Vec<bool>, DecodeError> {
    MlOracle::new(spec, basis)?.decode(bits)
}

/// Dimension of the readout code of `spec` in `basis`.
pub fn readout_dimension(spec: &CodeSpec, basis: Basis) -> usize {
    let m: BitMatrix = spec.check_matrix(basis);
    spec.num_physical - m.rank()
}
