//! Many-hypercube code construction.
//!
//! A profile `(n1, ..., nL)` with every `n_l` in {4, 6} stacks `[[n, n-2, 2]]`
//! blocks level by level. Qubits sit on an `n1 x ... x nL` lattice; the
//! linear index is row-major with the level-1 coordinate fastest. A logical
//! operator picks one pair per axis, so its support is a hypercube with two
//! coordinates on each of the `L` axes.
//!
//! Logical qubits carry a tuple `(i1, ..., iL)` with `i_l < n_l - 2`; they
//! are flattened as `i1 + (n1-2) * (i2 + (n2-2) * (...))`, so the highest
//! level index varies slowest.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::gf2::BitMatrix;
use crate::pauli::{Bits, PauliOperator};

pub const MAX_LEVELS: usize = 4;
pub const MAX_BRUTE_FORCE_QUBITS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn other(self) -> Basis {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("block size {0} is not 4 or 6")]
    BadBlockSize(usize),
    #[error("profile needs 1 to {MAX_LEVELS} levels, got {0}")]
    BadLevelCount(usize),
    #[error("cannot parse profile {0:?}")]
    Parse(String),
    #[error("brute-force distance limited to {MAX_BRUTE_FORCE_QUBITS} qubits, code has {0}")]
    TooLarge(usize),
}

/// Block sizes per level, level 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CodeProfile {
    levels: Vec<usize>,
}

impl CodeProfile {
    pub fn new(levels: &[usize]) -> Result<Self, CodeError> {
        if levels.is_empty() || levels.len() > MAX_LEVELS {
            return Err(CodeError::BadLevelCount(levels.len()));
        }
        if let Some(&bad) = levels.iter().find(|&&n| n != 4 && n != 6) {
            return Err(CodeError::BadBlockSize(bad));
        }
        Ok(CodeProfile { levels: levels.to_vec() })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Block size at `level` (1-based).
    pub fn n(&self, level: usize) -> usize {
        self.levels[level - 1]
    }

    pub fn num_physical(&self) -> usize {
        self.levels.iter().product()
    }

    pub fn num_logical(&self) -> usize {
        self.levels.iter().map(|n| n - 2).product()
    }

    pub fn distance(&self) -> usize {
        1 << self.levels.len()
    }

    /// The profile truncated to its first `levels` levels.
    pub fn prefix(&self, levels: usize) -> CodeProfile {
        CodeProfile { levels: self.levels[..levels].to_vec() }
    }

    /// Every profile with `levels` levels, in lexicographic order of
    /// `(nL, ..., n1)` reversed so that `D_{4,...}` comes first.
    pub fn all_with_levels(levels: usize) -> Vec<CodeProfile> {
        (0..1usize << levels)
            .map(|mask| {
                let ls: Vec<usize> =
                    (0..levels).map(|l| if mask >> (levels - 1 - l) & 1 == 1 { 6 } else { 4 }).collect();
                CodeProfile { levels: ls }
            })
            .collect()
    }

    /// Compact identifier such as `D644`.
    pub fn id(&self) -> String {
        let digits: String = self.levels.iter().map(|n| n.to_string()).collect();
        format!("D{digits}")
    }
}

impl fmt::Display for CodeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for CodeProfile {
    type Err = CodeError;

    /// Accepts `D644`, `D_{6,4,4}`, `6,4,4` and `644`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim().trim_start_matches(['D', 'd']).trim_start_matches('_');
        let body = body.trim_start_matches('{').trim_end_matches('}');
        let digits: Vec<usize> = if body.contains(',') {
            body.split(',')
                .map(|t| t.trim().parse().map_err(|_| CodeError::Parse(s.to_string())))
                .collect::<Result<_, _>>()?
        } else {
            body.chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| CodeError::Parse(s.to_string())))
                .collect::<Result<_, _>>()?
        };
        CodeProfile::new(&digits)
    }
}

/// 0-based qubit pairs carrying logical `i` of one `[[n, n-2, 2]]` block.
pub fn pairs(basis: Basis, n: usize) -> &'static [(usize, usize)] {
    const Z6: [(usize, usize); 4] = [(0, 1), (1, 2), (3, 4), (4, 5)];
    const X6: [(usize, usize); 4] = [(1, 2), (0, 1), (4, 5), (3, 4)];
    let all: &'static [(usize, usize)] = match basis {
        Basis::Z => &Z6,
        Basis::X => &X6,
    };
    &all[..n - 2]
}

/// Position permutation of one block that maps the Z pairing onto the X
/// pairing: each triple of positions is reversed.
pub fn block_symmetry(n: usize) -> Vec<usize> {
    match n {
        4 => vec![2, 1, 0, 3],
        6 => vec![2, 1, 0, 5, 4, 3],
        _ => panic!("block size {n}"),
    }
}

/// Selection along one lattice axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Both coordinates of a logical pair.
    Pair(usize, usize),
    /// Every coordinate.
    All,
    /// One coordinate.
    At(usize),
}

/// A complete code instance.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    pub profile: CodeProfile,
    pub num_physical: usize,
    pub num_logical: usize,
    pub distance: usize,
    /// 1-based lattice coordinates of each qubit, level-1 axis first.
    pub coords: Vec<Vec<usize>>,
    pub z_stabilizers: Vec<PauliOperator>,
    pub x_stabilizers: Vec<PauliOperator>,
    pub logical_z: Vec<PauliOperator>,
    pub logical_x: Vec<PauliOperator>,
    /// Per-level logical index tuple of each flattened logical qubit.
    pub logical_tuples: Vec<Vec<usize>>,
}

/// Flattened index of a logical tuple.
pub fn flatten_logical(profile: &CodeProfile, tuple: &[usize]) -> usize {
    tuple.iter().zip(profile.levels()).rev().fold(0, |acc, (&i, &n)| acc * (n - 2) + i)
}

/// Linear qubit index of 0-based coordinates.
pub fn qubit_index(profile: &CodeProfile, coords: &[usize]) -> usize {
    coords.iter().zip(profile.levels()).rev().fold(0, |acc, (&x, &n)| acc * n + x)
}

/// All qubits selected by one axis specification per level.
pub fn select(profile: &CodeProfile, axes: &[Axis]) -> Vec<usize> {
    let options: Vec<Vec<usize>> = axes
        .iter()
        .zip(profile.levels())
        .map(|(a, &n)| match *a {
            Axis::Pair(a, b) => vec![a, b],
            Axis::All => (0..n).collect(),
            Axis::At(x) => vec![x],
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0; options.len()];
    loop {
        let coords: Vec<usize> = idx.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        out.push(qubit_index(profile, &coords));
        let mut l = 0;
        loop {
            if l == idx.len() {
                out.sort_unstable();
                return out;
            }
            idx[l] += 1;
            if idx[l] < options[l].len() {
                break;
            }
            idx[l] = 0;
            l += 1;
        }
    }
}

/// Iterates all mixed-radix tuples with the first entry fastest.
fn tuples(radices: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = radices.iter().product();
    (0..total)
        .map(|mut k| {
            radices
                .iter()
                .map(|&r| {
                    let d = k % r;
                    k /= r;
                    d
                })
                .collect()
        })
        .collect()
}

fn operator(basis: Basis, n: usize, support: &[usize]) -> PauliOperator {
    match basis {
        Basis::Z => PauliOperator::z_on(n, support),
        Basis::X => PauliOperator::x_on(n, support),
    }
}

impl CodeSpec {
    pub fn build(profile: &CodeProfile) -> CodeSpec {
        let levels = profile.levels();
        let num_physical = profile.num_physical();
        let coords = tuples(levels).into_iter().map(|c| c.into_iter().map(|x| x + 1).collect()).collect();

        let mut stabs = [Vec::new(), Vec::new()];
        for (b, basis) in [Basis::Z, Basis::X].into_iter().enumerate() {
            for l in 0..levels.len() {
                let lower: Vec<usize> = levels[..l].iter().map(|n| n - 2).collect();
                for low in tuples(&lower) {
                    for high in tuples(&levels[l + 1..]) {
                        let mut axes: Vec<Axis> =
                            low.iter().zip(levels).map(|(&i, &n)| pair_axis(basis, n, i)).collect();
                        axes.push(Axis::All);
                        axes.extend(high.iter().map(|&x| Axis::At(x)));
                        stabs[b].push(operator(basis, num_physical, &select(profile, &axes)));
                    }
                }
            }
        }
        let [z_stabilizers, x_stabilizers] = stabs;

        let logical_tuples = tuples(&levels.iter().map(|n| n - 2).collect::<Vec<_>>());
        let logical = |basis: Basis| -> Vec<PauliOperator> {
            logical_tuples
                .iter()
                .map(|t| {
                    let axes: Vec<Axis> = t.iter().zip(levels).map(|(&i, &n)| pair_axis(basis, n, i)).collect();
                    operator(basis, num_physical, &select(profile, &axes))
                })
                .collect()
        };
        CodeSpec {
            profile: profile.clone(),
            num_physical,
            num_logical: profile.num_logical(),
            distance: profile.distance(),
            coords,
            z_stabilizers,
            x_stabilizers,
            logical_z: logical(Basis::Z),
            logical_x: logical(Basis::X),
            logical_tuples,
        }
    }

    pub fn stabilizers(&self, basis: Basis) -> &[PauliOperator] {
        match basis {
            Basis::Z => &self.z_stabilizers,
            Basis::X => &self.x_stabilizers,
        }
    }

    pub fn logicals(&self, basis: Basis) -> &[PauliOperator] {
        match basis {
            Basis::Z => &self.logical_z,
            Basis::X => &self.logical_x,
        }
    }

    /// Support bit vectors of one stabilizer type as matrix rows.
    pub fn check_matrix(&self, basis: Basis) -> BitMatrix {
        let rows = self.stabilizers(basis).iter().map(|p| support_bits(p, basis)).collect();
        BitMatrix::from_rows(self.num_physical, rows)
    }

    /// Qubit permutation exchanging the Z and X pairings on every axis.
    pub fn symmetry_permutation(&self) -> Vec<usize> {
        let perms: Vec<Vec<usize>> = self.profile.levels().iter().map(|&n| block_symmetry(n)).collect();
        self.coords
            .iter()
            .map(|c| {
                let mapped: Vec<usize> = c.iter().zip(&perms).map(|(&x, p)| p[x - 1]).collect();
                qubit_index(&self.profile, &mapped)
            })
            .collect()
    }

    pub fn to_json(&self) -> CodeJson {
        let supports = |ops: &[PauliOperator]| ops.iter().map(PauliOperator::support).collect();
        CodeJson {
            profile: self.profile.levels().to_vec(),
            name: self.profile.id(),
            n: self.num_physical,
            k: self.num_logical,
            d: self.distance,
            coordinates: self.coords.clone(),
            z_stabilizers: supports(&self.z_stabilizers),
            x_stabilizers: supports(&self.x_stabilizers),
            logical_z: supports(&self.logical_z),
            logical_x: supports(&self.logical_x),
            logical_index: self.logical_tuples.iter().map(|t| t.iter().map(|i| i + 1).collect()).collect(),
        }
    }
}

fn pair_axis(basis: Basis, n: usize, i: usize) -> Axis {
    let (a, b) = pairs(basis, n)[i];
    Axis::Pair(a, b)
}

fn support_bits(p: &PauliOperator, basis: Basis) -> Bits {
    match basis {
        Basis::Z => p.z_bits().clone(),
        Basis::X => p.x_bits().clone(),
    }
}

/// Serialized form emitted by `codegen`. Coordinates and logical indices
/// are 1-based; qubit indices in supports are 0-based.
#[derive(Clone, Debug, Serialize)]
pub struct CodeJson {
    pub profile: Vec<usize>,
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub coordinates: Vec<Vec<usize>>,
    pub z_stabilizers: Vec<Vec<usize>>,
    pub x_stabilizers: Vec<Vec<usize>>,
    pub logical_z: Vec<Vec<usize>>,
    pub logical_x: Vec<Vec<usize>>,
    pub logical_index: Vec<Vec<usize>>,
}

pub fn build_code(profile: &CodeProfile) -> CodeSpec {
    CodeSpec::build(profile)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeViolation {
    #[error("logical {basis:?}{index} has weight {weight}, support not a {levels}-dimensional hypercube")]
    NotHypercube { basis: Basis, index: usize, weight: usize, levels: usize },
    #[error("stabilizers Z{z} and X{x} anticommute")]
    StabilizersAnticommute { z: usize, x: usize },
    #[error("stabilizer rank {found}, expected N - K = {expected}")]
    Rank { found: usize, expected: usize },
    #[error("logical {basis:?}{index} anticommutes with {other_basis:?} stabilizer {stabilizer}")]
    LogicalVsStabilizer { basis: Basis, index: usize, other_basis: Basis, stabilizer: usize },
    #[error("logicals Z{z} and X{x} have the wrong commutation relation")]
    LogicalPair { z: usize, x: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub rank: usize,
    pub num_physical: usize,
    pub num_logical: usize,
    pub logical_weight: usize,
}

/// Checks the structural claims about a code instance.
pub fn verify_code(spec: &CodeSpec) -> Result<VerifyReport, CodeViolation> {
    let levels = spec.profile.num_levels();
    let weight = 1 << levels;
    for basis in [Basis::Z, Basis::X] {
        for (index, op) in spec.logicals(basis).iter().enumerate() {
            if !is_hypercube(spec, &op.support()) {
                return Err(CodeViolation::NotHypercube { basis, index, weight: op.weight(), levels });
            }
        }
    }
    let hz = spec.check_matrix(Basis::Z);
    let hx = spec.check_matrix(Basis::X);
    for (z, zr) in hz.rows().iter().enumerate() {
        if let Some(x) = hx.rows().iter().position(|xr| zr.dot(xr)) {
            return Err(CodeViolation::StabilizersAnticommute { z, x });
        }
    }
    let rank = hz.rank() + hx.rank();
    let expected = spec.num_physical - spec.num_logical;
    if rank != expected {
        return Err(CodeViolation::Rank { found: rank, expected });
    }
    for basis in [Basis::Z, Basis::X] {
        let other = spec.check_matrix(basis.other());
        for (index, op) in spec.logicals(basis).iter().enumerate() {
            let bits = support_bits(op, basis);
            if let Some(stabilizer) = other.rows().iter().position(|r| r.dot(&bits)) {
                return Err(CodeViolation::LogicalVsStabilizer {
                    basis,
                    index,
                    other_basis: basis.other(),
                    stabilizer,
                });
            }
        }
    }
    for (z, lz) in spec.logical_z.iter().enumerate() {
        for (x, lx) in spec.logical_x.iter().enumerate() {
            if lz.z_bits().dot(lx.x_bits()) != (z == x) {
                return Err(CodeViolation::LogicalPair { z, x });
            }
        }
    }
    Ok(VerifyReport { rank, num_physical: spec.num_physical, num_logical: spec.num_logical, logical_weight: weight })
}

fn is_hypercube(spec: &CodeSpec, support: &[usize]) -> bool {
    let levels = spec.profile.num_levels();
    if support.len() != 1 << levels {
        return false;
    }
    let mut axes: Vec<Vec<usize>> = vec![Vec::new(); levels];
    for &q in support {
        for (l, &x) in spec.coords[q].iter().enumerate() {
            if !axes[l].contains(&x) {
                axes[l].push(x);
            }
        }
    }
    // 2^L distinct points inside a product of 2-sets fill it completely.
    axes.iter().all(|a| a.len() == 2)
}

/// Minimum weight of a nontrivial logical operator of either type, by
/// exhaustive search in order of increasing weight.
pub fn brute_force_distance(spec: &CodeSpec) -> Result<usize, CodeError> {
    let n = spec.num_physical;
    if n > MAX_BRUTE_FORCE_QUBITS {
        return Err(CodeError::TooLarge(n));
    }
    let mask = |b: &Bits| b.iter_ones().fold(0u32, |m, i| m | 1 << i);
    let mut best = usize::MAX;
    for basis in [Basis::Z, Basis::X] {
        let checks: Vec<u32> = spec.check_matrix(basis.other()).rows().iter().map(mask).collect();
        let stab = spec.check_matrix(basis).row_reduce();
        let pivots: Vec<(u32, usize)> = (0..stab.rank).map(|r| (mask(stab.reduced.row(r)), stab.pivots[r])).collect();
        let in_stabilizer_group = |mut v: u32| {
            for &(row, p) in &pivots {
                if v >> p & 1 == 1 {
                    v ^= row;
                }
            }
            v == 0
        };
        'weights: for w in 1..=n.min(best) {
            // Gosper's hack over all w-subsets of n bits.
            let mut v: u64 = (1u64 << w) - 1;
            while v < 1u64 << n {
                let e = v as u32;
                if checks.iter().all(|c| (c & e).count_ones().is_multiple_of(2)) && !in_stabilizer_group(e) {
                    best = best.min(w);
                    break 'weights;
                }
                let c = v & v.wrapping_neg();
                let r = v + c;
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(s: &str) -> CodeProfile {
        s.parse().unwrap()
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(prof("D644").levels(), &[6, 4, 4]);
        assert_eq!(prof("D_{6,4,4}").levels(), &[6, 4, 4]);
        assert_eq!(prof("4,6").levels(), &[4, 6]);
        assert_eq!("D5".parse::<CodeProfile>(), Err(CodeError::BadBlockSize(5)));
        assert_eq!("D44444".parse::<CodeProfile>(), Err(CodeError::BadLevelCount(5)));
        assert_eq!(prof("D46").to_string(), "D46");
    }

    #[test]
    fn d4_stabilizers_and_logicals() {
        let c = build_code(&prof("D4"));
        assert_eq!(c.z_stabilizers, vec!["+ZZZZ".parse().unwrap()]);
        assert_eq!(c.x_stabilizers, vec!["+XXXX".parse().unwrap()]);
        assert_eq!(c.logical_z[0].to_string(), "+ZZ__");
        assert_eq!(c.logical_z[1].to_string(), "+_ZZ_");
        assert_eq!(c.logical_x[0].to_string(), "+_XX_");
        assert_eq!(c.logical_x[1].to_string(), "+XX__");
    }

    #[test]
    fn d6_pairs() {
        let c = build_code(&prof("D6"));
        let z: Vec<String> = c.logical_z.iter().map(|p| p.to_string()).collect();
        assert_eq!(z, ["+ZZ____", "+_ZZ___", "+___ZZ_", "+____ZZ"]);
        let x: Vec<String> = c.logical_x.iter().map(|p| p.to_string()).collect();
        assert_eq!(x, ["+_XX___", "+XX____", "+____XX", "+___XX_"]);
    }

    #[test]
    fn level_two_generators() {
        let c = build_code(&prof("D44"));
        // 4 level-1 checks plus one level-2 check per level-1 logical.
        assert_eq!(c.z_stabilizers.len(), 6);
        let sz2 = &c.z_stabilizers[4];
        assert_eq!(sz2.support(), vec![0, 1, 4, 5, 8, 9, 12, 13]);
        assert_eq!(c.logical_z[0].support(), vec![0, 1, 4, 5]);
        assert_eq!(c.logical_tuples[1], vec![1, 0]);
        assert_eq!(c.logical_z[1].support(), vec![1, 2, 5, 6]);
    }

    #[test]
    fn flattening() {
        let p = prof("D644");
        assert_eq!(flatten_logical(&p, &[3, 1, 1]), 3 + 4 * (1 + 2));
        assert_eq!(qubit_index(&p, &[5, 3, 2]), 5 + 6 * (3 + 4 * 2));
        let c = build_code(&p);
        for (k, t) in c.logical_tuples.iter().enumerate() {
            assert_eq!(flatten_logical(&p, t), k);
        }
        for (q, xs) in c.coords.iter().enumerate() {
            let zero_based: Vec<usize> = xs.iter().map(|x| x - 1).collect();
            assert_eq!(qubit_index(&p, &zero_based), q);
        }
    }

    #[test]
    fn small_codes_verify() {
        for levels in 1..=3 {
            for p in CodeProfile::all_with_levels(levels) {
                let c = build_code(&p);
                let r = verify_code(&c).unwrap();
                assert_eq!(r.rank, c.num_physical - c.num_logical, "{p}");
            }
        }
    }

    #[test]
    fn shifted_logical_breaks_the_hypercube() {
        let mut c = build_code(&prof("D44"));
        c.logical_z[0].z_bits_mut().toggle(2);
        assert!(matches!(verify_code(&c), Err(CodeViolation::NotHypercube { basis: Basis::Z, index: 0, .. })));
    }

    #[test]
    fn anticommuting_stabilizer_detected() {
        let mut c = build_code(&prof("D4"));
        c.x_stabilizers[0] = "+XXX_".parse().unwrap();
        assert_eq!(verify_code(&c), Err(CodeViolation::StabilizersAnticommute { z: 0, x: 0 }));
    }

    #[test]
    fn small_distances() {
        assert_eq!(brute_force_distance(&build_code(&prof("D4"))), Ok(2));
        assert_eq!(brute_force_distance(&build_code(&prof("D6"))), Ok(2));
        assert_eq!(brute_force_distance(&build_code(&prof("D44"))), Ok(4));
        assert_eq!(brute_force_distance(&build_code(&prof("D66"))), Err(CodeError::TooLarge(36)));
    }

    #[test]
    fn symmetry_maps_z_onto_x() {
        for p in ["D4", "D6", "D46", "D644"] {
            let c = build_code(&prof(p));
            let sigma = c.symmetry_permutation();
            let map = |op: &PauliOperator| {
                let mut s: Vec<usize> = op.support().iter().map(|&q| sigma[q]).collect();
                s.sort_unstable();
                s
            };
            for (z, x) in c.logical_z.iter().zip(&c.logical_x) {
                assert_eq!(map(z), x.support());
            }
            // Stabilizers at a fixed higher position move to the mirrored position.
            let mut mapped: Vec<Vec<usize>> = c.z_stabilizers.iter().map(map).collect();
            let mut xs: Vec<Vec<usize>> = c.x_stabilizers.iter().map(PauliOperator::support).collect();
            mapped.sort();
            xs.sort();
            assert_eq!(mapped, xs);
        }
    }

    #[test]
    fn json_shape() {
        let j = serde_json::to_value(build_code(&prof("D4")).to_json()).unwrap();
        assert_eq!(j["n"], 4);
        assert_eq!(j["k"], 2);
        assert_eq!(j["d"], 2);
        assert_eq!(j["z_stabilizers"][0], serde_json::json!([0, 1, 2, 3]));
        assert_eq!(j["coordinates"][3], serde_json::json!([4]));
    }
}
