//! Monte Carlo experiments: code-capacity memory, the teleported
//! logical-CNOT benchmark and retry-aware preparation cost. Also the
//! statistics shared by all of them.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::code::{Basis, CodeProfile, CodeSpec};
use crate::compiled::{CompiledEncoder, RetryCounters, Scratch};
use crate::decoder::HierarchicalDecoder;
use crate::encoders::{build_encoder, EncoderError, EncoderVariant};
use crate::noise::{for_each_event, sample_x_component, NoiseError, NoiseKind, NoiseSpec};
use crate::pauli::Bits;
use crate::sim::{shot_rng, ShotRng};

/// Shots per parallel work item. Fixed so that results do not depend on
/// the number of worker threads.
const CHUNK: u64 = 2048;

/// Transversal CNOT rounds per benchmark shot.
pub const ROUNDS: u32 = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error("the benchmark needs a level-3 code, got {0}")]
    NotLevelThree(CodeProfile),
    #[error("need at least two points with failures to fit, got {0}")]
    InsufficientPoints(usize),
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(failures: u64, shots: u64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = shots as f64;
    let p = failures as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Failure counts of one experiment point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentStats {
    pub profile: String,
    pub variant: Option<EncoderVariant>,
    pub noise: NoiseKind,
    pub p: f64,
    pub seed: u64,
    pub shots: u64,
    pub failures: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ExperimentStats {
    pub fn new(
        profile: &CodeProfile,
        variant: Option<EncoderVariant>,
        noise: NoiseSpec,
        seed: u64,
        shots: u64,
        failures: u64,
    ) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(failures, shots);
        ExperimentStats {
            profile: profile.id(),
            variant,
            noise: noise.kind,
            p: noise.p,
            seed,
            shots,
            failures,
            p_hat: if shots == 0 { 0.0 } else { failures as f64 / shots as f64 },
            ci_lo,
            ci_hi,
        }
    }

    /// Whether the 95% intervals of `self` and `other` are disjoint.
    pub fn separated_from(&self, other: &ExperimentStats) -> bool {
        self.below(other) || other.below(self)
    }

    /// Whether the 95% interval of `self` lies entirely below that of `other`.
    pub fn below(&self, other: &ExperimentStats) -> bool {
        self.ci_hi < other.ci_lo
    }
}

fn chunks(shots: u64) -> impl ParallelIterator<Item = std::ops::Range<u64>> {
    (0..shots.div_ceil(CHUNK)).into_par_iter().map(move |c| c * CHUNK..((c + 1) * CHUNK).min(shots))
}

/// One-basis readout of a code block. An error-free readout is a random
/// codeword: stabilizer supports of the other type, plus logical supports
/// when the logical values are themselves random. A shift-equivariant
/// decoder makes the codeword irrelevant, so it is then left out.
struct Readout {
    dec: HierarchicalDecoder,
    stabilizers: Vec<Bits>,
    flippers: Vec<Bits>,
    values: Vec<Bits>,
}

impl Readout {
    fn new(spec: &CodeSpec, basis: Basis) -> Self {
        let support = |p: &crate::pauli::PauliOperator| match basis {
            Basis::Z => p.x_bits().clone(),
            Basis::X => p.z_bits().clone(),
        };
        let value = |p: &crate::pauli::PauliOperator| match basis {
            Basis::Z => p.z_bits().clone(),
            Basis::X => p.x_bits().clone(),
        };
        Readout {
            dec: HierarchicalDecoder::new(&spec.profile, basis),
            stabilizers: spec.stabilizers(basis.other()).iter().map(support).collect(),
            flippers: spec.logicals(basis.other()).iter().map(support).collect(),
            values: spec.logicals(basis).iter().map(value).collect(),
        }
    }

    /// Logical errors caused by `flips` on top of a random error-free
    /// readout, or `None` if there are none. `buf` is scratch space.
    fn logical_errors(
        &self,
        flips: &Bits,
        random_logicals: bool,
        rng: &mut ShotRng,
        buf: &mut Bits,
    ) -> Option<Vec<bool>> {
        if flips.is_zero() {
            return None;
        }
        if self.dec.is_shift_equivariant() {
            let d = self.dec.decode(flips).expect("length");
            return d.any_one().then_some(d.values);
        }
        buf.clone_from(flips);
        let extra = if random_logicals { &self.flippers[..] } else { &[] };
        let mut draws = 0u64;
        for (i, g) in self.stabilizers.iter().chain(extra).enumerate() {
            if i % 64 == 0 {
                draws = rng.gen();
            }
            if draws >> (i % 64) & 1 == 1 {
                buf.xor_assign(g);
            }
        }
        let d = self.dec.decode(buf).expect("length");
        let errors: Vec<bool> =
            d.values.iter().zip(&self.values).map(|(&v, l)| v ^ l.dot(buf) ^ l.dot(flips)).collect();
        errors.iter().any(|&e| e).then_some(errors)
    }
}

/// Block-error rate of an error-free all-zero state under code-capacity
/// noise, read out and decoded in the Z basis.
pub fn memory_experiment(
    profile: &CodeProfile,
    noise: NoiseSpec,
    shots: u64,
    seed: u64,
) -> Result<ExperimentStats, ExperimentError> {
    if noise.kind == NoiseKind::Circuit {
        return Err(NoiseError::WrongKind(NoiseKind::Circuit).into());
    }
    let readout = Readout::new(&CodeSpec::build(profile), Basis::Z);
    let n = profile.num_physical();
    let failures = chunks(shots)
        .map(|range| {
            let (mut e, mut buf) = (Bits::zeros(n), Bits::zeros(n));
            let mut fails = 0u64;
            for i in range {
                let mut rng = shot_rng(seed, i);
                sample_x_component(noise, &mut rng, &mut e).expect("code-capacity kind");
                if readout.logical_errors(&e, false, &mut rng, &mut buf).is_some() {
                    fails += 1;
                }
            }
            fails
        })
        .sum();
    Ok(ExperimentStats::new(profile, None, noise, seed, shots, failures))
}

/// `p_block` from the ten-round failure probability.
pub fn p_block_from_p10(p10: f64) -> f64 {
    1.0 - (1.0 - p10).powf(1.0 / ROUNDS as f64)
}

pub fn p10_from_p_block(p_block: f64) -> f64 {
    1.0 - (1.0 - p_block).powi(ROUNDS as i32)
}

/// Per-logical-qubit rate from a block rate over `k` logical qubits.
pub fn p_cnot_from_p_block(p_block: f64, k: usize) -> f64 {
    1.0 - (1.0 - p_block).powf(1.0 / k as f64)
}

pub fn p_block_from_p_cnot(p_cnot: f64, k: usize) -> f64 {
    1.0 - (1.0 - p_cnot).powi(k as i32)
}

/// Result of the teleported logical-CNOT benchmark at one noise rate.
#[derive(Clone, Debug, Serialize)]
pub struct CnotStats {
    /// Failures within ten rounds.
    pub p10: ExperimentStats,
    pub p_block: f64,
    pub p_block_ci: (f64, f64),
    pub p_cnot: f64,
    pub p_cnot_ci: (f64, f64),
    pub num_logical: usize,
    /// Shots dropped because an ancilla preparation hit the retry cap.
    pub aborts: u64,
}

impl CnotStats {
    fn new(p10: ExperimentStats, k: usize, aborts: u64) -> Self {
        let pb = |x: f64| p_block_from_p10(x);
        let pc = |x: f64| p_cnot_from_p_block(pb(x), k);
        CnotStats {
            p_block: pb(p10.p_hat),
            p_block_ci: (pb(p10.ci_lo), pb(p10.ci_hi)),
            p_cnot: pc(p10.p_hat),
            p_cnot_ci: (pc(p10.ci_lo), pc(p10.ci_hi)),
            num_logical: k,
            aborts,
            p10,
        }
    }
}

/// Pauli frame on one code block.
#[derive(Clone, Debug)]
struct Frame {
    x: Bits,
    z: Bits,
}

impl Frame {
    fn zeros(n: usize) -> Self {
        Frame { x: Bits::zeros(n), z: Bits::zeros(n) }
    }

    fn hadamard(&mut self) {
        std::mem::swap(&mut self.x, &mut self.z);
    }
}

/// Everything a benchmark shot needs that does not change between shots.
struct Bench<'a> {
    enc: &'a CompiledEncoder,
    rz: Readout,
    rx: Readout,
    logical_x: Vec<Bits>,
    logical_z: Vec<Bits>,
    p: f64,
    cap: u64,
}

/// Noisy transversal CNOT from `c` to `t`: exact propagation, then a
/// depolarizing fault on each pair.
fn noisy_cnot(c: &mut Frame, t: &mut Frame, p: f64, rng: &mut ShotRng) {
    t.x.xor_assign(&c.x);
    c.z.xor_assign(&t.z);
    for_each_event(c.x.len(), p, rng, |q, rng| {
        let k: usize = rng.gen_range(1..16);
        let (a, b) = (k & 3, k >> 2);
        // Letters I, X, Y, Z: X part for X and Y, Z part for Y and Z.
        if a == 1 || a == 2 {
            c.x.toggle(q);
        }
        if a >= 2 {
            c.z.toggle(q);
        }
        if b == 1 || b == 2 {
            t.x.toggle(q);
        }
        if b >= 2 {
            t.z.toggle(q);
        }
    });
}

impl Bench<'_> {
    fn prepare(&self, rng: &mut ShotRng, scratch: &mut Scratch, f: &mut Frame) -> bool {
        self.enc.prepare(self.p, self.cap, rng, scratch, &mut f.x, &mut f.z).is_ok()
    }

    /// Teleports `data` through a fresh Bell pair; returns `false` if an
    /// ancilla preparation was aborted.
    fn teleport(
        &self,
        data: &mut Frame,
        [a, b]: [&mut Frame; 2],
        rng: &mut ShotRng,
        s: &mut Scratch,
        buf: &mut Bits,
    ) -> bool {
        if !self.prepare(rng, s, a) || !self.prepare(rng, s, b) {
            return false;
        }
        a.hadamard();
        noisy_cnot(a, b, self.p, rng);
        noisy_cnot(data, a, self.p, rng);
        data.hadamard();
        let n = data.x.len();
        for_each_event(n, self.p, rng, |q, _| data.x.toggle(q));
        for_each_event(n, self.p, rng, |q, _| a.x.toggle(q));
        // A wrong X-basis value on the data block leaves a logical Z on the
        // output, a wrong Z-basis value on the ancilla a logical X.
        if let Some(v) = self.rx.logical_errors(&data.x, true, rng, buf) {
            for (i, _) in v.iter().enumerate().filter(|(_, &f)| f) {
                b.z.xor_assign(&self.logical_z[i]);
            }
        }
        if let Some(v) = self.rz.logical_errors(&a.x, true, rng, buf) {
            for (i, _) in v.iter().enumerate().filter(|(_, &f)| f) {
                b.x.xor_assign(&self.logical_x[i]);
            }
        }
        std::mem::swap(data, b);
        true
    }

    /// One shot: `Some(failed)`, or `None` when aborted.
    fn shot(&self, rng: &mut ShotRng, s: &mut Scratch, frames: &mut [Frame; 4], buf: &mut Bits) -> Option<bool> {
        let [d0, d1, a, b] = frames;
        for f in [&mut *d0, &mut *d1] {
            f.x.clear();
            f.z.clear();
        }
        for _ in 0..ROUNDS {
            noisy_cnot(d0, d1, self.p, rng);
            if !self.teleport(d0, [a, b], rng, s, buf) || !self.teleport(d1, [a, b], rng, s, buf) {
                return None;
            }
        }
        // Each block is half of a Bell pair, so both readouts have random
        // logical values.
        let mut failed = false;
        for f in [&*d0, &*d1] {
            failed |= self.rz.logical_errors(&f.x, true, rng, buf).is_some();
            failed |= self.rx.logical_errors(&f.z, true, rng, buf).is_some();
        }
        Some(failed)
    }
}

/// Ten rounds of noisy transversal CNOT plus error-correcting
/// teleportation of both data blocks, starting from and ending with
/// error-free logical Bell pairs with a noiseless reference.
pub fn cnot_benchmark(
    profile: &CodeProfile,
    variant: EncoderVariant,
    p_circ: f64,
    shots: u64,
    seed: u64,
    cap: u64,
) -> Result<CnotStats, ExperimentError> {
    if profile.num_levels() != 3 {
        return Err(ExperimentError::NotLevelThree(profile.clone()));
    }
    let noise = NoiseSpec::new(NoiseKind::Circuit, p_circ)?;
    let enc = CompiledEncoder::new(&build_encoder(profile, variant)?);
    let spec = CodeSpec::build(profile);
    let bench = Bench {
        enc: &enc,
        rz: Readout::new(&spec, Basis::Z),
        rx: Readout::new(&spec, Basis::X),
        logical_x: spec.logical_x.iter().map(|l| l.x_bits().clone()).collect(),
        logical_z: spec.logical_z.iter().map(|l| l.z_bits().clone()).collect(),
        p: p_circ,
        cap,
    };
    let n = profile.num_physical();
    let (failures, aborts) = chunks(shots)
        .map(|range| {
            let mut s = enc.scratch();
            let mut frames = [Frame::zeros(n), Frame::zeros(n), Frame::zeros(n), Frame::zeros(n)];
            let mut buf = Bits::zeros(n);
            let (mut f, mut a) = (0u64, 0u64);
            for i in range {
                match bench.shot(&mut shot_rng(seed, i), &mut s, &mut frames, &mut buf) {
                    Some(true) => f += 1,
                    Some(false) => {}
                    None => a += 1,
                }
            }
            (f, a)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let p10 = ExperimentStats::new(profile, Some(variant), noise, seed, shots - aborts, failures);
    Ok(CnotStats::new(p10, spec.num_logical, aborts))
}

/// Mean physical-qubit cost of one accepted all-zero state.
#[derive(Clone, Debug, Serialize)]
pub struct RetryStats {
    pub profile: String,
    pub variant: EncoderVariant,
    pub p: f64,
    pub seed: u64,
    pub shots: u64,
    pub mean_qubit_preparations: f64,
    pub std_error: f64,
    pub census: usize,
    /// Mean attempts per invocation, by unit label.
    pub mean_attempts: BTreeMap<String, f64>,
    pub abort_count: u64,
}

/// Samples acceptance-gated preparations with unit-level retries.
pub fn retry_cost(
    profile: &CodeProfile,
    variant: EncoderVariant,
    p_circ: f64,
    shots: u64,
    seed: u64,
    cap: u64,
) -> Result<RetryStats, ExperimentError> {
    NoiseSpec::new(NoiseKind::Circuit, p_circ)?;
    let enc = CompiledEncoder::new(&build_encoder(profile, variant)?);
    let n = enc.num_data();
    let (sum, sum_sq, done, counters) = chunks(shots)
        .map(|range| {
            let mut s = enc.scratch();
            let (mut x, mut z) = (Bits::zeros(n), Bits::zeros(n));
            let (mut sum, mut sq, mut done) = (0.0, 0.0, 0u64);
            for i in range {
                if let Ok(r) = enc.prepare(p_circ, cap, &mut shot_rng(seed, i), &mut s, &mut x, &mut z) {
                    sum += r.cost;
                    sq += r.cost * r.cost;
                    done += 1;
                }
            }
            (sum, sq, done, s.counters)
        })
        .reduce(
            || (0.0, 0.0, 0, RetryCounters::default()),
            |mut a, b| {
                a.3.merge(&b.3);
                (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3)
            },
        );
    let mean = if done > 0 { sum / done as f64 } else { f64::NAN };
    let var =
        if done > 1 { (sum_sq / done as f64 - mean * mean).max(0.0) * done as f64 / (done - 1) as f64 } else { 0.0 };
    let mut per_label: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for u in 0..counters.invocations.len() {
        let e = per_label.entry(enc.label(u).to_string()).or_default();
        e.0 += counters.invocations[u];
        e.1 += counters.attempts[u];
    }
    Ok(RetryStats {
        profile: profile.id(),
        variant,
        p: p_circ,
        seed,
        shots,
        mean_qubit_preparations: mean,
        std_error: (var / done.max(1) as f64).sqrt(),
        census: enc.census(),
        mean_attempts: per_label
            .into_iter()
            .filter(|(_, (i, _))| *i > 0)
            .map(|(k, (i, a))| (k, a as f64 / i as f64))
            .collect(),
        abort_count: shots - done,
    })
}

/// Fitted power law `beta * p^alpha`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub points: Vec<(f64, f64)>,
    /// Residuals in natural-log space.
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn eval(&self, p: f64) -> f64 {
        self.beta * p.powf(self.alpha)
    }
}

/// Weighted least squares of `ln p_hat` against `ln p`. Points with a zero
/// rate or zero weight are ignored.
pub fn fit_power_law(points: &[(f64, f64, f64)]) -> Result<FitResult, ExperimentError> {
    let used: Vec<(f64, f64, f64)> =
        points.iter().copied().filter(|&(p, y, w)| p > 0.0 && y > 0.0 && w > 0.0).collect();
    if used.len() < 2 {
        return Err(ExperimentError::InsufficientPoints(used.len()));
    }
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(p, y, w) in &used {
        let (lx, ly) = (p.ln(), y.ln());
        sw += w;
        sx += w * lx;
        sy += w * ly;
        sxx += w * lx * lx;
        sxy += w * lx * ly;
    }
    let det = sw * sxx - sx * sx;
    if det.abs() <= f64::EPSILON * sw * sxx.abs() {
        return Err(ExperimentError::InsufficientPoints(1));
    }
    let alpha = (sw * sxy - sx * sy) / det;
    let ln_beta = (sy - alpha * sx) / sw;
    Ok(FitResult {
        alpha,
        beta: ln_beta.exp(),
        residuals: used.iter().map(|&(p, y, _)| y.ln() - (ln_beta + alpha * p.ln())).collect(),
        points: used.iter().map(|&(p, y, _)| (p, y)).collect(),
    })
}

/// Fits `rate(stats)` against the noise rate, weighting each point by its
/// failure count and skipping points with fewer than `min_failures`.
pub fn fit_stats<'a>(
    stats: impl IntoIterator<Item = &'a ExperimentStats>,
    min_failures: u64,
    rate: impl Fn(&ExperimentStats) -> f64,
) -> Result<FitResult, ExperimentError> {
    let pts: Vec<(f64, f64, f64)> =
        stats.into_iter().filter(|s| s.failures >= min_failures).map(|s| (s.p, rate(s), s.failures as f64)).collect();
    fit_power_law(&pts)
}

pub const DEFAULT_MIN_FAILURES: u64 = 10;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_code;
    use proptest::prelude::*;

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(0, 100);
        assert!(lo.abs() < 1e-15);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn synthetic_power_law_is_recovered() {
        let pts: Vec<(f64, f64, f64)> =
            [1e-3f64, 2e-3, 3e-3, 4e-3].iter().map(|&p| (p, 3.0 * p.powi(4), 1.0)).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.alpha - 4.0).abs() < 1e-9, "{}", f.alpha);
        assert!((f.beta - 3.0).abs() < 1e-6 * 3.0, "{}", f.beta);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-9));
        assert!(matches!(fit_power_law(&pts[..1]), Err(ExperimentError::InsufficientPoints(1))));
    }

    proptest! {
        #[test]
        fn rate_conversions_invert(p10 in 1e-9f64..0.999, k in 1usize..100) {
            let pb = p_block_from_p10(p10);
            let pc = p_cnot_from_p_block(pb, k);
            prop_assert!((p10_from_p_block(pb) - p10).abs() < 1e-12);
            prop_assert!((p_block_from_p_cnot(pc, k) - pb).abs() < 1e-12);
            prop_assert!(pc <= pb && pb <= p10);
        }

        #[test]
        fn wilson_interval_brackets(f in 0u64..1000, extra in 0u64..1000) {
            let n = f + extra + 1;
            let (lo, hi) = wilson_interval(f, n);
            let p = f as f64 / n as f64;
            prop_assert!(lo <= p + 1e-15 && p <= hi + 1e-15 && 0.0 <= lo && hi <= 1.0);
        }
    }

    #[test]
    fn noiseless_runs_never_fail() {
        let p: CodeProfile = "D64".parse().unwrap();
        let s = memory_experiment(&p, NoiseSpec::bitflip(0.0), 1000, 1).unwrap();
        assert_eq!(s.failures, 0);
        let p: CodeProfile = "D444".parse().unwrap();
        let c = cnot_benchmark(&p, EncoderVariant::Proposed, 0.0, 20, 1, 10).unwrap();
        assert_eq!(c.p10.failures, 0);
        assert_eq!(c.aborts, 0);
    }

    /// Exact block-failure probability of the Z-basis decoder by summing
    /// over every flip pattern.
    fn exhaustive_failure(profile: &CodeProfile, p: f64) -> f64 {
        let n = profile.num_physical();
        let spec = CodeSpec::build(profile);
        let dec = HierarchicalDecoder::new(profile, Basis::Z);
        let mask = |b: &Bits| b.iter_ones().fold(0u64, |m, i| m | 1 << i);
        let gens: Vec<u64> = spec.x_stabilizers.iter().map(|s| mask(s.x_bits())).collect();
        // Every error-free readout of the all-zero state, equally likely.
        let group: Vec<u64> = (0u64..1 << gens.len())
            .map(|c| gens.iter().enumerate().filter(|(i, _)| c >> i & 1 == 1).fold(0, |m, (_, g)| m ^ g))
            .collect();
        let bits = |m: u64| Bits::from_indices(n, (0..n).filter(|&i| m >> i & 1 == 1));
        (0u64..1 << n)
            .map(|m| {
                let fails = group.iter().filter(|&&s| dec.decode(&bits(m ^ s)).unwrap().any_one()).count();
                let w = m.count_ones() as i32;
                p.powi(w) * (1.0 - p).powi(n as i32 - w) * fails as f64 / group.len() as f64
            })
            .sum()
    }

    #[test]
    fn memory_matches_exhaustive_enumeration() {
        for (prof, p, shots) in [("D4", 0.1, 200_000u64), ("D44", 0.05, 200_000)] {
            let profile: CodeProfile = prof.parse().unwrap();
            let exact = exhaustive_failure(&profile, p);
            let s = memory_experiment(&profile, NoiseSpec::bitflip(p), shots, 9).unwrap();
            let sigma = (exact * (1.0 - exact) / shots as f64).sqrt();
            assert!((s.p_hat - exact).abs() < 3.0 * sigma, "{prof}: {} vs {exact}", s.p_hat);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let p: CodeProfile = "D46".parse().unwrap();
        let a = memory_experiment(&p, NoiseSpec::depolarizing(0.05), 5000, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| memory_experiment(&p, NoiseSpec::depolarizing(0.05), 5000, 3).unwrap());
        assert_eq!(a, b);
        let q: CodeProfile = "D444".parse().unwrap();
        let r1 = retry_cost(&q, EncoderVariant::Original, 2e-3, 300, 5, 1000).unwrap();
        let r2 = pool.install(|| retry_cost(&q, EncoderVariant::Original, 2e-3, 300, 5, 1000).unwrap());
        assert_eq!(r1.mean_qubit_preparations, r2.mean_qubit_preparations);
    }

    #[test]
    fn retry_cost_is_census_without_noise() {
        for v in EncoderVariant::ALL {
            let p: CodeProfile = "D644".parse().unwrap();
            let r = retry_cost(&p, v, 0.0, 10, 1, 1000).unwrap();
            assert!((r.mean_qubit_preparations - r.census as f64).abs() < 1e-9);
            assert!(r.mean_attempts.values().all(|&a| a == 1.0));
        }
    }

    #[test]
    fn benchmark_rejects_other_levels() {
        let p: CodeProfile = "D44".parse().unwrap();
        assert!(matches!(
            cnot_benchmark(&p, EncoderVariant::Original, 0.001, 1, 0, 10),
            Err(ExperimentError::NotLevelThree(_))
        ));
        let _ = build_code(&p);
    }
}
