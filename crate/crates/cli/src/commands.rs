use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use mhc::code::{brute_force_distance, build_code, verify_code, Basis, CodeProfile, MAX_BRUTE_FORCE_QUBITS};
use mhc::decoder::{HierarchicalDecoder, MlOracle};
use mhc::encoders::{build_encoder, check_noiseless, EncoderVariant};
use mhc::experiments::{
    cnot_benchmark, fit_power_law, memory_experiment, retry_cost, ExperimentStats, DEFAULT_MIN_FAILURES,
};
use mhc::noise::{NoiseKind, NoiseSpec};
use mhc::pauli::Bits;

use crate::config::{
    CnotOptions, CodegenOptions, DecodeOptions, EncodeOptions, FitOptions, MemoryOptions, OverheadOptions,
};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_CAP: u64 = 1000;

/// What a command produced, and the acceptance properties it broke.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub violations: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    seed: u64,
    versions: BTreeMap<&'static str, &'static str>,
    config: &'a C,
    outputs: &'a [PathBuf],
    rows: usize,
}

/// Fit points `(p, rate, failures)` keyed by profile and variant.
type FitGroups = BTreeMap<(String, String), Vec<(f64, f64, f64)>>;

fn write_manifest<C: Serialize>(
    path: &Path,
    command: &str,
    seed: u64,
    config: &C,
    outputs: &[PathBuf],
    rows: usize,
) -> Result<()> {
    let versions = BTreeMap::from([("mhc", mhc::VERSION), ("mhc-cli", env!("CARGO_PKG_VERSION"))]);
    let m = Manifest { command, seed, versions, config, outputs, rows };
    fs::write(path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn manifest_path(out: &Option<PathBuf>, manifest: &Option<PathBuf>) -> Option<PathBuf> {
    manifest.clone().or_else(|| out.as_ref().map(|o| o.with_extension("manifest.json")))
}

fn write_csv<T: Serialize>(out: &Option<PathBuf>, rows: &[T]) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn profile(s: &Option<String>) -> Result<CodeProfile> {
    s.as_deref().ok_or_else(|| anyhow!("--profile is required"))?.parse().map_err(|e| anyhow!("{e}"))
}

fn profiles(list: &Option<Vec<String>>, default: impl FnOnce() -> Vec<CodeProfile>) -> Result<Vec<CodeProfile>> {
    match list {
        Some(v) if !v.is_empty() => v.iter().map(|s| s.parse().map_err(|e| anyhow!("{e}"))).collect(),
        _ => Ok(default()),
    }
}

fn variants(list: &Option<Vec<String>>) -> Result<Vec<EncoderVariant>> {
    match list {
        Some(v) if !v.is_empty() => v.iter().map(|s| s.parse().map_err(|e| anyhow!("{e}"))).collect(),
        _ => Ok(EncoderVariant::ALL.to_vec()),
    }
}

fn rates(list: &Option<Vec<f64>>, name: &str) -> Result<Vec<f64>> {
    match list {
        Some(v) if !v.is_empty() => Ok(v.clone()),
        _ => bail!("--{name} is required"),
    }
}

fn circuit_noise(noise: &Option<String>) -> Result<()> {
    match noise.as_deref().map(str::parse::<NoiseKind>) {
        None | Some(Ok(NoiseKind::Circuit)) => Ok(()),
        Some(Ok(k)) => bail!("this command simulates circuit noise, not {k}"),
        Some(Err(e)) => Err(e.into()),
    }
}

pub fn codegen(o: &CodegenOptions, self_test: bool) -> Result<Outcome> {
    let prof = profile(&o.profile)?;
    let spec = build_code(&prof);
    write_text(&o.out, &(serde_json::to_string_pretty(&spec.to_json())? + "\n"))?;
    let mut out = Outcome { outputs: o.out.iter().cloned().collect(), ..Default::default() };
    if self_test {
        if let Err(e) = verify_code(&spec) {
            out.violations.push(format!("{prof}: {e}"));
        }
        let expect = (prof.num_physical(), prof.num_logical(), prof.distance());
        if (spec.num_physical, spec.num_logical, spec.distance) != expect {
            out.violations.push(format!("{prof}: parameters differ from the closed forms {expect:?}"));
        }
        if spec.num_physical <= MAX_BRUTE_FORCE_QUBITS {
            let d = brute_force_distance(&spec)?;
            if d != spec.distance {
                out.violations.push(format!("{prof}: brute-force distance {d}, expected {}", spec.distance));
            }
        }
    }
    Ok(out)
}

pub fn encode(o: &EncodeOptions, self_test: bool) -> Result<Outcome> {
    let prof = profile(&o.profile)?;
    let variant: EncoderVariant = o.variant.as_deref().unwrap_or("proposed").parse()?;
    let enc = build_encoder(&prof, variant)?;
    let census = enc.census();
    let dir = o.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let stem = format!("{}_{}", prof.id(), variant);
    let circuit_path = dir.join(format!("{stem}.circuit"));
    let census_path = dir.join(format!("{stem}.census.json"));
    fs::write(&circuit_path, enc.circuit.serialize())?;
    let json = serde_json::to_string_pretty(&census)? + "\n";
    fs::write(&census_path, &json)?;
    print!("{json}");
    let mut out = Outcome { outputs: vec![circuit_path, census_path], ..Default::default() };
    if self_test {
        if census.total != census.formula_total {
            out.violations
                .push(format!("{stem}: census {} differs from formula {}", census.total, census.formula_total));
        }
        if let Err(e) = check_noiseless(&enc, DEFAULT_SEED) {
            out.violations.push(format!("{stem}: noiseless run: {e}"));
        }
    }
    Ok(out)
}

/// Ordering claims on the memory experiment, checked when a run covers
/// every profile they mention.
const ORDERINGS: &[(&str, f64, &[&str])] = &[("level-2 order", 0.01, &["D44", "D64", "D46", "D66"])];

fn memory_violations(rows: &[ExperimentStats]) -> Vec<String> {
    let mut v = Vec::new();
    for r in rows {
        if !(0.0..=1.0).contains(&r.p_hat) || r.ci_lo > r.p_hat || r.p_hat > r.ci_hi {
            v.push(format!("{} p={}: inconsistent estimate", r.profile, r.p));
        }
        if r.p == 0.0 && r.failures > 0 {
            v.push(format!("{} p=0: {} failures", r.profile, r.failures));
        }
    }
    let find = |name: &str, p: f64| rows.iter().find(|r| r.profile == name && r.p == p);
    for &(label, p, chain) in ORDERINGS {
        let found: Option<Vec<&ExperimentStats>> = chain.iter().map(|c| find(c, p)).collect();
        if let Some(f) = found {
            for w in f.windows(2) {
                if !w[0].below(w[1]) {
                    v.push(format!("{label} at p={p}: {} is not separated below {}", w[0].profile, w[1].profile));
                }
            }
        }
    }
    for (level, p, best, worst) in [(3, 0.01, Some("D644"), None), (4, 0.02, Some("D6644"), Some("D4466"))] {
        let all: Vec<String> = CodeProfile::all_with_levels(level).iter().map(|c| c.id()).collect();
        let found: Option<Vec<&ExperimentStats>> = all.iter().map(|c| find(c, p)).collect();
        let Some(f) = found else { continue };
        let mut check = |name: &str, lowest: bool| {
            let me = f.iter().find(|r| r.profile == name).expect("listed");
            for r in f.iter().filter(|r| r.profile != name) {
                let ok = if lowest { me.ci_hi < r.ci_lo } else { r.ci_hi < me.ci_lo };
                if !ok {
                    let what = if lowest { "minimum" } else { "maximum" };
                    v.push(format!("level-{level} {what} at p={p}: {name} is not separated from {}", r.profile));
                }
            }
        };
        if let Some(b) = best {
            check(b, true);
        }
        if let Some(w) = worst {
            check(w, false);
        }
    }
    v
}

pub fn simulate_memory(o: &MemoryOptions, self_test: bool) -> Result<Outcome> {
    let kind: NoiseKind = o.noise.as_deref().unwrap_or("bitflip").parse()?;
    if kind == NoiseKind::Circuit {
        bail!("simulate-memory takes bitflip or depolarizing noise; use simulate-cnot for circuit noise");
    }
    let profs = profiles(&o.profiles, Vec::new)?;
    if profs.is_empty() {
        bail!("--profiles is required");
    }
    let ps = rates(&o.p, "p")?;
    let shots = o.shots.unwrap_or(100_000);
    let seed = o.seed.unwrap_or(DEFAULT_SEED);
    let mut rows = Vec::new();
    for prof in &profs {
        for &p in &ps {
            rows.push(memory_experiment(prof, NoiseSpec::new(kind, p)?, shots, seed)?);
        }
    }
    write_csv(&o.out, &rows)?;
    let mut out = Outcome { outputs: o.out.iter().cloned().collect(), ..Default::default() };
    if let Some(m) = manifest_path(&o.out, &o.manifest) {
        let resolved = MemoryOptions {
            noise: Some(kind.to_string()),
            p: Some(ps),
            shots: Some(shots),
            seed: Some(seed),
            ..o.clone()
        };
        write_manifest(&m, "simulate-memory", seed, &resolved, &out.outputs, rows.len())?;
        out.outputs.push(m);
    }
    if self_test {
        out.violations = memory_violations(&rows);
    }
    Ok(out)
}

#[derive(Serialize)]
struct CnotRow {
    profile: String,
    variant: String,
    noise: NoiseKind,
    p: f64,
    seed: u64,
    shots: u64,
    failures: u64,
    p_hat: f64,
    ci_lo: f64,
    ci_hi: f64,
    p_block: f64,
    p_block_lo: f64,
    p_block_hi: f64,
    p_cnot: f64,
    p_cnot_lo: f64,
    p_cnot_hi: f64,
    num_logical: usize,
    aborts: u64,
}

pub fn simulate_cnot(o: &CnotOptions, self_test: bool) -> Result<Outcome> {
    circuit_noise(&o.noise)?;
    let profs =
        profiles(&o.profiles, || ["D444", "D644", "D664", "D666"].iter().map(|s| s.parse().expect("valid")).collect())?;
    let vars = variants(&o.variants)?;
    let ps = match &o.p {
        Some(v) if !v.is_empty() => v.clone(),
        _ => vec![1e-3, 2e-3, 3e-3, 4e-3],
    };
    let shots = o.shots.unwrap_or(10_000);
    let seed = o.seed.unwrap_or(DEFAULT_SEED);
    let cap = o.cap.unwrap_or(DEFAULT_CAP);
    let mut rows = Vec::new();
    for prof in &profs {
        for &v in &vars {
            for &p in &ps {
                let s = cnot_benchmark(prof, v, p, shots, seed, cap)?;
                let t = &s.p10;
                rows.push(CnotRow {
                    profile: t.profile.clone(),
                    variant: v.to_string(),
                    noise: t.noise,
                    p,
                    seed,
                    shots: t.shots,
                    failures: t.failures,
                    p_hat: t.p_hat,
                    ci_lo: t.ci_lo,
                    ci_hi: t.ci_hi,
                    p_block: s.p_block,
                    p_block_lo: s.p_block_ci.0,
                    p_block_hi: s.p_block_ci.1,
                    p_cnot: s.p_cnot,
                    p_cnot_lo: s.p_cnot_ci.0,
                    p_cnot_hi: s.p_cnot_ci.1,
                    num_logical: s.num_logical,
                    aborts: s.aborts,
                });
            }
        }
    }
    write_csv(&o.out, &rows)?;
    let mut out = Outcome { outputs: o.out.iter().cloned().collect(), ..Default::default() };
    if let Some(m) = manifest_path(&o.out, &o.manifest) {
        let resolved = CnotOptions {
            profiles: Some(profs.iter().map(CodeProfile::id).collect()),
            variants: Some(vars.iter().map(ToString::to_string).collect()),
            noise: Some(NoiseKind::Circuit.to_string()),
            p: Some(ps.clone()),
            shots: Some(shots),
            seed: Some(seed),
            cap: Some(cap),
            ..o.clone()
        };
        write_manifest(&m, "simulate-cnot", seed, &resolved, &out.outputs, rows.len())?;
        out.outputs.push(m);
    }
    if self_test {
        for r in &rows {
            if r.p_cnot > r.p_block || r.p_block > r.p_hat {
                out.violations.push(format!("{} {} p={}: rate conversions out of order", r.profile, r.variant, r.p));
            }
            if r.p == 0.0 && r.failures > 0 {
                out.violations.push(format!("{} {} p=0: {} failures", r.profile, r.variant, r.failures));
            }
        }
        for a in rows.iter().filter(|r| r.variant == "original") {
            if let Some(b) = rows.iter().find(|b| b.variant == "proposed" && b.profile == a.profile && b.p == a.p) {
                if a.ci_hi < b.ci_lo {
                    out.violations.push(format!("{} p={}: proposed worse than original", a.profile, a.p));
                }
            }
        }
        let mut groups: FitGroups = BTreeMap::new();
        for r in rows.iter().filter(|r| r.failures >= DEFAULT_MIN_FAILURES) {
            groups.entry((r.profile.clone(), r.variant.clone())).or_default().push((r.p, r.p_block, r.failures as f64));
        }
        for ((prof, var), pts) in groups {
            if let Ok(f) = fit_power_law(&pts) {
                if !(3.5..=4.5).contains(&f.alpha) {
                    out.violations.push(format!("{prof} {var}: fitted exponent {:.3} outside [3.5, 4.5]", f.alpha));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct OverheadRow {
    profile: String,
    variant: EncoderVariant,
    census: usize,
    formula_total: usize,
    p: f64,
    shots: u64,
    mean_qubit_preparations: f64,
    std_error: f64,
    aborts: u64,
}

pub fn overhead(o: &OverheadOptions, self_test: bool) -> Result<Outcome> {
    circuit_noise(&o.noise)?;
    let profs = profiles(&o.profiles, || {
        let mut v = CodeProfile::all_with_levels(2);
        v.extend(CodeProfile::all_with_levels(3));
        v
    })?;
    let vars = variants(&o.variants)?;
    let ps = o.p.clone().unwrap_or_default();
    let shots = o.shots.unwrap_or(10_000);
    let seed = o.seed.unwrap_or(DEFAULT_SEED);
    let cap = o.cap.unwrap_or(DEFAULT_CAP);
    let mut rows = Vec::new();
    for prof in &profs {
        for &v in &vars {
            let census = build_encoder(prof, v)?.census();
            rows.push(OverheadRow {
                profile: prof.id(),
                variant: v,
                census: census.total,
                formula_total: census.formula_total,
                p: 0.0,
                shots: 0,
                mean_qubit_preparations: census.total as f64,
                std_error: 0.0,
                aborts: 0,
            });
            for &p in ps.iter().filter(|&&p| p > 0.0) {
                let r = retry_cost(prof, v, p, shots, seed, cap)?;
                rows.push(OverheadRow {
                    profile: prof.id(),
                    variant: v,
                    census: census.total,
                    formula_total: census.formula_total,
                    p,
                    shots,
                    mean_qubit_preparations: r.mean_qubit_preparations,
                    std_error: r.std_error,
                    aborts: r.abort_count,
                });
            }
        }
    }
    write_csv(&o.out, &rows)?;
    let mut out = Outcome { outputs: o.out.iter().cloned().collect(), ..Default::default() };
    if let Some(m) = manifest_path(&o.out, &o.manifest) {
        let resolved = OverheadOptions {
            profiles: Some(profs.iter().map(CodeProfile::id).collect()),
            variants: Some(vars.iter().map(ToString::to_string).collect()),
            noise: Some(NoiseKind::Circuit.to_string()),
            p: Some(ps.clone()),
            shots: Some(shots),
            seed: Some(seed),
            cap: Some(cap),
            ..o.clone()
        };
        write_manifest(&m, "overhead", seed, &resolved, &out.outputs, rows.len())?;
        out.outputs.push(m);
    }
    if self_test {
        out.violations = overhead_violations(&rows);
    }
    Ok(out)
}

fn overhead_violations(rows: &[OverheadRow]) -> Vec<String> {
    let mut v = Vec::new();
    for r in rows.iter().filter(|r| r.p == 0.0) {
        if r.census != r.formula_total {
            v.push(format!(
                "{} {}: census {} differs from formula {}",
                r.profile, r.variant, r.census, r.formula_total
            ));
        }
    }
    let get = |prof: &str, var: EncoderVariant, p: f64| {
        rows.iter().find(|r| r.profile == prof && r.variant == var && r.p == p)
    };
    let mut seen: Vec<&str> = rows.iter().map(|r| r.profile.as_str()).collect();
    seen.dedup();
    for prof in seen {
        let parsed: CodeProfile = prof.parse().expect("written by us");
        let (Some(orig), Some(prop)) =
            (get(prof, EncoderVariant::Original, 0.0), get(prof, EncoderVariant::Proposed, 0.0))
        else {
            continue;
        };
        let reduction = orig.census as f64 - prop.census as f64;
        match parsed.num_levels() {
            2 => {
                let expect = 7.0 - parsed.n(1) as f64 / 2.0;
                if reduction != expect {
                    v.push(format!("{prof}: level-2 reduction {reduction}, expected {expect}"));
                }
            }
            3 => {
                let ratio = reduction / (orig.census - parsed.num_physical()) as f64;
                if !(0.55..=0.65).contains(&ratio) {
                    v.push(format!("{prof}: level-3 reduction ratio {ratio:.3} outside [0.55, 0.65]"));
                }
            }
            _ => {}
        }
        let mut ps: Vec<f64> = rows.iter().filter(|r| r.profile == prof && r.p > 0.0).map(|r| r.p).collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        for &p in &ps {
            if let (Some(a), Some(b)) = (get(prof, EncoderVariant::Original, p), get(prof, EncoderVariant::Proposed, p))
            {
                if b.mean_qubit_preparations >= a.mean_qubit_preparations {
                    v.push(format!("{prof} p={p}: proposed cost not below original"));
                }
            }
        }
        for var in EncoderVariant::ALL {
            let series: Vec<&OverheadRow> =
                std::iter::once(0.0).chain(ps.iter().copied()).filter_map(|p| get(prof, var, p)).collect();
            for w in series.windows(2) {
                let slack = 3.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
                if w[1].mean_qubit_preparations + slack < w[0].mean_qubit_preparations {
                    v.push(format!("{prof} {var}: cost decreases from p={} to p={}", w[0].p, w[1].p));
                }
            }
        }
    }
    v
}

#[derive(Clone, Serialize)]
struct FitRow {
    profile: String,
    variant: String,
    rate: String,
    alpha: f64,
    beta: f64,
    points: usize,
    /// Evaluated from the fit, not sampled.
    extrapolated_p: Option<f64>,
    extrapolated_rate: Option<f64>,
}

pub fn fit(o: &FitOptions, self_test: bool) -> Result<Outcome> {
    let input = o.input.as_ref().ok_or_else(|| anyhow!("--input is required"))?;
    let rate = o.rate.clone().unwrap_or_else(|| "p_hat".into());
    let min_failures = o.min_failures.unwrap_or(DEFAULT_MIN_FAILURES);
    let mut reader = csv::Reader::from_path(input).with_context(|| format!("reading {}", input.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| anyhow!("column {name} missing"));
    let (ci, vi, pi, fi, ri) = (col("profile")?, col("variant")?, col("p")?, col("failures")?, col(&rate)?);
    let mut groups: FitGroups = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let failures: u64 = rec[fi].parse()?;
        if failures < min_failures {
            continue;
        }
        let point = (rec[pi].parse()?, rec[ri].parse()?, failures as f64);
        groups.entry((rec[ci].to_string(), rec[vi].to_string())).or_default().push(point);
    }
    if groups.is_empty() {
        bail!("no rows with at least {min_failures} failures");
    }
    let mut rows = Vec::new();
    for ((profile, variant), pts) in groups {
        let f = fit_power_law(&pts).with_context(|| format!("fitting {profile} {variant}"))?;
        let base = FitRow {
            profile,
            variant,
            rate: rate.clone(),
            alpha: f.alpha,
            beta: f.beta,
            points: f.points.len(),
            extrapolated_p: None,
            extrapolated_rate: None,
        };
        let extra = o.extrapolate.clone().unwrap_or_default();
        for &p in &extra {
            rows.push(FitRow { extrapolated_p: Some(p), extrapolated_rate: Some(f.eval(p)), ..base.clone() });
        }
        if extra.is_empty() {
            rows.push(base);
        }
    }
    write_csv(&o.out, &rows)?;
    let mut out = Outcome { outputs: o.out.iter().cloned().collect(), ..Default::default() };
    if self_test {
        for r in &rows {
            if !r.alpha.is_finite() || !r.beta.is_finite() || r.beta <= 0.0 {
                out.violations.push(format!("{} {}: degenerate fit", r.profile, r.variant));
            }
        }
    }
    Ok(out)
}

fn parse_readout(line: &str, n: usize) -> Result<Bits> {
    let bits: Vec<bool> = line
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(anyhow!("unexpected character {c:?} in readout")),
        })
        .collect::<Result<_>>()?;
    if bits.len() != n {
        bail!("readout has {} bits, the code has {n}", bits.len());
    }
    Ok(Bits::from_bools(&bits))
}

pub fn decode(o: &DecodeOptions, self_test: bool) -> Result<Outcome> {
    let prof = profile(&o.profile)?;
    let basis = match o.basis.as_deref().unwrap_or("z").to_ascii_lowercase().as_str() {
        "z" => Basis::Z,
        "x" => Basis::X,
        other => bail!("unknown basis {other:?}"),
    };
    let input = o.input.as_ref().ok_or_else(|| anyhow!("--input is required"))?;
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let spec = build_code(&prof);
    let hier = HierarchicalDecoder::new(&prof, basis);
    let oracle = MlOracle::new(&spec, basis).ok();
    let use_oracle = o.oracle.unwrap_or(false);
    if use_oracle && oracle.is_none() {
        bail!("{prof} is too large for the exact decoder");
    }
    let mut lines = String::new();
    let mut out = Outcome { outputs: o.out.iter().cloned().collect(), ..Default::default() };
    let as_str = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bits = parse_readout(line, spec.num_physical).with_context(|| format!("line {}", i + 1))?;
        let h = hier.decode(&bits)?.values;
        let values = match (&oracle, use_oracle) {
            (Some(or), true) => or.decode(&bits)?,
            _ => h.clone(),
        };
        if self_test && prof.num_levels() == 2 {
            if let Some(or) = &oracle {
                if or.decode(&bits)? != h {
                    out.violations.push(format!("line {}: hierarchical and exact decoders disagree", i + 1));
                }
            }
        }
        lines.push_str(&as_str(&values));
        lines.push('\n');
    }
    write_text(&o.out, &lines)?;
    Ok(out)
}
