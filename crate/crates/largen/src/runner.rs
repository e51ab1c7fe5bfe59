//! Orchestration of the CLI subcommands: chains, estimates, comparisons and
//! file output. Every command writes its tables as CSV and a
//! `<command>_manifest.json` listing each file with its SHA-256, the config
//! hash, the crate version and the seed. No timestamps are written, so equal
//! configs give byte-identical outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::dynamics::{run_chain, sample_gff, EnsembleState, Propagator};
use crate::error::{Error, Result};
use crate::ibp;
use crate::kernels::KernelSet;
use crate::lattice::ScalarLattice;
use crate::observables::{observe, ObservableId, WickContext};
use crate::oracle::Point;
use crate::predict::{self, Mode};
use crate::stats::{batch_estimate, rate_fit, sigma_test, translation_correlator, RateFit, SampleSeries};
use crate::verify::{run_checks, VerifyReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Batches must be at least this many integrated autocorrelation times long.
pub const MIN_BATCH_TAUS: f64 = 2.0;

/// Result of one subcommand: whether every requested check passed, and the
/// files written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

/// A statistic recorded per snapshot: the spatial mean of the observable or
/// its translation-averaged correlator at one displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Statistic {
    Mean,
    Corr(Point),
}

impl Statistic {
    pub fn label(self) -> String {
        match self {
            Statistic::Mean => "-".into(),
            Statistic::Corr((a, b)) => format!("{a}:{b}"),
        }
    }

    fn column(self) -> String {
        match self {
            Statistic::Mean => "mean".into(),
            Statistic::Corr((a, b)) => format!("r{a}_{b}"),
        }
    }
}

/// Time series of one chain, keyed by observable and statistic.
#[derive(Debug, Clone)]
pub struct ChainRecord {
    pub n_comp: usize,
    pub acceptance: f64,
    pub snapshots: usize,
    pub series: BTreeMap<(ObservableId, Statistic), Vec<f64>>,
}

/// Per-chain seed: a splitmix64 mix of the run seed and the component count.
pub fn chain_seed(seed: u64, n_comp: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(n_comp as u64))
}

fn statistics(cfg: &RunConfig) -> Vec<Statistic> {
    std::iter::once(Statistic::Mean).chain(cfg.displacement_points().into_iter().map(Statistic::Corr)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn record_snapshot(
    cfg: &RunConfig,
    stats: &[Statistic],
    phi: &[Vec<f64>],
    z: &[Vec<f64>],
    ctx: &WickContext,
    series: &mut BTreeMap<(ObservableId, Statistic), Vec<f64>>,
) -> Result<()> {
    let spec = cfg.lattice_spec()?;
    for &id in &cfg.observables {
        let o = observe(id, spec, phi, z, ctx)?.values;
        let corr: Option<ScalarLattice> =
            if stats.len() > 1 { Some(translation_correlator(&o, &o)?) } else { None };
        for &s in stats {
            let v = match s {
                Statistic::Mean => mean(&o.values),
                Statistic::Corr((a, b)) => corr.as_ref().expect("correlator computed").at(a, b),
            };
            series.entry((id, s)).or_default().push(v);
        }
    }
    Ok(())
}

/// Runs one chain: the dynamics when the interaction is on, exact free-field
/// draws (`Φ = Z`) otherwise. `steps / thin` snapshots are retained.
pub fn simulate_chain(cfg: &RunConfig, kernels: &KernelSet, n_comp: usize) -> Result<ChainRecord> {
    let spec = cfg.lattice_spec()?;
    let ctx = WickContext::new(n_comp, kernels.a_eps)?;
    let stats = statistics(cfg);
    let seed = chain_seed(cfg.seed, n_comp);
    let mut series = BTreeMap::new();
    match cfg.mode() {
        Mode::Interacting => {
            let prop = Propagator::new(kernels, n_comp, cfg.integrator.integrator())?;
            let mut state = EnsembleState::new(spec, n_comp, seed);
            let snapshots = run_chain(&mut state, &prop, cfg.integrator.steps, &mut |s| {
                record_snapshot(cfg, &stats, &s.phi, &s.z, &ctx, &mut series)
            })?;
            Ok(ChainRecord { n_comp, acceptance: state.acceptance_rate(), snapshots: snapshots as usize, series })
        }
        Mode::Free => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let snapshots = cfg.integrator.steps / cfg.integrator.thin;
            for _ in 0..snapshots {
                let phi: Vec<Vec<f64>> = (0..n_comp).map(|_| sample_gff(spec, &mut rng).values).collect();
                record_snapshot(cfg, &stats, &phi, &phi, &ctx, &mut series)?;
            }
            Ok(ChainRecord { n_comp, acceptance: 1.0, snapshots: snapshots as usize, series })
        }
    }
}

/// One chain per component count, run on up to `threads` worker threads.
/// Results are ordered as in the config and do not depend on `threads`.
pub fn simulate_chains(cfg: &RunConfig, kernels: &KernelSet, threads: usize) -> Result<Vec<ChainRecord>> {
    let counts = cfg.component_counts();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ChainRecord>>>> = Mutex::new((0..counts.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, counts.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= counts.len() {
                    break;
                }
                let r = simulate_chain(cfg, kernels, counts[i]);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("no worker panicked").into_iter().map(|s| s.expect("every chain ran")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub observable: String,
    pub displacement: String,
    #[serde(rename = "N")]
    pub n_comp: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub tau_int: f64,
    pub prediction: Option<f64>,
    pub z: Option<f64>,
    /// `|estimate − prediction| ≤ max(z_max·stderr, rel_tol·|prediction|)`.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub observable: String,
    pub displacement: String,
    pub reference: f64,
    pub fit: std::result::Result<RateFit, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub passed: bool,
    pub mode: Mode,
    pub acceptance: BTreeMap<usize, f64>,
    pub rows: Vec<CompareRow>,
    pub rate_fits: Vec<RateRow>,
}

fn prediction(id: ObservableId, s: Statistic, n_comp: usize, mode: Mode, kernels: &KernelSet) -> Result<Option<f64>> {
    match s {
        Statistic::Mean => predict::one_point(id, n_comp, mode, kernels),
        Statistic::Corr(r) => predict::two_point(id, r, n_comp, mode, kernels),
    }
}

/// Large-N reference used for rate fits, or `None` without a prediction.
fn limit(id: ObservableId, s: Statistic, kernels: &KernelSet) -> Result<Option<f64>> {
    match s {
        Statistic::Mean => predict::one_point_limit(id, Mode::Interacting, kernels).map(Some),
        Statistic::Corr(r) => predict::two_point(id, r, 1, Mode::Interacting, kernels),
    }
}

/// Estimates, predictions and z-scores for every chain, plus rate fits of
/// `|estimate − large-N limit|` across component counts in the interacting mode.
pub fn compare_records(cfg: &RunConfig, kernels: &KernelSet, records: &[ChainRecord]) -> Result<CompareReport> {
    let mode = cfg.mode();
    let mut rows = Vec::new();
    for rec in records {
        for &id in &cfg.observables {
            for s in statistics(cfg) {
                let values = rec.series.get(&(id, s)).cloned().unwrap_or_default();
                let est = batch_estimate(&SampleSeries::new(values), cfg.compare.n_batches)?;
                let batch_len = (est.n_samples / cfg.compare.n_batches) as f64;
                if batch_len < MIN_BATCH_TAUS * est.tau_int {
                    return Err(Error::Statistics(format!(
                        "insufficient samples for {id} {} at N={}: batch length {batch_len} below {MIN_BATCH_TAUS} tau_int = {:.1}",
                        s.label(),
                        rec.n_comp,
                        MIN_BATCH_TAUS * est.tau_int
                    )));
                }
                let pred = prediction(id, s, rec.n_comp, mode, kernels)?;
                let z = pred.map(|p| sigma_test(&est, p).unwrap_or(f64::INFINITY));
                let passed = pred.map(|p| {
                    (est.mean - p).abs() <= (cfg.compare.z_max * est.stderr).max(cfg.compare.rel_tol * p.abs())
                });
                rows.push(CompareRow {
                    observable: id.to_string(),
                    displacement: s.label(),
                    n_comp: rec.n_comp,
                    estimate: est.mean,
                    stderr: est.stderr,
                    tau_int: est.tau_int,
                    prediction: pred,
                    z,
                    passed,
                });
            }
        }
    }
    let mut rate_fits = Vec::new();
    if mode == Mode::Interacting && records.len() >= 3 {
        for &id in &cfg.observables {
            for s in statistics(cfg) {
                let Some(reference) = limit(id, s, kernels)? else { continue };
                let (mut ns, mut devs) = (Vec::new(), Vec::new());
                for r in rows.iter().filter(|r| r.observable == id.to_string() && r.displacement == s.label()) {
                    ns.push(r.n_comp as f64);
                    devs.push((r.estimate - reference).abs());
                }
                let fit = rate_fit(&ns, &devs).map_err(|e| e.to_string());
                rate_fits.push(RateRow { observable: id.to_string(), displacement: s.label(), reference, fit });
            }
        }
    }
    let passed = rows.iter().all(|r| r.passed != Some(false));
    let acceptance = records.iter().map(|r| (r.n_comp, r.acceptance)).collect();
    Ok(CompareReport { passed, mode, acceptance, rows, rate_fits })
}

// ---------------------------------------------------------------- output

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_hash: String,
    seed: u64,
    files: Vec<ManifestEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects files for one command and writes them with a manifest.
struct Writer<'a> {
    dir: &'a Path,
    entries: Vec<(PathBuf, Vec<u8>)>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Self {
        Self { dir, entries: Vec::new() }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.entries.push((PathBuf::from(name), bytes));
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Io { path: name.into(), source: std::io::Error::other(e) })?;
        s.push('\n');
        self.add(name, s.into_bytes());
        Ok(())
    }

    fn finish(self, cfg: &RunConfig, command: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(self.dir).map_err(|e| Error::io(self.dir, e))?;
        let mut files = Vec::new();
        let mut entries = Vec::new();
        for (name, bytes) in &self.entries {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            entries.push(ManifestEntry { path: name.display().to_string(), sha256: sha256_hex(bytes) });
            files.push(path);
        }
        let manifest = Manifest {
            tool: "largen",
            version: VERSION,
            command,
            config_hash: cfg.hash(),
            seed: cfg.seed,
            files: entries,
        };
        let path = self.dir.join(format!("{command}_manifest.json"));
        let mut s = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        s.push('\n');
        fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        files.push(path);
        Ok(files)
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io { path: "<csv>".into(), source: std::io::Error::other(e) };
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io { path: "<csv>".into(), source: std::io::Error::other(e.to_string()) })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn compare_csv(report: &CompareReport) -> Result<Vec<u8>> {
    csv_bytes(
        &["observable", "displacement", "N", "estimate", "stderr", "prediction", "z"],
        report.rows.iter().map(|r| {
            vec![
                r.observable.clone(),
                r.displacement.clone(),
                r.n_comp.to_string(),
                r.estimate.to_string(),
                r.stderr.to_string(),
                opt(r.prediction),
                opt(r.z),
            ]
        }),
    )
}

fn rates_csv(report: &CompareReport) -> Result<Vec<u8>> {
    csv_bytes(
        &["observable", "displacement", "exponent", "amplitude", "residual"],
        report.rate_fits.iter().map(|r| {
            let (e, a, res) = match &r.fit {
                Ok(f) => (f.exponent.to_string(), f.amplitude.to_string(), f.residual.to_string()),
                Err(_) => (String::new(), String::new(), String::new()),
            };
            vec![r.observable.clone(), r.displacement.clone(), e, a, res]
        }),
    )
}

fn lattice_csv(f: &ScalarLattice) -> Result<Vec<u8>> {
    let n = f.spec.side() as i64;
    csv_bytes(
        &["x1", "x2", "value"],
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| vec![i.to_string(), j.to_string(), f.at(i, j).to_string()]),
    )
}

// ---------------------------------------------------------------- commands

/// `C`, `C²`, `G` and `L` on the grid (`x1`, `x2` are grid indices) plus the
/// scalar constants.
pub fn run_kernels(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let k = KernelSet::new(cfg.lattice_spec()?);
    let mut w = Writer::new(out);
    for (name, f) in [("C", &k.c), ("C2", &k.c_sq), ("G", &k.g), ("L", &k.l)] {
        w.add(&format!("kernel_{name}.csv"), lattice_csv(f)?);
    }
    w.json("kernels.json", &k.summary())?;
    Ok(Outcome { passed: true, files: w.finish(cfg, "kernels")? })
}

#[derive(Serialize)]
struct OracleReport {
    mode: Mode,
    #[serde(rename = "N")]
    n_comp: usize,
    one_point: BTreeMap<String, Option<f64>>,
    without_two_point: Vec<String>,
}

/// Predicted two-point values per observable at the configured displacements,
/// for the first configured component count (the interacting limits do not
/// depend on it).
pub fn run_oracle(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let k = KernelSet::new(cfg.lattice_spec()?);
    let mode = cfg.mode();
    let n_comp = cfg.component_counts()[0];
    let mut w = Writer::new(out);
    let mut one_point = BTreeMap::new();
    let mut without = Vec::new();
    for &id in &cfg.observables {
        one_point.insert(id.to_string(), predict::one_point(id, n_comp, mode, &k)?);
        let mut rows = Vec::new();
        for r in cfg.displacement_points() {
            match predict::two_point(id, r, n_comp, mode, &k)? {
                Some(p) => rows.push(vec![Statistic::Corr(r).label(), p.to_string()]),
                None => break,
            }
        }
        if rows.is_empty() {
            without.push(id.to_string());
            continue;
        }
        w.add(&format!("oracle_{id}.csv"), csv_bytes(&["displacement", "prediction"], rows)?);
    }
    w.json("oracle.json", &OracleReport { mode, n_comp, one_point, without_two_point: without })?;
    Ok(Outcome { passed: true, files: w.finish(cfg, "oracle")? })
}

#[derive(Serialize)]
struct ExpandReport<'a> {
    points: Vec<Point>,
    unevaluated: usize,
    power_sums: BTreeMap<u32, Option<f64>>,
    expansion: &'a ibp::ExpansionResult,
}

/// Term table of the graph expansion evaluated at the configured points.
/// Terms exceeding the evaluation size guard are listed with an empty value.
pub fn run_expand(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let k = KernelSet::new(cfg.lattice_spec()?);
    let points = cfg.expand_points();
    let r = ibp::expand(cfg.expand.k, cfg.expand.order)?;
    let mut rows = Vec::new();
    let mut unevaluated = 0;
    let mut power_sums = BTreeMap::new();
    for (&h, terms) in &r.closed_terms {
        let mut sum = Some(0.0);
        for t in terms {
            let value = match ibp::evaluate(t, &k, &points) {
                Ok(v) => Some(v),
                Err(Error::SizeGuard(_)) => None,
                Err(e) => return Err(e),
            };
            if value.is_none() {
                unevaluated += 1;
            }
            sum = sum.zip(value).map(|(a, b)| a + b);
            rows.push(vec![h.to_string(), t.coefficient.to_string(), t.signature(), opt(value)]);
        }
        power_sums.insert(h, sum);
    }
    let mut w = Writer::new(out);
    w.add("expand_terms.csv", csv_bytes(&["power", "coefficient", "signature", "value"], rows)?);
    w.json("expand_graphs.json", &ExpandReport { points, unevaluated, power_sums, expansion: &r })?;
    Ok(Outcome { passed: true, files: w.finish(cfg, "expand")? })
}

/// Deterministic identity checks on the configured lattice.
pub fn run_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let k = KernelSet::new(cfg.lattice_spec()?);
    run_verify_with(cfg, &k, out)
}

/// As [`run_verify`] with caller-supplied kernels, e.g. for fault injection.
pub fn run_verify_with(cfg: &RunConfig, kernels: &KernelSet, out: &Path) -> Result<Outcome> {
    let report: VerifyReport = run_checks(&cfg.checks, kernels, cfg.seed)?;
    let mut w = Writer::new(out);
    w.json("verify.json", &report)?;
    Ok(Outcome { passed: report.passed, files: w.finish(cfg, "verify")? })
}

fn series_name(n_comp: usize) -> String {
    format!("series_N{n_comp}.csv")
}

fn series_csv(cfg: &RunConfig, rec: &ChainRecord) -> Result<Vec<u8>> {
    let stats = statistics(cfg);
    let mut header = vec!["step".to_string(), "observable".to_string()];
    header.extend(stats.iter().map(|s| s.column()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let thin = cfg.integrator.thin;
    let mut rows = Vec::new();
    for i in 0..rec.snapshots {
        for &id in &cfg.observables {
            let mut row = vec![((i as u64 + 1) * thin).to_string(), id.to_string()];
            row.extend(stats.iter().map(|&s| rec.series[&(id, s)][i].to_string()));
            rows.push(row);
        }
    }
    csv_bytes(&header, rows)
}

#[derive(Serialize)]
struct SimulateReport {
    acceptance: BTreeMap<usize, f64>,
    snapshots: BTreeMap<usize, usize>,
}

/// Observable time series, one CSV per component count.
pub fn run_simulate(cfg: &RunConfig, out: &Path, threads: usize) -> Result<Outcome> {
    let k = KernelSet::new(cfg.lattice_spec()?);
    let records = simulate_chains(cfg, &k, threads)?;
    let mut w = Writer::new(out);
    for rec in &records {
        w.add(&series_name(rec.n_comp), series_csv(cfg, rec)?);
    }
    w.json(
        "simulate.json",
        &SimulateReport {
            acceptance: records.iter().map(|r| (r.n_comp, r.acceptance)).collect(),
            snapshots: records.iter().map(|r| (r.n_comp, r.snapshots)).collect(),
        },
    )?;
    Ok(Outcome { passed: true, files: w.finish(cfg, "simulate")? })
}

/// Reads a series file written by [`run_simulate`].
pub fn read_series(cfg: &RunConfig, path: &Path, n_comp: usize) -> Result<ChainRecord> {
    let bad = |msg: String| Error::invalid(path.display().to_string(), msg);
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let stats = statistics(cfg);
    let want: Vec<String> =
        ["step".to_string(), "observable".to_string()].into_iter().chain(stats.iter().map(|s| s.column())).collect();
    if header.iter().ne(want.iter().map(String::as_str)) {
        return Err(bad(format!("header does not match the config: {header:?}")));
    }
    let mut series: BTreeMap<(ObservableId, Statistic), Vec<f64>> = BTreeMap::new();
    for row in r.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let id: ObservableId = row[1].parse()?;
        for (s, field) in stats.iter().zip(row.iter().skip(2)) {
            let v: f64 = field.parse().map_err(|_| bad(format!("bad number `{field}`")))?;
            series.entry((id, *s)).or_default().push(v);
        }
    }
    let snapshots = series.values().next().map_or(0, Vec::len);
    Ok(ChainRecord { n_comp, acceptance: f64::NAN, snapshots, series })
}

fn write_compare(cfg: &RunConfig, out: &Path, command: &str, report: &CompareReport) -> Result<Vec<PathBuf>> {
    let mut w = Writer::new(out);
    w.add(&format!("{command}.csv"), compare_csv(report)?);
    w.add(&format!("{command}_rates.csv"), rates_csv(report)?);
    w.json(&format!("{command}.json"), report)?;
    w.finish(cfg, command)
}

/// Estimates from series files previously written by `simulate` into `out`.
pub fn run_estimate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let k = KernelSet::new(cfg.lattice_spec()?);
    let records = cfg
        .component_counts()
        .into_iter()
        .map(|n| read_series(cfg, &out.join(series_name(n)), n))
        .collect::<Result<Vec<_>>>()?;
    let report = compare_records(cfg, &k, &records)?;
    Ok(Outcome { passed: report.passed, files: write_compare(cfg, out, "estimate", &report)? })
}

/// Runs the chains inline and compares every estimate with its prediction.
pub fn run_compare(cfg: &RunConfig, out: &Path, threads: usize) -> Result<Outcome> {
    let k = KernelSet::new(cfg.lattice_spec()?);
    let records = simulate_chains(cfg, &k, threads)?;
    let report = compare_records(cfg, &k, &records)?;
    Ok(Outcome { passed: report.passed, files: write_compare(cfg, out, "compare", &report)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small(extra: &str) -> RunConfig {
        parse_config(&format!(
            "seed = 3\nobservables = [\"Q1\", \"mixed_1\"]\ndisplacements = [[0, 0], [1, 0]]\n{extra}\n\
             [lattice]\nM = 2\nm = 5\n[model]\nN = [2, 3, 4]\n\
             [integrator]\ndt = 0.5\nscheme = \"exponential-linear\"\nmala = true\nsteps = 400\nburn_in = 20\n"
        ))
        .unwrap()
    }

    #[test]
    fn chain_seeds_differ_across_counts() {
        assert_ne!(chain_seed(1, 4), chain_seed(1, 8));
        assert_ne!(chain_seed(1, 4), chain_seed(2, 4));
        assert_eq!(chain_seed(7, 16), chain_seed(7, 16));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = small("");
        let k = KernelSet::new(cfg.lattice_spec().unwrap());
        let a = simulate_chains(&cfg, &k, 1).unwrap();
        let b = simulate_chains(&cfg, &k, 3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.series, y.series);
        }
        assert_eq!(a[0].snapshots, 400);
    }

    #[test]
    fn stored_series_reproduce_inline_estimates() {
        let cfg = small("");
        let dir = tempfile::tempdir().unwrap();
        run_simulate(&cfg, dir.path(), 1).unwrap();
        run_estimate(&cfg, dir.path()).unwrap();
        run_compare(&cfg, dir.path(), 2).unwrap();
        let est = fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
        let cmp = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
        assert_eq!(est, cmp);
        assert!(cmp.starts_with("observable,displacement,N,estimate,stderr,prediction,z\n"));
        let manifest = fs::read_to_string(dir.path().join("compare_manifest.json")).unwrap();
        assert!(manifest.contains(&cfg.hash()));
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let mut cfg = small("");
        cfg.integrator.steps = 30;
        let k = KernelSet::new(cfg.lattice_spec().unwrap());
        let recs = simulate_chains(&cfg, &k, 1).unwrap();
        assert!(matches!(compare_records(&cfg, &k, &recs), Err(Error::Statistics(_))));
    }
}
