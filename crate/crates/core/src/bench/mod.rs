//! Benchmark harness: generate instances, run every initializer followed by
//! ANLS, and compare against the best final error per instance.

pub mod gen;

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anls::{anls_from, initialize, AnlsConfig, InitMethod};
use crate::error::{Nmf2Error, Result};
use crate::matrix::DenseMatrix;

pub use gen::{gen_boundary_noise, gen_integer4x4, gen_lognormal, is_trivial, sample_integer4x4};

/// Header of the per-record CSV.
pub const RECORD_HEADER: [&str; 8] =
    ["instance_id", "method", "init_objective", "final_objective", "delta", "delta_init", "iters", "time_s"];

/// Row names of the aggregate CSV.
pub const AGGREGATE_ROWS: [&str; 6] = ["mean time", "max time", "mean acc", "max acc", "mean acc init", "max acc init"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Lognormal {
        m: usize,
        n: usize,
    },
    /// `noise_scale = None` picks a tenth of the clean matrix mean.
    BoundaryNoise {
        m: usize,
        n: usize,
        noise_scale: Option<f64>,
    },
    Integer4x4 {
        total: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub seed: u64,
    pub count: usize,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Nmf2Error::InvalidParameter("count must be at least 1".into()));
        }
        match self.family {
            Family::Lognormal { m, n } | Family::BoundaryNoise { m, n, .. } if m < 2 || n < 2 => {
                Err(Nmf2Error::InvalidParameter(format!("dimensions must be at least 2, got {m}×{n}")))
            }
            Family::Integer4x4 { total } if total < 16 => {
                Err(Nmf2Error::InvalidParameter(format!("total must be at least 16, got {total}")))
            }
            _ => Ok(()),
        }
    }

    /// The PRNG of instance `id`: the master seed with stream `id`.
    pub fn instance_rng(&self, id: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        rng
    }

    /// Instance `id`, independent of how many others are generated.
    pub fn generate(&self, id: usize) -> Result<DenseMatrix> {
        let mut rng = self.instance_rng(id);
        match self.family {
            Family::Lognormal { m, n } => gen_lognormal(m, n, &mut rng),
            Family::BoundaryNoise { m, n, noise_scale } => gen_boundary_noise(m, n, noise_scale, &mut rng),
            Family::Integer4x4 { total } => gen_integer4x4(total, &mut rng),
        }
    }
}

/// Random seeds are mixed with the instance id so instances do not share starts.
pub fn instance_method(method: InitMethod, id: usize) -> InitMethod {
    match method {
        InitMethod::Random(s) => InitMethod::Random(s ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub instance_id: usize,
    pub method: InitMethod,
    pub init_objective: f64,
    pub final_objective: f64,
    pub delta: f64,
    pub delta_init: f64,
    pub iters: usize,
    pub init_time_s: f64,
    pub anls_time_s: f64,
}

impl BenchRecord {
    pub fn time_s(&self) -> f64 {
        self.init_time_s + self.anls_time_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchFailure {
    pub instance_id: usize,
    /// `None` when generating the instance failed.
    pub method: Option<InitMethod>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    /// Sorted by instance id, then by position in the method list.
    pub records: Vec<BenchRecord>,
    pub failures: Vec<BenchFailure>,
}

struct Run {
    init_objective: f64,
    final_objective: f64,
    iters: usize,
    init_time_s: f64,
    anls_time_s: f64,
}

fn run_one(n: &DenseMatrix, method: InitMethod, cfg: &AnlsConfig) -> Result<Run> {
    let t0 = Instant::now();
    let start = initialize(n, method)?;
    let init_time_s = t0.elapsed().as_secs_f64();
    let init_objective = start.objective(n);
    let t1 = Instant::now();
    let res = anls_from(n, start, cfg)?;
    let anls_time_s = t1.elapsed().as_secs_f64();
    Ok(Run { init_objective, final_objective: res.final_objective(n), iters: res.iters, init_time_s, anls_time_s })
}

/// Number of worker threads: `NMF2_THREADS` when set to a positive integer,
/// otherwise rayon's default.
pub fn thread_count() -> usize {
    std::env::var("NMF2_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs every method on every instance. Instances run in parallel; the
/// report does not depend on the thread count except for timings.
pub fn run_bench(spec: &GeneratorSpec, methods: &[InitMethod], cfg: &AnlsConfig) -> Result<BenchReport> {
    spec.validate()?;
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Nmf2Error::InvalidParameter("no methods given".into()));
    }
    let cfg = AnlsConfig { record_history: false, ..*cfg };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Nmf2Error::InvalidParameter(e.to_string()))?;

    // Warm-up on the first instance, not recorded.
    if let Ok(n) = spec.generate(0) {
        for &m in methods {
            let _ = run_one(&n, instance_method(m, 0), &cfg);
        }
    }

    let per_instance: Vec<(Vec<BenchRecord>, Vec<BenchFailure>)> =
        pool.install(|| (0..spec.count).into_par_iter().map(|id| bench_instance(spec, id, methods, &cfg)).collect());
    let mut report = BenchReport::default();
    for (r, f) in per_instance {
        report.records.extend(r);
        report.failures.extend(f);
    }
    Ok(report)
}

fn bench_instance(
    spec: &GeneratorSpec,
    id: usize,
    methods: &[InitMethod],
    cfg: &AnlsConfig,
) -> (Vec<BenchRecord>, Vec<BenchFailure>) {
    let n = match spec.generate(id) {
        Ok(n) => n,
        Err(e) => return (vec![], vec![BenchFailure { instance_id: id, method: None, message: e.to_string() }]),
    };
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for &m in methods {
        match run_one(&n, instance_method(m, id), cfg) {
            Ok(r) => runs.push((m, r)),
            Err(e) => failures.push(BenchFailure { instance_id: id, method: Some(m), message: e.to_string() }),
        }
    }
    let best = runs.iter().map(|(_, r)| r.final_objective).fold(f64::INFINITY, f64::min);
    let ratio = |x: f64| if x == best { 1.0 } else { x / best };
    let records = runs
        .into_iter()
        .map(|(method, r)| BenchRecord {
            instance_id: id,
            method,
            init_objective: r.init_objective,
            final_objective: r.final_objective,
            delta: ratio(r.final_objective),
            delta_init: ratio(r.init_objective),
            iters: r.iters,
            init_time_s: r.init_time_s,
            anls_time_s: r.anls_time_s,
        })
        .collect();
    (records, failures)
}

/// Table-style summary for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: InitMethod,
    pub runs: usize,
    pub mean_time: f64,
    pub max_time: f64,
    pub mean_acc: f64,
    pub max_acc: f64,
    pub mean_acc_init: f64,
    pub max_acc_init: f64,
    pub median_iters: f64,
}

impl MethodSummary {
    pub fn row_values(&self) -> [f64; 6] {
        [self.mean_time, self.max_time, self.mean_acc, self.max_acc, self.mean_acc_init, self.max_acc_init]
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Per-method summaries in the order of `methods`.
pub fn aggregate(records: &[BenchRecord], methods: &[InitMethod]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let rs: Vec<&BenchRecord> = records.iter().filter(|r| r.method == method).collect();
            let k = rs.len().max(1) as f64;
            let mean = |f: &dyn Fn(&BenchRecord) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / k;
            let max = |f: &dyn Fn(&BenchRecord) -> f64| rs.iter().map(|r| f(r)).fold(f64::NEG_INFINITY, f64::max);
            let mut iters: Vec<f64> = rs.iter().map(|r| r.iters as f64).collect();
            MethodSummary {
                method,
                runs: rs.len(),
                mean_time: mean(&|r| r.time_s()),
                max_time: max(&|r| r.time_s()),
                mean_acc: mean(&|r| r.delta),
                max_acc: max(&|r| r.delta),
                mean_acc_init: mean(&|r| r.delta_init),
                max_acc_init: max(&|r| r.delta_init),
                median_iters: median(&mut iters),
            }
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Nmf2Error {
    Nmf2Error::Io(e.to_string())
}

/// Per-record CSV with [`RECORD_HEADER`]; times in seconds to the microsecond.
pub fn write_records<W: Write>(w: W, records: &[BenchRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        out.write_record([
            r.instance_id.to_string(),
            r.method.to_string(),
            format!("{:.16e}", r.init_objective),
            format!("{:.16e}", r.final_objective),
            format!("{:.16e}", r.delta),
            format!("{:.16e}", r.delta_init),
            r.iters.to_string(),
            format!("{:.6}", r.time_s()),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Aggregate CSV: one row per [`AGGREGATE_ROWS`] entry, one column per method.
pub fn write_aggregate<W: Write>(w: W, summaries: &[MethodSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["metric".to_string()];
    header.extend(summaries.iter().map(|s| s.method.to_string()));
    out.write_record(&header).map_err(csv_err)?;
    for (k, name) in AGGREGATE_ROWS.iter().enumerate() {
        let mut row = vec![name.to_string()];
        row.extend(summaries.iter().map(|s| format!("{}", s.row_values()[k])));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Failures as `instance_id,method,message`.
pub fn write_failures<W: Write>(w: W, failures: &[BenchFailure]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["instance_id", "method", "message"]).map_err(csv_err)?;
    for f in failures {
        let method = f.method.map(|m| m.to_string()).unwrap_or_else(|| "generate".into());
        out.write_record([f.instance_id.to_string(), method, f.message.clone()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Best final objective over every built-in initializer plus `restarts`
/// random starts, each run to tolerance `epsilon`.
pub fn surrogate_optimum(n: &DenseMatrix, restarts: usize, seed: u64, epsilon: f64, max_iters: usize) -> Result<f64> {
    let cfg = AnlsConfig { epsilon, max_iters, record_history: false };
    let mut methods = vec![InitMethod::Qdr, InitMethod::Spa, InitMethod::Nndsvd];
    methods.extend((0..restarts as u64).map(|k| InitMethod::Random(seed.wrapping_add(k))));
    let mut best = f64::INFINITY;
    for m in methods {
        if let Ok(start) = initialize(n, m) {
            if let Ok(res) = anls_from(n, start, &cfg) {
                best = best.min(res.final_objective(n));
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Nmf2Error::InvalidParameter("no run produced a finite objective".into()))
    }
}
