//! `nmf2` command line: factor matrix files and run the benchmark families.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nmf2::anls::{anls, AnlsConfig, InitMethod};
use nmf2::bench::{aggregate, run_bench, write_aggregate, write_failures, write_records, Family, GeneratorSpec};
use nmf2::exact::{exact_nmf, ratio_stats, tbox};
use nmf2::io::{read_matrix, to_csv, to_matrix_market};
use nmf2::qdr::{qdr_detailed, QdrConfig};
use nmf2::svd::{svd2_default, sym_eig2_default};
use nmf2::threeway::{
    defects, minimize_defect_symmetric, minimize_defects, threeway_nmf, threeway_symmetric, ParamBounds,
    SymmetricBounds, ThreeWayParams,
};
use nmf2::{DenseMatrix, Nmf2Error};

#[derive(Parser)]
#[command(name = "nmf2", version, about = "Rank-2 nonnegative matrix factorization")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Mtx,
}

#[derive(clap::Args)]
struct Output {
    /// Write factors to `<PREFIX>.L.<ext>` etc. instead of standard output.
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Qdr,
    Spa,
    Nndsvd,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Lognormal,
    Boundary,
    Int4,
}

#[derive(Subcommand)]
enum Command {
    /// Quadrant (angle clipping) approximation.
    Qdr {
        matrix: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Alternating nonnegative least squares.
    Anls {
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "qdr")]
        init: InitArg,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// Seed for `--init random`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Three-factor `L·M·Rᵀ` decomposition of a nonnegative rank-2 matrix.
    Threeway {
        matrix: PathBuf,
        /// Use the symmetric form `L·M·Lᵀ`.
        #[arg(long)]
        symmetric: bool,
        /// Pick the parameters that minimize the orthogonality defects.
        #[arg(long)]
        min_defect: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Exact two-factor NMF of a nonnegative rank-2 matrix.
    Exact {
        matrix: PathBuf,
        /// Defaults to the midpoint of the admissible box, as does `--t2`.
        #[arg(long, requires = "t2", allow_negative_numbers = true)]
        t1: Option<f64>,
        #[arg(long, requires = "t1", allow_negative_numbers = true)]
        t2: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Run every initializer plus ANLS on a generated family.
    Bench {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Per-record CSV.
        #[arg(long)]
        out: PathBuf,
        /// Table-style summary CSV; defaults to `<out>` with `.agg.csv`.
        #[arg(long)]
        aggregate: Option<PathBuf>,
        /// Rows (ignored by int4).
        #[arg(long, default_value_t = 100)]
        m: usize,
        /// Columns (ignored by int4).
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Boundary noise scale; default is half the clean mean.
        #[arg(long)]
        noise: Option<f64>,
        /// Entry sum of the int4 family.
        #[arg(long, default_value_t = 1000)]
        total: u32,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// Comma-separated subset of qdr,spa,nndsvd,random.
        #[arg(long, default_value = "qdr,spa,nndsvd,random")]
        methods: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

fn run(cmd: Command) -> Result<(), Nmf2Error> {
    match cmd {
        Command::Qdr { matrix, output } => {
            let n = read_matrix(&matrix)?;
            let out = qdr_detailed(&n, &QdrConfig::default())?;
            eprintln!("path: {:?}, objective: {:e}", out.path, out.nmf.objective(&n));
            emit(&output, &[("L", &out.nmf.l), ("R", &out.nmf.r)])
        }
        Command::Anls { matrix, init, eps, max_iters, seed, output } => {
            let n = read_matrix(&matrix)?;
            let method = match init {
                InitArg::Qdr => InitMethod::Qdr,
                InitArg::Spa => InitMethod::Spa,
                InitArg::Nndsvd => InitMethod::Nndsvd,
                InitArg::Random => InitMethod::Random(seed),
            };
            let cfg = AnlsConfig { epsilon: eps, max_iters, record_history: false };
            let res = anls(&n, method, &cfg)?;
            eprintln!(
                "init: {method}, iters: {}, converged: {}, init objective: {:e}, final objective: {:e}",
                res.iters,
                res.converged,
                res.init_objective,
                res.final_objective(&n)
            );
            emit(&output, &[("L", &res.nmf.l), ("R", &res.nmf.r)])
        }
        Command::Threeway { matrix, symmetric, min_defect, output } => {
            let n = read_matrix(&matrix)?;
            let tw = if symmetric {
                let e = sym_eig2_default(&n)?;
                check_rank2(&n, &e.truncation())?;
                let (lo, hi) = if min_defect {
                    minimize_defect_symmetric(&e)?
                } else {
                    let t = SymmetricBounds::from_eig(&e)?.default_t();
                    (t, t)
                };
                threeway_symmetric(&e, lo, hi)?
            } else {
                let s = svd2_default(&n)?;
                check_rank2(&n, &s.truncation())?;
                let stats = ratio_stats(&s)?;
                tbox(&stats).ok_or(Nmf2Error::NotNonnegativeRank2)?;
                let p: ThreeWayParams =
                    if min_defect { minimize_defects(&s)?.params } else { ParamBounds::from_stats(&stats).midpoint() };
                let tw = threeway_nmf(&s, &p)?;
                let d = defects(&tw, &s);
                eprintln!("def_l: {:.6}, def_r: {:.6}", d.def_l, d.def_r);
                tw
            };
            let p = tw.params;
            eprintln!("params: t1 in [{}, {}], t2 in [{}, {}]", p.t1_lo, p.t1_hi, p.t2_lo, p.t2_hi);
            emit(&output, &[("L", &tw.l), ("M", &tw.m_mid), ("R", &tw.r)])
        }
        Command::Exact { matrix, t1, t2, output } => {
            let n = read_matrix(&matrix)?;
            let s = svd2_default(&n)?;
            check_rank2(&n, &s.truncation())?;
            let stats = ratio_stats(&s)?;
            let b = tbox(&stats).ok_or(Nmf2Error::NotNonnegativeRank2)?;
            eprintln!("box: t1 in [{}, {}], t2 in [{}, {}]", b.t1_lo, b.t1_hi, b.t2_lo, b.t2_hi);
            let (t1, t2) = match (t1, t2) {
                (Some(a), Some(b)) => (a, b),
                _ => b.midpoint(),
            };
            let f = exact_nmf(&s, t1, t2)?;
            emit(&output, &[("L", &f.l), ("R", &f.r)])
        }
        Command::Bench {
            family,
            count,
            seed,
            out,
            aggregate: agg_path,
            m,
            n,
            noise,
            total,
            eps,
            max_iters,
            methods,
        } => {
            let family = match family {
                FamilyArg::Lognormal => Family::Lognormal { m, n },
                FamilyArg::Boundary => Family::BoundaryNoise { m, n, noise_scale: noise },
                FamilyArg::Int4 => Family::Integer4x4 { total },
            };
            let methods = methods
                .split(',')
                .map(|s| match s.trim() {
                    "random" => Ok(InitMethod::Random(seed)),
                    other => other.parse::<InitMethod>(),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let spec = GeneratorSpec { family, seed, count };
            let cfg = AnlsConfig { epsilon: eps, max_iters, record_history: false };
            let report = run_bench(&spec, &methods, &cfg)?;
            write_records(create(&out)?, &report.records)?;
            let agg_path = agg_path.unwrap_or_else(|| sibling(&out, "agg.csv"));
            write_aggregate(create(&agg_path)?, &aggregate(&report.records, &methods))?;
            if !report.failures.is_empty() {
                let fail_path = sibling(&out, "failures.csv");
                write_failures(create(&fail_path)?, &report.failures)?;
                eprintln!("{} failures written to {}", report.failures.len(), fail_path.display());
            }
            eprintln!("{} records written to {}", report.records.len(), out.display());
            Ok(())
        }
    }
}

/// Rejects inputs that are not rank two up to a relative `1e−8`.
fn check_rank2(n: &DenseMatrix, trunc: &DenseMatrix) -> Result<(), Nmf2Error> {
    let rel = n.frobenius_distance(trunc) / n.frobenius_norm();
    if rel > 1e-8 {
        return Err(Nmf2Error::NotRank2(rel));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Nmf2Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Nmf2Error::Io(format!("{}: {e}", path.display())))
}

/// `out.csv` → `out.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn emit(output: &Output, factors: &[(&str, &DenseMatrix)]) -> Result<(), Nmf2Error> {
    let (render, ext): (fn(&DenseMatrix) -> String, &str) = match output.format {
        OutFormat::Csv => (to_csv, "csv"),
        OutFormat::Mtx => (to_matrix_market, "mtx"),
    };
    match &output.out {
        Some(prefix) => {
            for (name, f) in factors {
                let base = prefix.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let path = prefix.with_file_name(format!("{base}.{name}.{ext}"));
                let mut w = create(&path)?;
                w.write_all(render(f).as_bytes())?;
                w.flush()?;
            }
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            for (name, f) in factors {
                writeln!(w, "# {name}")?;
                w.write_all(render(f).as_bytes())?;
            }
            Ok(())
        }
    }
}
