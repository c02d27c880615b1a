//! `hyperherm`: index counts, abscissa counts, the benchmark convergence
//! table and projection-rate suites as CSV.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, Config, ConfigError};
use hyperherm::experiment::{
    abscissas_table, convergence_rows, convergence_table, counts_table, exact_solution, expand_params,
    Table,
};
use hyperherm::rates::{all_suites, summary_table};
use hyperherm::spectral::l2_error_vs_function;
use hyperherm::{Error, SetKind};

#[derive(Parser)]
#[command(name = "hyperherm", version, about = "Sparse Hermite spectral experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cardinalities of index sets
    Counts(CommonArgs),
    /// Distinct quadrature points of full grids and cross-type unions
    Abscissas(CommonArgs),
    /// Benchmark errors per dimension and level
    Convergence(CommonArgs),
    /// Projection-rate and norm-inequality suites
    Rates(CommonArgs),
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Unstable { .. } | Error::OutOfRange(_) => Failure::Numerical(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Output destination plus metadata lines.
struct Sink {
    out: Option<PathBuf>,
    meta: Vec<String>,
}

impl Sink {
    fn new(out: Option<PathBuf>) -> Self {
        Self { out, meta: Vec::new() }
    }

    fn meta(&mut self, line: impl Into<String>) {
        self.meta.push(line.into());
    }

    /// Writes the CSV; metadata goes to stderr and, with a file
    /// destination, to a `.meta.txt` sidecar.
    fn finish(self, table: &Table) -> Result<(), Failure> {
        let csv = table.to_csv();
        for m in &self.meta {
            eprintln!("# {m}");
        }
        match &self.out {
            Some(path) => {
                fs::write(path, csv)?;
                if !self.meta.is_empty() {
                    fs::write(sidecar(path, "meta.txt"), self.meta.join("\n") + "\n")?;
                }
            }
            None => std::io::stdout().lock().write_all(csv.as_bytes())?,
        }
        Ok(())
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_counts(cfg: &Config) -> Result<(), Failure> {
    let mut entries = Vec::new();
    for d in cfg.dims_or(&[2, 3, 4, 5]) {
        for k in cfg.set_kinds(d, 31)? {
            entries.push((d, k));
        }
    }
    let t = counts_table(&entries)?;
    Sink::new(cfg.out.clone()).finish(&t)
}

fn cmd_abscissas(cfg: &Config) -> Result<(), Failure> {
    let order = cfg.quad_order.unwrap_or(31);
    let mut entries = Vec::new();
    for d in cfg.dims_or(&[2, 3, 4]) {
        match cfg.kind {
            None => {
                entries.push((d, SetKind::Full { n: order - 1 }));
                entries.push((d, SetKind::Rhc { n: cfg.n.unwrap_or(order) }));
                entries.push((
                    d,
                    SetKind::Ohc {
                        n: cfg.n.unwrap_or(order),
                        gamma: cfg.gamma.unwrap_or(0.5),
                    },
                ));
            }
            Some(_) => entries.extend(cfg.set_kinds(d, order)?.into_iter().map(|k| (d, k))),
        }
    }
    let t = abscissas_table(&entries, order)?;
    let mut sink = Sink::new(cfg.out.clone());
    sink.meta(format!("rule order {order}; full grids are {order}-point tensor rules"));
    sink.meta("cross-type unions: tensor grids of every order tuple from 1,3,7,15,31 admitted by the set inequality");
    sink.finish(&t)
}

fn cmd_convergence(cfg: &Config) -> Result<(), Failure> {
    let mut pairs = Vec::new();
    for d in cfg.dims_or(&[2, 3, 4]) {
        for l in cfg.levels_or(&[2, 3, 4, 5]) {
            pairs.push((d, l));
        }
    }
    let mut rows = convergence_rows(&pairs, &cfg.alpha, &cfg.beta, cfg.dt, cfg.t_final)?;
    let mut sink = Sink::new(cfg.out.clone());
    sink.meta(format!(
        "alpha={:?} beta={:?} dt={:e} tfinal={}",
        cfg.alpha, cfg.beta, cfg.dt, cfg.t_final
    ));
    sink.meta("level l in d dimensions: Smolyak sum |i| <= l+d over 2^i-1 point rules, index set = union of coefficient boxes");
    match cfg.quad_order {
        Some(q) => {
            for r in rows.iter_mut() {
                if let Some(run) = r.run.as_mut() {
                    let p = expand_params(r.dim, &cfg.alpha, &cfg.beta)?;
                    let t = cfg.t_final;
                    run.error = l2_error_vs_function(&run.coeffs, &p, |x| exact_solution(x, t), q)?;
                }
            }
            sink.meta(format!("error: tensor Gauss-Hermite rule of order {q} per coordinate"));
        }
        None => sink.meta("error: the Smolyak quadrature of the run; coefficient_error: exact expansion of u(T)"),
    }
    if cfg.dump_operator {
        let dir = cfg
            .out
            .as_ref()
            .and_then(|p| p.parent().map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("."));
        for r in &rows {
            if let Some(run) = &r.run {
                let stem = format!("d{}_level{}", r.dim, r.level);
                let op = dir.join(format!("operator_{stem}.coo"));
                fs::write(&op, run.operator.to_coo_text())?;
                fs::write(dir.join(format!("coeffs_{stem}.txt")), run.coeffs.to_text())?;
                sink.meta(format!("wrote {}", op.display()));
            }
        }
    }
    sink.finish(&convergence_table(&rows, cfg.timing))
}

fn cmd_rates(cfg: &Config) -> Result<(), Failure> {
    let reports = all_suites(cfg.seed)?;
    let mut sink = Sink::new(cfg.out.clone());
    sink.meta(format!("seed {}", cfg.seed));
    if let Some(path) = &cfg.out {
        for r in &reports {
            fs::write(sidecar(path, &format!("{}.csv", r.name)), r.table.to_csv())?;
        }
    }
    sink.finish(&summary_table(&reports))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Counts(a) => cmd_counts(&Config::resolve(&a)?),
        Command::Abscissas(a) => cmd_abscissas(&Config::resolve(&a)?),
        Command::Convergence(a) => cmd_convergence(&Config::resolve(&a)?),
        Command::Rates(a) => cmd_rates(&Config::resolve(&a)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical abort: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("io error: {m}");
            ExitCode::from(1)
        }
    }
}
