//! Argument parsing and the two subcommands.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, GeneratorKind, Quantity, RunConfig, Suite};
use crate::report::{write_atomic, write_csv};
use crate::{suites, surface};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "arpoisson", version, about = "Verify chart-level Poisson groupoid constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run verification suites and write report.json, timings.json and CSV tables.
    Verify(CommonArgs),
    /// Write a CSV grid of one quantity.
    Surface(SurfaceArgs),
}

/// Flags shared by both commands. Any flag given overrides the fixture file.
#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON fixture holding any subset of the run configuration.
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    /// Exponent of the monomial generator `x^m`.
    #[arg(long)]
    m: Option<u32>,
    /// Order of the desingularized family.
    #[arg(long)]
    k: Option<u32>,
    /// Desingularization parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random probes per check (at least 8).
    #[arg(long)]
    probes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every upper-bound tolerance.
    #[arg(long)]
    tol_scale: Option<f64>,
    #[arg(long)]
    a_max: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    quantity: Option<Quantity>,
    #[arg(long, value_enum)]
    generator: Option<GeneratorKind>,
    /// Grid nodes per axis; 0 gives a header-only file.
    #[arg(long)]
    nodes: Option<usize>,
}

impl CommonArgs {
    fn config(&self) -> Result<RunConfig, ConfigError> {
        let mut c = match &self.fixture {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.suite {
            c.suite = v;
        }
        if let Some(v) = self.m {
            c.m = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = &self.eps {
            c.eps = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.probes {
            c.probes = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.tol_scale {
            c.tol_scale = v;
        }
        if let Some(v) = self.a_max {
            c.a_max = v;
        }
        if let Some(v) = self.x_max {
            c.x_max = v;
        }
        Ok(c)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let (cfg, surface_args) = match &cli.command {
        Command::Verify(a) => (a.config(), None),
        Command::Surface(s) => (s.common.config(), Some(s)),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    if let Some(s) = surface_args {
        if let Some(v) = s.quantity {
            cfg.quantity = v;
        }
        if let Some(v) = s.generator {
            cfg.generator = v;
        }
        if let Some(v) = s.nodes {
            cfg.nodes = v;
        }
    }
    if let Err(e) = cfg.validate() {
        return usage_error(&e);
    }
    match cli.command {
        Command::Verify(_) => verify(&cfg),
        Command::Surface(_) => surface_cmd(&cfg),
    }
}

fn usage_error(e: &ConfigError) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

fn verify(cfg: &RunConfig) -> i32 {
    let ctx = suites::run(cfg);
    for r in &ctx.rec.reports {
        println!(
            "{} {}/{} max_defect={:e} tolerance={:e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.suite,
            r.check,
            r.max_defect,
            r.tolerance
        );
    }
    let written = (|| -> std::io::Result<()> {
        let mut report = serde_json::to_vec_pretty(&ctx.rec.reports)?;
        report.push(b'\n');
        write_atomic(&cfg.out.join("report.json"), &report)?;
        let mut timings = serde_json::to_vec_pretty(&ctx.rec.timings)?;
        timings.push(b'\n');
        write_atomic(&cfg.out.join("timings.json"), &timings)?;
        for t in &ctx.csvs {
            let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
            write_csv(&cfg.out.join(format!("{}.csv", t.name)), &cols, &t.rows)?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: writing to {}: {e}", cfg.out.display());
        return EXIT_FAIL;
    }
    let failed = ctx.rec.reports.iter().filter(|r| !r.pass).count();
    println!("{} checks, {} failed (fixture {}, seed {})", ctx.rec.reports.len(), failed, cfg.fixture, cfg.seed);
    if failed == 0 {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn surface_cmd(cfg: &RunConfig) -> i32 {
    let grid = match surface::compute(cfg) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    let path = cfg.out.join(format!("{}.csv", grid.name));
    if let Err(e) = write_csv(&path, &grid.columns, &grid.rows) {
        eprintln!("error: writing {}: {e}", path.display());
        return EXIT_FAIL;
    }
    println!("wrote {} rows to {}", grid.rows.len(), path.display());
    EXIT_PASS
}
