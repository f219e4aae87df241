use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dyncover::cli::{
    gen_instance, parse_trace, run_trace, GenParams, Header, Kind, Mode, RadiusDist, RunParams,
    Trace,
};

#[derive(Parser)]
#[command(
    name = "dyncover",
    version,
    about = "Dynamic vertex cover and matching on geometric intersection graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random update trace.
    Gen {
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a trace (or a freshly generated one) and emit per-step CSV.
    Run {
        /// Trace file; generated from the shape and generator flags when absent.
        trace: Option<PathBuf>,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Vertex cover preset: disks, fat, rect or bipartite.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run the exact oracle every this many steps (0: only at queries).
        #[arg(long, default_value_t = 50)]
        oracle_every: usize,
        /// Write zero in the ns column.
        #[arg(long)]
        no_timing: bool,
        /// CSV output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ShapeArgs {
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    kind: Option<Kind>,
    #[arg(long)]
    dim: Option<usize>,
    /// Tag objects with sides L and R.
    #[arg(long)]
    bipartite: bool,
}

impl ShapeArgs {
    fn header(&self) -> Result<Header> {
        let kind = self.kind.unwrap_or(Kind::Disk);
        let dim = self.dim.unwrap_or(if kind == Kind::Box { 3 } else { 2 });
        Header::new(self.mode.unwrap_or(Mode::Vc), kind, dim, self.bipartite)
            .map_err(anyhow::Error::msg)
    }

    fn check_against(&self, h: &Header) -> Result<()> {
        if self.mode.is_some_and(|m| m != h.mode)
            || self.kind.is_some_and(|k| k != h.kind)
            || self.dim.is_some_and(|d| d != h.dim)
            || (self.bipartite && !h.bipartite)
        {
            bail!("flags disagree with the trace header {h}");
        }
        Ok(())
    }
}

#[derive(Args)]
struct GenArgs {
    /// Number of insertions.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Probability that a step deletes instead of inserting.
    #[arg(long, default_value_t = 0.0)]
    churn: f64,
    #[arg(long)]
    max_live: Option<usize>,
    #[arg(long, default_value_t = 30.0)]
    range: f64,
    /// uniform:LO:HI or power:MIN:SPREAD[:ALPHA].
    #[arg(long, default_value = "uniform:0.5:2")]
    radius: RadiusDist,
}

impl GenArgs {
    fn params(&self) -> GenParams {
        GenParams {
            range: self.range,
            radius: self.radius,
            churn: self.churn,
            max_live: self.max_live,
        }
    }
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Gen {
            shape,
            gen,
            seed,
            out,
        } => {
            let trace = gen_instance(shape.header()?, gen.n, seed, &gen.params())?;
            let mut w = output(out.as_ref())?;
            write!(w, "{trace}")?;
            w.flush()?;
            Ok(true)
        }
        Command::Run {
            trace,
            shape,
            gen,
            eps,
            preset,
            gamma,
            delta,
            seed,
            oracle_every,
            no_timing,
            out,
        } => {
            let trace: Trace = match &trace {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let t = parse_trace(&text)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    shape.check_against(&t.header)?;
                    t
                }
                None => gen_instance(shape.header()?, gen.n, seed, &gen.params())?,
            };
            let params = RunParams {
                eps,
                preset,
                gamma,
                delta,
                seed,
                oracle_every,
                timing: !no_timing,
                ..RunParams::default()
            };
            let report = run_trace(&trace, &params)?;
            let mut w = output(out.as_ref())?;
            report.write_csv(&mut w)?;
            w.flush()?;
            let s = &report.summary;
            eprintln!(
                "steps={} valid={} max_ratio={:.4} samples={} exhausted={} rebuilds={} guess_switches={}",
                s.steps,
                s.all_valid,
                s.max_ratio,
                s.samples,
                s.exhausted,
                s.rebuilds,
                s.guess_switches
            );
            Ok(s.all_valid)
        }
    }
}
