//! `lg`: compute, analyze and verify Links-Gould polynomials of the
//! Allen-Swenberg links.
//!
//! Standard output carries only the requested artifact; warnings and
//! progress go to standard error. Exit codes: 0 success, 1 failed check or
//! internal error, 2 usage error.

mod latex;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use lg_core::analysis::{genus_with_span, predicted_extremes, summarize, GenusReport, TermSummary};
use lg_core::extract::{Extractor, TraceTriple};
use lg_core::pipeline::{q1_check, CacheStatus};
use lg_core::verify::Suite;
use lg_core::{Constants, Error, LaurentPoly, Pipeline, PowerStrategy, ResultCache};

#[derive(Parser)]
#[command(
    name = "lg",
    version,
    about = "Exact Links-Gould polynomials of the Allen-Swenberg links AS(n)",
    after_help = "Results are cached in $LG_CACHE_DIR, else $XDG_CACHE_HOME/lg-as, else ~/.cache/lg-as."
)]
struct Cli {
    /// Constants file to use instead of the bundled one.
    #[arg(long, global = true, value_name = "PATH")]
    constants: Option<PathBuf>,

    /// Neither read nor write the result cache.
    #[arg(long, global = true)]
    no_cache: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print LG(AS(n)).
    Compute {
        #[command(flatten)]
        n: NArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, value_enum, default_value_t = Strategy::Split)]
        power_strategy: Strategy,
    },
    /// Extremal terms, s-span and genus of AS(n), as JSON.
    Analyze {
        #[command(flatten)]
        n: NArg,
    },
    /// Basis coordinates from the right, top and twisted right traces.
    Extract {
        #[arg(allow_hyphen_values = true)]
        tr_r: String,
        #[arg(allow_hyphen_values = true)]
        tr_t: String,
        #[arg(allow_hyphen_values = true)]
        tr_twisted_r: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the consistency suite for n = 1..=max-n.
    Verify {
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        max_n: u64,
    },
    /// CSV of n, leading, trailing, span, genus, q1_check.
    Table {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        from: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        to: u64,
        /// Output file, or `-` for standard output.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the two-Hopf-link baseline AS*(ll).
    Baseline {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct NArg {
    /// Number of clasps; signed so that a negative value is reported as a
    /// usage error rather than an unknown flag.
    #[arg(long, allow_negative_numbers = true)]
    n: i64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Split,
    Binary,
    Sequential,
}

impl From<Strategy> for PowerStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Split => PowerStrategy::Split,
            Strategy::Binary => PowerStrategy::Binary,
            Strategy::Sequential => PowerStrategy::Sequential,
        }
    }
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Check(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Check(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Check(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn load_constants(path: Option<&PathBuf>) -> Result<Constants, Failure> {
    match path {
        None => Ok(Constants::builtin().clone()),
        Some(p) => Constants::load(p).map_err(|e| match e {
            Error::Io(io) => Failure::Usage(format!("cannot read constants file {}: {io}", p.display())),
            other => Failure::Check(format!("{}: {other}", p.display())),
        }),
    }
}

fn require_n(n: i64, min: i64) -> Result<u64, Failure> {
    if n < min {
        return Err(Failure::Usage(format!("--n must be at least {min}, got {n}")));
    }
    Ok(n as u64)
}

fn run(cli: Cli) -> Outcome {
    let constants = load_constants(cli.constants.as_ref())?;
    let cache = if cli.no_cache { None } else { ResultCache::from_env() };
    let pipeline = Pipeline::new(&constants).with_cache(cache);
    match cli.command {
        Command::Compute { n, format, power_strategy } => {
            let n = require_n(n.n, 0)?;
            compute(pipeline.with_strategy(power_strategy.into()), n, format)
        }
        Command::Analyze { n } => analyze(&pipeline, require_n(n.n, 1)?),
        Command::Extract {
            tr_r,
            tr_t,
            tr_twisted_r,
            format,
        } => extract(&constants, [&tr_r, &tr_t, &tr_twisted_r], format),
        Command::Verify { max_n } => verify(pipeline, max_n),
        Command::Table { from, to, out } => table(&pipeline, from, to, &out),
        Command::Baseline { format } => {
            let b = pipeline.baseline_hh();
            emit_poly(&b, format, None)
        }
    }
}

#[derive(Serialize)]
struct PolyDocument<'a> {
    n: Option<u64>,
    checksum: Option<&'a str>,
    strategy: Option<PowerStrategy>,
    terms: usize,
    polynomial: &'a LaurentPoly,
}

fn emit_poly(p: &LaurentPoly, format: Format, meta: Option<(u64, &str, PowerStrategy)>) -> Outcome {
    let mut out = BufWriter::with_capacity(1 << 20, io::stdout().lock());
    match format {
        Format::Text => writeln!(out, "{p}")?,
        Format::Latex => writeln!(out, "{}", latex::render(p))?,
        Format::Json => {
            let doc = PolyDocument {
                n: meta.map(|m| m.0),
                checksum: meta.map(|m| m.1),
                strategy: meta.map(|m| m.2),
                terms: p.len(),
                polynomial: p,
            };
            serde_json::to_writer(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn report_cache(status: &CacheStatus) {
    if let CacheStatus::StoreFailed(reason) = status {
        eprintln!("warning: result not cached: {reason}");
    }
}

fn compute(pipeline: Pipeline<'_>, n: u64, format: Format) -> Outcome {
    let r = pipeline.lg_as(n);
    if r.is_extrapolation() {
        eprintln!("warning: n = 0 is an extrapolation outside the AS family; the result is the closure AS*(cc)");
    }
    report_cache(&r.cache);
    let meta = (r.n, r.provenance.checksum.as_str(), r.provenance.strategy);
    emit_poly(&r.polynomial, format, Some(meta))
}

#[derive(Serialize)]
struct Analysis {
    n: u64,
    summary: TermSummary,
    predicted: TermSummary,
    closed_form_holds: bool,
    genus: GenusReport,
}

fn analyze(pipeline: &Pipeline<'_>, n: u64) -> Outcome {
    let r = pipeline.lg_as(n);
    report_cache(&r.cache);
    let summary = summarize(&r.polynomial)?;
    let predicted = predicted_extremes(n);
    let doc = Analysis {
        n,
        closed_form_holds: summary == predicted,
        genus: genus_with_span(n, Some(summary.s_span)),
        summary,
        predicted,
    };
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

fn extract(constants: &Constants, inputs: [&String; 3], format: Format) -> Outcome {
    let mut polys = Vec::with_capacity(3);
    for (name, text) in ["tr_r", "tr_t", "tr_twisted_r"].into_iter().zip(inputs) {
        polys.push(
            text.parse::<LaurentPoly>()
                .map_err(|e| Failure::Usage(format!("{name}: {e}")))?,
        );
    }
    let [r, t, w]: [LaurentPoly; 3] = polys.try_into().expect("three inputs");
    let v = Extractor::new(constants).extract(&TraceTriple::new(r, t, w))?;
    let mut out = io::stdout().lock();
    match format {
        Format::Json => {
            serde_json::to_writer(&mut out, &v)?;
            writeln!(out)?;
        }
        Format::Latex => {
            let [ll, cc, xx] = v.coords();
            writeln!(
                out,
                "\\left({}\\right) \\mathrm{{ll}} + \\left({}\\right) \\mathrm{{cc}} + \\left({}\\right) \\mathrm{{xx}}",
                latex::render(ll),
                latex::render(cc),
                latex::render(xx)
            )?;
        }
        Format::Text => writeln!(out, "{v}")?,
    }
    Ok(())
}

fn verify(pipeline: Pipeline<'_>, max_n: u64) -> Outcome {
    let checksum = pipeline.constants().checksum().to_string();
    let mut out = io::stdout().lock();
    writeln!(out, "constants {checksum}")?;
    let mut write_err = None;
    let checks = Suite::new(pipeline, max_n).run(|c| {
        if let Err(e) = writeln!(out, "{c}").and_then(|_| out.flush()) {
            write_err.get_or_insert(e);
        }
    });
    if let Some(e) = write_err {
        return Err(e.into());
    }
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
    writeln!(out, "{} of {} checks passed", checks.len() - failed.len(), checks.len())?;
    match failed.first() {
        None => Ok(()),
        Some(c) => Err(Failure::Check(format!(
            "{} failed: {}",
            c.name,
            c.outcome.as_ref().err().map_or("", String::as_str)
        ))),
    }
}

fn row(pipeline: &Pipeline<'_>, n: u64) -> Result<[String; 6], Failure> {
    let r = pipeline.lg_as(n);
    report_cache(&r.cache);
    let s = summarize(&r.polynomial)?;
    let g = genus_with_span(n, Some(s.s_span));
    Ok([
        n.to_string(),
        s.leading.to_string(),
        s.trailing.to_string(),
        s.s_span.to_string(),
        g.genus.to_string(),
        q1_check(&r.polynomial).to_string(),
    ])
}

fn table(pipeline: &Pipeline<'_>, from: u64, to: u64, out: &PathBuf) -> Outcome {
    if from > to {
        return Err(Failure::Usage(format!("empty range: --from {from} > --to {to}")));
    }
    // Rows are computed in any order and written in index order.
    let rows: Vec<_> = (from..=to).into_par_iter().map(|n| row(pipeline, n)).collect();
    let sink: Box<dyn Write> = if out.as_os_str() == "-" {
        Box::new(io::stdout().lock())
    } else {
        Box::new(File::create(out).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out.display())))?)
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["n", "leading", "trailing", "span", "genus", "q1_check"])
        .map_err(|e| Failure::Check(e.to_string()))?;
    for r in rows {
        w.write_record(&r?).map_err(|e| Failure::Check(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
