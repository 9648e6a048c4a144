//! `pipecheck`: verify, slice and export distributed switch pipeline systems.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pipecheck::checker::{check_trace, export_promela, Config, Trace};
use pipecheck::pir::print_program;
use pipecheck::pruner::{slice_system, SliceOptions};
use pipecheck::semantics::Bounds;
use pipecheck::workflow::{load_system, prepare, verify, VerifyOptions};

const USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pipecheck", version, about = "Model-check systems of programmable switch pipelines")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Explore every run of the system and check its properties.
    Verify(VerifyArgs),
    /// Slice every device program and report what was removed.
    Prune(PruneArgs),
    /// Write the system as a Promela model.
    Export(ExportArgs),
    /// Re-check a JSON trace against the system.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Specification file.
    spec: PathBuf,
    /// Explore the programs as written.
    #[arg(long)]
    no_slice: bool,
    /// Ingress queue capacity per device.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    qin: u64,
    /// Egress queue capacity per device.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    qeg: u64,
    /// Recirculations allowed per packet.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=u32::MAX as u64))]
    recirc_bound: u64,
}

impl ModelArgs {
    fn options(&self) -> VerifyOptions {
        let d = Bounds::default();
        VerifyOptions {
            slice: !self.no_slice,
            slicing: SliceOptions::default(),
            bounds: Bounds { q_in: self.qin as usize, q_eg: self.qeg as usize, recirc: self.recirc_bound as u32, drain: d.drain },
            explore: Config::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TraceFormat {
    Human,
    Json,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Stop with a resource verdict after this many states.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    /// Format of the trace printed on standard output.
    #[arg(long, value_enum, default_value = "human")]
    trace: TraceFormat,
    /// Also write the trace to this file.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the slicing report (JSON) to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the explored system as Promela to this file.
    #[arg(long)]
    export: Option<PathBuf>,
    /// Generate successors on the thread pool.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args, Debug)]
struct PruneArgs {
    /// Specification file.
    spec: PathBuf,
    /// Skip the back-edge phase.
    #[arg(long)]
    no_phase2: bool,
    /// Directory for the sliced programs, one `<alias>.pir` each. Printed otherwise.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, hide = true)]
    no_slice: bool,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output `.pml` file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// JSON trace written by `verify --trace json` or `--trace-out`.
    trace: PathBuf,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8> {
    let mut opts = a.model.options();
    opts.explore.budget = a.budget as usize;
    opts.explore.parallel = a.parallel;
    let rs = load_system(&a.model.spec)?;
    let r = verify(&rs, &opts)?;
    if let Some(p) = &a.export {
        let (text, _) = export_promela(&r.model);
        write_file(p, &text)?;
    }
    if let (Some(p), Some(rep)) = (&a.report, &r.report) {
        write_file(p, &serde_json::to_string_pretty(rep)?)?;
    } else if a.report.is_some() {
        eprintln!("warning: --report ignored with --no-slice");
    }
    let text = match a.trace {
        TraceFormat::Human => r.trace.to_human(),
        TraceFormat::Json => r.trace.to_json() + "\n",
    };
    if let Some(p) = &a.trace_out {
        write_file(p, &text)?;
    }
    print!("{text}");
    Ok(r.verdict.outcome.exit_code() as u8)
}

fn cmd_prune(a: &PruneArgs) -> Result<u8> {
    if a.no_slice {
        return Err(Usage("prune always slices; --no-slice is only accepted by verify, export and replay".into()).into());
    }
    let rs = load_system(&a.spec)?;
    let s = slice_system(&rs, SliceOptions { phase2: !a.no_phase2 })?;
    for w in &s.report.warnings {
        eprintln!("warning: {w}");
    }
    let report = serde_json::to_string_pretty(&s.report)? + "\n";
    match &a.out_dir {
        Some(d) => {
            std::fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
            for (alias, p) in s.spec.aliases.iter().zip(&s.spec.programs) {
                write_file(&d.join(format!("{alias}.pir")), &print_program(p))?;
            }
        }
        None => {
            for (alias, p) in s.spec.aliases.iter().zip(&s.spec.programs) {
                println!("// {alias}\n{}", print_program(p));
            }
        }
    }
    match &a.report {
        Some(p) => write_file(p, &report)?,
        None => print!("{report}"),
    }
    Ok(0)
}

fn cmd_export(a: &ExportArgs) -> Result<u8> {
    let rs = load_system(&a.model.spec)?;
    let (model, _) = prepare(&rs, &a.model.options())?;
    let (text, sum) = export_promela(&model);
    write_file(&a.output, &text)?;
    println!("wrote {}", a.output.display());
    println!("processes: {}", sum.processes.join(", "));
    println!("channels: {}", sum.channels.join(", "));
    println!("ltl blocks: {}", sum.ltl_blocks);
    Ok(0)
}

fn cmd_replay(a: &ReplayArgs) -> Result<u8> {
    let text = std::fs::read_to_string(&a.trace).with_context(|| format!("cannot read {}", a.trace.display()))?;
    let trace = Trace::from_json(&text).with_context(|| format!("{}: not a JSON trace", a.trace.display()))?;
    let rs = load_system(&a.model.spec)?;
    let (mut model, _) = prepare(&rs, &a.model.options())?;
    match check_trace(&mut model, &trace) {
        Ok(_) => {
            match &trace.property {
                Some(p) => println!("confirmed: {} ({p}) after {} steps", trace.verdict, trace.replay.labels.len()),
                None => println!("confirmed: {} after {} steps", trace.verdict, trace.replay.labels.len()),
            }
            Ok(0)
        }
        Err(e) => {
            println!("not confirmed: {e}");
            Ok(1)
        }
    }
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let res = match &cli.cmd {
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Prune(a) => cmd_prune(a),
        Cmd::Export(a) => cmd_export(a),
        Cmd::Replay(a) => cmd_replay(a),
    };
    let _ = std::io::stdout().flush();
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if e.is::<Usage>() {
                eprintln!("usage error: {e}");
            } else {
                eprintln!("error: {}", chain(&e));
            }
            ExitCode::from(USAGE)
        }
    }
}

// Sources already spelled out by their parent are skipped.
fn chain(e: &anyhow::Error) -> String {
    let mut out: Vec<String> = Vec::new();
    for c in e.chain() {
        let t = c.to_string();
        if !out.last().is_some_and(|p| p.contains(&t)) {
            out.push(t);
        }
    }
    out.join(": ")
}
