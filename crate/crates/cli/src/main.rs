use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fwcut::harness::{self, reports_from_json, reports_to_csv, RunConfig, RunKind, RunReport};
use fwcut::sparsify::{read_edge_stream, SparsifierState};

#[derive(Parser)]
#[command(
    name = "fwcut",
    version,
    about = "Low-memory Max-k-Cut and Max-Agree via Gaussian-sampling Frank-Wolfe"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Max-k-Cut on a GSet graph
    Maxkcut(SolveArgs),
    /// Max-Agree on a signed graph (.jsonl) or a GSet graph via Jaccard labels
    Maxagree(SolveArgs),
    /// Sparsify an `i j w` edge stream from stdin; writes GSet to stdout
    Sparsify(SparsifyArgs),
    /// Merge JSON reports into one CSV (and JSON with --out)
    Report(ReportArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Input graph
    input: Option<PathBuf>,
    /// key = value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    shadow: bool,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// LMO failure probability
    #[arg(long)]
    p: Option<f64>,
    /// Jaccard offset for GSet inputs to Max-Agree
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    dataset: Option<String>,
    /// Output stem; writes <stem>.csv and <stem>.json
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SparsifyArgs {
    #[arg(long)]
    tau: f64,
    /// Vertex count; may instead come from an `n m` header line
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report files
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(kind: RunKind, a: &SolveArgs) -> fwcut::Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let c = RunConfig::from_file(p)?;
            if c.kind != kind {
                return Err(fwcut::Error::InvalidConfig(format!(
                    "config file is for {:?}, subcommand is {kind:?}",
                    c.kind
                )));
            }
            c
        }
        None => RunConfig::new(kind),
    };
    if let Some(p) = &a.input {
        cfg.input = Some(p.clone());
    }
    if let Some(v) = a.eps {
        cfg.eps = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.reps {
        cfg.reps = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if a.tau.is_some() {
        cfg.tau = a.tau;
    }
    if a.shadow {
        cfg.shadow = true;
    }
    if let Some(v) = a.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = a.eta {
        cfg.eta = v;
    }
    if a.p.is_some() {
        cfg.fail_prob = a.p;
    }
    if let Some(v) = a.delta {
        cfg.jaccard_delta = v;
    }
    if let Some(v) = &a.dataset {
        cfg.dataset = Some(v.clone());
    }
    if let Some(v) = &a.out {
        cfg.out = Some(v.clone());
    }
    if cfg.input.is_none() {
        return Err(fwcut::Error::InvalidConfig("no input graph given".into()));
    }
    Ok(cfg)
}

fn write_reports(reports: &[RunReport], out: Option<&PathBuf>) -> fwcut::Result<()> {
    match out {
        Some(stem) => {
            let (c, j) = harness::emit_report(reports, stem)?;
            eprintln!("wrote {} and {}", c.display(), j.display());
        }
        None => print!("{}", reports_to_csv(reports)?),
    }
    Ok(())
}

fn solve(kind: RunKind, a: &SolveArgs) -> fwcut::Result<ExitCode> {
    let cfg = build_config(kind, a)?;
    let report = harness::run(&cfg)?;
    write_reports(std::slice::from_ref(&report), cfg.out.as_ref())?;
    if report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "not converged after {} iterations (gap {:.4e} > {:.4e})",
            report.iterations, report.final_gap, report.gap_tolerance
        );
        Ok(ExitCode::from(2))
    }
}

fn sparsify(a: &SparsifyArgs) -> fwcut::Result<ExitCode> {
    let mut text = String::new();
    io::stdin().lock().read_to_string(&mut text)?;
    let mut body = text.as_str();
    let n = match a.n {
        Some(n) => n,
        None => {
            let (first, rest) = body.split_once('\n').unwrap_or((body, ""));
            let f: Vec<&str> = first.split_whitespace().collect();
            if f.len() != 2 {
                return Err(fwcut::Error::InvalidConfig(
                    "pass --n or start the stream with an `n m` header".into(),
                ));
            }
            body = rest;
            f[0].parse()
                .map_err(|_| fwcut::Error::InvalidConfig(format!("bad vertex count `{}`", f[0])))?
        }
    };
    let mut state = SparsifierState::new(n, a.tau, a.seed)?;
    for e in read_edge_stream(body.as_bytes()) {
        let (i, j, w) = e?;
        state.ingest(i, j, w)?;
    }
    let g = state.finalize();
    eprintln!(
        "kept {} of {} edges (budget {})",
        g.num_edges(),
        state.edges_seen(),
        state.budget()
    );
    match &a.out {
        Some(p) => fs::write(p, g.to_gset())?,
        None => io::stdout().write_all(g.to_gset().as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn report(a: &ReportArgs) -> fwcut::Result<ExitCode> {
    let mut all = Vec::new();
    for p in &a.inputs {
        all.extend(reports_from_json(&fs::read_to_string(p)?)?);
    }
    write_reports(&all, a.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Maxkcut(a) => solve(RunKind::MaxKCut, a),
        Cmd::Maxagree(a) => solve(RunKind::MaxAgree, a),
        Cmd::Sparsify(a) => sparsify(a),
        Cmd::Report(a) => report(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
