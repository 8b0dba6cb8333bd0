//! End-to-end pipelines and run reports.
//!
//! A run builds the cost, solves the penalized relaxation, repairs the
//! samples and keeps the best of `reps` roundings. `sdp_value` is the
//! relaxation value of the returned iterate in the units of the rounded
//! objective, so `AR = best_value / sdp_value`.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{jaccard_signed_graph, read_gset, SignedGraph, WeightedGraph};
use crate::penalty::{linear_value, DEFAULT_ETA};
use crate::rounding::{repair_samples, round_maxagree, round_maxkcut};
use crate::sampler::{fw_gaussian, Problem, SolverOptions, SolverOutput};
use crate::sparsify::SparsifierState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    MaxKCut,
    MaxAgree,
}

impl FromStr for RunKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maxkcut" | "kcut" | "max-k-cut" => Ok(RunKind::MaxKCut),
            "maxagree" | "max-agree" | "cc" => Ok(RunKind::MaxAgree),
            _ => Err(Error::InvalidConfig(format!("unknown problem `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: RunKind,
    pub input: Option<PathBuf>,
    /// Report label; defaults to the input file stem.
    pub dataset: Option<String>,
    pub k: usize,
    pub eps: f64,
    pub eta: f64,
    /// LMO failure probability override.
    pub fail_prob: Option<f64>,
    pub max_iters: usize,
    /// Rounding replications.
    pub reps: usize,
    /// Samples per Max-Agree rounding (2 or 3).
    pub cc_samples: usize,
    pub seed: u64,
    /// Sparsify the input to this closeness before solving.
    pub tau: Option<f64>,
    /// Jaccard `δ` when a GSet graph feeds Max-Agree.
    pub jaccard_delta: f64,
    pub shadow: bool,
    pub max_lanczos_steps: usize,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(kind: RunKind) -> Self {
        Self {
            kind,
            input: None,
            dataset: None,
            k: 2,
            eps: 0.05,
            eta: DEFAULT_ETA,
            fail_prob: None,
            max_iters: 2_000_000,
            reps: 10,
            cc_samples: 2,
            seed: 0,
            tau: None,
            jaccard_delta: 0.05,
            shadow: false,
            max_lanczos_steps: 64,
            out: None,
        }
    }

    /// Parse a flat `key = value` file. `#` starts a comment. The `problem`
    /// key is required.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::parse(idx + 1, format!("expected `key = value`, got `{line}`"))
            })?;
            pairs.push((idx + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let kind = pairs
            .iter()
            .find(|(_, k, _)| k == "problem")
            .ok_or_else(|| Error::InvalidConfig("missing `problem` key".into()))?
            .2
            .parse()?;
        let mut cfg = Self::new(kind);
        for (line, k, v) in pairs {
            cfg.set(&k, &v)
                .map_err(|e| Error::parse(line, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_kv(&fs::read_to_string(path)?)
    }

    /// Apply one setting by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value `{v}` for `{key}`")))
        }
        match key {
            "problem" => self.kind = value.parse()?,
            "input" => self.input = Some(PathBuf::from(value)),
            "dataset" => self.dataset = Some(value.to_string()),
            "k" => self.k = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "eta" => self.eta = num(key, value)?,
            "p" | "fail_prob" => self.fail_prob = Some(num(key, value)?),
            "max_iters" => self.max_iters = num(key, value)?,
            "reps" => self.reps = num(key, value)?,
            "cc_samples" => self.cc_samples = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "tau" => self.tau = Some(num(key, value)?),
            "jaccard_delta" => self.jaccard_delta = num(key, value)?,
            "shadow" => self.shadow = num(key, value)?,
            "max_lanczos_steps" => self.max_lanczos_steps = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let eps_max = match self.kind {
            RunKind::MaxKCut => 0.2,
            RunKind::MaxAgree => 1.0 / 7.0,
        };
        if !(self.eps > 0.0 && self.eps < eps_max) {
            return Err(Error::InvalidConfig(format!(
                "eps must lie in (0, {eps_max:.4}), got {}",
                self.eps
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if self.kind == RunKind::MaxKCut && self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.kind == RunKind::MaxAgree && !(2..=3).contains(&self.cc_samples) {
            return Err(Error::InvalidConfig(format!(
                "cc_samples must be 2 or 3, got {}",
                self.cc_samples
            )));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be at least 1".into()));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "tau must lie in (0, 1), got {t}"
                )));
            }
        }
        if let Some(p) = self.fail_prob {
            if !(p > 0.0 && p <= 0.5) {
                return Err(Error::InvalidConfig(format!(
                    "p must lie in (0, 1/2], got {p}"
                )));
            }
        }
        if !(self.jaccard_delta > 0.0 && self.jaccard_delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "jaccard_delta must lie in (0, 1), got {}",
                self.jaccard_delta
            )));
        }
        Ok(())
    }

    fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.input
                .as_ref()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "inline".into())
        })
    }

    fn solver_options(&self, samples: usize) -> SolverOptions {
        SolverOptions {
            samples,
            max_iters: self.max_iters,
            fail_prob: self.fail_prob,
            max_lanczos_steps: self.max_lanczos_steps,
            shadow: self.shadow,
            trace_stride: 1000,
            seed: self.seed,
        }
    }
}

/// One row of Table-1/Table-2 style output plus run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub kind: RunKind,
    pub v: usize,
    /// `|E|` for Max-k-Cut, `|E⁺|` for Max-Agree.
    pub e_plus: usize,
    pub e_minus: Option<usize>,
    pub k: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub infeas: f64,
    pub sdp_value: f64,
    pub best_value: f64,
    pub ar: f64,
    pub memory_words: usize,
    pub seed: u64,
    pub wall_ms: f64,
    pub final_gap: f64,
    pub gap_tolerance: f64,
    /// `⌈2βMn²(1+η)/(ε·gap_scale)⌉ − 2` at the configured `η`.
    pub iteration_bound: f64,
    /// The closed-form `c·log(2n+|E|)·n²/ε²`.
    pub closed_form_bound: f64,
    pub lanczos_iters: usize,
    /// Edges handed to the solver (differs from the input after
    /// sparsification).
    pub solved_edges: usize,
}

impl RunReport {
    /// Equal up to wall time.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        let mut a = self.clone();
        a.wall_ms = other.wall_ms;
        a == *other
    }
}

fn ratio(best: f64, sdp: f64) -> f64 {
    if sdp == 0.0 {
        if best == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        best / sdp
    }
}

/// Read the configured input as a weighted graph (GSet format).
pub fn load_graph(cfg: &RunConfig) -> Result<WeightedGraph> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no input path".into()))?;
    read_gset(BufReader::new(fs::File::open(path)?))
}

/// Read the configured input as a signed graph: `.jsonl` files hold signed
/// edge records, anything else is GSet converted with the Jaccard rule.
pub fn load_signed_graph(cfg: &RunConfig) -> Result<SignedGraph> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no input path".into()))?;
    if path.extension().is_some_and(|e| e == "jsonl") {
        SignedGraph::from_jsonl(&fs::read_to_string(path)?, None)
    } else {
        let g = read_gset(BufReader::new(fs::File::open(path)?))?;
        jaccard_signed_graph(&g, cfg.jaccard_delta)
    }
}

pub fn run_maxkcut(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let g = load_graph(cfg)?;
    run_maxkcut_on(&g, cfg)
}

pub fn run_maxagree(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let sg = load_signed_graph(cfg)?;
    run_maxagree_on(&sg, cfg)
}

fn sparsified(g: &WeightedGraph, tau: f64, seed: u64) -> Result<(WeightedGraph, usize)> {
    let mut s = SparsifierState::new(g.n(), tau, seed)?;
    let mut peak = 0;
    for e in g.edges() {
        s.ingest(e.i, e.j, e.w)?;
        peak = peak.max(s.words());
    }
    Ok((s.finalize(), peak))
}

/// Words live after the solver returns: cost, image, the samples and their
/// repaired copy, and one label vector.
fn post_solve_words(p: &Problem, out: &SolverOutput) -> usize {
    p.cost.words() + out.image.words() + 2 * out.samples.words() + p.n()
}

/// Max-k-Cut on an in-memory graph. With `tau` set, the solver sees a
/// sparsified copy while cuts are evaluated on `g` itself.
pub fn run_maxkcut_on(g: &WeightedGraph, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (solve_graph, sparse_words) = match cfg.tau {
        Some(t) => {
            let (h, w) = sparsified(g, t, cfg.seed)?;
            (Some(h), w)
        }
        None => (None, 0),
    };
    let sg = solve_graph.as_ref().unwrap_or(g);
    let problem = Problem::max_k_cut(sg, cfg.k, cfg.eps, cfg.eta)?;
    let mut out = fw_gaussian(&problem, &cfg.solver_options(cfg.reps * cfg.k))?;
    let zf = repair_samples(&out.samples, &out.image, &problem.config, &mut out.rng)?;
    let best = round_maxkcut(g, &zf, cfg.k)?;
    let sdp_value = linear_value(&out.image, &problem.cost);
    let memory_words = out
        .stats
        .peak_words
        .max(post_solve_words(&problem, &out))
        .max(sparse_words);
    Ok(RunReport {
        dataset: cfg.dataset_name(),
        kind: RunKind::MaxKCut,
        v: g.n(),
        e_plus: g.num_edges(),
        e_minus: None,
        k: Some(cfg.k),
        iterations: out.stats.iterations,
        converged: out.stats.converged,
        infeas: out.stats.infeasibility,
        sdp_value,
        best_value: best.best_value,
        ar: ratio(best.best_value, sdp_value),
        memory_words,
        seed: cfg.seed,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        final_gap: out.stats.final_gap,
        gap_tolerance: out.stats.gap_tolerance,
        iteration_bound: problem.config.iteration_bound(),
        closed_form_bound: problem.config.closed_form_iteration_bound(),
        lanczos_iters: out.stats.lanczos_iters,
        solved_edges: sg.num_edges(),
    })
}

/// Max-Agree on an in-memory signed graph. `⟨L⁻ + W⁺, X⟩` counts every
/// edge twice, so `sdp_value` is half of it.
pub fn run_maxagree_on(sg: &SignedGraph, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    if cfg.tau.is_some() {
        return Err(Error::InvalidConfig(
            "sparsification applies to Max-k-Cut inputs only".into(),
        ));
    }
    let start = Instant::now();
    let problem = Problem::max_agree(sg, cfg.eps, cfg.eta)?;
    let s = cfg.cc_samples;
    let mut out = fw_gaussian(&problem, &cfg.solver_options(cfg.reps * s))?;
    let zf = repair_samples(&out.samples, &out.image, &problem.config, &mut out.rng)?;
    let best = round_maxagree(sg, &zf, s)?;
    let sdp_value = 0.5 * linear_value(&out.image, &problem.cost);
    let memory_words = out.stats.peak_words.max(post_solve_words(&problem, &out));
    Ok(RunReport {
        dataset: cfg.dataset_name(),
        kind: RunKind::MaxAgree,
        v: sg.n(),
        e_plus: sg.plus_edges().len(),
        e_minus: Some(sg.minus_edges().len()),
        k: None,
        iterations: out.stats.iterations,
        converged: out.stats.converged,
        infeas: out.stats.infeasibility,
        sdp_value,
        best_value: best.best_value,
        ar: ratio(best.best_value, sdp_value),
        memory_words,
        seed: cfg.seed,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        final_gap: out.stats.final_gap,
        gap_tolerance: out.stats.gap_tolerance,
        iteration_bound: problem.config.iteration_bound(),
        closed_form_bound: problem.config.closed_form_iteration_bound(),
        lanczos_iters: out.stats.lanczos_iters,
        solved_edges: sg.num_edges(),
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    match cfg.kind {
        RunKind::MaxKCut => run_maxkcut(cfg),
        RunKind::MaxAgree => run_maxagree(cfg),
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "dataset",
    "V",
    "Eplus",
    "Eminus",
    "k",
    "iterations",
    "infeas",
    "sdp_value",
    "best_value",
    "AR",
    "memory_words",
    "seed",
    "wall_ms",
];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    dataset: String,
    #[serde(rename = "V")]
    v: usize,
    #[serde(rename = "Eplus")]
    e_plus: usize,
    #[serde(rename = "Eminus")]
    e_minus: Option<usize>,
    k: Option<usize>,
    iterations: usize,
    infeas: f64,
    sdp_value: f64,
    best_value: f64,
    #[serde(rename = "AR")]
    ar: f64,
    memory_words: usize,
    seed: u64,
    wall_ms: f64,
}

impl From<&RunReport> for CsvRow {
    fn from(r: &RunReport) -> Self {
        Self {
            dataset: r.dataset.clone(),
            v: r.v,
            e_plus: r.e_plus,
            e_minus: r.e_minus,
            k: r.k,
            iterations: r.iterations,
            infeas: r.infeas,
            sdp_value: r.sdp_value,
            best_value: r.best_value,
            ar: r.ar,
            memory_words: r.memory_words,
            seed: r.seed,
            wall_ms: r.wall_ms,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidConfig(format!("csv: {other:?}")),
    }
}

pub fn reports_to_csv(reports: &[RunReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::InvalidConfig("no reports to emit".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow::from(r)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn reports_to_json(reports: &[RunReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::InvalidConfig("no reports to emit".into()));
    }
    Ok(serde_json::to_string_pretty(reports)?)
}

pub fn reports_from_json(text: &str) -> Result<Vec<RunReport>> {
    Ok(serde_json::from_str(text)?)
}

/// Write `<stem>.csv` and `<stem>.json`; returns both paths.
pub fn emit_report(reports: &[RunReport], stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");
    fs::write(&csv_path, reports_to_csv(reports)?)?;
    fs::write(&json_path, reports_to_json(reports)?)?;
    Ok((csv_path, json_path))
}
