//! The `privshare` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input,
//! 3 topology not admissible for the coalition, 4 topology check failed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adversary::{attack, AdversaryView, AttackReport, RECOVERY_TOL};
use crate::error::{Error, Result};
use crate::graph::{FailureReport, Topology};
use crate::obfuscation::obfuscate;
use crate::optimizer::{
    run, seeded_stream, write_metrics_csv, MetricsRow, RunOutput, Scenario, ScenarioSpec, STREAM_VERIFIER,
};
use crate::polynomial::Polynomial;
use crate::privacy::{end_to_end_indistinguishability, verify_scenario, with_problem, VerifierReport};
use crate::scenarios;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_ADMISSIBLE: i32 = 3;
pub const EXIT_TOPOLOGY: i32 = 4;

/// Environment variable that overrides the scenario seed.
pub const SEED_ENV: &str = "PRIVSHARE_SEED";

#[derive(Debug, Parser)]
#[command(name = "privshare", version, about = "Function-sharing private distributed optimization")]
pub struct Cli {
    /// Override the scenario seed (takes precedence over PRIVSHARE_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the scenario iteration count.
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol; writes trace.csv, metrics.csv and report.json.
    Simulate {
        /// Scenario file, or the name of a shipped scenario.
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the protocol, then the coalition's gradient-inversion attack.
    Attack {
        scenario: String,
        /// Comma-separated coalition replacing the scenario's.
        #[arg(long, value_delimiter = ',')]
        coalition: Option<Vec<usize>>,
        /// Gradient degree the adversary fits.
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Construct indistinguishable alternatives for random objective splits.
    VerifyPrivacy {
        scenario: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Connectivity figures, admissibility and privacy-loss findings.
    CheckTopology {
        /// Topology file or scenario file.
        topology: String,
        /// Coalition size to test; defaults to the scenario coalition size, else 1.
        #[arg(long)]
        f: Option<usize>,
    },
    /// Reproduce a published result and compare against it.
    Demo {
        name: DemoName,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Example1,
    Table2,
    Sec6,
}

/// Overrides applied to a scenario document before it is resolved.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub coalition: Option<BTreeSet<usize>>,
}

impl Overrides {
    /// `--seed` wins over the environment variable.
    pub fn from_cli(cli: &Cli) -> std::result::Result<Self, String> {
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(v) => Some(v.trim().parse::<u64>().map_err(|e| format!("{SEED_ENV}={v:?}: {e}"))?),
            Err(_) => None,
        };
        Ok(Self { seed: cli.seed.or(env_seed), iterations: cli.iterations, coalition: None })
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidScenario(_)
        | Error::InvalidTopology(_)
        | Error::InvalidMixing(_)
        | Error::Json(_)
        | Error::CoalitionMember(_) => EXIT_VALIDATION,
        Error::NotAdmissible => EXIT_NOT_ADMISSIBLE,
        _ => EXIT_RUNTIME,
    }
}

/// Reads a scenario file; a missing path that names a shipped scenario loads that instead.
pub fn read_scenario_text(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(text) = scenarios::source(arg) {
            return Ok(text.to_string());
        }
    }
    Ok(std::fs::read_to_string(path)?)
}

pub fn load_scenario(arg: &str, overrides: &Overrides) -> Result<Scenario> {
    let text = read_scenario_text(arg)?;
    let mut spec: ScenarioSpec = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidScenario(vec![format!("malformed scenario JSON: {e}")]))?;
    if let Some(seed) = overrides.seed {
        spec.seed = seed;
    }
    if let Some(iterations) = overrides.iterations {
        spec.iterations = iterations;
    }
    if let Some(c) = &overrides.coalition {
        spec.coalition = c.clone();
    }
    Scenario::from_spec(spec)
}

/// SHA-256 of the resolved scenario document.
pub fn config_hash(scenario: &Scenario) -> String {
    let text = serde_json::to_string(&scenario.to_spec()).expect("scenario serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut file = std::fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologyReport {
    pub nodes: usize,
    pub edges: usize,
    pub vertex_connectivity: Option<usize>,
    pub edge_connectivity: Option<usize>,
    pub min_degree: usize,
    /// `kappa <= lambda <= delta`.
    pub whitney_chain_holds: bool,
    pub f: usize,
    pub admissible: bool,
    /// One entry per examined coalition that exposes good agents.
    pub failures: Vec<FailureReport>,
}

impl TopologyReport {
    /// With `coalition` given, failures are reported for it alone; otherwise
    /// every coalition of size `f` is examined.
    pub fn new(topology: &Topology, f: usize, coalition: Option<&BTreeSet<usize>>) -> Self {
        let kappa = topology.vertex_connectivity().ok();
        let lambda = topology.edge_connectivity().ok();
        let delta = topology.min_degree();
        let whitney = match (kappa, lambda) {
            (Some(k), Some(l)) => k <= l && l <= delta,
            _ => true,
        };
        let failures = match coalition {
            Some(c) => vec![topology.detect_privacy_failures(c)],
            None => coalitions(topology.node_count(), f)
                .into_iter()
                .map(|c| topology.detect_privacy_failures(&c))
                .collect(),
        };
        Self {
            nodes: topology.node_count(),
            edges: topology.edges().len(),
            vertex_connectivity: kappa,
            edge_connectivity: lambda,
            min_degree: delta,
            whitney_chain_holds: whitney,
            f,
            admissible: kappa.is_some_and(|k| k > f),
            failures: failures.into_iter().filter(|r| !r.is_empty()).collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let show = |v: Option<usize>| v.map_or("n/a (disconnected)".to_string(), |k| k.to_string());
        let _ = writeln!(s, "nodes: {}, edges: {}", self.nodes, self.edges);
        let _ = writeln!(s, "vertex connectivity: {}", show(self.vertex_connectivity));
        let _ = writeln!(s, "edge connectivity: {}", show(self.edge_connectivity));
        let _ = writeln!(s, "min degree: {}", self.min_degree);
        let _ = writeln!(
            s,
            "kappa <= lambda <= delta: {}",
            if self.whitney_chain_holds { "holds" } else { "VIOLATED" }
        );
        if self.min_degree < self.f + 1 {
            let _ = writeln!(s, "min degree {} < f + 1 = {}", self.min_degree, self.f + 1);
        }
        let _ = writeln!(
            s,
            "{}-admissible: {}",
            self.f,
            if self.admissible { "yes" } else { "no" }
        );
        for r in &self.failures {
            let _ = writeln!(s, "coalition {:?}:", r.coalition);
            for a in &r.individual {
                let _ = writeln!(s, "  individual privacy loss: agent {a} (degree < {})", r.coalition.len() + 1);
            }
            if !r.groups.is_empty() {
                let _ = writeln!(s, "  group privacy loss, good components:");
                for g in &r.groups {
                    let _ = writeln!(s, "    {g:?}");
                }
            }
        }
        s
    }
}

/// All `k`-subsets of `0..n`, capped to keep the check interactive.
fn coalitions(n: usize, k: usize) -> Vec<BTreeSet<usize>> {
    const CAP: usize = 20_000;
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().copied().collect());
        if out.len() >= CAP {
            return out;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub scenario: ScenarioSpec,
    pub topology: TopologyReport,
    pub metrics: Vec<MetricsRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verifier: Option<VerifierReport>,
    pub duration_seconds: f64,
}

impl RunReport {
    fn new(command: &str, scenario: &Scenario, metrics: Vec<MetricsRow>, started: Instant) -> Self {
        Self {
            command: command.to_string(),
            seed: scenario.seed,
            config_hash: config_hash(scenario),
            scenario: scenario.to_spec(),
            topology: TopologyReport::new(&scenario.topology, scenario.coalition.len(), Some(&scenario.coalition)),
            metrics,
            attack: None,
            verifier: None,
            duration_seconds: started.elapsed().as_secs_f64(),
        }
    }
}

fn write_run_files(out: &Path, scenario: &Scenario, output: &RunOutput) -> Result<Vec<MetricsRow>> {
    let mut trace = Vec::new();
    output.trace.write_csv(&mut trace)?;
    write_atomic(&out.join("trace.csv"), &trace)?;
    let metrics = output.trace.metrics(&scenario.objectives.aggregate());
    let mut csv = Vec::new();
    write_metrics_csv(&metrics, &mut csv)?;
    write_atomic(&out.join("metrics.csv"), &csv)?;
    Ok(metrics)
}

fn report_error(err: &Error) -> i32 {
    match err {
        Error::InvalidScenario(problems) => {
            eprintln!("invalid scenario:");
            for p in problems {
                eprintln!("  - {p}");
            }
        }
        e => eprintln!("error: {e}"),
    }
    exit_code(err)
}

pub fn cmd_simulate(scenario: &str, out: &Path, overrides: &Overrides) -> i32 {
    let started = Instant::now();
    let result = (|| {
        let s = load_scenario(scenario, overrides)?;
        let output = run(&s)?;
        let metrics = write_run_files(out, &s, &output)?;
        if let Some(last) = metrics.last() {
            println!(
                "{}: {} rounds, mean {:.6e}, max deviation {:.6e}, eta^2 {:.6e}",
                s.name, last.iteration, last.mean, last.max_dev, last.rms_sq
            );
        }
        write_json(&out.join("report.json"), &RunReport::new("simulate", &s, metrics, started))
    })();
    result.map_or_else(|e| report_error(&e), |_| EXIT_OK)
}

pub fn cmd_attack(
    scenario: &str,
    coalition: Option<BTreeSet<usize>>,
    degree: Option<usize>,
    out: &Path,
    overrides: &Overrides,
) -> i32 {
    let started = Instant::now();
    let result = (|| {
        let overrides = Overrides { coalition, ..overrides.clone() };
        let s = load_scenario(scenario, &overrides)?;
        let output = run(&s)?;
        let metrics = write_run_files(out, &s, &output)?;
        let view = AdversaryView::observe(&s, &output);
        let outcome = attack(&view, degree.unwrap_or_else(|| s.attack_degree()));
        let report = AttackReport::judge(&view, &outcome, &s.objectives, &output.obfuscated);
        for a in &report.agents {
            let recovered = a.objective.as_ref().map_or("-".to_string(), Polynomial::to_string);
            println!("agent {}: {:?}  recovered {}", a.agent, a.verdict, recovered);
        }
        if report.agents.is_empty() {
            println!("no good agents to attack");
        }
        write_json(&out.join("attack_report.json"), &report)?;
        let mut run_report = RunReport::new("attack", &s, metrics, started);
        run_report.attack = Some(report);
        write_json(&out.join("report.json"), &run_report)
    })();
    result.map_or_else(|e| report_error(&e), |_| EXIT_OK)
}

pub fn cmd_verify_privacy(scenario: &str, trials: usize, out: &Path, overrides: &Overrides) -> i32 {
    let started = Instant::now();
    let result = (|| {
        let s = load_scenario(scenario, overrides)?;
        let f = s.coalition.len();
        let topo = TopologyReport::new(&s.topology, f, Some(&s.coalition));
        if !topo.admissible {
            eprintln!("topology is not {f}-admissible");
            eprint!("{}", topo.render());
            return Err(Error::NotAdmissible);
        }
        let shares = s.resolve_shares();
        let mut rng = seeded_stream(s.seed, STREAM_VERIFIER);
        let report = verify_scenario(&s, &shares, trials, &mut rng);
        let verified = report.trials.iter().filter(|t| t.verified).count();
        println!(
            "{verified}/{} trials verified, worst residual {:.3e}",
            report.trials.len(),
            report.residual
        );
        for t in report.trials.iter().filter(|t| !t.verified) {
            eprintln!("trial {} failed: {}", t.trial, t.error.as_deref().unwrap_or("observables differ"));
        }
        write_json(&out.join("verifier_report.json"), &report)?;
        let verdict = report.verdict;
        let mut run_report = RunReport::new("verify-privacy", &s, Vec::new(), started);
        run_report.verifier = Some(report);
        write_json(&out.join("report.json"), &run_report)?;
        Ok(verdict)
    })();
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_RUNTIME,
        Err(e) => report_error(&e),
    }
}

/// Accepts a bare topology document or a scenario (whose coalition is then examined).
pub fn load_topology(arg: &str) -> Result<(Topology, Option<BTreeSet<usize>>)> {
    let text = read_scenario_text(arg)?;
    if let Ok(t) = serde_json::from_str::<Topology>(&text) {
        return Ok((t, None));
    }
    match serde_json::from_str::<ScenarioSpec>(&text) {
        Ok(spec) => Ok((spec.topology, Some(spec.coalition))),
        Err(_) => {
            let err = serde_json::from_str::<Topology>(&text).unwrap_err();
            Err(Error::InvalidTopology(err.to_string()))
        }
    }
}

pub fn cmd_check_topology(topology: &str, f: Option<usize>) -> i32 {
    let (t, coalition) = match load_topology(topology) {
        Ok(v) => v,
        Err(e) => return report_error(&e),
    };
    let f = f.or(coalition.as_ref().map(BTreeSet::len)).unwrap_or(1);
    let coalition = coalition.filter(|c| c.len() == f);
    let report = TopologyReport::new(&t, f, coalition.as_ref());
    print!("{}", report.render());
    if report.admissible && report.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_TOPOLOGY
    }
}

/// Published non-constant parts recovered by the attack on agents 2 and 3.
pub fn table1_recovered() -> [(usize, Polynomial); 2] {
    [
        (1, Polynomial::new(vec![0.0, -36.0, 25.0, -8.0, 1.0])),
        (2, Polynomial::new(vec![0.0, -108.0, 54.0, -12.0, 1.0])),
    ]
}

/// Published obfuscated triple, shared by both problems.
pub fn table2_obfuscated() -> [Polynomial; 3] {
    [
        Polynomial::new(vec![0.0, -3.0, -4.0, -4.0, 2.0]),
        Polynomial::new(vec![0.0, 10.0, 4.0, -7.0, -4.0]),
        Polynomial::new(vec![0.0, -7.0, 2.0, 11.0, 4.0]),
    ]
}

/// Tolerances for the desk-scale convergence check.
pub const MEAN_TOL: f64 = 1e-2;
pub const DEVIATION_TOL: f64 = 1e-3;
pub const ETA_TOL: f64 = 1e-3;
pub const AGREEMENT_TOL: f64 = 2e-2;

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISMATCH"
    }
}

pub fn cmd_demo(name: DemoName, out: Option<&Path>, overrides: &Overrides) -> i32 {
    let result = match name {
        DemoName::Example1 => demo_example1(out, overrides),
        DemoName::Table2 => demo_table2(),
        DemoName::Sec6 => demo_sec6(out, overrides),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_RUNTIME,
        Err(e) => report_error(&e),
    }
}

fn demo_example1(out: Option<&Path>, overrides: &Overrides) -> Result<bool> {
    let s = load_scenario("example1", overrides)?;
    let output = run(&s)?;
    let view = AdversaryView::observe(&s, &output);
    let outcome = attack(&view, s.attack_degree());
    println!("{:<6} {:<40} {:<40} max diff", "agent", "published", "recovered");
    let mut ok = true;
    for (agent, published) in table1_recovered() {
        let Some(r) = outcome.recovered.get(&agent) else {
            println!("{:<6} {:<40} {:<40}", agent + 1, published.to_string(), "attack failed");
            ok = false;
            continue;
        };
        let recovered = r.objective.without_constant();
        let d = recovered.max_coeff_distance(&published);
        ok &= d <= RECOVERY_TOL;
        println!("{:<6} {:<40} {:<40} {:.2e} {}", agent + 1, published.to_string(), rounded(&recovered).to_string(), d, mark(d <= RECOVERY_TOL));
    }
    if let Some(out) = out {
        let report = AttackReport::judge(&view, &outcome, &s.objectives, &output.obfuscated);
        write_json(&out.join("attack_report.json"), &report)?;
    }
    Ok(ok)
}

fn rounded(p: &Polynomial) -> Polynomial {
    Polynomial::new(p.coeffs().iter().map(|c| (c * 1e4).round() / 1e4).collect())
}

fn demo_table2() -> Result<bool> {
    let t = scenarios::table2();
    let a = obfuscate(&t.problem1.objectives, &t.problem1.shares, &t.topology);
    let b = obfuscate(&t.problem2.objectives, &t.problem2.shares, &t.topology);
    let published = table2_obfuscated();
    println!("{:<6} {:<32} {:<32} {:<32}", "agent", "problem 1", "problem 2", "published");
    let mut ok = true;
    for i in 0..3 {
        let same = a[i] == b[i] && a[i] == published[i];
        ok &= same;
        println!(
            "{:<6} {:<32} {:<32} {:<32} {}",
            i + 1,
            a[i].to_string(),
            b[i].to_string(),
            published[i].to_string(),
            mark(same)
        );
    }
    let base = scenarios::sec6();
    let pa = with_problem(&base, t.problem1.objectives.clone(), t.problem1.shares.clone());
    let pb = with_problem(&base, t.problem2.objectives.clone(), t.problem2.shares.clone());
    let identical = end_to_end_indistinguishability(&pa, &pb)?;
    println!("executions bitwise identical: {} {}", identical, mark(identical));
    Ok(ok && identical)
}

fn demo_sec6(out: Option<&Path>, overrides: &Overrides) -> Result<bool> {
    let s = load_scenario("sec6", overrides)?;
    let output = run(&s)?;
    let aggregate = s.objectives.aggregate();
    let metrics = output.trace.metrics(&aggregate);
    let plain = run(&s.without_obfuscation())?;
    let plain_mean = plain.trace.metrics(&aggregate).last().map_or(f64::NAN, |m| m.mean);
    let last = metrics.last().cloned().expect("metrics include the initial row");
    let checks = [
        ("|mean - 0|", last.mean.abs(), MEAN_TOL),
        ("max deviation", last.max_dev, DEVIATION_TOL),
        ("eta^2", last.rms_sq, ETA_TOL),
        ("|mean - unobfuscated mean|", (last.mean - plain_mean).abs(), AGREEMENT_TOL),
    ];
    println!("iteration {}", last.iteration);
    let mut ok = true;
    for (label, value, tol) in checks {
        ok &= value <= tol;
        println!("{label:<28} {value:>12.6e}  <= {tol:.0e}  {}", mark(value <= tol));
    }
    let view = AdversaryView::observe(&s, &output);
    let report = AttackReport::judge(&view, &attack(&view, s.attack_degree()), &s.objectives, &output.obfuscated);
    for a in &report.agents {
        println!("attack on agent {}: {:?}", a.agent + 1, a.verdict);
    }
    if let Some(out) = out {
        let metrics = write_run_files(out, &s, &output)?;
        let mut r = RunReport::new("demo sec6", &s, metrics, Instant::now());
        r.attack = Some(report);
        write_json(&out.join("report.json"), &r)?;
    }
    Ok(ok)
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let overrides = match Overrides::from_cli(&cli) {
        Ok(o) => o,
        Err(m) => {
            eprintln!("error: {m}");
            return EXIT_VALIDATION;
        }
    };
    match cli.command {
        Command::Simulate { scenario, out } => cmd_simulate(&scenario, &out, &overrides),
        Command::Attack { scenario, coalition, degree, out } => cmd_attack(
            &scenario,
            coalition.map(|c| c.into_iter().collect()),
            degree,
            &out,
            &overrides,
        ),
        Command::VerifyPrivacy { scenario, trials, out } => cmd_verify_privacy(&scenario, trials, &out, &overrides),
        Command::CheckTopology { topology, f } => cmd_check_topology(&topology, f),
        Command::Demo { name, out } => cmd_demo(name, out.as_deref(), &overrides),
    }
}
