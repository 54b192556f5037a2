//! `latticeflow`: enumerate, sample, measure and verify the loop O(2), six-vertex and
//! random-cluster models.
//!
//! Exit codes: 0 success, 1 check failure or runtime error, 2 usage error.

mod commands;
mod config;
mod manifest;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latticeflow::verify::{Fault, Level, ALL_CHECKS};

use crate::commands::{Observable, Representation, DEFAULT_ENUMERATION_BUDGET};
use crate::config::{parse_config, ConfigError, DomainSpec, RawConfig, RunSpec};
use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(name = "latticeflow", version, about = "Loop O(2), six-vertex and random-cluster models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact distribution by exhaustive enumeration, as JSON.
    Enumerate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long = "representation", visible_alias = "repr", value_enum, default_value = "spins")]
        repr: Representation,
        /// Largest number of states to enumerate.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// MCMC samples as CSV rows, with a JSON run manifest.
    Sample {
        #[command(flatten)]
        run: RunArgs,
        /// Replays the run recorded in a manifest (JSON or CSV with a manifest header).
        #[arg(long, conflicts_with = "config")]
        from_manifest: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimates an observable over a list of sizes, as CSV.
    Measure {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        observable: Observable,
        /// Comma-separated sizes n (or m for crossings).
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<u32>,
        /// Ball radius factor for α_n.
        #[arg(long, default_value_t = 4.0)]
        rho: f64,
        /// Appends a weighted fit against ln n.
        #[arg(long)]
        fit: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Runs the acceptance checks and writes a JSON report.
    Verify {
        #[arg(long, value_parser = parse_level, default_value = "quick")]
        level: Level,
        /// Deliberately breaks a weight to confirm the suite detects it.
        #[arg(long, value_parser = parse_fault)]
        inject_fault: Option<Fault>,
        /// Comma-separated check numbers; all by default.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<u8>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compares 𝔷_{n,k}/𝔷_n with the spin observable on the n×n torus.
    BkwCheck {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// JSON config file; flags given as well must agree with it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// loop-o2, six-vertex or fk.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    pa: Option<f64>,
    #[arg(long)]
    pb: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// free, ++, r±, w±, r±w± (spin models) or free, wired (fk).
    #[arg(long, allow_hyphen_values = true)]
    bc: Option<String>,
    /// hex_ball:R, diamond:I,J,R, rectangle:I0,I1,J0,J1 or torus:N.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Independent chains, each on its own generator stream.
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    site_passes: Option<u32>,
    #[arg(long)]
    cluster_sweeps: Option<u32>,
}

#[derive(Args, Clone, Default)]
struct OutArgs {
    /// Output file; standard output by default.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// JSON manifest file; defaults to `<output>.manifest.json` when writing to a file.
    #[arg(long)]
    manifest_out: Option<PathBuf>,
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse().map_err(|e: latticeflow::Error| e.to_string())
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    s.parse().map_err(|e: latticeflow::Error| e.to_string())
}

enum Failure {
    Usage(String),
    Check(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<ConfigError>() {
            Ok(c) => Failure::Usage(c.to_string()),
            Err(e) => Failure::Runtime(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl RunArgs {
    fn raw(&self) -> Result<RawConfig, ConfigError> {
        Ok(RawConfig {
            model: self.model.clone(),
            x: self.x,
            a: self.a,
            b: self.b,
            c: self.c,
            pa: self.pa,
            pb: self.pb,
            q: self.q,
            bc: self.bc.clone(),
            domain: self.domain.as_deref().map(DomainSpec::parse).transpose()?,
            seed: self.seed,
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            thin: self.thin,
            chains: self.chains,
            site_passes: self.site_passes,
            cluster_sweeps: self.cluster_sweeps,
            lambda: None,
        })
    }

    fn resolve(&self) -> Result<RunSpec, ConfigError> {
        parse_config(self.config.as_deref(), &self.raw()?)
    }

    fn is_empty(&self) -> bool {
        self.raw().map(|r| r == RawConfig::default()).unwrap_or(false) && self.config.is_none()
    }
}

impl OutArgs {
    fn write(&self, text: &str) -> std::io::Result<()> {
        match &self.output {
            Some(p) => std::fs::write(p, text),
            None => {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                let sep = if text.ends_with('\n') { "" } else { "\n" };
                match write!(out, "{text}{sep}").and_then(|_| out.flush()) {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                    r => r,
                }
            }
        }
    }

    fn write_manifest(&self, manifest: &RunManifest) -> Result<(), Failure> {
        let path = self.manifest_out.clone().or_else(|| {
            self.output.as_ref().map(|p| {
                let mut s = p.clone().into_os_string();
                s.push(".manifest.json");
                PathBuf::from(s)
            })
        });
        let text = serde_json::to_string_pretty(manifest).map_err(|e| Failure::Runtime(e.into()))?;
        match path {
            Some(p) => std::fs::write(p, text)?,
            None => eprintln!("{text}"),
        }
        Ok(())
    }
}

fn warn_all(spec: &RunSpec, extra: &[String]) {
    for w in spec.warnings.iter().chain(extra.iter().filter(|w| !spec.warnings.contains(w))) {
        eprintln!("{w}");
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("LATTICEFLOW_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("LATTICEFLOW_THREADS = {v:?} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Runtime(e.into()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Enumerate { run, repr, budget, out } => {
            let spec = run.resolve()?;
            warn_all(&spec, &[]);
            let (text, _) = commands::enumerate(&spec, repr, budget)?;
            out.write(&text)?;
        }
        Command::Sample { run, from_manifest, out } => {
            let spec = match from_manifest {
                Some(path) => {
                    if !run.is_empty() {
                        return Err(
                            ConfigError::ConflictingFlags("--from-manifest replaces all run flags".into()).into()
                        );
                    }
                    let text = std::fs::read_to_string(&path)?;
                    let m = RunManifest::parse(&text).map_err(|e| Failure::Usage(format!("invalid manifest: {e}")))?;
                    if m.command != "sample" {
                        return Err(Failure::Usage(format!("manifest records a {:?} run", m.command)));
                    }
                    m.spec
                }
                None => run.resolve()?,
            };
            let (text, manifest, warnings) = commands::sample(&spec)?;
            warn_all(&spec, &warnings);
            out.write(&text)?;
            out.write_manifest(&manifest)?;
        }
        Command::Measure { run, observable, sizes, rho, fit, out } => {
            let spec = run.resolve()?;
            if observable == Observable::Alpha && rho <= 2.0 {
                return Err(Failure::Usage(format!("rho = {rho} must exceed 2")));
            }
            let distinct: std::collections::BTreeSet<u32> = sizes.iter().copied().collect();
            if fit && distinct.len() < 3 {
                return Err(Failure::Usage(format!("--fit needs at least 3 distinct sizes, got {}", distinct.len())));
            }
            warn_all(&spec, &[]);
            let (text, manifest) = commands::measure(&spec, observable, &sizes, rho, fit)?;
            out.write(&text)?;
            out.write_manifest(&manifest)?;
        }
        Command::Verify { level, inject_fault, checks, out } => {
            let ids = if checks.is_empty() { ALL_CHECKS.to_vec() } else { checks };
            if let Some(bad) = ids.iter().find(|id| !ALL_CHECKS.contains(id)) {
                return Err(Failure::Usage(format!("unknown check {bad}")));
            }
            let report = commands::verify(&ids, level, inject_fault);
            for c in &report.checks {
                let status = if c.passed { "pass" } else { "FAIL" };
                eprintln!("[{status}] {:>2} {}: {:.3e} ({}) {:.1}s", c.id, c.name, c.measured, c.required, c.seconds);
            }
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?;
            out.write(&text)?;
            if !report.passed {
                let failed: Vec<String> =
                    report.checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.id, c.name)).collect();
                return Err(Failure::Check(format!("failed checks: {}", failed.join(", "))));
            }
        }
        Command::BkwCheck { n, k, lambda, budget, out } => {
            if !(0.0..=PI / 3.0).contains(&lambda) {
                return Err(ConfigError::OutOfRange(format!("lambda = {lambda} not in [0, pi/3]")).into());
            }
            if k > n || n == 0 {
                return Err(ConfigError::OutOfRange(format!("need 1 <= n and k <= n, got n = {n}, k = {k}")).into());
            }
            let report = commands::bkw_check(n, k, lambda, budget)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.into()))?;
            out.write(&text)?;
            if !report.passed {
                return Err(Failure::Check(format!(
                    "BKW residual {:.3e} exceeds {:e}",
                    report.abs_error, report.tolerance
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
