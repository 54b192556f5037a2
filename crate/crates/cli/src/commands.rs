//! Subcommand implementations.

use std::time::SystemTime;

use anyhow::Result;
use latticeflow::lattice_core::{hex_ball, FaceCoord, SquareCoord, SquareDomain};
use latticeflow::loop_o2::{loops_of_spins, spins_to_height, wall_vertex_count, LoopParams};
use latticeflow::observables::{
    alpha_n, crossing_probability_on, fit_log_growth, height_variance, loops_around, mean_estimate, Estimate,
    EstimateRow, DEFAULT_BLOCK,
};
use latticeflow::random_cluster::{
    bkw_partition_functions, torus_spin_observable, BKWParams, FKParams, DEFAULT_BUDGET,
};
use latticeflow::samplers::{
    enumerate_exact, run_chain, Chain, ChainConfig, ExactDistribution, FkChain, LoopChain, ModelSpec, Record,
    SixVertexChain,
};
use latticeflow::six_vertex::{spins_to_height_6v, wall_counts, SixVParams};
use latticeflow::verify::{run_suite, Fault, Level, Report};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, DomainSpec, ModelParams, RunSpec};
use crate::manifest::RunManifest;

/// Representation enumerated by `enumerate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    /// Spin pairs under the boundary condition.
    Spins,
    /// Height functions with zero (loop) or 0,1 (six-vertex) boundary values.
    Heights,
    /// Loop configurations with weight 2 per loop (loop-o2 only).
    Loops,
}

/// Observable computed by `measure`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// Var[h(centre)] on the ball (loop-o2) or diamond (six-vertex) of size n.
    HeightVariance,
    /// Mean number of loops around the centre face (loop-o2).
    LoopsAround,
    /// Probability of a left-right ξ^{r+} crossing of R_m on the ball of radius 4m (loop-o2).
    Crossing,
    /// α_n under r− boundary conditions on the ball of radius ρn (loop-o2).
    Alpha,
}

impl Observable {
    fn name(self) -> &'static str {
        match self {
            Observable::HeightVariance => "height_variance",
            Observable::LoopsAround => "loops_around",
            Observable::Crossing => "crossing",
            Observable::Alpha => "alpha",
        }
    }
}

#[derive(Serialize)]
struct EnumerateOutput<'a> {
    manifest: &'a RunManifest,
    representation: Representation,
    distribution: ExactDistribution,
}

pub fn enumerate(spec: &RunSpec, repr: Representation, budget: u64) -> Result<(String, RunManifest)> {
    let started = SystemTime::now();
    let dist = match (&spec.model, repr) {
        (ModelParams::LoopO2 { x }, Representation::Spins) => {
            let d = spec.domain.hex()?;
            enumerate_exact(&ModelSpec::LoopSpins { domain: &d, x: *x, bc: spec.boundary()? }, budget)?
        }
        (ModelParams::LoopO2 { x }, Representation::Heights) => {
            let d = spec.domain.hex()?;
            enumerate_exact(&ModelSpec::LoopHeights { domain: &d, x: *x }, budget)?
        }
        (ModelParams::LoopO2 { x }, Representation::Loops) => {
            let d = spec.domain.hex()?;
            enumerate_exact(&ModelSpec::LoopConfigs { domain: &d, params: LoopParams::new(2.0, *x)? }, budget)?
        }
        (ModelParams::SixVertex { a, b, c }, Representation::Spins) => {
            let d = spec.domain.square()?;
            let params = SixVParams::new(*a, *b, *c)?;
            enumerate_exact(&ModelSpec::SixVertexSpins { domain: &d, params, bc: spec.boundary()? }, budget)?
        }
        (ModelParams::SixVertex { a, b, c }, Representation::Heights) => {
            let d = spec.domain.square()?;
            enumerate_exact(&ModelSpec::SixVertexHeights { domain: &d, params: SixVParams::new(*a, *b, *c)? }, budget)?
        }
        (ModelParams::Fk { pa, pb, q }, Representation::Spins) => {
            let g = spec.domain.fk_graph()?;
            enumerate_exact(
                &ModelSpec::Fk { graph: &g, params: FKParams::new(*pa, *pb, *q)?, bc: spec.fk_boundary()? },
                budget,
            )?
        }
        (m, r) => {
            let msg = format!("representation {r:?} is not available for model {}", m.id());
            return Err(ConfigError::ConflictingFlags(msg).into());
        }
    };
    let manifest = RunManifest::new("enumerate", spec, serde_json::json!({ "representation": repr, "budget": budget }))
        .with_wall_clock(started);
    let out = EnumerateOutput { manifest: &manifest, representation: repr, distribution: dist };
    Ok((serde_json::to_string_pretty(&out)?, manifest))
}

fn chain_config(spec: &RunSpec, stream: u64) -> Result<ChainConfig> {
    Ok(ChainConfig::new(spec.seed, spec.sweeps, spec.burn_in, spec.thin)?
        .with_stream(stream)
        .with_schedule(spec.schedule))
}

fn centre_square(domain: &DomainSpec, sq: &SquareDomain) -> usize {
    let target = match *domain {
        DomainSpec::Diamond { centre, .. } => SquareCoord::new(centre.0, centre.1),
        DomainSpec::Rectangle { i0, i1, j0, j1 } => SquareCoord::new((i0 + i1) / 2, (j0 + j1) / 2),
        _ => SquareCoord::new(0, 0),
    };
    sq.index_of(target).unwrap_or(0)
}

fn run_one<C: Chain>(
    mut chain: C,
    config: &ChainConfig,
    observe: impl FnMut(&C) -> latticeflow::Result<Vec<f64>>,
) -> Result<(Vec<Record>, Vec<String>)> {
    let warnings = chain.warnings().to_vec();
    Ok((run_chain(&mut chain, config, observe)?, warnings))
}

/// Observable names recorded by `sample` for a model.
pub fn sample_columns(model: &ModelParams) -> &'static [&'static str] {
    match model {
        ModelParams::LoopO2 { .. } => {
            &["h_centre", "loops_around_centre", "wall_vertices", "black_magnetisation", "white_magnetisation"]
        }
        ModelParams::SixVertex { .. } => &["h_centre", "walls_a", "walls_b", "black_magnetisation"],
        ModelParams::Fk { .. } => &["open_edges", "clusters"],
    }
}

fn sample_chain(spec: &RunSpec, stream: u64) -> Result<(Vec<Record>, Vec<String>)> {
    let config = chain_config(spec, stream)?;
    let mean = |v: &[i8]| v.iter().map(|&s| s as f64).sum::<f64>() / v.len() as f64;
    match spec.model {
        ModelParams::LoopO2 { x } => {
            let d = spec.domain.hex()?;
            let centre = d.index_of(FaceCoord::ORIGIN).unwrap_or(0);
            let chain = LoopChain::new(d, x, spec.boundary()?)?;
            run_one(chain, &config, |c| {
                let h = spins_to_height(&c.domain, &c.pair).map_or(f64::NAN, |h| h.h[centre] as f64);
                let loops = loops_around(&c.domain, &loops_of_spins(&c.domain, &c.pair)?, centre) as f64;
                let walls = wall_vertex_count(&c.domain, &c.pair) as f64;
                Ok(vec![h, loops, walls, mean(&c.pair.black), mean(&c.pair.white)])
            })
        }
        ModelParams::SixVertex { a, b, c } => {
            let d = spec.domain.square()?;
            let centre = centre_square(&spec.domain, &d);
            let blacks = d.of_colour(latticeflow::lattice_core::Colour::Black);
            let chain = SixVertexChain::new(d, SixVParams::new(a, b, c)?, spec.boundary()?)?;
            run_one(chain, &config, |ch| {
                let h = spins_to_height_6v(&ch.domain, &ch.pair).map_or(f64::NAN, |h| h.h[centre] as f64);
                let (na, nb) = wall_counts(&ch.domain, &ch.pair)?;
                let m = blacks.iter().map(|&n| ch.pair.sigma[n] as f64).sum::<f64>() / blacks.len().max(1) as f64;
                Ok(vec![h, na as f64, nb as f64, m])
            })
        }
        ModelParams::Fk { pa, pb, q } => {
            let g = spec.domain.fk_graph()?;
            let chain = FkChain::new(g, FKParams::new(pa, pb, q)?, spec.fk_boundary()?);
            run_one(chain, &config, |c| {
                let open = c.open.iter().filter(|&&o| o).count() as f64;
                Ok(vec![open, c.graph.cluster_count(&c.open, c.bc) as f64])
            })
        }
    }
}

/// Runs `spec.chains` independent streams and returns the CSV text, the manifest and warnings.
pub fn sample(spec: &RunSpec) -> Result<(String, RunManifest, Vec<String>)> {
    let started = SystemTime::now();
    let results: Vec<Result<(Vec<Record>, Vec<String>)>> =
        (0..spec.chains as u64).into_par_iter().map(|s| sample_chain(spec, s)).collect();
    let columns = sample_columns(&spec.model);
    let manifest = RunManifest::new("sample", spec, serde_json::json!({ "columns": columns }));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["chain", "sweep"];
    header.extend_from_slice(columns);
    w.write_record(&header)?;
    let mut warnings = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        let (records, warn) = r?;
        if k == 0 {
            warnings = warn;
        }
        for rec in records {
            let mut row = vec![k.to_string(), rec.sweep.to_string()];
            row.extend(rec.values.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    let body = String::from_utf8(w.into_inner()?)?;
    let text = format!("{}\n{body}", manifest.header());
    Ok((text, manifest.with_wall_clock(started), warnings))
}

fn measure_one(spec: &RunSpec, observable: Observable, n: u32, rho: f64, stream: u64) -> Result<Estimate> {
    let config = chain_config(spec, stream)?;
    match (&spec.model, observable) {
        (ModelParams::LoopO2 { x }, Observable::HeightVariance | Observable::LoopsAround) => {
            let d = hex_ball(n);
            let centre = d.index_of(FaceCoord::ORIGIN).unwrap_or(0);
            let chain = LoopChain::new(d, *x, spec.boundary()?)?;
            let want_h = observable == Observable::HeightVariance;
            let (records, _) = run_one(chain, &config, |c| {
                Ok(vec![if want_h {
                    spins_to_height(&c.domain, &c.pair)?.h[centre] as f64
                } else {
                    loops_around(&c.domain, &loops_of_spins(&c.domain, &c.pair)?, centre) as f64
                }])
            })?;
            let v: Vec<f64> = records.iter().map(|r| r.values[0]).collect();
            Ok(if want_h { height_variance(&v, DEFAULT_BLOCK)? } else { mean_estimate(&v, DEFAULT_BLOCK)? })
        }
        (ModelParams::SixVertex { a, b, c }, Observable::HeightVariance) => {
            let d = SquareDomain::diamond(SquareCoord::new(0, 0), n);
            let centre = d.index_of(SquareCoord::new(0, 0)).unwrap_or(0);
            let chain = SixVertexChain::new(d, SixVParams::new(*a, *b, *c)?, spec.boundary()?)?;
            let (records, _) =
                run_one(chain, &config, |ch| Ok(vec![spins_to_height_6v(&ch.domain, &ch.pair)?.h[centre] as f64]))?;
            let v: Vec<f64> = records.iter().map(|r| r.values[0]).collect();
            Ok(height_variance(&v, DEFAULT_BLOCK)?)
        }
        (ModelParams::LoopO2 { x }, Observable::Crossing) => {
            Ok(crossing_probability_on(hex_ball(4 * n), *x, spec.boundary()?, n, &config)?)
        }
        (ModelParams::LoopO2 { x }, Observable::Alpha) => Ok(alpha_n(n, rho, *x, &config)?),
        (m, o) => {
            Err(ConfigError::ConflictingFlags(format!("observable {} is not available for model {}", o.name(), m.id()))
                .into())
        }
    }
}

/// Estimates an observable at each size, in parallel, optionally with a log-growth fit row.
pub fn measure(
    spec: &RunSpec,
    observable: Observable,
    sizes: &[u32],
    rho: f64,
    fit: bool,
) -> Result<(String, RunManifest)> {
    let started = SystemTime::now();
    let estimates: Vec<Result<Estimate>> =
        sizes.par_iter().enumerate().map(|(k, &n)| measure_one(spec, observable, n, rho, k as u64)).collect();
    let extra = serde_json::json!({ "observable": observable, "sizes": sizes, "rho": rho, "fit": fit });
    let manifest = RunManifest::new("measure", spec, extra);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut points = Vec::new();
    for (&n, e) in sizes.iter().zip(estimates) {
        let e = e?;
        points.push((n as f64, e));
        w.serialize(EstimateRow::new(observable.name(), spec.model.id(), n as usize, e))?;
    }
    if fit {
        let f = fit_log_growth(&points)?;
        let n_samples = points.iter().map(|p| p.1.n_samples).sum();
        let slope = Estimate { mean: f.slope, std_error: f.slope_se, n_samples };
        w.serialize(EstimateRow::new("log_fit_slope", spec.model.id(), 0, slope))?;
        let lower = Estimate { mean: f.ci.0, std_error: 0.0, n_samples };
        w.serialize(EstimateRow::new("log_fit_ci_lower", spec.model.id(), 0, lower))?;
    }
    let body = String::from_utf8(w.into_inner()?)?;
    Ok((format!("{}\n{body}", manifest.header()), manifest.with_wall_clock(started)))
}

pub fn verify(ids: &[u8], level: Level, fault: Option<Fault>) -> Report {
    run_suite(ids, level, fault)
}

#[derive(Debug, Serialize)]
pub struct BkwReport {
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub z_n: [f64; 2],
    pub z_nk: [f64; 2],
    pub spin_obs: [f64; 2],
    pub abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn bkw_check(n: usize, k: usize, lambda: f64, budget: u64) -> Result<BkwReport> {
    let params = BKWParams::new(lambda)?;
    let (z, zk) = bkw_partition_functions(n, k, params, budget)?;
    let spin = torus_spin_observable(n, k, params, budget)?;
    let abs_error = (zk / z - spin).norm();
    let tolerance = latticeflow::verify::BKW_TOL;
    Ok(BkwReport {
        n,
        k,
        lambda,
        z_n: [z.re, z.im],
        z_nk: [zk.re, zk.im],
        spin_obs: [spin.re, spin.im],
        abs_error,
        tolerance,
        passed: abs_error < tolerance,
    })
}

pub const DEFAULT_ENUMERATION_BUDGET: u64 = DEFAULT_BUDGET;
