//! Run configuration: JSON config files and flags resolved into a validated run spec.

use std::f64::consts::PI;
use std::path::Path;

use latticeflow::lattice_core::{hex_ball, HexDomain, SquareCoord, SquareDomain, TorusLattice};
use latticeflow::loop_o2::LoopParams;
use latticeflow::random_cluster::{self_dual_p, FKParams, FkBoundary, FkGraph};
use latticeflow::samplers::{fk_regime_warnings, loop_regime_warnings, six_vertex_regime_warnings, Schedule};
use latticeflow::six_vertex::SixVParams;
use latticeflow::Boundary;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Configuration errors; all map to the usage exit code.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown field: {0}")]
    UnknownField(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("conflicting flags: {0}")]
    ConflictingFlags(String),
    #[error("cannot read config: {0}")]
    Io(String),
}

impl From<latticeflow::Error> for ConfigError {
    fn from(e: latticeflow::Error) -> Self {
        ConfigError::OutOfRange(e.to_string())
    }
}

/// Lattice domain of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    HexBall { radius: u32 },
    Diamond { centre: (i32, i32), radius: u32 },
    Rectangle { i0: i32, i1: i32, j0: i32, j1: i32 },
    Torus { n: usize },
}

impl DomainSpec {
    /// Parses `hex_ball:R`, `diamond:I,J,R`, `rectangle:I0,I1,J0,J1` or `torus:N`.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::OutOfRange(format!("domain {s:?}"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<i64> = args.split(',').map(|a| a.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let nonneg = |v: i64| u32::try_from(v).map_err(|_| bad());
        match (kind, nums.as_slice()) {
            ("hex_ball", [r]) => Ok(DomainSpec::HexBall { radius: nonneg(*r)? }),
            ("diamond", [i, j, r]) => Ok(DomainSpec::Diamond { centre: (*i as i32, *j as i32), radius: nonneg(*r)? }),
            ("rectangle", [a, b, c, d]) => {
                Ok(DomainSpec::Rectangle { i0: *a as i32, i1: *b as i32, j0: *c as i32, j1: *d as i32 })
            }
            ("torus", [n]) => Ok(DomainSpec::Torus { n: nonneg(*n)? as usize }),
            _ => Err(bad()),
        }
    }

    pub fn hex(&self) -> Result<HexDomain, ConfigError> {
        match *self {
            DomainSpec::HexBall { radius } => Ok(hex_ball(radius)),
            _ => Err(ConfigError::ConflictingFlags("loop-o2 needs a hex_ball domain".into())),
        }
    }

    pub fn square(&self) -> Result<SquareDomain, ConfigError> {
        match *self {
            DomainSpec::Diamond { centre, radius } => {
                Ok(SquareDomain::diamond(SquareCoord::new(centre.0, centre.1), radius))
            }
            DomainSpec::Rectangle { i0, i1, j0, j1 } => Ok(SquareDomain::rectangle(i0, i1, j0, j1)?),
            _ => Err(ConfigError::ConflictingFlags("six-vertex needs a diamond or rectangle domain".into())),
        }
    }

    pub fn fk_graph(&self) -> Result<FkGraph, ConfigError> {
        match *self {
            DomainSpec::Torus { n } if n > 0 => Ok(FkGraph::torus_black(&TorusLattice::new(n))),
            DomainSpec::Torus { .. } => Err(ConfigError::OutOfRange("torus size must be positive".into())),
            DomainSpec::HexBall { .. } => {
                Err(ConfigError::ConflictingFlags("fk needs a square or torus domain".into()))
            }
            _ => Ok(FkGraph::black_graph(&self.square()?)),
        }
    }
}

/// Model and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelParams {
    LoopO2 { x: f64 },
    SixVertex { a: f64, b: f64, c: f64 },
    Fk { pa: f64, pb: f64, q: f64 },
}

impl ModelParams {
    pub fn id(&self) -> &'static str {
        match self {
            ModelParams::LoopO2 { .. } => "loop-o2",
            ModelParams::SixVertex { .. } => "six-vertex",
            ModelParams::Fk { .. } => "fk",
        }
    }
}

/// Regime flags of the resolved parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regimes {
    pub fkg: bool,
    pub super_duality: bool,
}

/// Fully resolved run specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    #[serde(flatten)]
    pub model: ModelParams,
    pub bc: String,
    pub domain: DomainSpec,
    pub seed: u64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub schedule: Schedule,
    pub lambda: Option<f64>,
    pub regimes: Regimes,
    pub warnings: Vec<String>,
}

impl RunSpec {
    pub fn boundary(&self) -> Result<Boundary, ConfigError> {
        self.bc.parse().map_err(|_| ConfigError::OutOfRange(format!("boundary condition {:?}", self.bc)))
    }

    pub fn fk_boundary(&self) -> Result<FkBoundary, ConfigError> {
        Ok(self.bc.parse()?)
    }
}

/// Raw config fields; every field is optional and unknown fields are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: Option<String>,
    pub x: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub pa: Option<f64>,
    pub pb: Option<f64>,
    pub q: Option<f64>,
    pub bc: Option<String>,
    pub domain: Option<DomainSpec>,
    pub seed: Option<u64>,
    pub sweeps: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,
    pub site_passes: Option<u32>,
    pub cluster_sweeps: Option<u32>,
    pub lambda: Option<f64>,
}

/// Parses a JSON config, mapping unknown keys to [`ConfigError::UnknownField`].
pub fn parse_json(text: &str) -> Result<RawConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        match msg.strip_prefix("unknown field `") {
            Some(rest) => ConfigError::UnknownField(rest.split('`').next().unwrap_or(rest).to_string()),
            None if msg.contains("unknown field") => ConfigError::UnknownField(msg),
            None => ConfigError::OutOfRange(msg),
        }
    })
}

pub fn read_config(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_json(&text)
}

macro_rules! merge_fields {
    ($file:expr, $flags:expr, $out:expr; $($field:ident),*) => {
        $(
            $out.$field = match (&$file.$field, &$flags.$field) {
                (Some(a), Some(b)) if a != b => {
                    return Err(ConfigError::ConflictingFlags(format!(
                        "{} = {:?} in the config file but {:?} on the command line",
                        stringify!($field), a, b
                    )))
                }
                (_, Some(b)) => Some(b.clone()),
                (a, None) => a.clone(),
            };
        )*
    };
}

/// Merges a config file and flags; a field given by both must agree.
pub fn merge(file: &RawConfig, flags: &RawConfig) -> Result<RawConfig, ConfigError> {
    let mut out = RawConfig::default();
    merge_fields!(file, flags, out; model, x, a, b, c, pa, pb, q, bc, domain, seed, sweeps, burn_in, thin,
        chains, site_passes, cluster_sweeps, lambda);
    Ok(out)
}

/// Resolves a merged config into a run spec, filling defaults and attaching regime warnings.
pub fn resolve(raw: &RawConfig) -> Result<RunSpec, ConfigError> {
    let model_id = raw.model.as_deref().ok_or_else(|| ConfigError::OutOfRange("model is required".into()))?;
    let foreign = |names: &[(&str, bool)]| -> Result<(), ConfigError> {
        match names.iter().find(|(_, set)| *set) {
            Some((n, _)) => {
                Err(ConfigError::ConflictingFlags(format!("parameter {n} does not apply to model {model_id}")))
            }
            None => Ok(()),
        }
    };
    let loop_set = [("x", raw.x.is_some())];
    let six_set = [("a", raw.a.is_some()), ("b", raw.b.is_some()), ("c", raw.c.is_some())];
    let fk_set = [("pa", raw.pa.is_some()), ("pb", raw.pb.is_some()), ("q", raw.q.is_some())];
    let (model, default_domain, default_bc, regimes, warnings) = match model_id {
        "loop-o2" => {
            foreign(&six_set)?;
            foreign(&fk_set)?;
            let p = LoopParams::new(2.0, raw.x.unwrap_or(1.0))?;
            let reg = Regimes { fkg: p.fkg_regime(), super_duality: p.super_duality_regime() };
            (ModelParams::LoopO2 { x: p.x }, DomainSpec::HexBall { radius: 4 }, "++", reg, loop_regime_warnings(p.x))
        }
        "six-vertex" => {
            foreign(&loop_set)?;
            foreign(&fk_set)?;
            let p = SixVParams::new(raw.a.unwrap_or(1.0), raw.b.unwrap_or(1.0), raw.c.unwrap_or(1.5))?;
            let reg = Regimes { fkg: p.fkg_regime(), super_duality: p.super_duality_regime() };
            let dom = DomainSpec::Diamond { centre: (0, 0), radius: 4 };
            (ModelParams::SixVertex { a: p.a, b: p.b, c: p.c }, dom, "++", reg, six_vertex_regime_warnings(p))
        }
        "fk" => {
            foreign(&loop_set)?;
            foreign(&six_set)?;
            let q = raw.q.unwrap_or(2.0);
            if !(q > 0.0 && q.is_finite()) {
                return Err(ConfigError::OutOfRange(format!("q = {q} must be positive")));
            }
            let p =
                FKParams::new(raw.pa.unwrap_or_else(|| self_dual_p(q)), raw.pb.unwrap_or_else(|| self_dual_p(q)), q)?;
            let reg = Regimes { fkg: p.fkg_regime(), super_duality: false };
            let dom = DomainSpec::Diamond { centre: (1, 0), radius: 2 };
            (ModelParams::Fk { pa: p.p_a, pb: p.p_b, q }, dom, "free", reg, fk_regime_warnings(p))
        }
        other => return Err(ConfigError::OutOfRange(format!("unknown model {other:?}"))),
    };
    if let Some(l) = raw.lambda {
        if !(0.0..=PI / 3.0).contains(&l) {
            return Err(ConfigError::OutOfRange(format!("lambda = {l} not in [0, pi/3]")));
        }
    }
    let spec = RunSpec {
        model,
        bc: raw.bc.clone().unwrap_or_else(|| default_bc.to_string()),
        domain: raw.domain.clone().unwrap_or(default_domain),
        seed: raw.seed.unwrap_or(0),
        sweeps: raw.sweeps.unwrap_or(10_000),
        burn_in: raw.burn_in.unwrap_or(1_000),
        thin: raw.thin.unwrap_or(10),
        chains: raw.chains.unwrap_or(1),
        schedule: Schedule {
            site_passes: raw.site_passes.unwrap_or(1),
            cluster_sweeps: raw.cluster_sweeps.unwrap_or(1),
        },
        lambda: raw.lambda,
        regimes,
        warnings,
    };
    validate(&spec)?;
    Ok(spec)
}

fn validate(spec: &RunSpec) -> Result<(), ConfigError> {
    if spec.sweeps <= spec.burn_in {
        return Err(ConfigError::OutOfRange(format!("sweeps {} must exceed burn-in {}", spec.sweeps, spec.burn_in)));
    }
    if spec.thin == 0 || spec.chains == 0 {
        return Err(ConfigError::OutOfRange("thin and chains must be at least 1".into()));
    }
    match spec.model {
        ModelParams::LoopO2 { .. } => {
            spec.boundary()?;
            spec.domain.hex()?;
        }
        ModelParams::SixVertex { .. } => {
            spec.boundary()?;
            spec.domain.square()?;
        }
        ModelParams::Fk { .. } => {
            spec.fk_boundary()?;
            spec.domain.fk_graph()?;
        }
    }
    Ok(())
}

/// Reads an optional config file, merges the flags over it and resolves the result.
pub fn parse_config(file: Option<&Path>, flags: &RawConfig) -> Result<RunSpec, ConfigError> {
    let base = match file {
        Some(p) => read_config(p)?,
        None => RawConfig::default(),
    };
    resolve(&merge(&base, flags)?)
}
