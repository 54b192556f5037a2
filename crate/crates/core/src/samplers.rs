//! Exact-enumeration oracles and Markov chain engines: single-site Glauber dynamics,
//! cluster sweeps from the conditional resampling of one colour, and the FK heat bath.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::lattice_core::{Colour, HexDomain, SquareDomain};
use crate::loop_o2::{
    closed_components, disagrees_at, is_consistent, loop_weight, loops_of_height, resample_black_given_white,
    resample_white_given_black, sample_percolations, spin_weight, LipschitzFn, LoopConfig, LoopParams, SpinPair,
};
use crate::random_cluster::{fk_weight, FKConfig, FKParams, FkBoundary, FkGraph};
use crate::six_vertex::{
    check_ice_rule, hom_weight, resample_given_6v, sample_percolations_6v, spin_weight_6v, vertex_type_of_spins,
    GraphHom, SixVParams, SpinPair6V, VertexClass,
};

/// Name of the pseudo-random generator recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), seed_from_u64 + per-chain stream";

/// Model and domain to enumerate.
#[derive(Clone, Copy, Debug)]
pub enum ModelSpec<'a> {
    /// Zero-boundary Lipschitz functions weighted by `x^{|ω(h)|}`.
    LoopHeights { domain: &'a HexDomain, x: f64 },
    /// Consistent spin pairs under a boundary condition, weighted by the spin weight.
    LoopSpins { domain: &'a HexDomain, x: f64, bc: Boundary },
    /// Loop configurations weighted by `n^{ℓ(ω)} x^{|ω|}`.
    LoopConfigs { domain: &'a HexDomain, params: LoopParams },
    /// Graph homomorphisms with 0,1 boundary values, weighted by the vertex weights.
    SixVertexHeights { domain: &'a SquareDomain, params: SixVParams },
    /// Ice-rule spin pairs under a boundary condition, weighted by the domain-wall weight.
    SixVertexSpins { domain: &'a SquareDomain, params: SixVParams, bc: Boundary },
    /// FK configurations on a graph.
    Fk { graph: &'a FkGraph, params: FKParams, bc: FkBoundary },
}

impl ModelSpec<'_> {
    /// Label of the state encoding.
    pub fn encoding(&self) -> &'static str {
        match self {
            ModelSpec::LoopHeights { .. } => "loop-heights",
            ModelSpec::LoopSpins { .. } => "loop-spins",
            ModelSpec::LoopConfigs { .. } => "loop-configs",
            ModelSpec::SixVertexHeights { .. } => "six-vertex-heights",
            ModelSpec::SixVertexSpins { .. } => "six-vertex-spins",
            ModelSpec::Fk { .. } => "fk",
        }
    }
}

/// Normalised distribution over canonically encoded states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub encoding: String,
    pub states: Vec<Vec<i32>>,
    pub probs: Vec<f64>,
    pub z: f64,
}

impl ExactDistribution {
    fn from_weights(encoding: &str, states: Vec<Vec<i32>>, weights: Vec<f64>) -> Self {
        let z: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / z).collect();
        ExactDistribution { encoding: encoding.to_string(), states, probs, z }
    }

    /// Probability of each state, keyed by encoding.
    pub fn as_map(&self) -> HashMap<Vec<i32>, f64> {
        self.states.iter().cloned().zip(self.probs.iter().copied()).collect()
    }

    /// Expectation of a function of the encoded state.
    pub fn expect(&self, f: impl Fn(&[i32]) -> f64) -> f64 {
        self.states.iter().zip(&self.probs).map(|(s, p)| p * f(s)).sum()
    }

    /// Pushforward under a map of encodings.
    pub fn pushforward(&self, encoding: &str, f: impl Fn(&[i32]) -> Vec<i32>) -> ExactDistribution {
        let mut acc: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
        for (s, p) in self.states.iter().zip(&self.probs) {
            *acc.entry(f(s)).or_default() += p;
        }
        let (states, probs) = acc.into_iter().unzip();
        ExactDistribution { encoding: encoding.to_string(), states, probs, z: 1.0 }
    }
}

/// Encodes a loop spin pair as black spins followed by white spins.
pub fn encode_loop_spins(pair: &SpinPair) -> Vec<i32> {
    pair.black.iter().chain(&pair.white).map(|&s| s as i32).collect()
}

pub fn decode_loop_spins(state: &[i32]) -> SpinPair {
    let n = state.len() / 2;
    SpinPair {
        black: state[..n].iter().map(|&s| s as i8).collect(),
        white: state[n..].iter().map(|&s| s as i8).collect(),
    }
}

pub fn encode_bits(bits: &[bool]) -> Vec<i32> {
    bits.iter().map(|&b| b as i32).collect()
}

pub fn decode_bits(state: &[i32]) -> Vec<bool> {
    state.iter().map(|&b| b != 0).collect()
}

pub fn encode_6v_spins(pair: &SpinPair6V) -> Vec<i32> {
    pair.sigma.iter().map(|&s| s as i32).collect()
}

pub fn decode_6v_spins(state: &[i32]) -> SpinPair6V {
    SpinPair6V { sigma: state.iter().map(|&s| s as i8).collect() }
}

/// Exact distribution of the model, or `TooLarge` when the state count exceeds `budget`.
pub fn enumerate_exact(spec: &ModelSpec<'_>, budget: u64) -> Result<ExactDistribution> {
    let enc = spec.encoding();
    let (states, weights): (Vec<Vec<i32>>, Vec<f64>) = match *spec {
        ModelSpec::LoopHeights { domain, x } => {
            let fixed: Vec<Option<i32>> = (0..domain.num_faces()).map(|f| domain.is_boundary(f).then_some(0)).collect();
            let hs = enumerate_heights(domain.num_faces(), &fixed, |f| domain.neighbors(f), &[-1, 0, 1], budget)?;
            hs.into_iter()
                .map(|h| {
                    let lf = LipschitzFn { h };
                    let w = x.powi(loops_of_height(domain, &lf)?.len() as i32);
                    Ok((lf.h, w))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
        ModelSpec::LoopSpins { domain, x, bc } => {
            let nf = domain.num_faces();
            let mut slots = Vec::new();
            for f in 0..nf {
                let b = domain.is_boundary(f);
                slots.push((f, if b { bc.black } else { None }));
            }
            for f in 0..nf {
                let b = domain.is_boundary(f);
                slots.push((nf + f, if b { bc.white } else { None }));
            }
            let mut out = (Vec::new(), Vec::new());
            for state in enumerate_signs(&slots, budget)? {
                let pair = decode_loop_spins(&state);
                if is_consistent(domain, &pair) {
                    out.1.push(spin_weight(domain, &pair, x)?);
                    out.0.push(state);
                }
            }
            out
        }
        ModelSpec::LoopConfigs { domain, params } => {
            let m = domain.interior_edges().len();
            check_bits(m, budget)?;
            let mut out = (Vec::new(), Vec::new());
            for mask in 0u64..1 << m {
                let omega = LoopConfig { edges: (0..m).map(|e| mask >> e & 1 == 1).collect() };
                if let Ok(w) = loop_weight(domain, &omega, params) {
                    out.0.push(encode_bits(&omega.edges));
                    out.1.push(w);
                }
            }
            out
        }
        ModelSpec::SixVertexHeights { domain, params } => {
            let fixed: Vec<Option<i32>> = (0..domain.num_squares())
                .map(|n| domain.is_boundary(n).then_some(if domain.colour(n) == Colour::Black { 0 } else { 1 }))
                .collect();
            let hs = enumerate_heights(domain.num_squares(), &fixed, |n| domain.neighbors(n), &[-1, 1], budget)?;
            hs.into_iter()
                .map(|h| {
                    let g = GraphHom { h };
                    let w = hom_weight(domain, &g, params)?;
                    Ok((g.h, w))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
        ModelSpec::SixVertexSpins { domain, params, bc } => {
            let slots: Vec<_> = (0..domain.num_squares())
                .map(|n| {
                    let fixed = match domain.colour(n) {
                        Colour::Black => bc.black,
                        Colour::White => bc.white,
                    };
                    (n, if domain.is_boundary(n) { fixed } else { None })
                })
                .collect();
            let mut out = (Vec::new(), Vec::new());
            for state in enumerate_signs(&slots, budget)? {
                let pair = decode_6v_spins(&state);
                if check_ice_rule(domain, &pair).is_ok() {
                    out.1.push(spin_weight_6v(domain, &pair, params)?);
                    out.0.push(state);
                }
            }
            out
        }
        ModelSpec::Fk { graph, params, bc } => {
            let m = graph.num_edges();
            check_bits(m, budget)?;
            (0u64..1 << m)
                .map(|mask| {
                    let open: Vec<bool> = (0..m).map(|e| mask >> e & 1 == 1).collect();
                    let w = fk_weight(graph, &FKConfig { open: open.clone(), bc }, params);
                    (encode_bits(&open), w)
                })
                .unzip()
        }
    };
    Ok(ExactDistribution::from_weights(enc, states, weights))
}

fn check_bits(m: usize, budget: u64) -> Result<()> {
    if m >= 63 || (1u64 << m) > budget {
        return Err(Error::TooLarge { budget });
    }
    Ok(())
}

/// All ±1 vectors over `slots` (position, forced value), positions forming `0..slots.len()`.
fn enumerate_signs(slots: &[(usize, Option<i8>)], budget: u64) -> Result<Vec<Vec<i32>>> {
    let free: Vec<usize> = slots.iter().filter(|s| s.1.is_none()).map(|s| s.0).collect();
    check_bits(free.len(), budget)?;
    let mut base = vec![0i32; slots.len()];
    for &(p, f) in slots {
        base[p] = f.unwrap_or(1) as i32;
    }
    Ok((0u64..1 << free.len())
        .map(|mask| {
            let mut s = base.clone();
            for (k, &p) in free.iter().enumerate() {
                s[p] = if mask >> k & 1 == 1 { -1 } else { 1 };
            }
            s
        })
        .collect())
}

/// Height functions extending `fixed` in which neighbours differ by one of `steps`.
fn enumerate_heights<'a>(
    n: usize,
    fixed: &[Option<i32>],
    neighbors: impl Fn(usize) -> &'a [usize],
    steps: &[i32],
    budget: u64,
) -> Result<Vec<Vec<i32>>> {
    let mut order: Vec<usize> = Vec::new();
    let mut placed = vec![false; n];
    let mut queue: std::collections::VecDeque<usize> = (0..n).filter(|&v| fixed[v].is_some()).collect();
    for &v in &queue {
        placed[v] = true;
    }
    if queue.is_empty() {
        queue.push_back(0);
        placed[0] = true;
        order.push(0);
    }
    while let Some(v) = queue.pop_front() {
        for &w in neighbors(v) {
            if !placed[w] {
                placed[w] = true;
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    let mut h: Vec<Option<i32>> = fixed.to_vec();
    if h.iter().all(|v| v.is_none()) {
        h[0] = Some(0);
        order.remove(0);
    }
    let mut out = Vec::new();
    fn rec<'a>(
        k: usize,
        order: &[usize],
        h: &mut Vec<Option<i32>>,
        neighbors: &impl Fn(usize) -> &'a [usize],
        steps: &[i32],
        out: &mut Vec<Vec<i32>>,
        budget: u64,
    ) -> Result<()> {
        if k == order.len() {
            if out.len() as u64 >= budget {
                return Err(Error::TooLarge { budget });
            }
            out.push(h.iter().map(|v| v.unwrap()).collect());
            return Ok(());
        }
        let v = order[k];
        let anchor = neighbors(v).iter().find_map(|&w| h[w]).expect("order is connected");
        for &s in steps {
            let cand = anchor + s;
            if neighbors(v).iter().all(|&w| h[w].is_none_or(|hw| steps.contains(&(cand - hw)))) {
                h[v] = Some(cand);
                rec(k + 1, order, h, neighbors, steps, out, budget)?;
                h[v] = None;
            }
        }
        Ok(())
    }
    rec(0, &order, &mut h, &neighbors, steps, &mut out, budget)?;
    Ok(out)
}

/// Histogram of sampled encoded states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Empirical {
    pub encoding: String,
    pub counts: BTreeMap<Vec<i32>, u64>,
    pub total: u64,
}

impl Empirical {
    pub fn new(encoding: &str) -> Self {
        Empirical { encoding: encoding.to_string(), counts: BTreeMap::new(), total: 0 }
    }

    pub fn push(&mut self, state: Vec<i32>) {
        *self.counts.entry(state).or_default() += 1;
        self.total += 1;
    }
}

/// `½ Σ |p̂ − p|`.
pub fn tv_distance(empirical: &Empirical, exact: &ExactDistribution) -> Result<f64> {
    if empirical.encoding != exact.encoding {
        return Err(Error::EncodingMismatch);
    }
    let len = exact.states.first().map(|s| s.len());
    if empirical.counts.keys().any(|s| Some(s.len()) != len) {
        return Err(Error::EncodingMismatch);
    }
    if empirical.total == 0 {
        return Err(Error::InsufficientSamples(0));
    }
    let map = exact.as_map();
    let n = empirical.total as f64;
    let mut tv = 0.0;
    for (s, &c) in &empirical.counts {
        tv += (c as f64 / n - map.get(s).copied().unwrap_or(0.0)).abs();
    }
    for (s, &p) in exact.states.iter().zip(&exact.probs) {
        if !empirical.counts.contains_key(s) {
            tv += p;
        }
    }
    Ok(tv / 2.0)
}

/// Largest deviation `max_t |Σ_s π(s) K(s,t) − π(t)|` of a kernel from stationarity.
pub fn stationarity_defect(exact: &ExactDistribution, kernel: impl Fn(&[i32]) -> Vec<(Vec<i32>, f64)>) -> f64 {
    let index: HashMap<&Vec<i32>, usize> = exact.states.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let mut out = vec![0.0; exact.states.len()];
    let mut leak = 0.0;
    for (s, &p) in exact.states.iter().zip(&exact.probs) {
        for (t, k) in kernel(s) {
            match index.get(&t) {
                Some(&j) => out[j] += p * k,
                None => leak += p * k,
            }
        }
    }
    out.iter().zip(&exact.probs).map(|(a, b)| (a - b).abs()).fold(leak, f64::max)
}

fn spin_of(pair: &SpinPair, colour: Colour) -> &[i8] {
    match colour {
        Colour::Black => &pair.black,
        Colour::White => &pair.white,
    }
}

fn fixed_value(bc: Boundary, colour: Colour) -> Option<i8> {
    match colour {
        Colour::Black => bc.black,
        Colour::White => bc.white,
    }
}

/// Conditional law of the spin of `colour` at `face`: `(P(+), P(−))`.
fn loop_site_law(
    domain: &HexDomain,
    pair: &mut SpinPair,
    face: usize,
    colour: Colour,
    x: f64,
    bc: Boundary,
) -> Option<f64> {
    if domain.is_boundary(face) && fixed_value(bc, colour).is_some() {
        return None;
    }
    let old = spin_of(pair, colour)[face];
    let x2 = x * x;
    let mut w = [0.0; 2];
    for (k, s) in [1i8, -1].into_iter().enumerate() {
        match colour {
            Colour::Black => pair.black[face] = s,
            Colour::White => pair.white[face] = s,
        }
        let consistent = domain
            .neighbors(face)
            .iter()
            .all(|&g| pair.black[face] == pair.black[g] || pair.white[face] == pair.white[g]);
        if consistent {
            let walls = domain
                .face_y(face)
                .iter()
                .filter(|&&y| disagrees_at(domain, &pair.black, y) || disagrees_at(domain, &pair.white, y))
                .count();
            w[k] = x2.powi(walls as i32);
        }
    }
    match colour {
        Colour::Black => pair.black[face] = old,
        Colour::White => pair.white[face] = old,
    }
    Some(w[0] / (w[0] + w[1]))
}

/// Heat-bath update of one spin of the loop O(2) pair; frozen when a flip breaks consistency.
pub fn glauber_step<R: Rng + ?Sized>(
    domain: &HexDomain,
    pair: &mut SpinPair,
    face: usize,
    colour: Colour,
    rng: &mut R,
    x: f64,
    bc: Boundary,
) {
    if let Some(p_plus) = loop_site_law(domain, pair, face, colour, x, bc) {
        let s = if rng.random::<f64>() < p_plus { 1 } else { -1 };
        match colour {
            Colour::Black => pair.black[face] = s,
            Colour::White => pair.white[face] = s,
        }
    }
}

/// Exact transition law of [`glauber_step`] on encoded loop spin pairs.
pub fn glauber_kernel(
    domain: &HexDomain,
    state: &[i32],
    face: usize,
    colour: Colour,
    x: f64,
    bc: Boundary,
) -> Vec<(Vec<i32>, f64)> {
    let mut pair = decode_loop_spins(state);
    match loop_site_law(domain, &mut pair, face, colour, x, bc) {
        None => vec![(state.to_vec(), 1.0)],
        Some(p) => {
            let offset = if colour == Colour::Black { 0 } else { domain.num_faces() };
            let mut plus = state.to_vec();
            plus[offset + face] = 1;
            let mut minus = state.to_vec();
            minus[offset + face] = -1;
            vec![(plus, p), (minus, 1.0 - p)]
        }
    }
}

fn check_loop_cluster(x: f64, bc: Boundary) -> Result<()> {
    if x > 1.0 {
        return Err(Error::Unsupported(format!("cluster sweep needs x <= 1, got {x}")));
    }
    if !bc.fixes_some_colour() {
        return Err(Error::Unsupported("cluster sweep needs a fixed boundary colour".into()));
    }
    Ok(())
}

/// Samples the percolation of `colour` given the spins, then resamples the other colour
/// by independent signs on the clusters of the dual percolation.
pub fn cluster_sweep<R: Rng + ?Sized>(
    domain: &HexDomain,
    pair: &mut SpinPair,
    colour: Colour,
    rng: &mut R,
    x: f64,
    bc: Boundary,
) -> Result<()> {
    check_loop_cluster(x, bc)?;
    let u: Vec<f64> = (0..domain.num_y()).map(|_| rng.random()).collect();
    let xi = sample_percolations(domain, pair, &u, x)?;
    match colour {
        Colour::Black => pair.white = resample_white_given_black(domain, &pair.black, &xi.black, rng, bc)?,
        Colour::White => pair.black = resample_black_given_white(domain, &pair.white, &xi.white, rng, bc)?,
    }
    Ok(())
}

/// Exact transition law of [`cluster_sweep`] on encoded loop spin pairs.
pub fn cluster_kernel(
    domain: &HexDomain,
    state: &[i32],
    colour: Colour,
    x: f64,
    bc: Boundary,
) -> Result<Vec<(Vec<i32>, f64)>> {
    check_loop_cluster(x, bc)?;
    let pair = decode_loop_spins(state);
    let (own, other) = match colour {
        Colour::Black => (&pair.black, &pair.white),
        Colour::White => (&pair.white, &pair.black),
    };
    let x2 = x * x;
    let ny = domain.num_y();
    let mut forced = vec![None; ny];
    for (y, f) in forced.iter_mut().enumerate() {
        if disagrees_at(domain, own, y) {
            *f = Some(false);
        } else if disagrees_at(domain, other, y) {
            *f = Some(true);
        }
    }
    let free: Vec<usize> = (0..ny).filter(|&y| forced[y].is_none()).collect();
    let target = colour.other();
    let offset = if target == Colour::Black { 0 } else { domain.num_faces() };
    let mut out = Vec::new();
    for mask in 0u64..1 << free.len() {
        let mut xi = crate::lattice_core::SitePerc { open: forced.iter().map(|f| f.unwrap_or(false)).collect() };
        let mut p = 1.0;
        for (k, &y) in free.iter().enumerate() {
            let open = mask >> k & 1 == 1;
            xi.open[y] = open;
            p *= if open { x2 } else { 1.0 - x2 };
        }
        if p == 0.0 {
            continue;
        }
        let labels = closed_components(domain, &xi);
        push_sign_assignments(&labels, |f| domain.is_boundary(f), fixed_value(bc, target), state, offset, p, &mut out);
    }
    Ok(out)
}

fn push_sign_assignments(
    labels: &[usize],
    is_boundary: impl Fn(usize) -> bool,
    forced: Option<i8>,
    state: &[i32],
    offset: usize,
    p: f64,
    out: &mut Vec<(Vec<i32>, f64)>,
) {
    let mut fixed: HashMap<usize, i8> = HashMap::new();
    if let Some(s) = forced {
        for (f, &l) in labels.iter().enumerate() {
            if is_boundary(f) {
                fixed.insert(l, s);
            }
        }
    }
    let mut free: Vec<usize> = labels.iter().copied().filter(|l| !fixed.contains_key(l)).collect();
    free.sort_unstable();
    free.dedup();
    let share = p / (1u64 << free.len()) as f64;
    for mask in 0u64..1 << free.len() {
        let mut s = state.to_vec();
        for (f, &l) in labels.iter().enumerate() {
            let v = match fixed.get(&l) {
                Some(&v) => v,
                None => {
                    let k = free.binary_search(&l).unwrap();
                    if mask >> k & 1 == 1 {
                        -1
                    } else {
                        1
                    }
                }
            };
            s[offset + f] = v as i32;
        }
        out.push((s, share));
    }
}

fn sixv_site_law(
    domain: &SquareDomain,
    pair: &mut SpinPair6V,
    n: usize,
    params: SixVParams,
    bc: Boundary,
) -> Option<f64> {
    if domain.is_boundary(n) && fixed_value(bc, domain.colour(n)).is_some() {
        return None;
    }
    let old = pair.sigma[n];
    let mut w = [0.0; 2];
    for (k, s) in [1i8, -1].into_iter().enumerate() {
        pair.sigma[n] = s;
        let mut weight = 1.0;
        for &x in domain.square_vertices(n) {
            match vertex_type_of_spins(domain, pair, x) {
                Ok(t) => {
                    weight *= match t.class {
                        VertexClass::A => params.a / params.c,
                        VertexClass::B => params.b / params.c,
                        VertexClass::C => 1.0,
                    }
                }
                Err(_) => {
                    weight = 0.0;
                    break;
                }
            }
        }
        w[k] = weight;
    }
    pair.sigma[n] = old;
    Some(w[0] / (w[0] + w[1]))
}

/// Heat-bath update of the spin on square `n` of the six-vertex pair.
pub fn glauber_step_6v<R: Rng + ?Sized>(
    domain: &SquareDomain,
    pair: &mut SpinPair6V,
    n: usize,
    rng: &mut R,
    params: SixVParams,
    bc: Boundary,
) {
    if let Some(p_plus) = sixv_site_law(domain, pair, n, params, bc) {
        pair.sigma[n] = if rng.random::<f64>() < p_plus { 1 } else { -1 };
    }
}

/// Exact transition law of [`glauber_step_6v`].
pub fn glauber_kernel_6v(
    domain: &SquareDomain,
    state: &[i32],
    n: usize,
    params: SixVParams,
    bc: Boundary,
) -> Vec<(Vec<i32>, f64)> {
    let mut pair = decode_6v_spins(state);
    match sixv_site_law(domain, &mut pair, n, params, bc) {
        None => vec![(state.to_vec(), 1.0)],
        Some(p) => {
            let mut plus = state.to_vec();
            plus[n] = 1;
            let mut minus = state.to_vec();
            minus[n] = -1;
            vec![(plus, p), (minus, 1.0 - p)]
        }
    }
}

fn check_6v_cluster(params: SixVParams, bc: Boundary) -> Result<()> {
    if !params.fkg_regime() {
        return Err(Error::Unsupported("cluster sweep needs a, b <= c".into()));
    }
    if !bc.fixes_some_colour() {
        return Err(Error::Unsupported("cluster sweep needs a fixed boundary colour".into()));
    }
    Ok(())
}

/// Six-vertex cluster sweep: percolation of `colour`, then fresh signs for the other colour.
pub fn cluster_sweep_6v<R: Rng + ?Sized>(
    domain: &SquareDomain,
    pair: &mut SpinPair6V,
    colour: Colour,
    rng: &mut R,
    params: SixVParams,
    bc: Boundary,
) -> Result<()> {
    check_6v_cluster(params, bc)?;
    let u: Vec<f64> = (0..domain.num_vertices()).map(|_| rng.random()).collect();
    let xi = sample_percolations_6v(domain, pair, &u, params)?;
    *pair = resample_given_6v(domain, pair, xi.open(colour), colour.other(), rng, bc)?;
    Ok(())
}

/// Exact transition law of [`cluster_sweep_6v`].
pub fn cluster_kernel_6v(
    domain: &SquareDomain,
    state: &[i32],
    colour: Colour,
    params: SixVParams,
    bc: Boundary,
) -> Result<Vec<(Vec<i32>, f64)>> {
    check_6v_cluster(params, bc)?;
    let pair = decode_6v_spins(state);
    let nv = domain.num_vertices();
    let mut forced = vec![None; nv];
    let mut prob = vec![0.0; nv];
    for (x, v) in domain.vertices().iter().enumerate() {
        let own = v.diagonal(colour);
        let oth = v.diagonal(colour.other());
        if pair.sigma[own.0] != pair.sigma[own.1] {
            forced[x] = Some(false);
        } else if pair.sigma[oth.0] != pair.sigma[oth.1] {
            forced[x] = Some(true);
        } else {
            prob[x] = params.ratio(v.class(colour));
        }
    }
    let free: Vec<usize> = (0..nv).filter(|&x| forced[x].is_none()).collect();
    let target = colour.other();
    let mut out = Vec::new();
    for mask in 0u64..1 << free.len() {
        let mut xi: Vec<bool> = forced.iter().map(|f| f.unwrap_or(false)).collect();
        let mut p = 1.0;
        for (k, &x) in free.iter().enumerate() {
            let open = mask >> k & 1 == 1;
            xi[x] = open;
            p *= if open { prob[x] } else { 1.0 - prob[x] };
        }
        if p == 0.0 {
            continue;
        }
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(domain.num_squares());
        for (x, v) in domain.vertices().iter().enumerate() {
            if !xi[x] {
                let (a, b) = v.diagonal(target);
                uf.union(a, b);
            }
        }
        let labels = uf.into_labeling();
        let members: Vec<usize> = domain.of_colour(target);
        let sub_labels: Vec<usize> = members.iter().map(|&m| labels[m]).collect();
        let mut local = Vec::new();
        let sub_state: Vec<i32> = members.iter().map(|&m| state[m]).collect();
        push_sign_assignments(
            &sub_labels,
            |k| domain.is_boundary(members[k]),
            fixed_value(bc, target),
            &sub_state,
            0,
            p,
            &mut local,
        );
        for (sub, q) in local {
            let mut s = state.to_vec();
            for (k, &m) in members.iter().enumerate() {
                s[m] = sub[k];
            }
            out.push((s, q));
        }
    }
    Ok(out)
}

fn fk_open_probability(graph: &FkGraph, open: &mut [bool], e: usize, params: FKParams, bc: FkBoundary) -> f64 {
    let saved = open[e];
    open[e] = false;
    let labels = graph.cluster_labels(open, bc);
    open[e] = saved;
    let (a, b) = graph.edges[e];
    let delta = if labels[a] == labels[b] { 0 } else { 1 };
    let p = params.p(graph.classes[e]);
    p / (p + (1.0 - p) * params.q.powi(delta))
}

/// Heat-bath update of edge `e`: open with probability `p/(p + (1−p)q^δ)`.
pub fn fk_heatbath_step<R: Rng + ?Sized>(
    graph: &FkGraph,
    open: &mut [bool],
    e: usize,
    rng: &mut R,
    params: FKParams,
    bc: FkBoundary,
) {
    let p = fk_open_probability(graph, open, e, params, bc);
    open[e] = rng.random::<f64>() < p;
}

/// Exact transition law of [`fk_heatbath_step`].
pub fn fk_kernel(graph: &FkGraph, state: &[i32], e: usize, params: FKParams, bc: FkBoundary) -> Vec<(Vec<i32>, f64)> {
    let mut open = decode_bits(state);
    let p = fk_open_probability(graph, &mut open, e, params, bc);
    let mut up = state.to_vec();
    up[e] = 1;
    let mut down = state.to_vec();
    down[e] = 0;
    vec![(up, p), (down, 1.0 - p)]
}

/// Number of site passes and cluster sweeps per chain sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// Full Glauber passes over both colours.
    pub site_passes: u32,
    /// Black-then-white cluster sweep pairs.
    pub cluster_sweeps: u32,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { site_passes: 1, cluster_sweeps: 1 }
    }
}

/// Seed, length and thinning of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    pub stream: u64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub schedule: Schedule,
}

impl ChainConfig {
    pub fn new(seed: u64, sweeps: usize, burn_in: usize, thin: usize) -> Result<Self> {
        let c = ChainConfig { seed, stream: 0, sweeps, burn_in, thin, schedule: Schedule::default() };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(Error::OutOfRange(format!("sweeps {} must exceed burn-in {}", self.sweeps, self.burn_in)));
        }
        if self.thin == 0 {
            return Err(Error::OutOfRange("thinning must be at least 1".into()));
        }
        Ok(())
    }

    /// Generator for this chain's stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }
}

/// A Markov chain with a full-sweep move.
pub trait Chain {
    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, schedule: Schedule) -> Result<()>;
    /// Canonical encoding of the current state.
    fn encode(&self) -> Vec<i32>;
    /// Regime and fallback warnings raised at construction.
    fn warnings(&self) -> &[String];
}

/// One thinned record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub sweep: usize,
    pub values: Vec<f64>,
}

/// Runs the chain and records `observe` at every thinned sweep after burn-in.
pub fn run_chain<C: Chain>(
    chain: &mut C,
    config: &ChainConfig,
    mut observe: impl FnMut(&C) -> Result<Vec<f64>>,
) -> Result<Vec<Record>> {
    config.validate()?;
    let mut rng = config.rng();
    let mut out = Vec::new();
    for s in 0..config.sweeps {
        chain.sweep(&mut rng, config.schedule)?;
        if s >= config.burn_in && (s - config.burn_in) % config.thin == 0 {
            out.push(Record { sweep: s, values: observe(chain)? });
        }
    }
    Ok(out)
}

/// Warnings for loop O(2) parameters outside the proven regimes.
pub fn loop_regime_warnings(x: f64) -> Vec<String> {
    let mut w = Vec::new();
    if x > 1.0 {
        w.push(format!("WARNING: x = {x} > 1 is outside the FKG regime"));
    }
    if x < std::f64::consts::FRAC_1_SQRT_2 - 1e-12 {
        w.push(format!("WARNING: x = {x} < 1/sqrt(2) is outside the super-duality regime"));
    }
    w
}

/// Warnings for six-vertex weights outside the proven regimes.
pub fn six_vertex_regime_warnings(params: SixVParams) -> Vec<String> {
    let mut w = Vec::new();
    if !params.fkg_regime() {
        w.push(format!("WARNING: c = {} < max(a, b) is outside the FKG regime", params.c));
    }
    if params.c > (params.a + params.b) * (1.0 + 1e-12) {
        w.push(format!("WARNING: c = {} > a + b is the localised regime", params.c));
    }
    w
}

/// Warnings for FK parameters outside the FKG regime.
pub fn fk_regime_warnings(params: FKParams) -> Vec<String> {
    if params.fkg_regime() {
        Vec::new()
    } else {
        vec![format!("WARNING: q = {} < 1, the FKG inequality fails", params.q)]
    }
}

/// Loop O(2) chain on spin pairs.
#[derive(Clone, Debug)]
pub struct LoopChain {
    pub domain: HexDomain,
    pub pair: SpinPair,
    pub x: f64,
    pub bc: Boundary,
    pub cluster_moves: bool,
    warnings: Vec<String>,
}

impl LoopChain {
    /// Starts from the constant pair matching the boundary condition.
    pub fn new(domain: HexDomain, x: f64, bc: Boundary) -> Result<Self> {
        LoopParams::new(2.0, x)?;
        let nf = domain.num_faces();
        let pair = SpinPair { black: vec![bc.black.unwrap_or(1); nf], white: vec![bc.white.unwrap_or(1); nf] };
        let mut warnings = loop_regime_warnings(x);
        let cluster_moves = match check_loop_cluster(x, bc) {
            Ok(()) => true,
            Err(e) => {
                warnings.push(format!("WARNING: {e}; using Glauber moves only"));
                false
            }
        };
        Ok(LoopChain { domain, pair, x, bc, cluster_moves, warnings })
    }
}

impl Chain for LoopChain {
    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, schedule: Schedule) -> Result<()> {
        for _ in 0..schedule.site_passes {
            for f in 0..self.domain.num_faces() {
                for colour in [Colour::Black, Colour::White] {
                    glauber_step(&self.domain, &mut self.pair, f, colour, rng, self.x, self.bc);
                }
            }
        }
        if self.cluster_moves {
            for _ in 0..schedule.cluster_sweeps {
                for colour in [Colour::Black, Colour::White] {
                    cluster_sweep(&self.domain, &mut self.pair, colour, rng, self.x, self.bc)?;
                }
            }
        }
        Ok(())
    }

    fn encode(&self) -> Vec<i32> {
        encode_loop_spins(&self.pair)
    }

    fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Six-vertex chain on spin pairs.
#[derive(Clone, Debug)]
pub struct SixVertexChain {
    pub domain: SquareDomain,
    pub pair: SpinPair6V,
    pub params: SixVParams,
    pub bc: Boundary,
    pub cluster_moves: bool,
    warnings: Vec<String>,
}

impl SixVertexChain {
    pub fn new(domain: SquareDomain, params: SixVParams, bc: Boundary) -> Result<Self> {
        let sigma = (0..domain.num_squares())
            .map(|n| match domain.colour(n) {
                Colour::Black => bc.black.unwrap_or(1),
                Colour::White => bc.white.unwrap_or(1),
            })
            .collect();
        let mut warnings = six_vertex_regime_warnings(params);
        let cluster_moves = match check_6v_cluster(params, bc) {
            Ok(()) => true,
            Err(e) => {
                warnings.push(format!("WARNING: {e}; using Glauber moves only"));
                false
            }
        };
        Ok(SixVertexChain { domain, pair: SpinPair6V { sigma }, params, bc, cluster_moves, warnings })
    }
}

impl Chain for SixVertexChain {
    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, schedule: Schedule) -> Result<()> {
        for _ in 0..schedule.site_passes {
            for n in 0..self.domain.num_squares() {
                glauber_step_6v(&self.domain, &mut self.pair, n, rng, self.params, self.bc);
            }
        }
        if self.cluster_moves {
            for _ in 0..schedule.cluster_sweeps {
                for colour in [Colour::Black, Colour::White] {
                    cluster_sweep_6v(&self.domain, &mut self.pair, colour, rng, self.params, self.bc)?;
                }
            }
        }
        Ok(())
    }

    fn encode(&self) -> Vec<i32> {
        encode_6v_spins(&self.pair)
    }

    fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// FK heat-bath chain.
#[derive(Clone, Debug)]
pub struct FkChain {
    pub graph: FkGraph,
    pub open: Vec<bool>,
    pub params: FKParams,
    pub bc: FkBoundary,
    warnings: Vec<String>,
}

impl FkChain {
    pub fn new(graph: FkGraph, params: FKParams, bc: FkBoundary) -> Self {
        let open = vec![false; graph.num_edges()];
        let warnings = fk_regime_warnings(params);
        FkChain { graph, open, params, bc, warnings }
    }
}

impl Chain for FkChain {
    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, schedule: Schedule) -> Result<()> {
        for _ in 0..schedule.site_passes.max(1) {
            for e in 0..self.graph.num_edges() {
                fk_heatbath_step(&self.graph, &mut self.open, e, rng, self.params, self.bc);
            }
        }
        Ok(())
    }

    fn encode(&self) -> Vec<i32> {
        encode_bits(&self.open)
    }

    fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::{hex_ball, SquareCoord};
    use crate::random_cluster::DEFAULT_BUDGET;

    #[test]
    fn loop_partition_function_on_unit_ball() {
        let d = hex_ball(1);
        let x = 0.8f64;
        let e = enumerate_exact(&ModelSpec::LoopHeights { domain: &d, x }, DEFAULT_BUDGET).unwrap();
        assert_eq!(e.states.len(), 3);
        assert!((e.z - (1.0 + 2.0 * x.powi(6))).abs() < 1e-12);
    }

    #[test]
    fn six_vertex_block_has_two_states() {
        let d = SquareDomain::rectangle(0, 2, -1, 1).unwrap();
        let p = SixVParams::new(1.0, 0.8, 1.6).unwrap();
        let e = enumerate_exact(&ModelSpec::SixVertexHeights { domain: &d, params: p }, DEFAULT_BUDGET).unwrap();
        assert_eq!(e.states.len(), 2);
        let c = d.index_of(SquareCoord::new(1, 0)).unwrap();
        let flat = e.states.iter().position(|s| s[c] == 1).unwrap();
        let ratio = e.probs[1 - flat] / e.probs[flat];
        assert!((ratio - 0.64 / 1.6f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn fk_single_edge() {
        let g = FkGraph::new(2, vec![(0, 1)]);
        let p = FKParams::isotropic(0.4, 3.0).unwrap();
        let e = enumerate_exact(&ModelSpec::Fk { graph: &g, params: p, bc: FkBoundary::Free }, DEFAULT_BUDGET).unwrap();
        let (w0, w1) = (0.6 * 9.0, 0.4 * 3.0);
        assert!((e.probs[0] - w0 / (w0 + w1)).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let d = hex_ball(3);
        let r = enumerate_exact(&ModelSpec::LoopSpins { domain: &d, x: 1.0, bc: Boundary::FREE }, 1 << 10);
        assert_eq!(r, Err(Error::TooLarge { budget: 1 << 10 }));
    }

    #[test]
    fn tv_examples() {
        let exact =
            ExactDistribution { encoding: "t".into(), states: vec![vec![0], vec![1]], probs: vec![0.5, 0.5], z: 1.0 };
        let mut emp = Empirical::new("t");
        for _ in 0..6 {
            emp.push(vec![0]);
        }
        for _ in 0..4 {
            emp.push(vec![1]);
        }
        assert!((tv_distance(&emp, &exact).unwrap() - 0.1).abs() < 1e-12);
        let mut disjoint = Empirical::new("t");
        disjoint.push(vec![2]);
        assert!((tv_distance(&disjoint, &exact).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(tv_distance(&Empirical::new("u"), &exact), Err(Error::EncodingMismatch));
    }

    #[test]
    fn heatbath_bridge_probability() {
        let g = FkGraph::new(2, vec![(0, 1)]);
        let p = FKParams::isotropic(0.5, 2.0).unwrap();
        let k = fk_kernel(&g, &[0], 0, p, FkBoundary::Free);
        assert!((k[0].1 - 1.0 / 3.0).abs() < 1e-12);
        let cyc = FkGraph::new(2, vec![(0, 1), (0, 1)]);
        let k = fk_kernel(&cyc, &[0, 1], 0, p, FkBoundary::Free);
        assert!((k[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kernels_preserve_the_loop_measure() {
        let d = hex_ball(1);
        for (x, bc) in [(0.8, Boundary::PLUS_PLUS), (1.0, Boundary::BLACK_PLUS), (0.6, Boundary::WHITE_PLUS)] {
            let exact = enumerate_exact(&ModelSpec::LoopSpins { domain: &d, x, bc }, DEFAULT_BUDGET).unwrap();
            for f in 0..d.num_faces() {
                for colour in [Colour::Black, Colour::White] {
                    let defect = stationarity_defect(&exact, |s| glauber_kernel(&d, s, f, colour, x, bc));
                    assert!(defect < 1e-12);
                }
            }
            for colour in [Colour::Black, Colour::White] {
                let defect = stationarity_defect(&exact, |s| cluster_kernel(&d, s, colour, x, bc).unwrap());
                assert!(defect < 1e-12, "cluster {colour:?} {bc}: {defect}");
            }
        }
    }

    #[test]
    fn kernels_preserve_the_six_vertex_measure() {
        let d = SquareDomain::diamond(SquareCoord::new(0, 0), 2);
        let p = SixVParams::new(1.0, 0.8, 1.6).unwrap();
        for bc in [Boundary::PLUS_PLUS, Boundary::BLACK_PLUS] {
            let exact =
                enumerate_exact(&ModelSpec::SixVertexSpins { domain: &d, params: p, bc }, DEFAULT_BUDGET).unwrap();
            for n in 0..d.num_squares() {
                assert!(stationarity_defect(&exact, |s| glauber_kernel_6v(&d, s, n, p, bc)) < 1e-12);
            }
            for colour in [Colour::Black, Colour::White] {
                let defect = stationarity_defect(&exact, |s| cluster_kernel_6v(&d, s, colour, p, bc).unwrap());
                assert!(defect < 1e-12, "cluster {colour:?} {bc}: {defect}");
            }
        }
    }

    #[test]
    fn heatbath_preserves_fk_measure() {
        let d = SquareDomain::diamond(SquareCoord::new(1, 0), 2);
        let g = FkGraph::black_graph(&d);
        let p = FKParams::isotropic(0.6, 2.0).unwrap();
        for bc in [FkBoundary::Free, FkBoundary::Wired] {
            let exact = enumerate_exact(&ModelSpec::Fk { graph: &g, params: p, bc }, DEFAULT_BUDGET).unwrap();
            for e in 0..g.num_edges() {
                assert!(stationarity_defect(&exact, |s| fk_kernel(&g, s, e, p, bc)) < 1e-12);
            }
        }
    }

    #[test]
    fn chain_record_count_and_determinism() {
        let cfg = ChainConfig::new(7, 10, 9, 1).unwrap();
        let mut a = LoopChain::new(hex_ball(2), 0.9, Boundary::PLUS_PLUS).unwrap();
        let ra = run_chain(&mut a, &cfg, |c| Ok(c.encode().iter().map(|&v| v as f64).collect())).unwrap();
        assert_eq!(ra.len(), 1);
        let mut b = LoopChain::new(hex_ball(2), 0.9, Boundary::PLUS_PLUS).unwrap();
        let rb = run_chain(&mut b, &cfg, |c| Ok(c.encode().iter().map(|&v| v as f64).collect())).unwrap();
        assert_eq!(ra, rb);
        assert!(ChainConfig::new(1, 5, 5, 1).is_err());
        assert!(ChainConfig::new(1, 5, 0, 0).is_err());
    }

    #[test]
    fn free_boundary_disables_cluster_moves() {
        let c = LoopChain::new(hex_ball(1), 1.0, Boundary::FREE).unwrap();
        assert!(!c.cluster_moves);
        assert!(c.warnings().iter().any(|w| w.contains("Glauber")));
        assert!(loop_regime_warnings(0.6).len() == 1);
        assert!(six_vertex_regime_warnings(SixVParams::new(1.0, 1.0, 3.0).unwrap()).len() == 1);
    }

    #[test]
    fn white_plus_boundary_clusters_return_plus() {
        let d = hex_ball(2);
        let mut c = LoopChain::new(d.clone(), 0.9, Boundary::WHITE_PLUS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            cluster_sweep(&d, &mut c.pair, Colour::Black, &mut rng, 0.9, Boundary::WHITE_PLUS).unwrap();
            assert!(d.boundary_faces().iter().all(|&f| c.pair.white[f] == 1));
        }
    }
}
