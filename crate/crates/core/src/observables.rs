//! Measured quantities: height variance, nested-loop counts, rhombus crossings, circuit
//! events, α_n, jackknife error bars and logarithmic-growth fits.

use std::collections::VecDeque;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::lattice_core::{hex_ball, rhombus, FaceCoord, HexDomain, SitePerc, YVertex};
use crate::loop_o2::{sample_percolations, LoopConfig, SpinPair};
use crate::samplers::{run_chain, ChainConfig, LoopChain};

/// Default jackknife block size in thinned samples.
pub const DEFAULT_BLOCK: usize = 100;

/// Mean with standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors.
    pub fn contains(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Plot-ready CSV row `observable,name,n,mean,std_error,n_samples`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub observable: String,
    pub name: String,
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl EstimateRow {
    pub fn new(observable: &str, name: &str, n: usize, e: Estimate) -> Self {
        EstimateRow {
            observable: observable.to_string(),
            name: name.to_string(),
            n,
            mean: e.mean,
            std_error: e.std_error,
            n_samples: e.n_samples,
        }
    }
}

/// Block jackknife of a statistic; blocks shrink when there are fewer than two full blocks.
pub fn jackknife<T: Clone>(samples: &[T], block: usize, stat: impl Fn(&[T]) -> f64) -> Result<Estimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    let block = block.clamp(1, (n / 2).max(1));
    let nb = n / block;
    let used = &samples[..nb * block];
    let mean = stat(samples);
    let mut reps = Vec::with_capacity(nb);
    let mut rest: Vec<T> = Vec::with_capacity(used.len());
    for b in 0..nb {
        rest.clear();
        rest.extend_from_slice(&used[..b * block]);
        rest.extend_from_slice(&used[(b + 1) * block..]);
        reps.push(stat(&rest));
    }
    let avg = reps.iter().sum::<f64>() / nb as f64;
    let var = reps.iter().map(|r| (r - avg).powi(2)).sum::<f64>() * (nb as f64 - 1.0) / nb as f64;
    Ok(Estimate { mean, std_error: var.sqrt(), n_samples: n })
}

pub fn sample_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(v: &[f64]) -> f64 {
    let m = sample_mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Mean with jackknife error bar.
pub fn mean_estimate(samples: &[f64], block: usize) -> Result<Estimate> {
    jackknife(samples, block, sample_mean)
}

/// Variance of sampled heights with jackknife error bar.
pub fn height_variance(samples: &[f64], block: usize) -> Result<Estimate> {
    jackknife(samples, block, |s| if s.len() < 2 { 0.0 } else { sample_variance(s) })
}

/// Number of loops of ω strictly surrounding face `u`.
pub fn loops_around(domain: &HexDomain, omega: &LoopConfig, u: usize) -> usize {
    let nf = domain.num_faces();
    let mut wall = std::collections::HashSet::new();
    for (e, ie) in domain.interior_edges().iter().enumerate() {
        if omega.edges[e] {
            wall.insert((ie.faces.0.min(ie.faces.1), ie.faces.0.max(ie.faces.1)));
        }
    }
    let mut dist = vec![usize::MAX; nf];
    let mut dq = VecDeque::new();
    for &f in domain.boundary_faces() {
        dist[f] = 0;
        dq.push_back(f);
    }
    while let Some(f) = dq.pop_front() {
        for &g in domain.neighbors(f) {
            let cost = wall.contains(&(f.min(g), f.max(g))) as usize;
            if dist[f] + cost < dist[g] {
                dist[g] = dist[f] + cost;
                if cost == 0 {
                    dq.push_front(g);
                } else {
                    dq.push_back(g);
                }
            }
        }
    }
    dist[u]
}

fn y_indices(domain: &HexDomain, ys: &[YVertex]) -> Option<Vec<usize>> {
    ys.iter().map(|&y| domain.y_index_of(y)).collect()
}

fn side_crossing(domain: &HexDomain, xi: &SitePerc, m: u32, horizontal: bool) -> Result<bool> {
    let r = rhombus(m);
    let inside = y_indices(domain, &r.vertices).ok_or(Error::RhombusOutOfDomain(m as usize))?;
    let (a, b) = if horizontal { (&r.left, &r.right) } else { (&r.bottom, &r.top) };
    let a = y_indices(domain, a).unwrap();
    let b = y_indices(domain, b).unwrap();
    let mut member = vec![false; domain.num_y()];
    for &y in &inside {
        member[y] = true;
    }
    let ny = domain.num_y();
    let (src, dst) = (ny, ny + 1);
    let mut uf = UnionFind::<usize>::new(ny + 2);
    for &y in &inside {
        if !xi.open[y] {
            continue;
        }
        for z in domain.interior_y()[y].neighbors() {
            if let Some(zi) = domain.y_index_of(z) {
                if member[zi] && xi.open[zi] {
                    uf.union(y, zi);
                }
            }
        }
    }
    for &y in &a {
        if xi.open[y] {
            uf.union(y, src);
        }
    }
    for &y in &b {
        if xi.open[y] {
            uf.union(y, dst);
        }
    }
    Ok(uf.equiv(src, dst))
}

/// Left-right crossing of R_m by open Y-vertices.
pub fn crossing_h(domain: &HexDomain, xi: &SitePerc, m: u32) -> Result<bool> {
    side_crossing(domain, xi, m, true)
}

/// Bottom-top crossing of R_m by open Y-vertices.
pub fn crossing_v(domain: &HexDomain, xi: &SitePerc, m: u32) -> Result<bool> {
    side_crossing(domain, xi, m, false)
}

/// Interior Y-vertices of the ball Λ_r, with those touching Λ_inner and those with a
/// neighbour outside, as index lists into `domain`.
fn annulus(domain: &HexDomain, inner: u32, outer: u32) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let ball = hex_ball(outer);
    let region: Vec<YVertex> = ball.interior_y().to_vec();
    let idx = y_indices(domain, &region).ok_or(Error::AnnulusOutOfDomain)?;
    let in_region: std::collections::HashSet<YVertex> = region.iter().copied().collect();
    let mut sources = Vec::new();
    let mut exits = Vec::new();
    for (k, y) in region.iter().enumerate() {
        if y.faces().iter().any(|f| f.hex_norm() <= inner as i32) {
            sources.push(idx[k]);
        }
        if y.neighbors().iter().any(|z| !in_region.contains(z)) {
            exits.push(idx[k]);
        }
    }
    Ok((idx, sources, exits))
}

/// Whether ξ restricted to Y(Λ_outer) has a circuit surrounding Λ_inner, decided by the
/// absence of a ξ*-path from Y-vertices touching Λ_inner to the edge of Y(Λ_outer).
pub fn circuit_surrounds(domain: &HexDomain, xi: &SitePerc, inner: u32, outer: u32) -> Result<bool> {
    let (region, sources, exits) = annulus(domain, inner, outer)?;
    let mut member = vec![false; domain.num_y()];
    for &y in &region {
        member[y] = true;
    }
    let ny = domain.num_y();
    let (src, dst) = (ny, ny + 1);
    let mut uf = UnionFind::<usize>::new(ny + 2);
    for &y in &region {
        if xi.open[y] {
            continue;
        }
        for z in domain.interior_y()[y].neighbors() {
            if let Some(zi) = domain.y_index_of(z) {
                if member[zi] && !xi.open[zi] {
                    uf.union(y, zi);
                }
            }
        }
    }
    for &y in &sources {
        if !xi.open[y] {
            uf.union(y, src);
        }
    }
    for &y in &exits {
        if !xi.open[y] {
            uf.union(y, dst);
        }
    }
    Ok(!uf.equiv(src, dst))
}

/// Circ(n, 2n): a circuit of ξ in Λ_{2n} surrounding Λ_n.
pub fn circ_event(domain: &HexDomain, xi: &SitePerc, n: u32) -> Result<bool> {
    circuit_surrounds(domain, xi, n, 2 * n)
}

/// ξ^{r+}: open black sites carrying σ• = +.
pub fn xi_red_plus(domain: &HexDomain, pair: &SpinPair, u: &[f64], x: f64) -> Result<SitePerc> {
    let perc = sample_percolations(domain, pair, u, x)?;
    Ok(perc.black_split(domain, pair).0)
}

fn chain_probability(
    domain: HexDomain,
    x: f64,
    bc: Boundary,
    config: &ChainConfig,
    event: impl Fn(&HexDomain, &SitePerc) -> Result<bool>,
) -> Result<Estimate> {
    use rand::Rng;
    let mut chain = LoopChain::new(domain, x, bc)?;
    let mut rng = config.with_stream(config.stream ^ 0x5eed).rng();
    let records = run_chain(&mut chain, config, |c| {
        let u: Vec<f64> = (0..c.domain.num_y()).map(|_| rng.random()).collect();
        let xi = xi_red_plus(&c.domain, &c.pair, &u, c.x)?;
        Ok(vec![event(&c.domain, &xi)? as u8 as f64])
    })?;
    let v: Vec<f64> = records.iter().map(|r| r.values[0]).collect();
    mean_estimate(&v, DEFAULT_BLOCK)
}

/// MC estimate of μ^{r+}(H_m(ξ^{r+})) on the ball of radius `4m`.
pub fn crossing_probability(x: f64, m: u32, config: &ChainConfig) -> Result<Estimate> {
    crossing_probability_on(hex_ball(4 * m), x, Boundary::BLACK_PLUS, m, config)
}

/// MC estimate of the ξ^{r+} left-right crossing probability of R_m on a given domain.
pub fn crossing_probability_on(
    domain: HexDomain,
    x: f64,
    bc: Boundary,
    m: u32,
    config: &ChainConfig,
) -> Result<Estimate> {
    rhombus(m)
        .vertices
        .iter()
        .try_for_each(|&y| domain.y_index_of(y).map(|_| ()).ok_or(Error::RhombusOutOfDomain(m as usize)))?;
    chain_probability(domain, x, bc, config, |d, xi| crossing_h(d, xi, m))
}

/// MC estimate of the probability of a ξ^{r+} circuit in Λ_outer around Λ_inner on the ball
/// of radius `radius` under boundary condition `bc`.
pub fn circuit_probability(
    inner: u32,
    outer: u32,
    radius: u32,
    x: f64,
    bc: Boundary,
    config: &ChainConfig,
) -> Result<Estimate> {
    let domain = hex_ball(radius);
    annulus(&domain, inner, outer)?;
    chain_probability(domain, x, bc, config, |d, xi| circuit_surrounds(d, xi, inner, outer))
}

/// α_n = μ^{r−}_{Λ_{ρn}}(Circ^{r+}(n, 2n)).
pub fn alpha_n(n: u32, rho: f64, x: f64, config: &ChainConfig) -> Result<Estimate> {
    if rho <= 2.0 {
        return Err(Error::OutOfRange(format!("rho = {rho} must exceed 2")));
    }
    let radius = (rho * n as f64).ceil() as u32;
    circuit_probability(n, 2 * n, radius, x, Boundary::BLACK_MINUS, config)
}

/// Result of a weighted least-squares fit of `value` against `ln n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// 95% confidence interval of the slope.
    pub ci: (f64, f64),
}

/// Fits `value ≈ slope · ln n + intercept` with weights `1/SE²`; falls back to ordinary
/// least squares with residual error when any standard error is zero.
pub fn fit_log_growth(points: &[(f64, Estimate)]) -> Result<LogFit> {
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::InsufficientPoints(ns.len()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.mean).collect();
    let weighted = points.iter().all(|p| p.1.std_error > 0.0);
    let ws: Vec<f64> = points.iter().map(|p| if weighted { 1.0 / p.1.std_error.powi(2) } else { 1.0 }).collect();
    let sw: f64 = ws.iter().sum();
    let xm = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let slope_se = if weighted {
        (1.0 / sxx).sqrt()
    } else {
        let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
        (rss / (points.len() as f64 - 2.0) / sxx).sqrt()
    };
    Ok(LogFit { slope, intercept, slope_se, ci: (slope - 1.96 * slope_se, slope + 1.96 * slope_se) })
}

/// Whether the ball of radius `r` is centred so that face `(0,0)` is its centre face.
pub fn centre_face(domain: &HexDomain) -> Option<usize> {
    domain.index_of(FaceCoord::ORIGIN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loop_o2::{loops_of_height, LipschitzFn};

    #[test]
    fn loops_around_examples() {
        let d = hex_ball(2);
        let u = centre_face(&d).unwrap();
        assert_eq!(loops_around(&d, &LoopConfig::empty(&d), u), 0);
        let mut h = LipschitzFn { h: vec![0; d.num_faces()] };
        h.h[u] = 1;
        let omega = loops_of_height(&d, &h).unwrap();
        assert_eq!(loops_around(&d, &omega, u), 1);
        let neighbour = d.neighbors(u)[0];
        assert_eq!(loops_around(&d, &omega, neighbour), 0);
    }

    #[test]
    fn crossings_of_full_and_empty() {
        let d = hex_ball(8);
        for m in 1..=3 {
            assert!(crossing_h(&d, &SitePerc::full(&d), m).unwrap());
            assert!(!crossing_h(&d, &SitePerc::empty(&d), m).unwrap());
            assert!(crossing_v(&d, &SitePerc::full(&d), m).unwrap());
        }
        assert_eq!(crossing_h(&hex_ball(2), &SitePerc::full(&hex_ball(2)), 3), Err(Error::RhombusOutOfDomain(3)));
    }

    #[test]
    fn circuits_of_full_and_empty() {
        let d = hex_ball(5);
        assert!(circ_event(&d, &SitePerc::full(&d), 2).unwrap());
        assert!(!circ_event(&d, &SitePerc::empty(&d), 2).unwrap());
        assert_eq!(circ_event(&hex_ball(3), &SitePerc::full(&hex_ball(3)), 2), Err(Error::AnnulusOutOfDomain));
    }

    #[test]
    fn variance_and_jackknife() {
        let e = height_variance(&[3.0; 50], 10).unwrap();
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
        assert_eq!(height_variance(&[1.0], 10), Err(Error::InsufficientSamples(1)));
        let m = mean_estimate(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        let naive = (sample_variance(&[1.0, 2.0, 3.0, 4.0]) / 4.0).sqrt();
        assert!((m.std_error - naive).abs() < 1e-12);
    }

    #[test]
    fn log_fit_examples() {
        let exact: Vec<_> = [4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&n: &f64| (n, Estimate { mean: 2.0 * n.ln(), std_error: 0.0, n_samples: 10 }))
            .collect();
        let f = fit_log_growth(&exact).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        let flat: Vec<_> =
            [4.0, 8.0, 16.0].iter().map(|&n| (n, Estimate { mean: 1.0, std_error: 0.1, n_samples: 10 })).collect();
        let f = fit_log_growth(&flat).unwrap();
        assert!(f.ci.0 <= 0.0 && 0.0 <= f.ci.1);
        assert_eq!(fit_log_growth(&flat[..2]), Err(Error::InsufficientPoints(2)));
    }
}
