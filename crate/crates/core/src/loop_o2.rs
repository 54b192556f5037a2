//! Loop O(n) model, Lipschitz height functions, the two-spin representation and the
//! black/white site percolations on the hexagonal lattice.

use petgraph::unionfind::UnionFind;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::lattice_core::{HexDomain, SitePerc};

/// Loop weight `n` and edge weight `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopParams {
    pub n: f64,
    pub x: f64,
}

impl LoopParams {
    pub fn new(n: f64, x: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::OutOfRange(format!("loop weight n = {n} must be positive")));
        }
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::OutOfRange(format!("edge weight x = {x} must be positive")));
        }
        Ok(LoopParams { n, x })
    }

    /// `x ≤ 1`.
    pub fn fkg_regime(&self) -> bool {
        self.x <= 1.0 + 1e-12
    }

    /// `1/√2 ≤ x ≤ 1`.
    pub fn super_duality_regime(&self) -> bool {
        self.x >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12 && self.fkg_regime()
    }
}

/// Subset of the interior hexagonal edges, indexed like [`HexDomain::interior_edges`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LoopConfig {
    pub edges: Vec<bool>,
}

impl LoopConfig {
    pub fn empty(domain: &HexDomain) -> Self {
        LoopConfig { edges: vec![false; domain.interior_edges().len()] }
    }

    pub fn len(&self) -> usize {
        self.edges.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Integer heights on the faces of a domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LipschitzFn {
    pub h: Vec<i32>,
}

impl LipschitzFn {
    /// Adjacent heights differ by at most one.
    pub fn is_lipschitz(&self, domain: &HexDomain) -> bool {
        domain.edges().iter().all(|&(a, b)| (self.h[a] - self.h[b]).abs() <= 1)
    }

    /// Zero on every boundary face.
    pub fn is_zero_boundary(&self, domain: &HexDomain) -> bool {
        domain.boundary_faces().iter().all(|&f| self.h[f] == 0)
    }
}

/// Black and white ±1 spins on every face.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinPair {
    pub black: Vec<i8>,
    pub white: Vec<i8>,
}

impl SpinPair {
    pub fn all_plus(num_faces: usize) -> Self {
        SpinPair { black: vec![1; num_faces], white: vec![1; num_faces] }
    }

    /// Whether the boundary condition holds on ∂_F Ω.
    pub fn satisfies(&self, domain: &HexDomain, bc: Boundary) -> bool {
        domain
            .boundary_faces()
            .iter()
            .all(|&f| bc.black.is_none_or(|s| self.black[f] == s) && bc.white.is_none_or(|s| self.white[f] == s))
    }

    /// Height modulo 4 encoded by the pair at face `f`.
    pub fn class(&self, f: usize) -> i32 {
        match (self.black[f], self.white[f]) {
            (1, 1) => 0,
            (1, _) => 1,
            (_, -1) => 2,
            _ => 3,
        }
    }
}

/// Black and white site percolations on Y(Ω).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PercolationPair {
    pub black: SitePerc,
    pub white: SitePerc,
}

impl PercolationPair {
    /// ξ^{r+} and ξ^{r−}: open black sites split by the black spin.
    pub fn black_split(&self, domain: &HexDomain, pair: &SpinPair) -> (SitePerc, SitePerc) {
        split(domain, &self.black, &pair.black)
    }

    /// ξ^{w+} and ξ^{w−}: open white sites split by the white spin.
    pub fn white_split(&self, domain: &HexDomain, pair: &SpinPair) -> (SitePerc, SitePerc) {
        split(domain, &self.white, &pair.white)
    }
}

fn split(domain: &HexDomain, xi: &SitePerc, spins: &[i8]) -> (SitePerc, SitePerc) {
    let mut plus = SitePerc::empty(domain);
    let mut minus = SitePerc::empty(domain);
    for y in 0..domain.num_y() {
        if xi.open[y] {
            if spins[domain.y_faces(y)[0]] > 0 {
                plus.open[y] = true;
            } else {
                minus.open[y] = true;
            }
        }
    }
    (plus, minus)
}

/// `n^{ℓ(ω)} x^{|ω|}`.
pub fn loop_weight(domain: &HexDomain, omega: &LoopConfig, params: LoopParams) -> Result<f64> {
    let loops = decompose_loops(domain, omega)?;
    Ok(params.n.powi(loops.len() as i32) * params.x.powi(omega.len() as i32))
}

/// Partitions ω into cycles, each listed as interior-edge indices in traversal order.
pub fn decompose_loops(domain: &HexDomain, omega: &LoopConfig) -> Result<Vec<Vec<usize>>> {
    let nv = domain.num_vertices();
    let ny = domain.num_y();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (e, ie) in domain.interior_edges().iter().enumerate() {
        if omega.edges[e] {
            incident[ie.y].push(e);
            incident[ny + ie.down].push(e);
        }
    }
    for (v, inc) in incident.iter().enumerate() {
        if inc.len() != 0 && inc.len() != 2 {
            return Err(Error::InvalidDegree { vertex: v, degree: inc.len() });
        }
    }
    let other_end = |e: usize, v: usize| {
        let ie = domain.interior_edges()[e];
        if v == ie.y {
            ny + ie.down
        } else {
            ie.y
        }
    };
    let mut used = vec![false; omega.edges.len()];
    let mut loops = Vec::new();
    for start in 0..omega.edges.len() {
        if !omega.edges[start] || used[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut e = start;
        let mut v = domain.interior_edges()[start].y;
        loop {
            used[e] = true;
            cycle.push(e);
            v = other_end(e, v);
            let next = incident[v].iter().copied().find(|&f| f != e).expect("degree two");
            if used[next] {
                break;
            }
            e = next;
        }
        loops.push(cycle);
    }
    Ok(loops)
}

/// (σ•, σ°) with σ• = + iff `h ∈ {0,1} + 4ℤ` and σ° = + iff `h ∈ {0,−1} + 4ℤ`.
pub fn height_to_spins(h: &LipschitzFn) -> SpinPair {
    let black = h.h.iter().map(|&v| if matches!(v.rem_euclid(4), 0 | 1) { 1 } else { -1 }).collect();
    let white = h.h.iter().map(|&v| if matches!(v.rem_euclid(4), 0 | 3) { 1 } else { -1 }).collect();
    SpinPair { black, white }
}

/// σ•⊥σ°: on every pair of adjacent faces one of the two spins agrees.
pub fn is_consistent(domain: &HexDomain, pair: &SpinPair) -> bool {
    domain.edges().iter().all(|&(a, b)| pair.black[a] == pair.black[b] || pair.white[a] == pair.white[b])
}

/// The unique zero-boundary Lipschitz function with the given spin representation.
pub fn spins_to_height(domain: &HexDomain, pair: &SpinPair) -> Result<LipschitzFn> {
    if !is_consistent(domain, pair) {
        return Err(Error::InconsistentPair);
    }
    if !pair.satisfies(domain, Boundary::PLUS_PLUS) {
        return Err(Error::NotRepresentable);
    }
    let nf = domain.num_faces();
    let root = domain.boundary_faces()[0];
    let mut h = vec![i32::MIN; nf];
    h[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(f) = queue.pop_front() {
        for &g in domain.neighbors(f) {
            if h[g] == i32::MIN {
                h[g] = h[f] + step(pair.class(g) - pair.class(f));
                queue.push_back(g);
            }
        }
    }
    let ok_edges = domain.edges().iter().all(|&(a, b)| h[b] - h[a] == step(pair.class(b) - pair.class(a)));
    let ok_boundary = domain.boundary_faces().iter().all(|&f| h[f] == 0);
    if !(ok_edges && ok_boundary) {
        return Err(Error::NotRepresentable);
    }
    Ok(LipschitzFn { h })
}

fn step(diff: i32) -> i32 {
    match diff.rem_euclid(4) {
        0 => 0,
        1 => 1,
        3 => -1,
        _ => unreachable!("consistent classes differ by at most one"),
    }
}

/// Indices into [`HexDomain::edges`] of the domain wall ω[σ].
pub fn domain_wall(domain: &HexDomain, spins: &[i8]) -> Vec<usize> {
    domain.edges().iter().enumerate().filter(|(_, &(a, b))| spins[a] != spins[b]).map(|(e, _)| e).collect()
}

/// ω[h]: interior edges separating faces of different height.
pub fn loops_of_height(domain: &HexDomain, h: &LipschitzFn) -> Result<LoopConfig> {
    walls_to_config(domain, |a, b| h.h[a] != h.h[b])
}

/// ω[σ•] ∪ ω[σ°] as a loop configuration.
pub fn loops_of_spins(domain: &HexDomain, pair: &SpinPair) -> Result<LoopConfig> {
    if !is_consistent(domain, pair) {
        return Err(Error::InconsistentPair);
    }
    walls_to_config(domain, |a, b| pair.black[a] != pair.black[b] || pair.white[a] != pair.white[b])
}

fn walls_to_config(domain: &HexDomain, wall: impl Fn(usize, usize) -> bool) -> Result<LoopConfig> {
    let interior: std::collections::HashSet<(usize, usize)> = domain.interior_edges().iter().map(|e| e.faces).collect();
    if domain.edges().iter().any(|&(a, b)| wall(a, b) && !interior.contains(&(a, b))) {
        return Err(Error::WallOnBoundary);
    }
    let edges = domain.interior_edges().iter().map(|e| wall(e.faces.0, e.faces.1)).collect();
    Ok(LoopConfig { edges })
}

/// Whether the spins are not constant on the three faces of interior Y-vertex `y`.
pub fn disagrees_at(domain: &HexDomain, spins: &[i8], y: usize) -> bool {
    let [a, b, c] = domain.y_faces(y);
    spins[a] != spins[b] || spins[a] != spins[c]
}

/// |Y[σ•] ∪ Y[σ°]| over Y(Ω).
pub fn wall_vertex_count(domain: &HexDomain, pair: &SpinPair) -> usize {
    (0..domain.num_y())
        .filter(|&y| disagrees_at(domain, &pair.black, y) || disagrees_at(domain, &pair.white, y))
        .count()
}

/// `(x²)^{|Y[σ•] ∪ Y[σ°]|}`.
pub fn spin_weight(domain: &HexDomain, pair: &SpinPair, x: f64) -> Result<f64> {
    if !is_consistent(domain, pair) {
        return Err(Error::InconsistentPair);
    }
    Ok((x * x).powi(wall_vertex_count(domain, pair) as i32))
}

/// Black and white percolations from the spins and one uniform per Y-vertex.
pub fn sample_percolations(domain: &HexDomain, pair: &SpinPair, u: &[f64], x: f64) -> Result<PercolationPair> {
    if !is_consistent(domain, pair) {
        return Err(Error::InconsistentPair);
    }
    let x2 = x * x;
    let ny = domain.num_y();
    let mut black = SitePerc { open: vec![false; ny] };
    let mut white = SitePerc { open: vec![false; ny] };
    for y in 0..ny {
        let (b, w) = if disagrees_at(domain, &pair.black, y) {
            (false, true)
        } else if disagrees_at(domain, &pair.white, y) {
            (true, false)
        } else {
            (u[y] <= x2, u[y] > 1.0 - x2)
        };
        black.open[y] = b;
        white.open[y] = w;
    }
    Ok(PercolationPair { black, white })
}

/// Unnormalised weight of (σ•, σ°, ξ•); zero when an indicator fails.
pub fn joint_weight(domain: &HexDomain, sigma_black: &[i8], sigma_white: &[i8], xi_black: &SitePerc, x: f64) -> f64 {
    let x2 = x * x;
    let pair = SpinPair { black: sigma_black.to_vec(), white: sigma_white.to_vec() };
    if !is_consistent(domain, &pair) {
        return 0.0;
    }
    let mut w = 1.0;
    for y in 0..domain.num_y() {
        let bd = disagrees_at(domain, sigma_black, y);
        if xi_black.open[y] {
            if bd {
                return 0.0;
            }
            w *= x2;
        } else {
            if disagrees_at(domain, sigma_white, y) {
                return 0.0;
            }
            w *= if bd { x2 } else { 1.0 - x2 };
        }
    }
    w
}

/// Resamples σ° given (σ•, ξ•): one fair sign per component of E_Δ((ξ•)*), with
/// components touching ∂_F Ω set to the boundary value when `bc.white` is fixed.
pub fn resample_white_given_black<R: Rng + ?Sized>(
    domain: &HexDomain,
    sigma_black: &[i8],
    xi_black: &SitePerc,
    rng: &mut R,
    bc: Boundary,
) -> Result<Vec<i8>> {
    resample_given(domain, sigma_black, xi_black, rng, bc.white)
}

/// Resamples σ• given (σ°, ξ°), symmetric to [`resample_white_given_black`].
pub fn resample_black_given_white<R: Rng + ?Sized>(
    domain: &HexDomain,
    sigma_white: &[i8],
    xi_white: &SitePerc,
    rng: &mut R,
    bc: Boundary,
) -> Result<Vec<i8>> {
    resample_given(domain, sigma_white, xi_white, rng, bc.black)
}

fn resample_given<R: Rng + ?Sized>(
    domain: &HexDomain,
    fixed: &[i8],
    xi: &SitePerc,
    rng: &mut R,
    forced: Option<i8>,
) -> Result<Vec<i8>> {
    for y in 0..domain.num_y() {
        if xi.open[y] && disagrees_at(domain, fixed, y) {
            return Err(Error::IncompatibleInput(format!("spins not constant on open site {y}")));
        }
    }
    let labels = closed_components(domain, xi);
    Ok(assign_signs(&labels, |f| domain.is_boundary(f), forced, rng))
}

/// Component labels of the faces under E_Δ(ξ*).
pub fn closed_components(domain: &HexDomain, xi: &SitePerc) -> Vec<usize> {
    let mut uf = UnionFind::<usize>::new(domain.num_faces());
    for y in 0..domain.num_y() {
        if !xi.open[y] {
            let [a, b, c] = domain.y_faces(y);
            uf.union(a, b);
            uf.union(a, c);
        }
    }
    uf.into_labeling()
}

/// One fair sign per label, overridden by `forced` on labels containing a boundary face.
pub(crate) fn assign_signs<R: Rng + ?Sized>(
    labels: &[usize],
    is_boundary: impl Fn(usize) -> bool,
    forced: Option<i8>,
    rng: &mut R,
) -> Vec<i8> {
    let n = labels.len();
    let mut value = vec![0i8; n];
    if let Some(s) = forced {
        for f in 0..n {
            if is_boundary(f) {
                value[labels[f]] = s;
            }
        }
    }
    let mut out = vec![0i8; n];
    for f in 0..n {
        let l = labels[f];
        if value[l] == 0 {
            value[l] = if rng.random::<bool>() { 1 } else { -1 };
        }
        out[f] = value[l];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::{hex_ball, FaceCoord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn centre_height(d: &HexDomain, v: i32) -> LipschitzFn {
        let mut h = vec![0; d.num_faces()];
        h[d.index_of(FaceCoord::ORIGIN).unwrap()] = v;
        LipschitzFn { h }
    }

    #[test]
    fn loop_weight_examples() {
        let d = hex_ball(1);
        let p = LoopParams::new(2.0, 1.0).unwrap();
        assert_eq!(loop_weight(&d, &LoopConfig::empty(&d), p).unwrap(), 1.0);
        let hexagon = LoopConfig { edges: vec![true; 6] };
        assert!((loop_weight(&d, &hexagon, p).unwrap() - 2.0).abs() < 1e-15);
        let q = LoopParams::new(2.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert!((loop_weight(&d, &hexagon, q).unwrap() - 0.25).abs() < 1e-15);
        let mut broken = LoopConfig::empty(&d);
        broken.edges[0] = true;
        assert!(matches!(loop_weight(&d, &broken, p), Err(Error::InvalidDegree { .. })));
    }

    #[test]
    fn decompose_examples() {
        let d = hex_ball(1);
        assert!(decompose_loops(&d, &LoopConfig::empty(&d)).unwrap().is_empty());
        let loops = decompose_loops(&d, &LoopConfig { edges: vec![true; 6] }).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 6);
        let big = hex_ball(3);
        let mut h = vec![0; big.num_faces()];
        for (i, f) in big.faces().iter().enumerate() {
            h[i] = match f.hex_norm() {
                0 => 2,
                1 => 1,
                _ => 0,
            };
        }
        let omega = loops_of_height(&big, &LipschitzFn { h }).unwrap();
        let loops = decompose_loops(&big, &omega).unwrap();
        assert_eq!(loops.len(), 2);
        assert_eq!(loops.iter().map(Vec::len).sum::<usize>(), 6 + 18);
    }

    #[test]
    fn height_to_spins_examples() {
        let d = hex_ball(1);
        let s = height_to_spins(&centre_height(&d, 0));
        assert!(s.black.iter().chain(&s.white).all(|&v| v == 1));
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let s1 = height_to_spins(&centre_height(&d, 1));
        assert_eq!((s1.black[c], s1.white[c]), (1, -1));
        let sm = height_to_spins(&centre_height(&d, -1));
        assert_eq!((sm.black[c], sm.white[c]), (-1, 1));
        assert!(is_consistent(&d, &s1) && is_consistent(&d, &sm));
    }

    #[test]
    fn spins_to_height_round_trip_and_errors() {
        let d = hex_ball(1);
        let h = centre_height(&d, 1);
        assert_eq!(spins_to_height(&d, &height_to_spins(&h)).unwrap(), h);
        assert_eq!(spins_to_height(&d, &SpinPair::all_plus(7)).unwrap(), centre_height(&d, 0));
        let mut bad = SpinPair::all_plus(7);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        bad.black[c] = -1;
        bad.white[c] = -1;
        assert_eq!(spins_to_height(&d, &bad).unwrap_err(), Error::InconsistentPair);
        let mut off = SpinPair::all_plus(7);
        off.black = vec![-1; 7];
        assert_eq!(spins_to_height(&d, &off).unwrap_err(), Error::NotRepresentable);
    }

    #[test]
    fn loops_and_weight_of_centre_flip() {
        let d = hex_ball(1);
        let pair = height_to_spins(&centre_height(&d, 1));
        assert_eq!(loops_of_spins(&d, &pair).unwrap().len(), 6);
        assert_eq!(domain_wall(&d, &pair.black).len(), 0);
        assert_eq!(domain_wall(&d, &pair.white).len(), 6);
        let x: f64 = 0.8;
        assert!((spin_weight(&d, &pair, x).unwrap() - x.powi(6)).abs() < 1e-15);
        assert_eq!(spin_weight(&d, &SpinPair::all_plus(7), x).unwrap(), 1.0);
    }

    #[test]
    fn percolation_cases() {
        let d = hex_ball(1);
        let c = d.index_of(FaceCoord::ORIGIN).unwrap();
        let pair = height_to_spins(&centre_height(&d, -1));
        let p = sample_percolations(&d, &pair, &[0.0, 0.5, 0.99], 0.9).unwrap();
        assert!(p.black.open.iter().all(|&b| !b));
        assert!(p.white.open.iter().all(|&b| b));
        let plus = SpinPair::all_plus(7);
        let x = std::f64::consts::FRAC_1_SQRT_2;
        let p = sample_percolations(&d, &plus, &[0.3, 0.7, 0.3], x).unwrap();
        assert_eq!(p.black.open, vec![true, false, true]);
        assert_eq!(p.white.open, vec![false, true, false]);
        let flipped = height_to_spins(&centre_height(&d, 1));
        let p = sample_percolations(&d, &flipped, &[0.99; 3], 0.1).unwrap();
        assert!(p.black.open.iter().all(|&b| b) && p.white.open.iter().all(|&b| !b));
        assert!(d.face_y(c).len() == 3);
    }

    #[test]
    fn joint_weight_examples() {
        let d = hex_ball(1);
        let plus = SpinPair::all_plus(7);
        let x: f64 = 0.9;
        let full = SitePerc::full(&d);
        let w = joint_weight(&d, &plus.black, &plus.white, &full, x);
        assert!((w - (x * x).powi(3)).abs() < 1e-15);
        let minus = height_to_spins(&centre_height(&d, -1));
        assert_eq!(joint_weight(&d, &minus.black, &minus.white, &full, x), 0.0);
    }

    #[test]
    fn resample_examples() {
        let d = hex_ball(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let plus = vec![1i8; d.num_faces()];
        let all = resample_white_given_black(&d, &plus, &SitePerc::full(&d), &mut rng, Boundary::FREE).unwrap();
        assert_eq!(all.len(), d.num_faces());
        let none = SitePerc::empty(&d);
        for _ in 0..10 {
            let w = resample_white_given_black(&d, &plus, &none, &mut rng, Boundary::FREE).unwrap();
            assert!(w.iter().all(|&s| s == w[0]));
            let f = resample_white_given_black(&d, &plus, &none, &mut rng, Boundary::WHITE_PLUS).unwrap();
            assert!(f.iter().all(|&s| s == 1));
        }
        let mut mixed = plus.clone();
        mixed[d.index_of(FaceCoord::ORIGIN).unwrap()] = -1;
        let err = resample_white_given_black(&d, &mixed, &SitePerc::full(&d), &mut rng, Boundary::FREE);
        assert!(matches!(err, Err(Error::IncompatibleInput(_))));
    }
}
