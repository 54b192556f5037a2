//! Random-cluster model on the black diagonal graph, planar duality, and the BKW torus
//! machinery: interface loops, oriented-loop weights, 𝔷_n, 𝔷_{n,k}, H₈, p₈ and the
//! torus spin observable.

use std::f64::consts::PI;

use num_complex::Complex64;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_core::{DiagClass, SquareDomain, TorusLattice};

/// Default cap on the number of enumerated states.
pub const DEFAULT_BUDGET: u64 = 1 << 26;

/// Edge weights `p_a`, `p_b` and cluster weight `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FKParams {
    pub p_a: f64,
    pub p_b: f64,
    pub q: f64,
}

impl FKParams {
    pub fn new(p_a: f64, p_b: f64, q: f64) -> Result<Self> {
        for (name, p) in [("p_a", p_a), ("p_b", p_b)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange(format!("{name} = {p} not in [0,1]")));
            }
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::OutOfRange(format!("q = {q} must be positive")));
        }
        Ok(FKParams { p_a, p_b, q })
    }

    /// Isotropic parameters.
    pub fn isotropic(p: f64, q: f64) -> Result<Self> {
        Self::new(p, p, q)
    }

    /// `p_a/(1−p_a) · p_b/(1−p_b) = q`.
    pub fn is_self_dual(&self) -> bool {
        let lhs = self.p_a / (1.0 - self.p_a) * self.p_b / (1.0 - self.p_b);
        (lhs - self.q).abs() <= 1e-12 * self.q.max(1.0)
    }

    /// `q ≥ 1`.
    pub fn fkg_regime(&self) -> bool {
        self.q >= 1.0
    }

    pub fn p(&self, class: DiagClass) -> f64 {
        match class {
            DiagClass::A => self.p_a,
            DiagClass::B => self.p_b,
        }
    }
}

/// Free or wired boundary condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FkBoundary {
    Free,
    Wired,
}

impl std::str::FromStr for FkBoundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(FkBoundary::Free),
            "wired" => Ok(FkBoundary::Wired),
            _ => Err(Error::OutOfRange(format!("unknown FK boundary '{s}'"))),
        }
    }
}

/// A finite multigraph carrying FK configurations; edges have a weight class and a set
/// of nodes is identified under wired boundary conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct FkGraph {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub classes: Vec<DiagClass>,
    pub boundary: Vec<usize>,
}

impl FkGraph {
    /// Graph with all edges of class `a` and no boundary nodes.
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        let classes = vec![DiagClass::A; edges.len()];
        FkGraph { num_nodes, edges, classes, boundary: Vec::new() }
    }

    /// Black graph Ω•: black squares joined by the black diagonals of interior vertices.
    /// Edge `x` is d•_x; node order follows the black squares in domain order.
    pub fn black_graph(domain: &SquareDomain) -> Self {
        let black = domain.of_colour(crate::lattice_core::Colour::Black);
        let mut node = vec![usize::MAX; domain.num_squares()];
        for (k, &s) in black.iter().enumerate() {
            node[s] = k;
        }
        let edges = domain.vertices().iter().map(|v| (node[v.black.0], node[v.black.1])).collect();
        let classes = domain.vertices().iter().map(|v| v.black_class).collect();
        let boundary = black.iter().enumerate().filter(|&(_, &s)| domain.is_boundary(s)).map(|(k, _)| k).collect();
        FkGraph { num_nodes: black.len(), edges, classes, boundary }
    }

    /// Black graph of the torus; edge `v` is the black diagonal at vertex `v`.
    pub fn torus_black(torus: &TorusLattice) -> Self {
        let black = torus.black_faces();
        let mut node = vec![usize::MAX; torus.num_faces()];
        for (k, &s) in black.iter().enumerate() {
            node[s] = k;
        }
        let edges: Vec<_> = (0..torus.num_vertices())
            .map(|v| {
                let (a, b) = torus.black_diagonal(v);
                (node[a], node[b])
            })
            .collect();
        let classes = (0..torus.num_vertices())
            .map(|v| {
                let (i, j) = torus.coords(v);
                if (i + j) % 2 == 0 {
                    DiagClass::A
                } else {
                    DiagClass::B
                }
            })
            .collect();
        FkGraph { num_nodes: black.len(), edges, classes, boundary: Vec::new() }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    fn union_find(&self, open: &[bool], bc: FkBoundary) -> UnionFind<usize> {
        let mut uf = UnionFind::new(self.num_nodes);
        if bc == FkBoundary::Wired {
            for w in self.boundary.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        for (&(a, b), &o) in self.edges.iter().zip(open) {
            if o {
                uf.union(a, b);
            }
        }
        uf
    }

    /// Number of clusters `k(η)`, counted after wiring when requested.
    pub fn cluster_count(&self, open: &[bool], bc: FkBoundary) -> usize {
        let mut labels = self.union_find(open, bc).into_labeling();
        labels.sort_unstable();
        labels.dedup();
        labels.len()
    }

    /// Cluster label of every node.
    pub fn cluster_labels(&self, open: &[bool], bc: FkBoundary) -> Vec<usize> {
        self.union_find(open, bc).into_labeling()
    }
}

/// Open edge set with its boundary condition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FKConfig {
    pub open: Vec<bool>,
    pub bc: FkBoundary,
}

/// `p_a^{|η∩E_a|} p_b^{|η∩E_b|} (1−p_a)^{…} (1−p_b)^{…} q^{k(η)}`.
pub fn fk_weight(graph: &FkGraph, eta: &FKConfig, params: FKParams) -> f64 {
    let mut w = params.q.powi(graph.cluster_count(&eta.open, eta.bc) as i32);
    for (&o, &class) in eta.open.iter().zip(&graph.classes) {
        let p = params.p(class);
        w *= if o { p } else { 1.0 - p };
    }
    w
}

/// Dual configuration on the white graph: d°_x is open iff d•_x is closed.
pub fn dual_config(eta: &FKConfig) -> FKConfig {
    let bc = match eta.bc {
        FkBoundary::Free => FkBoundary::Wired,
        FkBoundary::Wired => FkBoundary::Free,
    };
    FKConfig { open: eta.open.iter().map(|&o| !o).collect(), bc }
}

/// Symmetric self-dual edge weight `√q/(1+√q)`.
pub fn self_dual_p(q: f64) -> f64 {
    let s = q.sqrt();
    s / (1.0 + s)
}

/// Whether nodes `u` and `v` lie in the same open cluster.
pub fn two_point_connected(graph: &FkGraph, open: &[bool], u: usize, v: usize) -> bool {
    graph.union_find(open, FkBoundary::Free).equiv(u, v)
}

/// Exact FK distribution over all `2^|E|` configurations, indexed by the bit mask of open edges.
pub fn fk_exact(graph: &FkGraph, params: FKParams, bc: FkBoundary, budget: u64) -> Result<Vec<f64>> {
    let m = graph.num_edges();
    if m >= 63 || (1u64 << m) > budget {
        return Err(Error::TooLarge { budget });
    }
    let mut w: Vec<f64> = (0..1usize << m)
        .map(|mask| {
            let open = (0..m).map(|e| mask >> e & 1 == 1).collect();
            fk_weight(graph, &FKConfig { open, bc }, params)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|p| *p /= z);
    Ok(w)
}

/// Whether `lower` is stochastically dominated by `upper` on `{0,1}^m`, checked over every
/// increasing event. Feasible for `m ≤ 4`.
pub fn stochastically_dominated(lower: &[f64], upper: &[f64], m: usize, tol: f64) -> Result<bool> {
    if m > 4 || lower.len() != 1 << m || upper.len() != 1 << m {
        return Err(Error::TooLarge { budget: 1 << 16 });
    }
    for event in increasing_events(m) {
        let pl: f64 = (0..1 << m).filter(|&s| event >> s & 1 == 1).map(|s| lower[s]).sum();
        let pu: f64 = (0..1 << m).filter(|&s| event >> s & 1 == 1).map(|s| upper[s]).sum();
        if pl > pu + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All up-closed subsets of `{0,1}^m` as bit masks over states, `m ≤ 4`.
pub fn increasing_events(m: usize) -> Vec<u64> {
    let n = 1usize << m;
    (0..1u64 << n)
        .filter(|&ev| (0..n).all(|s| ev >> s & 1 == 0 || (0..m).all(|e| ev >> (s | 1 << e) & 1 == 1)))
        .collect()
}

/// Spectral parameter `λ ∈ [0, π/3]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BKWParams {
    pub lambda: f64,
}

impl BKWParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=PI / 3.0 + 1e-12).contains(&lambda) {
            return Err(Error::OutOfRange(format!("lambda = {lambda} not in [0, pi/3]")));
        }
        Ok(BKWParams { lambda })
    }

    /// `c = 2cos(λ/2)`.
    pub fn c(&self) -> f64 {
        2.0 * (self.lambda / 2.0).cos()
    }

    /// `√q = 2cos λ`.
    pub fn sqrt_q(&self) -> f64 {
        2.0 * self.lambda.cos()
    }
}

/// Probability that an `m`-step simple random walk on ℤ ends in 8ℤ.
pub fn p8(m: usize) -> Result<f64> {
    if m % 2 == 1 {
        return Err(Error::OddStepCount(m));
    }
    Ok(p8_closed(m))
}

fn p8_closed(m: usize) -> f64 {
    (0..8).map(|j| (PI * j as f64 / 4.0).cos().powi(m as i32)).sum::<f64>() / 8.0
}

/// The same probability by summing binomial coefficients, as an exact fraction `(num, 2^m)`.
pub fn p8_binomial(m: usize) -> (u128, u128) {
    let mut row = vec![1u128];
    for _ in 0..m {
        let mut next = vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    let num = (0..=m).filter(|&r| (2 * r as i64 - m as i64).rem_euclid(8) == 0).map(|r| row[r]).sum();
    (num, 1u128 << m)
}

/// One interface loop on the torus, traversed in its reference orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusLoop {
    pub edges: Vec<usize>,
    pub left: i64,
    pub right: i64,
    /// Lifted displacement in doubled coordinates.
    pub displacement: (i64, i64),
    /// Lifted polygon through edge midpoints in doubled coordinates.
    pub polygon: Vec<(i64, i64)>,
    /// Signed traversals of `V(t, 0)`, +1 upwards.
    pub row_crossings: Vec<i64>,
    /// Signed traversals of `H(0, t)` summed over `t`, +1 westwards.
    pub column_crossing: i64,
}

impl TorusLoop {
    pub fn is_contractible(&self) -> bool {
        self.displacement == (0, 0)
    }

    /// Net crossing of the horizontal fundamental cycle.
    pub fn row_crossing(&self) -> i64 {
        self.row_crossings.iter().sum()
    }

    /// Net crossing of the walk `p^k` from square (0,0) to (2k,0).
    pub fn walk_crossing(&self, k: usize) -> i64 {
        self.row_crossings[..2 * k].iter().sum()
    }
}

/// Interface loops of a torus FK configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusLoopConfig {
    pub loops: Vec<TorusLoop>,
}

impl TorusLoopConfig {
    pub fn contractible(&self) -> usize {
        self.loops.iter().filter(|l| l.is_contractible()).count()
    }

    pub fn non_contractible(&self) -> usize {
        self.loops.len() - self.contractible()
    }
}

const SLOT_OFFSET: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];

/// Slot paired with `slot` at vertex `v` (slots N=0, E=1, S=2, W=3).
fn partner(torus: &TorusLattice, v: usize, black_open: bool, slot: usize) -> usize {
    let (i, j) = torus.coords(v);
    // {N,W},{S,E} versus {N,E},{S,W}
    let nw_se = ((i + j) % 2 == 0) == black_open;
    match (nw_se, slot) {
        (true, 0) => 3,
        (true, 3) => 0,
        (true, 1) => 2,
        (true, _) => 1,
        (false, 0) => 1,
        (false, 1) => 0,
        (false, 2) => 3,
        (false, _) => 2,
    }
}

fn midpoint(torus: &TorusLattice, e: usize) -> (i64, i64) {
    let (i, j) = torus.coords(e % torus.num_faces());
    let (i, j) = (i as i64, j as i64);
    if e < torus.num_faces() {
        (2 * i + 1, 2 * j)
    } else {
        (2 * i, 2 * j + 1)
    }
}

/// Interface loops separating η-clusters from η*-clusters; `eta[v]` opens the black
/// diagonal at vertex `v`.
pub fn loops_from_fk(torus: &TorusLattice, eta: &[bool]) -> TorusLoopConfig {
    let side = torus.side();
    let nf = torus.num_faces();
    let mut seen = vec![false; torus.num_edges()];
    let mut loops = Vec::new();
    for start in 0..torus.num_edges() {
        if seen[start] {
            continue;
        }
        let mut lp = TorusLoop {
            edges: Vec::new(),
            left: 0,
            right: 0,
            displacement: (0, 0),
            polygon: Vec::new(),
            row_crossings: vec![0; side],
            column_crossing: 0,
        };
        let mut pos = midpoint(torus, start);
        let mut edge = start;
        let mut heading = if start < nf { 0 } else { 1 };
        loop {
            seen[edge] = true;
            lp.edges.push(edge);
            lp.polygon.push(pos);
            let (i, j) = torus.coords(edge % nf);
            if edge < nf && j == 0 {
                lp.row_crossings[i] += if heading == 0 { 1 } else { -1 };
            }
            if edge >= nf && i == 0 {
                lp.column_crossing += if heading == 3 { 1 } else { -1 };
            }
            let (lo, hi) = torus.edge_vertices(edge);
            let v = if heading == 0 || heading == 1 { hi } else { lo };
            let slot_in = (heading + 2) % 4;
            let slot_out = partner(torus, v, eta[v], slot_in);
            if slot_out == (heading + 3) % 4 {
                lp.left += 1;
            } else {
                lp.right += 1;
            }
            let (a, b) = SLOT_OFFSET[slot_in];
            let (c, d) = SLOT_OFFSET[slot_out];
            pos = (pos.0 + c - a, pos.1 + d - b);
            heading = slot_out;
            edge = torus.vertex_edges(v)[slot_out];
            if edge == start {
                break;
            }
        }
        let first = lp.polygon[0];
        lp.displacement = (pos.0 - first.0, pos.1 - first.1);
        loops.push(lp);
    }
    TorusLoopConfig { loops }
}

/// `(√q)^{|L_contr|} · 2^{|L_non|} · p₈(|L_non|)`.
pub fn w_prime(config: &TorusLoopConfig, q: f64) -> f64 {
    let nc = config.non_contractible();
    q.sqrt().powi(config.contractible() as i32) * 2f64.powi(nc as i32) * p8_closed(nc)
}

fn winding(polygon: &[(i64, i64)], p: (i64, i64)) -> i64 {
    let mut w = 0;
    for k in 0..polygon.len() {
        let a = polygon[k];
        let b = polygon[(k + 1) % polygon.len()];
        let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
        if a.1 <= p.1 {
            if b.1 > p.1 && cross > 0 {
                w += 1;
            }
        } else if b.1 <= p.1 && cross < 0 {
            w -= 1;
        }
    }
    w
}

/// Whether the contractible loop surrounds square `(i, j)` of the torus.
pub fn surrounds(torus: &TorusLattice, lp: &TorusLoop, face: (usize, usize)) -> bool {
    if !lp.is_contractible() {
        return false;
    }
    let period = 2 * torus.side() as i64;
    let (x0, y0) = (2 * face.0 as i64, 2 * face.1 as i64);
    let xs = lp.polygon.iter().map(|p| p.0);
    let ys = lp.polygon.iter().map(|p| p.1);
    let (xmin, xmax) = (xs.clone().min().unwrap(), xs.max().unwrap());
    let (ymin, ymax) = (ys.clone().min().unwrap(), ys.max().unwrap());
    let range = |lo: i64, hi: i64, c: i64| (lo - c).div_euclid(period)..=(hi - c).div_euclid(period) + 1;
    range(xmin, xmax, x0)
        .any(|a| range(ymin, ymax, y0).any(|b| winding(&lp.polygon, (x0 + a * period, y0 + b * period)) != 0))
}

/// `∏_{ℓ contractible} cos(λ + π/8(1[(0,0)◁ℓ] − 1[(2k,0)◁ℓ])) / cos λ`.
pub fn cos_product_observable(torus: &TorusLattice, config: &TorusLoopConfig, k: usize, lambda: f64) -> f64 {
    let target = (2 * k % torus.side(), 0);
    config
        .loops
        .iter()
        .filter(|l| l.is_contractible())
        .map(|l| {
            let d = surrounds(torus, l, (0, 0)) as i32 - surrounds(torus, l, target) as i32;
            (lambda + PI / 8.0 * d as f64).cos() / lambda.cos()
        })
        .product()
}

fn check_bkw_input(n: usize, k: usize, budget: u64) -> Result<TorusLattice> {
    if n == 0 {
        return Err(Error::OutOfRange("torus size must be positive".into()));
    }
    if k > n {
        return Err(Error::OutOfRange(format!("walk length k = {k} exceeds n = {n}")));
    }
    let bits = 4 * n * n;
    if bits >= 63 || (1u64 << bits) > budget {
        return Err(Error::TooLarge { budget });
    }
    Ok(TorusLattice::new(n))
}

fn for_each_eta(torus: &TorusLattice, mut f: impl FnMut(&[bool])) {
    let nv = torus.num_vertices();
    let mut eta = vec![false; nv];
    for mask in 0u64..1 << nv {
        for (v, e) in eta.iter_mut().enumerate() {
            *e = mask >> v & 1 == 1;
        }
        f(&eta);
    }
}

/// `(𝔷_n, 𝔷_{n,k})` by summing over FK configurations and loop orientations.
pub fn bkw_partition_functions(n: usize, k: usize, params: BKWParams, budget: u64) -> Result<(Complex64, Complex64)> {
    let torus = check_bkw_input(n, k, budget)?;
    let mut z = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(0.0, 0.0);
    let mut states = 0u64;
    let mut over = false;
    for_each_eta(&torus, |eta| {
        if over {
            return;
        }
        let cfg = loops_from_fk(&torus, eta);
        let m = cfg.loops.len();
        states += 1 << m;
        if states > budget {
            over = true;
            return;
        }
        let data: Vec<(i64, i64, i64, i64)> = cfg
            .loops
            .iter()
            .map(|l| (l.left - l.right, l.row_crossing(), l.column_crossing, l.walk_crossing(k)))
            .collect();
        for orient in 0u64..1 << m {
            let (mut turn, mut hc, mut vc, mut pc) = (0, 0, 0, 0);
            for (idx, &(t, h, v, p)) in data.iter().enumerate() {
                let s = if orient >> idx & 1 == 1 { -1 } else { 1 };
                turn += s * t;
                hc += s * h;
                vc += s * v;
                pc += s * p;
            }
            if hc.rem_euclid(8) != 0 || vc.rem_euclid(8) != 0 {
                continue;
            }
            let phase = params.lambda / 4.0 * turn as f64;
            z += Complex64::from_polar(1.0, phase);
            zk += Complex64::from_polar(1.0, phase + PI / 8.0 * pc as f64);
        }
    });
    if over {
        return Err(Error::TooLarge { budget });
    }
    Ok((z, zk))
}

/// `Σ_L w′(L)` over FK configurations of the torus.
pub fn z_loop_expansion(n: usize, params: BKWParams, budget: u64) -> Result<f64> {
    let torus = check_bkw_input(n, 0, budget)?;
    let q = params.sqrt_q().powi(2);
    let mut total = 0.0;
    for_each_eta(&torus, |eta| total += w_prime(&loops_from_fk(&torus, eta), q));
    Ok(total)
}

/// `𝔷_{n,k}` from the unoriented loop expansion: contractible loops contribute
/// `√q` times the cosine ratio, non-contractible loops are summed over orientations.
pub fn z_nk_loop_expansion(n: usize, k: usize, params: BKWParams, budget: u64) -> Result<Complex64> {
    let torus = check_bkw_input(n, k, budget)?;
    let sqrt_q = params.sqrt_q();
    let mut total = Complex64::new(0.0, 0.0);
    for_each_eta(&torus, |eta| {
        let cfg = loops_from_fk(&torus, eta);
        let non: Vec<_> = cfg.loops.iter().filter(|l| !l.is_contractible()).collect();
        let mut orient_sum = Complex64::new(0.0, 0.0);
        for orient in 0u64..1 << non.len() {
            let (mut hc, mut vc, mut pc) = (0, 0, 0);
            for (idx, l) in non.iter().enumerate() {
                let s = if orient >> idx & 1 == 1 { -1 } else { 1 };
                hc += s * l.row_crossing();
                vc += s * l.column_crossing;
                pc += s * l.walk_crossing(k);
            }
            if hc.rem_euclid(8) == 0 && vc.rem_euclid(8) == 0 {
                orient_sum += Complex64::from_polar(1.0, PI / 8.0 * pc as f64);
            }
        }
        let contr = sqrt_q.powi(cfg.contractible() as i32) * cos_product_observable(&torus, &cfg, k, params.lambda);
        total += orient_sum * contr;
    });
    Ok(total)
}

/// `μ_n[e^{iπ/8 ∫_{p^k} h∇}]` under `(1/c)^{|ω[σ•] ∪ ω[σ°]|} H₈` on the torus.
pub fn torus_spin_observable(n: usize, k: usize, params: BKWParams, budget: u64) -> Result<Complex64> {
    let torus = check_bkw_input(n, k, budget)?;
    let nf = torus.num_faces();
    let side = torus.side() as i64;
    let inv_c = 1.0 / params.c();
    let diagonals: Vec<_> =
        (0..torus.num_vertices()).map(|v| (torus.black_diagonal(v), torus.white_diagonal(v))).collect();
    let grad = |s: &[i64], u: usize, v: usize| {
        let prod = s[u] * s[v];
        if torus.is_black(u) {
            prod
        } else {
            -prod
        }
    };
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    let mut sigma = vec![1i64; nf];
    'outer: for mask in 0u64..1 << nf {
        for (f, s) in sigma.iter_mut().enumerate() {
            *s = if mask >> f & 1 == 1 { -1 } else { 1 };
        }
        let mut walls = 0;
        for &((a, b), (c, d)) in &diagonals {
            let black_dis = sigma[a] != sigma[b];
            let white_dis = sigma[c] != sigma[d];
            if black_dis && white_dis {
                continue 'outer;
            }
            walls += (black_dis || white_dis) as i32;
        }
        let row = |t: i64| grad(&sigma, torus.index(t, 0), torus.index(t + 1, 0));
        let hc: i64 = (0..side).map(row).sum();
        let vc: i64 = (0..side).map(|t| grad(&sigma, torus.index(0, t), torus.index(0, t + 1))).sum();
        if hc.rem_euclid(8) != 0 || vc.rem_euclid(8) != 0 {
            continue;
        }
        let pc: i64 = (0..2 * k as i64).map(row).sum();
        let w = inv_c.powi(walls);
        den += w;
        num += Complex64::from_polar(w, PI / 8.0 * pc as f64);
    }
    Ok(num / den)
}

/// Total variation between the law of η and the law of the shifted dual η* under the
/// `w′` measure on the torus.
pub fn torus_self_dual_tv(n: usize, q: f64, budget: u64) -> Result<f64> {
    let torus = check_bkw_input(n, 0, budget)?;
    let nv = torus.num_vertices();
    let mut w = Vec::with_capacity(1 << nv);
    for_each_eta(&torus, |eta| w.push(w_prime(&loops_from_fk(&torus, eta), q)));
    let z: f64 = w.iter().sum();
    let mut dual = vec![0.0; w.len()];
    for (mask, &p) in w.iter().enumerate() {
        let mut image = 0usize;
        for v in 0..nv {
            if mask >> v & 1 == 0 {
                let (i, j) = torus.coords(v);
                image |= 1 << torus.index(i as i64 + 1, j as i64);
            }
        }
        dual[image] += p;
    }
    Ok(w.iter().zip(&dual).map(|(a, b)| (a - b).abs()).sum::<f64>() / (2.0 * z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::SquareCoord;

    #[test]
    fn weight_examples() {
        let g = FkGraph::new(3, vec![(0, 1), (1, 2)]);
        let p = FKParams::new(0.3, 0.3, 2.0).unwrap();
        let empty = FKConfig { open: vec![false; 2], bc: FkBoundary::Free };
        assert!((fk_weight(&g, &empty, p) - 0.49 * 8.0).abs() < 1e-12);
        let full = FKConfig { open: vec![true; 2], bc: FkBoundary::Free };
        assert!((fk_weight(&g, &full, p) - 0.09 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn wired_empty_weight_on_block() {
        let d = SquareDomain::rectangle(0, 4, 0, 4).unwrap();
        let g = FkGraph::black_graph(&d);
        let interior = g.num_nodes - g.boundary.len();
        let eta = FKConfig { open: vec![false; g.num_edges()], bc: FkBoundary::Wired };
        assert_eq!(g.cluster_count(&eta.open, eta.bc), interior + 1);
    }

    #[test]
    fn duality_and_self_dual_point() {
        let eta = FKConfig { open: vec![true, false, true], bc: FkBoundary::Free };
        assert_eq!(dual_config(&dual_config(&eta)), eta);
        assert!(dual_config(&FKConfig { open: vec![false; 3], bc: FkBoundary::Free }).open.iter().all(|&o| o));
        assert_eq!(self_dual_p(1.0), 0.5);
        assert!((self_dual_p(4.0) - 2.0 / 3.0).abs() < 1e-15);
        for q in [0.5, 1.0, 2.0, 4.0] {
            assert!(FKParams::isotropic(self_dual_p(q), q).unwrap().is_self_dual());
        }
    }

    #[test]
    fn p8_values() {
        assert!((p8(0).unwrap() - 1.0).abs() < 1e-15);
        assert!((p8(2).unwrap() - 0.5).abs() < 1e-15);
        assert!((p8(8).unwrap() - 0.28125).abs() < 1e-15);
        assert_eq!(p8(3), Err(Error::OddStepCount(3)));
        assert_eq!(p8_binomial(8), (72, 256));
    }

    #[test]
    fn empty_configuration_loops() {
        for n in 1..=2 {
            let t = TorusLattice::new(n);
            let cfg = loops_from_fk(&t, &vec![false; t.num_vertices()]);
            assert_eq!(cfg.loops.len(), 2 * n * n);
            assert_eq!(cfg.contractible(), 2 * n * n);
            assert_eq!(cfg.loops.iter().map(|l| l.edges.len()).sum::<usize>(), t.num_edges());
            for l in &cfg.loops {
                assert_eq!((l.left - l.right).abs(), 4);
            }
        }
    }

    #[test]
    fn winding_cycle_gives_two_noncontractible_loops() {
        let t = TorusLattice::new(1);
        let mut eta = vec![false; 4];
        eta[t.index(0, 0)] = true;
        eta[t.index(1, 0)] = true;
        let cfg = loops_from_fk(&t, &eta);
        assert_eq!(cfg.non_contractible(), 2);
        for l in cfg.loops.iter().filter(|l| !l.is_contractible()) {
            assert_eq!(l.left, l.right);
        }
    }

    #[test]
    fn w_prime_examples() {
        let t = TorusLattice::new(1);
        let mut eta = vec![false; 4];
        eta[t.index(0, 0)] = true;
        eta[t.index(1, 0)] = true;
        let cfg = loops_from_fk(&t, &eta);
        let nc = cfg.contractible();
        assert!((w_prime(&cfg, 4.0) - 2f64.powi(nc as i32) * 2.0).abs() < 1e-12);
    }

    #[test]
    fn surrounds_and_cos_product() {
        let t = TorusLattice::new(2);
        let cfg = loops_from_fk(&t, &vec![false; t.num_vertices()]);
        let around_origin = cfg.loops.iter().filter(|l| surrounds(&t, l, (0, 0))).count();
        assert_eq!(around_origin, 1);
        assert_eq!(cfg.loops.iter().filter(|l| surrounds(&t, l, (1, 0))).count(), 0);
        let v = cos_product_observable(&t, &cfg, 1, 0.0);
        assert!((v - (PI / 8.0).cos() * (-PI / 8.0).cos()).abs() < 1e-12);
        assert!((cos_product_observable(&t, &cfg, 0, 0.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point() {
        let g = FkGraph::new(3, vec![(0, 1), (1, 2)]);
        assert!(two_point_connected(&g, &[false, false], 1, 1));
        assert!(!two_point_connected(&g, &[false, false], 0, 2));
        assert!(two_point_connected(&g, &[true, true], 0, 2));
    }

    #[test]
    fn up_sets_of_four_bits() {
        assert_eq!(increasing_events(2).len(), 6);
        assert_eq!(increasing_events(4).len(), 168);
    }

    #[test]
    fn black_graph_of_diamond() {
        let d = SquareDomain::diamond(SquareCoord::new(1, 0), 2);
        let g = FkGraph::black_graph(&d);
        assert_eq!(g.num_nodes, 4);
        assert_eq!(g.num_edges(), 4);
    }

    #[test]
    fn bkw_identity_on_smallest_torus() {
        for lambda in [0.0, PI / 6.0, PI / 3.0] {
            let params = BKWParams::new(lambda).unwrap();
            let (z, _) = bkw_partition_functions(1, 0, params, DEFAULT_BUDGET).unwrap();
            let zl = z_loop_expansion(1, params, DEFAULT_BUDGET).unwrap();
            assert!((z.re - zl).abs() < 1e-10 * zl && z.im.abs() < 1e-10);
            for k in 0..=1 {
                let (z, zk) = bkw_partition_functions(1, k, params, DEFAULT_BUDGET).unwrap();
                let spin = torus_spin_observable(1, k, params, DEFAULT_BUDGET).unwrap();
                assert!((zk / z - spin).norm() < 1e-10, "lambda {lambda} k {k}: {} vs {spin}", zk / z);
                let zkl = z_nk_loop_expansion(1, k, params, DEFAULT_BUDGET).unwrap();
                assert!((zkl - zk).norm() < 1e-10 * z.norm());
            }
        }
    }

    #[test]
    fn self_dual_tv_vanishes() {
        assert!(torus_self_dual_tv(1, 2.0, DEFAULT_BUDGET).unwrap() < 1e-12);
    }
}
