//! Six-vertex model: graph homomorphisms, vertex weights, the checkerboard two-spin
//! representation, bond percolations, edge orientations and the alternating-circuit
//! exploration.

use std::collections::VecDeque;

use petgraph::unionfind::UnionFind;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::Boundary;
use crate::error::{Error, Result};
use crate::lattice_core::{Colour, DiagClass, SquareDomain};
use crate::loop_o2::assign_signs;

/// Vertex weights `a`, `b`, `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SixVParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SixVParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::OutOfRange(format!("{name} = {v} must be positive")));
            }
        }
        Ok(SixVParams { a, b, c })
    }

    /// `a, b ≤ c`.
    pub fn fkg_regime(&self) -> bool {
        self.a <= self.c * (1.0 + 1e-12) && self.b <= self.c * (1.0 + 1e-12)
    }

    /// `a, b ≤ c ≤ a + b`.
    pub fn super_duality_regime(&self) -> bool {
        self.fkg_regime() && self.c <= (self.a + self.b) * (1.0 + 1e-12)
    }

    /// Weight ratio of a domain-wall edge of the given class.
    pub fn ratio(&self, class: DiagClass) -> f64 {
        match class {
            DiagClass::A => self.a / self.c,
            DiagClass::B => self.b / self.c,
        }
    }
}

/// Integer heights on squares; black squares carry even heights.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphHom {
    pub h: Vec<i32>,
}

impl GraphHom {
    /// Parity matches the colour and adjacent heights differ by exactly one.
    pub fn is_valid(&self, domain: &SquareDomain) -> bool {
        let parity =
            (0..domain.num_squares()).all(|n| (self.h[n].rem_euclid(2) == 0) == (domain.colour(n) == Colour::Black));
        parity && domain.lattice_edges().iter().all(|&(a, b)| (self.h[a] - self.h[b]).abs() == 1)
    }

    /// Black boundary squares at 0 and white boundary squares at 1.
    pub fn is_zero_one_boundary(&self, domain: &SquareDomain) -> bool {
        (0..domain.num_squares())
            .filter(|&n| domain.is_boundary(n))
            .all(|n| self.h[n] == if domain.colour(n) == Colour::Black { 0 } else { 1 })
    }
}

/// σ• on black squares and σ° on white squares, stored in one vector indexed by square.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinPair6V {
    pub sigma: Vec<i8>,
}

impl SpinPair6V {
    pub fn all_plus(domain: &SquareDomain) -> Self {
        SpinPair6V { sigma: vec![1; domain.num_squares()] }
    }

    /// Whether the boundary condition holds on ∂_F Ω.
    pub fn satisfies(&self, domain: &SquareDomain, bc: Boundary) -> bool {
        (0..domain.num_squares()).filter(|&n| domain.is_boundary(n)).all(|n| {
            let fixed = match domain.colour(n) {
                Colour::Black => bc.black,
                Colour::White => bc.white,
            };
            fixed.is_none_or(|s| self.sigma[n] == s)
        })
    }

    fn agrees(&self, (p, q): (usize, usize)) -> bool {
        self.sigma[p] == self.sigma[q]
    }
}

/// Weight class of a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexClass {
    A,
    B,
    C,
}

/// Vertex class plus a ±1 sub-index given by σ• at the first endpoint of d•.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexType {
    pub class: VertexClass,
    pub sub: i8,
}

/// Class of interior vertex `x` under the spin pair.
pub fn vertex_type_of_spins(domain: &SquareDomain, pair: &SpinPair6V, x: usize) -> Result<VertexType> {
    let v = &domain.vertices()[x];
    let sub = pair.sigma[v.black.0];
    let class = match (pair.agrees(v.black), pair.agrees(v.white)) {
        (true, true) => VertexClass::C,
        (false, true) => wall_class(v.white_class()),
        (true, false) => wall_class(v.black_class),
        (false, false) => return Err(Error::IceRuleViolated(x)),
    };
    Ok(VertexType { class, sub })
}

fn wall_class(c: DiagClass) -> VertexClass {
    match c {
        DiagClass::A => VertexClass::A,
        DiagClass::B => VertexClass::B,
    }
}

/// Class of interior vertex `x` under the height function.
pub fn vertex_type(domain: &SquareDomain, h: &GraphHom, x: usize) -> Result<VertexType> {
    vertex_type_of_spins(domain, &height_to_spins_6v(domain, h), x)
}

/// `a^{n_a} b^{n_b} c^{n_c}` over interior vertices.
pub fn hom_weight(domain: &SquareDomain, h: &GraphHom, params: SixVParams) -> Result<f64> {
    let pair = height_to_spins_6v(domain, h);
    let mut w = 1.0;
    for x in 0..domain.num_vertices() {
        w *= match vertex_type_of_spins(domain, &pair, x)?.class {
            VertexClass::A => params.a,
            VertexClass::B => params.b,
            VertexClass::C => params.c,
        };
    }
    Ok(w)
}

/// σ• = + iff `h ∈ 4ℤ` on black squares, σ° = + iff `h ∈ 4ℤ+1` on white squares.
pub fn height_to_spins_6v(domain: &SquareDomain, h: &GraphHom) -> SpinPair6V {
    let sigma = (0..domain.num_squares())
        .map(|n| {
            let plus = match domain.colour(n) {
                Colour::Black => h.h[n].rem_euclid(4) == 0,
                Colour::White => h.h[n].rem_euclid(4) == 1,
            };
            if plus {
                1
            } else {
                -1
            }
        })
        .collect();
    SpinPair6V { sigma }
}

/// Checks the ice rule at every interior vertex.
pub fn check_ice_rule(domain: &SquareDomain, pair: &SpinPair6V) -> Result<()> {
    for (x, v) in domain.vertices().iter().enumerate() {
        if !pair.agrees(v.black) && !pair.agrees(v.white) {
            return Err(Error::IceRuleViolated(x));
        }
    }
    Ok(())
}

/// Height increment `h(v) − h(u)` across the edge between squares `u` and `v`.
pub fn gradient(domain: &SquareDomain, pair: &SpinPair6V, u: usize, v: usize) -> i32 {
    let prod = (pair.sigma[u] * pair.sigma[v]) as i32;
    if domain.colour(u) == Colour::Black {
        prod
    } else {
        -prod
    }
}

/// Inverse of [`height_to_spins_6v`] on the 0,1-boundary class.
pub fn spins_to_height_6v(domain: &SquareDomain, pair: &SpinPair6V) -> Result<GraphHom> {
    check_ice_rule(domain, pair)?;
    if !pair.satisfies(domain, Boundary::PLUS_PLUS) {
        return Err(Error::NotRepresentable);
    }
    let base = |n: usize| if domain.colour(n) == Colour::Black { 0 } else { 1 };
    let root = (0..domain.num_squares()).find(|&n| domain.is_boundary(n)).unwrap_or(0);
    let h = integrate(domain, root, base(root), |u, v| gradient(domain, pair, u, v));
    let ok_edges = domain.lattice_edges().iter().all(|&(a, b)| h[b] - h[a] == gradient(domain, pair, a, b));
    let ok_boundary = (0..domain.num_squares()).filter(|&n| domain.is_boundary(n)).all(|n| h[n] == base(n));
    if !(ok_edges && ok_boundary) {
        return Err(Error::NotRepresentable);
    }
    Ok(GraphHom { h })
}

fn integrate(domain: &SquareDomain, root: usize, value: i32, grad: impl Fn(usize, usize) -> i32) -> Vec<i32> {
    let mut h = vec![i32::MIN; domain.num_squares()];
    h[root] = value;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in domain.neighbors(u) {
            if h[v] == i32::MIN {
                h[v] = h[u] + grad(u, v);
                queue.push_back(v);
            }
        }
    }
    h
}

/// Domain-wall counts `(|ω ∩ E_a|, |ω ∩ E_b|)` of ω[σ•] ∪ ω[σ°].
pub fn wall_counts(domain: &SquareDomain, pair: &SpinPair6V) -> Result<(usize, usize)> {
    let (mut na, mut nb) = (0, 0);
    for x in 0..domain.num_vertices() {
        match vertex_type_of_spins(domain, pair, x)?.class {
            VertexClass::A => na += 1,
            VertexClass::B => nb += 1,
            VertexClass::C => {}
        }
    }
    Ok((na, nb))
}

/// `(a/c)^{|ω ∩ E_a|} (b/c)^{|ω ∩ E_b|}`.
pub fn spin_weight_6v(domain: &SquareDomain, pair: &SpinPair6V, params: SixVParams) -> Result<f64> {
    let (na, nb) = wall_counts(domain, pair)?;
    Ok((params.a / params.c).powi(na as i32) * (params.b / params.c).powi(nb as i32))
}

/// Bond percolations on the diagonal graphs, indexed by interior vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BondPercPair {
    /// ξ•: open black diagonals d•_x.
    pub black: Vec<bool>,
    /// ξ°: open white diagonals d°_x.
    pub white: Vec<bool>,
}

impl BondPercPair {
    pub fn open(&self, colour: Colour) -> &[bool] {
        match colour {
            Colour::Black => &self.black,
            Colour::White => &self.white,
        }
    }

    /// Open edges of the given colour whose endpoints carry the given spin.
    pub fn split(&self, domain: &SquareDomain, pair: &SpinPair6V, colour: Colour, sign: i8) -> Vec<bool> {
        domain
            .vertices()
            .iter()
            .zip(self.open(colour))
            .map(|(v, &o)| o && pair.sigma[v.diagonal(colour).0] == sign)
            .collect()
    }

    /// Vertices where neither diagonal is open.
    pub fn uncovered(&self) -> usize {
        self.black.iter().zip(&self.white).filter(|(&b, &w)| !b && !w).count()
    }
}

/// ξ* under the d•/d° pairing: the complement, moved to the other colour.
pub fn dual_bonds(xi: &[bool]) -> Vec<bool> {
    xi.iter().map(|&b| !b).collect()
}

/// Black and white bond percolations from the spins and one uniform per vertex.
pub fn sample_percolations_6v(
    domain: &SquareDomain,
    pair: &SpinPair6V,
    u: &[f64],
    params: SixVParams,
) -> Result<BondPercPair> {
    check_ice_rule(domain, pair)?;
    let nv = domain.num_vertices();
    let mut black = vec![false; nv];
    let mut white = vec![false; nv];
    for (x, v) in domain.vertices().iter().enumerate() {
        let (b, w) = if !pair.agrees(v.black) {
            (false, true)
        } else if !pair.agrees(v.white) {
            (true, false)
        } else {
            let pb = params.ratio(v.black_class);
            let pw = params.ratio(v.white_class());
            (u[x] <= pb, u[x] > 1.0 - pw)
        };
        black[x] = b;
        white[x] = w;
    }
    Ok(BondPercPair { black, white })
}

/// Resamples the spins of colour `target` given the other colour and its percolation:
/// one fair sign per component of the closed edges, boundary components forced when
/// the boundary condition fixes `target`.
pub fn resample_given_6v<R: Rng + ?Sized>(
    domain: &SquareDomain,
    pair: &SpinPair6V,
    xi_other: &[bool],
    target: Colour,
    rng: &mut R,
    bc: Boundary,
) -> Result<SpinPair6V> {
    let other = target.other();
    for (x, v) in domain.vertices().iter().enumerate() {
        if xi_other[x] && !pair.agrees(v.diagonal(other)) {
            return Err(Error::IncompatibleInput(format!("open edge at vertex {x} joins unequal spins")));
        }
    }
    let mut uf = UnionFind::<usize>::new(domain.num_squares());
    for (x, v) in domain.vertices().iter().enumerate() {
        if !xi_other[x] {
            let (p, q) = v.diagonal(target);
            uf.union(p, q);
        }
    }
    let labels = uf.into_labeling();
    let forced = match target {
        Colour::Black => bc.black,
        Colour::White => bc.white,
    };
    let signs = assign_signs(&labels, |n| domain.is_boundary(n), forced, rng);
    let mut out = pair.clone();
    for n in 0..domain.num_squares() {
        if domain.colour(n) == target {
            out.sigma[n] = signs[n];
        }
    }
    Ok(out)
}

/// Direction of a lattice edge arrow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arrow {
    Up,
    Down,
    Left,
    Right,
}

/// Orients every edge of [`SquareDomain::lattice_edges`] with the larger height on its right.
pub fn edge_orientation(domain: &SquareDomain, h: &GraphHom) -> Vec<Arrow> {
    domain
        .lattice_edges()
        .iter()
        .map(|&(p, q)| {
            let vertical = domain.square(q).i != domain.square(p).i;
            match (vertical, h.h[q] > h.h[p]) {
                (true, true) => Arrow::Up,
                (true, false) => Arrow::Down,
                (false, true) => Arrow::Left,
                (false, false) => Arrow::Right,
            }
        })
        .collect()
}

/// Recovers heights from an orientation and the value at one square.
pub fn heights_from_orientation(domain: &SquareDomain, arrows: &[Arrow], root: usize, value: i32) -> GraphHom {
    let mut grad = std::collections::HashMap::new();
    for (&(p, q), a) in domain.lattice_edges().iter().zip(arrows) {
        let up = matches!(a, Arrow::Up | Arrow::Left);
        let d = if up { 1 } else { -1 };
        grad.insert((p, q), d);
        grad.insert((q, p), -d);
    }
    GraphHom { h: integrate(domain, root, value, |u, v| grad[&(u, v)]) }
}

/// Number of outgoing arrows at each interior vertex.
pub fn out_degrees(domain: &SquareDomain, arrows: &[Arrow]) -> Vec<usize> {
    let pos: std::collections::HashMap<(usize, usize), usize> =
        domain.lattice_edges().iter().enumerate().map(|(e, &pq)| (pq, e)).collect();
    domain
        .vertices()
        .iter()
        .map(|v| {
            let north = arrows[pos[&(v.nw, v.ne)]] == Arrow::Up;
            let south = arrows[pos[&(v.sw, v.se)]] == Arrow::Down;
            let east = arrows[pos[&(v.se, v.ne)]] == Arrow::Right;
            let west = arrows[pos[&(v.sw, v.nw)]] == Arrow::Left;
            [north, south, east, west].iter().filter(|&&b| b).count()
        })
        .collect()
}

/// Result of the alternating exploration towards a target square.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exploration {
    /// Number of nested clusters found.
    pub n: usize,
    /// Square indices of each cluster, outermost first.
    pub circuits: Vec<Vec<usize>>,
    /// Colour of each cluster, starting with white.
    pub colours: Vec<Colour>,
}

/// Explores nested open clusters around `target`, alternating white and black.
///
/// Level one starts from the black boundary squares. At each level the outside is
/// flooded through opposite-colour diagonals whose crossing edge is closed; the
/// current-colour cluster touching the outside and enclosing or containing `target`
/// is recorded, and the next level continues strictly inside it.
pub fn explore_alternating_circuits(domain: &SquareDomain, xi: &BondPercPair, target: usize) -> Exploration {
    let ns = domain.num_squares();
    let mut region = vec![true; ns];
    let mut seeds: Vec<usize> =
        (0..ns).filter(|&n| domain.is_boundary(n) && domain.colour(n) == Colour::Black).collect();
    let mut colour = Colour::White;
    let mut out = Exploration { n: 0, circuits: Vec::new(), colours: Vec::new() };
    let u = domain.square(target);

    loop {
        let opp = colour.other();
        let mut seed_mask = vec![false; ns];
        for &s in &seeds {
            seed_mask[s] = true;
        }
        let usable = |n: usize| region[n] || seed_mask[n];

        // Outside flood through opposite-colour diagonals crossing closed edges.
        let mut outside = seed_mask.clone();
        let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            for &x in domain.square_vertices(s) {
                let v = &domain.vertices()[x];
                if xi.open(colour)[x] {
                    continue;
                }
                let (p, q) = v.diagonal(opp);
                let t = if p == s { q } else { p };
                if usable(t) && !outside[t] {
                    outside[t] = true;
                    queue.push_back(t);
                }
            }
        }

        // Current-colour clusters inside the region.
        let mut uf = UnionFind::<usize>::new(ns);
        let mut edge_count = vec![0usize; ns];
        for (x, v) in domain.vertices().iter().enumerate() {
            let (p, q) = v.diagonal(colour);
            if xi.open(colour)[x] && region[p] && region[q] {
                uf.union(p, q);
            }
        }
        let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for n in 0..ns {
            if region[n] && domain.colour(n) == colour {
                members.entry(uf.find_mut(n)).or_default().push(n);
            }
        }
        for (x, v) in domain.vertices().iter().enumerate() {
            let (p, q) = v.diagonal(colour);
            if xi.open(colour)[x] && region[p] && region[q] {
                edge_count[uf.find_mut(p)] += 1;
            }
        }

        let mut chosen: Option<(Vec<usize>, Vec<bool>)> = None;
        for (root, squares) in &members {
            let touches = squares.iter().any(|&n| domain.neighbors(n).iter().any(|&m| outside[m]));
            if !touches {
                continue;
            }
            if squares.contains(&target) {
                chosen = Some((squares.clone(), Vec::new()));
                break;
            }
            if edge_count[*root] < squares.len() {
                continue;
            }
            let (imin, imax, jmin, jmax) =
                squares.iter().fold((i32::MAX, i32::MIN, i32::MAX, i32::MIN), |(a, b, c, d), &n| {
                    let s = domain.square(n);
                    (a.min(s.i), b.max(s.i), c.min(s.j), d.max(s.j))
                });
            if !(imin < u.i && u.i < imax && jmin < u.j && u.j < jmax) {
                continue;
            }
            let mut in_c = vec![false; ns];
            for &n in squares {
                in_c[n] = true;
            }
            let reached = enclosure_flood(domain, xi, colour, &outside, &in_c, &usable);
            if !reached[target] {
                chosen = Some((squares.clone(), reached));
                break;
            }
        }

        let Some((cluster, reached)) = chosen else { break };
        out.n += 1;
        out.colours.push(colour);
        let done = cluster.contains(&target);
        if done {
            out.circuits.push(cluster);
            break;
        }
        let mut in_c = vec![false; ns];
        for &n in &cluster {
            in_c[n] = true;
        }
        for n in 0..ns {
            region[n] = region[n] && !reached[n] && !in_c[n];
        }
        seeds = cluster.clone();
        out.circuits.push(cluster);
        colour = opp;
    }
    out
}

fn enclosure_flood(
    domain: &SquareDomain,
    xi: &BondPercPair,
    colour: Colour,
    outside: &[bool],
    in_c: &[bool],
    usable: &impl Fn(usize) -> bool,
) -> Vec<bool> {
    let ns = domain.num_squares();
    let mut reached = vec![false; ns];
    let mut queue = VecDeque::new();
    for n in 0..ns {
        if outside[n] && !in_c[n] {
            reached[n] = true;
            queue.push_back(n);
        }
    }
    let opp = colour.other();
    while let Some(s) = queue.pop_front() {
        for &t in domain.neighbors(s) {
            if usable(t) && !in_c[t] && !reached[t] {
                reached[t] = true;
                queue.push_back(t);
            }
        }
        if domain.colour(s) != opp {
            continue;
        }
        for &x in domain.square_vertices(s) {
            let v = &domain.vertices()[x];
            let (a, b) = v.diagonal(colour);
            if xi.open(colour)[x] && in_c[a] && in_c[b] {
                continue;
            }
            let (p, q) = v.diagonal(opp);
            let t = if p == s { q } else { p };
            if usable(t) && !in_c[t] && !reached[t] {
                reached[t] = true;
                queue.push_back(t);
            }
        }
    }
    reached
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::SquareCoord;

    fn block() -> SquareDomain {
        SquareDomain::rectangle(0, 2, -1, 1).unwrap()
    }

    fn flat(d: &SquareDomain) -> GraphHom {
        GraphHom { h: (0..d.num_squares()).map(|n| if d.colour(n) == Colour::Black { 0 } else { 1 }).collect() }
    }

    fn flipped(d: &SquareDomain) -> GraphHom {
        let mut h = flat(d);
        h.h[d.index_of(SquareCoord::new(1, 0)).unwrap()] = -1;
        h
    }

    #[test]
    fn classification_of_the_block() {
        let d = block();
        for x in 0..4 {
            assert_eq!(vertex_type(&d, &flat(&d), x).unwrap().class, VertexClass::C);
        }
        let classes: Vec<_> = (0..4).map(|x| vertex_type(&d, &flipped(&d), x).unwrap().class).collect();
        assert_eq!(classes.iter().filter(|&&c| c == VertexClass::A).count(), 2);
        assert_eq!(classes.iter().filter(|&&c| c == VertexClass::B).count(), 2);
    }

    #[test]
    fn weights_of_the_block() {
        let d = block();
        let p = SixVParams::new(1.0, 0.8, 1.6).unwrap();
        assert!((hom_weight(&d, &flat(&d), p).unwrap() - 1.6f64.powi(4)).abs() < 1e-12);
        assert!((hom_weight(&d, &flipped(&d), p).unwrap() - 0.64).abs() < 1e-12);
        let s = spin_weight_6v(&d, &height_to_spins_6v(&d, &flipped(&d)), p).unwrap();
        let expect = (1.0 / 1.6f64).powi(2) * (0.8 / 1.6f64).powi(2);
        assert!((s - expect).abs() < 1e-12);
        let single = SquareDomain::from_squares([SquareCoord::new(0, 0)]).unwrap();
        assert_eq!(hom_weight(&single, &GraphHom { h: vec![0] }, p).unwrap(), 1.0);
    }

    #[test]
    fn spin_examples() {
        let d = block();
        let s = height_to_spins_6v(&d, &flat(&d));
        assert!(s.sigma.iter().all(|&v| v == 1));
        let c = d.index_of(SquareCoord::new(1, 0)).unwrap();
        assert_eq!(height_to_spins_6v(&d, &flipped(&d)).sigma[c], -1);
        for h in [flat(&d), flipped(&d)] {
            assert_eq!(spins_to_height_6v(&d, &height_to_spins_6v(&d, &h)).unwrap(), h);
        }
    }

    #[test]
    fn percolation_cases() {
        let d = block();
        let p = SixVParams::new(1.0, 1.4, 2.0).unwrap();
        let flip = height_to_spins_6v(&d, &flipped(&d));
        let xi = sample_percolations_6v(&d, &flip, &[0.5; 4], p).unwrap();
        assert!(xi.black.iter().all(|&b| b) && xi.white.iter().all(|&w| !w));
        let plus = SpinPair6V::all_plus(&d);
        let x = d.vertices().iter().position(|v| v.black_class == DiagClass::A).unwrap();
        let mut u = vec![0.99; 4];
        u[x] = 0.4;
        let xi = sample_percolations_6v(&d, &plus, &u, p).unwrap();
        assert!(xi.black[x] && xi.white[x]);
    }

    #[test]
    fn orientation_round_trip() {
        let d = SquareDomain::diamond(SquareCoord::new(0, 0), 3);
        let mut h = GraphHom { h: vec![0; d.num_squares()] };
        for n in 0..d.num_squares() {
            let s = d.square(n);
            h.h[n] = if d.colour(n) == Colour::Black { 0 } else { 1 };
            if (s.i.abs() + s.j.abs()) == 1 {
                h.h[n] = -1;
            }
        }
        h.h[d.index_of(SquareCoord::new(0, 0)).unwrap()] = -2;
        assert!(h.is_valid(&d));
        let arrows = edge_orientation(&d, &h);
        assert!(out_degrees(&d, &arrows).iter().all(|&k| k == 2));
        let shifted = GraphHom { h: h.h.iter().map(|v| v + 2).collect() };
        assert_eq!(edge_orientation(&d, &shifted), arrows);
        assert_eq!(heights_from_orientation(&d, &arrows, 0, h.h[0]), h);
    }

    #[test]
    fn exploration_trivial_cases() {
        let d = SquareDomain::diamond(SquareCoord::new(0, 0), 6);
        let u = d.index_of(SquareCoord::new(1, 0)).unwrap();
        let none = BondPercPair { black: vec![false; d.num_vertices()], white: vec![false; d.num_vertices()] };
        assert_eq!(explore_alternating_circuits(&d, &none, u).n, 1);
        let mut ring = none.clone();
        let target = SquareCoord::new(1, 0);
        for (x, v) in d.vertices().iter().enumerate() {
            let (p, q) = v.white;
            let (sp, sq) = (d.square(p), d.square(q));
            let dist = |s: SquareCoord| (s.i - target.i).abs() + (s.j - target.j).abs();
            if dist(sp) == 2 && dist(sq) == 2 {
                ring.white[x] = true;
            }
        }
        let e = explore_alternating_circuits(&d, &ring, u);
        assert_eq!(e.n, 1);
        assert_eq!(e.circuits[0].len(), 8);
        assert_eq!(e.colours[0], Colour::White);
    }
}
