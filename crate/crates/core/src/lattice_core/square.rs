//! Square lattice with its black/white checkerboard and the diagonal-edge graphs.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A unit square of the lattice, centred at `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SquareCoord {
    pub i: i32,
    pub j: i32,
}

impl SquareCoord {
    pub const fn new(i: i32, j: i32) -> Self {
        SquareCoord { i, j }
    }

    pub const fn offset(self, di: i32, dj: i32) -> Self {
        SquareCoord { i: self.i + di, j: self.j + dj }
    }

    /// Black squares have even coordinate sum.
    pub fn colour(self) -> Colour {
        if (self.i + self.j).rem_euclid(2) == 0 {
            Colour::Black
        } else {
            Colour::White
        }
    }

    pub fn is_black(self) -> bool {
        self.colour() == Colour::Black
    }

    /// The four squares sharing an edge.
    pub fn neighbors4(self) -> [SquareCoord; 4] {
        [self.offset(1, 0), self.offset(0, 1), self.offset(-1, 0), self.offset(0, -1)]
    }

    /// The eight squares sharing an edge or a corner.
    pub fn neighbors8(self) -> [SquareCoord; 8] {
        [
            self.offset(1, 0),
            self.offset(1, 1),
            self.offset(0, 1),
            self.offset(-1, 1),
            self.offset(-1, 0),
            self.offset(-1, -1),
            self.offset(0, -1),
            self.offset(1, -1),
        ]
    }
}

/// Checkerboard colour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Colour {
    Black,
    White,
}

impl Colour {
    pub fn other(self) -> Colour {
        match self {
            Colour::Black => Colour::White,
            Colour::White => Colour::Black,
        }
    }
}

/// Direction class of a diagonal edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagClass {
    /// Parallel to `e^{iπ/4}`.
    A,
    /// Parallel to `e^{3iπ/4}`.
    B,
}

impl DiagClass {
    pub fn other(self) -> DiagClass {
        match self {
            DiagClass::A => DiagClass::B,
            DiagClass::B => DiagClass::A,
        }
    }
}

/// The six T-connectivity neighbours `(i±1, j±1)`, `(i±2, j)` of a square.
pub fn t_neighbors(face: SquareCoord) -> [SquareCoord; 6] {
    [
        face.offset(1, 1),
        face.offset(1, -1),
        face.offset(-1, 1),
        face.offset(-1, -1),
        face.offset(2, 0),
        face.offset(-2, 0),
    ]
}

/// An interior lattice vertex, indexed by the square to its lower left.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub corner: SquareCoord,
    /// Square indices around the vertex: south-west, south-east, north-west, north-east.
    pub sw: usize,
    pub se: usize,
    pub nw: usize,
    pub ne: usize,
    /// Endpoints of the black diagonal d•.
    pub black: (usize, usize),
    /// Endpoints of the white diagonal d°.
    pub white: (usize, usize),
    /// Class of d•; d° has the other class.
    pub black_class: DiagClass,
}

impl Vertex {
    pub fn white_class(&self) -> DiagClass {
        self.black_class.other()
    }

    /// The diagonal of the given colour.
    pub fn diagonal(&self, colour: Colour) -> (usize, usize) {
        match colour {
            Colour::Black => self.black,
            Colour::White => self.white,
        }
    }

    pub fn class(&self, colour: Colour) -> DiagClass {
        match colour {
            Colour::Black => self.black_class,
            Colour::White => self.white_class(),
        }
    }
}

/// A simply connected finite set of squares with its interior vertices and diagonal graphs.
#[derive(Clone, Debug)]
pub struct SquareDomain {
    squares: Vec<SquareCoord>,
    index: HashMap<SquareCoord, usize>,
    neighbors: Vec<Vec<usize>>,
    is_boundary: Vec<bool>,
    edge_boundary: Vec<bool>,
    vertices: Vec<Vertex>,
    square_vertices: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    even: bool,
}

impl SquareDomain {
    /// Builds a domain, rejecting empty or non simply connected sets.
    pub fn from_squares<I: IntoIterator<Item = SquareCoord>>(squares: I) -> Result<Self> {
        let set: BTreeSet<SquareCoord> = squares.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let squares: Vec<SquareCoord> = set.into_iter().collect();
        check_simply_connected(&squares)?;
        Ok(Self::build(squares))
    }

    /// Axis-parallel block `[i0, i1] × [j0, j1]`.
    pub fn rectangle(i0: i32, i1: i32, j0: i32, j1: i32) -> Result<Self> {
        let mut v = Vec::new();
        for i in i0..=i1 {
            for j in j0..=j1 {
                v.push(SquareCoord::new(i, j));
            }
        }
        Self::from_squares(v)
    }

    /// Squares at ℓ¹ distance at most `radius` from `centre`.
    pub fn diamond(centre: SquareCoord, radius: u32) -> Self {
        let r = radius as i32;
        let mut v = Vec::new();
        for di in -r..=r {
            let w = r - di.abs();
            for dj in -w..=w {
                v.push(centre.offset(di, dj));
            }
        }
        v.sort();
        Self::build(v)
    }

    fn build(squares: Vec<SquareCoord>) -> Self {
        let index: HashMap<SquareCoord, usize> = squares.iter().enumerate().map(|(n, &s)| (s, n)).collect();
        let neighbors: Vec<Vec<usize>> =
            squares.iter().map(|s| s.neighbors4().iter().filter_map(|t| index.get(t).copied()).collect()).collect();
        let is_boundary: Vec<bool> =
            squares.iter().map(|s| s.neighbors8().iter().any(|t| !index.contains_key(t))).collect();
        let edge_boundary: Vec<bool> = neighbors.iter().map(|n| n.len() < 4).collect();

        let mut corners: BTreeSet<SquareCoord> = BTreeSet::new();
        for s in &squares {
            for (di, dj) in [(0, 0), (-1, 0), (0, -1), (-1, -1)] {
                corners.insert(s.offset(di, dj));
            }
        }
        let mut vertices = Vec::new();
        for c in corners {
            let q = [c, c.offset(1, 0), c.offset(0, 1), c.offset(1, 1)];
            let Some(idx) = q.iter().map(|s| index.get(s).copied()).collect::<Option<Vec<_>>>() else {
                continue;
            };
            let (sw, se, nw, ne) = (idx[0], idx[1], idx[2], idx[3]);
            let (black, white, black_class) =
                if c.is_black() { ((sw, ne), (se, nw), DiagClass::A) } else { ((se, nw), (sw, ne), DiagClass::B) };
            vertices.push(Vertex { corner: c, sw, se, nw, ne, black, white, black_class });
        }
        let mut square_vertices = vec![Vec::new(); squares.len()];
        for (x, v) in vertices.iter().enumerate() {
            for s in [v.sw, v.se, v.nw, v.ne] {
                square_vertices[s].push(x);
            }
        }
        let mut edges = Vec::new();
        for (n, s) in squares.iter().enumerate() {
            for t in [s.offset(1, 0), s.offset(0, 1)] {
                if let Some(&m) = index.get(&t) {
                    edges.push((n, m));
                }
            }
        }
        let even = (0..squares.len()).all(|n| !edge_boundary[n] || squares[n].is_black());
        SquareDomain { squares, index, neighbors, is_boundary, edge_boundary, vertices, square_vertices, edges, even }
    }

    pub fn squares(&self) -> &[SquareCoord] {
        &self.squares
    }

    pub fn num_squares(&self) -> usize {
        self.squares.len()
    }

    pub fn square(&self, n: usize) -> SquareCoord {
        self.squares[n]
    }

    pub fn index_of(&self, s: SquareCoord) -> Option<usize> {
        self.index.get(&s).copied()
    }

    pub fn colour(&self, n: usize) -> Colour {
        self.squares[n].colour()
    }

    /// Edge-adjacent squares inside the domain.
    pub fn neighbors(&self, n: usize) -> &[usize] {
        &self.neighbors[n]
    }

    /// Whether square `n` shares a vertex with ∂Ω.
    pub fn is_boundary(&self, n: usize) -> bool {
        self.is_boundary[n]
    }

    /// Whether square `n` shares an edge with ∂Ω.
    pub fn shares_edge_with_boundary(&self, n: usize) -> bool {
        self.edge_boundary[n]
    }

    /// Interior vertices 𝕍(Ω); index `x` also indexes the diagonal edges d•_x and d°_x.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Interior vertices at the corners of square `n`.
    pub fn square_vertices(&self, n: usize) -> &[usize] {
        &self.square_vertices[n]
    }

    /// Pairs of edge-adjacent squares, each listed once.
    pub fn lattice_edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// True iff every square sharing an edge with ∂Ω is black.
    pub fn is_even(&self) -> bool {
        self.even
    }

    /// Square indices of the given colour.
    pub fn of_colour(&self, colour: Colour) -> Vec<usize> {
        (0..self.squares.len()).filter(|&n| self.colour(n) == colour).collect()
    }
}

/// Validates a square set and reports whether it is an even domain.
pub fn validate_even_domain<I: IntoIterator<Item = SquareCoord>>(squares: I) -> Result<SquareDomain> {
    SquareDomain::from_squares(squares)
}

fn check_simply_connected(squares: &[SquareCoord]) -> Result<()> {
    let set: HashSet<SquareCoord> = squares.iter().copied().collect();
    if flood(squares[0], |s| set.contains(&s)) != set.len() {
        return Err(Error::NotSimplyConnected);
    }
    let imin = squares.iter().map(|s| s.i).min().unwrap() - 1;
    let imax = squares.iter().map(|s| s.i).max().unwrap() + 1;
    let jmin = squares.iter().map(|s| s.j).min().unwrap() - 1;
    let jmax = squares.iter().map(|s| s.j).max().unwrap() + 1;
    let in_box = |s: SquareCoord| s.i >= imin && s.i <= imax && s.j >= jmin && s.j <= jmax;
    let total = ((imax - imin + 1) * (jmax - jmin + 1)) as usize - set.len();
    if flood(SquareCoord::new(imin, jmin), |s| in_box(s) && !set.contains(&s)) != total {
        return Err(Error::NotSimplyConnected);
    }
    Ok(())
}

fn flood(start: SquareCoord, allowed: impl Fn(SquareCoord) -> bool) -> usize {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for t in s.neighbors4() {
            if allowed(t) && seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_neighbors_examples() {
        let n = t_neighbors(SquareCoord::new(0, 0));
        let expect = [(1, 1), (1, -1), (-1, 1), (-1, -1), (2, 0), (-2, 0)];
        assert_eq!(n.map(|s| (s.i, s.j)), expect);
        let w = t_neighbors(SquareCoord::new(1, 0));
        assert_eq!(w.map(|s| (s.i - 1, s.j)), expect);
        assert!(w.iter().all(|s| s.colour() == Colour::White));
    }

    #[test]
    fn three_by_three_on_white_centre() {
        let d = SquareDomain::rectangle(0, 2, -1, 1).unwrap();
        assert_eq!(d.num_vertices(), 4);
        assert!(!d.is_even());
        let c = d.index_of(SquareCoord::new(1, 0)).unwrap();
        assert!(!d.is_boundary(c));
        assert_eq!(d.square_vertices(c).len(), 4);
    }

    #[test]
    fn plus_shape_is_even() {
        let sq = [(1, 0), (0, 0), (2, 0), (1, 1), (1, -1)].map(|(i, j)| SquareCoord::new(i, j));
        let d = validate_even_domain(sq).unwrap();
        assert!(d.is_even());
        let single = validate_even_domain([SquareCoord::new(0, 0)]).unwrap();
        assert!(single.is_even());
        assert_eq!(single.num_vertices(), 0);
    }

    #[test]
    fn even_diamond_black_graph() {
        let d = SquareDomain::diamond(SquareCoord::new(0, 0), 16);
        assert!(d.is_even());
        assert_eq!(d.of_colour(Colour::Black).len(), 17 * 17);
        let odd = SquareDomain::diamond(SquareCoord::new(0, 0), 3);
        assert!(!odd.is_even());
    }

    #[test]
    fn diagonals_partition() {
        let d = SquareDomain::diamond(SquareCoord::new(0, 0), 4);
        for v in d.vertices() {
            let (a, b) = v.black;
            let (c, e) = v.white;
            assert!(d.colour(a) == Colour::Black && d.colour(b) == Colour::Black);
            assert!(d.colour(c) == Colour::White && d.colour(e) == Colour::White);
            let sa = d.square(a);
            let sb = d.square(b);
            let slope = (sb.j - sa.j) * (sb.i - sa.i);
            assert_eq!(slope > 0, v.black_class == DiagClass::A);
        }
    }

    #[test]
    fn rejects_bad_sets() {
        let none: Vec<SquareCoord> = Vec::new();
        assert_eq!(SquareDomain::from_squares(none).unwrap_err(), Error::EmptyDomain);
        let diag = [SquareCoord::new(0, 0), SquareCoord::new(1, 1)];
        assert_eq!(SquareDomain::from_squares(diag).unwrap_err(), Error::NotSimplyConnected);
        let mut ring = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (1, 1) {
                    ring.push(SquareCoord::new(i, j));
                }
            }
        }
        assert_eq!(SquareDomain::from_squares(ring).unwrap_err(), Error::NotSimplyConnected);
    }
}
