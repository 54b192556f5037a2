//! The torus ℤ²/2nℤ² with its checkerboard, edges and fundamental dual cycles.

/// Orientation of a torus edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Vertical edge `V(i,j)` between squares `(i,j)` and `(i+1,j)`.
    Vertical,
    /// Horizontal edge `H(i,j)` between squares `(i,j)` and `(i,j+1)`.
    Horizontal,
}

/// The square lattice on the torus of side `2n`.
///
/// Squares, vertices and both edge families are indexed by `(i, j) ∈ [0, 2n)²` as
/// `i + 2n·j`; vertex `(i,j)` is the corner at `(i+½, j+½)`; horizontal edges are
/// offset by `4n²` in the edge index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusLattice {
    pub n: usize,
}

impl TorusLattice {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "torus size must be positive");
        TorusLattice { n }
    }

    /// Side length `2n`.
    pub fn side(&self) -> usize {
        2 * self.n
    }

    pub fn num_faces(&self) -> usize {
        self.side() * self.side()
    }

    pub fn num_vertices(&self) -> usize {
        self.num_faces()
    }

    pub fn num_edges(&self) -> usize {
        2 * self.num_faces()
    }

    pub fn wrap(&self, a: i64) -> usize {
        a.rem_euclid(self.side() as i64) as usize
    }

    /// Index of the square or vertex `(i, j)` after wraparound.
    pub fn index(&self, i: i64, j: i64) -> usize {
        self.wrap(i) + self.side() * self.wrap(j)
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.side(), idx / self.side())
    }

    pub fn is_black(&self, face: usize) -> bool {
        let (i, j) = self.coords(face);
        (i + j) % 2 == 0
    }

    pub fn black_faces(&self) -> Vec<usize> {
        (0..self.num_faces()).filter(|&f| self.is_black(f)).collect()
    }

    pub fn white_faces(&self) -> Vec<usize> {
        (0..self.num_faces()).filter(|&f| !self.is_black(f)).collect()
    }

    pub fn vertical(&self, i: i64, j: i64) -> usize {
        self.index(i, j)
    }

    pub fn horizontal(&self, i: i64, j: i64) -> usize {
        self.num_faces() + self.index(i, j)
    }

    pub fn edge_kind(&self, e: usize) -> EdgeKind {
        if e < self.num_faces() {
            EdgeKind::Vertical
        } else {
            EdgeKind::Horizontal
        }
    }

    /// The two squares separated by edge `e`.
    pub fn edge_faces(&self, e: usize) -> (usize, usize) {
        let idx = e % self.num_faces();
        let (i, j) = self.coords(idx);
        let (i, j) = (i as i64, j as i64);
        match self.edge_kind(e) {
            EdgeKind::Vertical => (self.index(i, j), self.index(i + 1, j)),
            EdgeKind::Horizontal => (self.index(i, j), self.index(i, j + 1)),
        }
    }

    /// Endpoints of edge `e`: lower then upper for vertical, left then right for horizontal.
    pub fn edge_vertices(&self, e: usize) -> (usize, usize) {
        let idx = e % self.num_faces();
        let (i, j) = self.coords(idx);
        let (i, j) = (i as i64, j as i64);
        match self.edge_kind(e) {
            EdgeKind::Vertical => (self.index(i, j - 1), self.index(i, j)),
            EdgeKind::Horizontal => (self.index(i - 1, j), self.index(i, j)),
        }
    }

    /// Edges at vertex `v` in the order north, east, south, west.
    pub fn vertex_edges(&self, v: usize) -> [usize; 4] {
        let (i, j) = self.coords(v);
        let (i, j) = (i as i64, j as i64);
        [self.vertical(i, j + 1), self.horizontal(i + 1, j), self.vertical(i, j), self.horizontal(i, j)]
    }

    /// Black squares joined by the black diagonal at vertex `v`.
    pub fn black_diagonal(&self, v: usize) -> (usize, usize) {
        let (i, j) = self.coords(v);
        let (i, j) = (i as i64, j as i64);
        if (i + j) % 2 == 0 {
            (self.index(i, j), self.index(i + 1, j + 1))
        } else {
            (self.index(i + 1, j), self.index(i, j + 1))
        }
    }

    /// White squares joined by the white diagonal at vertex `v`.
    pub fn white_diagonal(&self, v: usize) -> (usize, usize) {
        let (i, j) = self.coords(v);
        let (i, j) = (i as i64, j as i64);
        if (i + j) % 2 == 0 {
            (self.index(i + 1, j), self.index(i, j + 1))
        } else {
            (self.index(i, j), self.index(i + 1, j + 1))
        }
    }

    /// Edges crossed by the dual walk making `steps` unit steps to the right from square (0,0).
    pub fn rightward_walk(&self, steps: usize) -> Vec<usize> {
        (0..steps).map(|t| self.vertical(t as i64, 0)).collect()
    }

    /// Edges crossed by the horizontal fundamental dual cycle through (0,0).
    pub fn horizontal_cycle(&self) -> Vec<usize> {
        self.rightward_walk(self.side())
    }

    /// Edges crossed by the vertical fundamental dual cycle through (0,0), walking upwards.
    pub fn vertical_cycle(&self) -> Vec<usize> {
        (0..self.side()).map(|t| self.horizontal(0, t as i64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for n in 1..4 {
            let t = TorusLattice::new(n);
            assert_eq!(t.num_vertices(), 4 * n * n);
            assert_eq!(t.num_edges(), 8 * n * n);
            assert_eq!(t.num_faces(), 4 * n * n);
            assert_eq!(t.black_faces().len(), 2 * n * n);
        }
    }

    #[test]
    fn each_edge_in_two_faces_and_vertex_degree_four() {
        for n in 1..4 {
            let t = TorusLattice::new(n);
            let mut face_count = vec![0; t.num_faces()];
            let mut degree = vec![0; t.num_vertices()];
            for e in 0..t.num_edges() {
                let (a, b) = t.edge_faces(e);
                assert_ne!(a, b);
                face_count[a] += 1;
                face_count[b] += 1;
                let (u, v) = t.edge_vertices(e);
                degree[u] += 1;
                degree[v] += 1;
            }
            assert!(face_count.iter().all(|&c| c == 4));
            assert!(degree.iter().all(|&d| d == 4));
            for v in 0..t.num_vertices() {
                for e in t.vertex_edges(v) {
                    let (a, b) = t.edge_vertices(e);
                    assert!(a == v || b == v);
                }
            }
        }
    }

    #[test]
    fn removing_a_fundamental_cycle_keeps_faces_connected() {
        let t = TorusLattice::new(2);
        let cut: std::collections::HashSet<usize> = t.horizontal_cycle().into_iter().collect();
        let mut uf = petgraph::unionfind::UnionFind::<usize>::new(t.num_faces());
        for e in 0..t.num_edges() {
            if !cut.contains(&e) {
                let (a, b) = t.edge_faces(e);
                uf.union(a, b);
            }
        }
        assert!((0..t.num_faces()).all(|f| uf.equiv(0, f)));
    }

    #[test]
    fn diagonals_have_matching_colours() {
        let t = TorusLattice::new(2);
        for v in 0..t.num_vertices() {
            let (a, b) = t.black_diagonal(v);
            let (c, d) = t.white_diagonal(v);
            assert!(t.is_black(a) && t.is_black(b));
            assert!(!t.is_black(c) && !t.is_black(d));
        }
    }
}
