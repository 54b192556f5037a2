//! Hexagonal lattice faces, the triangular sublattice of Y-vertices, and hexagonal domains.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axial offsets of the six neighbours of a face, in counter-clockwise order.
pub const HEX_DIRS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// Face of the hexagonal lattice, centred at `k + l e^{iπ/3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FaceCoord {
    pub k: i32,
    pub l: i32,
}

impl FaceCoord {
    pub const ORIGIN: FaceCoord = FaceCoord { k: 0, l: 0 };

    pub const fn new(k: i32, l: i32) -> Self {
        FaceCoord { k, l }
    }

    pub const fn offset(self, dk: i32, dl: i32) -> Self {
        FaceCoord { k: self.k + dk, l: self.l + dl }
    }

    /// The six adjacent faces.
    pub fn neighbors(self) -> [FaceCoord; 6] {
        HEX_DIRS.map(|(dk, dl)| self.offset(dk, dl))
    }

    pub fn is_adjacent(self, other: FaceCoord) -> bool {
        let (dk, dl) = (other.k - self.k, other.l - self.l);
        HEX_DIRS.contains(&(dk, dl))
    }

    /// Graph distance to the origin in the face adjacency graph.
    pub fn hex_norm(self) -> i32 {
        self.k.abs().max(self.l.abs()).max((self.k + self.l).abs())
    }

    pub fn hex_distance(self, other: FaceCoord) -> i32 {
        FaceCoord::new(self.k - other.k, self.l - other.l).hex_norm()
    }

    /// Cartesian coordinates of the face centre.
    pub fn centre(self) -> (f64, f64) {
        let (k, l) = (self.k as f64, self.l as f64);
        (k + 0.5 * l, l * 3f64.sqrt() / 2.0)
    }
}

/// Top endpoint of a vertical hexagonal edge, identified with the upward triangle
/// `{tri, tri+(1,0), tri+(0,1)}` of dual faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YVertex {
    pub tri: FaceCoord,
}

impl YVertex {
    pub const fn new(tri: FaceCoord) -> Self {
        YVertex { tri }
    }

    /// The Y-vertex directly below face `(k, l)`.
    pub const fn at_position(k: i32, l: i32) -> Self {
        YVertex { tri: FaceCoord::new(k, l - 1) }
    }

    /// Position on the triangular lattice, inverse of [`YVertex::at_position`].
    pub const fn position(self) -> (i32, i32) {
        (self.tri.k, self.tri.l + 1)
    }

    /// The three mutually adjacent faces meeting at this vertex.
    pub fn faces(self) -> [FaceCoord; 3] {
        [self.tri, self.tri.offset(1, 0), self.tri.offset(0, 1)]
    }

    /// Neighbouring Y-vertices; each shares exactly one face with `self`.
    pub fn neighbors(self) -> [YVertex; 6] {
        HEX_DIRS.map(|(dk, dl)| YVertex::new(self.tri.offset(dk, dl)))
    }

    /// The three dual edges of the upward triangle.
    pub fn edges(self) -> [DualEdge; 3] {
        let [a, b, c] = self.faces();
        [DualEdge::new(a, b), DualEdge::new(a, c), DualEdge::new(b, c)]
    }

    /// Cartesian coordinates of the vertex.
    pub fn point(self) -> (f64, f64) {
        let (x, y) = self.tri.centre();
        (x + 0.5, y + 3f64.sqrt() / 6.0)
    }
}

/// Edge of the dual triangular lattice, stored with `b - a ∈ {(1,0), (0,1), (1,-1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualEdge {
    pub a: FaceCoord,
    pub b: FaceCoord,
}

impl DualEdge {
    /// Canonical edge between two adjacent faces.
    ///
    /// # Panics
    /// Panics if the faces are not adjacent.
    pub fn new(u: FaceCoord, v: FaceCoord) -> Self {
        let d = (v.k - u.k, v.l - u.l);
        match d {
            (1, 0) | (0, 1) | (1, -1) => DualEdge { a: u, b: v },
            (-1, 0) | (0, -1) | (-1, 1) => DualEdge { a: v, b: u },
            _ => panic!("faces {u:?} and {v:?} are not adjacent"),
        }
    }

    fn dir(self) -> (i32, i32) {
        (self.b.k - self.a.k, self.b.l - self.a.l)
    }

    /// Base of the upward triangle containing the edge (its Y endpoint).
    pub fn up_triangle(self) -> YVertex {
        let a = self.a;
        match self.dir() {
            (1, -1) => YVertex::new(a.offset(0, -1)),
            _ => YVertex::new(a),
        }
    }

    /// Base of the downward triangle containing the edge.
    pub fn down_triangle(self) -> FaceCoord {
        let a = self.a;
        match self.dir() {
            (0, 1) => a.offset(-1, 0),
            _ => a.offset(0, -1),
        }
    }
}

/// Faces of the downward triangle with the given base.
pub fn down_faces(base: FaceCoord) -> [FaceCoord; 3] {
    [base.offset(1, 0), base.offset(0, 1), base.offset(1, 1)]
}

/// A simply connected finite set of hexagonal faces with its derived boundary structures.
#[derive(Clone, Debug)]
pub struct HexDomain {
    faces: Vec<FaceCoord>,
    index: HashMap<FaceCoord, usize>,
    neighbors: Vec<Vec<usize>>,
    is_boundary: Vec<bool>,
    boundary_faces: Vec<usize>,
    interior_y: Vec<YVertex>,
    y_index: HashMap<YVertex, usize>,
    y_faces: Vec<[usize; 3]>,
    boundary_y: Vec<YVertex>,
    face_y: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    interior_edges: Vec<InteriorEdge>,
    down: Vec<[usize; 3]>,
}

/// Hexagonal edge whose two endpoints are interior vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InteriorEdge {
    /// Face indices on either side.
    pub faces: (usize, usize),
    /// Index of the Y endpoint in `interior_y`.
    pub y: usize,
    /// Index of the other endpoint in the list of interior downward triangles.
    pub down: usize,
}

impl HexDomain {
    /// Builds a domain from a face set, rejecting empty or non simply connected sets.
    pub fn from_faces<I: IntoIterator<Item = FaceCoord>>(faces: I) -> Result<Self> {
        let set: BTreeSet<FaceCoord> = faces.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let faces: Vec<FaceCoord> = set.into_iter().collect();
        check_simply_connected(&faces)?;
        Ok(Self::build(faces))
    }

    fn build(faces: Vec<FaceCoord>) -> Self {
        let index: HashMap<FaceCoord, usize> = faces.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let neighbors: Vec<Vec<usize>> =
            faces.iter().map(|f| f.neighbors().iter().filter_map(|g| index.get(g).copied()).collect()).collect();
        let is_boundary: Vec<bool> = neighbors.iter().map(|n| n.len() < 6).collect();
        let boundary_faces = (0..faces.len()).filter(|&i| is_boundary[i]).collect();

        let mut up_bases: BTreeSet<FaceCoord> = BTreeSet::new();
        for f in &faces {
            for (dk, dl) in [(0, 0), (-1, 0), (0, -1)] {
                up_bases.insert(f.offset(dk, dl));
            }
        }
        let mut interior_y = Vec::new();
        let mut boundary_y = Vec::new();
        for base in up_bases {
            let y = YVertex::new(base);
            let inside = y.faces().iter().filter(|g| index.contains_key(g)).count();
            if inside == 3 {
                interior_y.push(y);
            } else if inside > 0 {
                boundary_y.push(y);
            }
        }
        let y_index: HashMap<YVertex, usize> = interior_y.iter().enumerate().map(|(i, &y)| (y, i)).collect();
        let y_faces: Vec<[usize; 3]> = interior_y.iter().map(|y| y.faces().map(|g| index[&g])).collect();
        let mut face_y = vec![Vec::new(); faces.len()];
        for (yi, fs) in y_faces.iter().enumerate() {
            for &f in fs {
                face_y[f].push(yi);
            }
        }

        let mut edges = Vec::new();
        for (i, f) in faces.iter().enumerate() {
            for (dk, dl) in [(1, 0), (0, 1), (1, -1)] {
                if let Some(&j) = index.get(&f.offset(dk, dl)) {
                    edges.push((i, j));
                }
            }
        }

        let mut down_index: HashMap<FaceCoord, usize> = HashMap::new();
        let mut down = Vec::new();
        let mut interior_edges = Vec::new();
        for &(i, j) in &edges {
            let e = DualEdge::new(faces[i], faces[j]);
            let Some(&y) = y_index.get(&e.up_triangle()) else { continue };
            let base = e.down_triangle();
            let df = down_faces(base);
            if !df.iter().all(|g| index.contains_key(g)) {
                continue;
            }
            let d = *down_index.entry(base).or_insert_with(|| {
                down.push(df.map(|g| index[&g]));
                down.len() - 1
            });
            interior_edges.push(InteriorEdge { faces: (i, j), y, down: d });
        }

        HexDomain {
            faces,
            index,
            neighbors,
            is_boundary,
            boundary_faces,
            interior_y,
            y_index,
            y_faces,
            boundary_y,
            face_y,
            edges,
            interior_edges,
            down,
        }
    }

    /// Faces, sorted.
    pub fn faces(&self) -> &[FaceCoord] {
        &self.faces
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face(&self, i: usize) -> FaceCoord {
        self.faces[i]
    }

    pub fn index_of(&self, f: FaceCoord) -> Option<usize> {
        self.index.get(&f).copied()
    }

    pub fn contains(&self, f: FaceCoord) -> bool {
        self.index.contains_key(&f)
    }

    /// In-domain neighbours of face `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Whether face `i` belongs to ∂_F Ω.
    pub fn is_boundary(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    /// Indices of ∂_F Ω.
    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary_faces
    }

    /// Y(Ω): upward triangles with all three faces in the domain.
    pub fn interior_y(&self) -> &[YVertex] {
        &self.interior_y
    }

    pub fn num_y(&self) -> usize {
        self.interior_y.len()
    }

    pub fn y_index_of(&self, y: YVertex) -> Option<usize> {
        self.y_index.get(&y).copied()
    }

    /// Face indices of interior Y-vertex `y`.
    pub fn y_faces(&self, y: usize) -> [usize; 3] {
        self.y_faces[y]
    }

    /// ∂_Y Ω: Y-vertices with some but not all faces in the domain.
    pub fn boundary_y(&self) -> &[YVertex] {
        &self.boundary_y
    }

    /// Interior Y-vertices incident to face `i`.
    pub fn face_y(&self, i: usize) -> &[usize] {
        &self.face_y[i]
    }

    /// All dual edges between faces of the domain.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Hexagonal edges with both endpoints inside the domain.
    pub fn interior_edges(&self) -> &[InteriorEdge] {
        &self.interior_edges
    }

    /// Face indices of the interior downward triangles.
    pub fn down_triangles(&self) -> &[[usize; 3]] {
        &self.down
    }

    /// Number of interior hexagonal vertices of both classes.
    pub fn num_vertices(&self) -> usize {
        self.interior_y.len() + self.down.len()
    }
}

/// The ball of faces at distance at most `radius` from the origin.
pub fn hex_ball(radius: u32) -> HexDomain {
    let r = radius as i32;
    let mut faces = Vec::new();
    for k in -r..=r {
        for l in -r..=r {
            let f = FaceCoord::new(k, l);
            if f.hex_norm() <= r {
                faces.push(f);
            }
        }
    }
    HexDomain::build(faces)
}

fn check_simply_connected(faces: &[FaceCoord]) -> Result<()> {
    let set: HashSet<FaceCoord> = faces.iter().copied().collect();
    let reached = flood(faces[0], |f| set.contains(&f));
    if reached != set.len() {
        return Err(Error::NotSimplyConnected);
    }
    let kmin = faces.iter().map(|f| f.k).min().unwrap() - 1;
    let kmax = faces.iter().map(|f| f.k).max().unwrap() + 1;
    let lmin = faces.iter().map(|f| f.l).min().unwrap() - 1;
    let lmax = faces.iter().map(|f| f.l).max().unwrap() + 1;
    let in_box = |f: FaceCoord| f.k >= kmin && f.k <= kmax && f.l >= lmin && f.l <= lmax;
    let outside = |f: FaceCoord| in_box(f) && !set.contains(&f);
    let total = ((kmax - kmin + 1) * (lmax - lmin + 1)) as usize - set.len();
    if flood(FaceCoord::new(kmin, lmin), outside) != total {
        return Err(Error::NotSimplyConnected);
    }
    Ok(())
}

fn flood(start: FaceCoord, allowed: impl Fn(FaceCoord) -> bool) -> usize {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(f) = queue.pop_front() {
        for g in f.neighbors() {
            if allowed(g) && seen.insert(g) {
                queue.push_back(g);
            }
        }
    }
    seen.len()
}

/// Site percolation on Y(Ω), indexed like [`HexDomain::interior_y`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SitePerc {
    pub open: Vec<bool>,
}

impl SitePerc {
    pub fn empty(domain: &HexDomain) -> Self {
        SitePerc { open: vec![false; domain.num_y()] }
    }

    pub fn full(domain: &HexDomain) -> Self {
        SitePerc { open: vec![true; domain.num_y()] }
    }

    /// ξ* = Y(Ω) ∖ ξ.
    pub fn dual(&self) -> Self {
        SitePerc { open: self.open.iter().map(|&b| !b).collect() }
    }

    pub fn count(&self) -> usize {
        self.open.iter().filter(|&&b| b).count()
    }

    pub fn union(&self, other: &SitePerc) -> Self {
        SitePerc { open: self.open.iter().zip(&other.open).map(|(&a, &b)| a || b).collect() }
    }
}

/// E_Δ(ξ): the dual edges of the upward triangles of open Y-vertices.
pub fn triangle_edges(xi: &SitePerc, domain: &HexDomain) -> BTreeSet<DualEdge> {
    domain.interior_y().iter().zip(&xi.open).filter(|(_, &o)| o).flat_map(|(y, _)| y.edges()).collect()
}

/// The rhombus R_m of Y-vertex positions `[-m, m]²` with its four sides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rhombus {
    pub m: u32,
    pub vertices: Vec<YVertex>,
    pub left: Vec<YVertex>,
    pub right: Vec<YVertex>,
    pub top: Vec<YVertex>,
    pub bottom: Vec<YVertex>,
}

/// Builds R_m; sides are `k = -m`, `k = m`, `l = m`, `l = -m`.
pub fn rhombus(m: u32) -> Rhombus {
    let m = m as i32;
    let mut r = Rhombus {
        m: m as u32,
        vertices: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        top: Vec::new(),
        bottom: Vec::new(),
    };
    for k in -m..=m {
        for l in -m..=m {
            let y = YVertex::at_position(k, l);
            r.vertices.push(y);
            if k == -m {
                r.left.push(y);
            }
            if k == m {
                r.right.push(y);
            }
            if l == m {
                r.top.push(y);
            }
            if l == -m {
                r.bottom.push(y);
            }
        }
    }
    r
}
