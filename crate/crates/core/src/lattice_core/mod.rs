//! Geometry, indexing, boundaries and duality for the hexagonal, square and torus lattices.

mod hex;
mod square;
mod torus;

pub use hex::{
    down_faces, hex_ball, rhombus, triangle_edges, DualEdge, FaceCoord, HexDomain, InteriorEdge, Rhombus, SitePerc,
    YVertex, HEX_DIRS,
};
pub use square::{t_neighbors, validate_even_domain, Colour, DiagClass, SquareCoord, SquareDomain, Vertex};
pub use torus::{EdgeKind, TorusLattice};
