//! Uniform structured rectangular meshes.
//!
//! Numbering is fixed so DOF layouts and fixtures are reproducible:
//!
//! * elements are row-major, element `(i, j)` has id `j * nx + i`;
//! * vertices are row-major over `(i, j)`, wrapping on periodic axes;
//! * horizontal edges come first (`j * nx + i`, lying at `y = y0 + j * hy`),
//!   then vertical edges (`offset + j * nvx + i`, lying at `x = x0 + i * hx`);
//! * each element lists its edges as bottom, right, top, left.
//!
//! Boundary edges store the outward normal of their only element. Interior and
//! periodic edges store `+x` (vertical edges) or `+y` (horizontal edges).
//! Periodicity identifies edges and vertices; no ghost cells exist.

use crate::error::{Error, Result};
use alloc::format;

/// One of the four sides of the domain or of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom = 0,
    Right = 1,
    Top = 2,
    Left = 3,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Bottom => Side::Top,
            Side::Right => Side::Left,
            Side::Top => Side::Bottom,
            Side::Left => Side::Right,
        }
    }

    /// Outward unit normal of this side of an axis-aligned rectangle.
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }

    /// True for the sides parameterized along `x` (bottom and top).
    pub fn is_horizontal(self) -> bool {
        matches!(self, Side::Bottom | Side::Top)
    }

    /// Reference coordinates on `[0,1]^2` of the point with edge parameter `s`.
    pub fn reference_point(self, s: f64) -> [f64; 2] {
        match self {
            Side::Bottom => [s, 0.0],
            Side::Right => [1.0, s],
            Side::Top => [s, 1.0],
            Side::Left => [0.0, s],
        }
    }
}

/// Flow boundary condition attached to a non-periodic side of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// No constraint on any space (used by operator tests).
    Natural,
    /// `u = 0`: normal component through the stream function, tangential
    /// component through the hat velocity.
    NoSlip,
    /// `u . n = 0` with free tangential velocity.
    Slip,
}

/// Per-side boundary conditions, indexed by [`Side::index`].
pub type SideConditions = [BoundaryCondition; 4];

/// Geometry of one mesh edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeom {
    /// Stored unit normal.
    pub normal: [f64; 2],
    /// Unit tangent, the stored normal rotated counter-clockwise.
    pub tangent: [f64; 2],
    pub length: f64,
    /// Width of the adjacent elements in the normal direction.
    pub h_perp: f64,
    /// Domain side for non-periodic boundary edges.
    pub boundary: Option<Side>,
}

/// Incidence of an edge on an element: edge id and `+1` when the stored
/// normal is outward for that element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeIncidence {
    pub edge: usize,
    pub sign: i8,
}

/// Element adjacent to an edge together with the element side the edge sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeNeighbor {
    pub element: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub hx: f64,
    pub hy: f64,
    pub periodic_x: bool,
    pub periodic_y: bool,
    n_vertex_cols: usize,
    n_vertex_rows: usize,
    n_hedge_rows: usize,
    n_vedge_cols: usize,
}

impl StructuredMesh {
    /// Builds an `nx x ny` mesh of `[x0,x1] x [y0,y1]`.
    pub fn new(
        nx: usize,
        ny: usize,
        bounds: [f64; 4],
        periodic_x: bool,
        periodic_y: bool,
    ) -> Result<Self> {
        let [x0, x1, y0, y1] = bounds;
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "element counts must be positive, got {nx} x {ny}"
            )));
        }
        if !(x1 > x0) || !(y1 > y0) || !x0.is_finite() || !x1.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "degenerate bounds [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        if !y0.is_finite() || !y1.is_finite() {
            return Err(Error::InvalidMesh("non-finite bounds".into()));
        }
        let n_vertex_cols = if periodic_x { nx } else { nx + 1 };
        let n_vertex_rows = if periodic_y { ny } else { ny + 1 };
        Ok(Self {
            nx,
            ny,
            x0,
            x1,
            y0,
            y1,
            hx: (x1 - x0) / nx as f64,
            hy: (y1 - y0) / ny as f64,
            periodic_x,
            periodic_y,
            n_vertex_cols,
            n_vertex_rows,
            n_hedge_rows: n_vertex_rows,
            n_vedge_cols: n_vertex_cols,
        })
    }

    /// Unit square `[0,1]^2` without periodicity.
    pub fn unit_square(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, [0.0, 1.0, 0.0, 1.0], false, false)
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_vertices(&self) -> usize {
        self.n_vertex_cols * self.n_vertex_rows
    }

    pub fn num_horizontal_edges(&self) -> usize {
        self.nx * self.n_hedge_rows
    }

    pub fn num_edges(&self) -> usize {
        self.num_horizontal_edges() + self.n_vedge_cols * self.ny
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Smallest element width.
    pub fn h_min(&self) -> f64 {
        self.hx.min(self.hy)
    }

    /// `(i, j)` grid position of an element.
    pub fn element_ij(&self, element: usize) -> (usize, usize) {
        (element % self.nx, element / self.nx)
    }

    pub fn element_id(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Lower-left corner of an element.
    pub fn element_origin(&self, element: usize) -> [f64; 2] {
        let (i, j) = self.element_ij(element);
        [self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy]
    }

    /// Maps reference coordinates in `[0,1]^2` to physical coordinates.
    pub fn map_point(&self, element: usize, r: [f64; 2]) -> [f64; 2] {
        let o = self.element_origin(element);
        [o[0] + r[0] * self.hx, o[1] + r[1] * self.hy]
    }

    /// Vertex id of grid corner `(i, j)`, `0 <= i <= nx`, `0 <= j <= ny`.
    pub fn vertex_id(&self, i: usize, j: usize) -> usize {
        let ii = if self.periodic_x { i % self.nx } else { i };
        let jj = if self.periodic_y { j % self.ny } else { j };
        jj * self.n_vertex_cols + ii
    }

    /// Grid position `(i, j)` of a vertex (the representative with the
    /// smallest indices on periodic axes).
    pub fn vertex_ij(&self, vertex: usize) -> (usize, usize) {
        (vertex % self.n_vertex_cols, vertex / self.n_vertex_cols)
    }

    /// Domain sides a vertex lies on (non-periodic sides only).
    pub fn vertex_sides(&self, vertex: usize) -> [bool; 4] {
        let (i, j) = self.vertex_ij(vertex);
        [
            !self.periodic_y && j == 0,
            !self.periodic_x && i == self.nx,
            !self.periodic_y && j == self.ny,
            !self.periodic_x && i == 0,
        ]
    }

    fn horizontal_edge(&self, i: usize, j: usize) -> usize {
        let jj = if self.periodic_y { j % self.ny } else { j };
        jj * self.nx + i
    }

    fn vertical_edge(&self, i: usize, j: usize) -> usize {
        let ii = if self.periodic_x { i % self.nx } else { i };
        self.num_horizontal_edges() + j * self.n_vedge_cols + ii
    }

    fn check_element(&self, element: usize) -> Result<()> {
        if element >= self.num_elements() {
            return Err(Error::OutOfRange {
                kind: "element",
                id: element,
                count: self.num_elements(),
            });
        }
        Ok(())
    }

    fn check_edge(&self, edge: usize) -> Result<()> {
        if edge >= self.num_edges() {
            return Err(Error::OutOfRange {
                kind: "edge",
                id: edge,
                count: self.num_edges(),
            });
        }
        Ok(())
    }

    /// The four edges of an element in bottom, right, top, left order.
    pub fn element_edges(&self, element: usize) -> Result<[EdgeIncidence; 4]> {
        self.check_element(element)?;
        Ok(self.element_edges_unchecked(element))
    }

    pub(crate) fn element_edges_unchecked(&self, element: usize) -> [EdgeIncidence; 4] {
        let (i, j) = self.element_ij(element);
        let bottom = self.horizontal_edge(i, j);
        let top = self.horizontal_edge(i, j + 1);
        let left = self.vertical_edge(i, j);
        let right = self.vertical_edge(i + 1, j);
        // Boundary edges store the outward normal of their element, so only
        // interior/periodic bottom and left edges see an inward stored normal.
        let bottom_sign = if !self.periodic_y && j == 0 { 1 } else { -1 };
        let left_sign = if !self.periodic_x && i == 0 { 1 } else { -1 };
        [
            EdgeIncidence {
                edge: bottom,
                sign: bottom_sign,
            },
            EdgeIncidence {
                edge: right,
                sign: 1,
            },
            EdgeIncidence { edge: top, sign: 1 },
            EdgeIncidence {
                edge: left,
                sign: left_sign,
            },
        ]
    }

    /// Elements sharing an edge. The first entry's outward normal equals the
    /// stored normal; boundary edges have a single entry.
    pub fn edge_elements(&self, edge: usize) -> Result<([EdgeNeighbor; 2], usize)> {
        self.check_edge(edge)?;
        let nh = self.num_horizontal_edges();
        if edge < nh {
            let (i, j) = (edge % self.nx, edge / self.nx);
            let above = EdgeNeighbor {
                element: self.element_id(i, j % self.ny),
                side: Side::Bottom,
            };
            if !self.periodic_y && j == 0 {
                return Ok(([above, above], 1));
            }
            let jb = if j == 0 { self.ny - 1 } else { j - 1 };
            let below = EdgeNeighbor {
                element: self.element_id(i, jb),
                side: Side::Top,
            };
            if !self.periodic_y && j == self.ny {
                return Ok(([below, below], 1));
            }
            Ok(([below, above], 2))
        } else {
            let local = edge - nh;
            let (i, j) = (local % self.n_vedge_cols, local / self.n_vedge_cols);
            let right = EdgeNeighbor {
                element: self.element_id(i % self.nx, j),
                side: Side::Left,
            };
            if !self.periodic_x && i == 0 {
                return Ok(([right, right], 1));
            }
            let il = if i == 0 { self.nx - 1 } else { i - 1 };
            let left = EdgeNeighbor {
                element: self.element_id(il, j),
                side: Side::Right,
            };
            if !self.periodic_x && i == self.nx {
                return Ok(([left, left], 1));
            }
            Ok(([left, right], 2))
        }
    }

    /// Geometry of an edge.
    pub fn edge_geom(&self, edge: usize) -> Result<EdgeGeom> {
        self.check_edge(edge)?;
        let nh = self.num_horizontal_edges();
        let (normal, length, h_perp, boundary) = if edge < nh {
            let j = edge / self.nx;
            if !self.periodic_y && j == 0 {
                ([0.0, -1.0], self.hx, self.hy, Some(Side::Bottom))
            } else if !self.periodic_y && j == self.ny {
                ([0.0, 1.0], self.hx, self.hy, Some(Side::Top))
            } else {
                ([0.0, 1.0], self.hx, self.hy, None)
            }
        } else {
            let i = (edge - nh) % self.n_vedge_cols;
            if !self.periodic_x && i == 0 {
                ([-1.0, 0.0], self.hy, self.hx, Some(Side::Left))
            } else if !self.periodic_x && i == self.nx {
                ([1.0, 0.0], self.hy, self.hx, Some(Side::Right))
            } else {
                ([1.0, 0.0], self.hy, self.hx, None)
            }
        };
        Ok(EdgeGeom {
            normal,
            tangent: [-normal[1], normal[0]],
            length,
            h_perp,
            boundary,
        })
    }

    /// Start and end vertices of an edge, ordered along increasing `x` or `y`.
    pub fn edge_vertices(&self, edge: usize) -> Result<[usize; 2]> {
        self.check_edge(edge)?;
        let nh = self.num_horizontal_edges();
        Ok(if edge < nh {
            let (i, j) = (edge % self.nx, edge / self.nx);
            [self.vertex_id(i, j), self.vertex_id(i + 1, j)]
        } else {
            let local = edge - nh;
            let (i, j) = (local % self.n_vedge_cols, local / self.n_vedge_cols);
            [self.vertex_id(i, j), self.vertex_id(i, j + 1)]
        })
    }

    /// Neighbor across a side of an element, `None` on non-periodic boundaries.
    pub fn neighbor(&self, element: usize, side: Side) -> Option<usize> {
        let (i, j) = self.element_ij(element);
        match side {
            Side::Bottom => {
                if j > 0 {
                    Some(self.element_id(i, j - 1))
                } else if self.periodic_y {
                    Some(self.element_id(i, self.ny - 1))
                } else {
                    None
                }
            }
            Side::Top => {
                if j + 1 < self.ny {
                    Some(self.element_id(i, j + 1))
                } else if self.periodic_y {
                    Some(self.element_id(i, 0))
                } else {
                    None
                }
            }
            Side::Left => {
                if i > 0 {
                    Some(self.element_id(i - 1, j))
                } else if self.periodic_x {
                    Some(self.element_id(self.nx - 1, j))
                } else {
                    None
                }
            }
            Side::Right => {
                if i + 1 < self.nx {
                    Some(self.element_id(i + 1, j))
                } else if self.periodic_x {
                    Some(self.element_id(0, j))
                } else {
                    None
                }
            }
        }
    }

    /// Global vertex id of a corner of an element, corners indexed by
    /// `(a, b)` in `{0,1}^2` along x and y.
    pub fn element_vertex(&self, element: usize, a: usize, b: usize) -> usize {
        let (i, j) = self.element_ij(element);
        self.vertex_id(i + a, j + b)
    }

    /// Element-side data used by the assemblers: outward normals, the stored
    /// edge tangents, edge lengths and perpendicular widths.
    pub fn element_sides(&self, element: usize) -> ElementSides {
        let inc = self.element_edges_unchecked(element);
        let mut out = ElementSides {
            edges: [0; 4],
            normals: [[0.0; 2]; 4],
            tangents: [[0.0; 2]; 4],
            lengths: [0.0; 4],
            h_perp: [0.0; 4],
            boundary: [None; 4],
        };
        for side in Side::ALL {
            let s = side.index();
            let g = self.edge_geom(inc[s].edge).expect("edge id from incidence");
            out.edges[s] = inc[s].edge;
            out.normals[s] = side.outward_normal();
            out.tangents[s] = g.tangent;
            out.lengths[s] = g.length;
            out.h_perp[s] = g.h_perp;
            out.boundary[s] = g.boundary;
        }
        out
    }
}

/// Per-side geometric data of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementSides {
    pub edges: [usize; 4],
    pub normals: [[f64; 2]; 4],
    pub tangents: [[f64; 2]; 4],
    pub lengths: [f64; 4],
    pub h_perp: [f64; 4],
    pub boundary: [Option<Side>; 4],
}
