//! Conforming 2D triangulations with boundary classification, red-green
//! refinement, geometric queries, and point location.
//!
//! A mesh is immutable after construction; refinement produces a new mesh.
//! Internally every mesh keeps its "red skeleton": the regularly refined
//! cells, with green closure cells derived on top. Green cells are unwound
//! and re-derived on every refinement pass, so a green cell never has green
//! children.

mod locator;
mod refine;
pub mod io;

pub use refine::{project_to_circle, RefinementMap, VertexSrc};

use crate::geometry::{
    barycentric, signed_area, triangle_angles, triangle_diameter, Point2,
};
use locator::BucketGrid;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellOrigin {
    Root,
    RedChild,
    GreenChild,
}

#[derive(Debug)]
pub enum MeshError {
    BadVertexIndex { cell: usize, index: usize },
    ZeroAreaCell { cell: usize },
    NonConformingEdge { vertices: [usize; 2] },
    UntaggedBoundaryEdge { vertices: [usize; 2] },
    DegenerateProjection { vertex: usize },
    Io(String),
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::BadVertexIndex { cell, index } => {
                write!(f, "cell {cell} references invalid vertex {index}")
            }
            MeshError::ZeroAreaCell { cell } => write!(f, "cell {cell} has zero area"),
            MeshError::NonConformingEdge { vertices } => {
                write!(f, "edge {}-{} shared by more than two cells", vertices[0], vertices[1])
            }
            MeshError::UntaggedBoundaryEdge { vertices } => {
                write!(f, "boundary edge {}-{} carries no tag", vertices[0], vertices[1])
            }
            MeshError::DegenerateProjection { vertex } => {
                write!(f, "vertex {vertex} cannot be projected (coincides with circle center)")
            }
            MeshError::Io(msg) => write!(f, "mesh i/o: {msg}"),
        }
    }
}

impl std::error::Error for MeshError {}

/// Circular hole boundary (the excluded disc of the Hemker domain).
#[derive(Clone, Copy, Debug)]
pub struct CircleHole {
    pub center: Point2,
    pub radius: f64,
}

impl CircleHole {
    pub fn unit() -> Self {
        CircleHole { center: Point2::new(0.0, 0.0), radius: 1.0 }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.dist(self.center) <= self.radius
    }

    pub fn on_circle(&self, p: Point2) -> bool {
        (p.dist(self.center) - self.radius).abs() <= 1e-9 * self.radius
    }
}

/// Mesh edge with adjacency and boundary tag.
#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoint vertex ids, lower id first.
    pub vertices: [usize; 2],
    /// Adjacent cell ids (one for boundary edges), lower id first.
    pub cells: [Option<usize>; 2],
    /// Tag for boundary edges, `None` for interior ones.
    pub tag: Option<BoundaryKind>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }

    pub fn n_adjacent(&self) -> usize {
        if self.is_boundary() { 1 } else { 2 }
    }
}

/// Per-cell geometric quantities used by assembly and the error estimator.
#[derive(Clone, Debug)]
pub struct CellGeometry {
    pub area: f64,
    pub h_k: f64,
    pub rho_k: f64,
    pub angles: [f64; 3],
    pub gradient_basis: [Point2; 3],
}

#[derive(Clone, Debug)]
pub(crate) struct RedCell {
    pub verts: [usize; 3],
    pub root: bool,
    pub generation: u32,
}

/// Closure state of a red cell in the conforming view.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Closure {
    Intact,
    /// Bisected across its longest edge.
    Green { edge: [usize; 2], mid: usize },
    /// Bisected across the longest edge and once more toward a hanging
    /// midpoint on another edge (three children).
    Blue {
        long_edge: [usize; 2],
        long_mid: usize,
        hang_edge: [usize; 2],
        hang_mid: usize,
    },
}

/// How boundary edges are tagged when a mesh is built from raw arrays.
pub enum BoundarySpec<'a> {
    AllDirichlet,
    /// Tag decided from the edge midpoint coordinates.
    ByMidpoint(&'a dyn Fn(Point2) -> BoundaryKind),
}

#[derive(Debug)]
pub struct Mesh {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 3]>,
    origin: Vec<CellOrigin>,
    generation: Vec<u32>,
    edges: Vec<Edge>,
    cell_edges: Vec<[usize; 3]>,
    vertex_cells_start: Vec<usize>,
    vertex_cells_data: Vec<usize>,
    vertex_tag: Vec<Option<BoundaryKind>>,
    curved: Option<CircleHole>,
    locator: BucketGrid,
    // red skeleton bookkeeping
    pub(crate) red_cells: Vec<RedCell>,
    pub(crate) closures: Vec<Closure>,
    pub(crate) cell_red: Vec<usize>,
}

/// Builds a conforming mesh from raw vertex and cell arrays.
///
/// Clockwise cells are reoriented; every boundary edge must receive a tag
/// from `spec`.
pub fn build_mesh(
    points: &[Point2],
    triangles: &[[usize; 3]],
    spec: BoundarySpec,
) -> Result<Mesh, MeshError> {
    let mut red_cells = Vec::with_capacity(triangles.len());
    for (c, tri) in triangles.iter().enumerate() {
        let mut tri = *tri;
        for &v in &tri {
            if v >= points.len() {
                return Err(MeshError::BadVertexIndex { cell: c, index: v });
            }
        }
        let area = signed_area(points[tri[0]], points[tri[1]], points[tri[2]]);
        let scale = triangle_diameter(points[tri[0]], points[tri[1]], points[tri[2]]);
        if area.abs() <= 1e-14 * scale * scale {
            return Err(MeshError::ZeroAreaCell { cell: c });
        }
        if area < 0.0 {
            tri.swap(1, 2);
        }
        red_cells.push(RedCell { verts: tri, root: true, generation: 0 });
    }
    let closures = vec![Closure::Intact; red_cells.len()];
    Mesh::assemble(points.to_vec(), red_cells, closures, None, |u, v, mid| match &spec {
        BoundarySpec::AllDirichlet => Ok(BoundaryKind::Dirichlet),
        BoundarySpec::ByMidpoint(f) => {
            let _ = (u, v);
            Ok(f(mid))
        }
    })
}

impl Mesh {
    /// Internal constructor: expands green splits into conforming cells and
    /// builds the full topology.
    pub(crate) fn assemble(
        vertices: Vec<Point2>,
        red_cells: Vec<RedCell>,
        closures: Vec<Closure>,
        curved: Option<CircleHole>,
        mut tag_boundary: impl FnMut(usize, usize, Point2) -> Result<BoundaryKind, MeshError>,
    ) -> Result<Mesh, MeshError> {
        debug_assert_eq!(red_cells.len(), closures.len());
        // cyclic position of an edge within a cell, as (k, k+1, k+2)
        let cyclic = |v: [usize; 3], edge: [usize; 2]| -> ([usize; 3], bool) {
            for k in 0..3 {
                let (p, q, opp) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
                if (p == edge[0] && q == edge[1]) || (p == edge[1] && q == edge[0]) {
                    return ([p, q, opp], true);
                }
            }
            (v, false)
        };
        let mut cells = Vec::with_capacity(red_cells.len());
        let mut origin = Vec::new();
        let mut generation = Vec::new();
        let mut cell_red = Vec::new();
        for (r, rc) in red_cells.iter().enumerate() {
            let base_origin = if rc.root { CellOrigin::Root } else { CellOrigin::RedChild };
            let children: Vec<[usize; 3]> = match closures[r] {
                Closure::Intact => {
                    cells.push(rc.verts);
                    origin.push(base_origin);
                    generation.push(rc.generation);
                    cell_red.push(r);
                    continue;
                }
                Closure::Green { edge, mid } => {
                    let ([p, q, opp], ok) = cyclic(rc.verts, edge);
                    assert!(ok, "green split edge not part of its red cell");
                    vec![[p, mid, opp], [mid, q, opp]]
                }
                Closure::Blue { long_edge, long_mid, hang_edge, hang_mid } => {
                    let ([v0, v1, v2], ok) = cyclic(rc.verts, long_edge);
                    assert!(ok, "blue long edge not part of its red cell");
                    let (m_l, m_h) = (long_mid, hang_mid);
                    if (hang_edge[0] == v1 && hang_edge[1] == v2)
                        || (hang_edge[0] == v2 && hang_edge[1] == v1)
                    {
                        vec![[v0, m_l, v2], [m_l, v1, m_h], [m_l, m_h, v2]]
                    } else {
                        // hanging on (v2, v0)
                        vec![[v0, m_l, m_h], [m_l, v2, m_h], [m_l, v1, v2]]
                    }
                }
            };
            for child in children {
                cells.push(child);
                origin.push(CellOrigin::GreenChild);
                generation.push(rc.generation);
                cell_red.push(r);
            }
        }

        // edge table
        let mut edge_map: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cell_edges = vec![[usize::MAX; 3]; cells.len()];
        for (c, tri) in cells.iter().enumerate() {
            for k in 0..3 {
                // edge k is opposite local vertex k
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = [a.min(b), a.max(b)];
                let e = *edge_map.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: key, cells: [None, None], tag: None });
                    edges.len() - 1
                });
                let slots = &mut edges[e].cells;
                if slots[0].is_none() {
                    slots[0] = Some(c);
                } else if slots[1].is_none() {
                    slots[1] = Some(c);
                } else {
                    return Err(MeshError::NonConformingEdge { vertices: key });
                }
                cell_edges[c][k] = e;
            }
        }

        // boundary tags and vertex tags (Dirichlet wins at corners)
        let mut vertex_tag = vec![None; vertices.len()];
        for e in edges.iter_mut() {
            if e.cells[1].is_none() {
                let [u, v] = e.vertices;
                let mid = vertices[u].midpoint(vertices[v]);
                let kind = tag_boundary(u, v, mid)?;
                e.tag = Some(kind);
                for &w in &e.vertices {
                    vertex_tag[w] = match (vertex_tag[w], kind) {
                        (Some(BoundaryKind::Dirichlet), _) | (_, BoundaryKind::Dirichlet) => {
                            Some(BoundaryKind::Dirichlet)
                        }
                        _ => Some(BoundaryKind::Neumann),
                    };
                }
            }
        }

        // vertex -> incident cells (CSR layout, cells ascending per vertex)
        let mut counts = vec![0usize; vertices.len()];
        for tri in &cells {
            for &v in tri {
                counts[v] += 1;
            }
        }
        let mut start = vec![0usize; vertices.len() + 1];
        for v in 0..vertices.len() {
            start[v + 1] = start[v] + counts[v];
        }
        let mut data = vec![0usize; start[vertices.len()]];
        let mut fill = start.clone();
        for (c, tri) in cells.iter().enumerate() {
            for &v in tri {
                data[fill[v]] = c;
                fill[v] += 1;
            }
        }

        let locator = BucketGrid::build(&vertices, &cells);
        Ok(Mesh {
            vertices,
            cells,
            origin,
            generation,
            edges,
            cell_edges,
            vertex_cells_start: start,
            vertex_cells_data: data,
            vertex_tag,
            curved,
            locator,
            red_cells,
            closures,
            cell_red,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: usize) -> Point2 {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cell(&self, c: usize) -> [usize; 3] {
        self.cells[c]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell_points(&self, c: usize) -> [Point2; 3] {
        let t = self.cells[c];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [u, v] = self.edges[e].vertices;
        self.vertices[u].dist(self.vertices[v])
    }

    /// Edge ids of cell `c`; edge `k` is opposite local vertex `k`.
    pub fn cell_edges(&self, c: usize) -> [usize; 3] {
        self.cell_edges[c]
    }

    pub fn origin(&self, c: usize) -> CellOrigin {
        self.origin[c]
    }

    pub fn generation(&self, c: usize) -> u32 {
        self.generation[c]
    }

    /// Boundary tag touching vertex `v` (Dirichlet wins where kinds meet).
    pub fn vertex_tag(&self, v: usize) -> Option<BoundaryKind> {
        self.vertex_tag[v]
    }

    pub fn circle_hole(&self) -> Option<CircleHole> {
        self.curved
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells_data[self.vertex_cells_start[v]..self.vertex_cells_start[v + 1]]
    }

    pub fn cell_geometry(&self, c: usize) -> CellGeometry {
        let [a, b, p] = self.cell_points(c);
        CellGeometry {
            area: signed_area(a, b, p),
            h_k: triangle_diameter(a, b, p),
            rho_k: crate::geometry::inscribed_diameter(a, b, p),
            angles: triangle_angles(a, b, p),
            gradient_basis: crate::geometry::p1_gradients(a, b, p),
        }
    }

    pub fn barycenter(&self, c: usize) -> Point2 {
        let [a, b, p] = self.cell_points(c);
        Point2::new((a.x + b.x + p.x) / 3.0, (a.y + b.y + p.y) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| {
                let [a, b, p] = self.cell_points(c);
                signed_area(a, b, p)
            })
            .sum()
    }

    pub fn min_angle(&self) -> f64 {
        let mut m = f64::INFINITY;
        for c in 0..self.n_cells() {
            let [a, b, p] = self.cell_points(c);
            for ang in triangle_angles(a, b, p) {
                m = m.min(ang);
            }
        }
        m
    }

    /// Cell whose closed triangle contains `p` (barycentric coordinates
    /// >= -1e-12); lowest cell id wins ties; `None` outside the domain.
    pub fn locate_point(&self, p: Point2) -> Option<usize> {
        for &c in self.locator.candidates(p) {
            let [a, b, q] = self.cell_points(c as usize);
            let l = barycentric(a, b, q, p);
            if l.iter().all(|&x| x >= -1e-12) {
                return Some(c as usize);
            }
        }
        None
    }

    /// Among cells incident to vertex `i`, the one whose angular sector at
    /// `i` contains `direction` (sector boundary counts, lowest id wins).
    pub fn ray_first_cell(&self, i: usize, direction: Point2) -> Option<usize> {
        let xi = self.vertices[i];
        for &c in self.vertex_cells(i) {
            let tri = self.cells[c];
            let k = tri.iter().position(|&v| v == i).unwrap();
            let e1 = self.vertices[tri[(k + 1) % 3]] - xi;
            let e2 = self.vertices[tri[(k + 2) % 3]] - xi;
            let tol1 = 1e-12 * e1.norm() * direction.norm();
            let tol2 = 1e-12 * e2.norm() * direction.norm();
            if e1.cross(direction) >= -tol1 && direction.cross(e2) >= -tol2 {
                return Some(c);
            }
        }
        None
    }

    /// Full conformity audit: structural checks plus a local hanging-node
    /// scan. Used by tests and the `check` subcommand.
    pub fn validate_conforming(&self) -> Result<(), String> {
        for c in 0..self.n_cells() {
            let [a, b, p] = self.cell_points(c);
            if signed_area(a, b, p) <= 0.0 {
                return Err(format!("cell {c} not positively oriented"));
            }
        }
        for e in &self.edges {
            if e.is_boundary() && e.tag.is_none() {
                return Err(format!("boundary edge {:?} untagged", e.vertices));
            }
        }
        // hanging-node scan: a vertex sitting strictly inside another edge
        for e in &self.edges {
            let [u, v] = e.vertices;
            let (a, b) = (self.vertices[u], self.vertices[v]);
            let len = a.dist(b);
            let mut candidates: Vec<usize> = Vec::new();
            for &w in [u, v].iter() {
                for &c in self.vertex_cells(w) {
                    candidates.extend(self.cells[c]);
                }
            }
            candidates.sort_unstable();
            candidates.dedup();
            for w in candidates {
                if w == u || w == v {
                    continue;
                }
                let p = self.vertices[w];
                let d = crate::geometry::dist_point_segment(p, a, b);
                if d < 1e-12 * len && p.dist(a) > 1e-12 * len && p.dist(b) > 1e-12 * len {
                    return Err(format!(
                        "vertex {w} hangs on edge {u}-{v}"
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square_two_cells() -> Mesh {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        build_mesh(&pts, &[[0, 1, 2], [0, 2, 3]], BoundarySpec::AllDirichlet).unwrap()
    }

    #[test]
    fn smallest_conforming_mesh() {
        let mesh = unit_square_two_cells();
        assert_eq!(mesh.n_vertices(), 4);
        assert_eq!(mesh.n_cells(), 2);
        assert_eq!(mesh.n_edges(), 5);
        let boundary = mesh.edges().iter().filter(|e| e.is_boundary()).count();
        assert_eq!(boundary, 4);
        assert_eq!(mesh.n_edges() - boundary, 1);
        mesh.validate_conforming().unwrap();
    }

    #[test]
    fn clockwise_input_normalized() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        // clockwise listing
        let mesh = build_mesh(&pts, &[[0, 2, 1]], BoundarySpec::AllDirichlet).unwrap();
        let [a, b, c] = mesh.cell_points(0);
        let area = signed_area(a, b, c);
        assert!(area > 0.0);
        assert!((area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_area_cell_rejected() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ];
        let err = build_mesh(&pts, &[[0, 1, 2]], BoundarySpec::AllDirichlet).unwrap_err();
        assert!(matches!(err, MeshError::ZeroAreaCell { cell: 0 }));
    }

    #[test]
    fn nonconforming_edge_rejected() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 1.0),
            Point2::new(0.5, -1.0),
            Point2::new(0.5, 2.0),
        ];
        let err = build_mesh(
            &pts,
            &[[0, 1, 2], [0, 3, 1], [0, 1, 4]],
            BoundarySpec::AllDirichlet,
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::NonConformingEdge { .. }));
    }

    #[test]
    fn locate_barycenter_returns_cell() {
        let mesh = unit_square_two_cells();
        for c in 0..mesh.n_cells() {
            assert_eq!(mesh.locate_point(mesh.barycenter(c)), Some(c));
        }
    }

    #[test]
    fn locate_shared_vertex_lowest_id() {
        let mesh = unit_square_two_cells();
        // vertex 0 belongs to both cells; the diagonal (0,2) is shared
        assert_eq!(mesh.locate_point(Point2::new(0.0, 0.0)), Some(0));
        assert_eq!(mesh.locate_point(Point2::new(0.5, 0.5)), Some(0));
        assert_eq!(mesh.locate_point(Point2::new(2.0, 2.0)), None);
    }

    #[test]
    fn ray_sector_queries() {
        // criss-cross patch: unit square with center vertex, 4 cells
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
        ];
        let mesh = build_mesh(
            &pts,
            &[[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
            BoundarySpec::AllDirichlet,
        )
        .unwrap();
        // from the center, +x points into the sector of cell 1 (vertices 1,2,4)
        assert_eq!(mesh.ray_first_cell(4, Point2::new(1.0, 0.0)), Some(1));
        // along the shared diagonal toward vertex 1: flanking cells 0 and 1, lowest wins
        assert_eq!(mesh.ray_first_cell(4, Point2::new(0.5, -0.5)), Some(0));
        // from corner 0, direction outside the domain
        assert_eq!(mesh.ray_first_cell(0, Point2::new(-1.0, -1.0)), None);
    }
}
