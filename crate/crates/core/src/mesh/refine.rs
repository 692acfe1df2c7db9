//! Red-green-blue refinement.
//!
//! Protocol per pass: (1) marks on closure cells promote to their red
//! parent, (2) all closure cells are removed so only regularly refined cells
//! remain, (3) marked cells are red-refined (four similar children via edge
//! midpoints), and the mesh is closed again so no hanging node survives.
//!
//! Closure patterns: a hanging node on a cell's longest edge is resolved by
//! a green bisection; a hanging node on a shorter edge is resolved by a blue
//! pattern (bisect the longest edge, then connect the hanging midpoint),
//! provided both cuts are longest-edge bisections of the triangle they
//! split; everything else promotes the cell to red refinement. Every cut is
//! a longest-edge bisection and closure cells are unwound before further
//! refinement, so the minimum angle of any mesh in the family stays at or
//! above half the root minimum angle.

use super::{CircleHole, Closure, Mesh, MeshError, RedCell};
use crate::geometry::Point2;
use std::collections::BTreeMap;

/// Where a vertex of a refined mesh comes from.
#[derive(Clone, Copy, Debug)]
pub enum VertexSrc {
    Inherited(usize),
    EdgeMidpoint(usize, usize),
}

/// Maps vertices of a refined mesh back to the parent mesh.
pub struct RefinementMap {
    pub vertex_src: Vec<VertexSrc>,
}

impl RefinementMap {
    /// Exact P1 transfer of nodal data onto the refined mesh. Midpoint
    /// parents index the refined mesh (cascading closure can split an edge
    /// whose endpoint is itself new), so values resolve in one forward pass.
    pub fn transfer(&self, coarse: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.vertex_src.len());
        for src in &self.vertex_src {
            let v = match *src {
                VertexSrc::Inherited(i) => coarse[i],
                VertexSrc::EdgeMidpoint(a, b) => 0.5 * (out[a] + out[b]),
            };
            out.push(v);
        }
        out
    }
}

/// Radial projection of `p` onto the circle.
pub fn project_to_circle(hole: &CircleHole, p: Point2) -> Result<Point2, MeshError> {
    let d = p - hole.center;
    let n = d.norm();
    if n <= 1e-14 * hole.radius {
        return Err(MeshError::DegenerateProjection { vertex: usize::MAX });
    }
    Ok(hole.center + d * (hole.radius / n))
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

/// Longest edge of a triangle, ties broken toward the smaller vertex pair.
fn longest_edge(vertices: &[Point2], v: [usize; 3]) -> [usize; 2] {
    let mut best = sorted(v[0], v[1]);
    let mut best_len = vertices[v[0]].dist(vertices[v[1]]);
    for k in 1..3 {
        let e = sorted(v[k], v[(k + 1) % 3]);
        let len = vertices[e[0]].dist(vertices[e[1]]);
        if len > best_len || (len == best_len && e < best) {
            best = e;
            best_len = len;
        }
    }
    best
}

/// The hanging edge must also be a longest edge of the bisection child that
/// contains it, so that the second blue cut is a longest-edge bisection.
fn blue_qualifies(vertices: &[Point2], longest: [usize; 2], hanging: [usize; 2]) -> bool {
    // edges of a triangle share exactly one vertex
    let s = if hanging.contains(&longest[0]) { longest[0] } else { longest[1] };
    let t = if hanging[0] == s { hanging[1] } else { hanging[0] };
    if !hanging.contains(&s) {
        return false;
    }
    let m = vertices[longest[0]].midpoint(vertices[longest[1]]);
    let hang_len = vertices[s].dist(vertices[t]);
    let half_len = vertices[s].dist(m);
    let median_len = vertices[t].dist(m);
    hang_len >= half_len && hang_len >= median_len
}

impl Mesh {
    /// Refines all marked cells, then restores conformity.
    ///
    /// The closure runs over a worklist of leaf cells that includes children
    /// created within the pass, so promotion cascades resolve in one call.
    pub fn refine_red_green(&self, marked: &[bool]) -> Result<(Mesh, RefinementMap), MeshError> {
        assert_eq!(marked.len(), self.n_cells());
        let n_red = self.red_cells.len();

        let mut vertices = self.vertices().to_vec();
        let mut vertex_src: Vec<VertexSrc> =
            (0..vertices.len()).map(VertexSrc::Inherited).collect();
        // midpoints of split edges, seeded with the hanging vertices of the
        // unwound closure cells
        let mut mids: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for cl in self.closures.iter() {
            match *cl {
                Closure::Intact => {}
                Closure::Green { edge, mid } => {
                    mids.insert(edge, mid);
                }
                Closure::Blue { long_edge, long_mid, hang_edge, hang_mid } => {
                    mids.insert(long_edge, long_mid);
                    mids.insert(hang_edge, hang_mid);
                }
            }
        }

        let mut leaves: Vec<RedCell> = self.red_cells.clone();
        let mut alive = vec![true; leaves.len()];

        // step 1: marks on closure cells promote to their red parent
        let mut to_refine: Vec<usize> = Vec::new();
        {
            let mut flagged = vec![false; n_red];
            for (c, &m) in marked.iter().enumerate() {
                if m && !flagged[self.cell_red[c]] {
                    flagged[self.cell_red[c]] = true;
                    to_refine.push(self.cell_red[c]);
                }
            }
            to_refine.sort_unstable();
        }

        let hole = self.circle_hole();
        let get_mid = |a: usize,
                       b: usize,
                       vertices: &mut Vec<Point2>,
                       vertex_src: &mut Vec<VertexSrc>,
                       mids: &mut BTreeMap<[usize; 2], usize>|
         -> Result<usize, MeshError> {
            let key = sorted(a, b);
            if let Some(&m) = mids.get(&key) {
                return Ok(m);
            }
            let mut p = vertices[a].midpoint(vertices[b]);
            if let Some(hole) = &hole {
                if hole.on_circle(vertices[a]) && hole.on_circle(vertices[b]) {
                    // chords of the hole are boundary edges in any valid
                    // mesh; keep the old-mesh check where it is available
                    let boundary = match self.find_edge(a, b) {
                        Some(e) => self.edge(e).is_boundary(),
                        None => true,
                    };
                    if boundary {
                        p = project_to_circle(hole, p)?;
                    }
                }
            }
            vertices.push(p);
            vertex_src.push(VertexSrc::EdgeMidpoint(a, b));
            let id = vertices.len() - 1;
            mids.insert(key, id);
            Ok(id)
        };

        // red-refines leaf `idx`, appending four children to the worklist
        macro_rules! red_refine {
            ($idx:expr) => {{
                let idx = $idx;
                let rc = leaves[idx].clone();
                alive[idx] = false;
                let [a, b, c] = rc.verts;
                let mab = get_mid(a, b, &mut vertices, &mut vertex_src, &mut mids)?;
                let mbc = get_mid(b, c, &mut vertices, &mut vertex_src, &mut mids)?;
                let mca = get_mid(c, a, &mut vertices, &mut vertex_src, &mut mids)?;
                let gen = rc.generation + 1;
                for child in [[a, mab, mca], [mab, b, mbc], [mca, mbc, c], [mab, mbc, mca]] {
                    leaves.push(RedCell { verts: child, root: false, generation: gen });
                    alive.push(true);
                }
            }};
        }

        for idx in to_refine {
            red_refine!(idx);
        }

        // closure fixpoint over the growing worklist; a leaf either stays, is
        // promoted to red, or requests the midpoint of its longest edge so a
        // blue pattern can close it
        loop {
            let mut changed = false;
            let upto = leaves.len();
            for idx in 0..upto {
                if !alive[idx] {
                    continue;
                }
                let v = leaves[idx].verts;
                let long = longest_edge(&vertices, v);
                let mut split: Vec<[usize; 2]> = Vec::new();
                for k in 0..3 {
                    let e = sorted(v[k], v[(k + 1) % 3]);
                    if mids.contains_key(&e) {
                        split.push(e);
                    }
                }
                let halves_intact = |e: [usize; 2], mids: &BTreeMap<[usize; 2], usize>| {
                    let m = mids[&e];
                    !mids.contains_key(&sorted(e[0], m)) && !mids.contains_key(&sorted(m, e[1]))
                };
                enum Action {
                    Keep,
                    Red,
                    NeedLongestSplit,
                }
                let action = match split.len() {
                    0 => Action::Keep,
                    1 => {
                        let e = split[0];
                        if e == long {
                            if halves_intact(e, &mids) { Action::Keep } else { Action::Red }
                        } else if blue_qualifies(&vertices, long, e) {
                            Action::NeedLongestSplit
                        } else {
                            Action::Red
                        }
                    }
                    2 => {
                        let other = if split[0] == long { split[1] } else { split[0] };
                        if split.contains(&long)
                            && blue_qualifies(&vertices, long, other)
                            && halves_intact(long, &mids)
                            && halves_intact(other, &mids)
                        {
                            Action::Keep
                        } else {
                            Action::Red
                        }
                    }
                    _ => Action::Red,
                };
                match action {
                    Action::Keep => {}
                    Action::Red => {
                        red_refine!(idx);
                        changed = true;
                    }
                    Action::NeedLongestSplit => {
                        get_mid(long[0], long[1], &mut vertices, &mut vertex_src, &mut mids)?;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        // view: surviving leaves with their closure pattern
        let mut new_reds: Vec<RedCell> = Vec::new();
        let mut new_closures: Vec<Closure> = Vec::new();
        for (idx, rc) in leaves.iter().enumerate() {
            if !alive[idx] {
                continue;
            }
            let v = rc.verts;
            let long = longest_edge(&vertices, v);
            let mut split: Vec<([usize; 2], usize)> = Vec::new();
            for k in 0..3 {
                let e = sorted(v[k], v[(k + 1) % 3]);
                if let Some(&m) = mids.get(&e) {
                    split.push((e, m));
                }
            }
            let closure = match split.len() {
                0 => Closure::Intact,
                1 => {
                    debug_assert_eq!(split[0].0, long);
                    Closure::Green { edge: split[0].0, mid: split[0].1 }
                }
                2 => {
                    let (l, h) = if split[0].0 == long {
                        (split[0], split[1])
                    } else {
                        (split[1], split[0])
                    };
                    debug_assert_eq!(l.0, long);
                    Closure::Blue {
                        long_edge: l.0,
                        long_mid: l.1,
                        hang_edge: h.0,
                        hang_mid: h.1,
                    }
                }
                n => unreachable!("closure left {n} hanging edges"),
            };
            new_reds.push(rc.clone());
            new_closures.push(closure);
        }

        let curved = self.circle_hole();
        let mesh = Mesh::assemble(vertices, new_reds, new_closures, curved, |u, v, _mid| {
            self.ancestor_boundary_tag(u, v, &vertex_src)
                .ok_or(MeshError::UntaggedBoundaryEdge { vertices: [u, v] })
        })?;
        Ok((mesh, RefinementMap { vertex_src }))
    }

    /// Uniform red refinement (every cell marked).
    pub fn refine_uniform(&self) -> Result<(Mesh, RefinementMap), MeshError> {
        self.refine_red_green(&vec![true; self.n_cells()])
    }

    /// Boundary tag of a refined edge, by walking up to the coarse edge it
    /// descends from. An edge (u, v) with v the midpoint of (x, y) and u an
    /// endpoint of (x, y) is half of that edge; the walk recurses because
    /// closure within one pass can split halves again.
    fn ancestor_boundary_tag(
        &self,
        u: usize,
        v: usize,
        vertex_src: &[VertexSrc],
    ) -> Option<super::BoundaryKind> {
        let (mut u, mut v) = (u, v);
        loop {
            if let (VertexSrc::Inherited(a), VertexSrc::Inherited(b)) =
                (vertex_src[u], vertex_src[v])
            {
                return self.find_edge(a, b).and_then(|e| self.edge(e).tag);
            }
            if let VertexSrc::EdgeMidpoint(x, y) = vertex_src[v] {
                if u == x || u == y {
                    (u, v) = (x, y);
                    continue;
                }
            }
            if let VertexSrc::EdgeMidpoint(x, y) = vertex_src[u] {
                if v == x || v == y {
                    (u, v) = (x, y);
                    continue;
                }
            }
            return None;
        }
    }

    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        let key = sorted(u, v);
        // edges incident to u are reachable through its cells
        for &c in self.vertex_cells(u) {
            for e in self.cell_edges(c) {
                if self.edge(e).vertices == key {
                    return Some(e);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, BoundarySpec, CellOrigin};

    fn two_cell_square() -> Mesh {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        build_mesh(&pts, &[[0, 1, 2], [0, 2, 3]], BoundarySpec::AllDirichlet).unwrap()
    }

    #[test]
    fn uniform_marking_needs_no_closure() {
        let mesh = two_cell_square();
        let (fine, _) = mesh.refine_uniform().unwrap();
        assert_eq!(fine.n_cells(), 8);
        assert!((0..fine.n_cells()).all(|c| fine.origin(c) == CellOrigin::RedChild));
        fine.validate_conforming().unwrap();
        assert!((fine.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_mark_closes_with_greens() {
        let mesh = two_cell_square();
        let (fine, _) = mesh.refine_red_green(&[true, false]).unwrap();
        // 4 red children + green bisection of the neighbor across the
        // diagonal, which is the neighbor's longest edge
        assert_eq!(fine.n_cells(), 6);
        let reds = (0..6).filter(|&c| fine.origin(c) == CellOrigin::RedChild).count();
        let greens = (0..6).filter(|&c| fine.origin(c) == CellOrigin::GreenChild).count();
        assert_eq!(reds, 4);
        assert_eq!(greens, 2);
        fine.validate_conforming().unwrap();
        assert!((fine.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marked_green_promotes_its_parent() {
        let mesh = two_cell_square();
        let (fine, _) = mesh.refine_red_green(&[true, false]).unwrap();
        let green = (0..fine.n_cells())
            .find(|&c| fine.origin(c) == CellOrigin::GreenChild)
            .unwrap();
        let mut marks = vec![false; fine.n_cells()];
        marks[green] = true;
        let (finer, _) = fine.refine_red_green(&marks).unwrap();
        finer.validate_conforming().unwrap();
        // the green pair is gone and its red parent was refined: the parent
        // triangle (0,2,3) must not reappear
        for c in 0..finer.n_cells() {
            let mut verts = finer.cell(c).to_vec();
            verts.sort_unstable();
            assert_ne!(verts, vec![0, 2, 3]);
        }
        assert!((finer.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blue_pattern_on_leg_hanging_node() {
        // a 2x2 NE grid; refine one cell so that a neighbor hangs on a leg
        let mesh = crate::testgrids::ne_grid(2);
        let mut marks = vec![false; mesh.n_cells()];
        marks[0] = true; // lower-left square, lower triangle
        let (fine, _) = mesh.refine_red_green(&marks).unwrap();
        fine.validate_conforming().unwrap();
        assert!((fine.total_area() - 1.0).abs() < 1e-12);
        // all cells keep the right-isoceles angles: blue children of these
        // grids are similar to their parents
        for c in 0..fine.n_cells() {
            let [a, b, p] = fine.cell_points(c);
            let mut angs = crate::geometry::triangle_angles(a, b, p).to_vec();
            angs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert!((angs[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_preserves_similarity_classes() {
        let mesh = two_cell_square();
        let (fine, _) = mesh.refine_uniform().unwrap();
        let (finer, _) = fine.refine_uniform().unwrap();
        for c in 0..finer.n_cells() {
            let [a, b, p] = finer.cell_points(c);
            let mut angs = crate::geometry::triangle_angles(a, b, p).to_vec();
            angs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert!((angs[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
            assert!((angs[2] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_examples() {
        let hole = CircleHole::unit();
        let chord_mid = Point2::new(0.5, 0.5);
        let p = project_to_circle(&hole, chord_mid).unwrap();
        let s = std::f64::consts::SQRT_2 / 2.0;
        assert!((p.x - s).abs() < 1e-15 && (p.y - s).abs() < 1e-15);
        assert!(project_to_circle(&hole, Point2::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn transfer_is_exact_p1_interpolation() {
        let mesh = two_cell_square();
        let (fine, map) = mesh.refine_red_green(&[true, false]).unwrap();
        let affine = |p: Point2| 2.0 * p.x + 3.0 * p.y - 1.0;
        let coarse: Vec<f64> = (0..mesh.n_vertices()).map(|v| affine(mesh.vertex(v))).collect();
        let fine_vals = map.transfer(&coarse);
        for v in 0..fine.n_vertices() {
            assert!((fine_vals[v] - affine(fine.vertex(v))).abs() < 1e-14);
        }
    }

    #[test]
    fn randomized_marking_keeps_meshes_conforming() {
        // mixed marking over several rounds on the criss-cross grid
        let mut mesh = crate::problems::make_root_grid(crate::problems::GridId::Grid3).unwrap();
        let mut state = 0x9e3779b97f4a7c15_u64;
        let root_min = mesh.min_angle();
        for _ in 0..6 {
            let mut marks = vec![false; mesh.n_cells()];
            for m in marks.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *m = (state >> 33) % 5 == 0;
            }
            let (next, _) = mesh.refine_red_green(&marks).unwrap();
            next.validate_conforming().unwrap();
            assert!(next.min_angle() >= root_min / 2.0 - 1e-12);
            assert!((next.total_area() - mesh.total_area()).abs() < 1e-10);
            mesh = next;
        }
    }
}
