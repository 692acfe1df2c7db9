//! Whitespace-separated text mesh format.
//!
//! Node file: `id x y [tag]` per line, 0-based ids, tag `D` or `N` on
//! boundary nodes. Element file: `id v1 v2 v3`. Coordinates are printed with
//! shortest round-trip formatting, so decimal inputs survive a round trip.

use super::{build_mesh, BoundaryKind, BoundarySpec, Closure, Mesh, MeshError};
use crate::geometry::Point2;
use std::io::Write;
use std::path::Path;

pub fn write_mesh(mesh: &Mesh, node_path: &Path, ele_path: &Path) -> Result<(), MeshError> {
    let io_err = |e: std::io::Error| MeshError::Io(e.to_string());
    let mut nodes = String::new();
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        match mesh.vertex_tag(v) {
            Some(BoundaryKind::Dirichlet) => {
                nodes.push_str(&format!("{} {} {} D\n", v, p.x, p.y))
            }
            Some(BoundaryKind::Neumann) => nodes.push_str(&format!("{} {} {} N\n", v, p.x, p.y)),
            None => nodes.push_str(&format!("{} {} {}\n", v, p.x, p.y)),
        }
    }
    let mut eles = String::new();
    for c in 0..mesh.n_cells() {
        let t = mesh.cell(c);
        eles.push_str(&format!("{} {} {} {}\n", c, t[0], t[1], t[2]));
    }
    std::fs::File::create(node_path)
        .and_then(|mut f| f.write_all(nodes.as_bytes()))
        .map_err(io_err)?;
    std::fs::File::create(ele_path)
        .and_then(|mut f| f.write_all(eles.as_bytes()))
        .map_err(io_err)?;
    Ok(())
}

pub fn load_mesh(node_path: &Path, ele_path: &Path) -> Result<Mesh, MeshError> {
    let io_err = |e: std::io::Error| MeshError::Io(e.to_string());
    let nodes = std::fs::read_to_string(node_path).map_err(io_err)?;
    let eles = std::fs::read_to_string(ele_path).map_err(io_err)?;
    parse_mesh(&nodes, &eles)
}

pub fn parse_mesh(nodes: &str, eles: &str) -> Result<Mesh, MeshError> {
    let bad = |msg: &str| MeshError::Io(msg.to_string());
    let mut points: Vec<(usize, Point2, Option<BoundaryKind>)> = Vec::new();
    for line in nodes.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let id: usize = it
            .next()
            .ok_or_else(|| bad("missing node id"))?
            .parse()
            .map_err(|_| bad("bad node id"))?;
        let x: f64 = it
            .next()
            .ok_or_else(|| bad("missing x"))?
            .parse()
            .map_err(|_| bad("bad x coordinate"))?;
        let y: f64 = it
            .next()
            .ok_or_else(|| bad("missing y"))?
            .parse()
            .map_err(|_| bad("bad y coordinate"))?;
        let tag = match it.next() {
            None => None,
            Some("D") => Some(BoundaryKind::Dirichlet),
            Some("N") => Some(BoundaryKind::Neumann),
            Some(other) => return Err(bad(&format!("unknown boundary tag {other:?}"))),
        };
        points.push((id, Point2::new(x, y), tag));
    }
    points.sort_by_key(|&(id, _, _)| id);
    for (k, &(id, _, _)) in points.iter().enumerate() {
        if id != k {
            return Err(bad("node ids must be 0-based and contiguous"));
        }
    }
    let coords: Vec<Point2> = points.iter().map(|&(_, p, _)| p).collect();
    let tags: Vec<Option<BoundaryKind>> = points.iter().map(|&(_, _, t)| t).collect();

    let mut tris: Vec<(usize, [usize; 3])> = Vec::new();
    for line in eles.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad element index")))
            .collect::<Result<_, _>>()?;
        if vals.len() != 4 {
            return Err(bad("element lines must be `id v1 v2 v3`"));
        }
        tris.push((vals[0], [vals[1], vals[2], vals[3]]));
    }
    tris.sort_by_key(|&(id, _)| id);
    let cells: Vec<[usize; 3]> = tris.into_iter().map(|(_, t)| t).collect();
    build_mesh_with_node_tags(&coords, &cells, &tags)
}

/// An edge is Dirichlet when both endpoint nodes carry `D`, Neumann when
/// either carries `N`; an untagged boundary node is an error.
fn build_mesh_with_node_tags(
    coords: &[Point2],
    cells: &[[usize; 3]],
    tags: &[Option<BoundaryKind>],
) -> Result<Mesh, MeshError> {
    // build once with a permissive tag to discover boundary edges, then
    // re-tag from node data
    let probe = build_mesh(coords, cells, BoundarySpec::AllDirichlet)?;
    let mut edge_kind: std::collections::BTreeMap<[usize; 2], BoundaryKind> =
        std::collections::BTreeMap::new();
    for e in probe.edges() {
        if e.is_boundary() {
            let [u, v] = e.vertices;
            let kind = match (tags[u], tags[v]) {
                (Some(BoundaryKind::Dirichlet), Some(BoundaryKind::Dirichlet)) => {
                    BoundaryKind::Dirichlet
                }
                (Some(_), Some(_)) => BoundaryKind::Neumann,
                _ => return Err(MeshError::UntaggedBoundaryEdge { vertices: [u, v] }),
            };
            edge_kind.insert([u, v], kind);
        }
    }
    // rebuild with the resolved per-edge tags
    let mut red_cells = Vec::with_capacity(cells.len());
    for tri in cells.iter() {
        let mut tri = *tri;
        let area = crate::geometry::signed_area(coords[tri[0]], coords[tri[1]], coords[tri[2]]);
        if area < 0.0 {
            tri.swap(1, 2);
        }
        red_cells.push(super::RedCell { verts: tri, root: true, generation: 0 });
    }
    let closures = vec![Closure::Intact; red_cells.len()];
    Mesh::assemble(coords.to_vec(), red_cells, closures, None, |u, v, _mid| {
        edge_kind
            .get(&[u.min(v), u.max(v)])
            .copied()
            .ok_or(MeshError::UntaggedBoundaryEdge { vertices: [u, v] })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_counts_and_coordinates() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.25, 1.0 / 3.0),
        ];
        let mesh = build_mesh(
            &pts,
            &[[0, 1, 3], [1, 2, 3], [2, 0, 3]],
            BoundarySpec::AllDirichlet,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("afcfem_mesh_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let node = dir.join("t.node");
        let ele = dir.join("t.ele");
        write_mesh(&mesh, &node, &ele).unwrap();
        let back = load_mesh(&node, &ele).unwrap();
        assert_eq!(back.n_vertices(), mesh.n_vertices());
        assert_eq!(back.n_cells(), mesh.n_cells());
        for v in 0..mesh.n_vertices() {
            assert_eq!(back.vertex(v).x, mesh.vertex(v).x);
            assert_eq!(back.vertex(v).y, mesh.vertex(v).y);
        }
    }

    #[test]
    fn mixed_tags_resolve_to_neumann_edges() {
        let nodes = "0 0 0 D\n1 1 0 N\n2 1 1 N\n3 0 1 D\n";
        let eles = "0 0 1 2\n1 0 2 3\n";
        let mesh = parse_mesh(nodes, eles).unwrap();
        let mut d = 0;
        let mut n = 0;
        for e in mesh.edges().iter().filter(|e| e.is_boundary()) {
            match e.tag.unwrap() {
                BoundaryKind::Dirichlet => d += 1,
                BoundaryKind::Neumann => n += 1,
            }
        }
        // only edge 0-3 has two D endpoints
        assert_eq!(d, 1);
        assert_eq!(n, 3);
    }
}
