//! Benchmark cases: coefficients, domains, root grids, boundary data, and
//! closed-form exact solutions where available.

use crate::geometry::Point2;
use crate::mesh::{build_mesh, BoundaryKind, BoundarySpec, CircleHole, Closure, Mesh, MeshError, RedCell};
use crate::space::ProblemDefinition;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridId {
    /// Unit square, 2x2 squares split by the NE diagonal.
    Grid1,
    /// Unit square, 2x2 squares split by the NW diagonal.
    Grid2,
    /// Unit square, 2x2 squares split criss-cross into four triangles each.
    Grid3,
    /// L-shaped domain, three half-unit squares NE-split.
    Grid4,
    /// Channel with a circular hole.
    Hemker,
}

impl GridId {
    pub fn parse(s: &str) -> Option<GridId> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "grid1" => Some(GridId::Grid1),
            "2" | "grid2" => Some(GridId::Grid2),
            "3" | "grid3" => Some(GridId::Grid3),
            "4" | "grid4" => Some(GridId::Grid4),
            "hemker" => Some(GridId::Hemker),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridId::Grid1 => "1",
            GridId::Grid2 => "2",
            GridId::Grid3 => "3",
            GridId::Grid4 => "4",
            GridId::Hemker => "hemker",
        }
    }
}

/// A straight sampling segment for solution profiles.
#[derive(Clone, Copy, Debug)]
pub struct Cutline {
    pub name: &'static str,
    pub start: Point2,
    pub end: Point2,
}

/// A benchmark problem together with its default grid and the quantities
/// tracked by the report.
pub struct BenchmarkCase {
    pub name: &'static str,
    pub problem: ProblemDefinition,
    pub grid: GridId,
    pub cutlines: Vec<Cutline>,
    /// Cutline along which the layer-smearing metric is evaluated.
    pub smear_cutline: Option<Cutline>,
}

impl BenchmarkCase {
    pub fn by_name(name: &str, epsilon: Option<f64>) -> Option<BenchmarkCase> {
        match name.to_ascii_lowercase().as_str() {
            "boundary_layer" => Some(case_boundary_layer(epsilon.unwrap_or(1e-2))),
            "corner_singularity" => Some(case_corner_singularity(epsilon.unwrap_or(1e-6))),
            "multi_regime" => Some(case_multi_regime(epsilon.unwrap_or(1e-6))),
            "hemker" => Some(case_hemker(epsilon.unwrap_or(1e-4))),
            "nonlinear" => Some(case_nonlinear(epsilon.unwrap_or(1e-3))),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 5] = [
        "boundary_layer",
        "corner_singularity",
        "multi_regime",
        "hemker",
        "nonlinear",
    ];
}

/// Regular boundary layers along the outflow sides of the unit square.
pub fn case_boundary_layer(eps: f64) -> BenchmarkCase {
    let exact = move |x: f64, y: f64| {
        let e1 = (2.0 * (x - 1.0) / eps).exp();
        let e2 = (3.0 * (y - 1.0) / eps).exp();
        x * y * y - y * y * e1 - x * e2 + e1 * e2
    };
    let exact_grad = move |x: f64, y: f64| {
        let e1 = (2.0 * (x - 1.0) / eps).exp();
        let e2 = (3.0 * (y - 1.0) / eps).exp();
        let e3 = e1 * e2;
        [
            y * y - y * y * (2.0 / eps) * e1 - e2 + (2.0 / eps) * e3,
            2.0 * x * y - 2.0 * y * e1 - x * (3.0 / eps) * e2 + (3.0 / eps) * e3,
        ]
    };
    // f = -eps lap(u) + (2,3).grad(u) + u, derived in closed form
    let source = move |x: f64, y: f64| {
        let e1 = (2.0 * (x - 1.0) / eps).exp();
        let e2 = (3.0 * (y - 1.0) / eps).exp();
        let e3 = e1 * e2;
        let u = x * y * y - y * y * e1 - x * e2 + e3;
        let ux = y * y - y * y * (2.0 / eps) * e1 - e2 + (2.0 / eps) * e3;
        let uy = 2.0 * x * y - 2.0 * y * e1 - x * (3.0 / eps) * e2 + (3.0 / eps) * e3;
        let uxx = -y * y * (4.0 / (eps * eps)) * e1 + (4.0 / (eps * eps)) * e3;
        let uyy = 2.0 * x - 2.0 * e1 - x * (9.0 / (eps * eps)) * e2 + (9.0 / (eps * eps)) * e3;
        -eps * (uxx + uyy) + 2.0 * ux + 3.0 * uy + u
    };
    BenchmarkCase {
        name: "boundary_layer",
        problem: ProblemDefinition {
            epsilon: eps,
            convection: Box::new(|_, _, _| [2.0, 3.0]),
            reaction: Box::new(|_, _| 1.0),
            source: Box::new(source),
            sigma: 1.0,
            dirichlet_data: Box::new(exact),
            neumann_data: Box::new(|_, _| 0.0),
            exact: Some(Box::new(exact)),
            exact_gradient: Some(Box::new(exact_grad)),
            is_nonlinear: false,
        },
        grid: GridId::Grid1,
        cutlines: vec![],
        smear_cutline: None,
    }
}

/// Corner singularity at the re-entrant point of the L-shaped domain.
pub fn case_corner_singularity(eps: f64) -> BenchmarkCase {
    let source = |x: f64, y: f64| {
        let r = ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)).sqrt();
        100.0 * r * (r - 0.5) * (r - std::f64::consts::SQRT_2 / 2.0)
    };
    BenchmarkCase {
        name: "corner_singularity",
        problem: ProblemDefinition {
            epsilon: eps,
            convection: Box::new(|_, _, _| [3.0, 1.0]),
            reaction: Box::new(|_, _| 1.0),
            source: Box::new(source),
            sigma: 1.0,
            dirichlet_data: Box::new(|_, _| 0.0),
            neumann_data: Box::new(|_, _| 0.0),
            exact: None,
            exact_gradient: None,
            is_nonlinear: false,
        },
        grid: GridId::Grid4,
        cutlines: vec![],
        smear_cutline: None,
    }
}

const MR_R0: f64 = 17.0 / 8.0;

fn mr_radius(x: f64, y: f64) -> f64 {
    let dx = x - 1.0;
    let dy = y + 27.0 / 16.0;
    (dx * dx + dy * dy).sqrt()
}

fn mr_rd() -> f64 {
    1217.0_f64.sqrt() / 16.0 - MR_R0
}

fn mr_psi(r: f64) -> f64 {
    let rd = mr_rd();
    if (r - MR_R0).abs() <= rd {
        1.0 / r
    } else if r > MR_R0 + rd {
        (-1000.0 * (r - (MR_R0 + rd)).powi(2)).exp() / (MR_R0 + rd)
    } else {
        (-1000.0 * (r - (MR_R0 - rd)).powi(2)).exp() / (MR_R0 - rd)
    }
}

fn mr_reaction(x: f64, y: f64) -> f64 {
    let r = mr_radius(x, y);
    let rd = mr_rd();
    if (r - MR_R0).abs() <= rd {
        1.0
    } else if r > MR_R0 + rd {
        (-100.0 * (r - (MR_R0 + rd)).powi(2)).exp()
    } else {
        (-100.0 * (r - (MR_R0 - rd)).powi(2)).exp()
    }
}

/// Circular transport through bands where convection, reaction, or
/// diffusion dominate; Neumann outflow at x = 1.
pub fn case_multi_regime(eps: f64) -> BenchmarkCase {
    let convection = |x: f64, y: f64, _u: f64| {
        let r = mr_radius(x, y);
        let s = r * mr_psi(r);
        [s * (y + 27.0 / 16.0), s * (1.0 - x)]
    };
    let dirichlet = |x: f64, y: f64| {
        if (y - 1.0).abs() < 1e-12 {
            1.0
        } else if x.abs() < 1e-12 && (0.125..=0.25).contains(&y) {
            1.0
        } else {
            0.0
        }
    };
    BenchmarkCase {
        name: "multi_regime",
        problem: ProblemDefinition {
            epsilon: eps,
            convection: Box::new(convection),
            reaction: Box::new(mr_reaction),
            source: Box::new(|_, _| 0.0),
            sigma: 0.0,
            dirichlet_data: Box::new(dirichlet),
            neumann_data: Box::new(|_, _| 0.0),
            exact: None,
            exact_gradient: None,
            is_nonlinear: false,
        },
        grid: GridId::Grid1,
        cutlines: vec![
            Cutline { name: "x=0.5", start: Point2::new(0.5, 0.0), end: Point2::new(0.5, 1.0) },
            Cutline { name: "x=1", start: Point2::new(1.0, 0.0), end: Point2::new(1.0, 1.0) },
            Cutline { name: "x=y", start: Point2::new(0.0, 0.0), end: Point2::new(1.0, 1.0) },
            Cutline { name: "x=1-y", start: Point2::new(0.0, 1.0), end: Point2::new(1.0, 0.0) },
        ],
        smear_cutline: None,
    }
}

/// Flow past a unit disc held at one, entering a channel at zero.
pub fn case_hemker(eps: f64) -> BenchmarkCase {
    BenchmarkCase {
        name: "hemker",
        problem: ProblemDefinition {
            epsilon: eps,
            convection: Box::new(|_, _, _| [1.0, 0.0]),
            reaction: Box::new(|_, _| 0.0),
            source: Box::new(|_, _| 0.0),
            sigma: 0.0,
            dirichlet_data: Box::new(|x, _y| if x < -2.0 { 0.0 } else { 1.0 }),
            neumann_data: Box::new(|_, _| 0.0),
            exact: None,
            exact_gradient: None,
            is_nonlinear: false,
        },
        grid: GridId::Hemker,
        cutlines: vec![Cutline {
            name: "x=4",
            start: Point2::new(4.0, -3.0),
            end: Point2::new(4.0, 3.0),
        }],
        smear_cutline: Some(Cutline {
            name: "x=4",
            start: Point2::new(4.0, -3.0),
            end: Point2::new(4.0, 3.0),
        }),
    }
}

/// Solution-dependent convection b = (u, u) with an interior layer along
/// -4x + 4y - 1 = 0.
pub fn case_nonlinear(eps: f64) -> BenchmarkCase {
    let logistic = move |x: f64, y: f64| {
        let s = (-4.0 * x + 4.0 * y - 1.0) / (32.0 * eps);
        1.0 / (1.0 + s.exp())
    };
    let exact = move |x: f64, y: f64| 0.75 - 0.25 * logistic(x, y);
    let exact_grad = move |x: f64, y: f64| {
        let g = logistic(x, y);
        let slope = g * (1.0 - g) / (32.0 * eps);
        [-slope, slope]
    };
    // b.grad(u) = u (u_x + u_y) = 0, so f = -eps lap(u)
    let source = move |x: f64, y: f64| {
        let g = logistic(x, y);
        g * (1.0 - g) * (1.0 - 2.0 * g) / (128.0 * eps)
    };
    BenchmarkCase {
        name: "nonlinear",
        problem: ProblemDefinition {
            epsilon: eps,
            convection: Box::new(|_, _, u| [u, u]),
            reaction: Box::new(|_, _| 0.0),
            source: Box::new(source),
            sigma: 0.0,
            dirichlet_data: Box::new(exact),
            neumann_data: Box::new(|_, _| 0.0),
            exact: Some(Box::new(exact)),
            exact_gradient: Some(Box::new(exact_grad)),
            is_nonlinear: true,
        },
        grid: GridId::Grid1,
        cutlines: vec![],
        smear_cutline: None,
    }
}

/// Level-0 mesh of the requested grid.
pub fn make_root_grid(id: GridId) -> Result<Mesh, MeshError> {
    match id {
        GridId::Grid1 => unit_square_diagonal(false),
        GridId::Grid2 => unit_square_diagonal(true),
        GridId::Grid3 => unit_square_criss_cross(),
        GridId::Grid4 => l_shaped(),
        GridId::Hemker => hemker_root(),
    }
}

/// 2x2 squares, each split by a diagonal; `nw` flips from NE to NW.
fn unit_square_diagonal(nw: bool) -> Result<Mesh, MeshError> {
    let mut pts = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            pts.push(Point2::new(i as f64 * 0.5, j as f64 * 0.5));
        }
    }
    let idx = |i: usize, j: usize| j * 3 + i;
    let mut cells = Vec::new();
    for j in 0..2 {
        for i in 0..2 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if nw {
                cells.push([a, b, d]);
                cells.push([b, c, d]);
            } else {
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
    }
    build_mesh(&pts, &cells, BoundarySpec::AllDirichlet)
}

/// 2x2 squares, each split into four triangles around its center.
fn unit_square_criss_cross() -> Result<Mesh, MeshError> {
    let mut pts = Vec::new();
    for j in 0..3 {
        for i in 0..3 {
            pts.push(Point2::new(i as f64 * 0.5, j as f64 * 0.5));
        }
    }
    let idx = |i: usize, j: usize| j * 3 + i;
    let mut cells = Vec::new();
    for j in 0..2 {
        for i in 0..2 {
            let center = pts.len();
            pts.push(Point2::new(i as f64 * 0.5 + 0.25, j as f64 * 0.5 + 0.25));
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push([a, b, center]);
            cells.push([b, c, center]);
            cells.push([c, d, center]);
            cells.push([d, a, center]);
        }
    }
    build_mesh(&pts, &cells, BoundarySpec::AllDirichlet)
}

/// L-shaped domain (unit square minus its lower-right quarter), three
/// half-unit squares each NE-split.
fn l_shaped() -> Result<Mesh, MeshError> {
    let pts = [
        Point2::new(0.0, 0.0),
        Point2::new(0.5, 0.0),
        Point2::new(0.0, 0.5),
        Point2::new(0.5, 0.5),
        Point2::new(1.0, 0.5),
        Point2::new(0.0, 1.0),
        Point2::new(0.5, 1.0),
        Point2::new(1.0, 1.0),
    ];
    let cells = [
        [0, 1, 3],
        [0, 3, 2],
        [2, 3, 6],
        [2, 6, 5],
        [3, 4, 7],
        [3, 7, 6],
    ];
    build_mesh(&pts, &cells, BoundarySpec::AllDirichlet)
}

/// Coarse graded root mesh of the Hemker channel (-3,9)x(-3,3) minus the
/// unit disc: a sixteen-segment polygonal circle, two rings around it, and
/// a structured strip downstream. Dirichlet on the circle and the inflow
/// x = -3, Neumann elsewhere.
fn hemker_root() -> Result<Mesh, MeshError> {
    let n_ring = 16;
    let mut pts: Vec<Point2> = Vec::new();
    // inner ring on the circle, middle ring at radius 2, outer ring on the
    // square boundary [-3,3]^2 by radial projection
    for k in 0..n_ring {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n_ring as f64;
        pts.push(Point2::new(t.cos(), t.sin()));
    }
    for k in 0..n_ring {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n_ring as f64;
        pts.push(Point2::new(2.0 * t.cos(), 2.0 * t.sin()));
    }
    for k in 0..n_ring {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n_ring as f64;
        let (c, s) = (t.cos(), t.sin());
        let scale = 3.0 / c.abs().max(s.abs());
        pts.push(Point2::new(scale * c, scale * s));
    }
    let mut cells: Vec<[usize; 3]> = Vec::new();
    for ring in 0..2 {
        let base = ring * n_ring;
        for k in 0..n_ring {
            let a = base + k;
            let b = base + (k + 1) % n_ring;
            let c = base + n_ring + k;
            let d = base + n_ring + (k + 1) % n_ring;
            cells.push([a, b, d]);
            cells.push([a, d, c]);
        }
    }
    // downstream strip x in [3, 9]: columns at 4.5, 6, 7.5, 9 matching the
    // five outer-ring rows on x = 3
    let rows: Vec<f64> = vec![
        -3.0,
        3.0 * (-std::f64::consts::PI / 8.0).tan(),
        0.0,
        3.0 * (std::f64::consts::PI / 8.0).tan(),
        3.0,
    ];
    // outer-ring vertex ids on x = 3, bottom to top: angles -45,-22.5,0,22.5,45
    let outer = |k: i64| 2 * n_ring + ((k.rem_euclid(n_ring as i64)) as usize);
    let left_col: Vec<usize> = vec![outer(-2), outer(-1), outer(0), outer(1), outer(2)];
    let mut prev_col = left_col;
    for step in 1..=4 {
        let x = 3.0 + 1.5 * step as f64;
        let mut col = Vec::new();
        for &y in &rows {
            col.push(pts.len());
            pts.push(Point2::new(x, y));
        }
        for r in 0..4 {
            let (a, b, c, d) = (prev_col[r], col[r], col[r + 1], prev_col[r + 1]);
            cells.push([a, b, c]);
            cells.push([a, c, d]);
        }
        prev_col = col;
    }

    let spec = |mid: Point2| {
        if mid.norm() < 1.5 {
            BoundaryKind::Dirichlet // circle
        } else if mid.x < -2.999 {
            BoundaryKind::Dirichlet // inflow
        } else {
            BoundaryKind::Neumann
        }
    };
    let mesh = build_mesh(&pts, &cells, BoundarySpec::ByMidpoint(&spec))?;
    // re-assemble with the circular hole attached so refinement projects
    // midpoints of circle edges onto the circle
    let red_cells: Vec<RedCell> = (0..mesh.n_cells())
        .map(|c| RedCell { verts: mesh.cell(c), root: true, generation: 0 })
        .collect();
    let closures = vec![Closure::Intact; red_cells.len()];
    Mesh::assemble(
        mesh.vertices().to_vec(),
        red_cells,
        closures,
        Some(CircleHole::unit()),
        |_u, _v, mid| Ok(spec(mid)),
    )
}

/// Samples nodal data at `n_intervals + 1` equidistant points along the
/// cutline, skipping points outside the domain. Returns pairs of the arc
/// coordinate and the value.
pub fn cutline_sample(
    mesh: &Mesh,
    u_h: &[f64],
    line: &Cutline,
    n_intervals: usize,
) -> Vec<(f64, f64)> {
    let len = line.start.dist(line.end);
    let mut out = Vec::with_capacity(n_intervals + 1);
    for k in 0..=n_intervals {
        let t = k as f64 / n_intervals as f64;
        let p = line.start + (line.end - line.start) * t;
        if let Some(v) = crate::space::evaluate_fe(mesh, u_h, p) {
            out.push((t * len, v));
        }
    }
    out
}
