//! P1 finite-element space: degree-of-freedom bookkeeping, Galerkin assembly,
//! Dirichlet imposition, and point evaluation of discrete functions.

pub mod pattern;
pub mod quadrature;

pub use pattern::{SparseMatrix, SparsityPattern};

use crate::geometry::Point2;
use crate::mesh::{BoundaryKind, Mesh};
use quadrature::{EDGE_GAUSS2, TRI_MIDPOINT};
use std::sync::Arc;

pub type ScalarFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorFn = Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
/// Convection field `b(x, y, u)`; the `u` argument is only consulted by
/// nonlinear problems.
pub type ConvectionFn = Box<dyn Fn(f64, f64, f64) -> [f64; 2] + Send + Sync>;

/// Coefficients, boundary data, and (optionally) the exact solution of a
/// steady convection-diffusion-reaction problem
/// `-eps lap(u) + b.grad(u) + c u = f`.
pub struct ProblemDefinition {
    pub epsilon: f64,
    pub convection: ConvectionFn,
    pub reaction: ScalarFn,
    pub source: ScalarFn,
    /// Lower bound sigma of `c - div(b)/2`, supplied explicitly; zero is
    /// allowed and switches the estimator to its diffusion-scaled weights.
    pub sigma: f64,
    pub dirichlet_data: ScalarFn,
    pub neumann_data: ScalarFn,
    pub exact: Option<ScalarFn>,
    pub exact_gradient: Option<VectorFn>,
    pub is_nonlinear: bool,
}

impl ProblemDefinition {
    pub fn constant_coefficients(epsilon: f64, b: [f64; 2], c: f64, sigma: f64) -> Self {
        ProblemDefinition {
            epsilon,
            convection: Box::new(move |_, _, _| b),
            reaction: Box::new(move |_, _| c),
            source: Box::new(|_, _| 0.0),
            sigma,
            dirichlet_data: Box::new(|_, _| 0.0),
            neumann_data: Box::new(|_, _| 0.0),
            exact: None,
            exact_gradient: None,
            is_nonlinear: false,
        }
    }
}

/// P1 degree-of-freedom map: dofs are mesh vertices; a node is Dirichlet iff
/// it lies on a Dirichlet-tagged boundary edge (corners where Dirichlet meets
/// Neumann count as Dirichlet).
#[derive(Clone, Debug)]
pub struct DofMap {
    dirichlet: Vec<bool>,
    free_count: usize,
}

impl DofMap {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let mut dirichlet = vec![false; mesh.n_vertices()];
        for e in mesh.edges() {
            if e.tag == Some(BoundaryKind::Dirichlet) {
                for &v in &e.vertices {
                    dirichlet[v] = true;
                }
            }
        }
        let free_count = dirichlet.iter().filter(|&&d| !d).count();
        DofMap { dirichlet, free_count }
    }

    pub fn n(&self) -> usize {
        self.dirichlet.len()
    }

    /// Number of non-Dirichlet degrees of freedom.
    pub fn n_free(&self) -> usize {
        self.free_count
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.dirichlet[v]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Dof map from an explicit mask (custom spaces and tests).
    pub fn from_mask(dirichlet: Vec<bool>) -> Self {
        let free_count = dirichlet.iter().filter(|&&d| !d).count();
        DofMap { dirichlet, free_count }
    }

    pub fn free_mask(&self) -> Vec<bool> {
        self.dirichlet.iter().map(|&d| !d).collect()
    }
}

/// Nodal values of the Dirichlet datum (zero at free nodes).
pub fn dirichlet_values(mesh: &Mesh, dofs: &DofMap, problem: &ProblemDefinition) -> Vec<f64> {
    (0..mesh.n_vertices())
        .map(|v| {
            if dofs.is_dirichlet(v) {
                let p = mesh.vertex(v);
                (problem.dirichlet_data)(p.x, p.y)
            } else {
                0.0
            }
        })
        .collect()
}

/// Galerkin stiffness matrix and load vector, with Neumann data incorporated
/// and Dirichlet rows left untouched (limiters run before Dirichlet
/// imposition).
///
/// `u_prev` must be supplied iff the problem is nonlinear; the convection
/// field is then evaluated at the previous iterate.
pub fn assemble_galerkin(
    mesh: &Mesh,
    dofs: &DofMap,
    problem: &ProblemDefinition,
    u_prev: Option<&[f64]>,
) -> (SparseMatrix, Vec<f64>) {
    assert_eq!(
        problem.is_nonlinear,
        u_prev.is_some(),
        "previous iterate is required exactly for nonlinear problems"
    );
    let _ = dofs;
    let pattern = SparsityPattern::from_mesh(mesh);
    assemble_galerkin_on(pattern, mesh, problem, u_prev)
}

/// Assembly onto an existing pattern (reused across nonlinear iterations).
pub fn assemble_galerkin_on(
    pattern: Arc<SparsityPattern>,
    mesh: &Mesh,
    problem: &ProblemDefinition,
    u_prev: Option<&[f64]>,
) -> (SparseMatrix, Vec<f64>) {
    let mut a = SparseMatrix::zeros(pattern);
    let mut rhs = vec![0.0; mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let tri = mesh.cell(c);
        let pts = mesh.cell_points(c);
        let geo = mesh.cell_geometry(c);
        let grads = geo.gradient_basis;
        let area = geo.area;

        let mut local = [[0.0_f64; 3]; 3];
        let mut load = [0.0_f64; 3];
        // diffusion: gradients are constant, the term is exact
        for i in 0..3 {
            for j in 0..3 {
                local[i][j] += problem.epsilon * area * grads[j].dot(grads[i]);
            }
        }
        // convection, reaction, load by the midpoint rule
        for (lambda, w) in TRI_MIDPOINT {
            let x = lambda[0] * pts[0].x + lambda[1] * pts[1].x + lambda[2] * pts[2].x;
            let y = lambda[0] * pts[0].y + lambda[1] * pts[1].y + lambda[2] * pts[2].y;
            let uq = match u_prev {
                Some(u) => lambda[0] * u[tri[0]] + lambda[1] * u[tri[1]] + lambda[2] * u[tri[2]],
                None => 0.0,
            };
            let b = (problem.convection)(x, y, uq);
            let cc = (problem.reaction)(x, y);
            let f = (problem.source)(x, y);
            let wq = w * area;
            for i in 0..3 {
                let phi_i = lambda[i];
                for j in 0..3 {
                    let conv = (b[0] * grads[j].x + b[1] * grads[j].y) * phi_i;
                    let mass = cc * lambda[j] * phi_i;
                    local[i][j] += wq * (conv + mass);
                }
                load[i] += wq * f * phi_i;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                a.add(tri[i], tri[j], local[i][j]);
            }
            rhs[tri[i]] += load[i];
        }
    }
    // Neumann boundary contribution
    for e in mesh.edges() {
        if e.tag == Some(BoundaryKind::Neumann) {
            let [u, v] = e.vertices;
            let (pu, pv) = (mesh.vertex(u), mesh.vertex(v));
            let len = pu.dist(pv);
            for (t, w) in EDGE_GAUSS2 {
                let x = pu.x + t * (pv.x - pu.x);
                let y = pu.y + t * (pv.y - pu.y);
                let g = (problem.neumann_data)(x, y);
                rhs[u] += w * len * g * (1.0 - t);
                rhs[v] += w * len * g * t;
            }
        }
    }
    (a, rhs)
}

/// Replaces each Dirichlet row by the identity row and sets the right-hand
/// side to the boundary value; columns are left untouched.
pub fn apply_dirichlet(
    matrix: &mut SparseMatrix,
    rhs: &mut [f64],
    dofs: &DofMap,
    values: &[f64],
) {
    for i in 0..dofs.n() {
        if dofs.is_dirichlet(i) {
            matrix.set_identity_row(i);
            rhs[i] = values[i];
        }
    }
}

/// Barycentric interpolation of nodal data at `p`; `None` outside the domain.
pub fn evaluate_fe(mesh: &Mesh, nodal: &[f64], p: Point2) -> Option<f64> {
    let c = mesh.locate_point(p)?;
    let tri = mesh.cell(c);
    let [a, b, q] = mesh.cell_points(c);
    let l = crate::geometry::barycentric(a, b, q, p);
    Some(l[0] * nodal[tri[0]] + l[1] * nodal[tri[1]] + l[2] * nodal[tri[2]])
}

/// Per-cell constant gradient of a P1 function.
pub fn cell_gradient(mesh: &Mesh, nodal: &[f64], c: usize) -> Point2 {
    let tri = mesh.cell(c);
    let grads = mesh.cell_geometry(c).gradient_basis;
    let mut g = Point2::new(0.0, 0.0);
    for k in 0..3 {
        g = g + grads[k] * nodal[tri[k]];
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    
    use crate::testgrids::ne_grid;

    #[test]
    fn laplacian_five_point_stencil() {
        let mesh = ne_grid(4);
        let dofs = DofMap::from_mesh(&mesh);
        let problem = ProblemDefinition::constant_coefficients(1.0, [0.0, 0.0], 0.0, 0.0);
        let (a, _) = assemble_galerkin(&mesh, &dofs, &problem, None);
        // interior node at (0.5, 0.5)
        let center = (0..mesh.n_vertices())
            .find(|&v| {
                let p = mesh.vertex(v);
                (p.x - 0.5).abs() < 1e-14 && (p.y - 0.5).abs() < 1e-14
            })
            .unwrap();
        assert!((a.get(center, center) - 4.0).abs() < 1e-12);
        let p = mesh.vertex(center);
        for v in 0..mesh.n_vertices() {
            if v == center {
                continue;
            }
            let q = mesh.vertex(v);
            let (dx, dy) = ((q.x - p.x) * 4.0, (q.y - p.y) * 4.0);
            if (dx.abs() - 1.0).abs() < 1e-12 && dy.abs() < 1e-12
                || (dy.abs() - 1.0).abs() < 1e-12 && dx.abs() < 1e-12
            {
                assert!((a.get(center, v) + 1.0).abs() < 1e-12, "axis neighbor");
            } else if (dx - 1.0).abs() < 1e-12 && (dy - 1.0).abs() < 1e-12
                || (dx + 1.0).abs() < 1e-12 && (dy + 1.0).abs() < 1e-12
            {
                assert!(a.get(center, v).abs() < 1e-12, "diagonal neighbor");
            }
        }
    }

    #[test]
    fn mass_row_sum_is_basis_integral() {
        let mesh = crate::mesh::io::parse_mesh(
            "0 0 0 D\n1 1 0 D\n2 1 1 D\n3 0 1 D\n",
            "0 0 1 2\n1 0 2 3\n",
        )
        .unwrap();
        let dofs = DofMap::from_mesh(&mesh);
        let problem = ProblemDefinition::constant_coefficients(0.0, [0.0, 0.0], 1.0, 0.0);
        let (a, _) = assemble_galerkin(&mesh, &dofs, &problem, None);
        for i in 0..mesh.n_vertices() {
            let row_sum: f64 = a.row(i).1.iter().sum();
            let support: f64 = mesh
                .vertex_cells(i)
                .iter()
                .map(|&c| mesh.cell_geometry(c).area)
                .sum();
            assert!((row_sum - support / 3.0).abs() < 1e-14);
            assert!(row_sum > 0.0);
        }
    }

    #[test]
    fn zero_data_gives_zero_interior_load() {
        let mesh = ne_grid(3);
        let dofs = DofMap::from_mesh(&mesh);
        let problem = ProblemDefinition::constant_coefficients(1.0, [1.0, 2.0], 1.0, 0.0);
        let (_, rhs) = assemble_galerkin(&mesh, &dofs, &problem, None);
        for v in 0..mesh.n_vertices() {
            if !dofs.is_dirichlet(v) {
                assert_eq!(rhs[v], 0.0);
            }
        }
    }

    #[test]
    fn dirichlet_rows_become_identity() {
        let mesh = ne_grid(2);
        let dofs = DofMap::from_mesh(&mesh);
        let problem = ProblemDefinition::constant_coefficients(1.0, [0.0, 0.0], 0.0, 0.0);
        let (mut a, mut rhs) = assemble_galerkin(&mesh, &dofs, &problem, None);
        let vals: Vec<f64> = (0..mesh.n_vertices()).map(|v| v as f64).collect();
        apply_dirichlet(&mut a, &mut rhs, &dofs, &vals);
        let mut identity_rows = 0;
        for i in 0..mesh.n_vertices() {
            if dofs.is_dirichlet(i) {
                identity_rows += 1;
                let (cols, v) = a.row(i);
                for (c, x) in cols.iter().zip(v) {
                    assert_eq!(*x, if *c == i { 1.0 } else { 0.0 });
                }
                assert_eq!(rhs[i], i as f64);
            }
        }
        assert_eq!(identity_rows, 8); // all but the center of the 3x3 grid
    }

    #[test]
    fn evaluate_reproduces_affines() {
        let mesh = ne_grid(3);
        let f = |p: Point2| 2.0 * p.x + 3.0 * p.y - 1.0;
        let nodal: Vec<f64> = (0..mesh.n_vertices()).map(|v| f(mesh.vertex(v))).collect();
        // vertex, edge midpoint, interior point
        assert!((evaluate_fe(&mesh, &nodal, mesh.vertex(5)).unwrap() - nodal[5]).abs() < 1e-14);
        let e = &mesh.edges()[0];
        let m = mesh.vertex(e.vertices[0]).midpoint(mesh.vertex(e.vertices[1]));
        let expect = 0.5 * (nodal[e.vertices[0]] + nodal[e.vertices[1]]);
        assert!((evaluate_fe(&mesh, &nodal, m).unwrap() - expect).abs() < 1e-14);
        let p = Point2::new(0.37, 0.61);
        assert!((evaluate_fe(&mesh, &nodal, p).unwrap() - f(p)).abs() < 1e-12);
    }

    #[test]
    fn free_dof_count_matches_mask() {
        let mesh = ne_grid(3);
        let dofs = DofMap::from_mesh(&mesh);
        assert_eq!(dofs.n(), 16);
        assert_eq!(dofs.n_free(), 4);
    }
}
