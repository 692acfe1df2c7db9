//! Sparse LU factorization with threshold partial pivoting, preceded by a
//! fill-reducing nested-dissection ordering built from BFS level sets.
//! Left-looking column factorization; factor once, solve many.

use crate::space::SparseMatrix;
use std::fmt;

#[derive(Debug)]
pub enum SolveError {
    Singular { column: usize },
    NotFinite { column: usize },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Singular { column } => write!(f, "matrix singular at column {column}"),
            SolveError::NotFinite { column } => {
                write!(f, "non-finite pivot at column {column}")
            }
        }
    }
}

impl std::error::Error for SolveError {}

const USIZE_NONE: usize = usize::MAX;

/// Fill-reducing ordering: recursive dissection by BFS level sets from a
/// pseudo-peripheral start; each separator level is ordered after the two
/// halves it separates.
fn dissection_order(pat: &crate::space::SparsityPattern) -> Vec<usize> {
    let n = pat.n;
    let mut order = Vec::with_capacity(n);
    let mut level = vec![USIZE_NONE; n];
    let mut in_set = vec![false; n];
    let mut stack: Vec<Vec<usize>> = vec![(0..n).collect()];

    while let Some(set) = stack.pop() {
        if set.is_empty() {
            continue;
        }
        if set.len() <= 32 {
            order.extend_from_slice(&set);
            continue;
        }
        for &v in &set {
            in_set[v] = true;
        }
        // BFS twice for a pseudo-peripheral start, recording levels
        let bfs = |start: usize, level: &mut Vec<usize>| -> (usize, usize) {
            for &v in &set {
                level[v] = USIZE_NONE;
            }
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(start);
            level[start] = 0;
            let mut last = start;
            let mut depth = 0;
            while let Some(v) = queue.pop_front() {
                for &w in pat.row_cols(v) {
                    if w != v && in_set[w] && level[w] == USIZE_NONE {
                        level[w] = level[v] + 1;
                        depth = depth.max(level[w]);
                        last = w;
                        queue.push_back(w);
                    }
                }
            }
            (last, depth)
        };
        let (far, _) = bfs(set[0], &mut level);
        let (_, depth) = bfs(far, &mut level);
        for &v in &set {
            in_set[v] = false;
        }
        // disconnected remainder becomes its own piece
        let stray: Vec<usize> = set.iter().copied().filter(|&v| level[v] == USIZE_NONE).collect();
        if depth < 4 {
            order.extend(set.iter().copied().filter(|&v| level[v] != USIZE_NONE));
            if !stray.is_empty() {
                stack.push(stray);
            }
            continue;
        }
        // split at the level holding the median node
        let mut counts = vec![0usize; depth + 1];
        for &v in &set {
            if level[v] != USIZE_NONE {
                counts[level[v]] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        let mut acc = 0;
        let mut mid = depth / 2;
        for (l, &c) in counts.iter().enumerate() {
            acc += c;
            if acc * 2 >= total {
                mid = l;
                break;
            }
        }
        let mid = mid.clamp(1, depth - 1);
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut sep = Vec::new();
        for &v in &set {
            match level[v] {
                l if l == USIZE_NONE => {}
                l if l < mid => lo.push(v),
                l if l > mid => hi.push(v),
                _ => sep.push(v),
            }
        }
        // pop order: lo, hi, then the separator emitted last
        stack.push(sep);
        stack.push(hi);
        stack.push(lo);
        if !stray.is_empty() {
            stack.push(stray);
        }
    }
    debug_assert_eq!(order.len(), n);
    order
}

/// Fill ordering for a pattern; reusable across factorizations.
pub fn fill_order(pattern: &crate::space::SparsityPattern) -> Vec<usize> {
    dissection_order(pattern)
}

pub struct SparseLu {
    n: usize,
    /// column order: step k eliminates original column q[k]
    q: Vec<usize>,
    /// pinv[original row] = pivot step
    pinv: Vec<usize>,
    l_cols: Vec<(Vec<u32>, Vec<f64>)>,
    u_cols: Vec<(Vec<u32>, Vec<f64>)>,
    /// 1 / pivot value per step
    inv_diag: Vec<f64>,
}

impl SparseLu {
    /// Factors the matrix; requires a structurally symmetric pattern (used
    /// for the fill ordering) but arbitrary values.
    pub fn factor(m: &SparseMatrix) -> Result<SparseLu, SolveError> {
        let q = dissection_order(&m.pattern);
        Self::factor_with_order(m, q)
    }

    /// Factors with a precomputed fill ordering (reused across nonlinear
    /// iterations, where the pattern does not change).
    pub fn factor_with_order(m: &SparseMatrix, q: Vec<usize>) -> Result<SparseLu, SolveError> {
        let n = m.n();
        let pat = &m.pattern;
        assert_eq!(q.len(), n);

        // CSC of the column-permuted matrix: column k = original column q[k],
        // rows stay original. The pattern is symmetric, so row q[k] of the
        // CSR is the column q[k] of the matrix read through transposition.
        let mut csc_rows: Vec<Vec<u32>> = Vec::with_capacity(n);
        let mut csc_vals: Vec<Vec<f64>> = Vec::with_capacity(n);
        for k in 0..n {
            let j = q[k];
            let mut rows = Vec::with_capacity(pat.row_range(j).len());
            let mut vals = Vec::with_capacity(pat.row_range(j).len());
            for kk in pat.row_range(j) {
                let i = pat.cols[kk]; // (j, i) present <=> (i, j) present
                rows.push(i as u32);
                vals.push(m.values[pat.transpose[kk]]);
            }
            csc_rows.push(rows);
            csc_vals.push(vals);
        }

        let mut pinv = vec![USIZE_NONE; n];
        let mut l_cols: Vec<(Vec<u32>, Vec<f64>)> = Vec::with_capacity(n);
        let mut u_cols: Vec<(Vec<u32>, Vec<f64>)> = Vec::with_capacity(n);
        let mut inv_diag = vec![0.0; n];

        let mut x = vec![0.0_f64; n];
        let mut mark = vec![usize::MAX; n];
        let mut topo: Vec<u32> = Vec::new();
        let mut dfs_stack: Vec<(u32, u32)> = Vec::new();

        for k in 0..n {
            // sparse triangular solve L y = A(:, q[k]): symbolic reach + numeric
            topo.clear();
            for &r in &csc_rows[k] {
                let r = r as usize;
                if mark[r] != k {
                    // DFS from r through the graph of L
                    dfs_stack.push((r as u32, 0));
                    mark[r] = k;
                    while !dfs_stack.is_empty() {
                        let top = dfs_stack.len() - 1;
                        let (node, mut child) = dfs_stack[top];
                        let t = node as usize;
                        let jcol = pinv[t];
                        let deps: &[u32] =
                            if jcol == USIZE_NONE { &[] } else { &l_cols[jcol].0 };
                        let mut descended = false;
                        while (child as usize) < deps.len() {
                            let w = deps[child as usize] as usize;
                            child += 1;
                            if mark[w] != k {
                                mark[w] = k;
                                dfs_stack[top].1 = child;
                                dfs_stack.push((w as u32, 0));
                                descended = true;
                                break;
                            }
                        }
                        if !descended {
                            topo.push(node);
                            dfs_stack.pop();
                        }
                    }
                }
            }
            // topo is in reverse topological order of dependencies
            for &r in csc_rows[k].iter() {
                x[r as usize] = 0.0;
            }
            for &t in topo.iter() {
                x[t as usize] = 0.0;
            }
            for (r, v) in csc_rows[k].iter().zip(&csc_vals[k]) {
                x[*r as usize] = *v;
            }
            // forward substitution in reverse postorder; L has unit diagonal
            for idx in (0..topo.len()).rev() {
                let t = topo[idx] as usize;
                let jcol = pinv[t];
                if jcol == USIZE_NONE {
                    continue;
                }
                let xt = x[t];
                if xt != 0.0 {
                    let (rows, vals) = &l_cols[jcol];
                    for (r, lv) in rows.iter().zip(vals) {
                        x[*r as usize] -= lv * xt;
                    }
                }
            }
            // pivot among unassigned rows, preferring the diagonal q[k]
            let mut max_abs = 0.0;
            let mut ipiv = USIZE_NONE;
            for &t in topo.iter() {
                let t = t as usize;
                if pinv[t] == USIZE_NONE {
                    let a = x[t].abs();
                    if a > max_abs {
                        max_abs = a;
                        ipiv = t;
                    }
                }
            }
            if ipiv == USIZE_NONE || max_abs == 0.0 {
                return Err(SolveError::Singular { column: q[k] });
            }
            if !max_abs.is_finite() {
                return Err(SolveError::NotFinite { column: q[k] });
            }
            let diag_row = q[k];
            if pinv[diag_row] == USIZE_NONE && x[diag_row].abs() >= 0.1 * max_abs {
                ipiv = diag_row;
            }
            let pivot = x[ipiv];
            pinv[ipiv] = k;
            inv_diag[k] = 1.0 / pivot;

            let mut urows = Vec::new();
            let mut uvals = Vec::new();
            let mut lrows = Vec::new();
            let mut lvals = Vec::new();
            for &t in topo.iter() {
                let t = t as usize;
                let xv = x[t];
                if t == ipiv {
                    continue;
                }
                if pinv[t] != USIZE_NONE && pinv[t] < k {
                    if xv != 0.0 {
                        urows.push(pinv[t] as u32);
                        uvals.push(xv);
                    }
                } else if xv != 0.0 {
                    lrows.push(t as u32);
                    lvals.push(xv / pivot);
                }
                x[t] = 0.0;
            }
            x[ipiv] = 0.0;
            l_cols.push((lrows, lvals));
            u_cols.push((urows, uvals));
        }

        // remap L row indices into pivot space for the solves
        for (rows, _) in l_cols.iter_mut() {
            for r in rows.iter_mut() {
                *r = pinv[*r as usize] as u32;
            }
        }

        Ok(SparseLu { n, q, pinv, l_cols, u_cols, inv_diag })
    }

    /// Solves `A x = b` using the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        // y in pivot space: y[pinv[i]] = b[i]
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            y[self.pinv[i]] = b[i];
        }
        // forward: L y = y (unit diagonal)
        for k in 0..self.n {
            let yk = y[k];
            if yk != 0.0 {
                let (rows, vals) = &self.l_cols[k];
                for (r, v) in rows.iter().zip(vals) {
                    y[*r as usize] -= v * yk;
                }
            }
        }
        // backward: U x = y; U column k holds the off-diagonal entries
        for k in (0..self.n).rev() {
            let xk = y[k] * self.inv_diag[k];
            y[k] = xk;
            if xk != 0.0 {
                let (rows, vals) = &self.u_cols[k];
                for (r, v) in rows.iter().zip(vals) {
                    y[*r as usize] -= v * xk;
                }
            }
        }
        // scatter back: x[q[k]] = y[k]
        let mut out = vec![0.0; self.n];
        for k in 0..self.n {
            out[self.q[k]] = y[k];
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.l_cols.iter().map(|(r, _)| r.len()).sum::<usize>()
            + self.u_cols.iter().map(|(r, _)| r.len()).sum::<usize>()
            + self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SparseMatrix;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let mut p = k;
            for r in k + 1..n {
                if a[r][k].abs() > a[p][k].abs() {
                    p = r;
                }
            }
            a.swap(k, p);
            b.swap(k, p);
            let piv = a[k][k];
            for r in k + 1..n {
                let f = a[r][k] / piv;
                if f != 0.0 {
                    for c in k..n {
                        a[r][c] -= f * a[k][c];
                    }
                    b[r] -= f * b[k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..n {
                s -= a[k][c] * x[c];
            }
            x[k] = s / a[k][k];
        }
        x
    }

    #[test]
    fn identity_returns_rhs() {
        let eye = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let m = SparseMatrix::from_dense(&eye);
        let lu = SparseLu::factor(&m).unwrap();
        let b = vec![3.0, -1.0, 2.5];
        assert_eq!(lu.solve(&b), b);
    }

    #[test]
    fn two_by_two() {
        let m = SparseMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let lu = SparseLu::factor(&m).unwrap();
        let x = lu.solve(&[3.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_reported() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(SparseLu::factor(&m), Err(SolveError::Singular { .. })));
    }

    #[test]
    fn assembled_system_matches_dense_lu() {
        // A + D of a convection-diffusion assembly on a 50-node-scale mesh
        let mesh = crate::testgrids::ne_grid(6); // 49 nodes
        let dofs = crate::space::DofMap::from_mesh(&mesh);
        let problem =
            crate::space::ProblemDefinition::constant_coefficients(1e-3, [2.0, 1.0], 1.0, 1.0);
        let (a, _) = crate::space::assemble_galerkin(&mesh, &dofs, &problem, None);
        let d = crate::stabilize::artificial_diffusion(&a);
        let mut m = a.add_matrix(&d);
        let mut rhs: Vec<f64> = (0..m.n()).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let vals = vec![0.0; m.n()];
        crate::space::apply_dirichlet(&mut m, &mut rhs, &dofs, &vals);
        for i in 0..m.n() {
            if dofs.is_dirichlet(i) {
                rhs[i] = (i % 3) as f64;
            }
        }
        let lu = SparseLu::factor(&m).unwrap();
        let x = lu.solve(&rhs);
        let x_ref = dense_solve(m.to_dense(), rhs.clone());
        for i in 0..m.n() {
            assert!(
                (x[i] - x_ref[i]).abs() < 1e-9,
                "x[{i}] = {} vs {}",
                x[i],
                x_ref[i]
            );
        }
        // residual contract
        let ax = m.matvec(&x);
        let res: f64 = ax
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let bnorm: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-10 * (1.0 + bnorm));
    }

    #[test]
    fn random_patterns_against_dense() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        for trial in 0..20 {
            let n = 10 + (trial % 5) * 8;
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                dense[i][i] = 4.0 + rng.gen::<f64>();
                for _ in 0..3 {
                    let j = rng.gen_range(0..n);
                    if j != i {
                        let v = rng.gen::<f64>() * 2.0 - 1.0;
                        dense[i][j] = v;
                        // keep the pattern symmetric, values independent
                        if dense[j][i] == 0.0 {
                            dense[j][i] = rng.gen::<f64>() * 0.1;
                        }
                    }
                }
            }
            let m = SparseMatrix::from_dense(&dense);
            let b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let lu = SparseLu::factor(&m).unwrap();
            let x = lu.solve(&b);
            let x_ref = dense_solve(dense.clone(), b.clone());
            for i in 0..n {
                assert!((x[i] - x_ref[i]).abs() < 1e-8, "trial {trial} row {i}");
            }
        }
    }
}
