//! Row-compressed sparse matrices over mesh nodes with a shared symmetric
//! sparsity pattern. The pattern stores, for every nonzero (i, j), the
//! position of its transpose entry (j, i), which the limiter sweeps rely on.

use crate::mesh::Mesh;
use std::sync::Arc;

#[derive(Debug)]
pub struct SparsityPattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    /// transpose[k] = position of (j, i) when k is the position of (i, j)
    pub transpose: Vec<usize>,
    /// diag[i] = position of (i, i)
    pub diag: Vec<usize>,
}

impl SparsityPattern {
    /// Node-adjacency pattern of the mesh (edge neighbors plus diagonal).
    pub fn from_mesh(mesh: &Mesh) -> Arc<SparsityPattern> {
        let n = mesh.n_vertices();
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in mesh.edges() {
            let [u, v] = e.vertices;
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for (i, nb) in neighbors.iter_mut().enumerate() {
            nb.push(i);
            nb.sort_unstable();
            nb.dedup();
        }
        Self::from_adjacency(&neighbors)
    }

    /// Pattern from explicit per-row column lists (must be symmetric).
    pub fn from_adjacency(rows: &[Vec<usize>]) -> Arc<SparsityPattern> {
        let n = rows.len();
        let mut row_ptr = vec![0usize; n + 1];
        for (i, r) in rows.iter().enumerate() {
            row_ptr[i + 1] = row_ptr[i] + r.len();
        }
        let mut cols = Vec::with_capacity(row_ptr[n]);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]), "columns must be sorted");
            cols.extend_from_slice(r);
        }
        let mut pat = SparsityPattern {
            n,
            row_ptr,
            cols,
            transpose: Vec::new(),
            diag: vec![usize::MAX; n],
        };
        let mut transpose = vec![usize::MAX; pat.cols.len()];
        for i in 0..n {
            for k in pat.row_ptr[i]..pat.row_ptr[i + 1] {
                let j = pat.cols[k];
                if j == i {
                    pat.diag[i] = k;
                }
                let kt = pat
                    .index_of(j, i)
                    .expect("pattern must be structurally symmetric");
                transpose[k] = kt;
            }
        }
        pat.transpose = transpose;
        Arc::new(pat)
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn row_cols(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.row_range(i);
        self.cols[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|off| range.start + off)
    }
}

#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pub pattern: Arc<SparsityPattern>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let nnz = pattern.nnz();
        SparseMatrix { pattern, values: vec![0.0; nnz] }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.index_of(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .index_of(i, j)
            .expect("entry outside the sparsity pattern");
        self.values[k] += v;
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.pattern.row_range(i);
        (&self.pattern.cols[r.clone()], &self.values[r])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        for i in 0..self.n() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
        y
    }

    /// self + other, entrywise over the shared pattern.
    pub fn add_matrix(&self, other: &SparseMatrix) -> SparseMatrix {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        SparseMatrix { pattern: self.pattern.clone(), values }
    }

    /// Replaces row `i` by the identity row.
    pub fn set_identity_row(&mut self, i: usize) {
        let r = self.pattern.row_range(i);
        for k in r {
            self.values[k] = if self.pattern.cols[k] == i { 1.0 } else { 0.0 };
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n()]; self.n()];
        for i in 0..self.n() {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                dense[i][*c] = *v;
            }
        }
        dense
    }

    /// Test helper: matrix with the pattern of the nonzeros of `dense`,
    /// symmetrized structurally.
    pub fn from_dense(dense: &[Vec<f64>]) -> SparseMatrix {
        let n = dense.len();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if dense[i][j] != 0.0 || dense[j][i] != 0.0 || i == j {
                    rows[i].push(j);
                }
            }
        }
        let pattern = SparsityPattern::from_adjacency(&rows);
        let mut m = SparseMatrix::zeros(pattern);
        for i in 0..n {
            for j in 0..n {
                if dense[i][j] != 0.0 {
                    m.add(i, j, dense[i][j]);
                }
            }
        }
        m
    }
}
