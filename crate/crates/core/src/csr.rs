//! Compressed sparse row index structure.
//!
//! Used both for graph adjacency (row = destination node, columns = the nodes
//! it aggregates from) and for the segment operators of the tape.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Csr {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    n_cols: usize,
}

impl Csr {
    /// Builds from per-row column lists. Each row is sorted and deduplicated.
    pub fn from_rows<I, R>(rows: I, n_cols: usize) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = usize>,
    {
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        for row in rows {
            let start = indices.len();
            indices.extend(row);
            let seg = &mut indices[start..];
            seg.sort_unstable();
            let mut w = 0;
            for r in 0..seg.len() {
                if r == 0 || seg[r] != seg[w - 1] {
                    seg[w] = seg[r];
                    w += 1;
                }
            }
            indices.truncate(start + w);
            assert!(indices[start..].iter().all(|&c| c < n_cols), "column index out of range");
            offsets.push(indices.len());
        }
        Csr { offsets, indices, n_cols }
    }

    /// Builds from `(row, col)` pairs; duplicates are collapsed.
    pub fn from_pairs(n_rows: usize, n_cols: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows = vec![Vec::new(); n_rows];
        for (r, c) in pairs {
            rows[r].push(c);
        }
        Csr::from_rows(rows, n_cols)
    }

    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        Csr { offsets: vec![0; n_rows + 1], indices: Vec::new(), n_cols }
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.indices[self.offsets[r]..self.offsets[r + 1]]
    }

    /// Entry positions belonging to row `r`.
    pub fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.offsets[r]..self.offsets[r + 1]
    }

    pub fn degree(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&c).is_ok()
    }

    /// Row index of every stored entry, in storage order.
    pub fn entry_rows(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.n_rows() {
            out.extend(std::iter::repeat_n(r, self.degree(r)));
        }
        out
    }

    pub fn transpose(&self) -> Csr {
        let mut rows = vec![Vec::new(); self.n_cols];
        for r in 0..self.n_rows() {
            for &c in self.row(r) {
                rows[c].push(r);
            }
        }
        Csr::from_rows(rows, self.n_rows())
    }

    /// Union with the transpose; square matrices only.
    pub fn symmetrize(&self) -> Csr {
        assert_eq!(self.n_rows(), self.n_cols, "symmetrize needs a square matrix");
        let t = self.transpose();
        Csr::from_rows((0..self.n_rows()).map(|r| self.row(r).iter().chain(t.row(r)).copied().collect::<Vec<_>>()), self.n_cols)
    }
}
