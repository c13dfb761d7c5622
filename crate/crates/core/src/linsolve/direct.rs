//! Sparse LU without pivoting after a minimum-degree ordering.
//!
//! The systems solved here are nonsingular M-matrices (or block-triangular
//! with M-matrix diagonal blocks), so every symmetric permutation admits an
//! LU factorization without row exchanges. A zero pivot is still reported.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use super::{CsrMatrix, SolveError};

#[derive(Debug, Clone)]
pub struct LuFactor {
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    /// Strictly lower rows of the unit lower factor.
    lower: Vec<Vec<(usize, f64)>>,
    /// Strictly upper rows of the upper factor.
    upper: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

/// Greedy minimum-degree ordering on the symmetrized sparsity pattern.
pub fn minimum_degree_order(m: &CsrMatrix) -> Vec<usize> {
    let n = m.n;
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for i in 0..n {
        for (j, _) in m.row(i) {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (adj[i].len(), i)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = adj[v].drain().collect();
        for &a in &nbrs {
            queue.remove(&(adj[a].len(), a));
            adj[a].remove(&v);
        }
        // Eliminating v turns its neighbourhood into a clique.
        for (k, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[k + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            queue.insert((adj[a].len(), a));
        }
    }
    order
}

impl LuFactor {
    pub fn new(m: &CsrMatrix) -> Result<Self, SolveError> {
        let n = m.n;
        let perm = minimum_degree_order(m);
        let mut iperm = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            iperm[i] = k;
        }
        let mut lower = Vec::with_capacity(n);
        let mut upper: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);

        let mut work = vec![0.0; n];
        let mut present = vec![false; n];
        let mut pattern: Vec<usize> = Vec::new();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        for i in 0..n {
            for (j, v) in m.row(perm[i]) {
                let j = iperm[j];
                if !present[j] {
                    present[j] = true;
                    pattern.push(j);
                    if j < i {
                        heap.push(Reverse(j));
                    }
                }
                work[j] += v;
            }
            let mut lrow = Vec::new();
            while let Some(Reverse(k)) = heap.pop() {
                let l = work[k] / diag[k];
                if l == 0.0 {
                    continue;
                }
                lrow.push((k, l));
                for &(j, u) in &upper[k] {
                    if !present[j] {
                        present[j] = true;
                        pattern.push(j);
                        if j < i {
                            heap.push(Reverse(j));
                        }
                    }
                    work[j] -= l * u;
                }
            }
            let d = work[i];
            if d == 0.0 || !d.is_finite() {
                return Err(SolveError::Singular(perm[i]));
            }
            let mut urow: Vec<(usize, f64)> = pattern
                .iter()
                .filter(|&&j| j > i && work[j] != 0.0)
                .map(|&j| (j, work[j]))
                .collect();
            urow.sort_unstable_by_key(|e| e.0);
            for &j in &pattern {
                work[j] = 0.0;
                present[j] = false;
            }
            pattern.clear();
            lower.push(lrow);
            upper.push(urow);
            diag.push(d);
        }
        Ok(LuFactor {
            perm,
            lower,
            upper,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of both factors, including the diagonal.
    pub fn nnz(&self) -> usize {
        self.diag.len()
            + self.lower.iter().map(Vec::len).sum::<usize>()
            + self.upper.iter().map(Vec::len).sum::<usize>()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let s: f64 = self.lower[i].iter().map(|&(k, l)| l * y[k]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = self.upper[i].iter().map(|&(j, u)| u * y[j]).sum();
            y[i] = (y[i] - s) / self.diag[i];
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_matrix;
    use super::*;

    #[test]
    fn ordering_is_a_permutation() {
        let m = random_matrix(300, 2);
        let mut order = minimum_degree_order(&m);
        order.sort_unstable();
        assert_eq!(order, (0..300).collect::<Vec<_>>());
    }

    #[test]
    fn arrow_matrix_has_no_fill() {
        // Dense first row and column: eliminating the hub first would fill
        // everything, minimum degree leaves it for last.
        let n = 50;
        let mut row_ptr = vec![0];
        let (mut col_idx, mut values) = (Vec::new(), Vec::new());
        for i in 0..n {
            let cols: Vec<usize> = if i == 0 { (0..n).collect() } else { vec![0, i] };
            for j in cols {
                col_idx.push(j);
                values.push(if i == j { 4.0 } else { -0.05 });
            }
            row_ptr.push(col_idx.len());
        }
        let m = CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        };
        let lu = LuFactor::new(&m).unwrap();
        assert_eq!(lu.nnz(), m.nnz());
        let b = vec![1.0; n];
        assert!(m.residual_inf(&lu.solve(&b), &b) < 1e-14);
    }

    #[test]
    fn solves_random_systems() {
        for seed in 0..5 {
            let m = random_matrix(150, seed);
            let lu = LuFactor::new(&m).unwrap();
            let b: Vec<f64> = (0..150).map(|i| (i % 7) as f64 - 2.0).collect();
            assert!(m.residual_inf(&lu.solve(&b), &b) < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let m = CsrMatrix {
            n: 2,
            row_ptr: vec![0, 1, 1],
            col_idx: vec![0],
            values: vec![1.0],
        };
        assert!(matches!(LuFactor::new(&m), Err(SolveError::Singular(1))));
    }
}
