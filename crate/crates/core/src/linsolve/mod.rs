//! Sparse systems `(I - A) x = b` over the non-absorbing states of an
//! instantiated chain, solved by restarted GMRES or a sparse LU.

mod direct;
mod gmres;

pub use direct::LuFactor;
pub use gmres::GmresOptions;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::ConcreteChain;

/// Systems up to this size use the direct backend under [`Backend::Auto`].
pub const AUTO_DIRECT_MAX_DIM: usize = 5000;
/// [`Backend::Auto`] factorizes when more right-hand sides than this share
/// one matrix.
pub const AUTO_DIRECT_MIN_RHS: usize = 8;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("zero pivot at row {0} during factorization")]
    Singular(usize),
    #[error("right-hand side has length {got}, system dimension is {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Backend {
    #[default]
    Gmres,
    Direct,
    /// Direct for small systems with many right-hand sides, GMRES otherwise.
    Auto,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gmres" => Ok(Backend::Gmres),
            "direct" => Ok(Backend::Direct),
            "auto" => Ok(Backend::Auto),
            _ => Err(format!("unknown backend `{s}` (gmres, direct, auto)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub backend: Backend,
    pub tol: f64,
    pub gmres: GmresOptions,
    /// Let objectives retry a stalled GMRES solve with the direct backend.
    pub fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            backend: Backend::Gmres,
            tol: DEFAULT_TOL,
            gmres: GmresOptions::default(),
            fallback: true,
        }
    }
}

/// Square matrix in compressed sparse row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(j, _)| j == i).map_or(0.0, |(_, v)| v))
            .collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `‖b - M x‖∞`.
    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| (b[i] - self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residual threshold `tol * max(1, ‖b‖∞, ‖x‖∞)`. The `‖x‖∞` term only
/// matters for solutions larger than the right-hand side, where rounding
/// alone leaves residuals of order `eps * ‖x‖∞`.
pub fn residual_target(b: &[f64], x: &[f64], tol: f64) -> f64 {
    tol * norm_inf(b).max(norm_inf(x)).max(1.0)
}

/// `I - A[u]` restricted to the non-absorbing states, together with the
/// reward vector. Absorbing states have value zero and drop out.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    matrix: CsrMatrix,
    /// Row index of each chain state, `None` for absorbing states.
    index: Vec<Option<usize>>,
    /// Chain state of each row.
    states: Vec<usize>,
    rewards: Vec<f64>,
}

impl SparseSystem {
    pub fn assemble(chain: &ConcreteChain) -> Self {
        let mut index = vec![None; chain.rows.len()];
        let mut states = Vec::new();
        for (s, slot) in index.iter_mut().enumerate() {
            if !chain.absorbing[s] {
                *slot = Some(states.len());
                states.push(s);
            }
        }
        let n = states.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (i, &s) in states.iter().enumerate() {
            entries.clear();
            entries.push((i, 1.0));
            for &(t, w) in &chain.rows[s] {
                if let Some(j) = index[t] {
                    entries.push((j, -w));
                }
            }
            entries.sort_by_key(|e| e.0);
            // Merge the diagonal with a self-loop entry.
            let mut k = 0;
            while k < entries.len() {
                let (j, mut v) = entries[k];
                k += 1;
                while k < entries.len() && entries[k].0 == j {
                    v += entries[k].1;
                    k += 1;
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSystem {
            matrix: CsrMatrix {
                n,
                row_ptr,
                col_idx,
                values,
            },
            rewards: states.iter().map(|&s| chain.rewards[s]).collect(),
            index,
            states,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn row_of(&self, state: usize) -> Option<usize> {
        self.index[state]
    }

    pub fn state_of(&self, row: usize) -> usize {
        self.states[row]
    }

    /// Value of chain state `s` given a solution vector; absorbing states
    /// are zero.
    pub fn value_at(&self, x: &[f64], s: usize) -> f64 {
        self.index[s].map_or(0.0, |i| x[i])
    }

    fn check_rhs(&self, b: &[f64]) -> Result<(), SolveError> {
        if b.len() != self.dim() {
            return Err(SolveError::Dimension {
                expected: self.dim(),
                got: b.len(),
            });
        }
        Ok(())
    }

    fn check_residual(
        &self,
        x: &[f64],
        b: &[f64],
        tol: f64,
        iterations: usize,
    ) -> Result<(), SolveError> {
        let residual = self.matrix.residual_inf(x, b);
        if residual <= residual_target(b, x, tol) {
            Ok(())
        } else {
            Err(SolveError::NonConvergence {
                residual,
                iterations,
            })
        }
    }

    pub fn solve(&self, b: &[f64], opts: &SolverOptions) -> Result<Vec<f64>, SolveError> {
        self.check_rhs(b)?;
        match opts.backend {
            Backend::Direct => {
                let lu = self.factorize()?;
                let x = lu.solve(b);
                self.check_residual(&x, b, opts.tol, 0)?;
                Ok(x)
            }
            Backend::Gmres | Backend::Auto => gmres::solve(&self.matrix, b, opts.tol, &opts.gmres),
        }
    }

    /// Solves for several right-hand sides against the same matrix. The
    /// direct backend factorizes once; solves run in parallel.
    pub fn solve_multi(
        &self,
        rhs: &[Vec<f64>],
        opts: &SolverOptions,
    ) -> Result<Vec<Vec<f64>>, SolveError> {
        for b in rhs {
            self.check_rhs(b)?;
        }
        if rhs.is_empty() {
            return Ok(Vec::new());
        }
        let direct = match opts.backend {
            Backend::Direct => true,
            Backend::Gmres => false,
            Backend::Auto => self.dim() <= AUTO_DIRECT_MAX_DIM && rhs.len() > AUTO_DIRECT_MIN_RHS,
        };
        if direct {
            let lu = self.factorize()?;
            rhs.par_iter()
                .map(|b| {
                    let x = lu.solve(b);
                    self.check_residual(&x, b, opts.tol, 0)?;
                    Ok(x)
                })
                .collect()
        } else {
            rhs.par_iter()
                .map(|b| gmres::solve(&self.matrix, b, opts.tol, &opts.gmres))
                .collect()
        }
    }

    pub fn factorize(&self) -> Result<LuFactor, SolveError> {
        LuFactor::new(&self.matrix)
    }
}
