//! Compressed sparse rows and Jacobi-preconditioned BiCGSTAB.
//!
//! Reductions run sequentially in index order so results do not depend on the
//! thread count; only the row-wise products are parallel.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR form; duplicate column entries within a row are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Row-at-a-time builder for [`CsrMatrix`].
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(n: usize, nnz_hint: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        Self {
            n,
            row_ptr,
            cols: Vec::with_capacity(nnz_hint),
            vals: Vec::with_capacity(nnz_hint),
        }
    }

    pub fn push(&mut self, col: usize, val: f64) {
        self.cols.push(col as u32);
        self.vals.push(val);
    }

    pub fn end_row(&mut self) {
        self.row_ptr.push(self.cols.len());
    }

    pub fn finish(self) -> Result<CsrMatrix> {
        if self.row_ptr.len() != self.n + 1 {
            return Err(Error::invalid(format!(
                "builder closed {} rows, expected {}",
                self.row_ptr.len() - 1,
                self.n
            )));
        }
        if self.cols.iter().any(|&c| c as usize >= self.n) {
            return Err(Error::invalid("column index out of range"));
        }
        Ok(CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        })
    }
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).filter(|&(c, _)| c == i).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = s;
        });
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolve {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b − Ax‖∞ / ‖b‖∞` at exit.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves `Ax = b` to `‖b − Ax‖∞ ≤ tol·‖b‖∞`, starting from `x0`.
///
/// Right-preconditioned by the diagonal; restarts from the current iterate on
/// breakdown.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<LinearSolve> {
    let n = a.n;
    if b.len() != n || x0.is_some_and(|x| x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = sup(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return Ok(LinearSolve {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = tol * bnorm;
    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut iterations = 0;
    'restart: loop {
        a.mul_into(&x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let mut res = sup(&r);
        if res <= target {
            return Ok(LinearSolve {
                x,
                iterations,
                relative_residual: res / bnorm,
            });
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new == 0.0 || !rho_new.is_finite() || omega == 0.0 {
                continue 'restart;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                ph[i] = p[i] * inv_diag[i];
            }
            a.mul_into(&ph, &mut v);
            let denom = dot(&r_hat, &v);
            if denom == 0.0 || !denom.is_finite() {
                continue 'restart;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if sup(&s) <= target {
                for i in 0..n {
                    x[i] += alpha * ph[i];
                }
                // confirm against the true residual before returning
                continue 'restart;
            }
            for i in 0..n {
                sh[i] = s[i] * inv_diag[i];
            }
            a.mul_into(&sh, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * t[i];
            }
            res = sup(&r);
            if !res.is_finite() {
                return Err(Error::Numerical("BiCGSTAB diverged".into()));
            }
            if res <= target {
                continue 'restart;
            }
        }
        a.mul_into(&x, &mut tmp);
        let true_res = (0..n).map(|i| (b[i] - tmp[i]).abs()).fold(0.0, f64::max);
        return Err(Error::NoConvergence {
            what: "BiCGSTAB".into(),
            iterations,
            residual: true_res / bnorm,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = CsrBuilder::new(n, 3 * n);
        for i in 0..n {
            if i > 0 {
                b.push(i - 1, 1.0);
            }
            b.push(i, -2.0);
            if i + 1 < n {
                b.push(i + 1, 1.0);
            }
            b.end_row();
        }
        b.finish().unwrap()
    }

    #[test]
    fn solves_second_difference_system() {
        let n = 200;
        let a = laplacian_1d(n);
        // exact solution of u'' = 1 with zero ends, scaled to the lattice
        let hh = 1.0 / (n + 1) as f64;
        let exact: Vec<f64> = (1..=n).map(|i| {
            let x = i as f64 * hh;
            0.5 * x * (x - 1.0) / (hh * hh)
        }).collect();
        let b = vec![1.0; n];
        let sol = bicgstab(&a, &b, None, 1e-12, 10_000).unwrap();
        let err = sol.x.iter().zip(&exact).map(|(x, e)| (x - e).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6 * exact.iter().fold(0.0f64, |m, v| m.max(v.abs())), "{err}");
        assert!(sol.relative_residual <= 1e-12);
        let warm = bicgstab(&a, &b, Some(&sol.x), 1e-12, 10_000).unwrap();
        assert_eq!(warm.iterations, 0);
    }

    #[test]
    fn duplicates_and_diagonal() {
        let mut b = CsrBuilder::new(2, 4);
        b.push(0, 2.0);
        b.push(0, 1.0);
        b.push(1, -1.0);
        b.end_row();
        b.push(1, 4.0);
        b.end_row();
        let a = b.finish().unwrap();
        assert_eq!(a.diagonal(), vec![3.0, 4.0]);
        assert_eq!(a.mul(&[1.0, 1.0]), vec![2.0, 4.0]);
        let sol = bicgstab(&a, &[2.0, 4.0], None, 1e-14, 100).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        let mut bad = CsrBuilder::new(2, 1);
        bad.push(0, 1.0);
        bad.end_row();
        assert!(bad.finish().is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let a = laplacian_1d(500);
        let err = bicgstab(&a, &vec![1.0; 500], None, 1e-14, 3).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }
}
