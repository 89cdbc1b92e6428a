//! Dense symmetric spectra and truncated traces.
//!
//! For a symmetric `A` with eigenvalues `λ₁ ≤ … ≤ λₙ`, the truncated Laplacians are
//!
//! ```text
//! P⁻ₖ(A) = λ₁ + … + λₖ          P⁺ₖ(A) = λₙ₋ₖ₊₁ + … + λₙ
//! ```
//!
//! and the drift-perturbed operators evaluated on a jet `(H, g)` are
//! `F⁻ₖ = P⁻ₖ(H) − h|g|`, `F⁺ₖ = P⁺ₖ(H) + h|g|`.
//!
//! Everything here is small and dense (n ≤ 16 in practice); the eigensolver is a
//! cyclic Jacobi iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal threshold of the Jacobi sweeps, relative to the Frobenius norm.
pub const JACOBI_THRESHOLD: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A real symmetric `n × n` matrix stored row-major.
///
/// Construction symmetrizes the input as `(A + Aᵀ)/2`, so `a[i][j] == a[j][i]`
/// holds bit-for-bit afterwards.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Builds from a row-major buffer of length `dim * dim`.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite matrix entry {bad}")));
        }
        let mut entries = entries;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, d) in diag.iter().enumerate() {
            entries[i * dim + i] = *d;
        }
        Self { dim, entries }
    }

    /// Starting point for Hessians assembled from outer products.
    pub(crate) fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|x| t * x).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Adds `weight · v vᵀ` in place.
    pub(crate) fn add_outer(&mut self, weight: f64, v: &[f64]) {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                self.entries[i * n + j] += weight * v[i] * v[j];
            }
        }
    }

    pub(crate) fn add_identity(&mut self, weight: f64) {
        for i in 0..self.dim {
            self.entries[i * self.dim + i] += weight;
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨A v, v⟩`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// Eigenvalues in non-decreasing order, with the matching orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    /// `frame[i]` is a unit eigenvector for `eigenvalues[i]`.
    pub frame: Option<Vec<Vec<f64>>>,
}

impl SpectralDecomp {
    /// The eigenvectors of the `k` smallest eigenvalues, as a [`KFrame`].
    pub fn bottom_frame(&self, k: usize) -> Result<KFrame> {
        let frame = self
            .frame
            .as_ref()
            .ok_or_else(|| Error::invalid("decomposition carries no eigenframe"))?;
        check_k(k, frame.len())?;
        KFrame::new(frame.len(), frame[..k].to_vec())
    }
}

/// `k` orthonormal vectors in `ℝⁿ`, spanning a `k`-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct KFrame {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl KFrame {
    /// Accepts vectors that are already orthonormal to within `1e-12`.
    pub fn new(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        check_k(vectors.len(), dim)?;
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        for i in 0..vectors.len() {
            for j in i..vectors.len() {
                let d = dot(&vectors[i], &vectors[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                if (d - target).abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "frame vectors {i},{j} not orthonormal (dot = {d})"
                    )));
                }
            }
        }
        Ok(Self { dim, vectors })
    }

    /// Modified Gram–Schmidt on arbitrary (linearly independent) input.
    pub fn orthonormalize(dim: usize, raw: &[Vec<f64>]) -> Result<Self> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
        for v in raw {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            let mut w = v.clone();
            // two passes keep the result orthonormal to ~1e-16
            for _ in 0..2 {
                for u in &out {
                    let c = dot(&w, u);
                    w.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm < 1e-10 {
                return Err(Error::invalid("vectors are linearly dependent"));
            }
            w.iter_mut().for_each(|a| *a /= norm);
            out.push(w);
        }
        Self::new(dim, out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// Which member of the `F⁺ₖ / F⁻ₖ` pair to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Minus,
    Plus,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} outside [1, {n}]")));
    }
    Ok(())
}

/// Full spectrum of `a`, sorted non-decreasingly, with eigenvectors.
///
/// Cyclic Jacobi: sweep all off-diagonal pairs with plane rotations until the
/// off-diagonal mass drops below [`JACOBI_THRESHOLD`] times `‖A‖_F`. Ordering is
/// a stable sort on the diagonal, so ties keep their Jacobi index order.
pub fn eigenvalues_sorted(a: &SymMatrix) -> SpectralDecomp {
    let n = a.dim;
    let mut m = a.entries.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.frobenius_norm();
    let target = JACOBI_THRESHOLD * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A ← Jᵀ A J on rows/columns p, q
                for r in 0..n {
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    m[r * n + p] = c * arp - s * arq;
                    m[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = m[p * n + r];
                    let aqr = m[q * n + r];
                    m[p * n + r] = c * apr - s * aqr;
                    m[q * n + r] = s * apr + c * aqr;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let eigenvalues = order.iter().map(|&i| m[i * n + i]).collect();
    let frame = order
        .iter()
        .map(|&i| (0..n).map(|r| v[r * n + i]).collect())
        .collect();
    SpectralDecomp {
        eigenvalues,
        frame: Some(frame),
    }
}

/// Sum of the `k` smallest eigenvalues.
pub fn pk_minus(a: &SymMatrix, k: usize) -> Result<f64> {
    check_k(k, a.dim)?;
    if k == a.dim {
        return Ok(a.trace());
    }
    Ok(eigenvalues_sorted(a).eigenvalues[..k].iter().sum())
}

/// Sum of the `k` largest eigenvalues.
pub fn pk_plus(a: &SymMatrix, k: usize) -> Result<f64> {
    check_k(k, a.dim)?;
    if k == a.dim {
        return Ok(a.trace());
    }
    let ev = eigenvalues_sorted(a).eigenvalues;
    Ok(ev[a.dim - k..].iter().sum())
}

/// `Σᵢ ⟨A eᵢ, eᵢ⟩` over an orthonormal frame of a `k`-plane.
pub fn trace_over_subspace(a: &SymMatrix, w: &KFrame) -> Result<f64> {
    if w.dim != a.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: w.dim,
        });
    }
    Ok(w.vectors.iter().map(|e| a.quadratic_form(e)).sum())
}

/// `F⁻ₖ = P⁻ₖ(H) − h|g|` or `F⁺ₖ = P⁺ₖ(H) + h|g|`.
pub fn fk_value(hessian: &SymMatrix, gradient: &[f64], k: usize, h: f64, sign: Sign) -> Result<f64> {
    if gradient.len() != hessian.dim {
        return Err(Error::DimensionMismatch {
            expected: hessian.dim,
            got: gradient.len(),
        });
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("drift h = {h} must be finite and >= 0")));
    }
    let g = norm(gradient);
    match sign {
        Sign::Minus => Ok(pk_minus(hessian, k)? - h * g),
        Sign::Plus => Ok(pk_plus(hessian, k)? + h * g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let data = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SymMatrix::new(n, data).unwrap()
    }

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = norm(&v);
        v.into_iter().map(|x| x / nv).collect()
    }

    #[test]
    fn symmetrizes_on_construction() {
        let a = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![4.0, 3.0]]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(SymMatrix::new(2, vec![1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(SymMatrix::new(2, vec![1.0; 3]).is_err());
        assert!(SymMatrix::new(0, vec![]).is_err());
    }

    #[test]
    fn diagonal_and_identity_spectra() {
        let d = eigenvalues_sorted(&SymMatrix::diagonal(&[3.0, 1.0, 2.0]));
        assert_eq!(d.eigenvalues, vec![1.0, 2.0, 3.0]);
        let i = eigenvalues_sorted(&SymMatrix::identity(4));
        assert_eq!(i.eigenvalues, vec![1.0; 4]);
    }

    #[test]
    fn eigenpairs_and_frame_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=16 {
            let a = random_sym(&mut rng, n);
            let d = eigenvalues_sorted(&a);
            let frame = d.frame.as_ref().unwrap();
            let scale = a.frobenius_norm().max(1.0);
            for w in d.eigenvalues.windows(2) {
                assert!(w[0] <= w[1]);
            }
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&frame[i], &frame[j]) - target).abs() < 1e-12);
                }
                let av = a.mul_vec(&frame[i]);
                for r in 0..n {
                    assert!((av[r] - d.eigenvalues[i] * frame[i][r]).abs() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn extreme_eigenvalues_match_rayleigh_oracle() {
        // Random-direction Rayleigh quotients bracket the spectrum; a local
        // refinement by projected steps pins the extremes down to 1e-6.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 5] {
            let a = random_sym(&mut rng, n);
            let ev = eigenvalues_sorted(&a).eigenvalues;
            let mut best_min = f64::INFINITY;
            let mut best_max = f64::NEG_INFINITY;
            let mut arg_min = vec![0.0; n];
            let mut arg_max = vec![0.0; n];
            for _ in 0..20_000 {
                let v = random_unit(&mut rng, n);
                let q = a.quadratic_form(&v);
                if q < best_min {
                    best_min = q;
                    arg_min = v.clone();
                }
                if q > best_max {
                    best_max = q;
                    arg_max = v;
                }
            }
            for (mut v, sign) in [(arg_min, 1.0), (arg_max, -1.0)] {
                let mut step = 0.1;
                let mut val = sign * a.quadratic_form(&v);
                while step > 1e-9 {
                    let mut improved = false;
                    for _ in 0..50 {
                        let d = random_unit(&mut rng, n);
                        let w: Vec<f64> = v.iter().zip(&d).map(|(x, y)| x + step * y).collect();
                        let nw = norm(&w);
                        let w: Vec<f64> = w.into_iter().map(|x| x / nw).collect();
                        let q = sign * a.quadratic_form(&w);
                        if q < val {
                            val = q;
                            v = w;
                            improved = true;
                        }
                    }
                    if !improved {
                        step *= 0.5;
                    }
                }
                if sign > 0.0 {
                    best_min = val;
                } else {
                    best_max = -val;
                }
            }
            assert!((best_min - ev[0]).abs() < 1e-6, "{best_min} vs {}", ev[0]);
            assert!((best_max - ev[n - 1]).abs() < 1e-6);
        }
    }

    #[test]
    fn pk_examples() {
        let a = SymMatrix::diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(pk_minus(&a, 2).unwrap(), 3.0);
        assert_eq!(pk_plus(&a, 2).unwrap(), 5.0);
        assert_eq!(pk_minus(&a, 3).unwrap(), a.trace());
        assert!(pk_minus(&a, 0).is_err());
        assert!(pk_minus(&a, 4).is_err());
    }

    #[test]
    fn pk_minus_is_min_over_random_subspaces() {
        // Brute force: 1e5 random k-planes, then a random-perturbation descent
        // from the best sample. Never looks at the eigensolver.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let a = random_sym(&mut rng, n);
        for k in 1..=n {
            let exact = pk_minus(&a, k).unwrap();
            let mut best = f64::INFINITY;
            let mut arg: Vec<Vec<f64>> = Vec::new();
            for _ in 0..100_000 {
                let raw: Vec<Vec<f64>> = (0..k).map(|_| random_unit(&mut rng, n)).collect();
                let w = KFrame::orthonormalize(n, &raw).unwrap();
                let t = trace_over_subspace(&a, &w).unwrap();
                assert!(t >= exact - 1e-12);
                if t < best {
                    best = t;
                    arg = raw;
                }
            }
            let mut step = 0.05;
            while step > 1e-7 {
                let mut improved = false;
                for _ in 0..40 {
                    let raw: Vec<Vec<f64>> = arg
                        .iter()
                        .map(|v| {
                            let d = random_unit(&mut rng, n);
                            v.iter().zip(&d).map(|(x, y)| x + step * y).collect()
                        })
                        .collect();
                    let w = KFrame::orthonormalize(n, &raw).unwrap();
                    let t = trace_over_subspace(&a, &w).unwrap();
                    if t < best {
                        best = t;
                        arg = w.vectors().to_vec();
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            assert!((best - exact).abs() < 1e-8, "k={k}: brute force {best} vs {exact}");
            let d = eigenvalues_sorted(&a);
            let bottom = trace_over_subspace(&a, &d.bottom_frame(k).unwrap()).unwrap();
            assert!((bottom - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn subspace_trace_examples() {
        let a = SymMatrix::diagonal(&[1.0, 2.0, 3.0]);
        let w = KFrame::new(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(trace_over_subspace(&a, &w).unwrap(), 3.0);
        let w2 = KFrame::new(2, vec![vec![1.0, 0.0]]).unwrap();
        assert!(trace_over_subspace(&a, &w2).is_err());
        assert!(KFrame::new(2, vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn fk_examples() {
        let h = SymMatrix::identity(3);
        let v = fk_value(&h, &[0.0; 3], 2, 5.0, Sign::Minus).unwrap();
        assert_eq!(v, 2.0);

        // spectrum (-1, 0, 4) in a rotated basis, |g| = 2
        let q = KFrame::orthonormalize(3, &[vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 1.0], vec![0.0, 0.0, 1.0]])
            .unwrap();
        let mut m = SymMatrix::zeros(3);
        for (lam, e) in [-1.0, 0.0, 4.0].iter().zip(q.vectors()) {
            m.add_outer(*lam, e);
        }
        let m = SymMatrix::new(3, m.entries).unwrap();
        let ev = eigenvalues_sorted(&m).eigenvalues;
        assert!((ev[0] + 1.0).abs() < 1e-12 && ev[1].abs() < 1e-12 && (ev[2] - 4.0).abs() < 1e-12);
        let v = fk_value(&m, &[0.0, 2.0, 0.0], 2, 1.0, Sign::Minus).unwrap();
        assert!((v + 3.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = random_sym(&mut rng, 4);
            let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = fk_value(&a.scaled(-1.0), &g, 2, 0.7, Sign::Minus).unwrap();
            let rhs = fk_value(&a, &g, 2, 0.7, Sign::Plus).unwrap();
            assert!((lhs + rhs).abs() < 1e-12);
        }
        assert!(fk_value(&h, &[0.0; 2], 1, 0.0, Sign::Minus).is_err());
        assert!(fk_value(&h, &[0.0; 3], 1, -1.0, Sign::Minus).is_err());
    }
}
