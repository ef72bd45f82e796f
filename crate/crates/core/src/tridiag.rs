//! Real symmetric tridiagonal eigensolver.
//!
//! Eigenvalues come from bisection on Sturm counts, each index bracketed
//! independently from the Gershgorin interval so the result does not depend
//! on how the work is scheduled across threads. Eigenvectors come from
//! inverse iteration on an LU factorization with partial pivoting.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Hard cap on bisection steps and inverse-iteration sweeps per eigenpair.
pub const MAX_ITERATIONS: usize = 100;

/// Residual `‖T v − λ v‖ / ‖T‖` accepted for a returned eigenpair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

// inverse iteration stops early once the residual falls below this
const RESIDUAL_TARGET: f64 = 1e-12;

// eigenvalues closer than this (relative to ‖T‖) are treated as a cluster
// and their vectors are explicitly orthogonalized against each other
const CLUSTER_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    offdiag_sq: Vec<f64>,
    norm: f64,
    pivmin: f64,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty tridiagonal matrix".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidParameter(format!(
                "off-diagonal length {} does not match dimension {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(offdiag.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        let offdiag_sq: Vec<f64> = offdiag.iter().map(|e| e * e).collect();
        let n = diag.len();
        let norm = (0..n)
            .map(|i| {
                let left = if i > 0 { offdiag[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { offdiag[i].abs() } else { 0.0 };
                diag[i].abs() + left + right
            })
            .fold(0.0, f64::max);
        let max_e2 = offdiag_sq.iter().copied().fold(1.0, f64::max);
        Ok(Self {
            diag,
            offdiag,
            offdiag_sq,
            norm,
            pivmin: f64::MIN_POSITIVE * max_e2,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Infinity norm, an upper bound on the spectral norm.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Leading `m × m` principal submatrix.
    pub fn leading(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.dim() {
            return Err(Error::InvalidParameter(format!(
                "submatrix size {m} out of range"
            )));
        }
        Self::new(self.diag[..m].to_vec(), self.offdiag[..m - 1].to_vec())
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 {
                self.offdiag[i - 1].abs()
            } else {
                0.0
            };
            let right = if i + 1 < n {
                self.offdiag[i].abs()
            } else {
                0.0
            };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        let pad = 2.0 * f64::EPSILON * self.norm.max(1.0) + self.pivmin;
        (lo - pad, hi + pad)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < self.pivmin {
            q = -self.pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            q = self.diag[i] - x - self.offdiag_sq[i - 1] / q;
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn bisection_tolerance(&self, lo: f64, hi: f64) -> f64 {
        (2.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(1e-3 * f64::EPSILON * self.norm)
    }

    /// The `k`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.dim() {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue index {k} >= dimension {}",
                self.dim()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..MAX_ITERATIONS {
            if hi - lo <= self.bisection_tolerance(lo, hi) {
                return Ok(0.5 * (lo + hi));
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::NoConvergence {
            index: k,
            iterations: MAX_ITERATIONS,
        })
    }

    /// The `count` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        let count = count.min(self.dim());
        let mut values = (0..count)
            .into_par_iter()
            .map(|k| self.eigenvalue(k))
            .collect::<Result<Vec<_>>>()?;
        // bisection results are monotone in k up to the stopping tolerance
        for k in 1..values.len() {
            if values[k] < values[k - 1] {
                values[k] = values[k - 1];
            }
        }
        Ok(values)
    }

    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.offdiag[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.offdiag[i] * v[i + 1];
            }
            out[i] = s;
        }
    }

    /// `‖T v − λ v‖₂`.
    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let mut tv = vec![0.0; v.len()];
        self.matvec(v, &mut tv);
        tv.iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Eigenvectors for the given ascending eigenvalues (as returned by
    /// [`lowest_eigenvalues`](Self::lowest_eigenvalues)). Columns have unit
    /// 2-norm; each is signed so its largest component is positive.
    pub fn eigenvectors(&self, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        let clusters = self.clusters(values);
        let blocks = clusters
            .par_iter()
            .map(|range| {
                let mut block: Vec<Vec<f64>> = Vec::with_capacity(range.len());
                for k in range.clone() {
                    let v = self.inverse_iteration(values[k], k, &block)?;
                    block.push(v);
                }
                Ok(block)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(blocks.into_iter().flatten().collect())
    }

    fn clusters(&self, values: &[f64]) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=values.len() {
            if k == values.len() || values[k] - values[k - 1] > CLUSTER_GAP * self.norm {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    fn inverse_iteration(
        &self,
        lambda: f64,
        index: usize,
        previous: &[Vec<f64>],
    ) -> Result<Vec<f64>> {
        let n = self.dim();
        if n == 1 {
            return Ok(vec![1.0]);
        }
        let lu = ShiftedLu::factor(self, lambda);
        let mut v: Vec<f64> = (0..n).map(|i| start_component(i, index)).collect();
        normalize(&mut v);
        for _ in 0..MAX_ITERATIONS {
            lu.solve(&mut v);
            for p in previous {
                let dot: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(p).for_each(|(x, y)| *x -= dot * y);
            }
            normalize(&mut v);
            if self.residual(lambda, &v) <= RESIDUAL_TARGET * self.norm {
                break;
            }
        }
        if self.residual(lambda, &v) > RESIDUAL_TOLERANCE * self.norm {
            return Err(Error::NoConvergence {
                index,
                iterations: MAX_ITERATIONS,
            });
        }
        let (imax, _) =
            v.iter().enumerate().fold(
                (0, 0.0),
                |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc },
            );
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(v)
    }
}

fn normalize(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    v.iter_mut().for_each(|x| *x /= scale);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

// deterministic start vector with no special alignment to the chain structure
fn start_component(i: usize, k: usize) -> f64 {
    let mut z = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (k as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
}

/// LU factorization of `T − λI` with partial pivoting (row interchanges),
/// stored as in LAPACK `dgttrf`.
struct ShiftedLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, lambda: f64) -> Self {
        let n = t.dim();
        let mut lower = t.offdiag.clone();
        let mut diag: Vec<f64> = t.diag.iter().map(|d| d - lambda).collect();
        let mut upper = t.offdiag.clone();
        let mut upper2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * t.norm.max(f64::MIN_POSITIVE);
        for i in 0..n - 1 {
            if diag[i].abs() >= lower[i].abs() {
                if diag[i].abs() < tiny {
                    diag[i] = tiny;
                }
                let fact = lower[i] / diag[i];
                lower[i] = fact;
                diag[i + 1] -= fact * upper[i];
            } else {
                let fact = diag[i] / lower[i];
                diag[i] = lower[i];
                lower[i] = fact;
                let temp = upper[i];
                upper[i] = diag[i + 1];
                diag[i + 1] = temp - fact * diag[i + 1];
                if i + 2 < n {
                    upper2[i] = upper[i + 1];
                    upper[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if diag[n - 1].abs() < tiny {
            diag[n - 1] = tiny;
        }
        Self {
            lower,
            diag,
            upper,
            upper2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.lower[i] * b[i];
            } else {
                b[i + 1] -= self.lower[i] * b[i];
            }
        }
        b[n - 1] /= self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.upper[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
        // keep the iterate finite when λ is (numerically) exact
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale > 1e200 || !scale.is_finite() {
            let s = if scale.is_finite() { scale } else { f64::MAX };
            b.iter_mut().for_each(|x| *x /= s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        let values = t.lowest_eigenvalues(n).unwrap();
        for (k, v) in values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13, "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let n = 40;
        let t = laplacian(n);
        let values = t.lowest_eigenvalues(10).unwrap();
        let vectors = t.eigenvectors(&values).unwrap();
        for i in 0..10 {
            assert!(t.residual(values[i], &vectors[i]) < 1e-12 * t.norm());
            for j in 0..10 {
                let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-10, "({i},{j}) = {dot}");
            }
        }
    }

    #[test]
    fn decoupled_diagonal_with_ties_gets_orthogonal_vectors() {
        let t = SymTridiagonal::new(vec![1.0, 1.0, 3.0], vec![0.0, 0.0]).unwrap();
        let values = t.lowest_eigenvalues(3).unwrap();
        assert!((values[0] - 1.0).abs() < 1e-14);
        assert!((values[1] - 1.0).abs() < 1e-14);
        let vectors = t.eigenvectors(&values).unwrap();
        let dot: f64 = vectors[0].iter().zip(&vectors[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn count_below_brackets_eigenvalues() {
        let t = laplacian(20);
        let values = t.lowest_eigenvalues(20).unwrap();
        for (k, v) in values.iter().enumerate() {
            assert_eq!(t.count_below(v - 1e-9), k);
            assert_eq!(t.count_below(v + 1e-9), k + 1);
        }
    }

    #[test]
    fn single_site() {
        let t = SymTridiagonal::new(vec![-3.5], vec![]).unwrap();
        assert!((t.eigenvalue(0).unwrap() + 3.5).abs() < 1e-14);
        assert_eq!(t.eigenvectors(&[-3.5]).unwrap(), vec![vec![1.0]]);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, f64::NAN], vec![0.0]).is_err());
    }
}
