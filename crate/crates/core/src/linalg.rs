//! Sparse storage and direct envelope (profile) factorizations.
//!
//! Meshes produced by [`crate::mesh`] are numbered so that matrix envelopes
//! stay narrow, which makes profile storage a good fit: no fill outside the
//! envelope, contiguous inner products and no symbolic analysis.

use nalgebra::{ComplexField, DMatrix};

use crate::{Error, Result};

/// Scalar types usable by the factorizations.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {}
impl<T: ComplexField<RealField = f64> + Copy + Send + Sync> Scalar for T {}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, T)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<T> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                let end = values.len() - 1;
                values[end] += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.nrows)
            .map(|r| self.row(r).fold(T::zero(), |acc, (c, v)| acc + v * x[c]))
            .collect()
    }

    /// Submatrix with the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut trip = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                if col_map[c] != usize::MAX {
                    trip.push((i, col_map[c], v));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), trip)
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }

    /// Largest `|A_ij − A_ji|` (plain transpose, no conjugation).
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).modulus());
            }
        }
        worst
    }
}

/// First column of the lower envelope of each row of a structurally symmetric matrix.
fn envelope_starts<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    (0..a.nrows)
        .map(|i| a.row(i).map(|(c, _)| c).filter(|&c| c <= i).min().unwrap_or(i))
        .collect()
}

fn row_offsets(starts: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(starts.len() + 1);
    off.push(0);
    for (i, &f) in starts.iter().enumerate() {
        off.push(off[i] + (i - f + 1));
    }
    off
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `A = L D Lᵀ` for symmetric (complex-symmetric, not Hermitian) matrices,
/// without pivoting. Stable when the Hermitian part of `A` is positive definite.
#[derive(Debug, Clone)]
pub struct EnvelopeLdlt<T> {
    n: usize,
    start: Vec<usize>,
    offset: Vec<usize>,
    /// Row `i` holds `L[i, start[i]..i]` followed by `D[i]`.
    data: Vec<T>,
}

impl<T: Scalar> EnvelopeLdlt<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch(format!(
                "square matrix expected, got {}x{}",
                a.nrows, a.ncols
            )));
        }
        let n = a.nrows;
        let start = envelope_starts(a);
        let offset = row_offsets(&start);
        let mut data = vec![T::zero(); offset[n]];
        for i in 0..n {
            for (c, v) in a.row(i) {
                if c <= i {
                    data[offset[i] + c - start[i]] = v;
                }
            }
        }
        let scale = (0..n)
            .map(|i| data[offset[i + 1] - 1].modulus())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = start[i];
            let (done, rest) = data.split_at_mut(offset[i]);
            let row = &mut rest[..i - fi + 1];
            // row[j - fi] becomes g_ij = l_ij d_j
            for j in fi..i {
                let fj = start[j];
                let k0 = fi.max(fj);
                let lj = &done[offset[j]..offset[j + 1]];
                let s = dot(&row[k0 - fi..j - fi], &lj[k0 - fj..j - fj]);
                row[j - fi] -= s;
            }
            let mut d = row[i - fi];
            for j in fi..i {
                let dj = done[offset[j + 1] - 1];
                let g = row[j - fi];
                let l = g / dj;
                d -= g * l;
                row[j - fi] = l;
            }
            if !(d.modulus() > 1e-14 * scale) || !d.modulus().is_finite() {
                return Err(Error::SolverBreakdown(format!(
                    "pivot {i} has modulus {:.3e} (matrix scale {scale:.3e})",
                    d.modulus()
                )));
            }
            row[i - fi] = d;
        }
        Ok(Self {
            n,
            start,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn profile(&self) -> usize {
        self.data.len()
    }

    /// Ratio of the smallest to the largest pivot modulus.
    pub fn pivot_ratio(&self) -> f64 {
        let d: Vec<f64> = (0..self.n)
            .map(|i| self.data[self.offset[i + 1] - 1].modulus())
            .collect();
        let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.iter().cloned().fold(0.0, f64::max);
        lo / hi
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let fi = self.start[i];
            let l = &self.data[self.offset[i]..self.offset[i + 1] - 1];
            let s = dot(l, &b[fi..i]);
            b[i] -= s;
        }
        for i in 0..self.n {
            b[i] /= self.data[self.offset[i + 1] - 1];
        }
        for i in (0..self.n).rev() {
            let fi = self.start[i];
            let xi = b[i];
            let l = &self.data[self.offset[i]..self.offset[i + 1] - 1];
            for (bk, &lk) in b[fi..i].iter_mut().zip(l) {
                *bk -= lk * xi;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// `A = L U` without pivoting for structurally symmetric matrices whose
/// symmetric part is positive definite.
#[derive(Debug, Clone)]
pub struct EnvelopeLu<T> {
    n: usize,
    start: Vec<usize>,
    offset: Vec<usize>,
    /// Row `i` of unit-lower `L`, entries `start[i]..i`.
    lower: Vec<T>,
    /// Column `i` of `U`, entries `start[i]..=i`.
    upper: Vec<T>,
}

impl<T: Scalar> EnvelopeLu<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch(format!(
                "square matrix expected, got {}x{}",
                a.nrows, a.ncols
            )));
        }
        let n = a.nrows;
        let mut start = envelope_starts(a);
        // Column envelope of U: first row with a nonzero in column i.
        for i in 0..n {
            for (c, _) in a.row(i) {
                if c > i {
                    start[c] = start[c].min(i);
                }
            }
        }
        let offset = row_offsets(&start);
        let mut lower = vec![T::zero(); offset[n]];
        let mut upper = vec![T::zero(); offset[n]];
        for i in 0..n {
            for (c, v) in a.row(i) {
                if c < i {
                    lower[offset[i] + c - start[i]] = v;
                } else {
                    upper[offset[c] + i - start[c]] = v;
                }
            }
        }
        let scale = (0..n)
            .map(|i| upper[offset[i + 1] - 1].modulus())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for i in 0..n {
            let fi = start[i];
            // Row i of L: l_ij = (a_ij − Σ_k l_ik u_kj) / u_jj
            for j in fi..i {
                let fj = start[j];
                let k0 = fi.max(fj);
                let li = &mut lower[offset[i]..offset[i] + (i - fi)];
                let uj = &upper[offset[j]..offset[j + 1]];
                let s = dot(&li[k0 - fi..j - fi], &uj[k0 - fj..j - fj]);
                li[j - fi] = (li[j - fi] - s) / uj[j - fj];
            }
            // Column i of U: u_ji = a_ji − Σ_k l_jk u_ki
            for j in fi..=i {
                let fj = start[j];
                let k0 = fi.max(fj);
                let lj = &lower[offset[j]..offset[j] + (j - fj)];
                let ui = &mut upper[offset[i]..offset[i + 1]];
                let s = dot(&lj[k0 - fj..j - fj], &ui[k0 - fi..j - fi]);
                ui[j - fi] -= s;
            }
            let d = upper[offset[i + 1] - 1];
            if !(d.modulus() > 1e-14 * scale) || !d.modulus().is_finite() {
                return Err(Error::SolverBreakdown(format!(
                    "pivot {i} has modulus {:.3e} (matrix scale {scale:.3e})",
                    d.modulus()
                )));
            }
        }
        Ok(Self {
            n,
            start,
            offset,
            lower,
            upper,
        })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let fi = self.start[i];
            let l = &self.lower[self.offset[i]..self.offset[i] + (i - fi)];
            let s = dot(l, &b[fi..i]);
            b[i] -= s;
        }
        for i in (0..self.n).rev() {
            let fi = self.start[i];
            let col = &self.upper[self.offset[i]..self.offset[i + 1]];
            b[i] /= col[i - fi];
            let xi = b[i];
            for (bk, &uk) in b[fi..i].iter_mut().zip(&col[..i - fi]) {
                *bk -= uk * xi;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Relative residual `‖A x − b‖ / max(‖b‖, tiny)` in the Euclidean norm.
pub fn relative_residual<T: Scalar>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> f64 {
    let ax = a.mul_vec(x);
    let num: f64 = ax.iter().zip(b).map(|(&p, &q)| (p - q).modulus_squared()).sum();
    let den: f64 = b.iter().map(|v| v.modulus_squared()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 1D Laplacian plus a complex shift, with some long-range couplings.
    fn test_matrix(n: usize, rng: &mut ChaCha8Rng) -> CsrMatrix<Complex64> {
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, Complex64::new(4.0, rng.random_range(-1.0..1.0))));
            if i + 1 < n {
                let v = Complex64::new(-1.0, rng.random_range(-0.3..0.3));
                trip.push((i, i + 1, v));
                trip.push((i + 1, i, v));
            }
            if i + 5 < n && i % 3 == 0 {
                let v = Complex64::new(-0.5, 0.2);
                trip.push((i, i + 5, v));
                trip.push((i + 5, i, v));
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn ldlt_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = test_matrix(40, &mut rng);
        assert_eq!(a.symmetry_defect(), 0.0);
        let b: Vec<Complex64> = (0..40)
            .map(|_| Complex64::new(rng.random(), rng.random()))
            .collect();
        let f = EnvelopeLdlt::factor(&a).unwrap();
        let x = f.solve(&b);
        assert!(relative_residual(&a, &x, &b) < 1e-14);
        let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        for i in 0..40 {
            assert!((dense[i] - x[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn lu_nonsymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 3.0));
            if i + 1 < n {
                let s: f64 = rng.random_range(-1.0..1.0);
                trip.push((i, i + 1, -1.0 + s));
                trip.push((i + 1, i, -1.0 - s));
            }
            if i + 4 < n {
                trip.push((i, i + 4, 0.5));
                trip.push((i + 4, i, -0.5));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, trip);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = EnvelopeLu::factor(&a).unwrap().solve(&b);
        assert!(relative_residual(&a, &x, &b) < 1e-14);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeLdlt::factor(&a), Err(Error::SolverBreakdown(_))));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.values.len(), 2);
    }
}
