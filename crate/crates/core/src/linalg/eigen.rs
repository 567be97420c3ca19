//! Symmetric eigensolver: Householder tridiagonalization followed by implicitly
//! shifted QL iterations (the EISPACK `tred2`/`tql2` pair).

use super::matrix::SymMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-eigenvalue cap on QL sweeps.
pub const MAX_QL_ITERATIONS: usize = 64;

/// Ascending eigenvalues, optionally with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    values: Vec<T>,
    /// Row-major `n x n`; column `j` is the eigenvector of `values[j]`.
    vectors: Option<Vec<T>>,
    residual_sup: Option<T>,
}

impl<T: Real> EigenSystem<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }

    /// `v_j(x)`.
    pub fn component(&self, x: usize, j: usize) -> Result<T> {
        let n = self.dim();
        self.vectors
            .as_ref()
            .map(|v| v[x * n + j])
            .ok_or(Error::MissingEigenvectors)
    }

    pub fn vector(&self, j: usize) -> Result<Vec<T>> {
        let n = self.dim();
        let v = self.vectors.as_ref().ok_or(Error::MissingEigenvectors)?;
        Ok((0..n).map(|x| v[x * n + j]).collect())
    }

    /// `max_j ||H v_j - e_j v_j||_inf`, recorded when vectors are kept.
    pub fn residual_sup(&self) -> Option<T> {
        self.residual_sup
    }

    /// Largest `|<v_i, v_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> Result<T> {
        let n = self.dim();
        let v = self.vectors.as_ref().ok_or(Error::MissingEigenvectors)?;
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                let mut dot = T::zero();
                for x in 0..n {
                    dot += v[x * n + i] * v[x * n + j];
                }
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        Ok(worst)
    }
}

/// Full spectrum of a symmetric matrix; eigenvectors on request.
pub fn symmetric_eigen<T: Real>(h: &SymMatrix<T>, want_vectors: bool) -> Result<EigenSystem<T>> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let mut v = h.as_slice().to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e, want_vectors);
    tql2(n, &mut d, &mut e, want_vectors.then_some(v.as_mut_slice()))?;
    let vectors = want_vectors.then_some(v);
    let mut es = sort_system(n, d, vectors);
    if want_vectors {
        es.residual_sup = Some(residual(h, &es));
    }
    Ok(es)
}

/// Spectrum of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T], want_vectors: bool) -> Result<EigenSystem<T>> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n.saturating_sub(1), got: off.len() });
    }
    let mut d = diag.to_vec();
    // tql2 expects the subdiagonal in e[1..n].
    let mut e = vec![T::zero(); n];
    e[1..].copy_from_slice(off);
    let mut v = want_vectors.then(|| {
        let mut id = vec![T::zero(); n * n];
        for i in 0..n {
            id[i * n + i] = T::one();
        }
        id
    });
    tql2(n, &mut d, &mut e, v.as_deref_mut())?;
    Ok(sort_system(n, d, v))
}

/// Sturm count of eigenvalues strictly below `x` for a symmetric tridiagonal matrix.
pub fn tridiagonal_count_below<T: Real>(diag: &[T], off: &[T], x: T) -> usize {
    let pivmin = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = T::one();
    for i in 0..diag.len() {
        let coupling = if i == 0 { T::zero() } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { T::zero() } else { coupling / q };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

fn sort_system<T: Real>(n: usize, d: Vec<T>, vectors: Option<Vec<T>>) -> EigenSystem<T> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = vectors.map(|v| {
        let mut sorted = vec![T::zero(); n * n];
        for (new, &old) in order.iter().enumerate() {
            for x in 0..n {
                sorted[x * n + new] = v[x * n + old];
            }
        }
        sorted
    });
    EigenSystem { values, vectors, residual_sup: None }
}

fn residual<T: Real>(h: &SymMatrix<T>, es: &EigenSystem<T>) -> T {
    let n = h.dim();
    let mut worst = T::zero();
    for j in 0..n {
        let vj = es.vector(j).expect("vectors present");
        let hv = h.mul_vec(&vj);
        for x in 0..n {
            worst = worst.max((hv[x] - es.values[j] * vj[x]).abs());
        }
    }
    worst
}

/// Householder reduction to tridiagonal form. On exit `d` holds the diagonal, `e[1..]`
/// the subdiagonal, and `v` the accumulated orthogonal transform when requested.
fn tred2<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T], accumulate: bool) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
                v[idx(j, i)] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..n - 1 {
            v[idx(n - 1, i)] = v[idx(i, i)];
            v[idx(i, i)] = T::one();
            let h = d[i + 1];
            if h != T::zero() {
                for k in 0..=i {
                    d[k] = v[idx(k, i + 1)] / h;
                }
                for j in 0..=i {
                    let mut g = T::zero();
                    for k in 0..=i {
                        g += v[idx(k, i + 1)] * v[idx(k, j)];
                    }
                    for k in 0..=i {
                        v[idx(k, j)] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                v[idx(k, i + 1)] = T::zero();
            }
        }
        for j in 0..n {
            d[j] = v[idx(n - 1, j)];
            v[idx(n - 1, j)] = T::zero();
        }
        v[idx(n - 1, n - 1)] = T::one();
    } else {
        // The reduced diagonal is left on the diagonal of the work array.
        for j in 0..n {
            d[j] = v[idx(j, j)];
        }
    }
    e[0] = T::zero();
}

/// Implicit QL with Wilkinson-type shifts on the tridiagonal `(d, e[1..])`.
fn tql2<T: Real>(n: usize, d: &mut [T], e: &mut [T], mut v: Option<&mut [T]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let eps = T::epsilon();
    let two = T::lit(2.0);
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence { index: l, iterations: MAX_QL_ITERATIONS });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let hk = v[k * n + i + 1];
                            v[k * n + i + 1] = s * v[k * n + i] + c * hk;
                            v[k * n + i] = c * v[k * n + i] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymMatrix::from_upper_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn two_by_two() {
        let h = SymMatrix::<f64>::from_packed_upper(2, &[0.0, 1.0, 0.0]).unwrap();
        let es = symmetric_eigen(&h, true).unwrap();
        assert!((es.values()[0] + 1.0).abs() < 1e-15);
        assert!((es.values()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_gives_sorted_entries() {
        let w = [0.3, -1.2, 2.5, 0.0, 0.3];
        let es = symmetric_eigen(&SymMatrix::from_diagonal(&w), false).unwrap();
        let mut sorted = w.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(es.values(), sorted.as_slice());
    }

    #[test]
    fn values_only_matches_vector_path() {
        for &n in &[1usize, 2, 3, 7, 40] {
            let h = random_sym(n, n as u64);
            let a = symmetric_eigen(&h, false).unwrap();
            let b = symmetric_eigen(&h, true).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-12, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn contract_on_random_matrices() {
        for &(n, seed) in &[(5usize, 1u64), (33, 2), (100, 3)] {
            let h = random_sym(n, seed);
            let es = symmetric_eigen(&h, true).unwrap();
            let scale = h.max_abs();
            assert!(es.residual_sup().unwrap() <= 1e-9 * scale);
            assert!(es.orthonormality_defect().unwrap() <= 1e-9);
            let tr: f64 = es.values().iter().sum();
            assert!((tr - h.trace()).abs() <= 1e-9 * n as f64 * scale);
            let discs = h.gershgorin();
            for &ev in es.values() {
                assert!(discs.iter().any(|&(lo, hi)| ev >= lo - 1e-12 && ev <= hi + 1e-12));
            }
        }
    }

    #[test]
    fn single_precision_instantiation() {
        let h = SymMatrix::<f32>::from_packed_upper(3, &[2.0, -1.0, 0.0, 2.0, -1.0, 2.0]).unwrap();
        let es = symmetric_eigen(&h, true).unwrap();
        let exact = [2.0 - 2f32.sqrt(), 2.0, 2.0 + 2f32.sqrt()];
        for (x, y) in es.values().iter().zip(exact) {
            assert!((x - y).abs() < 1e-5);
        }
        assert!(es.residual_sup().unwrap() < 1e-5);
    }

    #[test]
    fn tridiagonal_path_graph_spectrum() {
        let l = 9;
        let es = tridiagonal_eigen(&vec![0.0; l], &vec![1.0; l - 1], false).unwrap();
        for (j, &ev) in es.values().iter().enumerate() {
            let exact = 2.0 * (std::f64::consts::PI * (l - j) as f64 / (l + 1) as f64).cos();
            assert!((ev - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn sturm_count_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let off = vec![1.0; n - 1];
        let es = tridiagonal_eigen(&diag, &off, false).unwrap();
        for x in [-4.0, -1.3, 0.0, 0.77, 2.2, 5.0] {
            let brute = es.values().iter().filter(|&&v| v < x).count();
            assert_eq!(tridiagonal_count_below(&diag, &off, x), brute);
        }
    }

    #[test]
    fn missing_vectors_reported() {
        let es = symmetric_eigen(&random_sym(4, 9), false).unwrap();
        assert_eq!(es.vector(0), Err(Error::MissingEigenvectors));
    }
}
