//! Finite-volume Hamiltonians and spectral oracles for the hierarchical Laplacian.

mod hierfast;
mod lattice;

use num_complex::Complex;

pub use hierfast::{HierResolvent, HierStructure};
pub use lattice::{assemble_lattice, chain_green_column, chain_green_diag, LatticeBox};

use crate::error::{invalid, Error, Result};
use crate::geom::{CouplingSequence, HierGeometry};
use crate::linalg::{EigenSystem, SymMatrix};
use crate::scalar::Real;

/// Which model a matrix was assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelTag {
    /// `sum_{s<=trunc} p_s E_s + V` on the ball `B(0, k)`.
    Hierarchical { n: usize, k: usize, trunc: usize },
    /// Dirichlet restriction of adjacency plus `disorder * omega` to a box.
    Lattice { dims: usize, side: usize, disorder: f64 },
}

/// Dense finite-volume random Schrödinger operator.
#[derive(Debug, Clone)]
pub struct Hamiltonian<T> {
    sites: Vec<usize>,
    matrix: SymMatrix<T>,
    meta: ModelTag,
    omega: Vec<T>,
}

impl<T: Real> Hamiltonian<T> {
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn matrix(&self) -> &SymMatrix<T> {
        &self.matrix
    }

    pub fn meta(&self) -> ModelTag {
        self.meta
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn eigen(&self, want_vectors: bool) -> Result<EigenSystem<T>> {
        crate::linalg::symmetric_eigen(&self.matrix, want_vectors)
    }
}

/// The eigenvalue with 0-based index `i`, by bisection on an eigenvalue counting
/// function. Requires `count(lo) <= i < count(hi)`.
pub fn bisect_eigenvalue<T: Real>(
    mut count_below: impl FnMut(T) -> Result<usize>,
    i: usize,
    mut lo: T,
    mut hi: T,
) -> Result<T> {
    let two = T::lit(2.0);
    for _ in 0..256 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if hi - lo <= two * T::epsilon() * lo.abs().max(hi.abs()) {
            break;
        }
        if count_below(mid)? > i {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / two)
}

/// Dense matrix of `sum_{s=1}^{trunc} p_s E_s + V_omega` restricted to `B(0, k)`.
///
/// Entries come from the closed form: for `x != y` the entry is
/// `sum_{s = d(x,y)}^{trunc} p_s n^{-s}` and the diagonal adds `omega(x)` to the full
/// sum from `s = 1`. With `trunc < k` the matrix splits into `n^{k-trunc}` blocks.
pub fn assemble_hierarchical<T: Real>(
    geom: &HierGeometry,
    coup: &CouplingSequence<T>,
    trunc: usize,
    omega: &[T],
    k: usize,
) -> Result<Hamiltonian<T>> {
    if k > geom.k_max() {
        return Err(invalid(format!("volume radius k={k} exceeds k_max={}", geom.k_max())));
    }
    if trunc > k {
        return Err(invalid(format!("truncation {trunc} exceeds volume radius {k}")));
    }
    if trunc > coup.k_max() {
        return Err(invalid(format!(
            "truncation {trunc} exceeds coupling length {}",
            coup.k_max()
        )));
    }
    let n = geom.n();
    let size = geom.ball_size(k);
    if omega.len() != size {
        return Err(Error::DimensionMismatch { expected: size, got: omega.len() });
    }
    // level_sum[s] = sum_{t=s}^{trunc} p_t n^{-t}, with level_sum[trunc + 1] = 0.
    let mut level_sum = vec![T::zero(); trunc + 2];
    for s in (1..=trunc).rev() {
        level_sum[s] = level_sum[s + 1] + coup.level_weight(s, n);
    }
    let matrix = SymMatrix::from_upper_fn(size, |x, y| {
        if x == y {
            omega[x] + level_sum[1]
        } else {
            let d = geom.distance(x, y);
            if d <= trunc {
                level_sum[d]
            } else {
                T::zero()
            }
        }
    });
    Ok(Hamiltonian {
        sites: (0..size).collect(),
        matrix,
        meta: ModelTag::Hierarchical { n, k, trunc },
        omega: omega.to_vec(),
    })
}

/// Spectrum of the hierarchical Laplacian on `B(0, k)` as `(eigenvalue, multiplicity)`:
/// `lambda_r` with multiplicity `n^{k-r} - n^{k-r-1}` for `r < k`, and `lambda_k` once.
pub fn laplacian_spectrum_closed_form<T: Real>(
    n: usize,
    k: usize,
    coup: &CouplingSequence<T>,
) -> Result<Vec<(T, usize)>> {
    if k > coup.k_max() {
        return Err(invalid(format!("k={k} exceeds coupling length {}", coup.k_max())));
    }
    let mut out: Vec<(T, usize)> = (0..k)
        .map(|r| (coup.lambda(r), n.pow((k - r) as u32) - n.pow((k - r - 1) as u32)))
        .collect();
    out.push((coup.lambda(k), 1));
    Ok(out)
}

/// Diagonal resolvent entries `<delta_x, (H - z)^{-1} delta_x> = sum_i v_i(x)^2 / (e_i - z)`.
pub fn resolvent_diag<T: Real>(es: &EigenSystem<T>, z: Complex<T>) -> Result<Vec<Complex<T>>> {
    if z.im == T::zero() {
        return Err(invalid("resolvent needs Im z != 0"));
    }
    if !es.has_vectors() {
        return Err(Error::MissingEigenvectors);
    }
    let n = es.dim();
    let poles: Vec<Complex<T>> = es
        .values()
        .iter()
        .map(|&e| (Complex::new(e, T::zero()) - z).inv())
        .collect();
    (0..n)
        .map(|x| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (j, pole) in poles.iter().enumerate() {
                let v = es.component(x, j)?;
                acc += pole * (v * v);
            }
            Ok(acc)
        })
        .collect()
}

/// Infinite-volume diagonal Green function of the hierarchical Laplacian at `w`:
/// masses `n^{-r}(1 - 1/n)` at `lambda_r` for `r <= terms`, remaining mass at 1.
pub fn free_green_hier<T: Real>(
    coup: &CouplingSequence<T>,
    n: usize,
    w: Complex<T>,
    terms: usize,
) -> Result<Complex<T>> {
    if w.im == T::zero() {
        return Err(invalid("free Green function needs Im w != 0"));
    }
    if terms > coup.k_max() {
        return Err(invalid(format!("terms={terms} exceeds coupling length {}", coup.k_max())));
    }
    let nf = T::from_usize_lossy(n);
    let keep = T::one() - nf.recip();
    let mut acc = Complex::new(T::zero(), T::zero());
    for r in 0..=terms {
        let mass = nf.powi(-(r as i32)) * keep;
        acc += (Complex::new(coup.lambda(r), T::zero()) - w).inv() * mass;
    }
    let rest = nf.powi(-(terms as i32) - 1);
    acc += (Complex::new(T::one(), T::zero()) - w).inv() * rest;
    Ok(acc)
}

/// `<delta_0, (Delta_k - w)^{-1} delta_0>` for the Laplacian truncated at radius `k`.
pub fn finite_free_green<T: Real>(
    coup: &CouplingSequence<T>,
    n: usize,
    k: usize,
    w: Complex<T>,
) -> Result<Complex<T>> {
    if w.im == T::zero() {
        return Err(invalid("free Green function needs Im w != 0"));
    }
    if k > coup.k_max() {
        return Err(invalid(format!("k={k} exceeds coupling length {}", coup.k_max())));
    }
    let nf = T::from_usize_lossy(n);
    let mut acc = Complex::new(T::zero(), T::zero());
    for r in 0..k {
        let mass = nf.powi(-(r as i32)) - nf.powi(-(r as i32) - 1);
        acc += (Complex::new(coup.lambda(r), T::zero()) - w).inv() * mass;
    }
    acc += (Complex::new(coup.lambda(k), T::zero()) - w).inv() * nf.powi(-(k as i32));
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_operator_norm, symmetric_eigen, ComplexMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coup(rho: f64, k: usize) -> CouplingSequence<f64> {
        CouplingSequence::geometric(rho, k).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn two_site_laplacian_entries() {
        let g = HierGeometry::new(2, 1).unwrap();
        let h = assemble_hierarchical(&g, &coup(2.0, 1), 1, &[0.0, 0.0], 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h.matrix().get(i, j) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn far_entry_is_single_level_term() {
        let g = HierGeometry::new(2, 2).unwrap();
        let h = assemble_hierarchical(&g, &coup(2.0, 2), 2, &[0.0; 4], 2).unwrap();
        assert!((h.matrix().get(0, 3) - 1.0 / 16.0).abs() < 1e-15);
        assert!((h.matrix().get(0, 1) - (0.25 + 1.0 / 16.0)).abs() < 1e-15);
    }

    #[test]
    fn truncation_gives_block_diagonal() {
        let g = HierGeometry::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        let h = assemble_hierarchical(&g, &coup(2.0, 3), 2, &w, 3).unwrap();
        for x in 0..8 {
            for y in 0..8 {
                if g.distance(x, y) > 2 {
                    assert_eq!(h.matrix().get(x, y), 0.0);
                } else {
                    assert!(h.matrix().get(x, y) != 0.0);
                }
            }
        }
    }

    #[test]
    fn assembly_errors() {
        let g = HierGeometry::new(2, 3).unwrap();
        assert!(matches!(
            assemble_hierarchical(&g, &coup(2.0, 3), 1, &[0.0; 3], 2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(assemble_hierarchical(&g, &coup(2.0, 3), 3, &[0.0; 4], 2).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let cf = laplacian_spectrum_closed_form(2, 2, &coup(2.0, 2)).unwrap();
        assert_eq!(cf, vec![(0.0, 2), (0.5, 1), (0.75, 1)]);
        let cf1 = laplacian_spectrum_closed_form(2, 1, &coup(8.0, 1)).unwrap();
        assert_eq!(cf1, vec![(0.0, 1), (0.875, 1)]);
        let total: usize = laplacian_spectrum_closed_form(3, 4, &coup(8.0, 4))
            .unwrap()
            .iter()
            .map(|p| p.1)
            .sum();
        assert_eq!(total, 81);
    }

    /// Groups sorted eigenvalues into clusters separated by more than `tol`.
    fn cluster(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &v in values {
            match out.last_mut() {
                Some((c, m)) if (v - *c).abs() <= tol => *m += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }

    #[test]
    fn dense_laplacian_matches_closed_form() {
        for &n in &[2usize, 3] {
            for k in 1..=4 {
                for &rho in &[2.0, 8.0] {
                    let cp = coup(rho, k);
                    let g = HierGeometry::new(n, k).unwrap();
                    let zeros = vec![0.0; g.volume()];
                    let h = assemble_hierarchical(&g, &cp, k, &zeros, k).unwrap();
                    let es = h.eigen(false).unwrap();
                    let got = cluster(es.values(), 1e-8);
                    let want = laplacian_spectrum_closed_form(n, k, &cp).unwrap();
                    assert_eq!(got.len(), want.len());
                    for ((gv, gm), (wv, wm)) in got.iter().zip(&want) {
                        assert!((gv - wv).abs() < 1e-10, "n={n} k={k} rho={rho}");
                        assert_eq!(gm, wm);
                    }
                }
            }
        }
    }

    #[test]
    fn resolvent_diag_scalar_and_diagonal_cases() {
        let es = symmetric_eigen(&SymMatrix::from_diagonal(&[0.0]), true).unwrap();
        let g = resolvent_diag(&es, c(0.0, 1.0)).unwrap();
        assert!((g[0] - c(0.0, 1.0)).norm() < 1e-15);

        let es = symmetric_eigen(&SymMatrix::from_diagonal(&[1.0, 2.0]), true).unwrap();
        let g = resolvent_diag(&es, c(1.0, 1.0)).unwrap();
        assert!((g[0] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((g[1] - c(0.5, 0.5)).norm() < 1e-15);

        assert!(resolvent_diag(&es, c(1.0, 0.0)).is_err());
        let no_vec = symmetric_eigen(&SymMatrix::from_diagonal(&[1.0]), false).unwrap();
        assert_eq!(resolvent_diag(&no_vec, c(0.0, 1.0)), Err(Error::MissingEigenvectors));
    }

    #[test]
    fn resolvent_diag_matches_direct_solve() {
        let g = HierGeometry::new(2, 2).unwrap();
        let h = assemble_hierarchical(&g, &coup(2.0, 2), 2, &[0.0; 4], 2).unwrap();
        let z = c(0.3, 0.1);
        let es = h.eigen(true).unwrap();
        let diag = resolvent_diag(&es, z).unwrap();
        let inv = ComplexMatrix::shifted(h.matrix(), z).inverse().unwrap();
        for x in 0..4 {
            assert!((diag[x] - inv.get(x, x)).norm() < 1e-10);
        }
        let im_sum: f64 = diag.iter().map(|v| v.im).sum();
        let im_tr: f64 = es.values().iter().map(|&e| (c(e, 0.0) - z).inv().im).sum();
        assert!((im_sum - im_tr).abs() < 1e-12);
        assert!(diag.iter().all(|v| v.im > 0.0));
    }

    #[test]
    fn free_green_two_mass_identity() {
        let cp = coup(2.0, 4);
        let w = c(0.0, 1.0);
        let got = free_green_hier(&cp, 2, w, 0).unwrap();
        let want = c(0.5, 0.0) / (c(0.0, 0.0) - w) + c(0.5, 0.0) / (c(1.0, 0.0) - w);
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn free_green_is_herglotz() {
        let cp = coup(8.0, 12);
        for &e in &[-1.0, 0.0, 0.3, 0.875, 1.0, 2.0] {
            for &eps in &[1e-3, 0.1, 1.0] {
                assert!(free_green_hier(&cp, 2, c(e, eps), 12).unwrap().im > 0.0);
            }
        }
    }

    #[test]
    fn free_green_matches_finite_volume_trace() {
        let k = 8;
        let cp = coup(8.0, k);
        let g = HierGeometry::new(2, k).unwrap();
        let h = assemble_hierarchical(&g, &cp, k, &vec![0.0; 256], k).unwrap();
        let z = c(0.5, 0.01);
        let es = h.eigen(false).unwrap();
        let tr: Complex<f64> =
            es.values().iter().map(|&e| (c(e, 0.0) - z).inv()).sum::<Complex<f64>>() / 256.0;
        let free = free_green_hier(&cp, 2, z, k).unwrap();
        assert!((tr - free).norm() < 1e-3);
        let finite = finite_free_green(&cp, 2, k, z).unwrap();
        assert!((tr - finite).norm() < 1e-10);
    }

    #[test]
    fn spectrum_lies_in_shifted_support_bands() {
        let (a, b) = (0.0, 0.05);
        let k = 5;
        let cp = coup(8.0, k);
        let g = HierGeometry::new(2, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let w: Vec<f64> = (0..32).map(|_| rng.random_range(a..b)).collect();
            let h = assemble_hierarchical(&g, &cp, k, &w, k).unwrap();
            for &ev in h.eigen(false).unwrap().values() {
                let inside = (0..=k).any(|r| {
                    let l = cp.lambda(r);
                    ev >= l + a - 1e-12 && ev <= l + b + 1e-12
                });
                assert!(inside, "eigenvalue {ev} outside bands");
            }
        }
    }

    #[test]
    fn resolvent_telescoping_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = 5;
        let cp = coup(2.0, k);
        let g = HierGeometry::new(2, k).unwrap();
        let w: Vec<f64> = (0..32).map(|_| rng.random_range(0.0..1.0)).collect();
        let z = c(0.4, 0.2);
        let res: Vec<ComplexMatrix<f64>> = (0..=k)
            .map(|r| {
                let h = assemble_hierarchical(&g, &cp, r, &w, k).unwrap();
                ComplexMatrix::shifted(h.matrix(), z).inverse().unwrap()
            })
            .collect();
        let inv_im2 = z.im.powi(-2);
        for r in 1..=k {
            let d = complex_operator_norm(&res[r - 1].sub(&res[r])).unwrap();
            assert!(d <= inv_im2 * cp.p(r) * (1.0 + 1e-9));
        }
        for r in 0..k {
            let d = complex_operator_norm(&res[r].sub(&res[k])).unwrap();
            assert!(d <= inv_im2 * cp.partial(r, k) * (1.0 + 1e-9));
        }
    }
}
