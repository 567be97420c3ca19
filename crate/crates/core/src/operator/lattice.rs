//! Anderson Hamiltonians on boxes of `Z^d`, `d in {1, 2}`, with Dirichlet restriction.

use num_complex::Complex;

use super::{Hamiltonian, ModelTag};
use crate::error::{invalid, Error, Result};
use crate::linalg::SymMatrix;
use crate::scalar::Real;

/// A box of `side^dims` lattice sites. Site `x` has coordinates `(x % side, x / side)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBox {
    dims: usize,
    side: usize,
}

impl LatticeBox {
    pub fn new(dims: usize, side: usize) -> Result<Self> {
        if !(1..=2).contains(&dims) {
            return Err(invalid(format!("lattice dimension {dims} must be 1 or 2")));
        }
        if side == 0 {
            return Err(invalid("box side must be positive"));
        }
        Ok(Self { dims, side })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn volume(&self) -> usize {
        self.side.pow(self.dims as u32)
    }

    pub fn coords(&self, x: usize) -> [usize; 2] {
        [x % self.side, x / self.side]
    }

    /// Nearest neighbours of `x` inside the box.
    pub fn neighbours(&self, x: usize) -> Vec<usize> {
        let [i, j] = self.coords(x);
        let s = self.side;
        let mut out = Vec::with_capacity(4);
        if i > 0 {
            out.push(x - 1);
        }
        if i + 1 < s {
            out.push(x + 1);
        }
        if self.dims == 2 {
            if j > 0 {
                out.push(x - s);
            }
            if j + 1 < s {
                out.push(x + s);
            }
        }
        out
    }

    /// Sites within `width` lattice steps of the complement of the box.
    pub fn wall_sites(&self, width: usize) -> usize {
        let s = self.side;
        let inner = s.saturating_sub(2 * width);
        self.volume() - inner.pow(self.dims as u32)
    }
}

/// Adjacency of the box plus `disorder * omega(x)` on the diagonal.
pub fn assemble_lattice<T: Real>(
    dims: usize,
    side: usize,
    disorder: T,
    omega: &[T],
) -> Result<Hamiltonian<T>> {
    let b = LatticeBox::new(dims, side)?;
    let size = b.volume();
    if omega.len() != size {
        return Err(Error::DimensionMismatch { expected: size, got: omega.len() });
    }
    let mut matrix = SymMatrix::zeros(size);
    for x in 0..size {
        matrix.set(x, x, disorder * omega[x]);
        for y in b.neighbours(x) {
            matrix.set(x, y, T::one());
        }
    }
    Ok(Hamiltonian {
        sites: (0..size).collect(),
        matrix,
        meta: ModelTag::Lattice { dims, side, disorder: disorder.to_f64().unwrap_or(f64::NAN) },
        omega: omega.to_vec(),
    })
}

/// Column `x` of `(H - z)^{-1}` for the chain with diagonal `diag` and unit hopping.
///
/// Uses the continued-fraction ratios `G(j, x) / G(j -+ 1, x)` from both ends, O(L).
pub fn chain_green_column<T: Real>(diag: &[T], x: usize, z: Complex<T>) -> Result<Vec<Complex<T>>> {
    let len = diag.len();
    if x >= len {
        return Err(invalid(format!("site {x} outside a chain of {len} sites")));
    }
    if z.im == T::zero() {
        return Err(invalid("resolvent needs Im z != 0"));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let shifted = |j: usize| Complex::new(diag[j], T::zero()) - z;
    // left[j] = G(j, x) / G(j + 1, x) for j < x.
    let mut left = vec![zero; len];
    for j in 0..x {
        let prev = if j == 0 { zero } else { left[j - 1] };
        left[j] = -(shifted(j) + prev).inv();
    }
    // right[j] = G(j, x) / G(j - 1, x) for j > x.
    let mut right = vec![zero; len];
    for j in (x + 1..len).rev() {
        let next = if j + 1 == len { zero } else { right[j + 1] };
        right[j] = -(shifted(j) + next).inv();
    }
    let l = if x == 0 { zero } else { left[x - 1] };
    let r = if x + 1 == len { zero } else { right[x + 1] };
    let mut col = vec![zero; len];
    col[x] = (shifted(x) + l + r).inv();
    for j in (0..x).rev() {
        col[j] = col[j + 1] * left[j];
    }
    for j in x + 1..len {
        col[j] = col[j - 1] * right[j];
    }
    Ok(col)
}

/// Diagonal of `(H - z)^{-1}` for the chain with diagonal `diag` and hopping `off`.
pub fn chain_green_diag<T: Real>(diag: &[T], off: &[T], z: Complex<T>) -> Result<Vec<Complex<T>>> {
    let len = diag.len();
    if off.len() + 1 != len.max(1) {
        return Err(Error::DimensionMismatch { expected: len.saturating_sub(1), got: off.len() });
    }
    if z.im == T::zero() {
        return Err(invalid("resolvent needs Im z != 0"));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let shifted = |j: usize| Complex::new(diag[j], T::zero()) - z;
    // Self-energies from the left and right halves: a_j sums sites < j, b_j sites > j.
    let mut a = vec![zero; len];
    for j in 1..len {
        a[j] = (shifted(j - 1) - a[j - 1]).inv() * (off[j - 1] * off[j - 1]);
    }
    let mut b = vec![zero; len];
    for j in (0..len.saturating_sub(1)).rev() {
        b[j] = (shifted(j + 1) - b[j + 1]).inv() * (off[j] * off[j]);
    }
    Ok((0..len).map(|j| (shifted(j) - a[j] - b[j]).inv()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_graph_examples() {
        let h = assemble_lattice(1, 2, 0.0, &[0.3, 0.7]).unwrap();
        assert_eq!(h.matrix().as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        let h = assemble_lattice(1, 3, 1.0, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(h.matrix().as_slice(), &[1.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 3.0]);
    }

    #[test]
    fn square_has_two_neighbours_per_site() {
        let h = assemble_lattice(2, 2, 0.0, &[0.0; 4]).unwrap();
        for x in 0..4 {
            assert_eq!(h.matrix().row(x).iter().sum::<f64>(), 2.0);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            assemble_lattice(1, 3, 1.0, &[0.0; 2]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(assemble_lattice(3, 2, 1.0, &[0.0; 8]).is_err());
    }

    #[test]
    fn free_chain_spectrum() {
        let l = 20;
        let h = assemble_lattice(1, l, 0.0, &vec![0.0; l]).unwrap();
        let es = h.eigen(false).unwrap();
        for (j, v) in es.values().iter().enumerate() {
            let want = -2.0 * (std::f64::consts::PI * (j + 1) as f64 / (l + 1) as f64).cos();
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn wall_counts() {
        let b = LatticeBox::new(1, 16).unwrap();
        assert_eq!(b.wall_sites(3), 6);
        let b = LatticeBox::new(2, 10).unwrap();
        assert_eq!(b.wall_sites(2), 100 - 36);
        assert_eq!(b.wall_sites(9), 100);
    }

    #[test]
    fn chain_diag_matches_inverse_with_cut_bonds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let l = 25;
        let w: Vec<f64> = (0..l).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut off = vec![1.0; l - 1];
        off[9] = 0.0;
        let mut m = SymMatrix::from_diagonal(&w);
        for (i, &o) in off.iter().enumerate() {
            m.set(i, i + 1, o);
        }
        let z = Complex::new(-0.3, 0.05);
        let inv = ComplexMatrix::shifted(&m, z).inverse().unwrap();
        let d = chain_green_diag(&w, &off, z).unwrap();
        for x in 0..l {
            assert!((d[x] - inv.get(x, x)).norm() < 1e-9 * (1.0 + inv.get(x, x).norm()));
        }
    }

    #[test]
    fn chain_green_matches_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = 30;
        let w: Vec<f64> = (0..l).map(|_| rng.random_range(-2.0..2.0)).collect();
        let h = assemble_lattice(1, l, 1.0, &w).unwrap();
        let z = Complex::new(0.5, 0.01);
        let inv = ComplexMatrix::shifted(h.matrix(), z).inverse().unwrap();
        for &x in &[0, 7, 29] {
            let col = chain_green_column(&w, x, z).unwrap();
            for y in 0..l {
                assert!((col[y] - inv.get(y, x)).norm() < 1e-9 * (1.0 + inv.get(y, x).norm()));
            }
        }
    }
}
