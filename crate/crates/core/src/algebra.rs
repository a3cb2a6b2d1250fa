//! Dense complex matrices on the 2^N-dimensional spin register and the
//! single-site spin operators embedded into it.
//!
//! Basis convention: the register state |a_1 a_2 ... a_N> has spin 1 (spin A)
//! as the most significant bit, so for three spins index 0 is |000>, index 1
//! is |001> and index 7 is |111>. User-facing labels are `index + 1`.
//! A bit value of 0 is the "up" state with S^z = +1/2; S^- maps |0> to |1>
//! and S^+ maps |1> to |0>. hbar = 1 throughout.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Square dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries; `data.len()` must be a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::arg(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    /// |i><j| in dimension `dim`.
    pub fn outer_basis(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    /// Largest entrywise modulus of `self - other`. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.max_abs_diff(other) <= tol
    }

    /// max |A - A^dagger| over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Replaces the matrix with (A + A^dagger) / 2.
    pub fn symmetrize(&mut self) {
        let n = self.dim;
        for r in 0..n {
            let d = self[(r, r)];
            self[(r, r)] = C64::new(d.re, 0.0);
            for c in r + 1..n {
                let avg = (self[(r, c)] + self[(c, r)].conj()) * 0.5;
                self[(r, c)] = avg;
                self[(c, r)] = avg.conj();
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim;
        (0..n).all(|r| (0..n).all(|c| r == c || self[(r, c)].norm() <= tol))
    }

    fn check_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::arg(format!(
                "dimension mismatch: {} vs {}",
                self.dim, rhs.dim
            )));
        }
        Ok(())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

// The operator impls panic on dimension mismatch; use the `checked_*`
// methods where the dimensions are not already known to agree.

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_mul(rhs).expect("matrix product")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_add(rhs).expect("matrix sum")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_sub(rhs).expect("matrix difference")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Standard Kronecker product; the result has dimension `a.dim() * b.dim()`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let mut out = ComplexMatrix::zeros(na * nb);
    for ar in 0..na {
        for ac in 0..na {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..nb {
                for bc in 0..nb {
                    out[(ar * nb + br, ac * nb + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// [a, b] = ab - ba
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.checked_mul(b)?.checked_sub(&b.checked_mul(a)?)
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.trace()
}

/// A computational basis state of an N-spin register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    n_spins: usize,
    index: usize,
}

impl BasisState {
    pub fn from_index(n_spins: usize, index: usize) -> Result<Self> {
        if n_spins == 0 || n_spins >= usize::BITS as usize || index >= 1 << n_spins {
            return Err(Error::arg(format!(
                "index {index} outside a {n_spins}-spin register"
            )));
        }
        Ok(Self { n_spins, index })
    }

    /// 1-based decimal label, `|1> = |000>`.
    pub fn from_label(n_spins: usize, label: usize) -> Result<Self> {
        if label == 0 {
            return Err(Error::arg("state labels start at 1"));
        }
        Self::from_index(n_spins, label - 1)
    }

    /// Parses a bit string such as "010" (leftmost = spin 1).
    pub fn from_bits(bits: &str) -> Result<Self> {
        let mut index = 0;
        for ch in bits.chars() {
            index = (index << 1)
                | match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::arg(format!("bad bit '{ch}' in {bits:?}"))),
                };
        }
        Self::from_index(bits.len(), index)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn label(&self) -> usize {
        self.index + 1
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Bit value of spin `k` (1-based).
    pub fn bit(&self, k: usize) -> u8 {
        ((self.index >> (self.n_spins - k)) & 1) as u8
    }

    pub fn bits(&self) -> Vec<u8> {
        (1..=self.n_spins).map(|k| self.bit(k)).collect()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = self.bits().iter().map(|b| char::from(b'0' + b)).collect();
        write!(f, "|{bits}>")
    }
}

/// Bit mask selecting spin `k` (1-based) in a register index.
pub fn site_mask(k: usize, n_spins: usize) -> usize {
    1 << (n_spins - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinOp {
    Z,
    Plus,
    Minus,
}

fn single_site(kind: SpinOp) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    match kind {
        SpinOp::Z => {
            m[(0, 0)] = C64::new(0.5, 0.0);
            m[(1, 1)] = C64::new(-0.5, 0.0);
        }
        // S^+|1> = |0>
        SpinOp::Plus => m[(0, 1)] = ONE,
        // S^-|0> = |1>
        SpinOp::Minus => m[(1, 0)] = ONE,
    }
    m
}

/// Embeds the single-spin operator `kind` at site `k` (1-based) of an
/// `n_spins` register, identities elsewhere.
pub fn spin_operator(kind: SpinOp, k: usize, n_spins: usize) -> Result<ComplexMatrix> {
    if k == 0 || k > n_spins {
        return Err(Error::arg(format!("spin index {k} outside 1..={n_spins}")));
    }
    let id = ComplexMatrix::identity(2);
    let local = single_site(kind);
    let mut out = ComplexMatrix::identity(1);
    for site in 1..=n_spins {
        out = kron(&out, if site == k { &local } else { &id });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_matrix(dim: usize, seed: u64) -> ComplexMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..dim * dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::from_row_major(data).unwrap()
    }

    #[test]
    fn single_spin_z() {
        let z = spin_operator(SpinOp::Z, 1, 1).unwrap();
        assert_eq!(z, ComplexMatrix::from_diag(&[c(0.5), c(-0.5)]));
    }

    #[test]
    fn lowering_on_last_site_maps_000_to_001() {
        let m = spin_operator(SpinOp::Minus, 3, 3).unwrap();
        for r in 0..8 {
            let expected = if r == 1 { ONE } else { ZERO };
            assert_eq!(m[(r, 0)], expected);
        }
    }

    #[test]
    fn raising_adjoint_is_lowering_exhaustive() {
        for n in 1..=4 {
            for k in 1..=n {
                let p = spin_operator(SpinOp::Plus, k, n).unwrap();
                let m = spin_operator(SpinOp::Minus, k, n).unwrap();
                assert_eq!(p.adjoint(), m, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn out_of_range_site_rejected() {
        assert!(spin_operator(SpinOp::Z, 0, 3).is_err());
        assert!(spin_operator(SpinOp::Z, 4, 3).is_err());
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let z = ComplexMatrix::from_diag(&[c(1.0), c(-1.0)]);
        assert_eq!(
            kron(&z, &i2),
            ComplexMatrix::from_diag(&[c(1.0), c(1.0), c(-1.0), c(-1.0)])
        );
    }

    #[test]
    fn kron_mixed_product() {
        for seed in 0..5 {
            let a = random_matrix(2, seed);
            let b = random_matrix(2, seed + 100);
            let cm = random_matrix(2, seed + 200);
            let d = random_matrix(2, seed + 300);
            let lhs = &kron(&a, &b) * &kron(&cm, &d);
            let rhs = kron(&(&a * &cm), &(&b * &d));
            assert!(lhs.approx_eq(&rhs, 1e-12));
        }
    }

    #[test]
    fn commutator_trace_adjoint() {
        let a = random_matrix(4, 1);
        assert!(commutator(&a, &a).unwrap().max_abs() == 0.0);
        assert_eq!(trace(&ComplexMatrix::identity(8)), c(8.0));
        assert_eq!(adjoint(&adjoint(&a)), a);
        assert!(commutator(&a, &ComplexMatrix::identity(2)).is_err());
    }

    #[test]
    fn completeness_and_commutation() {
        let n = 3;
        let id = ComplexMatrix::identity(8);
        for k in 1..=n {
            let p = spin_operator(SpinOp::Plus, k, n).unwrap();
            let m = spin_operator(SpinOp::Minus, k, n).unwrap();
            assert_eq!(&(&p * &m) + &(&m * &p), id);
            assert!(spin_operator(SpinOp::Z, k, n).unwrap().is_diagonal(0.0));
        }
        let kinds = [SpinOp::Z, SpinOp::Plus, SpinOp::Minus];
        for j in 1..=n {
            for k in 1..=n {
                for &a in &kinds {
                    for &b in &kinds {
                        if j == k && !(a == SpinOp::Z && b == SpinOp::Z) {
                            continue;
                        }
                        let sa = spin_operator(a, j, n).unwrap();
                        let sb = spin_operator(b, k, n).unwrap();
                        assert_eq!(commutator(&sa, &sb).unwrap().max_abs(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn basis_state_labels() {
        let s = BasisState::from_bits("010").unwrap();
        assert_eq!(s.index(), 2);
        assert_eq!(s.label(), 3);
        assert_eq!(s.bit(1), 0);
        assert_eq!(s.bit(2), 1);
        assert_eq!(s.to_string(), "|010>");
        assert_eq!(BasisState::from_label(3, 8).unwrap().bits(), vec![1, 1, 1]);
        assert!(BasisState::from_label(3, 9).is_err());
        assert!(BasisState::from_label(3, 0).is_err());
    }

    #[test]
    fn symmetrize_produces_hermitian() {
        let mut a = random_matrix(8, 9);
        assert!(a.hermitian_deviation() > 0.1);
        a.symmetrize();
        assert!(a.hermitian_deviation() < 1e-15);
    }
}
