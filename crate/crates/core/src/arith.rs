//! Exact arithmetic in `Z[1/3, ζ]` with `ζ = exp(2πi/9)`.
//!
//! Elements are stored as `(c0 + c1 ζ + … + c5 ζ⁵) / 3^k` and reduced with the
//! ninth cyclotomic polynomial `x⁶ + x³ + 1`. Every entry of every qutrit
//! Clifford+T unitary lives in this ring, so matrix and state equality can be
//! decided structurally.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Number of basis coordinates (degree of Φ₉).
pub const DEGREE: usize = 6;

/// An element of `Z[1/3, ζ₉]` in canonical form.
///
/// Canonical means either `denom_exp == 0` or at least one coefficient is
/// not divisible by three, so structural equality is value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycloNumber {
    coeffs: [BigInt; DEGREE],
    denom_exp: u32,
}

fn reduce_poly(mut raw: Vec<BigInt>) -> [BigInt; DEGREE] {
    // x^d = -x^(d-3) - x^(d-6) for d >= 6
    for d in (DEGREE..raw.len()).rev() {
        if raw[d].is_zero() {
            continue;
        }
        let c = std::mem::take(&mut raw[d]);
        raw[d - 3] -= &c;
        raw[d - 6] -= c;
    }
    raw.truncate(DEGREE);
    raw.try_into().expect("degree six")
}

impl CycloNumber {
    /// Builds and canonicalizes `(Σ coeffs[i] ζ^i) / 3^denom_exp`.
    pub fn new<I: Into<BigInt>>(coeffs: [I; DEGREE], denom_exp: u32) -> Self {
        Self::from_raw(coeffs.map(Into::into), denom_exp)
    }

    /// Same as [`CycloNumber::new`] for already-owned big integers.
    pub fn from_raw(coeffs: [BigInt; DEGREE], denom_exp: u32) -> Self {
        let mut x = CycloNumber { coeffs, denom_exp };
        x.normalize();
        x
    }

    pub fn zero() -> Self {
        CycloNumber {
            coeffs: Default::default(),
            denom_exp: 0,
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        let mut x = Self::zero();
        x.coeffs[0] = BigInt::from(n);
        x
    }

    /// `ζ^k`, with `k` taken mod 9.
    pub fn zeta_pow(k: i64) -> Self {
        Self::one().mul_zeta_pow(k)
    }

    /// `ω = ζ³`.
    pub fn omega() -> Self {
        Self::zeta_pow(3)
    }

    /// `-i/√3 = (ζ⁶ - ζ³)/3`, the prefactor of the qutrit Hadamard.
    pub fn hadamard_scale() -> Self {
        CycloNumber::new([-1, 0, 0, -2, 0, 0], 1)
    }

    pub fn coeffs(&self) -> &[BigInt; DEGREE] {
        &self.coeffs
    }

    pub fn denom_exp(&self) -> u32 {
        self.denom_exp
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.denom_exp == 0 && self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Zero::is_zero)
    }

    /// Restores the canonical-form invariant in place.
    pub fn normalize(&mut self) {
        if self.is_zero() {
            self.denom_exp = 0;
            return;
        }
        let three = BigInt::from(3);
        while self.denom_exp > 0 && self.coeffs.iter().all(|c| c.is_multiple_of(&three)) {
            for c in self.coeffs.iter_mut() {
                *c /= &three;
            }
            self.denom_exp -= 1;
        }
    }

    /// Consuming form of [`CycloNumber::normalize`].
    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    fn scaled_coeffs(&self, target_exp: u32) -> [BigInt; DEGREE] {
        debug_assert!(target_exp >= self.denom_exp);
        let factor = BigInt::from(3).pow(target_exp - self.denom_exp);
        if factor.is_one() {
            return self.coeffs.clone();
        }
        self.coeffs.clone().map(|c| c * &factor)
    }

    /// Multiplies by `ζ^k`. Pure coefficient shuffling, no normalization needed.
    pub fn mul_zeta_pow(&self, k: i64) -> Self {
        let k = k.rem_euclid(9) as usize;
        if k == 0 || self.is_zero() {
            return self.clone();
        }
        let mut raw = vec![BigInt::zero(); DEGREE + k];
        for (i, c) in self.coeffs.iter().enumerate() {
            raw[i + k] = c.clone();
        }
        // degree can reach 13
        let coeffs = reduce_poly(raw);
        CycloNumber {
            coeffs,
            denom_exp: self.denom_exp,
        }
    }

    /// Complex conjugation, the field automorphism `ζ ↦ ζ⁸`.
    pub fn conj(&self) -> Self {
        let mut raw = vec![BigInt::zero(); 9];
        raw[0] = self.coeffs[0].clone();
        for i in 1..DEGREE {
            raw[9 - i] = self.coeffs[i].clone();
        }
        CycloNumber {
            coeffs: reduce_poly(raw),
            denom_exp: self.denom_exp,
        }
    }

    /// Multiplies by the Hadamard prefactor `-i/√3`.
    pub fn mul_hadamard_scale(&self) -> Self {
        // (ζ⁶ - ζ³)/3 = -(1 + 2ζ³)/3
        let w = self.mul_zeta_pow(3);
        let mut coeffs = self.coeffs.clone();
        for (c, wc) in coeffs.iter_mut().zip(w.coeffs.iter()) {
            let s: BigInt = &*c + wc * 2;
            *c = -s;
        }
        CycloNumber::from_raw(coeffs, self.denom_exp + 1)
    }

    /// Floating-point value, for diagnostics and the float simulator.
    pub fn to_complex(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let angle = 2.0 * std::f64::consts::PI * i as f64 / 9.0;
            acc += Complex64::from_polar(bigint_to_f64(c), angle);
        }
        acc / 3f64.powi(self.denom_exp as i32)
    }

    /// If `self == ζ^k · other` for some `k`, returns that `k`.
    pub fn zeta_ratio(&self, other: &Self) -> Option<u8> {
        (0..9u8).find(|&k| other.mul_zeta_pow(k as i64) == *self)
    }
}

fn bigint_to_f64(c: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    c.to_f64().unwrap_or(if c.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

impl Default for CycloNumber {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for CycloNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")/3^{}", self.denom_exp)
    }
}

impl fmt::Debug for CycloNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'a> Add<&'a CycloNumber> for &'a CycloNumber {
    type Output = CycloNumber;
    fn add(self, rhs: &CycloNumber) -> CycloNumber {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        let exp = self.denom_exp.max(rhs.denom_exp);
        let mut a = self.scaled_coeffs(exp);
        let b = rhs.scaled_coeffs(exp);
        for (x, y) in a.iter_mut().zip(b.iter()) {
            *x += y;
        }
        CycloNumber::from_raw(a, exp)
    }
}

impl Add for CycloNumber {
    type Output = CycloNumber;
    fn add(self, rhs: CycloNumber) -> CycloNumber {
        &self + &rhs
    }
}

impl AddAssign<&CycloNumber> for CycloNumber {
    fn add_assign(&mut self, rhs: &CycloNumber) {
        *self = &*self + rhs;
    }
}

impl<'a> Sub<&'a CycloNumber> for &'a CycloNumber {
    type Output = CycloNumber;
    fn sub(self, rhs: &CycloNumber) -> CycloNumber {
        self + &(-rhs)
    }
}

impl Sub for CycloNumber {
    type Output = CycloNumber;
    fn sub(self, rhs: CycloNumber) -> CycloNumber {
        &self - &rhs
    }
}

impl Neg for &CycloNumber {
    type Output = CycloNumber;
    fn neg(self) -> CycloNumber {
        CycloNumber {
            coeffs: self.coeffs.clone().map(|c| -c),
            denom_exp: self.denom_exp,
        }
    }
}

impl Neg for CycloNumber {
    type Output = CycloNumber;
    fn neg(self) -> CycloNumber {
        -&self
    }
}

impl<'a> Mul<&'a CycloNumber> for &'a CycloNumber {
    type Output = CycloNumber;
    fn mul(self, rhs: &CycloNumber) -> CycloNumber {
        if self.is_zero() || rhs.is_zero() {
            return CycloNumber::zero();
        }
        let mut raw = vec![BigInt::zero(); 2 * DEGREE - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    raw[i + j] += a * b;
                }
            }
        }
        CycloNumber::from_raw(reduce_poly(raw), self.denom_exp + rhs.denom_exp)
    }
}

impl Mul for CycloNumber {
    type Output = CycloNumber;
    fn mul(self, rhs: CycloNumber) -> CycloNumber {
        &self * &rhs
    }
}

/// Dense square matrix over [`CycloNumber`], row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix {
    dim: usize,
    entries: Vec<CycloNumber>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            entries: vec![CycloNumber::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = CycloNumber::one();
        }
        m
    }

    pub fn diagonal(diag: Vec<CycloNumber>) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, d) in diag.into_iter().enumerate() {
            m.entries[i * dim + i] = d;
        }
        m
    }

    /// Builds a matrix from its columns.
    pub fn from_columns(cols: Vec<Vec<CycloNumber>>) -> Self {
        let dim = cols.len();
        let mut m = Self::zeros(dim);
        for (j, col) in cols.into_iter().enumerate() {
            assert_eq!(col.len(), dim, "column length");
            for (i, v) in col.into_iter().enumerate() {
                m.entries[i * dim + j] = v;
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<CycloNumber>>) -> Self {
        let dim = rows.len();
        let entries: Vec<CycloNumber> = rows.into_iter().flatten().collect();
        assert_eq!(entries.len(), dim * dim, "matrix must be square");
        Matrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &CycloNumber {
        &self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: CycloNumber) {
        self.entries[row * self.dim + col] = v;
    }

    pub fn column(&self, col: usize) -> Vec<CycloNumber> {
        (0..self.dim).map(|r| self.get(r, col).clone()).collect()
    }

    pub fn scale(&self, s: &CycloNumber) -> Self {
        Matrix {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * s).collect(),
        }
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[j * self.dim + i] = self.get(i, j).conj();
            }
        }
        m
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        let p = a * b;
                        out.entries[i * n + j] += &p;
                    }
                }
            }
        }
        out
    }

    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let n = self.dim * rhs.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..rhs.dim {
                    for l in 0..rhs.dim {
                        let b = rhs.get(k, l);
                        if !b.is_zero() {
                            out.set(i * rhs.dim + k, j * rhs.dim + l, a * b);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Matrix {
        (0..e).fold(Matrix::identity(self.dim), |acc, _| acc.matmul(self))
    }

    pub fn is_unitary(&self) -> bool {
        self.matmul(&self.dagger()) == Matrix::identity(self.dim)
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.entries.iter().map(CycloNumber::to_complex).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta() -> CycloNumber {
        CycloNumber::zeta_pow(1)
    }

    #[test]
    fn ninth_power_of_zeta_is_one() {
        let z = zeta();
        let p = (0..9).fold(CycloNumber::one(), |acc, _| &acc * &z);
        assert!(p.is_one());
        assert_eq!(CycloNumber::zeta_pow(9), CycloNumber::one());
    }

    #[test]
    fn omega_times_omega_squared() {
        let w = CycloNumber::omega();
        assert!((&w * &(&w * &w)).is_one());
        assert_eq!(&w * &w, CycloNumber::zeta_pow(6));
    }

    #[test]
    fn cube_roots_sum_to_zero() {
        let w = CycloNumber::omega();
        let w2 = &w * &w;
        let s = &w + &(&w2 + &CycloNumber::one());
        assert!(s.is_zero());
        let f = w.to_complex() + w2.to_complex() + 1.0;
        assert!(f.norm() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        let a = CycloNumber::new([3, 0, 0, 0, 0, 0], 1);
        assert_eq!(a, CycloNumber::one());
        assert_eq!(a.denom_exp(), 0);
        let z = CycloNumber::new([0; 6], 5);
        assert!(z.is_zero());
        assert_eq!(z.denom_exp(), 0);
        let b = CycloNumber::new([3, 3, 0, 0, 0, 0], 2);
        assert_eq!(b.coeffs(), &CycloNumber::new([1, 1, 0, 0, 0, 0], 0).coeffs().clone());
        assert_eq!(b.denom_exp(), 1);
        let expect = (Complex64::new(1.0, 0.0) + CycloNumber::zeta_pow(1).to_complex()) / 3.0;
        assert!((b.to_complex() - expect).norm() < 1e-12);
    }

    #[test]
    fn complex_values() {
        assert!((CycloNumber::one().to_complex() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let w = CycloNumber::omega().to_complex();
        assert!((w - Complex64::new(-0.5, 3f64.sqrt() / 2.0)).norm() < 1e-12);
        let h = CycloNumber::hadamard_scale();
        let third = CycloNumber::new([1, 0, 0, 0, 0, 0], 1);
        assert_eq!(h, &(CycloNumber::zeta_pow(6) - CycloNumber::zeta_pow(3)) * &third);
        assert!((h.to_complex() - Complex64::new(0.0, -1.0 / 3f64.sqrt())).norm() < 1e-12);
    }

    #[test]
    fn phi9_reduction_is_consistent() {
        let direct = CycloNumber::zeta_pow(6);
        let via = -(CycloNumber::zeta_pow(3) + CycloNumber::one());
        assert_eq!(direct, via);
    }

    #[test]
    fn i_sqrt3_identity() {
        // ω - ω² = 2ζ³ + 1
        let w = CycloNumber::omega();
        let lhs = &w - &(&w * &w);
        assert_eq!(lhs, CycloNumber::new([1, 0, 0, 2, 0, 0], 0));
    }

    #[test]
    fn conj_of_zeta() {
        assert_eq!(zeta().conj(), CycloNumber::zeta_pow(8));
        assert_eq!(zeta().conj(), CycloNumber::new([0, 0, -1, 0, 0, -1], 0));
    }

    #[test]
    fn hadamard_scale_squares_to_minus_one_third() {
        let h = CycloNumber::hadamard_scale();
        assert_eq!(&h * &h, CycloNumber::new([-1, 0, 0, 0, 0, 0], 1));
        assert_eq!(CycloNumber::one().mul_hadamard_scale(), h);
    }

    #[test]
    fn display_format() {
        assert_eq!(CycloNumber::new([1, 2, 0, 0, 0, -1], 2).to_string(), "(1,2,0,0,0,-1)/3^2");
    }

    #[test]
    fn zeta_ratio_finds_power() {
        let a = CycloNumber::new([1, 1, 0, 0, 0, 0], 1);
        assert_eq!(a.mul_zeta_pow(4).zeta_ratio(&a), Some(4));
        assert_eq!(a.zeta_ratio(&CycloNumber::one()), None);
    }
}
