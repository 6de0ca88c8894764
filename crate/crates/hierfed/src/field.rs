//! Exact arithmetic in a prime field F_q.
//!
//! Field elements carry their modulus so that cross-field operations are
//! caught at runtime instead of silently producing garbage. Vectors store
//! the modulus once and the raw residues contiguously, which keeps the
//! protocol inner loops allocation-light.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// 2^31 - 1, a Mersenne prime. Default modulus for simulation rounds.
pub const MERSENNE31: u64 = (1 << 31) - 1;

/// 2^61 - 1, a Mersenne prime. Default modulus for training runs, leaving
/// headroom to sum many quantized gradients without wraparound.
pub const MERSENNE61: u64 = (1 << 61) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NonPrimeModulus(u64),
    #[error("field modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("polynomial has no coefficients")]
    EmptyPolynomial,
    #[error("duplicate evaluation point {0}")]
    DuplicatePoint(u64),
    #[error("need {needed} points with distinct x-coordinates, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("points are inconsistent with a polynomial of degree < {degree_bound}")]
    InconsistentPoints { degree_bound: usize },
}

/// A validated prime modulus q defining the field F_q.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldConfig {
    q: u64,
}

impl FieldConfig {
    /// Validates primality with a deterministic Miller-Rabin test.
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if is_prime(q) {
            Ok(Self { q })
        } else {
            Err(FieldError::NonPrimeModulus(q))
        }
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Builds an element, reducing the input mod q.
    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.q,
            modulus: self.q,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// Builds a vector, reducing every entry mod q.
    pub fn vector<I: IntoIterator<Item = u64>>(&self, values: I) -> FieldVector {
        FieldVector {
            modulus: self.q,
            values: values.into_iter().map(|v| v % self.q).collect(),
        }
    }

    pub fn zeros(&self, len: usize) -> FieldVector {
        FieldVector {
            modulus: self.q,
            values: vec![0; len],
        }
    }
}

/// An element of F_q: an integer in [0, q-1] tagged with its modulus.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, rhs: &Self) -> Result<(), FieldError> {
        if self.modulus == rhs.modulus {
            Ok(())
        } else {
            Err(FieldError::ModulusMismatch(self.modulus, rhs.modulus))
        }
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(&rhs)?;
        Ok(Self {
            value: add_mod(self.value, rhs.value, self.modulus),
            modulus: self.modulus,
        })
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(&rhs)?;
        Ok(Self {
            value: sub_mod(self.value, rhs.value, self.modulus),
            modulus: self.modulus,
        })
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self, FieldError> {
        self.same_field(&rhs)?;
        Ok(Self {
            value: mul_mod(self.value, rhs.value, self.modulus),
            modulus: self.modulus,
        })
    }

    /// Multiplicative inverse via Fermat: a^(q-2) mod q.
    pub fn inverse(self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(Self {
            value: pow_mod(self.value, self.modulus - 2, self.modulus),
            modulus: self.modulus,
        })
    }

    pub fn pow(self, exp: u64) -> Self {
        Self {
            value: pow_mod(self.value, exp, self.modulus),
            modulus: self.modulus,
        }
    }
}

impl Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("field modulus mismatch")
    }
}

impl Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(rhs).expect("field modulus mismatch")
    }
}

impl Mul for FieldElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("field modulus mismatch")
    }
}

impl Neg for FieldElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            value: sub_mod(0, self.value, self.modulus),
            modulus: self.modulus,
        }
    }
}

/// A vector over F_q. All entries share one modulus by construction.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldVector {
    modulus: u64,
    values: Vec<u64>,
}

impl fmt::Debug for FieldVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} (mod {})", self.values, self.modulus)
    }
}

impl FieldVector {
    /// Builds a vector from elements, rejecting mixed moduli.
    pub fn from_elements<I: IntoIterator<Item = FieldElement>>(
        cfg: FieldConfig,
        elems: I,
    ) -> Result<Self, FieldError> {
        let mut values = Vec::new();
        for e in elems {
            if e.modulus() != cfg.modulus() {
                return Err(FieldError::ModulusMismatch(cfg.modulus(), e.modulus()));
            }
            values.push(e.value());
        }
        Ok(Self {
            modulus: cfg.modulus(),
            values,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn config(&self) -> FieldConfig {
        FieldConfig { q: self.modulus }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> FieldElement {
        FieldElement {
            value: self.values[i],
            modulus: self.modulus,
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Raw residue access for enumeration loops. Callers must keep every
    /// entry below the modulus.
    pub(crate) fn values_mut(&mut self) -> &mut [u64] {
        &mut self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let q = self.modulus;
        self.values.iter().map(move |&value| FieldElement {
            value,
            modulus: q,
        })
    }

    pub fn push(&mut self, e: FieldElement) -> Result<(), FieldError> {
        if e.modulus() != self.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus, e.modulus()));
        }
        self.values.push(e.value());
        Ok(())
    }

    fn same_shape(&self, rhs: &Self) -> Result<(), FieldError> {
        if self.modulus != rhs.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus, rhs.modulus));
        }
        if self.values.len() != rhs.values.len() {
            return Err(FieldError::LengthMismatch(
                self.values.len(),
                rhs.values.len(),
            ));
        }
        Ok(())
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, FieldError> {
        let mut out = self.clone();
        out.add_assign_checked(rhs)?;
        Ok(out)
    }

    pub fn add_assign_checked(&mut self, rhs: &Self) -> Result<(), FieldError> {
        self.same_shape(rhs)?;
        for (a, &b) in self.values.iter_mut().zip(&rhs.values) {
            *a = add_mod(*a, b, self.modulus);
        }
        Ok(())
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, FieldError> {
        self.same_shape(rhs)?;
        let mut out = self.clone();
        for (a, &b) in out.values.iter_mut().zip(&rhs.values) {
            *a = sub_mod(*a, b, self.modulus);
        }
        Ok(out)
    }

    /// Shortens the vector to `len` entries, dropping the tail.
    pub fn truncate(&mut self, len: usize) {
        self.values.truncate(len);
    }

    pub fn extend_from(&mut self, rhs: &Self) -> Result<(), FieldError> {
        if self.modulus != rhs.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus, rhs.modulus));
        }
        self.values.extend_from_slice(&rhs.values);
        Ok(())
    }
}

/// Evaluates the polynomial `coeffs[0] + coeffs[1] x + ...` at `x` by Horner.
pub fn poly_eval(coeffs: &FieldVector, x: FieldElement) -> Result<FieldElement, FieldError> {
    if coeffs.is_empty() {
        return Err(FieldError::EmptyPolynomial);
    }
    if coeffs.modulus() != x.modulus() {
        return Err(FieldError::ModulusMismatch(coeffs.modulus(), x.modulus()));
    }
    let q = coeffs.modulus();
    let mut acc = 0u64;
    for &c in coeffs.values().iter().rev() {
        acc = add_mod(mul_mod(acc, x.value(), q), c, q);
    }
    Ok(FieldElement {
        value: acc,
        modulus: q,
    })
}

/// Recovers the coefficient vector (length `degree_bound`) of the unique
/// polynomial of degree < `degree_bound` through the given points.
///
/// Extra points beyond `degree_bound` are checked for consistency against
/// the interpolated polynomial.
pub fn lagrange_interpolate(
    points: &[(FieldElement, FieldElement)],
    degree_bound: usize,
) -> Result<FieldVector, FieldError> {
    if degree_bound == 0 {
        return Err(FieldError::EmptyPolynomial);
    }
    if points.len() < degree_bound {
        return Err(FieldError::NotEnoughPoints {
            needed: degree_bound,
            got: points.len(),
        });
    }
    let q = points[0].0.modulus();
    for (x, y) in points {
        if x.modulus() != q || y.modulus() != q {
            return Err(FieldError::ModulusMismatch(q, x.modulus().min(y.modulus())));
        }
    }
    for (i, (xi, _)) in points.iter().enumerate() {
        for (xj, _) in &points[..i] {
            if xi.value() == xj.value() {
                return Err(FieldError::DuplicatePoint(xi.value()));
            }
        }
    }

    let cfg = FieldConfig { q };
    let xs: Vec<u64> = points[..degree_bound].iter().map(|(x, _)| x.value()).collect();
    let basis = LagrangeBasis::new(cfg, &xs)?;
    let ys: Vec<u64> = points[..degree_bound].iter().map(|(_, y)| y.value()).collect();
    let coeffs = FieldVector {
        modulus: q,
        values: basis.interpolate(&ys),
    };

    for (x, y) in &points[degree_bound..] {
        if poly_eval(&coeffs, *x)?.value() != y.value() {
            return Err(FieldError::InconsistentPoints { degree_bound });
        }
    }
    Ok(coeffs)
}

/// Precomputed Lagrange basis for a fixed set of evaluation points.
///
/// `basis[i]` holds the coefficients of L_i(x), the polynomial that is 1 at
/// x_i and 0 at the other points. Interpolating many vectors sampled at the
/// same points (one per coordinate position) then costs one matrix-vector
/// product each.
pub(crate) struct LagrangeBasis {
    modulus: u64,
    basis: Vec<Vec<u64>>,
}

impl LagrangeBasis {
    pub(crate) fn new(cfg: FieldConfig, xs: &[u64]) -> Result<Self, FieldError> {
        let q = cfg.modulus();
        let n = xs.len();
        if n == 0 {
            return Err(FieldError::EmptyPolynomial);
        }
        for (i, &xi) in xs.iter().enumerate() {
            for &xj in &xs[..i] {
                if xi == xj {
                    return Err(FieldError::DuplicatePoint(xi));
                }
            }
        }

        // master = prod_j (x - x_j), degree n
        let mut master = vec![0u64; n + 1];
        master[0] = 1;
        let mut deg = 0;
        for &x in xs {
            let neg_x = sub_mod(0, x, q);
            master[deg + 1] = master[deg];
            for k in (1..=deg).rev() {
                master[k] = add_mod(mul_mod(master[k], neg_x, q), master[k - 1], q);
            }
            master[0] = mul_mod(master[0], neg_x, q);
            deg += 1;
        }

        let mut basis = Vec::with_capacity(n);
        for &xi in xs {
            // synthetic division: quotient = master / (x - x_i)
            let mut quotient = vec![0u64; n];
            let mut carry = 0u64;
            for k in (0..n).rev() {
                carry = add_mod(master[k + 1], mul_mod(carry, xi, q), q);
                quotient[k] = carry;
            }
            // normalize so L_i(x_i) = 1
            let mut denom = 0u64;
            for &c in quotient.iter().rev() {
                denom = add_mod(mul_mod(denom, xi, q), c, q);
            }
            let inv = FieldElement {
                value: denom,
                modulus: q,
            }
            .inverse()?
            .value();
            for c in &mut quotient {
                *c = mul_mod(*c, inv, q);
            }
            basis.push(quotient);
        }
        Ok(Self { modulus: q, basis })
    }

    /// Coefficients of the polynomial through (x_i, ys[i]).
    pub(crate) fn interpolate(&self, ys: &[u64]) -> Vec<u64> {
        assert_eq!(ys.len(), self.basis.len());
        let q = self.modulus;
        let n = self.basis.len();
        let mut coeffs = vec![0u64; n];
        for (poly, &y) in self.basis.iter().zip(ys) {
            for (c, &b) in coeffs.iter_mut().zip(poly) {
                *c = add_mod(*c, mul_mod(b, y, q), q);
            }
        }
        coeffs
    }
}

#[inline]
pub(crate) fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + b as u128) % q as u128) as u64
}

#[inline]
pub(crate) fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + q as u128 - b as u128) % q as u128) as u64
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all u64 inputs with this witness set.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn fe(q: u64, v: u64) -> FieldElement {
        FieldConfig::new(q).unwrap().element(v)
    }

    /// Independent oracle: scan all residues for the multiplicative inverse.
    fn brute_force_inverse(q: u64, a: u64) -> Option<u64> {
        (0..q).find(|&b| (a as u128 * b as u128) % q as u128 == 1)
    }

    #[test]
    fn primality() {
        for p in [2u64, 3, 5, 7, 11, 13, 101, MERSENNE31, MERSENNE61] {
            assert!(is_prime(p), "{p} should be prime");
        }
        for c in [0u64, 1, 4, 6, 9, 15, 100, MERSENNE31 - 1, (1 << 31) + 1] {
            assert!(!is_prime(c), "{c} should be composite");
        }
        assert_eq!(FieldConfig::new(4).unwrap_err(), FieldError::NonPrimeModulus(4));
        assert!(FieldConfig::new(2).is_ok());
    }

    #[test]
    fn addition() {
        assert_eq!((fe(7, 3) + fe(7, 5)).value(), 1);
        assert_eq!((fe(7, 0) + fe(7, 4)).value(), 4);
        assert_eq!((fe(11, 10) + fe(11, 10)).value(), 9);
        assert_eq!(
            fe(7, 1).checked_add(fe(11, 1)).unwrap_err(),
            FieldError::ModulusMismatch(7, 11)
        );
    }

    #[test]
    fn multiplication() {
        assert_eq!((fe(7, 3) * fe(7, 5)).value(), 1);
        assert_eq!((fe(7, 1) * fe(7, 6)).value(), 6);
        // 7 * 8 = 1 mod 11, confirmed by the brute-force inverse oracle
        assert_eq!(brute_force_inverse(11, 7), Some(8));
        assert_eq!((fe(11, 7) * fe(11, 8)).value(), 1);
        assert_eq!(
            fe(7, 1).checked_mul(fe(11, 1)).unwrap_err(),
            FieldError::ModulusMismatch(7, 11)
        );
    }

    #[test]
    fn inverse_matches_brute_force() {
        assert_eq!(brute_force_inverse(7, 3), Some(5));
        assert_eq!(fe(7, 3).inverse().unwrap().value(), 5);
        assert_eq!(fe(7, 1).inverse().unwrap().value(), 1);
        assert_eq!(brute_force_inverse(13, 5), Some(8));
        assert_eq!(fe(13, 5).inverse().unwrap().value(), 8);
        assert_eq!(fe(13, 0).inverse().unwrap_err(), FieldError::ZeroInverse);

        for q in [3u64, 5, 7, 11, 13] {
            for a in 1..q {
                assert_eq!(
                    fe(q, a).inverse().unwrap().value(),
                    brute_force_inverse(q, a).unwrap()
                );
            }
        }
    }

    #[test]
    fn field_axioms_on_random_triples() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for q in [7u64, 101, MERSENNE31, MERSENNE61] {
            let cfg = FieldConfig::new(q).unwrap();
            for _ in 0..200 {
                let a = cfg.element(rng.gen());
                let b = cfg.element(rng.gen());
                let c = cfg.element(rng.gen());
                assert_eq!((a + b) + c, a + (b + c));
                assert_eq!((a * b) * c, a * (b * c));
                assert_eq!(a + b, b + a);
                assert_eq!(a * b, b * a);
                assert_eq!(a * (b + c), a * b + a * c);
                if !a.is_zero() {
                    assert_eq!((a * a.inverse().unwrap()).value(), 1);
                }
                assert_eq!((a + (-a)).value(), 0);
                assert_eq!((a - b) + b, a);
            }
        }
    }

    #[test]
    fn horner_evaluation() {
        let cfg = FieldConfig::new(7).unwrap();
        let coeffs = cfg.vector([5, 4]);
        assert_eq!(poly_eval(&coeffs, cfg.element(1)).unwrap().value(), 2);
        assert_eq!(poly_eval(&coeffs, cfg.element(0)).unwrap().value(), 5);
        assert_eq!(poly_eval(&coeffs, cfg.element(2)).unwrap().value(), 6);

        let empty = cfg.vector([]);
        assert_eq!(
            poly_eval(&empty, cfg.element(1)).unwrap_err(),
            FieldError::EmptyPolynomial
        );
        assert_eq!(
            poly_eval(&coeffs, fe(11, 1)).unwrap_err(),
            FieldError::ModulusMismatch(7, 11)
        );
    }

    /// Independent oracle: scan every polynomial of the given degree bound for
    /// one that passes through all points.
    fn brute_force_interpolate(q: u64, points: &[(u64, u64)], bound: u32) -> Option<Vec<u64>> {
        let cfg = FieldConfig::new(q).unwrap();
        let mut found = None;
        for idx in 0..q.pow(bound) {
            let mut coeffs = Vec::with_capacity(bound as usize);
            let mut rest = idx;
            for _ in 0..bound {
                coeffs.push(rest % q);
                rest /= q;
            }
            let vec = cfg.vector(coeffs.iter().copied());
            if points
                .iter()
                .all(|&(x, y)| poly_eval(&vec, cfg.element(x)).unwrap().value() == y)
            {
                assert!(found.is_none(), "interpolant must be unique");
                found = Some(coeffs);
            }
        }
        found
    }

    #[test]
    fn interpolation_matches_brute_force() {
        // all 49 degree-1 candidates mod 7 leave exactly [5,4]
        assert_eq!(
            brute_force_interpolate(7, &[(1, 2), (2, 6)], 2),
            Some(vec![5, 4])
        );
        let cfg = FieldConfig::new(7).unwrap();
        let pts = [(cfg.element(1), cfg.element(2)), (cfg.element(2), cfg.element(6))];
        assert_eq!(lagrange_interpolate(&pts, 2).unwrap().values(), &[5, 4]);

        let pts = [(cfg.element(1), cfg.element(3)), (cfg.element(2), cfg.element(3))];
        assert_eq!(lagrange_interpolate(&pts, 2).unwrap().values(), &[3, 0]);

        // forward oracle: sample 1 + 3x + 2x^2 mod 11 at x = 1,2,3
        let cfg11 = FieldConfig::new(11).unwrap();
        let truth = cfg11.vector([1, 3, 2]);
        let pts: Vec<_> = (1..=3)
            .map(|x| {
                let x = cfg11.element(x);
                (x, poly_eval(&truth, x).unwrap())
            })
            .collect();
        assert_eq!(pts[0].1.value(), 6);
        assert_eq!(pts[1].1.value(), 4);
        assert_eq!(pts[2].1.value(), 6);
        assert_eq!(lagrange_interpolate(&pts, 3).unwrap().values(), &[1, 3, 2]);
    }

    #[test]
    fn interpolation_error_paths() {
        let cfg = FieldConfig::new(7).unwrap();
        let dup = [(cfg.element(1), cfg.element(2)), (cfg.element(1), cfg.element(6))];
        assert_eq!(
            lagrange_interpolate(&dup, 2).unwrap_err(),
            FieldError::DuplicatePoint(1)
        );

        let short = [(cfg.element(1), cfg.element(2))];
        assert_eq!(
            lagrange_interpolate(&short, 2).unwrap_err(),
            FieldError::NotEnoughPoints { needed: 2, got: 1 }
        );

        // overdetermined: consistent third point passes, inconsistent fails
        let truth = cfg.vector([5, 4]);
        let mut pts: Vec<_> = (1..=3)
            .map(|x| {
                let x = cfg.element(x);
                (x, poly_eval(&truth, x).unwrap())
            })
            .collect();
        assert_eq!(lagrange_interpolate(&pts, 2).unwrap().values(), &[5, 4]);
        pts[2].1 = pts[2].1 + cfg.element(1);
        assert_eq!(
            lagrange_interpolate(&pts, 2).unwrap_err(),
            FieldError::InconsistentPoints { degree_bound: 2 }
        );
    }

    #[test]
    fn interpolation_round_trip_exhaustive_small() {
        // every coefficient vector of degree <= 2 over tiny fields
        for q in [3u64, 5, 7] {
            let cfg = FieldConfig::new(q).unwrap();
            for idx in 0..q.pow(3) {
                let coeffs = cfg.vector([idx % q, (idx / q) % q, (idx / (q * q)) % q]);
                let pts: Vec<_> = (1..=3)
                    .map(|x| {
                        let x = cfg.element(x);
                        (x, poly_eval(&coeffs, x).unwrap())
                    })
                    .collect();
                assert_eq!(lagrange_interpolate(&pts, 3).unwrap(), coeffs);
            }
        }
    }

    #[test]
    fn interpolation_round_trip_random() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for q in [11u64, 13, 31, 101] {
            let cfg = FieldConfig::new(q).unwrap();
            for _ in 0..50 {
                let deg = rng.gen_range(1..=5usize);
                let coeffs = cfg.vector((0..deg).map(|_| rng.gen_range(0..q)));
                let extra = rng.gen_range(0..=2usize);
                let pts: Vec<_> = (1..=(deg + extra) as u64)
                    .map(|x| {
                        let x = cfg.element(x);
                        (x, poly_eval(&coeffs, x).unwrap())
                    })
                    .collect();
                assert_eq!(lagrange_interpolate(&pts, deg).unwrap(), coeffs);
            }
        }
    }

    #[test]
    fn vector_ops() {
        let cfg = FieldConfig::new(7).unwrap();
        let a = cfg.vector([1, 2, 3]);
        let b = cfg.vector([6, 6, 6]);
        assert_eq!(a.checked_add(&b).unwrap().values(), &[0, 1, 2]);
        assert_eq!(a.checked_sub(&b).unwrap().values(), &[2, 3, 4]);
        let short = cfg.vector([1]);
        assert_eq!(
            a.checked_add(&short).unwrap_err(),
            FieldError::LengthMismatch(3, 1)
        );
        let other = FieldConfig::new(11).unwrap().vector([1, 2, 3]);
        assert_eq!(
            a.checked_add(&other).unwrap_err(),
            FieldError::ModulusMismatch(7, 11)
        );
    }
}
