//! Exact arithmetic in the prime field Z/pZ.
//!
//! [`PrimeField`] is the context object: it carries a verified-prime modulus and
//! performs arithmetic on raw residues (`u32` in `[0, p)`), which is what the
//! matrix and chain code uses internally. [`Fp`] is a self-describing element
//! that carries its modulus and refuses to mix with elements of another field.

use std::fmt;

use thiserror::Error;

/// Coefficient field used when nothing else is requested.
pub const DEFAULT_MODULUS: u32 = 1009;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too large (must be below 2^31)")]
    ModulusTooLarge(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
}

/// Z/pZ for a prime `p < 2^31`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField { p: DEFAULT_MODULUS }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p >= 1 << 31 {
            return Err(FieldError::ModulusTooLarge(p));
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(PrimeField { p: p as u32 })
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.p
    }

    /// Canonical residue of an arbitrary integer.
    #[inline]
    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    pub fn elem(self, v: i64) -> Fp {
        Fp {
            value: self.reduce(v),
            modulus: self.p,
        }
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    /// `a + c * b`, the workhorse of every elimination loop.
    #[inline]
    pub fn mul_add(self, a: u32, c: u32, b: u32) -> u32 {
        ((a as u64 + c as u64 * b as u64) % self.p as u64) as u32
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(self, a: u32) -> Result<u32, FieldError> {
        if a.is_multiple_of(self.p) {
            return Err(FieldError::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.p as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.reduce(t0))
    }

    pub fn div(self, a: u32, b: u32) -> Result<u32, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Representative in `(-p/2, p/2]`.
    pub fn lift_symmetric(self, a: u32) -> i64 {
        let a = a as i64;
        let p = self.p as i64;
        if a > p / 2 {
            a - p
        } else {
            a
        }
    }

    /// Recovers `n/d` with `|n|, |d| <= sqrt(p/2)` and `n ≡ a·d (mod p)`, if such a
    /// fraction exists. For p = 1009 this turns 505 back into 1/2.
    pub fn rational_reconstruct(self, a: u32) -> Option<(i64, i64)> {
        let p = self.p as i64;
        let bound = ((p / 2) as f64).sqrt().floor() as i64;
        let (mut r0, mut r1) = (p, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 > bound {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        if t1 == 0 || t1.abs() > bound {
            return None;
        }
        let (n, d) = if t1 < 0 { (-r1, -t1) } else { (r1, t1) };
        Some((n, d))
    }
}

/// A field element tagged with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u32,
    modulus: u32,
}

// checked operations: mixing moduli is an error, so these cannot be the std operator traits
#[allow(clippy::should_implement_trait)]
impl Fp {
    pub fn value(self) -> u32 {
        self.value
    }

    pub fn field(self) -> PrimeField {
        PrimeField { p: self.modulus }
    }

    fn check(self, other: Fp) -> Result<PrimeField, FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(self.field())
    }

    fn with(self, value: u32) -> Fp {
        Fp {
            value,
            modulus: self.modulus,
        }
    }

    pub fn add(self, other: Fp) -> Result<Fp, FieldError> {
        let f = self.check(other)?;
        Ok(self.with(f.add(self.value, other.value)))
    }

    pub fn sub(self, other: Fp) -> Result<Fp, FieldError> {
        let f = self.check(other)?;
        Ok(self.with(f.sub(self.value, other.value)))
    }

    pub fn mul(self, other: Fp) -> Result<Fp, FieldError> {
        let f = self.check(other)?;
        Ok(self.with(f.mul(self.value, other.value)))
    }

    pub fn neg(self) -> Fp {
        self.with(self.field().neg(self.value))
    }

    pub fn inv(self) -> Result<Fp, FieldError> {
        Ok(self.with(self.field().inv(self.value)?))
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}
