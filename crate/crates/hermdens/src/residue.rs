//! Residue rings `O_E/p^k` for the unramified quadratic extension
//! `E = Q_p(√ε)`, used by the counting oracles.

use crate::error::{invalid, Error, Result};
use crate::locint::Region;

/// An element `a + b√ε` with `a, b` reduced modulo `p^k`.
pub type Elt = (u64, u64);

#[derive(Clone, Copy, Debug)]
pub struct UnramifiedRing {
    pub p: u64,
    pub k: u32,
    pub modulus: u64,
    pub eps: u64,
}

impl UnramifiedRing {
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return invalid(format!("p must be an odd prime, got {p}"));
        }
        let modulus = p
            .checked_pow(k)
            .filter(|m| m.checked_mul(*m).is_some())
            .ok_or_else(|| Error::Budget(format!("{p}^{k} is too large for a residue ring")))?;
        Ok(Self {
            p,
            k,
            modulus,
            eps: non_residue(p),
        })
    }

    pub fn size(&self) -> u64 {
        self.modulus * self.modulus
    }

    pub fn elements(&self) -> impl Iterator<Item = Elt> + '_ {
        (0..self.modulus).flat_map(move |a| (0..self.modulus).map(move |b| (a, b)))
    }

    pub fn norm(&self, a: u64, b: u64) -> u64 {
        let m = self.modulus as u128;
        let (a, b) = (a as u128, b as u128);
        let v = (a * a % m + m - (self.eps as u128) * (b * b % m) % m) % m;
        v as u64
    }

    /// Valuation of `a + b√ε`, capped at `k`.
    pub fn val(&self, a: u64, b: u64) -> u32 {
        let mut v = 0;
        let (mut a, mut b) = (a, b);
        while v < self.k && a % self.p == 0 && b % self.p == 0 {
            a /= self.p;
            b /= self.p;
            v += 1;
        }
        v
    }

    pub fn contains(&self, region: Region, a: u64, b: u64) -> bool {
        let div = a.is_multiple_of(self.p) && b.is_multiple_of(self.p);
        match region {
            Region::O => true,
            Region::Unit => !div,
            Region::PiO => div,
        }
    }

    pub fn add(&self, x: Elt, y: Elt) -> Elt {
        ((x.0 + y.0) % self.modulus, (x.1 + y.1) % self.modulus)
    }

    pub fn mul(&self, x: Elt, y: Elt) -> Elt {
        let m = self.modulus as u128;
        let (a, b, c, d) = (x.0 as u128, x.1 as u128, y.0 as u128, y.1 as u128);
        let re = (a * c % m + (self.eps as u128) * (b * d % m)) % m;
        let im = (a * d % m + b * c % m) % m;
        (re as u64, im as u64)
    }

    pub fn conj(&self, x: Elt) -> Elt {
        (x.0, (self.modulus - x.1) % self.modulus)
    }

    /// `π^e` for `e ≥ 0`, which is zero once `e ≥ k`.
    pub fn pi_pow(&self, e: u32) -> Elt {
        if e >= self.k {
            (0, 0)
        } else {
            (self.p.pow(e), 0)
        }
    }

    pub fn from_int(&self, c: u64) -> Elt {
        (c % self.modulus, 0)
    }
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn non_residue(p: u64) -> u64 {
    (2..p)
        .find(|&x| (1..p).all(|y| y * y % p != x))
        .expect("odd prime has a non-residue")
}
