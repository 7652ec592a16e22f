//! Exact Laurent polynomials and rational functions in one indeterminate `s`.
//!
//! Throughout the crate `s` stands for `-q`, where `q` is the residue field
//! size. Quantities written in `q` are entered through [`SignedLaurent::q_pow`]
//! or [`SignedLaurent::from_q_terms`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `base^k` for a nonzero rational base and any integer `k`.
pub fn rat_pow(base: &Rat, k: i64) -> Rat {
    let mut acc = Rat::one();
    let b = if k < 0 { base.recip() } else { base.clone() };
    for _ in 0..k.unsigned_abs() {
        acc *= &b;
    }
    acc
}

pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::DivisionByZero);
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// A finite sum `Σ c_k s^k` with `k ∈ Z` and rational `c_k`. Zero
/// coefficients are never stored.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct SignedLaurent {
    coeffs: BTreeMap<i64, Rat>,
}

impl SignedLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Self::monomial(c, 0)
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rint(c))
    }

    pub fn monomial(c: Rat, k: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(k, c);
        }
        Self { coeffs }
    }

    /// `s^k`, i.e. `(-q)^k`.
    pub fn s_pow(k: i64) -> Self {
        Self::monomial(Rat::one(), k)
    }

    /// `q^k = (-1)^k s^k`.
    pub fn q_pow(k: i64) -> Self {
        let c = if k.rem_euclid(2) == 0 { rint(1) } else { rint(-1) };
        Self::monomial(c, k)
    }

    /// Builds `Σ c q^k` from `(k, c)` pairs.
    pub fn from_q_terms(terms: &[(i64, i64)]) -> Self {
        let mut out = Self::zero();
        for &(k, c) in terms {
            out += &(Self::q_pow(k) * &Self::int(c));
        }
        out
    }

    pub fn from_map(map: BTreeMap<i64, Rat>) -> Self {
        let coeffs = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs.get(&0).is_some_and(|c| c.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rat)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn coeff(&self, k: i64) -> Rat {
        self.coeffs.get(&k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Coefficient of the highest power of `s`.
    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.values().next_back()
    }

    pub fn as_monomial(&self) -> Option<(Rat, i64)> {
        if self.coeffs.len() == 1 {
            let (k, c) = self.coeffs.iter().next().unwrap();
            Some((c.clone(), *k))
        } else {
            None
        }
    }

    pub fn shift(&self, k: i64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Value at `s = -q`.
    pub fn eval(&self, q: i64) -> Rat {
        let s = rint(-q);
        self.coeffs.iter().map(|(k, c)| c * rat_pow(&s, *k)).sum()
    }

    /// Coefficients of the same function written in `q`.
    pub fn q_coeffs(&self) -> BTreeMap<i64, Rat> {
        self.coeffs
            .iter()
            .map(|(k, c)| (*k, if k.rem_euclid(2) == 0 { c.clone() } else { -c }))
            .collect()
    }

    fn render(map: &BTreeMap<i64, Rat>, var: &str) -> String {
        if map.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (k, c)) in map.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono = match *k {
                0 => String::new(),
                1 => var.to_string(),
                k => format!("{var}^{k}"),
            };
            if mono.is_empty() {
                out.push_str(&format_rat(&a));
            } else if a.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{}*{}", format_rat(&a), mono));
            }
        }
        out
    }

    /// Human-readable form in `q`.
    pub fn to_q_string(&self) -> String {
        Self::render(&self.q_coeffs(), "q")
    }

    fn low_shifted(&self) -> (i64, Self) {
        match self.min_exp() {
            Some(m) => (m, self.shift(-m)),
            None => (0, Self::zero()),
        }
    }
}

impl fmt::Display for SignedLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Self::render(&self.coeffs, "s"))
    }
}

impl fmt::Debug for SignedLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignedLaurent({self})")
    }
}

impl AddAssign<&SignedLaurent> for SignedLaurent {
    fn add_assign(&mut self, rhs: &SignedLaurent) {
        for (k, c) in &rhs.coeffs {
            let e = self.coeffs.entry(*k).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                self.coeffs.remove(k);
            }
        }
    }
}

impl SubAssign<&SignedLaurent> for SignedLaurent {
    fn sub_assign(&mut self, rhs: &SignedLaurent) {
        *self += &(-rhs);
    }
}

impl Neg for &SignedLaurent {
    type Output = SignedLaurent;
    fn neg(self) -> SignedLaurent {
        SignedLaurent {
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

impl Neg for SignedLaurent {
    type Output = SignedLaurent;
    fn neg(self) -> SignedLaurent {
        -&self
    }
}

impl Mul<&SignedLaurent> for &SignedLaurent {
    type Output = SignedLaurent;
    fn mul(self, rhs: &SignedLaurent) -> SignedLaurent {
        let mut out: BTreeMap<i64, Rat> = BTreeMap::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &rhs.coeffs {
                *out.entry(a + b).or_insert_with(Rat::zero) += ca * cb;
            }
        }
        SignedLaurent::from_map(out)
    }
}

impl MulAssign<&SignedLaurent> for SignedLaurent {
    fn mul_assign(&mut self, rhs: &SignedLaurent) {
        *self = &*self * rhs;
    }
}

macro_rules! forward_binop {
    ($t:ty, $tr:ident, $m:ident, $assign:ident) => {
        impl $tr<&$t> for $t {
            type Output = $t;
            fn $m(mut self, rhs: &$t) -> $t {
                self.$assign(rhs);
                self
            }
        }
        impl $tr<$t> for $t {
            type Output = $t;
            fn $m(mut self, rhs: $t) -> $t {
                self.$assign(&rhs);
                self
            }
        }
        impl $tr<&$t> for &$t {
            type Output = $t;
            fn $m(self, rhs: &$t) -> $t {
                let mut out = self.clone();
                out.$assign(rhs);
                out
            }
        }
    };
}

forward_binop!(SignedLaurent, Add, add, add_assign);
forward_binop!(SignedLaurent, Sub, sub, sub_assign);

impl Mul<&SignedLaurent> for SignedLaurent {
    type Output = SignedLaurent;
    fn mul(self, rhs: &SignedLaurent) -> SignedLaurent {
        &self * rhs
    }
}

impl Mul<SignedLaurent> for SignedLaurent {
    type Output = SignedLaurent;
    fn mul(self, rhs: SignedLaurent) -> SignedLaurent {
        &self * &rhs
    }
}

// Polynomial helpers. Inputs have nonnegative exponents only.

fn poly_divrem(a: &SignedLaurent, b: &SignedLaurent) -> (SignedLaurent, SignedLaurent) {
    let db = b.max_exp().expect("division by zero polynomial");
    let lb = b.leading().unwrap().clone();
    let mut quot = SignedLaurent::zero();
    let mut rem = a.clone();
    while let Some(dr) = rem.max_exp() {
        if dr < db {
            break;
        }
        let c = rem.leading().unwrap() / &lb;
        let t = SignedLaurent::monomial(c, dr - db);
        rem -= &(&t * b);
        quot += &t;
    }
    (quot, rem)
}

fn poly_gcd(a: &SignedLaurent, b: &SignedLaurent) -> SignedLaurent {
    let mut x = a.clone();
    let mut y = b.clone();
    while !y.is_zero() {
        let (_, r) = poly_divrem(&x, &y);
        x = y;
        y = r;
    }
    match x.leading() {
        Some(l) => {
            let inv = l.recip();
            x.scale(&inv)
        }
        None => SignedLaurent::zero(),
    }
}

/// A quotient of two [`SignedLaurent`]s kept in lowest terms: the
/// denominator is a monic polynomial with nonzero constant term and shares
/// no factor with the numerator.
#[derive(Clone, PartialEq, Eq)]
pub struct SignedRational {
    num: SignedLaurent,
    den: SignedLaurent,
}

impl SignedRational {
    pub fn new(num: SignedLaurent, den: SignedLaurent) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: SignedLaurent, den: SignedLaurent) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let (mn, pn) = num.low_shifted();
        let (md, pd) = den.low_shifted();
        let g = poly_gcd(&pn, &pd);
        let (pn, pd) = if g.max_exp() == Some(0) {
            (pn, pd)
        } else {
            (poly_divrem(&pn, &g).0, poly_divrem(&pd, &g).0)
        };
        let lead = pd.leading().unwrap().recip();
        Self {
            num: pn.scale(&lead).shift(mn - md),
            den: pd.scale(&lead),
        }
    }

    pub fn zero() -> Self {
        Self {
            num: SignedLaurent::zero(),
            den: SignedLaurent::one(),
        }
    }

    pub fn one() -> Self {
        Self::from(SignedLaurent::one())
    }

    pub fn int(c: i64) -> Self {
        Self::from(SignedLaurent::int(c))
    }

    pub fn constant(c: Rat) -> Self {
        Self::from(SignedLaurent::constant(c))
    }

    pub fn s_pow(k: i64) -> Self {
        Self::from(SignedLaurent::s_pow(k))
    }

    pub fn q_pow(k: i64) -> Self {
        Self::from(SignedLaurent::q_pow(k))
    }

    pub fn num(&self) -> &SignedLaurent {
        &self.num
    }

    pub fn den(&self) -> &SignedLaurent {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// The Laurent polynomial this equals, if the denominator is trivial.
    pub fn as_laurent(&self) -> Option<&SignedLaurent> {
        self.den.is_one().then_some(&self.num)
    }

    pub fn as_monomial(&self) -> Option<(Rat, i64)> {
        self.as_laurent().and_then(|l| l.as_monomial())
    }

    /// Canonical form is already maintained; this re-runs reduction and is
    /// used to check idempotence.
    pub fn renormalize(&self) -> Self {
        Self::normalized(self.num.clone(), self.den.clone())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn pow(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..k.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self::normalized(self.num.scale(c), self.den.clone())
    }

    /// Value at `s = -q`.
    pub fn eval(&self, q: i64) -> Result<Rat> {
        let d = self.den.eval(q);
        if d.is_zero() {
            return Err(Error::Pole(q));
        }
        Ok(self.num.eval(q) / d)
    }

    pub fn to_q_string(&self) -> String {
        let n = self.num.to_q_string();
        if self.den.is_one() {
            return n;
        }
        let wrap = |s: String, l: &SignedLaurent| {
            if l.coeffs.len() > 1 {
                format!("({s})")
            } else {
                s
            }
        };
        // Present the denominator with a positive leading q-coefficient.
        let (mut num, mut den) = (self.num.clone(), self.den.clone());
        if let Some(m) = num.min_exp().filter(|m| *m < 0) {
            num = num.shift(-m);
            den = den.shift(-m);
        }
        if den.q_coeffs().values().next_back().is_some_and(|c| c.is_negative()) {
            num = -num;
            den = -den;
        }
        format!("{}/{}", wrap(num.to_q_string(), &num), wrap(den.to_q_string(), &den))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Invalid(e.to_string()))
    }
}

impl From<SignedLaurent> for SignedRational {
    fn from(num: SignedLaurent) -> Self {
        Self {
            num,
            den: SignedLaurent::one(),
        }
    }
}

impl fmt::Display for SignedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for SignedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SignedRational({self})")
    }
}

impl AddAssign<&SignedRational> for SignedRational {
    fn add_assign(&mut self, rhs: &SignedRational) {
        if rhs.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = rhs.clone();
            return;
        }
        if self.den == rhs.den {
            *self = Self::normalized(&self.num + &rhs.num, self.den.clone());
            return;
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        let den = &self.den * &rhs.den;
        *self = Self::normalized(num, den);
    }
}

impl SubAssign<&SignedRational> for SignedRational {
    fn sub_assign(&mut self, rhs: &SignedRational) {
        *self += &(-rhs);
    }
}

impl MulAssign<&SignedRational> for SignedRational {
    fn mul_assign(&mut self, rhs: &SignedRational) {
        if self.is_zero() || rhs.is_zero() {
            *self = Self::zero();
            return;
        }
        *self = Self::normalized(&self.num * &rhs.num, &self.den * &rhs.den);
    }
}

impl Neg for &SignedRational {
    type Output = SignedRational;
    fn neg(self) -> SignedRational {
        SignedRational {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Neg for SignedRational {
    type Output = SignedRational;
    fn neg(self) -> SignedRational {
        -&self
    }
}

forward_binop!(SignedRational, Add, add, add_assign);
forward_binop!(SignedRational, Sub, sub, sub_assign);
forward_binop!(SignedRational, Mul, mul, mul_assign);

impl Div<&SignedRational> for &SignedRational {
    type Output = SignedRational;
    /// Panics on division by zero; use [`SignedRational::checked_div`] to
    /// get an error instead.
    fn div(self, rhs: &SignedRational) -> SignedRational {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Div<SignedRational> for SignedRational {
    type Output = SignedRational;
    fn div(self, rhs: SignedRational) -> SignedRational {
        &self / &rhs
    }
}

impl std::iter::Sum for SignedRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, x| acc + x)
    }
}

impl std::iter::Product for SignedRational {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::one(), |acc, x| acc * x)
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    num: BTreeMap<i64, String>,
    den: BTreeMap<i64, String>,
}

fn to_wire(l: &SignedLaurent) -> BTreeMap<i64, String> {
    l.coeffs.iter().map(|(k, c)| (*k, format_rat(c))).collect()
}

fn from_wire(m: &BTreeMap<i64, String>) -> Result<SignedLaurent> {
    let mut out = BTreeMap::new();
    for (k, v) in m {
        out.insert(*k, parse_rat(v)?);
    }
    Ok(SignedLaurent::from_map(out))
}

impl Serialize for SignedRational {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        Wire {
            num: to_wire(&self.num),
            den: to_wire(&self.den),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SignedRational {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = Wire::deserialize(de)?;
        let num = from_wire(&w.num).map_err(D::Error::custom)?;
        let den = from_wire(&w.den).map_err(D::Error::custom)?;
        SignedRational::new(num, den).map_err(D::Error::custom)
    }
}

/// Number of terms in a geometric sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Count {
    Finite(u64),
    Infinite,
}

/// `first·(1 - ratio^count)/(1 - ratio)`, or `first/(1 - ratio)` for an
/// infinite count. Both arguments must be monomials. An infinite sum is a
/// formal identity in `s⁻¹` and needs a ratio of negative degree.
pub fn geometric_sum(first: &SignedLaurent, ratio: &SignedLaurent, count: Count) -> Result<SignedRational> {
    if first.as_monomial().is_none() && !first.is_zero() {
        return Err(Error::Invalid(format!("first term {first} is not a monomial")));
    }
    let Some((_, deg)) = ratio.as_monomial() else {
        return Err(Error::Invalid(format!("ratio {ratio} is not a monomial")));
    };
    let first = SignedRational::from(first.clone());
    let ratio = SignedRational::from(ratio.clone());
    match count {
        Count::Infinite => {
            if deg >= 0 {
                return Err(Error::Divergent(ratio.to_string()));
            }
            first.checked_div(&(SignedRational::one() - &ratio))
        }
        Count::Finite(0) => Err(Error::Invalid("count must be at least 1".into())),
        Count::Finite(n) => {
            let mut acc = SignedRational::zero();
            let mut term = first;
            for _ in 0..n {
                acc += &term;
                term = &term * &ratio;
            }
            Ok(acc)
        }
    }
}

/// `first/(1 - ratio)` for an arbitrary rational `first` and a monomial
/// `ratio` of negative degree.
pub fn geometric_tail(first: &SignedRational, ratio: &SignedRational) -> Result<SignedRational> {
    match ratio.as_monomial() {
        Some((_, k)) if k < 0 => first.checked_div(&(SignedRational::one() - ratio)),
        _ => Err(Error::Divergent(ratio.to_string())),
    }
}

/// Solves `m·x = rhs` by Gaussian elimination over the field of rational
/// functions. Columns in the error are 1-based.
pub fn solve_linear(m: &[Vec<SignedRational>], rhs: &[SignedRational]) -> Result<Vec<SignedRational>> {
    let n = m.len();
    if rhs.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(Error::Invalid("matrix must be square and match rhs".into()));
    }
    let mut a: Vec<Vec<SignedRational>> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(Error::Singular(col + 1))?;
        a.swap(col, piv);
        let inv = a[col][col].recip()?;
        for j in col..=n {
            a[col][j] = &a[col][j] * &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in col..=n {
                let t = &f * &a[col][j];
                a[r][j] -= &t;
            }
        }
    }
    Ok(a.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q() -> SignedLaurent {
        SignedLaurent::q_pow(1)
    }

    #[test]
    fn eval_substitutes_minus_q() {
        let p = (SignedLaurent::one() + SignedLaurent::s_pow(1)).pow(2) * SignedLaurent::s_pow(-5);
        assert_eq!(p.eval(3), rat(-4, 243));
        assert_eq!(SignedLaurent::one().eval(7), rint(1));
        let w = (q() + SignedLaurent::one()).pow(2) * SignedLaurent::q_pow(-5);
        assert_eq!(w.eval(3), rat(16, 243));
    }

    #[test]
    fn arithmetic_examples() {
        let one = SignedRational::one();
        assert_eq!(&one + &one, SignedRational::int(2));
        let b = SignedRational::from(SignedLaurent::one() - SignedLaurent::s_pow(-1));
        let a = b.recip().unwrap();
        assert!((&a * &b).is_one());
        let s = SignedRational::s_pow(1);
        assert!((&s / &s).is_one());
        assert_eq!(one.checked_div(&SignedRational::zero()), Err(Error::DivisionByZero));
    }

    #[test]
    fn reduction_cancels_common_factors() {
        let f = SignedLaurent::one() + SignedLaurent::s_pow(1);
        let g = SignedLaurent::int(2) - SignedLaurent::s_pow(3);
        let r = SignedRational::new(&f * &g, &f * &SignedLaurent::s_pow(4)).unwrap();
        assert_eq!(r.den(), &SignedLaurent::one());
        assert_eq!(r.num(), &g.shift(-4));
    }

    #[test]
    fn geometric_examples() {
        // q^-5 (q - 1) with ratio q^-1 sums to q^-4.
        let first = SignedLaurent::q_pow(-4) - SignedLaurent::q_pow(-5);
        let sum = geometric_tail(&SignedRational::from(first), &SignedRational::q_pow(-1)).unwrap();
        assert_eq!(sum, SignedRational::q_pow(-4));
        let one = geometric_sum(&SignedLaurent::one(), &SignedLaurent::s_pow(-2), Count::Finite(1)).unwrap();
        assert!(one.is_one());
        let first = SignedLaurent::q_pow(-3) - SignedLaurent::q_pow(-5);
        let sum = geometric_tail(&SignedRational::from(first), &SignedRational::q_pow(-4)).unwrap();
        let expect = SignedRational::q_pow(-1)
            .checked_div(&SignedRational::from(SignedLaurent::from_q_terms(&[(2, 1), (0, 1)])))
            .unwrap();
        assert_eq!(sum, expect);
        assert!(matches!(
            geometric_sum(&SignedLaurent::one(), &SignedLaurent::s_pow(1), Count::Infinite),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn solver_examples() {
        let id: Vec<Vec<SignedRational>> = (0..3)
            .map(|i| (0..3).map(|j| SignedRational::int((i == j) as i64)).collect())
            .collect();
        let rhs: Vec<_> = (0..3).map(SignedRational::s_pow).collect();
        assert_eq!(solve_linear(&id, &rhs).unwrap(), rhs);
        let m = vec![
            vec![SignedRational::int(1), SignedRational::int(1)],
            vec![SignedRational::int(1), SignedRational::int(-1)],
        ];
        let x = solve_linear(&m, &[SignedRational::int(2), SignedRational::zero()]).unwrap();
        assert_eq!(x, vec![SignedRational::one(), SignedRational::one()]);
        let sing = vec![
            vec![SignedRational::int(1), SignedRational::int(2)],
            vec![SignedRational::int(2), SignedRational::int(4)],
        ];
        assert_eq!(
            solve_linear(&sing, &[SignedRational::one(), SignedRational::one()]),
            Err(Error::Singular(2))
        );
    }

    #[test]
    fn json_round_trip() {
        let r = SignedRational::new(SignedLaurent::from_q_terms(&[(2, 1), (0, -1)]), SignedLaurent::s_pow(3)).unwrap();
        let v = r.to_json();
        assert_eq!(SignedRational::from_json(&v).unwrap(), r);
        assert!(v.get("num").is_some() && v.get("den").is_some());
    }

    #[test]
    fn q_string_rendering() {
        let r = SignedRational::int(-1)
            .checked_div(&SignedRational::from(SignedLaurent::from_q_terms(&[(3, 1), (1, -1)])))
            .unwrap();
        assert_eq!(r.to_q_string(), "-1/(q^3 - q)");
        assert_eq!(SignedRational::q_pow(-2).to_q_string(), "q^-2");
    }

    fn arb_laurent() -> impl Strategy<Value = SignedLaurent> {
        prop::collection::btree_map(-3i64..4, -5i64..6, 0..4)
            .prop_map(|m| SignedLaurent::from_map(m.into_iter().map(|(k, c)| (k, rint(c))).collect()))
    }

    fn arb_rational() -> impl Strategy<Value = SignedRational> {
        (arb_laurent(), arb_laurent()).prop_filter_map("nonzero den", |(n, d)| {
            if d.is_zero() {
                None
            } else {
                SignedRational::new(n, d).ok()
            }
        })
    }

    proptest! {
        #[test]
        fn eval_is_a_ring_map(a in arb_laurent(), b in arb_laurent(), q in prop::sample::select(vec![2i64, 3, 4, 5, 7, 8, 9, 11, 13])) {
            prop_assert_eq!((&a + &b).eval(q), a.eval(q) + b.eval(q));
            prop_assert_eq!((&a * &b).eval(q), a.eval(q) * b.eval(q));
        }

        #[test]
        fn rational_eval_is_a_field_map(a in arb_rational(), b in arb_rational(), q in prop::sample::select(vec![3i64, 5, 7, 9, 11, 13])) {
            if let (Ok(x), Ok(y)) = (a.eval(q), b.eval(q)) {
                prop_assert_eq!((&a + &b).eval(q).unwrap(), &x + &y);
                prop_assert_eq!((&a * &b).eval(q).unwrap(), &x * &y);
            }
        }

        #[test]
        fn normalization_is_idempotent(a in arb_rational()) {
            prop_assert_eq!(a.renormalize(), a.clone());
        }

        #[test]
        fn geometric_identity(c in -5i64..6, k in -4i64..4, rk in -4i64..0, rc in prop::sample::select(vec![1i64, -1, 2])) {
            let f = SignedLaurent::monomial(rint(c), k);
            let r = SignedLaurent::monomial(rint(rc), rk);
            let sum = geometric_sum(&f, &r, Count::Infinite).unwrap();
            let back = &sum * &(SignedRational::one() - SignedRational::from(r));
            prop_assert_eq!(back, SignedRational::from(f));
        }
    }
}
