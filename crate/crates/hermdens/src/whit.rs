//! Orbit sums for the weighted densities `W_{h,t}(B,r)`: the Iwahori
//! integral `𝒢(Y,B)`, the weight factor `ℱ_h(Y, A_t^{[r]})`, the stabilizer
//! volume `α(Y;Γ₂ₙ)` and their assembly.
//!
//! `ℱ` depends on `r` only through `x = (−q)^{−2r}`, as `ℱ(1)·x^{−slope}`,
//! so a density is stored as a polynomial in `x`.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::locint::{norm_integral, norm_integral_laurent, trace_pair_integral, trace_pair_integral_laurent, Region};
use crate::reps::{classify, enumerate_reps, is_in_rh, MonomialHermitian, WeightProfile};
use crate::residue::{Elt, UnramifiedRing};
use crate::symb::{rint, Rat, SignedLaurent, SignedRational};

fn s_pow(k: i64) -> SignedRational {
    SignedRational::s_pow(k)
}

fn iwahori_region(k: usize, j: usize) -> Region {
    use std::cmp::Ordering::*;
    match k.cmp(&j) {
        Less => Region::O,
        Equal => Region::Unit,
        Greater => Region::PiO,
    }
}

/// `𝒢(Y,B) = ∫_{Γ₂ₙ} ψ(⟨Y, −B[γ]⟩) dγ` as a product over the orbits of
/// `(k,j) ↦ (τ(k), σ(j))` on matrix slots.
pub fn gram_g(y: &MonomialHermitian, b: &MonomialHermitian) -> Result<SignedRational> {
    gram_g_laurent(y, b).map(SignedRational::from)
}

/// [`gram_g`] as a Laurent polynomial in `s`; every factor is one.
pub fn gram_g_laurent(y: &MonomialHermitian, b: &MonomialHermitian) -> Result<SignedLaurent> {
    if b.size() != y.size() {
        return invalid(format!("Y has size {} but B has size {}", y.size(), b.size()));
    }
    match gram_g_int(y, b) {
        Some(p) => Ok(p.to_laurent()),
        None => Ok(gram_g_generic(y, b)),
    }
}

/// Whether `𝒢(y, b) = 𝒢(y2, b2)`, without building rational coefficients
/// when the integer kernel suffices.
pub fn gram_g_equal(
    y: &MonomialHermitian,
    b: &MonomialHermitian,
    y2: &MonomialHermitian,
    b2: &MonomialHermitian,
) -> Result<bool> {
    if b.size() != y.size() || b2.size() != y2.size() {
        return invalid("Y and B sizes differ");
    }
    match (gram_g_int(y, b), gram_g_int(y2, b2)) {
        (Some(p), Some(p2)) => Ok(p == p2),
        _ => Ok(gram_g_generic(y, b) == gram_g_generic(y2, b2)),
    }
}

/// Calls `f(k, j, k2, j2)` once per slot orbit of `(k,j) ↦ (τ(k), σ(j))`.
fn for_each_slot_orbit(
    y: &MonomialHermitian,
    b: &MonomialHermitian,
    mut f: impl FnMut(usize, usize, usize, usize) -> bool,
) {
    let m = y.size();
    let mut seen = vec![false; m * m];
    for k in 1..=m {
        for j in 1..=m {
            if seen[(k - 1) * m + j - 1] {
                continue;
            }
            let (k2, j2) = (b.sigma(k), y.sigma(j));
            seen[(k - 1) * m + j - 1] = true;
            seen[(k2 - 1) * m + j2 - 1] = true;
            if !f(k, j, k2, j2) {
                return;
            }
        }
    }
}

fn gram_g_generic(y: &MonomialHermitian, b: &MonomialHermitian) -> SignedLaurent {
    let mut acc = SignedLaurent::one();
    for_each_slot_orbit(y, b, |k, j, k2, j2| {
        let e = y.e(j) + b.e(k);
        let factor = if (k, j) == (k2, j2) {
            norm_integral_laurent(iwahori_region(k, j), e)
        } else {
            trace_pair_integral_laurent(iwahori_region(k, j), iwahori_region(k2, j2), e)
        };
        acc *= &factor;
        !acc.is_zero()
    });
    acc
}

/// A Laurent polynomial with small integer coefficients, stored densely
/// from exponent `lo`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct IntPoly {
    lo: i64,
    c: Vec<i128>,
}

impl IntPoly {
    fn from_terms(terms: &[(i64, i128)]) -> Self {
        let Some(lo) = terms.iter().map(|t| t.0).min() else {
            return Self { lo: 0, c: Vec::new() };
        };
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut c = vec![0; (hi - lo + 1) as usize];
        for &(k, v) in terms {
            c[(k - lo) as usize] += v;
        }
        Self { lo, c }.trimmed()
    }

    fn trimmed(mut self) -> Self {
        while self.c.last() == Some(&0) {
            self.c.pop();
        }
        let lead = self.c.iter().take_while(|&&v| v == 0).count();
        self.c.drain(..lead);
        self.lo = if self.c.is_empty() { 0 } else { self.lo + lead as i64 };
        self
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn mul(&self, o: &Self) -> Option<Self> {
        if self.is_zero() || o.is_zero() {
            return Some(Self { lo: 0, c: Vec::new() });
        }
        let mut c = vec![0i128; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] = c[i + j].checked_add(a.checked_mul(*b)?)?;
            }
        }
        Some(Self { lo: self.lo + o.lo, c }.trimmed())
    }

    fn to_laurent(&self) -> SignedLaurent {
        let map = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(i, v)| (self.lo + i as i64, Rat::from_integer((*v).into())))
            .collect();
        SignedLaurent::from_map(map)
    }
}

fn norm_terms(region: Region, e: i64) -> Vec<(i64, i128)> {
    let o = (e.min(0), 1);
    let pio = ((e + 2).min(0) - 2, 1);
    match region {
        Region::O => vec![o],
        Region::PiO => vec![pio],
        Region::Unit => vec![o, (pio.0, -1)],
    }
}

fn ball_terms(region: Region, c: i64, shift: i64, sign: i128) -> Vec<(i64, i128)> {
    match region {
        Region::O => vec![(-2 * c.max(0) + shift, sign)],
        Region::PiO => vec![(-2 * c.max(1) + shift, sign)],
        Region::Unit if c <= 0 => vec![(shift, sign), (shift - 2, -sign)],
        Region::Unit => vec![],
    }
}

fn pair_terms(r1: Region, r2: Region, e: i64) -> Vec<(i64, i128)> {
    match r2 {
        Region::O => ball_terms(r1, -e, 0, 1),
        Region::PiO => ball_terms(r1, -e - 1, -2, 1),
        Region::Unit => {
            let mut t = ball_terms(r1, -e, 0, 1);
            t.extend(ball_terms(r1, -e - 1, -2, -1));
            t
        }
    }
}

/// Integer-coefficient evaluation of `𝒢`; `None` on coefficient overflow.
fn gram_g_int(y: &MonomialHermitian, b: &MonomialHermitian) -> Option<IntPoly> {
    let mut shift = 0i64;
    let mut sign = 1i128;
    let mut acc = IntPoly { lo: 0, c: vec![1] };
    let mut overflow = false;
    for_each_slot_orbit(y, b, |k, j, k2, j2| {
        let e = y.e(j) + b.e(k);
        let terms = if (k, j) == (k2, j2) {
            norm_terms(iwahori_region(k, j), e)
        } else {
            pair_terms(iwahori_region(k, j), iwahori_region(k2, j2), e)
        };
        let f = IntPoly::from_terms(&terms);
        match f.c.len() {
            0 => {
                acc = f;
                false
            }
            1 => {
                shift += f.lo;
                sign *= f.c[0];
                true
            }
            _ => match acc.mul(&f) {
                Some(p) => {
                    acc = p;
                    true
                }
                None => {
                    overflow = true;
                    false
                }
            },
        }
    });
    if overflow {
        return None;
    }
    if acc.is_zero() {
        return Some(IntPoly { lo: 0, c: Vec::new() });
    }
    acc.lo += shift;
    for v in acc.c.iter_mut() {
        *v = v.checked_mul(sign)?;
    }
    Some(acc)
}

/// `ℱ_h(Y, A_t^{[r]})` split as `at_zero · (−q)^{2r·slope}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FProfile {
    pub f_h: SignedRational,
    pub at_zero: SignedRational,
    pub slope: i64,
}

impl FProfile {
    pub fn at(&self, r: i64) -> SignedRational {
        &self.at_zero * &s_pow(2 * r * self.slope)
    }

    /// Exponent of `x` in `ℱ(x) = ℱ(1)·x^k`.
    pub fn x_power(&self) -> i64 {
        -self.slope
    }
}

/// `f_h(Y)`, the `t`-independent factor of `ℱ_h(Y, A_t^{[0]})`.
pub fn f_h(y: &MonomialHermitian, h: usize) -> Result<SignedRational> {
    let c = classify(y, h)?;
    let n = y.n() as i64;
    let mn = |v: i64| v.min(0);
    let mut k = 0;
    for &j in &c.a1 {
        k += n * mn(y.e(j)) + n * mn(y.e(j) + 1);
    }
    for &j in c.a2.iter().filter(|&&j| j < y.sigma(j)) {
        k += 2 * n * mn(y.e(j)) + 2 * n * mn(y.e(j) + 1);
    }
    for &j in &c.b1 {
        k += 4 * n * mn(y.e(j));
    }
    for &j in &c.c1 {
        k += n * mn(y.e(j)) + n * mn(y.e(j) - 1);
    }
    for &j in c.c2.iter().filter(|&&j| j < y.sigma(j)) {
        k += 2 * n * mn(y.e(j)) + 2 * n * mn(y.e(j) - 1);
    }
    Ok(s_pow(k))
}

/// `ℱ_h(Y, A_t^{[r]})` from the slot integrals. Columns `j ≤ 2n−h` carry
/// `L_t`, the rest `L_t^∨`; the `t` rows where `A_t` has `π⁻¹` shift the
/// exponent by `−1` and restrict `L_t` columns to `πO`.
///
/// Also checks the closed form `(−q)^{(n−t)(ℭ−𝔄) − 2t(2n−h)}·f_h(Y)`.
pub fn profile_f(y: &MonomialHermitian, prof: &WeightProfile) -> Result<FProfile> {
    let n = prof.n;
    if y.size() != 2 * n {
        return invalid(format!("Y has size {} but the profile has n = {n}", y.size()));
    }
    let (h, t) = (prof.h, prof.t as i64);
    let cut = 2 * n - h;
    let special_region = |j: usize| if j <= cut { Region::PiO } else { Region::O };
    let mut plain = 0i64;
    let mut special = SignedRational::one();
    for orbit in y.orbits() {
        let j = orbit[0];
        let e = y.e(j);
        let (p, sp) = if orbit.len() == 1 {
            (norm_integral(Region::O, e), norm_integral(special_region(j), e - 1))
        } else {
            let j2 = orbit[1];
            (
                trace_pair_integral(Region::O, Region::O, e),
                trace_pair_integral(special_region(j), special_region(j2), e - 1),
            )
        };
        let (_, pk) = p.as_monomial().expect("slot integral is a monomial");
        plain += pk;
        special *= &sp;
    }
    let at_zero = &s_pow((2 * n as i64 - t) * plain) * &special.pow(t)?;
    let fh = f_h(y, h)?;
    let c = classify(y, h)?;
    let stmt_exp = (n as i64 - t) * (c.frak_c as i64 - c.frak_a as i64) - 2 * t * cut as i64;
    if at_zero != &s_pow(stmt_exp) * &fh {
        return Err(Error::Consistency(format!(
            "F_h({y}) at r=0 is {at_zero}, closed form gives {}",
            &s_pow(stmt_exp) * &fh
        )));
    }
    Ok(FProfile {
        f_h: fh,
        at_zero,
        slope: plain,
    })
}

/// `ℱ′_h(Y, A_n^{[0]}) = −d/dx ℱ_h(Y, A_n^{[r]})` at `x = 1`, checked
/// against the bracket form `{Σ min(0, e_j) …}·f_h(Y)·(−q)^{−2n(2n−h)}`.
pub fn profile_f_prime(y: &MonomialHermitian, n: usize, h: usize) -> Result<SignedRational> {
    let prof = WeightProfile::new(n, h, n, 0)?;
    let f = profile_f(y, &prof)?;
    let value = f.at_zero.scale(&rint(f.slope));
    let c = classify(y, h)?;
    let mn = |j: usize| y.e(j).min(0);
    let bracket: i64 = c.a1.iter().map(|&j| mn(j)).sum::<i64>()
        + c.a2
            .iter()
            .filter(|&&j| j < y.sigma(j))
            .map(|&j| 2 * mn(j))
            .sum::<i64>()
        + c.b1.iter().map(|&j| 2 * mn(j)).sum::<i64>()
        + c.c1.iter().map(|&j| mn(j)).sum::<i64>()
        + c.c2
            .iter()
            .filter(|&&j| j < y.sigma(j))
            .map(|&j| 2 * mn(j))
            .sum::<i64>();
    let printed = (&f.f_h * &s_pow(-2 * (n * (2 * n - h)) as i64)).scale(&rint(bracket));
    if printed != value {
        return Err(Error::Consistency(format!(
            "F'_h({y}): derivative {value} disagrees with bracket form {printed}"
        )));
    }
    Ok(value)
}

/// `α(Y;Γ₂)` in closed form.
pub fn alpha_iwahori_n1(y: &MonomialHermitian) -> Result<SignedRational> {
    if y.size() != 2 {
        return invalid(format!("closed-form alpha needs size 2, got {}", y.size()));
    }
    let q1sq = SignedRational::from(SignedLaurent::from_q_terms(&[(2, 1), (1, 2), (0, 1)]));
    if y.is_diagonal() {
        let (m1, m2) = (y.e(1), y.e(2));
        let k = if m1 >= m2 { -4 + m1 + 3 * m2 } else { -2 + 3 * m1 + m2 };
        Ok(&q1sq * &SignedRational::q_pow(k))
    } else {
        let e = y.e(1);
        let c = SignedRational::from(SignedLaurent::from_q_terms(&[(3, 1), (1, -1)]));
        Ok(&c * &SignedRational::q_pow(-4 + 4 * e))
    }
}

/// Default cap on `(2n)²·d·log₂(q²)` for [`alpha_iwahori_brute`].
pub const DEFAULT_BRUTE_BUDGET: f64 = 38.0;

/// `q^{−4dn²}·#{γ ∈ Γ₂ₙ mod π^d : γYγ* ≡ Y mod π^d}`, by direct count.
pub fn alpha_iwahori_brute(y: &MonomialHermitian, q: u64, d: u32, budget: f64) -> Result<Rat> {
    let m = y.size();
    if d == 0 {
        return invalid("d must be positive");
    }
    if y.e_vec().iter().any(|&e| e < 0) {
        return invalid(format!("brute count needs integral Y, got {y}"));
    }
    let cost = (m * m) as f64 * d as f64 * ((q * q) as f64).log2();
    if cost > budget {
        return Err(Error::Budget(format!(
            "gamma space mod pi^{d} has q^{} = 2^{cost:.1} elements, budget is 2^{budget}",
            2 * d as usize * m * m
        )));
    }
    let ring = UnramifiedRing::new(q, d)?;
    let target = |i: usize, j: usize| -> Elt {
        if y.sigma(j) == i {
            ring.pi_pow(y.e(j) as u32)
        } else {
            (0, 0)
        }
    };
    // (γYγ*)_{ij} = Σ_l γ_{i,σ(l)} π^{e_l} conj(γ_{j,l})
    let entry = |u: &[Elt], v: &[Elt]| -> Elt {
        let mut acc = (0, 0);
        for l in 1..=m {
            let w = ring.mul(u[y.sigma(l) - 1], ring.pi_pow(y.e(l) as u32));
            acc = ring.add(acc, ring.mul(w, ring.conj(v[l - 1])));
        }
        acc
    };
    let elts: Vec<Elt> = ring.elements().collect();
    let mut rows: Vec<Vec<Vec<Elt>>> = Vec::with_capacity(m);
    for i in 1..=m {
        let allowed: Vec<Vec<Elt>> = (1..=m)
            .map(|k| {
                let reg = iwahori_region(i, k);
                elts.iter()
                    .copied()
                    .filter(|&(a, b)| ring.contains(reg, a, b))
                    .collect()
            })
            .collect();
        let mut cands = Vec::new();
        let mut cur = vec![(0, 0); m];
        fn rec(
            k: usize,
            allowed: &[Vec<Elt>],
            cur: &mut Vec<Elt>,
            out: &mut Vec<Vec<Elt>>,
            keep: &dyn Fn(&[Elt]) -> bool,
        ) {
            if k == allowed.len() {
                if keep(cur) {
                    out.push(cur.clone());
                }
                return;
            }
            for &x in &allowed[k] {
                cur[k] = x;
                rec(k + 1, allowed, cur, out, keep);
            }
        }
        let t = target(i, i);
        rec(0, &allowed, &mut cur, &mut cands, &|v| entry(v, v) == t);
        rows.push(cands);
    }
    fn extend(
        depth: usize,
        chosen: &mut Vec<usize>,
        rows: &[Vec<Vec<Elt>>],
        ok: &(dyn Fn(usize, &[Elt], usize, &[Elt]) -> bool + Sync),
    ) -> u64 {
        if depth == rows.len() {
            return 1;
        }
        let mut total = 0;
        for (idx, cand) in rows[depth].iter().enumerate() {
            if chosen.iter().enumerate().all(|(i, &c)| ok(i, &rows[i][c], depth, cand)) {
                chosen.push(idx);
                total += extend(depth + 1, chosen, rows, ok);
                chosen.pop();
            }
        }
        total
    }
    let ok = |i: usize, u: &[Elt], j: usize, v: &[Elt]| entry(u, v) == target(i + 1, j + 1);
    let count: u64 = (0..rows[0].len())
        .into_par_iter()
        .map(|idx| {
            let mut chosen = vec![idx];
            extend(1, &mut chosen, &rows, &ok)
        })
        .sum();
    let n = (m / 2) as u32;
    let scale = num_traits::pow(rint(q as i64), (4 * d * n * n) as usize);
    Ok(rint(count as i64) / scale)
}

/// One summand of the orbit sum `Σ_Y 𝒢(Y,B)ℱ_h(Y,A_t^{[r]})/α(Y;Γ₂ₙ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaTerm {
    pub y: MonomialHermitian,
    pub g: SignedRational,
    pub f_base: SignedRational,
    pub f_at_zero: SignedRational,
    pub slope: i64,
    pub alpha: SignedRational,
}

impl GammaTerm {
    /// The summand at `r = 0`.
    pub fn value(&self) -> SignedRational {
        &(&self.g * &self.f_at_zero) / &self.alpha
    }
}

pub fn gamma_term_n1(y: &MonomialHermitian, b: &MonomialHermitian, h: usize, t: usize) -> Result<GammaTerm> {
    let prof = WeightProfile::new(1, h, t, 0)?;
    let f = profile_f(y, &prof)?;
    Ok(GammaTerm {
        y: y.clone(),
        g: gram_g(y, b)?,
        f_base: f.f_h,
        f_at_zero: f.at_zero,
        slope: f.slope,
        alpha: alpha_iwahori_n1(y)?,
    })
}

/// A polynomial in `x = (−q)^{−2r}` with rational-function coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct XPoly(pub BTreeMap<i64, SignedRational>);

impl XPoly {
    fn add(&mut self, k: i64, c: SignedRational) {
        let slot = self.0.entry(k).or_insert_with(SignedRational::zero);
        *slot += &c;
        if slot.is_zero() {
            self.0.remove(&k);
        }
    }

    /// Value at `x = 1`, i.e. `r = 0`.
    pub fn value(&self) -> SignedRational {
        self.0.values().cloned().sum()
    }

    /// `−d/dx` at `x = 1`.
    pub fn derivative(&self) -> SignedRational {
        self.0.iter().map(|(&k, c)| c.scale(&rint(-k))).sum()
    }

    pub fn at_r(&self, r: i64) -> SignedRational {
        self.0.iter().map(|(&k, c)| c * &s_pow(-2 * r * k)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WDensity {
    pub poly: XPoly,
    pub value: SignedRational,
    pub derivative: SignedRational,
}

fn check_profile(b: &MonomialHermitian, h: usize, t: usize) -> Result<()> {
    if b.size() != 2 {
        return invalid(format!("symbolic densities need n = 1, got size {}", b.size()));
    }
    if h > 2 || t > 1 {
        return invalid(format!("need h ∈ {{0,1,2}}, t ∈ {{0,1}}; got h={h}, t={t}"));
    }
    if is_in_rh(b, h).is_none() {
        return invalid(format!("{b} is not in R^h for h = {h}"));
    }
    Ok(())
}

/// Lowest exponent at which a summand can be nonzero: below it some slot
/// on the diagonal of `Γ₂` integrates to zero.
fn lower_cutoff(b: &MonomialHermitian) -> i64 {
    b.e_vec().iter().map(|&l| -l - 1).min().unwrap_or(0)
}

/// `W_{h,t}(B,r)` for `n = 1` as an exact polynomial in `x`.
pub fn w_density_n1(b: &MonomialHermitian, h: usize, t: usize) -> Result<WDensity> {
    w_density_n1_refined(b, h, t, 0)
}

/// As [`w_density_n1`] with the finite/tail breakpoint moved up by `extra`.
/// Every refinement yields the same result.
pub fn w_density_n1_refined(b: &MonomialHermitian, h: usize, t: usize, extra: i64) -> Result<WDensity> {
    check_profile(b, h, t)?;
    let lo = lower_cutoff(b);
    let min_l = b.e_vec().iter().copied().min().unwrap_or(0);
    let p = 2.max(3 - min_l) + extra.max(0);

    let diag = |m1: i64, m2: i64| -> Result<(SignedRational, i64)> {
        let y = MonomialHermitian::diag(&[m1, m2])?;
        let g = gamma_term_n1(&y, b, h, t)?;
        Ok((g.value(), g.slope))
    };
    let anti = |e: i64| -> Result<(SignedRational, i64)> {
        let y = MonomialHermitian::new(vec![2, 1], vec![e, e])?;
        let g = gamma_term_n1(&y, b, h, t)?;
        Ok((g.value(), g.slope))
    };

    // Below the cutoff everything vanishes.
    for k in lo - 3..lo {
        for other in lo - 3..p + 3 {
            if !diag(k, other)?.0.is_zero() || !diag(other, k)?.0.is_zero() || !anti(k)?.0.is_zero() {
                return Err(Error::Consistency(format!(
                    "nonzero summand below cutoff {lo} for B = {b}"
                )));
            }
        }
    }

    let mut poly = XPoly::default();
    let push = |(v, slope): (SignedRational, i64), poly: &mut XPoly| {
        if !v.is_zero() {
            poly.add(-slope, v);
        }
    };

    for e in lo..p {
        push(anti(e)?, &mut poly);
    }
    push(tail_1d(|i| anti(p + i))?, &mut poly);

    for m1 in lo..p {
        for m2 in lo..p {
            push(diag(m1, m2)?, &mut poly);
        }
    }
    for fixed in lo..p {
        push(tail_1d(|i| diag(fixed, p + i))?, &mut poly);
        push(tail_1d(|i| diag(p + i, fixed))?, &mut poly);
    }
    // μ₁ ≥ μ₂ ≥ P: μ₂ = P + a, μ₁ = μ₂ + b.
    push(cone(|a, b| diag(p + a + b, p + a))?, &mut poly);
    // P ≤ μ₁ < μ₂: μ₁ = P + a, μ₂ = μ₁ + 1 + b.
    push(cone(|a, b| diag(p + a, p + a + 1 + b))?, &mut poly);

    let value = poly.value();
    let derivative = poly.derivative();
    Ok(WDensity {
        poly,
        value,
        derivative,
    })
}

fn monomial_ratio(num: &SignedRational, den: &SignedRational) -> Result<SignedRational> {
    let r = num.checked_div(den)?;
    if r.as_monomial().is_none() {
        return Err(Error::Consistency(format!("tail ratio {r} is not a monomial")));
    }
    Ok(r)
}

/// `Σ_{i≥0} f(i)` for a sequence that is geometric with constant slope.
fn tail_1d<F>(f: F) -> Result<(SignedRational, i64)>
where
    F: Fn(i64) -> Result<(SignedRational, i64)>,
{
    let terms: Vec<_> = (0..4).map(&f).collect::<Result<_>>()?;
    let slope = terms[0].1;
    if terms.iter().any(|t| t.1 != slope) {
        return Err(Error::Consistency("slope varies along a tail".into()));
    }
    if terms[0].0.is_zero() {
        if terms.iter().any(|t| !t.0.is_zero()) {
            return Err(Error::Consistency("tail starts at zero but does not stay zero".into()));
        }
        return Ok((SignedRational::zero(), slope));
    }
    let ratio = monomial_ratio(&terms[1].0, &terms[0].0)?;
    for w in terms.windows(2).skip(1) {
        if monomial_ratio(&w[1].0, &w[0].0)? != ratio {
            return Err(Error::Consistency("tail is not geometric".into()));
        }
    }
    Ok((crate::symb::geometric_tail(&terms[0].0, &ratio)?, slope))
}

/// `Σ_{a,b≥0} f(a,b)` for `f(a,b) = f(0,0)·ρ_a^a·ρ_b^b`.
fn cone<F>(f: F) -> Result<(SignedRational, i64)>
where
    F: Fn(i64, i64) -> Result<(SignedRational, i64)>,
{
    let grid: Vec<Vec<_>> = (0..3)
        .map(|a| (0..3).map(|b| f(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let base = &grid[0][0];
    if grid.iter().flatten().any(|t| t.1 != base.1) {
        return Err(Error::Consistency("slope varies inside a cone".into()));
    }
    if base.0.is_zero() {
        if grid.iter().flatten().any(|t| !t.0.is_zero()) {
            return Err(Error::Consistency("cone starts at zero but does not stay zero".into()));
        }
        return Ok((SignedRational::zero(), base.1));
    }
    let ra = monomial_ratio(&grid[1][0].0, &base.0)?;
    let rb = monomial_ratio(&grid[0][1].0, &base.0)?;
    for a in 0..3 {
        for b in 0..3 {
            let expect = &(&base.0 * &ra.pow(a as i64)?) * &rb.pow(b as i64)?;
            if grid[a][b].0 != expect {
                return Err(Error::Consistency(
                    "cone summand is not a product of geometric factors".into(),
                ));
            }
        }
    }
    let inner = crate::symb::geometric_tail(&base.0, &rb)?;
    Ok((crate::symb::geometric_tail(&inner, &ra)?, base.1))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub window: (i64, i64),
    /// The window actually summed, after raising a too-high lower end.
    pub effective_window: (i64, i64),
    pub lower_widened: bool,
    /// Nothing was summed.
    pub empty: bool,
    pub widened_value: String,
    /// `|value − widened value|` where the widened window adds 2 on both sides.
    pub delta: String,
    pub delta_f64: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedDensity {
    pub value: Rat,
    /// `−d/dx` at `x = 1` of the truncated sum.
    pub derivative: Rat,
    pub tail: TailReport,
}

fn truncated_sum(b: &MonomialHermitian, prof: &WeightProfile, q: i64, lo: i64, hi: i64) -> Result<(Rat, Rat)> {
    if lo > hi {
        return Ok((Rat::zero(), Rat::zero()));
    }
    let ys: Vec<MonomialHermitian> = enumerate_reps(1, lo, hi).collect();
    let parts: Vec<(Rat, Rat)> = ys
        .par_iter()
        .map(|y| -> Result<(Rat, Rat)> {
            let g = gram_g(y, b)?;
            if g.is_zero() {
                return Ok((Rat::zero(), Rat::zero()));
            }
            let f = profile_f(y, prof)?;
            let alpha = alpha_iwahori_n1(y)?;
            let base = (&(&g * &f.at_zero) / &alpha).eval(q)?;
            let value = (&(&g * &f.at(prof.r as i64)) / &alpha).eval(q)?;
            Ok((value, base * rint(f.slope)))
        })
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold((Rat::zero(), Rat::zero()), |(a, b), (c, d)| (a + c, b + d)))
}

/// Partial sum of the orbit series over exponents in `window`, evaluated at
/// a concrete `q`.
pub fn w_density_truncated(
    b: &MonomialHermitian,
    prof: &WeightProfile,
    q: u64,
    window: (i64, i64),
) -> Result<TruncatedDensity> {
    if prof.n != 1 {
        return invalid("truncated densities need n = 1: alpha(Y) is only available in closed form there");
    }
    check_profile(b, prof.h, prof.t)?;
    if !crate::residue::is_prime(q) || q == 2 {
        return invalid(format!("q must be an odd prime, got {q}"));
    }
    let q = q as i64;
    let (lo, hi) = window;
    if lo > hi {
        let tail = TailReport {
            window,
            effective_window: window,
            lower_widened: false,
            empty: true,
            widened_value: "unknown".into(),
            delta: "unbounded".into(),
            delta_f64: f64::INFINITY,
        };
        return Ok(TruncatedDensity {
            value: Rat::zero(),
            derivative: Rat::zero(),
            tail,
        });
    }
    let cutoff = lower_cutoff(b);
    let eff_lo = lo.min(cutoff);
    let (value, derivative) = truncated_sum(b, prof, q, eff_lo, hi)?;
    let (wide, _) = truncated_sum(b, prof, q, eff_lo - 2, hi + 2)?;
    let delta = num_traits::abs(wide.clone() - value.clone());
    let tail = TailReport {
        window,
        effective_window: (eff_lo, hi),
        lower_widened: eff_lo < lo,
        empty: false,
        widened_value: crate::symb::format_rat(&wide),
        delta_f64: rat_to_f64(&delta),
        delta: crate::symb::format_rat(&delta),
    };
    Ok(TruncatedDensity {
        value,
        derivative,
        tail,
    })
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locint::trace_integral_j1;
    use crate::reps::{dual_vee, dual_wedge, enumerate_rh};
    use crate::symb::rat;

    fn q_l(terms: &[(i64, i64)]) -> SignedRational {
        SignedRational::from(SignedLaurent::from_q_terms(terms))
    }

    fn a1() -> MonomialHermitian {
        MonomialHermitian::a_t(1, 1).unwrap()
    }

    fn anti(e: i64) -> MonomialHermitian {
        MonomialHermitian::new(vec![2, 1], vec![e, e]).unwrap()
    }

    fn istar(e: i64) -> SignedRational {
        norm_integral(Region::Unit, e)
    }

    #[test]
    fn g_diag_against_a1() {
        for m1 in -3..4 {
            for m2 in -3..4 {
                let y = MonomialHermitian::diag(&[m1, m2]).unwrap();
                let expect = &(&istar(m1) * &istar(m2 - 1)) * &s_pow((m1 + 1).min(0) + m2.min(0) - 2);
                assert_eq!(gram_g(&y, &a1()).unwrap(), expect, "{y}");
            }
        }
    }

    #[test]
    fn g_antidiag_against_a1() {
        let expect = q_l(&[(-2, 1), (-4, -2), (-6, 1)]);
        for e in 0..4 {
            assert_eq!(gram_g(&anti(e), &a1()).unwrap(), expect);
        }
        let y = MonomialHermitian::diag(&[-2, 0]).unwrap();
        assert!(gram_g(&y, &a1()).unwrap().is_zero());
        // The product of the two pair integrals, written with J₁.
        for e in -2..3 {
            let u = SignedRational::one() - s_pow(-2);
            let expect = &(&(&u * &trace_integral_j1(e)) * &u) * &s_pow(-2);
            assert_eq!(gram_g(&anti(e), &a1()).unwrap(), expect, "e={e}");
        }
    }

    #[test]
    fn g_size_mismatch() {
        assert!(gram_g(&anti(0), &MonomialHermitian::diag(&[0, 0, 0, 0]).unwrap()).is_err());
    }

    #[test]
    fn f_examples() {
        let prof = WeightProfile::new(1, 1, 1, 0).unwrap();
        let y = MonomialHermitian::diag(&[0, 0]).unwrap();
        assert_eq!(profile_f(&y, &prof).unwrap().at_zero, s_pow(-3));
        for e in 0..3 {
            assert_eq!(profile_f(&anti(e), &prof).unwrap().at_zero, SignedRational::q_pow(-2));
        }
        let y = MonomialHermitian::diag(&[1, 2]).unwrap();
        for h in 0..=2 {
            for t in 0..=1 {
                let prof = WeightProfile::new(1, h, t, 0).unwrap();
                assert_eq!(profile_f(&y, &prof).unwrap().slope, 0);
            }
        }
    }

    #[test]
    fn f_statement_form_all_small_y() {
        for n in 1..=2 {
            for y in enumerate_reps(n, -2, 2) {
                for h in 0..=2 * n {
                    for t in 0..=n {
                        let prof = WeightProfile::new(n, h, t, 0).unwrap();
                        profile_f(&y, &prof).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn f_depends_on_r_through_x() {
        let y = MonomialHermitian::diag(&[-1, 0]).unwrap();
        let prof = WeightProfile::new(1, 1, 1, 0).unwrap();
        let f = profile_f(&y, &prof).unwrap();
        assert_eq!(f.slope, -1);
        for r in 0..4 {
            assert_eq!(f.at(r as i64), &f.at_zero * &s_pow(-2 * r as i64));
        }
    }

    #[test]
    fn f_prime_examples() {
        let y = MonomialHermitian::diag(&[-1, 0]).unwrap();
        let fp = profile_f_prime(&y, 1, 1).unwrap();
        let expect = (&f_h(&y, 1).unwrap() * &s_pow(-2)).scale(&rint(-1));
        assert_eq!(fp, expect);
        let y = MonomialHermitian::diag(&[2, 3]).unwrap();
        assert!(profile_f_prime(&y, 1, 1).unwrap().is_zero());
    }

    #[test]
    fn f_prime_duality() {
        for y in enumerate_reps(1, -3, 3) {
            for h in 0..=2usize {
                let c = classify(&y, h).unwrap();
                let yw = dual_wedge(&y, h).unwrap();
                let lhs = &profile_f_prime(&y, 1, h).unwrap() / &alpha_iwahori_n1(&y).unwrap()
                    - &profile_f_prime(&yw, 1, 2 - h).unwrap() / &alpha_iwahori_n1(&yw).unwrap();
                let rhs = &(&f_h(&y, h).unwrap() * &s_pow(-2 * (2 - h as i64)))
                    .scale(&rint(c.frak_c as i64 - c.frak_a as i64))
                    / &alpha_iwahori_n1(&y).unwrap();
                assert_eq!(lhs, rhs, "{y} h={h}");
            }
        }
    }

    #[test]
    fn alpha_examples() {
        let q1sq = q_l(&[(2, 1), (1, 2), (0, 1)]);
        let y = MonomialHermitian::diag(&[0, 0]).unwrap();
        assert_eq!(alpha_iwahori_n1(&y).unwrap(), &q1sq * &SignedRational::q_pow(-4));
        assert_eq!(alpha_iwahori_n1(&anti(0)).unwrap(), q_l(&[(-1, 1), (-3, -1)]));
        let y = MonomialHermitian::diag(&[-1, 0]).unwrap();
        assert_eq!(alpha_iwahori_n1(&y).unwrap(), &q1sq * &SignedRational::q_pow(-5));
        assert!(alpha_iwahori_n1(&MonomialHermitian::diag(&[0, 0, 0, 0]).unwrap()).is_err());
    }

    #[test]
    fn alpha_duality_closed_form() {
        for y in enumerate_reps(1, -3, 3) {
            for h in 0..=2i64 {
                let yw = dual_wedge(&y, h as usize).unwrap();
                let lhs = &SignedRational::q_pow((2 - h).pow(2) - h * h) * &alpha_iwahori_n1(&y).unwrap();
                assert_eq!(lhs, alpha_iwahori_n1(&yw).unwrap(), "{y} h={h}");
            }
        }
    }

    #[test]
    fn alpha_brute_small() {
        let b = DEFAULT_BRUTE_BUDGET;
        let y = MonomialHermitian::diag(&[0, 0]).unwrap();
        assert_eq!(
            alpha_iwahori_brute(&y, 3, 1, b).unwrap(),
            alpha_iwahori_brute(&y, 3, 2, b).unwrap()
        );
        assert_eq!(alpha_iwahori_brute(&y, 3, 2, b).unwrap(), rat(16, 81));
        assert_eq!(alpha_iwahori_brute(&anti(0), 3, 2, b).unwrap(), rat(24, 81));
        for e in [[1, 0], [0, 1]] {
            let y = MonomialHermitian::diag(&e).unwrap();
            assert_eq!(
                alpha_iwahori_brute(&y, 3, 2, b).unwrap(),
                alpha_iwahori_n1(&y).unwrap().eval(3).unwrap()
            );
        }
        assert!(matches!(alpha_iwahori_brute(&y, 7, 2, b), Err(Error::Budget(_))));
        assert!(alpha_iwahori_brute(&MonomialHermitian::diag(&[-1, 0]).unwrap(), 3, 1, b).is_err());
    }

    #[test]
    fn integer_kernel_matches_slot_integrals() {
        for r1 in Region::ALL {
            for e in -5..=5 {
                assert_eq!(
                    IntPoly::from_terms(&norm_terms(r1, e)).to_laurent(),
                    norm_integral_laurent(r1, e)
                );
                for r2 in Region::ALL {
                    assert_eq!(
                        IntPoly::from_terms(&pair_terms(r1, r2, e)).to_laurent(),
                        trace_pair_integral_laurent(r1, r2, e)
                    );
                }
            }
        }
        for y in enumerate_reps(1, -2, 2) {
            for b in enumerate_rh(1, 1, -1, 2) {
                assert_eq!(
                    gram_g_int(&y, &b).unwrap().to_laurent(),
                    gram_g_generic(&y, &b),
                    "{y} {b}"
                );
            }
        }
        // equality on the integer kernel must agree with equality of the values, zeros included
        let ys: Vec<_> = enumerate_reps(1, -2, 1).collect();
        let b = MonomialHermitian::diag(&[-1, -1]).unwrap();
        for y1 in &ys {
            for y2 in &ys {
                let want = gram_g_generic(y1, &b) == gram_g_generic(y2, &b);
                assert_eq!(gram_g_equal(y1, &b, y2, &b).unwrap(), want, "{y1} {y2}");
            }
        }
    }

    #[test]
    fn g_duality_n1() {
        for h in 0..=2 {
            for b in enumerate_rh(1, h, -1, 2) {
                let bv = dual_vee(&b, h).unwrap();
                for y in enumerate_reps(1, -2, 2) {
                    let yw = dual_wedge(&y, h).unwrap();
                    assert_eq!(gram_g(&y, &b).unwrap(), gram_g(&yw, &bv).unwrap(), "Y={y} B={b} h={h}");
                }
            }
        }
    }

    #[test]
    fn w11_a1() {
        let w = w_density_n1(&a1(), 1, 1).unwrap();
        assert_eq!(w.value, q_l(&[(-3, 1), (-4, 2), (-5, 1)]));
        let w10 = w_density_n1(&a1(), 1, 0).unwrap();
        assert!(w10.value.is_zero());
    }

    #[test]
    fn w_refinement_invariance() {
        for h in 0..=2 {
            for b in enumerate_rh(1, h, -1, 1) {
                for t in 0..=1 {
                    let a = w_density_n1(&b, h, t).unwrap();
                    let c = w_density_n1_refined(&b, h, t, 3).unwrap();
                    assert_eq!(a, c, "B={b} h={h} t={t}");
                }
            }
        }
    }

    #[test]
    fn w_poly_derivative() {
        let w = w_density_n1(&MonomialHermitian::diag(&[0, 1]).unwrap(), 0, 1).unwrap();
        assert_eq!(w.value, w.poly.at_r(0));
        let d: SignedRational = w.poly.0.iter().map(|(&k, c)| c.scale(&rint(-k))).sum();
        assert_eq!(w.derivative, d);
    }

    #[test]
    fn truncated_matches_symbolic() {
        let prof = WeightProfile::new(1, 1, 1, 0).unwrap();
        let t = w_density_truncated(&a1(), &prof, 3, (-3, 24)).unwrap();
        let exact = rat(16, 243);
        assert!(rat_to_f64(&num_traits::abs(t.value - exact)) < 1e-9);
        assert!(t.tail.delta_f64 < 1e-9);
        let e = w_density_truncated(&a1(), &prof, 3, (5, 1)).unwrap();
        assert!(e.value.is_zero() && e.tail.empty);
        let w = w_density_truncated(&a1(), &prof, 3, (4, 10)).unwrap();
        assert!(w.tail.lower_widened);
    }

    #[test]
    fn rejects_b_outside_rh() {
        assert!(w_density_n1(&anti(0), 0, 1).is_err());
    }
}
