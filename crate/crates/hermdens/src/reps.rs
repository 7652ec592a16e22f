//! Monomial hermitian representatives `Y_{σ,e}` and the index bookkeeping
//! attached to a weight `h`.
//!
//! Indices are 1-based everywhere in the public API. The matrix `Y_{σ,e}`
//! has `π^{e_i}` in row `σ(i)`, column `i` and zeros elsewhere.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonomialHermitian {
    sigma: Vec<usize>,
    e: Vec<i64>,
}

impl MonomialHermitian {
    /// `sigma` lists the images `σ(1), …, σ(2n)`.
    pub fn new(sigma: Vec<usize>, e: Vec<i64>) -> Result<Self> {
        let size = sigma.len();
        if size == 0 || !size.is_multiple_of(2) {
            return invalid(format!("size must be even and positive, got {size}"));
        }
        if e.len() != size {
            return invalid(format!("sigma has {size} entries but e has {}", e.len()));
        }
        for (i, &s) in sigma.iter().enumerate() {
            if s == 0 || s > size {
                return invalid(format!("sigma({}) = {s} out of range", i + 1));
            }
            if sigma[s - 1] != i + 1 {
                return invalid(format!("sigma is not an involution at {}", i + 1));
            }
            if e[i] != e[s - 1] {
                return invalid(format!("e_{} = {} differs from e_{} = {}", i + 1, e[i], s, e[s - 1]));
            }
        }
        Ok(Self { sigma, e })
    }

    pub fn diag(e: &[i64]) -> Result<Self> {
        Self::new((1..=e.len()).collect(), e.to_vec())
    }

    /// `A_t = diag(1_{2n-t}, π⁻¹ 1_t)`.
    pub fn a_t(n: usize, t: usize) -> Result<Self> {
        if n == 0 || t > n {
            return invalid(format!("A_t needs n ≥ 1 and 0 ≤ t ≤ n, got n={n}, t={t}"));
        }
        let mut e = vec![0; 2 * n - t];
        e.extend(std::iter::repeat_n(-1, t));
        Self::diag(&e)
    }

    pub fn size(&self) -> usize {
        self.sigma.len()
    }

    pub fn n(&self) -> usize {
        self.sigma.len() / 2
    }

    pub fn sigma(&self, i: usize) -> usize {
        self.sigma[i - 1]
    }

    pub fn e(&self, i: usize) -> i64 {
        self.e[i - 1]
    }

    pub fn sigma_vec(&self) -> &[usize] {
        &self.sigma
    }

    pub fn e_vec(&self) -> &[i64] {
        &self.e
    }

    pub fn is_diagonal(&self) -> bool {
        self.sigma.iter().enumerate().all(|(i, &s)| s == i + 1)
    }

    /// Valuation of the determinant.
    pub fn det_val(&self) -> i64 {
        self.e.iter().sum()
    }

    /// Orbits of σ as sorted index lists, ordered by smallest element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        involution_orbits(&self.sigma)
    }
}

impl fmt::Display for MonomialHermitian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        if self.is_diagonal() {
            write!(f, "diag:{}", join(self.e.iter().map(|x| x.to_string()).collect()))
        } else {
            write!(
                f,
                "mono:sigma=[{}];e=[{}]",
                join(self.sigma.iter().map(|x| x.to_string()).collect()),
                join(self.e.iter().map(|x| x.to_string()).collect())
            )
        }
    }
}

impl fmt::Debug for MonomialHermitian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    let s = s.trim().trim_start_matches('[').trim_end_matches(']');
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<T>()
                .map_err(|_| Error::Invalid(format!("bad list entry {x:?}")))
        })
        .collect()
}

impl FromStr for MonomialHermitian {
    type Err = Error;

    /// Accepts `diag:e1,...,e2n` and `mono:sigma=[...];e=[...]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("diag:") {
            return Self::diag(&parse_list::<i64>(rest)?);
        }
        if let Some(rest) = s.strip_prefix("mono:") {
            let mut sigma = None;
            let mut e = None;
            for part in rest.split(';') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Invalid(format!("expected key=value in {part:?}")))?;
                match k.trim() {
                    "sigma" => sigma = Some(parse_list::<usize>(v)?),
                    "e" => e = Some(parse_list::<i64>(v)?),
                    other => return invalid(format!("unknown key {other:?}")),
                }
            }
            let sigma = sigma.ok_or_else(|| Error::Invalid("missing sigma".into()))?;
            let e = e.ok_or_else(|| Error::Invalid("missing e".into()))?;
            return Self::new(sigma, e);
        }
        invalid(format!(
            "unrecognized matrix form {s:?}; use diag:... or mono:sigma=[...];e=[...]"
        ))
    }
}

fn involution_orbits(sigma: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for i in 1..=sigma.len() {
        let j = sigma[i - 1];
        if j == i {
            out.push(vec![i]);
        } else if i < j {
            out.push(vec![i, j]);
        }
    }
    out
}

/// All involutions of `{1..size}`, ordered by number of transpositions and
/// then lexicographically by image sequence.
pub fn involutions(size: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match cur.iter().position(|&x| x == 0) {
            None => out.push(cur.clone()),
            Some(i) => {
                cur[i] = i + 1;
                rec(cur, out);
                cur[i] = 0;
                for j in i + 1..cur.len() {
                    if cur[j] == 0 {
                        cur[i] = j + 1;
                        cur[j] = i + 1;
                        rec(cur, out);
                        cur[i] = 0;
                        cur[j] = 0;
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![0; size], &mut out);
    out.sort_by_key(|s| (s.iter().enumerate().filter(|(i, &x)| x != i + 1).count(), s.clone()));
    out
}

/// Every `Y_{σ,e}` of size `2n` with all `e_i ∈ [e_min, e_max]`, each once.
pub fn enumerate_reps(n: usize, e_min: i64, e_max: i64) -> impl Iterator<Item = MonomialHermitian> {
    let invs = if e_min > e_max || n == 0 {
        vec![]
    } else {
        involutions(2 * n)
    };
    invs.into_iter().flat_map(move |sigma| {
        let orbits = involution_orbits(&sigma);
        let width = (e_max - e_min + 1) as u64;
        let total = width.pow(orbits.len() as u32);
        (0..total).map(move |mut idx| {
            let mut vals = vec![0i64; orbits.len()];
            for slot in vals.iter_mut().rev() {
                *slot = e_min + (idx % width) as i64;
                idx /= width;
            }
            let mut e = vec![0i64; sigma.len()];
            for (orb, v) in orbits.iter().zip(&vals) {
                for &i in orb {
                    e[i - 1] = *v;
                }
            }
            MonomialHermitian {
                sigma: sigma.clone(),
                e,
            }
        })
    })
}

/// Selects the weight function and padded form: `1_{h,t}` and `A_t^{[r]}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightProfile {
    pub n: usize,
    pub h: usize,
    pub t: usize,
    pub r: usize,
}

impl WeightProfile {
    pub fn new(n: usize, h: usize, t: usize, r: usize) -> Result<Self> {
        if n == 0 || h > 2 * n || t > n {
            return invalid(format!("need n ≥ 1, 0 ≤ h ≤ 2n, 0 ≤ t ≤ n; got n={n}, h={h}, t={t}"));
        }
        Ok(Self { n, h, t, r })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Class {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

impl Class {
    pub fn is_a(self) -> bool {
        matches!(self, Class::A1 | Class::A2)
    }
    pub fn is_b(self) -> bool {
        matches!(self, Class::B1 | Class::B2)
    }
    pub fn is_c(self) -> bool {
        matches!(self, Class::C1 | Class::C2)
    }
}

/// Class of index `j` relative to the split `2n = (2n-h) + h`. An index
/// whose partner crosses the split is a `B` index, never `A2`/`C2`.
pub fn class_of(y: &MonomialHermitian, h: usize, j: usize) -> Class {
    let cut = y.size() - h;
    let sj = y.sigma(j);
    match (j <= cut, sj <= cut) {
        (true, true) if sj == j => Class::A1,
        (true, true) => Class::A2,
        (true, false) => Class::B1,
        (false, true) => Class::B2,
        (false, false) if sj == j => Class::C1,
        (false, false) => Class::C2,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IndexClasses {
    pub a1: Vec<usize>,
    pub a2: Vec<usize>,
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    pub c1: Vec<usize>,
    pub c2: Vec<usize>,
    pub frak_a: usize,
    pub frak_c: usize,
    pub xi: usize,
}

pub fn classify(y: &MonomialHermitian, h: usize) -> Result<IndexClasses> {
    if h > y.size() {
        return invalid(format!("h = {h} exceeds size {}", y.size()));
    }
    let mut c = IndexClasses::default();
    for j in 1..=y.size() {
        let cl = class_of(y, h, j);
        match cl {
            Class::A1 => c.a1.push(j),
            Class::A2 => c.a2.push(j),
            Class::B1 => c.b1.push(j),
            Class::B2 => c.b2.push(j),
            Class::C1 => c.c1.push(j),
            Class::C2 => c.c2.push(j),
        }
        if cl.is_a() && y.e(j) <= -1 {
            c.frak_a += 1;
        }
        if cl.is_c() && y.e(j) <= 0 {
            c.frak_c += 1;
        }
    }
    c.xi = c.b1.len();
    Ok(c)
}

/// `j^∧ = j^∨`: the position of old index `j` after the block swap.
pub fn hat(size: usize, h: usize, j: usize) -> usize {
    let cut = size - h;
    if j <= cut {
        j + h
    } else {
        j - cut
    }
}

/// `Y^{∧_h} = Y_{σ^∧, f}` from the index tables: `σ^∧(j^∧)` shifts
/// `σ(j)` by `+h` for A and B2 indices and by `-(2n-h)` for B1 and C
/// indices; `f_{j^∧}` is `e_j + 1`, `e_j`, `e_j - 1` for A, B, C indices.
pub fn dual_wedge(y: &MonomialHermitian, h: usize) -> Result<MonomialHermitian> {
    let size = y.size();
    if h > size {
        return invalid(format!("h = {h} exceeds size {size}"));
    }
    let cut = size - h;
    let mut sigma = vec![0; size];
    let mut f = vec![0; size];
    for j in 1..=size {
        let cl = class_of(y, h, j);
        let jh = hat(size, h, j);
        sigma[jh - 1] = match cl {
            Class::A1 | Class::A2 | Class::B2 => y.sigma(j) + h,
            Class::B1 | Class::C1 | Class::C2 => y.sigma(j) - cut,
        };
        f[jh - 1] = y.e(j)
            + match cl {
                Class::A1 | Class::A2 => 1,
                Class::B1 | Class::B2 => 0,
                Class::C1 | Class::C2 => -1,
            };
    }
    MonomialHermitian::new(sigma, f)
}

/// Block rule applied entrywise: the `(2n-h)`-block is scaled by
/// `π^{a_shift}`, the `h`-block by `π^{d_shift}`, and the blocks swapped.
fn block_dual(y: &MonomialHermitian, h: usize, a_shift: i64, d_shift: i64) -> Result<MonomialHermitian> {
    let size = y.size();
    if h > size {
        return invalid(format!("h = {h} exceeds size {size}"));
    }
    let cut = size - h;
    let mut sigma = vec![0; size];
    let mut f = vec![0; size];
    for j in 1..=size {
        let row = y.sigma(j);
        let shift = match (row <= cut, j <= cut) {
            (true, true) => a_shift,
            (false, false) => d_shift,
            _ => 0,
        };
        sigma[hat(size, h, j) - 1] = hat(size, h, row);
        f[hat(size, h, j) - 1] = y.e(j) + shift;
    }
    MonomialHermitian::new(sigma, f)
}

/// `X^{∧_h} = [[π⁻¹D, C], [B, πA]]` computed directly on the matrix.
pub fn dual_wedge_block(y: &MonomialHermitian, h: usize) -> Result<MonomialHermitian> {
    block_dual(y, h, 1, -1)
}

/// `X^{∨_h} = [[πD, C], [B, π⁻¹A]]` computed directly on the matrix.
pub fn dual_vee_block(b: &MonomialHermitian, h: usize) -> Result<MonomialHermitian> {
    block_dual(b, h, -1, 1)
}

/// The involution τ of a member of `ℛ₂ₙ^h` with `s` swapped pairs.
pub fn tau_rh(n: usize, h: usize, s: usize) -> Result<Vec<usize>> {
    let size = 2 * n;
    if h > size || s > h.min(size - h) {
        return invalid(format!("need 0 ≤ s ≤ min(h, 2n-h); got n={n}, h={h}, s={s}"));
    }
    let cut = size - h;
    Ok((1..=size)
        .map(|i| {
            if i <= cut - s {
                i
            } else if i <= cut {
                i + h
            } else if i <= size - s {
                i
            } else {
                i - h
            }
        })
        .collect())
}

/// Whether `B` lies in `ℛ₂ₙ^h`, returning the swap count `s` if so.
pub fn is_in_rh(b: &MonomialHermitian, h: usize) -> Option<usize> {
    let n = b.n();
    if h > 2 * n {
        return None;
    }
    (0..=h.min(2 * n - h)).find(|&s| tau_rh(n, h, s).is_ok_and(|t| t == b.sigma_vec()))
}

/// `B^{∨_h} = Y_{τ^∨, μ}` from the index tables, for `B ∈ ℛ₂ₙ^h`.
pub fn dual_vee(b: &MonomialHermitian, h: usize) -> Result<MonomialHermitian> {
    let size = b.size();
    let Some(s) = is_in_rh(b, h) else {
        return invalid(format!("{b} is not in R^h for h = {h}"));
    };
    let cut = size - h;
    let tau: Vec<usize> = (1..=size)
        .map(|i| {
            if i <= h - s {
                i
            } else if i <= h {
                i + cut
            } else if i <= size - s {
                i
            } else {
                i - cut
            }
        })
        .collect();
    let mu: Vec<i64> = (1..=size)
        .map(|k| {
            if k <= h - s {
                b.e(cut + k) + 1
            } else if k <= h {
                b.e(cut + k)
            } else if k <= size - s {
                b.e(k - h) - 1
            } else {
                b.e(k - h)
            }
        })
        .collect();
    MonomialHermitian::new(tau, mu)
}

/// Builds the member of `ℛ₂ₙ^h` with swap count `s` and exponents `λ`.
pub fn rh_member(n: usize, h: usize, s: usize, lambda: &[i64]) -> Result<MonomialHermitian> {
    MonomialHermitian::new(tau_rh(n, h, s)?, lambda.to_vec())
}

/// All members of `ℛ₂ₙ^h` with exponents in `[lo, hi]`.
pub fn enumerate_rh(n: usize, h: usize, lo: i64, hi: i64) -> Vec<MonomialHermitian> {
    let mut out = Vec::new();
    for s in 0..=h.min(2 * n - h) {
        let tau = tau_rh(n, h, s).expect("valid s");
        let orbits = involution_orbits(&tau);
        let width = (hi - lo + 1).max(0) as u64;
        for mut idx in 0..width.pow(orbits.len() as u32) {
            let mut e = vec![0; 2 * n];
            for orb in orbits.iter().rev() {
                let v = lo + (idx % width) as i64;
                idx /= width;
                for &i in orb {
                    e[i - 1] = v;
                }
            }
            out.push(MonomialHermitian::new(tau.clone(), e).expect("valid member"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(s: &str) -> MonomialHermitian {
        s.parse().unwrap()
    }

    #[test]
    fn make_monomial_examples() {
        assert_eq!(
            MonomialHermitian::diag(&[0, -1]).unwrap(),
            MonomialHermitian::a_t(1, 1).unwrap()
        );
        assert!(MonomialHermitian::new(vec![2, 1], vec![0, 1]).is_err());
        assert!(MonomialHermitian::new(vec![2, 1], vec![3, 3]).is_ok());
        assert!(MonomialHermitian::new(vec![2, 3, 1, 4], vec![0; 4]).is_err());
    }

    #[test]
    fn text_form_round_trip() {
        for s in [
            "diag:0,-1",
            "mono:sigma=[2,1];e=[0,0]",
            "mono:sigma=[1,4,3,2];e=[1,2,-1,2]",
        ] {
            assert_eq!(m(s).to_string(), s);
        }
        assert!("foo:1".parse::<MonomialHermitian>().is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_reps(1, 0, 0).count(), 2);
        assert_eq!(enumerate_reps(1, 0, 1).count(), 6);
        assert_eq!(enumerate_reps(1, 1, 0).count(), 0);
        // Involutions of S_4: 10; brute count of exponent vectors by orbit count.
        assert_eq!(involutions(4).len(), 10);
        let all: Vec<_> = enumerate_reps(2, -1, 1).collect();
        let expected: usize = involutions(4)
            .iter()
            .map(|s| 3usize.pow(involution_orbits(s).len() as u32))
            .sum();
        assert_eq!(all.len(), expected);
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), all.len());
    }

    #[test]
    fn classify_examples() {
        let c = classify(&m("diag:0,0"), 1).unwrap();
        assert_eq!((c.a1.clone(), c.c1.clone()), (vec![1], vec![2]));
        assert!(c.a2.is_empty() && c.b1.is_empty() && c.b2.is_empty() && c.c2.is_empty());
        assert_eq!((c.frak_a, c.frak_c, c.xi), (0, 1, 0));
        let c = classify(&m("mono:sigma=[2,1];e=[0,0]"), 1).unwrap();
        assert_eq!(
            (c.b1.clone(), c.b2.clone(), c.xi, c.frak_a, c.frak_c),
            (vec![1], vec![2], 1, 0, 0)
        );
        let c = classify(&m("mono:sigma=[3,4,1,2];e=[0,0,0,0]"), 0).unwrap();
        assert!(c.c1.is_empty() && c.c2.is_empty() && c.b2.is_empty());
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(dual_wedge(&m("diag:0,0"), 1).unwrap(), m("diag:-1,1"));
        let anti = m("mono:sigma=[2,1];e=[0,0]");
        assert_eq!(dual_wedge(&anti, 1).unwrap(), anti);
    }

    #[test]
    fn vee_examples() {
        let a1 = MonomialHermitian::a_t(1, 1).unwrap();
        assert_eq!(dual_vee(&a1, 1).unwrap(), a1);
        assert_eq!(dual_vee(&m("diag:2,-1"), 1).unwrap(), m("diag:0,1"));
        let anti = m("mono:sigma=[2,1];e=[0,0]");
        assert_eq!(dual_vee(&anti, 1).unwrap(), anti);
    }

    #[test]
    fn membership_in_rh() {
        assert_eq!(is_in_rh(&MonomialHermitian::a_t(2, 1).unwrap(), 3), Some(0));
        assert_eq!(is_in_rh(&m("mono:sigma=[2,1];e=[0,0]"), 1), Some(1));
        assert_eq!(is_in_rh(&m("mono:sigma=[2,1];e=[0,0]"), 0), None);
        assert!(dual_vee(&m("mono:sigma=[2,1];e=[0,0]"), 0).is_err());
        // n=2, h=2, s=1 swaps index 2 with 4.
        assert_eq!(tau_rh(2, 2, 1).unwrap(), vec![1, 4, 3, 2]);
    }

    #[test]
    fn tables_agree_with_block_rule() {
        for n in 1..=3 {
            for h in 0..=2 * n {
                for y in enumerate_reps(n, -1, 1).step_by(if n == 3 { 7 } else { 1 }) {
                    assert_eq!(
                        dual_wedge(&y, h).unwrap(),
                        dual_wedge_block(&y, h).unwrap(),
                        "{y} h={h}"
                    );
                }
                for b in enumerate_rh(n, h, -1, 1) {
                    assert_eq!(dual_vee(&b, h).unwrap(), dual_vee_block(&b, h).unwrap(), "{b} h={h}");
                }
            }
        }
    }

    #[test]
    fn vee_is_an_involution_on_rh() {
        for n in 1..=3 {
            for h in 0..=2 * n {
                for b in enumerate_rh(n, h, -1, 2) {
                    let v = dual_vee(&b, h).unwrap();
                    assert_eq!(dual_vee(&v, 2 * n - h).unwrap(), b);
                }
            }
        }
    }

    fn arb_rep(n: usize) -> impl Strategy<Value = MonomialHermitian> {
        let invs = involutions(2 * n);
        (prop::sample::select(invs), prop::collection::vec(-3i64..4, 2 * n)).prop_map(|(sigma, raw)| {
            let e: Vec<i64> = (0..sigma.len()).map(|i| raw[i.min(sigma[i] - 1)]).collect();
            MonomialHermitian::new(sigma, e).unwrap()
        })
    }

    proptest! {
        #[test]
        fn classes_partition(y in (1usize..4).prop_flat_map(arb_rep), hseed in 0usize..7) {
            let h = hseed % (y.size() + 1);
            let c = classify(&y, h).unwrap();
            let mut all: Vec<usize> = [&c.a1, &c.a2, &c.b1, &c.b2, &c.c1, &c.c2].iter().flat_map(|v| v.iter().copied()).collect();
            all.sort();
            prop_assert_eq!(all, (1..=y.size()).collect::<Vec<_>>());
            prop_assert_eq!(c.b1.len(), c.b2.len());
        }

        #[test]
        fn wedge_then_dual_wedge_is_identity(y in (1usize..4).prop_flat_map(arb_rep), hseed in 0usize..7) {
            let h = hseed % (y.size() + 1);
            let w = dual_wedge(&y, h).unwrap();
            prop_assert_eq!(dual_wedge(&w, y.size() - h).unwrap(), y);
        }

        #[test]
        fn class_correspondence(y in (1usize..4).prop_flat_map(arb_rep), hseed in 0usize..7) {
            let h = hseed % (y.size() + 1);
            let w = dual_wedge(&y, h).unwrap();
            let hd = y.size() - h;
            for j in 1..=y.size() {
                let jh = hat(y.size(), h, j);
                let (cl, cw) = (class_of(&y, h, j), class_of(&w, hd, jh));
                let expect = match cl {
                    Class::A1 => Class::C1, Class::A2 => Class::C2,
                    Class::C1 => Class::A1, Class::C2 => Class::A2,
                    Class::B1 => Class::B2, Class::B2 => Class::B1,
                };
                prop_assert_eq!(cw, expect);
                let de = w.e(jh) - y.e(j);
                prop_assert_eq!(de, if cl.is_a() { 1 } else if cl.is_b() { 0 } else { -1 });
            }
        }
    }
}
