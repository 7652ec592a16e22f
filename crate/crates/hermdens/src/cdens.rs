//! Classical hermitian representation densities `α(A,B)` for diagonal
//! forms, by brute-force counting and by closed formulas, together with the
//! functional `𝒥` at `n = 1` and the lattice-counting oracle for `J_d`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::beta::{beta_closed_last, solve_constants};
use crate::error::{invalid, Error, Result};
use crate::reps::MonomialHermitian;
use crate::residue::{Elt, UnramifiedRing};
use crate::symb::{format_rat, rat_pow, rint, Rat, SignedLaurent, SignedRational};
use crate::whit::{rat_to_f64, w_density_n1, XPoly};

fn sp(k: i64) -> SignedRational {
    SignedRational::s_pow(k)
}

fn sl(k: i64) -> SignedLaurent {
    SignedLaurent::s_pow(k)
}

/// A weakly decreasing sequence of nonnegative integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return invalid(format!("partition parts must be weakly decreasing: {parts:?}"));
        }
        Ok(Self(parts))
    }

    /// Sorts the exponents of a diagonal form into a partition.
    pub fn from_exps(exps: &[i64]) -> Result<Self> {
        if let Some(e) = exps.iter().find(|&&e| e < 0) {
            return invalid(format!("exponent {e} is negative"));
        }
        let mut parts: Vec<u32> = exps.iter().map(|&e| e as u32).collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self(parts))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|μ|`
    pub fn weight(&self) -> u64 {
        self.0.iter().map(|&p| p as u64).sum()
    }

    /// `n(μ) = Σ (i−1) μ_i`
    pub fn n_stat(&self) -> u64 {
        self.0.iter().enumerate().map(|(i, &p)| i as u64 * p as u64).sum()
    }

    /// `μ′_i = #{j : μ_j ≥ i}`; defined for every `i ≥ 1`.
    pub fn conj(&self, i: u32) -> u32 {
        self.0.iter().filter(|&&p| p >= i).count() as u32
    }

    pub fn largest(&self) -> u32 {
        self.0.first().copied().unwrap_or(0)
    }

    /// `μ̃ = (μ_1+1, …, μ_n+1)`
    pub fn tilde(&self) -> Self {
        Self(self.0.iter().map(|p| p + 1).collect())
    }

    /// `⟨ξ′, μ′⟩ = Σ_{i≥1} ξ′_i μ′_i`
    pub fn pairing(&self, other: &Self) -> u64 {
        let top = self.largest().min(other.largest());
        (1..=top).map(|i| self.conj(i) as u64 * other.conj(i) as u64).sum()
    }

    /// All partitions of the same length lying below `self` entrywise.
    pub fn below(&self) -> Vec<Self> {
        fn rec(bound: &[u32], cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
            if cur.len() == bound.len() {
                out.push(Partition(cur.clone()));
                return;
            }
            for v in 0..=cap.min(bound[cur.len()]) {
                cur.push(v);
                rec(bound, v, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(&self.0, u32::MAX, &mut Vec::new(), &mut out);
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Partition::from_exps(&DiagonalForm::from_str(s)?.exps)
    }
}

/// `diag(π^{a_1}, …, π^{a_k})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagonalForm {
    pub exps: Vec<i64>,
}

impl DiagonalForm {
    pub fn new(exps: Vec<i64>) -> Self {
        Self { exps }
    }

    pub fn size(&self) -> usize {
        self.exps.len()
    }

    pub fn det_val(&self) -> i64 {
        self.exps.iter().sum()
    }
}

impl FromStr for DiagonalForm {
    type Err = Error;
    /// Comma-separated exponents, optionally in parentheses; `""` is the empty form.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')').trim();
        if body.is_empty() {
            return Ok(Self::new(Vec::new()));
        }
        let exps = body
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::Invalid(format!("bad exponent {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(exps))
    }
}

impl fmt::Display for DiagonalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.exps.iter().map(|p| p.to_string()).collect();
        write!(f, "diag({})", parts.join(","))
    }
}

// ---------------------------------------------------------------------------
// Brute-force counting

/// Default cap on `m·k·d·log₂(q²)`, the log-size of the matrix space.
pub const DEFAULT_ALPHA_BUDGET: f64 = 30.0;

fn enumeration_bits(m: usize, k: usize, d: u32, q: u64) -> f64 {
    (m * k) as f64 * d as f64 * ((q * q) as f64).log2()
}

/// Counts `x ∈ M_{m,k}(O/π^d)` with `x* G x ≡ T`, where `G = diag(π^{g_i})`
/// and `T = diag(π^{t_j})`, and column `j` has coordinate `i` of valuation at
/// least `floors[j][i]`.
fn count_solutions(ring: &UnramifiedRing, g: &[u32], t: &[u32], floors: &[Vec<u32>]) -> u128 {
    let m = g.len();
    let k = t.len();
    if k == 0 {
        return 1;
    }
    let gram: Vec<Elt> = g.iter().map(|&e| ring.pi_pow(e)).collect();
    let target: Vec<Elt> = t.iter().map(|&e| ring.pi_pow(e)).collect();
    let pair = |u: &[Elt], v: &[Elt]| -> Elt {
        let mut acc = (0, 0);
        for i in 0..m {
            acc = ring.add(acc, ring.mul(ring.conj(u[i]), ring.mul(gram[i], v[i])));
        }
        acc
    };
    let elts: Vec<Elt> = ring.elements().collect();
    let by_val = |f: u32| -> Vec<Elt> { elts.iter().copied().filter(|&(a, b)| ring.val(a, b) >= f).collect() };
    let columns: Vec<Vec<Vec<Elt>>> = (0..k)
        .map(|j| {
            let allowed: Vec<Vec<Elt>> = (0..m).map(|i| by_val(floors[j][i])).collect();
            let mut out = Vec::new();
            let mut cur = vec![(0, 0); m];
            fn rec(
                i: usize,
                allowed: &[Vec<Elt>],
                cur: &mut Vec<Elt>,
                out: &mut Vec<Vec<Elt>>,
                keep: &dyn Fn(&[Elt]) -> bool,
            ) {
                if i == allowed.len() {
                    if keep(cur) {
                        out.push(cur.clone());
                    }
                    return;
                }
                for &x in &allowed[i] {
                    cur[i] = x;
                    rec(i + 1, allowed, cur, out, keep);
                }
            }
            rec(0, &allowed, &mut cur, &mut out, &|v| pair(v, v) == target[j]);
            out
        })
        .collect();
    fn extend(
        depth: usize,
        chosen: &mut Vec<usize>,
        columns: &[Vec<Vec<Elt>>],
        orth: &(dyn Fn(&[Elt], &[Elt]) -> bool + Sync),
    ) -> u128 {
        if depth == columns.len() {
            return 1;
        }
        let mut total = 0;
        for (idx, cand) in columns[depth].iter().enumerate() {
            if chosen.iter().enumerate().all(|(i, &c)| orth(&columns[i][c], cand)) {
                chosen.push(idx);
                total += extend(depth + 1, chosen, columns, orth);
                chosen.pop();
            }
        }
        total
    }
    let orth = |u: &[Elt], v: &[Elt]| pair(u, v) == (0, 0);
    (0..columns[0].len())
        .into_par_iter()
        .map(|idx| extend(1, &mut vec![idx], &columns, &orth))
        .sum()
}

fn check_integral(label: &str, exps: &[i64]) -> Result<Vec<u32>> {
    exps.iter()
        .map(|&e| {
            if e < 0 {
                invalid(format!("{label} needs nonnegative exponents, got {exps:?}"))
            } else {
                Ok(e as u32)
            }
        })
        .collect()
}

fn check_budget(m: usize, k: usize, d: u32, q: u64, budget: f64) -> Result<()> {
    if d == 0 {
        return invalid("d must be positive");
    }
    let bits = enumeration_bits(m, k, d, q);
    if bits > budget {
        return Err(Error::Budget(format!(
            "M_{{{m},{k}}}(O/pi^{d}) at q={q} has 2^{bits:.1} elements, budget is 2^{budget}"
        )));
    }
    Ok(())
}

fn q_pow_rat(q: u64, k: i64) -> Rat {
    rat_pow(&rint(q as i64), k)
}

/// `(q^{−d})^{k(2m−k)}·#{x ∈ M_{m,k}(O/π^d) : x*Ax ≡ B}` for diagonal `A`, `B`.
pub fn alpha_brute(a: &DiagonalForm, b: &DiagonalForm, q: u64, d: u32, budget: f64) -> Result<Rat> {
    let (m, k) = (a.size(), b.size());
    let g = check_integral("A", &a.exps)?;
    let t = check_integral("B", &b.exps)?;
    check_budget(m, k, d, q, budget)?;
    let ring = UnramifiedRing::new(q, d)?;
    let count = count_solutions(&ring, &g, &t, &vec![vec![0; m]; k]);
    let scale = -(d as i64) * (k as i64) * (2 * m as i64 - k as i64);
    Ok(Rat::from_integer(count.into()) * q_pow_rat(q, scale))
}

// ---------------------------------------------------------------------------
// Closed forms

/// `α(diag(π1_k, 1_{m−k}), 1_n) = Π_{l=1}^n (1 − (−q)^{−l+k−r})`, `r = m−n`.
pub fn alpha_diag_unimodular(k: usize, m: usize, n: usize) -> Result<SignedRational> {
    if k > m || n > m {
        return invalid(format!("need k, n ≤ m; got k={k}, m={m}, n={n}"));
    }
    let (k, r) = (k as i64, (m - n) as i64);
    Ok((1..=n as i64)
        .map(|l| SignedRational::from(SignedLaurent::one() - sl(-l + k - r)))
        .product())
}

/// `Π_{i=1}^u (1 − (−q)^{−i})`
fn phi(u: u32) -> SignedLaurent {
    (1..=u as i64).fold(SignedLaurent::one(), |acc, i| acc * (SignedLaurent::one() - sl(-i)))
}

/// Gaussian bracket `[u v]`; zero outside `0 ≤ v ≤ u`.
fn gauss(u: i64, v: i64) -> Result<SignedRational> {
    if u < 0 || v < 0 || v > u {
        return Ok(SignedRational::zero());
    }
    let (u, v) = (u as u32, v as u32);
    SignedRational::new(phi(u), phi(v) * phi(u - v))
}

/// `I_j(μ, λ)` with `lt = λ̃`.
fn hironaka_i(j: u32, mu: &Partition, lt: &Partition) -> Result<SignedRational> {
    let l1 = lt.conj(j + 1) as i64;
    let l0 = lt.conj(j) as i64;
    let (m1, m0) = (mu.conj(j + 1) as i64, mu.conj(j) as i64);
    let mut acc = SignedRational::zero();
    for i in m1..=l1.min(m0) {
        let term = sp(i * (2 * l1 + 1 - i) / 2) * gauss(l1 - m1, l1 - i)? * gauss(l0 - i, l0 - m0)?;
        acc += &term;
    }
    Ok(acc)
}

/// Self-dual padding of the first argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pad {
    None,
    SelfDual(usize),
}

/// `α(π^ξ ⊕ 1_{2r}, π^λ)` as a polynomial in `X = (−q)^{−2r}`; with
/// [`Pad::SelfDual`] the base padding is folded in so that `X = 1` gives the
/// padded value.
pub fn hironaka_density(xi: &Partition, lam: &Partition, pad: Pad) -> Result<XPoly> {
    let (m, n) = (xi.len() as i64, lam.len() as i64);
    if m < n {
        return invalid(format!("need |ξ| ≥ |λ| in length; got ξ={xi}, λ={lam}"));
    }
    let base = match pad {
        Pad::None => 0,
        Pad::SelfDual(r) => 2 * r as i64,
    };
    let lt = lam.tilde();
    let mut poly: BTreeMap<i64, SignedRational> = BTreeMap::new();
    for mu in lt.below() {
        let w = mu.weight() as i64;
        let exp = -(mu.n_stat() as i64) + (n - m - base - 1) * w + xi.pairing(&mu) as i64;
        let mut c = sp(exp);
        if w % 2 == 1 {
            c = -c;
        }
        for j in 1..=lt.largest() {
            c *= &hironaka_i(j, &mu, &lt)?;
            if c.is_zero() {
                break;
            }
        }
        let slot = poly.entry(w).or_insert_with(SignedRational::zero);
        *slot += &c;
    }
    poly.retain(|_, c| !c.is_zero());
    Ok(XPoly(poly))
}

/// `α(π^ξ, π^λ)` at `r = 0`.
pub fn alpha_value(xi: &Partition, lam: &Partition) -> Result<SignedRational> {
    Ok(hironaka_density(xi, lam, Pad::None)?.value())
}

/// `α′(π^ξ, π^λ) = −d/dX α(π^ξ ⊕ 1_{2r}, π^λ)` at `X = 1`.
pub fn alpha_prime(xi: &Partition, lam: &Partition) -> Result<SignedRational> {
    Ok(hironaka_density(xi, lam, Pad::None)?.derivative())
}

fn check_san(a: i64, b: i64) -> Result<()> {
    if a < b || b < 0 || (a + b) % 2 != 0 {
        return invalid(format!("need a ≥ b ≥ 0 and a+b even; got a={a}, b={b}"));
    }
    Ok(())
}

fn ql(terms: &[(i64, i64)]) -> SignedLaurent {
    SignedLaurent::from_q_terms(terms)
}

/// `α(1₂, diag(π^a, π^b)) = (q+1)²q⁻³(q^{b+1} − 1)`.
pub fn san_alpha2(a: i64, b: i64) -> Result<SignedRational> {
    check_san(a, b)?;
    let q1sq = ql(&[(2, 1), (1, 2), (0, 1)]);
    Ok(SignedRational::from(q1sq * ql(&[(-3, 1)]) * ql(&[(b + 1, 1), (0, -1)])))
}

/// `α′(diag(1,π), diag(π^a, π^b)) = ½(a+b)(q+1)²/q − (q+1)²/(q(q²−1))·(q^{b+2} − q² − q + 1)`.
pub fn san_alpha2_prime(a: i64, b: i64) -> Result<SignedRational> {
    check_san(a, b)?;
    let q1sq = ql(&[(2, 1), (1, 2), (0, 1)]);
    let first = SignedRational::from(&q1sq * &ql(&[(-1, 1)])).scale(&Rat::new((a + b).into(), 2.into()));
    let second = SignedRational::new(
        &q1sq * &ql(&[(b + 2, 1), (2, -1), (1, -1), (0, 1)]),
        ql(&[(3, 1), (1, -1)]),
    )?;
    Ok(first - second)
}

/// `α(πC, πD) = q^{n²}α(C, D)` for `D` of size `n`.
pub fn scale_alpha(n: usize, value: &SignedRational) -> SignedRational {
    value * &SignedRational::q_pow((n * n) as i64)
}

// ---------------------------------------------------------------------------
// The functional 𝒥 at n = 1

/// `𝒥_t^1(B) = (W′_{t,1}(B,0) − β_0^t W_{t,0}(B,0)) / W_{1,1}(A_1,0)`.
pub fn jfun_n1(t: usize, b: &MonomialHermitian) -> Result<SignedRational> {
    if b.size() != 2 {
        return invalid(format!("𝒥 is assembled at n = 1 only, got size {}", b.size()));
    }
    let consts = solve_constants(1, t)?
        .solution
        .ok_or_else(|| Error::Consistency("β system unsolved".into()))?;
    let w1 = w_density_n1(b, t, 1)?;
    let w0 = w_density_n1(b, t, 0)?;
    let norm = w_density_n1(&MonomialHermitian::a_t(1, 1)?, 1, 1)?.value;
    (w1.derivative - &consts.beta_h[0] * &w0.value).checked_div(&norm)
}

/// `q(q+1)⁻²{α′(diag(π,1),B) − q²(q²−1)⁻¹α(1₂,B)}` for `B = diag(π^a, π^b)`.
pub fn jfun_n1_classical_h0(a: i64, b: i64) -> Result<SignedRational> {
    let lam = Partition::from_exps(&[a, b])?;
    let xi = Partition::from_exps(&[1, 0])?;
    let pre = SignedRational::new(ql(&[(1, 1)]), ql(&[(2, 1), (1, 2), (0, 1)]))?;
    let corr = SignedRational::new(ql(&[(2, 1)]), ql(&[(2, 1), (0, -1)]))?;
    Ok(pre * (alpha_prime(&xi, &lam)? - corr * alpha_value(&Partition::zeros(2), &lam)?))
}

/// `q(q+1)⁻²{α′(diag(1,π),B) + q³(q²−1)⁻¹α(1₂,B)}` for `B = diag(π^a, π^b)`.
pub fn jfun_n1_classical_h1(a: i64, b: i64) -> Result<SignedRational> {
    let lam = Partition::from_exps(&[a, b])?;
    let xi = Partition::from_exps(&[1, 0])?;
    let pre = SignedRational::new(ql(&[(1, 1)]), ql(&[(2, 1), (1, 2), (0, 1)]))?;
    let corr = SignedRational::new(ql(&[(3, 1)]), ql(&[(2, 1), (0, -1)]))?;
    Ok(pre * (alpha_prime(&xi, &lam)? + corr * alpha_value(&Partition::zeros(2), &lam)?))
}

// ---------------------------------------------------------------------------
// Compatibility with the derivative of the classical density

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AppendixReport {
    pub n: usize,
    pub b1: Partition,
    /// `W′_{n−1,n}(B,0)/W_{n,n}(A_n,0)` through the classical reductions.
    pub first: SignedRational,
    /// `β^{n−1}_{n−1}W_{n−1,n−1}(B,0)/W_{n,n}(A_n,0)` through the same reductions.
    pub second: SignedRational,
    pub lhs: SignedRational,
    pub rhs: SignedRational,
    pub holds: bool,
    /// `second = (q+1)⁻¹α(1_{n+1},B₁)/α(1_{n+1},1_{n+1})`
    pub beta_factor_holds: bool,
    /// `𝒥_0^1(B₁)` from the weighted densities directly, at `n = 1`.
    pub direct: Option<SignedRational>,
    pub direct_holds: Option<bool>,
    pub numeric: Option<NumericCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericCheck {
    pub q: i64,
    pub lhs: String,
    pub rhs: String,
    pub direct: Option<String>,
    pub max_abs_diff: f64,
}

/// Checks `W′_{n−1,n}/W_{n,n}(A_n) − β^{n−1}_{n−1}W_{n−1,n−1}/W_{n,n}(A_n)
/// = (q+1)⁻¹{α′(diag(1_n,π),B₁)/α(1_n,1_n) − α(1_{n+1},B₁)/α(1_{n+1},1_{n+1})}`
/// for `B = diag(B₁, π⁻¹1_{n−1})`.
pub fn appendix_compat(n: usize, b1: &Partition, q: Option<i64>) -> Result<AppendixReport> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if b1.len() != n + 1 {
        return invalid(format!("B₁ must have size n+1 = {}, got {b1}", n + 1));
    }
    if !b1.weight().is_multiple_of(2) {
        return invalid(format!("val det B₁ must be even, got {b1}"));
    }
    let a5 = alpha_diag_unimodular;
    let mut xi_parts = vec![1];
    xi_parts.extend(vec![0; n]);
    let xi = Partition::new(xi_parts)?;
    let ap = alpha_prime(&xi, b1)?;
    let a_unit = alpha_value(&Partition::zeros(n + 1), b1)?;
    let one_n = a5(0, n, n)?;
    let one_n1 = a5(0, n + 1, n + 1)?;
    let norm = a5(n, 2 * n, n)? * scale_alpha(n, &one_n);

    let first = (SignedRational::q_pow(-2 * (n as i64 + 1)) * a5(n, 2 * n, n - 1)? * scale_alpha(n + 1, &ap))
        .checked_div(&norm)?;
    let beta = beta_closed_last(n)?;
    let second = (beta * a5(n - 1, 2 * n - 2, n - 1)? * scale_alpha(n + 1, &a_unit)).checked_div(&norm)?;
    let lhs = &first - &second;

    let inv_q1 = SignedRational::new(SignedLaurent::one(), ql(&[(1, 1), (0, 1)]))?;
    let unit_part = a_unit.checked_div(&one_n1)?;
    let rhs = &inv_q1 * &(ap.checked_div(&one_n)? - &unit_part);
    let beta_factor_holds = second == &inv_q1 * &unit_part;

    let direct = if n == 1 {
        let p = b1.parts();
        Some(jfun_n1(0, &MonomialHermitian::diag(&[p[0] as i64, p[1] as i64])?)?)
    } else {
        None
    };
    let direct_holds = direct.as_ref().map(|d| *d == lhs);
    let numeric = match q {
        Some(q) => {
            let l = lhs.eval(q)?;
            let r = rhs.eval(q)?;
            let dv = direct.as_ref().map(|d| d.eval(q)).transpose()?;
            let mut diff = (rat_to_f64(&l) - rat_to_f64(&r)).abs();
            if let Some(dv) = &dv {
                diff = diff.max((rat_to_f64(dv) - rat_to_f64(&l)).abs());
            }
            Some(NumericCheck {
                q,
                lhs: format_rat(&l),
                rhs: format_rat(&r),
                direct: dv.as_ref().map(format_rat),
                max_abs_diff: diff,
            })
        }
        None => None,
    };
    Ok(AppendixReport {
        n,
        b1: b1.clone(),
        holds: lhs == rhs,
        first,
        second,
        lhs,
        rhs,
        beta_factor_holds,
        direct,
        direct_holds,
        numeric,
    })
}

// ---------------------------------------------------------------------------
// Lattice counting

/// Which lattice-embedding set to count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JKind {
    /// `I_d(L, M)`: isometries mod `π^d`.
    I,
    /// `J_d(L, M)`: the first `n` basis vectors land in `πM^∨`.
    J,
    /// `J_d^1(L, M)`: the first `n+1` basis vectors land in `πM^∨`.
    J1,
}

impl FromStr for JKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "i_d" => Ok(JKind::I),
            "j" | "j_d" => Ok(JKind::J),
            "j1" | "j_d^1" | "j_d1" => Ok(JKind::J1),
            _ => invalid(format!("unknown count kind {s:?}; expected i, j or j1")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JCount {
    pub kind: JKind,
    pub l_gram: Vec<i64>,
    pub m_gram: Vec<i64>,
    pub q: u64,
    pub d: u32,
    pub count: u128,
    /// For `I`, `(q^{−d})^{k(2m−k)}·count`; otherwise `q^{−2dmk}q^{(d−1)k²}·count`
    /// with `k = rank L`.
    #[serde(serialize_with = "crate::cdens::ser_rat")]
    pub scaled: Rat,
}

pub(crate) fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rat(r))
}

/// Counts `φ : L → M/π^dM` preserving the forms mod `π^d`, with `L`, `M`
/// given by diagonal Gram exponents.
pub fn jcount_oracle(kind: JKind, l_gram: &[i64], m_gram: &[i64], q: u64, d: u32, budget: f64) -> Result<JCount> {
    let g = check_integral("M", m_gram)?;
    let t = check_integral("L", l_gram)?;
    let (m, k) = (g.len(), t.len());
    check_budget(m, k, d, q, budget)?;
    let constrained = match kind {
        JKind::I => 0,
        JKind::J | JKind::J1 => {
            if k % 2 != 0 {
                return invalid(format!("L must have even rank for {kind:?}, got {k}"));
            }
            if kind == JKind::J {
                k / 2
            } else {
                k / 2 + 1
            }
        }
    };
    // πM^∨ = span{π^{max(0, 1−g_i)} v_i}.
    let dual: Vec<u32> = g.iter().map(|&e| 1u32.saturating_sub(e)).collect();
    let floors: Vec<Vec<u32>> = (0..k)
        .map(|j| if j < constrained { dual.clone() } else { vec![0; m] })
        .collect();
    let ring = UnramifiedRing::new(q, d)?;
    let count = count_solutions(&ring, &g, &t, &floors);
    let (m, k, d) = (m as i64, k as i64, d as i64);
    let exp = match kind {
        JKind::I => -d * k * (2 * m - k),
        _ => -2 * d * m * k + (d - 1) * k * k,
    };
    Ok(JCount {
        kind,
        l_gram: l_gram.to_vec(),
        m_gram: m_gram.to_vec(),
        q,
        d: d as u32,
        count,
        scaled: Rat::from_integer(count.into()) * q_pow_rat(q, exp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reps::dual_vee;
    use crate::symb::rat;
    use proptest::prelude::*;

    fn part(p: &[i64]) -> Partition {
        Partition::from_exps(p).unwrap()
    }

    fn df(p: &[i64]) -> DiagonalForm {
        DiagonalForm::new(p.to_vec())
    }

    #[test]
    fn partition_statistics() {
        let mu = Partition::new(vec![3, 1, 1]).unwrap();
        assert_eq!(mu.weight(), 5);
        assert_eq!(mu.n_stat(), 3);
        assert_eq!((mu.conj(1), mu.conj(2), mu.conj(3), mu.conj(4)), (3, 1, 1, 0));
        assert_eq!(mu.tilde(), Partition::new(vec![4, 2, 2]).unwrap());
        assert_eq!(Partition::new(vec![1, 1]).unwrap().below().len(), 3);
        assert!(Partition::new(vec![0, 1]).is_err());
        assert_eq!(
            "(0, 2,1)".parse::<Partition>().unwrap(),
            Partition::new(vec![2, 1, 0]).unwrap()
        );
    }

    #[test]
    fn brute_examples() {
        let b = DEFAULT_ALPHA_BUDGET;
        assert_eq!(alpha_brute(&df(&[0]), &df(&[0]), 3, 2, b).unwrap(), rat(4, 3));
        assert_eq!(alpha_brute(&df(&[1, 0]), &df(&[0, 0]), 3, 2, b).unwrap(), rat(0, 1));
        let san = san_alpha2(1, 1).unwrap().eval(3).unwrap();
        assert_eq!(alpha_brute(&df(&[0, 0]), &df(&[1, 1]), 3, 2, b).unwrap(), san);
        // α(π1₁, π1₁) = q·α(1₁, 1₁)
        let lhs = alpha_brute(&df(&[1]), &df(&[1]), 3, 3, b).unwrap();
        assert_eq!(lhs, rint(3) * alpha_brute(&df(&[0]), &df(&[0]), 3, 2, b).unwrap());
        assert!(matches!(
            alpha_brute(&df(&[0, 0]), &df(&[0, 0]), 5, 3, b),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn prop_a5_examples() {
        let q1 = SignedRational::from(SignedLaurent::from_q_terms(&[(0, 1), (-1, 1)]));
        assert_eq!(alpha_diag_unimodular(1, 2, 1).unwrap(), q1);
        assert!(alpha_diag_unimodular(3, 3, 3).unwrap().is_zero());
        assert!(alpha_diag_unimodular(3, 2, 1).is_err());
    }

    #[test]
    fn prop_a5_matches_hironaka_and_brute() {
        for m in 1..=2usize {
            for k in 0..=m {
                for n in 1..=m {
                    let closed = alpha_diag_unimodular(k, m, n).unwrap();
                    let mut xi = vec![1; k];
                    xi.extend(vec![0; m - k]);
                    let hir = alpha_value(&part(&xi), &Partition::zeros(n)).unwrap();
                    assert_eq!(closed, hir, "k={k} m={m} n={n}");
                    let a: Vec<i64> = xi.clone();
                    let brute = alpha_brute(&df(&a), &df(&vec![0; n]), 3, 2, DEFAULT_ALPHA_BUDGET).unwrap();
                    assert_eq!(closed.eval(3).unwrap(), brute, "k={k} m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn unimodular_polynomial_in_x() {
        for n in 1..=3 {
            let poly = hironaka_density(&Partition::zeros(n), &Partition::zeros(n), Pad::None).unwrap();
            // Π(1 − (−q)^{−l} X)
            let mut expect: BTreeMap<i64, SignedLaurent> = BTreeMap::from([(0, SignedLaurent::one())]);
            for l in 1..=n as i64 {
                let mut next: BTreeMap<i64, SignedLaurent> = BTreeMap::new();
                for (k, c) in &expect {
                    *next.entry(*k).or_insert_with(SignedLaurent::zero) += c;
                    *next.entry(k + 1).or_insert_with(SignedLaurent::zero) -= &(c * &sl(-l));
                }
                expect = next;
            }
            let expect: BTreeMap<i64, SignedRational> =
                expect.into_iter().map(|(k, c)| (k, SignedRational::from(c))).collect();
            assert_eq!(poly.0, expect);
        }
    }

    #[test]
    fn san_forms_from_partition_sum() {
        for (a, b) in [(0, 0), (2, 0), (1, 1), (3, 1), (4, 2), (4, 0)] {
            let lam = part(&[a, b]);
            assert_eq!(
                alpha_value(&Partition::zeros(2), &lam).unwrap(),
                san_alpha2(a, b).unwrap()
            );
            assert_eq!(
                alpha_prime(&part(&[1, 0]), &lam).unwrap(),
                san_alpha2_prime(a, b).unwrap()
            );
        }
        assert_eq!(san_alpha2(0, 0).unwrap().eval(3).unwrap(), rat(32, 27));
        assert_eq!(san_alpha2_prime(0, 0).unwrap().eval(3).unwrap(), rat(4, 3));
        assert!(san_alpha2(1, 0).is_err());
    }

    #[test]
    fn parity_vanishing() {
        let forms = [vec![0, 0], vec![1, 0], vec![2, 1], vec![1, 1], vec![3, 0], vec![2, 2]];
        for xi in &forms {
            for lam in &forms {
                let (x, l) = (part(xi), part(lam));
                if (x.weight() + l.weight()) % 2 == 0 {
                    continue;
                }
                assert!(alpha_value(&x, &l).unwrap().is_zero(), "{x} {l}");
            }
        }
        // Only the value vanishes; the padded family does not.
        assert!(!alpha_prime(&part(&[1, 0]), &part(&[0, 0])).unwrap().is_zero());
    }

    #[test]
    fn padding_shifts_by_x() {
        let (xi, lam) = (part(&[1, 0]), part(&[2, 0]));
        let base = hironaka_density(&xi, &lam, Pad::None).unwrap();
        let padded = hironaka_density(&xi, &lam, Pad::SelfDual(1)).unwrap();
        assert_eq!(padded.value(), base.at_r(1));
        // Padding against a unimodular form matches the closed product.
        let p = hironaka_density(&part(&[1, 0]), &part(&[0]), Pad::SelfDual(1)).unwrap();
        assert_eq!(p.value(), alpha_diag_unimodular(1, 4, 1).unwrap());
    }

    #[test]
    fn scaling() {
        let v = alpha_value(&part(&[0]), &part(&[2])).unwrap();
        assert_eq!(scale_alpha(1, &v), &v * &SignedRational::q_pow(1));
        assert!(scale_alpha(2, &SignedRational::zero()).is_zero());
    }

    #[test]
    fn jfun_examples() {
        for (a, b) in [(0, 0), (2, 0), (1, 1), (3, 1), (4, 2)] {
            let bm = MonomialHermitian::diag(&[a, b]).unwrap();
            let j = jfun_n1(1, &bm).unwrap();
            assert_eq!(
                j,
                SignedRational::constant(Rat::new((a + b).into(), 2.into()) + rint(1)),
                "({a},{b})"
            );
            assert_eq!(j, jfun_n1_classical_h1(a, b).unwrap());
            assert_eq!(jfun_n1(0, &bm).unwrap(), jfun_n1_classical_h0(a, b).unwrap());
        }
        let unit = alpha_value(&part(&[0]), &part(&[0])).unwrap();
        for a in [0, 2, 4] {
            let bm = MonomialHermitian::diag(&[a, -1]).unwrap();
            let expect = alpha_prime(&part(&[0]), &part(&[a]))
                .unwrap()
                .checked_div(&unit)
                .unwrap();
            assert_eq!(jfun_n1(1, &bm).unwrap(), expect, "a={a}");
        }
        for c in 0..4 {
            let bm = MonomialHermitian::diag(&[0, c]).unwrap();
            let expect = alpha_prime(&part(&[0]), &part(&[c + 1]))
                .unwrap()
                .checked_div(&unit)
                .unwrap();
            assert_eq!(jfun_n1(1, &bm).unwrap(), expect, "c={c}");
        }
        for bm in crate::reps::enumerate_rh(1, 1, -1, 2) {
            let dual = dual_vee(&bm, 1).unwrap();
            assert_eq!(jfun_n1(1, &bm).unwrap(), jfun_n1(1, &dual).unwrap(), "{bm}");
        }
    }

    #[test]
    fn appendix_n1_n2() {
        for (a, b) in [(0, 0), (2, 0), (1, 1), (3, 1), (4, 2), (4, 4)] {
            let rep = appendix_compat(1, &part(&[a, b]), Some(3)).unwrap();
            assert!(rep.holds && rep.beta_factor_holds, "({a},{b})");
            assert_eq!(rep.direct_holds, Some(true));
            assert!(rep.numeric.unwrap().max_abs_diff < 1e-9);
        }
        for b1 in [[0, 0, 0], [1, 1, 0], [2, 0, 0], [2, 1, 1], [3, 1, 0]] {
            let rep = appendix_compat(2, &part(&b1), None).unwrap();
            assert!(rep.holds && rep.beta_factor_holds, "{b1:?}");
        }
        assert!(appendix_compat(1, &part(&[1, 0]), None).is_err());
    }

    #[test]
    fn jcount_bridge() {
        let b = DEFAULT_ALPHA_BUDGET;
        let w = rat(16, 243);
        let d2 = jcount_oracle(JKind::J, &[1, 0], &[1, 0], 3, 2, b).unwrap();
        assert_eq!(d2.count, 34992);
        assert_eq!(d2.scaled, w);
        // d = 1 is below the stable range.
        let d1 = jcount_oracle(JKind::J, &[1, 0], &[1, 0], 3, 1, b).unwrap();
        assert_eq!(d1.scaled, rat(4, 81));
    }

    #[test]
    fn jcount_factorization() {
        let b = DEFAULT_ALPHA_BUDGET;
        // B = diag(π^a, π⁻¹): L has Gram diag(π^{a+1}, 1), M has Gram diag(π, 1).
        for a in [0, 2] {
            for d in [1, 2] {
                let j = jcount_oracle(JKind::J, &[a + 1, 0], &[1, 0], 3, d, b).unwrap().count;
                let i2 = jcount_oracle(JKind::I, &[0], &[1, 0], 3, d, b).unwrap().count;
                let i1 = jcount_oracle(JKind::I, &[a + 1], &[1], 3, d, b).unwrap().count;
                assert_eq!(j, i1 * i2, "a={a} d={d}");
            }
        }
    }

    #[test]
    fn jcount_j1_reduction() {
        let b = DEFAULT_ALPHA_BUDGET;
        // n = 1: J_d^1(L, M) = q⁻⁴ I_d(L, πM^∨), with πM^∨ of Gram diag(π, π²).
        for bexp in [[0, 0], [1, 1]] {
            let l = [bexp[0] + 1, bexp[1] + 1];
            let j1 = jcount_oracle(JKind::J1, &l, &[1, 0], 3, 2, b).unwrap().count;
            let i = jcount_oracle(JKind::I, &l, &[1, 2], 3, 2, b).unwrap().count;
            assert_eq!(j1 * 81, i, "{bexp:?}");
        }
    }
    fn arb_exps(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(0i64..4, len).prop_map(|mut v| {
            v.sort_unstable_by(|a, b| b.cmp(a));
            v
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mismatched_parity_vanishes(xi in arb_exps(1..=3), lam in arb_exps(1..=3)) {
            let lam: Vec<i64> = lam.into_iter().chain(std::iter::repeat(0)).take(xi.len()).collect();
            let (x, l) = (part(&xi), part(&lam));
            prop_assume!((x.weight() + l.weight()) % 2 == 1);
            prop_assert!(alpha_value(&x, &l).unwrap().is_zero());
        }

        #[test]
        fn scaling_both_forms(xi in arb_exps(1..=3), lam in arb_exps(1..=3)) {
            prop_assume!(lam.len() <= xi.len());
            let shift = |v: &[i64]| v.iter().map(|e| e + 1).collect::<Vec<_>>();
            let base = alpha_value(&part(&xi), &part(&lam)).unwrap();
            let scaled = alpha_value(&part(&shift(&xi)), &part(&shift(&lam))).unwrap();
            prop_assert_eq!(scaled, scale_alpha(lam.len(), &base));
        }
    }
}
