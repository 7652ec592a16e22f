//! The linear system for the constants `β_i^h`, `β_j^{2n−h}`, `δ_h` that
//! relate derivatives of weighted densities to their values.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::reps::{dual_vee, is_in_rh, MonomialHermitian};
use crate::symb::{solve_linear, Rat, SignedLaurent, SignedRational};
use crate::whit::w_density_n1;

fn sp(k: i64) -> SignedLaurent {
    SignedLaurent::s_pow(k)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BetaSystem {
    pub n: usize,
    pub h: usize,
    pub matrix: Vec<Vec<SignedRational>>,
    pub rhs: Vec<SignedRational>,
    pub solution: Option<BetaConstants>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BetaConstants {
    /// `β_0^h, …, β_{n−1}^h`
    pub beta_h: Vec<SignedRational>,
    /// `β_0^{2n−h}, …, β_{n−1}^{2n−h}`
    pub beta_dual: Vec<SignedRational>,
    pub delta: SignedRational,
}

fn check_nh(n: usize, h: usize) -> Result<()> {
    if n == 0 || h > 2 * n {
        return invalid(format!("need n ≥ 1 and 0 ≤ h ≤ 2n; got n={n}, h={h}"));
    }
    Ok(())
}

/// Exponents (in `s = −q`) of the matrix entries; all entries are monomials.
fn entry_exponent(n: i64, h: i64, i: i64, col: usize) -> i64 {
    let c = 2 * n - h;
    let col = col as i64;
    if col < n {
        let t = col;
        (n - t) * (i - (c + 1)) - 2 * t * c
    } else if col < 2 * n {
        let t = col - n;
        // q^{−(2n−h)²+h²} has an even exponent, so it is a power of s too.
        (-c * c + h * h) - (n - t) * (i - (c + 1)) - 2 * t * h
    } else {
        -2 * n * c
    }
}

pub fn build_system(n: usize, h: usize) -> Result<BetaSystem> {
    check_nh(n, h)?;
    let (ni, hi) = (n as i64, h as i64);
    let size = 2 * n + 1;
    let matrix = (1..=size as i64)
        .map(|i| {
            (0..size)
                .map(|col| SignedRational::s_pow(entry_exponent(ni, hi, i, col)))
                .collect()
        })
        .collect();
    let scale = SignedRational::s_pow(-2 * ni * (2 * ni - hi));
    let rhs = (-(2 * ni - hi)..=hi)
        .map(|k| scale.scale(&Rat::from_integer(k.into())))
        .collect();
    Ok(BetaSystem {
        n,
        h,
        matrix,
        rhs,
        solution: None,
    })
}

pub fn solve_constants(n: usize, h: usize) -> Result<BetaSystem> {
    let mut sys = build_system(n, h)?;
    let v = solve_linear(&sys.matrix, &sys.rhs).map_err(|e| match e {
        Error::Singular(c) => Error::Consistency(format!("beta system for n={n}, h={h} is singular at column {c}")),
        other => other,
    })?;
    for (row, rhs) in sys.matrix.iter().zip(&sys.rhs) {
        let lhs: SignedRational = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        if &lhs != rhs {
            return Err(Error::Consistency("nonzero residual in beta system".into()));
        }
    }
    sys.solution = Some(unpack(n, &v));
    Ok(sys)
}

/// The unknown vector is `(β^h, −β^{2n−h}, δ)`.
fn unpack(n: usize, v: &[SignedRational]) -> BetaConstants {
    BetaConstants {
        beta_h: v[..n].to_vec(),
        beta_dual: v[n..2 * n].iter().map(|x| -x).collect(),
        delta: v[2 * n].clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VandermondeData {
    pub xs: Vec<SignedLaurent>,
    pub alphas: Vec<SignedLaurent>,
}

pub fn vandermonde_data(n: usize, h: usize) -> Result<VandermondeData> {
    check_nh(n, h)?;
    let (ni, hi) = (n as i64, h as i64);
    let size = 2 * ni + 1;
    let xs = (1..=size)
        .map(|i| {
            if i <= ni {
                sp(ni + 1 - i)
            } else if i <= 2 * ni {
                sp(i - 2 * ni - 1)
            } else {
                SignedLaurent::one()
            }
        })
        .collect();
    let alphas = (1..=size)
        .map(|i| {
            if i <= ni {
                sp((ni + 1 - i) * (2 * ni - hi))
            } else if i <= 2 * ni {
                sp((2 * ni + 1 - i) * (2 * ni + hi))
            } else {
                SignedLaurent::one()
            }
        })
        .collect();
    Ok(VandermondeData { xs, alphas })
}

/// Checks `(−q)^{2n(2n−h)}·𝔅 = 𝔛·diag(α_{j,h})` with `𝔛_{ij} = x_j^{i−1}`.
/// On failure the error names the first bad entry (1-based).
pub fn vandermonde_factor_check(n: usize, h: usize) -> Result<bool> {
    let sys = build_system(n, h)?;
    let vd = vandermonde_data(n, h)?;
    let scale = SignedRational::s_pow(2 * (n * (2 * n - h)) as i64);
    for (i, row) in sys.matrix.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            let lhs = &scale * entry;
            let rhs = SignedRational::from(&vd.xs[j].pow(i as u32) * &vd.alphas[j]);
            if lhs != rhs {
                return Err(Error::Consistency(format!(
                    "entry ({}, {}): {lhs} vs {rhs}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(true)
}

/// Solution through the explicit inverse of 𝔛: `y_{ij}` is the
/// `z^{2n+1−j}` coefficient of `∏_{m≠i}(1 − x_m z)/(x_m − x_i)`.
pub fn solve_via_vandermonde(n: usize, h: usize) -> Result<BetaConstants> {
    let vd = vandermonde_data(n, h)?;
    let size = 2 * n + 1;
    let c: Vec<i64> = (-((2 * n - h) as i64)..=h as i64).collect();
    let mut v = Vec::with_capacity(size);
    for i in 0..size {
        // coefficients of ∏_{m≠i}(1 − x_m z), lowest degree first
        let mut poly = vec![SignedLaurent::one()];
        let mut den = SignedLaurent::one();
        for m in (0..size).filter(|&m| m != i) {
            let mut next = vec![SignedLaurent::zero(); poly.len() + 1];
            for (k, a) in poly.iter().enumerate() {
                next[k] += a;
                next[k + 1] -= &(a * &vd.xs[m]);
            }
            poly = next;
            den *= &(&vd.xs[m] - &vd.xs[i]);
        }
        let num: SignedLaurent = (0..size)
            .map(|j| poly[size - 1 - j].scale(&Rat::from_integer(c[j].into())))
            .fold(SignedLaurent::zero(), |a, b| a + b);
        let aj = SignedRational::from(vd.alphas[i].clone());
        let yi = SignedRational::new(num, den)?;
        v.push(yi.checked_div(&aj)?);
    }
    Ok(unpack(n, &v))
}

/// `β_{n−1}^{n−1} = (1 − (−q)^n) / ((−q)^{3n+1}(1 + q)(1 − (−q)^{−(n+1)}))`.
pub fn beta_closed_last(n: usize) -> Result<SignedRational> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let n = n as i64;
    let num = SignedLaurent::one() - sp(n);
    let den = &(&sp(3 * n + 1) * &(SignedLaurent::one() - sp(1))) * &(SignedLaurent::one() - sp(-(n + 1)));
    SignedRational::new(num, den)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeIdentityReport {
    pub h: usize,
    pub b: String,
    pub lhs: SignedRational,
    pub rhs: SignedRational,
    pub difference: SignedRational,
    pub holds: bool,
    /// Evaluations at a concrete `q`, when requested.
    pub numeric: Option<(String, String)>,
}

/// Both sides of `W′_{h,n}(B,0) − W′_{2n−h,n}(B^∨,0) = Σβ^h_i W_{h,i}(B,0)
/// − Σβ^{2n−h}_j W_{2n−h,j}(B^∨,0) + δ_h W_{h,n}(B,0)` at `n = 1`.
pub fn verify_derivative_identity(h: usize, b: &MonomialHermitian, q: Option<i64>) -> Result<DerivativeIdentityReport> {
    if b.size() != 2 || h > 2 {
        return invalid("the identity is verified at n = 1 only, with 0 ≤ h ≤ 2");
    }
    if is_in_rh(b, h).is_none() {
        return invalid(format!("{b} is not in R^h for h = {h}"));
    }
    let bv = dual_vee(b, h)?;
    let consts = solve_constants(1, h)?.solution.expect("solved");
    let w_h1 = w_density_n1(b, h, 1)?;
    let w_h0 = w_density_n1(b, h, 0)?;
    let w_d1 = w_density_n1(&bv, 2 - h, 1)?;
    let w_d0 = w_density_n1(&bv, 2 - h, 0)?;
    let lhs = &w_h1.derivative - &w_d1.derivative;
    let rhs =
        &(&(&consts.beta_h[0] * &w_h0.value) - &(&consts.beta_dual[0] * &w_d0.value)) + &(&consts.delta * &w_h1.value);
    let difference = &lhs - &rhs;
    let numeric = match q {
        Some(q) => Some((
            crate::symb::format_rat(&lhs.eval(q)?),
            crate::symb::format_rat(&rhs.eval(q)?),
        )),
        None => None,
    };
    Ok(DerivativeIdentityReport {
        h,
        b: b.to_string(),
        holds: difference.is_zero(),
        lhs,
        rhs,
        difference,
        numeric,
    })
}
