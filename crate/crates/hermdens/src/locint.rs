//! Local integrals of `ψ(π^e Nm x)` and `ψ(π^e Tr(x ȳ))` over `O`, `O^×` and
//! `πO` in the unramified quadratic extension, in closed form and by an
//! exact finite character sum.
//!
//! The additive character has conductor exactly `O_F`. Measures give `O_E`
//! volume 1.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::residue::UnramifiedRing;
use crate::symb::{rat, rat_pow, rint, Rat, SignedLaurent, SignedRational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    O,
    Unit,
    PiO,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::O, Region::Unit, Region::PiO];
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::O => "O",
            Region::Unit => "unit",
            Region::PiO => "piO",
        })
    }
}

impl FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "o" => Ok(Region::O),
            "unit" | "o_unit" | "ox" => Ok(Region::Unit),
            "pio" | "pi_o" => Ok(Region::PiO),
            _ => invalid(format!("unknown region {s:?} (use O, unit, piO)")),
        }
    }
}

fn s_pow(k: i64) -> SignedLaurent {
    SignedLaurent::s_pow(k)
}

/// `∫_R ψ(π^e Nm x) dx`.
pub fn norm_integral(region: Region, e: i64) -> SignedRational {
    norm_integral_laurent(region, e).into()
}

pub fn norm_integral_laurent(region: Region, e: i64) -> SignedLaurent {
    let o = s_pow(e.min(0));
    let pio = s_pow((e + 2).min(0) - 2);
    match region {
        Region::O => o,
        Region::PiO => pio,
        Region::Unit => o - pio,
    }
}

/// `J₁(e)`: 1 for `e ≥ 0`, else 0.
pub fn trace_integral_j1(e: i64) -> SignedRational {
    SignedRational::int((e >= 0) as i64)
}

/// Volume of `{x ∈ R : val x ≥ c}`.
fn ball_volume(region: Region, c: i64) -> SignedLaurent {
    match region {
        Region::O => s_pow(-2 * c.max(0)),
        Region::PiO => s_pow(-2 * c.max(1)),
        Region::Unit => {
            if c <= 0 {
                SignedLaurent::one() - s_pow(-2)
            } else {
                SignedLaurent::zero()
            }
        }
    }
}

/// `∫_{R1×R2} ψ(π^e Tr(x ȳ)) dx dy`.
///
/// Integrating `y` over `O` leaves the indicator of `val x ≥ -e`; over `πO`
/// it leaves `q⁻²` times the indicator of `val x ≥ -e-1`; `O^×` is the
/// difference.
pub fn trace_pair_integral(r1: Region, r2: Region, e: i64) -> SignedRational {
    trace_pair_integral_laurent(r1, r2, e).into()
}

pub fn trace_pair_integral_laurent(r1: Region, r2: Region, e: i64) -> SignedLaurent {
    match r2 {
        Region::O => ball_volume(r1, -e),
        Region::PiO => s_pow(-2) * ball_volume(r1, -e - 1),
        Region::Unit => ball_volume(r1, -e) - s_pow(-2) * ball_volume(r1, -e - 1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Norm(Region),
    TracePair(Region, Region),
}

fn zp_val(x: u64, p: u64, k: u32) -> u32 {
    let mut v = 0;
    let mut x = x;
    while v < k && x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

/// `Σ_a H[a]·ψ(a/p^k)` for a histogram on `Z/p^k` that is constant on
/// valuation classes. Only the two top classes survive.
fn collapse(hist: &[u64], p: u64, k: u32) -> Result<Rat> {
    let mut totals = vec![0u64; k as usize + 1];
    let mut rep: Vec<Option<u64>> = vec![None; k as usize + 1];
    for (a, &cnt) in hist.iter().enumerate() {
        let v = zp_val(a as u64, p, k) as usize;
        totals[v] += cnt;
        match rep[v] {
            None => rep[v] = Some(cnt),
            Some(c) if c != cnt => {
                return Err(Error::Consistency(format!(
                    "fiber sizes not constant on valuation class {v} modulo {p}^{k}"
                )))
            }
            _ => {}
        }
    }
    let s = |v: usize| rint(totals[v] as i64);
    Ok(s(k as usize) - s(k as usize - 1) / rint(p as i64 - 1))
}

/// Histogram of `f(a, b) mod m` over residues `a + b√ε` lying in `region`.
fn histogram<F>(ring: &UnramifiedRing, region: Region, m: u64, f: F) -> Vec<u64>
where
    F: Fn(u64, u64) -> u64 + Sync,
{
    (0..ring.modulus)
        .into_par_iter()
        .fold(
            || vec![0u64; m as usize],
            |mut h, a| {
                for b in 0..ring.modulus {
                    if ring.contains(region, a, b) {
                        h[(f(a, b) % m) as usize] += 1;
                    }
                }
                h
            },
        )
        .reduce(
            || vec![0u64; m as usize],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        )
}

/// Budget on `p^{2K}` above which the oracle works modulo the minimal level.
const FULL_DEPTH_LIMIT: u64 = 1 << 20;

/// Exact finite character sum for the integrals above, with `O_E` realized
/// modulo `p^K`.
///
/// The summand only depends on residues modulo `p^{max(1,-e)}`, so working at
/// that level gives the same normalized value; when the requested depth is
/// cheap the sum is taken at full depth instead.
pub fn charsum_oracle(p: u64, kind: OracleKind, e: i64, depth: u32) -> Result<Rat> {
    if (depth as i64) < e.abs() + 2 {
        return invalid(format!(
            "depth {depth} too small for e = {e}; need at least {}",
            e.abs() + 2
        ));
    }
    let k = (-e).max(0) as u32;
    let minimal = k.max(1);
    let level = match p.checked_pow(2 * depth) {
        Some(sz) if sz <= FULL_DEPTH_LIMIT => depth,
        _ => minimal,
    };
    let ring = UnramifiedRing::new(p, level)?;
    let inv_vol = rat(1, 1) / rint(ring.size() as i64);
    let km = p.pow(k);
    let sum_of = |hist: &[u64]| -> Result<Rat> {
        if k == 0 {
            Ok(rint(hist.iter().sum::<u64>() as i64))
        } else {
            collapse(hist, p, k)
        }
    };
    match kind {
        OracleKind::Norm(region) => {
            let hist = histogram(&ring, region, km, |a, b| ring.norm(a, b));
            Ok(sum_of(&hist)? * inv_vol)
        }
        OracleKind::TracePair(r1, r2) => {
            // Count x ∈ R1 by valuation; the inner sum over y only depends
            // on that valuation, which is checked on a second representative.
            let cap = k.max(1);
            let by_val = histogram(&ring, r1, cap as u64 + 1, |a, b| ring.val(a, b).min(cap) as u64);
            let inner = |x: (u64, u64)| -> Result<Rat> {
                let hist = histogram(&ring, r2, km, |c, d| {
                    let t = ring.mul(x, ring.conj((c, d)));
                    2 * t.0 % ring.modulus
                });
                sum_of(&hist)
            };
            let mut total = Rat::zero();
            for (v, &count) in by_val.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let v = v as u32;
                let pv = if v >= level { 0 } else { p.pow(v) };
                let val = inner((pv, 0))?;
                let alt = inner(ring.mul((pv, 0), (2 % ring.modulus, 1)))?;
                if val != alt {
                    return Err(Error::Consistency(format!(
                        "inner sum depends on more than val x = {v}"
                    )));
                }
                total += rint(count as i64) * val;
            }
            Ok(total * &inv_vol * &inv_vol)
        }
    }
}

/// Closed-form counterpart of [`charsum_oracle`].
pub fn closed_form(kind: OracleKind, e: i64) -> SignedRational {
    match kind {
        OracleKind::Norm(r) => norm_integral(r, e),
        OracleKind::TracePair(r1, r2) => trace_pair_integral(r1, r2, e),
    }
}

/// `1 - q⁻²`, the volume of `O^×`.
pub fn unit_volume() -> SignedRational {
    SignedRational::from(SignedLaurent::one() - SignedLaurent::s_pow(-2))
}

/// `(−q)^k` evaluated at a concrete `q`.
pub fn s_value(q: i64, k: i64) -> Rat {
    rat_pow(&rint(-q), k)
}
