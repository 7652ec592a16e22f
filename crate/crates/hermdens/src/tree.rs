//! Intersection numbers of special divisors on the `n = 1` Rapoport–Zink
//! space, computed on the abstract `(q+1)`-regular Bruhat–Tits tree.
//!
//! Vertices are compressed into classes by their foot on the geodesic from
//! `Λ_x` to `Λ_y` and their depth off it, so sums over balls cost `O(d·m)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::cdens::jfun_n1;
use crate::error::{invalid, Error, Result};
use crate::reps::MonomialHermitian;
use crate::residue::is_prime;
use crate::symb::{format_rat, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TreeInstance {
    pub q: i64,
    /// `val h(x,x)`
    pub m_x: i64,
    /// `val h(y,y)`
    pub m_y: i64,
    /// `d(Λ_x, Λ_y)`
    pub d: i64,
    /// `val det B`
    pub vdet: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TreeCase {
    /// `𝔹_{m_y+1}(Λ_y) ⊂ 𝔹_{m_x}(Λ_x)`
    One,
    /// `𝔹_{m_y+1}(Λ_y) ⊃ 𝔹_{m_x}(Λ_x)`
    Two,
    /// Neither ball contains the other.
    Three,
}

impl fmt::Display for TreeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TreeCase::One => "1",
            TreeCase::Two => "2",
            TreeCase::Three => "3",
        };
        f.write_str(s)
    }
}

fn is_prime_power(q: i64) -> bool {
    if q < 2 {
        return false;
    }
    let q = q as u64;
    match (2..=q).find(|p| q.is_multiple_of(*p)) {
        Some(p) if is_prime(p) => {
            let mut v = q;
            while v.is_multiple_of(p) {
                v /= p;
            }
            v == 1
        }
        _ => false,
    }
}

impl TreeInstance {
    pub fn new(q: i64, m_x: i64, m_y: i64, d: i64, vdet: Option<i64>) -> Result<Self> {
        if q % 2 == 0 || !is_prime_power(q) {
            return invalid(format!("q must be an odd prime power, got {q}"));
        }
        if m_x < 0 || m_y < 0 || d < 0 {
            return invalid(format!("need m_x, m_y, d ≥ 0; got ({m_x}, {m_y}, {d})"));
        }
        if (d - m_x - m_y).rem_euclid(2) != 0 {
            return invalid(format!("need d ≡ m_x + m_y mod 2; got ({m_x}, {m_y}, {d})"));
        }
        let inst = Self { q, m_x, m_y, d, vdet };
        if inst.case() == TreeCase::Three {
            let v = m_x + m_y - d;
            if v < 0 {
                return invalid(format!("d = {d} exceeds m_x + m_y = {}", m_x + m_y));
            }
            if let Some(given) = vdet {
                if given != v {
                    return invalid(format!("in Case 3 val det B must be m_x + m_y − d = {v}, got {given}"));
                }
            }
        }
        Ok(inst)
    }

    pub fn case(&self) -> TreeCase {
        if self.m_y + 1 + self.d <= self.m_x {
            TreeCase::One
        } else if self.m_x + self.d <= self.m_y + 1 {
            TreeCase::Two
        } else {
            TreeCase::Three
        }
    }

    /// `min((m_x+m_y−d)/2, m_x, m_y+1)`
    pub fn r(&self) -> i64 {
        ((self.m_x + self.m_y - self.d) / 2).min(self.m_x).min(self.m_y + 1)
    }

    /// `val det B`, supplied or implied by Case 3.
    pub fn vdet(&self) -> Option<i64> {
        match self.case() {
            TreeCase::Three => Some(self.m_x + self.m_y - self.d),
            _ => self.vdet,
        }
    }
}

/// Vertices with the same foot `u` on the geodesic and depth `t_off` off it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct VertexClass {
    pub u: i64,
    pub t_off: i64,
    pub count: i128,
    /// distance to `Λ_x`
    pub d1: i64,
    /// distance to `Λ_y`
    pub d2: i64,
}

fn class_count(q: i64, d: i64, u: i64, t: i64) -> i128 {
    if t == 0 {
        return 1;
    }
    let branch = if d == 0 {
        q + 1
    } else if u == 0 || u == d {
        q
    } else {
        q - 1
    };
    branch as i128 * (q as i128).pow(t as u32 - 1)
}

/// All classes within `radius_x` of `Λ_x` and `radius_y` of `Λ_y`.
pub fn enumerate_ball_intersection(
    inst: &TreeInstance,
    radius_x: i64,
    radius_y: i64,
) -> impl Iterator<Item = VertexClass> + '_ {
    let d = inst.d;
    (0..=d).flat_map(move |u| {
        let t_max = (radius_x - u).min(radius_y - (d - u));
        (0..=t_max).map(move |t| VertexClass {
            u,
            t_off: t,
            count: class_count(inst.q, d, u, t),
            d1: u + t,
            d2: d - u + t,
        })
    })
}

/// `⟨ℙ_Λ, 𝒵(x)⟩` for `Λ` at distance `d1` from `Λ_x`.
pub fn weight_pz(inst: &TreeInstance, d1: i64) -> i128 {
    if d1 > inst.m_x {
        0
    } else if (inst.m_x - d1) % 2 == 0 {
        1
    } else {
        -(inst.q as i128)
    }
}

/// `½(m_c − dist)` if the parities agree, else `½(m_c + 1 − dist)`.
/// With `m_c = m_x` this is `m(x,Λ)`; with `m_c = m_y + 1` it is `m^∨(y,Λ)`.
pub fn mult_m(m_c: i64, dist: i64) -> i64 {
    if (m_c - dist).rem_euclid(2) == 0 {
        (m_c - dist) / 2
    } else {
        (m_c + 1 - dist) / 2
    }
}

/// `⟨𝒵(x), 𝒴(y)^v⟩`
pub fn vertical_pairing(inst: &TreeInstance) -> i128 {
    enumerate_ball_intersection(inst, inst.m_x, inst.m_y + 1)
        .map(|c| c.count * mult_m(inst.m_y + 1, c.d2) as i128 * weight_pz(inst, c.d1))
        .sum()
}

/// The pieces `ℱ(k)` of the vertical pairing, grouped by where the path to
/// `Λ_y` first meets `Γ_x, Γ_y, Γ_y^{(1)}, …`. Defined when `m_y + 1 < m_x`.
pub fn f_components(inst: &TreeInstance) -> Option<BTreeMap<i64, i128>> {
    if inst.case() != TreeCase::Three || inst.m_y + 1 >= inst.m_x {
        return None;
    }
    let r = inst.r();
    // foot coordinate of Γ_x, measured from Λ_x
    let ux = inst.d - (inst.m_y + 1 - r);
    let mut out = BTreeMap::new();
    for c in enumerate_ball_intersection(inst, inst.m_x, inst.m_y + 1) {
        let k = if c.u <= ux { -1 } else { c.u - ux - 1 };
        *out.entry(k).or_insert(0) += c.count * mult_m(inst.m_y + 1, c.d2) as i128 * weight_pz(inst, c.d1);
    }
    Some(out)
}

/// Closed forms of `ℱ(k)` in Case 3-1-1 (`r` even, `m_y ≤ 2r`), for
/// `k = −1, …, m_y − r`. `None` outside that case.
pub fn f_closed_forms_311(inst: &TreeInstance) -> Option<BTreeMap<i64, i128>> {
    if inst.case() != TreeCase::Three || inst.m_y + 1 >= inst.m_x {
        return None;
    }
    let (r, my) = (inst.r(), inst.m_y);
    if r % 2 != 0 || my - r > r {
        return None;
    }
    let last = my - r;
    let value = |k: i64| -> i64 {
        if k == -1 {
            0
        } else if k == last {
            if my % 2 == 0 {
                (my + 2) / 2
            } else {
                0
            }
        } else if k == 0 {
            r / 2 + 1
        } else if k % 2 == 1 {
            -(r + k + 1) / 2
        } else {
            (r + k + 2) / 2
        }
    };
    Some((-1..=last).map(|k| (k, value(k) as i128)).collect())
}

fn geometric_tail_int(q: i64, m: i64) -> i128 {
    // q(q^m − 1)/(q − 1) = q + q² + … + q^m
    (1..=m).map(|i| (q as i128).pow(i as u32)).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectionReport {
    pub instance: TreeInstance,
    pub case: TreeCase,
    pub r: i64,
    /// `⟨𝒵(x), 𝒴(y)⟩`, doubled so that half-integers stay exact.
    pub twice_intersection: i128,
    pub intersection: String,
    pub vertical: Option<i128>,
    pub vertical_horizontal: Option<i128>,
    /// `⟨𝒵(x), 𝒵(y)⟩`, doubled.
    pub twice_zz: Option<i128>,
    pub difference_sum: Option<i128>,
    pub f_components: Option<BTreeMap<i64, i128>>,
}

fn half_string(twice: i128) -> String {
    if twice % 2 == 0 {
        (twice / 2).to_string()
    } else {
        format!("{twice}/2")
    }
}

/// `⟨𝒵(x), 𝒴(y)⟩`. In Case 3 the value is checked against `r + 1`.
pub fn intersect_zy(inst: &TreeInstance) -> Result<IntersectionReport> {
    let case = inst.case();
    let r = inst.r();
    let mut rep = IntersectionReport {
        instance: *inst,
        case,
        r,
        twice_intersection: 0,
        intersection: String::new(),
        vertical: None,
        vertical_horizontal: None,
        twice_zz: None,
        difference_sum: None,
        f_components: None,
    };
    match case {
        TreeCase::Three => {
            let v = vertical_pairing(inst);
            let hv = if inst.d <= inst.m_x {
                let m = mult_m(inst.m_x, inst.d);
                if m < 0 {
                    return Err(Error::Consistency(format!("m(x, Λ_y) = {m} < 0 inside the ball")));
                }
                m as i128
            } else {
                0
            };
            let total = v + hv;
            if total != (r + 1) as i128 {
                return Err(Error::Consistency(format!("Case 3 total {total} ≠ r + 1 = {}", r + 1)));
            }
            rep.vertical = Some(v);
            rep.vertical_horizontal = Some(hv);
            rep.twice_intersection = 2 * total;
            rep.f_components = f_components(inst);
        }
        TreeCase::One | TreeCase::Two => {
            let Some(vdet) = inst.vdet else {
                return invalid(format!("Case {case} needs val det B"));
            };
            let m = inst.m_x.min(inst.m_y);
            let twice_zz = vdet as i128 - 2 * geometric_tail_int(inst.q, m);
            // Σ over Λ ∈ 𝔹_{m_y}(Λ_y) with d(Λ, Λ_y) ≡ m_y of ⟨ℙ_Λ, 𝒵(x)⟩
            let diff: i128 = enumerate_ball_intersection(inst, i64::MAX / 4, inst.m_y)
                .filter(|c| (inst.m_y - c.d2) % 2 == 0)
                .map(|c| c.count * weight_pz(inst, c.d1))
                .sum();
            rep.twice_zz = Some(twice_zz);
            rep.difference_sum = Some(diff);
            rep.twice_intersection = twice_zz + 2 * diff;
        }
    }
    rep.intersection = half_string(rep.twice_intersection);
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JfunCrossCheck {
    pub instance: TreeInstance,
    pub b: String,
    pub tree: String,
    pub jfun: String,
    pub agree: bool,
}

/// Compares the tree value with `𝒥_1^1(B)` for `B = diag(π^a, π^b)` of the
/// same determinant valuation.
pub fn cross_check_jfun(inst: &TreeInstance) -> Result<JfunCrossCheck> {
    let Some(vdet) = inst.vdet() else {
        return invalid("the cross-check needs val det B");
    };
    if vdet < 0 || vdet % 2 != 0 {
        return invalid(format!("val det B must be even and nonnegative, got {vdet}"));
    }
    let b = inst.m_x.min(inst.m_y).min(vdet / 2);
    let bm = MonomialHermitian::diag(&[vdet - b, b])?;
    let tree = intersect_zy(inst)?;
    let j = jfun_n1(1, &bm)?.eval(inst.q)?;
    let agree = j == Rat::new(tree.twice_intersection.into(), 2.into());
    Ok(JfunCrossCheck {
        instance: *inst,
        b: bm.to_string(),
        tree: tree.intersection,
        jfun: format_rat(&j),
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn inst(q: i64, mx: i64, my: i64, d: i64) -> TreeInstance {
        TreeInstance::new(q, mx, my, d, None).unwrap()
    }

    #[test]
    fn weights_and_multiplicities() {
        let t = inst(3, 3, 2, 1);
        assert_eq!(weight_pz(&t, 3), 1);
        assert_eq!(weight_pz(&t, 2), -3);
        assert_eq!(weight_pz(&t, 4), 0);
        assert_eq!(mult_m(2, 0), 1);
        assert_eq!(mult_m(1 + 1, 0), 1);
        assert_eq!(mult_m(2 + 1, 1), 1);
        assert_eq!(mult_m(3, 0), 2);
    }

    #[test]
    fn validation() {
        assert!(TreeInstance::new(4, 1, 0, 1, None).is_err());
        assert!(TreeInstance::new(3, 1, 0, 0, None).is_err());
        assert!(TreeInstance::new(3, 1, 1, 4, None).is_err());
        assert!(TreeInstance::new(9, 1, 0, 1, None).is_ok());
        assert!(TreeInstance::new(3, 3, 2, 1, Some(2)).is_err());
    }

    #[test]
    fn sphere_sizes() {
        for q in [3, 5] {
            for d in 0..4 {
                let t = TreeInstance {
                    q,
                    m_x: 0,
                    m_y: 0,
                    d,
                    vdet: None,
                };
                for k in 1..6 {
                    let total: i128 = enumerate_ball_intersection(&t, k, 100)
                        .filter(|c| c.d1 == k)
                        .map(|c| c.count)
                        .sum();
                    assert_eq!(total, (q as i128 + 1) * (q as i128).pow(k as u32 - 1));
                }
            }
        }
    }

    /// Materializes the tree around `Λ_x` and counts vertices by `(d1, d2)`.
    fn bfs_counts(q: usize, d: usize, depth: usize) -> BTreeMap<(i64, i64), i128> {
        let mut parent = vec![usize::MAX];
        let mut level = vec![0usize];
        let mut frontier = VecDeque::from([0usize]);
        while let Some(v) = frontier.pop_front() {
            if level[v] == depth {
                continue;
            }
            let kids = if v == 0 { q + 1 } else { q };
            for _ in 0..kids {
                parent.push(v);
                level.push(level[v] + 1);
                frontier.push_back(parent.len() - 1);
            }
        }
        // Λ_y: follow first children down d levels.
        let mut y = 0;
        for _ in 0..d {
            y = (0..parent.len()).find(|&w| parent[w] == y).unwrap();
        }
        let path = |mut v: usize| {
            let mut p = vec![v];
            while v != 0 {
                v = parent[v];
                p.push(v);
            }
            p
        };
        let ypath = path(y);
        let mut out = BTreeMap::new();
        for v in 0..parent.len() {
            let vp = path(v);
            let common = vp.iter().find(|w| ypath.contains(w)).unwrap();
            let dv = vp.iter().position(|w| w == common).unwrap();
            let dy = ypath.iter().position(|w| w == common).unwrap();
            *out.entry((level[v] as i64, (dv + dy) as i64)).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn classes_match_bfs() {
        for d in 0..=2i64 {
            let depth = 4;
            let bfs = bfs_counts(3, d as usize, depth);
            for (rx, ry) in [(2, 2), (4, 2), (1, 3), (3, 4)] {
                let t = TreeInstance {
                    q: 3,
                    m_x: 0,
                    m_y: 0,
                    d,
                    vdet: None,
                };
                let mut cls: BTreeMap<(i64, i64), i128> = BTreeMap::new();
                for c in enumerate_ball_intersection(&t, rx, ry) {
                    *cls.entry((c.d1, c.d2)).or_insert(0) += c.count;
                }
                let want: BTreeMap<(i64, i64), i128> = bfs
                    .iter()
                    .filter(|((a, b), _)| *a <= rx && *b <= ry)
                    .map(|(k, v)| (*k, *v))
                    .collect();
                assert_eq!(cls, want, "d={d} radii=({rx},{ry})");
            }
        }
        let t = TreeInstance {
            q: 3,
            m_x: 0,
            m_y: 0,
            d: 5,
            vdet: None,
        };
        assert_eq!(enumerate_ball_intersection(&t, 2, 2).count(), 0);
    }

    #[test]
    fn case3_values() {
        assert_eq!(intersect_zy(&inst(3, 1, 0, 1)).unwrap().intersection, "1");
        assert_eq!(intersect_zy(&inst(3, 3, 2, 1)).unwrap().intersection, "3");
        for q in [3, 5] {
            for mx in 0..=6 {
                for my in 0..=6 {
                    for d in 0..=13 {
                        let Ok(t) = TreeInstance::new(q, mx, my, d, None) else {
                            continue;
                        };
                        if t.case() != TreeCase::Three {
                            continue;
                        }
                        let rep = intersect_zy(&t).unwrap();
                        assert_eq!(rep.twice_intersection, 2 * (t.r() + 1) as i128);
                    }
                }
            }
        }
    }

    #[test]
    fn case1_and_2() {
        let t = TreeInstance::new(3, 4, 1, 1, Some(6)).unwrap();
        assert_eq!(t.case(), TreeCase::One);
        let rep = intersect_zy(&t).unwrap();
        assert_eq!(rep.difference_sum, Some(4));
        assert_eq!(rep.intersection, "4");
        assert!(intersect_zy(&TreeInstance::new(3, 4, 1, 1, None).unwrap()).is_err());
        let t = TreeInstance::new(5, 1, 4, 1, Some(4)).unwrap();
        assert_eq!(t.case(), TreeCase::Two);
        assert_eq!(intersect_zy(&t).unwrap().intersection, "3");
    }

    #[test]
    fn f_closed_forms_case_311() {
        let mut seen = 0;
        for q in [3, 5] {
            for mx in 0..=8 {
                for my in 0..=8 {
                    for d in 0..=16 {
                        let Ok(t) = TreeInstance::new(q, mx, my, d, None) else {
                            continue;
                        };
                        let Some(f) = f_components(&t) else { continue };
                        let Some(want) = f_closed_forms_311(&t) else { continue };
                        seen += 1;
                        for (k, w) in &want {
                            assert_eq!(f.get(k).copied().unwrap_or(0), *w, "q={q} ({mx},{my},{d}) k={k}");
                        }
                        assert!(f.keys().all(|k| want.contains_key(k)));
                        assert_eq!(f.values().sum::<i128>(), ((my + 2) / 2) as i128);
                    }
                }
            }
        }
        assert!(seen > 20);
    }

    #[test]
    fn agrees_with_jfun() {
        for (mx, my, d) in [(1, 1, 2), (1, 0, 1), (2, 2, 2), (3, 2, 1), (3, 3, 2), (4, 2, 2)] {
            let t = inst(3, mx, my, d);
            let c = cross_check_jfun(&t).unwrap();
            assert!(c.agree, "{c:?}");
        }
        let c = cross_check_jfun(&TreeInstance::new(3, 4, 1, 1, Some(4)).unwrap()).unwrap();
        assert!(c.agree && c.tree == "3");
    }
}
