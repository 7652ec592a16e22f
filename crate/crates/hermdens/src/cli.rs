//! Command-line front end. Every command builds a canonical request, runs
//! it (or fetches it from the cache) and prints one JSON document or a
//! plain-text rendering of it.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_traits::Signed;
use serde_json::{json, Map, Value};

use crate::cache::{artifact_version, digest, Cache, SCHEMA_VERSION};
use crate::cdens::{
    alpha_brute, alpha_prime, alpha_value, appendix_compat, hironaka_density, jcount_oracle, jfun_n1, DiagonalForm,
    JKind, Pad, Partition,
};
use crate::config::Config;
use crate::error::{invalid, Error, Result};
use crate::locint::{charsum_oracle, closed_form, trace_integral_j1, OracleKind, Region};
use crate::reps::{MonomialHermitian, WeightProfile};
use crate::symb::{format_rat, parse_rat, Rat, SignedRational};
use crate::tree::{cross_check_jfun, f_closed_forms_311, intersect_zy, TreeInstance};
use crate::verify::{self, VerifyOptions};
use crate::whit::{alpha_iwahori_brute, alpha_iwahori_n1, w_density_n1, w_density_truncated, XPoly};

#[derive(Parser, Debug)]
#[command(
    name = "hermdens",
    version,
    about = "Exact hermitian local densities and their derivatives"
)]
pub struct Cli {
    /// TOML configuration file (default: $HERMDENS_CONFIG)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// JSON-lines result cache
    #[arg(long, global = true, value_name = "PATH")]
    pub cache: Option<PathBuf>,
    /// Emit the JSON document instead of text
    #[arg(long, global = true)]
    pub json: bool,
    /// Add K-digit decimal approximations (display only)
    #[arg(long, global = true, value_name = "K")]
    pub decimal: Option<usize>,
    /// Worker threads for brute-force counts and sweeps
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Slot integrals over O, O^x or piO
    Integral(IntegralArgs),
    /// Weighted Whittaker density W_(h,t)(B,r)
    Wdens(WdensArgs),
    /// Constants of the beta system
    Beta(BetaArgs),
    /// Classical densities alpha(pi^xi, pi^lambda) and their derivatives
    Alpha(AlphaArgs),
    /// The normalized derivative functional J_t at n = 1
    Jfun(JfunArgs),
    /// Compatibility with the derivative of the classical density
    Appendix(AppendixArgs),
    /// Intersection numbers on the Bruhat-Tits tree
    Tree(TreeArgs),
    /// Lattice embedding counts I_d, J_d, J_d^1
    Count(CountArgs),
    /// Run a verification suite
    Verify(VerifyArgs),
    /// Inspect the result cache
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args, Debug)]
pub struct IntegralArgs {
    /// norm, pair or j1
    #[arg(long, default_value = "norm")]
    pub kind: String,
    #[arg(long, default_value = "O")]
    pub region: String,
    /// Second region for pair integrals
    #[arg(long, default_value = "O")]
    pub region2: String,
    #[arg(long, allow_hyphen_values = true)]
    pub e: i64,
    /// Also evaluate the character-sum oracle
    #[arg(long)]
    pub oracle: bool,
    /// Prime for the oracle (default: configured q)
    #[arg(long)]
    pub p: Option<u64>,
    /// Oracle level k in Z/p^k (default |e| + 2)
    #[arg(long)]
    pub depth: Option<u32>,
}

#[derive(Args, Debug)]
pub struct WdensArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long)]
    pub h: usize,
    #[arg(long)]
    pub t: usize,
    /// e.g. diag:0,-1 or mono:sigma=[2,1];e=[0,0]
    #[arg(long = "B", value_name = "B")]
    pub b: String,
    /// Exact symbolic value (the default without --q)
    #[arg(long)]
    pub symbolic: bool,
    /// Evaluate a truncated orbit sum at this prime
    #[arg(long)]
    pub q: Option<u64>,
    /// Exponent window LO:HI for the truncated sum
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
}

#[derive(Args, Debug)]
pub struct BetaArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub h: usize,
    #[arg(long)]
    pub q: Option<i64>,
    /// Solve through the Vandermonde factorization as well
    #[arg(long)]
    pub vandermonde: bool,
}

#[derive(Args, Debug)]
pub struct AlphaArgs {
    /// Exponents of the first form, e.g. 1,0 (an empty list is allowed)
    #[arg(long, allow_hyphen_values = true)]
    pub xi: String,
    #[arg(long, allow_hyphen_values = true)]
    pub lam: String,
    /// Derivative along the self-dual padding
    #[arg(long)]
    pub prime: bool,
    /// Show the full polynomial in X = (-q)^(-2r)
    #[arg(long)]
    pub poly: bool,
    /// Count solutions modulo pi^d instead of using the formula
    #[arg(long)]
    pub brute: bool,
    /// Iwahori density alpha(Y;Gamma_2) for a size-2 monomial Y instead
    #[arg(long)]
    pub iwahori: bool,
    #[arg(long)]
    pub q: Option<i64>,
    #[arg(long, default_value_t = 2)]
    pub d: u32,
}

#[derive(Args, Debug)]
pub struct JfunArgs {
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long = "B", value_name = "B")]
    pub b: String,
    #[arg(long)]
    pub q: Option<i64>,
}

#[derive(Args, Debug)]
pub struct AppendixArgs {
    #[arg(long)]
    pub n: usize,
    /// Exponents of B_1, e.g. 2,0
    #[arg(long = "B1", value_name = "B1")]
    pub b1: String,
    #[arg(long)]
    pub q: Option<i64>,
}

#[derive(Args, Debug)]
pub struct TreeArgs {
    #[arg(long, default_value_t = 3)]
    pub q: i64,
    #[arg(long)]
    pub mx: i64,
    #[arg(long)]
    pub my: i64,
    #[arg(long)]
    pub d: i64,
    /// val det B, needed in Cases 1 and 2
    #[arg(long)]
    pub vdet: Option<i64>,
    /// Compare each F(k) with its closed form where one applies
    #[arg(long)]
    pub per_f: bool,
    /// Compare with J_1 of a diagonal B of the same determinant
    #[arg(long)]
    pub check_jfun: bool,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    /// i, j or j1
    #[arg(long, default_value = "j")]
    pub kind: String,
    /// Gram exponents of L, e.g. 1,0
    #[arg(long, allow_hyphen_values = true)]
    pub l: String,
    #[arg(long, allow_hyphen_values = true)]
    pub m: String,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long, default_value_t = 2)]
    pub d: u32,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long)]
    pub q: Option<i64>,
}

#[derive(Subcommand, Debug)]
pub enum CacheAction {
    Stats,
    Get { key: String },
    List,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Invalid(_) | Error::DivisionByZero | Error::Pole(_) => 2,
        Error::Budget(_) => 3,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match exit_code(e) {
        2 => "invalid",
        3 => "budget",
        _ => "internal",
    }
}

/// Symbolic value: readable string plus the exact wire form.
fn sym(v: &SignedRational) -> Value {
    json!({ "expr": v.to_q_string(), "wire": v.to_json() })
}

fn rat_s(r: &Rat) -> Value {
    Value::String(format_rat(r))
}

fn poly_json(p: &XPoly) -> Value {
    Value::Object(p.0.iter().map(|(k, c)| (k.to_string(), sym(c))).collect())
}

fn parse_list(what: &str, s: &str) -> Result<Vec<i64>> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Invalid(format!("{what}: bad integer {t:?}")))
        })
        .collect()
}

fn parse_window(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::Invalid(format!("window must be LO:HI, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn odd_prime(q: i64) -> Result<i64> {
    if q < 3 || !crate::residue::is_prime(q as u64) {
        return invalid(format!("q must be an odd prime, got {q}"));
    }
    Ok(q)
}

/// What a command computed, before it is wrapped into the output document.
struct Outcome {
    request: Value,
    provenance: &'static str,
    result: Value,
    /// `q` for decimal approximations of symbolic values.
    q: Option<i64>,
    /// Whether the result may be cached.
    cacheable: bool,
    ok: bool,
}

struct Ctx {
    config: Config,
}

impl Ctx {
    fn q_or_default(&self, q: Option<i64>) -> i64 {
        q.unwrap_or(self.config.default_q as i64)
    }
}

/// Deferred computation, run only on a cache miss.
type Job = Box<dyn FnOnce() -> Result<Outcome>>;

fn plan(cmd: &Command, ctx: &Ctx) -> Result<(Value, Job)> {
    match cmd {
        Command::Integral(a) => {
            let kind = a.kind.to_ascii_lowercase();
            let r1: Region = a.region.parse()?;
            let r2: Region = a.region2.parse()?;
            let p = a.p.unwrap_or(ctx.config.default_q);
            let depth = a.depth.unwrap_or((a.e.unsigned_abs() + 2) as u32);
            let okind = match kind.as_str() {
                "norm" => Some(OracleKind::Norm(r1)),
                "pair" => Some(OracleKind::TracePair(r1, r2)),
                "j1" => None,
                _ => return invalid(format!("unknown integral kind {kind:?}; use norm, pair or j1")),
            };
            if a.oracle && okind.is_none() {
                return invalid("the j1 integral has no character-sum oracle");
            }
            let mut req = json!({"command": "integral", "kind": kind, "e": a.e});
            if kind != "j1" {
                req["region"] = json!(r1.to_string());
            }
            if kind == "pair" {
                req["region2"] = json!(r2.to_string());
            }
            if a.oracle {
                req["oracle"] = json!({"p": p, "depth": depth});
            }
            let e = a.e;
            let oracle = a.oracle;
            Ok((
                req.clone(),
                Box::new(move || {
                    let value = match okind {
                        Some(k) => closed_form(k, e),
                        None => trace_integral_j1(e),
                    };
                    let mut result = json!({"value": sym(&value)});
                    let mut ok = true;
                    if let (true, Some(k)) = (oracle, okind) {
                        let o = charsum_oracle(p, k, e, depth)?;
                        let closed = value.eval(p as i64)?;
                        ok = o == closed;
                        result["oracle"] =
                            json!({"p": p, "depth": depth, "value": rat_s(&o), "closed": rat_s(&closed), "agree": ok});
                    }
                    Ok(Outcome {
                        request: req,
                        provenance: if oracle {
                            "closed form; character sum over O_E/p^k"
                        } else {
                            "closed form"
                        },
                        result,
                        q: Some(p as i64),
                        cacheable: true,
                        ok,
                    })
                }),
            ))
        }
        Command::Wdens(a) => {
            if a.n != 1 {
                return invalid(format!(
                    "wdens supports n = 1 only (got n = {}): alpha(Y;Gamma_2n) has no closed form beyond n = 1",
                    a.n
                ));
            }
            if a.symbolic && a.q.is_some() {
                return invalid("--symbolic and --q are exclusive");
            }
            let b: MonomialHermitian = a.b.parse()?;
            let window = match &a.window {
                Some(w) => parse_window(w)?,
                None => (ctx.config.window_lo, ctx.config.window_hi),
            };
            let (h, t, q) = (a.h, a.t, a.q);
            let mut req = json!({"command": "wdens", "n": 1, "h": h, "t": t, "B": b.to_string()});
            match q {
                Some(q) => {
                    req["mode"] = json!("numeric");
                    req["q"] = json!(q);
                    req["window"] = json!([window.0, window.1]);
                }
                None => req["mode"] = json!("symbolic"),
            }
            Ok((
                req.clone(),
                Box::new(move || {
                    let result = match q {
                        None => {
                            let w = w_density_n1(&b, h, t)?;
                            json!({"value": sym(&w.value), "derivative": sym(&w.derivative), "poly_in_x": poly_json(&w.poly)})
                        }
                        Some(q) => {
                            let prof = WeightProfile::new(1, h, t, 0)?;
                            let w = w_density_truncated(&b, &prof, q, window)?;
                            json!({
                                "value": rat_s(&w.value),
                                "derivative": rat_s(&w.derivative),
                                "tail": serde_json::to_value(&w.tail).expect("json"),
                            })
                        }
                    };
                    Ok(Outcome {
                        request: req,
                        provenance: if q.is_some() {
                            "truncated orbit sum"
                        } else {
                            "orbit sum with closed-form tails"
                        },
                        result,
                        q: q.map(|q| q as i64),
                        cacheable: true,
                        ok: true,
                    })
                }),
            ))
        }
        Command::Beta(a) => {
            let (n, h, vdm) = (a.n, a.h, a.vandermonde);
            let q = a.q.map(odd_prime).transpose()?;
            let mut req = json!({"command": "beta", "n": n, "h": h, "vandermonde": vdm});
            if let Some(q) = q {
                req["q"] = json!(q);
            }
            Ok((
                req.clone(),
                Box::new(move || {
                    let sys = crate::beta::solve_constants(n, h)?;
                    let c = sys
                        .solution
                        .ok_or_else(|| Error::Consistency("beta system is singular".into()))?;
                    let list = |v: &[SignedRational]| Value::Array(v.iter().map(sym).collect());
                    let mut result = json!({
                        "beta": list(&c.beta_h),
                        "beta_dual": list(&c.beta_dual),
                        "delta": sym(&c.delta),
                    });
                    let mut ok = true;
                    if vdm {
                        let fact = crate::beta::vandermonde_factor_check(n, h)?;
                        let via = crate::beta::solve_via_vandermonde(n, h)?;
                        ok = fact && via == c;
                        result["vandermonde"] = json!({"factorization_holds": fact, "same_constants": via == c});
                    }
                    Ok(Outcome {
                        request: req,
                        provenance: if vdm {
                            "exact solve; Vandermonde factorization"
                        } else {
                            "exact linear solve"
                        },
                        result,
                        q,
                        cacheable: true,
                        ok,
                    })
                }),
            ))
        }
        Command::Alpha(a) => {
            let xi = parse_list("--xi", &a.xi)?;
            let lam = parse_list("--lam", &a.lam)?;
            let (prime, poly, brute, iwahori, d) = (a.prime, a.poly, a.brute, a.iwahori, a.d);
            let q = a.q.map(odd_prime).transpose()?;
            if brute && prime {
                return invalid("--brute counts the value only; drop --prime");
            }
            let mut req = json!({"command": "alpha", "xi": xi, "lam": lam});
            if iwahori {
                req["iwahori"] = json!(true);
            } else {
                req["prime"] = json!(prime);
                req["poly"] = json!(poly);
            }
            let bq = if brute { Some(ctx.q_or_default(q)) } else { q };
            if brute {
                req["brute"] = json!({"q": bq, "d": d});
            } else if let Some(q) = q {
                req["q"] = json!(q);
            }
            let (ab, ib) = (ctx.config.alpha_budget, ctx.config.iwahori_budget);
            Ok((
                req.clone(),
                Box::new(move || {
                    let mut result = Map::new();
                    let provenance;
                    if iwahori {
                        if !lam.is_empty() {
                            return invalid("--iwahori takes the exponents of Y in --xi and no --lam");
                        }
                        let y = MonomialHermitian::diag(&xi)?;
                        if brute {
                            result.insert(
                                "value".into(),
                                rat_s(&alpha_iwahori_brute(&y, bq.unwrap() as u64, d, ib)?),
                            );
                            provenance = "brute-force count modulo pi^d";
                        } else {
                            result.insert("value".into(), sym(&alpha_iwahori_n1(&y)?));
                            provenance = "closed form";
                        }
                    } else if brute {
                        let v = alpha_brute(
                            &DiagonalForm::new(xi),
                            &DiagonalForm::new(lam),
                            bq.unwrap() as u64,
                            d,
                            ab,
                        )?;
                        result.insert("value".into(), rat_s(&v));
                        provenance = "brute-force count modulo pi^d";
                    } else {
                        let (x, l) = (Partition::from_exps(&xi)?, Partition::from_exps(&lam)?);
                        let v = if prime {
                            alpha_prime(&x, &l)?
                        } else {
                            alpha_value(&x, &l)?
                        };
                        result.insert("value".into(), sym(&v));
                        if poly {
                            result.insert("poly_in_x".into(), poly_json(&hironaka_density(&x, &l, Pad::None)?));
                        }
                        provenance = "partition sum";
                    }
                    Ok(Outcome {
                        request: req,
                        provenance,
                        result: Value::Object(result),
                        q: bq,
                        cacheable: true,
                        ok: true,
                    })
                }),
            ))
        }
        Command::Jfun(a) => {
            let b: MonomialHermitian = a.b.parse()?;
            let t = a.t;
            let q = a.q.map(odd_prime).transpose()?;
            let mut req = json!({"command": "jfun", "t": t, "B": b.to_string()});
            if let Some(q) = q {
                req["q"] = json!(q);
            }
            Ok((
                req.clone(),
                Box::new(move || {
                    let v = jfun_n1(t, &b)?;
                    let mut result = json!({"value": sym(&v)});
                    if let Some(q) = q {
                        result["at_q"] = rat_s(&v.eval(q)?);
                    }
                    Ok(Outcome {
                        request: req,
                        provenance: "weighted densities and beta constants",
                        result,
                        q,
                        cacheable: true,
                        ok: true,
                    })
                }),
            ))
        }
        Command::Appendix(a) => {
            let b1 = Partition::from_exps(&parse_list("--B1", &a.b1)?)?;
            let n = a.n;
            let q = a.q.map(odd_prime).transpose()?;
            let mut req = json!({"command": "appendix", "n": n, "B1": b1.to_string()});
            if let Some(q) = q {
                req["q"] = json!(q);
            }
            Ok((
                req.clone(),
                Box::new(move || {
                    let r = appendix_compat(n, &b1, q)?;
                    let mut result = json!({
                        "first": sym(&r.first),
                        "second": sym(&r.second),
                        "lhs": sym(&r.lhs),
                        "rhs": sym(&r.rhs),
                        "holds": r.holds,
                        "beta_factor_holds": r.beta_factor_holds,
                    });
                    if let Some(d) = &r.direct {
                        result["direct"] = sym(d);
                        result["direct_holds"] = json!(r.direct_holds);
                    }
                    if let Some(nc) = &r.numeric {
                        result["numeric"] = serde_json::to_value(nc).expect("json");
                    }
                    let ok = r.holds && r.beta_factor_holds && r.direct_holds != Some(false);
                    Ok(Outcome {
                        request: req,
                        provenance: "partition sums and closed products",
                        result,
                        q,
                        cacheable: true,
                        ok,
                    })
                }),
            ))
        }
        Command::Tree(a) => {
            let inst = TreeInstance::new(a.q, a.mx, a.my, a.d, a.vdet)?;
            let (per_f, check_jfun) = (a.per_f, a.check_jfun);
            let req = json!({
                "command": "tree", "q": a.q, "mx": a.mx, "my": a.my, "d": a.d, "vdet": a.vdet,
                "per_f": per_f, "check_jfun": check_jfun,
            });
            Ok((
                req.clone(),
                Box::new(move || {
                    let r = intersect_zy(&inst)?;
                    let mut result = json!({
                        "intersection": r.intersection,
                        "case": r.case.to_string(),
                        "r": r.r,
                    });
                    let opt = |v: Option<i128>| v.map(|x| Value::String(x.to_string()));
                    if let Some(v) = opt(r.vertical) {
                        result["vertical"] = v;
                    }
                    if let Some(v) = opt(r.vertical_horizontal) {
                        result["vertical_horizontal"] = v;
                    }
                    if let Some(v) = r.twice_zz {
                        result["zz"] = Value::String(half(v));
                    }
                    if let Some(v) = opt(r.difference_sum) {
                        result["difference_sum"] = v;
                    }
                    let mut ok = true;
                    if let Some(f) = &r.f_components {
                        result["f"] =
                            Value::Object(f.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect());
                        if per_f {
                            match f_closed_forms_311(&inst) {
                                Some(want) => {
                                    let agree = want.iter().all(|(k, w)| f.get(k).copied().unwrap_or(0) == *w)
                                        && f.keys().all(|k| want.contains_key(k));
                                    ok &= agree;
                                    result["f_closed_forms"] = json!({
                                        "values": want.iter().map(|(k, v)| (k.to_string(), json!(v.to_string()))).collect::<Map<_, _>>(),
                                        "agree": agree,
                                    });
                                }
                                None => result["f_closed_forms"] = Value::Null,
                            }
                        }
                    }
                    if check_jfun {
                        let c = cross_check_jfun(&inst)?;
                        ok &= c.agree;
                        result["jfun_check"] = json!({"B": c.b, "jfun": c.jfun, "agree": c.agree});
                    }
                    Ok(Outcome {
                        request: req,
                        provenance: "vertex classes on the tree",
                        result,
                        q: None,
                        cacheable: true,
                        ok,
                    })
                }),
            ))
        }
        Command::Count(a) => {
            let kind: JKind = a.kind.parse()?;
            let l = parse_list("--l", &a.l)?;
            let m = parse_list("--m", &a.m)?;
            let q = a.q.unwrap_or(ctx.config.default_q);
            let d = a.d;
            let req = json!({"command": "count", "kind": format!("{kind:?}"), "l": l, "m": m, "q": q, "d": d});
            let budget = ctx.config.alpha_budget;
            Ok((
                req.clone(),
                Box::new(move || {
                    let c = jcount_oracle(kind, &l, &m, q, d, budget)?;
                    Ok(Outcome {
                        request: req,
                        provenance: "brute-force count modulo pi^d",
                        result: json!({"count": c.count.to_string(), "scaled": rat_s(&c.scaled)}),
                        q: None,
                        cacheable: true,
                        ok: true,
                    })
                }),
            ))
        }
        Command::Verify(a) => {
            let suite = a.suite.clone();
            if !verify::suite_names().contains(&suite.as_str()) {
                return invalid(format!(
                    "unknown suite {suite:?}; known: {}",
                    verify::suite_names().join(", ")
                ));
            }
            let q = odd_prime(ctx.q_or_default(a.q))?;
            let opts = VerifyOptions {
                q,
                alpha_budget: ctx.config.alpha_budget,
                iwahori_budget: ctx.config.iwahori_budget,
            };
            let req = json!({"command": "verify", "suite": suite, "q": q});
            Ok((
                req.clone(),
                Box::new(move || {
                    let rep = verify::run(&suite, &opts)?;
                    Ok(Outcome {
                        request: req,
                        provenance: "verification suite",
                        ok: rep.ok(),
                        result: serde_json::to_value(&rep).expect("json"),
                        q: None,
                        cacheable: false,
                    })
                }),
            ))
        }
        Command::Cache { .. } => unreachable!("handled separately"),
    }
}

fn half(twice: i128) -> String {
    if twice % 2 == 0 {
        (twice / 2).to_string()
    } else {
        format!("{twice}/2")
    }
}

/// `r` rounded to `k` decimal places.
pub fn decimal(r: &Rat, k: usize) -> String {
    let scale = BigInt::from(10u32).pow(k as u32);
    let scaled = r * Rat::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let neg = rounded.is_negative();
    let digits = rounded.abs().to_string();
    let body = if k == 0 {
        digits
    } else {
        let padded = format!("{digits:0>width$}", width = k + 1);
        let (int, frac) = padded.split_at(padded.len() - k);
        format!("{int}.{frac}")
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Decimal renderings of every exact number in `v`, keyed by JSON path.
fn approximations(v: &Value, path: &str, q: i64, k: usize, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) if m.contains_key("wire") && m.contains_key("expr") => {
            let s = SignedRational::from_json(&m["wire"]).and_then(|x| x.eval(q));
            out.insert(
                path.to_string(),
                match s {
                    Ok(r) => Value::String(decimal(&r, k)),
                    Err(_) => Value::Null,
                },
            );
        }
        Value::Object(m) => {
            for (key, x) in m {
                approximations(x, &join(path, key), q, k, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                approximations(x, &join(path, &i.to_string()), q, k, out);
            }
        }
        Value::String(s) if s.contains('/') || s.parse::<i64>().is_ok() => {
            if let Ok(r) = parse_rat(s) {
                if !r.is_integer() {
                    out.insert(path.to_string(), Value::String(decimal(&r, k)));
                }
            }
        }
        _ => {}
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn render_text(doc: &Value) -> String {
    let mut s = String::new();
    let result = &doc["result"];
    if doc["command"] == "verify" {
        for c in result["checks"].as_array().into_iter().flatten() {
            s.push_str(&format!(
                "{:<4} {}  [{}]  {} | {}\n",
                match c["status"].as_str() {
                    Some("pass") => "ok",
                    Some("fail") => "FAIL",
                    _ => "skip",
                },
                c["id"].as_str().unwrap_or(""),
                c["anchor"].as_str().unwrap_or(""),
                c["lhs"].as_str().unwrap_or(""),
                c["rhs"].as_str().unwrap_or(""),
            ));
        }
        s.push_str(&format!(
            "{}: {} passed, {} failed, {} skipped\n",
            result["suite"].as_str().unwrap_or(""),
            result["passed"],
            result["failed"],
            result["skipped"]
        ));
    } else {
        flatten_text(result, "", &mut s);
    }
    if let Some(Value::Object(a)) = doc.get("approx") {
        s.push_str(&format!("approximations at q = {} (display only):\n", a["q"]));
        for (k, v) in a["values"].as_object().into_iter().flatten() {
            s.push_str(&format!("  {k} ≈ {}\n", v.as_str().unwrap_or("?")));
        }
    }
    s
}

fn flatten_text(v: &Value, path: &str, out: &mut String) {
    match v {
        Value::Object(m) if m.contains_key("wire") && m.contains_key("expr") => {
            out.push_str(&format!("{path}: {}\n", m["expr"].as_str().unwrap_or("")));
        }
        Value::Object(m) => {
            for (k, x) in m {
                flatten_text(x, &join(path, k), out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten_text(x, &join(path, &i.to_string()), out);
            }
        }
        Value::String(s) => out.push_str(&format!("{path}: {s}\n")),
        other => out.push_str(&format!("{path}: {other}\n")),
    }
}

fn document(o: &Outcome) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "version": artifact_version(),
        "command": o.request["command"],
        "request": o.request,
        "provenance": o.provenance,
        "result": o.result,
        "ok": o.ok,
    })
}

fn run_cache(action: &CacheAction, cache: Option<Cache>) -> Result<Value> {
    let Some(cache) = cache else {
        return invalid("no cache configured; pass --cache PATH or set `cache` in the config file");
    };
    Ok(match action {
        CacheAction::Stats => serde_json::to_value(cache.stats()?).expect("json"),
        CacheAction::Get { key } => match cache.get(key)? {
            Some(v) => v,
            None => return invalid(format!("no current-version entry for key {key}")),
        },
        CacheAction::List => Value::Array(
            cache
                .entries()?
                .into_iter()
                .map(|e| json!({"key": e.key, "version": e.version, "request": e.request}))
                .collect(),
        ),
    })
}

fn execute(cli: &Cli) -> Result<(Value, bool)> {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(p) = &cli.cache {
        config.cache = Some(p.clone());
    }
    if let Some(j) = cli.jobs {
        config.jobs = Some(j);
    }
    if let Some(j) = config.jobs {
        if j == 0 {
            return invalid("--jobs must be at least 1");
        }
        // Fails only if the pool was already built, e.g. by an earlier call in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let cache = config.cache.clone().map(Cache::new);
    if let Command::Cache { action } = &cli.command {
        let v = run_cache(action, cache)?;
        return Ok((
            json!({"schema": SCHEMA_VERSION, "version": artifact_version(), "command": "cache", "result": v}),
            true,
        ));
    }
    let ctx = Ctx { config };
    let (mut request, job) = plan(&cli.command, &ctx)?;
    if let Some(k) = cli.decimal {
        request["decimal"] = json!(k);
    }
    let key = digest(&request);
    if let Some(c) = &cache {
        if let Some(hit) = c.get(&key)? {
            log::info!("cache hit {key}");
            let ok = hit["ok"].as_bool().unwrap_or(true);
            return Ok((hit, ok));
        }
    }
    let outcome = job()?;
    let mut doc = document(&outcome);
    doc["request"] = request.clone();
    if let Some(k) = cli.decimal {
        let q = outcome.q.unwrap_or(ctx.config.default_q as i64);
        let mut values = Map::new();
        approximations(&outcome.result, "", q, k, &mut values);
        doc["approx"] = json!({"note": "decimal display only; the exact strings are authoritative", "q": q, "digits": k, "values": values});
    }
    if let (Some(c), true) = (&cache, outcome.cacheable) {
        c.put(&key, &request, &doc)?;
    }
    Ok((doc, outcome.ok))
}

/// Parses `args`, runs the command and writes to `out`/`err`. Returns the
/// process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok((doc, ok)) => {
            let text = if cli.json {
                let mut s = serde_json::to_string(&doc).expect("json");
                s.push('\n');
                s
            } else if doc["command"] == "cache" {
                let mut s = serde_json::to_string_pretty(&doc["result"]).expect("json");
                s.push('\n');
                s
            } else {
                render_text(&doc)
            };
            let _ = out.write_all(text.as_bytes());
            if ok {
                0
            } else {
                let _ = writeln!(err, "error: a consistency check failed");
                1
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            if cli.json {
                let doc =
                    json!({"schema": SCHEMA_VERSION, "error": {"kind": error_kind(&e), "message": e.to_string()}});
                let _ = writeln!(out, "{}", serde_json::to_string(&doc).expect("json"));
            }
            let _ = writeln!(err, "error: {e}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["hermdens"];
        full.extend_from_slice(args);
        let code = main_with(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(decimal(&crate::symb::rat(16, 243), 6), "0.065844");
        assert_eq!(decimal(&crate::symb::rat(-1, 3), 3), "-0.333");
        assert_eq!(decimal(&crate::symb::rat(5, 2), 0), "3");
        assert_eq!(decimal(&crate::symb::rat(1, 200), 1), "0.0");
    }

    #[test]
    fn wdens_json() {
        let (code, out) = run(&["--json", "wdens", "--h", "1", "--t", "1", "--B", "diag:0,-1"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        let w = SignedRational::from_json(&v["result"]["value"]["wire"]).unwrap();
        assert_eq!(w.eval(3).unwrap(), crate::symb::rat(16, 243));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            run(&["wdens", "--n", "2", "--h", "1", "--t", "1", "--B", "diag:0,-1"]).0,
            2
        );
        assert_eq!(run(&["verify", "--suite", "nope"]).0, 2);
        assert_eq!(
            run(&["alpha", "--xi", "0,0", "--lam", "0,0", "--brute", "--q", "7", "--d", "4"]).0,
            3
        );
        assert_eq!(run(&["tree", "--mx", "1", "--my", "0", "--d", "1"]).0, 0);
    }
}
