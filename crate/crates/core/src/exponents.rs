//! Exact-rational calculator for the admissibility inequalities on
//! integrability exponents and anisotropic Sobolev indices.
//!
//! The conditions involve boundary equalities (`p >= ...`), so all
//! comparisons are carried out on exact rationals: inputs are parsed as
//! decimal rationals and never rounded. Every report echoes the evaluated
//! left/right-hand side of each inequality so a verdict can be re-derived
//! by hand.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExponentError {
    #[error("exponent {name} = {value} must be greater than 1")]
    ExponentTooSmall { name: String, value: String },
    #[error("{name} = {value} is out of range: {why}")]
    OutOfRange {
        name: String,
        value: String,
        why: String,
    },
    #[error("multiplication needs at least one factor")]
    NoFactors,
    #[error("embedding validity violated: 2 - (d+2)/p = {lhs} < -(d+2)/q = {rhs}")]
    EmbeddingInvalid { lhs: String, rhs: String },
    #[error("cannot parse `{input}` as a rational number: {why}")]
    Parse { input: String, why: String },
}

/// Parses a decimal (`2.5`), integer (`3`) or fraction (`5/2`) into an
/// exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational, ExponentError> {
    let s = input.trim();
    let err = |why: &str| ExponentError::Parse {
        input: input.to_string(),
        why: why.to_string(),
    };
    if s.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|e| err(&e.to_string()))?;
        let d = BigInt::from_str(den.trim()).map_err(|e| err(&e.to_string()))?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    let digits = format!(
        "{}{}",
        if int_part.is_empty() { "0" } else { int_part },
        frac_part
    );
    let n = BigInt::from_str(&digits).map_err(|e| err(&e.to_string()))?;
    let d = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(BigInt::from(sign) * n, d))
}

pub fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn positive_part(x: &BigRational) -> BigRational {
    if x.is_positive() {
        x.clone()
    } else {
        BigRational::zero()
    }
}

/// Renders a rational as `num/den` with a decimal approximation.
pub fn show(r: &BigRational) -> String {
    let approx = rational_to_f64(r);
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{} (~{:.6})", r.numer(), r.denom(), approx)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let n = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let d = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    n / d
}

/// Query for the admissibility predicates: spatial dimension, integrability
/// exponent, and the polynomial degrees of the sorption rate in the bulk
/// trace (`k_omega`) and surface (`k_sigma`) variables.
#[derive(Debug, Clone)]
pub struct ExponentQuery {
    pub d: u32,
    pub p: BigRational,
    pub k_omega: u32,
    pub k_sigma: u32,
    pub gamma_omega: Option<BigRational>,
    pub gamma_sigma: Option<BigRational>,
    pub mu_omega: Option<BigRational>,
    pub mu_sigma: Option<BigRational>,
}

impl ExponentQuery {
    /// Boundary queries with `p = 1` are accepted: the growth-assumption
    /// predicate is meaningful (and quoted) at `p` exactly on the boundary.
    pub fn new(d: u32, p: BigRational, k_omega: u32, k_sigma: u32) -> Result<Self, ExponentError> {
        if d < 1 {
            return Err(ExponentError::OutOfRange {
                name: "d".into(),
                value: d.to_string(),
                why: "spatial dimension must be at least 1".into(),
            });
        }
        if k_omega < 1 || k_sigma < 1 {
            return Err(ExponentError::OutOfRange {
                name: "K".into(),
                value: format!("({k_omega}, {k_sigma})"),
                why: "polynomial degrees must be at least 1".into(),
            });
        }
        if p < rat(1) {
            return Err(ExponentError::OutOfRange {
                name: "p".into(),
                value: show(&p),
                why: "integrability exponent must be at least 1".into(),
            });
        }
        Ok(Self {
            d,
            p,
            k_omega,
            k_sigma,
            gamma_omega: None,
            gamma_sigma: None,
            mu_omega: None,
            mu_sigma: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Gt,
    Le,
    Lt,
}

impl Relation {
    fn symbol(&self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }

    fn eval(&self, lhs: &BigRational, rhs: &BigRational) -> bool {
        match self {
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
        }
    }
}

/// One evaluated inequality with its exact sides.
#[derive(Debug, Clone)]
pub struct RuleCheck {
    pub clause: String,
    pub name: String,
    pub lhs: BigRational,
    pub relation: Relation,
    pub rhs: BigRational,
    pub holds: bool,
}

fn check(clause: &str, name: &str, lhs: BigRational, rel: Relation, rhs: BigRational) -> RuleCheck {
    let holds = rel.eval(&lhs, &rhs);
    RuleCheck {
        clause: clause.to_string(),
        name: name.to_string(),
        lhs,
        relation: rel,
        rhs,
        holds,
    }
}

/// Report of one admissibility predicate: the individual inequalities and
/// the overall verdict combined exactly as the predicate prescribes.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub title: String,
    pub rules: Vec<RuleCheck>,
    pub admissible: bool,
}

impl AdmissibilityReport {
    /// Machine-readable `key=value` lines.
    pub fn key_value_lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "predicate={} admissible={}",
            self.title, self.admissible
        )];
        for r in &self.rules {
            out.push(format!(
                "predicate={} clause={} rule=\"{}\" lhs={} rel={} rhs={} holds={}",
                self.title,
                r.clause,
                r.name,
                r.lhs,
                r.relation.symbol(),
                r.rhs,
                r.holds
            ));
        }
        out
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {}",
            self.title,
            if self.admissible {
                "admissible"
            } else {
                "not admissible"
            }
        )?;
        for r in &self.rules {
            writeln!(
                f,
                "  [{}] {:40} {} {} {}   {}",
                r.clause,
                r.name,
                show(&r.lhs),
                r.relation.symbol(),
                show(&r.rhs),
                if r.holds { "ok" } else { "VIOLATED" }
            )?;
        }
        Ok(())
    }
}

fn require_gt_one(name: &str, p: &BigRational) -> Result<(), ExponentError> {
    if *p <= rat(1) {
        return Err(ExponentError::ExponentTooSmall {
            name: name.to_string(),
            value: show(p),
        });
    }
    Ok(())
}

/// Anisotropic Sobolev index `2s - (d+2)/p` of a space with time regularity
/// `s` and spatial regularity `2s`.
pub fn anisotropic_index(
    s: &BigRational,
    p: &BigRational,
    d: u32,
) -> Result<BigRational, ExponentError> {
    require_gt_one("p", p)?;
    Ok(rat(2) * s - rat(d as i64 + 2) / p)
}

/// Decides whether pointwise multiplication maps the factor spaces
/// `W^(s_j, p_j)` into the target `W^(s, p)`: the regularity constraint
/// `s <= min s_j`, the integrability constraint `1/p >= sum 1/p_j`, and the
/// index constraint on the anisotropic Sobolev indices (strict when some
/// factor has index exactly zero).
pub fn multiplication_admissible(
    s: &BigRational,
    p: &BigRational,
    factors: &[(BigRational, BigRational)],
    d: u32,
) -> Result<AdmissibilityReport, ExponentError> {
    if factors.is_empty() {
        return Err(ExponentError::NoFactors);
    }
    require_gt_one("p", p)?;
    for (j, (_, pj)) in factors.iter().enumerate() {
        require_gt_one(&format!("p_{j}"), pj)?;
    }

    let mut rules = Vec::new();

    let min_s = factors.iter().map(|(sj, _)| sj.clone()).min().unwrap();
    rules.push(check("regularity", "s <= min s_j", s.clone(), Relation::Le, min_s));

    let sum_inv: BigRational = factors
        .iter()
        .map(|(_, pj)| BigRational::one() / pj)
        .sum();
    rules.push(check(
        "integrability",
        "1/p >= sum 1/p_j",
        BigRational::one() / p,
        Relation::Ge,
        sum_inv,
    ));

    let ind = anisotropic_index(s, p, d)?;
    let inds: Vec<BigRational> = factors
        .iter()
        .map(|(sj, pj)| anisotropic_index(sj, pj, d))
        .collect::<Result<_, _>>()?;
    let any_zero = inds.iter().any(|i| i.is_zero());
    let all_nonneg = inds.iter().all(|i| !i.is_negative());
    let bound = if all_nonneg {
        inds.iter().cloned().min().unwrap()
    } else {
        inds.iter().filter(|i| i.is_negative()).cloned().sum()
    };
    let rel = if any_zero { Relation::Lt } else { Relation::Le };
    let name = if all_nonneg {
        "ind <= min ind_j (strict if some ind_j = 0)"
    } else {
        "ind <= sum of negative ind_j (strict if some ind_j = 0)"
    };
    rules.push(check("index", name, ind, rel, bound));

    let admissible = rules.iter().all(|r| r.holds);
    Ok(AdmissibilityReport {
        title: "multiplication".to_string(),
        rules,
        admissible,
    })
}

/// Degenerate ratio `(k-1)^+/(2k-1)^+`: a zero numerator forces the value 0
/// before the denominator is consulted.
fn degenerate_ratio(k: u32) -> BigRational {
    if k <= 1 {
        BigRational::zero()
    } else {
        ratio(k as i64 - 1, 2 * k as i64 - 1)
    }
}

/// Trace-space product admissibility for a sorption rate of degrees
/// `(k_omega, k_sigma)`: the disjunction of three sufficient exponent sets
/// under which the rate acts as a continuous Nemytskii operator on the
/// Neumann trace space.
pub fn sorption_trace_admissible(q: &ExponentQuery) -> AdmissibilityReport {
    let d = q.d as i64;
    let p = &q.p;
    let (ko, ks) = (q.k_omega as i64, q.k_sigma as i64);
    let mut rules = Vec::new();

    // bullet 1: p > d
    rules.push(check("bullet1", "p > d", p.clone(), Relation::Gt, rat(d)));
    let b1 = rules.last().unwrap().holds;

    // shared first inequality of bullets 2 and 3
    let shared = rat(d) - ratio(d + 1 - ko, ko + ks);

    // bullet 2
    let r2a = check(
        "bullet2",
        "p >= d - (d+1-K_omega)/(K_omega+K_sigma)",
        p.clone(),
        Relation::Ge,
        shared.clone(),
    );
    let r2b = check("bullet2", "p >= (d+2)/2", p.clone(), Relation::Ge, ratio(d + 2, 2));
    let r2c = check(
        "bullet2",
        "p >= (K_omega-1)/(2K_omega-1) * (d+2)",
        p.clone(),
        Relation::Ge,
        degenerate_ratio(q.k_omega) * rat(d + 2),
    );
    let b2 = r2a.holds && r2b.holds && r2c.holds;
    rules.extend([r2a, r2b, r2c]);

    // bullet 3
    let r3a = check(
        "bullet3",
        "p >= d - (d+1-K_omega)/(K_omega+K_sigma)",
        p.clone(),
        Relation::Ge,
        shared,
    );
    let r3b = check(
        "bullet3",
        "p >= ((K_omega+K_sigma-1)(d+2) - K_sigma)/(2(K_omega+K_sigma)-1)",
        p.clone(),
        Relation::Ge,
        ratio((ko + ks - 1) * (d + 2) - ks, 2 * (ko + ks) - 1),
    );
    let b3 = r3a.holds && r3b.holds;
    rules.extend([r3a, r3b]);

    AdmissibilityReport {
        title: "sorption_trace".to_string(),
        rules,
        admissible: b1 || b2 || b3,
    }
}

/// Growth-assumption admissibility for a sorption rate of degrees
/// `(k_omega, k_sigma)`: the conjunction of the two displayed exponent
/// inequalities of the standing regularity-and-growth assumption.
pub fn sorption_growth_admissible(q: &ExponentQuery) -> AdmissibilityReport {
    let d = q.d as i64;
    let p = &q.p;
    let (ko, ks) = (q.k_omega as i64, q.k_sigma as i64);

    // d+1 >= K_omega (d+1-p)^+ + K_sigma (d-p)^+
    let lhs1 = rat(d + 1);
    let rhs1 = rat(ko) * positive_part(&(rat(d + 1) - p)) + rat(ks) * positive_part(&(rat(d) - p));
    let r1 = check(
        "growth",
        "d+1 >= K_omega (d+1-p)^+ + K_sigma (d-p)^+",
        lhs1,
        Relation::Ge,
        rhs1,
    );

    // p >= min{ max{(d+1)/2, ratio (d+2)}, ((K_omega+K_sigma-1)(d+1) - 1)/(2(K_omega+K_sigma)-1) }
    let first = std::cmp::max(ratio(d + 1, 2), degenerate_ratio(q.k_omega) * rat(d + 2));
    let second = ratio((ko + ks - 1) * (d + 1) - 1, 2 * (ko + ks) - 1);
    let r2 = check(
        "growth",
        "p >= min{max{(d+1)/2, (K_omega-1)^+/(2K_omega-1)^+ (d+2)}, ((K_omega+K_sigma-1)(d+1)-1)/(2(K_omega+K_sigma)-1)}",
        p.clone(),
        Relation::Ge,
        std::cmp::min(first, second),
    );

    let admissible = r1.holds && r2.holds;
    AdmissibilityReport {
        title: "sorption_growth".to_string(),
        rules: vec![r1, r2],
        admissible,
    }
}

/// Exponent admissibility for local-in-time well-posedness: the hard gate
/// `p >= (d+2)/2` conjoined with a disjunction of three sufficient bullets.
/// When the query carries reaction growth exponents, the corresponding
/// hypotheses are conjoined as well: `gamma` is unconstrained for `p` above
/// half the parabolic dimension and bounded by `(1 - 2p/(d+2))^-1` (bulk)
/// resp. `(1 - 2p/(d+1))^-1` (surface) below it.
pub fn local_wellposedness_admissible(q: &ExponentQuery) -> AdmissibilityReport {
    let d = q.d as i64;
    let p = &q.p;
    let (ko, ks) = (q.k_omega as i64, q.k_sigma as i64);
    let mut rules = Vec::new();

    let gate = check("gate", "p >= (d+2)/2", p.clone(), Relation::Ge, ratio(d + 2, 2));
    let mut gate_holds = gate.holds;
    rules.push(gate);

    for (label, gamma, dim) in [
        ("gamma_omega", &q.gamma_omega, d + 2),
        ("gamma_sigma", &q.gamma_sigma, d + 1),
    ] {
        if let Some(gamma) = gamma {
            if *p >= ratio(dim, 2) {
                // any polynomial degree is admissible at this p
                continue;
            }
            let bound = rat(dim) / (rat(dim) - rat(2) * p);
            let rule = check(
                label,
                "gamma <= (1 - 2p/dim)^-1 below the half-dimension gate",
                gamma.clone(),
                Relation::Le,
                bound,
            );
            gate_holds = gate_holds && rule.holds;
            rules.push(rule);
        }
    }

    rules.push(check("bullet1", "p > d", p.clone(), Relation::Gt, rat(d)));
    let b1 = rules.last().unwrap().holds;

    let shared = rat(d) - ratio(d + 1 - ko, ko + ks);

    let r2a = check(
        "bullet2",
        "p >= d - (d+1-K_omega)/(K_omega+K_sigma)",
        p.clone(),
        Relation::Ge,
        shared.clone(),
    );
    let r2b = check("bullet2", "p >= (d+2)/2", p.clone(), Relation::Ge, ratio(d + 2, 2));
    let r2c = check(
        "bullet2",
        "p >= (K_omega-1)/(2K_omega-1) * (d+2)",
        p.clone(),
        Relation::Ge,
        degenerate_ratio(q.k_omega) * rat(d + 2),
    );
    let b2 = r2a.holds && r2b.holds && r2c.holds;
    rules.extend([r2a, r2b, r2c]);

    let r3a = check(
        "bullet3",
        "p >= d - (d+1-K_omega)/(K_omega+K_sigma)",
        p.clone(),
        Relation::Ge,
        shared,
    );
    let r3b = check(
        "bullet3",
        "p >= (d+2)/2 - (d+3)/(4(K_omega+K_sigma)-2)",
        p.clone(),
        Relation::Ge,
        ratio(d + 2, 2) - ratio(d + 3, 4 * (ko + ks) - 2),
    );
    let b3 = r3a.holds && r3b.holds;
    rules.extend([r3a, r3b]);

    AdmissibilityReport {
        title: "local_wellposedness".to_string(),
        rules,
        admissible: gate_holds && (b1 || b2 || b3),
    }
}

/// Exponent of the time horizon in the zero-trace anisotropic embedding
/// `||u||_Lq <= C tau^e ||u||`, `e = 1/q - 1/p + 2/(d+2)`, valid when
/// `2 - (d+2)/p >= -(d+2)/q`.
pub fn embedding_exponent(
    p: &BigRational,
    q: &BigRational,
    d: u32,
) -> Result<BigRational, ExponentError> {
    require_gt_one("p", p)?;
    require_gt_one("q", q)?;
    let dp2 = rat(d as i64 + 2);
    let lhs = rat(2) - &dp2 / p;
    let rhs = -&dp2 / q;
    if lhs < rhs {
        return Err(ExponentError::EmbeddingInvalid {
            lhs: show(&lhs),
            rhs: show(&rhs),
        });
    }
    Ok(BigRational::one() / q - BigRational::one() / p + rat(2) / dp2)
}
