//! The tiered-slope market associated with a marriage instance, in exact
//! rational arithmetic.
//!
//! A man `i` matched to woman `j` at utilities `(u_i, v_j)` needs compensation
//! `f = u_i λ^{-a_ij}` and she needs `g = v_j - (b_ij N + π_i)`; the reserves
//! are `r_i = π_i λ^{a_i0}` and `s_j = b_0j N`.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::mechanism::{Matching, PriorityAssignment};
use crate::model::{rank_utilities, AgentId, Instance, RankUtilities};
use crate::verifier::all_matchings;

/// Largest number of men, and of women, the oracle accepts.
pub const ORACLE_LIMIT: usize = 3;

/// An arbitrary-precision rational in lowest terms, written `"num/den"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(pub BigRational);

impl ExactRational {
    pub fn integer(n: impl Into<BigInt>) -> Self {
        ExactRational(BigRational::from_integer(n.into()))
    }

    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        ExactRational(BigRational::new(num.into(), den.into()))
    }

    pub fn zero() -> Self {
        ExactRational(BigRational::zero())
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("not a rational: `{0}`")]
pub struct ParseRationalError(String);

impl FromStr for ExactRational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseRationalError(s.to_string());
        let (num, den) = s.split_once('/').unwrap_or((s, "1"));
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Ok(ExactRational(BigRational::new(num, den)))
    }
}

impl Serialize for ExactRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_op {
    ($tr:ident, $m:ident) => {
        impl $tr for ExactRational {
            type Output = ExactRational;
            fn $m(self, rhs: ExactRational) -> ExactRational {
                ExactRational(self.0.$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $m(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational((&self.0).$m(&rhs.0))
            }
        }
    };
}
forward_op!(Add, add);
forward_op!(Sub, sub);
forward_op!(Mul, mul);

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

impl From<i64> for ExactRational {
    fn from(n: i64) -> Self {
        ExactRational::integer(n)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarketError {
    #[error("λ = {given} is below the minimum {minimum}")]
    LambdaTooSmall { given: BigInt, minimum: BigInt },
    #[error("the oracle handles at most {limit} men and {limit} women, got {men} and {women}")]
    SizeLimit { men: usize, women: usize, limit: usize },
    #[error("outcome is not individually rational")]
    NotIR,
    #[error("outcome is not stable")]
    NotStable,
    #[error("the componentwise maximum stable payoff is not attained by any stable outcome")]
    NotAttained,
    #[error("outcome does not fit the market: {0}")]
    Shape(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieredSlopeMarket {
    pi: Vec<u64>,
    n: i64,
    lambda: BigInt,
    util: RankUtilities,
    r: Vec<BigRational>,
    s: Vec<BigRational>,
}

/// `N = |I| + 1` and `λ = max (b_ij + 1) N` over `(I ∪ {0}) × J` (`λ = N`
/// without women).
pub fn build_market(inst: &Instance, pr: &PriorityAssignment) -> TieredSlopeMarket {
    let util = rank_utilities(inst);
    let n = inst.num_men() as i64 + 1;
    let lambda = BigInt::from(minimum_lambda(&util, inst.num_men(), inst.num_women(), n));
    TieredSlopeMarket::assemble(pr.as_slice().to_vec(), n, lambda, util, inst.num_men(), inst.num_women())
}

fn minimum_lambda(util: &RankUtilities, men: usize, women: usize, n: i64) -> i64 {
    let mut best = n;
    for j in 0..women {
        for i in (0..men).map(Some).chain([None]) {
            best = best.max((util.b(i, j) + 1) * n);
        }
    }
    best
}

impl TieredSlopeMarket {
    fn assemble(pi: Vec<u64>, n: i64, lambda: BigInt, util: RankUtilities, men: usize, women: usize) -> Self {
        let lam = BigRational::from_integer(lambda.clone());
        let r = (0..men)
            .map(|i| BigRational::from_integer(BigInt::from(pi[i])) * pow(&lam, util.a(i, None)))
            .collect();
        let s = (0..women).map(|j| BigRational::from_integer(BigInt::from(util.b(None, j) * n))).collect();
        TieredSlopeMarket { pi, n, lambda, util, r, s }
    }

    /// The same market with a larger base `λ`.
    pub fn with_lambda(self, lambda: BigInt) -> Result<Self, MarketError> {
        let (men, women) = (self.num_men(), self.num_women());
        let minimum = BigInt::from(minimum_lambda(&self.util, men, women, self.n));
        if lambda < minimum {
            return Err(MarketError::LambdaTooSmall { given: lambda, minimum });
        }
        Ok(Self::assemble(self.pi, self.n, lambda, self.util, men, women))
    }

    pub fn num_men(&self) -> usize {
        self.pi.len()
    }

    pub fn num_women(&self) -> usize {
        self.s.len()
    }

    pub fn pi(&self, i: usize) -> u64 {
        self.pi[i]
    }

    /// The constant `N`.
    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn lambda(&self) -> &BigInt {
        &self.lambda
    }

    pub fn a(&self, i: usize, j: Option<usize>) -> i64 {
        self.util.a(i, j)
    }

    pub fn b(&self, i: Option<usize>, j: usize) -> i64 {
        self.util.b(i, j)
    }

    pub fn r(&self, i: usize) -> ExactRational {
        ExactRational(self.r[i].clone())
    }

    pub fn s(&self, j: usize) -> ExactRational {
        ExactRational(self.s[j].clone())
    }

    /// `λ^e` for any integer `e`.
    pub fn lambda_pow(&self, e: i64) -> ExactRational {
        ExactRational(pow(&BigRational::from_integer(self.lambda.clone()), e))
    }

    /// `b_ij N + π_i`.
    fn value(&self, i: usize, j: usize) -> BigRational {
        BigRational::from_integer(BigInt::from(self.b(Some(i), j) * self.n + self.pi[i] as i64))
    }

    fn lam(&self) -> BigRational {
        BigRational::from_integer(self.lambda.clone())
    }

    /// `f + g` for the pair `(i, j)`.
    fn surplus(&self, i: usize, j: usize, u: &BigRational, v: &BigRational) -> BigRational {
        u * pow(&self.lam(), -self.a(i, Some(j))) + v - self.value(i, j)
    }
}

fn pow(base: &BigRational, e: i64) -> BigRational {
    let p = num_traits::pow(base.clone(), e.unsigned_abs() as usize);
    if e < 0 {
        p.recip()
    } else {
        p
    }
}

/// The two compensation values `(f_ij(u), g_ij(v))`.
pub fn compensation(
    m: &TieredSlopeMarket,
    i: usize,
    j: usize,
    u: &ExactRational,
    v: &ExactRational,
) -> (ExactRational, ExactRational) {
    let f = &u.0 * pow(&m.lam(), -m.a(i, Some(j)));
    let g = &v.0 - m.value(i, j);
    (ExactRational(f), ExactRational(g))
}

/// A matching together with utilities for every agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub matching: Matching,
    pub u: Vec<ExactRational>,
    pub v: Vec<ExactRational>,
}

impl Outcome {
    /// Every agent unmatched at its reserve utility.
    pub fn at_reserves(m: &TieredSlopeMarket) -> Self {
        Outcome {
            matching: Matching::empty(m.num_men(), m.num_women()),
            u: (0..m.num_men()).map(|i| m.r(i)).collect(),
            v: (0..m.num_women()).map(|j| m.s(j)).collect(),
        }
    }

    /// `{"matching": {...}, "u": {"<man>": "num/den"}, "v": {"<woman>": "num/den"}}`
    pub fn to_document(&self, inst: &Instance) -> Value {
        let mut doc = Map::new();
        doc.insert("matching".into(), self.matching.to_value(inst));
        let side = |labels: &[String], xs: &[ExactRational]| -> Value {
            Value::Object(labels.iter().zip(xs).map(|(l, x)| (l.clone(), Value::String(x.to_string()))).collect())
        };
        doc.insert("u".into(), side(inst.man_labels(), &self.u));
        doc.insert("v".into(), side(inst.woman_labels(), &self.v));
        Value::Object(doc)
    }

    pub fn from_document(inst: &Instance, doc: &Value) -> Result<Self, MarketError> {
        let bad = |what: &str| MarketError::Shape(what.to_string());
        let matching = Matching::from_document(inst, doc.get("matching").ok_or_else(|| bad("missing `matching`"))?)
            .map_err(|e| MarketError::Shape(e.to_string()))?;
        let side = |key: &str, labels: &[String]| -> Result<Vec<ExactRational>, MarketError> {
            let obj = doc.get(key).and_then(Value::as_object).ok_or_else(|| bad(&format!("missing `{key}`")))?;
            labels
                .iter()
                .map(|l| {
                    obj.get(l)
                        .and_then(Value::as_str)
                        .ok_or_else(|| bad(&format!("missing `{key}` entry for `{l}`")))?
                        .parse()
                        .map_err(|e: ParseRationalError| MarketError::Shape(e.to_string()))
                })
                .collect()
        };
        Ok(Outcome { matching, u: side("u", inst.man_labels())?, v: side("v", inst.woman_labels())? })
    }

    fn check_shape(&self, m: &TieredSlopeMarket) -> Result<(), MarketError> {
        if self.u.len() != m.num_men()
            || self.v.len() != m.num_women()
            || self.matching.num_men() != m.num_men()
            || self.matching.num_women() != m.num_women()
        {
            return Err(MarketError::Shape("agent counts differ".into()));
        }
        Ok(())
    }
}

/// The first condition an outcome fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarketWitness {
    /// `f + g ≤ 0` fails for a matched pair.
    OverPaid { man: usize, woman: usize, surplus: ExactRational },
    UnmatchedManOffReserve { man: usize },
    UnmatchedWomanOffReserve { woman: usize },
    ManBelowReserve { man: usize },
    WomanBelowReserve { woman: usize },
    /// `f + g ≥ 0` fails for some pair.
    Blocking { man: usize, woman: usize, surplus: ExactRational },
}

impl fmt::Display for MarketWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarketWitness::OverPaid { man, woman, surplus } => {
                write!(f, "man {man}, woman {woman}: f + g = {surplus}, f + g <= 0 required")
            }
            MarketWitness::UnmatchedManOffReserve { man } => write!(f, "man {man}: u_i = r_i required"),
            MarketWitness::UnmatchedWomanOffReserve { woman } => write!(f, "woman {woman}: v_j = s_j required"),
            MarketWitness::ManBelowReserve { man } => write!(f, "man {man}: u_i >= r_i required"),
            MarketWitness::WomanBelowReserve { woman } => write!(f, "woman {woman}: v_j >= s_j required"),
            MarketWitness::Blocking { man, woman, surplus } => {
                write!(f, "man {man}, woman {woman}: f + g = {surplus}, f + g >= 0 required")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub feasible: bool,
    pub individually_rational: bool,
    pub stable: bool,
    pub witness: Option<MarketWitness>,
}

pub fn classify_outcome(m: &TieredSlopeMarket, o: &Outcome) -> Result<Classification, MarketError> {
    o.check_shape(m)?;
    let mu = &o.matching;
    let fail = |level: u8, w: MarketWitness| Classification {
        feasible: level > 0,
        individually_rational: level > 1,
        stable: false,
        witness: Some(w),
    };
    for (i, j) in mu.pairs() {
        let surplus = m.surplus(i, j, &o.u[i].0, &o.v[j].0);
        if surplus.is_positive() {
            return Ok(fail(0, MarketWitness::OverPaid { man: i, woman: j, surplus: ExactRational(surplus) }));
        }
    }
    for i in 0..m.num_men() {
        if mu.man(i).is_none() && o.u[i].0 != m.r[i] {
            return Ok(fail(0, MarketWitness::UnmatchedManOffReserve { man: i }));
        }
    }
    for j in 0..m.num_women() {
        if mu.woman(j).is_none() && o.v[j].0 != m.s[j] {
            return Ok(fail(0, MarketWitness::UnmatchedWomanOffReserve { woman: j }));
        }
    }
    for i in 0..m.num_men() {
        if o.u[i].0 < m.r[i] {
            return Ok(fail(1, MarketWitness::ManBelowReserve { man: i }));
        }
    }
    for j in 0..m.num_women() {
        if o.v[j].0 < m.s[j] {
            return Ok(fail(1, MarketWitness::WomanBelowReserve { woman: j }));
        }
    }
    for i in 0..m.num_men() {
        for j in 0..m.num_women() {
            let surplus = m.surplus(i, j, &o.u[i].0, &o.v[j].0);
            if surplus.is_negative() {
                return Ok(fail(2, MarketWitness::Blocking { man: i, woman: j, surplus: ExactRational(surplus) }));
            }
        }
    }
    Ok(Classification { feasible: true, individually_rational: true, stable: true, witness: None })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundViolation {
    pub agent: AgentId,
    pub bound: String,
}

/// Checks `λ^{a_i0} ≤ u_i < λ^{a_iμ(i)+1}` for men (and `λ^{a_iμ(i)} ≤ u_i`
/// when `man_optimal`) and `b_0j N ≤ v_j < (b_μ(j)j + 1) N` for women.
pub fn utility_bounds_check(
    m: &TieredSlopeMarket,
    o: &Outcome,
    man_optimal: bool,
) -> Result<Vec<BoundViolation>, MarketError> {
    if !classify_outcome(m, o)?.individually_rational {
        return Err(MarketError::NotIR);
    }
    let lam = m.lam();
    let mut out = Vec::new();
    for i in 0..m.num_men() {
        let u = &o.u[i].0;
        let top = m.a(i, o.matching.man(i));
        if *u < pow(&lam, m.a(i, None)) {
            out.push(BoundViolation { agent: AgentId::man(i), bound: "λ^{a_i0} <= u_i".into() });
        }
        if *u >= pow(&lam, top + 1) {
            out.push(BoundViolation { agent: AgentId::man(i), bound: "u_i < λ^{a_iμ(i) + 1}".into() });
        }
        if man_optimal && *u < pow(&lam, top) {
            out.push(BoundViolation { agent: AgentId::man(i), bound: "λ^{a_iμ(i)} <= u_i".into() });
        }
    }
    for j in 0..m.num_women() {
        let v = &o.v[j].0;
        if *v < m.s[j] {
            out.push(BoundViolation { agent: AgentId::woman(j), bound: "b_0j N <= v_j".into() });
        }
        let cap = BigRational::from_integer(BigInt::from((m.b(o.matching.woman(j), j) + 1) * m.n));
        if *v >= cap {
            out.push(BoundViolation { agent: AgentId::woman(j), bound: "v_j < (b_μ(j)j + 1) N".into() });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Duality {
    pub lhs: ExactRational,
    pub rhs: ExactRational,
    pub tight: bool,
}

/// Both sides of `Σ_i (u_i λ^{-a_iμ'(i)} - π_i) ≥ Σ_j (b_μ'(j)j N - v_j)` for a
/// stable outcome `o` and any matching `mu2`.
pub fn duality_gap(m: &TieredSlopeMarket, o: &Outcome, mu2: &Matching) -> Result<Duality, MarketError> {
    if !classify_outcome(m, o)?.stable {
        return Err(MarketError::NotStable);
    }
    let lam = m.lam();
    let mut lhs = BigRational::zero();
    for i in 0..m.num_men() {
        lhs += &o.u[i].0 * pow(&lam, -m.a(i, mu2.man(i))) - BigRational::from_integer(BigInt::from(m.pi[i]));
    }
    let mut rhs = BigRational::zero();
    for j in 0..m.num_women() {
        rhs += BigRational::from_integer(BigInt::from(m.b(mu2.woman(j), j) * m.n)) - &o.v[j].0;
    }
    let tight = lhs == rhs;
    Ok(Duality { lhs: ExactRational(lhs), rhs: ExactRational(rhs), tight })
}

/// `coef · x + constant ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Constraint {
    coef: Vec<BigRational>,
    constant: BigRational,
}

impl Constraint {
    /// Scales so the first nonzero coefficient has magnitude one.
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.coef.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
            for c in &mut self.coef {
                *c = &*c / &lead;
            }
            self.constant = &self.constant / &lead;
        }
        self
    }
}

/// Affine function of the free variables.
#[derive(Clone, Debug)]
struct Affine {
    coef: Vec<BigRational>,
    constant: BigRational,
}

impl Affine {
    fn constant(k: usize, c: BigRational) -> Self {
        Affine { coef: vec![BigRational::zero(); k], constant: c }
    }

    fn var(k: usize, x: usize) -> Self {
        let mut a = Self::constant(k, BigRational::zero());
        a.coef[x] = BigRational::one();
        a
    }

    fn scale(&self, s: &BigRational) -> Self {
        Affine { coef: self.coef.iter().map(|c| c * s).collect(), constant: &self.constant * s }
    }

    fn plus(&self, other: &Affine) -> Self {
        Affine {
            coef: self.coef.iter().zip(&other.coef).map(|(a, b)| a + b).collect(),
            constant: &self.constant + &other.constant,
        }
    }

    fn at_least(&self, c: &BigRational) -> Constraint {
        Constraint { coef: self.coef.clone(), constant: &self.constant - c }.normalized()
    }
}

/// Eliminates variable `x` by pairing every lower bound with every upper bound.
fn eliminate(system: Vec<Constraint>, x: usize) -> Vec<Constraint> {
    let (mut pos, mut neg, mut out) = (Vec::new(), Vec::new(), HashSet::new());
    for c in system {
        if c.coef[x].is_positive() {
            pos.push(c);
        } else if c.coef[x].is_negative() {
            neg.push(c);
        } else {
            out.insert(c);
        }
    }
    for p in &pos {
        for q in &neg {
            let (sp, sq) = (-&q.coef[x], p.coef[x].clone());
            let coef = p.coef.iter().zip(&q.coef).map(|(a, b)| a * &sp + b * &sq).collect();
            let constant = &p.constant * &sp + &q.constant * &sq;
            out.insert(Constraint { coef, constant }.normalized());
        }
    }
    out.into_iter().collect()
}

fn is_trivially_false(c: &Constraint) -> bool {
    c.coef.iter().all(Zero::is_zero) && c.constant.is_negative()
}

/// The payoff constraints of stable outcomes with matching `mu`, in terms of
/// the utilities of matched women.
struct PayoffSystem {
    u: Vec<Affine>,
    constraints: Vec<Constraint>,
    /// Free variable of each matched woman.
    var_of: Vec<Option<usize>>,
}

fn payoff_system(m: &TieredSlopeMarket, mu: &Matching) -> PayoffSystem {
    let lam = m.lam();
    let mut var_of = vec![None; m.num_women()];
    let mut k = 0;
    for j in 0..m.num_women() {
        if mu.woman(j).is_some() {
            var_of[j] = Some(k);
            k += 1;
        }
    }
    let v: Vec<Affine> = (0..m.num_women())
        .map(|j| match var_of[j] {
            Some(x) => Affine::var(k, x),
            None => Affine::constant(k, m.s[j].clone()),
        })
        .collect();
    // Matched pairs hold with equality: u_i = λ^{a_ij} (b_ij N + π_i - v_j).
    let u: Vec<Affine> = (0..m.num_men())
        .map(|i| match mu.man(i) {
            Some(j) => Affine::constant(k, m.value(i, j))
                .plus(&v[j].scale(&-BigRational::one()))
                .scale(&pow(&lam, m.a(i, Some(j)))),
            None => Affine::constant(k, m.r[i].clone()),
        })
        .collect();
    let mut constraints = Vec::new();
    for i in 0..m.num_men() {
        constraints.push(u[i].at_least(&m.r[i]));
    }
    for j in 0..m.num_women() {
        constraints.push(v[j].at_least(&m.s[j]));
    }
    for i in 0..m.num_men() {
        for j in 0..m.num_women() {
            let lhs = u[i].scale(&pow(&lam, -m.a(i, Some(j)))).plus(&v[j]);
            constraints.push(lhs.at_least(&m.value(i, j)));
        }
    }
    PayoffSystem { u, constraints, var_of }
}

impl PayoffSystem {
    fn vars(&self) -> usize {
        self.var_of.iter().flatten().count()
    }

    fn feasible(&self) -> bool {
        let mut sys = self.constraints.clone();
        for x in 0..self.vars() {
            sys = eliminate(sys, x);
        }
        !sys.iter().any(is_trivially_false)
    }

    /// Smallest value of variable `x` over the (nonempty) feasible region.
    fn minimum(&self, x: usize) -> BigRational {
        let mut sys = self.constraints.clone();
        for y in 0..self.vars() {
            if y != x {
                sys = eliminate(sys, y);
            }
        }
        sys.iter()
            .filter(|c| c.coef[x].is_positive())
            .map(|c| -&c.constant / &c.coef[x])
            .max()
            .expect("individual rationality bounds every woman's utility from below")
    }
}

/// The componentwise largest man utilities over stable outcomes with
/// matching `mu`, or `None` when no stable outcome uses `mu`.
pub fn max_man_payoffs(m: &TieredSlopeMarket, mu: &Matching) -> Option<Vec<ExactRational>> {
    let sys = payoff_system(m, mu);
    if !sys.feasible() {
        return None;
    }
    let mut out = Vec::with_capacity(m.num_men());
    for i in 0..m.num_men() {
        let u = match mu.man(i) {
            Some(j) => {
                let x = sys.var_of[j].expect("matched woman has a variable");
                let vmin = sys.minimum(x);
                let a = &sys.u[i];
                &a.constant + &a.coef[x] * vmin
            }
            None => m.r[i].clone(),
        };
        out.push(ExactRational(u));
    }
    Some(out)
}

/// The stable outcome with matching `mu` and man utilities `u`, if any. The
/// women's utilities are then determined.
pub fn compatible_outcome(m: &TieredSlopeMarket, mu: &Matching, u: &[ExactRational]) -> Option<Outcome> {
    let lam = m.lam();
    let v: Vec<ExactRational> = (0..m.num_women())
        .map(|j| match mu.woman(j) {
            Some(i) => ExactRational(m.value(i, j) - &u[i].0 * pow(&lam, -m.a(i, Some(j)))),
            None => m.s(j),
        })
        .collect();
    let o = Outcome { matching: mu.clone(), u: u.to_vec(), v };
    let c = classify_outcome(m, &o).ok()?;
    c.stable.then_some(o)
}

/// The man-optimal stable outcome of a market with at most
/// [`ORACLE_LIMIT`] agents per side, found by enumerating matchings and
/// projecting each one's payoff polytope.
pub fn man_optimal_oracle(m: &TieredSlopeMarket) -> Result<Outcome, MarketError> {
    let (men, women) = (m.num_men(), m.num_women());
    if men > ORACLE_LIMIT || women > ORACLE_LIMIT {
        return Err(MarketError::SizeLimit { men, women, limit: ORACLE_LIMIT });
    }
    let matchings = all_matchings(men, women);
    let mut best: Option<Vec<ExactRational>> = None;
    for mu in &matchings {
        if let Some(u) = max_man_payoffs(m, mu) {
            best = Some(match best {
                None => u,
                Some(b) => b.into_iter().zip(u).map(|(x, y)| x.max(y)).collect(),
            });
        }
    }
    let best = best.ok_or(MarketError::NotAttained)?;
    matchings
        .iter()
        .find_map(|mu| compatible_outcome(m, mu, &best))
        .ok_or(MarketError::NotAttained)
}
