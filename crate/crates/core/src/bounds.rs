//! Closed-form lower bounds on `CN_q(n)` and the character-sum existence
//! criterion for primitive completely normal elements.
//!
//! Every decision is made on exact integers or rationals. Fractional powers
//! such as `q^{5n/12}` are cleared by raising both sides to a common power;
//! floating point only serves as a pre-filter when the margin is wide.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension_profile::{ProfileCache, ProfileProduct};
use crate::number_theory::factor::Factorizer;
use crate::number_theory::{primes_up_to, robin_exp_constant, robin_upper_bound, sigma_divisors, small_prime_divisors, PairContext};
use crate::rational::{self, from_u64, from_uint, ln_rational, ratio, upow};

/// `4.9`, the stated ceiling on the worst-case `c_{r,4}`.
pub fn c4_ceiling() -> BigRational {
    ratio(49, 10)
}

/// `1.06 * 10^24`, the stated ceiling on the worst-case `c_{r,12}`.
pub fn c12_ceiling() -> BigRational {
    BigRational::from_integer(BigInt::from(106u32) * BigInt::from(10u32).pow(22))
}

/// `c_{r,a} = 2^s / (p_1 ... p_s)^{1/a}` over the primes `p_i <= 2^a`
/// dividing `r`. Held through its exact `a`-th power.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorCountConstant {
    pub a: u32,
    pub primes: Vec<u64>,
    #[serde(serialize_with = "rational::ser_biguint", deserialize_with = "rational::de_biguint")]
    pub small_prime_product: BigUint,
}

impl DivisorCountConstant {
    fn from_primes(a: u32, primes: Vec<u64>) -> Self {
        let small_prime_product = primes.iter().fold(BigUint::one(), |acc, &p| acc * p);
        DivisorCountConstant { a, primes, small_prime_product }
    }

    /// Maximum over all `r`: every prime below `2^a` raises the constant.
    pub fn worst_case(a: u32) -> Self {
        let bound = 1u64 << a;
        Self::from_primes(a, primes_up_to(bound - 1))
    }

    /// `c_{q',a}` for `q' = rad(q^n - 1)`.
    pub fn for_pair(q: u64, n: u64, a: u32) -> Self {
        Self::from_primes(a, small_prime_divisors(q, n, 1u64 << a))
    }

    pub fn s(&self) -> usize {
        self.primes.len()
    }

    /// `c^a = 2^{a s} / prod p_i`.
    pub fn power_a(&self) -> BigRational {
        let num = BigUint::one() << (self.a as usize * self.s());
        BigRational::new(num.into(), self.small_prime_product.clone().into())
    }

    /// `c < x`, decided as `c^a < x^a`.
    pub fn is_below(&self, x: &BigRational) -> bool {
        x.is_positive() && self.power_a() < rational::pow(x, self.a)
    }

    pub fn to_f64(&self) -> f64 {
        (ln_rational(&self.power_a()).unwrap() / self.a as f64).exp()
    }
}

/// `W(r) <= c_{r,a} r^{1/a}` in `a`-th power form, with `r = q^n - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WBound {
    pub constant: DivisorCountConstant,
    pub radicand: BigUint,
}

impl WBound {
    /// `w <= c r^{1/a}`, i.e. `w^a prod <= 2^{a s} r`.
    pub fn admits(&self, w: &BigUint) -> bool {
        let c = &self.constant;
        w.pow(c.a) * &c.small_prime_product <= (&self.radicand << (c.a as usize * c.s()))
    }
}

pub fn w_bound(q: u64, n: u64, a: u32) -> WBound {
    WBound {
        constant: DivisorCountConstant::for_pair(q, n, a),
        radicand: upow(q, n) - BigUint::one(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVariant {
    Prop1Even,
    Prop1Odd,
    Prop2Even,
    Prop2Odd,
    Cor1Even,
    Cor1Odd,
    Cor2OddWild,
    Cor0Even,
    Cor0Odd,
    FinalOdd,
    FinalEven,
}

impl BoundVariant {
    pub const ALL: [BoundVariant; 11] = [
        BoundVariant::Prop1Even,
        BoundVariant::Prop1Odd,
        BoundVariant::Prop2Even,
        BoundVariant::Prop2Odd,
        BoundVariant::Cor1Even,
        BoundVariant::Cor1Odd,
        BoundVariant::Cor2OddWild,
        BoundVariant::Cor0Even,
        BoundVariant::Cor0Odd,
        BoundVariant::FinalOdd,
        BoundVariant::FinalEven,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Prop1Even => "prop1-even",
            BoundVariant::Prop1Odd => "prop1-odd",
            BoundVariant::Prop2Even => "prop2-even",
            BoundVariant::Prop2Odd => "prop2-odd",
            BoundVariant::Cor1Even => "cor1-even",
            BoundVariant::Cor1Odd => "cor1-odd",
            BoundVariant::Cor2OddWild => "cor2-odd-wild",
            BoundVariant::Cor0Even => "cor0-even",
            BoundVariant::Cor0Odd => "cor0-odd",
            BoundVariant::FinalOdd => "final-odd",
            BoundVariant::FinalEven => "final-even",
        }
    }

    /// Each hypothesis clause with its truth value for `pair`.
    pub fn clauses(self, pair: &PairContext) -> Vec<(&'static str, bool)> {
        let q = pair.q();
        let (n, m, p) = (pair.n, pair.m, pair.p());
        let m_small = (m as u128) < 2 * (q as u128) * (q as u128);
        let n_small = (n as u128) < 2 * (q as u128) * (q as u128);
        let wild = pair.ell >= 1;
        use BoundVariant::*;
        match self {
            Prop1Even => vec![("ell >= 1", wild), ("m even", m % 2 == 0)],
            Prop1Odd => vec![("ell >= 1", wild), ("m odd", m % 2 == 1)],
            Prop2Even => vec![("ell = 0", !wild), ("n even", n % 2 == 0)],
            Prop2Odd => vec![("ell = 0", !wild), ("n odd", n % 2 == 1)],
            Cor1Even => vec![
                ("ell >= 1", wild),
                ("m < 2q^2", m_small),
                ("q-1 does not divide m", m % (q - 1) != 0),
                ("m even", m % 2 == 0),
                ("q >= 9", q >= 9),
            ],
            Cor1Odd => vec![
                ("ell >= 1", wild),
                ("m < 2q^2", m_small),
                ("q-1 does not divide m", m % (q - 1) != 0),
                ("m odd", m % 2 == 1),
                ("q >= 8", q >= 8),
                ("p = 2", p == 2),
            ],
            Cor2OddWild => vec![
                ("ell >= 1", wild),
                ("m < 2q^2", m_small),
                ("m odd", m % 2 == 1),
                ("p >= 3", p >= 3),
                ("q >= 9", q >= 9),
            ],
            Cor0Even => vec![
                ("ell = 0", !wild),
                ("n < 2q^2", n_small),
                ("n even", n % 2 == 0),
                ("q >= 9", q >= 9),
                ("q-1 does not divide n", n % (q - 1) != 0),
            ],
            Cor0Odd => vec![("ell = 0", !wild), ("n < 2q^2", n_small), ("n odd", n % 2 == 1), ("q >= 8", q >= 8)],
            FinalOdd => vec![("n odd", n % 2 == 1), ("q >= 8", q >= 8)],
            FinalEven => vec![("n even", n % 2 == 0), ("q >= 9", q >= 9), ("q-1 does not divide n", n % (q - 1) != 0)],
        }
    }

    pub fn applies(self, pair: &PairContext) -> bool {
        self.clauses(pair).iter().all(|c| c.1)
    }

    /// The bound matching the parity of `n`.
    pub fn final_for(n: u64) -> Self {
        if n % 2 == 1 {
            BoundVariant::FinalOdd
        } else {
            BoundVariant::FinalEven
        }
    }
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown bound variant {s:?}")))
    }
}

/// `CN_q(n) >= coefficient * q^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnLowerBound {
    pub variant: BoundVariant,
    pub pair: PairContext,
    #[serde(serialize_with = "rational::ser_rational", deserialize_with = "rational::de_rational")]
    pub coefficient: BigRational,
    pub hypotheses: Vec<String>,
}

impl CnLowerBound {
    /// `coefficient * q^n`.
    pub fn bound(&self) -> BigRational {
        &self.coefficient * from_uint(&upow(self.pair.q(), self.pair.n))
    }
}

/// The coefficient formula alone, hypotheses unchecked.
pub fn bound_coefficient(pair: &PairContext, variant: BoundVariant) -> BigRational {
    let q = from_u64(pair.q());
    let q1 = &q + BigRational::one();
    let g = from_u64(pair.g);
    let m = from_u64(pair.m);
    let n = from_u64(pair.n);
    let one = BigRational::one();
    let qp = |e: u32| rational::pow(&q, e);
    let term = |c: BigRational, x: &BigRational, e: u32| c * x / qp(e);
    // 1 - g/(q+1) + g x / (2 q^2 (q+1))
    let head = |x: &BigRational| &one - &g / &q1 + &g * x / (ratio(2, 1) * qp(2) * &q1);
    use BoundVariant::*;
    match variant {
        Prop1Even => {
            head(&m) - term(ratio(1, 1), &m, 2) - term(ratio(4, 3), &m, 3) - term(ratio(1, 2), &m, 4)
                - term(ratio(8, 5), &m, 6)
        }
        Prop1Odd => {
            let q_to_p = from_uint(&upow(pair.q(), pair.p()));
            head(&m) - term(ratio(1, 2), &m, 2) - &m / q_to_p - term(ratio(1, 3), &m, 3)
                - term(ratio(2, 1), &m, 4)
                - term(ratio(2, 5), &m, 5)
                - term(ratio(1, 2), &m, 6)
        }
        Prop2Even => head(&n) - term(ratio(1, 1), &n, 2) - term(ratio(1, 2), &n, 3),
        Prop2Odd => head(&n) - term(ratio(1, 2), &n, 2) - term(ratio(1, 3), &n, 3) - term(ratio(1, 2), &n, 4),
        Cor1Even => ratio(1, 2) + &one / &q1 - term(ratio(24, 25), &m, 2),
        Cor1Odd => ratio(2, 3) + ratio(2, 3) / &q1 - term(ratio(29, 20), &m, 2),
        Cor2OddWild => ratio(2, 1) / &q1 - ratio(547, 200) * &m / (qp(2) * &q1),
        Cor0Even | FinalEven => ratio(1, 2) + &one / &q1 - term(ratio(43, 50), &n, 2),
        Cor0Odd | FinalOdd => ratio(2, 1) / &q1 - ratio(29, 20) * &n / (qp(2) * &q1),
    }
}

/// Lower bound on `CN_q(n)`; errors with the first violated clause.
pub fn cn_lower_bound(pair: &PairContext, variant: BoundVariant) -> Result<CnLowerBound> {
    let clauses = variant.clauses(pair);
    if let Some((clause, _)) = clauses.iter().find(|c| !c.1) {
        return Err(Error::HypothesisViolated { variant: variant.name().into(), clause: (*clause).into() });
    }
    Ok(CnLowerBound {
        variant,
        pair: *pair,
        coefficient: bound_coefficient(pair, variant),
        hypotheses: clauses.into_iter().map(|c| c.0.to_string()).collect(),
    })
}

/// Refinement levels of the existence criterion, coarsest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CriterionLevel {
    #[serde(rename = "robin_a12")]
    RobinA12,
    #[serde(rename = "exact_t_a12")]
    ExactTA12,
    #[serde(rename = "exact_c_a12")]
    ExactCA12,
    #[serde(rename = "exact_W1_theta1")]
    ExactW1Theta1,
    #[serde(rename = "exact_all_profiles")]
    ExactAllProfiles,
    #[serde(rename = "exact_Wq")]
    ExactWq,
}

impl CriterionLevel {
    pub const ALL: [CriterionLevel; 6] = [
        CriterionLevel::RobinA12,
        CriterionLevel::ExactTA12,
        CriterionLevel::ExactCA12,
        CriterionLevel::ExactW1Theta1,
        CriterionLevel::ExactAllProfiles,
        CriterionLevel::ExactWq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriterionLevel::RobinA12 => "robin_a12",
            CriterionLevel::ExactTA12 => "exact_t_a12",
            CriterionLevel::ExactCA12 => "exact_c_a12",
            CriterionLevel::ExactW1Theta1 => "exact_W1_theta1",
            CriterionLevel::ExactAllProfiles => "exact_all_profiles",
            CriterionLevel::ExactWq => "exact_Wq",
        }
    }
}

impl fmt::Display for CriterionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CriterionLevel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown criterion level {s:?}")))
    }
}

/// Result of one criterion evaluation. `lhs_log10`/`rhs_log10` are the
/// decimal logarithms of the two compared quantities (before any power is
/// taken); `exact` records whether big-number arithmetic made the call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub q: Option<u64>,
    pub n: u64,
    pub level: CriterionLevel,
    pub holds: bool,
    pub lhs_log10: f64,
    pub rhs_log10: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionOptions {
    /// Refuse pairs outside the hypotheses of the parity's final bound.
    pub check_hypotheses: bool,
    pub product: ProfileProduct,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        CriterionOptions { check_hypotheses: true, product: ProfileProduct::default() }
    }
}

// Relative log margin below which the float pre-filter defers.
const FAST_PATH_MARGIN: f64 = 1e-6;

/// `q^{num} coef^{den}  (>= or >)  c_pow X^{den}`, i.e. the root-free form
/// of `q^{num/den} coef >= c X`.
pub(crate) struct PowerComparison {
    pub q: u64,
    pub num: u64,
    pub den: u32,
    pub coef: BigRational,
    pub c_pow: BigRational,
    pub x: BigRational,
    pub strict: bool,
}

impl PowerComparison {
    fn logs(&self) -> (f64, f64) {
        let d = self.den as f64;
        let lhs = self.num as f64 / d * (self.q as f64).ln() + ln_rational(&self.coef).unwrap_or(f64::NEG_INFINITY);
        let rhs = ln_rational(&self.c_pow).unwrap() / d + ln_rational(&self.x).unwrap_or(f64::NEG_INFINITY);
        (lhs, rhs)
    }

    /// `(holds, lhs_log10, rhs_log10, decided_exactly)`.
    pub fn decide(&self) -> (bool, f64, f64, bool) {
        let (lhs, rhs) = self.logs();
        let to10 = std::f64::consts::LN_10;
        if !self.coef.is_positive() {
            return (false, f64::NAN, rhs / to10, true);
        }
        if !self.x.is_positive() {
            return (true, lhs / to10, f64::NEG_INFINITY, true);
        }
        let scale = 1.0 + lhs.abs().max(rhs.abs());
        if (lhs - rhs).abs() > FAST_PATH_MARGIN * scale {
            return (lhs > rhs, lhs / to10, rhs / to10, false);
        }
        let left = from_uint(&upow(self.q, self.num)) * rational::pow(&self.coef, self.den);
        let right = &self.c_pow * rational::pow(&self.x, self.den);
        let holds = if self.strict { left > right } else { left >= right };
        (holds, lhs / to10, rhs / to10, true)
    }
}

/// Shared state for criterion evaluations.
#[derive(Debug, Default)]
pub struct Evaluator {
    pub factorizer: Factorizer,
    pub profiles: ProfileCache,
    pub options: CriterionOptions,
}

impl Evaluator {
    pub fn new(factorizer: Factorizer, options: CriterionOptions) -> Self {
        Evaluator { factorizer, profiles: ProfileCache::new(), options }
    }

    /// The existence criterion `CN_q(n) > q^{n/2} W(q') prod W_l theta_l`
    /// with `CN_q(n)` replaced by the final bound for the parity of `n`,
    /// relaxed according to `level`.
    pub fn pcn_criterion(&self, pair: &PairContext, level: CriterionLevel) -> Result<CriterionOutcome> {
        let variant = BoundVariant::final_for(pair.n);
        let coef = if self.options.check_hypotheses {
            cn_lower_bound(pair, variant)?.coefficient
        } else {
            bound_coefficient(pair, variant)
        };
        let (q, n) = (pair.q(), pair.n);
        let outcome = |holds, lhs_log10, rhs_log10, exact| CriterionOutcome {
            q: Some(q),
            n,
            level,
            holds,
            lhs_log10,
            rhs_log10,
            exact,
        };
        if level == CriterionLevel::RobinA12 {
            let t = robin_upper_bound(n)?;
            let (holds, lhs, rhs) = log_criterion(q as f64, n, t, &coef);
            return Ok(outcome(holds, lhs, rhs, false));
        }
        let two = ratio(2, 1);
        let t = sigma_divisors(n);
        let cmp = match level {
            CriterionLevel::RobinA12 => unreachable!(),
            CriterionLevel::ExactTA12 => a12(q, n, coef, rational::pow(&c12_ceiling(), 12), rational::pow(&two, (t - 1) as u32)),
            CriterionLevel::ExactCA12 => {
                let c = DivisorCountConstant::for_pair(q, n, 12).power_a();
                a12(q, n, coef, c, rational::pow(&two, (t - 1) as u32))
            }
            CriterionLevel::ExactW1Theta1 => {
                let c = DivisorCountConstant::for_pair(q, n, 12).power_a();
                let w1 = self.profiles.profile(&pair.q, n, 1)?.weighted();
                let exp = t as i64 - n as i64 - 1;
                let x = pow_signed(&two, exp) * w1;
                a12(q, n, coef, c, x)
            }
            CriterionLevel::ExactAllProfiles => {
                let c = DivisorCountConstant::for_pair(q, n, 12).power_a();
                let x = self.profiles.bundle(&pair.q, n)?.product(self.options.product);
                a12(q, n, coef, c, x)
            }
            CriterionLevel::ExactWq => {
                let w = self.factorizer.factor_q_n_minus_1(q, n)?.divisor_count_w();
                let x = self.profiles.bundle(&pair.q, n)?.product(self.options.product);
                PowerComparison { q, num: n, den: 2, coef, c_pow: rational::pow(&from_uint(&w), 2), x, strict: true }
            }
        };
        let (holds, lhs, rhs, exact) = cmp.decide();
        Ok(outcome(holds, lhs, rhs, exact))
    }
}

fn a12(q: u64, n: u64, coef: BigRational, c_pow: BigRational, x: BigRational) -> PowerComparison {
    PowerComparison { q, num: 5 * n, den: 12, coef, c_pow, x, strict: false }
}

fn pow_signed(base: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        rational::pow(base, e as u32)
    } else {
        rational::pow(&base.recip(), (-e) as u32)
    }
}

/// `q^{5n/12} coef >= 1.06e24 * 2^{t - 1}` in natural logs, with a real `t`.
/// Ties within rounding count as failures.
fn log_criterion(q: f64, n: u64, t: f64, coef: &BigRational) -> (bool, f64, f64) {
    let to10 = std::f64::consts::LN_10;
    let rhs = ln_rational(&c12_ceiling()).unwrap() + (t - 1.0) * std::f64::consts::LN_2;
    let Some(lc) = ln_rational(coef) else {
        return (false, f64::NAN, rhs / to10);
    };
    let lhs = 5.0 * n as f64 / 12.0 * q.ln() + lc;
    let holds = lhs - rhs > 1e-9 * (1.0 + rhs.abs());
    (holds, lhs / to10, rhs / to10)
}

/// Criterion at the infimum of the `q` range (`n^{3/4}` for odd `n`,
/// `n^{4/5}` for even), where `q` is real. Only the two coarsest levels are
/// meaningful here.
pub fn worst_case_criterion(n: u64, level: CriterionLevel) -> Result<CriterionOutcome> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let nf = n as f64;
    let odd = n % 2 == 1;
    let q = if odd { nf.powf(0.75) } else { nf.powf(0.8) };
    let t = match level {
        CriterionLevel::RobinA12 => robin_upper_bound(n)?,
        CriterionLevel::ExactTA12 => sigma_divisors(n) as f64,
        other => return Err(Error::Domain(format!("level {other} needs a concrete q"))),
    };
    let coef = if odd {
        2.0 / (q + 1.0) - 1.45 * nf / (q * q * (q + 1.0))
    } else {
        0.5 + 1.0 / (q + 1.0) - 0.86 * nf / (q * q)
    };
    let to10 = std::f64::consts::LN_10;
    let rhs = ln_rational(&c12_ceiling()).unwrap() + (t - 1.0) * std::f64::consts::LN_2;
    let (holds, lhs) = if coef <= 0.0 {
        (false, f64::NAN)
    } else {
        let lhs = 5.0 * nf / 12.0 * q.ln() + coef.ln();
        (lhs - rhs > 1e-9 * (1.0 + rhs.abs()), lhs)
    };
    Ok(CriterionOutcome { q: None, n, level, holds, lhs_log10: lhs / to10, rhs_log10: rhs / to10, exact: false })
}

/// Sufficient conditions used for the asymptotic statement, with `q` at the
/// worst case of its range (`q = sqrt(n)` for odd `n`, `n = 0.43 q^2` for
/// even). Returns whether every inequality in the chain holds at `n`.
pub fn asymptotic_check(n: u64, odd: bool) -> Result<bool> {
    if n < 285 {
        return Err(Error::Domain(format!("asymptotic conditions assume n >= 285, got {n}")));
    }
    let nf = n as f64;
    let ln = nf.ln();
    let ll = ln.ln();
    let ln2 = std::f64::consts::LN_2;
    let ln4 = 2.0 * ln2;
    let strictly = |lhs: f64, rhs: f64| lhs - rhs > 1e-9 * (1.0 + lhs.abs().max(rhs.abs()));
    // 4.9 * 2^{n(ll e^0.578 + 0.6483/ll) - 1} <= 2.5 * 2^{2 n ll}, base-2 logs
    let robin_step = strictly(
        2.5f64.log2() + 2.0 * nf * ll,
        4.9f64.log2() + nf * (ll * robin_exp_constant() + 0.6483 / ll) - 1.0,
    );
    let final_step = if odd {
        strictly((nf - 4.0) / 8.0 * ln, nf * ll * ln4 + 4.83f64.ln())
    } else {
        let q = (nf / 0.43).sqrt();
        strictly(nf / 4.0 * q.ln() - (q + 1.0).ln(), 2.5f64.ln() + nf * ll * ln4)
    };
    Ok(robin_step && final_step)
}
