//! Prime sieving certificates: a set of primes `p_i | q^n - 1` with
//! `delta = 1 - sum 1/p_i > 0` such that
//! `CN_q(n) >= q^{n/2} W(q_0) Delta prod W_l theta_l`, `Delta = (t-1)/delta + 2`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_coefficient, cn_lower_bound, BoundVariant, Evaluator, PowerComparison};
use crate::error::{Error, Result};
use crate::number_theory::{is_prime, pow_mod, FactoredInteger, PairContext, PrimePowerQ};
use crate::oracle::{survey_counts, OracleConfig};
use crate::rational::{self, from_uint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SievingSet {
    pub pair: PairContext,
    #[serde(serialize_with = "rational::ser_biguint_vec", deserialize_with = "rational::de_biguint_vec")]
    pub primes: Vec<BigUint>,
    /// Radical of `q^n - 1` with the sieving primes removed.
    #[serde(serialize_with = "rational::ser_biguint", deserialize_with = "rational::de_biguint")]
    pub q0: BigUint,
    #[serde(serialize_with = "rational::ser_rational", deserialize_with = "rational::de_rational")]
    pub delta: BigRational,
    #[serde(rename = "Delta", serialize_with = "rational::ser_rational", deserialize_with = "rational::de_rational")]
    pub big_delta: BigRational,
}

impl SievingSet {
    pub fn t(&self) -> usize {
        self.primes.len()
    }

    /// `t = 0`: the plain criterion with `W(q')`.
    pub fn is_baseline(&self) -> bool {
        self.primes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveCheck {
    pub certificate: SievingSet,
    pub holds: bool,
    pub lhs_log10: f64,
    pub rhs_log10: f64,
}

fn divides_order(q: u64, n: u64, p: &BigUint) -> bool {
    match p.to_u64() {
        Some(s) => q % s != 0 && pow_mod(q, n, s) == 1 % s,
        None => BigUint::from(q).modpow(&BigUint::from(n), p).is_one(),
    }
}

/// `1 - sum 1/p_i`.
pub fn delta(primes: &[BigUint]) -> BigRational {
    primes
        .iter()
        .fold(BigRational::one(), |acc, p| acc - BigRational::new(1.into(), p.clone().into()))
}

/// Checks the Proposition-style sieve inequality for `primes`, with
/// `CN_q(n)` replaced by the final lower bound for the parity of `n`.
pub fn validate_sieving_set(ev: &Evaluator, pair: &PairContext, primes: &[BigUint]) -> Result<SieveCheck> {
    let (q, n) = (pair.q(), pair.n);
    let mut seen = primes.to_vec();
    seen.sort();
    seen.dedup();
    if seen.len() != primes.len() {
        return Err(Error::Domain("sieving primes must be distinct".into()));
    }
    for p in primes {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if !divides_order(q, n, p) {
            return Err(Error::PrimeNotDivisor { prime: p.to_string(), q, n });
        }
    }
    let d = delta(primes);
    if !d.is_positive() {
        return Err(Error::DeltaNonPositive { delta: d.to_string() });
    }
    let t = primes.len() as i64;
    let big_delta = BigRational::from_integer((t - 1).into()) / &d + BigRational::from_integer(2.into());
    let order = ev.factorizer.factor_q_n_minus_1(q, n)?;
    let q0 = primes.iter().fold(order.radical(), |acc, p| acc / p);
    let w_q0 = BigUint::one() << (order.distinct_prime_count() - primes.len());
    let coef = if ev.options.check_hypotheses {
        cn_lower_bound(pair, BoundVariant::final_for(n))?.coefficient
    } else {
        bound_coefficient(pair, BoundVariant::final_for(n))
    };
    let x = ev.profiles.bundle(&pair.q, n)?.product(ev.options.product) * &big_delta;
    let cmp = PowerComparison {
        q,
        num: n,
        den: 2,
        coef,
        c_pow: rational::pow(&from_uint(&w_q0), 2),
        x,
        strict: false,
    };
    let (holds, lhs_log10, rhs_log10, _) = cmp.decide();
    Ok(SieveCheck {
        certificate: SievingSet { pair: *pair, primes: primes.to_vec(), q0, delta: d, big_delta },
        holds,
        lhs_log10,
        rhs_log10,
    })
}

/// Greedy search: the baseline `t = 0` first, then the prime divisors of
/// `q^n - 1` largest first while `delta` stays positive, returning the first
/// set that passes.
pub fn search_sieving_set(ev: &Evaluator, pair: &PairContext, max_t: usize) -> Result<SieveCheck> {
    let baseline = validate_sieving_set(ev, pair, &[])?;
    if baseline.holds {
        return Ok(baseline);
    }
    let order = ev.factorizer.factor_q_n_minus_1(pair.q(), pair.n)?;
    let mut candidates: Vec<BigUint> = order.primes().cloned().collect();
    candidates.sort_by(|a, b| b.cmp(a));
    let mut chosen: Vec<BigUint> = Vec::new();
    for p in candidates {
        if chosen.len() >= max_t {
            break;
        }
        chosen.push(p);
        if !delta(&chosen).is_positive() {
            break;
        }
        let check = validate_sieving_set(ev, pair, &chosen)?;
        if check.holds {
            return Ok(check);
        }
    }
    Err(Error::NotFound(format!("no sieving set for ({}, {})", pair.q(), pair.n)))
}

/// Brute-force check of `CN^r >= sum CN^{r_i} - (t-1) CN^{r_0}` where
/// `r = lcm(r_i)` and `gcd(r_i, r_j) = r_0` for `i != j`.
pub fn sieving_inequality_check(
    q: &PrimePowerQ,
    n: u64,
    r_list: &[FactoredInteger],
    r0: &FactoredInteger,
    config: &OracleConfig,
) -> Result<bool> {
    if r_list.is_empty() {
        return Err(Error::Domain("empty divisor list".into()));
    }
    for (i, a) in r_list.iter().enumerate() {
        if !a.is_squarefree() {
            return Err(Error::Domain(format!("{} is not square-free", a.value())));
        }
        for b in &r_list[i + 1..] {
            if a.value().gcd(b.value()) != *r0.value() {
                return Err(Error::Domain(format!("gcd({}, {}) != {}", a.value(), b.value(), r0.value())));
            }
        }
    }
    if r_list.len() == 1 && !(r_list[0].value() % r0.value()).is_zero() {
        return Err(Error::Domain(format!("{} does not divide {}", r0.value(), r_list[0].value())));
    }
    let mut r_primes: Vec<(BigUint, u32)> = r_list.iter().flat_map(|r| r.factors().iter().cloned()).collect();
    r_primes.sort();
    r_primes.dedup();
    let r = FactoredInteger::from_factors(r_primes)?;
    let mut rs = vec![r.clone(), r0.clone()];
    rs.extend(r_list.iter().cloned());
    let counts = survey_counts(q, n, &rs, config)?;
    let get = |f: &FactoredInteger| counts.per_r[&f.value().to_string()] as i128;
    let t = r_list.len() as i128;
    let rhs: i128 = r_list.iter().map(get).sum::<i128>() - (t - 1) * get(r0);
    Ok(get(&r) >= rhs)
}

/// `delta` as a float, for display.
pub fn delta_f64(set: &SievingSet) -> f64 {
    rational::ln_rational(&set.delta).map(f64::exp).unwrap_or(0.0)
}
