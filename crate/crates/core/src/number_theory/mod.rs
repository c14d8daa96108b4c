//! Exact integer number theory: prime powers, orders, divisor functions,
//! cyclotomic splitting of `q^n - 1` and Robin's bound on `sigma(n)`.

mod ecm;
pub mod factor;
pub mod primes;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::upow;
pub use primes::{is_prime, is_prime_u64, mul_mod, pow_mod, primes_up_to};

/// `q = p^e` with `p` prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimePowerQ {
    pub q: u64,
    pub p: u64,
    pub e: u32,
}

impl PrimePowerQ {
    pub fn new(q: u64) -> Result<Self> {
        prime_power_decompose(q)
    }
}

/// An integer together with its complete factorization, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredInteger {
    value: BigUint,
    factors: Vec<(BigUint, u32)>,
}

impl FactoredInteger {
    /// Builds from a factor list, checking the product and prime ordering.
    /// Primality of each entry is checked with Miller–Rabin.
    pub fn from_factors(mut factors: Vec<(BigUint, u32)>) -> Result<Self> {
        factors.sort();
        let mut merged: Vec<(BigUint, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            if e == 0 {
                continue;
            }
            match merged.last_mut() {
                Some((last, le)) if *last == p => *le += e,
                _ => merged.push((p, e)),
            }
        }
        for (p, _) in &merged {
            if !is_prime(p) {
                return Err(Error::Internal(format!("factor {p} is not prime")));
            }
        }
        let value = merged
            .iter()
            .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e));
        Ok(FactoredInteger { value, factors: merged })
    }

    pub fn one() -> Self {
        FactoredInteger { value: BigUint::one(), factors: Vec::new() }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn factors(&self) -> &[(BigUint, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = &BigUint> {
        self.factors.iter().map(|(p, _)| p)
    }

    pub fn distinct_prime_count(&self) -> usize {
        self.factors.len()
    }

    /// Product of the distinct primes.
    pub fn radical(&self) -> BigUint {
        self.primes().fold(BigUint::one(), |acc, p| acc * p)
    }

    /// `W`: number of square-free divisors, `2^(number of distinct primes)`.
    pub fn divisor_count_w(&self) -> BigUint {
        BigUint::one() << self.factors.len()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|(_, e)| *e == 1)
    }
}

/// `(radical, W)` of a factored integer.
pub fn radical_and_divisor_count(n: &FactoredInteger) -> (BigUint, BigUint) {
    (n.radical(), n.divisor_count_w())
}

/// A pair `(q, n)` with `n = p^ell * m`, `gcd(m, p) = 1` and `g = gcd(m, q - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairContext {
    pub q: PrimePowerQ,
    pub n: u64,
    pub ell: u32,
    pub m: u64,
    pub g: u64,
}

impl PairContext {
    pub fn new(q: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        let q = prime_power_decompose(q)?;
        let (ell, m) = split_p_part(n, q.p);
        Ok(PairContext { q, n, ell, m, g: m.gcd(&(q.q - 1)) })
    }

    pub fn q(&self) -> u64 {
        self.q.q
    }

    pub fn p(&self) -> u64 {
        self.q.p
    }

    /// `q^n - 1` as a big integer.
    pub fn group_order(&self) -> BigUint {
        upow(self.q.q, self.n) - BigUint::one()
    }
}

/// Splits `n = p^j * m` with `p` not dividing `m`.
pub fn split_p_part(mut n: u64, p: u64) -> (u32, u64) {
    let mut j = 0;
    while n % p == 0 {
        n /= p;
        j += 1;
    }
    (j, n)
}

/// The `p`-free part of `n`.
pub fn p_free_part(n: u64, p: u64) -> u64 {
    split_p_part(n, p).1
}

pub fn prime_power_decompose(q: u64) -> Result<PrimePowerQ> {
    if q < 2 {
        return Err(Error::NotAPrimePower(q));
    }
    let f = factor_u64(q);
    if f.len() != 1 {
        return Err(Error::NotAPrimePower(q));
    }
    Ok(PrimePowerQ { q, p: f[0].0, e: f[0].1 })
}

pub fn is_prime_power(q: u64) -> bool {
    prime_power_decompose(q).is_ok()
}

/// Factorization of a machine integer: trial division to `10^6`, then rho.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    for &p in primes::small_primes() {
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        let mut rest = Vec::new();
        factor::split_u64(n, &mut rest);
        rest.sort_unstable();
        for p in rest {
            match out.last_mut() {
                Some((last, e)) if *last == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factor_u64(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn mobius(n: u64) -> i32 {
    let f = factor_u64(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All positive divisors, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factor_u64(n) {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Sum of divisors `t(n) = sigma(n)`.
pub fn sigma_divisors(n: u64) -> u64 {
    factor_u64(n).iter().fold(1u64, |acc, &(p, e)| {
        let mut term = 1u64;
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            term += pk;
        }
        acc * term
    })
}

/// Smallest `e >= 1` with `q^e = 1 (mod k)`; the order modulo 1 is 1.
pub fn multiplicative_order(q: u64, k: u64) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("modulus must be positive".into()));
    }
    if k == 1 {
        return Ok(1);
    }
    if q.gcd(&k) != 1 {
        return Err(Error::NotCoprime { base: q, modulus: k });
    }
    let base = q % k;
    let mut order = euler_phi(k);
    for (f, _) in factor_u64(order) {
        while order % f == 0 && pow_mod(base, order / f, k) == 1 {
            order /= f;
        }
    }
    Ok(order)
}

/// `ord_k(q^l)` without forming `q^l`.
pub fn order_of_power(q: u64, l: u64, k: u64) -> Result<u64> {
    if k == 1 {
        return Ok(1);
    }
    if q.gcd(&k) != 1 {
        return Err(Error::NotCoprime { base: q, modulus: k });
    }
    multiplicative_order(pow_mod(q, l, k), k)
}

/// `exp(0.578)`, the exponential constant used in the effective Robin
/// estimate; it exceeds `exp(gamma) = 1.78107...`, so the bound stays valid.
pub fn robin_exp_constant() -> f64 {
    0.578f64.exp()
}

// Relative slack covering f64 error in ln, ln ln and the arithmetic below.
const ROBIN_ROUND_UP: f64 = 1.0 + 1e-12;

/// Upper bound on `sigma(n)` from Robin's inequality, rounded upward:
/// `exp(0.578) n ln ln n + 0.6483 n / ln ln n`, valid for `n >= 3`.
pub fn robin_upper_bound(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("Robin's bound needs n >= 3, got {n}")));
    }
    let nf = n as f64;
    let ll = nf.ln().ln();
    let value = robin_exp_constant() * nf * ll + 0.6483 * nf / ll;
    Ok(value * ROBIN_ROUND_UP)
}

/// Primes `s <= bound` dividing `q^n - 1`, via `s | q^n - 1` iff
/// `s` does not divide `q` and `ord_s(q) | n`.
pub fn small_prime_divisors(q: u64, n: u64, bound: u64) -> Vec<u64> {
    primes_up_to(bound)
        .into_iter()
        .filter(|&s| q % s != 0 && n % multiplicative_order(q, s).expect("coprime") == 0)
        .collect()
}

/// Prime powers strictly between `lo` and `hi`.
pub fn prime_powers_in_interval(lo: f64, hi: f64) -> Vec<PrimePowerQ> {
    if !(lo < hi) {
        return Vec::new();
    }
    let start = if lo < 1.0 { 2 } else { lo.floor() as u64 + 1 };
    let end = if hi <= 0.0 { 0 } else { hi.ceil() as u64 };
    (start.max(2)..end)
        .filter(|&q| (q as f64) > lo && (q as f64) < hi)
        .filter_map(|q| prime_power_decompose(q).ok())
        .collect()
}

/// Prime powers `q` with `lo < q < hi`.
pub fn prime_powers_between(lo: u64, hi: u64) -> Vec<PrimePowerQ> {
    (lo.saturating_add(1).max(2)..hi)
        .filter_map(|q| prime_power_decompose(q).ok())
        .collect()
}

/// `q^n - 1 = prod_{d | n} Phi_d(q)`; returns `(d, Phi_d(q))` for each `d | n`.
///
/// Each value comes from the exact Möbius product
/// `Phi_d(q) = prod_{e | d} (q^e - 1)^{mu(d/e)}`.
pub fn cyclotomic_split(q: u64, n: u64) -> Vec<(u64, BigUint)> {
    assert!(q >= 2 && n >= 1, "cyclotomic_split needs q >= 2, n >= 1");
    divisors(n)
        .into_iter()
        .map(|d| (d, cyclotomic_value(q, d)))
        .collect()
}

/// `Phi_d(q)` for `q >= 2`.
pub fn cyclotomic_value(q: u64, d: u64) -> BigUint {
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for e in divisors(d) {
        let term = upow(q, e) - BigUint::one();
        match mobius(d / e) {
            1 => num *= term,
            -1 => den *= term,
            _ => {}
        }
    }
    let (quot, rem) = num.div_rem(&den);
    debug_assert!(rem.is_zero());
    quot
}

/// Integer `floor(n^(num/den))`, exact.
pub fn floor_rational_root(n: u64, num: u32, den: u32) -> u64 {
    let target = BigUint::from(n).pow(num);
    let guess = (n as f64).powf(num as f64 / den as f64).floor() as u64;
    let mut a = guess.saturating_sub(2);
    while BigUint::from(a + 1).pow(den) <= target {
        a += 1;
    }
    while a > 0 && BigUint::from(a).pow(den) > target {
        a -= 1;
    }
    a
}
