//! Complete factorization: trial division, a short Pollard–Brent rho pass,
//! elliptic curves for the rest, and a persistent cache keyed by the decimal
//! value.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::primes::{is_prime, is_prime_u64, mul_mod, small_primes};
use super::{cyclotomic_split, FactoredInteger};
use crate::error::{Error, Result};

/// Default work budget per composite cofactor, in modular multiplications.
/// Enough for elliptic curves to split off prime factors of about 25 digits.
pub const DEFAULT_WORK_BUDGET: u64 = 1 << 27;

/// Rho iterations tried before switching to elliptic curves.
const RHO_PASS: u64 = 1 << 16;

/// Shared factorization cache. Values are canonical, so concurrent inserts of
/// the same key are harmless.
#[derive(Debug, Default)]
pub struct FactorCache {
    entries: RwLock<BTreeMap<String, Vec<(String, u32)>>>,
    path: Option<PathBuf>,
}

impl FactorCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or starts) the JSON cache at `path`. A missing file is empty.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let entries = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(Error::Io(e.to_string())),
        };
        Ok(FactorCache { entries: RwLock::new(entries), path: Some(path) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, n: &BigUint) -> Option<FactoredInteger> {
        let guard = self.entries.read().expect("cache lock");
        let raw = guard.get(&n.to_string())?;
        let factors = raw
            .iter()
            .map(|(p, e)| p.parse::<BigUint>().ok().map(|p| (p, *e)))
            .collect::<Option<Vec<_>>>()?;
        let f = FactoredInteger::from_factors(factors).ok()?;
        (f.value() == n).then_some(f)
    }

    pub fn insert(&self, f: &FactoredInteger) {
        let raw = f.factors().iter().map(|(p, e)| (p.to_string(), *e)).collect();
        self.entries
            .write()
            .expect("cache lock")
            .insert(f.value().to_string(), raw);
    }

    /// Writes the cache back to its file, if it has one.
    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let guard = self.entries.read().expect("cache lock");
        let text = serde_json::to_string_pretty(&*guard).map_err(|e| Error::Io(e.to_string()))?;
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
            }
        }
        std::fs::write(path, text).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Factorizer with an effort budget and a cache.
#[derive(Debug)]
pub struct Factorizer {
    pub cache: FactorCache,
    pub work_budget: u64,
}

impl Default for Factorizer {
    fn default() -> Self {
        Factorizer { cache: FactorCache::in_memory(), work_budget: DEFAULT_WORK_BUDGET }
    }
}

impl Factorizer {
    pub fn new(cache: FactorCache, work_budget: u64) -> Self {
        Factorizer { cache, work_budget }
    }

    /// Complete factorization of `n >= 1`.
    pub fn factor_integer(&self, n: &BigUint) -> Result<FactoredInteger> {
        if n.is_zero() {
            return Err(Error::Domain("cannot factor 0".into()));
        }
        if n.is_one() {
            return Ok(FactoredInteger::one());
        }
        if let Some(hit) = self.cache.get(n) {
            return Ok(hit);
        }
        let mut primes = Vec::new();
        let mut rest = n.clone();
        for &p in small_primes() {
            let pb = BigUint::from(p);
            if &pb * &pb > rest {
                break;
            }
            while (&rest % &pb).is_zero() {
                rest /= &pb;
                primes.push(pb.clone());
            }
        }
        if !rest.is_one() {
            self.split_big(rest, &mut primes)?;
        }
        let f = FactoredInteger::from_factors(primes.into_iter().map(|p| (p, 1)).collect())?;
        if f.value() != n {
            return Err(Error::Internal(format!("factorization of {n} does not multiply back")));
        }
        self.cache.insert(&f);
        Ok(f)
    }

    /// Factorization of `q^n - 1`, assembled from its cyclotomic parts so the
    /// splitting methods only see numbers of size about `q^phi(d)`.
    pub fn factor_q_n_minus_1(&self, q: u64, n: u64) -> Result<FactoredInteger> {
        let total = crate::rational::upow(q, n) - BigUint::one();
        if let Some(hit) = self.cache.get(&total) {
            return Ok(hit);
        }
        let mut all = Vec::new();
        for (_, part) in cyclotomic_split(q, n) {
            let f = self.factor_integer(&part)?;
            all.extend(f.factors().iter().cloned());
        }
        let f = FactoredInteger::from_factors(all)?;
        if *f.value() != total {
            return Err(Error::Internal("cyclotomic parts do not multiply to q^n - 1".into()));
        }
        self.cache.insert(&f);
        Ok(f)
    }

    fn split_big(&self, n: BigUint, out: &mut Vec<BigUint>) -> Result<()> {
        if n.is_one() {
            return Ok(());
        }
        if let Some(small) = n.to_u64() {
            let mut tmp = Vec::new();
            split_u64(small, &mut tmp);
            out.extend(tmp.into_iter().map(BigUint::from));
            return Ok(());
        }
        if is_prime(&n) {
            out.push(n);
            return Ok(());
        }
        let d = rho_big(&n, self.work_budget.min(RHO_PASS))
            .or_else(|| super::ecm::find_factor(&n, self.work_budget))
            .ok_or_else(|| Error::FactorizationTimeout { cofactor: n.to_string() })?;
        let other = &n / &d;
        self.split_big(d, out)?;
        self.split_big(other, out)
    }
}

/// Pushes the prime factors (with multiplicity) of `n` onto `out`.
pub(crate) fn split_u64(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13] {
        if n % p == 0 {
            out.push(p);
            split_u64(n / p, out);
            return;
        }
    }
    let mut c = 1;
    let d = loop {
        if let Some(d) = rho_u64(n, c) {
            break d;
        }
        c += 1;
    };
    split_u64(d, out);
    split_u64(n / d, out);
}

// Brent's cycle detection with batched gcds, 64-bit arithmetic.
fn rho_u64(n: u64, c: u64) -> Option<u64> {
    const BATCH: u64 = 128;
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let (mut y, mut r, mut acc, mut g) = (2u64, 1u64, 1u64, 1u64);
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..BATCH.min(r - k) {
                y = f(y);
                acc = mul_mod(acc, x.abs_diff(y), n);
            }
            g = acc.gcd(&n);
            k += BATCH;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn rho_big(n: &BigUint, budget: u64) -> Option<BigUint> {
    let mut spent = 0u64;
    for c in 1u64..64 {
        match rho_big_once(n, c, budget, &mut spent) {
            RhoOutcome::Found(d) => return Some(d),
            RhoOutcome::Degenerate => continue,
            RhoOutcome::OutOfBudget => return None,
        }
    }
    None
}

enum RhoOutcome {
    Found(BigUint),
    Degenerate,
    OutOfBudget,
}

fn rho_big_once(n: &BigUint, c: u64, budget: u64, spent: &mut u64) -> RhoOutcome {
    const BATCH: u64 = 128;
    let c = BigUint::from(c);
    let f = |x: &BigUint| (x * x + &c) % n;
    let diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    let mut y = BigUint::from(2u32);
    let mut x = y.clone();
    let mut ys = y.clone();
    let mut acc = BigUint::one();
    let mut g = BigUint::one();
    let mut r = 1u64;
    while g.is_one() {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g.is_one() {
            ys = y.clone();
            let steps = BATCH.min(r - k);
            for _ in 0..steps {
                y = f(&y);
                acc = (acc * diff(&x, &y)) % n;
            }
            *spent += steps;
            g = acc.gcd(n);
            k += BATCH;
        }
        r *= 2;
        if *spent > budget && g.is_one() {
            return RhoOutcome::OutOfBudget;
        }
    }
    if &g == n {
        loop {
            ys = f(&ys);
            g = diff(&x, &ys).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    if &g == n {
        RhoOutcome::Degenerate
    } else {
        RhoOutcome::Found(g)
    }
}
