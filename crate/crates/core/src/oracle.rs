//! Brute-force ground truth: exhaustive counts of completely normal,
//! `r`-free and primitive elements, and first-witness search.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension_profile::{bundle, ProfileProduct};
use crate::finite_field::{FieldContext, FieldElement, NormalityTester};
use crate::number_theory::{divisors, FactoredInteger, PrimePowerQ};
use crate::rational::{self, from_u64, from_uint, upow, RationalJson};

/// Enumeration caps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Largest `q^n` for full counts.
    pub count_cap: u64,
    /// Largest `q^n` for witness search (which exits early).
    pub witness_cap: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { count_cap: 10_000_000, witness_cap: 1_000_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounts {
    pub q: u64,
    pub n: u64,
    pub cn: u64,
    pub pcn: u64,
    /// `CN^r` keyed by the decimal value of `r`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_r: BTreeMap<String, u64>,
}

const CHUNK: u64 = 1 << 14;

/// A field `F_{q^n}` prepared for exhaustive scans: one rank tester per
/// proper divisor of `n`, `l = 1` first.
#[derive(Debug)]
pub struct FieldSurvey {
    ctx: FieldContext,
    testers: Vec<NormalityTester>,
}

impl FieldSurvey {
    pub fn new(q: &PrimePowerQ, n: u64, cap: u64) -> Result<Self> {
        let ctx = FieldContext::for_pair(q, n, cap)?;
        let testers = divisors(n)
            .into_iter()
            .filter(|&l| l < n)
            .map(|l| NormalityTester::new(&ctx, q, n, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSurvey { ctx, testers })
    }

    pub fn context(&self) -> &FieldContext {
        &self.ctx
    }

    fn binary(&self) -> bool {
        self.ctx.characteristic() == 2
    }

    pub fn is_completely_normal(&self, x: &FieldElement) -> bool {
        if self.ctx.is_zero(x) {
            return false;
        }
        self.testers.iter().all(|t| t.is_normal(&x.coeffs, &mut t.scratch()))
    }

    /// Calls `hit(index)` for each completely normal element with index in
    /// `[lo, hi)`; stops early when `hit` returns `true`.
    fn scan(&self, lo: u64, hi: u64, mut hit: impl FnMut(u64) -> bool) {
        let lo = lo.max(1);
        if lo >= hi {
            return;
        }
        if self.testers.is_empty() {
            for i in lo..hi {
                if hit(i) {
                    return;
                }
            }
            return;
        }
        if self.binary() {
            for i in lo..hi {
                if self.testers.iter().all(|t| t.is_normal_bits(i)) && hit(i) {
                    return;
                }
            }
            return;
        }
        let p = self.ctx.characteristic();
        let mut digits = self.ctx.element(lo).coeffs;
        let mut scratch: Vec<_> = self.testers.iter().map(|t| t.scratch()).collect();
        for i in lo..hi {
            if self.testers.iter().zip(scratch.iter_mut()).all(|(t, s)| t.is_normal(&digits, s)) && hit(i) {
                return;
            }
            for d in digits.iter_mut() {
                *d += 1;
                if *d < p {
                    break;
                }
                *d = 0;
            }
        }
    }

    /// Number of completely normal elements.
    pub fn count_cn(&self) -> u64 {
        let size = self.ctx.size();
        if self.testers.is_empty() {
            return size - 1;
        }
        chunks(size)
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut c = 0u64;
                self.scan(lo, hi, |_| {
                    c += 1;
                    false
                });
                c
            })
            .sum()
    }

    /// Bitset of completely normal indices.
    pub fn cn_bitset(&self) -> Vec<u64> {
        let size = self.ctx.size();
        let words = size.div_ceil(64) as usize;
        let parts: Vec<Vec<u64>> = chunks(size)
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut hits = Vec::new();
                self.scan(lo, hi, |i| {
                    hits.push(i);
                    false
                });
                hits
            })
            .collect();
        let mut bits = vec![0u64; words];
        for i in parts.into_iter().flatten() {
            bits[(i / 64) as usize] |= 1 << (i % 64);
        }
        bits
    }

    /// `dlog[index]` with respect to the first primitive element in
    /// enumeration order; `u32::MAX` at the zero element.
    pub fn discrete_log_table(&self) -> Result<Vec<u32>> {
        let size = self.ctx.size();
        if size - 1 > u32::MAX as u64 {
            return Err(Error::SizeLimit { size: size.to_string(), cap: u32::MAX as u64 });
        }
        let g = (1..size)
            .map(|i| self.ctx.element(i))
            .find(|x| self.ctx.is_primitive(x).unwrap_or(false))
            .ok_or_else(|| Error::Internal("no primitive element".into()))?;
        let mut table = vec![u32::MAX; size as usize];
        let times_g = self.ctx.multiplication_map(&g);
        let mut x = self.ctx.one().coeffs;
        for e in 0..size - 1 {
            let idx = self.ctx.index_of(&FieldElement { coeffs: x.clone() });
            table[idx as usize] = e as u32;
            x = times_g.apply(&x);
        }
        Ok(table)
    }
}

fn chunks(size: u64) -> Vec<(u64, u64)> {
    (0..size.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(size))).collect()
}

fn check_cap(q: &PrimePowerQ, n: u64, cap: u64) -> Result<()> {
    let size = upow(q.q, n);
    if size > BigUint::from(cap) {
        return Err(Error::SizeLimit { size: format!("{}^{}", q.q, n), cap });
    }
    Ok(())
}

pub fn count_completely_normal(q: &PrimePowerQ, n: u64, config: &OracleConfig) -> Result<u64> {
    check_cap(q, n, config.count_cap)?;
    Ok(FieldSurvey::new(q, n, config.count_cap)?.count_cn())
}

fn rfree(dlog: u32, primes: &[u64]) -> bool {
    primes.iter().all(|&s| dlog as u64 % s != 0)
}

fn small_primes_of(r: &FactoredInteger) -> Vec<u64> {
    r.primes().map(|s| s.to_u64().expect("divisor of a 32-bit group order")).collect()
}

fn check_divides(q: &PrimePowerQ, n: u64, r: &FactoredInteger) -> Result<()> {
    let order = upow(q.q, n) - BigUint::one();
    if !(&order % r.value()).is_zero() {
        return Err(Error::Domain(format!("{} does not divide {}^{} - 1", r.value(), q.q, n)));
    }
    Ok(())
}

/// `CN`, `PCN` and `CN^r` for each `r` in one pass.
pub fn survey_counts(q: &PrimePowerQ, n: u64, rs: &[FactoredInteger], config: &OracleConfig) -> Result<OracleCounts> {
    check_cap(q, n, config.count_cap)?;
    for r in rs {
        check_divides(q, n, r)?;
    }
    let survey = FieldSurvey::new(q, n, config.count_cap)?;
    let bits = survey.cn_bitset();
    let dlog = survey.discrete_log_table()?;
    let all = small_primes_of(survey.context().group_order_factors());
    let r_primes: Vec<Vec<u64>> = rs.iter().map(small_primes_of).collect();
    let mut cn = 0u64;
    let mut pcn = 0u64;
    let mut per = vec![0u64; rs.len()];
    for (w, &word) in bits.iter().enumerate() {
        let mut word = word;
        while word != 0 {
            let i = w * 64 + word.trailing_zeros() as usize;
            word &= word - 1;
            cn += 1;
            let d = dlog[i];
            if rfree(d, &all) {
                pcn += 1;
            }
            for (k, ps) in r_primes.iter().enumerate() {
                if rfree(d, ps) {
                    per[k] += 1;
                }
            }
        }
    }
    let per_r = rs.iter().zip(per).map(|(r, c)| (r.value().to_string(), c)).collect();
    Ok(OracleCounts { q: q.q, n, cn, pcn, per_r })
}

pub fn count_rfree_completely_normal(q: &PrimePowerQ, n: u64, r: &FactoredInteger, config: &OracleConfig) -> Result<u64> {
    let counts = survey_counts(q, n, std::slice::from_ref(r), config)?;
    Ok(counts.per_r[&r.value().to_string()])
}

/// A primitive completely normal element with its position and the field
/// modulus it is expressed in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcnWitness {
    pub q: u64,
    pub n: u64,
    pub index: u64,
    pub element: FieldElement,
    pub modulus: Vec<u64>,
}

/// First primitive completely normal element in enumeration order.
pub fn find_pcn_witness(q: &PrimePowerQ, n: u64, config: &OracleConfig) -> Result<PcnWitness> {
    check_cap(q, n, config.witness_cap)?;
    let survey = FieldSurvey::new(q, n, config.witness_cap)?;
    let ctx = survey.context();
    let found = chunks(ctx.size()).into_par_iter().find_map_first(|(lo, hi)| {
        let mut first = None;
        survey.scan(lo, hi, |i| {
            if ctx.is_primitive(&ctx.element(i)).unwrap_or(false) {
                first = Some(i);
                true
            } else {
                false
            }
        });
        first
    });
    let index = found.ok_or_else(|| Error::NotFound(format!("no primitive completely normal element in F_{}^{}", q.q, n)))?;
    Ok(PcnWitness { q: q.q, n, index, element: ctx.element(index), modulus: ctx.modulus().to_vec() })
}

/// Re-tests a witness: same modulus, primitive, normal over every `F_{q^l}`.
pub fn verify_witness(w: &PcnWitness, config: &OracleConfig) -> Result<bool> {
    let q = PrimePowerQ::new(w.q)?;
    check_cap(&q, w.n, config.witness_cap)?;
    let ctx = FieldContext::for_pair(&q, w.n, config.witness_cap)?;
    if ctx.modulus() != w.modulus.as_slice() || w.element.coeffs.len() != ctx.degree() {
        return Ok(false);
    }
    if w.element.coeffs.iter().any(|&c| c >= ctx.characteristic()) || ctx.is_zero(&w.element) {
        return Ok(false);
    }
    for l in divisors(w.n) {
        if !ctx.is_normal_over(&w.element, &q, w.n, l)? {
            return Ok(false);
        }
    }
    ctx.is_primitive(&w.element)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterBoundReport {
    pub q: u64,
    pub n: u64,
    pub r: String,
    pub cn: u64,
    pub cn_r: u64,
    /// `|CN^r - theta(r) CN|`.
    pub lhs: RationalJson,
    /// Right side divided by `q^{n/2}`.
    pub rhs_over_sqrt_qn: RationalJson,
    pub rhs_log10: f64,
    pub holds: bool,
}

/// `|CN^r - theta(r) CN| <= q^{n/2} W(r) prod_l W_l theta(r) theta(q)` over
/// the proper divisors `l`, compared after squaring.
pub fn verify_character_bound(q: &PrimePowerQ, n: u64, r: &FactoredInteger, config: &OracleConfig) -> Result<CharacterBoundReport> {
    if !r.is_squarefree() {
        return Err(Error::Domain(format!("{} is not square-free", r.value())));
    }
    let counts = survey_counts(q, n, std::slice::from_ref(r), config)?;
    character_bound_from_counts(q, n, r, counts.cn, counts.per_r[&r.value().to_string()])
}

pub(crate) fn character_bound_from_counts(q: &PrimePowerQ, n: u64, r: &FactoredInteger, cn: u64, cn_r: u64) -> Result<CharacterBoundReport> {
    let theta_r = r
        .primes()
        .fold(BigRational::one(), |acc, s| acc * (BigRational::one() - BigRational::new(1.into(), s.clone().into())));
    let lhs = (from_u64(cn_r) - &theta_r * from_u64(cn)).abs();
    let profiles = bundle(q, n)?;
    let factor = from_uint(&r.divisor_count_w()) * profiles.product(ProfileProduct::ProperDivisors) * &theta_r;
    let qn = from_uint(&upow(q.q, n));
    let holds = rational::pow(&lhs, 2) <= &qn * rational::pow(&factor, 2);
    let rhs_log10 = (n as f64 / 2.0) * (q.q as f64).log10() + rational::log10_rational(&factor);
    Ok(CharacterBoundReport {
        q: q.q,
        n,
        r: r.value().to_string(),
        cn,
        cn_r,
        lhs: RationalJson::from(&lhs),
        rhs_over_sqrt_qn: RationalJson::from(&factor),
        rhs_log10,
        holds,
    })
}

/// Every square-free divisor of `q^n - 1`, as factored integers.
pub fn squarefree_divisors(order: &FactoredInteger) -> Vec<FactoredInteger> {
    let primes: Vec<BigUint> = order.primes().cloned().collect();
    let mut out = Vec::with_capacity(1 << primes.len());
    for mask in 0u64..(1 << primes.len()) {
        let chosen = primes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| (p.clone(), 1))
            .collect();
        out.push(FactoredInteger::from_factors(chosen).expect("distinct primes"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension_profile::{is_completely_basic, normal_element_count};
    use crate::number_theory::factor::Factorizer;

    fn pq(q: u64) -> PrimePowerQ {
        PrimePowerQ::new(q).unwrap()
    }

    fn fi(v: &[(u64, u32)]) -> FactoredInteger {
        FactoredInteger::from_factors(v.iter().map(|&(p, e)| (BigUint::from(p), e)).collect()).unwrap()
    }

    #[test]
    fn small_counts() {
        let cfg = OracleConfig::default();
        assert_eq!(count_completely_normal(&pq(2), 2, &cfg).unwrap(), 2);
        assert_eq!(count_completely_normal(&pq(7), 1, &cfg).unwrap(), 6);
        assert_eq!(count_completely_normal(&pq(2), 1, &cfg).unwrap(), 1);
        assert_eq!(count_rfree_completely_normal(&pq(2), 2, &fi(&[(3, 1)]), &cfg).unwrap(), 2);
        assert_eq!(count_rfree_completely_normal(&pq(2), 2, &FactoredInteger::one(), &cfg).unwrap(), 2);
        let big = OracleConfig { count_cap: 1000, ..cfg };
        assert!(matches!(count_completely_normal(&pq(2), 10, &big), Err(Error::SizeLimit { .. })));
        assert!(count_rfree_completely_normal(&pq(2), 2, &fi(&[(5, 1)]), &cfg).is_err());
    }

    #[test]
    fn nonsquare_normal_elements_of_f9() {
        // r = 2 in F_9: 2-free means non-square
        let cfg = OracleConfig::default();
        let ctx = FieldContext::new(3, 2).unwrap();
        let q3 = pq(3);
        let expected = (1..9)
            .map(|i| ctx.element(i))
            .filter(|x| ctx.is_normal_over(x, &q3, 2, 1).unwrap() && ctx.pow(x, 4) != ctx.one())
            .count() as u64;
        assert_eq!(count_rfree_completely_normal(&q3, 2, &fi(&[(2, 1)]), &cfg).unwrap(), expected);
    }

    // Independent completely-normal predicate: for each proper l, the
    // F_p-span of {zeta * x^{q^{l i}}} computed by closing the orbit under
    // addition and subfield scaling must be the whole field.
    fn cn_by_span(ctx: &FieldContext, q: &PrimePowerQ, n: u64, x: &FieldElement) -> bool {
        if ctx.is_zero(x) {
            return false;
        }
        divisors(n).into_iter().filter(|&l| l < n).all(|l| {
            let sub = (q.e as u64 * l) as usize;
            let zetas = ctx.subfield_basis(sub).unwrap();
            let mut gens = Vec::new();
            for i in 0..n / l {
                let y = ctx.frobenius(x, sub as u64 * i);
                for z in &zetas {
                    gens.push(ctx.mul(z, &y));
                }
            }
            let mut seen = vec![false; ctx.size() as usize];
            seen[0] = true;
            let mut span = vec![ctx.zero()];
            for g in &gens {
                let current = span.clone();
                for s in &current {
                    let mut acc = s.clone();
                    for _ in 1..ctx.characteristic() {
                        acc = ctx.add(&acc, g);
                        let idx = ctx.index_of(&acc) as usize;
                        if !seen[idx] {
                            seen[idx] = true;
                            span.push(acc.clone());
                        }
                    }
                }
            }
            span.len() as u64 == ctx.size()
        })
    }

    #[test]
    fn counts_match_span_oracle() {
        for (q, n) in [(2u64, 4u64), (2, 6), (3, 4), (4, 4), (2, 8), (3, 3), (5, 2), (4, 3)] {
            let q = pq(q);
            let survey = FieldSurvey::new(&q, n, 1 << 20).unwrap();
            let ctx = survey.context();
            let brute = (1..ctx.size()).filter(|&i| cn_by_span(ctx, &q, n, &ctx.element(i))).count() as u64;
            assert_eq!(survey.count_cn(), brute, "q={} n={n}", q.q);
            let bits = survey.cn_bitset();
            let from_bits: u64 = bits.iter().map(|w| w.count_ones() as u64).sum();
            assert_eq!(from_bits, brute);
        }
    }

    #[test]
    fn primitive_counts_from_dlog_table() {
        let cfg = OracleConfig::default();
        for (q, n) in [(2u64, 6u64), (3, 4), (5, 3), (4, 4)] {
            let q = pq(q);
            let survey = FieldSurvey::new(&q, n, 1 << 20).unwrap();
            let ctx = survey.context();
            let brute_pcn = (1..ctx.size())
                .map(|i| ctx.element(i))
                .filter(|x| survey.is_completely_normal(x) && ctx.is_primitive(x).unwrap())
                .count() as u64;
            let counts = survey_counts(&q, n, &[], &cfg).unwrap();
            assert_eq!(counts.pcn, brute_pcn);
        }
    }

    #[test]
    fn completely_basic_fields_have_cn_equal_normal() {
        let cfg = OracleConfig::default();
        for q in 2..=64u64 {
            let Ok(q) = PrimePowerQ::new(q) else { continue };
            for n in 1..=20u64 {
                if upow(q.q, n) > BigUint::from(1_000_000u32) {
                    break;
                }
                if is_completely_basic(&q, n) {
                    let cn = count_completely_normal(&q, n, &cfg).unwrap();
                    assert_eq!(BigUint::from(cn), normal_element_count(&q, n, 1).unwrap(), "q={} n={n}", q.q);
                }
            }
        }
    }

    #[test]
    fn witnesses() {
        let cfg = OracleConfig::default();
        let w = find_pcn_witness(&pq(2), 1, &cfg).unwrap();
        assert_eq!(w.index, 1);
        let w = find_pcn_witness(&pq(2), 2, &cfg).unwrap();
        assert!(verify_witness(&w, &cfg).unwrap());
        let w = find_pcn_witness(&pq(5), 6, &cfg).unwrap();
        assert!(verify_witness(&w, &cfg).unwrap());
        let mut bad = w.clone();
        bad.element = FieldContext::new(5, 6).unwrap().one();
        assert!(!verify_witness(&bad, &cfg).unwrap());
    }

    #[test]
    fn character_bound_examples() {
        let cfg = OracleConfig::default();
        assert!(verify_character_bound(&pq(2), 2, &fi(&[(3, 1)]), &cfg).unwrap().holds);
        assert!(verify_character_bound(&pq(3), 2, &fi(&[(2, 1)]), &cfg).unwrap().holds);
        let one = verify_character_bound(&pq(4), 3, &FactoredInteger::one(), &cfg).unwrap();
        assert!(one.holds);
        assert_eq!(one.lhs.num, "0");
        assert!(verify_character_bound(&pq(3), 2, &fi(&[(2, 2)]), &cfg).is_err());
    }

    #[test]
    fn rfree_counts_are_monotone_in_r() {
        let cfg = OracleConfig::default();
        let f = Factorizer::default();
        for (q, n) in [(2u64, 6u64), (3, 4), (5, 4), (4, 3)] {
            let q = pq(q);
            let order = f.factor_q_n_minus_1(q.q, n).unwrap();
            let rs = squarefree_divisors(&order);
            let counts = survey_counts(&q, n, &rs, &cfg).unwrap();
            for a in &rs {
                for b in &rs {
                    if (a.value() % b.value()).is_zero() {
                        let (ca, cb) = (counts.per_r[&a.value().to_string()], counts.per_r[&b.value().to_string()]);
                        assert!(ca <= cb);
                    }
                }
            }
            assert!(counts.pcn <= counts.cn && counts.cn < upow(q.q, n).to_u64().unwrap());
        }
    }
}
