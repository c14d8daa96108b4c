//! Cyclotomic structure of `X^{n/l} - 1` over the intermediate fields
//! `F_{q^l}`, derived from multiplicative orders alone.
//!
//! Over `F_Q` (`Q = q^l`) the square-free part of `X^{n/l} - 1` is
//! `X^{m_l} - 1`, where `m_l` is the `p`-free part of `n/l`. For each
//! `d | m_l` it contributes `phi(d) / ord_d(Q)` irreducible factors of degree
//! `ord_d(Q)`. Everything here (`W_l`, `theta_l`, normal counts) follows from
//! that list of factor classes.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number_theory::{divisors, euler_phi, order_of_power, p_free_part, split_p_part, PairContext, PrimePowerQ};
use crate::rational::{self, from_uint, upow};

/// Irreducible factors of `X^{m_l} - 1` contributed by one divisor `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorClass {
    pub d: u64,
    /// Degree of each factor, `ord_d(q^l)`.
    pub degree: u64,
    /// Number of factors, `phi(d) / degree`.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionProfile {
    pub l: u64,
    pub m_l: u64,
    pub wild_exp: u32,
    pub factor_classes: Vec<FactorClass>,
    pub distinct_count: u64,
    #[serde(serialize_with = "rational::ser_biguint", deserialize_with = "rational::de_biguint")]
    pub w: BigUint,
    #[serde(serialize_with = "rational::ser_rational", deserialize_with = "rational::de_rational")]
    pub theta: BigRational,
}

impl ExtensionProfile {
    /// `W_l * theta_l`.
    pub fn weighted(&self) -> BigRational {
        from_uint(&self.w) * &self.theta
    }
}

/// Profiles for every proper divisor `l` of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBundle {
    pub pair: PairContext,
    pub profiles: Vec<ExtensionProfile>,
    #[serde(serialize_with = "rational::ser_rational", deserialize_with = "rational::de_rational")]
    pub theta_q: BigRational,
    #[serde(serialize_with = "rational::ser_biguint", deserialize_with = "rational::de_biguint")]
    pub w_product: BigUint,
}

/// Which divisors enter `prod W_l theta_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileProduct {
    /// Proper divisors `l < n` only.
    ProperDivisors,
    /// Proper divisors plus the trivial factor of `l = n`
    /// (`W_n = 2`, `theta_n = 1 - q^{-n}`), which only enlarges the product.
    #[default]
    WithTrivialTop,
}

impl ProfileBundle {
    /// `prod_l W_l theta_l` under the chosen convention.
    pub fn product(&self, mode: ProfileProduct) -> BigRational {
        let base = from_uint(&self.w_product) * &self.theta_q;
        match mode {
            ProfileProduct::ProperDivisors => base,
            ProfileProduct::WithTrivialTop => {
                let qn = upow(self.pair.q(), self.pair.n);
                let top = BigRational::new(
                    (BigUint::from(2u32) * (&qn - BigUint::one())).into(),
                    qn.into(),
                );
                base * top
            }
        }
    }
}

/// Structure of `X^{n/l} - 1` over `F_{q^l}`; `l = n` is the trivial profile.
pub fn profile(q: &PrimePowerQ, n: u64, l: u64) -> Result<ExtensionProfile> {
    if l == 0 || n % l != 0 {
        return Err(Error::Domain(format!("{l} does not divide {n}")));
    }
    let (wild_exp, m_l) = split_p_part(n / l, q.p);
    let mut classes = Vec::new();
    let mut numer = BigUint::one();
    for d in divisors(m_l) {
        let degree = order_of_power(q.q, l, d)?;
        let count = euler_phi(d) / degree;
        numer *= (upow(q.q, l * degree) - BigUint::one()).pow(count as u32);
        classes.push(FactorClass { d, degree, count });
    }
    let distinct_count: u64 = classes.iter().map(|c| c.count).sum();
    let theta = BigRational::new(numer.into(), upow(q.q, l * m_l).into());
    Ok(ExtensionProfile {
        l,
        m_l,
        wild_exp,
        factor_classes: classes,
        distinct_count,
        w: BigUint::one() << distinct_count as usize,
        theta,
    })
}

pub fn bundle(q: &PrimePowerQ, n: u64) -> Result<ProfileBundle> {
    let pair = PairContext::new(q.q, n)?;
    let profiles = divisors(n)
        .into_iter()
        .filter(|&l| l < n)
        .map(|l| profile(q, n, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(pair, profiles))
}

fn assemble(pair: PairContext, profiles: Vec<ExtensionProfile>) -> ProfileBundle {
    let theta_q = rational::product(profiles.iter().map(|p| &p.theta));
    let w_product = profiles.iter().fold(BigUint::one(), |acc, p| acc * &p.w);
    ProfileBundle { pair, profiles, theta_q, w_product }
}

/// Number of elements of `F_{q^n}` normal over `F_{q^l}`:
/// `q^n prod_d (1 - q^{-l deg_d})^{count_d}`.
pub fn normal_element_count(q: &PrimePowerQ, n: u64, l: u64) -> Result<BigUint> {
    let prof = profile(q, n, l)?;
    let mut count = upow(q.q, n - l * prof.m_l);
    for class in &prof.factor_classes {
        count *= (upow(q.q, l * class.degree) - BigUint::one()).pow(class.count as u32);
    }
    Ok(count)
}

/// Every normal element of `F_{q^n}` is completely normal iff for each prime
/// `r | n`, `r` does not divide `ord_{(n/r)'}(q)` (`'` = `p`-free part).
pub fn is_completely_basic(q: &PrimePowerQ, n: u64) -> bool {
    crate::number_theory::factor_u64(n).iter().all(|&(r, _)| {
        let k = p_free_part(n / r, q.p);
        let ord = crate::number_theory::multiplicative_order(q.q, k).expect("p-free modulus is coprime to q");
        ord % r != 0
    })
}

/// Memo table for profiles keyed by `(q, n, l)`.
#[derive(Debug, Default)]
pub struct ProfileCache {
    table: RwLock<HashMap<(u64, u64, u64), Arc<ExtensionProfile>>>,
}

impl ProfileCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn profile(&self, q: &PrimePowerQ, n: u64, l: u64) -> Result<Arc<ExtensionProfile>> {
        let key = (q.q, n, l);
        if let Some(hit) = self.table.read().expect("profile lock").get(&key) {
            return Ok(hit.clone());
        }
        let fresh = Arc::new(profile(q, n, l)?);
        self.table
            .write()
            .expect("profile lock")
            .insert(key, fresh.clone());
        Ok(fresh)
    }

    pub fn bundle(&self, q: &PrimePowerQ, n: u64) -> Result<ProfileBundle> {
        let pair = PairContext::new(q.q, n)?;
        let profiles = divisors(n)
            .into_iter()
            .filter(|&l| l < n)
            .map(|l| self.profile(q, n, l).map(|p| (*p).clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(assemble(pair, profiles))
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("profile lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn pq(q: u64) -> PrimePowerQ {
        PrimePowerQ::new(q).unwrap()
    }

    #[test]
    fn profile_examples() {
        let p = profile(&pq(2), 4, 1).unwrap();
        assert_eq!((p.m_l, p.distinct_count, p.wild_exp), (1, 1, 2));
        assert_eq!(p.w, BigUint::from(2u32));
        assert_eq!(p.theta, ratio(1, 2));

        let p = profile(&pq(2), 6, 1).unwrap();
        assert_eq!(p.m_l, 3);
        assert_eq!(
            p.factor_classes,
            vec![FactorClass { d: 1, degree: 1, count: 1 }, FactorClass { d: 3, degree: 2, count: 1 }]
        );
        assert_eq!(p.w, BigUint::from(4u32));
        assert_eq!(p.theta, ratio(3, 8));

        let p = profile(&pq(2), 6, 3).unwrap();
        assert_eq!((p.m_l, p.distinct_count), (1, 1));
        assert_eq!(p.theta, ratio(7, 8));

        assert!(profile(&pq(2), 6, 4).is_err());
    }

    #[test]
    fn bundle_examples() {
        let b = bundle(&pq(2), 2).unwrap();
        assert_eq!(b.profiles.len(), 1);
        assert_eq!(b.w_product, BigUint::from(2u32));
        assert_eq!(b.theta_q, ratio(1, 2));

        // over F_4, X^3 - 1 splits into three linear factors: W_2 = 8
        let b = bundle(&pq(2), 6).unwrap();
        let ls: Vec<u64> = b.profiles.iter().map(|p| p.l).collect();
        assert_eq!(ls, vec![1, 2, 3]);
        assert_eq!(b.profiles[1].w, BigUint::from(8u32));
        assert_eq!(b.w_product, BigUint::from(4u32 * 8 * 2));

        let b = bundle(&pq(3), 4).unwrap();
        let ls: Vec<u64> = b.profiles.iter().map(|p| p.l).collect();
        assert_eq!(ls, vec![1, 2]);
        // X^4-1 over F_3: (X-1)(X+1)(X^2+1); X^2-1 over F_9: two linear
        assert_eq!(b.w_product, BigUint::from(8u32 * 4));
    }

    #[test]
    fn normal_counts() {
        assert_eq!(normal_element_count(&pq(2), 4, 1).unwrap(), BigUint::from(8u32));
        assert_eq!(normal_element_count(&pq(7), 1, 1).unwrap(), BigUint::from(6u32));
        assert_eq!(normal_element_count(&pq(2), 2, 1).unwrap(), BigUint::from(2u32));
        assert_eq!(normal_element_count(&pq(5), 6, 6).unwrap(), upow(5, 6) - BigUint::one());
    }

    #[test]
    fn completely_basic_examples() {
        assert!(is_completely_basic(&pq(2), 4));
        assert!(!is_completely_basic(&pq(2), 6));
        for q in [2u64, 3, 4, 5, 7, 8, 9, 11] {
            for r in [2u64, 3, 5, 7, 11, 13] {
                assert!(is_completely_basic(&pq(q), r));
            }
        }
    }

    #[test]
    fn profile_invariants() {
        for q in [2u64, 3, 4, 5, 7, 8, 9, 16, 25, 27] {
            let pq = pq(q);
            for n in 1..=36u64 {
                for l in divisors(n) {
                    let p = profile(&pq, n, l).unwrap();
                    let deg: u64 = p.factor_classes.iter().map(|c| c.count * c.degree).sum();
                    assert_eq!(deg, p.m_l);
                    assert_eq!(p.w, BigUint::one() << p.distinct_count as usize);
                    let phi = p.factor_classes.iter().fold(BigUint::one(), |acc, c| {
                        acc * (upow(q, l * c.degree) - BigUint::one()).pow(c.count as u32)
                    });
                    assert_eq!(p.theta, from_uint(&phi) / from_uint(&upow(q, l * p.m_l)));
                    assert!(p.theta > ratio(0, 1) && p.theta <= ratio(1, 1));
                }
            }
        }
    }

    #[test]
    fn trivial_top_factor() {
        let b = bundle(&pq(2), 2).unwrap();
        assert_eq!(b.product(ProfileProduct::ProperDivisors), ratio(1, 1));
        // 2 * 1/2 * 2 * (1 - 1/4)
        assert_eq!(b.product(ProfileProduct::WithTrivialTop), ratio(3, 2));
    }

    #[test]
    fn cache_reuses_entries() {
        let cache = ProfileCache::new();
        let a = cache.bundle(&pq(3), 12).unwrap();
        let filled = cache.len();
        let b = cache.bundle(&pq(3), 12).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), filled);
        assert_eq!(a, bundle(&pq(3), 12).unwrap());
    }
}
