//! Lenstra's elliptic curve method on Montgomery curves with Suyama's
//! parametrization: stage 1 by the Montgomery ladder, stage 2 by baby-step
//! giant-step over primes up to `100 * B1`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::primes::primes_up_to;

/// `(B1, curves)`, tried in order.
const LEVELS: [(u64, u64); 4] = [(2_000, 25), (11_000, 90), (50_000, 300), (250_000, 700)];
const D: u64 = 210;

#[derive(Clone)]
struct Point {
    x: BigUint,
    z: BigUint,
}

struct Curve<'a> {
    n: &'a BigUint,
    a24: BigUint,
}

impl Curve<'_> {
    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % self.n
    }

    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if &s >= self.n {
            s - self.n
        } else {
            s
        }
    }

    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            a + self.n - b
        }
    }

    fn dbl(&self, p: &Point) -> Point {
        let s = self.add(&p.x, &p.z);
        let d = self.sub(&p.x, &p.z);
        let t1 = self.mul(&s, &s);
        let t2 = self.mul(&d, &d);
        let t3 = self.sub(&t1, &t2);
        let z = self.mul(&t3, &self.add(&t2, &self.mul(&self.a24, &t3)));
        Point { x: self.mul(&t1, &t2), z }
    }

    /// `p + q` given `p - q`.
    fn diff_add(&self, p: &Point, q: &Point, diff: &Point) -> Point {
        let u = self.mul(&self.sub(&p.x, &p.z), &self.add(&q.x, &q.z));
        let v = self.mul(&self.add(&p.x, &p.z), &self.sub(&q.x, &q.z));
        let s = self.add(&u, &v);
        let d = self.sub(&u, &v);
        Point { x: self.mul(&diff.z, &self.mul(&s, &s)), z: self.mul(&diff.x, &self.mul(&d, &d)) }
    }

    fn ladder(&self, p: &Point, k: u64) -> Point {
        let mut r0 = p.clone();
        let mut r1 = self.dbl(p);
        let top = 63 - k.leading_zeros();
        for bit in (0..top).rev() {
            if (k >> bit) & 1 == 1 {
                r0 = self.diff_add(&r1, &r0, p);
                r1 = self.dbl(&r1);
            } else {
                r1 = self.diff_add(&r0, &r1, p);
                r0 = self.dbl(&r0);
            }
        }
        r0
    }
}

enum Setup<'a> {
    Curve(Curve<'a>, Point),
    Factor(BigUint),
    Skip,
}

fn suyama(n: &BigUint, sigma: u64) -> Setup<'_> {
    let s = BigUint::from(sigma) % n;
    let u = (&s * &s + n - BigUint::from(5u32) % n) % n;
    let v = (BigUint::from(4u32) * &s) % n;
    let u3 = u.modpow(&BigUint::from(3u32), n);
    let v3 = v.modpow(&BigUint::from(3u32), n);
    let vu = (&v + n - &u) % n;
    let num = (vu.modpow(&BigUint::from(3u32), n) * ((BigUint::from(3u32) * &u + &v) % n)) % n;
    let den = (BigUint::from(16u32) * &u3 % n) * &v % n;
    let g = den.gcd(n);
    if &g == n || den.is_zero() {
        return Setup::Skip;
    }
    if !g.is_one() {
        return Setup::Factor(g);
    }
    let inv = den.modinv(n).expect("unit");
    Setup::Curve(Curve { n, a24: num * inv % n }, Point { x: u3, z: v3 })
}

fn proper(g: BigUint, n: &BigUint) -> Option<BigUint> {
    (!g.is_one() && &g != n).then_some(g)
}

struct Level {
    b1: u64,
    b2: u64,
    stage1: Vec<u64>,
    is_prime: Vec<u64>,
}

impl Level {
    fn new(b1: u64) -> Self {
        let b2 = 100 * b1;
        let primes = primes_up_to(b2 + D);
        let stage1 = primes
            .iter()
            .take_while(|&&p| p <= b1)
            .map(|&p| {
                let mut pk = p;
                while pk * p <= b1 {
                    pk *= p;
                }
                pk
            })
            .collect();
        let mut is_prime = vec![0u64; (b2 + D) as usize / 64 + 1];
        for p in primes {
            is_prime[p as usize / 64] |= 1 << (p % 64);
        }
        Level { b1, b2, stage1, is_prime }
    }

    fn prime(&self, k: u64) -> bool {
        k > self.b1 && k <= self.b2 && self.is_prime[k as usize / 64] >> (k % 64) & 1 == 1
    }

    /// Rough number of modular multiplications per curve.
    fn cost(b1: u64) -> u64 {
        let b2 = (100 * b1) as f64;
        (16.0 * b1 as f64 + 3.0 * b2 / b2.ln()) as u64
    }

    fn run(&self, n: &BigUint, sigma: u64) -> Option<BigUint> {
        let (curve, mut q) = match suyama(n, sigma) {
            Setup::Curve(c, p) => (c, p),
            Setup::Factor(g) => return Some(g),
            Setup::Skip => return None,
        };
        for &pk in &self.stage1 {
            q = curve.ladder(&q, pk);
        }
        let g = q.z.gcd(n);
        if !g.is_one() {
            return proper(g, n);
        }

        let q2 = curve.dbl(&q);
        let mut odd = vec![q.clone(), curve.diff_add(&q2, &q, &q)];
        while (odd.len() as u64) * 2 < D / 2 {
            let k = odd.len();
            odd.push(curve.diff_add(&odd[k - 1], &q2, &odd[k - 2]));
        }
        let baby: Vec<(u64, &Point)> = odd
            .iter()
            .enumerate()
            .map(|(i, p)| (2 * i as u64 + 1, p))
            .filter(|(j, _)| j.gcd(&D) == 1)
            .collect();
        let step = curve.ladder(&q, D);
        let mut m = (self.b1 / D).max(2);
        let mut prev = curve.ladder(&q, (m - 1) * D);
        let mut giant = curve.ladder(&q, m * D);
        let mut acc = BigUint::one();
        while m * D <= self.b2 + D {
            for &(j, b) in &baby {
                if self.prime(m * D - j) || self.prime(m * D + j) {
                    let t = curve.sub(&curve.mul(&giant.x, &b.z), &curve.mul(&b.x, &giant.z));
                    acc = curve.mul(&acc, &t);
                }
            }
            let next = curve.diff_add(&giant, &step, &prev);
            prev = std::mem::replace(&mut giant, next);
            m += 1;
        }
        proper(acc.gcd(n), n)
    }
}

/// A nontrivial factor of the odd composite `n`, spending at most about
/// `budget` modular multiplications.
pub(crate) fn find_factor(n: &BigUint, budget: u64) -> Option<BigUint> {
    let mut spent = 0u64;
    let mut sigma = 6u64;
    for (b1, curves) in LEVELS {
        let affordable = (budget.saturating_sub(spent) / Level::cost(b1)).min(curves);
        if affordable == 0 {
            return None;
        }
        let level = Level::new(b1);
        let found = (sigma..sigma + affordable).into_par_iter().find_map_first(|s| level.run(n, s));
        if found.is_some() {
            return found;
        }
        spent += affordable * Level::cost(b1);
        sigma += affordable;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_a_nineteen_digit_factor() {
        let p: BigUint = "5789644155060072001".parse().unwrap();
        let q: BigUint = "874189773856249734968757238372561".parse().unwrap();
        let d = find_factor(&(&p * &q), 1 << 30).unwrap();
        assert!(d == p || d == q);
    }

    #[test]
    fn respects_budget() {
        let n = BigUint::from(1_000_000_007u64) * BigUint::from(998_244_353u64);
        assert!(find_factor(&n, 100).is_none());
    }
}
