//! Arithmetic in `F_{p^k} = F_p[X]/(f)` for a deterministic modulus `f`.
//!
//! Intermediate fields `F_{q^l}` are never represented separately: they are
//! the fixed points of `x -> x^{q^l}`, with an `F_p`-basis obtained from the
//! null space of that Frobenius power minus the identity. Normality over
//! `F_{q^l}` then reduces to an `F_p` rank computation.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::number_theory::{factor_u64, is_prime_u64, mul_mod, FactoredInteger, PrimePowerQ};

/// Largest supported absolute degree.
pub const MAX_DEGREE: usize = 40;
/// Default cap on `p^k` for building a field.
pub const DEFAULT_FIELD_CAP: u64 = 1 << 40;

/// Coordinates in the power basis `1, X, ..., X^{k-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct FieldElement {
    pub coeffs: Vec<u64>,
}

/// `F_p`-linear endomorphism of `F_p^k`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearMap {
    k: usize,
    p: u64,
    rows: Vec<u64>,
}

impl LinearMap {
    pub fn identity(k: usize, p: u64) -> Self {
        let mut rows = vec![0; k * k];
        for i in 0..k {
            rows[i * k + i] = 1;
        }
        LinearMap { k, p, rows }
    }

    fn from_columns(k: usize, p: u64, cols: &[Vec<u64>]) -> Self {
        let mut rows = vec![0; k * k];
        for (c, col) in cols.iter().enumerate() {
            for r in 0..k {
                rows[r * k + c] = col[r];
            }
        }
        LinearMap { k, p, rows }
    }

    pub fn entry(&self, r: usize, c: usize) -> u64 {
        self.rows[r * self.k + c]
    }

    pub fn apply(&self, x: &[u64]) -> Vec<u64> {
        (0..self.k)
            .map(|r| {
                let row = &self.rows[r * self.k..(r + 1) * self.k];
                row.iter()
                    .zip(x)
                    .fold(0u64, |acc, (&a, &b)| (acc + mul_mod(a, b, self.p)) % self.p)
            })
            .collect()
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        let k = self.k;
        let mut rows = vec![0; k * k];
        for r in 0..k {
            for c in 0..k {
                let mut acc = 0u64;
                for t in 0..k {
                    acc = (acc + mul_mod(self.rows[r * k + t], other.rows[t * k + c], self.p)) % self.p;
                }
                rows[r * k + c] = acc;
            }
        }
        LinearMap { k, p: self.p, rows }
    }

    pub fn pow(&self, mut e: u64) -> LinearMap {
        let mut acc = LinearMap::identity(self.k, self.p);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// Basis of `{x : self(x) = x}`.
    pub fn fixed_space(&self) -> Vec<Vec<u64>> {
        let mut m = self.clone();
        for i in 0..self.k {
            let v = &mut m.rows[i * self.k + i];
            *v = (*v + self.p - 1) % self.p;
        }
        m.null_space()
    }

    /// Basis of the kernel, via reduced row echelon form.
    pub fn null_space(&self) -> Vec<Vec<u64>> {
        let (k, p) = (self.k, self.p);
        let mut a = self.rows.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..k {
            let Some(sel) = (row..k).find(|&r| a[r * k + col] != 0) else { continue };
            for c in 0..k {
                a.swap(row * k + c, sel * k + c);
            }
            let inv = inv_mod(a[row * k + col], p);
            for c in 0..k {
                a[row * k + c] = mul_mod(a[row * k + c], inv, p);
            }
            for r in 0..k {
                if r != row && a[r * k + col] != 0 {
                    let f = a[r * k + col];
                    for c in 0..k {
                        let sub = mul_mod(f, a[row * k + c], p);
                        a[r * k + c] = (a[r * k + c] + p - sub) % p;
                    }
                }
            }
            pivots.push(col);
            row += 1;
            if row == k {
                break;
            }
        }
        let free: Vec<usize> = (0..k).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![0u64; k];
                v[fc] = 1;
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = (p - a[r * k + fc]) % p;
                }
                v
            })
            .collect()
    }
}

pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    let (g, x, _) = ext_gcd(a as i128, p as i128);
    debug_assert_eq!(g, 1);
    x.rem_euclid(p as i128) as u64
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// The ambient field `F_{p^k}`.
#[derive(Debug, Clone)]
pub struct FieldContext {
    p: u64,
    k: usize,
    size: u64,
    modulus: Vec<u64>,
    group_order_factors: FactoredInteger,
    frobenius: LinearMap,
}

impl FieldContext {
    /// Builds `F_{p^k}` with the default size cap.
    pub fn new(p: u64, k: usize) -> Result<Self> {
        Self::with_cap(p, k, DEFAULT_FIELD_CAP)
    }

    pub fn with_cap(p: u64, k: usize, cap: u64) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if k == 0 || k > MAX_DEGREE {
            return Err(Error::Domain(format!("degree {k} outside 1..={MAX_DEGREE}")));
        }
        let size = (p as u128).checked_pow(k as u32).filter(|&s| s <= cap as u128).ok_or_else(|| {
            Error::SizeLimit { size: format!("{p}^{k}"), cap }
        })? as u64;
        let modulus = smallest_irreducible(p, k);
        let group_order_factors = FactoredInteger::from_factors(
            factor_u64(size - 1)
                .into_iter()
                .map(|(q, e)| (BigUint::from(q), e))
                .collect(),
        )?;
        let mut ctx = FieldContext {
            p,
            k,
            size,
            modulus,
            group_order_factors,
            frobenius: LinearMap::identity(k, p),
        };
        let cols: Vec<Vec<u64>> = (0..k)
            .map(|c| {
                let mut basis = vec![0u64; k];
                basis[c] = 1;
                ctx.pow(&FieldElement { coeffs: basis }, p).coeffs
            })
            .collect();
        ctx.frobenius = LinearMap::from_columns(k, p, &cols);
        Ok(ctx)
    }

    /// The field `F_{q^n}` as an extension of degree `e n` of `F_p`.
    pub fn for_pair(q: &PrimePowerQ, n: u64, cap: u64) -> Result<Self> {
        let k = q.e as u64 * n;
        if k as usize > MAX_DEGREE {
            return Err(Error::SizeLimit { size: format!("{}^{}", q.q, n), cap });
        }
        Self::with_cap(q.p, k as usize, cap)
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// `p^k`.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Monic modulus, constant term first.
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn group_order_factors(&self) -> &FactoredInteger {
        &self.group_order_factors
    }

    /// Matrix of `x -> x^p`.
    pub fn frobenius_map(&self) -> &LinearMap {
        &self.frobenius
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { coeffs: vec![0; self.k] }
    }

    pub fn one(&self) -> FieldElement {
        let mut c = vec![0; self.k];
        c[0] = 1;
        FieldElement { coeffs: c }
    }

    /// Element at `index` in base-`p` counting order (constant term least
    /// significant).
    pub fn element(&self, mut index: u64) -> FieldElement {
        let mut coeffs = vec![0; self.k];
        for c in coeffs.iter_mut() {
            *c = index % self.p;
            index /= self.p;
        }
        FieldElement { coeffs }
    }

    pub fn index_of(&self, x: &FieldElement) -> u64 {
        x.coeffs.iter().rev().fold(0u64, |acc, &c| acc * self.p + c)
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x + y) % self.p).collect(),
        }
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement { coeffs: poly_mul_mod(&a.coeffs, &b.coeffs, &self.modulus, self.p) }
    }

    pub fn pow(&self, a: &FieldElement, mut e: u64) -> FieldElement {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// `a^(p^steps)` via the Frobenius matrix.
    pub fn frobenius(&self, a: &FieldElement, steps: u64) -> FieldElement {
        let mut x = a.coeffs.clone();
        for _ in 0..steps % self.k as u64 {
            x = self.frobenius.apply(&x);
        }
        FieldElement { coeffs: x }
    }

    pub fn is_zero(&self, a: &FieldElement) -> bool {
        a.coeffs.iter().all(|&c| c == 0)
    }

    /// `x` is `r`-free iff `x^((p^k - 1)/s) != 1` for every prime `s | r`.
    pub fn is_r_free(&self, x: &FieldElement, r: &FactoredInteger) -> Result<bool> {
        let order = BigUint::from(self.size - 1);
        if !(&order % r.value()).is_zero() {
            return Err(Error::Domain(format!("{} does not divide {}", r.value(), order)));
        }
        if self.is_zero(x) {
            return Err(Error::ZeroElement);
        }
        let one = self.one();
        Ok(r.primes().all(|s| {
            let s = s.to_u64().expect("divisor of a 64-bit order");
            self.pow(x, (self.size - 1) / s) != one
        }))
    }

    pub fn is_primitive(&self, x: &FieldElement) -> Result<bool> {
        self.is_r_free(x, &self.group_order_factors.clone())
    }

    /// Basis over `F_p` of the subfield with `p^degree` elements.
    pub fn subfield_basis(&self, degree: usize) -> Result<Vec<FieldElement>> {
        if degree == 0 || self.k % degree != 0 {
            return Err(Error::Domain(format!("no subfield of degree {degree} in degree {}", self.k)));
        }
        let basis = self.frobenius.pow(degree as u64).fixed_space();
        if basis.len() != degree {
            return Err(Error::Internal("subfield dimension mismatch".into()));
        }
        Ok(basis.into_iter().map(|coeffs| FieldElement { coeffs }).collect())
    }

    /// Matrix of multiplication by `z`.
    pub fn multiplication_map(&self, z: &FieldElement) -> LinearMap {
        let cols: Vec<Vec<u64>> = (0..self.k)
            .map(|c| {
                let mut basis = vec![0u64; self.k];
                basis[c] = 1;
                self.mul(z, &FieldElement { coeffs: basis }).coeffs
            })
            .collect();
        LinearMap::from_columns(self.k, self.p, &cols)
    }

    /// Whether `x` is normal over `F_{q^l}` inside this field `F_{q^n}`.
    pub fn is_normal_over(&self, x: &FieldElement, q: &PrimePowerQ, n: u64, l: u64) -> Result<bool> {
        let tester = NormalityTester::new(self, q, n, l)?;
        Ok(tester.is_normal(&x.coeffs, &mut tester.scratch()))
    }
}

fn poly_mul_mod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let k = modulus.len() - 1;
    let mut prod = vec![0u64; 2 * k.max(1) - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    for i in (k..prod.len()).rev() {
        let t = prod[i];
        if t == 0 {
            continue;
        }
        for j in 0..k {
            let sub = mul_mod(t, modulus[j], p);
            prod[i - k + j] = (prod[i - k + j] + p - sub) % p;
        }
        prod[i] = 0;
    }
    prod.truncate(k);
    prod.resize(k, 0);
    prod
}

// ----- polynomials over F_p, used only to pick the modulus -----

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = trim(a.to_vec());
    let m = trim(m.to_vec());
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    while r.len() > dm && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let t = mul_mod(r[dr], lead_inv, p);
        for j in 0..=dm {
            let sub = mul_mod(t, m[j], p);
            r[dr - dm + j] = (r[dr - dm + j] + p - sub) % p;
        }
        r = trim(r);
        if dr == 0 {
            break;
        }
    }
    r
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !(b.len() == 1 && b[0] == 0) {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn poly_pow_mod(base: &[u64], mut e: u64, modulus: &[u64], p: u64) -> Vec<u64> {
    let k = modulus.len() - 1;
    let mut acc = vec![0u64; k];
    acc[0] = 1;
    let mut b = base.to_vec();
    b.resize(k, 0);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mul_mod(&acc, &b, modulus, p);
        }
        e >>= 1;
        if e > 0 {
            b = poly_mul_mod(&b, &b, modulus, p);
        }
    }
    acc
}

/// Rabin's test: `f | X^{p^k} - X` and `gcd(X^{p^{k/r}} - X, f) = 1` for
/// each prime `r | k`.
pub fn is_irreducible(f: &[u64], p: u64) -> bool {
    let k = f.len() - 1;
    if k == 1 {
        return true;
    }
    if f[0] == 0 {
        return false;
    }
    let mut x = vec![0u64; k];
    x[1] = 1;
    // frob[i] = X^{p^i} mod f
    let mut frob = vec![x.clone()];
    for i in 0..k {
        let next = poly_pow_mod(&frob[i], p, f, p);
        frob.push(next);
    }
    if frob[k] != x {
        return false;
    }
    factor_u64(k as u64).iter().all(|&(r, _)| {
        let mut h = frob[k / r as usize].clone();
        h[1] = (h[1] + p - 1) % p;
        let g = poly_gcd(f, &h, p);
        g.len() == 1
    })
}

/// Smallest irreducible monic of degree `k` in base-`p` counting order of
/// its lower coefficients (constant term least significant).
pub fn smallest_irreducible(p: u64, k: usize) -> Vec<u64> {
    let mut coeffs = vec![0u64; k + 1];
    coeffs[k] = 1;
    if k == 1 {
        return coeffs;
    }
    loop {
        if is_irreducible(&coeffs, p) {
            return coeffs;
        }
        // increment the base-p counter in coeffs[0..k]
        let mut i = 0;
        loop {
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            i += 1;
            assert!(i < k, "an irreducible polynomial of every degree exists");
        }
    }
}

/// Precomputed rank test for normality over `F_{q^l}`.
///
/// Holds the `k` maps `x -> zeta_j * sigma^i(x)` where `sigma = x^{q^l}` and
/// `zeta_j` runs over an `F_p`-basis of `F_{q^l}`; `x` is normal exactly when
/// their images are `F_p`-independent.
#[derive(Debug, Clone)]
pub struct NormalityTester {
    k: usize,
    p: u64,
    l: u64,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    /// Everything trivially normal (`l = n`).
    Trivial,
    /// `p = 2`: `cols[map * k + c]` is the bitmask image of basis vector `c`.
    Binary { cols: Vec<u64> },
    /// Odd `p`: `rows[map * k * k + r * k + c]`, plus an inverse table.
    Odd { rows: Vec<u64>, inverses: Vec<u64> },
}

/// Reusable buffers for [`NormalityTester::is_normal`].
#[derive(Debug, Clone)]
pub struct Scratch {
    basis: Vec<u64>,
    pivots: Vec<usize>,
    v: Vec<u64>,
}

impl NormalityTester {
    pub fn new(ctx: &FieldContext, q: &PrimePowerQ, n: u64, l: u64) -> Result<Self> {
        if l == 0 || n % l != 0 {
            return Err(Error::Domain(format!("{l} does not divide {n}")));
        }
        if ctx.p != q.p || ctx.k as u64 != q.e as u64 * n {
            return Err(Error::Domain("field context is not F_{q^n}".into()));
        }
        let (k, p) = (ctx.k, ctx.p);
        if l == n {
            return Ok(NormalityTester { k, p, l, kernel: Kernel::Trivial });
        }
        let sub_degree = (q.e as u64 * l) as usize;
        let sigma = ctx.frobenius.pow(sub_degree as u64);
        let zetas: Vec<LinearMap> = ctx
            .subfield_basis(sub_degree)?
            .iter()
            .map(|z| ctx.multiplication_map(z))
            .collect();
        let mut maps = Vec::with_capacity(k);
        let mut power = LinearMap::identity(k, p);
        for _ in 0..n / l {
            for z in &zetas {
                maps.push(z.compose(&power));
            }
            power = sigma.compose(&power);
        }
        let kernel = if p == 2 {
            let mut cols = Vec::with_capacity(k * k);
            for m in &maps {
                for c in 0..k {
                    let mask = (0..k).fold(0u64, |acc, r| acc | (m.entry(r, c) << r));
                    cols.push(mask);
                }
            }
            Kernel::Binary { cols }
        } else {
            let rows = maps.iter().flat_map(|m| m.rows.iter().copied()).collect();
            let inverses = if p <= 1 << 16 {
                let mut inv = vec![0u64; p as usize];
                for a in 1..p {
                    inv[a as usize] = inv_mod(a, p);
                }
                inv
            } else {
                Vec::new()
            };
            Kernel::Odd { rows, inverses }
        };
        Ok(NormalityTester { k, p, l, kernel })
    }

    pub fn divisor(&self) -> u64 {
        self.l
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            basis: vec![0; self.k * self.k],
            pivots: vec![0; self.k],
            v: vec![0; self.k],
        }
    }

    /// Rank test on an element given by coordinates. Zero is never normal
    /// over a proper subfield.
    pub fn is_normal(&self, x: &[u64], scratch: &mut Scratch) -> bool {
        match &self.kernel {
            Kernel::Trivial => x.iter().any(|&c| c != 0),
            Kernel::Binary { .. } => {
                let bits = x.iter().enumerate().fold(0u64, |acc, (i, &c)| acc | (c << i));
                self.is_normal_bits(bits)
            }
            Kernel::Odd { rows, inverses } => self.odd_rank(rows, inverses, x, scratch),
        }
    }

    /// Binary fast path: `x` given as the bitmask of its coordinates.
    pub fn is_normal_bits(&self, x: u64) -> bool {
        let Kernel::Binary { cols } = &self.kernel else {
            return match self.kernel {
                Kernel::Trivial => x != 0,
                _ => panic!("is_normal_bits on an odd-characteristic tester"),
            };
        };
        let k = self.k;
        let mut basis = [0u64; 64];
        for map in 0..k {
            let base = &cols[map * k..(map + 1) * k];
            let mut v = 0u64;
            let mut bits = x;
            while bits != 0 {
                let c = bits.trailing_zeros() as usize;
                v ^= base[c];
                bits &= bits - 1;
            }
            loop {
                if v == 0 {
                    return false;
                }
                let h = 63 - v.leading_zeros() as usize;
                if basis[h] == 0 {
                    basis[h] = v;
                    break;
                }
                v ^= basis[h];
            }
        }
        true
    }

    fn odd_rank(&self, rows: &[u64], inverses: &[u64], x: &[u64], s: &mut Scratch) -> bool {
        let (k, p) = (self.k, self.p);
        let kk = k * k;
        for map in 0..k {
            let m = &rows[map * kk..(map + 1) * kk];
            for r in 0..k {
                let row = &m[r * k..(r + 1) * k];
                let mut acc = 0u64;
                for c in 0..k {
                    acc += row[c] * x[c];
                }
                s.v[r] = acc % p;
            }
            for b in 0..map {
                let piv = s.pivots[b];
                let coef = s.v[piv];
                if coef == 0 {
                    continue;
                }
                let neg = p - coef;
                let brow = &s.basis[b * k..(b + 1) * k];
                for c in piv..k {
                    s.v[c] = (s.v[c] + neg * brow[c]) % p;
                }
            }
            let Some(piv) = (0..k).find(|&c| s.v[c] != 0) else { return false };
            let inv = if inverses.is_empty() { inv_mod(s.v[piv], p) } else { inverses[s.v[piv] as usize] };
            for c in 0..k {
                s.basis[map * k + c] = if c < piv { 0 } else { s.v[c] * inv % p };
            }
            s.pivots[map] = piv;
        }
        true
    }
}

/// `gcd` of a list, used when checking divisibility of group orders.
pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}
