//! Finite fields `F_p` and `F_q = F_p[y]/h(y)`.
//!
//! Elements are always kept canonical: residues in `[0, p)` and, for
//! extensions, exactly `m` coefficients reduced modulo `h`. Structural
//! equality is therefore field equality.

use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;

use crate::arith::is_prime_u64;
use crate::error::{Error, Result};
use crate::factor::is_irreducible;
use crate::poly::PolyRing;
use crate::text::{parse_terms, render_terms, CoeffText, RawCoeff};

pub trait FiniteField: Clone + Debug + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Eq + Ord + Hash + Debug + Send + Sync;

    fn characteristic(&self) -> u64;
    fn extension_degree(&self) -> usize;
    /// `q = p^m`.
    fn order(&self) -> &BigUint;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// Image of an integer under `Z -> F_q`.
    fn from_u64(&self, c: u64) -> Self::Elem;

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem>;

    fn pow(&self, a: &Self::Elem, e: &BigUint) -> Self::Elem {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    /// The unique `b` with `b^p = a`, namely `a^(p^(m-1))`.
    fn pth_root(&self, a: &Self::Elem) -> Self::Elem {
        let e = BigUint::from(self.characteristic()).pow(self.extension_degree() as u32 - 1);
        self.pow(a, &e)
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    /// Bijection `[0, q) -> F_q` (base-`p` digits), used for enumeration.
    fn element(&self, index: u64) -> Self::Elem;

    /// Returns `Some(c)` when `a` lies in the prime subfield.
    fn as_prime_subfield(&self, a: &Self::Elem) -> Option<u64>;

    fn parse_elem(&self, text: &str) -> Result<Self::Elem>;
    fn format_elem(&self, a: &Self::Elem) -> String;
    /// The defining polynomial `h` in the variable `y`.
    fn modulus_text(&self) -> String;

    /// Schoolbook product of coefficient slices (both non-empty).
    fn mul_slices(&self, a: &[Self::Elem], b: &[Self::Elem]) -> Vec<Self::Elem> {
        let mut out = vec![self.zero(); a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            if self.is_zero(ai) {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                let t = self.mul(ai, bj);
                out[i + j] = self.add(&out[i + j], &t);
            }
        }
        out
    }

    /// `dst[i] -= c * src[i]`.
    fn sub_scaled(&self, dst: &mut [Self::Elem], c: &Self::Elem, src: &[Self::Elem]) {
        for (d, s) in dst.iter_mut().zip(src) {
            let t = self.mul(c, s);
            *d = self.sub(d, &t);
        }
    }

    /// `dst[i] += c * src[i]`.
    fn add_scaled(&self, dst: &mut [Self::Elem], c: &Self::Elem, src: &[Self::Elem]) {
        for (d, s) in dst.iter_mut().zip(src) {
            let t = self.mul(c, s);
            *d = self.add(d, &t);
        }
    }
}

/// `F_p` for a prime `p < 2^32`; elements are plain residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
    q: BigUint,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p > u32::MAX as u64 {
            return Err(Error::ModulusTooLarge(p.into()));
        }
        if !is_prime_u64(p) {
            return Err(Error::NotPrime(p.into()));
        }
        Ok(PrimeField { p, q: p.into() })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    fn reduce_wide(&self, x: u128) -> u64 {
        (x % self.p as u128) as u64
    }
}

impl FiniteField for PrimeField {
    type Elem = u64;

    fn characteristic(&self) -> u64 {
        self.p
    }
    fn extension_degree(&self) -> usize {
        1
    }
    fn order(&self) -> &BigUint {
        &self.q
    }
    #[inline]
    fn zero(&self) -> u64 {
        0
    }
    #[inline]
    fn one(&self) -> u64 {
        1 % self.p
    }
    #[inline]
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn from_u64(&self, c: u64) -> u64 {
        c % self.p
    }
    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    #[inline]
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    #[inline]
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        (a * b) % self.p
    }
    fn inv(&self, a: &u64) -> Result<u64> {
        if *a == 0 {
            return Err(Error::DivisionByZero);
        }
        // extended Euclid on (a, p)
        let (mut r0, mut r1) = (self.p as i128, *a as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        Ok(t0.rem_euclid(self.p as i128) as u64)
    }
    fn pth_root(&self, a: &u64) -> u64 {
        *a
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }
    fn element(&self, index: u64) -> u64 {
        index % self.p
    }
    fn as_prime_subfield(&self, a: &u64) -> Option<u64> {
        Some(*a)
    }
    fn parse_elem(&self, text: &str) -> Result<u64> {
        let t = text.trim();
        let v: BigUint = t
            .parse()
            .map_err(|_| Error::Parse(format!("bad element {t:?} for F_{}", self.p)))?;
        Ok((v % self.p).to_u64().unwrap())
    }
    fn format_elem(&self, a: &u64) -> String {
        a.to_string()
    }
    fn modulus_text(&self) -> String {
        "y".into()
    }

    fn mul_slices(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        // p < 2^32, so each product fits in u64 and the sums fit in u128.
        let mut acc = vec![0u128; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (slot, &bj) in acc[i..].iter_mut().zip(b) {
                *slot += (ai * bj) as u128;
            }
        }
        acc.into_iter().map(|x| self.reduce_wide(x)).collect()
    }

    fn sub_scaled(&self, dst: &mut [u64], c: &u64, src: &[u64]) {
        if *c == 0 {
            return;
        }
        let pp = self.p * self.p;
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = (*d + pp - c * s) % self.p;
        }
    }

    fn add_scaled(&self, dst: &mut [u64], c: &u64, src: &[u64]) {
        if *c == 0 {
            return;
        }
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = (*d + c * s) % self.p;
        }
    }
}

#[derive(Debug)]
struct ExtInner {
    base: PrimeField,
    /// Monic modulus, `m + 1` coefficients, low degree first.
    h: Vec<u64>,
    q: BigUint,
}

/// `F_q = F_p[y]/h(y)` with `h` monic irreducible of degree `m >= 2`.
#[derive(Clone, Debug)]
pub struct ExtensionField {
    inner: Arc<ExtInner>,
}

impl PartialEq for ExtensionField {
    fn eq(&self, other: &Self) -> bool {
        self.inner.base == other.inner.base && self.inner.h == other.inner.h
    }
}

impl ExtensionField {
    /// Builds the extension defined by `h` (coefficients low degree first),
    /// rejecting reducible or non-monic moduli.
    pub fn new(base: PrimeField, h: Vec<u64>) -> Result<Self> {
        let ring = PolyRing::new(base.clone());
        let hp = ring.from_coeffs(h.iter().map(|&c| c % base.p).collect());
        let m = hp.degree().unwrap_or(0);
        if m < 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                actual: m,
            });
        }
        if *hp.lead().unwrap() != 1 {
            return Err(Error::BadInput("field modulus must be monic".into()));
        }
        if !is_irreducible(&ring, &hp) {
            return Err(Error::Reducible(ring.format_var(&hp, 'y')));
        }
        let q = BigUint::from(base.p).pow(m as u32);
        Ok(ExtensionField {
            inner: Arc::new(ExtInner {
                base,
                h: hp.coeffs().to_vec(),
                q,
            }),
        })
    }

    /// Random monic irreducible modulus of degree `m` by rejection sampling.
    pub fn random<R: Rng + ?Sized>(base: PrimeField, m: usize, rng: &mut R) -> Result<Self> {
        if m < 1 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let ring = PolyRing::new(base.clone());
        loop {
            let h = ring.random_monic(m, rng);
            if is_irreducible(&ring, &h) {
                return ExtensionField::new(base, h.coeffs().to_vec());
            }
        }
    }

    pub fn base(&self) -> &PrimeField {
        &self.inner.base
    }

    pub fn modulus_coeffs(&self) -> &[u64] {
        &self.inner.h
    }

    fn m(&self) -> usize {
        self.inner.h.len() - 1
    }

    fn base_ring(&self) -> PolyRing<PrimeField> {
        PolyRing::new(self.inner.base.clone())
    }
}

impl FiniteField for ExtensionField {
    type Elem = Vec<u64>;

    fn characteristic(&self) -> u64 {
        self.inner.base.p
    }
    fn extension_degree(&self) -> usize {
        self.m()
    }
    fn order(&self) -> &BigUint {
        &self.inner.q
    }
    fn zero(&self) -> Vec<u64> {
        vec![0; self.m()]
    }
    fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.m()];
        v[0] = 1;
        v
    }
    fn is_zero(&self, a: &Vec<u64>) -> bool {
        a.iter().all(|&c| c == 0)
    }
    fn from_u64(&self, c: u64) -> Vec<u64> {
        let mut v = vec![0; self.m()];
        v[0] = c % self.inner.base.p;
        v
    }
    fn add(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        let f = &self.inner.base;
        a.iter().zip(b).map(|(x, y)| f.add(x, y)).collect()
    }
    fn sub(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        let f = &self.inner.base;
        a.iter().zip(b).map(|(x, y)| f.sub(x, y)).collect()
    }
    fn neg(&self, a: &Vec<u64>) -> Vec<u64> {
        let f = &self.inner.base;
        a.iter().map(|x| f.neg(x)).collect()
    }
    fn mul(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        let f = &self.inner.base;
        let m = self.m();
        let mut t = f.mul_slices(a, b);
        let h = &self.inner.h;
        for i in (m..t.len()).rev() {
            let c = t[i];
            if c != 0 {
                f.sub_scaled(&mut t[i - m..i], &c, &h[..m]);
                t[i] = 0;
            }
        }
        t.truncate(m);
        t
    }
    fn inv(&self, a: &Vec<u64>) -> Result<Vec<u64>> {
        if self.is_zero(a) {
            return Err(Error::DivisionByZero);
        }
        let ring = self.base_ring();
        let ap = ring.from_coeffs(a.clone());
        let hp = ring.from_coeffs(self.inner.h.clone());
        // h irreducible and a != 0, so the monic gcd is 1 and s = a^-1
        let (_, s, _) = ring.xgcd(&ap, &hp);
        let mut v = s.coeffs().to_vec();
        v.resize(self.m(), 0);
        Ok(v)
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        (0..self.m())
            .map(|_| rng.gen_range(0..self.inner.base.p))
            .collect()
    }
    fn element(&self, mut index: u64) -> Vec<u64> {
        let p = self.inner.base.p;
        (0..self.m())
            .map(|_| {
                let d = index % p;
                index /= p;
                d
            })
            .collect()
    }
    fn as_prime_subfield(&self, a: &Vec<u64>) -> Option<u64> {
        a[1..].iter().all(|&c| c == 0).then_some(a[0])
    }
    fn parse_elem(&self, text: &str) -> Result<Vec<u64>> {
        let f = &self.inner.base;
        let mut acc = vec![0u64; 0];
        for term in parse_terms(text, 'y')? {
            let c = match term.coeff {
                None => 1,
                Some(RawCoeff::Decimal(v)) => (v % f.p).to_u64().unwrap(),
                Some(RawCoeff::Bracketed(_)) => {
                    return Err(Error::Parse(format!("nested brackets in {text:?}")))
                }
            };
            if acc.len() <= term.exp {
                acc.resize(term.exp + 1, 0);
            }
            acc[term.exp] = f.add(&acc[term.exp], &c);
        }
        let ring = self.base_ring();
        let hp = ring.from_coeffs(self.inner.h.clone());
        let r = ring.rem(&ring.from_coeffs(acc), &hp)?;
        let mut v = r.coeffs().to_vec();
        v.resize(self.m(), 0);
        Ok(v)
    }
    fn format_elem(&self, a: &Vec<u64>) -> String {
        render_terms(a.len(), 'y', |k| match a[k] {
            0 => None,
            1 => Some(CoeffText::One),
            c => Some(CoeffText::Plain(c.to_string())),
        })
    }
    fn modulus_text(&self) -> String {
        let h = &self.inner.h;
        render_terms(h.len(), 'y', |k| match h[k] {
            0 => None,
            1 => Some(CoeffText::One),
            c => Some(CoeffText::Plain(c.to_string())),
        })
    }
}

/// A field chosen at runtime; the CLI dispatches on the variant.
#[derive(Clone, Debug)]
pub enum FieldCtx {
    Prime(PrimeField),
    Extension(ExtensionField),
}

impl FieldCtx {
    pub fn characteristic(&self) -> u64 {
        match self {
            FieldCtx::Prime(f) => f.characteristic(),
            FieldCtx::Extension(f) => f.characteristic(),
        }
    }
    pub fn extension_degree(&self) -> usize {
        match self {
            FieldCtx::Prime(_) => 1,
            FieldCtx::Extension(f) => f.extension_degree(),
        }
    }
    pub fn order(&self) -> &BigUint {
        match self {
            FieldCtx::Prime(f) => f.order(),
            FieldCtx::Extension(f) => f.order(),
        }
    }
    pub fn modulus_text(&self) -> String {
        match self {
            FieldCtx::Prime(f) => f.modulus_text(),
            FieldCtx::Extension(f) => f.modulus_text(),
        }
    }
}

/// Constructs `F_{p^m}`. `h`, when given, is parsed in the variable `y`;
/// otherwise a random monic irreducible of degree `m` is drawn.
pub fn field_new<R: Rng + ?Sized>(
    p: &BigUint,
    m: usize,
    h: Option<&str>,
    rng: &mut R,
) -> Result<FieldCtx> {
    if m < 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let p64 = p
        .to_u64()
        .filter(|&v| v <= u32::MAX as u64)
        .ok_or_else(|| Error::ModulusTooLarge(p.clone()))?;
    let base = PrimeField::new(p64)?;
    let h = match h {
        Some(text) => Some(parse_base_poly(&base, text)?),
        None => None,
    };
    if m == 1 {
        if let Some(h) = h {
            let ring = PolyRing::new(base.clone());
            let hp = ring.from_coeffs(h);
            let deg = hp.degree().unwrap_or(0);
            if deg != 1 {
                return Err(Error::DegreeMismatch {
                    expected: 1,
                    actual: deg,
                });
            }
            if *hp.lead().unwrap() != 1 {
                return Err(Error::BadInput("field modulus must be monic".into()));
            }
        }
        return Ok(FieldCtx::Prime(base));
    }
    let ext = match h {
        Some(h) => {
            let deg = h.iter().rposition(|&c| c != 0).unwrap_or(0);
            if deg != m {
                return Err(Error::DegreeMismatch {
                    expected: m,
                    actual: deg,
                });
            }
            ExtensionField::new(base, h)?
        }
        None => ExtensionField::random(base, m, rng)?,
    };
    Ok(FieldCtx::Extension(ext))
}

fn parse_base_poly(base: &PrimeField, text: &str) -> Result<Vec<u64>> {
    let mut acc: Vec<u64> = Vec::new();
    for term in parse_terms(text, 'y')? {
        let c = match term.coeff {
            None => 1,
            Some(RawCoeff::Decimal(v)) => (v % base.p).to_u64().unwrap(),
            Some(RawCoeff::Bracketed(_)) => {
                return Err(Error::Parse(format!("unexpected bracket in {text:?}")))
            }
        };
        if acc.len() <= term.exp {
            acc.resize(term.exp + 1, 0);
        }
        acc[term.exp] = base.add(&acc[term.exp], &c);
    }
    Ok(acc)
}
