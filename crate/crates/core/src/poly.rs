//! Dense univariate polynomials over a finite field, and endomorphisms of
//! `K = F_q[x]/f` given by the image of `x`.
//!
//! Modular composition `a(g) mod f` is the unit cost operation of the
//! factorization algorithms; every call is counted in [`OpCounters`].

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FiniteField;
use crate::text::{parse_terms, render_terms, CoeffText, RawCoeff};

/// Below this operand length products use the schoolbook kernel.
pub const KARATSUBA_THRESHOLD: usize = 32;
/// Outer polynomials of at least this degree are composed by baby-step /
/// giant-step; smaller ones by Horner.
pub const BSGS_THRESHOLD: usize = 16;

/// Coefficients low degree first, no trailing zeros. The zero polynomial has
/// no coefficients and degree `None`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly<E> {
    coeffs: Vec<E>,
}

impl<E> Poly<E> {
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to 0; for contexts where the
    /// distinction does not matter.
    pub fn deg(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<E> {
        self.coeffs
    }

    pub fn lead(&self) -> Option<&E> {
        self.coeffs.last()
    }
}

impl<E: Ord> Poly<E> {
    /// Total order: by degree, then coefficients from the top down.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coeffs
            .len()
            .cmp(&other.coeffs.len())
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

#[derive(Debug, Default)]
pub struct OpCounters {
    compositions: AtomicU64,
    mulmods: AtomicU64,
    multiplications: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CounterSnapshot {
    pub compositions: u64,
    pub mulmods: u64,
    pub multiplications: u64,
}

impl std::ops::Sub for CounterSnapshot {
    type Output = CounterSnapshot;
    fn sub(self, rhs: Self) -> Self {
        CounterSnapshot {
            compositions: self.compositions - rhs.compositions,
            mulmods: self.mulmods - rhs.mulmods,
            multiplications: self.multiplications - rhs.multiplications,
        }
    }
}

impl OpCounters {
    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            compositions: self.compositions.load(Ordering::Relaxed),
            mulmods: self.mulmods.load(Ordering::Relaxed),
            multiplications: self.multiplications.load(Ordering::Relaxed),
        }
    }
}

/// An `F_q`-endomorphism of `F_q[x]/modulus`, stored as the image of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endo<E> {
    pub modulus: Poly<E>,
    pub image: Poly<E>,
}

#[derive(Clone, Debug)]
pub struct PolyRing<F: FiniteField> {
    field: F,
    counters: Arc<OpCounters>,
}

impl<F: FiniteField> PolyRing<F> {
    pub fn new(field: F) -> Self {
        PolyRing {
            field,
            counters: Arc::new(OpCounters::default()),
        }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn counters(&self) -> CounterSnapshot {
        self.counters.snapshot()
    }

    /// Same field, fresh counters. Work done through the returned ring is not
    /// charged to this one.
    pub fn detached(&self) -> Self {
        PolyRing::new(self.field.clone())
    }

    pub fn zero(&self) -> Poly<F::Elem> {
        Poly { coeffs: Vec::new() }
    }

    pub fn one(&self) -> Poly<F::Elem> {
        self.constant(self.field.one())
    }

    pub fn x(&self) -> Poly<F::Elem> {
        self.monomial(self.field.one(), 1)
    }

    pub fn constant(&self, c: F::Elem) -> Poly<F::Elem> {
        self.from_coeffs(vec![c])
    }

    pub fn monomial(&self, c: F::Elem, k: usize) -> Poly<F::Elem> {
        let mut v = vec![self.field.zero(); k + 1];
        v[k] = c;
        self.from_coeffs(v)
    }

    pub fn from_coeffs(&self, mut coeffs: Vec<F::Elem>) -> Poly<F::Elem> {
        while coeffs.last().is_some_and(|c| self.field.is_zero(c)) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// Builds a polynomial from small integer coefficients, low degree first.
    pub fn from_u64s(&self, coeffs: &[u64]) -> Poly<F::Elem> {
        self.from_coeffs(coeffs.iter().map(|&c| self.field.from_u64(c)).collect())
    }

    pub fn is_one(&self, a: &Poly<F::Elem>) -> bool {
        a.coeffs.len() == 1 && a.coeffs[0] == self.field.one()
    }

    pub fn add(&self, a: &Poly<F::Elem>, b: &Poly<F::Elem>) -> Poly<F::Elem> {
        let (long, short) = if a.coeffs.len() >= b.coeffs.len() {
            (a, b)
        } else {
            (b, a)
        };
        let mut v = long.coeffs.clone();
        for (d, s) in v.iter_mut().zip(&short.coeffs) {
            *d = self.field.add(d, s);
        }
        self.from_coeffs(v)
    }

    pub fn sub(&self, a: &Poly<F::Elem>, b: &Poly<F::Elem>) -> Poly<F::Elem> {
        let n = a.coeffs.len().max(b.coeffs.len());
        let z = self.field.zero();
        let v = (0..n)
            .map(|i| {
                let x = a.coeffs.get(i).unwrap_or(&z);
                let y = b.coeffs.get(i).unwrap_or(&z);
                self.field.sub(x, y)
            })
            .collect();
        self.from_coeffs(v)
    }

    pub fn neg(&self, a: &Poly<F::Elem>) -> Poly<F::Elem> {
        Poly {
            coeffs: a.coeffs.iter().map(|c| self.field.neg(c)).collect(),
        }
    }

    pub fn scale(&self, a: &Poly<F::Elem>, c: &F::Elem) -> Poly<F::Elem> {
        self.from_coeffs(a.coeffs.iter().map(|x| self.field.mul(x, c)).collect())
    }

    pub fn mul(&self, a: &Poly<F::Elem>, b: &Poly<F::Elem>) -> Poly<F::Elem> {
        self.counters
            .multiplications
            .fetch_add(1, Ordering::Relaxed);
        self.from_coeffs(self.mul_coeffs(&a.coeffs, &b.coeffs))
    }

    fn mul_coeffs(&self, a: &[F::Elem], b: &[F::Elem]) -> Vec<F::Elem> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        if a.len().min(b.len()) < KARATSUBA_THRESHOLD {
            return self.field.mul_slices(a, b);
        }
        let (a, b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
        let mut out = vec![self.field.zero(); a.len() + b.len() - 1];
        let half = a.len().div_ceil(2);
        if b.len() <= half {
            // unbalanced: multiply b against slices of a
            for (ci, chunk) in a.chunks(b.len()).enumerate() {
                let prod = self.mul_coeffs(chunk, b);
                self.accumulate(&mut out[ci * b.len()..], &prod);
            }
            return out;
        }
        let (a0, a1) = a.split_at(half);
        let (b0, b1) = b.split_at(half);
        let z0 = self.mul_coeffs(a0, b0);
        let z2 = self.mul_coeffs(a1, b1);
        let sa = self.add_slices(a0, a1);
        let sb = self.add_slices(b0, b1);
        let mut z1 = self.mul_coeffs(&sa, &sb);
        for (i, c) in z0.iter().enumerate() {
            z1[i] = self.field.sub(&z1[i], c);
        }
        for (i, c) in z2.iter().enumerate() {
            z1[i] = self.field.sub(&z1[i], c);
        }
        self.accumulate(&mut out, &z0);
        self.accumulate(&mut out[half..], &z1);
        self.accumulate(&mut out[2 * half..], &z2);
        out
    }

    fn add_slices(&self, a: &[F::Elem], b: &[F::Elem]) -> Vec<F::Elem> {
        let mut v = a.to_vec();
        for (d, s) in v.iter_mut().zip(b) {
            *d = self.field.add(d, s);
        }
        v
    }

    fn accumulate(&self, dst: &mut [F::Elem], src: &[F::Elem]) {
        for (d, s) in dst.iter_mut().zip(src) {
            *d = self.field.add(d, s);
        }
    }

    /// Euclidean division `a = q*b + r` with `deg r < deg b`.
    pub fn divrem(
        &self,
        a: &Poly<F::Elem>,
        b: &Poly<F::Elem>,
    ) -> Result<(Poly<F::Elem>, Poly<F::Elem>)> {
        let n = b.degree().ok_or(Error::DivisionByZero)?;
        let Some(da) = a.degree().filter(|&d| d >= n) else {
            return Ok((self.zero(), a.clone()));
        };
        let lead_inv = self.field.inv(b.lead().unwrap())?;
        let monic = lead_inv == self.field.one();
        let mut r = a.coeffs.clone();
        let mut q = vec![self.field.zero(); da - n + 1];
        for i in (n..=da).rev() {
            if self.field.is_zero(&r[i]) {
                continue;
            }
            let c = if monic {
                r[i].clone()
            } else {
                self.field.mul(&r[i], &lead_inv)
            };
            self.field.sub_scaled(&mut r[i - n..i], &c, &b.coeffs[..n]);
            r[i] = self.field.zero();
            q[i - n] = c;
        }
        r.truncate(n);
        Ok((self.from_coeffs(q), self.from_coeffs(r)))
    }

    pub fn rem(&self, a: &Poly<F::Elem>, b: &Poly<F::Elem>) -> Result<Poly<F::Elem>> {
        Ok(self.divrem(a, b)?.1)
    }

    /// Quotient of an exact division; a nonzero remainder is an invariant
    /// violation.
    pub fn div_exact(&self, a: &Poly<F::Elem>, b: &Poly<F::Elem>) -> Result<Poly<F::Elem>> {
        let (q, r) = self.divrem(a, b)?;
        if !r.is_zero() {
            return Err(Error::InvariantViolation(format!(
                "{} does not divide {}",
                self.format(b),
                self.format(a)
            )));
        }
        Ok(q)
    }

    pub fn monic(&self, a: &Poly<F::Elem>) -> Poly<F::Elem> {
        match a.lead() {
            None => a.clone(),
            Some(l) if *l == self.field.one() => a.clone(),
            Some(l) => self.scale(a, &self.field.inv(l).expect("nonzero lead")),
        }
    }

    pub fn is_monic(&self, a: &Poly<F::Elem>) -> bool {
        a.lead().is_some_and(|l| *l == self.field.one())
    }

    /// Monic gcd.
    pub fn gcd(&self, a: &Poly<F::Elem>, b: &Poly<F::Elem>) -> Result<Poly<F::Elem>> {
        if a.is_zero() && b.is_zero() {
            return Err(Error::BothZero);
        }
        let (mut r0, mut r1) = (a.clone(), b.clone());
        while !r1.is_zero() {
            let r = self.rem(&r0, &r1)?;
            r0 = r1;
            r1 = r;
        }
        Ok(self.monic(&r0))
    }

    /// Returns `(g, s, t)` with `g` monic and `s*a + t*b = g`.
    pub fn xgcd(
        &self,
        a: &Poly<F::Elem>,
        b: &Poly<F::Elem>,
    ) -> (Poly<F::Elem>, Poly<F::Elem>, Poly<F::Elem>) {
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (self.one(), self.zero());
        let (mut t0, mut t1) = (self.zero(), self.one());
        while !r1.is_zero() {
            let (q, r) = self.divrem(&r0, &r1).expect("nonzero divisor");
            let s = self.sub(&s0, &self.mul(&q, &s1));
            let t = self.sub(&t0, &self.mul(&q, &t1));
            (r0, r1) = (r1, r);
            (s0, s1) = (s1, s);
            (t0, t1) = (t1, t);
        }
        match r0.lead().cloned() {
            None => (r0, s0, t0),
            Some(l) => {
                let li = self.field.inv(&l).expect("nonzero lead");
                (
                    self.scale(&r0, &li),
                    self.scale(&s0, &li),
                    self.scale(&t0, &li),
                )
            }
        }
    }

    pub fn derivative(&self, a: &Poly<F::Elem>) -> Poly<F::Elem> {
        let v = a
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| self.field.mul(c, &self.field.from_u64(i as u64)))
            .collect();
        self.from_coeffs(v)
    }

    pub fn eval(&self, a: &Poly<F::Elem>, at: &F::Elem) -> F::Elem {
        a.coeffs.iter().rev().fold(self.field.zero(), |acc, c| {
            self.field.add(&self.field.mul(&acc, at), c)
        })
    }

    pub fn is_squarefree(&self, f: &Poly<F::Elem>) -> bool {
        match f.degree() {
            None => false,
            Some(0) => true,
            Some(_) => {
                let df = self.derivative(f);
                !df.is_zero() && self.gcd(f, &df).map(|g| self.is_one(&g)).unwrap_or(false)
            }
        }
    }

    /// `a * b mod f`.
    pub fn mulmod(
        &self,
        a: &Poly<F::Elem>,
        b: &Poly<F::Elem>,
        f: &Poly<F::Elem>,
    ) -> Result<Poly<F::Elem>> {
        self.counters.mulmods.fetch_add(1, Ordering::Relaxed);
        self.rem(&self.from_coeffs(self.mul_coeffs(&a.coeffs, &b.coeffs)), f)
    }

    /// `a^e mod f` by left-to-right square-and-multiply.
    pub fn powmod(
        &self,
        a: &Poly<F::Elem>,
        e: &BigUint,
        f: &Poly<F::Elem>,
    ) -> Result<Poly<F::Elem>> {
        let base = self.rem(a, f)?;
        let mut acc = self.rem(&self.one(), f)?;
        for i in (0..e.bits()).rev() {
            acc = self.mulmod(&acc, &acc, f)?;
            if e.bit(i) {
                acc = self.mulmod(&acc, &base, f)?;
            }
        }
        Ok(acc)
    }

    fn check_composition(&self, g: &Poly<F::Elem>, f: &Poly<F::Elem>) -> Result<usize> {
        let n = f.degree().filter(|&d| d >= 1).ok_or_else(|| {
            Error::DegreeError("composition modulus must have degree >= 1".into())
        })?;
        if g.degree().is_some_and(|d| d >= n) {
            return Err(Error::DegreeError(format!(
                "inner polynomial degree {} >= modulus degree {n}",
                g.deg()
            )));
        }
        Ok(n)
    }

    /// `a(g) mod f`, choosing Horner or baby-step/giant-step by `deg a`.
    pub fn modcomp(
        &self,
        a: &Poly<F::Elem>,
        g: &Poly<F::Elem>,
        f: &Poly<F::Elem>,
    ) -> Result<Poly<F::Elem>> {
        if a.deg() >= BSGS_THRESHOLD {
            self.modcomp_bsgs(a, g, f)
        } else {
            self.modcomp_horner(a, g, f)
        }
    }

    pub fn modcomp_horner(
        &self,
        a: &Poly<F::Elem>,
        g: &Poly<F::Elem>,
        f: &Poly<F::Elem>,
    ) -> Result<Poly<F::Elem>> {
        self.check_composition(g, f)?;
        self.counters.compositions.fetch_add(1, Ordering::Relaxed);
        let mut acc = self.zero();
        for c in a.coeffs.iter().rev() {
            acc = self.mulmod(&acc, g, f)?;
            acc = self.add(&acc, &self.constant(c.clone()));
        }
        self.rem(&acc, f)
    }

    /// Splits `a` into blocks of `k ~ sqrt(deg a)` coefficients, evaluates
    /// each block against the precomputed powers `g^0..g^(k-1)`, and combines
    /// the blocks by Horner in `g^k`.
    pub fn modcomp_bsgs(
        &self,
        a: &Poly<F::Elem>,
        g: &Poly<F::Elem>,
        f: &Poly<F::Elem>,
    ) -> Result<Poly<F::Elem>> {
        let n = self.check_composition(g, f)?;
        self.counters.compositions.fetch_add(1, Ordering::Relaxed);
        let Some(da) = a.degree() else {
            return Ok(self.zero());
        };
        let k = ((da + 1) as f64).sqrt().ceil() as usize;
        let mut pows = Vec::with_capacity(k + 1);
        pows.push(self.rem(&self.one(), f)?);
        for i in 1..=k {
            let next = self.mulmod(&pows[i - 1], g, f)?;
            pows.push(next);
        }
        let giant = pows.pop().unwrap();
        let blocks = (da + 1).div_ceil(k);
        let mut acc: Option<Poly<F::Elem>> = None;
        for bi in (0..blocks).rev() {
            let mut block = vec![self.field.zero(); n];
            for (j, c) in a.coeffs[bi * k..].iter().take(k).enumerate() {
                let pw = &pows[j].coeffs;
                self.field.add_scaled(&mut block[..pw.len()], c, pw);
            }
            let block = self.from_coeffs(block);
            acc = Some(match acc {
                None => block,
                Some(prev) => self.add(&self.mulmod(&prev, &giant, f)?, &block),
            });
        }
        Ok(acc.unwrap_or_else(|| self.zero()))
    }

    /// Uniform polynomial of degree `< n`.
    pub fn random<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Poly<F::Elem> {
        self.from_coeffs((0..n).map(|_| self.field.random(rng)).collect())
    }

    /// Uniform monic polynomial of degree exactly `n`.
    pub fn random_monic<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Poly<F::Elem> {
        let mut v: Vec<F::Elem> = (0..n).map(|_| self.field.random(rng)).collect();
        v.push(self.field.one());
        Poly { coeffs: v }
    }

    /// Parses the `c*x^k + ...` grammar; coefficients are decimals (reduced
    /// mod p) or bracketed field elements such as `[2*y+1]`.
    pub fn parse(&self, text: &str) -> Result<Poly<F::Elem>> {
        let p = self.field.characteristic();
        let mut v: Vec<F::Elem> = Vec::new();
        for term in parse_terms(text, 'x')? {
            let c = match term.coeff {
                None => self.field.one(),
                Some(RawCoeff::Decimal(d)) => self.field.from_u64((d % p).to_u64().unwrap()),
                Some(RawCoeff::Bracketed(inner)) => self.field.parse_elem(&inner)?,
            };
            if v.len() <= term.exp {
                v.resize(term.exp + 1, self.field.zero());
            }
            v[term.exp] = self.field.add(&v[term.exp], &c);
        }
        Ok(self.from_coeffs(v))
    }

    pub fn format(&self, a: &Poly<F::Elem>) -> String {
        self.format_var(a, 'x')
    }

    pub fn format_var(&self, a: &Poly<F::Elem>, var: char) -> String {
        render_terms(a.coeffs.len(), var, |k| {
            let c = &a.coeffs[k];
            if self.field.is_zero(c) {
                return None;
            }
            Some(match self.field.as_prime_subfield(c) {
                Some(1) => CoeffText::One,
                Some(v) => CoeffText::Plain(v.to_string()),
                None => CoeffText::Bracketed(self.field.format_elem(c)),
            })
        })
    }

    // ---- endomorphisms of F_q[x]/f ----

    fn x_mod(&self, f: &Poly<F::Elem>) -> Result<Poly<F::Elem>> {
        self.rem(&self.x(), f)
    }

    pub fn identity_endo(&self, f: &Poly<F::Elem>) -> Result<Endo<F::Elem>> {
        self.check_composition(&self.zero(), f)?;
        Ok(Endo {
            modulus: f.clone(),
            image: self.x_mod(f)?,
        })
    }

    pub fn endo_from_image(
        &self,
        f: &Poly<F::Elem>,
        image: Poly<F::Elem>,
    ) -> Result<Endo<F::Elem>> {
        self.check_composition(&image, f)?;
        Ok(Endo {
            modulus: f.clone(),
            image,
        })
    }

    /// The Frobenius `x -> x^q mod f`. With `check` set, a non-squarefree
    /// `f` is rejected.
    pub fn frobenius(&self, f: &Poly<F::Elem>, check: bool) -> Result<Endo<F::Elem>> {
        if !self.is_monic(f) || f.deg() < 1 {
            return Err(Error::BadInput(
                "frobenius needs a monic modulus of degree >= 1".into(),
            ));
        }
        if check && !self.is_squarefree(f) {
            return Err(Error::NotSquarefree);
        }
        let image = self.powmod(&self.x(), self.field.order(), f)?;
        Ok(Endo {
            modulus: f.clone(),
            image,
        })
    }

    pub fn endo_is_identity(&self, s: &Endo<F::Elem>) -> bool {
        self.x_mod(&s.modulus)
            .map(|x| x == s.image)
            .unwrap_or(false)
    }

    /// `outer ∘ inner`: the image is `inner(x)` evaluated at `outer(x)`.
    pub fn endo_compose(
        &self,
        outer: &Endo<F::Elem>,
        inner: &Endo<F::Elem>,
    ) -> Result<Endo<F::Elem>> {
        Ok(Endo {
            modulus: outer.modulus.clone(),
            image: self.modcomp(&inner.image, &outer.image, &outer.modulus)?,
        })
    }

    /// `s^j` with `O(log j)` compositions; `j = 0` gives the identity.
    pub fn endo_pow(&self, s: &Endo<F::Elem>, j: &BigUint) -> Result<Endo<F::Elem>> {
        if j.is_zero() {
            return self.identity_endo(&s.modulus);
        }
        let mut acc = s.clone();
        for i in (0..j.bits() - 1).rev() {
            acc = self.endo_compose(&acc, &acc)?;
            if j.bit(i) {
                acc = self.endo_compose(&acc, s)?;
            }
        }
        Ok(acc)
    }

    /// `s(a) = a(s(x)) mod f`.
    pub fn endo_apply(&self, s: &Endo<F::Elem>, a: &Poly<F::Elem>) -> Result<Poly<F::Elem>> {
        if a.degree().is_some_and(|d| d >= s.modulus.deg()) {
            return Err(Error::DegreeError(format!(
                "argument degree {} >= modulus degree {}",
                a.deg(),
                s.modulus.deg()
            )));
        }
        self.modcomp(a, &s.image, &s.modulus)
    }

    /// Restriction of `s` to `F_q[x]/g` for a divisor `g` of the modulus.
    pub fn endo_reduce(&self, s: &Endo<F::Elem>, g: &Poly<F::Elem>) -> Result<Endo<F::Elem>> {
        Ok(Endo {
            modulus: g.clone(),
            image: self.rem(&s.image, g)?,
        })
    }

    /// `gcd(s(x) - x, g)` for a divisor `g` of the modulus of `s`.
    pub fn fixed_part(&self, s: &Endo<F::Elem>, g: &Poly<F::Elem>) -> Result<Poly<F::Elem>> {
        let diff = self.sub(&s.image, &self.x());
        self.gcd(&self.rem(&diff, g)?, g)
    }
}
