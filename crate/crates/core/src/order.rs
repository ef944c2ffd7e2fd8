//! Order estimation for automorphisms of `K = F_q[x]/f` in the group
//! generated by the Frobenius.
//!
//! The quantum backend is simulated: the period `r` of `j -> s^j(x)` is
//! computed classically out of band and only used to draw the measured
//! register value `k`. Everything downstream of the measurement (rational
//! reconstruction, lcm combination, verification) sees `k` alone.

use std::f64::consts::PI;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::arith::{lcm_big, lcm_up_to, primes_up_to};
use crate::error::{Error, Result};
use crate::field::FiniteField;
use crate::poly::{Endo, PolyRing};

/// Registers above this size are never tabulated.
pub const EXACT_DIST_MAX_BITS: u32 = 20;

pub(crate) fn big_str<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(10))
}

/// Phase register size: `m = 2 ell + 1` qubits, `N = 2^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseParams {
    pub ell: u32,
}

impl PhaseParams {
    pub fn new(ell: u32) -> Self {
        PhaseParams { ell }
    }
    pub fn m(&self) -> u32 {
        2 * self.ell + 1
    }
    pub fn n(&self) -> BigUint {
        BigUint::one() << self.m()
    }
    /// Largest order the reconstruction can represent, `2^ell`.
    pub fn bound(&self) -> BigUint {
        BigUint::one() << self.ell
    }
    fn n_small(&self) -> Result<u64> {
        if self.m() > EXACT_DIST_MAX_BITS {
            return Err(Error::TooLarge(format!(
                "register N = 2^{} exceeds 2^{EXACT_DIST_MAX_BITS}",
                self.m()
            )));
        }
        Ok(1u64 << self.m())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    QuantumSim,
    Exact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementMode {
    ExactDist,
    Idealized,
    #[default]
    Auto,
}

impl MeasurementMode {
    fn resolve(self, pp: PhaseParams) -> MeasurementMode {
        match self {
            MeasurementMode::Auto if pp.m() <= EXACT_DIST_MAX_BITS => MeasurementMode::ExactDist,
            MeasurementMode::Auto => MeasurementMode::Idealized,
            m => m,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub backend: Backend,
    pub mode: MeasurementMode,
    /// Attempt-pairs before giving up.
    pub max_attempts: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            backend: Backend::QuantumSim,
            mode: MeasurementMode::Auto,
            max_attempts: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderStatus {
    Found(#[serde(serialize_with = "big_str")] BigUint),
    Fail,
}

/// One phase-estimation run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub attempt: u32,
    #[serde(serialize_with = "big_str")]
    pub k: BigUint,
    #[serde(rename = "N", serialize_with = "big_str")]
    pub n: BigUint,
    #[serde(rename = "j_prime", serialize_with = "big_str")]
    pub j: BigUint,
    #[serde(rename = "r_prime", serialize_with = "big_str")]
    pub r: BigUint,
    /// Whether `s^r' = id`.
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderEstimate {
    pub status: OrderStatus,
    pub attempts: u32,
    pub transcript: Vec<RunRecord>,
}

impl OrderEstimate {
    pub fn order(&self) -> Option<&BigUint> {
        match &self.status {
            OrderStatus::Found(r) => Some(r),
            OrderStatus::Fail => None,
        }
    }
}

/// Answers "what is the order of `s`, given that it is at most `2^ell`".
pub trait OrderOracle: Sync {
    fn estimate<F: FiniteField, R: Rng + ?Sized>(
        &self,
        ring: &PolyRing<F>,
        s: &Endo<F::Elem>,
        ell: u32,
        rng: &mut R,
    ) -> Result<OrderEstimate>;
}

impl OrderOracle for OracleConfig {
    fn estimate<F: FiniteField, R: Rng + ?Sized>(
        &self,
        ring: &PolyRing<F>,
        s: &Endo<F::Elem>,
        ell: u32,
        rng: &mut R,
    ) -> Result<OrderEstimate> {
        match self.backend {
            Backend::QuantumSim => estimate_order(ring, s, ell, self, rng),
            Backend::Exact => {
                let bound = PhaseParams::new(ell).bound();
                let status = match exact_order(ring, s, &bound) {
                    Ok(r) => OrderStatus::Found(r),
                    Err(Error::CapExceeded(_)) => OrderStatus::Fail,
                    Err(e) => return Err(e),
                };
                Ok(OrderEstimate {
                    status,
                    attempts: 1,
                    transcript: Vec::new(),
                })
            }
        }
    }
}

/// Smallest `r >= 1` with `s^r = id`, by repeated composition.
pub fn exact_order<F: FiniteField>(
    ring: &PolyRing<F>,
    s: &Endo<F::Elem>,
    cap: &BigUint,
) -> Result<BigUint> {
    let x = ring.rem(&ring.x(), &s.modulus)?;
    let mut cur = s.clone();
    let mut r = BigUint::one();
    while cur.image != x {
        r += 1u32;
        if &r > cap {
            return Err(Error::CapExceeded(cap.clone()));
        }
        cur = ring.endo_compose(&cur, s)?;
    }
    Ok(r)
}

/// Number of `j in [0, N)` with `j = b mod r`, for `b < r`.
fn m_b(n: u64, r: u64, b: u64) -> u64 {
    if b >= n {
        0
    } else {
        (n - 1 - b) / r + 1
    }
}

/// `|sum_{z < m} w^(k r z)|^2` with `w = exp(-2 pi i / N)`, in closed form.
fn fejer(m: u64, kr_mod_n: u64, n: u64) -> f64 {
    if kr_mod_n == 0 {
        return (m as f64) * (m as f64);
    }
    let half = PI * kr_mod_n as f64 / n as f64;
    let num = (m as f64 * half).sin();
    let den = half.sin();
    (num * num) / (den * den)
}

/// Exact distribution of the measured first register for a period `r`.
pub fn measurement_distribution(r: &BigUint, pp: PhaseParams) -> Result<Vec<f64>> {
    let n = pp.n_small()?;
    if r.is_zero() {
        return Err(Error::BadInput("order must be positive".into()));
    }
    let nf = n as f64;
    let Some(r) = r.to_u64().filter(|&r| r < n) else {
        // every residue class holds at most one j: the register is uniform
        return Ok(vec![1.0 / nf; n as usize]);
    };
    // m_b takes the value hi for b < N mod r and lo otherwise
    let hi = m_b(n, r, 0);
    let lo = m_b(n, r, r - 1);
    let n_hi = if hi == lo { r } else { n % r };
    let n_lo = r - n_hi;
    let norm = nf * nf;
    Ok((0..n)
        .map(|k| {
            let kr = ((k as u128 * r as u128) % n as u128) as u64;
            let mut p = n_hi as f64 * fejer(hi, kr, n);
            if n_lo > 0 {
                p += n_lo as f64 * fejer(lo, kr, n);
            }
            p / norm
        })
        .collect())
}

/// Draws a register value by inverse CDF.
fn sample_from(dist: &[f64], rng: &mut (impl Rng + ?Sized)) -> u64 {
    let u: f64 = rng.gen();
    let total: f64 = dist.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (k, &p) in dist.iter().enumerate() {
        acc += p;
        if target < acc {
            return k as u64;
        }
    }
    // rounding left a sliver past the last bucket
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64
}

/// `round(j N / r) mod N`, ties to even.
pub fn idealized_k(j: &BigUint, r: &BigUint, pp: PhaseParams) -> BigUint {
    let n = pp.n();
    let (q, rem) = (j * &n).div_rem(r);
    let twice: BigUint = &rem << 1u32;
    let up = match twice.cmp(r) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Equal => q.is_odd(),
        std::cmp::Ordering::Less => false,
    };
    let k = if up { q + 1u32 } else { q };
    k % n
}

pub fn sample_measurement<R: Rng + ?Sized>(
    r: &BigUint,
    pp: PhaseParams,
    mode: MeasurementMode,
    rng: &mut R,
) -> Result<BigUint> {
    match mode.resolve(pp) {
        MeasurementMode::ExactDist => {
            let dist = measurement_distribution(r, pp)?;
            Ok(sample_from(&dist, rng).into())
        }
        _ => {
            let j = rng.gen_biguint_below(r);
            Ok(idealized_k(&j, r, pp))
        }
    }
}

/// Last continued-fraction convergent `j/r` of `k/N` with `r <= bound`.
pub fn rational_reconstruct(k: &BigUint, n: &BigUint, bound: &BigUint) -> (BigUint, BigUint) {
    let (mut a, mut b) = (k.clone(), n.clone());
    // convergents h/c, seeded with the conventional (1/0, 0/1)
    let (mut h_prev, mut h) = (BigUint::one(), BigUint::zero());
    let (mut c_prev, mut c) = (BigUint::zero(), BigUint::one());
    let mut first = true;
    while !b.is_zero() {
        let (t, rem) = a.div_rem(&b);
        if first {
            // k < N, so the integer part is 0 and the first convergent is 0/1
            first = false;
            h = t.clone();
            h_prev = BigUint::one();
            c = BigUint::one();
            c_prev = BigUint::zero();
        } else {
            let h_next = &t * &h + &h_prev;
            let c_next = &t * &c + &c_prev;
            if &c_next > bound {
                break;
            }
            (h_prev, h) = (h, h_next);
            (c_prev, c) = (c, c_next);
        }
        (a, b) = (b, rem);
    }
    (h, c)
}

/// The hidden period fed to the measurement simulator. Computed on a ring
/// whose counters are discarded, so it never shows up in operation counts.
///
/// For `s` in the group generated by the Frobenius `pi`, the order of `s` on
/// each distinct-degree part of the modulus divides that part's degree; the
/// parts come from a successive-Frobenius sweep.
pub fn group_period<F: FiniteField>(ring: &PolyRing<F>, s: &Endo<F::Elem>) -> Result<BigUint> {
    let ring = ring.detached();
    let f = &s.modulus;
    let x = ring.x();
    let pi = ring.endo_from_image(f, ring.powmod(&x, ring.field().order(), f)?)?;
    let mut rest = f.clone();
    let mut w = pi.clone();
    let mut order = BigUint::one();
    let mut d = 1usize;
    while rest.deg() > 0 {
        let part = if rest.deg() < 2 * d {
            // everything left is one irreducible factor
            d = rest.deg();
            rest.clone()
        } else {
            let wr = ring.rem(&w.image, &rest)?;
            ring.fixed_part(
                &Endo {
                    modulus: rest.clone(),
                    image: wr,
                },
                &rest,
            )?
        };
        if part.deg() > 0 {
            if part.deg() % d != 0 {
                return exact_order(&ring, s, &lcm_up_to(f.deg() as u64));
            }
            let local = ring.endo_reduce(s, &part)?;
            let t = (1..=d).filter(|t| d.is_multiple_of(*t)).find(|&t| {
                ring.endo_pow(&local, &BigUint::from(t))
                    .map(|e| ring.endo_is_identity(&e))
                    .unwrap_or(false)
            });
            match t {
                Some(t) => order = lcm_big(&order, &BigUint::from(t)),
                None => return exact_order(&ring, s, &lcm_up_to(f.deg() as u64)),
            }
            rest = ring.div_exact(&rest, &part)?;
        }
        if rest.deg() == 0 {
            break;
        }
        d += 1;
        w = ring.endo_compose(&w, &pi)?;
    }
    Ok(order)
}

fn is_identity_power<F: FiniteField>(
    ring: &PolyRing<F>,
    s: &Endo<F::Elem>,
    r: &BigUint,
) -> Result<bool> {
    Ok(ring.endo_is_identity(&ring.endo_pow(s, r)?))
}

/// Shrinks a verified multiple `c` of the order to the order itself. The
/// order divides `lcm(1..deg f)`, so only primes up to `deg f` are tried.
fn descend<F: FiniteField>(ring: &PolyRing<F>, s: &Endo<F::Elem>, c: &BigUint) -> Result<BigUint> {
    let n = s.modulus.deg() as u64;
    let mut r = c.gcd(&lcm_up_to(n.max(1)));
    if !is_identity_power(ring, s, &r)? {
        r = c.clone();
    }
    for p in primes_up_to(n) {
        let p = BigUint::from(p);
        while (&r % &p).is_zero() {
            let cand = &r / &p;
            if !is_identity_power(ring, s, &cand)? {
                break;
            }
            r = cand;
        }
    }
    Ok(r)
}

/// Simulated phase estimation: two runs per attempt, rational reconstruction
/// of each, and verification of `r1`, `r2` and `lcm(r1, r2)`.
pub fn estimate_order<F: FiniteField, R: Rng + ?Sized>(
    ring: &PolyRing<F>,
    s: &Endo<F::Elem>,
    ell: u32,
    cfg: &OracleConfig,
    rng: &mut R,
) -> Result<OrderEstimate> {
    if ell == 0 {
        return Err(Error::BadInput("ell must be at least 1".into()));
    }
    let pp = PhaseParams::new(ell);
    let mode = cfg.mode.resolve(pp);
    let n = pp.n();
    let bound = pp.bound();
    let hidden = group_period(ring, s)?;
    let mut transcript = Vec::new();
    for attempt in 1..=cfg.max_attempts {
        let mut rs = Vec::with_capacity(2);
        for _ in 0..2 {
            let k = sample_measurement(&hidden, pp, mode, rng)?;
            let (j, r) = rational_reconstruct(&k, &n, &bound);
            let verified = is_identity_power(ring, s, &r)?;
            transcript.push(RunRecord {
                attempt,
                k,
                n: n.clone(),
                j,
                r: r.clone(),
                verified,
            });
            rs.push((r, verified));
        }
        let lcm = lcm_big(&rs[0].0, &rs[1].0);
        let mut found: Option<BigUint> =
            rs.iter().filter(|(_, v)| *v).map(|(r, _)| r.clone()).min();
        if found.is_none() && lcm <= bound && is_identity_power(ring, s, &lcm)? {
            found = Some(lcm);
        }
        if let Some(c) = found {
            return Ok(OrderEstimate {
                status: OrderStatus::Found(descend(ring, s, &c)?),
                attempts: attempt,
                transcript,
            });
        }
    }
    Ok(OrderEstimate {
        status: OrderStatus::Fail,
        attempts: cfg.max_attempts,
        transcript,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(p: u64) -> PolyRing<PrimeField> {
        PolyRing::new(PrimeField::new(p).unwrap())
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn exact_order_examples() {
        let r = ring(3);
        let f = r.parse("x^2+1").unwrap();
        let s = r.endo_from_image(&f, r.parse("2*x").unwrap()).unwrap();
        assert_eq!(exact_order(&r, &s, &big(100)).unwrap(), big(2));
        assert_eq!(
            exact_order(&r, &r.identity_endo(&f).unwrap(), &big(1)).unwrap(),
            big(1)
        );
        let r2 = ring(2);
        let pi = r2.frobenius(&r2.parse("x^3+x+1").unwrap(), true).unwrap();
        assert_eq!(exact_order(&r2, &pi, &big(10)).unwrap(), big(3));
        assert_eq!(
            exact_order(&r2, &pi, &big(2)),
            Err(Error::CapExceeded(big(2)))
        );
    }

    #[test]
    fn distribution_examples() {
        let d = measurement_distribution(&big(2), PhaseParams::new(1)).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[4] - 0.5).abs() < 1e-12);
        assert!(d
            .iter()
            .enumerate()
            .all(|(k, &p)| k % 4 == 0 || p.abs() < 1e-12));
        let d = measurement_distribution(&big(1), PhaseParams::new(3)).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12);
        assert_eq!((m_b(8, 3, 0), m_b(8, 3, 1), m_b(8, 3, 2)), (3, 3, 2));
        assert!(matches!(
            measurement_distribution(&big(3), PhaseParams::new(10)),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn distribution_matches_direct_sum() {
        // brute-force amplitude sum over b and z for small N
        for (r, ell) in [(3u64, 2u32), (5, 3), (6, 2), (7, 3), (40, 2)] {
            let pp = PhaseParams::new(ell);
            let n = 1u64 << pp.m();
            let d = measurement_distribution(&big(r), pp).unwrap();
            for k in 0..n {
                let mut p = 0.0;
                for b in 0..r.min(n) {
                    let (mut re, mut im) = (0.0f64, 0.0f64);
                    let mut j = b;
                    while j < n {
                        let ang = -2.0 * PI * (k * j) as f64 / n as f64;
                        re += ang.cos();
                        im += ang.sin();
                        j += r;
                    }
                    p += (re * re + im * im) / (n * n) as f64;
                }
                assert!((p - d[k as usize]).abs() < 1e-9, "r={r} k={k}");
            }
        }
    }

    #[test]
    fn sampling_examples() {
        let pp = PhaseParams::new(4);
        assert_eq!(idealized_k(&big(1), &big(3), pp), big(171));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [MeasurementMode::ExactDist, MeasurementMode::Idealized] {
            for _ in 0..50 {
                assert_eq!(
                    sample_measurement(&big(1), pp, mode, &mut rng).unwrap(),
                    big(0)
                );
                let k = sample_measurement(&big(2), PhaseParams::new(1), mode, &mut rng).unwrap();
                assert!(k == big(0) || k == big(4));
            }
        }
        // half-way ties go to the even neighbour: 1 * 8 / 16 = 0.5
        assert_eq!(idealized_k(&big(1), &big(16), PhaseParams::new(1)), big(0));
        assert_eq!(idealized_k(&big(3), &big(16), PhaseParams::new(1)), big(2));
    }

    #[test]
    fn reconstruction_examples() {
        let n = big(512);
        assert_eq!(
            rational_reconstruct(&big(171), &n, &big(16)),
            (big(1), big(3))
        );
        assert_eq!(
            rational_reconstruct(&big(0), &n, &big(16)),
            (big(0), big(1))
        );
        assert_eq!(
            rational_reconstruct(&big(256), &n, &big(16)),
            (big(1), big(2))
        );
        assert_eq!(
            rational_reconstruct(&big(171), &n, &big(1000)),
            (big(171), big(512))
        );
    }

    #[test]
    fn estimate_examples() {
        let cfg = OracleConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r2 = ring(2);
        let pi = r2.frobenius(&r2.parse("x^3+x+1").unwrap(), true).unwrap();
        let est = estimate_order(&r2, &pi, 3, &cfg, &mut rng).unwrap();
        assert_eq!(est.order(), Some(&big(3)));
        assert!(est
            .transcript
            .iter()
            .any(|run| run.verified || run.r > big(1)));
        let id = r2.identity_endo(&r2.parse("x^3+x+1").unwrap()).unwrap();
        assert_eq!(
            estimate_order(&r2, &id, 2, &cfg, &mut rng).unwrap().order(),
            Some(&big(1))
        );
    }

    #[test]
    fn order_beyond_bound_fails() {
        // irreducible factors of degrees 3 and 4 over F_2: Frobenius order 12
        let r = ring(2);
        let f = r.mul(&r.parse("x^3+x+1").unwrap(), &r.parse("x^4+x+1").unwrap());
        let pi = r.frobenius(&f, true).unwrap();
        assert_eq!(group_period(&r, &pi).unwrap(), big(12));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for mode in [MeasurementMode::ExactDist, MeasurementMode::Idealized] {
            let cfg = OracleConfig {
                mode,
                ..OracleConfig::default()
            };
            let est = estimate_order(&r, &pi, 2, &cfg, &mut rng).unwrap();
            assert_eq!(est.status, OrderStatus::Fail);
            assert_eq!(est.transcript.len(), 8);
        }
        let exact = OracleConfig {
            backend: Backend::Exact,
            ..OracleConfig::default()
        };
        assert_eq!(
            exact.estimate(&r, &pi, 2, &mut rng).unwrap().status,
            OrderStatus::Fail
        );
        assert_eq!(
            exact.estimate(&r, &pi, 4, &mut rng).unwrap().order(),
            Some(&big(12))
        );
    }

    #[test]
    fn group_period_matches_exact_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for p in [2u64, 3, 5] {
            let r = ring(p);
            let mut done = 0;
            while done < 30 {
                let f = r.random_monic(rng.gen_range(1..12), &mut rng);
                if !r.is_squarefree(&f) {
                    continue;
                }
                done += 1;
                let pi = r.frobenius(&f, true).unwrap();
                let j = big(rng.gen_range(1..6));
                let s = r.endo_pow(&pi, &j).unwrap();
                let cap = lcm_up_to(f.deg() as u64);
                assert_eq!(
                    group_period(&r, &s).unwrap(),
                    exact_order(&r, &s, &cap).unwrap()
                );
            }
        }
    }
}
