//! Sampling experiments on random polynomials and the instrumented DDF
//! benchmark. Every trial draws from its own RNG stream, so a run with more
//! trials extends a shorter one instead of reshuffling it.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ddf::{ddf, extract_small_degrees, recursion_audit, DdfOptions};
use crate::error::{Error, Result};
use crate::factor::{brute_factor, factor, BRUTE_MAX_DEGREE};
use crate::field::FiniteField;
use crate::order::OrderOracle;
use crate::poly::{Poly, PolyRing};

/// RNG for trial `index` of an experiment seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountPolicy {
    #[default]
    Distinct,
    Multiplicity,
}

/// Running sums of integer observations; merging is exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Moments {
    pub count: u64,
    pub sum: u128,
    pub sum_sq: u128,
}

impl Moments {
    pub fn push(&mut self, x: u64) {
        self.count += 1;
        self.sum += x as u128;
        self.sum_sq += (x as u128) * (x as u128);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum as f64 / self.count as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        let n = self.count as f64;
        let num = self.count as i128 * self.sum_sq as i128 - (self.sum as i128).pow(2);
        num as f64 / (n * n)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub p: u64,
    pub n: usize,
    pub trials: u64,
    pub policy: CountPolicy,
    pub mean: f64,
    pub variance: f64,
    pub exhaustive: bool,
}

fn count_factors<F, O>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
    policy: CountPolicy,
    oracle: &O,
    rng: &mut ChaCha8Rng,
) -> Result<u64>
where
    F: FiniteField,
    O: OrderOracle,
{
    let res = if f.deg() <= BRUTE_MAX_DEGREE && ring.field().order().bits() <= 20 {
        brute_factor(ring, f)?
    } else {
        with_retries(|| factor(ring, f, oracle, &DdfOptions::default(), rng))?
    };
    Ok(match policy {
        CountPolicy::Distinct => res.factors.len() as u64,
        CountPolicy::Multiplicity => res.factors.iter().map(|(_, e)| *e as u64).sum(),
    })
}

/// Re-runs `run` after an exhausted oracle; each run draws fresh randomness
/// from the trial stream.
fn with_retries<T>(mut run: impl FnMut() -> Result<T>) -> Result<T> {
    let mut left = ORACLE_RETRIES;
    loop {
        match run() {
            Err(Error::OracleExhausted) if left > 0 => left -= 1,
            other => return other,
        }
    }
}

pub const ORACLE_RETRIES: u32 = 3;

/// Mean and variance of the number of irreducible factors of a uniform
/// monic polynomial of degree `n`.
pub fn factor_count_sampled<F, O>(
    ring: &PolyRing<F>,
    n: usize,
    trials: u64,
    seed: u64,
    policy: CountPolicy,
    oracle: &O,
) -> Result<CountReport>
where
    F: FiniteField,
    O: OrderOracle,
{
    let mut m = Moments::default();
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let f = ring.random_monic(n, &mut rng);
        m.push(count_factors(ring, &f, policy, oracle, &mut rng)?);
    }
    Ok(CountReport {
        p: ring.field().characteristic(),
        n,
        trials,
        policy,
        mean: m.mean(),
        variance: m.variance(),
        exhaustive: false,
    })
}

/// Every monic polynomial of degree `n`, in base-`q` order of the lower
/// coefficients.
pub fn all_monic<F: FiniteField>(
    ring: &PolyRing<F>,
    n: usize,
) -> Result<impl Iterator<Item = Poly<F::Elem>> + '_> {
    let q = ring.field().order().to_u64().unwrap_or(u64::MAX);
    let total = (q as u128)
        .checked_pow(n as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| {
            Error::TooLarge(format!(
                "q^n monic polynomials of degree {n} is too many to enumerate"
            ))
        })? as u64;
    Ok((0..total).map(move |mut idx| {
        let mut c = Vec::with_capacity(n + 1);
        for _ in 0..n {
            c.push(ring.field().element(idx % q));
            idx /= q;
        }
        c.push(ring.field().one());
        ring.from_coeffs(c)
    }))
}

/// Exact mean and variance over all monic polynomials of degree `n`.
pub fn factor_count_exhaustive<F, O>(
    ring: &PolyRing<F>,
    n: usize,
    policy: CountPolicy,
    oracle: &O,
) -> Result<CountReport>
where
    F: FiniteField,
    O: OrderOracle,
{
    let mut m = Moments::default();
    let mut rng = trial_rng(0, 0);
    for f in all_monic(ring, n)? {
        m.push(count_factors(ring, &f, policy, oracle, &mut rng)?);
    }
    Ok(CountReport {
        p: ring.field().characteristic(),
        n,
        trials: m.count,
        policy,
        mean: m.mean(),
        variance: m.variance(),
        exhaustive: true,
    })
}

/// Splitting degree `d = lcm` of the irreducible degrees of a squarefree
/// `f`, from a classical successive-Frobenius sweep.
pub fn splitting_degree<F: FiniteField>(ring: &PolyRing<F>, f: &Poly<F::Elem>) -> Result<BigUint> {
    let pi = ring.detached().frobenius(f, true)?;
    let (parts, _) = extract_small_degrees(&ring.detached(), &pi, 1, f.deg())?;
    Ok(parts.iter().fold(BigUint::from(1u32), |acc, (_, k)| {
        acc.lcm(&BigUint::from(*k))
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingReport {
    pub p: u64,
    pub n: usize,
    pub trials: u64,
    /// `0.5 ln(n)^2`.
    pub center: f64,
    /// `0.75 ln(n)^2`.
    pub threshold: f64,
    pub fraction_exceeding: f64,
    pub mean_ln_d: f64,
    /// `d` (as a decimal string) to number of samples.
    pub histogram: BTreeMap<String, u64>,
    pub exhaustive: bool,
}

fn splitting_report(p: u64, n: usize, ds: &[BigUint], exhaustive: bool) -> SplittingReport {
    let ln_n = (n.max(1) as f64).ln();
    let threshold = 0.75 * ln_n * ln_n;
    let mut hist: BTreeMap<BigUint, u64> = BTreeMap::new();
    let mut exceed = 0u64;
    let mut sum_ln = 0.0;
    for d in ds {
        let ln_d = ln_big(d);
        sum_ln += ln_d;
        if ln_d > threshold {
            exceed += 1;
        }
        *hist.entry(d.clone()).or_default() += 1;
    }
    let t = ds.len().max(1) as f64;
    SplittingReport {
        p,
        n,
        trials: ds.len() as u64,
        center: 0.5 * ln_n * ln_n,
        threshold,
        fraction_exceeding: exceed as f64 / t,
        mean_ln_d: sum_ln / t,
        histogram: hist.into_iter().map(|(d, c)| (d.to_string(), c)).collect(),
        exhaustive,
    }
}

fn ln_big(d: &BigUint) -> f64 {
    if d.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = d.bits();
    if bits <= 1000 {
        d.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        (d >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Uniform squarefree monic polynomial of degree `n`, by rejection.
pub fn random_squarefree<F: FiniteField>(
    ring: &PolyRing<F>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Poly<F::Elem> {
    loop {
        let f = ring.random_monic(n, rng);
        if ring.is_squarefree(&f) {
            return f;
        }
    }
}

pub fn splitting_degree_sampled<F: FiniteField>(
    ring: &PolyRing<F>,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<SplittingReport> {
    let mut ds = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = trial_rng(seed, t);
        let f = random_squarefree(ring, n, &mut rng);
        ds.push(splitting_degree(ring, &f)?);
    }
    Ok(splitting_report(
        ring.field().characteristic(),
        n,
        &ds,
        false,
    ))
}

pub fn splitting_degree_exhaustive<F: FiniteField>(
    ring: &PolyRing<F>,
    n: usize,
) -> Result<SplittingReport> {
    let mut ds = Vec::new();
    for f in all_monic(ring, n)? {
        if ring.is_squarefree(&f) {
            ds.push(splitting_degree(ring, &f)?);
        }
    }
    Ok(splitting_report(
        ring.field().characteristic(),
        n,
        &ds,
        true,
    ))
}

/// One instrumented DDF run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub trial: u64,
    pub compositions: u64,
    pub multiplications: u64,
    pub mulmods: u64,
    pub wall_ms: f64,
    pub depth: usize,
    pub fallbacks: usize,
}

pub const BENCH_CSV_HEADER: &str =
    "n,trial,compositions,multiplications,mulmods,wall_ms,depth,fallbacks";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3},{},{}",
            self.n,
            self.trial,
            self.compositions,
            self.multiplications,
            self.mulmods,
            self.wall_ms,
            self.depth,
            self.fallbacks
        )
    }
}

/// DDF on `trials` random squarefree inputs for each degree in `ns`.
pub fn bench<F, O>(
    ring: &PolyRing<F>,
    ns: &[usize],
    trials: u64,
    seed: u64,
    oracle: &O,
    opts: &DdfOptions,
) -> Result<Vec<BenchRow>>
where
    F: FiniteField,
    O: OrderOracle,
{
    let mut rows = Vec::new();
    for &n in ns {
        for t in 0..trials {
            let mut rng = trial_rng(seed ^ (n as u64).rotate_left(32), t);
            let f = random_squarefree(ring, n, &mut rng);
            let start = Instant::now();
            let (ops, depth, fallbacks) = if n == 0 {
                Default::default()
            } else {
                let res = with_retries(|| ddf(ring, &f, oracle, opts, &mut rng))?;
                (res.ops, recursion_audit(&res.trace), res.fallbacks)
            };
            rows.push(BenchRow {
                n,
                trial: t,
                compositions: ops.compositions,
                multiplications: ops.multiplications,
                mulmods: ops.mulmods,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                depth,
                fallbacks,
            });
        }
    }
    Ok(rows)
}
