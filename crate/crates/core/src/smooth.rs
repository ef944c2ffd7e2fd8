//! Factoring integers whose prime factors are all at most a known bound.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::primes_up_to;
use crate::error::{Error, Result};

/// `d = prod p_i^e_i` with the `p_i` strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SmoothFactorization {
    pub pairs: Vec<(u64, u32)>,
}

impl SmoothFactorization {
    pub fn value(&self) -> BigUint {
        self.pairs
            .iter()
            .fold(BigUint::one(), |acc, &(p, e)| acc * BigUint::from(p).pow(e))
    }

    pub fn primes(&self) -> Vec<u64> {
        self.pairs.iter().map(|&(p, _)| p).collect()
    }

    pub fn prime_power(&self, i: usize) -> BigUint {
        let (p, e) = self.pairs[i];
        BigUint::from(p).pow(e)
    }
}

/// Factors an `n`-smooth `d`, by trial division when `d` fits in a word and
/// by a remainder tree over the primes up to `n` otherwise.
pub fn smooth_factor(d: &BigUint, n: u64) -> Result<SmoothFactorization> {
    if d.bits() <= 64 {
        smooth_factor_trial(d, n)
    } else {
        smooth_factor_tree(d, n)
    }
}

pub fn smooth_factor_trial(d: &BigUint, n: u64) -> Result<SmoothFactorization> {
    let mut rest = d
        .to_u64()
        .ok_or_else(|| Error::BadInput("trial division needs d < 2^64".into()))?;
    if rest == 0 {
        return Err(Error::BadInput("cannot factor 0".into()));
    }
    let mut pairs = Vec::new();
    for p in primes_up_to(n) {
        if rest == 1 {
            break;
        }
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            pairs.push((p, e));
        }
    }
    if rest != 1 {
        return Err(Error::NotSmooth(d.clone(), n));
    }
    Ok(SmoothFactorization { pairs })
}

/// Product tree over the primes up to `n`; `d` is reduced down the tree so
/// that each leaf sees `d mod p`, then exponents are extracted by division.
pub fn smooth_factor_tree(d: &BigUint, n: u64) -> Result<SmoothFactorization> {
    if d.is_zero() {
        return Err(Error::BadInput("cannot factor 0".into()));
    }
    let primes = primes_up_to(n);
    let mut divisors = Vec::new();
    if !primes.is_empty() && !d.is_one() {
        let tree = product_tree(&primes);
        let mut rems = vec![d % &tree[tree.len() - 1][0]];
        for level in tree.iter().rev().skip(1) {
            rems = level
                .iter()
                .enumerate()
                .map(|(i, node)| &rems[i / 2] % node)
                .collect();
        }
        divisors = primes
            .iter()
            .zip(&rems)
            .filter(|(_, r)| r.is_zero())
            .map(|(&p, _)| p)
            .collect();
    }
    let mut rest = d.clone();
    let mut pairs = Vec::with_capacity(divisors.len());
    for p in divisors {
        let bp = BigUint::from(p);
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        pairs.push((p, e));
    }
    if !rest.is_one() {
        return Err(Error::NotSmooth(d.clone(), n));
    }
    Ok(SmoothFactorization { pairs })
}

/// Levels bottom-up; level 0 holds the leaves.
fn product_tree(leaves: &[u64]) -> Vec<Vec<BigUint>> {
    let mut levels = vec![leaves.iter().map(|&p| BigUint::from(p)).collect::<Vec<_>>()];
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        let next = prev
            .chunks(2)
            .map(|c| {
                if c.len() == 2 {
                    &c[0] * &c[1]
                } else {
                    c[0].clone()
                }
            })
            .collect();
        levels.push(next);
    }
    levels
}
