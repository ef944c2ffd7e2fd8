//! Distinct-degree factorization driven by Frobenius orders.
//!
//! A FIFO queue of work items `(f, s)` is processed, where `s` divides every
//! irreducible degree of `f`. Each round either recognises `f` as a
//! distinct-degree part or splits it using the order `d` of `pi^s` and the
//! prime factorization of `d`.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use serde::Serialize;

use crate::arith::ceil_two_thirds_power;
use crate::error::{Error, Result};
use crate::field::FiniteField;
use crate::order::{big_str, OrderOracle};
use crate::poly::{CounterSnapshot, Endo, Poly, PolyRing};
use crate::smooth::{smooth_factor, SmoothFactorization};

#[derive(Clone, Debug, Default)]
pub struct DdfOptions {
    /// Bit bound for the first oracle call of every round; defaults to
    /// [`default_ell`] of the input degree.
    pub ell: Option<u32>,
    /// Keep the text of each round's polynomial in the trace.
    pub record_polys: bool,
}

/// `ceil(log2(n)^2) + 1`, and never below `ceil(log2 n) + 1`.
pub fn default_ell(n: usize) -> u32 {
    let lg = (n.max(1) as f64).log2();
    let sq = (lg * lg - 1e-9).ceil().max(0.0) as u32 + 1;
    let floor = (lg - 1e-9).ceil().max(0.0) as u32 + 1;
    sq.max(floor)
}

/// Bit bound for the second oracle call after small factors are stripped:
/// `ceil(n^(1/3) * log2 n)`, at least 1.
pub fn fallback_ell(n: usize) -> u32 {
    let n = n.max(2) as f64;
    ((n.cbrt() * n.log2()).ceil() as u32).max(1)
}

/// One processed work item.
#[derive(Clone, Debug, Serialize)]
pub struct RoundRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub input_degree: usize,
    pub s: usize,
    pub ell_used: Option<u32>,
    pub fallback: bool,
    #[serde(serialize_with = "opt_big_str")]
    pub d: Option<BigUint>,
    pub primes: Vec<u64>,
    /// Ids of the work items enqueued by this round.
    pub children: Vec<usize>,
    /// Degrees of the distinct-degree parts this round emitted directly.
    pub emitted: Vec<usize>,
    /// Sum of the polynomial degrees of the emitted parts.
    pub emitted_total: usize,
    pub compositions: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poly: Option<String>,
}

fn opt_big_str<S: serde::Serializer>(
    v: &Option<BigUint>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => big_str(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug)]
pub struct DdfResult<E> {
    /// `(g, k)`: the product of all irreducible factors of degree `k`,
    /// increasing in `k`.
    pub parts: Vec<(Poly<E>, usize)>,
    pub trace: Vec<RoundRecord>,
    pub ops: CounterSnapshot,
    pub fallbacks: usize,
}

/// Longest parent-to-child chain of work items, counting the root as 1.
pub fn recursion_audit(trace: &[RoundRecord]) -> usize {
    let mut depth = vec![0usize; trace.len()];
    for (i, rec) in trace.iter().enumerate() {
        depth[i] = match rec.parent {
            Some(p) if p < i => depth[p] + 1,
            _ => 1,
        };
    }
    depth.into_iter().max().unwrap_or(0)
}

/// `s^(d/p_i)` for every prime `p_i` of `fac`, in the order of `fac`, by
/// splitting the prime list in halves and pre-raising each half by the
/// other half's prime powers.
pub fn frobenius_power_sequence<F: FiniteField>(
    ring: &PolyRing<F>,
    s: &Endo<F::Elem>,
    fac: &SmoothFactorization,
) -> Result<Vec<Endo<F::Elem>>> {
    let mut out = Vec::with_capacity(fac.pairs.len());
    if !fac.pairs.is_empty() {
        power_sequence_rec(ring, s.clone(), &fac.pairs, &mut out)?;
    }
    Ok(out)
}

fn prime_power_product(pairs: &[(u64, u32)]) -> BigUint {
    pairs
        .iter()
        .fold(BigUint::one(), |acc, &(p, e)| acc * BigUint::from(p).pow(e))
}

fn power_sequence_rec<F: FiniteField>(
    ring: &PolyRing<F>,
    base: Endo<F::Elem>,
    pairs: &[(u64, u32)],
    out: &mut Vec<Endo<F::Elem>>,
) -> Result<()> {
    if let [(p, e)] = pairs {
        out.push(ring.endo_pow(&base, &BigUint::from(*p).pow(e - 1))?);
        return Ok(());
    }
    let (left, right) = pairs.split_at(pairs.len() / 2);
    let for_left = ring.endo_pow(&base, &prime_power_product(right))?;
    power_sequence_rec(ring, for_left, left, out)?;
    let for_right = ring.endo_pow(&base, &prime_power_product(left))?;
    power_sequence_rec(ring, for_right, right, out)
}

/// Successive-Frobenius sweep over degrees `s, 2s, ...` up to `bound`.
/// `sigma_s` is `pi^s` modulo `f`, and `s` must divide every irreducible
/// degree of `f`. Returns the parts found and the cofactor, whose
/// irreducible degrees all exceed `bound`.
#[allow(clippy::type_complexity)]
pub fn extract_small_degrees<F: FiniteField>(
    ring: &PolyRing<F>,
    sigma_s: &Endo<F::Elem>,
    s: usize,
    bound: usize,
) -> Result<(Vec<(Poly<F::Elem>, usize)>, Poly<F::Elem>)> {
    let mut rest = sigma_s.modulus.clone();
    let mut step = sigma_s.clone();
    let mut w = sigma_s.clone();
    let mut parts = Vec::new();
    let mut i = s;
    while i <= bound && rest.deg() > 0 {
        if rest.deg() < 2 * i {
            // a single irreducible factor remains
            if rest.deg() <= bound {
                parts.push((rest.clone(), rest.deg()));
                rest = ring.one();
            }
            break;
        }
        let part = ring.fixed_part(&w, &rest)?;
        if part.deg() > 0 {
            rest = ring.div_exact(&rest, &part)?;
            parts.push((part, i));
            if rest.deg() == 0 {
                break;
            }
            step = ring.endo_reduce(&step, &rest)?;
            w = ring.endo_reduce(&w, &rest)?;
        }
        i += s;
        if i <= bound && rest.deg() >= 2 * i {
            w = ring.endo_compose(&w, &step)?;
        }
    }
    Ok((parts, rest))
}

/// Outcome of the order computation with fallback.
#[derive(Clone, Debug)]
pub struct OrderOutcome<E> {
    /// Distinct-degree parts stripped by the fallback.
    pub emitted: Vec<(Poly<E>, usize)>,
    /// `pi^s` restricted to the remaining modulus.
    pub sigma: Endo<E>,
    pub d: BigUint,
    pub fallback: bool,
    pub ell_used: u32,
}

/// Order of `sigma_s = pi^s mod f`. When the oracle fails at `ell`, factors
/// of degree at most `ceil(n^(2/3))` are stripped and the order on the
/// remainder is estimated with the larger fallback bound.
pub fn order_with_fallback<F, O, R>(
    ring: &PolyRing<F>,
    sigma_s: &Endo<F::Elem>,
    s: usize,
    ell: u32,
    oracle: &O,
    rng: &mut R,
) -> Result<OrderOutcome<F::Elem>>
where
    F: FiniteField,
    O: OrderOracle,
    R: Rng + ?Sized,
{
    let est = oracle.estimate(ring, sigma_s, ell, rng)?;
    if let Some(d) = est.order() {
        return Ok(OrderOutcome {
            emitted: Vec::new(),
            sigma: sigma_s.clone(),
            d: d.clone(),
            fallback: false,
            ell_used: ell,
        });
    }
    let n = sigma_s.modulus.deg();
    let bound = ceil_two_thirds_power(n as u64) as usize;
    let (emitted, rest) = extract_small_degrees(ring, sigma_s, s, bound)?;
    let ell2 = fallback_ell(n);
    if rest.deg() == 0 {
        return Ok(OrderOutcome {
            emitted,
            sigma: Endo {
                modulus: rest,
                image: ring.zero(),
            },
            d: BigUint::one(),
            fallback: true,
            ell_used: ell2,
        });
    }
    let sigma = ring.endo_reduce(sigma_s, &rest)?;
    let est = oracle.estimate(ring, &sigma, ell2, rng)?;
    let d = est.order().cloned().ok_or(Error::OracleExhausted)?;
    Ok(OrderOutcome {
        emitted,
        sigma,
        d,
        fallback: true,
        ell_used: ell2,
    })
}

struct WorkItem<E> {
    id: usize,
    parent: Option<usize>,
    depth: usize,
    f: Poly<E>,
    s: usize,
    /// `x^q mod f`, inherited from the parent by reduction.
    pi: Poly<E>,
}

/// Distinct-degree factorization of a monic squarefree `f`.
pub fn ddf<F, O, R>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
    oracle: &O,
    opts: &DdfOptions,
    rng: &mut R,
) -> Result<DdfResult<F::Elem>>
where
    F: FiniteField,
    O: OrderOracle,
    R: Rng + ?Sized,
{
    let n = match f.degree() {
        Some(n) if n >= 1 && ring.is_monic(f) => n,
        _ => {
            return Err(Error::BadInput(
                "ddf needs a monic polynomial of degree >= 1".into(),
            ))
        }
    };
    let start = ring.counters();
    let root_pi = ring.frobenius(f, true)?.image;
    let ell = opts.ell.unwrap_or_else(|| default_ell(n));

    let mut by_degree: BTreeMap<usize, Poly<F::Elem>> = BTreeMap::new();
    let mut emit = |g: Poly<F::Elem>, k: usize| {
        let merged = match by_degree.remove(&k) {
            Some(prev) => ring.mul(&prev, &g),
            None => g,
        };
        by_degree.insert(k, merged);
    };

    let mut trace = Vec::new();
    let mut fallbacks = 0;
    let mut next_id = 1;
    let mut queue = VecDeque::from([WorkItem {
        id: 0,
        parent: None,
        depth: 1,
        f: f.clone(),
        s: 1,
        pi: root_pi,
    }]);

    while let Some(item) = queue.pop_front() {
        let before = ring.counters();
        let mut rec = RoundRecord {
            id: item.id,
            parent: item.parent,
            depth: item.depth,
            input_degree: item.f.deg(),
            s: item.s,
            ell_used: None,
            fallback: false,
            d: None,
            primes: Vec::new(),
            children: Vec::new(),
            emitted: Vec::new(),
            emitted_total: 0,
            compositions: 0,
            poly: opts.record_polys.then(|| ring.format(&item.f)),
        };
        let pi = ring.endo_from_image(&item.f, item.pi.clone())?;
        let sigma = ring.endo_pow(&pi, &BigUint::from(item.s))?;
        if ring.endo_is_identity(&sigma) {
            rec.emitted.push(item.s);
            rec.emitted_total += item.f.deg();
            emit(item.f, item.s);
        } else {
            let out = order_with_fallback(ring, &sigma, item.s, ell, oracle, rng)?;
            rec.ell_used = Some(out.ell_used);
            rec.fallback = out.fallback;
            if out.fallback {
                fallbacks += 1;
            }
            for (g, k) in out.emitted {
                rec.emitted.push(k);
                rec.emitted_total += g.deg();
                emit(g, k);
            }
            let sigma = out.sigma;
            let f = sigma.modulus.clone();
            if f.deg() > 0 {
                let fac = smooth_factor(&out.d, f.deg() as u64)?;
                rec.d = Some(out.d.clone());
                rec.primes = fac.primes();
                let radical: BigUint = fac.primes().iter().map(|&p| BigUint::from(p)).product();
                let first = ring.endo_pow(&sigma, &(&out.d / &radical))?;
                let g = ring.fixed_part(&first, &f)?;
                let mut children: Vec<(Poly<F::Elem>, usize)> = Vec::new();
                if g.deg() > 0 {
                    children.push((g.clone(), item.s));
                }
                let mut cur = ring.div_exact(&f, &g)?;
                let mut s_cur = item.s;
                if cur.deg() > 0 {
                    let powers = frobenius_power_sequence(ring, &sigma, &fac)?;
                    for (i, tau) in powers.iter().enumerate() {
                        if cur.deg() == 0 {
                            break;
                        }
                        let pe = fac.prime_power(i);
                        let pe = usize::try_from(pe).map_err(|_| {
                            Error::InvariantViolation("prime power exceeds the degree".into())
                        })?;
                        let gi = ring.fixed_part(tau, &cur)?;
                        if gi.deg() == 0 {
                            // every factor of cur has p_i^e_i in its degree
                            s_cur *= pe;
                        } else if gi.deg() < cur.deg() {
                            children.push((ring.div_exact(&cur, &gi)?, s_cur * pe));
                            cur = gi;
                        }
                    }
                    if cur.deg() > 0 {
                        children.push((cur, s_cur));
                    }
                }
                if children.len() == 1 && children[0].0 == item.f && children[0].1 == item.s {
                    return Err(Error::InvariantViolation(format!(
                        "round on degree {} with s = {} made no progress",
                        item.f.deg(),
                        item.s
                    )));
                }
                for (child, s_child) in children {
                    if child.deg() < 2 * s_child {
                        // all factor degrees are multiples of s_child
                        let k = child.deg();
                        rec.emitted.push(k);
                        rec.emitted_total += k;
                        emit(child, k);
                        continue;
                    }
                    let pi_child = ring.rem(&item.pi, &child)?;
                    rec.children.push(next_id);
                    queue.push_back(WorkItem {
                        id: next_id,
                        parent: Some(item.id),
                        depth: item.depth + 1,
                        f: child,
                        s: s_child,
                        pi: pi_child,
                    });
                    next_id += 1;
                }
            }
        }
        rec.compositions = (ring.counters() - before).compositions;
        trace.push(rec);
    }

    let parts: Vec<(Poly<F::Elem>, usize)> = by_degree.into_iter().map(|(k, g)| (g, k)).collect();
    let product = parts
        .iter()
        .fold(ring.one(), |acc, (g, _)| ring.mul(&acc, g));
    if product != *f {
        return Err(Error::InvariantViolation(format!(
            "distinct-degree parts of {} multiply to {}",
            ring.format(f),
            ring.format(&product)
        )));
    }
    Ok(DdfResult {
        parts,
        trace,
        ops: ring.counters() - start,
        fallbacks,
    })
}
