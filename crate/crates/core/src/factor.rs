//! Squarefree, equal-degree and complete factorization, the irreducibility
//! test, and a deterministic Berlekamp factorizer used as a reference.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;

use crate::arith::factor_u64;
use crate::ddf::{ddf, DdfOptions};
use crate::error::{Error, Result};
use crate::field::FiniteField;
use crate::order::OrderOracle;
use crate::poly::{Poly, PolyRing};

/// `unit * prod(g^e)`; factors are monic, irreducible, distinct and sorted
/// canonically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorResult<E> {
    pub unit: E,
    pub factors: Vec<(Poly<E>, usize)>,
}

impl<E: Ord> FactorResult<E> {
    fn sort(&mut self) {
        self.factors
            .sort_by(|a, b| a.0.canonical_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
}

/// Rabin's test for a monic `f`: `x^(q^n) = x mod f` and
/// `gcd(x^(q^(n/r)) - x, f) = 1` for every prime `r | n`.
pub fn is_irreducible<F: FiniteField>(ring: &PolyRing<F>, f: &Poly<F::Elem>) -> bool {
    let n = match f.degree() {
        None | Some(0) => return false,
        Some(1) => return true,
        Some(n) => n,
    };
    let Ok(pi) = ring
        .powmod(&ring.x(), ring.field().order(), f)
        .and_then(|img| ring.endo_from_image(f, img))
    else {
        return false;
    };
    let power = |k: usize| ring.endo_pow(&pi, &BigUint::from(k)).map(|e| e.image);
    let x = ring.x();
    match power(n) {
        Ok(img) if img == x => {}
        _ => return false,
    }
    for (r, _) in factor_u64(n as u64) {
        let Ok(img) = power(n / r as usize) else {
            return false;
        };
        match ring.gcd(&ring.sub(&img, &x), f) {
            Ok(g) if ring.is_one(&g) => {}
            _ => return false,
        }
    }
    true
}

/// Coefficientwise p-th root of a polynomial in `x^p`.
fn poly_pth_root<F: FiniteField>(ring: &PolyRing<F>, f: &Poly<F::Elem>) -> Poly<F::Elem> {
    let p = ring.field().characteristic() as usize;
    let coeffs = f
        .coeffs()
        .iter()
        .step_by(p)
        .map(|c| ring.field().pth_root(c))
        .collect();
    ring.from_coeffs(coeffs)
}

/// Squarefree factorization of `monic(f)`: pairwise coprime squarefree parts
/// with distinct multiplicities, increasing in multiplicity.
pub fn sff<F: FiniteField>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
) -> Result<Vec<(Poly<F::Elem>, usize)>> {
    if f.is_zero() {
        return Err(Error::BadInput("squarefree factorization of 0".into()));
    }
    let mut out = Vec::new();
    sff_into(ring, &ring.monic(f), 1, &mut out)?;
    out.sort_by_key(|(_, m)| *m);
    Ok(out)
}

fn sff_into<F: FiniteField>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
    scale: usize,
    out: &mut Vec<(Poly<F::Elem>, usize)>,
) -> Result<()> {
    if f.deg() == 0 {
        return Ok(());
    }
    let mut c = ring.gcd(f, &ring.derivative(f))?;
    let mut w = ring.div_exact(f, &c)?;
    let mut i = 1;
    while !ring.is_one(&w) {
        let y = ring.gcd(&w, &c)?;
        let part = ring.div_exact(&w, &y)?;
        if !ring.is_one(&part) {
            out.push((part, i * scale));
        }
        c = ring.div_exact(&c, &y)?;
        w = y;
        i += 1;
    }
    if !ring.is_one(&c) {
        let p = ring.field().characteristic() as usize;
        sff_into(ring, &poly_pth_root(ring, &c), scale * p, out)?;
    }
    Ok(())
}

/// Splits `f`, a product of distinct irreducibles all of degree `d`, into
/// its factors. Returns the factors and the number of random splitting
/// rounds spent.
pub fn edf<F: FiniteField, R: Rng + ?Sized>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
    d: usize,
    rng: &mut R,
) -> Result<(Vec<Poly<F::Elem>>, u64)> {
    let n = f.deg();
    if d == 0 || f.is_zero() || n % d != 0 {
        return Err(Error::BadInput(format!(
            "degree {n} is not a multiple of {d}"
        )));
    }
    let field = ring.field();
    let q = field.order();
    let even = field.characteristic() == 2;
    let half_exp = (q.pow(d as u32) - 1u32) >> 1;
    let trace_len = d * field.extension_degree();
    let minus_one = ring.from_coeffs(vec![field.neg(&field.one())]);

    let mut done = Vec::new();
    let mut stack = vec![ring.monic(f)];
    let mut rounds = 0;
    while let Some(g) = stack.pop() {
        if g.deg() <= d {
            done.push(g);
            continue;
        }
        rounds += 1;
        let u = ring.random(g.deg(), rng);
        if u.deg() == 0 {
            stack.push(g);
            continue;
        }
        let mut h = ring.gcd(&u, &g)?;
        if ring.is_one(&h) {
            let t = if even {
                let mut acc = u.clone();
                let mut sq = u;
                for _ in 1..trace_len {
                    sq = ring.mulmod(&sq, &sq, &g)?;
                    acc = ring.add(&acc, &sq);
                }
                acc
            } else {
                ring.add(&ring.powmod(&u, &half_exp, &g)?, &minus_one)
            };
            h = ring.gcd(&t, &g)?;
        }
        if h.deg() == 0 || h.deg() == g.deg() {
            stack.push(g);
            continue;
        }
        let other = ring.div_exact(&g, &h)?;
        stack.push(h);
        stack.push(other);
    }
    done.sort_by(|a, b| a.canonical_cmp(b));
    Ok((done, rounds))
}

/// Complete factorization: squarefree parts, then distinct-degree splitting
/// driven by the order oracle, then equal-degree splitting.
pub fn factor<F, O, R>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
    oracle: &O,
    opts: &DdfOptions,
    rng: &mut R,
) -> Result<FactorResult<F::Elem>>
where
    F: FiniteField,
    O: OrderOracle,
    R: Rng + ?Sized,
{
    let unit = f
        .lead()
        .cloned()
        .ok_or_else(|| Error::BadInput("cannot factor 0".into()))?;
    let mut result = FactorResult {
        unit,
        factors: Vec::new(),
    };
    for (part, mult) in sff(ring, f)? {
        for (g, d) in ddf(ring, &part, oracle, opts, rng)?.parts {
            let (irr, _) = edf(ring, &g, d, rng)?;
            result.factors.extend(irr.into_iter().map(|h| (h, mult)));
        }
    }
    result.sort();
    audit_factorization(ring, f, &result)?;
    Ok(result)
}

/// Checks `unit * prod(g^e) == f`.
pub fn audit_factorization<F: FiniteField>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
    res: &FactorResult<F::Elem>,
) -> Result<()> {
    let mut acc = ring.constant(res.unit.clone());
    for (g, e) in &res.factors {
        for _ in 0..*e {
            acc = ring.mul(&acc, g);
        }
    }
    if acc != *f {
        return Err(Error::InvariantViolation(format!(
            "factorization of {} reconstructs to {}",
            ring.format(f),
            ring.format(&acc)
        )));
    }
    Ok(())
}

pub const BRUTE_MAX_DEGREE: usize = 24;
pub const BRUTE_MAX_ORDER: u64 = 1 << 20;

/// Deterministic reference factorizer: Berlekamp's algorithm with an
/// exhaustive sweep over the field elements, plus repeated division for
/// multiplicities. Shares no code path with [`factor`] beyond ring
/// arithmetic.
pub fn brute_factor<F: FiniteField>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
) -> Result<FactorResult<F::Elem>> {
    let n = f
        .degree()
        .ok_or_else(|| Error::BadInput("cannot factor 0".into()))?;
    let q = ring
        .field()
        .order()
        .to_u64()
        .filter(|&q| q <= BRUTE_MAX_ORDER);
    if n > BRUTE_MAX_DEGREE || q.is_none() {
        return Err(Error::TooLarge(format!(
            "reference factorizer needs degree <= {BRUTE_MAX_DEGREE} and q <= 2^20"
        )));
    }
    let q = q.unwrap();
    let unit = f.lead().unwrap().clone();
    let mut rest = ring.monic(f);
    let mut factors = Vec::new();
    while rest.deg() > 0 {
        // strip p-th powers until the derivative is nonzero
        let mut g = rest.clone();
        while ring.derivative(&g).is_zero() {
            g = poly_pth_root(ring, &g);
        }
        let radical = ring.div_exact(&g, &ring.gcd(&g, &ring.derivative(&g))?)?;
        for h in berlekamp(ring, &radical, q)? {
            let mut e = 0;
            loop {
                let (quo, r) = ring.divrem(&rest, &h)?;
                if !r.is_zero() {
                    break;
                }
                rest = quo;
                e += 1;
            }
            factors.push((h, e));
        }
    }
    let mut res = FactorResult { unit, factors };
    res.sort();
    Ok(res)
}

/// Irreducible factors of a monic squarefree `f`.
fn berlekamp<F: FiniteField>(
    ring: &PolyRing<F>,
    f: &Poly<F::Elem>,
    q: u64,
) -> Result<Vec<Poly<F::Elem>>> {
    let n = f.deg();
    if n <= 1 {
        return Ok(if n == 1 { vec![f.clone()] } else { vec![] });
    }
    let field = ring.field();
    // row i of Q - I holds the coefficients of x^(q i) - x^i mod f
    let xq = ring.powmod(&ring.x(), field.order(), f)?;
    let mut rows = Vec::with_capacity(n);
    let mut cur = ring.one();
    for i in 0..n {
        let mut row = cur.coeffs().to_vec();
        row.resize(n, field.zero());
        row[i] = field.sub(&row[i], &field.one());
        rows.push(row);
        cur = ring.mulmod(&cur, &xq, f)?;
    }
    let basis = left_kernel(field, rows);
    let k = basis.len();
    let mut parts = vec![f.clone()];
    for v in &basis {
        if parts.len() == k {
            break;
        }
        let v = ring.from_coeffs(v.clone());
        if v.deg() == 0 {
            continue;
        }
        for c in 0..q {
            if parts.len() == k {
                break;
            }
            let shifted = ring.sub(&v, &ring.constant(field.element(c)));
            let mut next = Vec::with_capacity(parts.len() + 1);
            for g in parts {
                if g.deg() > 1 {
                    let h = ring.gcd(&shifted, &g)?;
                    if h.deg() > 0 && h.deg() < g.deg() {
                        next.push(ring.div_exact(&g, &h)?);
                        next.push(h);
                        continue;
                    }
                }
                next.push(g);
            }
            parts = next;
        }
    }
    if parts.len() != k {
        return Err(Error::InvariantViolation(format!(
            "Berlekamp found {} of {k} factors",
            parts.len()
        )));
    }
    Ok(parts)
}

/// Basis of `{ v : v * M = 0 }` for a square matrix given by rows.
fn left_kernel<F: FiniteField>(field: &F, rows: Vec<Vec<F::Elem>>) -> Vec<Vec<F::Elem>> {
    let n = rows.len();
    // transpose so the left kernel becomes an ordinary null space
    let mut a: Vec<Vec<F::Elem>> = (0..n)
        .map(|j| (0..n).map(|i| rows[i][j].clone()).collect())
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(pr) = (r..n).find(|&i| !field.is_zero(&a[i][col])) else {
            continue;
        };
        a.swap(r, pr);
        let inv = field.inv(&a[r][col]).expect("nonzero pivot");
        a[r] = a[r].iter().map(|x| field.mul(x, &inv)).collect();
        for i in 0..n {
            if i != r && !field.is_zero(&a[i][col]) {
                let c = a[i][col].clone();
                let pivot_row = a[r].clone();
                field.sub_scaled(&mut a[i], &c, &pivot_row);
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![field.zero(); n];
            v[fc] = field.one();
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = field.neg(&a[row][fc]);
            }
            v
        })
        .collect()
}

/// Number of monic irreducibles of degree `n` over `F_q` (necklace count),
/// used as an exhaustive cross-check.
pub fn count_irreducibles(q: u64, n: u32) -> BigUint {
    let mut total = num_bigint::BigInt::from(0);
    for d in 1..=n {
        if n.is_multiple_of(d) {
            let mu = mobius(n / d);
            total += num_bigint::BigInt::from(mu) * num_bigint::BigInt::from(q).pow(d);
        }
    }
    (total / num_bigint::BigInt::from(n))
        .to_biguint()
        .unwrap_or_else(BigUint::one)
}

fn mobius(n: u32) -> i32 {
    let f = factor_u64(n as u64);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ExtensionField, PrimeField};
    use crate::order::OracleConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(p: u64) -> PolyRing<PrimeField> {
        PolyRing::new(PrimeField::new(p).unwrap())
    }

    #[test]
    fn irreducibility_examples() {
        let r = ring(2);
        assert!(is_irreducible(&r, &r.parse("x^2+x+1").unwrap()));
        assert!(!is_irreducible(&r, &r.parse("x^2+1").unwrap()));
        assert!(is_irreducible(&r, &r.parse("x^3+x+1").unwrap()));
        assert!(!is_irreducible(&r, &r.parse("x^4").unwrap()));
    }

    #[test]
    fn irreducible_counts_match_necklace_formula() {
        for (p, n) in [(2u64, 6u32), (3, 4), (5, 3)] {
            let r = ring(p);
            let total = p.pow(n);
            let found = (0..total)
                .filter(|&i| {
                    let mut c: Vec<u64> = (0..n).map(|k| (i / p.pow(k)) % p).collect();
                    c.push(1);
                    is_irreducible(&r, &r.from_u64s(&c))
                })
                .count();
            assert_eq!(
                BigUint::from(found),
                count_irreducibles(p, n),
                "p={p} n={n}"
            );
        }
    }

    #[test]
    fn sff_examples() {
        let r = ring(7);
        let f = r.parse("x^3+4*x^2+5*x+2").unwrap();
        assert_eq!(
            sff(&r, &f).unwrap(),
            vec![(r.parse("x+2").unwrap(), 1), (r.parse("x+1").unwrap(), 2)]
        );
        let g = r.parse("3*x^2+1").unwrap();
        assert_eq!(sff(&r, &g).unwrap(), vec![(r.monic(&g), 1)]);
        let r2 = ring(2);
        assert_eq!(
            sff(&r2, &r2.parse("x^2").unwrap()).unwrap(),
            vec![(r2.x(), 2)]
        );
        // (x+1)^2 (x^2+x+1)^3 over F_2 mixes both branches
        let a = r2.parse("x+1").unwrap();
        let b = r2.parse("x^2+x+1").unwrap();
        let f = r2.mul(&r2.mul(&a, &a), &r2.mul(&b, &r2.mul(&b, &b)));
        assert_eq!(sff(&r2, &f).unwrap(), vec![(a, 2), (b, 3)]);
    }

    #[test]
    fn edf_examples() {
        let r = ring(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (fs, _) = edf(&r, &r.parse("x^2+2*x+2").unwrap(), 1, &mut rng).unwrap();
        assert_eq!(fs, vec![r.parse("x+3").unwrap(), r.parse("x+4").unwrap()]);
        let a = r.parse("x^2+x+1").unwrap();
        let b = r.parse("x^2+x+2").unwrap();
        for g in [&a, &b] {
            assert!((0..5).all(|t| r.eval(g, &t) != 0));
        }
        let (fs, _) = edf(&r, &r.mul(&a, &b), 2, &mut rng).unwrap();
        assert_eq!(fs, vec![a.clone(), b]);
        assert_eq!(edf(&r, &a, 2, &mut rng).unwrap().0, vec![a.clone()]);
        assert!(matches!(edf(&r, &a, 3, &mut rng), Err(Error::BadInput(_))));
    }

    #[test]
    fn edf_characteristic_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = ring(2);
        let irr: Vec<_> = ["x^3+x+1", "x^3+x^2+1"]
            .iter()
            .map(|s| r.parse(s).unwrap())
            .collect();
        let (fs, _) = edf(&r, &r.mul(&irr[0], &irr[1]), 3, &mut rng).unwrap();
        assert_eq!(fs, irr);
        let f4 = ExtensionField::new(PrimeField::new(2).unwrap(), vec![1, 1, 1]).unwrap();
        let r4 = PolyRing::new(f4);
        // x^4 - x splits into the four linear factors over F_4
        let f = r4.sub(&r4.parse("x^4").unwrap(), &r4.x());
        let (fs, _) = edf(&r4, &f, 1, &mut rng).unwrap();
        assert_eq!(fs.len(), 4);
    }

    #[test]
    fn brute_factor_examples() {
        let r = ring(7);
        let f = r.sub(&r.parse("x^7").unwrap(), &r.x());
        let res = brute_factor(&r, &f).unwrap();
        assert_eq!(res.factors.len(), 7);
        assert!(res.factors.iter().all(|(g, e)| g.deg() == 1 && *e == 1));
        let g = r.parse("x^3+4*x^2+5*x+2").unwrap();
        let res = brute_factor(&r, &r.scale(&g, &3)).unwrap();
        assert_eq!(res.unit, 3);
        assert_eq!(res.factors, brute_factor(&r, &g).unwrap().factors);
        audit_factorization(&r, &r.scale(&g, &3), &res).unwrap();
        let big = r.random_monic(25, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(brute_factor(&r, &big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn factor_examples() {
        let cfg = OracleConfig::default();
        let opts = DdfOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = ring(2);
        let res = factor(&r, &r.parse("x^6+x^4+x+1").unwrap(), &cfg, &opts, &mut rng).unwrap();
        let names: Vec<_> = res.factors.iter().map(|(g, e)| (r.format(g), *e)).collect();
        assert_eq!(
            names,
            vec![
                ("x+1".into(), 1),
                ("x^2+x+1".into(), 1),
                ("x^3+x+1".into(), 1)
            ]
        );
        let r7 = ring(7);
        let res = factor(
            &r7,
            &r7.parse("x^3+4*x^2+5*x+2").unwrap(),
            &cfg,
            &opts,
            &mut rng,
        )
        .unwrap();
        assert_eq!(
            res.factors,
            vec![(r7.parse("x+1").unwrap(), 2), (r7.parse("x+2").unwrap(), 1)]
        );
        let irr = r.parse("x^3+x+1").unwrap();
        assert_eq!(
            factor(&r, &irr, &cfg, &opts, &mut rng).unwrap().factors,
            vec![(irr, 1)]
        );
    }

    #[test]
    fn factor_matches_brute_on_small_fields() {
        let cfg = OracleConfig::default();
        let opts = DdfOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2u64, 3, 5] {
            let r = ring(p);
            for _ in 0..60 {
                let n = rng.gen_range(1..=14);
                let f = r.scale(
                    &r.random_monic(n, &mut rng),
                    &r.field().from_u64(rng.gen_range(1..p)),
                );
                let a = factor(&r, &f, &cfg, &opts, &mut rng).unwrap();
                let b = brute_factor(&r, &f).unwrap();
                assert_eq!(a, b, "p={p} f={}", r.format(&f));
                for (g, _) in &a.factors {
                    assert!(is_irreducible(&r, g));
                }
            }
        }
    }
}
