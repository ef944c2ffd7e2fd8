use ffq_core::experiments::{random_squarefree, trial_rng};
use ffq_core::{
    edf, factor, is_irreducible, sff, smooth_factor, Backend, DdfOptions, ExtensionField,
    FiniteField, OracleConfig, OrderOracle, PolyRing, PrimeField,
};
use num_bigint::BigUint;
use num_integer::Integer;
use proptest::prelude::*;

fn ring(p: u64) -> PolyRing<PrimeField> {
    PolyRing::new(PrimeField::new(p).unwrap())
}

fn small_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 7, 11, 13])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn found_orders_are_minimal(p in small_prime(), n in 1usize..=14, seed in any::<u64>()) {
        let ring = ring(p);
        let mut rng = trial_rng(seed, 0);
        let f = random_squarefree(&ring, n, &mut rng);
        let pi = ring.frobenius(&f, true).unwrap();
        let est = OracleConfig::default().estimate(&ring, &pi, 8, &mut rng).unwrap();
        if let Some(r) = est.order() {
            prop_assert!(ring.endo_is_identity(&ring.endo_pow(&pi, r).unwrap()));
            for q in smooth_factor(r, n as u64).unwrap().primes() {
                prop_assert!(!ring.endo_is_identity(&ring.endo_pow(&pi, &(r / q)).unwrap()));
            }
        }
    }

    #[test]
    fn frobenius_order_is_lcm_of_degrees(p in small_prime(), n in 1usize..=14, seed in any::<u64>()) {
        let ring = ring(p);
        let mut rng = trial_rng(seed, 0);
        let f = random_squarefree(&ring, n, &mut rng);
        let res = ffq_core::brute_factor(&ring, &f).unwrap();
        let d = res.factors.iter().fold(BigUint::from(1u32), |acc, (g, _)| acc.lcm(&BigUint::from(g.deg())));
        let pi = ring.frobenius(&f, true).unwrap();
        prop_assert!(ring.endo_is_identity(&ring.endo_pow(&pi, &d).unwrap()));
    }

    #[test]
    fn factor_output_is_sound(p in small_prime(), n in 1usize..=20, seed in any::<u64>()) {
        let ring = ring(p);
        let mut rng = trial_rng(seed, 0);
        let f = ring.random(n, &mut rng);
        prop_assume!(!f.is_zero());
        let res = factor(&ring, &f, &OracleConfig::default(), &DdfOptions::default(), &mut rng).unwrap();
        let mut prod = ring.constant(res.unit);
        for (g, e) in &res.factors {
            prop_assert!(ring.is_monic(g) && is_irreducible(&ring, g));
            for _ in 0..*e {
                prod = ring.mul(&prod, g);
            }
        }
        prop_assert_eq!(prod, f.clone());
        let exact = OracleConfig { backend: Backend::Exact, ..OracleConfig::default() };
        let again = factor(&ring, &f, &exact, &DdfOptions::default(), &mut rng).unwrap();
        prop_assert_eq!(res, again);
    }

    #[test]
    fn sff_parts_are_squarefree_and_coprime(p in small_prime(), seed in any::<u64>()) {
        let ring = ring(p);
        let mut rng = trial_rng(seed, 0);
        // build repeated factors on purpose
        let mut f = ring.one();
        for e in 1..=3 {
            let g = ring.random_monic(1 + (seed as usize + e) % 3, &mut rng);
            for _ in 0..e {
                f = ring.mul(&f, &g);
            }
        }
        let parts = sff(&ring, &f).unwrap();
        let mut prod = ring.one();
        for (i, (a, e)) in parts.iter().enumerate() {
            prop_assert!(ring.is_squarefree(a));
            for (b, _) in &parts[i + 1..] {
                prop_assert!(ring.is_one(&ring.gcd(a, b).unwrap()));
            }
            for _ in 0..*e {
                prod = ring.mul(&prod, a);
            }
        }
        prop_assert_eq!(prod, f);
    }

    #[test]
    fn edf_splits_into_equal_degrees(p in small_prime(), d in 1usize..=4, k in 1usize..=4, seed in any::<u64>()) {
        let ring = ring(p);
        let mut rng = trial_rng(seed, 0);
        let mut factors = Vec::new();
        let mut tries = 0;
        while factors.len() < k && tries < 200 {
            tries += 1;
            let g = ring.random_monic(d, &mut rng);
            if is_irreducible(&ring, &g) && !factors.contains(&g) {
                factors.push(g);
            }
        }
        let f = factors.iter().fold(ring.one(), |acc, g| ring.mul(&acc, g));
        let (mut out, _) = edf(&ring, &f, d, &mut rng).unwrap();
        prop_assert_eq!(out.len(), f.deg() / d);
        prop_assert!(out.iter().all(|g| g.deg() == d));
        out.sort_by(|a, b| a.canonical_cmp(b));
        factors.sort_by(|a, b| a.canonical_cmp(b));
        prop_assert_eq!(out, factors);
    }

    #[test]
    fn extension_field_factor_is_sound(n in 1usize..=10, seed in any::<u64>()) {
        let field = ExtensionField::new(PrimeField::new(2).unwrap(), vec![1, 1, 0, 1]).unwrap();
        let ring = PolyRing::new(field);
        let mut rng = trial_rng(seed, 0);
        let f = ring.random_monic(n, &mut rng);
        let res = factor(&ring, &f, &OracleConfig::default(), &DdfOptions::default(), &mut rng).unwrap();
        prop_assert_eq!(&res.unit, &ring.field().one());
        prop_assert_eq!(res, ffq_core::brute_factor(&ring, &f).unwrap());
    }
}
