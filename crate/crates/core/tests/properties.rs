use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xzmip::analysis::{extract, FamilyLabel, ObservableFamily};
use xzmip::code::steane;
use xzmip::dense::DenseOperator;
use xzmip::evaluator::{exact_value, omega_ac};
use xzmip::hamiltonian::{amplify_map, XZHamiltonian};
use xzmip::pauli::{BitString, PauliWord, Sign};
use xzmip::protocol::ProtocolParams;
use xzmip::state::StateVector;
use xzmip::strategy::{Strategy as Prover, WRule};

fn word(n: usize) -> impl Strategy<Value = PauliWord> {
    (0..1u64 << n, 0..1u64 << n, any::<bool>()).prop_map(move |(x, z, neg)| {
        let s = if neg { Sign::Minus } else { Sign::Plus };
        PauliWord::new(BitString::new(n, x).unwrap(), BitString::new(n, z).unwrap(), s).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_product_is_associative(a in word(5), b in word(5), c in word(5)) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn commute_sign_matches_products(a in word(6), b in word(6)) {
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        let s = a.commute_sign(&b).unwrap();
        prop_assert_eq!(ab.sign().as_i8() * ba.sign().as_i8(), s.as_i8());
        prop_assert_eq!(ab.x_mask(), ba.x_mask());
    }

    #[test]
    fn encoding_is_stabilized(seed in any::<u64>(), n in 1usize..=2) {
        let code = steane();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc = code.encode(&StateVector::random(n, &mut rng).unwrap()).unwrap();
        for j in 0..n {
            let block: Vec<usize> = (j * code.r..(j + 1) * code.r).collect();
            for g in &code.generators {
                prop_assert!((enc.pauli_expectation(g, &block).unwrap().re - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn amplify_map_is_monotone_and_vanishes_at_inverse_power(a in 1usize..6, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        prop_assert!(amplify_map(1.0 / a as f64, a).abs() < 1e-12);
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        prop_assert!(amplify_map(lo, a) <= amplify_map(hi, a) + 1e-12);
    }

    #[test]
    fn extraction_is_linear_for_random_families(seed in any::<u64>(), n in 1usize..=2, k in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let members = (0..1 << n).map(|_| DenseOperator::random_observable(k, &mut rng)).collect();
        let f = ObservableFamily::new(FamilyLabel::Zhat, n, k, (0..k).collect(), members).unwrap();
        let e = extract(&f).unwrap();
        prop_assert!(e.parseval_defect < 1e-9);
        prop_assert!(e.linear.linearity_residual() < 1e-9);
        prop_assert!(e.linear.is_observable_family(1e-9));
    }

    #[test]
    fn protocol_values_are_probabilities(sx in 0u64..2, sz in 0u64..2, rule in 0usize..4, p in 0.0f64..=1.0) {
        let h = XZHamiltonian::from_words(&[(1.0, "Z")]).unwrap();
        let code = steane();
        let rule = [WRule::FollowX, WRule::FollowZ, WRule::Constant(1), WRule::Constant(-1)][rule];
        let s = Prover::classical_linear(BitString::new(1, sx).unwrap(), BitString::new(1, sz).unwrap(), rule, code.r).unwrap();
        let r = exact_value(&s, &ProtocolParams::new(p, code, h).unwrap()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&r.total));
    }
}

#[test]
fn anticommutation_constants_decrease() {
    for n in 1..12 {
        assert!(omega_ac(n + 1) < omega_ac(n));
    }
}
