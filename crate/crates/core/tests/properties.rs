use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use vicsek::affine::AffineFunction;
use vicsek::besov::{ball_energy, ball_energy_bruteforce};
use vicsek::checks::clarkson;
use vicsek::energy::{discrete_energy, energy_limit, energy_of_gradient, gradient_field};
use vicsek::energy_measure::{gamma_cells, triangle_check};
use vicsek::geometry::Hierarchy;
use vicsek::num::{Exponent, NodeValues, Scalar};
use vicsek::ratios::{RatioSequence, Word};

fn hierarchy() -> &'static Hierarchy {
    static H: OnceLock<Hierarchy> = OnceLock::new();
    H.get_or_init(|| Hierarchy::build(&RatioSequence::alternating(3, 5).unwrap(), 3).unwrap())
}

fn affine(base: usize) -> impl Strategy<Value = AffineFunction> {
    let count = hierarchy().level(base).unwrap().vertex_count();
    prop::collection::vec(-50i64..=50, count)
        .prop_map(move |v| AffineFunction::new(hierarchy(), base, NodeValues::from_integers(&v, 10)).unwrap())
}

fn any_affine() -> impl Strategy<Value = AffineFunction> {
    (0usize..=1).prop_flat_map(affine)
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![Just(Exponent::new(2.0).unwrap()), Just(Exponent::new(3.0).unwrap())]
}

fn energy_at(u: &AffineFunction, p: &Exponent, n: usize) -> Scalar {
    let h = hierarchy();
    discrete_energy(h.level(n).unwrap(), &u.evaluate_all(h, n).unwrap(), p, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energies_never_decrease(u in any_affine(), p in exponent()) {
        let rep = energy_limit(&u, hierarchy(), &p, 3, true).unwrap();
        prop_assert!(rep.monotone);
        let base = &rep.energies[u.base_level()];
        for later in &rep.energies[u.base_level()..] {
            prop_assert_eq!(base, later);
        }
    }

    #[test]
    fn gradient_reproduces_energy(u in any_affine(), p in exponent(), n in 1usize..=3) {
        let h = hierarchy();
        let g = gradient_field(&u, h, n).unwrap();
        prop_assert_eq!(energy_of_gradient(&g, &p), energy_at(&u, &p, n));
    }

    #[test]
    fn energy_is_homogeneous(u in any_affine(), p in exponent(), c in -9i64..=9, d in -9i64..=9) {
        let mapped = u.affine_map(
            &Scalar::Exact(BigRational::from_integer(BigInt::from(c))),
            &Scalar::Exact(BigRational::from_integer(BigInt::from(d))),
        );
        let factor = Scalar::Exact(BigRational::from_integer(BigInt::from(c.abs()).pow(p.integer().unwrap())));
        prop_assert_eq!(energy_at(&mapped, &p, 2), &factor * &energy_at(&u, &p, 2));
    }

    #[test]
    fn cell_masses_refine(u in any_affine(), p in exponent(), k in 0usize..=2) {
        let h = hierarchy();
        let fine = gamma_cells(&u, h, &p, 3).unwrap();
        prop_assert_eq!(fine.coarsen(h, k).unwrap(), gamma_cells(&u, h, &p, k).unwrap());
        prop_assert_eq!(&fine.total, &energy_at(&u, &p, 3));
    }

    #[test]
    fn clarkson_direction(u in affine(1), v in affine(1), p in prop_oneof![Just(1.5), Just(2.0), Just(2.5), Just(4.0)]) {
        let pe = Exponent::new(p).unwrap();
        let h = hierarchy();
        let f = u.in_mode(false);
        let g = v.in_mode(false);
        let e = |w: &AffineFunction| energy_at(w, &pe, 2).to_f64();
        let sum = f.combine(h, &g, false).unwrap();
        let diff = f.combine(h, &g, true).unwrap();
        prop_assert!(clarkson(e(&sum), e(&diff), e(&f), e(&g), p).holds);
    }

    #[test]
    fn weighted_triangle(u in affine(1), v in affine(1), w in prop::collection::vec(0.0f64..=1.0, 45)) {
        let h = hierarchy();
        let p = Exponent::ratio(3, 2).unwrap();
        prop_assert!(triangle_check(&u, &v, &w, h, &p, 2).unwrap().holds);
    }

    #[test]
    fn indexed_ball_sums_match(u in any_affine(), m in 1usize..=3, pick in 0usize..=3) {
        let h = hierarchy();
        let m = m.max(u.base_level());
        let n = pick.min(m);
        let vals = u.evaluate_all(h, m).unwrap();
        prop_assert_eq!(ball_energy(h, m, n, &vals).unwrap(), ball_energy_bruteforce(h, m, n, &vals).unwrap());
    }

    #[test]
    fn word_index_round_trip(level in 0usize..=3, idx in 0usize..2025) {
        let seq = hierarchy().ratios();
        let count = hierarchy().level(level).unwrap().cell_count();
        let idx = idx % count;
        let w = Word::from_index(seq, level, idx).unwrap();
        prop_assert_eq!(w.index(seq).unwrap(), idx);
        prop_assert_eq!(w.level(), level);
    }
}
