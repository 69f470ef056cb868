use calabi_lab::cantor::{build_cantor_tree, ConvexPiece};
use calabi_lab::nadirashvili::Eps;
use calabi_lab::pipeline::{cauchy_from_images, PoleTerm, RationalData};
use calabi_lab::C64;
use proptest::prelude::*;

fn term(cx: f64, cy: f64, order: u32, a: f64, b: f64) -> PoleTerm {
    PoleTerm {
        center: C64::new(cx, cy),
        order,
        coeff: C64::new(a, b),
    }
}

proptest! {
    #[test]
    fn rational_data_is_linear(
        cx in -0.4..0.4f64, cy in -0.4..0.4f64, order in 1u32..4, a in -2.0..2.0f64, b in -2.0..2.0f64,
        s in -3.0..3.0f64, zr in 0.6..1.4f64, zt in 0.0..std::f64::consts::TAU,
    ) {
        let d = RationalData::new(vec![term(cx, cy, order, a, b), term(-cy, cx, 1, b, a)]);
        let z = C64::from_polar(zr, zt);
        let p = d.position(z);
        let q = d.scaled(s).position(z);
        let sum = d.plus(&d.scaled(s)).position(z);
        for k in 0..3 {
            prop_assert!((q[k] - s * p[k]).abs() <= 1e-12 * (1.0 + p[k].abs() * s.abs()));
            prop_assert!((sum[k] - (1.0 + s) * p[k]).abs() <= 1e-11 * (1.0 + p[k].abs() * (1.0 + s.abs())));
        }
        prop_assert!(d.metric_density(z) >= 0.0);
    }

    #[test]
    fn halving_chain_is_strict(x in 1e-6..1e6f64, n in 1usize..200) {
        let mut e = Eps::from_f64(x).unwrap();
        for _ in 0..n {
            let next = e.next_strict_half();
            prop_assert!(next.lt_half_of(e));
            e = next;
        }
    }

    #[test]
    fn cantor_counts_and_disjointness(gamma in 0.05..0.9f64, depth in 1usize..5) {
        let tree = build_cantor_tree(&ConvexPiece::unit_square(), gamma, depth).unwrap();
        for i in 1..=depth {
            prop_assert_eq!(tree.level(i).unwrap().len(), 1 << (2 * i));
            prop_assert!(tree.intersecting_pairs(i).unwrap().is_empty());
            prop_assert!(tree.nesting_violations(i - 1).unwrap().is_empty());
        }
    }

    #[test]
    fn geometric_sequences_are_not_flagged(d0 in 0.01..10.0f64, q in 0.0..0.5f64, n in 3usize..10) {
        let mut x = 0.0;
        let mut step = d0;
        let mut images = vec![vec![[x, 0.0, 0.0]]];
        for _ in 1..n {
            x += step;
            step *= q;
            images.push(vec![[x, 0.0, 0.0]]);
        }
        let rep = cauchy_from_images(&images, 0.05);
        prop_assert!(rep.flagged.is_empty(), "{:?}", rep);
        prop_assert!(rep.total <= 2.0 * d0 + 1e-12);
    }
}
