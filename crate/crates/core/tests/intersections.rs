use crofton_core::intersections::{
    degeneracy_volume, equidistribution_experiment, fixed_factor, grassmann_meet,
    intersection_dim, line_curve_count, random_line, rotated_factor, su_circle_intersections,
    HomogeneousCurve, LinearSubspace, Meet,
};
use crofton_core::sampling::{sample_rotation, RandomStream};
use crofton_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn random_rotations_are_transversal() {
    let mut s = RandomStream::new(1);
    let (k, l, m) = (2, 3, 2);
    for _ in 0..10_000 {
        let y = sample_rotation(l + m, &mut s);
        assert!(degeneracy_volume(&y, k, l).unwrap() > 1e-6);
    }
}

#[test]
fn meet_contains_both_factors() {
    let mut s = RandomStream::new(2);
    for (k, l, m) in [(1, 2, 1), (2, 3, 2), (1, 3, 2), (3, 3, 1)] {
        let fixed = fixed_factor(l + m, k, l);
        for _ in 0..500 {
            let y = sample_rotation(l + m, &mut s);
            let Meet::OnePoint(w) = grassmann_meet(&y, k, l, m).unwrap() else {
                panic!("degenerate sample for {k},{l},{m}");
            };
            assert_eq!(w.rank(), l);
            assert_eq!(intersection_dim(&w, &fixed).unwrap(), l - k);
            assert_eq!(intersection_dim(&w, &rotated_factor(&y, k)).unwrap(), k);
        }
    }
}

#[test]
fn dependent_span_is_rejected() {
    let span = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
    assert!(matches!(LinearSubspace::new(span), Err(Error::RankDeficient { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intersection_dim_bounds(seed in any::<u64>(), n in 2usize..7, a in 1usize..7, b in 1usize..7) {
        let (a, b) = (a.min(n), b.min(n));
        let mut s = RandomStream::new(seed);
        let g = sample_rotation(n, &mut s);
        let h = sample_rotation(n, &mut s);
        let sa = LinearSubspace::new(g.columns(0, a).into_owned()).unwrap();
        let sb = LinearSubspace::new(h.columns(0, b).into_owned()).unwrap();
        let d = intersection_dim(&sa, &sb).unwrap();
        prop_assert!(d >= (a + b).saturating_sub(n) && d <= a.min(b));
        // Generic subspaces meet in the expected dimension.
        prop_assert_eq!(d, (a + b).saturating_sub(n));
    }

    #[test]
    fn bezout_count_on_random_lines(seed in any::<u64>(), d in 1u32..6) {
        let mut s = RandomStream::new(seed);
        let curve = HomogeneousCurve::fermat(d);
        let (p, q) = random_line(&mut s);
        let count = line_curve_count(&curve, &p, &q).unwrap();
        prop_assert_eq!(count.with_multiplicity, d);
        prop_assert!(count.distinct <= count.with_multiplicity);
    }
}

#[test]
fn random_dense_curves_obey_bezout() {
    let mut s = RandomStream::new(3);
    for d in 1..=4u32 {
        let mut terms = Vec::new();
        for a in 0..=d {
            for b in 0..=d - a {
                terms.push(([a, b, d - a - b], Complex64::new(s.normal(), s.normal())));
            }
        }
        let curve = HomogeneousCurve::new(d, terms).unwrap();
        for _ in 0..200 {
            let (p, q) = random_line(&mut s);
            let count = line_curve_count(&curve, &p, &q).unwrap();
            assert_eq!(count.with_multiplicity, d);
            assert_eq!(count.distinct, d);
        }
    }
}

#[test]
fn line_in_a_reducible_curve() {
    // xy = 0 contains the line x = 0.
    let curve = HomogeneousCurve::new(2, [([1, 1, 0], Complex64::new(1.0, 0.0))]).unwrap();
    let c = |re: f64| Complex64::new(re, 0.0);
    let p = [c(0.0), c(1.0), c(0.0)];
    let q = [c(0.0), c(0.0), c(1.0)];
    assert!(matches!(line_curve_count(&curve, &p, &q), Err(Error::IdenticallyZero)));
}

#[test]
fn equidistribution_histograms() {
    let s = RandomStream::new(4);
    for d in 1..=3u32 {
        let exp = equidistribution_experiment(&HomogeneousCurve::fermat(d), 10_000, &s.split(d as u64)).unwrap();
        assert_eq!(exp.histogram.len(), 1);
        assert_eq!(exp.histogram[&d], 10_000);
        assert_eq!(exp.exceptional_fraction, 0.0);
    }
    assert!(equidistribution_experiment(&HomogeneousCurve::fermat(2), 99, &s).is_err());
}

#[test]
fn equidistribution_is_thread_count_independent() {
    let s = RandomStream::new(5);
    let curve = HomogeneousCurve::fermat(3);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| equidistribution_experiment(&curve, 9000, &s).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn scalar_circle_points_are_roots_of_unity() {
    for n in 1..=6usize {
        let r = su_circle_intersections(n).unwrap();
        assert_eq!(r.points.len(), n);
        for x in &r.points {
            let z = x[(0, 0)];
            let mut power = Complex64::new(1.0, 0.0);
            for _ in 0..n {
                power *= z;
            }
            assert!((power - 1.0).norm() <= 1e-12);
            for i in 0..n {
                for j in 0..n {
                    let expected = if i == j { z } else { Complex64::new(0.0, 0.0) };
                    assert_eq!(x[(i, j)], expected);
                }
            }
        }
        assert!(r.orthogonality_residual <= 1e-12);
    }
}
