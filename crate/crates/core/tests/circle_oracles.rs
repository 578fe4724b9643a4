//! The circle library checked against independent brute-force oracles.

use dyadic_bmo::bmo::{classical_bmo_lower_bound, dyadic_bmo_norm, verification_grid, verify_equivalence};
use dyadic_bmo::circle::{fit_interval, Arc, Shift};
use dyadic_bmo::{dyadic_distance, mean_oscillation, Rat, StepFn};
use num_integer::Integer;
use proptest::prelude::*;

fn r(p: i64, q: i64) -> Rat {
    Rat::new(p, q)
}

/// `min_{0 <= n < 64} ||2^n p/q||` by plain modular doubling.
fn naive_distance(p: u64, q: u64) -> Rat {
    let mut rem = p % q;
    let mut best = q;
    for _ in 0..64 {
        best = best.min(rem.min(q - rem));
        rem = (2 * rem) % q;
    }
    Rat::new(best as i64, q as i64)
}

fn reduced(max_q: u64) -> impl Iterator<Item = (u64, u64)> {
    (2..=max_q).flat_map(|q| (1..q).filter(move |p| p.gcd(&q) == 1).map(move |p| (p, q)))
}

#[test]
fn distance_matches_naive_doubling() {
    for (p, q) in reduced(100) {
        let d = dyadic_distance(&r(p as i64, q as i64)).unwrap();
        assert_eq!(d, naive_distance(p, q), "δ = {p}/{q}");
    }
}

#[test]
fn distance_symmetry_and_extremes() {
    let third = r(1, 3);
    for (p, q) in reduced(200) {
        let delta = r(p as i64, q as i64);
        let d = dyadic_distance(&delta).unwrap();
        assert_eq!(d, dyadic_distance(&(Rat::one() - &delta)).unwrap());
        assert!(d <= third);
        assert_eq!(d == third, q == 3, "{p}/{q}");
        assert_eq!(d.is_zero(), q.is_power_of_two(), "{p}/{q}");
    }
    assert!(dyadic_distance(&Rat::zero()).unwrap().is_zero());
}

/// Osc by evaluating `φ` at the midpoint of every cell cut by the breakpoints.
fn oracle_oscillation(f: &StepFn, arc: &Arc) -> Rat {
    let start = arc.start().clone();
    let end = &start + arc.length();
    let mut cuts = vec![start.clone(), end.clone()];
    for b in f.breakpoints() {
        for shift in [0, 1] {
            let x = b + &Rat::integer(shift);
            if x > start && x < end {
                cuts.push(x);
            }
        }
    }
    cuts.sort();
    let cells: Vec<(Rat, Rat)> = cuts
        .windows(2)
        .map(|w| {
            let mid = ((&w[0] + &w[1]) * r(1, 2)).frac();
            (&w[1] - &w[0], f.eval(&mid))
        })
        .collect();
    let len = arc.length();
    let mean: Rat = cells.iter().map(|(l, v)| l * v).sum::<Rat>() / len;
    cells.iter().map(|(l, v)| l * &(v - &mean).abs()).sum::<Rat>() / len
}

fn step_fn() -> impl Strategy<Value = StepFn> {
    (prop::sample::select(vec![4i64, 6, 8, 12, 16]), prop::collection::vec(-6i64..=6, 1..6)).prop_map(
        |(q, vals)| {
            let n = vals.len().min(q as usize);
            let bps = (0..n).map(|k| r(k as i64 * q / n as i64, q)).collect();
            StepFn::new(bps, vals[..n].iter().map(|&v| r(v, 2)).collect()).unwrap()
        },
    )
}

fn arc() -> impl Strategy<Value = Arc> {
    (0i64..97, 1i64..=97).prop_map(|(a, l)| Arc::new(r(a, 97), r(l, 97)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oscillation_matches_midpoint_oracle(f in step_fn(), a in arc()) {
        prop_assert_eq!(mean_oscillation(&f, &a), oracle_oscillation(&f, &a));
    }

    #[test]
    fn fit_contains_with_bounded_ratio(a in arc(), k in 0usize..5) {
        let delta = [r(1, 3), r(1, 5), r(2, 5), r(5, 12), r(1, 7)][k].clone();
        let shift = Shift::new(delta.clone()).unwrap();
        let fit = fit_interval(&a, &shift).unwrap();
        let iv = fit.interval.arc();
        // Containment from endpoint offsets, independent of Arc::contains_arc.
        let lead = (a.start() - iv.start()).frac();
        let covered = iv.is_full() || &lead + a.length() <= *iv.length();
        prop_assert!(covered);
        prop_assert_eq!(&fit.ratio, &(iv.length() / a.length()));
        prop_assert!(fit.ratio <= Rat::integer(2) / shift.distance());
    }

    #[test]
    fn norms_are_translation_covariant(f in step_fn(), k in 0usize..3) {
        let delta = [r(1, 3), r(1, 5), r(5, 12)][k].clone();
        let moved = f.translate(&delta);
        let shifted = dyadic_bmo_norm(&moved, &Shift::new(delta).unwrap(), 6).unwrap();
        let base = dyadic_bmo_norm(&f, &Shift::base(), 6).unwrap();
        prop_assert_eq!(shifted.value, base.value);
    }

    #[test]
    fn norms_scale_and_ignore_constants(f in step_fn(), c in -5i64..=5) {
        let shift = Shift::new(r(1, 3)).unwrap();
        let n = dyadic_bmo_norm(&f, &shift, 5).unwrap().value;
        let lambda = r(c, 3);
        prop_assert_eq!(dyadic_bmo_norm(&f.scale(&lambda), &shift, 5).unwrap().value, &n * &lambda.abs());
        prop_assert_eq!(dyadic_bmo_norm(&f.add_constant(&lambda), &shift, 5).unwrap().value, n);
    }

    #[test]
    fn scans_are_monotone(f in step_fn()) {
        let shift = Shift::new(r(2, 5)).unwrap();
        let mut prev = Rat::zero();
        for depth in 0..7 {
            let n = dyadic_bmo_norm(&f, &shift, depth).unwrap().value;
            prop_assert!(n >= prev);
            prev = n;
        }
        let coarse = classical_bmo_lower_bound(&f, &verification_grid(&f, &shift, 3)).unwrap();
        let fine = classical_bmo_lower_bound(&f, &verification_grid(&f, &shift, 5)).unwrap();
        prop_assert!(fine.value >= coarse.value);
    }

    #[test]
    fn theorem_and_trivial_direction(f in step_fn(), k in 0usize..3) {
        let delta = [r(1, 3), r(1, 5), r(1, 7)][k].clone();
        let shift = Shift::new(delta).unwrap();
        let grid = verification_grid(&f, &shift, 5);
        let rep = verify_equivalence(&f, &shift, 5, &grid).unwrap();
        prop_assert!(rep.theorem_holds);
        prop_assert_eq!(rep.trivial_direction_holds, Some(true));
        prop_assert!(rep.proof_trace.holds());
    }
}

#[test]
fn half_is_inadmissible() {
    let err = fit_interval(&Arc::new(Rat::zero(), r(1, 10)).unwrap(), &Shift::new(r(1, 2)).unwrap())
        .unwrap_err();
    assert_eq!(err.to_string(), "inadmissible shift: d(δ)=0 for δ=1/2");
}
