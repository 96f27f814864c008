//! Structural laws checked on random inputs against brute-force oracles.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::Rng;

use symdyn::entropy::{growth_estimate, separated_count, sft_entropy_exact};
use symdyn::factor::{fiber_entropy_sup, SlidingBlockCode};
use symdyn::fan::{fan_distance, FanPoint};
use symdyn::lowering::{hul_lower, LowerConfig};
use symdyn::samples::{random_fan_point, random_finite, random_point, random_tree, rng};
use symdyn::staged::{Stage, StageSet, StagedFamily};
use symdyn::subset::{CylinderTree, FiniteSet, SetRep};
use symdyn::subshift::Subshift;
use symdyn::symbolic::{ball_window, separation_window, BiInfinitePoint, Word};

fn ambient(pick: u8) -> Subshift {
    match pick % 3 {
        0 => Subshift::full(2),
        1 => Subshift::golden_mean(),
        _ => Subshift::full(3),
    }
}

fn count(set: &SetRep, n: u32, m: u32) -> BigUint {
    separated_count(set, n, m).unwrap()
}

fn shifted(f: &FiniteSet, k: i64) -> SetRep {
    SetRep::Finite(FiniteSet::new(f.ambient.clone(), f.points.iter().map(|x| x.shift_by(k))).unwrap())
}

/// Explicit family around `0^Z` whose stage points rewrite a short word just
/// past the previous ball window.
fn explicit_family(seed: u64, m: u32, lengths: &[u64]) -> StagedFamily {
    let mut r = rng(seed);
    let limit = BiInfinitePoint::constant(0);
    let mut prev: Option<u64> = None;
    let stages = lengths
        .iter()
        .map(|&l| {
            let lo = prev.map_or(1 - m as i64, |p| ball_window(p, m).hi + 1);
            let points: BTreeSet<BiInfinitePoint> = (0..r.gen_range(1..=4))
                .map(|_| {
                    let len = r.gen_range(1..=4);
                    let mut w: Word = (0..len).map(|_| r.gen_range(0..2)).collect();
                    w[0] = 1;
                    limit.rewrite(lo + r.gen_range(0..3), &w)
                })
                .collect();
            prev = Some(l);
            Stage {
                length: l,
                set: StageSet::Explicit(points.into_iter().collect()),
            }
        })
        .collect();
    let f = StagedFamily {
        ambient: Subshift::full(2),
        limit,
        resolution: m,
        stages,
        open_ended: false,
        include_limit: true,
        tail_agrees_through: None,
    };
    f.validate().unwrap();
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shift_is_a_group_action(seed in any::<u64>(), a in -20i64..20, b in -20i64..20, i in -30i64..30) {
        let x = random_point(&mut rng(seed), &Subshift::full(3), 6).unwrap();
        prop_assert_eq!(x.shift_by(a).shift_by(b), x.shift_by(a + b));
        prop_assert_eq!(x.shift_by(a).symbol_at(i), x.symbol_at(i + a));
        prop_assert_eq!(x.shift_by(0), x);
    }

    #[test]
    fn counts_grow_with_length_and_resolution(seed in any::<u64>(), pick in any::<u8>(), depth in 5usize..12) {
        let s = ambient(pick);
        let t = SetRep::Tree(random_tree(&mut rng(seed), &s, -3, depth, 0.7).unwrap());
        // Windows for resolution m fit while n + m <= depth - 3.
        for m in 1..=3u32 {
            for n in 1..(depth as u32).saturating_sub(m + 3) {
                prop_assert!(count(&t, n, m) <= count(&t, n + 1, m));
                if n + m + 1 <= depth as u32 - 3 {
                    prop_assert!(count(&t, n, m) <= count(&t, n, m + 1));
                }
            }
        }
    }

    #[test]
    fn counts_and_estimates_grow_with_the_set(seed in any::<u64>(), pick in any::<u8>(), depth in 8usize..13) {
        let s = ambient(pick);
        let big = random_tree(&mut rng(seed), &s, -3, depth, 0.8).unwrap();
        let mut r = rng(seed ^ 1);
        let mut kept: Vec<Word> = big.words.iter().filter(|_| r.gen_bool(0.5)).cloned().collect();
        if kept.is_empty() {
            kept.push(big.words.iter().next().unwrap().clone());
        }
        let small = SetRep::Tree(CylinderTree::new(s, -3, depth, kept).unwrap());
        let big = SetRep::Tree(big);
        let top = depth as u32 - 4;
        for n in 1..=top {
            prop_assert!(count(&small, n, 1) <= count(&big, n, 1));
        }
        let (e_small, e_big) = (
            growth_estimate(&small, 1, top).unwrap(),
            growth_estimate(&big, 1, top).unwrap(),
        );
        prop_assert!(e_small.upper <= e_big.upper + 1e-12);
    }

    /// Shifting a set by one moves every Bowen window by one coordinate, so
    /// the two count sequences interleave.
    #[test]
    fn shifted_counts_interleave(seed in any::<u64>(), pick in any::<u8>(), m in 1u32..4, n in 1u32..12) {
        let f = random_finite(&mut rng(seed), &ambient(pick), 12, 6).unwrap();
        let (k, tk) = (SetRep::Finite(f.clone()), shifted(&f, 1));
        prop_assert!(count(&tk, n, m) <= count(&k, n + 1, m));
        prop_assert!(count(&k, n, m) <= count(&tk, n + 1, m + 1));
        let back = shifted(&f, -1);
        prop_assert!(count(&back, n, m + 1) >= count(&k, n, m));
    }

    #[test]
    fn finite_sets_read_zero_after_shifting(seed in any::<u64>(), pick in any::<u8>(), k in -8i64..8) {
        let f = random_finite(&mut rng(seed), &ambient(pick), 8, 4).unwrap();
        for set in [SetRep::Finite(f.clone()), shifted(&f, k)] {
            let e = growth_estimate(&set, 2, 48).unwrap();
            prop_assert_eq!(e.value, 0.0);
        }
    }

    /// Stages whose previous length is at least `n - 1` show the limit's word
    /// on the `n`-window, so deleting them leaves the census unchanged.
    #[test]
    fn late_stages_collapse_onto_the_limit(seed in any::<u64>(), m in 1u32..4, n in 1u32..20) {
        let f = explicit_family(seed, m, &[3, 6, 10, 15]);
        let w = separation_window(n, m);
        let all: BTreeSet<Word> = f
            .stages
            .iter()
            .flat_map(|st| match &st.set {
                StageSet::Explicit(p) => p.clone(),
                StageSet::Block(_) => unreachable!(),
            })
            .chain([f.limit.clone()])
            .map(|x| x.window_of(w))
            .collect();
        let mut early: BTreeSet<Word> = [f.limit.window_of(w)].into();
        for (i, st) in f.stages.iter().enumerate() {
            if i > 0 && f.stages[i - 1].length + 1 >= n as u64 {
                continue;
            }
            if let StageSet::Explicit(p) = &st.set {
                early.extend(p.iter().map(|x| x.window_of(w)));
            }
        }
        prop_assert_eq!(&all, &early);
        prop_assert_eq!(f.census(w).unwrap(), BigUint::from(all.len()));
    }

    #[test]
    fn codes_commute_with_the_shift(seed in any::<u64>(), k in -10i64..10, mem in 0usize..2, ant in 0usize..2) {
        let s = Subshift::full(2);
        let code = SlidingBlockCode::from_fn(s.clone(), s.clone(), mem, ant, |w| {
            w.iter().fold(0, |a, &b| a ^ b)
        })
        .unwrap();
        let x = random_point(&mut rng(seed), &s, 8).unwrap();
        prop_assert_eq!(code.apply_point(&x.shift_by(k)), code.apply_point(&x).shift_by(k));
    }

    #[test]
    fn fan_balls_sit_closer_together_than_to_the_apex(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = random_fan_point(&mut r, 6).unwrap();
        let v = random_fan_point(&mut r, 6).unwrap();
        if let (FanPoint::Ball(n, _), FanPoint::Ball(k, _)) = (&u, &v) {
            if n == k {
                prop_assert!(fan_distance(&u, &v) < fan_distance(&u, &FanPoint::Apex));
            }
        }
        prop_assert_eq!(fan_distance(&u, &v), fan_distance(&v, &u));
        let w = random_fan_point(&mut r, 6).unwrap();
        let d = fan_distance(&u, &w);
        prop_assert!(d <= fan_distance(&u, &v).max(fan_distance(&v, &w)));
    }
}

#[test]
fn injective_codes_have_no_fiber_entropy() {
    let s = Subshift::golden_mean();
    let id = SlidingBlockCode::from_fn(s.clone(), s, 0, 0, |w| w[0]).unwrap();
    assert_eq!(fiber_entropy_sup(&id, 16).unwrap().value, 0.0);
    let shift = Subshift::full(2);
    let recode = SlidingBlockCode::from_fn(shift.clone(), shift, 0, 0, |w| 1 - w[0]).unwrap();
    assert_eq!(fiber_entropy_sup(&recode, 16).unwrap().value, 0.0);
}

#[test]
fn whole_language_slopes_fall() {
    for s in [Subshift::full(2), Subshift::golden_mean(), Subshift::full(3)] {
        let whole = SetRep::Whole(s);
        for m in 1..=3 {
            let slopes: Vec<f64> = (1..=30)
                .map(|n| symdyn::bigmath::ln_big(&count(&whole, n, m)) / n as f64)
                .collect();
            assert!(slopes.windows(2).all(|p| p[1] <= p[0] + 1e-12), "m={m}: {slopes:?}");
        }
    }
}

#[test]
fn lowering_is_monotone_in_the_target() {
    let cfg = LowerConfig::default();
    let whole = SetRep::Whole(Subshift::full(2));
    let slope = |h: f64| {
        let SetRep::Staged(f) = hul_lower(&whole, h, &cfg).unwrap() else {
            panic!("staged construction expected for {h}");
        };
        let l = f.stages.last().unwrap().length as u32;
        symdyn::bigmath::ln_big(&count(&SetRep::Staged(f), l, cfg.resolution)) / l as f64
    };
    let targets = [0.1, 0.25, 0.4, 0.55];
    let slopes: Vec<f64> = targets.iter().map(|&h| slope(h)).collect();
    for i in 1..slopes.len() {
        assert!(
            slopes[i - 1] <= slopes[i] + 2.0 * cfg.tolerance,
            "{targets:?} -> {slopes:?}"
        );
    }
}

#[test]
fn lowering_at_the_extremes() {
    let cfg = LowerConfig::default();
    let s = Subshift::golden_mean();
    let top = sft_entropy_exact(&s, 1e-12).unwrap().value();
    let full = hul_lower(&SetRep::Whole(s.clone()), top, &cfg).unwrap();
    let e = growth_estimate(&full, 2, 24).unwrap();
    assert!((e.value - top).abs() < 0.05, "{} vs {top}", e.value);
    let zero = hul_lower(&SetRep::Whole(s), 0.0, &cfg).unwrap();
    assert_eq!(growth_estimate(&zero, 2, 24).unwrap().value, 0.0);
    let f = random_finite(&mut rng(4), &Subshift::full(2), 5, 3).unwrap();
    let SetRep::Finite(one) = hul_lower(&SetRep::Finite(f.clone()), 0.0, &cfg).unwrap() else {
        panic!("zero target gives a finite set");
    };
    assert_eq!(one.points.len(), 1);
    assert!(one.points.is_subset(&f.points));
}

#[test]
fn images_never_outgrow_sources() {
    let s = Subshift::full(2);
    let code = Arc::new(SlidingBlockCode::from_fn(s.clone(), s.clone(), 0, 1, |w| w[0] ^ w[1]).unwrap());
    let t = SetRep::Tree(random_tree(&mut rng(9), &s, -4, 12, 0.7).unwrap());
    let image = code.apply_set(&t).unwrap();
    for n in 1..=6 {
        assert!(count(&image, n, 1) <= count(&t, n, 2), "n={n}");
    }
}
