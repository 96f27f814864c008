//! The fan: countably many copies `B_1, B_2, ...` of the full 2-shift
//! shrinking to a fixed apex.
//!
//! The metric is an ultrametric: `d(apex, (n, x)) = 2^-n`, points of
//! different balls sit at `max(2^-n, 2^-n')`, and inside ball `n` distances
//! are the shift distance scaled by `2^-(n+1)`. At resolution `2^-m` the
//! balls `n <= m - 2` then behave like the shift at resolution `m - n - 1`,
//! ball `m - 1` is a single class, and the apex absorbs every ball `n >= m`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::entropy::{growth_from_counts, phi_set, EntropyEstimate};
use crate::error::{Error, Result};
use crate::lowering::{hul_lower, point_of, LowerConfig};
use crate::subset::{FiniteSet, SetRep};
use crate::subshift::Subshift;
use crate::symbolic::{separation_window, BiInfinitePoint};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FanPoint {
    Apex,
    Ball(u32, BiInfinitePoint),
}

pub fn ball_shift() -> Subshift {
    Subshift::full(2)
}

pub fn fan_distance(u: &FanPoint, v: &FanPoint) -> f64 {
    let scale = |n: u32| 0.5f64.powi(n as i32);
    match (u, v) {
        (FanPoint::Apex, FanPoint::Apex) => 0.0,
        (FanPoint::Apex, FanPoint::Ball(n, _)) | (FanPoint::Ball(n, _), FanPoint::Apex) => scale(*n),
        (FanPoint::Ball(n, x), FanPoint::Ball(k, y)) if n == k => scale(n + 1) * x.distance(y),
        (FanPoint::Ball(n, _), FanPoint::Ball(k, _)) => scale(*n.min(k)),
    }
}

/// Compact subset of the fan: optionally the apex, finitely many ball
/// subsets, and optionally the same subset in every ball from some index on.
#[derive(Debug, Clone)]
pub struct FanSet {
    pub apex: bool,
    pub balls: BTreeMap<u32, SetRep>,
    pub tail: Option<(u32, SetRep)>,
}

impl FanSet {
    pub fn whole() -> Self {
        FanSet {
            apex: true,
            balls: BTreeMap::new(),
            tail: Some((1, SetRep::Whole(ball_shift()))),
        }
    }

    pub fn apex_only() -> Self {
        FanSet {
            apex: true,
            balls: BTreeMap::new(),
            tail: None,
        }
    }

    pub fn new(apex: bool, balls: BTreeMap<u32, SetRep>, tail: Option<(u32, SetRep)>) -> Result<Self> {
        let shift = ball_shift();
        for (&n, set) in balls.iter().chain(tail.iter().map(|(n, s)| (n, s))) {
            if n == 0 {
                return Err(Error::Unsupported("ball indices start at 1".into()));
            }
            if *set.ambient() != shift {
                return Err(Error::AlphabetMismatch(format!(
                    "ball {n} does not live in the full 2-shift"
                )));
            }
        }
        let f = FanSet { apex, balls, tail };
        if f.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(f)
    }

    /// The subset of ball `n`, if any.
    pub fn ball(&self, n: u32) -> Option<&SetRep> {
        self.balls
            .get(&n)
            .or_else(|| self.tail.as_ref().filter(|(from, _)| n >= *from).map(|(_, s)| s))
    }

    pub fn is_empty(&self) -> bool {
        !self.apex && self.balls.is_empty() && self.tail.is_none()
    }

    fn meets_balls_from(&self, m: u32) -> bool {
        self.tail.is_some() || self.balls.range(m..).next().is_some()
    }

    /// Maximal `(n, 2^-m)`-separated subset size.
    pub fn census(&self, n: u32, m: u32) -> Result<BigUint> {
        if m == 0 {
            return Err(Error::InvalidResolution);
        }
        let mut total = BigUint::zero();
        for b in 1..m.saturating_sub(1) {
            if let Some(set) = self.ball(b) {
                total += set.census(separation_window(n, m - b - 1))?;
            }
        }
        if m >= 2 && self.ball(m - 1).is_some() {
            total += 1u32;
        }
        if self.apex || self.meets_balls_from(m) {
            total += 1u32;
        }
        Ok(total)
    }

    pub fn growth(&self, m: u32, n_max: u32) -> Result<EntropyEstimate> {
        if m == 0 {
            return Err(Error::InvalidResolution);
        }
        if n_max < 4 * m {
            return Err(Error::HorizonTooSmall { n_max, needed: 4 * m });
        }
        let counts = (1..=n_max).map(|n| self.census(n, m)).collect::<Result<Vec<_>>>()?;
        Ok(growth_from_counts(&counts, m, n_max))
    }

    /// The single ball `n` as a fan subset.
    fn only_ball(&self, n: u32) -> Option<FanSet> {
        let set = self.ball(n)?.clone();
        Some(FanSet {
            apex: false,
            balls: BTreeMap::from([(n, set)]),
            tail: None,
        })
    }
}

/// `Phi_eps(p)` for `eps = 2^-m`.
pub fn fan_phi_set(p: &FanPoint, m: u32) -> Result<FanSet> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    let whole = SetRep::Whole(ball_shift());
    match p {
        FanPoint::Apex => Ok(FanSet {
            apex: true,
            balls: BTreeMap::new(),
            tail: Some((m, whole)),
        }),
        FanPoint::Ball(n, _) if *n >= m => Ok(FanSet {
            apex: true,
            balls: BTreeMap::from([(*n, whole.clone())]),
            tail: Some((m, whole)),
        }),
        FanPoint::Ball(n, _) if *n + 1 == m => Ok(FanSet {
            apex: false,
            balls: BTreeMap::from([(*n, whole)]),
            tail: None,
        }),
        FanPoint::Ball(n, x) => {
            let inner = phi_set(&ball_shift(), x, m - n - 1)?;
            Ok(FanSet {
                apex: false,
                balls: BTreeMap::from([(*n, inner)]),
                tail: None,
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct FanHStarRow {
    pub m: u32,
    pub epsilon: f64,
    pub h_star: f64,
}

/// `h*(2^-m)`, the entropy of `Phi_eps` maximized over the apex and the
/// given ball points, each estimated at resolution `m + 2`.
pub fn fan_h_star(sample: &[FanPoint], ms: &[u32], n_max: u32) -> Result<Vec<FanHStarRow>> {
    let mut points = vec![FanPoint::Apex];
    points.extend(sample.iter().cloned());
    let mut rows = Vec::new();
    for &m in ms {
        let inner = m + 2;
        let mut best = 0.0f64;
        for p in &points {
            let est = fan_phi_set(p, m)?.growth(inner, n_max.max(4 * inner))?;
            best = best.max(est.value);
        }
        rows.push(FanHStarRow {
            m,
            epsilon: 0.5f64.powi(m as i32),
            h_star: best,
        });
    }
    Ok(rows)
}

/// The apex with `per_ball` points in each of the balls `1..=balls`: a
/// countable compact set whose only limit point is the apex.
pub fn apex_sequence(balls: u32, per_ball: usize) -> Result<FanSet> {
    let src = crate::lowering::entropy_point_family(&ball_shift(), &BiInfinitePoint::constant(0), 1)?;
    let mut map = BTreeMap::new();
    for b in 1..=balls {
        let horizon = (per_ball.max(2) as f64).log2().ceil() as u64 + b as u64;
        let e = src.emit(crate::symbolic::WindowSpec::new(-1, -1), &[], per_ball, horizon)?;
        let mut pts = e.points;
        pts.truncate(per_ball.max(1));
        if pts.is_empty() {
            pts.push(src.anchor.clone());
        }
        map.insert(b, SetRep::Finite(FiniteSet::new(ball_shift(), pts)?));
    }
    FanSet::new(true, map, None)
}

/// Available entropy of a ball subset, as used when lowering.
fn ball_entropy(set: &SetRep) -> f64 {
    match set {
        SetRep::Whole(s) => crate::entropy::sft_entropy_exact(s, 1e-12)
            .map(|b| b.value())
            .unwrap_or(0.0),
        SetRep::EntropyPoints(e) => crate::entropy::sft_entropy_exact(&e.ambient, 1e-12)
            .map(|b| b.value())
            .unwrap_or(0.0),
        _ => 0.0,
    }
}

/// Largest ball entropy present in the set.
pub fn fan_entropy_bound(k: &FanSet) -> f64 {
    k.balls
        .values()
        .chain(k.tail.iter().map(|(_, s)| s))
        .map(ball_entropy)
        .fold(0.0, f64::max)
}

/// Lowers a fan subset ball by ball: each ball subset is replaced by a subset
/// of entropy `min(h, h(ball))`, and the apex is kept. The ball subsets are
/// built at shift resolution 1 so that every fan resolution reads them on
/// prefix windows; `cfg.min_length` should cover the horizons to be checked.
pub fn fan_lower(k: &FanSet, h: f64, cfg: &LowerConfig) -> Result<FanSet> {
    let available = fan_entropy_bound(k);
    if !(h >= 0.0) || h > available + cfg.tolerance {
        return Err(Error::TargetOutOfRange { target: h, available });
    }
    if h == 0.0 {
        if k.apex {
            return Ok(FanSet::apex_only());
        }
        let (&n, set) = k
            .balls
            .iter()
            .next()
            .or(k.tail.as_ref().map(|(n, s)| (n, s)))
            .ok_or(Error::EmptySet)?;
        let x = point_of(set)?;
        let single = SetRep::Finite(FiniteSet::new(ball_shift(), [x])?);
        return FanSet::new(false, BTreeMap::from([(n, single)]), None);
    }
    if h >= available - cfg.tolerance {
        return Ok(k.clone());
    }
    let inner = LowerConfig {
        resolution: 1,
        ..cfg.clone()
    };
    let lower = |set: &SetRep| -> Result<SetRep> {
        let target = h.min(ball_entropy(set));
        if target <= cfg.tolerance {
            Ok(set.clone())
        } else {
            hul_lower(set, target, &inner)
        }
    };
    let balls = k
        .balls
        .iter()
        .map(|(&n, s)| Ok((n, lower(s)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let tail = match &k.tail {
        Some((n, s)) => Some((*n, lower(s)?)),
        None => None,
    };
    FanSet::new(k.apex, balls, tail)
}

#[derive(Debug, Clone)]
pub struct FanUnionReport {
    pub union: EntropyEstimate,
    pub parts_sup: f64,
    pub reps: EntropyEstimate,
    pub equality_holds: bool,
}

/// `h(union) = max(sup_n h(K_n), h({apex} ∪ {x_n}))` over the balls that the
/// resolution can see. Balls are invariant and their diameters shrink to 0,
/// so the equality is expected.
pub fn fan_union_check(k: &FanSet, m: u32, n_max: u32, tol: f64) -> Result<FanUnionReport> {
    let union = k.growth(m, n_max)?;
    let mut sup = f64::NEG_INFINITY;
    let mut reps = BTreeMap::new();
    for b in 1..m.saturating_sub(1).max(1) {
        if let Some(part) = k.only_ball(b) {
            sup = sup.max(part.growth(m, n_max)?.value);
            let x = point_of(k.ball(b).expect("present"))?;
            reps.insert(b, SetRep::Finite(FiniteSet::new(ball_shift(), [x])?));
        }
    }
    let reps = FanSet {
        apex: true,
        balls: reps,
        tail: None,
    }
    .growth(m, n_max)?;
    let target = sup.max(reps.value);
    Ok(FanUnionReport {
        equality_holds: (union.value - target).abs() <= tol,
        union,
        parts_sup: sup,
        reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(s: &str) -> BiInfinitePoint {
        s.parse().unwrap()
    }

    #[test]
    fn distances() {
        let x = pt("0..0@0");
        assert_eq!(fan_distance(&FanPoint::Apex, &FanPoint::Ball(3, x.clone())), 0.125);
        assert_eq!(
            fan_distance(&FanPoint::Ball(1, x.clone()), &FanPoint::Ball(2, x.clone())),
            0.5
        );
        let y = pt("0.1.0@0");
        assert_eq!(
            fan_distance(&FanPoint::Ball(2, x.clone()), &FanPoint::Ball(2, y)),
            0.125
        );
    }

    #[test]
    fn whole_fan_census() {
        let f = FanSet::whole();
        // m = 3: ball 1 at shift resolution 1 (2^n words), ball 2 one class,
        // apex with the rest one class.
        for n in 1..10 {
            assert_eq!(f.census(n, 3).unwrap(), BigUint::from((1u64 << n) + 2));
        }
        assert_eq!(f.census(5, 1).unwrap(), BigUint::from(1u32));
        assert_eq!(f.census(5, 2).unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn census_matches_brute_force_classes() {
        // Finite fan subsets: count classes of the relation d_n <= 2^-m directly.
        let pts = [pt("0..0@0"), pt("0.1.0@0"), pt("0.11.0@2"), pt("0.101.0@-1")];
        let mut balls = BTreeMap::new();
        let mut all = vec![FanPoint::Apex];
        for b in 1..=4u32 {
            let chosen: Vec<BiInfinitePoint> = pts.iter().take(b as usize).cloned().collect();
            all.extend(chosen.iter().map(|x| FanPoint::Ball(b, x.clone())));
            balls.insert(b, SetRep::Finite(FiniteSet::new(ball_shift(), chosen).unwrap()));
        }
        let f = FanSet::new(true, balls, None).unwrap();
        for m in 1..=6u32 {
            for n in 1..=6u32 {
                let eps = 0.5f64.powi(m as i32);
                let dn = |u: &FanPoint, v: &FanPoint| {
                    (0..n as i64)
                        .map(|i| {
                            let s = |p: &FanPoint| match p {
                                FanPoint::Apex => FanPoint::Apex,
                                FanPoint::Ball(b, x) => FanPoint::Ball(*b, x.shift_by(i)),
                            };
                            fan_distance(&s(u), &s(v))
                        })
                        .fold(0.0, f64::max)
                };
                // Ultrametric: closeness is an equivalence, so count classes greedily.
                let mut reps: Vec<&FanPoint> = Vec::new();
                for p in &all {
                    if reps.iter().all(|r| dn(r, p) > eps) {
                        reps.push(p);
                    }
                }
                assert_eq!(f.census(n, m).unwrap(), BigUint::from(reps.len()), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn h_star_stays_at_log_two() {
        let rows = fan_h_star(&[FanPoint::Ball(2, pt("0..0@0"))], &[1, 2, 3, 4, 5, 6], 24).unwrap();
        for r in rows {
            assert!(r.h_star >= 2f64.ln() - 0.01, "{r:?}");
        }
    }

    #[test]
    fn apex_sequences_have_zero_entropy() {
        let f = apex_sequence(6, 8).unwrap();
        for m in 2..=6 {
            assert!(f.growth(m, 24).unwrap().value <= 0.05);
        }
    }

    #[test]
    fn lowering_the_whole_fan() {
        let cfg = LowerConfig {
            min_length: 40,
            ..LowerConfig::default()
        };
        let whole = FanSet::whole();
        for h in [0.0, 0.3, 0.5, 2f64.ln()] {
            let low = fan_lower(&whole, h, &cfg).unwrap();
            let est = low.growth(4, 32).unwrap();
            assert!((est.value - h).abs() <= 0.05, "h = {h}: {est:?}");
        }
        let r = fan_union_check(&fan_lower(&whole, 0.5, &cfg).unwrap(), 4, 32, 0.05).unwrap();
        assert!(r.equality_holds, "{r:?}");
    }

    proptest! {
        #[test]
        fn strong_triangle_inequality(
            idx in proptest::collection::vec(0u32..5, 3),
            words in proptest::collection::vec(proptest::collection::vec(0u8..2, 1..6), 3),
            anchors in proptest::collection::vec(-3i64..3, 3),
        ) {
            let p: Vec<FanPoint> = (0..3).map(|i| {
                if idx[i] == 0 {
                    FanPoint::Apex
                } else {
                    FanPoint::Ball(idx[i], BiInfinitePoint::new(vec![0], words[i].clone(), vec![0], anchors[i]).unwrap())
                }
            }).collect();
            let d = |a: usize, b: usize| fan_distance(&p[a], &p[b]);
            prop_assert!(d(0, 2) <= d(0, 1).max(d(1, 2)));
            if let (FanPoint::Ball(n, _), FanPoint::Ball(k, _)) = (&p[0], &p[1]) {
                if n == k {
                    prop_assert!(d(0, 1) < fan_distance(&FanPoint::Apex, &p[0]));
                }
            }
        }
    }
}
