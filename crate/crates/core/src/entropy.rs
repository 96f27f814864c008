//! Entropy of sets at a fixed resolution, exact entropy of shifts of finite
//! type, the local sets `Phi_eps(x)` and the union check.

use num_bigint::BigUint;

use crate::bigmath::ln_big;
use crate::error::{Error, Result};
use crate::subset::{LeftFreeSet, SetRep};
use crate::subshift::Subshift;
use crate::symbolic::{separation_window, BiInfinitePoint};

/// Finite-horizon growth rate of a count sequence `s_1..s_N`.
///
/// With `r_n = log(s_n)/n` and the tail secant
/// `t_n = (log s_n - log s_{ceil(n/2)}) / (n - ceil(n/2))`, the value is the
/// largest of `min(r_n, t_n)` over the top half of the horizon and `lower` is
/// the smallest. Taking the minimum discards both the boundary constant that
/// inflates `r_n` and the one-off jumps that inflate `t_n`. `upper` is the
/// largest raw rate `r_n` on the top half.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub resolution: u32,
    pub n_max: u32,
    /// `counts[n - 1] = s_n`.
    pub counts: Vec<BigUint>,
}

impl EntropyEstimate {
    pub fn slope_at(&self, n: u32) -> f64 {
        ln_big(&self.counts[n as usize - 1]) / n as f64
    }

    /// Slope at the end of the horizon.
    pub fn final_slope(&self) -> f64 {
        self.slope_at(self.n_max)
    }
}

pub fn growth_from_counts(counts: &[BigUint], resolution: u32, n_max: u32) -> EntropyEstimate {
    let n_max = n_max.min(counts.len() as u32);
    let logs: Vec<f64> = counts.iter().map(ln_big).collect();
    let mut value = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let start = n_max.div_ceil(2).max(2);
    for n in start..=n_max {
        let ln = logs[n as usize - 1];
        if ln == f64::NEG_INFINITY {
            continue;
        }
        let half = n.div_ceil(2);
        let raw = ln / n as f64;
        let secant = (ln - logs[half as usize - 1]) / (n - half) as f64;
        let e = raw.min(secant);
        value = value.max(e);
        lower = lower.min(e);
        upper = upper.max(raw);
    }
    if n_max < 2 {
        let raw = logs.first().copied().unwrap_or(f64::NEG_INFINITY);
        (value, lower, upper) = (raw, raw, raw);
    }
    if lower == f64::INFINITY {
        lower = f64::NEG_INFINITY;
    }
    EntropyEstimate {
        value,
        lower,
        upper,
        resolution,
        n_max,
        counts: counts[..n_max as usize].to_vec(),
    }
}

pub fn separated_count(set: &SetRep, n: u32, m: u32) -> Result<BigUint> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    set.census(separation_window(n, m))
}

/// Minimal spanning sets have the same size as maximal separated ones.
pub fn spanning_count(set: &SetRep, n: u32, m: u32) -> Result<BigUint> {
    separated_count(set, n, m)
}

/// `s(2^-m, K)` estimated from `s_n` for `n = 1..=n_max`.
pub fn growth_estimate(set: &SetRep, m: u32, n_max: u32) -> Result<EntropyEstimate> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    if n_max < 4 * m {
        return Err(Error::HorizonTooSmall { n_max, needed: 4 * m });
    }
    let counts = (1..=n_max)
        .map(|n| separated_count(set, n, m))
        .collect::<Result<Vec<_>>>()?;
    let mut est = growth_from_counts(&counts, m, n_max);
    if let SetRep::Whole(s) = set {
        // Language counts are submultiplicative, so every log N_j / j bounds
        // the entropy from above.
        let top = n_max as usize + 2 * m as usize - 2;
        let bound = (1..=top)
            .map(|j| ln_big(&s.language_count(j)) / j as f64)
            .fold(f64::INFINITY, f64::min);
        est.upper = est.upper.min(bound);
        est.value = est.value.min(est.upper);
        est.lower = est.lower.min(est.value);
    }
    Ok(est)
}

/// `h(T, K)` read off a single resolution. Every `delta < 1` is an expansive
/// constant for the shift, so any `m >= 2` gives the entropy itself; `m = 1`
/// needs `allow_coarse`.
pub fn entropy_single_resolution(set: &SetRep, m: u32, n_max: u32, allow_coarse: bool) -> Result<EntropyEstimate> {
    if m == 1 && !allow_coarse {
        return Err(Error::ResolutionTooCoarse);
    }
    growth_estimate(set, m, n_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBracket {
    pub lower: f64,
    pub upper: f64,
}

impl EntropyBracket {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// `h_top` as the log of the spectral radius of the essential block graph,
/// bracketed by Collatz-Wielandt bounds until the log-width is below `tol`.
pub fn sft_entropy_exact(s: &Subshift, tol: f64) -> Result<EntropyBracket> {
    let g = s.graph();
    let ids: Vec<usize> = (0..g.states.len()).filter(|&u| g.core[u]).collect();
    let pos: std::collections::HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let succ: Vec<Vec<usize>> = ids
        .iter()
        .map(|&u| g.edges[u].iter().filter_map(|&(_, t)| pos.get(&t).copied()).collect())
        .collect();
    let n = ids.len();
    let mut x = vec![1.0f64; n];
    for _ in 0..1_000_000 {
        // y = (A + I) x keeps the iteration primitive on irreducible graphs.
        let mut y = x.clone();
        for (u, su) in succ.iter().enumerate() {
            for &t in su {
                y[u] += x[t];
            }
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let (lo, hi) = (lo - 1.0, hi - 1.0);
        if lo >= 1.0 - 1e-15 && hi.ln() - lo.max(1.0).ln() < tol {
            return Ok(EntropyBracket {
                lower: lo.max(1.0).ln(),
                upper: hi.ln(),
            });
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        x = y.into_iter().map(|v| v / norm).collect();
    }
    Err(Error::NonConvergence(
        "power iteration did not reach the tolerance".into(),
    ))
}

/// `Phi_eps(x) = {y : d(T^n x, T^n y) <= 2^-m for all n >= 0}`: the points
/// that agree with `x` from coordinate `1 - m` on.
pub fn phi_set(ambient: &Subshift, x: &BiInfinitePoint, m: u32) -> Result<SetRep> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    if !ambient.contains(x) {
        return Err(Error::Inadmissible(format!("point {x}")));
    }
    ambient.step_graph()?;
    Ok(SetRep::LeftFree(LeftFreeSet {
        ambient: ambient.clone(),
        point: x.clone(),
        from: 1 - m as i64,
    }))
}

#[derive(Debug, Clone)]
pub struct HStarRow {
    pub m: u32,
    pub epsilon: f64,
    pub h_star: f64,
    /// The value is a proven bound, not only a finite-horizon estimate.
    pub exact: bool,
}

/// `h*_eps = sup_x h(T, Phi_eps(x))` for a shift, over the given sample of
/// points. Every `Phi_eps(x)` is left-free, so its census is bounded by a
/// constant and the value is exactly 0 whenever the counts are constant.
pub fn h_star_profile(ambient: &Subshift, sample: &[BiInfinitePoint], ms: &[u32], n_max: u32) -> Result<Vec<HStarRow>> {
    let mut rows = Vec::new();
    for &m in ms {
        let mut best = 0.0f64;
        let mut exact = true;
        for x in sample {
            let phi = phi_set(ambient, x, m)?;
            let inner = m + 1;
            let est = growth_estimate(&phi, inner, n_max.max(4 * inner))?;
            let constant = est.counts.windows(2).all(|w| w[0] == w[1]);
            exact &= constant;
            best = best.max(if constant { 0.0 } else { est.value });
        }
        rows.push(HStarRow {
            m,
            epsilon: 0.5f64.powi(m as i32),
            h_star: best,
            exact,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    Holds,
    Violated(String),
}

#[derive(Debug, Clone)]
pub struct UnionReport {
    pub union: EntropyEstimate,
    pub parts_sup: f64,
    pub reps: EntropyEstimate,
    pub hypothesis: Hypothesis,
    /// `h(union) >= max(sup parts, h(reps)) - tol`.
    pub lower_holds: bool,
    /// Equality within `tol`; only asserted when the hypothesis holds.
    pub equality_holds: Option<bool>,
}

/// Largest coordinate at which a point of `part` may differ from `limit`,
/// when the representation makes that known.
fn latest_difference(part: &SetRep, limit: &BiInfinitePoint) -> Option<i64> {
    match part {
        SetRep::Finite(f) => {
            let mut hi = i64::MIN;
            for x in &f.points {
                match x.difference_span(limit)? {
                    Some(span) => hi = hi.max(span.hi),
                    None => {}
                }
            }
            Some(hi)
        }
        _ => None,
    }
}

fn earliest_nonnegative_difference(part: &SetRep, limit: &BiInfinitePoint) -> Option<i64> {
    match part {
        SetRep::EntropyPoints(e) if e.limit == *limit => {
            let lo = e.lowest_difference();
            match e.first_difference.1 {
                Some(h) if h <= 0 => None,
                _ => Some(lo.max(0)),
            }
        }
        SetRep::Staged(f) if f.limit == *limit && f.is_block() => f.stages.iter().find_map(|s| match &s.set {
            crate::staged::StageSet::Block(b) if b.region().hi >= 0 => Some(b.region().lo.max(0)),
            _ => None,
        }),
        _ => None,
    }
}

/// Compares `h(union)` with `max(sup_n h(B_n), h(reps))` where the parts
/// shrink to `limit`. Equality needs `diam(T^j B_n) -> 0` uniformly in `j`;
/// in a shift that holds when the parts only differ from the limit at
/// negative coordinates that drift to `-inf`, and fails as soon as some
/// point differs at a coordinate `c >= 0` (then `T^c` moves the difference
/// onto coordinate 0).
pub fn union_check(
    union: &SetRep,
    parts: &[SetRep],
    reps: &SetRep,
    limit: &BiInfinitePoint,
    m: u32,
    n_max: u32,
    tol: f64,
) -> Result<UnionReport> {
    let u = growth_estimate(union, m, n_max)?;
    let mut sup = f64::NEG_INFINITY;
    for p in parts {
        sup = sup.max(growth_estimate(p, m, n_max)?.value);
    }
    let r = growth_estimate(reps, m, n_max)?;

    let mut hypothesis = Hypothesis::Holds;
    let mut last_hi: Option<i64> = None;
    for (i, p) in parts.iter().enumerate() {
        if let Some(c) = earliest_nonnegative_difference(p, limit) {
            hypothesis = Hypothesis::Violated(format!("part {} differs from the limit at coordinate {c} >= 0", i + 1));
            break;
        }
        match latest_difference(p, limit) {
            Some(hi) if hi < 0 && last_hi.map_or(true, |prev| hi < prev) => last_hi = Some(hi),
            Some(hi) => {
                hypothesis = Hypothesis::Violated(format!(
                    "part {} differs from the limit at coordinate {hi}, not drifting left",
                    i + 1
                ));
                break;
            }
            None => {
                hypothesis = Hypothesis::Violated(format!("cannot bound the differences of part {}", i + 1));
                break;
            }
        }
    }
    let target = sup.max(r.value);
    let equality_holds = (hypothesis == Hypothesis::Holds).then(|| (u.value - target).abs() <= tol);
    Ok(UnionReport {
        lower_holds: u.value >= target - tol,
        union: u,
        parts_sup: sup,
        reps: r,
        hypothesis,
        equality_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subset::FiniteSet;
    use num_traits::ToPrimitive;

    #[test]
    fn exact_entropies() {
        for k in 1..6 {
            let b = sft_entropy_exact(&Subshift::full(k), 1e-12).unwrap();
            assert!((b.value() - (k as f64).ln()).abs() < 1e-9);
        }
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let b = sft_entropy_exact(&Subshift::golden_mean(), 1e-12).unwrap();
        assert!((b.value() - phi.ln()).abs() < 1e-9);
        assert!(b.lower <= phi.ln() + 1e-15 && phi.ln() <= b.upper + 1e-15);
        let periodic = Subshift::new(2, [vec![0, 0], vec![1, 1]]).unwrap();
        assert!(sft_entropy_exact(&periodic, 1e-12).unwrap().value().abs() < 1e-12);
    }

    /// Independent oracle: the spectral radius from the characteristic
    /// polynomial of a 3x3 matrix, found by bisection.
    #[test]
    fn exact_entropy_matches_characteristic_root() {
        // Forbid 00, 12, 21 on three symbols.
        let s = Subshift::new(3, [vec![0, 0], vec![1, 2], vec![2, 1]]).unwrap();
        let a = s.transition_matrix().unwrap();
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let charp = |t: f64| {
            let mut m = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = if i == j { t } else { 0.0 } - a[i][j] as f64;
                }
            }
            det3(m)
        };
        let (mut lo, mut hi) = (1.0f64, 3.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if charp(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let b = sft_entropy_exact(&s, 1e-12).unwrap();
        assert!((b.value() - lo.ln()).abs() < 1e-9, "{} vs {}", b.value(), lo.ln());
    }

    #[test]
    fn whole_space_estimates() {
        let full = SetRep::Whole(Subshift::full(2));
        let e = growth_estimate(&full, 2, 20).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-12);
        let g = SetRep::Whole(Subshift::golden_mean());
        let e = entropy_single_resolution(&g, 1, 24, true).unwrap();
        assert!((e.value - 0.4812).abs() < 0.01);
        assert_eq!(
            entropy_single_resolution(&g, 1, 24, false).unwrap_err(),
            Error::ResolutionTooCoarse
        );
        assert!(matches!(growth_estimate(&g, 3, 8), Err(Error::HorizonTooSmall { .. })));
    }

    #[test]
    fn finite_sets_have_zero_estimate() {
        let s = Subshift::full(2);
        let pts: Vec<BiInfinitePoint> = ["0..0@0", "0.1.0@5", "0.1.0@-3", "1..1@0"]
            .iter()
            .map(|p| p.parse().unwrap())
            .collect();
        let set = SetRep::Finite(FiniteSet::new(s, pts).unwrap());
        let e = growth_estimate(&set, 2, 24).unwrap();
        assert_eq!(e.value, 0.0);
        // The change at -3 never enters a window at m = 2.
        assert_eq!(e.counts.last().unwrap().to_u32(), Some(3));
    }

    #[test]
    fn phi_sets_have_zero_entropy() {
        let s = Subshift::full(2);
        let sample: Vec<BiInfinitePoint> = ["0..0@0", "0.1101.0@-2", "01..01@0"]
            .iter()
            .map(|p| p.parse().unwrap())
            .collect();
        for row in h_star_profile(&s, &sample, &[1, 2, 3, 4, 5, 6], 16).unwrap() {
            assert_eq!(row.h_star, 0.0);
            assert!(row.exact);
        }
    }
}
