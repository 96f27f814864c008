//! Families `{x0} ∪ A_1 ∪ A_2 ∪ ...` built stage by stage around a limit point.
//!
//! Explicit stages list their points. Block stages are implicit: they hold the
//! lexicographically first `count` fills of a region (skipping the limit
//! point's own fill), which keeps families with astronomically many points
//! countable without materializing them.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::subshift::{StepGraph, Subshift};
use crate::symbolic::{ball_window, BiInfinitePoint, Symbol, WindowSpec, Word};

/// Largest number of points a block stage will materialize on request.
pub const MATERIALIZE_CAP: u64 = 1 << 16;

/// Lexicographically least `p_1..p_t` with `a -> p_1 -> ... -> p_t -> target`.
pub fn path_exact(g: &StepGraph, a: Symbol, target: Symbol, t: usize) -> Option<Word> {
    let k = g.k;
    let mut reach: Vec<Vec<bool>> = vec![(0..k).map(|s| g.adj[s][target as usize]).collect()];
    for step in 0..t {
        let prev = &reach[step];
        let next: Vec<bool> = (0..k).map(|s| (0..k).any(|b| g.adj[s][b] && prev[b])).collect();
        reach.push(next);
    }
    if !reach[t][a as usize] {
        return None;
    }
    let mut path = Vec::with_capacity(t);
    let mut cur = a;
    for step in (0..t).rev() {
        let next = (0..k as Symbol).find(|&b| g.adj[cur as usize][b as usize] && reach[step][b as usize])?;
        path.push(next);
        cur = next;
    }
    Some(path)
}

/// Shortest lexicographically least way back onto `x0` after coordinate
/// `pos`, given that coordinate `pos` now holds `last`.
pub fn rejoin(g: &StepGraph, x0: &BiInfinitePoint, pos: i64, last: Symbol) -> Result<Word> {
    for t in 0..=(g.k * g.k + 1) {
        let target = x0.symbol_at(pos + t as i64 + 1);
        if let Some(p) = path_exact(g, last, target, t) {
            return Ok(p);
        }
    }
    Err(Error::NotMixing)
}

/// Implicit stage: the first `count` fills of `region` after the limit
/// point's context symbol, in lexicographic order, skipping the limit
/// point's own fill. Each fill is followed by the shortest way back onto the
/// limit point.
#[derive(Debug)]
pub struct BlockStage {
    region: WindowSpec,
    count: BigUint,
    limit: BiInfinitePoint,
    graph: StepGraph,
    base_fill: Word,
    /// Number of leading fills (in rank order) the stage draws from.
    span: BigUint,
    base_included: bool,
    /// `nonlimit[p]`: distinct windows, other than the limit point's, seen on
    /// the first `p` coordinates of the region.
    nonlimit: Vec<BigUint>,
    /// `shows_limit[p]`: some point of the stage agrees with the limit there.
    shows_limit: Vec<bool>,
}

impl BlockStage {
    pub fn new(ambient: &Subshift, limit: &BiInfinitePoint, region: WindowSpec, count: BigUint) -> Result<Self> {
        let graph = ambient.step_graph()?;
        if region.is_empty() {
            return Err(Error::Unsupported("empty block region".into()));
        }
        if count.is_zero() {
            return Err(Error::EmptySet);
        }
        let len = region.len();
        let ctx = limit.symbol_at(region.lo - 1);
        let base_fill = limit.window_of(region);
        let table = graph.walk_table(len);
        let fills = table[len][ctx as usize].clone();

        // c_i: symbols smaller than v_i allowed after v_{i-1}.
        let smaller = |v: &[Symbol], i: usize| -> Vec<bool> {
            let prev = if i == 0 { ctx } else { v[i - 1] };
            (0..graph.k as Symbol)
                .map(|a| a < v[i] && graph.allowed(prev, a))
                .collect()
        };
        let rank_of = |v: &[Symbol]| -> BigUint {
            let mut r = BigUint::zero();
            for i in 0..len {
                for (a, &lt) in smaller(v, i).iter().enumerate() {
                    if lt {
                        r += &table[len - 1 - i][a];
                    }
                }
            }
            r
        };
        let unrank = |mut idx: BigUint| -> Word {
            let mut v = Vec::with_capacity(len);
            let mut prev = ctx;
            for i in 0..len {
                for a in graph.successors(prev) {
                    let c = &table[len - 1 - i][a as usize];
                    if idx < *c {
                        v.push(a);
                        prev = a;
                        break;
                    }
                    idx -= c;
                }
            }
            v
        };

        let base_rank = rank_of(&base_fill);
        let base_included = count > base_rank;
        let span = if base_included { &count + 1u32 } else { count.clone() };
        if span > fills {
            return Err(Error::TooLarge(format!(
                "region {region} has {fills} fills; {count} besides the limit's own do not fit"
            )));
        }
        let last = unrank(&span - 1u32);

        // Prefix ranks R_p(v) = sum_b g_p[b] with g_{p+1} = A^T g_p + c_p.
        let prefix_ranks = |v: &[Symbol]| -> Vec<BigUint> {
            let mut out = vec![BigUint::zero()];
            let mut g = vec![BigUint::zero(); graph.k];
            for p in 0..len {
                let mut next = vec![BigUint::zero(); graph.k];
                for a in 0..graph.k {
                    if g[a].is_zero() {
                        continue;
                    }
                    for b in 0..graph.k {
                        if graph.adj[a][b] {
                            next[b] += &g[a];
                        }
                    }
                }
                for (a, &lt) in smaller(v, p).iter().enumerate() {
                    if lt {
                        next[a] += 1u32;
                    }
                }
                g = next;
                out.push(g.iter().sum());
            }
            out
        };
        let r_last = prefix_ranks(&last);
        let r_base = prefix_ranks(&base_fill);

        let mut nonlimit = Vec::with_capacity(len + 1);
        let mut shows_limit = Vec::with_capacity(len + 1);
        // Rank of the first full fill extending base_fill[..p].
        let mut first_rank = BigUint::zero();
        for p in 0..=len {
            if p > 0 {
                for (a, &lt) in smaller(&base_fill, p - 1).iter().enumerate() {
                    if lt {
                        first_rank += &table[len - p][a];
                    }
                }
            }
            let prefixes = &r_last[p] + 1u32;
            let (present, total) = if !base_included {
                (r_base[p] <= r_last[p], prefixes)
            } else {
                let block = if p == 0 {
                    fills.clone()
                } else {
                    table[len - p][base_fill[p - 1] as usize].clone()
                };
                let end = (&first_rank + &block).min(span.clone());
                let with_prefix = end - &first_rank;
                let present = with_prefix >= BigUint::from(2u32);
                (present, if present { prefixes } else { prefixes - 1u32 })
            };
            nonlimit.push(if present { total - 1u32 } else { total });
            shows_limit.push(present);
        }

        Ok(BlockStage {
            region,
            count,
            limit: limit.clone(),
            graph,
            base_fill,
            span,
            base_included,
            nonlimit,
            shows_limit,
        })
    }

    pub fn region(&self) -> WindowSpec {
        self.region
    }

    pub fn count(&self) -> &BigUint {
        &self.count
    }

    /// Distinct non-limit windows and whether the limit window shows, for a
    /// window starting at or before the region.
    pub fn prefix_census(&self, w: WindowSpec) -> (BigUint, bool) {
        debug_assert!(w.lo <= self.region.lo);
        let len = self.region.len() as i64;
        let p = (w.hi - self.region.lo + 1).clamp(0, len) as usize;
        (self.nonlimit[p].clone(), self.shows_limit[p])
    }

    fn fill_at_rank(&self, mut idx: BigUint) -> Word {
        let len = self.region.len();
        let ctx = self.limit.symbol_at(self.region.lo - 1);
        let table = self.graph.walk_table(len);
        let mut v = Vec::with_capacity(len);
        let mut prev = ctx;
        for i in 0..len {
            for a in self.graph.successors(prev) {
                let c = &table[len - 1 - i][a as usize];
                if idx < *c {
                    v.push(a);
                    prev = a;
                    break;
                }
                idx -= c;
            }
        }
        v
    }

    pub fn point_from_fill(&self, fill: &[Symbol]) -> Result<BiInfinitePoint> {
        let last = *fill.last().expect("non-empty region");
        let tail = rejoin(&self.graph, &self.limit, self.region.hi, last)?;
        let mut word = fill.to_vec();
        word.extend(tail);
        Ok(self.limit.rewrite(self.region.lo, &word))
    }

    /// The `j`-th point of the stage in lexicographic order of fills.
    pub fn point(&self, j: &BigUint) -> Result<BiInfinitePoint> {
        if *j >= self.count {
            return Err(Error::Unsupported(format!("stage has only {} points", self.count)));
        }
        let fill = self.fill_at_rank(self.rank_of_index(j));
        self.point_from_fill(&fill)
    }

    fn rank_of_index(&self, j: &BigUint) -> BigUint {
        if !self.base_included {
            return j.clone();
        }
        let len = self.region.len();
        let table = self.graph.walk_table(len);
        let ctx = self.limit.symbol_at(self.region.lo - 1);
        let mut base_rank = BigUint::zero();
        let mut prev = ctx;
        for i in 0..len {
            for a in self.graph.successors(prev) {
                if a < self.base_fill[i] {
                    base_rank += &table[len - 1 - i][a as usize];
                }
            }
            prev = self.base_fill[i];
        }
        if *j >= base_rank {
            j + 1u32
        } else {
            j.clone()
        }
    }

    /// Index of the first point whose first difference from the limit is at
    /// the start of the region, if the stage has one.
    pub fn first_early_point(&self) -> Option<BigUint> {
        let len = self.region.len();
        let table = self.graph.walk_table(len);
        let ctx = self.limit.symbol_at(self.region.lo - 1);
        // Fills are ranked by first symbol; the earliest-differing fill of
        // least rank starts with the least allowed symbol other than the base.
        let mut offset = BigUint::zero();
        for a in self.graph.successors(ctx) {
            if a != self.base_fill[0] {
                break;
            }
            offset += &table[len - 1][a as usize];
        }
        if offset >= self.span {
            return None;
        }
        // Ranks before `offset` contain the base fill exactly when offset > 0.
        Some(if self.base_included && offset > BigUint::zero() {
            offset - 1u32
        } else {
            offset
        })
    }

    pub fn materialize(&self) -> Result<Vec<BiInfinitePoint>> {
        let n = self
            .count
            .to_u64()
            .filter(|&n| n <= MATERIALIZE_CAP)
            .ok_or_else(|| Error::TooLarge(format!("block stage with {} points", self.count)))?;
        (0..n).map(|j| self.point(&BigUint::from(j))).collect()
    }
}

#[derive(Debug, Clone)]
pub enum StageSet {
    Explicit(Vec<BiInfinitePoint>),
    Block(Arc<BlockStage>),
}

impl StageSet {
    pub fn size(&self) -> BigUint {
        match self {
            StageSet::Explicit(p) => BigUint::from(p.len()),
            StageSet::Block(b) => b.count().clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stage {
    /// Length `l_i` at which the stage becomes visible.
    pub length: u64,
    pub set: StageSet,
}

/// `{x0} ∪ A_1 ∪ ... ∪ A_N`, optionally standing for an infinite family whose
/// unbuilt stages agree with `x0` on a certified window.
#[derive(Debug, Clone)]
pub struct StagedFamily {
    pub ambient: Subshift,
    pub limit: BiInfinitePoint,
    pub resolution: u32,
    pub stages: Vec<Stage>,
    pub open_ended: bool,
    pub include_limit: bool,
    /// Unbuilt stages agree with the limit on `(-inf, h]`. Without it the
    /// certificate is the Bowen ball window of the last built stage.
    pub tail_agrees_through: Option<i64>,
}

impl StagedFamily {
    /// Checks the structural requirements: limit and points admissible,
    /// lengths strictly increasing, and each stage agreeing with the limit on
    /// the ball window of the previous one.
    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 {
            return Err(Error::InvalidResolution);
        }
        if !self.ambient.contains(&self.limit) {
            return Err(Error::Inadmissible(format!("limit point {}", self.limit)));
        }
        let any_block = self.stages.iter().any(|s| matches!(s.set, StageSet::Block(_)));
        let any_explicit = self.stages.iter().any(|s| matches!(s.set, StageSet::Explicit(_)));
        if any_block && any_explicit {
            return Err(Error::Unsupported("families mixing explicit and block stages".into()));
        }
        if !self.include_limit && self.stages.is_empty() {
            return Err(Error::EmptySet);
        }
        let m = self.resolution;
        let mut prev: Option<u64> = None;
        let mut prev_region_hi: Option<i64> = None;
        for (i, st) in self.stages.iter().enumerate() {
            if let Some(p) = prev {
                if st.length <= p {
                    return Err(Error::Certificate(format!(
                        "stage {} length {} is not above {p}",
                        i + 1,
                        st.length
                    )));
                }
            }
            match &st.set {
                StageSet::Explicit(points) => {
                    if points.is_empty() {
                        return Err(Error::Certificate(format!("stage {} is empty", i + 1)));
                    }
                    for x in points {
                        if !self.ambient.contains(x) {
                            return Err(Error::Inadmissible(format!("point {x}")));
                        }
                        if let Some(p) = prev {
                            let w = ball_window(p, m);
                            if x.window_of(w) != self.limit.window_of(w) {
                                return Err(Error::Certificate(format!(
                                    "stage {} point {x} leaves the ball window {w}",
                                    i + 1
                                )));
                            }
                        }
                    }
                }
                StageSet::Block(b) => {
                    let r = b.region();
                    if let Some(p) = prev {
                        if r.lo <= ball_window(p, m).hi {
                            return Err(Error::Certificate(format!(
                                "stage {} region {r} overlaps the ball window",
                                i + 1
                            )));
                        }
                    }
                    if let Some(h) = prev_region_hi {
                        if r.lo <= h + 1 {
                            return Err(Error::Certificate(format!(
                                "stage {} region {r} is not separated",
                                i + 1
                            )));
                        }
                    }
                    if b.limit != self.limit {
                        return Err(Error::Certificate(format!("stage {} uses a different limit", i + 1)));
                    }
                    prev_region_hi = Some(r.hi);
                }
            }
            prev = Some(st.length);
        }
        Ok(())
    }

    pub fn is_block(&self) -> bool {
        self.stages.iter().any(|s| matches!(s.set, StageSet::Block(_)))
    }

    /// Window on which every unbuilt stage agrees with the limit.
    pub fn certified_window(&self) -> Option<WindowSpec> {
        if !self.open_ended {
            return None;
        }
        let last = self.stages.last().map(|s| s.length).unwrap_or(0);
        let ball = ball_window(last, self.resolution);
        Some(match self.tail_agrees_through {
            Some(h) => WindowSpec::new(i64::MIN / 4, h.max(ball.hi)),
            None => ball,
        })
    }

    pub fn total_points(&self) -> BigUint {
        let s: BigUint = self.stages.iter().map(|s| s.set.size()).sum();
        if self.include_limit {
            s + 1u32
        } else {
            s
        }
    }

    /// Number of distinct words the family shows on `w`.
    pub fn census(&self, w: WindowSpec) -> Result<BigUint> {
        if let Some(cert) = self.certified_window() {
            if !w.is_within(&cert) {
                return Err(Error::UncertifiedTail {
                    window: w,
                    certified: cert,
                });
            }
        }
        let m = self.resolution;
        let collapses = |i: usize| i > 0 && w.is_within(&ball_window(self.stages[i - 1].length, m));

        if !self.is_block() {
            let mut seen: BTreeSet<Word> = BTreeSet::new();
            let mut limit_shown = self.include_limit;
            for (i, st) in self.stages.iter().enumerate() {
                if collapses(i) {
                    limit_shown = true;
                    continue;
                }
                if let StageSet::Explicit(points) = &st.set {
                    seen.extend(points.iter().map(|x| x.window_of(w)));
                }
            }
            if limit_shown {
                seen.insert(self.limit.window_of(w));
            }
            return Ok(BigUint::from(seen.len()));
        }

        let prefix_type = self.stages.iter().all(|s| match &s.set {
            StageSet::Block(b) => w.lo <= b.region().lo,
            StageSet::Explicit(_) => true,
        });
        if !prefix_type {
            return self.materialized()?.census(w);
        }
        let mut total = BigUint::zero();
        let mut limit_shown = self.include_limit;
        for (i, st) in self.stages.iter().enumerate() {
            if let StageSet::Block(b) = &st.set {
                if collapses(i) {
                    limit_shown = true;
                    continue;
                }
                let (n, shows) = b.prefix_census(w);
                total += n;
                limit_shown |= shows;
            }
        }
        if limit_shown {
            total += BigUint::one();
        }
        Ok(total)
    }

    /// Same family with every block stage listed explicitly.
    pub fn materialized(&self) -> Result<StagedFamily> {
        let stages = self
            .stages
            .iter()
            .map(|s| {
                Ok(Stage {
                    length: s.length,
                    set: match &s.set {
                        StageSet::Explicit(p) => StageSet::Explicit(p.clone()),
                        StageSet::Block(b) => StageSet::Explicit(b.materialize()?),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StagedFamily { stages, ..self.clone() })
    }

    /// Sub-family made of the stages in `range`, without the limit point.
    pub fn slice(&self, range: std::ops::Range<usize>) -> StagedFamily {
        StagedFamily {
            stages: self.stages[range].to_vec(),
            open_ended: false,
            include_limit: false,
            ..self.clone()
        }
    }

    /// First point of the given stage.
    pub fn stage_point(&self, stage: usize, index: &BigUint) -> Result<BiInfinitePoint> {
        match &self.stages[stage].set {
            StageSet::Explicit(p) => index
                .to_usize()
                .and_then(|j| p.get(j).cloned())
                .ok_or_else(|| Error::Unsupported("index out of range".into())),
            StageSet::Block(b) => b.point(index),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force block stage: list fills, take the first `count` non-base.
    fn brute_windows(
        s: &Subshift,
        x0: &BiInfinitePoint,
        region: WindowSpec,
        count: usize,
        w: WindowSpec,
    ) -> (usize, bool) {
        let ctx = x0.symbol_at(region.lo - 1);
        let base = x0.window_of(region);
        let mut fills: Vec<Word> = s
            .language_words(region.len() + 1, 1 << 20)
            .unwrap()
            .into_iter()
            .filter(|v| v[0] == ctx)
            .map(|v| v[1..].to_vec())
            .collect();
        fills.sort();
        let chosen: Vec<Word> = fills.into_iter().filter(|v| *v != base).take(count).collect();
        let g = s.step_graph().unwrap();
        let mut seen = BTreeSet::new();
        for f in &chosen {
            let tail = rejoin(&g, x0, region.hi, *f.last().unwrap()).unwrap();
            let mut word = f.clone();
            word.extend(tail);
            let y = x0.rewrite(region.lo, &word);
            assert!(s.contains(&y));
            seen.insert(y.window_of(w));
        }
        let limit = x0.window_of(w);
        let shows = seen.remove(&limit);
        (seen.len(), shows)
    }

    #[test]
    fn prefix_profiles_match_brute_force() {
        let shifts = [Subshift::full(2), Subshift::golden_mean(), Subshift::full(3)];
        let limits = ["0..0@0", "01..01@0", "0.1011.0@0", "2..1@3"];
        for s in &shifts {
            for lp in limits {
                let x0: BiInfinitePoint = lp.parse().unwrap();
                if !s.contains(&x0) {
                    continue;
                }
                for (lo, hi) in [(-1i64, 3i64), (0, 6), (2, 5)] {
                    let region = WindowSpec::new(lo, hi);
                    let g = s.step_graph().unwrap();
                    let fills = g.walks_from(x0.symbol_at(lo - 1), region.len());
                    let max = fills.to_usize().unwrap() - 1;
                    for count in [1, 2, 3, max / 2 + 1, max] {
                        if count == 0 || count > max {
                            continue;
                        }
                        let stage = BlockStage::new(s, &x0, region, BigUint::from(count)).unwrap();
                        for hi_w in lo - 2..=hi + 3 {
                            let w = WindowSpec::new(lo - 1, hi_w);
                            let (n, shows) = stage.prefix_census(w);
                            assert_eq!(
                                (n.to_usize().unwrap(), shows),
                                brute_windows(s, &x0, region, count, w),
                                "{} x0={lp} region={region} count={count} w={w}",
                                s.describe()
                            );
                        }
                        let pts = stage.materialize().unwrap();
                        assert_eq!(pts.len(), count);
                        assert!(pts.iter().all(|y| y.window_of(region) != x0.window_of(region)));
                    }
                }
            }
        }
    }

    #[test]
    fn early_point_differs_at_region_start() {
        let s = Subshift::full(2);
        let x0 = BiInfinitePoint::constant(0);
        let region = WindowSpec::new(3, 6);
        let stage = BlockStage::new(&s, &x0, region, BigUint::from(12u32)).unwrap();
        let j = stage.first_early_point().unwrap();
        assert_eq!(j, BigUint::from(7u32));
        assert_eq!(stage.point(&j).unwrap().symbol_at(3), 1);
        let small = BlockStage::new(&s, &x0, region, BigUint::from(3u32)).unwrap();
        assert_eq!(small.first_early_point(), None);
    }
}
