//! Finitely described compact subsets of a subshift and their window census.
//!
//! The census of a set `K` on a window `w` is the number of distinct words
//! that points of `K` show on `w`. On `separation_window(n, m)` it is the
//! maximal size of an `(n, 2^-m)`-separated subset of `K`, and the minimal
//! size of an `(n, 2^-m)`-spanning set.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::factor::SlidingBlockCode;
use crate::staged::StagedFamily;
use crate::subshift::Subshift;
use crate::symbolic::{check_symbols, BiInfinitePoint, Symbol, WindowSpec, Word};

#[derive(Debug, Clone)]
pub struct FiniteSet {
    pub ambient: Subshift,
    pub points: BTreeSet<BiInfinitePoint>,
}

impl FiniteSet {
    pub fn new(ambient: Subshift, points: impl IntoIterator<Item = BiInfinitePoint>) -> Result<Self> {
        let points: BTreeSet<_> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        for x in &points {
            if !ambient.contains(x) {
                return Err(Error::Inadmissible(format!("point {x}")));
            }
        }
        Ok(FiniteSet { ambient, points })
    }
}

/// All points whose word on `[base, base + depth - 1]` is one of `words`.
#[derive(Debug, Clone)]
pub struct CylinderTree {
    pub ambient: Subshift,
    pub base: i64,
    pub depth: usize,
    pub words: BTreeSet<Word>,
}

impl CylinderTree {
    pub fn new(ambient: Subshift, base: i64, depth: usize, words: impl IntoIterator<Item = Word>) -> Result<Self> {
        let words: BTreeSet<Word> = words.into_iter().collect();
        if words.is_empty() {
            return Err(Error::EmptySet);
        }
        for w in &words {
            check_symbols(w, ambient.alphabet_size())?;
            if w.len() != depth {
                return Err(Error::MalformedWord(format!(
                    "word of length {} in a tree of depth {depth}",
                    w.len()
                )));
            }
            if !ambient.in_language(w) {
                return Err(Error::Inadmissible(crate::symbolic::format_word(w)));
            }
        }
        Ok(CylinderTree {
            ambient,
            base,
            depth,
            words,
        })
    }

    pub fn range(&self) -> WindowSpec {
        WindowSpec::new(self.base, self.base + self.depth as i64 - 1)
    }

    /// Distinct prefixes of length `d`.
    pub fn level(&self, d: usize) -> BTreeSet<&[Symbol]> {
        self.words.iter().map(|w| &w[..d]).collect()
    }

    /// Union of trees with the same base and depth.
    pub fn union(parts: &[CylinderTree]) -> Result<CylinderTree> {
        let first = parts.first().ok_or(Error::EmptySet)?;
        if parts.iter().any(|p| p.base != first.base || p.depth != first.depth) {
            return Err(Error::DepthMismatch);
        }
        if parts.iter().any(|p| p.ambient != first.ambient) {
            return Err(Error::AlphabetMismatch("trees live in different shifts".into()));
        }
        let words = parts.iter().flat_map(|p| p.words.iter().cloned());
        CylinderTree::new(first.ambient.clone(), first.base, first.depth, words)
    }
}

/// Points of the ambient shift that agree with one point of the limit's
/// construction: `x0` together with every finite modification of `x0` whose
/// first difference `s` satisfies `s >= 1 - m` and, optionally, falls in a
/// half-open range.
///
/// Modifications are also limited to end by `s + 2^(20 + |s|)`; every window
/// this library counts on stays far inside that bound.
#[derive(Debug, Clone)]
pub struct EntropyPointSet {
    pub ambient: Subshift,
    pub limit: BiInfinitePoint,
    pub resolution: u32,
    pub first_difference: (Option<i64>, Option<i64>),
    pub include_limit: bool,
}

impl EntropyPointSet {
    pub fn new(ambient: Subshift, limit: BiInfinitePoint, resolution: u32) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidResolution);
        }
        ambient.step_graph()?;
        if !ambient.is_mixing() {
            return Err(Error::NotMixing);
        }
        if !ambient.contains(&limit) {
            return Err(Error::Inadmissible(format!("limit point {limit}")));
        }
        Ok(EntropyPointSet {
            ambient,
            limit,
            resolution,
            first_difference: (None, None),
            include_limit: true,
        })
    }

    /// Points whose first difference lies in `[lo, hi)`, without the limit.
    pub fn block(&self, lo: i64, hi: Option<i64>) -> Self {
        EntropyPointSet {
            first_difference: (Some(lo), hi),
            include_limit: false,
            ..self.clone()
        }
    }

    pub fn lowest_difference(&self) -> i64 {
        let base = 1 - self.resolution as i64;
        self.first_difference.0.map_or(base, |lo| lo.max(base))
    }

    pub fn census(&self, w: WindowSpec) -> Result<BigUint> {
        let g = self.ambient.step_graph()?;
        let s_min = self.lowest_difference();
        let filtered = self.first_difference != (None, None);
        if w.is_empty() {
            return Ok(BigUint::one());
        }
        if w.hi - s_min >= 1 << 20 {
            return Err(Error::UnsupportedWindow(format!(
                "{w} reaches past the modification bound"
            )));
        }
        if w.lo > s_min {
            if filtered || !self.include_limit {
                return Err(Error::UnsupportedWindow(format!(
                    "{w} starts inside the free range of a block"
                )));
            }
            // Any word reachable from the context after the right number of
            // steps is realized, and the limit's word is among them.
            let steps = (w.lo - s_min + 1) as usize;
            let mut reach = vec![false; g.k];
            reach[self.limit.symbol_at(s_min - 1) as usize] = true;
            for _ in 0..steps {
                reach = (0..g.k).map(|b| (0..g.k).any(|a| reach[a] && g.adj[a][b])).collect();
            }
            let table = g.walk_table(w.len() - 1);
            let last = &table[w.len() - 1];
            return Ok((0..g.k).filter(|&a| reach[a]).map(|a| last[a].clone()).sum());
        }
        let top = match self.first_difference.1 {
            Some(h) => h.min(w.hi + 1),
            None => w.hi + 1,
        };
        let table = g.walk_table((w.hi - s_min).max(0) as usize);
        let mut total = BigUint::zero();
        for s in s_min..top {
            let prev = self.limit.symbol_at(s - 1);
            let here = self.limit.symbol_at(s);
            for a in g.successors(prev) {
                if a != here {
                    total += &table[(w.hi - s) as usize][a as usize];
                }
            }
        }
        let beyond = self.first_difference.1.map_or(true, |h| h > w.hi + 1);
        if self.include_limit || beyond {
            total += 1u32;
        }
        Ok(total)
    }

    /// Lexicographically least member whose first difference is at `s`.
    pub fn first_point_at(&self, s: i64) -> Result<Option<BiInfinitePoint>> {
        let g = self.ambient.step_graph()?;
        let prev = self.limit.symbol_at(s - 1);
        let here = self.limit.symbol_at(s);
        let Some(a) = g.successors(prev).find(|&a| a != here) else {
            return Ok(None);
        };
        let mut word = vec![a];
        word.extend(crate::staged::rejoin(&g, &self.limit, s, a)?);
        Ok(Some(self.limit.rewrite(s, &word)))
    }
}

/// `{y in X : y_j = x_j for all j >= from}`.
#[derive(Debug, Clone)]
pub struct LeftFreeSet {
    pub ambient: Subshift,
    pub point: BiInfinitePoint,
    pub from: i64,
}

impl LeftFreeSet {
    pub fn census(&self, w: WindowSpec) -> Result<BigUint> {
        let g = self.ambient.step_graph()?;
        let free_hi = w.hi.min(self.from - 1);
        if w.is_empty() || free_hi < w.lo {
            return Ok(BigUint::one());
        }
        let free = (free_hi - w.lo + 1) as usize;
        let anchor = self.point.symbol_at(self.from);
        let gap = (self.from - 1 - free_hi) as usize;
        if gap == 0 {
            return Ok(g.walks_into(anchor, free));
        }
        // Words of length `free` whose last symbol reaches `anchor` in gap + 1 steps.
        let mut hits = vec![false; g.k];
        hits[anchor as usize] = true;
        for _ in 0..=gap {
            hits = (0..g.k).map(|a| (0..g.k).any(|b| g.adj[a][b] && hits[b])).collect();
        }
        Ok((0..g.k as Symbol)
            .filter(|&b| hits[b as usize])
            .map(|b| g.walks_into(b, free - 1))
            .sum())
    }
}

/// Image of the whole source shift under a sliding block code.
#[derive(Debug, Clone)]
pub struct CodeImage {
    pub code: Arc<SlidingBlockCode>,
}

#[derive(Debug, Clone)]
pub enum SetRep {
    Finite(FiniteSet),
    Tree(CylinderTree),
    Whole(Subshift),
    Staged(StagedFamily),
    EntropyPoints(EntropyPointSet),
    LeftFree(LeftFreeSet),
    Image(CodeImage),
}

impl SetRep {
    pub fn ambient(&self) -> &Subshift {
        match self {
            SetRep::Finite(f) => &f.ambient,
            SetRep::Tree(t) => &t.ambient,
            SetRep::Whole(s) => s,
            SetRep::Staged(f) => &f.ambient,
            SetRep::EntropyPoints(e) => &e.ambient,
            SetRep::LeftFree(l) => &l.ambient,
            SetRep::Image(c) => c.code.target(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SetRep::Finite(_) => "finite",
            SetRep::Tree(_) => "tree",
            SetRep::Whole(_) => "whole",
            SetRep::Staged(_) => "staged",
            SetRep::EntropyPoints(_) => "entropy-points",
            SetRep::LeftFree(_) => "left-free",
            SetRep::Image(_) => "image",
        }
    }

    /// Number of distinct words shown on `w`.
    pub fn census(&self, w: WindowSpec) -> Result<BigUint> {
        match self {
            SetRep::Finite(f) => {
                let seen: BTreeSet<Word> = f.points.iter().map(|x| x.window_of(w)).collect();
                Ok(BigUint::from(seen.len()))
            }
            SetRep::Tree(t) => {
                let r = t.range();
                if !w.is_within(&r) {
                    return Err(Error::WindowExceedsDepth {
                        window: w,
                        base: t.base,
                        top: r.hi,
                    });
                }
                if w.is_empty() {
                    return Ok(BigUint::one());
                }
                let a = (w.lo - t.base) as usize;
                let seen: BTreeSet<&[Symbol]> = t.words.iter().map(|v| &v[a..a + w.len()]).collect();
                Ok(BigUint::from(seen.len()))
            }
            SetRep::Whole(s) => Ok(s.language_count(w.len())),
            SetRep::Staged(f) => f.census(w),
            SetRep::EntropyPoints(e) => e.census(w),
            SetRep::LeftFree(l) => l.census(w),
            SetRep::Image(c) => Ok(c.code.image_language_count(w.len())),
        }
    }

    /// The distinct words shown on `w`, when there are at most `cap` of them.
    pub fn windows(&self, w: WindowSpec, cap: usize) -> Result<BTreeSet<Word>> {
        let too_many = |n: &BigUint| n.to_usize().map_or(true, |n| n > cap);
        let count = self.census(w)?;
        if too_many(&count) {
            return Err(Error::TooLarge(format!("{count} windows on {w}")));
        }
        let out: BTreeSet<Word> = match self {
            SetRep::Finite(f) => f.points.iter().map(|x| x.window_of(w)).collect(),
            SetRep::Tree(t) => {
                let a = (w.lo - t.base) as usize;
                t.words.iter().map(|v| v[a..a + w.len()].to_vec()).collect()
            }
            SetRep::Whole(s) => s.language_words(w.len(), cap)?.into_iter().collect(),
            SetRep::Staged(f) => {
                let f = f.materialized()?;
                let mut seen: BTreeSet<Word> = BTreeSet::new();
                let m = f.resolution;
                let mut limit_shown = f.include_limit;
                for (i, st) in f.stages.iter().enumerate() {
                    if i > 0 && w.is_within(&crate::symbolic::ball_window(f.stages[i - 1].length, m)) {
                        limit_shown = true;
                        continue;
                    }
                    if let crate::staged::StageSet::Explicit(p) = &st.set {
                        seen.extend(p.iter().map(|x| x.window_of(w)));
                    }
                }
                if limit_shown {
                    seen.insert(f.limit.window_of(w));
                }
                seen
            }
            SetRep::Image(c) => c.code.image_language_words(w.len(), cap)?.into_iter().collect(),
            SetRep::EntropyPoints(_) | SetRep::LeftFree(_) => {
                return Err(Error::Unsupported(format!("listing windows of a {} set", self.kind())))
            }
        };
        debug_assert_eq!(BigUint::from(out.len()), count);
        Ok(out)
    }

    /// Smallest cylinder tree of the given depth and base containing the set.
    pub fn outer_tree(&self, base: i64, depth: usize, cap: usize) -> Result<CylinderTree> {
        let w = WindowSpec::new(base, base + depth as i64 - 1);
        let words = self.windows(w, cap)?;
        CylinderTree::new(self.ambient().clone(), base, depth, words)
    }
}
