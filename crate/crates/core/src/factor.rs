//! Sliding block codes, fiber entropy, natural extensions, and the
//! surjective augmentation of a system.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::entropy::{growth_estimate, growth_from_counts, EntropyEstimate};
use crate::error::{Error, Result};
use crate::subset::{CodeImage, CylinderTree, FiniteSet, LeftFreeSet, SetRep};
use crate::subshift::{encode_block, Subshift};
use crate::symbolic::{format_word, separation_window, BiInfinitePoint, Symbol, WindowSpec, Word};

/// `(pi x)_i = rule(x_{i-memory} .. x_{i+anticipation})`.
#[derive(Debug, Clone)]
pub struct SlidingBlockCode {
    source: Subshift,
    target: Subshift,
    memory: usize,
    anticipation: usize,
    rule: Vec<Option<Symbol>>,
}

/// Labeled automaton over source words of length `r`, used to enumerate
/// image words.
struct ImageAutomaton {
    /// Images of the complete code windows inside each state.
    pre_labels: Vec<Word>,
    /// `(label, target)` per state.
    moves: Vec<Vec<(Symbol, usize)>>,
}

impl SlidingBlockCode {
    pub fn new(
        source: Subshift,
        target: Subshift,
        memory: usize,
        anticipation: usize,
        rule: &BTreeMap<Word, Symbol>,
    ) -> Result<Self> {
        let width = memory + anticipation + 1;
        let k = source.alphabet_size();
        let size = (k as f64).powi(width as i32);
        if size > (1u64 << 22) as f64 {
            return Err(Error::TooLarge(format!("code window of {width} symbols over {k}")));
        }
        let mut table = vec![None; size as usize];
        for (w, &b) in rule {
            if w.len() != width {
                return Err(Error::MalformedWord(format!(
                    "rule word {} has length {}",
                    format_word(w),
                    w.len()
                )));
            }
            crate::symbolic::check_symbols(w, k)?;
            if b as usize >= target.alphabet_size() {
                return Err(Error::SymbolOutOfRange {
                    symbol: b as usize,
                    size: target.alphabet_size(),
                });
            }
            table[encode_block(w, k)] = Some(b);
        }
        for w in source.language_words(width, 1 << 22)? {
            if table[encode_block(&w, k)].is_none() {
                return Err(Error::Unsupported(format!(
                    "no rule for source word {}",
                    format_word(&w)
                )));
            }
        }
        let code = SlidingBlockCode {
            source,
            target,
            memory,
            anticipation,
            rule: table,
        };
        let check_len = code.target.forbidden().iter().map(Vec::len).max().unwrap_or(1);
        for w in code.image_language_words(check_len, 1 << 20)? {
            if !code.target.is_admissible(&w) {
                return Err(Error::Inadmissible(format!(
                    "image word {} is forbidden in the target",
                    format_word(&w)
                )));
            }
        }
        Ok(code)
    }

    pub fn from_fn(
        source: Subshift,
        target: Subshift,
        memory: usize,
        anticipation: usize,
        f: impl Fn(&[Symbol]) -> Symbol,
    ) -> Result<Self> {
        let width = memory + anticipation + 1;
        let rule: BTreeMap<Word, Symbol> = source
            .language_words(width, 1 << 22)?
            .into_iter()
            .map(|w| {
                let b = f(&w);
                (w, b)
            })
            .collect();
        SlidingBlockCode::new(source, target, memory, anticipation, &rule)
    }

    pub fn source(&self) -> &Subshift {
        &self.source
    }
    pub fn target(&self) -> &Subshift {
        &self.target
    }
    pub fn memory(&self) -> usize {
        self.memory
    }
    pub fn anticipation(&self) -> usize {
        self.anticipation
    }

    pub fn rule_table(&self) -> BTreeMap<Word, Symbol> {
        let width = self.memory + self.anticipation + 1;
        let k = self.source.alphabet_size();
        (0..self.rule.len())
            .filter_map(|c| self.rule[c].map(|b| (crate::subshift::decode_block(c, k, width), b)))
            .collect()
    }

    fn lookup(&self, w: &[Symbol]) -> Symbol {
        self.rule[encode_block(w, self.source.alphabet_size())].expect("rules cover the source language")
    }

    /// Image of a word of length `n + memory + anticipation`.
    pub fn apply_word(&self, w: &[Symbol]) -> Word {
        let width = self.memory + self.anticipation + 1;
        if w.len() < width {
            return Vec::new();
        }
        w.windows(width).map(|v| self.lookup(v)).collect()
    }

    pub fn apply_point(&self, x: &BiInfinitePoint) -> BiInfinitePoint {
        let (a, b) = (self.memory as i64, self.anticipation as i64);
        let nl = x.left_period().len() as i64;
        let nr = x.right_period().len() as i64;
        let start = x.anchor() - b - nl;
        let end = x.anchor() + x.center().len() as i64 + a + nr;
        let image =
            |lo: i64, hi_excl: i64| -> Word { self.apply_word(&x.window_of(WindowSpec::new(lo - a, hi_excl - 1 + b))) };
        BiInfinitePoint::new(image(start - nl, start), image(start, end), image(end, end + nr), start)
            .expect("periods are non-empty")
    }

    pub fn apply_set(self: &Arc<Self>, set: &SetRep) -> Result<SetRep> {
        if set.ambient() != &self.source {
            return Err(Error::AlphabetMismatch("set does not live in the code's source".into()));
        }
        match set {
            SetRep::Finite(f) => Ok(SetRep::Finite(FiniteSet::new(
                self.target.clone(),
                f.points.iter().map(|x| self.apply_point(x)),
            )?)),
            SetRep::Tree(t) => {
                let need = self.memory + self.anticipation;
                if t.depth <= need {
                    return Err(Error::DepthTooSmall {
                        depth: t.depth,
                        needed: need + 1,
                    });
                }
                let words = t.words.iter().map(|w| self.apply_word(w));
                Ok(SetRep::Tree(CylinderTree::new(
                    self.target.clone(),
                    t.base + self.memory as i64,
                    t.depth - need,
                    words,
                )?))
            }
            SetRep::Whole(_) => Ok(SetRep::Image(CodeImage { code: self.clone() })),
            SetRep::Staged(f) if !f.open_ended => {
                let f = f.materialized()?;
                let mut points: Vec<BiInfinitePoint> = Vec::new();
                if f.include_limit {
                    points.push(f.limit.clone());
                }
                for st in &f.stages {
                    if let crate::staged::StageSet::Explicit(p) = &st.set {
                        points.extend(p.iter().cloned());
                    }
                }
                Ok(SetRep::Finite(FiniteSet::new(
                    self.target.clone(),
                    points.iter().map(|x| self.apply_point(x)),
                )?))
            }
            other => Err(Error::Unsupported(format!("image of a {} set", other.kind()))),
        }
    }

    fn automaton(&self) -> Result<ImageAutomaton> {
        let r = self.source.graph().block.max(self.memory + self.anticipation);
        let states = self.source.language_words(r, 1 << 20)?;
        let index: HashMap<&Word, usize> = states.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let width = self.memory + self.anticipation + 1;
        let pre_labels = states.iter().map(|u| self.apply_word(u)).collect();
        let moves = states
            .iter()
            .map(|u| {
                (0..self.source.alphabet_size() as Symbol)
                    .filter_map(|c| {
                        let mut v = u.clone();
                        v.push(c);
                        if !self.source.in_language(&v) {
                            return None;
                        }
                        let label = self.lookup(&v[v.len() - width..]);
                        index.get(&v[1..].to_vec()).map(|&t| (label, t))
                    })
                    .collect()
            })
            .collect();
        Ok(ImageAutomaton { pre_labels, moves })
    }

    /// Initial macrostates grouped by pre-label.
    fn groups(auto: &ImageAutomaton) -> BTreeMap<Word, BTreeSet<usize>> {
        let mut g: BTreeMap<Word, BTreeSet<usize>> = BTreeMap::new();
        for (u, p) in auto.pre_labels.iter().enumerate() {
            g.entry(p.clone()).or_default().insert(u);
        }
        g
    }

    /// Number of words of length `n` in the image of the source shift.
    pub fn image_language_count(&self, n: usize) -> BigUint {
        let auto = self.automaton().expect("automaton fits");
        let groups = Self::groups(&auto);
        let p0 = auto.pre_labels.first().map_or(0, Vec::len);
        if n < p0 {
            let prefixes: BTreeSet<&[Symbol]> = groups.keys().map(|p| &p[..n]).collect();
            return BigUint::from(prefixes.len());
        }
        let mut total = BigUint::zero();
        for start in groups.into_values() {
            let mut layer: HashMap<BTreeSet<usize>, BigUint> = HashMap::from([(start, BigUint::one())]);
            for _ in 0..n - p0 {
                let mut next: HashMap<BTreeSet<usize>, BigUint> = HashMap::new();
                for (mac, c) in &layer {
                    let mut by_label: BTreeMap<Symbol, BTreeSet<usize>> = BTreeMap::new();
                    for &u in mac {
                        for &(l, t) in &auto.moves[u] {
                            by_label.entry(l).or_default().insert(t);
                        }
                    }
                    for (_, m2) in by_label {
                        *next.entry(m2).or_default() += c;
                    }
                }
                layer = next;
            }
            total += layer.values().sum::<BigUint>();
        }
        total
    }

    /// Image words of length `n`, sorted.
    pub fn image_language_words(&self, n: usize, cap: usize) -> Result<Vec<Word>> {
        let auto = self.automaton()?;
        let groups = Self::groups(&auto);
        let p0 = auto.pre_labels.first().map_or(0, Vec::len);
        let mut out: BTreeSet<Word> = BTreeSet::new();
        if n < p0 {
            out.extend(groups.keys().map(|p| p[..n].to_vec()));
            return Ok(out.into_iter().collect());
        }
        let mut stack: Vec<(Word, BTreeSet<usize>)> = groups.into_iter().collect();
        while let Some((w, mac)) = stack.pop() {
            if w.len() == n {
                out.insert(w);
                if out.len() > cap {
                    return Err(Error::TooLarge(format!("more than {cap} image words")));
                }
                continue;
            }
            let mut by_label: BTreeMap<Symbol, BTreeSet<usize>> = BTreeMap::new();
            for &u in &mac {
                for &(l, t) in &auto.moves[u] {
                    by_label.entry(l).or_default().insert(t);
                }
            }
            for (l, m2) in by_label {
                let mut v = w.clone();
                v.push(l);
                stack.push((v, m2));
            }
        }
        Ok(out.into_iter().collect())
    }

    /// For each `n` in `1..=n_max`: the largest number of source words of
    /// length `n + memory + anticipation` sharing one image word.
    pub fn max_preimage_counts(&self, n_max: usize) -> Result<Vec<BigUint>> {
        let auto = self.automaton()?;
        let groups = Self::groups(&auto);
        let p0 = auto.pre_labels.first().map_or(0, Vec::len);
        let states = auto.moves.len();
        let mut best = vec![BigUint::zero(); n_max + 1];
        for (pre, start) in groups {
            let mut v = vec![BigUint::zero(); states];
            for &u in &start {
                v[u] = BigUint::one();
            }
            let base: BigUint = v.iter().sum();
            debug_assert_eq!(pre.len(), p0);
            if p0 <= n_max && p0 > 0 && base > best[p0] {
                best[p0] = base.clone();
            }
            let mut stack: Vec<(usize, Vec<BigUint>)> = vec![(p0, v)];
            while let Some((len, vec)) = stack.pop() {
                if len >= n_max {
                    continue;
                }
                let mut by_label: BTreeMap<Symbol, Vec<BigUint>> = BTreeMap::new();
                for (u, c) in vec.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for &(l, t) in &auto.moves[u] {
                        by_label.entry(l).or_insert_with(|| vec![BigUint::zero(); states])[t] += c;
                    }
                }
                for (_, nv) in by_label {
                    let total: BigUint = nv.iter().sum();
                    if total > best[len + 1] {
                        best[len + 1] = total;
                    }
                    stack.push((len + 1, nv));
                }
            }
        }
        if p0 > 1 {
            // Image words shorter than the pre-label: group by prefix.
            let mut by_prefix: BTreeMap<Word, BigUint> = BTreeMap::new();
            for n in 1..p0.min(n_max + 1) {
                by_prefix.clear();
                for p in &auto.pre_labels {
                    *by_prefix.entry(p[..n].to_vec()).or_default() += 1u32;
                }
                best[n] = by_prefix.values().max().cloned().unwrap_or_default();
            }
        }
        best.remove(0);
        Ok(best)
    }
}

/// Growth rate of the largest fibers: `max_w (1/n) log #pi^-1[w]`, with the
/// same finite-horizon estimator as set entropies.
pub fn fiber_entropy_sup(code: &SlidingBlockCode, n_max: u32) -> Result<EntropyEstimate> {
    if n_max < 4 {
        return Err(Error::HorizonTooSmall { n_max, needed: 4 });
    }
    let counts = code.max_preimage_counts(n_max as usize)?;
    Ok(growth_from_counts(&counts, 0, n_max))
}

#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub source: EntropyEstimate,
    pub image: EntropyEstimate,
    pub fiber: EntropyEstimate,
    /// `census(pi E, w) <= census(E, w padded by the code window)` for all n.
    pub census_chain_holds: bool,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub defect: f64,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.census_chain_holds && self.lower_holds && self.upper_holds
    }
}

/// Checks `h(S, pi E) <= h(T, E) <= h(S, pi E) + sup fiber entropy` on the
/// estimates, with `slack` allowed on both inequalities.
pub fn sandwich_check(
    code: &Arc<SlidingBlockCode>,
    set: &SetRep,
    m: u32,
    n_max: u32,
    fiber_n_max: u32,
    slack: f64,
) -> Result<SandwichReport> {
    let image = code.apply_set(set)?;
    let mut chain = true;
    for n in 1..=n_max {
        let w = separation_window(n, m);
        let padded = WindowSpec::new(w.lo - code.memory as i64, w.hi + code.anticipation as i64);
        chain &= image.census(w)? <= set.census(padded)?;
    }
    let source = growth_estimate(set, m, n_max)?;
    let image_est = growth_estimate(&image, m, n_max)?;
    let fiber = fiber_entropy_sup(code, fiber_n_max)?;
    Ok(SandwichReport {
        lower_holds: image_est.value <= source.value + slack,
        upper_holds: source.value <= image_est.value + fiber.value + slack,
        defect: source.value - image_est.value,
        census_chain_holds: chain,
        source,
        image: image_est,
        fiber,
    })
}

#[derive(Debug, Clone)]
pub struct NaturalExtension {
    pub two_sided: Subshift,
    /// `(n, one-sided count, two-sided count)`.
    pub counts: Vec<(usize, BigUint, BigUint)>,
}

impl NaturalExtension {
    pub fn counts_agree(&self) -> bool {
        self.counts.iter().all(|(_, a, b)| a == b)
    }
}

/// The one-sided shift on the given forbidden words is surjective exactly
/// when every forward-extendable block has a forward-extendable predecessor;
/// its natural extension is then the two-sided shift on the same words.
pub fn natural_extension(one_sided: &Subshift, n_max: usize) -> Result<NaturalExtension> {
    let g = one_sided.graph();
    let alive = &g.forward_core;
    let mut has_pred = vec![false; g.states.len()];
    for u in 0..g.states.len() {
        if alive[u] {
            for &(_, t) in &g.edges[u] {
                if alive[t] {
                    has_pred[t] = true;
                }
            }
        }
    }
    if (0..g.states.len()).any(|u| alive[u] && !has_pred[u]) {
        return Err(Error::NotSurjective);
    }
    let counts = (1..=n_max)
        .map(|n| (n, one_sided.forward_language_count(n), one_sided.language_count(n)))
        .collect();
    Ok(NaturalExtension {
        two_sided: one_sided.clone(),
        counts,
    })
}

/// Fiber of the coordinate projection from the natural extension through a
/// point: everything left of coordinate 0 is free.
pub fn projection_fiber(ext: &NaturalExtension, point: &BiInfinitePoint) -> SetRep {
    SetRep::LeftFree(LeftFreeSet {
        ambient: ext.two_sided.clone(),
        point: point.clone(),
        from: 0,
    })
}

/// `X' = X x ({0} ∪ {1/(j+1)})` with the level collapsing by one each step and
/// `T` acting on level 1. Levels `i != j` sit at distance `2^-min(i, j)`.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub base: SetRep,
}

impl AugmentedSystem {
    /// `s_N(X') = sum_{n=1..N} s_n(X) + m * s_1(X)` at resolution `2^-m`.
    pub fn separated_count(&self, big_n: u32, m: u32) -> Result<BigUint> {
        let mut total = BigUint::zero();
        for n in 1..=big_n {
            total += self.base.census(separation_window(n, m))?;
        }
        total += self.base.census(separation_window(1, m))? * m;
        Ok(total)
    }

    pub fn entropy(&self, m: u32, n_max: u32) -> Result<EntropyEstimate> {
        let counts = (1..=n_max)
            .map(|n| self.separated_count(n, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(growth_from_counts(&counts, m, n_max))
    }
}
