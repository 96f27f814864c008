//! Bowen's dimensional entropy on cylinder trees, with covers drawn from the
//! refinements of the time-zero partition into 1-cylinders.
//!
//! A cylinder `[w]` at base 0 has `n([w])` equal to the number of leading
//! coordinates it pins down: `|w|` plus however many symbols the shift then
//! forces. The cover sum `m(K, lambda, k)` is the cheapest
//! `sum e^(-lambda n(E))` over covers of the tree by cylinders with
//! `n(E) >= k`, and the entropy is where that sum falls through 1.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::bigmath::ln_big;
use crate::entropy::growth_from_counts;
use crate::error::{Error, Result};
use crate::subset::{CylinderTree, SetRep};
use crate::subshift::{decode_block, encode_block, Subshift};
use crate::symbolic::{format_word, Symbol, Word};

/// Number of coordinates `0, 1, ...` on which `[w]` is a single symbol.
/// `None` when the shift forces every later symbol.
pub fn n_value(s: &Subshift, w: &[Symbol]) -> Result<Option<u64>> {
    if !s.in_language(w) {
        return Err(Error::Inadmissible(format_word(w)));
    }
    let block = s.graph().block;
    let mut v = w.to_vec();
    let mut seen = std::collections::BTreeSet::new();
    loop {
        let f = s.followers(&v);
        if f.len() != 1 {
            return Ok(Some(v.len() as u64));
        }
        if v.len() >= block {
            // What can follow depends only on the last `block` symbols.
            let tail = v[v.len() - block..].to_vec();
            if !seen.insert(tail) {
                return Ok(None);
            }
        }
        v.push(f[0]);
    }
}

#[derive(Debug, Clone)]
struct Node {
    depth: usize,
    n: Option<u64>,
    children: Vec<usize>,
}

/// Prefix trie of a base-0 cylinder tree with the `n` value of every node.
#[derive(Debug, Clone)]
pub struct CoverTrie {
    nodes: Vec<Node>,
    depth: usize,
    level_counts: Vec<usize>,
}

impl CoverTrie {
    pub fn new(tree: &CylinderTree) -> Result<Self> {
        if tree.base != 0 {
            return Err(Error::Unsupported(format!(
                "cover sums for a tree based at {}",
                tree.base
            )));
        }
        let mut index: BTreeMap<Word, usize> = BTreeMap::new();
        let mut nodes = vec![Node {
            depth: 0,
            n: n_value(&tree.ambient, &[])?,
            children: Vec::new(),
        }];
        index.insert(Vec::new(), 0);
        for w in &tree.words {
            let mut parent = 0;
            for d in 1..=w.len() {
                let prefix = &w[..d];
                parent = match index.get(prefix) {
                    Some(&i) => i,
                    None => {
                        let i = nodes.len();
                        nodes.push(Node {
                            depth: d,
                            n: n_value(&tree.ambient, prefix)?,
                            children: Vec::new(),
                        });
                        nodes[parent].children.push(i);
                        index.insert(prefix.to_vec(), i);
                        i
                    }
                };
            }
        }
        let mut level_counts = vec![0; tree.depth + 1];
        for node in &nodes {
            level_counts[node.depth] += 1;
        }
        Ok(CoverTrie {
            nodes,
            depth: tree.depth,
            level_counts,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of distinct prefixes of length `d`.
    pub fn level_count(&self, d: usize) -> usize {
        self.level_counts[d]
    }

    fn weight(&self, i: usize, lambda: f64) -> f64 {
        match self.nodes[i].n {
            Some(n) => (-lambda * n as f64).exp(),
            None if lambda == 0.0 => 1.0,
            None => 0.0,
        }
    }

    fn eligible(&self, i: usize, k: usize) -> bool {
        let node = &self.nodes[i];
        node.depth == self.depth || node.n.map_or(true, |n| n >= k as u64)
    }

    /// Cheapest cover sum, and for each node whether the optimum takes it
    /// whole rather than splitting it.
    fn solve(&self, lambda: f64, k: usize) -> (f64, Vec<bool>) {
        let mut best = vec![0.0; self.nodes.len()];
        let mut take = vec![false; self.nodes.len()];
        // Children always have larger indices than their parent.
        for i in (0..self.nodes.len()).rev() {
            let split: f64 = self.nodes[i].children.iter().map(|&c| best[c]).sum();
            let whole = self.weight(i, lambda);
            if self.nodes[i].children.is_empty() || (self.eligible(i, k) && whole <= split) {
                best[i] = whole;
                take[i] = true;
            } else {
                best[i] = split;
            }
        }
        (best[0], take)
    }

    pub fn m_value(&self, lambda: f64, k: usize) -> Result<f64> {
        if k == 0 || k > self.depth {
            return Err(Error::KExceedsDepth { k, depth: self.depth });
        }
        Ok(self.solve(lambda, k).0)
    }

    /// Number of cylinders per depth in an optimal cover.
    pub fn cut_profile(&self, lambda: f64, k: usize) -> Vec<usize> {
        let (_, take) = self.solve(lambda, k);
        let mut profile = vec![0; self.depth + 1];
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            if take[i] {
                profile[self.nodes[i].depth] += 1;
            } else {
                stack.extend(&self.nodes[i].children);
            }
        }
        profile
    }

    /// `min over d in [k, D] of log N_d / d`. The level-`d` cut costs at
    /// most `N_d e^(-lambda d)`, so the cover sum is below 1 past this point.
    pub fn cover_slope_floor(&self, k: usize) -> f64 {
        (k.max(1)..=self.depth)
            .map(|d| (self.level_counts[d] as f64).ln() / d as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn m_value(tree: &CylinderTree, lambda: f64, k: usize) -> Result<f64> {
    CoverTrie::new(tree)?.m_value(lambda, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KBracket {
    pub k: usize,
    pub lambda_low: f64,
    pub lambda_high: f64,
}

/// Bracket on the crossing of `m(K, lambda, k) = 1` for the depth-`D` tree.
///
/// This is the dimensional entropy of the outer approximation at depth `D`;
/// deeper trees of the same set can only lower it. The headline bracket uses
/// `k_floor = ceil(D/2)`, and `schedule` also lists `k = 1` and `k = D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimEntropyResult {
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub depth: usize,
    pub k_floor: usize,
    pub schedule: Vec<KBracket>,
    /// Cylinders per depth in an optimal cover at `lambda_high`.
    pub cut_trace: Option<Vec<usize>>,
}

fn bisect(trie: &CoverTrie, k: usize, tol: f64) -> KBracket {
    let mut lo = 0.0;
    let mut hi = trie.cover_slope_floor(k).max(0.0);
    if trie.solve(hi, k).0 >= 1.0 {
        return KBracket {
            k,
            lambda_low: hi,
            lambda_high: hi,
        };
    }
    // m(0, k) counts cylinders in a cover, so it is at least 1.
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if trie.solve(mid, k).0 >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    KBracket {
        k,
        lambda_low: lo,
        lambda_high: hi,
    }
}

pub fn hb_bisect(tree: &CylinderTree, tol: f64) -> Result<DimEntropyResult> {
    if !(tol > 0.0) {
        return Err(Error::Unsupported("bisection tolerance must be positive".into()));
    }
    let trie = CoverTrie::new(tree)?;
    Ok(hb_from_trie(&trie, tol))
}

fn hb_from_trie(trie: &CoverTrie, tol: f64) -> DimEntropyResult {
    let d = trie.depth;
    let k_floor = d.div_ceil(2).max(1);
    let mut ks = vec![1, k_floor, d];
    ks.dedup();
    let schedule: Vec<KBracket> = ks.iter().map(|&k| bisect(trie, k, tol)).collect();
    let head = schedule
        .iter()
        .find(|b| b.k == k_floor)
        .expect("k_floor is scheduled")
        .clone();
    DimEntropyResult {
        lambda_low: head.lambda_low,
        lambda_high: head.lambda_high,
        depth: d,
        k_floor,
        schedule,
        cut_trace: Some(trie.cut_profile(head.lambda_high, k_floor)),
    }
}

/// Dimensional entropy of any set representation. Countable sets get 0
/// exactly; everything else goes through its depth-`depth` outer tree.
pub fn dim_entropy(set: &SetRep, depth: usize, tol: f64, cap: usize) -> Result<DimEntropyResult> {
    match set {
        SetRep::Finite(_) | SetRep::Staged(_) | SetRep::EntropyPoints(_) => Ok(DimEntropyResult {
            lambda_low: 0.0,
            lambda_high: 0.0,
            depth,
            k_floor: depth.div_ceil(2).max(1),
            schedule: Vec::new(),
            cut_trace: None,
        }),
        SetRep::Tree(t) => hb_bisect(t, tol),
        _ => hb_bisect(&set.outer_tree(0, depth, cap)?, tol),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeReport {
    pub hb_high: f64,
    /// `min over n in [k_floor, D] of log N_n / n`.
    pub cover_slope: f64,
    /// `max over n in [k_floor, D] of log N_n / n` at the coarsest resolution.
    pub separated_slope: f64,
    pub holds: bool,
}

pub fn bridge_check(tree: &CylinderTree, tol: f64) -> Result<BridgeReport> {
    const SLACK: f64 = 1e-9;
    let trie = CoverTrie::new(tree)?;
    let hb = hb_from_trie(&trie, tol);
    let rates: Vec<f64> = (hb.k_floor..=trie.depth)
        .map(|n| (trie.level_count(n) as f64).ln() / n as f64)
        .collect();
    let cover_slope = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let separated_slope = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let holds = hb.lambda_high <= cover_slope + SLACK && cover_slope <= separated_slope + SLACK;
    Ok(BridgeReport {
        hb_high: hb.lambda_high,
        cover_slope,
        separated_slope,
        holds,
    })
}

/// The tree read in blocks of `m` symbols, inside the `m`-th power shift.
pub fn reblock(tree: &CylinderTree, m: usize) -> Result<CylinderTree> {
    if m == 0 || tree.depth % m != 0 {
        return Err(Error::DepthMismatch);
    }
    let k = tree.ambient.alphabet_size();
    let power = tree.ambient.power(m)?;
    let words = tree
        .words
        .iter()
        .map(|w| w.chunks(m).map(|b| encode_block(b, k) as Symbol).collect::<Word>());
    CylinderTree::new(power, tree.base / m as i64, tree.depth / m, words)
}

/// Inverse of [`reblock`] on words.
pub fn unblock(word: &[Symbol], k: usize, m: usize) -> Word {
    word.iter().flat_map(|&c| decode_block(c as usize, k, m)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawsReport {
    pub union_hb: f64,
    pub parts_max: f64,
    pub union_holds: bool,
    /// `(m, h^B of the re-blocked first part, m h^B of the first part)`.
    pub power: Option<(usize, f64, f64)>,
    pub power_holds: bool,
}

pub fn hb_laws_check(parts: &[CylinderTree], m: usize, tol: f64) -> Result<LawsReport> {
    let union = CylinderTree::union(parts)?;
    let union_hb = hb_bisect(&union, tol)?.lambda_high;
    let mut parts_max = f64::NEG_INFINITY;
    for p in parts {
        parts_max = parts_max.max(hb_bisect(p, tol)?.lambda_high);
    }
    let union_holds = (union_hb - parts_max).abs() <= 2.0 * tol;
    let (power, power_holds) = if m > 1 {
        let base = hb_bisect(&parts[0], tol)?.lambda_high;
        let blocked = hb_bisect(&reblock(&parts[0], m)?, tol)?.lambda_high;
        let ok = (blocked - m as f64 * base).abs() <= m as f64 * 2.0 * tol;
        (Some((m, blocked, m as f64 * base)), ok)
    } else {
        (None, true)
    };
    Ok(LawsReport {
        union_hb,
        parts_max,
        union_holds,
        power,
        power_holds,
    })
}

/// Bernoulli or stationary Markov measure on a full or one-step shift.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductMeasure {
    Bernoulli(Vec<f64>),
    Markov {
        matrix: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
}

impl ProductMeasure {
    pub fn bernoulli(p: Vec<f64>) -> Result<Self> {
        check_distribution(&p, "probability vector")?;
        Ok(ProductMeasure::Bernoulli(p))
    }

    pub fn markov(matrix: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        check_distribution(&stationary, "stationary vector")?;
        if matrix.len() != stationary.len() {
            return Err(Error::InvalidMeasure("matrix and vector sizes differ".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != stationary.len() {
                return Err(Error::InvalidMeasure(format!("row {i} has the wrong length")));
            }
            check_distribution(row, &format!("row {i}"))?;
        }
        for j in 0..stationary.len() {
            let v: f64 = (0..stationary.len()).map(|i| stationary[i] * matrix[i][j]).sum();
            if (v - stationary[j]).abs() > 1e-10 {
                return Err(Error::InvalidMeasure(format!("vector is not stationary at {j}")));
            }
        }
        Ok(ProductMeasure::Markov { matrix, stationary })
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            ProductMeasure::Bernoulli(p) => p.len(),
            ProductMeasure::Markov { stationary, .. } => stationary.len(),
        }
    }

    /// Mass of the cylinder `[w]` at any base.
    pub fn cylinder(&self, w: &[Symbol]) -> f64 {
        match self {
            ProductMeasure::Bernoulli(p) => w.iter().map(|&a| p[a as usize]).product(),
            ProductMeasure::Markov { matrix, stationary } => match w.first() {
                None => 1.0,
                Some(&a) => {
                    stationary[a as usize]
                        * w.windows(2)
                            .map(|ab| matrix[ab[0] as usize][ab[1] as usize])
                            .product::<f64>()
                }
            },
        }
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidMeasure(format!("{what} has a negative or missing entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMeasure(format!("{what} sums to {sum}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformMdpReport {
    /// A tree prefix whose mass falls below `c e^(-n d)`.
    pub witness: Option<Word>,
    pub growth: Option<f64>,
    pub conclusion: Option<bool>,
}

/// Mass bounded below along the tree forces `N_n <= e^(n d) / c` at every
/// level, hence growth at most `d`.
pub fn verify_uniform_mdp(theta: &ProductMeasure, tree: &CylinderTree, c: f64, d: f64) -> Result<UniformMdpReport> {
    if !(c > 0.0 && d > 0.0) {
        return Err(Error::InvalidMeasure("c and d must be positive".into()));
    }
    if theta.alphabet_size() != tree.ambient.alphabet_size() {
        return Err(Error::AlphabetMismatch("measure and tree alphabets differ".into()));
    }
    for n in 1..=tree.depth {
        for w in tree.level(n) {
            if theta.cylinder(w) < c * (-(n as f64) * d).exp() * (1.0 - 1e-12) {
                return Ok(UniformMdpReport {
                    witness: Some(w.to_vec()),
                    growth: None,
                    conclusion: None,
                });
            }
        }
    }
    let counts: Vec<BigUint> = (1..=tree.depth).map(|n| BigUint::from(tree.level(n).len())).collect();
    let counts_bounded = counts
        .iter()
        .enumerate()
        .all(|(i, s)| ln_big(s) <= (i + 1) as f64 * d - c.ln() + 1e-9);
    let est = growth_from_counts(&counts, 1, tree.depth as u32);
    let start = (tree.depth as u32).div_ceil(2).max(2) as f64;
    let conclusion = counts_bounded && est.value <= d + (-c.ln()).max(0.0) / start + 1e-9;
    Ok(UniformMdpReport {
        witness: None,
        growth: Some(est.value),
        conclusion: Some(conclusion),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonUniformMdpReport {
    /// Smallest `c` with `theta(w) <= c e^(-|w| d)` for every tree prefix.
    pub c: f64,
    /// Set when `c > e^(d D / 2)`, where the bound says little at depth `D`.
    pub vacuous: bool,
    /// Total mass of the tree's cylinders.
    pub mass: f64,
    pub hb: DimEntropyResult,
    pub conclusion: bool,
}

pub fn verify_nonuniform_mdp(
    theta: &ProductMeasure,
    tree: &CylinderTree,
    d: f64,
    tol: f64,
) -> Result<NonUniformMdpReport> {
    if !(d > 0.0) {
        return Err(Error::InvalidMeasure("d must be positive".into()));
    }
    if theta.alphabet_size() != tree.ambient.alphabet_size() {
        return Err(Error::AlphabetMismatch("measure and tree alphabets differ".into()));
    }
    let mass: f64 = tree.words.iter().map(|w| theta.cylinder(w)).sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut c: f64 = 0.0;
    for n in 1..=tree.depth {
        for w in tree.level(n) {
            c = c.max(theta.cylinder(w) * (n as f64 * d).exp());
        }
    }
    let hb = hb_bisect(tree, tol)?;
    let vacuous = c > (d * tree.depth as f64 / 2.0).exp();
    let conclusion = hb.lambda_high >= d - tol;
    Ok(NonUniformMdpReport {
        c,
        vacuous,
        mass,
        hb,
        conclusion,
    })
}

/// Words of length `depth` whose frequency of the symbol 1 is within `eta`
/// of `p`.
pub fn typical_tree(p: f64, depth: usize, eta: f64) -> Result<CylinderTree> {
    if depth > 24 {
        return Err(Error::TooLarge(format!("typical words of length {depth}")));
    }
    let words = (0..1usize << depth).filter_map(|c| {
        let ones = c.count_ones() as f64 / depth as f64;
        ((ones - p).abs() <= eta).then(|| decode_block(c, 2, depth))
    });
    CylinderTree::new(Subshift::full(2), 0, depth, words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full_tree(k: usize, depth: usize) -> CylinderTree {
        let s = Subshift::full(k);
        let words = s.language_words(depth, 1 << 20).unwrap();
        CylinderTree::new(s, 0, depth, words).unwrap()
    }

    /// Cheapest cover found by letting each leaf pick the ancestor that
    /// covers it, and paying once per distinct ancestor.
    fn families_oracle(tree: &CylinderTree, lambda: f64, k: usize) -> f64 {
        let leaves: Vec<&Word> = tree.words.iter().collect();
        let options: Vec<Vec<(usize, f64)>> = leaves
            .iter()
            .map(|w| {
                (1..=tree.depth)
                    .filter_map(|d| {
                        let n = n_value(&tree.ambient, &w[..d]).unwrap();
                        let ok = d == tree.depth || n.map_or(true, |n| n >= k as u64);
                        let weight = match n {
                            Some(n) => (-lambda * n as f64).exp(),
                            None => 0.0,
                        };
                        ok.then_some((d, weight))
                    })
                    .collect()
            })
            .collect();
        let mut best = f64::INFINITY;
        let mut pick = vec![0usize; leaves.len()];
        loop {
            let mut chosen: BTreeMap<&[Symbol], f64> = BTreeMap::new();
            for (i, &j) in pick.iter().enumerate() {
                let (d, w) = options[i][j];
                chosen.insert(&leaves[i][..d], w);
            }
            best = best.min(chosen.values().sum());
            let mut i = 0;
            loop {
                if i == pick.len() {
                    return best;
                }
                pick[i] += 1;
                if pick[i] < options[i].len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
        }
    }

    fn tree_from_codes(s: &Subshift, depth: usize, codes: &[u32]) -> Option<CylinderTree> {
        let k = s.alphabet_size();
        let words: Vec<Word> = codes
            .iter()
            .map(|&c| decode_block(c as usize % k.pow(depth as u32), k, depth))
            .filter(|w| s.in_language(w))
            .collect();
        CylinderTree::new(s.clone(), 0, depth, words).ok()
    }

    #[test]
    fn n_values() {
        assert_eq!(n_value(&Subshift::full(2), &[0, 1, 0]).unwrap(), Some(3));
        assert_eq!(n_value(&Subshift::full(3), &[2, 2]).unwrap(), Some(2));
        // 2 must be followed by 0.
        let s = Subshift::new(3, [vec![2, 1], vec![2, 2]]).unwrap();
        assert_eq!(n_value(&s, &[2]).unwrap(), Some(2));
        assert_eq!(n_value(&s, &[0, 2]).unwrap(), Some(3));
        assert_eq!(n_value(&s, &[]).unwrap(), Some(0));
        // A single periodic orbit pins everything.
        let p = Subshift::new(2, [vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(n_value(&p, &[0]).unwrap(), None);
        assert!(n_value(&Subshift::golden_mean(), &[1, 1]).is_err());
    }

    #[test]
    fn full_tree_cover_sums_are_one_at_log_k() {
        let t = full_tree(2, 10);
        for k in 1..=10 {
            let v = m_value(&t, 2f64.ln(), k).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "k = {k}: {v}");
        }
        let v = m_value(&t, 2f64.ln() + 0.1, 10).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        assert!(matches!(m_value(&t, 1.0, 11), Err(Error::KExceedsDepth { .. })));
    }

    #[test]
    fn single_branch() {
        let t = CylinderTree::new(Subshift::full(2), 0, 8, [vec![0, 1, 1, 0, 1, 0, 0, 1]]).unwrap();
        let v = m_value(&t, 0.3, 1).unwrap();
        assert!((v - (-0.3f64 * 8.0).exp()).abs() < 1e-15);
        let r = hb_bisect(&t, 1e-6).unwrap();
        assert_eq!((r.lambda_low, r.lambda_high), (0.0, 0.0));
    }

    #[test]
    fn bisection_on_known_trees() {
        let r = hb_bisect(&full_tree(2, 16), 1e-6).unwrap();
        assert!(r.lambda_low <= 2f64.ln() && 2f64.ln() <= r.lambda_high + 1e-12);
        assert!(r.lambda_high - r.lambda_low <= 1e-6);

        let gm = Subshift::golden_mean();
        let words = gm.language_words(16, 1 << 16).unwrap();
        let t = CylinderTree::new(gm, 0, 16, words).unwrap();
        let r = hb_bisect(&t, 1e-6).unwrap();
        // The depth-16 outer tree sits a little above log of the golden ratio.
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(r.lambda_high >= phi.ln() - 1e-6, "{r:?}");
        assert!(r.lambda_high <= phi.ln() + 0.05, "{r:?}");
    }

    #[test]
    fn bridge_on_full_tree() {
        let b = bridge_check(&full_tree(2, 12), 1e-7).unwrap();
        assert!(b.holds);
        for v in [b.hb_high, b.cover_slope, b.separated_slope] {
            assert!((v - 2f64.ln()).abs() < 1e-6);
        }
    }

    #[test]
    fn power_law_on_full_trees() {
        for (k, m) in [(2, 2), (2, 3), (3, 2)] {
            let r = hb_laws_check(&[full_tree(k, 12)], m, 1e-7).unwrap();
            assert!(r.power_holds, "{r:?}");
        }
        let t = full_tree(2, 6);
        let b = reblock(&t, 3).unwrap();
        for w in &b.words {
            assert!(t.words.contains(&unblock(w, 2, 3)));
        }
    }

    #[test]
    fn half_trees_show_the_finite_depth_union_gap() {
        let t = full_tree(2, 12);
        let (a, b): (Vec<Word>, Vec<Word>) = t.words.iter().cloned().partition(|w| w[0] == 0);
        let s = Subshift::full(2);
        let parts = [
            CylinderTree::new(s.clone(), 0, 12, a).unwrap(),
            CylinderTree::new(s, 0, 12, b).unwrap(),
        ];
        let r = hb_laws_check(&parts, 1, 1e-8).unwrap();
        // Each half crosses at (1 - 1/k) log 2 with k = 6.
        assert!((r.parts_max - 2f64.ln() * 5.0 / 6.0).abs() < 1e-7, "{r:?}");
        assert!((r.union_hb - 2f64.ln()).abs() < 1e-7);
    }

    #[test]
    fn measures_validate() {
        assert!(ProductMeasure::bernoulli(vec![0.3, 0.7]).is_ok());
        assert!(ProductMeasure::bernoulli(vec![0.3, 0.6]).is_err());
        let p = vec![vec![0.5, 0.5], vec![1.0, 0.0]];
        let m = ProductMeasure::markov(p.clone(), vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((m.cylinder(&[0, 1, 0]) - 2.0 / 3.0 * 0.5).abs() < 1e-15);
        assert!(ProductMeasure::markov(p, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn uniform_mdp_examples() {
        let half = ProductMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let r = verify_uniform_mdp(&half, &full_tree(2, 10), 1.0, 2f64.ln()).unwrap();
        assert_eq!(r.conclusion, Some(true));

        let skew = ProductMeasure::bernoulli(vec![0.3, 0.7]).unwrap();
        let ones = CylinderTree::new(Subshift::full(2), 0, 10, [vec![1; 10]]).unwrap();
        let r = verify_uniform_mdp(&skew, &ones, 1.0, 0.36).unwrap();
        assert_eq!((r.witness, r.growth, r.conclusion), (None, Some(0.0), Some(true)));
        let zeros = CylinderTree::new(Subshift::full(2), 0, 10, [vec![0; 10]]).unwrap();
        let r = verify_uniform_mdp(&skew, &zeros, 1.0, 0.36).unwrap();
        assert_eq!(r.witness, Some(vec![0]));
    }

    #[test]
    fn nonuniform_mdp_examples() {
        let half = ProductMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let r = verify_nonuniform_mdp(&half, &full_tree(2, 10), 2f64.ln(), 1e-6).unwrap();
        assert!((r.c - 1.0).abs() < 1e-9 && r.conclusion && !r.vacuous);

        let branch = CylinderTree::new(Subshift::full(2), 0, 10, [vec![0; 10]]).unwrap();
        let r = verify_nonuniform_mdp(&half, &branch, 0.1, 1e-6).unwrap();
        assert!(!r.conclusion);
        assert_eq!(r.hb.lambda_high, 0.0);
    }

    #[test]
    fn typical_tree_counts() {
        let t = typical_tree(0.3, 16, 0.05).unwrap();
        // Four or five ones among sixteen.
        assert_eq!(t.words.len(), 1820 + 4368);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dp_matches_families_oracle(
            depth in 2usize..=8,
            codes in proptest::collection::vec(any::<u32>(), 1..5),
            lambda in 0.0f64..1.5,
            shift in 0usize..3,
        ) {
            let s = match shift {
                0 => Subshift::full(2),
                1 => Subshift::golden_mean(),
                _ => Subshift::new(3, [vec![2, 1], vec![2, 2]]).unwrap(),
            };
            if let Some(t) = tree_from_codes(&s, depth, &codes) {
                for k in 1..=depth {
                    let dp = m_value(&t, lambda, k).unwrap();
                    let oracle = families_oracle(&t, lambda, k);
                    prop_assert!((dp - oracle).abs() <= 1e-12 * oracle.max(1.0), "k={} {} vs {}", k, dp, oracle);
                }
            }
        }

        #[test]
        fn cover_sum_monotone(
            depth in 2usize..=10,
            codes in proptest::collection::vec(any::<u32>(), 1..40),
            lambda in 0.0f64..1.5,
            dl in 0.0f64..0.5,
        ) {
            let t = tree_from_codes(&Subshift::full(2), depth, &codes).unwrap();
            let trie = CoverTrie::new(&t).unwrap();
            for k in 1..=depth {
                let v = trie.m_value(lambda, k).unwrap();
                prop_assert!(trie.m_value(lambda + dl, k).unwrap() <= v + 1e-12);
                if k < depth {
                    // Fewer admissible covers as k grows.
                    prop_assert!(trie.m_value(lambda, k + 1).unwrap() >= v - 1e-12);
                }
            }
        }

        #[test]
        fn bridge_chain_on_random_trees(
            depth in 2usize..=12,
            codes in proptest::collection::vec(any::<u32>(), 1..60),
        ) {
            let t = tree_from_codes(&Subshift::full(2), depth, &codes).unwrap();
            prop_assert!(bridge_check(&t, 1e-7).unwrap().holds);
        }
    }
}
