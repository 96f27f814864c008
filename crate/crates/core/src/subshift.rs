//! Shifts of finite type given by forbidden words.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::symbolic::{check_symbols, format_word, BiInfinitePoint, Symbol, Word};

const MAX_STATES: usize = 1 << 20;

/// The block graph of a subshift. States are admissible words of length
/// `block`; an edge appends one symbol and drops the first.
#[derive(Debug)]
pub struct LanguageGraph {
    pub block: usize,
    pub states: Vec<Word>,
    pub edges: Vec<Vec<(Symbol, usize)>>,
    /// States lying on a bi-infinite path.
    pub core: Vec<bool>,
    /// States with an infinite forward path.
    pub forward_core: Vec<bool>,
    index: HashMap<Word, usize>,
}

impl LanguageGraph {
    fn build(k: usize, forbidden: &BTreeSet<Word>) -> Result<Self> {
        let longest = forbidden.iter().map(Vec::len).max().unwrap_or(0);
        let block = longest.saturating_sub(1).max(1);
        let total = (k as f64).powi(block as i32);
        if total > MAX_STATES as f64 {
            return Err(Error::TooLarge(format!("{k}^{block} block states")));
        }
        let has_forbidden_suffix = |w: &[Symbol]| (1..=w.len()).any(|len| forbidden.contains(&w[w.len() - len..]));

        // Admissible words of length `block`, grown symbol by symbol.
        let mut states: Vec<Word> = vec![Vec::new()];
        for _ in 0..block {
            let mut next = Vec::new();
            for w in &states {
                for s in 0..k as Symbol {
                    let mut v = w.clone();
                    v.push(s);
                    if !has_forbidden_suffix(&v) {
                        next.push(v);
                    }
                }
            }
            states = next;
        }
        let index: HashMap<Word, usize> = states.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let edges: Vec<Vec<(Symbol, usize)>> = states
            .iter()
            .map(|u| {
                (0..k as Symbol)
                    .filter_map(|s| {
                        let mut v = u.clone();
                        v.push(s);
                        if has_forbidden_suffix(&v) {
                            return None;
                        }
                        index.get(&v[1..]).map(|&t| (s, t))
                    })
                    .collect()
            })
            .collect();

        let n = states.len();
        let trim = |need_pred: bool| {
            let mut alive = vec![true; n];
            loop {
                let mut indeg = vec![0usize; n];
                let mut outdeg = vec![0usize; n];
                for u in 0..n {
                    if !alive[u] {
                        continue;
                    }
                    for &(_, t) in &edges[u] {
                        if alive[t] {
                            outdeg[u] += 1;
                            indeg[t] += 1;
                        }
                    }
                }
                let mut changed = false;
                for u in 0..n {
                    if alive[u] && (outdeg[u] == 0 || (need_pred && indeg[u] == 0)) {
                        alive[u] = false;
                        changed = true;
                    }
                }
                if !changed {
                    return alive;
                }
            }
        };
        let core = trim(true);
        let forward_core = trim(false);
        Ok(LanguageGraph {
            block,
            states,
            edges,
            core,
            forward_core,
            index,
        })
    }

    pub fn state_index(&self, w: &[Symbol]) -> Option<usize> {
        self.index.get(w).copied()
    }

    fn count_paths(&self, alive: &[bool], n: usize) -> BigUint {
        if n < self.block {
            let prefixes: BTreeSet<&[Symbol]> = (0..self.states.len())
                .filter(|&u| alive[u])
                .map(|u| &self.states[u][..n])
                .collect();
            return BigUint::from(prefixes.len());
        }
        let mut v: Vec<BigUint> = alive
            .iter()
            .map(|&a| if a { BigUint::one() } else { BigUint::zero() })
            .collect();
        for _ in 0..n - self.block {
            let mut next = vec![BigUint::zero(); v.len()];
            for u in 0..v.len() {
                if !alive[u] || v[u].is_zero() {
                    continue;
                }
                for &(_, t) in &self.edges[u] {
                    if alive[t] {
                        next[t] += &v[u];
                    }
                }
            }
            v = next;
        }
        v.into_iter().sum()
    }
}

/// Adjacency of a one-step shift restricted to its essential symbols.
#[derive(Debug, Clone)]
pub struct StepGraph {
    pub k: usize,
    pub alive: Vec<bool>,
    pub adj: Vec<Vec<bool>>,
}

impl StepGraph {
    pub fn successors(&self, a: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        let row = &self.adj[a as usize];
        (0..self.k as Symbol).filter(move |&b| row[b as usize])
    }

    pub fn allowed(&self, a: Symbol, b: Symbol) -> bool {
        self.adj[a as usize][b as usize]
    }

    /// `W[j][a]`: number of words of length `j` that may follow symbol `a`.
    pub fn walk_table(&self, len: usize) -> Vec<Vec<BigUint>> {
        let mut table = Vec::with_capacity(len + 1);
        table.push(
            self.alive
                .iter()
                .map(|&a| if a { BigUint::one() } else { BigUint::zero() })
                .collect::<Vec<_>>(),
        );
        for j in 1..=len {
            let prev: &Vec<BigUint> = &table[j - 1];
            let row = (0..self.k)
                .map(|a| {
                    let mut s = BigUint::zero();
                    if self.alive[a] {
                        for b in 0..self.k {
                            if self.adj[a][b] {
                                s += &prev[b];
                            }
                        }
                    }
                    s
                })
                .collect();
            table.push(row);
        }
        table
    }

    /// Number of words of length `len` that may follow `a`.
    pub fn walks_from(&self, a: Symbol, len: usize) -> BigUint {
        let mut v: Vec<BigUint> = self
            .alive
            .iter()
            .map(|&x| if x { BigUint::one() } else { BigUint::zero() })
            .collect();
        for _ in 0..len {
            v = self.step_forward(&v);
        }
        v.swap_remove(a as usize)
    }

    pub fn step_forward(&self, v: &[BigUint]) -> Vec<BigUint> {
        (0..self.k)
            .map(|a| {
                let mut s = BigUint::zero();
                for b in 0..self.k {
                    if self.adj[a][b] {
                        s += &v[b];
                    }
                }
                s
            })
            .collect()
    }

    /// Number of words of length `len` that may precede `b`.
    pub fn walks_into(&self, b: Symbol, len: usize) -> BigUint {
        let mut v: Vec<BigUint> = self
            .alive
            .iter()
            .map(|&x| if x { BigUint::one() } else { BigUint::zero() })
            .collect();
        for _ in 0..len {
            v = (0..self.k)
                .map(|t| {
                    let mut s = BigUint::zero();
                    for a in 0..self.k {
                        if self.adj[a][t] {
                            s += &v[a];
                        }
                    }
                    s
                })
                .collect();
        }
        v.swap_remove(b as usize)
    }

    /// Lexicographically least path `a = p_0 -> p_1 -> ... -> p_t` with
    /// `p_t -> target` allowed, of the least possible length `t >= 0`.
    /// Returns the intermediate symbols `p_1..=p_t`.
    pub fn connector(&self, a: Symbol, target: Symbol) -> Option<Word> {
        let k = self.k;
        // reach[t] = symbols from which `target` follows after exactly t more steps.
        let mut reach: Vec<Vec<bool>> = vec![(0..k).map(|s| self.adj[s][target as usize]).collect()];
        for t in 0..=k {
            if reach[t][a as usize] {
                let mut path = Vec::with_capacity(t);
                let mut cur = a;
                for step in (0..t).rev() {
                    let next = (0..k as Symbol)
                        .find(|&b| self.adj[cur as usize][b as usize] && reach[step][b as usize])
                        .expect("reachability table is consistent");
                    path.push(next);
                    cur = next;
                }
                return Some(path);
            }
            let prev = &reach[t];
            let next: Vec<bool> = (0..k).map(|s| (0..k).any(|b| self.adj[s][b] && prev[b])).collect();
            reach.push(next);
        }
        None
    }
}

/// A two-sided shift of finite type.
#[derive(Debug, Clone)]
pub struct Subshift {
    k: usize,
    forbidden: BTreeSet<Word>,
    graph: Arc<LanguageGraph>,
}

impl PartialEq for Subshift {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.forbidden == other.forbidden
    }
}

impl Subshift {
    pub fn new(k: usize, forbidden: impl IntoIterator<Item = Word>) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if k > 256 {
            return Err(Error::TooLarge(format!("alphabet of {k} symbols")));
        }
        let forbidden: BTreeSet<Word> = forbidden.into_iter().collect();
        for w in &forbidden {
            if w.is_empty() {
                return Err(Error::MalformedWord("empty forbidden word".into()));
            }
            check_symbols(w, k)?;
        }
        let graph = Arc::new(LanguageGraph::build(k, &forbidden)?);
        if !graph.core.iter().any(|&c| c) {
            return Err(Error::EmptySubshift);
        }
        Ok(Subshift { k, forbidden, graph })
    }

    pub fn full(k: usize) -> Self {
        Subshift::new(k, []).expect("full shifts are valid")
    }

    pub fn golden_mean() -> Self {
        Subshift::new(2, [vec![1, 1]]).expect("golden mean shift is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn forbidden(&self) -> &BTreeSet<Word> {
        &self.forbidden
    }

    pub fn graph(&self) -> &LanguageGraph {
        &self.graph
    }

    pub fn is_full(&self) -> bool {
        self.graph.core.iter().all(|&c| c) && self.graph.block == 1 && self.forbidden.is_empty()
    }

    pub fn is_one_step(&self) -> bool {
        self.forbidden.iter().all(|w| w.len() <= 2)
    }

    /// No forbidden word occurs as a factor.
    pub fn is_admissible(&self, w: &[Symbol]) -> bool {
        if w.iter().any(|&s| s as usize >= self.k) {
            return false;
        }
        self.forbidden
            .iter()
            .all(|f| f.len() > w.len() || !w.windows(f.len()).any(|x| x == &f[..]))
    }

    /// The word occurs in some point of the subshift.
    pub fn in_language(&self, w: &[Symbol]) -> bool {
        if !self.is_admissible(w) {
            return false;
        }
        let g = &self.graph;
        if w.len() < g.block {
            return (0..g.states.len()).any(|u| g.core[u] && g.states[u].starts_with(w));
        }
        w.windows(g.block).all(|b| g.state_index(b).is_some_and(|u| g.core[u]))
    }

    /// The point lies in the subshift.
    pub fn contains(&self, x: &BiInfinitePoint) -> bool {
        let pad = self.forbidden.iter().map(Vec::len).max().unwrap_or(1);
        self.is_admissible(&x.window_of(x.description_window(pad)))
    }

    pub fn language_count(&self, n: usize) -> BigUint {
        self.graph.count_paths(&self.graph.core, n)
    }

    /// Words of length `n` that extend to the right forever, as used for the
    /// one-sided shift on the same forbidden words.
    pub fn forward_language_count(&self, n: usize) -> BigUint {
        self.graph.count_paths(&self.graph.forward_core, n)
    }

    /// All words of length `n` in the language, in lexicographic order.
    pub fn language_words(&self, n: usize, cap: usize) -> Result<Vec<Word>> {
        let mut out = Vec::new();
        let mut stack: Vec<Word> = vec![Vec::new()];
        // Depth-first in reverse so that output is sorted.
        while let Some(w) = stack.pop() {
            if w.len() == n {
                out.push(w);
                if out.len() > cap {
                    return Err(Error::TooLarge(format!("more than {cap} words of length {n}")));
                }
                continue;
            }
            for s in (0..self.k as Symbol).rev() {
                let mut v = w.clone();
                v.push(s);
                if self.extends(&v) {
                    stack.push(v);
                }
            }
        }
        Ok(out)
    }

    /// Prefix test used while enumerating: the word is a factor of the
    /// language (possibly shorter than a block).
    fn extends(&self, w: &[Symbol]) -> bool {
        self.in_language(w)
    }

    /// Symbols `a` such that `w a` is in the language.
    pub fn followers(&self, w: &[Symbol]) -> Vec<Symbol> {
        (0..self.k as Symbol)
            .filter(|&a| {
                let mut v = w.to_vec();
                v.push(a);
                self.in_language(&v)
            })
            .collect()
    }

    pub fn step_graph(&self) -> Result<StepGraph> {
        if !self.is_one_step() {
            return Err(Error::NotOneStep);
        }
        let k = self.k;
        let g = &self.graph;
        let mut alive = vec![false; k];
        let mut adj = vec![vec![false; k]; k];
        for u in 0..g.states.len() {
            if !g.core[u] {
                continue;
            }
            let a = *g.states[u].last().unwrap();
            alive[a as usize] = true;
            for &(b, t) in &g.edges[u] {
                if g.core[t] {
                    adj[a as usize][b as usize] = true;
                }
            }
        }
        Ok(StepGraph { k, alive, adj })
    }

    /// 0/1 transition matrix over the essential symbols of a one-step shift.
    pub fn transition_matrix(&self) -> Result<Vec<Vec<u8>>> {
        let sg = self.step_graph()?;
        Ok(sg.adj.iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect())
    }

    fn core_adjacency(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let g = &self.graph;
        let ids: Vec<usize> = (0..g.states.len()).filter(|&u| g.core[u]).collect();
        let pos: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let succ = ids
            .iter()
            .map(|&u| g.edges[u].iter().filter_map(|&(_, t)| pos.get(&t).copied()).collect())
            .collect();
        (ids, succ)
    }

    /// Irreducible and aperiodic on its essential part.
    pub fn is_mixing(&self) -> bool {
        let (ids, succ) = self.core_adjacency();
        let n = ids.len();
        let mut pred = vec![Vec::new(); n];
        for (u, s) in succ.iter().enumerate() {
            for &t in s {
                pred[t].push(u);
            }
        }
        let bfs = |adj: &Vec<Vec<usize>>| {
            let mut level = vec![usize::MAX; n];
            level[0] = 0;
            let mut queue = std::collections::VecDeque::from([0usize]);
            while let Some(u) = queue.pop_front() {
                for &t in &adj[u] {
                    if level[t] == usize::MAX {
                        level[t] = level[u] + 1;
                        queue.push_back(t);
                    }
                }
            }
            level
        };
        let fwd = bfs(&succ);
        let bwd = bfs(&pred);
        if fwd.iter().chain(&bwd).any(|&l| l == usize::MAX) {
            return false;
        }
        let mut period = 0usize;
        for (u, s) in succ.iter().enumerate() {
            for &t in s {
                let d = (fwd[u] as i64 + 1 - fwd[t] as i64).unsigned_abs() as usize;
                period = num_integer::gcd(period, d);
            }
        }
        period == 1
    }

    /// One-step recoding on the alphabet of essential block states, with the
    /// block words in the same order as the new symbols.
    pub fn higher_block(&self) -> Result<(Subshift, Vec<Word>)> {
        let (ids, succ) = self.core_adjacency();
        let n = ids.len();
        let mut forbidden = Vec::new();
        for u in 0..n {
            for t in 0..n {
                if !succ[u].contains(&t) {
                    forbidden.push(vec![u as Symbol, t as Symbol]);
                }
            }
        }
        if n > 256 {
            return Err(Error::TooLarge(format!("{n} block states")));
        }
        let words = ids.iter().map(|&u| self.graph.states[u].clone()).collect();
        Ok((Subshift::new(n, forbidden)?, words))
    }

    /// Presentation of `T^m` on blocks of length `m`: symbol `c` stands for
    /// the base-`k` digits of `c`, most significant first.
    pub fn power(&self, m: usize) -> Result<Subshift> {
        if m == 0 {
            return Err(Error::InvalidResolution);
        }
        let longest = self.forbidden.iter().map(Vec::len).max().unwrap_or(0);
        if longest > m + 1 {
            return Err(Error::Unsupported(format!(
                "power {m} of a shift with forbidden words of length {longest}"
            )));
        }
        let size = (self.k as f64).powi(m as i32);
        if size > 256.0 {
            return Err(Error::TooLarge(format!("alphabet of {size} blocks")));
        }
        let size = size as usize;
        let blocks: Vec<Word> = (0..size).map(|c| decode_block(c, self.k, m)).collect();
        let mut forbidden = Vec::new();
        for (a, u) in blocks.iter().enumerate() {
            if !self.in_language(u) {
                forbidden.push(vec![a as Symbol]);
                continue;
            }
            for (b, v) in blocks.iter().enumerate() {
                let mut uv = u.clone();
                uv.extend(v);
                if self.in_language(v) && !self.in_language(&uv) {
                    forbidden.push(vec![a as Symbol, b as Symbol]);
                }
            }
        }
        Subshift::new(size, forbidden)
    }

    pub fn describe(&self) -> String {
        let f: Vec<String> = self.forbidden.iter().map(|w| format_word(w)).collect();
        format!("{}-shift forbidding {{{}}}", self.k, f.join(","))
    }

    /// Lexicographically least periodic point of least period.
    pub fn simplest_periodic_point(&self) -> BiInfinitePoint {
        for p in 1..=self.graph.states.len().max(1) * self.graph.block + 1 {
            let words = match self.language_words(p, 1 << 16) {
                Ok(w) => w,
                Err(_) => break,
            };
            for w in words {
                let mut ww = w.clone();
                ww.extend(&w);
                ww.extend(&w);
                let x = BiInfinitePoint::periodic(w).expect("non-empty");
                if self.in_language(&ww) && self.contains(&x) {
                    return x;
                }
            }
        }
        unreachable!("a non-empty shift of finite type has a periodic point")
    }
}

/// Digits of `c` in base `k`, most significant first, padded to length `m`.
pub fn decode_block(mut c: usize, k: usize, m: usize) -> Word {
    let mut w = vec![0; m];
    for i in (0..m).rev() {
        w[i] = (c % k) as Symbol;
        c /= k;
    }
    w
}

pub fn encode_block(w: &[Symbol], k: usize) -> usize {
    w.iter().fold(0, |acc, &s| acc * k + s as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib(n: usize) -> u64 {
        let (mut a, mut b) = (0u64, 1u64);
        for _ in 0..n {
            (a, b) = (b, a + b);
        }
        a
    }

    #[test]
    fn golden_mean_counts_are_fibonacci() {
        let g = Subshift::golden_mean();
        for n in 1..30 {
            assert_eq!(g.language_count(n), BigUint::from(fib(n + 2)), "n = {n}");
        }
        assert!(g.is_mixing());
        assert_eq!(g.transition_matrix().unwrap(), vec![vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn brute_force_language_matches_counts() {
        // Words of length n that sit inside some admissible word of length n + 8
        // at offset 4; for these shifts that is the language.
        let shifts = [
            Subshift::new(2, [vec![1, 1, 1], vec![0, 1, 0]]).unwrap(),
            Subshift::new(3, [vec![2, 2], vec![0, 1], vec![1, 2, 0]]).unwrap(),
            Subshift::new(2, [vec![1, 0, 1]]).unwrap(),
        ];
        for s in &shifts {
            for n in 1..7usize {
                let big = n + 8;
                let mut seen = BTreeSet::new();
                for code in 0..s.alphabet_size().pow(big as u32) {
                    let w = decode_block(code, s.alphabet_size(), big);
                    if s.is_admissible(&w) {
                        seen.insert(w[4..4 + n].to_vec());
                    }
                }
                assert_eq!(s.language_count(n), BigUint::from(seen.len()), "{} n={n}", s.describe());
                assert_eq!(s.language_words(n, 1 << 20).unwrap().len(), seen.len());
            }
        }
    }

    #[test]
    fn inessential_symbols_are_trimmed() {
        // Symbol 2 can only be followed by itself once: never in a point.
        let s = Subshift::new(3, [vec![2, 2], vec![2, 0], vec![2, 1]]).unwrap();
        assert_eq!(s.language_count(3), BigUint::from(8u32));
        assert!(!s.in_language(&[2]));
        assert!(s.is_admissible(&[0, 2]));
    }

    #[test]
    fn periodic_shift_is_not_mixing() {
        let s = Subshift::new(2, [vec![0, 0], vec![1, 1]]).unwrap();
        assert!(!s.is_mixing());
        assert_eq!(s.language_count(10), BigUint::from(2u32));
    }

    #[test]
    fn power_shift_counts() {
        let g = Subshift::golden_mean();
        let g2 = g.power(2).unwrap();
        for n in 1..8 {
            assert_eq!(g2.language_count(n), g.language_count(2 * n));
        }
        assert_eq!(Subshift::full(2).power(3).unwrap().alphabet_size(), 8);
    }

    #[test]
    fn connector_rejoins() {
        let g = Subshift::golden_mean().step_graph().unwrap();
        assert_eq!(g.connector(1, 1), Some(vec![0]));
        assert_eq!(g.connector(0, 1), Some(vec![]));
    }
}
