//! Words, windows and eventually periodic bi-infinite points.
//!
//! The shift metric is `d(x, y) = 2^-k` where `k` is the smallest `|i|` with
//! `x_i != y_i`. Resolutions are dyadic: `eps = 2^-m`.

use std::fmt;

use crate::error::{Error, Result};

pub type Symbol = u8;
pub type Word = Vec<Symbol>;

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Parses a word written with one character per symbol (`0-9`, then `a-z`).
pub fn parse_word(text: &str) -> Result<Word> {
    text.bytes()
        .map(|c| {
            DIGITS
                .iter()
                .position(|&d| d == c.to_ascii_lowercase())
                .map(|p| p as Symbol)
                .ok_or_else(|| Error::MalformedWord(text.to_string()))
        })
        .collect()
}

/// Formats a word. Symbols past `z` are written as `[n]`.
pub fn format_word(word: &[Symbol]) -> String {
    let mut out = String::with_capacity(word.len());
    for &s in word {
        match DIGITS.get(s as usize) {
            Some(&c) => out.push(c as char),
            None => out.push_str(&format!("[{s}]")),
        }
    }
    out
}

pub fn check_symbols(word: &[Symbol], alphabet: usize) -> Result<()> {
    match word.iter().find(|&&s| s as usize >= alphabet) {
        Some(&s) => Err(Error::SymbolOutOfRange {
            symbol: s as usize,
            size: alphabet,
        }),
        None => Ok(()),
    }
}

/// Closed integer interval of coordinates. `hi < lo` encodes the empty window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowSpec {
    pub lo: i64,
    pub hi: i64,
}

impl WindowSpec {
    pub fn new(lo: i64, hi: i64) -> Self {
        WindowSpec { lo, hi }
    }

    pub fn len(&self) -> usize {
        if self.hi < self.lo {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, i: i64) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn is_within(&self, other: &WindowSpec) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Coordinates that decide `(n, 2^-m)`-separation: `d_n(x, y) > 2^-m` exactly
/// when `x` and `y` differ somewhere in `[1 - m, n + m - 2]`.
pub fn separation_window(n: u32, m: u32) -> WindowSpec {
    let (n, m) = (n as i64, m as i64);
    WindowSpec::new(1 - m, n + m - 2)
}

/// Coordinates that decide membership in the closed Bowen ball of half the
/// resolution: `d_l(x, y) <= 2^-(m+1)` exactly when `x` and `y` agree on
/// `[-m, l - 1 + m]`.
pub fn ball_window(l: u64, m: u32) -> WindowSpec {
    let (l, m) = (l as i64, m as i64);
    WindowSpec::new(-m, l - 1 + m)
}

/// A point `... L L L C R R R ...` with the center starting at `anchor`.
///
/// Points are kept canonical so that derived equality and hashing agree with
/// equality of the underlying sequences: both periods are primitive, the
/// periodic tails are extended as far inward as possible, and a globally
/// periodic point is stored with `left == right` and `anchor == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BiInfinitePoint {
    left: Word,
    center: Word,
    right: Word,
    anchor: i64,
}

fn primitive_root(w: &[Symbol]) -> Word {
    let n = w.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| w[i] == w[i - p]) {
            return w[..p].to_vec();
        }
    }
    w.to_vec()
}

impl BiInfinitePoint {
    pub fn new(left: Word, center: Word, right: Word, anchor: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::MalformedPoint("periods must be non-empty".into()));
        }
        let mut left = primitive_root(&left);
        let mut right = primitive_root(&right);
        let mut center = center;
        let mut anchor = anchor;

        let mut skip = 0;
        while skip < center.len() && center[skip] == left[0] {
            left.rotate_left(1);
            skip += 1;
        }
        center.drain(..skip);
        anchor += skip as i64;
        while let Some(&last) = center.last() {
            if last != *right.last().unwrap() {
                break;
            }
            center.pop();
            right.rotate_right(1);
        }

        if center.is_empty() {
            // With no center the right tail is pulled left for as long as the
            // two tails agree; by Fine and Wilf this either stops within
            // |L| + |R| steps or the point is periodic.
            let mut steps = 0;
            loop {
                if left == right {
                    let p = left.len() as i64;
                    let shift = anchor.rem_euclid(p) as usize;
                    let mut period = left;
                    // Symbol at i is period[(i - anchor) mod p]; re-anchor at 0.
                    period.rotate_right(shift);
                    return Ok(BiInfinitePoint {
                        left: period.clone(),
                        center: Vec::new(),
                        right: period,
                        anchor: 0,
                    });
                }
                if left.last() != right.last() || steps > left.len() + right.len() {
                    break;
                }
                left.rotate_right(1);
                right.rotate_right(1);
                anchor -= 1;
                steps += 1;
            }
        }
        Ok(BiInfinitePoint {
            left,
            center,
            right,
            anchor,
        })
    }

    pub fn constant(symbol: Symbol) -> Self {
        BiInfinitePoint {
            left: vec![symbol],
            center: Vec::new(),
            right: vec![symbol],
            anchor: 0,
        }
    }

    pub fn periodic(period: Word) -> Result<Self> {
        BiInfinitePoint::new(period.clone(), Vec::new(), period, 0)
    }

    pub fn left_period(&self) -> &[Symbol] {
        &self.left
    }
    pub fn center(&self) -> &[Symbol] {
        &self.center
    }
    pub fn right_period(&self) -> &[Symbol] {
        &self.right
    }
    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn symbol_at(&self, i: i64) -> Symbol {
        let a = self.anchor;
        let c = self.center.len() as i64;
        if i < a {
            self.left[(i - a).rem_euclid(self.left.len() as i64) as usize]
        } else if i < a + c {
            self.center[(i - a) as usize]
        } else {
            self.right[(i - a - c).rem_euclid(self.right.len() as i64) as usize]
        }
    }

    pub fn window_of(&self, w: WindowSpec) -> Word {
        if w.is_empty() {
            return Vec::new();
        }
        (w.lo..=w.hi).map(|i| self.symbol_at(i)).collect()
    }

    /// `T^k x`, that is `(T^k x)_i = x_{i + k}`.
    pub fn shift_by(&self, k: i64) -> Self {
        let mut y = self.clone();
        if y.center.is_empty() && y.left == y.right {
            let p = y.left.len() as i64;
            y.left.rotate_left(k.rem_euclid(p) as usize);
            y.right = y.left.clone();
        } else {
            y.anchor -= k;
        }
        y
    }

    pub fn is_periodic(&self) -> bool {
        self.center.is_empty() && self.left == self.right && self.anchor == 0
    }

    pub fn max_symbol(&self) -> Symbol {
        self.left
            .iter()
            .chain(&self.center)
            .chain(&self.right)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Smallest window outside of which the point is described by its periods
    /// alone, padded by `pad` and by one full period on each side.
    pub fn description_window(&self, pad: usize) -> WindowSpec {
        let lo = self.anchor - self.left.len() as i64 - pad as i64;
        let hi = self.anchor + (self.center.len() + self.right.len() + pad) as i64 - 1;
        WindowSpec::new(lo, hi)
    }

    /// Copy of the point with the coordinates `lo..lo + word.len()` replaced.
    pub fn rewrite(&self, lo: i64, word: &[Symbol]) -> Self {
        if word.is_empty() {
            return self.clone();
        }
        let hi_excl = lo + word.len() as i64;
        let start = lo.min(self.anchor);
        let end = hi_excl.max(self.anchor + self.center.len() as i64);
        let center = (start..end)
            .map(|i| {
                if i >= lo && i < hi_excl {
                    word[(i - lo) as usize]
                } else {
                    self.symbol_at(i)
                }
            })
            .collect();
        let nl = self.left.len() as i64;
        let left = (0..nl).map(|j| self.symbol_at(start - nl + j)).collect();
        let right = (0..self.right.len() as i64).map(|j| self.symbol_at(end + j)).collect();
        BiInfinitePoint::new(left, center, right, start).expect("periods are non-empty")
    }

    /// Radius beyond which two points can no longer start to differ.
    fn agreement_radius(&self, other: &Self) -> i64 {
        let lcm = |a: usize, b: usize| a / num_integer::gcd(a, b) * b;
        let reach = |p: &Self| p.anchor.abs() + p.center.len() as i64;
        reach(self).max(reach(other))
            + lcm(self.left.len(), other.left.len()) as i64
            + lcm(self.right.len(), other.right.len()) as i64
            + 1
    }

    /// Smallest `|i|` with `x_i != y_i`, or `None` for equal points.
    pub fn difference_radius(&self, other: &Self) -> Option<u64> {
        if self == other {
            return None;
        }
        let r = self.agreement_radius(other);
        (0..=r)
            .find(|&k| self.symbol_at(k) != other.symbol_at(k) || self.symbol_at(-k) != other.symbol_at(-k))
            .map(|k| k as u64)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        match self.difference_radius(other) {
            None => 0.0,
            Some(k) => 0.5f64.powi(k as i32),
        }
    }

    /// Coordinates where the two points differ, or `None` when the set of such
    /// coordinates is infinite.
    pub fn difference_span(&self, other: &Self) -> Option<Option<WindowSpec>> {
        let r = self.agreement_radius(other);
        let far_left = self.symbol_at(-r - 1) != other.symbol_at(-r - 1)
            || (1..=(self.left.len() * other.left.len()) as i64)
                .any(|j| self.symbol_at(-r - j) != other.symbol_at(-r - j));
        let far_right = (1..=(self.right.len() * other.right.len()) as i64)
            .any(|j| self.symbol_at(r + j) != other.symbol_at(r + j));
        if far_left || far_right {
            return None;
        }
        let diffs: Vec<i64> = (-r..=r).filter(|&i| self.symbol_at(i) != other.symbol_at(i)).collect();
        Some(diffs.first().map(|&lo| WindowSpec::new(lo, *diffs.last().unwrap())))
    }
}

impl fmt::Display for BiInfinitePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}.{}@{}",
            format_word(&self.left),
            format_word(&self.center),
            format_word(&self.right),
            self.anchor
        )
    }
}

impl std::str::FromStr for BiInfinitePoint {
    type Err = Error;

    /// Reads `LEFT.CENTER.RIGHT@ANCHOR`; the anchor defaults to 0.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedPoint(s.to_string());
        let (body, anchor) = match s.split_once('@') {
            Some((b, a)) => (b, a.trim().parse::<i64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let parts: Vec<&str> = body.trim().split('.').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let left = parse_word(parts[0]).map_err(|_| bad())?;
        let center = parse_word(parts[1]).map_err(|_| bad())?;
        let right = parse_word(parts[2]).map_err(|_| bad())?;
        BiInfinitePoint::new(left, center, right, anchor).map_err(|_| bad())
    }
}
