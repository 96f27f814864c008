//! Seeded random inputs: trees, small finite sets, fan points.
//!
//! Everything draws from a ChaCha stream keyed by an explicit seed, so a
//! seed names the same sample on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fan::FanPoint;
use crate::subset::{CylinderTree, FiniteSet};
use crate::subshift::Subshift;
use crate::symbolic::{BiInfinitePoint, Symbol, Word};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random subtree of the language tree: every admissible child survives with
/// probability `keep`, and each surviving node keeps at least one child.
pub fn random_tree(
    rng: &mut SampleRng,
    ambient: &Subshift,
    base: i64,
    depth: usize,
    keep: f64,
) -> Result<CylinderTree> {
    let k = ambient.alphabet_size() as Symbol;
    let mut level: Vec<Word> = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for w in &level {
            let children: Vec<Word> = (0..k)
                .map(|a| {
                    let mut c = w.clone();
                    c.push(a);
                    c
                })
                .filter(|c| ambient.in_language(c))
                .collect();
            let mut kept: Vec<Word> = children.iter().filter(|_| rng.gen_bool(keep)).cloned().collect();
            if kept.is_empty() {
                kept.push(children.choose(rng).ok_or(Error::EmptySubshift)?.clone());
            }
            next.extend(kept);
        }
        level = next;
    }
    CylinderTree::new(ambient.clone(), base, depth, level)
}

/// Eventually constant point with a random admissible center near 0.
pub fn random_point(rng: &mut SampleRng, ambient: &Subshift, spread: usize) -> Result<BiInfinitePoint> {
    let k = ambient.alphabet_size() as Symbol;
    let tails: Vec<Symbol> = (0..k).filter(|&a| ambient.in_language(&[a, a, a])).collect();
    if tails.is_empty() {
        return Ok(ambient.simplest_periodic_point());
    }
    for _ in 0..1000 {
        let len = rng.gen_range(0..=spread);
        let center: Word = (0..len).map(|_| rng.gen_range(0..k)).collect();
        let left = *tails.choose(rng).expect("non-empty");
        let right = *tails.choose(rng).expect("non-empty");
        let anchor = rng.gen_range(-(spread as i64)..=0);
        let x = BiInfinitePoint::new(vec![left], center, vec![right], anchor)?;
        if ambient.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence("no admissible random point in 1000 draws".into()))
}

/// `count` draws (duplicates collapse) of [`random_point`].
pub fn random_finite(rng: &mut SampleRng, ambient: &Subshift, count: usize, spread: usize) -> Result<FiniteSet> {
    let points = (0..count)
        .map(|_| random_point(rng, ambient, spread))
        .collect::<Result<Vec<_>>>()?;
    FiniteSet::new(ambient.clone(), points)
}

/// The apex or a point of a ball with index in `1..=max_ball`.
pub fn random_fan_point(rng: &mut SampleRng, max_ball: u32) -> Result<FanPoint> {
    let n = rng.gen_range(0..=max_ball);
    if n == 0 {
        return Ok(FanPoint::Apex);
    }
    Ok(FanPoint::Ball(n, random_point(rng, &Subshift::full(2), 4)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_name_samples() {
        let g = Subshift::golden_mean();
        let a = random_tree(&mut rng(7), &g, 0, 8, 0.6).unwrap();
        let b = random_tree(&mut rng(7), &g, 0, 8, 0.6).unwrap();
        assert_eq!(a.words, b.words);
        assert!(a.words.iter().all(|w| g.in_language(w)));
        let f = random_finite(&mut rng(3), &g, 6, 4).unwrap();
        assert!(f.points.iter().all(|x| g.contains(x)));
        assert_eq!(f.points, random_finite(&mut rng(3), &g, 6, 4).unwrap().points);
    }
}
