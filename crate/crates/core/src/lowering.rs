//! Subsets of prescribed entropy: entropy-point sources, the staged
//! construction hitting an exact separated count at each stage length, the
//! infinite zero-entropy subset, and the partition showing that entropy is
//! not countably stable without shrinking diameters.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::bigmath::{floor_exp, ln_big, Dyadic};
use crate::entropy::{growth_estimate, sft_entropy_exact, union_check, EntropyBracket, EntropyEstimate, UnionReport};
use crate::error::{Error, Result};
use crate::staged::{path_exact, rejoin, BlockStage, Stage, StageSet, StagedFamily};
use crate::subset::{EntropyPointSet, FiniteSet, SetRep};
use crate::subshift::{StepGraph, Subshift};
use crate::symbolic::{separation_window, BiInfinitePoint, Symbol, WindowSpec, Word};

/// Points converging to an anchor `x0`, obtained by rewriting a block of `x0`
/// and returning to it along the shortest admissible path.
#[derive(Debug, Clone)]
pub struct PointSource {
    pub ambient: Subshift,
    pub anchor: BiInfinitePoint,
    pub resolution: u32,
    graph: StepGraph,
    capacity: EntropyBracket,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub points: Vec<BiInfinitePoint>,
    /// Fewer points than requested were available.
    pub exhausted: bool,
}

/// Source around `x0` in a mixing one-step shift of positive entropy.
pub fn entropy_point_family(s: &Subshift, x0: &BiInfinitePoint, m: u32) -> Result<PointSource> {
    if m == 0 {
        return Err(Error::InvalidResolution);
    }
    let graph = s.step_graph()?;
    if !s.is_mixing() {
        return Err(Error::NotMixing);
    }
    if !s.contains(x0) {
        return Err(Error::Inadmissible(format!("anchor {x0}")));
    }
    let capacity = sft_entropy_exact(s, 1e-12)?;
    if capacity.upper <= 1e-12 {
        return Err(Error::ZeroEntropyAmbient);
    }
    Ok(PointSource {
        ambient: s.clone(),
        anchor: x0.clone(),
        resolution: m,
        graph,
        capacity,
    })
}

impl PointSource {
    /// Topological entropy of the ambient shift, which every neighbourhood of
    /// the anchor inherits.
    pub fn capacity(&self) -> f64 {
        self.capacity.value()
    }

    /// The same source read at another resolution.
    pub fn at_resolution(&self, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidResolution);
        }
        Ok(PointSource {
            resolution: m,
            ..self.clone()
        })
    }

    /// Every finite modification of the anchor visible at this resolution.
    pub fn entropy_points(&self) -> EntropyPointSet {
        EntropyPointSet::new(self.ambient.clone(), self.anchor.clone(), self.resolution)
            .expect("sources are built on mixing one-step shifts")
    }

    /// Number of distinct points agreeing with the anchor up to `agree_hi`
    /// that can be told apart at `horizon`, the anchor included.
    pub fn capacity_at(&self, agree_hi: i64, horizon: u64) -> BigUint {
        let top = separation_window(horizon as u32, self.resolution).hi;
        if top <= agree_hi {
            return BigUint::from(1u32);
        }
        self.graph
            .walks_from(self.anchor.symbol_at(agree_hi), (top - agree_hi) as usize)
    }

    /// Up to `want` points that agree with the anchor on `agree`, differ from
    /// it right after, are pairwise `(horizon, 2^-m)`-separated, and are
    /// separated from every point of `exclude` and from the anchor.
    pub fn emit(&self, agree: WindowSpec, exclude: &[BiInfinitePoint], want: usize, horizon: u64) -> Result<Emission> {
        let sep = separation_window(horizon as u32, self.resolution);
        let region = WindowSpec::new(agree.hi + 1, sep.hi);
        if region.is_empty() || want == 0 {
            return Ok(Emission {
                points: Vec::new(),
                exhausted: want > 0,
            });
        }
        let taken: std::collections::BTreeSet<Word> = exclude
            .iter()
            .chain(std::iter::once(&self.anchor))
            .map(|x| x.window_of(sep))
            .collect();
        let ctx = self.anchor.symbol_at(region.lo - 1);
        let mut points = Vec::new();
        let mut fills = Fills::new(&self.graph, ctx, region.len());
        while points.len() < want {
            let Some(fill) = fills.next() else { break };
            let tail = rejoin(&self.graph, &self.anchor, region.hi, *fill.last().expect("non-empty"))?;
            let mut word = fill;
            word.extend(tail);
            let y = self.anchor.rewrite(region.lo, &word);
            if !taken.contains(&y.window_of(sep)) {
                points.push(y);
            }
        }
        let exhausted = points.len() < want;
        Ok(Emission { points, exhausted })
    }
}

/// Admissible words of a fixed length after a context symbol, in
/// lexicographic order.
struct Fills<'a> {
    g: &'a StepGraph,
    ctx: Symbol,
    word: Word,
    len: usize,
    started: bool,
}

impl<'a> Fills<'a> {
    fn new(g: &'a StepGraph, ctx: Symbol, len: usize) -> Self {
        Fills {
            g,
            ctx,
            word: Vec::with_capacity(len),
            len,
            started: false,
        }
    }

    fn prev(&self, i: usize) -> Symbol {
        if i == 0 {
            self.ctx
        } else {
            self.word[i - 1]
        }
    }

    /// Extend the current prefix with least successors up to full length.
    fn complete(&mut self) -> bool {
        while self.word.len() < self.len {
            match self.g.successors(self.prev(self.word.len())).next() {
                Some(a) => self.word.push(a),
                None => return false,
            }
        }
        true
    }
}

impl Iterator for Fills<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if !self.started {
            self.started = true;
            return self.complete().then(|| self.word.clone());
        }
        // Essential graphs have no dead ends, so a completion always exists.
        while let Some(last) = self.word.pop() {
            let i = self.word.len();
            if let Some(b) = self.g.successors(self.prev(i)).find(|&b| b > last) {
                self.word.push(b);
                if self.complete() {
                    return Some(self.word.clone());
                }
            }
        }
        None
    }
}

/// Integers behind a staged construction at target `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweringCertificate {
    pub target: f64,
    pub resolution: u32,
    pub lengths: Vec<u64>,
    /// `floor(e^(l_i h))`.
    pub floors: Vec<BigUint>,
    /// `|A_i|`, the number of points in stages `1..=i`.
    pub cumulative: Vec<BigUint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub identities_hold: bool,
    pub bounds_hold: bool,
    pub horizons_checked: u64,
    pub first_failure: Option<String>,
}

impl CertificateReport {
    pub fn holds(&self) -> bool {
        self.identities_hold && self.bounds_hold
    }
}

fn floor_exp_times(h: &Dyadic, n: u64) -> BigUint {
    floor_exp(&h.times(n))
}

/// Incremental construction of the staged family at target `h`.
///
/// Stage `i` is the first horizon `l_i > l_{i-1}` where the free block
/// between the previous ball window and the new separation window admits
/// `floor(e^(l_i h)) - floor(e^(l_{i-1} h)) + 1` points besides the anchor's
/// own fill. Then `|A_i| = floor(e^(l_i h)) + i`, and minimality of `l_i`
/// keeps the count below `floor(e^(l h)) + i` for the horizons in between.
pub struct LemmaBuilder {
    src: PointSource,
    h: f64,
    hd: Dyadic,
    stages: Vec<Stage>,
    cert: LoweringCertificate,
}

const SEARCH_LIMIT: u64 = 1_000_000;

impl LemmaBuilder {
    pub fn new(src: &PointSource, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::TargetOutOfRange {
                target: h,
                available: src.capacity(),
            });
        }
        if h >= src.capacity.lower {
            return Err(Error::SourceCapacityExceeded {
                target: h,
                capacity: src.capacity(),
            });
        }
        let hd = Dyadic::from_f64(h).expect("positive finite target");
        let cert = LoweringCertificate {
            target: h,
            resolution: src.resolution,
            lengths: Vec::new(),
            floors: Vec::new(),
            cumulative: Vec::new(),
        };
        Ok(LemmaBuilder {
            src: src.clone(),
            h,
            hd,
            stages: Vec::new(),
            cert,
        })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn certificate(&self) -> &LoweringCertificate {
        &self.cert
    }

    pub fn last_length(&self) -> Option<u64> {
        self.cert.lengths.last().copied()
    }

    /// Adds the next stage and returns its index.
    pub fn next_stage(&mut self) -> Result<usize> {
        let m = self.src.resolution as i64;
        let x0 = &self.src.anchor;
        let g = &self.src.graph;
        let (prev_l, prev_floor) = match (self.cert.lengths.last(), self.cert.floors.last()) {
            (Some(&l), Some(f)) => (Some(l), f.clone()),
            _ => (None, BigUint::zero()),
        };
        // Region [lo, lo + len - 1] after context symbol x0_{lo-1}, with
        // len = n + offset growing with the candidate horizon n.
        let (lo, offset, first_n) = match prev_l {
            None => (1 - m, 2 * m - 2, 1u64),
            Some(l) => (l as i64 + m, -(l as i64) - 1, l + 1),
        };
        let ctx = x0.symbol_at(lo - 1);
        let prev_ln = prev_l.map(|l| l as f64 * self.h);

        let mut walks: Vec<BigUint> = g
            .alive
            .iter()
            .map(|&a| if a { BigUint::from(1u32) } else { BigUint::zero() })
            .collect();
        let mut len = 0i64;
        let mut n = first_n;
        loop {
            if n - first_n > SEARCH_LIMIT {
                return Err(Error::NonConvergence(format!(
                    "no stage length within {SEARCH_LIMIT} of {first_n}"
                )));
            }
            let want_len = n as i64 + offset;
            while len < want_len {
                walks = g.step_forward(&walks);
                len += 1;
            }
            if len >= 1 {
                let w = &walks[ctx as usize];
                if self.admits(w, n, prev_ln, &prev_floor) {
                    let floor = floor_exp_times(&self.hd, n);
                    let count = &floor - &prev_floor + 1u32;
                    if *w >= &count + 1u32 {
                        let region = WindowSpec::new(lo, lo + len - 1);
                        let stage = BlockStage::new(&self.src.ambient, x0, region, count.clone())?;
                        self.stages.push(Stage {
                            length: n,
                            set: StageSet::Block(Arc::new(stage)),
                        });
                        let before = self.cert.cumulative.last().cloned().unwrap_or_default();
                        self.cert.cumulative.push(before + count);
                        self.cert.floors.push(floor);
                        self.cert.lengths.push(n);
                        return Ok(self.stages.len() - 1);
                    }
                }
            }
            n += 1;
        }
    }

    /// Cheap test that the `w` available fills might reach the requirement
    /// `floor(e^(n h)) - floor(e^(l h)) + 2`; only rules out clear misses.
    fn admits(&self, w: &BigUint, n: u64, prev_ln: Option<f64>, prev_floor: &BigUint) -> bool {
        let nh = n as f64 * self.h;
        if nh < 40.0 {
            let need = nh.exp() - prev_floor.to_f64().unwrap_or(0.0) + 2.0;
            return w.to_f64().map_or(true, |w| w >= need - 2.0);
        }
        let approx = match prev_ln {
            Some(p) => nh + (-(p - nh).exp()).ln_1p(),
            None => nh,
        };
        ln_big(w) >= approx - 0.01
    }

    pub fn family(&self) -> StagedFamily {
        let m = self.src.resolution;
        StagedFamily {
            ambient: self.src.ambient.clone(),
            limit: self.src.anchor.clone(),
            resolution: m,
            stages: self.stages.clone(),
            open_ended: true,
            include_limit: true,
            tail_agrees_through: self.last_length().map(|l| l as i64 + m as i64 - 1),
        }
    }
}

/// Builds at least `stages` stages and continues until the last stage
/// length reaches `min_length`.
pub fn lemma_good_lower(
    src: &PointSource,
    h: f64,
    stages: usize,
    min_length: u64,
) -> Result<(StagedFamily, LoweringCertificate)> {
    let mut b = LemmaBuilder::new(src, h)?;
    while b.stages().len() < stages.max(1) || b.last_length().unwrap_or(0) < min_length {
        b.next_stage()?;
    }
    Ok((b.family(), b.certificate().clone()))
}

/// Re-derives every certificate integer and checks the separated counts of
/// the family against both stage bounds at every horizon from `l_1` to the
/// last stage length.
pub fn verify_certificate(family: &StagedFamily, cert: &LoweringCertificate) -> Result<CertificateReport> {
    family.validate()?;
    let hd = Dyadic::from_f64(cert.target).ok_or_else(|| Error::Certificate("target is not finite".into()))?;
    let mut failure: Option<String> = None;
    let mut fail = |msg: String| {
        if failure.is_none() {
            failure = Some(msg);
        }
    };
    let k = cert.lengths.len();
    let mut identities = k == family.stages.len() && k == cert.floors.len() && k == cert.cumulative.len();
    if !identities {
        fail("certificate and family have different stage counts".into());
    }
    let mut running = BigUint::zero();
    for i in 0..k.min(family.stages.len()) {
        let st = &family.stages[i];
        running += st.set.size();
        let floor = floor_exp_times(&hd, cert.lengths[i]);
        let ok = st.length == cert.lengths[i]
            && floor == cert.floors[i]
            && cert.cumulative[i] == &floor + (i + 1)
            && running == cert.cumulative[i];
        if !ok {
            identities = false;
            fail(format!("stage {} breaks |A_i| = floor(e^(l_i h)) + i", i + 1));
        }
    }

    let mut bounds = identities;
    let mut checked = 0;
    if identities && k > 0 {
        let set = SetRep::Staged(family.clone());
        let m = cert.resolution;
        let mut stage = 0;
        for l in cert.lengths[0]..=cert.lengths[k - 1] {
            while stage + 1 < k && cert.lengths[stage + 1] <= l {
                stage += 1;
            }
            let n = stage + 1;
            let s = set.census(separation_window(l as u32, m))?;
            let lower = &cert.floors[stage] + n;
            let below_exp = ln_big(&s) < l as f64 * cert.target - 1e-6;
            let upper_ok = below_exp || s <= floor_exp_times(&hd, l) + n + 1u32;
            checked += 1;
            if s < lower || !upper_ok {
                bounds = false;
                fail(format!("s_{l} = {s} is outside the bounds of stage {n}"));
                break;
            }
        }
    }
    Ok(CertificateReport {
        identities_hold: identities,
        bounds_hold: bounds,
        horizons_checked: checked,
        first_failure: failure,
    })
}

/// First coordinate where `y` differs from `x`, and the last.
fn difference_range(y: &BiInfinitePoint, x: &BiInfinitePoint) -> Option<WindowSpec> {
    y.difference_span(x).flatten()
}

/// A representative of a block stage: its earliest-differing point when the
/// stage has one, else its first point.
fn stage_representative(stage: &Stage) -> Result<BiInfinitePoint> {
    match &stage.set {
        StageSet::Block(b) => b.point(&b.first_early_point().unwrap_or_default()),
        StageSet::Explicit(p) => p.first().cloned().ok_or(Error::EmptySet),
    }
}

/// An infinite compact set `{x0, y_1, y_2, ...}` with `y_n -> x0` and zero
/// entropy.
///
/// Level `n` runs the staged construction at target `h / (n + 1)` and
/// resolution `m + n - 1`, then keeps one representative whose first
/// difference lies past a threshold `t_n`. The thresholds grow at least
/// sixteenfold, so every separation window sees a bounded number of points.
/// The family is open-ended: unbuilt levels agree with `x0` up to the next
/// threshold.
pub fn zero_entropy_infinite(src: &PointSource, h_init: f64, levels: usize) -> Result<StagedFamily> {
    let m = src.resolution;
    let x0 = &src.anchor;
    let mut threshold: i64 = 2;
    let mut stages: Vec<Stage> = Vec::new();
    for n in 1..=levels.max(1) {
        let level_src = src.at_resolution(m + n as u32 - 1)?;
        let mut b = LemmaBuilder::new(&level_src, h_init / (n + 1) as f64)?;
        let y = loop {
            let i = b.next_stage()?;
            let y = stage_representative(&b.stages()[i])?;
            let span =
                difference_range(&y, x0).ok_or_else(|| Error::Certificate("representative equals the limit".into()))?;
            if span.lo >= threshold {
                break (y, span);
            }
        };
        let (y, span) = y;
        let prev = stages.last().map(|s| s.length).unwrap_or(0);
        let length = ((span.hi - m as i64 + 2).max(1) as u64).max(prev + 1);
        stages.push(Stage {
            length,
            set: StageSet::Explicit(vec![y]),
        });
        threshold = (16 * threshold).max(span.hi + m as i64 + 2);
    }
    let family = StagedFamily {
        ambient: src.ambient.clone(),
        limit: x0.clone(),
        resolution: m,
        stages,
        open_ended: true,
        include_limit: true,
        tail_agrees_through: Some(threshold - 1),
    };
    family.validate()?;
    Ok(family)
}

/// Knobs for [`hul_lower`].
#[derive(Debug, Clone, PartialEq)]
pub struct LowerConfig {
    pub resolution: u32,
    pub stages: usize,
    pub min_length: u64,
    /// Targets this close to the entropy of the set use the whole
    /// entropy-point family.
    pub tolerance: f64,
}

impl Default for LowerConfig {
    fn default() -> Self {
        LowerConfig {
            resolution: 2,
            stages: 5,
            min_length: 40,
            tolerance: 1e-9,
        }
    }
}

/// Some point of the set.
pub fn point_of(set: &SetRep) -> Result<BiInfinitePoint> {
    match set {
        SetRep::Finite(f) => f.points.iter().next().cloned().ok_or(Error::EmptySet),
        SetRep::Whole(s) => Ok(s.simplest_periodic_point()),
        SetRep::Staged(f) => Ok(f.limit.clone()),
        SetRep::EntropyPoints(e) => Ok(e.limit.clone()),
        SetRep::LeftFree(l) => Ok(l.point.clone()),
        SetRep::Tree(t) => {
            let w = t.words.iter().next().ok_or(Error::EmptySet)?;
            point_in_cylinder(&t.ambient, t.base, w)
        }
        SetRep::Image(c) => Ok(c.code.apply_point(&c.code.source().simplest_periodic_point())),
    }
}

/// A point showing `w` at `base`, equal to a periodic point far out on both
/// sides.
fn point_in_cylinder(s: &Subshift, base: i64, w: &[Symbol]) -> Result<BiInfinitePoint> {
    let g = s.step_graph()?;
    let x0 = s.simplest_periodic_point();
    let first = *w.first().ok_or(Error::EmptySet)?;
    let last = *w.last().expect("non-empty");
    let bound = g.k * g.k + 1;
    let lead = (0..=bound)
        .find_map(|t| path_exact(&g, x0.symbol_at(base - t as i64 - 1), first, t))
        .ok_or_else(|| Error::SourceUnavailable("no path from the periodic point into the cylinder".into()))?;
    let tail = rejoin(&g, &x0, base + w.len() as i64 - 1, last)
        .map_err(|_| Error::SourceUnavailable("no path from the cylinder back to the periodic point".into()))?;
    let mut word = lead.clone();
    word.extend_from_slice(w);
    word.extend(tail);
    let y = x0.rewrite(base - lead.len() as i64, &word);
    if !s.contains(&y) {
        return Err(Error::Inadmissible(format!("point {y}")));
    }
    Ok(y)
}

/// Available entropy of a set and a source of entropy points inside it.
fn source_for(set: &SetRep, m: u32) -> Result<(f64, Option<PointSource>)> {
    match set {
        SetRep::Finite(_) | SetRep::Staged(_) | SetRep::LeftFree(_) => Ok((0.0, None)),
        SetRep::Whole(s) => {
            if !s.is_one_step() || !s.is_mixing() {
                let h = sft_entropy_exact(s, 1e-12)?.value();
                return Ok((h, None));
            }
            let cap = sft_entropy_exact(s, 1e-12)?;
            if cap.upper <= 1e-12 {
                return Ok((0.0, None));
            }
            Ok((
                cap.value(),
                Some(entropy_point_family(s, &s.simplest_periodic_point(), m)?),
            ))
        }
        SetRep::EntropyPoints(e) if e.first_difference == (None, None) && e.include_limit => {
            let src = entropy_point_family(&e.ambient, &e.limit, e.resolution)?;
            Ok((src.capacity(), Some(src)))
        }
        other => Err(Error::SourceUnavailable(format!(
            "no entropy-point source inside a {} set",
            other.kind()
        ))),
    }
}

/// A compact subset of `set` with at most one limit point and entropy `h`.
///
/// Zero gives a singleton. The full entropy of a mixing shift gives all finite
/// modifications of one point, which converge to it. Anything in between is
/// the staged construction inside those modifications.
pub fn hul_lower(set: &SetRep, h: f64, cfg: &LowerConfig) -> Result<SetRep> {
    hul_lower_certified(set, h, cfg).map(|(s, _)| s)
}

/// [`hul_lower`], keeping the certificate when the staged construction ran.
pub fn hul_lower_certified(set: &SetRep, h: f64, cfg: &LowerConfig) -> Result<(SetRep, Option<LoweringCertificate>)> {
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::TargetOutOfRange {
            target: h,
            available: f64::NAN,
        });
    }
    if h == 0.0 {
        let x = point_of(set)?;
        return Ok((SetRep::Finite(FiniteSet::new(set.ambient().clone(), [x])?), None));
    }
    let (available, src) = source_for(set, cfg.resolution)?;
    if h > available + cfg.tolerance {
        return Err(Error::TargetOutOfRange { target: h, available });
    }
    let src = src.ok_or_else(|| Error::SourceUnavailable(format!("{} set without a mixing core", set.kind())))?;
    if h >= available - cfg.tolerance {
        return Ok((SetRep::EntropyPoints(src.entropy_points()), None));
    }
    let (family, cert) = lemma_good_lower(&src, h, cfg.stages, cfg.min_length)?;
    Ok((SetRep::Staged(family), Some(cert)))
}

#[derive(Debug, Clone)]
pub struct PartitionReport {
    /// Points per block, or `None` when the block is finite only through the
    /// bound on where modifications end. Either way its entropy is 0.
    pub block_sizes: Vec<Option<BigUint>>,
    pub union: EntropyEstimate,
    pub thinned: EntropyEstimate,
    pub union_check: UnionReport,
    /// The limit statement cannot be checked at a finite horizon.
    pub finite_horizon_only: bool,
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub blocks: Vec<SetRep>,
    pub union: SetRep,
    /// The limit with one point per block.
    pub thinned: SetRep,
    pub report: PartitionReport,
}

/// Finite blocks `B_1, B_2, ...` of a sequence converging to the anchor whose
/// union has entropy `a`, while the anchor with one point per block has
/// entropy 0.
///
/// At full capacity the blocks split the finite modifications of the anchor
/// by where they first differ, at cut points `c_j` that grow sixteenfold;
/// below capacity they are the stages of the staged construction.
pub fn counterexample_partition(src: &PointSource, a: f64, blocks: usize, n_max: u32) -> Result<Partition> {
    let m = src.resolution;
    let x0 = &src.anchor;
    let cap = src.capacity();
    if !(a > 0.0) || a > cap + 1e-9 {
        return Err(Error::TargetOutOfRange {
            target: a,
            available: cap,
        });
    }
    let blocks = blocks.max(1);
    let mut parts = Vec::new();
    let mut reps = Vec::new();
    let union;
    if a >= cap - 1e-9 {
        let k0 = src.entropy_points();
        let mut cuts = vec![1 - m as i64, 2];
        while cuts.len() <= blocks {
            let c = *cuts.last().expect("non-empty");
            cuts.push(16 * c);
        }
        for j in 0..blocks {
            let b = k0.block(cuts[j], Some(cuts[j + 1]));
            if let Some(y) = k0.first_point_at(cuts[j])? {
                reps.push(y);
            }
            parts.push(SetRep::EntropyPoints(b));
        }
        let mut u = k0.block(cuts[0], Some(cuts[blocks]));
        u.include_limit = true;
        union = SetRep::EntropyPoints(u);
    } else {
        let mut b = LemmaBuilder::new(src, a)?;
        let mut threshold = i64::MIN;
        while b.stages().len() < blocks || b.last_length().unwrap_or(0) < n_max as u64 + 1 {
            let i = b.next_stage()?;
            let y = stage_representative(&b.stages()[i])?;
            let span =
                difference_range(&y, x0).ok_or_else(|| Error::Certificate("representative equals the limit".into()))?;
            if span.lo >= threshold {
                reps.push(y);
                threshold = if threshold == i64::MIN {
                    2
                } else {
                    (16 * threshold).max(span.hi + m as i64 + 2)
                };
            }
        }
        let family = b.family();
        for i in 0..family.stages.len() {
            parts.push(SetRep::Staged(family.slice(i..i + 1)));
        }
        union = SetRep::Staged(family);
    }
    let block_sizes = parts
        .iter()
        .map(|p| match p {
            SetRep::Staged(f) => Some(f.total_points()),
            _ => None,
        })
        .collect();
    let mut thinned_points = reps.clone();
    thinned_points.push(x0.clone());
    let thinned = SetRep::Finite(FiniteSet::new(src.ambient.clone(), thinned_points)?);
    let u = growth_estimate(&union, m, n_max)?;
    let t = growth_estimate(&thinned, m, n_max)?;
    let reps_set = thinned.clone();
    let check = union_check(&union, &parts, &reps_set, x0, m, n_max, 0.05)?;
    let report = PartitionReport {
        block_sizes,
        union: u,
        thinned: t,
        union_check: check,
        finite_horizon_only: true,
    };
    Ok(Partition {
        blocks: parts,
        union,
        thinned,
        report,
    })
}
