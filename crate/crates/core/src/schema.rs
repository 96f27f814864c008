//! JSON documents for systems, sets, codes and run settings.
//!
//! Parsing goes through typed documents with unknown fields rejected, then a
//! build step that checks symbols, admissibility and alphabet agreement.
//! Serializing a built object always yields the same bytes, so
//! `to_string(parse(doc))` is a fixed point after one round.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::SlidingBlockCode;
use crate::fan::{ball_shift, FanSet};
use crate::lowering::LoweringCertificate;
use crate::staged::{BlockStage, Stage, StageSet, StagedFamily};
use crate::subset::{CylinderTree, EntropyPointSet, FiniteSet, LeftFreeSet, SetRep};
use crate::subshift::Subshift;
use crate::symbolic::{check_symbols, format_word, parse_word, BiInfinitePoint, Symbol, WindowSpec, Word};

/// Splits the path a nested document reports from its message.
const PATH_MARK: char = '\u{1f}';

fn nest(outer: &str, inner: &str) -> String {
    match (outer.is_empty() || outer == ".", inner.is_empty() || inner == ".") {
        (true, _) => inner.trim_start_matches('.').to_string(),
        (false, true) => outer.to_string(),
        (false, false) if inner.starts_with('[') => format!("{outer}{inner}"),
        (false, false) => format!("{outer}.{inner}"),
    }
}

fn split_error(path: &str, message: &str) -> (String, String) {
    match message.split_once(PATH_MARK) {
        Some((inner, rest)) => (nest(path, inner), rest.to_string()),
        None => (nest(path, ""), message.to_string()),
    }
}

/// Serde buffers internally tagged enums and loses the field path, so each
/// tagged document reads its `kind` by hand and deserializes the payload
/// with its own path tracking.
macro_rules! tagged {
    ($name:ident { $($tag:literal => $variant:ident($body:ty)),+ $(,)? }) => {
        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                use serde::de::Error as _;
                let mut value = serde_json::Value::deserialize(d)?;
                let kind = match value.as_object_mut().map(|o| o.remove("kind")) {
                    Some(Some(serde_json::Value::String(k))) => k,
                    Some(Some(_)) => return Err(D::Error::custom(format!("kind{PATH_MARK}kind must be a string"))),
                    _ => return Err(D::Error::custom("missing field `kind`")),
                };
                let fail = |e: serde_path_to_error::Error<serde_json::Error>| {
                    let (path, message) = split_error(&e.path().to_string(), &e.inner().to_string());
                    D::Error::custom(format!("{path}{PATH_MARK}{message}"))
                };
                match kind.as_str() {
                    $($tag => serde_path_to_error::deserialize(value).map($name::$variant).map_err(fail),)+
                    other => Err(D::Error::custom(format!(
                        "kind{PATH_MARK}unknown kind {other:?}, expected one of {}",
                        [$($tag),+].join(", ")
                    ))),
                }
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemDoc {
    Subshift(SubshiftDoc),
    Fan(FanSystemDoc),
}
tagged!(SystemDoc { "subshift" => Subshift(SubshiftDoc), "fan" => Fan(FanSystemDoc) });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubshiftDoc {
    pub alphabet: usize,
    #[serde(default)]
    pub forbidden: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanSystemDoc {}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SetDoc {
    Whole(WholeDoc),
    Finite(FiniteDoc),
    Tree(TreeDoc),
    Staged(StagedDoc),
    EntropyPoints(EntropyPointsDoc),
    LeftFree(LeftFreeDoc),
    Fan(FanDoc),
}
tagged!(SetDoc {
    "whole" => Whole(WholeDoc),
    "finite" => Finite(FiniteDoc),
    "tree" => Tree(TreeDoc),
    "staged" => Staged(StagedDoc),
    "entropy-points" => EntropyPoints(EntropyPointsDoc),
    "left-free" => LeftFree(LeftFreeDoc),
    "fan" => Fan(FanDoc),
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WholeDoc {
    pub system: SystemDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteDoc {
    pub system: SystemDoc,
    pub points: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub system: SystemDoc,
    pub base: i64,
    pub depth: usize,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagedDoc {
    pub system: SystemDoc,
    pub limit: String,
    pub resolution: u32,
    #[serde(default)]
    pub open_ended: bool,
    #[serde(default = "yes")]
    pub include_limit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_agrees_through: Option<i64>,
    pub stages: Vec<StageDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyPointsDoc {
    pub system: SystemDoc,
    pub limit: String,
    pub resolution: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub differences_from: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub differences_to: Option<i64>,
    #[serde(default = "yes")]
    pub include_limit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeftFreeDoc {
    pub system: SystemDoc,
    pub point: String,
    pub from: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanDoc {
    pub apex: bool,
    #[serde(default)]
    pub balls: BTreeMap<u32, SetDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<FanTailDoc>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FanTailDoc {
    pub from: u32,
    pub set: Box<SetDoc>,
}

/// One stage: either listed points or a block of lexicographic fills.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageDoc {
    pub length: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub lo: i64,
    pub hi: i64,
    /// Decimal, since counts outgrow 64 bits quickly.
    pub count: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub target: f64,
    pub resolution: u32,
    pub lengths: Vec<u64>,
    pub floors: Vec<String>,
    pub cumulative: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CodeDoc {
    Code(CodeBody),
}
tagged!(CodeDoc { "code" => Code(CodeBody) });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeBody {
    pub source: SystemDoc,
    pub target: SystemDoc,
    #[serde(default)]
    pub memory: usize,
    #[serde(default)]
    pub anticipation: usize,
    /// Source window to image symbol, both as digit strings.
    pub rule: BTreeMap<String, String>,
}

/// Every knob a command reads. Missing fields take the documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub resolutions: Vec<u32>,
    pub n_max: u32,
    pub lambda_tol: f64,
    pub depth: usize,
    pub stages: usize,
    pub min_length: u64,
    pub slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            resolutions: vec![2, 3, 4],
            n_max: 24,
            lambda_tol: 1e-6,
            depth: 12,
            stages: 5,
            min_length: 40,
            slack: 0.05,
            seed: None,
        }
    }
}

/// Output of a lowering run: enough to rebuild the set and compare bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoweredDoc {
    pub kind: LoweredKind,
    pub tool: ToolDoc,
    pub config: RunConfig,
    pub request: LowerRequest,
    pub set: SetDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoweredKind {
    Lowered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolDoc {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerRequest {
    pub input: SetDoc,
    pub target: f64,
}

/// Any top-level document.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyDoc {
    System(SystemDoc),
    Set(SetDoc),
    Code(CodeDoc),
    Lowered(Box<LoweredDoc>),
}

#[derive(Debug, Clone)]
pub enum System {
    Shift(Subshift),
    Fan,
}

#[derive(Debug, Clone)]
pub enum AnySet {
    Shift(SetRep),
    Fan(FanSet),
}

fn schema(path: impl Into<String>, message: impl std::fmt::Display) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.to_string(),
    }
}

fn join(path: &str, field: &str) -> String {
    if path.is_empty() {
        field.to_string()
    } else if field.starts_with('[') {
        format!("{path}{field}")
    } else {
        format!("{path}.{field}")
    }
}

/// Deserializes `text`, reporting the path to the first offending field.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let (path, message) = split_error(&e.path().to_string(), &e.inner().to_string());
        schema(path, message)
    })
}

/// Canonical text: pretty-printed with a trailing newline.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

/// A bare `{"kind": "fan"}` is the fan system; with fields it is a fan subset.
pub fn parse_any(text: &str) -> Result<AnyDoc> {
    let value: serde_json::Value = from_json(text)?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| schema("kind", "missing document kind"))?;
    match kind {
        "subshift" => from_json(text).map(AnyDoc::System),
        "fan" if value.as_object().is_some_and(|o| o.len() == 1) => from_json(text).map(AnyDoc::System),
        "code" => from_json(text).map(AnyDoc::Code),
        "lowered" => from_json(text).map(|d| AnyDoc::Lowered(Box::new(d))),
        _ => from_json(text).map(AnyDoc::Set),
    }
}

impl SystemDoc {
    pub fn build(&self, path: &str) -> Result<System> {
        match self {
            SystemDoc::Fan(_) => Ok(System::Fan),
            SystemDoc::Subshift(SubshiftDoc { alphabet, forbidden }) => {
                if *alphabet == 0 {
                    return Err(schema(join(path, "alphabet"), Error::EmptyAlphabet));
                }
                let mut words = Vec::new();
                for (i, w) in forbidden.iter().enumerate() {
                    let at = join(path, &format!("forbidden[{i}]"));
                    let word = parse_word(w).map_err(|e| schema(&at, e))?;
                    check_symbols(&word, *alphabet).map_err(|e| schema(&at, e))?;
                    words.push(word);
                }
                Subshift::new(*alphabet, words)
                    .map(System::Shift)
                    .map_err(|e| schema(join(path, "forbidden"), e))
            }
        }
    }

    pub fn shift(&self, path: &str) -> Result<Subshift> {
        match self.build(path)? {
            System::Shift(s) => Ok(s),
            System::Fan => Err(schema(path, "expected a subshift")),
        }
    }

    pub fn of(s: &Subshift) -> Self {
        SystemDoc::Subshift(SubshiftDoc {
            alphabet: s.alphabet_size(),
            forbidden: s.forbidden().iter().map(|w| format_word(w)).collect(),
        })
    }
}

fn point(text: &str, ambient: &Subshift, path: &str) -> Result<BiInfinitePoint> {
    let x: BiInfinitePoint = text.parse().map_err(|e| schema(path, e))?;
    if x.max_symbol() as usize >= ambient.alphabet_size() {
        return Err(schema(
            path,
            Error::SymbolOutOfRange {
                symbol: x.max_symbol() as usize,
                size: ambient.alphabet_size(),
            },
        ));
    }
    if !ambient.contains(&x) {
        return Err(schema(path, Error::Inadmissible(format!("point {x}"))));
    }
    Ok(x)
}

fn big(text: &str, path: &str) -> Result<BigUint> {
    text.parse::<BigUint>()
        .map_err(|_| schema(path, format!("not a decimal integer: {text:?}")))
}

impl CertificateDoc {
    pub fn of(c: &LoweringCertificate) -> Self {
        CertificateDoc {
            target: c.target,
            resolution: c.resolution,
            lengths: c.lengths.clone(),
            floors: c.floors.iter().map(|f| f.to_string()).collect(),
            cumulative: c.cumulative.iter().map(|f| f.to_string()).collect(),
        }
    }

    pub fn build(&self, path: &str) -> Result<LoweringCertificate> {
        let ints = |v: &[String], field: &str| -> Result<Vec<BigUint>> {
            v.iter()
                .enumerate()
                .map(|(i, t)| big(t, &join(path, &format!("{field}[{i}]"))))
                .collect()
        };
        let cert = LoweringCertificate {
            target: self.target,
            resolution: self.resolution,
            lengths: self.lengths.clone(),
            floors: ints(&self.floors, "floors")?,
            cumulative: ints(&self.cumulative, "cumulative")?,
        };
        if cert.floors.len() != cert.lengths.len() || cert.cumulative.len() != cert.lengths.len() {
            return Err(schema(path, "lengths, floors and cumulative differ in length"));
        }
        Ok(cert)
    }
}

impl SetDoc {
    /// Builds the set and, for staged documents, the attached certificate.
    pub fn build(&self, path: &str) -> Result<(AnySet, Option<LoweringCertificate>)> {
        let sys = |doc: &SystemDoc| doc.shift(&join(path, "system"));
        let plain = |s: SetRep| Ok((AnySet::Shift(s), None));
        match self {
            SetDoc::Whole(WholeDoc { system }) => match system.build(&join(path, "system"))? {
                System::Shift(s) => plain(SetRep::Whole(s)),
                System::Fan => Ok((AnySet::Fan(FanSet::whole()), None)),
            },
            SetDoc::Finite(FiniteDoc { system, points }) => {
                let s = sys(system)?;
                let pts = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| point(p, &s, &join(path, &format!("points[{i}]"))))
                    .collect::<Result<Vec<_>>>()?;
                plain(SetRep::Finite(
                    FiniteSet::new(s, pts).map_err(|e| schema(join(path, "points"), e))?,
                ))
            }
            SetDoc::Tree(TreeDoc {
                system,
                base,
                depth,
                words,
            }) => {
                let s = sys(system)?;
                let mut ws = Vec::new();
                for (i, w) in words.iter().enumerate() {
                    let at = join(path, &format!("words[{i}]"));
                    let word = parse_word(w).map_err(|e| schema(&at, e))?;
                    check_symbols(&word, s.alphabet_size()).map_err(|e| schema(&at, e))?;
                    ws.push(word);
                }
                plain(SetRep::Tree(
                    CylinderTree::new(s, *base, *depth, ws).map_err(|e| schema(join(path, "words"), e))?,
                ))
            }
            SetDoc::Staged(StagedDoc {
                system,
                limit,
                resolution,
                open_ended,
                include_limit,
                tail_agrees_through,
                stages,
                certificate,
            }) => {
                let s = sys(system)?;
                let x0 = point(limit, &s, &join(path, "limit"))?;
                let mut built = Vec::new();
                for (i, st) in stages.iter().enumerate() {
                    let at = join(path, &format!("stages[{i}]"));
                    let set = match (&st.points, &st.block) {
                        (Some(pts), None) => StageSet::Explicit(
                            pts.iter()
                                .enumerate()
                                .map(|(j, p)| point(p, &s, &join(&at, &format!("points[{j}]"))))
                                .collect::<Result<Vec<_>>>()?,
                        ),
                        (None, Some(b)) => {
                            let count = big(&b.count, &join(&at, "block.count"))?;
                            let stage = BlockStage::new(&s, &x0, WindowSpec::new(b.lo, b.hi), count)
                                .map_err(|e| schema(join(&at, "block"), e))?;
                            StageSet::Block(Arc::new(stage))
                        }
                        _ => return Err(schema(&at, "a stage needs exactly one of `points` or `block`")),
                    };
                    built.push(Stage { length: st.length, set });
                }
                let family = StagedFamily {
                    ambient: s,
                    limit: x0,
                    resolution: *resolution,
                    stages: built,
                    open_ended: *open_ended,
                    include_limit: *include_limit,
                    tail_agrees_through: *tail_agrees_through,
                };
                family.validate().map_err(|e| schema(join(path, "stages"), e))?;
                let cert = certificate
                    .as_ref()
                    .map(|c| c.build(&join(path, "certificate")))
                    .transpose()?;
                Ok((AnySet::Shift(SetRep::Staged(family)), cert))
            }
            SetDoc::EntropyPoints(EntropyPointsDoc {
                system,
                limit,
                resolution,
                differences_from,
                differences_to,
                include_limit,
            }) => {
                let s = sys(system)?;
                let x0 = point(limit, &s, &join(path, "limit"))?;
                let mut k = EntropyPointSet::new(s, x0, *resolution).map_err(|e| schema(path, e))?;
                k.first_difference = (*differences_from, *differences_to);
                k.include_limit = *include_limit;
                plain(SetRep::EntropyPoints(k))
            }
            SetDoc::LeftFree(LeftFreeDoc { system, point: p, from }) => {
                let s = sys(system)?;
                let x = point(p, &s, &join(path, "point"))?;
                plain(SetRep::LeftFree(LeftFreeSet {
                    ambient: s,
                    point: x,
                    from: *from,
                }))
            }
            SetDoc::Fan(FanDoc { apex, balls, tail }) => {
                let ball = |doc: &SetDoc, at: String| -> Result<SetRep> {
                    match doc.build(&at)?.0 {
                        AnySet::Shift(s) if *s.ambient() == ball_shift() => Ok(s),
                        _ => Err(schema(at, "ball subsets live in the full 2-shift")),
                    }
                };
                let mut bs = BTreeMap::new();
                for (n, doc) in balls {
                    bs.insert(*n, ball(doc, join(path, &format!("balls.{n}")))?);
                }
                let t = tail
                    .as_ref()
                    .map(|t| Ok::<_, Error>((t.from, ball(&t.set, join(path, "tail.set"))?)))
                    .transpose()?;
                Ok((
                    AnySet::Fan(FanSet::new(*apex, bs, t).map_err(|e| schema(path, e))?),
                    None,
                ))
            }
        }
    }

    pub fn of(set: &SetRep, cert: Option<&LoweringCertificate>) -> Result<Self> {
        let system = SystemDoc::of(set.ambient());
        Ok(match set {
            SetRep::Whole(_) => SetDoc::Whole(WholeDoc { system }),
            SetRep::Finite(f) => SetDoc::Finite(FiniteDoc {
                system,
                points: f.points.iter().map(|p| p.to_string()).collect(),
            }),
            SetRep::Tree(t) => SetDoc::Tree(TreeDoc {
                system,
                base: t.base,
                depth: t.depth,
                words: t.words.iter().map(|w| format_word(w)).collect(),
            }),
            SetRep::Staged(f) => SetDoc::Staged(StagedDoc {
                system,
                limit: f.limit.to_string(),
                resolution: f.resolution,
                open_ended: f.open_ended,
                include_limit: f.include_limit,
                tail_agrees_through: f.tail_agrees_through,
                stages: f
                    .stages
                    .iter()
                    .map(|st| match &st.set {
                        StageSet::Explicit(pts) => StageDoc {
                            length: st.length,
                            points: Some(pts.iter().map(|p| p.to_string()).collect()),
                            block: None,
                        },
                        StageSet::Block(b) => StageDoc {
                            length: st.length,
                            points: None,
                            block: Some(BlockDoc {
                                lo: b.region().lo,
                                hi: b.region().hi,
                                count: b.count().to_string(),
                            }),
                        },
                    })
                    .collect(),
                certificate: cert.map(CertificateDoc::of),
            }),
            SetRep::EntropyPoints(k) => SetDoc::EntropyPoints(EntropyPointsDoc {
                system,
                limit: k.limit.to_string(),
                resolution: k.resolution,
                differences_from: k.first_difference.0,
                differences_to: k.first_difference.1,
                include_limit: k.include_limit,
            }),
            SetRep::LeftFree(l) => SetDoc::LeftFree(LeftFreeDoc {
                system,
                point: l.point.to_string(),
                from: l.from,
            }),
            SetRep::Image(_) => return Err(Error::Unsupported("code images have no document form".into())),
        })
    }

    pub fn of_fan(f: &FanSet) -> Result<Self> {
        let balls = f
            .balls
            .iter()
            .map(|(n, s)| Ok((*n, SetDoc::of(s, None)?)))
            .collect::<Result<_>>()?;
        let tail = f
            .tail
            .as_ref()
            .map(|(n, s)| {
                Ok::<_, Error>(FanTailDoc {
                    from: *n,
                    set: Box::new(SetDoc::of(s, None)?),
                })
            })
            .transpose()?;
        Ok(SetDoc::Fan(FanDoc {
            apex: f.apex,
            balls,
            tail,
        }))
    }

    pub fn of_any(set: &AnySet, cert: Option<&LoweringCertificate>) -> Result<Self> {
        match set {
            AnySet::Shift(s) => SetDoc::of(s, cert),
            AnySet::Fan(f) => SetDoc::of_fan(f),
        }
    }
}

impl CodeDoc {
    pub fn build(&self) -> Result<SlidingBlockCode> {
        let CodeDoc::Code(CodeBody {
            source,
            target,
            memory,
            anticipation,
            rule,
        }) = self;
        let s = source.shift("source")?;
        let t = target.shift("target")?;
        let mut table: BTreeMap<Word, Symbol> = BTreeMap::new();
        for (w, b) in rule {
            let at = format!("rule.{w}");
            let word = parse_word(w).map_err(|e| schema(&at, e))?;
            check_symbols(&word, s.alphabet_size()).map_err(|e| schema(&at, e))?;
            let image = parse_word(b).map_err(|e| schema(&at, e))?;
            if image.len() != 1 {
                return Err(schema(&at, "image must be a single symbol"));
            }
            check_symbols(&image, t.alphabet_size()).map_err(|e| schema(&at, e))?;
            table.insert(word, image[0]);
        }
        SlidingBlockCode::new(s, t, *memory, *anticipation, &table).map_err(|e| schema("rule", e))
    }

    pub fn of(code: &SlidingBlockCode) -> Self {
        CodeDoc::Code(CodeBody {
            source: SystemDoc::of(code.source()),
            target: SystemDoc::of(code.target()),
            memory: code.memory(),
            anticipation: code.anticipation(),
            rule: code
                .rule_table()
                .into_iter()
                .map(|(w, b)| (format_word(&w), format_word(&[b])))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowering::{entropy_point_family, lemma_good_lower, verify_certificate};

    fn set_doc(text: &str) -> SetDoc {
        from_json(text).unwrap()
    }

    #[test]
    fn golden_mean_document() {
        let doc: SystemDoc = from_json(r#"{"kind": "subshift", "alphabet": 2, "forbidden": ["11"]}"#).unwrap();
        match doc.build("").unwrap() {
            System::Shift(s) => assert_eq!(s, Subshift::golden_mean()),
            System::Fan => panic!("expected a subshift"),
        }
    }

    #[test]
    fn bad_symbol_names_its_field() {
        let doc = set_doc(
            r#"{"kind": "finite", "system": {"kind": "subshift", "alphabet": 2}, "points": ["0.0.0@0", "0.3.0@0"]}"#,
        );
        match doc.build("").unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "points[1]"),
            e => panic!("{e}"),
        }
        let forbidden = r#"{"kind": "subshift", "alphabet": 2, "forbidden": ["13"]}"#;
        match from_json::<SystemDoc>(forbidden).unwrap().build("").unwrap_err() {
            Error::Schema { path, .. } => assert_eq!(path, "forbidden[0]"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = from_json::<SystemDoc>(r#"{"kind": "subshift", "alphabet": 2, "colour": 1}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
        let nested = r#"{"kind": "staged", "system": {"kind": "subshift", "alphabet": 2}, "limit": "0.0.0@0",
            "resolution": 2, "stages": [{"length": 3, "points": [], "extra": 0}]}"#;
        match from_json::<SetDoc>(nested).unwrap_err() {
            Error::Schema { path, .. } => assert!(path.starts_with("stages[0]"), "{path}"),
            e => panic!("{e}"),
        }
        let deep = r#"{"kind": "fan", "apex": true, "balls": {"2": {"kind": "whole", "system": {"kind": "subshift", "alphabet": 2, "x": 1}}}}"#;
        match from_json::<SetDoc>(deep).unwrap_err() {
            Error::Schema { path, message } => assert_eq!(path, "balls.2.system.x", "{message}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn staged_round_trip_keeps_certificate() {
        let src = entropy_point_family(&Subshift::full(2), &BiInfinitePoint::constant(0), 2).unwrap();
        let (fam, cert) = lemma_good_lower(&src, 0.3, 5, 10).unwrap();
        let text = to_json(&SetDoc::of(&SetRep::Staged(fam), Some(&cert)).unwrap());
        let doc: SetDoc = from_json(&text).unwrap();
        let (set, back) = doc.build("").unwrap();
        let back = back.unwrap();
        assert_eq!(back, cert);
        let AnySet::Shift(SetRep::Staged(f)) = &set else {
            panic!("staged")
        };
        f.validate().unwrap();
        assert!(verify_certificate(f, &back).unwrap().holds());
        assert_eq!(to_json(&SetDoc::of_any(&set, Some(&back)).unwrap()), text);
    }

    #[test]
    fn every_kind_round_trips_byte_stably() {
        let docs = [
            r#"{"kind": "whole", "system": {"kind": "fan"}}"#,
            r#"{"kind": "finite", "system": {"kind": "subshift", "alphabet": 2, "forbidden": ["11"]}, "points": ["0.10.0@-1", "0.0.0"]}"#,
            r#"{"kind": "tree", "system": {"kind": "subshift", "alphabet": 3}, "base": -1, "depth": 2, "words": ["01", "22"]}"#,
            r#"{"kind": "entropy-points", "system": {"kind": "subshift", "alphabet": 2}, "limit": "0.0.0@0", "resolution": 2, "differences_from": 4}"#,
            r#"{"kind": "left-free", "system": {"kind": "subshift", "alphabet": 2}, "point": "1.0.1@0", "from": 0}"#,
            r#"{"kind": "fan", "apex": true, "balls": {"2": {"kind": "finite", "system": {"kind": "subshift", "alphabet": 2}, "points": ["0.1.0@0"]}},
                "tail": {"from": 5, "set": {"kind": "whole", "system": {"kind": "subshift", "alphabet": 2}}}}"#,
        ];
        for d in docs {
            let (set, _) = set_doc(d).build("").unwrap();
            let once = to_json(&SetDoc::of_any(&set, None).unwrap());
            let (again, _) = set_doc(&once).build("").unwrap();
            assert_eq!(to_json(&SetDoc::of_any(&again, None).unwrap()), once, "{d}");
        }
    }

    #[test]
    fn code_round_trip() {
        let text = r#"{"kind": "code", "source": {"kind": "subshift", "alphabet": 4}, "target": {"kind": "subshift", "alphabet": 2},
            "rule": {"0": "0", "1": "1", "2": "0", "3": "1"}}"#;
        let AnyDoc::Code(doc) = parse_any(text).unwrap() else {
            panic!("code")
        };
        let code = doc.build().unwrap();
        assert_eq!(CodeDoc::of(&code), doc);
    }

    #[test]
    fn run_config_defaults() {
        let c: RunConfig = from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.resolutions, vec![2, 3, 4]);
        assert_eq!(c.n_max, 24);
        assert!(from_json::<RunConfig>(r#"{"nmax": 3}"#).is_err());
    }
}
