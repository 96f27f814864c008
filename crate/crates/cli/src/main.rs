//! `symdyn`: batch front-end over the symdyn library.
//!
//! Exit codes: 0 success, 2 unreadable or schema-invalid input, 3 a
//! precondition of the requested computation fails, 4 a verification fails.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use symdyn::dimension::dim_entropy;
use symdyn::entropy::{growth_estimate, h_star_profile, separated_count, sft_entropy_exact};
use symdyn::factor::sandwich_check;
use symdyn::fan::{ball_shift, fan_h_star, fan_lower, FanPoint};
use symdyn::lowering::{hul_lower_certified, verify_certificate, LowerConfig};
use symdyn::samples::{random_fan_point, random_point, rng};
use symdyn::schema::{
    from_json, parse_any, to_json, AnyDoc, AnySet, LowerRequest, LoweredDoc, LoweredKind, RunConfig, SetDoc, System,
    ToolDoc, WholeDoc,
};
use symdyn::subset::SetRep;
use symdyn::Error;

const TREE_CAP: usize = 1 << 20;

#[derive(Parser)]
#[command(name = "symdyn", version, about = "Entropy of subsets of shift spaces")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Exact entropy of a system.
    Entropy(Common),
    /// Separated-set counts and slopes of a set, as CSV.
    SubsetEntropy(Common),
    /// Dimensional entropy bracket of a set.
    DimEntropy(Common),
    /// A subset of the input with the target entropy.
    Lower {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: f64,
    },
    /// Tail-entropy profile, as CSV.
    Hexp {
        #[command(flatten)]
        common: Common,
        /// Extra random sample points; needs a seed.
        #[arg(long, default_value_t = 0)]
        sample: usize,
    },
    /// Entropy sandwich for a sliding block code.
    FactorCheck {
        #[command(flatten)]
        common: Common,
        /// Set in the code's source; defaults to the whole source.
        #[arg(long)]
        set: Option<PathBuf>,
    },
    /// Invariant checks on a document; nonzero exit on any failure.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Resolutions: `3`, `2,3,4` or `1..6`.
    #[arg(long, value_parser = parse_range)]
    m: Option<Resolutions>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    lambda_tol: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    min_length: Option<u64>,
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Resolutions(Vec<u32>);

fn parse_range(s: &str) -> Result<Resolutions, String> {
    let bad = |_| format!("not a resolution list: {s}");
    let v: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.parse().map_err(bad)?, b.trim_start_matches('=').parse().map_err(bad)?);
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(bad))
            .collect::<Result<_, _>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err(format!("resolutions must be positive: {s}"));
    }
    Ok(Resolutions(v))
}

enum Failure {
    Schema(String),
    Precondition(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Schema { .. } => Failure::Schema(e.to_string()),
            other => Failure::Precondition(other.to_string()),
        }
    }
}

type Outcome = Result<String, Failure>;

impl Common {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => {
                from_json::<RunConfig>(&read(p)?).map_err(|e| Failure::Schema(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(m) = &self.m {
            c.resolutions = m.0.clone();
        }
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        over!(n_max, lambda_tol, depth, stages, min_length, slack);
        if self.seed.is_some() {
            c.seed = self.seed;
        }
        if c.resolutions.is_empty() {
            return Err(Failure::Schema("resolutions: empty list".into()));
        }
        Ok(c)
    }

    fn doc(&self) -> Result<AnyDoc, Failure> {
        parse_any(&read(&self.input)?).map_err(|e| Failure::Schema(format!("{}: {e}", self.input.display())))
    }

    /// The input as a set; a system document stands for its whole space.
    fn set(&self) -> Result<(SetDoc, AnySet), Failure> {
        let doc = match self.doc()? {
            AnyDoc::System(s) => SetDoc::Whole(WholeDoc { system: s }),
            AnyDoc::Set(s) => s,
            _ => {
                return Err(Failure::Schema(format!(
                    "{}: expected a system or set document",
                    self.input.display()
                )))
            }
        };
        let (set, _) = doc
            .build("")
            .map_err(|e| Failure::Schema(format!("{}: {e}", self.input.display())))?;
        Ok((doc, set))
    }
}

fn read(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| Failure::Schema(format!("{}: {e}", p.display())))
}

/// Writes through a sibling temporary file so readers never see a partial
/// artifact.
fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Precondition(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let io = |e: std::io::Error| Failure::Precondition(format!("{}: {e}", path.display()));
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn entropy(c: &Common) -> Outcome {
    let shift = match c.set()?.1 {
        AnySet::Shift(SetRep::Whole(s)) => s,
        // Each ball is a full 2-shift and the apex is fixed.
        AnySet::Fan(f) if f.tail.is_some() => ball_shift(),
        _ => return Err(Failure::Precondition("entropy needs a system document".into())),
    };
    let tol = c.config()?.lambda_tol.min(1e-12);
    let b = sft_entropy_exact(&shift, tol)?;
    Ok(format!("{:.12}\n", b.value()))
}

fn subset_entropy(c: &Common) -> Outcome {
    let cfg = c.config()?;
    let set = c.set()?.1;
    let mut out = String::from("n,m,s_n,slope\n");
    for &m in &cfg.resolutions {
        for n in 1..=cfg.n_max {
            let s = match &set {
                AnySet::Shift(s) => separated_count(s, n, m),
                AnySet::Fan(f) => f.census(n, m),
            };
            // Finite-depth trees and certified families end the table early.
            let s = match s {
                Err(Error::WindowExceedsDepth { .. } | Error::UncertifiedTail { .. }) => break,
                other => other?,
            };
            let slope = symdyn::bigmath::ln_big(&s) / n as f64;
            writeln!(out, "{n},{m},{s},{slope:.12}").expect("string write");
        }
    }
    Ok(out)
}

fn dim(c: &Common) -> Outcome {
    let cfg = c.config()?;
    let AnySet::Shift(set) = c.set()?.1 else {
        return Err(Failure::Precondition(
            "dimensional entropy of fan subsets is not supported".into(),
        ));
    };
    let r = dim_entropy(&set, cfg.depth, cfg.lambda_tol, TREE_CAP)?;
    let schedule: Vec<_> = r
        .schedule
        .iter()
        .map(|b| serde_json::json!({"k": b.k, "lambda_low": b.lambda_low, "lambda_high": b.lambda_high}))
        .collect();
    let record = serde_json::json!({
        "lambda_low": r.lambda_low,
        "lambda_high": r.lambda_high,
        "depth": r.depth,
        "k_floor": r.k_floor,
        "schedule": schedule,
        "cut_trace": r.cut_trace,
    });
    Ok(to_json(&record))
}

fn lower_config(cfg: &RunConfig) -> LowerConfig {
    LowerConfig {
        resolution: cfg.resolutions[0],
        stages: cfg.stages,
        min_length: cfg.min_length,
        ..LowerConfig::default()
    }
}

fn lowered(input: &SetDoc, set: &AnySet, target: f64, cfg: &RunConfig) -> Result<LoweredDoc, Failure> {
    let lc = lower_config(cfg);
    let out = match set {
        AnySet::Shift(s) => {
            let (low, cert) = hul_lower_certified(s, target, &lc)?;
            SetDoc::of(&low, cert.as_ref())?
        }
        AnySet::Fan(f) => SetDoc::of_fan(&fan_lower(f, target, &lc)?)?,
    };
    Ok(LoweredDoc {
        kind: LoweredKind::Lowered,
        tool: ToolDoc {
            name: "symdyn".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        config: cfg.clone(),
        request: LowerRequest {
            input: input.clone(),
            target,
        },
        set: out,
    })
}

fn lower(c: &Common, target: f64) -> Outcome {
    let cfg = c.config()?;
    let (doc, set) = c.set()?;
    Ok(to_json(&lowered(&doc, &set, target, &cfg)?))
}

fn hexp(c: &Common, sample: usize) -> Outcome {
    let cfg = c.config()?;
    if sample > 0 && cfg.seed.is_none() {
        return Err(Failure::Schema(
            "seed: random sampling needs --seed or a seed in the config".into(),
        ));
    }
    let mut r = rng(cfg.seed.unwrap_or(0));
    let mut out = String::from("m,epsilon,h_star,exact\n");
    match c.set()?.1 {
        AnySet::Shift(SetRep::Whole(s)) => {
            let mut pts = vec![s.simplest_periodic_point()];
            for _ in 0..sample {
                pts.push(random_point(&mut r, &s, 6)?);
            }
            for row in h_star_profile(&s, &pts, &cfg.resolutions, cfg.n_max)? {
                writeln!(out, "{},{},{:.12},{}", row.m, row.epsilon, row.h_star, row.exact).expect("string write");
            }
        }
        AnySet::Fan(f) if f.apex && f.tail.is_some() => {
            let pts = (0..sample)
                .map(|_| random_fan_point(&mut r, 8))
                .collect::<Result<Vec<FanPoint>, _>>()?;
            for row in fan_h_star(&pts, &cfg.resolutions, cfg.n_max)? {
                writeln!(out, "{},{},{:.12},false", row.m, row.epsilon, row.h_star).expect("string write");
            }
        }
        _ => return Err(Failure::Precondition("hexp needs a system document".into())),
    }
    Ok(out)
}

#[derive(serde::Serialize)]
struct SandwichRecord {
    source: f64,
    image: f64,
    fiber: f64,
    defect: f64,
    census_chain_holds: bool,
    lower_holds: bool,
    upper_holds: bool,
}

fn factor_check(c: &Common, set: Option<&Path>) -> Outcome {
    let cfg = c.config()?;
    let code = match c.doc()? {
        AnyDoc::Code(d) => Arc::new(
            d.build()
                .map_err(|e| Failure::Schema(format!("{}: {e}", c.input.display())))?,
        ),
        _ => {
            return Err(Failure::Schema(format!(
                "{}: expected a code document",
                c.input.display()
            )))
        }
    };
    let e = match set {
        None => SetRep::Whole(code.source().clone()),
        Some(p) => {
            let doc: SetDoc = from_json(&read(p)?).map_err(|e| Failure::Schema(format!("{}: {e}", p.display())))?;
            match doc
                .build("")
                .map_err(|e| Failure::Schema(format!("{}: {e}", p.display())))?
                .0
            {
                AnySet::Shift(s) => s,
                AnySet::Fan(_) => return Err(Failure::Precondition("codes act on subshifts".into())),
            }
        }
    };
    let m = cfg.resolutions[0];
    let r = sandwich_check(&code, &e, m, cfg.n_max, cfg.n_max.min(16), cfg.slack)?;
    let text = to_json(&SandwichRecord {
        source: r.source.value,
        image: r.image.value,
        fiber: r.fiber.value,
        defect: r.defect,
        census_chain_holds: r.census_chain_holds,
        lower_holds: r.lower_holds,
        upper_holds: r.upper_holds,
    });
    if r.holds() {
        Ok(text)
    } else {
        print!("{text}");
        Err(Failure::Verification("the entropy sandwich fails".into()))
    }
}

/// Collects named pass/fail lines.
struct Checks {
    lines: String,
    failed: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            lines: String::new(),
            failed: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, ok: bool) {
        writeln!(self.lines, "{} {name}", if ok { "ok  " } else { "FAIL" }).expect("string write");
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn finish(self) -> Outcome {
        if self.failed.is_empty() {
            Ok(self.lines)
        } else {
            print!("{}", self.lines);
            Err(Failure::Verification(format!("failed: {}", self.failed.join(", "))))
        }
    }
}

fn verify_set(checks: &mut Checks, doc: &SetDoc, cfg: &RunConfig) -> Result<(), Failure> {
    // The document parsed, so a failed build is a failed check.
    let (set, cert) = match doc.build("") {
        Ok(b) => b,
        Err(e) => {
            checks.check(&format!("document builds and validates ({e})"), false);
            return Ok(());
        }
    };
    checks.check("document builds and validates", true);
    match &set {
        AnySet::Shift(s) => {
            if let (SetRep::Staged(f), Some(cert)) = (s, &cert) {
                let report = verify_certificate(f, cert)?;
                checks.check("certificate identities", report.identities_hold);
                checks.check(
                    &format!("certificate bounds over {} horizons", report.horizons_checked),
                    report.bounds_hold,
                );
            }
            // Census is monotone in n and in the resolution.
            let mut monotone = true;
            for &m in &cfg.resolutions {
                let counts: Vec<_> = (1..=cfg.n_max.min(12))
                    .map(|n| separated_count(s, n, m))
                    .collect::<Result<_, _>>()?;
                monotone &= counts.windows(2).all(|w| w[0] <= w[1]);
            }
            checks.check("separated counts grow with n", monotone);
        }
        AnySet::Fan(f) => {
            let mut monotone = true;
            for &m in &cfg.resolutions {
                let counts: Vec<_> = (1..=cfg.n_max.min(12))
                    .map(|n| f.census(n, m))
                    .collect::<Result<_, _>>()?;
                monotone &= counts.windows(2).all(|w| w[0] <= w[1]);
            }
            checks.check("fan census grows with n", monotone);
        }
    }
    Ok(())
}

fn verify(c: &Common) -> Outcome {
    let mut checks = Checks::new();
    match c.doc()? {
        AnyDoc::Lowered(d) => {
            let cfg = d.config.clone();
            checks.check("tool name", d.tool.name == "symdyn");
            verify_set(&mut checks, &d.set, &cfg)?;
            let (input, _) = d.request.input.build("")?;
            let again = lowered(&d.request.input, &input, d.request.target, &cfg)?;
            checks.check(
                "rebuild reproduces the set byte for byte",
                to_json(&again.set) == to_json(&d.set),
            );
        }
        AnyDoc::Set(d) => {
            let cfg = c.config()?;
            verify_set(&mut checks, &d, &cfg)?;
        }
        AnyDoc::System(d) => {
            let cfg = c.config()?;
            match d.build("")? {
                System::Shift(s) => {
                    let exact = sft_entropy_exact(&s, 1e-12)?;
                    checks.check("entropy bracket is ordered", exact.lower <= exact.upper);
                    let m = cfg.resolutions[0];
                    let est = growth_estimate(&SetRep::Whole(s), m, cfg.n_max.max(4 * m))?;
                    checks.check(
                        "growth estimate matches the exact entropy",
                        (est.value - exact.value()).abs() <= cfg.slack,
                    );
                }
                System::Fan => {
                    let f = symdyn::fan::FanSet::whole();
                    verify_set(&mut checks, &SetDoc::of_fan(&f)?, &cfg)?;
                }
            }
        }
        AnyDoc::Code(d) => {
            let cfg = c.config()?;
            let code = Arc::new(d.build()?);
            let whole = SetRep::Whole(code.source().clone());
            let r = sandwich_check(
                &code,
                &whole,
                cfg.resolutions[0],
                cfg.n_max,
                cfg.n_max.min(16),
                cfg.slack,
            )?;
            checks.check("entropy sandwich on the whole source", r.holds());
        }
    }
    checks.finish()
}

fn run(verb: &Verb) -> (Outcome, Option<&Path>) {
    match verb {
        Verb::Entropy(c) => (entropy(c), c.out.as_deref()),
        Verb::SubsetEntropy(c) => (subset_entropy(c), c.out.as_deref()),
        Verb::DimEntropy(c) => (dim(c), c.out.as_deref()),
        Verb::Lower { common, target } => (lower(common, *target), common.out.as_deref()),
        Verb::Hexp { common, sample } => (hexp(common, *sample), common.out.as_deref()),
        Verb::FactorCheck { common, set } => (factor_check(common, set.as_deref()), common.out.as_deref()),
        Verb::Verify(c) => (verify(c), c.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (outcome, out) = run(&cli.verb);
    let result = outcome.and_then(|text| match out {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Schema(m) => (2, m),
                Failure::Precondition(m) => (3, m),
                Failure::Verification(m) => (4, m),
            };
            eprintln!("symdyn: {msg}");
            ExitCode::from(code)
        }
    }
}
