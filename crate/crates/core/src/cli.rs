//! Command-line front end. Every command prints a JSON [`RunReport`];
//! exit status 0 = no failing verdict, 1 = some verdict failed, 2 = input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::audit::{
    check_b_coefficient, check_generalized_triangle, check_identity, check_nu_generalized, check_symmetry, check_triangle,
    check_uniform_regularity, coherence_tail_report, min_b_coefficient, AuditReport, Verdict, COHERENCE_FLOOR, COHERENCE_TOL,
};
use crate::chain::{
    chain_metric_with, set_chain_distance, snowflake_exponent, Hypotheses, Regime, SandwichVerdict, SetChainProblem,
};
use crate::discretize::{
    au_distance, check_au_conditions, chittenden_discretize, nw_ball_families, two_gen_discretize, ChittendenOptions,
};
use crate::families::BallFamilies;
use crate::fixed_point::{
    banach_iterate_coord, banach_iterate_index, geometric_decay_check, CoordMap, DistanceRule, IterationTrace, StopReason,
};
use crate::gallery::{
    gen_2gen_slow, gen_au_counterexample, gen_branciari4, gen_example_387, gen_example_399, gen_lp_truncated, gen_noncoherent,
    gen_random, gen_square_line, GallerySpec, RandomKind,
};
use crate::io::{space_from_csv, space_from_json, space_to_csv};
use crate::scalar::{Exponent, Mode, Scalar};
use crate::space::{ClaimedClass, DistanceSpace, SpaceOptions};
use crate::threshold::{LocalThreshold, Threshold};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "metrize", version, about = "Metrization toolkit for finite distance spaces")]
pub struct Cli {
    /// Arithmetic mode for loaded spaces.
    #[arg(long, global = true, default_value = "exact")]
    pub mode: Mode,
    /// Comparison tolerance for float values; also the stopping tolerance of `fixpoint`.
    #[arg(long, global = true, default_value = "1e-12")]
    pub tol: String,
    /// Seed for random generators.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report (or the generated instance) here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

/// Options for reading a distance space.
#[derive(Debug, Args)]
pub struct SpaceInput {
    /// CSV or JSON file, or `gallery:NAME[:PARAM…]`.
    pub space: String,
    /// Claimed class for CSV input.
    #[arg(long, default_value = "raw-distance")]
    pub class: ClaimedClass,
    /// Accept zero off-diagonal entries.
    #[arg(long)]
    pub allow_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Chittenden,
    Au,
    Nw,
    Twogen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    #[value(name = "frink-IV")]
    FrinkIv,
    #[value(name = "pS")]
    Ps,
    #[value(name = "aIN")]
    Ain,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run axiom audits.
    Audit {
        #[command(flatten)]
        input: SpaceInput,
        /// Comma list from I, II, III, IV, IV-strict, V, K, nu=N.
        #[arg(long, default_value = "I,II,III,IV")]
        axioms: String,
        /// JSON file with the threshold for (V): a list of [eps, phi] pairs, or a tagged
        /// threshold object such as {"linear": "1/2"}.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Chain metric with sandwich verification.
    Induce {
        #[command(flatten)]
        input: SpaceInput,
        /// `auto` or a rational in (0, 1].
        #[arg(long, default_value = "auto")]
        exponent: String,
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        /// Exponent for the aIN regime.
        #[arg(long)]
        beta: Option<String>,
    },
    /// Discretize a space (or, for `au`, a families file).
    Discretize {
        #[command(flatten)]
        input: SpaceInput,
        #[arg(long, value_enum)]
        method: Method,
        /// JSON threshold file (`chittenden`); defaults to eps/(2K) for b-metrics, eps/2 otherwise.
        #[arg(long)]
        phi: Option<String>,
        /// Number of levels for `nw`.
        #[arg(long, default_value_t = 8)]
        levels: usize,
        /// Divide by the maximum entry first when it exceeds 1 (`chittenden`).
        #[arg(long)]
        rescale: bool,
    },
    /// Banach iteration on an index map or a coordinate map.
    Fixpoint {
        /// Space for index maps.
        space: Option<String>,
        /// Index map as a comma list of labels (image of each point in order).
        #[arg(long, conflicts_with = "coord")]
        map: Option<String>,
        /// `affine:LAMBDA,C`.
        #[arg(long)]
        coord: Option<String>,
        /// Domain `LO,HI` for the coordinate map.
        #[arg(long, default_value = "0,1")]
        domain: String,
        /// Distance rule `powQ` for coordinate maps.
        #[arg(long, default_value = "pow2")]
        dist: String,
        /// Start: a label (index maps) or a number (coordinate maps).
        #[arg(long)]
        x0: String,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// Check geometric decay of the steps with this ratio (default: the estimated modulus).
        #[arg(long)]
        decay: Option<String>,
        /// Also write step distances as CSV.
        #[arg(long)]
        steps_csv: Option<String>,
        #[arg(long, default_value = "raw-distance")]
        class: ClaimedClass,
    },
    /// Set-chain distance on leveled families.
    Setchain {
        /// Families JSON or `gallery:au-counterexample[:GRID[:LEVELS]]`.
        families: String,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
    },
    /// Emit a gallery instance as JSON or CSV.
    Gallery {
        /// square-line, example-399, example-387, lp, branciari4, 2gen-slow, noncoherent, au-counterexample, random.
        name: String,
        /// Size or truncation parameter.
        #[arg(long)]
        n: Option<u32>,
        /// Levels (au-counterexample).
        #[arg(long)]
        levels: Option<u32>,
        /// Exponent (lp).
        #[arg(long)]
        p: Option<String>,
        /// Vectors (lp): JSON list of lists; random integer vectors when absent.
        #[arg(long)]
        vectors: Option<String>,
        /// Dimension of random lp vectors.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// metric, bmetric(q) or twogen (random).
        #[arg(long, default_value = "metric")]
        kind: String,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageVerdict {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub verdict: StageVerdict,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDigest {
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub input_digest: Vec<InputDigest>,
    pub stages: Vec<Stage>,
    pub assumptions: Vec<String>,
    pub exit_status: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunReport {
    fn new(command: Vec<String>) -> Self {
        RunReport { command, input_digest: Vec::new(), stages: Vec::new(), assumptions: Vec::new(), exit_status: 0, error: None }
    }

    fn stage(&mut self, name: &str, verdict: StageVerdict, result: impl Serialize) {
        let result = serde_json::to_value(result).expect("report types serialize");
        self.stages.push(Stage { name: name.to_string(), verdict, result });
    }

    fn audit(&mut self, name: &str, r: &AuditReport) {
        let v = match r.verdict {
            Verdict::Pass => StageVerdict::Pass,
            Verdict::Fail => StageVerdict::Fail,
            Verdict::Assumed => StageVerdict::Info,
        };
        self.stage(name, v, r);
    }

    fn assume(&mut self, a: impl Into<String>) {
        let a = a.into();
        if !self.assumptions.contains(&a) {
            self.assumptions.push(a);
        }
    }

    fn finish(&mut self) {
        self.exit_status = if self.stages.iter().any(|s| s.verdict == StageVerdict::Fail) { EXIT_VIOLATIONS } else { EXIT_CLEAN };
    }
}

#[derive(Debug)]
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type CliResult<T> = Result<T, InputError>;

struct Ctx {
    mode: Mode,
    tol: f64,
    tol_scalar: Scalar,
    seed: u64,
    out: Option<String>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_source(src: &str, report: &mut RunReport) -> CliResult<String> {
    let text = fs::read_to_string(src).map_err(|e| InputError(format!("{src}: {e}")))?;
    report.input_digest.push(InputDigest { source: src.to_string(), sha256: digest(text.as_bytes()) });
    Ok(text)
}

/// Gallery instance named by `gallery:NAME[:PARAM…]`.
enum Generated {
    Space { spec: GallerySpec, space: DistanceSpace, extras: Value },
    Families { spec: GallerySpec, families: BallFamilies },
}

struct GalleryParams {
    n: Option<u32>,
    levels: Option<u32>,
    p: Option<String>,
    vectors: Option<Vec<Vec<Scalar>>>,
    dim: usize,
    kind: String,
}

fn generate(name: &str, gp: &GalleryParams, seed: u64) -> CliResult<Generated> {
    let spec = |params: Value, description: &str| GallerySpec {
        name: name.to_string(),
        parameters: params,
        description: description.to_string(),
    };
    let space = |spec, space| Generated::Space { spec, space, extras: Value::Null };
    Ok(match name {
        "square-line" => {
            let n = gp.n.unwrap_or(16);
            space(spec(json!({ "n": n }), "squared distance on the grid {k/n}"), gen_square_line(n)?)
        }
        "example-399" => {
            let n = gp.n.unwrap_or(64);
            space(spec(json!({ "N": n }), "four-case b-metric with value 4 off the even side"), gen_example_399(n)?)
        }
        "example-387" => {
            let n = gp.n.unwrap_or(64);
            space(spec(json!({ "N": n }), "four-case b-metric with value 1/4 off the even side"), gen_example_387(n)?)
        }
        "branciari4" => space(spec(json!({}), "four-point 2-generalized metric that is not a metric"), gen_branciari4()),
        "2gen-slow" => {
            let n = gp.n.unwrap_or(16);
            space(spec(json!({ "N": n }), "2-generalized metric that is not continuous"), gen_2gen_slow(n)?)
        }
        "noncoherent" => {
            let n = gp.n.unwrap_or(50);
            let ex = gen_noncoherent(n)?;
            let extras = json!({
                "witness": {
                    "a": ex.space.label(ex.a),
                    "a_n": ex.a_seq.iter().map(|&i| ex.space.label(i)).collect::<Vec<_>>(),
                    "b_n": ex.b_seq.iter().map(|&i| ex.space.label(i)).collect::<Vec<_>>(),
                    "seq_aan": ex.seq_aan,
                    "seq_anbn": ex.seq_anbn,
                    "seq_abn": ex.seq_abn,
                },
                "coherence": coherence_tail_report(&ex.seq_aan, &ex.seq_anbn, &ex.seq_abn, COHERENCE_TOL, COHERENCE_FLOOR)?,
            });
            Generated::Space { spec: spec(json!({ "N": n }), "symmetric distance that is not coherent"), space: ex.space, extras }
        }
        "lp" => {
            let p: Exponent = gp.p.as_deref().unwrap_or("1/2").parse()?;
            let vectors = match &gp.vectors {
                Some(v) => v.clone(),
                None => random_vectors(gp.n.unwrap_or(6) as usize, gp.dim, seed),
            };
            let lp = gen_lp_truncated(&p, &vectors)?;
            Generated::Space {
                spec: spec(json!({ "p": p, "points": vectors.len(), "seed": seed }), "l^p quasi-norm distance on given vectors"),
                space: lp.space,
                extras: json!({ "companion_exponent": lp.companion }),
            }
        }
        "au-counterexample" => {
            let g = gp.n.unwrap_or(64);
            let l = gp.levels.unwrap_or(20);
            let ex = gen_au_counterexample(g, l)?;
            Generated::Families {
                spec: spec(json!({ "n_grid": g, "n_levels": l }), "balls of radius 2/m on a grid of [0,1]"),
                families: ex.families,
            }
        }
        "random" => {
            let kind: RandomKind = gp.kind.parse()?;
            let n = gp.n.unwrap_or(8) as usize;
            space(
                spec(json!({ "kind": kind.to_string(), "n": n, "seed": seed }), "seeded random instance"),
                gen_random(&kind, n, seed)?,
            )
        }
        other => return Err(InputError(format!("unknown gallery instance `{other}`"))),
    })
}

fn random_vectors(n: usize, dim: usize, seed: u64) -> Vec<Vec<Scalar>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<Scalar>> = Vec::new();
    while out.len() < n {
        let v: Vec<Scalar> = (0..dim.max(1)).map(|_| Scalar::int(rng.random_range(-10..=10))).collect();
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// `gallery:NAME[:A[:B]]`: `A` is the size (or kind for `random`), `B` the levels (or size).
fn parse_pseudo(src: &str) -> Option<(String, GalleryParams)> {
    let rest = src.strip_prefix("gallery:")?;
    let mut parts = rest.split(':');
    let name = parts.next()?.to_string();
    let a = parts.next();
    let b = parts.next();
    let mut gp = GalleryParams { n: None, levels: None, p: None, vectors: None, dim: 2, kind: "metric".into() };
    match name.as_str() {
        "random" => {
            if let Some(k) = a {
                gp.kind = k.to_string();
            }
            gp.n = b.and_then(|v| v.parse().ok());
        }
        "lp" => {
            gp.p = a.map(str::to_string);
            gp.n = b.and_then(|v| v.parse().ok());
        }
        _ => {
            gp.n = a.and_then(|v| v.parse().ok());
            gp.levels = b.and_then(|v| v.parse().ok());
        }
    }
    Some((name, gp))
}

fn load_space(input: &SpaceInput, ctx: &Ctx, report: &mut RunReport) -> CliResult<DistanceSpace> {
    let options = SpaceOptions { allow_degenerate: input.allow_degenerate, tol: ctx.tol };
    let space = if let Some((name, gp)) = parse_pseudo(&input.space) {
        report.input_digest.push(InputDigest { source: input.space.clone(), sha256: digest(input.space.as_bytes()) });
        match generate(&name, &gp, ctx.seed)? {
            Generated::Space { space, .. } => space,
            Generated::Families { .. } => return Err(InputError(format!("{name} yields families, not a space"))),
        }
    } else {
        let text = read_source(&input.space, report)?;
        if has_ext(&input.space, "csv") {
            space_from_csv(&text, ctx.mode, input.class.clone(), options)?
        } else {
            space_from_json(&text, Some(ctx.mode), ctx.tol)?
        }
    };
    let space = space.to_mode(ctx.mode);
    Ok(if space.tol() != ctx.tol { rebuild_with_tol(space, ctx.tol)? } else { space })
}

fn rebuild_with_tol(space: DistanceSpace, tol: f64) -> CliResult<DistanceSpace> {
    let options = SpaceOptions { tol, ..space.options() };
    Ok(DistanceSpace::new(space.points().clone(), space.rows(), space.claimed_class().clone(), options)?)
}

fn load_families(src: &str, ctx: &Ctx, report: &mut RunReport) -> CliResult<BallFamilies> {
    if let Some((name, gp)) = parse_pseudo(src) {
        report.input_digest.push(InputDigest { source: src.to_string(), sha256: digest(src.as_bytes()) });
        return match generate(&name, &gp, ctx.seed)? {
            Generated::Families { families, .. } => Ok(families),
            Generated::Space { .. } => Err(InputError(format!("{name} yields a space, not families"))),
        };
    }
    let text = read_source(src, report)?;
    let v: Value = serde_json::from_str(&text)?;
    let v = v.get("families").cloned().unwrap_or(v);
    Ok(serde_json::from_value(v)?)
}

fn has_ext(path: &str, ext: &str) -> bool {
    Path::new(path).extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn load_threshold(src: &str, report: &mut RunReport) -> CliResult<Threshold> {
    let text = read_source(src, report)?;
    if let Ok(pairs) = serde_json::from_str::<Vec<(Scalar, Scalar)>>(&text) {
        return Ok(Threshold::table(pairs)?);
    }
    Ok(serde_json::from_str(&text)?)
}

fn default_threshold(space: &DistanceSpace) -> Threshold {
    match space.claimed_class() {
        ClaimedClass::BMetric(k) => Threshold::b_metric(k),
        _ => Threshold::half(),
    }
}

/// Parses arguments and runs; returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let command: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_CLEAN,
                _ => EXIT_INPUT,
            };
        }
    };
    let mut report = RunReport::new(command);
    let outcome = (|| -> CliResult<Option<String>> {
        let tol_scalar = Scalar::parse(&cli.tol, Mode::Exact)?;
        let tol = tol_scalar.to_f64();
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(InputError(format!("tolerance {} must be nonnegative", cli.tol)));
        }
        let ctx = Ctx { mode: cli.mode, tol, tol_scalar, seed: cli.seed, out: cli.out.clone() };
        dispatch(&cli.command, &ctx, &mut report)
    })();
    let body = match outcome {
        Ok(Some(raw)) => raw,
        Ok(None) => {
            report.finish();
            serde_json::to_string_pretty(&report).expect("serializable")
        }
        Err(InputError(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            report.error = Some(msg);
            report.exit_status = EXIT_INPUT;
            serde_json::to_string_pretty(&report).expect("serializable")
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, body.as_bytes()) {
                let _ = writeln!(stderr, "error: {path}: {e}");
                return EXIT_INPUT;
            }
        }
        None => {
            let _ = writeln!(stdout, "{body}");
        }
    }
    report.exit_status
}

// Ok(Some(text)) is emitted verbatim (gallery output); Ok(None) emits the report.
fn dispatch(command: &Command, ctx: &Ctx, report: &mut RunReport) -> CliResult<Option<String>> {
    match command {
        Command::Audit { input, axioms, phi } => cmd_audit(input, axioms, phi.as_deref(), ctx, report),
        Command::Induce { input, exponent, regime, beta } => cmd_induce(input, exponent, *regime, beta.as_deref(), ctx, report),
        Command::Discretize { input, method, phi, levels, rescale } => {
            cmd_discretize(input, *method, phi.as_deref(), *levels, *rescale, ctx, report)
        }
        Command::Fixpoint { space, map, coord, domain, dist, x0, max_iters, decay, steps_csv, class } => {
            let args = FixpointArgs { space, map, coord, domain, dist, x0, max_iters: *max_iters, decay, steps_csv, class };
            cmd_fixpoint(&args, ctx, report)
        }
        Command::Setchain { families, a, b } => cmd_setchain(families, a.as_deref(), b.as_deref(), ctx, report),
        Command::Gallery { name, n, levels, p, vectors, dim, kind, format } => {
            let vectors = match vectors {
                Some(src) => Some(serde_json::from_str(&read_source(src, report)?)?),
                None => None,
            };
            let gp = GalleryParams { n: *n, levels: *levels, p: p.clone(), vectors, dim: *dim, kind: kind.clone() };
            let format = format.unwrap_or(match &ctx.out {
                Some(path) if has_ext(path, "csv") => Format::Csv,
                _ => Format::Json,
            });
            return cmd_gallery(name, &gp, format, ctx).map(Some);
        }
    }
    .map(|()| None)
}

fn cmd_audit(input: &SpaceInput, axioms: &str, phi: Option<&str>, ctx: &Ctx, report: &mut RunReport) -> CliResult<()> {
    let space = load_space(input, ctx, report)?;
    for ax in axioms.split(',').map(str::trim).filter(|a| !a.is_empty()) {
        match ax {
            "I" => report.audit("I", &check_identity(&space)),
            "II" => report.audit("II", &check_symmetry(&space)),
            "III" => report.audit("III", &check_triangle(&space)),
            "IV" => report.audit("IV", &check_generalized_triangle(&space, false)),
            "IV-strict" => report.audit("IV-strict", &check_generalized_triangle(&space, true)),
            "V" => {
                let t = match phi {
                    Some(src) => load_threshold(src, report)?,
                    None => match space.claimed_class() {
                        ClaimedClass::BMetric(k) => Threshold::b_metric(k),
                        _ => return Err(InputError("axiom V needs --phi unless the space claims a b-metric".into())),
                    },
                };
                report.audit("V", &check_uniform_regularity(&space, &t, None)?);
            }
            "K" => {
                let claimed = match space.claimed_class() {
                    ClaimedClass::BMetric(k) => Some(k.clone()),
                    _ => None,
                };
                report.audit("K", &check_b_coefficient(&space, claimed.as_ref())?);
            }
            other => {
                let nu = other
                    .strip_prefix("nu=")
                    .and_then(|v| v.parse::<u32>().ok())
                    .ok_or_else(|| InputError(format!("unknown axiom `{other}`")))?;
                report.audit(other, &check_nu_generalized(&space, nu)?);
            }
        }
    }
    Ok(())
}

fn cmd_induce(
    input: &SpaceInput,
    exponent: &str,
    regime: Option<RegimeArg>,
    beta: Option<&str>,
    ctx: &Ctx,
    report: &mut RunReport,
) -> CliResult<()> {
    let space = load_space(input, ctx, report)?;
    let claimed = match space.claimed_class() {
        ClaimedClass::BMetric(k) => Some(k.clone()),
        _ => None,
    };
    let auto = exponent == "auto";
    let mut selection = json!({});
    let mut k_used = None;
    let p = if auto {
        let b = min_b_coefficient(&space)?;
        // a verified claim gives the coefficient the space was built for;
        // a finite truncation may only approach it from below
        let (k, source) = match &claimed {
            Some(c) if c.cmp_tol(&b.k_min, ctx.tol).is_ge() => (c.clone(), "claimed (verified: K_claimed >= K_min)"),
            _ => (b.k_min.clone(), "K_min"),
        };
        let p = snowflake_exponent(&k)?;
        selection = json!({ "K_min": b.k_min, "K_claimed": claimed, "K_used": k, "source": source, "p": p });
        k_used = Some(k);
        p
    } else {
        let p: Exponent = exponent.parse().map_err(|e| InputError(format!("exponent `{exponent}`: {e}")))?;
        if !p.in_unit_interval() {
            return Err(InputError(format!("exponent {p} outside (0, 1]")));
        }
        p
    };
    let regime = match regime {
        Some(RegimeArg::FrinkIv) => Regime::FrinkIv,
        Some(RegimeArg::Ps) => Regime::Ps { k: k_used.clone() },
        None if p.is_one() => Regime::FrinkIv,
        None => Regime::Ps { k: k_used.clone() },
        Some(RegimeArg::Ain) => {
            let beta: Exponent = match beta {
                Some(b) => b.parse()?,
                None => p.clone(),
            };
            report.assume("aIN regime: beta is caller-supplied, not derived from K");
            Regime::Ain { beta }
        }
    };
    let p = match (&regime, auto) {
        (Regime::Ain { beta }, true) => beta.clone(),
        _ => p,
    };
    if auto {
        report.stage("exponent-selection", StageVerdict::Info, &selection);
    }
    let induced = chain_metric_with(&space, &p, regime)?;
    let verdict = match induced.sandwich.verdict {
        SandwichVerdict::Fail => StageVerdict::Fail,
        SandwichVerdict::Pass => StageVerdict::Pass,
        SandwichVerdict::HypothesesUnmet => StageVerdict::Info,
    };
    if let Hypotheses::Unverified(why) = &induced.sandwich.hypotheses {
        report.assume(format!("sandwich hypotheses unverified: {why}"));
    }
    report.stage("induce", verdict, &induced);
    let tri = check_triangle(&induced.as_space());
    report.audit("induced-triangle", &tri);
    Ok(())
}

fn cmd_discretize(
    input: &SpaceInput,
    method: Method,
    phi: Option<&str>,
    levels: usize,
    rescale: bool,
    ctx: &Ctx,
    report: &mut RunReport,
) -> CliResult<()> {
    let output = match method {
        Method::Au => {
            let fam = load_families(&input.space, ctx, report)?;
            match au_stages(&fam, report)? {
                Some(d) => d,
                None => return Ok(()),
            }
        }
        Method::Chittenden => {
            let space = load_space(input, ctx, report)?;
            let t = match phi {
                Some(src) => load_threshold(src, report)?,
                None => default_threshold(&space),
            };
            let res = chittenden_discretize(&space, &t, ChittendenOptions { rescale })?;
            report.audit("chittenden-precondition", &res.precondition);
            report.stage(
                "chittenden",
                StageVerdict::Info,
                json!({ "ladder": res.ladder, "scale": res.scale, "space": res.space }),
            );
            report.audit("output-IV", &res.output_check);
            res.space
        }
        Method::Nw => {
            let space = load_space(input, ctx, report)?;
            let t = match phi {
                Some(src) => load_threshold(src, report)?,
                None => default_threshold(&space),
            };
            let (fam, ladders) = nw_ball_families(&space, &LocalThreshold::Uniform(t), levels)?;
            report.stage("nw-families", StageVerdict::Info, json!({ "families": fam, "ladders": ladders }));
            match au_stages(&fam, report)? {
                Some(d) => d,
                None => return Ok(()),
            }
        }
        Method::Twogen => {
            let space = load_space(input, ctx, report)?;
            let res = two_gen_discretize(&space)?;
            report.stage("twogen", StageVerdict::Info, json!({ "families": res.families, "k": res.k, "space": res.space }));
            report.audit("output-IV", &res.output_check);
            res.space
        }
    };
    let induced = chain_metric_with(&output, &Exponent::one(), Regime::FrinkIv)?;
    let verdict = match induced.sandwich.verdict {
        SandwichVerdict::Fail => StageVerdict::Fail,
        _ => StageVerdict::Pass,
    };
    report.stage("induce", verdict, &induced);
    Ok(())
}

fn au_stages(fam: &BallFamilies, report: &mut RunReport) -> CliResult<Option<DistanceSpace>> {
    let [a, b, c] = check_au_conditions(fam);
    report.audit("AU-A", &a);
    report.audit("AU-B", &b);
    report.audit("AU-C", &c);
    report.assume("condition (C): the families form a complete system of neighborhoods (not machine-checkable)");
    if !b.passed() {
        // without separation there is no distance to build
        return Ok(None);
    }
    let d = au_distance(fam)?;
    report.audit("output-IV", &check_generalized_triangle(&d, false));
    report.stage("au-distance", StageVerdict::Info, &d);
    Ok(Some(d))
}

struct FixpointArgs<'a> {
    space: &'a Option<String>,
    map: &'a Option<String>,
    coord: &'a Option<String>,
    domain: &'a str,
    dist: &'a str,
    x0: &'a str,
    max_iters: usize,
    decay: &'a Option<String>,
    steps_csv: &'a Option<String>,
    class: &'a ClaimedClass,
}

fn cmd_fixpoint(args: &FixpointArgs, ctx: &Ctx, report: &mut RunReport) -> CliResult<()> {
    let trace: IterationTrace = if let Some(spec) = args.coord {
        let base: CoordMap = spec.parse()?;
        let (lo, hi) = args.domain.split_once(',').ok_or_else(|| InputError(format!("domain `{}`", args.domain)))?;
        let (lo, hi) = (Scalar::parse(lo.trim(), ctx.mode)?, Scalar::parse(hi.trim(), ctx.mode)?);
        let map = match base {
            CoordMap::Affine { lambda, c, .. } => CoordMap::affine(lambda.to_mode(ctx.mode), c.to_mode(ctx.mode), lo, hi)?,
            other => other,
        };
        let rule: DistanceRule = args.dist.parse()?;
        let x0 = Scalar::parse(args.x0, ctx.mode)?;
        banach_iterate_coord(&map, &rule, &x0, &ctx.tol_scalar.to_mode(ctx.mode), args.max_iters)?
    } else {
        let src = args.space.as_ref().ok_or_else(|| InputError("fixpoint needs a space or --coord".into()))?;
        let input = SpaceInput { space: src.clone(), class: args.class.clone(), allow_degenerate: false };
        let space = load_space(&input, ctx, report)?;
        let map_spec = args.map.as_ref().ok_or_else(|| InputError("index iteration needs --map".into()))?;
        let map = map_spec
            .split(',')
            .map(|l| space.index_of(l.trim()).ok_or_else(|| InputError(format!("unknown label `{}` in --map", l.trim()))))
            .collect::<CliResult<Vec<_>>>()?;
        let x0 = space.index_of(args.x0).ok_or_else(|| InputError(format!("unknown start label `{}`", args.x0)))?;
        banach_iterate_index(&space, &map, x0, args.max_iters)?
    };
    for a in &trace.assumptions {
        report.assume(a.clone());
    }
    let verdict = match trace.stop_reason {
        StopReason::FixedPointExact | StopReason::CauchyTol => StageVerdict::Pass,
        StopReason::CycleDetected | StopReason::MaxIters => StageVerdict::Fail,
    };
    report.stage("fixpoint", verdict, &trace);
    let lambda = match args.decay {
        Some(l) => Scalar::parse(l, ctx.mode)?,
        None => trace.lambda_hat.clone(),
    };
    let decay = geometric_decay_check(&trace, &lambda, ctx.tol);
    report.stage("geometric-decay", if decay.pass { StageVerdict::Pass } else { StageVerdict::Fail }, &decay);
    if let Some(path) = args.steps_csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "distance"])?;
        for (i, s) in trace.step_dists.iter().enumerate() {
            w.write_record([i.to_string(), s.to_string()])?;
        }
        fs::write(path, w.into_inner().map_err(|e| InputError(e.to_string()))?)?;
    }
    Ok(())
}

fn cmd_setchain(src: &str, a: Option<&str>, b: Option<&str>, ctx: &Ctx, report: &mut RunReport) -> CliResult<()> {
    let families = load_families(src, ctx, report)?;
    let labels = families.labels();
    let find = |l: &str| labels.iter().position(|x| x == l).ok_or_else(|| InputError(format!("unknown label `{l}`")));
    let a = match a {
        Some(l) => find(l)?,
        None => 0,
    };
    let b = match b {
        Some(l) => find(l)?,
        None => labels.len() - 1,
    };
    let res = set_chain_distance(&SetChainProblem { families: families.clone(), a, b });
    let top = families.level_number(families.level_count().saturating_sub(1));
    // a chain of top+1 sets at the top level
    let bound = &Scalar::int(top as i64 + 1) * &Scalar::inv_pow2(top);
    report.stage(
        "setchain",
        StageVerdict::Info,
        json!({
            "a": labels[a],
            "b": labels[b],
            "distance": res.distance,
            "distance_f64": res.distance.as_ref().map(Scalar::to_f64),
            "chain": res.chain,
            "reference_bound": bound,
            "reference_bound_f64": bound.to_f64(),
            "within_reference_bound": res.distance.as_ref().map(|d| d.exact_cmp(&bound).is_le()),
        }),
    );
    Ok(())
}

fn cmd_gallery(name: &str, gp: &GalleryParams, format: Format, ctx: &Ctx) -> CliResult<String> {
    match generate(name, gp, ctx.seed)? {
        Generated::Space { spec, space, extras } => {
            let space = space.to_mode(ctx.mode);
            match format {
                Format::Csv => Ok(space_to_csv(&space)),
                Format::Json => {
                    let mut v = serde_json::to_value(&space)?;
                    let obj = v.as_object_mut().expect("space serializes to an object");
                    obj.insert("gallery".into(), serde_json::to_value(&spec)?);
                    if let Value::Object(extra) = extras {
                        obj.extend(extra);
                    }
                    Ok(serde_json::to_string_pretty(&v)?)
                }
            }
        }
        Generated::Families { spec, families } => match format {
            Format::Csv => Err(InputError(format!("{name} yields families; CSV output is for spaces"))),
            Format::Json => Ok(serde_json::to_string_pretty(&json!({ "gallery": spec, "families": families }))?),
        },
    }
}
