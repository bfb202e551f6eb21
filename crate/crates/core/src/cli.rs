//! Command-line surface. `run_command` is pure apart from cache-file I/O, so the
//! binary is a thin wrapper and tests can drive it directly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::asym::{self, RatioPoint};
use crate::bounds::{
    self, build_chain, divisor_mu, BoundCertificate, DivisorSpec, MiddleMode, Provenance,
    VolumeInput, VolumeTable,
};
use crate::cache::CacheFile;
use crate::error::Error;
use crate::intersect::Engine;
use crate::moduli::{IntersectionKey, KappaExponents, ModuliPoint, PsiExponents};
use crate::rational::{self, BigRational};
use crate::verify::{self, Verification};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const CACHE_ENV: &str = "WPVOL_CACHE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandResult {
    fn ok(stdout: String) -> Self {
        Self { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn fail(code: i32, stdout: String, stderr: String) -> Self {
        Self { code, stdout, stderr }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wpvol", version, about = "Exact ψ/κ intersection numbers and Weil-Petersson volume bounds")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Significant digits for floating-point output.
    #[arg(long, global = true, default_value_t = 12)]
    digits: usize,
    /// Memo cache file (overrides WPVOL_CACHE).
    #[arg(long, global = true)]
    cache_path: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// V_{g,n} = ∫ κ₁^{3g−3+n}
    Volume {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
    },
    /// ∫ ψ_1^{a_1}⋯ψ_n^{a_n}
    Psi {
        #[arg(long)]
        g: u32,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        exp: Vec<u32>,
    },
    /// Mixed ψ/κ monomial integral.
    Mixed {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
        /// ψ exponents (defaults to all zero).
        #[arg(long, value_delimiter = ',')]
        psi: Option<Vec<u32>>,
        /// κ classes as j:m pairs.
        #[arg(long, value_delimiter = ',')]
        kappa: Vec<String>,
    },
    /// Certified lower and upper volume bounds.
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Exact verification sweeps.
    Verify {
        #[arg(value_enum)]
        check: VerifyCheck,
        #[arg(long)]
        max_dim: Option<u32>,
    },
    /// Normalized ratios V/(3g−3+n)! and their growth profile.
    Asym {
        #[arg(long)]
        g_max: u32,
        #[arg(long, value_enum, default_value_t = Source::Exact)]
        source: Source,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long, default_value_t = 9)]
        budget: u32,
    },
    /// Cache maintenance.
    Cache {
        #[arg(value_enum)]
        action: CacheAction,
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
struct BoundCommon {
    #[arg(long, value_enum, default_value_t = ModeArg::Thm2Consistent)]
    mode: ModeArg,
    /// Exact values are computed for 3g−3+n up to this dimension.
    #[arg(long, default_value_t = 9)]
    budget: u32,
    #[arg(long)]
    override_exclusions: bool,
}

#[derive(Debug, Subcommand)]
enum BoundCommand {
    /// Lower bound for V_{g,n+1} from V_{g,n}.
    Thm1 {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
        /// Value for V_{g,n}; defaults to the exact value.
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        override_exclusions: bool,
    },
    /// Upper bound for V_{g,n} from V_{g,n+1}.
    Thm1Upper {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
        /// Value for V_{g,n+1}; defaults to the exact value.
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        override_exclusions: bool,
    },
    /// Lower bound for V_{g,0} from the all-ones divisor (p = 56/5).
    Thm2 {
        #[arg(long)]
        g: u32,
        #[command(flatten)]
        common: BoundCommon,
    },
    /// Bound from an effective divisor pλ − Σ q_j δ_j.
    Thm3 {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        p: String,
        #[arg(long, value_delimiter = ',')]
        q: Vec<String>,
        #[command(flatten)]
        common: BoundCommon,
    },
    /// Lower bound for V_{g,0} from the canonical divisor, g ≥ 23.
    Kodaira {
        #[arg(long)]
        g: u32,
        #[command(flatten)]
        common: BoundCommon,
    },
    /// Certified table of exact values and bounds up to genus g-max.
    Chain {
        #[arg(long)]
        g_max: u32,
        #[arg(long, default_value_t = 0)]
        n_max: u32,
        #[arg(long, default_value_t = 9)]
        budget: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    AsPrinted,
    Thm2Consistent,
}

impl From<ModeArg> for MiddleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::AsPrinted => MiddleMode::AsPrinted,
            ModeArg::Thm2Consistent => MiddleMode::Thm2Consistent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyCheck {
    Anchors,
    Thm1,
    Thm2,
    Lemma1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Source {
    Exact,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CacheAction {
    Export,
    Import,
    Clear,
}

enum Failure {
    Domain(Error),
    Verify(Verification),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Outcome = std::result::Result<String, Failure>;

struct Ctx {
    format: Format,
    digits: usize,
    cache: Option<PathBuf>,
}

impl Ctx {
    fn float(&self, x: f64) -> String {
        format!("{:.*e}", self.digits.saturating_sub(1), x)
    }

    /// Engine preloaded from the cache file, if one is configured.
    fn engine(&self) -> Result<Engine, Error> {
        let engine = Engine::new();
        if let Some(path) = &self.cache {
            engine.preload(CacheFile::load(path)?.entries);
        }
        Ok(engine)
    }

    fn persist(&self, engine: &Engine) -> Result<(), Error> {
        if let Some(path) = &self.cache {
            CacheFile::new(engine.entries()).store(path)?;
        }
        Ok(())
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_command<S: AsRef<str>>(argv: &[S], env: &BTreeMap<String, String>) -> CommandResult {
    let cli = match Cli::try_parse_from(argv.iter().map(|s| s.as_ref())) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandResult::fail(EXIT_USAGE, String::new(), text)
            } else {
                CommandResult::ok(text)
            };
        }
    };
    let cache = cli.cache_path.clone().or_else(|| env.get(CACHE_ENV).map(PathBuf::from));
    let ctx = Ctx { format: cli.format, digits: cli.digits.max(1), cache };
    match dispatch(&ctx, cli.command) {
        Ok(out) => CommandResult::ok(out),
        Err(Failure::Domain(e)) => CommandResult::fail(EXIT_DOMAIN, String::new(), format!("error: {e}\n")),
        Err(Failure::Verify(v)) => {
            let out = render_verification(&ctx, &v);
            let msg = format!(
                "verification failed: {}\n",
                v.failure.as_deref().unwrap_or("unknown counterexample")
            );
            CommandResult::fail(EXIT_VERIFY, out, msg)
        }
    }
}

fn dispatch(ctx: &Ctx, command: Command) -> Outcome {
    match command {
        Command::Volume { g, n } => {
            let engine = ctx.engine()?;
            let v = engine.wp_volume(ModuliPoint::new(g, n))?;
            ctx.persist(&engine)?;
            Ok(render_value(ctx, &[("g", g.to_string()), ("n", n.to_string())], &v))
        }
        Command::Psi { g, exp } => {
            let engine = ctx.engine()?;
            let v = engine.psi_intersection(g, &exp)?;
            ctx.persist(&engine)?;
            let exps: Vec<String> = exp.iter().map(u32::to_string).collect();
            Ok(render_value(ctx, &[("g", g.to_string()), ("exp", exps.join(" "))], &v))
        }
        Command::Mixed { g, n, psi, kappa } => {
            let psi = psi.unwrap_or_else(|| vec![0; n as usize]);
            if psi.len() != n as usize {
                return Err(Error::Domain(format!("--psi has {} entries but --n is {n}", psi.len())).into());
            }
            let kappa = parse_kappa(&kappa)?;
            let key = IntersectionKey::new(g, PsiExponents::new(psi), kappa);
            let engine = ctx.engine()?;
            let v = engine.mixed_intersection(&key)?;
            ctx.persist(&engine)?;
            Ok(render_value(ctx, &[("key", key.to_string())], &v))
        }
        Command::Bound(b) => run_bound(ctx, b),
        Command::Verify { check, max_dim } => {
            // fresh engine: verification never trusts the cache
            let engine = Engine::new();
            let v = match check {
                VerifyCheck::Anchors => verify::anchors(&engine, max_dim.unwrap_or(16))?,
                VerifyCheck::Thm1 => verify::thm1(&engine, max_dim.unwrap_or(9))?,
                VerifyCheck::Thm2 => verify::thm2(&engine, max_dim.unwrap_or(9))?,
                VerifyCheck::Lemma1 => verify::lemma1(&engine, max_dim.unwrap_or(6))?,
            };
            if v.passed() {
                Ok(render_verification(ctx, &v))
            } else {
                Err(Failure::Verify(v))
            }
        }
        Command::Asym { g_max, source, n, budget } => run_asym(ctx, g_max, source, n, budget),
        Command::Cache { action, path } => run_cache(ctx, action, path),
    }
}

fn parse_kappa(items: &[String]) -> Result<KappaExponents, Error> {
    let mut pairs = Vec::new();
    for item in items.iter().filter(|s| !s.is_empty()) {
        let parsed = item
            .split_once(':')
            .and_then(|(j, m)| Some((j.trim().parse::<u32>().ok()?, m.trim().parse::<u32>().ok()?)));
        match parsed {
            Some(pair) => pairs.push(pair),
            None => return Err(Error::Domain(format!("kappa entry '{item}' must be j:m"))),
        }
    }
    Ok(KappaExponents::new(pairs))
}

/// Exact V_{g,n} honoring the `V_{0,3} = 0` convention.
fn exact_input(engine: &Engine, point: ModuliPoint) -> Result<VolumeInput, Error> {
    let value = if point == ModuliPoint::new(0, 3) {
        BigRational::from_integer(0.into())
    } else {
        engine.wp_volume(point)?
    };
    Ok(VolumeInput::exact(point, value))
}

fn user_or_exact(engine: &Engine, point: ModuliPoint, v: Option<String>) -> Result<VolumeInput, Error> {
    match v {
        Some(s) => Ok(VolumeInput::exact(point.require_stable()?, rational::parse_lenient(&s)?)),
        None => exact_input(engine, point.require_stable()?),
    }
}

fn run_bound(ctx: &Ctx, cmd: BoundCommand) -> Outcome {
    let engine = ctx.engine()?;
    let cert = match cmd {
        BoundCommand::Thm1 { g, n, v, override_exclusions } => {
            let input = user_or_exact(&engine, ModuliPoint::new(g, n), v)?;
            bounds::thm1_step(g, n, &input, override_exclusions)?
        }
        BoundCommand::Thm1Upper { g, n, v, override_exclusions } => {
            ModuliPoint::new(g, n).require_stable()?;
            let input = user_or_exact(&engine, ModuliPoint::new(g, n + 1), v)?;
            bounds::thm1_upper_prev(g, n, &input, override_exclusions)?
        }
        BoundCommand::Thm2 { g, common } => {
            let table = inputs_table(&engine, g, common.budget);
            bounds::thm2_bound(g, &table, common.mode.into())?
        }
        BoundCommand::Thm3 { g, p, q, common } => {
            let p = rational::parse_lenient(&p)?;
            let q = q.iter().map(|s| rational::parse_lenient(s)).collect::<Result<Vec<_>, _>>()?;
            let mu = divisor_mu(&DivisorSpec::new(p, q)?)?;
            let table = inputs_table(&engine, g, common.budget);
            bounds::thm3_bound(g, &mu, &table, common.mode.into())?
        }
        BoundCommand::Kodaira { g, common } => {
            let table = inputs_table(&engine, g, common.budget);
            bounds::kodaira_bound(g, &table, common.mode.into(), common.override_exclusions)?
        }
        BoundCommand::Chain { g_max, n_max, budget } => {
            let table = build_chain(&engine, g_max, n_max, budget);
            ctx.persist(&engine)?;
            return Ok(render_table(ctx, &table));
        }
    };
    ctx.persist(&engine)?;
    Ok(render_certificate(ctx, &cert))
}

/// Table holding the lower-genus inputs for a bound on V_{g,0}.
fn inputs_table(engine: &Engine, g: u32, budget: u32) -> VolumeTable {
    build_chain(engine, g.saturating_sub(1), 2, budget)
}

fn run_asym(ctx: &Ctx, g_max: u32, source: Source, n: u32, budget: u32) -> Outcome {
    let engine = ctx.engine()?;
    let mut points = Vec::new();
    match source {
        Source::Exact => {
            for g in 1..=g_max {
                let point = ModuliPoint::new(g, n);
                if !point.is_stable() {
                    continue;
                }
                let v = engine.wp_volume(point)?;
                points.push(RatioPoint::new(g, n, &v, Provenance::Exact)?);
            }
        }
        Source::Chain => {
            let table = build_chain(&engine, g_max, n, budget);
            for g in 1..=g_max {
                if let Some(input) = table.best_lower(ModuliPoint::new(g, n)) {
                    points.push(RatioPoint::new(g, n, &input.value, input.provenance)?);
                }
            }
        }
    }
    ctx.persist(&engine)?;
    if points.is_empty() {
        return Err(Error::Domain(format!("no volumes available for n = {n}, g <= {g_max}")).into());
    }
    let (lo, hi) = asym::root_window(&points)?;
    Ok(render_asym(ctx, &points, lo, hi))
}

fn run_cache(ctx: &Ctx, action: CacheAction, path: Option<PathBuf>) -> Outcome {
    match action {
        CacheAction::Export => {
            let target = path.ok_or_else(|| Error::Domain("cache export needs --path".into()))?;
            let current = match &ctx.cache {
                Some(p) => CacheFile::load(p)?,
                None => CacheFile::default(),
            };
            current.store(&target)?;
            Ok(format!("exported {} entries to {}\n", current.len(), target.display()))
        }
        CacheAction::Import => {
            let source = path.ok_or_else(|| Error::Domain("cache import needs --path".into()))?;
            let active = ctx.cache.as_ref().ok_or_else(|| {
                Error::Domain(format!("cache import needs a cache (--cache-path or {CACHE_ENV})"))
            })?;
            let text = std::fs::read_to_string(&source).map_err(Error::from)?;
            let incoming = CacheFile::parse(&text)?;
            let mut merged = CacheFile::load(active)?;
            let added = incoming.len();
            merged.entries.extend(incoming.entries);
            merged.store(active)?;
            Ok(format!("imported {added} entries; cache now holds {}\n", merged.len()))
        }
        CacheAction::Clear => {
            let target = path
                .or_else(|| ctx.cache.clone())
                .ok_or_else(|| Error::Domain("cache clear needs --path or a configured cache".into()))?;
            CacheFile::default().store(&target)?;
            Ok(format!("cleared {}\n", target.display()))
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_value(ctx: &Ctx, labels: &[(&str, String)], v: &BigRational) -> String {
    let value = rational::format(v);
    match ctx.format {
        Format::Text => format!("{value}\n"),
        Format::Csv => {
            let head: Vec<&str> = labels.iter().map(|(k, _)| *k).chain(["value"]).collect();
            let row: Vec<String> = labels.iter().map(|(_, v)| csv_field(v)).chain([value]).collect();
            format!("{}\n{}\n", head.join(","), row.join(","))
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            for (k, v) in labels {
                let v = v.parse::<u64>().map(|x| json!(x)).unwrap_or_else(|_| json!(v));
                obj.insert(k.to_string(), v);
            }
            obj.insert("value".into(), json!(value));
            format!("{}\n", serde_json::Value::Object(obj))
        }
    }
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::Exact => "exact",
        Provenance::Lower => "lower",
        Provenance::Upper => "upper",
    }
}

fn render_certificate(ctx: &Ctx, cert: &BoundCertificate) -> String {
    let value = rational::format(&cert.value);
    let relation = match (cert.kind, cert.strict) {
        (bounds::BoundKind::Lower, true) => ">",
        (bounds::BoundKind::Lower, false) => ">=",
        (bounds::BoundKind::Upper, true) => "<",
        (bounds::BoundKind::Upper, false) => "<=",
    };
    match ctx.format {
        Format::Text => {
            let mut out = format!("V_{} {relation} {value}\ntrace:\n", cert.target);
            for step in &cert.trace {
                let _ = write!(out, "  {} {}", step.rule, rational::format(&step.coeff));
                for i in &step.inputs {
                    let _ = write!(
                        out,
                        " * V_{}={} [{}]",
                        i.point,
                        rational::format(&i.value),
                        provenance_name(i.provenance)
                    );
                }
                out.push('\n');
            }
            for note in &cert.notes {
                let _ = writeln!(out, "note: {note}");
            }
            out
        }
        Format::Csv => format!(
            "g,n,kind,strict,value\n{},{},{:?},{},{}\n",
            cert.target.g,
            cert.target.n,
            cert.kind,
            cert.strict,
            value
        )
        .to_lowercase(),
        Format::Json => format!("{}\n", serde_json::to_string(cert).expect("certificate serializes")),
    }
}

fn render_table(ctx: &Ctx, table: &VolumeTable) -> String {
    let opt = |v: Option<&BigRational>| v.map(rational::format).unwrap_or_default();
    let rows: Vec<[String; 5]> = table
        .cells()
        .iter()
        .map(|(p, c)| {
            [
                p.g.to_string(),
                p.n.to_string(),
                opt(c.exact.as_ref().map(|(v, _)| v)),
                opt(c.lower.as_ref().map(|c| &c.value)),
                opt(c.upper.as_ref().map(|c| &c.value)),
            ]
        })
        .collect();
    match ctx.format {
        Format::Text => {
            let mut out = String::new();
            for r in &rows {
                let _ = writeln!(out, "V_({},{}) exact={} lower={} upper={}", r[0], r[1], r[2], r[3], r[4]);
            }
            for gap in table.gaps() {
                let _ = writeln!(out, "gap: {gap}");
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("g,n,exact,lower,upper\n");
            for r in &rows {
                let _ = writeln!(out, "{}", r.join(","));
            }
            out
        }
        Format::Json => {
            let cells: Vec<_> = rows
                .iter()
                .map(|r| json!({"g": r[0].parse::<u32>().unwrap_or(0), "n": r[1].parse::<u32>().unwrap_or(0),
                    "exact": r[2], "lower": r[3], "upper": r[4]}))
                .collect();
            format!("{}\n", json!({"cells": cells, "gaps": table.gaps()}))
        }
    }
}

fn render_asym(ctx: &Ctx, points: &[RatioPoint], lo: f64, hi: f64) -> String {
    let rows: Vec<[String; 6]> = points
        .iter()
        .map(|p| {
            [
                p.point.g.to_string(),
                p.point.n.to_string(),
                provenance_name(p.value_kind).to_string(),
                rational::format(&p.r),
                ctx.float(p.root),
                p.logprof.map(|x| ctx.float(x)).unwrap_or_default(),
            ]
        })
        .collect();
    match ctx.format {
        Format::Text => {
            let mut out = String::new();
            for r in &rows {
                let _ = writeln!(out, "g={} n={} kind={} r={} root={} logprof={}", r[0], r[1], r[2], r[3], r[4], r[5]);
            }
            let _ = writeln!(out, "window c_est={} C_est={}", ctx.float(lo), ctx.float(hi));
            out
        }
        Format::Csv => {
            let mut out = String::from("g,n,kind,r,root,logprof\n");
            for r in &rows {
                let _ = writeln!(out, "{}", r.join(","));
            }
            out
        }
        Format::Json => {
            let pts: Vec<_> = rows
                .iter()
                .map(|r| json!({"g": r[0].parse::<u32>().unwrap_or(0), "n": r[1].parse::<u32>().unwrap_or(0), "kind": r[2], "r": r[3], "root": r[4], "logprof": r[5]}))
                .collect();
            format!("{}\n", json!({"points": pts, "c_est": ctx.float(lo), "C_est": ctx.float(hi)}))
        }
    }
}

fn render_verification(ctx: &Ctx, v: &Verification) -> String {
    let status = if v.passed() { "OK" } else { "FAILED" };
    match ctx.format {
        Format::Text => match &v.failure {
            None => format!("{}: {status} ({} checks)\n", v.check, v.checked),
            Some(f) => format!("{}: {status} after {} checks; first counterexample: {f}\n", v.check, v.checked),
        },
        Format::Csv => format!(
            "check,status,checked,counterexample\n{},{status},{},{}\n",
            v.check,
            v.checked,
            csv_field(v.failure.as_deref().unwrap_or(""))
        ),
        Format::Json => format!("{}\n", serde_json::to_string(v).expect("verification serializes")),
    }
}
