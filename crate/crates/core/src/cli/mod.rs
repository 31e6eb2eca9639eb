//! Command-line entry point. Every subcommand emits deterministic output;
//! `--format json` wraps the result in an envelope whose header records the
//! job configuration.

pub mod cache;
pub mod oracle;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::coefficients::Coeff;
use crate::fgl::{FglError, FormalGroupLaw};
use crate::groups::{
    morava_quillen_euler, product_euler, quillen_euler, semidirect_euler, sigma_p_presentation, wreath_basis,
    wreath_euler, GroupDescriptor, GroupError,
};
use crate::symfun::sigma_name;
use crate::transfer::{
    bp_d_series_p2, bp_delta_p2, lambda_table, morava_lambda, morava_transfer_omega, LambdaRow, MoravaExpansion,
    TransferError,
};

pub use cache::{CacheStatus, FglCache, CACHE_ENV};
pub use oracle::{run_configured_oracle, run_oracle, JobConfig, OracleError, OracleReport, Quantity, ORACLE_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONSISTENCY: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    PaperLayout,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Text => "text",
            Format::Json => "json",
            Format::PaperLayout => "paper-layout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoryArg {
    Morava,
    Bp,
}

impl TheoryArg {
    fn name(self) -> &'static str {
        match self {
            TheoryArg::Morava => "morava",
            TheoryArg::Bp => "bp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Cyclic,
    Product,
    SigmaP,
    Wreath,
    Semidirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    Fgl,
    Pseries,
    SigmaExpand,
}

impl QuantityArg {
    fn name(self) -> &'static str {
        match self {
            QuantityArg::Fgl => "fgl",
            QuantityArg::Pseries => "pseries",
            QuantityArg::SigmaExpand => "sigma-expand",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tchern", version, about = "Exact formal group law and transferred Chern class computations")]
pub struct Cli {
    #[arg(long, value_enum, global = true, default_value = "text")]
    pub format: Format,
    /// Write the artifact to this file instead of standard output.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Cmd,
}

type Pos = clap::builder::RangedI64ValueParser<u32>;

fn pos() -> Pos {
    clap::value_parser!(u32).range(1..)
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Truncated formal group law `F(x, y)`.
    Fgl {
        #[arg(long, value_enum, default_value = "morava")]
        theory: TheoryArg,
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        /// Height for K(s).
        #[arg(short = 's', value_parser = pos(), default_value = "1")]
        s: u32,
        /// Number of BP generators.
        #[arg(short = 'n', long = "generators", value_parser = pos(), default_value = "3")]
        n: u32,
        /// Total degree bound in `x, y`; defaults to `p^(s+1)` for K(s) and 32 for BP.
        #[arg(long, value_parser = pos())]
        order: Option<u32>,
        /// Verify unit, commutativity and associativity through the order.
        #[arg(long)]
        axioms: bool,
    },
    /// The q-series `[q](z)`.
    Pseries {
        #[arg(long, value_enum, default_value = "morava")]
        theory: TheoryArg,
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        #[arg(short = 's', value_parser = pos(), default_value = "1")]
        s: u32,
        #[arg(short = 'n', long = "generators", value_parser = pos(), default_value = "3")]
        n: u32,
        /// Multiplier; defaults to p.
        #[arg(short = 'q', value_parser = pos())]
        q: Option<u32>,
        #[arg(long, value_parser = pos())]
        order: Option<u32>,
    },
    /// `sigma_k(x, F(x,z), ..., F(x,(p-1)z))` in K(s).
    SigmaExpand {
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        #[arg(short = 's', value_parser = pos())]
        s: u32,
        #[arg(short = 'k', value_parser = pos())]
        k: u32,
        #[arg(long, value_parser = pos())]
        x_order: Option<u32>,
    },
    /// Coefficients `lambda_i^(k)` of the Chern expansion in K(s).
    Lambda {
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        #[arg(short = 's', value_parser = pos())]
        s: u32,
        /// Row to solve; all rows `1..p-1` when omitted.
        #[arg(short = 'k', value_parser = pos())]
        k: Option<u32>,
        #[arg(long, value_parser = pos())]
        x_order: Option<u32>,
    },
    /// Coefficients `delta_j` of `Tr*(x)` in BP at p = 2, with the comparison
    /// against the stored reference value of `delta_1`.
    DeltaBp2 {
        #[arg(long, value_parser = pos(), default_value = "8")]
        z_order: u32,
        #[arg(long, value_parser = pos(), default_value = "4")]
        c2_order: u32,
        #[arg(short = 'n', long = "generators", value_parser = pos(), default_value = "3")]
        n: u32,
    },
    /// `Tr*(omega_k)` over the cyclic cover and `Tr*(x_1...x_k)` over the
    /// symmetric cover in K(s).
    Transfer {
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        #[arg(short = 's', value_parser = pos())]
        s: u32,
        #[arg(short = 'k', value_parser = pos(), default_value = "1")]
        k: u32,
        #[arg(long, value_parser = pos())]
        x_order: Option<u32>,
    },
    /// Stable Euler class `Tr*(1)`.
    Euler {
        #[arg(value_enum)]
        family: Family,
        #[arg(long, value_enum, default_value = "morava")]
        theory: TheoryArg,
        #[arg(short = 'p', value_parser = pos(), default_value = "2")]
        p: u32,
        #[arg(short = 's', value_parser = pos(), default_value = "1")]
        s: u32,
        /// Wreath or semidirect rank; BP generators for `--theory bp`.
        #[arg(short = 'n', value_parser = pos())]
        n: Option<u32>,
        /// Order of a cyclic group.
        #[arg(short = 'q', value_parser = pos())]
        q: Option<u32>,
        /// Orders of the cyclic factors of a product.
        #[arg(long, value_delimiter = ',', value_parser = pos())]
        qs: Vec<u32>,
        /// BP truncation order.
        #[arg(long, value_parser = pos())]
        order: Option<u32>,
    },
    /// Presentation of `K(s)^*(B Sigma_p)`.
    Present {
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        #[arg(short = 's', value_parser = pos())]
        s: u32,
    },
    /// Free basis of `K(s)^*(B(Z/p^n wr Z/p))`.
    Basis {
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        #[arg(short = 's', value_parser = pos())]
        s: u32,
        #[arg(short = 'n', value_parser = pos())]
        n: u32,
    },
    /// Send quantities to the external oracle named by FGL_ORACLE_CMD and
    /// report its verdicts.
    CompareOracle {
        #[arg(long, value_enum, value_delimiter = ',', default_value = "fgl")]
        quantity: Vec<QuantityArg>,
        #[arg(long, value_enum, default_value = "morava")]
        theory: TheoryArg,
        #[arg(short = 'p', value_parser = pos())]
        p: u32,
        #[arg(short = 's', value_parser = pos(), default_value = "1")]
        s: u32,
        #[arg(short = 'n', long = "generators", value_parser = pos(), default_value = "3")]
        n: u32,
        #[arg(short = 'k', value_parser = pos(), default_value = "1")]
        k: u32,
        #[arg(long, value_parser = pos())]
        order: Option<u32>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Consistency(_) => EXIT_CONSISTENCY,
            _ => EXIT_VALIDATION,
        }
    }
}

impl From<TransferError> for CliError {
    fn from(e: TransferError) -> Self {
        if e.is_consistency() {
            CliError::Consistency(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        if e.is_consistency() {
            CliError::Consistency(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<FglError> for CliError {
    fn from(e: FglError) -> Self {
        TransferError::from(e).into()
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// A computed result in its three renderings, with the exit status.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub layout: Option<String>,
    pub status: i32,
}

impl Outcome {
    fn new(text: String, json: Value) -> Self {
        Outcome { text, json, layout: None, status: EXIT_OK }
    }
}

/// Parse `args` (including the program name), run the command and write its
/// artifact. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Run a parsed command and emit its artifact.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let config = job_config(cli);
    let outcome = compute(&cli.command, &config, &FglCache::from_env())?;
    let body = render(cli.format, &config, &outcome);
    match &cli.output {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(outcome.status)
}

/// The artifact for `outcome` in `format`, newline terminated.
pub fn render(format: Format, config: &JobConfig, outcome: &Outcome) -> String {
    let mut body = match format {
        Format::Text => outcome.text.clone(),
        Format::PaperLayout => outcome.layout.clone().unwrap_or_else(|| outcome.text.clone()),
        Format::Json => {
            let env = json!({
                "header": {
                    "tool": "tchern",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": config.command,
                    "config": config,
                },
                "result": outcome.json,
            });
            serde_json::to_string_pretty(&env).expect("serialisable")
        }
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    body
}

/// The job configuration recorded for a parsed command line.
pub fn job_config(cli: &Cli) -> JobConfig {
    let mut c = JobConfig {
        format: cli.format.name().into(),
        output: cli.output.as_ref().map(|p| p.display().to_string()),
        ..Default::default()
    };
    match &cli.command {
        Cmd::Fgl { theory, p, s, n, order, .. } | Cmd::Pseries { theory, p, s, n, order, .. } => {
            c.command = if matches!(cli.command, Cmd::Fgl { .. }) { "fgl" } else { "pseries" }.into();
            c.theory = Some(theory.name().into());
            c.p = Some(*p);
            match theory {
                TheoryArg::Morava => c.s = Some(*s),
                TheoryArg::Bp => c.n = Some(*n),
            }
            c.order = Some(order.unwrap_or_else(|| default_order(*theory, *p, *s)));
            if let Cmd::Pseries { q, .. } = &cli.command {
                c.q = Some(q.unwrap_or(*p));
            }
        }
        Cmd::SigmaExpand { p, s, k, x_order } | Cmd::Transfer { p, s, k, x_order } => {
            c.command = if matches!(cli.command, Cmd::SigmaExpand { .. }) { "sigma-expand" } else { "transfer" }.into();
            c.theory = Some("morava".into());
            c.p = Some(*p);
            c.s = Some(*s);
            c.k = Some(*k);
            c.x_order = Some(x_order.unwrap_or_else(|| default_x_order(*p, *s)));
        }
        Cmd::Lambda { p, s, k, x_order } => {
            c.command = "lambda".into();
            c.theory = Some("morava".into());
            c.p = Some(*p);
            c.s = Some(*s);
            c.k = *k;
            c.x_order = Some(x_order.unwrap_or_else(|| default_x_order(*p, *s)));
        }
        Cmd::DeltaBp2 { z_order, c2_order, n } => {
            c.command = "delta-bp2".into();
            c.theory = Some("bp".into());
            c.p = Some(2);
            c.n = Some(*n);
            c.z_order = Some(*z_order);
            c.c2_order = Some(*c2_order);
            c.order = Some(bp2_order(*z_order, *c2_order));
        }
        Cmd::Euler { family, theory, p, s, n, q, qs, order } => {
            c.command = "euler".into();
            c.family = family.to_possible_value().map(|v| v.get_name().to_string());
            c.theory = Some(theory.name().into());
            c.p = Some(*p);
            c.s = Some(*s);
            c.n = *n;
            c.q = *q;
            c.qs = (!qs.is_empty()).then(|| qs.clone());
            c.order = *order;
        }
        Cmd::Present { p, s } => {
            c.command = "present".into();
            c.theory = Some("morava".into());
            c.p = Some(*p);
            c.s = Some(*s);
        }
        Cmd::Basis { p, s, n } => {
            c.command = "basis".into();
            c.theory = Some("morava".into());
            c.p = Some(*p);
            c.s = Some(*s);
            c.n = Some(*n);
        }
        Cmd::CompareOracle { theory, p, s, n, k, order, .. } => {
            c.command = "compare-oracle".into();
            c.theory = Some(theory.name().into());
            c.p = Some(*p);
            match theory {
                TheoryArg::Morava => {
                    c.s = Some(*s);
                    c.x_order = Some(default_x_order(*p, *s));
                }
                TheoryArg::Bp => c.n = Some(*n),
            }
            c.k = Some(*k);
            c.order = Some(order.unwrap_or_else(|| default_order(*theory, *p, *s)));
        }
    }
    c
}

/// `p^(s+1)`, saturating.
pub fn default_x_order(p: u32, s: u32) -> u32 {
    p.checked_pow(s + 1).unwrap_or(u32::MAX)
}

fn default_order(theory: TheoryArg, p: u32, s: u32) -> u32 {
    match theory {
        TheoryArg::Morava => default_x_order(p, s),
        TheoryArg::Bp => 32,
    }
}

/// Law order needed by the BP d-series at the given truncations.
pub fn bp2_order(z_order: u32, c2_order: u32) -> u32 {
    z_order + 2 * c2_order + 2
}

fn required(name: &str, v: Option<u32>) -> Result<u32, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("missing parameter {name}")))
}

fn expansion(config: &JobConfig, cache: &FglCache) -> Result<MoravaExpansion, CliError> {
    let (p, s, x_order) = (required("p", config.p)?, required("s", config.s)?, required("x_order", config.x_order)?);
    let ps = p.checked_pow(s).ok_or_else(|| CliError::Validation(format!("{p}^{s} is too large")))?;
    let minimal = ps.saturating_mul(p);
    if x_order < minimal {
        return Err(TransferError::OrderTooSmall { requested: x_order, minimal }.into());
    }
    let (fgl, _) = cache.morava(p, s, x_order + ps)?;
    Ok(MoravaExpansion::from_fgl(fgl, x_order)?)
}

fn fgl_json<C: Coeff>(f: &FormalGroupLaw<C>, axioms: bool) -> Result<(String, Value), CliError> {
    let report = if axioms { Some(f.axiom_check()?) } else { None };
    if let Some(r) = &report {
        if !r.all_pass() {
            return Err(CliError::Consistency(format!("axiom check failed: {r:?}")));
        }
    }
    let mut text = format!("F(x,y) = {}", f.series());
    if let Some(r) = &report {
        text.push_str(&format!(
            "\naxioms through degree {}: unit {}, commutativity {}, associativity {}",
            r.associativity_order, r.unit, r.commutativity, r.associativity
        ));
    }
    Ok((text, f.to_json(report.as_ref())))
}

fn pseries_json<C: Coeff>(f: &FormalGroupLaw<C>, q: u32) -> Result<(String, Value), CliError> {
    let qs = f.q_series(q)?;
    let text = format!("[{q}](z) = {}", qs.series);
    Ok((text, json!({"q": q, "order": f.order(), "terms": qs.series.terms_json(), "text": qs.series.to_string()})))
}

fn series_outcome(theory: TheoryArg, config: &JobConfig, cache: &FglCache, axioms: bool) -> Result<Outcome, CliError> {
    let p = required("p", config.p)?;
    let order = required("order", config.order)?;
    let (text, value) = match (theory, config.q) {
        (TheoryArg::Morava, q) => {
            let (f, _) = cache.morava(p, required("s", config.s)?, order)?;
            match q {
                Some(q) => pseries_json(&f, q)?,
                None => fgl_json(&f, axioms)?,
            }
        }
        (TheoryArg::Bp, q) => {
            let (f, _) = cache.bp(p, required("n", config.n)?, order)?;
            match q {
                Some(q) => pseries_json(&f, q)?,
                None => fgl_json(&f, axioms)?,
            }
        }
    };
    Ok(Outcome::new(text, value))
}

fn lambda_layout(rows: &[LambdaRow]) -> Result<String, CliError> {
    Ok(rows.iter().map(|r| r.paper_layout()).collect::<Result<Vec<_>, _>>()?.join("\n"))
}

fn lambda_text(rows: &[LambdaRow]) -> String {
    let mut out = Vec::new();
    for r in rows {
        for (i, l) in r.lambdas.iter().enumerate() {
            if !l.is_zero() {
                out.push(format!("lambda_{i}^({}) = {l}", r.k));
            }
        }
    }
    out.join("\n")
}

/// Compute the result for `cmd` with the resolved parameters in `config`.
pub fn compute(cmd: &Cmd, config: &JobConfig, cache: &FglCache) -> Result<Outcome, CliError> {
    match cmd {
        Cmd::Fgl { theory, axioms, .. } => series_outcome(*theory, config, cache, *axioms),
        Cmd::Pseries { theory, .. } => series_outcome(*theory, config, cache, false),
        Cmd::SigmaExpand { .. } => {
            let e = expansion(config, cache)?;
            let p = e.prime();
            let k = required("k", config.k)?;
            if k > p {
                return Err(TransferError::OutOfRange { k, lo: 1, hi: p }.into());
            }
            let sk = e.sigma(k)?;
            let mut out = Outcome::new(
                format!("{} = {sk}", sigma_name(k)),
                json!({"p": p, "s": e.height(), "k": k, "x_order": e.x_order(), "terms": sk.terms_json(), "text": sk.to_string()}),
            );
            if k < p {
                out.layout = Some(morava_lambda(&e, k)?.paper_layout()?);
            }
            Ok(out)
        }
        Cmd::Lambda { .. } => {
            let e = expansion(config, cache)?;
            let rows = match config.k {
                Some(k) => vec![morava_lambda(&e, k)?],
                None => lambda_table(&e)?.1,
            };
            let json = json!({
                "p": e.prime(),
                "s": e.height(),
                "x_order": e.x_order(),
                "rows": rows.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            });
            let mut out = Outcome::new(lambda_text(&rows), json);
            out.layout = Some(lambda_layout(&rows)?);
            Ok(out)
        }
        Cmd::DeltaBp2 { .. } => {
            let n = required("n", config.n)?;
            let (z_order, c2_order) = (required("z_order", config.z_order)?, required("c2_order", config.c2_order)?);
            let (fgl, _) = cache.bp(2, n, bp2_order(z_order, c2_order))?;
            let ds = bp_d_series_p2(&fgl, z_order, c2_order)?;
            let delta = bp_delta_p2(&ds)?;
            let reference = delta.reference_delta1()?;
            let report = delta.diff_report(&reference)?;
            let mut text: Vec<String> =
                delta.deltas.iter().enumerate().map(|(j, d)| format!("delta_{j} = {d}")).collect();
            text.push(report.render().trim_end().to_string());
            let mut json = delta.to_json();
            json["diff_report"] = serde_json::to_value(&report).expect("serialisable");
            Ok(Outcome::new(text.join("\n"), json))
        }
        Cmd::Transfer { .. } => {
            let e = expansion(config, cache)?;
            let row = morava_lambda(&e, required("k", config.k)?)?;
            let (pi, sigma) = morava_transfer_omega(&row)?;
            let text = format!("{pi}\n{sigma}");
            let mut out = Outcome::new(text.clone(), json!({"pi": pi.to_json(), "sigma": sigma.to_json()}));
            out.layout = Some(text);
            Ok(out)
        }
        Cmd::Euler { family, theory, qs, .. } => euler(*family, *theory, qs, config, cache),
        Cmd::Present { .. } => {
            let pres = sigma_p_presentation(required("p", config.p)?, required("s", config.s)?)?;
            Ok(Outcome::new(pres.to_string(), pres.to_json()))
        }
        Cmd::Basis { .. } => {
            let pres = wreath_basis(required("p", config.p)?, required("s", config.s)?, required("n", config.n)?)?;
            Ok(Outcome::new(pres.to_string(), pres.to_json()))
        }
        Cmd::CompareOracle { quantity, .. } => compare_oracle(quantity, config, cache),
    }
}

fn euler(
    family: Family,
    theory: TheoryArg,
    qs: &[u32],
    config: &JobConfig,
    cache: &FglCache,
) -> Result<Outcome, CliError> {
    let p = required("p", config.p)?;
    let s = required("s", config.s)?;
    let (descriptor, text, value) = match family {
        Family::Cyclic | Family::Product => {
            let desc = match family {
                Family::Cyclic => GroupDescriptor::Cyclic { q: required("q", config.q)? },
                _ => GroupDescriptor::Product { qs: qs.to_vec() },
            };
            desc.validate()?;
            let e = match (&desc, theory) {
                (GroupDescriptor::Cyclic { q }, TheoryArg::Morava) => {
                    let e = morava_quillen_euler(p, s, *q)?;
                    (e.to_string(), e.terms_json())
                }
                (GroupDescriptor::Product { qs }, TheoryArg::Morava) => {
                    let order = config.order.unwrap_or(default_x_order(p, s));
                    let (f, _) = cache.morava(p, s, order)?;
                    let e = product_euler(&f, qs)?;
                    (e.to_string(), e.terms_json())
                }
                (d, TheoryArg::Bp) => {
                    let order = config.order.unwrap_or(default_order(TheoryArg::Bp, p, s));
                    let (f, _) = cache.bp(p, config.n.unwrap_or(3), order)?;
                    let e = match d {
                        GroupDescriptor::Cyclic { q } => quillen_euler(&f, *q)?,
                        GroupDescriptor::Product { qs } => product_euler(&f, qs)?,
                        _ => unreachable!("cyclic or product"),
                    };
                    (e.to_string(), e.terms_json())
                }
                _ => unreachable!("cyclic or product"),
            };
            (desc, e.0, e.1)
        }
        Family::SigmaP => {
            require_morava(theory)?;
            let pres = sigma_p_presentation(p, s)?;
            let (_, tr) = pres.data.first().expect("Tr(1) entry");
            (GroupDescriptor::SigmaP { p }, tr.to_string(), tr.terms_json())
        }
        Family::Wreath => {
            require_morava(theory)?;
            let n = required("n", config.n)?;
            let w = wreath_euler(p, n, s)?;
            let value = json!({
                "symmetric_part": w.symmetric_part.to_json(),
                "euler": w.euler.to_json(),
            });
            (GroupDescriptor::Wreath { p, n }, format!("{}\n{}", w.symmetric_part, w.euler), value)
        }
        Family::Semidirect => {
            require_morava(theory)?;
            let n = required("n", config.n)?;
            let w = semidirect_euler(p, n, s)?;
            let value = json!({
                "unit": w.unit,
                "euler_of_kernel": w.euler_of_kernel,
                "euler": w.euler.to_json(),
            });
            (GroupDescriptor::Semidirect { p, n }, w.euler.to_string(), value)
        }
    };
    Ok(Outcome::new(text, json!({"group": descriptor, "theory": theory.name(), "euler": value})))
}

fn require_morava(theory: TheoryArg) -> Result<(), CliError> {
    match theory {
        TheoryArg::Morava => Ok(()),
        TheoryArg::Bp => Err(CliError::Validation("this family is only available in K(s)".into())),
    }
}

/// The primary's canonical JSON for one oracle quantity.
pub fn primary_quantity(q: QuantityArg, config: &JobConfig, cache: &FglCache) -> Result<Value, CliError> {
    let p = required("p", config.p)?;
    let order = required("order", config.order)?;
    let theory = config.theory.as_deref().unwrap_or("morava");
    Ok(match (q, theory) {
        (QuantityArg::Fgl, "bp") => cache.bp(p, required("n", config.n)?, order)?.0.series().terms_json(),
        (QuantityArg::Fgl, _) => cache.morava(p, required("s", config.s)?, order)?.0.series().terms_json(),
        (QuantityArg::Pseries, "bp") => {
            cache.bp(p, required("n", config.n)?, order)?.0.q_series(p)?.series.terms_json()
        }
        (QuantityArg::Pseries, _) => {
            cache.morava(p, required("s", config.s)?, order)?.0.q_series(p)?.series.terms_json()
        }
        (QuantityArg::SigmaExpand, "bp") => {
            return Err(CliError::Validation("sigma-expand is only available in K(s)".into()));
        }
        (QuantityArg::SigmaExpand, _) => {
            let e = expansion(config, cache)?;
            e.sigma(required("k", config.k)?)?.terms_json()
        }
    })
}

fn compare_oracle(quantities: &[QuantityArg], config: &JobConfig, cache: &FglCache) -> Result<Outcome, CliError> {
    let mut job = config.clone();
    let mut seen = Vec::new();
    for q in quantities {
        if seen.contains(q) {
            continue;
        }
        seen.push(*q);
        job.quantities.push(Quantity { name: q.name().into(), primary: primary_quantity(*q, config, cache)? });
    }
    let report = run_configured_oracle(&job)?;
    let mut lines = vec![format!("job {}", report.job_id)];
    for v in &report.verdicts {
        let kind = serde_json::to_value(v.verdict).expect("serialisable");
        let mut line = format!("{}: {}", v.quantity, kind.as_str().unwrap_or_default());
        if !v.diff.is_empty() {
            line.push_str(&format!(" ({} differing terms)", v.diff.len()));
        }
        lines.push(line);
    }
    let mismatched = report.mismatches().len();
    let mut out = Outcome::new(lines.join("\n"), serde_json::to_value(&report).expect("serialisable"));
    if mismatched > 0 {
        out.status = EXIT_CONSISTENCY;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("tchern").chain(args.iter().copied())).unwrap()
    }

    fn outcome(args: &[&str]) -> Result<Outcome, CliError> {
        let cli = parse(args);
        compute(&cli.command, &job_config(&cli), &FglCache::default())
    }

    #[test]
    fn euler_of_trivial_group() {
        assert_eq!(outcome(&["euler", "cyclic", "-q", "1"]).unwrap().text, "1");
    }

    #[test]
    fn lambda_row() {
        let o = outcome(&["lambda", "-p", "3", "-s", "2", "-k", "1"]).unwrap();
        assert!(o.text.contains("lambda_1^(1) = 2*v_2*z^6"), "{}", o.text);
        assert_eq!(o.layout.as_deref(), Some("s1 = v_2*y^3*s3 + v_2*y^4*x"));
    }

    #[test]
    fn defaults_are_recorded() {
        let c = job_config(&parse(&["lambda", "-p", "3", "-s", "2"]));
        assert_eq!(c.x_order, Some(27));
        let c = job_config(&parse(&["delta-bp2"]));
        assert_eq!((c.z_order, c.c2_order, c.order), (Some(8), Some(4), Some(18)));
        let c = job_config(&parse(&["fgl", "--theory", "bp", "-p", "2"]));
        assert_eq!((c.order, c.n, c.s), (Some(32), Some(3), None));
    }

    #[test]
    fn infeasible_truncation_names_the_minimum() {
        let e = outcome(&["lambda", "-p", "3", "-s", "2", "--x-order", "10"]).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_VALIDATION);
        assert!(e.to_string().contains("27"), "{e}");
    }

    #[test]
    fn json_envelope_is_deterministic() {
        let cli = parse(&["--format", "json", "pseries", "-p", "2", "-s", "2"]);
        let c = job_config(&cli);
        let a = render(cli.format, &c, &compute(&cli.command, &c, &FglCache::default()).unwrap());
        let b = render(cli.format, &c, &compute(&cli.command, &c, &FglCache::default()).unwrap());
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["header"]["command"], "pseries");
        assert_eq!(v["header"]["config"]["q"], 2);
        assert!(v["result"]["terms"].is_array());
    }

    #[test]
    fn bad_arguments_exit_two() {
        assert_eq!(run(["tchern", "lambda", "-p", "3"]), EXIT_VALIDATION);
        assert_eq!(run(["tchern", "frobnicate"]), EXIT_VALIDATION);
        assert_eq!(run(["tchern", "lambda", "-p", "0", "-s", "1"]), EXIT_VALIDATION);
    }
}
