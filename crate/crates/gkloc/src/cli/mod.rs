//! Command-line front end: argument parsing, output encoding and the `verify` harness.

pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::btree::tube_count_for;
use crate::classify::{classify_cycle, diff_set, hz_irreducible, is_regular, prime_case, siegel_irreducible, PrimeCase};
use crate::density::{closed_form, density_bruteforce, evaluate_reduction, reduce, NamedForm};
use crate::eislocal::{
    degree_factor, whittaker_derivative, whittaker_derivative_via_density, whittaker_value,
    whittaker_value_via_density,
};
use crate::error::{Error, Result};
use crate::lengths::{e_p, ordinary_length, transversality};
use crate::padic_core::PrimeContext;
use crate::qform::{diagonalize, parse_entry, rat_string, DiagonalForm, SymForm};
use crate::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Closed form if one applies, else the reduction, else counting.
    Auto,
    Closed,
    Reduced,
    Bruteforce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Inert,
    Split,
}

impl From<CaseArg> for PrimeCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Inert => PrimeCase::Inert,
            CaseArg::Split => PrimeCase::Split,
        }
    }
}

/// Exact local invariants of special cycles on Hilbert-Blumenthal surfaces.
///
/// Forms are written either as diagonal literals such as "1,D*p,p^2" (D is the
/// fixed non-residue, p the working prime) or as JSON arrays of row-major
/// half-Gram entries such as ["1","1/2","1/2","1"].
#[derive(Debug, Parser)]
#[command(name = "gkloc", version)]
pub struct Cli {
    /// Odd working prime.
    #[arg(long, global = true, default_value_t = 3)]
    pub prime: u64,
    /// Non-residue Δ mod p; the smallest one by default.
    #[arg(long, global = true)]
    pub delta: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Work budget for exhaustive counts.
    #[arg(long, global = true, env = "GKLOC_BUDGET")]
    pub budget: Option<u128>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Local density alpha_p(S, T) by closed form, unimodular reduction or counting mod p^t.
    Density {
        /// S, H4, S', S~' or a form literal.
        #[arg(long, default_value = "S")]
        ambient: String,
        #[arg(long)]
        form: String,
        /// Counting precision t (solutions modulo p^t).
        #[arg(long, default_value_t = 2)]
        precision: u32,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Gross-Keating length e_p(T) of a ternary form; ordinary length p^ord det T of a binary one.
    Length {
        #[arg(long)]
        form: String,
    },
    /// Vertex count of the tube T(beta) in the Bruhat-Tits tree; --form is T, the count uses p^-1 T.
    Tube {
        #[arg(long)]
        form: String,
        /// Refuse tubes reaching beyond this depth from the base vertex.
        #[arg(long)]
        radius: Option<u32>,
        /// Include the dual graph as "u v" lines.
        #[arg(long)]
        edges: bool,
    },
    /// Supersingular locus and irreducibility of Z(T) at p.
    Classify {
        #[arg(long)]
        form: String,
        /// Behaviour of p in Q(sqrt d); derived from --d when omitted.
        #[arg(long, value_enum)]
        case: Option<CaseArg>,
        #[arg(long)]
        d: Option<i64>,
    },
    /// Local Whittaker value and derivative; with --d, the local degree factor of a regular T.
    Eis {
        #[arg(long)]
        form: String,
        #[arg(long, value_enum, default_value_t = CaseArg::Inert)]
        case: CaseArg,
        /// Also evaluate both quantities through densities, counting residuals mod p^precision.
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        d: Option<i64>,
        #[arg(long, default_value_t = 1)]
        level: u64,
    },
    /// Places where T is not represented by diag(1,-1,1,-d), and regularity at a level.
    Diff {
        #[arg(long)]
        form: String,
        #[arg(long)]
        d: i64,
        #[arg(long)]
        level: Option<u64>,
    },
    /// Runs the cross-validation checks; nonzero exit on any failure.
    Verify {
        /// all, quick, or a comma list of check numbers or names.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add wall times to the report (breaks byte-identical output).
        #[arg(long)]
        timings: bool,
    },
}

/// Parses `argv`, runs the command and writes the report; returns the exit status.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(b) = cli.budget {
        std::env::set_var("GKLOC_BUDGET", b.to_string());
    }
    let result = match &cli.command {
        Command::Verify { suite, seed, timings } => return run_verify(&cli, suite, *seed, *timings, out),
        cmd => dispatch(&cli, cmd),
    };
    match result {
        Ok(v) => {
            let _ = emit(&v, cli.format, out);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn context(cli: &Cli) -> Result<PrimeContext> {
    match cli.delta {
        Some(d) => PrimeContext::with_delta(cli.prime, d),
        None => PrimeContext::new(cli.prime),
    }
}

/// A JSON matrix or a diagonal literal.
fn parse_sym(ctx: &PrimeContext, s: &str) -> Result<SymForm> {
    let s = s.trim();
    if s.starts_with('[') {
        let n = serde_json::from_str::<Vec<String>>(s).map_err(|e| Error::Parse(e.to_string()))?.len();
        let k = (n as f64).sqrt().round() as usize;
        if k * k != n {
            return Err(Error::Parse(format!("{n} entries do not form a square matrix")));
        }
        return SymForm::from_json(k, s);
    }
    // exact entries: a global form must not be replaced by its local class
    let entries = s.split(',').map(|e| parse_entry(ctx, e.trim())).collect::<Result<Vec<_>>>()?;
    Ok(SymForm::diag(&entries))
}

fn parse_diag(ctx: &PrimeContext, s: &str) -> Result<DiagonalForm> {
    if s.trim().starts_with('[') {
        return diagonalize(ctx, &parse_sym(ctx, s)?);
    }
    DiagonalForm::parse(*ctx, s)
}

fn parse_ambient(ctx: &PrimeContext, s: &str) -> Result<DiagonalForm> {
    match NamedForm::parse(s) {
        Ok(named) => Ok(named.diagonal(ctx)),
        Err(_) => parse_diag(ctx, s),
    }
}

fn dispatch(cli: &Cli, cmd: &Command) -> Result<Value> {
    let ctx = context(cli)?;
    match cmd {
        Command::Density { ambient, form, precision, method } => {
            density_cmd(&ctx, &parse_ambient(&ctx, ambient)?, &parse_diag(&ctx, form)?, *precision, *method)
        }
        Command::Length { form } => length_cmd(&parse_diag(&ctx, form)?),
        Command::Tube { form, radius, edges } => tube_cmd(&parse_diag(&ctx, form)?, *radius, *edges),
        Command::Classify { form, case, d } => classify_cmd(&ctx, &parse_sym(&ctx, form)?, *case, *d),
        Command::Eis { form, case, precision, d, level } => match d {
            Some(d) => degree_cmd(&parse_sym(&ctx, form)?, *d, *level),
            None => eis_cmd(&parse_diag(&ctx, form)?, (*case).into(), *precision),
        },
        Command::Diff { form, d, level } => diff_cmd(&parse_sym(&ctx, form)?, *d, *level),
        Command::Verify { .. } => unreachable!(),
    }
}

fn density_cmd(ctx: &PrimeContext, s: &DiagonalForm, t: &DiagonalForm, prec: u32, method: Method) -> Result<Value> {
    let base = |m: &str| json!({ "S": s.label(), "T": t.label(), "method": m });
    let closed = || -> Result<Value> {
        let v = closed_form(s, t)?.eval(&Rat::from_integer(1.into()));
        let mut o = base("closed");
        o["density"] = rat_string(&v).into();
        Ok(o)
    };
    let reduced = || -> Result<Value> {
        let r = evaluate_reduction(&reduce(s, t)?, prec)?;
        let mut o = base("reduced");
        o["density"] = rat_string(&r.value).into();
        o["factors"] = r.factors.iter().map(|(k, v)| json!([k, rat_string(v)])).collect();
        if let Some(c) = r.residual_count {
            o["t"] = c.t.into();
            o["count"] = c.count.to_string().into();
            o["stabilized"] = c.stabilized.into();
        }
        Ok(o)
    };
    let brute = || -> Result<Value> {
        let c = density_bruteforce(ctx, &s.to_symform(), &t.to_symform(), prec)?;
        let mut o = base("bruteforce");
        o["t"] = c.t.into();
        o["count"] = c.count.to_string().into();
        o["density"] = rat_string(&c.density).into();
        o["stabilized"] = c.stabilized.into();
        Ok(o)
    };
    let skip = |e: &Error| matches!(e, Error::Unsupported(_) | Error::NotReducible | Error::RankMismatch { .. });
    match method {
        Method::Closed => closed(),
        Method::Reduced => reduced(),
        Method::Bruteforce => brute(),
        Method::Auto => match closed() {
            Err(e) if skip(&e) => match reduced() {
                Err(e) if skip(&e) => brute(),
                r => r,
            },
            r => r,
        },
    }
}

fn length_cmd(t: &DiagonalForm) -> Result<Value> {
    match t.rank() {
        2 => Ok(json!({ "T": t.label(), "ordinary_length": ordinary_length(t)?.to_string() })),
        _ => {
            let r = e_p(t)?;
            Ok(json!({
                "T": t.label(),
                "e_p": int_or_rat(&r.value),
                "case": r.case,
                "in_domain": r.in_domain,
                "transversal": transversality(t),
            }))
        }
    }
}

fn tube_cmd(t: &DiagonalForm, radius: Option<u32>, edges: bool) -> Result<Value> {
    let rep = tube_count_for(&t.shift(-1))?;
    if let Some(r) = radius {
        if rep.radius > r {
            return Err(Error::Budget { needed: rep.radius as u128, budget: r as u128 });
        }
    }
    let mut o = json!({
        "T": t.label(),
        "count": rep.count,
        "edges": rep.edges,
        "radius": rep.radius,
        "cases": rep.cases,
        "fixed_set_types": rep.fixed_set_types,
    });
    if edges {
        o["edge_list"] = rep.edge_list_text().into();
    }
    Ok(o)
}

fn classify_cmd(ctx: &PrimeContext, t: &SymForm, case: Option<CaseArg>, d: Option<i64>) -> Result<Value> {
    let case: PrimeCase = match (case, d) {
        (Some(c), _) => c.into(),
        (None, Some(d)) => prime_case(ctx.p(), d)?,
        (None, None) => return Err(Error::Parse("give --case or --d".into())),
    };
    let c = classify_cycle(ctx, t, case)?;
    let mut o = json!({ "T": t.to_json(), "case": case, "locus": c.locus, "reasons": c.reasons });
    if t.non_integral_entry(ctx).is_none() {
        let diag = diagonalize(ctx, t)?;
        o["T_local"] = diag.label().into();
        match diag.rank() {
            3 if diag.exps()[0] >= 1 => o["irreducible"] = hz_irreducible(&diag)?.into(),
            4 => o["irreducible"] = siegel_irreducible(&diag)?.into(),
            _ => {}
        }
    }
    Ok(o)
}

fn eis_cmd(t: &DiagonalForm, case: PrimeCase, prec: Option<u32>) -> Result<Value> {
    let len = e_p(t)?;
    let mut o = json!({
        "T": t.label(),
        "case": case,
        "value": whittaker_value(t, case)?,
        "derivative": whittaker_derivative(t, case)?,
        "e_p": int_or_rat(&len.value),
    });
    if let Some(prec) = prec {
        o["value_via_density"] = serde_json::to_value(whittaker_value_via_density(t, case, prec)?).unwrap();
        o["derivative_via_density"] = serde_json::to_value(whittaker_derivative_via_density(t, case)?).unwrap();
    }
    Ok(o)
}

fn degree_cmd(t: &SymForm, d: i64, level: u64) -> Result<Value> {
    let f = degree_factor(t, d, level)?;
    Ok(json!({
        "T": t.to_json(),
        "d": d,
        "level": level,
        "prime": f.prime,
        "e_p": int_or_rat(&f.e_p),
        "logp": f.logp,
        "T_local": f.local_form,
        "locus": f.classification.locus,
        "reasons": f.classification.reasons,
    }))
}

fn diff_cmd(t: &SymForm, d: i64, level: Option<u64>) -> Result<Value> {
    let diff = diff_set(t, d)?;
    let mut o = json!({
        "T": t.to_json(),
        "d": d,
        "diff": diff.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "odd": diff.len() % 2 == 1,
    });
    if let Some(n) = level {
        let r = is_regular(t, d, n)?;
        o["level"] = n.into();
        o["regular"] = r.regular.into();
        o["reason"] = r.reason.into();
    }
    Ok(o)
}

fn run_verify<W: Write>(cli: &Cli, suite: &str, seed: u64, timings: bool, out: &mut W) -> i32 {
    let names = match verify::select(suite) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let report = verify::run(&names, seed);
    let mut v = serde_json::to_value(&report).unwrap();
    if timings {
        for (c, r) in v["checks"].as_array_mut().unwrap().iter_mut().zip(&report.checks) {
            c["wall_ms"] = (r.wall.as_millis() as u64).into();
        }
    }
    let _ = match cli.format {
        Format::Json => emit(&v, Format::Json, out),
        Format::Csv => verify_csv(&report, timings, out),
        Format::Text => verify_text(&report, timings, out),
    };
    if report.passed {
        0
    } else {
        1
    }
}

fn verify_text<W: Write>(r: &verify::VerifyReport, timings: bool, out: &mut W) -> std::io::Result<()> {
    for c in &r.checks {
        let status = match c.status {
            verify::Status::Pass => "PASS",
            verify::Status::Fail => "FAIL",
            verify::Status::SkippedBudget => "SKIP",
        };
        write!(out, "{status} {} ({} cases)", c.name, c.cases)?;
        if timings {
            write!(out, " {:.1}s", c.wall.as_secs_f64())?;
        }
        writeln!(out, "  {}", c.identity)?;
        for m in &c.mismatches {
            writeln!(out, "    {}: {} != {}", m.case, m.lhs, m.rhs)?;
        }
        for n in &c.notes {
            writeln!(out, "    note: {n}")?;
        }
    }
    writeln!(out, "{}", if r.passed { "all checks passed" } else { "some checks failed" })
}

fn verify_csv<W: Write>(r: &verify::VerifyReport, timings: bool, out: &mut W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["name", "status", "cases", "mismatches", "identity"];
    if timings {
        header.push("wall_ms");
    }
    w.write_record(&header)?;
    for c in &r.checks {
        let status = serde_json::to_value(c.status).unwrap().as_str().unwrap().to_string();
        let mut row = vec![c.name.to_string(), status, c.cases.to_string(), c.mismatches.len().to_string(), c.identity.to_string()];
        if timings {
            row.push(c.wall.as_millis().to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()
}

fn int_or_rat(q: &Rat) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        rat_string(q)
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes a flat JSON object as pretty JSON, one CSV header and row, or `key: value` lines.
fn emit<W: Write>(v: &Value, format: Format, out: &mut W) -> std::io::Result<()> {
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(v).unwrap()),
        Format::Csv => {
            let obj = v.as_object().expect("reports are objects");
            let mut w = csv::Writer::from_writer(out);
            w.write_record(obj.keys())?;
            w.write_record(obj.values().map(scalar))?;
            w.flush()
        }
        Format::Text => {
            for (k, val) in v.as_object().expect("reports are objects") {
                match val {
                    Value::String(s) if s.contains('\n') => writeln!(out, "{k}:\n{s}")?,
                    _ => writeln!(out, "{k}: {}", scalar(val))?,
                }
            }
            Ok(())
        }
    }
}
