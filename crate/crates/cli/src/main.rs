//! `qfd`: densities of integers represented by integral quadratic forms.
//!
//! Exit codes: 0 success, 1 internal error, 2 parse or input error,
//! 3 domain refusal.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde_json::{json, Value};

use qfd_core::enumerate::{exceptional_set, represented_set, write_bitmap};
use qfd_core::forms::{parse_form, QuadraticForm};
use qfd_core::global::{density, residue_sieve, theorem_checks};
use qfd_core::inverse::{greedy_interval_product, v2_density_construction};
use qfd_core::local::{local_density, representation_table};
use qfd_core::numtheory::{fmt_rational, parse_rational, rational_valuation};
use qfd_core::Error;

#[derive(Parser)]
#[command(name = "qfd", version, about = "Exact densities of integers represented by quadratic forms")]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Append decimal approximations to exact rationals.
    #[arg(long, global = true)]
    float: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct FormArg {
    /// Form as a polynomial, e.g. "x^2+y^2+7*z^2".
    form: Option<String>,
    /// Upper-triangular coefficients c11,c12,..,c1n,c22,.. (row-major).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    coeffs: Option<Vec<i64>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Global density δ(f) with its local factors.
    Density(FormArg),
    /// Representation table at p.
    Table {
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        form: FormArg,
    },
    /// Local density δ_p(f).
    Local {
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        form: FormArg,
    },
    /// Empirical density of D_f up to X and its gap to δ(f).
    Empirical {
        #[arg(long)]
        limit: u64,
        /// Write the represented set as a QFD1 bitmap.
        #[arg(long)]
        bitmap: Option<String>,
        /// Accept the local superset for indefinite ternaries.
        #[arg(long)]
        proxy: bool,
        #[command(flatten)]
        form: FormArg,
    },
    /// Locally represented integers up to X that are not represented.
    Exceptions {
        #[arg(long)]
        limit: u64,
        #[command(flatten)]
        form: FormArg,
    },
    /// Residue-class sieve for local representability below valuation K.
    Sieve {
        #[arg(long)]
        cutoff: u32,
        #[command(flatten)]
        form: FormArg,
    },
    /// Density constructions: greedy products in (α, β) or large v₂(δ).
    Construct {
        #[arg(long, requires = "beta", conflicts_with = "v2")]
        alpha: Option<String>,
        #[arg(long, requires = "alpha")]
        beta: Option<String>,
        #[arg(long)]
        v2: Option<u32>,
    },
    /// Check the structural theorems against the computed density.
    Check(FormArg),
}

enum Failure {
    Lib(Error),
    Usage(String),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 1,
            Failure::Lib(e) if e.is_input_error() || matches!(e, Error::NotPrime(_)) => 2,
            Failure::Lib(Error::Internal(_) | Error::ScanCeilingExceeded { .. }) => 1,
            Failure::Lib(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Usage(s) => s.clone(),
            Failure::Io(e) => format!("i/o error: {e}"),
        }
    }
}

type Out = Result<String, Failure>;

fn load_form(arg: &FormArg) -> Result<QuadraticForm, Failure> {
    match (&arg.form, &arg.coeffs) {
        (Some(s), None) => Ok(parse_form(s)?),
        (None, Some(c)) => {
            let n = (1..=64).find(|n| n * (n + 1) / 2 == c.len()).ok_or_else(|| {
                Failure::Usage(format!("{} coefficients is not a triangular number", c.len()))
            })?;
            Ok(QuadraticForm::new(n, c.clone())?)
        }
        _ => Err(Failure::Usage("give exactly one of a form expression or --coeffs".into())),
    }
}

fn positive(name: &str, v: u64) -> Result<u64, Failure> {
    if v == 0 {
        return Err(Failure::Usage(format!("--{name} must be positive")));
    }
    Ok(v)
}

struct Fmt {
    float: bool,
}

impl Fmt {
    fn rat(&self, r: &BigRational) -> String {
        if self.float {
            format!("{} ≈ {:.6}", fmt_rational(r), r.to_f64().unwrap_or(f64::NAN))
        } else {
            fmt_rational(r)
        }
    }

    /// Adds `<key>_approx` next to each exact rational when `--float` is set.
    fn json_rat(&self, obj: &mut serde_json::Map<String, Value>, key: &str, r: &BigRational) {
        obj.insert(key.into(), json!(fmt_rational(r)));
        if self.float {
            obj.insert(format!("{key}_approx"), json!(r.to_f64()));
        }
    }
}

fn run(cli: Cli) -> Out {
    let fm = Fmt { float: cli.float };
    let json = cli.json;
    match cli.cmd {
        Cmd::Density(arg) => {
            let r = density(&load_form(&arg)?)?;
            if json {
                let mut v = serde_json::to_value(&r).expect("serializable");
                if fm.float {
                    v["density_approx"] = json!(r.density.to_f64());
                }
                return Ok(v.to_string());
            }
            let mut s = format!("density  {}\ncase     {}\n", fm.rat(&r.density), r.case.as_str());
            for (p, d) in &r.factors {
                writeln!(s, "  δ_{:<6} {}", p, fm.rat(d)).unwrap();
            }
            Ok(s)
        }
        Cmd::Table { p, form } => {
            let t = representation_table(&load_form(&form)?, p)?;
            if json {
                return Ok(serde_json::to_string(&t).expect("serializable"));
            }
            let mut s = format!("p = {p}\n{:>8}  {:>4}\n", "class", "v");
            let half = t.reps.len() / 2;
            for (i, (r, e)) in t.reps.iter().zip(&t.entries).enumerate() {
                let v = e.map_or("inf".into(), |v| v.to_string());
                let class = if i >= half { format!("{}·{p}", t.reps[i - half]) } else { r.to_string() };
                writeln!(s, "{class:>8}  {v:>4}").unwrap();
            }
            writeln!(s, "table    {t}\ndensity  {}", fm.rat(&t.density())).unwrap();
            Ok(s)
        }
        Cmd::Local { p, form } => {
            let d = local_density(&load_form(&form)?, p)?;
            if json {
                let mut obj = serde_json::Map::new();
                obj.insert("p".into(), json!(p));
                fm.json_rat(&mut obj, "density", &d);
                return Ok(Value::Object(obj).to_string());
            }
            Ok(fm.rat(&d))
        }
        Cmd::Empirical { limit, bitmap, proxy, form } => {
            let f = load_form(&form)?;
            let set = represented_set(&f, positive("limit", limit)?, proxy)?;
            if let Some(path) = bitmap {
                write_bitmap(BufWriter::new(File::create(path)?), limit, |m| set.contains(m))?;
            }
            let emp = set.empirical_density();
            let d = density(&f)?.density;
            let gap = (&emp - &d).abs();
            if json {
                let mut obj = serde_json::Map::new();
                obj.insert("limit".into(), json!(limit));
                obj.insert("method".into(), json!(set.method.as_str()));
                obj.insert("count".into(), json!(set.count()));
                fm.json_rat(&mut obj, "empirical", &emp);
                fm.json_rat(&mut obj, "density", &d);
                fm.json_rat(&mut obj, "gap", &gap);
                return Ok(Value::Object(obj).to_string());
            }
            let approx = |r: &BigRational| format!("{:.6}", r.to_f64().unwrap_or(f64::NAN));
            Ok(format!(
                "method     {}\ncount      {}\nempirical  {} ({})\ndensity    {} ({})\ngap        {}",
                set.method.as_str(),
                set.count(),
                fmt_rational(&emp),
                approx(&emp),
                fmt_rational(&d),
                approx(&d),
                approx(&gap),
            ))
        }
        Cmd::Exceptions { limit, form } => {
            let e = exceptional_set(&load_form(&form)?, positive("limit", limit)?)?;
            if json {
                return Ok(json!({"limit": e.limit, "count": e.members.len(), "exceptions": e.members}).to_string());
            }
            Ok(e.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "))
        }
        Cmd::Sieve { cutoff, form } => {
            let sv = residue_sieve(&load_form(&form)?, cutoff)?;
            let d = sv.density();
            if json {
                let mut obj = serde_json::Map::new();
                obj.insert("cutoff".into(), json!(cutoff));
                obj.insert("modulus".into(), json!(sv.modulus.to_string()));
                obj.insert("classes".into(), json!(sv.class_count().to_string()));
                fm.json_rat(&mut obj, "density", &d);
                return Ok(Value::Object(obj).to_string());
            }
            Ok(format!(
                "modulus  {}\nclasses  {}\ndensity  {}",
                sv.modulus,
                sv.class_count(),
                fm.rat(&d)
            ))
        }
        Cmd::Construct { alpha, beta, v2 } => match (alpha, beta, v2) {
            (Some(a), Some(b), None) => {
                let plan = greedy_interval_product(&parse_rational(&a)?, &parse_rational(&b)?)?;
                if json {
                    let mut v = serde_json::to_value(&plan).expect("serializable");
                    if fm.float {
                        v["product_approx"] = json!(plan.product.to_f64());
                    }
                    return Ok(v.to_string());
                }
                let primes: Vec<String> = plan.primes.iter().map(|p| p.to_string()).collect();
                let shown = if primes.len() > 40 {
                    format!("{} ... {} ({} primes)", primes[..20].join(" "), primes[primes.len() - 5..].join(" "), primes.len())
                } else {
                    primes.join(" ")
                };
                Ok(format!(
                    "interval  ({}, {})\nprimes    {shown}\nproduct   {}",
                    fmt_rational(&plan.alpha),
                    fmt_rational(&plan.beta),
                    fm.rat(&plan.product)
                ))
            }
            (None, None, Some(k)) => {
                let (p, d) = v2_density_construction(k)?;
                let v = rational_valuation(&d, 2)?;
                if json {
                    let mut obj = serde_json::Map::new();
                    obj.insert("k".into(), json!(k));
                    obj.insert("p".into(), json!(p));
                    fm.json_rat(&mut obj, "density", &d);
                    obj.insert("v2".into(), json!(v));
                    return Ok(Value::Object(obj).to_string());
                }
                Ok(format!("p        {p}\ndensity  {}\nv2       {v}", fm.rat(&d)))
            }
            _ => Err(Failure::Usage("construct needs --alpha and --beta, or --v2".into())),
        },
        Cmd::Check(arg) => {
            let r = theorem_checks(&load_form(&arg)?)?;
            if json {
                return Ok(serde_json::to_string(&r).expect("serializable"));
            }
            let mut s = format!("density  {}\n", fm.rat(&r.density.density));
            for c in &r.checks {
                let tag = match (c.applies, c.holds) {
                    (false, _) => "n/a ",
                    (true, true) => "ok  ",
                    (true, false) => "FAIL",
                };
                writeln!(s, "[{tag}] {:<50} {}", c.name, c.detail).unwrap();
            }
            Ok(s)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("QFD_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
        }
    }
    match run(cli) {
        Ok(s) => {
            println!("{}", s.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qfd: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
