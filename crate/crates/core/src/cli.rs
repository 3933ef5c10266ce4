//! Command-line front end. Every subcommand writes one JSON document (or CSV
//! with `--csv`) to the output stream; failures go to the error stream as a
//! single JSON line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::asymptotics::{
    asymptotic_coeff, classify_sequence_with_tol, convergence_study, expansion_residual, normalized_product_symbol, sigma0_brute,
    sigma0_closed, sigma1_brute, sigma1_closed, verify_sigma_identities,
};
use crate::correspondence::{dual_chars, family_chars, family_chars_exact, operator_kernel, operator_of, symbol_of, CharacteristicNumbers, Family};
use crate::error::Error;
use crate::exact::{rational_to_f64, Rational, SqrtRational};
use crate::sphere::{eval_ylm, pointwise_product, poisson_bracket, HarmonicVector, SpherePoint};
use crate::su2_basis::{coupled_basis, mu_norm, verify_parity, OperatorMatrix};
use crate::trikernel::{
    berezin_stratonovich, berezin_transform, berezin_transform_inverse, recursive_trikernel, recursive_trikernel_invariant,
    stratonovich_berezin, trikernel_coeff, trikernel_invariant, wildberger_closed, wildberger_polar,
};
use crate::twisted::{alternate_relation_defect, cartesian_identities_check, twisted_product, verify_symbol_parity};
use crate::wigner::{clebsch_gordan, product_symbol, wigner_3jm, wigner_6j_jjj};

pub const SCHEMA: &str = "spincorr/v1";

#[derive(Parser, Debug)]
#[command(name = "spincorr", version, about = "Spin-j symbol correspondences, twisted products and their asymptotics")]
struct Cli {
    /// Emit CSV with a header row instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// Print exact values as sign*sqrt(p/q) strings.
    #[arg(long, global = true)]
    exact: bool,
    /// key=value defaults (tolerance, lmax, nmin, nmax, nstep, family, jobs).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, value_name = "K")]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clebsch-Gordan, 3jm, 6j and product symbols.
    #[command(subcommand)]
    Wigner(WignerCmd),
    /// Coupled operator basis.
    #[command(subcommand)]
    Basis(BasisCmd),
    /// Spherical harmonics and classical products.
    #[command(subcommand)]
    Sphere(SphereCmd),
    /// Symbol correspondences.
    #[command(subcommand)]
    Corr(CorrCmd),
    /// Twisted products.
    #[command(subcommand)]
    Twist(TwistCmd),
    /// Integral trikernels and transforms.
    #[command(subcommand)]
    Trikernel(TriCmd),
    /// Large-n behaviour.
    #[command(subcommand)]
    Asym(AsymCmd),
}

fn half(s: &str) -> Result<i64, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: i64 = num.parse().map_err(|_| format!("`{s}` is not an integer or p/2"))?;
    match den {
        "1" => Ok(2 * p),
        "2" => Ok(p),
        _ => Err(format!("`{s}`: denominator must be 1 or 2")),
    }
}

#[derive(Args, Debug)]
struct SixHalves {
    #[arg(long, value_parser = half, allow_hyphen_values = true)]
    j1: i64,
    #[arg(long, value_parser = half, allow_hyphen_values = true)]
    m1: i64,
    #[arg(long, value_parser = half, allow_hyphen_values = true)]
    j2: i64,
    #[arg(long, value_parser = half, allow_hyphen_values = true)]
    m2: i64,
    #[arg(long, value_parser = half, allow_hyphen_values = true)]
    j3: i64,
    #[arg(long, value_parser = half, allow_hyphen_values = true)]
    m3: i64,
}

#[derive(Subcommand, Debug)]
enum WignerCmd {
    /// C^{j1 j2 j3}_{m1 m2 m3}; spins as integers or p/2.
    Cg(SixHalves),
    /// Wigner 3jm symbol.
    #[command(name = "3jm")]
    ThreeJm(SixHalves),
    /// {l1 l2 l3; j j j} with n = 2j.
    #[command(name = "6j")]
    SixJ {
        #[arg(long)]
        l1: i64,
        #[arg(long)]
        l2: i64,
        #[arg(long)]
        l3: i64,
        #[arg(long)]
        n: i64,
    },
    /// Product symbol [l1 l2 l3; m1 m2 m3][j].
    Prod {
        #[arg(long)]
        l1: i64,
        #[arg(long, allow_hyphen_values = true)]
        m1: i64,
        #[arg(long)]
        l2: i64,
        #[arg(long, allow_hyphen_values = true)]
        m2: i64,
        #[arg(long)]
        l3: i64,
        #[arg(long, allow_hyphen_values = true)]
        m3: i64,
        #[arg(long)]
        n: i64,
    },
}

#[derive(Subcommand, Debug)]
enum BasisCmd {
    /// Matrix of e(l, m) in the spin-n/2 representation.
    Matrix {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
    },
    /// Norm of the unnormalized E(l, m), 0 <= m <= l.
    Mu {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        m: usize,
    },
    /// Commutator/anticommutator parity of all basis products.
    VerifyParity {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum SphereCmd {
    /// Y_l^m at (theta azimuth, phi polar).
    Ylm {
        #[arg(long)]
        l: usize,
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        /// Report against the orthonormal harmonics instead of unit-mean-square ones.
        #[arg(long)]
        orthonormal: bool,
    },
    /// Pointwise product of two harmonic expansions.
    Product(PairFiles),
    /// Poisson bracket of two harmonic expansions.
    Bracket(PairFiles),
}

#[derive(Args, Debug)]
struct PairFiles {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    /// Truncation degree of the result.
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    orthonormal: bool,
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    /// stratonovich, berezin, toeplitz (each with -alt), inverse-power, log-shift, mod3-sign.
    #[arg(long)]
    family: Option<String>,
    /// Explicit characteristic numbers c_0,...,c_n (overrides --family).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    chars: Option<Vec<f64>>,
    #[arg(long)]
    n: usize,
}

#[derive(Subcommand, Debug)]
enum CorrCmd {
    /// Characteristic numbers of a family.
    Chars(FamilyArgs),
    /// Operator kernel K.
    Kernel(FamilyArgs),
    /// Symbol of an operator read from JSON.
    Symbol {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        operator: PathBuf,
    },
    /// Operator of a symbol read from JSON.
    Operator {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        f: PathBuf,
    },
    /// Characteristic numbers of the dual correspondence.
    Dual(FamilyArgs),
}

#[derive(Subcommand, Debug)]
enum TwistCmd {
    /// Twisted product f * g.
    Product {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Parity rules, alternate relation and (standard families) cartesian identities.
    Verify(FamilyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KernelForm {
    Coeff,
    Invariant,
    Recursive,
    RecursiveInvariant,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TransformKind {
    Berezin,
    BerezinInv,
    Bs,
    Sb,
}

#[derive(Subcommand, Debug)]
enum TriCmd {
    /// Trikernel at point triples read from JSON.
    Eval {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        points: PathBuf,
        #[arg(long, value_enum, default_value = "coeff")]
        form: KernelForm,
    },
    /// Closed-form Berezin trikernel with amplitude and phase.
    Wildberger {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        points: PathBuf,
    },
    /// Berezin transform and the Berezin/Stratonovich conversions.
    Transform {
        #[arg(long, value_enum)]
        kind: TransformKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        f: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    S0,
    S1,
}

#[derive(Args, Debug)]
struct Grid {
    #[arg(long)]
    nmin: Option<usize>,
    #[arg(long)]
    nstep: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum AsymCmd {
    /// Sigma sums for one triangle, or a closed-vs-brute sweep.
    Sigma {
        #[arg(long, num_args = 3, value_names = ["L1", "L2", "L3"], required_unless_present = "sweep")]
        l: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value = "s0")]
        which: Which,
        /// Use the defining sum instead of the closed form.
        #[arg(long)]
        brute: bool,
        /// Check closed = brute for every triangle with l1+l2+l3 <= MAX.
        #[arg(long, value_name = "MAX", conflicts_with = "l")]
        sweep: Option<usize>,
    },
    /// Normalized product symbol against its two-term expansion.
    Expand {
        #[arg(long)]
        l1: usize,
        #[arg(long, allow_hyphen_values = true)]
        m1: i64,
        #[arg(long)]
        l2: usize,
        #[arg(long, allow_hyphen_values = true)]
        m2: i64,
        #[arg(long)]
        l3: usize,
        #[arg(long)]
        n: usize,
    },
    /// Type of the sequence of correspondences of a family.
    Classify {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        lmax: Option<usize>,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sup-norm errors of the symmetrized product and scaled commutator.
    Converge {
        #[arg(long)]
        family: Option<String>,
        #[arg(long, default_value_t = 1)]
        l1: usize,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        m1: i64,
        #[arg(long, default_value_t = 1)]
        l2: usize,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        m2: i64,
        #[command(flatten)]
        grid: Grid,
    },
}

enum Failure {
    Usage(String),
    Compute(Error),
    Check(String, Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

struct Output {
    json: Value,
    csv: Option<String>,
}

#[derive(Default)]
struct Config {
    values: BTreeMap<String, String>,
}

const CONFIG_KEYS: [&str; 7] = ["tolerance", "lmax", "nmin", "nmax", "nstep", "family", "jobs"];

impl Config {
    fn load(path: &Path) -> Res<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || line.starts_with('[') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Failure::Usage(format!("config line {}: expected key=value", i + 1)))?;
            let k = k.trim().to_string();
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(Failure::Usage(format!("config line {}: unknown key {k}", i + 1)));
            }
            values.insert(k, v.trim().trim_matches('"').to_string());
        }
        Ok(Self { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Res<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Failure::Usage(format!("config key {key}: cannot parse {v}"))),
        }
    }
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let text: Vec<&str> = msg.lines().take_while(|l| !l.starts_with("Usage:")).map(str::trim).filter(|l| !l.is_empty()).collect();
            return report(err, &Failure::Usage(text.join(" ").trim_start_matches("error: ").to_string()));
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let text = if cli.csv { o.csv.unwrap_or_else(|| flatten_csv(&o.json)) } else { format!("{}\n", o.json) };
            match out.write_all(text.as_bytes()) {
                Ok(()) => 0,
                Err(e) => report(err, &Failure::Usage(format!("write failed: {e}"))),
            }
        }
        Err(Failure::Check(msg, body)) => {
            let text = if cli.csv { flatten_csv(&body) } else { format!("{body}\n") };
            let _ = out.write_all(text.as_bytes());
            report(err, &Failure::Check(msg, Value::Null))
        }
        Err(f) => report(err, &f),
    }
}

fn report(err: &mut dyn Write, f: &Failure) -> i32 {
    let (code, kind, msg) = match f {
        Failure::Usage(m) => (2, "usage", m.clone()),
        Failure::Compute(e) => (1, e.kind(), e.to_string()),
        Failure::Check(m, _) => (1, "check_failed", m.clone()),
    };
    let _ = writeln!(err, "{}", json!({"error": kind, "exit": code, "message": msg}));
    code
}

fn execute(cli: &Cli) -> Res<Output> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let jobs = match cli.jobs {
        Some(k) => k,
        None => cfg.get("jobs")?.unwrap_or(1),
    };
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let ctx = Ctx { exact: cli.exact, cfg };
    pool.install(|| dispatch(&cli.cmd, &ctx))
}

struct Ctx {
    exact: bool,
    cfg: Config,
}

impl Ctx {
    fn family(&self, flag: &Option<String>) -> Res<Family> {
        let name = match flag {
            Some(s) => s.clone(),
            None => self.cfg.get::<String>("family")?.unwrap_or_else(|| "stratonovich".into()),
        };
        Family::from_name(&name).map_err(|_| Failure::Usage(format!("unknown family {name}")))
    }

    fn chars(&self, a: &FamilyArgs) -> Res<(String, CharacteristicNumbers)> {
        if let Some(c) = &a.chars {
            return Ok(("custom".into(), CharacteristicNumbers::new(a.n, c.clone())?));
        }
        let fam = self.family(&a.family)?;
        Ok((fam.name(), family_chars(&fam, a.n)?))
    }

    fn grid(&self, g: &Grid) -> Res<Vec<usize>> {
        let lo = pick(g.nmin, self.cfg.get("nmin")?, 50);
        let step = pick(g.nstep, self.cfg.get("nstep")?, 50);
        let hi = pick(g.nmax, self.cfg.get("nmax")?, 400);
        if step == 0 || lo == 0 || lo > hi {
            return Err(Failure::Usage(format!("bad n grid {lo}..={hi} step {step}")));
        }
        Ok((lo..=hi).step_by(step).collect())
    }

    fn scalar(&self, cmd: &str, v: &SqrtRational) -> Res<Output> {
        let decimal = v.to_f64()?;
        let value = if self.exact { json!(v.to_string()) } else { json!(decimal) };
        let shown = if self.exact { v.to_string() } else { format!("{decimal:e}") };
        Ok(Output {
            json: json!({"schema": SCHEMA, "command": cmd, "value": value, "decimal": decimal}),
            csv: Some(format!("value,decimal\n{shown},{decimal:e}\n")),
        })
    }
}

fn pick<T>(flag: Option<T>, cfg: Option<T>, default: T) -> T {
    flag.or(cfg).unwrap_or(default)
}

fn doc(cmd: &str, key: &str, body: Value) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(cmd));
    m.insert(key.into(), body);
    Value::Object(m)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn read_json(path: &Path) -> Res<Value> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| Failure::Usage(format!("cannot read stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Compute(Error::Parse(format!("{}: {e}", path.display()))))
}

fn read_harmonic(path: &Path) -> Res<HarmonicVector> {
    let v = read_json(path)?;
    let v = v.get("coefficients").cloned().unwrap_or(v);
    Ok(HarmonicVector::from_json(&v, None)?)
}

fn read_points(path: &Path) -> Res<Vec<[SpherePoint; 3]>> {
    let v = read_json(path)?;
    let bad = |what: &str| Failure::Compute(Error::Parse(format!("points: {what}")));
    let triples = v.as_array().ok_or_else(|| bad("expected a list of point triples"))?;
    let mut out = Vec::with_capacity(triples.len());
    for t in triples {
        let t = t.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("each entry must hold three points"))?;
        let mut pts = [SpherePoint::north(); 3];
        for (k, p) in t.iter().enumerate() {
            let (theta, phi) = match p {
                Value::Array(a) if a.len() == 2 => (a[0].as_f64(), a[1].as_f64()),
                Value::Object(o) => (o.get("theta").and_then(Value::as_f64), o.get("phi").and_then(Value::as_f64)),
                _ => (None, None),
            };
            let (Some(theta), Some(phi)) = (theta, phi) else {
                return Err(bad("a point is [theta, phi] or {\"theta\", \"phi\"}"));
            };
            pts[k] = SpherePoint::new(theta, phi)?;
        }
        out.push(pts);
    }
    Ok(out)
}

fn need_degree(f: &HarmonicVector, n: usize) -> Res<HarmonicVector> {
    if f.degree() > n {
        return Err(Error::DegreeTooHigh { degree: f.degree(), cap: n }.into());
    }
    Ok(f.with_cap(n))
}

fn harmonic_out(cmd: &str, f: &HarmonicVector, orthonormal: bool) -> Output {
    let f = if orthonormal { f.scale(Complex64::new((4.0 * std::f64::consts::PI).sqrt(), 0.0)) } else { f.clone() };
    let mut csv = String::from("l,m,re,im\n");
    for (l, m, v) in f.iter().filter(|t| t.2.norm() > 0.0) {
        csv.push_str(&format!("{l},{m},{:e},{:e}\n", v.re, v.im));
    }
    let mut body = doc(cmd, "coefficients", f.to_json());
    body["degree"] = json!(f.degree());
    Output { json: body, csv: Some(csv) }
}

fn operator_out(cmd: &str, p: &OperatorMatrix) -> Output {
    let mut csv = String::from("row,col,re,im\n");
    for r in 0..p.dim() {
        for c in 0..p.dim() {
            let v = p.get(r, c);
            csv.push_str(&format!("{r},{c},{:e},{:e}\n", v.re, v.im));
        }
    }
    Output { json: doc(cmd, "operator", p.to_json()), csv: Some(csv) }
}

fn chars_out(cmd: &str, name: &str, c: &CharacteristicNumbers, exact: Option<Vec<SqrtRational>>) -> Output {
    let mut csv = String::from(if exact.is_some() { "l,c,exact\n" } else { "l,c\n" });
    for (l, v) in c.as_slice().iter().enumerate() {
        match &exact {
            Some(e) => csv.push_str(&format!("{l},{v:e},{}\n", e[l])),
            None => csv.push_str(&format!("{l},{v:e}\n")),
        }
    }
    let mut body = doc(cmd, "chars", c.to_json());
    body["family"] = json!(name);
    if let Some(e) = exact {
        body["exact"] = json!(e.iter().map(|x| x.to_string()).collect::<Vec<_>>());
    }
    Output { json: body, csv: Some(csv) }
}

fn complex_json(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn rational_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn checked(pass: bool, msg: &str, out: Output) -> Res<Output> {
    if pass {
        Ok(out)
    } else {
        Err(Failure::Check(msg.into(), out.json))
    }
}

fn dispatch(cmd: &Command, ctx: &Ctx) -> Res<Output> {
    match cmd {
        Command::Wigner(w) => wigner(w, ctx),
        Command::Basis(b) => basis(b, ctx),
        Command::Sphere(s) => sphere(s),
        Command::Corr(c) => corr(c, ctx),
        Command::Twist(t) => twist(t, ctx),
        Command::Trikernel(t) => trikernel(t, ctx),
        Command::Asym(a) => asym(a, ctx),
    }
}

fn wigner(cmd: &WignerCmd, ctx: &Ctx) -> Res<Output> {
    match cmd {
        WignerCmd::Cg(a) => ctx.scalar("wigner cg", &clebsch_gordan(a.j1, a.m1, a.j2, a.m2, a.j3, a.m3)?),
        WignerCmd::ThreeJm(a) => ctx.scalar("wigner 3jm", &wigner_3jm(a.j1, a.m1, a.j2, a.m2, a.j3, a.m3)?),
        WignerCmd::SixJ { l1, l2, l3, n } => ctx.scalar("wigner 6j", &wigner_6j_jjj(*l1, *l2, *l3, *n)?),
        WignerCmd::Prod { l1, m1, l2, m2, l3, m3, n } => ctx.scalar("wigner prod", &product_symbol(*l1, *m1, *l2, *m2, *l3, *m3, *n)?),
    }
}

fn basis(cmd: &BasisCmd, ctx: &Ctx) -> Res<Output> {
    match cmd {
        BasisCmd::Matrix { n, l, m } => {
            let e = coupled_basis(*n, *l, *m)?;
            let mut entries = Vec::new();
            let mut csv = String::from("row,col,value\n");
            for r in 0..=*n as i64 {
                let c = r + m;
                if c < 0 || c > *n as i64 {
                    continue;
                }
                let v = e.entry(r as usize, c as usize);
                let shown = if ctx.exact { json!(v.to_string()) } else { json!(v.to_f64()?) };
                csv.push_str(&format!("{r},{c},{}\n", if ctx.exact { v.to_string() } else { format!("{:e}", v.to_f64()?) }));
                entries.push(json!({"row": r, "col": c, "value": shown}));
            }
            let diag: Vec<Value> = entries.iter().map(|x| x["value"].clone()).collect();
            let mut body = doc("basis matrix", "diag", Value::Array(diag));
            body["n"] = json!(n);
            body["l"] = json!(l);
            body["m"] = json!(m);
            body["entries"] = Value::Array(entries);
            Ok(Output { json: body, csv: Some(csv) })
        }
        BasisCmd::Mu { n, l, m } => ctx.scalar("basis mu", &mu_norm(*n, *l, *m)?),
        BasisCmd::VerifyParity { n } => {
            let r = verify_parity(*n)?;
            let out = Output { json: doc("basis verify-parity", "report", to_value(&r)), csv: None };
            checked(r.pass, "parity rule violated", out)
        }
    }
}

fn sphere(cmd: &SphereCmd) -> Res<Output> {
    match cmd {
        SphereCmd::Ylm { l, m, theta, phi, orthonormal } => {
            let mut y = eval_ylm(*l, *m, &SpherePoint::new(*theta, *phi)?)?;
            if *orthonormal {
                y /= (4.0 * std::f64::consts::PI).sqrt();
            }
            Ok(Output { json: doc("sphere ylm", "value", complex_json(y)), csv: Some(format!("re,im\n{:e},{:e}\n", y.re, y.im)) })
        }
        SphereCmd::Product(p) | SphereCmd::Bracket(p) => {
            let f = read_harmonic(&p.f)?;
            let g = read_harmonic(&p.g)?;
            let (name, h) = match cmd {
                SphereCmd::Product(_) => ("sphere product", pointwise_product(&f, &g, p.cap)),
                _ => ("sphere bracket", poisson_bracket(&f, &g, p.cap)),
            };
            Ok(harmonic_out(name, &h, p.orthonormal))
        }
    }
}

fn corr(cmd: &CorrCmd, ctx: &Ctx) -> Res<Output> {
    match cmd {
        CorrCmd::Chars(a) => {
            let (name, c) = ctx.chars(a)?;
            let exact = match (ctx.exact, a.chars.is_none()) {
                (true, true) => Some(family_chars_exact(&ctx.family(&a.family)?, a.n)?),
                _ => None,
            };
            Ok(chars_out("corr chars", &name, &c, exact))
        }
        CorrCmd::Kernel(a) => {
            let (_, c) = ctx.chars(a)?;
            Ok(operator_out("corr kernel", &operator_kernel(&c)?))
        }
        CorrCmd::Symbol { fam, operator } => {
            let (_, c) = ctx.chars(fam)?;
            let p = OperatorMatrix::from_json(&read_json(operator)?)?;
            Ok(harmonic_out("corr symbol", &symbol_of(&p, &c)?, false))
        }
        CorrCmd::Operator { fam, f } => {
            let (_, c) = ctx.chars(fam)?;
            Ok(operator_out("corr operator", &operator_of(&read_harmonic(f)?, &c)?))
        }
        CorrCmd::Dual(a) => {
            let (name, c) = ctx.chars(a)?;
            Ok(chars_out("corr dual", &format!("{name} dual"), &dual_chars(&c), None))
        }
    }
}

fn twist(cmd: &TwistCmd, ctx: &Ctx) -> Res<Output> {
    match cmd {
        TwistCmd::Product { fam, f, g } => {
            let (_, c) = ctx.chars(fam)?;
            let f = need_degree(&read_harmonic(f)?, c.n())?;
            let g = need_degree(&read_harmonic(g)?, c.n())?;
            Ok(harmonic_out("twist product", &twisted_product(&f, &g, &c)?, false))
        }
        TwistCmd::Verify(a) => {
            let (name, c) = ctx.chars(a)?;
            let parity = verify_symbol_parity(&c)?;
            let alternate = alternate_relation_defect(&c)?;
            let cartesian = match (a.chars.is_none(), name.as_str()) {
                (true, "stratonovich" | "berezin") if a.n >= 1 => Some(cartesian_identities_check(&ctx.family(&a.family)?, a.n)?),
                _ => None,
            };
            let pass = parity.pass && alternate <= 1e-10 && cartesian.as_ref().is_none_or(|r| r.pass);
            let mut body = doc("twist verify", "parity", to_value(&parity));
            body["family"] = json!(name);
            body["alternate_defect"] = json!(alternate);
            body["cartesian"] = to_value(&cartesian);
            body["pass"] = json!(pass);
            checked(pass, "twisted product identities violated", Output { json: body, csv: None })
        }
    }
}

fn trikernel(cmd: &TriCmd, ctx: &Ctx) -> Res<Output> {
    match cmd {
        TriCmd::Eval { fam, points, form } => {
            let (name, c) = ctx.chars(fam)?;
            let pts = read_points(points)?;
            let mut vals = Vec::with_capacity(pts.len());
            let mut csv = String::from("index,re,im\n");
            for (i, [a, b, d]) in pts.iter().enumerate() {
                let z = match form {
                    KernelForm::Coeff => trikernel_coeff(&c, a, b, d)?,
                    KernelForm::Invariant => trikernel_invariant(&c, a, b, d)?,
                    KernelForm::Recursive => recursive_trikernel(&c, a, b, d)?,
                    KernelForm::RecursiveInvariant => recursive_trikernel_invariant(&c, a, b, d)?,
                };
                csv.push_str(&format!("{i},{:e},{:e}\n", z.re, z.im));
                vals.push(complex_json(z));
            }
            let mut body = doc("trikernel eval", "values", Value::Array(vals));
            body["family"] = json!(name);
            Ok(Output { json: body, csv: Some(csv) })
        }
        TriCmd::Wildberger { n, points } => {
            let pts = read_points(points)?;
            let mut vals = Vec::with_capacity(pts.len());
            let mut csv = String::from("index,re,im,amplitude,phase\n");
            for (i, [a, b, d]) in pts.iter().enumerate() {
                let z = wildberger_closed(*n, a, b, d);
                let p = wildberger_polar(*n, a, b, d);
                csv.push_str(&format!("{i},{:e},{:e},{:e},{:e}\n", z.re, z.im, p.amplitude, p.phase));
                vals.push(json!({"re": z.re, "im": z.im, "amplitude": p.amplitude, "phase": p.phase}));
            }
            Ok(Output { json: doc("trikernel wildberger", "values", Value::Array(vals)), csv: Some(csv) })
        }
        TriCmd::Transform { kind, n, f } => {
            let f = read_harmonic(f)?;
            let h = match kind {
                TransformKind::Berezin => berezin_transform(&f, *n)?,
                TransformKind::BerezinInv => berezin_transform_inverse(&f, *n)?,
                TransformKind::Bs => berezin_stratonovich(&f, *n)?,
                TransformKind::Sb => stratonovich_berezin(&f, *n)?,
            };
            Ok(harmonic_out("trikernel transform", &h, false))
        }
    }
}

fn asym(cmd: &AsymCmd, ctx: &Ctx) -> Res<Output> {
    match cmd {
        AsymCmd::Sigma { sweep: Some(max), .. } => {
            let s = verify_sigma_identities(*max)?;
            Ok(Output { json: doc("asym sigma", "sweep", to_value(&s)), csv: None })
        }
        AsymCmd::Sigma { l, which, brute, .. } => {
            let l = l.as_deref().unwrap_or_default();
            let &[a, b, c] = l else {
                return Err(Failure::Usage("--l takes three degrees".into()));
            };
            let v = match (which, brute) {
                (Which::S0, false) => sigma0_closed(a, b, c)?,
                (Which::S0, true) => sigma0_brute(a, b, c)?,
                (Which::S1, false) => sigma1_closed(a, b, c)?,
                (Which::S1, true) => sigma1_brute(a, b, c)?,
            };
            let s = rational_string(&v);
            let decimal = rational_to_f64(&v);
            let mut body = doc("asym sigma", "value", json!(s));
            body["decimal"] = json!(decimal);
            body["method"] = json!(if *brute { "brute" } else { "closed" });
            Ok(Output { json: body, csv: Some(format!("value,decimal\n{s},{decimal:e}\n")) })
        }
        AsymCmd::Expand { l1, m1, l2, m2, l3, n } => {
            let exact = normalized_product_symbol(*l1, *m1, *l2, *m2, *l3, *n)?;
            let a0 = asymptotic_coeff(*l1, *m1, *l2, *m2, *l3, 0)?;
            let a1 = asymptotic_coeff(*l1, *m1, *l2, *m2, *l3, 1)?;
            let residual = expansion_residual(*l1, *m1, *l2, *m2, *l3, *n)?;
            let show = |x: &SqrtRational| -> Res<Value> { Ok(if ctx.exact { json!(x.to_string()) } else { json!(x.to_f64()?) }) };
            let mut body = doc("asym expand", "symbol", show(&exact)?);
            body["order0"] = show(&a0)?;
            body["order1"] = show(&a1)?;
            body["residual"] = json!(residual);
            Ok(Output { json: body, csv: None })
        }
        AsymCmd::Classify { family, lmax, grid, tol } => {
            let fam = ctx.family(family)?;
            let lmax = pick(*lmax, ctx.cfg.get("lmax")?, 6);
            let tol = pick(*tol, ctx.cfg.get("tolerance")?, 1e-6);
            let r = classify_sequence_with_tol(&fam, lmax, &ctx.grid(grid)?, tol)?;
            Ok(Output { json: doc("asym classify", "report", to_value(&r)), csv: None })
        }
        AsymCmd::Converge { family, l1, m1, l2, m2, grid } => {
            let fam = ctx.family(family)?;
            let s = convergence_study(&fam, *l1, *m1, *l2, *m2, &ctx.grid(grid)?)?;
            Ok(Output { json: doc("asym converge", "study", to_value(&s)), csv: Some(s.to_csv()) })
        }
    }
}

fn flatten_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&join(k), x, rows)),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(&join(&i.to_string()), x, rows)),
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, x) in rows {
        s.push_str(&format!("{k},{}\n", if x.contains(',') { format!("\"{x}\"") } else { x }));
    }
    s
}
