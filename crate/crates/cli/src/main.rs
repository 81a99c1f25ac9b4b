mod plot;

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use heptad::exactfield::{format_rational, FieldElement, FieldError, RootChoice};
use heptad::heptagon::{
    adjoint_formula, adjoint_nullspace, residual, theta_witness, HeptagonError, HeptagonFile,
};
use heptad::klein::{self, KleinError, KleinOptions, PrimeRequest};
use heptad::projgeom::{monomials, GeomError, QuarticForm};
use heptad::tautring::{eval_ring_expr, parse_ring_expr, scorza_cycle_product, TautError, TautRing};
use heptad::walkgraph::{bound_ledger, closed_walks};

#[derive(Parser)]
#[command(name = "heptad", version, about = "Heptagons, adjoint quartics and the tautological ring of Cⁿ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tautological ring calculations on Cⁿ.
    #[command(subcommand)]
    Ring(RingCommand),
    /// Closed walks of length k on the degeneration graph.
    Walks {
        #[arg(long)]
        k: u32,
    },
    /// The full upper-bound ledger, recomputed.
    Bound,
    /// Adjoint quartic of a heptagon read from a JSON file (`-` for stdin).
    Adjoint {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// Also report the theta-characteristic witness and fail if it is invalid.
        #[arg(long)]
        check_theta: bool,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Sign-grid cells per side for the curve trace.
        #[arg(long, default_value_t = 400)]
        resolution: usize,
        /// Viewport `xmin,xmax,ymin,ymax`; fitted to the residual points by default.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        bounds: Option<Vec<f64>>,
    },
    /// The Klein quartic pipeline.
    #[command(subcommand)]
    Klein(KleinCommand),
    /// The heptagons in the adjoint fiber over the Klein quartic.
    #[command(subcommand)]
    Fiber(FiberCommand),
}

#[derive(Subcommand)]
enum RingCommand {
    /// Evaluate an expression such as `S(1,2)*S(2,3)*S(1,3)`.
    Eval {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long, default_value_t = 3)]
        g: u32,
        expr: String,
    },
    /// Degree of the Scorza cycle `S(1,2)·S(2,3)·…·S(1,n)`.
    Scorza {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long, default_value_t = 3)]
        g: u32,
    },
}

#[derive(clap::Args, Clone)]
struct PipelineArgs {
    /// Use exactly this prime for modular certificates (replaced if unusable).
    #[arg(long)]
    modular_prime: Option<u64>,
    /// Where the prime search starts when no prime is given.
    #[arg(long, env = "HEPTAD_PRIME", default_value_t = klein::DEFAULT_PRIME_SEED)]
    prime_seed: u64,
    /// Complex root for α: `most-real` or `branch:K`.
    #[arg(long, default_value = "most-real", value_parser = parse_root)]
    root: RootChoice,
    #[arg(long)]
    jobs: Option<usize>,
}

impl PipelineArgs {
    fn options(&self) -> KleinOptions {
        KleinOptions {
            root: self.root,
            prime: match self.modular_prime {
                Some(p) => PrimeRequest::Exact(p),
                None => PrimeRequest::SearchFrom(self.prime_seed),
            },
            jobs: self.jobs,
            ..KleinOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum KleinCommand {
    /// Run every certificate and print the report.
    Certify {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Jacobian rank certificates for all 336 heptagons.
        #[arg(long)]
        full_fiber: bool,
        /// Exact rank and minor for the base heptagon as well.
        #[arg(long)]
        exact_jacobian: bool,
        /// Also write the fiber to this file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FiberCommand {
    /// Write the fiber as heptagon JSON documents.
    Export {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Output file; stdout by default.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Formula,
    Nullspace,
    Both,
}

fn parse_root(s: &str) -> Result<RootChoice, String> {
    match s.split_once(':') {
        None if s == "most-real" => Ok(RootChoice::MostReal),
        Some(("branch", k)) => k.parse().map(RootChoice::Branch).map_err(|e| format!("bad branch index: {e}")),
        _ => Err(format!("expected most-real or branch:K, got {s}")),
    }
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Other(String),
    Parse(String),
    Degenerate(String),
    Invalid(String),
    Certificate(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Degenerate(_) => 3,
            Failure::Invalid(_) => 4,
            Failure::Certificate(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Other(m) | Failure::Parse(m) | Failure::Degenerate(m) | Failure::Invalid(m) | Failure::Certificate(m) => m,
        }
    }
}

impl From<TautError> for Failure {
    fn from(e: TautError) -> Self {
        match e {
            TautError::Parse(_) | TautError::IndexOutOfRange { .. } | TautError::InvalidPair(..) => {
                Failure::Parse(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn field_failure(e: FieldError) -> Failure {
    match e {
        FieldError::Parse(_) => Failure::Parse(e.to_string()),
        _ => Failure::Other(e.to_string()),
    }
}

impl From<HeptagonError> for Failure {
    fn from(e: HeptagonError) -> Self {
        use HeptagonError::*;
        match e {
            Json(_) | Geom(GeomError::Json(_)) => Failure::Parse(e.to_string()),
            Field(f) | Geom(GeomError::Field(f)) => field_failure(f),
            DegenerateHeptagon(_) => Failure::Degenerate(e.to_string()),
            WrongCount(_) | DuplicateLines(..) | ConcurrentTriple(..) | IdenticalPoints(..) | Geom(_) => {
                Failure::Invalid(e.to_string())
            }
        }
    }
}

impl From<KleinError> for Failure {
    fn from(e: KleinError) -> Self {
        match e {
            KleinError::Certificate { .. } => Failure::Certificate(e.to_string()),
            KleinError::Heptagon(h) => h.into(),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn io(e: std::io::Error, path: &std::path::Path) -> Failure {
    Failure::Other(format!("{}: {e}", path.display()))
}

/// Pretty JSON on stdout; a closed pipe (`| head`) ends the process quietly.
fn print_json(v: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
            std::process::exit(1);
        }
        std::process::exit(0);
    }
}

fn write_json(path: &std::path::Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    fs::write(path, text + "\n").map_err(|e| io(e, path))
}

fn cmd_ring(cmd: RingCommand) -> Result<(), Failure> {
    match cmd {
        RingCommand::Eval { n, g, expr } => {
            let parsed = parse_ring_expr(&expr).map_err(|e| Failure::Parse(format!("{expr}\n{}^\n{e}", " ".repeat(e.column - 1))))?;
            let class = eval_ring_expr(&parsed, TautRing::new(n, g))?;
            println!("{class}");
            match class.degree() {
                Ok(d) => println!("degree = {}", format_rational(&d)),
                Err(TautError::DimensionMismatch(m)) => println!("degree undefined: {m} is not top-degree"),
                Err(e) => return Err(e.into()),
            }
        }
        RingCommand::Scorza { n, g } => {
            if n < 2 {
                return Err(Failure::Parse(format!("the Scorza cycle needs n >= 2, got {n}")));
            }
            println!("{}", format_rational(&scorza_cycle_product(n, g)?));
        }
    }
    Ok(())
}

fn read_input(path: &PathBuf) -> Result<Value, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| io(e, path))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| io(e, path))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn quartic_json(q: &QuarticForm<FieldElement>, file: &HeptagonFile) -> Result<Value, Failure> {
    let n = QuarticForm::from_vec(q.coeffs().to_vec());
    let pivot = n.coeffs().iter().find(|c| !c.is_zero()).cloned();
    let normalized = match pivot {
        Some(p) => {
            let s = p.try_inv().map_err(field_failure)?;
            n.map(|c| c.try_mul(&s).expect("same tower"))
        }
        None => n,
    };
    Ok(normalized.to_json(&file.tower, file.depth))
}

fn cmd_adjoint(
    input: PathBuf,
    method: Method,
    check_theta: bool,
    svg: Option<PathBuf>,
    resolution: usize,
    bounds: Option<Vec<f64>>,
) -> Result<(), Failure> {
    let file = HeptagonFile::from_json(&read_input(&input)?)?;
    let h = &file.heptagon;
    let mut report = serde_json::Map::new();
    report.insert("field".into(), json!(if file.depth == 0 { "rational" } else { "klein-tower" }));
    let names: Vec<String> = monomials(4).iter().map(|e| format!("x^{}*y^{}*z^{}", e[0], e[1], e[2])).collect();
    report.insert("monomials".into(), json!(names));

    let formula = matches!(method, Method::Formula | Method::Both).then(|| adjoint_formula(h));
    if let Some(q) = &formula {
        if q.is_zero() {
            return Err(Failure::Degenerate("adjoint formula vanishes identically".into()));
        }
        report.insert("formula".into(), quartic_json(q, &file)?);
    }
    let nullspace = match method {
        Method::Nullspace | Method::Both => Some(adjoint_nullspace(h)?),
        Method::Formula => None,
    };
    if let Some(ns) = &nullspace {
        report.insert("nullspace".into(), quartic_json(&ns.form, &file)?);
        report.insert("kernel_dim".into(), json!(ns.kernel_dim));
    }
    let adjoint = formula.clone().or_else(|| nullspace.as_ref().map(|n| n.form.clone())).expect("some method ran");
    if let (Some(f), Some(n)) = (&formula, &nullspace) {
        let agree = f.proportional_to(&n.form);
        report.insert("methods_agree".into(), json!(agree));
        if !agree {
            print_json(&Value::Object(report));
            return Err(Failure::Certificate("formula and null-space adjoints are not proportional".into()));
        }
    }

    let res = residual(h);
    let points: Vec<Value> = res
        .points()
        .iter()
        .map(|(&(i, j), p)| {
            let kind = if res.inner().any(|(k, _)| *k == (i, j)) { "inner" } else { "outer" };
            json!({
                "lines": [i, j],
                "kind": kind,
                "point": p.to_json(&file.tower, file.depth),
                "on_adjoint": adjoint.eval(p).is_zero(),
            })
        })
        .collect();
    let all_on = points.iter().all(|p| p["on_adjoint"] == json!(true));
    report.insert("residual_points".into(), Value::Array(points));
    report.insert("residual_on_adjoint".into(), json!(all_on));

    let mut theta_ok = true;
    if check_theta {
        let w = theta_witness(h);
        theta_ok = w.valid();
        report.insert(
            "theta_witness".into(),
            json!({
                "p35": w.p35.to_json(&file.tower, file.depth),
                "p36": w.p36.to_json(&file.tower, file.depth),
                "p46": w.p46.to_json(&file.tower, file.depth),
                "p27": w.p27.to_json(&file.tower, file.depth),
                "noncollinear": w.noncollinear,
                "distinct": w.distinct,
                "valid": theta_ok,
            }),
        );
    }
    if let Some(path) = svg {
        let b = match bounds {
            Some(v) => [v[0], v[1], v[2], v[3]],
            None => plot::auto_bounds(h),
        };
        let spec = plot::PlotSpec::new(b, resolution).map_err(Failure::Parse)?;
        let out = plot::render(h, &adjoint, &spec);
        fs::write(&path, out.text).map_err(|e| io(e, &path))?;
        report.insert("svg".into(), json!({ "path": path.display().to_string(), "curve_segments": out.segments }));
    }
    print_json(&Value::Object(report));
    if !all_on {
        return Err(Failure::Certificate("adjoint does not vanish on every residual point".into()));
    }
    if !theta_ok {
        return Err(Failure::Certificate("theta witness is invalid".into()));
    }
    Ok(())
}

fn cmd_klein(cmd: KleinCommand) -> Result<(), Failure> {
    let KleinCommand::Certify { pipeline, full_fiber, exact_jacobian, export } = cmd;
    let opts = KleinOptions { full_fiber, exact_jacobian, ..pipeline.options() };
    let run = klein::run(&opts)?;
    print_json(&serde_json::to_value(&run.report).expect("report serializes"));
    if let Some(path) = export {
        write_json(&path, &klein::fiber_export(&run.context, &run.fiber)?)?;
    }
    if run.report.all_passed {
        Ok(())
    } else {
        let names: Vec<&str> = run.report.failed().iter().map(|c| c.name.as_str()).collect();
        Err(Failure::Certificate(format!("failed certificates: {}", names.join(", "))))
    }
}

fn cmd_fiber(cmd: FiberCommand) -> Result<(), Failure> {
    let FiberCommand::Export { pipeline, output } = cmd;
    let run = klein::run(&pipeline.options())?;
    let doc = klein::fiber_export(&run.context, &run.fiber)?;
    match output {
        Some(path) => write_json(&path, &doc),
        None => {
            print_json(&doc);
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ring(c) => cmd_ring(c),
        Command::Walks { k } => {
            println!("{}", closed_walks(k));
            Ok(())
        }
        Command::Bound => {
            let ledger = bound_ledger().map_err(|e| Failure::Other(e.to_string()))?;
            print_json(&serde_json::to_value(ledger).expect("ledger serializes"));
            Ok(())
        }
        Command::Adjoint { input, method, check_theta, svg, resolution, bounds } => {
            cmd_adjoint(input, method, check_theta, svg, resolution, bounds)
        }
        Command::Klein(c) => cmd_klein(c),
        Command::Fiber(c) => cmd_fiber(c),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
