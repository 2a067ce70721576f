//! `qmarkov`: build, diagonalize and classify quantum Markov states from
//! JSON interaction specs.

mod document;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_rational::BigRational;
use sha2::{Digest, Sha256};

use qmarkov::classify::ClassifyOptions;
use qmarkov::markov::{stationary_boundaries, Boundaries, InteractionSpec, Segment};
use qmarkov::models::{gen_ising, gen_ising_exact, gen_markov_lifting, gen_random, EigenvaluePool, RandomParams};
use qmarkov::Tolerances;

use document::{parse_rational, SpecDocument};
use report::{RunReport, Timer};

/// Environment variable naming a JSON file of tolerance overrides.
const TOLERANCE_ENV: &str = "QMARKOV_TOLERANCES";

#[derive(Parser)]
#[command(name = "qmarkov", version, about = "Diagonalize and classify non-homogeneous quantum Markov states")]
struct Cli {
    /// Record per-stage wall-clock times in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a spec.
    Validate(Input),
    /// Assemble the segment Hamiltonian and the density of a segment.
    Build(BuildArgs),
    /// Diagonalize a segment and extract its classical Markov measure.
    Diagonalize(DiagonalizeArgs),
    /// Classify the von Neumann factor generated by a periodic state.
    Classify(ClassifyArgs),
    /// Write a spec for a named model.
    Gen(GenArgs),
    /// Run every stage and write a combined report.
    Report(ReportArgs),
}

#[derive(Args)]
struct Input {
    /// Spec document (JSON).
    spec: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryChoice {
    /// Stationary boundaries for periodic chains, the stored blocks otherwise.
    Auto,
    Spec,
    Stationary,
}

#[derive(Args)]
struct SegmentArgs {
    /// Segment endpoints `K L`.
    #[arg(long, num_args = 2, value_names = ["K", "L"], allow_negative_numbers = true)]
    segment: Vec<i64>,
    #[arg(long, value_enum, default_value = "auto")]
    boundaries: BoundaryChoice,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    segment: SegmentArgs,
    /// Skip the dense density and use the block path form only.
    #[arg(long)]
    block_path_only: bool,
    /// Include the full density matrix in the report.
    #[arg(long, conflicts_with = "block_path_only")]
    dense_density: bool,
}

#[derive(Args)]
struct DiagonalizeArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    segment: SegmentArgs,
    /// Random event pairs added to the Markov property check.
    #[arg(long, default_value_t = 64)]
    events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ClassifyFlags {
    /// Largest window `n`.
    #[arg(long)]
    max_n: Option<usize>,
    /// Largest denominator for rational reconstruction.
    #[arg(long)]
    max_denom: Option<u64>,
    /// Acceptance threshold for rational reconstruction.
    #[arg(long)]
    tol: Option<f64>,
    /// Ignore exact eigenvalues.
    #[arg(long)]
    float: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    flags: ClassifyFlags,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    segment: SegmentArgs,
    #[command(flatten)]
    flags: ClassifyFlags,
    #[arg(long, default_value_t = 64)]
    events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    model: Model,
    /// Write the document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pool {
    Mixed,
    RationalLog,
}

#[derive(Subcommand)]
enum Model {
    /// Two-periodic Ising chain with couplings `J1`, `J2`.
    Ising {
        #[arg(long, allow_negative_numbers = true)]
        j1: String,
        #[arg(long, allow_negative_numbers = true)]
        j2: String,
        /// Parse couplings as rationals `p/q` and record exact eigenvalues.
        #[arg(long)]
        exact: bool,
    },
    /// Quantum lifting of a classical transition matrix.
    Markov {
        /// Rows separated by `;`, entries by `,`.
        #[arg(long)]
        matrix: String,
    },
    /// Random commuting spec.
    Random {
        #[arg(long)]
        seed: u64,
        /// Site dimensions over one period, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        dims: Vec<usize>,
        /// Use only diagonal blocks so the state lifts a classical chain.
        #[arg(long)]
        lifting: bool,
        #[arg(long, value_enum, default_value = "mixed")]
        pool: Pool,
        /// Log base of the rational pool.
        #[arg(long, default_value = "2")]
        base: String,
    },
}

enum Failure {
    Usage(String),
    Invalid(Box<RunReport>),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Invalid(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

fn numeric(e: qmarkov::Error) -> Failure {
    Failure::Numeric(e.to_string())
}

struct Loaded {
    spec: InteractionSpec,
    tolerances: Tolerances,
    digest: String,
}

fn read_input(path: &Path) -> Result<(Vec<u8>, String), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    Ok((bytes, digest))
}

fn merge(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => b.extend(o),
        (b, o) => *b = o,
    }
}

/// Defaults, then the document's own tolerances, then the file named by
/// [`TOLERANCE_ENV`].
fn resolve_tolerances(doc: Option<&Tolerances>) -> Result<Tolerances, Failure> {
    let base = doc.cloned().unwrap_or_default();
    let Some(path) = std::env::var_os(TOLERANCE_ENV) else {
        return Ok(base);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Io(format!("{}: {e}", Path::new(&path).display())))?;
    let overlay: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{TOLERANCE_ENV}: {e}")))?;
    let mut value = serde_json::to_value(base).expect("tolerances serialize");
    merge(&mut value, overlay);
    serde_json::from_value(value).map_err(|e| Failure::Usage(format!("{TOLERANCE_ENV}: {e}")))
}

fn load(path: &Path, command: &str) -> Result<Loaded, Failure> {
    let (bytes, digest) = read_input(path)?;
    let doc: SpecDocument =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let tolerances = resolve_tolerances(doc.tolerances.as_ref())?;
    let spec = doc.to_spec().map_err(|e| Failure::Usage(e.to_string()))?;
    let validation = report::validation_stage(&spec, &tolerances);
    if !validation.passed {
        let mut r = RunReport::new(command);
        r.input_digest = Some(digest);
        r.validation = Some(validation);
        return Err(Failure::Invalid(Box::new(r)));
    }
    Ok(Loaded {
        spec,
        tolerances,
        digest,
    })
}

fn segment_of(args: &SegmentArgs, spec: &InteractionSpec) -> Result<Segment, Failure> {
    let seg = match args.segment.as_slice() {
        [k, l] => Segment::new(*k, *l).map_err(|e| Failure::Usage(e.to_string()))?,
        _ => default_segment(spec),
    };
    spec.check_segment(seg.k, seg.l)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(seg)
}

/// One period plus a site for periodic chains, the whole chain otherwise.
fn default_segment(spec: &InteractionSpec) -> Segment {
    match spec.chain {
        qmarkov::markov::Chain::Periodic { period } => Segment { k: 0, l: period.max(2) as i64 },
        qmarkov::markov::Chain::Finite { first_site } => Segment {
            k: first_site,
            l: first_site + spec.sites.len() as i64 - 1,
        },
    }
}

fn boundaries_of(
    choice: BoundaryChoice,
    spec: &InteractionSpec,
    tol: &Tolerances,
) -> Result<(Boundaries, &'static str), Failure> {
    let stationary = match choice {
        BoundaryChoice::Auto => spec.is_periodic(),
        BoundaryChoice::Spec => false,
        BoundaryChoice::Stationary => true,
    };
    if stationary {
        Ok((stationary_boundaries(spec, tol).map_err(numeric)?, "stationary"))
    } else {
        Ok((Boundaries::from_spec(spec), "spec"))
    }
}

fn check_dense(segment: Segment, spec: &InteractionSpec, tol: &Tolerances) -> Result<(), Failure> {
    let dims = spec.segment_dims(segment.k, segment.l).map_err(numeric)?;
    let dim = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
    if dim > tol.dense_dim_limit {
        return Err(numeric(qmarkov::Error::DenseLimit {
            dim,
            limit: tol.dense_dim_limit,
        }));
    }
    Ok(())
}

fn classify_options(flags: &ClassifyFlags, tol: &Tolerances) -> ClassifyOptions {
    let mut o = ClassifyOptions::from_tolerances(tol);
    if let Some(n) = flags.max_n {
        o.n_max = n;
    }
    if let Some(d) = flags.max_denom {
        o.max_denominator = d;
    }
    if let Some(t) = flags.tol {
        o.tolerance = t;
    }
    o.prefer_exact = !flags.float;
    o
}

fn validate(args: &Input, timer: &mut Timer) -> Result<RunReport, Failure> {
    let loaded = timer.time("validate", || load(&args.spec, "validate"))?;
    let mut r = RunReport::new("validate");
    r.input_digest = Some(loaded.digest);
    r.validation = Some(report::validation_stage(&loaded.spec, &loaded.tolerances));
    eprintln!("valid spec: {} sites, {} bonds", loaded.spec.sites.len(), loaded.spec.bonds.len());
    Ok(r)
}

fn build(args: &BuildArgs, timer: &mut Timer) -> Result<RunReport, Failure> {
    let Loaded { spec, tolerances: tol, digest } = load(&args.input.spec, "build")?;
    let segment = segment_of(&args.segment, &spec)?;
    let dense = !args.block_path_only;
    if dense {
        check_dense(segment, &spec, &tol)?;
    }
    let (b, kind) = timer.time("boundaries", || boundaries_of(args.segment.boundaries, &spec, &tol))?;
    let mut r = RunReport::new("build");
    r.input_digest = Some(digest);
    r.segment = Some([segment.k, segment.l]);
    r.boundaries = Some(kind);
    r.validation = Some(report::validation_stage(&spec, &tol));
    r.commutation = Some(
        timer
            .time("commutation", || report::commutation_stage(&spec, segment, &b, &tol))
            .map_err(numeric)?,
    );
    let state = timer
        .time("state", || report::state_stage(&spec, segment, &b, &tol, dense, args.dense_density))
        .map_err(numeric)?;
    eprintln!(
        "segment [{}, {}]: dim {}, ln Z = {:.6}, {} label paths",
        segment.k,
        segment.l,
        state.dim,
        state.log_z,
        state.paths.len()
    );
    r.state = Some(state);
    if dense && kind == "stationary" && check_dense(segment.widened(1), &spec, &tol).is_ok() {
        r.projectivity = timer
            .time("projectivity", || report::projectivity_stage(&spec, segment, &b, &tol))
            .map_err(numeric)?;
    }
    Ok(r)
}

/// Random events for the Markov property check.
#[derive(Clone, Copy)]
struct Sampling {
    events: usize,
    seed: u64,
}

fn diagonalize_into(
    r: &mut RunReport,
    spec: &InteractionSpec,
    segment: Segment,
    b: &Boundaries,
    tol: &Tolerances,
    sampling: Sampling,
    timer: &mut Timer,
) -> Result<(), Failure> {
    let (diag, markov) = timer
        .time("diagonalize", || {
            report::diagonalization_stages(spec, segment, b, tol, sampling.events, sampling.seed)
        })
        .map_err(numeric)?;
    eprintln!(
        "diagonalized [{}, {}]: {} atoms, certification {:.2e}, Markov residual {:.2e}",
        segment.k, segment.l, diag.atoms, diag.certification, markov.max_residual
    );
    if let Some(p) = diag.label_transitions.first() {
        eprintln!("label transitions at site {}:", segment.k);
        for row in p {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            eprintln!("  {}", cells.join("  "));
        }
    }
    r.diagonalization = Some(diag);
    r.markov_property = Some(markov);
    Ok(())
}

fn diagonalize(args: &DiagonalizeArgs, timer: &mut Timer) -> Result<RunReport, Failure> {
    let Loaded { spec, tolerances: tol, digest } = load(&args.input.spec, "diagonalize")?;
    let segment = segment_of(&args.segment, &spec)?;
    check_dense(segment, &spec, &tol)?;
    let (b, kind) = timer.time("boundaries", || boundaries_of(args.segment.boundaries, &spec, &tol))?;
    let mut r = RunReport::new("diagonalize");
    r.input_digest = Some(digest);
    r.segment = Some([segment.k, segment.l]);
    r.boundaries = Some(kind);
    r.validation = Some(report::validation_stage(&spec, &tol));
    r.commutation = Some(report::commutation_stage(&spec, segment, &b, &tol).map_err(numeric)?);
    diagonalize_into(&mut r, &spec, segment, &b, &tol, Sampling { events: args.events, seed: args.seed }, timer)?;
    Ok(r)
}

fn print_classification(c: &report::ClassificationStage) {
    eprintln!("{}", c.summary);
    if c.verdict != "tracial" {
        eprintln!("note: {}", qmarkov::classify::CONVERSE_CAVEAT);
    }
}

fn classify(args: &ClassifyArgs, timer: &mut Timer) -> Result<RunReport, Failure> {
    let Loaded { spec, tolerances: tol, digest } = load(&args.input.spec, "classify")?;
    let options = classify_options(&args.flags, &tol);
    let mut r = RunReport::new("classify");
    r.input_digest = Some(digest);
    r.validation = Some(report::validation_stage(&spec, &tol));
    let c = timer
        .time("classify", || report::classification_stage(&spec, &options))
        .map_err(numeric)?;
    print_classification(&c);
    r.classification = Some(c);
    Ok(r)
}

fn full_report(args: &ReportArgs, timer: &mut Timer) -> Result<RunReport, Failure> {
    let Loaded { spec, tolerances: tol, digest } = load(&args.input.spec, "report")?;
    let segment = segment_of(&args.segment, &spec)?;
    check_dense(segment, &spec, &tol)?;
    let (b, kind) = timer.time("boundaries", || boundaries_of(args.segment.boundaries, &spec, &tol))?;
    let mut r = RunReport::new("report");
    r.input_digest = Some(digest);
    r.segment = Some([segment.k, segment.l]);
    r.boundaries = Some(kind);
    r.validation = Some(report::validation_stage(&spec, &tol));
    r.commutation = Some(
        timer
            .time("commutation", || report::commutation_stage(&spec, segment, &b, &tol))
            .map_err(numeric)?,
    );
    r.state = Some(
        timer
            .time("state", || report::state_stage(&spec, segment, &b, &tol, true, false))
            .map_err(numeric)?,
    );
    if kind == "stationary" && check_dense(segment.widened(1), &spec, &tol).is_ok() {
        r.projectivity = timer
            .time("projectivity", || report::projectivity_stage(&spec, segment, &b, &tol))
            .map_err(numeric)?;
    }
    diagonalize_into(&mut r, &spec, segment, &b, &tol, Sampling { events: args.events, seed: args.seed }, timer)?;
    if spec.is_periodic() {
        let options = classify_options(&args.flags, &tol);
        let c = timer
            .time("classify", || report::classification_stage(&spec, &options))
            .map_err(numeric)?;
        print_classification(&c);
        r.classification = Some(c);
    }
    Ok(r)
}

fn parse_matrix(text: &str) -> Result<DMatrix<f64>, Failure> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(format!("--matrix: {e}")))?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Failure::Usage("--matrix: expected a square matrix".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rational_arg(name: &str, text: &str) -> Result<BigRational, Failure> {
    parse_rational(text).ok_or_else(|| Failure::Usage(format!("{name}: expected an integer or p/q, got {text:?}")))
}

fn generate(args: &GenArgs) -> Result<InteractionSpec, Failure> {
    let params = |e: qmarkov::Error| Failure::Usage(e.to_string());
    match &args.model {
        Model::Ising { j1, j2, exact: true } => {
            Ok(gen_ising_exact(&rational_arg("--j1", j1)?, &rational_arg("--j2", j2)?))
        }
        Model::Ising { j1, j2, exact: false } => {
            let parse = |name: &str, t: &str| {
                t.parse::<f64>()
                    .map_err(|e| Failure::Usage(format!("{name}: {e}")))
            };
            Ok(gen_ising(parse("--j1", j1)?, parse("--j2", j2)?))
        }
        Model::Markov { matrix } => gen_markov_lifting(&parse_matrix(matrix)?).map_err(params),
        Model::Random {
            seed,
            dims,
            lifting,
            pool,
            base,
        } => {
            let mut p = RandomParams::new(*seed, dims.clone());
            p.lifting = *lifting;
            if let Pool::RationalLog = pool {
                let values = ["-1", "-1/2", "0", "1/2", "1", "3/2", "2"]
                    .iter()
                    .filter_map(|v| parse_rational(v))
                    .collect();
                p.pool = EigenvaluePool::RationalLog {
                    base: rational_arg("--base", base)?,
                    values,
                };
            }
            gen_random(&p).map_err(params)
        }
    }
}

fn write_json(value: &impl serde::Serialize, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut timer = Timer::new(cli.timing);
    let (result, out) = match &cli.command {
        Command::Gen(args) => {
            let spec = generate(args)?;
            return write_json(&SpecDocument::from_spec(&spec), args.out.as_deref());
        }
        Command::Validate(a) => (validate(a, &mut timer), a.out.clone()),
        Command::Build(a) => (build(a, &mut timer), a.input.out.clone()),
        Command::Diagonalize(a) => (diagonalize(a, &mut timer), a.input.out.clone()),
        Command::Classify(a) => (classify(a, &mut timer), a.input.out.clone()),
        Command::Report(a) => (full_report(a, &mut timer), a.input.out.clone()),
    };
    let mut r = match result {
        Ok(r) => r,
        Err(Failure::Invalid(r)) => {
            for v in r.validation.iter().flat_map(|v| &v.violations) {
                eprintln!("invalid: {}: {}", v.path, v.message);
            }
            write_json(&r, out.as_deref())?;
            return Err(Failure::Invalid(r));
        }
        Err(e) => return Err(e),
    };
    r.timing_ms = timer.finish();
    write_json(&r, out.as_deref())?;
    if r.checks_passed() {
        Ok(())
    } else {
        Err(Failure::Numeric("a numerical check exceeded its tolerance".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Io(m) | Failure::Numeric(m) => eprintln!("error: {m}"),
                Failure::Invalid(_) => eprintln!("error: the input failed validation"),
            }
            ExitCode::from(f.code())
        }
    }
}
