//! `prbox`: JSON in, JSON out. Exit 0 on success, 1 when a computation
//! says no (verify mismatch, signaling box, search success), 2 on usage or
//! limit errors.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use prbox::boxcore::{self, BlackBox, BoxDocument, CellDifference, DeterministicStrategy, Locality, NoSignaling, Relabeling, SignalingWitness};
use prbox::circuit::{synthesize_nand, CircuitError, NandCircuit, TruthTable};
use prbox::cluster::{self, ClusterError, ConstraintSet, ConstraintSetDocument, SearchOptions};
use prbox::construct::{self, CompileOptions, CompileReport, Message, Verdict};
use prbox::polytope::{self, PolytopeError, VertexClass, VertexReport};
use prbox::rational::serde_text;
use prbox::wiring::{self, ValidatedProtocol, WiringProtocol, DEFAULT_STRATEGY_CAP, DEFAULT_TABLE_CAP};
use prbox::Rational;

mod schema;

#[derive(Parser)]
#[command(name = "prbox", version, about = "Exact simulator for nonlocal boxes, wirings and NAND-block protocols")]
struct Cli {
    /// Worker threads for parallel searches (default: every processor).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the JSON schema of the command's output instead of running it
    /// (all schemas when no command is given).
    #[arg(long, global = true)]
    schema: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Box tables: checks, marginals, constructors.
    #[command(subcommand)]
    Box(BoxCmd),
    /// NAND circuits and truth tables.
    #[command(subcommand)]
    Circuit(CircuitCmd),
    /// Compile a circuit into a wiring protocol and report its resources.
    Compile(CompileArgs),
    /// Run a protocol exactly or by sampling.
    #[command(group(ArgGroup::new("mode").required(true).args(["exact", "sample"])))]
    Simulate(SimulateArgs),
    /// Compare a protocol's induced box with a target box, exactly.
    Verify(VerifyArgs),
    /// Solve a distributed function with n−1 one-bit messages.
    Cc(CcArgs),
    /// The no-signaling polytope: vertices, classification, decomposition.
    #[command(subcommand)]
    Polytope(PolytopeCmd),
    /// The five-party ring constraints and the protocol search.
    #[command(subcommand)]
    Cluster(ClusterCmd),
}

#[derive(Subcommand)]
enum BoxCmd {
    /// Exact no-signaling check; exit 1 with a witness if the box signals.
    Check { file: Option<PathBuf> },
    /// Local decomposition or a separating inequality.
    Local { file: Option<PathBuf> },
    /// Marginal over a subset of parties.
    Marginal {
        file: Option<PathBuf>,
        /// Parties to keep, numbered from 1.
        #[arg(long, value_delimiter = ',', required = true)]
        parties: Vec<usize>,
        /// Inputs of every party (kept parties' entries are ignored); needed
        /// only when the marginal depends on the other parties' inputs.
        #[arg(long, value_delimiter = ',')]
        given: Option<Vec<usize>>,
    },
    /// CHSH value of a 2×2×2 box.
    Chsh {
        file: Option<PathBuf>,
        /// Report the maximum |CHSH| over the relabeling orbit of the functional instead.
        #[arg(long)]
        max: bool,
    },
    #[command(subcommand)]
    Make(MakeCmd),
}

#[derive(Subcommand)]
enum MakeCmd {
    /// The PR box.
    Pr,
    /// Full-correlation box of a Boolean function.
    #[command(group(ArgGroup::new("source").required(true).args(["table", "circuit"])))]
    Fullcorr {
        /// Bits per party (party-major variable order); with --table.
        #[arg(long, value_delimiter = ',', requires = "table")]
        bits: Option<Vec<usize>>,
        /// Truth table as a 0/1 string, row 0 first.
        #[arg(long)]
        table: Option<String>,
        /// Take the function from a circuit file instead.
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CircuitCmd {
    /// NAND circuit for a truth table (a file from `circuit table`, or --bits/--table).
    Synth {
        file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', requires = "table")]
        bits: Option<Vec<usize>>,
        #[arg(long, requires = "bits")]
        table: Option<String>,
    },
    /// Evaluate a circuit on per-party input integers.
    Eval {
        file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        input: Vec<usize>,
        #[arg(long)]
        parties: Option<usize>,
    },
    /// Full truth table of a circuit.
    Table {
        file: Option<PathBuf>,
        #[arg(long)]
        parties: Option<usize>,
    },
}

#[derive(Args)]
struct CompileArgs {
    file: Option<PathBuf>,
    #[arg(long)]
    parties: Option<usize>,
    /// Skip the exact check against the full-correlation box.
    #[arg(long)]
    no_verify: bool,
    /// Also write the protocol JSON here.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    file: Option<PathBuf>,
    #[arg(long)]
    exact: bool,
    #[arg(long, requires_all = ["seed", "input"])]
    sample: bool,
    /// Per-party inputs; exact mode without it prints the whole induced box.
    #[arg(long, value_delimiter = ',')]
    input: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
}

#[derive(Args)]
struct VerifyArgs {
    protocol: PathBuf,
    target: PathBuf,
}

#[derive(Args)]
struct CcArgs {
    file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    input: Vec<usize>,
    #[arg(long, required = true)]
    seed: u64,
    #[arg(long)]
    parties: Option<usize>,
}

#[derive(Args)]
struct Alphabets {
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    outputs: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum PolytopeCmd {
    /// Every vertex of the no-signaling polytope.
    Vertices {
        #[arg(long, value_delimiter = ',', required = true)]
        inputs: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        outputs: Vec<usize>,
    },
    /// Classify one vertex (from a file) or every vertex of a polytope.
    Classify {
        file: Option<PathBuf>,
        #[command(flatten)]
        alphabets: Alphabets,
    },
    /// Write a box as a mixture of vertices; exit 1 if it lies outside the polytope.
    Decompose { file: Option<PathBuf> },
}

#[derive(Args)]
struct ConstraintArgs {
    /// Constraint set file (default: the five-party ring set).
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Flip one constraint's target (numbered from 1; default the last).
    #[arg(long, num_args = 0..=1, default_missing_value = "0")]
    flip_target: Option<usize>,
}

#[derive(Subcommand)]
enum ClusterCmd {
    /// The constraint set.
    Constraints {
        #[command(flatten)]
        set: ConstraintArgs,
    },
    /// Exhaustive search over local deterministic assignments.
    Ghz {
        #[command(flatten)]
        set: ConstraintArgs,
    },
    /// Exhaustive protocol search over PR-box placements; exit 1 on success.
    Search {
        #[arg(long, required = true)]
        boxes: usize,
        #[command(flatten)]
        set: ConstraintArgs,
        /// Profiles per placement re-run through the generic executor.
        #[arg(long, default_value_t = 200)]
        cross_checks: usize,
        /// Add wall-clock seconds to the report (breaks byte-identical output).
        #[arg(long)]
        timing: bool,
    },
}

// ---------------------------------------------------------------------------
// Errors and output

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                usage(e.to_string())
            }
        }
    )*};
}
usage_from!(boxcore::BoxError, CircuitError, wiring::WiringError, construct::ConstructError, PolytopeError, serde_json::Error, std::io::Error);

impl From<ClusterError> for Failure {
    fn from(e: ClusterError) -> Self {
        // Disagreement between the two evaluation routes is a failed check, not misuse.
        let code = if matches!(e, ClusterError::CrossCheck { .. }) { 1 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

/// Compact JSON and the exit code to finish with.
struct Output {
    json: String,
    code: u8,
}

fn ok<T: Serialize>(value: &T) -> Result<Output, Failure> {
    Ok(Output { json: serde_json::to_string(value)?, code: 0 })
}

fn with_code<T: Serialize>(value: &T, refuted: bool) -> Result<Output, Failure> {
    Ok(Output { json: serde_json::to_string(value)?, code: refuted as u8 })
}

// ---------------------------------------------------------------------------
// Inputs

fn read_source(path: Option<&PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display()))),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn source_name(path: Option<&PathBuf>) -> String {
    match path {
        Some(p) if p.as_os_str() != "-" => p.display().to_string(),
        _ => "-".into(),
    }
}

fn read_box(path: Option<&PathBuf>) -> Result<BlackBox, Failure> {
    Ok(BlackBox::from_json(&read_source(path)?)?)
}

/// Circuit JSON, or the plain-text netlist form.
fn read_circuit(path: Option<&PathBuf>, parties: Option<usize>) -> Result<NandCircuit, Failure> {
    let text = read_source(path)?;
    Ok(if text.trim_start().starts_with('{') { NandCircuit::from_json(&text, parties)? } else { NandCircuit::parse_netlist(&text, parties)? })
}

fn read_protocol(path: Option<&PathBuf>) -> Result<ValidatedProtocol, Failure> {
    let p = WiringProtocol::from_json(&read_source(path)?)?;
    p.validate().map_err(|e| usage(e.to_string()))
}

fn env_cap<T: std::str::FromStr>(name: &str, default: T) -> Result<T, Failure> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map_err(|_| usage(format!("{name}={v:?} is not a valid cap"))),
        Err(_) => Ok(default),
    }
}

fn party_major(bits: &[usize]) -> Vec<usize> {
    bits.iter().enumerate().flat_map(|(p, &b)| std::iter::repeat_n(p, b)).collect()
}

/// Truth table interchange form; owners are numbered from 1 and row `r`
/// gives variable `i` the bit `(r >> i) & 1`.
#[derive(Serialize, serde::Deserialize)]
struct TableDocument {
    parties: usize,
    owners: Vec<usize>,
    table: String,
}

impl TableDocument {
    fn of(t: &TruthTable) -> Self {
        Self { parties: t.parties(), owners: t.owners().iter().map(|p| p + 1).collect(), table: t.to_bit_string() }
    }

    fn table(&self) -> Result<TruthTable, Failure> {
        if self.owners.contains(&0) {
            return Err(usage("owners are numbered from 1"));
        }
        Ok(TruthTable::from_bit_string(self.parties, self.owners.iter().map(|p| p - 1).collect(), &self.table)?)
    }
}

fn constraint_set(args: &ConstraintArgs) -> Result<ConstraintSet, Failure> {
    let set = match &args.constraints {
        Some(p) => {
            let doc: ConstraintSetDocument = serde_json::from_str(&read_source(Some(p))?)?;
            ConstraintSet::from_document(&doc)?
        }
        None => cluster::cluster_constraints(),
    };
    Ok(match args.flip_target {
        None => set,
        Some(k) => {
            let count = set.constraints().len();
            let index = if k == 0 { count } else { k };
            if index > count {
                return Err(usage(format!("--flip-target {k}: there are {count} constraints")));
            }
            set.with_flipped_target(index - 1)
        }
    })
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Serialize)]
struct ChshReport {
    #[serde(with = "serde_text")]
    chsh: Rational,
}

#[derive(Serialize)]
struct ChshMaxReport {
    #[serde(with = "serde_text")]
    chsh_max: Rational,
}

#[derive(Serialize)]
struct CheckReport {
    nonsignaling: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<SignalingWitness>,
}

#[derive(Serialize)]
struct WeightedStrategy {
    strategy: DeterministicStrategy,
    #[serde(with = "serde_text")]
    p: Rational,
}

#[derive(Serialize)]
struct Inequality {
    #[serde(with = "prbox::rational::serde_text_vec")]
    coefficients: Vec<Rational>,
    #[serde(with = "serde_text")]
    bound: Rational,
    #[serde(with = "serde_text")]
    value: Rational,
}

#[derive(Serialize)]
struct LocalReport {
    local: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<WeightedStrategy>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Inequality>,
}

#[derive(Serialize)]
struct EvalReport {
    value: bool,
}

#[derive(Serialize)]
struct SampleCount {
    a: Vec<usize>,
    count: u64,
}

#[derive(Serialize)]
struct SampleReport {
    x: Vec<usize>,
    seed: u64,
    runs: u64,
    counts: Vec<SampleCount>,
}

#[derive(Serialize)]
struct VerifyReport {
    #[serde(rename = "match")]
    matches: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    difference: Option<CellDifference>,
}

#[derive(Serialize)]
struct CcReport {
    value: bool,
    expected: bool,
    transcript: Vec<Message>,
    boxes_consumed: usize,
    pr_boxes: usize,
}

#[derive(Serialize)]
struct VerticesReport {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    dimension: usize,
    count: usize,
    vertices: Vec<BoxDocument>,
}

#[derive(Serialize)]
struct ReductionDocument {
    party: usize,
    input: usize,
    output: usize,
    inner: Box<ClassDocument>,
}

#[derive(Serialize)]
struct ClassDocument {
    #[serde(rename = "box")]
    table: BoxDocument,
    class: VertexClass,
    f: Option<String>,
    relabeling: Option<Relabeling>,
    reduction: Option<ReductionDocument>,
}

impl ClassDocument {
    fn of(r: &VertexReport) -> Self {
        Self {
            table: r.vertex.to_document(),
            class: r.class.clone(),
            f: r.f.as_ref().map(|f| f.iter().map(|&b| if b { '1' } else { '0' }).collect()),
            relabeling: r.relabeling.clone(),
            reduction: r.reduction.as_ref().map(|d| ReductionDocument {
                party: d.party + 1,
                input: d.input,
                output: d.output,
                inner: Box::new(Self::of(&d.inner)),
            }),
        }
    }
}

#[derive(Serialize)]
struct Component {
    #[serde(with = "serde_text")]
    weight: Rational,
    class: VertexClass,
    #[serde(rename = "box")]
    table: BoxDocument,
}

#[derive(Serialize)]
struct DecomposeReport {
    decomposable: bool,
    components: Vec<Component>,
}

#[derive(Serialize)]
struct TimedSearch {
    #[serde(flatten)]
    report: cluster::SearchReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_s: Option<f64>,
}

// ---------------------------------------------------------------------------
// Commands

fn run_box(cmd: BoxCmd) -> Result<Output, Failure> {
    match cmd {
        BoxCmd::Check { file } => {
            let b = read_box(file.as_ref())?;
            match boxcore::check_no_signaling(&b) {
                NoSignaling::Ok => ok(&CheckReport { nonsignaling: true, witness: None }),
                NoSignaling::Violation(w) => with_code(&CheckReport { nonsignaling: false, witness: Some(w) }, true),
            }
        }
        BoxCmd::Local { file } => {
            let b = read_box(file.as_ref())?;
            let cap = env_cap("PRBOX_LOCAL_CAP", boxcore::DEFAULT_LOCAL_CAP)?;
            ok(&match boxcore::is_local(&b, cap)? {
                Locality::Local { weights } => LocalReport {
                    local: true,
                    weights: Some(weights.into_iter().map(|(strategy, p)| WeightedStrategy { strategy, p }).collect()),
                    witness: None,
                },
                Locality::Nonlocal { witness } => LocalReport {
                    local: false,
                    weights: None,
                    witness: Some(Inequality { coefficients: witness.coefficients, bound: witness.bound, value: witness.value }),
                },
            })
        }
        BoxCmd::Marginal { file, parties, given } => {
            let b = read_box(file.as_ref())?;
            if parties.iter().any(|&p| p == 0 || p > b.parties()) {
                return Err(usage(format!("parties are numbered 1..={}", b.parties())));
            }
            let keep: Vec<usize> = parties.iter().map(|p| p - 1).collect();
            let m = boxcore::marginal(&b, &keep, given.as_deref())?;
            ok(&m.table.to_document())
        }
        BoxCmd::Chsh { file, max } => {
            let b = read_box(file.as_ref())?;
            if max {
                ok(&ChshMaxReport { chsh_max: boxcore::chsh_max(&b)? })
            } else {
                ok(&ChshReport { chsh: boxcore::chsh_value(&b)? })
            }
        }
        BoxCmd::Make(MakeCmd::Pr) => ok(&boxcore::pr_box().to_document()),
        BoxCmd::Make(MakeCmd::Fullcorr { bits, table, circuit }) => {
            let t = match (bits, table, circuit) {
                (Some(bits), Some(table), None) => TruthTable::from_bit_string(bits.len(), party_major(&bits), &table)?,
                (None, None, Some(path)) => read_circuit(Some(&path), None)?.truth_table()?,
                _ => return Err(usage("give either --bits with --table, or --circuit")),
            };
            ok(&t.full_correlation_box().to_document())
        }
    }
}

fn run_circuit(cmd: CircuitCmd) -> Result<Output, Failure> {
    match cmd {
        CircuitCmd::Synth { file, bits, table } => {
            let t = match (bits, table) {
                (Some(bits), Some(table)) => TruthTable::from_bit_string(bits.len(), party_major(&bits), &table)?,
                _ => serde_json::from_str::<TableDocument>(&read_source(file.as_ref())?)?.table()?,
            };
            Ok(Output { json: synthesize_nand(&t).to_json(), code: 0 })
        }
        CircuitCmd::Eval { file, input, parties } => {
            let c = read_circuit(file.as_ref(), parties)?;
            check_party_inputs(&c.input_bits(), &input)?;
            ok(&EvalReport { value: c.eval_party_inputs(&input) })
        }
        CircuitCmd::Table { file, parties } => {
            let c = read_circuit(file.as_ref(), parties)?;
            ok(&TableDocument::of(&c.truth_table()?))
        }
    }
}

fn check_party_inputs(bits: &[usize], x: &[usize]) -> Result<(), Failure> {
    if x.len() != bits.len() || x.iter().zip(bits).any(|(&v, &b)| b < usize::BITS as usize && v >> b != 0) {
        return Err(usage(format!("--input needs one value per party below 2^bits, with bits {bits:?}")));
    }
    Ok(())
}

fn run_compile(args: CompileArgs) -> Result<Output, Failure> {
    let circuit = read_circuit(args.file.as_ref(), args.parties)?;
    let n = args.parties.unwrap_or(circuit.parties());
    let compiled = construct::compile(&circuit, n, &CompileOptions::default())?;
    if let Some(path) = &args.emit {
        let cap = env_cap("PRBOX_TABLE_CAP", DEFAULT_TABLE_CAP)?;
        std::fs::write(path, compiled.protocol.to_json(cap)?)?;
    }
    let mut verified = false;
    if !args.no_verify {
        let target = circuit.truth_table()?.full_correlation_box();
        verified = construct::verify_simulation(&compiled.protocol, &target)?.is_match();
    }
    let report = CompileReport {
        f: source_name(args.file.as_ref()),
        n,
        k: compiled.gates(),
        pr_boxes: compiled.pr_boxes(),
        verified,
    };
    with_code(&report, !args.no_verify && !verified)
}

fn run_simulate(args: SimulateArgs) -> Result<Output, Failure> {
    let p = read_protocol(args.file.as_ref())?;
    if let Some(x) = &args.input {
        if !p.input_radix().contains(x) || x.len() != p.parties() {
            return Err(usage(format!("--input must give one value per party within {:?}", p.input_sizes)));
        }
    }
    if args.exact {
        if args.seed.is_some() {
            eprintln!("warning: --seed is ignored in exact mode");
        }
        return match &args.input {
            Some(x) => ok(&wiring::execute_exact(&p, x)?.to_document()),
            None => ok(&wiring::induced_box(&p)?.to_document()),
        };
    }
    let (x, seed) = (args.input.expect("clap requires --input"), args.seed.expect("clap requires --seed"));
    let counts = wiring::execute_sample(&p, &x, seed, args.runs)?;
    let outs = p.output_radix();
    ok(&SampleReport {
        counts: counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &count)| SampleCount { a: outs.digits(i), count }).collect(),
        x,
        seed,
        runs: args.runs,
    })
}

fn run_verify(args: VerifyArgs) -> Result<Output, Failure> {
    let p = read_protocol(Some(&args.protocol))?;
    let target = read_box(Some(&args.target))?;
    match construct::verify_simulation(&p, &target)? {
        Verdict::Match => ok(&VerifyReport { matches: true, difference: None }),
        Verdict::Mismatch(d) => with_code(&VerifyReport { matches: false, difference: Some(d) }, true),
    }
}

fn run_cc(args: CcArgs) -> Result<Output, Failure> {
    let circuit = read_circuit(args.file.as_ref(), args.parties)?;
    let n = args.parties.unwrap_or(circuit.parties());
    let mut bits = circuit.input_bits();
    bits.resize(n, 0);
    check_party_inputs(&bits, &args.input)?;
    let compiled = construct::compile(&circuit, n, &CompileOptions::default())?;
    let run = construct::solve_cc(&compiled, &args.input, args.seed)?;
    let expected = circuit.eval_party_inputs(&args.input);
    let report = CcReport {
        value: run.value,
        expected,
        transcript: run.transcript,
        boxes_consumed: run.boxes_consumed,
        pr_boxes: compiled.pr_boxes(),
    };
    with_code(&report, run.value != expected)
}

fn vertices(inputs: &[usize], outputs: &[usize]) -> Result<(usize, Vec<BlackBox>), Failure> {
    let h = polytope::build_h_rep(inputs, outputs)?;
    let cap = env_cap("PRBOX_DIMENSION_CAP", polytope::DEFAULT_DIMENSION_CAP)?;
    Ok((h.dimension(), polytope::enumerate_vertices(&h, cap)?))
}

fn run_polytope(cmd: PolytopeCmd) -> Result<Output, Failure> {
    match cmd {
        PolytopeCmd::Vertices { inputs, outputs } => {
            let (dimension, vs) = vertices(&inputs, &outputs)?;
            ok(&VerticesReport { count: vs.len(), vertices: vs.iter().map(BlackBox::to_document).collect(), inputs, outputs, dimension })
        }
        PolytopeCmd::Classify { file, alphabets } => {
            let boxes = match (alphabets.inputs, alphabets.outputs) {
                (Some(i), Some(o)) => vertices(&i, &o)?.1,
                (None, None) => vec![read_box(file.as_ref())?],
                _ => return Err(usage("give both --inputs and --outputs, or a vertex file")),
            };
            let reports = boxes.iter().map(|b| Ok(ClassDocument::of(&polytope::classify_vertex(b)?))).collect::<Result<Vec<_>, Failure>>()?;
            ok(&reports)
        }
        PolytopeCmd::Decompose { file } => {
            let b = read_box(file.as_ref())?;
            let (_, vs) = vertices(b.input_sizes(), b.output_sizes())?;
            match polytope::decompose(&b, &vs) {
                Ok(weights) => {
                    let components = vs
                        .iter()
                        .zip(weights)
                        .filter(|(_, w)| !num_traits::Zero::is_zero(w))
                        .map(|(v, weight)| Ok(Component { weight, class: polytope::classify_vertex(v)?.class, table: v.to_document() }))
                        .collect::<Result<Vec<_>, Failure>>()?;
                    ok(&DecomposeReport { decomposable: true, components })
                }
                Err(PolytopeError::Infeasible) => with_code(&DecomposeReport { decomposable: false, components: vec![] }, true),
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn run_cluster(cmd: ClusterCmd) -> Result<Output, Failure> {
    match cmd {
        ClusterCmd::Constraints { set } => ok(&constraint_set(&set)?.to_document()),
        ClusterCmd::Ghz { set } => ok(&cluster::local_search(&constraint_set(&set)?)),
        ClusterCmd::Search { boxes, set, cross_checks, timing } => {
            let set = constraint_set(&set)?;
            let options = SearchOptions { cap: env_cap("PRBOX_STRATEGY_CAP", DEFAULT_STRATEGY_CAP)?, assignments: None, cross_checks };
            let start = Instant::now();
            let report = cluster::theorem2_search(&set, boxes, &options)?;
            let success = report.success;
            let out = TimedSearch { report, runtime_s: timing.then(|| start.elapsed().as_secs_f64()) };
            with_code(&out, success)
        }
    }
}

fn run(command: Command) -> Result<Output, Failure> {
    match command {
        Command::Box(c) => run_box(c),
        Command::Circuit(c) => run_circuit(c),
        Command::Compile(a) => run_compile(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Verify(a) => run_verify(a),
        Command::Cc(a) => run_cc(a),
        Command::Polytope(c) => run_polytope(c),
        Command::Cluster(c) => run_cluster(c),
    }
}

/// Writes one line to stdout; a closed pipe downstream is not an error.
fn emit(text: &str, code: u8) -> ExitCode {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        _ => ExitCode::from(code),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    // `--schema` must work without the command's required arguments.
    if argv.iter().skip(1).any(|a| a == "--schema") {
        let words: Vec<&str> = argv.iter().skip(1).map(String::as_str).take_while(|a| !a.starts_with('-')).collect();
        return match schema::lookup(&words) {
            Some(text) => emit(&text, 0),
            None => {
                eprintln!("error: no schema for `{}`", words.join(" "));
                ExitCode::from(2)
            }
        };
    }
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().expect("the thread pool is configured once");
    }
    let Some(command) = cli.command else {
        eprintln!("error: a command is required; see --help");
        return ExitCode::from(2);
    };
    match run(command) {
        Ok(out) => emit(&out.json, out.code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
