//! Command-line front end: every toolkit operation behind one
//! (subcommand, verb) pair, JSON in, JSON/CSV out, reproducible to the byte.
//!
//! Exit codes: 0 success, 1 input error, 2 contract violation (an operation
//! ran but its promised bound failed).  Floating-point output always carries
//! 17 significant digits; file output is written atomically via a temp-file
//! rename.  `HILIE_THREADS` caps worker threads (every operation here is
//! single-threaded, so any cap ≥ 1 is honored as-is).

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use hilie::characters::{self, CharacterError};
use hilie::cocycles::{self, BlockTag, EigenBlock};
use hilie::covariance::{self, WeightSet};
use hilie::linalg::{self, CMat};
use hilie::ops::{self, TraceValue, TruncOp};
use hilie::rootdata::{self, CoWeight, Root, RootSystemKind};
use hilie::seq::{rat_to_f64, DiagonalSequence, Rat};
use hilie::spectral::{self, BandedOp, SpectralError};
use hilie::weights::{self, UpperSet, UpperSetBase, Weight, WeylElement};

// ---------------------------------------------------------------------------
// argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "hilie",
    version,
    about = "windowed root-system combinatorics and operator numerics",
    disable_help_subcommand = true
)]
struct Cli {
    /// print every (subcommand, verb) pair and exit
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// window operator norms, traces, commutators and bracket bounds
    #[command(subcommand)]
    Core(CoreVerb),
    /// roots, coroots and the invariant constants of the four families
    #[command(subcommand)]
    Rootdata(RootdataVerb),
    /// structured weights: classification, Weyl orbits, weight-set hulls
    #[command(subcommand)]
    Weights(WeightsVerb),
    /// diagonal 2-cocycles, coboundary classification, restricted unitaries
    #[command(subcommand)]
    Cocycle(CocycleVerb),
    /// fixed-point decompositions, energy spectra, semiboundedness
    #[command(subcommand)]
    Covariance(CovarianceVerb),
    /// factor measures on the circle and positive-definite characters
    #[command(subcommand)]
    Character(CharacterVerb),
    /// diagonal-plus-small-residual decomposition of banded operators
    #[command(subcommand)]
    Wvn(WvnVerb),
    /// product-formula convergence and perturbed one-parameter groups
    #[command(subcommand)]
    Trotter(TrotterVerb),
}

#[derive(Args)]
struct Io {
    /// input JSON file
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// output file (atomic write); stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum CoreVerb {
    /// Hilbert–Schmidt norm of a window operator
    HsNorm {
        #[command(flatten)]
        io: Io,
    },
    /// operator norm of a window operator
    OpNorm {
        #[command(flatten)]
        io: Io,
    },
    /// trace norm of a window operator
    TraceNorm {
        #[command(flatten)]
        io: Io,
    },
    /// trace, when it converges
    Trace {
        #[command(flatten)]
        io: Io,
    },
    /// commutator [x, y] of two window operators
    Commutator {
        #[command(flatten)]
        io: Io,
    },
    /// Schatten–Hölder slacks for a pair of operators
    Schatten {
        #[command(flatten)]
        io: Io,
    },
    /// Monte-Carlo sharpness of ‖[x,y]‖₂ ≤ c·‖x‖₂‖y‖₂ with the exact witness
    BracketNorm {
        /// root-system family A|B|C|D
        #[arg(long)]
        kind: String,
        /// window size (≥ 4)
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        /// sampling seed (mandatory: runs must be reproducible)
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
    /// weighted summability bound Σ c_j‖[x_j,y_j]‖ with optional tail laws
    Infsum {
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum RootdataVerb {
    /// all roots with support in a window
    Roots {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        window: u64,
        #[command(flatten)]
        io: Io,
    },
    /// coroot α∨ of a root
    Coroot {
        #[command(flatten)]
        io: Io,
    },
    /// exact squared norms of a root and its coroot
    CorootNorm {
        #[command(flatten)]
        io: Io,
    },
    /// the invariant constant c_g = 2/inf‖α∨‖ of a family
    Cg {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// reflect a coweight in a root
    Reflect {
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum WeightsVerb {
    /// integrality / boundedness / continuity flags of a weight
    Classify {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// the same flags for a diagonal sequence
    ClassifySeq {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// act on a weight by a signed permutation
    Act {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// reflect a weight in a root
    Reflect {
        #[command(flatten)]
        io: Io,
    },
    /// canonical orbit representative of a weight
    Canonical {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// whether two weights lie on the same Weyl orbit
    OrbitEqual {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// weight-set membership: candidate inside the orbit hull of an extremal weight
    Contains {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// spectral support functional of a trace-class direction
    Support {
        /// window length of the positive part
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        io: Io,
    },
    /// whether two upper sets generate the same momentum class
    MomentumEqual {
        #[command(flatten)]
        io: Io,
    },
    /// ℓ²(w⁻¹)-membership of a character weight for a toroidal group
    ToroidalMember {
        #[command(flatten)]
        io: Io,
    },
    /// whether every character of the toroidal family pairs finitely
    ToroidalFinite {
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum CocycleVerb {
    /// evaluate the diagonal 2-cocycle ω_d(x, y)
    Omega {
        #[command(flatten)]
        io: Io,
    },
    /// classify d: zero, coboundary after a scalar shift, or nontrivial
    Class {
        #[command(flatten)]
        io: Io,
    },
    /// Θ(g) = g·d·g⁻¹ − d in the window
    Theta {
        #[command(flatten)]
        io: Io,
    },
    /// affine coadjoint action g·α·g⁻¹ + Θ(g)
    Coadjoint {
        #[command(flatten)]
        io: Io,
    },
    /// sampled sup of ‖Θ(g)‖₂ against the a-priori bound
    ThetaStats {
        /// window size
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// sampling seed (mandatory: runs must be reproducible)
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
    /// restricted-unitary membership from eigen-block tags
    Ures {
        #[command(flatten)]
        io: Io,
    },
    /// whether two diagonal generators differ by a trivial cocycle
    OneParamEqual {
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum CovarianceVerb {
    /// fixed-point eigenvalue blocks and central generators of diag(i·d)
    Decompose {
        #[arg(long)]
        window: u64,
        #[command(flatten)]
        io: Io,
    },
    /// whether a hermitian generator fixes the diagonal torus
    Torus {
        #[arg(long)]
        window: u64,
        #[command(flatten)]
        io: Io,
    },
    /// pairing χ_d(ν) of a lattice element with the generator
    Chi {
        #[command(flatten)]
        io: Io,
    },
    /// energy spectrum {χ_d(ν − ν₀)} of a weight set
    Energy {
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        io: Io,
    },
    /// window infimum of ⟨wλ, d⟩ over the Weyl group, with finiteness verdict
    Wsembo {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        window: u64,
        #[command(flatten)]
        io: Io,
    },
    /// ground-state admissibility of a minimal weight set
    Ground {
        #[arg(long)]
        window: u64,
        #[command(flatten)]
        io: Io,
    },
    /// consistency of block energies with their internal spectra
    Ordering {
        #[command(flatten)]
        io: Io,
    },
    /// two-sided boundedness flags of a diagonal generator
    Semibounded {
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum CharacterVerb {
    /// evaluate the factor density p_b on circle points
    Pb {
        /// rational parameter, e.g. 1 or 1/2
        #[arg(long)]
        b: String,
        /// comma-separated angles θ
        #[arg(long)]
        thetas: String,
        #[command(flatten)]
        io: Io,
    },
    /// character value χ(g) = Π p_b(z_i) over the window spectrum
    Eval {
        #[arg(long)]
        b: String,
        #[command(flatten)]
        io: Io,
    },
    /// exact maximal atom mass of the n-fold product measure
    Atoms {
        #[arg(long)]
        b: String,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        io: Io,
    },
    /// compare p_b against its three-term Fourier series on a θ-grid
    Fourier {
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 64)]
        samples: u32,
        #[command(flatten)]
        io: Io,
    },
    /// minimal eigenvalue of a sampled character Gram matrix
    Gram {
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// sampling seed (mandatory: runs must be reproducible)
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum WvnVerb {
    /// slice-width sweep of the diagonal + residual decomposition
    Run {
        /// window size N (≥ 16)
        #[arg(long, default_value_t = 256)]
        window: usize,
        /// comma-separated slice widths δ
        #[arg(long)]
        deltas: String,
        /// residual target ε; exceeding it is a contract violation (exit 2)
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Subcommand)]
enum TrotterVerb {
    /// error sweep of (e^{tA/n}e^{tB/n})ⁿ on a seeded random hermitian pair
    Run {
        #[arg(long, default_value_t = 6)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// comma-separated step counts n
        #[arg(long)]
        ns: String,
        /// sampling seed (mandatory: runs must be reproducible)
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
    /// perturbed one-parameter group δ(t) and its semidirect-product defect
    Flow {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// product-formula step count
        #[arg(long, default_value_t = 256)]
        n: u32,
        #[command(flatten)]
        io: Io,
    },
}

// ---------------------------------------------------------------------------
// failures and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

fn input_err(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        msg: format!("input error: {msg}"),
    }
}

fn contract_err(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        msg: format!("contract violation: {msg}"),
    }
}

fn from_spectral(e: SpectralError) -> Failure {
    match e {
        SpectralError::SliceTooCoarse { .. } => contract_err(e),
        _ => input_err(e),
    }
}

fn from_character(e: CharacterError) -> Failure {
    match e {
        CharacterError::CrossCheck(_) => contract_err(e),
        _ => input_err(e),
    }
}

// ---------------------------------------------------------------------------
// input mirrors
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OneOpIn {
    op: TruncOp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoOpsIn {
    x: TruncOp,
    y: TruncOp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InfsumIn {
    pairs: Vec<(f64, f64)>,
    #[serde(default)]
    tails: Option<InfsumTailsIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InfsumTailsIn {
    c: DiagonalSequence,
    w: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RootIn {
    root: Root,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReflectCoweightIn {
    root: Root,
    x: CoWeight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightIn {
    weight: Weight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeqIn {
    d: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeqPairIn {
    a: DiagonalSequence,
    b: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActIn {
    w: WeylElement,
    weight: Weight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReflectWeightIn {
    root: Root,
    weight: Weight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightPairIn {
    a: Weight,
    b: Weight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HullIn {
    extremal: Weight,
    candidate: Weight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportIn {
    x: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UpperSetIn {
    base: String,
    #[serde(default)]
    param: Option<u64>,
    #[serde(default)]
    add: Vec<u64>,
    #[serde(default)]
    remove: Vec<u64>,
}

impl UpperSetIn {
    fn build(self) -> Result<UpperSet, Failure> {
        let base = match self.base.as_str() {
            "evens" => UpperSetBase::Evens,
            "geq" => UpperSetBase::Geq(
                self.param
                    .ok_or_else(|| input_err("geq base needs a param"))?,
            ),
            "empty" => UpperSetBase::Empty,
            other => return Err(input_err(format!("unknown base {other:?}"))),
        };
        UpperSet::new(base, self.add, self.remove).map_err(input_err)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetPairIn {
    a: UpperSetIn,
    b: UpperSetIn,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToroidalIn {
    w: DiagonalSequence,
    weight: Weight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToroidalFamilyIn {
    w: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OmegaIn {
    d: DiagonalSequence,
    x: TruncOp,
    y: TruncOp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaIn {
    d_window: TruncOp,
    g: TruncOp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoadjointIn {
    d_window: TruncOp,
    g: TruncOp,
    alpha: TruncOp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UresIn {
    tags: Vec<Vec<BlockTag>>,
    partition: Vec<EigenBlock>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TorusIn {
    h: TruncOp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChiIn {
    d: DiagonalSequence,
    weight: Weight,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyIn {
    set: WeightSet,
    nu0: Weight,
    d: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WsemboIn {
    weight: Weight,
    d: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroundIn {
    set: WeightSet,
    d: DiagonalSequence,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderingIn {
    blocks: Vec<(f64, Vec<f64>)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalIn {
    g: TruncOp,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BandsIn {
    bands: Vec<DiagonalSequence>,
    #[serde(default = "default_true")]
    hermitian: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixIn {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Vec<Vec<f64>>,
}

impl MatrixIn {
    fn build(&self) -> Result<CMat, Failure> {
        let n = self.re.len();
        if self.re.iter().any(|r| r.len() != n) {
            return Err(input_err("matrix must be square"));
        }
        if !self.im.is_empty() && (self.im.len() != n || self.im.iter().any(|r| r.len() != n)) {
            return Err(input_err("imaginary part must match the real part's shape"));
        }
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let im = if self.im.is_empty() { 0.0 } else { self.im[i][j] };
                m[(i, j)] = Complex64::new(self.re[i][j], im);
            }
        }
        Ok(m)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowIn {
    x: MatrixIn,
    #[serde(default)]
    d_alpha: Option<MatrixIn>,
    /// shortcut: supply y and use the inner derivation ad y
    #[serde(default)]
    ad_of: Option<MatrixIn>,
}

// ---------------------------------------------------------------------------
// output rendering
// ---------------------------------------------------------------------------

enum Cell {
    U(u64),
    I(i64),
    F(f64),
    S(String),
}

enum Output {
    Json(Value),
    Table {
        header: Vec<&'static str>,
        rows: Vec<Vec<Cell>>,
    },
}

/// 17 significant digits: enough to round-trip every f64.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

fn json_line(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    serde::Serialize::serialize(v, &mut ser).expect("serializing an in-memory value");
    let mut s = String::from_utf8(buf).expect("JSON is UTF-8");
    s.push('\n');
    s
}

fn scalar_csv(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                u.to_string()
            } else if let Some(i) = n.as_i64() {
                i.to_string()
            } else {
                fmt_f64(n.as_f64().expect("number is one of u64/i64/f64"))
            }
        }
        Value::String(s) => s.clone(),
        _ => unreachable!("containers are flattened before printing"),
    }
}

fn flatten_csv(prefix: &str, v: &Value, out: &mut String) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten_csv(&join(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten_csv(&join(&i.to_string()), x, out);
            }
        }
        scalar => {
            let _ = writeln!(out, "{prefix},{}", scalar_csv(scalar));
        }
    }
}

fn cell_value(c: &Cell) -> Value {
    match c {
        Cell::U(u) => json!(u),
        Cell::I(i) => json!(i),
        Cell::F(f) => json!(f),
        Cell::S(s) => json!(s),
    }
}

fn cell_csv(c: &Cell) -> String {
    match c {
        Cell::U(u) => u.to_string(),
        Cell::I(i) => i.to_string(),
        Cell::F(f) => fmt_f64(*f),
        Cell::S(s) => s.clone(),
    }
}

fn render(out: &Output, format: Format) -> String {
    match (out, format) {
        (Output::Json(v), Format::Json) => json_line(v),
        (Output::Json(v), Format::Csv) => {
            let mut s = String::new();
            flatten_csv("", v, &mut s);
            s
        }
        (Output::Table { header, rows }, Format::Json) => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    for (name, cell) in header.iter().zip(row) {
                        obj.insert((*name).into(), cell_value(cell));
                    }
                    Value::Object(obj)
                })
                .collect();
            json_line(&Value::Array(arr))
        }
        (Output::Table { header, rows }, Format::Csv) => {
            let mut s = header.join(",");
            s.push('\n');
            for row in rows {
                let line: Vec<String> = row.iter().map(cell_csv).collect();
                s.push_str(&line.join(","));
                s.push('\n');
            }
            s
        }
    }
}

fn emit(io: &Io, out: &Output) -> Result<(), Failure> {
    let content = render(out, io.format);
    match &io.out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
            fs::write(&tmp, &content)
                .map_err(|e| input_err(format!("writing {}: {e}", tmp.display())))?;
            fs::rename(&tmp, path)
                .map_err(|e| input_err(format!("renaming into {}: {e}", path.display())))
        }
    }
}

// ---------------------------------------------------------------------------
// shared parsing helpers
// ---------------------------------------------------------------------------

fn read_input<T: DeserializeOwned>(io: &Io) -> Result<T, Failure> {
    let path = io
        .input
        .as_ref()
        .ok_or_else(|| input_err("this verb needs --in FILE"))?;
    let text = fs::read_to_string(path)
        .map_err(|e| input_err(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn parse_kind(s: &str) -> Result<RootSystemKind, Failure> {
    s.parse().map_err(input_err)
}

fn parse_rat(s: &str) -> Result<Rat, Failure> {
    let parse_int = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| input_err(format!("bad rational {s:?}")))
    };
    match s.split_once('/') {
        None => Ok(Rat::from_integer(parse_int(s)?)),
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den == 0 {
                return Err(input_err("zero denominator"));
            }
            Ok(Rat::new(parse_int(n)?, den))
        }
    }
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| input_err(format!("bad number {t:?}")))
        })
        .collect()
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| input_err(format!("bad count {t:?}")))
        })
        .collect()
}

fn rat_str(r: Rat) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact square root of a nonnegative rational, when one exists.
fn exact_sqrt(r: Rat) -> Option<Rat> {
    let root = |n: i64| -> Option<i64> {
        let s = (n as f64).sqrt().round() as i64;
        (s * s == n).then_some(s)
    };
    Some(Rat::new(root(*r.numer())?, root(*r.denom())?))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize cleanly")
}

fn matrix_value(m: &CMat) -> Value {
    let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
            .collect()
    };
    json!({ "re": rows(|z| z.re), "im": rows(|z| z.im) })
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let g = linalg::ginibre(n, rng);
    (&g + g.adjoint()).map(|z| z * 0.5)
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    let (io, out) = match cmd {
        Cmd::Core(v) => run_core(v)?,
        Cmd::Rootdata(v) => run_rootdata(v)?,
        Cmd::Weights(v) => run_weights(v)?,
        Cmd::Cocycle(v) => run_cocycle(v)?,
        Cmd::Covariance(v) => run_covariance(v)?,
        Cmd::Character(v) => run_character(v)?,
        Cmd::Wvn(v) => run_wvn(v)?,
        Cmd::Trotter(v) => run_trotter(v)?,
    };
    emit(&io, &out)
}

fn run_core(v: CoreVerb) -> Result<(Io, Output), Failure> {
    match v {
        CoreVerb::HsNorm { io } => {
            let input: OneOpIn = read_input(&io)?;
            let out = Output::Json(json!({ "hs_norm": to_value(&ops::hs_norm(&input.op)) }));
            Ok((io, out))
        }
        CoreVerb::OpNorm { io } => {
            let input: OneOpIn = read_input(&io)?;
            let out = Output::Json(json!({ "op_norm": to_value(&ops::op_norm(&input.op)) }));
            Ok((io, out))
        }
        CoreVerb::TraceNorm { io } => {
            let input: OneOpIn = read_input(&io)?;
            let out = Output::Json(json!({ "trace_norm": to_value(&ops::trace_norm(&input.op)) }));
            Ok((io, out))
        }
        CoreVerb::Trace { io } => {
            let input: OneOpIn = read_input(&io)?;
            let tr = match ops::trace(&input.op) {
                TraceValue::Finite(z) => json!({ "re": z.re, "im": z.im }),
                TraceValue::Divergent => json!("divergent"),
            };
            Ok((io, Output::Json(json!({ "trace": tr }))))
        }
        CoreVerb::Commutator { io } => {
            let input: TwoOpsIn = read_input(&io)?;
            let c = ops::commutator(&input.x, &input.y).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&c))))
        }
        CoreVerb::Schatten { io } => {
            let input: TwoOpsIn = read_input(&io)?;
            let rep = ops::check_schatten(&input.x, &input.y).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&rep))))
        }
        CoreVerb::BracketNorm {
            kind,
            n,
            trials,
            seed,
            io,
        } => {
            let kind = parse_kind(&kind)?;
            if n < 4 {
                return Err(input_err("window must be at least 4"));
            }
            let rep = ops::estimate_bracket_norm(kind, n, trials, seed);
            Ok((io, Output::Json(to_value(&rep))))
        }
        CoreVerb::Infsum { io } => {
            let input: InfsumIn = read_input(&io)?;
            let tails = input.tails.as_ref().map(|t| (&t.c, &t.w));
            let rep = ops::weighted_sum_bracket_bound(&input.pairs, tails).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&rep))))
        }
    }
}

fn run_rootdata(v: RootdataVerb) -> Result<(Io, Output), Failure> {
    match v {
        RootdataVerb::Roots { kind, window, io } => {
            let kind = parse_kind(&kind)?;
            let rows = rootdata::roots_in_window(kind, window)
                .iter()
                .map(|r| {
                    let v = to_value(r);
                    vec![
                        Cell::S(v["kind"].as_str().unwrap_or_default().into()),
                        Cell::S(v["shape"].as_str().unwrap_or_default().into()),
                        Cell::U(v["j"].as_u64().unwrap_or_default()),
                        Cell::U(v["k"].as_u64().unwrap_or_default()),
                        Cell::I(v["sj"].as_i64().unwrap_or_default()),
                        Cell::I(v["sk"].as_i64().unwrap_or_default()),
                    ]
                })
                .collect();
            Ok((
                io,
                Output::Table {
                    header: vec!["kind", "shape", "j", "k", "sj", "sk"],
                    rows,
                },
            ))
        }
        RootdataVerb::Coroot { io } => {
            let input: RootIn = read_input(&io)?;
            let cw = rootdata::coroot(&input.root);
            Ok((io, Output::Json(json!({ "coroot": to_value(&cw) }))))
        }
        RootdataVerb::CorootNorm { io } => {
            let input: RootIn = read_input(&io)?;
            let out = json!({
                "coroot_norm_sq": rat_str(rootdata::coroot_norm_sq(&input.root)),
                "root_norm_sq": rat_str(rootdata::root_norm_sq(&input.root)),
            });
            Ok((io, Output::Json(out)))
        }
        RootdataVerb::Cg { kind, io } => {
            let kind = parse_kind(&kind)?;
            let sq = rootdata::cg_sq(kind);
            let cg = match exact_sqrt(sq) {
                Some(r) => json!(rat_str(r)),
                None => json!(rootdata::cg_exact(kind)),
            };
            let out = json!({
                "kind": kind.to_string(),
                "cg_sq": rat_str(sq),
                "cg": cg,
            });
            Ok((io, Output::Json(out)))
        }
        RootdataVerb::Reflect { io } => {
            let input: ReflectCoweightIn = read_input(&io)?;
            let r = rootdata::reflect_coweight(&input.root, &input.x);
            Ok((io, Output::Json(json!({ "reflected": to_value(&r) }))))
        }
    }
}

fn run_weights(v: WeightsVerb) -> Result<(Io, Output), Failure> {
    match v {
        WeightsVerb::Classify { kind, io } => {
            let kind = parse_kind(&kind)?;
            let input: WeightIn = read_input(&io)?;
            let c = weights::classify_weight(kind, &input.weight);
            Ok((io, Output::Json(to_value(&c))))
        }
        WeightsVerb::ClassifySeq { kind, io } => {
            let kind = parse_kind(&kind)?;
            let input: SeqIn = read_input(&io)?;
            let c = weights::classify_weight_seq(kind, &input.d);
            Ok((io, Output::Json(to_value(&c))))
        }
        WeightsVerb::Act { kind, io } => {
            let kind = parse_kind(&kind)?;
            let input: ActIn = read_input(&io)?;
            let lam = weights::weyl_act(kind, &input.w, &input.weight).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&lam))))
        }
        WeightsVerb::Reflect { io } => {
            let input: ReflectWeightIn = read_input(&io)?;
            let lam = weights::reflect_weight(&input.root, &input.weight).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&lam))))
        }
        WeightsVerb::Canonical { kind, io } => {
            let kind = parse_kind(&kind)?;
            let input: WeightIn = read_input(&io)?;
            let lam = weights::orbit_canonical(kind, &input.weight).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&lam))))
        }
        WeightsVerb::OrbitEqual { kind, io } => {
            let kind = parse_kind(&kind)?;
            let input: WeightPairIn = read_input(&io)?;
            let eq = weights::orbit_equivalent(kind, &input.a, &input.b).map_err(input_err)?;
            Ok((io, Output::Json(json!({ "equal": eq }))))
        }
        WeightsVerb::Contains { kind, io } => {
            let kind = parse_kind(&kind)?;
            let input: HullIn = read_input(&io)?;
            let m = weights::weight_set_contains(kind, &input.extremal, &input.candidate)
                .map_err(input_err)?;
            Ok((io, Output::Json(json!({ "contains": m }))))
        }
        WeightsVerb::Support { n, io } => {
            let input: SupportIn = read_input(&io)?;
            let everything =
                UpperSet::new(UpperSetBase::Geq(1), [], []).expect("half line is valid");
            let s = weights::support_functional(&everything, &input.x, n).map_err(input_err)?;
            Ok((io, Output::Json(json!({ "value": s }))))
        }
        WeightsVerb::MomentumEqual { io } => {
            let input: SetPairIn = read_input(&io)?;
            let eq = weights::momentum_equivalent(&input.a.build()?, &input.b.build()?);
            Ok((io, Output::Json(json!({ "equal": eq }))))
        }
        WeightsVerb::ToroidalMember { io } => {
            let input: ToroidalIn = read_input(&io)?;
            let m =
                weights::toroidal_character_contains(&input.w, &input.weight).map_err(input_err)?;
            Ok((io, Output::Json(json!({ "member": m }))))
        }
        WeightsVerb::ToroidalFinite { io } => {
            let input: ToroidalFamilyIn = read_input(&io)?;
            let f = weights::toroidal_characters_all_finite(&input.w);
            Ok((io, Output::Json(json!({ "all_finite": f }))))
        }
    }
}

fn run_cocycle(v: CocycleVerb) -> Result<(Io, Output), Failure> {
    match v {
        CocycleVerb::Omega { io } => {
            let input: OmegaIn = read_input(&io)?;
            let w = cocycles::omega_d(&input.d, &input.x, &input.y).map_err(input_err)?;
            Ok((io, Output::Json(json!({ "omega": w }))))
        }
        CocycleVerb::Class { io } => {
            let input: SeqIn = read_input(&io)?;
            let c = cocycles::cocycle_class(&input.d);
            Ok((io, Output::Json(to_value(&c))))
        }
        CocycleVerb::Theta { io } => {
            let input: ThetaIn = read_input(&io)?;
            let t = cocycles::theta(&input.d_window, &input.g).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&t))))
        }
        CocycleVerb::Coadjoint { io } => {
            let input: CoadjointIn = read_input(&io)?;
            let a = cocycles::affine_coadjoint(&input.d_window, &input.g, &input.alpha)
                .map_err(input_err)?;
            Ok((io, Output::Json(to_value(&a))))
        }
        CocycleVerb::ThetaStats {
            n,
            samples,
            seed,
            io,
        } => {
            let input: SeqIn = read_input(&io)?;
            let stats = cocycles::theta_orbit_stats(&input.d, n, samples, seed);
            Ok((io, Output::Json(to_value(&stats))))
        }
        CocycleVerb::Ures { io } => {
            let input: UresIn = read_input(&io)?;
            let m = cocycles::u_res_contains(&input.tags, &input.partition).map_err(input_err)?;
            Ok((io, Output::Json(json!({ "member": m }))))
        }
        CocycleVerb::OneParamEqual { io } => {
            let input: SeqPairIn = read_input(&io)?;
            let eq = cocycles::one_param_equivalent(&input.a, &input.b).map_err(input_err)?;
            Ok((io, Output::Json(json!({ "equivalent": eq }))))
        }
    }
}

fn run_covariance(v: CovarianceVerb) -> Result<(Io, Output), Failure> {
    match v {
        CovarianceVerb::Decompose { window, io } => {
            let input: SeqIn = read_input(&io)?;
            let p = covariance::fixed_point_decomposition(&input.d, window).map_err(input_err)?;
            Ok((io, Output::Json(to_value(&p))))
        }
        CovarianceVerb::Torus { window, io } => {
            let input: TorusIn = read_input(&io)?;
            let rep = covariance::diagonal_fixes_torus(&input.h, window).map_err(input_err)?;
            let out = json!({
                "diagonalizable": rep.diagonalizable,
                "fixes_diagonal_masa": rep.fixes_diagonal_masa,
                "eigenvalues": rep.eigenvalues,
            });
            Ok((io, Output::Json(out)))
        }
        CovarianceVerb::Chi { io } => {
            let input: ChiIn = read_input(&io)?;
            let x = covariance::chi_d(&input.d, &input.weight).map_err(input_err)?;
            Ok((io, Output::Json(json!({ "chi": x }))))
        }
        CovarianceVerb::Energy { kind, io } => {
            let kind = parse_kind(&kind)?;
            let input: EnergyIn = read_input(&io)?;
            let spectrum = covariance::energy_spectrum(kind, &input.set, &input.nu0, &input.d)
                .map_err(input_err)?;
            let rows = spectrum
                .iter()
                .enumerate()
                .map(|(i, e)| vec![Cell::U(i as u64), Cell::F(*e)])
                .collect();
            Ok((
                io,
                Output::Table {
                    header: vec!["index", "energy"],
                    rows,
                },
            ))
        }
        CovarianceVerb::Wsembo { kind, window, io } => {
            let kind = parse_kind(&kind)?;
            let input: WsemboIn = read_input(&io)?;
            let rep = covariance::wsembo_infimum(kind, &input.weight, &input.d, window)
                .map_err(input_err)?;
            Ok((io, Output::Json(to_value(&rep))))
        }
        CovarianceVerb::Ground { window, io } => {
            let input: GroundIn = read_input(&io)?;
            let ok = covariance::ground_state_admissible(&input.set, &input.d, window);
            Ok((io, Output::Json(json!({ "admissible": ok }))))
        }
        CovarianceVerb::Ordering { io } => {
            let input: OrderingIn = read_input(&io)?;
            let ok = covariance::spectral_ordering_check(&input.blocks);
            Ok((io, Output::Json(json!({ "consistent": ok }))))
        }
        CovarianceVerb::Semibounded { io } => {
            let input: SeqIn = read_input(&io)?;
            let rep = covariance::id_semibounded(&input.d);
            Ok((io, Output::Json(to_value(&rep))))
        }
    }
}

fn run_character(v: CharacterVerb) -> Result<(Io, Output), Failure> {
    match v {
        CharacterVerb::Pb { b, thetas, io } => {
            let b = parse_rat(&b)?;
            let rows = parse_f64_list(&thetas)?
                .into_iter()
                .map(|theta| {
                    let z = Complex64::from_polar(1.0, theta);
                    characters::p_b(b, z)
                        .map(|p| vec![Cell::F(theta), Cell::F(p)])
                        .map_err(from_character)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((
                io,
                Output::Table {
                    header: vec!["theta", "p"],
                    rows,
                },
            ))
        }
        CharacterVerb::Eval { b, io } => {
            let b = parse_rat(&b)?;
            let input: EvalIn = read_input(&io)?;
            let chi = characters::voiculescu_char(b, &input.g).map_err(from_character)?;
            Ok((io, Output::Json(json!({ "chi": chi }))))
        }
        CharacterVerb::Atoms { b, n, io } => {
            let b = parse_rat(&b)?;
            let mass = characters::max_atom_mass(b, n).map_err(from_character)?;
            let measure = characters::FactorMeasure::new(b).map_err(from_character)?;
            let out = json!({
                "mass": format!("{}/{}", mass.numer(), mass.denom()),
                "measure": to_value(&measure),
            });
            Ok((io, Output::Json(out)))
        }
        CharacterVerb::Fourier { b, samples, io } => {
            let b = parse_rat(&b)?;
            let measure = characters::FactorMeasure::new(b).map_err(from_character)?;
            // the same grid fourier_check sweeps, reported pointwise
            let mut rows = Vec::with_capacity(samples as usize);
            for k in 0..samples {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / samples.max(1) as f64;
                let p = characters::p_b(b, Complex64::from_polar(1.0, theta))
                    .map_err(from_character)?;
                let nuhat = rat_to_f64(measure.zero)
                    + rat_to_f64(measure.plus + measure.minus) * theta.cos();
                rows.push(vec![
                    Cell::F(theta),
                    Cell::F(p),
                    Cell::F(nuhat),
                    Cell::F((p - nuhat).abs()),
                ]);
            }
            Ok((
                io,
                Output::Table {
                    header: vec!["theta", "p", "nuhat", "error"],
                    rows,
                },
            ))
        }
        CharacterVerb::Gram {
            b,
            dim,
            samples,
            seed,
            io,
        } => {
            let b = parse_rat(&b)?;
            let min =
                characters::pd_gram_check(b, dim, samples, seed).map_err(from_character)?;
            Ok((io, Output::Json(json!({ "min_eigenvalue": min }))))
        }
    }
}

fn run_wvn(v: WvnVerb) -> Result<(Io, Output), Failure> {
    let WvnVerb::Run {
        window,
        deltas,
        eps,
        io,
    } = v;
    let input: BandsIn = read_input(&io)?;
    let op = BandedOp::new(input.bands, input.hermitian).map_err(from_spectral)?;
    let mut rows = Vec::new();
    for delta in parse_f64_list(&deltas)? {
        let rep = spectral::wvn_decompose(&op, window, delta, eps).map_err(from_spectral)?;
        rows.push(vec![
            Cell::U(window as u64),
            Cell::F(delta),
            Cell::F(rep.residual_hs),
        ]);
    }
    Ok((
        io,
        Output::Table {
            header: vec!["n", "delta", "residual"],
            rows,
        },
    ))
}

fn run_trotter(v: TrotterVerb) -> Result<(Io, Output), Failure> {
    match v {
        TrotterVerb::Run {
            dim,
            t,
            ns,
            seed,
            io,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(dim, &mut rng);
            let b = random_hermitian(dim, &mut rng);
            let mut rows = Vec::new();
            for n in parse_u32_list(&ns)? {
                let rep = spectral::trotter_limit(&a, &b, t, n).map_err(from_spectral)?;
                rows.push(vec![Cell::U(n as u64), Cell::F(rep.error)]);
            }
            Ok((
                io,
                Output::Table {
                    header: vec!["n", "error"],
                    rows,
                },
            ))
        }
        TrotterVerb::Flow { t, n, io } => {
            let input: FlowIn = read_input(&io)?;
            let x = input.x.build()?;
            let d_alpha = match (&input.d_alpha, &input.ad_of) {
                (Some(d), None) => d.build()?,
                (None, Some(y)) => spectral::ad_operator(&y.build()?),
                _ => {
                    return Err(input_err(
                        "supply exactly one of d_alpha (operator on vec'd matrices) or ad_of (matrix y)",
                    ))
                }
            };
            let flow = spectral::perturbed_flow(&d_alpha, &x, t, n).map_err(from_spectral)?;
            let out = json!({
                "defect": flow.defect,
                "delta_g": matrix_value(&flow.delta_g),
            });
            Ok((io, Output::Json(out)))
        }
    }
}

// ---------------------------------------------------------------------------
// entry
// ---------------------------------------------------------------------------

fn print_pairs() {
    let cmd = Cli::command();
    let mut pairs: Vec<(String, String)> = Vec::new();
    for sub in cmd.get_subcommands() {
        for verb in sub.get_subcommands() {
            pairs.push((sub.get_name().to_string(), verb.get_name().to_string()));
        }
    }
    pairs.sort();
    for (s, v) in pairs {
        println!("{s} {v}");
    }
}

fn check_thread_cap() -> Result<(), Failure> {
    match std::env::var("HILIE_THREADS") {
        Err(_) => Ok(()),
        Ok(s) => match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(()),
            _ => Err(input_err(format!(
                "HILIE_THREADS must be a positive integer, got {s:?}"
            ))),
        },
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let wanted = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            std::process::exit(if wanted { 0 } else { 1 });
        }
    };
    if let Err(f) = check_thread_cap() {
        eprintln!("{}", f.msg);
        std::process::exit(f.code);
    }
    if cli.list {
        print_pairs();
        std::process::exit(0);
    }
    let Some(cmd) = cli.cmd else {
        eprintln!("input error: missing subcommand (try --list or --help)");
        std::process::exit(1);
    };
    match dispatch(cmd) {
        Ok(()) => {}
        Err(f) => {
            eprintln!("{}", f.msg);
            std::process::exit(f.code);
        }
    }
}
