use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thermosemiring::witt::DefectKind;
use thermosemiring::Measure;

mod commands;

/// Thermodynamic semiring computations: successor curves, defect sweeps,
/// tree evaluation, Legendre conjugation, Cantor and multifractal queries.
#[derive(Parser, Debug)]
#[command(name = "thermosemi", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a binary measure at probabilities, or its chain extension.
    #[command(allow_negative_numbers = true)]
    Entropy(EntropyArgs),
    /// Deformed addition of two values.
    #[command(allow_negative_numbers = true)]
    Oplus(OplusArgs),
    /// Seeded search for commutator or associator defects.
    #[command(allow_negative_numbers = true)]
    Defect(DefectArgs),
    /// Sample the successor function `λ(x) = x ⊕ 0`.
    #[command(name = "successor-curve", allow_negative_numbers = true)]
    SuccessorCurve(CurveArgs),
    /// Evaluate a guessing tree on leaf values.
    #[command(name = "tree-eval", allow_negative_numbers = true)]
    TreeEval(TreeArgs),
    /// Legendre conjugate (and biconjugate) of a sampled function.
    #[command(allow_negative_numbers = true)]
    Legendre(LegendreArgs),
    /// KL-deformed addition fixed by a binary prefix.
    #[command(allow_negative_numbers = true)]
    Cantor(CantorArgs),
    /// Local dimension, entropy and Lyapunov exponent of a Cantor measure.
    #[command(allow_negative_numbers = true)]
    Multifractal(MultifractalArgs),
    /// Grid check of the information-measure axioms.
    #[command(allow_negative_numbers = true)]
    Axioms(AxiomArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Comm,
    Assoc,
}

impl From<Kind> for DefectKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Comm => DefectKind::Comm,
            Kind::Assoc => DefectKind::Assoc,
        }
    }
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    s.parse().map_err(|e: thermosemiring::Error| e.to_string())
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output path; `-` is standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct Thermo {
    /// `shannon`, `shannon:C`, `renyi:α`, `tsallis:α` or `kl:q`.
    #[arg(long, default_value = "shannon", value_parser = parse_measure)]
    pub measure: Measure,
    /// Temperature.
    #[arg(long = "T", default_value_t = 1.0)]
    pub t: f64,
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub thermo: Thermo,
    /// Probabilities at which to evaluate the binary measure.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// A probability vector for the chain extension.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct OplusArgs {
    #[command(flatten)]
    pub thermo: Thermo,
    /// Exponent of the Tsallis-deformed addition.
    #[arg(long)]
    pub deform: Option<f64>,
    pub x: f64,
    pub y: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct DefectArgs {
    #[command(flatten)]
    pub thermo: Thermo,
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub deform: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub thermo: Thermo,
    #[arg(long, default_value_t = -5.0)]
    pub xmin: f64,
    #[arg(long, default_value_t = 5.0)]
    pub xmax: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct TreeArgs {
    #[command(flatten)]
    pub thermo: Thermo,
    /// Nested parentheses, e.g. `((1 2) 3)`.
    #[arg(long)]
    pub tree: String,
    /// Leaf values in label order; `inf` is the additive unit.
    #[arg(long, value_delimiter = ',', required = true)]
    pub xs: Vec<f64>,
    /// Arity bound `v`; defaults to the largest arity in the tree.
    #[arg(long)]
    pub bound: Option<usize>,
    /// Also minimise the tree entropy directly on the simplex.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct LegendreArgs {
    /// CSV with header `x,f`; `-` reads standard input. Without it the
    /// negated measure is sampled on `[0, 1]`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "shannon", value_parser = parse_measure)]
    pub measure: Measure,
    /// Primal grid step for the sampled negated measure.
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
    #[arg(long, default_value_t = -10.0)]
    pub dual_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub dual_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dual_step: f64,
    /// Emit the biconjugate on the primal grid instead of the conjugate.
    #[arg(long)]
    pub biconjugate: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CantorArgs {
    /// Binary digits, e.g. `0110`.
    #[arg(long)]
    pub prefix: String,
    #[arg(long = "T", default_value_t = 1.0)]
    pub t: f64,
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct MultifractalArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub l1: f64,
    #[arg(long)]
    pub l2: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct AxiomArgs {
    #[arg(long, default_value = "shannon", value_parser = parse_measure)]
    pub measure: Measure,
    /// Exponent for the α-associativity check.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

fn open_out(path: &PathBuf) -> io::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (out, doc) = match commands::run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_numeric() { 2 } else { 1 });
        }
    };
    let written = open_out(&out).and_then(|mut w| {
        w.write_all(&doc)?;
        w.flush()
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            ExitCode::from(1)
        }
    }
}
