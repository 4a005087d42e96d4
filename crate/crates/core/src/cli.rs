//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 budget error,
//! 4 invariant violation.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis;
use crate::code::{steane, Basis, StabilizerCode};
use crate::error::{Error, Result};
use crate::evaluator::{self, McOptions, THREADS_ENV};
use crate::hamiltonian::{
    amplify_map, energy_formula, expand_amplified, measured_energy_formula, AmplificationSpec, XZHamiltonian,
    GROUND_LIMIT,
};
use crate::pauli::{BitString, PauliWord};
use crate::protocol::{ProtocolParams, TestKind};
use crate::report::{to_json_pretty, F17};
use crate::strategy::{Corruption, Strategy, WRule};

#[derive(Debug, Parser)]
#[command(name = "xzmip", version, about = "Simulate and analyze the XZ-Hamiltonian multi-prover protocol")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol against a strategy and report acceptance values.
    Simulate(SimulateArgs),
    /// Print a stabilizer code's group, validation and complementary table.
    Code(CodeArgs),
    /// Ground energy, energy-test value and gap amplification.
    Energy(EnergyArgs),
    /// Linearity residuals and swap-isometry deviation for one prover.
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum StrategyName {
    Honest,
    ClassicalLinear,
    SignFlip,
    WrongCode,
    ProductGround,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum BasisArg {
    X,
    Z,
}

impl From<BasisArg> for Basis {
    fn from(b: BasisArg) -> Basis {
        match b {
            BasisArg::X => Basis::X,
            BasisArg::Z => Basis::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum WRuleArg {
    FollowX,
    FollowZ,
    Plus,
    Minus,
}

impl From<WRuleArg> for WRule {
    fn from(w: WRuleArg) -> WRule {
        match w {
            WRuleArg::FollowX => WRule::FollowX,
            WRuleArg::FollowZ => WRule::FollowZ,
            WRuleArg::Plus => WRule::Constant(1),
            WRuleArg::Minus => WRule::Constant(-1),
        }
    }
}

/// Strategy selection shared by `simulate` and `diagnose`.
#[derive(Clone, Debug, Args)]
pub struct StrategyArgs {
    #[arg(long, value_enum, default_value = "honest")]
    pub strategy: StrategyName,
    /// XZ Hamiltonian JSON file.
    #[arg(long)]
    pub hamiltonian: PathBuf,
    /// Code JSON file, or `steane`.
    #[arg(long, default_value = "steane")]
    pub code: String,
    /// Prover whose sign is flipped (sign_flip).
    #[arg(long, default_value_t = 0)]
    pub flip_prover: usize,
    /// Basis whose sign is flipped (sign_flip).
    #[arg(long, value_enum, default_value = "x")]
    pub flip_basis: BasisArg,
    /// X seed of classical_linear; all zeros by default.
    #[arg(long)]
    pub seed_x: Option<String>,
    /// Z seed of classical_linear; all zeros by default.
    #[arg(long)]
    pub seed_z: Option<String>,
    /// W-query rule of classical_linear.
    #[arg(long, value_enum, default_value = "follow_x")]
    pub w_rule: WRuleArg,
    /// Seed of the random strategy.
    #[arg(long, default_value_t = 0)]
    pub strategy_seed: u64,
    /// Worker threads; falls back to the environment, then all cores.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: StrategyArgs,
    /// Probability of running the energy test.
    #[arg(long, conflicts_with = "delta")]
    pub p: Option<f64>,
    /// Sets p = δ^{15/16}.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Required in mc mode.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSONL transcript of every sampled round (mc mode).
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Run a single test (its conditional distribution) instead of the mixture.
    #[arg(long)]
    pub focus: Option<String>,
    /// Measure every prover instead of sampling the deciding parities.
    #[arg(long)]
    pub full_answers: bool,
}

#[derive(Clone, Debug, Args)]
pub struct CodeArgs {
    /// Code JSON file, or `steane`.
    #[arg(default_value = "steane")]
    pub code: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct EnergyArgs {
    #[arg(long)]
    pub hamiltonian: PathBuf,
    /// Amplification parameters `p q` with p > q > 0.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    pub amplify: Option<Vec<f64>>,
    /// Eigenvalues to push through the amplification map.
    #[arg(long = "lambda", allow_negative_numbers = true)]
    pub lambdas: Vec<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: StrategyArgs,
    #[arg(long, default_value_t = 0)]
    pub prover: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Code(a) => cmd_code(a),
        Command::Energy(a) => cmd_energy(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn config_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{} does not exist", path.display())))
    }
}

pub fn load_code(spec: &str) -> Result<StabilizerCode> {
    if spec == "steane" {
        return Ok(steane());
    }
    config_file(Path::new(spec))?;
    StabilizerCode::load(Path::new(spec))
}

pub fn load_hamiltonian(path: &Path) -> Result<XZHamiltonian> {
    config_file(path)?;
    XZHamiltonian::load(path)
}

fn bits(arg: &Option<String>, n: usize) -> Result<BitString> {
    match arg {
        None => Ok(BitString::zeros(n)),
        Some(s) => {
            let b: BitString = s.parse()?;
            if b.len() != n {
                return Err(Error::Config(format!("seed {s} must have {n} bits")));
            }
            Ok(b)
        }
    }
}

/// Builds the strategy named in `args` for `h` and `code`.
pub fn build_strategy(args: &StrategyArgs, h: &XZHamiltonian, code: &StabilizerCode) -> Result<Strategy> {
    let n = h.n();
    Ok(match args.strategy {
        StrategyName::Honest => Strategy::honest(h, code)?,
        StrategyName::ClassicalLinear => Strategy::classical_linear(
            bits(&args.seed_x, n)?,
            bits(&args.seed_z, n)?,
            args.w_rule.into(),
            code.r,
        )?,
        StrategyName::SignFlip => Strategy::honest(h, code)?.corrupted(&[Corruption::SignFlip {
            prover: args.flip_prover,
            basis: args.flip_basis.into(),
        }])?,
        StrategyName::WrongCode => Strategy::honest(h, code)?.corrupted(&[Corruption::WrongCode])?,
        StrategyName::ProductGround => Strategy::honest(h, code)?.corrupted(&[Corruption::ProductGround])?,
        StrategyName::Random => Strategy::random(n, code.r, args.strategy_seed)?,
    })
}

fn resolve_p(a: &SimulateArgs) -> Result<f64> {
    match (a.p, a.delta) {
        (Some(p), _) => Ok(p),
        (None, Some(d)) => {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::Config(format!("delta = {d} outside [0, 1]")));
            }
            Ok(d.powf(15.0 / 16.0))
        }
        (None, None) => Ok(0.5),
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let h = load_hamiltonian(&a.common.hamiltonian)?;
    let code = load_code(&a.common.code)?;
    let p = resolve_p(a)?;
    let focus = match &a.focus {
        None => None,
        Some(name) => Some(
            TestKind::from_name(name).ok_or_else(|| Error::Config(format!("unknown test {name}")))?,
        ),
    };
    let params = ProtocolParams::new(p, code.clone(), h.clone())?.with_focus(focus);
    let strategy = build_strategy(&a.common, &h, &code)?;
    let threads = a.common.threads;
    let (report, records) = match a.mode {
        Mode::Exact => {
            if a.transcript.is_some() || a.full_answers {
                return Err(Error::Config("--transcript and --full-answers need --mode mc".into()));
            }
            (evaluator::with_threads(threads, || evaluator::exact_value(&strategy, &params))??, Vec::new())
        }
        Mode::Mc => {
            let seed = a.seed.ok_or_else(|| Error::Config("--seed is required in mc mode".into()))?;
            let opts = McOptions {
                samples: a.samples,
                seed,
                full_answers: a.full_answers,
                transcript: a.transcript.is_some(),
            };
            evaluator::with_threads(threads, || evaluator::mc_estimate_with(&strategy, &params, &opts))??
        }
    };
    if let Some(path) = &a.transcript {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        evaluator::write_transcript(&mut f, &records)?;
        f.flush()?;
    }
    emit(a.common.output.as_deref(), &report.to_json()?)
}

#[derive(Serialize)]
struct ComplementRow {
    position: usize,
    basis: String,
    stabilizer: PauliWord,
    restricted: PauliWord,
    partners: Vec<usize>,
}

#[derive(Serialize)]
struct CodeReport {
    r: usize,
    generators: Vec<PauliWord>,
    logical_x: PauliWord,
    logical_z: PauliWord,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_size: Option<usize>,
    valid: bool,
    validation: crate::code::ValidationReport,
    complementary: Vec<ComplementRow>,
}

pub fn cmd_code(a: &CodeArgs) -> Result<()> {
    let code = load_code(&a.code)?;
    let validation = code.validate();
    let valid = validation.all_passed();
    let group_size = code.stabilizer_group().ok().map(|g| g.len());
    let mut complementary = Vec::new();
    if valid {
        for i in 0..code.r {
            for basis in [Basis::X, Basis::Z] {
                let c = code.complementary(i, basis)?;
                complementary.push(ComplementRow {
                    position: i,
                    basis: format!("{basis:?}"),
                    stabilizer: c.stabilizer,
                    restricted: c.restricted,
                    partners: c.partners,
                });
            }
        }
    }
    let report = CodeReport {
        r: code.r,
        generators: code.generators.clone(),
        logical_x: code.logical_x,
        logical_z: code.logical_z,
        group_size,
        valid,
        validation: validation.clone(),
        complementary,
    };
    emit(a.output.as_deref(), &to_json_pretty(&report)?)?;
    if !valid {
        for f in validation.failures() {
            eprintln!("failed check {}: {}", f.name, f.detail);
        }
        return Err(Error::Invalid("code failed validation".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct MapValue {
    lambda: F17,
    value: F17,
}

#[derive(Serialize)]
struct AmplifyReport {
    p: F17,
    q: F17,
    a_exact: F17,
    a: usize,
    map: Vec<MapValue>,
    /// `λ_min` of H pushed through the map.
    amplified_min: F17,
    #[serde(skip_serializing_if = "Option::is_none")]
    expansion_terms: Option<usize>,
    /// `max |spec(H′) − map(spec(H))|` over sorted spectra.
    #[serde(skip_serializing_if = "Option::is_none")]
    expansion_spectrum_error: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expansion_skipped: Option<String>,
}

#[derive(Serialize)]
struct EnergyReport {
    n: usize,
    m: usize,
    alpha_l1: F17,
    lambda_min: F17,
    /// `1 − (¼λ + (1/2m)Σ|α|)`.
    omega_energy: F17,
    /// Acceptance of the measurement rule on the ground state.
    omega_energy_measured_rule: F17,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplify: Option<AmplifyReport>,
}

pub fn cmd_energy(a: &EnergyArgs) -> Result<()> {
    let h = load_hamiltonian(&a.hamiltonian)?;
    let validation = h.validate();
    if !validation.all_passed() {
        let msg: Vec<String> = validation.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(Error::Config(format!("invalid Hamiltonian: {}", msg.join("; "))));
    }
    let (lambda, _) = h.ground()?;
    let (m, l1) = (h.m(), h.alpha_l1());
    let amplify = match &a.amplify {
        None => {
            if !a.lambdas.is_empty() {
                return Err(Error::Config("--lambda needs --amplify".into()));
            }
            None
        }
        Some(pq) => {
            let spec = AmplificationSpec::new(pq[0], pq[1]).map_err(|e| Error::Config(e.to_string()))?;
            let k = spec.a();
            if lambda < 0.0 {
                eprintln!("warning: λ_min = {lambda} < 0; the amplification map assumes 0 ≤ H ≤ I");
            }
            let map = a
                .lambdas
                .iter()
                .map(|&l| MapValue { lambda: F17(l), value: F17(amplify_map(l, k)) })
                .collect();
            let mut out = AmplifyReport {
                p: F17(spec.p),
                q: F17(spec.q),
                a_exact: F17(spec.a_exact()),
                a: k,
                map,
                amplified_min: F17(amplify_map(lambda, k)),
                expansion_terms: None,
                expansion_spectrum_error: None,
                expansion_skipped: None,
            };
            match expand_amplified(&h, &spec) {
                Ok(amp) if amp.hamiltonian.n() <= GROUND_LIMIT => {
                    let got = amp.hamiltonian.spectrum()?;
                    let mut want: Vec<f64> = Vec::with_capacity(got.len());
                    let base = h.spectrum()?;
                    // spectrum of H^{⊗a}-style sums: every a-tuple of eigenvalues
                    let mut tuples = vec![1.0f64];
                    for _ in 0..k {
                        tuples = tuples
                            .iter()
                            .flat_map(|t| base.iter().map(move |&l| t * (1.0 + 1.0 / k as f64 - l)))
                            .collect();
                    }
                    want.extend(tuples.iter().map(|t| 1.0 - t));
                    want.sort_by(f64::total_cmp);
                    let err = got
                        .iter()
                        .map(|v| v * amp.scale)
                        .zip(&want)
                        .map(|(g, w)| (g - w).abs())
                        .fold(0.0, f64::max);
                    out.expansion_terms = Some(amp.hamiltonian.m());
                    out.expansion_spectrum_error = Some(F17(err));
                }
                Ok(amp) => {
                    out.expansion_skipped = Some(format!(
                        "{} qubits exceed the dense limit of {GROUND_LIMIT}",
                        amp.hamiltonian.n()
                    ))
                }
                Err(e @ (Error::Budget(_) | Error::OverLimit { .. })) => {
                    out.expansion_skipped = Some(e.to_string())
                }
                Err(e) => return Err(e),
            }
            Some(out)
        }
    };
    let report = EnergyReport {
        n: h.n(),
        m,
        alpha_l1: F17(l1),
        lambda_min: F17(lambda),
        omega_energy: F17(energy_formula(lambda, m, l1)),
        omega_energy_measured_rule: F17(measured_energy_formula(lambda, m, l1)),
        amplify,
    };
    emit(a.output.as_deref(), &to_json_pretty(&report)?)
}

#[derive(Serialize)]
struct DiagnoseReport {
    strategy: String,
    prover: usize,
    linearity: analysis::ResidualReport,
    isometry: analysis::ResidualReport,
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    let h = load_hamiltonian(&a.common.hamiltonian)?;
    let code = load_code(&a.common.code)?;
    let strategy = build_strategy(&a.common, &h, &code)?;
    let (linearity, isometry) =
        evaluator::with_threads(a.common.threads, || analysis::diagnose(&strategy, a.prover))??;
    let report = DiagnoseReport { strategy: strategy.label.clone(), prover: a.prover, linearity, isometry };
    emit(a.common.output.as_deref(), &to_json_pretty(&report)?)
}
