//! Command-line driver: capacity and Bell scans, protocol simulation and the
//! optimal entangled state. Every output is a pure function of the flags.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nodiscard::adversary::{EveFamily, EveStrategy};
use nodiscard::bell::{bell_scan, optimize_state, zg_score, BellScanRow, DEFAULT_EIGEN_TOL};
use nodiscard::capacity::{capacity_scan_with_noise, write_csv};
use nodiscard::format::g12;
use nodiscard::hilbert::{SchmidtState, Side};
use nodiscard::protocol::{
    run_naive_bb84, run_practical, run_zg_entangled, SimParams, Transcript, DEFAULT_CHECK_FRACTION,
    DEFAULT_SECURITY_PROB,
};

pub const BELL_CSV_HEADER: &str = "d,a_d_optimal,a_d_uniform";

/// Path value meaning standard output.
pub const STDOUT: &str = "-";

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(
    name = "nodiscard",
    version,
    about = "No-discard QKD simulation and analysis"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Channel capacities of the no-discard protocol against standard QKD.
    CapacityScan(CapacityScanArgs),
    /// Optimal and maximally-entangled values of the ordering functional.
    BellScan(BellScanArgs),
    /// Run a protocol and write its transcript.
    Simulate(SimulateArgs),
    /// Schmidt coefficients minimising the ordering functional.
    OptimalState(OptimalStateArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolArg {
    NaiveBb84,
    Zg,
    Practical,
    PracticalSilent,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveArg {
    None,
    InterceptResend,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyArg {
    Alice,
    Bob,
    Mixed,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideArg {
    Alice,
    Bob,
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct CapacityScanArgs {
    #[arg(long, default_value_t = 2)]
    pub d_min: usize,
    #[arg(long, default_value_t = 64)]
    pub d_max: usize,
    /// Symmetric dit-flip probability applied to both protocols.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Output path, `-` for standard output.
    #[arg(long, default_value = STDOUT)]
    pub out: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct BellScanArgs {
    #[arg(long, default_value_t = 2)]
    pub d_min: usize,
    #[arg(long, default_value_t = 20)]
    pub d_max: usize,
    #[arg(long, default_value = STDOUT)]
    pub out: String,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ProtocolArg::Practical)]
    pub protocol: ProtocolArg,
    /// Dimension (ignored by naive-bb84, which is always qubits).
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long, default_value_t = 100_000)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EveArg::None)]
    pub eve: EveArg,
    #[arg(long, value_enum, default_value_t = FamilyArg::Alice)]
    pub eve_family: FamilyArg,
    /// Half of the entangled pair Eve intercepts (zg only).
    #[arg(long, value_enum, default_value_t = SideArg::Bob)]
    pub eve_target: SideArg,
    /// Share of zg rounds that reveal bases for the functional estimate.
    #[arg(long, default_value_t = DEFAULT_CHECK_FRACTION)]
    pub check_fraction: f64,
    /// Probability that Bob uses security mode (practical protocols).
    #[arg(long, default_value_t = DEFAULT_SECURITY_PROB)]
    pub security_prob: f64,
    /// Run the practical protocol in its silent variant.
    #[arg(long, default_value_t = false)]
    pub silent: bool,
    #[arg(long, default_value = STDOUT)]
    pub out: String,
    /// `json` writes the full transcript, `csv` one row per round.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct OptimalStateArgs {
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// Eigenpair residual tolerance.
    #[arg(long, default_value_t = DEFAULT_EIGEN_TOL)]
    pub tol: f64,
    #[arg(long, default_value = STDOUT)]
    pub out: String,
}

impl RunConfig {
    /// Textual form: the argument list (without program name) that parses back
    /// to this configuration.
    pub fn to_args(&self) -> Vec<String> {
        let mut args: Vec<String> = Vec::new();
        let mut push = |flag: &str, value: String| {
            args.push(format!("--{flag}"));
            args.push(value);
        };
        let name = match &self.command {
            Command::CapacityScan(a) => {
                push("d-min", a.d_min.to_string());
                push("d-max", a.d_max.to_string());
                push("noise", a.noise.to_string());
                push("out", a.out.clone());
                push("format", value_name(&a.format));
                "capacity-scan"
            }
            Command::BellScan(a) => {
                push("d-min", a.d_min.to_string());
                push("d-max", a.d_max.to_string());
                push("out", a.out.clone());
                push("format", value_name(&a.format));
                "bell-scan"
            }
            Command::Simulate(a) => {
                push("protocol", value_name(&a.protocol));
                push("d", a.d.to_string());
                push("rounds", a.rounds.to_string());
                push("seed", a.seed.to_string());
                push("eve", value_name(&a.eve));
                push("eve-family", value_name(&a.eve_family));
                push("eve-target", value_name(&a.eve_target));
                push("check-fraction", a.check_fraction.to_string());
                push("security-prob", a.security_prob.to_string());
                push("out", a.out.clone());
                push("format", value_name(&a.format));
                if a.silent {
                    args.push("--silent".into());
                }
                "simulate"
            }
            Command::OptimalState(a) => {
                push("d", a.d.to_string());
                push("tol", a.tol.to_string());
                push("out", a.out.clone());
                "optimal-state"
            }
        };
        args.insert(0, name.to_string());
        args
    }

    /// Checks value ranges clap cannot express. Failures are usage errors.
    pub fn validate(&self) -> anyhow::Result<()> {
        fn range(d_min: usize, d_max: usize) -> anyhow::Result<()> {
            if d_min < 2 {
                bail!("--d-min must be at least 2, got {d_min}");
            }
            if d_max < d_min {
                bail!("--d-max ({d_max}) must not be below --d-min ({d_min})");
            }
            Ok(())
        }
        match &self.command {
            Command::CapacityScan(a) => {
                range(a.d_min, a.d_max)?;
                if !(0.0..=1.0).contains(&a.noise) {
                    bail!("--noise must lie in [0, 1], got {}", a.noise);
                }
            }
            Command::BellScan(a) => range(a.d_min, a.d_max)?,
            Command::Simulate(a) => {
                if a.d < 2 {
                    bail!("--d must be at least 2, got {}", a.d);
                }
                if a.rounds == 0 {
                    bail!("--rounds must be at least 1");
                }
                if !(0.0..1.0).contains(&a.check_fraction) {
                    bail!(
                        "--check-fraction must lie in [0, 1), got {}",
                        a.check_fraction
                    );
                }
                if !(0.0..1.0).contains(&a.security_prob) {
                    bail!(
                        "--security-prob must lie in [0, 1), got {}",
                        a.security_prob
                    );
                }
            }
            Command::OptimalState(a) => {
                if a.d < 2 {
                    bail!("--d must be at least 2, got {}", a.d);
                }
                if a.tol.is_nan() || a.tol <= 0.0 {
                    bail!("--tol must be positive, got {}", a.tol);
                }
            }
        }
        Ok(())
    }
}

impl SimulateArgs {
    pub fn strategy(&self) -> EveStrategy {
        match self.eve {
            EveArg::None => EveStrategy::none(),
            EveArg::InterceptResend => {
                let family = match self.eve_family {
                    FamilyArg::Alice => EveFamily::AliceFamily,
                    FamilyArg::Bob => EveFamily::BobFamily,
                    FamilyArg::Mixed => EveFamily::MixedUniform,
                };
                let target = match self.eve_target {
                    SideArg::Alice => Side::Alice,
                    SideArg::Bob => Side::Bob,
                };
                EveStrategy::intercept_resend(family).with_target(target)
            }
        }
    }

    pub fn transcript(&self) -> anyhow::Result<Transcript> {
        let params = SimParams::new(self.rounds, self.seed).with_eve(self.strategy());
        let transcript = match self.protocol {
            ProtocolArg::NaiveBb84 => run_naive_bb84(&params)?,
            ProtocolArg::Zg => {
                let state = optimize_state(self.d, DEFAULT_EIGEN_TOL)?.state;
                run_zg_entangled(&state, self.check_fraction, &params)?
            }
            ProtocolArg::Practical | ProtocolArg::PracticalSilent => {
                let silent = self.silent || self.protocol == ProtocolArg::PracticalSilent;
                run_practical(self.d, self.security_prob, silent, &params)?
            }
        };
        Ok(transcript)
    }
}

#[derive(Serialize)]
struct OptimalStateOutput {
    d: usize,
    lambda: Vec<f64>,
    a_d: f64,
    a_d_uniform: f64,
    residual: f64,
}

fn json_line<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut buf = serde_json::to_vec(value)?;
    buf.push(b'\n');
    Ok(buf)
}

fn bell_csv(rows: &[BellScanRow]) -> Vec<u8> {
    let mut buf = format!("{BELL_CSV_HEADER}\n");
    for r in rows {
        buf.push_str(&format!(
            "{},{},{}\n",
            r.d,
            g12(r.a_d_optimal),
            g12(r.a_d_uniform)
        ));
    }
    buf.into_bytes()
}

fn option_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn rounds_csv(t: &Transcript) -> anyhow::Result<Vec<u8>> {
    let mut buf = String::from(
        "round,alice_basis,alice_value,bob_mode,bob_basis,bob_outcome,sift_decision,alice_key_symbol,bob_key_symbol\n",
    );
    for r in &t.rounds {
        let mode = r
            .bob_mode
            .map(|m| serde_json::to_value(m).map(|v| v.as_str().unwrap_or_default().to_string()))
            .transpose()?;
        let decision = serde_json::to_value(r.sift_decision)?;
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.round,
            r.alice_basis,
            r.alice_value,
            mode.unwrap_or_default(),
            r.bob_basis,
            r.bob_outcome,
            decision.as_str().unwrap_or_default(),
            option_cell(r.alice_key_symbol),
            option_cell(r.bob_key_symbol),
        ));
    }
    Ok(buf.into_bytes())
}

fn emit(path: &str, bytes: &[u8], stdout: &mut dyn Write) -> anyhow::Result<()> {
    if path == STDOUT {
        stdout.write_all(bytes)?;
        return Ok(());
    }
    let mut file =
        File::create(Path::new(path)).with_context(|| format!("cannot create `{path}`"))?;
    file.write_all(bytes)
        .with_context(|| format!("cannot write `{path}`"))?;
    Ok(())
}

/// Executes a validated configuration, writing any standard-output data to
/// `stdout`.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match &config.command {
        Command::CapacityScan(a) => {
            let reports = capacity_scan_with_noise(a.d_min, a.d_max, a.noise)?;
            let bytes = match a.format {
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&reports, &mut buf)?;
                    buf
                }
                OutputFormat::Json => json_line(&reports)?,
            };
            emit(&a.out, &bytes, stdout)
        }
        Command::BellScan(a) => {
            let rows = bell_scan(a.d_min, a.d_max)?;
            let bytes = match a.format {
                OutputFormat::Csv => bell_csv(&rows),
                OutputFormat::Json => json_line(&rows)?,
            };
            emit(&a.out, &bytes, stdout)
        }
        Command::Simulate(a) => {
            let transcript = a.transcript()?;
            let bytes = match a.format {
                OutputFormat::Json => {
                    let mut buf = Vec::new();
                    transcript.write_json(&mut buf)?;
                    buf
                }
                OutputFormat::Csv => rounds_csv(&transcript)?,
            };
            emit(&a.out, &bytes, stdout)?;
            if a.out != STDOUT {
                serde_json::to_writer_pretty(&mut *stdout, &transcript.summary)?;
                writeln!(stdout)?;
            }
            Ok(())
        }
        Command::OptimalState(a) => {
            let optimal = optimize_state(a.d, a.tol)?;
            let output = OptimalStateOutput {
                d: a.d,
                lambda: optimal.state.coeffs().to_vec(),
                a_d: optimal.value,
                a_d_uniform: zg_score(&SchmidtState::uniform(a.d)?).total,
                residual: optimal.residual,
            };
            emit(&a.out, &json_line(&output)?, stdout)
        }
    }
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const RUNTIME: i32 = 2;
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Diagnostics go to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(config) => config,
        Err(err) => {
            use clap::error::ErrorKind;
            let rendered = err.render().to_string();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    exit::SUCCESS
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    exit::USAGE
                }
            };
        }
    };
    if let Err(err) = config.validate() {
        let _ = writeln!(stderr, "error: {err:#}");
        return exit::USAGE;
    }
    match run(&config, stdout) {
        Ok(()) => exit::SUCCESS,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err:#}");
            exit::RUNTIME
        }
    }
}

/// Entry point used by the binary.
pub fn main_from_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = main_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
