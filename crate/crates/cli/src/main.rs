use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use onsager_cli::{exit, run_stage, Format, JobConfig, Params, Stage};

/// Re-derives the zero-field free energy of the square-lattice Ising model
/// from exact polygon counts, and searches for the magnetization equation.
#[derive(Parser, Debug)]
#[command(name = "onsager", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Brute-force partition function and Z(w) of a small torus
    Brute(Common),
    /// Z_{n1,n2}(w) through w^R by the transfer operator
    Zseries(Common),
    /// Ising polynomials p_2 .. p_R
    IsingPolys(Common),
    /// F(w) and Fbar(w) through w^R
    AssembleF(Common),
    /// Duality ansatz, G(z) and the guessed coefficient ratio
    GuessG(Common),
    /// b_{2r} against the closed form and the reference series
    VerifyOnsager(Common),
    /// Transfer-operator estimates of m(x) and m'(x)
    Magnetize(Common),
    /// Integer-relation search for the magnetization equation
    Relation(Common),
    /// Every exact stage in sequence, with a summary
    FullDerivation(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Truncation order R
    #[arg(short = 'R', long = "order")]
    order: Option<usize>,
    /// Decimal digits for the relation search
    #[arg(long)]
    precision: Option<u32>,
    /// Stopping tolerance for numeric evaluations
    #[arg(long)]
    tol: Option<f64>,
    /// Constant of the change of variable z = c w (1-w^2)/(1+w^2)^2
    #[arg(long)]
    c: Option<String>,
    /// Accept a --c other than 2
    #[arg(long)]
    allow_nonstandard_c: bool,
    /// Evaluation point for magnetize; repeatable
    #[arg(long)]
    x: Vec<f64>,
    /// Field step for magnetize
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, env = "ONSAGER_CACHE_DIR", default_value = ".onsager-cache")]
    cache_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    let (stage, common) = match cli.command {
        Command::Brute(c) => (Stage::Brute, c),
        Command::Zseries(c) => (Stage::Zseries, c),
        Command::IsingPolys(c) => (Stage::IsingPolys, c),
        Command::AssembleF(c) => (Stage::AssembleF, c),
        Command::GuessG(c) => (Stage::GuessG, c),
        Command::VerifyOnsager(c) => (Stage::VerifyOnsager, c),
        Command::Magnetize(c) => (Stage::Magnetize, c),
        Command::Relation(c) => (Stage::Relation, c),
        Command::FullDerivation(c) => (Stage::FullDerivation, c),
    };
    let cfg = JobConfig {
        stage,
        params: Params {
            n1: common.n1,
            n2: common.n2,
            order: common.order,
            precision: common.precision,
            tol: common.tol,
            c: common.c,
            allow_nonstandard_c: common.allow_nonstandard_c,
            x: common.x,
            h: common.h,
        },
        cache_dir: common.cache_dir,
        format: common.format,
    };
    match run_stage(&cfg) {
        Ok(out) => {
            for line in &out.log {
                eprintln!("{line}");
            }
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.artifact.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(exit::RESOURCE as u8);
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
