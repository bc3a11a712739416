use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use hpdg_cli::spec::parse_list;
use hpdg_cli::{run, write_report, ExactId, Format, MeshRule, Mode, PenaltyMode, QRule, StudySpec};

/// hp interior-penalty DG solver and study driver for the Helmholtz equation
/// on the unit square with an absorbing boundary.
#[derive(Debug, Parser)]
#[command(name = "hpdg", version)]
struct Cli {
    /// Study mode (alternative to --mode).
    #[arg(value_enum)]
    command: Option<Mode>,

    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Comma-separated wave numbers.
    #[arg(long, default_value = "5")]
    k: String,

    /// Comma-separated polynomial degrees.
    #[arg(long, default_value = "1")]
    p: String,

    /// `p` (ladder depth equal to the degree) or a fixed depth.
    #[arg(long, default_value = "p")]
    q: QRule,

    /// Comma-separated cells per side of the structured mesh.
    #[arg(long, default_value = "8")]
    nx: String,

    /// Mesh-condition rule `kh=C` or `k3h2p=C` (several constants for estimate-c0).
    #[arg(long)]
    rule: Option<MeshRule>,

    /// `auto` or explicit `g0=..,g1=..,b1=..`.
    #[arg(long, default_value = "auto")]
    penalty: PenaltyMode,

    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    /// `planewave`, `planewave:<angle>` or `polyquartic`.
    #[arg(long, default_value = "planewave")]
    exact: ExactId,

    /// Mesh in the plain-text format, replacing the structured meshes.
    #[arg(long)]
    mesh_file: Option<PathBuf>,

    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Extra quadrature exactness on top of 2p + 2.
    #[arg(long, default_value_t = 0)]
    quad_bump: usize,

    /// Random functions per identity check in verify mode.
    #[arg(long, default_value_t = 50)]
    samples: usize,

    /// Record wall-clock seconds (makes reports run-dependent).
    #[arg(long)]
    timing: bool,
}

impl Cli {
    fn into_spec(self) -> Result<(StudySpec, Format, Option<PathBuf>)> {
        let mode = match (self.command, self.mode) {
            (Some(a), Some(b)) if a != b => bail!("conflicting modes {a:?} and {b:?}"),
            (a, b) => a.or(b).unwrap_or(Mode::Solve),
        };
        let spec = StudySpec {
            mode,
            k: parse_list(&self.k).context("--k")?,
            p: parse_list(&self.p).context("--p")?,
            q: self.q,
            nx: parse_list(&self.nx).context("--nx")?,
            rule: self.rule,
            penalty: self.penalty,
            sigma: self.sigma,
            exact: self.exact,
            mesh_file: self.mesh_file,
            seed: self.seed,
            quad_bump: self.quad_bump,
            samples: self.samples,
            timing: self.timing,
        };
        spec.validate()?;
        Ok((spec, self.format, self.out))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let (spec, format, out) = cli.into_spec()?;
    let report = run(&spec)?;
    match out {
        Some(path) => {
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write_report(&report, format, &mut w)?;
            w.flush()?;
        }
        None => write_report(&report, format, io::stdout().lock())?,
    }
    Ok(report.passed())
}
