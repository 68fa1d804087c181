use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use curvlab_core::family::DEFAULT_GRID;
use curvlab_core::{Case, FamilyParams, HSpec, DEFAULT_ORDER};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "curvlab", version, about = "Curvature checks for the cohomogeneity-one Kähler family")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Subcmd,
}

#[derive(Debug, Subcommand)]
pub enum Subcmd {
    /// Recover the structure function from R·R and R·S, compare it with the
    /// closed form, and check Q·R = 0 and the non-semisymmetry witness.
    Verify(CommonArgs),
    /// Run the full curvature identity catalog.
    Audit(CommonArgs),
    /// Report the sign of f, constancy of r and the Einstein flag per point.
    Scan(CommonArgs),
    /// Check N_J = 0, ∇J = 0 and dΩ = 0.
    #[command(alias = "certify-kaehler")]
    Certify(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("family").required(true).args(["h", "case"])))]
pub struct CommonArgs {
    /// Complex dimension minus one; the model has real dimension 2m+2.
    #[arg(long)]
    pub m: usize,
    /// Warping function: `power:p=<p>` or `sqrt:a=<a>,b=<b>,c=<c>`.
    #[arg(long)]
    pub h: Option<HSpec>,
    /// Constant-scalar-curvature case: i, ii or iii.
    #[arg(long)]
    pub case: Option<Case>,
    /// Sample points: a value, a comma list, or `lo:hi:n` with both ends included.
    #[arg(long)]
    pub t: Option<String>,
    /// Jet order of h.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, env = "CURVLAB_TOL", default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Audit,
    Scan,
    Certify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Audit => "audit",
            Command::Scan => "scan",
            Command::Certify => "certify",
        }
    }
}

/// Validated run: every grid point already satisfies the family invariants.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub m: usize,
    pub h: HSpec,
    pub case: Option<Case>,
    pub points: Vec<FamilyParams>,
    pub order: usize,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, args) = match cli.command {
            Subcmd::Verify(a) => (Command::Verify, a),
            Subcmd::Audit(a) => (Command::Audit, a),
            Subcmd::Scan(a) => (Command::Scan, a),
            Subcmd::Certify(a) => (Command::Certify, a),
        };
        RunConfig::new(command, args)
    }

    pub fn new(command: Command, args: CommonArgs) -> Result<Self, CliError> {
        if !(args.tol > 0.0 && args.tol.is_finite()) {
            return Err(CliError::Usage(format!("tolerance {} must be positive", args.tol)));
        }
        let grid = match (&args.t, args.case) {
            (Some(spec), _) => parse_grid(spec)?,
            (None, Some(case)) => case.default_grid().to_vec(),
            (None, None) => DEFAULT_GRID.to_vec(),
        };
        let points = grid
            .iter()
            .map(|&t| match (args.case, &args.h) {
                (Some(case), _) => FamilyParams::case(case, args.m, t, args.order),
                (None, Some(h)) => FamilyParams::new(args.m, h.clone(), t, args.order),
                (None, None) => unreachable!("clap requires --h or --case"),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let h = points[0].h.clone();
        Ok(RunConfig {
            command,
            m: args.m,
            h,
            case: args.case,
            points,
            order: args.order,
            tol: args.tol,
            format: args.format,
            out: args.out,
        })
    }
}

/// Parses `v`, `v1,v2,...` or `lo:hi:n` (inclusive, `n >= 1`).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse t grid {spec:?}"));
    let num = |s: &str| -> Result<f64, CliError> {
        let v: f64 = s.trim().parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        [lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| bad())?;
            match n {
                0 => return Err(bad()),
                1 => vec![lo],
                _ => (0..n).map(|i| (lo * (n - 1 - i) as f64 + hi * i as f64) / (n - 1) as f64).collect(),
            }
        }
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}
