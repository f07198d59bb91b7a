//! `meanaction`: invariants of area-preserving annulus maps and the
//! lens-space lattice combinatorics, from the command line.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "meanaction",
    version,
    about = "Annulus map invariants and ECH lattice combinatorics"
)]
struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, default_value = "json", value_parser = ["json", "csv", "table"])]
    format: String,
    /// Seed for the randomized checks in verify-suite.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct QuadArgs {
    /// Normalization offset N (f = y₊ + N on the outer boundary).
    #[arg(long, default_value_t = 0)]
    offset: i64,
    /// Area grid as NX,NY (both even).
    #[arg(long, value_parser = parse_grid, default_value = "512,512")]
    grid: (usize, usize),
    /// Adaptive line-quadrature tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Gauss-Legendre order per line panel.
    #[arg(long, default_value_t = 32)]
    line_order: usize,
}

#[derive(Args, Clone)]
struct SlopeArgs {
    /// a = y₊ (must be positive and irrational-looking).
    #[arg(long)]
    a: f64,
    /// b = −y₋ + F.
    #[arg(long)]
    b: f64,
    /// p = a + b, a positive integer.
    #[arg(long)]
    p: i64,
    /// Floor-guard width.
    #[arg(long, default_value_t = 1e-9)]
    guard_eps: f64,
    /// Evaluate guards in double-double precision.
    #[arg(long, default_value_t = false)]
    high_precision: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Flux, Calabi invariant, and boundary action values of a map.
    Analyze {
        mapspec: String,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Periodic-orbit search up to a period bound.
    Orbits {
        mapspec: String,
        #[arg(long, default_value_t = 1)]
        qmax: usize,
        /// Seed grid as NX,NY.
        #[arg(long, value_parser = parse_grid, default_value = "64,64")]
        seeds: (usize, usize),
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Mapping-torus contact form checks (contact, return time, volume).
    ContactCheck {
        mapspec: String,
        #[command(flatten)]
        quad: QuadArgs,
        /// Verification grid as NTHETA,NX,NY.
        #[arg(long, value_parser = parse_grid3, default_value = "12,128,32")]
        check_grid: (usize, usize, usize),
    },
    /// Lattice combinatorics of the ECH of L(p, p−1).
    Ech {
        #[command(subcommand)]
        op: EchCommand,
    },
    /// Harmonic-mean upper bound for the shifted mean action.
    Bound {
        mapspec: String,
        #[arg(long, default_value_t = 0)]
        n: i64,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Hypothesis case classifier and disk-collapse criterion.
    Classify {
        mapspec: String,
        #[arg(long)]
        y_plus_rational: Option<bool>,
        #[arg(long)]
        y_minus_rational: Option<bool>,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Run the cross-module invariant battery (exit 2 on any breach).
    VerifySuite {
        /// Smaller grids and ranges.
        #[arg(long, default_value_t = false)]
        quick: bool,
    },
}

#[derive(Subcommand)]
enum EchCommand {
    /// ECH index of e₊^m₊ e₋^m₋ by formula and lattice-count oracle.
    Index {
        #[command(flatten)]
        slopes: SlopeArgs,
        #[arg(long)]
        mplus: u64,
        #[arg(long)]
        mminus: u64,
    },
    /// Generators in sweep order up to an even index.
    Order {
        #[command(flatten)]
        slopes: SlopeArgs,
        #[arg(long)]
        max_index: i64,
    },
    /// w(k) for k = 0..=kmax.
    Wk {
        #[command(flatten)]
        slopes: SlopeArgs,
        #[arg(long)]
        kmax: u64,
    },
    /// First `count` sorted combinations i·alpha + j·beta.
    Nseq {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        count: usize,
    },
    /// Verify the quadratic lower bound on N_{w(k)} for k ≤ kmax.
    Nkbound {
        #[command(flatten)]
        slopes: SlopeArgs,
        #[arg(long)]
        kmax: u64,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected NX,NY".into());
    }
    let nx = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let ny = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((nx, ny))
}

fn parse_grid3(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected NTHETA,NX,NY".into());
    }
    Ok((
        parts[0].trim().parse().map_err(|e| format!("{e}"))?,
        parts[1].trim().parse().map_err(|e| format!("{e}"))?,
        parts[2].trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn configure_threads() {
    if let Ok(v) = std::env::var("MEANACTION_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, everything else is a
            // usage error (exit 1)
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            let payload = serde_json::json!({
                "error": e.to_string(),
                "version": meanaction_core::VERSION,
            });
            eprintln!("{payload}");
            ExitCode::from(1)
        }
    }
}
