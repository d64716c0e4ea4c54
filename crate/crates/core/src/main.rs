use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nonlocal_net::cli::{
    self, chain_table, figure_table, min_coordination_table, min_nodes_table, parse_list, route_report,
    threshold_table, Figure, Format, NetworkKind, Scope, ThresholdRequest, EXIT_USAGE, EXIT_VALIDATION,
};
use nonlocal_net::lattice::{AxisConvention, RouteTarget, SquareAddress};
use nonlocal_net::oracle::OracleConfig;
use nonlocal_net::xstate::WernerParam;
use nonlocal_net::{Error, Inequality};

/// Critical noise, superadditivity and lattice routing for Werner-state networks.
#[derive(Parser)]
#[command(name = "nonlocal-net", version)]
struct Cli {
    #[command(flatten)]
    out: OutputArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// csv or json
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical Werner parameter for a star or chain.
    Threshold {
        /// star or chain
        network: NetworkKind,
        #[arg(long)]
        ineq: Inequality,
        /// Star size(s): `3`, `3,5` or `3..10`.
        #[arg(long)]
        n: Option<String>,
        /// Local measurement count(s).
        #[arg(long)]
        m: Option<String>,
        /// Chain node count(s).
        #[arg(long)]
        z: Option<String>,
        /// Coordination number(s).
        #[arg(long)]
        a: Option<String>,
        /// MBK with parties discarded instead of measuring.
        #[arg(long)]
        noncollab: bool,
    },
    /// Smallest coordination number or node count showing superadditivity.
    Superadditivity {
        #[command(subcommand)]
        search: Search,
    },
    /// Route two square-lattice parties and report the chain thresholds.
    Route {
        /// Source party `i,j,q`.
        #[arg(long, allow_hyphen_values = true)]
        from: SquareAddress,
        /// Destination party `i,j,q`.
        #[arg(long, allow_hyphen_values = true)]
        to: SquareAddress,
        /// multipartite (a parties) or bipartite
        #[arg(long, default_value = "multipartite")]
        target: RouteTarget,
        /// shifted or compass
        #[arg(long, default_value = "shifted")]
        convention: AxisConvention,
    },
    /// Evaluate a chain plan at a given Werner parameter.
    Chain {
        #[arg(long)]
        z: usize,
        #[arg(long)]
        a: usize,
        /// Unmeasured surviving sites, e.g. `0,3`.
        #[arg(long)]
        terminals: String,
        #[arg(long)]
        p: f64,
        /// Print the plan JSON instead of the table.
        #[arg(long)]
        plan: bool,
    },
    /// Check the X-state pipeline against the dense oracle.
    Validate {
        /// star, chain or all
        #[arg(long, default_value = "all")]
        scope: Scope,
        /// Oracle qubit cap (default: NONLOCAL_NET_MAX_QUBITS or 10).
        #[arg(long)]
        max_qubits: Option<usize>,
        /// Scale the X-state coherence before comparing (fault injection).
        #[arg(long, hide = true)]
        corrupt_offdiag: Option<f64>,
    },
    /// Threshold curves as a dataset: fig2, fig4 or fig5.
    Figure { id: Figure },
}

#[derive(Subcommand)]
enum Search {
    /// Minimal coordination number for each node count.
    Coordination {
        #[arg(long, default_value = "1..100")]
        z: String,
    },
    /// Minimal node count for each (a, m).
    Nodes {
        #[arg(long, default_value = "6")]
        a: String,
        #[arg(long, default_value = "10")]
        m: String,
    },
}

fn opt_list(s: &Option<String>) -> Result<Vec<usize>, Error> {
    s.as_deref().map_or(Ok(vec![]), parse_list)
}

fn run(cli: Cli) -> Result<(String, i32), Error> {
    let fmt = cli.out.format;
    Ok(match cli.command {
        Command::Threshold { network, ineq, n, m, z, a, noncollab } => {
            let req = ThresholdRequest {
                n: opt_list(&n)?,
                z: opt_list(&z)?,
                a: opt_list(&a)?,
                m: m.as_deref().map(parse_list).transpose()?,
                noncollab,
            };
            (threshold_table(network, ineq, &req)?.render(fmt), 0)
        }
        Command::Superadditivity { search: Search::Coordination { z } } => {
            (min_coordination_table(&parse_list(&z)?)?.render(fmt), 0)
        }
        Command::Superadditivity { search: Search::Nodes { a, m } } => {
            (min_nodes_table(&parse_list(&a)?, &parse_list(&m)?)?.render(fmt), 0)
        }
        Command::Route { from, to, target, convention } => (route_report(from, to, target, convention)?.render(fmt), 0),
        Command::Chain { z, a, terminals, p, plan } => {
            let (route, table) = chain_table(z, a, &parse_list(&terminals)?, WernerParam::new(p)?)?;
            (if plan { route.to_json() + "\n" } else { table.render(fmt) }, 0)
        }
        Command::Validate { scope, max_qubits, corrupt_offdiag } => {
            let cfg = match max_qubits {
                Some(q) => OracleConfig::new(q)?,
                None => OracleConfig::from_env()?,
            };
            let report = cli::validate(scope, &cfg, corrupt_offdiag)?;
            let code = if report.passed() { 0 } else { EXIT_VALIDATION };
            if code != 0 {
                eprintln!("validation failed: {}", report.failing().join(", "));
            }
            (report.table().render(fmt), code)
        }
        Command::Figure { id } => (figure_table(id)?.render(fmt), 0),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.out.output.clone();
    match run(cli) {
        Ok((text, code)) => {
            if let Some(path) = output {
                if let Err(e) = std::fs::write(&path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_USAGE as u8);
                }
            } else {
                print!("{text}");
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
