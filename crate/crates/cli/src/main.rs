use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use congest_domset::derand_decomp::FixOrder;
use congest_domset::generate::{generate_graph, GraphKind};
use congest_domset::oracle::{brute_force_cds, brute_force_mds, DEFAULT_CDS_CAP, DEFAULT_MDS_CAP};
use congest_domset::pipeline::{run_cds, run_mds_delta, run_mds_n, RunConfig, RunReport};
use congest_domset::rounding::DEFAULT_ENUM_BUDGET;
use congest_domset::sim::{CostModel, SimConfig};
use congest_domset::{Error, Graph, NodeId};
use serde::Serialize;
use serde_json::json;

const EXIT_INVARIANT: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;

#[derive(Parser)]
#[command(name = "domset", version, about = "Distributed dominating-set pipelines on a simulated CONGEST network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Graph file ("u v" per line, '#' comments, optional "n <count>"); stdin if omitted or "-".
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, global = true, value_enum, default_value_t = Model::Congest)]
    cost_model: Model,
    /// Message budget is beta·⌈log₂ n⌉ bits.
    #[arg(long, global = true, default_value_t = SimConfig::default().beta)]
    beta: usize,
    /// Largest number of free coins or seed bits enumerated exactly.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUM_BUDGET)]
    enum_budget: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,
    /// Brute-force optimum up to this many nodes, LP bound above.
    #[arg(long, global = true, default_value_t = RunConfig::default().opt_cap)]
    opt_cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Congest,
    Local,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Dominating set with network-decomposition derandomization.
    MdsN,
    /// Dominating set with coloring-based derandomization.
    MdsDelta,
    /// Connected dominating set.
    Cds,
    /// Exact optimum by exhaustive search.
    Oracle {
        #[arg(value_enum)]
        problem: Problem,
    },
    /// Print a generated graph.
    Gen {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
    },
    /// Check a node set against the graph.
    Verify {
        /// Comma- or whitespace-separated node ids.
        #[arg(long)]
        set: String,
        /// Also require the set to induce a connected subgraph.
        #[arg(long)]
        connected: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem {
    Mds,
    Cds,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Path,
    Cycle,
    Star,
    Complete,
    Grid,
    Gnp,
    Petersen,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_precondition() { EXIT_PRECONDITION } else { EXIT_INVARIANT };
        Failure { code, err: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure {
            code: EXIT_PRECONDITION,
            err,
        }
    }
}

fn read_graph(path: Option<&PathBuf>) -> Result<Graph, Failure> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
            s
        }
    };
    Ok(Graph::parse(&text)?)
}

fn run_config(o: &GlobalOpts) -> RunConfig {
    RunConfig {
        epsilon: o.epsilon,
        cost_model: match o.cost_model {
            Model::Congest => CostModel::Congest,
            Model::Local => CostModel::Local,
        },
        beta: o.beta,
        enum_budget: o.enum_budget,
        seed: o.seed,
        order: FixOrder::default(),
        opt_cap: o.opt_cap,
    }
}

#[derive(Serialize)]
struct WithSet<'a> {
    #[serde(flatten)]
    report: &'a RunReport,
    set: &'a [NodeId],
}

fn emit_report(report: &RunReport, set: &[NodeId], format: ReportFormat) {
    match format {
        ReportFormat::Json => {
            let out = WithSet { report, set };
            println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
        }
        ReportFormat::Text => {
            print!("{}", report.to_text());
            println!("set {}", join(set));
        }
    }
}

fn join(set: &[NodeId]) -> String {
    set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// Exit 2 when the reported set breaks validity, connectivity or the ratio bound.
fn report_verdict(report: &RunReport) -> Result<(), Failure> {
    let f = &report.final_;
    let mut broken = Vec::new();
    if !f.valid {
        broken.push("not dominating".to_string());
    }
    if f.connected == Some(false) {
        broken.push("not connected".to_string());
    }
    if !report.within_bound() {
        broken.push(format!("ratio {:?} above bound {}", f.ratio, f.ratio_bound));
    }
    if broken.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_INVARIANT,
            err: anyhow::anyhow!(broken.join(", ")),
        })
    }
}

fn parse_set(text: &str, n: usize) -> Result<Vec<bool>, Failure> {
    let mut member = vec![false; n];
    for tok in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        let v: NodeId = tok.parse().with_context(|| format!("bad node id {tok:?}"))?;
        if v >= n {
            return Err(anyhow::anyhow!("node {v} outside 0..{n}").into());
        }
        member[v] = true;
    }
    Ok(member)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let o = &cli.opts;
    let cfg = run_config(o);
    match cli.command {
        Command::MdsN | Command::MdsDelta | Command::Cds => {
            let g = read_graph(o.input.as_ref())?;
            let run = match cli.command {
                Command::MdsN => run_mds_n(&g, &cfg)?,
                Command::MdsDelta => run_mds_delta(&g, &cfg)?,
                _ => run_cds(&g, &cfg)?,
            };
            emit_report(&run.report, &run.set, o.report);
            report_verdict(&run.report)
        }
        Command::Oracle { problem } => {
            let g = read_graph(o.input.as_ref())?;
            let (name, (size, witness)) = match problem {
                Problem::Mds => ("mds", brute_force_mds(&g, DEFAULT_MDS_CAP)?),
                Problem::Cds => ("cds", brute_force_cds(&g, DEFAULT_CDS_CAP)?),
            };
            match o.report {
                ReportFormat::Json => println!("{}", json!({"problem": name, "size": size, "witness": witness})),
                ReportFormat::Text => println!("{name} size={size} witness {}", join(&witness)),
            }
            Ok(())
        }
        Command::Gen { kind, n, p, rows, cols } => {
            let kind = match kind {
                Kind::Path => GraphKind::Path(n),
                Kind::Cycle => GraphKind::Cycle(n),
                Kind::Star => GraphKind::Star(n),
                Kind::Complete => GraphKind::Complete(n),
                Kind::Grid => GraphKind::Grid(rows, cols),
                Kind::Gnp => GraphKind::Gnp(n, p),
                Kind::Petersen => GraphKind::Petersen,
            };
            print!("{}", generate_graph(&kind, o.seed)?.to_text());
            Ok(())
        }
        Command::Verify { set, connected } => {
            let g = read_graph(o.input.as_ref())?;
            let member = parse_set(&set, g.n())?;
            let dominating = g.is_dominating(&member);
            let induced = g.induces_connected(&member);
            match o.report {
                ReportFormat::Json => {
                    let mut v = json!({"size": member.iter().filter(|&&b| b).count(), "dominating": dominating});
                    if connected {
                        v["connected"] = json!(induced);
                    }
                    println!("{v}");
                }
                ReportFormat::Text => {
                    print!("dominating={dominating}");
                    if connected {
                        print!(" connected={induced}");
                    }
                    println!();
                }
            }
            if dominating && (!connected || induced) {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_INVARIANT,
                    err: anyhow::anyhow!("set fails verification"),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
