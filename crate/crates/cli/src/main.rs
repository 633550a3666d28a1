use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qbp::bridge;
use qbp::builders;
use qbp::experiments::{self, AcceptanceConfig, Fault};
use qbp::graph::QbpGraph;
use qbp::protocols::{self, MultiPartitionProtocol};
use qbp::rectlab;
use qbp::sim::{Simulator, VerifyMode};

#[derive(Parser)]
#[command(name = "qbpw", version, about = "Quantum branching program workbench")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = qbp::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Write output here instead of stdout.
    #[arg(short = 'o', global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check well-formedness and unidirectionality.
    Validate {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Report structural classes.
    Classify {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Simulate on one input, e.g. --input 1110 for x1=1, x2=1, x3=1, x4=0.
    Run {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Exhaustive comparison with a reference function.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        function: Function,
        /// Allowed two-sided error; exact when absent.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Construct a graph and write it as JSON (or DOT).
    Build {
        #[command(subcommand)]
        which: BuildKind,
        #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Error and information cost of a protocol on the AND/XOR input law.
    Ic {
        /// xor, and-classical, phase-gate, phase:<k>, random:<seed>, perturbed:<seed>
        #[arg(long)]
        protocol: String,
    },
    /// Run the restriction-to-protocol pipeline on one pair and background.
    BridgeCheck {
        #[arg(long)]
        graph: PathBuf,
        /// Pair index i: x = variable i, y = variable n/2 + i.
        #[arg(long)]
        pair: u32,
        /// Bits for all variables (pair positions ignored) or for the others only.
        #[arg(long, default_value = "")]
        background: String,
    },
    Experiment {
        #[command(subcommand)]
        which: ExperimentKind,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Acceptance {
        /// Comma-separated criterion indices.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        #[arg(long, value_enum)]
        fault: Option<FaultArg>,
        /// Emit CSV instead of the table.
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Subcommand)]
enum BuildKind {
    Mws {
        #[arg(long)]
        n: usize,
        /// Non-strict layout with unlabeled Hadamard nodes.
        #[arg(long)]
        grid: bool,
    },
    Disj {
        #[arg(long)]
        n: usize,
    },
    MwsHalf {
        #[arg(long)]
        n: usize,
    },
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        width: usize,
        /// Two variable orders instead of one.
        #[arg(long)]
        two_order: bool,
    },
}

#[derive(Subcommand)]
enum ExperimentKind {
    /// Distribution of Σ i·x_i mod q.
    Equidist {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        n: usize,
    },
    /// Largest index-function rectangle within radius ⌊εn⌋.
    IndRect {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
    },
    MwsScaling {
        #[arg(long, value_delimiter = ',', default_values_t = vec![4, 8, 16, 32])]
        n: Vec<usize>,
    },
    FactSuite {
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
    AndFrontier,
}

#[derive(Clone, Copy, ValueEnum)]
enum Function {
    Mws,
    MwsHalf,
    Disj,
    Nd,
    Ws,
    Const0,
    Const1,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    MwsSinkFlip,
}

enum CliError {
    /// Exit status 2.
    Usage(String),
    /// Exit status 1: the command ran but a check failed.
    Failed,
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.global.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &PathBuf) -> Result<QbpGraph, CliError> {
    let bytes = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    QbpGraph::load(&bytes).map_err(usage)
}

fn emit(g: &Global, text: &str) -> Result<(), CliError> {
    match &g.output {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(usage),
    }
}

fn parse_bits(s: &str) -> Result<Vec<u8>, CliError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(usage(format!("bad bit {c:?} in {s:?}"))),
        })
        .collect()
}

fn check(ok: bool) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

fn reference(f: Function, n: usize) -> Box<dyn Fn(&[u8]) -> bool + Sync> {
    let half = n / 2;
    match f {
        Function::Mws => Box::new(builders::mws_eval_joint),
        Function::MwsHalf => Box::new(builders::mws_half_eval),
        Function::Disj => Box::new(move |z: &[u8]| builders::disj_eval(&z[..half], &z[half..])),
        Function::Nd => Box::new(move |z: &[u8]| builders::nd_eval(&z[..half], &z[half..])),
        Function::Ws => Box::new(builders::ws_eval),
        Function::Const0 => Box::new(|_: &[u8]| false),
        Function::Const1 => Box::new(|_: &[u8]| true),
    }
}

fn protocol_by_name(name: &str) -> Result<(MultiPartitionProtocol, fn(&[u8]) -> bool), CliError> {
    let and = protocols::and_eval as fn(&[u8]) -> bool;
    let (kind, arg) = name.split_once(':').map(|(a, b)| (a, Some(b))).unwrap_or((name, None));
    let num = |a: Option<&str>| -> Result<u64, CliError> {
        a.ok_or_else(|| usage(format!("{kind} needs an argument")))?.parse().map_err(usage)
    };
    Ok(match kind {
        "xor" => (protocols::build_xor_protocol(), protocols::xor_eval as fn(&[u8]) -> bool),
        "and-classical" => (protocols::classical_copy_and(), and),
        "phase-gate" => (protocols::phase_gate_protocol(), and),
        "phase" => {
            let pts = protocols::phase_family_points();
            let k = num(arg)? as usize;
            let phi = *pts.get(k).ok_or_else(|| usage(format!("phase index < {}", pts.len())))?;
            (protocols::phase_family_and(phi), and)
        }
        "random" => (protocols::random_and_protocol(num(arg)?), and),
        "perturbed" => (protocols::perturbed_copy_protocol(num(arg)?), and),
        _ => return Err(usage(format!("unknown protocol {name:?}"))),
    })
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { graph } => {
            let graph = load(graph)?;
            let rep = graph.validate(g.tol).map_err(usage)?;
            let worst = rep.violations.iter().map(|v| v.defect).fold(0.0, f64::max);
            emit(
                g,
                &format!(
                    "well_formed={} unidirectional={} violations={} worst_defect={worst:e} direction_violations={}\n",
                    rep.well_formed,
                    rep.unidirectional,
                    rep.violations.len(),
                    rep.direction_violations.len()
                ),
            )?;
            check(rep.ok())
        }
        Command::Classify { graph } => {
            let c = load(graph)?.classify().map_err(usage)?;
            let order = c.obdd_order.as_ref().map(|o| o.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
            emit(
                g,
                &format!(
                    "acyclic={} leveled={} read_once={} regular_read_once={} obdd={} reversible_classical={} width={}\n",
                    c.acyclic,
                    c.leveled,
                    c.read_once,
                    c.regular_read_once,
                    order.unwrap_or_else(|| "no".into()),
                    c.reversible_classical,
                    c.width.map(|w| w.to_string()).unwrap_or_else(|| "-".into())
                ),
            )
        }
        Command::Run { graph, input, steps } => {
            let graph = load(graph)?;
            let z = parse_bits(input)?;
            let sim = Simulator::new(&graph, g.tol).map_err(usage)?;
            let d = sim.run(&z, steps.unwrap_or_else(|| sim.default_steps())).map_err(usage)?;
            emit(g, &format!("p0={} p1={} residual={}\n", sig(d.prob(false)), sig(d.prob(true)), sig(d.residual)))
        }
        Command::Verify { graph, function, eps } => {
            let graph = load(graph)?;
            let sim = Simulator::new(&graph, g.tol).map_err(usage)?;
            let mode = eps.map(VerifyMode::TwoSided).unwrap_or(VerifyMode::Exact);
            let f = reference(*function, graph.num_vars);
            let rep = sim.verify_function(|z: &[u8]| f(z), mode, g.tol);
            let worst_input: String = rep.worst_input.iter().map(|b| b.to_string()).collect();
            emit(
                g,
                &format!(
                    "{} worst_error={:.1e} worst_input={worst_input}\n",
                    if rep.pass { "PASS" } else { "FAIL" },
                    rep.worst_error.max(0.0)
                ),
            )?;
            check(rep.pass)
        }
        Command::Build { which, format } => {
            let graph = match which {
                BuildKind::Mws { n, grid } => builders::build_mws_qbp(*n, !grid),
                BuildKind::Disj { n } => builders::build_disj_obdd(*n),
                BuildKind::MwsHalf { n } => builders::build_mws_half_obdd(*n),
                BuildKind::Random { n, width, two_order } => {
                    if *two_order {
                        builders::random_two_order_qrobp(*n, *width, g.seed)
                    } else {
                        builders::random_regular_qrobp(*n, *width, g.seed)
                    }
                }
            }
            .map_err(usage)?;
            let text = match format {
                Format::Json => String::from_utf8(graph.save()).expect("JSON is UTF-8"),
                Format::Dot => graph.to_dot(),
            };
            emit(g, &text)
        }
        Command::Ic { protocol } => {
            let (p, f) = protocol_by_name(protocol)?;
            p.validate(g.tol).map_err(usage)?;
            let eps = p.error_probability(f);
            let delta = protocols::delta_of(eps);
            let ic = p.information_cost(&protocols::and_input_distribution()).map_err(usage)?;
            let bound = protocols::and_ic_bound(delta);
            let ok = !protocols::and_bound_applies(eps) || ic >= bound - 1e-6;
            emit(g, &format!("epsilon={} delta={} ic={} bound={} ok={ok}\n", clean(eps), clean(delta), clean(ic), bound))?;
            check(ok)
        }
        Command::BridgeCheck { graph, pair, background } => {
            let graph = load(graph)?;
            let nv = graph.num_vars as u32;
            if nv % 2 != 0 || *pair == 0 || *pair > nv / 2 {
                return Err(usage(format!("pair must be in 1..={} for {nv} variables", nv / 2)));
            }
            let (x, y) = (*pair, nv / 2 + *pair);
            let bits = parse_bits(background)?;
            let others: Vec<u32> = (1..=nv).filter(|&v| v != x && v != y).collect();
            let bg: BTreeMap<u32, u8> = if bits.len() == nv as usize {
                others.iter().map(|&v| (v, bits[v as usize - 1])).collect()
            } else if bits.len() == others.len() {
                others.iter().copied().zip(bits).collect()
            } else {
                return Err(usage(format!("background needs {} or {} bits", nv, others.len())));
            };
            let chk = bridge::bridge_check(&graph, x, y, &bg, &|_| false, g.tol).map_err(usage)?;
            let pass = chk.pass(g.tol);
            emit(
                g,
                &format!(
                    "max_deviation={:e} dummy_deviation={:e} max_overlap={:e} degenerate={} {}\n",
                    chk.max_deviation,
                    chk.dummy_deviation,
                    chk.orthogonality.max_overlap,
                    chk.degenerate,
                    if pass { "PASS" } else { "FAIL" }
                ),
            )?;
            check(pass)
        }
        Command::Experiment { which } => experiment(g, which),
        Command::Acceptance { only, fault, csv } => {
            let cfg = AcceptanceConfig {
                tol: g.tol,
                seed: g.seed,
                fault: fault.map(|FaultArg::MwsSinkFlip| Fault::MwsSinkFlip),
                only: only.clone(),
            };
            if cfg.only.iter().any(|&i| !(1..=12).contains(&i)) {
                return Err(usage("criteria are numbered 1..=12"));
            }
            let results = experiments::run_acceptance_suite(&cfg);
            let text = if *csv {
                experiments::acceptance_csv(&results)
            } else {
                results.iter().map(|r| r.line() + "\n").collect()
            };
            emit(g, &text)?;
            check(results.iter().all(|r| r.pass))
        }
    }
}

fn experiment(g: &Global, which: &ExperimentKind) -> Result<(), CliError> {
    match which {
        ExperimentKind::Equidist { q, n } => {
            let rows = experiments::equidistribution(*q, *n).map_err(usage)?;
            let mut out = String::from("b,probability,deviation\n");
            for (b, p, d) in rows {
                out += &format!("{b},{p},{d}\n");
            }
            emit(g, &out)
        }
        ExperimentKind::IndRect { n, eps } => {
            let r = rectlab::best_ind_rectangle(*n, *eps).map_err(usage)?;
            emit(g, &format!("maxA,bound\n{},{}\n", r.max_size, r.bound))?;
            check(r.within_bound())
        }
        ExperimentKind::MwsScaling { n } => {
            if let Some(bad) = n.iter().find(|&&k| !(2..=32).contains(&k)) {
                return Err(usage(format!("n={bad} outside 2..=32")));
            }
            emit(g, &experiments::mws_scaling_csv(n))
        }
        ExperimentKind::FactSuite { trials } => {
            let (csv, ok) = experiments::fact_suite_csv(*trials, g.seed, 1e-8);
            emit(g, &csv)?;
            check(ok)
        }
        ExperimentKind::AndFrontier => emit(g, &experiments::and_frontier()),
    }
}

/// 17 significant digits, trailing zeros dropped.
fn sig(x: f64) -> String {
    let x = clean(x);
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.*e}", 16, x);
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let digits = (16 - exp).max(0) as usize;
        let t = format!("{x:.digits$}");
        if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

/// Maps negative zero and sub-1e-15 rounding noise to zero.
fn clean(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(-0.0), "0");
        assert_eq!(sig(0.5), "0.5");
        assert_eq!(sig(0.1), "0.10000000000000001");
        assert_eq!(sig(1e-20), "0");
        assert_eq!(sig(2.5e-9), "2.5000000000000001e-9");
        assert_eq!(sig(0.5e-6), "4.9999999999999998e-7");
    }

    #[test]
    fn bits_parse() {
        assert!(matches!(parse_bits("1101").as_deref(), Ok([1, 1, 0, 1])));
        assert!(parse_bits("12").is_err());
    }
}
