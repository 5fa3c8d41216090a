use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvdc_flow::ac::{AcOptions, DEFAULT_MISMATCH_TOL_W};
use mvdc_flow::contingency::{run_ac_study, run_study};
use mvdc_flow::dc::{CertificateInterpretation, NormQ};
use mvdc_flow::netmodel::{
    builtin_architecture1, count_breakers, load_network_file, total_cable_length, with_scenario,
    Network, Scenario, Tier, TierFilter,
};
use mvdc_flow::report::{ac_options_hash, dc_options_hash, study_report, ReportDocument};
use mvdc_flow::{ac_report, dc_report, solve_network, DcSolver, SolveOptions};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "mvdc",
    version,
    about = "MVDC aircraft power flow and N-1 contingency analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// DC power flow of the intact network.
    Solve(DcArgs),
    /// Normal case plus every single contingency.
    Contingency(ContingencyArgs),
    /// Newton-Raphson AC power flow of the intact network.
    Ac(AcArgs),
    /// Load and validate a network file, then print its structure.
    Validate(NetArgs),
    /// Print the conductor catalog of a network.
    Catalog(NetArgs),
}

#[derive(Args, Debug)]
struct NetArgs {
    /// Network file, or `arch1` for the built-in Architecture #1.
    #[arg(long, env = "MVDC_NET", default_value = "arch1")]
    net: String,
    /// `takeoff`, `cruise` or a load scale; defaults to the file's scenario.
    #[arg(long, env = "MVDC_SCENARIO")]
    scenario: Option<String>,
    /// Conductor pair as `EEU-tier/feeder-tier`, e.g. `Mazama/Poppy`.
    #[arg(long, env = "MVDC_CONDUCTORS")]
    conductors: Option<String>,
    #[arg(long, env = "MVDC_FORMAT", value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, env = "MVDC_OUTPUT")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DcArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long, env = "MVDC_SOLVER", value_enum, default_value_t = SolverArg::Zbus)]
    solver: SolverArg,
    /// Convergence tolerance in volts (default 1e-8 of nominal voltage).
    #[arg(long, env = "MVDC_TOL")]
    tol: Option<f64>,
    #[arg(long = "max-iter", env = "MVDC_MAX_ITER")]
    max_iter: Option<usize>,
    #[arg(long = "certificate-interpretation", env = "MVDC_CERTIFICATE_INTERPRETATION", value_enum, default_value_t = CertArg::Yinv)]
    certificate_interpretation: CertArg,
    /// Vector norm of the existence certificate.
    #[arg(long = "certificate-norm", env = "MVDC_CERTIFICATE_NORM", value_enum, default_value_t = NormArg::Two)]
    certificate_norm: NormArg,
}

#[derive(Args, Debug)]
struct ContingencyArgs {
    #[command(flatten)]
    dc: DcArgs,
    /// Run the cases with the AC solver instead.
    #[arg(long, env = "MVDC_AC")]
    ac: bool,
    #[arg(long = "mismatch-tol", env = "MVDC_MISMATCH_TOL", default_value_t = DEFAULT_MISMATCH_TOL_W)]
    mismatch_tol: f64,
}

#[derive(Args, Debug)]
struct AcArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Convergence threshold on the largest bus mismatch, watts.
    #[arg(long = "mismatch-tol", env = "MVDC_MISMATCH_TOL", default_value_t = DEFAULT_MISMATCH_TOL_W)]
    mismatch_tol: f64,
    #[arg(long = "max-iter", env = "MVDC_MAX_ITER", default_value_t = 30)]
    max_iter: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Zbus,
    Monotone,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CertArg {
    Yinv,
    Yinv2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Inf,
}

enum Failure {
    Input(String),
    Numerical(String),
}

type Outcome = Result<(), Failure>;

fn load(args: &NetArgs) -> Result<Network, Failure> {
    let net = if args.net == "arch1" {
        builtin_architecture1()
    } else {
        load_network_file(&args.net).map_err(|e| Failure::Input(e.to_string()))?
    };
    let net = match &args.conductors {
        Some(pair) => {
            let (eeu, feeder) = pair.split_once('/').ok_or_else(|| {
                Failure::Input(format!("--conductors expects EEU/FEEDER, got `{pair}`"))
            })?;
            net.with_conductors(eeu.trim(), feeder.trim())
                .map_err(|e| Failure::Input(e.to_string()))?
        }
        None => net,
    };
    match &args.scenario {
        Some(text) => {
            let target = Scenario::parse(text).map_err(|e| Failure::Input(e.to_string()))?;
            with_scenario(&net, &target).map_err(|e| Failure::Input(e.to_string()))
        }
        None => Ok(net),
    }
}

fn emit(args: &NetArgs, text: String) -> Outcome {
    match &args.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(doc: &ReportDocument, format: Format) -> String {
    match format {
        Format::Table => doc.render_table(),
        Format::Csv => doc.to_csv(),
        Format::Json => doc.to_json() + "\n",
    }
}

fn dc_options(args: &DcArgs) -> SolveOptions {
    let mut opts = SolveOptions {
        tolerance_v: args.tol,
        certificate_interpretation: match args.certificate_interpretation {
            CertArg::Yinv => CertificateInterpretation::Yinv,
            CertArg::Yinv2 => CertificateInterpretation::Yinv2,
        },
        certificate_norm: match args.certificate_norm {
            NormArg::One => NormQ::One,
            NormArg::Two => NormQ::Two,
            NormArg::Inf => NormQ::Inf,
        },
        ..SolveOptions::default()
    };
    if let Some(n) = args.max_iter {
        opts.max_iterations = n;
    }
    opts
}

fn solver(arg: SolverArg) -> DcSolver {
    match arg {
        SolverArg::Zbus => DcSolver::Zbus,
        SolverArg::Monotone => DcSolver::Monotone,
    }
}

fn cmd_solve(args: &DcArgs) -> Outcome {
    let net = load(&args.net)?;
    let opts = dc_options(args);
    let solver = solver(args.solver);
    let flow = solve_network(&net, solver, &opts).map_err(|e| Failure::Numerical(e.to_string()))?;
    let doc = dc_report(&net, &flow, solver, &opts);
    emit(&args.net, render(&doc, args.net.format))?;
    if !flow.solution.converged {
        return Err(Failure::Numerical(format!(
            "{solver} did not converge in {} iterations (last step {:.3e} V)",
            flow.solution.iterations, flow.solution.final_step
        )));
    }
    Ok(())
}

fn cmd_contingency(args: &ContingencyArgs) -> Outcome {
    let net = load(&args.dc.net)?;
    let (study, hash) = if args.ac {
        if net.ac_config().is_none() {
            return Err(Failure::Input("network has no `ac` section".into()));
        }
        let opts = AcOptions {
            mismatch_tol_w: args.mismatch_tol,
            ..AcOptions::default()
        };
        (run_ac_study(&net, &opts), ac_options_hash(&net, &opts))
    } else {
        let opts = dc_options(&args.dc);
        let solver = solver(args.dc.solver);
        (
            run_study(&net, solver, &opts),
            dc_options_hash(&net, solver, &opts),
        )
    };
    let doc = study_report(&net, &study, hash);
    emit(&args.dc.net, render(&doc, args.dc.net.format))?;
    if !study.normal.status.solved() {
        return Err(Failure::Numerical(format!(
            "normal case: {}",
            study.normal.status.name()
        )));
    }
    Ok(())
}

fn cmd_ac(args: &AcArgs) -> Outcome {
    let net = load(&args.net)?;
    if net.ac_config().is_none() {
        return Err(Failure::Input("network has no `ac` section".into()));
    }
    let opts = AcOptions {
        mismatch_tol_w: args.mismatch_tol,
        max_iterations: args.max_iter,
    };
    let sol = mvdc_flow::ac::solve_network_ac(&net, &opts)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    emit(
        &args.net,
        render(&ac_report(&net, &sol, &opts), args.net.format),
    )
}

fn cmd_validate(args: &NetArgs) -> Outcome {
    let net = load(args)?;
    let tier_len = |t| format!("{:.3}", total_cable_length(&net, TierFilter::Only(t)));
    let info = [
        ("network", net.name().to_string()),
        (
            "scenario",
            format!(
                "{} (load scale {})",
                net.scenario().name,
                net.scenario().load_scale
            ),
        ),
        ("buses", net.buses().len().to_string()),
        ("branches", net.branches().len().to_string()),
        ("breakers", count_breakers(&net).to_string()),
        ("eeu_tier_length_m", tier_len(Tier::Eeu)),
        ("feeder_tier_length_m", tier_len(Tier::Feeder)),
        (
            "total_length_m",
            format!("{:.3}", total_cable_length(&net, TierFilter::All)),
        ),
        (
            "total_load_w",
            (net.total_load_w() * net.pole_count()).to_string(),
        ),
        ("ac_section", net.ac_config().is_some().to_string()),
    ];
    let text = match args.format {
        Format::Table => info.iter().map(|(k, v)| format!("{k:<22}{v}\n")).collect(),
        Format::Csv => std::iter::once("quantity,value\n".to_string())
            .chain(info.iter().map(|(k, v)| format!("{k},\"{v}\"\n")))
            .collect(),
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = info
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.clone())))
                .collect();
            serde_json::to_string_pretty(&map).expect("json") + "\n"
        }
    };
    emit(args, text)
}

fn cmd_catalog(args: &NetArgs) -> Outcome {
    let net = load(args)?;
    let reactance = |name: &str| {
        net.ac_config()
            .and_then(|c| c.conductor_reactance_ohm_per_km.get(name).copied())
    };
    let text = match args.format {
        Format::Table => {
            let mut s = format!(
                "{:<10} {:>14} {:>12} {:>14}\n",
                "conductor", "R (ohm/km)", "ampacity (A)", "X (ohm/km)"
            );
            for c in net.conductors() {
                s += &format!(
                    "{:<10} {:>14.7} {:>12.1} {:>14}\n",
                    c.name,
                    c.r_ohm_per_km,
                    c.ampacity_a,
                    reactance(&c.name).map_or("-".into(), |x| format!("{x:.7}"))
                );
            }
            s
        }
        Format::Csv => {
            let mut s = String::from("conductor,r_ohm_per_km,ampacity_a,x_ohm_per_km\n");
            for c in net.conductors() {
                s += &format!(
                    "{},{},{},{}\n",
                    c.name,
                    c.r_ohm_per_km,
                    c.ampacity_a,
                    reactance(&c.name).map_or(String::new(), |x| x.to_string())
                );
            }
            s
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = net
                .conductors()
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "name": c.name,
                        "r_ohm_per_km": c.r_ohm_per_km,
                        "ampacity_a": c.ampacity_a,
                        "x_ohm_per_km": reactance(&c.name),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&rows).expect("json") + "\n"
        }
    };
    emit(args, text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Contingency(a) => cmd_contingency(a),
        Command::Ac(a) => cmd_ac(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Catalog(a) => cmd_catalog(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
