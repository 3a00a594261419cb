use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use avgrl::chain::{decompose, policy_matrix, reward_rate};
use avgrl::harness::{self, convergence_report, write_report_csv, Experiment, ExperimentConfig, OutputFormat};
use avgrl::learners::ReferenceSpec;
use avgrl::mdp::builtin;
use avgrl::options::{induce_smdp, OptionsDocument};
use avgrl::oracle::{optimal_reward_rate, solution_set_probe, solve_q, SolverConfig};
use avgrl::sampling::run_rng;
use avgrl::{Error, InducedSmdp, Result, StationaryPolicy, TabularMdp};

#[derive(Parser)]
#[command(name = "avgrl", version, about = "Tabular average-reward RL: models, oracles, learners")]
struct Cli {
    /// Write output files here instead of printing to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Master seed; overrides the config file for `run`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and print its structure class.
    Validate {
        /// Model file, or the name of a built-in model.
        mdp: String,
    },
    /// Print the semi-MDP induced by a set of options.
    Induce { mdp: String, options: PathBuf },
    /// Recurrent classes, limiting rows and reward rates under a fixed policy.
    Analyze {
        mdp: String,
        /// JSON array of per-state probability rows over actions (or options).
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        options: Option<PathBuf>,
    },
    /// Solve the optimality equation, pinned by a reference function.
    Solve {
        mdp: String,
        #[arg(long)]
        options: Option<PathBuf>,
        /// `sum`, `mean` or `entry:<state>,<choice>`.
        #[arg(long, default_value = "sum")]
        f: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Collect distinct pinned solutions and check their midpoints.
    Probe {
        mdp: String,
        #[arg(long)]
        options: Option<PathBuf>,
        #[arg(long, default_value = "sum")]
        f: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run a learning experiment described by a JSON config.
    Run { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn load_model(spec: &str) -> Result<TabularMdp> {
    let path = Path::new(spec);
    if path.is_file() {
        TabularMdp::from_json(&std::fs::read_to_string(path)?)
    } else {
        builtin(spec)
    }
}

fn load_smdp(mdp: &TabularMdp, options: Option<&Path>) -> Result<InducedSmdp> {
    match options {
        None => Ok(InducedSmdp::from_mdp(mdp)),
        Some(p) => {
            let doc: OptionsDocument = serde_json::from_str(&std::fs::read_to_string(p)?)?;
            induce_smdp(mdp, &doc.resolve(mdp)?)
        }
    }
}

/// Writes `bytes` to `<out_dir>/<name>` or to stdout.
fn output(cli: &Cli, name: &str, bytes: &[u8]) -> Result<()> {
    match &cli.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), bytes)?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes(value: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { mdp } => {
            let model = load_model(mdp)?;
            let class = model.classify();
            let transient: Vec<&str> = class.transient.iter().map(|&s| model.state_names()[s].as_str()).collect();
            let line = format!("class={} transient=[{}]\n", class.tag.as_str(), transient.join(","));
            output(cli, "validate.txt", line.as_bytes())
        }
        Command::Induce { mdp, options } => {
            let model = load_model(mdp)?;
            let smdp = load_smdp(&model, Some(options))?;
            let bytes = match cli.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    smdp.write_csv(&mut buf)?;
                    buf
                }
                Format::Json => json_bytes(&smdp_json(&smdp))?,
            };
            output(cli, &format!("smdp.{}", OutputFormat::from(cli.format).extension()), &bytes)
        }
        Command::Analyze { mdp, policy, options } => {
            let model = load_model(mdp)?;
            let smdp = load_smdp(&model, options.as_deref())?;
            let rows: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(policy)?)?;
            let policy = StationaryPolicy::new(rows)?;
            analyze(cli, &smdp, &policy)
        }
        Command::Solve { mdp, options, f, tol } => {
            let model = load_model(mdp)?;
            let smdp = load_smdp(&model, options.as_deref())?;
            let f = ReferenceSpec::parse_cli(f)?.resolve(smdp.state_names(), smdp.option_names())?;
            let cfg = SolverConfig {
                tol: *tol,
                ..SolverConfig::default()
            };
            let report = solve_q(&smdp, &f, &cfg)?;
            output(cli, "solve.json", &json_bytes(&report)?)
        }
        Command::Probe {
            mdp,
            options,
            f,
            samples,
            tol,
        } => {
            let model = load_model(mdp)?;
            let smdp = load_smdp(&model, options.as_deref())?;
            let f = ReferenceSpec::parse_cli(f)?.resolve(smdp.state_names(), smdp.option_names())?;
            let cfg = SolverConfig {
                tol: *tol,
                ..SolverConfig::default()
            };
            let mut rng = run_rng(cli.seed.unwrap_or(0), 0);
            let report = solution_set_probe(&smdp, &f, *samples, &cfg, &mut rng)?;
            let bytes = match cli.format {
                Format::Json => json_bytes(&report)?,
                Format::Csv => probe_csv(&smdp, &report)?,
            };
            output(cli, &format!("probe.{}", OutputFormat::from(cli.format).extension()), &bytes)
        }
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let exp = Experiment::new(cfg)?;
            let logs = harness::run_prepared(&exp)?;
            let format = OutputFormat::from(cli.format);
            match &cli.out_dir {
                Some(dir) => {
                    harness::emit(&logs, exp.state_names(), format, dir)?;
                    if let Ok(r_star) = optimal_reward_rate(&exp.smdp) {
                        let file = std::fs::File::create(dir.join("convergence.csv"))?;
                        write_report_csv(&convergence_report(&logs, r_star), file)?;
                    }
                }
                None => match format {
                    OutputFormat::Csv => harness::write_csv(&logs, exp.state_names(), std::io::stdout().lock())?,
                    OutputFormat::Json => harness::write_json(&logs, std::io::stdout().lock())?,
                },
            }
            Ok(())
        }
    }
}

fn smdp_json(smdp: &InducedSmdp) -> serde_json::Value {
    let mut rows = Vec::new();
    for s in 0..smdp.n_states() {
        for o in 0..smdp.n_options() {
            rows.push(json!({
                "state": smdp.state_names()[s],
                "option": smdp.option_names()[o],
                "exp_reward": smdp.reward(s, o),
                "exp_length": smdp.length(s, o),
                "landing": smdp.kernel_row(s, o),
            }));
        }
    }
    json!({ "states": smdp.state_names(), "options": smdp.option_names(), "pairs": rows })
}

/// One row per state: its recurrent class (or `transient`), its limiting row
/// and its reward rate.
fn analyze(cli: &Cli, smdp: &InducedSmdp, policy: &StationaryPolicy) -> Result<()> {
    let chain = policy_matrix(smdp, policy)?;
    let d = decompose(&chain.transition)?;
    let rates = reward_rate(smdp, policy)?;
    let names = smdp.state_names();
    let class_of = |s: usize| -> String {
        d.classes
            .iter()
            .position(|c| c.contains(&s))
            .map_or("transient".to_string(), |k| k.to_string())
    };
    let bytes = match cli.format {
        Format::Json => {
            let states: Vec<_> = (0..names.len())
                .map(|s| {
                    json!({
                        "state": names[s],
                        "class": class_of(s),
                        "limiting": d.limiting.row(s).iter().collect::<Vec<_>>(),
                        "reward_rate": rates[s],
                    })
                })
                .collect();
            json_bytes(&json!({ "states": states }))?
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["state".to_string(), "class".to_string()];
            header.extend(names.iter().map(|n| format!("p_{n}")));
            header.push("reward_rate".into());
            w.write_record(&header).map_err(Error::from)?;
            for s in 0..names.len() {
                let mut row = vec![names[s].clone(), class_of(s)];
                row.extend(d.limiting.row(s).iter().map(f64::to_string));
                row.push(rates[s].to_string());
                w.write_record(&row).map_err(Error::from)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    output(cli, &format!("analyze.{}", OutputFormat::from(cli.format).extension()), &bytes)
}

/// Two CSV tables separated by a blank line: the members (one row per
/// member) and the pairwise midpoint residuals.
fn probe_csv(smdp: &InducedSmdp, report: &avgrl::oracle::ProbeReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["member".to_string()];
    for s in smdp.state_names() {
        for o in smdp.option_names() {
            header.push(format!("q_{s}_{o}"));
        }
    }
    header.extend(["residual".to_string(), "f_value".to_string()]);
    w.write_record(&header)?;
    for (k, m) in report.members.iter().enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(m.values().iter().map(f64::to_string));
        row.push(report.member_residuals[k].to_string());
        row.push(report.member_f_values[k].to_string());
        w.write_record(&row)?;
    }
    let mut out = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push(b'\n');
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["member_a", "member_b", "distance", "midpoint_residual"])?;
    for c in &report.midpoints {
        w.write_record([
            c.a.to_string(),
            c.b.to_string(),
            c.distance.to_string(),
            c.residual_sup.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
