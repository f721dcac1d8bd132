use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sbm_recovery::harness::{
    boundary_curves, curves_csv, parse_grid, phase_csv, phase_diagram, run_on_graph, Method,
    OracleChoice, TrialSettings,
};
use sbm_recovery::ml::estimate_event_probabilities;
use sbm_recovery::tail::{
    diff_binomial_tail, g_exponent, log_t_star, ml_failure_log_upper_bound, ml_failure_upper_bound,
    rho_exact, tau_star, threshold_f,
};
use sbm_recovery::two_phase::{ImproveOptions, DEFAULT_SPLIT_C};
use sbm_recovery::{generate_sbm, parse_graph, write_graph, Error, Labeling, Result, SbmParams};

#[derive(Parser)]
#[command(name = "sbm", version, about = "Exact recovery experiments for the two-community SBM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph and its planted labeling.
    Gen(GenArgs),
    /// Recover communities from a graph file; prints a JSON trial record.
    Recover(RecoverArgs),
    /// Exact binomial-difference tails, rate exponents and related bounds.
    Tail(TailArgs),
    /// Evaluate the recovery threshold at one point.
    Threshold {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Monte Carlo frequencies of the failure events.
    Events {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Success rates over an (alpha, beta) grid, written as CSV.
    Phase(PhaseArgs),
    /// Red and green boundary curves, written as CSV.
    Curves {
        /// START:END:STEP
        #[arg(long)]
        beta: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    graph_out: PathBuf,
    #[arg(long)]
    labels_out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ml,
    Sdp,
    Certificate,
    TwoPhase,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ml => Method::Ml,
            MethodArg::Sdp => Method::Sdp,
            MethodArg::Certificate => Method::Certificate,
            MethodArg::TwoPhase => Method::TwoPhase,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Spectral,
    Cheating,
}

#[derive(Args)]
struct SettingsArgs {
    /// Splitting constant for two-phase recovery (needs C <= ln n).
    #[arg(long, default_value_t = DEFAULT_SPLIT_C)]
    split_c: f64,
    #[arg(long, value_enum, default_value_t = OracleArg::Spectral)]
    oracle: OracleArg,
    /// Corrupted fraction for the cheating oracle.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Skip trimming of high-degree vertices in the spectral oracle.
    #[arg(long)]
    no_trim: bool,
    /// Improvement rounds; more than one goes beyond the analysed procedure.
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Apply a balanced subset of flips when the sides disagree in count.
    #[arg(long)]
    balanced_subset: bool,
}

impl SettingsArgs {
    fn settings(&self) -> TrialSettings {
        let oracle = match self.oracle {
            OracleArg::Spectral => OracleChoice::Spectral { trim: !self.no_trim },
            OracleArg::Cheating => OracleChoice::Cheating { delta: self.delta },
        };
        TrialSettings {
            split_c: self.split_c,
            oracle,
            improve: ImproveOptions {
                balanced_subset: self.balanced_subset,
                rounds: self.rounds,
            },
            ..TrialSettings::default()
        }
    }
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    graph: PathBuf,
    /// True labeling; needed by `certificate` and the cheating oracle.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Args)]
struct TailArgs {
    /// Rate-exponent mode: g, tau_star and, with --m and --n, log T*.
    #[arg(long)]
    exponent: bool,
    /// Exact rho(n) for the given --n, --alpha, --beta.
    #[arg(long)]
    rho: bool,
    /// Union bound on the ML failure probability at --n, --alpha, --beta.
    #[arg(long)]
    ml_bound: bool,
    #[arg(long)]
    mz: Option<u64>,
    #[arg(long)]
    mw: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<i64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Certificate)]
    method: MethodArg,
    #[arg(long, default_value_t = 300)]
    n: usize,
    /// START:END:STEP
    #[arg(long, default_value = "2:40:2")]
    alpha: String,
    /// START:END:STEP
    #[arg(long, default_value = "0:10:1")]
    beta: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    settings: SettingsArgs,
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParams(format!("missing --{flag}")))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string(v).expect("json value serializes"));
}

fn read(path: &PathBuf) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn gen(a: &GenArgs) -> Result<()> {
    let params = SbmParams::new(a.n, a.alpha, a.beta)?;
    let (g, truth) = generate_sbm(&params, a.seed)?;
    fs::write(&a.graph_out, write_graph(&g))?;
    fs::write(&a.labels_out, truth.to_text())?;
    print_json(&json!({ "n": g.n(), "edges": g.edge_count(), "seed": a.seed }));
    Ok(())
}

fn recover(a: &RecoverArgs) -> Result<()> {
    let g = parse_graph(&read(&a.graph)?)?;
    let truth = a
        .labels
        .as_ref()
        .map(|p| Labeling::parse(&read(p)?))
        .transpose()?;
    let record = run_on_graph(a.method.into(), &g, truth.as_ref(), a.seed, &a.settings.settings())?;
    print_json(&serde_json::to_value(record).expect("record serializes"));
    Ok(())
}

fn tail(a: &TailArgs) -> Result<()> {
    let point = || -> Result<SbmParams> {
        let n = need(a.n, "n")?;
        SbmParams::new(n as usize, need(a.alpha, "alpha")?, need(a.beta, "beta")?)
    };
    let out = if a.exponent {
        let (alpha, beta, eps) = (need(a.alpha, "alpha")?, need(a.beta, "beta")?, need(a.eps, "eps")?);
        let mut v = json!({
            "alpha": alpha,
            "beta": beta,
            "eps": eps,
            "g": g_exponent(alpha, beta, eps)?,
            "tau_star": tau_star(alpha, beta, eps)?,
        });
        if let (Some(m), Some(n)) = (a.m, a.n) {
            v["m"] = json!(m);
            v["n"] = json!(n);
            v["log_t_star"] = json!(log_t_star(m, n, alpha, beta, eps)?);
        }
        v
    } else if a.rho {
        let params = point()?;
        json!({ "n": params.n, "alpha": params.alpha, "beta": params.beta, "rho": rho_exact(&params)? })
    } else if a.ml_bound {
        let params = point()?;
        json!({
            "n": params.n,
            "alpha": params.alpha,
            "beta": params.beta,
            "bound": ml_failure_upper_bound(&params)?,
            "log_bound": ml_failure_log_upper_bound(&params)?,
        })
    } else {
        let r = diff_binomial_tail(
            need(a.mz, "mz")?,
            need(a.mw, "mw")?,
            need(a.p, "p")?,
            need(a.q, "q")?,
            need(a.s, "s")?,
        )?;
        serde_json::to_value(r).expect("tail serializes")
    };
    print_json(&out);
    Ok(())
}

fn phase(a: &PhaseArgs) -> Result<()> {
    let method: Method = a.method.into();
    if method != Method::Certificate {
        eprintln!("warning: solver-based phase diagrams run every trial end to end and can be slow");
    }
    let alphas = parse_grid(&a.alpha)?;
    let betas = parse_grid(&a.beta)?;
    let points = phase_diagram(method, a.n, &alphas, &betas, a.trials, a.seed, &a.settings.settings())?;
    fs::write(&a.out, phase_csv(&points)?)?;
    print_json(&json!({ "points": points.len(), "out": a.out }));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(&a),
        Command::Recover(a) => recover(&a),
        Command::Tail(a) => tail(&a),
        Command::Threshold { alpha, beta } => {
            print_json(&serde_json::to_value(threshold_f(alpha, beta)?).expect("verdict serializes"));
            Ok(())
        }
        Command::Events {
            n,
            alpha,
            beta,
            trials,
            seed,
        } => {
            let rates = estimate_event_probabilities(&SbmParams::new(n, alpha, beta)?, trials, seed)?;
            print_json(&serde_json::to_value(rates).expect("rates serialize"));
            Ok(())
        }
        Command::Phase(a) => phase(&a),
        Command::Curves { beta, out } => {
            let points = boundary_curves(&parse_grid(&beta)?);
            fs::write(&out, curves_csv(&points)?)?;
            print_json(&json!({ "points": points.len(), "out": out }));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
