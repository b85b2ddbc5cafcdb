use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use locklab_core::asymptotics::{decompose, predict_gamma, predict_gamma_custom};
use locklab_core::dynamics::{integrate, threshold_bisect};
use locklab_core::harness::{
    column_pairs, emit_fit, emit_rows, fit_power_law, parse_geometric_ladder, parse_rule, read_rows, render_rows,
    sweep, Format, SweepOptions,
};
use locklab_core::locking::{locking_threshold_exact, make_frequencies};
use locklab_core::specfun::qrs_constants;
use locklab_core::{Error, FrequencyRule64, FrequencySpec64, MeshMode, SeedPhases, SimConfig64};

#[derive(Parser)]
#[command(
    name = "locklab",
    version,
    about = "Finite-N locking threshold of the Kuramoto model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print C₁, C₂, ζ(-1/2, C₁/2) and the N^{-3/2} prefactor.
    Constants(OutputArgs),
    /// Print the natural frequencies of a rule.
    Freqs {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve the exact threshold equation.
    Threshold {
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Asymptotic threshold with its term breakdown.
    Predict {
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Bulk and fringe pieces of the Riemann-sum expansion.
    Decompose {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::Asymptotic)]
        mode: Mode,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Integrate the oscillators at one γ and classify the run.
    Simulate {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Locate the threshold by bisection on simulated runs.
    Bisect {
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Exact, predicted and optionally simulated thresholds over a ladder of N.
    Sweep(SweepArgs),
    /// Power-law fit of one column of a sweep file.
    Fit(FitArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Emit JSON instead of aligned text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleName {
    Midpoint,
    Endpoint,
    SigmaBeta,
    ZetaCorrected,
}

impl RuleName {
    fn label(self) -> &'static str {
        match self {
            RuleName::Midpoint => "midpoint",
            RuleName::Endpoint => "endpoint",
            RuleName::SigmaBeta => "sigma-beta",
            RuleName::ZetaCorrected => "zeta-corrected",
        }
    }
}

#[derive(Args)]
struct RuleArgs {
    #[arg(long, value_enum)]
    rule: RuleName,
    #[arg(long)]
    n: usize,
    /// Exponent σ of the sigma-beta rule.
    #[arg(long)]
    sigma: Option<f64>,
    /// Coefficient β of the sigma-beta rule.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Seed {
    Exact,
    Zero,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Length of each lock-identification window.
    #[arg(long, default_value_t = 1e3)]
    id_time: f64,
    #[arg(long, default_value_t = 8e4)]
    max_transient: f64,
    /// Largest effective-frequency spread accepted as locked.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    bisect_tol: f64,
    #[arg(long, value_enum, default_value_t = Seed::Exact)]
    seed: Seed,
}

impl SimArgs {
    fn config(&self) -> SimConfig64 {
        SimConfig64 {
            dt: self.dt,
            identification_time: self.id_time,
            max_transient: self.max_transient,
            lock_tolerance: self.tol,
            gamma_bisect_tol: self.bisect_tol,
            seed_phases: match self.seed {
                Seed::Exact => SeedPhases::FromExactSolution,
                Seed::Zero => SeedPhases::Zero,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// Rule to include; repeat for several.
    #[arg(long, value_enum, required = true)]
    rule: Vec<RuleName>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Geometric ladder `min:max:factor`.
    #[arg(long, default_value = "16:16384:2", conflicts_with = "n")]
    n_geom: String,
    /// Explicit list of N, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Also bisect on simulated runs.
    #[arg(long)]
    simulate: bool,
    #[arg(long, default_value_t = 256)]
    max_sim_n: usize,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct FitArgs {
    /// Sweep file (CSV, or JSON by extension).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "residual")]
    column: String,
    /// Only rows with this rule label.
    #[arg(long)]
    rule: Option<String>,
    /// Value subtracted before fitting; a number or `pi/4`.
    #[arg(long)]
    subtract_limit: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn rule_of(args: &RuleArgs) -> Result<FrequencyRule64, Error> {
    rule_from(args.rule, args.sigma, args.beta)
}

fn rule_from(name: RuleName, sigma: Option<f64>, beta: Option<f64>) -> Result<FrequencyRule64, Error> {
    let sb = match (name, sigma, beta) {
        (RuleName::SigmaBeta, Some(s), Some(b)) => Some((s, b)),
        (RuleName::SigmaBeta, _, _) => return Err(Error::Domain("sigma-beta needs --sigma and --beta".into())),
        _ => None,
    };
    parse_rule(name.label(), sb)
}

/// Rounds every float in `v` to `digits` significant digits.
fn round_sig(v: Value, digits: usize) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{:.*e}", digits - 1, x).parse().unwrap_or(x);
            json!(r)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(|x| round_sig(x, digits)).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, x)| (k, round_sig(x, digits))).collect()),
        other => other,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(o) => {
            for (k, x) in o {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn print(value: Value, as_json: bool, digits: usize) {
    let value = round_sig(value, digits);
    if as_json {
        println!("{}", serde_json::to_string_pretty(&value).unwrap_or_default());
        return;
    }
    let mut lines = Vec::new();
    flatten("", &value, &mut lines);
    let width = lines.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    for (k, v) in lines {
        println!("{k:<width$}  {v}");
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Constants(out) => {
            let k = qrs_constants();
            print(
                json!({
                    "c1": k.c1,
                    "c2": k.c2,
                    "zeta_neg_half": k.zeta_neg_half_at_c1,
                    "prefactor": k.prefactor(),
                }),
                out.json,
                12,
            );
        }
        Command::Freqs { rule, gamma, out } => {
            let spec = FrequencySpec64::new(rule_of(&rule)?, rule.n, gamma)?;
            let omegas = make_frequencies(&spec)?;
            if out.json {
                print(
                    json!({ "rule": rule.rule.label(), "n": rule.n, "gamma": gamma, "omegas": omegas }),
                    true,
                    17,
                );
            } else {
                for w in omegas {
                    println!("{}", round_sig(json!(w), 17));
                }
            }
        }
        Command::Threshold { rule, out } => {
            let spec = FrequencySpec64::new(rule_of(&rule)?, rule.n, 1.0)?;
            let sol = locking_threshold_exact(&spec)?;
            let mut v = to_value(&sol);
            if let Value::Object(o) = &mut v {
                let mut head = Map::new();
                head.insert("rule".into(), json!(rule.rule.label()));
                head.insert("n".into(), json!(rule.n));
                head.extend(std::mem::take(o));
                *o = head;
            }
            print(v, out.json, 15);
        }
        Command::Predict { rule, out } => {
            let r = rule_of(&rule)?;
            let v = match r {
                FrequencyRule64::SigmaBeta { sigma, beta } => {
                    let g = predict_gamma_custom(sigma, beta, rule.n)?;
                    json!({
                        "rule": "sigma-beta", "sigma": sigma, "beta": beta, "n": rule.n,
                        "gamma_l": g, "term_pi4": FRAC_PI_4, "term_n_sigma": g - FRAC_PI_4,
                    })
                }
                _ => {
                    let p = predict_gamma(r, rule.n)?;
                    json!({
                        "rule": rule.rule.label(), "n": p.n, "gamma_l": p.gamma_l, "term_pi4": p.term_pi4,
                        "term_inv_n": p.term_inv_n, "term_n32": p.term_n32, "error_order": p.error_order,
                    })
                }
            };
            print(v, out.json, 15);
        }
        Command::Decompose { n, mode, out } => {
            let mode = match mode {
                Mode::Exact => MeshMode::Exact,
                Mode::Asymptotic => MeshMode::Asymptotic,
            };
            print(to_value(&decompose::<f64>(n, mode)?), out.json, 15);
        }
        Command::Simulate { rule, gamma, sim } => {
            let spec = FrequencySpec64::new(rule_of(&rule)?, rule.n, gamma)?;
            let outcome = integrate(&spec, &sim.config())?;
            print(to_value(&outcome), true, 15);
        }
        Command::Bisect { rule, sim } => {
            let res = threshold_bisect(rule_of(&rule)?, rule.n, &sim.config())?;
            print(to_value(&res), true, 15);
        }
        Command::Sweep(args) => {
            let rules = args
                .rule
                .iter()
                .map(|&r| rule_from(r, args.sigma, args.beta))
                .collect::<Result<Vec<_>, _>>()?;
            let ns = if args.n.is_empty() {
                parse_geometric_ladder(&args.n_geom)?
            } else {
                args.n.clone()
            };
            let opts = SweepOptions {
                simulate: args.simulate,
                max_sim_n: args.max_sim_n,
                sim: args.sim.config(),
            };
            let rows = sweep(&rules, &ns, &opts)?;
            for r in rows.iter().filter(|r| r.error.is_some()) {
                log::error!("n = {} ({}): {}", r.n, r.rule, r.error.as_deref().unwrap_or(""));
            }
            let format = match args.format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            match &args.out {
                Some(p) => emit_rows(&rows, format, p)?,
                None => print!("{}", render_rows(&rows, format)?),
            }
            if rows.iter().any(|r| r.error.is_some()) {
                return Err(Error::Domain("some sweep rows failed".into()));
            }
        }
        Command::Fit(args) => {
            let subtract = match args.subtract_limit.as_deref() {
                None => 0.0,
                Some("pi/4") => FRAC_PI_4,
                Some(s) => s
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad --subtract-limit value {s:?}")))?,
            };
            let rows = read_rows(&args.input)?;
            let pairs = column_pairs(&rows, &args.column, args.rule.as_deref(), subtract)?;
            let fit = fit_power_law(&pairs)?;
            match &args.out {
                Some(p) => emit_fit(&fit, p)?,
                None => println!("{}", serde_json::to_string_pretty(&fit).unwrap_or_default()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
