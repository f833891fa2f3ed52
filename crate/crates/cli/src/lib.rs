//! Command-line front end. [`cli_main`] returns the process exit code:
//! 0 on success, 1 when a verification or experiment fails, 2 on usage errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genlab::composition::{advanced_bound, basic_params};
use genlab::compression::{rectangle_scheme, run_compression_learner, threshold_scheme, CompressionScheme};
use genlab::harness::registry::{
    self, parse_adversary, parse_distribution, parse_examples, parse_mechanism, parse_simulator, tiny_class,
};
use genlab::harness::{
    adaptive_compression_experiment, canonical_json, generic_learner_experiment, overfit_experiment,
    threshold_experiment, tightness_experiment, ExperimentReport,
};
use genlab::mechanisms::exp_learner_pmf;
use genlab::verification::{min_eps_profile, verify_dp_exact, verify_pg_profile, verify_rg_mc, EnumOptions, SampleProfile};
use genlab::{
    empirical_error, true_error, Error, Example, Hypothesis, HypothesisClass, Outcome, PopulationDistribution,
    RandomSeed,
};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "genlab", version, about = "Exact and Monte Carlo checks of privacy and generalization guarantees")]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Also write the JSON output to this file.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,
    /// Write experiment metrics as CSV to this file.
    #[arg(long, global = true)]
    csv_out: Option<PathBuf>,
    /// Enumeration cap in pair evaluations.
    #[arg(long, global = true, env = "GENLAB_CAP")]
    cap: Option<u64>,
    /// Suppress standard output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Include wall-clock runtime in experiment reports (breaks byte stability).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact differential-privacy check over every neighbouring pair.
    VerifyDp {
        #[arg(long)]
        mech: String,
        /// Comma-separated values, `x` or `x:label`.
        #[arg(long)]
        domain: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        /// Target delta; the check fails above it.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Enumerate raw tuples even if the mechanism declares a statistic.
        #[arg(long)]
        ungrouped: bool,
    },
    /// Exact perfect-generalization check against a simulator.
    VerifyPg {
        #[arg(long)]
        mech: String,
        #[arg(long)]
        sim: String,
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Target failure probability; the check fails above it.
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        /// Also report the smallest eps reaching `beta`.
        #[arg(long)]
        min_eps: bool,
        #[arg(long)]
        ungrouped: bool,
    },
    /// Monte Carlo robust-generalization check against an adversary.
    VerifyRg {
        #[arg(long)]
        mech: String,
        #[arg(long)]
        adversary: String,
        #[arg(long, default_value = "uniform-bits")]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Allowed failure probability, checked with three Wilson half-widths of slack.
        #[arg(long, default_value_t = 0.05)]
        bound: f64,
    },
    /// Composition parameter calculators.
    Compose {
        #[arg(long, value_enum)]
        mode: ComposeMode,
        /// basic: `[[beta, eps], ...]`; advanced: `{"k":..,"eps":..,"delta":..,"delta_prime":..}`.
        #[arg(long)]
        params_json: String,
    },
    /// Runs a learner once on a fresh sample.
    Learn {
        #[arg(long, value_enum)]
        learner: Learner,
        #[arg(long)]
        dist: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
    },
    /// Seeded experiments producing a JSON report.
    Experiment(ExperimentArgs),
    /// Lists registered mechanisms, simulators, distributions, adversaries and maps.
    ListMechanisms,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ComposeMode {
    Basic,
    Advanced,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Learner {
    Threshold,
    Rectangle,
    Exp,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(subcommand)]
    which: Experiment,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    Threshold {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    Adaptive {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Two hypotheses with population errors 0.2 and 0.55.
    Generic {
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
    },
    Tightness {
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 0.05)]
        beta: f64,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        ns: Vec<usize>,
    },
    Overfit {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        queries: usize,
    },
}

/// The instance used by `experiment generic`.
pub fn separated_instance() -> genlab::Result<(HypothesisClass, PopulationDistribution)> {
    let class = HypothesisClass::new(vec![Hypothesis::Threshold(0.0), Hypothesis::Constant(0)], None)?;
    let d = PopulationDistribution::new(
        vec![Example::labelled(0.0, 1), Example::labelled(1.0, 0), Example::labelled(0.0, 0), Example::labelled(1.0, 1)],
        vec![0.45, 0.35, 0.1, 0.1],
    )?;
    Ok((class, d))
}

struct Output {
    value: Value,
    pass: bool,
    report: Option<ExperimentReport>,
    text: Option<String>,
}

impl Output {
    fn json(command: &str, config: Value, result: Value, pass: bool) -> Self {
        Self {
            value: json!({ "command": command, "config": config, "result": result, "pass": pass }),
            pass,
            report: None,
            text: None,
        }
    }
}

fn options(cap: Option<u64>, ungrouped: bool) -> EnumOptions {
    let opts = match cap {
        Some(c) => EnumOptions::with_cap(c),
        None => EnumOptions::default(),
    };
    if ungrouped {
        opts.ungrouped()
    } else {
        opts
    }
}

fn run(cli: &Cli) -> genlab::Result<Output> {
    let seed = RandomSeed(cli.seed);
    match &cli.command {
        Command::VerifyDp {
            mech,
            domain,
            n,
            eps,
            delta,
            ungrouped,
        } => {
            let m = parse_mechanism(mech)?;
            let dom = parse_examples(domain, ',')?;
            let v = verify_dp_exact(m.as_ref(), &dom, *n, *eps, options(cli.cap, *ungrouped))?;
            let config = json!({ "mech": mech, "domain": dom.iter().map(|e| e.to_value_json()).collect::<Vec<_>>(),
                "n": n, "eps": eps, "delta": delta });
            Ok(Output::json("verify-dp", config, serde_json::to_value(&v)?, v.certifies(*delta)))
        }
        Command::VerifyPg {
            mech,
            sim,
            dist,
            n,
            eps,
            delta,
            beta,
            min_eps,
            ungrouped,
        } => {
            let m = parse_mechanism(mech)?;
            let d = parse_distribution(dist)?;
            let opts = options(cli.cap, *ungrouped);
            let s = parse_simulator(sim, &m, &d, *n, opts)?;
            let profile = SampleProfile::build(m.as_ref(), &d, *n, opts)?;
            let law = s.exact_pmf(&d, *n)?;
            let v = verify_pg_profile(&profile, &law, *eps, *delta)?;
            let mut result = serde_json::to_value(&v)?;
            if *min_eps {
                result["min_eps"] = json!(min_eps_profile(&profile, &law, *beta, *delta)?);
            }
            let config = json!({ "mech": mech, "sim": sim, "dist": dist, "n": n, "eps": eps, "delta": delta, "beta": beta });
            Ok(Output::json("verify-pg", config, result, v.certifies(*beta)))
        }
        Command::VerifyRg {
            mech,
            adversary,
            dist,
            n,
            alpha,
            trials,
            bound,
        } => {
            let m = parse_mechanism(mech)?;
            let a = parse_adversary(adversary)?;
            let d = parse_distribution(dist)?;
            let v = verify_rg_mc(m.as_ref(), &a, &d, *n, *alpha, *trials, seed)?;
            let mut result = serde_json::to_value(&v)?;
            result["half_width"] = json!(v.half_width());
            let config = json!({ "mech": mech, "adversary": adversary, "dist": dist, "n": n, "alpha": alpha,
                "trials": trials, "bound": bound, "seed": cli.seed });
            Ok(Output::json("verify-rg", config, result, v.within(*bound)))
        }
        Command::Compose { mode, params_json } => {
            let raw: Value = serde_json::from_str(params_json)?;
            let p = match mode {
                ComposeMode::Basic => {
                    let pairs: Vec<(f64, f64)> = serde_json::from_value(raw.clone())?;
                    basic_params(&pairs)?
                }
                ComposeMode::Advanced => {
                    let get = |k: &str| raw.get(k).and_then(Value::as_f64);
                    let missing = |k: &str| Error::InvalidParameter(format!("advanced parameters need `{k}`"));
                    advanced_bound(
                        get("k").ok_or_else(|| missing("k"))? as usize,
                        get("eps").ok_or_else(|| missing("eps"))?,
                        get("delta").unwrap_or(0.0),
                        get("delta_prime").ok_or_else(|| missing("delta_prime"))?,
                    )?
                }
            };
            let mode = match mode {
                ComposeMode::Basic => "basic",
                ComposeMode::Advanced => "advanced",
            };
            Ok(Output::json("compose", json!({ "mode": mode, "params": raw }), serde_json::to_value(p)?, true))
        }
        Command::Learn {
            learner,
            dist,
            n,
            eps,
            beta,
        } => {
            let d = parse_distribution(dist)?;
            let mut rng = seed.stream("learn", 0);
            let s = d.draw_sample(*n, &mut rng)?;
            let (h, selected) = match learner {
                Learner::Threshold | Learner::Rectangle => {
                    let scheme: Box<dyn CompressionScheme> = match learner {
                        Learner::Threshold => Box::new(threshold_scheme()),
                        _ => Box::new(rectangle_scheme(1)?),
                    };
                    let (h, sel) = run_compression_learner(scheme.as_ref(), &s, &mut rng)?;
                    (h, Some(sel.examples.iter().map(|e| e.to_value_json()).collect::<Vec<_>>()))
                }
                Learner::Exp => {
                    let class = tiny_class();
                    let o = exp_learner_pmf(&s, &class, *eps, *beta)?.sample(&mut rng);
                    let i = match o {
                        Outcome::Int(i) => i as usize,
                        other => return Err(Error::InvalidParameter(format!("unexpected output {other}"))),
                    };
                    (class.hypotheses()[i].clone(), None)
                }
            };
            let result = json!({
                "hypothesis": h.label(),
                "empirical_error": empirical_error(&h, &s),
                "true_error": true_error(&h, &d),
                "selection": selected,
                "sample_size": s.n(),
            });
            let config = json!({ "dist": dist, "n": n, "eps": eps, "beta": beta, "seed": cli.seed });
            Ok(Output::json("learn", config, result, true))
        }
        Command::Experiment(args) => {
            let report = match &args.which {
                Experiment::Threshold { n, delta, trials } => threshold_experiment(*n, *delta, *trials, seed)?,
                Experiment::Adaptive { n, m, delta, trials } => {
                    adaptive_compression_experiment(*n, *m, *delta, *trials, seed)?
                }
                Experiment::Generic {
                    eps,
                    alpha,
                    gamma,
                    trials,
                } => {
                    let (class, d) = separated_instance()?;
                    generic_learner_experiment(&class, &d, *eps, *alpha, *gamma, *trials, seed)?
                }
                Experiment::Tightness { eps, beta, ns } => tightness_experiment(*eps, *beta, ns, seed)?,
                Experiment::Overfit { n, queries } => overfit_experiment(*n, *queries, seed)?,
            };
            let mut result = serde_json::to_value(&report)?;
            if cli.timing {
                result["runtime_ms"] = json!(report.runtime_ms);
            }
            let config = json!({ "experiment": report.name, "seed": cli.seed });
            let mut out = Output::json("experiment", config, result, report.pass);
            out.report = Some(report);
            Ok(out)
        }
        Command::ListMechanisms => {
            let result = json!({
                "mechanisms": registry::MECHANISMS,
                "simulators": registry::SIMULATORS,
                "distributions": registry::DISTRIBUTIONS,
                "adversaries": registry::ADVERSARIES,
                "maps": registry::MAPS,
            });
            let mut out = Output::json("list-mechanisms", json!({}), result, true);
            out.text = Some(registry::MECHANISMS.join("\n") + "\n");
            Ok(out)
        }
    }
}

fn write_outputs(cli: &Cli, out: &Output) -> std::io::Result<()> {
    let text = canonical_json(&out.value);
    if let Some(path) = &cli.json_out {
        std::fs::write(path, &text)?;
    }
    if let (Some(path), Some(report)) = (&cli.csv_out, &out.report) {
        std::fs::write(path, report.metrics_csv())?;
    }
    if !cli.quiet {
        print!("{}", out.text.as_deref().unwrap_or(&text));
    }
    Ok(())
}

/// Parses `argv` (program name first) and runs the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = write_outputs(&cli, &out) {
                eprintln!("genlab: cannot write output: {e}");
                return EXIT_USAGE;
            }
            if out.pass {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("genlab: {e}");
            EXIT_USAGE
        }
    }
}
