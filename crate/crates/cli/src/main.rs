//! `bayescreen` command line.
//!
//! Exit status: 0 on success, 2 for usage and out-of-range input, 1 for
//! domain errors such as an uninformative test.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bayescreen::commands::{
    render_text, AuditRequest, BaxterRequest, BaxterUnknownRequest, BetaRequest, CategoryRequest, Command,
    CurveRequest, FindingInput, KappaValue, LrRequest, McgeeRequest, NomogramRequest, PosttestRequest,
    PowerClassRequest, PpvRequest, PretestRequest, Report, RoganGladenRequest, SimulateRequest, TablesRequest,
    ThresholdRequest,
};
use bayescreen::heuristics::ConstantChoice;
use bayescreen::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bayescreen", version, about = "Screening-test probabilities, prevalence estimates and logit heuristics")]
struct Cli {
    /// Print the JSON output envelope instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Decimal places for probabilities in text output.
    #[arg(long, global = true, env = "BAYESCREEN_PRECISION", default_value_t = 4,
          value_parser = clap::value_parser!(u8).range(0..=17))]
    precision: u8,

    /// Write the curve, density or replicate table to this CSV file.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// Sensitivity a.
    #[arg(long = "sens", visible_alias = "sensitivity")]
    sens: f64,
    /// Specificity b.
    #[arg(long = "spec", visible_alias = "specificity")]
    spec: f64,
}

#[derive(Debug, Args)]
struct CohortArgs {
    /// Positive results in the cohort.
    #[arg(long)]
    t: u64,
    /// Cohort size.
    #[arg(long)]
    n: u64,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Positive and negative predictive values at a pretest probability.
    Ppv {
        #[command(flatten)]
        test: TestArgs,
        #[arg(long, visible_alias = "prevalence")]
        pretest: f64,
    },
    /// Prevalence threshold of a test.
    Threshold {
        #[command(flatten)]
        test: TestArgs,
    },
    /// Positive likelihood ratio and its power class.
    Lr {
        #[command(flatten)]
        test: TestArgs,
    },
    /// Exact posttest probability after one or more likelihood ratios.
    Posttest {
        #[arg(long)]
        pretest: f64,
        /// Likelihood ratio; repeat to chain tests. Accepts "infinite".
        #[arg(long = "lr", required = true)]
        lr: Vec<KappaValue>,
        #[arg(long, default_value = "default")]
        constant: ConstantChoice,
    },
    /// PPV curve over pretest probability.
    Curve {
        #[command(flatten)]
        test: TestArgs,
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Fagan nomogram coordinates.
    Nomogram {
        #[arg(long)]
        pretest: f64,
        #[arg(long = "lr")]
        lr: KappaValue,
        #[arg(long, default_value = "default")]
        constant: ConstantChoice,
    },
    /// Prevalence estimators.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Pretest probability range from the likelihood ratios of present findings.
    Pretest {
        /// Likelihood ratio of a finding; repeatable.
        #[arg(long = "lr")]
        lr: Vec<f64>,
        /// Labelled finding as LABEL=KAPPA; repeatable.
        #[arg(long = "finding", value_parser = parse_finding)]
        finding: Vec<FindingInput>,
        /// Baseline prevalence added to the lower bound.
        #[arg(long)]
        baseline: Option<f64>,
        #[arg(long, default_value = "default")]
        constant: ConstantChoice,
        /// Compare against this test's prevalence threshold (needs --spec).
        #[arg(long = "sens", requires = "spec")]
        sens: Option<f64>,
        #[arg(long = "spec", requires = "sens")]
        spec: Option<f64>,
    },
    /// McGee's linear approximation and the likelihood ratio it needs.
    Mcgee {
        #[arg(long)]
        pretest: f64,
        #[arg(long = "lr", required_unless_present = "target")]
        lr: Option<f64>,
        /// Target posttest probability.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value = "default")]
        constant: ConstantChoice,
    },
    /// Medow-Lucey category of a probability.
    Category {
        #[arg(long, visible_alias = "pretest")]
        probability: f64,
        /// Apply a positive test result.
        #[arg(long, conflicts_with = "negative")]
        positive: bool,
        /// Apply a negative test result.
        #[arg(long)]
        negative: bool,
    },
    /// Van den Ende clinical power class of a likelihood ratio.
    PowerClass {
        #[arg(long = "lr")]
        lr: f64,
    },
    /// Largest gap between McGee's rule and the exact update over a grid.
    Audit {
        #[arg(long, default_value_t = 0.1)]
        pretest_lo: f64,
        #[arg(long, default_value_t = 0.9)]
        pretest_hi: f64,
        #[arg(long, default_value_t = 1.0)]
        lr_lo: f64,
        #[arg(long, default_value_t = 10.0)]
        lr_hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value = "default")]
        constant: ConstantChoice,
    },
    /// Simulate screening cohorts and Rogan-Gladen interval coverage.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long, visible_alias = "pretest")]
        prevalence: f64,
        #[command(flatten)]
        test: TestArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Regenerate the heuristic tables (posttest 1 / 0.5 and pretest range).
    Tables,
}

#[derive(Debug, Subcommand)]
enum EstimateCmd {
    /// Rogan-Gladen corrected prevalence with a Wald interval.
    RoganGladen {
        #[command(flatten)]
        cohort: CohortArgs,
        #[command(flatten)]
        test: TestArgs,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Conjugate beta posterior for a perfect test.
    Beta {
        #[command(flatten)]
        cohort: CohortArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Grid posterior with known sensitivity and specificity.
    Baxter {
        #[command(flatten)]
        cohort: CohortArgs,
        #[command(flatten)]
        test: TestArgs,
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Grid posterior with sensitivity and specificity learned from validation counts.
    BaxterUnknown {
        #[command(flatten)]
        cohort: CohortArgs,
        /// True positives among known positives.
        #[arg(long = "ta", visible_alias = "t-a")]
        t_a: u64,
        /// Known positives.
        #[arg(long = "na", visible_alias = "n-a")]
        n_a: u64,
        /// False positives among known negatives.
        #[arg(long = "tb", visible_alias = "t-b")]
        t_b: u64,
        /// Known negatives.
        #[arg(long = "nb", visible_alias = "n-b")]
        n_b: u64,
        #[arg(long, default_value_t = 1.0)]
        alpha_a: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_a: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha_b: f64,
        #[arg(long, default_value_t = 1.0)]
        beta_b: f64,
        #[arg(long, default_value_t = 2048)]
        grid_phi: usize,
        #[arg(long, default_value_t = 128)]
        grid_a: usize,
        #[arg(long, default_value_t = 128)]
        grid_b: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
}

fn parse_finding(s: &str) -> Result<FindingInput, String> {
    let (label, kappa) = s.rsplit_once('=').ok_or_else(|| format!("expected LABEL=KAPPA, got {s:?}"))?;
    let kappa = kappa.trim().parse::<f64>().map_err(|e| format!("{kappa:?}: {e}"))?;
    Ok(FindingInput {
        label: label.trim().to_string(),
        kappa,
    })
}

/// Engine field name to the flag that sets it.
fn flag_for(field: &str) -> &str {
    match field {
        "sensitivity" => "--sens",
        "specificity" => "--spec",
        "pretest" => "--pretest",
        "prevalence" => "--prevalence",
        "probability" => "--probability",
        "kappa" => "--lr",
        "target" => "--target",
        "baseline" => "--baseline",
        "level" => "--level",
        "grid" | "grid_size" => "--grid",
        "grid_phi" => "--grid-phi",
        "grid_a" => "--grid-a",
        "grid_b" => "--grid-b",
        "t" => "--t",
        "n" => "--n",
        "t_a" => "--ta",
        "n_a" => "--na",
        "t_b" => "--tb",
        "n_b" => "--nb",
        "step" => "--step",
        "replicates" => "--replicates",
        "constant" => "--constant",
        other => other,
    }
}

fn dispatch(cmd: Cmd) -> Result<Report, Error> {
    match cmd {
        Cmd::Ppv { test, pretest } => PpvRequest {
            sensitivity: test.sens,
            specificity: test.spec,
            pretest,
        }
        .run(),
        Cmd::Threshold { test } => ThresholdRequest {
            sensitivity: test.sens,
            specificity: test.spec,
        }
        .run(),
        Cmd::Lr { test } => LrRequest {
            sensitivity: test.sens,
            specificity: test.spec,
        }
        .run(),
        Cmd::Posttest { pretest, lr, constant } => PosttestRequest {
            pretest,
            kappa: lr,
            constant,
        }
        .run(),
        Cmd::Curve { test, grid } => CurveRequest {
            sensitivity: test.sens,
            specificity: test.spec,
            grid,
        }
        .run(),
        Cmd::Nomogram { pretest, lr, constant } => NomogramRequest {
            pretest,
            kappa: lr,
            constant,
        }
        .run(),
        Cmd::Estimate(e) => estimate(e),
        Cmd::Pretest {
            lr,
            finding,
            baseline,
            constant,
            sens,
            spec,
        } => {
            let mut findings = finding;
            findings.extend(lr.into_iter().enumerate().map(|(i, kappa)| FindingInput {
                label: format!("lr{}", i + 1),
                kappa,
            }));
            PretestRequest {
                findings,
                baseline,
                constant,
                sensitivity: sens,
                specificity: spec,
            }
            .run()
        }
        Cmd::Mcgee {
            pretest,
            lr,
            target,
            constant,
        } => McgeeRequest {
            pretest,
            kappa: lr,
            target,
            constant,
        }
        .run(),
        Cmd::Category {
            probability,
            positive,
            negative,
        } => CategoryRequest {
            probability,
            positive: match (positive, negative) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
        }
        .run(),
        Cmd::PowerClass { lr } => PowerClassRequest { kappa: lr }.run(),
        Cmd::Audit {
            pretest_lo,
            pretest_hi,
            lr_lo,
            lr_hi,
            step,
            constant,
        } => AuditRequest {
            pretest_lo,
            pretest_hi,
            kappa_lo: lr_lo,
            kappa_hi: lr_hi,
            step,
            constant,
        }
        .run(),
        Cmd::Simulate {
            n,
            prevalence,
            test,
            seed,
            replicates,
            level,
        } => SimulateRequest {
            n,
            prevalence,
            sensitivity: test.sens,
            specificity: test.spec,
            seed,
            replicates,
            level,
        }
        .run(),
        Cmd::Tables => TablesRequest {}.run(),
    }
}

fn estimate(cmd: EstimateCmd) -> Result<Report, Error> {
    match cmd {
        EstimateCmd::RoganGladen { cohort, test, level } => RoganGladenRequest {
            t: cohort.t,
            n: cohort.n,
            sensitivity: test.sens,
            specificity: test.spec,
            level,
        }
        .run(),
        EstimateCmd::Beta {
            cohort,
            alpha,
            beta,
            grid,
            level,
        } => BetaRequest {
            t: cohort.t,
            n: cohort.n,
            alpha,
            beta,
            grid,
            level,
        }
        .run(),
        EstimateCmd::Baxter {
            cohort,
            test,
            grid,
            level,
        } => BaxterRequest {
            t: cohort.t,
            n: cohort.n,
            sensitivity: test.sens,
            specificity: test.spec,
            grid,
            level,
        }
        .run(),
        EstimateCmd::BaxterUnknown {
            cohort,
            t_a,
            n_a,
            t_b,
            n_b,
            alpha_a,
            beta_a,
            alpha_b,
            beta_b,
            grid_phi,
            grid_a,
            grid_b,
            level,
        } => BaxterUnknownRequest {
            t: cohort.t,
            n: cohort.n,
            t_a,
            n_a,
            t_b,
            n_b,
            alpha_a,
            beta_a,
            alpha_b,
            beta_b,
            grid_phi,
            grid_a,
            grid_b,
            level,
        }
        .run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match dispatch(cli.command) {
        Ok(r) => r,
        Err(e) => {
            match e.field() {
                Some(field) if e.is_input_error() => eprintln!("error: {e} [flag {}]", flag_for(field)),
                _ => eprintln!("error: {e}"),
            }
            return ExitCode::from(if e.is_input_error() { 2 } else { 1 });
        }
    };
    if let Some(path) = &cli.csv {
        let Some(csv) = &report.csv else {
            eprintln!("error: --csv is not available for {}", report.envelope.command);
            return ExitCode::from(2);
        };
        if let Err(e) = std::fs::write(path, csv) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    let body = if cli.json {
        report.envelope.to_canonical_json() + "\n"
    } else {
        render_text(&report, cli.precision as usize)
    };
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let mut out = std::io::stdout().lock();
    match out.write_all(body.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        _ => ExitCode::SUCCESS,
    }
}
