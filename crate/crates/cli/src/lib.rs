//! Command-line front end for `anova-bf`.
//!
//! [`run`] takes the argument list and output streams explicitly so the
//! binary and the tests share one code path.

mod json;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anova_bf::bayes_factor::{
    log_bf_fb_closure, one_way_report, two_way_selection, BayesFactorReport, Criterion, ModelId,
};
use anova_bf::consistency::{
    asymptotic_log_bf, h_threshold, limit_we_wt, predicted_mse_gap, ConsistencyWindow, EffectSizes,
    LimitLaw, Regime, Truth, Verdict,
};
use anova_bf::data::{parse_one_way, parse_two_way};
use anova_bf::numerics::QuadratureSpec;
use anova_bf::prior::{log_bf_quadrature, BetaPrimePrior};
use anova_bf::simulation::{
    run_frequency_experiment, write_frequency_csv, SimulationConfig, TruthSpec,
};
use anova_bf::ss::{one_way_ss, two_way_ss};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use json::Num;

const GRAMMAR: &str = "\
Grammar:
  anova-bf bf one-way|two-way --input PATH [--json|--csv] [--out PATH]
  anova-bf oracle check --p N --r N --ratio X [--a A] [--b B]
  anova-bf consistency h --r N
  anova-bf consistency two-way --r N --ca X --cb X --cab X
  anova-bf consistency mse-gap --p N --r N --effect X
  anova-bf consistency limit --regime REGIME --truth M1|MA1 --fixed N [--ca X]
  anova-bf consistency asymptotic --criterion fb|bic --regime REGIME --truth M1|MA1 --p N --r N [--ca X]
  anova-bf simulate --truth M1|MA1 --p N... --r N... [--ca X...] [--reps N] [--seed N]
                    [--criteria fb,bic] [--mu X] [--sigma2 X] [--out PATH]";

/// Bayes factors for balanced one-way and two-way ANOVA.
#[derive(Debug, Parser)]
#[command(name = "anova-bf", version, after_help = GRAMMAR)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bayes factors for a dataset read from CSV.
    Bf {
        #[command(subcommand)]
        design: BfDesign,
    },
    /// Compare the closed-form factor with numerical integration over the hyperprior.
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
    /// Large-sample consistency diagnostics.
    Consistency {
        #[command(subcommand)]
        action: ConsistencyAction,
    },
    /// Monte Carlo frequencies of choosing the true model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Subcommand)]
enum BfDesign {
    /// `level,value` CSV.
    OneWay(BfArgs),
    /// `a,b,value` CSV.
    TwoWay(BfArgs),
}

#[derive(Debug, Args, Serialize)]
struct BfArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum OracleAction {
    Check(OracleArgs),
}

#[derive(Debug, Args, Serialize)]
struct OracleArgs {
    /// Number of levels of the alternative.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    p: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    r: u64,
    /// Residual-to-total sum-of-squares ratio in (0, 1].
    #[arg(long)]
    ratio: f64,
    /// First hyperprior shape; defaults to -1/2.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Second hyperprior shape; defaults to the closed-form choice.
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ConsistencyAction {
    /// The threshold `r^{1/(r-1)} - 1`.
    H {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        r: u64,
    },
    /// Consistency window of the interaction model.
    TwoWay {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        r: u64,
        #[arg(long)]
        ca: f64,
        #[arg(long)]
        cb: f64,
        #[arg(long)]
        cab: f64,
    },
    /// Difference of scaled prediction errors.
    MseGap {
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        p: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        r: u64,
        #[arg(long)]
        effect: f64,
    },
    /// Probability limit of the residual-to-total ratio.
    Limit {
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long, value_enum)]
        truth: TruthArg,
        /// `p` for many replicates, `r` for many levels.
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        fixed: u64,
        #[arg(long, default_value_t = 0.0)]
        ca: f64,
    },
    /// Leading-order log Bayes factor trajectory.
    Asymptotic {
        #[arg(long, value_parser = parse_criterion)]
        criterion: Criterion,
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long, value_enum)]
        truth: TruthArg,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        p: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        r: u64,
        #[arg(long, default_value_t = 0.0)]
        ca: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RegimeArg {
    #[value(alias = "case-i")]
    ManyReplicates,
    #[value(alias = "case-ii")]
    ManyLevels,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::ManyReplicates => Regime::ManyReplicates,
            RegimeArg::ManyLevels => Regime::ManyLevels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum TruthArg {
    #[value(name = "M1", alias = "m1")]
    M1,
    #[value(name = "MA1", aliases = ["ma1", "MA+1", "ma+1"])]
    MA1,
}

impl From<TruthArg> for Truth {
    fn from(t: TruthArg) -> Self {
        match t {
            TruthArg::M1 => Truth::Null,
            TruthArg::MA1 => Truth::Alternative,
        }
    }
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    s.parse().map_err(|e: anova_bf::Error| e.to_string())
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    truth: TruthArg,
    /// Number of levels; repeat or comma-separate for a grid.
    #[arg(long, required = true, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(2..))]
    p: Vec<u64>,
    /// Replicates per level; repeat or comma-separate for a grid.
    #[arg(long, required = true, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(2..))]
    r: Vec<u64>,
    /// Effect sizes under MA1; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    ca: Vec<f64>,
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "fb,bic", value_parser = parse_criterion)]
    #[serde(serialize_with = "serialize_criteria")]
    criteria: Vec<Criterion>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn serialize_criteria<S: serde::Serializer>(c: &[Criterion], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(|c| c.label()))
}

/// Error in the arguments that clap could not catch; exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Runs the CLI and returns the process exit status: 0 on success, 2 on a
/// usage error, 1 on a data or numerical failure.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let rendered = err.render().to_string();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    0
                }
                _ => {
                    let _ = writeln!(stderr, "{rendered}\n{GRAMMAR}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                let _ = writeln!(stderr, "{GRAMMAR}");
                return 2;
            }
            match err.downcast_ref::<anova_bf::Error>() {
                Some(anova_bf::Error::InvalidConfig(_)) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Bf { design } => match design {
            BfDesign::OneWay(args) => bf_one_way(&args, stdout),
            BfDesign::TwoWay(args) => bf_two_way(&args, stdout),
        },
        Command::Oracle {
            action: OracleAction::Check(args),
        } => oracle_check(&args, stdout),
        Command::Consistency { action } => consistency(action, stdout),
        Command::Simulate(args) => simulate(&args, stdout),
    }
}

#[derive(Serialize)]
struct Manifest<'a, P: Serialize> {
    subcommand: &'a str,
    parameters: &'a P,
    seed: Option<u64>,
    version: &'a str,
    /// Seconds since the Unix epoch.
    timestamp: u64,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `body` to `out` with a manifest alongside, or to stdout.
fn emit<P: Serialize>(
    body: &str,
    out: Option<&Path>,
    subcommand: &str,
    parameters: &P,
    seed: Option<u64>,
    stdout: &mut dyn Write,
) -> anyhow::Result<()> {
    let Some(path) = out else {
        stdout.write_all(body.as_bytes())?;
        return Ok(());
    };
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    let manifest = Manifest {
        subcommand,
        parameters,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mpath = manifest_path(path);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&mpath, text).with_context(|| format!("writing {}", mpath.display()))?;
    Ok(())
}

fn to_json_line<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct ReportJson {
    alternative: ModelId,
    log_bf_fb: Num,
    log_bf_bic: Num,
    posterior_prob_fb: Num,
    choice_fb: ModelId,
    choice_bic: ModelId,
    ss_ratio: Num,
}

impl From<&BayesFactorReport> for ReportJson {
    fn from(r: &BayesFactorReport) -> Self {
        ReportJson {
            alternative: r.alternative,
            log_bf_fb: Num(r.log_bf_fb),
            log_bf_bic: Num(r.log_bf_bic),
            posterior_prob_fb: Num(r.posterior_prob_fb),
            choice_fb: r.choice_fb,
            choice_bic: r.choice_bic,
            ss_ratio: Num(r.ss_ratio),
        }
    }
}

const REPORT_CSV_HEADER: &str =
    "alternative,log_bf_fb,log_bf_bic,posterior_prob_fb,choice_fb,choice_bic,ss_ratio\n";

fn report_csv_row(r: &BayesFactorReport) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        r.alternative,
        r.log_bf_fb,
        r.log_bf_bic,
        r.posterior_prob_fb,
        r.choice_fb,
        r.choice_bic,
        r.ss_ratio
    )
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Serialize)]
struct OneWaySsJson {
    w_t: Num,
    w_e: Num,
    w_h: Num,
}

#[derive(Serialize)]
struct OneWayBfJson {
    design: &'static str,
    p: usize,
    r: usize,
    n: usize,
    ss: OneWaySsJson,
    #[serde(flatten)]
    report: ReportJson,
}

fn bf_one_way(args: &BfArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let data = parse_one_way(&read_input(&args.input)?)?;
    let ss = one_way_ss(&data);
    let report = one_way_report(&ss, data.p(), data.r())?;
    let body = if args.csv {
        format!("{REPORT_CSV_HEADER}{}", report_csv_row(&report))
    } else {
        to_json_line(&OneWayBfJson {
            design: "one-way",
            p: data.p(),
            r: data.r(),
            n: data.n(),
            ss: OneWaySsJson {
                w_t: Num(ss.w_t),
                w_e: Num(ss.w_e),
                w_h: Num(ss.w_h),
            },
            report: (&report).into(),
        })?
    };
    emit(&body, args.out.as_deref(), "bf one-way", args, None, stdout)
}

#[derive(Serialize)]
struct TwoWaySsJson {
    w_t: Num,
    w_a: Num,
    w_b: Num,
    w_ab: Num,
    w_e: Num,
}

#[derive(Serialize)]
struct PosteriorJson {
    model: ModelId,
    probability: Num,
}

#[derive(Serialize)]
struct TwoWayBfJson {
    design: &'static str,
    p: usize,
    q: usize,
    r: usize,
    n: usize,
    ss: TwoWaySsJson,
    comparisons: Vec<ReportJson>,
    best_fb: ModelId,
    best_bic: ModelId,
    posterior_fb: Vec<PosteriorJson>,
}

fn bf_two_way(args: &BfArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let data = parse_two_way(&read_input(&args.input)?)?;
    let ss = two_way_ss(&data);
    let sel = two_way_selection(&ss, data.p(), data.q(), data.r())?;
    let body = if args.csv {
        let mut s = REPORT_CSV_HEADER.to_string();
        for r in &sel.reports {
            s.push_str(&report_csv_row(r));
        }
        s
    } else {
        to_json_line(&TwoWayBfJson {
            design: "two-way",
            p: data.p(),
            q: data.q(),
            r: data.r(),
            n: data.n(),
            ss: TwoWaySsJson {
                w_t: Num(ss.w_t),
                w_a: Num(ss.w_a),
                w_b: Num(ss.w_b),
                w_ab: Num(ss.w_ab),
                w_e: Num(ss.w_e),
            },
            comparisons: sel.reports.iter().map(ReportJson::from).collect(),
            best_fb: sel.best_fb,
            best_bic: sel.best_bic,
            posterior_fb: sel
                .posterior_fb
                .iter()
                .map(|&(model, p)| PosteriorJson {
                    model,
                    probability: Num(p),
                })
                .collect(),
        })?
    };
    emit(&body, args.out.as_deref(), "bf two-way", args, None, stdout)
}

/// Relative tolerance for `oracle check` agreement.
const ORACLE_TOLERANCE: f64 = 1e-8;

#[derive(Serialize)]
struct OracleJson {
    p: usize,
    r: usize,
    n: usize,
    ratio: Num,
    a: Num,
    b: Num,
    closed_form_applies: bool,
    log_bf_quadrature: Num,
    bf_quadrature: Num,
    log_bf_closed_form: Option<Num>,
    relative_difference: Option<Num>,
    tolerance: Num,
    agrees: Option<bool>,
}

fn oracle_check(args: &OracleArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let (p, r) = (args.p as usize, args.r as usize);
    let n = p * r;
    if !(args.ratio > 0.0 && args.ratio <= 1.0) {
        return Err(usage(format!(
            "--ratio must lie in (0, 1], got {}",
            args.ratio
        )));
    }
    let a = args.a.unwrap_or(-0.5);
    let b = args.b.unwrap_or_else(|| BetaPrimePrior::closure_b(n, p, a));
    let prior = BetaPrimePrior::new(a, b).map_err(|e| usage(e.to_string()))?;
    let lbf = log_bf_quadrature(n, p, args.ratio, &prior, &QuadratureSpec::default())?;
    let closure = prior.is_closure(n, p);
    let closed = if closure {
        Some(log_bf_fb_closure(n, p, args.ratio, a)?)
    } else {
        None
    };
    let rel = closed.map(|c| (lbf.exp() - c.exp()).abs() / c.exp());
    let agrees = rel.map(|d| d <= ORACLE_TOLERANCE);
    let body = to_json_line(&OracleJson {
        p,
        r,
        n,
        ratio: Num(args.ratio),
        a: Num(a),
        b: Num(b),
        closed_form_applies: closure,
        log_bf_quadrature: Num(lbf),
        bf_quadrature: Num(lbf.exp()),
        log_bf_closed_form: closed.map(Num),
        relative_difference: rel.map(Num),
        tolerance: Num(ORACLE_TOLERANCE),
        agrees,
    })?;
    emit(
        &body,
        args.out.as_deref(),
        "oracle check",
        args,
        None,
        stdout,
    )?;
    if agrees == Some(false) {
        anyhow::bail!(
            "closed form and quadrature differ by {:e}",
            rel.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn effect(name: &str, v: f64) -> anyhow::Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be finite and >= 0, got {v}")))
    }
}

#[derive(Serialize)]
struct HJson {
    r: u64,
    h: Num,
}

#[derive(Serialize)]
struct WindowJson {
    r: u64,
    c_a: Num,
    c_b: Num,
    c_ab: Num,
    lower: Num,
    middle: Num,
    upper: Num,
    verdict: &'static str,
}

#[derive(Serialize)]
struct MseGapJson {
    p: u64,
    r: u64,
    effect: Num,
    gap: Num,
}

#[derive(Serialize)]
struct LimitJson {
    regime: RegimeArg,
    truth: TruthArg,
    fixed: u64,
    c_a: Num,
    /// Point limit, absent when the limit is a distribution.
    limit: Option<Num>,
    /// Description of a non-degenerate limit law.
    law: Option<String>,
}

#[derive(Serialize)]
struct AsymptoticJson {
    criterion: &'static str,
    regime: RegimeArg,
    truth: TruthArg,
    p: u64,
    r: u64,
    c_a: Num,
    log_bf: Num,
    stochastic_term_omitted: bool,
}

fn consistency(action: ConsistencyAction, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let body = match action {
        ConsistencyAction::H { r } => to_json_line(&HJson {
            r,
            h: Num(h_threshold(r as usize)?),
        })?,
        ConsistencyAction::TwoWay { r, ca, cb, cab } => {
            let e = EffectSizes::new(effect("ca", ca)?, effect("cb", cb)?, effect("cab", cab)?)?;
            let w = ConsistencyWindow::new(r as usize, &e)?;
            to_json_line(&WindowJson {
                r,
                c_a: Num(ca),
                c_b: Num(cb),
                c_ab: Num(cab),
                lower: Num(w.lower),
                middle: Num(w.middle),
                upper: Num(w.upper),
                verdict: match w.verdict() {
                    Verdict::Consistent => "consistent",
                    Verdict::Inconsistent => "inconsistent",
                },
            })?
        }
        ConsistencyAction::MseGap { p, r, effect: e } => to_json_line(&MseGapJson {
            p,
            r,
            effect: Num(e),
            gap: Num(predicted_mse_gap(
                p as usize,
                r as usize,
                effect("effect", e)?,
            )?),
        })?,
        ConsistencyAction::Limit {
            regime,
            truth,
            fixed,
            ca,
        } => {
            let law = limit_we_wt(
                regime.into(),
                truth.into(),
                fixed as usize,
                effect("ca", ca)?,
            )?;
            let description = match law {
                LimitLaw::Point(_) => None,
                LimitLaw::ChiSquare { chi2_df, levels } => Some(format!(
                    "(1 + X / ({levels} r))^-1 with X ~ chi2({chi2_df})"
                )),
            };
            to_json_line(&LimitJson {
                regime,
                truth,
                fixed,
                c_a: Num(ca),
                limit: law.point().map(Num),
                law: description,
            })?
        }
        ConsistencyAction::Asymptotic {
            criterion,
            regime,
            truth,
            p,
            r,
            ca,
        } => {
            let v = asymptotic_log_bf(
                criterion,
                regime.into(),
                truth.into(),
                p as usize,
                r as usize,
                effect("ca", ca)?,
            )?;
            to_json_line(&AsymptoticJson {
                criterion: criterion.label(),
                regime,
                truth,
                p,
                r,
                c_a: Num(ca),
                log_bf: Num(v.value),
                stochastic_term_omitted: v.stochastic_term_omitted,
            })?
        }
    };
    stdout.write_all(body.as_bytes())?;
    Ok(())
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let effects = match (args.truth, args.ca.is_empty()) {
        (TruthArg::M1, true) => vec![0.0],
        (TruthArg::M1, false) if args.ca.iter().all(|&c| c == 0.0) => vec![0.0],
        (TruthArg::M1, false) => return Err(usage("--ca applies only to --truth MA1")),
        (TruthArg::MA1, true) => return Err(usage("--truth MA1 needs at least one --ca")),
        (TruthArg::MA1, false) => args.ca.clone(),
    };
    let mut rows = Vec::new();
    for c_a in effects {
        let truth = match args.truth {
            TruthArg::M1 => {
                TruthSpec::new(ModelId::Null, EffectSizes::default(), args.mu, args.sigma2)
            }
            TruthArg::MA1 => {
                let e = EffectSizes::one_way(effect("ca", c_a)?)?;
                TruthSpec::new(ModelId::A, e, args.mu, args.sigma2)
            }
        }?;
        let cfg = SimulationConfig {
            p_list: args.p.iter().map(|&p| p as usize).collect(),
            r_list: args.r.iter().map(|&r| r as usize).collect(),
            truth,
            replications: args.reps as usize,
            seed: args.seed,
            criteria: args.criteria.clone(),
        };
        rows.extend(run_frequency_experiment(&cfg)?.rows);
    }
    let body = write_frequency_csv(&rows, true);
    emit(
        &body,
        args.out.as_deref(),
        "simulate",
        args,
        Some(args.seed),
        stdout,
    )
}
