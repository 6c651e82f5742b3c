use crate::model_io::{load_model, usage};
use crate::output::{join, Meta, Writer};
use anchortalk::equilibrium::{solve_bvp, solve_whole_line, ActionFn, BvpOptions, LinearRule};
use anchortalk::gauss::{self, GaussParams, LinearEquilibrium};
use anchortalk::hybrid::{self, HybridOptions, Player};
use anchortalk::model::{MessageSpace, ModelSpec};
use anchortalk::sturm;
use anchortalk::verify::{diagnose, VerifyOptions};
use anyhow::Result;
use clap::Args;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Override a model field, e.g. `--set cost.c=0.5`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GaussArgs {
    /// Take defaults from this Gaussian-quadratic model file; flags override it.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, required_unless_present = "model")]
    pub sigma_theta: Option<f64>,
    #[arg(long, required_unless_present = "model")]
    pub beta: Option<f64>,
    #[arg(long, required_unless_present = "model")]
    pub sigma: Option<f64>,
    #[arg(long, required_unless_present = "model")]
    pub c: Option<f64>,
    #[arg(long, required_unless_present = "model")]
    pub d: Option<f64>,
    /// Slope on the β = 0 knife edge cσ² = σ_θ², where it is not pinned down.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Bias values for the sweep table.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,1.25,1.5,2")]
    pub sweep_d: Vec<f64>,
}

fn gauss_params(a: &GaussArgs) -> Result<GaussParams> {
    let base = match &a.model {
        Some(path) => {
            let (m, _) = load_model(path, &[])?;
            gauss::params_of(&m).ok_or_else(|| usage(format!("{} is not a Gaussian-quadratic model", path.display())))?
        }
        None => GaussParams::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };
    Ok(GaussParams {
        sigma_theta: a.sigma_theta.unwrap_or(base.sigma_theta),
        beta: a.beta.unwrap_or(base.beta),
        sigma: a.sigma.unwrap_or(base.sigma),
        c: a.c.unwrap_or(base.c),
        d: a.d.unwrap_or(base.d),
    })
}

fn gauss_solve(p: GaussParams, alpha: Option<f64>) -> Result<LinearEquilibrium> {
    match alpha {
        Some(a) => {
            if p.beta != 0.0 || !p.on_knife_edge() {
                return Err(usage("--alpha needs β = 0 on the knife edge cσ² = σ_θ²"));
            }
            Ok(gauss::uninformative_family(p.sigma_theta, p.c, a, p.d)?)
        }
        None => gauss::equilibrium(p).map_err(|e| usage(e.to_string())),
    }
}

pub fn gauss(a: &GaussArgs, out: &Path) -> Result<u8> {
    let p = gauss_params(a)?;
    let eq = gauss_solve(p, a.alpha)?;
    let informative = p.beta > 0.0;
    let (thresholds, derivatives) = if informative {
        (Some(gauss::thresholds(&p)?), Some(gauss::derivatives(&p)?))
    } else {
        (None, None)
    };
    let k = eq.params.c + eq.alpha * eq.alpha;
    let report = json!({
        "theta_coef": (eq.params.c * p.beta + eq.alpha) / k,
        "noise_coef": eq.params.c / k,
        "constant": eq.alpha * p.d / eq.params.c,
    });
    let mut w = Writer::new(out, Meta::new("gauss", json!({ "params": p, "alpha": a.alpha }), None))?;
    w.json(
        "gauss.json",
        &json!({
            "equilibrium": eq,
            "report_rule": report,
            "thresholds": thresholds.map(|(lo, hi)| json!({ "d_low": lo, "d_high": hi })),
            "derivatives": derivatives,
        }),
    )?;
    let rows = a
        .sweep_d
        .iter()
        .map(|&d| gauss_solve(GaussParams { d, ..p }, a.alpha).map(|e| e.csv_row()))
        .collect::<Result<Vec<_>>>()?;
    w.csv("gauss_sweep.csv", gauss::CSV_HEADER, &rows)?;
    println!("alpha={}", eq.alpha);
    println!("posterior_var={}", eq.posterior_var);
    println!("W_R={} W_S={}", eq.w_r, eq.w_s);
    w.report();
    Ok(0)
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Truncation levels, in anchor spreads, for whole-line message spaces.
    #[arg(long, value_delimiter = ',', default_value = "6,8")]
    pub half_widths: Vec<f64>,
    #[arg(long, default_value_t = BvpOptions::default().intervals)]
    pub intervals: usize,
}

/// Regular equilibrium of the model: the closed form when the model is the
/// Gaussian benchmark and `closed_form` is set, otherwise the ODE solver.
fn solve_rule(m: &ModelSpec, half_widths: &[f64], intervals: usize, closed_form: bool) -> Result<(Box<dyn ActionFn>, Value, Option<String>)> {
    if closed_form {
        if let Some(p) = gauss::params_of(m) {
            let eq = gauss::equilibrium(p)?;
            let rule = LinearRule { alpha: eq.alpha, intercept: eq.intercept };
            return Ok((Box::new(rule), json!({ "closed_form": eq }), None));
        }
    }
    let opts = BvpOptions { intervals, ..BvpOptions::default() };
    match m.message_space {
        MessageSpace::Compact { .. } => {
            let sol = solve_bvp(m, &opts)?;
            let csv = sol.rule.csv();
            Ok((Box::new(sol.rule), json!({ "telemetry": sol.telemetry }), Some(csv)))
        }
        MessageSpace::WholeLine => {
            let sol = solve_whole_line(m, half_widths, &opts)?;
            let csv = sol.rule.csv();
            let closed = gauss::params_of(m).map(|p| gauss::equilibrium(p)).transpose()?;
            Ok((Box::new(sol.rule), json!({ "steps": sol.steps, "closed_form": closed }), Some(csv)))
        }
    }
}

pub fn solve(a: &SolveArgs, out: &Path) -> Result<u8> {
    let (m, doc) = load_model(&a.model.model, &a.model.overrides)?;
    let params = json!({ "model": doc, "half_widths": a.half_widths, "intervals": a.intervals });
    let mut w = Writer::new(out, Meta::new("solve", params, None))?;
    let (_, telemetry, csv) = solve_rule(&m, &a.half_widths, a.intervals, false)?;
    w.json("solve_telemetry.json", &telemetry)?;
    if let Some(csv) = csv {
        w.csv_block("solve_rule.csv", &csv)?;
    }
    w.report();
    Ok(0)
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Solve the ODE even when a closed form is available.
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, value_delimiter = ',', default_value = "6,8")]
    pub half_widths: Vec<f64>,
}

pub fn verify(a: &VerifyArgs, out: &Path) -> Result<u8> {
    let (m, doc) = load_model(&a.model.model, &a.model.overrides)?;
    let params = json!({ "model": doc, "samples": a.samples, "bins": a.bins, "numeric": a.numeric });
    let mut w = Writer::new(out, Meta::new("verify", params, Some(a.seed)))?;
    let (rule, solved, _) = solve_rule(&m, &a.half_widths, BvpOptions::default().intervals, !a.numeric)?;
    let mut o = VerifyOptions::new(a.samples, a.seed);
    o.bins = a.bins;
    if !a.numeric {
        o.welfare_reference = gauss::params_of(&m).map(|p| gauss::equilibrium(p)).transpose()?.map(|e| (e.w_r, e.w_s));
    }
    let diag = diagnose(rule.as_ref(), &m, &o)?;
    w.json("verify_diagnostics.json", &json!({ "pass": diag.pass(), "diagnostics": diag, "rule": solved }))?;
    w.csv_block("verify_bayes_bins.csv", &diag.bayes.csv())?;
    w.report();
    if diag.pass() {
        println!("verify: all checks pass");
        Ok(0)
    } else {
        for f in &diag.failures {
            println!("verify: FAIL {f}");
        }
        Ok(4)
    }
}

#[derive(Debug, Args)]
pub struct SturmArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = sturm::SL_NODES)]
    pub nodes: usize,
}

pub fn sturm(a: &SturmArgs, out: &Path) -> Result<u8> {
    let (m, doc) = load_model(&a.model.model, &a.model.overrides)?;
    let mut w = Writer::new(out, Meta::new("sturm", json!({ "model": doc, "nodes": a.nodes }), None))?;
    let cal = sturm::critical_cost(&m, a.nodes)?;
    // β = 0 Gaussian-quadratic knife edge, for reference
    let knife = (m.anchor.beta() == Some(0.0)).then(|| m.prior.variance() / m.anchor.sigma.powi(2));
    w.json("sturm.json", &json!({ "calibration": cal, "c_star_gaussian_reference": knife }))?;
    w.csv_block("sturm_eigenfunction.csv", &cal.eigen.csv())?;
    println!("lambda1={}", cal.lambda1);
    println!("c_star={}", cal.c_star);
    w.report();
    Ok(0)
}

#[derive(Debug, Args)]
pub struct HybridArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of labels; the most informative count when omitted.
    #[arg(long)]
    pub labels: Option<usize>,
    /// Hold the partition at these cutoffs (support endpoints included)
    /// instead of solving label indifference.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<f64>>,
    /// Label cap for the most-informative search.
    #[arg(long, default_value_t = 64)]
    pub cap: usize,
}

pub fn hybrid(a: &HybridArgs, out: &Path) -> Result<u8> {
    let (m, doc) = load_model(&a.model.model, &a.model.overrides)?;
    let params = json!({ "model": doc, "labels": a.labels, "cutoffs": a.cutoffs, "cap": a.cap });
    let mut w = Writer::new(out, Meta::new("hybrid", params, None))?;
    let o = HybridOptions::default();
    let h = match (&a.cutoffs, a.labels) {
        (Some(c), _) => hybrid::hybrid_with_cutoffs(&m, c, &o)?,
        (None, Some(n)) => hybrid::hybrid_exact_with(&m, n, &o)?,
        (None, None) => hybrid::most_informative_hybrid(&m, a.cap, &o)?,
    };
    let bias = m.sender().bias();
    let breakdown = match (hybrid::loss_difference(&m, bias, Player::R), hybrid::loss_difference(&m, bias, Player::S)) {
        (Ok(r), Ok(s)) => json!({ "R": r, "S": s }),
        _ => Value::Null,
    };
    w.json(
        "hybrid.json",
        &json!({
            "N": h.partition.labels(),
            "cutoffs": h.partition.cutoffs,
            "label_actions": h.partition.actions,
            "per_cell": h.cell_continuations,
            "continuation_mismatch": h.continuation_mismatch,
            "indifference": h.indifference,
            "iterations": h.iterations,
            "newton_steps": h.newton_steps,
            "W_R": h.welfare.w_r,
            "W_S": h.welfare.w_s,
            "welfare": h.welfare,
            "L_breakdown": breakdown,
        }),
    )?;
    println!("N={} cutoffs={}", h.partition.labels(), join(&h.partition.cutoffs));
    println!("W_R={} W_S={}", h.welfare.w_r, h.welfare.w_s);
    w.report();
    Ok(0)
}
