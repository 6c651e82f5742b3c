use crate::output::{join, Meta, Writer};
use anchortalk::cheap_talk::{max_labels, partition_welfare, solve_partition_general, two_label_threshold_gaussian};
use anchortalk::gauss::{self, GaussParams};
use anchortalk::hybrid::{self, HybridOptions, Player};
use anchortalk::model::ModelSpec;
use anyhow::Result;
use clap::{Args, Subcommand};
use serde_json::json;
use std::path::Path;

#[derive(Debug, Subcommand)]
pub enum Figure {
    /// Welfare frontier of the uninformative-anchor family.
    #[command(name = "pareto")]
    Pareto(ParetoArgs),
    /// Hybrid and anchor-only welfare as the bias shrinks.
    #[command(name = "welfare_vs_d")]
    WelfareVsD(WelfareArgs),
    /// Two-label partition with anchored reports at moderate bias.
    #[command(name = "hybrid_moderate")]
    HybridModerate(ModerateArgs),
    /// Small-bias comparison of the hybrid with cheap talk.
    #[command(name = "lowd_scaling")]
    LowdScaling(LowdArgs),
}

pub fn run(f: &Figure, out: &Path) -> Result<u8> {
    match f {
        Figure::Pareto(a) => pareto(a, out),
        Figure::WelfareVsD(a) => welfare_vs_d(a, out),
        Figure::HybridModerate(a) => hybrid_moderate(a, out),
        Figure::LowdScaling(a) => lowd_scaling(a, out),
    }
}

#[derive(Debug, Args, serde::Serialize)]
pub struct ParetoArgs {
    #[arg(long, default_value_t = 0.25)]
    pub d: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 4.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 4001)]
    pub points: usize,
    /// Label cap for the cheap-talk reference point.
    #[arg(long, default_value_t = 64)]
    pub cap: usize,
}

fn pareto(a: &ParetoArgs, out: &Path) -> Result<u8> {
    let mut w = Writer::new(out, Meta::new("figure pareto", json!(a), None))?;
    let n = a.points.max(2);
    let alphas: Vec<f64> = (0..n).map(|i| a.alpha_max * i as f64 / (n - 1) as f64).collect();
    let fr = gauss::pareto_frontier(a.sigma_theta, a.c, a.d, &alphas)?;
    let rows: Vec<String> = fr.points.iter().map(|p| format!("{},{},{},{}", p.alpha, p.w_s, p.w_r, p.total)).collect();
    w.csv("pareto_frontier.csv", "alpha,W_S,W_R,total", &rows)?;
    let m = ModelSpec::gaussian_quadratic(a.sigma_theta, 1.0, a.sigma_theta / a.c.sqrt(), a.c, a.d)?;
    let ct = max_labels(&m, a.cap)?;
    let cw = partition_welfare(&m, &ct)?;
    w.csv(
        "pareto_cheap_talk.csv",
        "labels,W_S,W_R",
        &[format!("{},{},{}", ct.labels(), cw.w_s, cw.w_r)],
    )?;
    w.json(
        "pareto_metadata.json",
        &json!({
            "family": "beta = 0 knife edge, sigma = sigma_theta / sqrt(c)",
            "argmax_grid": fr.argmax_grid,
            "argmax_foc": fr.argmax_foc,
            "argmax_closed": fr.argmax_closed,
            "cheap_talk": { "selection": "most informative partition", "cutoffs": ct.cutoffs, "welfare": cw },
        }),
    )?;
    println!("argmax_grid={} argmax_foc={}", fr.argmax_grid, fr.argmax_foc);
    w.report();
    Ok(0)
}

#[derive(Debug, Args, serde::Serialize)]
pub struct WelfareArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.1,0.05,0.02")]
    pub ds: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 64)]
    pub cap: usize,
}

fn welfare_vs_d(a: &WelfareArgs, out: &Path) -> Result<u8> {
    let mut w = Writer::new(out, Meta::new("figure welfare_vs_d", json!(a), None))?;
    let o = HybridOptions::default();
    let mut rows = Vec::new();
    for &d in &a.ds {
        let m = ModelSpec::gaussian_quadratic(a.sigma_theta, a.beta, a.sigma, a.c, d)?;
        let h = hybrid::most_informative_hybrid(&m, a.cap, &o)?;
        let an = gauss::equilibrium(GaussParams::new(a.sigma_theta, a.beta, a.sigma, a.c, d))?;
        rows.push(format!(
            "{d},{},{},{},{},{}",
            h.partition.labels(),
            h.welfare.w_r,
            h.welfare.w_s,
            an.w_r,
            an.w_s
        ));
        println!("d={d} labels={} W_R hybrid={} anchor={}", h.partition.labels(), h.welfare.w_r, an.w_r);
    }
    w.csv("welfare_vs_d.csv", "d,labels,W_R_hybrid,W_S_hybrid,W_R_anchor,W_S_anchor", &rows)?;
    w.json(
        "welfare_vs_d_metadata.json",
        &json!({
            "anchor_only_selection": "whole-prior affine Gaussian-quadratic equilibrium",
            "hybrid_selection": "largest label count, from the cheap-talk maximum downward, whose label-indifference solve converges",
        }),
    )?;
    w.report();
    Ok(0)
}

#[derive(Debug, Args, serde::Serialize)]
pub struct ModerateArgs {
    #[arg(long, default_value_t = 0.5)]
    pub d: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// States for the action panel, on ±4 σ_θ.
    #[arg(long, default_value_t = 161)]
    pub points: usize,
}

fn hybrid_moderate(a: &ModerateArgs, out: &Path) -> Result<u8> {
    let mut w = Writer::new(out, Meta::new("figure hybrid_moderate", json!(a), None))?;
    let m = ModelSpec::gaussian_quadratic(a.sigma_theta, a.beta, a.sigma, a.c, a.d)?;
    let o = HybridOptions::default();
    let cmp = hybrid::compare_formats(&m, 2, &o)?;
    let ct = solve_partition_general(&m, 2)?;
    let h = hybrid::hybrid_with_cutoffs(&m, &ct.cutoffs, &o)?;
    let n = a.points.max(2);
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let th = a.sigma_theta * (-4.0 + 8.0 * i as f64 / (n - 1) as f64);
            let k = ct.label_of(th);
            format!("{th},{},{},{th}", ct.actions[k], h.expected_action(&m, th))
        })
        .collect();
    w.csv("hybrid_moderate_actions.csv", "theta,cheap_talk,hybrid,full_information", &rows)?;
    let mut fmts = vec![&cmp.babbling, &cmp.anchor_only, &cmp.cheap_talk, &cmp.hybrid];
    if let Some(e) = &cmp.hybrid_equilibrium {
        fmts.push(e);
    }
    let loss_rows: Vec<String> =
        fmts.iter().map(|f| format!("{},{},{},{}", f.format, f.loss_r, f.loss_s, f.reporting_cost)).collect();
    w.csv("hybrid_moderate_losses.csv", "format,loss_R,loss_S,reporting_cost", &loss_rows)?;
    let t_star = two_label_threshold_gaussian(0.0, a.sigma_theta, a.d).ok();
    w.json(
        "hybrid_moderate_metadata.json",
        &json!({
            "t_star": t_star,
            "hybrid": "two-label cheap-talk partition held at t_star, anchored report inside each label",
            "hybrid_label_gap_at_t_star": cmp.hybrid_label_gap,
            "hybrid_equilibrium": "cutoff moved until the boundary type is indifferent between labels",
            "hybrid_dominates": cmp.hybrid_dominates(),
            "formats": cmp,
        }),
    )?;
    for f in &fmts {
        println!("{:<20} loss_R={:.6} loss_S={:.6} cutoffs={}", f.format, f.loss_r, f.loss_s, join(&f.cutoffs));
    }
    w.report();
    Ok(0)
}

#[derive(Debug, Args, serde::Serialize)]
pub struct LowdArgs {
    /// Biases for the exact hybrid and cheap-talk solves.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.005,0.002,0.001")]
    pub ds: Vec<f64>,
    /// Log grid for the leading-order excess.
    #[arg(long, default_value_t = 1e-4)]
    pub d_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub d_max: f64,
    #[arg(long, default_value_t = 9)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 400)]
    pub cap: usize,
}

fn lowd_scaling(a: &LowdArgs, out: &Path) -> Result<u8> {
    let mut w = Writer::new(out, Meta::new("figure lowd_scaling", json!(a), None))?;
    let m = ModelSpec::uniform_quadratic(0.0, 1.0, a.beta, a.sigma, a.c, 0.0)?;
    let tab = hybrid::reporting_cost_scaling(&m, &a.ds, a.cap)?;
    let exact: Vec<String> = tab
        .rows
        .iter()
        .map(|r| format!("{},{},{},{},{},{},{}", r.d, r.labels, r.loss_c_r, r.loss_h_r, r.excess_r, r.excess_s, r.excess_leading))
        .collect();
    w.csv("lowd_losses.csv", "d,labels,L_C_R,L_H_R,excess_R,excess_S,excess_leading_R", &exact)?;
    let costs: Vec<String> =
        tab.rows.iter().map(|r| format!("{},{},{},{}", r.d, r.labels, r.reporting_cost, r.mismatch_loss)).collect();
    w.csv("lowd_sender_components.csv", "d,labels,reporting_cost,mismatch_loss", &costs)?;
    let prof = hybrid::r_and_d_profiles(&m, hybrid::PROFILE_NODES)?;
    let k = a.grid_points.max(2);
    let (l0, l1) = (a.d_min.ln(), a.d_max.ln());
    let mut lead = Vec::with_capacity(k);
    for i in 0..k {
        let d = (l0 + (l1 - l0) * i as f64 / (k - 1) as f64).exp();
        let r = hybrid::LossBreakdown::from_profiles(&m, &prof, d, Player::R)?;
        let s = hybrid::LossBreakdown::from_profiles(&m, &prof, d, Player::S)?;
        lead.push(format!("{d},{},{},{},{},{}", r.l_c_leading, r.cutoff_cost, r.info_gain, r.l_h_minus_l_c, s.l_h_minus_l_c));
    }
    w.csv("lowd_leading_excess.csv", "d,L_C_R_leading,cutoff_cost_R,info_gain_R,excess_R,excess_S", &lead)?;
    w.json(
        "lowd_scaling_metadata.json",
        &json!({
            "environment": "theta uniform on [0,1], constant bias profile, unit quadratic losses, Gaussian anchor",
            "hybrid_selection": "most informative label count",
            "cost_slope": tab.cost_slope,
            "mismatch_slope": tab.mismatch_slope,
            "excess_positive_exact": tab.rows.iter().all(|r| r.excess_r > 0.0),
        }),
    )?;
    println!("cost_slope={} mismatch_slope={}", tab.cost_slope, tab.mismatch_slope);
    w.report();
    Ok(0)
}
