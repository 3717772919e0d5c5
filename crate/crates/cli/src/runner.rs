//! Mode dispatch. Every mode computes first and writes its artifacts at the
//! end through a single [`Writer`].

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use groundlab::asymptotics::{epsilon, predicted_e, tilde_e};
use groundlab::diagnostics::{
    concentration_rate, equivalence_check, equivalence_checks, profile_distance, rescale, uniqueness_probe,
    ConcentrationReport, EnergyReference, EquivalenceReport, ProbeReport,
};
use groundlab::groundstate::{
    eigen_residual, free_reference, minimize, sweep, GridSpec, Init, MinimizeOptions, MinimizeResult, Model, SweepMode,
    SweepOptions,
};
use groundlab::io::field_to_text;
use groundlab::potentials::build_potential;
use groundlab::qfunctional::QQuadrature;
use groundlab::soliton::{pohozaev_residuals, soliton_constants, solve_soliton_with, ShootingOptions};
use groundlab::{Error, Profile};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, InitKind, Mode, ReferenceKind};
use crate::output::{Provenance, Writer};

/// Bound on `‖ū − w‖_∞` at the largest `ρ` of a verified sweep.
pub const PROFILE_DISTANCE_BOUND: f64 = 0.05;
/// Allowed growth of `‖ū − w‖_∞` between adjacent sweep entries.
pub const MONOTONE_NOISE: f64 = 0.1;
/// Band around 1 for `fitted λ̄ / λ̄₀`.
pub const EXPANSION_BAND: f64 = 0.1;
pub const RATE_BOUND: f64 = 10.0;
/// Relative agreement of the last rate point with `y₀`.
pub const OFFSET_TOL: f64 = 0.15;
/// Band around −1 for `ε² μ` at the largest `ρ`.
pub const MU_SCALE_TOL: f64 = 0.1;
/// Allowed growth of `|x_ρ − x₀|` between adjacent entries, in units of `ε`.
pub const MAX_POINT_SLACK: f64 = 1e-3;
pub const PROBE_DISTANCE_BOUND: f64 = 1e-6;
pub const PROBE_SPREAD_BOUND: f64 = 1e-9;

/// One pass/fail verdict of the verify mode.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

/// Runs `mode` and writes its artifacts into `out`.
pub fn run(cfg: &ExperimentConfig, mode: Mode, out: &Path) -> Result<Outcome> {
    let mut w = Writer::new(out, Provenance::new(cfg))?;
    let checks = match mode {
        Mode::Soliton => run_soliton(cfg, &mut w)?,
        Mode::Constants => run_constants(cfg, &mut w)?,
        Mode::Qmin => run_qmin(cfg, &mut w)?,
        Mode::Minimize => run_minimize(cfg, &mut w)?,
        Mode::Sweep => run_sweep(cfg, &mut w, false)?,
        Mode::Verify => run_sweep(cfg, &mut w, true)?,
        Mode::Probe => run_probe(cfg, &mut w)?,
    };
    Ok(Outcome {
        files: w.into_files(),
        checks,
    })
}

fn profile(cfg: &ExperimentConfig) -> Result<Profile> {
    let s = &cfg.soliton;
    let opts = ShootingOptions {
        step: s.step,
        r_max: s.r_max,
        ..ShootingOptions::default()
    };
    solve_soliton_with(cfg.problem.d, cfg.problem.p, s.tol, &opts).context("solving the soliton")
}

fn model(cfg: &ExperimentConfig) -> Result<Model<f64>> {
    let spec = cfg
        .problem
        .potential
        .as_ref()
        .context("problem.potential is required")?;
    let pot = build_potential(spec).context("building the potential")?;
    Ok(Model::with_profile(pot, cfg.problem.p, profile(cfg)?)?)
}

fn grid_spec(cfg: &ExperimentConfig) -> GridSpec<f64> {
    match (cfg.grid.half_width, cfg.grid.n) {
        (Some(half_width), Some(n)) => GridSpec::Fixed { half_width, n },
        _ => GridSpec::Auto,
    }
}

fn minimize_options(cfg: &ExperimentConfig) -> MinimizeOptions<f64> {
    let t = &cfg.tolerances;
    MinimizeOptions {
        tol: t.tol,
        energy_tol: t.energy_tol,
        window: t.window,
        max_iter: t.max_iter,
        ..MinimizeOptions::default()
    }
}

fn init(cfg: &ExperimentConfig) -> Init<f64> {
    match cfg.run.init {
        InitKind::Predicted => Init::Predicted,
        InitKind::Random => Init::Random { seed: cfg.seed },
    }
}

fn run_soliton(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let prof = profile(cfg)?;
    let closed_form_error = (cfg.problem.d == 1)
        .then(|| Profile::closed_form_1d(prof.p(), prof.step(), prof.r_max()))
        .transpose()?
        .map(|exact| {
            prof.values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
    w.json(
        "soliton.json",
        json!({
            "d": prof.d(),
            "p": prof.p(),
            "w0": prof.w0(),
            "ode_residual": prof.residual(),
            "tail_rate": prof.tail_rate(),
            "tail_coeff": prof.tail_coeff(),
            "step": prof.step(),
            "r_max": prof.r_max(),
            "closed_form_max_error": closed_form_error,
        }),
    )?;
    w.text("profile.txt", &prof.to_text(), true)?;
    Ok(Vec::new())
}

fn run_constants(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let prof = profile(cfg)?;
    let k = soliton_constants(&prof)?;
    w.json(
        "constants.json",
        json!({
            "constants": k,
            "identity_residuals": pohozaev_residuals(&prof),
        }),
    )?;
    Ok(Vec::new())
}

fn run_qmin(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let m = model(cfg)?;
    let sel = m
        .selection()
        .context("the potential has no wells (or the Q minimization failed)")?;
    let primary = sel.primary();
    w.json(
        "qmin.json",
        json!({
            "classification": sel.classification,
            "per_well": sel.per_well,
            "z0": sel.z0,
            "lambda_bar_0": sel.lambda_bar_0,
            "x0": sel.x0(),
            "y0": primary.y0,
            "r": sel.degree(),
        }),
    )?;
    if cfg.problem.d == 1 {
        let quad = QQuadrature::new(m.profile());
        let model = &m.potential().wells()[sel.z0[0]].model;
        let rows: Vec<Vec<f64>> = (-100..=100)
            .map(|j| {
                let y = 0.05 * j as f64;
                vec![y, quad.eval(&|x: &[f64]| model.eval(x), &[y])]
            })
            .collect();
        w.csv("q_curve.csv", &["y".into(), "q".into()], &rows)?;
    }
    Ok(Vec::new())
}

fn run_minimize(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let m = model(cfg)?;
    let rho = cfg.run.rho.context("run.rho is required")?;
    let grid = grid_spec(cfg).resolve(&m, rho)?;
    let res = minimize(&m, &grid, rho, &init(cfg), &minimize_options(cfg))?;
    let k = m.constants();
    let mut body = json!({
        "rho": rho,
        "energy": res.energy,
        "mu": res.mu,
        "grad_residual": res.grad_residual,
        "eigen_residual": eigen_residual(&res.u, &m, rho, res.mu),
        "iterations": res.iterations,
        "max_point": res.max_point,
        "grid": { "half_width": grid.half_width(), "n": grid.n() },
        "equivalence": equivalence_check(&res, &m, None),
    });
    if rho > 0.0 {
        let eps = epsilon(k, rho)?;
        body["epsilon"] = json!(eps);
        body["tilde_e"] = json!(tilde_e(k, rho)?);
        body["eps2_mu"] = json!(eps * eps * res.mu);
        if let Some(sel) = m.selection() {
            body["predicted_e"] = json!(predicted_e(k, rho, sel.lambda_bar_0, sel.degree())?);
        }
        match rescale(&res, k) {
            Ok(u_bar) => {
                body["dist_linf"] = json!(profile_distance(&u_bar, m.profile()));
                if cfg.problem.d == 1 {
                    let g = u_bar.grid();
                    let rows: Vec<Vec<f64>> = (0..g.len())
                        .map(|i| {
                            let z = g.axis_coord(i);
                            vec![z, u_bar.values()[i], m.profile().value(z.abs())]
                        })
                        .collect();
                    w.csv("rescaled_profile.csv", &["z".into(), "u_bar".into(), "w".into()], &rows)?;
                }
            }
            Err(e) => body["rescale_error"] = json!(e.to_string()),
        }
    }
    w.json("minimize.json", body)?;
    w.text("field.txt", &field_to_text(&res.u, rho), false)?;
    Ok(Vec::new())
}

/// Per-entry values shared by the sweep CSV and the verify checks.
struct Row {
    rho: f64,
    energy: f64,
    tilde_e: f64,
    predicted_e: f64,
    mu: f64,
    epsilon: f64,
    dist: f64,
    rate: Vec<f64>,
    iterations: usize,
    grad_residual: f64,
    max_point: Vec<f64>,
    reference_e: f64,
}

struct Analysis {
    rows: Vec<Row>,
    report: Option<ConcentrationReport<f64>>,
    violation: Option<String>,
    equivalence: Vec<EquivalenceReport<f64>>,
}

fn analyse(cfg: &ExperimentConfig, m: &Model<f64>, results: &[MinimizeResult<f64>]) -> Result<Analysis> {
    let k = m.constants();
    let opts = minimize_options(cfg);
    let reference: Vec<f64> = match cfg.run.reference {
        ReferenceKind::ClosedForm => results.iter().map(|r| tilde_e(k, r.rho)).collect::<Result<_, _>>()?,
        ReferenceKind::Grid => results
            .par_iter()
            .map(|r| free_reference(m, r.u.grid(), r.rho, &opts).map(|f| f.energy))
            .collect::<Result<_, _>>()?,
    };
    let (report, violation) = if m.selection().is_some() {
        match concentration_rate(m, results, &EnergyReference::Given(reference.clone())) {
            Ok(rep) => (Some(rep), None),
            Err(e @ Error::SelectionViolation(_)) => (None, Some(e.to_string())),
            Err(e) => return Err(e.into()),
        }
    } else {
        (None, None)
    };
    let sel = m.selection();
    let rows = results
        .iter()
        .enumerate()
        .map(|(j, r)| -> Result<Row> {
            let eps = epsilon(k, r.rho)?;
            let te = tilde_e(k, r.rho)?;
            let (dist, rate) = match &report {
                Some(rep) => (rep.distances_linf[j], rep.rate_points[j].clone()),
                None => {
                    let dist = rescale(r, k).map_or(f64::NAN, |u| profile_distance(&u, m.profile()));
                    let origin = nearest_well(m, &r.max_point);
                    (
                        dist,
                        r.max_point.iter().zip(&origin).map(|(x, a)| (x - a) / eps).collect(),
                    )
                }
            };
            Ok(Row {
                rho: r.rho,
                energy: r.energy,
                tilde_e: te,
                predicted_e: match sel {
                    Some(s) => predicted_e(k, r.rho, s.lambda_bar_0, s.degree())?,
                    None => te,
                },
                mu: r.mu,
                epsilon: eps,
                dist,
                rate,
                iterations: r.iterations,
                grad_residual: r.grad_residual,
                max_point: r.max_point.clone(),
                reference_e: reference[j],
            })
        })
        .collect::<Result<_>>()?;
    Ok(Analysis {
        rows,
        report,
        violation,
        equivalence: equivalence_checks(results, m),
    })
}

fn nearest_well(m: &Model<f64>, x: &[f64]) -> Vec<f64> {
    let dist = |a: &[f64]| a.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    m.potential()
        .wells()
        .iter()
        .map(|w| w.location.clone())
        .min_by(|a, b| dist(a).total_cmp(&dist(b)))
        .unwrap_or_else(|| vec![0.0; x.len()])
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn write_sweep_tables(w: &mut Writer, d: usize, rows: &[Row], r: Option<f64>) -> Result<()> {
    let mut cols: Vec<String> = ["rho", "energy", "tilde_e", "predicted_e", "mu", "epsilon", "dist_Linf"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(AXES[..d].iter().map(|a| format!("rate_{a}")));
    cols.push("iterations".into());
    cols.push("grad_residual".into());
    cols.extend(AXES[..d].iter().map(|a| format!("max_{a}")));
    cols.push("reference_e".into());
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let mut v = vec![
                row.rho,
                row.energy,
                row.tilde_e,
                row.predicted_e,
                row.mu,
                row.epsilon,
                row.dist,
            ];
            v.extend(&row.rate);
            v.push(row.iterations as f64);
            v.push(row.grad_residual);
            v.extend(&row.max_point);
            v.push(row.reference_e);
            v
        })
        .collect();
    w.csv("sweep.csv", &cols, &table)?;

    let energy: Vec<Vec<f64>> = rows
        .iter()
        .map(|x| vec![x.rho, x.energy, x.tilde_e, x.predicted_e])
        .collect();
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    w.csv(
        "plot_energy_vs_rho.csv",
        &names(&["rho", "energy", "tilde_e", "predicted_e"]),
        &energy,
    )?;
    let dist: Vec<Vec<f64>> = rows.iter().map(|x| vec![x.epsilon, x.dist]).collect();
    w.csv(
        "plot_profile_distance_vs_epsilon.csv",
        &names(&["epsilon", "dist_Linf"]),
        &dist,
    )?;
    if let Some(r) = r {
        let gap: Vec<Vec<f64>> = rows
            .iter()
            .map(|x| vec![x.rho, (x.energy - x.reference_e) / x.epsilon.powf(r)])
            .collect();
        w.csv("plot_expansion_vs_rho.csv", &names(&["rho", "gap_over_eps_r"]), &gap)?;
    }
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig, w: &mut Writer, verify: bool) -> Result<Vec<Check>> {
    let m = model(cfg)?;
    let rho_list = cfg.run.rho_list.clone().context("run.rho_list is required")?;
    let opts = SweepOptions {
        grid: grid_spec(cfg),
        minimize: minimize_options(cfg),
        mode: if cfg.run.warm {
            SweepMode::Warm
        } else {
            SweepMode::Independent
        },
        first: init(cfg),
    };
    let results = sweep(&m, &rho_list, &opts)?;
    let analysis = analyse(cfg, &m, &results)?;
    let probe = if verify && cfg.probe.is_some() {
        Some(probe(cfg, &m)?)
    } else {
        None
    };
    let checks = if verify {
        verdicts(&m, &analysis, probe.as_ref())
    } else {
        Vec::new()
    };

    write_sweep_tables(w, cfg.problem.d, &analysis.rows, m.selection().map(|s| s.degree()))?;
    let mut body = json!({
        "rho_list": rho_list,
        "constants": m.constants(),
        "concentration": analysis.report,
        "selection_violation": analysis.violation,
        "equivalence": analysis.equivalence,
    });
    if let Some(rep) = &analysis.report {
        body["fitted_lambda_bar"] = json!(rep.fitted_lambda_bar);
        body["lambda_bar_0"] = json!(rep.lambda_bar_0);
        body["expansion_ratio"] = json!(rep.expansion_ratio);
    }
    if let Some(p) = &probe {
        body["probe"] = json!(p);
    }
    if verify {
        body["checks"] = json!(checks);
        body["all_pass"] = json!(checks.iter().all(|c| c.pass));
        w.json("verify.json", body)?;
    } else {
        w.json("sweep.json", body)?;
    }
    let last = results.last().expect("rho_list is nonempty");
    w.text("field_last.txt", &field_to_text(&last.u, last.rho), false)?;
    Ok(checks)
}

fn probe(cfg: &ExperimentConfig, m: &Model<f64>) -> Result<ProbeReport<f64>> {
    let rho = cfg.probe_rho().context("probe.rho is required")?;
    let n = cfg.probe.as_ref().map_or(10, |p| p.n_inits);
    let grid = grid_spec(cfg).resolve(m, rho)?;
    Ok(uniqueness_probe(m, &grid, rho, n, cfg.seed, &minimize_options(cfg))?)
}

fn run_probe(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Vec<Check>> {
    let m = model(cfg)?;
    let rep = probe(cfg, &m)?;
    let check = uniqueness_verdict(&m, &rep);
    let d = cfg.problem.d;
    let mut cols: Vec<String> = vec!["seed".into(), "energy".into(), "iterations".into()];
    cols.extend(AXES[..d].iter().map(|a| format!("max_{a}")));
    cols.push("cluster".into());
    let mut rows = Vec::new();
    for (ci, cluster) in rep.clusters.iter().enumerate() {
        for &i in cluster {
            let r = &rep.results[i];
            let mut v = vec![rep.seeds[i] as f64, r.energy, r.iterations as f64];
            v.extend(&r.max_point);
            v.push(ci as f64);
            rows.push((i, v));
        }
    }
    rows.sort_by_key(|(i, _)| *i);
    let rows: Vec<Vec<f64>> = rows.into_iter().map(|(_, v)| v).collect();
    w.csv("probe.csv", &cols, &rows)?;
    w.json("probe.json", json!({ "probe": rep, "check": check }))?;
    Ok(vec![check])
}

fn uniqueness_verdict(m: &Model<f64>, rep: &ProbeReport<f64>) -> Check {
    let tied = m.selection().is_some_and(|s| s.z0.len() > 1);
    if tied {
        // uniqueness is not expected; the probe must see the competing minimizers
        Check {
            name: "uniqueness",
            pass: rep.clusters.len() >= 2,
            detail: json!({
                "expected": "several clusters (tied wells)",
                "clusters": rep.clusters.len(),
                "max_pairwise_distance": rep.max_pairwise_distance,
            }),
        }
    } else {
        Check {
            name: "uniqueness",
            pass: rep.max_pairwise_distance < PROBE_DISTANCE_BOUND && rep.energy_spread < PROBE_SPREAD_BOUND,
            detail: json!({
                "expected": "one minimizer",
                "max_pairwise_distance": rep.max_pairwise_distance,
                "energy_spread": rep.energy_spread,
                "clusters": rep.clusters.len(),
            }),
        }
    }
}

fn verdicts(m: &Model<f64>, a: &Analysis, probe: Option<&ProbeReport<f64>>) -> Vec<Check> {
    let rows = &a.rows;
    let n = rows.len();
    let mut out = Vec::new();

    if let Some(rep) = &a.report {
        let last_dist = rep.distances_linf[n - 1];
        let monotone = rep.distances_monotone(MONOTONE_NOISE);
        let decay_tail = rep.decay_ok[n.saturating_sub(3)..].iter().all(|&ok| ok);
        out.push(Check {
            name: "concentration",
            pass: last_dist < PROFILE_DISTANCE_BOUND && monotone && decay_tail,
            detail: json!({
                "dist_linf_last": last_dist,
                "monotone_within_noise": monotone,
                "decay_ok_last_three": decay_tail,
            }),
        });
        let ratio = rep.expansion_ratio;
        out.push(Check {
            name: "expansion",
            pass: (ratio - 1.0).abs() <= EXPANSION_BAND,
            detail: json!({
                "fitted_slope": rep.fitted_slope,
                "predicted_slope": rep.lambda_bar_0 / m.constants().a_star,
                "fitted_lambda_bar": rep.fitted_lambda_bar,
                "lambda_bar_0": rep.lambda_bar_0,
                "ratio": ratio,
            }),
        });
    }

    if let Some(sel) = m.selection() {
        let separation = m.potential().min_separation();
        let resolved = |eps: f64| !separation.is_finite() || eps < separation / 10.0;
        let max_rate = rows
            .iter()
            .filter(|r| resolved(r.epsilon))
            .flat_map(|r| r.rate.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        let (offset_ok, offset) = match &a.report {
            Some(rep) => {
                let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let y0n = norm(&rep.y0);
                let diff: Vec<f64> = rows[n - 1].rate.iter().zip(&rep.y0).map(|(a, b)| a - b).collect();
                let ok = y0n <= 1e-6 || norm(&diff) <= OFFSET_TOL * y0n;
                (ok, json!({ "rate_last": rows[n - 1].rate, "y0": rep.y0 }))
            }
            None => (false, Value::Null),
        };
        let x0 = a.report.as_ref().map_or_else(|| sel.x0().to_vec(), |r| r.x0.clone());
        let gaps: Vec<f64> = rows
            .iter()
            .map(|r| {
                r.max_point
                    .iter()
                    .zip(&x0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        // the slack absorbs round-off in the max point of symmetric wells
        let converging = (n / 2..n - 1).all(|j| gaps[j + 1] <= gaps[j] + MAX_POINT_SLACK * rows[j + 1].epsilon);
        out.push(Check {
            name: "selection",
            pass: a.violation.is_none() && max_rate <= RATE_BOUND && offset_ok && converging,
            detail: json!({
                "violation": a.violation,
                "x0": x0,
                "max_rate": max_rate,
                "offset": offset,
                "distance_to_x0_last": gaps[n - 1],
                "distance_nonincreasing": converging,
            }),
        });
    }

    let decreasing = rows.windows(2).all(|r| r[1].energy < r[0].energy);
    let above_reference = rows.iter().all(|r| r.energy >= r.reference_e);
    let above_closed_form = rows.iter().all(|r| r.energy >= r.tilde_e);
    let interior: Vec<&EquivalenceReport<f64>> = a.equivalence.iter().filter(|e| e.mu_ok.is_some()).collect();
    let mu_ok = interior.iter().all(|e| e.mu_ok == Some(true));
    let worst_mu = interior.iter().filter_map(|e| e.mu_defect).fold(0.0, f64::max);
    let norm_ok = a.equivalence.iter().all(|e| e.norm_ok);
    let last = &rows[n - 1];
    let eps2mu = last.epsilon * last.epsilon * last.mu;
    out.push(Check {
        name: "consistency",
        pass: decreasing && above_reference && mu_ok && norm_ok && (eps2mu + 1.0).abs() <= MU_SCALE_TOL,
        detail: json!({
            "energy_strictly_decreasing": decreasing,
            "energy_above_free_reference": above_reference,
            "energy_above_closed_form_free_energy": above_closed_form,
            "mu_identity_worst_defect": worst_mu,
            "mu_identity_interior_points": interior.len(),
            "unit_norm": norm_ok,
            "eps2_mu_last": eps2mu,
        }),
    });

    if let Some(p) = probe {
        out.push(uniqueness_verdict(m, p));
    }
    out
}
