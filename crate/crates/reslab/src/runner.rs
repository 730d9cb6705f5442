//! Subcommand bodies shared by the CLI: run a stage, write its reports and
//! CSV exports, refresh summary.json, and map outcomes to the exit-code
//! contract (0 success, 1 usage/config, 2 numerically inconclusive,
//! 3 cross-module inconsistency).

use crate::config::*;
use crate::error::{Error, Result};
use crate::potential::make_linearized_potentials;
use crate::radial_ode::ZeroEnergyKind;
use crate::report::{config_hash, write_report, Summary};
use crate::resolvent::{ScanRect, WeightFunction};
use crate::wave_decay::{bump, Boundary, Mesh};
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

fn finish(out: &Path, stage: &str, hash: &str, body: serde_json::Value) -> Result<i32> {
    let mut summary = Summary::load(out);
    summary.record(stage, hash, body);
    let conflicts = summary.check_consistency();
    summary.save(out)?;
    if conflicts.is_empty() {
        Ok(EXIT_OK)
    } else {
        for c in &conflicts {
            eprintln!("consistency: {c}");
        }
        Ok(EXIT_INCONSISTENT)
    }
}

pub fn run_classify(cfg: &ClassifyConfig, out: &Path) -> Result<i32> {
    let hash = config_hash(cfg)?;
    let cp = cfg.potential.build()?;
    let verdict = crate::radial_ode::classify_zero_energy(&cp, cfg.tol)?;
    let sol = crate::radial_ode::integrate_radial(
        &cp,
        num_complex::Complex64::ZERO,
        30f64.max(20.0 / cp.base.decay.eps0),
        (cfg.tol * 1e-4).clamp(1e-13, 1e-7),
    )?;
    std::fs::create_dir_all(out)?;
    sol.export_csv(&out.join("solution.csv"))?;
    let body = serde_json::json!({
        "potential": cp.base.description,
        "alpha": cp.alpha,
        "kind": verdict.kind,
        "c0": verdict.fit.c0,
        "c1": verdict.fit.c1,
        "fit_residual": verdict.fit.residual,
        "remainder_h": verdict.fit.remainder_h,
        "remainder_g": verdict.fit.remainder_g,
        "tol": verdict.tol,
    });
    write_report(out, "classify.json", "classify", &hash, &body)?;
    let code = finish(out, "classify", &hash, body)?;
    if code == EXIT_OK && verdict.kind == ZeroEnergyKind::Inconclusive {
        return Ok(EXIT_INCONCLUSIVE);
    }
    Ok(code)
}

pub fn run_certify(cfg: &CertifyConfig, out: &Path) -> Result<i32> {
    let hash = config_hash(cfg)?;
    let cp = cfg.potential.build()?;
    let cert = match crate::certificate::certify_no_strong_resonance(&cp, cfg.m_min..=cfg.m_max) {
        Ok(c) => c,
        Err(Error::Inconclusive { m_min, m_max, trace }) => {
            let body = serde_json::json!({
                "potential": cp.base.description,
                "verdict": "inconclusive",
                "m_min": m_min,
                "m_max": m_max,
                "margins_trace": trace,
            });
            write_report(out, "certify.json", "certify", &hash, &body)?;
            finish(out, "certify", &hash, body)?;
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(e) => return Err(e),
    };
    if let Some(m) = cert.m_star {
        let tf = crate::certificate::TestFunctions::for_potential(m, &cp);
        crate::certificate::phi_profile_csv(&cp, &tf, &out.join("phi_profile.csv"))?;
    }
    let body = serde_json::to_value(&cert)?;
    write_report(out, "certify.json", "certify", &hash, &body)?;
    finish(out, "certify", &hash, body)
}

pub fn run_weakres(cfg: &WeakresConfig, out: &Path) -> Result<i32> {
    let hash = config_hash(cfg)?;
    let cp = cfg.potential.build()?;
    if cp.alpha != 0.0 {
        return Err(Error::Config(
            "the contraction machinery runs in the s-wave channel".into(),
        ));
    }
    let body = match crate::weak_resonance::picard_construct(&cp.base, cfg.c1, cfg.tol) {
        Ok(rep) => {
            if let Some(lim) = &rep.limit {
                crate::report::write_csv(
                    &out.join("limit.csv"),
                    "s,u",
                    lim.grid
                        .iter()
                        .zip(&lim.values)
                        .map(|(s, u)| format!("{s},{u}")),
                )?;
            }
            serde_json::to_value(&rep)?
        }
        Err(Error::NonContractive { d, steps, trace }) => serde_json::json!({
            "d": d,
            "converged": false,
            "non_contractive": true,
            "iterations": steps,
            "increments": trace,
        }),
        Err(e) => return Err(e),
    };
    write_report(out, "weakres.json", "weakres", &hash, &body)?;
    finish(out, "weakres", &hash, body)
}

pub fn run_groundstate(cfg: &GroundstateConfig, out: &Path) -> Result<i32> {
    let hash = config_hash(cfg)?;
    let gs = crate::ground_state::solve_at(cfg.p, cfg.omega, cfg.tol)?;
    std::fs::create_dir_all(out)?;
    crate::report::write_csv(
        &out.join("profile.csv"),
        "r,chi,dchi",
        (0..gs.grid.len()).map(|i| format!("{},{},{}", gs.grid[i], gs.chi[i], gs.dchi[i])),
    )?;
    let tail = crate::ground_state::tail_asymptotics(&gs)?;
    let kernel = if (cfg.omega - 1.0).abs() < 1e-12 {
        Some(crate::ground_state::kernel_split_residual(&gs)?)
    } else {
        None
    };
    let mass = match &cfg.mass_curve_omegas {
        Some(om) => Some(crate::ground_state::mass_curve(cfg.p, om, cfg.tol)?),
        None => None,
    };
    // registry entry for reuse by the potential layer
    let registry = serde_json::json!({
        "entries": [{
            "p": gs.p,
            "omega": gs.omega,
            "chi0": gs.chi0,
            "tail_c0": gs.tail_c0,
            "l2_norm": gs.l2_norm,
            "profile_csv": "profile.csv",
        }]
    });
    std::fs::write(
        out.join("registry.json"),
        serde_json::to_string_pretty(&registry)? + "\n",
    )?;
    let body = serde_json::json!({
        "p": gs.p,
        "omega": gs.omega,
        "chi0": gs.chi0,
        "tail_c0": gs.tail_c0,
        "l2_norm": gs.l2_norm,
        "converged": gs.converged,
        "matching_mismatch": gs.matching_mismatch,
        "tail": tail,
        "kernel_split": kernel,
        "mass_curve": mass,
    });
    write_report(out, "groundstate.json", "groundstate", &hash, &body)?;
    finish(out, "groundstate", &hash, body)
}

pub fn run_scan(cfg: &ScanConfig, out: &Path) -> Result<i32> {
    let hash = config_hash(cfg)?;
    let cp = cfg.potential.build()?;
    if cp.alpha != 0.0 {
        return Err(Error::Config("the determinant scan runs in the s-wave channel".into()));
    }
    let w = WeightFunction::new(cfg.delta);
    let rect = ScanRect {
        re_min: cfg.rect.re_min,
        re_max: cfg.rect.re_max,
        im_min: cfg.rect.im_min,
        im_max: cfg.rect.im_max,
    };
    let scan = match crate::resolvent::determinant_scan(
        &cp.base,
        &w,
        rect,
        cfg.nx,
        cfg.ny,
        cfg.quad_order,
    ) {
        Ok(s) => s,
        Err(Error::Resolution(msg)) => {
            eprintln!("scan: {msg}");
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(e) => return Err(e),
    };
    std::fs::create_dir_all(out)?;
    scan.export_csv(&out.join("scan.csv"))?;
    let near_origin = scan
        .zeros
        .iter()
        .filter(|z| (z.mu_re * z.mu_re + z.mu_im * z.mu_im).sqrt() < 0.05)
        .count();
    let mut body = serde_json::to_value(&scan)?;
    body["near_origin_zeros"] = serde_json::json!(near_origin);
    write_report(out, "scan.json", "scan", &hash, &body)?;
    finish(out, "scan", &hash, body)
}

pub fn run_wave(cfg: &WaveConfig, out: &Path) -> Result<i32> {
    let hash = config_hash(cfg)?;
    let cp = match &cfg.potential {
        Some(decl) => decl.build()?,
        None => crate::potential::ChannelPotential::s_wave(
            crate::potential::Potential::exponential(1e-300, 1.0),
        ),
    };
    let mesh = Mesh {
        r_max: cfg.r_max,
        dr: cfg.dr,
    };
    let boundary = match cfg.boundary.as_str() {
        "causal" => Boundary::Causal,
        "sponge" => Boundary::Sponge,
        other => return Err(Error::Config(format!("unknown boundary '{other}'"))),
    };
    let mut u_bumps = Vec::new();
    let mut v_bumps = Vec::new();
    for b in &cfg.data {
        match b.field.as_str() {
            "displacement" => u_bumps.push((b.center, b.width, b.amplitude)),
            "velocity" => v_bumps.push((b.center, b.width, b.amplitude)),
            other => return Err(Error::Config(format!("unknown data field '{other}'"))),
        }
    }
    let sum_of = move |list: Vec<(f64, f64, f64)>| {
        move |r: f64| -> f64 {
            list.iter()
                .map(|&(c, w, a)| bump(c, w, a)(r))
                .sum()
        }
    };
    let u0 = sum_of(u_bumps);
    let v0 = sum_of(v_bumps);

    let delta = cfg
        .delta
        .unwrap_or_else(|| 0.5 * (0.5 * cp.base.decay.eps0).min(1.0));
    let w = WeightFunction::new(delta);

    let run = if cfg.project_ac {
        let w_floor = -1.2 * (0..400)
            .map(|i| cp.w_total(0.05 + 0.05 * i as f64).abs())
            .fold(0.0, f64::max)
            - 0.1;
        let states = crate::radial_ode::bound_states(&cp, (w_floor, -1e-3))?;
        let (a, b) = crate::wave_decay::project_ac(&u0, &v0, &states, mesh);
        let grid = mesh.grid();
        let dr = mesh.dr;
        let from_samples = move |vals: Vec<f64>| {
            let grid = grid.clone();
            move |r: f64| -> f64 {
                if r == 0.0 {
                    return 0.0;
                }
                let i = ((r / dr).round() as usize).min(grid.len() - 1);
                vals[i] / grid[i].max(dr * 0.5)
            }
        };
        let ua = from_samples(a);
        let vb = from_samples(b);
        crate::wave_decay::evolve(&cp, &ua, &vb, cfg.t_end, mesh, boundary, cfg.cfl, cfg.snapshot_dt)?
    } else {
        crate::wave_decay::evolve(&cp, &u0, &v0, cfg.t_end, mesh, boundary, cfg.cfl, cfg.snapshot_dt)?
    };

    let series = crate::wave_decay::measure_decay(&run, &w, (cfg.window_t0, cfg.window_t1))?;
    std::fs::create_dir_all(out)?;
    series.export_csv(&out.join("decay.csv"))?;
    run.snapshots
        .last()
        .unwrap()
        .export_csv(&out.join("final_state.csv"))?;
    let e0 = run.energy[0].1;
    let drift = run
        .energy
        .iter()
        .map(|&(_, e)| (e - e0).abs())
        .fold(0.0, f64::max)
        / e0.abs().max(1e-300);
    let body = serde_json::json!({
        "potential": cfg.potential.as_ref().map(|_| cp.base.description.clone()),
        "delta": delta,
        "fitted_rate": series.fitted_rate,
        "fitted_rate_velocity": series.fitted_rate_velocity,
        "fit_residual": series.fit_residual,
        "fit_residual_velocity": series.fit_residual_velocity,
        "energy_drift": drift,
        "window": [cfg.window_t0, cfg.window_t1],
    });
    write_report(out, "wave.json", "wave", &hash, &body)?;
    finish(out, "wave", &hash, body)
}

/// Expose the linearized pair through the registry path for the CLI.
pub fn linearized_pair_descriptions(p: f64, omega: f64) -> Result<(String, String)> {
    let gs = crate::ground_state::solve_at(p, omega, 1e-10)?;
    let (minus, plus) = make_linearized_potentials(&gs)?;
    Ok((minus.description, plus.description))
}
