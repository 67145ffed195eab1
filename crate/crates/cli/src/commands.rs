use anyhow::{Context, Result};
use bhdimer_core::figures::{self, evaluate, exact_cutoff, EvalOptions};
use bhdimer_core::gutzwiller::TOP_POPULATION_FLAG;
use bhdimer_core::state::dimer_space;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{render, Format, Metadata};

/// Rendered output plus whether every requested point succeeded.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub all_ok: bool,
}

fn metadata(command: &str, cfg: &RunConfig) -> Metadata {
    let mut m = Metadata::default();
    m.push("tool", format!("bhdimer {}", env!("CARGO_PKG_VERSION")));
    m.push("command", command);
    m.push("seed", cfg.seed);
    m
}

fn section<T: Serialize>(m: &mut Metadata, name: &str, value: &T) {
    m.push(name, value);
}

pub fn fig1(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let out = figures::fig1(&cfg.fig1)?;
    let mut m = metadata("fig1", cfg);
    section(&mut m, "config", &cfg.fig1);
    m.push("n_max", out.n_max);
    m.push("cutoff_history", out.cutoff.as_ref().map(|c| c.history.clone()));
    m.push("bistable_window", out.bistable_window);
    let all_ok = out.rows.iter().all(|r| r.flag.is_none());
    Ok(Outcome { bytes: render(&m, &out.rows, format)?, all_ok })
}

pub fn fig2(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let out = figures::fig2(&cfg.fig2, &cfg.fixed_point)?;
    let mut m = metadata("fig2", cfg);
    section(&mut m, "config", &cfg.fig2);
    section(&mut m, "fixed_point", &cfg.fixed_point);
    m.push("n_max", out.n_max);
    m.push("cutoff_history", out.cutoff.as_ref().map(|c| c.history.clone()));
    m.push("fit_rdc", out.rdc_fit);
    m.push("fit_kdc", out.kdc_fit);
    let all_ok = out.rows.iter().all(|r| r.flag.is_none());
    Ok(Outcome { bytes: render(&m, &out.rows, format)?, all_ok })
}

pub fn fig3(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let rows = figures::fig3(&cfg.fig3)?;
    let mut m = metadata("fig3", cfg);
    section(&mut m, "config", &cfg.fig3);
    let all_ok = rows.iter().all(|r| r.flag.is_none());
    Ok(Outcome { bytes: render(&m, &rows, format)?, all_ok })
}

pub fn fig4(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let rows = figures::fig4(&cfg.fig4)?;
    let mut m = metadata("fig4", cfg);
    section(&mut m, "config", &cfg.fig4);
    let all_ok = rows.iter().all(|r| r.flag.is_none());
    Ok(Outcome { bytes: render(&m, &rows, format)?, all_ok })
}

#[derive(Debug, Serialize)]
struct SweepRow {
    index: usize,
    x: f64,
    method: String,
    observable: String,
    value: f64,
    flag: Option<String>,
}

pub fn sweep(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let s = &cfg.sweep;
    s.validate()?;
    let grid = s.grid()?;
    let base = cfg.params.model();
    base.validate()?;
    let points: Vec<_> = grid.iter().map(|&x| s.point(&base, x)).collect::<Result<_>>()?;
    let mut history = Vec::new();
    let n_max = match cfg.cutoff.n_max {
        Some(n) => n,
        // Closed-form methods never touch the Fock space.
        None if !s.method.has_state() => *cfg.cutoff.ladder.first().context("empty cutoff ladder")?,
        None => {
            let mut n_max = 0;
            for p in [points.first(), points.last()].into_iter().flatten() {
                let r = exact_cutoff(p, &cfg.cutoff.ladder, cfg.cutoff.tol)?;
                n_max = n_max.max(r.n_max);
                history.push(r.history);
            }
            n_max
        }
    };
    let space = dimer_space(n_max)?;
    let opts = EvalOptions {
        fixed_point: cfg.fixed_point,
        trajectories: cfg.trajectories,
        with_distance: s.observables.iter().any(|o| o.starts_with("distance")),
    };
    let rows: Vec<SweepRow> = points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let x = grid[index];
            let res = evaluate(s.method, p, &space, &opts);
            let cutoff_flag = res.as_ref().ok().and_then(|e| e.get("top_population").ok()).and_then(|top| {
                (top > TOP_POPULATION_FLAG).then(|| format!("cutoff too small: top population {top:.2e}"))
            });
            s.observables
                .iter()
                .map(|o| {
                    let (value, flag) = match &res {
                        Ok(e) => match e.get(o) {
                            Ok(v) => (v, cutoff_flag.clone()),
                            Err(err) => (f64::NAN, Some(err.to_string())),
                        },
                        Err(err) => (f64::NAN, Some(err.to_string())),
                    };
                    SweepRow { index, x, method: s.method.to_string(), observable: o.clone(), value, flag }
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    let mut m = metadata("sweep", cfg);
    section(&mut m, "params", &cfg.params);
    section(&mut m, "sweep", &cfg.sweep);
    section(&mut m, "cutoff", &cfg.cutoff);
    if s.method.is_stochastic() {
        section(&mut m, "trajectories", &cfg.trajectories);
    }
    if matches!(s.method, bhdimer_core::Method::Rdc | bhdimer_core::Method::Kdc | bhdimer_core::Method::KdcGauss) {
        section(&mut m, "fixed_point", &cfg.fixed_point);
    }
    m.push("n_max", n_max);
    if !history.is_empty() {
        m.push("cutoff_history", history);
    }
    let all_ok = rows.iter().all(|r| r.flag.is_none());
    Ok(Outcome { bytes: render(&m, &rows, format)?, all_ok })
}

pub fn check(cfg: &RunConfig, format: Format, samples: usize) -> Result<Outcome> {
    let rows = bhdimer_core::checks::run_all(samples, cfg.seed)?;
    let mut m = metadata("check", cfg);
    m.push("samples", samples);
    let all_ok = rows.iter().all(|r| r.passed);
    Ok(Outcome { bytes: render(&m, &rows, format)?, all_ok })
}
