//! Data generators for the standard parameter scans, a generic per-method
//! evaluator used by sweeps, and small fitting helpers.
//!
//! Every generator is deterministic: grid points are evaluated in parallel
//! and collected in grid order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{epr_from_gaussian, epr_variance_sum, optimal_theta_at_large_j, single_mode_asymptote};
use crate::error::{Error, Result};
use crate::fock::{Basis, FockSpace};
use crate::gutzwiller::{kdc_gaussian_ab, kdc_steady_state, rdc_default_seeds, rdc_steady_state, FixedPointOptions, FixedPointReport};
use crate::kerr::{self, KerrParams, ModeMoments};
use crate::liouvillian::build_liouvillian;
use crate::params::ModelParams;
use crate::semiclassical::{bistable_window, dimer_gaussian_steady_state, homogeneous_roots};
use crate::state::{dimer_space, DensityMatrix, FidelityReference};
use crate::steady::{converge_cutoff, ladder, steady_state, CutoffReport};
use crate::trajectory::{gaussian_ab_trajectory_run, gutzwiller_trajectory_run, trajectory_run, TrajectoryConfig, TrajectoryEnsemble};

/// Solution methods available to sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact steady state of the truncated master equation.
    Ed,
    /// Closed-form single-mode limits `J -> 0` and `J -> infinity` at fixed `J + Δ`.
    Dw,
    /// Homogeneous mean-field roots.
    Semiclassical,
    /// Site-product density matrix.
    Rdc,
    /// Bonding/anti-bonding product density matrix.
    Kdc,
    /// As `Kdc` with a Gaussian anti-bonding factor.
    KdcGauss,
    /// Exact trajectories, photons counted on the sites.
    TrajFull,
    TrajGutzReal,
    TrajGutzK,
    TrajGaussAb,
    /// Gaussian closure of both reciprocal modes.
    GaussDimer,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Ed,
        Method::Dw,
        Method::Semiclassical,
        Method::Rdc,
        Method::Kdc,
        Method::KdcGauss,
        Method::TrajFull,
        Method::TrajGutzReal,
        Method::TrajGutzK,
        Method::TrajGaussAb,
        Method::GaussDimer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ed => "ed",
            Method::Dw => "dw",
            Method::Semiclassical => "semiclassical",
            Method::Rdc => "rdc",
            Method::Kdc => "kdc",
            Method::KdcGauss => "kdc-gauss",
            Method::TrajFull => "traj-full",
            Method::TrajGutzReal => "traj-gutz-real",
            Method::TrajGutzK => "traj-gutz-k",
            Method::TrajGaussAb => "traj-gauss-ab",
            Method::GaussDimer => "gauss-dimer",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::TrajFull | Method::TrajGutzReal | Method::TrajGutzK | Method::TrajGaussAb)
    }

    /// Whether the method produces a two-mode density matrix.
    pub fn has_state(self) -> bool {
        !matches!(self, Method::Dw | Method::Semiclassical | Method::GaussDimer)
    }

    /// Observable names [`evaluate`] can report for this method.
    pub fn observables(self) -> &'static [&'static str] {
        match self {
            Method::Ed => &["n_total", "n_1", "n_2", "n_b", "n_ab", "top_population", "epr_sum"],
            Method::Dw => &["n_total_j0", "n_total_jinf", "minvar_site", "minvar_bonding"],
            Method::Semiclassical => &["n_total", "n_total_max", "roots", "stable_roots"],
            Method::Rdc | Method::Kdc | Method::KdcGauss => {
                &["n_total", "n_1", "n_2", "n_b", "n_ab", "distance", "solutions", "iterations", "top_population"]
            }
            Method::TrajFull | Method::TrajGutzReal | Method::TrajGutzK | Method::TrajGaussAb => &[
                "n_total",
                "n_total_stderr",
                "n_1",
                "n_2",
                "n_b",
                "n_ab",
                "distance",
                "distance_stderr",
                "distance_corrected",
            ],
            Method::GaussDimer => &["n_total", "n_b", "n_ab", "epr_sum"],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// Result of one method at one parameter point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub method: Method,
    pub observables: BTreeMap<String, f64>,
    /// Two-mode state in site coordinates, when the method has one.
    pub rho: Option<DensityMatrix>,
}

impl Evaluation {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.observables
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("method {} has no observable '{name}'", self.method)))
    }
}

/// Settings shared by [`evaluate`] calls.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub fixed_point: FixedPointOptions,
    pub trajectories: TrajectoryConfig,
    /// Also compute the distance to the exact state on the same space.
    pub with_distance: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { fixed_point: FixedPointOptions::default(), trajectories: TrajectoryConfig::default(), with_distance: true }
    }
}

fn insert_state_observables(obs: &mut BTreeMap<String, f64>, rho: &DensityMatrix) -> Result<()> {
    let real = rho.to_basis(Basis::Real)?;
    let k = rho.to_basis(Basis::Reciprocal)?;
    obs.insert("n_total".into(), real.total_occupation());
    obs.insert("n_1".into(), real.occupation(0));
    obs.insert("n_2".into(), real.occupation(1));
    obs.insert("n_b".into(), k.occupation(0));
    obs.insert("n_ab".into(), k.occupation(1));
    obs.insert("top_population".into(), rho.top_population());
    Ok(())
}

/// Exact steady state in site coordinates, solved in the reciprocal basis
/// where the homogeneous drive conserves anti-bonding parity.
pub fn exact_state(p: &ModelParams, space: &FockSpace) -> Result<DensityMatrix> {
    steady_state(&build_liouvillian(p, space, Basis::Reciprocal)?)?.to_basis(Basis::Real)
}

/// Distance of a fixed-point state to `reference`.
fn fixed_point_eval(
    method: Method,
    report: &FixedPointReport,
    reference: Option<&FidelityReference>,
) -> Result<Evaluation> {
    let rho = report.primary().rho.to_basis(Basis::Real)?;
    let mut obs = BTreeMap::new();
    insert_state_observables(&mut obs, &rho)?;
    obs.insert("top_population".into(), report.top_population);
    obs.insert("solutions".into(), report.solutions.len() as f64);
    obs.insert("iterations".into(), report.iterations as f64);
    if let Some(r) = reference {
        obs.insert("distance".into(), r.distance(&rho)?);
    }
    Ok(Evaluation { method, observables: obs, rho: Some(rho) })
}

fn trajectory_eval(method: Method, e: &TrajectoryEnsemble, exact: Option<&DensityMatrix>) -> Result<Evaluation> {
    let rho = e.rho.to_basis(Basis::Real)?;
    let mut obs = BTreeMap::new();
    insert_state_observables(&mut obs, &rho)?;
    obs.remove("top_population");
    obs.insert("n_total_stderr".into(), e.total_occupation_stderr());
    if let Some(x) = exact {
        let reference = FidelityReference::new(&x.to_basis(e.rho.basis())?)?;
        let d = e.distance_to(&reference)?;
        obs.insert("distance".into(), d.distance);
        obs.insert("distance_stderr".into(), d.stderr);
        obs.insert("distance_corrected".into(), d.corrected);
    }
    Ok(Evaluation { method, observables: obs, rho: Some(rho) })
}

/// Evaluate `method` at `p` on the two-mode space `space`.
pub fn evaluate(method: Method, p: &ModelParams, space: &FockSpace, opts: &EvalOptions) -> Result<Evaluation> {
    p.validate()?;
    let exact = if opts.with_distance && method.has_state() && method != Method::Ed {
        Some(exact_state(p, space)?)
    } else {
        None
    };
    let reference = exact.as_ref().map(FidelityReference::new).transpose()?;
    let fp = &opts.fixed_point;
    let tc = &opts.trajectories;
    match method {
        Method::Ed => {
            let rho = exact_state(p, space)?;
            let mut obs = BTreeMap::new();
            insert_state_observables(&mut obs, &rho)?;
            obs.insert("epr_sum".into(), epr_variance_sum(&rho, optimal_theta_at_large_j(p)?)?.sum);
            Ok(Evaluation { method, observables: obs, rho: Some(rho) })
        }
        Method::Dw => {
            // Both limits keep `J + Δ` fixed.
            let site = ModelParams { j: 0.0, delta: p.detuning_sum(), ..*p }.site_kerr();
            let bond = p.bonding_kerr();
            let obs = BTreeMap::from([
                ("n_total_j0".to_string(), 2.0 * kerr::density(&site)?),
                ("n_total_jinf".to_string(), kerr::density(&bond)?),
                ("minvar_site".to_string(), kerr::min_quadrature_variance(&site)?.1),
                ("minvar_bonding".to_string(), kerr::min_quadrature_variance(&bond)?.1),
            ]);
            Ok(Evaluation { method, observables: obs, rho: None })
        }
        Method::Semiclassical => {
            let roots = homogeneous_roots(p)?;
            let stable: Vec<_> = roots.iter().filter(|r| r.stable).collect();
            let lowest = stable.first().map(|r| r.total_density()).unwrap_or(f64::NAN);
            let highest = stable.last().map(|r| r.total_density()).unwrap_or(f64::NAN);
            let obs = BTreeMap::from([
                ("n_total".to_string(), lowest),
                ("n_total_max".to_string(), highest),
                ("roots".to_string(), roots.len() as f64),
                ("stable_roots".to_string(), stable.len() as f64),
            ]);
            Ok(Evaluation { method, observables: obs, rho: None })
        }
        Method::Rdc => {
            let r = rdc_steady_state(p, space, &rdc_default_seeds(p)?, fp)?;
            fixed_point_eval(method, &r, reference.as_ref())
        }
        Method::Kdc => fixed_point_eval(method, &kdc_steady_state(p, space, fp)?, reference.as_ref()),
        Method::KdcGauss => fixed_point_eval(method, &kdc_gaussian_ab(p, space, fp)?, reference.as_ref()),
        Method::TrajFull => trajectory_eval(method, &trajectory_run(p, space, Basis::Real, tc)?, exact.as_ref()),
        Method::TrajGutzReal => {
            trajectory_eval(method, &gutzwiller_trajectory_run(p, space, Basis::Real, tc)?, exact.as_ref())
        }
        Method::TrajGutzK => {
            trajectory_eval(method, &gutzwiller_trajectory_run(p, space, Basis::Reciprocal, tc)?, exact.as_ref())
        }
        Method::TrajGaussAb => trajectory_eval(method, &gaussian_ab_trajectory_run(p, space, tc)?, exact.as_ref()),
        Method::GaussDimer => {
            let g = dimer_gaussian_steady_state(p)?;
            let theta = gaussian_optimal_theta(p)?;
            let obs = BTreeMap::from([
                ("n_total".to_string(), g.n_b + g.n_ab),
                ("n_b".to_string(), g.n_b),
                ("n_ab".to_string(), g.n_ab),
                ("epr_sum".to_string(), epr_from_gaussian(&g, theta)?.sum),
            ]);
            Ok(Evaluation { method, observables: obs, rho: None })
        }
    }
}

/// `y = prefactor * x^exponent`, fitted by least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Coefficient of determination of the log-log fit.
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return Err(Error::InvalidParameter("power-law fit needs two or more positive points".into()));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("power-law fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLawFit { exponent: slope, prefactor: (my - slope * mx).exp(), r_squared, points: logs.len() })
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced in logarithm.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Smallest cutoff at which the exact total density is stable to `tol`.
pub fn exact_cutoff(p: &ModelParams, rungs: &[usize], tol: f64) -> Result<CutoffReport> {
    converge_cutoff(|n| Ok(exact_state(p, &dimer_space(n)?)?.total_occupation()), rungs, tol)
}

fn flag_of(e: &Error) -> Option<String> {
    Some(e.to_string())
}

// ---------------------------------------------------------------- fig1: density versus drive

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Config {
    pub detuning_sum: f64,
    pub u: f64,
    /// Hopping of the exact curve.
    pub j: f64,
    pub f_grid: Vec<f64>,
    /// Fixed cutoff for the exact curve; `None` selects it at the largest drive.
    pub n_max: Option<usize>,
    pub cutoff_ladder: Vec<usize>,
    pub cutoff_tol: f64,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            detuning_sum: 2.0,
            u: 1.0,
            j: 0.25,
            f_grid: linspace(0.0, 1.6, 33),
            n_max: None,
            cutoff_ladder: ladder(10, 20, 2),
            cutoff_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig1Row {
    pub f: f64,
    /// `semiclassical`, `dw-j0`, `dw-jinf` or `ed`.
    pub curve: String,
    /// Root index for the semiclassical curve, ascending density; zero otherwise.
    pub branch: usize,
    pub stable: Option<bool>,
    pub n_total: f64,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig1Output {
    pub rows: Vec<Fig1Row>,
    pub n_max: usize,
    pub cutoff: Option<CutoffReport>,
    /// Drive window with three homogeneous roots.
    pub bistable_window: Option<(f64, f64)>,
}

pub fn fig1(cfg: &Fig1Config) -> Result<Fig1Output> {
    if cfg.f_grid.is_empty() {
        return Err(Error::InvalidParameter("empty drive grid".into()));
    }
    let at = |f: f64, j: f64| ModelParams::with_fixed_sum(j, cfg.detuning_sum, cfg.u, f);
    let (n_max, cutoff) = match cfg.n_max {
        Some(n) => (n, None),
        None => {
            let f_top = cfg.f_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let r = exact_cutoff(&at(f_top, cfg.j), &cfg.cutoff_ladder, cfg.cutoff_tol)?;
            (r.n_max, Some(r))
        }
    };
    let space = dimer_space(n_max)?;
    let per_point: Vec<Vec<Fig1Row>> = cfg
        .f_grid
        .par_iter()
        .map(|&f| {
            let mut rows = Vec::new();
            let row = |curve: &str, branch, stable, r: Result<f64>| {
                let (n_total, flag) = match r {
                    Ok(v) => (v, None),
                    Err(e) => (f64::NAN, flag_of(&e)),
                };
                Fig1Row { f, curve: curve.into(), branch, stable, n_total, flag }
            };
            match homogeneous_roots(&at(f, cfg.j)) {
                Ok(roots) => {
                    for (k, b) in roots.iter().enumerate() {
                        rows.push(row("semiclassical", k, Some(b.stable), Ok(b.total_density())));
                    }
                }
                Err(e) => rows.push(row("semiclassical", 0, None, Err(e))),
            }
            let p = at(f, cfg.j);
            rows.push(row("dw-j0", 0, None, kerr::density(&at(f, 0.0).site_kerr()).map(|n| 2.0 * n)));
            rows.push(row("dw-jinf", 0, None, kerr::density(&p.bonding_kerr())));
            rows.push(row("ed", 0, None, exact_state(&p, &space).map(|r| r.total_occupation())));
            rows
        })
        .collect();
    Ok(Fig1Output {
        rows: per_point.into_iter().flatten().collect(),
        n_max,
        cutoff,
        bistable_window: bistable_window(cfg.u, cfg.detuning_sum, 1.0),
    })
}

// ---------------------------------------------------------------- fig2: decoupling distances

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2Config {
    pub detuning_sum: f64,
    pub u: f64,
    pub f: f64,
    pub j_grid: Vec<f64>,
    /// Fixed cutoff; `None` selects it at the largest hopping.
    pub n_max: Option<usize>,
    pub cutoff_ladder: Vec<usize>,
    pub cutoff_tol: f64,
    pub methods: Vec<Method>,
    /// Hopping values of the trajectory markers.
    pub trajectory_j: Vec<f64>,
    pub trajectory_methods: Vec<Method>,
    /// Cutoff of the trajectory runs and of their exact reference.
    pub trajectory_n_max: usize,
    pub trajectories: TrajectoryConfig,
    pub rdc_fit: (f64, f64),
    pub kdc_fit: (f64, f64),
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            detuning_sum: 2.0,
            u: 1.0,
            f: 1.07,
            j_grid: logspace(0.02, 10.0, 25),
            n_max: None,
            cutoff_ladder: ladder(12, 20, 2),
            cutoff_tol: 1e-7,
            methods: vec![Method::Rdc, Method::Kdc, Method::KdcGauss],
            trajectory_j: vec![0.1, 0.3, 0.5, 1.0, 2.0],
            trajectory_methods: vec![Method::TrajGutzReal, Method::TrajGutzK, Method::TrajGaussAb],
            trajectory_n_max: 12,
            trajectories: TrajectoryConfig::default(),
            rdc_fit: (0.02, 0.2),
            kdc_fit: (2.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig2Row {
    pub j: f64,
    pub method: Method,
    pub n_max: usize,
    pub distance: f64,
    /// Jackknife standard error; NaN for deterministic methods.
    pub stderr: f64,
    /// Jackknife bias-corrected distance; equal to `distance` for deterministic methods.
    pub corrected: f64,
    /// Number of self-consistent solutions; the reported one is seeded from the vacuum.
    pub solutions: usize,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig2Output {
    pub rows: Vec<Fig2Row>,
    pub n_max: usize,
    pub cutoff: Option<CutoffReport>,
    pub rdc_fit: Option<PowerLawFit>,
    pub kdc_fit: Option<PowerLawFit>,
}

fn fig2_point(p: &ModelParams, space: &FockSpace, methods: &[Method], opts: &EvalOptions) -> Vec<Fig2Row> {
    let n_max = space.n_max();
    let failed = |method, e: &Error| Fig2Row {
        j: p.j,
        method,
        n_max,
        distance: f64::NAN,
        stderr: f64::NAN,
        corrected: f64::NAN,
        solutions: 0,
        flag: flag_of(e),
    };
    let exact = match exact_state(p, space) {
        Ok(x) => x,
        Err(e) => return methods.iter().map(|&m| failed(m, &e)).collect(),
    };
    let reference = match FidelityReference::new(&exact) {
        Ok(r) => r,
        Err(e) => return methods.iter().map(|&m| failed(m, &e)).collect(),
    };
    let no_distance = EvalOptions { with_distance: false, ..*opts };
    methods
        .iter()
        .map(|&m| {
            let run = || -> Result<Fig2Row> {
                if m.is_stochastic() {
                    let e = evaluate(m, p, space, opts)?;
                    let d = e.get("distance")?;
                    Ok(Fig2Row {
                        j: p.j,
                        method: m,
                        n_max,
                        distance: d,
                        stderr: e.get("distance_stderr")?,
                        corrected: e.get("distance_corrected")?,
                        solutions: 1,
                        flag: None,
                    })
                } else {
                    let e = evaluate(m, p, space, &no_distance)?;
                    let rho = e.rho.as_ref().ok_or_else(|| Error::InvalidParameter(format!("{m} has no state")))?;
                    let d = reference.distance(rho)?;
                    let solutions = e.get("solutions")? as usize;
                    let top = e.get("top_population")?;
                    let flag = (top > crate::gutzwiller::TOP_POPULATION_FLAG)
                        .then(|| format!("top population {top:.2e}"));
                    Ok(Fig2Row { j: p.j, method: m, n_max, distance: d, stderr: f64::NAN, corrected: d, solutions, flag })
                }
            };
            run().unwrap_or_else(|e| failed(m, &e))
        })
        .collect()
}

fn fit_window(rows: &[Fig2Row], method: Method, (lo, hi): (f64, f64)) -> Option<PowerLawFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.method == method && r.j >= lo * (1.0 - 1e-12) && r.j <= hi * (1.0 + 1e-12))
        .filter(|r| r.distance.is_finite() && r.solutions <= 1)
        .map(|r| (r.j, r.distance))
        .collect();
    fit_power_law(&pts).ok()
}

pub fn fig2(cfg: &Fig2Config, fixed_point: &FixedPointOptions) -> Result<Fig2Output> {
    if cfg.j_grid.is_empty() && cfg.trajectory_j.is_empty() {
        return Err(Error::InvalidParameter("empty hopping grid".into()));
    }
    let at = |j: f64| ModelParams::with_fixed_sum(j, cfg.detuning_sum, cfg.u, cfg.f);
    let (n_max, cutoff) = match cfg.n_max {
        Some(n) => (n, None),
        None if !cfg.j_grid.is_empty() => {
            let j_top = cfg.j_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let r = exact_cutoff(&at(j_top), &cfg.cutoff_ladder, cfg.cutoff_tol)?;
            (r.n_max, Some(r))
        }
        None => (cfg.trajectory_n_max, None),
    };
    let opts = EvalOptions { fixed_point: *fixed_point, trajectories: cfg.trajectories, with_distance: true };
    let space = dimer_space(n_max)?;
    let mut rows: Vec<Fig2Row> =
        cfg.j_grid.par_iter().map(|&j| fig2_point(&at(j), &space, &cfg.methods, &opts)).flatten().collect();
    let rdc_fit = fit_window(&rows, Method::Rdc, cfg.rdc_fit);
    let kdc_fit = fit_window(&rows, Method::Kdc, cfg.kdc_fit);
    if !cfg.trajectory_methods.is_empty() && !cfg.trajectory_j.is_empty() {
        let tspace = dimer_space(cfg.trajectory_n_max)?;
        // Trajectory runs parallelize internally; points run one after another.
        for &j in &cfg.trajectory_j {
            rows.extend(fig2_point(&at(j), &tspace, &cfg.trajectory_methods, &opts));
        }
    }
    Ok(Fig2Output { rows, n_max, cutoff, rdc_fit, kdc_fit })
}

/// First hopping on `j_grid` (ascending) at which the site-product
/// decoupling has more than one fixed point, with the solution counts.
pub fn rdc_onset(
    detuning_sum: f64,
    u: f64,
    f: f64,
    j_grid: &[f64],
    n_max: usize,
    opts: &FixedPointOptions,
) -> Result<(Option<f64>, Vec<(f64, usize)>)> {
    let space = dimer_space(n_max)?;
    let counts: Vec<Result<(f64, usize)>> = j_grid
        .par_iter()
        .map(|&j| {
            let p = ModelParams::with_fixed_sum(j, detuning_sum, u, f);
            let r = rdc_steady_state(&p, &space, &rdc_default_seeds(&p)?, opts)?;
            Ok((j, r.solutions.len()))
        })
        .collect();
    let counts: Vec<(f64, usize)> = counts.into_iter().collect::<Result<_>>()?;
    let onset = counts.iter().find(|(_, n)| *n > 1).map(|(j, _)| *j);
    Ok((onset, counts))
}

// ---------------------------------------------------------------- fig3: single-mode squeezing

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Config {
    pub delta: f64,
    pub u_values: Vec<f64>,
    /// Grid of `F sqrt(U)`.
    pub x_grid: Vec<f64>,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self { delta: 1.0, u_values: vec![1.0, 0.1, 0.01], x_grid: logspace(0.0035, 0.7, 200) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig3Row {
    pub x: f64,
    pub u: f64,
    pub minvar_exact: f64,
    /// Gaussian fluctuations around the lowest semiclassical root; NaN once
    /// only the upper branch remains.
    pub minvar_gaussian: f64,
    pub bistable: bool,
    pub flag: Option<String>,
}

/// Minimal quadrature variance of the Gaussian approximation on the lowest
/// semiclassical branch, with its angle, or `None` if that branch is gone.
pub fn gaussian_min_variance(p: &KerrParams) -> Result<Option<(f64, f64)>> {
    let fields = kerr::semiclassical_fields(p)?;
    let window = bistable_window(p.u, p.delta, p.gamma);
    if let Some((_, hi)) = window {
        if p.f.norm() > hi {
            return Ok(None);
        }
    }
    let alpha = fields[0];
    Ok(Some(kerr::gaussian_fluctuations(p, alpha)?.min_quadrature_variance()))
}

pub fn fig3(cfg: &Fig3Config) -> Result<Vec<Fig3Row>> {
    if cfg.u_values.is_empty() || cfg.x_grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let points: Vec<(f64, f64)> =
        cfg.u_values.iter().flat_map(|&u| cfg.x_grid.iter().map(move |&x| (u, x))).collect();
    Ok(points
        .par_iter()
        .map(|&(u, x)| {
            let p = KerrParams::from_scaled_drive(cfg.delta, u, x);
            let bistable = bistable_window(u, cfg.delta, 1.0).is_some_and(|(lo, hi)| p.f.norm() >= lo && p.f.norm() <= hi);
            let mut flag = None;
            let minvar_exact = kerr::min_quadrature_variance(&p).map(|v| v.1).unwrap_or_else(|e| {
                flag = flag_of(&e);
                f64::NAN
            });
            let minvar_gaussian = match gaussian_min_variance(&p) {
                Ok(Some((_, v))) => v,
                Ok(None) => f64::NAN,
                Err(e) => {
                    flag.get_or_insert(e.to_string());
                    f64::NAN
                }
            };
            Fig3Row { x, u, minvar_exact, minvar_gaussian, bistable, flag }
        })
        .collect())
}

// ---------------------------------------------------------------- fig4: EPR variance sum

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig4Panel {
    pub u: f64,
    /// `F sqrt(U)`.
    pub x: f64,
    /// `Δ + J`.
    pub detuning_sum: f64,
    pub j_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig4Config {
    pub exact: Fig4Panel,
    pub gaussian: Fig4Panel,
    pub n_max: usize,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Self {
            exact: Fig4Panel { u: 1.0, x: 0.33, detuning_sum: 1.0, j_grid: logspace(0.01, 50.0, 40) },
            gaussian: Fig4Panel { u: 0.01, x: 0.48, detuning_sum: 1.0, j_grid: logspace(0.01, 50.0, 40) },
            n_max: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fig4Row {
    /// `exact` or `gaussian`.
    pub panel: String,
    pub j: f64,
    pub theta: f64,
    pub sum: f64,
    pub asymptote: f64,
    pub entangled: bool,
    pub flag: Option<String>,
}

/// Angle minimizing the bonding-mode Gaussian variance without the
/// anti-bonding mode; zero without interaction.
pub fn gaussian_optimal_theta(p: &ModelParams) -> Result<f64> {
    if p.u == 0.0 {
        return Ok(0.0);
    }
    Ok(gaussian_bonding_minimum(p)?.0)
}

fn gaussian_bonding_minimum(p: &ModelParams) -> Result<(f64, f64)> {
    gaussian_min_variance(&p.bonding_kerr())?
        .ok_or_else(|| Error::Unphysical("lowest bonding branch absent at this drive".into()))
}

/// `2 min_θ (ΔX_B^θ)² + 1` in the Gaussian approximation.
pub fn gaussian_single_mode_asymptote(p: &ModelParams) -> Result<f64> {
    if p.u == 0.0 {
        return Ok(2.0);
    }
    Ok(2.0 * gaussian_bonding_minimum(p)?.1 + 1.0)
}

pub fn fig4(cfg: &Fig4Config) -> Result<Vec<Fig4Row>> {
    let space = dimer_space(cfg.n_max)?;
    let params = |panel: &Fig4Panel, j: f64| ModelParams::with_fixed_sum(j, panel.detuning_sum, panel.u, panel.x / panel.u.sqrt());
    let row = |panel: &str, j: f64, r: Result<(f64, f64, f64)>| match r {
        Ok((theta, sum, asymptote)) => {
            Fig4Row { panel: panel.into(), j, theta, sum, asymptote, entangled: sum < 2.0, flag: None }
        }
        Err(e) => Fig4Row {
            panel: panel.into(),
            j,
            theta: f64::NAN,
            sum: f64::NAN,
            asymptote: f64::NAN,
            entangled: false,
            flag: flag_of(&e),
        },
    };
    let mut rows: Vec<Fig4Row> = cfg
        .exact
        .j_grid
        .par_iter()
        .map(|&j| {
            let p = params(&cfg.exact, j);
            let r = (|| {
                let theta = optimal_theta_at_large_j(&p)?;
                let rho = exact_state(&p, &space)?;
                Ok((theta, epr_variance_sum(&rho, theta)?.sum, single_mode_asymptote(&p)?))
            })();
            row("exact", j, r)
        })
        .collect();
    rows.extend(cfg.gaussian.j_grid.par_iter().map(|&j| {
        let p = params(&cfg.gaussian, j);
        let r = (|| {
            let theta = gaussian_optimal_theta(&p)?;
            let g = dimer_gaussian_steady_state(&p)?;
            Ok((theta, epr_from_gaussian(&g, theta)?.sum, gaussian_single_mode_asymptote(&p)?))
        })();
        row("gaussian", j, r)
    }).collect::<Vec<_>>());
    Ok(rows)
}

/// Moments of the bonding mode in the single-mode Gaussian approximation.
pub fn gaussian_bonding_moments(p: &ModelParams) -> Result<ModeMoments> {
    let k = p.bonding_kerr();
    kerr::gaussian_fluctuations(&k, kerr::semiclassical_fields(&k)?[0])
}
