//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion, with the
//! measured values and pinned tolerances, preceded by indented details.
//!
//! Run a subset with `cargo test --test acceptance -- 1 2 9`. The process
//! exits nonzero on a failed criterion only when `BHDIMER_ACCEPTANCE_STRICT`
//! is set, so that the report stays part of a green `cargo test` run.

use std::time::Instant;

use bhdimer_core::checks::random_density_matrix;
use bhdimer_core::entanglement::{epr_variance_sum, optimal_theta_at_large_j};
use bhdimer_core::figures::{
    self, exact_state, fig1, fig2, fig3, fig4, gaussian_optimal_theta, linspace, rdc_onset, Fig1Config, Fig2Config,
    Fig3Config, Fig4Config, Method,
};
use bhdimer_core::fock::{Basis, FockSpace};
use bhdimer_core::gutzwiller::{
    kdc_steady_state, rdc_default_seeds, rdc_steady_state, single_mode_moments, squeezed_thermal_dm,
    FixedPointOptions, SqueezedThermalParams,
};
use bhdimer_core::kerr::{self, KerrParams, ModeMoments};
use bhdimer_core::liouvillian::build_liouvillian;
use bhdimer_core::semiclassical::{bistable_window, density_roots};
use bhdimer_core::state::{dimer_space, fidelity, DensityMatrix, FidelityReference};
use bhdimer_core::steady::{converge_cutoff, ladder, steady_state};
use bhdimer_core::trajectory::{gutzwiller_trajectory_run, trajectory_run, GaussianWavefunction};
use bhdimer_core::{ModelParams, TrajectoryConfig, TrajectoryEnsemble};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Log(Vec<String>);

impl Log {
    fn line(&mut self, s: impl Into<String>) {
        let s = s.into();
        println!("    {s}");
        self.0.push(s);
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

// Decoupling setup: J + Δ = 2, U = 1, F = 1.07.
const FIG2_SUM: f64 = 2.0;
const FIG2_F: f64 = 1.07;

fn fig2_params(j: f64) -> ModelParams {
    ModelParams::with_fixed_sum(j, FIG2_SUM, 1.0, FIG2_F)
}

fn kerr_ed(kp: &KerrParams, n: usize) -> bhdimer_core::Result<DensityMatrix> {
    steady_state(&kp.model().liouvillian(&FockSpace::single(n)?)?)
}

// ------------------------------------------------------------------ 1

fn c1(log: &mut Log) -> Res<(bool, String)> {
    let t = Instant::now();
    let kp = KerrParams::new(0.0, 0.0, 1.0);
    let cutoff = converge_cutoff(|n| Ok(kerr_ed(&kp, n)?.occupation(0)), &ladder(20, 60, 5), 1e-10)?;
    let expected = (kp.f / C64::new(kp.delta, 0.5)).norm_sqr();
    let secs = t.elapsed().as_secs_f64();
    let err = (cutoff.value - expected).abs();
    log.line(format!("closed form |F/(Δ+iγ/2)|² = {expected}; cutoff history {:?}", cutoff.history));
    let ok = err < 1e-8 && secs < 1.0;
    Ok((ok, format!("<n> = {:.12} at n_max {} (|err| {err:.1e} < 1e-8), {secs:.2} s < 1 s", cutoff.value, cutoff.n_max)))
}

// ------------------------------------------------------------------ 2

fn c2(log: &mut Log) -> Res<(bool, String)> {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut points = 0;
    for u in [0.1, 1.0] {
        let (lo, hi) = bistable_window(u, 1.0, 1.0).ok_or("no bistable window at Δ = γ")?;
        let grid = linspace(0.7 * lo, 1.3 * hi, 20);
        let mut w = 0.0f64;
        for &f in &grid {
            let kp = KerrParams::new(1.0, u, f);
            let rungs = ladder(20, 200, 10);
            let ed = converge_cutoff(|n| Ok(kerr_ed(&kp, n)?.occupation(0)), &rungs, 1e-9)?;
            let dw = kerr::density(&kp)?;
            w = w.max((dw - ed.value).abs());
            points += 1;
        }
        log.line(format!("U = {u}: window F ∈ [{lo:.4}, {hi:.4}], grid [{:.4}, {:.4}], max |DW - ED| = {w:.2e}", grid[0], grid[19]));
        worst = worst.max(w);
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = worst < 1e-6 && secs < 30.0;
    Ok((ok, format!("{points} drive points, max |DW - ED| {worst:.2e} < 1e-6, {secs:.1} s < 30 s")))
}

// ------------------------------------------------------------------ 3

fn c3(log: &mut Log) -> Res<(bool, String)> {
    // Three roots exactly inside a finite window.
    let (lo, hi) = bistable_window(1.0, 2.0, 1.0).ok_or("no window at J + Δ = 2")?;
    let scan = linspace(0.0, 1.6, 401);
    let mut s_curve = hi.is_finite() && hi > lo;
    for &f in &scan {
        let roots = density_roots(1.0, 2.0, f * f, 1.0).len();
        let inside = f > lo && f < hi;
        let margin = (f - lo).abs().min((f - hi).abs()) > 1e-9;
        if margin && (roots == 3) != inside {
            s_curve = false;
        }
    }
    log.line(format!("S-curve: three roots for F ∈ ({lo:.4}, {hi:.4}), one outside: {}", mark(s_curve)));

    // No window below J + Δ = sqrt(3)/2.
    let absent = bistable_window(1.0, 0.5, 1.0).is_none()
        && linspace(0.0, 3.0, 601).iter().all(|f| density_roots(1.0, 0.5, f * f, 1.0).len() == 1);
    log.line(format!("J + Δ = 0.5: single root over F ∈ [0, 3]: {}", mark(absent)));

    // Single-mode limits bracket the exact curve at J = 0.25.
    let t = Instant::now();
    let cfg = Fig1Config { f_grid: linspace(0.0, 1.6, 17), ..Fig1Config::default() };
    let out = fig1(&cfg)?;
    let get = |f: f64, curve: &str| {
        out.rows.iter().find(|r| r.f == f && r.curve == curve).map(|r| r.n_total).unwrap_or(f64::NAN)
    };
    let mut bracket = true;
    let mut outside = Vec::new();
    for &f in &cfg.f_grid {
        let (ed, a, b) = (get(f, "ed"), get(f, "dw-j0"), get(f, "dw-jinf"));
        let (lo, hi) = (a.min(b), a.max(b));
        let inside = ed >= lo - 1e-6 && ed <= hi + 1e-6;
        if !inside {
            bracket = false;
            outside.push(format!("{f:.2}"));
        }
        log.line(format!(
            "F = {f:.2}: ED {ed:.5}  DW(J=0) {a:.5}  DW(J→∞) {b:.5}  {}",
            if inside { "inside" } else { "OUTSIDE" }
        ));
    }
    log.line(format!("ED cutoff n_max = {} ({:.0} s)", out.n_max, t.elapsed().as_secs_f64()));
    let ok = s_curve && absent && bracket;
    Ok((
        ok,
        format!(
            "S-curve {}, no window at J+Δ=0.5 {}, DW limits bracket ED {} (outside at F = {})",
            mark(s_curve),
            mark(absent),
            mark(bracket),
            if outside.is_empty() { "none".into() } else { outside.join(", ") }
        ),
    ))
}

// ------------------------------------------------------------------ 4

fn c4(log: &mut Log) -> Res<(bool, String)> {
    let t = Instant::now();
    let cfg = Fig2Config {
        methods: vec![Method::Rdc, Method::Kdc],
        trajectory_j: Vec::new(),
        ..Fig2Config::default()
    };
    let out = fig2(&cfg, &FixedPointOptions::default())?;
    let secs = t.elapsed().as_secs_f64();
    log.line(format!("F = {FIG2_F}, n_max = {} from cutoff history {:?}", out.n_max, out.cutoff.as_ref().map(|c| &c.history)));
    for r in &out.rows {
        log.line(format!(
            "{:>4} J = {:.4}: d = {:.4e}, solutions {}{}",
            r.method.name(),
            r.j,
            r.distance,
            r.solutions,
            r.flag.as_deref().map(|f| format!(" [{f}]")).unwrap_or_default()
        ));
    }
    let rdc = out.rdc_fit.ok_or("no RDC fit")?;
    let kdc = out.kdc_fit.ok_or("no KDC fit")?;
    let magnitude = |a: f64, b: f64| (a / b).log10().abs() < 1.0;
    let rdc_ok = (rdc.exponent - 2.0).abs() <= 0.2;
    let kdc_ok = (kdc.exponent + 1.86).abs() <= 0.3;
    let pre_ok = magnitude(rdc.prefactor, 0.5) && magnitude(kdc.prefactor, 0.16);
    log.line(format!("RDC fit: {:.3} J^{:.3} (R² {:.4}, {} points)", rdc.prefactor, rdc.exponent, rdc.r_squared, rdc.points));
    log.line(format!("KDC fit: {:.3} J^{:.3} (R² {:.4}, {} points)", kdc.prefactor, kdc.exponent, kdc.r_squared, kdc.points));
    let ok = rdc_ok && kdc_ok && pre_ok && secs < 600.0;
    Ok((
        ok,
        format!(
            "RDC exponent {:.3} ∈ 2.0 ± 0.2, KDC exponent {:.3} ∈ -1.86 ± 0.3, prefactors {:.3}/{:.3} within 10x of 0.5/0.16, {secs:.0} s < 600 s",
            rdc.exponent, kdc.exponent, rdc.prefactor, kdc.prefactor
        ),
    ))
}

// ------------------------------------------------------------------ 5

fn c5(log: &mut Log) -> Res<(bool, String)> {
    let grid: Vec<f64> = (0..=50).map(|k| 1.3 + 0.01 * k as f64).collect();
    let n_max = 12;
    let (onset, counts) = rdc_onset(FIG2_SUM, 1.0, FIG2_F, &grid, n_max, &FixedPointOptions::default())?;
    let summary: Vec<String> = counts.iter().map(|(j, n)| format!("{j:.2}:{n}")).collect();
    log.line(format!("solution counts at n_max {n_max}: {}", summary.join(" ")));
    // Multistability must persist once it has appeared.
    let persistent = onset.is_some_and(|j0| counts.iter().filter(|(j, _)| *j >= j0).all(|(_, n)| *n > 1));
    let ok = onset.is_some_and(|j| (1.4..=1.7).contains(&j)) && persistent;
    Ok((
        ok,
        format!(
            "onset J = {} ∈ [1.4, 1.7], multistable above onset {}",
            onset.map(|j| format!("{j:.2}")).unwrap_or("none".into()),
            mark(persistent)
        ),
    ))
}

// ------------------------------------------------------------------ 6

fn c6(log: &mut Log) -> Res<(bool, String)> {
    let t = Instant::now();
    let space = dimer_space(12)?;
    let cfg = TrajectoryConfig { seed: 6, ..TrajectoryConfig::default() };
    let opts = FixedPointOptions::default();
    let mut ok = cfg.n_traj >= 500;
    let mut worst = f64::NEG_INFINITY;
    for j in [0.1, 0.3, 0.5, 1.0, 2.0] {
        let p = fig2_params(j);
        let exact = exact_state(&p, &space)?;
        let rdc = rdc_steady_state(&p, &space, &rdc_default_seeds(&p)?, &opts)?;
        let kdc = kdc_steady_state(&p, &space, &opts)?;
        for (basis, dm) in [(Basis::Real, &rdc), (Basis::Reciprocal, &kdc)] {
            let d_dm = 1.0 - fidelity(&dm.primary().rho.to_basis(Basis::Real)?, &exact)?;
            let reference = FidelityReference::new(&exact.to_basis(basis)?)?;
            let e = gutzwiller_trajectory_run(&p, &space, basis, &cfg)?;
            let d = e.distance_to(&reference)?;
            let pass = d.distance - 2.0 * d.stderr <= d_dm;
            worst = worst.max((d.distance - 2.0 * d.stderr) - d_dm);
            ok &= pass;
            log.line(format!(
                "J = {j:<4} {:<10}: trajectory d = {:.4e} ± {:.1e} (jackknife {:.4e}), density matrix d = {:.4e} ({} solutions) {}",
                format!("{basis:?}"),
                d.distance,
                d.stderr,
                d.corrected,
                d_dm,
                dm.solutions.len(),
                mark(pass)
            ));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 1800.0;
    Ok((
        ok,
        format!(
            "trajectory ≤ density-matrix distance within 2 se at 5 J in both bases (max d_traj - 2se - d_dm = {worst:.2e}), n_traj {}, {secs:.0} s < 1800 s",
            cfg.n_traj
        ),
    ))
}

// ------------------------------------------------------------------ 7, 8

struct FullRuns {
    exact: DensityMatrix,
    coarse: Vec<(Basis, TrajectoryEnsemble)>,
    cfg: TrajectoryConfig,
}

fn full_runs(log: &mut Log) -> Res<FullRuns> {
    let p = fig2_params(0.25);
    let space = dimer_space(12)?;
    let exact = exact_state(&p, &space)?;
    let cfg = TrajectoryConfig { n_traj: 300, t_total: 60.0, seed: 7, ..TrajectoryConfig::default() };
    let mut coarse = Vec::new();
    for basis in [Basis::Real, Basis::Reciprocal] {
        let t = Instant::now();
        coarse.push((basis, trajectory_run(&p, &space, basis, &cfg)?));
        log.line(format!("{basis:?} basis, dt {}: {:.0} s", cfg.dt, t.elapsed().as_secs_f64()));
    }
    Ok(FullRuns { exact, coarse, cfg })
}

fn c7(runs: &FullRuns, log: &mut Log) -> Res<(bool, String)> {
    let n_ed = runs.exact.total_occupation();
    let mut ok = true;
    let mut ds = Vec::new();
    for (basis, e) in &runs.coarse {
        let d = e.distance_to(&FidelityReference::new(&runs.exact.to_basis(*basis)?)?)?;
        ok &= d.distance < 0.03;
        ds.push(d.distance);
        log.line(format!(
            "{basis:?}: d = {:.3e} ± {:.1e}, n_T = {:.4} ± {:.4} (ED {n_ed:.4}), steps with jump probability > 0.1: {}",
            d.distance,
            d.stderr,
            e.total_occupation(),
            e.total_occupation_stderr(),
            e.warn_steps()
        ));
    }
    let (a, b) = (&runs.coarse[0].1, &runs.coarse[1].1);
    let diff = (a.total_occupation() - b.total_occupation()).abs();
    let se = a.total_occupation_stderr().hypot(b.total_occupation_stderr());
    let agree = diff < 2.0 * se;
    ok &= agree;
    Ok((
        ok,
        format!(
            "d = {:.2e} (real), {:.2e} (reciprocal) < 0.03; |Δn_T| real vs reciprocal {diff:.3} < 2 se = {:.3}; {} trajectories",
            ds[0],
            ds[1],
            2.0 * se,
            runs.cfg.n_traj
        ),
    ))
}

fn c8(runs: &FullRuns, log: &mut Log) -> Res<(bool, String)> {
    let p = fig2_params(0.25);
    let space = runs.exact.space().clone();
    let fine = runs.cfg.with_dt(runs.cfg.dt / 2.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for (basis, coarse) in &runs.coarse {
        let t = Instant::now();
        let e = trajectory_run(&p, &space, *basis, &fine)?;
        let diff = (e.total_occupation() - coarse.total_occupation()).abs();
        let se = e.total_occupation_stderr().hypot(coarse.total_occupation_stderr());
        ok &= diff < 2.0 * se;
        log.line(format!(
            "{basis:?}: n_T(dt {}) = {:.4} ± {:.4}, n_T(dt {}) = {:.4} ± {:.4}, {:.0} s",
            runs.cfg.dt,
            coarse.total_occupation(),
            coarse.total_occupation_stderr(),
            fine.dt,
            e.total_occupation(),
            e.total_occupation_stderr(),
            t.elapsed().as_secs_f64()
        ));
        parts.push(format!("{basis:?} |Δn_T| {diff:.3} < 2 se = {:.3}", 2.0 * se));
    }
    Ok((ok, format!("dt {} → {}: {}", runs.cfg.dt, fine.dt, parts.join(", "))))
}

// ------------------------------------------------------------------ 9

fn c9(log: &mut Log) -> Res<(bool, String)> {
    // The window in F√U does not depend on U; resolve it beyond the default grid.
    let (lo, hi) = bistable_window(1.0, 1.0, 1.0).ok_or("no window")?;
    let mut cfg = Fig3Config { u_values: vec![1.0, 0.01], ..Fig3Config::default() };
    cfg.x_grid.extend(linspace(lo, hi, 22).into_iter().skip(1).take(20));
    cfg.x_grid.sort_by(f64::total_cmp);
    let rows = fig3(&cfg)?;
    log.line(format!("bistable window in F√U: [{lo:.4}, {hi:.4}], {} log-spaced points plus 20 inside the window", cfg.x_grid.len() - 20));

    let strong: Vec<_> = rows.iter().filter(|r| r.u == 1.0).collect();
    let before = strong.iter().filter(|r| !r.bistable && r.x < lo).map(|r| r.minvar_exact).fold(f64::INFINITY, f64::min);
    let inside: Vec<f64> = strong.iter().filter(|r| r.bistable).map(|r| r.minvar_exact).collect();
    let inside_min = inside.iter().copied().fold(f64::INFINITY, f64::min);
    let dips = before < 0.5;
    let exceeds = !inside.is_empty() && inside_min > 0.5;
    log.line(format!("U = 1: min variance before window {before:.4}, inside window {inside_min:.4}..{:.4} ({} points)",
        inside.iter().copied().fold(f64::NEG_INFINITY, f64::max), inside.len()));

    let weak: Vec<_> = rows.iter().filter(|r| r.u == 0.01).collect();
    let agree = weak
        .iter()
        .filter(|r| r.x <= 0.3)
        .map(|r| ((r.minvar_gaussian - r.minvar_exact) / r.minvar_exact).abs())
        .fold(0.0f64, f64::max);
    let in_window: Vec<_> = weak.iter().filter(|r| r.bistable && r.minvar_gaussian.is_finite()).collect();
    let lower = !in_window.is_empty() && in_window.iter().all(|r| r.minvar_gaussian < r.minvar_exact);
    let split = in_window.iter().map(|r| (r.minvar_exact - r.minvar_gaussian) / r.minvar_exact).fold(0.0f64, f64::max);
    for r in in_window.iter().step_by(4) {
        log.line(format!("U = 0.01, F√U = {:.4}: exact {:.4}, Gaussian {:.4}", r.x, r.minvar_exact, r.minvar_gaussian));
    }
    let diverge = split > 0.02;
    let ok = dips && exceeds && agree < 0.02 && lower && diverge;
    Ok((
        ok,
        format!(
            "U=1: dips to {before:.3} < 1/2 before, > 1/2 inside (min {inside_min:.3}); U=0.01: rel diff {agree:.1e} < 2% at F√U ≤ 0.3, Gaussian lower inside {} (split up to {:.0}%)",
            mark(lower),
            100.0 * split
        ),
    ))
}

// ------------------------------------------------------------------ 10

/// Bonding and anti-bonding moments of two identical uncorrelated sites.
fn uncoupled_modes(site: &ModeMoments) -> (ModeMoments, ModeMoments) {
    let a = site.alpha;
    let b = ModeMoments { alpha: a * std::f64::consts::SQRT_2, n: site.n + a.norm_sqr(), m: site.m + a * a };
    let ab = ModeMoments { alpha: C64::new(0.0, 0.0), n: site.n - a.norm_sqr(), m: site.m - a * a };
    (b, ab)
}

fn panel_features(rows: &[&figures::Fig4Row], log: &mut Log, name: &str) -> (bool, bool, f64, f64) {
    let (imin, rmin) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.sum.total_cmp(&b.1.sum))
        .map(|(i, r)| (i, *r))
        .unwrap();
    let interior = imin > 0 && imin + 1 < rows.len();
    let last = rows.last().unwrap();
    let gap = (last.sum - last.asymptote).abs();
    log.line(format!(
        "{name}: θ = {:.4}, sum(J={:.3}) = {:.4}, minimum {:.4} at J = {:.3}, sum(J={}) = {:.5}, asymptote {:.5}",
        rmin.theta, rows[0].j, rows[0].sum, rmin.sum, rmin.j, last.j, last.sum, last.asymptote
    ));
    (rmin.sum < 2.0, interior, rmin.sum, gap)
}

fn c10(log: &mut Log) -> Res<(bool, String)> {
    let cfg = Fig4Config::default();
    let rows = fig4(&cfg)?;
    if let Some(r) = rows.iter().find(|r| r.flag.is_some()) {
        return Err(format!("{} panel failed at J = {}: {}", r.panel, r.j, r.flag.as_deref().unwrap_or("")).into());
    }
    let exact: Vec<_> = rows.iter().filter(|r| r.panel == "exact").collect();
    let gauss: Vec<_> = rows.iter().filter(|r| r.panel == "gaussian").collect();
    let mut ok = true;
    let mut parts = Vec::new();

    // J → 0 limit: the uncoupled product of two driven Kerr sites.
    let j0 = 1e-5;
    let tiny = Fig4Config {
        exact: figures::Fig4Panel { j_grid: vec![j0], ..cfg.exact.clone() },
        gaussian: figures::Fig4Panel { j_grid: vec![j0], ..cfg.gaussian.clone() },
        n_max: cfg.n_max,
    };
    let limit = fig4(&tiny)?;
    let at_zero = |panel: &figures::Fig4Panel| ModelParams::with_fixed_sum(0.0, panel.detuning_sum, panel.u, panel.x / panel.u.sqrt());

    let pe = at_zero(&cfg.exact);
    let site = kerr_ed(&pe.site_kerr(), cfg.n_max)?;
    let product = DensityMatrix::product(&dimer_space(cfg.n_max)?, Basis::Real, &site, &site)?;
    let theta_e = optimal_theta_at_large_j(&fig4_params(&cfg.exact, j0))?;
    let oracle_e = epr_variance_sum(&product, theta_e)?.sum;

    let pg = at_zero(&cfg.gaussian);
    let kp = pg.site_kerr();
    let g_site = kerr::gaussian_fluctuations(&kp, kerr::semiclassical_fields(&kp)?[0])?;
    let (b, ab) = uncoupled_modes(&g_site);
    let theta_g = gaussian_optimal_theta(&fig4_params(&cfg.gaussian, j0))?;
    let oracle_g = 2.0 * b.quadrature_variance(theta_g) + 2.0 * ab.conjugate_variance(theta_g);

    for (name, panel_rows, lim, oracle) in [
        ("exact", &exact, limit.iter().find(|r| r.panel == "exact").unwrap(), oracle_e),
        ("gaussian", &gauss, limit.iter().find(|r| r.panel == "gaussian").unwrap(), oracle_g),
    ] {
        let (below, interior, min, gap) = panel_features(panel_rows, log, name);
        let lim_ok = (lim.sum - oracle).abs() < 1e-3 && lim.sum >= 2.0;
        log.line(format!(
            "{name}: sum(J={j0:.0e}) = {:.5}, uncoupled sites {oracle:.5} (≥ 2, not entangled) {}",
            lim.sum,
            mark(lim_ok)
        ));
        let pass = lim_ok && below && interior && gap < 1e-2;
        ok &= pass;
        parts.push(format!(
            "{name}: J→0 uncoupled limit {:.3} {}, minimum {min:.3} < 2 at finite J {}, |sum(50) - asymptote| {gap:.1e} < 1e-2",
            lim.sum,
            mark(lim_ok),
            mark(below && interior)
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn fig4_params(panel: &figures::Fig4Panel, j: f64) -> ModelParams {
    ModelParams::with_fixed_sum(j, panel.detuning_sum, panel.u, panel.x / panel.u.sqrt())
}

// ------------------------------------------------------------------ 11

/// Pure state with amplitudes damped as `0.3^k`.
fn low_photon_pure(space: &FockSpace, rng: &mut impl Rng) -> bhdimer_core::Result<DensityMatrix> {
    let psi = bhdimer_core::linalg::CVector::from_fn(space.dim(), |k, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 0.3f64.powi(k as i32)
    });
    let psi = &psi / C64::new(psi.norm(), 0.0);
    DensityMatrix::pure(space.clone(), Basis::Real, &psi)
}

fn c11(log: &mut Log) -> Res<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok = true;
    let mut parts = Vec::new();

    let space = dimer_space(3)?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = random_density_matrix(&space, Basis::Real, &mut rng)?;
        let b = random_density_matrix(&space, Basis::Real, &mut rng)?;
        let fab = fidelity(&a, &b)?;
        let range = if (0.0..=1.0 + 1e-12).contains(&fab) { 0.0 } else { 1.0 };
        worst = worst.max((fab - fidelity(&b, &a)?).abs()).max((fidelity(&a, &a)? - 1.0).abs()).max(range);
    }
    log.line(format!("fidelity axioms, 100 pairs: worst deviation {worst:.1e}"));
    ok &= worst < 1e-8;
    parts.push(format!("fidelity {worst:.0e}"));

    let single = FockSpace::single(5)?;
    let two = dimer_space(10)?;
    let mut min_sum = f64::INFINITY;
    for k in 0..100 {
        // Alternate mixed states with nearly pure, low-photon ones that sit close to the bound.
        let (a, b) = if k % 2 == 0 {
            (random_density_matrix(&single, Basis::Real, &mut rng)?, random_density_matrix(&single, Basis::Real, &mut rng)?)
        } else {
            (low_photon_pure(&single, &mut rng)?, low_photon_pure(&single, &mut rng)?)
        };
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        min_sum = min_sum.min(epr_variance_sum(&DensityMatrix::product(&two, Basis::Real, &a, &b)?, theta)?.sum);
    }
    log.line(format!("separable EPR sums, 100 products: minimum {min_sum:.6}"));
    ok &= min_sum >= 2.0 - 1e-8;
    parts.push(format!("min separable sum {min_sum:.4} ≥ 2 - 1e-8"));

    let big = FockSpace::single(100)?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = SqueezedThermalParams::new(rng.random_range(-3.0..3.0), rng.random_range(0.0..0.6), rng.random_range(0.0..0.8))?;
        let (n, m) = p.to_moments();
        let back = SqueezedThermalParams::from_moments(n, m)?;
        let angle = (C64::from_polar(1.0, back.theta) - C64::from_polar(1.0, p.theta)).norm() * p.r.min(1.0);
        let mm = single_mode_moments(&squeezed_thermal_dm(&p, &big)?);
        worst = worst.max((back.r - p.r).abs()).max((back.n - p.n).abs()).max(angle).max((mm.n - n).abs()).max((mm.m - m).norm());
    }
    log.line(format!("(θ, r, n) ↔ moments, 100 states (analytic and Fock space): worst {worst:.1e}"));
    ok &= worst < 1e-8;
    parts.push(format!("round trips {worst:.0e} < 1e-8"));

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(0.01..3.0);
        let m = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let g = GaussianWavefunction { a1: C64::new(0.0, 0.0), m, n, norm: 1.0 }.after_jump()?;
        worst = worst.max((g.m - 3.0 * m).norm()).max(g.a1.norm());
        let g = GaussianWavefunction { a1: C64::new(0.0, 0.0), m: C64::new(0.0, 0.0), n, norm: 1.0 }.after_jump()?;
        worst = worst.max((g.n - 2.0 * n).abs());
    }
    log.line(format!("jump reductions α=0 ⇒ m→3m, m=0 ⇒ n→2n: worst {worst:.1e}"));
    ok &= worst < 1e-12;
    parts.push(format!("jump reductions {worst:.0e}"));

    // Independent solves in both bases over the fig1 and fig2 setups.
    let mut worst = 0.0f64;
    let mut solves = 0;
    let space = dimer_space(10)?;
    let mut points: Vec<ModelParams> = linspace(0.0, 1.6, 17).into_iter().map(|f| ModelParams::with_fixed_sum(0.25, 2.0, 1.0, f)).collect();
    points.extend([0.02, 0.1, 0.3, 1.0, 3.0, 10.0].map(fig2_params));
    for p in &points {
        let real = steady_state(&build_liouvillian(p, &space, Basis::Real)?)?;
        let k = steady_state(&build_liouvillian(p, &space, Basis::Reciprocal)?)?;
        let n_real = real.occupation(0) + real.occupation(1);
        let n_k = k.occupation(0) + k.occupation(1);
        let n_conv = real.to_basis(Basis::Reciprocal)?;
        worst = worst.max((n_real - n_k).abs()).max((n_real - n_conv.occupation(0) - n_conv.occupation(1)).abs());
        solves += 2;
    }
    log.line(format!("n_T identity over {solves} ED solves: worst {worst:.1e}"));
    ok &= worst < 1e-9;
    parts.push(format!("n_T identity {worst:.0e} < 1e-9"));

    Ok((ok, parts.join(", ")))
}

// ------------------------------------------------------------------

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |k: u32| selected.is_empty() || selected.contains(&k);
    let strict = std::env::var_os("BHDIMER_ACCEPTANCE_STRICT").is_some();
    let started = Instant::now();
    let mut results: Vec<(u32, bool)> = Vec::new();

    let report = |results: &mut Vec<(u32, bool)>, k: u32, name: &str, f: &mut dyn FnMut(&mut Log) -> Res<(bool, String)>| {
        println!("[{k}] {name}");
        let t = Instant::now();
        let mut log = Log(Vec::new());
        let (ok, summary) = f(&mut log).unwrap_or_else(|e| (false, format!("error: {e}")));
        println!("{} {k:>2}  {name}: {summary}  [{:.1} s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        results.push((k, ok));
    };

    if want(1) {
        report(&mut results, 1, "linear cavity oracle", &mut c1);
    }
    if want(2) {
        report(&mut results, 2, "closed-form Kerr density vs ED", &mut c2);
    }
    if want(3) {
        report(&mut results, 3, "semiclassical S-curve and single-mode limits", &mut c3);
    }
    if want(4) {
        report(&mut results, 4, "decoupling distance power laws", &mut c4);
    }
    if want(5) {
        report(&mut results, 5, "RDC multistability onset", &mut c5);
    }
    if want(6) {
        report(&mut results, 6, "trajectory vs density-matrix decoupling", &mut c6);
    }
    if want(7) || want(8) {
        println!("[7, 8] full-space trajectories at J = 0.25");
        let mut log = Log(Vec::new());
        match full_runs(&mut log) {
            Ok(runs) => {
                if want(7) {
                    report(&mut results, 7, "unraveling exactness", &mut |l| c7(&runs, l));
                }
                if want(8) {
                    report(&mut results, 8, "time-step independence", &mut |l| c8(&runs, l));
                }
            }
            Err(e) => {
                for k in [7, 8].into_iter().filter(|&k| want(k)) {
                    println!("FAIL {k:>2}  full-space trajectories: error: {e}");
                    results.push((k, false));
                }
            }
        }
    }
    if want(9) {
        report(&mut results, 9, "min-variance structure", &mut c9);
    }
    if want(10) {
        report(&mut results, 10, "EPR variance structure", &mut c10);
    }
    if want(11) {
        report(&mut results, 11, "property suites", &mut c11);
    }

    let failed: Vec<String> = results.iter().filter(|r| !r.1).map(|r| r.0.to_string()).collect();
    println!(
        "acceptance: {} of {} criteria pass ({:.0} s){}",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
