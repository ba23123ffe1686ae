use crate::config::{ScenarioConfig, ScenarioKind};
use crate::report::{Check, Report, Status, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relspec_core::discretize::{solve_modes, solve_modes_with, Eigensystem, Grid, SolveOptions};
use relspec_core::geometry::{
    build_weight, max_weight_ratio, relative_area, EndModel, FunnelFactor, MetricProfile, SurfaceSpec,
};
use relspec_core::oracle::{extrapolated_eigenvalues_2d, KrylovOptions};
use relspec_core::spectral::{
    offdiag_distance, offdiag_l2_integral, relative_trace_series, spectral_gap, SurfacePoint, TraceSeries,
};
use relspec_core::zeta::{fit_heat_invariants_with, zeta_prime_with, DeterminantResult, HeatInvariants, SpectralPair};
use std::f64::consts::PI;
use std::time::Instant;

/// A pipeline error tagged with the stage that raised it.
#[derive(Debug)]
struct StageError {
    stage: String,
    message: String,
}

type Staged<T> = Result<T, StageError>;

trait InStage<T> {
    fn stage(self, name: &str) -> Staged<T>;
}

impl<T, E: std::fmt::Display> InStage<T> for Result<T, E> {
    fn stage(self, name: &str) -> Staged<T> {
        self.map_err(|e| StageError { stage: name.to_string(), message: e.to_string() })
    }
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    checks: Vec<Check>,
    tables: Vec<Table>,
}

impl Run<'_> {
    fn check(&mut self, name: &str, passed: bool, value: f64, tolerance: f64, detail: String) {
        self.checks.push(Check { name: name.into(), passed, value, tolerance, detail });
    }
}

/// Runs the scenario described by `cfg`. Never panics on pipeline errors:
/// they end the run with status `FAILED` and whatever tables were complete.
pub fn run_scenario(cfg: &ScenarioConfig) -> Report {
    let start = Instant::now();
    let mut run = Run { cfg, checks: Vec::new(), tables: Vec::new() };
    let outcome = match cfg.kind {
        ScenarioKind::Validate => validate(&mut run),
        ScenarioKind::SurgerySweep => surgery_sweep(&mut run),
        ScenarioKind::IsospectralCheck => isospectral_check(&mut run),
        ScenarioKind::DecayCheck => decay_check(&mut run),
        ScenarioKind::ContinuityCheck => continuity_check(&mut run),
        ScenarioKind::FunnelConformalCheck => funnel_conformal_check(&mut run),
        ScenarioKind::OffdiagCheck => offdiag_check(&mut run),
    };
    let (status, failed_stage, error) = match outcome {
        Err(e) => (Status::Failed, Some(e.stage), Some(e.message)),
        Ok(()) if run.checks.iter().all(|c| c.passed) => (Status::Pass, None, None),
        Ok(()) => (Status::Fail, None, None),
    };
    Report {
        kind: cfg.kind,
        status,
        checks: run.checks,
        tables: run.tables,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        failed_stage,
        error,
        config: cfg.clone(),
    }
}

/// The member of a cap-surgery family at parameter ε: whichever end is a
/// cusp or cap becomes a cap with that ε (ε = 0 is the cusp itself).
pub fn family_member(spec: &SurfaceSpec, eps: f64) -> Result<SurfaceSpec, String> {
    let cap = |e: &EndModel| match *e {
        EndModel::Cusp { junction } | EndModel::FilledCap { junction, .. } => {
            Some(EndModel::FilledCap { junction, epsilon: eps })
        }
        _ => None,
    };
    if let Some(r) = cap(&spec.right) {
        Ok(spec.with_right(r))
    } else if let Some(l) = cap(&spec.left) {
        Ok(spec.with_left(l))
    } else {
        Err("surgery family needs a cusp or filled-cap end".into())
    }
}

struct Member {
    eps: f64,
    pa: MetricProfile,
    pb: MetricProfile,
    grid: Grid,
    a: Eigensystem,
    b: Eigensystem,
}

/// Solves the family pairs `(A_ε, B_ε)` on one shared grid built for the
/// reference member of B (the longest chart) and restricted to the others.
fn solve_family(cfg: &ScenarioConfig) -> Staged<Vec<Member>> {
    let g = &cfg.grid;
    let t = &cfg.truncation;
    let ref_b = build_weight(&family_member(&cfg.surface_b, cfg.epsilons[0]).stage("family")?, t).stage("geometry")?;
    let grid = Grid::adapted(&ref_b, g.cells, g.kappa).stage("grid")?;
    let mut out = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        let stage = format!("epsilon {eps}");
        let pb = build_weight(&family_member(&cfg.surface_b, eps).stage(&stage)?, t).stage(&stage)?;
        let pa = build_weight(&family_member(&cfg.surface_a, eps).stage(&stage)?, t).stage(&stage)?;
        let (gm, pb) = grid.restrict_to(&pb).stage(&stage)?;
        let (_, pa) = grid.restrict_to(&pa).stage(&stage)?;
        let a = solve_modes(&pa, &gm, g.lambda_cut).stage(&stage)?;
        let b = solve_modes(&pb, &gm, g.lambda_cut).stage(&stage)?;
        out.push(Member { eps, pa, pb, grid: gm, a, b });
    }
    Ok(out)
}

fn solve_pair(cfg: &ScenarioConfig, a: &SurfaceSpec, b: &SurfaceSpec) -> Staged<(Eigensystem, Eigensystem)> {
    let pb = build_weight(b, &cfg.truncation).stage("geometry")?;
    let pa = build_weight(a, &cfg.truncation).stage("geometry")?;
    let grid = Grid::adapted(&pb, cfg.grid.cells, cfg.grid.kappa).stage("grid")?;
    let sa = solve_modes(&pa, &grid, cfg.grid.lambda_cut).stage("solve")?;
    let sb = solve_modes(&pb, &grid, cfg.grid.lambda_cut).stage("solve")?;
    Ok((sa, sb))
}

/// Series, invariants and determinant of a solved pair.
fn determinant(cfg: &ScenarioConfig, a: &Eigensystem, b: &Eigensystem) -> Staged<(TraceSeries, HeatInvariants, DeterminantResult)> {
    let series = relative_trace_series(a, b, &cfg.times.points()).stage("relative trace")?;
    let inv = fit_heat_invariants_with(&series, cfg.fit.terms, &cfg.fit.options()).stage("heat invariant fit")?;
    let det = zeta_prime_with(&SpectralPair::new(a, b).stage("zeta")?, &inv, &cfg.zeta).stage("zeta")?;
    Ok((series, inv, det))
}

fn max_abs<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn validate(run: &mut Run) -> Staged<()> {
    let cfg = run.cfg;
    let tol = &cfg.tolerances;
    // flat Dirichlet cylinder [0, π] × S¹
    let count = tol.flat_count;
    let mut exact = Vec::new();
    let kmax = (count as f64).sqrt().ceil() as i64 + 2;
    for k in 1..=kmax {
        for m in -kmax..=kmax {
            exact.push((k * k + m * m) as f64);
        }
    }
    exact.sort_by(f64::total_cmp);
    exact.truncate(count);
    let flat = build_weight(&SurfaceSpec::flat_cylinder(PI), &cfg.truncation).stage("flat geometry")?;
    let (s0, s1) = flat.chart();
    let grid = Grid::uniform(s0, s1, cfg.grid.cells).stage("flat grid")?;
    let cut = exact[count - 1] * 1.5 + 1.0;
    let sys = solve_modes(&flat, &grid, cut).stage("flat solve")?;
    let got = sys.sorted_eigenvalues();
    let mut table = Table::new("flat_cylinder", &["index", "exact", "computed", "relative_error"]);
    let mut worst: f64 = 0.0;
    for (i, &e) in exact.iter().enumerate() {
        let c = got.get(i).copied().unwrap_or(f64::NAN);
        let rel = ((c - e) / e).abs();
        worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
        table.push(vec![i as f64, e, c, rel]);
    }
    run.tables.push(table);
    run.check(
        "flat_spectrum",
        worst <= tol.flat_relative,
        worst,
        tol.flat_relative,
        format!("first {count} eigenvalues vs k^2 + m^2, N = {}", cfg.grid.cells),
    );
    if !cfg.oracle.enabled {
        return Ok(());
    }
    let o = &cfg.oracle;
    let profile = build_weight(&cfg.surface_a, &cfg.truncation).stage("oracle geometry")?;
    let grid = Grid::adapted(&profile, cfg.grid.cells, cfg.grid.kappa).stage("oracle grid")?;
    let mut cut = 2.0;
    let reference = loop {
        let v = solve_modes(&profile, &grid, cut).stage("mode sum")?.sorted_eigenvalues();
        if v.len() >= o.count {
            break v;
        }
        cut *= 2.0;
    };
    let kopts = KrylovOptions { seed: cfg.seed, ..KrylovOptions::default() };
    let study = extrapolated_eigenvalues_2d(&profile, o.s_cells, o.theta_nodes, o.count, &kopts).stage("2D oracle")?;
    let rel = |x: f64, r: f64| ((x - r) / r).abs();
    let mut table = Table::new("oracle", &["index", "mode_sum", "coarse", "fine", "extrapolated", "angular_mode"]);
    let (mut agree, mut e_coarse, mut e_fine): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..o.count {
        let r = reference[i];
        let (c, f, x) = (study.coarse.eigenvalues[i], study.fine.eigenvalues[i], study.extrapolated[i]);
        agree = agree.max(rel(x, r));
        e_coarse = e_coarse.max(rel(c, r));
        e_fine = e_fine.max(rel(f, r));
        table.push(vec![i as f64, r, c, f, x, study.fine.angular_modes[i] as f64]);
    }
    run.tables.push(table);
    let exponent = (e_coarse / e_fine).log2();
    let residual = study.fine.residuals.iter().chain(&study.coarse.residuals).cloned().fold(0.0, f64::max);
    run.check(
        "oracle_agreement",
        agree <= tol.oracle_relative,
        agree,
        tol.oracle_relative,
        format!(
            "extrapolated {}x{} / {}x{} five-point spectra vs mode sum, first {}",
            o.s_cells,
            o.theta_nodes,
            o.s_cells / 2,
            o.theta_nodes / 2,
            o.count
        ),
    );
    run.check(
        "oracle_refinement_exponent",
        exponent >= tol.oracle_exponent,
        exponent,
        tol.oracle_exponent,
        format!("raw discrepancy {e_coarse:.3e} -> {e_fine:.3e}"),
    );
    run.check("oracle_residual", residual <= tol.oracle_residual, residual, tol.oracle_residual, String::new());
    Ok(())
}

fn surgery_sweep(run: &mut Run) -> Staged<()> {
    let cfg = run.cfg;
    let tol = &cfg.tolerances;
    let members = solve_family(cfg)?;
    let k = cfg.fit.terms;
    let mut header = vec!["epsilon", "gap_a", "gap_b", "volume_ratio_a", "volume_ratio_b"];
    let names: Vec<String> = (0..=k).map(|i| format!("a{i}")).collect();
    header.extend(names.iter().map(|s| s.as_str()));
    header.extend(["fit_residual", "relative_area", "log_det", "error_budget"]);
    let mut sweep = Table::new("sweep", &header);
    let mut traces = Table::new("traces", &["epsilon", "t", "relative_trace", "tail_bound"]);
    let (ref_a, ref_b) = (&members[0].pa, &members[0].pb);
    let mut rows = Vec::new();
    for m in &members {
        let stage = format!("epsilon {}", m.eps);
        let (series, inv, det) = determinant(cfg, &m.a, &m.b).map_err(|e| StageError { stage: format!("{stage}: {}", e.stage), ..e })?;
        let gap_a = spectral_gap(&m.a).stage(&stage)?;
        let gap_b = spectral_gap(&m.b).stage(&stage)?;
        let ca = max_weight_ratio(&m.pa, ref_a, m.grid.nodes());
        let cb = max_weight_ratio(&m.pb, ref_b, m.grid.nodes());
        let area = relative_area(&m.pa, &m.pb).stage(&stage)?;
        let mut row = vec![m.eps, gap_a, gap_b, ca, cb];
        row.extend((0..=k).map(|i| inv.a(i)));
        row.extend([inv.residual, area, det.log_determinant(), det.error_budget]);
        sweep.push(row);
        for ((&t, &v), &tb) in series.times.iter().zip(&series.values).zip(&series.tail_bound) {
            traces.push(vec![m.eps, t, v, tb]);
        }
        rows.push((gap_a, gap_b, ca, cb, inv, area, det.log_determinant()));
    }
    run.tables.push(sweep);
    run.tables.push(traces);

    let c_a = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let c_b = rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    for (name, gaps, c) in [
        ("gap_lower_bound_a", rows.iter().map(|r| r.0).collect::<Vec<_>>(), c_a),
        ("gap_lower_bound_b", rows.iter().map(|r| r.1).collect::<Vec<_>>(), c_b),
    ] {
        let min = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        let bound = gaps[0] / c;
        run.check(name, min >= bound, min - bound, 0.0, format!("min gap {min:.6e} >= gap(0)/C = {:.6e}/{c:.6}", gaps[0]));
    }
    let inv0 = &rows[0].4;
    for i in 0..=1.min(k) {
        let drift = max_abs(rows.iter().map(|r| r.4.a(i) - inv0.a(i)));
        run.check(
            &format!("a{i}_invariance"),
            drift <= tol.heat_invariant,
            drift,
            tol.heat_invariant,
            "max |a_k(eps) - a_k(0)|".into(),
        );
    }
    let area_dev = max_abs(rows.iter().map(|r| r.4.a(0) - r.5 / (4.0 * PI)));
    run.check("a0_matches_area", area_dev <= tol.area, area_dev, tol.area, "max |a0 - relative_area/(4 pi)|".into());
    let det_drift = max_abs(rows.iter().map(|r| r.6 - rows[0].6));
    run.check(
        "log_det_invariance",
        det_drift <= tol.log_det,
        det_drift,
        tol.log_det,
        format!("log det(0) = {:.9e}", rows[0].6),
    );
    Ok(())
}

fn isospectral_check(run: &mut Run) -> Staged<()> {
    let cfg = run.cfg;
    let (a, b) = solve_pair(cfg, &cfg.surface_a, &cfg.surface_b)?;
    let (series, inv, det) = determinant(cfg, &a, &b)?;
    let mut table = Table::new("isospectral", &["t", "relative_trace"]);
    for (&t, &v) in series.times.iter().zip(&series.values) {
        table.push(vec![t, v]);
    }
    run.tables.push(table);
    let trace = max_abs(series.values.iter().copied());
    let coeffs = max_abs(inv.coefficients.iter().copied());
    let det_dev = (det.determinant - 1.0).abs();
    run.check("trace_vanishes", trace == 0.0, trace, 0.0, "max |RelTr(t)|".into());
    run.check("invariants_vanish", coeffs == 0.0, coeffs, 0.0, "max |a_k|".into());
    run.check("determinant_is_one", det_dev == 0.0, det_dev, 0.0, format!("det = {:?}", det.determinant));
    Ok(())
}

fn decay_check(run: &mut Run) -> Staged<()> {
    let cfg = run.cfg;
    let members = solve_family(cfg)?;
    let times = cfg.times.points();
    let mut mu = f64::INFINITY;
    let mut per = Vec::new();
    for m in &members {
        let stage = format!("epsilon {}", m.eps);
        mu = mu.min(spectral_gap(&m.a).stage(&stage)?).min(spectral_gap(&m.b).stage(&stage)?);
        per.push(relative_trace_series(&m.a, &m.b, &times).stage(&stage)?);
    }
    let t0 = times[0];
    let mut table = Table::new("decay", &["epsilon", "t", "relative_trace", "bound"]);
    let mut worst: f64 = 0.0;
    for (m, s) in members.iter().zip(&per) {
        let k = s.values[0].abs() * (mu * t0 / 2.0).exp();
        for (&t, &v) in s.times.iter().zip(&s.values) {
            let bound = k * (-mu * t / 2.0).exp();
            table.push(vec![m.eps, t, v, bound]);
            if bound > 0.0 {
                worst = worst.max(v.abs() / bound);
            } else if v != 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    run.tables.push(table);
    run.check("uniform_gap", mu > 0.0, mu, 0.0, format!("mu = min gap over {} members", members.len()));
    let limit = 1.0 + cfg.tolerances.decay_slack;
    run.check(
        "decay_bound",
        worst <= limit,
        worst,
        limit,
        format!("max |RelTr(t)| / (K e^(-mu t/2)), K fitted at t = {t0}, t in [{t0}, {}]", times[times.len() - 1]),
    );
    Ok(())
}

fn continuity_check(run: &mut Run) -> Staged<()> {
    let cfg = run.cfg;
    let tol = &cfg.tolerances;
    let members = solve_family(cfg)?;
    let times = cfg.times.points();
    let series: Vec<TraceSeries> = members
        .iter()
        .map(|m| relative_trace_series(&m.a, &m.b, &times).stage(&format!("epsilon {}", m.eps)))
        .collect::<Staged<_>>()?;
    let mut table = Table::new("continuity", &["epsilon", "dsup", "t_at_sup"]);
    let mut dsup = Vec::new();
    for (m, s) in members.iter().zip(&series).skip(1) {
        let (mut d, mut at) = (0.0, times[0]);
        for ((&t, &v), &v0) in s.times.iter().zip(&s.values).zip(&series[0].values) {
            if (v - v0).abs() > d {
                d = (v - v0).abs();
                at = t;
            }
        }
        table.push(vec![m.eps, d, at]);
        dsup.push(d);
    }
    run.tables.push(table);
    let rise = dsup.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let rise = if rise.is_finite() { rise } else { 0.0 };
    run.check(
        "dsup_non_increasing",
        rise <= tol.monotone,
        rise,
        tol.monotone,
        format!("largest step-to-step increase along eps = {:?}", &cfg.epsilons[1..]),
    );
    if !tol.dsup_baseline.is_empty() {
        let dev = if tol.dsup_baseline.len() == dsup.len() {
            tol.dsup_baseline.iter().zip(&dsup).map(|(b, d)| ((d - b) / b).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        run.check(
            "dsup_baseline",
            dev <= tol.dsup_baseline_relative,
            dev,
            tol.dsup_baseline_relative,
            format!("{dsup:?}"),
        );
    }
    Ok(())
}

fn funnel_conformal_check(run: &mut Run) -> Staged<()> {
    let cfg = run.cfg;
    let with = |spec: &SurfaceSpec, f: Option<FunnelFactor>| SurfaceSpec { funnel_factor: f, ..*spec };
    let mut table = Table::new("funnel", &["constant", "inner", "outer", "log_det", "error_budget", "a0", "a1"]);
    let (a, b) = solve_pair(cfg, &with(&cfg.surface_a, None), &with(&cfg.surface_b, None))?;
    let (_, inv, det0) = determinant(cfg, &a, &b)?;
    table.push(vec![0.0, 0.0, 0.0, det0.log_determinant(), det0.error_budget, inv.a(0), inv.a(1)]);
    let mut drift: f64 = 0.0;
    for f in &cfg.funnel_factors {
        let (a, b) = solve_pair(cfg, &with(&cfg.surface_a, Some(*f)), &with(&cfg.surface_b, Some(*f)))?;
        let (_, inv, det) = determinant(cfg, &a, &b)?;
        drift = drift.max((det.log_determinant() - det0.log_determinant()).abs());
        table.push(vec![f.constant, f.inner, f.outer, det.log_determinant(), det.error_budget, inv.a(0), inv.a(1)]);
    }
    run.tables.push(table);
    let tol = cfg.tolerances.log_det;
    run.check(
        "funnel_log_det_invariance",
        drift <= tol,
        drift,
        tol,
        format!("{} funnel-supported conformal factors", cfg.funnel_factors.len()),
    );
    Ok(())
}

fn offdiag_check(run: &mut Run) -> Staged<()> {
    let cfg = run.cfg;
    let o = &cfg.offdiag;
    let profile = build_weight(&cfg.surface_a, &cfg.truncation).stage("geometry")?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let y = SurfacePoint { s: o.y_s, theta: 0.0 };
    let y2 = SurfacePoint { s: o.y2_s, theta: rng.gen_range(0.0..2.0 * PI) };
    let times = o.times.points();
    let mut table = Table::new("offdiag", &["cells", "t", "integral", "normalized"]);
    let mut sups = Vec::new();
    for cells in [cfg.grid.cells, o.refine * cfg.grid.cells] {
        let stage = format!("offdiag N = {cells}");
        let grid = Grid::adapted(&profile, cells, cfg.grid.kappa).stage(&stage)?;
        let sys = solve_modes_with(&profile, &grid, &SolveOptions::new(cfg.grid.lambda_cut).with_eigenvectors())
            .stage(&stage)?;
        let d = offdiag_distance(&sys, o.region, y, y2);
        let mut sup = f64::NEG_INFINITY;
        for &t in &times {
            let v = offdiag_l2_integral(&sys, t, o.region, y, y2).stage(&stage)?;
            let q = v.ln() + d * d / (8.0 * t);
            sup = sup.max(q);
            table.push(vec![cells as f64, t, v, q]);
        }
        sups.push(sup);
    }
    run.tables.push(table);
    let (coarse, fine) = (sups[0], sups[1]);
    run.check(
        "offdiag_sup_finite",
        coarse.is_finite() && fine.is_finite(),
        fine,
        f64::INFINITY,
        format!("sup_t [log I(t) + d^2/(8t)], theta(y') = {:.6}", y2.theta),
    );
    let change = ((fine - coarse) / fine).abs();
    run.check(
        "offdiag_refinement",
        change <= cfg.tolerances.offdiag_change,
        change,
        cfg.tolerances.offdiag_change,
        format!("sup {coarse:.6} (N = {}) vs {fine:.6} (N = {})", cfg.grid.cells, o.refine * cfg.grid.cells),
    );
    Ok(())
}
