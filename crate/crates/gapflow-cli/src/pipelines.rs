// SPDX-License-Identifier: MIT OR Apache-2.0

//! One function per subcommand. Each returns the numbers it produced, the
//! checks it ran and the files to write; nothing here touches the disk.

use std::f64::consts::PI;

use gapflow::abel::{abel_image, build_curve, frequencies, linearization_fit};
use gapflow::direct_spectral::{
    gap_decay_fit, gap_separation_constant, gaps_from_scan, ids_and_gaps, periodic_gaps, spectrum_scan, GapEntry,
};
use gapflow::dubrovin::{evolve, trajectory, FlowAxis, FlowState};
use gapflow::moser_poschel::{
    averaged_determinant, conjugation_check, gap_upper_bound_certificate, homological_solve,
    perturbation_from_conjugation, Factor, ParabolicModel,
};
use gapflow::nls_sim::{
    compare_trajectories, constant_oracle, energy, finite_gap_field, mass, plane_wave_oracle, split_step_evolve,
    taper, FieldGrid, SplitStepOptions,
};
use gapflow::spectral_domain::{
    craig_report, craig_report_finite, homogeneity_estimate, phases_to_divisor, GapSet, PhaseVector,
};
use gapflow::subordinacy::{jl_ratio_check, measure_bound_check, xi_grid};
use gapflow::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{InitialData, RunConfig};
use crate::error::CliError;
use crate::report::{Artifact, Check, TimeVerdict};
use crate::Command;

pub struct Outcome {
    pub operations: Vec<&'static str>,
    pub checks: Vec<Check>,
    pub result: Value,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    fn new(operations: &[&'static str]) -> Self {
        Outcome { operations: operations.to_vec(), checks: Vec::new(), result: Value::Null, artifacts: Vec::new() }
    }
}

type Run = Result<Outcome, CliError>;

pub fn run(cmd: Command, cfg: &RunConfig, verdict: &TimeVerdict) -> Run {
    match cmd {
        Command::SpectrumScan => scan(cfg),
        Command::GapReport => gap_report(cfg),
        Command::DubrovinEvolve => dubrovin_evolve(cfg, verdict),
        Command::Reconstruct => reconstruct(cfg),
        Command::NlsIntegrate => nls_integrate(cfg),
        Command::NlsCompare => nls_compare(cfg),
        Command::AbelLinearize => abel_linearize(cfg),
        Command::JlCheck => jl_check(cfg),
        Command::MeasureCheck => measure_check(cfg),
        Command::MpCertify => mp_certify(cfg),
        Command::CraigCheck => craig_check(cfg),
        Command::EmitReport => emit_report(cfg),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn table(name: &str, header: &[String], rows: &[Vec<String>]) -> Result<Artifact, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(Artifact { name: name.into(), bytes })
}

fn label_text(k: &[i64]) -> String {
    k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Configured phases, or `theta_count` seeded uniform draws on the torus.
fn thetas(cfg: &RunConfig, d: usize) -> Result<Vec<Vec<f64>>, CliError> {
    if let Some(t) = &cfg.spectral.thetas {
        if t.is_empty() || t.iter().any(|v| v.len() != d) {
            return Err(CliError::Schema(format!("every theta must have {d} components")));
        }
        return Ok(t.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.spectral.theta_count.max(1)).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect())
}

fn state(cfg: &RunConfig) -> Result<FlowState, CliError> {
    let (g, y) = cfg.require_phases()?;
    Ok(FlowState::new(PhaseVector(y.to_vec()), g.clone())?)
}

fn scan(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&["direct_spectral::spectrum_scan", "direct_spectral::gaps_from_scan"]);
    let p = cfg.require_potential()?;
    let s = &cfg.scan;
    let grid = linspace(s.lambda_min, s.lambda_max, s.points);
    let rows = spectrum_scan(p, &grid, s.length, s.samples, s.kmax)?;
    let gaps = gaps_from_scan(p, &rows, s.kmax);

    let drop = rows.windows(2).map(|w| w[0].rho - w[1].rho).fold(0.0, f64::max);
    out.checks.push(Check::at_most("rho_nondecreasing", None, drop, 4.0 * PI / s.length));
    let neg = rows.iter().map(|r| -r.gamma).fold(f64::NEG_INFINITY, f64::max);
    out.checks.push(Check::at_most("gamma_nonnegative", None, neg, 1e-12));

    let header: Vec<String> = ["lambda", "gamma", "rho", "in_gap", "label"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.lambda),
                num(r.gamma),
                num(r.rho),
                r.in_gap.to_string(),
                r.label.as_deref().map(label_text).unwrap_or_default(),
            ]
        })
        .collect();
    out.artifacts.push(table("spectrum-scan.csv", &header, &body)?);
    out.artifacts.push(gap_table("spectrum-scan-gaps.csv", &gaps)?);
    out.result = json!({
        "points": rows.len(),
        "points_in_gaps": rows.iter().filter(|r| r.in_gap).count(),
        "gaps": gaps,
    });
    Ok(out)
}

fn gap_table(name: &str, gaps: &[GapEntry]) -> Result<Artifact, CliError> {
    let header: Vec<String> = ["label", "lo", "hi", "width", "center", "ids", "energy_offset", "ambiguous"]
        .map(String::from)
        .to_vec();
    let body: Vec<Vec<String>> = gaps
        .iter()
        .map(|g| {
            vec![
                label_text(&g.label),
                num(g.lo),
                num(g.hi),
                num(g.width),
                num(g.center),
                num(g.ids),
                num(g.energy_offset),
                g.ambiguous.to_string(),
            ]
        })
        .collect();
    table(name, &header, &body)
}

fn gap_report(cfg: &RunConfig) -> Run {
    let p = cfg.require_potential()?;
    let s = &cfg.scan;
    let (gaps, mut out) = if p.dim() == 1 {
        (
            periodic_gaps(p, s.kmax, s.closed_below)?,
            Outcome::new(&["direct_spectral::periodic_gaps", "direct_spectral::gap_decay_fit", "direct_spectral::gap_separation_constant"]),
        )
    } else {
        let grid = linspace(s.lambda_min, s.lambda_max, s.points);
        (
            ids_and_gaps(p, &grid, s.length, s.kmax)?,
            Outcome::new(&["direct_spectral::ids_and_gaps", "direct_spectral::gap_decay_fit", "direct_spectral::gap_separation_constant"]),
        )
    };
    let bound = s.offset_bound.unwrap_or(0.5 * p.sup_bound());
    let worst = gaps.iter().map(|g| g.energy_offset).fold(0.0, f64::max);
    out.checks.push(Check::flag("gaps_detected", Some(8), !gaps.is_empty()));
    out.checks.push(Check::at_most("center_offset", Some(8), worst, bound));
    let fit = gap_decay_fit(&gaps);
    if let Some((slope, r)) = fit {
        out.checks.push(Check::flag("exponential_decay", Some(8), r > 0.0 && slope <= -2.0 * PI * r + 1e-12));
    }
    let sep = if gaps.len() >= 2 { Some(gap_separation_constant(&gaps, s.tau)) } else { None };
    if let Some(c) = sep {
        out.checks.push(Check { name: "separation_constant".into(), criterion: Some(8), pass: c > 0.0 && c.is_finite(), value: c, limit: None });
    }
    out.artifacts.push(gap_table("gap-report.csv", &gaps)?);
    out.result = json!({
        "gaps": gaps,
        "offset_bound": bound,
        "decay_fit": fit.map(|(slope, r)| json!({ "slope": slope, "r": r })),
        "separation_constant": sep,
        "tau": s.tau,
    });
    Ok(out)
}

fn dubrovin_evolve(cfg: &RunConfig, verdict: &TimeVerdict) -> Run {
    let mut out = Outcome::new(&[
        "dubrovin::trajectory",
        "dubrovin::evolve",
        "spectral_domain::phases_to_divisor",
        "dubrovin::calibrate_time_field",
    ]);
    let st = state(cfg)?;
    let g = st.gaps.clone();
    let f = &cfg.flow;
    let tr = trajectory(&st, f.axis, f.span, f.samples, cfg.tol)?;

    let n = g.len();
    let mut header: Vec<String> = ["clock", "x", "t", "beta"].map(String::from).to_vec();
    header.extend((0..n).map(|j| format!("y{j}")));
    header.extend((0..n).map(|j| format!("mu{j}")));
    header.extend((0..n).map(|j| format!("sheet{j}")));
    let mut body = Vec::with_capacity(tr.len());
    let mut inside = true;
    for p in &tr {
        let d = phases_to_divisor(&PhaseVector(p.y.clone()), &g)?;
        inside &= d.validate(&g).is_ok();
        let clock = match f.axis {
            FlowAxis::X => p.x - st.x,
            FlowAxis::T => p.t - st.t,
            FlowAxis::Beta => p.beta - st.beta,
        };
        let mut row = vec![num(clock), num(p.x), num(p.t), num(p.beta)];
        row.extend(p.y.iter().map(|v| num(*v)));
        row.extend(d.points.iter().map(|q| num(q.mu)));
        row.extend(d.points.iter().map(|q| num(q.sheet.sign())));
        body.push(row);
    }
    out.artifacts.push(table("dubrovin-evolve.csv", &header, &body)?);

    let (dx, dt) = (f.span, 0.5 * f.span);
    let xt = evolve(&evolve(&st, dx, 0.0, 0.0, cfg.tol)?, 0.0, dt, 0.0, cfg.tol)?;
    let tx = evolve(&evolve(&st, 0.0, dt, 0.0, cfg.tol)?, dx, 0.0, 0.0, cfg.tol)?;
    let comm = xt.y.0.iter().zip(&tx.y.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    out.checks.push(Check::flag("divisor_in_gaps", None, inside));
    out.checks.push(Check::at_most("flow_commutation", Some(9), comm, 10.0 * cfg.tol));
    out.checks.push(Check::flag(
        "time_convention_calibrated",
        Some(2),
        verdict.calibrated && verdict.sign_s == 1 && verdict.kappa_t == 2.0,
    ));
    let last = tr.last().map(|p| p.y.clone()).unwrap_or_default();
    out.result = json!({
        "axis": f.axis,
        "span": f.span,
        "samples": f.samples,
        "final_phases": last,
        "commutation": { "dx": dx, "dt": dt, "defect": comm },
    });
    Ok(out)
}

fn field_rows(grid: &FieldGrid) -> Vec<Vec<String>> {
    let mut body = Vec::with_capacity(grid.nx * grid.times.len());
    for (t, row) in grid.times.iter().zip(&grid.u) {
        for (i, u) in row.iter().enumerate() {
            body.push(vec![num(*t), num(grid.x(i)), num(u.re), num(u.im), num(u.norm())]);
        }
    }
    body
}

fn reconstruct(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&["nls_sim::finite_gap_field", "dubrovin::field_along_x", "reflectionless::reconstruct_field"]);
    let st = state(cfg)?;
    let f = &cfg.field;
    let grid = finite_gap_field(&st, f.x0, f.length, f.nx, &f.times, cfg.tol)?;
    let finite = grid.u.iter().flatten().all(|u| u.is_finite());
    out.checks.push(Check::flag("finite_values", None, finite));

    let g = &st.gaps;
    if g.len() == 1 {
        let (a, b) = g.gap(0);
        if (a + b).abs() <= 1e-14 * (1.0 + a.abs() + b.abs()) {
            // A symmetric gap (-c, c) carries the constant solution of modulus c.
            let mut err: f64 = 0.0;
            for row in &grid.u {
                for u in row {
                    err = err.max((u.norm() - b).abs()).max((u - row[0]).norm());
                }
            }
            out.checks.push(Check::at_most("one_gap_constant_field", Some(1), err, 1e-10));
        }
    }
    let header: Vec<String> = ["t", "x", "re", "im", "abs"].map(String::from).to_vec();
    out.artifacts.push(table("reconstruct-field.csv", &header, &field_rows(&grid))?);
    let sup = grid.u.iter().flatten().map(|u| u.norm()).fold(0.0, f64::max);
    let inf = grid.u.iter().flatten().map(|u| u.norm()).fold(f64::INFINITY, f64::min);
    out.result = json!({
        "nx": f.nx,
        "x0": f.x0,
        "length": f.length,
        "times": f.times,
        "sup_abs": sup,
        "min_abs": inf,
    });
    Ok(out)
}

/// Initial datum on the split-step grid and, for finite-gap data, the
/// flow state that generated it.
fn initial(cfg: &RunConfig) -> Result<(Vec<Complex64>, Option<FlowState>), CliError> {
    let f = &cfg.field;
    let dx = f.length / f.nx as f64;
    let xs = (0..f.nx).map(|i| f.x0 + i as f64 * dx);
    Ok(match f.initial {
        InitialData::FiniteGap => {
            let st = state(cfg)?;
            let exact = finite_gap_field(&st, f.x0, f.length, f.nx, &[0.0], cfg.tol)?;
            let u0 = exact.u[0]
                .iter()
                .zip(xs)
                .map(|(u, x)| u * taper(x, f.x0, f.length, f.taper_width))
                .collect();
            (u0, Some(st))
        }
        InitialData::Constant { c, beta } => (vec![Complex64::from_polar(c, beta); f.nx], None),
        InitialData::PlaneWave { c, k } => (xs.map(|x| Complex64::from_polar(c, k * x)).collect(), None),
    })
}

fn simulate(cfg: &RunConfig) -> Result<(FieldGrid, Option<FlowState>), CliError> {
    let f = &cfg.field;
    let (u0, st) = initial(cfg)?;
    let opts = SplitStepOptions { dt: f.dt, record_every: f.record_every, richardson: f.richardson };
    Ok((split_step_evolve(&u0, f.x0, f.length, f.t_end, &opts)?, st))
}

fn initial_ops(cfg: &RunConfig) -> Vec<&'static str> {
    match cfg.field.initial {
        InitialData::FiniteGap => vec!["nls_sim::finite_gap_field", "nls_sim::taper"],
        InitialData::Constant { .. } => vec!["nls_sim::constant_oracle"],
        InitialData::PlaneWave { .. } => vec!["nls_sim::plane_wave_oracle"],
    }
}

fn nls_integrate(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&["nls_sim::split_step_evolve", "nls_sim::mass", "nls_sim::energy"]);
    out.operations.extend(initial_ops(cfg));
    let (sim, _) = simulate(cfg)?;
    let dx = sim.dx();
    let m: Vec<f64> = sim.u.iter().map(|u| mass(u, dx)).collect();
    let e: Vec<f64> = sim.u.iter().map(|u| energy(u, sim.length)).collect();
    let drift = |v: &[f64]| v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max) / v[0].abs().max(f64::MIN_POSITIVE);
    let (md, ed) = (drift(&m), drift(&e));
    out.checks.push(Check::at_most("relative_mass_drift", None, md, cfg.field.threshold));
    let header: Vec<String> = ["t", "mass", "energy"].map(String::from).to_vec();
    let body: Vec<Vec<String>> =
        sim.times.iter().zip(&m).zip(&e).map(|((t, a), b)| vec![num(*t), num(*a), num(*b)]).collect();
    out.artifacts.push(table("nls-integrate.csv", &header, &body)?);
    out.artifacts.push(Artifact { name: "nls-integrate.bin".into(), bytes: sim.to_bytes() });
    out.result = json!({
        "times": sim.times,
        "mass_drift": md,
        "energy_drift": ed,
        "sup_abs_final": sim.u.last().map(|u| u.iter().map(|c| c.norm()).fold(0.0, f64::max)),
    });
    Ok(out)
}

fn nls_compare(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&["nls_sim::split_step_evolve", "nls_sim::compare_trajectories"]);
    out.operations.extend(initial_ops(cfg));
    let f = &cfg.field;
    let (sim, st) = simulate(cfg)?;
    let reference = match (&f.initial, st) {
        (InitialData::FiniteGap, Some(st)) => finite_gap_field(&st, f.x0, f.length, f.nx, &sim.times, cfg.tol)?,
        (InitialData::Constant { c, beta }, _) => FieldGrid {
            u: sim.times.iter().map(|&t| vec![constant_oracle(*c, *beta, t); f.nx]).collect(),
            ..sim.clone()
        },
        (InitialData::PlaneWave { c, k }, _) => FieldGrid {
            u: sim.times.iter().map(|&t| (0..f.nx).map(|i| plane_wave_oracle(*c, *k, sim.x(i), t)).collect()).collect(),
            ..sim.clone()
        },
        (InitialData::FiniteGap, None) => unreachable!("finite-gap data always carries its state"),
    };
    let window = f.window.map(|[a, b]| (a, b));
    let cmp = compare_trajectories(&reference, &sim, window)?;
    out.checks.push(Check::at_most("sup_error", Some(4), cmp.sup_error, f.threshold));

    let inside = |x: f64| window.is_none_or(|(lo, hi)| x >= lo && x <= hi);
    let header: Vec<String> = ["t", "sup_error"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = sim
        .times
        .iter()
        .zip(reference.u.iter().zip(&sim.u))
        .map(|(t, (a, b))| {
            let e = (0..f.nx).filter(|&i| inside(sim.x(i))).map(|i| (a[i] - b[i]).norm()).fold(0.0, f64::max);
            vec![num(*t), num(e)]
        })
        .collect();
    out.artifacts.push(table("nls-compare.csv", &header, &body)?);
    out.artifacts.push(Artifact { name: "nls-compare-reference.bin".into(), bytes: reference.to_bytes() });
    out.artifacts.push(Artifact { name: "nls-compare-simulated.bin".into(), bytes: sim.to_bytes() });
    out.result = json!({
        "comparison": cmp,
        "window": window.map(|(a, b)| [a, b]),
        "times": sim.times,
        "threshold": f.threshold,
    });
    Ok(out)
}

fn abel_linearize(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&[
        "abel::build_curve",
        "abel::frequencies",
        "abel::abel_image",
        "abel::linearization_fit",
        "dubrovin::trajectory",
    ]);
    let st = state(cfg)?;
    let a = &cfg.abel;
    let h = build_curve(&st.gaps)?;
    let freq = frequencies(&h);
    let mut worst_res: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    let mut fits = Vec::new();
    let mut body = Vec::new();
    let dim = freq.eta.len() + 1;
    for (axis, span, name) in [(FlowAxis::X, a.x_span, "x"), (FlowAxis::T, a.t_span, "t")] {
        let mut expect = if axis == FlowAxis::X { freq.eta.clone() } else { freq.eta1.clone() };
        expect.push(if axis == FlowAxis::X { -freq.theta0 } else { -freq.theta1 });
        let tr = trajectory(&st, axis, span, a.samples, cfg.tol)?;
        let clocks: Vec<f64> = (0..tr.len()).map(|k| span * k as f64 / a.samples as f64).collect();
        let mut coords = Vec::with_capacity(tr.len());
        for (p, c) in tr.iter().zip(&clocks) {
            let img = abel_image(&PhaseVector(p.y.clone()), &h)?;
            let mut v = img.character;
            v.push(img.rotation);
            let mut row = vec![name.to_string(), num(*c)];
            row.extend(v.iter().map(|x| num(*x)));
            body.push(row);
            coords.push(v);
        }
        let fit = linearization_fit(&clocks, &coords)?;
        for (s, e) in fit.slopes.iter().zip(&expect) {
            worst_slope = worst_slope.max((s - e).abs());
        }
        worst_res = fit.max_residuals.iter().fold(worst_res, |m, &r| m.max(r));
        fits.push(json!({ "axis": name, "expected_slopes": expect, "fit": fit }));
    }
    out.checks.push(Check::at_most("affine_residual", Some(5), worst_res, a.fit_tol));
    out.checks.push(Check::at_most("slope_mismatch", Some(5), worst_slope, a.fit_tol));
    if st.gaps.len() == 1 {
        // One gap (s - c, s + c): the plane wave of amplitude c and wave
        // number s has |theta0| = |s|/pi and theta1 = (4s² + 2c²)/(2pi).
        let (lo, hi) = st.gaps.gap(0);
        let (s, c) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let e0 = (freq.theta0.abs() - s.abs() / PI).abs();
        let e1 = (freq.theta1 - (4.0 * s * s + 2.0 * c * c) / (2.0 * PI)).abs();
        out.checks.push(Check::at_most("one_gap_rotation_frequencies", Some(6), e0.max(e1), 1e-6));
    }
    let mut header: Vec<String> = vec!["axis".into(), "clock".into()];
    header.extend((0..dim - 1).map(|k| format!("character{k}")));
    header.push("rotation".into());
    out.artifacts.push(table("abel-linearize.csv", &header, &body)?);
    out.result = json!({
        "frequencies": freq,
        "fits": fits,
        "period_matrix_im": h.period_matrix_im,
        "condition_number": h.condition_number,
        "max_residual": worst_res,
        "max_slope_mismatch": worst_slope,
    });
    Ok(out)
}

fn jl_check(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&["subordinacy::jl_ratio_check", "subordinacy::xi_grid"]);
    let p = cfg.require_potential()?;
    let sc = &cfg.spectral;
    let ths = thetas(cfg, p.dim())?;
    let xis = xi_grid(sc.xi_count);
    let mut reports = Vec::new();
    let mut body = Vec::new();
    for (i, th) in ths.iter().enumerate() {
        let r = jl_ratio_check(p, sc.lambda, &xis, &sc.lengths, th, sc.resolve_tol)?;
        for row in &r.rows {
            body.push(vec![
                i.to_string(),
                num(row.xi.re),
                num(row.xi.im),
                num(row.len),
                num(row.epsilon),
                num(row.n_plus),
                num(row.n_minus),
                num(row.ratio),
                row.resolved.to_string(),
                row.inside.to_string(),
            ]);
        }
        reports.push(r);
    }
    let resolved = reports.iter().flat_map(|r| &r.rows).filter(|r| r.resolved).count();
    out.checks.push(Check::flag("two_sided_ratio", Some(7), reports.iter().all(|r| r.all_inside)));
    out.checks.push(Check::flag("resolved_rows", None, resolved > 0));
    let header: Vec<String> =
        ["theta", "xi_re", "xi_im", "length", "epsilon", "n_plus", "n_minus", "ratio", "resolved", "inside"]
            .map(String::from)
            .to_vec();
    out.artifacts.push(table("jl-check.csv", &header, &body)?);
    out.result = json!({ "thetas": ths, "reports": reports });
    Ok(out)
}

fn measure_check(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&["subordinacy::measure_bound_check"]);
    let p = cfg.require_potential()?;
    let sc = &cfg.spectral;
    let ths = thetas(cfg, p.dim())?;
    let mut reports = Vec::new();
    let mut body = Vec::new();
    for (i, th) in ths.iter().enumerate() {
        let r = measure_bound_check(p, sc.lambda, &sc.eps, th)?;
        for row in &r.rows {
            body.push(vec![i.to_string(), num(row.epsilon), num(row.im_borel), num(row.bound), row.holds.to_string()]);
        }
        reports.push(r);
    }
    out.checks.push(Check::flag("measure_bound", Some(7), reports.iter().all(|r| r.all_hold)));
    let header: Vec<String> = ["theta", "epsilon", "im_borel", "bound", "holds"].map(String::from).to_vec();
    out.artifacts.push(table("measure-check.csv", &header, &body)?);
    out.result = json!({ "thetas": ths, "reports": reports });
    Ok(out)
}

fn random_factors(rng: &mut ChaCha8Rng, d: usize) -> Vec<Factor> {
    let mode = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.gen_range(-2..=2)).collect::<Vec<i64>>();
    (0..3)
        .map(|_| {
            if rng.gen_bool(0.6) {
                Factor::Hyperbolic { r: rng.gen_range(-0.5..0.5), n: mode(rng) }
            } else {
                Factor::Diagonal { m: mode(rng) }
            }
        })
        .collect()
}

fn mp_certify(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&[
        "moser_poschel::perturbation_from_conjugation",
        "moser_poschel::homological_solve",
        "moser_poschel::averaged_determinant",
        "moser_poschel::conjugation_check",
        "moser_poschel::gap_upper_bound_certificate",
    ]);
    let mp = &cfg.mp;
    let model = ParabolicModel::from_factors(mp.zeta, mp.omega.clone(), mp.kappa, mp.tau, mp.strip, &mp.factors)?;
    let p = perturbation_from_conjugation(&model)?;
    let sol = homological_solve(&model, &p, mp.delta, mp.modes)?;
    let avg = averaged_determinant(&model, mp.delta)?;
    let conj = conjugation_check(&model, mp.delta, mp.modes)?;
    let cert = gap_upper_bound_certificate(&model, mp.nu)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dual = (avg.d - avg.d_direct).abs();
    let mut body = vec![vec!["configured".to_string(), num(model.zeta), num(mp.delta), num(avg.d), num(avg.d_direct)]];
    for i in 0..mp.random_models {
        let fs = random_factors(&mut rng, mp.omega.len());
        let m = ParabolicModel::from_factors(rng.gen_range(0.0..0.1), mp.omega.clone(), mp.kappa, mp.tau, mp.strip, &fs)?;
        let delta = rng.gen_range(-0.2..0.2);
        let a = averaged_determinant(&m, delta)?;
        dual = dual.max((a.d - a.d_direct).abs());
        body.push(vec![i.to_string(), num(m.zeta), num(delta), num(a.d), num(a.d_direct)]);
    }
    out.checks.push(Check::at_most("homological_residual", Some(9), sol.residual, mp.residual_tol));
    out.checks.push(Check::at_most("determinant_dual_evaluation", Some(9), dual, mp.dual_tol));
    let header: Vec<String> = ["model", "zeta", "delta", "d_factorised", "d_direct"].map(String::from).to_vec();
    out.artifacts.push(table("mp-certify.csv", &header, &body)?);
    out.result = json!({
        "b_norm": model.b_norm(),
        "homological": {
            "residual": sol.residual,
            "precondition_holds": sol.precondition_holds,
            "small_divisor_floor": sol.small_divisor_floor,
        },
        "averaged": avg,
        "conjugation": conj,
        "certificate": cert,
        "certified": cert.certified(),
        "dual_evaluation_max": dual,
    });
    Ok(out)
}

fn default_window(g: &GapSet) -> [f64; 2] {
    match (g.gaps().first(), g.gaps().last()) {
        (Some(&(a, _)), Some(&(_, b))) => [a - 1.0, b + 1.0],
        _ => [-1.0, 1.0],
    }
}

fn craig_check(cfg: &RunConfig) -> Run {
    let c = &cfg.craig;
    let (report, set, mut out) = match c.family {
        Some(fam) => (
            craig_report(fam, c.delta, c.base, c.doublings)?,
            fam.truncate(c.base << c.doublings)?,
            Outcome::new(&["spectral_domain::craig_report", "spectral_domain::homogeneity_estimate"]),
        ),
        None => {
            let g = cfg.require_gaps()?;
            (
                craig_report_finite(g, c.delta)?,
                g.clone(),
                Outcome::new(&["spectral_domain::craig_report_finite", "spectral_domain::homogeneity_estimate"]),
            )
        }
    };
    let [lo, hi] = c.window.unwrap_or_else(|| default_window(&set));
    let h = homogeneity_estimate(&set, (lo, hi), c.grid)?;
    out.checks.push(Check::flag("craig_conditions", Some(10), report.satisfied == c.expect_satisfied));
    out.checks.push(Check {
        name: "homogeneity_lower_bound".into(),
        criterion: Some(10),
        pass: h.value >= c.min_homogeneity,
        value: h.value,
        limit: Some(c.min_homogeneity),
    });
    let header: Vec<String> =
        ["truncation", "first", "second", "third", "outer_second", "outer_third"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = report
        .truncations
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let s = &report.sums[i];
            let o = report.outer_rows.get(i).copied();
            vec![
                k.to_string(),
                num(s.first),
                num(s.second),
                num(s.third),
                o.map(|r| num(r[0])).unwrap_or_default(),
                o.map(|r| num(r[1])).unwrap_or_default(),
            ]
        })
        .collect();
    out.artifacts.push(table("craig-check.csv", &header, &body)?);
    out.result = json!({
        "family": c.family,
        "report": report,
        "homogeneity": h,
        "window": [lo, hi],
    });
    Ok(out)
}

fn emit_report(cfg: &RunConfig) -> Run {
    let mut out = Outcome::new(&["report::consolidate"]);
    let merged = crate::report::consolidate(&cfg.artifacts);
    for w in &merged.warnings {
        eprintln!("gapflow: warning: {w}");
    }
    out.result = serde_json::to_value(&merged).expect("consolidated report serialises");
    Ok(out)
}
