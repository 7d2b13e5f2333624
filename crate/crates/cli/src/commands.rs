use std::fmt::Write as _;

use gssm::datadriven::*;
use gssm::io::*;
use gssm::pade::{match_error, pade, PadeOptions, RationalMap};
use gssm::reduced::*;
use gssm::series::MultiSeries;
use gssm::singularity::*;
use gssm::ssm::*;
use gssm::systems::{make_system, SYSTEMS};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::run::{validation, CliError, CliResult, Run};
use crate::{
    Analyze, Command, FieldSource, PadeArgs, PolarArgs, PredictArgs, RegressArgs, Singularity, SsmArgs, StyleArg,
    SystemSource, Target,
};

pub fn dispatch(cmd: &Command, run: &mut Run) -> CliResult<()> {
    match cmd {
        Command::Systems => systems(run),
        Command::Ssm(a) => ssm(a, run),
        Command::Pade(a) => pade_cmd(a, run),
        Command::Analyze(a) => analyze(a, run),
        Command::Singularity(s) => singularity(s, run),
        Command::Regress(a) => regress(a, run),
        Command::Predict(a) => predict_cmd(a, run),
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<f64>]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows)?;
    Ok(buf)
}

fn systems(run: &mut Run) -> CliResult<()> {
    let mut text = String::new();
    for (id, params) in SYSTEMS {
        let p: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let dim = make_system(id, &[])?.system.dim();
        let _ = writeln!(text, "{id} dim={dim} {}", p.join(" "));
    }
    print!("{text}");
    run.write("systems.txt", text.as_bytes())
}

fn load_system(src: &SystemSource, run: &mut Run) -> CliResult<PolySystem> {
    match (&src.system, &src.system_file) {
        (Some(id), None) => Ok(make_system(id, &src.params)?.system),
        (None, Some(path)) => {
            if !src.params.is_empty() {
                return validation("--param applies to built-in systems only");
            }
            Ok(read_system(&run.read(path)?)?)
        }
        _ => validation("give exactly one of --system or --system-file"),
    }
}

fn has_complex_masters(spec: &SpectralData) -> bool {
    spec.masters.iter().any(|&i| spec.eigenvalues[i].im != 0.0)
}

fn ssm(a: &SsmArgs, run: &mut Run) -> CliResult<()> {
    if let Some(path) = &a.model {
        let model = read_model(&run.read(path)?)?;
        run.note("dimension", model.dim());
        run.note("master_dimension", model.master_dim());
        run.note("style", model.style.name());
        run.note("order", model.order);
        return run.write("model.ssm", write_model(&model).as_bytes());
    }
    let sys = load_system(&a.source, run)?;
    let spec = spectral_analysis(&sys, a.dim, a.masters.as_deref())?;
    let style = match a.style {
        StyleArg::Graph => Style::Graph,
        StyleArg::NormalForm => Style::NormalForm,
    };
    let model = compute_ssm(&sys, &spec, a.order, style)?;
    run.write("model.ssm", write_model(&model).as_bytes())?;
    let masters: Vec<String> = spec.masters.iter().map(|&i| format!("{:.6}", spec.eigenvalues[i])).collect();
    run.note("master_eigenvalues", masters.join(" "));

    let rep = invariance_residual(&sys, &model)?;
    let rows: Vec<Vec<f64>> = (0..rep.radii.len())
        .map(|i| vec![rep.radii[i], rep.residuals[i], rep.floors[i]])
        .collect();
    run.write("residual.csv", &csv_bytes(&["radius", "residual", "floor"], &rows)?)?;
    run.note(
        "residual_slope",
        rep.slope.map_or("none (defect at roundoff)".to_string(), |s| format!("{s:.4}")),
    );

    if a.dim == 2 && style == Style::NormalForm && has_complex_masters(&spec) {
        let polar = extract_polar(&model)?;
        run.write("kappa.series", write_series(&polar.kappa_series()).as_bytes())?;
        run.write("omega.series", write_series(&polar.omega_series()).as_bytes())?;
        let fmt = |v: &[f64]| v.iter().map(|c| format!("{c:.6e}")).collect::<Vec<_>>().join(" ");
        run.note("kappa_coefficients", fmt(&polar.kappa));
        run.note("omega_coefficients", fmt(&polar.omega));
    }
    Ok(())
}

fn scan_grid(dim: usize, radius: f64, n: usize, conjugate: bool) -> CliResult<EvaluationGrid> {
    if conjugate {
        if dim != 2 {
            return validation("conjugate scans need two inputs (z, z̄)");
        }
        Ok(EvaluationGrid::conjugate_disk(radius, n, n)?)
    } else {
        if dim > 3 {
            return validation("real-box scans support at most three inputs");
        }
        Ok(EvaluationGrid::real_box(&vec![-radius; dim], &vec![radius; dim], n)?)
    }
}

fn scan_rows(flags: &[FlaggedPoint], prefix: &[f64]) -> Vec<Vec<f64>> {
    flags
        .iter()
        .map(|f| {
            let mut row = prefix.to_vec();
            row.push(f.denominator as f64);
            row.push(f.index as f64);
            for z in &f.point {
                row.push(z.re);
                row.push(z.im);
            }
            row.push(f.value.norm());
            row.push(if f.reason == ScanReason::SignChange { 1.0 } else { 0.0 });
            row
        })
        .collect()
}

fn scan_header(dim: usize, prefix: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    h.push("denominator".into());
    h.push("index".into());
    for i in 1..=dim {
        h.push(format!("p{i}_re"));
        h.push(format!("p{i}_im"));
    }
    h.push("abs_q".into());
    h.push("sign_change".into());
    h
}

/// `[N/M] → [N/M−1] → [N−1/M−1]`, without repeats or negative orders.
pub fn fallback_ladder(n: u32, m: u32) -> Vec<(u32, u32)> {
    let mut out = vec![(n, m)];
    if m > 0 {
        out.push((n, m - 1));
        if n > 0 {
            out.push((n - 1, m - 1));
        }
    }
    out.dedup();
    out
}

fn pade_cmd(a: &PadeArgs, run: &mut Run) -> CliResult<()> {
    let (series, conjugate) = match (&a.series, &a.model) {
        (Some(p), None) => (read_series(&run.read(p)?)?, a.conjugate),
        (None, Some(p)) => {
            let model = read_model(&run.read(p)?)?;
            let complex = has_complex_masters(&model.spectral);
            match a.target {
                Target::W => (model.w.clone(), a.conjugate || complex),
                Target::R => (model.r.clone(), a.conjugate || complex),
                Target::Kappa => (extract_polar(&model)?.kappa_series(), false),
                Target::Omega => (extract_polar(&model)?.omega_series(), false),
            }
        }
        _ => return validation("give exactly one of --series or --model"),
    };
    let m = a.m.unwrap_or(a.n);
    let ladder = if a.no_fallback { vec![(a.n, m)] } else { fallback_ladder(a.n, m) };
    let grid = scan_grid(series.dim_in(), a.radius, a.grid, conjugate)?;
    let opts = PadeOptions {
        shared_denominator: a.shared,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut accepted: Option<(u32, u32, RationalMap)> = None;
    for (attempt, &(n, m)) in ladder.iter().enumerate() {
        let r = pade(&series, n, m, &opts)?;
        let flags = denominator_zero_scan(&r, &grid, a.floor)?;
        run.note(&format!("attempt_{attempt}"), format!("[{n}/{m}] flagged {}", flags.len()));
        rows.extend(scan_rows(&flags, &[attempt as f64, n as f64, m as f64]));
        if flags.is_empty() {
            accepted = Some((n, m, r));
            break;
        }
    }
    let header = scan_header(series.dim_in(), &["attempt", "n", "m"]);
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    run.write("scan.csv", &csv_bytes(&header, &rows)?)?;
    match accepted {
        Some((n, m, r)) => {
            run.note("approximant", format!("[{n}/{m}]"));
            run.note("match_error", format!("{:.3e}", match_error(&series, &r, n + m)?));
            run.write("pade.txt", write_rational(&r).as_bytes())
        }
        None => Err(CliError::Numerical(format!(
            "every approximant in the ladder {ladder:?} has denominator zeros in the scan domain ({} flagged points in scan.csv); adjust N and M",
            rows.len()
        ))),
    }
}

fn build_field(src: &FieldSource, run: &mut Run) -> CliResult<ReducedField> {
    let coords = if src.conjugate {
        Coordinates::ConjugatePair
    } else {
        Coordinates::Real
    };
    let mut field = match (&src.series, &src.rational) {
        (Some(p), None) => ReducedField::polynomial(read_series(&run.read(p)?)?, coords),
        (None, Some(p)) => ReducedField::rational(read_rational(&run.read(p)?)?, coords),
        _ => return validation("give exactly one of --series or --rational"),
    };
    if let Some(amplitude) = src.forcing_amplitude {
        let frequency = src.forcing_frequency.unwrap_or(0.0);
        let Some(proj) = &src.forcing_projection else {
            return validation("--forcing-amplitude needs --forcing-projection");
        };
        field = field.with_forcing(ReducedForcing {
            amplitude,
            frequency,
            projection: proj.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        });
    }
    Ok(field)
}

fn integrate_opts(src: &FieldSource, sample_dt: Option<f64>) -> IntegrateOptions {
    IntegrateOptions {
        rtol: src.rtol,
        atol: src.atol,
        sample_dt,
        ..Default::default()
    }
}

fn check_termination(t: &Termination) -> CliResult<()> {
    match t {
        Termination::Completed => Ok(()),
        other => Err(CliError::Numerical(format!("integration stopped early: {other:?}"))),
    }
}

struct PolarModel {
    model: SSMModel,
    kappa: RadialFn,
    omega: RadialFn,
    param: Param,
    grid: Vec<f64>,
    component: usize,
}

fn load_polar(a: &PolarArgs, run: &mut Run) -> CliResult<PolarModel> {
    let model = read_model(&run.read(&a.model)?)?;
    let polar = extract_polar(&model)?;
    let (kappa, omega, param) = match (a.n, a.m) {
        (Some(n), Some(m)) => {
            let opts = PadeOptions::default();
            (
                RadialFn::Rational(pade(&polar.kappa_series(), n, m, &opts)?),
                RadialFn::Rational(pade(&polar.omega_series(), n, m, &opts)?),
                Param::Rational(pade(&model.w, n, m, &opts)?),
            )
        }
        _ => (
            RadialFn::Even(polar.kappa.clone()),
            RadialFn::Even(polar.omega.clone()),
            Param::Series(model.w.clone()),
        ),
    };
    if !(a.rho_max > 0.0) || a.samples == 0 {
        return validation("--rho-max must be positive and --samples nonzero");
    }
    if a.component >= model.dim() {
        return validation(format!("component {} out of range for dimension {}", a.component, model.dim()));
    }
    let grid = (1..=a.samples).map(|i| a.rho_max * i as f64 / a.samples as f64).collect();
    Ok(PolarModel {
        model,
        kappa,
        omega,
        param,
        grid,
        component: a.component,
    })
}

fn analyze(a: &Analyze, run: &mut Run) -> CliResult<()> {
    match a {
        Analyze::Integrate { field, x0, t0, t1, dt } => {
            let f = build_field(field, run)?;
            let res = integrate(&f, x0, *t0, *t1, &integrate_opts(field, *dt))?;
            let mut buf = Vec::new();
            write_trajectory(&mut buf, &res.trajectory, "x")?;
            run.write("trajectory.csv", &buf)?;
            run.note("steps", res.steps);
            if let Some(last) = res.trajectory.last() {
                run.note("final_state", format!("{last:?}"));
            }
            check_termination(&res.termination)
        }
        Analyze::Backbone { polar } => {
            let p = load_polar(polar, run)?;
            let mut rows = Vec::new();
            for &rho in &p.grid {
                let w = match p.omega.eval(rho) {
                    Ok(w) => w,
                    Err(gssm::Error::PoleProximity { .. }) => continue,
                    Err(e) => return Err(e.into()),
                };
                rows.push(vec![rho, w, response_amplitude(&p.param, p.component, rho, 128)?]);
            }
            run.note("points", rows.len());
            run.write("backbone.csv", &csv_bytes(&["rho", "omega", "amplitude"], &rows)?)
        }
        Analyze::Frc { polar, eps, force } => {
            let p = load_polar(polar, run)?;
            if force.len() != p.model.dim() {
                return validation(format!("--force needs {} components", p.model.dim()));
            }
            let f = forcing_projection(&p.model.spectral, force)?;
            let amp = |rho: f64| response_amplitude(&p.param, p.component, rho, 128);
            let frc = forced_response(&p.kappa, &p.omega, eps * f, &p.grid, Some(&amp))?;
            let rows: Vec<Vec<f64>> = frc
                .points
                .iter()
                .map(|q| {
                    vec![
                        q.rho,
                        q.omega,
                        q.amplitude,
                        if q.stable { 1.0 } else { 0.0 },
                        q.branch as f64,
                        q.residual,
                    ]
                })
                .collect();
            run.note("forcing_projection", format!("{f:.6e}"));
            run.note("points", rows.len());
            if let Some(pk) = frc.peak() {
                run.note("peak", format!("amplitude {:.6} at Omega {:.6} (rho {:.6})", pk.amplitude, pk.omega, pk.rho));
            }
            run.write(
                "frc.csv",
                &csv_bytes(&["rho", "Omega", "amplitude", "stable", "branch", "residual"], &rows)?,
            )
        }
        Analyze::Poincare { field, ic, periods, skip } => {
            let f = build_field(field, run)?;
            let Some(freq) = f.forcing.as_ref().map(|fc| fc.frequency) else {
                return validation("poincare sections need a forced field (--forcing-amplitude, --forcing-frequency)");
            };
            let (pts, term) = poincare_sample(&f, freq, ic, *periods, *skip, &integrate_opts(field, None))?;
            let names: Vec<String> = (1..=ic.len()).map(|i| format!("x{i}")).collect();
            let header: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            run.note("points", pts.len());
            run.write("poincare.csv", &csv_bytes(&header, &pts)?)?;
            check_termination(&term)
        }
        Analyze::Lyapunov { field, ic, d0, horizon, window } => {
            let f = build_field(field, run)?;
            let est = lyapunov_estimate(&f, ic, *d0, *horizon, *window, &integrate_opts(field, None))?;
            let rows: Vec<Vec<f64>> = est.times.iter().zip(&est.log_growth).map(|(t, g)| vec![*t, *g]).collect();
            run.note("exponent", format!("{:.6e}", est.exponent));
            run.note("fit_error", format!("{:.3e}", est.fit_error));
            run.write("lyapunov.csv", &csv_bytes(&["t", "log_growth"], &rows)?)
        }
        Analyze::Psd { trajectory, component } => {
            let traj = read_trajectory(run.read(trajectory)?.as_bytes())?;
            let psd = psd_estimate(&traj, *component)?;
            run.note("max_bin_fraction", format!("{:.4}", max_bin_fraction(&psd)));
            if let Some((f, _)) = psd.iter().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()) {
                run.note("peak_frequency", format!("{f:.6e}"));
            }
            let rows: Vec<Vec<f64>> = psd.iter().map(|(f, p)| vec![*f, *p]).collect();
            run.write("psd.csv", &csv_bytes(&["frequency", "power"], &rows)?)
        }
    }
}

fn univariate_component(s: &MultiSeries, component: usize) -> CliResult<Vec<f64>> {
    if s.dim_in() != 1 {
        return validation("singularity diagnostics need a univariate series");
    }
    if component >= s.dim_out() {
        return validation(format!("component {component} out of range"));
    }
    Ok(s.component(component).univariate_coeffs().iter().map(|c| c.re).collect())
}

fn singularity(s: &Singularity, run: &mut Run) -> CliResult<()> {
    match s {
        Singularity::Radius { series, component } => {
            let c = univariate_component(&read_series(&run.read(series)?)?, *component)?;
            let est = estimate_radius(&c)?;
            run.note("radius", format!("{:.6e}", est.radius));
            run.note("zero_radius", est.zero_radius);
            run.note("step", est.step);
            run.note("fit_residual", format!("{:.3e}", est.residual));
            Ok(())
        }
        Singularity::Pattern { series, component, even_from, first } => {
            let c = univariate_component(&read_series(&run.read(series)?)?, *component)?;
            let g = match even_from {
                Some(k) => even_subsequence(&c, *k),
                None => c,
            };
            let est = classify_sign_pattern(&g, *first);
            run.note("pattern", est.pattern);
            run.note("radius", est.radius.map_or("none".into(), |r| format!("{r:.6e}")));
            run.note("angle", est.angle.map_or("none".into(), |a| format!("{a:.6}")));
            run.note("confidence", format!("{:.3}", est.confidence));
            Ok(())
        }
        Singularity::Scan { rational, radius, grid, floor, conjugate } => {
            let r = read_rational(&run.read(rational)?)?;
            let g = scan_grid(r.dim_in(), *radius, *grid, *conjugate)?;
            let flags = denominator_zero_scan(&r, &g, *floor)?;
            run.note("flagged", flags.len());
            let header = scan_header(r.dim_in(), &[]);
            let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            run.write("scan.csv", &csv_bytes(&header, &scan_rows(&flags, &[]))?)
        }
    }
}

fn write_chart(chart: &ChartProjection, cfg: &EmbeddingConfig) -> String {
    let mut s = format!("chart {} {} {}\n", cfg.delays, cfg.lag, chart.dim());
    let center: Vec<String> = chart.center.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "center {}", center.join(" "));
    for i in 0..chart.embedding_dim() {
        let row: Vec<String> = chart.basis.row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s.push_str("end\n");
    s
}

fn read_chart(text: &str) -> CliResult<(ChartProjection, EmbeddingConfig)> {
    let bad = |msg: &str| CliError::Validation(format!("chart file: {msg}"));
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header: Vec<usize> = lines
        .next()
        .and_then(|l| l.strip_prefix("chart "))
        .ok_or_else(|| bad("missing 'chart' header"))?
        .split_whitespace()
        .map(|v| v.parse().map_err(|_| bad("header fields must be integers")))
        .collect::<CliResult<_>>()?;
    let [delays, lag, d] = header[..] else {
        return Err(bad("header needs delays, lag and dimension"));
    };
    let nums = |l: &str| -> CliResult<Vec<f64>> {
        l.split_whitespace()
            .map(|v| v.parse().map_err(|_| bad(&format!("'{v}' is not a number"))))
            .collect()
    };
    let center = nums(lines.next().and_then(|l| l.strip_prefix("center ")).ok_or_else(|| bad("missing center"))?)?;
    if center.len() != delays {
        return Err(bad("center length differs from the number of delays"));
    }
    let mut basis = DMatrix::<f64>::zeros(delays, d);
    for i in 0..delays {
        let row = nums(lines.next().ok_or_else(|| bad("truncated basis"))?)?;
        if row.len() != d {
            return Err(bad("basis row length differs from the dimension"));
        }
        for (j, v) in row.into_iter().enumerate() {
            basis[(i, j)] = v;
        }
    }
    if lines.next() != Some("end") {
        return Err(bad("missing 'end'"));
    }
    Ok((
        ChartProjection { basis, center },
        EmbeddingConfig {
            delays,
            lag,
            observable: 0,
        },
    ))
}

fn scalar_series(traj: &TrajectoryData, observable: usize) -> CliResult<TrajectoryData> {
    if observable >= traj.dim() {
        return validation(format!("observable column {observable} out of range ({} value columns)", traj.dim()));
    }
    Ok(TrajectoryData::new(traj.t.clone(), traj.component(observable).into_iter().map(|v| vec![v]).collect())?)
}

fn polynomial_held_out(model: &MultiSeries, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> CliResult<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, z) in inputs.iter().zip(targets) {
        let v = model.evaluate_real(x)?;
        for (a, b) in v.iter().zip(z) {
            num += (a.re - b).powi(2);
            den += b * b;
        }
    }
    Ok((num / den.max(1e-300)).sqrt())
}

fn regress(a: &RegressArgs, run: &mut Run) -> CliResult<()> {
    if !(0.0..1.0).contains(&a.holdout) {
        return validation("--holdout must lie in [0, 1)");
    }
    let cfg = EmbeddingConfig {
        delays: a.delays,
        lag: a.lag,
        observable: 0,
    };
    cfg.check_dimension(a.dim)?;
    let mut embedded = Vec::new();
    for path in &a.data {
        let traj = read_trajectory(run.read(path)?.as_bytes())?;
        embedded.push(delay_embed(&scalar_series(&traj, a.observable)?, &cfg)?);
    }
    let chart = tangent_space_pca(&embedded, a.dim, None)?;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for e in &embedded {
        let eta = chart.project_trajectory(e);
        let deta = estimate_derivatives(&eta, a.smoothing)?;
        inputs.extend(eta.x);
        targets.extend(deta.x);
    }
    let mut idx: Vec<usize> = (0..inputs.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
    let n_val = (a.holdout * idx.len() as f64).round() as usize;
    let (val_idx, train_idx) = idx.split_at(n_val);
    let pick = |ix: &[usize], v: &[Vec<f64>]| -> Vec<Vec<f64>> { ix.iter().map(|&i| v[i].clone()).collect() };
    let (train_in, train_out) = (pick(train_idx, &inputs), pick(train_idx, &targets));
    let (val_in, val_out) = (pick(val_idx, &inputs), pick(val_idx, &targets));

    let mut prob = RegressionProblem::new(train_in.clone(), train_out.clone(), a.n, a.m)?;
    prob.delta = a.delta;
    let poly_order = a.poly_order.unwrap_or(a.n + a.m);
    // the rational fit and the polynomial baseline are independent
    let (fit, poly) = std::thread::scope(|s| {
        let baseline = (run.threads > 1).then(|| s.spawn(|| fit_polynomial_field(&train_in, &train_out, poly_order, false)));
        let fit = if a.unconstrained {
            fit_rational_field_unconstrained(&prob)
        } else {
            fit_rational_field(&prob)
        };
        let poly = match baseline {
            Some(h) => h.join().expect("baseline fit panicked"),
            None => fit_polynomial_field(&train_in, &train_out, poly_order, false),
        };
        (fit, poly)
    });
    let (fit, poly) = (fit?, poly?);

    run.write("model.pade", write_rational(&fit.model).as_bytes())?;
    run.write("baseline.series", write_series(&poly.model).as_bytes())?;
    run.write("chart.txt", write_chart(&chart, &cfg).as_bytes())?;
    run.note("samples", format!("{} train, {} held out", train_in.len(), val_in.len()));
    run.note("rational", format!("[{}/{}] with {} coefficients", a.n, a.m, fit.model.parameter_count()));
    run.note("polynomial", format!("order {poly_order} with {} coefficients", poly.parameter_count));
    run.note("rational_train_relative_error", format!("{:.4e}", fit.report.relative_error));
    run.note("min_denominator", format!("{:.4e}", fit.report.min_denominator));
    run.note("active_constraints", fit.report.active_constraints);
    if fit.report.refinement_failed {
        run.note("refinement", "failed; stage-1 model kept");
    }
    let mut table = vec![vec![a.n as f64, a.m as f64, fit.model.parameter_count() as f64, f64::NAN]];
    let mut poly_row = vec![poly_order as f64, 0.0, poly.parameter_count as f64, f64::NAN];
    if !val_in.is_empty() {
        let r = held_out_error(&fit.model, &val_in, &val_out)?;
        let p = polynomial_held_out(&poly.model, &val_in, &val_out)?;
        run.note("rational_held_out_error", format!("{r:.4e}"));
        run.note("polynomial_held_out_error", format!("{p:.4e}"));
        table[0][3] = r;
        poly_row[3] = p;
    }
    table.push(poly_row);
    if a.dim == 2 {
        run.note("denominator_sign_change_in_hull", denominator_sign_change_in_hull(&fit.model, &train_in, 101)?);
    }
    run.write("report.csv", &csv_bytes(&["n", "m", "parameters", "held_out_error"], &table)?)
}

fn load_fitted(text: &str) -> CliResult<FittedModel> {
    match text.split_whitespace().next() {
        Some("pade") => Ok(FittedModel::Rational(read_rational(text)?)),
        Some("series") => Ok(FittedModel::Polynomial(read_series(text)?)),
        _ => validation("model file must be a Padé or series file"),
    }
}

fn predict_cmd(a: &PredictArgs, run: &mut Run) -> CliResult<()> {
    let (chart, cfg) = read_chart(&run.read(&a.chart)?)?;
    let model = load_fitted(&run.read(&a.model)?)?;
    let history = read_trajectory(run.read(&a.history)?.as_bytes())?;
    let y = scalar_series(&history, a.observable)?.component(0);
    let p = predict(&chart, &cfg, &model, &y, a.horizon, a.dt)?;
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &p.observable, "y")?;
    run.write("prediction.csv", &buf)?;
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &p.reduced, "eta")?;
    run.write("reduced.csv", &buf)?;
    run.note("samples", p.observable.len());
    check_termination(&p.termination)
}
