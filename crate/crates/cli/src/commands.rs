use std::f64::consts::PI;
use std::path::Path;

use serde_json::{json, Value};

use qw3_core::coin::{CoinField, CoinMatrix};
use qw3_core::config::{parse_field_config, serialize_field};
use qw3_core::evolution::{eigen_residual, evolve as run_evolution, Distribution, StateVector};
use qw3_core::linalg::{angle_diff, Complex, Vec3};
use qw3_core::spectral::{
    self, analyze, build_eigenvector, DiagnosticKind, EigenvalueRecord, SpectralError, SpectralReport,
    OP_RESIDUAL_TOL,
};
use qw3_core::transfer::compact_support_status;

use crate::output::{num, sidecar, to_json, Csv, Run};
use crate::{CliError, FieldArgs, Figure, Preset, SearchArgs};

/// Phases used by the reference figures, indexed by `--theta-index`.
pub const DEMO_THETAS: [f64; 4] = [PI / 12.0, 3.0 * PI / 12.0, 7.0 * PI / 12.0, 11.0 * PI / 12.0];
const DEMO_STEPS: usize = 100;
const DEMO_AVERAGE_STEPS: usize = 200;

struct Resolved {
    field: CoinField,
    params: Value,
    canonical: String,
}

fn preset_field(preset: Preset, theta: Option<f64>) -> Result<CoinField, CliError> {
    let f = CoinMatrix::fourier();
    let need_theta = || {
        theta.ok_or_else(|| CliError::Config(format!("preset {preset:?} needs --theta")))
    };
    Ok(match preset {
        Preset::OneDefectFourier => CoinField::one_defect(f, f.phase_scale(need_theta()?)),
        Preset::TwoPhaseFourier => CoinField::two_phase(f, f.phase_scale(need_theta()?)),
        Preset::HomogeneousFourier | Preset::HomogeneousGrover => {
            if theta.is_some() {
                return Err(CliError::Config(format!("preset {preset:?} takes no --theta")));
            }
            if preset == Preset::HomogeneousFourier {
                CoinField::homogeneous(f)
            } else {
                CoinField::homogeneous(CoinMatrix::grover())
            }
        }
    })
}

fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::OneDefectFourier => "one-defect-fourier",
        Preset::TwoPhaseFourier => "two-phase-fourier",
        Preset::HomogeneousFourier => "homogeneous-fourier",
        Preset::HomogeneousGrover => "homogeneous-grover",
    }
}

fn resolve(args: &FieldArgs) -> Result<Resolved, CliError> {
    let (field, params) = match (&args.source.config, args.source.preset) {
        (Some(path), _) => {
            if args.theta.is_some() {
                return Err(CliError::Config("--theta only applies to --preset".into()));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let field = parse_field_config(&text).map_err(|e| CliError::Config(e.to_string()))?;
            (field, json!({ "config": path.display().to_string() }))
        }
        (None, Some(p)) => (
            preset_field(p, args.theta)?,
            json!({ "preset": preset_name(p), "theta": args.theta }),
        ),
        (None, None) => return Err(CliError::Config("one of --config or --preset is required".into())),
    };
    let canonical = serialize_field(&field);
    Ok(Resolved {
        field,
        params,
        canonical,
    })
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn spectral_error(e: SpectralError) -> CliError {
    match e {
        SpectralError::GridTooSmall { .. } | SpectralError::BadTolerance(_) => CliError::Config(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn pair(z: Complex) -> Value {
    json!([z.re, z.im])
}

fn record_json(r: &EigenvalueRecord) -> Value {
    json!({
        "lambda": r.lambda,
        "eigenvalue": pair(Complex::from_polar(1.0, r.lambda)),
        "abs_chi": r.chi_residual,
        "zeta_left": r.zeta_left.map(pair),
        "zeta_right": r.zeta_right.map(pair),
        "op_residual": r.op_residual,
        "source": r.source,
    })
}

fn roots_document(report: &SpectralReport) -> Value {
    json!({
        "records": report.records.iter().map(record_json).collect::<Vec<_>>(),
        "lambda0": report.lambda0,
        "diagnostics": report.diagnostics,
        "rejected_minima": report
            .rejected_minima
            .iter()
            .map(|(l, v)| json!({ "lambda": l, "abs_chi": v }))
            .collect::<Vec<_>>(),
    })
}

fn scan_csv(field: &CoinField, grid: usize) -> String {
    let mut csv = Csv::new(&["lambda", "abs_chi", "in_lambda", "near_lambda0"]);
    for s in spectral::scan(field, grid) {
        csv.row([
            num(s.lambda),
            num(s.chi.norm()),
            u8::from(s.in_lambda).to_string(),
            u8::from(s.near_lambda0).to_string(),
        ]);
    }
    csv.into_string()
}

fn lambda0_json(field: &CoinField) -> String {
    to_json(&json!({ "lambda0": spectral::lambda0_set(field) }))
}

fn distribution_rows(csv: &mut Csv, d: &Distribution, with_time: bool) {
    for (i, p) in d.probs.iter().enumerate() {
        let x = (d.lo + i as i64).to_string();
        if with_time {
            csv.row([d.time.to_string(), x, num(*p)]);
        } else {
            csv.row([x, num(*p)]);
        }
    }
}

pub fn validate(args: &FieldArgs) -> Result<(), CliError> {
    let r = resolve(args)?;
    let f = &r.field;
    println!(
        "field: x_minus = {}, x_plus = {}, {} defect coin(s)",
        f.x_minus(),
        f.x_plus(),
        f.defects().len()
    );
    println!("c_minus:\n{}", f.c_minus());
    for (i, c) in f.defects().iter().enumerate() {
        println!("defect at x = {}:\n{c}", f.x_minus() + i as i64);
    }
    println!("c_plus:\n{}", f.c_plus());
    let l0: Vec<String> = spectral::lambda0_set(f).into_iter().map(num).collect();
    println!("lambda0: [{}]", l0.join(", "));
    println!(
        "compact-support condition: left {:?}, right {:?}",
        compact_support_status(f.c_minus()),
        compact_support_status(f.c_plus())
    );
    println!("config sha256: {}", crate::output::sha256_hex(r.canonical.as_bytes()));
    Ok(())
}

pub fn scan(args: &FieldArgs, grid: usize, out: Option<&Path>) -> Result<(), CliError> {
    if grid == 0 {
        return Err(CliError::Config("--grid must be positive".into()));
    }
    let r = resolve(args)?;
    let mut run = Run::new("scan", with(r.params, json!({ "grid": grid })), &r.canonical);
    run.emit(out, &scan_csv(&r.field, grid))?;
    if let Some(p) = out {
        run.emit(Some(&sidecar(p, ".lambda0.json")), &lambda0_json(&r.field))?;
    }
    run.finish(out)?;
    Ok(())
}

fn search_params(s: SearchArgs) -> Value {
    json!({ "grid": s.grid, "refine_tol": s.refine_tol })
}

fn report_problems(report: &SpectralReport) -> Result<(), CliError> {
    for d in &report.diagnostics {
        let at = d.lambda.map(num).unwrap_or_else(|| "-".into());
        eprintln!("diagnostic [{}] at lambda = {at}: {}", to_json(&d.kind).trim(), d.message);
    }
    let stalled = report
        .diagnostics
        .iter()
        .filter(|d| d.kind == DiagnosticKind::RefinementNotConverged)
        .count();
    if stalled > 0 {
        return Err(CliError::Numerical(format!("{stalled} refinement(s) did not converge")));
    }
    Ok(())
}

pub fn roots(args: &FieldArgs, search: SearchArgs, out: Option<&Path>) -> Result<(), CliError> {
    let r = resolve(args)?;
    let report = analyze(&r.field, search.grid, search.refine_tol).map_err(spectral_error)?;
    let mut run = Run::new("roots", with(r.params, search_params(search)), &r.canonical);
    run.emit(out, &to_json(&roots_document(&report)))?;
    eprintln!("{} eigenvalue(s)", report.records.len());
    run.finish(out)?;
    report_problems(&report)
}

pub fn eigvec(
    args: &FieldArgs,
    search: SearchArgs,
    lambda: f64,
    window: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let r = resolve(args)?;
    let field = &r.field;
    let report = analyze(field, search.grid, search.refine_tol).map_err(spectral_error)?;
    let nearest = report
        .records
        .iter()
        .min_by(|a, b| angle_diff(a.lambda, lambda).abs().total_cmp(&angle_diff(b.lambda, lambda).abs()));
    let rec = match nearest {
        Some(rec) if angle_diff(rec.lambda, lambda).abs() <= search.refine_tol => rec,
        _ => {
            let listed: Vec<String> = report.records.iter().map(|r| num(r.lambda)).collect();
            return Err(CliError::Config(format!(
                "lambda = {} is not within {:e} of an eigenvalue; eigenvalues: [{}]",
                num(lambda),
                search.refine_tol,
                listed.join(", ")
            )));
        }
    };
    let psi = match window {
        Some(m) if rec.source == spectral::RootSource::ChiRoot => {
            let m = m as i64;
            let psi = build_eigenvector(field, rec.lambda, Some((field.x_minus() - m, field.x_plus() + m)))
                .map_err(spectral_error)?;
            let res = eigen_residual(field, &psi, rec.lambda);
            if res > OP_RESIDUAL_TOL {
                return Err(CliError::Numerical(format!(
                    "eigenvector on the requested window has residual {res:.3e} > {OP_RESIDUAL_TOL:e}"
                )));
            }
            psi
        }
        Some(_) => {
            eprintln!("note: compactly supported eigenvector, --window ignored");
            rec.eigvec.clone()
        }
        None => rec.eigvec.clone(),
    };
    let mut csv = Csv::new(&["x", "re1", "im1", "re2", "im2", "re3", "im3", "site_norm"]);
    for x in psi.lo()..=psi.hi() {
        let v = psi.get(x);
        let mut cells = vec![x.to_string()];
        for z in v.0 {
            cells.push(num(z.re));
            cells.push(num(z.im));
        }
        cells.push(num(v.norm()));
        csv.row(cells);
    }
    let params = with(
        r.params,
        with(search_params(search), json!({ "lambda": rec.lambda, "window": window })),
    );
    let mut run = Run::new("eigvec", params, &r.canonical);
    run.emit(out, &csv.into_string())?;
    run.finish(out)?;
    Ok(())
}

fn parse_psi0(spec: &str) -> Result<Vec3, CliError> {
    let parts: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--psi0: {e}")))?;
    if parts.len() != 6 || parts.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("--psi0 needs six finite numbers re1,im1,re2,im2,re3,im3".into()));
    }
    let v = Vec3::new(
        Complex::new(parts[0], parts[1]),
        Complex::new(parts[2], parts[3]),
        Complex::new(parts[4], parts[5]),
    );
    let n = v.norm();
    if n == 0.0 {
        return Err(CliError::Config("--psi0 is the zero vector".into()));
    }
    Ok(v.scale(Complex::from(1.0 / n)))
}

/// Distributions for `steps` steps plus the summary written to the manifest.
fn evolution_run(
    field: &CoinField,
    amp: Vec3,
    steps: usize,
    half_width: i64,
) -> Result<(Vec<Distribution>, Value), CliError> {
    if half_width < 0 {
        return Err(CliError::Config("--window must be non-negative".into()));
    }
    let psi0 = StateVector::localized(half_width, amp);
    let dists = run_evolution(field, &psi0, steps).map_err(|e| CliError::Numerical(e.to_string()))?;
    let last = dists.last().expect("at least the initial distribution");
    let average = if steps > 0 {
        Some(dists[1..].iter().map(|d| d.get(0)).sum::<f64>() / steps as f64)
    } else {
        None
    };
    let summary = json!({
        "total_probability": last.total(),
        "origin_mass_radius2": last.mass_near(0, 2),
        "time_averaged_origin": average,
    });
    Ok((dists, summary))
}

pub fn evolve(
    args: &FieldArgs,
    t: usize,
    window: Option<i64>,
    psi0: Option<&str>,
    trajectory: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let r = resolve(args)?;
    let amp = match psi0 {
        Some(s) => parse_psi0(s)?,
        None => StateVector::default_internal_state(),
    };
    let half_width = window.unwrap_or(t as i64 + qw3_core::evolution::LIGHT_CONE_MARGIN);
    let (dists, summary) = evolution_run(&r.field, amp, t, half_width)?;
    let mut csv = if trajectory {
        Csv::new(&["time", "x", "prob"])
    } else {
        Csv::new(&["x", "prob"])
    };
    if trajectory {
        for d in &dists {
            distribution_rows(&mut csv, d, true);
        }
    } else {
        distribution_rows(&mut csv, dists.last().unwrap(), false);
    }
    let params = with(
        r.params,
        json!({
            "t": t,
            "window": half_width,
            "psi0": amp.0.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
            "trajectory": trajectory,
            "summary": summary,
        }),
    );
    eprintln!("{}", to_json(&summary).trim());
    let mut run = Run::new("evolve", params, &r.canonical);
    run.emit(out, &csv.into_string())?;
    run.finish(out)?;
    Ok(())
}

pub fn demo(figure: Figure, theta_index: Option<u8>, search: SearchArgs, dir: &Path) -> Result<(), CliError> {
    let indices: Vec<usize> = match theta_index {
        Some(k) => vec![k as usize],
        None => (0..DEMO_THETAS.len()).collect(),
    };
    let (tag, preset) = match figure {
        Figure::Fig1 => ("fig1", Preset::OneDefectFourier),
        Figure::Fig2 => ("fig2", Preset::OneDefectFourier),
        Figure::Fig3 => ("fig3", Preset::TwoPhaseFourier),
        Figure::Fig4 => ("fig4", Preset::TwoPhaseFourier),
    };
    for k in indices {
        let theta = DEMO_THETAS[k];
        let field = preset_field(preset, Some(theta))?;
        let canonical = serialize_field(&field);
        let base = json!({ "figure": tag, "preset": preset_name(preset), "theta_index": k, "theta": theta });
        match figure {
            Figure::Fig1 | Figure::Fig3 => {
                let scan_path = dir.join(format!("{tag}_theta{k}_scan.csv"));
                let roots_path = dir.join(format!("{tag}_theta{k}_roots.json"));
                let report = analyze(&field, search.grid, search.refine_tol).map_err(spectral_error)?;
                let mut run = Run::new("demo", with(base, search_params(search)), &canonical);
                run.emit(Some(&scan_path), &scan_csv(&field, search.grid))?;
                run.emit(Some(&sidecar(&scan_path, ".lambda0.json")), &lambda0_json(&field))?;
                run.emit(Some(&roots_path), &to_json(&roots_document(&report)))?;
                eprintln!("{tag} theta = {}: {} eigenvalue(s)", num(theta), report.records.len());
                run.finish(Some(&roots_path))?;
                report_problems(&report)?;
            }
            Figure::Fig2 | Figure::Fig4 => {
                let amp = StateVector::default_internal_state();
                let margin = qw3_core::evolution::LIGHT_CONE_MARGIN;
                let (dists, mut summary) = evolution_run(&field, amp, DEMO_STEPS, DEMO_STEPS as i64 + margin)?;
                let (_, long) = evolution_run(&field, amp, DEMO_AVERAGE_STEPS, DEMO_AVERAGE_STEPS as i64 + margin)?;
                summary["time_averaged_origin_t200"] = long["time_averaged_origin"].clone();
                let path = dir.join(format!("{tag}_theta{k}.csv"));
                let mut csv = Csv::new(&["x", "prob"]);
                distribution_rows(&mut csv, dists.last().unwrap(), false);
                let params = with(base, json!({ "t": DEMO_STEPS, "summary": summary }));
                let mut run = Run::new("demo", params, &canonical);
                run.emit(Some(&path), &csv.into_string())?;
                eprintln!("{tag} theta = {}: {}", num(theta), to_json(&summary).trim());
                run.finish(Some(&path))?;
            }
        }
    }
    Ok(())
}
