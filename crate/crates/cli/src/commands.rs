//! `sweep`, `classify`, `simulate` and `verify`.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use dcform_core::analysis::{
    label_bands, oii, oii_cfi_residual, passivity_check, sweep_index, Band, ConditionReport, IndexKind, Tolerances,
};
use dcform_core::control::ControllerKind;
use dcform_core::numfmt::sig9;
use dcform_core::sim::{
    build_model, linearize_source, load_step_metrics, measure_impedance_injection, simulate, zout_from_statespace,
    InjectionConfig, LoadStepMetrics, Source,
};
use dcform_core::tf::{log_space, RationalTf};
use dcform_core::Error;

use crate::error::CliError;
use crate::output::{atomic_write, index_csv, out_path, table_csv, trace_csv};
use crate::scenario::{Case, Scenario, SourceChoice};

/// Sources named on the command line, or the scenario's own.
pub fn select_cases(sc: &Scenario, controllers: &[String]) -> Result<Vec<Case>, CliError> {
    let mut choices = Vec::new();
    for name in controllers {
        if name == "all" {
            choices.extend(ControllerKind::ALL.map(SourceChoice::Law));
        } else {
            choices.push(name.parse()?);
        }
    }
    if choices.is_empty() {
        choices.push(sc.default_choice()?);
    }
    choices.dedup();
    choices.into_iter().map(|c| sc.case(c)).collect()
}

pub fn parse_indices(sc: &Scenario, names: &[String]) -> Result<Vec<IndexKind>, CliError> {
    if names.is_empty() {
        let mut v = vec![IndexKind::Oii, IndexKind::Cfi];
        if !sc.grid.is_empty() {
            v.push(IndexKind::Vfi);
        }
        return Ok(v);
    }
    names
        .iter()
        .map(|n| IndexKind::parse(n).map_err(|_| CliError::Input(format!("unknown index '{n}'"))))
        .collect()
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances, CliError> {
    match tol {
        None => Ok(Tolerances::default()),
        Some(t) if t >= 0.0 && t.is_finite() => Ok(Tolerances { mag: t, phase: t }),
        Some(t) => Err(CliError::Input(format!("--tol must be a non-negative number, got {t}"))),
    }
}

fn line_tf(sc: &Scenario) -> Result<Option<RationalTf>, CliError> {
    Ok(sc.line()?.map(|g| g.z_g()))
}

pub fn sweep(sc: &Scenario, cases: &[Case], kinds: &[IndexKind], tol: Option<f64>, out: &Path) -> Result<(), CliError> {
    let tol = tolerances(tol)?;
    let omegas = sc.omegas()?;
    let z_g = line_tf(sc)?;
    if kinds.contains(&IndexKind::Vfi) && z_g.is_none() {
        return Err(CliError::Model("VFI needs at least one grid line".into()));
    }
    for case in cases {
        for &kind in kinds {
            let curve = sweep_index(kind, &case.impedance, z_g.as_ref(), &omegas, tol)?;
            let path = out_path(out, &format!("{}_{}.csv", case.name(), kind.name()));
            atomic_write(&path, &index_csv(&curve)?)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn band_text(bands: &[Band]) -> String {
    bands
        .iter()
        .map(|b| format!("{} on [{}, {}] rad/s", b.label, sig9(b.omega_lo), sig9(b.omega_hi)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn condition_text(name: &str, c: &ConditionReport) -> String {
    let verdict = if c.pass {
        "pass".to_string()
    } else {
        let spans: Vec<String> = c
            .bands
            .iter()
            .map(|(a, b)| format!("[{}, {}]", sig9(*a), sig9(*b)))
            .collect();
        format!("fail on {} rad/s", spans.join(", "))
    };
    format!(
        "passivity condition ({name}): {verdict} (dc limit {}, hf limit {})",
        c.dc_limit.as_str(),
        c.hf_limit.as_str()
    )
}

fn condition_json(c: &ConditionReport) -> Value {
    json!({
        "pass": c.pass,
        "violating_bands": c.bands.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
        "dc_limit": c.dc_limit.as_str(),
        "hf_limit": c.hf_limit.as_str(),
    })
}

pub fn classify(
    sc: &Scenario,
    cases: &[Case],
    kinds: &[IndexKind],
    tol: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    let tol = tolerances(tol)?;
    let omegas = sc.omegas()?;
    let z_g = line_tf(sc)?;
    let mut text = String::new();
    for case in cases {
        writeln!(text, "{}", case.name()).unwrap();
        let mut indices = serde_json::Map::new();
        for &kind in kinds {
            if kind == IndexKind::Vfi && z_g.is_none() {
                writeln!(text, "  VFI: skipped (no grid line)").unwrap();
                continue;
            }
            let curve = sweep_index(kind, &case.impedance, z_g.as_ref(), &omegas, tol)?;
            let bands = label_bands(&curve);
            writeln!(text, "  {}: {}", kind.name().to_uppercase(), band_text(&bands)).unwrap();
            indices.insert(
                kind.name().into(),
                bands
                    .iter()
                    .map(|b| json!({"label": b.label.as_str(), "omega_lo": b.omega_lo, "omega_hi": b.omega_hi}))
                    .collect(),
            );
        }
        // Condition (ii) needs a line; the placeholder result is not reported.
        let mut passivity = serde_json::Map::new();
        let line = z_g.clone().unwrap_or_else(|| RationalTf::constant(1.0));
        let rep = passivity_check(&case.impedance.z_out, case.impedance.k_d, &line, &omegas)?;
        writeln!(text, "  {}", condition_text("i", &rep.source)).unwrap();
        passivity.insert("source".into(), condition_json(&rep.source));
        if z_g.is_some() {
            writeln!(text, "  {}", condition_text("ii", &rep.line)).unwrap();
            passivity.insert("line".into(), condition_json(&rep.line));
        } else {
            writeln!(text, "  passivity condition (ii): skipped (no grid line)").unwrap();
        }
        let doc = json!({
            "controller": case.name(),
            "omega_min": omegas[0],
            "omega_max": omegas[omegas.len() - 1],
            "indices": indices,
            "passivity": passivity,
        });
        let path = out_path(out, &format!("{}_classify.json", case.name()));
        atomic_write(&path, serde_json::to_string_pretty(&doc).expect("json").as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

pub fn simulate_cmd(sc: &Scenario, cases: &[Case], out: &Path) -> Result<(), CliError> {
    let cfg = sc.sim_config()?;
    let mut rows = Vec::new();
    for case in cases {
        let model = build_model(sc.sim_source(case)?, sc.lines()?, sc.load_models()?)?;
        let trace = simulate(&model, &cfg)?;
        let path = out_path(out, &format!("{}_trace.csv", case.name()));
        atomic_write(&path, &trace_csv(&trace)?)?;
        println!("{}", path.display());
        let m = match load_step_metrics(&trace, model.nominal_voltage()) {
            Ok(m) => m,
            Err(Error::NoEvent) => LoadStepMetrics {
                undershoot: 0.0,
                overshoot: 0.0,
                settling_time_2pct: 0.0,
                steady_state_deviation: 0.0,
            },
            Err(e) => return Err(e.into()),
        };
        rows.push(vec![
            case.name().to_string(),
            sig9(m.undershoot),
            sig9(m.overshoot),
            sig9(m.settling_time_2pct),
            sig9(m.steady_state_deviation),
        ]);
    }
    let header = ["controller", "undershoot_V", "overshoot_V", "settling_time_s", "steady_state_deviation_V"];
    print_table(&header, &rows);
    atomic_write(&out_path(out, "metrics.csv"), &table_csv(&header, &rows)?)?;
    Ok(())
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!("{}", line(header.to_vec()));
    for r in rows {
        println!("{}", line(r.iter().map(String::as_str).collect()));
    }
}

struct Check {
    controller: &'static str,
    name: &'static str,
    value: f64,
    tol: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value < self.tol
    }
}

fn rel(a: dcform_core::tf::Complex64, b: dcform_core::tf::Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn case_checks(sc: &Scenario, case: &Case, tol: Option<f64>) -> Result<Vec<Check>, CliError> {
    let pick = |t: f64| tol.unwrap_or(t);
    let omegas = sc.omegas()?;
    let imp = &case.impedance;
    let mut out = Vec::new();

    let back = imp.z_out_prime.parallel(&imp.y_dc.inv()?);
    let decomposition = match back {
        Ok(back) => omegas.iter().try_fold(0.0f64, |m, &w| {
            Ok::<f64, CliError>(m.max(rel(back.eval_jw(w)?, imp.z_out.eval_jw(w)?)))
        })?,
        // Y_dc = 0: the capacitor branch is open and Z'_out is Z_out itself.
        Err(Error::DivisionByZero) => omegas.iter().try_fold(0.0f64, |m, &w| {
            Ok::<f64, CliError>(m.max(rel(imp.z_out_prime.eval_jw(w)?, imp.z_out.eval_jw(w)?)))
        })?,
        Err(e) => return Err(e.into()),
    };
    out.push(Check {
        controller: case.name(),
        name: "decomposition",
        value: decomposition,
        tol: pick(1e-9),
    });
    let identity = omegas.iter().try_fold(0.0f64, |m, &w| {
        let scale = oii(&imp.z_out, imp.k_d, w)?.norm().max(1.0);
        Ok::<f64, CliError>(m.max(oii_cfi_residual(imp, w)?.norm() / scale))
    })?;
    out.push(Check {
        controller: case.name(),
        name: "oii_cfi_identity",
        value: identity,
        tol: pick(1e-9),
    });

    let Some(conv) = &case.converter else {
        return Ok(out);
    };
    let lm = linearize_source(&Source::converter(conv.clone())?)?;
    let lin = log_space(1.0, 6e4, 50).iter().try_fold(0.0f64, |m, &w| {
        let a = imp.z_out.eval_jw(w)?;
        let b = zout_from_statespace(&lm, w)?;
        Ok::<f64, CliError>(m.max((b.norm() / a.norm() - 1.0).abs()).max((b / a).arg().abs()))
    })?;
    out.push(Check {
        controller: case.name(),
        name: "zout_vs_linearized",
        value: lin,
        tol: pick(1e-6),
    });

    if sc.grid.is_empty() {
        return Ok(out);
    }
    let model = build_model(sc.sim_source(case)?, sc.lines()?, sc.load_models()?)?;
    let w = log_space(10.0, conv.current.omega_bi / 2.0, 10);
    let meas = measure_impedance_injection(&model, &w, &InjectionConfig::default())?;
    // The power flow re-derives the operating point; compare against that model.
    let z = match &model.source {
        Source::Converter(c) => c.model.z_out()?,
        Source::Desired(_) => unreachable!("converter case"),
    };
    let (mut mag, mut deg) = (0.0f64, 0.0f64);
    for s in &meas {
        let a = z.eval_jw(s.omega)?;
        mag = mag.max((s.value.norm() / a.norm() - 1.0).abs());
        deg = deg.max((s.value / a).arg().to_degrees().abs());
    }
    out.push(Check {
        controller: case.name(),
        name: "injection_magnitude",
        value: mag,
        tol: pick(0.02),
    });
    out.push(Check {
        controller: case.name(),
        name: "injection_phase_deg",
        value: deg,
        tol: pick(2.0),
    });
    Ok(out)
}

pub fn verify(
    sc: &Scenario,
    cases: &mut [Case],
    tol: Option<f64>,
    scale_zout: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    if let Some(t) = tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Input(format!("--tol must be a non-negative number, got {t}")));
        }
    }
    if let Some(g) = scale_zout {
        for c in cases.iter_mut() {
            c.impedance.z_out = c.impedance.z_out.scale(g);
        }
    }
    let mut checks = Vec::new();
    for case in cases.iter() {
        checks.extend(case_checks(sc, case, tol)?);
    }
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.controller.to_string(),
                c.name.to_string(),
                sig9(c.value),
                sig9(c.tol),
                if c.pass() { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    let header = ["controller", "check", "value", "tolerance", "status"];
    print_table(&header, &rows);
    atomic_write(&out_path(out, "verify.csv"), &table_csv(&header, &rows)?)?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass())
        .map(|c| format!("{}/{}", c.controller, c.name))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(failed.join(", ")))
    }
}
