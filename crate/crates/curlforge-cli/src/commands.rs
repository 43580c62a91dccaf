//! Implementations of the CLI subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::path::PathBuf;

use curlforge::catalog::{
    catalog_entry, list_catalog, CatalogError, Potential, SystemDefinition,
};
use curlforge::diagnostics::{invariant_report, linear_stability};
use curlforge::integrate::{IntegrateError, Trajectory};
use curlforge::state::PhaseState;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{parse_params, parse_vector, Failure};

/// Write to stdout, treating a closed pipe as a normal early exit.
fn emit(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Failure::usage(format!("cannot write to stdout: {e}"))),
    }
}

fn potential_choice(name: Option<&str>) -> Option<Potential> {
    match name {
        Some("linear") => Some(Potential::Linear),
        Some("quadratic") => Some(Potential::Quadratic),
        _ => None,
    }
}

fn map_catalog_error(err: CatalogError) -> Failure {
    Failure::usage(err.to_string())
}

fn map_integrate_error(err: IntegrateError) -> Failure {
    match err {
        IntegrateError::BlowUp { t, last_index } => Failure::numerical(format!(
            "numerical blow-up; last finite time t = {t} (sample {last_index})"
        )),
        other => Failure::usage(other.to_string()),
    }
}

fn build(
    name: &str,
    overrides: &BTreeMap<String, f64>,
    potential: Option<&str>,
) -> Result<SystemDefinition, Failure> {
    let entry = catalog_entry(name).map_err(map_catalog_error)?;
    entry
        .build_with_defaults(overrides, potential_choice(potential))
        .map_err(map_catalog_error)
}

pub fn list() -> Result<(), Failure> {
    let mut table = format!(
        "{:<22} {:<18} {:<4} {:<34} {:<10} description\n",
        "name", "formulation", "dim", "parameters (defaults)", "potential"
    );
    for entry in &list_catalog() {
        let params = if entry.params.is_empty() {
            "(none)".to_string()
        } else {
            entry
                .params
                .iter()
                .map(|p| format!("{}={}", p.name, p.default))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let potential = if entry.takes_potential { "U(xi)" } else { "-" };
        let _ = writeln!(
            table,
            "{:<22} {:<18} {:<4} {:<34} {:<10} {}",
            entry.name,
            entry.formulation.to_string(),
            entry.dim,
            params,
            potential,
            entry.description
        );
    }
    emit(&table)
}

fn render_csv(traj: &Trajectory, labels: &[&str]) -> String {
    let mut csv = String::new();
    csv.push('t');
    for label in labels {
        csv.push(',');
        csv.push_str(label);
    }
    csv.push('\n');
    for (state, t) in traj.states().iter().zip(traj.times()) {
        let _ = write!(csv, "{t}");
        for value in state.to_flat() {
            let _ = write!(csv, ",{value}");
        }
        csv.push('\n');
    }
    csv
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    system: &str,
    raw_params: &[String],
    potential: Option<&str>,
    raw_x0: &str,
    t0: f64,
    t1: f64,
    dt: f64,
    out: &Path,
) -> Result<(), Failure> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Failure::usage(format!("dt must be positive, got {dt}")));
    }
    if !t1.is_finite() || !t0.is_finite() || t1 <= t0 {
        return Err(Failure::usage(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let overrides = parse_params(raw_params)?;
    let sys = build(system, &overrides, potential)?;
    let x0 = parse_vector(raw_x0, "--x0")?;
    if x0.len() != sys.dim() {
        return Err(Failure::usage(format!(
            "--x0 has {} components, {system} needs {}",
            x0.len(),
            sys.dim()
        )));
    }
    let state = PhaseState::from_flat(&x0, sys.has_z())
        .map_err(|e| Failure::usage(format!("bad initial state: {e}")))?;
    let traj = sys.integrate(&state, t0, t1, dt).map_err(map_integrate_error)?;

    let csv = render_csv(&traj, &sys.state_labels());
    std::fs::write(out, csv)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", out.display())))?;

    let manifest_path: PathBuf = out.with_extension("manifest.json");
    let manifest = RunManifest {
        system: system.to_string(),
        params: sys.params().clone(),
        potential: potential.map(str::to_string),
        x0,
        t0,
        t1,
        dt,
        csv_path: out.display().to_string(),
        manifest_path: manifest_path.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let json = manifest.to_json();
    let parsed = RunManifest::from_json(&json)
        .map_err(|e| Failure::usage(format!("manifest does not round-trip: {e}")))?;
    debug_assert_eq!(parsed, manifest);
    std::fs::write(&manifest_path, json)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", manifest_path.display())))?;
    Ok(())
}

pub fn check(
    system: &str,
    raw_params: &[String],
    potential: Option<&str>,
    raw_x0: &str,
    t1: f64,
    dt: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if !dt.is_finite() || dt <= 0.0 || !t1.is_finite() || t1 <= 0.0 {
        return Err(Failure::usage(format!("need t1 > 0 and dt > 0, got t1={t1} dt={dt}")));
    }
    let overrides = parse_params(raw_params)?;
    let sys = build(system, &overrides, potential)?;
    let x0 = parse_vector(raw_x0, "--x0")?;
    if x0.len() != sys.dim() {
        return Err(Failure::usage(format!(
            "--x0 has {} components, {system} needs {}",
            x0.len(),
            sys.dim()
        )));
    }
    let state = PhaseState::from_flat(&x0, sys.has_z())
        .map_err(|e| Failure::usage(format!("bad initial state: {e}")))?;
    let traj = sys.integrate(&state, 0.0, t1, dt).map_err(map_integrate_error)?;
    let report = invariant_report(&sys, &traj)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, &json)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        None => emit(&format!("{json}\n"))?,
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::check(format!("{system}: invariant suite failed")))
    }
}

#[derive(Serialize)]
struct ComparePair {
    a: String,
    b: String,
    max_config_gap: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CompareReport {
    systems: Vec<String>,
    x0_config: Vec<f64>,
    t1: f64,
    dt: f64,
    tolerance: f64,
    pairs: Vec<ComparePair>,
    verdict: String,
}

#[allow(clippy::too_many_arguments)]
pub fn compare(
    raw_systems: &str,
    raw_params: &[String],
    potential: Option<&str>,
    raw_config: &str,
    z0: f64,
    t1: f64,
    dt: f64,
    tolerance: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let names: Vec<String> = raw_systems
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.len() < 2 {
        return Err(Failure::usage("--systems needs at least two catalog names"));
    }
    if !dt.is_finite() || dt <= 0.0 || !t1.is_finite() || t1 <= 0.0 {
        return Err(Failure::usage(format!("need t1 > 0 and dt > 0, got t1={t1} dt={dt}")));
    }

    // Shared overrides apply wherever the name exists in a schema; scoped
    // SYSTEM.NAME=VALUE overrides apply to that system alone.
    let parsed = parse_params(raw_params)?;
    let mut shared = BTreeMap::new();
    let mut scoped: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (key, value) in parsed {
        match key.split_once('.') {
            Some((system, name)) => {
                if !names.iter().any(|n| n == system) {
                    return Err(Failure::usage(format!(
                        "scoped parameter '{key}': '{system}' is not in --systems"
                    )));
                }
                scoped
                    .entry(system.to_string())
                    .or_default()
                    .insert(name.to_string(), value);
            }
            None => {
                shared.insert(key, value);
            }
        }
    }

    let config = parse_vector(raw_config, "--x0-config")?;
    let mut built = Vec::new();
    for name in &names {
        let entry = catalog_entry(name).map_err(map_catalog_error)?;
        let mut overrides: BTreeMap<String, f64> = shared
            .iter()
            .filter(|(k, _)| entry.params.iter().any(|p| p.name == k.as_str()))
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        if let Some(extra) = scoped.get(name) {
            overrides.extend(extra.clone());
        }
        let sys = entry
            .build_with_defaults(&overrides, potential_choice(potential))
            .map_err(map_catalog_error)?;
        built.push(sys);
    }

    let base_dim = built[0].base_dim();
    if built.iter().any(|s| s.base_dim() != base_dim) {
        return Err(Failure::usage(
            "systems do not share a configuration space (mixed base dimensions)",
        ));
    }
    if config.len() != 2 * base_dim {
        return Err(Failure::usage(format!(
            "--x0-config needs {} components (positions then velocities)",
            2 * base_dim
        )));
    }
    let (q0, v0) = config.split_at(base_dim);

    let mut trajectories = Vec::new();
    for sys in &built {
        let x0 = sys
            .state_from_config(q0, v0, Some(z0))
            .map_err(|e| Failure::usage(format!("bad initial state for {}: {e}", sys.name())))?;
        let traj = sys.integrate(&x0, 0.0, t1, dt).map_err(map_integrate_error)?;
        let configs: Vec<Vec<f64>> = traj
            .states()
            .iter()
            .map(|s| s.q()[..base_dim].to_vec())
            .collect();
        trajectories.push(configs);
    }

    let mut pairs = Vec::new();
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let gap = trajectories[i]
                .iter()
                .zip(&trajectories[j])
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                .fold(0.0_f64, f64::max);
            pairs.push(ComparePair {
                a: names[i].clone(),
                b: names[j].clone(),
                max_config_gap: gap,
                pass: gap <= tolerance,
            });
        }
    }

    let all_pass = pairs.iter().all(|p| p.pass);
    let report = CompareReport {
        systems: names,
        x0_config: config,
        t1,
        dt,
        tolerance,
        pairs,
        verdict: if all_pass { "pass".into() } else { "fail".into() },
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, &json)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        None => emit(&format!("{json}\n"))?,
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::check("configuration trajectories diverge beyond tolerance"))
    }
}

pub fn stability(
    system: &str,
    raw_grid: &[String],
    raw_params: &[String],
    out: Option<&Path>,
) -> Result<(), Failure> {
    if raw_grid.is_empty() {
        return Err(Failure::usage("--grid is required (at least one NAME=V1,V2,... axis)"));
    }
    let fixed = parse_params(raw_params)?;
    let mut axes: Vec<(String, Vec<f64>)> = Vec::new();
    for item in raw_grid {
        let (name, values) = item
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--grid '{item}': expected NAME=V1,V2,...")))?;
        let values = parse_vector(values, "--grid")?;
        if values.is_empty() {
            return Err(Failure::usage(format!("--grid '{item}': empty axis")));
        }
        axes.push((name.to_string(), values));
    }

    let entry = catalog_entry(system).map_err(map_catalog_error)?;
    let param_names: Vec<&str> = entry.params.iter().map(|p| p.name).collect();

    // Cross product in flag order, rightmost axis fastest.
    let mut combos: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new()];
    for (name, values) in &axes {
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for value in values {
                let mut fresh = combo.clone();
                fresh.insert(name.clone(), *value);
                next.push(fresh);
            }
        }
        combos = next;
    }

    let mut csv = String::new();
    csv.push_str(&param_names.join(","));
    csv.push_str(",re_1,im_1,re_2,im_2,re_3,im_3,re_4,im_4,max_re,classification\n");
    for combo in combos {
        let mut overrides = fixed.clone();
        overrides.extend(combo);
        let sys = build(system, &overrides, None)?;
        let result = linear_stability(&sys).map_err(|e| Failure::usage(e.to_string()))?;
        let mut row = String::new();
        for name in &param_names {
            if !row.is_empty() {
                row.push(',');
            }
            let _ = write!(row, "{}", sys.params()[*name]);
        }
        let mut eigen = result.eigenvalues.clone();
        eigen.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .expect("finite eigenvalues")
        });
        for lambda in &eigen {
            let _ = write!(row, ",{},{}", lambda.re, lambda.im);
        }
        let _ = write!(row, ",{},{}", result.max_real_part, result.classification);
        csv.push_str(&row);
        csv.push('\n');
    }

    match out {
        Some(path) => std::fs::write(path, &csv)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        None => emit(&csv)?,
    }
    Ok(())
}
