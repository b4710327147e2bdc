//! Runs configured experiments: effective-Hamiltonian reports, full versus
//! effective simulations, and parameter sweeps.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, OutputFormat, SimulateConfig, SweepConfig};
use crate::dynamics::{
    compare, max_stable_dt, propagate, ComparisonReport, PropagationOptions, StateVector,
    Trajectory,
};
use crate::elimination::{
    gjames_third_order, james_second_order, james_terms, lambda_amplitude_heff, markov_eliminate,
    paulisch_lambda_heff, CoefficientLine, EffectiveHamiltonian, GJamesOptions, JamesOptions,
    Matrix2, Method, RecurrenceTable,
};
use crate::error::{Error, Result};
use crate::model::{build_full_hamiltonian, unsigned_zero, SystemSpec};

/// Target number of trajectory samples when no stride is configured.
const DEFAULT_SAMPLES: usize = 2000;

/// Joint-space effective Hamiltonian of `spec` by `method`.
pub fn effective_hamiltonian(spec: &SystemSpec, method: Method) -> Result<EffectiveHamiltonian> {
    let full = || build_full_hamiltonian(spec);
    match method {
        Method::Markov => markov_eliminate(spec),
        Method::James2 => {
            let h = full()?;
            james_second_order(&h.space, &james_terms(&h.terms)?, JamesOptions::default())
        }
        Method::Gjames3 => {
            let h = full()?;
            gjames_third_order(&h.space, &james_terms(&h.terms)?, GJamesOptions::default())
        }
        Method::Amplitude | Method::Paulisch => Err(Error::validation(format!(
            "{method} yields a 2×2 matrix, not a joint-space Hamiltonian"
        ))),
    }
}

/// Closed-form 2×2 reference in the basis `(|g,n⟩, |2,n+1⟩)`.
///
/// The references write couplings as `Ω/2`, so `Ω₁ = 2Ω` and
/// `Ω₂ = 2η√(n+1)`; `Δ = Δ₁ − Δ₂`, `Δ̄ = (Δ₁ + Δ₂)/2`.
pub fn reference_matrix(spec: &SystemSpec, method: Method, photons: usize) -> Result<Matrix2> {
    spec.ensure_valid()?;
    if spec.n != 2 {
        return Err(Error::validation(format!(
            "{method} applies to the lambda system only (n = 2), got n = {}",
            spec.n
        )));
    }
    let omega1 = 2.0 * spec.drive(1).value(0.0);
    let omega2 = C64::new(2.0 * spec.eta * ((photons + 1) as f64).sqrt(), 0.0);
    let (d1, d2) = (spec.detuning(1), spec.detuning(2));
    let (delta, delta_bar) = (d1 - d2, 0.5 * (d1 + d2));
    match method {
        Method::Amplitude => lambda_amplitude_heff(omega1, omega2, delta, delta_bar),
        Method::Paulisch => paulisch_lambda_heff(omega1, omega2, delta, delta_bar),
        _ => Err(Error::validation(format!(
            "{method} is not a closed-form reference"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixReport {
    pub basis: [String; 2],
    /// Row-major `[re, im]` pairs.
    pub entries: [[[f64; 2]; 2]; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeffReport {
    pub method: Method,
    pub lines: Vec<CoefficientLine>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recurrence: Option<RecurrenceTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixReport>,
}

impl HeffReport {
    fn from_joint(heff: &EffectiveHamiltonian) -> Self {
        Self {
            method: heff.method,
            lines: heff.coefficient_report(),
            notes: heff.notes.clone(),
            recurrence: heff.recurrence.clone(),
            matrix: None,
        }
    }

    fn from_matrix(method: Method, m: Matrix2, photons: usize) -> Self {
        let e = |z: C64| [z.re, z.im];
        Self {
            method,
            lines: Vec::new(),
            notes: Vec::new(),
            recurrence: None,
            matrix: Some(MatrixReport {
                basis: [format!("|g,{photons}⟩"), format!("|2,{}⟩", photons + 1)],
                entries: [[e(m[0][0]), e(m[0][1])], [e(m[1][0]), e(m[1][1])]],
            }),
        }
    }

    /// Tab-separated text; joint-space reports list one coupling per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("# method={}\n", self.method);
        if let Some(m) = &self.matrix {
            let _ = writeln!(s, "# basis\t{}\t{}", m.basis[0], m.basis[1]);
            for row in &m.entries {
                let cells: Vec<String> = row
                    .iter()
                    .map(|[re, im]| {
                        format!("{:.12e}{:+.12e}i", unsigned_zero(*re), unsigned_zero(*im))
                    })
                    .collect();
                let _ = writeln!(s, "{}", cells.join("\t"));
            }
        } else {
            s.push_str("# label\tcoefficient\tfrequency\tmethod\tkind\tamplitude\n");
            for line in &self.lines {
                let _ = writeln!(s, "{line}");
            }
        }
        for note in &self.notes {
            let _ = writeln!(s, "# note: {note}");
        }
        s
    }
}

fn initial_photons(cfg: &ExperimentConfig) -> usize {
    cfg.simulate.as_ref().map_or(1, |s| s.initial_photons)
}

/// One report for `method`.
pub fn heff_report(cfg: &ExperimentConfig, method: Method) -> Result<HeffReport> {
    if method.is_joint_space() {
        effective_hamiltonian(&cfg.system, method).map(|h| HeffReport::from_joint(&h))
    } else {
        let n = initial_photons(cfg);
        reference_matrix(&cfg.system, method, n).map(|m| HeffReport::from_matrix(method, m, n))
    }
}

/// Every configured method, in config order. Failures are kept per method.
pub fn run_heff(cfg: &ExperimentConfig) -> Result<Vec<(Method, Result<HeffReport>)>> {
    cfg.ensure_valid()?;
    Ok(cfg
        .methods
        .iter()
        .map(|&m| (m, heff_report(cfg, m)))
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectiveRun {
    pub method: Method,
    pub trajectory: Trajectory,
    pub comparison: ComparisonReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationOutcome {
    pub t_final: f64,
    pub dt: f64,
    pub initial_state: String,
    pub full: Trajectory,
    pub effective: Vec<EffectiveRun>,
    pub notes: Vec<String>,
}

impl SimulationOutcome {
    /// Serializable summary without the sampled series.
    pub fn summary(&self) -> SimulationSummary {
        SimulationSummary {
            t_final: self.t_final,
            dt: self.dt,
            initial_state: self.initial_state.clone(),
            full_max_norm_drift: self.full.max_norm_drift(),
            comparisons: self
                .effective
                .iter()
                .map(|r| (r.method, r.comparison.clone()))
                .collect(),
            notes: self.notes.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub t_final: f64,
    pub dt: f64,
    pub initial_state: String,
    pub full_max_norm_drift: f64,
    pub comparisons: Vec<(Method, ComparisonReport)>,
    pub notes: Vec<String>,
}

impl SimulationSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# t_final={:.12e}\tdt={:.12e}", self.t_final, self.dt);
        let _ = writeln!(s, "# initial_state={}", self.initial_state);
        let _ = writeln!(s, "# full_max_norm_drift={:.3e}", self.full_max_norm_drift);
        s.push_str(
            "method\tmax_population_error\trms_population_error\tmax_leakage\tfull_rabi\teffective_rabi\trabi_relative_error\n",
        );
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
        for (m, c) in &self.comparisons {
            let _ = writeln!(
                s,
                "{m}\t{:.6e}\t{:.6e}\t{:.6e}\t{}\t{}\t{}",
                c.max_population_error,
                c.rms_population_error,
                c.max_leakage,
                opt(c.full_rabi_frequency),
                opt(c.effective_rabi_frequency),
                opt(c.rabi_relative_error)
            );
        }
        for note in &self.notes {
            let _ = writeln!(s, "# note: {note}");
        }
        s
    }
}

/// Largest coupling out of the initial basis state at t = 0 in the Markov
/// effective model; the `P_N` oscillation then has period `π / g`.
pub fn effective_coupling_from(spec: &SystemSpec, level: usize, photons: usize) -> Result<f64> {
    let heff = markov_eliminate(spec)?;
    let h = heff.hamiltonian().evaluate(0.0);
    let i0 = heff.space.index(level, photons);
    Ok(h.entries()
        .iter()
        .filter(|&&(r, c, _)| c == i0 && r != i0)
        .map(|e| e.2.norm())
        .fold(0.0, f64::max))
}

/// Simulation window from `t_final` or `rabi_periods`.
pub fn resolve_t_final(spec: &SystemSpec, sim: &SimulateConfig) -> Result<f64> {
    if let Some(t) = sim.t_final {
        return Ok(t);
    }
    let periods = sim.rabi_periods.unwrap_or(1.0);
    let g = effective_coupling_from(spec, sim.initial_level, sim.initial_photons)?;
    if g == 0.0 {
        return Err(Error::validation(
            "simulate.rabi_periods: the effective model does not couple the initial state; give t_final instead",
        ));
    }
    Ok(periods * std::f64::consts::PI / g)
}

/// Full model plus every joint-space method on one time grid.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulationOutcome> {
    cfg.ensure_valid()?;
    let sim = cfg.simulate.clone().unwrap_or_default();
    let spec = cfg.simulation_spec();
    let full_h = build_full_hamiltonian(&spec)?;
    let mut notes = Vec::new();
    let mut effective_h = Vec::new();
    for &m in &cfg.methods {
        if m.is_joint_space() {
            effective_h.push((m, effective_hamiltonian(&spec, m)?.hamiltonian()));
        } else {
            notes.push(format!("{m}: closed-form 2×2 reference, not simulated"));
        }
    }
    let t_final = resolve_t_final(&spec, &sim)?;
    let dt = match sim.dt {
        Some(dt) => dt,
        None => {
            let limit = effective_h
                .iter()
                .map(|(_, h)| max_stable_dt(h))
                .fold(max_stable_dt(&full_h), f64::min);
            if limit.is_finite() {
                0.5 * limit
            } else {
                t_final.max(1.0) / DEFAULT_SAMPLES as f64
            }
        }
    };
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let mut opts =
        PropagationOptions::new(dt).stride(sim.stride.unwrap_or((steps / DEFAULT_SAMPLES).max(1)));
    if let Some(tol) = sim.norm_tolerance {
        opts = opts.norm_tolerance(tol);
    }
    let psi0 = StateVector::basis(&full_h.space, sim.initial_level, sim.initial_photons)?;
    let initial_state = full_h
        .space
        .basis_label(full_h.space.index(sim.initial_level, sim.initial_photons));

    let full = propagate(&full_h, &psi0, t_final, &opts)?;
    let effective = effective_h
        .par_iter()
        .map(|(m, h)| {
            let trajectory = propagate(h, &psi0, t_final, &opts)?;
            let comparison = compare(&full, &trajectory)?;
            Ok(EffectiveRun {
                method: *m,
                trajectory,
                comparison,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationOutcome {
        t_final,
        dt,
        initial_state,
        full,
        effective,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepMember {
    pub method: Method,
    /// Principal coupling at t = 0.
    #[serde(with = "crate::complex_serde::option")]
    pub coefficient: Option<C64>,
    pub max_population_error: Option<f64>,
    pub rabi_relative_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub members: Vec<SweepMember>,
    pub max_leakage: Option<f64>,
    /// Failure of the whole row, e.g. an invalid member config.
    pub error: Option<String>,
}

fn sweep_row(sweep: &SweepConfig, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        members: Vec::new(),
        max_leakage: None,
        error: None,
    };
    let cfg = match sweep
        .member(value)
        .and_then(|c| c.ensure_valid().map(|_| c))
    {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let sim = if cfg.simulate.is_some() {
        Some(run_simulate(&cfg))
    } else {
        None
    };
    if let Some(Ok(out)) = &sim {
        row.max_leakage = out.effective.first().map(|r| r.comparison.max_leakage);
    }
    for &m in &cfg.methods {
        let mut member = SweepMember {
            method: m,
            coefficient: None,
            max_population_error: None,
            rabi_relative_error: None,
            error: None,
        };
        if m.is_joint_space() {
            match effective_hamiltonian(&cfg.system, m) {
                Ok(h) => member.coefficient = h.principal_coupling().map(|l| l.coefficient),
                Err(e) => member.error = Some(e.to_string()),
            }
        } else {
            match reference_matrix(&cfg.system, m, initial_photons(&cfg)) {
                Ok(mat) => member.coefficient = Some(mat[1][0]),
                Err(e) => member.error = Some(e.to_string()),
            }
        }
        match &sim {
            Some(Ok(out)) => {
                if let Some(r) = out.effective.iter().find(|r| r.method == m) {
                    member.max_population_error = Some(r.comparison.max_population_error);
                    member.rabi_relative_error = r.comparison.rabi_relative_error;
                }
            }
            Some(Err(e)) if member.error.is_none() => member.error = Some(e.to_string()),
            _ => {}
        }
        row.members.push(member);
    }
    row
}

/// One row per axis value, in axis order; members run concurrently and
/// failures are recorded in their row.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRow>> {
    sweep.base.ensure_valid()?;
    if sweep.sweep.values.is_empty() {
        return Err(Error::validation(
            "sweep.values: at least one value required",
        ));
    }
    Ok(sweep
        .sweep
        .values
        .par_iter()
        .map(|&v| sweep_row(sweep, v))
        .collect())
}

/// Summary CSV: axis value, then per method the coefficient, its modulus,
/// the max population error and the Rabi-frequency error, then errors.
pub fn sweep_csv(axis: &str, methods: &[Method], rows: &[SweepRow]) -> String {
    let mut s = String::from(axis);
    for m in methods {
        let _ = write!(
            s,
            ",{m}_coefficient_re,{m}_coefficient_im,{m}_coefficient_abs,{m}_max_population_error,{m}_rabi_relative_error"
        );
    }
    s.push_str(",max_leakage,error\n");
    let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{:.11e}", unsigned_zero(x)));
    for row in rows {
        let _ = write!(s, "{:.11e}", row.value);
        let mut errors: Vec<String> = row.error.iter().cloned().collect();
        for m in methods {
            let member = row.members.iter().find(|x| x.method == *m);
            let c = member.and_then(|x| x.coefficient);
            let _ = write!(
                s,
                ",{},{},{},{},{}",
                num(c.map(|z| z.re)),
                num(c.map(|z| z.im)),
                num(c.map(|z| z.norm())),
                num(member.and_then(|x| x.max_population_error)),
                num(member.and_then(|x| x.rabi_relative_error)),
            );
            if let Some(e) = member.and_then(|x| x.error.as_ref()) {
                errors.push(format!("{m}: {e}"));
            }
        }
        let err = errors.join(" | ").replace('"', "'");
        let _ = writeln!(
            s,
            ",{},{}",
            num(row.max_leakage),
            if err.is_empty() {
                String::new()
            } else {
                format!("\"{err}\"")
            }
        );
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Config(format!("JSON encoding: {e}")))
}

/// `heff_<method>.txt` / `.json` per successful report.
pub fn write_heff(dir: &Path, formats: &[OutputFormat], reports: &[HeffReport]) -> Result<()> {
    for r in reports {
        if formats.contains(&OutputFormat::Text) || formats.contains(&OutputFormat::Csv) {
            write(dir, &format!("heff_{}.txt", r.method), &r.to_text())?;
        }
        if formats.contains(&OutputFormat::Json) {
            write(dir, &format!("heff_{}.json", r.method), &to_json(r)?)?;
        }
    }
    Ok(())
}

/// `trajectory_full.csv`, `trajectory_<method>.csv` and `comparison.txt` /
/// `comparison.json`.
pub fn write_simulation(
    dir: &Path,
    formats: &[OutputFormat],
    out: &SimulationOutcome,
) -> Result<()> {
    if formats.contains(&OutputFormat::Csv) {
        write(dir, "trajectory_full.csv", &out.full.to_csv())?;
        for r in &out.effective {
            write(
                dir,
                &format!("trajectory_{}.csv", r.method),
                &r.trajectory.to_csv(),
            )?;
        }
    }
    let summary = out.summary();
    if formats.contains(&OutputFormat::Text) {
        write(dir, "comparison.txt", &summary.to_text())?;
    }
    if formats.contains(&OutputFormat::Json) {
        write(dir, "comparison.json", &to_json(&summary)?)?;
    }
    Ok(())
}

/// `sweep_summary.csv` and optionally `sweep_summary.json`.
pub fn write_sweep(
    dir: &Path,
    formats: &[OutputFormat],
    sweep: &SweepConfig,
    rows: &[SweepRow],
) -> Result<()> {
    write(
        dir,
        "sweep_summary.csv",
        &sweep_csv(&sweep.sweep.axis.to_string(), &sweep.base.methods, rows),
    )?;
    if formats.contains(&OutputFormat::Json) {
        write(dir, "sweep_summary.json", &to_json(&rows)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{preset, sweep_preset};
    use crate::model::DriveEnvelope;

    #[test]
    fn heff_for_every_lambda_method() {
        let cfg = preset("lambda_2photon").unwrap();
        let out = run_heff(&cfg).unwrap();
        assert_eq!(out.len(), 3);
        for (m, r) in &out {
            let r = r.as_ref().unwrap();
            assert_eq!(r.method, *m);
            assert!(r.to_text().starts_with(&format!("# method={m}")));
        }
        let markov = out[0].1.as_ref().unwrap();
        assert_eq!(markov.lines.len(), 1);
        assert!((markov.lines[0].coefficient - C64::new(-0.02, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reference_matrix_matches_second_order_coupling() {
        // Δ1 = Δ2: amplitude reference off-diagonal = Ω η √(n+1) / Δ̄.
        let cfg = preset("lambda_2photon").unwrap();
        let m = reference_matrix(&cfg.system, Method::Amplitude, 1).unwrap();
        assert!((m[1][0].re + 2f64.sqrt() / 100.0).abs() < 1e-15);
        // Paulisch's coupling carries 1/(Δ1 − Δ2).
        assert!(reference_matrix(&cfg.system, Method::Paulisch, 1).is_err());
        let four = preset("fourlevel_3photon").unwrap();
        assert!(reference_matrix(&four.system, Method::Paulisch, 1).is_err());
    }

    #[test]
    fn gjames_off_resonance_is_reported_per_method() {
        let mut cfg = preset("fourlevel_3photon").unwrap();
        cfg.system.detunings[2] = -140.0;
        let out = run_heff(&cfg).unwrap();
        assert!(out[0].1.is_ok());
        assert!(matches!(out[1].1, Err(Error::Inapplicable(_))));
    }

    #[test]
    fn t_final_from_rabi_periods() {
        let cfg = preset("lambda_2photon").unwrap();
        let sim = cfg.simulate.clone().unwrap();
        let t = resolve_t_final(&cfg.system, &sim).unwrap();
        // g = 0.02·√2 between |g,1⟩ and |2,2⟩; the preset asks for 3 periods.
        assert_eq!(sim.rabi_periods, Some(3.0));
        let want = 3.0 * std::f64::consts::PI / (0.02 * 2f64.sqrt());
        assert!((t - want).abs() < 1e-9 * want);
    }

    #[test]
    fn zero_drive_simulation_is_flat() {
        let mut cfg = preset("lambda_2photon").unwrap();
        cfg.system.drives = vec![DriveEnvelope::constant(0.0)];
        cfg.methods = vec![Method::Markov];
        let sim = cfg.simulate.as_mut().unwrap();
        sim.rabi_periods = None;
        sim.t_final = Some(5.0);
        let out = run_simulate(&cfg).unwrap();
        let c = &out.effective[0].comparison;
        assert_eq!(c.max_population_error, 0.0);
        assert_eq!(c.max_leakage, 0.0);
        assert!(out.full.populations.iter().all(|p| p[0] == 1.0));
    }

    #[test]
    fn explicit_dt_violating_guard_is_validation_error() {
        let mut cfg = preset("lambda_2photon").unwrap();
        cfg.simulate.as_mut().unwrap().dt = Some(0.01);
        assert!(matches!(run_simulate(&cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn sweep_rows_in_axis_order_with_failures_recorded() {
        let mut sweep = sweep_preset("lambda_scaling_sweep").unwrap();
        sweep.base.simulate = None;
        sweep.sweep.values = vec![200.0, 0.0, 25.0];
        let rows = run_sweep(&sweep).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![200.0, 0.0, 25.0]);
        assert!(rows[1].error.is_some());
        let c = |r: &SweepRow| r.members[0].coefficient.unwrap().norm();
        assert!((c(&rows[2]) / c(&rows[0]) - 8.0).abs() < 1e-12);
        let csv = sweep_csv("detuning_scale", &sweep.base.methods, &rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().contains("zero detuning"));
    }
}
