//! State propagation under rotating-frame Hamiltonians and the observables
//! used to compare full and effective models.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{JointSpace, SparseOperator};
use crate::model::RotatingHamiltonian;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest admissible `dt · max(‖H‖, |ν|)`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: JointSpace,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Requires `‖ψ‖ = 1` within 1e-9.
    pub fn new(space: JointSpace, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::validation(format!(
                "state has {} amplitudes, space dimension is {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let psi = Self { space, amplitudes };
        let norm = psi.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "state norm {norm} differs from 1 by more than 1e-9"
            )));
        }
        Ok(psi)
    }

    /// `|level, photons⟩`.
    pub fn basis(space: &JointSpace, level: usize, photons: usize) -> Result<Self> {
        if level >= space.level_count() {
            return Err(Error::validation(format!(
                "initial level {level} outside 0..{}",
                space.level_count()
            )));
        }
        if photons > space.fock.cutoff() {
            return Err(Error::validation(format!(
                "initial photon number {photons} exceeds the Fock cutoff {}",
                space.fock.cutoff()
            )));
        }
        let mut amplitudes = vec![ZERO; space.dim()];
        amplitudes[space.index(level, photons)] = C64::new(1.0, 0.0);
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    pub fn space(&self) -> &JointSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `e^{iφ} ψ`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let p = C64::from_polar(1.0, phi);
        Self {
            space: self.space.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a * p).collect(),
        }
    }

    /// `(level label, photon number)` for every basis index.
    pub fn basis_labels(&self) -> Vec<(String, usize)> {
        (0..self.space.dim())
            .map(|i| {
                let (l, n) = self.space.split_index(i);
                (self.space.atom.label(l).to_string(), n)
            })
            .collect()
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

fn level_populations(space: &JointSpace, v: &[C64]) -> Vec<f64> {
    let fd = space.fock.dim();
    v.chunks(fd)
        .map(|block| block.iter().map(C64::norm_sqr).sum())
        .collect()
}

fn mean_photons(space: &JointSpace, v: &[C64]) -> f64 {
    let fd = space.fock.dim();
    v.iter()
        .enumerate()
        .map(|(i, a)| (i % fd) as f64 * a.norm_sqr())
        .sum()
}

/// `P_level = Σ_n |ψ(level, n)|²`.
pub fn populations(psi: &StateVector) -> Vec<f64> {
    level_populations(&psi.space, &psi.amplitudes)
}

/// `⟨a†a⟩`.
pub fn photon_expectation(psi: &StateVector) -> f64 {
    mean_photons(&psi.space, &psi.amplitudes)
}

/// `|⟨a|b⟩|²`.
pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationOptions {
    pub dt: f64,
    /// Sample every `stride` steps; the final step is always sampled.
    pub stride: usize,
    /// Largest tolerated `|‖ψ‖ − 1|` at any step.
    pub norm_tolerance: f64,
    pub record_states: bool,
    pub renormalize: bool,
}

impl PropagationOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            stride: 1,
            norm_tolerance: 1e-6,
            record_states: false,
            renormalize: false,
        }
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn record_states(mut self, on: bool) -> Self {
        self.record_states = on;
        self
    }

    pub fn norm_tolerance(mut self, tol: f64) -> Self {
        self.norm_tolerance = tol;
        self
    }
}

/// Largest `dt` that satisfies the stability guard for `h`.
pub fn max_stable_dt(h: &RotatingHamiltonian) -> f64 {
    let rate = h.norm_bound().max(h.max_frequency());
    if rate == 0.0 {
        f64::INFINITY
    } else {
        STABILITY_LIMIT / rate
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub level_labels: Vec<String>,
    pub times: Vec<f64>,
    /// `populations[k][level]` at `times[k]`.
    pub populations: Vec<Vec<f64>>,
    pub photon_expectation: Vec<f64>,
    /// `|‖ψ(t)‖ − 1|`.
    pub norm_drift: Vec<f64>,
    pub fidelity_vs: Option<Vec<f64>>,
    #[serde(skip)]
    pub states: Option<Vec<Vec<C64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn level_count(&self) -> usize {
        self.level_labels.len()
    }

    pub fn level_series(&self, level: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[level]).collect()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }

    /// Terminal drift divided by elapsed time.
    pub fn norm_drift_rate(&self) -> f64 {
        match (self.times.last(), self.norm_drift.last()) {
            (Some(&t), Some(&d)) if t > 0.0 => d / t,
            _ => 0.0,
        }
    }

    pub fn final_state(&self) -> Option<&[C64]> {
        self.states
            .as_ref()
            .and_then(|s| s.last())
            .map(Vec::as_slice)
    }

    /// Attaches `|⟨ψ_ref(t)|ψ(t)⟩|²`; both trajectories must hold states on
    /// the same grid.
    pub fn with_fidelity_against(mut self, reference: &Trajectory) -> Result<Self> {
        check_grid(&self, reference)?;
        let (Some(mine), Some(theirs)) = (&self.states, &reference.states) else {
            return Err(Error::validation(
                "fidelity needs recorded states in both trajectories",
            ));
        };
        let f = mine
            .iter()
            .zip(theirs)
            .map(|(a, b)| overlap(b, a))
            .collect();
        self.fidelity_vs = Some(f);
        Ok(self)
    }

    /// Columns `t, P_g, P_1, …, P_N, <n>, norm`; 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for l in &self.level_labels {
            let _ = write!(s, ",P_{l}");
        }
        s.push_str(",<n>,norm\n");
        for k in 0..self.len() {
            let _ = write!(s, "{:.11e}", self.times[k]);
            for p in &self.populations[k] {
                let _ = write!(s, ",{p:.11e}");
            }
            let _ = writeln!(
                s,
                ",{:.11e},{:.11e}",
                self.photon_expectation[k],
                1.0 + self.norm_drift[k]
            );
        }
        s
    }
}

/// Precomputed `op`, `op†` pairs of a Hamiltonian.
struct Compiled<'a> {
    h: &'a RotatingHamiltonian,
    adjoints: Vec<Option<SparseOperator>>,
}

impl<'a> Compiled<'a> {
    fn new(h: &'a RotatingHamiltonian) -> Self {
        let adjoints = h
            .terms
            .iter()
            .map(|t| t.include_hc.then(|| t.operator.adjoint()))
            .collect();
        Self { h, adjoints }
    }

    /// `out = −i H(t) v`.
    fn derivative(&self, t: f64, v: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        let minus_i = C64::new(0.0, -1.0);
        for (term, adj) in self.h.terms.iter().zip(&self.adjoints) {
            let c = term.coefficient(t);
            if c == ZERO {
                continue;
            }
            term.operator.apply_add(minus_i * c, v, out);
            if let Some(adj) = adj {
                adj.apply_add(minus_i * c.conj(), v, out);
            }
        }
    }
}

/// Fixed-step classical RK4 for `iψ̇ = H(t)ψ` on `[0, t_final]`.
pub fn propagate(
    h: &RotatingHamiltonian,
    psi0: &StateVector,
    t_final: f64,
    options: &PropagationOptions,
) -> Result<Trajectory> {
    let dt = options.dt;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::validation(format!(
            "t_final must be nonnegative, got {t_final}"
        )));
    }
    if options.stride == 0 {
        return Err(Error::validation("stride must be at least 1"));
    }
    if psi0.space != h.space {
        return Err(Error::validation(
            "initial state and Hamiltonian live on different spaces",
        ));
    }
    let limit = max_stable_dt(h);
    if dt > limit {
        return Err(Error::validation(format!(
            "dt = {dt} violates the stability guard dt·max(‖H‖, |ν|) ≤ {STABILITY_LIMIT} (largest stable dt = {limit:.6e})"
        )));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let step = if steps == 0 {
        0.0
    } else {
        t_final / steps as f64
    };

    let space = &h.space;
    let compiled = Compiled::new(h);
    let dim = space.dim();
    let mut psi = psi0.amplitudes.clone();
    let mut k1 = vec![ZERO; dim];
    let mut k2 = vec![ZERO; dim];
    let mut k3 = vec![ZERO; dim];
    let mut k4 = vec![ZERO; dim];
    let mut tmp = vec![ZERO; dim];

    let mut traj = Trajectory {
        level_labels: space.atom.labels().to_vec(),
        times: Vec::new(),
        populations: Vec::new(),
        photon_expectation: Vec::new(),
        norm_drift: Vec::new(),
        fidelity_vs: None,
        states: options.record_states.then(Vec::new),
    };
    let sample = |traj: &mut Trajectory, t: f64, psi: &[C64], drift: f64| {
        traj.times.push(t);
        traj.populations.push(level_populations(space, psi));
        traj.photon_expectation.push(mean_photons(space, psi));
        traj.norm_drift.push(drift);
        if let Some(states) = traj.states.as_mut() {
            states.push(psi.to_vec());
        }
    };
    sample(&mut traj, 0.0, &psi, (norm(&psi) - 1.0).abs());

    for i in 0..steps {
        let t = i as f64 * step;
        let half = 0.5 * step;
        compiled.derivative(t, &psi, &mut k1);
        axpy(&psi, half, &k1, &mut tmp);
        compiled.derivative(t + half, &tmp, &mut k2);
        axpy(&psi, half, &k2, &mut tmp);
        compiled.derivative(t + half, &tmp, &mut k3);
        axpy(&psi, step, &k3, &mut tmp);
        compiled.derivative(t + step, &tmp, &mut k4);
        let w = step / 6.0;
        for j in 0..dim {
            psi[j] += w * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let n = norm(&psi);
        let drift = (n - 1.0).abs();
        let t_next = (i + 1) as f64 * step;
        if !drift.is_finite() || drift > options.norm_tolerance {
            return Err(Error::Integration {
                step: i + 1,
                time: t_next,
                drift,
                tolerance: options.norm_tolerance,
            });
        }
        if options.renormalize {
            psi.iter_mut().for_each(|a| *a /= n);
        }
        if (i + 1) % options.stride == 0 || i + 1 == steps {
            sample(&mut traj, t_next, &psi, drift);
        }
    }
    Ok(traj)
}

/// `out = x + a·y`.
fn axpy(x: &[C64], a: f64, y: &[C64], out: &mut [C64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Max over t and over levels {g, N} of `|P_full − P_eff|`.
    pub max_population_error: f64,
    pub rms_population_error: f64,
    /// Max over t of the full model's intermediate-level population.
    pub max_leakage: f64,
    pub full_rabi_frequency: Option<f64>,
    pub effective_rabi_frequency: Option<f64>,
    /// `|Ω_eff − Ω_full| / Ω_full`.
    pub rabi_relative_error: Option<f64>,
}

fn check_grid(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.level_count() != b.level_count() {
        return Err(Error::validation(format!(
            "trajectories have {} and {} levels",
            a.level_count(),
            b.level_count()
        )));
    }
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "time grids differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    for (k, (x, y)) in a.times.iter().zip(&b.times).enumerate() {
        if (x - y).abs() > 1e-12 * x.abs().max(1.0) {
            return Err(Error::validation(format!(
                "time grids differ at sample {k} ({x} vs {y})"
            )));
        }
    }
    Ok(())
}

/// Population errors on `{g, N}`, leakage into `1 … N−1`, and the relative
/// Rabi-frequency error of `P_N`.
pub fn compare(full: &Trajectory, effective: &Trajectory) -> Result<ComparisonReport> {
    check_grid(full, effective)?;
    let top = full.level_count() - 1;
    let mut max_err: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut leak: f64 = 0.0;
    for (pf, pe) in full.populations.iter().zip(&effective.populations) {
        for level in [0, top] {
            let e = (pf[level] - pe[level]).abs();
            max_err = max_err.max(e);
            sum_sq += e * e;
            count += 1;
        }
        leak = leak.max(pf[1..top].iter().sum());
    }
    let full_rabi = extract_rabi_frequency(full, top).ok();
    let eff_rabi = extract_rabi_frequency(effective, top).ok();
    let rel = match (full_rabi, eff_rabi) {
        (Some(f), Some(e)) => Some((e - f).abs() / f),
        _ => None,
    };
    Ok(ComparisonReport {
        max_population_error: max_err,
        rms_population_error: if count == 0 {
            0.0
        } else {
            (sum_sq / count as f64).sqrt()
        },
        max_leakage: leak,
        full_rabi_frequency: full_rabi,
        effective_rabi_frequency: eff_rabi,
        rabi_relative_error: rel,
    })
}

/// `2π / T` with `T` the spacing of the first two upward midrange crossings
/// of `P_level(t)`.
pub fn extract_rabi_frequency(traj: &Trajectory, level: usize) -> Result<f64> {
    if level >= traj.level_count() {
        return Err(Error::validation(format!(
            "level {level} outside 0..{}",
            traj.level_count()
        )));
    }
    rabi_frequency_of_series(&traj.times, &traj.level_series(level))
}

/// Same as [`extract_rabi_frequency`] for a bare sampled signal.
pub fn rabi_frequency_of_series(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::validation("times and values differ in length"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if values.len() < 3 || span.is_nan() || span <= 1e-9 {
        return Err(Error::Extraction("no oscillation detected".to_string()));
    }
    let mid = 0.5 * (lo + hi);
    let mut crossings = Vec::with_capacity(2);
    for k in 0..values.len() - 1 {
        let (a, b) = (values[k], values[k + 1]);
        if a < mid && b >= mid {
            let frac = (mid - a) / (b - a);
            crossings.push(times[k] + frac * (times[k + 1] - times[k]));
            if crossings.len() == 2 {
                break;
            }
        }
    }
    match crossings[..] {
        [t1, t2] => Ok(2.0 * std::f64::consts::PI / (t2 - t1)),
        _ => Err(Error::Extraction(format!(
            "found {} upward midrange crossing(s); need 2 for a full period",
            crossings.len()
        ))),
    }
}
