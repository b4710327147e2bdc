//! Physical system description and the full interaction-picture Hamiltonian.
//!
//! A system is a ladder `g → 1 → … → N` driven by `N−1` classical fields
//! `Ω_j(t)` on the transitions `j−1 → j` and a single cavity mode coupled
//! with strength `η` to the last transition `N−1 ↔ N`. All frequencies are
//! angular and in one common unit (ħ = 1).

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{level_label, FieldMonomial, JointSpace, SparseOperator};

/// Time dependence of a classical drive amplitude `Ω_j(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriveEnvelope {
    Constant {
        #[serde(with = "crate::complex_serde")]
        amplitude: C64,
    },
    /// `amplitude · exp(−(t − center)² / (2 width²))`
    Gaussian {
        #[serde(with = "crate::complex_serde")]
        amplitude: C64,
        center: f64,
        width: f64,
    },
    /// `amplitude` times a piecewise-linear profile through `(t, factor)`
    /// breakpoints, held constant outside the first and last breakpoint.
    PiecewiseLinear {
        #[serde(with = "crate::complex_serde")]
        amplitude: C64,
        breakpoints: Vec<[f64; 2]>,
    },
}

impl DriveEnvelope {
    pub fn constant(amplitude: impl Into<C64>) -> Self {
        DriveEnvelope::Constant {
            amplitude: amplitude.into(),
        }
    }

    pub fn value(&self, t: f64) -> C64 {
        match self {
            DriveEnvelope::Constant { amplitude } => *amplitude,
            DriveEnvelope::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let x = (t - center) / width;
                amplitude * (-0.5 * x * x).exp()
            }
            DriveEnvelope::PiecewiseLinear {
                amplitude,
                breakpoints,
            } => amplitude * piecewise(breakpoints, t),
        }
    }

    /// Upper bound of `|Ω(t)|` over all t.
    pub fn max_abs(&self) -> f64 {
        match self {
            DriveEnvelope::Constant { amplitude } | DriveEnvelope::Gaussian { amplitude, .. } => {
                amplitude.norm()
            }
            DriveEnvelope::PiecewiseLinear {
                amplitude,
                breakpoints,
            } => amplitude.norm() * breakpoints.iter().map(|b| b[1].abs()).fold(0.0, f64::max),
        }
    }

    pub fn amplitude(&self) -> C64 {
        match self {
            DriveEnvelope::Constant { amplitude }
            | DriveEnvelope::Gaussian { amplitude, .. }
            | DriveEnvelope::PiecewiseLinear { amplitude, .. } => *amplitude,
        }
    }

    pub fn amplitude_mut(&mut self) -> &mut C64 {
        match self {
            DriveEnvelope::Constant { amplitude }
            | DriveEnvelope::Gaussian { amplitude, .. }
            | DriveEnvelope::PiecewiseLinear { amplitude, .. } => amplitude,
        }
    }

    fn check(&self, field: &str, out: &mut Vec<Violation>) {
        if !self.amplitude().re.is_finite() || !self.amplitude().im.is_finite() {
            out.push(Violation::new(field, "amplitude must be finite"));
        }
        match self {
            DriveEnvelope::Constant { .. } => {}
            DriveEnvelope::Gaussian { center, width, .. } => {
                if !(*width > 0.0 && width.is_finite()) {
                    out.push(Violation::new(field, "gaussian width must be > 0"));
                }
                if !center.is_finite() {
                    out.push(Violation::new(field, "gaussian center must be finite"));
                }
            }
            DriveEnvelope::PiecewiseLinear { breakpoints, .. } => {
                if breakpoints.is_empty() {
                    out.push(Violation::new(
                        field,
                        "piecewise-linear needs at least one breakpoint",
                    ));
                }
                if breakpoints.iter().flatten().any(|x| !x.is_finite()) {
                    out.push(Violation::new(field, "breakpoints must be finite"));
                }
                if breakpoints.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    out.push(Violation::new(
                        field,
                        "breakpoint times must be strictly increasing",
                    ));
                }
            }
        }
    }
}

fn piecewise(bp: &[[f64; 2]], t: f64) -> f64 {
    match bp {
        [] => 0.0,
        [only] => only[1],
        _ => {
            if t <= bp[0][0] {
                return bp[0][1];
            }
            for w in bp.windows(2) {
                let ([t0, v0], [t1, v1]) = (w[0], w[1]);
                if t <= t1 {
                    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                }
            }
            bp[bp.len() - 1][1]
        }
    }
}

/// Orientation of the cavity coupling on the last transition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CavityLeg {
    /// `η e^{iΔ_N t} a σ_{N,N−1}`: level N is reached by absorbing a cavity
    /// photon (ladder geometry).
    #[default]
    Absorption,
    /// `η e^{iΔ_N t} a σ_{N−1,N}`: level N is reached by emitting into the
    /// cavity (lambda / hyper-Raman geometry).
    Emission,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// Highest level index; the atom has `n + 1` levels.
    pub n: usize,
    /// `Δ_1 … Δ_N`; `Δ_N` belongs to the cavity transition.
    pub detunings: Vec<f64>,
    /// `Ω_1 … Ω_{N−1}`.
    pub drives: Vec<DriveEnvelope>,
    pub eta: f64,
    pub fock_cutoff: usize,
    #[serde(default)]
    pub cavity_leg: CavityLeg,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl SystemSpec {
    /// Builds a spec from bare level energies `E_g … E_N`, laser frequencies
    /// `ω_1 … ω_{N−1}` and the cavity frequency.
    pub fn from_energies(
        level_energies: &[f64],
        laser_frequencies: &[f64],
        cavity_frequency: f64,
        drives: Vec<DriveEnvelope>,
        eta: f64,
        fock_cutoff: usize,
        cavity_leg: CavityLeg,
    ) -> Result<Self> {
        let n = level_energies.len().saturating_sub(1);
        if n < 2 || laser_frequencies.len() != n - 1 {
            return Err(Error::validation(format!(
                "need N+1 ≥ 3 level energies and N−1 laser frequencies, got {} and {}",
                level_energies.len(),
                laser_frequencies.len()
            )));
        }
        let e = |j: usize| level_energies[j] - level_energies[0];
        let mut detunings: Vec<f64> = (1..n)
            .map(|j| e(j) - e(j - 1) - laser_frequencies[j - 1])
            .collect();
        detunings.push(match cavity_leg {
            CavityLeg::Absorption => e(n) - e(n - 1) - cavity_frequency,
            CavityLeg::Emission => e(n - 1) - e(n) - cavity_frequency,
        });
        let spec = Self {
            n,
            detunings,
            drives,
            eta,
            fock_cutoff,
            cavity_leg,
        };
        spec.ensure_valid()?;
        Ok(spec)
    }

    /// `Δ_k`, 1-based.
    pub fn detuning(&self, k: usize) -> f64 {
        self.detunings[k - 1]
    }

    /// `Ω_k`, 1-based.
    pub fn drive(&self, k: usize) -> &DriveEnvelope {
        &self.drives[k - 1]
    }

    pub fn level_count(&self) -> usize {
        self.n + 1
    }

    pub fn space(&self) -> Result<JointSpace> {
        JointSpace::new(self.level_count(), self.fock_cutoff)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(
                v.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// Every detuning multiplied by `s`.
    pub fn scaled_detunings(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.detunings.iter_mut().for_each(|d| *d *= s);
        out
    }
}

/// Lists every invariant `spec` violates; empty means valid.
pub fn validate(spec: &SystemSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    if spec.n < 2 {
        out.push(Violation::new("n", "N ≥ 2 required"));
    }
    if spec.detunings.len() != spec.n {
        out.push(Violation::new(
            "detunings",
            format!(
                "expected {} detunings (Δ_1..Δ_N), got {}",
                spec.n,
                spec.detunings.len()
            ),
        ));
    }
    for (i, d) in spec.detunings.iter().enumerate() {
        if *d == 0.0 {
            out.push(Violation::new(
                format!("detunings[{}]", i + 1),
                format!("zero detuning at index {}", i + 1),
            ));
        } else if !d.is_finite() {
            out.push(Violation::new(
                format!("detunings[{}]", i + 1),
                format!("non-finite detuning at index {}", i + 1),
            ));
        }
    }
    if spec.drives.len() != spec.n.saturating_sub(1) {
        out.push(Violation::new(
            "drives",
            format!(
                "expected {} classical drives (Ω_1..Ω_{{N−1}}), got {}",
                spec.n.saturating_sub(1),
                spec.drives.len()
            ),
        ));
    }
    for (i, d) in spec.drives.iter().enumerate() {
        d.check(&format!("drives[{}]", i + 1), &mut out);
    }
    if !(spec.eta >= 0.0 && spec.eta.is_finite()) {
        out.push(Violation::new(
            "eta",
            "cavity coupling must be finite and ≥ 0",
        ));
    }
    if spec.fock_cutoff < 1 {
        out.push(Violation::new("fock_cutoff", "fock cutoff must be ≥ 1"));
    }
    out
}

/// One factor of a term amplitude: a drive envelope, optionally conjugated.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFactor {
    pub name: String,
    pub envelope: DriveEnvelope,
    pub conjugate: bool,
}

impl EnvelopeFactor {
    pub fn value(&self, t: f64) -> C64 {
        let v = self.envelope.value(t);
        if self.conjugate {
            v.conj()
        } else {
            v
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            conjugate: !self.conjugate,
            ..self.clone()
        }
    }
}

/// `amplitude(t) · exp(i·frequency·t) · operator (+ h.c.)` with
/// `amplitude(t) = scale · Π factors(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotatingTerm {
    pub label: String,
    pub operator: SparseOperator,
    pub scale: C64,
    pub factors: Vec<EnvelopeFactor>,
    pub frequency: f64,
    pub include_hc: bool,
}

impl RotatingTerm {
    pub fn amplitude(&self, t: f64) -> C64 {
        self.factors
            .iter()
            .fold(self.scale, |acc, f| acc * f.value(t))
    }

    /// Full time-dependent prefactor including the rotating phase.
    pub fn coefficient(&self, t: f64) -> C64 {
        self.amplitude(t) * C64::from_polar(1.0, self.frequency * t)
    }

    pub fn max_amplitude(&self) -> f64 {
        self.factors
            .iter()
            .fold(self.scale.norm(), |acc, f| acc * f.envelope.max_abs())
    }

    /// Symbolic amplitude, e.g. `-0.02·conj(Ω1)`.
    pub fn amplitude_expr(&self) -> String {
        let mut s = format_complex(self.scale);
        for f in &self.factors {
            if f.conjugate {
                s.push_str(&format!("·conj({})", f.name));
            } else {
                s.push_str(&format!("·{}", f.name));
            }
        }
        s
    }

    /// Same physical contribution written in the hermitian-conjugate
    /// orientation. Only meaningful when `include_hc` is set.
    pub fn flipped(&self) -> Self {
        Self {
            label: self.label.clone(),
            operator: self.operator.adjoint(),
            scale: self.scale.conj(),
            factors: self.factors.iter().map(EnvelopeFactor::conj).collect(),
            frequency: -self.frequency,
            include_hc: self.include_hc,
        }
    }
}

/// Drops the sign of zero so reports never print `-0`.
pub(crate) fn unsigned_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Rounds to 12 significant digits for display; hides summation noise
/// such as 0.019999999999999997.
fn tidy(x: f64) -> f64 {
    unsigned_zero(format!("{x:.11e}").parse().unwrap_or(x))
}

pub(crate) fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", tidy(z.re))
    } else {
        format!("({}{:+}i)", tidy(z.re), tidy(z.im))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotatingHamiltonian {
    pub space: JointSpace,
    pub terms: Vec<RotatingTerm>,
}

impl RotatingHamiltonian {
    pub fn new(space: JointSpace, terms: Vec<RotatingTerm>) -> Self {
        Self { space, terms }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn evaluate(&self, t: f64) -> SparseOperator {
        evaluate(self, t)
    }

    /// Bound on `‖H(t)‖₁` valid for every t.
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let k = if term.include_hc { 2.0 } else { 1.0 };
                k * term.max_amplitude() * term.operator.norm_one()
            })
            .sum()
    }

    /// Largest `|frequency|` among terms that are not identically zero.
    pub fn max_frequency(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.max_amplitude() > 0.0 && !t.operator.is_zero())
            .map(|t| t.frequency.abs())
            .fold(0.0, f64::max)
    }
}

/// `Σ coefficient(t)·op (+ h.c.)` at time `t`.
pub fn evaluate(h: &RotatingHamiltonian, t: f64) -> SparseOperator {
    let dim = h.dim();
    let mut triplets = Vec::new();
    for term in &h.terms {
        let c = term.coefficient(t);
        for &(r, col, v) in term.operator.entries() {
            triplets.push((r, col, c * v));
            if term.include_hc {
                triplets.push((col, r, (c * v).conj()));
            }
        }
    }
    SparseOperator::from_triplets(dim, triplets).expect("term operators share the space dimension")
}

/// Assembles the interaction-picture Hamiltonian: one term per classical
/// drive (`Ω_j e^{iΔ_j t} σ_{j,j−1}`) and one cavity term, each with h.c.
pub fn build_full_hamiltonian(spec: &SystemSpec) -> Result<RotatingHamiltonian> {
    spec.ensure_valid()?;
    let space = spec.space()?;
    let mut terms = Vec::with_capacity(spec.n);
    for j in 1..spec.n {
        let name = format!("Ω{j}");
        terms.push(RotatingTerm {
            label: format!("{name} σ_{{{},{}}}", level_label(j), level_label(j - 1)),
            operator: space.sigma(j, j - 1)?,
            scale: C64::new(1.0, 0.0),
            factors: vec![EnvelopeFactor {
                name,
                envelope: spec.drive(j).clone(),
                conjugate: false,
            }],
            frequency: spec.detuning(j),
            include_hc: true,
        });
    }
    let n = spec.n;
    let (hi, lo) = match spec.cavity_leg {
        CavityLeg::Absorption => (n, n - 1),
        CavityLeg::Emission => (n - 1, n),
    };
    terms.push(RotatingTerm {
        label: format!("η aσ_{{{},{}}}", level_label(hi), level_label(lo)),
        operator: space.sigma_with(hi, lo, FieldMonomial::Annihilate)?,
        scale: C64::new(spec.eta, 0.0),
        factors: Vec::new(),
        frequency: spec.detuning(n),
        include_hc: true,
    });
    Ok(RotatingHamiltonian::new(space, terms))
}
