//! Effective Hamiltonians on the resonant subspace `{g, N}`.
//!
//! Five routes are available:
//! - [`markov_eliminate`]: Heisenberg-picture elimination with the
//!   drive-freezing (Markov) approximation, iterated through a coefficient
//!   recurrence.
//! - [`james_second_order`] and [`gjames_third_order`]: time-averaged
//!   effective Hamiltonians from the second- and third-order terms of the
//!   Dyson series.
//! - [`lambda_amplitude_heff`] and [`paulisch_lambda_heff`]: closed-form
//!   2×2 references for the classical lambda system.

mod james;
mod recurrence;
mod reference;

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::hilbert::{FieldMonomial, JointSpace};
use crate::model::{unsigned_zero, RotatingHamiltonian, RotatingTerm};

pub use james::{
    gjames_third_order, james_second_order, james_terms, GJamesOptions, JamesOptions, JamesTerm,
};
pub use recurrence::{
    exact_three_photon_coefficient, intermediate_hamiltonian, markov_eliminate, recurrence_base,
    recurrence_step, reduced_three_photon_coefficient, DriveProduct, RecurrenceTable,
};
pub use reference::{lambda_amplitude_heff, paulisch_lambda_heff, Matrix2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Markov,
    James2,
    Gjames3,
    Amplitude,
    Paulisch,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Markov,
        Method::James2,
        Method::Gjames3,
        Method::Amplitude,
        Method::Paulisch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Markov => "markov",
            Method::James2 => "james2",
            Method::Gjames3 => "gjames3",
            Method::Amplitude => "amplitude",
            Method::Paulisch => "paulisch",
        }
    }

    /// Whether the method yields a Hamiltonian on the joint atom–cavity space
    /// (as opposed to a bare 2×2 matrix).
    pub fn is_joint_space(self) -> bool {
        matches!(self, Method::Markov | Method::James2 | Method::Gjames3)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown method {s:?} (expected one of markov, james2, gjames3, amplitude, paulisch)")
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Coupling,
    Stark,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveTerm {
    pub term: RotatingTerm,
    pub kind: TermKind,
}

/// One printable line of a coefficient report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientLine {
    pub label: String,
    pub hermitian_conjugate: bool,
    #[serde(with = "crate::complex_serde")]
    pub coefficient: C64,
    pub amplitude: String,
    pub frequency: f64,
    pub method: Method,
    pub kind: TermKind,
}

impl fmt::Display for CoefficientLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hc = if self.hermitian_conjugate {
            " + h.c."
        } else {
            ""
        };
        write!(
            f,
            "{}{hc}\t{:.12e}{:+.12e}i\t{:.12e}\t{}\t{}\t{}",
            self.label,
            unsigned_zero(self.coefficient.re),
            unsigned_zero(self.coefficient.im),
            unsigned_zero(self.frequency),
            self.method,
            match self.kind {
                TermKind::Coupling => "coupling",
                TermKind::Stark => "stark",
            },
            self.amplitude
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    pub space: JointSpace,
    pub method: Method,
    pub terms: Vec<EffectiveTerm>,
    pub recurrence: Option<RecurrenceTable>,
    pub notes: Vec<String>,
}

impl EffectiveHamiltonian {
    pub(crate) fn new(space: JointSpace, method: Method) -> Self {
        Self {
            space,
            method,
            terms: Vec::new(),
            recurrence: None,
            notes: Vec::new(),
        }
    }

    pub fn hamiltonian(&self) -> RotatingHamiltonian {
        RotatingHamiltonian::new(
            self.space.clone(),
            self.terms.iter().map(|t| t.term.clone()).collect(),
        )
    }

    /// Hamiltonian restricted to terms of one kind.
    pub fn hamiltonian_of(&self, kind: TermKind) -> RotatingHamiltonian {
        RotatingHamiltonian::new(
            self.space.clone(),
            self.terms
                .iter()
                .filter(|t| t.kind == kind)
                .map(|t| t.term.clone())
                .collect(),
        )
    }

    /// One line per (operator component, frequency), amplitudes evaluated at
    /// `t`. Components with the same label and frequency are merged.
    pub fn coefficient_report_at(&self, t: f64) -> Vec<CoefficientLine> {
        let mut lines: Vec<CoefficientLine> = Vec::new();
        for et in &self.terms {
            let term = &et.term;
            let amp = term.amplitude(t);
            for comp in self.space.decompose(&term.operator) {
                let line = CoefficientLine {
                    label: comp.label(),
                    hermitian_conjugate: term.include_hc,
                    coefficient: comp.coefficient * amp,
                    amplitude: RotatingTerm {
                        scale: term.scale * comp.coefficient,
                        ..term.clone()
                    }
                    .amplitude_expr(),
                    frequency: term.frequency,
                    method: self.method,
                    kind: et.kind,
                };
                match lines.iter_mut().find(|l| {
                    l.label == line.label
                        && l.hermitian_conjugate == line.hermitian_conjugate
                        && same_frequency(l.frequency, line.frequency)
                        && l.kind == line.kind
                }) {
                    Some(l) => {
                        l.coefficient += line.coefficient;
                        if l.amplitude != line.amplitude {
                            l.amplitude = "(sum)".to_string();
                        }
                    }
                    None => lines.push(line),
                }
            }
        }
        lines.retain(|l| l.coefficient.norm() > 0.0);
        lines
    }

    pub fn coefficient_report(&self) -> Vec<CoefficientLine> {
        self.coefficient_report_at(0.0)
    }

    /// Total coefficient of `F ⊗ σ_{row,col}` oscillating as `e^{iωt}` in the
    /// assembled Hamiltonian, with h.c. parts expanded. Amplitudes at `t`.
    pub fn coefficient_of(
        &self,
        row: usize,
        col: usize,
        field: FieldMonomial,
        frequency: f64,
        t: f64,
    ) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for et in &self.terms {
            let term = &et.term;
            let amp = term.amplitude(t);
            for comp in self.space.decompose(&term.operator) {
                if comp.row_level == row
                    && comp.col_level == col
                    && comp.field == Some(field)
                    && same_frequency(term.frequency, frequency)
                {
                    total += comp.coefficient * amp;
                }
                if term.include_hc
                    && comp.row_level == col
                    && comp.col_level == row
                    && comp.field.map(FieldMonomial::adjoint) == Some(field)
                    && same_frequency(-term.frequency, frequency)
                {
                    total += (comp.coefficient * amp).conj();
                }
            }
        }
        total
    }

    /// The largest off-diagonal coupling line (at t = 0), if any.
    pub fn principal_coupling(&self) -> Option<CoefficientLine> {
        self.coefficient_report()
            .into_iter()
            .filter(|l| l.kind == TermKind::Coupling)
            .max_by(|a, b| a.coefficient.norm().total_cmp(&b.coefficient.norm()))
    }

    /// Tab-separated text report with a header line.
    pub fn report_text(&self) -> String {
        let mut s = format!(
            "# method={}\n# label\tcoefficient\tfrequency\tmethod\tkind\tamplitude\n",
            self.method
        );
        for line in self.coefficient_report() {
            s.push_str(&line.to_string());
            s.push('\n');
        }
        for note in &self.notes {
            s.push_str("# note: ");
            s.push_str(note);
            s.push('\n');
        }
        s
    }
}

fn same_frequency(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Orients an h.c.-carrying term so that a lone field operator appears as
/// `a†`, which is how the effective couplings are conventionally written.
pub(crate) fn canonical_orientation(space: &JointSpace, term: RotatingTerm) -> RotatingTerm {
    if !term.include_hc {
        return term;
    }
    let comps = space.decompose(&term.operator);
    let has = |m| comps.iter().any(|c| c.field == Some(m));
    if has(FieldMonomial::Annihilate) && !has(FieldMonomial::Create) {
        term.flipped()
    } else {
        term
    }
}
