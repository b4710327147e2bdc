//! Heisenberg-picture elimination with frozen drive envelopes.
//!
//! Each elimination round replaces the transition operators of the current
//! Hamiltonian by their adiabatic solutions. The resulting couplings skip one
//! more intermediate level per round and carry three pieces of bookkeeping:
//!
//! - `C_j^(m)`: a nested sum of inverse detunings over the window
//!   `Δ_{j+1} … Δ_{j+m+1}`,
//! - `Ω̃_j^(m)`: the product of conjugated drive amplitudes along the window,
//! - `Δ̃_j^(m)`: the summed detuning, which is the oscillation frequency.
//!
//! The cavity-side entries (`η̃`, `Δ̃_cav`, `C_cav`) describe the coupling
//! `a†σ_{N−m−1,N}` whose window ends at the cavity detuning `Δ_N`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{canonical_orientation, EffectiveHamiltonian, EffectiveTerm, Method, TermKind};
use crate::error::{Error, Result};
use crate::hilbert::{level_label, FieldMonomial};
use crate::model::{unsigned_zero, CavityLeg, EnvelopeFactor, RotatingTerm, SystemSpec};

/// Symbolic product `[η ·] Π conj(Ω_k)` over 1-based drive indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DriveProduct {
    pub eta: bool,
    pub conj_drives: Vec<usize>,
}

impl DriveProduct {
    fn drives(range: impl IntoIterator<Item = usize>) -> Self {
        Self {
            eta: false,
            conj_drives: range.into_iter().collect(),
        }
    }

    fn times(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.conj_drives.push(k);
        out.conj_drives.sort_unstable();
        out
    }

    pub fn value(&self, spec: &SystemSpec, t: f64) -> C64 {
        let base = if self.eta {
            C64::new(spec.eta, 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        self.conj_drives
            .iter()
            .fold(base, |acc, &k| acc * spec.drive(k).value(t).conj())
    }

    fn factors(&self, spec: &SystemSpec) -> Vec<EnvelopeFactor> {
        self.conj_drives
            .iter()
            .map(|&k| EnvelopeFactor {
                name: format!("Ω{k}"),
                envelope: spec.drive(k).clone(),
                conjugate: true,
            })
            .collect()
    }
}

/// Coefficient tables of the elimination recurrence, keyed by `(j, m)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceTable {
    /// `Δ_1 … Δ_N` as used by the recurrence.
    pub detunings: Vec<f64>,
    pub m_max: usize,
    #[serde(serialize_with = "window_entries")]
    pub c: BTreeMap<(usize, usize), f64>,
    #[serde(serialize_with = "window_entries")]
    pub omega_tilde: BTreeMap<(usize, usize), DriveProduct>,
    #[serde(serialize_with = "window_entries")]
    pub delta_tilde: BTreeMap<(usize, usize), f64>,
    pub eta_tilde: BTreeMap<usize, DriveProduct>,
    pub delta_tilde_cavity: BTreeMap<usize, f64>,
    pub c_cavity: BTreeMap<usize, f64>,
}

/// Tuple-keyed maps serialize as `[{"j": .., "m": .., "value": ..}, ..]`.
fn window_entries<S, V>(
    map: &BTreeMap<(usize, usize), V>,
    s: S,
) -> std::result::Result<S::Ok, S::Error>
where
    S: serde::Serializer,
    V: Serialize,
{
    #[derive(Serialize)]
    struct Entry<'a, V> {
        j: usize,
        m: usize,
        value: &'a V,
    }
    s.collect_seq(map.iter().map(|(&(j, m), value)| Entry { j, m, value }))
}

impl RecurrenceTable {
    pub fn n(&self) -> usize {
        self.detunings.len()
    }

    fn d(&self, k: usize) -> f64 {
        self.detunings[k - 1]
    }

    /// `C_j^(m)`; the empty window `m = 0` has coefficient 1.
    pub fn c_at(&self, j: usize, m: usize) -> Option<f64> {
        if m == 0 {
            return (j < self.n()).then_some(1.0);
        }
        self.c.get(&(j, m)).copied()
    }

    pub fn c_cavity_at(&self, m: usize) -> Option<f64> {
        if m == 0 {
            return Some(1.0);
        }
        self.c_cavity.get(&m).copied()
    }

    /// `C_0^(N−1)`, the coefficient of the final `g ↔ N` coupling.
    pub fn final_coefficient(&self) -> Result<f64> {
        let n = self.n();
        if self.m_max + 2 < n {
            return Err(Error::State(format!(
                "table holds slices up to m = {}, final coefficient needs m = {}",
                self.m_max,
                n - 2
            )));
        }
        let head = self.c_at(0, n - 2).expect("slice present");
        let tail = self.c_cavity_at(n - 2).expect("slice present");
        Ok(head / self.d(n) - tail / self.d(1))
    }

    /// `Δ̃_0^(N−1) = Δ_1 + … + Δ_N`.
    pub fn final_frequency_sum(&self) -> f64 {
        self.detunings.iter().sum()
    }
}

fn check_detunings(detunings: &[f64]) -> Result<()> {
    if detunings.len() < 2 {
        return Err(Error::validation("recurrence needs N ≥ 2 detunings"));
    }
    if let Some(k) = detunings.iter().position(|d| *d == 0.0) {
        return Err(Error::validation(format!(
            "zero detuning at index {}",
            k + 1
        )));
    }
    Ok(())
}

/// First slice (`m = 1`) of the recurrence.
pub fn recurrence_base(detunings: &[f64]) -> Result<RecurrenceTable> {
    check_detunings(detunings)?;
    let n = detunings.len();
    let d = |k: usize| detunings[k - 1];
    let mut table = RecurrenceTable {
        detunings: detunings.to_vec(),
        m_max: 1,
        c: BTreeMap::new(),
        omega_tilde: BTreeMap::new(),
        delta_tilde: BTreeMap::new(),
        eta_tilde: BTreeMap::new(),
        delta_tilde_cavity: BTreeMap::new(),
        c_cavity: BTreeMap::new(),
    };
    for j in 0..=n - 2 {
        table.c.insert((j, 1), 1.0 / d(j + 2) - 1.0 / d(j + 1));
        table.delta_tilde.insert((j, 1), d(j + 1) + d(j + 2));
        // Ω̃ exists only while the window stays on classical drives.
        if j + 2 < n {
            table
                .omega_tilde
                .insert((j, 1), DriveProduct::drives([j + 1, j + 2]));
        }
    }
    table.c_cavity.insert(1, 1.0 / d(n) - 1.0 / d(n - 1));
    table.delta_tilde_cavity.insert(1, d(n - 1) + d(n));
    table.eta_tilde.insert(
        1,
        DriveProduct {
            eta: true,
            conj_drives: vec![n - 1],
        },
    );
    Ok(table)
}

/// Adds slice `m` (2 ≤ m ≤ N−2) computed from slice `m − 1`.
pub fn recurrence_step(table: &RecurrenceTable, m: usize) -> Result<RecurrenceTable> {
    let n = table.n();
    if m < 2 || m + 2 > n {
        return Err(Error::validation(format!(
            "recurrence step m = {m} out of range 2..={}",
            n as isize - 2
        )));
    }
    if table.m_max != m - 1 {
        return Err(Error::State(format!(
            "recurrence step {m} needs slice {} but table ends at {}",
            m - 1,
            table.m_max
        )));
    }
    let d = |k: usize| table.d(k);
    let mut out = table.clone();
    out.m_max = m;
    for j in 0..=n - 1 - m {
        let prev = |jj: usize| {
            table
                .c
                .get(&(jj, m - 1))
                .copied()
                .expect("previous slice covers the window")
        };
        out.c
            .insert((j, m), prev(j) / d(j + m + 1) - prev(j + 1) / d(j + 1));
        out.delta_tilde
            .insert((j, m), d(j + m + 1) + table.delta_tilde[&(j, m - 1)]);
        if j + m + 1 < n {
            let p = table.omega_tilde[&(j, m - 1)].times(j + m + 1);
            out.omega_tilde.insert((j, m), p);
        }
    }
    // The cavity window [N−m, N] splits into [N−m, N−1] (a ladder entry) and
    // [N−m+1, N] (the previous cavity entry).
    let head = table.c[&(n - m - 1, m - 1)];
    out.c_cavity
        .insert(m, head / d(n) - table.c_cavity[&(m - 1)] / d(n - m));
    out.delta_tilde_cavity
        .insert(m, d(n - m) + table.delta_tilde_cavity[&(m - 1)]);
    out.eta_tilde
        .insert(m, table.eta_tilde[&(m - 1)].times(n - m));
    Ok(out)
}

/// Base slice plus every step up to `m_max`.
pub fn build_table(detunings: &[f64], m_max: usize) -> Result<RecurrenceTable> {
    let mut table = recurrence_base(detunings)?;
    for m in 2..=m_max {
        table = recurrence_step(&table, m)?;
    }
    Ok(table)
}

/// Detunings seen by the recurrence. An emission leg is the absorption
/// ladder with `a → a†`, which flips the sign of the cavity detuning.
fn recurrence_detunings(spec: &SystemSpec) -> Vec<f64> {
    let mut d = spec.detunings.clone();
    if spec.cavity_leg == CavityLeg::Emission {
        let last = d.len() - 1;
        d[last] = -d[last];
    }
    d
}

fn cavity_field(spec: &SystemSpec) -> FieldMonomial {
    match spec.cavity_leg {
        CavityLeg::Absorption => FieldMonomial::Create,
        CavityLeg::Emission => FieldMonomial::Annihilate,
    }
}

#[allow(clippy::too_many_arguments)]
fn term(
    spec: &SystemSpec,
    label: String,
    row: usize,
    col: usize,
    field: FieldMonomial,
    coefficient: f64,
    product: &DriveProduct,
    frequency: f64,
) -> Result<RotatingTerm> {
    let space = spec.space()?;
    let scale = if product.eta {
        coefficient * spec.eta
    } else {
        coefficient
    };
    let t = RotatingTerm {
        label,
        operator: space.sigma_with(row, col, field)?,
        scale: C64::new(scale, 0.0),
        factors: product.factors(spec),
        frequency,
        include_hc: true,
    };
    Ok(canonical_orientation(&space, t))
}

/// Effective `g ↔ N` Hamiltonian
/// `η Ω̃_0^(N−2) C_0^(N−1) e^{−iΔ̃_0^(N−1) t} a†σ_{gN} + h.c.`
///
/// Diagonal (Stark) contributions are dropped. Envelopes pass through
/// symbolically and are evaluated at propagation time.
pub fn markov_eliminate(spec: &SystemSpec) -> Result<EffectiveHamiltonian> {
    spec.ensure_valid()?;
    let n = spec.n;
    let detunings = recurrence_detunings(spec);
    let table = build_table(&detunings, n.saturating_sub(2).max(1))?;
    let coefficient = table.final_coefficient()?;
    let product = DriveProduct {
        eta: true,
        conj_drives: (1..n).collect(),
    };
    let t = term(
        spec,
        format!("a†σ_{{g,{n}}} (eliminated)"),
        0,
        n,
        cavity_field(spec),
        coefficient,
        &product,
        -table.final_frequency_sum(),
    )?;
    let mut heff = EffectiveHamiltonian::new(spec.space()?, Method::Markov);
    heff.terms.push(EffectiveTerm {
        term: t,
        kind: TermKind::Coupling,
    });
    heff.notes.push(format!(
        "C_0^({}) = {:.12e}; summed detuning = {:.12e}",
        n - 1,
        coefficient,
        unsigned_zero(table.final_frequency_sum())
    ));
    if n == 3 {
        let (d1, d2, d3) = (detunings[0], detunings[1], detunings[2]);
        heff.notes.push(format!(
            "three-photon bracket: exact = {:.12e}, reduced 1/(Δ2(Δ1+Δ2)) = {:.12e}",
            exact_three_photon_coefficient(d1, d2, d3),
            reduced_three_photon_coefficient(d1, d2)
        ));
    }
    heff.recurrence = Some(table);
    Ok(heff)
}

/// Hamiltonian after `m` elimination rounds: ladder couplings
/// `σ_{j,j+m+1}` (j ≥ 1), the ground-row coupling `σ_{g,m+1}`, and the
/// cavity coupling `a†σ_{N−m−1,N}`, each with h.c.
pub fn intermediate_hamiltonian(spec: &SystemSpec, m: usize) -> Result<EffectiveHamiltonian> {
    spec.ensure_valid()?;
    let n = spec.n;
    if m < 1 || m + 2 > n {
        return Err(Error::validation(format!(
            "iteration m = {m} out of range 1..={}",
            n as isize - 2
        )));
    }
    let detunings = recurrence_detunings(spec);
    let table = build_table(&detunings, m)?;
    let mut heff = EffectiveHamiltonian::new(spec.space()?, Method::Markov);
    let mut push = |t: RotatingTerm| {
        heff.terms.push(EffectiveTerm {
            term: t,
            kind: TermKind::Coupling,
        })
    };
    // Ladder family: every drive in the window must exist.
    for j in 1..n.saturating_sub(m + 1) {
        push(term(
            spec,
            format!("σ_{{{},{}}}", j, j + m + 1),
            j,
            j + m + 1,
            FieldMonomial::Identity,
            table.c[&(j, m)],
            &table.omega_tilde[&(j, m)],
            -table.delta_tilde[&(j, m)],
        )?);
    }
    push(term(
        spec,
        format!("σ_{{g,{}}}", m + 1),
        0,
        m + 1,
        FieldMonomial::Identity,
        table.c[&(0, m)],
        &table.omega_tilde[&(0, m)],
        -table.delta_tilde[&(0, m)],
    )?);
    push(term(
        spec,
        format!("a†σ_{{{},{}}}", level_label(n - m - 1), n),
        n - m - 1,
        n,
        cavity_field(spec),
        table.c_cavity[&m],
        &table.eta_tilde[&m],
        -table.delta_tilde_cavity[&m],
    )?);
    heff.recurrence = Some(table);
    Ok(heff)
}

/// Three-photon recurrence coefficient `C_0^(2)` for detunings
/// `(Δ_1, Δ_2, Δ_3)`, evaluated without approximation.
pub fn exact_three_photon_coefficient(d1: f64, d2: f64, d3: f64) -> f64 {
    (1.0 / d3) * (1.0 / d2 - 1.0 / d1) - (1.0 / d1) * (1.0 / d3 - 1.0 / d2)
}

/// Resonant three-photon coefficient after discarding the
/// `(1/Δ_3)(1/Δ_2 − 1/Δ_1)` bracket and imposing `Δ_3 = −Δ_1 − Δ_2`:
/// `1 / (Δ_2 (Δ_1 + Δ_2))`.
pub fn reduced_three_photon_coefficient(d1: f64, d2: f64) -> f64 {
    1.0 / (d2 * (d1 + d2))
}
