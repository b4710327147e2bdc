//! Time-averaged effective Hamiltonians from the Dyson series.
//!
//! Input terms `T e^{iνt} + h.c.` are rewritten as `Λ e^{−iωt} + h.c.` with
//! `ω > 0`: `Λ = T†, ω = ν` when `ν > 0` and `Λ = T, ω = −ν` otherwise.
//! Frequency-sum products are then fast and may be dropped.

use num_complex::Complex64 as C64;

use super::{canonical_orientation, EffectiveHamiltonian, EffectiveTerm, Method, TermKind};
use crate::error::{Error, Result};
use crate::hilbert::{JointSpace, SparseOperator};
use crate::model::{EnvelopeFactor, RotatingTerm};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JamesOptions {
    /// Keep diagonal (Stark) contributions.
    pub keep_stark: bool,
}

impl Default for JamesOptions {
    fn default() -> Self {
        Self { keep_stark: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GJamesOptions {
    /// Require a triple with `ω_α + ω_β − ω_γ = 0`.
    pub resonance_check: bool,
    /// Largest kept net frequency. `None` keeps only resonant products
    /// (`|net| ≤ 1e-9·max ω`).
    pub rwa_threshold: Option<f64>,
    /// Append second-order Stark terms.
    pub keep_stark: bool,
}

impl Default for GJamesOptions {
    fn default() -> Self {
        Self {
            resonance_check: true,
            rwa_threshold: None,
            keep_stark: true,
        }
    }
}

/// `Λ = scale · Π factors · op`, entering the Hamiltonian as
/// `Λ e^{−iωt} + h.c.`
#[derive(Clone, Debug, PartialEq)]
pub struct JamesTerm {
    pub op: SparseOperator,
    pub scale: C64,
    pub factors: Vec<EnvelopeFactor>,
    pub omega: f64,
}

impl JamesTerm {
    pub fn new(op: SparseOperator, scale: C64, omega: f64) -> Self {
        Self {
            op,
            scale,
            factors: Vec::new(),
            omega,
        }
    }

    /// Positive-frequency form of `T e^{iνt} + h.c.`
    pub fn from_rotating(index: usize, term: &RotatingTerm) -> Result<Self> {
        if !term.include_hc {
            return Err(Error::validation(format!(
                "term {index} ({}) must carry its hermitian conjugate",
                term.label
            )));
        }
        if term.frequency == 0.0 || !term.frequency.is_finite() {
            return Err(Error::validation(format!(
                "term {index} ({}) has frequency {}; nonzero finite frequency required",
                term.label, term.frequency
            )));
        }
        let l = Self {
            op: term.operator.clone(),
            scale: term.scale,
            factors: term.factors.clone(),
            omega: -term.frequency,
        };
        Ok(if term.frequency > 0.0 { l.dagger() } else { l })
    }

    pub fn dagger(&self) -> Self {
        Self {
            op: self.op.adjoint(),
            scale: self.scale.conj(),
            factors: self.factors.iter().map(EnvelopeFactor::conj).collect(),
            omega: -self.omega,
        }
    }
}

/// Product `x_1 x_2 … x_k` with amplitudes multiplied symbolically.
fn product(parts: &[&JamesTerm]) -> (SparseOperator, C64, Vec<EnvelopeFactor>) {
    let mut op = parts[0].op.clone();
    let mut scale = parts[0].scale;
    let mut factors = parts[0].factors.clone();
    for p in &parts[1..] {
        op = op.mul(&p.op);
        scale *= p.scale;
        factors.extend(p.factors.iter().cloned());
    }
    (op, scale, factors)
}

fn is_diagonal(op: &SparseOperator) -> bool {
    op.entries().iter().all(|&(r, c, _)| r == c)
}

/// Rewrites rotating terms in positive-frequency James form.
pub fn james_terms(terms: &[RotatingTerm]) -> Result<Vec<JamesTerm>> {
    terms
        .iter()
        .enumerate()
        .map(|(i, t)| JamesTerm::from_rotating(i, t))
        .collect()
}

fn check_frequencies(lambdas: &[JamesTerm]) -> Result<()> {
    match lambdas
        .iter()
        .position(|l| l.omega == 0.0 || !l.omega.is_finite())
    {
        Some(i) => Err(Error::validation(format!(
            "term {} has frequency {}; nonzero finite frequency required",
            i + 1,
            lambdas[i].omega
        ))),
        None => Ok(()),
    }
}

fn second_order_terms(lambdas: &[JamesTerm], keep: impl Fn(bool) -> bool) -> Vec<EffectiveTerm> {
    let mut out = Vec::new();
    for (a, la) in lambdas.iter().enumerate() {
        for (b, lb) in lambdas.iter().enumerate().skip(a) {
            let ad = la.dagger();
            let (fwd, s, f) = product(&[&ad, lb]);
            let (bwd, _, _) = product(&[lb, &ad]);
            let op = fwd.sub(&bwd);
            if op.is_zero() {
                continue;
            }
            let diagonal = is_diagonal(&op);
            if !keep(diagonal) {
                continue;
            }
            let inv_mean = 0.5 * (1.0 / la.omega + 1.0 / lb.omega);
            // The (β, α) summand is the adjoint of (α, β).
            out.push(EffectiveTerm {
                term: RotatingTerm {
                    label: format!("[Λ{}†,Λ{}]", a + 1, b + 1),
                    operator: op,
                    scale: s * inv_mean,
                    factors: f,
                    frequency: la.omega - lb.omega,
                    include_hc: a != b,
                },
                kind: if diagonal {
                    TermKind::Stark
                } else {
                    TermKind::Coupling
                },
            });
        }
    }
    out
}

/// `Σ_{α,β} (1/ω̄_αβ) [Λ_α†, Λ_β] e^{i(ω_α−ω_β)t}` with
/// `1/ω̄_αβ = (1/ω_α + 1/ω_β)/2`. Diagonal results are labeled Stark.
pub fn james_second_order(
    space: &JointSpace,
    lambdas: &[JamesTerm],
    options: JamesOptions,
) -> Result<EffectiveHamiltonian> {
    check_frequencies(lambdas)?;
    let mut heff = EffectiveHamiltonian::new(space.clone(), Method::James2);
    for et in second_order_terms(lambdas, |diag| options.keep_stark || !diag) {
        let term = canonical_orientation(space, et.term);
        heff.terms.push(EffectiveTerm { term, ..et });
    }
    Ok(heff)
}

/// Third-order time-averaged Hamiltonian: six operator families with
/// prefactors `1/(ω_γ(ω_γ−ω_β))` and `1/(ω_γ(ω_γ+ω_β))`, keeping only slowly
/// rotating products. The kept sum is symmetrized as `(X + X†)/2`.
pub fn gjames_third_order(
    space: &JointSpace,
    lambdas: &[JamesTerm],
    options: GJamesOptions,
) -> Result<EffectiveHamiltonian> {
    check_frequencies(lambdas)?;
    let w_max = lambdas.iter().map(|l| l.omega.abs()).fold(0.0, f64::max);
    let tol = 1e-9 * w_max;
    for (i, li) in lambdas.iter().enumerate() {
        for (j, lj) in lambdas.iter().enumerate().skip(i + 1) {
            if (li.omega - lj.omega).abs() <= tol {
                return Err(Error::validation(format!(
                    "frequencies of terms {} and {} coincide ({}); prefactor 1/(ω_γ(ω_γ−ω_β)) is singular",
                    i + 1,
                    j + 1,
                    li.omega
                )));
            }
        }
    }
    let n = lambdas.len();
    let resonant = (0..n).find_map(|a| {
        (0..n).find_map(|b| {
            (0..n)
                .find(|&c| {
                    a != b
                        && b != c
                        && a != c
                        && (lambdas[a].omega + lambdas[b].omega - lambdas[c].omega).abs() <= tol
                })
                .map(|c| (a, b, c))
        })
    });
    if options.resonance_check && resonant.is_none() {
        let ws: Vec<String> = lambdas.iter().map(|l| format!("{}", l.omega)).collect();
        return Err(Error::Inapplicable(format!(
            "no triple with ω_α + ω_β − ω_γ = 0 among ω = [{}]",
            ws.join(", ")
        )));
    }
    let threshold = options.rwa_threshold.unwrap_or(tol);

    let mut heff = EffectiveHamiltonian::new(space.clone(), Method::Gjames3);
    for (a, la) in lambdas.iter().enumerate() {
        for (b, lb) in lambdas.iter().enumerate() {
            for (c, lc) in lambdas.iter().enumerate() {
                let (wa, wb, wc) = (la.omega, lb.omega, lc.omega);
                let (ad, bd, cd) = (la.dagger(), lb.dagger(), lc.dagger());
                let mut families: Vec<(f64, [&JamesTerm; 3], f64, &str)> = Vec::new();
                if b != c {
                    let p = 1.0 / (wc * (wc - wb));
                    families.push((p, [la, lb, lc], wa - wb + wc, "ΛΛΛ"));
                    families.push((p, [&ad, lb, &cd], wa - wb + wc, "Λ†ΛΛ†"));
                    families.push((p, [la, lb, &cd], wa + wb - wc, "ΛΛΛ†"));
                    families.push((p, [&ad, &bd, lc], -wa - wb + wc, "Λ†Λ†Λ"));
                }
                let q = 1.0 / (wc * (wc + wb));
                families.push((q, [&ad, lb, lc], -wa + wb + wc, "Λ†ΛΛ"));
                families.push((q, [la, &bd, &cd], wa - wb - wc, "ΛΛ†Λ†"));
                for (pref, parts, net, pattern) in families {
                    if net.abs() > threshold {
                        continue;
                    }
                    let (op, s, f) = product(&parts);
                    if op.is_zero() {
                        continue;
                    }
                    let term = RotatingTerm {
                        label: format!("{pattern}({},{},{})", a + 1, b + 1, c + 1),
                        operator: op,
                        scale: s * (0.5 * pref),
                        factors: f,
                        frequency: net,
                        include_hc: true,
                    };
                    heff.terms.push(EffectiveTerm {
                        term: canonical_orientation(space, term),
                        kind: TermKind::Coupling,
                    });
                }
            }
        }
    }
    if options.keep_stark {
        heff.terms.extend(
            second_order_terms(lambdas, |diag| diag)
                .into_iter()
                .map(|et| EffectiveTerm {
                    kind: TermKind::Stark,
                    ..et
                }),
        );
    }
    match resonant {
        Some((a, b, c)) => heff.notes.push(format!(
            "resonant triple ω{} + ω{} − ω{} = 0",
            a + 1,
            b + 1,
            c + 1
        )),
        None => heff
            .notes
            .push("resonance check disabled and no resonant triple found".to_string()),
    }
    Ok(heff)
}
