//! Dense oracles shared by the integration tests. Nothing here reuses the
//! sparse propagator; everything goes through nalgebra matrices.

#![allow(dead_code)]

use std::collections::VecDeque;

use cavity_heff::model::RotatingHamiltonian;
use cavity_heff::C64;
use nalgebra::{DMatrix, DVector};

/// Dense `H(t)` assembled entry by entry from the rotating terms.
pub fn dense_at(h: &RotatingHamiltonian, t: f64) -> DMatrix<C64> {
    let dim = h.dim();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for term in &h.terms {
        let c = term.amplitude(t) * C64::from_polar(1.0, term.frequency * t);
        for &(r, col, v) in term.operator.entries() {
            m[(r, col)] += v * c;
            if term.include_hc {
                m[(col, r)] += (v * c).conj();
            }
        }
    }
    m
}

/// Diagonal phase rates `φ` with `H(t) = e^{iΦt} H(0) e^{−iΦt}`, found by a
/// breadth-first walk over the coupling graph. `None` if some loop carries
/// inconsistent frequencies.
pub fn frame_phases(h: &RotatingHamiltonian) -> Option<Vec<f64>> {
    let dim = h.dim();
    let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
    for term in &h.terms {
        for &(r, c, v) in term.operator.entries() {
            if v.norm() == 0.0 || r == c {
                continue;
            }
            // φ_r − φ_c = ν
            edges[r].push((c, -term.frequency));
            edges[c].push((r, term.frequency));
        }
    }
    let mut phi: Vec<Option<f64>> = vec![None; dim];
    for start in 0..dim {
        if phi[start].is_some() {
            continue;
        }
        phi[start] = Some(0.0);
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            let pk = phi[k].unwrap();
            for &(l, shift) in &edges[k] {
                let want = pk + shift;
                match phi[l] {
                    None => {
                        phi[l] = Some(want);
                        queue.push_back(l);
                    }
                    Some(p) if (p - want).abs() > 1e-9 * (1.0 + want.abs()) => return None,
                    Some(_) => {}
                }
            }
        }
    }
    Some(phi.into_iter().map(Option::unwrap).collect())
}

/// Exact propagation for constant envelopes: `ψ(t) = e^{iΦt} e^{−i(H(0)+Φ)t} ψ(0)`.
pub fn exact_state(h: &RotatingHamiltonian, psi0: &[C64], t: f64) -> Vec<C64> {
    let phi = frame_phases(h).expect("consistent rotating frame");
    let mut k = dense_at(h, 0.0);
    for (i, p) in phi.iter().enumerate() {
        k[(i, i)] += C64::new(*p, 0.0);
    }
    let u = (k * C64::new(0.0, -t)).exp();
    let chi = u * DVector::from_column_slice(psi0);
    chi.iter()
        .zip(&phi)
        .map(|(a, p)| a * C64::from_polar(1.0, p * t))
        .collect()
}

/// Fourth-order commutator-free exponential integrator on a uniform grid,
/// valid for arbitrary envelopes.
pub fn cf4_state(h: &RotatingHamiltonian, psi0: &[C64], t_final: f64, steps: usize) -> Vec<C64> {
    let dt = t_final / steps as f64;
    let s3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - s3 / 6.0, 0.5 + s3 / 6.0);
    let (a1, a2) = ((3.0 - 2.0 * s3) / 12.0, (3.0 + 2.0 * s3) / 12.0);
    let minus_i_dt = C64::new(0.0, -dt);
    let mut psi = DVector::from_column_slice(psi0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let h1 = dense_at(h, t + c1 * dt);
        let h2 = dense_at(h, t + c2 * dt);
        let first = ((&h1 * C64::new(a2, 0.0) + &h2 * C64::new(a1, 0.0)) * minus_i_dt).exp();
        let second = ((&h1 * C64::new(a1, 0.0) + &h2 * C64::new(a2, 0.0)) * minus_i_dt).exp();
        psi = second * (first * psi);
    }
    psi.iter().copied().collect()
}

pub fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        .norm_sqr()
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Independent expansion of the nested brackets: every path from `(j, m)`
/// down to the empty window either keeps `j` (factor `1/Δ_{j+m+1}`) or
/// shifts it (factor `−1/Δ_{j+1}`). Enumerates all `2^m` choice strings.
/// `d` is 1-based through `d[k − 1]`.
pub fn ladder_by_enumeration(d: &[f64], j: usize, m: usize) -> f64 {
    let mut total = 0.0;
    for bits in 0u32..(1 << m) {
        let (mut jj, mut mm, mut prod) = (j, m, 1.0);
        for b in 0..m {
            if bits >> b & 1 == 0 {
                prod /= d[jj + mm];
            } else {
                prod /= -d[jj];
                jj += 1;
            }
            mm -= 1;
        }
        total += prod;
    }
    total
}

/// Cavity-side coefficient by enumeration: at each level either hand over
/// to a ladder window (factor `1/Δ_N`) or stay on the cavity side (factor
/// `−1/Δ_{N−m}`).
pub fn cavity_by_enumeration(d: &[f64], m: usize) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    let mut prod = 1.0;
    for level in (1..=m).rev() {
        // Hand over here: 1/Δ_N times the ladder window ending at N − 1.
        total += prod / d[n - 1] * ladder_by_enumeration(d, n - level - 1, level - 1);
        prod /= -d[n - level - 1];
    }
    total + prod
}
