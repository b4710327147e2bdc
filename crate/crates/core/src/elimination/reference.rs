//! Closed-form 2×2 effective Hamiltonians for the classical lambda system,
//! written in the basis `(|g⟩, |2⟩)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Matrix2 = [[C64; 2]; 2];

/// Amplitude-equation elimination with `Ċ₁ = 0`:
/// `−[[Δ/2 + |Ω₁|²/(4Δ̄), Ω₁*Ω₂/(4Δ̄)], [Ω₁Ω₂*/(4Δ̄), −Δ/2 + |Ω₂|²/(4Δ̄)]]`.
pub fn lambda_amplitude_heff(
    omega1: C64,
    omega2: C64,
    delta: f64,
    delta_bar: f64,
) -> Result<Matrix2> {
    if delta_bar == 0.0 {
        return Err(Error::validation("mean detuning Δ̄ must be nonzero"));
    }
    let k = 4.0 * delta_bar;
    Ok([
        [
            -C64::new(delta / 2.0 + omega1.norm_sqr() / k, 0.0),
            -(omega1.conj() * omega2) / k,
        ],
        [
            -(omega1 * omega2.conj()) / k,
            -C64::new(-delta / 2.0 + omega2.norm_sqr() / k, 0.0),
        ],
    ])
}

/// Integro-differential elimination under the Markov approximation:
/// `−½[[Δ + |Ω₁|²/(2Δ̄), Ω₁*Ω₂*/(2Δ)], [Ω₁Ω₂/(2Δ), −Δ + |Ω₁|²/(2Δ̄)]]`.
pub fn paulisch_lambda_heff(
    omega1: C64,
    omega2: C64,
    delta: f64,
    delta_bar: f64,
) -> Result<Matrix2> {
    if delta == 0.0 {
        return Err(Error::validation("detuning difference Δ must be nonzero"));
    }
    if delta_bar == 0.0 {
        return Err(Error::validation("mean detuning Δ̄ must be nonzero"));
    }
    let stark = omega1.norm_sqr() / (2.0 * delta_bar);
    Ok([
        [
            -0.5 * C64::new(delta + stark, 0.0),
            -0.5 * omega1.conj() * omega2.conj() / (2.0 * delta),
        ],
        [
            -0.5 * omega1 * omega2 / (2.0 * delta),
            -0.5 * C64::new(-delta + stark, 0.0),
        ],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn amplitude_heff_entries() {
        let m = lambda_amplitude_heff(c(1.0, 0.0), c(2.0, 0.0), 0.0, 100.0).unwrap();
        assert_eq!(m[0][0], c(-1.0 / 400.0, 0.0));
        assert_eq!(m[1][1], c(-4.0 / 400.0, 0.0));
        assert_eq!(m[0][1], c(-2.0 / 400.0, 0.0));
        assert_eq!(m[1][0], m[0][1].conj());
    }

    #[test]
    fn amplitude_heff_is_hermitian() {
        let m = lambda_amplitude_heff(c(0.3, 0.4), c(-1.0, 0.2), 3.0, 50.0).unwrap();
        assert!((m[0][1] - m[1][0].conj()).norm() < 1e-16);
        assert_eq!(m[0][0].im, 0.0);
        assert_eq!(m[1][1].im, 0.0);
    }

    #[test]
    fn degenerate_detunings_rejected() {
        assert!(lambda_amplitude_heff(c(1.0, 0.0), c(1.0, 0.0), 1.0, 0.0).is_err());
        assert!(paulisch_lambda_heff(c(1.0, 0.0), c(1.0, 0.0), 0.0, 1.0).is_err());
        assert!(paulisch_lambda_heff(c(1.0, 0.0), c(1.0, 0.0), 1.0, 0.0).is_err());
    }

    #[test]
    fn paulisch_entries() {
        let m = paulisch_lambda_heff(c(1.0, 0.0), c(2.0, 0.0), 4.0, 10.0).unwrap();
        assert_eq!(m[0][0], c(-0.5 * (4.0 + 0.05), 0.0));
        assert_eq!(m[1][1], c(-0.5 * (-4.0 + 0.05), 0.0));
        assert_eq!(m[0][1], c(-0.5 * 2.0 / 8.0, 0.0));
    }
}
