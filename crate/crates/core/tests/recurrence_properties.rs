mod common;

use cavity_heff::elimination::{
    markov_eliminate, recurrence_base, recurrence_step, RecurrenceTable,
};
use cavity_heff::model::{build_full_hamiltonian, CavityLeg, DriveEnvelope, SystemSpec};
use cavity_heff::C64;
use common::{cavity_by_enumeration, ladder_by_enumeration};
use proptest::prelude::*;

fn detuning() -> impl Strategy<Value = f64> {
    (0.5f64..50.0, any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x })
}

fn detunings() -> impl Strategy<Value = Vec<f64>> {
    (3usize..=6).prop_flat_map(|n| proptest::collection::vec(detuning(), n))
}

fn full_table(d: &[f64]) -> RecurrenceTable {
    let mut t = recurrence_base(d).unwrap();
    for m in 2..=d.len() - 2 {
        t = recurrence_step(&t, m).unwrap();
    }
    t
}

/// Sum of absolute path products, the natural scale for rounding error.
fn ladder_magnitude(d: &[f64], j: usize, m: usize) -> f64 {
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    // With all detunings positive and the shift sign flipped, every path adds.
    let mut total = 0.0;
    for bits in 0u32..(1 << m) {
        let (mut jj, mut mm, mut prod) = (j, m, 1.0);
        for b in 0..m {
            if bits >> b & 1 == 0 {
                prod /= abs[jj + mm];
            } else {
                prod /= abs[jj];
                jj += 1;
            }
            mm -= 1;
        }
        total += prod;
    }
    total
}

fn spec(d: Vec<f64>) -> SystemSpec {
    let n = d.len();
    SystemSpec {
        n,
        detunings: d,
        drives: (1..n)
            .map(|k| DriveEnvelope::constant(C64::new(0.3 * k as f64, 0.1)))
            .collect(),
        eta: 0.7,
        fock_cutoff: 2,
        cavity_leg: CavityLeg::Absorption,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ladder_coefficients_match_enumeration(d in detunings()) {
        let table = full_table(&d);
        for (&(j, m), &c) in &table.c {
            let want = ladder_by_enumeration(&d, j, m);
            let scale = ladder_magnitude(&d, j, m);
            prop_assert!((c - want).abs() <= 1e-12 * scale, "C_{j}^({m}) = {c}, want {want}");
        }
    }

    #[test]
    fn cavity_coefficients_match_enumeration(d in detunings()) {
        let table = full_table(&d);
        for (&m, &c) in &table.c_cavity {
            let want = cavity_by_enumeration(&d, m);
            prop_assert!((c - want).abs() <= 1e-12 * want.abs().max(c.abs()) + 1e-15,
                "C_cav^({m}) = {c}, want {want}");
        }
        // The final coupling is the cavity recurrence taken one level further.
        let fin = table.final_coefficient().unwrap();
        let want = cavity_by_enumeration(&d, d.len() - 1);
        prop_assert!((fin - want).abs() <= 1e-12 * want.abs().max(1e-300));
    }

    #[test]
    fn summed_detunings_telescope(d in detunings()) {
        let table = full_table(&d);
        let n = d.len();
        for (&(j, m), &s) in &table.delta_tilde {
            let want: f64 = d[j..=j + m].iter().sum();
            prop_assert!((s - want).abs() <= 1e-12 * d.iter().map(|x| x.abs()).sum::<f64>());
        }
        for (&m, &s) in &table.delta_tilde_cavity {
            let want: f64 = d[n - m - 1..].iter().sum();
            prop_assert!((s - want).abs() <= 1e-12 * d.iter().map(|x| x.abs()).sum::<f64>());
        }
    }

    #[test]
    fn coefficients_scale_as_inverse_power(d in detunings(), s in 1.5f64..20.0) {
        let base = full_table(&d);
        let scaled: Vec<f64> = d.iter().map(|x| x * s).collect();
        let table = full_table(&scaled);
        for (&(j, m), &c) in &table.c {
            let want = base.c[&(j, m)] * s.powi(-(m as i32));
            prop_assert!((c - want).abs() <= 1e-11 * ladder_magnitude(&scaled, j, m));
        }
        let n = d.len() as i32;
        let fin = table.final_coefficient().unwrap();
        let want = base.final_coefficient().unwrap() * s.powi(-(n - 1));
        prop_assert!((fin - want).abs() <= 1e-10 * want.abs().max(1e-300));
    }

    #[test]
    fn markov_hamiltonian_is_hermitian(d in detunings(), leg in any::<bool>()) {
        let mut sp = spec(d);
        if leg {
            sp.cavity_leg = CavityLeg::Emission;
        }
        let heff = markov_eliminate(&sp).unwrap();
        let h = heff.hamiltonian();
        for t in [0.0, 0.37, 5.0] {
            prop_assert!(h.evaluate(t).is_hermitian(1e-14));
        }
        let full = build_full_hamiltonian(&sp).unwrap();
        prop_assert!(full.evaluate(1.3).is_hermitian(1e-14));
    }
}
