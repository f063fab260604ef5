//! Seeded random band-limited data.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exterior::{binomial, Basis, Form};
use crate::grid::{bump, Chart, ScalarField, C64, ZERO};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Trigonometric polynomial with random coefficients on all modes |k_a| ≤ bandwidth.
pub fn random_trig_field(chart: &Arc<Chart>, bandwidth: usize, rng: &mut impl Rng) -> ScalarField {
    let dim = chart.dim();
    let b = bandwidth as i64;
    let width = (2 * b + 1) as usize;
    let modes = width.pow(dim as u32);
    let coeffs: Vec<C64> = (0..modes).map(|_| random_complex(rng)).collect();
    // Per-axis tables of e^{2πi k x / L}.
    let tables: Vec<Vec<Vec<C64>>> = chart
        .axes()
        .iter()
        .map(|a| {
            (0..a.resolution)
                .map(|j| {
                    let x = a.period * j as f64 / a.resolution as f64;
                    (-b..=b).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 * x / a.period)).collect()
                })
                .collect()
        })
        .collect();
    let data = (0..chart.len())
        .map(|p| {
            let ks = chart.unflatten(p);
            let mut s = ZERO;
            for (m, &c) in coeffs.iter().enumerate() {
                let mut rem = m;
                let mut term = c;
                for d in (0..dim).rev() {
                    term *= tables[d][ks[d]][rem % width];
                    rem /= width;
                }
                s += term;
            }
            s
        })
        .collect();
    ScalarField::from_vec(chart, data).expect("finite samples")
}

/// Real-valued random trigonometric polynomial.
pub fn random_real_trig_field(chart: &Arc<Chart>, bandwidth: usize, rng: &mut impl Rng) -> ScalarField {
    random_trig_field(chart, bandwidth, rng).map(|z| C64::new(z.re, 0.0))
}

/// Random coordinate-basis k-form with band-limited coefficients.
pub fn random_form(chart: &Arc<Chart>, degree: usize, bandwidth: usize, rng: &mut impl Rng) -> Form {
    let n = binomial(chart.dim(), degree);
    if n == 0 {
        return Form::zero_coord(chart, degree);
    }
    let coeffs = (0..n).map(|_| random_trig_field(chart, bandwidth, rng)).collect();
    Form::from_coeffs(degree, Basis::Coordinate, chart.dim(), coeffs).expect("consistent shape")
}

/// Band-limited field multiplied by a bump; compactly supported.
pub fn random_compact_field(
    chart: &Arc<Chart>,
    center: &[f64],
    radius: f64,
    bandwidth: usize,
    rng: &mut impl Rng,
) -> Result<ScalarField> {
    let b = bump(chart, center, radius)?;
    Ok(&random_trig_field(chart, bandwidth, rng) * &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::partial_derivative;

    #[test]
    fn same_seed_same_field() {
        let c = Chart::torus(2, 8).unwrap();
        let a = random_trig_field(&c, 2, &mut seeded(7));
        let b = random_trig_field(&c, 2, &mut seeded(7));
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn band_limited_fields_differentiate_exactly() {
        // The second derivative of a mode-≤2 field has the predicted symbol −k².
        let c = Chart::torus(1, 8).unwrap();
        let f = random_trig_field(&c, 2, &mut seeded(3));
        let dd = partial_derivative(&partial_derivative(&f, 0).unwrap(), 0).unwrap();
        let f4 = partial_derivative(&partial_derivative(&dd, 0).unwrap(), 0).unwrap();
        // For modes {0,±1,±2}: ∂⁴ + 5∂² + 4 annihilates f − f̂₀.
        let mean: C64 = f.data().iter().sum::<C64>() / 8.0;
        let resid = f4.zip_map(&dd, |a, b| a + 5.0 * b).unwrap().zip_map(&f, |a, b| a + 4.0 * (b - mean)).unwrap();
        assert!(resid.max_abs() < 1e-10);
    }
}
