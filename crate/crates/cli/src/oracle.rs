//! Closed-form reference values, computed without the numerical pipeline.

use fiskit_core::logforms::{cq_rat, Poly, ZForm};
use std::f64::consts::{FRAC_PI_2, PI};

use fiskit_core::{Chart, C64};
use serde_json::{json, Value};

pub const NAMES: [&str; 4] = ["dolbeault", "leafwise", "mizohata", "homotopy"];

/// Fourier multiplier of `∂/∂z̄ = (∂₁ + i∂₂)/2` on `e^{i(k₁x₁ + k₂x₂)}`.
pub fn dolbeault_symbol(k1: i64, k2: i64) -> C64 {
    C64::new(-(k2 as f64) / 2.0, k1 as f64 / 2.0)
}

/// Mean-zero solution of `∂u/∂z̄ = f` on T², mode by mode on the grid.
pub fn dolbeault_solve(f: &[C64], resolution: usize) -> Vec<C64> {
    use rustfft::FftPlanner;
    let n = resolution;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut data = f.to_vec();
    // Row-major: index = i₁·n + i₂, axis 1 is x₂.
    let transform = |data: &mut Vec<C64>, plan: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    };
    transform(&mut data, &fwd);
    let freqs = Chart::frequencies(n);
    for i in 0..n {
        for j in 0..n {
            // The grid differentiates the Nyquist mode with frequency −n/2.
            let sym = dolbeault_symbol(freqs[i], freqs[j]);
            let z = &mut data[i * n + j];
            *z = if sym.norm() == 0.0 { C64::new(0.0, 0.0) } else { *z / sym };
        }
    }
    transform(&mut data, &inv);
    let scale = 1.0 / (n * n) as f64;
    data.iter().map(|z| z * scale).collect()
}

/// Defect of `∂₁ + c` on functions of T² truncated to `n` modes per axis: the number of
/// (k₁, k₂) with `i k₁ + c = 0`.
pub fn leafwise_defect(n: usize, c: C64) -> usize {
    let freqs = Chart::frequencies(n);
    let per_leaf = freqs.iter().filter(|&&k| (C64::new(0.0, k as f64) + c).norm() < 1e-12).count();
    per_leaf * n
}

/// `d = e = −cos x₁ / (2 + sin x₁)` for `X = ∂₁ + i(2 + sin x₁)∂₂`.
pub fn mizohata_coefficient(x1: f64) -> f64 {
    -x1.cos() / (2.0 + x1.sin())
}

/// `ℋ(dz₁∧dz₂) = (z₁ dz₂ − z₂ dz₁)/2`.
pub fn homotopy_of_area_form() -> ZForm {
    let half = Poly::constant(2, 0, cq_rat(1, 2));
    let a = ZForm::dz(2, 0, 1).mul_poly(&Poly::z(2, 0, 0));
    let b = ZForm::dz(2, 0, 0).mul_poly(&Poly::z(2, 0, 1));
    a.sub(&b).mul_poly(&half)
}

pub fn oracle(name: &str) -> Option<Value> {
    Some(match name {
        "dolbeault" => {
            let modes: Vec<Value> = [(1, 0), (0, 1), (1, 1), (2, -1)]
                .iter()
                .map(|&(k1, k2)| {
                    let inv = C64::new(1.0, 0.0) / dolbeault_symbol(k1, k2);
                    json!({ "k": [k1, k2], "solution_multiplier": [inv.re, inv.im] })
                })
                .collect();
            json!({ "operator": "(d1 + i d2)/2 on T^2", "modes": modes, "constant_mode": "obstructed" })
        }
        "leafwise" => json!({
            "structure": "span{d1} on T^2",
            "defect_q0": { "untwisted_16": leafwise_defect(16, C64::new(0.0, 0.0)), "twist_0.5dx1_16": leafwise_defect(16, C64::new(0.5, 0.0)), "twist_1i_dx1_16": leafwise_defect(16, C64::new(0.0, 1.0)) },
        }),
        "mizohata" => {
            let samples: Vec<Value> =
                [0.0, FRAC_PI_2, PI].iter().map(|&x| json!([x, mizohata_coefficient(x)])).collect();
            json!({ "formula": "d = e = -cos(x1)/(2 + sin(x1))", "samples": samples })
        }
        "homotopy" => json!({ "input": "dz1^dz2", "result": homotopy_of_area_form().to_string() }),
        _ => return None,
    })
}
