//! Concrete structures used by tests, benches and scenarios.
//!
//! Every chart is a torus with period 2π on each axis.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Chart, ScalarField, VectorField, C64};
use crate::structure::FIStructure;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn constant(chart: &Arc<Chart>, comps: &[C64]) -> Result<VectorField> {
    VectorField::constant(chart, comps)
}

/// V = span{∂₁} on T², complement ∂₂.
pub fn essentially_real_t2(resolution: usize) -> Result<FIStructure> {
    let ch = Chart::torus(2, resolution)?;
    FIStructure::new(vec![constant(&ch, &[c(1.0, 0.0), c(0.0, 0.0)])?], vec![constant(&ch, &[c(0.0, 0.0), c(1.0, 0.0)])?])
}

/// V = span{∂₁, ∂₂} on T³, complement ∂₃.
pub fn essentially_real_t3(resolution: usize) -> Result<FIStructure> {
    let ch = Chart::torus(3, resolution)?;
    FIStructure::new(
        vec![VectorField::coordinate(&ch, 0)?, VectorField::coordinate(&ch, 1)?],
        vec![VectorField::coordinate(&ch, 2)?],
    )
}

/// Complex structure on T²: V = span{∂/∂z̄}, complement ∂/∂z, so ω = dz̄ and θ = dz.
pub fn complex_t2(resolution: usize) -> Result<FIStructure> {
    let ch = Chart::torus(2, resolution)?;
    FIStructure::new(
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, 0.5)])?],
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, -0.5)])?],
    )
}

/// V = span{∂₁ + i·a(x)∂₂} on T² with complement ∂₂.
pub fn planar(resolution: usize, a: impl Fn(&[f64]) -> f64) -> Result<FIStructure> {
    let ch = Chart::torus(2, resolution)?;
    let x = VectorField::new(vec![ScalarField::constant(&ch, c(1.0, 0.0)), ScalarField::from_fn(&ch, |p| c(0.0, a(p)))])?;
    FIStructure::new(vec![x], vec![VectorField::coordinate(&ch, 1)?])
}

/// a = 2 + sin x₁: elliptic everywhere, with nonconstant commutator coefficients.
pub fn mizohata_free(resolution: usize) -> Result<FIStructure> {
    planar(resolution, |p| 2.0 + p[0].sin())
}

/// Elliptic normal chart on T³ with coordinates (x₁, x₂, t):
/// V = span{∂/∂z̄, ∂/∂t}, complement ∂/∂z, so m = 1 and n = 2.
pub fn elliptic_normal_t3(resolution: usize) -> Result<FIStructure> {
    let ch = Chart::torus(3, resolution)?;
    FIStructure::new(
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.0)])?, VectorField::coordinate(&ch, 2)?],
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.0)])?],
    )
}

/// Levi-flat CR product T² × S¹ with coordinates (x₁, x₂, y):
/// V = span{∂/∂z̄}, θ = (dz, dy), so n = 1 and m = 2.
pub fn levi_flat_cr(resolution: usize) -> Result<FIStructure> {
    let ch = Chart::torus(3, resolution)?;
    FIStructure::new(
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.0)])?],
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.0)])?, VectorField::coordinate(&ch, 2)?],
    )
}

/// Same CR product with the first complement field rescaled by `1/f(y)`, so the
/// dual covector becomes `θ¹ = f(y)·dz` with `f = exp(i sin y)` basic.
pub fn levi_flat_cr_rescaled(resolution: usize) -> Result<FIStructure> {
    let ch = Chart::torus(3, resolution)?;
    let inv = ScalarField::from_fn(&ch, |p| C64::new(0.0, -p[2].sin()).exp());
    FIStructure::new(
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.0)])?],
        vec![constant(&ch, &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.0)])?.scale_by(&inv)?, VectorField::coordinate(&ch, 2)?],
    )
}

/// Named fixture lookup used by scenarios.
pub fn by_name(name: &str, resolution: usize) -> Result<FIStructure> {
    match name {
        "essentially_real_t2" => essentially_real_t2(resolution),
        "essentially_real_t3" => essentially_real_t3(resolution),
        "complex_t2" => complex_t2(resolution),
        "mizohata_free" => mizohata_free(resolution),
        "elliptic_normal_t3" => elliptic_normal_t3(resolution),
        "levi_flat_cr" => levi_flat_cr(resolution),
        "levi_flat_cr_rescaled" => levi_flat_cr_rescaled(resolution),
        other => Err(Error::OutOfRange(format!("unknown fixture `{other}`"))),
    }
}

pub const NAMES: [&str; 7] = [
    "essentially_real_t2",
    "essentially_real_t3",
    "complex_t2",
    "mizohata_free",
    "elliptic_normal_t3",
    "levi_flat_cr",
    "levi_flat_cr_rescaled",
];

/// Periodic analogue `Σ 2(1 − cos(x_a − c_a))` of the squared distance to `center`.
pub fn periodic_dist2(chart: &Arc<Chart>, center: &[f64]) -> ScalarField {
    ScalarField::from_real_fn(chart, |p| p.iter().zip(center).map(|(x, c)| 2.0 * (1.0 - (x - c).cos())).sum())
}

/// The weight `−log(ε² − s)` with s the periodic squared distance. It is smooth on the
/// whole chart once ε² exceeds the largest value 4·dim of s.
pub fn log_ball_weight(chart: &Arc<Chart>, center: &[f64], eps: f64) -> Result<ScalarField> {
    let limit = 4.0 * chart.dim() as f64;
    if eps * eps <= limit {
        return Err(Error::OutOfRange(format!("ε² = {} must exceed {limit}", eps * eps)));
    }
    Ok(periodic_dist2(chart, center).map(|s| C64::new(-(eps * eps - s.re).ln(), 0.0)))
}

/// Grid points within periodic distance `radius` of `center`.
pub fn ball_mask(chart: &Arc<Chart>, center: &[f64], radius: f64) -> Vec<bool> {
    (0..chart.len()).map(|p| crate::grid::periodic_distance(chart, &chart.point(p), center) < radius).collect()
}
