//! Periodic charts, grid-sampled complex fields and spectral differentiation.
//!
//! Grid points along an axis of period `L` and resolution `N` sit at
//! `x_k = L·k/N`. Flat indices are row-major with axis 0 slowest.
//! Derivatives use dense Fourier differentiation matrices over the
//! frequency set `-N/2 ..= N/2-1`, so the kernel of each axis derivative
//! is exactly the constants along that axis.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// One periodic coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub period: f64,
    pub resolution: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, period: f64, resolution: usize) -> Self {
        Axis { name: name.into(), period, resolution }
    }
}

/// A periodic box with uniform grids and cached differentiation matrices.
#[derive(Debug)]
pub struct Chart {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
    // Row-major N×N matrices, one per axis.
    diff: Vec<Vec<C64>>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.axes == other.axes
    }
}

impl Chart {
    pub fn new(axes: Vec<Axis>) -> Result<Arc<Chart>> {
        if axes.is_empty() {
            return Err(Error::InvalidChart("chart needs at least one axis".into()));
        }
        for a in &axes {
            if a.resolution < 4 || a.resolution % 2 != 0 {
                return Err(Error::InvalidChart(format!(
                    "axis {} resolution {} must be even and >= 4",
                    a.name, a.resolution
                )));
            }
            if !(a.period.is_finite() && a.period > 0.0) {
                return Err(Error::InvalidChart(format!(
                    "axis {} period {} must be positive",
                    a.name, a.period
                )));
            }
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len() - 1).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].resolution;
        }
        let len = strides[0] * axes[0].resolution;
        let diff = axes.iter().map(|a| fourier_diff_matrix(a.resolution, a.period)).collect();
        Ok(Arc::new(Chart { axes, strides, len, diff }))
    }

    /// Torus of the given dimension with period 2π and one resolution.
    pub fn torus(dim: usize, resolution: usize) -> Result<Arc<Chart>> {
        let axes = (0..dim).map(|d| Axis::new(format!("x{}", d + 1), 2.0 * PI, resolution)).collect();
        Chart::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.period / a.resolution as f64).product()
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|a| a.period).product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Per-axis integer indices of a flat index.
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for d in 0..self.dim() {
            out[d] = idx / self.strides[d];
            idx %= self.strides[d];
        }
        out
    }

    pub fn flatten(&self, ks: &[usize]) -> usize {
        ks.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// Coordinates of a grid point.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.unflatten(idx)
            .iter()
            .zip(&self.axes)
            .map(|(&k, a)| a.period * k as f64 / a.resolution as f64)
            .collect()
    }

    /// Dense differentiation matrix of an axis, row-major.
    pub fn diff_matrix(&self, axis: usize) -> &[C64] {
        &self.diff[axis]
    }

    /// Whether a grid point lies on a face `k = 0` or `k = N-1` of the box.
    pub fn on_boundary(&self, idx: usize) -> bool {
        self.unflatten(idx)
            .iter()
            .zip(&self.axes)
            .any(|(&k, a)| k == 0 || k + 1 == a.resolution)
    }

    /// Same axes with every resolution replaced.
    pub fn with_resolution(&self, resolution: usize) -> Result<Arc<Chart>> {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis::new(a.name.clone(), a.period, resolution))
            .collect();
        Chart::new(axes)
    }

    /// Signed frequency of each Fourier mode index along an axis.
    pub fn frequencies(resolution: usize) -> Vec<i64> {
        let n = resolution as i64;
        (0..n).map(|k| if k < n / 2 { k } else { k - n }).collect()
    }
}

/// D[i][j] = (1/N) Σ_k (2πik/L) e^{2πik(i−j)/N} over k = −N/2..N/2−1.
fn fourier_diff_matrix(n: usize, period: f64) -> Vec<C64> {
    let freqs = Chart::frequencies(n);
    let scale = 2.0 * PI / period;
    // The matrix is circulant; build the first column then shift.
    let col: Vec<C64> = (0..n)
        .map(|r| {
            let mut s = ZERO;
            for &k in &freqs {
                let phase = 2.0 * PI * (k as f64) * (r as f64) / n as f64;
                s += C64::new(0.0, scale * k as f64) * C64::from_polar(1.0, phase);
            }
            s / n as f64
        })
        .collect();
    let mut m = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = col[(i + n - j) % n];
        }
    }
    m
}

pub(crate) fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::ChartMismatch)
    }
}

/// Complex samples on every grid point of a chart.
#[derive(Debug, Clone)]
pub struct ScalarField {
    chart: Arc<Chart>,
    data: Vec<C64>,
}

impl ScalarField {
    pub fn from_vec(chart: &Arc<Chart>, data: Vec<C64>) -> Result<Self> {
        if data.len() != chart.len() {
            return Err(Error::Shape(format!("{} samples for {} grid points", data.len(), chart.len())));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Shape("non-finite sample".into()));
        }
        Ok(ScalarField { chart: chart.clone(), data })
    }

    pub fn constant(chart: &Arc<Chart>, value: C64) -> Self {
        ScalarField { chart: chart.clone(), data: vec![value; chart.len()] }
    }

    pub fn zeros(chart: &Arc<Chart>) -> Self {
        Self::constant(chart, ZERO)
    }

    pub fn from_fn(chart: &Arc<Chart>, f: impl Fn(&[f64]) -> C64) -> Self {
        let data = (0..chart.len()).map(|i| f(&chart.point(i))).collect();
        ScalarField { chart: chart.clone(), data }
    }

    pub fn from_real_fn(chart: &Arc<Chart>, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(chart, |x| C64::new(f(x), 0.0))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn at(&self, idx: usize) -> C64 {
        self.data[idx]
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        ScalarField { chart: self.chart.clone(), data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        same_chart(&self.chart, &other.chart)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { chart: self.chart.clone(), data })
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Validates a real-valued field (imaginary part below 1e-12).
    pub fn require_real(&self) -> Result<()> {
        let im = self.max_imag();
        if im < 1e-12 {
            Ok(())
        } else {
            Err(Error::NotReal(im))
        }
    }

    /// Plain Euclidean norm of the sample vector.
    pub fn sample_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn axpy(&mut self, a: C64, x: &ScalarField) {
        for (y, &v) in self.data.iter_mut().zip(&x.data) {
            *y += a * v;
        }
    }

    /// Samples at the points of a coarser chart whose resolutions divide this one's.
    pub fn restrict_to(&self, coarse: &Arc<Chart>) -> Result<Self> {
        if coarse.dim() != self.chart.dim() {
            return Err(Error::ChartMismatch);
        }
        let mut factors = Vec::new();
        for (c, f) in coarse.axes().iter().zip(self.chart.axes()) {
            if c.period != f.period || f.resolution % c.resolution != 0 {
                return Err(Error::ChartMismatch);
            }
            factors.push(f.resolution / c.resolution);
        }
        let data = (0..coarse.len())
            .map(|i| {
                let ks: Vec<usize> = coarse.unflatten(i).iter().zip(&factors).map(|(k, r)| k * r).collect();
                self.data[self.chart.flatten(&ks)]
            })
            .collect();
        Ok(ScalarField { chart: coarse.clone(), data })
    }
}

impl<'a> Add for &'a ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b).expect("chart mismatch in field addition")
    }
}

impl<'a> Sub for &'a ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b).expect("chart mismatch in field subtraction")
    }
}

impl<'a> Mul for &'a ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: Self) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b).expect("chart mismatch in field product")
    }
}

impl<'a> Neg for &'a ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|z| -z)
    }
}

/// Vector field: one coefficient per coordinate direction.
#[derive(Debug, Clone)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(comps: Vec<ScalarField>) -> Result<Self> {
        let chart = comps.first().ok_or_else(|| Error::Shape("empty vector field".into()))?.chart.clone();
        if comps.len() != chart.dim() {
            return Err(Error::Shape(format!("{} components on a {}-dimensional chart", comps.len(), chart.dim())));
        }
        for c in &comps {
            same_chart(&chart, &c.chart)?;
        }
        Ok(VectorField { chart, comps })
    }

    /// Constant-coefficient field Σ c_ν ∂_ν.
    pub fn constant(chart: &Arc<Chart>, coeffs: &[C64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| ScalarField::constant(chart, c)).collect())
    }

    /// Coordinate field ∂_axis.
    pub fn coordinate(chart: &Arc<Chart>, axis: usize) -> Result<Self> {
        if axis >= chart.dim() {
            return Err(Error::AxisOutOfRange { axis, dim: chart.dim() });
        }
        let mut c = vec![ZERO; chart.dim()];
        c[axis] = ONE;
        Self::constant(chart, &c)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn component(&self, nu: usize) -> &ScalarField {
        &self.comps[nu]
    }

    /// Complex conjugate field X̄.
    pub fn conj(&self) -> Self {
        VectorField { chart: self.chart.clone(), comps: self.comps.iter().map(|c| c.conj()).collect() }
    }

    pub fn scale_by(&self, f: &ScalarField) -> Result<Self> {
        let comps = self.comps.iter().map(|c| c.zip_map(f, |a, b| a * b)).collect::<Result<_>>()?;
        Ok(VectorField { chart: self.chart.clone(), comps })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_chart(&self.chart, &other.chart)?;
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect();
        Ok(VectorField { chart: self.chart.clone(), comps })
    }

    /// Component vector at a grid point.
    pub fn at(&self, idx: usize) -> Vec<C64> {
        self.comps.iter().map(|c| c.data[idx]).collect()
    }
}

/// ∂f/∂x_axis by Fourier differentiation.
pub fn partial_derivative(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    let chart = &f.chart;
    if axis >= chart.dim() {
        return Err(Error::AxisOutOfRange { axis, dim: chart.dim() });
    }
    let n = chart.axes[axis].resolution;
    let stride = chart.strides[axis];
    let dm = &chart.diff[axis];
    let mut out = vec![ZERO; chart.len()];
    let mut line = vec![ZERO; n];
    for base in 0..chart.len() {
        // Visit each line once, from its k = 0 point.
        if (base / stride) % n != 0 {
            continue;
        }
        for (k, slot) in line.iter_mut().enumerate() {
            *slot = f.data[base + k * stride];
        }
        for i in 0..n {
            let row = &dm[i * n..(i + 1) * n];
            let mut s = ZERO;
            for (d, v) in row.iter().zip(&line) {
                s += d * v;
            }
            out[base + i * stride] = s;
        }
    }
    Ok(ScalarField { chart: chart.clone(), data: out })
}

/// X(f) = Σ_ν X^ν ∂_ν f.
pub fn apply_vector(x: &VectorField, f: &ScalarField) -> Result<ScalarField> {
    same_chart(&x.chart, &f.chart)?;
    let mut out = ScalarField::zeros(&f.chart);
    for (nu, c) in x.comps.iter().enumerate() {
        let df = partial_derivative(f, nu)?;
        for ((o, &a), &b) in out.data.iter_mut().zip(&c.data).zip(&df.data) {
            *o += a * b;
        }
    }
    Ok(out)
}

/// [X,Y]^ν = X(Y^ν) − Y(X^ν).
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    same_chart(&x.chart, &y.chart)?;
    let comps = (0..x.chart.dim())
        .map(|nu| Ok(&apply_vector(x, &y.comps[nu])? - &apply_vector(y, &x.comps[nu])?))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new(comps)
}

/// Σ f·e^{−weight}·cell volume.
pub fn integrate(f: &ScalarField, weight: Option<&ScalarField>) -> Result<C64> {
    let dv = f.chart.cell_volume();
    let s: C64 = match weight {
        None => f.data.iter().sum(),
        Some(w) => {
            same_chart(&f.chart, &w.chart)?;
            w.require_real()?;
            f.data.iter().zip(&w.data).map(|(&a, b)| a * (-b.re).exp()).sum()
        }
    };
    Ok(s * dv)
}

/// Periodic distance between two points of the chart.
pub fn periodic_distance(chart: &Chart, x: &[f64], y: &[f64]) -> f64 {
    chart
        .axes
        .iter()
        .zip(x.iter().zip(y))
        .map(|(a, (&p, &q))| {
            let mut d = (p - q).rem_euclid(a.period);
            if d > a.period / 2.0 {
                d = a.period - d;
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// exp(1 − 1/(1 − r²)) with r the periodic distance over the radius; peak 1 at the center.
pub fn bump(chart: &Arc<Chart>, center: &[f64], radius: f64) -> Result<ScalarField> {
    if center.len() != chart.dim() {
        return Err(Error::Shape(format!("center has {} coordinates", center.len())));
    }
    let limit = chart.axes.iter().map(|a| a.period).fold(f64::INFINITY, f64::min) / 2.0;
    if !(radius > 0.0 && radius < limit) {
        return Err(Error::RadiusTooLarge { radius, limit });
    }
    Ok(ScalarField::from_real_fn(chart, |x| {
        let r = periodic_distance(chart, x, center) / radius;
        if r >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2() -> Arc<Chart> {
        Chart::torus(2, 16).unwrap()
    }

    #[test]
    fn chart_rejects_odd_or_small_resolution() {
        assert!(Chart::new(vec![Axis::new("x", 1.0, 5)]).is_err());
        assert!(Chart::new(vec![Axis::new("x", 1.0, 2)]).is_err());
        assert!(Chart::new(vec![Axis::new("x", -1.0, 8)]).is_err());
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let c = t2();
        let f = ScalarField::from_real_fn(&c, |x| x[0].sin());
        let df = partial_derivative(&f, 0).unwrap();
        let want = ScalarField::from_real_fn(&c, |x| x[0].cos());
        assert!((&df - &want).max_abs() < 1e-13);
        let dconst = partial_derivative(&ScalarField::constant(&c, ONE), 1).unwrap();
        assert!(dconst.max_abs() < 1e-13);
    }

    #[test]
    fn derivative_of_mode_three() {
        let c = t2();
        let f = ScalarField::from_fn(&c, |x| C64::from_polar(1.0, 3.0 * x[1]));
        let df = partial_derivative(&f, 1).unwrap();
        let want = f.scale(C64::new(0.0, 3.0));
        assert!((&df - &want).max_abs() < 1e-12);
    }

    #[test]
    fn derivative_agrees_with_refined_centered_differences() {
        // Second-order differences converge to the same limit at rate h².
        let f = |x: f64| C64::from_polar(1.0, 3.0 * x);
        let c = Chart::torus(1, 16).unwrap();
        let df = partial_derivative(&ScalarField::from_fn(&c, |x| f(x[0])), 0).unwrap();
        let mut prev = f64::INFINITY;
        for h in [1e-2, 5e-3, 2.5e-3] {
            let err = (0..c.len())
                .map(|i| {
                    let x = c.point(i)[0];
                    ((f(x + h) - f(x - h)) / (2.0 * h) - df.at(i)).norm()
                })
                .fold(0.0, f64::max);
            assert!(err < prev / 3.5);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn nyquist_mode_has_nonzero_derivative() {
        let c = Chart::torus(1, 8).unwrap();
        let f = ScalarField::from_fn(&c, |x| C64::from_polar(1.0, -4.0 * x[0]));
        let df = partial_derivative(&f, 0).unwrap();
        assert!((&df - &f.scale(C64::new(0.0, -4.0))).max_abs() < 1e-12);
    }

    #[test]
    fn axis_out_of_range() {
        let c = t2();
        assert_eq!(
            partial_derivative(&ScalarField::zeros(&c), 2).unwrap_err(),
            Error::AxisOutOfRange { axis: 2, dim: 2 }
        );
    }

    #[test]
    fn apply_vector_examples() {
        let c = t2();
        let d1 = VectorField::coordinate(&c, 0).unwrap();
        let f = ScalarField::from_real_fn(&c, |x| x[0].sin());
        let want = ScalarField::from_real_fn(&c, |x| x[0].cos());
        assert!((&apply_vector(&d1, &f).unwrap() - &want).max_abs() < 1e-13);

        let id2 = VectorField::constant(&c, &[ZERO, I]).unwrap();
        assert!(apply_vector(&id2, &ScalarField::constant(&c, ONE)).unwrap().max_abs() < 1e-13);

        let x = VectorField::new(vec![
            ScalarField::constant(&c, ONE),
            ScalarField::from_fn(&c, |p| I * (2.0 + p[0].sin())),
        ])
        .unwrap();
        let g = ScalarField::from_fn(&c, |p| C64::from_polar(1.0, p[1]));
        let want = ScalarField::from_fn(&c, |p| -(2.0 + p[0].sin()) * C64::from_polar(1.0, p[1]));
        assert!((&apply_vector(&x, &g).unwrap() - &want).max_abs() < 1e-12);
    }

    #[test]
    fn bracket_of_mizohata_field_with_conjugate() {
        let c = t2();
        let x = VectorField::new(vec![
            ScalarField::constant(&c, ONE),
            ScalarField::from_fn(&c, |p| I * (2.0 + p[0].sin())),
        ])
        .unwrap();
        let b = lie_bracket(&x, &x.conj()).unwrap();
        assert!(b.component(0).max_abs() < 1e-12);
        let want = ScalarField::from_fn(&c, |p| C64::new(0.0, -2.0 * p[0].cos()));
        assert!((b.component(1) - &want).max_abs() < 1e-12);

        let d1 = VectorField::coordinate(&c, 0).unwrap();
        let sd2 = VectorField::new(vec![ScalarField::zeros(&c), ScalarField::from_real_fn(&c, |p| p[0].sin())]).unwrap();
        let b = lie_bracket(&d1, &sd2).unwrap();
        let want = ScalarField::from_real_fn(&c, |p| p[0].cos());
        assert!((b.component(1) - &want).max_abs() < 1e-12);
    }

    #[test]
    fn integrate_examples() {
        let c = t2();
        let vol = (2.0 * PI).powi(2);
        let one = integrate(&ScalarField::constant(&c, ONE), None).unwrap();
        assert!((one.re - vol).abs() < 1e-12);
        let s = integrate(&ScalarField::from_real_fn(&c, |x| x[0].sin()), None).unwrap();
        assert!(s.norm() < 1e-12);
        let e = ScalarField::from_fn(&c, |x| C64::new(C64::from_polar(1.0, x[0]).norm_sqr(), 0.0));
        let v = integrate(&e, Some(&ScalarField::zeros(&c))).unwrap();
        assert!((v.re - vol).abs() < 1e-12);
        assert!(integrate(&e, Some(&ScalarField::constant(&c, I))).is_err());
    }

    #[test]
    fn bump_profile() {
        let c = t2();
        let center = [PI, PI];
        let b = bump(&c, &center, 2.0).unwrap();
        let idx = c.flatten(&[8, 8]);
        assert!((b.at(idx).re - 1.0).abs() < 1e-15);
        for i in 0..c.len() {
            if periodic_distance(&c, &c.point(i), &center) >= 2.0 {
                assert_eq!(b.at(i), ZERO);
            }
            assert!(b.at(i).re >= 0.0);
        }
        let mass = integrate(&b, None).unwrap().re;
        assert!(mass > 0.0 && mass < PI * 4.0);
        assert!(bump(&c, &center, PI).is_err());
    }

    #[test]
    fn restriction_matches_coarse_evaluation() {
        let fine = Chart::torus(2, 32).unwrap();
        let coarse = Chart::torus(2, 16).unwrap();
        let f = |x: &[f64]| C64::new(x[0].sin() * x[1], x[1].cos());
        let r = ScalarField::from_fn(&fine, f).restrict_to(&coarse).unwrap();
        let c = ScalarField::from_fn(&coarse, f);
        assert_eq!(r.data(), c.data());
    }
}
