//! Kinetic-energy metric on the two-link configuration torus and the
//! Levi-Civita machinery built from it.
//!
//! Everything here works in the (θ₁, θ₂) chart, with θ₁ and θ₂ the absolute
//! angles of the two links measured from the horizontal.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Finite-difference step for metric partials in [`christoffel_oracle`].
pub const ORACLE_STEP: f64 = 1e-5;

/// Finite-difference step for vector-field partials in
/// [`covariant_derivative_along`].
pub const FIELD_STEP: f64 = 1e-6;

/// Physical constants of the two links.
///
/// `j1`, `j2` are moments of inertia about each link's center of mass, which
/// sits at the link midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub j1: f64,
    pub j2: f64,
}

impl Default for RobotParams {
    /// Two identical uniform rods of 1 kg and 0.4 m.
    fn default() -> Self {
        let (m, l) = (1.0, 0.4);
        RobotParams {
            m1: m,
            m2: m,
            l1: l,
            l2: l,
            j1: m * l * l / 12.0,
            j2: m * l * l / 12.0,
        }
    }
}

impl RobotParams {
    pub fn new(m1: f64, m2: f64, l1: f64, l2: f64, j1: f64, j2: f64) -> Result<Self> {
        let params = RobotParams {
            m1,
            m2,
            l1,
            l2,
            j1,
            j2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
            ("j1", self.j1),
            ("j2", self.j2),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(name));
            }
        }
        Ok(())
    }
}

/// Reduce an angle to (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// A point of the configuration torus in the (θ₁, θ₂) chart.
///
/// Angles are kept unwrapped; [`ChartPoint::wrapped`] gives the reduced view.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChartPoint {
    pub theta1: f64,
    pub theta2: f64,
}

impl ChartPoint {
    pub const fn new(theta1: f64, theta2: f64) -> Self {
        ChartPoint { theta1, theta2 }
    }

    pub fn wrapped(&self) -> ChartPoint {
        ChartPoint::new(wrap_angle(self.theta1), wrap_angle(self.theta2))
    }

    /// θ₁ − θ₂, the only angle the metric depends on.
    pub fn relative_angle(&self) -> f64 {
        self.theta1 - self.theta2
    }

    /// Chart translation `q + s·v`.
    pub fn displaced(&self, v: TangentVector, s: f64) -> ChartPoint {
        ChartPoint::new(self.theta1 + s * v.v1, self.theta2 + s * v.v2)
    }

    pub fn coord(&self, i: usize) -> f64 {
        match i {
            0 => self.theta1,
            1 => self.theta2,
            _ => panic!("chart coordinate index {i} out of range"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite()
    }
}

/// Tangent vector in the coordinate basis (∂/∂θ₁, ∂/∂θ₂).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TangentVector {
    pub v1: f64,
    pub v2: f64,
}

impl TangentVector {
    pub const ZERO: TangentVector = TangentVector { v1: 0.0, v2: 0.0 };

    pub const fn new(v1: f64, v2: f64) -> Self {
        TangentVector { v1, v2 }
    }

    /// Unit coordinate vector ∂/∂θᵢ.
    pub fn basis(i: usize) -> Self {
        match i {
            0 => TangentVector::new(1.0, 0.0),
            1 => TangentVector::new(0.0, 1.0),
            _ => panic!("basis index {i} out of range"),
        }
    }

    pub fn component(&self, i: usize) -> f64 {
        match i {
            0 => self.v1,
            1 => self.v2,
            _ => panic!("component index {i} out of range"),
        }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.v1, self.v2]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        TangentVector::new(a[0], a[1])
    }

    /// Euclidean (chart) max-norm, for tolerance checks only.
    pub fn max_abs(&self) -> f64 {
        self.v1.abs().max(self.v2.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.v1.is_finite() && self.v2.is_finite()
    }
}

impl Add for TangentVector {
    type Output = TangentVector;
    fn add(self, rhs: TangentVector) -> TangentVector {
        TangentVector::new(self.v1 + rhs.v1, self.v2 + rhs.v2)
    }
}

impl Sub for TangentVector {
    type Output = TangentVector;
    fn sub(self, rhs: TangentVector) -> TangentVector {
        TangentVector::new(self.v1 - rhs.v1, self.v2 - rhs.v2)
    }
}

impl Neg for TangentVector {
    type Output = TangentVector;
    fn neg(self) -> TangentVector {
        TangentVector::new(-self.v1, -self.v2)
    }
}

impl Mul<TangentVector> for f64 {
    type Output = TangentVector;
    fn mul(self, rhs: TangentVector) -> TangentVector {
        TangentVector::new(self * rhs.v1, self * rhs.v2)
    }
}

impl Mul<f64> for TangentVector {
    type Output = TangentVector;
    fn mul(self, rhs: f64) -> TangentVector {
        rhs * self
    }
}

/// Covector in the coordinate cobasis (dθ₁, dθ₂).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Covector {
    pub p1: f64,
    pub p2: f64,
}

impl Covector {
    pub const ZERO: Covector = Covector { p1: 0.0, p2: 0.0 };

    pub const fn new(p1: f64, p2: f64) -> Self {
        Covector { p1, p2 }
    }

    /// ⟨p, v⟩.
    pub fn pair(&self, v: TangentVector) -> f64 {
        self.p1 * v.v1 + self.p2 * v.v2
    }
}

impl Mul<Covector> for f64 {
    type Output = Covector;
    fn mul(self, rhs: Covector) -> Covector {
        Covector::new(self * rhs.p1, self * rhs.p2)
    }
}

/// Symmetric 2×2 metric matrix G(q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl MetricTensor {
    pub const fn new(g11: f64, g12: f64, g22: f64) -> Self {
        MetricTensor { g11, g12, g22 }
    }

    pub fn identity_scaled(c: f64) -> Self {
        MetricTensor::new(c, 0.0, c)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.g11,
            (1, 1) => self.g22,
            (0, 1) | (1, 0) => self.g12,
            _ => panic!("metric index ({i}, {j}) out of range"),
        }
    }

    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g11 > 0.0 && self.det() > 0.0 && self.g11.is_finite() && self.g22.is_finite()
    }

    fn check(&self) -> Result<f64> {
        let det = self.det();
        if self.is_positive_definite() && det.is_finite() {
            Ok(det)
        } else {
            Err(Error::DegenerateMetric { det })
        }
    }

    /// Entries of G⁻¹ as a row-major matrix.
    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        let det = self.check()?;
        Ok([
            [self.g22 / det, -self.g12 / det],
            [-self.g12 / det, self.g11 / det],
        ])
    }

    /// g(a, b).
    pub fn inner(&self, a: TangentVector, b: TangentVector) -> f64 {
        self.g11 * a.v1 * b.v1 + self.g12 * (a.v1 * b.v2 + a.v2 * b.v1) + self.g22 * a.v2 * b.v2
    }

    pub fn norm_sq(&self, v: TangentVector) -> f64 {
        self.inner(v, v)
    }

    pub fn norm(&self, v: TangentVector) -> f64 {
        self.norm_sq(v).max(0.0).sqrt()
    }
}

/// Connection coefficients Γᵏᵢⱼ, stored as `gamma[k][i][j]` with 0-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][i][j]
    }

    /// Largest |Γᵏᵢⱼ − Γᵏⱼᵢ|.
    pub fn symmetry_defect(&self) -> f64 {
        (0..2)
            .map(|k| (self.gamma[k][0][1] - self.gamma[k][1][0]).abs())
            .fold(0.0, f64::max)
    }

    /// The quadratic term (Σᵢⱼ Γᵏᵢⱼ aⁱ bʲ)ₖ.
    pub fn contract(&self, a: TangentVector, b: TangentVector) -> TangentVector {
        let (a, b) = (a.to_array(), b.to_array());
        let mut out = [0.0; 2];
        for (k, slot) in out.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    *slot += self.gamma[k][i][j] * a[i] * b[j];
                }
            }
        }
        TangentVector::from_array(out)
    }

    /// Largest entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((self.gamma[k][i][j] - other.gamma[k][i][j]).abs());
                }
            }
        }
        worst
    }
}

/// Kinetic-energy metric of the two-link arm at `q`.
pub fn metric_at(params: &RobotParams, q: ChartPoint) -> MetricTensor {
    let RobotParams {
        m1,
        m2,
        l1,
        l2,
        j1,
        j2,
    } = *params;
    MetricTensor {
        g11: j1 + 0.25 * (m1 + 4.0 * m2) * l1 * l1,
        g12: 0.5 * m2 * l1 * l2 * q.relative_angle().cos(),
        g22: j2 + 0.25 * m2 * l2 * l2,
    }
}

/// The four nonzero Christoffel symbols of the two-link metric, in closed form.
///
/// Mixed symbols Γᵏ₁₂ = Γᵏ₂₁ are identically zero for this metric.
pub fn christoffel_closed_form(params: &RobotParams, q: ChartPoint) -> Result<Christoffel> {
    let det = metric_at(params, q).check()?;
    let RobotParams {
        m1,
        m2,
        l1,
        l2,
        j1,
        j2,
    } = *params;
    let delta = q.relative_angle();
    let (s1, s2) = (delta.sin(), (2.0 * delta).sin());
    let d8 = 8.0 * det;

    let mut gamma = [[[0.0; 2]; 2]; 2];
    gamma[0][0][0] = m2 * m2 * l1 * l1 * l2 * l2 * s2 / d8;
    gamma[0][1][1] = m2 * l1 * l2 * (4.0 * j2 + m2 * l2 * l2) * s1 / d8;
    gamma[1][0][0] = -m2 * l1 * l2 * (4.0 * j1 + (m1 + 4.0 * m2) * l1 * l1) * s1 / d8;
    gamma[1][1][1] = -m2 * m2 * l1 * l1 * l2 * l2 * s2 / d8;
    Ok(Christoffel { gamma })
}

/// Levi-Civita symbols of an arbitrary chart metric, from
/// Γᵏᵢⱼ = ½ gᵏˡ (∂ᵢ g_{jl} + ∂ⱼ g_{il} − ∂ₗ g_{ij}) with central differences of step `h`.
///
/// Independent of [`christoffel_closed_form`]; used to cross-check it.
pub fn christoffel_oracle<F>(metric_fn: F, q: ChartPoint, h: f64) -> Result<Christoffel>
where
    F: Fn(ChartPoint) -> MetricTensor,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    // dg[l][i][j] = ∂ₗ g_{ij}
    let mut dg = [[[0.0; 2]; 2]; 2];
    for (l, slot) in dg.iter_mut().enumerate() {
        let e = TangentVector::basis(l);
        let plus = metric_fn(q.displaced(e, h));
        let minus = metric_fn(q.displaced(e, -h));
        plus.check()?;
        minus.check()?;
        for i in 0..2 {
            for j in 0..2 {
                slot[i][j] = (plus.entry(i, j) - minus.entry(i, j)) / (2.0 * h);
            }
        }
    }
    let inv = metric_fn(q).inverse()?;

    let mut gamma = [[[0.0; 2]; 2]; 2];
    for (k, gk) in gamma.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                gk[i][j] = (0..2)
                    .map(|l| 0.5 * inv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]))
                    .sum();
            }
        }
    }
    Ok(Christoffel { gamma })
}

/// Raise a covector: v = G⁻¹ p, so that ⟨p, w⟩ = g(v, w) for every w.
pub fn sharp(metric: &MetricTensor, p: Covector) -> Result<TangentVector> {
    let inv = metric.inverse()?;
    Ok(TangentVector::new(
        inv[0][0] * p.p1 + inv[0][1] * p.p2,
        inv[1][0] * p.p1 + inv[1][1] * p.p2,
    ))
}

/// Lower a vector: p = G v.
pub fn flat(metric: &MetricTensor, v: TangentVector) -> Covector {
    Covector::new(
        metric.g11 * v.v1 + metric.g12 * v.v2,
        metric.g12 * v.v1 + metric.g22 * v.v2,
    )
}

/// Metric gradient of a function whose differential is `dv`.
pub fn gradient(metric: &MetricTensor, dv: Covector) -> Result<TangentVector> {
    sharp(metric, dv)
}

/// D X/Dt for a curve through `q` with velocity `v`, using the two-link
/// connection and field partials with step [`FIELD_STEP`].
pub fn covariant_derivative_along<F>(
    params: &RobotParams,
    field: F,
    q: ChartPoint,
    v: TangentVector,
) -> Result<TangentVector>
where
    F: Fn(ChartPoint) -> Result<TangentVector>,
{
    let christoffel = christoffel_closed_form(params, q)?;
    covariant_derivative_with(field, &christoffel, q, v, FIELD_STEP)
}

/// Component formula (D X/Dt)ₖ = Σᵢ ∂ᵢXₖ vᵢ + Σᵢⱼ vᵢ Γᵏᵢⱼ Xⱼ for a given
/// connection at `q`; partials by central differences of step `step`.
pub fn covariant_derivative_with<F>(
    field: F,
    christoffel: &Christoffel,
    q: ChartPoint,
    v: TangentVector,
    step: f64,
) -> Result<TangentVector>
where
    F: Fn(ChartPoint) -> Result<TangentVector>,
{
    let x = field(q)?;
    // Directional derivative Σᵢ ∂ᵢX vᵢ, one stencil per coordinate.
    let mut directional = TangentVector::ZERO;
    for i in 0..2 {
        let vi = v.component(i);
        if vi == 0.0 {
            continue;
        }
        let e = TangentVector::basis(i);
        let plus = field(q.displaced(e, step))?;
        let minus = field(q.displaced(e, -step))?;
        directional = directional + (vi / (2.0 * step)) * (plus - minus);
    }
    Ok(directional + christoffel.contract(v, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> RobotParams {
        RobotParams::default()
    }

    #[test]
    fn default_params_are_uniform_rods() {
        let params = p();
        assert_eq!(params.m1, 1.0);
        assert!((params.j1 - 0.4 * 0.4 / 12.0).abs() < 1e-15);
        params.validate().unwrap();
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(matches!(
            RobotParams::new(1.0, 0.0, 0.4, 0.4, 0.1, 0.1),
            Err(Error::InvalidParams("m2"))
        ));
        assert!(RobotParams::new(1.0, 1.0, f64::NAN, 0.4, 0.1, 0.1).is_err());
    }

    #[test]
    fn wrap_is_periodic() {
        for &t in &[-7.0, -PI, -1.0, 0.0, 0.5, PI, 3.5, 100.0] {
            let w = wrap_angle(t);
            assert!(w > -PI && w <= PI, "{t} -> {w}");
            assert!((wrap_angle(t + 2.0 * PI) - w).abs() < 1e-12);
        }
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn metric_cross_term_vanishes_at_right_angle() {
        let g = metric_at(&p(), ChartPoint::new(0.0, PI / 2.0));
        assert!(g.g12.abs() < 1e-16);
    }

    #[test]
    fn metric_cross_term_at_aligned_links() {
        for &t in &[-2.0, 0.0, 1.3] {
            let g = metric_at(&p(), ChartPoint::new(t, t));
            assert!((g.g12 - 0.08).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_vanishes_at_aligned_links() {
        let c = christoffel_closed_form(&p(), ChartPoint::new(0.7, 0.7)).unwrap();
        assert_eq!(c.max_abs_diff(&Christoffel::default()), 0.0);
    }

    #[test]
    fn closed_form_at_quarter_turn() {
        let c = christoffel_closed_form(&p(), ChartPoint::new(PI / 2.0, 0.0)).unwrap();
        assert!(c.get(0, 0, 0).abs() < 1e-15);
        assert!(c.get(1, 1, 1).abs() < 1e-15);
        assert!(c.get(0, 1, 1).abs() > 0.1);
    }

    #[test]
    fn degenerate_metric_is_an_error() {
        let g = MetricTensor::new(1.0, 1.0, 1.0);
        assert!(matches!(
            sharp(&g, Covector::new(1.0, 0.0)),
            Err(Error::DegenerateMetric { .. })
        ));
        let bad = christoffel_oracle(|_| g, ChartPoint::default(), 1e-5);
        assert!(bad.is_err());
    }

    #[test]
    fn oracle_on_constant_metric_is_zero() {
        let g = MetricTensor::new(2.0, 0.3, 1.0);
        let c = christoffel_oracle(|_| g, ChartPoint::new(0.3, -1.2), ORACLE_STEP).unwrap();
        assert!(c.max_abs_diff(&Christoffel::default()) < 1e-12);
    }

    #[test]
    fn oracle_matches_closed_form_at_fixed_point() {
        let params = p();
        let q = ChartPoint::new(0.3, -0.2);
        let oracle = christoffel_oracle(|x| metric_at(&params, x), q, ORACLE_STEP).unwrap();
        let closed = christoffel_closed_form(&params, q).unwrap();
        assert!(oracle.max_abs_diff(&closed) < 1e-8);
        assert!(oracle.symmetry_defect() < 1e-12);
    }

    #[test]
    fn oracle_at_antiparallel_links() {
        let params = p();
        let q = ChartPoint::new(0.4, 0.4 + PI);
        let oracle = christoffel_oracle(|x| metric_at(&params, x), q, ORACLE_STEP).unwrap();
        assert!(oracle.get(0, 0, 0).abs() < 1e-8);
        assert!(oracle.get(1, 1, 1).abs() < 1e-8);
    }

    #[test]
    fn sharp_of_zero_and_of_scaled_identity() {
        let g = metric_at(&p(), ChartPoint::new(0.1, 0.9));
        assert_eq!(sharp(&g, Covector::ZERO).unwrap(), TangentVector::ZERO);
        let c = MetricTensor::identity_scaled(4.0);
        let v = sharp(&c, Covector::new(2.0, -1.0)).unwrap();
        assert_eq!(v, TangentVector::new(0.5, -0.25));
        assert_eq!(gradient(&c, Covector::ZERO).unwrap(), TangentVector::ZERO);
    }

    #[test]
    fn covariant_derivative_trivial_cases() {
        let params = p();
        let q = ChartPoint::new(0.2, 1.1);
        let field = |x: ChartPoint| Ok(TangentVector::new(x.theta1.sin(), x.theta2 * x.theta1));
        let zero = covariant_derivative_along(&params, field, q, TangentVector::ZERO).unwrap();
        assert_eq!(zero, TangentVector::ZERO);

        let flat_connection = Christoffel::default();
        let constant = |_: ChartPoint| Ok(TangentVector::new(1.5, -0.5));
        let d = covariant_derivative_with(
            constant,
            &flat_connection,
            q,
            TangentVector::new(0.3, 2.0),
            FIELD_STEP,
        )
        .unwrap();
        assert_eq!(d, TangentVector::ZERO);
    }
}
