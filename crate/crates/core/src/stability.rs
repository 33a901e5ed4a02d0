//! Linearized closed loop about exact path following, Routh-Hurwitz
//! classification, stability boundaries in the `(k1, k2)` plane and
//! double-pole gain synthesis.

use num_complex::Complex;
use rayon::prelude::*;

use crate::controller::ControlGains;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vehicle_model::VehicleParams;

/// Default absolute tolerance on characteristic coefficients.
pub const COEFF_TOLERANCE: f64 = 1e-12;

/// Row-major 2x2 matrix.
pub type Mat2<T> = [[T; 2]; 2];

/// Monic characteristic polynomial `lambda^2 + c1 lambda + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoly<T = f64> {
    pub c1: T,
    pub c0: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Unstable,
    Stable,
    Marginal,
}

impl Stability {
    /// CSV class code: 0 unstable, 1 stable, 2 marginal.
    pub fn code(self) -> u8 {
        match self {
            Stability::Unstable => 0,
            Stability::Stable => 1,
            Stability::Marginal => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Stability::Unstable),
            1 => Some(Stability::Stable),
            2 => Some(Stability::Marginal),
            _ => None,
        }
    }
}

/// State, input and gain matrices of the linearized error dynamics with
/// state `(e, theta)` and input `(delta_f, delta_r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopModel<T = f64> {
    pub a: Mat2<T>,
    pub b: Mat2<T>,
    pub k: Mat2<T>,
}

impl<T: Real> ClosedLoopModel<T> {
    pub fn new(gains: &ControlGains<T>, speed: T, params: &VehicleParams<T>, kappa: T) -> Self {
        let z = T::zero();
        let v = speed;
        let vf = speed / params.wheelbase();
        Self {
            a: [[z, v], [-v * kappa * kappa, z]],
            b: [[z, v], [vf, -vf]],
            k: [[-gains.k1, -gains.k2], [-gains.k3(), -gains.k4()]],
        }
    }

    /// `A + B K`.
    pub fn matrix(&self) -> Mat2<T> {
        let (a, b, k) = (&self.a, &self.b, &self.k);
        let mut m = *a;
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = *entry + b[i][0] * k[0][j] + b[i][1] * k[1][j];
            }
        }
        m
    }
}

pub fn char_coeffs<T: Real>(
    gains: &ControlGains<T>,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> CharPoly<T> {
    let f = params.wheelbase();
    let one = T::one();
    let a = gains.a;
    CharPoly {
        c1: speed / f * (f * a * gains.k1 + (one - a) * gains.k2),
        c0: speed * speed / f * ((one - a) * gains.k1 + (one - a * gains.k2) * f * kappa * kappa),
    }
}

pub fn closed_loop_matrix<T: Real>(
    gains: &ControlGains<T>,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> Mat2<T> {
    ClosedLoopModel::new(gains, speed, params, kappa).matrix()
}

/// Routh-Hurwitz classification of the closed loop.
pub fn classify<T: Real>(poly: &CharPoly<T>, tol: T) -> Stability {
    let (c1, c0) = (poly.c1, poly.c0);
    if c1 > tol && c0 > tol {
        Stability::Stable
    } else if c1 < -tol || c0 < -tol || c1.is_nan() || c0.is_nan() {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

pub fn is_stable<T: Real>(
    gains: &ControlGains<T>,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
    tol: T,
) -> Stability {
    classify(&char_coeffs(gains, speed, params, kappa), tol)
}

/// Eigenvalues of a 2x2 matrix, ordered by real then imaginary part.
///
/// Roots closer than the resolution set by rounding of the entries (squared
/// separation below `16 eps |M|_F^2`) are returned as an exact double root.
pub fn eigenvalues<T: Real>(m: &Mat2<T>) -> [Complex<T>; 2] {
    let two = T::lit(2.0);
    let mean = (m[0][0] + m[1][1]) / two;
    let half_diff = (m[0][0] - m[1][1]) / two;
    let cross = m[0][1] * m[1][0];
    // (lambda - mean)^2 = disc
    let disc = half_diff * half_diff + cross;
    let scale = m.iter().flatten().map(|&v| v * v).sum::<T>();
    let zero = T::zero();

    let mut roots = if disc.abs() <= T::lit(16.0) * T::epsilon() * scale {
        [Complex::new(mean, zero), Complex::new(mean, zero)]
    } else if disc > zero {
        let r = disc.sqrt();
        let big = if mean >= zero { mean + r } else { mean - r };
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [Complex::new(big, zero), Complex::new(det / big, zero)]
    } else {
        let im = (-disc).sqrt();
        [Complex::new(mean, -im), Complex::new(mean, im)]
    };
    if (roots[1].re, roots[1].im) < (roots[0].re, roots[0].im) {
        roots.swap(0, 1);
    }
    roots
}

/// Stability read off the eigenvalue real parts.
pub fn classify_eigenvalues<T: Real>(roots: &[Complex<T>; 2]) -> Stability {
    if roots.iter().all(|r| r.re < T::zero()) {
        Stability::Stable
    } else if roots.iter().any(|r| r.re > T::zero()) {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

/// Which characteristic coefficient vanishes along a boundary line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `c0 = 0`: a real root crosses the origin.
    ConstantTerm,
    /// `c1 = 0`: a complex pair crosses the imaginary axis.
    LinearTerm,
}

impl BoundaryKind {
    pub fn id(self) -> &'static str {
        match self {
            BoundaryKind::ConstantTerm => "c0",
            BoundaryKind::LinearTerm => "c1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve<T = f64> {
    pub kind: BoundaryKind,
    /// `(k1, k2)` vertices.
    pub points: Vec<(T, T)>,
}

/// Sampling of one gain axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange<T = f64> {
    pub min: T,
    pub max: T,
    pub count: usize,
}

impl<T: Real> GridRange<T> {
    pub fn new(min: T, max: T, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points per axis, got {count}"
            )));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidParameter(format!(
                "invalid grid range [{min}, {max}]"
            )));
        }
        Ok(Self { min, max, count })
    }

    pub fn value(&self, i: usize) -> T {
        if i + 1 == self.count {
            return self.max;
        }
        let frac = T::lit(i as f64) / T::lit((self.count - 1) as f64);
        self.min + (self.max - self.min) * frac
    }

    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

/// Lines in the `(k1, k2)` plane where a characteristic coefficient
/// vanishes, spanning the given ranges.
///
/// With `a = 1` and zero curvature the constant term vanishes identically,
/// leaving `k1 = 0` as the only line.
pub fn boundary_curves<T: Real>(
    a: T,
    params: &VehicleParams<T>,
    kappa: T,
    k1_range: (T, T),
    k2_range: (T, T),
) -> Vec<BoundaryCurve<T>> {
    let f = params.wheelbase();
    let one = T::one();
    let fk2 = f * kappa * kappa;
    let mut curves = Vec::with_capacity(2);
    if a != one {
        let k1_on = |k2: T| (a * k2 - one) * fk2 / (one - a);
        curves.push(BoundaryCurve {
            kind: BoundaryKind::ConstantTerm,
            points: vec![
                (k1_on(k2_range.0), k2_range.0),
                (k1_on(k2_range.1), k2_range.1),
            ],
        });
        let k2_on = |k1: T| -f * a * k1 / (one - a);
        curves.push(BoundaryCurve {
            kind: BoundaryKind::LinearTerm,
            points: vec![
                (k1_range.0, k2_on(k1_range.0)),
                (k1_range.1, k2_on(k1_range.1)),
            ],
        });
    } else {
        if kappa != T::zero() {
            curves.push(BoundaryCurve {
                kind: BoundaryKind::ConstantTerm,
                points: vec![(k1_range.0, one), (k1_range.1, one)],
            });
        }
        curves.push(BoundaryCurve {
            kind: BoundaryKind::LinearTerm,
            points: vec![(T::zero(), k2_range.0), (T::zero(), k2_range.1)],
        });
    }
    curves
}

/// Classification of every `(k1, k2)` cell of a gain grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid<T = f64> {
    pub k1: GridRange<T>,
    pub k2: GridRange<T>,
    /// Outer index over `k1`, inner over `k2`.
    pub cells: Vec<Stability>,
}

impl<T: Real> StabilityGrid<T> {
    pub fn get(&self, i1: usize, i2: usize) -> Stability {
        self.cells[i1 * self.k2.count + i2]
    }

    /// `(k1, k2, class)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (T, T, Stability)> + '_ {
        self.cells.iter().enumerate().map(move |(idx, &c)| {
            (
                self.k1.value(idx / self.k2.count),
                self.k2.value(idx % self.k2.count),
                c,
            )
        })
    }
}

pub fn sample_region<T: Real>(
    k1: GridRange<T>,
    k2: GridRange<T>,
    a: T,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> StabilityGrid<T> {
    let tol = T::lit(COEFF_TOLERANCE);
    let cells = (0..k1.count)
        .into_par_iter()
        .flat_map_iter(|i| {
            let k1v = k1.value(i);
            (0..k2.count).map(move |j| {
                is_stable(
                    &ControlGains::new(k1v, k2.value(j), a),
                    speed,
                    params,
                    kappa,
                    tol,
                )
            })
        })
        .collect();
    StabilityGrid { k1, k2, cells }
}

/// Desired closed-loop double root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolePlacementSpec<T = f64> {
    lambda0: T,
}

impl<T: Real> PolePlacementSpec<T> {
    /// `lambda0` must be non-positive; zero is accepted for boundary studies.
    pub fn new(lambda0: T) -> Result<Self> {
        if !lambda0.is_finite() || lambda0 > T::zero() {
            return Err(Error::InvalidParameter(format!(
                "double root must be finite and non-positive, got {lambda0}"
            )));
        }
        Ok(Self { lambda0 })
    }

    pub fn lambda0(&self) -> T {
        self.lambda0
    }

    pub fn target(&self) -> CharPoly<T> {
        CharPoly {
            c1: -T::lit(2.0) * self.lambda0,
            c0: self.lambda0 * self.lambda0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementRoute {
    /// Closed-form branch formulas.
    ClosedForm,
    /// Direct solution of the coefficient-matching linear system, used when
    /// the closed form misses the target.
    LinearSolve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement<T = f64> {
    pub gains: ControlGains<T>,
    pub route: PlacementRoute,
    /// Coefficient mismatch of the closed-form gains.
    pub closed_form_residual: T,
    /// Coefficient mismatch of the returned gains.
    pub residual: T,
}

fn placement_residual<T: Real>(
    gains: &ControlGains<T>,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
    target: &CharPoly<T>,
) -> T {
    let p = char_coeffs(gains, speed, params, kappa);
    let one = T::one();
    (p.c1 - target.c1).abs() / (one + target.c1.abs())
        + (p.c0 - target.c0).abs() / (one + target.c0.abs())
}

fn check_placement_inputs<T: Real>(
    a: T,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> Result<()> {
    crate::vehicle_model::check_speed(speed)?;
    if !(a.is_finite() && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite coupling {a} or curvature {kappa}"
        )));
    }
    let f = params.wheelbase();
    let q = a * a * f * f * kappa * kappa + (T::one() - a) * (T::one() - a);
    if a == T::one() && kappa == T::zero() {
        return Err(Error::Unplaceable(
            "pole at origin is structural: with a = 1 on a straight path the constant coefficient vanishes for all gains".into(),
        ));
    }
    if q == T::zero() {
        return Err(Error::Degenerate(format!(
            "coefficient matching system is singular (a = {a}, kappa = {kappa})"
        )));
    }
    Ok(())
}

/// Gains from the closed-form branch formulas.
fn closed_form_gains<T: Real>(
    lambda0: T,
    a: T,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> ControlGains<T> {
    let f = params.wheelbase();
    let v = speed;
    let one = T::one();
    let two = T::lit(2.0);
    let l = lambda0;
    if kappa == T::zero() {
        let r = one - a;
        let k1 = f * l * l / (v * v * r);
        let k2 = -l * f / (v * r) * (two + l * a * f / (v * r));
        ControlGains::new(k1, k2, a)
    } else if a == T::zero() {
        let k1 = f * (l * l / (v * v) - kappa * kappa);
        let k2 = -two * l * f / v;
        ControlGains::new(k1, k2, a)
    } else {
        let num = v * v * a * f * kappa * kappa - two * v * l * (one - a) - a * f * l * l;
        let den = v * v * (a * a * f * f * kappa * kappa + (one - a) * (one - a));
        let k2 = f * num / den;
        let k1 = -two * l / (v * a) + num / den * (one - one / a);
        ControlGains::new(k1, k2, a)
    }
}

/// Gains placing a double root by solving the two coefficient-matching
/// equations (linear in `k1`, `k2`) with Cramer's rule.
pub fn solve_double_pole<T: Real>(
    spec: &PolePlacementSpec<T>,
    a: T,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> Result<ControlGains<T>> {
    check_placement_inputs(a, speed, params, kappa)?;
    let f = params.wheelbase();
    let v = speed;
    let one = T::one();
    let target = spec.target();
    // c1: (a v) k1 + (v (1-a) / f) k2 = -2 lambda0
    // c0: (v^2 (1-a) / f) k1 - (v^2 a kappa^2) k2 = lambda0^2 - v^2 kappa^2
    let m11 = a * v;
    let m12 = v * (one - a) / f;
    let m21 = v * v * (one - a) / f;
    let m22 = -v * v * a * kappa * kappa;
    let r1 = target.c1;
    let r2 = target.c0 - v * v * kappa * kappa;
    let det = m11 * m22 - m12 * m21;
    if det == T::zero() {
        return Err(Error::Degenerate(format!(
            "coefficient matching system is singular (a = {a}, kappa = {kappa})"
        )));
    }
    Ok(ControlGains::new(
        (r1 * m22 - m12 * r2) / det,
        (m11 * r2 - m21 * r1) / det,
        a,
    ))
}

/// Gains that give the closed loop a double root at `lambda0`, together
/// with the route used and the coefficient residual.
pub fn place_double_pole_detailed<T: Real>(
    spec: &PolePlacementSpec<T>,
    a: T,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> Result<Placement<T>> {
    check_placement_inputs(a, speed, params, kappa)?;
    let target = spec.target();
    let tol = T::lit(1e-10).max(T::lit(1e3) * T::epsilon());
    let gains = closed_form_gains(spec.lambda0(), a, speed, params, kappa);
    let closed_form_residual = placement_residual(&gains, speed, params, kappa, &target);
    if closed_form_residual.is_finite() && closed_form_residual <= tol {
        return Ok(Placement {
            gains,
            route: PlacementRoute::ClosedForm,
            closed_form_residual,
            residual: closed_form_residual,
        });
    }
    let gains = solve_double_pole(spec, a, speed, params, kappa)?;
    Ok(Placement {
        gains,
        route: PlacementRoute::LinearSolve,
        closed_form_residual,
        residual: placement_residual(&gains, speed, params, kappa, &target),
    })
}

pub fn place_double_pole<T: Real>(
    spec: &PolePlacementSpec<T>,
    a: T,
    speed: T,
    params: &VehicleParams<T>,
    kappa: T,
) -> Result<ControlGains<T>> {
    place_double_pole_detailed(spec, a, speed, params, kappa).map(|p| p.gains)
}

/// Gains for pure crab steering (`a = 1`) on a straight path.
///
/// The constant coefficient vanishes identically there, so only the
/// lateral-error root can be placed; `k1 = -2 lambda0 / V` puts it at
/// `2 lambda0`, which is the sum of the requested double root. `k2` has no
/// effect and is set to zero.
pub fn crab_gains<T: Real>(spec: &PolePlacementSpec<T>, speed: T) -> Result<ControlGains<T>> {
    crate::vehicle_model::check_speed(speed)?;
    Ok(ControlGains::new(
        -T::lit(2.0) * spec.lambda0() / speed,
        T::zero(),
        T::one(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::feedforward;
    use crate::path::{path_frame_derivatives, PathFrameState};
    use crate::vehicle_model::SteeringInput;
    use approx::assert_abs_diff_eq;

    fn params() -> VehicleParams {
        VehicleParams::new(2.7, 1.35).unwrap()
    }

    fn place(l: f64, a: f64, v: f64, k: f64) -> Result<ControlGains> {
        place_double_pole(&PolePlacementSpec::new(l).unwrap(), a, v, &params(), k)
    }

    #[test]
    fn crab_gains_match_linear_coefficient() {
        let p = params();
        let g = crab_gains(&PolePlacementSpec::new(-1.5).unwrap(), 20.0).unwrap();
        let c = char_coeffs(&g, 20.0, &p, 0.0);
        assert_abs_diff_eq!(c.c1, 3.0, epsilon = 1e-12);
        assert_eq!(c.c0, 0.0);
    }

    #[test]
    fn char_coeff_values() {
        let p = params();
        let c = char_coeffs(&ControlGains::new(0.1, 0.2, 0.0), 5.0, &p, 0.0);
        assert_abs_diff_eq!(c.c1, 0.370370, epsilon = 1e-6);
        assert_abs_diff_eq!(c.c0, 0.925926, epsilon = 1e-6);
        for &(k1, k2) in &[(0.3, -1.0), (-2.0, 4.0)] {
            assert_eq!(
                char_coeffs(&ControlGains::new(k1, k2, 1.0), 20.0, &p, 0.0).c0,
                0.0
            );
        }
        let g = place(-1.0, 0.5, 20.0, 0.01).unwrap();
        let c = char_coeffs(&g, 20.0, &p, 0.01);
        assert_abs_diff_eq!(c.c1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.c0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_loop_matrix_examples() {
        let p = params();
        let m = closed_loop_matrix(&ControlGains::new(0.3, 0.6, 0.0), 5.0, &p, 0.0);
        assert_eq!(m[0], [0.0, 5.0]);
        assert_abs_diff_eq!(m[1][0], -5.0 * 0.3 / 2.7, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1][1], -5.0 * 0.6 / 2.7, epsilon = 1e-15);
        let z = closed_loop_matrix(&ControlGains::new(0.0, 0.0, 0.7), 5.0, &p, 0.0);
        assert_eq!(z, [[0.0, 5.0], [0.0, 0.0]]);
    }

    #[test]
    fn trace_and_determinant_match_coefficients() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let p: VehicleParams = VehicleParams::new(rng.gen_range(1.0..5.0), 0.5).unwrap();
            let v: f64 = rng.gen_range(0.5..40.0);
            let g = ControlGains::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let k = rng.gen_range(-0.3..0.3);
            let m = closed_loop_matrix(&g, v, &p, k);
            let c = char_coeffs(&g, v, &p, k);
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            let scale = 1.0 + v * v * 10.0;
            assert!((tr + c.c1).abs() < 1e-12 * scale);
            assert!((det - c.c0).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn stability_examples() {
        let p = params();
        let tol = COEFF_TOLERANCE;
        assert_eq!(
            is_stable(&ControlGains::new(0.00675, 0.27, 0.0), 20.0, &p, 0.0, tol),
            Stability::Stable
        );
        assert_eq!(
            is_stable(&ControlGains::new(-0.01, 0.27, 0.0), 20.0, &p, 0.0, tol),
            Stability::Unstable
        );
        assert_eq!(
            is_stable(&ControlGains::new(0.0, 0.3, 0.0), 20.0, &p, 0.0, tol),
            Stability::Marginal
        );
    }

    #[test]
    fn eigenvalue_examples() {
        let r = eigenvalues(&[[0.0, 1.0], [-1.0, 0.0]]);
        assert_eq!(r[0], Complex::new(0.0, -1.0));
        assert_eq!(r[1], Complex::new(0.0, 1.0));
        let r = eigenvalues(&[[0.0, 5.0], [0.0, 0.0]]);
        assert_eq!(r, [Complex::new(0.0, 0.0); 2]);
        let r = eigenvalues(&[[-1.0, 0.0], [0.0, -3.0]]);
        assert_eq!(r[0].re, -3.0);
        assert_eq!(r[1].re, -1.0);
        // tiny root next to a large one
        let r = eigenvalues(&[[0.0, 1.0], [-1e-14, -1.0]]);
        assert!(r[1].re < 0.0);
        assert_abs_diff_eq!(r[1].re, -1e-14, epsilon = 1e-27);
        let g = place(-2.0, 0.5, 5.0, 0.1).unwrap();
        for z in eigenvalues(&closed_loop_matrix(&g, 5.0, &params(), 0.1)) {
            assert!((z - Complex::new(-2.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn placement_examples() {
        let g = place(-1.0, 0.0, 20.0, 0.0).unwrap();
        assert_abs_diff_eq!(g.k1, 0.00675, epsilon = 1e-15);
        assert_abs_diff_eq!(g.k2, 0.27, epsilon = 1e-15);
        let g = place(-1.0, 0.0, 20.0, 0.01).unwrap();
        assert_abs_diff_eq!(g.k1, 0.00648, epsilon = 1e-15);
        assert_abs_diff_eq!(g.k2, 0.27, epsilon = 1e-15);
        let g = place(-1.0, 0.5, 20.0, 0.0).unwrap();
        assert_abs_diff_eq!(g.k1, 0.0135, epsilon = 1e-15);
        assert_abs_diff_eq!(g.k2, 0.50355, epsilon = 1e-14);
    }

    #[test]
    fn placement_errors() {
        assert!(matches!(
            place(-1.0, 1.0, 20.0, 0.0),
            Err(Error::Unplaceable(_))
        ));
        assert!(place(-1.0, 1.0, 20.0, 0.01).is_ok());
        assert!(PolePlacementSpec::new(0.5).is_err());
        assert!(PolePlacementSpec::new(f64::NAN).is_err());
        assert!(PolePlacementSpec::new(0.0).is_ok());
        assert!(place(-1.0, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_and_linear_routes_agree() {
        let p = params();
        for &a in &[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5] {
            for &v in &[5.0, 20.0] {
                for &k in &[0.0, 0.01, 0.1, -0.05] {
                    for &l in &[-1.0, -2.0, -3.0] {
                        if a == 1.0 && k == 0.0 {
                            continue;
                        }
                        let spec = PolePlacementSpec::new(l).unwrap();
                        let d = place_double_pole_detailed(&spec, a, v, &p, k).unwrap();
                        assert_eq!(
                            d.route,
                            PlacementRoute::ClosedForm,
                            "a={a} v={v} k={k} l={l}"
                        );
                        let s = solve_double_pole(&spec, a, v, &p, k).unwrap();
                        let scale = 1.0 + d.gains.k1.abs() + d.gains.k2.abs();
                        assert!((d.gains.k1 - s.k1).abs() < 1e-12 * scale);
                        assert!((d.gains.k2 - s.k2).abs() < 1e-12 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn tiny_coupling_falls_back_to_linear_solve() {
        // 2 lambda0 / (V a) cancels catastrophically as a -> 0
        let spec = PolePlacementSpec::new(-1.0).unwrap();
        let d = place_double_pole_detailed(&spec, 1e-13, 5.0, &params(), 0.1).unwrap();
        assert_eq!(d.route, PlacementRoute::LinearSolve);
        assert!(d.closed_form_residual > 1e-10);
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn boundary_examples() {
        let p = params();
        let c = boundary_curves(0.0, &p, 0.0, (-1.0, 1.0), (-1.0, 1.0));
        assert_eq!(c.len(), 2);
        assert!(c[0].points.iter().all(|&(k1, _)| k1 == 0.0));
        assert!(c[1].points.iter().all(|&(_, k2)| k2 == 0.0));

        let c = boundary_curves(0.0, &p, 0.1, (-1.0, 1.0), (-1.0, 1.0));
        assert!(c[0]
            .points
            .iter()
            .all(|&(k1, _)| (k1 + 0.027).abs() < 1e-15));

        let c = boundary_curves(1.0, &p, 0.0, (-1.0, 1.0), (-2.0, 2.0));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].points, vec![(0.0, -2.0), (0.0, 2.0)]);

        let c = boundary_curves(1.0, &p, 0.1, (-1.0, 1.0), (-2.0, 2.0));
        assert_eq!(c.len(), 2);
        assert!(c
            .iter()
            .any(|b| b.kind == BoundaryKind::ConstantTerm
                && b.points.iter().all(|&(_, k2)| k2 == 1.0)));
    }

    #[test]
    fn boundary_points_are_marginal() {
        let p = params();
        for &a in &[-1.5, -0.5, 0.0, 0.5, 1.0, 1.5] {
            for &k in &[0.0, 0.01, 0.1] {
                for curve in boundary_curves(a, &p, k, (-1.0, 1.0), (-1.0, 1.0)) {
                    let (p0, p1) = (curve.points[0], curve.points[1]);
                    for i in 0..=20 {
                        let t = i as f64 / 20.0;
                        let g = ControlGains::new(
                            p0.0 + t * (p1.0 - p0.0),
                            p0.1 + t * (p1.1 - p0.1),
                            a,
                        );
                        // evaluate the vanishing coefficient along the line parameter
                        let g = match (curve.kind, a == 1.0) {
                            (BoundaryKind::ConstantTerm, false) => ControlGains::new(
                                (a * g.k2 - 1.0) * 2.7 * k * k / (1.0 - a),
                                g.k2,
                                a,
                            ),
                            (BoundaryKind::LinearTerm, false) => {
                                ControlGains::new(g.k1, -2.7 * a * g.k1 / (1.0 - a), a)
                            }
                            _ => g,
                        };
                        for &v in &[5.0, 20.0] {
                            let c = char_coeffs(&g, v, &p, k);
                            let vanishing = match curve.kind {
                                BoundaryKind::ConstantTerm => c.c0,
                                BoundaryKind::LinearTerm => c.c1,
                            };
                            assert!(vanishing.abs() <= COEFF_TOLERANCE, "a={a} k={k} {g:?}");
                            assert_ne!(is_stable(&g, v, &p, k, COEFF_TOLERANCE), Stability::Stable);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn first_quadrant_for_front_steering() {
        let p = params();
        let grid = sample_region(
            GridRange::new(-0.1, 1.0, 45).unwrap(),
            GridRange::new(-0.1, 1.0, 34).unwrap(),
            0.0,
            5.0,
            &p,
            0.0,
        );
        for (k1, k2, c) in grid.iter() {
            assert_eq!(c == Stability::Stable, k1 > 0.0 && k2 > 0.0, "({k1}, {k2})");
        }
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let r = GridRange::new(-1.0, 1.0, 401).unwrap();
        assert_eq!(r.value(0), -1.0);
        assert_eq!(r.value(200), 0.0);
        assert_eq!(r.value(400), 1.0);
        assert!(GridRange::new(0.0, 1.0, 1).is_err());
        assert!(GridRange::new(1.0, 0.0, 3).is_err());
    }

    /// Central-difference Jacobian of the path-frame error dynamics about
    /// exact tracking, inputs being the feedback parts of the steering.
    fn numeric_linearization(v: f64, kappa: f64) -> (Mat2<f64>, Mat2<f64>) {
        let p = params();
        let ff = feedforward(kappa, &p);
        let rhs = |e: f64, th: f64, uf: f64, ur: f64| {
            let d = path_frame_derivatives(
                &PathFrameState::new(0.0, e, th),
                kappa,
                SteeringInput::new(ff.delta_f + uf, ff.delta_r + ur),
                &p,
                v,
            )
            .unwrap();
            [d.de, d.dtheta]
        };
        let h = 1e-6;
        let col = |plus: [f64; 2], minus: [f64; 2]| {
            [
                (plus[0] - minus[0]) / (2.0 * h),
                (plus[1] - minus[1]) / (2.0 * h),
            ]
        };
        let ce = col(rhs(h, 0.0, 0.0, 0.0), rhs(-h, 0.0, 0.0, 0.0));
        let ct = col(rhs(0.0, h, 0.0, 0.0), rhs(0.0, -h, 0.0, 0.0));
        let cf = col(rhs(0.0, 0.0, h, 0.0), rhs(0.0, 0.0, -h, 0.0));
        let cr = col(rhs(0.0, 0.0, 0.0, h), rhs(0.0, 0.0, 0.0, -h));
        (
            [[ce[0], ct[0]], [ce[1], ct[1]]],
            [[cf[0], cr[0]], [cf[1], cr[1]]],
        )
    }

    #[test]
    fn linearization_matches_on_straight_path() {
        let (a_num, b_num) = numeric_linearization(5.0, 0.0);
        let m = ClosedLoopModel::new(&ControlGains::new(0.0, 0.0, 0.0), 5.0, &params(), 0.0);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(a_num[i][j], m.a[i][j], epsilon = 1e-7);
                assert_abs_diff_eq!(b_num[i][j], m.b[i][j], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn linearization_on_curved_path() {
        // A and the rear column of B match; the front input gain carries the
        // extra factor 1 / cos^2(atan(kappa f)) = 1 + (kappa f)^2
        for &(v, k) in &[(5.0, 0.1), (20.0, 0.01)] {
            let (a_num, b_num) = numeric_linearization(v, k);
            let m = ClosedLoopModel::new(&ControlGains::new(0.0, 0.0, 0.0), v, &params(), k);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(a_num[i][j], m.a[i][j], epsilon = 1e-6);
                }
                assert_abs_diff_eq!(b_num[i][1], m.b[i][1], epsilon = 1e-6);
            }
            assert_abs_diff_eq!(b_num[0][0], 0.0, epsilon = 1e-9);
            let factor = 1.0 + (k * 2.7) * (k * 2.7);
            assert_abs_diff_eq!(b_num[1][0], m.b[1][0] * factor, epsilon = 1e-6);
        }
    }

    #[test]
    fn works_in_f32() {
        let p = VehicleParams::<f32>::new(2.7, 1.35).unwrap();
        let g = place_double_pole(
            &PolePlacementSpec::new(-1.0f32).unwrap(),
            0.5,
            20.0,
            &p,
            0.01,
        )
        .unwrap();
        let c = char_coeffs(&g, 20.0, &p, 0.01);
        assert!((c.c1 - 2.0).abs() < 1e-4 && (c.c0 - 1.0).abs() < 1e-4);
        assert_eq!(is_stable(&g, 20.0, &p, 0.01, 1e-6), Stability::Stable);
    }
}
