//! Adaptive and fixed-rule quadrature helpers.
//!
//! A 15-point Gauss-Kronrod panel with recursive bisection drives all
//! adaptive work; the disk integrals used by the velocity and the singular
//! integral checks are done in local polar coordinates about the evaluation
//! point, which absorbs the 1/|z - xi| singularity into the Jacobian.

use num_complex::Complex64;

use crate::{Error, Result};

/// Kronrod abscissae for the 7-15 pair (positive half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
/// 7-point Gauss weights (for the error estimate).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
/// 15-point Kronrod weights.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Values that can be accumulated by the adaptive integrator.
pub trait QuadValue: Copy {
    const ZERO: Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    const ZERO: Self = 0.0;
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadEstimate<V> {
    pub value: V,
    pub abs_err: f64,
}

/// One Gauss-Kronrod 7-15 panel on `[a, b]`.
fn gk15<V: QuadValue>(f: &mut impl FnMut(f64) -> V, a: f64, b: f64) -> QuadEstimate<V> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kronrod = V::ZERO;
    let mut gauss = V::ZERO;
    for (j, &x) in XGK.iter().enumerate() {
        if x == 0.0 {
            let v = f(mid);
            kronrod = kronrod.add(v.scale(WGK[7]));
            gauss = gauss.add(v.scale(WG[3]));
        } else {
            let v1 = f(mid - half * x);
            let v2 = f(mid + half * x);
            let pair = v1.add(v2);
            kronrod = kronrod.add(pair.scale(WGK[j]));
            if j % 2 == 1 {
                gauss = gauss.add(pair.scale(WG[j / 2]));
            }
        }
    }
    let value = kronrod.scale(half);
    let err = kronrod.add(gauss.scale(-1.0)).scale(half).magnitude();
    QuadEstimate {
        value,
        abs_err: err,
    }
}

fn adaptive_rec<V: QuadValue>(
    f: &mut impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> QuadEstimate<V> {
    let est = gk15(f, a, b);
    if est.abs_err <= tol || depth == 0 {
        return est;
    }
    let mid = 0.5 * (a + b);
    let left = adaptive_rec(f, a, mid, 0.5 * tol, depth - 1);
    let right = adaptive_rec(f, mid, b, 0.5 * tol, depth - 1);
    QuadEstimate {
        value: left.value.add(right.value),
        abs_err: left.abs_err + right.abs_err,
    }
}

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn adaptive<V: QuadValue>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: usize,
) -> QuadEstimate<V> {
    adaptive_rec(&mut f, a, b, abs_tol, max_depth)
}

/// Options for the polar-coordinate disk integrals.
#[derive(Clone, Copy, Debug)]
pub struct DiskQuadConfig {
    pub rel_tol: f64,
    pub max_depth: usize,
}

impl Default for DiskQuadConfig {
    fn default() -> Self {
        DiskQuadConfig {
            rel_tol: 1e-6,
            max_depth: 28,
        }
    }
}

/// Largest `r >= 0` with `|xi + r e^{i phi}|` on the unit circle.
fn ray_exit_radius(xi: Complex64, phi: f64) -> f64 {
    let e = Complex64::from_polar(1.0, phi);
    let proj = xi.re * e.re + xi.im * e.im;
    let disc = proj * proj + 1.0 - xi.norm_sqr();
    -proj + disc.max(0.0).sqrt()
}

/// Integrates `f(z) dz` over the part of the unit disk with
/// `r_min <= |z - xi| <= r_cap` (`r_cap = inf` for the whole disk), in polar
/// coordinates about `xi`. The callback receives `z`; the polar Jacobian `r`
/// is applied internally, so integrable `1/|z - xi|` singularities are
/// handled exactly by the parametrization.
///
/// Returns the value together with an error estimate; errors out if the
/// requested relative tolerance was not reached within the budget.
pub fn integrate_disk_about<V: QuadValue>(
    xi: Complex64,
    r_min: f64,
    r_cap: f64,
    f: impl Fn(Complex64) -> V,
    cfg: &DiskQuadConfig,
) -> Result<QuadEstimate<V>> {
    assert!(xi.norm() < 1.0, "expansion point must be inside the disk");
    let two_pi = 2.0 * std::f64::consts::PI;

    // Scale pass: coarse estimate fixes the absolute tolerance.
    let coarse = polar_sweep(xi, r_min, r_cap, &f, f64::INFINITY, 6, 0.0);
    let scale = coarse.value.magnitude().max(1e-300);
    let abs_tol = cfg.rel_tol * scale;

    let est = polar_sweep(xi, r_min, r_cap, &f, abs_tol, cfg.max_depth, two_pi);
    let _ = two_pi;
    if est.abs_err > 10.0 * abs_tol.max(cfg.rel_tol * est.value.magnitude()) {
        return Err(Error::QuadratureBudget {
            achieved: est.abs_err / est.value.magnitude().max(1e-300),
            requested: cfg.rel_tol,
        });
    }
    Ok(est)
}

fn polar_sweep<V: QuadValue>(
    xi: Complex64,
    r_min: f64,
    r_cap: f64,
    f: &impl Fn(Complex64) -> V,
    abs_tol: f64,
    max_depth: usize,
    _unused: f64,
) -> QuadEstimate<V> {
    let two_pi = 2.0 * std::f64::consts::PI;
    // Inner integrals get a tolerance an order below the outer one, spread
    // over the angular extent.
    let inner_tol = if abs_tol.is_finite() {
        abs_tol / (10.0 * two_pi)
    } else {
        f64::INFINITY
    };
    let mut radial = |phi: f64| -> V {
        let e = Complex64::from_polar(1.0, phi);
        let r_hi = ray_exit_radius(xi, phi).min(r_cap);
        if r_hi <= r_min {
            return V::ZERO;
        }
        let inner = adaptive_rec(
            &mut |r: f64| f(xi + e * r).scale(r),
            r_min,
            r_hi,
            inner_tol * (r_hi - r_min).max(1e-3),
            max_depth,
        );
        inner.value
    };
    adaptive_rec(&mut radial, 0.0, two_pi, abs_tol, max_depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn gk15_exact_on_smooth() {
        let est = adaptive(|x: f64| (3.0 * x).sin() * x, 0.0, 2.0, 1e-12, 20);
        // antiderivative: sin(3x)/9 - x cos(3x)/3
        let exact = (6.0f64).sin() / 9.0 - 2.0 * (6.0f64).cos() / 3.0;
        assert_abs_diff_eq!(est.value, exact, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_handles_sqrt_singularity() {
        let est = adaptive(|x: f64| x.sqrt().recip(), 1e-14, 1.0, 1e-9, 40);
        assert_abs_diff_eq!(est.value, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn disk_area_from_offset_center() {
        let xi = Complex64::new(0.3, -0.4);
        let est =
            integrate_disk_about(xi, 0.0, f64::INFINITY, |_z| 1.0, &DiskQuadConfig::default())
                .unwrap();
        assert_abs_diff_eq!(est.value, PI, epsilon = 1e-8);
    }

    #[test]
    fn disk_moment_matches_closed_form() {
        // integral of |z|^2 over the unit disk = pi/2, from any center
        let xi = Complex64::new(-0.7, 0.1);
        let est = integrate_disk_about(
            xi,
            0.0,
            f64::INFINITY,
            |z| z.norm_sqr(),
            &DiskQuadConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(est.value, PI / 2.0, epsilon = 1e-7);
    }

    #[test]
    fn annulus_split_is_consistent() {
        let xi = Complex64::new(0.5, 0.2);
        let cfg = DiskQuadConfig::default();
        let f = |z: Complex64| (1.0 - z.norm()) / (z - xi).norm();
        let whole = integrate_disk_about(xi, 0.0, f64::INFINITY, f, &cfg).unwrap();
        let inner = integrate_disk_about(xi, 0.0, 0.1, f, &cfg).unwrap();
        let outer = integrate_disk_about(xi, 0.1, f64::INFINITY, f, &cfg).unwrap();
        assert_abs_diff_eq!(whole.value, inner.value + outer.value, epsilon = 1e-6);
    }
}
