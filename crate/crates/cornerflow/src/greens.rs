//! Green's function of the unit disk and the derived vortex kernels.
//!
//! Everything is expressed in disk-plane complex coordinates; velocities are
//! returned as `Complex64` with `re` the first and `im` the second component.

use num_complex::Complex64;

use std::f64::consts::PI;

/// Below this squared modulus a source sits at the disk center and its
/// circle inversion is at infinity; the image term is exactly zero there.
const CENTER_CUTOFF_SQ: f64 = 1e-280;

/// Dirichlet Green's function of the unit disk,
/// `G(zeta, z) = (1/2pi) ln( |zeta - z| / (|zeta - z*| |z|) )` with
/// `z* = z / |z|^2`.
///
/// The denominator is evaluated as `|zeta |z|^2 - z| / |z|`, which stays
/// finite as `z -> 0` and reproduces the limit `(1/2pi) ln |zeta|`.
pub fn green_disk(zeta: Complex64, z: Complex64) -> f64 {
    let r2 = z.norm_sqr();
    let num = (zeta - z).norm();
    let den = if r2 < CENTER_CUTOFF_SQ {
        1.0
    } else {
        (zeta * r2 - z).norm() / z.norm()
    };
    (num / den).ln() / (2.0 * PI)
}

/// Green's function with the odd reflection across the real axis removed:
/// `G(zeta, z) - G(zeta, conj z)`. Vanishes for `zeta` on the axis.
pub fn green_reflected(zeta: Complex64, z: Complex64) -> f64 {
    green_disk(zeta, z) - green_disk(zeta, z.conj())
}

/// Image-source contribution `(zeta - z*) / |zeta - z*|^2` in a form that is
/// stable for sources near the disk center.
#[inline]
fn image_term(zeta: Complex64, z: Complex64) -> Complex64 {
    let r2 = z.norm_sqr();
    if r2 < CENTER_CUTOFF_SQ {
        return Complex64::new(0.0, 0.0);
    }
    let d = zeta * r2 - z;
    d * (r2 / d.norm_sqr())
}

/// Biot-Savart kernel of the unit disk: the velocity at `zeta` induced by a
/// unit point vortex at `z`,
/// `K(zeta, z) = (1/2pi) [ (zeta-z)/|zeta-z|^2 - (zeta-z*)/|zeta-z*|^2 ]^perp`.
pub fn kernel_disk(zeta: Complex64, z: Complex64) -> Complex64 {
    let d = zeta - z;
    let free = d / d.norm_sqr();
    Complex64::new(0.0, 1.0) * (free - image_term(zeta, z)) / (2.0 * PI)
}

/// Regularized free-space term `(zeta-z)/(|zeta-z|^2 + delta^2)`; zero for
/// coincident points at `delta = 0`.
pub(crate) fn kernel_free_blob(zeta: Complex64, z: Complex64, delta: f64) -> Complex64 {
    let d = zeta - z;
    let d2 = d.norm_sqr() + delta * delta;
    if d2 < CENTER_CUTOFF_SQ {
        Complex64::new(0.0, 0.0)
    } else {
        d / d2
    }
}

/// Blob-regularized kernel: the free-space term is mollified to
/// `(zeta-z)/(|zeta-z|^2 + delta^2)`, the smooth image term is left exact.
/// With `delta = 0` and `zeta == z` the self-interaction is zero.
pub fn kernel_disk_blob(zeta: Complex64, z: Complex64, delta: f64) -> Complex64 {
    Complex64::new(0.0, 1.0) * (kernel_free_blob(zeta, z, delta) - image_term(zeta, z))
        / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn green_value_center_to_half_radius() {
        // G(0, 0.5) = (1/2pi) ln(0.5 / (2 * 0.5)) = -ln 2 / (2 pi)
        let g = green_disk(c(0.0, 0.0), c(0.5, 0.0));
        assert_abs_diff_eq!(g, -(2.0f64).ln() / (2.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(g, -0.110_317_8, epsilon = 1e-7);
    }

    #[test]
    fn green_vanishes_on_boundary() {
        for k in 0..32 {
            let phi = 2.0 * PI * k as f64 / 32.0;
            let zeta = Complex64::from_polar(1.0, phi);
            for &z in &[c(0.3, 0.1), c(-0.6, 0.5), c(0.0, 0.0), c(1e-9, -1e-9)] {
                assert!(green_disk(zeta, z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn green_is_symmetric() {
        let pairs = [
            (c(0.2, 0.3), c(-0.4, 0.1)),
            (c(0.7, -0.1), c(0.05, 0.55)),
            (c(-0.9, 0.0), c(0.0, 0.85)),
        ];
        for (a, b) in pairs {
            assert_abs_diff_eq!(green_disk(a, b), green_disk(b, a), epsilon = 1e-13);
        }
    }

    #[test]
    fn center_vortex_velocity() {
        // vortex at the origin: u(zeta) = (1/2pi) zeta^perp / |zeta|^2
        let u = kernel_disk(c(0.5, 0.0), c(0.0, 0.0));
        assert_abs_diff_eq!(u.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.im, 1.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn kernel_matches_gradient_of_green() {
        // K = perp-gradient of G in the first argument
        let h = 1e-6;
        let cases = [
            (c(0.2, 0.3), c(-0.4, 0.1)),
            (c(0.6, -0.2), c(0.5, 0.5)),
            (c(-0.1, 0.05), c(0.0, -0.8)),
        ];
        for (zeta, z) in cases {
            let gx = (green_disk(zeta + c(h, 0.0), z) - green_disk(zeta - c(h, 0.0), z))
                / (2.0 * h);
            let gy = (green_disk(zeta + c(0.0, h), z) - green_disk(zeta - c(0.0, h), z))
                / (2.0 * h);
            let u = kernel_disk(zeta, z);
            assert_abs_diff_eq!(u.re, -gy, epsilon = 1e-6);
            assert_abs_diff_eq!(u.im, gx, epsilon = 1e-6);
        }
    }

    #[test]
    fn kernel_tangent_on_boundary() {
        for k in 0..16 {
            let phi = 2.0 * PI * (k as f64 + 0.5) / 16.0;
            let zeta = Complex64::from_polar(1.0, phi);
            for &z in &[c(0.3, 0.1), c(-0.2, -0.7), c(0.0, 0.0)] {
                let u = kernel_disk(zeta, z);
                let normal_component = u.re * zeta.re + u.im * zeta.im;
                assert!(normal_component.abs() < 1e-12, "normal leak {normal_component:e}");
            }
        }
    }

    #[test]
    fn blob_kernel_converges_quadratically() {
        let zeta = c(0.4, 0.1);
        let z = c(0.1, -0.2);
        let exact = kernel_disk(zeta, z);
        let err = |delta: f64| (kernel_disk_blob(zeta, z, delta) - exact).norm();
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        let rate = (e1 / e2).log2();
        assert!((rate - 2.0).abs() < 0.05, "rate {rate}");
        assert_abs_diff_eq!(err(0.0), 0.0, epsilon = 1e-18);
    }

    #[test]
    fn blob_kernel_zero_self_interaction() {
        let z = c(0.3, 0.4);
        let u = kernel_disk_blob(z, z, 0.0);
        // the image term remains: only the free-space part is singular
        let expected = Complex64::new(0.0, 1.0) * -super::image_term(z, z) / (2.0 * PI);
        assert_abs_diff_eq!((u - expected).norm(), 0.0, epsilon = 1e-18);
        assert!(u.norm().is_finite());
    }

    #[test]
    fn reflected_green_properties() {
        let z = c(0.3, 0.4);
        // vanishes on the symmetry axis
        for &x in &[-0.8, -0.2, 0.0, 0.5, 0.95] {
            assert!(green_reflected(c(x, 0.0), z).abs() < 1e-14);
        }
        // odd under reflection of the observation point
        let zeta = c(0.1, 0.6);
        assert_abs_diff_eq!(
            green_reflected(zeta.conj(), z),
            -green_reflected(zeta, z),
            epsilon = 1e-14
        );
        // negative when both points are in the open upper half disk
        assert!(green_reflected(zeta, z) < 0.0);
        assert!(green_reflected(c(-0.5, 0.2), c(0.6, 0.7)) < 0.0);
    }
}
