//! Closed-form Riemann map for a circular sector.
//!
//! The sector `{ r e^{i phi} : 0 < r < R, |phi| < theta/2 }` is mapped onto
//! the unit disk by composing a power map that straightens the apex, a
//! Joukowski-type map that opens the half disk onto a half plane, and a
//! Mobius map onto the disk. Writing `s = (z/R)^{pi/theta}` and
//! `d(s) = (1/s - s)/2`, the whole chain collapses to
//!
//! ```text
//!     T(z) = (c - d) / (c + d),      c = d(s0),  s0 = 2^{-pi/theta},
//! ```
//!
//! which sends the apex to -1, the anchor point `z = R/2` to 0 and `z = R`
//! to +1. All intermediate quantities are real on the symmetry axis, so the
//! map and its derivative are exactly real there in floating point.

use num_complex::Complex64;

use crate::geometry::Point;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SectorMap {
    theta: f64,
    radius: f64,
    /// pi / theta
    p: f64,
    /// Mobius parameter `c = d(s0) = sinh((pi/theta) ln 2)`.
    c: f64,
}

impl SectorMap {
    pub fn new(theta: f64, radius: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 2.0 * std::f64::consts::PI) || !(radius > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "sector needs 0 < theta < 2*pi and radius > 0, got theta = {theta}, radius = {radius}"
            )));
        }
        let p = std::f64::consts::PI / theta;
        Ok(SectorMap {
            theta,
            radius,
            p,
            c: (p * std::f64::consts::LN_2).sinh(),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn d_of_s(s: Complex64) -> Complex64 {
        (s.inv() - s) * 0.5
    }

    /// `T(z)`; the apex `z = 0` maps to exactly -1.
    pub fn forward(&self, z: Complex64) -> Complex64 {
        if z.norm_sqr() == 0.0 {
            return Complex64::new(-1.0, 0.0);
        }
        let s = (z / self.radius).powf(self.p);
        let d = Self::d_of_s(s);
        (self.c - d) / (self.c + d)
    }

    /// `|T(z) - T(0)| = |T(z) + 1|` without the cancellation of forming the
    /// difference after the fact: `T + 1 = 2c / (c + d)`.
    pub fn dist_to_apex_image(&self, z: Complex64) -> f64 {
        let s = (z / self.radius).powf(self.p);
        let d = Self::d_of_s(s);
        (2.0 * self.c) / (self.c + d).norm()
    }

    /// Complex derivative `T'(z)`.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        if z.norm_sqr() == 0.0 {
            return Err(Error::AtCorner(Point::new(0.0, 0.0)));
        }
        let s = (z / self.radius).powf(self.p);
        let d = Self::d_of_s(s);
        let cd = self.c + d;
        // dT/dd = -2c/(c+d)^2, dd/ds = -(1+s^2)/(2 s^2), ds/dz = p s / z
        Ok((self.p * self.c) * (Complex64::new(1.0, 0.0) + s * s) / (z * s * cd * cd))
    }

    /// Inverse map `T^{-1}(zeta)` for `zeta` in the closed disk.
    pub fn inverse(&self, zeta: Complex64) -> Complex64 {
        if (zeta + 1.0).norm_sqr() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let d = self.c * (1.0 - zeta) / (1.0 + zeta);
        // d = (1/s - s)/2  =>  s = 1/(d + sqrt(1 + d^2)); Re d >= 0 on the
        // disk so the principal square root picks the |s| <= 1 branch.
        let s = (d + (1.0 + d * d).sqrt()).inv();
        self.radius * s.powf(1.0 / self.p)
    }

    /// Images of the three corners: apex, then the two arc junctions in ccw
    /// order (lower junction first).
    pub fn corner_images(&self) -> [Complex64; 3] {
        let lower = self.forward(Complex64::from_polar(self.radius, -self.theta / 2.0));
        let upper = self.forward(Complex64::from_polar(self.radius, self.theta / 2.0));
        [Complex64::new(-1.0, 0.0), lower, upper]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn anchor_points() {
        for &theta in &[PI / 2.0, 2.0 * PI / 3.0, 1.5 * PI, 1.75 * PI] {
            let map = SectorMap::new(theta, 1.0).unwrap();
            let at = |x: f64| map.forward(Complex64::new(x, 0.0));
            assert_abs_diff_eq!((at(0.0) + 1.0).norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(at(0.5).norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!((at(1.0) - 1.0).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn junction_images_on_circle() {
        let map = SectorMap::new(1.5 * PI, 2.0).unwrap();
        let [apex, lower, upper] = map.corner_images();
        assert_abs_diff_eq!(apex.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lower.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(upper.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!((lower - upper.conj()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn real_axis_stays_exactly_real() {
        let map = SectorMap::new(1.5 * PI, 1.0).unwrap();
        for &x in &[1e-9, 0.01, 0.3, 0.5, 0.77, 0.999] {
            let w = map.forward(Complex64::new(x, 0.0));
            assert_eq!(w.im, 0.0);
            let dw = map.derivative(Complex64::new(x, 0.0)).unwrap();
            assert_eq!(dw.im, 0.0);
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let map = SectorMap::new(2.0 * PI / 3.0, 1.0).unwrap();
        for &(r, phi) in &[(0.3, 0.2), (0.8, -0.9), (0.05, 1.0), (0.99, -0.3)] {
            let z = Complex64::from_polar(r, phi);
            let a = map.forward(z.conj());
            let b = map.forward(z).conj();
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn roundtrip() {
        for &theta in &[PI / 2.0, 2.0 * PI / 3.0, 1.5 * PI, 1.75 * PI] {
            let map = SectorMap::new(theta, 1.3).unwrap();
            for &(r, f) in &[(0.2, 0.3), (0.9, -0.45), (0.6, 0.49), (0.01, 0.0)] {
                let z = Complex64::from_polar(r * 1.3, f * theta);
                let back = map.inverse(map.forward(z));
                assert!((back - z).norm() < 1e-10 * 1.3, "theta {theta}: {z} -> {back}");
            }
            for &(rho, phi) in &[(0.5, 1.0), (0.95, -2.5), (0.1, 3.0)] {
                let w = Complex64::from_polar(rho, phi);
                let fwd = map.forward(map.inverse(w));
                assert!((fwd - w).norm() < 1e-10, "theta {theta}: {w} -> {fwd}");
            }
        }
    }

    #[test]
    fn boundary_maps_to_circle() {
        let map = SectorMap::new(1.5 * PI, 1.0).unwrap();
        for k in 1..20 {
            let t = k as f64 / 20.0;
            let on_arc = Complex64::from_polar(1.0, (t - 0.5) * 1.5 * PI);
            assert_abs_diff_eq!(map.forward(on_arc).norm(), 1.0, epsilon = 1e-8);
            let on_edge = Complex64::from_polar(t, 0.75 * PI);
            assert_abs_diff_eq!(map.forward(on_edge).norm(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let map = SectorMap::new(1.5 * PI, 1.0).unwrap();
        let h = 1e-7;
        for &(r, phi) in &[(0.4, 0.3), (0.7, -1.5), (0.2, 2.0)] {
            let z = Complex64::from_polar(r, phi);
            let d = map.derivative(z).unwrap();
            let fd_x = (map.forward(z + h) - map.forward(z - h)) / (2.0 * h);
            let fd_y = (map.forward(z + Complex64::new(0.0, h))
                - map.forward(z - Complex64::new(0.0, h)))
                / Complex64::new(0.0, 2.0 * h);
            assert!((d - fd_x).norm() < 1e-6 * d.norm().max(1.0));
            assert!((d - fd_y).norm() < 1e-6 * d.norm().max(1.0));
        }
    }
}
