//! Riemann maps from the computational domains onto the unit disk.
//!
//! Three implementations sit behind one interface: the identity on the
//! disk itself, a closed-form chain for circular sectors and a numerical
//! Schwarz-Christoffel map for polygons. All maps are normalized on the
//! disk side so results are reproducible run to run.

pub mod sc;
pub mod sector;

use std::path::Path;

use num_complex::Complex64;

use crate::geometry::{DomainSpec, DomainVariant, Point};
use crate::{Error, Result};

pub use sc::ScMap;
pub use sector::SectorMap;

#[derive(Clone, Debug)]
pub enum ConformalMap {
    /// The domain is already the unit disk.
    Identity,
    Sector(SectorMap),
    Sc(Box<ScMap>),
}

impl ConformalMap {
    pub fn build(domain: &DomainSpec) -> Result<Self> {
        Self::build_with_cache(domain, None)
    }

    /// Builds the map; polygon parameter solutions may be cached as JSON
    /// sidecars under `cache_dir`.
    pub fn build_with_cache(domain: &DomainSpec, cache_dir: Option<&Path>) -> Result<Self> {
        match &domain.variant {
            DomainVariant::Disk => Ok(ConformalMap::Identity),
            DomainVariant::Sector { theta, radius } => {
                Ok(ConformalMap::Sector(SectorMap::new(*theta, *radius)?))
            }
            DomainVariant::Polygon { vertices } => {
                Ok(ConformalMap::Sc(Box::new(ScMap::new(vertices, cache_dir)?)))
            }
        }
    }

    /// `T(x)`, defined on the closed domain.
    pub fn forward(&self, x: Point) -> Result<Complex64> {
        let z = Complex64::from(x);
        match self {
            ConformalMap::Identity => Ok(z),
            ConformalMap::Sector(m) => Ok(m.forward(z)),
            ConformalMap::Sc(m) => m.forward(z),
        }
    }

    /// `T^{-1}(zeta)` for `zeta` in the closed unit disk.
    pub fn inverse(&self, zeta: Complex64) -> Result<Point> {
        match self {
            ConformalMap::Identity => Ok(Point::from(zeta)),
            ConformalMap::Sector(m) => Ok(Point::from(m.inverse(zeta))),
            ConformalMap::Sc(m) => Ok(Point::from(m.inverse(zeta)?)),
        }
    }

    /// Complex derivative `T'(x)`; errors at corners, where it is either
    /// zero or infinite.
    pub fn derivative(&self, x: Point) -> Result<Complex64> {
        let z = Complex64::from(x);
        match self {
            ConformalMap::Identity => Ok(Complex64::new(1.0, 0.0)),
            ConformalMap::Sector(m) => m.derivative(z),
            ConformalMap::Sc(m) => m.derivative(z),
        }
    }

    /// Image of the corner at `domain.corners[idx]` on the unit circle.
    pub fn corner_image(&self, domain: &DomainSpec, idx: usize) -> Result<Complex64> {
        let corner = domain
            .corners
            .get(idx)
            .ok_or_else(|| Error::InvalidArgument(format!("no corner with index {idx}")))?;
        match self {
            ConformalMap::Identity => Err(Error::InvalidArgument(
                "the disk has no corners".into(),
            )),
            ConformalMap::Sector(m) => {
                if corner.location == Point::ORIGIN {
                    Ok(Complex64::new(-1.0, 0.0))
                } else {
                    Ok(m.forward(Complex64::from(corner.location)))
                }
            }
            ConformalMap::Sc(m) => {
                let images = m.corner_images();
                m.vertices()
                    .iter()
                    .position(|v| *v == corner.location)
                    .map(|k| images[k])
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "corner {idx} does not coincide with a polygon vertex"
                        ))
                    })
            }
        }
    }

    /// Stores each corner's circle image into the domain description.
    pub fn annotate_corners(&self, domain: &mut DomainSpec) -> Result<()> {
        for idx in 0..domain.corners.len() {
            let img = self.corner_image(domain, idx)?;
            domain.corners[idx].image_on_circle = Some(Point::from(img));
        }
        Ok(())
    }

    /// Unit vector from the corner into the interior of the domain, along
    /// the angular bisector.
    fn corner_bisector(&self, domain: &DomainSpec, idx: usize) -> Result<Complex64> {
        let corner = &domain.corners[idx];
        match &domain.variant {
            DomainVariant::Disk => Err(Error::InvalidArgument("the disk has no corners".into())),
            DomainVariant::Sector { theta, .. } => {
                if corner.location == Point::ORIGIN {
                    Ok(Complex64::new(1.0, 0.0))
                } else {
                    // junction: bisect between the radial edge (toward the
                    // apex) and the tangent of the arc
                    let e = Complex64::from(corner.location);
                    let e = e / e.norm();
                    let tangent = Complex64::new(0.0, 1.0) * e
                        * if corner.location.x2 > 0.0 { -1.0 } else { 1.0 };
                    let b = -e + tangent;
                    let _ = theta;
                    Ok(b / b.norm())
                }
            }
            DomainVariant::Polygon { vertices } => {
                let n = vertices.len();
                let k = vertices
                    .iter()
                    .position(|v| *v == corner.location)
                    .ok_or_else(|| Error::InvalidArgument("corner is not a vertex".into()))?;
                let out = Complex64::from(vertices[(k + 1) % n]) - Complex64::from(vertices[k]);
                let rot = Complex64::from_polar(1.0, corner.angle / 2.0);
                let b = out / out.norm() * rot;
                Ok(b)
            }
        }
    }

    /// `|T(x) - T(corner)|`, using a cancellation-free form where one is
    /// available.
    fn dist_to_corner_image(
        &self,
        domain: &DomainSpec,
        idx: usize,
        x: Point,
        image: Complex64,
    ) -> Result<f64> {
        if let (ConformalMap::Sector(m), true) = (self, domain.corners[idx].location == Point::ORIGIN)
        {
            return Ok(m.dist_to_apex_image(Complex64::from(x)));
        }
        Ok((self.forward(x)? - image).norm())
    }

    /// Samples the map along the interior bisector of a corner at
    /// logarithmically spaced distances in `[r_lo, r_hi]` and fits log-log
    /// slopes of `|T(x) - T(x_c)|` and `|T'(x)|` against the distance.
    ///
    /// For a corner of interior angle `theta` the expected slopes are
    /// `pi/theta` and `pi/theta - 1`.
    pub fn verify_corner_exponent(
        &self,
        domain: &DomainSpec,
        idx: usize,
        r_lo: f64,
        r_hi: f64,
        samples: usize,
    ) -> Result<CornerExponentFit> {
        if !(r_lo > 0.0 && r_hi > r_lo) || samples < 2 {
            return Err(Error::InvalidArgument(
                "need 0 < r_lo < r_hi and at least two samples".into(),
            ));
        }
        let corner = domain
            .corners
            .get(idx)
            .ok_or_else(|| Error::InvalidArgument(format!("no corner with index {idx}")))?
            .clone();
        let bis = self.corner_bisector(domain, idx)?;
        let image = self.corner_image(domain, idx)?;
        let mut ln_r = Vec::with_capacity(samples);
        let mut ln_map = Vec::with_capacity(samples);
        let mut ln_deriv = Vec::with_capacity(samples);
        for i in 0..samples {
            let t = i as f64 / (samples - 1) as f64;
            let r = r_lo * (r_hi / r_lo).powf(t);
            let x = Point::from(Complex64::from(corner.location) + r * bis);
            let d_map = self.dist_to_corner_image(domain, idx, x, image)?;
            let d_deriv = self.derivative(x)?.norm();
            if !(d_map > 0.0 && d_deriv > 0.0) {
                return Err(Error::FitRefused(format!(
                    "degenerate sample at r = {r:.3e} near corner {idx}"
                )));
            }
            ln_r.push(r.ln());
            ln_map.push(d_map.ln());
            ln_deriv.push(d_deriv.ln());
        }
        let p = std::f64::consts::PI / corner.angle;
        Ok(CornerExponentFit {
            expected_map_slope: p,
            fitted_map_slope: slope(&ln_r, &ln_map),
            expected_derivative_slope: p - 1.0,
            fitted_derivative_slope: slope(&ln_r, &ln_deriv),
            samples,
        })
    }
}

/// Result of a log-log corner-exponent fit.
#[derive(Clone, Copy, Debug)]
pub struct CornerExponentFit {
    pub expected_map_slope: f64,
    pub fitted_map_slope: f64,
    pub expected_derivative_slope: f64,
    pub fitted_derivative_slope: f64,
    pub samples: usize,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
