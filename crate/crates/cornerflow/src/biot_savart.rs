//! Velocity reconstruction from vortex blobs through the conformal map.
//!
//! A blob set `{(p_j, Gamma_j)}` induces the velocity
//!
//! ```text
//!     u(x) = DT^T(x) * sum_j Gamma_j K_D(T(x), T(p_j))
//! ```
//!
//! with `K_D` the disk kernel from [`crate::greens`]; for holomorphic `T`
//! the transpose Jacobian acts as multiplication by `conj(T'(x))`. The
//! module also evaluates the constant-background contribution by adaptive
//! quadrature, the odd-symmetry image form for axis-symmetric domains, and
//! batch evaluation with an optional Barnes-Hut fast path.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::conformal::ConformalMap;
use crate::geometry::{DomainSpec, DomainVariant, Point};
use crate::greens::kernel_disk;
use crate::parallel::par_map;
use crate::quad::{integrate_disk_about, DiskQuadConfig};
use crate::report::CheckEntry;
use crate::tree::{Treecode, TreecodeParams};
use crate::{Error, Result};

/// Evaluation refuses points closer than this to a concave corner, where
/// `|DT|` diverges.
pub const CONCAVE_CORNER_EXCLUSION: f64 = 1e-8;

/// Circulations below this are dropped during grid initialization.
pub const CIRCULATION_CUTOFF: f64 = 1e-14;

/// A discrete vortex element.
#[derive(Clone, Copy, Debug)]
pub struct VortexBlob {
    pub position: Point,
    /// Area-integrated vorticity weight `Gamma_j`.
    pub circulation: f64,
    /// Disk-plane regularization radius.
    pub core_delta: f64,
}

/// A complete vorticity description: blobs, optional constant background,
/// and the odd-symmetry mode of the collision experiments (which stores
/// only the upper-half blobs).
#[derive(Clone, Debug, Default)]
pub struct VorticityConfig {
    pub blobs: Vec<VortexBlob>,
    pub background_a: f64,
    pub odd_symmetric: bool,
}

impl VorticityConfig {
    pub fn total_circulation(&self) -> f64 {
        self.blobs.iter().map(|b| b.circulation).sum()
    }

    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        for b in &self.blobs {
            if !b.circulation.is_finite() || !(b.core_delta >= 0.0) {
                return Err(Error::ConfigMisuse(
                    "blob circulation must be finite and core_delta nonnegative".into(),
                ));
            }
            if !domain.contains(b.position) {
                return Err(Error::OutsideDomain(b.position));
            }
        }
        if self.odd_symmetric {
            if !domain.is_conjugation_symmetric() {
                return Err(Error::ConfigMisuse(
                    "odd mode needs a domain symmetric under x2 -> -x2".into(),
                ));
            }
            if self.background_a != 0.0 {
                return Err(Error::ConfigMisuse(
                    "odd mode does not support a constant background".into(),
                ));
            }
            if self.blobs.iter().any(|b| b.position.x2 <= 0.0) {
                return Err(Error::ConfigMisuse(
                    "odd mode stores only blobs with x2 > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

fn bounding_box(domain: &DomainSpec) -> (Point, Point) {
    match &domain.variant {
        DomainVariant::Disk => (Point::new(-1.0, -1.0), Point::new(1.0, 1.0)),
        DomainVariant::Sector { radius, .. } => (
            Point::new(-radius, -radius),
            Point::new(*radius, *radius),
        ),
        DomainVariant::Polygon { vertices } => {
            let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
            let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
            for v in vertices {
                lo = Point::new(lo.x1.min(v.x1), lo.x2.min(v.x2));
                hi = Point::new(hi.x1.max(v.x1), hi.x2.max(v.x2));
            }
            (lo, hi)
        }
    }
}

/// Places blobs on a grid of spacing `h` (cell centers, symmetric about the
/// `x1`-axis) with `Gamma_j = omega0(x_j) h^2`, dropping negligible ones.
pub fn init_from_grid(
    domain: &DomainSpec,
    omega0: impl Fn(Point) -> f64,
    h: f64,
    delta: f64,
) -> Result<VorticityConfig> {
    if !(h > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument(
            "grid spacing must be positive and delta nonnegative".into(),
        ));
    }
    let (lo, hi) = bounding_box(domain);
    let i_lo = (lo.x1 / h).floor() as i64 - 1;
    let i_hi = (hi.x1 / h).ceil() as i64 + 1;
    let j_lo = (lo.x2 / h).floor() as i64 - 1;
    let j_hi = (hi.x2 / h).ceil() as i64 + 1;
    let mut blobs = Vec::new();
    for i in i_lo..=i_hi {
        for j in j_lo..=j_hi {
            let p = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            if !domain.contains(p) {
                continue;
            }
            let gamma = omega0(p) * h * h;
            if gamma.abs() < CIRCULATION_CUTOFF {
                continue;
            }
            blobs.push(VortexBlob {
                position: p,
                circulation: gamma,
                core_delta: delta,
            });
        }
    }
    Ok(VorticityConfig {
        blobs,
        background_a: 0.0,
        odd_symmetric: false,
    })
}

/// Blob positions transplanted to the disk plane, with `|zeta|^2`
/// precomputed for the inner summation loop.
#[derive(Clone, Debug, Default)]
pub struct MappedSources {
    pub zeta: Vec<Complex64>,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub r2: Vec<f64>,
}

/// One regularized free-minus-image term, without the `i/2pi` prefactor.
#[inline(always)]
fn pair_term(eta: Complex64, zeta: Complex64, r2: f64, delta_sq: f64) -> Complex64 {
    let d = eta - zeta;
    let d2 = d.norm_sqr() + delta_sq;
    let free = if d2 < 1e-280 {
        Complex64::new(0.0, 0.0)
    } else {
        d * d2.recip()
    };
    let image = if r2 < 1e-280 {
        Complex64::new(0.0, 0.0)
    } else {
        let w = eta * r2 - zeta;
        w * (r2 / w.norm_sqr())
    };
    free - image
}

impl MappedSources {
    pub fn build(map: &ConformalMap, blobs: &[VortexBlob]) -> Result<Self> {
        let mut out = MappedSources {
            zeta: Vec::with_capacity(blobs.len()),
            gamma: Vec::with_capacity(blobs.len()),
            delta: Vec::with_capacity(blobs.len()),
            r2: Vec::with_capacity(blobs.len()),
        };
        for b in blobs {
            let zeta = map.forward(b.position)?;
            out.zeta.push(zeta);
            out.gamma.push(b.circulation);
            out.delta.push(b.core_delta);
            out.r2.push(zeta.norm_sqr());
        }
        Ok(out)
    }

    /// Direct kernel sum in the disk plane. In odd mode each source is
    /// paired with its mirror `conj(zeta_j)` carrying `-Gamma_j`; for real
    /// `eta` the two free-space and the two image denominators coincide
    /// bitwise, so the sum's real part cancels exactly term by term and the
    /// final `i/2pi` rotation yields an exactly horizontal velocity.
    pub fn direct_sum(&self, eta: Complex64, odd: bool) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.zeta.len() {
            let delta_sq = self.delta[j] * self.delta[j];
            let mut k = pair_term(eta, self.zeta[j], self.r2[j], delta_sq);
            if odd {
                k -= pair_term(eta, self.zeta[j].conj(), self.r2[j], delta_sq);
            }
            acc += self.gamma[j] * k;
        }
        Complex64::new(0.0, 1.0) * acc / (2.0 * PI)
    }
}

/// The corner exclusion guards the diverging `|DT|` of the full-field
/// evaluation; the odd mode stays finite on the axis all the way to the
/// corner and skips it.
fn check_target(domain: &DomainSpec, x: Point, skip_corner_exclusion: bool) -> Result<()> {
    if !skip_corner_exclusion {
        for c in &domain.corners {
            if c.angle > PI && x.dist(c.location) < CONCAVE_CORNER_EXCLUSION {
                return Err(Error::AtCorner(x));
            }
        }
    }
    if !domain.in_closure(x, 1e-9) {
        return Err(Error::OutsideDomain(x));
    }
    Ok(())
}

fn transplant(map: &ConformalMap, x: Point, disk_sum: Complex64) -> Result<Point> {
    let t_prime = map.derivative(x)?;
    Ok(Point::from(t_prime.conj() * disk_sum))
}

/// Velocity at a single point from a non-odd configuration.
pub fn velocity(
    map: &ConformalMap,
    domain: &DomainSpec,
    vort: &VorticityConfig,
    x: Point,
) -> Result<Point> {
    vort.validate(domain)?;
    if vort.odd_symmetric {
        return velocity_odd(map, domain, vort, x);
    }
    check_target(domain, x, false)?;
    let sources = MappedSources::build(map, &vort.blobs)?;
    let eta = map.forward(x)?;
    let mut u = transplant(map, x, sources.direct_sum(eta, false))?;
    if vort.background_a != 0.0 {
        u = u + velocity_background(map, domain, vort.background_a, x)?;
    }
    Ok(u)
}

/// Velocity of the constant background `omega = a`, by adaptive quadrature
/// over the disk in local polar coordinates about `T(x)`.
pub fn velocity_background(
    map: &ConformalMap,
    domain: &DomainSpec,
    a: f64,
    x: Point,
) -> Result<Point> {
    if a == 0.0 {
        return Ok(Point::ORIGIN);
    }
    check_target(domain, x, false)?;
    let eta = map.forward(x)?;
    let eta = if eta.norm() >= 1.0 {
        eta * ((1.0 - 1e-12) / eta.norm())
    } else {
        eta
    };
    let cfg = DiskQuadConfig {
        rel_tol: 1e-7,
        ..DiskQuadConfig::default()
    };
    let is_identity = matches!(map, ConformalMap::Identity);
    let integral = integrate_disk_about(
        eta,
        0.0,
        f64::INFINITY,
        |z| {
            let jac = if is_identity {
                1.0
            } else {
                let y = match map.inverse(z) {
                    Ok(y) => y,
                    Err(_) => return Complex64::new(0.0, 0.0),
                };
                match map.derivative(y) {
                    Ok(t) => t.norm_sqr().recip(),
                    Err(_) => 0.0,
                }
            };
            kernel_disk(eta, z) * jac
        },
        &cfg,
    )?;
    transplant(map, x, a * integral.value)
}

/// Velocity in the odd-symmetry mode of the collision experiments: the
/// stored upper-half blobs act together with mirrored blobs of opposite
/// circulation. On the symmetry axis the returned `u_2` is exactly zero.
pub fn velocity_odd(
    map: &ConformalMap,
    domain: &DomainSpec,
    vort: &VorticityConfig,
    x: Point,
) -> Result<Point> {
    if !vort.odd_symmetric {
        return Err(Error::ConfigMisuse(
            "velocity_odd requires an odd_symmetric configuration".into(),
        ));
    }
    vort.validate(domain)?;
    if x.x2 < 0.0 {
        return Err(Error::InvalidArgument(
            "odd-mode evaluation is defined on the closed upper half".into(),
        ));
    }
    check_target(domain, x, true)?;
    let sources = MappedSources::build(map, &vort.blobs)?;
    let eta = map.forward(x)?;
    transplant(map, x, sources.direct_sum(eta, true))
}

/// Summation strategy for batch evaluation.
#[derive(Clone, Copy, Debug)]
pub enum SummationMethod {
    Direct,
    Treecode(TreecodeParams),
}

/// Velocities at many targets; the treecode path builds one pair of
/// quadtrees (free-space sources and their circle inversions) and shares
/// them read-only across targets.
pub fn velocity_batch(
    map: &ConformalMap,
    domain: &DomainSpec,
    vort: &VorticityConfig,
    targets: &[Point],
    method: SummationMethod,
) -> Result<Vec<Point>> {
    vort.validate(domain)?;
    let sources = MappedSources::build(map, &vort.blobs)?;
    let odd = vort.odd_symmetric;
    match method {
        SummationMethod::Direct => {
            let results = par_map(targets, |&x| -> Result<Point> {
                check_target(domain, x, odd)?;
                if odd && x.x2 < 0.0 {
                    return Err(Error::InvalidArgument(
                        "odd-mode evaluation is defined on the closed upper half".into(),
                    ));
                }
                let eta = map.forward(x)?;
                let mut u = transplant(map, x, sources.direct_sum(eta, odd))?;
                if vort.background_a != 0.0 {
                    u = u + velocity_background(map, domain, vort.background_a, x)?;
                }
                Ok(u)
            });
            results.into_iter().collect()
        }
        SummationMethod::Treecode(params) => {
            // odd mode: materialize the mirrored sources
            let mut pos = sources.zeta.clone();
            let mut gamma = sources.gamma.clone();
            let mut delta = sources.delta.clone();
            if odd {
                for j in 0..sources.zeta.len() {
                    pos.push(sources.zeta[j].conj());
                    gamma.push(-sources.gamma[j]);
                    delta.push(sources.delta[j]);
                }
            }
            let tree = Treecode::build(&pos, &gamma, &delta, params);
            let results = par_map(targets, |&x| -> Result<Point> {
                check_target(domain, x, odd)?;
                let eta = map.forward(x)?;
                let mut u = transplant(map, x, tree.disk_velocity(eta))?;
                if vort.background_a != 0.0 {
                    u = u + velocity_background(map, domain, vort.background_a, x)?;
                }
                Ok(u)
            });
            results.into_iter().collect()
        }
    }
}

/// Sampling region for the log-Lipschitz modulus check: an annulus
/// `r_inner <= |x - center| <= r_outer` compactly inside the domain.
#[derive(Clone, Copy, Debug)]
pub struct AnnulusSpec {
    pub center: Point,
    pub r_inner: f64,
    pub r_outer: f64,
}

/// The log-Lipschitz modulus `phi(r) = r (1 - ln r)`.
pub fn log_lipschitz_modulus(r: f64) -> f64 {
    r * (1.0 - r.ln())
}

/// Checks that `|u(x) - u(x')| / phi(|x - x'|)` stays bounded as the pair
/// separation shrinks: the log-log slope of the per-separation maximum must
/// not grow toward small `r` (slope >= -0.1).
pub fn continuity_modulus_check(
    map: &ConformalMap,
    domain: &DomainSpec,
    vort: &VorticityConfig,
    region: AnnulusSpec,
) -> Result<CheckEntry> {
    if !(region.r_inner >= 0.0 && region.r_outer > region.r_inner) {
        return Err(Error::InvalidArgument("invalid annulus".into()));
    }
    let mid = 0.5 * (region.r_inner + region.r_outer);
    let mut base_points = vec![];
    for k in 0..8 {
        let phi = 2.0 * PI * k as f64 / 8.0;
        let p = Point::new(
            region.center.x1 + mid * phi.cos(),
            region.center.x2 + mid * phi.sin(),
        );
        if domain.contains(p) {
            base_points.push(p);
        }
    }
    if base_points.is_empty() {
        return Err(Error::InvalidArgument(
            "annulus does not intersect the domain interior".into(),
        ));
    }
    let separations: Vec<f64> = (0..11)
        .map(|k| 1e-6 * 10f64.powf(0.5 * k as f64))
        .collect();
    let dirs = [0.0, PI / 3.0, 2.0 * PI / 3.0, 1.1];
    let mut ln_r = Vec::new();
    let mut ln_ratio = Vec::new();
    let mut max_ratio = 0.0f64;
    for &r in &separations {
        let mut worst = 0.0f64;
        for &x in &base_points {
            let ux = velocity(map, domain, vort, x)?;
            for &d in &dirs {
                let xp = Point::new(x.x1 + r * d.cos(), x.x2 + r * d.sin());
                if !domain.contains(xp) {
                    continue;
                }
                let uxp = velocity(map, domain, vort, xp)?;
                worst = worst.max((ux - uxp).norm() / log_lipschitz_modulus(r));
            }
        }
        if worst > 0.0 {
            ln_r.push(r.ln());
            ln_ratio.push(worst.ln());
            max_ratio = max_ratio.max(worst);
        }
    }
    let (slope, samples) = if ln_r.len() >= 2 {
        (fit_slope(&ln_r, &ln_ratio), ln_r.len())
    } else {
        // omega identically zero: every ratio is 0, trivially bounded
        (0.0, separations.len())
    };
    Ok(CheckEntry {
        name: "continuity modulus log-slope".into(),
        fitted: slope,
        expected: 0.0,
        tolerance: 0.1,
        passed: slope >= -0.1 && slope.is_finite(),
        samples,
        detail: format!(
            "max ratio {max_ratio:.6e} over r in [1e-6, 1e-1]; bounded iff slope does not grow toward small r"
        ),
    })
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
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
