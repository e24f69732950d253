//! Numerical Schwarz-Christoffel map for polygonal domains.
//!
//! The map from the unit disk onto a polygon with vertices `v_k` and
//! interior angles `alpha_k pi` is
//!
//! ```text
//!     f(w) = A + C * int_0^w prod_k (1 - w'/w_k)^(alpha_k - 1) dw'
//! ```
//!
//! with prevertices `w_k` on the unit circle. The parameter problem is
//! solved by fixing the last three prevertex angles at `pi`, `3 pi/2` and
//! `2 pi` and adjusting the remaining `n - 3` through a softmax-gap
//! parametrization, matching side-length ratios with a damped Newton
//! iteration. Side integrals use Gauss-Jacobi rules at the singular
//! endpoints and compound Gauss-Legendre panels elsewhere, with panel
//! lengths limited by the distance to the nearest prevertex.
//!
//! The solved map is then normalized by a Mobius transform sending the
//! polygon centroid to the disk center, with positive real derivative
//! there; this makes the disk-side picture unique and reproducible.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::geometry::{interior_angle, Point};
use crate::{Error, Result};

const GJ_DEGREE: usize = 24;
const GL_DEGREE: usize = 20;
const NEWTON_TOL: f64 = 1e-12;
const MAX_SOLVER_ITERS: usize = 120;

#[derive(Clone, Debug)]
pub struct ScMap {
    vertices: Vec<Point>,
    /// `alpha_k - 1` exponents.
    betas: Vec<f64>,
    prevertices: Vec<Complex64>,
    c_const: Complex64,
    a_const: Complex64,
    /// Preimage of the polygon centroid under the raw map.
    w_pre: Complex64,
    /// Unit-modulus rotation making `T'(centroid)` real positive.
    rot: Complex64,
    gl: GaussLegendre,
    gj: Vec<GaussJacobi>,
}

/// Serializable solver state for the JSON sidecar cache.
#[derive(Serialize, Deserialize)]
struct ScCache {
    vertices: Vec<[f64; 2]>,
    prevertices: Vec<[f64; 2]>,
    c_const: [f64; 2],
    a_const: [f64; 2],
    w_pre: [f64; 2],
    rot: [f64; 2],
}

fn c64(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Hash of the exact vertex bit patterns, used as the cache key.
pub fn vertex_hash(vertices: &[Point]) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for v in vertices {
        v.x1.to_bits().hash(&mut h);
        v.x2.to_bits().hash(&mut h);
    }
    h.finish()
}

fn cache_path(dir: &Path, vertices: &[Point]) -> PathBuf {
    dir.join(format!("sc_{:016x}.json", vertex_hash(vertices)))
}

impl ScMap {
    /// Solves the parameter problem for a ccw polygon. If `cache_dir` is
    /// given, a previously solved parameter set for the identical vertex
    /// list is reused, and fresh solutions are stored there.
    pub fn new(vertices: &[Point], cache_dir: Option<&Path>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        if let Some(dir) = cache_dir {
            if let Some(map) = Self::try_load(dir, vertices) {
                return Ok(map);
            }
        }
        let map = Self::solve(vertices)?;
        if let Some(dir) = cache_dir {
            let _ = std::fs::create_dir_all(dir);
            let cache = ScCache {
                vertices: vertices.iter().map(|v| [v.x1, v.x2]).collect(),
                prevertices: map.prevertices.iter().copied().map(pair).collect(),
                c_const: pair(map.c_const),
                a_const: pair(map.a_const),
                w_pre: pair(map.w_pre),
                rot: pair(map.rot),
            };
            if let Ok(json) = serde_json::to_string_pretty(&cache) {
                let _ = std::fs::write(cache_path(dir, vertices), json);
            }
        }
        Ok(map)
    }

    fn try_load(dir: &Path, vertices: &[Point]) -> Option<Self> {
        let text = std::fs::read_to_string(cache_path(dir, vertices)).ok()?;
        let cache: ScCache = serde_json::from_str(&text).ok()?;
        if cache.vertices.len() != vertices.len()
            || cache
                .vertices
                .iter()
                .zip(vertices)
                .any(|(a, v)| a[0].to_bits() != v.x1.to_bits() || a[1].to_bits() != v.x2.to_bits())
        {
            return None;
        }
        let betas = exponents(vertices).ok()?;
        let gj = jacobi_rules(&betas).ok()?;
        Some(ScMap {
            vertices: vertices.to_vec(),
            betas,
            prevertices: cache.prevertices.into_iter().map(c64).collect(),
            c_const: c64(cache.c_const),
            a_const: c64(cache.a_const),
            w_pre: c64(cache.w_pre),
            rot: c64(cache.rot),
            gl: GaussLegendre::new(NonZeroUsize::new(GL_DEGREE).unwrap()),
            gj,
        })
    }

    fn solve(vertices: &[Point]) -> Result<Self> {
        let n = vertices.len();
        let betas = exponents(vertices)?;
        let gl = GaussLegendre::new(NonZeroUsize::new(GL_DEGREE).unwrap());
        let gj = jacobi_rules(&betas)?;

        let side_len = |k: usize| vertices[(k + 1) % n].dist(vertices[k]);

        // Softmax-gap parametrization of the free prevertex angles in
        // (0, pi); the last of the n - 2 gap logits is pinned to zero.
        let unknowns = n - 3;
        let mut lambda = vec![0.0f64; unknowns];
        let angles_of = |lambda: &[f64]| -> Vec<f64> {
            let mut logits = lambda.to_vec();
            logits.push(0.0);
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut gaps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let s: f64 = gaps.iter().sum();
            for g in &mut gaps {
                *g *= std::f64::consts::PI / s;
            }
            let mut phis = Vec::with_capacity(n);
            let mut acc = 0.0;
            for g in gaps.iter().take(unknowns) {
                acc += g;
                phis.push(acc);
            }
            phis.push(std::f64::consts::PI);
            phis.push(1.5 * std::f64::consts::PI);
            phis.push(2.0 * std::f64::consts::PI);
            phis
        };
        let prevertices_of = |lambda: &[f64]| -> Vec<Complex64> {
            angles_of(lambda)
                .into_iter()
                .map(|phi| Complex64::from_polar(1.0, phi))
                .collect()
        };
        let residual = |lambda: &[f64]| -> Result<Vec<f64>> {
            let pv = prevertices_of(lambda);
            let quad = Quadrature {
                betas: &betas,
                prevertices: &pv,
                gl: &gl,
                gj: &gj,
            };
            let base = quad.side_integral(0).norm();
            if !(base > 0.0) || !base.is_finite() {
                return Err(Error::ScNonConvergence {
                    residual: f64::INFINITY,
                    iterations: 0,
                });
            }
            Ok((1..=unknowns)
                .map(|j| quad.side_integral(j).norm() / base - side_len(j) / side_len(0))
                .collect())
        };

        let mut iterations = 0;
        if unknowns > 0 {
            let mut r = residual(&lambda)?;
            let mut rnorm = linf(&r);
            while rnorm > NEWTON_TOL && iterations < MAX_SOLVER_ITERS {
                iterations += 1;
                // forward-difference Jacobian
                let h = 1e-6;
                let mut jac = vec![vec![0.0; unknowns]; unknowns];
                for c in 0..unknowns {
                    let mut lp = lambda.clone();
                    lp[c] += h;
                    let rp = residual(&lp)?;
                    for (row, jrow) in jac.iter_mut().enumerate() {
                        jrow[c] = (rp[row] - r[row]) / h;
                    }
                }
                let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
                let delta = solve_linear(jac, rhs).ok_or(Error::ScNonConvergence {
                    residual: rnorm,
                    iterations,
                })?;
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..12 {
                    let trial: Vec<f64> = lambda
                        .iter()
                        .zip(&delta)
                        .map(|(l, d)| l + t * d)
                        .collect();
                    if let Ok(rt) = residual(&trial) {
                        let tn = linf(&rt);
                        if tn < rnorm {
                            lambda = trial;
                            r = rt;
                            rnorm = tn;
                            accepted = true;
                            break;
                        }
                    }
                    t *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            if rnorm > 1e-9 {
                return Err(Error::ScNonConvergence {
                    residual: rnorm,
                    iterations,
                });
            }
        }

        let prevertices = prevertices_of(&lambda);
        let quad = Quadrature {
            betas: &betas,
            prevertices: &prevertices,
            gl: &gl,
            gj: &gj,
        };

        // constants: match side 0 exactly
        let i0 = quad.side_integral(0);
        let c_const = (Complex64::from(vertices[1]) - Complex64::from(vertices[0])) / i0;
        let f0_w0 = quad.from_center(prevertices[0], Some(0));
        let a_const = Complex64::from(vertices[0]) - c_const * f0_w0;

        let mut map = ScMap {
            vertices: vertices.to_vec(),
            betas,
            prevertices,
            c_const,
            a_const,
            w_pre: Complex64::new(0.0, 0.0),
            rot: Complex64::new(1.0, 0.0),
            gl,
            gj,
        };

        // normalization: centroid to the origin, positive derivative there
        let centroid = polygon_centroid(vertices);
        map.w_pre = map.raw_inverse(centroid, Complex64::new(0.0, 0.0))?;
        let q = map.raw_derivative(map.w_pre).inv();
        map.rot = q.conj() / q.norm();
        Ok(map)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Prevertices of the normalized map, one per vertex, on the unit circle.
    pub fn corner_images(&self) -> Vec<Complex64> {
        self.prevertices.iter().map(|&w| self.rot * mobius(w, self.w_pre)).collect()
    }

    /// Raw (un-normalized) SC integral `A + C int_0^w ...`. Near a
    /// prevertex the integral is anchored at that prevertex instead of the
    /// center: `f(w_k)` is the vertex itself, and the short leg `w_k -> w`
    /// is handled by the Gauss-Jacobi endpoint rule, so the evaluation
    /// stays accurate arbitrarily close to corners.
    fn raw_forward(&self, w: Complex64) -> Complex64 {
        let quad = self.quadrature();
        let (k, dist) = self
            .prevertices
            .iter()
            .enumerate()
            .map(|(k, &p)| (k, (w - p).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if dist < 0.3 {
            return Complex64::from(self.vertices[k])
                + self.c_const * quad.integrate_from_singular(k, w);
        }
        self.a_const + self.c_const * quad.from_center(w, None)
    }

    /// `f'(w) = C prod (1 - w/w_k)^{beta_k}`.
    fn raw_derivative(&self, w: Complex64) -> Complex64 {
        self.c_const * sc_product(w, &self.prevertices, &self.betas, None)
    }

    fn quadrature(&self) -> Quadrature<'_> {
        Quadrature {
            betas: &self.betas,
            prevertices: &self.prevertices,
            gl: &self.gl,
            gj: &self.gj,
        }
    }

    /// Inverse of the raw map: integrates `dw/dx = 1/f'(w)` along the
    /// straight segment from `f(w_start)` to `x`, then polishes with Newton.
    fn raw_inverse(&self, x: Complex64, w_start: Complex64) -> Result<Complex64> {
        let x_start = self.raw_forward(w_start);
        let mut w = w_start;
        let n_steps = 48;
        let dx = (x - x_start) / n_steps as f64;
        let vel = |w: Complex64| -> Complex64 {
            let d = self.raw_derivative(w);
            if d.norm_sqr() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                d.inv()
            }
        };
        for _ in 0..n_steps {
            let k1 = vel(w);
            let k2 = vel(clamp_disk(w + 0.5 * dx * k1));
            let k3 = vel(clamp_disk(w + 0.5 * dx * k2));
            let k4 = vel(clamp_disk(w + dx * k3));
            w = clamp_disk(w + dx * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
        }
        // damped Newton polish: accept only residual-decreasing steps that
        // stay in the closed disk
        let scale = self.diameter().max(1.0);
        let mut err = x - self.raw_forward(w);
        for _ in 0..100 {
            if err.norm() < 1e-13 * scale {
                return Ok(w);
            }
            let d = self.raw_derivative(w);
            if !(d.norm() > 0.0) {
                break;
            }
            let step = err / d;
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let trial = w + t * step;
                if trial.norm() <= 1.0 {
                    let trial_err = x - self.raw_forward(trial);
                    if trial_err.norm() < err.norm() {
                        w = trial;
                        err = trial_err;
                        improved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if err.norm() < 1e-9 * scale {
            Ok(w)
        } else {
            Err(Error::OutsideDomain(Point::new(x.re, x.im)))
        }
    }

    fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(a.dist(*b));
            }
        }
        d
    }

    /// Normalized map `T(x)` into the unit disk.
    pub fn forward(&self, x: Complex64) -> Result<Complex64> {
        let w = self.raw_inverse(x, self.w_pre)?;
        Ok(self.rot * mobius(w, self.w_pre))
    }

    /// Inverse `T^{-1}(zeta)` for `zeta` in the closed unit disk.
    pub fn inverse(&self, zeta: Complex64) -> Result<Complex64> {
        let v = zeta * self.rot.conj();
        let w = (v + self.w_pre) / (1.0 + self.w_pre.conj() * v);
        Ok(self.raw_forward(clamp_disk(w)))
    }

    /// Complex derivative `T'(x)`.
    pub fn derivative(&self, x: Complex64) -> Result<Complex64> {
        let w = self.raw_inverse(x, self.w_pre)?;
        let mu_d = (1.0 - self.w_pre.norm_sqr())
            / ((1.0 - self.w_pre.conj() * w) * (1.0 - self.w_pre.conj() * w));
        Ok(self.rot * mu_d / self.raw_derivative(w))
    }

    /// Largest residual of the solved side-length conditions, for
    /// verification.
    pub fn parameter_residual(&self) -> f64 {
        let n = self.vertices.len();
        let quad = self.quadrature();
        let base_i = quad.side_integral(0).norm();
        let base_l = self.vertices[1].dist(self.vertices[0]);
        (1..n - 1)
            .map(|k| {
                let li = self.vertices[(k + 1) % n].dist(self.vertices[k]);
                (quad.side_integral(k).norm() / base_i - li / base_l).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn mobius(w: Complex64, a: Complex64) -> Complex64 {
    (w - a) / (1.0 - a.conj() * w)
}

fn clamp_disk(w: Complex64) -> Complex64 {
    let r = w.norm();
    if r > 1.0 {
        w / r
    } else {
        w
    }
}

fn exponents(vertices: &[Point]) -> Result<Vec<f64>> {
    let n = vertices.len();
    let betas: Vec<f64> = (0..n)
        .map(|k| {
            let prev = vertices[(k + n - 1) % n];
            let next = vertices[(k + 1) % n];
            interior_angle(prev, vertices[k], next) / std::f64::consts::PI - 1.0
        })
        .collect();
    let closure: f64 = betas.iter().sum::<f64>() + 2.0;
    if closure.abs() > 1e-9 {
        return Err(Error::InvalidDomain(format!(
            "interior angles are inconsistent with a closed polygon (defect {closure:.3e})"
        )));
    }
    Ok(betas)
}

fn jacobi_rules(betas: &[f64]) -> Result<Vec<GaussJacobi>> {
    let zero = FiniteAboveNegOneF64::new(0.0)
        .ok_or_else(|| Error::InvalidArgument("invalid Jacobi exponent 0".into()))?;
    betas
        .iter()
        .map(|&b| {
            let beta = FiniteAboveNegOneF64::new(b).ok_or_else(|| {
                Error::InvalidDomain(format!("corner exponent {b} out of range"))
            })?;
            Ok(GaussJacobi::new(
                NonZeroUsize::new(GJ_DEGREE).unwrap(),
                zero,
                beta,
            ))
        })
        .collect()
}

/// `prod_k (1 - w/w_k)^{beta_k}`, optionally skipping one factor. Computed
/// through summed principal logarithms; `Re(1 - w conj(w_k)) >= 0` on the
/// closed disk, so no branch cut is crossed.
fn sc_product(
    w: Complex64,
    prevertices: &[Complex64],
    betas: &[f64],
    skip: Option<usize>,
) -> Complex64 {
    let mut log_sum = Complex64::new(0.0, 0.0);
    for (k, (&wk, &bk)) in prevertices.iter().zip(betas).enumerate() {
        if Some(k) == skip {
            continue;
        }
        log_sum += bk * (1.0 - w * wk.conj()).ln();
    }
    log_sum.exp()
}

struct Quadrature<'a> {
    betas: &'a [f64],
    prevertices: &'a [Complex64],
    gl: &'a GaussLegendre,
    gj: &'a [GaussJacobi],
}

impl Quadrature<'_> {
    /// Distance from `w` to the nearest prevertex other than `skip`.
    fn nearest(&self, w: Complex64, skip: Option<usize>) -> f64 {
        self.prevertices
            .iter()
            .enumerate()
            .filter(|(k, _)| Some(*k) != skip)
            .map(|(_, &p)| (w - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Compound Gauss-Legendre integration of the SC integrand along the
    /// straight segment `[a, b]` containing no prevertex; panel lengths are
    /// capped by the distance to the nearest prevertex (half rule).
    fn integrate_regular(&self, a: Complex64, b: Complex64) -> Complex64 {
        let total = (b - a).norm();
        if total == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let dir = (b - a) / total;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut s = 0.0;
        let mut panels = 0;
        while s < total && panels < 4000 {
            let here = a + dir * s;
            let step = (self.nearest(here, None)).max(1e-14).min(total - s);
            let h = 0.5 * step;
            let mid = s + h;
            for &(x, wt) in self.gl.as_node_weight_pairs() {
                let w = a + dir * (mid + h * x);
                acc += wt * h * dir * sc_product(w, self.prevertices, self.betas, None);
            }
            s += step;
            panels += 1;
        }
        acc
    }

    /// Integral from `a = w_sing` (a prevertex) toward `b`, peeling the
    /// endpoint singularity with the matching Gauss-Jacobi rule and
    /// finishing the regular remainder with compound panels.
    fn integrate_from_singular(&self, sing: usize, b: Complex64) -> Complex64 {
        let a = self.prevertices[sing];
        let total = (b - a).norm();
        if total == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let reach = self.nearest(a, Some(sing)) * 0.5;
        let b1 = if reach >= total { b } else { a + (b - a) * (reach / total) };
        let beta = self.betas[sing];
        // (1 - w/w_s) = t (1 - b1/w_s) along w = a + t (b1 - a)
        let h = 1.0 - b1 * a.conj();
        let h_pow = h.powf(beta);
        let scale = (b1 - a) * h_pow * 2f64.powf(-beta - 1.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(x, wt) in self.gj[sing].as_node_weight_pairs() {
            let t = 0.5 * (1.0 + x);
            let w = a + t * (b1 - a);
            acc += wt * sc_product(w, self.prevertices, self.betas, Some(sing));
        }
        let mut result = scale * acc;
        if (b - b1).norm() > 0.0 {
            result += self.integrate_regular(b1, b);
        }
        result
    }

    /// SC integral along the chord between consecutive prevertices `k` and
    /// `k+1`, split at the midpoint with singular rules on both halves.
    fn side_integral(&self, k: usize) -> Complex64 {
        let n = self.prevertices.len();
        let a = self.prevertices[k];
        let b = self.prevertices[(k + 1) % n];
        let mid = 0.5 * (a + b);
        self.integrate_from_singular(k, mid) - self.integrate_from_singular((k + 1) % n, mid)
    }

    /// `int_0^w`, optionally ending at prevertex `sing_end`.
    fn from_center(&self, w: Complex64, sing_end: Option<usize>) -> Complex64 {
        match sing_end {
            Some(k) => {
                let mid = 0.5 * w;
                self.integrate_regular(Complex64::new(0.0, 0.0), mid)
                    - self.integrate_from_singular(k, mid)
            }
            None => self.integrate_regular(Complex64::new(0.0, 0.0), w),
        }
    }
}

fn linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting; returns `None` on a
/// numerically singular system.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn polygon_centroid(vertices: &[Point]) -> Complex64 {
    let n = vertices.len();
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        let cross = a.x1 * b.x2 - b.x1 * a.x2;
        area2 += cross;
        cx += (a.x1 + b.x1) * cross;
        cy += (a.x2 + b.x2) * cross;
    }
    Complex64::new(cx / (3.0 * area2), cy / (3.0 * area2))
}
