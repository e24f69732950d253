//! TOML run configuration: domain, initial vorticity, numerics, tracers,
//! outputs, and optional post-run checks.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use std::path::Path;

use cornerflow::biot_savart::{init_from_grid, VorticityConfig};
use cornerflow::geometry::{DomainSpec, Point};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    #[serde(default)]
    pub vorticity: VorticitySection,
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub tracers: TracersConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: String,
    pub theta: Option<f64>,
    pub radius: Option<f64>,
    pub vertices: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VorticitySection {
    #[serde(default)]
    pub background_a: f64,
    #[serde(default)]
    pub gaussian_blob: Vec<GaussianBlob>,
    #[serde(default)]
    pub patch: Vec<PatchField>,
    #[serde(default)]
    pub odd_pair: Vec<GaussianBlob>,
}

/// `omega(p) = amplitude * exp(-|p - center|^2 / width^2)`; as an
/// `odd_pair` the mirrored half carries the opposite sign.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBlob {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
}

/// Constant `amplitude` inside a simple polygon.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchField {
    pub polygon: Vec<[f64; 2]>,
    pub amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Blob grid spacing.
    pub h: f64,
    /// Core regularization radius (disk plane).
    pub delta: f64,
    pub dt0: f64,
    pub t_end: f64,
    #[serde(default = "default_eps_hit")]
    pub eps_hit: f64,
    pub record_every: f64,
}

fn default_eps_hit() -> f64 {
    cornerflow::transport::EPS_HIT
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracersConfig {
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    /// Seeds on the symmetry axis, given as `x1` values.
    #[serde(default)]
    pub axis_seeds: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub trajectory_csv: String,
    pub summary_json: String,
    pub report_json: String,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            trajectory_csv: "trajectories.csv".into(),
            summary_json: "summary.json".into(),
            report_json: "report.json".into(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default)]
    pub lyapunov: bool,
    #[serde(default)]
    pub conservation: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let n = &self.numerics;
        if !(n.h > 0.0 && n.delta >= 0.0 && n.dt0 > 0.0 && n.t_end > 0.0) {
            bail!("numerics: h, dt0, t_end must be positive and delta nonnegative");
        }
        if !(n.record_every > 0.0 && n.eps_hit > 0.0 && n.eps_hit < 1.0) {
            bail!("numerics: record_every > 0 and eps_hit in (0, 1) required");
        }
        let odd = !self.vorticity.odd_pair.is_empty();
        if odd
            && (!self.vorticity.gaussian_blob.is_empty()
                || !self.vorticity.patch.is_empty()
                || self.vorticity.background_a != 0.0)
        {
            bail!("vorticity: odd_pair cannot be combined with other initial data");
        }
        for g in self
            .vorticity
            .gaussian_blob
            .iter()
            .chain(&self.vorticity.odd_pair)
        {
            if !(g.width > 0.0) {
                bail!("vorticity: gaussian width must be positive");
            }
        }
        for p in &self.vorticity.patch {
            if p.polygon.len() < 3 {
                bail!("vorticity: patch polygon needs at least 3 vertices");
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let d = &self.domain;
        match d.kind.as_str() {
            "disk" => Ok(DomainSpec::disk()),
            "sector" => {
                let theta = d.theta.ok_or_else(|| anyhow!("domain: sector needs theta"))?;
                let radius = d.radius.unwrap_or(1.0);
                DomainSpec::sector(theta, radius).map_err(|e| anyhow!("domain: {e}"))
            }
            "polygon" => {
                let verts = d
                    .vertices
                    .as_ref()
                    .ok_or_else(|| anyhow!("domain: polygon needs vertices"))?
                    .iter()
                    .map(|v| Point::new(v[0], v[1]))
                    .collect::<Vec<_>>();
                DomainSpec::polygon(verts).map_err(|e| anyhow!("domain: {e}"))
            }
            other => bail!("domain: unknown kind {other:?} (disk | sector | polygon)"),
        }
    }

    /// Pointwise initial vorticity (the stored, upper-half sign for odd data).
    fn omega0(&self, p: Point) -> f64 {
        let mut w = 0.0;
        for g in &self.vorticity.gaussian_blob {
            let c = Point::new(g.center[0], g.center[1]);
            w += g.amplitude * (-(p.dist(c) / g.width).powi(2)).exp();
        }
        for patch in &self.vorticity.patch {
            if point_in_polygon(p, &patch.polygon) {
                w += patch.amplitude;
            }
        }
        for g in &self.vorticity.odd_pair {
            let c = Point::new(g.center[0], g.center[1]);
            w += g.amplitude * (-(p.dist(c) / g.width).powi(2)).exp();
        }
        w
    }

    /// Discretizes the configured fields on the blob grid. Odd data keeps
    /// only the upper-half cells and sets the odd-symmetric mode.
    pub fn build_vorticity(&self, domain: &DomainSpec) -> Result<VorticityConfig> {
        let odd = !self.vorticity.odd_pair.is_empty();
        let n = &self.numerics;
        let mut vort = init_from_grid(
            domain,
            |p| {
                if odd && p.x2 <= 0.0 {
                    0.0
                } else {
                    self.omega0(p)
                }
            },
            n.h,
            n.delta,
        )?;
        vort.background_a = self.vorticity.background_a;
        vort.odd_symmetric = odd;
        vort.validate(domain)
            .map_err(|e| anyhow!("vorticity: {e}"))?;
        Ok(vort)
    }

    /// `sup |omega_0|` over the blob grid, for the Lyapunov bound.
    pub fn omega_inf(&self, vort: &VorticityConfig) -> f64 {
        let h2 = self.numerics.h * self.numerics.h;
        vort.blobs
            .iter()
            .fold(0.0f64, |m, b| m.max(b.circulation.abs() / h2))
    }

    pub fn tracer_points(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = self
            .tracers
            .points
            .iter()
            .map(|p| Point::new(p[0], p[1]))
            .collect();
        pts.extend(self.tracers.axis_seeds.iter().map(|&x| Point::new(x, 0.0)));
        pts
    }
}

fn point_in_polygon(p: Point, verts: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = verts.len();
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        if (a[1] > p.x2) != (b[1] > p.x2) {
            let t = (p.x2 - a[1]) / (b[1] - a[1]);
            if p.x1 < a[0] + t * (b[0] - a[0]) {
                inside = !inside;
            }
        }
    }
    inside
}
