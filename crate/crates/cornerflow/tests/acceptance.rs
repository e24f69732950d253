//! Acceptance suite: one line per criterion, run in order. Build with
//! `cargo test --test acceptance` (the workspace test profile is optimized;
//! the runtime budgets assume that).

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cornerflow::biot_savart::{
    continuity_modulus_check, init_from_grid, velocity, velocity_batch, velocity_odd, AnnulusSpec,
    SummationMethod, VorticityConfig,
};
use cornerflow::conformal::ConformalMap;
use cornerflow::diagnostics::{
    axis_velocity_exponent, hit_time_estimate, lemma_ratio_parts, lyapunov_bound_check,
    lyapunov_series,
};
use cornerflow::geometry::{DomainSpec, Point};
use cornerflow::greens::{green_disk, kernel_disk};
use cornerflow::transport::{run, RunParams, SimState, TracerStatus, TrajectoryRecord};
use cornerflow::tree::TreecodeParams;

// ---------------------------------------------------------------------------
// scenario fixtures (shared between criteria 4, 5 and 9)

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

struct Scenario {
    domain: DomainSpec,
    map: ConformalMap,
    vort: VorticityConfig,
    tracers: Vec<Point>,
    params: RunParams,
    omega_inf: f64,
}

/// Criterion 4 scenario: convex sector, mixed-sign two-patch data in the
/// inner half (mirrors `configs/convex_sector.toml`).
fn convex_scenario() -> Scenario {
    let wedge_pos: [[f64; 2]; 8] = [
        [0.068829, -0.098298],
        [0.105954, -0.056337],
        [0.119982, -0.002094],
        [0.108757, 0.050714],
        [0.380649, 0.177500],
        [0.419936, -0.007330],
        [0.370838, -0.197178],
        [0.240902, -0.344044],
    ];
    let wedge_neg: [[f64; 2]; 6] = [
        [0.105954, 0.056337],
        [0.089875, 0.079514],
        [0.068829, 0.098298],
        [0.258109, 0.368618],
        [0.337030, 0.298179],
        [0.397327, 0.211262],
    ];
    let domain = DomainSpec::sector(2.0 * PI / 3.0, 1.0).unwrap();
    let map = ConformalMap::build(&domain).unwrap();
    let h = 0.009;
    let vort = init_from_grid(
        &domain,
        |p| {
            let mut w = 0.0;
            if point_in_polygon(p, &wedge_pos) {
                w += 0.75;
            }
            if point_in_polygon(p, &wedge_neg) {
                w -= 0.25;
            }
            w
        },
        h,
        0.01,
    )
    .unwrap();
    let omega_inf = vort
        .blobs
        .iter()
        .fold(0.0f64, |m, b| m.max(b.circulation.abs() / (h * h)));
    Scenario {
        domain,
        map,
        vort,
        tracers: vec![
            Point::new(0.25, 0.0),
            Point::new(0.3, 0.12),
            Point::new(0.2, -0.15),
        ],
        params: RunParams {
            t_end: 20.0,
            dt0: 0.02,
            record_every: 0.5,
            eps_hit: 1e-6,
        },
        omega_inf,
    }
}

/// Criterion 5 scenario: concave sector with odd gaussian data, negative
/// circulation above the axis (mirrors `configs/concave_collision.toml`).
fn concave_scenario(theta: f64) -> Scenario {
    let domain = DomainSpec::sector(theta, 1.0).unwrap();
    let map = ConformalMap::build(&domain).unwrap();
    let center = Point::new(0.4, 0.3);
    let h = 0.03;
    let mut vort = init_from_grid(
        &domain,
        |p| {
            if p.x2 <= 0.0 {
                0.0
            } else {
                -6.0 * (-(p.dist(center) / 0.08).powi(2)).exp()
            }
        },
        h,
        0.025,
    )
    .unwrap();
    vort.odd_symmetric = true;
    let omega_inf = vort
        .blobs
        .iter()
        .fold(0.0f64, |m, b| m.max(b.circulation.abs() / (h * h)));
    Scenario {
        domain,
        map,
        vort,
        tracers: vec![Point::new(0.5, 0.0)],
        params: RunParams {
            t_end: 12.0,
            dt0: 0.02,
            record_every: 0.25,
            eps_hit: 1e-3,
        },
        omega_inf,
    }
}

fn run_scenario(sc: &Scenario, dt0: f64) -> (TrajectoryRecord, SimState) {
    let state = SimState::new(sc.vort.clone(), sc.tracers.clone());
    let params = RunParams { dt0, ..sc.params };
    run(&sc.map, &sc.domain, state, &params).expect("scenario run failed")
}

static CONVEX: OnceLock<Scenario> = OnceLock::new();
static CONCAVE: OnceLock<Scenario> = OnceLock::new();
static RUN4: OnceLock<(TrajectoryRecord, SimState)> = OnceLock::new();
static RUN4_HALF: OnceLock<(TrajectoryRecord, SimState)> = OnceLock::new();
static RUN5: OnceLock<(TrajectoryRecord, SimState)> = OnceLock::new();
static RUN5_HALF: OnceLock<(TrajectoryRecord, SimState)> = OnceLock::new();

fn convex() -> &'static Scenario {
    CONVEX.get_or_init(convex_scenario)
}

fn concave() -> &'static Scenario {
    CONCAVE.get_or_init(|| concave_scenario(1.5 * PI))
}

fn run4() -> &'static (TrajectoryRecord, SimState) {
    RUN4.get_or_init(|| run_scenario(convex(), 0.02))
}

fn run5() -> &'static (TrajectoryRecord, SimState) {
    RUN5.get_or_init(|| run_scenario(concave(), 0.02))
}

// ---------------------------------------------------------------------------
// criteria

/// Conformal corner exponents: sector 3pi/2 apex in closed form, unit
/// square corners through the SC backend.
fn criterion_1() -> Result<String, String> {
    let domain = DomainSpec::sector(1.5 * PI, 1.0).unwrap();
    let map = ConformalMap::build(&domain).unwrap();
    let fit = map
        .verify_corner_exponent(&domain, 0, 1e-12, 1e-10, 9)
        .map_err(|e| e.to_string())?;
    let map_err = (fit.fitted_map_slope - 2.0 / 3.0).abs();
    if map_err > 1e-6 {
        return Err(format!("sector map slope off by {map_err:.2e}"));
    }
    let fit = map
        .verify_corner_exponent(&domain, 0, 1e-9, 1e-7, 9)
        .map_err(|e| e.to_string())?;
    let deriv_err = (fit.fitted_derivative_slope - (-1.0 / 3.0)).abs();
    if deriv_err > 1e-4 {
        return Err(format!("sector derivative slope off by {deriv_err:.2e}"));
    }

    let square = DomainSpec::polygon(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ])
    .unwrap();
    let sc = ConformalMap::build(&square).unwrap();
    let mut worst = 0.0f64;
    for k in 0..4 {
        let fit = sc
            .verify_corner_exponent(&square, k, 1e-4, 1e-2, 9)
            .map_err(|e| e.to_string())?;
        worst = worst.max((fit.fitted_map_slope - 2.0).abs());
    }
    if worst > 0.04 {
        return Err(format!("square corner slope off by {worst:.2e} (> 2%)"));
    }
    Ok(format!(
        "sector 2/3 to {map_err:.1e}, -1/3 to {deriv_err:.1e}; square slope 2 to {worst:.1e}"
    ))
}

/// Lemma boundedness table: for theta = pi the ratio I/|ln(1-|xi|)| is the
/// bounded quantity; for theta < pi the corner weight removes the log and
/// the integral itself is bounded. Either way the table must stay within a
/// factor 3 across four decades of 1 - |xi|.
fn criterion_2() -> Result<String, String> {
    let radii = [0.9, 0.99, 0.999, 0.9999];
    let mut spreads = Vec::new();
    for &theta in &[PI / 2.0, 2.0 * PI / 3.0, PI] {
        let mut bounded = Vec::new();
        for &rho in &radii {
            let parts = lemma_ratio_parts(theta, Point::new(-rho, 0.0), 1e-4)
                .map_err(|e| e.to_string())?;
            bounded.push(if (theta - PI).abs() < 1e-9 {
                parts.ratio
            } else {
                parts.inner + parts.outer
            });
        }
        let max = bounded.iter().cloned().fold(f64::MIN, f64::max);
        let min = bounded.iter().cloned().fold(f64::MAX, f64::min);
        if !(max / min < 3.0) {
            return Err(format!("theta {theta:.3}: spread {:.3} >= 3", max / min));
        }
        spreads.push(max / min);
    }
    // quadrature self-convergence under tolerance halving
    let theta = 2.0 * PI / 3.0;
    let xi = Point::new(-0.99, 0.0);
    let a = lemma_ratio_parts(theta, xi, 1e-4).map_err(|e| e.to_string())?;
    let b = lemma_ratio_parts(theta, xi, 5e-5).map_err(|e| e.to_string())?;
    let drift = ((a.ratio - b.ratio) / b.ratio).abs();
    if drift > 1e-3 {
        return Err(format!("self-convergence drift {drift:.2e} > 1e-3"));
    }
    Ok(format!(
        "spreads {:.2}/{:.2}/{:.2} < 3, convergence {drift:.1e}",
        spreads[0], spreads[1], spreads[2]
    ))
}

/// Kernel correctness on the disk: boundary vanishing, perpendicular
/// gradient by finite differences, boundary tangency.
fn criterion_3() -> Result<String, String> {
    let sources = [
        Complex64::new(0.3, 0.1),
        Complex64::new(-0.6, 0.5),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.05, -0.72),
    ];
    let mut worst_g = 0.0f64;
    for k in 0..64 {
        let zeta = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0);
        for &z in &sources {
            worst_g = worst_g.max(green_disk(zeta, z).abs());
        }
    }
    if worst_g > 1e-10 {
        return Err(format!("green_disk boundary residual {worst_g:.2e}"));
    }

    let mut rng = StdRng::seed_from_u64(11);
    let mut worst_fd = 0.0f64;
    let fd = 1e-5;
    for _ in 0..40 {
        let zeta = Complex64::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
        let z = Complex64::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
        if (zeta - z).norm() < 0.1 {
            continue;
        }
        let g1 = (green_disk(zeta + fd, z) - green_disk(zeta - fd, z)) / (2.0 * fd);
        let g2 = (green_disk(zeta + Complex64::new(0.0, fd), z)
            - green_disk(zeta - Complex64::new(0.0, fd), z))
            / (2.0 * fd);
        let k = kernel_disk(zeta, z);
        worst_fd = worst_fd.max((k.re - (-g2)).abs().max((k.im - g1).abs()));
    }
    if worst_fd > 1e-6 {
        return Err(format!("kernel vs FD gradient residual {worst_fd:.2e}"));
    }

    let mut worst_un = 0.0f64;
    for k in 0..64 {
        let zeta = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0 + 0.013);
        let u: Complex64 = sources.iter().map(|&z| kernel_disk(zeta, z)).sum();
        worst_un = worst_un.max((u * zeta.conj()).re.abs());
    }
    if worst_un > 1e-10 {
        return Err(format!("boundary normal flux {worst_un:.2e}"));
    }
    Ok(format!(
        "boundary {worst_g:.1e}, FD {worst_fd:.1e}, tangency {worst_un:.1e}"
    ))
}

/// Convex-corner confinement at desk scale: no boundary hits, bounded
/// approach, Lyapunov bound without an increasing trend.
fn criterion_4() -> Result<String, String> {
    let sc = convex();
    let (record, _) = run4();
    if record.blob_hits != 0 {
        return Err(format!("{} blob(s) hit the boundary", record.blob_hits));
    }
    for s in &record.tracers {
        if s.status != TracerStatus::TEndReached {
            return Err(format!("tracer {} did not finish: {:?}", s.tracer_id, s.status));
        }
    }
    if !(record.min_boundary_gap > 1e-4) {
        return Err(format!(
            "min boundary gap {:.2e} <= 1e-4",
            record.min_boundary_gap
        ));
    }
    let entry = lyapunov_bound_check(&lyapunov_series(record), sc.omega_inf)
        .map_err(|e| e.to_string())?;
    if !entry.passed {
        return Err(format!("lyapunov trend slope {:.2e}", entry.fitted));
    }
    Ok(format!(
        "no hits at N = {}, min gap {:.1e}, lyapunov slope {:.1e}",
        sc.vort.blobs.len(),
        record.min_boundary_gap,
        entry.fitted
    ))
}

/// Concave-corner collision: exact odd symmetry on the axis, the 2pi/theta-1
/// exponent, a recorded finite hit time matching the power-law fit, and the
/// exponent again at 7pi/4.
fn criterion_5() -> Result<String, String> {
    let sc = concave();
    let mut worst_u2 = 0.0f64;
    for k in 1..9 {
        let x = Point::new(0.1 * k as f64, 0.0);
        let u = velocity_odd(&sc.map, &sc.domain, &sc.vort, x).map_err(|e| e.to_string())?;
        worst_u2 = worst_u2.max(u.x2.abs());
    }
    if worst_u2 > 1e-13 {
        return Err(format!("axis u2 residual {worst_u2:.2e}"));
    }

    let entry =
        axis_velocity_exponent(&sc.map, &sc.domain, &sc.vort, 0.9).map_err(|e| e.to_string())?;
    if !entry.passed {
        return Err(format!("nu_hat {:.4} not within 0.05 of 1/3", entry.fitted));
    }
    let nu_hat = entry.fitted;

    let (record, _) = run5();
    let series = &record.tracers[0];
    let t_hit = match series.status {
        TracerStatus::HitBoundary { t_hit } if t_hit.is_finite() => t_hit,
        ref s => return Err(format!("axis tracer did not hit: {s:?}")),
    };
    let (t_fit, _rms) = hit_time_estimate(series, 1.0 / 3.0).map_err(|e| e.to_string())?;
    let rel = ((t_fit - t_hit) / t_hit).abs();
    if rel > 0.05 {
        return Err(format!(
            "hit-time fit {t_fit:.3} vs recorded {t_hit:.3} ({:.1}% off)",
            100.0 * rel
        ));
    }

    let sc7 = concave_scenario(1.75 * PI);
    let entry7 =
        axis_velocity_exponent(&sc7.map, &sc7.domain, &sc7.vort, 0.9).map_err(|e| e.to_string())?;
    if !entry7.passed {
        return Err(format!(
            "7pi/4: nu_hat {:.4} not within 0.05 of 1/7",
            entry7.fitted
        ));
    }
    Ok(format!(
        "u2 {worst_u2:.1e}, nu {nu_hat:.3}, t_hit {t_hit:.3} (fit {t_fit:.3}), nu(7pi/4) {:.3}",
        entry7.fitted
    ))
}

/// Image identity: the odd-mode kernel equals the full-domain sum over the
/// mirrored blob set.
fn criterion_6() -> Result<String, String> {
    let sc = concave();
    let mut mirrored = VorticityConfig {
        blobs: sc.vort.blobs.clone(),
        background_a: 0.0,
        odd_symmetric: false,
    };
    for b in &sc.vort.blobs {
        let mut m = *b;
        m.position = Point::new(b.position.x1, -b.position.x2);
        m.circulation = -b.circulation;
        mirrored.blobs.push(m);
    }
    let mut rng = StdRng::seed_from_u64(23);
    let theta = 1.5 * PI;
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 50 {
        let r = rng.gen_range(0.1..0.9);
        let phi = rng.gen_range(0.03..theta / 2.0 - 0.03);
        let x = Point::new(r * phi.cos(), r * phi.sin());
        if !sc.domain.contains(x) {
            continue;
        }
        let a = velocity_odd(&sc.map, &sc.domain, &sc.vort, x).map_err(|e| e.to_string())?;
        let b = velocity(&sc.map, &sc.domain, &mirrored, x).map_err(|e| e.to_string())?;
        worst = worst.max((a - b).norm());
        n += 1;
    }
    if worst > 1e-10 {
        return Err(format!("odd vs mirrored discrepancy {worst:.2e}"));
    }
    Ok(format!("max discrepancy {worst:.1e} at 50 points"))
}

/// Log-Lipschitz modulus: |u(x) - u(x')| / phi(|x - x'|) stays flat down to
/// separation 1e-6 for a dense patch on the disk.
fn criterion_7() -> Result<String, String> {
    let domain = DomainSpec::disk();
    let map = ConformalMap::build(&domain).unwrap();
    let vort = init_from_grid(
        &domain,
        |p| if p.norm() < 0.5 { 1.0 } else { 0.0 },
        0.05,
        0.02,
    )
    .unwrap();
    let entry = continuity_modulus_check(
        &map,
        &domain,
        &vort,
        AnnulusSpec {
            center: Point::new(0.3, 0.0),
            r_inner: 0.05,
            r_outer: 0.2,
        },
    )
    .map_err(|e| e.to_string())?;
    if !entry.passed {
        return Err(format!("modulus log-slope {:.3}", entry.fitted));
    }
    Ok(format!(
        "log-slope {:.3} over {} separations, N = {}",
        entry.fitted,
        entry.samples,
        vort.blobs.len()
    ))
}

/// Treecode accuracy and speedup against direct summation.
fn criterion_8() -> Result<String, String> {
    let domain = DomainSpec::disk();
    let map = ConformalMap::build(&domain).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let mut vort = VorticityConfig::default();
    while vort.blobs.len() < 50_000 {
        let p = Point::new(rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95));
        if p.norm() < 0.95 {
            vort.blobs.push(cornerflow::biot_savart::VortexBlob {
                position: p,
                circulation: rng.gen_range(-1.0..1.0),
                core_delta: 0.0,
            });
        }
    }
    let mut targets = Vec::new();
    while targets.len() < 1_000 {
        let p = Point::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
        if p.norm() < 0.9 {
            targets.push(p);
        }
    }
    // best of 3 on both sides: single-shot wall clock is noisy
    let mut t_direct = f64::INFINITY;
    let mut direct = Vec::new();
    for _ in 0..3 {
        let t0 = Instant::now();
        direct = velocity_batch(&map, &domain, &vort, &targets, SummationMethod::Direct)
            .map_err(|e| e.to_string())?;
        t_direct = t_direct.min(t0.elapsed().as_secs_f64());
    }
    let mut t_tree = f64::INFINITY;
    let mut tree = Vec::new();
    for _ in 0..3 {
        let t0 = Instant::now();
        tree = velocity_batch(
            &map,
            &domain,
            &vort,
            &targets,
            SummationMethod::Treecode(TreecodeParams::default()),
        )
        .map_err(|e| e.to_string())?;
        t_tree = t_tree.min(t0.elapsed().as_secs_f64());
    }

    let scale = direct.iter().fold(0.0f64, |m, u| m.max(u.norm()));
    let mut worst = 0.0f64;
    for (a, b) in direct.iter().zip(&tree) {
        worst = worst.max((*a - *b).norm() / scale);
    }
    if worst > 1e-6 {
        return Err(format!("treecode relative error {worst:.2e}"));
    }
    let speedup = t_direct / t_tree;
    if !(speedup > 5.0) {
        return Err(format!(
            "speedup {speedup:.2} (direct {t_direct:.3} s, treecode {t_tree:.3} s)"
        ));
    }
    Ok(format!("rel err {worst:.1e}, speedup {speedup:.1}x"))
}

/// Numerical hygiene: dt-halving stability of the scenario runs and
/// bitwise determinism.
fn criterion_9() -> Result<String, String> {
    let conv = convex();
    let conc = concave();
    let (_, end4) = run4();
    let (_, end4h) = RUN4_HALF.get_or_init(|| run_scenario(conv, 0.01));
    let mut worst4 = 0.0f64;
    for (a, b) in end4.tracers.iter().zip(&end4h.tracers) {
        worst4 = worst4.max(a.dist(*b));
    }
    if worst4 > 1e-5 {
        return Err(format!("convex dt-halving drift {worst4:.2e}"));
    }

    let (_, end5) = run5();
    let (_, end5h) = RUN5_HALF.get_or_init(|| run_scenario(conc, 0.01));
    let mut worst5 = 0.0f64;
    for (a, b) in end5.tracers.iter().zip(&end5h.tracers) {
        worst5 = worst5.max(a.dist(*b));
    }
    if worst5 > 1e-5 {
        return Err(format!("concave dt-halving drift {worst5:.2e}"));
    }

    let (rec_a, end_a) = run_scenario(conc, 0.02);
    let (rec_b, _) = run5();
    let identical = end_a
        .tracers
        .iter()
        .zip(&end5.tracers)
        .all(|(a, b)| a.x1.to_bits() == b.x1.to_bits() && a.x2.to_bits() == b.x2.to_bits())
        && rec_a.min_boundary_gap.to_bits() == rec_b.min_boundary_gap.to_bits();
    if !identical {
        return Err("repeated run is not bitwise identical".into());
    }
    Ok(format!(
        "dt-halving drift {worst4:.1e} / {worst5:.1e}, reruns bitwise identical"
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: Vec<(&str, f64, fn() -> Result<String, String>)> = vec![
        ("conformal corner exponents", 10.0, criterion_1),
        ("lemma boundedness table", 120.0, criterion_2),
        ("disk kernel correctness", 5.0, criterion_3),
        ("convex sector confinement", 300.0, criterion_4),
        ("concave corner collision", 600.0, criterion_5),
        ("odd image identity", 5.0, criterion_6),
        ("log-Lipschitz modulus", 60.0, criterion_7),
        ("treecode accuracy and speedup", 120.0, criterion_8),
        ("dt-halving and determinism", 600.0, criterion_9),
    ];
    // positional args select criteria by number or label substring
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    for (i, (label, budget, f)) in criteria.iter().enumerate() {
        if !filters.is_empty()
            && !filters
                .iter()
                .any(|f| f == &(i + 1).to_string() || label.contains(f.as_str()))
        {
            continue;
        }
        let t0 = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let dt = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) if dt <= *budget => {
                println!("criterion {} ({label}): PASS [{dt:.1} s] — {detail}", i + 1);
            }
            Ok(detail) => {
                failures += 1;
                println!(
                    "criterion {} ({label}): FAIL [{dt:.1} s over {budget:.0} s budget] — {detail}",
                    i + 1
                );
            }
            Err(msg) => {
                failures += 1;
                println!("criterion {} ({label}): FAIL [{dt:.1} s] — {msg}", i + 1);
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
