//! Acceptance criteria 1 to 12. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nematic_core::diagnostics::{
    blowup_rate_scan, box_counts, contact_report, dimension_estimate, gamma_study, grad_decay_check_with,
    h2_bound_check, nesting_holds, BlowupScanSpec, DEFAULT_KAPPA,
};
use nematic_core::elastic::{elastic_gradient, mode_operator, ElasticParams};
use nematic_core::flow::{energy_identity_residual, run_with, SchemeConfig, SchemeKind, Trajectory};
use nematic_core::grid::{QField, SpectralGrid};
use nematic_core::initial::{generate_initial, Geometry, InitialSpec, MarginProfile};
use nematic_core::potential::{constant_c1, domain_diameter, moreau_yosida, psi, psi_grad};
use nematic_core::tensor::QTensor;

use common::{primal_psi, random_field, random_physical};

struct Outcome {
    pass: bool,
    detail: String,
    runs: Vec<(Trajectory, ElasticParams)>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail, runs: Vec::new() }
    }
}

fn grid(dim: usize, n: usize) -> SpectralGrid {
    SpectralGrid::new(dim, n).unwrap()
}

fn params(l1: f64, l2: f64, alpha: f64) -> ElasticParams {
    ElasticParams::new(l1, l2, 0.0, alpha, 1.0 / TAU).unwrap()
}

fn potential_correctness() -> Outcome {
    let origin = (psi(&QTensor::ZERO).unwrap() + (4.0 * PI).ln()).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let tensors: Vec<QTensor> = (0..20).map(|_| random_physical(&mut rng, 0.02)).collect();
    let primal = std::thread::scope(|s| {
        let handles: Vec<_> = tensors.iter().map(|q| s.spawn(move || (psi(q).unwrap() - primal_psi(q)).abs())).collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold(0.0, f64::max)
    });
    let mut grad_err: f64 = 0.0;
    for _ in 0..50 {
        let q = random_physical(&mut rng, 0.02);
        let g = psi_grad(&q).unwrap();
        let h = 1e-5;
        let fd: [f64; 5] = std::array::from_fn(|a| {
            let mut c = q.coords();
            c[a] += h;
            let up = psi(&QTensor::new(c).unwrap()).unwrap();
            c[a] -= 2.0 * h;
            let down = psi(&QTensor::new(c).unwrap()).unwrap();
            (up - down) / (2.0 * h)
        });
        grad_err = grad_err.max((QTensor::new(fd).unwrap() - g).norm() / g.norm().max(1.0));
    }
    Outcome::new(
        origin <= 1e-10 && primal <= 1e-4 && grad_err <= 1e-6,
        format!("|psi(0) + ln 4pi| = {origin:.1e}, max dual-primal gap = {primal:.1e}, max gradient error = {grad_err:.1e}"),
    )
}

/// `I0(x) e^{-x}` from `(1/pi) int_0^pi e^{x (cos t - 1)} dt` by the trapezoid rule.
fn i0e_integral(x: f64) -> f64 {
    let m = 2000;
    let h = PI / m as f64;
    let f = |t: f64| (x * (t.cos() - 1.0)).exp();
    let inner: f64 = (1..m).map(|k| f(k as f64 * h)).sum();
    (0.5 * (f(0.0) + f(PI)) + inner) * h / PI
}

fn blowup_rate() -> Outcome {
    let spec = BlowupScanSpec::default();
    let table = blowup_rate_scan(&spec).unwrap();
    let c1 = constant_c1();
    let configs = table.rows.iter().map(|r| r.configuration).max().map_or(0, |m| m + 1);
    let window_min = table
        .rows
        .iter()
        .filter(|r| r.margin >= 1e-6 * (1.0 - 1e-12) && r.margin <= 1e-2 * (1.0 + 1e-12))
        .map(|r| r.product)
        .fold(f64::INFINITY, f64::min);
    let ratio = |x: f64| i0e_integral(x) / i0e_integral(0.5 * x);
    let grid_min = (1..=40_000).map(|k| ratio(k as f64 * 5e-4)).fold(f64::INFINITY, f64::min);
    let oracle = 3f64.sqrt() / (9.0 * (2.0 * PI).sqrt() * std::f64::consts::E) * grid_min;
    let c1_err = (c1 - oracle).abs() / oracle;
    Outcome::new(
        configs == 20 && window_min >= c1 && c1_err <= 1e-6,
        format!("{configs} configurations, min product = {window_min:.6e} vs C1 = {c1:.6e}, C1 oracle relative error = {c1_err:.1e}"),
    )
}

fn coercivity_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let g = grid(3, 32);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..5 {
        let l1 = rng.gen_range(0.01..2.0);
        let l2 = rng.gen_range(-0.16..0.16) * l1;
        let l3 = rng.gen_range(-0.16..0.16) * l1;
        let p = ElasticParams::new(l1, l2, l3, 0.0, 1.0 / TAU).unwrap();
        for idx in 0..g.points() {
            let eig = mode_operator(g.wavevector(idx), &p).symmetric_eigenvalues();
            let (lb, ub) = p.spectrum_bounds(g.k_sq(idx));
            let scale = ub.max(1e-300);
            worst = worst.max((lb - eig.min()) / scale).max((eig.max() - ub) / scale);
        }
    }
    Outcome::new(worst <= 1e-12, format!("5 parameter sets, 32^3 modes, largest relative excursion = {worst:.1e}"))
}

fn angle_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let fields: Vec<(QField, ElasticParams)> = (0..100)
        .map(|_| {
            let l1 = rng.gen_range(0.01..1.0);
            let l2 = rng.gen_range(-0.33..0.33) * l1;
            let f = random_field(&mut rng, grid(3, 16), 3, 0.01);
            (f, params(l1, l2, 0.0))
        })
        .collect();
    let slack = std::thread::scope(|s| {
        let handles: Vec<_> = fields
            .chunks(10)
            .map(|chunk| {
                s.spawn(move || {
                    chunk
                        .iter()
                        .map(|(f, p)| {
                            let dg = elastic_gradient(f, p);
                            let mut pg = QField::zeros(f.grid);
                            for i in 0..f.points() {
                                pg.set(i, &psi_grad(&f.get(i)).unwrap());
                            }
                            let scale = dg.norm() * pg.norm();
                            (dg.inner(&pg) + p.angle_bound() * scale) / scale
                        })
                        .fold(f64::INFINITY, f64::min)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold(f64::INFINITY, f64::min)
    });
    Outcome::new(slack >= 0.0, format!("100 fields on 16^3, min relative slack = {slack:.3e}"))
}

fn energy_identity() -> Outcome {
    let p = params(0.1, 0.01, 1.0);
    let q0 = generate_initial(&InitialSpec::RandomBandlimited { kmax: 3, margin_min: 0.05 }, grid(2, 32), 5).unwrap();
    let runs: Vec<Trajectory> = [1e-3, 5e-4]
        .map(|tau| run_with(&q0, 1.0, &SchemeConfig::new(SchemeKind::SemiImplicit, tau), &p, 10).unwrap())
        .into();
    let res: Vec<f64> = runs.iter().map(|t| energy_identity_residual(t, 0.0, 1.0).relative).collect();
    let ratio = res[0] / res[1];
    let stalled = runs.iter().any(|t| t.stall.is_some());
    // reported only: the same identity with int ||dQ/dt||^2 integrated exactly for the piecewise-linear interpolant
    let interval: Vec<f64> = runs
        .iter()
        .map(|t| {
            let r = &t.rows;
            let lhs: f64 = r
                .windows(2)
                .map(|w| (w[1].t - w[0].t) * (w[1].velocity.powi(2) + 0.5 * (w[0].slope_l2.powi(2) + w[1].slope_l2.powi(2))))
                .sum();
            let drop = r[0].energy - r[r.len() - 1].energy;
            (lhs - 2.0 * drop).abs() / drop
        })
        .collect();
    Outcome {
        pass: !stalled && res[0] <= 0.05 && (1.6..=2.4).contains(&ratio),
        detail: format!(
            "relative residual {:.3e} at tau = 1e-3, {:.3e} at 5e-4, ratio {ratio:.3}; with interval speeds {:.3e}, {:.3e}, ratio {:.3}",
            res[0],
            res[1],
            interval[0],
            interval[1],
            interval[0] / interval[1]
        ),
        runs: runs.into_iter().map(|t| (t, p)).collect(),
    }
}

fn slope_monotonicity() -> Outcome {
    let p = params(0.1, 0.01, 1.0);
    let q0 = generate_initial(&InitialSpec::RandomBandlimited { kmax: 3, margin_min: 0.02 }, grid(2, 32), 6).unwrap();
    let traj = run_with(&q0, 0.5, &SchemeConfig::new(SchemeKind::MinimizingMovement, 5e-3), &p, 10).unwrap();
    let weighted: Vec<f64> = traj.rows.iter().map(|r| (-2.0 * p.alpha * r.t).exp() * r.slope_l2).collect();
    let worst = weighted.windows(2).map(|w| w[1] / w[0] - 1.0).fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: traj.stall.is_none() && worst <= 0.02,
        detail: format!("{} steps, largest per-step relative increase = {worst:.3e}", traj.rows.len() - 1),
        runs: vec![(traj, p)],
    }
}

fn gronwall_decay() -> Outcome {
    let p = params(0.15, 0.005, 3.5);
    let mut lines = Vec::new();
    let mut pass = true;
    let mut runs = Vec::new();
    for seed in 0..3 {
        let q0 = generate_initial(&InitialSpec::RandomBandlimited { kmax: 3, margin_min: 0.05 }, grid(2, 32), seed).unwrap();
        let traj = run_with(&q0, 2.0, &SchemeConfig::new(SchemeKind::SemiImplicit, 1e-3), &p, 20).unwrap();
        let report = grad_decay_check_with(&traj, &p, DEFAULT_KAPPA, 0.0);
        let spectral = &report.conventions[1];
        let paper = &report.conventions[2];
        pass &= traj.stall.is_none() && spectral.hypothesis_holds && spectral.satisfied == Some(true);
        lines.push(format!(
            "seed {seed}: rate {:.4} vs bound {:.4} ({}); paper convention: {}",
            report.rate_measured.unwrap_or(f64::NAN),
            spectral.rate_bound,
            spectral.status,
            paper.status
        ));
        runs.push((traj, p));
    }
    Outcome { pass, detail: lines.join("; "), runs }
}

fn physicality_onset() -> Outcome {
    let p = params(0.15, 0.005, 3.5);
    let mut pass = true;
    let mut lines = Vec::new();
    let mut runs = Vec::new();
    for (dim, n, geometry) in [(2, 32, Geometry::Line), (3, 16, Geometry::Plane)] {
        let spec = InitialSpec::NearBoundary { geometry, profile: MarginProfile::Quadratic, floor: 1e-3 };
        let q0 = generate_initial(&spec, grid(dim, n), 0).unwrap();
        let traj = run_with(&q0, 5.0, &SchemeConfig::new(SchemeKind::SemiImplicit, 1e-3), &p, 50).unwrap();
        let report = grad_decay_check_with(&traj, &p, DEFAULT_KAPPA, 0.0);
        let reached = traj.stall.is_none() && report.t0_detected.is_some() && report.stays_above_kappa;
        let t_end = traj.rows.last().unwrap().t;
        pass &= reached && t_end >= 5.0 - 1e-9;
        lines.push(format!(
            "{dim}D: T0 = {:?}, stays above 1/12 = {}, final margin {:.4}",
            report.t0_detected,
            report.stays_above_kappa,
            traj.rows.last().unwrap().min_margin
        ));
        runs.push((traj, p));
    }
    Outcome { pass, detail: lines.join("; "), runs }
}

fn h2_mechanism(runs: &[(Trajectory, ElasticParams)]) -> Outcome {
    let c_l = ElasticParams::new(1.0, 0.0, 0.0, 0.0, 1.0 / TAU).unwrap().c_l();
    let mut snapshots = 0;
    let mut worst: f64 = f64::INFINITY;
    let mut ok = true;
    for (traj, p) in runs {
        let h2 = h2_bound_check(traj, p, traj.rows[0].energy);
        ok &= h2.all_mechanism_ok;
        snapshots += h2.rows.len();
        worst = h2.rows.iter().map(|r| r.mechanism_slack).fold(worst, f64::min);
    }
    Outcome::new(
        ok && c_l == 0.5 && snapshots > 0,
        format!("C_L(1,0,0) = {c_l}, {snapshots} snapshots over {} runs, min slack = {worst:.3e}", runs.len()),
    )
}

fn gamma_convergence() -> Outcome {
    let p = params(0.1, 0.01, 1.0);
    let q0 = generate_initial(&InitialSpec::RandomBandlimited { kmax: 3, margin_min: 0.01 }, grid(2, 16), 10).unwrap();
    let tau = 1e-3;
    assert!(tau <= 0.5 / 256.0);
    let report = gamma_study(&q0, 0.2, &[4, 16, 64, 256], &SchemeConfig::new(SchemeKind::SemiImplicit, tau), &p).unwrap();
    let dist: Vec<String> = report.rows.iter().map(|r| format!("{:.2e}", r.final_distance)).collect();
    let excess: Vec<String> = report.rows.iter().map(|r| format!("{:.2e}", r.energy_excess)).collect();
    Outcome::new(
        report.distance_monotone && report.excess_monotone && report.excess_reduction >= 4.0,
        format!("distances [{}], excess [{}], reduction {:.1}x", dist.join(", "), excess.join(", "), report.excess_reduction),
    )
}

fn synthetic_mask(g: &SpectralGrid, constrained: usize) -> Vec<bool> {
    (0..g.points()).map(|i| g.axes(i)[..constrained].iter().all(|&a| a == g.n / 2)).collect()
}

fn contact_estimator() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (dim, n) in [(2, 256), (3, 64)] {
        let g = grid(dim, n);
        for expect in 0..dim {
            let counts = box_counts(&g, &synthetic_mask(&g, dim - expect));
            let d = dimension_estimate(&g, &counts).unwrap();
            pass &= (d - expect as f64).abs() <= 0.15 && nesting_holds(dim, &counts);
            lines.push(format!("{dim}D dim {expect}: {d:.3}"));
        }
    }
    let p = params(0.1, 0.01, 1.0);
    let spec = InitialSpec::NearBoundary { geometry: Geometry::Plane, profile: MarginProfile::Quadratic, floor: 1e-3 };
    let q0 = generate_initial(&spec, grid(3, 32), 0).unwrap();
    let traj = run_with(&q0, 0.01, &SchemeConfig::new(SchemeKind::SemiImplicit, 1e-3), &p, 1).unwrap();
    pass &= traj.stall.is_none();
    let eps = 1.5 * traj.rows[0].min_margin;
    let mut flow_max: f64 = 0.0;
    let mut nonempty = 0;
    for s in &traj.snapshots {
        let reports = contact_report(&s.field, &[eps], &[0.5]).unwrap();
        let r = &reports[0];
        pass &= r.nesting_ok;
        if let Some(d) = r.dim_estimate {
            nonempty += 1;
            pass &= d <= 2.15;
            flow_max = flow_max.max(d);
        }
    }
    pass &= nonempty > 0;
    lines.push(format!(
        "3D flow at eps = {eps:.1e}: {nonempty} of {} snapshots with a nonempty contact set, max dim {flow_max:.3}",
        traj.snapshots.len()
    ));
    Outcome::new(pass, lines.join(", "))
}

fn moreau_yosida_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let tensors: Vec<QTensor> = (0..1000)
        .map(|i| {
            if i % 2 == 0 {
                random_physical(&mut rng, 1e-3)
            } else {
                let c: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
                QTensor::new(c).unwrap()
            }
        })
        .collect();
    let worst_m3 = std::thread::scope(|s| {
        let handles: Vec<_> = tensors
            .chunks(50)
            .map(|chunk| {
                s.spawn(move || {
                    let mut worst: f64 = f64::NEG_INFINITY;
                    for q in chunk {
                        let full = psi(q).ok();
                        let mut prev = f64::NEG_INFINITY;
                        for n in 1..=256 {
                            let v = moreau_yosida(q, n).unwrap().value;
                            worst = worst.max(prev - v);
                            if let Some(f) = full {
                                worst = worst.max(v - f);
                            }
                            prev = v;
                        }
                    }
                    worst
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold(f64::NEG_INFINITY, f64::max)
    });
    let radius = 4.0 * domain_diameter();
    let mut growth_ok = true;
    let mut min_ratio = f64::INFINITY;
    for _ in 0..100 {
        let dir = QTensor::new(std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).unwrap();
        let q = (radius * rng.gen_range(1.001..3.0) / dir.norm()) * dir;
        for n in [1, 4, 16, 64, 256] {
            let v = moreau_yosida(&q, n).unwrap().value;
            let bound = 0.5 * n as f64 * q.norm_sq();
            growth_ok &= v >= bound;
            min_ratio = min_ratio.min(v / bound);
        }
    }
    Outcome::new(
        worst_m3 <= 1e-10 && growth_ok,
        format!("largest monotonicity violation = {worst_m3:.1e}, min envelope / (n/2)|Q|^2 = {min_ratio:.4} beyond |Q| = {radius:.3}"),
    )
}

fn main() {
    type Criterion = (usize, &'static str, fn() -> Outcome);
    let independent: [Criterion; 11] = [
        (1, "potential correctness", potential_correctness),
        (2, "blow-up rate", blowup_rate),
        (3, "elastic coercivity sandwich", coercivity_sandwich),
        (4, "angle bound", angle_bound),
        (5, "energy dissipation identity", energy_identity),
        (6, "slope monotonicity", slope_monotonicity),
        (7, "Gronwall decay", gronwall_decay),
        (8, "strict-physicality onset", physicality_onset),
        (10, "Gamma-flow convergence", gamma_convergence),
        (11, "contact-set estimator", contact_estimator),
        (12, "Moreau-Yosida properties", moreau_yosida_properties),
    ];
    let mut results: Vec<(usize, &str, Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = independent
            .iter()
            .map(|&(id, name, f)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let out = f();
                    (id, name, out, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let start = Instant::now();
    let runs: Vec<(Trajectory, ElasticParams)> = results.iter_mut().flat_map(|r| std::mem::take(&mut r.2.runs)).collect();
    let h2 = h2_mechanism(&runs);
    results.push((9, "H2 mechanism", h2, start.elapsed().as_secs_f64()));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (id, name, out, secs) in &results {
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!out.pass);
        println!("criterion {id:>2} {verdict} [{name}] {} ({secs:.1} s)", out.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
