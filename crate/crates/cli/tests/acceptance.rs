//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured margin. Run with `cargo test -p otcert-cli --test acceptance
//! -- --nocapture` to see the lines.

use otcert_core::certify::{check_eigen_bound, thin_box_scaling, InequalityReport, Instance};
use otcert_core::transport::{
    wasserstein_1d, wasserstein_entropic_opts, wasserstein_exact, EntropicOptions,
};
use otcert_core::{
    displacement_interpolate, lq_convexity_check, lr_norm, neumann_eigenvalue, pi_p,
    x0_candidates, ConvexDomain, DiscreteMeasure, Polynomial, ScalarField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::process::Command;

// ---------------------------------------------------------------------------
// Shared generators (seeded, deterministic).
// ---------------------------------------------------------------------------

fn random_domains(rng: &mut ChaCha8Rng) -> Vec<ConvexDomain> {
    let mut domains = Vec::with_capacity(20);
    for _ in 0..5 {
        let a = rng.gen_range(-2.0..1.0);
        let len = rng.gen_range(0.3..2.0);
        domains.push(ConvexDomain::interval(a, a + len).unwrap());
    }
    for _ in 0..5 {
        let lo = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let sides = [rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5)];
        domains.push(
            ConvexDomain::box_nd(vec![lo[0], lo[1]], vec![lo[0] + sides[0], lo[1] + sides[1]])
                .unwrap(),
        );
    }
    let mut polygons = 0;
    while polygons < 10 {
        let n = if polygons < 5 { 3 } else { 4 };
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        // Order around the centroid; the constructor rejects nonconvex orders.
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        let mut ordered = pts.clone();
        ordered.sort_by(|a, b| {
            (a[1] - cy)
                .atan2(a[0] - cx)
                .partial_cmp(&(b[1] - cy).atan2(b[0] - cx))
                .unwrap()
        });
        if let Ok(domain) = ConvexDomain::polygon(ordered) {
            if domain.volume() >= 0.05 {
                domains.push(domain);
                polygons += 1;
            }
        }
    }
    domains
}

struct SuiteCase {
    domain: ConvexDomain,
    poly: Polynomial,
    p: f64,
    q: f64,
    resolution: u32,
}

/// 200 seeded admissible instances over 20 domains and the (p, q) menu.
fn suite_cases() -> Vec<SuiteCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let domains = random_domains(&mut rng);
    let ps = [2.2, 3.0, 4.0];
    let mut cases = Vec::with_capacity(200);
    for i in 0..200usize {
        let domain = domains[i % domains.len()].clone();
        let p = ps[i % 3];
        let q = [1.5, 2.0, p - 0.5][(i / 3) % 3];
        let dim = domain.dim();
        let poly = Polynomial::random(dim, 4, &mut rng);
        let resolution = if dim == 1 { 256 } else { 16 };
        cases.push(SuiteCase {
            domain,
            poly,
            p,
            q,
            resolution,
        });
    }
    cases
}

fn random_measure(rng: &mut ChaCha8Rng, dim: usize, atoms: usize) -> DiscreteMeasure {
    let positions: Vec<f64> = (0..atoms * dim).map(|_| rng.gen_range(0.0..1.0)).collect();
    let weights: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.05..1.0)).collect();
    DiscreteMeasure::from_atoms(dim, positions, weights).unwrap()
}

fn assert_holds(label: &str, r: &InequalityReport) {
    assert!(
        r.holds(),
        "{label}: slack {} fell below -error_bar {} (lhs {}, rhs {})",
        r.slack,
        -r.error_bar,
        r.lhs,
        r.rhs
    );
}

// ---------------------------------------------------------------------------
// 1. Main inequality slack suite.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_main_inequality_suite() {
    let started = std::time::Instant::now();
    let cases = suite_cases();
    let mut worst_margin = f64::INFINITY;
    for (i, case) in cases.iter().enumerate() {
        let inst = Instance::new(&case.domain, case.resolution, case.p, case.q).unwrap();
        let poly = case.poly.clone();
        let report = inst
            .check_main(&move |x: &[f64]| poly.eval(x))
            .unwrap_or_else(|e| panic!("case {i}: {e}"));
        assert!(
            report.solver == "1d" || report.solver == "exact",
            "case {i} used solver {}",
            report.solver
        );
        assert_holds(&format!("case {i}"), &report);
        worst_margin = worst_margin.min(report.slack + report.error_bar);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 300, "suite took {elapsed:?}, target is under 5 minutes");
    println!(
        "ACCEPTANCE 1 (main inequality, 200 seeded instances): PASS — all slacks >= -error_bar, worst margin {worst_margin:.3e}, {elapsed:.1?}"
    );
}

// ---------------------------------------------------------------------------
// 2. Corollary chain on the same suite.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_corollary_chain() {
    let cases = suite_cases();
    for (i, case) in cases.iter().enumerate() {
        let inst = Instance::new(&case.domain, case.resolution, case.p, case.q).unwrap();
        let poly = case.poly.clone();
        let field = move |x: &[f64]| poly.eval(x);

        let main = inst.check_main(&field).unwrap();
        let moment = inst.check_moment(&field, 60).unwrap();
        assert_holds(&format!("moment case {i}"), &moment);
        for (k, x0) in x0_candidates(&case.domain, 11).iter().enumerate() {
            let triangle = inst.check_triangle_bound(&field, x0).unwrap();
            assert_holds(&format!("triangle case {i} candidate {k}"), &triangle);
        }
        let nash = inst.check_nash(&field).unwrap();
        assert_holds(&format!("nash case {i}"), &nash);
        let pw = inst.check_pw(&field).unwrap();
        assert_holds(&format!("pw case {i}"), &pw);
        assert!(
            main.rhs <= nash.rhs + main.error_bar + nash.error_bar,
            "case {i}: rhs ordering main {} vs nash {}",
            main.rhs,
            nash.rhs
        );
        // The moment bound is a weakening of the main one, so its slack
        // dominates on every instance.
        assert!(
            main.slack <= moment.slack + main.error_bar + moment.error_bar,
            "case {i}: slack ordering main {} vs moment {}",
            main.slack,
            moment.slack
        );
    }
    println!(
        "ACCEPTANCE 2 (corollary chain: moment, triangle x11, nash, pw + rhs ordering): PASS — 200 instances"
    );
}

// ---------------------------------------------------------------------------
// 3. Expedient estimate suite.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_03_expedient_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let interval = ConvexDomain::interval(0.0, 1.0).unwrap();
    let square = ConvexDomain::box_nd(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let mut worst = f64::INFINITY;
    for i in 0..100usize {
        let (domain, resolution) = if i % 2 == 0 {
            (&interval, 256u32)
        } else {
            (&square, 12u32)
        };
        let dim = domain.dim();
        let phi = Polynomial::random(dim, 3, &mut rng);
        let d0 = Polynomial::random(dim, 2, &mut rng);
        let d1 = Polynomial::random(dim, 2, &mut rng);
        let inst = Instance::new(domain, resolution, 3.0, 2.0).unwrap();
        let report = inst
            .check_expedient(
                &|x| phi.eval(x),
                &|x| d0.eval(x).powi(2) + 0.05,
                &|x| d1.eval(x).powi(2) + 0.05,
            )
            .unwrap_or_else(|e| panic!("triple {i}: {e}"));
        assert_holds(&format!("triple {i}"), &report);
        worst = worst.min(report.slack + report.error_bar);
    }
    println!(
        "ACCEPTANCE 3 (expedient estimate, 100 seeded triples on interval+square): PASS — worst margin {worst:.3e}"
    );
}

// ---------------------------------------------------------------------------
// 4. Geodesic convexity of L^q norms.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_geodesic_convexity() {
    let ts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let violation_at = |resolution: u32| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6E0);
        let domain = ConvexDomain::interval(0.0, 1.0).unwrap();
        let grid = domain.discretize(resolution).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let a = Polynomial::random(1, 3, &mut rng);
            let b = Polynomial::random(1, 3, &mut rng);
            let mk = |poly: &Polynomial| {
                let raw = ScalarField::from_fn(&grid, "d", |x| poly.eval(x).powi(2) + 0.02);
                let mass = lr_norm(&raw, 1.0);
                raw.scaled(1.0 / mass)
            };
            let f0 = mk(&a);
            let f1 = mk(&b);
            for q in [1.0, 2.0, 3.0] {
                let v = lq_convexity_check(&f0, &f1, q, &ts).unwrap();
                worst = worst.max(v.max(0.0));
            }
        }
        worst
    };
    let v1024 = violation_at(1024);
    let v2048 = violation_at(2048);
    assert!(v1024 <= 1e-4, "violation at 1024: {v1024}");
    assert!(
        v2048 <= v1024 + 1e-12,
        "violation must not grow under refinement: {v2048} vs {v1024}"
    );
    println!(
        "ACCEPTANCE 4 (L^q geodesic convexity, 20 pairs x q in {{1,2,3}} x 11 times): PASS — max violation {v1024:.3e} at 1024, {v2048:.3e} at 2048"
    );
}

// ---------------------------------------------------------------------------
// 5. Constant-speed geodesics from exact plans.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_constant_speed() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut worst_rel: f64 = 0.0;
    for pair in 0..10usize {
        let atoms = rng.gen_range(20..=50);
        let mu = random_measure(&mut rng, 2, atoms);
        let nu = random_measure(&mut rng, 2, atoms.min(45));
        for m in [2.0, 3.0] {
            let (d01, plan) = wasserstein_exact(&mu, &nu, m).unwrap();
            for t in [0.25, 0.5, 0.75] {
                let mid = displacement_interpolate(&plan, t).unwrap();
                let (d0t, _) = wasserstein_exact(&mu, &mid.measure, m).unwrap();
                let rel = (d0t - t * d01).abs() / d01;
                assert!(
                    rel <= 1e-6,
                    "pair {pair} m={m} t={t}: |W(mu0,mu_t) - t W| = {rel:.3e} relative"
                );
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    println!(
        "ACCEPTANCE 5 (constant-speed interpolation, 10 pairs x m in {{2,3}} x t in {{1/4,1/2,3/4}}): PASS — worst relative deviation {worst_rel:.3e}"
    );
}

// ---------------------------------------------------------------------------
// 6. Solver cross-validation.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_solver_cross_validation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);

    // Quantile sweep vs exact LP in 1D.
    let mut worst_gap: f64 = 0.0;
    for _ in 0..50 {
        let mu = random_measure(&mut rng, 1, 30);
        let nu = random_measure(&mut rng, 1, 25);
        let m = [1.5, 2.0, 3.0][rng.gen_range(0..3usize)];
        let d1 = wasserstein_1d(&mu, &nu, m).unwrap();
        let (d2, _) = wasserstein_exact(&mu, &nu, m).unwrap();
        let gap = (d1 - d2).abs();
        assert!(gap <= 1e-8, "quantile {d1} vs exact {d2}");
        worst_gap = worst_gap.max(gap);
    }

    // Entropic with the default schedule within 1% of exact on 100-atom pairs.
    let mut worst_rel: f64 = 0.0;
    for i in 0..50 {
        let mu = random_measure(&mut rng, 2, 100);
        let nu = random_measure(&mut rng, 2, 100);
        let (d_exact, _) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let solve = wasserstein_entropic_opts(&mu, &nu, 2.0, &EntropicOptions::default()).unwrap();
        let rel = (solve.distance - d_exact).abs() / d_exact;
        assert!(rel <= 0.01, "instance {i}: entropic off by {rel:.4}");
        worst_rel = worst_rel.max(rel);
    }

    // n = 3 equal weights: exact LP equals brute-force vertex enumeration.
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for _ in 0..20 {
        let mu = DiscreteMeasure::from_atoms(
            2,
            (0..6).map(|_| rng.gen_range(0.0..1.0)).collect(),
            vec![1.0; 3],
        )
        .unwrap();
        let nu = DiscreteMeasure::from_atoms(
            2,
            (0..6).map(|_| rng.gen_range(0.0..1.0)).collect(),
            vec![1.0; 3],
        )
        .unwrap();
        let (_, plan) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        let brute = perms
            .iter()
            .map(|perm| {
                (0..3)
                    .map(|i| {
                        let (a, b) = (mu.position(i), nu.position(perm[i]));
                        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)) / 3.0
                    })
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((plan.cost() - brute).abs() <= 1e-12 * brute.max(1.0));
    }
    println!(
        "ACCEPTANCE 6 (solver cross-validation): PASS — quantile vs LP max gap {worst_gap:.3e}, entropic within {worst_rel:.4} relative, n=3 matches brute force"
    );
}

// ---------------------------------------------------------------------------
// 7. Eigenvalue anchors (with the independent shooting oracle).
// ---------------------------------------------------------------------------

/// First Neumann eigenvalue of the 1D p-Laplacian on (0,1) by shooting: the
/// eigenfunction starts at u(0) = 1 with zero flux and first vanishes at 1/2;
/// bisect the rate mu until the integrated first zero lands there.
fn shooting_eigenvalue_1d(p: f64) -> f64 {
    let first_zero = |mu: f64| -> f64 {
        let f = |u: f64, w: f64| -> (f64, f64) {
            let du = if w == 0.0 {
                0.0
            } else {
                w.signum() * w.abs().powf(1.0 / (p - 1.0))
            };
            let dw = -mu * if u == 0.0 { 0.0 } else { u.signum() * u.abs().powf(p - 1.0) };
            (du, dw)
        };
        let h = 2e-6;
        let (mut u, mut w) = (1.0f64, 0.0f64);
        let mut x = 0.0f64;
        while x < 3.0 {
            let (k1u, k1w) = f(u, w);
            let (k2u, k2w) = f(u + 0.5 * h * k1u, w + 0.5 * h * k1w);
            let (k3u, k3w) = f(u + 0.5 * h * k2u, w + 0.5 * h * k2w);
            let (k4u, k4w) = f(u + h * k3u, w + h * k3w);
            let nu = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            let nw = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            if nu < 0.0 {
                // Linear localization of the crossing inside the step.
                return x + h * u / (u - nu);
            }
            u = nu;
            w = nw;
            x += h;
        }
        f64::INFINITY
    };
    // first_zero decreases in mu; target 1/2.
    let (mut lo, mut hi) = (1.0f64, 200.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if first_zero(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn acceptance_07_eigenvalue_anchors() {
    // pi_2 = pi to machine precision.
    assert!((pi_p(2.0) - PI).abs() < 1e-14);

    // Interval, p = 2: Richardson over 256/512/1024 against pi^2.
    let interval = ConvexDomain::interval(0.0, 1.0).unwrap();
    let mus: Vec<f64> = [256u32, 512, 1024]
        .iter()
        .map(|r| neumann_eigenvalue(&interval.discretize(*r).unwrap(), 2.0).unwrap().value)
        .collect();
    let rel_1024 = (mus[2] - PI * PI).abs() / (PI * PI);
    assert!(rel_1024 <= 0.005, "interval p=2: {rel_1024:.2e}");
    let richardson = mus[2] + (mus[2] - mus[1]) / 3.0;
    let rel_rich = (richardson - PI * PI).abs() / (PI * PI);
    assert!(rel_rich < rel_1024.max(1e-12), "Richardson did not improve");
    // Errors shrink monotonically over the ladder.
    assert!((mus[1] - PI * PI).abs() < (mus[0] - PI * PI).abs());
    assert!((mus[2] - PI * PI).abs() < (mus[1] - PI * PI).abs());

    // Unit square, p = 2 at 128 cells per axis.
    let square = ConvexDomain::box_nd(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let mu_sq = neumann_eigenvalue(&square.discretize(128).unwrap(), 2.0).unwrap().value;
    let rel_sq = (mu_sq - PI * PI).abs() / (PI * PI);
    assert!(rel_sq <= 0.01, "square p=2: {rel_sq:.2e}");

    // Interval, p = 3 against the shooting oracle (which itself agrees with
    // the closed-form sharp constant).
    let oracle = shooting_eigenvalue_1d(3.0);
    let sharp = pi_p(3.0).powi(3);
    assert!(
        (oracle - sharp).abs() / sharp < 5e-4,
        "shooting oracle {oracle} vs closed form {sharp}"
    );
    let mu_p3 = neumann_eigenvalue(&interval.discretize(1024).unwrap(), 3.0).unwrap().value;
    let rel_p3 = (mu_p3 - oracle).abs() / oracle;
    assert!(rel_p3 <= 0.02, "interval p=3: mu {mu_p3} vs oracle {oracle}");

    println!(
        "ACCEPTANCE 7 (eigenvalue anchors): PASS — interval p=2 rel {rel_1024:.2e}, square p=2 rel {rel_sq:.2e}, p=3 vs shooting rel {rel_p3:.2e}, pi_2 = pi"
    );
}

// ---------------------------------------------------------------------------
// 8. Diameter lower bounds and thin-box sharpness.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_diameter_bounds() {
    // Bounds on assorted instances.
    let interval = ConvexDomain::interval(0.0, 1.0).unwrap();
    for p in [1.5, 2.0, 3.0] {
        let out = check_eigen_bound(&interval, p, 256).unwrap();
        assert_holds(&format!("interval eigen_pw p={p}"), &out.pw);
        assert_holds(&format!("interval eigen_sharp p={p}"), &out.sharp);
    }
    let square = ConvexDomain::box_nd(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let out = check_eigen_bound(&square, 2.0, 64).unwrap();
    assert_holds("square eigen_pw", &out.pw);
    assert_holds("square eigen_sharp", &out.sharp);

    // Thin boxes: sharpness ratio strictly decreasing toward 1.
    let mut ratios = Vec::new();
    for n in [1u32, 2, 4, 8] {
        let d = ConvexDomain::box_nd(vec![0.0, 0.0], vec![1.0, 1.0 / n as f64]).unwrap();
        let out = check_eigen_bound(&d, 2.0, 64).unwrap();
        assert_holds(&format!("thin box n={n} eigen_pw"), &out.pw);
        assert_holds(&format!("thin box n={n} eigen_sharp"), &out.sharp);
        ratios.push(out.sharpness_ratio);
    }
    for w in ratios.windows(2) {
        assert!(w[1] < w[0], "sharpness ratios not decreasing: {ratios:?}");
    }
    assert!(ratios[3] <= 1.15, "ratio at n=8: {}", ratios[3]);
    println!(
        "ACCEPTANCE 8 (diameter bounds + thin-box sharpness): PASS — ratios {:?}",
        ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
}

// ---------------------------------------------------------------------------
// 9. Thin-box scaling exponents.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_thin_box_scaling() {
    let ns = [1u32, 2, 4, 8, 16];
    let mut measured = Vec::new();
    for (p, q) in [(3.0, 2.0), (4.0, 2.0), (2.2, 2.0)] {
        let report = thin_box_scaling(p, q, &ns, 48).unwrap();
        let rel = (report.slope - report.target_slope).abs() / report.target_slope;
        assert!(
            rel <= 0.05,
            "(p,q)=({p},{q}): slope {} vs target {} (rel {rel:.3})",
            report.slope,
            report.target_slope
        );
        measured.push((p, q, report.slope, report.target_slope));
    }
    println!("ACCEPTANCE 9 (thin-box scaling slopes): PASS — {measured:?}");
}

// ---------------------------------------------------------------------------
// 10. CLI determinism.
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("sweep.json");
    std::fs::write(
        &cfg_path,
        r#"{"experiment":"acc10","seed":2024,
            "domain":{"kind":"box","lo":[0,0],"hi":[1,0.6]},
            "p_values":[2.2,3.0],"q_values":[1.5,2.0],
            "fields_per_case":2,"resolution":12,"out":"unused"}"#,
    )
    .unwrap();
    let run = |out: &str| -> Vec<u8> {
        let status = Command::new(env!("CARGO_BIN_EXE_otcert"))
            .args([
                "sweep",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out,
                "--quiet",
            ])
            .current_dir(tmp.path())
            .output()
            .unwrap();
        assert_eq!(
            status.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        std::fs::read(tmp.path().join(out).join("reports.csv")).unwrap()
    };
    let first = run("r1");
    let second = run("r2");
    assert!(!first.is_empty());
    assert_eq!(first, second, "identical config+seed must give identical bytes");
    println!(
        "ACCEPTANCE 10 (CLI determinism): PASS — two sweep runs produced {} identical bytes",
        first.len()
    );
}
