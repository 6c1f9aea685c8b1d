//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p crofton-core --test acceptance -- --nocapture` to
//! see the report.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, PI};
use std::time::{Duration, Instant};

use crofton_core::crofton::{crofton_area_cp2, crofton_length, polyline_length, SphericalPolyline};
use crofton_core::deformation::{
    cd_cp_tau, diagnose, m_objective, maximizer_scan, structure_test_product, tasaki_plane,
    tau_grid, wirtinger_objective, FamilyKind, FamilySpec, Field,
};
use crofton_core::exterior::{kahler_angle, trace_identity, ComplexStructure};
use crofton_core::intersections::{
    degeneracy_volume, equidistribution_experiment, fixed_factor, grassmann_meet,
    intersection_dim, line_curve_count, rotated_factor, su_circle_intersections, swap_rotation,
    HomogeneousCurve, LineCount, Meet,
};
use crofton_core::reports::{emit, run, Format, RunConfig};
use crofton_core::sampling::{random_frame, sample_rotation, RandomStream};
use crofton_core::{InterleaveOperator, McEstimate, OrthoFrame};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

mod common;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn fmt(e: &McEstimate) -> String {
    format!("{:.6} ± {:.2e}", e.mean, e.stderr)
}

fn spherical_crofton() -> Outcome {
    let colatitude = FRAC_PI_3;
    let circle = SphericalPolyline::latitude_circle(colatitude, 3600).map_err(|e| e.to_string())?;
    let truth = polyline_length(&circle);
    check(
        (truth - 2.0 * PI * colatitude.sin()).abs() < 1e-5,
        "discretized length drifted from 2π sin θ",
    )?;
    let est = single_threaded(|| crofton_length(&circle, 100_000, &RandomStream::new(1)))
        .map_err(|e| e.to_string())?
        .length;
    check(est.within(truth, 3.0), format!("{} vs {truth:.6}", fmt(&est)))?;
    check(
        est.stderr / est.mean < 0.02,
        format!("relative stderr {:.3e}", est.stderr / est.mean),
    )?;
    Ok(format!("{} vs length {truth:.6}", fmt(&est)))
}

fn integral_wirtinger() -> Outcome {
    let root = RandomStream::new(2);
    let grid = tau_grid(9);
    let values = grid
        .iter()
        .enumerate()
        .map(|(i, &tau)| cd_cp_tau(tau, 1_000_000, &root.split(i as u64)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    check(values[0].within(0.5, 3.0), format!("tau = 0 row {}", fmt(&values[0])))?;
    for (i, v) in values.iter().enumerate().skip(1) {
        check(
            values[0].exceeds(v, 3.0),
            format!("tau = 0 does not exceed row {i}: {}", fmt(v)),
        )?;
    }
    for w in values.windows(2) {
        check(
            w[1].mean < w[0].mean + 3.0 * w[0].combined_stderr(&w[1]),
            "grid values are not decreasing",
        )?;
    }
    Ok(format!(
        "cd(0) = {}, cd(π/2) = {}",
        fmt(&values[0]),
        fmt(&values[8])
    ))
}

fn trace_identity_exact() -> Outcome {
    let mut s = RandomStream::new(3);
    let mut frames = 0;
    let mut worst: f64 = 0.0;
    for q in 2..=4 {
        for m in 1..=3 {
            let op = InterleaveOperator::new(q, m).map_err(|e| e.to_string())?;
            for rank in 1..=q * m {
                let v = random_frame(q * m, rank, &mut s);
                let total = trace_identity(&v, &op).map_err(|e| e.to_string())?;
                worst = worst.max((total - rank as f64).abs());
                frames += 1;
            }
        }
    }
    while frames < 100 {
        let op = InterleaveOperator::new(3, 3).map_err(|e| e.to_string())?;
        let rank = 1 + frames % 9;
        let v = random_frame(9, rank, &mut s);
        worst = worst.max((trace_identity(&v, &op).map_err(|e| e.to_string())? - rank as f64).abs());
        frames += 1;
    }
    check(worst <= 1e-10, format!("residual {worst:.2e}"))?;
    Ok(format!("{frames} frames, max residual {worst:.1e}"))
}

fn product_plane(m: usize, q: usize) -> OrthoFrame {
    InterleaveOperator::new(q, m)
        .unwrap()
        .product_plane(&OrthoFrame::coordinate(q, &[0]))
        .unwrap()
}

fn interleaved_maximizer() -> Outcome {
    let (m, q) = (3, 2);
    let spec = FamilySpec::new(FamilyKind::Interleaved { m, p: 1, q, field: Field::Real })
        .map_err(|e| e.to_string())?;
    let root = RandomStream::new(4);
    let scan = maximizer_scan(&spec, 8, 10_000, &root.split(0)).map_err(|e| e.to_string())?;
    let test = structure_test_product(&scan.best_plane, m, q, 0.05).map_err(|e| e.to_string())?;
    check(
        test.pass,
        format!("not product form: spread {:.3}, spectrum {:.3}", test.spread, test.spectrum),
    )?;
    check(
        scan.trace_residual.unwrap_or(0.0) <= 1e-10,
        "trace identity failed during the scan",
    )?;
    let found = m_objective(&scan.best_plane, m, q, 1_000_000, &root.split(1)).map_err(|e| e.to_string())?;
    let exact = m_objective(&product_plane(m, q), m, q, 1_000_000, &root.split(2)).map_err(|e| e.to_string())?;
    check(found.agrees(&exact, 3.0), format!("found {} vs product {}", fmt(&found), fmt(&exact)))?;
    let mut s = root.split(3);
    let random = random_frame(m * q, m, &mut s);
    let rv = m_objective(&random, m, q, 1_000_000, &root.split(4)).map_err(|e| e.to_string())?;
    check(exact.exceeds(&rv, 3.0), format!("random plane {} not below", fmt(&rv)))?;
    Ok(format!(
        "found {} (spread {:.1e}), product {}, random {}",
        fmt(&found),
        test.spread,
        fmt(&exact),
        fmt(&rv)
    ))
}

fn twisted_complex_maximizers() -> Outcome {
    let (m, q) = (2, 2);
    let root = RandomStream::new(5);
    let product = product_plane(m, q);
    let mut u = DVector::zeros(4);
    u[0] = FRAC_1_SQRT_2;
    u[3] = FRAC_1_SQRT_2;
    let tasaki = tasaki_plane(q, &u).map_err(|e| e.to_string())?;
    let pv = m_objective(&product, m, q, 1_000_000, &root.split(0)).map_err(|e| e.to_string())?;
    let tv = m_objective(&tasaki, m, q, 1_000_000, &root.split(1)).map_err(|e| e.to_string())?;
    check(pv.agrees(&tv, 3.0), format!("product {} vs Tasaki {}", fmt(&pv), fmt(&tv)))?;
    let mut s = root.split(2);
    let mut highest: f64 = 0.0;
    for i in 0..20 {
        let v = random_frame(4, 2, &mut s);
        let rv = m_objective(&v, m, q, 1_000_000, &root.split(10 + i)).map_err(|e| e.to_string())?;
        check(
            pv.exceeds(&rv, 3.0) && tv.exceeds(&rv, 3.0),
            format!("random plane {i} reaches {}", fmt(&rv)),
        )?;
        highest = highest.max(rv.mean);
    }
    let d = diagnose(&tasaki, &FamilyKind::Interleaved { m, p: 1, q, field: Field::Real }, 0.05)
        .map_err(|e| e.to_string())?;
    check(d.i_prime_complex && !d.product_form(), "Tasaki plane mislabeled")?;
    Ok(format!(
        "product {}, Tasaki {}, best random {highest:.4}",
        fmt(&pv),
        fmt(&tv)
    ))
}

fn transversality() -> Outcome {
    let (k, l, m) = (2, 3, 2);
    let n = l + m;
    let mut s = RandomStream::new(6);
    let fixed = fixed_factor(n, k, l);
    let mut min_volume = f64::INFINITY;
    for i in 0..10_000 {
        let y = sample_rotation(n, &mut s);
        min_volume = min_volume.min(degeneracy_volume(&y, k, l).map_err(|e| e.to_string())?);
        match grassmann_meet(&y, k, l, m).map_err(|e| e.to_string())? {
            Meet::OnePoint(w) => {
                check(w.rank() == l, format!("sample {i}: rank {}", w.rank()))?;
                let with_fixed = intersection_dim(&w, &fixed).map_err(|e| e.to_string())?;
                let with_rotated =
                    intersection_dim(&w, &rotated_factor(&y, k)).map_err(|e| e.to_string())?;
                check(
                    with_fixed == l - k && with_rotated == k,
                    format!("sample {i}: containment {with_fixed}, {with_rotated}"),
                )?;
            }
            Meet::Degenerate { volume } => {
                return Err(format!("sample {i} degenerate (volume {volume:.2e})"))
            }
        }
    }
    let swap = swap_rotation(n, k);
    let volume = degeneracy_volume(&swap, k, l).map_err(|e| e.to_string())?;
    check(volume <= 1e-9, format!("swap volume {volume:.2e}"))?;
    check(
        matches!(grassmann_meet(&swap, k, l, m), Ok(Meet::Degenerate { .. })),
        "swap rotation is not degenerate",
    )?;
    Ok(format!("10000 transversal, min volume {min_volume:.3e}; swap volume {volume:.1e}"))
}

fn equidistribution() -> Outcome {
    let root = RandomStream::new(7);
    let mut summary = Vec::new();
    for d in 1..=3u32 {
        let curve = HomogeneousCurve::fermat(d);
        let exp = equidistribution_experiment(&curve, 10_000, &root.split(d as u64))
            .map_err(|e| e.to_string())?;
        check(exp.exceptional_fraction == 0.0, format!("degree {d}: {:?}", exp.histogram))?;
        let area = crofton_area_cp2(&curve, 10_000, &root.split(10 + d as u64)).map_err(|e| e.to_string())?;
        check(
            area.mean == d as f64 && area.stderr == 0.0,
            format!("degree {d}: area {}", fmt(&area)),
        )?;
        summary.push(format!("d={d}: {:?}", exp.histogram));
    }
    let conic = HomogeneousCurve::fermat(2);
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let point = [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 2f64.sqrt())];
    let grad = conic.gradient(&point);
    // The tangent direction: a second point annihilated by the gradient.
    let other = [grad[1], -grad[0], c(0.0, 0.0)];
    let count = line_curve_count(&conic, &point, &other).map_err(|e| e.to_string())?;
    check(
        count == LineCount { with_multiplicity: 2, distinct: 1 },
        format!("tangent line gives {count:?}"),
    )?;
    Ok(format!("{}; tangent {count:?}", summary.join(", ")))
}

fn su_example() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=5usize {
        let r = su_circle_intersections(n).map_err(|e| e.to_string())?;
        check(r.points.len() == n, format!("n = {n}: {} points", r.points.len()))?;
        for (k, x) in r.points.iter().enumerate() {
            let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            let target = DMatrix::<Complex64>::identity(n, n) * z;
            let err = (x - target).iter().map(|e| e.norm()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
        check(r.orthogonality_residual <= 1e-12, format!("n = {n}: orthogonality"))?;
        check(r.membership_residual <= 1e-12, format!("n = {n}: membership"))?;
        worst = worst.max(r.orthogonality_residual);
    }
    check(worst <= 1e-12, format!("residual {worst:.2e}"))?;
    Ok(format!("n = 1..5, max residual {worst:.1e}"))
}

fn higher_wirtinger() -> Outcome {
    let root = RandomStream::new(9);
    let line = OrthoFrame::coordinate(6, &[0, 1]);
    let lv = wirtinger_objective(&line, 1_000_000, &root.split(0)).map_err(|e| e.to_string())?;
    let mut s = root.split(1);
    let mut highest: f64 = 0.0;
    for i in 0..20 {
        let v = random_frame(6, 2, &mut s);
        let rv = wirtinger_objective(&v, 1_000_000, &root.split(10 + i)).map_err(|e| e.to_string())?;
        check(lv.exceeds(&rv, 3.0), format!("random plane {i} reaches {}", fmt(&rv)))?;
        highest = highest.max(rv.mean);
    }
    let spec = FamilySpec::new(FamilyKind::WirtingerCp { n: 2, k: 1 }).map_err(|e| e.to_string())?;
    let scan = maximizer_scan(&spec, 4, 10_000, &root.split(2)).map_err(|e| e.to_string())?;
    let tau = kahler_angle(&scan.best_plane, &ComplexStructure::standard(3))
        .map_err(|e| e.to_string())?
        .tau;
    check(tau < 0.05, format!("scan optimum has Kähler angle {tau:.4}"))?;
    Ok(format!(
        "complex line {}, best random {highest:.4}, scan τ = {tau:.4}",
        fmt(&lv)
    ))
}

fn infrastructure() -> Outcome {
    let samplers = common::sampler_checks(&RandomStream::new(10))?;
    let config = RunConfig {
        command: "cd-scan".parse().map_err(|e: crofton_core::Error| e.to_string())?,
        samples: 20_000,
        threads: 1,
        seed: 10,
        ..RunConfig::default()
    };
    let a = run(&config).map_err(|e| e.to_string())?;
    let b = run(&config).map_err(|e| e.to_string())?;
    let (ea, eb) = (
        emit(&a.without_timing(), Format::Csv).map_err(|e| e.to_string())?,
        emit(&b.without_timing(), Format::Csv).map_err(|e| e.to_string())?,
    );
    check(ea == eb, "repeated runs differ")?;
    Ok(format!("{samplers}; CLI reports identical ({} bytes)", ea.len()))
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

// Runs without the libtest harness so the verdict lines are never captured.
fn main() {
    let criteria: [Criterion; 10] = [
        ("spherical Crofton length", spherical_crofton, Duration::from_secs(10)),
        ("integral Wirtinger grid", integral_wirtinger, Duration::from_secs(30)),
        ("trace identity", trace_identity_exact, Duration::from_secs(1)),
        ("interleaved maximizer m=3", interleaved_maximizer, Duration::from_secs(300)),
        ("twisted-complex maximizers m=2", twisted_complex_maximizers, Duration::from_secs(120)),
        ("generic transversality", transversality, Duration::from_secs(30)),
        ("equidistribution", equidistribution, Duration::from_secs(60)),
        ("scalar circle in U(n)", su_example, Duration::from_secs(1)),
        ("higher Wirtinger objective", higher_wirtinger, Duration::from_secs(300)),
        ("samplers and reproducibility", infrastructure, Duration::from_secs(120)),
    ];
    let mut failures = Vec::new();
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *limit => Err(format!(
                "{detail}; took {elapsed:.1?}, limit {limit:?}"
            )),
            other => other,
        };
        match &outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL  {name}: {why} [{elapsed:.2?}]", i + 1);
                failures.push(i + 1);
            }
        }
    }
    if failures.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: failed criteria {failures:?}");
        std::process::exit(1);
    }
}
