//! Moment and invariance checks for the samplers, shared between test targets.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use crofton_core::exterior::{projection_volume, ComplexStructure};
use crofton_core::mc::{McEstimate, Moments};
use crofton_core::sampling::{
    sample_cp_point, sample_rotation, sample_sphere, sample_torus_s3, sample_unitary,
    RandomStream, TorusPoint,
};
use crofton_core::OrthoFrame;
use nalgebra::{DMatrix, DVector};

pub type Check = Result<String, String>;

fn moment(samples: usize, mut f: impl FnMut() -> f64) -> McEstimate {
    let m: Moments = (0..samples).map(|_| f()).collect();
    m.estimate(0)
}

fn near(name: &str, est: McEstimate, target: f64) -> Result<(), String> {
    if est.within(target, 3.0) {
        Ok(())
    } else {
        Err(format!(
            "{name}: {:.6} ± {:.2e}, expected {target:.6}",
            est.mean, est.stderr
        ))
    }
}

pub fn sphere_moments(root: &RandomStream) -> Check {
    let mut s = root.split(0);
    let n = 10_000;
    let plus = (0..n).filter(|_| sample_sphere(1, &mut s)[0] > 0.0).count() as f64;
    let chi2 = (2.0 * plus - n as f64).powi(2) / n as f64;
    if chi2 > 10.83 {
        return Err(format!("S^0 sign chi-square {chi2:.2}"));
    }
    let mut s = root.split(1);
    near("S^2 x1²", moment(100_000, || sample_sphere(3, &mut s)[0].powi(2)), 1.0 / 3.0)?;
    let mut s = root.split(2);
    near(
        "S^3 x1²+x2²",
        moment(100_000, || {
            let x = sample_sphere(4, &mut s);
            x[0] * x[0] + x[1] * x[1]
        }),
        0.5,
    )?;
    // Rotated moments: x ↦ g x for a fixed rotation g.
    let g = sample_rotation(3, &mut root.split(3));
    let mut s = root.split(4);
    let mut first = Moments::default();
    let mut cross = Moments::default();
    for _ in 0..100_000 {
        let y = &g * sample_sphere(3, &mut s);
        first.push(y[0] * y[0]);
        cross.push(y[0] * y[1]);
    }
    near("rotated S^2 y1²", first.estimate(0), 1.0 / 3.0)?;
    near("rotated S^2 y1 y2", cross.estimate(0), 0.0)?;
    Ok("sphere".into())
}

pub fn rotation_moments(root: &RandomStream) -> Check {
    let mut s = root.split(10);
    let mut entry = Moments::default();
    let mut column = Moments::default();
    let mut trace_sq = Moments::default();
    let mut product_entry = Moments::default();
    let mut product_column = Moments::default();
    for _ in 0..10_000 {
        let g = sample_rotation(3, &mut s);
        entry.push(g[(0, 0)]);
        column.push(g[(0, 0)].powi(2));
        trace_sq.push(g.trace().powi(2));
        let h = &g * sample_rotation(3, &mut s);
        product_entry.push(h[(0, 0)]);
        product_column.push(h[(0, 0)].powi(2));
    }
    near("SO(3) g11", entry.estimate(0), 0.0)?;
    near("SO(3) g11²", column.estimate(0), 1.0 / 3.0)?;
    near("SO(3) tr²", trace_sq.estimate(0), 1.0)?;
    near("SO(3) product g11", product_entry.estimate(0), 0.0)?;
    near("SO(3) product g11²", product_column.estimate(0), 1.0 / 3.0)?;
    Ok("rotations".into())
}

pub fn unitary_moments(root: &RandomStream) -> Check {
    let mut s = root.split(20);
    let j = ComplexStructure::standard(2);
    let mut modulus = Moments::default();
    let mut trace = Moments::default();
    for _ in 0..10_000 {
        let u = sample_unitary(2, &mut s);
        let comm = (&u * j.matrix() - j.matrix() * &u).amax();
        if comm > 1e-12 {
            return Err(format!("unitary fails to commute with J ({comm:.2e})"));
        }
        modulus.push(u[(0, 0)].powi(2) + u[(1, 0)].powi(2));
        // |tr U|² from the realified trace: tr_R = 2 Re tr U.
        let (re, im) = (0..2).fold((0.0, 0.0), |(re, im), k| {
            (re + u[(2 * k, 2 * k)], im + u[(2 * k + 1, 2 * k)])
        });
        trace.push(re * re + im * im);
    }
    near("U(2) |u11|²", modulus.estimate(0), 0.5)?;
    near("U(2) |tr|²", trace.estimate(0), 1.0)?;
    Ok("unitaries".into())
}

/// CDF of the `beta` marginal, density `|sin 2β|` on `[0, π]`.
fn beta_cdf(beta: f64) -> f64 {
    let s2 = beta.sin().powi(2);
    if beta <= FRAC_PI_2 {
        s2 / 2.0
    } else {
        1.0 - s2 / 2.0
    }
}

pub fn torus_moments(root: &RandomStream) -> Check {
    let mut s = root.split(30);
    let points: Vec<TorusPoint> = (0..100_000).map(|_| sample_torus_s3(&mut s)).collect();
    near(
        "torus a1²",
        moment(points.len(), {
            let mut it = points.iter();
            move || it.next().unwrap().to_s3()[0].powi(2)
        }),
        0.25,
    )?;
    near(
        "torus sin²β",
        moment(points.len(), {
            let mut it = points.iter();
            move || it.next().unwrap().beta.sin().powi(2)
        }),
        0.5,
    )?;
    // Shifting alpha and gamma is an isometry of S³.
    let shifted = moment(points.len(), {
        let mut it = points.iter();
        move || {
            let x = it.next().unwrap().rotate(1.1, -0.4).to_s3();
            x[0] * x[0] + x[2] * x[3]
        }
    });
    near("shifted torus a1² + b1 b2", shifted, 0.25)?;

    let mut betas: Vec<f64> = points.iter().map(|p| p.beta).collect();
    betas.sort_by(f64::total_cmp);
    let n = betas.len() as f64;
    let ks = betas
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let f = beta_cdf(b);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    if ks * n.sqrt() > 1.95 {
        return Err(format!("beta KS statistic {:.3}", ks * n.sqrt()));
    }
    if betas.first().copied().unwrap_or(0.0) < 0.0 || betas.last().copied().unwrap_or(0.0) > PI {
        return Err("beta outside [0, π]".into());
    }
    Ok("torus".into())
}

pub fn cp_moments(root: &RandomStream) -> Check {
    let mut s = root.split(40);
    let line = OrthoFrame::coordinate(4, &[0, 1]);
    let j = ComplexStructure::standard(2);
    let est = moment(100_000, || {
        let x = sample_cp_point(2, &mut s);
        let z = OrthoFrame::from_orthonormal(DMatrix::from_columns(&[x.clone(), j.apply(&x)]))
            .expect("x, Jx orthonormal");
        projection_volume(&line, &z).expect("equal ambient")
    });
    near("CP^1 line pairing", est, 0.5)?;
    let x: DVector<f64> = sample_cp_point(1, &mut s);
    if (x.norm() - 1.0).abs() > 1e-12 {
        return Err("CP^0 representative not unit".into());
    }
    Ok("projective points".into())
}

pub fn sampler_checks(root: &RandomStream) -> Check {
    let names = [
        sphere_moments(root)?,
        rotation_moments(root)?,
        unitary_moments(root)?,
        torus_moments(root)?,
        cp_moments(root)?,
    ];
    Ok(format!("{} samplers pass", names.len()))
}
