//! Crofton estimators: curve length on round spheres from random great
//! hyperspheres, and area of plane algebraic curves from random lines.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::intersections::{line_curve_count, random_line, HomogeneousCurve};
use crate::mc::{pairwise_merge, run_batches, McEstimate, Moments};
use crate::sampling::{sample_sphere, RandomStream};

/// Length of a curve over its mean number of crossings with a uniformly
/// random great hypersphere, in every dimension.
pub const KAPPA: f64 = PI;
/// Vertices closer than this to the hypersphere make the sample degenerate.
pub const TIE_THRESHOLD: f64 = 1e-9;

/// A geodesic polygon on `S^n ⊂ R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPolyline {
    /// Vertices as columns.
    vertices: DMatrix<f64>,
    closed: bool,
}

impl SphericalPolyline {
    pub fn new(vertices: DMatrix<f64>, closed: bool) -> Result<Self> {
        let count = vertices.ncols();
        if vertices.nrows() < 2 {
            return Err(Error::InvalidInput("ambient dimension must be at least 2".into()));
        }
        if count < 2 {
            return Err(Error::InvalidInput("a polyline needs at least two vertices".into()));
        }
        for j in 0..count {
            let norm = vertices.column(j).norm();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::NotUnit(norm));
            }
        }
        let segments = if closed { count } else { count - 1 };
        for j in 0..segments {
            let dot = vertices.column(j).dot(&vertices.column((j + 1) % count));
            if dot <= -1.0 + 1e-9 || dot >= 1.0 - 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "vertices {j} and {} are equal or antipodal",
                    (j + 1) % count
                )));
            }
        }
        Ok(Self { vertices, closed })
    }

    pub fn from_points(points: &[DVector<f64>], closed: bool) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != dim) {
            return Err(mismatch("vertices of different dimensions"));
        }
        Self::new(DMatrix::from_columns(points), closed)
    }

    /// Closed polygon with `vertices` equally spaced points on the circle at
    /// `colatitude` around the last axis of `S^2`. Vertices sit at half-step
    /// longitudes so none lies on a coordinate hyperplane.
    pub fn latitude_circle(colatitude: f64, vertices: usize) -> Result<Self> {
        let (s, c) = colatitude.sin_cos();
        let points: Vec<_> = (0..vertices)
            .map(|i| {
                let phi = TAU * (i as f64 + 0.5) / vertices as f64;
                DVector::from_vec(vec![s * phi.cos(), s * phi.sin(), c])
            })
            .collect();
        Self::from_points(&points, true)
    }

    /// Closed polygon inscribed in the great circle through `e_1, e_2` of
    /// `S^{ambient_dim - 1}`.
    pub fn great_circle(ambient_dim: usize, vertices: usize) -> Result<Self> {
        let points: Vec<_> = (0..vertices)
            .map(|i| {
                let phi = TAU * (i as f64 + 0.5) / vertices as f64;
                let mut x = DVector::zeros(ambient_dim);
                x[0] = phi.cos();
                x[1] = phi.sin();
                x
            })
            .collect();
        Self::from_points(&points, true)
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices.nrows()
    }

    pub fn sphere_dim(&self) -> usize {
        self.vertices.nrows() - 1
    }

    pub fn vertices(&self) -> &DMatrix<f64> {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.vertices.ncols();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |j| (j, (j + 1) % n))
    }

    /// `g · c` for an orthogonal `g`.
    pub fn rotated(&self, g: &DMatrix<f64>) -> Result<Self> {
        if g.shape() != (self.ambient_dim(), self.ambient_dim()) {
            return Err(mismatch(format!(
                "rotation {}x{} on R^{}",
                g.nrows(),
                g.ncols(),
                self.ambient_dim()
            )));
        }
        let mut v = g * &self.vertices;
        for mut col in v.column_iter_mut() {
            let norm = col.norm();
            col /= norm;
        }
        Self::new(v, self.closed)
    }

    /// Inserts the geodesic midpoint of every segment.
    pub fn refined(&self) -> Self {
        let mut points = Vec::with_capacity(2 * self.vertices.ncols());
        for (a, b) in self.segments() {
            let va = self.vertices.column(a).into_owned();
            let mid = (&va + self.vertices.column(b)).normalize();
            points.push(va);
            points.push(mid);
        }
        if !self.closed {
            points.push(self.vertices.column(self.vertices.ncols() - 1).into_owned());
        }
        Self {
            vertices: DMatrix::from_columns(&points),
            closed: self.closed,
        }
    }

    /// Parses the `SPHERE n CLOSED|OPEN` text format, one vertex per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            message: "empty polyline file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let header_err = || Error::Parse {
            line: hline,
            message: "expected header `SPHERE n CLOSED|OPEN`".into(),
        };
        if fields.len() != 3 || fields[0] != "SPHERE" {
            return Err(header_err());
        }
        let n: usize = fields[1].parse().map_err(|_| header_err())?;
        let closed = match fields[2] {
            "CLOSED" => true,
            "OPEN" => false,
            _ => return Err(header_err()),
        };
        let mut points = Vec::new();
        for (line, body) in lines {
            let coords = body
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line,
                    message: format!("bad coordinate: {e}"),
                })?;
            if coords.len() != n + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} coordinates, got {}", n + 1, coords.len()),
                });
            }
            points.push(DVector::from_vec(coords));
        }
        if points.is_empty() {
            return Err(Error::Parse {
                line: hline,
                message: "no vertices".into(),
            });
        }
        Self::from_points(&points, closed)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "SPHERE {} {}\n",
            self.sphere_dim(),
            if self.closed { "CLOSED" } else { "OPEN" }
        );
        for col in self.vertices.column_iter() {
            let line: Vec<String> = col.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Sum of the geodesic lengths of the segments.
pub fn polyline_length(c: &SphericalPolyline) -> f64 {
    c.segments()
        .map(|(a, b)| {
            let va = c.vertices.column(a);
            let vb = c.vertices.column(b);
            2.0 * (va - vb).norm().atan2((va + vb).norm())
        })
        .sum()
}

/// Crossings of the polyline with the great hypersphere `u^⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypersphereCount {
    Count(u32),
    /// A vertex lies within [`TIE_THRESHOLD`] of the hypersphere.
    Degenerate,
}

pub fn count_great_hypersphere(c: &SphericalPolyline, u: &DVector<f64>) -> Result<HypersphereCount> {
    if u.len() != c.ambient_dim() {
        return Err(mismatch(format!(
            "normal in R^{} for a curve in R^{}",
            u.len(),
            c.ambient_dim()
        )));
    }
    let dots = c.vertices.tr_mul(u);
    Ok(count_sign_changes(c, dots.as_slice()))
}

fn count_sign_changes(c: &SphericalPolyline, dots: &[f64]) -> HypersphereCount {
    if dots.iter().any(|d| d.abs() < TIE_THRESHOLD) {
        return HypersphereCount::Degenerate;
    }
    let count = c
        .segments()
        .filter(|&(a, b)| (dots[a] > 0.0) != (dots[b] > 0.0))
        .count();
    HypersphereCount::Count(count as u32)
}

/// Mean count of crossings with random great hyperspheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub count: McEstimate,
    /// Normals drawn and redrawn because they were degenerate.
    pub rejected: u64,
}

fn mean_count(c: &SphericalPolyline, samples: usize, stream: &RandomStream) -> Result<CountEstimate> {
    if samples < 100 {
        return Err(Error::InvalidInput(format!(
            "Crofton estimates need at least 100 samples, got {samples}"
        )));
    }
    let dim = c.ambient_dim();
    let parts = run_batches(samples, stream, |s, len| {
        let mut moments = Moments::default();
        let mut rejected = 0u64;
        let mut dots = DVector::zeros(c.vertices.ncols());
        while (moments.count as usize) < len {
            let u = sample_sphere(dim, s);
            c.vertices.tr_mul_to(&u, &mut dots);
            match count_sign_changes(c, dots.as_slice()) {
                HypersphereCount::Count(k) => moments.push(k as f64),
                HypersphereCount::Degenerate => rejected += 1,
            }
        }
        (moments, rejected)
    });
    let (moments, rejected) = pairwise_merge(&parts, &|a: &(Moments, u64), b: &(Moments, u64)| {
        (a.0.merge(&b.0), a.1 + b.1)
    })
    .unwrap_or_default();
    Ok(CountEstimate {
        count: moments.estimate(stream.seed()),
        rejected,
    })
}

/// Length estimate [`KAPPA`] · mean crossing count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CroftonEstimate {
    pub length: McEstimate,
    pub rejected: u64,
}

pub fn crofton_length(
    c: &SphericalPolyline,
    samples: usize,
    stream: &RandomStream,
) -> Result<CroftonEstimate> {
    let est = mean_count(c, samples, stream)?;
    Ok(CroftonEstimate {
        length: est.count.scaled(KAPPA),
        rejected: est.rejected,
    })
}

/// Empirical ratio of length to mean crossing count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub stderr: f64,
    pub count: CountEstimate,
    /// Too few crossings for the ratio to be meaningful.
    pub low_power: bool,
}

pub fn calibrate_zeta(
    n: usize,
    reference: &SphericalPolyline,
    samples: usize,
    stream: &RandomStream,
) -> Result<Calibration> {
    if reference.sphere_dim() != n {
        return Err(mismatch(format!(
            "reference curve on S^{} for calibration on S^{n}",
            reference.sphere_dim()
        )));
    }
    let length = polyline_length(reference);
    let count = mean_count(reference, samples, stream)?;
    let mean = count.count.mean;
    let (value, stderr) = if mean > 0.0 {
        (length / mean, length * count.count.stderr / (mean * mean))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let hits = mean * samples as f64;
    let low_power = !(stderr <= 0.05 * value) || hits < 100.0;
    Ok(Calibration {
        value,
        stderr,
        count,
        low_power,
    })
}

/// Area of a plane curve in units of the area of a line: the mean number of
/// distinct points on a random line.
pub fn crofton_area_cp2(
    curve: &HomogeneousCurve,
    samples: usize,
    stream: &RandomStream,
) -> Result<McEstimate> {
    if samples < 1 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let parts = run_batches(samples, stream, |s, len| -> Result<Moments> {
        let mut m = Moments::default();
        for _ in 0..len {
            let (p, q) = random_line(s);
            m.push(line_curve_count(curve, &p, &q)?.distinct as f64);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(pairwise_merge(&parts, &|a: &Moments, b: &Moments| a.merge(b))
        .unwrap_or_default()
        .estimate(stream.seed()))
}
