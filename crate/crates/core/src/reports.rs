//! Run configuration, experiment dispatch and report emission.
//!
//! A report is a list of rows `name,value,stderr,samples,flag` plus the fully
//! resolved configuration that produced it, so every output file can be
//! regenerated from its own header.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::crofton::{
    calibrate_zeta, crofton_area_cp2, crofton_length, polyline_length, SphericalPolyline,
};
use crate::deformation::{
    cd_cp_tau, m_objective, m_objective_complex, maximizer_scan, structure_test_product,
    tasaki_plane, tau_grid, FamilyKind, FamilySpec, Field,
};
use crate::error::{Error, Result};
use crate::exterior::{InterleaveOperator, OrthoFrame};
use crate::intersections::{
    degeneracy_volume, equidistribution_experiment, grassmann_meet, su_circle_intersections,
    swap_rotation, HomogeneousCurve, Meet,
};
use crate::mc::McEstimate;
use crate::sampling::{random_frame, sample_rotation, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CroftonSphere,
    CroftonCp,
    CdScan,
    Prop34Scan,
    TasakiCheck,
    Transversality,
    Equidistribution,
    SunExample,
    Calibrate,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::CroftonSphere,
        Command::CroftonCp,
        Command::CdScan,
        Command::Prop34Scan,
        Command::TasakiCheck,
        Command::Transversality,
        Command::Equidistribution,
        Command::SunExample,
        Command::Calibrate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::CroftonSphere => "crofton-sphere",
            Command::CroftonCp => "crofton-cp",
            Command::CdScan => "cd-scan",
            Command::Prop34Scan => "prop34-scan",
            Command::TasakiCheck => "tasaki-check",
            Command::Transversality => "transversality",
            Command::Equidistribution => "equidistribution",
            Command::SunExample => "sun-example",
            Command::Calibrate => "calibrate",
        }
    }

    fn default_samples(&self) -> usize {
        match self {
            Command::CroftonSphere | Command::Calibrate => 100_000,
            Command::CdScan | Command::TasakiCheck => 1_000_000,
            Command::CroftonCp
            | Command::Prop34Scan
            | Command::Transversality
            | Command::Equidistribution => 10_000,
            Command::SunExample => 0,
        }
    }

    fn min_samples(&self) -> usize {
        match self {
            Command::CdScan | Command::Prop34Scan | Command::TasakiCheck => 1000,
            Command::CroftonSphere | Command::Calibrate | Command::Equidistribution => 100,
            Command::CroftonCp | Command::Transversality => 1,
            Command::SunExample => 0,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown format `{s}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Every knob that affects a run. `samples = 0` selects the command default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub samples: usize,
    pub restarts: usize,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    pub threads: usize,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub tau_grid: usize,
    pub degree: u32,
    pub complex: bool,
    /// Structure-test tolerance; 0 selects the sample-size default.
    pub tol: f64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Fail instead of warning when an optimizer does not converge.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::CdScan,
            seed: 0,
            samples: 0,
            restarts: 8,
            threads: 0,
            n: 2,
            k: 2,
            l: 3,
            m: 3,
            p: 1,
            q: 2,
            tau_grid: 9,
            degree: 2,
            complex: false,
            tol: 0.0,
            input: None,
            out: None,
            format: Format::Csv,
            strict: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value `{value}` for {key}: {e}")))
}

impl RunConfig {
    /// Sets one knob from its textual form. Keys use the flag spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "command" => self.command = value.parse()?,
            "seed" => self.seed = parse_value(key, value)?,
            "samples" => self.samples = parse_value(key, value)?,
            "restarts" => self.restarts = parse_value(key, value)?,
            "threads" => self.threads = parse_value(key, value)?,
            "n" => self.n = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "l" => self.l = parse_value(key, value)?,
            "m" => self.m = parse_value(key, value)?,
            "p" => self.p = parse_value(key, value)?,
            "q" => self.q = parse_value(key, value)?,
            "tau-grid" => self.tau_grid = parse_value(key, value)?,
            "degree" => self.degree = parse_value(key, value)?,
            "complex" => self.complex = parse_value(key, value)?,
            "tol" => self.tol = parse_value(key, value)?,
            "input" => self.input = (!value.is_empty()).then(|| PathBuf::from(value)),
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "strict" => self.strict = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// The knobs in echo order, as `(key, value)` text.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("command", self.command.to_string()),
            ("seed", self.seed.to_string()),
            ("samples", self.samples.to_string()),
            ("restarts", self.restarts.to_string()),
            ("threads", self.threads.to_string()),
            ("n", self.n.to_string()),
            ("k", self.k.to_string()),
            ("l", self.l.to_string()),
            ("m", self.m.to_string()),
            ("p", self.p.to_string()),
            ("q", self.q.to_string()),
            ("tau-grid", self.tau_grid.to_string()),
            ("degree", self.degree.to_string()),
            ("complex", self.complex.to_string()),
            ("tol", format!("{:?}", self.tol)),
            ("input", path(&self.input)),
            ("out", path(&self.out)),
            ("format", self.format.to_string()),
            ("strict", self.strict.to_string()),
        ]
    }

    /// Fills command defaults and checks dimensions and sample counts.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = self.clone();
        if c.samples == 0 {
            c.samples = c.command.default_samples();
        }
        if c.samples < c.command.min_samples() {
            return Err(Error::Config(format!(
                "{} needs at least {} samples, got {}",
                c.command,
                c.command.min_samples(),
                c.samples
            )));
        }
        let bad = |msg: String| Err(Error::Config(msg));
        match c.command {
            Command::CroftonSphere | Command::Calibrate if c.n < 1 => {
                return bad("sphere dimension n must be at least 1".into())
            }
            Command::CdScan if c.tau_grid < 2 => {
                return bad("tau-grid needs at least 2 points".into())
            }
            Command::Prop34Scan if c.m < 1 || c.p < 1 || c.p > c.q || c.restarts < 1 => {
                return bad(format!(
                    "scan needs m >= 1, 1 <= p <= q and restarts >= 1 (m={}, p={}, q={})",
                    c.m, c.p, c.q
                ))
            }
            Command::TasakiCheck if c.q < 2 => return bad("tasaki-check needs q >= 2".into()),
            Command::Transversality if c.k < 1 || c.k > c.l || c.m < 1 => {
                return bad(format!("transversality needs 1 <= k <= l, m >= 1 (k={}, l={})", c.k, c.l))
            }
            Command::CroftonCp | Command::Equidistribution if c.input.is_none() && c.degree < 1 => {
                return bad("degree must be at least 1".into())
            }
            Command::SunExample if c.n < 1 => return bad("n must be at least 1".into()),
            _ => {}
        }
        if !(c.tol >= 0.0) {
            return bad(format!("tolerance must be nonnegative, got {}", c.tol));
        }
        if let Some(path) = &c.input {
            if !path.is_file() {
                return bad(format!("input file {} does not exist", path.display()));
            }
        }
        Ok(c)
    }
}

/// One result line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    #[serde(with = "float_text")]
    pub value: f64,
    #[serde(with = "float_text")]
    pub stderr: f64,
    pub samples: u64,
    pub flag: String,
}

impl Row {
    fn exact(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            stderr: 0.0,
            samples: 0,
            flag: String::new(),
        }
    }

    fn estimate(name: impl Into<String>, e: &McEstimate) -> Self {
        Self {
            name: name.into(),
            value: e.mean,
            stderr: e.stderr,
            samples: e.samples,
            flag: String::new(),
        }
    }

    fn flagged(mut self, flag: impl Into<String>) -> Self {
        self.flag = flag.into();
        self
    }
}

/// Non-finite floats are written as the strings `inf`, `-inf` and `NaN`.
mod float_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub rows: Vec<Row>,
    pub diagnostics: BTreeMap<String, String>,
    pub wall_time: f64,
}

impl RunReport {
    /// The report with its wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time: 0.0,
            ..self.clone()
        }
    }
}

/// Runs the configured command on a pool of `config.threads` workers.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let config = config.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut diagnostics = BTreeMap::new();
    let rows = pool.install(|| dispatch(&config, &mut diagnostics))?;
    Ok(RunReport {
        config,
        rows,
        diagnostics,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn read_input(config: &RunConfig) -> Result<Option<String>> {
    config
        .input
        .as_ref()
        .map(std::fs::read_to_string)
        .transpose()
        .map_err(Error::from)
}

fn load_curve(config: &RunConfig) -> Result<HomogeneousCurve> {
    match read_input(config)? {
        Some(text) => HomogeneousCurve::parse(&text),
        None => Ok(HomogeneousCurve::fermat(config.degree)),
    }
}

fn within_flag(e: &McEstimate, target: f64) -> &'static str {
    if e.within(target, 3.0) {
        "within_3se"
    } else {
        "outside_3se"
    }
}

fn dispatch(c: &RunConfig, diag: &mut BTreeMap<String, String>) -> Result<Vec<Row>> {
    let stream = RandomStream::new(c.seed);
    let samples = c.samples;
    let mut rows = Vec::new();
    match c.command {
        Command::CroftonSphere => {
            let curve = match read_input(c)? {
                Some(text) => SphericalPolyline::parse(&text)?,
                None => SphericalPolyline::great_circle(c.n + 1, 360)?,
            };
            let truth = polyline_length(&curve);
            let est = crofton_length(&curve, samples, &stream)?;
            rows.push(Row::estimate("crofton_length", &est.length).flagged(within_flag(&est.length, truth)));
            rows.push(Row::exact("polyline_length", truth));
            diag.insert("rejected".into(), est.rejected.to_string());
        }
        Command::CroftonCp => {
            let curve = load_curve(c)?;
            let est = crofton_area_cp2(&curve, samples, &stream)?;
            let flag = if est.stderr == 0.0 && est.mean == curve.degree() as f64 {
                "equals_degree"
            } else {
                "differs_from_degree"
            };
            rows.push(Row::estimate("area", &est).flagged(flag));
            rows.push(Row::exact("degree", curve.degree() as f64));
        }
        Command::CdScan => {
            let estimates = tau_grid(c.tau_grid)
                .into_iter()
                .enumerate()
                .map(|(i, tau)| Ok((tau, cd_cp_tau(tau, samples, &stream.split(i as u64))?)))
                .collect::<Result<Vec<_>>>()?;
            let best = estimates
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.mean.total_cmp(&b.1 .1.mean))
                .map(|(i, _)| i);
            for (i, (tau, est)) in estimates.iter().enumerate() {
                let row = Row::estimate(format!("tau={tau:.6}"), est);
                rows.push(if Some(i) == best { row.flagged("max") } else { row });
            }
        }
        Command::Prop34Scan => {
            let field = if c.complex { Field::Complex } else { Field::Real };
            let kind = FamilyKind::Interleaved { m: c.m, p: c.p, q: c.q, field };
            let spec = FamilySpec::new(kind)?;
            let scan = maximizer_scan(&spec, c.restarts, samples, &stream.split(0))?;
            let block = if c.complex { 2 * c.q } else { c.q };
            let op = InterleaveOperator::new(block, c.m)?;
            let base_coords: Vec<usize> = (0..block / c.q * c.p).collect();
            let product = op.product_plane(&OrthoFrame::coordinate(block, &base_coords))?;
            let objective = if c.complex { m_objective_complex } else { m_objective };
            let exact = objective(&product, c.m, c.q, samples, &stream.split(1))?;
            let tol = if c.tol > 0.0 { c.tol } else { scan.structure.tolerance };
            let test = structure_test_product(&scan.best_plane, c.m, block, tol)?;
            let agree = if scan.best_value.agrees(&exact, 3.0) { "agrees" } else { "differs" };
            rows.push(Row::estimate("best_value", &scan.best_value).flagged(agree));
            rows.push(Row::estimate("product_value", &exact));
            rows.push(Row::exact("b_spread", test.spread).flagged(pass(test.pass)));
            rows.push(Row::exact("b0_spectrum", test.spectrum).flagged(pass(test.pass)));
            if let Some(r) = scan.structure.i_prime_residual {
                rows.push(Row::exact("i_prime_residual", r).flagged(pass(r <= tol)));
            }
            rows.push(Row::exact("accepted", scan.structure.accepted as u8 as f64));
            let converged = scan.converged();
            diag.insert("converged".into(), converged.to_string());
            diag.insert(
                "trace_residual".into(),
                format!("{:e}", scan.trace_residual.unwrap_or(0.0)),
            );
            diag.insert(
                "evaluations".into(),
                scan.restarts.iter().map(|r| r.evaluations).sum::<usize>().to_string(),
            );
            if c.strict && !converged {
                return Err(Error::NonConvergence(
                    "a restart hit the evaluation cap before the step floor".into(),
                ));
            }
        }
        Command::TasakiCheck => {
            let (m, q) = (2, c.q);
            let op = InterleaveOperator::new(q, m)?;
            let product = op.product_plane(&OrthoFrame::coordinate(q, &[0]))?;
            let mut u = DVector::zeros(2 * q);
            u[0] = FRAC_1_SQRT_2;
            u[q + 1] = FRAC_1_SQRT_2;
            let tasaki = tasaki_plane(q, &u)?;
            let random = random_frame(2 * q, 2, &mut stream.split(3));
            let pv = m_objective(&product, m, q, samples, &stream.split(0))?;
            let tv = m_objective(&tasaki, m, q, samples, &stream.split(1))?;
            let rv = m_objective(&random, m, q, samples, &stream.split(2))?;
            let d = crate::deformation::diagnose(
                &tasaki,
                &FamilyKind::Interleaved { m, p: 1, q, field: Field::Real },
                if c.tol > 0.0 { c.tol } else { 0.05 },
            )?;
            rows.push(Row::estimate("product", &pv));
            rows.push(Row::estimate("tasaki", &tv).flagged(if tv.agrees(&pv, 3.0) {
                "agrees"
            } else {
                "differs"
            }));
            rows.push(Row::estimate("random", &rv).flagged(if pv.exceeds(&rv, 3.0) {
                "below"
            } else {
                "not_below"
            }));
            rows.push(Row::exact("tasaki_product_form", d.product_form() as u8 as f64));
            rows.push(Row::exact("tasaki_i_prime_complex", d.i_prime_complex as u8 as f64));
        }
        Command::Transversality => {
            let (k, l, m) = (c.k, c.l, c.m);
            let n = l + m;
            let parts = crate::mc::run_batches(samples, &stream, |s, len| -> Result<(u64, f64)> {
                let mut degenerate = 0u64;
                let mut min_volume = f64::INFINITY;
                for _ in 0..len {
                    let y = sample_rotation(n, s);
                    min_volume = min_volume.min(degeneracy_volume(&y, k, l)?);
                    if matches!(grassmann_meet(&y, k, l, m)?, Meet::Degenerate { .. }) {
                        degenerate += 1;
                    }
                }
                Ok((degenerate, min_volume))
            });
            let (degenerate, min_volume) = parts
                .into_iter()
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold((0, f64::INFINITY), |(d, v), (d2, v2)| (d + d2, v.min(v2)));
            rows.push(Row {
                samples: samples as u64,
                ..Row::exact("degenerate_count", degenerate as f64)
            });
            rows.push(Row {
                samples: samples as u64,
                ..Row::exact("min_volume", min_volume)
            });
            if k + 2 <= n {
                let swap = degeneracy_volume(&swap_rotation(n, k), k, l)?;
                rows.push(Row::exact("swap_volume", swap).flagged(if swap <= 1e-9 {
                    "degenerate"
                } else {
                    "transversal"
                }));
            }
        }
        Command::Equidistribution => {
            let curve = load_curve(c)?;
            let exp = equidistribution_experiment(&curve, samples, &stream)?;
            for (count, hits) in &exp.histogram {
                rows.push(Row {
                    samples: samples as u64,
                    ..Row::exact(format!("count={count}"), *hits as f64 / samples as f64)
                });
            }
            rows.push(Row {
                samples: samples as u64,
                ..Row::exact("exceptional_fraction", exp.exceptional_fraction)
            });
        }
        Command::SunExample => {
            let r = su_circle_intersections(c.n)?;
            for (k, x) in r.points.iter().enumerate() {
                rows.push(Row::exact(format!("point{k}_angle"), x[(0, 0)].arg().rem_euclid(2.0 * PI)));
            }
            rows.push(Row::exact("points", r.points.len() as f64));
            rows.push(Row::exact("orthogonality_residual", r.orthogonality_residual));
            rows.push(Row::exact("membership_residual", r.membership_residual));
        }
        Command::Calibrate => {
            let reference = match read_input(c)? {
                Some(text) => SphericalPolyline::parse(&text)?,
                None => SphericalPolyline::great_circle(c.n + 1, 360)?,
            };
            let cal = calibrate_zeta(c.n, &reference, samples, &stream)?;
            let row = Row {
                name: "zeta".into(),
                value: cal.value,
                stderr: cal.stderr,
                samples: samples as u64,
                flag: if cal.low_power { "low_power".into() } else { String::new() },
            };
            rows.push(row);
            rows.push(Row::estimate("mean_count", &cal.count.count));
            rows.push(Row::exact("reference_length", polyline_length(&reference)));
            diag.insert("rejected".into(), cal.count.rejected.to_string());
        }
    }
    Ok(rows)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

const CSV_HEADER: &str = "name,value,stderr,samples,flag";

/// Serializes a report. CSV numbers carry 17 significant digits.
pub fn emit(report: &RunReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => {
            let mut out = String::from("# crofton report\n");
            for (key, value) in report.config.pairs() {
                out.push_str(&format!("# config {key}={value}\n"));
            }
            for (key, value) in &report.diagnostics {
                out.push_str(&format!("# diag {key}={value}\n"));
            }
            out.push_str(&format!("# wall_time={:.16e}\n", report.wall_time));
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            writer.write_record(CSV_HEADER.split(','))?;
            for row in &report.rows {
                writer.write_record([
                    row.name.clone(),
                    format!("{:.16e}", row.value),
                    format!("{:.16e}", row.stderr),
                    row.samples.to_string(),
                    row.flag.clone(),
                ])?;
            }
            let body = writer
                .into_inner()
                .map_err(|e| Error::Io(e.into_error()))?;
            out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
            Ok(out)
        }
    }
}

/// Inverse of [`emit`].
pub fn parse(text: &str, format: Format) -> Result<RunReport> {
    match format {
        Format::Json => Ok(serde_json::from_str(text)?),
        Format::Csv => parse_csv(text),
    }
}

fn parse_csv(text: &str) -> Result<RunReport> {
    let mut config = RunConfig::default();
    let mut diagnostics = BTreeMap::new();
    let mut wall_time = 0.0;
    for (i, line) in text.lines().enumerate() {
        let Some(comment) = line.strip_prefix('#') else {
            continue;
        };
        let comment = comment.trim();
        let bad = |m: &str| Error::Parse {
            line: i + 1,
            message: m.to_string(),
        };
        if let Some(pair) = comment.strip_prefix("config ") {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad("config line without `=`"))?;
            config.set(k, v)?;
        } else if let Some(pair) = comment.strip_prefix("diag ") {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad("diag line without `=`"))?;
            diagnostics.insert(k.to_string(), v.to_string());
        } else if let Some(v) = comment.strip_prefix("wall_time=") {
            wall_time = v.parse().map_err(|_| bad("bad wall time"))?;
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse {
            line: 0,
            message: format!("unexpected header `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |j: usize| record.get(j).unwrap_or("");
        let num = |j: usize| -> Result<f64> {
            field(j).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number `{}`", field(j)),
            })
        };
        rows.push(Row {
            name: field(0).to_string(),
            value: num(1)?,
            stderr: num(2)?,
            samples: field(3).parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad sample count `{}`", field(3)),
            })?,
            flag: field(4).to_string(),
        });
    }
    Ok(RunReport {
        config,
        rows,
        diagnostics,
        wall_time,
    })
}
