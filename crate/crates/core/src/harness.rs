//! Scenario-driven convergence experiments.
//!
//! Each experiment evaluates a counting function at dyadic scales `T = 2^j`
//! (plus the final `N` for toral runs) on independently seeded samples and
//! compares it against `normalizer * log T`.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::count::{dyadic_block_counts, CountRequest};
use crate::diophantine::{count_toral, forms_block_counts, toral_counts_at, ToralSystem};
use crate::error::{Error, Result};
use crate::geometry::{ball_volume, sphere_area};
use crate::origami::Origami;
use crate::region::{monte_carlo_volume, ThinningRegion};
use crate::sampling::{sample_affine_offset, sample_form, sample_haar_x2, SeededStream};
use crate::siegel::{siegel_target, siegel_values, zeta, SiegelVariant};
use crate::stats::{regression_slope, MCEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Forms,
    AffineForms,
    Toral,
    Lattice,
    AffineLattice,
    Siegel,
    Origami,
    VolumeCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Forms => "forms",
            Experiment::AffineForms => "affine-forms",
            Experiment::Toral => "toral",
            Experiment::Lattice => "lattice",
            Experiment::AffineLattice => "affine-lattice",
            Experiment::Siegel => "siegel",
            Experiment::Origami => "origami",
            Experiment::VolumeCheck => "volume-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaPolicy {
    #[default]
    Zero,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiegelKind {
    #[default]
    Plain,
    Primitive,
    Affine,
}

impl From<SiegelKind> for SiegelVariant {
    fn from(k: SiegelKind) -> Self {
        match k {
            SiegelKind::Plain => SiegelVariant::Plain,
            SiegelKind::Primitive => SiegelVariant::Primitive,
            SiegelKind::Affine => SiegelVariant::Affine,
        }
    }
}

fn one() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn ten() -> u32 {
    10
}

/// A complete experiment description, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub samples: u64,
    #[serde(default = "one_usize")]
    pub m: usize,
    #[serde(default = "one_usize")]
    pub n: usize,
    #[serde(default = "one_f64")]
    pub b: f64,
    #[serde(default = "ten", rename = "log2T", alias = "log2_t")]
    pub log2_t: u32,
    /// toral: last time `N` (defaults to `2^log2T`)
    #[serde(default)]
    pub max_n: Option<u64>,
    /// toral: random target instead of 0
    #[serde(default)]
    pub inhomogeneous: bool,
    /// lattice: count primitive vectors only
    #[serde(default)]
    pub primitive: bool,
    /// siegel: which transform to average
    #[serde(default)]
    pub variant: SiegelKind,
    /// origami: surface file (the 3-square L when absent)
    #[serde(default)]
    pub origami_file: Option<PathBuf>,
    #[serde(default)]
    pub theta: ThetaPolicy,
    #[serde(default)]
    pub distinct_holonomies: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl Scenario {
    pub fn new(experiment: Experiment) -> Self {
        Scenario {
            experiment,
            seed: 0,
            samples: 1,
            m: 1,
            n: 1,
            b: 1.0,
            log2_t: 10,
            max_n: None,
            inhomogeneous: false,
            primitive: false,
            variant: SiegelKind::Plain,
            origami_file: None,
            theta: ThetaPolicy::Zero,
            distinct_holonomies: false,
            output: None,
            format: Format::Csv,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if self.samples == 0 {
            return bad("samples must be >= 1".into());
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return bad(format!("b must be positive and finite, got {}", self.b));
        }
        if self.m == 0 || self.n == 0 {
            return bad("m and n must be >= 1".into());
        }
        if self.log2_t == 0 || self.log2_t > 62 {
            return bad(format!("log2T must be in 1..=62, got {}", self.log2_t));
        }
        let planar = matches!(
            self.experiment,
            Experiment::Lattice
                | Experiment::AffineLattice
                | Experiment::Siegel
                | Experiment::Origami
        );
        if planar && (self.m, self.n) != (1, 1) {
            return bad(format!(
                "{} runs on random planar lattices and needs m = n = 1",
                self.experiment.name()
            ));
        }
        if self.experiment == Experiment::Toral && self.n != 1 {
            return bad("toral takes only m (the torus dimension)".into());
        }
        if let Some(n) = self.max_n {
            if self.experiment != Experiment::Toral {
                return bad("max_n applies only to toral".into());
            }
            if n < 2 {
                return bad("max_n must be >= 2".into());
            }
        }
        if self.experiment == Experiment::AffineLattice && self.primitive {
            return bad("primitive vectors are not defined for translated lattices".into());
        }
        if self.theta == ThetaPolicy::Random
            && !matches!(
                self.experiment,
                Experiment::Origami | Experiment::VolumeCheck
            )
        {
            return bad("theta applies only to origami and volume-check".into());
        }
        if self.theta == ThetaPolicy::Random
            && self.experiment == Experiment::VolumeCheck
            && (self.m, self.n) != (1, 1)
        {
            return bad("rotated regions need m = n = 1".into());
        }
        Ok(())
    }

    fn stream(&self) -> SeededStream {
        SeededStream::new(self.seed, 0)
    }
}

/// One `(sample, scale)` observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub sample: u64,
    pub scale: f64,
    pub count: u64,
    pub expected: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// constant `c` with `expected = c log(scale)`
    pub normalizer: f64,
    pub final_scale: f64,
    /// mean over samples of `count / expected` at the largest scale
    pub final_ratio: f64,
    pub final_ratio_stderr: Option<f64>,
    /// least-squares slope of the mean count against `log T`, top half of scales
    pub slope: Option<f64>,
    pub slope_ratio: Option<f64>,
    /// mean dyadic block count over blocks and samples
    pub block_mean: Option<f64>,
    /// `block_mean / (normalizer log 2)`
    pub block_ratio: Option<f64>,
    /// empirical Siegel-Veech constant (origami only)
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub experiment: Experiment,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub b: f64,
    pub rows: Vec<Row>,
    pub summary: Summary,
}

/// A failed run together with the rows of the samples completed before it.
#[derive(Debug)]
pub struct PartialFailure {
    pub error: Error,
    pub partial: Option<Box<ConvergenceReport>>,
}

type SampleSeries = Vec<(f64, u64)>;

fn dyadic_series(blocks: &[u64]) -> SampleSeries {
    blocks
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .enumerate()
        .map(|(j, c)| (((j + 1) as f64).exp2(), c))
        .collect()
}

fn top_scale(s: &Scenario) -> f64 {
    (s.log2_t as f64).exp2()
}

fn toral_scales(s: &Scenario) -> Vec<u64> {
    let last = s.max_n.unwrap_or(1u64 << s.log2_t);
    let mut scales: Vec<u64> = (1..63)
        .map(|j| 1u64 << j)
        .take_while(|&x| x < last)
        .collect();
    scales.push(last);
    scales
}

fn normalizer(s: &Scenario) -> Result<f64> {
    let (m, n, b) = (s.m, s.n, s.b);
    Ok(match s.experiment {
        Experiment::Forms | Experiment::AffineForms => {
            b.powi(m as i32) * ball_volume(m)? * sphere_area(n)?
        }
        Experiment::Toral => b.powi(m as i32) * ball_volume(m)?,
        Experiment::Lattice | Experiment::AffineLattice => {
            let base = b * ball_volume(m)? * sphere_area(n)?;
            if s.primitive {
                base / zeta((m + n) as u32)?
            } else {
                base
            }
        }
        Experiment::Siegel => {
            let region = ThinningRegion::up_to(b, m, n, top_scale(s))?;
            siegel_target(&region, s.variant.into())? / top_scale(s).ln()
        }
        // replaced by 2 b C-hat once the samples are in
        Experiment::Origami => 2.0 * b,
        Experiment::VolumeCheck => b * ball_volume(m)? * sphere_area(n)?,
    })
}

fn load_origami(s: &Scenario) -> Result<Origami> {
    match &s.origami_file {
        Some(p) => Origami::from_file(p),
        None => Ok(Origami::l_shape()),
    }
}

fn run_sample(s: &Scenario, origami: Option<&Origami>, i: u64) -> Result<SampleSeries> {
    let stream = s.stream().derive(i);
    let k = s.log2_t;
    match s.experiment {
        Experiment::Forms | Experiment::AffineForms => {
            let sys = sample_form(
                s.m,
                s.n,
                s.b,
                s.experiment == Experiment::AffineForms,
                &stream,
            )?;
            Ok(dyadic_series(&forms_block_counts(&sys, k)?))
        }
        Experiment::Toral => {
            let mut rng = stream.rng();
            let alpha: Vec<f64> = (0..s.m).map(|_| rng.gen()).collect();
            let target: Vec<f64> = if s.inhomogeneous {
                (0..s.m).map(|_| rng.gen()).collect()
            } else {
                vec![0.0; s.m]
            };
            let sys = ToralSystem::new(alpha, target, s.b)?;
            let scales = toral_scales(s);
            let counts = if scales.len() == 1 {
                vec![count_toral(&sys, scales[0])?]
            } else {
                toral_counts_at(&sys, &scales)?
            };
            Ok(scales.iter().map(|&x| x as f64).zip(counts).collect())
        }
        Experiment::Lattice | Experiment::AffineLattice => {
            let basis = sample_haar_x2(&stream);
            let region = ThinningRegion::up_to(s.b, 1, 1, top_scale(s))?;
            let req = if s.experiment == Experiment::AffineLattice {
                CountRequest::new(
                    sample_affine_offset(&basis, &stream.derive(u64::MAX)),
                    region,
                )
            } else {
                CountRequest::new(basis, region).primitive(s.primitive)
            };
            Ok(dyadic_series(&dyadic_block_counts(&req, k)?))
        }
        Experiment::Origami => {
            let o = origami.expect("loaded before sampling");
            let theta = match s.theta {
                ThetaPolicy::Zero => 0.0,
                ThetaPolicy::Random => stream.rng().gen::<f64>() * std::f64::consts::TAU,
            };
            let blocks = (0..k)
                .map(|j| {
                    let lo = (j as f64).exp2();
                    o.saddle_connections_in_shell(s.b, lo, 2.0 * lo, theta, s.distinct_holonomies)
                        .map(|(c, _)| c)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(dyadic_series(&blocks))
        }
        Experiment::Siegel | Experiment::VolumeCheck => unreachable!("handled separately"),
    }
}

/// Runs every sample; on failure keeps the completed prefix of samples.
fn run_series(s: &Scenario) -> (Vec<SampleSeries>, Option<Error>) {
    let origami = if s.experiment == Experiment::Origami {
        match load_origami(s) {
            Ok(o) => Some(o),
            Err(e) => return (Vec::new(), Some(e)),
        }
    } else {
        None
    };
    let results: Vec<Result<SampleSeries>> = (0..s.samples)
        .into_par_iter()
        .map(|i| run_sample(s, origami.as_ref(), i))
        .collect();
    let mut out = Vec::new();
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(e) => return (out, Some(e)),
        }
    }
    (out, None)
}

fn summarize(
    norm: f64,
    series: &[SampleSeries],
    constant: Option<f64>,
    dyadic_blocks: bool,
) -> Summary {
    let scales: Vec<f64> = series[0].iter().map(|&(x, _)| x).collect();
    let last = scales.len() - 1;
    let final_scale = scales[last];
    let ratios: Vec<f64> = series
        .iter()
        .map(|s| s[last].1 as f64 / (norm * final_scale.ln()))
        .collect();
    let final_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let final_ratio_stderr = MCEstimate::from_values(ratios).ok().map(|e| e.stderr);

    let mean_counts: Vec<f64> = (0..scales.len())
        .map(|i| series.iter().map(|s| s[i].1 as f64).sum::<f64>() / series.len() as f64)
        .collect();
    let half = scales.len() / 2;
    let xs: Vec<f64> = scales[half..].iter().map(|x| x.ln()).collect();
    let slope = regression_slope(&xs, &mean_counts[half..]);

    // only rows at exact powers of two are block boundaries
    let block_mean = if dyadic_blocks {
        let mut total = 0.0;
        let mut blocks = 0usize;
        for s in series {
            let mut prev = 0u64;
            for (i, &(x, c)) in s.iter().enumerate() {
                if x != ((i + 1) as f64).exp2() {
                    break;
                }
                total += (c - prev) as f64;
                prev = c;
                blocks += 1;
            }
        }
        (blocks > 0).then(|| total / blocks as f64)
    } else {
        None
    };
    Summary {
        normalizer: norm,
        final_scale,
        final_ratio,
        final_ratio_stderr,
        slope,
        slope_ratio: slope.map(|v| v / norm),
        block_mean,
        block_ratio: block_mean.map(|v| v / (norm * std::f64::consts::LN_2)),
        constant,
    }
}

fn report_from_series(s: &Scenario, series: &[SampleSeries]) -> Result<Option<ConvergenceReport>> {
    if series.is_empty() {
        return Ok(None);
    }
    let mut norm = normalizer(s)?;
    let mut constant = None;
    if s.experiment == Experiment::Origami {
        let t = top_scale(s);
        let c = series
            .iter()
            .map(|v| v.last().unwrap().1 as f64 / (2.0 * s.b * t.ln()))
            .sum::<f64>()
            / series.len() as f64;
        constant = Some(c);
        norm = 2.0 * s.b * c;
    }
    let mut rows = Vec::new();
    for (i, v) in series.iter().enumerate() {
        for &(scale, count) in v {
            let expected = norm * scale.ln();
            rows.push(Row {
                sample: i as u64,
                scale,
                count,
                expected,
                ratio: ratio(count as f64, expected),
            });
        }
    }
    let summary = summarize(norm, series, constant, true);
    Ok(Some(ConvergenceReport {
        experiment: s.experiment,
        seed: s.seed,
        m: s.m,
        n: s.n,
        b: s.b,
        rows,
        summary,
    }))
}

fn ratio(count: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        if count == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        count / expected
    }
}

fn run_siegel(s: &Scenario) -> Result<ConvergenceReport> {
    let t = top_scale(s);
    let region = ThinningRegion::up_to(s.b, 1, 1, t)?;
    let variant: SiegelVariant = s.variant.into();
    let target = siegel_target(&region, variant)?;
    let values = siegel_values(&region, s.samples, variant, &s.stream())?;
    let rows: Vec<Row> = values
        .iter()
        .enumerate()
        .map(|(i, &c)| Row {
            sample: i as u64,
            scale: t,
            count: c,
            expected: target,
            ratio: ratio(c as f64, target),
        })
        .collect();
    let series: Vec<SampleSeries> = values.iter().map(|&c| vec![(t, c)]).collect();
    let mut summary = summarize(target / t.ln(), &series, None, false);
    summary.slope = None;
    summary.slope_ratio = None;
    Ok(ConvergenceReport {
        experiment: s.experiment,
        seed: s.seed,
        m: 1,
        n: 1,
        b: s.b,
        rows,
        summary,
    })
}

fn run_volume_check(s: &Scenario) -> Result<ConvergenceReport> {
    let t = top_scale(s);
    let theta = match s.theta {
        ThetaPolicy::Zero => 0.0,
        ThetaPolicy::Random => {
            s.stream().derive(u64::MAX).rng().gen::<f64>() * std::f64::consts::TAU
        }
    };
    let region = ThinningRegion::rotated(s.b, s.m, s.n, 1.0, t, theta)?;
    let vs = monte_carlo_volume(&region, s.samples, &s.stream());
    let p = region.volume() / vs.box_volume;
    let expected = p * vs.samples as f64;
    let row = Row {
        sample: 0,
        scale: t,
        count: vs.hits,
        expected,
        ratio: ratio(vs.hits as f64, expected),
    };
    let est = vs.estimate();
    let norm = region.volume() / t.ln();
    Ok(ConvergenceReport {
        experiment: s.experiment,
        seed: s.seed,
        m: s.m,
        n: s.n,
        b: s.b,
        rows: vec![row],
        summary: Summary {
            normalizer: norm,
            final_scale: t,
            final_ratio: row.ratio,
            final_ratio_stderr: Some(est.stderr / region.volume()),
            slope: None,
            slope_ratio: None,
            block_mean: None,
            block_ratio: None,
            constant: None,
        },
    })
}

/// Runs a scenario; on failure returns whatever was completed.
pub fn run_scenario_partial(
    s: &Scenario,
) -> std::result::Result<ConvergenceReport, PartialFailure> {
    let fail = |error| PartialFailure {
        error,
        partial: None,
    };
    s.validate().map_err(fail)?;
    match s.experiment {
        Experiment::Siegel => return run_siegel(s).map_err(fail),
        Experiment::VolumeCheck => return run_volume_check(s).map_err(fail),
        _ => {}
    }
    let (series, err) = run_series(s);
    let report = report_from_series(s, &series).map_err(fail)?;
    match (err, report) {
        (None, Some(r)) => Ok(r),
        (Some(error), partial) => Err(PartialFailure {
            error,
            partial: partial.map(Box::new),
        }),
        (None, None) => Err(fail(Error::Scenario("no samples".into()))),
    }
}

pub fn run_scenario(s: &Scenario) -> Result<ConvergenceReport> {
    run_scenario_partial(s).map_err(|f| f.error)
}

/// Bracketing of the mean count at an arbitrary `T` by its values at the
/// surrounding report scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interpolation {
    pub lower: f64,
    pub upper: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    /// count interpolated linearly in `log T`, over `normalizer log T`
    pub ratio: f64,
}

/// Uses that the count is nondecreasing in `T`: for `T_j <= T < T_{j+1}`,
/// `count(T_j) <= count(T) <= count(T_{j+1})`.
pub fn interpolate_monotone(report: &ConvergenceReport, t_query: f64) -> Result<Interpolation> {
    let mut scales: Vec<f64> = report.rows.iter().map(|r| r.scale).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    let samples = report
        .rows
        .iter()
        .map(|r| r.sample)
        .max()
        .map_or(0, |s| s + 1);
    let mean: Vec<f64> = scales
        .iter()
        .map(|&x| {
            report
                .rows
                .iter()
                .filter(|r| r.scale == x)
                .map(|r| r.count as f64)
                .sum::<f64>()
                / samples as f64
        })
        .collect();
    for sample in 0..samples {
        let mut counts: Vec<(f64, u64)> = report
            .rows
            .iter()
            .filter(|r| r.sample == sample)
            .map(|r| (r.scale, r.count))
            .collect();
        counts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if counts.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::invalid(format!(
                "counts of sample {sample} are not monotone in T"
            )));
        }
    }
    let (first, last) = match (scales.first(), scales.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::invalid("empty report")),
    };
    if !(t_query >= first && t_query <= last) || t_query <= 1.0 {
        return Err(Error::OutOfRange(t_query));
    }
    let j = scales.iter().rposition(|&x| x <= t_query).unwrap();
    let (lower, upper) = if j + 1 < scales.len() {
        (mean[j], mean[j + 1])
    } else {
        (mean[j], mean[j])
    };
    let denom = report.summary.normalizer * t_query.ln();
    let interp = if j + 1 < scales.len() {
        let w = (t_query.ln() - scales[j].ln()) / (scales[j + 1].ln() - scales[j].ln());
        lower + w * (upper - lower)
    } else {
        lower
    };
    Ok(Interpolation {
        lower,
        upper,
        lower_ratio: lower / denom,
        upper_ratio: upper / denom,
        ratio: interp / denom,
    })
}

/// C-style `%.12g`.
pub fn format_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip(mant), sign, exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        strip(&format!("{x:.decimals$}"))
    }
}

pub const CSV_HEADER: &str = "experiment,seed,sample,m,n,b,scale,count,expected,ratio";

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                self.experiment.name(),
                self.seed,
                r.sample,
                self.m,
                self.n,
                format_g12(self.b),
                format_g12(r.scale),
                r.count,
                format_g12(r.expected),
                format_g12(r.ratio)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}
