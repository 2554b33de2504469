//! Finite-support probability measures on `Z = X x Y`.
//!
//! Ground truths, empirical measures and laws of estimators all use
//! [`DiscreteDistribution`]. Scalar laws are stored as points with an empty
//! input vector and the value in `y`.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::losses::Gauge;

const WEIGHT_TOL: f64 = 1e-9;

/// A point `z = (x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Point {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Point { x, y }
    }

    pub fn scalar(value: f64) -> Self {
        Point {
            x: Vec::new(),
            y: value,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Euclidean norm of the concatenated vector `(x, y)`.
    pub fn norm(&self) -> f64 {
        (self.x.iter().map(|v| v * v).sum::<f64>() + self.y * self.y).sqrt()
    }

    /// Euclidean distance on the concatenated vector `(x, y)`.
    pub fn distance(&self, other: &Point) -> f64 {
        let dx: f64 = self
            .x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (dx + (self.y - other.y) * (self.y - other.y)).sqrt()
    }

    fn is_finite(&self) -> bool {
        self.y.is_finite() && self.x.iter().all(|v| v.is_finite())
    }
}

/// Probability measure with finitely many atoms. Atoms are not deduplicated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a measure from weights that already sum to one (within 1e-9);
    /// they are renormalized exactly.
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let total = Self::check_parts(&atoms, &weights)?;
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self::normalized(atoms, weights, total))
    }

    /// Builds a measure from arbitrary positive weights, normalizing them.
    /// Returns whether the input total was off by more than 1e-9.
    pub fn from_unnormalized(atoms: Vec<Point>, weights: Vec<f64>) -> Result<(Self, bool)> {
        let total = Self::check_parts(&atoms, &weights)?;
        let off = (total - 1.0).abs() > WEIGHT_TOL;
        Ok((Self::normalized(atoms, weights, total), off))
    }

    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(invalid("distribution needs at least one atom"));
        }
        let weights = vec![1.0 / n as f64; n];
        Self::check_parts(&atoms, &weights)?;
        Ok(DiscreteDistribution { atoms, weights })
    }

    pub fn dirac(z: Point) -> Self {
        DiscreteDistribution {
            atoms: vec![z],
            weights: vec![1.0],
        }
    }

    pub fn from_scalars(values: &[f64], weights: &[f64]) -> Result<Self> {
        Self::new(
            values.iter().map(|&v| Point::scalar(v)).collect(),
            weights.to_vec(),
        )
    }

    pub fn uniform_scalars(values: &[f64]) -> Result<Self> {
        Self::uniform(values.iter().map(|&v| Point::scalar(v)).collect())
    }

    /// Measure with the given atoms weighted proportionally to `counts`;
    /// atoms with zero count are dropped.
    pub fn from_counts(atoms: &[Point], counts: &[usize]) -> Result<Self> {
        if atoms.len() != counts.len() {
            return Err(invalid("atoms and counts differ in length"));
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(invalid("counts are all zero"));
        }
        let (kept, weights): (Vec<Point>, Vec<f64>) = atoms
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(a, &c)| (a.clone(), c as f64 / total as f64))
            .unzip();
        Ok(DiscreteDistribution {
            atoms: kept,
            weights,
        })
    }

    fn check_parts(atoms: &[Point], weights: &[f64]) -> Result<f64> {
        if atoms.is_empty() {
            return Err(invalid("distribution needs at least one atom"));
        }
        if atoms.len() != weights.len() {
            return Err(invalid(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].dim();
        for a in atoms {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.dim(),
                });
            }
            if !a.is_finite() {
                return Err(invalid("atoms must have finite coordinates"));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(invalid(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        Ok(weights.iter().sum())
    }

    fn normalized(atoms: Vec<Point>, weights: Vec<f64>, total: f64) -> Self {
        let weights = weights.into_iter().map(|w| w / total).collect();
        DiscreteDistribution { atoms, weights }
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Input dimension shared by all atoms.
    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn is_scalar(&self) -> bool {
        self.dim() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `sum_i w_i g(z_i)`.
    pub fn expect(&self, g: impl Fn(&Point) -> f64) -> f64 {
        self.iter().map(|(z, w)| w * g(z)).sum()
    }

    /// Scalar values of a scalar law.
    pub fn values(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.y).collect()
    }

    /// Translates every atom by `(dx, dy)`.
    pub fn translate(&self, dx: &[f64], dy: f64) -> Result<Self> {
        if dx.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dx.len(),
            });
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Point::new(a.x.iter().zip(dx).map(|(v, d)| v + d).collect(), a.y + dy))
            .collect();
        Ok(DiscreteDistribution {
            atoms,
            weights: self.weights.clone(),
        })
    }

    pub fn max_atom_norm(&self) -> f64 {
        self.atoms.iter().map(Point::norm).fold(0.0, f64::max)
    }
}

/// Generator for draw stream `stream` under `seed`.
///
/// ChaCha is counter based: the stream index selects an independent
/// keystream and draws advance the block counter, so replication `j` only
/// depends on `(seed, j)` and not on which thread or in which order it runs.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn draw_index(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Atom indices of `n` i.i.d. draws on stream `stream`.
pub fn sample_indices(
    dist: &DiscreteDistribution,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    let cdf = cumulative(&dist.weights);
    let mut rng = stream_rng(seed, stream);
    Ok((0..n).map(|_| draw_index(&cdf, &mut rng)).collect())
}

/// `n` i.i.d. draws from `dist`, bitwise reproducible for a fixed seed.
pub fn sample(dist: &DiscreteDistribution, n: usize, seed: u64) -> Result<Vec<Point>> {
    sample_stream(dist, n, seed, 0)
}

pub fn sample_stream(
    dist: &DiscreteDistribution,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<Point>> {
    Ok(sample_indices(dist, n, seed, stream)?
        .into_iter()
        .map(|i| dist.atoms[i].clone())
        .collect())
}

/// The empirical measure of `samples` as a measure over the atoms of `dist`:
/// the same measure as [`empirical`] of the drawn points, with repeated
/// atoms merged.
pub fn sample_empirical(
    dist: &DiscreteDistribution,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<DiscreteDistribution> {
    let mut counts = vec![0usize; dist.len()];
    for i in sample_indices(dist, n, seed, stream)? {
        counts[i] += 1;
    }
    DiscreteDistribution::from_counts(&dist.atoms, &counts)
}

/// Uniform weights `1/N` on the given samples, order preserved.
pub fn empirical(samples: &[Point]) -> Result<DiscreteDistribution> {
    DiscreteDistribution::uniform(samples.to_vec())
}

/// `sum_i w_i phi(z_i)^p`.
pub fn moment<G: Gauge + ?Sized>(
    dist: &DiscreteDistribution,
    gauge: &G,
    power: f64,
) -> Result<f64> {
    if !(power >= 1.0) {
        return Err(invalid(format!(
            "moment power must be at least 1, got {power}"
        )));
    }
    Ok(dist.expect(|z| gauge.phi(z).powf(power)))
}

pub fn membership<G: Gauge + ?Sized>(
    dist: &DiscreteDistribution,
    gauge: &G,
    power: f64,
    kappa: f64,
) -> Result<bool> {
    Ok(moment(dist, gauge, power)? <= kappa)
}

/// `(1 - t) P + t H`; atoms carrying zero weight are dropped, so `t = 0`
/// returns `P` and `t = 1` returns `H`.
pub fn mix(
    p: &DiscreteDistribution,
    h: &DiscreteDistribution,
    t: f64,
) -> Result<DiscreteDistribution> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!(
            "mixing weight must lie in [0, 1], got {t}"
        )));
    }
    if p.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: h.dim(),
        });
    }
    let mut atoms = Vec::with_capacity(p.len() + h.len());
    let mut weights = Vec::with_capacity(p.len() + h.len());
    if t < 1.0 {
        for (z, w) in p.iter() {
            atoms.push(z.clone());
            weights.push((1.0 - t) * w);
        }
    }
    if t > 0.0 {
        for (z, w) in h.iter() {
            atoms.push(z.clone());
            weights.push(t * w);
        }
    }
    Ok(DiscreteDistribution { atoms, weights })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    /// `y += U(-m, m)`.
    ShiftY,
    /// `x += u` with `u` uniform in the cube of half-width `m / sqrt(d)`, so `|u|_2 <= m`.
    ShiftX,
    /// Every coordinate rounded toward zero onto the grid of step `m`.
    Quantize,
}

impl std::str::FromStr for PerturbMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shift_y" => Ok(PerturbMode::ShiftY),
            "shift_x" => Ok(PerturbMode::ShiftX),
            "quantize" => Ok(PerturbMode::Quantize),
            other => Err(invalid(format!("unknown perturbation mode `{other}`"))),
        }
    }
}

fn quantize(v: f64, step: f64) -> f64 {
    (v / step).trunc() * step
}

/// Seeded bounded displacement of the atoms; weights are unchanged.
pub fn perturb(
    p: &DiscreteDistribution,
    mode: PerturbMode,
    magnitude: f64,
    seed: u64,
) -> Result<DiscreteDistribution> {
    if !(magnitude >= 0.0) || !magnitude.is_finite() {
        return Err(invalid(format!(
            "perturbation magnitude must be nonnegative, got {magnitude}"
        )));
    }
    if magnitude == 0.0 {
        return Ok(p.clone());
    }
    let mut rng = stream_rng(seed, 0);
    let half = magnitude / (p.dim().max(1) as f64).sqrt();
    let atoms = p
        .atoms
        .iter()
        .map(|a| match mode {
            PerturbMode::ShiftY => {
                Point::new(a.x.clone(), a.y + rng.random_range(-magnitude..=magnitude))
            }
            PerturbMode::ShiftX => Point::new(
                a.x.iter()
                    .map(|v| v + rng.random_range(-half..=half))
                    .collect(),
                a.y,
            ),
            PerturbMode::Quantize => Point::new(
                a.x.iter().map(|&v| quantize(v, magnitude)).collect(),
                quantize(a.y, magnitude),
            ),
        })
        .collect();
    Ok(DiscreteDistribution {
        atoms,
        weights: p.weights.clone(),
    })
}

/// Reads a distribution CSV with header `x_0,...,x_{d-1},y,weight`.
pub fn read_csv<R: Read>(reader: R) -> Result<DiscreteDistribution> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let n = headers.len();
    if n < 2 || &headers[n - 1] != "weight" || &headers[n - 2] != "y" {
        return Err(Error::Config(format!(
            "distribution header must end with `y,weight`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (i, h) in headers.iter().take(n - 2).enumerate() {
        if h != format!("x_{i}") {
            return Err(Error::Config(format!(
                "column {i} should be named `x_{i}`, got `{h}`"
            )));
        }
    }
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |j: usize| -> Result<f64> {
            record[j].parse::<f64>().map_err(|e| {
                Error::Config(format!("row {}, column `{}`: {e}", line + 2, &headers[j]))
            })
        };
        let x = (0..n - 2).map(parse).collect::<Result<Vec<_>>>()?;
        atoms.push(Point::new(x, parse(n - 2)?));
        weights.push(parse(n - 1)?);
    }
    let (dist, off) = DiscreteDistribution::from_unnormalized(atoms, weights)?;
    if off {
        log::warn!("distribution weights did not sum to 1; normalized on load");
    }
    Ok(dist)
}

pub fn load_csv(path: &Path) -> Result<DiscreteDistribution> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file)
}

pub fn write_csv<W: Write>(dist: &DiscreteDistribution, mut out: W) -> Result<()> {
    let d = dist.dim();
    let mut header: Vec<String> = (0..d).map(|i| format!("x_{i}")).collect();
    header.push("y".into());
    header.push("weight".into());
    writeln!(out, "{}", header.join(","))?;
    for (z, w) in dist.iter() {
        let mut row: Vec<String> = z.x.iter().map(|v| v.to_string()).collect();
        row.push(z.y.to_string());
        row.push(w.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
