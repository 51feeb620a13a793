//! Continuous-time geometric RSK: the path operators `P_i` and `P^r_i`, the
//! maps `Π` and `Π^ξ` from paths to triangle-valued paths, the matrix path
//! `b(t)` and a Monte Carlo evaluation of its minors as sums over
//! non-intersecting down-right paths.
//!
//! Paths are piecewise linear between grid points. The integrals
//! `∫₀ᵗ e^{η_{i+1}−η_i}` are accumulated in the log domain. Each operator
//! output is smooth between grid points, so every path carries one-sided first
//! and second derivatives at the nodes; a segment integral fits a quintic
//! Hermite interpolant to the exponent and integrates its exponential with an
//! 8-point Gauss–Legendre rule. Without an additive constant (`P_i`, as
//! opposed to `P^r_i`) the logarithm is singular at `t = 0`; the working mesh
//! is therefore graded geometrically towards the origin and the innermost
//! piece is integrated with the local power law.

use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::matrix::{self, PositiveUpper, SquareMatrix};
use crate::triangle::Triangle;

/// Near `t = 0` the working mesh is graded so that every segment is at most
/// this fraction of its left endpoint.
const GRADING: f64 = 0.08;
/// The innermost mesh point sits at this fraction of the first grid time.
const INNERMOST: f64 = 1e-12;

/// Piecewise-linear path on a strictly increasing grid starting at 0.
///
/// Input paths satisfy `values[0] = 0`. Operator outputs keep their value at
/// `t = 0`, which is NaN where the output is singular there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledPath {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl SampledPath {
    /// Validated input path: `grid[0] = 0`, strictly increasing, `values[0] = 0`.
    pub fn new(grid: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Invalid(format!(
                "{} grid points and {} samples; need at least two of each",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] != 0.0 {
            return Err(Error::Invalid("grid must start at t = 0".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Invalid("grid must be strictly increasing and finite".into()));
        }
        let n = values[0].len();
        if n == 0 || values.iter().any(|v| v.len() != n) {
            return Err(Error::Invalid("samples must share a positive dimension".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite path value".into()));
        }
        if values[0].iter().any(|&v| v != 0.0) {
            return Err(Error::Invalid("path must start at the origin".into()));
        }
        Ok(SampledPath { grid, values })
    }

    /// Samples `f` on `grid`; `f(0)` must vanish.
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    /// The straight path `η(t) = tλ`.
    pub fn linear(lambda: &[f64], t_end: f64, steps: usize) -> Result<Self> {
        Self::from_fn(uniform_grid(t_end, steps)?, |t| lambda.iter().map(|l| l * t).collect())
    }

    pub(crate) fn from_raw(grid: Vec<f64>, values: Vec<Vec<f64>>) -> Self {
        SampledPath { grid, values }
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn t_end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Linear interpolation at `t` (clamped to the grid range).
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let k = self.segment_of(t);
        let (t0, t1) = (self.grid[k], self.grid[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.values[k]
            .iter()
            .zip(&self.values[k + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// Coordinate `i` (0-based) interpolated at `t`.
    pub fn coord_at(&self, i: usize, t: f64) -> f64 {
        let k = self.segment_of(t);
        let (t0, t1) = (self.grid[k], self.grid[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let (a, b) = (self.values[k][i], self.values[k + 1][i]);
        a + w * (b - a)
    }

    /// Index `k` of the segment `[grid[k], grid[k+1]]` containing `t`.
    fn segment_of(&self, t: f64) -> usize {
        let k = self.grid.partition_point(|&g| g <= t);
        k.clamp(1, self.grid.len() - 1) - 1
    }

    /// Largest absolute difference over grid points `from..`, skipping NaN pairs.
    pub fn max_abs_diff_from(&self, other: &SampledPath, from: usize) -> f64 {
        self.values[from..]
            .iter()
            .zip(&other.values[from..])
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `steps + 1` equally spaced points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || steps == 0 {
        return Err(Error::Invalid(format!("bad grid: t_end = {t_end}, steps = {steps}")));
    }
    Ok((0..=steps).map(|k| t_end * k as f64 / steps as f64).collect())
}

/// Triangle-valued path.
#[derive(Clone, Debug, Serialize)]
pub struct TrianglePath {
    pub times: Vec<f64>,
    pub states: Vec<Triangle>,
}

impl TrianglePath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &Triangle {
        self.states.last().expect("empty triangle path")
    }

    /// State at the grid time closest to `t`.
    pub fn nearest(&self, t: f64) -> (f64, &Triangle) {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .expect("empty triangle path");
        (self.times[k], &self.states[k])
    }
}

#[allow(clippy::excessive_precision)]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
#[allow(clippy::excessive_precision)]
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Quintic Hermite basis at the Gauss–Legendre nodes mapped to `[0, 1]`:
/// value, first and second derivative weights at the left end, then the
/// same at the right end.
static HERMITE_AT_NODES: LazyLock<[[f64; 6]; 8]> = LazyLock::new(|| {
    let h0 = |s: f64| 1.0 - s.powi(3) * (10.0 - 15.0 * s + 6.0 * s * s);
    let h1 = |s: f64| s - s.powi(3) * (6.0 - 8.0 * s + 3.0 * s * s);
    let h2 = |s: f64| 0.5 * s * s * (1.0 - s).powi(3);
    let mut out = [[0.0; 6]; 8];
    for (row, &x) in out.iter_mut().zip(&GL_NODES) {
        let s = 0.5 * (1.0 + x);
        *row = [h0(s), h1(s), h2(s), h0(1.0 - s), -h1(1.0 - s), h2(1.0 - s)];
    }
    out
});

/// `log ∫ e^{g}` over a segment of width `h` from endpoint values and
/// one-sided first/second derivatives of `g`.
fn log_segment_integral(h: f64, g: [f64; 2], d1: [f64; 2], d2: [f64; 2]) -> f64 {
    let coeffs = [g[0], h * d1[0], h * h * d2[0], g[1], h * d1[1], h * h * d2[1]];
    let mut vals = [0.0; 8];
    let mut peak = f64::NEG_INFINITY;
    for (v, basis) in vals.iter_mut().zip(HERMITE_AT_NODES.iter()) {
        *v = basis.iter().zip(&coeffs).map(|(b, c)| b * c).sum();
        peak = peak.max(*v);
    }
    let sum: f64 = vals.iter().zip(&GL_WEIGHTS).map(|(v, w)| w * (v - peak).exp()).sum();
    peak + (0.5 * h * sum).ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Per-coordinate samples with one-sided derivatives at each node.
#[derive(Clone, Debug)]
struct Track {
    v: Vec<f64>,
    d1l: Vec<f64>,
    d1r: Vec<f64>,
    d2l: Vec<f64>,
    d2r: Vec<f64>,
}

/// Mesh points with values and one-sided slopes, before splitting by coordinate.
#[derive(Default)]
struct Mesh {
    grid: Vec<f64>,
    vals: Vec<Vec<f64>>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

impl Mesh {
    fn push(&mut self, t: f64, v: Vec<f64>, l: Vec<f64>, r: Vec<f64>) {
        self.grid.push(t);
        self.vals.push(v);
        self.left.push(l);
        self.right.push(r);
    }
}

/// A path prepared for repeated application of the operators `P_i`, `P^r_i`.
///
/// Keeps derivative data and a refined first segment so that compositions
/// such as `P_1P_2P_1` stay accurate.
#[derive(Clone, Debug)]
pub struct OperatorPath {
    grid: Vec<f64>,
    orig: Vec<usize>,
    tracks: Vec<Track>,
    singular: bool,
}

impl OperatorPath {
    pub fn new(eta: &SampledPath) -> Self {
        let n = eta.n();
        let k_orig = eta.grid.len();
        let slope = |k: usize| -> Vec<f64> {
            let dt = eta.grid[k + 1] - eta.grid[k];
            (0..n).map(|c| (eta.values[k + 1][c] - eta.values[k][c]) / dt).collect()
        };
        let mut mesh = Mesh::default();
        let mut orig = Vec::with_capacity(k_orig);
        let s0 = slope(0);
        let t1 = eta.grid[1];
        orig.push(0);
        mesh.push(0.0, vec![0.0; n], s0.clone(), s0.clone());
        let levels = ((1.0 / INNERMOST).ln() / (1.0 + GRADING).ln()).ceil() as i32;
        for j in (1..=levels).rev() {
            let t = t1 * (1.0 + GRADING).powi(-j);
            mesh.push(t, s0.iter().map(|s| s * t).collect(), s0.clone(), s0.clone());
        }
        for k in 1..k_orig {
            let sl = slope(k - 1);
            let sr = if k + 1 < k_orig { slope(k) } else { sl.clone() };
            orig.push(mesh.grid.len());
            mesh.push(eta.grid[k], eta.values[k].clone(), sl, sr.clone());
            if k + 1 < k_orig {
                let (ta, tb) = (eta.grid[k], eta.grid[k + 1]);
                let parts = ((tb - ta) / (GRADING * ta)).ceil().max(1.0) as usize;
                for p in 1..parts {
                    let t = ta + (tb - ta) * p as f64 / parts as f64;
                    let v = eta.values[k].iter().zip(&sr).map(|(v, s)| v + s * (t - ta)).collect();
                    mesh.push(t, v, sr.clone(), sr.clone());
                }
            }
        }

        let len = mesh.grid.len();
        let tracks = (0..n)
            .map(|c| Track {
                v: mesh.vals.iter().map(|v| v[c]).collect(),
                d1l: mesh.left.iter().map(|v| v[c]).collect(),
                d1r: mesh.right.iter().map(|v| v[c]).collect(),
                d2l: vec![0.0; len],
                d2r: vec![0.0; len],
            })
            .collect();
        OperatorPath { grid: mesh.grid, orig, tracks, singular: false }
    }

    pub fn n(&self) -> usize {
        self.tracks.len()
    }

    /// Adds a constant to coordinate `c` (0-based).
    fn shift(&mut self, c: usize, by: f64) {
        for v in &mut self.tracks[c].v {
            *v += by;
        }
    }

    /// Applies `P_i` (1-based `i`).
    pub fn apply_p(&mut self, i: usize) -> Result<()> {
        self.apply(i, None)
    }

    /// Applies `P^r_i` (1-based `i`).
    pub fn apply_p_r(&mut self, i: usize, r: f64) -> Result<()> {
        if !r.is_finite() {
            return Err(Error::Invalid(format!("offset r = {r} must be finite")));
        }
        self.apply(i, Some(r))
    }

    fn apply(&mut self, i: usize, r: Option<f64>) -> Result<()> {
        let n = self.n();
        if i == 0 || i >= n {
            return Err(Error::Range(format!("operator index {i} for dimension {n}")));
        }
        let (a, b) = (i - 1, i);
        let nodes = self.grid.len();
        let (ta, tb) = (&self.tracks[a], &self.tracks[b]);
        let g: Vec<f64> = (0..nodes).map(|k| tb.v[k] - ta.v[k]).collect();
        let g1l: Vec<f64> = (0..nodes).map(|k| tb.d1l[k] - ta.d1l[k]).collect();
        let g1r: Vec<f64> = (0..nodes).map(|k| tb.d1r[k] - ta.d1r[k]).collect();
        let g2l: Vec<f64> = (0..nodes).map(|k| tb.d2l[k] - ta.d2l[k]).collect();
        let g2r: Vec<f64> = (0..nodes).map(|k| tb.d2r[k] - ta.d2r[k]).collect();

        let mut log_int = vec![0.0; nodes];
        log_int[0] = r.map_or(f64::NEG_INFINITY, |r| -r);
        for k in 0..nodes - 1 {
            let h = self.grid[k + 1] - self.grid[k];
            let seg = if k == 0 && self.singular {
                // ∫₀ˢ t^p ≈ s^{p+1}/(p+1) with the local exponent p = s·g'(s).
                let s = self.grid[1];
                let p = (s * g1l[1]).max(-0.99);
                g[1] + (s / (1.0 + p)).ln()
            } else {
                log_segment_integral(
                    h,
                    [g[k], g[k + 1]],
                    [g1r[k], g1l[k + 1]],
                    [g2r[k], g2l[k + 1]],
                )
            };
            log_int[k + 1] = log_add_exp(log_int[k], seg);
        }
        if log_int.iter().skip(1).any(|v| !v.is_finite()) {
            return Err(Error::Overflow(format!("log-integral for P_{i} is not finite")));
        }

        for k in 0..nodes {
            let l = log_int[k];
            let (dv, d1, d2l, d2r) = if l.is_finite() {
                let d1 = (g[k] - l).exp();
                (l, d1, d1 * (g1l[k] - d1), d1 * (g1r[k] - d1))
            } else {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            };
            let ta = &mut self.tracks[a];
            ta.v[k] += dv;
            ta.d1l[k] += d1;
            ta.d1r[k] += d1;
            ta.d2l[k] += d2l;
            ta.d2r[k] += d2r;
            let tb = &mut self.tracks[b];
            tb.v[k] -= dv;
            tb.d1l[k] -= d1;
            tb.d1r[k] -= d1;
            tb.d2l[k] -= d2l;
            tb.d2r[k] -= d2r;
        }
        if r.is_none() {
            self.singular = true;
        }
        Ok(())
    }

    /// Value of coordinate `c` (0-based) at original grid index `k`.
    pub fn value(&self, c: usize, k: usize) -> f64 {
        self.tracks[c].v[self.orig[k]]
    }

    /// Samples at the original grid points.
    pub fn sample(&self) -> SampledPath {
        let grid: Vec<f64> = self.orig.iter().map(|&k| self.grid[k]).collect();
        let values = self
            .orig
            .iter()
            .map(|&k| self.tracks.iter().map(|t| t.v[k]).collect())
            .collect();
        SampledPath::from_raw(grid, values)
    }

    fn original_len(&self) -> usize {
        self.orig.len()
    }
}

/// `P_i η` on the grid of `η`; the value at `t = 0` is NaN.
pub fn p_op(eta: &SampledPath, i: usize) -> Result<SampledPath> {
    let mut path = OperatorPath::new(eta);
    path.apply_p(i)?;
    Ok(path.sample())
}

/// `P^r_i η` on the grid of `η`.
pub fn p_op_r(eta: &SampledPath, i: usize, r: f64) -> Result<SampledPath> {
    let mut path = OperatorPath::new(eta);
    path.apply_p_r(i, r)?;
    Ok(path.sample())
}

/// Offsets used to insert a path into a starting triangle `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InsertionOffsets {
    /// `μ_1 = ξ¹₁`, `μ_m = Σ ξ^m − Σ ξ^{m−1}`.
    pub mu: Vec<f64>,
    /// `r[m][k]` for `2 ≤ k ≤ m ≤ n` (unused slots are 0).
    pub r: Vec<Vec<f64>>,
}

impl InsertionOffsets {
    pub fn from_triangle(xi: &Triangle) -> Self {
        let n = xi.n();
        let mu = (1..=n).map(|m| xi.row_sum(m) - xi.row_sum(m - 1)).collect();
        let mut r = vec![vec![0.0; n + 1]; n + 1];
        for (m, row) in r.iter_mut().enumerate().skip(2) {
            for (k, offset) in row.iter_mut().enumerate().take(m + 1).skip(2) {
                let upper: f64 = xi.row(m - 1)[..k - 1].iter().sum();
                let lower: f64 = xi.row(m)[..k - 1].iter().sum();
                *offset = upper - lower;
            }
        }
        InsertionOffsets { mu, r }
    }

    pub fn r(&self, m: usize, k: usize) -> f64 {
        self.r[m][k]
    }
}

fn collect_rows(
    mut path: OperatorPath,
    offsets: Option<&InsertionOffsets>,
) -> Result<Vec<Triangle>> {
    let n = path.n();
    let len = path.original_len();
    let mut states = vec![Triangle::zeros(n); len];
    let record = |path: &OperatorPath, states: &mut [Triangle], m: usize| {
        for (k, st) in states.iter_mut().enumerate() {
            for i in 1..=m {
                st.set(m, i, path.value(i - 1, k));
            }
        }
    };
    record(&path, &mut states, 1);
    for m in 2..=n {
        for k in (2..=m).rev() {
            match offsets {
                Some(off) => path.apply_p_r(k - 1, off.r(m, k))?,
                None => path.apply_p(k - 1)?,
            }
        }
        record(&path, &mut states, m);
    }
    Ok(states)
}

/// `X(t) = Πη(t)` at every grid time `t > 0`.
pub fn pi_n(eta: &SampledPath) -> Result<TrianglePath> {
    let states = collect_rows(OperatorPath::new(eta), None)?;
    Ok(TrianglePath { times: eta.grid[1..].to_vec(), states: states[1..].to_vec() })
}

/// `X(t) = Π^ξη(t)` at every grid time, with `X(0) = ξ`.
pub fn pi_xi(eta: &SampledPath, xi: &Triangle) -> Result<TrianglePath> {
    if xi.n() != eta.n() {
        return Err(Error::Invalid(format!(
            "triangle of size {} for a path of dimension {}",
            xi.n(),
            eta.n()
        )));
    }
    let offsets = InsertionOffsets::from_triangle(xi);
    let mut path = OperatorPath::new(eta);
    for (c, &mu) in offsets.mu.iter().enumerate() {
        path.shift(c, mu);
    }
    let states = collect_rows(path, Some(&offsets))?;
    Ok(TrianglePath { times: eta.grid.clone(), states })
}

fn propagate(eta: &SampledPath, b: &mut SquareMatrix, k: usize, h: f64) -> Result<()> {
    let dt = eta.grid[k + 1] - eta.grid[k];
    let slope: Vec<f64> = eta.values[k + 1]
        .iter()
        .zip(&eta.values[k])
        .map(|(x1, x0)| (x1 - x0) / dt)
        .collect();
    let step = matrix::matrix_exp(&matrix::epsilon(&slope), h)?;
    *b = step.matmul(b);
    Ok(())
}

/// Solution of `ḃ = ε(η̇)b` from `b0` at time `t`; exact for the
/// piecewise-linear path (one matrix exponential per segment).
pub fn b_path_from(eta: &SampledPath, b0: &SquareMatrix, t: f64) -> Result<SquareMatrix> {
    if b0.n() != eta.n() {
        return Err(Error::Invalid("initial matrix and path dimensions differ".into()));
    }
    if !(t >= 0.0) || t > eta.t_end() * (1.0 + 1e-12) {
        return Err(Error::Range(format!("time {t} outside [0, {}]", eta.t_end())));
    }
    let mut b = b0.clone();
    for k in 0..eta.len() - 1 {
        let (t0, t1) = (eta.grid[k], eta.grid[k + 1]);
        if t0 >= t {
            break;
        }
        propagate(eta, &mut b, k, t.min(t1) - t0)?;
    }
    Ok(b)
}

/// `b(t)` started from the identity; every minor is positive for `t > 0`.
pub fn b_path(eta: &SampledPath, t: f64) -> Result<PositiveUpper> {
    let b = b_path_from(eta, &SquareMatrix::identity(eta.n()), t)?;
    Ok(PositiveUpper::new_unchecked(b))
}

/// `b` at every grid time, starting from `b0`.
pub fn b_path_grid(eta: &SampledPath, b0: &SquareMatrix) -> Result<Vec<SquareMatrix>> {
    let mut b = b0.clone();
    let mut out = Vec::with_capacity(eta.len());
    out.push(b.clone());
    for k in 0..eta.len() - 1 {
        propagate(eta, &mut b, k, eta.grid[k + 1] - eta.grid[k])?;
        out.push(b.clone());
    }
    Ok(out)
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

const MC_BATCH: usize = 4096;

/// Estimates `Δ^m_k(b(t))` by sampling `k` down-right paths with uniform
/// jump times and keeping the non-intersecting configurations.
///
/// Path `l` (1-based) descends from level `m−k+l` to level `l` with `m−k`
/// jumps; at every time the levels must be strictly increasing in `l`.
pub fn kmg_minor_oracle(
    eta: &SampledPath,
    t: f64,
    m: usize,
    k: usize,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<MonteCarloEstimate> {
    let n = eta.n();
    if k == 0 || k > m || m > n {
        return Err(Error::Range(format!("minor Δ^{m}_{k} for dimension {n}")));
    }
    if !(t > 0.0) || t > eta.t_end() * (1.0 + 1e-12) {
        return Err(Error::Range(format!("time {t} outside (0, {}]", eta.t_end())));
    }
    if samples == 0 {
        return Err(Error::Invalid("need at least one sample".into()));
    }
    let jumps = m - k;
    let volume = (t.powi(jumps as i32) / factorial(jumps)).powi(k as i32);
    let batches = samples.div_ceil(MC_BATCH);
    let partial = exec.map(batches, |bi| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(bi as u64);
        let count = MC_BATCH.min(samples - bi * MC_BATCH);
        let mut times = vec![vec![0.0; jumps]; k];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..count {
            for tl in times.iter_mut() {
                for s in tl.iter_mut() {
                    *s = rng.random::<f64>() * t;
                }
                tl.sort_by(f64::total_cmp);
            }
            let w = if non_intersecting(&times, m, k) {
                let energy: f64 = (1..=k).map(|l| path_energy(eta, &times[l - 1], m - k + l, t)).sum();
                volume * energy.exp()
            } else {
                0.0
            };
            sum += w;
            sum_sq += w * w;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let count = samples as f64;
    let mean = sum / count;
    let var = (sum_sq / count - mean * mean).max(0.0) * count / (count - 1.0).max(1.0);
    Ok(MonteCarloEstimate { estimate: mean, std_error: (var / count).sqrt(), samples })
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|v| v as f64).product()
}

/// Sum of the increments of `η_h` over the time the path spends on level `h`.
fn path_energy(eta: &SampledPath, jumps: &[f64], start_level: usize, t: f64) -> f64 {
    let mut level = start_level;
    let mut entered = 0.0;
    let mut e = 0.0;
    for &s in jumps {
        e += eta.coord_at(level - 1, s) - eta.coord_at(level - 1, entered);
        level -= 1;
        entered = s;
    }
    e + eta.coord_at(level - 1, t) - eta.coord_at(level - 1, entered)
}

/// Levels only change when a path jumps down, so it suffices to compare each
/// path with the one below it right after each of its jumps.
fn non_intersecting(times: &[Vec<f64>], m: usize, k: usize) -> bool {
    for l in 1..k {
        let lower = &times[l - 1];
        let upper = &times[l];
        for (j, &s) in upper.iter().enumerate() {
            let upper_level = m - k + l + 1 - (j + 1);
            let lower_jumps = lower.partition_point(|&x| x <= s);
            let lower_level = m - k + l - lower_jumps;
            if upper_level <= lower_level {
                return false;
            }
        }
    }
    true
}
