//! Brownian input: seeded path sampling, Euler–Maruyama steppers for the
//! two stochastic triangle dynamics, Whittaker functions by quadrature
//! (`n ≤ 3`), samplers for the kernel with density `∝ e^{−F_λ/ε}` on
//! triangles with a given bottom row, and two-sample Kolmogorov–Smirnov
//! comparisons of fixed-time laws.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::critical::{critical_point, f_lambda, f_lambda_gradient, f_lambda_interior_hessian};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flows::{vf_dyn, vf_dyn_rsk};
use crate::grsk::{self, SampledPath};
use crate::triangle::Triangle;

/// Fewer replicas than this make the KS p-values meaningless.
pub const MIN_KS_REPLICAS: usize = 1000;

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_48,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_48,
    0.101_228_536_290_376_26,
];

/// Settings shared by the simulations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdeConfig {
    /// Infinitesimal variance of the driving noise.
    pub eps: f64,
    pub lambda: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub replicas: usize,
    pub seed: u64,
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::Invalid(format!("ε = {} must be non-negative", self.eps)));
        }
        if self.lambda.is_empty() || self.lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::Invalid("λ must be a non-empty finite vector".into()));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Invalid(format!("need dt > 0 and t_end > 0, got {} and {}", self.dt, self.t_end)));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }

    fn require_ks_replicas(&self) -> Result<()> {
        if self.replicas < MIN_KS_REPLICAS {
            return Err(Error::Invalid(format!(
                "{} replicas are too few for a KS comparison (need at least {MIN_KS_REPLICAS})",
                self.replicas
            )));
        }
        Ok(())
    }
}

/// Generator for replica `index` of the experiment labelled `tag`.
pub fn replica_rng(seed: u64, tag: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index as u64);
    rng
}

fn normals(rng: &mut impl Rng, count: usize, scale: f64) -> Vec<f64> {
    (0..count).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `η(t) = √ε B(t) + tλ` on the uniform `dt` grid up to `t_end`.
pub fn sample_brownian(cfg: &SdeConfig, rng: &mut impl Rng) -> Result<SampledPath> {
    cfg.validate()?;
    let steps = cfg.steps();
    let h = cfg.t_end / steps as f64;
    let n = cfg.n();
    let sd = (cfg.eps * h).sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut current = vec![0.0; n];
    values.push(current.clone());
    for _ in 0..steps {
        for (c, v) in current.iter_mut().enumerate() {
            *v += cfg.lambda[c] * h + sd * rng.sample::<f64, _>(StandardNormal);
        }
        values.push(current.clone());
    }
    SampledPath::new(grsk::uniform_grid(cfg.t_end, steps)?, values)
}

/// One Euler–Maruyama step of the geometric RSK dynamics. `dw` holds the
/// `n` driving increments (variance `dt` each); row `m` feeds its noise
/// `√ε·dw_m` to the diagonal entry, and entry `(m, i)` inherits `√ε·dw_i`
/// through the row recursion.
pub fn em_step_rsk(x: &Triangle, lambda: &[f64], eps: f64, dt: f64, dw: &[f64]) -> Result<Triangle> {
    let n = x.n();
    if dw.len() != n || lambda.len() != n {
        return Err(Error::Invalid(format!("need {n} noise increments and drifts")));
    }
    let v = vf_dyn_rsk(x, lambda);
    let mut out = x.add_scaled(&v, dt);
    let s = eps.sqrt();
    for m in 1..=n {
        for i in 1..=m {
            out.set(m, i, out.get(m, i) + s * dw[i - 1]);
        }
    }
    out.check_range()?;
    Ok(out)
}

/// One Euler–Maruyama step of the local dynamics with independent noise
/// `√ε·dw` for every entry (`dw` in row-major triangle order).
pub fn em_step_warren(x: &Triangle, lambda: &[f64], eps: f64, dt: f64, dw: &[f64]) -> Result<Triangle> {
    if dw.len() != x.len() || lambda.len() != x.n() {
        return Err(Error::Invalid(format!("need {} noise increments", x.len())));
    }
    let v = vf_dyn(x, lambda);
    let mut out = x.add_scaled(&v, dt);
    let s = eps.sqrt();
    for (o, w) in out.as_mut_slice().iter_mut().zip(dw) {
        *o += s * w;
    }
    out.check_range()?;
    Ok(out)
}

/// Which stochastic triangle dynamics to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Dynamics {
    Rsk,
    Warren,
}

/// Runs `steps` Euler–Maruyama steps of size `dt` from `x0`.
pub fn simulate_triangle(
    x0: &Triangle,
    lambda: &[f64],
    eps: f64,
    dt: f64,
    steps: usize,
    dynamics: Dynamics,
    rng: &mut impl Rng,
) -> Result<Triangle> {
    let sd = dt.sqrt();
    let mut x = x0.clone();
    for _ in 0..steps {
        x = match dynamics {
            Dynamics::Rsk => em_step_rsk(&x, lambda, eps, dt, &normals(rng, x.n(), sd))?,
            Dynamics::Warren => em_step_warren(&x, lambda, eps, dt, &normals(rng, x.len(), sd))?,
        };
    }
    Ok(x)
}

/// `log Σ e^{v}` without overflow.
fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let peak = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return peak;
    }
    peak + v.iter().map(|x| (x - peak).exp()).sum::<f64>().ln()
}

struct Window {
    a: f64,
    b: f64,
    exhausted: bool,
}

const MAX_WALK: usize = 400;

/// Walks out from `center` in steps of `step` until the log-integrand has
/// dropped `threshold` below the largest value seen, on both sides.
fn window_1d(f: &mut impl FnMut(f64) -> f64, center: f64, step: f64, threshold: f64) -> Window {
    let mut peak = f(center);
    let mut exhausted = false;
    let mut ends = [center, center];
    for (side, dir) in [(1usize, 1.0f64), (0usize, -1.0f64)] {
        let mut j = 0;
        loop {
            j += 1;
            if j > MAX_WALK {
                exhausted = true;
                break;
            }
            let y = center + dir * j as f64 * step;
            let v = f(y);
            ends[side] = y;
            if v > peak {
                peak = v;
            }
            if !(v >= peak - threshold) {
                break;
            }
        }
    }
    Window { a: ends[0], b: ends[1], exhausted }
}

/// Gauss–Legendre nodes and log-weights over `[a, b]` split into panels of
/// width at most `width`.
fn panel_nodes(a: f64, b: f64, width: f64) -> Vec<(f64, f64)> {
    let panels = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            out.push((mid + 0.5 * h * x, (0.5 * h * w).ln()));
        }
    }
    out
}

/// Nested adaptive quadrature over the interior of a triangle with fixed
/// bottom row, guided by the Gaussian approximation at the minimizer.
struct Builder<'a> {
    bottom: &'a [f64],
    lambda: &'a [f64],
    eps: f64,
    centre: Vec<f64>,
    hessian: DMatrix<f64>,
    threshold: f64,
    panel: f64,
    exhausted: std::cell::Cell<bool>,
}

impl Builder<'_> {
    fn dim(&self) -> usize {
        self.centre.len()
    }

    fn log_integrand(&self, interior: &[f64]) -> f64 {
        match f_lambda(&Triangle::from_interior(self.bottom, interior), self.lambda) {
            Ok(v) => -v / self.eps,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Conditional mean and standard deviation of the next coordinate given
    /// `prefix`, under the Gaussian approximation.
    fn guess(&self, prefix: &[f64]) -> (f64, f64) {
        let k = self.dim();
        let f = prefix.len();
        let r = k - f;
        let h_rr = self.hessian.view((f, f), (r, r)).into_owned();
        let inv = h_rr.try_inverse().unwrap_or_else(|| DMatrix::identity(r, r));
        let mut shift = 0.0;
        for a in 0..r {
            let s: f64 = (0..f).map(|b| self.hessian[(f + a, b)] * (prefix[b] - self.centre[b])).sum();
            shift += inv[(0, a)] * s;
        }
        let sigma = (self.eps * inv[(0, 0)]).sqrt();
        (self.centre[f] - shift, sigma.clamp(1e-6, 1e3))
    }

    fn level_value(&self, prefix: &mut Vec<f64>, y: f64) -> f64 {
        prefix.push(y);
        let v = if prefix.len() == self.dim() { self.log_integrand(prefix) } else { self.log_integral(prefix) };
        prefix.pop();
        v
    }

    fn window(&self, prefix: &[f64]) -> (Window, f64) {
        let (c, sigma) = self.guess(prefix);
        let mut buf = prefix.to_vec();
        let w = window_1d(&mut |y| self.level_value(&mut buf, y), c, sigma, self.threshold);
        if w.exhausted {
            self.exhausted.set(true);
        }
        (w, sigma)
    }

    fn log_integral(&self, prefix: &[f64]) -> f64 {
        let (w, sigma) = self.window(prefix);
        let mut buf = prefix.to_vec();
        log_sum_exp(panel_nodes(w.a, w.b, self.panel * sigma).into_iter().map(|(y, lw)| lw + self.level_value(&mut buf, y)))
    }

    fn collect(&self, prefix: &mut Vec<f64>, log_w: f64, nodes: &mut Vec<Vec<f64>>, weights: &mut Vec<f64>) {
        if prefix.len() == self.dim() {
            nodes.push(prefix.clone());
            weights.push(log_w);
            return;
        }
        let (w, sigma) = self.window(prefix);
        for (y, lw) in panel_nodes(w.a, w.b, self.panel * sigma) {
            prefix.push(y);
            self.collect(prefix, log_w + lw, nodes, weights);
            prefix.pop();
        }
    }
}

/// A fixed set of interior points and log-weights for integrals over
/// triangles whose bottom row is near the point it was built at. Reusing
/// the same nodes across a finite-difference stencil keeps quadrature error
/// out of the differences.
#[derive(Clone, Debug)]
pub struct WhittakerQuadrature {
    lambda: Vec<f64>,
    eps: f64,
    nodes: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    warning: Option<String>,
}

impl WhittakerQuadrature {
    pub fn new(x: &[f64], lambda: &[f64], eps: f64) -> Result<Self> {
        let n = x.len();
        if !(1..=3).contains(&n) {
            return Err(Error::Range(format!("Whittaker quadrature supports n ≤ 3, got {n}")));
        }
        if lambda.len() != n {
            return Err(Error::Invalid(format!("λ has length {}, expected {n}", lambda.len())));
        }
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("ε = {eps} must be positive")));
        }
        if n == 1 {
            return Ok(WhittakerQuadrature {
                lambda: lambda.to_vec(),
                eps,
                nodes: vec![vec![]],
                log_weights: vec![0.0],
                warning: None,
            });
        }
        let xs = critical_point(x, lambda)?;
        let (threshold, panel) = if n == 2 { (60.0, 0.5) } else { (36.0, 1.0) };
        let builder = Builder {
            bottom: x,
            lambda,
            eps,
            centre: xs.interior().to_vec(),
            hessian: f_lambda_interior_hessian(&xs),
            threshold,
            panel,
            exhausted: std::cell::Cell::new(false),
        };
        let (mut nodes, mut log_weights) = (vec![], vec![]);
        builder.collect(&mut vec![], 0.0, &mut nodes, &mut log_weights);
        let warning = builder
            .exhausted
            .get()
            .then(|| "integration window hit its step limit; accuracy not guaranteed".to_string());
        Ok(WhittakerQuadrature { lambda: lambda.to_vec(), eps, nodes, log_weights, warning })
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.lambda.len() {
            return Err(Error::Invalid(format!("point has length {}, expected {}", x.len(), self.lambda.len())));
        }
        Ok(())
    }

    /// `−F_λ/ε` plus log-weight at every node, for bottom row `x`.
    fn log_terms(&self, x: &[f64]) -> Vec<(f64, Triangle)> {
        self.nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(node, lw)| {
                let t = Triangle::from_interior(x, node);
                let v = match f_lambda(&t, &self.lambda) {
                    Ok(f) => lw - f / self.eps,
                    Err(_) => f64::NEG_INFINITY,
                };
                (v, t)
            })
            .collect()
    }

    pub fn log_psi(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let v = log_sum_exp(self.log_terms(x).into_iter().map(|(v, _)| v));
        if !v.is_finite() {
            return Err(Error::Numerical("Whittaker integral underflowed".into()));
        }
        Ok(v)
    }

    /// Mean of `f` under the kernel with density `∝ e^{−F_λ/ε}` on
    /// triangles with bottom row `x`.
    pub fn expectation(&self, x: &[f64], f: impl Fn(&Triangle) -> f64) -> Result<f64> {
        self.check_point(x)?;
        let terms = self.log_terms(x);
        let peak = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::Numerical("Whittaker integral underflowed".into()));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (v, t) in &terms {
            let w = (v - peak).exp();
            if w > 0.0 {
                num += w * f(t);
                den += w;
            }
        }
        Ok(num / den)
    }

    /// `∇ log ψ_λ(x) = −(1/ε) E[∂F_λ/∂xⁿ]`.
    pub fn grad_log_psi(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..x.len())
            .map(|j| {
                self.expectation(x, |t| {
                    f_lambda_gradient(t, &self.lambda).map(|g| g.bottom()[j]).unwrap_or(f64::NAN)
                })
                .map(|e| -e / self.eps)
            })
            .collect()
    }

    /// `Δψ/ψ` by central differences of `log ψ` on the fixed nodes.
    pub fn laplacian_ratio_fd(&self, x: &[f64], h: f64) -> Result<f64> {
        let base = self.log_psi(x)?;
        let mut sum = 0.0;
        for j in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let up = self.log_psi(&xp)? - base;
            let down = self.log_psi(&xm)? - base;
            sum += (up.exp_m1() + down.exp_m1()) / (h * h);
        }
        Ok(sum)
    }

    /// `Δψ/ψ = Σ_j E[∂_j a_j + a_j²]` with `a_j = −(1/ε) ∂F_λ/∂xⁿ_j`.
    pub fn laplacian_ratio(&self, x: &[f64]) -> Result<f64> {
        let n = x.len();
        let eps = self.eps;
        self.expectation(x, |t| {
            let g = match f_lambda_gradient(t, &self.lambda) {
                Ok(g) => g,
                Err(_) => return f64::NAN,
            };
            let mut s = 0.0;
            for j in 1..=n {
                let a = -g.get(n, j) / eps;
                let mut curv = 0.0;
                if j > 1 {
                    curv += (t.get(n, j) - t.get(n - 1, j - 1)).exp();
                }
                if j < n {
                    curv += (t.get(n - 1, j) - t.get(n, j)).exp();
                }
                s += a * a - curv / eps;
            }
            s
        })
    }
}

/// `ψ_λ(x)` with its logarithm.
#[derive(Clone, Debug, Serialize)]
pub struct WhittakerEval {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eps: f64,
    pub value: f64,
    pub log_value: f64,
    pub warning: Option<String>,
}

/// `ψ_λ(x) = ∫ e^{−F_λ(X)/ε} dX` over triangles with bottom row `x`, `n ≤ 3`.
pub fn whittaker_eval(x: &[f64], lambda: &[f64], eps: f64) -> Result<WhittakerEval> {
    let q = WhittakerQuadrature::new(x, lambda, eps)?;
    let log_value = q.log_psi(x)?;
    Ok(WhittakerEval {
        x: x.to_vec(),
        lambda: lambda.to_vec(),
        eps,
        value: log_value.exp(),
        log_value,
        warning: q.warning().map(String::from),
    })
}

/// Potential term of the quantum Toda Hamiltonian, `(2/ε) Σ e^{x_{i+1} − x_i}`.
pub fn toda_potential(x: &[f64], eps: f64) -> f64 {
    2.0 / eps * x.windows(2).map(|w| (w[1] - w[0]).exp()).sum::<f64>()
}

/// `|(Hψ)/ψ + Σλ²/ε|` with `H = −εΔ + (2/ε)Σ e^{x_{i+1}−x_i}` and a
/// finite-difference Laplacian of step `h`.
pub fn eigen_residual_fd(x: &[f64], lambda: &[f64], eps: f64, h: f64) -> Result<f64> {
    let q = WhittakerQuadrature::new(x, lambda, eps)?;
    let h_ratio = -eps * q.laplacian_ratio_fd(x, h)? + toda_potential(x, eps);
    Ok((h_ratio + lambda.iter().map(|l| l * l).sum::<f64>() / eps).abs())
}

/// As [`eigen_residual_fd`] with the Laplacian taken under the integral.
pub fn eigen_residual(x: &[f64], lambda: &[f64], eps: f64) -> Result<f64> {
    let q = WhittakerQuadrature::new(x, lambda, eps)?;
    let h_ratio = -eps * q.laplacian_ratio(x)? + toda_potential(x, eps);
    Ok((h_ratio + lambda.iter().map(|l| l * l).sum::<f64>() / eps).abs())
}

/// Draws `count` triangles with bottom row `x` from the density
/// `∝ e^{−F_λ/ε}`: inverse CDF on a fine grid for `n = 2`, rejection from a
/// widened Gaussian fitted at the minimizer for `n = 3`.
pub fn sample_sigma_lambda(
    x: &[f64],
    lambda: &[f64],
    eps: f64,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Triangle>> {
    let n = x.len();
    if lambda.len() != n {
        return Err(Error::Invalid(format!("λ has length {}, expected {n}", lambda.len())));
    }
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("ε = {eps} must be positive")));
    }
    match n {
        1 => Ok(vec![Triangle::from_rows(&[x.to_vec()])?; count]),
        2 => Ok(SigmaGrid::new(x, lambda, eps)?.sample(count, rng)),
        3 => sample_sigma_rejection(x, lambda, eps, count, rng),
        _ => Err(Error::Range(format!("sampling supports n ≤ 3, got {n}"))),
    }
}

/// Tabulated CDF of the single interior entry for `n = 2`.
struct SigmaGrid {
    bottom: Vec<f64>,
    points: Vec<f64>,
    cdf: Vec<f64>,
}

impl SigmaGrid {
    const CELLS: usize = 4096;

    fn new(x: &[f64], lambda: &[f64], eps: f64) -> Result<Self> {
        let xs = critical_point(x, lambda)?;
        let h = f_lambda_interior_hessian(&xs);
        let sigma = (eps / h[(0, 0)]).sqrt();
        let log_f = |y: f64| match f_lambda(&Triangle::from_interior(x, &[y]), lambda) {
            Ok(v) => -v / eps,
            Err(_) => f64::NEG_INFINITY,
        };
        let w = window_1d(&mut |y| log_f(y), xs.get(1, 1), sigma, 40.0);
        if w.exhausted {
            return Err(Error::Numerical("sampling window did not close".into()));
        }
        let step = (w.b - w.a) / Self::CELLS as f64;
        let points: Vec<f64> = (0..=Self::CELLS).map(|k| w.a + k as f64 * step).collect();
        let logs: Vec<f64> = points.iter().map(|&y| log_f(y)).collect();
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dens: Vec<f64> = logs.iter().map(|v| (v - peak).exp()).collect();
        let mut cdf = vec![0.0; points.len()];
        for k in 1..points.len() {
            cdf[k] = cdf[k - 1] + 0.5 * step * (dens[k] + dens[k - 1]);
        }
        let total = *cdf.last().unwrap();
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Ok(SigmaGrid { bottom: x.to_vec(), points, cdf })
    }

    fn draw(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.points[k - 1] + frac * (self.points[k] - self.points[k - 1])
    }

    fn sample(&self, count: usize, rng: &mut impl Rng) -> Vec<Triangle> {
        (0..count)
            .map(|_| Triangle::from_interior(&self.bottom, &[self.draw(rng.random::<f64>())]))
            .collect()
    }
}

fn sample_sigma_rejection(
    x: &[f64],
    lambda: &[f64],
    eps: f64,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Triangle>> {
    const WIDEN: f64 = 2.0;
    let xs = critical_point(x, lambda)?;
    let f_star = f_lambda(&xs, lambda)?;
    let h = f_lambda_interior_hessian(&xs);
    let cov = h.try_inverse().ok_or(Error::Numerical("singular Hessian".into()))?;
    let chol = cov.cholesky().ok_or(Error::Numerical("covariance not positive definite".into()))?;
    let l = chol.l() * (WIDEN * eps).sqrt();
    let dim = xs.interior().len();
    let centre = xs.interior().to_vec();
    let point = |z: &[f64]| -> Vec<f64> {
        (0..dim).map(|a| centre[a] + (0..=a).map(|b| l[(a, b)] * z[b]).sum::<f64>()).collect()
    };
    let log_ratio = |z: &[f64]| -> f64 {
        let p = point(z);
        match f_lambda(&Triangle::from_interior(x, &p), lambda) {
            Ok(v) => -(v - f_star) / eps + 0.5 * z.iter().map(|v| v * v).sum::<f64>(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    // Envelope constant from a ray search in the standardized coordinates.
    let mut bound: f64 = 0.0;
    let mut probe = ChaCha8Rng::seed_from_u64(0x5157);
    for _ in 0..64 {
        let mut u: Vec<f64> = normals(&mut probe, dim, 1.0);
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= norm);
        for k in 0..=240 {
            let s = 0.05 * k as f64;
            let z: Vec<f64> = u.iter().map(|v| v * s).collect();
            bound = bound.max(log_ratio(&z));
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut proposals = 0usize;
    while out.len() < count {
        proposals += 1;
        if proposals >= 10_000 && (out.len() as f64) < 1e-3 * proposals as f64 {
            return Err(Error::Efficiency(out.len() as f64 / proposals as f64));
        }
        let z = normals(rng, dim, 1.0);
        let lr = log_ratio(&z);
        if lr > bound {
            bound = lr;
        }
        if rng.random::<f64>().ln() < lr - bound {
            out.push(Triangle::from_interior(x, &point(&z)));
        }
    }
    Ok(out)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`, the Kolmogorov tail.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("KS comparison needs non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Invalid("KS samples contain NaN".into()));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let v = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= v {
            i += 1;
        }
        while j < xb.len() && xb[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let root = ne.sqrt();
    let p_value = kolmogorov_tail((root + 0.12 + 0.11 / root) * d);
    Ok(KsResult { statistic: d, p_value })
}

/// Outcome of a seeded two-sample comparison, one KS result per coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct StatReport {
    pub test: String,
    pub n: usize,
    pub eps: f64,
    pub lambda: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub ks_stat: Vec<f64>,
    pub p_value: Vec<f64>,
    /// Whether the two samples are supposed to share a law.
    pub expect_same_law: bool,
    pub threshold: f64,
    pub pass: bool,
}

impl StatReport {
    pub fn from_samples(
        test: &str,
        cfg: &SdeConfig,
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        expect_same_law: bool,
        threshold: f64,
    ) -> Result<Self> {
        let n = a[0].len();
        let mut ks_stat = vec![];
        let mut p_value = vec![];
        for c in 0..n {
            let xa: Vec<f64> = a.iter().map(|v| v[c]).collect();
            let xb: Vec<f64> = b.iter().map(|v| v[c]).collect();
            let r = ks_two_sample(&xa, &xb)?;
            ks_stat.push(r.statistic);
            p_value.push(r.p_value);
        }
        let pass = if expect_same_law {
            p_value.iter().all(|&p| p > threshold)
        } else {
            p_value.iter().any(|&p| p < threshold)
        };
        Ok(StatReport {
            test: test.to_string(),
            n: cfg.n(),
            eps: cfg.eps,
            lambda: cfg.lambda.clone(),
            replicas: cfg.replicas,
            seed: cfg.seed,
            ks_stat,
            p_value,
            expect_same_law,
            threshold,
            pass,
        })
    }
}

/// `ε∇log ψ_λ` for `n = 2` on a uniform grid of `d = x₂ − x₁`; the drift
/// depends on `x` only through `d`.
#[derive(Clone, Debug)]
pub struct DriftTable {
    d_min: f64,
    step: f64,
    values: Vec<[f64; 2]>,
}

impl DriftTable {
    const D_MIN: f64 = -40.0;
    const D_MAX: f64 = 25.0;
    const STEP: f64 = 0.005;

    pub fn new(lambda: &[f64], eps: f64, exec: Execution) -> Result<Self> {
        if lambda.len() != 2 {
            return Err(Error::Range("the drift table is built for n = 2".into()));
        }
        let count = ((Self::D_MAX - Self::D_MIN) / Self::STEP).round() as usize + 1;
        let values = exec
            .map(count, |k| {
                let d = Self::D_MIN + k as f64 * Self::STEP;
                let x = [0.0, d];
                let q = WhittakerQuadrature::new(&x, lambda, eps)?;
                let g = q.grad_log_psi(&x)?;
                Ok([eps * g[0], eps * g[1]])
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(DriftTable { d_min: Self::D_MIN, step: Self::STEP, values })
    }

    /// Cubic interpolation in `d`; clamps outside the table.
    pub fn drift(&self, x: &[f64]) -> [f64; 2] {
        let last = self.values.len() - 1;
        let pos = ((x[1] - x[0] - self.d_min) / self.step).clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last - 1);
        let s = pos - k as f64;
        let at = |j: isize| self.values[j.clamp(0, last as isize) as usize];
        let (p0, p1, p2, p3) = (at(k as isize - 1), at(k as isize), at(k as isize + 1), at(k as isize + 2));
        let mut out = [0.0; 2];
        for c in 0..2 {
            out[c] = p1[c]
                + 0.5 * s * (p2[c] - p0[c] + s * (2.0 * p0[c] - 5.0 * p1[c] + 4.0 * p2[c] - p3[c]
                    + s * (3.0 * (p1[c] - p2[c]) + p3[c] - p0[c])));
        }
        out
    }
}

const TAG_PI: u64 = 1;
const TAG_START: u64 = 2;
const TAG_KERNEL: u64 = 3;
const TAG_RSK: u64 = 4;
const TAG_WARREN: u64 = 5;

fn pi_bottom_row(cfg: &SdeConfig, t_end: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let sub = SdeConfig { t_end, ..cfg.clone() };
    let path = sample_brownian(&sub, rng)?;
    Ok(grsk::pi_n(&path)?.last().bottom().to_vec())
}

/// Bottom rows from the two sides of a law comparison, one row per replica.
#[derive(Clone, Debug, Serialize)]
pub struct SamplePair {
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

fn transform_bottom_rows(cfg: &SdeConfig, exec: Execution) -> Result<Vec<Vec<f64>>> {
    exec.map(cfg.replicas, |r| pi_bottom_row(cfg, cfg.t_end, &mut replica_rng(cfg.seed, TAG_PI, r)))
        .into_iter()
        .collect()
}

fn check_start_time(cfg: &SdeConfig, t0: f64) -> Result<(usize, f64)> {
    if !(t0 > 0.0 && t0 < cfg.t_end) {
        return Err(Error::Invalid(format!("start time {t0} must lie in (0, {})", cfg.t_end)));
    }
    let steps = ((cfg.t_end - t0) / cfg.dt).round().max(1.0) as usize;
    Ok((steps, (cfg.t_end - t0) / steps as f64))
}

/// First: bottom rows of `Π` applied to Brownian paths at `t_end`. Second:
/// an Euler–Maruyama solution of `dx = √ε dW + ε∇log ψ_λ(x) dt` started at
/// time `t0` from independent copies of `Π` at `t0`, with the drift scaled
/// by `drift_factor`.
pub fn generator_samples(cfg: &SdeConfig, t0: f64, drift_factor: f64, exec: Execution) -> Result<SamplePair> {
    cfg.validate()?;
    if cfg.n() != 2 {
        return Err(Error::Range("the generator test runs at n = 2".into()));
    }
    let (steps, h) = check_start_time(cfg, t0)?;
    let table = DriftTable::new(&cfg.lambda, cfg.eps, exec)?;
    let first = transform_bottom_rows(cfg, exec)?;
    let sd = (cfg.eps * h).sqrt();
    let second = exec
        .map(cfg.replicas, |r| {
            let mut rng = replica_rng(cfg.seed, TAG_START, r);
            let mut x = pi_bottom_row(cfg, t0, &mut rng)?;
            for _ in 0..steps {
                let drift = table.drift(&x);
                for c in 0..2 {
                    x[c] += drift_factor * drift[c] * h + sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Ok(x)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplePair { first, second })
}

/// KS comparison of [`generator_samples`]. `drift_factor = 1` is the
/// faithful comparison; other factors give the power check, which passes
/// when some p-value falls below `1e−4`.
pub fn generator_test(cfg: &SdeConfig, t0: f64, drift_factor: f64, exec: Execution) -> Result<StatReport> {
    cfg.require_ks_replicas()?;
    let pair = generator_samples(cfg, t0, drift_factor, exec)?;
    let same = drift_factor == 1.0;
    let name = if same { "generator" } else { "generator_modified_drift" };
    let threshold = if same { 0.01 } else { 1e-4 };
    StatReport::from_samples(name, cfg, &pair.first, &pair.second, same, threshold)
}

/// Bottom rows at `t_end` of the geometric RSK dynamics (first) and the
/// local dynamics (second), each started from triangles drawn from the
/// kernel at `x`.
pub fn marginal_samples(cfg: &SdeConfig, x: &[f64], exec: Execution) -> Result<SamplePair> {
    cfg.validate()?;
    if x.len() != cfg.n() {
        return Err(Error::Invalid("start point and λ differ in length".into()));
    }
    let steps = cfg.steps();
    let h = cfg.t_end / steps as f64;
    let run = |tag: u64, dynamics: Dynamics| -> Result<Vec<Vec<f64>>> {
        let starts = {
            let mut rng = replica_rng(cfg.seed, TAG_KERNEL + 16 * tag, 0);
            sample_sigma_lambda(x, &cfg.lambda, cfg.eps, cfg.replicas, &mut rng)?
        };
        exec.map(cfg.replicas, |r| {
            let mut rng = replica_rng(cfg.seed, tag, r);
            let end = simulate_triangle(&starts[r], &cfg.lambda, cfg.eps, h, steps, dynamics, &mut rng)?;
            Ok(end.bottom().to_vec())
        })
        .into_iter()
        .collect()
    };
    Ok(SamplePair { first: run(TAG_RSK, Dynamics::Rsk)?, second: run(TAG_WARREN, Dynamics::Warren)? })
}

pub fn marginal_comparison(cfg: &SdeConfig, x: &[f64], exec: Execution) -> Result<StatReport> {
    cfg.require_ks_replicas()?;
    let pair = marginal_samples(cfg, x, exec)?;
    StatReport::from_samples("rsk_vs_local_marginals", cfg, &pair.first, &pair.second, true, 0.01)
}

/// Bottom rows at `t_end` of `Π` applied to Brownian paths (first) and of
/// the RSK dynamics started at time `t0` from `Π` of an independent path
/// (second).
pub fn pi_vs_sde_samples(cfg: &SdeConfig, t0: f64, exec: Execution) -> Result<SamplePair> {
    cfg.validate()?;
    let (steps, h) = check_start_time(cfg, t0)?;
    let first = transform_bottom_rows(cfg, exec)?;
    let second = exec
        .map(cfg.replicas, |r| {
            let mut rng = replica_rng(cfg.seed, TAG_START, r);
            let sub = SdeConfig { t_end: t0, ..cfg.clone() };
            let path = sample_brownian(&sub, &mut rng)?;
            let start = grsk::pi_n(&path)?.last().clone();
            let end = simulate_triangle(&start, &cfg.lambda, cfg.eps, h, steps, Dynamics::Rsk, &mut rng)?;
            Ok(end.bottom().to_vec())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplePair { first, second })
}

pub fn pi_vs_sde_comparison(cfg: &SdeConfig, t0: f64, exec: Execution) -> Result<StatReport> {
    cfg.require_ks_replicas()?;
    let pair = pi_vs_sde_samples(cfg, t0, exec)?;
    StatReport::from_samples("pi_vs_rsk_sde", cfg, &pair.first, &pair.second, true, 0.01)
}
