//! The convex potential on triangles, its minimizer over triangles with a
//! fixed bottom row, the reduced potential `u_λ` on bottom rows, and the
//! geometric Bender–Knuth involutions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::{vf_dyn_rsk, FlowConfig};
use crate::report::CheckReport;
use crate::triangle::{Triangle, ENTRY_LIMIT};

const MAX_NEWTON_ITERATIONS: usize = 200;

/// `ρⁿ = (n−1, n−3, …, 1−n)`.
pub fn rho(n: usize) -> Vec<f64> {
    (0..n).map(|i| n as f64 - 1.0 - 2.0 * i as f64).collect()
}

#[inline]
fn idx(m: usize, i: usize) -> usize {
    m * (m - 1) / 2 + i - 1
}

/// Calls `f(a, b)` with the flat indices of every exponential term
/// `e^{x_a − x_b}` of the potential.
fn for_each_term(n: usize, mut f: impl FnMut(usize, usize)) {
    for m in 1..n {
        for i in 1..=m {
            f(idx(m + 1, i + 1), idx(m, i));
            f(idx(m, i), idx(m + 1, i));
        }
    }
}

/// Coefficient of `x^m_i` in the linear part of `F_λ`.
fn linear_coefficient(lambda: &[f64], m: usize) -> f64 {
    let n = lambda.len();
    if m < n {
        lambda[m] - lambda[m - 1]
    } else {
        -lambda[n - 1]
    }
}

fn check_lambda(n: usize, lambda: &[f64]) -> Result<()> {
    if lambda.len() != n {
        return Err(Error::Invalid(format!("λ has length {}, expected {n}", lambda.len())));
    }
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::Invalid("non-finite λ".into()));
    }
    Ok(())
}

/// `Σ_{1≤i≤m<n} e^{x^{m+1}_{i+1} − x^m_i} + e^{x^m_i − x^{m+1}_i}`; zero for `n = 1`.
pub fn f_potential(x: &Triangle) -> Result<f64> {
    x.check_range()?;
    let d = x.as_slice();
    let mut s = 0.0;
    for_each_term(x.n(), |a, b| s += (d[a] - d[b]).exp());
    if !s.is_finite() {
        return Err(Error::Overflow("potential overflowed".into()));
    }
    Ok(s)
}

/// `Σ_m λ_m (Σ x^{m−1} − Σ x^m) + F(X)`.
pub fn f_lambda(x: &Triangle, lambda: &[f64]) -> Result<f64> {
    check_lambda(x.n(), lambda)?;
    let mut s = f_potential(x)?;
    for m in 1..=x.n() {
        s += lambda[m - 1] * (x.row_sum(m - 1) - x.row_sum(m));
    }
    Ok(s)
}

/// Gradient of `F_λ` with respect to every entry (bottom row included).
pub fn f_lambda_gradient(x: &Triangle, lambda: &[f64]) -> Result<Triangle> {
    check_lambda(x.n(), lambda)?;
    x.check_range()?;
    let n = x.n();
    let d = x.as_slice();
    let mut g = Triangle::zeros(n);
    for m in 1..=n {
        let c = linear_coefficient(lambda, m);
        for i in 1..=m {
            g.set(m, i, c);
        }
    }
    let gs = g.as_mut_slice();
    for_each_term(n, |a, b| {
        let e = (d[a] - d[b]).exp();
        gs[a] += e;
        gs[b] -= e;
    });
    Ok(g)
}

/// Hessian of `F_λ` with respect to the interior entries (rows `1..n−1`).
pub fn f_lambda_interior_hessian(x: &Triangle) -> DMatrix<f64> {
    let n = x.n();
    let k = n * (n - 1) / 2;
    let d = x.as_slice();
    let mut h = DMatrix::zeros(k, k);
    for_each_term(n, |a, b| {
        let e = (d[a] - d[b]).exp();
        if a < k {
            h[(a, a)] += e;
        }
        if b < k {
            h[(b, b)] += e;
        }
        if a < k && b < k {
            h[(a, b)] -= e;
            h[(b, a)] -= e;
        }
    });
    h
}

/// The two sides of the balance equations `λ_m + l^m_i = λ_{m+1} + r^m_i`
/// for `1 ≤ i ≤ m < n`.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalResidual {
    pub l: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub residual: Vec<Vec<f64>>,
}

impl CriticalResidual {
    pub fn max_abs(&self) -> f64 {
        self.residual.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Residual relative to the size of the terms being balanced.
    pub fn max_relative(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, row) in self.residual.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                worst = worst.max(v.abs() / (1.0 + self.l[m][i] + self.r[m][i]));
            }
        }
        worst
    }
}

/// `l^m_i = e^{x^{m+1}_{i+1} − x^m_i} + e^{x^{m−1}_i − x^m_i}` and
/// `r^m_i = e^{x^m_i − x^{m+1}_i} + e^{x^m_i − x^{m−1}_{i−1}}`, each second
/// term present only when the entry of row `m − 1` exists.
pub fn lr_terms(x: &Triangle, m: usize, i: usize) -> (f64, f64) {
    let mut l = (x.get(m + 1, i + 1) - x.get(m, i)).exp();
    let mut r = (x.get(m, i) - x.get(m + 1, i)).exp();
    if i < m {
        l += (x.get(m - 1, i) - x.get(m, i)).exp();
    }
    if i > 1 {
        r += (x.get(m, i) - x.get(m - 1, i - 1)).exp();
    }
    (l, r)
}

pub fn critical_residual(x: &Triangle, lambda: &[f64]) -> Result<CriticalResidual> {
    let n = x.n();
    check_lambda(n, lambda)?;
    x.check_range()?;
    let mut out = CriticalResidual { l: vec![], r: vec![], residual: vec![] };
    for m in 1..n {
        let (mut lr, mut rr, mut res) = (vec![], vec![], vec![]);
        for i in 1..=m {
            let (l, r) = lr_terms(x, m, i);
            lr.push(l);
            rr.push(r);
            res.push(lambda[m - 1] + l - lambda[m] - r);
        }
        out.l.push(lr);
        out.r.push(rr);
        out.residual.push(res);
    }
    Ok(out)
}

/// Interior rows obtained by averaging neighbours downwards from `bottom`.
pub fn averaged_start(bottom: &[f64]) -> Triangle {
    let n = bottom.len();
    let mut rows = vec![bottom.to_vec()];
    for _ in 1..n {
        let below = rows.last().unwrap();
        let row: Vec<f64> = below.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        rows.push(row);
    }
    rows.reverse();
    Triangle::from_rows(&rows).expect("averaged rows are well formed")
}

/// Minimizer of `F_λ` over triangles with bottom row `x`.
pub fn critical_point(x: &[f64], lambda: &[f64]) -> Result<Triangle> {
    critical_point_from(&averaged_start(x), lambda)
}

/// Damped Newton iteration on the interior of `start`; the bottom row is kept.
pub fn critical_point_from(start: &Triangle, lambda: &[f64]) -> Result<Triangle> {
    let n = start.n();
    check_lambda(n, lambda)?;
    if start.bottom().iter().any(|v| !(v.abs() <= ENTRY_LIMIT)) {
        return Err(Error::Overflow("bottom row out of range".into()));
    }
    let k = n * (n - 1) / 2;
    if k == 0 {
        return Ok(start.clone());
    }
    let mut x = start.clone();
    let mut value = f_lambda(&x, lambda)?;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let full = f_lambda_gradient(&x, lambda)?;
        let g = DVector::from_column_slice(&full.as_slice()[..k]);
        grad_norm = g.amax();
        let h = f_lambda_interior_hessian(&x);
        let scale = 1.0 + h.diagonal().amax();
        if grad_norm <= 1e-14 * scale {
            return Ok(x);
        }
        let chol = h.cholesky().ok_or(Error::Numerical("Hessian is not positive definite".into()))?;
        let step = chol.solve(&g);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = x.clone();
            for (v, s) in trial.interior_mut().iter_mut().zip(step.iter()) {
                *v -= t * s;
            }
            if let Ok(v) = f_lambda(&trial, lambda) {
                let better_gradient = || {
                    f_lambda_gradient(&trial, lambda)
                        .map(|gt| gt.as_slice()[..k].iter().fold(0.0f64, |m, v| m.max(v.abs())) < grad_norm)
                        .unwrap_or(false)
                };
                if v < value || (t == 1.0 && v <= value + 1e-12 * value.abs().max(1.0) && better_gradient()) {
                    x = trial;
                    value = v;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // No further decrease is representable; accept if already at the noise floor.
            if grad_norm <= 1e-9 * scale {
                return Ok(x);
            }
            return Err(Error::Convergence { iterations: MAX_NEWTON_ITERATIONS, residual: grad_norm });
        }
    }
    Err(Error::Convergence { iterations: MAX_NEWTON_ITERATIONS, residual: grad_norm })
}

/// `u_λ(x) = F_λ(X*_λ(x))`.
pub fn u_lambda(x: &[f64], lambda: &[f64]) -> Result<f64> {
    f_lambda(&critical_point(x, lambda)?, lambda)
}

/// Gradient of `u_λ`: the bottom-row partial derivatives of `F_λ` at the
/// minimizer, where the interior gradient vanishes.
pub fn grad_u(x: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
    let xs = critical_point(x, lambda)?;
    grad_u_at(&xs, lambda)
}

/// Bottom-row gradient of `F_λ` at a given critical triangle.
pub fn grad_u_at(xs: &Triangle, lambda: &[f64]) -> Result<Vec<f64>> {
    Ok(f_lambda_gradient(xs, lambda)?.bottom().to_vec())
}

/// Central finite-difference gradient of `u_λ`.
pub fn grad_u_finite_difference(x: &[f64], lambda: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        out.push((u_lambda(&xp, lambda)? - u_lambda(&xm, lambda)?) / (2.0 * h));
    }
    Ok(out)
}

/// Compares `F(X)` with `⟨ρⁿ, ẋⁿ⟩`, the bottom-row velocity taken from the
/// geometric RSK flow.
pub fn givental_identity_check(x: &Triangle, lambda: &[f64], tolerance: f64) -> Result<CheckReport> {
    check_lambda(x.n(), lambda)?;
    let f = f_potential(x)?;
    let v = vf_dyn_rsk(x, lambda);
    let pairing: f64 = rho(x.n()).iter().zip(v.bottom()).map(|(a, b)| a * b).sum();
    Ok(CheckReport::new("potential_equals_weighted_velocity", (f - pairing).abs() / (1.0 + f.abs()), tolerance))
}

/// `x^m_i ↦ x^m_i + log(l^m_i / r^m_i)`, for `1 ≤ i ≤ m < n`.
pub fn bender_knuth(x: &Triangle, m: usize, i: usize) -> Result<Triangle> {
    if !(1 <= i && i <= m && m < x.n()) {
        return Err(Error::Invalid(format!("no involution at ({m}, {i}) for n = {}", x.n())));
    }
    let (l, r) = lr_terms(x, m, i);
    let mut y = x.clone();
    y.set(m, i, x.get(m, i) + l.ln() - r.ln());
    Ok(y)
}

/// `X*_λ(−N ρⁿ)`: the start triangle whose insertion offsets grow like `N`.
pub fn singular_limit_offsets(scale: f64, lambda: &[f64]) -> Result<Triangle> {
    if !(scale > 0.0) {
        return Err(Error::Invalid(format!("scale {scale} must be positive")));
    }
    let bottom: Vec<f64> = rho(lambda.len()).iter().map(|r| -scale * r).collect();
    critical_point(&bottom, lambda)
}

/// Bottom-row trajectory of `ẋ = −∇u_λ(x)` by RK4, with each stage's Newton
/// solve started from the previous minimizer.
pub fn gradient_flow(x0: &[f64], lambda: &[f64], cfg: &FlowConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    cfg.validate()?;
    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let h = cfg.t_end / steps as f64;
    let mut warm = critical_point(x0, lambda)?;
    let mut velocity = |x: &[f64]| -> Result<Vec<f64>> {
        let start = Triangle::from_interior(x, warm.interior());
        warm = critical_point_from(&start, lambda)?;
        Ok(grad_u_at(&warm, lambda)?.iter().map(|g| -g).collect())
    };
    let shift = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    for s in 1..=steps {
        let k1 = velocity(&x)?;
        let k2 = velocity(&shift(&x, &k1, h / 2.0))?;
        let k3 = velocity(&shift(&x, &k2, h / 2.0))?;
        let k4 = velocity(&shift(&x, &k3, h))?;
        for j in 0..x.len() {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        times.push(s as f64 * h);
        states.push(x.clone());
    }
    Ok((times, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-scale..scale)).collect()
    }

    #[test]
    fn potential_small_cases() {
        assert_eq!(f_potential(&Triangle::zeros(1)).unwrap(), 0.0);
        assert_eq!(f_potential(&Triangle::zeros(2)).unwrap(), 2.0);
        let x = Triangle::from_rows(&[vec![3.0]]).unwrap();
        assert_eq!(f_lambda(&x, &[2.0]).unwrap(), -6.0);
        let mut terms = 0;
        for_each_term(5, |_, _| terms += 1);
        assert_eq!(terms, 20);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=4 {
            let x = Triangle::from_flat(n, random_vec(n * (n + 1) / 2, 1.0, &mut rng)).unwrap();
            let lambda = random_vec(n, 1.0, &mut rng);
            let g = f_lambda_gradient(&x, &lambda).unwrap();
            let h = f_lambda_interior_hessian(&x);
            let step = 1e-5;
            for j in 0..x.len() {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp.as_mut_slice()[j] += step;
                xm.as_mut_slice()[j] -= step;
                let fd = (f_lambda(&xp, &lambda).unwrap() - f_lambda(&xm, &lambda).unwrap()) / (2.0 * step);
                assert!((fd - g.as_slice()[j]).abs() < 1e-6);
                if j < h.nrows() {
                    let gp = f_lambda_gradient(&xp, &lambda).unwrap();
                    let gm = f_lambda_gradient(&xm, &lambda).unwrap();
                    for a in 0..h.nrows() {
                        let fd = (gp.as_slice()[a] - gm.as_slice()[a]) / (2.0 * step);
                        assert!((fd - h[(a, j)]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        assert!(critical_point(&[0.0, 0.0], &[0.0, 0.0]).unwrap().get(1, 1).abs() < 1e-14);
        for (lam, x) in [(1.0f64, 0.0f64), (0.5, 0.7), (-1.2, -0.4)] {
            let xs = critical_point(&[x, -x], &[lam, -lam]).unwrap();
            let want = -((lam * lam * (2.0 * x).exp() + 1.0).sqrt() - lam * x.exp()).ln();
            assert!((xs.get(1, 1) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn critical_point_is_a_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=5 {
            let x = random_vec(n, 2.0, &mut rng);
            let lambda = random_vec(n, 1.0, &mut rng);
            let xs = critical_point(&x, &lambda).unwrap();
            assert_eq!(xs.bottom(), &x[..]);
            assert!(critical_residual(&xs, &lambda).unwrap().max_abs() < 1e-10);
            assert!(f_lambda_interior_hessian(&xs).cholesky().is_some());
            let best = f_lambda(&xs, &lambda).unwrap();
            for _ in 0..100 {
                let mut y = xs.clone();
                for v in y.interior_mut() {
                    *v += rng.random_range(-0.1..0.1);
                }
                assert!(f_lambda(&y, &lambda).unwrap() > best);
            }
        }
    }

    #[test]
    fn u_and_its_gradient() {
        assert!((u_lambda(&[0.0, 0.0], &[0.0, 0.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!((u_lambda(&[1.5], &[2.0]).unwrap() + 3.0).abs() < 1e-14);
        let g = grad_u(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-14 && (g[1] - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let x = random_vec(n, 1.0, &mut rng);
            let lambda = random_vec(n, 1.0, &mut rng);
            let g = grad_u(&x, &lambda).unwrap();
            let fd = grad_u_finite_difference(&x, &lambda, 1e-4).unwrap();
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
            let shifted: Vec<f64> = x.iter().map(|v| v + 0.8).collect();
            let gs = grad_u(&shifted, &lambda).unwrap();
            for (a, b) in g.iter().zip(&gs) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn givental_identity_on_critical_set() {
        let s = 2f64.ln();
        let x = Triangle::from_rows(&[vec![0.0], vec![s, -s]]).unwrap();
        let rep = givental_identity_check(&x, &[0.0, 0.0], 1e-12).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(givental_identity_check(&Triangle::zeros(1), &[0.3], 0.0).unwrap().pass);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lambda = random_vec(4, 1.0, &mut rng);
        let xs = critical_point(&random_vec(4, 1.0, &mut rng), &lambda).unwrap();
        assert!(givental_identity_check(&xs, &lambda, 1e-8).unwrap().pass);
    }

    #[test]
    fn bender_knuth_involutions() {
        let x = Triangle::from_rows(&[vec![1.0], vec![0.0, 0.0]]).unwrap();
        assert!((bender_knuth(&x, 1, 1).unwrap().get(1, 1) + 1.0).abs() < 1e-15);
        assert!(bender_knuth(&x, 2, 1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let y = Triangle::from_flat(n, random_vec(10, 1.0, &mut rng)).unwrap();
        let zero = critical_point(&random_vec(n, 1.0, &mut rng), &[0.0; 4]).unwrap();
        for m in 1..n {
            for i in 1..=m {
                let twice = bender_knuth(&bender_knuth(&y, m, i).unwrap(), m, i).unwrap();
                assert!(twice.max_abs_diff(&y) < 1e-10);
                assert!(bender_knuth(&zero, m, i).unwrap().max_abs_diff(&zero) < 1e-10);
            }
        }
        let moved = (1..n).flat_map(|m| (1..=m).map(move |i| (m, i))).any(|(m, i)| {
            bender_knuth(&y, m, i).unwrap().max_abs_diff(&y) > 1e-6
        });
        assert!(moved);
    }

    #[test]
    fn singular_offsets_grow_linearly() {
        let xs = singular_limit_offsets(20.0, &[0.0, 0.0]).unwrap();
        assert!(xs.get(1, 1).abs() < 1e-10);
        let xs = singular_limit_offsets(20.0, &[0.0; 3]).unwrap();
        let off = crate::grsk::InsertionOffsets::from_triangle(&xs);
        for m in 2..=3 {
            for k in 2..=m {
                let ratio = off.r(m, k) / 20.0;
                assert!((ratio - (k - 1) as f64).abs() < 0.05 * (k - 1) as f64, "{m},{k}: {ratio}");
            }
        }
    }

    #[test]
    fn critical_point_is_continuous_in_lambda() {
        let x = [0.4, -0.1, 0.3];
        let lambda = [0.2, -0.5, 0.1];
        let base = critical_point(&x, &lambda).unwrap();
        let mut last = f64::INFINITY;
        for d in [1e-2, 1e-3, 1e-4] {
            let moved = critical_point(&x, &[0.2 + d, -0.5, 0.1 - d]).unwrap();
            let diff = moved.max_abs_diff(&base);
            assert!(diff < last && diff < 10.0 * d);
            last = diff;
        }
    }
}
