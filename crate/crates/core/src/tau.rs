//! Closed forms for the flow started at the identity: `b(t) = e^{tε_λ}`
//! entry by entry through divided differences of `z ↦ e^{tz}`, the tau
//! functions built from its corner minors, and the identities they satisfy.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{self, SquareMatrix};
use crate::report::CheckReport;

/// Rates closer than this (relative to `1 + |μ|`) are merged.
const RATE_MERGE: f64 = 1e-9;

/// A finite sum `Σ_j p_j(t) e^{μ_j t}` with polynomial coefficients
/// (`coeffs[k]` multiplies `t^k`).
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExpPolynomial {
    terms: Vec<(f64, Vec<f64>)>,
}

impl ExpPolynomial {
    pub fn zero() -> Self {
        ExpPolynomial { terms: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        Self::term(0.0, vec![c])
    }

    /// `poly(t)·e^{rate·t}`.
    pub fn term(rate: f64, poly: Vec<f64>) -> Self {
        let mut p = ExpPolynomial { terms: vec![(rate, poly)] };
        p.canonicalize();
        p
    }

    pub fn terms(&self) -> &[(f64, Vec<f64>)] {
        &self.terms
    }

    fn canonicalize(&mut self) {
        self.terms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Vec<f64>)> = Vec::with_capacity(self.terms.len());
        for (rate, poly) in self.terms.drain(..) {
            match merged.last_mut() {
                Some((r, p)) if (rate - *r).abs() <= RATE_MERGE * (1.0 + r.abs()) => {
                    if p.len() < poly.len() {
                        p.resize(poly.len(), 0.0);
                    }
                    for (a, b) in p.iter_mut().zip(&poly) {
                        *a += b;
                    }
                }
                _ => merged.push((rate, poly)),
            }
        }
        for (_, p) in merged.iter_mut() {
            while p.last() == Some(&0.0) {
                p.pop();
            }
        }
        merged.retain(|(_, p)| !p.is_empty());
        self.terms = merged;
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(rate, p)| p.iter().rev().fold(0.0, |acc, c| acc * t + c) * (rate * t).exp())
            .sum()
    }

    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(rate, p)| {
                let mut d: Vec<f64> = p.iter().map(|c| rate * c).collect();
                for k in 1..p.len() {
                    d[k - 1] += k as f64 * p[k];
                }
                (*rate, d)
            })
            .collect();
        let mut out = ExpPolynomial { terms };
        out.canonicalize();
        out
    }

    /// The `order`-th derivative.
    pub fn nth_derivative(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = ExpPolynomial { terms: self.terms.iter().chain(&other.terms).cloned().collect() };
        out.canonicalize();
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = ExpPolynomial {
            terms: self.terms.iter().map(|(r, p)| (*r, p.iter().map(|c| c * s).collect())).collect(),
        };
        out.canonicalize();
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ra, pa) in &self.terms {
            for (rb, pb) in &other.terms {
                let mut p = vec![0.0; pa.len() + pb.len() - 1];
                for (i, a) in pa.iter().enumerate() {
                    for (j, b) in pb.iter().enumerate() {
                        p[i + j] += a * b;
                    }
                }
                terms.push((ra + rb, p));
            }
        }
        let mut out = ExpPolynomial { terms };
        out.canonicalize();
        out
    }
}

fn check_lambda(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() || lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::Invalid("λ must be a non-empty finite vector".into()));
    }
    Ok(())
}

fn check_entry(n: usize, i: usize, j: usize) -> Result<()> {
    if !(1 <= i && i <= j && j <= n) {
        return Err(Error::Range(format!("entry ({i}, {j}) is not on or above the diagonal of a {n}x{n} matrix")));
    }
    Ok(())
}

/// Groups nodes into clusters of (value, multiplicity).
fn cluster_nodes(nodes: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut clusters: Vec<(f64, usize, f64)> = vec![];
    for x in sorted {
        match clusters.last_mut() {
            Some((_, m, sum)) if (x - *sum / *m as f64).abs() <= RATE_MERGE * (1.0 + x.abs()) => {
                *m += 1;
                *sum += x;
            }
            _ => clusters.push((x, 1, x)),
        }
    }
    clusters.into_iter().map(|(_, m, sum)| (sum / m as f64, m)).collect()
}

/// Divided difference of `z ↦ e^{tz}` over `nodes` as an exponential
/// polynomial in `t`: the sum of residues of `e^{tz}/Π(z − λ_k)`, with
/// repeated nodes giving polynomial coefficients.
pub fn divided_difference_exp_poly(nodes: &[f64]) -> ExpPolynomial {
    let clusters = cluster_nodes(nodes);
    let mut out = ExpPolynomial::zero();
    for (c, &(mu, mult)) in clusters.iter().enumerate() {
        // Taylor coefficients of Π_{d≠c} (z − μ_d)^{−m_d} about μ_c, up to order mult−1.
        let mut g = vec![0.0; mult];
        g[0] = 1.0;
        for (d, &(nu, md)) in clusters.iter().enumerate() {
            if d == c {
                continue;
            }
            let delta = mu - nu;
            // (h + δ)^{−m} = δ^{−m} Σ_k binom(−m, k) (h/δ)^k
            let mut series = vec![0.0; mult];
            let mut coef = delta.powi(-(md as i32));
            for (k, s) in series.iter_mut().enumerate() {
                *s = coef;
                coef *= -((md + k) as f64) / ((k + 1) as f64) / delta;
            }
            let mut prod = vec![0.0; mult];
            for a in 0..mult {
                for b in 0..mult - a {
                    prod[a + b] += g[a] * series[b];
                }
            }
            g = prod;
        }
        // Coefficient of h^{mult−1} in e^{μt} Σ_j (th)^j/j! · g(h).
        let mut poly = vec![0.0; mult];
        let mut fact = 1.0;
        for (jdx, p) in poly.iter_mut().enumerate() {
            if jdx > 0 {
                fact *= jdx as f64;
            }
            *p = g[mult - 1 - jdx] / fact;
        }
        out = out.add(&ExpPolynomial::term(mu, poly));
    }
    out
}

/// `b_{ij}` of `e^{tε_λ}` as an exponential polynomial in `t`.
pub fn b_entry_poly(lambda: &[f64], i: usize, j: usize) -> Result<ExpPolynomial> {
    check_lambda(lambda)?;
    check_entry(lambda.len(), i, j)?;
    Ok(divided_difference_exp_poly(&lambda[i - 1..j]))
}

/// Divided difference of `e^{tz}` over nodes spanning less than `1/t`, by
/// the series `t^k e^{ct} Σ_m h_m(t(x − c)) / (m + k)!` about the midpoint `c`.
fn divided_difference_taylor(nodes: &[f64], t: f64) -> f64 {
    let k = nodes.len() - 1;
    let c = 0.5 * (nodes[0] + nodes[k]);
    let y: Vec<f64> = nodes.iter().map(|x| t * (x - c)).collect();
    const TERMS: usize = 40;
    // Complete homogeneous symmetric polynomials h_m(y_0..y_k), m < TERMS.
    let mut h = vec![0.0; TERMS];
    h[0] = 1.0;
    for m in 1..TERMS {
        h[m] = h[m - 1] * y[0];
    }
    for &v in &y[1..] {
        for m in 1..TERMS {
            h[m] += v * h[m - 1];
        }
    }
    let mut inv_fact: f64 = (1..=k).map(|v| 1.0 / v as f64).product();
    let mut sum = 0.0;
    for (m, hm) in h.iter().enumerate() {
        if m > 0 {
            inv_fact /= (m + k) as f64;
        }
        sum += hm * inv_fact;
    }
    t.powi(k as i32) * (c * t).exp() * sum
}

/// Divided difference of `z ↦ e^{tz}` over `nodes`, evaluated without
/// cancellation trouble for close or repeated nodes: sorted nodes, the usual
/// recursive table where the span is at least `1/t`, and a series otherwise.
pub fn divided_difference_exp(nodes: &[f64], t: f64) -> f64 {
    let mut x = nodes.to_vec();
    x.sort_by(f64::total_cmp);
    let k = x.len();
    if t == 0.0 {
        return if k == 1 { 1.0 } else { 0.0 };
    }
    let mut table: Vec<f64> = (0..k).map(|a| (x[a] * t).exp()).collect();
    for width in 1..k {
        for a in 0..k - width {
            let b = a + width;
            let span = x[b] - x[a];
            table[a] = if span * t.abs() <= 1.0 {
                divided_difference_taylor(&x[a..=b], t)
            } else {
                (table[a + 1] - table[a]) / span
            };
        }
    }
    table[0]
}

/// Entry `(i, j)` of `b(t) = e^{tε_λ}` (zero below the diagonal).
pub fn b_explicit(lambda: &[f64], t: f64, i: usize, j: usize) -> Result<f64> {
    check_lambda(lambda)?;
    let n = lambda.len();
    if i > j && j >= 1 && i <= n {
        return Ok(0.0);
    }
    check_entry(n, i, j)?;
    Ok(divided_difference_exp(&lambda[i - 1..j], t))
}

/// The full matrix `b(t)` from [`b_explicit`].
pub fn b_explicit_matrix(lambda: &[f64], t: f64) -> Result<SquareMatrix> {
    check_lambda(lambda)?;
    let n = lambda.len();
    let mut b = SquareMatrix::zeros(n);
    for i in 1..=n {
        for j in i..=n {
            b[(i - 1, j - 1)] = divided_difference_exp(&lambda[i - 1..j], t);
        }
    }
    Ok(b)
}

/// `b_{ij}` as a bordered Vandermonde determinant divided by `Π_{k<l}(λ_k − λ_l)`.
pub fn b_det_form(lambda: &[f64], t: f64, i: usize, j: usize) -> Result<f64> {
    check_lambda(lambda)?;
    check_entry(lambda.len(), i, j)?;
    if i == j {
        return Err(Error::Invalid("the determinant form needs i < j".into()));
    }
    let nodes = &lambda[i - 1..j];
    let size = nodes.len();
    let mut vandermonde = 1.0;
    for a in 0..size {
        for b in a + 1..size {
            let gap = nodes[a] - nodes[b];
            if gap.abs() <= RATE_MERGE * (1.0 + nodes[a].abs()) {
                return Err(Error::DegenerateNodes(format!("λ_{} and λ_{} coincide", i + a, i + b)));
            }
            vandermonde *= gap;
        }
    }
    let m = SquareMatrix::from_fn(size, |r, c| {
        if c == 0 {
            (nodes[r] * t).exp()
        } else {
            nodes[r].powi((size - 1 - c) as i32)
        }
    });
    Ok(m.det() / vandermonde)
}

/// `Σ_k Π_{l≠k} (λ_k − λ_l)^{−1}`, which vanishes for distinct nodes.
pub fn residue_sum(lambda: &[f64]) -> f64 {
    (0..lambda.len())
        .map(|k| {
            (0..lambda.len())
                .filter(|&l| l != k)
                .map(|l| 1.0 / (lambda[k] - lambda[l]))
                .product::<f64>()
        })
        .sum()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::Range(format!("tau index {k} exceeds n = {n}")));
    }
    Ok(())
}

/// `τ_k(t)`: the minor of `b(t)` on rows `1..k` and columns `n−k+1..n`
/// (`τ_0 = 1`).
pub fn tau_k(lambda: &[f64], t: f64, k: usize) -> Result<f64> {
    check_k(lambda.len(), k)?;
    let b = b_explicit_matrix(lambda, t)?;
    matrix::minor(&b, lambda.len(), k)
}

/// All of `τ_1..τ_n` at one time.
pub fn tau_all(lambda: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = lambda.len();
    let b = b_explicit_matrix(lambda, t)?;
    (1..=n).map(|k| matrix::minor(&b, n, k)).collect()
}

/// `d^m/dt^m b_{1n}(t)`, the divided difference of `z ↦ z^m e^{tz}` over
/// `λ`, by the Leibniz rule: `Σ_r h_{m−r}(λ_1..λ_r) · [λ_r..λ_n] e^{tz}`,
/// where the complete homogeneous sums `h` are the divided differences of
/// `z^m`.
pub fn top_corner_derivative(lambda: &[f64], t: f64, order: usize) -> f64 {
    let mut x = lambda.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    // h[d] over the nodes seen so far.
    let mut h = vec![0.0; order + 1];
    h[0] = 1.0;
    let mut sum = 0.0;
    for r in 0..n {
        for d in 1..=order {
            h[d] += x[r] * h[d - 1];
        }
        if r <= order {
            sum += h[order - r] * divided_difference_exp(&x[r..], t);
        }
    }
    sum
}

/// `τ_k` as the Hankel determinant `det[τ^{(k+i−j−1)}]` of derivatives of
/// `τ = b_{1n}`.
pub fn tau_hankel(lambda: &[f64], t: f64, k: usize) -> Result<f64> {
    check_lambda(lambda)?;
    check_k(lambda.len(), k)?;
    if k == 0 {
        return Ok(1.0);
    }
    let values: Vec<f64> = (0..2 * k - 1).map(|m| top_corner_derivative(lambda, t, m)).collect();
    Ok(SquareMatrix::from_fn(k, |i, j| values[k + i - j - 1]).det())
}

/// `τ_k` at `λ = 0`: `(k−1)!⋯1! / ((n−1)!⋯(n−k)!) · t^{k(n−k)}`.
pub fn tau_zero_lambda(n: usize, t: f64, k: usize) -> Result<f64> {
    check_k(n, k)?;
    let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
    let num: f64 = (1..k).map(fact).product();
    let den: f64 = (n - k..n).map(fact).product();
    Ok(num / den * t.powi((k * (n - k)) as i32))
}

/// `τ_k` as an exponential polynomial, by cofactor expansion with the
/// minors of the remaining rows memoized on their column sets.
pub fn tau_poly(lambda: &[f64], k: usize) -> Result<ExpPolynomial> {
    let n = lambda.len();
    check_lambda(lambda)?;
    check_k(n, k)?;
    if k == 0 {
        return Ok(ExpPolynomial::constant(1.0));
    }
    let cols: Vec<usize> = (n - k + 1..=n).collect();
    let mut entries = vec![vec![ExpPolynomial::zero(); k]; k];
    for (r, row) in entries.iter_mut().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            if r < j {
                row[c] = b_entry_poly(lambda, r + 1, j)?;
            }
        }
    }
    fn expand(
        row: usize,
        mask: u32,
        entries: &[Vec<ExpPolynomial>],
        memo: &mut HashMap<(usize, u32), ExpPolynomial>,
    ) -> ExpPolynomial {
        let k = entries.len();
        if row == k {
            return ExpPolynomial::constant(1.0);
        }
        if let Some(p) = memo.get(&(row, mask)) {
            return p.clone();
        }
        let mut acc = ExpPolynomial::zero();
        let mut sign = 1.0;
        for c in 0..k {
            if mask & (1 << c) != 0 {
                continue;
            }
            if !entries[row][c].terms().is_empty() {
                let rest = expand(row + 1, mask | (1 << c), entries, memo);
                acc = acc.add(&entries[row][c].mul(&rest).scale(sign));
            }
            sign = -sign;
        }
        memo.insert((row, mask), acc.clone());
        acc
    }
    Ok(expand(0, 0, &entries, &mut HashMap::new()))
}

/// `(log τ)''` from exact derivatives.
fn log_second_derivative(p: &ExpPolynomial, t: f64) -> f64 {
    let (v, d1, d2) = (p.eval(t), p.derivative().eval(t), p.nth_derivative(2).eval(t));
    (d2 * v - d1 * d1) / (v * v)
}

/// Checks `(log τ_k)'' = −τ_{k+1} τ_{k−1} / τ_k²` for `1 ≤ k ≤ n` on `times`,
/// with `τ_0 = 1` and `τ_{n+1} = 0`. Residuals are relative to `1 + |rhs|`.
pub fn toda_log_second_derivative_check(lambda: &[f64], times: &[f64], tolerance: f64) -> Result<CheckReport> {
    let n = lambda.len();
    let taus: Vec<ExpPolynomial> = (0..=n).map(|k| tau_poly(lambda, k)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for &t in times {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("time {t} must be positive")));
        }
        let values: Vec<f64> = taus.iter().map(|p| p.eval(t)).collect();
        for k in 1..=n {
            let above = if k < n { values[k + 1] } else { 0.0 };
            let rhs = -above * values[k - 1] / (values[k] * values[k]);
            let lhs = log_second_derivative(&taus[k], t);
            worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
        }
    }
    Ok(CheckReport::new("tau_bilinear_identity", worst, tolerance))
}

/// Checks that `x_k = log τ_k − log τ_{k−1}` solves
/// `ẍ_k = e^{x_k − x_{k−1}} − e^{x_{k+1} − x_k}` (boundary terms dropped).
pub fn toda_equations_check(lambda: &[f64], times: &[f64], tolerance: f64) -> Result<CheckReport> {
    let n = lambda.len();
    let taus: Vec<ExpPolynomial> = (0..=n).map(|k| tau_poly(lambda, k)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for &t in times {
        let logs: Vec<f64> = taus.iter().map(|p| p.eval(t).ln()).collect();
        let second: Vec<f64> = taus.iter().map(|p| log_second_derivative(p, t)).collect();
        let x: Vec<f64> = (1..=n).map(|k| logs[k] - logs[k - 1]).collect();
        for k in 0..n {
            let acc = second[k + 1] - second[k];
            let mut force = 0.0;
            if k > 0 {
                force += (x[k] - x[k - 1]).exp();
            }
            if k + 1 < n {
                force -= (x[k + 1] - x[k]).exp();
            }
            worst = worst.max((acc - force).abs() / (1.0 + force.abs()));
        }
    }
    Ok(CheckReport::new("log_tau_toda_equations", worst, tolerance))
}

/// Tau functions and the bottom row `x_k = log τ_k − log τ_{k−1}` on a time grid.
#[derive(Clone, Debug, Serialize)]
pub struct TauTable {
    pub times: Vec<f64>,
    pub tau: Vec<Vec<f64>>,
    pub solution: Vec<Vec<f64>>,
}

pub fn tau_table(lambda: &[f64], times: &[f64]) -> Result<TauTable> {
    let mut tau = Vec::with_capacity(times.len());
    let mut solution = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("time {t} must be positive")));
        }
        let row = tau_all(lambda, t)?;
        if let Some(bad) = row.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Numerical(format!("non-positive tau value {bad:e} at t = {t}")));
        }
        let mut prev = 0.0;
        let x = row
            .iter()
            .map(|v| {
                let l = v.ln();
                let d = l - prev;
                prev = l;
                d
            })
            .collect();
        tau.push(row);
        solution.push(x);
    }
    Ok(TauTable { times: times.to_vec(), tau, solution })
}
