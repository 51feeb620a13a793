//! Deterministic dynamics: the two triangle flows, the linear flow
//! `b ↦ e^{tε_λ}b`, the Toda lattice (by factorization and by direct
//! integration of the Lax equation) and the Kostant normal form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grsk::TrianglePath;
use crate::matrix::{self, LowerUnitriangular, SquareMatrix};
use crate::report::CheckReport;
use crate::triangle::{self, LaxMatrix, Triangle};

/// Fixed-step RK4 settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Relative pivot floor for Gauss decompositions along Toda trajectories.
    pub pivot_floor: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { dt: 1e-3, t_end: 1.0, pivot_floor: matrix::PIVOT_FLOOR }
    }
}

impl FlowConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let cfg = FlowConfig { dt, t_end, ..Default::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Invalid(format!(
                "need dt > 0 and t_end ≥ 0, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        Ok(())
    }

    /// Step count and the step size that lands exactly on `t_end`.
    fn steps(&self) -> (usize, f64) {
        let steps = (self.t_end / self.dt).round().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

/// Which triangle vector field to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Field {
    /// The geometric RSK flow (row recursion in the velocities).
    Rsk,
    /// The local flow (each entry sees only its neighbours in the row above).
    Local,
}

/// Velocity field of the geometric RSK flow:
/// `ẋ¹₁ = λ₁`, `ẋ^m_m = λ_m − e^{x^m_m − x^{m−1}_{m−1}}`,
/// `ẋ^m_i = ẋ^{m−1}_i + e^{x^m_{i+1} − x^{m−1}_i} − e^{x^m_i − x^{m−1}_{i−1}}` (last term absent for `i = 1`).
pub fn vf_dyn_rsk(x: &Triangle, lambda: &[f64]) -> Triangle {
    triangle::rsk_field(x, lambda)
}

/// Velocity field of the local flow:
/// `ẋ^m_i = λ_m + e^{x^{m−1}_i − x^m_i} − e^{x^m_i − x^{m−1}_{i−1}}`, with the
/// terms that refer to entries outside the row above dropped.
pub fn vf_dyn(x: &Triangle, lambda: &[f64]) -> Triangle {
    let n = x.n();
    let mut v = Triangle::zeros(n);
    v.set(1, 1, lambda[0]);
    for m in 2..=n {
        for i in 1..=m {
            let mut rate = lambda[m - 1];
            if i < m {
                rate += (x.get(m - 1, i) - x.get(m, i)).exp();
            }
            if i > 1 {
                rate -= (x.get(m, i) - x.get(m - 1, i - 1)).exp();
            }
            v.set(m, i, rate);
        }
    }
    v
}

fn field_fn(field: Field) -> fn(&Triangle, &[f64]) -> Triangle {
    match field {
        Field::Rsk => vf_dyn_rsk,
        Field::Local => vf_dyn,
    }
}

fn rk4_triangle(x: &Triangle, lambda: &[f64], h: f64, f: fn(&Triangle, &[f64]) -> Triangle) -> Triangle {
    let k1 = f(x, lambda);
    let k2 = f(&x.add_scaled(&k1, h / 2.0), lambda);
    let k3 = f(&x.add_scaled(&k2, h / 2.0), lambda);
    let k4 = f(&x.add_scaled(&k3, h), lambda);
    let mut out = x.clone();
    for (j, o) in out.as_mut_slice().iter_mut().enumerate() {
        let (a, b, c, d) = (k1.as_slice()[j], k2.as_slice()[j], k3.as_slice()[j], k4.as_slice()[j]);
        *o += h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    }
    out
}

/// RK4 trajectory of the chosen triangle flow, sampled at every step.
pub fn integrate_triangle(
    x0: &Triangle,
    lambda: &[f64],
    cfg: &FlowConfig,
    field: Field,
) -> Result<TrianglePath> {
    cfg.validate()?;
    check_lambda(x0.n(), lambda)?;
    x0.check_range()?;
    let (steps, h) = cfg.steps();
    let f = field_fn(field);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    times.push(0.0);
    states.push(x.clone());
    for s in 1..=steps {
        x = rk4_triangle(&x, lambda, h, f);
        let t = s as f64 * h;
        if x.check_range().is_err() {
            return Err(Error::BlowUp { time: t, detail: "triangle entry diverged".into() });
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(TrianglePath { times, states })
}

/// Step-doubling defect at `t_end`: `‖X_h − X_{h/2}‖∞`.
pub fn richardson_defect(x0: &Triangle, lambda: &[f64], cfg: &FlowConfig, field: Field) -> Result<f64> {
    let coarse = integrate_triangle(x0, lambda, cfg, field)?;
    let fine_cfg = FlowConfig { dt: cfg.dt / 2.0, ..*cfg };
    let fine = integrate_triangle(x0, lambda, &fine_cfg, field)?;
    Ok(coarse.last().max_abs_diff(fine.last()))
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

/// The linear flow `b ↦ e^{tε_λ} b`.
pub fn r_flow(b: &SquareMatrix, lambda: &[f64], t: f64) -> Result<SquareMatrix> {
    check_lambda(b.n(), lambda)?;
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("time {t} must be non-negative")));
    }
    Ok(matrix::matrix_exp(&matrix::epsilon(lambda), t)?.matmul(b))
}

/// The triangle flow obtained by conjugating the linear flow with `f`.
pub fn s_flow(x: &Triangle, lambda: &[f64], t: f64) -> Result<Triangle> {
    let b = triangle::f_inv(x)?;
    triangle::f_map(&r_flow(b.matrix(), lambda, t)?)
}

/// Time derivative of a Lax matrix: `(ṗ, q̇)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaxTangent {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LaxTangent {
    pub fn max_abs_diff(&self, other: &LaxTangent) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .chain(self.q.iter().zip(&other.q))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Toda equations from `Ṁ = [M, Π₋(M)]`:
/// `ṗ_i = q_{i−1} − q_i` (with `q_0 = q_n = 0`), `q̇_i = (p_{i+1} − p_i) q_i`.
pub fn toda_lax_rhs(m: &LaxMatrix) -> LaxTangent {
    let n = m.n();
    let q_at = |i: isize| if i >= 0 && (i as usize) < n - 1 { m.q[i as usize] } else { 0.0 };
    let p = (0..n as isize).map(|i| q_at(i - 1) - q_at(i)).collect();
    let q = (0..n - 1).map(|i| (m.p[i + 1] - m.p[i]) * m.q[i]).collect();
    LaxTangent { p, q }
}

/// The interior momentum equation written with the neighbouring index on
/// the other side, `ṗ_i = q_{i+1} − q_i`; boundary rows as in [`toda_lax_rhs`].
/// Kept to report how far this variant is from the commutator.
pub fn toda_rhs_shifted_variant(m: &LaxMatrix) -> LaxTangent {
    let n = m.n();
    let mut t = toda_lax_rhs(m);
    for i in 1..n.saturating_sub(1) {
        t.p[i] = m.q.get(i + 1).copied().unwrap_or(0.0) - m.q[i];
    }
    t
}

/// `[M, Π₋(M)]` as a dense matrix.
pub fn lax_commutator(m: &LaxMatrix) -> SquareMatrix {
    let mm = m.to_matrix();
    mm.commutator(&mm.strictly_lower())
}

/// Factors of `e^{tM₀} = n(t) r(t)`.
#[derive(Clone, Debug, Serialize)]
pub struct FactorizationState {
    pub n_part: LowerUnitriangular,
    pub r_part: SquareMatrix,
    pub m0: LaxMatrix,
}

/// `M(t) = n(t)⁻¹ M₀ n(t)` where `e^{tM₀} = n(t) r(t)`.
pub fn toda_flow_factorized(m0: &LaxMatrix, t: f64) -> Result<(LaxMatrix, FactorizationState)> {
    toda_flow_factorized_with_floor(m0, t, matrix::PIVOT_FLOOR)
}

fn toda_flow_factorized_with_floor(
    m0: &LaxMatrix,
    t: f64,
    pivot_floor: f64,
) -> Result<(LaxMatrix, FactorizationState)> {
    let a = m0.to_matrix();
    let e = matrix::matrix_exp(&a, t)?;
    let ldu = matrix::gauss_ldu_with_floor(&e, pivot_floor)?;
    if let Some(k) = ldu.d.iter().position(|&d| d <= 0.0) {
        return Err(Error::FactorizationBlowUp { pivot: k + 1, magnitude: ldu.d[k].abs() });
    }
    let n_inv = ldu.l.inverse();
    let mt = n_inv.matrix().matmul(&a).matmul(ldu.l.matrix());
    let lax = LaxMatrix::from_matrix(&mt, 1e-6)?;
    let r_part = ldu.r();
    Ok((lax, FactorizationState { n_part: ldu.l, r_part, m0: m0.clone() }))
}

/// Lax-matrix trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct LaxPath {
    pub times: Vec<f64>,
    pub states: Vec<LaxMatrix>,
}

/// Toda trajectory by factorization at every step of `cfg`; stops with
/// [`Error::BlowUp`] at the first time a leading minor of `e^{tM₀}` vanishes
/// or changes sign.
pub fn toda_trajectory_factorized(m0: &LaxMatrix, cfg: &FlowConfig) -> Result<LaxPath> {
    cfg.validate()?;
    let (steps, h) = cfg.steps();
    let mut times = vec![0.0];
    let mut states = vec![m0.clone()];
    for s in 1..=steps {
        let t = s as f64 * h;
        match toda_flow_factorized_with_floor(m0, t, cfg.pivot_floor) {
            Ok((m, _)) => {
                times.push(t);
                states.push(m);
            }
            Err(Error::FactorizationBlowUp { pivot, .. }) => {
                return Err(Error::BlowUp {
                    time: t,
                    detail: format!("leading minor {pivot} of e^(tM0) vanished"),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(LaxPath { times, states })
}

/// RK4 integration of the Toda equations.
pub fn toda_trajectory_rk4(m0: &LaxMatrix, cfg: &FlowConfig) -> Result<LaxPath> {
    cfg.validate()?;
    let (steps, h) = cfg.steps();
    let add = |m: &LaxMatrix, d: &LaxTangent, s: f64| LaxMatrix {
        p: m.p.iter().zip(&d.p).map(|(a, b)| a + s * b).collect(),
        q: m.q.iter().zip(&d.q).map(|(a, b)| a + s * b).collect(),
    };
    let mut m = m0.clone();
    let mut times = vec![0.0];
    let mut states = vec![m.clone()];
    for s in 1..=steps {
        let k1 = toda_lax_rhs(&m);
        let k2 = toda_lax_rhs(&add(&m, &k1, h / 2.0));
        let k3 = toda_lax_rhs(&add(&m, &k2, h / 2.0));
        let k4 = toda_lax_rhs(&add(&m, &k3, h));
        let sum = LaxTangent {
            p: (0..m.n()).map(|i| k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i]).collect(),
            q: (0..m.n() - 1).map(|i| k1.q[i] + 2.0 * k2.q[i] + 2.0 * k3.q[i] + k4.q[i]).collect(),
        };
        m = add(&m, &sum, h / 6.0);
        let t = s as f64 * h;
        if m.p.iter().chain(&m.q).any(|v| !v.is_finite() || v.abs() > 1e150) {
            return Err(Error::BlowUp { time: t, detail: "Lax entries diverged".into() });
        }
        times.push(t);
        states.push(m.clone());
    }
    Ok(LaxPath { times, states })
}

/// The unique unit lower-triangular `L` with `M = L⁻¹ ε_λ L`.
///
/// Row by row, `ε_λ L = L M` reads `L_{i+1} = L_i (M − λ_i I)` with `L_1 = e_1`;
/// the last row must satisfy `L_n (M − λ_n I) = 0`, which holds exactly when
/// the spectrum of `M` is `λ`. No pivoting is involved, so repeated
/// eigenvalues need no special treatment.
pub fn kostant_l(m: &LaxMatrix, lambda: &[f64]) -> Result<LowerUnitriangular> {
    let n = m.n();
    check_lambda(n, lambda)?;
    let mm = m.to_matrix();
    let mut l = SquareMatrix::zeros(n);
    l[(0, 0)] = 1.0;
    for i in 0..n - 1 {
        for j in 0..n {
            let mut s = -lambda[i] * l[(i, j)];
            for k in 0..n {
                s += l[(i, k)] * mm[(k, j)];
            }
            l[(i + 1, j)] = s;
        }
    }
    let residual = l.matmul(&mm).sub(&matrix::epsilon(lambda).matmul(&l)).max_abs();
    let scale = 1.0 + l.max_abs() * mm.max_abs();
    if !(residual <= 1e-6 * scale) {
        return Err(Error::Spectrum(residual));
    }
    // Clean the exact zeros above the diagonal left by round-off.
    for i in 0..n {
        l[(i, i)] = 1.0;
        for j in i + 1..n {
            l[(i, j)] = 0.0;
        }
    }
    Ok(LowerUnitriangular::try_new(l).expect("unit lower-triangular by construction"))
}

/// Along a triangle trajectory on `T_λ`, compares central finite differences
/// of `L = h(X)` and `R` (from `b·w̄₀ = L·R`) with `L·Q` and `P·R`, where
/// `M = g_λ(X)`, `Q = Π₋(M)` and `P = M − Q`.
pub fn lr_evolution_check(path: &TrianglePath, lambda: &[f64], tolerance: f64) -> Result<Vec<CheckReport>> {
    if path.len() < 3 {
        return Err(Error::Invalid("need at least three trajectory points".into()));
    }
    let n = path.states[0].n();
    let w0 = matrix::w0_bar(n);
    let mut l_res: f64 = 0.0;
    let mut r_res: f64 = 0.0;
    let ls: Vec<SquareMatrix> = path.states.iter().map(|x| triangle::h_map(x).into_inner()).collect();
    let rs: Vec<SquareMatrix> = path
        .states
        .iter()
        .map(|x| Ok(matrix::gauss_ldu(&triangle::f_inv(x)?.into_inner().matmul(&w0))?.r()))
        .collect::<Result<_>>()?;
    for k in 1..path.len() - 1 {
        let dt = path.times[k + 1] - path.times[k - 1];
        let x = &path.states[k];
        let mm = triangle::g_lambda(x, lambda)?.to_matrix();
        let q = mm.strictly_lower();
        let p = mm.sub(&q);
        let l_dot = ls[k + 1].sub(&ls[k - 1]).scale(1.0 / dt);
        let r_dot = rs[k + 1].sub(&rs[k - 1]).scale(1.0 / dt);
        let l_scale = ls[k].max_abs().max(1.0) * mm.max_abs().max(1.0);
        let r_scale = rs[k].max_abs().max(1.0) * mm.max_abs().max(1.0);
        l_res = l_res.max(l_dot.max_abs_diff(&ls[k].matmul(&q)) / l_scale);
        r_res = r_res.max(r_dot.max_abs_diff(&p.matmul(&rs[k])) / r_scale);
    }
    Ok(vec![
        CheckReport::new("lower_factor_evolution", l_res, tolerance),
        CheckReport::new("upper_factor_evolution", r_res, tolerance),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fields_at_zero_triangle() {
        let x = Triangle::zeros(2);
        assert_eq!(vf_dyn_rsk(&x, &[0.0, 0.0]).as_slice(), &[0.0, 1.0, -1.0]);
        assert_eq!(vf_dyn(&x, &[0.0, 0.0]).as_slice(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn fields_differ_off_critical_set() {
        let x = Triangle::from_rows(&[vec![1.0], vec![0.0, 0.0]]).unwrap();
        let a = vf_dyn_rsk(&x, &[0.0, 0.0]);
        let b = vf_dyn(&x, &[0.0, 0.0]);
        assert!((a.get(2, 1) - (-1f64).exp()).abs() < 1e-15);
        assert!((b.get(2, 1) - 1f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn rsk_field_along_example_path() {
        for t in [0.0f64, 0.5, 1.0] {
            let s = (1.0 + t).ln();
            let x = Triangle::from_rows(&[vec![0.0], vec![s, -s]]).unwrap();
            let v = vf_dyn_rsk(&x, &[0.0, 0.0]);
            assert!((v.get(2, 1) - 1.0 / (1.0 + t)).abs() < 1e-15);
        }
    }

    #[test]
    fn rk4_zero_start() {
        let cfg = FlowConfig::new(1e-3, 1.0).unwrap();
        let path = integrate_triangle(&Triangle::zeros(2), &[0.0, 0.0], &cfg, Field::Rsk).unwrap();
        let x = path.last();
        assert!((x.get(2, 1) - 2f64.ln()).abs() < 1e-8);
        assert!((x.get(2, 2) + 2f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let x0 = Triangle::from_rows(&[vec![0.3], vec![0.5, -0.2], vec![1.0, 0.1, -0.7]]).unwrap();
        let lambda = [0.4, -0.1, 0.2];
        let run = |dt: f64| {
            integrate_triangle(&x0, &lambda, &FlowConfig::new(dt, 1.0).unwrap(), Field::Rsk)
                .unwrap()
                .last()
                .clone()
        };
        let (a, b, c) = (run(0.1), run(0.05), run(0.025));
        let ratio = a.max_abs_diff(&b) / b.max_abs_diff(&c);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
        let defect = richardson_defect(&x0, &lambda, &FlowConfig::new(1e-2, 1.0).unwrap(), Field::Rsk).unwrap();
        assert!(defect < 10.0 * 1e-8, "{defect}");
    }

    #[test]
    fn r_flow_semigroup_and_example() {
        let b0 = triangle::f_inv(&Triangle::zeros(2)).unwrap().into_inner();
        let b = r_flow(&b0, &[0.0, 0.0], 0.7).unwrap();
        let want = SquareMatrix::from_rows(&[vec![1.0, 1.7], vec![0.0, 1.0]]).unwrap();
        assert!(b.max_abs_diff(&want) < 1e-14);
        assert_eq!(r_flow(&b0, &[0.0, 0.0], 0.0).unwrap(), b0);
        let lam = [0.5, -0.2, 0.1];
        let x = Triangle::from_rows(&[vec![0.1], vec![0.2, -0.3], vec![0.0, 0.4, -0.5]]).unwrap();
        let b = triangle::f_inv(&x).unwrap().into_inner();
        let two = r_flow(&r_flow(&b, &lam, 0.4).unwrap(), &lam, 0.9).unwrap();
        let one = r_flow(&b, &lam, 1.3).unwrap();
        assert!(two.max_abs_diff(&one) < 1e-10 * one.max_abs());
    }

    #[test]
    fn s_flow_matches_rk4() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=4 {
            let x0 = Triangle::from_flat(n, (0..n * (n + 1) / 2).map(|_| rng.random_range(-1.0..1.0)).collect())
                .unwrap();
            let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let path = integrate_triangle(&x0, &lambda, &FlowConfig::new(1e-3, 1.5).unwrap(), Field::Rsk).unwrap();
            let exact = s_flow(&x0, &lambda, 1.5).unwrap();
            assert!(path.last().max_abs_diff(&exact) < 1e-7);
        }
    }

    #[test]
    fn lax_rhs_small_case_and_commutator() {
        let m = LaxMatrix::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let d = toda_lax_rhs(&m);
        assert_eq!(d.p, vec![-1.0, 1.0]);
        assert_eq!(d.q, vec![0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=6 {
            let m = LaxMatrix::new(
                (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                (0..n - 1).map(|_| rng.random_range(0.1..2.0)).collect(),
            )
            .unwrap();
            let c = lax_commutator(&m);
            let d = toda_lax_rhs(&m);
            for i in 0..n {
                assert!((c[(i, i)] - d.p[i]).abs() < 1e-12);
                for j in 0..n {
                    if i == j + 1 {
                        assert!((c[(i, j)] + d.q[j]).abs() < 1e-12);
                    } else if i != j {
                        assert!(c[(i, j)].abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_variant_differs_only_in_the_interior() {
        let m = LaxMatrix::new(vec![0.1, 0.2], vec![0.7]).unwrap();
        assert_eq!(toda_rhs_shifted_variant(&m), toda_lax_rhs(&m));
        let m = LaxMatrix::new(vec![0.1, 0.2, 0.3], vec![0.7, 0.4]).unwrap();
        let d = toda_rhs_shifted_variant(&m).max_abs_diff(&toda_lax_rhs(&m));
        assert!(d > 0.1);
    }

    #[test]
    fn factorization_matches_rk4() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..=5 {
            let m0 = LaxMatrix::new(
                (0..n).map(|_| rng.random_range(-0.5..0.5)).collect(),
                (0..n - 1).map(|_| rng.random_range(0.05..0.3)).collect(),
            )
            .unwrap();
            let cfg = FlowConfig::new(1e-3, 1.0).unwrap();
            let Ok(fact) = toda_trajectory_factorized(&m0, &cfg) else { continue };
            let rk = toda_trajectory_rk4(&m0, &cfg).unwrap();
            for (a, b) in fact.states.iter().zip(&rk.states) {
                assert!(a.max_abs_diff(b) < 1e-6);
            }
            let (m_zero, st) = toda_flow_factorized(&m0, 0.0).unwrap();
            assert!(m_zero.max_abs_diff(&m0) < 1e-14);
            assert!(st.n_part.matrix().max_abs_diff(&SquareMatrix::identity(n)) < 1e-14);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        // (e^{tM})₁₁ = cosh(t/2) − 2 sinh(t/2) vanishes at t = 2 artanh(1/2).
        let m0 = LaxMatrix::new(vec![-1.0, 1.0], vec![0.75]).unwrap();
        let cfg = FlowConfig::new(1e-3, 2.0).unwrap();
        match toda_trajectory_factorized(&m0, &cfg) {
            Err(Error::BlowUp { time, .. }) => {
                let want = 2.0 * 0.5f64.atanh();
                assert!((time - want).abs() < 2e-3, "{time} vs {want}");
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn kostant_small_and_repeated() {
        let m = LaxMatrix::new(vec![2.5], vec![]).unwrap();
        assert_eq!(kostant_l(&m, &[2.5]).unwrap().matrix(), &SquareMatrix::identity(1));
        // Repeated eigenvalue: nilpotent Jordan-type matrix with λ = 0.
        let m = LaxMatrix::new(vec![1.0, -1.0], vec![1.0]).unwrap();
        let l = kostant_l(&m, &[0.0, 0.0]).unwrap();
        let back = l.inverse().matrix().matmul(&matrix::epsilon(&[0.0, 0.0])).matmul(l.matrix());
        assert!(back.max_abs_diff(&m.to_matrix()) < 1e-14);
        assert!(matches!(kostant_l(&m, &[1.0, -1.0]), Err(Error::Spectrum(_))));
    }
}
