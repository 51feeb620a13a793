//! Property suites behind `grsk-toda verify`. Every check draws its random
//! instances from a fixed seed, so reports are reproducible.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::critical::{self, critical_point};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flows::{self, Field, FlowConfig};
use crate::grsk::{self, OperatorPath, SampledPath};
use crate::matrix;
use crate::report::{max_residual, CheckReport};
use crate::stochastic::{self, SdeConfig};
use crate::tau;
use crate::triangle::{self, LaxMatrix, Triangle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Factorization,
    Grsk,
    Flows,
    Critical,
    Tau,
    Stochastic,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["factorization", "grsk", "flows", "critical", "tau", "stochastic", "all"];

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Factorization,
                Suite::Grsk,
                Suite::Flows,
                Suite::Critical,
                Suite::Tau,
                Suite::Stochastic,
            ],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "factorization" => Suite::Factorization,
            "grsk" => Suite::Grsk,
            "flows" => Suite::Flows,
            "critical" => Suite::Critical,
            "tau" => Suite::Tau,
            "stochastic" => Suite::Stochastic,
            "all" => Suite::All,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown suite '{other}' (expected one of {})",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx = [
            Suite::Factorization,
            Suite::Grsk,
            Suite::Flows,
            Suite::Critical,
            Suite::Tau,
            Suite::Stochastic,
            Suite::All,
        ]
        .iter()
        .position(|s| s == self)
        .unwrap();
        f.write_str(Suite::NAMES[idx])
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Reduced instance and replica counts.
    pub quick: bool,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { quick: false, seed: 20_240_601, exec: Execution::Parallel }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub quick: bool,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> SuiteReport {
    let mut checks = vec![];
    for part in suite.parts() {
        let items: Vec<(&str, CheckFn)> = match part {
            Suite::Factorization => factorization_checks(),
            Suite::Grsk => grsk_checks(),
            Suite::Flows => flows_checks(),
            Suite::Critical => critical_checks(),
            Suite::Tau => tau_checks(),
            Suite::Stochastic => stochastic_checks(),
            Suite::All => unreachable!(),
        };
        for (name, check) in items {
            let name = format!("{part}/{name}");
            checks.push(match check(opts) {
                Ok(r) => CheckReport { check: name, ..r },
                Err(e) => CheckReport::failed(format!("{name}: {e}")),
            });
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    SuiteReport { suite, quick: opts.quick, seed: opts.seed, checks, pass }
}

type CheckFn = fn(&VerifyOptions) -> Result<CheckReport>;

fn rng(opts: &VerifyOptions, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed ^ tag.wrapping_mul(0xA24B_AED4_963E_E407))
}

fn random_vec(n: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn random_triangle(n: usize, scale: f64, rng: &mut impl Rng) -> Triangle {
    Triangle::from_flat(n, random_vec(n * (n + 1) / 2, scale, rng)).unwrap()
}

fn instances(opts: &VerifyOptions, full: usize) -> usize {
    if opts.quick {
        full.div_ceil(4)
    } else {
        full
    }
}

fn smooth_path(n: usize, steps: usize, rng: &mut impl Rng) -> Result<SampledPath> {
    let coef: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0), rng.random_range(-0.5..0.5)))
        .collect();
    SampledPath::from_fn(grsk::uniform_grid(1.0, steps)?, |t| {
        coef.iter().map(|(a, w, d)| a * (w * t).sin() + d * t).collect()
    })
}

fn critical_instance(n: usize, rng: &mut impl Rng) -> Result<(Triangle, Vec<f64>)> {
    let x = random_vec(n, 1.0, rng);
    let lambda = random_vec(n, 1.0, rng);
    Ok((critical_point(&x, &lambda)?, lambda))
}

fn factorization_checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("triangle_round_trip", |o| {
            let mut r = rng(o, 1);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 40) {
                let n = r.random_range(1..=5);
                let x = random_triangle(n, 2.0, &mut r);
                let b = triangle::f_inv(&x)?;
                worst = worst.max(triangle::f_map(b.matrix())?.max_abs_diff(&x));
            }
            Ok(CheckReport::new("", worst, 1e-9))
        }),
        ("gauss_ldu_recomposition", |o| {
            let mut r = rng(o, 2);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 40) {
                let n = r.random_range(2..=5);
                let b = triangle::f_inv(&random_triangle(n, 1.0, &mut r))?.into_inner();
                let a = b.matmul(&matrix::w0_bar(n));
                let ldu = matrix::gauss_ldu(&a)?;
                worst = worst.max(ldu.recompose().max_abs_diff(&a) / a.max_abs());
            }
            Ok(CheckReport::new("", worst, 1e-12))
        }),
        ("lax_spectrum_on_critical_set", |o| {
            let mut r = rng(o, 3);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 20) {
                let n = r.random_range(2..=4);
                let (xs, lambda) = critical_instance(n, &mut r)?;
                let m = triangle::g_lambda(&xs, &lambda)?;
                let eig = matrix::real_eigenvalues_sorted(&m.to_matrix(), 1e-6)?;
                let mut want = lambda.clone();
                want.sort_by(f64::total_cmp);
                worst = worst.max(max_residual(eig.iter().zip(&want).map(|(a, b)| (a - b).abs())));
            }
            Ok(CheckReport::new("", worst, 1e-8))
        }),
        ("kostant_form_matches_h", |o| {
            let mut r = rng(o, 4);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 20) {
                let n = r.random_range(2..=4);
                let (xs, lambda) = critical_instance(n, &mut r)?;
                let l = flows::kostant_l(&triangle::g_lambda(&xs, &lambda)?, &lambda)?;
                worst = worst.max(l.matrix().max_abs_diff(triangle::h_map(&xs).matrix()));
            }
            Ok(CheckReport::new("", worst, 1e-8))
        }),
    ]
}

fn grsk_checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("zero_path_from_zero_triangle", |_| {
            let eta = SampledPath::linear(&[0.0, 0.0], 2.0, 2000)?;
            let x = grsk::pi_xi(&eta, &Triangle::zeros(2))?;
            let worst = max_residual(x.times.iter().zip(&x.states).map(|(t, s)| {
                let want = (1.0 + t).ln();
                (s.get(2, 1) - want).abs().max((s.get(2, 2) + want).abs())
            }));
            Ok(CheckReport::new("", worst, 1e-8))
        }),
        ("pi_matches_b_path_minors", |o| {
            let mut r = rng(o, 10);
            let mut worst: f64 = 0.0;
            for n in 2..=4 {
                let eta = smooth_path(n, 500, &mut r)?;
                let x = grsk::pi_n(&eta)?;
                for t in [0.25, 0.5, 1.0] {
                    let (tt, st) = x.nearest(t);
                    let want = triangle::f_map(grsk::b_path(&eta, tt)?.matrix())?;
                    worst = worst.max(st.max_abs_diff(&want));
                }
            }
            Ok(CheckReport::new("", worst, 1e-7))
        }),
        ("braid_relation", |o| {
            let mut r = rng(o, 11);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 10) {
                let eta = smooth_path(3, 400, &mut r)?;
                let word = |order: [usize; 3]| -> Result<SampledPath> {
                    let mut op = OperatorPath::new(&eta);
                    for i in order {
                        op.apply_p(i)?;
                    }
                    Ok(op.sample())
                };
                worst = worst.max(word([1, 2, 1])?.max_abs_diff_from(&word([2, 1, 2])?, 1));
            }
            Ok(CheckReport::new("", worst, 1e-8))
        }),
        ("non_intersecting_paths_minor", |o| {
            let eta = SampledPath::from_fn(grsk::uniform_grid(1.0, 200)?, |t| {
                vec![0.3 * t, 0.1 * (2.0 * t).sin(), -0.2 * t * t]
            })?;
            let samples = if o.quick { 20_000 } else { 100_000 };
            let est = grsk::kmg_minor_oracle(&eta, 1.0, 3, 2, samples, o.seed, o.exec)?;
            let want = matrix::minor(grsk::b_path(&eta, 1.0)?.matrix(), 3, 2)?;
            Ok(CheckReport::new("", (est.estimate - want).abs() / est.std_error, 3.0))
        }),
    ]
}

fn flows_checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("lax_rhs_is_commutator", |o| {
            let mut r = rng(o, 20);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 20) {
                let n = r.random_range(2..=5);
                let p = random_vec(n, 1.0, &mut r);
                let q = (0..n - 1).map(|_| r.random_range(0.1..2.0)).collect();
                let m = LaxMatrix::new(p, q)?;
                let rhs = flows::toda_lax_rhs(&m);
                let c = flows::lax_commutator(&m);
                let d = (0..n).map(|i| (rhs.p[i] - c[(i, i)]).abs());
                let e = (0..n - 1).map(|i| (rhs.q[i] + c[(i + 1, i)]).abs());
                worst = worst.max(max_residual(d.chain(e)));
            }
            Ok(CheckReport::new("", worst, 1e-12))
        }),
        ("printed_rhs_variant_discrepancy", |_| {
            // Informational: how far the index-shifted right-hand side is
            // from the commutator on a generic matrix.
            let m = LaxMatrix::new(vec![0.3, -0.2, 0.5, 0.1], vec![0.7, 1.1, 0.4])?;
            let d = flows::toda_lax_rhs(&m).max_abs_diff(&flows::toda_rhs_shifted_variant(&m));
            Ok(CheckReport::new("", d, f64::INFINITY))
        }),
        ("linear_flow_conjugates_triangle_flow", |o| {
            let mut r = rng(o, 21);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 12) {
                let n = r.random_range(2..=4);
                let x = random_triangle(n, 0.5, &mut r);
                let lambda = random_vec(n, 1.0, &mut r);
                let t = r.random_range(0.1..2.0);
                let b = triangle::f_inv(&x)?.into_inner();
                let via = triangle::f_map(&flows::r_flow(&b, &lambda, t)?)?;
                let cfg = FlowConfig::new(1e-3, t)?;
                let rk = flows::integrate_triangle(&x, &lambda, &cfg, Field::Rsk)?;
                worst = worst.max(via.max_abs_diff(rk.last()));
            }
            Ok(CheckReport::new("", worst, 1e-7))
        }),
        ("g_intertwines_triangle_and_toda_flows", |o| {
            let mut r = rng(o, 22);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 12) {
                let n = r.random_range(2..=4);
                let (xs, lambda) = critical_instance(n, &mut r)?;
                let t = r.random_range(0.1..2.0);
                let lhs = triangle::g_lambda(&flows::s_flow(&xs, &lambda, t)?, &lambda)?;
                let (rhs, _) = flows::toda_flow_factorized(&triangle::g_lambda(&xs, &lambda)?, t)?;
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
            Ok(CheckReport::new("", worst, 1e-6))
        }),
        ("isospectral_toda", |o| {
            let mut r = rng(o, 23);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 8) {
                let n = r.random_range(2..=4);
                let (xs, lambda) = critical_instance(n, &mut r)?;
                let m0 = triangle::g_lambda(&xs, &lambda)?;
                let path = flows::toda_trajectory_rk4(&m0, &FlowConfig::new(1e-3, 2.0)?)?;
                let mut want = lambda.clone();
                want.sort_by(f64::total_cmp);
                for s in path.states.iter().step_by(100) {
                    let eig = matrix::real_eigenvalues_sorted(&s.to_matrix(), 1e-6)?;
                    worst = worst.max(max_residual(eig.iter().zip(&want).map(|(a, b)| (a - b).abs())));
                }
            }
            Ok(CheckReport::new("", worst, 1e-6))
        }),
        ("factorization_matches_rk4", |o| {
            let mut r = rng(o, 24);
            let (xs, lambda) = critical_instance(3, &mut r)?;
            let m0 = triangle::g_lambda(&xs, &lambda)?;
            let cfg = FlowConfig::new(1e-3, 1.5)?;
            let a = flows::toda_trajectory_factorized(&m0, &cfg)?;
            let b = flows::toda_trajectory_rk4(&m0, &cfg)?;
            let worst = max_residual(a.states.iter().zip(&b.states).map(|(u, v)| u.max_abs_diff(v)));
            Ok(CheckReport::new("", worst, 1e-8))
        }),
        ("fields_agree_on_critical_set", |o| {
            let mut r = rng(o, 25);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 12) {
                let n = r.random_range(2..=4);
                let (xs, lambda) = critical_instance(n, &mut r)?;
                let cfg = FlowConfig::new(1e-3, 2.0)?;
                let a = flows::integrate_triangle(&xs, &lambda, &cfg, Field::Rsk)?;
                let b = flows::integrate_triangle(&xs, &lambda, &cfg, Field::Local)?;
                for (u, v) in a.states.iter().zip(&b.states).step_by(50) {
                    worst = worst.max(u.max_abs_diff(v));
                    worst = worst.max(critical::critical_residual(u, &lambda)?.max_abs());
                }
            }
            Ok(CheckReport::new("", worst, 1e-6))
        }),
        ("lr_evolution", |o| {
            let mut r = rng(o, 26);
            let (xs, lambda) = critical_instance(3, &mut r)?;
            let path = flows::integrate_triangle(&xs, &lambda, &FlowConfig::new(1e-3, 1.0)?, Field::Rsk)?;
            let reports = flows::lr_evolution_check(&path, &lambda, 1e-5)?;
            Ok(CheckReport::new("", max_residual(reports.iter().map(|c| c.max_residual)), 1e-5))
        }),
        ("two_row_closed_form", |_| {
            // λ = (1, −1) from the critical point over the origin:
            // x²₁(t) = log(eᵗ + e^{−y} sinh t) with e^{−y} = √2 − 1.
            let lambda = [1.0, -1.0];
            let xs = critical_point(&[0.0, 0.0], &lambda)?;
            let c = 2f64.sqrt() - 1.0;
            let mut worst: f64 = 0.0;
            for k in 0..=20 {
                let t = 0.1 * k as f64;
                let s = flows::s_flow(&xs, &lambda, t)?;
                worst = worst.max((s.get(2, 1) - (t.exp() + c * t.sinh()).ln()).abs());
            }
            Ok(CheckReport::new("", worst, 1e-7))
        }),
    ]
}

fn critical_checks() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("newton_residual", |o| {
            let mut r = rng(o, 30);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 20) {
                let n = r.random_range(2..=5);
                let (xs, lambda) = critical_instance(n, &mut r)?;
                worst = worst.max(critical::critical_residual(&xs, &lambda)?.max_abs());
            }
            Ok(CheckReport::new("", worst, 1e-10))
        }),
        ("potential_equals_pairing_with_velocity", |o| {
            let mut r = rng(o, 31);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 20) {
                let n = r.random_range(2..=4);
                let (xs, lambda) = critical_instance(n, &mut r)?;
                worst = worst.max(critical::givental_identity_check(&xs, &lambda, 1e-8)?.max_residual);
            }
            Ok(CheckReport::new("", worst, 1e-8))
        }),
        ("envelope_gradient", |o| {
            let mut r = rng(o, 32);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 12) {
                let n = r.random_range(2..=4);
                let x = random_vec(n, 1.0, &mut r);
                let lambda = random_vec(n, 1.0, &mut r);
                let a = critical::grad_u(&x, &lambda)?;
                let b = critical::grad_u_finite_difference(&x, &lambda, 1e-5)?;
                worst = worst.max(max_residual(a.iter().zip(&b).map(|(u, v)| (u - v).abs())));
            }
            Ok(CheckReport::new("", worst, 1e-6))
        }),
        ("gradient_flow_tracks_triangle_flow", |o| {
            let mut r = rng(o, 33);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 4) {
                let n = r.random_range(2..=3);
                let x = random_vec(n, 1.0, &mut r);
                let lambda = random_vec(n, 1.0, &mut r);
                let xs = critical_point(&x, &lambda)?;
                let (times, states) = critical::gradient_flow(&x, &lambda, &FlowConfig::new(1e-2, 1.0)?)?;
                for (t, s) in times.iter().zip(&states).step_by(10) {
                    let want = flows::s_flow(&xs, &lambda, *t)?;
                    worst = worst.max(max_residual(s.iter().zip(want.bottom()).map(|(a, b)| (a - b).abs())));
                }
            }
            Ok(CheckReport::new("", worst, 1e-5))
        }),
        ("bender_knuth_involutions", |o| {
            let mut r = rng(o, 34);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 10) {
                let x = random_triangle(4, 1.0, &mut r);
                for m in 1..4 {
                    for i in 1..=m {
                        let twice = critical::bender_knuth(&critical::bender_knuth(&x, m, i)?, m, i)?;
                        worst = worst.max(twice.max_abs_diff(&x));
                    }
                }
                let fixed = critical_point(x.bottom(), &[0.0; 4])?;
                worst = worst.max(critical::bender_knuth(&fixed, 2, 1)?.max_abs_diff(&fixed));
            }
            Ok(CheckReport::new("", worst, 1e-9))
        }),
    ]
}

fn tau_checks() -> Vec<(&'static str, CheckFn)> {
    fn spread_lambda(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut v = vec![rng.random_range(-1.5..-0.5)];
        for _ in 1..n {
            let last = *v.last().unwrap();
            v.push(last + rng.random_range(0.3..1.0));
        }
        v
    }
    vec![
        ("explicit_entries_match_exponential", |o| {
            let mut r = rng(o, 40);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 20) {
                let n = r.random_range(2..=5);
                let lambda = spread_lambda(n, &mut r);
                let t = r.random_range(0.0..2.0);
                let a = tau::b_explicit_matrix(&lambda, t)?;
                let b = matrix::matrix_exp(&matrix::epsilon(&lambda), t)?;
                worst = worst.max(a.max_abs_diff(&b) / (1.0 + b.max_abs()));
            }
            Ok(CheckReport::new("", worst, 1e-10))
        }),
        ("minor_and_hankel_forms", |o| {
            let mut r = rng(o, 41);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 20) {
                let n = r.random_range(2..=5);
                let lambda = spread_lambda(n, &mut r);
                let t = r.random_range(0.2..2.0);
                for k in 1..=n {
                    let a = tau::tau_k(&lambda, t, k)?;
                    let b = tau::tau_hankel(&lambda, t, k)?;
                    worst = worst.max((a - b).abs() / a.abs().max(1e-300));
                }
            }
            Ok(CheckReport::new("", worst, 1e-9))
        }),
        ("zero_spectrum_closed_form", |_| {
            let mut worst: f64 = 0.0;
            for n in 1..=5 {
                for t in [0.3, 1.0, 2.5] {
                    for k in 1..=n {
                        let a = tau::tau_k(&[0.0; 5][..n], t, k)?;
                        let b = tau::tau_zero_lambda(n, t, k)?;
                        worst = worst.max((a - b).abs() / b.abs());
                    }
                }
            }
            let t: f64 = 1.7;
            worst = worst.max((tau::tau_k(&[0.0; 3], t, 1)? - t * t / 2.0).abs());
            Ok(CheckReport::new("", worst, 1e-10))
        }),
        ("log_second_derivative_identity", |o| {
            let mut r = rng(o, 42);
            let lambda = spread_lambda(4, &mut r);
            let times: Vec<f64> = (1..=10).map(|k| 0.2 * k as f64).collect();
            tau::toda_log_second_derivative_check(&lambda, &times, 1e-8)
        }),
        ("toda_equations", |o| {
            let mut r = rng(o, 43);
            let lambda = spread_lambda(4, &mut r);
            let times: Vec<f64> = (1..=10).map(|k| 0.2 * k as f64).collect();
            tau::toda_equations_check(&lambda, &times, 1e-8)
        }),
    ]
}

fn stochastic_checks() -> Vec<(&'static str, CheckFn)> {
    fn sde(o: &VerifyOptions, lambda: Vec<f64>) -> SdeConfig {
        let replicas = if o.quick { stochastic::MIN_KS_REPLICAS } else { 10_000 };
        SdeConfig { eps: 1.0, lambda, dt: 1e-3, t_end: 1.0, replicas, seed: o.seed }
    }
    fn ks_margin(report: &stochastic::StatReport) -> f64 {
        // Residual ≤ 1 iff the p-values land on the expected side.
        let worst = report.p_value.iter().copied().fold(f64::NAN, |a, b| if report.expect_same_law { b.min(a) } else { b.max(a) });
        if report.expect_same_law {
            report.threshold / worst.max(f64::MIN_POSITIVE)
        } else {
            worst / report.threshold
        }
    }
    vec![
        ("whittaker_eigenfunction", |o| {
            let mut r = rng(o, 50);
            let mut worst: f64 = 0.0;
            for _ in 0..instances(o, 5) {
                let x = random_vec(2, 1.0, &mut r);
                let lambda = random_vec(2, 1.0, &mut r);
                worst = worst.max(stochastic::eigen_residual_fd(&x, &lambda, 1.0, 1e-3)?);
            }
            Ok(CheckReport::new("", worst, 1e-3))
        }),
        ("generator_law", |o| {
            let rep = stochastic::generator_test(&sde(o, vec![0.5, -0.5]), 0.1, 1.0, o.exec)?;
            Ok(CheckReport::new("", ks_margin(&rep), 1.0))
        }),
        ("generator_power", |o| {
            let rep = stochastic::generator_test(&sde(o, vec![0.5, -0.5]), 0.1, 2.0, o.exec)?;
            Ok(CheckReport::new("", ks_margin(&rep), 1.0))
        }),
        ("rsk_and_local_marginals", |o| {
            let rep = stochastic::marginal_comparison(&sde(o, vec![0.5, -0.5]), &[0.0, 0.0], o.exec)?;
            Ok(CheckReport::new("", ks_margin(&rep), 1.0))
        }),
    ]
}
