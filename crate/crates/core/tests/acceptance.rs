//! Acceptance criteria. Runs as a plain binary under `cargo test` so that
//! the one-line verdicts are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use grsk_toda::critical::{self, critical_point};
use grsk_toda::exec::Execution;
use grsk_toda::flows::{self, Field, FlowConfig};
use grsk_toda::grsk::{self, OperatorPath, SampledPath};
use grsk_toda::matrix;
use grsk_toda::stochastic::{self, SdeConfig, StatReport};
use grsk_toda::tau;
use grsk_toda::triangle::{self, Triangle};
use grsk_toda::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

fn random_vec(n: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn smooth_path(n: usize, steps: usize, rng: &mut impl Rng) -> Result<SampledPath> {
    let coef: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0), rng.random_range(-0.5..0.5)))
        .collect();
    SampledPath::from_fn(grsk::uniform_grid(1.0, steps)?, |t| {
        coef.iter().map(|(a, w, d)| a * (w * t).sin() + d * t).collect()
    })
}

/// Zero spectrum from the zero triangle: the bottom row is
/// `(log(1+t), −log(1+t))` along the linear flow, its ODE and the path
/// transform of the zero path.
fn two_row_zero_start() -> Result<Verdict> {
    let zero = Triangle::zeros(2);
    let lambda = [0.0, 0.0];
    let times = [0.5f64, 1.0, 2.0];
    let rk = flows::integrate_triangle(&zero, &lambda, &FlowConfig::new(1e-3, 2.0)?, Field::Rsk)?;
    let eta = SampledPath::linear(&lambda, 2.0, 2000)?;
    let pi = grsk::pi_xi(&eta, &zero)?;
    let (mut e_exact, mut e_rk, mut e_pi) = (0.0f64, 0.0f64, 0.0f64);
    for t in times {
        let want = (1.0 + t).ln();
        let err = |x: &Triangle| (x.get(2, 1) - want).abs().max((x.get(2, 2) + want).abs());
        e_exact = e_exact.max(err(&flows::s_flow(&zero, &lambda, t)?));
        e_rk = e_rk.max(err(rk.nearest(t).1));
        e_pi = e_pi.max(err(pi.nearest(t).1));
    }
    Ok(verdict(
        e_exact < 1e-8 && e_rk < 1e-6 && e_pi < 1e-6,
        format!("linear flow {e_exact:.1e} (1e-8), RK4 {e_rk:.1e} (1e-6), path transform {e_pi:.1e} (1e-6)"),
    ))
}

/// λ = (1, −1) from the minimizer over the origin.
fn two_row_critical_start() -> Result<Verdict> {
    let lambda = [1.0, -1.0];
    let xs = critical_point(&[0.0, 0.0], &lambda)?;
    let c = 2f64.sqrt() - 1.0;
    let start = ((-xs.get(1, 1)).exp() - c).abs();
    let err = worst((0..=200).map(|k| {
        let t = 0.01 * k as f64;
        let x = flows::s_flow(&xs, &lambda, t).map(|s| s.get(2, 1)).unwrap_or(f64::NAN);
        (x - (t.exp() + c * t.sinh()).ln()).abs()
    }));
    Ok(verdict(err < 1e-7 && start < 1e-12, format!("max error {err:.1e} on [0, 2] (1e-7)")))
}

fn explicit_solution() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut e_b, mut e_h) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = rng.random_range(2..=5);
        let mut lambda = vec![rng.random_range(-2.0..0.0)];
        for _ in 1..n {
            let last = *lambda.last().unwrap();
            lambda.push(last + rng.random_range(0.3..1.2));
        }
        let t = rng.random_range(0.0..2.0);
        let b = tau::b_explicit_matrix(&lambda, t)?;
        let e = matrix::matrix_exp(&matrix::epsilon(&lambda), t)?;
        e_b = e_b.max(b.max_abs_diff(&e) / (1.0 + e.max_abs()));
        for k in 1..=n {
            let a = tau::tau_k(&lambda, t.max(0.05), k)?;
            let h = tau::tau_hankel(&lambda, t.max(0.05), k)?;
            e_h = e_h.max((a - h).abs() / a.abs());
        }
    }
    let mut e_zero = 0.0f64;
    for n in 1..=5 {
        for t in [0.1, 0.5, 1.0, 2.0] {
            for k in 1..=n {
                let a = tau::tau_k(&vec![0.0; n], t, k)?;
                e_zero = e_zero.max((a - tau::tau_zero_lambda(n, t, k)?).abs() / a);
            }
        }
    }
    let t: f64 = 1.5;
    e_zero = e_zero.max((tau::tau_k(&[0.0; 3], t, 1)? - t * t / 2.0).abs());
    Ok(verdict(
        e_b < 1e-10 && e_h < 1e-9 && e_zero < 1e-10,
        format!("entries {e_b:.1e} (1e-10 rel), Hankel {e_h:.1e} (1e-9 rel), zero spectrum {e_zero:.1e} (1e-10)"),
    ))
}

fn diagrams() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut e_a, mut e_b, mut e_c) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..12 {
        let n = rng.random_range(2..=4);
        let x = Triangle::from_flat(n, random_vec(n * (n + 1) / 2, 1.0, &mut rng))?;
        let lambda = random_vec(n, 1.0, &mut rng);
        let t = rng.random_range(0.1..2.0);
        let via = triangle::f_map(&flows::r_flow(&triangle::f_inv(&x)?.into_inner(), &lambda, t)?)?;
        let rk = flows::integrate_triangle(&x, &lambda, &FlowConfig::new(1e-3, t)?, Field::Rsk)?;
        e_a = e_a.max(via.max_abs_diff(rk.last()));

        let xs = critical_point(&random_vec(n, 1.0, &mut rng), &lambda)?;
        let m0 = triangle::g_lambda(&xs, &lambda)?;
        let toda = flows::toda_trajectory_rk4(&m0, &FlowConfig::new(1e-3, t)?)?;
        let lhs = triangle::g_lambda(&flows::s_flow(&xs, &lambda, t)?, &lambda)?;
        e_b = e_b.max(lhs.max_abs_diff(toda.states.last().unwrap()));
        let want = sorted(&lambda);
        for s in toda.states.iter().step_by(50) {
            let eig = matrix::real_eigenvalues_sorted(&s.to_matrix(), 1e-6)?;
            e_c = e_c.max(worst(eig.iter().zip(&want).map(|(a, b)| (a - b).abs())));
        }
    }
    Ok(verdict(
        e_a < 1e-7 && e_b < 1e-6 && e_c < 1e-6,
        format!("triangle flow {e_a:.1e} (1e-7), Toda image {e_b:.1e} (1e-6), spectrum drift {e_c:.1e} (1e-6)"),
    ))
}

fn critical_set_invariance() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut e_start, mut e_res, mut e_gap) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..20 {
        let n = 2 + k % 3;
        let lambda = random_vec(n, 1.0, &mut rng);
        let xs = critical_point(&random_vec(n, 1.5, &mut rng), &lambda)?;
        e_start = e_start.max(critical::critical_residual(&xs, &lambda)?.max_abs());
        let cfg = FlowConfig::new(1e-3, 2.0)?;
        let a = flows::integrate_triangle(&xs, &lambda, &cfg, Field::Rsk)?;
        let b = flows::integrate_triangle(&xs, &lambda, &cfg, Field::Local)?;
        for (u, v) in a.states.iter().zip(&b.states).step_by(20) {
            e_res = e_res.max(critical::critical_residual(u, &lambda)?.max_abs());
            e_gap = e_gap.max(u.max_abs_diff(v));
        }
    }
    Ok(verdict(
        e_start < 1e-10 && e_res < 1e-6 && e_gap < 1e-6,
        format!("start {e_start:.1e} (1e-10), residual {e_res:.1e} (1e-6), field gap {e_gap:.1e} (1e-6)"),
    ))
}

fn potential_and_gradient_flow() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut e_id, mut e_flow, mut e_grad) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..6 {
        let n = 2 + k % 2;
        let x = random_vec(n, 1.0, &mut rng);
        let lambda = random_vec(n, 1.0, &mut rng);
        let xs = critical_point(&x, &lambda)?;
        for j in 0..=10 {
            let s = flows::s_flow(&xs, &lambda, 0.2 * j as f64)?;
            e_id = e_id.max(critical::givental_identity_check(&s, &lambda, 1e-8)?.max_residual);
        }
        let (times, states) = critical::gradient_flow(&x, &lambda, &FlowConfig::new(1e-2, 1.0)?)?;
        for (t, s) in times.iter().zip(&states) {
            let want = flows::s_flow(&xs, &lambda, *t)?;
            e_flow = e_flow.max(worst(s.iter().zip(want.bottom()).map(|(a, b)| (a - b).abs())));
        }
        let g = critical::grad_u(&x, &lambda)?;
        let fd = critical::grad_u_finite_difference(&x, &lambda, 1e-5)?;
        e_grad = e_grad.max(worst(g.iter().zip(&fd).map(|(a, b)| (a - b).abs())));
    }
    Ok(verdict(
        e_id < 1e-8 && e_flow < 1e-5 && e_grad < 1e-6,
        format!("potential identity {e_id:.1e} (1e-8), gradient flow {e_flow:.1e} (1e-5), envelope gradient {e_grad:.1e} (1e-6)"),
    ))
}

fn non_intersecting_paths() -> Result<Verdict> {
    let eta = SampledPath::from_fn(grsk::uniform_grid(1.0, 400)?, |t| {
        vec![0.4 * t + 0.1 * (3.0 * t).sin(), -0.2 * t, 0.3 * (t * t - t)]
    })?;
    let est = grsk::kmg_minor_oracle(&eta, 1.0, 3, 2, 100_000, 17, Execution::Parallel)?;
    let want = matrix::minor(grsk::b_path(&eta, 1.0)?.matrix(), 3, 2)?;
    let z = (est.estimate - want).abs() / est.std_error;
    Ok(verdict(
        z < 3.0,
        format!("estimate {:.5} ± {:.5} vs minor {want:.5}: {z:.2} standard errors (3)", est.estimate, est.std_error),
    ))
}

fn braid_relations() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut err = 0.0f64;
    for _ in 0..10 {
        let eta = smooth_path(3, 400, &mut rng)?;
        let word = |order: [usize; 3]| -> Result<SampledPath> {
            let mut op = OperatorPath::new(&eta);
            for i in order {
                op.apply_p(i)?;
            }
            Ok(op.sample())
        };
        err = err.max(word([1, 2, 1])?.max_abs_diff_from(&word([2, 1, 2])?, 1));
    }
    Ok(verdict(err < 1e-8, format!("max difference {err:.1e} (1e-8)")))
}

fn statistical_laws() -> Result<Verdict> {
    let cfg = |lambda: Vec<f64>| SdeConfig { eps: 1.0, lambda, dt: 1e-3, t_end: 1.0, replicas: 10_000, seed: 20_240_601 };
    let show = |r: &StatReport| {
        let p: Vec<String> = r.p_value.iter().map(|p| format!("{p:.3}")).collect();
        format!("{} λ={:?} p=[{}]", r.test, r.lambda, p.join(", "))
    };
    let exec = Execution::Parallel;
    let reports = [
        stochastic::generator_test(&cfg(vec![0.0, 0.0]), 0.1, 1.0, exec)?,
        stochastic::generator_test(&cfg(vec![0.5, -0.5]), 0.1, 1.0, exec)?,
        stochastic::marginal_comparison(&cfg(vec![0.5, -0.5]), &[0.0, 0.0], exec)?,
        stochastic::generator_test(&cfg(vec![0.5, -0.5]), 0.1, 2.0, exec)?,
    ];
    let pass = reports.iter().all(|r| r.pass);
    Ok(verdict(pass, reports.iter().map(show).collect::<Vec<_>>().join("; ")))
}

fn whittaker_eigenfunction() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut err = 0.0f64;
    for _ in 0..5 {
        let x = random_vec(2, 1.5, &mut rng);
        let lambda = random_vec(2, 1.0, &mut rng);
        err = err.max(stochastic::eigen_residual_fd(&x, &lambda, 1.0, 1e-3)?);
    }
    Ok(verdict(err < 1e-3, format!("max |Hψ/ψ + Σλ²| {err:.1e} (1e-3)")))
}

type Criterion = (&'static str, Duration, fn() -> Result<Verdict>);

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 10] = [
        ("two-row flow from the zero triangle", secs(1), two_row_zero_start),
        ("two-row flow from a minimizer", secs(1), two_row_critical_start),
        ("explicit solution and tau functions", secs(5), explicit_solution),
        ("commuting flows and isospectrality", secs(10), diagrams),
        ("critical set is invariant", secs(30), critical_set_invariance),
        ("potential identity and gradient flow", secs(60), potential_and_gradient_flow),
        ("minor as non-intersecting paths", secs(60), non_intersecting_paths),
        ("braid relation", secs(5), braid_relations),
        ("laws of the stochastic dynamics", secs(300), statistical_laws),
        ("Whittaker eigenfunction", secs(30), whittaker_eigenfunction),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && elapsed <= *budget, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}  {name}: {detail} [{:.2}s of {}s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
