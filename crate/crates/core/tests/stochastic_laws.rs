use grsk_toda::critical::{critical_point, f_lambda};
use grsk_toda::exec::Execution;
use grsk_toda::stochastic::{self, replica_rng, Dynamics, SdeConfig};
use grsk_toda::triangle::Triangle;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn config(lambda: Vec<f64>, replicas: usize, seed: u64) -> SdeConfig {
    SdeConfig { eps: 1.0, lambda, dt: 1e-3, t_end: 1.0, replicas, seed }
}

#[test]
fn brownian_increment_moments() {
    let cfg = SdeConfig { eps: 0.5, lambda: vec![0.8], dt: 1e-3, t_end: 100.0, replicas: 1, seed: 0 };
    let path = stochastic::sample_brownian(&cfg, &mut replica_rng(9, 0, 0)).unwrap();
    assert_eq!(path.values()[0], vec![0.0]);
    let inc: Vec<f64> = path.values().windows(2).map(|w| w[1][0] - w[0][0]).collect();
    assert_eq!(inc.len(), 100_000);
    let m = inc.len() as f64;
    let mean = inc.iter().sum::<f64>() / m;
    let var = inc.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    assert!((mean - 0.8e-3).abs() < 4.0 * (0.5e-3 / m).sqrt());
    assert!((var - 0.5e-3).abs() < 4.0 * 0.5e-3 * (2.0 / m).sqrt());
}

#[test]
fn single_row_dynamics_coincide() {
    let x0 = Triangle::from_rows(&[vec![0.4]]).unwrap();
    let lambda = [0.3];
    for seed in 0..5 {
        let a = stochastic::simulate_triangle(&x0, &lambda, 1.0, 1e-2, 100, Dynamics::Rsk, &mut replica_rng(seed, 0, 0)).unwrap();
        let b = stochastic::simulate_triangle(&x0, &lambda, 1.0, 1e-2, 100, Dynamics::Warren, &mut replica_rng(seed, 0, 0)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
    // n = 1 accumulates exactly B + λt.
    let mut rng = replica_rng(1, 0, 0);
    let mut x = x0.clone();
    let mut b = 0.0;
    for _ in 0..1000 {
        let dw: f64 = 0.03 * rng.sample::<f64, _>(StandardNormal);
        b += dw;
        x = stochastic::em_step_rsk(&x, &lambda, 1.0, 1e-3, &[dw]).unwrap();
    }
    assert!((x.get(1, 1) - (0.4 + b + 0.3)).abs() < 1e-12);
}

#[test]
fn two_row_kernel_histogram() {
    let x = [0.3, -0.4];
    let lambda = [0.5, 0.1];
    let count = 20_000;
    let samples = stochastic::sample_sigma_lambda(&x, &lambda, 1.0, count, &mut replica_rng(3, 0, 0)).unwrap();
    let ys: Vec<f64> = samples.iter().map(|t| t.get(1, 1)).collect();
    let centre = critical_point(&x, &lambda).unwrap().get(1, 1);
    let density = |y: f64| (-f_lambda(&Triangle::from_interior(&x, &[y]), &lambda).unwrap()).exp();
    // Bin masses by Simpson's rule on the unnormalized density.
    let edges: Vec<f64> = (0..=30).map(|k| centre - 4.0 + 8.0 * k as f64 / 30.0).collect();
    let simpson = |a: f64, b: f64| {
        let m = 64;
        let h = (b - a) / m as f64;
        (0..=m)
            .map(|j| {
                let w = if j == 0 || j == m { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                w * density(a + j as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    let mut mass: Vec<f64> = edges.windows(2).map(|w| simpson(w[0], w[1])).collect();
    mass.insert(0, simpson(centre - 60.0, edges[0]));
    mass.push(simpson(edges[30], centre + 60.0));
    let total: f64 = mass.iter().sum();
    let mut observed = vec![0usize; mass.len()];
    for y in &ys {
        let k = edges.partition_point(|e| e <= y);
        observed[k] += 1;
    }
    let (mut chi2, mut dof) = (0.0, 0);
    for (o, m) in observed.iter().zip(&mass) {
        let expected = count as f64 * m / total;
        if expected >= 5.0 {
            chi2 += (*o as f64 - expected).powi(2) / expected;
            dof += 1;
        }
    }
    let p = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 = {chi2}, dof = {dof}, p = {p}");
}

#[test]
fn symmetric_kernel_is_centred() {
    let count = 10_000;
    let s = stochastic::sample_sigma_lambda(&[0.0, 0.0], &[0.0, 0.0], 1.0, count, &mut replica_rng(4, 0, 0)).unwrap();
    let ys: Vec<f64> = s.iter().map(|t| t.get(1, 1)).collect();
    let mean = ys.iter().sum::<f64>() / count as f64;
    let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / count as f64).sqrt();
    assert!(mean.abs() < 4.0 * sd / (count as f64).sqrt());
}

#[test]
fn reports_are_reproducible() {
    let cfg = config(vec![0.2, -0.2], 1000, 99);
    let a = stochastic::marginal_comparison(&cfg, &[0.0, 0.0], Execution::Parallel).unwrap();
    let b = stochastic::marginal_comparison(&cfg, &[0.0, 0.0], Execution::Sequential).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn rsk_equation_reproduces_the_transform_law() {
    let cfg = config(vec![0.5, -0.5], 10_000, 2024);
    let rep = stochastic::pi_vs_sde_comparison(&cfg, 0.1, Execution::Parallel).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn generator_law_without_drift() {
    let cfg = config(vec![0.0, 0.0], 10_000, 77);
    let rep = stochastic::generator_test(&cfg, 0.1, 1.0, Execution::Parallel).unwrap();
    assert!(rep.pass, "{rep:?}");
}
