//! Distributional properties of simulated cycles.

mod common;

use common::{mean_and_stderr, reference_insurance, reference_model};
use rand::Rng;
use rand_distr::StandardNormal;
use ruinsim_core::cycle::{discounted_integral_grid, Insurance, PathGridConfig, SampledPath};
use ruinsim_core::engine::{sample_cycles, SimulationPlan};
use ruinsim_core::inputs::{ClaimLaw, InterarrivalLaw, JumpLaw};
use ruinsim_core::model::{derive_log_price_model, find_beta, JumpMeasure, RootTolerance};
use ruinsim_core::rng::{domain, stream};
use ruinsim_core::stats::ks_two_sample;

#[test]
fn disjoint_batches_share_a_law() {
    let model = reference_model();
    let ins = reference_insurance();
    let plan = SimulationPlan::new(21);
    let a = sample_cycles(&model, &ins, &plan, 0, 100_000).unwrap();
    let b = sample_cycles(&model, &ins, &plan, 100_000, 200_000).unwrap();
    let m = |s: &[ruinsim_core::cycle::CycleSample]| s.iter().map(|c| c.m).collect::<Vec<_>>();
    let q = |s: &[ruinsim_core::cycle::CycleSample]| s.iter().map(|c| c.q).collect::<Vec<_>>();
    assert!(ks_two_sample(&m(&a), &m(&b)).passes(0.01));
    assert!(ks_two_sample(&q(&a), &q(&b)).passes(0.01));
}

#[test]
fn log_m_is_gaussian_for_fixed_horizon() {
    let model = reference_model();
    let t = 1.5;
    let ins = Insurance {
        interarrival: InterarrivalLaw::Deterministic { value: t },
        ..reference_insurance()
    };
    let cycles = sample_cycles(&model, &ins, &SimulationPlan::new(22), 0, 200_000).unwrap();
    let logs: Vec<f64> = cycles.iter().map(|c| c.log_m()).collect();
    let (mean, se) = mean_and_stderr(&logs);
    assert!((mean + model.a_v() * t).abs() <= 4.0 * se, "{mean} vs {}", -model.a_v() * t);
    let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (logs.len() - 1) as f64;
    let exact = model.sigma2() * t;
    let se_var = exact * (2.0 / logs.len() as f64).sqrt();
    assert!((var - exact).abs() <= 4.0 * se_var, "{var} vs {exact}");
}

#[test]
fn first_moments_of_m_and_q() {
    // E M = E e^{T H(1)}, E int_0^T e^{-V} = E (e^{T H(1)} - 1) / H(1).
    let model = reference_model();
    let ins = reference_insurance();
    let cycles = sample_cycles(&model, &ins, &SimulationPlan::new(23), 0, 100_000).unwrap();
    let h1 = model.cumulant(1.0);
    let mgf = ins.interarrival.mgf(h1);
    let e_m = mgf;
    let e_q = mgf * 0.5 - ins.c * (mgf - 1.0) / h1;
    let (m, se) = mean_and_stderr(&cycles.iter().map(|c| c.m).collect::<Vec<_>>());
    assert!((m - e_m).abs() <= 4.0 * se, "E M {m} vs {e_m}");
    let (q, se) = mean_and_stderr(&cycles.iter().map(|c| c.q).collect::<Vec<_>>());
    assert!((q - e_q).abs() <= 4.0 * se, "E Q {q} vs {e_q}");
}

#[test]
fn kesten_moment_for_a_jump_diffusion() {
    let law = JumpLaw::UniformOnInterval { lo: -0.2, hi: 0.3 };
    let model = derive_log_price_model(0.1, 0.02, JumpMeasure::new(0.5, law)).unwrap();
    let beta = find_beta(&model, RootTolerance::default()).beta().unwrap();
    let ins = Insurance {
        c: 1.5,
        claim: ClaimLaw::Pareto { scale: 1.0, index: 6.0 },
        interarrival: InterarrivalLaw::Gamma { shape: 2.0, rate: 2.0 },
    };
    let cycles = sample_cycles(&model, &ins, &SimulationPlan::new(24), 0, 200_000).unwrap();
    let (m, se) = mean_and_stderr(&cycles.iter().map(|c| (beta * c.log_m()).exp()).collect::<Vec<_>>());
    assert!((m - 1.0).abs() <= 3.0 * se, "E M^beta = {m} +- {se}");
    assert!(cycles.iter().all(|c| !c.saturated && c.m > 0.0));
}

#[test]
fn grid_integral_refines_on_a_fixed_brownian_path() {
    const FINE: usize = 1 << 14;
    let levels = 6..=13u32;
    let mut mean_gaps = vec![0.0; levels.clone().count() - 1];
    let paths = 50;
    for p in 0..paths {
        let mut r = stream(25, domain::SYNTHETIC, p);
        let dt = 1.0 / FINE as f64;
        let mut v = vec![0.0f64; FINE + 1];
        for i in 0..FINE {
            let z: f64 = r.sample(StandardNormal);
            v[i + 1] = v[i] + 0.06 * dt + 0.2 * dt.sqrt() * z;
        }
        let integrals: Vec<f64> = levels
            .clone()
            .map(|k| {
                let stride = FINE >> k;
                let idx = (0..=(1usize << k)).map(|j| j * stride);
                let path = SampledPath {
                    times: idx.clone().map(|i| i as f64 * dt).collect(),
                    values: idx.map(|i| v[i]).collect(),
                };
                discounted_integral_grid(&path)
            })
            .collect();
        for (g, w) in mean_gaps.iter_mut().zip(integrals.windows(2)) {
            *g += (w[1] - w[0]).abs() / paths as f64;
        }
    }
    assert!(mean_gaps.windows(2).all(|w| w[1] < w[0]), "{mean_gaps:?}");
}

#[test]
fn refined_grid_changes_q_little() {
    let model = reference_model();
    let ins = reference_insurance();
    let coarse = SimulationPlan::new(26);
    let mut fine = coarse;
    fine.grid = PathGridConfig::default().refined();
    let a = sample_cycles(&model, &ins, &coarse, 0, 50_000).unwrap();
    let b = sample_cycles(&model, &ins, &fine, 0, 50_000).unwrap();
    let qa: Vec<f64> = a.iter().map(|c| c.q).collect();
    let qb: Vec<f64> = b.iter().map(|c| c.q).collect();
    assert!(ks_two_sample(&qa, &qb).passes(0.01));
}
