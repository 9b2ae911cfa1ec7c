//! Empirical moments of the shipped families against their closed forms.

mod common;

use common::mean_and_stderr;
use ruinsim_core::inputs::{ClaimLaw, InterarrivalLaw, JumpLaw};
use ruinsim_core::rng::{domain, stream};

const N: usize = 1_000_000;

#[test]
fn claim_fractional_moments() {
    let laws = [
        ClaimLaw::Exponential { rate: 2.0 },
        ClaimLaw::Pareto { scale: 1.0, index: 5.0 },
        ClaimLaw::LogNormal { mu: 0.0, sigma: 0.5 },
        ClaimLaw::UniformBounded { lo: 0.5, hi: 2.0 },
    ];
    for (i, law) in laws.iter().enumerate() {
        let mut r = stream(11, domain::SYNTHETIC, i as u64);
        let xs: Vec<f64> = (0..N).map(|_| law.sample(&mut r)).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        for p in [0.5, 1.0, 2.0] {
            let (mean, se) = mean_and_stderr(&xs.iter().map(|x| x.powf(p)).collect::<Vec<_>>());
            let exact = law.fractional_moment(p).unwrap();
            assert!((mean - exact).abs() <= 4.0 * se, "{law:?} p={p}: {mean} +- {se} vs {exact}");
        }
    }
}

#[test]
fn interarrival_exponential_moments() {
    let laws = [
        (InterarrivalLaw::Exponential { rate: 2.0 }, 0.5),
        (InterarrivalLaw::Gamma { shape: 2.0, rate: 3.0 }, 1.0),
        (InterarrivalLaw::Uniform { lo: 0.5, hi: 2.0 }, 0.7),
        (InterarrivalLaw::Deterministic { value: 1.0 }, 0.3),
    ];
    for (i, (law, eps)) in laws.iter().enumerate() {
        let mut r = stream(12, domain::SYNTHETIC, i as u64);
        let ts: Vec<f64> = (0..N).map(|_| law.sample(&mut r)).collect();
        assert!(ts.iter().all(|&t| t > 0.0));
        let (mean, se) = mean_and_stderr(&ts);
        assert!((mean - law.mean()).abs() <= 4.0 * se + 1e-9 * law.mean(), "{law:?} mean");
        let (m, se) = mean_and_stderr(&ts.iter().map(|t| (eps * t).exp()).collect::<Vec<_>>());
        let exact = law.exp_moment(*eps).unwrap();
        assert!((m - exact).abs() <= 4.0 * se + 1e-9 * exact, "{law:?} eps={eps}: {m} +- {se} vs {exact}");
    }
}

#[test]
fn exponential_mean_example() {
    let law = InterarrivalLaw::Exponential { rate: 2.0 };
    let mut r = stream(13, domain::SYNTHETIC, 0);
    let mean = (0..N).map(|_| law.sample(&mut r)).sum::<f64>() / N as f64;
    assert!((mean - 0.5).abs() <= 3.0 * 0.5 / 1e3);
}

#[test]
fn log_jump_means() {
    let laws = [
        JumpLaw::UniformOnInterval { lo: -0.3, hi: 0.8 },
        JumpLaw::DoubleExponentialOnLog {
            eta_plus: 3.0,
            eta_minus: 4.0,
            p_up: 0.4,
        },
        JumpLaw::Atomic {
            points: vec![-0.5, 0.25, 1.0],
            weights: vec![1.0, 2.0, 1.0],
        },
    ];
    for (i, law) in laws.iter().enumerate() {
        let mut r = stream(14, domain::SYNTHETIC, i as u64);
        let ys: Vec<f64> = (0..N).map(|_| law.sample_log_jump(&mut r)).collect();
        let (mean, se) = mean_and_stderr(&ys);
        assert!((mean - law.mean_log_jump()).abs() <= 4.0 * se, "{law:?}");
        let (lap, se) = mean_and_stderr(&ys.iter().map(|y| (-1.5 * y).exp()).collect::<Vec<_>>());
        assert!((lap - law.log_jump_laplace(1.5)).abs() <= 4.0 * se, "{law:?} laplace");
        let xs: Vec<f64> = (0..1000).map(|_| law.sample_jump(&mut r)).collect();
        assert!(xs.iter().all(|&x| x > -1.0));
    }
}

#[test]
fn draws_are_reproducible() {
    let law = ClaimLaw::LogNormal { mu: 0.0, sigma: 1.0 };
    let draw = |index| {
        let mut r = stream(99, domain::SYNTHETIC, index);
        (0..100).map(|_| law.sample(&mut r)).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}
