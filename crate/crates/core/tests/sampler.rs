//! Distributional checks on the annealed heat-bath sampler against exact
//! enumeration.

use bmeb::model::pair_index;
use bmeb::sampler::{annealed_chains, generate_dataset, gibbs_sweep};
use bmeb::seed;
use bmeb::{BoltzmannMachine, PriorSpec, SamplerConfig, SpinConfiguration, SufficientStats};

#[test]
fn zero_temperature_sweep_is_uniform() {
    let machine = PriorSpec::gaussian(1.0, 0.5).unwrap().sample(4, 3).unwrap();
    let mut rng = seed::rng_from(11);
    let mut counts = [0usize; 16];
    let draws = 16_000;
    let mut state = SpinConfiguration::new(vec![1; 4]).unwrap();
    for _ in 0..draws {
        gibbs_sweep(&machine, 0.0, &mut state, &mut rng).unwrap();
        let idx = state
            .as_slice()
            .iter()
            .fold(0, |acc, &s| 2 * acc + usize::from(s > 0));
        counts[idx] += 1;
    }
    let expected = draws as f64 / 16.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 15 degrees of freedom; 40 is beyond the 0.999 quantile.
    assert!(chi2 < 40.0, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn independent_spins_follow_the_field() {
    let machine = BoltzmannMachine::independent(5, 2.0).unwrap();
    let data = generate_dataset(&machine, 4000, &SamplerConfig::default(), 5).unwrap();
    let m = SufficientStats::from_dataset(&data).magnetization;
    let target = 2.0f64.tanh();
    let se = ((1.0 - target * target) / (5.0 * 4000.0)).sqrt();
    assert!((m - target).abs() <= 4.0 * se, "{m} vs {target}");
}

#[test]
fn small_machine_moments_match_enumeration() {
    let machine = PriorSpec::gaussian(0.5, 0.2)
        .unwrap()
        .sample(4, 17)
        .unwrap();
    let exact = machine.exact_moments().unwrap();
    let big_n = 20_000;
    let data = generate_dataset(&machine, big_n, &SamplerConfig::default(), 23).unwrap();
    let st = SufficientStats::from_dataset(&data);
    for (i, (&got, &want)) in st.site_means.iter().zip(&exact.site).enumerate() {
        let se = ((1.0 - want * want) / big_n as f64).sqrt();
        assert!((got - want).abs() <= 4.0 * se, "site {i}: {got} vs {want}");
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let k = pair_index(4, i, j);
            let (got, want) = (st.pair_means[k], exact.pair[k]);
            let se = ((1.0 - want * want) / big_n as f64).sqrt();
            assert!(
                (got - want).abs() <= 4.0 * se,
                "pair ({i},{j}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn annealing_weights_estimate_the_partition_function() {
    let machine = PriorSpec::gaussian(0.8, 0.1)
        .unwrap()
        .sample(8, 29)
        .unwrap();
    let target = machine.log_partition().unwrap() - 8.0 * 2f64.ln();
    let config = SamplerConfig {
        track_weights: true,
        ..SamplerConfig::default()
    };
    let chains = annealed_chains(&machine, 4000, &config, 31).unwrap();
    let logs: Vec<f64> = chains.iter().map(|c| c.log_weight.unwrap()).collect();
    let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let k = w.len() as f64;
    let mean = w.iter().sum::<f64>() / k;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let estimate = shift + mean.ln();
    let se = (var / k).sqrt() / mean;
    assert!(
        (estimate - target).abs() <= 4.0 * se + 1e-3,
        "{estimate} vs {target} (se {se})"
    );
}

#[test]
fn dataset_ignores_worker_count() {
    let machine = PriorSpec::gaussian(0.6, 0.1)
        .unwrap()
        .sample(30, 1)
        .unwrap();
    let draw = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| generate_dataset(&machine, 64, &SamplerConfig::default(), 9).unwrap())
    };
    let one = draw(1);
    assert_eq!(one, draw(3));
    assert_eq!(one, draw(8));
}
