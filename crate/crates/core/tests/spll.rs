use adkit_core::gen::random_env;
use adkit_core::optim::FitConfig;
use adkit_core::spll::{
    closed_form_mle, fit_spll, outcome_density, parse_spll, sample_many, Outcome, SampleSet,
    SpllProgram,
};
use adkit_core::{eval, seeded_rng, Env, GradientMode};
use rand::Rng;

const BERNOULLI: &str = "main = Uniform >= Theta[1]";

const SIX: &str = "
main = if Uniform >= Theta[1]
       then if Uniform >= Theta[2]
            then if Uniform >= Theta[3] then null    else [true]
            else if Uniform >= Theta[4] then [false] else [true,true]
       else if Uniform >= Theta[5]
            then if Uniform >= Theta[6] then [true,false] else [false,true]
            else [false,false]
";

fn total_density(p: &SpllProgram, theta: &Env) -> f64 {
    p.leaves().into_iter().map(|o| eval(&outcome_density(p, o).unwrap(), theta).unwrap()).sum()
}

#[test]
fn densities_are_normalized() {
    let mut rng = seeded_rng(11);
    for text in [BERNOULLI, SIX] {
        let p = parse_spll(text).unwrap();
        for _ in 0..100 {
            let theta = random_env(&mut rng, p.theta_count(), 0.0, 1.0);
            assert!((total_density(&p, &theta) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn bernoulli_fit_regression() {
    let p = parse_spll(BERNOULLI).unwrap();
    let samples: SampleSet =
        [(Outcome::Bool(false), 3), (Outcome::Bool(true), 7)].into_iter().collect();
    let r = fit_spll(&p, &samples, Env::new(vec![0.5]), &FitConfig::new(0.02, 1000, 1e-14)).unwrap();
    let theta = r.parameters.values()[0];
    assert!((theta - 0.3).abs() < 1e-12, "{theta}");
    assert!((11..=15).contains(&r.iterations_used), "{}", r.iterations_used);
    assert!(r.converged);
}

#[test]
fn six_parameter_fit_regression() {
    let p = parse_spll(SIX).unwrap();
    let samples: SampleSet = p.leaves().into_iter().map(|o| (o.clone(), 3)).collect();
    let initial = Env::new(vec![0.5, 0.25, 0.25, 0.25, 0.25, 0.25]);
    let config = FitConfig::new(0.02, 100, 0.0);
    let expected = [3.0 / 7.0, 0.5, 0.5, 0.5, 1.0 / 3.0, 0.5];
    let reference = fit_spll(&p, &samples, initial.clone(), &config).unwrap();
    assert_eq!(reference.iterations_used, 100);
    for (got, want) in reference.parameters.values().iter().zip(expected) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
    assert!(reference.objective_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 8.0 * f64::EPSILON)));
    for mode in GradientMode::ALL {
        let r = fit_spll(&p, &samples, initial.clone(), &config.with_mode(mode)).unwrap();
        for (a, b) in r.parameters.values().iter().zip(reference.parameters.values()) {
            assert!((a - b).abs() <= 1e-9, "{mode}");
        }
    }
}

/// Random program with distinct θ indices and list-valued leaves.
fn random_program(rng: &mut impl Rng, depth: usize, next_theta: &mut u32, next_leaf: &mut u32) -> SpllProgram {
    if depth == 0 || (depth < 3 && rng.random_bool(0.3)) {
        let bits = (0..5).map(|i| (*next_leaf >> i) & 1 == 1).collect();
        *next_leaf += 1;
        return SpllProgram::Leaf(Outcome::List(bits));
    }
    *next_theta += 1;
    let k = *next_theta;
    let t = random_program(rng, depth - 1, next_theta, next_leaf);
    let e = random_program(rng, depth - 1, next_theta, next_leaf);
    SpllProgram::branch(k, t, e)
}

#[test]
fn fitted_parameters_match_the_closed_form() {
    let mut rng = seeded_rng(3);
    for _ in 0..10 {
        let (mut nt, mut nl) = (0, 0);
        let p = random_program(&mut rng, 4, &mut nt, &mut nl);
        if p.theta_count() == 0 {
            continue;
        }
        let samples: SampleSet =
            p.leaves().into_iter().map(|o| (o.clone(), rng.random_range(1..6))).collect();
        let mle = closed_form_mle(&p, &samples);
        let initial = Env::new(vec![0.5; p.theta_count()]);
        let r = fit_spll(&p, &samples, initial, &FitConfig::new(0.002, 200_000, 1e-13)).unwrap();
        for (k, (got, want)) in r.parameters.values().iter().zip(&mle).enumerate() {
            let want = want.expect("every index is used once");
            assert!((got - want).abs() < 1e-6, "θ{}: {got} vs {want} in {p}", k + 1);
        }
    }
}

#[test]
fn sample_frequencies_match_densities() {
    let p = parse_spll(SIX).unwrap();
    let theta = Env::new(vec![0.4, 0.3, 0.6, 0.5, 0.2, 0.7]);
    let n = 100_000;
    let drawn: SampleSet = sample_many(&p, &theta, 99, n).unwrap().into_iter().collect();
    assert_eq!(drawn.total(), n as u64);
    for o in p.leaves() {
        let prob = eval(&outcome_density(&p, o).unwrap(), &theta).unwrap();
        let freq = drawn.count(o) as f64 / n as f64;
        let se = (prob * (1.0 - prob) / n as f64).sqrt();
        assert!((freq - prob).abs() < 3.0 * se, "{o}: {freq} vs {prob}");
    }
}

#[test]
fn bernoulli_sampling_frequency() {
    let p = parse_spll(BERNOULLI).unwrap();
    let drawn = sample_many(&p, &Env::new(vec![0.3]), 1234, 100_000).unwrap();
    let falses = drawn.iter().filter(|o| **o == Outcome::Bool(false)).count();
    let freq = falses as f64 / drawn.len() as f64;
    assert!((freq - 0.3).abs() < 0.01, "{freq}");
}
