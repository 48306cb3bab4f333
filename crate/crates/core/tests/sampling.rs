mod oracle;

use clilm::fit::*;
use clilm::ppc::simulate_from_clilm;
use clilm::simulate::simulate_clilm;
use clilm::*;
use oracle::random_epidemic;

fn std_normal(t: &[f64; 2]) -> f64 {
    -0.5 * (t[0] * t[0] + t[1] * t[1])
}

fn check_standard_normal(sample: &PosteriorSample) {
    assert_eq!(sample.len(), 100_000);
    let m = sample.mean();
    for (k, mk) in m.iter().enumerate() {
        let se = batch_means_se(&sample.column(k));
        assert!(mk.abs() < 3.0 * se, "mean {mk} vs 3 se {}", 3.0 * se);
    }
    let c = sample.covariance();
    assert!((c[0][0] - 1.0).abs() < 0.1 && (c[1][1] - 1.0).abs() < 0.1 && c[0][1].abs() < 0.1, "{c:?}");
    assert!(!sample.acceptance_flagged());
}

#[test]
fn samplers_recover_standard_normal() {
    let settings = McmcSettings::new(105_000, 5_000, 1, 42);
    let ilm = mcmc_ilm_on(&std_normal, &McmcSettings { init: Some([0.5, -0.5]), ..settings }).unwrap();
    check_standard_normal(&ilm);
    let cl = mcmc_clilm_on(&std_normal, &settings).unwrap();
    check_standard_normal(&cl);
    let again = mcmc_clilm_on(&std_normal, &settings).unwrap();
    assert_eq!(cl.draws, again.draws);
    assert_eq!(cl.log_post, again.log_post);
}

#[test]
fn ilm_chain_respects_support_and_recomputes() {
    let (pop, rec) = random_epidemic(4);
    let priors = PriorSpec::default();
    let s = mcmc_ilm(&rec, &pop, &priors, &McmcSettings::new(3000, 500, 5, 9)).unwrap();
    assert_eq!(s.len(), 500);
    for (d, lp) in s.draws.iter().zip(&s.log_post) {
        assert!(priors.ilm_in_support(d));
        let ll = ilm_log_likelihood(&rec, &pop, &IlmParams::new(d[0], d[1]).unwrap()).unwrap().value;
        let expect = ll + priors.ilm_log_prior(d);
        assert!((expect - lp).abs() <= 1e-10 * (1.0 + lp.abs()));
    }
    let again = mcmc_ilm(&rec, &pop, &priors, &McmcSettings::new(3000, 500, 5, 9)).unwrap();
    assert_eq!(s.draws, again.draws);
    let outside = McmcSettings { init: Some([6.0, 1.0]), ..McmcSettings::new(100, 10, 1, 1) };
    assert!(matches!(mcmc_ilm(&rec, &pop, &priors, &outside), Err(Error::OutsideSupport(_))));
    assert!(mcmc_ilm(&rec, &pop, &priors, &McmcSettings::new(100, 100, 1, 1)).is_err());
}

#[test]
fn clilm_posterior_agrees_with_mle() {
    let pop = sample_population(300, 10.0, 5).unwrap();
    let rec = simulate(&SimConfig::new(IlmParams::new(0.3, 2.0).unwrap(), Compartments::Si, &pop, 12, 6)).unwrap();
    let table = convert(&rec, &pop, 2.0, Transform::Log).unwrap();
    let mle = irls_fit(&table).unwrap();
    let priors = PriorSpec::default();
    let s = mcmc_clilm(&table, &priors, &McmcSettings::new(20_000, 4_000, 4, 3)).unwrap();
    let m = s.mean();
    let c = s.covariance();
    assert!((m[1] - mle.alpha1).abs() < 3.0 * c[1][1].sqrt());
    assert!((m[0] - mle.alpha0).abs() < 3.0 * c[0][0].sqrt());
    assert!(!s.acceptance_flagged());
    let lp = clilm::table_log_likelihood(&table, s.draws[7][0], s.draws[7][1]).value + priors.clilm_log_prior(&s.draws[7]);
    assert!((lp - s.log_post[7]).abs() <= 1e-10 * (1.0 + lp.abs()));
}

fn three_se(hits: usize, n: usize, p: f64) -> bool {
    let freq = hits as f64 / n as f64;
    (freq - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn infection_frequency_matches_probability() {
    let pop = Population::from_coords(&[(0.0, 0.0), (1.3, 0.0)]).unwrap();
    let params = IlmParams::new(0.4, 2.0).unwrap();
    let p = ilm_infection_prob(&params, 1, &[0], &pop.distance_matrix());
    let n = 10_000;
    let hits = (0..n as u64)
        .filter(|&s| {
            let mut cfg = SimConfig::new(params, Compartments::Si, &pop, 2, s);
            cfg.initial_infectious = Some(vec![0]);
            simulate(&cfg).unwrap().t_inf(1) == Some(2)
        })
        .count();
    assert!(three_se(hits, n, p), "{hits} vs {p}");

    let cl = ClilmParams { alpha0: -1.0, alpha1: 0.8, beta0: 2.0, transform: Transform::Log };
    let x = (1.3f64.powf(-2.0)).ln();
    let p = clilm_infection_prob(&cl, x);
    let kernel = pop.distance_matrix().kernel(2.0);
    let hits = (0..n as u64)
        .filter(|&s| simulate_clilm(&cl, &kernel, &Compartments::Si, 2, 1, &[0], s).unwrap().t_inf(1) == Some(2))
        .count();
    assert!(three_se(hits, n, p), "{hits} vs {p}");
}

#[test]
fn extreme_hazards() {
    let pop = Population::from_coords(&[(0.0, 0.0), (1.0, 0.0)]).unwrap();
    for seed in 0..200 {
        let mut cfg = SimConfig::new(IlmParams::new(1e6, 1.0).unwrap(), Compartments::Si, &pop, 2, seed);
        cfg.initial_infectious = Some(vec![0]);
        assert_eq!(simulate(&cfg).unwrap().t_inf(1), Some(2));
    }
    let big = sample_population(40, 5.0, 1).unwrap();
    let cl = ClilmParams { alpha0: -30.0, alpha1: 0.0, beta0: 2.0, transform: Transform::Log };
    for seed in 0..50 {
        let rec = simulate_from_clilm(&cl, &big, &Compartments::Si, 30, &[0], seed).unwrap();
        assert_eq!(rec.n_infected(), 1);
    }
}

#[test]
fn sir_periods_and_partition() {
    let pop = sample_population(400, 10.0, 3).unwrap();
    let params = IlmParams::new(0.5, 3.0).unwrap();
    let comp = Compartments::sir(4.0).unwrap();
    let mut periods = Vec::new();
    let mut seed = 0;
    while periods.len() < 10_000 {
        let rec = simulate(&SimConfig::new(params, comp, &pop, 25, seed)).unwrap();
        seed += 1;
        for i in 0..rec.len() {
            if let (Some(a), Some(r)) = (rec.t_inf(i), rec.t_rem(i)) {
                periods.push(f64::from(r - a));
            }
            for t in 1..=rec.t_max() {
                let expected = match (rec.t_inf(i), rec.t_rem(i)) {
                    (Some(a), _) if t < a => State::Susceptible,
                    (None, _) => State::Susceptible,
                    (Some(_), Some(r)) if t >= r => State::Removed,
                    _ => State::Infectious,
                };
                assert_eq!(rec.state(i, t), expected);
            }
        }
    }
    let n = periods.len() as f64;
    let mean = periods.iter().sum::<f64>() / n;
    let sd = (periods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 4.0).abs() < 3.0 * sd / n.sqrt(), "mean {mean}");
    assert!(periods.iter().all(|&p| p >= 1.0));
}
