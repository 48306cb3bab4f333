mod oracle;

use clilm::fit::*;
use clilm::io::*;
use clilm::ppc::{summarize, MseReference};
use clilm::*;
use proptest::prelude::*;

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn population_and_record(seed in 0u64..10_000) {
        let (pop, rec) = oracle::random_epidemic(seed);
        let dir = tmp();
        write_population(&dir.path().join("p.csv"), &pop).unwrap();
        write_record(&dir.path().join("e.csv"), &rec, &pop).unwrap();
        let pop2 = read_population(&dir.path().join("p.csv")).unwrap();
        prop_assert_eq!(&pop2, &pop);
        prop_assert_eq!(read_record(&dir.path().join("e.csv"), &pop2).unwrap(), rec);
    }

    #[test]
    fn binary_table(seed in 0u64..10_000, beta0 in -1.0f64..6.0, log in any::<bool>()) {
        let (pop, rec) = oracle::random_epidemic(seed);
        let t = if log { Transform::Log } else { Transform::Identity };
        let table = convert(&rec, &pop, beta0, t).unwrap();
        let dir = tmp();
        let path = dir.path().join("table.csv");
        write_table(&path, &table).unwrap();
        prop_assert_eq!(read_table(&path).unwrap(), table);
    }

    #[test]
    fn posterior_tune_estimate(seed in 0u64..1000) {
        let target = |t: &[f64; 2]| -0.5 * (t[0] * t[0] + 4.0 * t[1] * t[1]);
        let s = mcmc_clilm_on(&target, &McmcSettings::new(400, 100, 3, seed)).unwrap();
        let dir = tmp();
        write_posterior(&dir.path().join("post.csv"), &s).unwrap();
        prop_assert_eq!(read_posterior(&dir.path().join("post.csv")).unwrap(), s);

        let (pop, rec) = oracle::random_epidemic(seed);
        if let Ok(r) = tune_beta0(&rec, &pop, &Beta0Grid::range(-1.0, 4.0, 0.5).unwrap(), Transform::Identity) {
            write_tune(&dir.path().join("tune.csv"), &r).unwrap();
            // Failed candidates carry NaN, so compare renderings.
            let back = read_tune(&dir.path().join("tune.csv")).unwrap();
            prop_assert_eq!(format!("{back:?}"), format!("{r:?}"));
        }

        let est = PointEstimate {
            names: ["alpha0".into(), "alpha1".into()],
            values: [seed as f64 / 7.0, -1.0 / 3.0],
            std_errors: [0.1, 0.25],
            log_lik: -12.5,
            converged: seed % 2 == 0,
            iterations: 6,
        };
        write_estimate(&dir.path().join("est.csv"), &est).unwrap();
        prop_assert_eq!(read_estimate(&dir.path().join("est.csv")).unwrap(), est);
    }

    #[test]
    fn ppc_bundle(curves in prop::collection::vec(prop::collection::vec(0u32..40, 6), 2..30), obs in prop::collection::vec(0u32..40, 6)) {
        let res = summarize(curves, obs, 0.9, MseReference::Observed).unwrap();
        let dir = tmp();
        write_ppc_bundle(dir.path(), &res).unwrap();
        prop_assert_eq!(read_ppc_bundle(dir.path()).unwrap(), res);
    }
}

#[test]
fn schema_errors_name_the_row() {
    let err = population_from_csv("id,x,y\na,1,2\nb,oops,3\n", "pop.csv").unwrap_err();
    assert!(err.to_string().contains("pop.csv") && err.to_string().contains('3'), "{err}");
    let dup = population_from_csv("id,x,y\na,1,2\nb,1,2\n", "pop.csv").unwrap_err();
    assert!(dup.to_string().contains('a') && dup.to_string().contains('b'));
    let (pop, _) = clilm::toy::toy();
    let bad = record_from_csv("id,t_inf,t_rem\n1,2,\n2,x,\n", "e.csv", &pop).unwrap_err();
    assert!(bad.to_string().contains("e.csv"), "{bad}");
}
