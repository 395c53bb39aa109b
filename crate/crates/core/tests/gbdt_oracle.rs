//! Brute-force reference booster compared against the library on small
//! instances with row and column sampling disabled.

use mlat_core::gbdt::{fit_named, Hyperparameters};
use proptest::prelude::*;

#[path = "support/oracle.rs"]
mod oracle;

use oracle::{close, oracle_fit_predict, Params};

#[test]
fn four_point_single_split() {
    let x: Vec<Vec<f64>> = [1.0, 2.0, 3.0, 4.0].iter().map(|&v| vec![v]).collect();
    let y = [10_000.0, 10_000.0, 30_000.0, 30_000.0];
    let p = Params {
        depth: 1,
        alpha: 0.0,
        lambda: 1.0,
        mcw: 1.0,
        gamma: 0.0,
    };
    let want = oracle_fit_predict(&x, &y, 1, 0.1, &p);
    let hp = Hyperparameters {
        n_estimators: 1,
        max_depth: 1,
        learning_rate: 0.1,
        subsample: 1.0,
        colsample_bytree: 1.0,
        reg_alpha: 0.0,
        reg_lambda: 1.0,
        min_child_weight: 1.0,
        min_split_gain: 0.0,
        seed: 0,
    };
    let m = fit_named(&x, &y, &hp, vec!["x".into()]).unwrap();
    // leaf weights ∓20000/3, scaled by the learning rate
    assert!(close(want[0], 20_000.0 - 2_000.0 / 3.0));
    assert!(close(want[3], 20_000.0 + 2_000.0 / 3.0));
    for (row, w) in x.iter().zip(&want) {
        assert!(close(m.predict(row).unwrap(), *w));
    }
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, usize, usize, f64, f64, f64, f64)> {
    (4usize..=20, 1usize..=3).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(0u8..6, d), n),
            prop::collection::vec(1_000.0f64..50_000.0, n),
            1usize..=3,
            1usize..=2,
            0.0f64..50.0,
            0.0f64..5.0,
            prop::sample::select(vec![1.0, 2.0, 3.0]),
            prop::sample::select(vec![0.0, 1_000.0]),
        )
            .prop_map(|(xi, y, t, depth, alpha, lambda, mcw, gamma)| {
                let x = xi
                    .into_iter()
                    .map(|r| r.into_iter().map(f64::from).collect())
                    .collect();
                (x, y, t, depth, alpha, lambda, mcw, gamma)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_brute_force((x, y, trees, depth, alpha, lambda, mcw, gamma) in instance()) {
        let p = Params { depth, alpha, lambda, mcw, gamma };
        let lr = 0.3;
        let want = oracle_fit_predict(&x, &y, trees, lr, &p);
        let hp = Hyperparameters {
            n_estimators: trees,
            max_depth: depth,
            learning_rate: lr,
            subsample: 1.0,
            colsample_bytree: 1.0,
            reg_alpha: alpha,
            reg_lambda: lambda,
            min_child_weight: mcw,
            min_split_gain: gamma,
            seed: 3,
        };
        let names = (0..x[0].len()).map(|i| format!("f{i}")).collect();
        let m = fit_named(&x, &y, &hp, names).unwrap();
        for (row, w) in x.iter().zip(&want) {
            let got = m.predict(row).unwrap();
            prop_assert!(close(got, *w), "got {got}, oracle {w}");
        }
    }
}
