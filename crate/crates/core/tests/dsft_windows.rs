use pda_core::dsft::{extract_windows, DatasetMeta, TrajectoryDataset, WindowSpec};
use pda_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(k: usize, horizon: usize, seed: u64) -> TrajectoryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trajectories = (0..k)
        .map(|_| {
            (0..=horizon)
                .map(|_| {
                    let pm: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let fm: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    (
                        pm,
                        fm,
                        [rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01)],
                    )
                })
                .collect()
        })
        .collect();
    let meta = DatasetMeta {
        env_fingerprint: 0,
        behavior: "random".into(),
        noise: 0.0,
        seed,
    };
    TrajectoryDataset::from_records(trajectories, meta).unwrap()
}

/// Nested-loop reference: every (i, t) with enough history, inputs as the
/// measurement history followed by the action history, oldest first.
fn brute_force(d: &TrajectoryDataset, n: usize, m: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..d.k() {
        for t in 0..=d.horizon() {
            if t < n || t < m {
                continue;
            }
            let mut x = Vec::new();
            for lag in (0..=n).rev() {
                x.extend_from_slice(d.o_pm(i, t - lag));
            }
            for lag in (1..=m).rev() {
                x.extend_from_slice(&d.action(i, t - lag));
            }
            xs.push(x);
            ys.push(d.o_fm(i, t).to_vec());
        }
    }
    (xs, ys)
}

#[test]
fn windows_match_brute_force() {
    for k in [1, 3] {
        for n in 0..=4 {
            for m in 0..=4 {
                for horizon in n.max(m).max(1)..=8 {
                    let d =
                        random_dataset(k, horizon, (k * 1000 + n * 100 + m * 10 + horizon) as u64);
                    let set = extract_windows(&d, WindowSpec::new(n, m)).unwrap();
                    let (xs, ys) = brute_force(&d, n, m);
                    assert_eq!(set.len(), xs.len());
                    for (r, (x, y)) in xs.iter().zip(&ys).enumerate() {
                        assert_eq!(
                            set.x.row(r).to_vec(),
                            *x,
                            "k={k} n={n} m={m} T={horizon} row {r}"
                        );
                        assert_eq!(set.y.row(r).to_vec(), *y);
                    }
                }
            }
        }
    }
}

#[test]
fn degenerate_window_is_current_reading() {
    let d = random_dataset(3, 6, 1);
    let set = extract_windows(&d, WindowSpec::new(0, 0)).unwrap();
    assert_eq!(set.len(), 3 * 7);
    assert_eq!(set.x.ncols(), 3);
    assert_eq!(set.x.row(8).to_vec(), d.o_pm(1, 1));
}

#[test]
fn index_arithmetic() {
    let d = random_dataset(2, 5, 2);
    let set = extract_windows(&d, WindowSpec::new(2, 1)).unwrap();
    assert_eq!(set.len(), 2 * 4);
    assert_eq!(set.x.ncols(), 3 * 3 + 2);
    assert_eq!(set.trajectory, vec![0, 0, 0, 0, 1, 1, 1, 1]);
}

#[test]
fn window_longer_than_horizon() {
    let d = random_dataset(1, 3, 3);
    assert!(matches!(
        extract_windows(&d, WindowSpec::new(4, 0)),
        Err(Error::WindowTooLong {
            n: 4,
            m: 0,
            horizon: 3
        })
    ));
}

#[test]
fn normalized_columns_are_standard() {
    let d = random_dataset(3, 40, 4);
    let set = extract_windows(&d, WindowSpec::new(2, 2)).unwrap();
    let z = set.input_norm.apply_batch(set.x.view()).unwrap();
    for c in z.columns() {
        let mean = c.sum() / c.len() as f64;
        let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c.len() as f64;
        assert!(mean.abs() < 1e-10);
        assert!((var.sqrt() - 1.0).abs() < 1e-10);
    }
}
