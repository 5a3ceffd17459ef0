use lnn_community::community::{detect_all_layers, EmConfig};
use lnn_community::datagen::{gen_ground_truth, gen_synthetic_dataset};
use lnn_community::eval::matched_accuracy;
use lnn_community::network::training_error;
use lnn_community::trainer::{init_params, normalize_dataset, train, Sampling, TrainConfig};

fn run_case(noise_var: f64, lambda: f64, xi: f64, epochs: usize) {
    let gt = gen_ground_truth(3, 15, 2, 0);
    let (inputs, targets) = gen_synthetic_dataset(&gt.params, 5000, 3.0, noise_var, 1000).unwrap();
    let (ds, _) = normalize_dataset(&inputs, &targets, (-1.0, 1.0), (0.01, 0.99)).unwrap();
    let config = TrainConfig {
        lasso_weight: lambda,
        stabilizer: 0.001,
        epochs,
        base_step: 0.7,
        seed: 3,
        sampling: Sampling::UniformRandom,
        x_bounds: (-1.0, 1.0),
        y_bounds: (0.01, 0.99),
        trace_stride: Some((epochs * 5000) as u64),
        eval_test: false,
    };
    let initial = init_params(gt.params.topology(), 2);
    let (trained, _) = train(initial, &ds, None, &config).unwrap();
    let e = training_error(&trained, &ds).unwrap();

    let w = trained.weights_from(1);
    let (mut wh, mut ch) = (0, 0);
    for i in 0..45 {
        for j in 0..45 {
            if w.get(i, j).abs() >= xi {
                if i / 15 == j / 15 {
                    wh += 1;
                } else {
                    ch += 1;
                }
            }
        }
    }
    let em = EmConfig { communities: 3, iterations: 200, restarts: 30, seed: 4 };
    let assignments = detect_all_layers(&trained, xi, &em).unwrap();
    let accs: Vec<String> = assignments
        .iter()
        .map(|a| format!("{:.3}", matched_accuracy(&a.communities, &gt.module_labels).unwrap()))
        .collect();
    println!(
        "noise_var={noise_var} lambda={lambda:.1e} xi={xi} a1={epochs}: E={e:.4} d1 within>=xi {wh}/675 cross {ch}/1350 accs={accs:?}"
    );
}

#[test]
#[ignore]
fn diagnose_levers() {
    run_case(0.0025, 9.0e-7, 0.3, 200);
    run_case(0.05, 1.0e-4, 0.3, 200);
    run_case(0.0025, 1.0e-4, 0.3, 200);
    run_case(0.05, 1.0e-3, 0.3, 200);
}
