use gmse_core::rng::SeedStream;
use gmse_core::trainkit::{
    net_backward, net_forward, train::default_checkpoints, GeneratorNet, PixelDescent, StepScaling,
};
use gmse_core::{
    build_weight_map, compare, gmse, gmse_gradient, make_dataset, make_wake_field, ssim_global, train, Field,
    FlowCondition, GmseParams, LossKind, SsimParams, TrainConfig, WeightMap,
};

fn random_condition(rng: &mut SeedStream) -> FlowCondition {
    FlowCondition::new(rng.uniform(0.1, 5.0), rng.uniform(0.0, 60.0)).unwrap()
}

fn random_field(h: usize, w: usize, rng: &mut SeedStream) -> Field {
    Field::from_fn(h, w, |_, _| rng.next_f64()).unwrap()
}

fn loss_at(net: &GeneratorNet, cond: &FlowCondition, reference: &Field, weights: &WeightMap) -> f64 {
    gmse(reference, &net_forward(net, cond), weights).unwrap().get()
}

#[test]
fn net_gradients_match_finite_differences() {
    let mut rng = SeedStream::new(2024);
    let mut checked = 0;
    let mut attempt = 0;
    while checked < 100 {
        attempt += 1;
        let net = GeneratorNet::init(&[8], 4, 4, 0.2, attempt).unwrap();
        let cond = random_condition(&mut rng);
        let out = net_forward(&net, &cond);
        if out.values().iter().any(|&v| !(0.01..0.99).contains(&v)) {
            continue;
        }
        let reference = random_field(4, 4, &mut rng);
        let weights = WeightMap::new(
            Field::from_fn(4, 4, |_, _| rng.uniform(0.2, 1.0)).unwrap(),
            0.2,
        )
        .unwrap();
        let grad_out = gmse_gradient(&reference, &out, &weights).unwrap();
        let analytic = net_backward(&net, &cond, &grad_out).unwrap();
        let step = 1e-5;
        for i in 0..net.num_params() {
            let mut plus = net.clone();
            plus.params_mut()[i] += step;
            let mut minus = net.clone();
            minus.params_mut()[i] -= step;
            let numeric =
                (loss_at(&plus, &cond, &reference, &weights) - loss_at(&minus, &cond, &reference, &weights)) / (2.0 * step);
            let a = analytic.as_slice()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: {a} vs {numeric}");
        }
        checked += 1;
    }
}

#[test]
fn linear_net_matches_closed_form_gradients() {
    // slope 1 makes the hidden layer affine: y = W2 (W1 x + b1) + b2
    let (n_in, n_hid, n_out) = (2, 3, 4);
    let mut net = GeneratorNet::zeros(&[n_hid], 2, 2, 1.0).unwrap();
    let mut rng = SeedStream::new(8);
    let params: Vec<f64> = (0..net.num_params()).map(|_| rng.uniform(-0.1, 0.1)).collect();
    net.set_params(params.clone()).unwrap();
    let (w1, rest) = params.split_at(n_in * n_hid);
    let (b1, rest) = rest.split_at(n_hid);
    let (w2, b2) = rest.split_at(n_hid * n_out);
    let b2: Vec<f64> = b2.iter().map(|b| b + 0.5).collect();
    let mut shifted = params.clone();
    for (i, b) in b2.iter().enumerate() {
        shifted[n_in * n_hid + n_hid + n_hid * n_out + i] = *b;
    }
    net.set_params(shifted).unwrap();

    let cond = FlowCondition::new(2.0, 30.0).unwrap();
    let x = cond.normalized();
    let hidden: Vec<f64> = (0..n_hid).map(|j| b1[j] + w1[j * n_in] * x[0] + w1[j * n_in + 1] * x[1]).collect();
    let out: Vec<f64> = (0..n_out)
        .map(|o| b2[o] + (0..n_hid).map(|j| w2[o * n_hid + j] * hidden[j]).sum::<f64>())
        .collect();
    let produced = net_forward(&net, &cond);
    for (a, b) in produced.values().iter().zip(&out) {
        assert!((a - b).abs() < 1e-15);
    }

    let g = Field::new(2, 2, vec![0.3, -0.7, 1.1, 0.05]).unwrap();
    let grads = net_backward(&net, &cond, &g).unwrap();
    let mut expected = Vec::new();
    let back: Vec<f64> = (0..n_hid).map(|j| (0..n_out).map(|o| g.values()[o] * w2[o * n_hid + j]).sum()).collect();
    for b in &back {
        for xi in x {
            expected.push(b * xi);
        }
    }
    expected.extend(&back);
    for o in 0..n_out {
        for h in &hidden {
            expected.push(g.values()[o] * h);
        }
    }
    expected.extend(g.values());
    for (a, e) in grads.as_slice().iter().zip(&expected) {
        assert!((a - e).abs() < 1e-14, "{a} vs {e}");
    }
}

#[test]
fn random_nets_produce_finite_unit_range_outputs() {
    let mut rng = SeedStream::new(99);
    for seed in 0..1000 {
        let net = GeneratorNet::init(&[16, 32], 8, 8, 0.2, seed).unwrap();
        let out = net_forward(&net, &random_condition(&mut rng));
        assert!(out.values().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    }
}

fn small_config(loss: LossKind, seed: u64) -> TrainConfig {
    let mut c = TrainConfig::new(loss, 4, seed);
    c.hidden = vec![8, 16];
    c.batch_size = 7;
    c.lr = 1e-3;
    c
}

#[test]
fn training_is_deterministic_across_runs_and_threads() {
    let d = make_dataset(30, 16, 16, 4).unwrap();
    let c = small_config(LossKind::dgmse_default(), 4);
    let a = train(&d, &c).unwrap();
    let b = train(&d, &c).unwrap();
    let mut threaded = c.clone();
    threaded.threads = 3;
    let t = train(&d, &threaded).unwrap();
    assert_eq!(a.loss, b.loss);
    assert_eq!(a.ssim, b.ssim);
    assert_eq!(a.loss, t.loss);
    assert_eq!(a.ssim, t.ssim);
    assert_eq!(a.loss.len(), 4);
    assert_eq!(a.ssim.iter().map(|s| s.0).collect::<Vec<_>>(), default_checkpoints(4));
}

#[test]
fn unit_offset_training_reproduces_mse_exactly() {
    let d = make_dataset(30, 16, 16, 6).unwrap();
    let mse = train(&d, &small_config(LossKind::Mse, 6)).unwrap();
    let flat = train(&d, &small_config(LossKind::Gmse(GmseParams::new(10.0, 1.0, 1.0).unwrap()), 6)).unwrap();
    assert_eq!(mse.loss, flat.loss);
    assert_eq!(mse.ssim, flat.ssim);
}

#[test]
fn training_reduces_loss() {
    let d = make_dataset(40, 16, 16, 1).unwrap();
    let mut c = small_config(LossKind::gmse_baseline(), 1);
    c.epochs = 20;
    c.ssim_checkpoints = vec![20];
    let log = train(&d, &c).unwrap();
    let v = log.loss.values();
    assert!(v[19] < v[0]);
    assert!(log.max_loss_rate().unwrap() < 0.0);
}

#[test]
fn compare_builds_one_row_per_run() {
    let d = make_dataset(24, 16, 16, 2).unwrap();
    let configs: Vec<TrainConfig> = [LossKind::Mse, LossKind::gmse_baseline(), LossKind::dgmse_default()]
        .into_iter()
        .map(|k| {
            let mut c = small_config(k, 2);
            c.epochs = 100;
            c.hidden = vec![4];
            c.ssim_checkpoints = vec![];
            c
        })
        .collect();
    let report = compare(&d, &configs).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert_eq!(report.columns, vec![1, 5, 20, 100]);
    assert!(report.rows.iter().all(|r| r.ssim.len() == 4));
    let csv = report.to_csv();
    assert!(csv.starts_with("run,loss,ssim@1,ssim@5,ssim@20,ssim@100,max_loss_rate,final_loss"));
    assert_eq!(report.to_svg().matches("<polyline").count(), 3);

    let mut mismatched = configs.clone();
    mismatched[1].seed = 3;
    assert!(compare(&d, &mismatched).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let d = make_dataset(10, 16, 16, 0).unwrap();
    let mut c = small_config(LossKind::Mse, 0);
    c.epochs = 0;
    assert!(train(&d, &c).is_err());
    let mut c = small_config(LossKind::Mse, 0);
    c.ssim_checkpoints = vec![9];
    assert!(train(&d, &c).is_err());
}

#[test]
fn mse_pixel_descent_is_monotone() {
    let reference = make_wake_field(32, 32, FlowCondition::new(3.0, 20.0).unwrap(), 5).unwrap();
    let trace = PixelDescent::new(LossKind::Mse, 200, 0.5).run(&reference, 1).unwrap();
    assert!(trace.loss.values().windows(2).all(|p| p[1] <= p[0]));
}

fn band_ssim(reference: &Field, candidate: &Field, weights: &WeightMap) -> f64 {
    let (r, c): (Vec<f64>, Vec<f64>) = weights
        .values()
        .iter()
        .zip(reference.values().iter().zip(candidate.values()))
        .filter(|(w, _)| **w > 0.6)
        .map(|(_, (a, b))| (*a, *b))
        .unzip();
    let n = r.len();
    ssim_global(&Field::new(1, n, r).unwrap(), &Field::new(1, n, c).unwrap(), &SsimParams::default()).unwrap()
}

fn band_sq_error(reference: &Field, candidate: &Field, weights: &WeightMap) -> Vec<f64> {
    weights
        .values()
        .iter()
        .zip(reference.values().iter().zip(candidate.values()))
        .filter(|(w, _)| **w > 0.6)
        .map(|(_, (a, b))| (a - b).powi(2))
        .collect()
}

#[test]
fn plain_weighted_descent_never_outpaces_mse_per_cell() {
    // every weight is at most 1, so each cell contracts no faster than under MSE
    let reference = make_wake_field(64, 64, FlowCondition::new(4.0, 25.0).unwrap(), 3).unwrap();
    let params = GmseParams::new(10.0, 1.0, 0.2).unwrap();
    let weights = build_weight_map(&reference, &params).unwrap();
    let mse = PixelDescent::new(LossKind::Mse, 500, 4.0).run(&reference, 7).unwrap();
    let gm = PixelDescent::new(LossKind::Gmse(params), 500, 4.0).run(&reference, 7).unwrap();
    let a = band_sq_error(&reference, &mse.candidate, &weights);
    let b = band_sq_error(&reference, &gm.candidate, &weights);
    assert!(a.iter().zip(&b).all(|(m, g)| g >= m));
}

#[test]
fn mean_weight_descent_favours_the_high_weight_band() {
    for (seed, speed, angle) in [(3, 4.0, 25.0), (11, 2.5, 45.0), (19, 4.8, 5.0)] {
        let reference = make_wake_field(64, 64, FlowCondition::new(speed, angle).unwrap(), seed).unwrap();
        let params = GmseParams::new(10.0, 1.0, 0.2).unwrap();
        let weights = build_weight_map(&reference, &params).unwrap();
        let mse = PixelDescent::new(LossKind::Mse, 500, 4.0).run(&reference, seed).unwrap();
        let mut d = PixelDescent::new(LossKind::Gmse(params), 500, 4.0);
        d.scaling = StepScaling::MeanWeight;
        let gm = d.run(&reference, seed).unwrap();
        let s_mse = band_ssim(&reference, &mse.candidate, &weights);
        let s_gm = band_ssim(&reference, &gm.candidate, &weights);
        assert!(s_gm > s_mse, "seed {seed}: {s_gm} vs {s_mse}");
    }
}
