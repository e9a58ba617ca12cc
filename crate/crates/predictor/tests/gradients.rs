use roamsim_predictor::gradcheck::{gradient_check, random_problem};
use roamsim_predictor::loss::{loss_and_grad, to_signed, LossWeights};
use roamsim_predictor::Model;

#[test]
fn analytic_gradients_match_central_differences() {
    let report = gradient_check(11, 16, 5, 3, 100, 1e-5, 1e-3, Default::default()).unwrap();
    assert!(report.checks.len() >= 100);
    assert_eq!(report.blocks_covered, report.blocks_total);
    let worst = report.worst().unwrap();
    assert!(
        report.max_rel_error() <= 1e-3,
        "worst: {} #{} analytic {} numeric {} rel {}",
        worst.block,
        worst.index,
        worst.analytic,
        worst.numeric,
        worst.rel_error
    );
}

#[test]
fn decoder_bias_gradient_is_nonzero() {
    let model = Model::<f64>::init(3, false);
    let (frames, actions) = random_problem(4, 8, 7);
    let tape = model.rollout_tape(&frames[..5], &actions, 2, true).unwrap();
    let targets: Vec<_> = frames[5..].iter().map(to_signed).collect();
    let (_, d) = loss_and_grad(&tape.outputs, &targets, LossWeights::default()).unwrap();
    let mut grads = vec![0.0; model.param_count()];
    model.backward(&tape, &d, &mut grads);
    let bias = model.arch.block("decoder.out.bias").unwrap().range.clone();
    assert!(grads[bias].iter().all(|g| *g != 0.0));
    // Every block receives some gradient.
    for b in &model.arch.blocks {
        assert!(grads[b.range.clone()].iter().any(|g| *g != 0.0), "{}", b.name);
    }
}
