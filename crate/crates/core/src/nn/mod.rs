//! A small dense feedforward network in f64 with analytic gradients.

mod mlp;
mod optim;

pub use mlp::{
    init_network, mse_loss, softmax_in_place, Activation, GradRecord, Layer, Mlp, Trace, FINAL_LAYER_BOUND,
};
pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};

/// Largest relative gap between analytic and central-difference gradients
/// of the scalar Σ_k w_k·out_k (summed over the batch), over all parameters
/// and inputs. Relative error uses max(|a|, |b|, 1e-6) as denominator.
pub fn finite_difference_gap(net: &Mlp, inputs: &[f64], batch: usize, weights: &[f64], step: f64) -> crate::Result<f64> {
    let scalar = |n: &Mlp, x: &[f64]| -> crate::Result<f64> {
        let out = n.forward_batch(x, batch)?;
        Ok(out.output().iter().zip(weights.iter().cycle()).map(|(o, w)| o * w).sum())
    };
    let trace = net.forward_batch(inputs, batch)?;
    let upstream: Vec<f64> = weights.iter().cycle().take(trace.output().len()).copied().collect();
    let grads = net.backward(&trace, &upstream, 0.0)?;
    let analytic: Vec<f64> = grads.weights.iter().zip(&grads.biases).flat_map(|(w, b)| w.iter().chain(b)).copied().collect();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);

    let mut worst: f64 = 0.0;
    let base: Vec<f64> = net.parameters().collect();
    for (i, &g) in analytic.iter().enumerate() {
        let mut plus = net.clone();
        let mut minus = net.clone();
        *plus.parameters_mut().nth(i).expect("index in range") = base[i] + step;
        *minus.parameters_mut().nth(i).expect("index in range") = base[i] - step;
        let numeric = (scalar(&plus, inputs)? - scalar(&minus, inputs)?) / (2.0 * step);
        worst = worst.max(rel(g, numeric));
    }
    for (i, &g) in grads.inputs.iter().enumerate() {
        let mut xp = inputs.to_vec();
        let mut xm = inputs.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let numeric = (scalar(net, &xp)? - scalar(net, &xm)?) / (2.0 * step);
        worst = worst.max(rel(g, numeric));
    }
    Ok(worst)
}
