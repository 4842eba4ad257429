//! Full-batch Adam with decoupled weight decay.

use super::layers::Param;

/// Applies one bias-corrected Adam update to every parameter in place.
/// Weight decay is decoupled: it shrinks the parameter directly by
/// `lr * weight_decay * value` and never enters the moment estimates.
///
/// `step` is 1-based; callers pass the number of updates performed so
/// far including this one.
pub fn adam_step(
    params: &mut [&mut Param],
    learning_rate: f64,
    weight_decay: f64,
    step: usize,
) {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    let t = step as f64;
    let bias1 = 1.0 - BETA1.powf(t);
    let bias2 = 1.0 - BETA2.powf(t);
    for param in params.iter_mut() {
        for idx in 0..param.value.values.len() {
            let g = param.grad.values[idx];
            let m = BETA1 * param.m.values[idx] + (1.0 - BETA1) * g;
            let v = BETA2 * param.v.values[idx] + (1.0 - BETA2) * g * g;
            param.m.values[idx] = m;
            param.v.values[idx] = v;
            let m_hat = m / bias1;
            let v_hat = v / bias2;
            let mut update = learning_rate * m_hat / (v_hat.sqrt() + EPS);
            if weight_decay > 0.0 {
                update += learning_rate * weight_decay * param.value.values[idx];
            }
            param.value.values[idx] -= update;
        }
    }
}
