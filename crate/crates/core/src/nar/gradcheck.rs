use super::network::Network;

#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub n_values: usize,
}

/// `|a − b| / max(|a|, |b|)`, or 0 when both are below `1e-10`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-10 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Compares backpropagated gradients of the summed session loss with
/// central finite differences of step `eps`, tensor by tensor.
pub fn check_gradients<X: AsRef<[f64]>, C: AsRef<[f64]>>(
    net: &Network,
    theta: &[f64],
    xs: &[X],
    cands: &[Vec<C>],
    eps: f64,
) -> Vec<TensorCheck> {
    let mut grad = vec![0.0; net.n_params()];
    net.session_loss_grad(theta, xs, cands, 1.0, &mut grad, false);
    let mut probe = theta.to_vec();
    net.layout
        .tensors()
        .into_iter()
        .map(|(name, range)| {
            let mut worst: f64 = 0.0;
            for i in range.clone() {
                let orig = probe[i];
                probe[i] = orig + eps;
                let up = net.session_loss(&probe, xs, cands);
                probe[i] = orig - eps;
                let down = net.session_loss(&probe, xs, cands);
                probe[i] = orig;
                worst = worst.max(relative_error(grad[i], (up - down) / (2.0 * eps)));
            }
            TensorCheck {
                name,
                max_rel_error: worst,
                n_values: range.len(),
            }
        })
        .collect()
}
