use netcore::Scalar;

use crate::error::TensorError;
use crate::tensor::Tensor;

/// Moment estimates and step counter for the Adam optimizer. Moments are
/// allocated lazily on the first [`adam_step`] call so the state can be
/// created before parameter shapes are known.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    beta1: T,
    beta2: T,
    epsilon: T,
    step: u64,
    first_moment: Vec<Tensor<T>>,
    second_moment: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new() -> Self {
        Self::with_hyperparameters(
            T::from_f64(0.9).unwrap(),
            T::from_f64(0.999).unwrap(),
            T::from_f64(1e-8).unwrap(),
        )
    }

    pub fn with_hyperparameters(beta1: T, beta2: T, epsilon: T) -> Self {
        Self {
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    /// Number of completed optimizer steps.
    pub fn step_count(&self) -> u64 {
        self.step
    }
}

impl<T: Scalar> Default for AdamState<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// One bias-corrected Adam update applied in place to every parameter
/// tensor. Gradients are paired with parameters by position.
pub fn adam_step<T: Scalar>(
    params: &mut [Tensor<T>],
    grads: &[Tensor<T>],
    state: &mut AdamState<T>,
    learning_rate: T,
) -> Result<(), TensorError> {
    if params.len() != grads.len() {
        return Err(TensorError::ShapeMismatch {
            op: "adam_step",
            detail: format!("{} parameters but {} gradients", params.len(), grads.len()),
        });
    }
    if state.first_moment.is_empty() {
        state.first_moment = params
            .iter()
            .map(|p| Tensor::zeros(p.rows(), p.cols()))
            .collect();
        state.second_moment = state.first_moment.clone();
    }
    if state.first_moment.len() != params.len() {
        return Err(TensorError::ShapeMismatch {
            op: "adam_step",
            detail: format!(
                "state tracks {} tensors but {} were given",
                state.first_moment.len(),
                params.len()
            ),
        });
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.first_moment[i].shape() {
            return Err(TensorError::ShapeMismatch {
                op: "adam_step",
                detail: format!(
                    "tensor {i}: param {}x{}, grad {}x{}, moment {}x{}",
                    p.rows(),
                    p.cols(),
                    g.rows(),
                    g.cols(),
                    state.first_moment[i].rows(),
                    state.first_moment[i].cols()
                ),
            });
        }
    }

    state.step += 1;
    let t = T::from_u64(state.step).unwrap();
    let one = T::one();
    let bias1 = one - state.beta1.powf(t);
    let bias2 = one - state.beta2.powf(t);
    for ((param, grad), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(&mut state.second_moment))
    {
        for ((p, &g), (m, v)) in param
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()))
        {
            *m = state.beta1 * *m + (one - state.beta1) * g;
            *v = state.beta2 * *v + (one - state.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut params = vec![Tensor::from_rows(&[vec![1.5, -2.0]]).unwrap()];
        let grads = vec![Tensor::zeros(1, 2)];
        let mut state = AdamState::new();
        adam_step(&mut params, &grads, &mut state, 0.001).unwrap();
        assert_eq!(params[0].data(), &[1.5, -2.0]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_the_learning_rate() {
        let mut params = vec![Tensor::<f64>::scalar(0.0)];
        let grads = vec![Tensor::scalar(3.0)];
        let mut state = AdamState::new();
        adam_step(&mut params, &grads, &mut state, 0.001).unwrap();
        assert!(
            (params[0].data()[0] + 0.001).abs() < 1e-6,
            "got {}",
            params[0].data()[0]
        );
    }

    #[test]
    fn descends_a_quadratic() {
        let mut params = vec![Tensor::<f64>::scalar(4.0)];
        let mut state = AdamState::new();
        for _ in 0..4000 {
            let x = params[0].data()[0];
            let grads = vec![Tensor::scalar(2.0 * x)];
            adam_step(&mut params, &grads, &mut state, 0.01).unwrap();
        }
        assert!(params[0].data()[0].abs() < 1e-3);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut params = vec![Tensor::from_rows(&[vec![0.3, -0.7]]).unwrap()];
            let mut state = AdamState::new();
            for k in 0..50 {
                let g: Vec<f64> = params[0].data().iter().map(|p| p - 0.1 * k as f64).collect();
                let grads = vec![Tensor::from_vec(1, 2, g).unwrap()];
                adam_step(&mut params, &grads, &mut state, 0.005).unwrap();
            }
            params[0].data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let mut params = vec![Tensor::<f64>::zeros(2, 2)];
        let grads = vec![Tensor::<f64>::zeros(2, 3)];
        let mut state = AdamState::new();
        assert!(adam_step(&mut params, &grads, &mut state, 0.001).is_err());
    }

    #[test]
    fn moment_shapes_persist_across_calls() {
        let mut params = vec![Tensor::<f64>::zeros(2, 2)];
        let grads = vec![Tensor::<f64>::filled(2, 2, 1.0)];
        let mut state = AdamState::new();
        adam_step(&mut params, &grads, &mut state, 0.001).unwrap();
        let mut other = vec![Tensor::<f64>::zeros(1, 1), Tensor::<f64>::zeros(1, 1)];
        let other_grads = vec![Tensor::<f64>::zeros(1, 1), Tensor::<f64>::zeros(1, 1)];
        assert!(adam_step(&mut other, &other_grads, &mut state, 0.001).is_err());
    }
}
