use netcore::Scalar;

use crate::error::TensorError;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Controls for [`gradient_check_with`].
#[derive(Debug, Clone)]
pub struct CheckOptions<T> {
    /// Central-difference step.
    pub step: T,
    /// Upper bound on checked entries per leaf; larger leaves are sampled
    /// deterministically from `seed`.
    pub max_entries_per_leaf: usize,
    /// Entries where both the analytic and numeric gradient magnitudes
    /// stay at or below this bound are skipped. Zero disables filtering.
    pub min_abs_grad: T,
    /// Seed for the entry sampler.
    pub seed: u64,
}

impl<T: Scalar> Default for CheckOptions<T> {
    fn default() -> Self {
        Self {
            step: T::from_f64(1e-5).unwrap(),
            max_entries_per_leaf: usize::MAX,
            min_abs_grad: T::zero(),
            seed: 0x5eed,
        }
    }
}

/// Compares reverse-mode gradients against central finite differences over
/// every entry of every leaf and returns the worst relative error
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
///
/// `build` must be a pure function of the leaf values: it is re-invoked on
/// perturbed copies to evaluate the differences.
pub fn gradient_check<T, F>(build: F, leaves: &[Tensor<T>], h: T) -> Result<T, TensorError>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &[Var]) -> Result<Var, TensorError>,
{
    let opts = CheckOptions {
        step: h,
        ..CheckOptions::default()
    };
    gradient_check_with(build, leaves, &opts)
}

/// [`gradient_check`] with entry sampling and small-gradient filtering.
pub fn gradient_check_with<T, F>(
    build: F,
    leaves: &[Tensor<T>],
    opts: &CheckOptions<T>,
) -> Result<T, TensorError>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &[Var]) -> Result<Var, TensorError>,
{
    let evaluate = |inputs: &[Tensor<T>]| -> Result<T, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &vars)?;
        tape.value(out).scalar_value()
    };

    let analytic = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = leaves.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &vars)?;
        if !tape.value(out).is_scalar() {
            return Err(TensorError::NotScalar {
                op: "gradient_check",
                rows: tape.value(out).rows(),
                cols: tape.value(out).cols(),
            });
        }
        tape.backward(out, &vars)?
    };

    let floor = T::from_f64(1e-8).unwrap();
    let two = T::from_f64(2.0).unwrap();
    let mut worst = T::zero();
    let mut perturbed: Vec<Tensor<T>> = leaves.to_vec();
    for (l, leaf) in leaves.iter().enumerate() {
        let mut state = opts.seed ^ (l as u64).wrapping_mul(0x9e3779b97f4a7c15);
        for e in select_entries(leaf.len(), opts.max_entries_per_leaf, &mut state) {
            let original = leaf.data()[e];
            perturbed[l].data_mut()[e] = original + opts.step;
            let plus = evaluate(&perturbed)?;
            perturbed[l].data_mut()[e] = original - opts.step;
            let minus = evaluate(&perturbed)?;
            perturbed[l].data_mut()[e] = original;

            let numeric = (plus - minus) / (two * opts.step);
            let exact = analytic[l].data()[e];
            if exact.abs() <= opts.min_abs_grad && numeric.abs() <= opts.min_abs_grad {
                continue;
            }
            let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(floor);
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// All entry indices when they fit the budget, otherwise a deterministic
/// sample without replacement.
fn select_entries(len: usize, max: usize, state: &mut u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..len).collect();
    if len <= max {
        return indices;
    }
    for i in 0..max {
        let j = i + (splitmix64(state) as usize) % (len - i);
        indices.swap(i, j);
    }
    indices.truncate(max);
    indices
}
