use netcore::Scalar;

use crate::error::TensorError;
use crate::tape::{row_moments, Op, Tape, Var, LEAKY_SLOPE};
use crate::tensor::{broadcast_zip, reduce_to_shape, Tensor};

impl<T: Scalar> Tape<T> {
    /// Reverse-mode gradient of a scalar output with respect to the given
    /// leaves, in leaf order. Leaves the output does not depend on get zero
    /// gradients of their own shape.
    pub fn backward(&self, output: Var, leaves: &[Var]) -> Result<Vec<Tensor<T>>, TensorError> {
        let out_value = self.nodes.get(output.0).ok_or(TensorError::Index {
            op: "backward",
            detail: format!("output variable {} not on this tape", output.0),
        })?;
        if !out_value.value.is_scalar() {
            return Err(TensorError::NotScalar {
                op: "backward",
                rows: out_value.value.rows(),
                cols: out_value.value.cols(),
            });
        }
        for leaf in leaves {
            if leaf.0 >= self.nodes.len() {
                return Err(TensorError::Index {
                    op: "backward",
                    detail: format!("leaf variable {} not on this tape", leaf.0),
                });
            }
        }

        let mut adjoints: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        adjoints[output.0] = Some(Tensor::scalar(T::one()));

        for i in (0..=output.0).rev() {
            let Some(grad) = adjoints[i].take() else {
                continue;
            };
            self.accumulate_inputs(i, &grad, &mut adjoints)?;
            adjoints[i] = Some(grad);
        }

        Ok(leaves
            .iter()
            .map(|leaf| {
                adjoints[leaf.0].take().unwrap_or_else(|| {
                    let v = &self.nodes[leaf.0].value;
                    Tensor::zeros(v.rows(), v.cols())
                })
            })
            .collect())
    }

    /// Routes the adjoint of node `i` to the adjoints of its inputs.
    fn accumulate_inputs(
        &self,
        i: usize,
        grad: &Tensor<T>,
        adjoints: &mut [Option<Tensor<T>>],
    ) -> Result<(), TensorError> {
        let value = |v: Var| &self.nodes[v.0].value;
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                accumulate(adjoints, *a, grad.matmul(&value(*b).transpose())?);
                accumulate(adjoints, *b, value(*a).transpose().matmul(grad)?);
            }
            Op::Add(a, b) => {
                accumulate(adjoints, *a, reduce_like(grad, value(*a)));
                accumulate(adjoints, *b, reduce_like(grad, value(*b)));
            }
            Op::Sub(a, b) => {
                accumulate(adjoints, *a, reduce_like(grad, value(*a)));
                accumulate(adjoints, *b, reduce_like(&grad.map(|v| -v), value(*b)));
            }
            Op::Mul(a, b) => {
                let ga = broadcast_zip("mul_grad", grad, value(*b), |g, y| g * y)?;
                let gb = broadcast_zip("mul_grad", grad, value(*a), |g, x| g * x)?;
                accumulate(adjoints, *a, reduce_like(&ga, value(*a)));
                accumulate(adjoints, *b, reduce_like(&gb, value(*b)));
            }
            Op::Div(a, b) => {
                let ga = broadcast_zip("div_grad", grad, value(*b), |g, y| g / y)?;
                let gout = broadcast_zip("div_grad", grad, &self.nodes[i].value, |g, q| g * q)?;
                let gb = broadcast_zip("div_grad", &gout, value(*b), |gq, y| -(gq / y))?;
                accumulate(adjoints, *a, reduce_like(&ga, value(*a)));
                accumulate(adjoints, *b, reduce_like(&gb, value(*b)));
            }
            Op::Scale(a, factor) => {
                let f = *factor;
                accumulate(adjoints, *a, grad.map(|g| g * f));
            }
            Op::AddConst(a) => accumulate(adjoints, *a, grad.clone()),
            Op::Exp(a) => {
                let ga = broadcast_zip("exp_grad", grad, &self.nodes[i].value, |g, y| g * y)?;
                accumulate(adjoints, *a, ga);
            }
            Op::Ln(a) => {
                let ga = broadcast_zip("ln_grad", grad, value(*a), |g, x| g / x)?;
                accumulate(adjoints, *a, ga);
            }
            Op::PowC(a, exponent) => {
                let p = *exponent;
                let ga = broadcast_zip("powc_grad", grad, value(*a), |g, x| {
                    g * p * x.powf(p - T::one())
                })?;
                accumulate(adjoints, *a, ga);
            }
            Op::Leaky(a) => {
                let slope = T::from_f64(LEAKY_SLOPE).unwrap();
                let ga = broadcast_zip("leaky_grad", grad, value(*a), |g, x| {
                    if x > T::zero() {
                        g
                    } else {
                        g * slope
                    }
                })?;
                accumulate(adjoints, *a, ga);
            }
            Op::Abs(a) => {
                let ga = broadcast_zip("abs_grad", grad, value(*a), |g, x| {
                    if x > T::zero() {
                        g
                    } else if x < T::zero() {
                        -g
                    } else {
                        T::zero()
                    }
                })?;
                accumulate(adjoints, *a, ga);
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let v = value(p);
                    let mut piece = Tensor::zeros(v.rows(), v.cols());
                    for r in 0..v.rows() {
                        for c in 0..v.cols() {
                            piece.set(r, c, grad.get(r, offset + c));
                        }
                    }
                    offset += v.cols();
                    accumulate(adjoints, p, piece);
                }
            }
            Op::SliceCols(a, start) => {
                let v = value(*a);
                let mut ga = Tensor::zeros(v.rows(), v.cols());
                for r in 0..grad.rows() {
                    for c in 0..grad.cols() {
                        ga.set(r, start + c, grad.get(r, c));
                    }
                }
                accumulate(adjoints, *a, ga);
            }
            Op::GatherRows(a, indices) => {
                let v = value(*a);
                let mut ga = Tensor::zeros(v.rows(), v.cols());
                for (r, &src) in indices.iter().enumerate() {
                    for c in 0..grad.cols() {
                        let cur = ga.get(src, c);
                        ga.set(src, c, cur + grad.get(r, c));
                    }
                }
                accumulate(adjoints, *a, ga);
            }
            Op::ScatterAddRows(a, indices) => {
                let v = value(*a);
                let mut ga = Tensor::zeros(v.rows(), v.cols());
                for (r, &dst) in indices.iter().enumerate() {
                    for c in 0..v.cols() {
                        ga.set(r, c, grad.get(dst, c));
                    }
                }
                accumulate(adjoints, *a, ga);
            }
            Op::Sum(a) => {
                let v = value(*a);
                let g = grad.scalar_value()?;
                accumulate(adjoints, *a, Tensor::filled(v.rows(), v.cols(), g));
            }
            Op::SumRows(a) => {
                let v = value(*a);
                let mut ga = Tensor::zeros(v.rows(), v.cols());
                for r in 0..v.rows() {
                    let g = grad.get(r, 0);
                    for c in 0..v.cols() {
                        ga.set(r, c, g);
                    }
                }
                accumulate(adjoints, *a, ga);
            }
            Op::Mean(a) => {
                let v = value(*a);
                let g = grad.scalar_value()? / T::from_usize(v.len()).unwrap();
                accumulate(adjoints, *a, Tensor::filled(v.rows(), v.cols(), g));
            }
            Op::MeanRows(a) => {
                let v = value(*a);
                let n = T::from_usize(v.cols()).unwrap();
                let mut ga = Tensor::zeros(v.rows(), v.cols());
                for r in 0..v.rows() {
                    let g = grad.get(r, 0) / n;
                    for c in 0..v.cols() {
                        ga.set(r, c, g);
                    }
                }
                accumulate(adjoints, *a, ga);
            }
            Op::LayerNormRows(a) => {
                let x = value(*a);
                let y = &self.nodes[i].value;
                let n = T::from_usize(x.cols()).unwrap();
                let mut ga = Tensor::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    let (_, inv) = row_moments(x.row(r));
                    let g_mean = grad.row(r).iter().copied().sum::<T>() / n;
                    let gy_mean = grad
                        .row(r)
                        .iter()
                        .zip(y.row(r))
                        .map(|(&g, &yv)| g * yv)
                        .sum::<T>()
                        / n;
                    for c in 0..x.cols() {
                        let g = grad.get(r, c);
                        let yv = y.get(r, c);
                        ga.set(r, c, inv * (g - g_mean - yv * gy_mean));
                    }
                }
                accumulate(adjoints, *a, ga);
            }
            Op::Reshape(a) => {
                let v = value(*a);
                let ga = Tensor::from_vec(v.rows(), v.cols(), grad.data().to_vec())?;
                accumulate(adjoints, *a, ga);
            }
        }
        Ok(())
    }
}

fn reduce_like<T: Scalar>(grad: &Tensor<T>, operand: &Tensor<T>) -> Tensor<T> {
    reduce_to_shape(grad, operand.rows(), operand.cols())
}

fn accumulate<T: Scalar>(adjoints: &mut [Option<Tensor<T>>], var: Var, add: Tensor<T>) {
    match &mut adjoints[var.0] {
        Some(existing) => {
            for (e, a) in existing.data_mut().iter_mut().zip(add.data()) {
                *e += *a;
            }
        }
        slot => *slot = Some(add),
    }
}
