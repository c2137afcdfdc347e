use netcore::Scalar;

use crate::error::TensorError;
use crate::tensor::{broadcast_shape, broadcast_zip, Tensor};

/// Negative-side slope of the leaky rectifier activation.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Epsilon added to the per-row variance inside layer normalization.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Handle to a value recorded on a [`Tape`]. Handles are only meaningful on
/// the tape that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

#[derive(Debug)]
pub(crate) enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, T),
    AddConst(Var),
    Exp(Var),
    Ln(Var),
    PowC(Var, T),
    Leaky(Var),
    Abs(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    ScatterAddRows(Var, Vec<usize>),
    Sum(Var),
    SumRows(Var),
    Mean(Var),
    MeanRows(Var),
    LayerNormRows(Var),
    Reshape(Var),
}

#[derive(Debug)]
pub(crate) struct Node<T> {
    pub(crate) op: Op<T>,
    pub(crate) value: Tensor<T>,
}

/// Eagerly evaluated record of primitive applications. Each operation
/// computes its value immediately and appends one node, so the list is
/// topologically ordered by construction and [`Tape::backward`] can sweep
/// it in reverse.
#[derive(Debug, Default)]
pub struct Tape<T> {
    pub(crate) nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    /// Number of recorded values, leaves included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers an input tensor. Leaves take part in differentiation when
    /// passed to [`Tape::backward`]; otherwise they act as constants.
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(Op::Leaf, value)
    }

    /// The computed value behind a handle.
    ///
    /// Panics if the handle comes from a different tape and is out of
    /// range; recorded handles always resolve.
    pub fn value(&self, var: Var) -> &Tensor<T> {
        &self.nodes[var.0].value
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    fn check(&self, op: &'static str, var: Var) -> Result<&Tensor<T>, TensorError> {
        self.nodes
            .get(var.0)
            .map(|n| &n.value)
            .ok_or(TensorError::Index {
                op,
                detail: format!("variable {} not on this tape", var.0),
            })
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let va = self.check("matmul", a)?;
        let vb = self.check("matmul", b)?;
        let value = va.matmul(vb)?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = broadcast_zip("add", self.check("add", a)?, self.check("add", b)?, |x, y| {
            x + y
        })?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = broadcast_zip("sub", self.check("sub", a)?, self.check("sub", b)?, |x, y| {
            x - y
        })?;
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = broadcast_zip("mul", self.check("mul", a)?, self.check("mul", b)?, |x, y| {
            x * y
        })?;
        Ok(self.push(Op::Mul(a, b), value))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let value = broadcast_zip("div", self.check("div", a)?, self.check("div", b)?, |x, y| {
            x / y
        })?;
        Ok(self.push(Op::Div(a, b), value))
    }

    /// Multiplies every element by a constant.
    pub fn scale(&mut self, a: Var, factor: T) -> Result<Var, TensorError> {
        let value = self.check("scale", a)?.map(|v| v * factor);
        Ok(self.push(Op::Scale(a, factor), value))
    }

    /// Adds a constant to every element.
    pub fn add_const(&mut self, a: Var, offset: T) -> Result<Var, TensorError> {
        let value = self.check("add_const", a)?.map(|v| v + offset);
        Ok(self.push(Op::AddConst(a), value))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var, TensorError> {
        let value = self.check("exp", a)?.map(|v| v.exp());
        Ok(self.push(Op::Exp(a), value))
    }

    pub fn ln(&mut self, a: Var) -> Result<Var, TensorError> {
        let value = self.check("ln", a)?.map(|v| v.ln());
        Ok(self.push(Op::Ln(a), value))
    }

    /// Elementwise power with a constant exponent.
    pub fn powc(&mut self, a: Var, exponent: T) -> Result<Var, TensorError> {
        let value = self.check("powc", a)?.map(|v| v.powf(exponent));
        Ok(self.push(Op::PowC(a, exponent), value))
    }

    pub fn leaky_relu(&mut self, a: Var) -> Result<Var, TensorError> {
        let slope = T::from_f64(LEAKY_SLOPE).unwrap();
        let value = self
            .check("leaky_relu", a)?
            .map(|v| if v > T::zero() { v } else { v * slope });
        Ok(self.push(Op::Leaky(a), value))
    }

    pub fn abs(&mut self, a: Var) -> Result<Var, TensorError> {
        let value = self.check("abs", a)?.map(|v| v.abs());
        Ok(self.push(Op::Abs(a), value))
    }

    /// Concatenates tensors with equal row counts along the column axis.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::ShapeMismatch {
                op: "concat_cols",
                detail: "no operands".to_string(),
            });
        }
        let rows = self.check("concat_cols", parts[0])?.rows();
        let mut cols = 0;
        for &p in parts {
            let v = self.check("concat_cols", p)?;
            if v.rows() != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    detail: format!("row counts {} and {}", rows, v.rows()),
                });
            }
            cols += v.cols();
        }
        let mut value = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let v = &self.nodes[p.0].value;
            for r in 0..rows {
                for c in 0..v.cols() {
                    value.set(r, offset + c, v.get(r, c));
                }
            }
            offset += v.cols();
        }
        Ok(self.push(Op::ConcatCols(parts.to_vec()), value))
    }

    /// Copies the half-open column range `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var, TensorError> {
        let v = self.check("slice_cols", a)?;
        if start > end || end > v.cols() {
            return Err(TensorError::Index {
                op: "slice_cols",
                detail: format!("range {start}..{end} of {} columns", v.cols()),
            });
        }
        let mut value = Tensor::zeros(v.rows(), end - start);
        for r in 0..v.rows() {
            for c in start..end {
                value.set(r, c - start, v.get(r, c));
            }
        }
        Ok(self.push(Op::SliceCols(a, start), value))
    }

    /// Builds a tensor whose row i is row `indices[i]` of the input.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var, TensorError> {
        let v = self.check("gather_rows", a)?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= v.rows()) {
            return Err(TensorError::Index {
                op: "gather_rows",
                detail: format!("row {bad} of {}", v.rows()),
            });
        }
        let mut value = Tensor::zeros(indices.len(), v.cols());
        for (r, &src) in indices.iter().enumerate() {
            for c in 0..v.cols() {
                value.set(r, c, v.get(src, c));
            }
        }
        Ok(self.push(Op::GatherRows(a, indices.to_vec()), value))
    }

    /// Adds row i of the input into row `indices[i]` of a fresh zero tensor
    /// with `out_rows` rows; duplicate indices accumulate.
    pub fn scatter_add_rows(
        &mut self,
        a: Var,
        indices: &[usize],
        out_rows: usize,
    ) -> Result<Var, TensorError> {
        let v = self.check("scatter_add_rows", a)?;
        if indices.len() != v.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "scatter_add_rows",
                detail: format!("{} indices for {} rows", indices.len(), v.rows()),
            });
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= out_rows) {
            return Err(TensorError::Index {
                op: "scatter_add_rows",
                detail: format!("target row {bad} of {out_rows}"),
            });
        }
        let mut value = Tensor::zeros(out_rows, v.cols());
        for (r, &dst) in indices.iter().enumerate() {
            for c in 0..v.cols() {
                let cur = value.get(dst, c);
                value.set(dst, c, cur + v.get(r, c));
            }
        }
        Ok(self.push(Op::ScatterAddRows(a, indices.to_vec()), value))
    }

    /// Sum of all elements as a 1x1 tensor.
    pub fn sum(&mut self, a: Var) -> Result<Var, TensorError> {
        let v = self.check("sum", a)?;
        let total = v.data().iter().copied().sum();
        Ok(self.push(Op::Sum(a), Tensor::scalar(total)))
    }

    /// Per-row sums as a single-column tensor.
    pub fn sum_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let v = self.check("sum_rows", a)?;
        let sums: Vec<T> = (0..v.rows())
            .map(|r| v.row(r).iter().copied().sum())
            .collect();
        Ok(self.push(Op::SumRows(a), Tensor::column(&sums)))
    }

    /// Mean of all elements as a 1x1 tensor.
    pub fn mean(&mut self, a: Var) -> Result<Var, TensorError> {
        let v = self.check("mean", a)?;
        if v.is_empty() {
            return Err(TensorError::ShapeMismatch {
                op: "mean",
                detail: "empty tensor has no mean".to_string(),
            });
        }
        let n = T::from_usize(v.len()).unwrap();
        let total: T = v.data().iter().copied().sum();
        Ok(self.push(Op::Mean(a), Tensor::scalar(total / n)))
    }

    /// Per-row means as a single-column tensor.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let v = self.check("mean_rows", a)?;
        if v.cols() == 0 {
            return Err(TensorError::ShapeMismatch {
                op: "mean_rows",
                detail: "zero-width rows have no mean".to_string(),
            });
        }
        let n = T::from_usize(v.cols()).unwrap();
        let means: Vec<T> = (0..v.rows())
            .map(|r| v.row(r).iter().copied().sum::<T>() / n)
            .collect();
        Ok(self.push(Op::MeanRows(a), Tensor::column(&means)))
    }

    /// Normalizes each row to zero mean and unit variance with
    /// [`LAYER_NORM_EPS`] inside the square root. Gain and offset are
    /// composed outside; see [`Tape::layer_norm`].
    pub fn layer_norm_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let v = self.check("layer_norm_rows", a)?;
        if v.cols() == 0 {
            return Err(TensorError::ShapeMismatch {
                op: "layer_norm_rows",
                detail: "zero-width rows cannot be normalized".to_string(),
            });
        }
        let mut value = Tensor::zeros(v.rows(), v.cols());
        for r in 0..v.rows() {
            let (mu, inv) = row_moments(v.row(r));
            for c in 0..v.cols() {
                value.set(r, c, (v.get(r, c) - mu) * inv);
            }
        }
        Ok(self.push(Op::LayerNormRows(a), value))
    }

    /// Layer normalization over the last axis with learnable gain and
    /// offset, both shaped 1 x cols.
    pub fn layer_norm(&mut self, a: Var, gain: Var, offset: Var) -> Result<Var, TensorError> {
        let cols = self.check("layer_norm", a)?.cols();
        for (name, var) in [("gain", gain), ("offset", offset)] {
            let v = self.check("layer_norm", var)?;
            if v.shape() != (1, cols) {
                return Err(TensorError::ShapeMismatch {
                    op: "layer_norm",
                    detail: format!("{name} is {}x{}, want 1x{cols}", v.rows(), v.cols()),
                });
            }
        }
        let normalized = self.layer_norm_rows(a)?;
        let scaled = self.mul(normalized, gain)?;
        self.add(scaled, offset)
    }

    /// Reinterprets the elements under a new shape with equal size.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var, TensorError> {
        let v = self.check("reshape", a)?;
        if v.len() != rows * cols {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                detail: format!("{} elements into {rows}x{cols}", v.len()),
            });
        }
        let value = Tensor::from_vec(rows, cols, v.data().to_vec())?;
        Ok(self.push(Op::Reshape(a), value))
    }

    /// Shape a binary broadcast would produce, without recording anything.
    pub fn broadcast_result(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
    ) -> Result<(usize, usize), TensorError> {
        broadcast_shape(op, self.check(op, a)?.shape(), self.check(op, b)?.shape())
    }
}

/// Mean and inverse standard deviation of one row, shared by the forward
/// and backward layer-norm passes.
pub(crate) fn row_moments<T: Scalar>(row: &[T]) -> (T, T) {
    let n = T::from_usize(row.len()).unwrap();
    let mu = row.iter().copied().sum::<T>() / n;
    let var = row
        .iter()
        .map(|&v| (v - mu) * (v - mu))
        .sum::<T>()
        / n;
    let eps = T::from_f64(LAYER_NORM_EPS).unwrap();
    (mu, (var + eps).sqrt().recip())
}
