//! Finite-difference verification of every primitive's adjoint over
//! randomized shapes and values, plus structural adjoint properties and
//! input-immutability checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorad::{gradient_check, Tape, Tensor, TensorError, Var};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor<f64> {
    let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

/// Values with magnitude in `[lo, hi]` and random sign, for functions with
/// a kink or pole at zero.
fn tensor_off_zero(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
) -> Tensor<f64> {
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(lo..hi) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

/// One operand shape of a broadcast pair: each extent is kept or dropped
/// to 1.
fn broadcast_operand(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> (usize, usize) {
    (
        if rng.gen_bool(0.3) { 1 } else { rows },
        if rng.gen_bool(0.3) { 1 } else { cols },
    )
}

/// Projects a tensor to a scalar through a fixed varied weighting so that
/// gradient signal reaches every entry.
fn readout(tape: &mut Tape<f64>, v: Var) -> Result<Var, TensorError> {
    let (rows, cols) = {
        let val = tape.value(v);
        (val.rows(), val.cols())
    };
    let data: Vec<f64> = (0..rows * cols)
        .map(|i| (1.0 + 0.1 * i as f64) * if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let w = tape.leaf(Tensor::from_vec(rows, cols, data)?);
    let weighted = tape.mul(v, w)?;
    tape.sum(weighted)
}

fn assert_grad<F>(leaves: &[Tensor<f64>], tol: f64, f: F)
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var, TensorError>,
{
    let err = gradient_check(f, leaves, 1e-5).unwrap();
    assert!(err < tol, "relative error {err} exceeds {tol}");
}

#[test]
fn matmul_gradients() {
    for seed in 0..100 {
        let mut r = rng(seed);
        let (m, k, n) = (r.gen_range(1..=4), r.gen_range(1..=4), r.gen_range(1..=4));
        let a = tensor(&mut r, m, k, -2.0, 2.0);
        let b = tensor(&mut r, k, n, -2.0, 2.0);
        assert_grad(&[a, b], 1e-4, |t, v| {
            let p = t.matmul(v[0], v[1])?;
            readout(t, p)
        });
    }
}

#[test]
fn add_and_sub_gradients() {
    for seed in 0..100 {
        let mut r = rng(1000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let (ar, ac) = broadcast_operand(&mut r, rows, cols);
        let (br, bc) = broadcast_operand(&mut r, rows, cols);
        let a = tensor(&mut r, ar, ac, -2.0, 2.0);
        let b = tensor(&mut r, br, bc, -2.0, 2.0);
        let op_is_add = seed % 2 == 0;
        assert_grad(&[a, b], 1e-4, move |t, v| {
            let s = if op_is_add {
                t.add(v[0], v[1])?
            } else {
                t.sub(v[0], v[1])?
            };
            readout(t, s)
        });
    }
}

#[test]
fn mul_and_div_gradients() {
    for seed in 0..100 {
        let mut r = rng(2000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let (ar, ac) = broadcast_operand(&mut r, rows, cols);
        let (br, bc) = broadcast_operand(&mut r, rows, cols);
        let a = tensor(&mut r, ar, ac, -2.0, 2.0);
        let b = tensor_off_zero(&mut r, br, bc, 0.5, 2.5);
        let op_is_mul = seed % 2 == 0;
        assert_grad(&[a, b], 1e-4, move |t, v| {
            let s = if op_is_mul {
                t.mul(v[0], v[1])?
            } else {
                t.div(v[0], v[1])?
            };
            readout(t, s)
        });
    }
}

#[test]
fn scale_and_add_const_gradients() {
    for seed in 0..100 {
        let mut r = rng(3000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = tensor(&mut r, rows, cols, -2.0, 2.0);
        let factor = r.gen_range(-2.0..2.0);
        let offset = r.gen_range(-2.0..2.0);
        assert_grad(&[a], 1e-4, move |t, v| {
            let scaled = t.scale(v[0], factor)?;
            let shifted = t.add_const(scaled, offset)?;
            readout(t, shifted)
        });
    }
}

#[test]
fn exp_gradients() {
    for seed in 0..100 {
        let mut r = rng(4000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = tensor(&mut r, rows, cols, -2.0, 2.0);
        assert_grad(&[a], 1e-6, |t, v| {
            let e = t.exp(v[0])?;
            readout(t, e)
        });
    }
}

#[test]
fn ln_gradients() {
    for seed in 0..100 {
        let mut r = rng(5000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = tensor(&mut r, rows, cols, 0.2, 3.0);
        assert_grad(&[a], 1e-4, |t, v| {
            let l = t.ln(v[0])?;
            readout(t, l)
        });
    }
}

#[test]
fn powc_gradients() {
    for seed in 0..100 {
        let mut r = rng(6000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = tensor(&mut r, rows, cols, 0.3, 2.5);
        let p = r.gen_range(-2.0..3.0);
        assert_grad(&[a], 1e-4, move |t, v| {
            let y = t.powc(v[0], p)?;
            readout(t, y)
        });
    }
}

#[test]
fn leaky_relu_gradients() {
    for seed in 0..100 {
        let mut r = rng(7000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = tensor_off_zero(&mut r, rows, cols, 0.1, 2.0);
        assert_grad(&[a], 1e-6, |t, v| {
            let y = t.leaky_relu(v[0])?;
            readout(t, y)
        });
    }
}

#[test]
fn abs_gradients() {
    for seed in 0..100 {
        let mut r = rng(8000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = tensor_off_zero(&mut r, rows, cols, 0.1, 2.0);
        assert_grad(&[a], 1e-4, |t, v| {
            let y = t.abs(v[0])?;
            readout(t, y)
        });
    }
}

#[test]
fn concat_and_slice_gradients() {
    for seed in 0..100 {
        let mut r = rng(9000 + seed);
        let rows = r.gen_range(1..=4);
        let (wa, wb, wc) = (r.gen_range(1..=3), r.gen_range(1..=3), r.gen_range(1..=3));
        let a = tensor(&mut r, rows, wa, -2.0, 2.0);
        let b = tensor(&mut r, rows, wb, -2.0, 2.0);
        let c = tensor(&mut r, rows, wc, -2.0, 2.0);
        let total = a.cols() + b.cols() + c.cols();
        let start = r.gen_range(0..total);
        let end = r.gen_range(start + 1..=total);
        assert_grad(&[a, b, c], 1e-4, move |t, v| {
            let cat = t.concat_cols(&[v[0], v[1], v[2]])?;
            let piece = t.slice_cols(cat, start, end)?;
            readout(t, piece)
        });
    }
}

#[test]
fn gather_and_scatter_gradients() {
    for seed in 0..100 {
        let mut r = rng(10_000 + seed);
        let rows = r.gen_range(2..=5);
        let cols = r.gen_range(1..=4);
        let a = tensor(&mut r, rows, cols, -2.0, 2.0);
        let n_picks = r.gen_range(1..=6);
        let picks: Vec<usize> = (0..n_picks).map(|_| r.gen_range(0..rows)).collect();
        let out_rows = r.gen_range(2..=4);
        let targets: Vec<usize> = (0..picks.len()).map(|_| r.gen_range(0..out_rows)).collect();
        assert_grad(&[a], 1e-4, move |t, v| {
            let picked = t.gather_rows(v[0], &picks)?;
            let spread = t.scatter_add_rows(picked, &targets, out_rows)?;
            readout(t, spread)
        });
    }
}

#[test]
fn reduction_gradients() {
    for seed in 0..100 {
        let mut r = rng(11_000 + seed);
        let (rows, cols) = (r.gen_range(1..=5), r.gen_range(1..=5));
        let a = tensor(&mut r, rows, cols, -2.0, 2.0);
        let which = seed % 4;
        assert_grad(&[a], 1e-4, move |t, v| {
            let reduced = match which {
                0 => t.sum(v[0])?,
                1 => t.mean(v[0])?,
                2 => t.sum_rows(v[0])?,
                _ => t.mean_rows(v[0])?,
            };
            readout(t, reduced)
        });
    }
}

#[test]
fn layer_norm_gradients() {
    for seed in 0..100 {
        let mut r = rng(12_000 + seed);
        let rows = r.gen_range(1..=4);
        let cols = r.gen_range(2..=6);
        let a = tensor(&mut r, rows, cols, -2.0, 2.0);
        let gain = tensor(&mut r, 1, cols, 0.5, 1.5);
        let offset = tensor(&mut r, 1, cols, -0.5, 0.5);
        assert_grad(&[a, gain, offset], 1e-4, |t, v| {
            let y = t.layer_norm(v[0], v[1], v[2])?;
            readout(t, y)
        });
    }
}

#[test]
fn reshape_gradients() {
    for seed in 0..100 {
        let mut r = rng(13_000 + seed);
        let rows = r.gen_range(1..=4);
        let cols = r.gen_range(1..=4);
        let a = tensor(&mut r, rows, cols, -2.0, 2.0);
        assert_grad(&[a], 1e-4, move |t, v| {
            let flat = t.reshape(v[0], 1, rows * cols)?;
            readout(t, flat)
        });
    }
}

#[test]
fn layer_norm_of_random_3x8_is_tight() {
    let mut r = rng(99);
    let a = tensor(&mut r, 3, 8, -2.0, 2.0);
    let err = gradient_check(
        |t, v| {
            let y = t.layer_norm_rows(v[0])?;
            readout(t, y)
        },
        &[a],
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-5, "relative error {err}");
}

#[test]
fn leaky_away_from_zero_is_tight() {
    let mut r = rng(100);
    let a = tensor_off_zero(&mut r, 4, 4, 0.1, 2.0);
    let err = gradient_check(
        |t, v| {
            let y = t.leaky_relu(v[0])?;
            readout(t, y)
        },
        &[a],
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn exp_on_moderate_inputs_is_tight() {
    let mut r = rng(101);
    let a = tensor(&mut r, 4, 4, -2.0, 2.0);
    let err = gradient_check(
        |t, v| {
            let y = t.exp(v[0])?;
            readout(t, y)
        },
        &[a],
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-6, "relative error {err}");
}

#[test]
fn concat_adjoint_splits_gradient_exactly() {
    for seed in 0..20 {
        let mut r = rng(14_000 + seed);
        let rows = r.gen_range(1..=4);
        let (wa, wb) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let a = tensor(&mut r, rows, wa, -2.0, 2.0);
        let b = tensor(&mut r, rows, wb, -2.0, 2.0);
        let weights = tensor(&mut r, rows, wa + wb, -2.0, 2.0);

        let mut tape = Tape::new();
        let va = tape.leaf(a.clone());
        let vb = tape.leaf(b.clone());
        let cat = tape.concat_cols(&[va, vb]).unwrap();
        let w = tape.leaf(weights.clone());
        let weighted = tape.mul(cat, w).unwrap();
        let out = tape.sum(weighted).unwrap();
        let grads = tape.backward(out, &[va, vb]).unwrap();

        for row in 0..rows {
            for c in 0..a.cols() {
                assert_eq!(grads[0].get(row, c), weights.get(row, c));
            }
            for c in 0..b.cols() {
                assert_eq!(grads[1].get(row, c), weights.get(row, a.cols() + c));
            }
        }
    }
}

#[test]
fn scatter_adjoint_equals_gather_of_downstream_gradient() {
    for seed in 0..20 {
        let mut r = rng(15_000 + seed);
        let rows = r.gen_range(1..=5);
        let cols = r.gen_range(1..=4);
        let out_rows = r.gen_range(1..=4);
        let a = tensor(&mut r, rows, cols, -2.0, 2.0);
        let indices: Vec<usize> = (0..rows).map(|_| r.gen_range(0..out_rows)).collect();
        let downstream = tensor(&mut r, out_rows, cols, -2.0, 2.0);

        let mut tape = Tape::new();
        let va = tape.leaf(a);
        let spread = tape.scatter_add_rows(va, &indices, out_rows).unwrap();
        let w = tape.leaf(downstream.clone());
        let weighted = tape.mul(spread, w).unwrap();
        let out = tape.sum(weighted).unwrap();
        let grads = tape.backward(out, &[va]).unwrap();

        for (row, &dst) in indices.iter().enumerate() {
            for c in 0..cols {
                assert_eq!(grads[0].get(row, c), downstream.get(dst, c));
            }
        }
    }
}

#[test]
fn no_primitive_mutates_its_inputs() {
    let mut r = rng(16_000);
    let a = tensor(&mut r, 3, 4, 0.3, 2.0);
    let b = tensor(&mut r, 3, 4, 0.3, 2.0);
    let bits = |t: &Tensor<f64>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let (a_bits, b_bits) = (bits(&a), bits(&b));

    let mut tape = Tape::new();
    let va = tape.leaf(a);
    let vb = tape.leaf(b);
    let sum = tape.add(va, vb).unwrap();
    let diff = tape.sub(va, vb).unwrap();
    let prod = tape.mul(va, vb).unwrap();
    let quot = tape.div(va, vb).unwrap();
    let scaled = tape.scale(va, 1.7).unwrap();
    let shifted = tape.add_const(va, -0.4).unwrap();
    let e = tape.exp(va).unwrap();
    let l = tape.ln(va).unwrap();
    let p = tape.powc(va, 1.3).unwrap();
    let relu = tape.leaky_relu(va).unwrap();
    let mag = tape.abs(va).unwrap();
    let cat = tape.concat_cols(&[va, vb]).unwrap();
    let sliced = tape.slice_cols(cat, 1, 5).unwrap();
    let gathered = tape.gather_rows(va, &[0, 2, 2]).unwrap();
    let spread = tape.scatter_add_rows(gathered, &[1, 0, 1], 2).unwrap();
    let transposedish = tape.reshape(va, 4, 3).unwrap();
    let mm = tape.matmul(va, transposedish).unwrap();
    let normed = tape.layer_norm_rows(va).unwrap();
    let sr = tape.sum_rows(normed).unwrap();
    let mr = tape.mean_rows(quot).unwrap();
    let m = tape.mean(prod).unwrap();
    for v in [sum, diff, scaled, shifted, e, l, p, relu, mag, sliced, spread, mm, sr, mr] {
        let s = tape.sum(v).unwrap();
        let total = tape.add(s, m).unwrap();
        tape.backward(total, &[va, vb]).unwrap();
    }

    assert_eq!(bits(tape.value(va)), a_bits);
    assert_eq!(bits(tape.value(vb)), b_bits);
}

#[test]
fn forward_and_backward_are_deterministic() {
    let build = || {
        let mut r = rng(17_000);
        let a = tensor(&mut r, 4, 3, -1.0, 1.0);
        let w = tensor(&mut r, 3, 3, -1.0, 1.0);
        let mut tape = Tape::new();
        let va = tape.leaf(a);
        let vw = tape.leaf(w);
        let h = tape.matmul(va, vw).unwrap();
        let act = tape.leaky_relu(h).unwrap();
        let normed = tape.layer_norm_rows(act).unwrap();
        let out = tape.mean(normed).unwrap();
        let grads = tape.backward(out, &[va, vw]).unwrap();
        let out_bits = tape.value(out).data()[0].to_bits();
        let grad_bits: Vec<u64> = grads
            .iter()
            .flat_map(|g| g.data().iter().map(|v| v.to_bits()))
            .collect();
        (out_bits, grad_bits)
    };
    assert_eq!(build(), build());
}
