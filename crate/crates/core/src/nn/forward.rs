//! Forward passes. Padded rows are all-zero and masked out; a masked step
//! passes hidden and cell state through unchanged, so padding can never
//! change a prediction.

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

use super::matrix::Matrix;
use super::{Body, DenseParams, IntentModel, LstmParams, Variant, CNN_KERNEL};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Pad (or head-truncate) a contract's embedding matrix to `a` rows.
///
/// The mask marks real rows: a row is masked out when every entry is zero,
/// which covers both appended padding and explicitly supplied zero rows.
pub fn pad_mask(x: &EmbeddingMatrix, a: usize) -> Result<(Matrix, Vec<bool>)> {
    let b = x.m();
    let mut seq = Matrix::zeros(a, b);
    let mut mask = vec![false; a];
    for (t, m) in mask.iter_mut().enumerate().take(x.n().min(a)) {
        let row = x.row(t).as_slice();
        seq.row_mut(t).copy_from_slice(row);
        *m = row.iter().any(|&v| v != 0.0);
    }
    Ok((seq, mask))
}

/// Per-step activations cached for backpropagation through time.
pub(crate) struct LstmTrace {
    pub gate_i: Matrix,
    pub gate_f: Matrix,
    pub gate_o: Matrix,
    pub gate_g: Matrix,
    pub tanh_c: Matrix,
    pub h_prev: Matrix,
    pub c_prev: Matrix,
    pub order: Vec<usize>,
    pub final_h: Vec<f64>,
}

pub(crate) fn lstm_run(
    params: &LstmParams,
    seq: &Matrix,
    mask: &[bool],
    reverse: bool,
) -> Result<(Matrix, LstmTrace)> {
    let a = seq.rows();
    let b = seq.cols();
    let h = params.input.bias.len();
    if mask.len() != a {
        return Err(Error::LengthMismatch {
            left: mask.len(),
            right: a,
        });
    }
    if params.input.w_x.cols() != b {
        return Err(Error::DimMismatch {
            expected: params.input.w_x.cols(),
            got: b,
        });
    }

    let order: Vec<usize> = if reverse {
        (0..a).rev().collect()
    } else {
        (0..a).collect()
    };

    let mut h_states = Matrix::zeros(a, h);
    let mut trace = LstmTrace {
        gate_i: Matrix::zeros(a, h),
        gate_f: Matrix::zeros(a, h),
        gate_o: Matrix::zeros(a, h),
        gate_g: Matrix::zeros(a, h),
        tanh_c: Matrix::zeros(a, h),
        h_prev: Matrix::zeros(a, h),
        c_prev: Matrix::zeros(a, h),
        order: order.clone(),
        final_h: vec![0.0; h],
    };

    let mut h_state = vec![0.0f64; h];
    let mut c_state = vec![0.0f64; h];
    let mut pre = vec![0.0f64; h];

    for &t in &order {
        trace.h_prev.row_mut(t).copy_from_slice(&h_state);
        trace.c_prev.row_mut(t).copy_from_slice(&c_state);
        if mask[t] {
            let x_t = seq.row(t);
            let gates = [
                (&params.input, 0usize),
                (&params.forget, 1),
                (&params.output, 2),
                (&params.cell, 3),
            ];
            let mut acts = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
            for (gate, slot) in gates {
                pre.copy_from_slice(&gate.bias);
                gate.w_x.matvec_add(x_t, &mut pre);
                gate.w_h.matvec_add(&h_state, &mut pre);
                let squash: fn(f64) -> f64 = if slot == 3 { f64::tanh } else { sigmoid };
                for (dst, &z) in acts[slot].iter_mut().zip(pre.iter()) {
                    *dst = squash(z);
                }
            }
            let [i_act, f_act, o_act, g_act] = acts;
            for j in 0..h {
                c_state[j] = f_act[j] * c_state[j] + i_act[j] * g_act[j];
                let tc = c_state[j].tanh();
                trace.tanh_c.set(t, j, tc);
                h_state[j] = o_act[j] * tc;
            }
            if h_state.iter().chain(c_state.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: format!("lstm step {t}"),
                });
            }
            trace.gate_i.row_mut(t).copy_from_slice(&i_act);
            trace.gate_f.row_mut(t).copy_from_slice(&f_act);
            trace.gate_o.row_mut(t).copy_from_slice(&o_act);
            trace.gate_g.row_mut(t).copy_from_slice(&g_act);
        }
        h_states.row_mut(t).copy_from_slice(&h_state);
    }

    trace.final_h = h_state;
    Ok((h_states, trace))
}

/// Standard LSTM recurrence over a masked sequence. Returns the per-step
/// hidden states (a x h, indexed by sequence position) and the final state.
pub fn lstm_forward(
    params: &LstmParams,
    seq: &Matrix,
    mask: &[bool],
    reverse: bool,
) -> Result<(Matrix, Vec<f64>)> {
    let (states, trace) = lstm_run(params, seq, mask, reverse)?;
    Ok((states, trace.final_h))
}

/// BiLSTM encoding: the direct sum (concatenation) of the forward final
/// state and the backward final state, each of width h.
pub fn bilstm_forward(model: &IntentModel, seq: &Matrix, mask: &[bool]) -> Result<Vec<f64>> {
    let Body::Bilstm { fwd, bwd } = &model.body else {
        return Err(Error::WrongVariant {
            expected: "bilstm".to_string(),
            got: model.config.variant.to_string(),
        });
    };
    let (_, fwd_trace) = lstm_run(fwd, seq, mask, false)?;
    let (_, bwd_trace) = lstm_run(bwd, seq, mask, true)?;
    let mut out = fwd_trace.final_h;
    out.extend_from_slice(&bwd_trace.final_h);
    Ok(out)
}

pub(crate) struct CnnTrace {
    /// Pre-activation responses, a x h.
    pub z: Matrix,
    /// Index of the max-pool winner per filter; None when nothing is masked
    /// in (the pooled value is then 0).
    pub argmax: Vec<Option<usize>>,
}

pub(crate) fn cnn_run(
    model: &IntentModel,
    seq: &Matrix,
    mask: &[bool],
) -> Result<(Vec<f64>, CnnTrace)> {
    let Body::Cnn { conv } = &model.body else {
        return Err(Error::WrongVariant {
            expected: "cnn".to_string(),
            got: model.config.variant.to_string(),
        });
    };
    let a = seq.rows();
    let b = seq.cols();
    let h = conv.bias.len();
    if mask.len() != a {
        return Err(Error::LengthMismatch {
            left: mask.len(),
            right: a,
        });
    }
    if conv.w.cols() != CNN_KERNEL * b {
        return Err(Error::DimMismatch {
            expected: conv.w.cols(),
            got: CNN_KERNEL * b,
        });
    }

    // "Same" zero padding: window positions t-1, t, t+1.
    let mut z = Matrix::zeros(a, h);
    for t in 0..a {
        for k in 0..h {
            let w_row = conv.w.row(k);
            let mut acc = conv.bias[k];
            for d in 0..CNN_KERNEL {
                let tt = t as isize + d as isize - 1;
                if tt < 0 || tt >= a as isize {
                    continue;
                }
                let x_row = seq.row(tt as usize);
                let w_seg = &w_row[d * b..(d + 1) * b];
                for (wv, xv) in w_seg.iter().zip(x_row) {
                    acc += wv * xv;
                }
            }
            z.set(t, k, acc);
        }
    }

    // ReLU then max-pool over real (masked-in) positions only.
    let mut pooled = vec![0.0f64; h];
    let mut argmax = vec![None; h];
    for k in 0..h {
        let mut best: Option<(usize, f64)> = None;
        for (t, &live) in mask.iter().enumerate() {
            if !live {
                continue;
            }
            let r = z.at(t, k).max(0.0);
            if best.is_none_or(|(_, bv)| r > bv) {
                best = Some((t, r));
            }
        }
        if let Some((t, v)) = best {
            pooled[k] = v;
            argmax[k] = Some(t);
        }
    }
    Ok((pooled, CnnTrace { z, argmax }))
}

/// CNN baseline encoding: width-3 same-padded convolution over the function
/// axis, ReLU, then a masked global max-pool.
pub fn cnn_forward(model: &IntentModel, seq: &Matrix, mask: &[bool]) -> Result<Vec<f64>> {
    Ok(cnn_run(model, seq, mask)?.0)
}

/// Sigmoid dense head: one independent binary probability per label.
pub fn dense_sigmoid(head: &DenseParams, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != head.w.cols() {
        return Err(Error::DimMismatch {
            expected: head.w.cols(),
            got: h.len(),
        });
    }
    let mut z = head.bias.clone();
    head.w.matvec_add(h, &mut z);
    Ok(z.into_iter().map(sigmoid).collect())
}

/// Full inference path: pad/mask, body forward, sigmoid head.
pub fn predict(model: &IntentModel, x: &EmbeddingMatrix) -> Result<Vec<f64>> {
    if x.m() != model.config.feature_dim {
        return Err(Error::DimMismatch {
            expected: model.config.feature_dim,
            got: x.m(),
        });
    }
    let (seq, mask) = pad_mask(x, model.config.max_functions)?;
    let features = body_forward(model, &seq, &mask)?;
    dense_sigmoid(&model.head, &features)
}

pub(crate) fn body_forward(model: &IntentModel, seq: &Matrix, mask: &[bool]) -> Result<Vec<f64>> {
    match model.config.variant {
        Variant::Bilstm => bilstm_forward(model, seq, mask),
        Variant::Lstm => {
            let Body::Lstm { fwd } = &model.body else {
                return Err(Error::WrongVariant {
                    expected: "lstm".to_string(),
                    got: model.config.variant.to_string(),
                });
            };
            let (_, trace) = lstm_run(fwd, seq, mask, false)?;
            Ok(trace.final_h)
        }
        Variant::Cnn => cnn_forward(model, seq, mask),
    }
}
