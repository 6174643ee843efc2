//! Exact analytic gradients: backpropagation through time for the LSTM
//! directions, max-pool routing for the CNN, and the sigmoid/BCE head.
//! Masked timesteps are identity steps and contribute zero gradient.

use crate::error::{Error, Result};

use super::forward::{body_forward, cnn_run, dense_sigmoid, lstm_run, LstmTrace};
use super::loss::bce_loss;
use super::matrix::Matrix;
use super::{Body, GateParams, IntentModel, LstmParams, CNN_KERNEL};

/// Loss of one sample without gradients (used by the finite-difference
/// oracle and the training loop's divergence check).
pub fn sample_loss(
    model: &IntentModel,
    seq: &Matrix,
    mask: &[bool],
    target: &[f64],
    clip: f64,
) -> Result<f64> {
    let features = body_forward(model, seq, mask)?;
    let y = dense_sigmoid(&model.head, &features)?;
    bce_loss(&y, target, clip)
}

/// Loss and exact gradients of every parameter for one sample.
pub fn backward(
    model: &IntentModel,
    seq: &Matrix,
    mask: &[bool],
    target: &[f64],
    clip: f64,
) -> Result<(f64, IntentModel)> {
    if target.len() != model.config.labels {
        return Err(Error::LengthMismatch {
            left: target.len(),
            right: model.config.labels,
        });
    }

    let mut grads = model.zeros_like();

    // Forward with traces.
    #[allow(clippy::large_enum_variant)]
    enum BodyTrace {
        Bilstm(LstmTrace, LstmTrace),
        Lstm(LstmTrace),
        Cnn(super::forward::CnnTrace),
    }
    let (features, body_trace) = match &model.body {
        Body::Bilstm { fwd, bwd } => {
            let (_, ft) = lstm_run(fwd, seq, mask, false)?;
            let (_, bt) = lstm_run(bwd, seq, mask, true)?;
            let mut f = ft.final_h.clone();
            f.extend_from_slice(&bt.final_h);
            (f, BodyTrace::Bilstm(ft, bt))
        }
        Body::Lstm { fwd } => {
            let (_, t) = lstm_run(fwd, seq, mask, false)?;
            (t.final_h.clone(), BodyTrace::Lstm(t))
        }
        Body::Cnn { .. } => {
            let (pooled, t) = cnn_run(model, seq, mask)?;
            (pooled, BodyTrace::Cnn(t))
        }
    };
    let y = dense_sigmoid(&model.head, &features)?;
    let loss = bce_loss(&y, target, clip)?;

    // Head: dL/dz_i through the clipped BCE and the sigmoid.
    let l = y.len() as f64;
    let mut dz = vec![0.0f64; y.len()];
    for (i, (&yi, &ti)) in y.iter().zip(target).enumerate() {
        let p = yi.clamp(clip, 1.0 - clip);
        if yi != p {
            // The clip is flat here; no gradient flows.
            continue;
        }
        let dl_dy = (-(ti / p) + (1.0 - ti) / (1.0 - p)) / l;
        dz[i] = dl_dy * yi * (1.0 - yi);
    }
    grads.head.w.add_outer(&dz, &features);
    for (g, d) in grads.head.bias.iter_mut().zip(&dz) {
        *g += d;
    }
    let mut d_features = vec![0.0f64; features.len()];
    model.head.w.tr_matvec_add(&dz, &mut d_features);

    // Body.
    match (&model.body, &mut grads.body, body_trace) {
        (
            Body::Bilstm { fwd, bwd },
            Body::Bilstm {
                fwd: gfwd,
                bwd: gbwd,
            },
            BodyTrace::Bilstm(ft, bt),
        ) => {
            let h = model.config.hidden;
            lstm_backward(fwd, gfwd, seq, mask, &ft, &d_features[..h])?;
            lstm_backward(bwd, gbwd, seq, mask, &bt, &d_features[h..])?;
        }
        (Body::Lstm { fwd }, Body::Lstm { fwd: gfwd }, BodyTrace::Lstm(t)) => {
            lstm_backward(fwd, gfwd, seq, mask, &t, &d_features)?;
        }
        (Body::Cnn { .. }, Body::Cnn { conv: gconv }, BodyTrace::Cnn(t)) => {
            let b = seq.cols();
            for (k, &am) in t.argmax.iter().enumerate() {
                let Some(tstar) = am else { continue };
                if t.z.at(tstar, k) <= 0.0 {
                    continue; // ReLU clamped the winner to zero
                }
                let d = d_features[k];
                if d == 0.0 {
                    continue;
                }
                gconv.bias[k] += d;
                let w_row = gconv.w.row_mut(k);
                for dk in 0..CNN_KERNEL {
                    let tt = tstar as isize + dk as isize - 1;
                    if tt < 0 || tt >= seq.rows() as isize {
                        continue;
                    }
                    let x_row = seq.row(tt as usize);
                    for (wg, xv) in w_row[dk * b..(dk + 1) * b].iter_mut().zip(x_row) {
                        *wg += d * xv;
                    }
                }
            }
        }
        _ => unreachable!("grads mirror the model body"),
    }

    Ok((loss, grads))
}

/// BPTT through one LSTM direction. `d_final` is the gradient flowing into
/// the direction's final hidden state.
fn lstm_backward(
    params: &LstmParams,
    grads: &mut LstmParams,
    seq: &Matrix,
    mask: &[bool],
    trace: &LstmTrace,
    d_final: &[f64],
) -> Result<()> {
    let h = params.input.bias.len();
    if d_final.len() != h {
        return Err(Error::LengthMismatch {
            left: d_final.len(),
            right: h,
        });
    }
    let mut dh = d_final.to_vec();
    let mut dc = vec![0.0f64; h];

    let mut dzi = vec![0.0f64; h];
    let mut dzf = vec![0.0f64; h];
    let mut dzo = vec![0.0f64; h];
    let mut dzg = vec![0.0f64; h];

    for &t in trace.order.iter().rev() {
        if !mask[t] {
            continue; // identity step: dh and dc pass through unchanged
        }
        let i_act = trace.gate_i.row(t);
        let f_act = trace.gate_f.row(t);
        let o_act = trace.gate_o.row(t);
        let g_act = trace.gate_g.row(t);
        let tanh_c = trace.tanh_c.row(t);
        let c_prev = trace.c_prev.row(t);
        let h_prev = trace.h_prev.row(t);
        let x_t = seq.row(t);

        for j in 0..h {
            let do_ = dh[j] * tanh_c[j];
            let dc_total = dc[j] + dh[j] * o_act[j] * (1.0 - tanh_c[j] * tanh_c[j]);
            let di = dc_total * g_act[j];
            let df = dc_total * c_prev[j];
            let dg = dc_total * i_act[j];
            dzi[j] = di * i_act[j] * (1.0 - i_act[j]);
            dzf[j] = df * f_act[j] * (1.0 - f_act[j]);
            dzo[j] = do_ * o_act[j] * (1.0 - o_act[j]);
            dzg[j] = dg * (1.0 - g_act[j] * g_act[j]);
            dc[j] = dc_total * f_act[j];
        }

        accumulate_gate(&mut grads.input, &dzi, x_t, h_prev);
        accumulate_gate(&mut grads.forget, &dzf, x_t, h_prev);
        accumulate_gate(&mut grads.output, &dzo, x_t, h_prev);
        accumulate_gate(&mut grads.cell, &dzg, x_t, h_prev);

        // dh for the previously processed step.
        for v in dh.iter_mut() {
            *v = 0.0;
        }
        params.input.w_h.tr_matvec_add(&dzi, &mut dh);
        params.forget.w_h.tr_matvec_add(&dzf, &mut dh);
        params.output.w_h.tr_matvec_add(&dzo, &mut dh);
        params.cell.w_h.tr_matvec_add(&dzg, &mut dh);
    }
    Ok(())
}

fn accumulate_gate(gate: &mut GateParams, dz: &[f64], x: &[f64], h_prev: &[f64]) {
    gate.w_x.add_outer(dz, x);
    gate.w_h.add_outer(dz, h_prev);
    for (b, d) in gate.bias.iter_mut().zip(dz) {
        *b += d;
    }
}
