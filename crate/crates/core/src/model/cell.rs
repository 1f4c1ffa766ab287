//! One recurrent direction: forward recurrence over a token sequence and its
//! backpropagation through time.
//!
//! Each gate `k` owns an input kernel `W_k` (embedding dim × units), a recurrent
//! kernel `U_k` (units × units) and a bias `b_k`. The recurrent input is the
//! previous state times the dropout mask, `hd = h ⊙ m`, with one mask per
//! sequence.
//!
//! * SimpleRNN: `h' = tanh(xW + hd·U + b)`
//! * LSTM, gates (i, f, g, o): `c' = f⊙c + i⊙g`, `h' = o⊙tanh(c')`
//! * GRU, gates (z, r, n): `n = tanh(xW_n + (r⊙hd)·U_n + b_n)`,
//!   `h' = z⊙h + (1 - z)⊙n`

use crate::tensor::{mat_vec_acc, outer_acc, sigmoid, vec_mat_acc, Tensor};

use super::params::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Recurrence {
    Simple,
    Lstm,
    Gru,
}

impl Recurrence {
    pub(crate) fn gate_names(self) -> &'static [&'static str] {
        match self {
            Recurrence::Simple => &["state"],
            Recurrence::Lstm => &["input", "forget", "cell", "output"],
            Recurrence::Gru => &["update", "reset", "candidate"],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GateIndex {
    pub kernel: usize,
    pub recurrent: usize,
    pub bias: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct DirectionLayout {
    pub recurrence: Recurrence,
    pub reversed: bool,
    pub gates: Vec<GateIndex>,
}

/// Everything the backward pass needs from one direction of one example.
#[derive(Debug, Clone)]
pub struct DirectionTrace {
    /// Token indices in processing order.
    pub tokens: Vec<usize>,
    /// `states[0]` is the zero initial state; `states[t + 1]` follows step `t`.
    pub states: Vec<Vec<f64>>,
    /// LSTM cell states, same indexing as `states`; empty for other cells.
    pub cells: Vec<Vec<f64>>,
    /// Post-activation gate values per step.
    pub gates: Vec<Vec<Vec<f64>>>,
    pub mask: Vec<f64>,
}

impl DirectionTrace {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("initial state always present")
    }
}

fn pre_activation(params: &ParamStore, gate: GateIndex, x: &[f64], hd: &[f64]) -> Vec<f64> {
    let mut a = params.get(gate.bias).data().to_vec();
    vec_mat_acc(x, params.get(gate.kernel).data(), &mut a);
    vec_mat_acc(hd, params.get(gate.recurrent).data(), &mut a);
    a
}

pub(crate) fn run_direction(
    layout: &DirectionLayout,
    params: &ParamStore,
    embedding: &Tensor,
    tokens: Vec<usize>,
    mask: Vec<f64>,
) -> DirectionTrace {
    let units = mask.len();
    let steps = tokens.len();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(vec![0.0; units]);
    let mut cells = Vec::new();
    if layout.recurrence == Recurrence::Lstm {
        cells.reserve(steps + 1);
        cells.push(vec![0.0; units]);
    }
    let mut gates = Vec::with_capacity(steps);

    for (t, &token) in tokens.iter().enumerate() {
        let x = embedding.row(token);
        let h = &states[t];
        let hd: Vec<f64> = h.iter().zip(&mask).map(|(a, m)| a * m).collect();
        match layout.recurrence {
            Recurrence::Simple => {
                let mut a = pre_activation(params, layout.gates[0], x, &hd);
                a.iter_mut().for_each(|v| *v = v.tanh());
                states.push(a.clone());
                gates.push(vec![a]);
            }
            Recurrence::Lstm => {
                let mut acts: Vec<Vec<f64>> = layout
                    .gates
                    .iter()
                    .map(|&g| pre_activation(params, g, x, &hd))
                    .collect();
                for (k, act) in acts.iter_mut().enumerate() {
                    let f: fn(f64) -> f64 = if k == 2 { f64::tanh } else { sigmoid };
                    act.iter_mut().for_each(|v| *v = f(*v));
                }
                let c_prev = &cells[t];
                let c: Vec<f64> = (0..units)
                    .map(|j| acts[1][j] * c_prev[j] + acts[0][j] * acts[2][j])
                    .collect();
                let h_next: Vec<f64> = (0..units).map(|j| acts[3][j] * c[j].tanh()).collect();
                cells.push(c);
                states.push(h_next);
                gates.push(acts);
            }
            Recurrence::Gru => {
                let mut z = pre_activation(params, layout.gates[0], x, &hd);
                z.iter_mut().for_each(|v| *v = sigmoid(*v));
                let mut r = pre_activation(params, layout.gates[1], x, &hd);
                r.iter_mut().for_each(|v| *v = sigmoid(*v));
                let rh: Vec<f64> = r.iter().zip(&hd).map(|(a, b)| a * b).collect();
                let mut n = pre_activation(params, layout.gates[2], x, &rh);
                n.iter_mut().for_each(|v| *v = v.tanh());
                let h_next: Vec<f64> = (0..units).map(|j| z[j] * h[j] + (1.0 - z[j]) * n[j]).collect();
                states.push(h_next);
                gates.push(vec![z, r, n]);
            }
        }
    }
    DirectionTrace {
        tokens,
        states,
        cells,
        gates,
        mask,
    }
}

/// Accumulates `x ⊗ da`, `hd ⊗ da` and `da` into one gate's gradients and
/// adds `W·da` to `dx` and `U·da` to `dhd`.
#[allow(clippy::too_many_arguments)]
fn gate_backward(
    gate: GateIndex,
    params: &ParamStore,
    grads: &mut ParamStore,
    x: &[f64],
    recurrent_input: &[f64],
    da: &[f64],
    dx: &mut [f64],
    drecurrent: &mut [f64],
) {
    outer_acc(x, da, grads.get_mut(gate.kernel).data_mut());
    outer_acc(recurrent_input, da, grads.get_mut(gate.recurrent).data_mut());
    crate::tensor::add_assign(grads.get_mut(gate.bias).data_mut(), da);
    mat_vec_acc(params.get(gate.kernel).data(), da, dx);
    mat_vec_acc(params.get(gate.recurrent).data(), da, drecurrent);
}

/// Backpropagates `d_final` (gradient w.r.t. the last state) through the
/// recurrence. Input gradients are added to `embedding_grad` rows when given.
pub(crate) fn backprop_direction(
    layout: &DirectionLayout,
    params: &ParamStore,
    embedding: &Tensor,
    trace: &DirectionTrace,
    d_final: &[f64],
    grads: &mut ParamStore,
    embedding_grad: Option<usize>,
) {
    let units = d_final.len();
    let dim = embedding.cols();
    let mut dh = d_final.to_vec();
    let mut dc = vec![0.0; units];
    let mask = &trace.mask;

    for t in (0..trace.tokens.len()).rev() {
        let token = trace.tokens[t];
        let x = embedding.row(token);
        let h_prev = &trace.states[t];
        let hd: Vec<f64> = h_prev.iter().zip(mask).map(|(a, m)| a * m).collect();
        let mut dx = vec![0.0; dim];
        let mut dhd = vec![0.0; units];
        let mut dh_prev = vec![0.0; units];

        match layout.recurrence {
            Recurrence::Simple => {
                let h_next = &trace.states[t + 1];
                let da: Vec<f64> = (0..units).map(|j| dh[j] * (1.0 - h_next[j] * h_next[j])).collect();
                gate_backward(layout.gates[0], params, grads, x, &hd, &da, &mut dx, &mut dhd);
            }
            Recurrence::Lstm => {
                let acts = &trace.gates[t];
                let (i, f, g, o) = (&acts[0], &acts[1], &acts[2], &acts[3]);
                let c_prev = &trace.cells[t];
                let c = &trace.cells[t + 1];
                let mut das = vec![vec![0.0; units]; 4];
                for j in 0..units {
                    let tc = c[j].tanh();
                    let d_o = dh[j] * tc;
                    let dc_total = dc[j] + dh[j] * o[j] * (1.0 - tc * tc);
                    das[0][j] = dc_total * g[j] * i[j] * (1.0 - i[j]);
                    das[1][j] = dc_total * c_prev[j] * f[j] * (1.0 - f[j]);
                    das[2][j] = dc_total * i[j] * (1.0 - g[j] * g[j]);
                    das[3][j] = d_o * o[j] * (1.0 - o[j]);
                    dc[j] = dc_total * f[j];
                }
                for (gate, da) in layout.gates.iter().zip(&das) {
                    gate_backward(*gate, params, grads, x, &hd, da, &mut dx, &mut dhd);
                }
            }
            Recurrence::Gru => {
                let acts = &trace.gates[t];
                let (z, r, n) = (&acts[0], &acts[1], &acts[2]);
                let mut da_z = vec![0.0; units];
                let mut da_n = vec![0.0; units];
                for j in 0..units {
                    da_z[j] = dh[j] * (h_prev[j] - n[j]) * z[j] * (1.0 - z[j]);
                    da_n[j] = dh[j] * (1.0 - z[j]) * (1.0 - n[j] * n[j]);
                    dh_prev[j] = dh[j] * z[j];
                }
                let rh: Vec<f64> = r.iter().zip(&hd).map(|(a, b)| a * b).collect();
                let mut drh = vec![0.0; units];
                gate_backward(layout.gates[2], params, grads, x, &rh, &da_n, &mut dx, &mut drh);
                let mut da_r = vec![0.0; units];
                for j in 0..units {
                    da_r[j] = drh[j] * hd[j] * r[j] * (1.0 - r[j]);
                    dhd[j] += drh[j] * r[j];
                }
                gate_backward(layout.gates[0], params, grads, x, &hd, &da_z, &mut dx, &mut dhd);
                gate_backward(layout.gates[1], params, grads, x, &hd, &da_r, &mut dx, &mut dhd);
            }
        }

        for j in 0..units {
            dh_prev[j] += dhd[j] * mask[j];
        }
        if let Some(index) = embedding_grad {
            crate::tensor::add_assign(grads.get_mut(index).row_mut(token), &dx);
        }
        dh = dh_prev;
    }
}
