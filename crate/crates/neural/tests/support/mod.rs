//! Plain-loop reference forward pass and a central-difference gradient
//! checker. Nothing here touches ndarray arithmetic; networks are copied out
//! into flat row-major vectors first.
//!
//! Perturbing one weight changes a single column of that layer's output; the
//! change is pushed forward as a rank-one update to the next dense layer and
//! only then recomputed in full. This keeps a check over every parameter of
//! a 256-wide network affordable. Changes are carried as differences, so a
//! central difference never subtracts two nearly equal outputs.

#![allow(dead_code)]

use aerostar_neural::{Activation, Layer, Mlp, Mode, Parameterized, TwoBranchCritic};
use ndarray::Array2;

#[derive(Clone, Copy, PartialEq)]
pub enum Act {
    Relu,
    Tanh,
    Linear,
}

impl Act {
    fn f(self, z: f64) -> f64 {
        match self {
            Act::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Act::Tanh => z.tanh(),
            Act::Linear => z,
        }
    }
}

pub enum Op {
    Bn {
        gamma: Vec<f64>,
        beta: Vec<f64>,
        eps: f64,
    },
    Dense {
        nin: usize,
        nout: usize,
        w: Vec<f64>,
        b: Vec<f64>,
        act: Act,
    },
}

pub struct Chain {
    pub input_width: usize,
    pub ops: Vec<Op>,
}

pub struct Trace {
    pub rows: usize,
    pub widths: Vec<usize>,
    pub acts: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

pub enum Change {
    Column(usize, Vec<f64>),
    Full(Vec<f64>),
}

fn bn_column(x: &[f64], gamma: f64, beta: f64, eps: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    x.iter().map(|v| gamma * (v - mean) * inv + beta).collect()
}

fn column(m: &[f64], rows: usize, width: usize, c: usize) -> Vec<f64> {
    (0..rows).map(|r| m[r * width + c]).collect()
}

impl Chain {
    pub fn from_mlp(net: &Mlp) -> Self {
        let ops = net
            .layers()
            .iter()
            .map(|l| match l {
                Layer::BatchNorm(b) => Op::Bn {
                    gamma: b.gamma.to_vec(),
                    beta: b.beta.to_vec(),
                    eps: b.eps,
                },
                Layer::Dense(d) => Op::Dense {
                    nin: d.w.nrows(),
                    nout: d.w.ncols(),
                    w: d.w.iter().copied().collect(),
                    b: d.b.to_vec(),
                    act: match d.activation {
                        Activation::Relu => Act::Relu,
                        Activation::Tanh => Act::Tanh,
                        Activation::Linear => Act::Linear,
                    },
                },
            })
            .collect();
        Self {
            input_width: net.input_width(),
            ops,
        }
    }

    fn out_width(&self, k: usize, win: usize) -> usize {
        match &self.ops[k] {
            Op::Bn { .. } => win,
            Op::Dense { nout, .. } => *nout,
        }
    }

    /// Apply op `k` to a full input; returns (pre-activation, output).
    fn apply(&self, k: usize, input: &[f64], rows: usize, win: usize) -> (Vec<f64>, Vec<f64>) {
        match &self.ops[k] {
            Op::Bn { gamma, beta, eps } => {
                let mut out = vec![0.0; rows * win];
                for c in 0..win {
                    let col = bn_column(&column(input, rows, win, c), gamma[c], beta[c], *eps);
                    for r in 0..rows {
                        out[r * win + c] = col[r];
                    }
                }
                (Vec::new(), out)
            }
            Op::Dense { nin, nout, w, b, act } => {
                let mut pre = vec![0.0; rows * nout];
                for r in 0..rows {
                    let row = &mut pre[r * nout..(r + 1) * nout];
                    row.copy_from_slice(b);
                    for i in 0..*nin {
                        let x = input[r * nin + i];
                        let wr = &w[i * nout..(i + 1) * nout];
                        for (p, wv) in row.iter_mut().zip(wr) {
                            *p += x * wv;
                        }
                    }
                }
                let out = pre.iter().map(|z| act.f(*z)).collect();
                (pre, out)
            }
        }
    }

    pub fn trace(&self, x: &[f64], rows: usize) -> Trace {
        let mut widths = vec![self.input_width];
        let mut acts = vec![x.to_vec()];
        let mut pre = Vec::new();
        for k in 0..self.ops.len() {
            let win = widths[k];
            let (p, o) = self.apply(k, &acts[k], rows, win);
            widths.push(self.out_width(k, win));
            acts.push(o);
            pre.push(p);
        }
        Trace {
            rows,
            widths,
            acts,
            pre,
        }
    }

    /// Push a change (a difference) of `acts[k]` through ops `k..`. Sets
    /// `crossed` when a ReLU changes side.
    pub fn propagate(&self, tr: &Trace, mut k: usize, mut change: Change, crossed: &mut bool) -> Change {
        let rows = tr.rows;
        while k < self.ops.len() {
            let win = tr.widths[k];
            change = match (change, &self.ops[k]) {
                (Change::Column(c, d), Op::Bn { gamma, beta, eps }) => {
                    let old_in = column(&tr.acts[k], rows, win, c);
                    let new_in: Vec<f64> = old_in.iter().zip(&d).map(|(o, x)| o + x).collect();
                    let new_out = bn_column(&new_in, gamma[c], beta[c], *eps);
                    let old_out = column(&tr.acts[k + 1], rows, win, c);
                    Change::Column(c, new_out.iter().zip(&old_out).map(|(n, o)| n - o).collect())
                }
                (Change::Column(c, d), Op::Dense { nout, w, act, .. }) => {
                    let wr = &w[c * nout..(c + 1) * nout];
                    let mut out = vec![0.0; rows * nout];
                    for r in 0..rows {
                        for j in 0..*nout {
                            let base = tr.pre[k][r * nout + j];
                            out[r * nout + j] = act_delta(*act, base, d[r] * wr[j], crossed);
                        }
                    }
                    Change::Full(out)
                }
                (Change::Full(d), Op::Dense { nin, nout, w, act, .. }) => {
                    let mut out = vec![0.0; rows * nout];
                    for r in 0..rows {
                        let row = &mut out[r * nout..(r + 1) * nout];
                        for i in 0..*nin {
                            let x = d[r * nin + i];
                            if x == 0.0 {
                                continue;
                            }
                            for (p, wv) in row.iter_mut().zip(&w[i * nout..(i + 1) * nout]) {
                                *p += x * wv;
                            }
                        }
                        for (j, p) in row.iter_mut().enumerate() {
                            *p = act_delta(*act, tr.pre[k][r * nout + j], *p, crossed);
                        }
                    }
                    Change::Full(out)
                }
                (Change::Full(d), Op::Bn { .. }) => {
                    let new_in: Vec<f64> = tr.acts[k].iter().zip(&d).map(|(o, x)| o + x).collect();
                    let (_, new_out) = self.apply(k, &new_in, rows, win);
                    Change::Full(new_out.iter().zip(&tr.acts[k + 1]).map(|(n, o)| n - o).collect())
                }
            };
            k += 1;
        }
        change
    }

    /// Parameter blocks in library order: dense → (w, b); bn → (gamma, beta).
    pub fn blocks(&self) -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for (k, op) in self.ops.iter().enumerate() {
            match op {
                Op::Bn { gamma, .. } => {
                    v.push((k, 0, gamma.len()));
                    v.push((k, 1, gamma.len()));
                }
                Op::Dense { nin, nout, .. } => {
                    v.push((k, 0, nin * nout));
                    v.push((k, 1, *nout));
                }
            }
        }
        v
    }

    /// Output change when parameter `idx` of block `which` in op `k` moves
    /// by `delta`.
    pub fn perturb(&self, tr: &Trace, k: usize, which: usize, idx: usize, delta: f64, crossed: &mut bool) -> Change {
        let rows = tr.rows;
        let win = tr.widths[k];
        let first = match &self.ops[k] {
            Op::Bn { .. } => {
                let col = if which == 0 {
                    // y = gamma * xhat + beta, so d y / d gamma = xhat.
                    let out = column(&tr.acts[k + 1], rows, win, idx);
                    let (g, b) = match &self.ops[k] {
                        Op::Bn { gamma, beta, .. } => (gamma[idx], beta[idx]),
                        _ => unreachable!(),
                    };
                    out.iter().map(|y| delta * (y - b) / g).collect()
                } else {
                    vec![delta; rows]
                };
                Change::Column(idx, col)
            }
            Op::Dense { nout, act, .. } => {
                let (r_in, c) = if which == 0 { (Some(idx / nout), idx % nout) } else { (None, idx) };
                let col = (0..rows)
                    .map(|r| {
                        let shift = match r_in {
                            Some(i) => delta * tr.acts[k][r * win + i],
                            None => delta,
                        };
                        act_delta(*act, tr.pre[k][r * nout + c], shift, crossed)
                    })
                    .collect();
                Change::Column(c, col)
            }
        };
        self.propagate(tr, k + 1, first, crossed)
    }
}

/// `f(z + dz) − f(z)` without cancellation.
fn act_delta(act: Act, z: f64, dz: f64, crossed: &mut bool) -> f64 {
    match act {
        Act::Linear => dz,
        Act::Relu => {
            let n = z + dz;
            if (z > 0.0) != (n > 0.0) {
                *crossed = true;
                n.max(0.0) - z.max(0.0)
            } else if z > 0.0 {
                dz
            } else {
                0.0
            }
        }
        // tanh(a) − tanh(b) = tanh(a − b)(1 − tanh(a) tanh(b))
        Act::Tanh => dz.tanh() * (1.0 - (z + dz).tanh() * z.tanh()),
    }
}

/// Change in `Σ R ⊙ out`.
fn loss_delta(change: &Change, r: &[f64], width: usize) -> f64 {
    match change {
        Change::Column(c, d) => d.iter().enumerate().map(|(row, v)| r[row * width + c] * v).sum(),
        Change::Full(d) => d.iter().zip(r).map(|(v, w)| v * w).sum(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct FdReport {
    pub checked: usize,
    /// Parameters re-checked with a smaller step after a ReLU side change.
    pub refined: usize,
    /// Parameters where every step size crossed a kink.
    pub excluded: usize,
    pub max_rel_err: f64,
    pub worst: String,
    /// Largest gap between the library forward and the reference forward.
    pub forward_gap: f64,
}

impl FdReport {
    fn record(&mut self, label: &str, analytic: f64, numeric: f64) {
        self.checked += 1;
        let denom = analytic.abs().max(numeric.abs()).max(REL_FLOOR);
        let err = (analytic - numeric).abs() / denom;
        if err > self.max_rel_err {
            self.max_rel_err = err;
            self.worst = format!("{label}: analytic {analytic:e}, numeric {numeric:e}");
        }
    }

    fn merge(&mut self, other: FdReport) {
        self.checked += other.checked;
        self.refined += other.refined;
        self.excluded += other.excluded;
        self.forward_gap = self.forward_gap.max(other.forward_gap);
        if other.max_rel_err > self.max_rel_err {
            self.max_rel_err = other.max_rel_err;
            self.worst = other.worst;
        }
    }
}

/// Gradients below this magnitude are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-8;

/// Central difference of `delta_fn(±h)`, shrinking the step when a kink is
/// crossed. Returns `None` if every step crosses one.
fn central<F: FnMut(f64, &mut bool) -> f64>(h: f64, mut delta_fn: F, refined: &mut bool) -> Option<f64> {
    let mut step = h;
    for attempt in 0..3 {
        let mut crossed = false;
        let plus = delta_fn(step, &mut crossed);
        let minus = delta_fn(-step, &mut crossed);
        if !crossed {
            *refined = attempt > 0;
            return Some((plus - minus) / (2.0 * step));
        }
        step /= 64.0;
    }
    None
}

fn flat(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

fn check_chain(
    label: &str,
    chain: &Chain,
    tr: &Trace,
    analytic: &[Vec<f64>],
    h: f64,
    mut to_output: impl FnMut(Change, &mut bool) -> f64,
) -> FdReport {
    let mut rep = FdReport::default();
    for (bi, (k, which, len)) in chain.blocks().into_iter().enumerate() {
        for idx in 0..len {
            let mut refined = false;
            let numeric = central(
                h,
                |d, crossed| {
                    let ch = chain.perturb(tr, k, which, idx, d, crossed);
                    to_output(ch, crossed)
                },
                &mut refined,
            );
            rep.refined += refined as usize;
            match numeric {
                Some(n) => rep.record(&format!("{label} layer {k} block {which} index {idx}"), analytic[bi][idx], n),
                None => rep.excluded += 1,
            }
        }
    }
    rep
}

/// Check every parameter of `net` on loss `Σ R ⊙ net(x)` (train mode).
pub fn check_mlp(net: &Mlp, x: &Array2<f64>, r: &Array2<f64>, h: f64) -> FdReport {
    let (out, cache) = net.forward(x.view(), Mode::Train).expect("forward");
    let (grads, _) = net.backward(&cache, r).expect("backward");
    let chain = Chain::from_mlp(net);
    let rows = x.nrows();
    let tr = chain.trace(&flat(x), rows);
    let base = tr.acts.last().unwrap().clone();
    let width = *tr.widths.last().unwrap();
    let rv = flat(r);
    let gap = base.iter().zip(out.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut rep = check_chain("mlp", &chain, &tr, &grads.0, h, |ch, _| loss_delta(&ch, &rv, width));
    rep.forward_gap = gap;
    rep
}

/// Check every parameter of the critic on loss `Σ R ⊙ Q(s, a)` (train mode).
pub fn check_critic(critic: &TwoBranchCritic, s: &Array2<f64>, a: &Array2<f64>, r: &Array2<f64>, h: f64) -> FdReport {
    let (q, cache) = critic.forward(s.view(), a.view(), Mode::Train).expect("forward");
    let (grads, _, _) = critic.backward(&cache, r).expect("backward");
    let rows = s.nrows();
    let cs = Chain::from_mlp(&critic.state_branch);
    let ca = Chain::from_mlp(&critic.action_branch);
    let ct = Chain::from_mlp(&critic.trunk);
    let ts = cs.trace(&flat(s), rows);
    let ta = ca.trace(&flat(a), rows);
    let hs = ts.acts.last().unwrap().clone();
    let ha = ta.acts.last().unwrap().clone();
    let (ws, wa) = (*ts.widths.last().unwrap(), *ta.widths.last().unwrap());
    let joined: Vec<f64> = (0..rows)
        .flat_map(|row| {
            hs[row * ws..(row + 1) * ws]
                .iter()
                .chain(&ha[row * wa..(row + 1) * wa])
                .copied()
                .collect::<Vec<_>>()
        })
        .collect();
    let tt = ct.trace(&joined, rows);
    let base = tt.acts.last().unwrap().clone();
    let rv = flat(r);
    let gap = base.iter().zip(q.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let ns = critic.state_branch.param_shapes().len();
    let na = critic.action_branch.param_shapes().len();
    let (gs, rest) = grads.0.split_at(ns);
    let (ga, gt) = rest.split_at(na);

    let into_trunk = |ch: Change, offset: usize, bw: usize| -> Change {
        match ch {
            Change::Column(c, col) => Change::Column(c + offset, col),
            Change::Full(new) => {
                let mut j = vec![0.0; joined.len()];
                for row in 0..rows {
                    for c in 0..bw {
                        j[row * (ws + wa) + offset + c] = new[row * bw + c];
                    }
                }
                Change::Full(j)
            }
        }
    };

    let mut rep = FdReport {
        forward_gap: gap,
        ..Default::default()
    };
    rep.merge(check_chain("state branch", &cs, &ts, gs, h, |ch, crossed| {
        let t = ct.propagate(&tt, 0, into_trunk(ch, 0, ws), crossed);
        loss_delta(&t, &rv, 1)
    }));
    rep.merge(check_chain("action branch", &ca, &ta, ga, h, |ch, crossed| {
        let t = ct.propagate(&tt, 0, into_trunk(ch, ws, wa), crossed);
        loss_delta(&t, &rv, 1)
    }));
    rep.merge(check_chain("trunk", &ct, &tt, gt, h, |ch, _| loss_delta(&ch, &rv, 1)));
    rep
}
