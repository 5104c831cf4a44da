//! The recurrent ranking network on raw vectors: a single-layer GRU over
//! the click inputs, a dense candidate projector and a one-hidden-layer
//! relevance head, all stored in one flat parameter buffer.
//!
//! ```text
//! z = σ(W_z x + U_z h + b_z)        e = tanh(P c + p)
//! r = σ(W_r x + U_r h + b_r)        u = tanh(A [h; e; h⊙e] + a)
//! n = tanh(W_n x + U_n (r⊙h) + b_n) s = wᵀ u
//! h' = (1 − z)⊙h + z⊙n
//! ```

use std::ops::Range;

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetDims {
    /// Click input size.
    pub d_in: usize,
    /// Candidate feature size.
    pub d_c: usize,
    /// GRU state size.
    pub d_h: usize,
    /// Relevance head hidden width.
    pub d_m: usize,
}

/// Offsets of the network tensors inside the parameter buffer. Matrices are
/// row-major; the three GRU gates are stacked in the order z, r, n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub w: Range<usize>,
    pub u: Range<usize>,
    pub b: Range<usize>,
    pub proj_w: Range<usize>,
    pub proj_b: Range<usize>,
    pub head_w: Range<usize>,
    pub head_b: Range<usize>,
    pub out_w: Range<usize>,
}

impl Layout {
    fn new(d: NetDims) -> Self {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        Layout {
            w: take(3 * d.d_h * d.d_in),
            u: take(3 * d.d_h * d.d_h),
            b: take(3 * d.d_h),
            proj_w: take(d.d_h * d.d_c),
            proj_b: take(d.d_h),
            head_w: take(d.d_m * 3 * d.d_h),
            head_b: take(d.d_m),
            out_w: take(d.d_m),
        }
    }

    pub fn total(&self) -> usize {
        self.out_w.end
    }

    /// `(name, range)` of every tensor, in buffer order.
    pub fn tensors(&self) -> Vec<(&'static str, Range<usize>)> {
        vec![
            ("gru.w", self.w.clone()),
            ("gru.u", self.u.clone()),
            ("gru.b", self.b.clone()),
            ("proj.w", self.proj_w.clone()),
            ("proj.b", self.proj_b.clone()),
            ("head.w", self.head_w.clone()),
            ("head.b", self.head_b.clone()),
            ("out.w", self.out_w.clone()),
        ]
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out += M x` for a row-major `rows × x.len()` matrix.
fn matvec_acc(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out += Mᵀ v` for a row-major `v.len() × out.len()` matrix.
fn matvec_t_acc(out: &mut [f64], m: &[f64], v: &[f64]) {
    let cols = out.len();
    for (&vi, row) in v.iter().zip(m.chunks_exact(cols)) {
        if vi != 0.0 {
            for (o, r) in out.iter_mut().zip(row) {
                *o += vi * r;
            }
        }
    }
}

/// `G += u vᵀ` for a row-major `u.len() × v.len()` matrix.
fn outer_acc(g: &mut [f64], u: &[f64], v: &[f64]) {
    let cols = v.len();
    for (&ui, row) in u.iter().zip(g.chunks_exact_mut(cols)) {
        if ui != 0.0 {
            for (gr, vj) in row.iter_mut().zip(v) {
                *gr += ui * vj;
            }
        }
    }
}

/// Loss and score gradient of the sampled softmax with the positive at
/// index 0: `L = −s₀ + ln Σ exp(s_k)`.
pub fn sampled_softmax_loss(scores: &[f64]) -> (f64, Vec<f64>) {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + m - scores[0];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[0] -= 1.0;
    (loss, grad)
}

/// Intermediate values of one GRU step, kept for backpropagation.
#[derive(Clone, Debug)]
struct StepCache {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    n: Vec<f64>,
    rh: Vec<f64>,
}

/// Per-candidate intermediates of the relevance head.
struct HeadCache {
    e: Vec<f64>,
    he: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub dims: NetDims,
    pub layout: Layout,
}

/// Gradients with respect to the network inputs, for layers feeding them.
#[derive(Clone, Debug, Default)]
pub struct InputGrads {
    /// One per click input.
    pub dx: Vec<Vec<f64>>,
    /// `dc[t][k]` for candidate `k` at prediction position `t`.
    pub dc: Vec<Vec<Vec<f64>>>,
}

impl Network {
    pub fn new(dims: NetDims) -> Self {
        Network {
            dims,
            layout: Layout::new(dims),
        }
    }

    pub fn n_params(&self) -> usize {
        self.layout.total()
    }

    /// Weights uniform in ±1/√d_h, biases zero.
    pub fn init(&self, theta: &mut [f64], rng: &mut impl Rng) {
        let bound = 1.0 / (self.dims.d_h as f64).sqrt();
        let l = &self.layout;
        for r in [&l.w, &l.u, &l.proj_w, &l.head_w, &l.out_w] {
            theta[r.clone()].iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
        }
        for r in [&l.b, &l.proj_b, &l.head_b] {
            theta[r.clone()].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn step(&self, theta: &[f64], x: &[f64], h_prev: &[f64]) -> (Vec<f64>, StepCache) {
        let d_h = self.dims.d_h;
        let l = &self.layout;
        let w = &theta[l.w.clone()];
        let u = &theta[l.u.clone()];
        let b = &theta[l.b.clone()];
        let mut a = b.to_vec();
        matvec_acc(&mut a, w, x);
        // z and r gates see h_prev directly.
        matvec_acc(&mut a[..2 * d_h], &u[..2 * d_h * d_h], h_prev);
        let z: Vec<f64> = a[..d_h].iter().map(|&v| sigmoid(v)).collect();
        let r: Vec<f64> = a[d_h..2 * d_h].iter().map(|&v| sigmoid(v)).collect();
        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(r, h)| r * h).collect();
        matvec_acc(&mut a[2 * d_h..], &u[2 * d_h * d_h..], &rh);
        let n: Vec<f64> = a[2 * d_h..].iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..d_h).map(|i| (1.0 - z[i]) * h_prev[i] + z[i] * n[i]).collect();
        (
            h,
            StepCache {
                h_prev: h_prev.to_vec(),
                z,
                r,
                n,
                rh,
            },
        )
    }

    pub fn gru_step(&self, theta: &[f64], x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        self.step(theta, x, h_prev).0
    }

    /// GRU state after consuming every input, from a zero initial state.
    pub fn final_state<X: AsRef<[f64]>>(&self, theta: &[f64], xs: &[X]) -> Vec<f64> {
        let mut h = vec![0.0; self.dims.d_h];
        for x in xs {
            h = self.gru_step(theta, x.as_ref(), &h);
        }
        h
    }

    fn project(&self, theta: &[f64], c: &[f64]) -> Vec<f64> {
        let l = &self.layout;
        let mut e = theta[l.proj_b.clone()].to_vec();
        matvec_acc(&mut e, &theta[l.proj_w.clone()], c);
        e.iter_mut().for_each(|v| *v = v.tanh());
        e
    }

    /// `A_h h + a`, shared by all candidates scored against `h`.
    fn head_base(&self, theta: &[f64], h: &[f64]) -> Vec<f64> {
        let d_h = self.dims.d_h;
        let l = &self.layout;
        let aw = &theta[l.head_w.clone()];
        let mut base = theta[l.head_b.clone()].to_vec();
        for (o, row) in base.iter_mut().zip(aw.chunks_exact(3 * d_h)) {
            *o += dot(&row[..d_h], h);
        }
        base
    }

    fn head(&self, theta: &[f64], base: &[f64], h: &[f64], c: &[f64]) -> (f64, HeadCache) {
        let d_h = self.dims.d_h;
        let l = &self.layout;
        let aw = &theta[l.head_w.clone()];
        let e = self.project(theta, c);
        let he: Vec<f64> = h.iter().zip(&e).map(|(a, b)| a * b).collect();
        let u: Vec<f64> = base
            .iter()
            .zip(aw.chunks_exact(3 * d_h))
            .map(|(b, row)| (b + dot(&row[d_h..2 * d_h], &e) + dot(&row[2 * d_h..], &he)).tanh())
            .collect();
        let s = dot(&theta[l.out_w.clone()], &u);
        (s, HeadCache { e, he, u })
    }

    pub fn score(&self, theta: &[f64], h: &[f64], c: &[f64]) -> f64 {
        let base = self.head_base(theta, h);
        self.head(theta, &base, h, c).0
    }

    pub fn score_many<C: AsRef<[f64]>>(&self, theta: &[f64], h: &[f64], cands: &[C]) -> Vec<f64> {
        let base = self.head_base(theta, h);
        cands.iter().map(|c| self.head(theta, &base, h, c.as_ref()).0).collect()
    }

    /// Summed sampled-softmax loss of a session. Position `t` scores
    /// `cands[t]` (positive first) against the state after `xs[..=t]`.
    pub fn session_loss<X: AsRef<[f64]>, C: AsRef<[f64]>>(&self, theta: &[f64], xs: &[X], cands: &[Vec<C>]) -> f64 {
        assert!(cands.len() <= xs.len());
        let mut h = vec![0.0; self.dims.d_h];
        let mut loss = 0.0;
        for (t, x) in xs.iter().enumerate().take(cands.len()) {
            h = self.gru_step(theta, x.as_ref(), &h);
            loss += sampled_softmax_loss(&self.score_many(theta, &h, &cands[t])).0;
        }
        loss
    }

    /// Like [`Network::session_loss`], also adding `scale ×` the parameter
    /// gradient into `grad` and, when asked, returning input gradients.
    pub fn session_loss_grad<X: AsRef<[f64]>, C: AsRef<[f64]>>(
        &self,
        theta: &[f64],
        xs: &[X],
        cands: &[Vec<C>],
        scale: f64,
        grad: &mut [f64],
        want_inputs: bool,
    ) -> (f64, Option<InputGrads>) {
        assert!(cands.len() <= xs.len());
        let d = self.dims;
        let d_h = d.d_h;
        let l = &self.layout;
        let steps = cands.len();

        let mut h = vec![0.0; d_h];
        let mut caches = Vec::with_capacity(steps);
        let mut states = Vec::with_capacity(steps);
        for x in xs.iter().take(steps) {
            let (next, cache) = self.step(theta, x.as_ref(), &h);
            caches.push(cache);
            h = next;
            states.push(h.clone());
        }

        let aw = &theta[l.head_w.clone()];
        let ow = &theta[l.out_w.clone()];
        let pw = &theta[l.proj_w.clone()];
        let mut loss = 0.0;
        // Gradient reaching each h_t directly from the head.
        let mut dh_head = vec![vec![0.0; d_h]; steps];
        let mut dc_all: Vec<Vec<Vec<f64>>> = Vec::new();
        for t in 0..steps {
            let h = &states[t];
            let base = self.head_base(theta, h);
            let heads: Vec<(f64, HeadCache)> = cands[t].iter().map(|c| self.head(theta, &base, h, c.as_ref())).collect();
            let scores: Vec<f64> = heads.iter().map(|(s, _)| *s).collect();
            let (l_t, ds) = sampled_softmax_loss(&scores);
            loss += l_t;
            let mut dcs = Vec::new();
            for (k, (_, hc)) in heads.iter().enumerate() {
                let g = ds[k] * scale;
                if g == 0.0 {
                    if want_inputs {
                        dcs.push(vec![0.0; d.d_c]);
                    }
                    continue;
                }
                // s = wᵀu
                for (gw, uj) in grad[l.out_w.clone()].iter_mut().zip(&hc.u) {
                    *gw += g * uj;
                }
                let du: Vec<f64> = hc.u.iter().zip(ow).map(|(u, w)| g * w * (1.0 - u * u)).collect();
                let input: Vec<f64> = h.iter().chain(&hc.e).chain(&hc.he).copied().collect();
                outer_acc(&mut grad[l.head_w.clone()], &du, &input);
                for (gb, v) in grad[l.head_b.clone()].iter_mut().zip(&du) {
                    *gb += v;
                }
                let mut dinput = vec![0.0; 3 * d_h];
                matvec_t_acc(&mut dinput, aw, &du);
                let (dz_h, rest) = dinput.split_at(d_h);
                let (dz_e, dz_he) = rest.split_at(d_h);
                let mut de = vec![0.0; d_h];
                for i in 0..d_h {
                    dh_head[t][i] += dz_h[i] + dz_he[i] * hc.e[i];
                    de[i] = dz_e[i] + dz_he[i] * h[i];
                }
                // e = tanh(P c + p)
                let dv: Vec<f64> = de.iter().zip(&hc.e).map(|(g, e)| g * (1.0 - e * e)).collect();
                let c = cands[t][k].as_ref();
                outer_acc(&mut grad[l.proj_w.clone()], &dv, c);
                for (gb, v) in grad[l.proj_b.clone()].iter_mut().zip(&dv) {
                    *gb += v;
                }
                if want_inputs {
                    let mut dc = vec![0.0; d.d_c];
                    matvec_t_acc(&mut dc, pw, &dv);
                    dcs.push(dc);
                }
            }
            if want_inputs {
                dc_all.push(dcs);
            }
        }

        // Backpropagation through time.
        let w = &theta[l.w.clone()];
        let u = &theta[l.u.clone()];
        let mut dx_all = vec![Vec::new(); if want_inputs { steps } else { 0 }];
        let mut dh_next = vec![0.0; d_h];
        for t in (0..steps).rev() {
            let c = &caches[t];
            let dh: Vec<f64> = dh_next.iter().zip(&dh_head[t]).map(|(a, b)| a + b).collect();
            let mut da = vec![0.0; 3 * d_h];
            let mut dh_prev = vec![0.0; d_h];
            for i in 0..d_h {
                let dz = dh[i] * (c.n[i] - c.h_prev[i]);
                let dn = dh[i] * c.z[i];
                dh_prev[i] = dh[i] * (1.0 - c.z[i]);
                da[i] = dz * c.z[i] * (1.0 - c.z[i]);
                da[2 * d_h + i] = dn * (1.0 - c.n[i] * c.n[i]);
            }
            let mut drh = vec![0.0; d_h];
            matvec_t_acc(&mut drh, &u[2 * d_h * d_h..], &da[2 * d_h..]);
            for i in 0..d_h {
                dh_prev[i] += drh[i] * c.r[i];
                da[d_h + i] = drh[i] * c.h_prev[i] * c.r[i] * (1.0 - c.r[i]);
            }
            matvec_t_acc(&mut dh_prev, &u[..2 * d_h * d_h], &da[..2 * d_h]);

            let x = xs[t].as_ref();
            outer_acc(&mut grad[l.w.clone()], &da, x);
            outer_acc(&mut grad[l.u.start..l.u.start + 2 * d_h * d_h], &da[..2 * d_h], &c.h_prev);
            outer_acc(&mut grad[l.u.start + 2 * d_h * d_h..l.u.end], &da[2 * d_h..], &c.rh);
            for (gb, v) in grad[l.b.clone()].iter_mut().zip(&da) {
                *gb += v;
            }
            if want_inputs {
                let mut dx = vec![0.0; d.d_in];
                matvec_t_acc(&mut dx, w, &da);
                dx_all[t] = dx;
            }
            dh_next = dh_prev;
        }

        let inputs = want_inputs.then_some(InputGrads { dx: dx_all, dc: dc_all });
        (loss, inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> (Network, Vec<f64>, ChaCha8Rng) {
        let net = Network::new(NetDims {
            d_in: 5,
            d_c: 3,
            d_h: 4,
            d_m: 6,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta: Vec<f64> = (0..net.n_params()).map(|_| rng.random_range(-0.8..0.8)).collect();
        (net, theta, rng)
    }

    #[test]
    fn zero_weights_halve_state() {
        let (net, _, _) = tiny();
        let theta = vec![0.0; net.n_params()];
        let h = net.gru_step(&theta, &[1.0; 5], &[0.4, -2.0, 0.0, 1.0]);
        assert_eq!(h, vec![0.2, -1.0, 0.0, 0.5]);
        assert_eq!(net.gru_step(&theta, &[1.0; 5], &[0.0; 4]), vec![0.0; 4]);
    }

    #[test]
    fn step_matches_scalar_loop() {
        let (net, theta, mut rng) = tiny();
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hp: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (d_in, d_h) = (5, 4);
        let l = &net.layout;
        let wi = |g: usize, i: usize, j: usize| theta[l.w.start + (g * d_h + i) * d_in + j];
        let ui = |g: usize, i: usize, j: usize| theta[l.u.start + (g * d_h + i) * d_h + j];
        let bi = |g: usize, i: usize| theta[l.b.start + g * d_h + i];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut z = [0.0; 4];
        let mut r = [0.0; 4];
        for i in 0..d_h {
            let mut az = bi(0, i);
            let mut ar = bi(1, i);
            for j in 0..d_in {
                az += wi(0, i, j) * x[j];
                ar += wi(1, i, j) * x[j];
            }
            for j in 0..d_h {
                az += ui(0, i, j) * hp[j];
                ar += ui(1, i, j) * hp[j];
            }
            z[i] = sig(az);
            r[i] = sig(ar);
        }
        let got = net.gru_step(&theta, &x, &hp);
        for i in 0..d_h {
            let mut an = bi(2, i);
            for j in 0..d_in {
                an += wi(2, i, j) * x[j];
            }
            for j in 0..d_h {
                an += ui(2, i, j) * r[j] * hp[j];
            }
            let expect = (1.0 - z[i]) * hp[i] + z[i] * an.tanh();
            assert!((got[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_scores_give_log_k() {
        let (loss, grad) = sampled_softmax_loss(&[0.3; 11]);
        assert!((loss - 11f64.ln()).abs() < 1e-12);
        assert!((grad[0] + 10.0 / 11.0).abs() < 1e-12);
        let (loss, _) = sampled_softmax_loss(&[800.0, 0.0, -3.0]);
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn identical_candidates_identical_scores() {
        let (net, theta, _) = tiny();
        let h = net.final_state(&theta, &[vec![0.1, 0.2, 0.3, 0.4, 0.5]]);
        let s = net.score_many(&theta, &h, &[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
        assert_eq!(s[0], s[1]);
        assert_eq!(s[0], net.score(&theta, &h, &[1.0, 2.0, 3.0]));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (net, mut theta, mut rng) = tiny();
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let cands: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|_| (0..3).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
            .collect();
        let mut grad = vec![0.0; net.n_params()];
        let (loss, inputs) = net.session_loss_grad(&theta, &xs, &cands, 1.0, &mut grad, true);
        assert!((loss - net.session_loss(&theta, &xs, &cands)).abs() < 1e-12);
        let eps = 1e-5;
        for i in 0..theta.len() {
            let orig = theta[i];
            theta[i] = orig + eps;
            let up = net.session_loss(&theta, &xs, &cands);
            theta[i] = orig - eps;
            let down = net.session_loss(&theta, &xs, &cands);
            theta[i] = orig;
            let num = (up - down) / (2.0 * eps);
            assert!((num - grad[i]).abs() <= 1e-7 * (1.0 + num.abs()), "param {i}: {num} vs {}", grad[i]);
        }
        let inputs = inputs.unwrap();
        // The last click only feeds predictions beyond the session.
        let mut xs2 = xs.clone();
        for t in 0..2 {
            for j in 0..5 {
                let orig = xs2[t][j];
                xs2[t][j] = orig + eps;
                let up = net.session_loss(&theta, &xs2, &cands);
                xs2[t][j] = orig - eps;
                let down = net.session_loss(&theta, &xs2, &cands);
                xs2[t][j] = orig;
                let num = (up - down) / (2.0 * eps);
                let ana = inputs.dx[t][j];
                assert!((num - ana).abs() <= 1e-7 * (1.0 + num.abs()), "x[{t}][{j}]: {num} vs {ana}");
            }
        }
        let mut c2 = cands.clone();
        for t in 0..2 {
            for k in 0..3 {
                for j in 0..3 {
                    let orig = c2[t][k][j];
                    c2[t][k][j] = orig + eps;
                    let up = net.session_loss(&theta, &xs, &c2);
                    c2[t][k][j] = orig - eps;
                    let down = net.session_loss(&theta, &xs, &c2);
                    c2[t][k][j] = orig;
                    let num = (up - down) / (2.0 * eps);
                    assert!((num - inputs.dc[t][k][j]).abs() <= 1e-7 * (1.0 + num.abs()));
                }
            }
        }
    }
}
