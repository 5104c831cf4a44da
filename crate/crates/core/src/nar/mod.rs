//! NAR-lite: a hybrid GRU next-article ranker over per-click feature
//! vectors, trained online with a sampled-softmax loss. Every session is
//! used for training once, after the hour it belongs to was evaluated.

pub mod features;
pub mod gradcheck;
pub mod network;

use std::sync::Arc;

use log::warn;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use features::{Assembled, FeatureBuilder, FeatureSpec, RunningStats, TableSpec};
pub use gradcheck::{check_gradients, relative_error, TensorCheck};
pub use network::{sampled_softmax_loss, InputGrads, Layout, NetDims, Network};

use crate::baselines::{HourContext, Query, Recommender};
use crate::codec::{Reader, Writer};
use crate::content::EmbeddingStore;
use crate::error::{Error, Result};
use crate::ingest::{ArticleIdx, Catalog, Session, Timestamp};
use crate::keyvalue::KeyValues;

#[derive(Clone, Debug, PartialEq)]
pub struct NarConfig {
    pub features: FeatureSpec,
    pub hidden: usize,
    pub head_hidden: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub n_train_neg: usize,
    pub seed: u64,
}

impl Default for NarConfig {
    fn default() -> Self {
        NarConfig {
            features: FeatureSpec::default(),
            hidden: 64,
            head_hidden: 128,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 64,
            n_train_neg: 10,
            seed: 1,
        }
    }
}

impl NarConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("nar: {what}")));
        if self.hidden == 0 || self.head_hidden == 0 {
            return bad("hidden sizes must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.adam_eps <= 0.0 {
            return bad("Adam decays must lie in [0,1) and epsilon be positive");
        }
        if self.batch_size == 0 || self.n_train_neg == 0 {
            return bad("batch_size and n_train_neg must be >= 1");
        }
        Ok(())
    }

    /// Hyperparameters for run manifests, under a `nar.` prefix.
    pub fn manifest(&self) -> KeyValues {
        let f = &self.features;
        let mut kv = KeyValues::default();
        let mut put = |k: &str, v: String| kv.insert(format!("nar.{k}"), v);
        put("use_ace", f.use_ace.to_string());
        put("d_ace", f.d_ace.to_string());
        put("use_author", f.use_author.to_string());
        put("hidden", self.hidden.to_string());
        put("head_hidden", self.head_hidden.to_string());
        put("lr", self.lr.to_string());
        put("beta1", self.beta1.to_string());
        put("beta2", self.beta2.to_string());
        put("adam_eps", self.adam_eps.to_string());
        put("batch_size", self.batch_size.to_string());
        put("n_train_neg", self.n_train_neg.to_string());
        put("seed", self.seed.to_string());
        put("loss", "sampled_softmax".into());
        put("category_buckets", f.category.buckets.to_string());
        put("category_dim", f.category.dim.to_string());
        put("context_buckets", f.context.buckets.to_string());
        put("context_dim", f.context.dim.to_string());
        kv
    }
}

/// Adam with bias-corrected moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..theta.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            theta[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

const SNAPSHOT_VERSION: u32 = 1;
const EMBEDDING_INIT: f64 = 0.1;

pub struct NarRecommender {
    config: NarConfig,
    label: String,
    net: Network,
    theta: Vec<f64>,
    features: FeatureBuilder,
    adam: Adam,
    grad: Vec<f64>,
    pending_sessions: usize,
    pending_positions: usize,
    pending_loss: f64,
    rng: ChaCha8Rng,
    losses: Vec<f64>,
    warned_hour: Option<Timestamp>,
}

impl NarRecommender {
    /// `ace` must be `Some` exactly when `config.features.use_ace`.
    pub fn new(config: NarConfig, catalog: &Catalog, ace: Option<Arc<EmbeddingStore>>) -> Result<Self> {
        config.validate()?;
        let spec = config.features.clone();
        let net = Network::new(NetDims {
            d_in: spec.d_in(),
            d_c: spec.d_article(),
            d_h: config.hidden,
            d_m: config.head_hidden,
        });
        let n = net.n_params() + spec.n_table_params();
        let features = FeatureBuilder::new(spec.clone(), catalog, ace, net.n_params())?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut theta = vec![0.0; n];
        net.init(&mut theta[..net.n_params()], &mut rng);
        for v in &mut theta[net.n_params()..] {
            *v = rng.random_range(-EMBEDDING_INIT..EMBEDDING_INIT);
        }
        let label = if spec.use_ace { "NAR".to_string() } else { "No-ACE".to_string() };
        Ok(NarRecommender {
            adam: Adam::new(n, config.lr, config.beta1, config.beta2, config.adam_eps),
            grad: vec![0.0; n],
            config,
            label,
            net,
            theta,
            features,
            pending_sessions: 0,
            pending_positions: 0,
            pending_loss: 0.0,
            rng,
            losses: Vec::new(),
            warned_hour: None,
        })
    }

    /// Renames the recommender in reports (e.g. after its encoder).
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn config(&self) -> &NarConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn d_in(&self) -> usize {
        self.net.dims.d_in
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn features(&self) -> &FeatureBuilder {
        &self.features
    }

    /// Mean loss per prediction of every optimizer step so far.
    pub fn loss_history(&self) -> &[f64] {
        &self.losses
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.adam.steps()
    }

    /// Session state after the given clicks.
    pub fn session_state(&self, clicks: &[crate::ingest::ClickEvent]) -> Vec<f64> {
        let xs: Vec<Vec<f64>> = clicks.iter().map(|c| self.features.click_vector(&self.theta, c).v).collect();
        self.net.final_state(&self.theta, &xs)
    }

    fn negatives(&mut self, session: &Session, pool: &[ArticleIdx], hour: Timestamp) -> Vec<ArticleIdx> {
        let eligible: Vec<ArticleIdx> = pool
            .iter()
            .copied()
            .filter(|a| !session.clicks.iter().any(|c| c.article == *a))
            .collect();
        let k = self.config.n_train_neg.min(eligible.len());
        if k < self.config.n_train_neg && self.warned_hour != Some(hour) {
            warn!(
                "{}: only {} training negatives available in hour starting {hour}",
                self.label,
                eligible.len()
            );
            self.warned_hour = Some(hour);
        }
        sample(&mut self.rng, eligible.len(), k)
            .into_iter()
            .map(|i| eligible[i])
            .collect()
    }

    /// Accumulates the gradient of one session; returns the summed loss and
    /// number of predictions.
    pub fn accumulate_session(&mut self, session: &Session, ctx: &HourContext<'_>) -> (f64, usize) {
        if session.clicks.len() < 2 {
            return (0.0, 0);
        }
        let xs: Vec<Assembled> = session
            .clicks
            .iter()
            .map(|c| self.features.click_vector(&self.theta, c))
            .collect();
        let mut cands: Vec<Vec<Assembled>> = Vec::with_capacity(xs.len() - 1);
        for t in 0..session.clicks.len() - 1 {
            let now = session.clicks[t].ts;
            let negs = self.negatives(session, ctx.recent, ctx.hour_start);
            if negs.is_empty() {
                break;
            }
            let mut c = Vec::with_capacity(negs.len() + 1);
            c.push(self.features.article_vector(&self.theta, session.clicks[t + 1].article, now));
            c.extend(negs.iter().map(|&a| self.features.article_vector(&self.theta, a, now)));
            cands.push(c);
        }
        if cands.is_empty() {
            return (0.0, 0);
        }
        let x_vecs: Vec<&[f64]> = xs.iter().map(|a| a.v.as_slice()).collect();
        let c_vecs: Vec<Vec<&[f64]>> = cands.iter().map(|cs| cs.iter().map(|a| a.v.as_slice()).collect()).collect();
        let (loss, inputs) = self
            .net
            .session_loss_grad(&self.theta, &x_vecs, &c_vecs, 1.0, &mut self.grad, true);
        let inputs = inputs.expect("input gradients requested");
        for (t, dx) in inputs.dx.iter().enumerate() {
            xs[t].scatter(dx, 1.0, &mut self.grad);
        }
        for (t, dcs) in inputs.dc.iter().enumerate() {
            for (k, dc) in dcs.iter().enumerate() {
                cands[t][k].scatter(dc, 1.0, &mut self.grad);
            }
        }
        (loss, cands.len())
    }

    /// Applies the accumulated mini-batch gradient, if any.
    pub fn flush(&mut self) {
        if self.pending_positions > 0 {
            let scale = 1.0 / self.pending_positions as f64;
            self.grad.iter_mut().for_each(|g| *g *= scale);
            self.adam.step(&mut self.theta, &self.grad);
            self.losses.push(self.pending_loss * scale);
        }
        self.grad.iter_mut().for_each(|g| *g = 0.0);
        self.pending_sessions = 0;
        self.pending_positions = 0;
        self.pending_loss = 0.0;
    }

    fn write_rng(&self, w: &mut Writer) {
        for b in self.rng.get_seed() {
            w.u8(b);
        }
        w.u64(self.rng.get_stream());
        let pos = self.rng.get_word_pos();
        w.u64(pos as u64);
        w.u64((pos >> 64) as u64);
    }

    fn read_rng(r: &mut Reader<'_>) -> Result<ChaCha8Rng> {
        let mut seed = [0u8; 32];
        for b in &mut seed {
            *b = r.u8()?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(r.u64()?);
        let lo = r.u64()? as u128;
        let hi = r.u64()? as u128;
        rng.set_word_pos(lo | (hi << 64));
        Ok(rng)
    }
}

impl Recommender for NarRecommender {
    fn name(&self) -> &str {
        &self.label
    }

    fn observe(&mut self, session: &Session, ctx: &HourContext<'_>) {
        let (loss, positions) = self.accumulate_session(session, ctx);
        self.features.learn(&session.clicks);
        self.pending_loss += loss;
        self.pending_positions += positions;
        self.pending_sessions += 1;
        if self.pending_sessions >= self.config.batch_size {
            self.flush();
        }
    }

    fn end_hour(&mut self, _ctx: &HourContext<'_>) {
        self.flush();
    }

    fn score(&self, query: &Query<'_>, candidates: &[ArticleIdx]) -> Vec<f64> {
        let h = self.session_state(query.clicks);
        let now = query.now();
        let cands: Vec<Vec<f64>> = candidates
            .iter()
            .map(|&c| self.features.article_vector(&self.theta, c, now).v)
            .collect();
        self.net.score_many(&self.theta, &h, &cands)
    }

    fn snapshot(&self) -> Vec<u8> {
        let c = &self.config;
        let mut w = Writer::new("nar", SNAPSHOT_VERSION);
        w.str(&self.label);
        c.features.write(&mut w);
        for v in [c.hidden, c.head_hidden, c.batch_size, c.n_train_neg] {
            w.len(v);
        }
        for v in [c.lr, c.beta1, c.beta2, c.adam_eps] {
            w.f64(v);
        }
        w.u64(c.seed);
        w.f64s(&self.theta);
        w.u64(self.adam.t);
        w.f64s(&self.adam.m);
        w.f64s(&self.adam.v);
        w.f64s(&self.grad);
        w.len(self.pending_sessions);
        w.len(self.pending_positions);
        w.f64(self.pending_loss);
        w.f64s(&self.losses);
        self.write_rng(&mut w);
        self.features.write_state(&mut w);
        w.into_bytes()
    }

    /// Restores a snapshot taken from a model with the same configuration.
    fn restore(&mut self, bytes: &[u8]) -> Result<()> {
        let (mut r, _) = Reader::new(bytes, "nar")?;
        let label = r.str()?;
        let spec = FeatureSpec::read(&mut r)?;
        let mut sizes = [0usize; 4];
        for s in &mut sizes {
            *s = r.u64()? as usize;
        }
        let mut hyper = [0.0; 4];
        for h in &mut hyper {
            *h = r.f64()?;
        }
        let seed = r.u64()?;
        let c = &self.config;
        if spec != c.features
            || sizes != [c.hidden, c.head_hidden, c.batch_size, c.n_train_neg]
            || hyper != [c.lr, c.beta1, c.beta2, c.adam_eps]
            || seed != c.seed
        {
            return Err(Error::Snapshot("NAR snapshot has a different configuration".into()));
        }
        let theta = r.f64s()?;
        if theta.len() != self.theta.len() {
            return Err(Error::Snapshot("NAR parameter count mismatch".into()));
        }
        let t = r.u64()?;
        let m = r.f64s()?;
        let v = r.f64s()?;
        let grad = r.f64s()?;
        if m.len() != theta.len() || v.len() != theta.len() || grad.len() != theta.len() {
            return Err(Error::Snapshot("NAR optimizer state size mismatch".into()));
        }
        self.pending_sessions = r.u64()? as usize;
        self.pending_positions = r.u64()? as usize;
        self.pending_loss = r.f64()?;
        self.losses = r.f64s()?;
        self.rng = Self::read_rng(&mut r)?;
        self.features.read_state(&mut r)?;
        r.finish()?;
        self.label = label;
        self.theta = theta;
        self.adam.t = t;
        self.adam.m = m;
        self.adam.v = v;
        self.grad = grad;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
