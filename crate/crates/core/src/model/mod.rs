//! Student pronunciation encoder.
//!
//! A post-norm transformer encoder over phoneme embeddings, mean-pooled over
//! the sequence and projected to the teacher's dimension. Forward and
//! backward passes are written out by hand and run in `f64`; parameters are
//! kept at `f32` precision so checkpoints reproduce a model exactly.
//!
//! Sequences in a batch are processed independently, which is equivalent to
//! padding with a full attention mask: padded positions neither attend nor
//! are attended to.

mod checkpoint;
mod gradcheck;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, spread, GradCheck};
pub use train::{mse_loss, train, Adam, EpochLog, TrainExample, TrainLog};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{
    attribute_count, sparse_attributes, BaselineTable, FeatureMatrix, TokenLayer, WeightMode, INIT_STD,
};
use crate::error::{Error, Result};
use crate::inventory::{AttributeTable, PronunciationSequence};
use crate::par;
use crate::tensor::Matrix;

const LAYER_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    IpaFrozen,
    IpaTrainable,
    Baseline,
}

impl Mode {
    pub fn code(self) -> u32 {
        match self {
            Mode::IpaFrozen => 0,
            Mode::IpaTrainable => 1,
            Mode::Baseline => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Mode::IpaFrozen),
            1 => Some(Mode::IpaTrainable),
            2 => Some(Mode::Baseline),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::IpaFrozen => "ipa-frozen",
            Mode::IpaTrainable => "ipa-trainable",
            Mode::Baseline => "baseline",
        }
    }

    pub fn is_ipa(self) -> bool {
        !matches!(self, Mode::Baseline)
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::IpaFrozen, Mode::IpaTrainable, Mode::Baseline]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentConfig {
    pub mode: Mode,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub ffn_mult: usize,
    pub max_len: usize,
    pub teacher_dim: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl StudentConfig {
    pub fn new(mode: Mode, d_model: usize, layers: usize, heads: usize, teacher_dim: usize) -> Self {
        Self {
            mode,
            d_model,
            layers,
            heads,
            ffn_mult: 4,
            max_len: 77,
            teacher_dim,
            seed: 0,
            learning_rate: 5e-5,
            batch_size: 32,
            epochs: 50,
        }
    }

    /// Six 768-wide layers with twelve heads.
    pub fn distilbert(mode: Mode, teacher_dim: usize) -> Self {
        Self::new(mode, 768, 6, 12, teacher_dim)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if self.d_model == 0 || self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return bad(format!("d_model {} must be a positive multiple of heads {}", self.d_model, self.heads));
        }
        if self.max_len < 2 {
            return bad(format!("max_len {} must be at least 2", self.max_len));
        }
        if self.ffn_mult == 0 || self.teacher_dim == 0 {
            return bad("ffn_mult and teacher_dim must be positive".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub wq: Matrix,
    pub bq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
    pub bv: Matrix,
    pub wo: Matrix,
    pub bo: Matrix,
    pub ln1_gamma: Matrix,
    pub ln1_beta: Matrix,
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub ln2_gamma: Matrix,
    pub ln2_beta: Matrix,
}

impl BlockParams {
    fn init(d: usize, ffn: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            wq: Matrix::normal(d, d, INIT_STD, rng),
            bq: Matrix::zeros(1, d),
            wk: Matrix::normal(d, d, INIT_STD, rng),
            wv: Matrix::normal(d, d, INIT_STD, rng),
            bv: Matrix::zeros(1, d),
            wo: Matrix::normal(d, d, INIT_STD, rng),
            bo: Matrix::zeros(1, d),
            ln1_gamma: Matrix::filled(1, d, 1.0),
            ln1_beta: Matrix::zeros(1, d),
            w1: Matrix::normal(d, ffn, INIT_STD, rng),
            b1: Matrix::zeros(1, ffn),
            w2: Matrix::normal(ffn, d, INIT_STD, rng),
            b2: Matrix::zeros(1, d),
            ln2_gamma: Matrix::filled(1, d, 1.0),
            ln2_beta: Matrix::zeros(1, d),
        }
    }

    fn tensors(&self) -> [(&'static str, &Matrix); 15] {
        [
            ("attn.q.weight", &self.wq),
            ("attn.q.bias", &self.bq),
            ("attn.k.weight", &self.wk),
            ("attn.v.weight", &self.wv),
            ("attn.v.bias", &self.bv),
            ("attn.o.weight", &self.wo),
            ("attn.o.bias", &self.bo),
            ("ln1.gamma", &self.ln1_gamma),
            ("ln1.beta", &self.ln1_beta),
            ("ffn.w1", &self.w1),
            ("ffn.b1", &self.b1),
            ("ffn.w2", &self.w2),
            ("ffn.b2", &self.b2),
            ("ln2.gamma", &self.ln2_gamma),
            ("ln2.beta", &self.ln2_beta),
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 15] {
        [
            &mut self.wq,
            &mut self.bq,
            &mut self.wk,
            &mut self.wv,
            &mut self.bv,
            &mut self.wo,
            &mut self.bo,
            &mut self.ln1_gamma,
            &mut self.ln1_beta,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.ln2_gamma,
            &mut self.ln2_beta,
        ]
    }
}

/// Every learnable tensor of the student. Gradients and optimizer moments
/// use the same structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// `N × N` feature matrix (IPA modes) or `V × d_model` lookup table.
    pub token: Matrix,
    /// `N × d_model`; absent when the token layer already emits `d_model`.
    pub input_proj: Option<Matrix>,
    pub pos: Matrix,
    pub blocks: Vec<BlockParams>,
    pub out_w: Matrix,
    pub out_b: Matrix,
}

impl Params {
    /// `(name, tensor)` in checkpoint order.
    pub fn named(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![("token.weight".to_string(), &self.token)];
        if let Some(p) = &self.input_proj {
            out.push(("input_proj.weight".into(), p));
        }
        out.push(("pos.weight".into(), &self.pos));
        for (l, b) in self.blocks.iter().enumerate() {
            out.extend(b.tensors().into_iter().map(|(n, m)| (format!("layers.{l}.{n}"), m)));
        }
        out.push(("out.weight".into(), &self.out_w));
        out.push(("out.bias".into(), &self.out_b));
        out
    }

    /// Mutable tensors in the same order as [`Params::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = vec![&mut self.token];
        if let Some(p) = &mut self.input_proj {
            out.push(p);
        }
        out.push(&mut self.pos);
        for b in &mut self.blocks {
            out.extend(b.tensors_mut());
        }
        out.push(&mut self.out_w);
        out.push(&mut self.out_b);
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x = 0.0);
        }
        z
    }

    pub fn add_assign(&mut self, other: &Params) {
        let others = other.named();
        for (t, (_, o)) in self.tensors_mut().into_iter().zip(others) {
            t.add_assign(o);
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.named().iter().map(|(_, m)| m.data.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct StudentModel {
    config: StudentConfig,
    /// Sparse attribute vector per token id (IPA modes).
    features: Vec<Vec<(usize, f64)>>,
    attribute_dims: usize,
    vocab: usize,
    pub params: Params,
}

impl StudentModel {
    pub fn new(config: StudentConfig, table: &AttributeTable) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = attribute_count(table);
        let d = config.d_model;
        let (token, input_proj) = if config.mode.is_ipa() {
            let token = Matrix::normal(n, n, INIT_STD, &mut rng);
            let proj = (n != d).then(|| Matrix::normal(n, d, INIT_STD, &mut rng));
            (token, proj)
        } else {
            (Matrix::normal(table.len(), d, INIT_STD, &mut rng), None)
        };
        let pos = Matrix::normal(config.max_len, d, INIT_STD, &mut rng);
        let blocks = (0..config.layers).map(|_| BlockParams::init(d, d * config.ffn_mult, &mut rng)).collect();
        let out_w = Matrix::normal(d, config.teacher_dim, INIT_STD, &mut rng);
        let out_b = Matrix::zeros(1, config.teacher_dim);
        let params = Params { token, input_proj, pos, blocks, out_w, out_b };
        Ok(Self::from_parts(config, table, params))
    }

    fn from_parts(config: StudentConfig, table: &AttributeTable, params: Params) -> Self {
        let features = (0..table.len()).map(|i| sparse_attributes(table, crate::TokenId(i as u16))).collect();
        Self { config, features, attribute_dims: attribute_count(table), vocab: table.len(), params }
    }

    pub fn config(&self) -> &StudentConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut StudentConfig {
        &mut self.config
    }

    pub fn attribute_dims(&self) -> usize {
        self.attribute_dims
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    /// Whether the named tensor receives optimizer updates.
    pub fn is_trainable(&self, name: &str) -> bool {
        !(name == "token.weight" && self.config.mode == Mode::IpaFrozen)
    }

    /// The phoneme embedding layer as a standalone [`TokenLayer`].
    pub fn token_layer(&self) -> TokenLayer {
        match self.config.mode {
            Mode::IpaFrozen => {
                TokenLayer::Attribute(FeatureMatrix::from_matrix(self.params.token.clone(), WeightMode::Frozen))
            }
            Mode::IpaTrainable => {
                TokenLayer::Attribute(FeatureMatrix::from_matrix(self.params.token.clone(), WeightMode::Trainable))
            }
            Mode::Baseline => TokenLayer::Baseline(BaselineTable { weights: self.params.token.clone() }),
        }
    }

    fn prepare<'a>(&self, seq: &'a PronunciationSequence) -> Result<&'a [crate::TokenId]> {
        if seq.is_empty() {
            return Err(Error::Precondition("cannot encode an empty sequence".into()));
        }
        if let Some(bad) = seq.iter().find(|id| id.index() >= self.vocab) {
            return Err(Error::UnknownToken(bad.to_string()));
        }
        let len = seq.len().min(self.config.max_len);
        if len < seq.len() {
            log::warn!("truncating sequence of {} tokens to max_len {}", seq.len(), self.config.max_len);
        }
        Ok(&seq.tokens[..len])
    }

    /// Encode one sequence.
    pub fn encode(&self, seq: &PronunciationSequence) -> Result<Vec<f64>> {
        let tokens = self.prepare(seq)?;
        Ok(self.run(tokens).0)
    }

    /// Encode a batch; outputs follow input order.
    pub fn forward(&self, batch: &[PronunciationSequence]) -> Result<Vec<Vec<f64>>> {
        par::map(batch, |s| self.encode(s)).into_iter().collect()
    }

    /// Squared error summed over dimensions and its parameter gradient
    /// (of that sum) for one example.
    pub fn example_gradient(&self, seq: &PronunciationSequence, target: &[f64]) -> Result<(f64, Vec<f64>, Params)> {
        let tokens = self.prepare(seq)?;
        if target.len() != self.config.teacher_dim {
            return Err(Error::DimensionMismatch { expected: self.config.teacher_dim, actual: target.len() });
        }
        let (y, cache) = self.run(tokens);
        let dy: Vec<f64> = y.iter().zip(target).map(|(a, b)| 2.0 * (a - b)).collect();
        let sq = y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
        let grads = self.backward(tokens, &cache, &dy);
        Ok((sq, y, grads))
    }

    /// Batch MSE (mean over examples and dimensions) and its gradient.
    pub fn loss_and_gradient(&self, batch: &[PronunciationSequence], targets: &[Vec<f64>]) -> Result<(f64, Params)> {
        if batch.len() != targets.len() || batch.is_empty() {
            return Err(Error::DimensionMismatch { expected: batch.len(), actual: targets.len() });
        }
        let idx: Vec<usize> = (0..batch.len()).collect();
        let per_example = par::map(&idx, |&i| self.example_gradient(&batch[i], &targets[i]));
        let scale = 1.0 / (batch.len() * self.config.teacher_dim) as f64;
        let mut total = self.params.zeros_like();
        let mut sq = 0.0;
        for r in per_example {
            let (s, _, g) = r?;
            sq += s;
            total.add_assign(&g);
        }
        for t in total.tensors_mut() {
            t.scale(scale);
        }
        Ok((sq * scale, total))
    }

    /// Batch MSE without gradients.
    pub fn loss(&self, batch: &[PronunciationSequence], targets: &[Vec<f64>]) -> Result<f64> {
        let preds = self.forward(batch)?;
        mse_loss(&preds, targets)
    }

    fn embed_tokens(&self, tokens: &[crate::TokenId]) -> Matrix {
        let width = self.params.token.cols;
        let mut e = Matrix::zeros(tokens.len(), width);
        for (t, id) in tokens.iter().enumerate() {
            let row = e.row_mut(t);
            if self.config.mode.is_ipa() {
                for &(i, x) in &self.features[id.index()] {
                    for (o, &w) in row.iter_mut().zip(self.params.token.row(i)) {
                        *o += x * w;
                    }
                }
            } else {
                row.copy_from_slice(self.params.token.row(id.index()));
            }
        }
        e
    }

    fn run(&self, tokens: &[crate::TokenId]) -> (Vec<f64>, ForwardCache) {
        let p = &self.params;
        let embedded = self.embed_tokens(tokens);
        let mut h = match &p.input_proj {
            Some(proj) => embedded.matmul(proj),
            None => embedded.clone(),
        };
        for t in 0..tokens.len() {
            for (x, &q) in h.row_mut(t).iter_mut().zip(p.pos.row(t)) {
                *x += q;
            }
        }
        let mut blocks = Vec::with_capacity(p.blocks.len());
        for b in &p.blocks {
            let (out, cache) = block_forward(b, &h, self.config.heads);
            blocks.push(cache);
            h = out;
        }
        let len = tokens.len() as f64;
        let mut pooled = vec![0.0; h.cols];
        for t in 0..h.rows {
            for (s, &x) in pooled.iter_mut().zip(h.row(t)) {
                *s += x;
            }
        }
        pooled.iter_mut().for_each(|x| *x /= len);
        let mut y = p.out_b.data.clone();
        for (k, &a) in pooled.iter().enumerate() {
            for (o, &w) in y.iter_mut().zip(p.out_w.row(k)) {
                *o += a * w;
            }
        }
        (y, ForwardCache { embedded, blocks, pooled })
    }

    fn backward(&self, tokens: &[crate::TokenId], cache: &ForwardCache, dy: &[f64]) -> Params {
        let p = &self.params;
        let mut g = p.zeros_like();
        let len = tokens.len();
        for (k, &a) in cache.pooled.iter().enumerate() {
            for (o, &d) in g.out_w.row_mut(k).iter_mut().zip(dy) {
                *o += a * d;
            }
        }
        for (o, &d) in g.out_b.data.iter_mut().zip(dy) {
            *o += d;
        }
        let dpooled: Vec<f64> = (0..p.out_w.rows).map(|k| crate::tensor::dot(p.out_w.row(k), dy)).collect();
        let mut dh = Matrix::zeros(len, self.config.d_model);
        for t in 0..len {
            for (o, &d) in dh.row_mut(t).iter_mut().zip(&dpooled) {
                *o = d / len as f64;
            }
        }
        for (l, b) in p.blocks.iter().enumerate().rev() {
            dh = block_backward(b, &cache.blocks[l], &dh, self.config.heads, &mut g.blocks[l]);
        }
        for t in 0..len {
            for (o, &d) in g.pos.row_mut(t).iter_mut().zip(dh.row(t)) {
                *o += d;
            }
        }
        let dembedded = match (&p.input_proj, &mut g.input_proj) {
            (Some(proj), Some(gproj)) => {
                gproj.add_assign(&cache.embedded.t_matmul(&dh));
                dh.matmul_t(proj)
            }
            _ => dh,
        };
        if self.is_trainable("token.weight") {
            for (t, id) in tokens.iter().enumerate() {
                let de = dembedded.row(t);
                if self.config.mode.is_ipa() {
                    for &(i, x) in &self.features[id.index()] {
                        for (o, &d) in g.token.row_mut(i).iter_mut().zip(de) {
                            *o += x * d;
                        }
                    }
                } else {
                    for (o, &d) in g.token.row_mut(id.index()).iter_mut().zip(de) {
                        *o += d;
                    }
                }
            }
        }
        g
    }
}

struct ForwardCache {
    embedded: Matrix,
    blocks: Vec<BlockCache>,
    pooled: Vec<f64>,
}

struct BlockCache {
    input: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    /// `heads` row-major `L × L` attention probability matrices.
    probs: Vec<Matrix>,
    context: Matrix,
    ln1: LayerNormCache,
    h1: Matrix,
    pre_act: Matrix,
    act: Matrix,
    ln2: LayerNormCache,
}

struct LayerNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

fn linear(x: &Matrix, w: &Matrix, b: Option<&Matrix>) -> Matrix {
    let mut y = x.matmul(w);
    if let Some(b) = b {
        y.add_row(&b.data);
    }
    y
}

fn layer_norm(x: &Matrix, gamma: &Matrix, beta: &Matrix) -> (Matrix, LayerNormCache) {
    let n = x.cols as f64;
    let mut normalized = Matrix::zeros(x.rows, x.cols);
    let mut out = Matrix::zeros(x.rows, x.cols);
    let mut inv_std = Vec::with_capacity(x.rows);
    for r in 0..x.rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(inv);
        for c in 0..x.cols {
            let xh = (row[c] - mean) * inv;
            normalized.data[r * x.cols + c] = xh;
            out.data[r * x.cols + c] = xh * gamma.data[c] + beta.data[c];
        }
    }
    (out, LayerNormCache { normalized, inv_std })
}

fn layer_norm_backward(
    dout: &Matrix,
    cache: &LayerNormCache,
    gamma: &Matrix,
    dgamma: &mut Matrix,
    dbeta: &mut Matrix,
) -> Matrix {
    let cols = dout.cols;
    let n = cols as f64;
    let mut dx = Matrix::zeros(dout.rows, cols);
    for r in 0..dout.rows {
        let dy = dout.row(r);
        let xh = cache.normalized.row(r);
        let mut dxh = vec![0.0; cols];
        for c in 0..cols {
            dgamma.data[c] += dy[c] * xh[c];
            dbeta.data[c] += dy[c];
            dxh[c] = dy[c] * gamma.data[c];
        }
        let mean_dxh = dxh.iter().sum::<f64>() / n;
        let mean_dxh_xh = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / n;
        let inv = cache.inv_std[r];
        for c in 0..cols {
            dx.data[r * cols + c] = inv * (dxh[c] - mean_dxh - xh[c] * mean_dxh_xh);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

fn block_forward(b: &BlockParams, x: &Matrix, heads: usize) -> (Matrix, BlockCache) {
    let (len, d) = x.shape();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = linear(x, &b.wq, Some(&b.bq));
    let k = linear(x, &b.wk, None);
    let v = linear(x, &b.wv, Some(&b.bv));
    let mut context = Matrix::zeros(len, d);
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let off = h * dh;
        let mut p = Matrix::zeros(len, len);
        for i in 0..len {
            let qi = &q.row(i)[off..off + dh];
            let row = p.row_mut(i);
            for j in 0..len {
                row[j] = crate::tensor::dot(qi, &k.row(j)[off..off + dh]) * scale;
            }
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for s in row.iter_mut() {
                *s = (*s - max).exp();
                sum += *s;
            }
            row.iter_mut().for_each(|s| *s /= sum);
        }
        for i in 0..len {
            for j in 0..len {
                let w = p.get(i, j);
                let vj = &v.row(j)[off..off + dh];
                for (c, &vv) in context.row_mut(i)[off..off + dh].iter_mut().zip(vj) {
                    *c += w * vv;
                }
            }
        }
        probs.push(p);
    }
    let mut attn = linear(&context, &b.wo, Some(&b.bo));
    attn.add_assign(x);
    let (h1, ln1) = layer_norm(&attn, &b.ln1_gamma, &b.ln1_beta);
    let pre_act = linear(&h1, &b.w1, Some(&b.b1));
    let act = Matrix::from_vec(pre_act.rows, pre_act.cols, pre_act.data.iter().map(|&z| gelu(z)).collect());
    let mut ffn = linear(&act, &b.w2, Some(&b.b2));
    ffn.add_assign(&h1);
    let (out, ln2) = layer_norm(&ffn, &b.ln2_gamma, &b.ln2_beta);
    let cache = BlockCache { input: x.clone(), q, k, v, probs, context, ln1, h1, pre_act, act, ln2 };
    (out, cache)
}

fn block_backward(b: &BlockParams, c: &BlockCache, dout: &Matrix, heads: usize, g: &mut BlockParams) -> Matrix {
    let (len, d) = dout.shape();
    let dh = d / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    // out = LN2(h1 + FFN(h1))
    let dffn = layer_norm_backward(dout, &c.ln2, &b.ln2_gamma, &mut g.ln2_gamma, &mut g.ln2_beta);
    g.w2.add_assign(&c.act.t_matmul(&dffn));
    for (o, s) in g.b2.data.iter_mut().zip(dffn.col_sums()) {
        *o += s;
    }
    let mut dpre = dffn.matmul_t(&b.w2);
    for (dz, &z) in dpre.data.iter_mut().zip(&c.pre_act.data) {
        *dz *= gelu_grad(z);
    }
    g.w1.add_assign(&c.h1.t_matmul(&dpre));
    for (o, s) in g.b1.data.iter_mut().zip(dpre.col_sums()) {
        *o += s;
    }
    let mut dh1 = dpre.matmul_t(&b.w1);
    dh1.add_assign(&dffn);

    // h1 = LN1(x + Attn(x))
    let dattn = layer_norm_backward(&dh1, &c.ln1, &b.ln1_gamma, &mut g.ln1_gamma, &mut g.ln1_beta);
    g.wo.add_assign(&c.context.t_matmul(&dattn));
    for (o, s) in g.bo.data.iter_mut().zip(dattn.col_sums()) {
        *o += s;
    }
    let dcontext = dattn.matmul_t(&b.wo);
    let mut dq = Matrix::zeros(len, d);
    let mut dk = Matrix::zeros(len, d);
    let mut dv = Matrix::zeros(len, d);
    for h in 0..heads {
        let off = h * dh;
        let p = &c.probs[h];
        for i in 0..len {
            let dci = &dcontext.row(i)[off..off + dh];
            // dP_ij = dctx_i · v_j ; dV_j += P_ij dctx_i
            let mut dp = vec![0.0; len];
            for j in 0..len {
                dp[j] = crate::tensor::dot(dci, &c.v.row(j)[off..off + dh]);
                let pij = p.get(i, j);
                for (o, &x) in dv.row_mut(j)[off..off + dh].iter_mut().zip(dci) {
                    *o += pij * x;
                }
            }
            let weighted: f64 = (0..len).map(|j| p.get(i, j) * dp[j]).sum();
            for j in 0..len {
                let ds = p.get(i, j) * (dp[j] - weighted) * scale;
                if ds == 0.0 {
                    continue;
                }
                let kj = c.k.row(j)[off..off + dh].to_vec();
                let qi = c.q.row(i)[off..off + dh].to_vec();
                for (o, x) in dq.row_mut(i)[off..off + dh].iter_mut().zip(&kj) {
                    *o += ds * x;
                }
                for (o, x) in dk.row_mut(j)[off..off + dh].iter_mut().zip(&qi) {
                    *o += ds * x;
                }
            }
        }
    }
    g.wq.add_assign(&c.input.t_matmul(&dq));
    g.wk.add_assign(&c.input.t_matmul(&dk));
    g.wv.add_assign(&c.input.t_matmul(&dv));
    for (o, s) in g.bq.data.iter_mut().zip(dq.col_sums()) {
        *o += s;
    }
    for (o, s) in g.bv.data.iter_mut().zip(dv.col_sums()) {
        *o += s;
    }
    let mut dx = dattn;
    dx.add_assign(&dq.matmul_t(&b.wq));
    dx.add_assign(&dk.matmul_t(&b.wk));
    dx.add_assign(&dv.matmul_t(&b.wv));
    dx
}
