use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datagen::DrugFeatures;
use crate::error::{Error, Result};
use crate::fusion::ModelConfig;
use crate::modality::Modality;

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed)
}

/// One affine map stored in the flat parameter vector: a row-major
/// `n_out × n_in` weight block at `w` followed by `n_out` biases at `b`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Affine {
    pub name: String,
    pub n_in: usize,
    pub n_out: usize,
    pub w: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub layers: Vec<Affine>,
    /// Layer index of modality `m` at stage `k` is `enc[m][k - 1]`; empty
    /// for disabled modalities.
    pub enc: [Vec<usize>; 4],
    pub cls: [usize; 4],
    pub n_params: usize,
}

impl Layout {
    fn new(config: &ModelConfig) -> Self {
        let mut layers = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, n_in: usize, n_out: usize| {
            layers.push(Affine {
                name,
                n_in,
                n_out,
                w: offset,
                b: offset + n_in * n_out,
            });
            offset += n_in * n_out + n_out;
            layers.len() - 1
        };

        let mut enc: [Vec<usize>; 4] = Default::default();
        for m in config.modalities.iter() {
            let letter = m.letter().to_ascii_lowercase();
            for k in 1..=config.k_stages {
                let n_in = config.stage_input(m, k);
                enc[m.index()].push(push(format!("enc.{letter}.{k}"), n_in, config.hidden_dim));
            }
        }
        let dims = config.classifier_dims();
        let mut n_in = 2 * config.fused_width();
        let mut cls = [0; 4];
        for (l, &n_out) in dims.iter().enumerate() {
            cls[l] = push(format!("cls.{}", l + 1), n_in, n_out);
            n_in = n_out;
        }
        Self {
            layers,
            enc,
            cls,
            n_params: offset,
        }
    }
}

/// Named view of one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The two-drug fusion network with all parameters in one flat vector.
///
/// Per drug, modality `m` runs `k_stages` maps `h_m^k = σ(W [h_m^{k−1}; h_e^{k−1}] + b)`
/// where `e` is the enhancer of `m` (S for G, E for T) when enabled and is
/// absent otherwise. The fused vector holds, for each enabled modality in
/// G, S, T, E order, the max-pooled input followed by `h_m^K`. The pair
/// input to the classifier is `[fused(a); fused(b)]`. Modality maps are
/// shared by both drugs.
#[derive(Debug)]
pub struct FusionModel {
    config: ModelConfig,
    layout: Layout,
    params: Vec<f64>,
    seed: u64,
    id: u64,
    generation: u64,
}

impl Clone for FusionModel {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            layout: self.layout.clone(),
            params: self.params.clone(),
            seed: self.seed,
            id: fresh_id(),
            generation: 0,
        }
    }
}

impl PartialEq for FusionModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.params == other.params
    }
}

#[derive(Debug, Clone, Default)]
struct DrugCache {
    /// `h[m][k]` for `k = 0..=K`; `h[m][0]` is the raw input block.
    h: [Vec<Vec<f64>>; 4],
    /// Concatenated map input at stage `k`, stored at `x[m][k - 1]`.
    x: [Vec<Vec<f64>>; 4],
    pool_arg: [Vec<usize>; 4],
}

/// Activations recorded by a forward pass, needed by `backward`.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    model_id: u64,
    generation: u64,
    drugs: [DrugCache; 2],
    /// Input of classifier layer `l`.
    cls_in: [Vec<f64>; 4],
    logits: Vec<f64>,
}

impl ForwardCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn reset(v: &mut Vec<Vec<f64>>, n: usize) {
    v.resize_with(n, Vec::new);
}

impl FusionModel {
    /// Fan-in scaled uniform weights in `±sqrt(6 / fan_in)`, zero biases.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.n_params];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l in &layout.layers {
            let bound = Self::init_bound(l.n_in);
            for w in &mut params[l.w..l.w + l.n_in * l.n_out] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(Self {
            config,
            layout,
            params,
            seed,
            id: fresh_id(),
            generation: 0,
        })
    }

    /// Bound of the initial weight magnitudes for a layer with `fan_in` inputs.
    pub fn init_bound(fan_in: usize) -> f64 {
        (6.0 / fan_in as f64).sqrt()
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_params(&self) -> usize {
        self.layout.n_params
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access to the parameters. Invalidates earlier forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.params
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Weight (`[n_out, n_in]`) and bias (`[n_out]`) tensors in layout order.
    pub fn tensors(&self) -> Vec<TensorInfo> {
        self.layout
            .layers
            .iter()
            .flat_map(|l| {
                [
                    TensorInfo {
                        name: format!("{}.weight", l.name),
                        shape: vec![l.n_out, l.n_in],
                        offset: l.w,
                    },
                    TensorInfo {
                        name: format!("{}.bias", l.name),
                        shape: vec![l.n_out],
                        offset: l.b,
                    },
                ]
            })
            .collect()
    }

    pub fn tensor(&self, name: &str) -> Option<(TensorInfo, &[f64])> {
        let info = self.tensors().into_iter().find(|t| t.name == name)?;
        let slice = &self.params[info.offset..info.offset + info.len()];
        Some((info, slice))
    }

    fn check_input(&self, f: &DrugFeatures, which: &str) -> Result<()> {
        for m in self.config.modalities.iter() {
            let (got, want) = (f.get(m).len(), self.config.embed_dims[m.index()]);
            if got != want {
                return Err(Error::Shape(format!(
                    "drug {which} block {} has width {got}, model expects {want}",
                    m.letter()
                )));
            }
        }
        Ok(())
    }

    fn affine(&self, l: &Affine, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), l.n_in);
        out.clear();
        let w = &self.params[l.w..l.w + l.n_in * l.n_out];
        let b = &self.params[l.b..l.b + l.n_out];
        out.extend(
            w.chunks_exact(l.n_in)
                .zip(b)
                .map(|(row, bias)| bias + dot(row, x)),
        );
    }

    /// Adds `δ ⊗ x` and `δ` to the layer's gradient slots and, when asked,
    /// writes `Wᵀδ` into `dx`.
    fn affine_backward(&self, l: &Affine, x: &[f64], delta: &[f64], grads: &mut [f64], dx: Option<&mut Vec<f64>>) {
        let w = &self.params[l.w..l.w + l.n_in * l.n_out];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &mut grads[l.w + o * l.n_in..l.w + (o + 1) * l.n_in];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g += d * xi;
            }
            grads[l.b + o] += d;
        }
        if let Some(dx) = dx {
            dx.clear();
            dx.resize(l.n_in, 0.0);
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (acc, &wi) in dx.iter_mut().zip(&w[o * l.n_in..(o + 1) * l.n_in]) {
                    *acc += wi * d;
                }
            }
        }
    }

    fn forward_drug(&self, f: &DrugFeatures, cache: &mut DrugCache, fused: &mut Vec<f64>) {
        let cfg = &self.config;
        let k_stages = cfg.k_stages;
        let act = cfg.activation;
        for m in cfg.modalities.iter() {
            let i = m.index();
            reset(&mut cache.h[i], k_stages + 1);
            reset(&mut cache.x[i], k_stages);
            cache.h[i][0].clear();
            cache.h[i][0].extend_from_slice(f.get(m));
        }
        for k in 1..=k_stages {
            for m in cfg.modalities.iter() {
                let i = m.index();
                let mut x = std::mem::take(&mut cache.x[i][k - 1]);
                x.clear();
                x.extend_from_slice(&cache.h[i][k - 1]);
                if let Some(e) = m.enhancer().filter(|e| cfg.modalities.contains(*e)) {
                    x.extend_from_slice(&cache.h[e.index()][k - 1]);
                }
                let layer = &self.layout.layers[self.layout.enc[i][k - 1]];
                let mut out = std::mem::take(&mut cache.h[i][k]);
                self.affine(layer, &x, &mut out);
                act.apply(&mut out);
                cache.h[i][k] = out;
                cache.x[i][k - 1] = x;
            }
        }
        let w = cfg.pool_window;
        for m in cfg.modalities.iter() {
            let i = m.index();
            let input = &cache.h[i][0];
            let args = &mut cache.pool_arg[i];
            args.clear();
            for (c, window) in input.chunks_exact(w).enumerate() {
                // first maximal position wins ties
                let mut best = 0;
                for (j, v) in window.iter().enumerate() {
                    if *v > window[best] {
                        best = j;
                    }
                }
                args.push(c * w + best);
                fused.push(window[best]);
            }
            fused.extend_from_slice(&cache.h[i][k_stages]);
        }
    }

    /// Forward pass for the ordered pair `(a, b)`, reusing `cache`'s buffers.
    pub fn forward_into(&self, a: &DrugFeatures, b: &DrugFeatures, cache: &mut ForwardCache) -> Result<()> {
        self.check_input(a, "a")?;
        self.check_input(b, "b")?;
        cache.model_id = self.id;
        cache.generation = self.generation;

        let mut fused = std::mem::take(&mut cache.cls_in[0]);
        fused.clear();
        self.forward_drug(a, &mut cache.drugs[0], &mut fused);
        self.forward_drug(b, &mut cache.drugs[1], &mut fused);
        cache.cls_in[0] = fused;

        for l in 0..4 {
            let layer = &self.layout.layers[self.layout.cls[l]];
            let mut out = if l < 3 {
                std::mem::take(&mut cache.cls_in[l + 1])
            } else {
                std::mem::take(&mut cache.logits)
            };
            self.affine(layer, &cache.cls_in[l], &mut out);
            if l < 3 {
                self.config.activation.apply(&mut out);
                cache.cls_in[l + 1] = out;
            } else {
                cache.logits = out;
            }
        }
        Ok(())
    }

    pub fn forward(&self, a: &DrugFeatures, b: &DrugFeatures) -> Result<(Vec<f64>, ForwardCache)> {
        let mut cache = ForwardCache::new();
        self.forward_into(a, b, &mut cache)?;
        Ok((cache.logits.clone(), cache))
    }

    /// Logits for each pair, computed one pair at a time.
    pub fn forward_batch(&self, pairs: &[(&DrugFeatures, &DrugFeatures)]) -> Result<Vec<Vec<f64>>> {
        let mut cache = ForwardCache::new();
        pairs
            .iter()
            .map(|(a, b)| {
                self.forward_into(a, b, &mut cache)?;
                Ok(cache.logits.clone())
            })
            .collect()
    }

    fn check_cache(&self, cache: &ForwardCache, grad_logits: &[f64]) -> Result<()> {
        if cache.model_id != self.id || cache.generation != self.generation {
            return Err(Error::Contract(
                "forward cache does not match the current model parameters".into(),
            ));
        }
        if grad_logits.len() != self.config.n_classes {
            return Err(Error::Shape(format!(
                "{} logit gradients for {} classes",
                grad_logits.len(),
                self.config.n_classes
            )));
        }
        Ok(())
    }

    /// Gradient of `⟨grad_logits, logits⟩` with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &[f64]) -> Result<Vec<f64>> {
        let mut grads = vec![0.0; self.layout.n_params];
        self.backward_into(cache, grad_logits, &mut grads, None)?;
        Ok(grads)
    }

    /// Parameter gradients and the gradients with respect to both drugs'
    /// input blocks (zero for disabled modalities).
    pub fn backward_with_inputs(
        &self,
        cache: &ForwardCache,
        grad_logits: &[f64],
    ) -> Result<(Vec<f64>, [DrugFeatures; 2])> {
        let mut grads = vec![0.0; self.layout.n_params];
        let zeros = || DrugFeatures {
            blocks: self.config.embed_dims.map(|d| vec![0.0; d]),
        };
        let mut inputs = [zeros(), zeros()];
        self.backward_into(cache, grad_logits, &mut grads, Some(&mut inputs))?;
        Ok((grads, inputs))
    }

    /// Accumulates parameter gradients into `grads`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad_logits: &[f64],
        grads: &mut [f64],
        mut inputs: Option<&mut [DrugFeatures; 2]>,
    ) -> Result<()> {
        self.check_cache(cache, grad_logits)?;
        if grads.len() != self.layout.n_params {
            return Err(Error::Shape(format!(
                "gradient buffer has {} slots, model has {} parameters",
                grads.len(),
                self.layout.n_params
            )));
        }
        let act = self.config.activation;
        let mut delta = grad_logits.to_vec();
        let mut dx = Vec::new();
        for l in (0..4).rev() {
            let layer = &self.layout.layers[self.layout.cls[l]];
            self.affine_backward(layer, &cache.cls_in[l], &delta, grads, Some(&mut dx));
            if l > 0 {
                delta.clear();
                delta.extend(
                    dx.iter()
                        .zip(&cache.cls_in[l])
                        .map(|(g, &y)| g * act.derivative_from_output(y)),
                );
            }
        }

        let half = self.config.fused_width();
        for (d, fused_grad) in dx.chunks_exact(half).enumerate() {
            let input_grads = inputs.as_deref_mut().map(|arr| &mut arr[d]);
            self.backward_drug(&cache.drugs[d], fused_grad, grads, input_grads);
        }
        Ok(())
    }

    fn backward_drug(
        &self,
        cache: &DrugCache,
        fused_grad: &[f64],
        grads: &mut [f64],
        mut input_grads: Option<&mut DrugFeatures>,
    ) {
        let cfg = &self.config;
        let k_stages = cfg.k_stages;
        let act = cfg.activation;
        let want_inputs = input_grads.is_some();

        // dh[m][k] mirrors cache.h
        let mut dh: [Vec<Vec<f64>>; 4] = Default::default();
        let mut pos = 0;
        for m in cfg.modalities.iter() {
            let i = m.index();
            let pooled = cfg.embed_dims[i] / cfg.pool_window;
            dh[i] = (0..=k_stages)
                .map(|k| vec![0.0; if k == 0 { cfg.embed_dims[i] } else { cfg.hidden_dim }])
                .collect();
            if let Some(g) = input_grads.as_deref_mut() {
                let block = &mut g.blocks[i];
                for (j, &arg) in cache.pool_arg[i].iter().enumerate() {
                    block[arg] += fused_grad[pos + j];
                }
            }
            pos += pooled;
            dh[i][k_stages].copy_from_slice(&fused_grad[pos..pos + cfg.hidden_dim]);
            pos += cfg.hidden_dim;
        }

        let mut delta = Vec::new();
        let mut dx = Vec::new();
        for k in (1..=k_stages).rev() {
            let need_dx = k > 1 || want_inputs;
            for m in cfg.modalities.iter() {
                let i = m.index();
                delta.clear();
                delta.extend(
                    dh[i][k]
                        .iter()
                        .zip(&cache.h[i][k])
                        .map(|(g, &y)| g * act.derivative_from_output(y)),
                );
                let layer = &self.layout.layers[self.layout.enc[i][k - 1]];
                self.affine_backward(layer, &cache.x[i][k - 1], &delta, grads, need_dx.then_some(&mut dx));
                if !need_dx {
                    continue;
                }
                let own = cache.h[i][k - 1].len();
                for (acc, g) in dh[i][k - 1].iter_mut().zip(&dx[..own]) {
                    *acc += g;
                }
                if let Some(e) = m.enhancer().filter(|e| cfg.modalities.contains(*e)) {
                    for (acc, g) in dh[e.index()][k - 1].iter_mut().zip(&dx[own..]) {
                        *acc += g;
                    }
                }
            }
        }

        if let Some(g) = input_grads {
            for m in cfg.modalities.iter() {
                let i = m.index();
                for (acc, v) in g.blocks[i].iter_mut().zip(&dh[i][0]) {
                    *acc += v;
                }
            }
        }
    }

    /// Applies `update` to the parameters and invalidates forward caches.
    pub(crate) fn update_params(&mut self, update: impl FnOnce(&mut [f64])) {
        update(&mut self.params);
        self.generation += 1;
    }

    pub(crate) fn from_parts(config: ModelConfig, seed: u64, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.n_params {
            return Err(Error::Shape(format!(
                "{} parameter values for a model with {}",
                params.len(),
                layout.n_params
            )));
        }
        Ok(Self {
            config,
            layout,
            params,
            seed,
            id: fresh_id(),
            generation: 0,
        })
    }
}

/// Names of the modality maps of `m` in `model`.
pub fn modality_layers(model: &FusionModel, m: Modality) -> Vec<String> {
    model.layout().enc[m.index()]
        .iter()
        .map(|&l| model.layout().layers[l].name.clone())
        .collect()
}
