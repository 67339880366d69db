//! Layer graphs built from a [`ModelConfig`], with whole-model forward,
//! backward and prediction.

mod config;
mod gradcheck;
mod init;
mod params;
mod zoo;

use crate::error::{Error, Result};
use crate::nn::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, dropout_backward, dropout_forward,
    maxpool2d_backward, maxpool2d_forward, relu_backward, relu_forward, softmax, softmax_cross_entropy, ConvCache,
    ConvParams, DenseCache, DropoutCache, PoolCache, ReluCache,
};
use crate::rng::Rng;
use crate::tensor::{Element, Tensor};

pub use config::{InputShape, LayerPlan, LayerSpec, ModelConfig};
pub use gradcheck::{check_model_gradients, kink_margin};
pub use init::InitScheme;
pub use params::ParamStore;
pub use zoo::{
    build_mlp, build_vgg19, build_vgg_mini, mlp_config, vgg19_config, vgg_mini_config, ModelKind, VGG19_DROPOUT,
    VGG19_INPUT_HW, VGG_MINI_DROPOUT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    Train,
    #[default]
    Eval,
}

/// Saved per-layer state from one forward pass.
#[derive(Debug)]
pub enum LayerCache<T: Element> {
    Conv(ConvCache<T>),
    Relu(ReluCache),
    Pool(PoolCache),
    Flatten(Vec<usize>),
    Dense(DenseCache<T>),
    Dropout(DropoutCache<T>),
}

/// Everything [`Model::backward`] needs from a forward pass.
#[derive(Debug)]
pub struct ForwardTrace<T: Element> {
    caches: Vec<LayerCache<T>>,
}

#[derive(Clone, Debug)]
pub struct Model<T: Element = f32> {
    config: ModelConfig,
    plan: Vec<LayerPlan>,
    params: ParamStore<T>,
    mode: Mode,
}

impl<T: Element> Model<T> {
    /// Builds a model with all-zero parameters in eval mode.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let plan = config.plan()?;
        let mut params = ParamStore::new();
        for p in &plan {
            if let (Some((ws, bs)), Some(wn), Some(bn)) = (p.param_shapes(), p.weight_name(), p.bias_name()) {
                params.insert(wn, Tensor::zeros(&ws)?)?;
                params.insert(bn, Tensor::zeros(&bs)?)?;
            }
        }
        Ok(Self {
            config,
            plan,
            params,
            mode: Mode::Eval,
        })
    }

    /// Builds a model around existing parameters, checking names and shapes.
    pub fn with_params(config: ModelConfig, params: ParamStore<T>) -> Result<Self> {
        let mut model = Self::new(config)?;
        if !model.params.same_keys(&params) {
            return Err(Error::Shape(format!(
                "parameter names {:?} do not match model `{}`",
                params.names().collect::<Vec<_>>(),
                model.config.name
            )));
        }
        for ((name, expected), (_, given)) in model.params.iter().zip(params.iter()) {
            if expected.shape() != given.shape() {
                return Err(Error::Shape(format!(
                    "parameter `{name}`: shape {:?}, model expects {:?}",
                    given.shape(),
                    expected.shape()
                )));
            }
        }
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn plan(&self) -> &[LayerPlan] {
        &self.plan
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn cast<U: Element>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            plan: self.plan.clone(),
            params: self.params.cast(),
            mode: self.mode,
        }
    }

    pub fn init_params(&mut self, rng: &mut Rng, scheme: InitScheme) -> Result<()> {
        init::init_params(self, rng, scheme)
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let xs = x.shape();
        let ok = xs.len() == 4 && xs[1..] == self.config.input.batch_shape(0)[1..];
        if !ok {
            return Err(Error::Shape(format!(
                "model `{}` expects [N, {}, {}, {}] input, got {xs:?}",
                self.config.name, self.config.input.channels, self.config.input.height, self.config.input.width
            )));
        }
        Ok(())
    }

    /// Forward pass returning logits `[N, classes]` and the backward trace.
    ///
    /// Dropout draws from `rng` in train mode only.
    pub fn forward(&self, x: &Tensor<T>, rng: &mut Rng) -> Result<(Tensor<T>, ForwardTrace<T>)> {
        self.check_input(x)?;
        let dropout_rng = (self.mode == Mode::Train).then_some(rng);
        self.run_layers(&self.plan, x, dropout_rng)
    }

    /// Applies `layers` in order; dropout is active only when `rng` is given.
    fn run_layers(
        &self,
        layers: &[LayerPlan],
        x: &Tensor<T>,
        mut rng: Option<&mut Rng>,
    ) -> Result<(Tensor<T>, ForwardTrace<T>)> {
        let n = x.shape()[0];
        let mut act = x.clone();
        let mut caches = Vec::with_capacity(layers.len());
        for layer in layers {
            let (next, cache) = match layer.spec {
                LayerSpec::Conv { stride, padding, .. } => {
                    let (wn, bn) = (
                        layer.weight_name().unwrap_or_default(),
                        layer.bias_name().unwrap_or_default(),
                    );
                    let p = ConvParams {
                        kernel: self.params.get(&wn)?,
                        bias: self.params.get(&bn)?,
                        stride,
                        padding,
                    };
                    let (y, c) = conv2d_forward(&act, &p)?;
                    (y, LayerCache::Conv(c))
                }
                LayerSpec::Relu => {
                    let (y, c) = relu_forward(&act);
                    (y, LayerCache::Relu(c))
                }
                LayerSpec::MaxPool(spec) => {
                    let (y, c) = maxpool2d_forward(&act, spec)?;
                    (y, LayerCache::Pool(c))
                }
                LayerSpec::Flatten => {
                    let shape = act.shape().to_vec();
                    (act.reshape(&[n, layer.output[0]])?, LayerCache::Flatten(shape))
                }
                LayerSpec::Dense { .. } => {
                    let (wn, bn) = (
                        layer.weight_name().unwrap_or_default(),
                        layer.bias_name().unwrap_or_default(),
                    );
                    let (y, c) = dense_forward(&act, self.params.get(&wn)?, self.params.get(&bn)?)?;
                    (y, LayerCache::Dense(c))
                }
                LayerSpec::Dropout { rate } => {
                    let (y, c) = dropout_forward(&act, rate, rng.as_deref_mut())?;
                    (y, LayerCache::Dropout(c))
                }
            };
            act = next;
            caches.push(cache);
        }
        Ok((act, ForwardTrace { caches }))
    }

    /// Input of every layer in eval mode, followed by the logits.
    pub fn layer_inputs(&self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        self.check_input(x)?;
        let mut acts = vec![x.clone()];
        for layer in &self.plan {
            let (y, _) = self.run_layers(std::slice::from_ref(layer), acts.last().expect("non-empty"), None)?;
            acts.push(y);
        }
        Ok(acts)
    }

    /// Reverse pass. The returned store has exactly the model's parameter names.
    pub fn backward(&self, trace: ForwardTrace<T>, grad_logits: &Tensor<T>) -> Result<ParamStore<T>> {
        if trace.caches.len() != self.plan.len() {
            return Err(Error::State(format!(
                "trace has {} layer caches, model has {} layers",
                trace.caches.len(),
                self.plan.len()
            )));
        }
        let mut grads: Vec<(String, Tensor<T>)> = Vec::with_capacity(self.params.len());
        let mut g = grad_logits.clone();
        for (layer, cache) in self.plan.iter().zip(trace.caches).rev() {
            let stale = || Error::State(format!("cache does not belong to layer {}", layer.spec));
            g = match (layer.spec, cache) {
                (LayerSpec::Conv { .. }, LayerCache::Conv(c)) => {
                    let cg = conv2d_backward(c, &g)?;
                    grads.push((layer.bias_name().ok_or_else(stale)?, cg.bias));
                    grads.push((layer.weight_name().ok_or_else(stale)?, cg.kernel));
                    cg.input
                }
                (LayerSpec::Relu, LayerCache::Relu(c)) => relu_backward(c, &g)?,
                (LayerSpec::MaxPool(_), LayerCache::Pool(c)) => maxpool2d_backward(c, &g)?,
                (LayerSpec::Flatten, LayerCache::Flatten(shape)) => g.reshape(&shape)?,
                (LayerSpec::Dense { .. }, LayerCache::Dense(c)) => {
                    let dg = dense_backward(c, &g)?;
                    grads.push((layer.bias_name().ok_or_else(stale)?, dg.bias));
                    grads.push((layer.weight_name().ok_or_else(stale)?, dg.weight));
                    dg.input
                }
                (LayerSpec::Dropout { .. }, LayerCache::Dropout(c)) => dropout_backward(c, &g)?,
                _ => return Err(stale()),
            };
        }
        let mut store = ParamStore::new();
        for (name, t) in grads.into_iter().rev() {
            store.insert(name, t)?;
        }
        Ok(store)
    }

    /// Mean softmax cross-entropy of a batch and its parameter gradients.
    pub fn loss_and_grads(&self, x: &Tensor<T>, y_onehot: &Tensor<T>, rng: &mut Rng) -> Result<(T, ParamStore<T>)> {
        let (logits, trace) = self.forward(x, rng)?;
        let (loss, grad) = softmax_cross_entropy(&logits, y_onehot)?;
        Ok((loss, self.backward(trace, &grad)?))
    }

    /// Logits with dropout disabled, regardless of mode.
    pub fn logits(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        // eval mode never draws from the generator
        let mut unused = Rng::new(0);
        if self.mode == Mode::Eval {
            return Ok(self.forward(x, &mut unused)?.0);
        }
        let view = Model {
            config: self.config.clone(),
            plan: self.plan.clone(),
            params: self.params.clone(),
            mode: Mode::Eval,
        };
        Ok(view.forward(x, &mut unused)?.0)
    }

    /// Class probabilities `[N, classes]`. Requires eval mode.
    pub fn predict_proba(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if self.mode != Mode::Eval {
            return Err(Error::State("predict_proba requires eval mode".into()));
        }
        softmax(&self.logits(x)?)
    }

    /// Row argmax of the probabilities; ties go to the lowest class index.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(argmax_rows(&p))
    }
}

pub(crate) fn argmax_rows<T: Element>(p: &Tensor<T>) -> Vec<usize> {
    let c = p.shape()[1];
    p.data()
        .chunks(c)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
