//! First-order optimizers and the step-decay learning-rate schedule.
//!
//! Updates follow the usual published forms:
//!
//! | algorithm | update |
//! |-----------|--------|
//! | SGD       | `v = μv + g;  p -= lr·v` |
//! | RMSprop   | `s = ρs + (1-ρ)g²;  p -= lr·g / (√s + ε)` |
//! | Adam      | `m = β₁m + (1-β₁)g;  v = β₂v + (1-β₂)g²;  p -= lr·m̂ / (√v̂ + ε)` |
//! | AdamW     | `p -= lr·λ·p`, then the Adam step |
//! | AdaDelta  | `s = ρs + (1-ρ)g²;  Δ = √(u+ε)/√(s+ε)·g;  u = ρu + (1-ρ)Δ²;  p -= lr·Δ` |
//!
//! with `m̂ = m/(1-β₁ᵗ)`, `v̂ = v/(1-β₂ᵗ)`. Arithmetic is carried out in f64
//! and stored back in the parameter's element type.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ParamStore;
use crate::tensor::{Element, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    AdaDelta,
    RmsProp,
    Sgd,
    Adam,
    AdamW,
}

impl Algorithm {
    /// Row order of the ablation table.
    pub const ALL: [Algorithm; 5] = [
        Algorithm::AdaDelta,
        Algorithm::RmsProp,
        Algorithm::Sgd,
        Algorithm::Adam,
        Algorithm::AdamW,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::AdaDelta => "adadelta",
            Algorithm::RmsProp => "rmsprop",
            Algorithm::Sgd => "sgd",
            Algorithm::Adam => "adam",
            Algorithm::AdamW => "adamw",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::AdaDelta => "AdaDelta",
            Algorithm::RmsProp => "RMSprop",
            Algorithm::Sgd => "SGD",
            Algorithm::Adam => "Adam",
            Algorithm::AdamW => "AdamW",
        }
    }

    /// Names of the per-parameter state slots.
    pub fn slot_kinds(self) -> &'static [&'static str] {
        match self {
            Algorithm::Sgd => &["momentum"],
            Algorithm::RmsProp => &["square_avg"],
            Algorithm::Adam | Algorithm::AdamW => &["exp_avg", "exp_avg_sq"],
            Algorithm::AdaDelta => &["square_avg", "acc_delta"],
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown optimizer `{s}` (expected one of adadelta, rmsprop, sgd, adam, adamw)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub rmsprop_rho: f64,
    pub rmsprop_eps: f64,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
    /// Decoupled decay, AdamW only.
    pub weight_decay: f64,
    /// Global L2 gradient clipping; `None` disables it.
    pub max_grad_norm: Option<f64>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            rmsprop_rho: 0.9,
            rmsprop_eps: 1e-8,
            adadelta_rho: 0.95,
            adadelta_eps: 1e-6,
            weight_decay: 0.01,
            max_grad_norm: None,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let unit_open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be positive, got {v}")))
            }
        };
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Argument(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        unit_open("beta1", self.beta1)?;
        unit_open("beta2", self.beta2)?;
        unit_open("rmsprop_rho", self.rmsprop_rho)?;
        unit_open("adadelta_rho", self.adadelta_rho)?;
        positive("adam_eps", self.adam_eps)?;
        positive("rmsprop_eps", self.rmsprop_eps)?;
        positive("adadelta_eps", self.adadelta_eps)?;
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Argument(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if let Some(n) = self.max_grad_norm {
            positive("max_grad_norm", n)?;
        }
        Ok(())
    }

    /// Flat `key=value` pairs; f64 values use Rust's shortest round-trip form.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("momentum", self.momentum),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("adam_eps", self.adam_eps),
            ("rmsprop_rho", self.rmsprop_rho),
            ("rmsprop_eps", self.rmsprop_eps),
            ("adadelta_rho", self.adadelta_rho),
            ("adadelta_eps", self.adadelta_eps),
            ("weight_decay", self.weight_decay),
        ]
        .into_iter()
        .map(|(k, v)| (format!("optim.{k}"), format!("{v:?}")))
        .collect::<Vec<_>>();
        v.push((
            "optim.max_grad_norm".into(),
            self.max_grad_norm.map_or_else(|| "none".into(), |n| format!("{n:?}")),
        ));
        v
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let num = |k: &str| -> Result<f64> {
            let raw =
                get(&format!("optim.{k}")).ok_or_else(|| Error::Config(format!("missing optimizer field `{k}`")))?;
            raw.parse()
                .map_err(|_| Error::Config(format!("bad value `{raw}` for optimizer field `{k}`")))
        };
        let max_grad_norm = match get("optim.max_grad_norm").as_deref() {
            None | Some("none") => None,
            Some(_) => Some(num("max_grad_norm")?),
        };
        let h = Self {
            momentum: num("momentum")?,
            beta1: num("beta1")?,
            beta2: num("beta2")?,
            adam_eps: num("adam_eps")?,
            rmsprop_rho: num("rmsprop_rho")?,
            rmsprop_eps: num("rmsprop_eps")?,
            adadelta_rho: num("adadelta_rho")?,
            adadelta_eps: num("adadelta_eps")?,
            weight_decay: num("weight_decay")?,
            max_grad_norm,
        };
        h.validate()?;
        Ok(h)
    }
}

pub const DEFAULT_BASE_LR: f64 = 0.001;
pub const DEFAULT_DECAY: f64 = 0.9;
pub const DEFAULT_DECAY_PERIOD: usize = 20;

/// `lr(e) = base_lr · decay^floor(e / period)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub decay: f64,
    pub period: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self::new(DEFAULT_BASE_LR)
    }
}

impl LrSchedule {
    pub fn new(base_lr: f64) -> Self {
        Self {
            base_lr,
            decay: DEFAULT_DECAY,
            period: DEFAULT_DECAY_PERIOD,
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        lr_at(self, epoch)
    }
}

pub fn lr_at(schedule: &LrSchedule, epoch: usize) -> f64 {
    let k = epoch / schedule.period.max(1);
    schedule.base_lr * schedule.decay.powi(k as i32)
}

/// Step counter and per-parameter slots for one optimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T: Element = f32> {
    algorithm: Algorithm,
    hyper: Hyperparams,
    t: u64,
    /// One store per slot kind, in [`Algorithm::slot_kinds`] order.
    slots: Vec<ParamStore<T>>,
}

pub fn new_state<T: Element>(
    algorithm: Algorithm,
    hyper: Hyperparams,
    params: &ParamStore<T>,
) -> Result<OptimizerState<T>> {
    OptimizerState::new(algorithm, hyper, params)
}

impl<T: Element> OptimizerState<T> {
    pub fn new(algorithm: Algorithm, hyper: Hyperparams, params: &ParamStore<T>) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            algorithm,
            hyper,
            t: 0,
            slots: algorithm.slot_kinds().iter().map(|_| params.zeros_like()).collect(),
        })
    }

    /// Rebuild from checkpointed pieces. `slots` pairs each kind with its store.
    pub fn from_parts(
        algorithm: Algorithm,
        hyper: Hyperparams,
        t: u64,
        mut slots: Vec<(String, ParamStore<T>)>,
    ) -> Result<Self> {
        hyper.validate()?;
        let kinds = algorithm.slot_kinds();
        let mut ordered = Vec::with_capacity(kinds.len());
        for kind in kinds {
            let pos = slots
                .iter()
                .position(|(k, _)| k == kind)
                .ok_or_else(|| Error::State(format!("{algorithm} state is missing slot `{kind}`")))?;
            ordered.push(slots.swap_remove(pos).1);
        }
        if let Some((k, _)) = slots.first() {
            return Err(Error::State(format!("unexpected slot `{k}` for {algorithm}")));
        }
        if ordered.windows(2).any(|w| !w[0].same_keys(&w[1])) {
            return Err(Error::State("optimizer slots disagree on parameter names".into()));
        }
        Ok(Self {
            algorithm,
            hyper,
            t,
            slots: ordered,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// `(kind, store)` for every slot.
    pub fn slots(&self) -> impl Iterator<Item = (&'static str, &ParamStore<T>)> {
        self.algorithm.slot_kinds().iter().copied().zip(self.slots.iter())
    }

    pub fn slot(&self, kind: &str) -> Option<&ParamStore<T>> {
        self.slots().find(|(k, _)| *k == kind).map(|(_, s)| s)
    }

    /// Checks that `params` is the store these slots were built for.
    pub fn matches(&self, params: &ParamStore<T>) -> bool {
        self.slots.iter().all(|s| {
            s.same_keys(params)
                && s.iter()
                    .zip(params.iter())
                    .all(|((_, a), (_, b))| a.shape() == b.shape())
        })
    }

    /// One in-place update of `params`. Nothing is modified if an error is returned.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &ParamStore<T>, lr: f64) -> Result<()> {
        if !grads.same_keys(params) {
            return Err(Error::State("gradient names do not match parameter names".into()));
        }
        if !self.matches(params) {
            return Err(Error::State(
                "optimizer state was built for a different parameter set".into(),
            ));
        }
        for ((name, g), (_, p)) in grads.iter().zip(params.iter()) {
            if g.shape() != p.shape() {
                return Err(Error::Shape(format!(
                    "gradient for `{name}` has shape {:?}, parameter has {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient { param: name.to_owned() });
            }
        }
        if !(lr.is_finite() && lr >= 0.0) {
            return Err(Error::Argument(format!(
                "learning rate must be finite and >= 0, got {lr}"
            )));
        }

        let clip = match self.hyper.max_grad_norm {
            Some(max) => {
                let norm = grads
                    .iter()
                    .flat_map(|(_, g)| g.data().iter().map(|v| v.as_f64() * v.as_f64()))
                    .sum::<f64>()
                    .sqrt();
                if norm > max {
                    max / (norm + 1e-6)
                } else {
                    1.0
                }
            }
            None => 1.0,
        };

        self.t += 1;
        let t = self.t;
        let h = self.hyper.clone();
        let algorithm = self.algorithm;
        let names: Vec<String> = params.names().map(str::to_owned).collect();
        for name in &names {
            let g = grads.get(name)?;
            let p = params.get_mut(name).expect("checked above");
            let mut slot_views: Vec<&mut Tensor<T>> = self
                .slots
                .iter_mut()
                .map(|s| s.get_mut(name).expect("checked above"))
                .collect();
            update(algorithm, &h, t, lr, clip, p, g, &mut slot_views);
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn update<T: Element>(
    algorithm: Algorithm,
    h: &Hyperparams,
    t: u64,
    lr: f64,
    clip: f64,
    p: &mut Tensor<T>,
    g: &Tensor<T>,
    slots: &mut [&mut Tensor<T>],
) {
    let g = g.data();
    match algorithm {
        Algorithm::Sgd => {
            let [v] = slots else { unreachable!() };
            for ((p, v), &g) in p.data_mut().iter_mut().zip(v.data_mut()).zip(g) {
                let g = g.as_f64() * clip;
                let nv = h.momentum * v.as_f64() + g;
                *v = T::from_f64(nv);
                *p = T::from_f64(p.as_f64() - lr * nv);
            }
        }
        Algorithm::RmsProp => {
            let [s] = slots else { unreachable!() };
            let rho = h.rmsprop_rho;
            for ((p, s), &g) in p.data_mut().iter_mut().zip(s.data_mut()).zip(g) {
                let g = g.as_f64() * clip;
                let ns = rho * s.as_f64() + (1.0 - rho) * g * g;
                *s = T::from_f64(ns);
                *p = T::from_f64(p.as_f64() - lr * g / (ns.sqrt() + h.rmsprop_eps));
            }
        }
        Algorithm::Adam | Algorithm::AdamW => {
            let [m, v] = slots else { unreachable!() };
            let decay = if algorithm == Algorithm::AdamW {
                h.weight_decay
            } else {
                0.0
            };
            let bc1 = 1.0 - h.beta1.powi(t as i32);
            let bc2 = 1.0 - h.beta2.powi(t as i32);
            for (((p, m), v), &g) in p.data_mut().iter_mut().zip(m.data_mut()).zip(v.data_mut()).zip(g) {
                let g = g.as_f64() * clip;
                let mut pv = p.as_f64();
                pv -= lr * decay * pv;
                let nm = h.beta1 * m.as_f64() + (1.0 - h.beta1) * g;
                let nv = h.beta2 * v.as_f64() + (1.0 - h.beta2) * g * g;
                *m = T::from_f64(nm);
                *v = T::from_f64(nv);
                let m_hat = nm / bc1;
                let v_hat = nv / bc2;
                *p = T::from_f64(pv - lr * m_hat / (v_hat.sqrt() + h.adam_eps));
            }
        }
        Algorithm::AdaDelta => {
            let [s, u] = slots else { unreachable!() };
            let (rho, eps) = (h.adadelta_rho, h.adadelta_eps);
            for (((p, s), u), &g) in p.data_mut().iter_mut().zip(s.data_mut()).zip(u.data_mut()).zip(g) {
                let g = g.as_f64() * clip;
                let ns = rho * s.as_f64() + (1.0 - rho) * g * g;
                let delta = (u.as_f64() + eps).sqrt() / (ns + eps).sqrt() * g;
                let nu = rho * u.as_f64() + (1.0 - rho) * delta * delta;
                *s = T::from_f64(ns);
                *u = T::from_f64(nu);
                *p = T::from_f64(p.as_f64() - lr * delta);
            }
        }
    }
}
