//! Shallow classifiers over fixed feature vectors.
//!
//! Parameters live in one flat vector so the optimizer, gradient checks and
//! snapshots treat every architecture alike. Layouts, row-major:
//!
//! * linear: `W[C×d] | b[C]`
//! * mlp:    `W1[h×d] | b1[h] | W2[C×h] | b2[C]`, ReLU between the layers

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::Sample;
use crate::error::{Error, Result};
use crate::seed;

/// Hidden width used when `mlp` is given without an explicit size.
pub const DEFAULT_HIDDEN: usize = 64;

/// Architecture family as written in configs: `linear` or `mlp:<hidden>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    Linear,
    Mlp { hidden: usize },
}

impl ArchKind {
    pub fn resolve(self, dim: usize, classes: usize) -> Architecture {
        match self {
            ArchKind::Linear => Architecture::Linear { dim, classes },
            ArchKind::Mlp { hidden } => Architecture::Mlp { dim, hidden, classes },
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchKind::Linear => f.write_str("linear"),
            ArchKind::Mlp { hidden } => write!(f, "mlp:{hidden}"),
        }
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "linear" => Ok(ArchKind::Linear),
            "mlp" => Ok(ArchKind::Mlp { hidden: DEFAULT_HIDDEN }),
            other => {
                let hidden = other
                    .strip_prefix("mlp:")
                    .and_then(|h| h.trim().parse::<usize>().ok())
                    .filter(|&h| h >= 1)
                    .ok_or_else(|| Error::invalid(format!("expected `linear` or `mlp:<hidden>`, got `{other}`")))?;
                Ok(ArchKind::Mlp { hidden })
            }
        }
    }
}

/// Fully sized network shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Linear { dim: usize, classes: usize },
    Mlp { dim: usize, hidden: usize, classes: usize },
}

impl Architecture {
    pub fn dim(&self) -> usize {
        match *self {
            Architecture::Linear { dim, .. } | Architecture::Mlp { dim, .. } => dim,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            Architecture::Linear { classes, .. } | Architecture::Mlp { classes, .. } => classes,
        }
    }

    pub fn num_params(&self) -> usize {
        match *self {
            Architecture::Linear { dim, classes } => classes * dim + classes,
            Architecture::Mlp { dim, hidden, classes } => hidden * dim + hidden + classes * hidden + classes,
        }
    }

    /// `(offset, rows, cols)` of each weight matrix; biases follow each matrix.
    fn layers(&self) -> Vec<(usize, usize, usize)> {
        match *self {
            Architecture::Linear { dim, classes } => vec![(0, classes, dim)],
            Architecture::Mlp { dim, hidden, classes } => {
                let second = hidden * dim + hidden;
                vec![(0, hidden, dim), (second, classes, hidden)]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Architecture::Linear { dim, classes } => dim >= 1 && classes >= 1,
            Architecture::Mlp { dim, hidden, classes } => dim >= 1 && hidden >= 1 && classes >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate architecture {self:?}")))
        }
    }
}

/// Momentum-SGD settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs completed before the learning rate is multiplied by `decay_factor`.
    pub decay_epoch: usize,
    pub decay_factor: f64,
    pub seed: u64,
}

impl Hyperparams {
    /// Linear-probe schedule: lr 1.0, momentum 0.9, batch 256, 100 epochs,
    /// ×0.1 after epoch 60.
    pub fn linear_default() -> Self {
        Self {
            learning_rate: 1.0,
            momentum: 0.9,
            weight_decay: 0.0,
            batch_size: 256,
            epochs: 100,
            decay_epoch: 60,
            decay_factor: 0.1,
            seed: 0,
        }
    }

    /// Same schedule with lr 0.1.
    pub fn mlp_default() -> Self {
        Self {
            learning_rate: 0.1,
            ..Self::linear_default()
        }
    }

    pub fn default_for(kind: ArchKind) -> Self {
        match kind {
            ArchKind::Linear => Self::linear_default(),
            ArchKind::Mlp { .. } => Self::mlp_default(),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("lr must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be finite and non-negative");
        }
        if self.batch_size == 0 || self.epochs == 0 || self.decay_epoch == 0 {
            return bad("batch, epochs and decay_epoch must be at least 1");
        }
        if self.decay_epoch > self.epochs {
            return bad("decay_epoch must not exceed epochs");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Parameters plus momentum buffers of one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    arch: Architecture,
    params: Vec<f64>,
    velocity: Vec<f64>,
}

impl LearnerState {
    /// Builds a state from explicit parameters in the flat layout.
    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.num_params() {
            return Err(Error::invalid(format!(
                "{arch:?} needs {} parameters, got {}",
                arch.num_params(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        let velocity = vec![0.0; params.len()];
        Ok(Self { arch, params, velocity })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Indices of bias entries in the flat layout.
    pub fn bias_indices(&self) -> Vec<usize> {
        self.arch
            .layers()
            .into_iter()
            .flat_map(|(off, rows, cols)| off + rows * cols..off + rows * cols + rows)
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.dim() {
            return Err(Error::invalid(format!(
                "input has dimension {}, learner expects {}",
                x.len(),
                self.arch.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite input feature".into()));
        }
        Ok(())
    }
}

/// Uniform `(-1/√fan_in, 1/√fan_in)` weights, zero biases, zero momentum.
pub fn init_learner(arch: Architecture, seed: u64) -> Result<LearnerState> {
    arch.validate()?;
    let mut rng = seed::rng(seed, 0);
    let mut params = vec![0.0; arch.num_params()];
    for (off, rows, cols) in arch.layers() {
        let bound = 1.0 / (cols as f64).sqrt();
        for w in &mut params[off..off + rows * cols] {
            *w = loop {
                let v = rng.random_range(-bound..bound);
                if v != -bound {
                    break v;
                }
            };
        }
    }
    LearnerState::from_params(arch, params)
}

/// Scratch space for one forward/backward pass.
struct Workspace {
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    d_hidden: Vec<f64>,
}

impl Workspace {
    fn new(arch: Architecture) -> Self {
        let h = match arch {
            Architecture::Linear { .. } => 0,
            Architecture::Mlp { hidden, .. } => hidden,
        };
        Self {
            hidden_pre: vec![0.0; h],
            hidden: vec![0.0; h],
            logits: vec![0.0; arch.classes()],
            d_hidden: vec![0.0; h],
        }
    }
}

fn affine(params: &[f64], off: usize, rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    let bias = off + rows * cols;
    for (r, o) in out.iter_mut().enumerate() {
        let row = &params[off + r * cols..off + (r + 1) * cols];
        *o = params[bias + r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    }
}

fn forward(arch: Architecture, params: &[f64], x: &[f64], ws: &mut Workspace) {
    match arch {
        Architecture::Linear { dim, classes } => affine(params, 0, classes, dim, x, &mut ws.logits),
        Architecture::Mlp { dim, hidden, classes } => {
            affine(params, 0, hidden, dim, x, &mut ws.hidden_pre);
            for (h, &a) in ws.hidden.iter_mut().zip(&ws.hidden_pre) {
                *h = a.max(0.0);
            }
            let second = hidden * dim + hidden;
            affine(params, second, classes, hidden, &ws.hidden, &mut ws.logits);
        }
    }
}

/// Turns logits into probabilities in place; returns `-log p[label]`.
fn softmax_xent(logits: &mut [f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted_label = logits[label] - max;
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
    sum.ln() - shifted_label
}

/// Accumulates `scale · ∂loss/∂θ` of one sample into `grad`; returns its loss.
fn accumulate(arch: Architecture, params: &[f64], s: &Sample, scale: f64, grad: &mut [f64], ws: &mut Workspace) -> f64 {
    forward(arch, params, &s.features, ws);
    let loss = softmax_xent(&mut ws.logits, s.label);
    ws.logits[s.label] -= 1.0;
    let d_logits = &ws.logits;

    match arch {
        Architecture::Linear { dim, classes } => {
            for c in 0..classes {
                let g = d_logits[c] * scale;
                let row = &mut grad[c * dim..(c + 1) * dim];
                for (gw, x) in row.iter_mut().zip(&s.features) {
                    *gw += g * x;
                }
                grad[classes * dim + c] += g;
            }
        }
        Architecture::Mlp { dim, hidden, classes } => {
            let second = hidden * dim + hidden;
            let b2 = second + classes * hidden;
            ws.d_hidden.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..classes {
                let g = d_logits[c] * scale;
                let w_row = &params[second + c * hidden..second + (c + 1) * hidden];
                let g_row = &mut grad[second + c * hidden..second + (c + 1) * hidden];
                for j in 0..hidden {
                    g_row[j] += g * ws.hidden[j];
                    ws.d_hidden[j] += g * w_row[j];
                }
                grad[b2 + c] += g;
            }
            for j in 0..hidden {
                // ReLU subgradient at 0 is 0.
                if ws.hidden_pre[j] <= 0.0 {
                    continue;
                }
                let g = ws.d_hidden[j];
                let row = &mut grad[j * dim..(j + 1) * dim];
                for (gw, x) in row.iter_mut().zip(&s.features) {
                    *gw += g * x;
                }
                grad[hidden * dim + j] += g;
            }
        }
    }
    loss
}

fn check_batch<'a>(state: &LearnerState, batch: impl IntoIterator<Item = &'a Sample>) -> Result<usize> {
    let classes = state.arch.classes();
    let mut n = 0;
    for s in batch {
        state.check_input(&s.features)?;
        if s.label >= classes {
            return Err(Error::invalid(format!("label {} outside [0, {classes})", s.label)));
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("batch is empty"));
    }
    Ok(n)
}

/// Mean cross-entropy of `batch` and its exact gradient.
pub fn forward_loss_grad(state: &LearnerState, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
    let n = check_batch(state, batch)?;
    let mut grad = vec![0.0; state.params.len()];
    let mut ws = Workspace::new(state.arch);
    let scale = 1.0 / n as f64;
    let mut loss = 0.0;
    for s in batch {
        loss += accumulate(state.arch, &state.params, s, scale, &mut grad, &mut ws);
    }
    let loss = loss / n as f64;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("loss or gradient is not finite".into()));
    }
    Ok((loss, grad))
}

/// Mean cross-entropy without gradients.
pub fn mean_loss(state: &LearnerState, data: &[Sample]) -> Result<f64> {
    let n = check_batch(state, data)?;
    let mut ws = Workspace::new(state.arch);
    let mut total = 0.0;
    for s in data {
        forward(state.arch, &state.params, &s.features, &mut ws);
        total += softmax_xent(&mut ws.logits, s.label);
    }
    Ok(total / n as f64)
}

/// Trains with momentum SGD; velocity starts from zero.
pub fn train(state: &LearnerState, dataset: &[Sample], hp: &Hyperparams) -> Result<LearnerState> {
    train_inner(state, dataset, hp, false).map(|(s, _)| s)
}

/// Like [`train`], also returning the full-dataset loss after every epoch.
pub fn train_traced(state: &LearnerState, dataset: &[Sample], hp: &Hyperparams) -> Result<(LearnerState, Vec<f64>)> {
    train_inner(state, dataset, hp, true)
}

fn train_inner(
    state: &LearnerState,
    dataset: &[Sample],
    hp: &Hyperparams,
    trace: bool,
) -> Result<(LearnerState, Vec<f64>)> {
    hp.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    check_batch(state, dataset)?;

    let arch = state.arch;
    let mut params = state.params.clone();
    let mut velocity = vec![0.0; params.len()];
    let mut grad = vec![0.0; params.len()];
    let mut ws = Workspace::new(arch);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = seed::rng(hp.seed, 1);
    let mut history = Vec::new();

    for epoch in 0..hp.epochs {
        let lr = if epoch < hp.decay_epoch {
            hp.learning_rate
        } else {
            hp.learning_rate * hp.decay_factor
        };
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                accumulate(arch, &params, &dataset[i], scale, &mut grad, &mut ws);
            }
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                let g = g + hp.weight_decay * *p;
                *v = hp.momentum * *v + g;
                *p -= lr * *v;
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric(format!("parameters diverged in epoch {epoch}")));
        }
        if trace {
            let snapshot = LearnerState {
                arch,
                params: params.clone(),
                velocity: velocity.clone(),
            };
            history.push(mean_loss(&snapshot, dataset)?);
        }
    }
    Ok((LearnerState { arch, params, velocity }, history))
}

/// Argmax of the logits; ties go to the lowest class index.
pub fn predict(state: &LearnerState, features: &[f64]) -> Result<usize> {
    state.check_input(features)?;
    let mut ws = Workspace::new(state.arch);
    forward(state.arch, &state.params, features, &mut ws);
    Ok(argmax(&ws.logits))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// How the learner is updated at each timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Train once at the first timestamp, then freeze.
    Napping,
    /// Re-initialize and train at every timestamp.
    FromScratch,
    /// Continue from the previous timestamp's weights.
    Finetuning,
    /// Re-initialize and train on the replay buffer only.
    GDumbLike,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Napping => "napping",
            Strategy::FromScratch => "from_scratch",
            Strategy::Finetuning => "finetuning",
            Strategy::GDumbLike => "gdumb",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "napping" => Ok(Strategy::Napping),
            "from_scratch" | "scratch" => Ok(Strategy::FromScratch),
            "finetuning" => Ok(Strategy::Finetuning),
            "gdumb" => Ok(Strategy::GDumbLike),
            other => Err(Error::invalid(format!(
                "unknown strategy `{other}` (napping, from_scratch, finetuning, gdumb)"
            ))),
        }
    }
}

/// Produces the learner for timestamp `index` (0-based).
pub fn strategy_step(
    strategy: Strategy,
    prev: Option<&LearnerState>,
    index: usize,
    train_data: &[Sample],
    arch: Architecture,
    hp: &Hyperparams,
) -> Result<LearnerState> {
    let need_prev =
        || prev.ok_or_else(|| Error::invalid(format!("{strategy} at timestamp {index} needs the previous learner")));
    match strategy {
        Strategy::Napping if index > 0 => Ok(need_prev()?.clone()),
        Strategy::Finetuning if index > 0 => train(need_prev()?, train_data, hp),
        Strategy::Napping | Strategy::Finetuning | Strategy::FromScratch | Strategy::GDumbLike => {
            train(&init_learner(arch, hp.seed)?, train_data, hp)
        }
    }
}
