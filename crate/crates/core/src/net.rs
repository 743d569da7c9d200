//! A small hyperbolic feed-forward network at desk scale.
//!
//! Each block applies a hyperbolic layer (a Euclidean linear map on the
//! space components followed by a lift back onto the hyperboloid) and then a
//! selectable residual connection:
//!
//! ```text
//! z_l = HL_l(h_{l-1})          h_l = h_{l-1} (+) z_l
//! ```
//!
//! Classification reads the space components of the final point as logits
//! and trains with softmax cross-entropy by plain gradient descent on the
//! layer weights and the per-block residual weight `w_y`. Gradients exist
//! for the centroid and space-addition connections (and for no connection);
//! the transport and tangent-space baselines are exercised forward-only.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::geometry::{lorentz_inner_unchecked, LorentzModel, LorentzPoint};
use crate::residual::{
    self, lresnet_add, pt_add, pt_add_unclamped, space_add, ts_add, weighted_centroid, ResidualWeights,
    ScaleFactor,
};
use crate::sampling::rng_from_seed;
use crate::Result;

/// Hyperbolic layer: `x -> [sqrt(||W x_s||^2 - 1/K), W x_s]`.
#[derive(Debug, Clone)]
pub struct HlLayer {
    /// Row-major `n_out x n_in` weight applied to the space components.
    pub weight: Vec<f64>,
    pub n_in: usize,
    pub n_out: usize,
}

impl HlLayer {
    pub fn new_random<R: Rng>(rng: &mut R, n_in: usize, n_out: usize) -> Self {
        let sigma = 1.0 / (n_in as f64).sqrt();
        let weight = (0..n_in * n_out)
            .map(|_| {
                let g: f64 = StandardNormal.sample(rng);
                g * sigma
            })
            .collect();
        HlLayer { weight, n_in, n_out }
    }

    pub fn forward(&self, model: &LorentzModel<f64>, x: &LorentzPoint<f64>) -> LorentzPoint<f64> {
        let xs = x.space();
        let ys: Vec<f64> = (0..self.n_out)
            .map(|r| (0..self.n_in).map(|c| self.weight[r * self.n_in + c] * xs[c]).sum())
            .collect();
        model.lift_from_space(&ys)
    }
}

/// Residual connection selected per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMethod {
    Lresnet,
    Pt,
    Ts,
    Sa,
    None,
}

impl ResidualMethod {
    pub fn name(self) -> &'static str {
        match self {
            ResidualMethod::Lresnet => "lresnet",
            ResidualMethod::Pt => "pt",
            ResidualMethod::Ts => "ts",
            ResidualMethod::Sa => "sa",
            ResidualMethod::None => "none",
        }
    }

    /// Whether a gradient path exists through the connection.
    pub fn trainable(self) -> bool {
        matches!(self, ResidualMethod::Lresnet | ResidualMethod::Sa | ResidualMethod::None)
    }
}

impl std::str::FromStr for ResidualMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lresnet" => Ok(ResidualMethod::Lresnet),
            "pt" => Ok(ResidualMethod::Pt),
            "ts" => Ok(ResidualMethod::Ts),
            "sa" => Ok(ResidualMethod::Sa),
            "none" => Ok(ResidualMethod::None),
            other => Err(Error::InvalidArgument(format!("unknown residual method '{other}'"))),
        }
    }
}

/// Per-block residual configuration.
#[derive(Debug, Clone, Copy)]
pub struct ResidualBlockConfig {
    pub method: ResidualMethod,
    /// Fixed `w_x`; the initial value for the trainable `w_y` (centroid only).
    pub weights: ResidualWeights<f64>,
    /// Fixed tangent-space weights (ts only).
    pub ts_weights: (f64, f64),
    /// Optional fixed norm scaling applied after the connection.
    pub scale: Option<ScaleFactor<f64>>,
    /// When false, the transport connection runs on the unclamped reference
    /// log map, reproducing the published baseline including its NaN regime.
    pub clamped: bool,
}

impl ResidualBlockConfig {
    pub fn new(method: ResidualMethod) -> Self {
        ResidualBlockConfig {
            method,
            weights: ResidualWeights::default(),
            ts_weights: (1.0, 1.0),
            scale: None,
            clamped: true,
        }
    }
}

/// Stacked residual blocks over a fixed space dimension.
#[derive(Debug, Clone)]
pub struct Network {
    model: LorentzModel<f64>,
    dim: usize,
    pub layers: Vec<HlLayer>,
    /// Trainable residual weight per block (centroid connection).
    pub wy: Vec<f64>,
    pub cfg: ResidualBlockConfig,
}

/// Activations recorded by a forward pass: `h[0] = input`, `h[l]` the block
/// outputs, `z[l-1]` the layer outputs feeding block `l`.
pub struct ForwardTrace {
    pub h: Vec<LorentzPoint<f64>>,
    pub z: Vec<LorentzPoint<f64>>,
}

/// One epoch of the training curve.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EpochStat {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

impl Network {
    pub fn new(model: LorentzModel<f64>, dim: usize, n_layers: usize, cfg: ResidualBlockConfig, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let layers = (0..n_layers).map(|_| HlLayer::new_random(&mut rng, dim, dim)).collect();
        let wy = vec![cfg.weights.w_y(); n_layers];
        Network { model, dim, layers, wy, cfg }
    }

    pub fn model(&self) -> &LorentzModel<f64> {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn block_weights(&self, l: usize) -> ResidualWeights<f64> {
        ResidualWeights::new(self.cfg.weights.w_x(), self.wy[l]).expect("w_x validated at construction")
    }

    fn residual(&self, l: usize, h: &LorentzPoint<f64>, z: &LorentzPoint<f64>) -> Result<LorentzPoint<f64>> {
        let r = match self.cfg.method {
            ResidualMethod::Lresnet => lresnet_add(&self.model, h, z, &self.block_weights(l))?,
            ResidualMethod::Pt => {
                if self.cfg.clamped {
                    pt_add(&self.model, h, z)?
                } else {
                    pt_add_unclamped(&self.model, h, z)?
                }
            }
            ResidualMethod::Ts => ts_add(&self.model, h, z, self.cfg.ts_weights.0, self.cfg.ts_weights.1)?,
            ResidualMethod::Sa => space_add(&self.model, h, z)?,
            ResidualMethod::None => z.clone(),
        };
        Ok(match self.cfg.scale {
            Some(gamma) => residual::scale(&self.model, &r, gamma),
            None => r,
        })
    }

    /// Full forward pass; logits are the space components of the final point.
    pub fn forward(&self, x: &LorentzPoint<f64>) -> Result<(Vec<f64>, ForwardTrace)> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        let mut trace = ForwardTrace { h: vec![x.clone()], z: Vec::new() };
        for l in 0..self.layers.len() {
            let h = &trace.h[l];
            let z = self.layers[l].forward(&self.model, h);
            let next = self.residual(l, h, &z)?;
            trace.z.push(z);
            trace.h.push(next);
        }
        let logits = trace.h.last().unwrap().space().to_vec();
        Ok((logits, trace))
    }

    /// Cross-entropy loss of a single labelled point.
    pub fn loss(&self, x: &LorentzPoint<f64>, label: usize) -> Result<f64> {
        let (logits, _) = self.forward(x)?;
        let probs = softmax(&logits);
        Ok(-probs[label].max(f64::MIN_POSITIVE).ln())
    }

    /// Mean loss and accuracy over a dataset, forward-only.
    pub fn evaluate(&self, data: &SyntheticHierarchyDataset) -> Result<(f64, f64)> {
        let mut loss = 0.0;
        let mut hits = 0usize;
        for (x, &label) in data.points.iter().zip(&data.labels) {
            let (logits, _) = self.forward(x)?;
            let probs = softmax(&logits);
            loss += -probs[label].max(f64::MIN_POSITIVE).ln();
            if argmax(&logits) == label {
                hits += 1;
            }
        }
        let n = data.points.len() as f64;
        Ok((loss / n, hits as f64 / n))
    }

    /// Final-block embeddings of every dataset point.
    pub fn embeddings(&self, data: &SyntheticHierarchyDataset) -> Result<Vec<LorentzPoint<f64>>> {
        data.points
            .iter()
            .map(|x| self.forward(x).map(|(_, t)| t.h.last().unwrap().clone()))
            .collect()
    }

    // -- parameter vector: all layer weights, then the per-block w_y --------

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len()).sum::<usize>() + self.wy.len()
    }

    pub fn get_param(&self, idx: usize) -> f64 {
        let mut i = idx;
        for l in &self.layers {
            if i < l.weight.len() {
                return l.weight[i];
            }
            i -= l.weight.len();
        }
        self.wy[i]
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        let mut i = idx;
        for l in &mut self.layers {
            if i < l.weight.len() {
                l.weight[i] = value;
                return;
            }
            i -= l.weight.len();
        }
        self.wy[i] = value;
    }

    /// Mean loss and its gradient over the dataset, via manual reverse-mode
    /// through the blocks. Errors for connections without a gradient path.
    pub fn loss_and_grads(&self, data: &SyntheticHierarchyDataset) -> Result<(f64, Gradients)> {
        if !self.cfg.method.trainable() {
            return Err(Error::NotTrainable(self.cfg.method.name()));
        }
        if data.points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut grads = Gradients::zeros(self);
        let mut total = 0.0;
        let scale = 1.0 / data.points.len() as f64;
        for (x, &label) in data.points.iter().zip(&data.labels) {
            let (logits, trace) = self.forward(x)?;
            let probs = softmax(&logits);
            total += -probs[label].max(f64::MIN_POSITIVE).ln();

            // d loss / d h_L: zero time slot, softmax - onehot on space
            let d1 = self.dim + 1;
            let mut g = vec![0.0; d1];
            for (i, p) in probs.iter().enumerate() {
                g[i + 1] = (p - if i == label { 1.0 } else { 0.0 }) * scale;
            }
            self.backward(&trace, g, &mut grads)?;
        }
        Ok((total * scale, grads))
    }

    fn backward(&self, trace: &ForwardTrace, mut g: Vec<f64>, grads: &mut Gradients) -> Result<()> {
        let d1 = self.dim + 1;
        for l in (0..self.layers.len()).rev() {
            let h_prev = &trace.h[l];
            let z = &trace.z[l];
            let h_out = &trace.h[l + 1];

            // undo the optional norm scaling: h_out = scale(r, gamma)
            if let Some(gamma) = self.cfg.scale {
                let gm = gamma.gamma();
                let hs = h_out.space();
                let ht = h_out.time();
                let mut gr = vec![0.0; d1];
                for i in 0..self.dim {
                    gr[i + 1] = gm * (g[i + 1] + g[0] * hs[i] / ht);
                }
                g = gr;
            }

            // split the block gradient into the skip branch and the layer branch
            let mut g_prev = vec![0.0; d1];
            let mut g_z = vec![0.0; d1];
            match self.cfg.method {
                ResidualMethod::Lresnet => {
                    let w = self.block_weights(l);
                    let (wx, wy_abs) = (w.w_x(), w.w_y_abs());
                    let u: Vec<f64> = h_prev
                        .coords()
                        .iter()
                        .zip(z.coords())
                        .map(|(&a, &b)| wx * a + wy_abs * b)
                        .collect();
                    let inner = lorentz_inner_unchecked(&u, &u);
                    let denom = (self.model.curvature().neg_k() * -inner).sqrt();
                    let udotg: f64 = u.iter().zip(&g).map(|(a, b)| a * b).sum();
                    let mut g_u = vec![0.0; d1];
                    for i in 0..d1 {
                        let gu_i = if i == 0 { -u[0] } else { u[i] };
                        g_u[i] = (g[i] - gu_i * udotg / inner) / denom;
                    }
                    for i in 0..d1 {
                        g_prev[i] = wx * g_u[i];
                        g_z[i] = wy_abs * g_u[i];
                    }
                    if self.wy[l] != 0.0 {
                        let zdot: f64 = z.coords().iter().zip(&g_u).map(|(a, b)| a * b).sum();
                        grads.wy[l] += self.wy[l].signum() * zdot;
                    }
                }
                ResidualMethod::Sa => {
                    // h_out = lift(h_prev.s + z.s)
                    let hs = h_out.space();
                    let ht = h_out.time();
                    for i in 0..self.dim {
                        let eff = g[i + 1] + g[0] * hs[i] / ht;
                        g_prev[i + 1] = eff;
                        g_z[i + 1] = eff;
                    }
                }
                ResidualMethod::None => {
                    g_z.copy_from_slice(&g);
                }
                ResidualMethod::Pt | ResidualMethod::Ts => unreachable!("checked in loss_and_grads"),
            }

            // layer branch: z = lift(W h_prev.s)
            let zs = z.space();
            let zt = z.time();
            let eff: Vec<f64> = (0..self.dim).map(|i| g_z[i + 1] + g_z[0] * zs[i] / zt).collect();
            let hs = h_prev.space();
            let layer = &self.layers[l];
            let gw = &mut grads.weights[l];
            for r in 0..self.dim {
                for c in 0..self.dim {
                    gw[r * self.dim + c] += eff[r] * hs[c];
                }
            }
            for c in 0..self.dim {
                let mut s = 0.0;
                for r in 0..self.dim {
                    s += layer.weight[r * self.dim + c] * eff[r];
                }
                g_prev[c + 1] += s;
            }

            g = g_prev;
        }
        Ok(())
    }

    /// Full-batch gradient descent. Deterministic given the dataset and the
    /// network's initial state; the loss curve is recorded, not required to
    /// be monotone.
    pub fn train(&mut self, data: &SyntheticHierarchyDataset, epochs: usize, lr: f64) -> Result<Vec<EpochStat>> {
        let mut curve = Vec::with_capacity(epochs);
        for epoch in 0..epochs {
            let (loss, grads) = self.loss_and_grads(data)?;
            if !loss.is_finite() {
                let layer = self.first_non_finite_layer(data);
                return Err(Error::NanLoss { epoch, layer });
            }
            for (l, gw) in grads.weights.iter().enumerate() {
                for (w, g) in self.layers[l].weight.iter_mut().zip(gw) {
                    *w -= lr * g;
                }
            }
            for (w, g) in self.wy.iter_mut().zip(&grads.wy) {
                *w -= lr * g;
            }
            let (_, accuracy) = self.evaluate(data)?;
            curve.push(EpochStat { epoch, loss, accuracy });
        }
        Ok(curve)
    }

    fn first_non_finite_layer(&self, data: &SyntheticHierarchyDataset) -> usize {
        for x in &data.points {
            if let Ok((_, trace)) = self.forward(x) {
                for (l, h) in trace.h.iter().enumerate() {
                    if !h.is_finite() {
                        return l;
                    }
                }
            }
        }
        0
    }
}

/// Accumulated parameter gradients, one block of entries per layer.
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub wy: Vec<f64>,
}

impl Gradients {
    fn zeros(net: &Network) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weight.len()]).collect(),
            wy: vec![0.0; net.wy.len()],
        }
    }

    /// Flattened in the same order as the network parameter vector.
    pub fn flat(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.weights.iter().flatten().copied().collect();
        out.extend_from_slice(&self.wy);
        out
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Generation parameters of the synthetic tree dataset.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HierarchyParams {
    pub branching: usize,
    pub depth: usize,
    pub n_points: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams { branching: 3, depth: 6, n_points: 600, sigma: 1.0, seed: 42 }
    }
}

/// A balanced tree embedded near the origin: every node's space coordinates
/// are its parent's plus Gaussian noise shrinking with depth, lifted onto the
/// hyperboloid. The class of a node is its top-level subtree, so the space
/// dimension equals the branching factor and classes form noisy cones.
pub struct SyntheticHierarchyDataset {
    pub points: Vec<LorentzPoint<f64>>,
    pub labels: Vec<usize>,
    pub params: HierarchyParams,
}

impl SyntheticHierarchyDataset {
    pub fn generate(model: &LorentzModel<f64>, params: HierarchyParams) -> Result<Self> {
        if params.branching < 2 || params.depth < 1 {
            return Err(Error::InvalidArgument("branching >= 2 and depth >= 1 required".into()));
        }
        let dim = params.branching;
        let mut rng = rng_from_seed(params.seed);

        // (space, class) for all non-root nodes, breadth first
        let mut level: Vec<(Vec<f64>, usize)> = Vec::new();
        let mut all: Vec<(Vec<f64>, usize)> = Vec::new();
        for c in 0..params.branching {
            let space: Vec<f64> = (0..dim)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g * params.sigma
                })
                .collect();
            level.push((space, c));
        }
        all.extend(level.iter().cloned());
        for d in 2..=params.depth {
            let step = params.sigma / d as f64;
            let mut next = Vec::with_capacity(level.len() * params.branching);
            for (parent, class) in &level {
                for _ in 0..params.branching {
                    let space: Vec<f64> = parent
                        .iter()
                        .map(|p| {
                            let g: f64 = StandardNormal.sample(&mut rng);
                            p + g * step
                        })
                        .collect();
                    next.push((space, *class));
                }
            }
            all.extend(next.iter().cloned());
            level = next;
        }

        if all.len() < params.n_points {
            return Err(Error::InvalidArgument(format!(
                "tree has {} nodes but {} points requested",
                all.len(),
                params.n_points
            )));
        }

        // deterministic subsample to the requested size
        let mut indices: Vec<usize> = (0..all.len()).collect();
        for i in (1..indices.len()).rev() {
            let j = rng.gen_range(0..=i);
            indices.swap(i, j);
        }
        indices.truncate(params.n_points);
        indices.sort_unstable();

        let mut points = Vec::with_capacity(params.n_points);
        let mut labels = Vec::with_capacity(params.n_points);
        for i in indices {
            points.push(model.lift_from_space(&all[i].0));
            labels.push(all[i].1);
        }
        Ok(SyntheticHierarchyDataset { points, labels, params })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.params.branching
    }

    pub fn dim(&self) -> usize {
        self.params.branching
    }
}

/// One row of the depth study table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DepthDiagnostic {
    pub depth: usize,
    pub method: String,
    pub accuracy_with: f64,
    pub accuracy_without: f64,
    pub mean_pairwise_dist_with: f64,
    pub mean_pairwise_dist_without: f64,
    /// Mean squared distance to the equal-weight centroid of the embeddings.
    pub centroid_dispersion_with: f64,
    pub centroid_dispersion_without: f64,
    /// Any non-finite value showed up in the with-residual forward pass.
    pub non_finite_with: bool,
}

/// Trains (or, for the forward-only baselines, reuses the plain network's
/// weights) at each depth and reports accuracy together with embedding
/// collapse indicators, with and without the residual connection.
pub fn oversmoothing_diagnostic(
    model: &LorentzModel<f64>,
    depths: &[usize],
    method: ResidualMethod,
    data: &SyntheticHierarchyDataset,
    seed: u64,
    epochs: usize,
    lr: f64,
) -> Result<Vec<DepthDiagnostic>> {
    if depths.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("depths must be sorted ascending".into()));
    }
    let mut rows = Vec::with_capacity(depths.len());
    for &depth in depths {
        let mut plain = Network::new(*model, data.dim(), depth, ResidualBlockConfig::new(ResidualMethod::None), seed);
        plain.train(data, epochs, lr)?;
        let (_, acc_without) = plain.evaluate(data)?;
        let emb_without = plain.embeddings(data)?;
        let (dist_without, disp_without) = collapse_indicators(model, &emb_without)?;

        let mut cfg = ResidualBlockConfig::new(method);
        if method == ResidualMethod::Pt {
            // reproduce the published baseline behaviour, including its NaN
            // regime at depth, by running on the unclamped reference path
            cfg.clamped = false;
        }
        let with = if method.trainable() {
            let mut net = Network::new(*model, data.dim(), depth, cfg, seed);
            net.train(data, epochs, lr)?;
            net
        } else {
            let mut net = Network::new(*model, data.dim(), depth, cfg, seed);
            net.layers = plain.layers.clone();
            net
        };

        let mut non_finite = false;
        let mut acc_with = f64::NAN;
        let mut dist_with = f64::NAN;
        let mut disp_with = f64::NAN;
        match with.evaluate(data) {
            Ok((loss, acc)) => {
                if !loss.is_finite() {
                    non_finite = true;
                }
                acc_with = acc;
                match with.embeddings(data) {
                    Ok(emb) => {
                        if emb.iter().any(|p| !p.is_finite()) {
                            non_finite = true;
                        } else {
                            let (d, s) = collapse_indicators(model, &emb)?;
                            dist_with = d;
                            disp_with = s;
                        }
                    }
                    Err(_) => non_finite = true,
                }
            }
            Err(_) => non_finite = true,
        }

        rows.push(DepthDiagnostic {
            depth,
            method: method.name().to_string(),
            accuracy_with: acc_with,
            accuracy_without: acc_without,
            mean_pairwise_dist_with: dist_with,
            mean_pairwise_dist_without: dist_without,
            centroid_dispersion_with: disp_with,
            centroid_dispersion_without: disp_without,
            non_finite_with: non_finite,
        });
    }
    Ok(rows)
}

/// Mean pairwise squared Lorentzian distance and mean squared distance to
/// the equal-weight centroid.
fn collapse_indicators(model: &LorentzModel<f64>, embeddings: &[LorentzPoint<f64>]) -> Result<(f64, f64)> {
    let n = embeddings.len();
    let mut sum = 0.0;
    let mut pairs = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += model.squared_lorentz_distance(&embeddings[i], &embeddings[j])?;
            pairs += 1;
        }
    }
    let refs: Vec<&LorentzPoint<f64>> = embeddings.iter().collect();
    let center = weighted_centroid(model, &refs, &vec![1.0; n])?;
    let mut disp = 0.0;
    for e in embeddings {
        disp += model.squared_lorentz_distance(e, &center)?;
    }
    Ok((sum / pairs as f64, disp / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::fd_oracle;

    fn model() -> LorentzModel<f64> {
        LorentzModel::new(-1.0).unwrap()
    }

    fn small_data(n: usize, seed: u64) -> SyntheticHierarchyDataset {
        let params = HierarchyParams { branching: 3, depth: 4, n_points: n, sigma: 1.0, seed };
        SyntheticHierarchyDataset::generate(&model(), params).unwrap()
    }

    #[test]
    fn dataset_generation_basics() {
        let data = small_data(50, 1);
        assert_eq!(data.len(), 50);
        assert!(data.labels.iter().all(|&l| l < 3));
        for p in &data.points {
            assert!(model().membership_defect(p.coords()) < 1e-12);
        }
        // deterministic
        let again = small_data(50, 1);
        assert_eq!(data.points[7].coords(), again.points[7].coords());
    }

    #[test]
    fn zero_layers_passes_input_through() {
        let m = model();
        let net = Network::new(m, 3, 0, ResidualBlockConfig::new(ResidualMethod::Lresnet), 1);
        let x = m.lift_from_space(&[0.3, -0.2, 1.0]);
        let (logits, trace) = net.forward(&x).unwrap();
        assert_eq!(logits, x.space());
        assert_eq!(trace.h.len(), 1);
    }

    #[test]
    fn identity_layer_with_equal_weights_is_identity_block() {
        let m = model();
        let mut net = Network::new(m, 3, 1, ResidualBlockConfig::new(ResidualMethod::Lresnet), 1);
        net.layers[0].weight = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let x = m.lift_from_space(&[0.4, 0.1, -0.9]);
        let (_, trace) = net.forward(&x).unwrap();
        for (a, b) in trace.h[1].coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_wy_suppresses_the_layer_branch() {
        let m = model();
        let mut cfg = ResidualBlockConfig::new(ResidualMethod::Lresnet);
        cfg.weights = ResidualWeights::new(1.0, 1e-12).unwrap();
        let net = Network::new(m, 3, 3, cfg, 2);
        let x = m.lift_from_space(&[0.5, -0.3, 0.8]);
        let (_, trace) = net.forward(&x).unwrap();
        let last = trace.h.last().unwrap();
        for (a, b) in last.coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-9, "skip limit violated");
        }
    }

    #[test]
    fn intermediates_stay_on_manifold_for_all_methods() {
        let m = model();
        let data = small_data(10, 3);
        for method in [
            ResidualMethod::Lresnet,
            ResidualMethod::Pt,
            ResidualMethod::Ts,
            ResidualMethod::Sa,
            ResidualMethod::None,
        ] {
            let net = Network::new(m, 3, 4, ResidualBlockConfig::new(method), 4);
            for x in &data.points {
                let (_, trace) = net.forward(x).unwrap();
                for h in &trace.h {
                    assert!(m.membership_defect(h.coords()) < 1e-9, "{method:?}");
                }
            }
        }
    }

    #[test]
    fn lresnet_blocks_commute_end_to_end_with_equal_weights() {
        // swapping the two arguments of every residual block leaves the
        // output bit-identical for the centroid connection
        let m = model();
        let net = Network::new(m, 3, 3, ResidualBlockConfig::new(ResidualMethod::Lresnet), 5);
        let x = m.lift_from_space(&[0.2, 0.9, -0.4]);
        let mut trace_fwd = vec![x.clone()];
        let mut trace_swapped = vec![x.clone()];
        for l in 0..3 {
            let h = trace_fwd.last().unwrap().clone();
            let z = net.layers[l].forward(&m, &h);
            let w = ResidualWeights::default();
            trace_fwd.push(lresnet_add(&m, &h, &z, &w).unwrap());
            let h = trace_swapped.last().unwrap().clone();
            let z = net.layers[l].forward(&m, &h);
            trace_swapped.push(lresnet_add(&m, &z, &h, &w).unwrap());
        }
        assert_eq!(trace_fwd.last().unwrap().coords(), trace_swapped.last().unwrap().coords());
    }

    #[test]
    fn pt_blocks_do_not_commute() {
        let m = model();
        let net = Network::new(m, 3, 1, ResidualBlockConfig::new(ResidualMethod::Pt), 6);
        // mirrored input so the two orders differ in the last coordinate
        let x = m.lift_from_space(&[0.8, 0.3, 1.4]);
        let z = net.layers[0].forward(&m, &x);
        let a = pt_add(&m, &x, &z).unwrap();
        let b = pt_add(&m, &z, &x).unwrap();
        let diff: f64 = a
            .coords()
            .iter()
            .zip(b.coords())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(diff > 1e-3, "expected order sensitivity, diff = {diff}");
    }

    #[test]
    fn gradients_match_fd_for_trainable_methods() {
        let m = model();
        let data = small_data(12, 7);
        for method in [ResidualMethod::Lresnet, ResidualMethod::Sa, ResidualMethod::None] {
            let mut cfg = ResidualBlockConfig::new(method);
            cfg.scale = Some(ScaleFactor::new(1.3).unwrap());
            let net = Network::new(m, 3, 2, cfg, 8);
            let (_, grads) = net.loss_and_grads(&data).unwrap();
            let flat = grads.flat();

            let mut probe = net.clone();
            let params: Vec<f64> = (0..net.num_params()).map(|i| net.get_param(i)).collect();
            let fd = fd_oracle(
                |p| {
                    for (i, v) in p.iter().enumerate() {
                        probe_set(&mut probe.clone(), i, *v);
                    }
                    // closure must not mutate captured state; rebuild instead
                    let mut n = net.clone();
                    for (i, v) in p.iter().enumerate() {
                        n.set_param(i, *v);
                    }
                    let mut loss = 0.0;
                    for (x, &label) in data.points.iter().zip(&data.labels) {
                        loss += n.loss(x, label).unwrap();
                    }
                    vec![loss / data.len() as f64]
                },
                &params,
                1e-5,
            );
            for (i, (a, b)) in flat.iter().zip(&fd.data).enumerate() {
                let scale = a.abs().max(b.abs()).max(1e-8);
                assert!((a - b).abs() / scale < 1e-4, "{method:?} param {i}: {a} vs {b}");
            }
        }
    }

    fn probe_set(net: &mut Network, idx: usize, value: f64) {
        net.set_param(idx, value);
    }

    #[test]
    fn non_trainable_methods_are_rejected() {
        let m = model();
        let data = small_data(5, 9);
        for method in [ResidualMethod::Pt, ResidualMethod::Ts] {
            let mut net = Network::new(m, 3, 2, ResidualBlockConfig::new(method), 10);
            assert!(matches!(net.train(&data, 1, 0.1), Err(Error::NotTrainable(_))));
        }
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let m = model();
        let data = small_data(20, 11);
        let mut net = Network::new(m, 3, 2, ResidualBlockConfig::new(ResidualMethod::Lresnet), 12);
        let curve = net.train(&data, 5, 0.0).unwrap();
        for stat in &curve[1..] {
            assert_eq!(stat.loss.to_bits(), curve[0].loss.to_bits());
        }
    }

    #[test]
    fn training_is_deterministic() {
        let m = model();
        let data = small_data(30, 13);
        let run = || {
            let mut net = Network::new(m, 3, 2, ResidualBlockConfig::new(ResidualMethod::Lresnet), 14);
            net.train(&data, 10, 0.5).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.loss.to_bits(), y.loss.to_bits());
        }
    }

    #[test]
    fn diagnostic_rows_and_determinism() {
        let m = model();
        let data = small_data(24, 15);
        let rows = oversmoothing_diagnostic(&m, &[1, 2], ResidualMethod::Lresnet, &data, 16, 5, 0.3).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.accuracy_with.is_finite()));
        let again = oversmoothing_diagnostic(&m, &[1, 2], ResidualMethod::Lresnet, &data, 16, 5, 0.3).unwrap();
        assert_eq!(rows, again);
        assert!(oversmoothing_diagnostic(&m, &[2, 1], ResidualMethod::Lresnet, &data, 16, 1, 0.3).is_err());
    }
}
