//! Linear approximation networks: a [`DenseNetwork`] whose every hidden activation is
//! replaced by that neuron's own [`PiecewiseLinearFn`], plus the greedy builder that
//! adds tangent lines until the logit-level approximation error reaches a target.

use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::distribution::{subsample_values, NeuronDistribution, DEFAULT_GRID_SIZE, DEFAULT_SAMPLE_CAP};
use crate::error::{Error, Result};
use crate::network::{DenseNetwork, NetworkFile};
use crate::pwl::PiecewiseLinearFn;

/// Candidate errors closer than this (relative) count as a tie.
const CANDIDATE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Target approximation degree λ.
    pub lambda: f64,
    /// Neurons updated per iteration.
    pub batch: usize,
    /// Grid size of each neuron distribution.
    pub grid_size: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Activations used per neuron when fitting distributions.
    pub sample_cap: usize,
    /// Evaluate the approximation error on at most this many rows.
    pub eval_subsample: Option<usize>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            batch: 8,
            grid_size: DEFAULT_GRID_SIZE,
            max_iterations: 10_000,
            seed: 0,
            sample_cap: DEFAULT_SAMPLE_CAP,
            eval_subsample: None,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.batch == 0 || self.grid_size == 0 || self.sample_cap == 0 {
            return Err(Error::Config("batch, grid size and sample cap must be positive".into()));
        }
        if self.eval_subsample == Some(0) {
            return Err(Error::Config("evaluation subsample must be positive".into()));
        }
        Ok(())
    }
}

/// Active piece index (0-based) of every hidden neuron, layer by layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivationPattern(pub Vec<Vec<usize>>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// K(g), total number of pieces.
    pub pieces: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    NoPositiveGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub config: BuildConfig,
}

impl BuildTrace {
    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.error)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["iteration", "K", "E"]).map_err(|e| csv_err(path, e))?;
        for r in &self.rows {
            w.write_record([r.iteration.to_string(), r.pieces.to_string(), r.error.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Vec<TraceRow>> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        r.deserialize::<(usize, usize, f64)>()
            .map(|row| {
                row.map(|(iteration, pieces, error)| TraceRow {
                    iteration,
                    pieces,
                    error,
                })
                .map_err(|e| csv_err(path, e))
            })
            .collect()
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Best next tangent point for one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCandidate {
    /// Pre-activation tangent point `p*`.
    pub point: f64,
    /// Expected error after inserting `p*`.
    pub error_after: f64,
    /// Current expected error minus `error_after`; may be ≤ 0.
    pub gain: f64,
}

/// Scans every grid point of `dist` (mapped to the pre-activation domain) as a new
/// tangent point and returns the one minimizing the expected error. Ties go to the
/// smaller pre-activation. `Err(Exhausted)` when every candidate is already used.
pub fn next_tangent_point(pwl: &PiecewiseLinearFn, dist: &NeuronDistribution) -> Result<TangentCandidate> {
    let current = dist.expected_error(pwl)?;
    let mut best: Option<(f64, f64)> = None;
    for &p in dist.preimage() {
        if !p.is_finite() || pwl.is_duplicate(p) {
            continue;
        }
        let trial = pwl.insert_tangent(p)?;
        let err = dist.expected_error_unchecked(&trial);
        let better = match best {
            None => true,
            Some((_, b)) => err < b - CANDIDATE_TIE * b.abs().max(f64::MIN_POSITIVE),
        };
        if better {
            best = Some((p, err));
        }
    }
    let (point, error_after) = best.ok_or(Error::Exhausted)?;
    Ok(TangentCandidate {
        point,
        error_after,
        gain: current - error_after,
    })
}

/// Record of how a model was built, carried alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildRecord {
    pub config: BuildConfig,
    pub trace: BuildTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LannModel {
    base: DenseNetwork,
    approx: Vec<Vec<PiecewiseLinearFn>>,
    dists: Option<Vec<Vec<NeuronDistribution>>>,
    build: Option<BuildRecord>,
}

impl LannModel {
    /// Every neuron starts from the single tangent line at 0.
    pub fn initial(base: DenseNetwork) -> Self {
        let act = base.activation();
        let approx = base
            .widths()
            .into_iter()
            .map(|m| vec![PiecewiseLinearFn::initial(act); m])
            .collect();
        Self {
            base,
            approx,
            dists: None,
            build: None,
        }
    }

    pub fn new(
        base: DenseNetwork,
        approx: Vec<Vec<PiecewiseLinearFn>>,
        dists: Option<Vec<Vec<NeuronDistribution>>>,
    ) -> Result<Self> {
        let widths = base.widths();
        let shape_ok = |lens: Vec<usize>| lens == widths;
        if !shape_ok(approx.iter().map(Vec::len).collect()) {
            return Err(Error::Model("approximation shape does not mirror the network".into()));
        }
        if approx.iter().flatten().any(|p| p.activation() != base.activation()) {
            return Err(Error::Model("approximation activation differs from the network".into()));
        }
        if let Some(d) = &dists {
            if !shape_ok(d.iter().map(Vec::len).collect()) {
                return Err(Error::Model("distribution shape does not mirror the network".into()));
            }
        }
        Ok(Self {
            base,
            approx,
            dists,
            build: None,
        })
    }

    pub fn base(&self) -> &DenseNetwork {
        &self.base
    }

    pub fn approximations(&self) -> &[Vec<PiecewiseLinearFn>] {
        &self.approx
    }

    pub fn distributions(&self) -> Option<&[Vec<NeuronDistribution>]> {
        self.dists.as_deref()
    }

    pub fn build_record(&self) -> Option<&BuildRecord> {
        self.build.as_ref()
    }

    /// `k_{i,j}` for every hidden neuron.
    pub fn piece_counts(&self) -> Vec<Vec<usize>> {
        self.approx
            .iter()
            .map(|layer| layer.iter().map(PiecewiseLinearFn::pieces).collect())
            .collect()
    }

    /// K(g) = Σ k_{i,j}.
    pub fn total_pieces(&self) -> usize {
        self.approx.iter().flatten().map(PiecewiseLinearFn::pieces).sum()
    }

    /// Per-neuron expected approximation error under the fitted distributions.
    pub fn expected_errors(&self) -> Result<Vec<Vec<f64>>> {
        let dists = self
            .dists
            .as_ref()
            .ok_or_else(|| Error::Model("LANN has no fitted distributions".into()))?;
        self.approx
            .iter()
            .zip(dists)
            .map(|(ls, ds)| ls.iter().zip(ds).map(|(l, d)| d.expected_error(l)).collect())
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Array1<f64>, ActivationPattern)> {
        if x.len() != self.base.input_dim() {
            return Err(Error::Dimension(format!(
                "input has length {}, network expects {}",
                x.len(),
                self.base.input_dim()
            )));
        }
        let mut current = Array1::from(x.to_vec());
        let mut pattern = Vec::with_capacity(self.approx.len());
        for (layer, fns) in self.base.hidden_layers().iter().zip(&self.approx) {
            let z = layer.weights.dot(&current) + &layer.bias;
            let mut states = Vec::with_capacity(fns.len());
            current = Array1::from_iter(z.iter().zip(fns).map(|(&v, f)| {
                let s = f.active_index(v);
                states.push(s);
                let (a, b) = f.piece(s).expect("active index in range");
                a * v + b
            }));
            pattern.push(states);
        }
        let out = self.base.output_layer();
        Ok((out.weights.dot(&current) + &out.bias, ActivationPattern(pattern)))
    }

    /// Batched logits; rows are samples.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.base.check_batch(x)?;
        let mut current: Option<Array2<f64>> = None;
        for (layer, fns) in self.base.hidden_layers().iter().zip(&self.approx) {
            let mut z = layer.apply_batch(current.as_ref().map_or(x, |c| c.view()));
            for (mut col, f) in z.axis_iter_mut(Axis(1)).zip(fns) {
                col.mapv_inplace(|v| f.evaluate(v));
            }
            current = Some(z);
        }
        let last = current.expect("at least one hidden layer");
        Ok(self.base.output_layer().apply_batch(last.view()))
    }

    /// Activation patterns of a batch, flattened per row as `u16` piece indices.
    pub fn patterns_batch(&self, x: ArrayView2<f64>) -> Result<Array2<u16>> {
        self.base.check_batch(x)?;
        let n = x.nrows();
        let total: usize = self.approx.iter().map(Vec::len).sum();
        let mut codes = Array2::<u16>::zeros((n, total));
        let mut offset = 0;
        let mut current: Option<Array2<f64>> = None;
        for (layer, fns) in self.base.hidden_layers().iter().zip(&self.approx) {
            let mut z = layer.apply_batch(current.as_ref().map_or(x, |c| c.view()));
            for (j, (mut col, f)) in z.axis_iter_mut(Axis(1)).zip(fns).enumerate() {
                let mut out = codes.slice_mut(s![.., offset + j]);
                for (v, code) in col.iter_mut().zip(out.iter_mut()) {
                    let s = f.active_index(*v);
                    *code = s as u16;
                    let (a, b) = f.piece(s).expect("active index in range");
                    *v = a * *v + b;
                }
            }
            offset += fns.len();
            current = Some(z);
        }
        Ok(codes)
    }

    /// The affine map `x ↦ W x + b` the LANN computes on the region of `pattern`,
    /// assembled as the product of homogeneous layer matrices
    /// `[V_o b_o] · Π_{i=L..1} (L_i · [V_i b_i; 0 1])`.
    pub fn region_linear_map(&self, pattern: &ActivationPattern) -> Result<(Array2<f64>, Array1<f64>)> {
        if pattern.0.len() != self.approx.len() {
            return Err(Error::Index("pattern depth does not match the network".into()));
        }
        let d = self.base.input_dim();
        let mut acc = Array2::<f64>::eye(d + 1);
        for (i, ((layer, fns), states)) in self
            .base
            .hidden_layers()
            .iter()
            .zip(&self.approx)
            .zip(&pattern.0)
            .enumerate()
        {
            let m = fns.len();
            if states.len() != m {
                return Err(Error::Index(format!("pattern layer {i} has wrong width")));
            }
            let affine = homogeneous(layer.weights.view(), layer.bias.view());
            let mut selector = Array2::<f64>::zeros((m + 1, m + 1));
            for (j, (f, &s)) in fns.iter().zip(states).enumerate() {
                let (a, b) = f.piece(s).ok_or_else(|| {
                    Error::Index(format!("piece {s} of neuron ({i}, {j}) with {} pieces", f.pieces()))
                })?;
                selector[[j, j]] = a;
                selector[[j, m]] = b;
            }
            selector[[m, m]] = 1.0;
            acc = selector.dot(&affine).dot(&acc);
        }
        let out = self.base.output_layer();
        let full = out.weights.dot(&acc.slice(s![..-1, ..]));
        let w = full.slice(s![.., ..d]).to_owned();
        let b = full.column(d).to_owned() + &out.bias;
        Ok((w, b))
    }

    /// Mean over `data` of the mean absolute logit difference to the base network.
    pub fn approximation_error(&self, data: &LabeledDataset) -> Result<f64> {
        approximation_error(self, &self.base, data)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LannFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LannFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn homogeneous(weights: ArrayView2<f64>, bias: ndarray::ArrayView1<f64>) -> Array2<f64> {
    let (rows, cols) = weights.dim();
    let mut h = Array2::<f64>::zeros((rows + 1, cols + 1));
    h.slice_mut(s![..rows, ..cols]).assign(&weights);
    h.slice_mut(s![..rows, cols]).assign(&bias);
    h[[rows, cols]] = 1.0;
    h
}

/// `E(g; f)`: mean over the data of `(1/c) Σ |g(x) − f(x)|`.
pub fn approximation_error(g: &LannModel, f: &DenseNetwork, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if g.base.input_dim() != f.input_dim() || g.base.output_dim() != f.output_dim() {
        return Err(Error::Dimension("LANN and network shapes differ".into()));
    }
    let target = f.logits_batch(data.features())?;
    mean_abs_diff(&g.forward_batch(data.features())?, &target)
}

fn mean_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension("logit shapes differ".into()));
    }
    let total: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Fits one distribution per hidden neuron from the network's activations on `data`.
pub fn fit_distributions(
    net: &DenseNetwork,
    data: &LabeledDataset,
    grid_size: usize,
    sample_cap: usize,
    seed: u64,
) -> Result<Vec<Vec<NeuronDistribution>>> {
    fit_distributions_with(net, data, grid_size, sample_cap, seed, NeuronDistribution::fit)
}

pub(crate) fn fit_distributions_with(
    net: &DenseNetwork,
    data: &LabeledDataset,
    grid_size: usize,
    sample_cap: usize,
    seed: u64,
    fit: fn(crate::Activation, &[f64], usize) -> Result<NeuronDistribution>,
) -> Result<Vec<Vec<NeuronDistribution>>> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let act = net.activation();
    let pass = net.forward_batch(data.features())?;
    pass.hidden
        .iter()
        .enumerate()
        .map(|(i, h)| {
            (0..h.ncols())
                .into_par_iter()
                .map(|j| {
                    let column = h.column(j).to_vec();
                    let samples = subsample_values(&column, sample_cap, neuron_seed(seed, i, j));
                    fit(act, &samples, grid_size)
                })
                .collect()
        })
        .collect()
}

fn neuron_seed(seed: u64, layer: usize, neuron: usize) -> u64 {
    seed ^ ((layer as u64) << 32 | neuron as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Greedy LANN construction: start from single tangent lines, then repeatedly give a
/// new tangent line to the `batch` neurons whose best candidate reduces their expected
/// error the most, until `E(g; f) ≤ λ`, no neuron has a positive gain, or the
/// iteration budget runs out.
pub fn build_lann(f: &DenseNetwork, data: &LabeledDataset, cfg: &BuildConfig) -> Result<(LannModel, BuildTrace)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dists = fit_distributions(f, data, cfg.grid_size, cfg.sample_cap, cfg.seed)?;
    let mut g = LannModel::initial(f.clone());

    let eval = match cfg.eval_subsample {
        Some(cap) => data.subsample(cap, cfg.seed)?,
        None => data.clone(),
    };
    let target = f.logits_batch(eval.features())?;
    let error_now = |g: &LannModel| mean_abs_diff(&g.forward_batch(eval.features())?, &target);

    let neurons: Vec<(usize, usize)> = g
        .approx
        .iter()
        .enumerate()
        .flat_map(|(i, layer)| (0..layer.len()).map(move |j| (i, j)))
        .collect();
    let mut candidates: Vec<Option<TangentCandidate>> = neurons
        .par_iter()
        .map(|&(i, j)| candidate_or_exhausted(&g.approx[i][j], &dists[i][j]))
        .collect::<Result<_>>()?;

    let mut error = error_now(&g)?;
    let mut rows = vec![TraceRow {
        iteration: 0,
        pieces: g.total_pieces(),
        error,
    }];
    let mut iteration = 0;
    let stop_reason = loop {
        if error <= cfg.lambda {
            break StopReason::Converged;
        }
        if iteration >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        let mut ranked: Vec<usize> = (0..neurons.len())
            .filter(|&u| candidates[u].is_some_and(|c| c.gain > 0.0))
            .collect();
        if ranked.is_empty() {
            break StopReason::NoPositiveGain;
        }
        // descending gain; ties by (layer, neuron), which is the index order
        ranked.sort_by(|&a, &b| {
            let (ga, gb) = (candidates[a].unwrap().gain, candidates[b].unwrap().gain);
            gb.total_cmp(&ga).then(a.cmp(&b))
        });
        ranked.truncate(cfg.batch);
        log::debug!(
            "iteration {}: {:?}",
            iteration + 1,
            ranked
                .iter()
                .map(|&u| (neurons[u], candidates[u].unwrap().gain))
                .collect::<Vec<_>>()
        );
        for &u in &ranked {
            let (i, j) = neurons[u];
            let cand = candidates[u].expect("ranked neurons have candidates");
            g.approx[i][j] = g.approx[i][j].insert_tangent(cand.point)?;
        }
        let updated: Vec<Option<TangentCandidate>> = ranked
            .par_iter()
            .map(|&u| {
                let (i, j) = neurons[u];
                candidate_or_exhausted(&g.approx[i][j], &dists[i][j])
            })
            .collect::<Result<_>>()?;
        for (&u, c) in ranked.iter().zip(updated) {
            candidates[u] = c;
        }
        iteration += 1;
        error = error_now(&g)?;
        rows.push(TraceRow {
            iteration,
            pieces: g.total_pieces(),
            error,
        });
    };

    let trace = BuildTrace {
        rows,
        converged: stop_reason == StopReason::Converged,
        stop_reason,
        config: cfg.clone(),
    };
    g.dists = Some(dists);
    g.build = Some(BuildRecord {
        config: cfg.clone(),
        trace: trace.clone(),
    });
    Ok((g, trace))
}

fn candidate_or_exhausted(pwl: &PiecewiseLinearFn, dist: &NeuronDistribution) -> Result<Option<TangentCandidate>> {
    match next_tangent_point(pwl, dist) {
        Ok(c) => Ok(Some(c)),
        Err(Error::Exhausted) => Ok(None),
        Err(e) => Err(e),
    }
}

/// JSON layout of a LANN: the base network inline, one approximation and (optionally)
/// one distribution per hidden neuron, and the build record.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct LannFile {
    base: NetworkFile,
    approximations: Vec<Vec<PiecewiseLinearFn>>,
    distributions: Option<Vec<Vec<NeuronDistribution>>>,
    build: Option<BuildRecord>,
}

impl From<&LannModel> for LannFile {
    fn from(g: &LannModel) -> Self {
        Self {
            base: NetworkFile::from(&g.base),
            approximations: g.approx.clone(),
            distributions: g.dists.clone(),
            build: g.build.clone(),
        }
    }
}

impl TryFrom<LannFile> for LannModel {
    type Error = Error;

    fn try_from(file: LannFile) -> Result<Self> {
        let base = DenseNetwork::try_from(file.base)?;
        let mut g = LannModel::new(base, file.approximations, file.distributions)?;
        g.build = file.build;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::dataset::make_moons;
    use crate::network::DenseLayer;
    use ndarray::array;

    #[test]
    fn fresh_lann_matches_tanh_net_at_origin() {
        let net = DenseNetwork::random(2, &[5, 4], 3, Activation::Tanh, 2).unwrap();
        let g = LannModel::initial(net.clone());
        let (logits, pattern) = g.forward(&[0.0, 0.0]).unwrap();
        assert_eq!(logits, net.forward(&[0.0, 0.0]).unwrap().logits);
        assert!(pattern.0.iter().flatten().all(|&s| s == 0));
    }

    #[test]
    fn identity_lann_is_exact() {
        let net = DenseNetwork::random(3, &[4, 4], 2, Activation::Identity, 5).unwrap();
        let g = LannModel::initial(net.clone());
        for x in [[0.3, -1.0, 2.0], [5.0, 5.0, -5.0]] {
            let (a, _) = g.forward(&x).unwrap();
            let b = net.forward(&x).unwrap().logits;
            for (u, v) in a.iter().zip(b.iter()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_region_when_every_neuron_has_one_piece() {
        let net = DenseNetwork::random(2, &[3, 3], 2, Activation::Tanh, 8).unwrap();
        let g = LannModel::initial(net);
        let (w, b) = g.region_linear_map(&ActivationPattern(vec![vec![0; 3], vec![0; 3]])).unwrap();
        for x in [[1.0, 2.0], [-3.0, 0.5], [10.0, -10.0]] {
            let (logits, _) = g.forward(&x).unwrap();
            let lin = w.dot(&array![x[0], x[1]]) + &b;
            for (u, v) in logits.iter().zip(lin.iter()) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_piece_neuron_gives_two_maps() {
        let net = DenseNetwork::new(
            2,
            1,
            Activation::Tanh,
            vec![DenseLayer::new(array![[1.0, 1.0]], array![0.0]).unwrap()],
            DenseLayer::new(array![[1.0]], array![0.0]).unwrap(),
        )
        .unwrap();
        let pwl = PiecewiseLinearFn::initial(Activation::Tanh).insert_tangent(1.0).unwrap();
        let g = LannModel::new(net, vec![vec![pwl]], None).unwrap();
        let a = g.region_linear_map(&ActivationPattern(vec![vec![0]])).unwrap();
        let b = g.region_linear_map(&ActivationPattern(vec![vec![1]])).unwrap();
        assert_ne!(a, b);
        assert!(g.region_linear_map(&ActivationPattern(vec![vec![2]])).is_err());
    }

    #[test]
    fn shape_must_mirror() {
        let net = DenseNetwork::random(2, &[3, 2], 2, Activation::Tanh, 8).unwrap();
        let bad = vec![vec![PiecewiseLinearFn::initial(Activation::Tanh); 3]];
        assert!(LannModel::new(net, bad, None).is_err());
    }

    #[test]
    fn identity_build_stops_immediately() {
        let net = DenseNetwork::random(2, &[4, 3], 2, Activation::Identity, 5).unwrap();
        let data = make_moons(60, 0.1, 1).unwrap();
        let (g, trace) = build_lann(&net, &data, &BuildConfig::default()).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].iteration, 0);
        assert_eq!(trace.rows[0].pieces, 7);
        assert!(trace.rows[0].error < 1e-12);
        assert!(trace.converged);
        assert_eq!(g.total_pieces(), 7);
    }

    #[test]
    fn identity_gain_is_zero() {
        let d = NeuronDistribution::fit(Activation::Identity, &[-1.0, 0.0, 2.0], 20).unwrap();
        let c = next_tangent_point(&PiecewiseLinearFn::initial(Activation::Identity), &d).unwrap();
        assert!(c.gain.abs() < 1e-15);
    }

    #[test]
    fn exhausted_when_all_candidates_used() {
        let d = NeuronDistribution::uniform(Activation::Tanh, (-1.0, 1.0), 3).unwrap();
        let mut pwl = PiecewiseLinearFn::from_tangent_points(Activation::Tanh, d.preimage().to_vec()).unwrap();
        assert!(matches!(next_tangent_point(&pwl, &d), Err(Error::Exhausted)));
        pwl = pwl.insert_tangent(5.0).unwrap();
        assert!(matches!(next_tangent_point(&pwl, &d), Err(Error::Exhausted)));
    }

    #[test]
    fn json_round_trip() {
        let net = DenseNetwork::random(2, &[3, 2], 2, Activation::Tanh, 8).unwrap();
        let data = make_moons(100, 0.1, 1).unwrap();
        let cfg = BuildConfig {
            lambda: 0.01,
            grid_size: 50,
            ..BuildConfig::default()
        };
        let (g, _) = build_lann(&net, &data, &cfg).unwrap();
        let back = LannModel::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
