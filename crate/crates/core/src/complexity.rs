//! Region bound, the complexity measure, grid region counting and the diagnostics
//! used to pick the approximation degree.

use std::collections::HashSet;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lann::{LannModel, TraceRow};

/// Largest grid `count_regions_grid` will enumerate.
pub const MAX_GRID_POINTS: u128 = 100_000_000;
const GRID_CHUNK: usize = 16_384;
/// Second differences at or below this leave the ratio undefined.
pub const MIN_CURVATURE: f64 = 1e-12;

/// `S_i = Σ_j k_{i,j} − m_i + 1` per hidden layer.
pub fn layer_sums(g: &LannModel) -> Vec<usize> {
    g.piece_counts()
        .iter()
        .map(|layer| layer.iter().sum::<usize>() - layer.len() + 1)
        .collect()
}

/// Per-layer sums and the natural log of the region bound `Π_i S_i^d`.
pub fn region_upper_bound(g: &LannModel) -> (Vec<usize>, f64) {
    let sums = layer_sums(g);
    let d = g.base().input_dim() as f64;
    let log_bound = d * sums.iter().map(|&s| (s as f64).ln()).sum::<f64>();
    (sums, log_bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub lambda: f64,
    pub input_dim: usize,
    pub layer_sums: Vec<usize>,
    /// Natural log of the region bound.
    pub upper_bound_log: f64,
    /// Complexity measure (natural log).
    pub complexity: f64,
    pub total_pieces: usize,
    pub converged: bool,
    pub log_base: String,
}

impl ComplexityReport {
    pub fn summary_line(&self) -> String {
        format!(
            "lambda={} K={} C={:.4} converged={}",
            self.lambda, self.total_pieces, self.complexity, self.converged
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["lambda", "K", "C", "upper_bound_log", "converged", "layer_sums"])
            .map_err(|e| csv_err(path, e))?;
        let sums: Vec<String> = self.layer_sums.iter().map(usize::to_string).collect();
        w.write_record([
            self.lambda.to_string(),
            self.total_pieces.to_string(),
            self.complexity.to_string(),
            self.upper_bound_log.to_string(),
            self.converged.to_string(),
            sums.join(";"),
        ])
        .map_err(|e| csv_err(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// `C = d Σ_i ln S_i`. `converged` comes from the model's build record, when present.
pub fn complexity_measure(g: &LannModel, lambda: f64) -> ComplexityReport {
    let (layer_sums, log_bound) = region_upper_bound(g);
    ComplexityReport {
        lambda,
        input_dim: g.base().input_dim(),
        layer_sums,
        upper_bound_log: log_bound,
        complexity: log_bound,
        total_pieces: g.total_pieces(),
        converged: g.build_record().is_some_and(|b| b.trace.converged),
        log_base: "e".into(),
    }
}

/// Dataset bounding box widened by `fraction` of its width in total (half per side).
pub fn expanded_box(bounds: &[(f64, f64)], fraction: f64) -> Vec<(f64, f64)> {
    bounds
        .iter()
        .map(|&(lo, hi)| {
            let pad = 0.5 * fraction * (hi - lo);
            (lo - pad, hi + pad)
        })
        .collect()
}

/// Number of distinct activation patterns over a uniform grid with `resolution[k]`
/// points (endpoints included) along dimension `k`. A lower bound on the number of
/// linear regions meeting the box.
pub fn count_regions_grid(g: &LannModel, bounds: &[(f64, f64)], resolution: &[usize]) -> Result<usize> {
    let d = g.base().input_dim();
    if bounds.len() != d || resolution.len() != d {
        return Err(Error::Dimension(format!(
            "box has {} and resolution {} dimensions, model expects {d}",
            bounds.len(),
            resolution.len()
        )));
    }
    if resolution.contains(&0) {
        return Err(Error::Config("grid resolution must be positive".into()));
    }
    if let Some(&(lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::Config(format!("invalid box side ({lo}, {hi})")));
    }
    let total = resolution.iter().map(|&r| r as u128).product::<u128>();
    if total > MAX_GRID_POINTS {
        return Err(Error::Config(format!("grid of {total} points exceeds {MAX_GRID_POINTS}")));
    }
    let total = total as usize;
    let axes: Vec<Vec<f64>> = bounds.iter().zip(resolution).map(|(&b, &r)| linspace(b, r)).collect();

    let starts: Vec<usize> = (0..total).step_by(GRID_CHUNK).collect();
    let patterns = starts
        .par_iter()
        .map(|&start| -> Result<HashSet<Vec<u16>>> {
            let end = (start + GRID_CHUNK).min(total);
            let mut x = Array2::<f64>::zeros((end - start, d));
            for (row, flat) in (start..end).enumerate() {
                let mut rest = flat;
                for k in (0..d).rev() {
                    let r = resolution[k];
                    x[[row, k]] = axes[k][rest % r];
                    rest /= r;
                }
            }
            let codes = g.patterns_batch(x.view())?;
            Ok(codes.outer_iter().map(|r| r.to_vec()).collect())
        })
        .try_reduce(HashSet::new, |mut a, b| {
            if a.len() < b.len() {
                return Ok(b.into_iter().chain(a).collect());
            }
            a.extend(b);
            Ok(a)
        })?;
    Ok(patterns.len())
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|q| if q == n - 1 { hi } else { lo + q as f64 * step }).collect()
}

/// One row per build iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub iteration: usize,
    pub error: f64,
    pub smoothed: f64,
    /// `|ΔE|` of the smoothed sequence, defined where both points have a full window.
    pub gain: Option<f64>,
    /// `|Δ gain|`.
    pub curvature: Option<f64>,
    /// `gain² / curvature`, only where the curvature exceeds [`MIN_CURVATURE`].
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsTrace {
    pub window: usize,
    pub rows: Vec<DiagnosticsRow>,
    /// Iteration at which the ratio settles, if it does.
    pub settle_iteration: Option<usize>,
    /// Suggested upper limit for λ: the error at `settle_iteration`.
    pub lambda0: Option<f64>,
}

impl DiagnosticsTrace {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(["iteration", "E", "E_smoothed", "k", "a", "k2_over_a"])
            .map_err(|e| csv_err(path, e))?;
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        for r in &self.rows {
            w.write_record([
                r.iteration.to_string(),
                r.error.to_string(),
                r.smoothed.to_string(),
                opt(r.gain),
                opt(r.curvature),
                opt(r.ratio),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Centred moving average; near the ends the window shrinks symmetrically.
pub fn centered_moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            values[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
        })
        .collect()
}

/// Smooths the build errors, forms the gain `k`, its change `a` and `k²/a`, and looks
/// for the point from which `k²/a` settles (see [`settle_point`]).
pub fn lambda_diagnostics(trace: &[TraceRow], window: usize) -> Result<DiagnosticsTrace> {
    if window == 0 {
        return Err(Error::Config("smoothing window must be positive".into()));
    }
    if trace.len() < window + 3 {
        return Err(Error::Diagnostics(format!(
            "trace has {} iterations, need at least {}",
            trace.len(),
            window + 3
        )));
    }
    let errors: Vec<f64> = trace.iter().map(|r| r.error).collect();
    let smoothed = centered_moving_average(&errors, window);
    // differences only between fully smoothed points
    let half = window / 2;
    let full = |i: usize| i >= half && i + half < smoothed.len();
    let gain: Vec<Option<f64>> = (0..smoothed.len())
        .map(|i| (i > 0 && full(i - 1) && full(i)).then(|| (smoothed[i] - smoothed[i - 1]).abs()))
        .collect();
    let curvature: Vec<Option<f64>> = (0..smoothed.len())
        .map(|i| match (i.checked_sub(1).and_then(|p| gain[p]), gain[i]) {
            (Some(prev), Some(cur)) => Some((cur - prev).abs()),
            _ => None,
        })
        .collect();
    let rows: Vec<DiagnosticsRow> = trace
        .iter()
        .enumerate()
        .map(|(i, r)| DiagnosticsRow {
            iteration: r.iteration,
            error: r.error,
            smoothed: smoothed[i],
            gain: gain[i],
            curvature: curvature[i],
            ratio: match (gain[i], curvature[i]) {
                (Some(k), Some(a)) if a > MIN_CURVATURE => Some(k * k / a),
                _ => None,
            },
        })
        .collect();
    let ratios: Vec<Option<f64>> = rows.iter().map(|r| r.ratio).collect();
    let settle = settle_point(&ratios);
    Ok(DiagnosticsTrace {
        window,
        settle_iteration: settle.map(|i| rows[i].iteration),
        lambda0: settle.map(|i| rows[i].error),
        rows,
    })
}

/// Spread a settled ratio sequence stays under, as a fraction of its peak.
pub const SETTLE_SPREAD: f64 = 0.2;

/// Earliest index `s` from which, for every `t ≥ s`, the defined ratios in the trailing
/// half `[⌈t/2⌉, t]` vary by less than [`SETTLE_SPREAD`] times the largest ratio of the
/// whole trace. A ratio decaying towards zero counts as settled once its remaining
/// movement is small against that peak. `None` when no ratio is defined at or after
/// `s`.
pub fn settle_point(ratios: &[Option<f64>]) -> Option<usize> {
    let peak = ratios.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()));
    if !(peak > 0.0) {
        return None;
    }
    let settled = |t: usize| {
        let window = ratios[t.div_ceil(2)..=t].iter().flatten();
        let (lo, hi) = window.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        lo > hi || (hi - lo) < SETTLE_SPREAD * peak
    };
    let start = (0..ratios.len()).rev().find(|&t| !settled(t)).map_or(0, |t| t + 1);
    let last_defined = ratios.iter().rposition(Option::is_some)?;
    (start <= last_defined).then_some(start)
}
