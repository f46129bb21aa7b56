//! Dense dataset storage and libsvm text ingestion.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Dense feature matrix with labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array1<f64>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Synthetic stand-in for a libsvm file: anisotropic Gaussian features
    /// (per-feature scales log-spaced over three decades, so the induced
    /// logistic objective is ill-conditioned rather than trivially easy, and
    /// large enough overall that the sigmoids saturate and curvature varies
    /// along the trajectory), labels from a noisy planted linear separator.
    /// Reproducible given the RNG state.
    pub fn synthesize<R: Rng>(rng: &mut R, n: usize, d: usize, label_noise: f64) -> Self {
        let normal = StandardNormal;
        let planted: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
        let scales: Vec<f64> = (0..d)
            .map(|j| {
                let t = if d > 1 { j as f64 / (d - 1) as f64 } else { 0.0 };
                6.0 * 10f64.powf(-3.0 * t)
            })
            .collect();
        let mut features = Array2::zeros((n, d));
        let mut labels = Array1::zeros(n);
        for i in 0..n {
            let mut score = 0.0;
            for j in 0..d {
                let z: f64 = normal.sample(rng);
                let v = scales[j] * z;
                features[[i, j]] = v;
                score += planted[j] * v;
            }
            let flip = rng.random_bool(label_noise);
            let y = if (score >= 0.0) != flip { 1.0 } else { -1.0 };
            labels[i] = y;
        }
        Dataset { features, labels }
    }
}

fn map_label(raw: &str, line: usize) -> Result<f64> {
    match raw {
        "+1" | "1" | "1.0" | "+1.0" => Ok(1.0),
        "-1" | "-1.0" => Ok(-1.0),
        // 0/1-labeled files are remapped to -1/+1
        "0" | "0.0" => Ok(-1.0),
        other => Err(Error::Parse {
            line,
            msg: format!("unmappable label {other:?}"),
        }),
    }
}

/// Parse libsvm text: each nonempty line is `label idx:val [idx:val ...]`
/// with 1-based, strictly increasing indices. Missing entries are zero.
/// The feature dimension is the maximum index seen, unless `force_dim`
/// overrides it.
pub fn parse_libsvm(text: &str, force_dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut max_idx = 0usize;

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        // strip trailing comments, common in libsvm dumps
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let label = map_label(parts.next().unwrap(), line)?;
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut prev_idx = 0usize;
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected idx:val, got {tok:?}"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad feature index {idx_s:?}"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad feature value {val_s:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    msg: "feature indices are 1-based".into(),
                });
            }
            if idx <= prev_idx {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-monotone feature index {idx}"),
                });
            }
            if !val.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("non-finite feature value {val}"),
                });
            }
            prev_idx = idx;
            max_idx = max_idx.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(label);
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no samples".into(),
        });
    }
    let d = match force_dim {
        Some(d) if d >= max_idx => d,
        Some(d) => {
            return Err(Error::Config(format!(
                "forced dimension {d} below max feature index {max_idx}"
            )))
        }
        None => max_idx,
    };
    if d == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "no features".into(),
        });
    }

    let n = rows.len();
    let mut features = Array2::zeros((n, d));
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            features[[i, j]] = v;
        }
    }
    Ok(Dataset {
        features,
        labels: Array1::from_vec(labels),
    })
}

/// Serialize back to libsvm text. Zero entries are omitted; floats use the
/// shortest round-trip representation, so parse -> write -> parse is exact.
pub fn write_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..data.n_samples() {
        let label = if data.labels[i] > 0.0 { "+1" } else { "-1" };
        out.push_str(label);
        for j in 0..data.n_features() {
            let v = data.features[[i, j]];
            if v != 0.0 {
                out.push_str(&format!(" {}:{}", j + 1, v));
            }
        }
        out.push('\n');
    }
    out
}
