//! Frequency-band mode selection, spectral features, MDS embedding and k-NN evaluation.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmd::{mode_frequency, DmdResult};
use crate::error::{Error, Result};
use crate::numeric::sym_eig;
use crate::tensor::DenseTensor;

/// Modes whose frequency lies in `[lo_hz, hi_hz)`.
pub fn select_modes_by_band(result: &DmdResult, dt: f64, lo_hz: f64, hi_hz: f64) -> Result<Vec<usize>> {
    if !(lo_hz <= hi_hz) {
        return Err(Error::arg(format!("empty band [{lo_hz}, {hi_hz})")));
    }
    let mut out = Vec::new();
    for (j, &lambda) in result.eigenvalues.iter().enumerate() {
        let f = mode_frequency(lambda, dt)?;
        if f >= lo_hz && f < hi_hz {
            out.push(j);
        }
    }
    Ok(out)
}

/// Modes at the frequency nearest to `target_hz`, if it is within `tol_hz`.
///
/// Both members of a conjugate pair are returned together.
pub fn select_nearest_frequency(result: &DmdResult, dt: f64, target_hz: f64, tol_hz: f64) -> Result<Vec<usize>> {
    let freqs = result
        .eigenvalues
        .iter()
        .map(|&l| mode_frequency(l, dt))
        .collect::<Result<Vec<_>>>()?;
    let Some(best) = freqs.iter().map(|f| (f - target_hz).abs()).min_by(f64::total_cmp) else {
        return Ok(Vec::new());
    };
    if best > tol_hz {
        return Ok(Vec::new());
    }
    let nearest: Vec<usize> = (0..freqs.len()).filter(|&j| (freqs[j] - target_hz).abs() == best).collect();
    let f0 = freqs[nearest[0]];
    Ok((0..freqs.len())
        .filter(|&j| (freqs[j] - f0).abs() <= 1e-12 * f0.abs().max(1.0))
        .collect())
}

/// Entrywise modulus of the selected modes, averaged over the selection.
pub fn mode_amplitude_map(result: &DmdResult, indices: &[usize]) -> Result<DenseTensor<f64>> {
    if indices.is_empty() {
        return Err(Error::EmptySelection("no modes selected".into()));
    }
    let mut acc = DenseTensor::<f64>::zeros(result.mode_dims().to_vec())?;
    for &j in indices {
        if j >= result.n_modes() {
            return Err(Error::Index { index: j, len: result.n_modes() });
        }
        for (a, m) in acc.values_mut().iter_mut().zip(result.mode(j)) {
            *a += m.norm();
        }
    }
    let scale = 1.0 / indices.len() as f64;
    Ok(acc.map(|v| v * scale))
}

/// Mode frequencies sorted nonincreasing and aligned to a fixed length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFeature {
    pub frequencies: Vec<f64>,
    pub source: String,
}

impl FrequencyFeature {
    pub fn n_dims(&self) -> usize {
        self.frequencies.len()
    }
}

/// Frequencies of all modes, largest first, truncated or zero-padded to `n_dims`.
pub fn frequency_features(
    result: &DmdResult,
    dt: f64,
    n_dims: usize,
    source: impl Into<String>,
) -> Result<FrequencyFeature> {
    spectrum_features(&result.eigenvalues, dt, n_dims, source)
}

/// [`frequency_features`] on a bare eigenvalue list.
pub fn spectrum_features(
    eigenvalues: &[Complex64],
    dt: f64,
    n_dims: usize,
    source: impl Into<String>,
) -> Result<FrequencyFeature> {
    if n_dims == 0 {
        return Err(Error::arg("n_dims must be at least 1"));
    }
    let mut freqs = eigenvalues.iter().map(|&l| mode_frequency(l, dt)).collect::<Result<Vec<_>>>()?;
    freqs.sort_by(|a, b| b.total_cmp(a));
    freqs.resize(n_dims, 0.0);
    Ok(FrequencyFeature { frequencies: freqs, source: source.into() })
}

/// Pairwise Euclidean distances between feature vectors.
pub fn distance_matrix(features: &[FrequencyFeature]) -> Result<Mat<f64>> {
    let rows: Vec<&[f64]> = features.iter().map(|f| f.frequencies.as_slice()).collect();
    euclidean_distances(&rows)
}

pub fn euclidean_distances(points: &[&[f64]]) -> Result<Mat<f64>> {
    let n = points.len();
    if let Some(first) = points.first() {
        if let Some(bad) = points.iter().find(|p| p.len() != first.len()) {
            return Err(Error::dims(format!("feature of length {} vs {}", bad.len(), first.len())));
        }
    }
    let mut d = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = points[i].iter().zip(points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

#[derive(Clone, Debug)]
pub struct Embedding {
    /// One row per item.
    pub coordinates: Mat<f64>,
    /// Eigenvalues of the double-centered Gram matrix, largest first.
    pub gram_eigenvalues: Vec<f64>,
}

/// Classical (Torgerson) multidimensional scaling into `k` dimensions.
///
/// If fewer than `k` Gram eigenvalues are positive, the embedding uses only
/// those and a warning is logged.
pub fn classical_mds(d: MatRef<'_, f64>, k: usize) -> Result<Embedding> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::dims(format!("distance matrix is {}x{}", n, d.ncols())));
    }
    if k == 0 {
        return Err(Error::arg("k must be at least 1"));
    }
    if n == 0 {
        return Err(Error::arg("empty distance matrix"));
    }
    let sq = Mat::from_fn(n, n, |i, j| d[(i, j)] * d[(i, j)]);
    let row_mean: Vec<f64> = (0..n).map(|i| (0..n).map(|j| sq[(i, j)]).sum::<f64>() / n as f64).collect();
    let total = row_mean.iter().sum::<f64>() / n as f64;
    // B = −½ J D² J
    let b = Mat::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + total));
    let b = Mat::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]));
    let (vals, vecs) = sym_eig(b.as_ref())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.reverse();
    let gram_eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let cutoff = 1e-12 * gram_eigenvalues[0].abs().max(f64::MIN_POSITIVE);
    let positive = gram_eigenvalues.iter().filter(|&&v| v > cutoff).count();
    let used = if positive < k {
        log::warn!("only {positive} positive Gram eigenvalues; embedding in {positive} dimension(s) instead of {k}");
        positive
    } else {
        k
    };
    let coordinates = Mat::from_fn(n, used, |i, c| vecs[(i, order[c])] * gram_eigenvalues[c].sqrt());
    Ok(Embedding { coordinates, gram_eigenvalues })
}

/// Stratified fold index per sample, shuffled within each class by `seed`.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::arg(format!("need at least 2 folds, got {folds}")));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(Error::InsufficientSamples(format!(
                "class {c} has {} samples for {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            out[i] = pos % folds;
        }
    }
    Ok(out)
}

fn vote(neighbors: &[(f64, usize)], labels: &[usize]) -> usize {
    let mut counts: Vec<(usize, usize, f64)> = Vec::new();
    for &(dist, i) in neighbors {
        match counts.iter_mut().find(|(l, _, _)| *l == labels[i]) {
            Some(entry) => entry.1 += 1,
            None => counts.push((labels[i], 1, dist)),
        }
    }
    let top = counts.iter().map(|c| c.1).max().unwrap_or(0);
    counts
        .iter()
        .filter(|c| c.1 == top)
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .map(|c| c.0)
        .expect("at least one neighbor")
}

/// Mean `folds`-fold cross-validated k-NN error on a precomputed distance matrix.
pub fn knn_cv_distances(
    d: MatRef<'_, f64>,
    labels: &[usize],
    k_neighbors: usize,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let n = labels.len();
    if d.nrows() != n || d.ncols() != n {
        return Err(Error::dims(format!("{}x{} distances for {n} labels", d.nrows(), d.ncols())));
    }
    if k_neighbors == 0 {
        return Err(Error::arg("k_neighbors must be at least 1"));
    }
    let fold_of = stratified_folds(labels, folds, seed)?;
    let mut total = 0.0;
    for f in 0..folds {
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let mut wrong = 0;
        for &i in &test {
            let mut cand: Vec<(f64, usize)> = train.iter().map(|&j| (d[(i, j)], j)).collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k_neighbors);
            if vote(&cand, labels) != labels[i] {
                wrong += 1;
            }
        }
        total += wrong as f64 / test.len() as f64;
    }
    Ok(total / folds as f64)
}

/// Mean cross-validated k-NN error with Euclidean distances between features.
pub fn knn_cv(
    features: &[FrequencyFeature],
    labels: &[usize],
    k_neighbors: usize,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if features.len() != labels.len() {
        return Err(Error::dims(format!("{} features for {} labels", features.len(), labels.len())));
    }
    let d = distance_matrix(features)?;
    knn_cv_distances(d.as_ref(), labels, k_neighbors, folds, seed)
}
