use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal-axis projection for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    pub mean: Array1<f64>,
    /// One orthonormal component per row; zero rows past the data rank.
    pub components: Array2<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub coordinates: Array2<f64>,
}

/// Project `x` onto its top `out_dim` principal axes.
pub fn pca_project(x: &Array2<f64>, out_dim: usize) -> Result<PcaProjection> {
    let (n, d) = x.dim();
    if out_dim == 0 || out_dim > d {
        return Err(Error::Config(format!(
            "out_dim must lie in [1, {d}], got {out_dim}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("PCA of empty input".into()));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centred = x - &mean;
    let denom = (n.max(2) - 1) as f64;
    let cov = centred.t().dot(&centred) / denom;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let top = eig.eigenvalues[order[0]].max(0.0);
    let cutoff = top * 1e-12;
    let kept: Vec<f64> = order
        .iter()
        .map(|&k| {
            let v = eig.eigenvalues[k];
            if v > cutoff && v > 0.0 {
                v
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = kept.iter().sum();
    let rank = kept.iter().filter(|&&v| v > 0.0).count();
    if out_dim > rank {
        warn!("data rank {rank} is below the requested {out_dim} components; padding with zeros");
    }

    let mut components = Array2::zeros((out_dim, d));
    for (c, &k) in order.iter().take(out_dim).enumerate() {
        if kept[c] == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        // Sign convention: largest-magnitude loading positive.
        let pivot = (0..d)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[[c, j]] = sign * v[j];
        }
    }
    let explained_variance_ratio = kept
        .iter()
        .take(out_dim)
        .map(|&v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    let coordinates = centred.dot(&components.t());
    Ok(PcaProjection {
        mean,
        components,
        explained_variance_ratio,
        coordinates,
    })
}

/// Write `sample_id,pc1..pcK,label_pred,label_true` rows.
pub fn write_pca_csv(
    path: &Path,
    sample_ids: &[usize],
    coordinates: &Array2<f64>,
    predicted: &[u8],
    truth: &[u8],
) -> Result<()> {
    let n = coordinates.nrows();
    if sample_ids.len() != n || predicted.len() != n || truth.len() != n {
        return Err(Error::shape(format!("{n} rows"), "mismatched columns"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut header = vec!["sample_id".to_string()];
    header.extend((1..=coordinates.ncols()).map(|k| format!("pc{k}")));
    header.extend(["label_pred".to_string(), "label_true".to_string()]);
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (i, row) in coordinates.rows().into_iter().enumerate() {
        let mut rec = vec![sample_ids[i].to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        rec.push(predicted[i].to_string());
        rec.push(truth[i].to_string());
        w.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    fn gaussian(n: usize, scales: &[f64], seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Normal::new(0.0, 1.0).unwrap();
        Array2::from_shape_fn((n, scales.len()), |(_, j)| scales[j] * z.sample(&mut rng))
    }

    #[test]
    fn full_rank_projection_preserves_distances() {
        let x = gaussian(30, &[1.0, 2.0, 0.5], 1);
        let p = pca_project(&x, 3).unwrap();
        let c = &p.coordinates;
        for i in 0..30 {
            for j in 0..30 {
                let a = (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum().sqrt();
                let b = (&c.row(i) - &c.row(j)).mapv(|v| v * v).sum().sqrt();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn points_on_a_line_have_one_component() {
        let x = Array2::from_shape_fn((20, 4), |(i, j)| i as f64 * (j as f64 + 1.0));
        let p = pca_project(&x, 3).unwrap();
        assert_eq!(p.explained_variance_ratio[0], 1.0);
        assert_eq!(
            p.components.row(2).iter().map(|v| v.abs()).sum::<f64>(),
            0.0
        );
    }

    #[test]
    fn dominant_axis_is_found() {
        let mut scales = vec![1.0; 8];
        scales[5] = 10.0;
        let x = gaussian(2000, &scales, 2);
        let p = pca_project(&x, 3).unwrap();
        assert!(p.components[[0, 5]].abs() > 0.99);
    }

    #[test]
    fn components_orthonormal_and_ratios_bounded() {
        let x = gaussian(100, &[3.0, 1.0, 2.0, 0.5, 1.5, 1.0, 0.2, 4.0], 3);
        let p = pca_project(&x, 3).unwrap();
        let g = p.components.dot(&p.components.t());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - want).abs() < 1e-9);
            }
        }
        assert!(p.explained_variance_ratio.iter().sum::<f64>() <= 1.0 + 1e-9);
    }

    #[test]
    fn too_many_components_is_an_error() {
        let x = gaussian(10, &[1.0, 1.0], 4);
        assert!(matches!(pca_project(&x, 3), Err(Error::Config(_))));
    }
}
