//! Color transfer by optimal transport between color-histogram circuits.

use std::collections::BTreeMap;

use log::warn;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ImageBuffer;
use crate::circuit::{Circuit, CircuitBuilder};
use crate::compat::VariableBijection;
use crate::coupling::{couple, geodesic_point};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::leaf::LeafDistribution;
use crate::learn::{fit_wm, WMConfig};
use crate::par::*;
use crate::rng::SeedTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorTransferConfig {
    /// Mixture components per color circuit.
    pub components: usize,
    /// Position along the geodesic: 0 keeps the source, 1 reaches the target.
    pub t: f64,
    /// Pixels used for fitting each circuit, subsampled with the seed.
    pub max_pixels: usize,
    pub seed: u64,
    pub wm: WMConfig,
}

impl Default for ColorTransferConfig {
    fn default() -> Self {
        ColorTransferConfig { components: 10, t: 1.0, max_pixels: 50_000, seed: 0, wm: WMConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorTransferReport {
    /// `CW_2^2` between the fitted color circuits.
    pub cw: f64,
    pub source_ecw: f64,
    pub target_ecw: f64,
    pub unique_colors: usize,
    /// Colors too unlikely under the source circuit to condition on; they
    /// are left unchanged.
    pub untransported_colors: usize,
}

/// Pixels scaled to `[0, 1]³`, at most `cap` of them, chosen with `tree`.
fn color_samples(img: &ImageBuffer, cap: usize, tree: &SeedTree) -> Result<Dataset> {
    let n = img.num_pixels();
    let mut picks: Vec<usize> = if n > cap {
        index::sample(&mut tree.rng(), n, cap).into_vec()
    } else {
        (0..n).collect()
    };
    picks.sort_unstable();
    let values = picks.iter().flat_map(|&i| img.pixel(i).map(|c| c as f64 / 255.0)).collect();
    Dataset::new(3, values)
}

/// Root sum over `k` products of three Gaussian leaves, seeded k-means++
/// style from the data with per-channel spread as the initial sigma.
fn initial_circuit(data: &Dataset, k: usize, tree: &SeedTree, sigma_floor: f64) -> Result<Circuit> {
    let mut rng = tree.rng();
    let n = data.len();
    let mut centers: Vec<&[f64]> = vec![data.row(rng.random_range(0..n))];
    while centers.len() < k {
        let d2: Vec<f64> = data
            .rows()
            .map(|x| {
                centers
                    .iter()
                    .map(|c| c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            d2.iter().position(|d| {
                u -= d;
                u < 0.0
            })
            .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.push(data.row(pick));
    }
    let sigma: Vec<f64> = (0..3)
        .map(|ch| {
            let mean = data.rows().map(|x| x[ch]).sum::<f64>() / n as f64;
            let var = data.rows().map(|x| (x[ch] - mean).powi(2)).sum::<f64>() / n as f64;
            var.sqrt().max(sigma_floor)
        })
        .collect();
    let mut b = CircuitBuilder::new();
    let products = centers
        .iter()
        .map(|c| {
            let leaves = (0..3).map(|ch| b.input(ch, LeafDistribution::Gaussian { mu: c[ch], sigma: sigma[ch] })).collect();
            b.product(leaves)
        })
        .collect::<Vec<_>>();
    if k == 1 {
        return b.finish(3);
    }
    b.sum(products, vec![1.0 / k as f64; k]);
    b.finish(3)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Moves every source color along the geodesic toward its transported
/// color under the optimal coupling between circuits fit to both images.
pub fn color_transfer(
    src: &ImageBuffer,
    dst: &ImageBuffer,
    cfg: &ColorTransferConfig,
) -> Result<(ImageBuffer, ColorTransferReport)> {
    if !(0.0..=1.0).contains(&cfg.t) {
        return Err(Error::InvalidCircuit(format!("geodesic position {} outside [0, 1]", cfg.t)));
    }
    if cfg.components == 0 || src.num_pixels() == 0 || dst.num_pixels() == 0 {
        return Err(Error::InvalidCircuit("color transfer needs pixels and at least one component".into()));
    }
    let tree = SeedTree::new(cfg.seed);
    let fit = |img: &ImageBuffer, label: &str| -> Result<(Circuit, f64)> {
        let branch = tree.child(label);
        let data = color_samples(img, cfg.max_pixels, &branch.child("pixels"))?;
        let init = initial_circuit(&data, cfg.components, &branch.child("init"), cfg.wm.sigma_floor)?;
        let wm = WMConfig { order: 2.0, seed: branch.child("wm").seed(), ..cfg.wm.clone() };
        let result = fit_wm(&init, &data, &wm)?;
        let ecw = result.trace.last().copied().unwrap_or(result.initial_ecw);
        Ok((result.circuit, ecw))
    };
    let (p, source_ecw) = fit(src, "source")?;
    let (q, target_ecw) = fit(dst, "target")?;
    let cw = couple(&p, &q, &VariableBijection::identity(3), 2.0)?;

    let mut unique: BTreeMap<[u8; 3], usize> = BTreeMap::new();
    for i in 0..src.num_pixels() {
        let next = unique.len();
        unique.entry(src.pixel(i)).or_insert(next);
    }
    let mut colors = vec![[0u8; 3]; unique.len()];
    for (c, i) in &unique {
        colors[*i] = *c;
    }
    let mapped = colors
        .par_iter()
        .map(|c| {
            let x: Vec<f64> = c.iter().map(|v| *v as f64 / 255.0).collect();
            match cw.coupling.transport_point(&x) {
                Ok(y) => {
                    let z = geodesic_point(&x, &y, cfg.t);
                    Ok(Some([quantize(z[0]), quantize(z[1]), quantize(z[2])]))
                }
                Err(Error::ZeroEvidence) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let untransported = mapped.iter().filter(|m| m.is_none()).count();
    if untransported > 0 {
        warn!("{untransported} colors have negligible source likelihood and were left unchanged");
    }
    let pixels = (0..src.num_pixels())
        .flat_map(|i| {
            let c = src.pixel(i);
            mapped[unique[&c]].unwrap_or(c)
        })
        .collect();
    let report = ColorTransferReport {
        cw: cw.distance_p_power,
        source_ecw,
        target_ecw,
        unique_colors: colors.len(),
        untransported_colors: untransported,
    };
    Ok((ImageBuffer::new(src.width(), src.height(), pixels)?, report))
}
