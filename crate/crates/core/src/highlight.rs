//! Intent highlighting: cosine-distance k-means over function embeddings.
//!
//! A function's distance to its nearest centroid is read as intent strength
//! (common library code clusters tightly; rare, specific code sits far out).
//! Rows whose distance reaches the threshold are scaled up before
//! classification.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::embed::{cosine_distance, Embedding, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::extract::FunctionSnippet;
use crate::hash::collapse_ws;
use crate::rng::SplitMix64;

/// Fraction of sampled contracts containing each (whitespace-collapsed)
/// function text.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    pub fractions: HashMap<String, f64>,
    pub sample_size: usize,
}

impl FrequencyTable {
    /// Texts ordered by fraction descending; ties break lexicographically so
    /// the ordering is deterministic.
    pub fn top(&self, k: usize) -> Vec<(String, f64)> {
        let mut entries: Vec<(String, f64)> = self
            .fractions
            .iter()
            .map(|(t, &f)| (t.clone(), f))
            .collect();
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        entries.truncate(k);
        entries
    }
}

/// Per-contract occurrence frequency of each function text. A text counts at
/// most once per contract.
pub fn function_frequency(contracts: &[Vec<FunctionSnippet>]) -> Result<FrequencyTable> {
    if contracts.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for functions in contracts {
        let texts: BTreeSet<String> =
            functions.iter().map(|f| collapse_ws(&f.text)).collect();
        for t in texts {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let n = contracts.len() as f64;
    Ok(FrequencyTable {
        fractions: counts
            .into_iter()
            .map(|(t, c)| (t, c as f64 / n))
            .collect(),
        sample_size: contracts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k_init: usize,
    pub max_rounds: usize,
    /// Minimum TWCV improvement to keep iterating.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k_init: 19,
            max_rounds: 80,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// Trained cosine-distance k-means model: unit centroids plus the TWCV
/// trajectory of the run that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centroids: Vec<Embedding>,
    pub k: usize,
    pub m: usize,
    pub twcv_history: Vec<f64>,
    pub config: KMeansConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightConfig {
    /// Distance threshold; rows at or beyond it are scaled.
    pub lambda: f64,
    /// Scale factor applied to strong-intent rows.
    pub mu: f64,
}

impl Default for HighlightConfig {
    fn default() -> Self {
        HighlightConfig {
            lambda: 0.75,
            mu: 2.0,
        }
    }
}

impl HighlightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "lambda must lie in [0, 2], got {}",
                self.lambda
            )));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        Ok(())
    }
}

fn unit_key(e: &Embedding) -> Vec<u64> {
    e.as_slice().iter().map(|v| v.to_bits()).collect()
}

/// Choose `k_init` pairwise-distinct unit centroids: the given seed
/// embeddings first (highest frequency first, as ordered by the caller),
/// k-means++-style draws from `points` for any remainder.
pub fn init_centroids(
    seeds: &[Embedding],
    points: &[Embedding],
    k_init: usize,
    rng_seed: u64,
) -> Result<Vec<Embedding>> {
    let mut chosen: Vec<Embedding> = Vec::with_capacity(k_init);
    let mut used: BTreeSet<Vec<u64>> = BTreeSet::new();

    for s in seeds {
        if chosen.len() == k_init {
            break;
        }
        let mut u = s.clone();
        u.normalize()?;
        if used.insert(unit_key(&u)) {
            chosen.push(u);
        }
    }

    if chosen.len() < k_init {
        let mut rng = SplitMix64::new(rng_seed);
        let mut units: Vec<Embedding> = Vec::with_capacity(points.len());
        for p in points {
            let mut u = p.clone();
            u.normalize()?;
            units.push(u);
        }
        if chosen.is_empty() && !units.is_empty() {
            let first = units[rng.below(units.len())].clone();
            used.insert(unit_key(&first));
            chosen.push(first);
        }
        while chosen.len() < k_init {
            // k-means++: sample proportionally to squared distance from the
            // nearest already-chosen centroid.
            let weights: Vec<f64> = units
                .iter()
                .map(|u| {
                    if used.contains(&unit_key(u)) {
                        return 0.0;
                    }
                    let d = chosen
                        .iter()
                        .map(|c| cosine_distance(u, c).expect("unit vectors"))
                        .fold(f64::INFINITY, f64::min);
                    d * d
                })
                .collect();
            let total: f64 = weights.iter().sum();
            let pick = if total > 0.0 {
                let mut target = rng.next_f64() * total;
                let mut idx = None;
                for (i, w) in weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    target -= w;
                    if target <= 0.0 {
                        idx = Some(i);
                        break;
                    }
                }
                idx.or_else(|| weights.iter().rposition(|w| *w > 0.0))
            } else {
                None
            };
            match pick {
                Some(i) => {
                    used.insert(unit_key(&units[i]));
                    chosen.push(units[i].clone());
                }
                None => {
                    return Err(Error::TooFewDistinct {
                        needed: k_init,
                        got: chosen.len(),
                    })
                }
            }
        }
    }
    Ok(chosen)
}

/// Train k-means under cosine distance.
///
/// Each round assigns every point to its nearest centroid, drops clusters
/// that received no points (this is how k shrinks), records the total
/// within-cluster variation, and moves each centroid to the spherical mean
/// of its members. Training stops at `max_rounds` or when TWCV improvement
/// falls below `tolerance`.
pub fn train_kmeans(
    points: &[Embedding],
    config: &KMeansConfig,
    seeds: &[Embedding],
) -> Result<KMeansModel> {
    if config.k_init < 1 || config.max_rounds < 1 {
        return Err(Error::InvalidConfig(
            "k_init and max_rounds must be at least 1".to_string(),
        ));
    }
    if points.len() < config.k_init {
        return Err(Error::TooFewPoints {
            needed: config.k_init,
            got: points.len(),
        });
    }
    let m = points[0].dim();
    for p in points {
        if p.dim() != m {
            return Err(Error::DimMismatch {
                expected: m,
                got: p.dim(),
            });
        }
    }

    // Work on unit directions; cosine distance then reduces to 1 - dot.
    let mut units: Vec<Embedding> = Vec::with_capacity(points.len());
    for p in points {
        let mut u = p.clone();
        u.normalize()?;
        units.push(u);
    }

    let mut centroids = init_centroids(seeds, points, config.k_init, config.seed)?;
    let mut twcv_history = Vec::new();
    let mut assignments = vec![0usize; units.len()];

    for _round in 0..config.max_rounds {
        // Assignment (ties break toward the lowest centroid index).
        let mut member_count = vec![0usize; centroids.len()];
        let mut twcv = 0.0;
        for (pi, u) in units.iter().enumerate() {
            let (mut best_j, mut best_d) = (0usize, f64::INFINITY);
            for (j, c) in centroids.iter().enumerate() {
                let d = 1.0 - dot(u.as_slice(), c.as_slice());
                if d < best_d {
                    best_d = d;
                    best_j = j;
                }
            }
            assignments[pi] = best_j;
            member_count[best_j] += 1;
            twcv += best_d;
        }

        // Drop empty clusters, remapping assignments.
        if member_count.contains(&0) {
            let mut remap = vec![usize::MAX; centroids.len()];
            let mut kept = Vec::with_capacity(centroids.len());
            for (j, c) in centroids.iter().enumerate() {
                if member_count[j] > 0 {
                    remap[j] = kept.len();
                    kept.push(c.clone());
                }
            }
            for a in &mut assignments {
                *a = remap[*a];
            }
            centroids = kept;
        }

        let improved = twcv_history
            .last()
            .is_none_or(|prev: &f64| prev - twcv >= config.tolerance);
        twcv_history.push(twcv);
        if !improved {
            break;
        }

        // Update: spherical mean of each cluster's unit members.
        let mut sums = vec![vec![0.0f64; m]; centroids.len()];
        for (pi, u) in units.iter().enumerate() {
            let s = &mut sums[assignments[pi]];
            for (acc, v) in s.iter_mut().zip(u.as_slice()) {
                *acc += v;
            }
        }
        for (j, sum) in sums.into_iter().enumerate() {
            let norm: f64 = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                centroids[j] =
                    Embedding::new(sum.into_iter().map(|v| v / norm).collect())?;
            }
            // A cancelling sum keeps the previous centroid.
        }
    }

    Ok(KMeansModel {
        k: centroids.len(),
        m,
        centroids,
        twcv_history,
        config: config.clone(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nearest centroid and its cosine distance — the intent strength of `f`.
/// The farther the distance, the stronger the intent.
pub fn intent_strength(model: &KMeansModel, f: &Embedding) -> Result<(usize, f64)> {
    if model.centroids.is_empty() {
        return Err(Error::EmptyModel);
    }
    let mut best = (0usize, f64::INFINITY);
    for (j, c) in model.centroids.iter().enumerate() {
        let d = cosine_distance(f, c)?;
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(best)
}

/// Per-row strength metadata emitted alongside the highlighted matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RowStrength {
    pub index: usize,
    pub cluster: usize,
    pub distance: f64,
    pub scaled: bool,
}

/// The highlighted matrix plus its per-row strength records.
#[derive(Debug, Clone)]
pub struct Highlighted {
    pub matrix: EmbeddingMatrix,
    pub strengths: Vec<RowStrength>,
}

/// Scale every row whose within-cluster distance reaches `lambda` by `mu`
/// (inclusive threshold); all other rows pass through bit-identical.
pub fn highlight(
    model: &KMeansModel,
    x: &EmbeddingMatrix,
    config: &HighlightConfig,
) -> Result<Highlighted> {
    config.validate()?;
    if x.m() != model.m {
        return Err(Error::DimMismatch {
            expected: model.m,
            got: x.m(),
        });
    }
    let mut rows = Vec::with_capacity(x.n());
    let mut strengths = Vec::with_capacity(x.n());
    for (i, row) in x.rows().iter().enumerate() {
        let (cluster, distance) = intent_strength(model, row)?;
        let scaled = distance >= config.lambda;
        rows.push(if scaled {
            row.scaled(config.mu)
        } else {
            row.clone()
        });
        strengths.push(RowStrength {
            index: i,
            cluster,
            distance,
            scaled,
        });
    }
    Ok(Highlighted {
        matrix: EmbeddingMatrix::new(rows, x.m())?,
        strengths,
    })
}
