//! Hidden-space clustering and majority-label concept naming.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Label, LabelSource, TraceDataset};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::{rng, UNCERTAIN};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub usize);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// k centroids in hidden space; points belong to their nearest centroid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub centroids: Matrix,
    pub inertia: f64,
    pub seed: u64,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    /// Nearest centroid by Euclidean distance, ties to the lowest index.
    pub fn assign(&self, h: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in self.centroids.iter_rows().enumerate() {
            let d = squared_distance(h, c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Stop once no centroid moves further than this (Euclidean).
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansFit {
    pub clustering: Clustering,
    pub assignments: Vec<usize>,
    /// Inertia after every assignment step, final assignment last.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn plus_plus_seeding(points: &Matrix, k: usize, rng: &mut rng::Rng) -> Matrix {
    let n = points.rows();
    let mut centroids = Matrix::with_cols(points.cols());
    let first = rng.random_range(0..n);
    centroids.push_row(points.row(first)).expect("same width");
    let mut nearest: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(first)))
        .collect();
    while centroids.rows() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            // guard against rounding landing on an already chosen point
            if nearest[chosen] == 0.0 {
                chosen = nearest
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc })
                    .0;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        centroids.push_row(&c).expect("same width");
        for (d, p) in nearest.iter_mut().zip(points.iter_rows()) {
            *d = d.min(squared_distance(p, &c));
        }
    }
    centroids
}

fn assign_all(points: &Matrix, clustering: &Clustering, assignments: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (a, p) in assignments.iter_mut().zip(points.iter_rows()) {
        *a = clustering.assign(p);
        inertia += squared_distance(p, clustering.centroids.row(*a));
    }
    inertia
}

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded
/// to the point farthest from its own centroid.
pub fn kmeans(points: &Matrix, k: usize, seed: u64, params: KMeansParams) -> Result<KMeansFit> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::DegenerateInput { points: n, k });
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("clustering input"));
    }
    let m = points.cols();
    let mut rng = rng::seeded(seed);
    let mut clustering = Clustering {
        centroids: plus_plus_seeding(points, k, &mut rng),
        inertia: 0.0,
        seed,
    };
    let mut assignments = vec![0usize; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        history.push(assign_all(points, &clustering, &mut assignments));

        let mut sums = Matrix::zeros(k, m);
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points.iter_rows()) {
            counts[a] += 1;
            for (s, v) in sums.row_mut(a).iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut updated = sums;
        let mut reseeded: Vec<usize> = Vec::new();
        for j in 0..k {
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                updated.row_mut(j).iter_mut().for_each(|v| *v *= inv);
            } else {
                let far = (0..n)
                    .filter(|i| !reseeded.contains(i))
                    .map(|i| (i, squared_distance(points.row(i), clustering.centroids.row(assignments[i]))))
                    .fold((0, -1.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc })
                    .0;
                reseeded.push(far);
                updated.row_mut(j).copy_from_slice(points.row(far));
            }
        }
        let shift = (0..k)
            .map(|j| squared_distance(updated.row(j), clustering.centroids.row(j)))
            .fold(0.0, f64::max);
        clustering.centroids = updated;
        if libm::sqrt(shift) < params.tol && reseeded.is_empty() {
            break;
        }
    }
    let inertia = assign_all(points, &clustering, &mut assignments);
    history.push(inertia);
    clustering.inertia = inertia;
    Ok(KMeansFit {
        clustering,
        assignments,
        inertia_history: history,
        iterations,
    })
}

/// Most frequent label (ties toward the smaller label) and its ratio.
pub fn majority_label(labels: &[Label]) -> Result<(Label, f64)> {
    if labels.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let mut counts = [0usize; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    let majority = if counts[1] > counts[0] {
        Label::POSITIVE
    } else {
        Label::NEGATIVE
    };
    Ok((majority, counts[majority.index()] as f64 / labels.len() as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub cluster: usize,
    pub majority_label: Label,
    pub majority_ratio: f64,
    /// Display name, suffixed (`occupied_1`) when several clusters share a base name.
    pub name: String,
    /// Class name or `uncertain`, before disambiguation.
    pub base_name: String,
    /// Number of training points in the cluster.
    pub size: usize,
}

impl Concept {
    pub fn is_uncertain(&self) -> bool {
        self.base_name == UNCERTAIN
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptSet {
    pub theta: f64,
    pub concepts: Vec<Concept>,
    pub class_names: BTreeMap<Label, String>,
}

impl ConceptSet {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn get(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.get(id.0)
    }

    pub fn name(&self, id: ConceptId) -> &str {
        self.get(id).map_or("?", |c| c.name.as_str())
    }

    /// Looks a concept up by display name, then by base name if that is unique.
    pub fn find(&self, name: &str) -> Option<ConceptId> {
        if let Some(c) = self.concepts.iter().find(|c| c.name == name) {
            return Some(c.id);
        }
        let mut matches = self.concepts.iter().filter(|c| c.base_name == name);
        match (matches.next(), matches.next()) {
            (Some(c), None) => Some(c.id),
            _ => None,
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.concepts.iter().map(|c| c.id)
    }
}

/// Names each cluster by its majority label when its ratio exceeds `theta`,
/// `uncertain` otherwise. Empty clusters are named `uncertain` with ratio 0.
pub fn name_concepts(
    assignments: &[usize],
    k: usize,
    labels: &[Label],
    theta: f64,
    class_names: &BTreeMap<Label, String>,
) -> Result<ConceptSet> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1), got {theta}")));
    }
    if assignments.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} clustered points but {} labels",
            assignments.len(),
            labels.len()
        )));
    }
    let mut members: Vec<Vec<Label>> = vec![Vec::new(); k];
    for (&a, &l) in assignments.iter().zip(labels) {
        if a >= k {
            return Err(Error::InvalidArgument(format!("assignment {a} out of range for k={k}")));
        }
        members[a].push(l);
    }
    let mut concepts: Vec<Concept> = members
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let (majority_label, majority_ratio) = majority_label(m).unwrap_or((Label::NEGATIVE, 0.0));
            let base_name = if majority_ratio > theta {
                class_names
                    .get(&majority_label)
                    .cloned()
                    .unwrap_or_else(|| majority_label.to_string())
            } else {
                UNCERTAIN.to_string()
            };
            Concept {
                id: ConceptId(j),
                cluster: j,
                majority_label,
                majority_ratio,
                name: base_name.clone(),
                base_name,
                size: m.len(),
            }
        })
        .collect();
    disambiguate(&mut concepts);
    Ok(ConceptSet {
        theta,
        concepts,
        class_names: class_names.clone(),
    })
}

fn disambiguate(concepts: &mut [Concept]) {
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    for c in concepts.iter() {
        *totals.entry(c.base_name.clone()).or_default() += 1;
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for c in concepts.iter_mut() {
        if totals[&c.base_name] > 1 {
            let n = seen.entry(c.base_name.clone()).or_default();
            *n += 1;
            c.name = format!("{}_{}", c.base_name, n);
        }
    }
}

pub fn assign_concept(concepts: &ConceptSet, clustering: &Clustering, h: &[f64]) -> ConceptId {
    debug_assert_eq!(concepts.len(), clustering.k());
    ConceptId(clustering.assign(h))
}

/// Hidden states `h_1..h_T` of every sequence with their per-timestep labels.
pub fn hidden_points(ds: &TraceDataset, source: LabelSource) -> Result<(Matrix, Vec<Label>)> {
    let mut points = Matrix::with_cols(ds.hidden_width());
    let mut labels = Vec::with_capacity(ds.total_timesteps());
    for seq in &ds.sequences {
        let seq_labels = seq.labels(source).ok_or(Error::MissingLabels("true"))?;
        for t in 1..=seq.len() {
            points.push_row(seq.hidden.row(t))?;
        }
        labels.extend_from_slice(seq_labels);
    }
    Ok((points, labels))
}

/// Clusters the dataset's hidden states and names the clusters.
pub fn extract_concepts(
    ds: &TraceDataset,
    k: usize,
    theta: f64,
    seed: u64,
    params: KMeansParams,
    source: LabelSource,
) -> Result<(ConceptSet, KMeansFit)> {
    let (points, labels) = hidden_points(ds, source)?;
    let fit = kmeans(&points, k, seed, params)?;
    let concepts = name_concepts(&fit.assignments, k, &labels, theta, &ds.schema.class_names)?;
    Ok((concepts, fit))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularityRow {
    pub k: usize,
    pub names: Vec<String>,
    pub ratios: Vec<f64>,
    pub has_duplicates: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularityReport {
    pub rows: Vec<GranularityRow>,
    /// Smallest k whose concepts repeat a base name.
    pub first_duplicate_k: Option<usize>,
}

impl GranularityReport {
    /// Largest k below the first repetition of names (or the largest k
    /// swept when names never repeat).
    pub fn most_granular_distinct(&self) -> Option<usize> {
        self.rows
            .iter()
            .filter(|r| !r.has_duplicates && self.first_duplicate_k.is_none_or(|d| r.k < d))
            .map(|r| r.k)
            .max()
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>3}  concepts (majority-label ratio)", "k");
        for row in &self.rows {
            let cells: Vec<String> = row
                .names
                .iter()
                .zip(&row.ratios)
                .map(|(n, r)| format!("{n} ({r:.2})"))
                .collect();
            let marker = if Some(row.k) == self.first_duplicate_k { "  *" } else { "" };
            let _ = writeln!(out, "{:>3}  {}{}", row.k, cells.join(", "), marker);
        }
        if let Some(k) = self.first_duplicate_k {
            let _ = writeln!(out, "* names first repeat at k={k}");
        }
        out
    }
}

pub fn sweep_granularity(
    ds: &TraceDataset,
    k_range: &[usize],
    theta: f64,
    seed: u64,
    params: KMeansParams,
    source: LabelSource,
) -> Result<GranularityReport> {
    if k_range.is_empty() {
        return Err(Error::InvalidArgument("empty k range".into()));
    }
    let (points, labels) = hidden_points(ds, source)?;
    let mut rows = Vec::with_capacity(k_range.len());
    for &k in k_range {
        let fit = kmeans(&points, k, seed, params)?;
        let cs = name_concepts(&fit.assignments, k, &labels, theta, &ds.schema.class_names)?;
        let bases: Vec<&str> = cs.concepts.iter().map(|c| c.base_name.as_str()).collect();
        let has_duplicates = bases.iter().enumerate().any(|(i, b)| bases[..i].contains(b));
        rows.push(GranularityRow {
            k,
            names: cs.concepts.iter().map(|c| c.name.clone()).collect(),
            ratios: cs.concepts.iter().map(|c| c.majority_ratio).collect(),
            has_duplicates,
        });
    }
    let first_duplicate_k = rows.iter().filter(|r| r.has_duplicates).map(|r| r.k).min();
    Ok(GranularityReport {
        rows,
        first_duplicate_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;
    use rand::SeedableRng;

    fn class_names() -> BTreeMap<Label, String> {
        FeatureSchema::occupancy().class_names
    }

    fn l(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&x| Label::new(x).unwrap()).collect()
    }

    #[test]
    fn majority_label_cases() {
        assert_eq!(majority_label(&l(&[1, 1, 0])).unwrap(), (Label::POSITIVE, 2.0 / 3.0));
        assert_eq!(majority_label(&l(&[0, 0, 0, 0])).unwrap(), (Label::NEGATIVE, 1.0));
        assert_eq!(majority_label(&l(&[0, 1])).unwrap(), (Label::NEGATIVE, 0.5));
        assert_eq!(majority_label(&[]), Err(Error::EmptyCluster));
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [2.0, 0.0], [4.0, 3.0]]).unwrap();
        let fit = kmeans(&pts, 1, 3, KMeansParams::default()).unwrap();
        assert!((fit.clustering.centroids.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((fit.clustering.centroids.get(0, 1) - 1.0).abs() < 1e-12);
        // sum of squared deviations: x: 4+0+4, y: 1+1+4
        assert!((fit.clustering.inertia - 14.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_k_equals_n() {
        let pts = Matrix::from_rows(&[[0.0], [1.0], [5.0], [9.0]]).unwrap();
        let fit = kmeans(&pts, 4, 1, KMeansParams::default()).unwrap();
        assert_eq!(fit.clustering.inertia, 0.0);
        let mut a = fit.assignments.clone();
        a.sort_unstable();
        assert_eq!(a, vec![0, 1, 2, 3]);
    }

    #[test]
    fn kmeans_rejects_too_few_points() {
        let pts = Matrix::from_rows(&[[0.0]]).unwrap();
        assert_eq!(
            kmeans(&pts, 2, 0, KMeansParams::default()).unwrap_err(),
            Error::DegenerateInput { points: 1, k: 2 }
        );
    }

    #[test]
    fn kmeans_separates_two_clouds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut rows = Vec::new();
        for i in 0..200 {
            let base = if i % 2 == 0 { 0.0 } else { 10.0 };
            rows.push([
                base + rng.random_range(-0.01..0.01),
                base + rng.random_range(-0.01..0.01),
            ]);
        }
        let pts = Matrix::from_rows(&rows).unwrap();
        let fit = kmeans(&pts, 2, 4, KMeansParams::default()).unwrap();
        let mut centers = fit.clustering.centroids.to_rows();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        // brute check against the cloud means
        for (c, base) in centers.iter().zip([0.0, 10.0]) {
            let members: Vec<&[f64; 2]> = rows.iter().filter(|r| (r[0] - base).abs() < 1.0).collect();
            let mx = members.iter().map(|r| r[0]).sum::<f64>() / members.len() as f64;
            let my = members.iter().map(|r| r[1]).sum::<f64>() / members.len() as f64;
            assert!((c[0] - mx).abs() < 0.05 && (c[1] - my).abs() < 0.05);
        }
    }

    #[test]
    fn duplicate_points_do_not_break_empty_cluster_repair() {
        let pts = Matrix::from_rows(&[[1.0], [1.0], [1.0], [2.0]]).unwrap();
        let fit = kmeans(&pts, 3, 0, KMeansParams::default()).unwrap();
        assert_eq!(fit.clustering.k(), 3);
        assert_eq!(fit.clustering.inertia, 0.0);
    }

    #[test]
    fn single_mixed_cluster_is_uncertain() {
        let labels = l(&[0, 1, 0, 1, 0, 1]);
        let cs = name_concepts(&[0; 6], 1, &labels, 0.8, &class_names()).unwrap();
        assert_eq!(cs.concepts[0].name, UNCERTAIN);
    }

    #[test]
    fn pure_clusters_take_class_names() {
        let cs = name_concepts(&[0, 0, 1, 1], 2, &l(&[1, 1, 0, 0]), 0.8, &class_names()).unwrap();
        assert_eq!(cs.concepts[0].name, "occupied");
        assert_eq!(cs.concepts[1].name, "empty");
    }

    #[test]
    fn ratio_below_theta_is_uncertain() {
        let cs = name_concepts(&[0; 4], 1, &l(&[1, 1, 1, 0]), 0.8, &class_names()).unwrap();
        assert_eq!(cs.concepts[0].majority_ratio, 0.75);
        assert_eq!(cs.concepts[0].name, UNCERTAIN);
        // strict inequality: ratio equal to theta is still uncertain
        let cs = name_concepts(&[0; 4], 1, &l(&[1, 1, 1, 0]), 0.75, &class_names()).unwrap();
        assert_eq!(cs.concepts[0].name, UNCERTAIN);
    }

    #[test]
    fn repeated_names_get_suffixes() {
        let cs = name_concepts(&[0, 1, 2], 3, &l(&[1, 1, 0]), 0.8, &class_names()).unwrap();
        let names: Vec<&str> = cs.concepts.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["occupied_1", "occupied_2", "empty"]);
        assert_eq!(cs.find("empty"), Some(ConceptId(2)));
        assert_eq!(cs.find("occupied"), None);
        assert_eq!(cs.find("occupied_2"), Some(ConceptId(1)));
    }

    #[test]
    fn name_concepts_validates_inputs() {
        assert!(name_concepts(&[0], 1, &[], 0.8, &class_names()).is_err());
        assert!(name_concepts(&[0], 1, &l(&[0]), 1.2, &class_names()).is_err());
    }

    #[test]
    fn assignment_tie_goes_to_lowest_index() {
        let cl = Clustering {
            centroids: Matrix::from_rows(&[[-1.0], [5.0], [1.0]]).unwrap(),
            inertia: 0.0,
            seed: 0,
        };
        assert_eq!(cl.assign(&[0.0]), 0);
        assert_eq!(cl.assign(&[5.0]), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_points() -> impl Strategy<Value = Matrix> {
            (1usize..4).prop_flat_map(|m| {
                prop::collection::vec(prop::collection::vec(-50.0f64..50.0, m), 3..60)
                    .prop_map(|rows| Matrix::from_rows(&rows).unwrap())
            })
        }

        proptest! {
            #[test]
            fn inertia_never_increases(pts in arb_points(), k in 1usize..4, seed in any::<u64>()) {
                prop_assume!(k <= pts.rows());
                let fit = kmeans(&pts, k, seed, KMeansParams::default()).unwrap();
                for w in fit.inertia_history.windows(2) {
                    prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9, "{:?}", fit.inertia_history);
                }
                // stored assignments are reproducible from the centroids
                for (i, p) in pts.iter_rows().enumerate() {
                    prop_assert_eq!(fit.clustering.assign(p), fit.assignments[i]);
                }
                for j in 0..k {
                    prop_assert_eq!(fit.clustering.assign(fit.clustering.centroids.row(j)), j);
                }
                prop_assert_eq!(&fit, &kmeans(&pts, k, seed, KMeansParams::default()).unwrap());
            }

            #[test]
            fn assign_matches_brute_force(pts in arb_points(), h in prop::collection::vec(-60.0f64..60.0, 3)) {
                let m = pts.cols();
                let cl = Clustering { centroids: pts.clone(), inertia: 0.0, seed: 0 };
                let h = &h[..m];
                let dists: Vec<f64> = pts.iter_rows()
                    .map(|c| c.iter().zip(h).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                    .collect();
                let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                let expected = dists.iter().position(|&d| d == min).unwrap();
                prop_assert_eq!(cl.assign(h), expected);
            }

            #[test]
            fn binary_majority_ratio_at_least_half(labels in prop::collection::vec(0u8..2, 1..50)) {
                let labels = l(&labels);
                let (_, r) = majority_label(&labels).unwrap();
                prop_assert!((0.5..=1.0).contains(&r));
            }

            #[test]
            fn theta_extremes(assign in prop::collection::vec(0usize..4, 1..60), seed in any::<u64>()) {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let labels: Vec<Label> = assign.iter().map(|_| Label::from_bool(rng.random())).collect();
                let cs = name_concepts(&assign, 4, &labels, 0.999_999, &class_names()).unwrap();
                for c in &cs.concepts {
                    if c.majority_ratio < 1.0 {
                        prop_assert!(c.is_uncertain());
                    }
                }
                let min_ratio = cs.concepts.iter().filter(|c| c.size > 0)
                    .map(|c| c.majority_ratio).fold(f64::INFINITY, f64::min);
                if min_ratio > 0.5 {
                    let just_below = min_ratio - 1e-9;
                    let cs = name_concepts(&assign, 4, &labels, just_below, &class_names()).unwrap();
                    prop_assert!(cs.concepts.iter().filter(|c| c.size > 0).all(|c| !c.is_uncertain()));
                }
            }
        }
    }
}
