//! Scalogram datasets, stratified splitting, a nearest-centroid classifier and the
//! sliding scale-window sweep.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cwt::{CoefficientMatrix, CwtPlan, ScaleSet};
use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;
use crate::scalogram::{render, RenderOptions};
use crate::trace::{
    segment, synthesize_trace, AcquisitionMeta, CycleLabel, HarmonicTemplates, LabeledWindow,
    ProgramLoop, TraceModelParams, LOOP_RESTART,
};
use crate::wavelets::WaveletSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// One class per instruction.
    #[default]
    Mnemonic,
    /// One class per (instruction, cycle) pair.
    MnemonicCycle,
}

impl LabelMode {
    pub fn class_of(self, label: &CycleLabel) -> String {
        match self {
            LabelMode::Mnemonic => label.mnemonic.clone(),
            LabelMode::MnemonicCycle => label.to_string(),
        }
    }
}

/// Which windows enter a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFilter {
    pub exclude: Vec<String>,
    pub first_cycle_only: bool,
    /// Keep at most this many windows per class, in order of appearance.
    pub per_class: Option<usize>,
}

impl Default for WindowFilter {
    fn default() -> Self {
        Self {
            exclude: vec![LOOP_RESTART.to_string()],
            first_cycle_only: false,
            per_class: None,
        }
    }
}

impl WindowFilter {
    pub fn apply<T: Scalar>(
        &self,
        windows: &[LabeledWindow<T>],
        mode: LabelMode,
    ) -> Vec<LabeledWindow<T>> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        windows
            .iter()
            .filter(|w| !self.exclude.contains(&w.label.mnemonic))
            .filter(|w| !self.first_cycle_only || w.label.cycle == 0)
            .filter(|w| {
                let c = counts.entry(mode.class_of(&w.label)).or_default();
                *c += 1;
                self.per_class.is_none_or(|limit| *c <= limit)
            })
            .cloned()
            .collect()
    }
}

/// Flattened scalogram features with their class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    features: Vec<Vec<T>>,
    labels: Vec<String>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Vec<Vec<T>>, labels: Vec<String>) -> Result<Self> {
        ensure!(!features.is_empty(), "dataset is empty");
        ensure!(
            features.len() == labels.len(),
            "feature and label counts differ"
        );
        let len = features[0].len();
        ensure!(len > 0, "empty feature vectors");
        if let Some(i) = features.iter().position(|f| f.len() != len) {
            return Err(Error::invalid(format!(
                "item {i} has {} features, expected {len}",
                features[i].len()
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_len(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<T>] {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn class_set(&self) -> BTreeSet<&str> {
        self.labels.iter().map(String::as_str).collect()
    }

    pub fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for l in &self.labels {
            *m.entry(l.as_str()).or_default() += 1;
        }
        m
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            idx.iter().map(|&i| self.features[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i].clone()).collect(),
        )
    }
}

/// How each window becomes a feature vector.
#[derive(Clone, Debug)]
pub struct FeatureSpec {
    pub wavelet: WaveletSpec,
    pub scales: ScaleSet,
    pub render: RenderOptions,
}

fn features_of<T: Scalar>(c: &CoefficientMatrix<T>, opts: &RenderOptions) -> Result<Vec<T>> {
    Ok(render(c, opts)?.features())
}

/// CWT -> normalize -> colormap -> resize -> flatten, for each window.
pub fn build_dataset<T: Scalar>(
    windows: &[LabeledWindow<T>],
    spec: &FeatureSpec,
    mode: LabelMode,
) -> Result<Dataset<T>> {
    ensure!(!windows.is_empty(), "no windows to build a dataset from");
    let len = windows[0].samples.len();
    ensure!(
        windows.iter().all(|w| w.samples.len() == len),
        "windows have different lengths"
    );
    let fast = CwtPlan::<T>::new(&spec.wavelet, &spec.scales)?.fast_for_len(len)?;
    let features = windows
        .par_iter()
        .map(|w| features_of(&fast.transform(&w.samples)?, &spec.render))
        .collect::<Result<Vec<_>>>()?;
    let labels = windows.iter().map(|w| mode.class_of(&w.label)).collect();
    Dataset::new(features, labels)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
            stratified: true,
        }
    }
}

fn train_count(count: usize, fraction: f64) -> usize {
    ((count as f64 * fraction).floor() as usize).clamp(1, count - 1)
}

/// Train and test indices; disjoint, covering every item, sorted.
pub fn split_indices<T: Scalar>(
    ds: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    ensure!(
        spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
        "train fraction {} not in (0, 1)",
        spec.train_fraction
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    if spec.stratified {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, l) in ds.labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        for (class, mut idx) in groups {
            ensure!(
                idx.len() >= 2,
                "class {class} has {} item; stratified splitting needs at least 2",
                idx.len()
            );
            idx.shuffle(&mut rng);
            let k = train_count(idx.len(), spec.train_fraction);
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
    } else {
        ensure!(ds.len() >= 2, "need at least two items to split");
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        idx.shuffle(&mut rng);
        let k = train_count(idx.len(), spec.train_fraction);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split<T: Scalar>(ds: &Dataset<T>, spec: &SplitSpec) -> Result<(Dataset<T>, Dataset<T>)> {
    let (train, test) = split_indices(ds, spec)?;
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Per-class mean feature vectors, classes in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroidModel<T> {
    classes: Vec<String>,
    centroids: Vec<Vec<T>>,
}

impl<T: Scalar> CentroidModel<T> {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn centroid(&self, class: &str) -> Option<&[T]> {
        self.classes
            .iter()
            .position(|c| c == class)
            .map(|i| self.centroids[i].as_slice())
    }

    /// Class with the nearest centroid; the lexicographically first label wins ties.
    pub fn predict(&self, feature: &[T]) -> Result<&str> {
        let len = self.centroids[0].len();
        ensure!(
            feature.len() == len,
            "feature has {} values, model expects {len}",
            feature.len()
        );
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, c) in self.centroids.iter().enumerate() {
            let d = c
                .iter()
                .zip(feature)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Ok(&self.classes[best])
    }
}

fn train_on<T: Scalar>(ds: &Dataset<T>, idx: &[usize]) -> Result<CentroidModel<T>> {
    let mut groups: BTreeMap<&str, (Vec<T>, usize)> = BTreeMap::new();
    let len = ds.feature_len();
    for &i in idx {
        let entry = groups
            .entry(ds.labels[i].as_str())
            .or_insert_with(|| (vec![T::zero(); len], 0));
        for (acc, &v) in entry.0.iter_mut().zip(&ds.features[i]) {
            *acc += v;
        }
        entry.1 += 1;
    }
    ensure!(
        groups.len() >= 2,
        "training set covers {} class; need at least 2",
        groups.len()
    );
    let (classes, centroids) = groups
        .into_iter()
        .map(|(class, (sum, n))| {
            let k = T::from_usize_lossy(n);
            (class.to_string(), sum.into_iter().map(|v| v / k).collect())
        })
        .unzip();
    Ok(CentroidModel { classes, centroids })
}

pub fn train_centroid<T: Scalar>(train: &Dataset<T>) -> Result<CentroidModel<T>> {
    let idx: Vec<usize> = (0..train.len()).collect();
    train_on(train, &idx)
}

fn accuracy_on<T: Scalar>(model: &CentroidModel<T>, ds: &Dataset<T>, idx: &[usize]) -> Result<f64> {
    ensure!(!idx.is_empty(), "empty test set");
    let mut correct = 0usize;
    for &i in idx {
        if model.predict(&ds.features[i])? == ds.labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / idx.len() as f64)
}

/// Fraction of correctly classified items.
pub fn accuracy<T: Scalar>(model: &CentroidModel<T>, test: &Dataset<T>) -> Result<f64> {
    let idx: Vec<usize> = (0..test.len()).collect();
    accuracy_on(model, test, &idx)
}

/// Split, train and score once.
pub fn evaluate<T: Scalar>(ds: &Dataset<T>, spec: &SplitSpec) -> Result<f64> {
    let (train, test) = split_indices(ds, spec)?;
    let model = train_on(ds, &train)?;
    accuracy_on(&model, ds, &test)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl TrialSummary {
    pub fn from_accuracies(accuracies: Vec<f64>) -> Result<Self> {
        ensure!(!accuracies.is_empty(), "no trials");
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            accuracies,
            mean,
            std: var.sqrt(),
        })
    }
}

/// Repeats [`evaluate`] with split seeds `base.seed + trial`.
pub fn run_trials<T: Scalar>(
    ds: &Dataset<T>,
    base: &SplitSpec,
    trials: usize,
) -> Result<TrialSummary> {
    ensure!(trials >= 1, "need at least one trial");
    let acc = (0..trials as u64)
        .map(|t| {
            evaluate(
                ds,
                &SplitSpec {
                    seed: base.seed.wrapping_add(t),
                    ..*base
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    TrialSummary::from_accuracies(acc)
}

/// Start/end (inclusive) scales of each sliding window `[s, s + width)` inside `[lo, hi]`.
pub fn sweep_positions(
    lo: usize,
    hi: usize,
    width: usize,
    stride: usize,
) -> Result<Vec<(usize, usize)>> {
    ensure!(lo >= 1, "scales start at 1");
    ensure!(
        width >= 1 && stride >= 1,
        "width and stride must be positive"
    );
    ensure!(
        hi >= lo && hi - lo + 1 >= width,
        "scale range {lo}..={hi} is narrower than the window width {width}"
    );
    let count = (hi - lo + 1 - width) / stride + 1;
    Ok((0..count)
        .map(|i| {
            let s = lo + i * stride;
            (s, s + width - 1)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scale_lo: usize,
    pub scale_hi: usize,
    pub width: usize,
    pub stride: usize,
    pub trials: usize,
    /// Trial `t` splits with `seed + t`.
    pub seed: u64,
    pub label_mode: LabelMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub scale_lo: usize,
    /// Inclusive.
    pub scale_hi: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scale_lo,scale_hi,mean_acc,std_acc\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.scale_lo, r.scale_hi, r.mean_acc, r.std_acc
        ));
    }
    out
}

/// Accuracy of datasets restricted to each sliding scale window.
///
/// Coefficient rows are computed once per scale and kept only while a window
/// still needs them.
pub fn scale_window_sweep<T: Scalar>(
    windows: &[LabeledWindow<T>],
    wavelet: &WaveletSpec,
    render_opts: &RenderOptions,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    ensure!(cfg.trials >= 1, "need at least one trial");
    ensure!(!windows.is_empty(), "no windows");
    let len = windows[0].samples.len();
    ensure!(
        windows.iter().all(|w| w.samples.len() == len),
        "windows have different lengths"
    );
    let positions = sweep_positions(cfg.scale_lo, cfg.scale_hi, cfg.width, cfg.stride)?;
    let labels: Vec<String> = windows
        .iter()
        .map(|w| cfg.label_mode.class_of(&w.label))
        .collect();

    // per window: rows for scales cached_lo..cached_lo + rows.len()
    let mut cache: Vec<VecDeque<Vec<T>>> = vec![VecDeque::new(); windows.len()];
    let mut cached_lo = cfg.scale_lo;
    let mut out = Vec::with_capacity(positions.len());
    for (lo, hi) in positions {
        let cached_hi = cached_lo + cache[0].len(); // exclusive
        let drop = lo.saturating_sub(cached_lo).min(cache[0].len());
        for rows in &mut cache {
            rows.drain(..drop);
        }
        let first_new = cached_hi.max(lo);
        cached_lo = lo;
        if cache[0].is_empty() {
            cached_lo = lo;
        }
        if first_new <= hi {
            let scales = ScaleSet::range(first_new as f64, hi as f64, 1.0)?;
            let fast = CwtPlan::<T>::new(wavelet, &scales)?.fast_for_len(len)?;
            let fresh = windows
                .par_iter()
                .map(|w| fast.transform(&w.samples))
                .collect::<Result<Vec<_>>>()?;
            for (rows, m) in cache.iter_mut().zip(&fresh) {
                rows.extend((0..m.rows()).map(|r| m.row(r).to_vec()));
            }
        }
        let scales = ScaleSet::range(lo as f64, hi as f64, 1.0)?;
        let features = cache
            .par_iter()
            .map(|rows| {
                let m = CoefficientMatrix::from_rows(
                    rows.iter().cloned().collect(),
                    scales.clone(),
                    1.0,
                )?;
                features_of(&m, render_opts)
            })
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset::new(features, labels.clone())?;
        let summary = run_trials(&ds, &SplitSpec::seeded(cfg.seed), cfg.trials)?;
        out.push(SweepRow {
            scale_lo: lo,
            scale_hi: hi,
            mean_acc: summary.mean,
            std_acc: summary.std,
        });
    }
    Ok(out)
}

/// A synthetic capture of repeated program loops, ready to segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub meta: AcquisitionMeta,
    pub program: ProgramLoop,
    pub templates: HarmonicTemplates,
    /// Noise standard deviation as a multiple of the loop's signal RMS.
    pub relative_noise: f64,
    pub loops: usize,
    pub seed: u64,
}

impl SyntheticCorpus {
    /// Segmented windows of a freshly synthesized trace.
    pub fn windows<T: Scalar>(&self) -> Result<Vec<LabeledWindow<T>>> {
        let spc = self.meta.samples_per_cycle();
        let templates = self
            .templates
            .build::<T>(&self.program.distinct_labels(), spc)?;
        let mut params = TraceModelParams::noiseless(templates);
        let rms = params.loop_rms(&self.program)?;
        params = params.with_noise(self.relative_noise * rms, self.seed);
        let trace = synthesize_trace(&self.program, &params, self.loops, self.meta)?;
        segment(&trace, &self.program, 0)
    }
}
