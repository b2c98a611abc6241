//! L2-penalized logistic regression over sparse match encodings.
//!
//! The fitted quantity is `ℓ(θ) − C·θᵀθ`, the Bernoulli log-likelihood of
//! red wins minus a ridge penalty. Training starts from `θ = 0` and uses a
//! deterministic optimizer, so identical inputs give bitwise-identical
//! weights.

mod optim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::IndexedDataset;
use crate::features::{encode, EncodingScheme, FeatureError, SparseVector};

pub use optim::{Method, OptimizerConfig};

#[derive(Debug, Error, PartialEq)]
pub enum LogRegError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("objective or gradient became non-finite")]
    NonFinite,
    #[error("no examples to train or score on")]
    EmptyData,
    #[error("regularization strength must be finite and non-negative, got {0}")]
    InvalidRegularization(f64),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without forming σ(x).
#[inline]
fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

/// `ln P(y | s)` and `y − σ(s)` sharing one `exp`.
#[inline]
fn log_likelihood_and_residual(s: f64, y: bool) -> (f64, f64) {
    let e = (-s.abs()).exp();
    let log1p = e.ln_1p();
    // σ(s) and ln σ(±s) written in terms of e = exp(-|s|)
    let p = if s >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    let signed = if y { s } else { -s };
    let log_p = -((-signed).max(0.0) + log1p);
    (log_p, y as u8 as f64 - p)
}

/// Read access to a labelled collection of encoded matches.
pub trait Examples: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn row(&self, i: usize) -> Row<'_>;
    /// `true` when red won.
    fn label(&self, i: usize) -> bool;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Borrowed non-zeros of one encoded match.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    indices: &'a [u32],
    values: &'a [f64],
}

impl<'a> Row<'a> {
    #[inline]
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(self.values)
            .map(|(&i, x)| x * dense[i as usize])
            .sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().zip(self.values).map(|(&i, &x)| (i as usize, x))
    }
}

/// Encoded matches with their outcomes (the 𝒟, ℳ pair), stored row-contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    dim: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
    labels: Vec<bool>,
}

impl LabeledSet {
    pub fn new(
        dim: usize,
        vectors: Vec<SparseVector>,
        labels: Vec<bool>,
    ) -> Result<Self, LogRegError> {
        if vectors.len() != labels.len() {
            return Err(LogRegError::DimensionMismatch {
                expected: vectors.len(),
                actual: labels.len(),
            });
        }
        if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(LogRegError::DimensionMismatch {
                expected: dim,
                actual: v.dim(),
            });
        }
        assert!(u32::try_from(dim).is_ok(), "feature dimension exceeds u32");
        let nnz = vectors.iter().map(SparseVector::nnz).sum();
        let mut set = Self {
            dim,
            offsets: Vec::with_capacity(vectors.len() + 1),
            indices: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
            labels,
        };
        set.offsets.push(0);
        for v in &vectors {
            for &(i, x) in v.entries() {
                set.indices.push(i as u32);
                set.values.push(x);
            }
            set.offsets.push(set.indices.len());
        }
        Ok(set)
    }

    /// Encodes every match of `dataset` under `scheme`.
    pub fn from_dataset(
        dataset: &IndexedDataset,
        scheme: &EncodingScheme,
    ) -> Result<Self, LogRegError> {
        let vectors = dataset
            .matches()
            .iter()
            .map(|m| encode(m, scheme))
            .collect::<Result<Vec<_>, _>>()?;
        let labels = dataset.matches().iter().map(|m| m.red_won()).collect();
        Self::new(scheme.dim(), vectors, labels)
    }

    /// Copy of row `i` as a sparse vector.
    pub fn vector(&self, i: usize) -> SparseVector {
        SparseVector::new(self.dim, self.row(i).entries().collect())
            .expect("rows are stored sorted and in range")
    }

    /// Copies of every row.
    pub fn vectors(&self) -> Vec<SparseVector> {
        (0..self.len()).map(|i| self.vector(i)).collect()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// Borrowing view over `rows`.
    pub fn subset<'a>(&'a self, rows: &'a [usize]) -> Subset<'a> {
        Subset { set: self, rows }
    }
}

impl Examples for LabeledSet {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.labels.len()
    }
    #[inline]
    fn row(&self, i: usize) -> Row<'_> {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        Row {
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }
    fn label(&self, i: usize) -> bool {
        self.labels[i]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Subset<'a> {
    set: &'a LabeledSet,
    rows: &'a [usize],
}

impl Examples for Subset<'_> {
    fn dim(&self) -> usize {
        self.set.dim
    }
    fn len(&self) -> usize {
        self.rows.len()
    }
    #[inline]
    fn row(&self, i: usize) -> Row<'_> {
        self.set.row(self.rows[i])
    }
    fn label(&self, i: usize) -> bool {
        self.set.labels[self.rows[i]]
    }
}

fn check_dims<D: Examples + ?Sized>(theta: &[f64], data: &D) -> Result<(), LogRegError> {
    if theta.len() != data.dim() {
        return Err(LogRegError::DimensionMismatch {
            expected: data.dim(),
            actual: theta.len(),
        });
    }
    Ok(())
}

/// Penalized log-likelihood `ℓ(θ) − C·θᵀθ`.
pub fn objective<D: Examples + ?Sized>(theta: &[f64], data: &D, c: f64) -> Result<f64, LogRegError> {
    check_dims(theta, data)?;
    let mut ll = Neumaier::default();
    for z in 0..data.len() {
        let s = data.row(z).dot(theta);
        ll.add(if data.label(z) {
            log_sigmoid(s)
        } else {
            log_sigmoid(-s)
        });
    }
    ll.add(-c * dot(theta, theta));
    Ok(ll.total())
}

/// `Σ_z (M_z − σ(θᵀD_z))·D_z − 2C·θ`
pub fn gradient<D: Examples + ?Sized>(
    theta: &[f64],
    data: &D,
    c: f64,
) -> Result<Vec<f64>, LogRegError> {
    check_dims(theta, data)?;
    let mut grad = vec![0.0; theta.len()];
    value_and_gradient(theta, data, c, &mut grad);
    Ok(grad)
}

/// Fused pass used by the optimizers; writes the gradient into `grad`.
pub(crate) fn value_and_gradient<D: Examples + ?Sized>(
    theta: &[f64],
    data: &D,
    c: f64,
    grad: &mut [f64],
) -> f64 {
    for (g, t) in grad.iter_mut().zip(theta) {
        *g = -2.0 * c * t;
    }
    // compensated sum: optimizer line searches compare values differing in the
    // last few digits when there are many matches
    let mut ll = Neumaier::default();
    for z in 0..data.len() {
        let v = data.row(z);
        let s = v.dot(theta);
        let y = data.label(z);
        let (log_p, residual) = log_likelihood_and_residual(s, y);
        ll.add(log_p);
        for (i, x) in v.entries() {
            grad[i] += residual * x;
        }
    }
    ll.add(-c * dot(theta, theta));
    ll.total()
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fitted weights plus the metadata needed to reuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub scheme: EncodingScheme,
    pub theta: Vec<f64>,
    pub c: f64,
    pub converged: bool,
    pub final_grad_norm: f64,
    pub iterations: usize,
}

/// Fits θ starting from zero.
pub fn train<D: Examples + ?Sized>(
    data: &D,
    scheme: EncodingScheme,
    c: f64,
    config: &OptimizerConfig,
) -> Result<TrainedModel, LogRegError> {
    train_from(data, scheme, c, config, vec![0.0; scheme.dim()])
}

/// Fits θ starting from `init`.
pub fn train_from<D: Examples + ?Sized>(
    data: &D,
    scheme: EncodingScheme,
    c: f64,
    config: &OptimizerConfig,
    init: Vec<f64>,
) -> Result<TrainedModel, LogRegError> {
    if data.is_empty() {
        return Err(LogRegError::EmptyData);
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(LogRegError::InvalidRegularization(c));
    }
    if data.dim() != scheme.dim() {
        return Err(LogRegError::DimensionMismatch {
            expected: scheme.dim(),
            actual: data.dim(),
        });
    }
    check_dims(&init, data)?;
    let outcome = optim::maximize(data, c, config, init)?;
    Ok(TrainedModel {
        scheme,
        theta: outcome.theta,
        c,
        converged: outcome.converged,
        final_grad_norm: outcome.grad_norm,
        iterations: outcome.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub prob_red: f64,
    /// Red predicted to win; ties at exactly 0.5 go to red.
    pub red: bool,
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn predict(&self, vector: &SparseVector) -> Result<Prediction, LogRegError> {
        if vector.dim() != self.dim() {
            return Err(LogRegError::DimensionMismatch {
                expected: self.dim(),
                actual: vector.dim(),
            });
        }
        Ok(predict_score(vector.dot(&self.theta)))
    }

    /// Fraction of examples whose outcome is predicted correctly.
    pub fn accuracy<D: Examples + ?Sized>(&self, data: &D) -> Result<f64, LogRegError> {
        if data.is_empty() {
            return Err(LogRegError::EmptyData);
        }
        check_dims(&self.theta, data)?;
        let correct = (0..data.len())
            .filter(|&z| predict_score(data.row(z).dot(&self.theta)).red == data.label(z))
            .count();
        Ok(correct as f64 / data.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile::from(self)).expect("model serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let f: ModelFileIn = serde_json::from_str(text)?;
        let scheme = EncodingScheme::new(f.scheme, f.players, f.champions);
        if f.theta.len() != scheme.dim() {
            return Err(serde::de::Error::custom(format!(
                "theta has length {}, scheme needs {}",
                f.theta.len(),
                scheme.dim()
            )));
        }
        Ok(Self {
            scheme,
            theta: f.theta,
            c: f.c,
            converged: f.converged,
            final_grad_norm: f.final_grad_norm,
            iterations: 0,
        })
    }
}

fn predict_score(score: f64) -> Prediction {
    let prob_red = sigmoid(score);
    Prediction {
        prob_red,
        red: prob_red >= 0.5,
    }
}

/// Free-function form of [`TrainedModel::predict`].
pub fn predict(model: &TrainedModel, vector: &SparseVector) -> Result<Prediction, LogRegError> {
    model.predict(vector)
}

/// Free-function form of [`TrainedModel::accuracy`].
pub fn accuracy<D: Examples + ?Sized>(model: &TrainedModel, data: &D) -> Result<f64, LogRegError> {
    model.accuracy(data)
}

/// On-disk model layout; theta is written with 17 significant digits.
#[derive(Serialize)]
struct ModelFile<'a> {
    scheme: crate::features::Scheme,
    #[serde(rename = "N")]
    players: usize,
    #[serde(rename = "M")]
    champions: usize,
    #[serde(rename = "C")]
    c: f64,
    #[serde(serialize_with = "serialize_17_digits")]
    theta: &'a [f64],
    converged: bool,
    final_grad_norm: f64,
}

#[derive(Deserialize)]
struct ModelFileIn {
    scheme: crate::features::Scheme,
    #[serde(rename = "N")]
    players: usize,
    #[serde(rename = "M")]
    champions: usize,
    #[serde(rename = "C")]
    c: f64,
    theta: Vec<f64>,
    converged: bool,
    final_grad_norm: f64,
}

impl<'a> From<&'a TrainedModel> for ModelFile<'a> {
    fn from(m: &'a TrainedModel) -> Self {
        Self {
            scheme: m.scheme.kind,
            players: m.scheme.players,
            champions: m.scheme.champions,
            c: m.c,
            theta: &m.theta,
            converged: m.converged,
            final_grad_norm: m.final_grad_norm,
        }
    }
}

fn serialize_17_digits<S: serde::Serializer>(values: &&[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for v in values.iter() {
        let text = format!("{v:.16e}");
        let raw = serde_json::value::RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Scheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        // 1/(1+e^-1) to 16 digits
        assert!((sigmoid(1.0) - 0.731_058_578_630_004_9).abs() < 1e-15);
        let tail = sigmoid(-50.0);
        assert!(tail > 0.0 && tail < 1e-20);
        for x in [-700.0, -30.0, -1.5, 0.3, 12.0, 700.0] {
            let (a, b) = (sigmoid(x), sigmoid(-x));
            assert!(a.is_finite() && (a + b - 1.0).abs() < 1e-15);
        }
        assert!(sigmoid(0.1) > sigmoid(-0.1));
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
    }

    /// Random instance with uniform dimension, used across the module tests.
    pub(crate) fn random_set(rng: &mut ChaCha8Rng, z: usize, k: usize) -> LabeledSet {
        let vectors = (0..z)
            .map(|_| {
                let entries = (0..k)
                    .filter_map(|i| {
                        let keep = rng.random_bool(0.3);
                        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                        keep.then_some((i, sign))
                    })
                    .collect();
                SparseVector::new(k, entries).unwrap()
            })
            .collect();
        let labels = (0..z).map(|_| rng.random_bool(0.5)).collect();
        LabeledSet::new(k, vectors, labels).unwrap()
    }

    /// Direct term-by-term log-likelihood, independent of the production path.
    fn naive_objective(theta: &[f64], data: &LabeledSet, c: f64) -> f64 {
        let mut total = 0.0;
        for (v, &y) in data.vectors().iter().zip(data.labels()) {
            let dense = v.to_dense();
            let s: f64 = dense.iter().zip(theta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-s).exp());
            let m = if y { 1.0 } else { 0.0 };
            total += m * p.ln() + (1.0 - m) * (1.0 - p).ln();
        }
        total - c * theta.iter().map(|t| t * t).sum::<f64>()
    }

    #[test]
    fn objective_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = random_set(&mut rng, 37, 6);
        let zero = vec![0.0; 6];
        for c in [0.0, 3.0, 1e6] {
            let obj = objective(&zero, &data, c).unwrap();
            assert!((obj - 37.0 * 0.5f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let data = random_set(&mut rng, 30, 8);
            let theta: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let c = rng.random_range(0.0..2.0);
            let fast = objective(&theta, &data, c).unwrap();
            let slow = naive_objective(&theta, &data, c);
            assert!((fast - slow).abs() < 1e-10 * slow.abs().max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_set(&mut rng, 5, 4);
        assert!(matches!(
            objective(&[0.0; 3], &data, 0.0),
            Err(LogRegError::DimensionMismatch { expected: 4, actual: 3 })
        ));
        assert!(gradient(&[0.0; 5], &data, 0.0).is_err());
    }

    #[test]
    fn gradient_vanishes_on_swap_paired_data() {
        // each match appears once as given and once with teams exchanged but
        // the same winner side; labels alternate so both classes are equally common
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = random_set(&mut rng, 20, 7);
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for (z, v) in base.vectors().iter().enumerate() {
            let y = z % 2 == 0;
            vectors.extend([v.clone(), v.negated()]);
            labels.extend([y, y]);
        }
        let paired = LabeledSet::new(7, vectors, labels).unwrap();
        let g = gradient(&[0.0; 7], &paired, 0.5).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn gradient_of_empty_data_is_penalty() {
        let empty = LabeledSet::new(3, vec![], vec![]).unwrap();
        let theta = [1.0, -2.0, 0.5];
        let g = gradient(&theta, &empty, 0.25).unwrap();
        assert_eq!(g, vec![-0.5, 1.0, -0.25]);
    }

    #[test]
    fn concavity_on_random_chords() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let data = random_set(&mut rng, 25, 6);
            let c = rng.random_range(0.0..1.0);
            let a: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let lam: f64 = rng.random_range(0.01..0.99);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lam * x + (1.0 - lam) * y).collect();
            let lhs = objective(&mid, &data, c).unwrap();
            let rhs = lam * objective(&a, &data, c).unwrap()
                + (1.0 - lam) * objective(&b, &data, c).unwrap();
            assert!(lhs >= rhs - 1e-9);
        }
    }

    /// Player 0 beats player 1 every time (1v1, both sides).
    fn separable() -> LabeledSet {
        let win = SparseVector::new(2, vec![(0, 1.0), (1, -1.0)]).unwrap();
        let vectors = vec![win.clone(), win.negated(), win.clone(), win.negated()];
        LabeledSet::new(2, vectors, vec![true, false, true, false]).unwrap()
    }

    #[test]
    fn separable_fixture_fits_perfectly() {
        let data = separable();
        let scheme = EncodingScheme::new(Scheme::Player, 2, 1);
        let m = train(&data, scheme, 1e-6, &OptimizerConfig::default()).unwrap();
        assert!(m.converged);
        assert_eq!(m.accuracy(&data).unwrap(), 1.0);
        assert!(m.theta[0] > 0.0 && m.theta[1] < 0.0);

        let heavy = train(&data, scheme, 1e6, &OptimizerConfig::default()).unwrap();
        assert!(inf_norm(&heavy.theta) < 1e-3);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = random_set(&mut rng, 60, 10);
        let scheme = EncodingScheme::new(Scheme::Player, 10, 1);
        let a = train(&data, scheme, 0.1, &OptimizerConfig::default()).unwrap();
        let b = train(&data, scheme, 0.1, &OptimizerConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.converged && a.final_grad_norm <= 1e-6);
    }

    #[test]
    fn retraining_from_optimum_is_idle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = random_set(&mut rng, 80, 12);
        let scheme = EncodingScheme::new(Scheme::Player, 12, 1);
        let cfg = OptimizerConfig::default();
        let first = train(&data, scheme, 0.3, &cfg).unwrap();
        let again = train_from(&data, scheme, 0.3, &cfg, first.theta.clone()).unwrap();
        assert!(again.iterations <= 1);
        assert_eq!(again.accuracy(&data).unwrap(), first.accuracy(&data).unwrap());
    }

    #[test]
    fn label_swap_preserves_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = random_set(&mut rng, 70, 9);
        // an empty vector scores exactly 0 and the red tie rule is not antisymmetric
        let keep: Vec<usize> = (0..70).filter(|&z| data.vectors()[z].nnz() > 0).collect();
        let data = LabeledSet::new(
            9,
            keep.iter().map(|&z| data.vectors()[z].clone()).collect(),
            keep.iter().map(|&z| data.labels()[z]).collect(),
        )
        .unwrap();
        let swapped = LabeledSet::new(
            9,
            data.vectors().iter().map(SparseVector::negated).collect(),
            data.labels().iter().map(|y| !y).collect(),
        )
        .unwrap();
        let scheme = EncodingScheme::new(Scheme::Player, 9, 1);
        let cfg = OptimizerConfig::default();
        let a = train(&data, scheme, 0.2, &cfg).unwrap();
        let b = train(&swapped, scheme, 0.2, &cfg).unwrap();
        assert_eq!(a.accuracy(&data).unwrap(), b.accuracy(&swapped).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = separable();
        let scheme = EncodingScheme::new(Scheme::Player, 2, 1);
        let cfg = OptimizerConfig::default();
        assert_eq!(
            train(&data, scheme, -1.0, &cfg).unwrap_err(),
            LogRegError::InvalidRegularization(-1.0)
        );
        let empty = LabeledSet::new(2, vec![], vec![]).unwrap();
        assert_eq!(train(&empty, scheme, 1.0, &cfg).unwrap_err(), LogRegError::EmptyData);
        let wrong = EncodingScheme::new(Scheme::Player, 3, 1);
        assert!(matches!(
            train(&data, wrong, 1.0, &cfg),
            Err(LogRegError::DimensionMismatch { .. })
        ));
    }

    fn model(theta: Vec<f64>) -> TrainedModel {
        TrainedModel {
            scheme: EncodingScheme::new(Scheme::Player, theta.len(), 1),
            theta,
            c: 1.0,
            converged: true,
            final_grad_norm: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn predict_tie_and_antisymmetry() {
        let zero = model(vec![0.0; 3]);
        let v = SparseVector::new(3, vec![(0, 1.0), (2, -1.0)]).unwrap();
        let p = zero.predict(&v).unwrap();
        assert_eq!((p.prob_red, p.red), (0.5, true));

        let m = model(vec![0.4, -1.0, 0.7]);
        let a = m.predict(&v).unwrap().prob_red;
        let b = m.predict(&v.negated()).unwrap().prob_red;
        assert!((a + b - 1.0).abs() < 1e-15);
        assert!(m.predict(&SparseVector::zeros(2)).is_err());
    }

    #[test]
    fn untouched_weights_contribute_nothing() {
        // feature 2 never appears in training, so its weight stays exactly 0
        let train_set = LabeledSet::new(
            3,
            vec![
                SparseVector::new(3, vec![(0, 1.0), (1, -1.0)]).unwrap(),
                SparseVector::new(3, vec![(0, -1.0), (1, 1.0)]).unwrap(),
                SparseVector::new(3, vec![(0, 1.0), (1, -1.0)]).unwrap(),
            ],
            vec![true, false, false],
        )
        .unwrap();
        let scheme = EncodingScheme::new(Scheme::Player, 3, 1);
        let m = train(&train_set, scheme, 0.5, &OptimizerConfig::default()).unwrap();
        assert_eq!(m.theta[2], 0.0);
        let probe = SparseVector::new(3, vec![(0, 1.0), (2, -1.0)]).unwrap();
        let manual = m.theta[0];
        assert_eq!(m.predict(&probe).unwrap().prob_red, sigmoid(manual));
    }

    #[test]
    fn accuracy_cases() {
        // theta = 0 predicts red everywhere, so accuracy is the red-win share
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = random_set(&mut rng, 40, 5);
        let red = data.labels().iter().filter(|&&y| y).count() as f64 / 40.0;
        assert_eq!(model(vec![0.0; 5]).accuracy(&data).unwrap(), red);

        // hand-evaluated 4-match fixture, theta = (1, -2)
        // scores: +3 (red, correct), -1 (red, wrong), +2 (blue, wrong), -3 (blue, correct)
        let vs = [
            vec![(0, 1.0), (1, -1.0)],
            vec![(0, -1.0)],
            vec![(0, 2.0)],
            vec![(0, -1.0), (1, 1.0)],
        ];
        let vectors: Vec<_> = vs
            .iter()
            .map(|e| SparseVector::new(2, e.clone()).unwrap())
            .collect();
        let four = LabeledSet::new(2, vectors, vec![true, true, false, false]).unwrap();
        assert_eq!(model(vec![1.0, -2.0]).accuracy(&four).unwrap(), 0.5);

        let empty = LabeledSet::new(2, vec![], vec![]).unwrap();
        assert_eq!(model(vec![0.0; 2]).accuracy(&empty), Err(LogRegError::EmptyData));
    }

    #[test]
    fn model_json_round_trip_is_exact() {
        let m = model(vec![0.1, -1.0 / 3.0, 2.0f64.sqrt() * 1e-7, 12345.678901234567]);
        let text = m.to_json();
        assert!(text.contains("\"scheme\":\"LR-P\""));
        assert!(text.contains("-3.3333333333333331e-1"));
        let back = TrainedModel::from_json(&text).unwrap();
        assert_eq!(back.theta, m.theta);
        assert_eq!(back.scheme, m.scheme);
    }
}
