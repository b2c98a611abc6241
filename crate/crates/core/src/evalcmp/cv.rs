use rayon::prelude::*;

use super::{kfold_indices, CvResult, EvalError};
use crate::dataset::IndexedDataset;
use crate::features::{EncodingScheme, Scheme};
use crate::logreg::{train, Examples, LabeledSet, OptimizerConfig};
use crate::stats::mean;

pub const MAJORITY_NAME: &str = "BL-MC";

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CvOptions {
    pub optimizer: OptimizerConfig,
}

/// Every row not in `fold`, ascending.
fn complement(z: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; z];
    fold.iter().for_each(|&i| held[i] = true);
    (0..z).filter(|&i| !held[i]).collect()
}

/// Accuracy of a model fitted on `train_rows` at strength `c`, scored on `test_rows`.
fn fit_and_score(
    set: &LabeledSet,
    scheme: EncodingScheme,
    c: f64,
    train_rows: &[usize],
    test_rows: &[usize],
    options: &CvOptions,
) -> Result<f64, EvalError> {
    let model = train(&set.subset(train_rows), scheme, c, &options.optimizer)?;
    Ok(model.accuracy(&set.subset(test_rows))?)
}

/// Per-C fold accuracies, `table[c][fold]`; fold×C jobs run on the rayon pool.
fn grid_table(
    set: &LabeledSet,
    scheme: EncodingScheme,
    grid: &[f64],
    folds: &[Vec<usize>],
    options: &CvOptions,
) -> Result<Vec<Vec<f64>>, EvalError> {
    let complements: Vec<Vec<usize>> = folds.iter().map(|f| complement(set.len(), f)).collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| fit_and_score(set, scheme, grid[c], &complements[f], &folds[f], options))
        .collect::<Result<_, _>>()?;
    Ok(accs.chunks(folds.len()).map(<[f64]>::to_vec).collect())
}

/// Index of the highest mean; ties go to the smaller C.
fn best_index(grid: &[f64], table: &[Vec<f64>]) -> usize {
    let means: Vec<f64> = table.iter().map(|row| mean(row)).collect();
    (0..grid.len())
        .reduce(|best, k| {
            let better = means[k] > means[best] || (means[k] == means[best] && grid[k] < grid[best]);
            if better {
                k
            } else {
                best
            }
        })
        .expect("grid is non-empty")
}

fn check_grid(grid: &[f64]) -> Result<(), EvalError> {
    if grid.is_empty() {
        return Err(EvalError::BadRange("empty C grid".into()));
    }
    if let Some(c) = grid.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(EvalError::BadRange(format!("C = {c}")));
    }
    Ok(())
}

/// Grid search scored on the same folds it reports: the best C's fold accuracies.
pub fn cross_validate_with_folds(
    set: &LabeledSet,
    scheme: EncodingScheme,
    grid: &[f64],
    folds: &[Vec<usize>],
    options: &CvOptions,
) -> Result<CvResult, EvalError> {
    check_grid(grid)?;
    let table = grid_table(set, scheme, grid, folds, options)?;
    let best = best_index(grid, &table);
    Ok(CvResult::from_folds(
        scheme.kind.model_name(),
        table[best].clone(),
        Some(grid[best]),
    ))
}

pub fn cross_validate(
    dataset: &IndexedDataset,
    kind: Scheme,
    grid: &[f64],
    folds: usize,
    seed: u64,
    options: &CvOptions,
) -> Result<CvResult, EvalError> {
    let folds = kfold_indices(dataset.len(), folds, seed)?;
    let scheme = EncodingScheme::for_dataset(kind, dataset);
    let set = LabeledSet::from_dataset(dataset, &scheme)?;
    cross_validate_with_folds(&set, scheme, grid, &folds, options)
}

/// Leak-free variant: C is chosen by an inner `inner_folds`-fold search on each
/// outer training complement. The reported `best_C` is the most frequent choice.
pub fn nested_cross_validate(
    set: &LabeledSet,
    scheme: EncodingScheme,
    grid: &[f64],
    folds: &[Vec<usize>],
    inner_folds: usize,
    seed: u64,
    options: &CvOptions,
) -> Result<CvResult, EvalError> {
    check_grid(grid)?;
    let mut accs = Vec::with_capacity(folds.len());
    let mut chosen = Vec::with_capacity(folds.len());
    for (f, fold) in folds.iter().enumerate() {
        let outer_train = complement(set.len(), fold);
        let inner: Vec<Vec<usize>> = kfold_indices(outer_train.len(), inner_folds, seed.wrapping_add(f as u64 + 1))?
            .into_iter()
            .map(|part| part.into_iter().map(|i| outer_train[i]).collect())
            .collect();
        let table = inner_table(set, scheme, grid, &outer_train, &inner, options)?;
        let c = grid[best_index(grid, &table)];
        chosen.push(c);
        accs.push(fit_and_score(set, scheme, c, &outer_train, fold, options)?);
    }
    Ok(CvResult::from_folds(scheme.kind.model_name(), accs, Some(mode(&chosen))))
}

/// Like [`grid_table`] but restricted to the rows of `universe`.
fn inner_table(
    set: &LabeledSet,
    scheme: EncodingScheme,
    grid: &[f64],
    universe: &[usize],
    folds: &[Vec<usize>],
    options: &CvOptions,
) -> Result<Vec<Vec<f64>>, EvalError> {
    let complements: Vec<Vec<usize>> = folds
        .iter()
        .map(|fold| {
            let mut held = vec![false; set.len()];
            fold.iter().for_each(|&i| held[i] = true);
            universe.iter().copied().filter(|&i| !held[i]).collect()
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| fit_and_score(set, scheme, grid[c], &complements[f], &folds[f], options))
        .collect::<Result<_, _>>()?;
    Ok(accs.chunks(folds.len()).map(<[f64]>::to_vec).collect())
}

/// Most frequent value; ties go to the smaller one.
fn mode(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (sorted[0], 0);
    let mut i = 0;
    while i < sorted.len() {
        let run = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        if run > best.1 {
            best = (sorted[i], run);
        }
        i += run;
    }
    best.0
}

/// Each fold is predicted with its training complement's majority label; a tie predicts red.
pub fn majority_baseline_with_folds(labels: &[bool], folds: &[Vec<usize>]) -> CvResult {
    let total_red = labels.iter().filter(|&&y| y).count();
    let accs = folds
        .iter()
        .map(|fold| {
            let fold_red = fold.iter().filter(|&&i| labels[i]).count();
            let train_red = total_red - fold_red;
            let train_blue = labels.len() - fold.len() - train_red;
            let hits = if train_red >= train_blue {
                fold_red
            } else {
                fold.len() - fold_red
            };
            hits as f64 / fold.len() as f64
        })
        .collect();
    CvResult::from_folds(MAJORITY_NAME, accs, None)
}

pub fn majority_baseline(
    dataset: &IndexedDataset,
    folds: usize,
    seed: u64,
) -> Result<CvResult, EvalError> {
    let folds = kfold_indices(dataset.len(), folds, seed)?;
    let labels: Vec<bool> = dataset.matches().iter().map(|m| m.red_won()).collect();
    Ok(majority_baseline_with_folds(&labels, &folds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;

    /// One feature whose sign decides the label.
    fn separable(z: usize) -> LabeledSet {
        let vectors = (0..z)
            .map(|i| {
                let x = if i % 2 == 0 { 1.0 } else { -1.0 };
                SparseVector::new(2, vec![(0, x), (1, 0.5)]).unwrap()
            })
            .collect();
        let labels = (0..z).map(|i| i % 2 == 0).collect();
        LabeledSet::new(2, vectors, labels).unwrap()
    }

    #[test]
    fn single_c_grid_picks_it() {
        let set = separable(40);
        let scheme = EncodingScheme::new(Scheme::Player, 2, 1);
        let folds = kfold_indices(40, 4, 1).unwrap();
        let r = cross_validate_with_folds(&set, scheme, &[0.3], &folds, &CvOptions::default()).unwrap();
        assert_eq!(r.best_c, Some(0.3));
        assert_eq!(r.per_fold_accuracy.len(), 4);
    }

    #[test]
    fn separable_toy_ties_to_smaller_c() {
        let set = separable(40);
        let scheme = EncodingScheme::new(Scheme::Player, 2, 1);
        let folds = kfold_indices(40, 5, 2).unwrap();
        let r = cross_validate_with_folds(&set, scheme, &[1e-6, 1e6], &folds, &CvOptions::default())
            .unwrap();
        // both strengths classify perfectly; the tie goes to the smaller C
        assert_eq!(r.best_c, Some(1e-6));
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn leave_one_out_scores_are_binary() {
        let set = separable(12);
        let scheme = EncodingScheme::new(Scheme::Player, 2, 1);
        let folds = kfold_indices(12, 12, 3).unwrap();
        let r = cross_validate_with_folds(&set, scheme, &[0.1, 10.0], &folds, &CvOptions::default())
            .unwrap();
        assert!(r.per_fold_accuracy.iter().all(|&a| a == 0.0 || a == 1.0));
    }

    #[test]
    fn majority_of_training_complement() {
        // 70 red, 30 blue
        let labels: Vec<bool> = (0..100).map(|i| i % 10 < 7).collect();
        let folds = kfold_indices(100, 10, 5).unwrap();
        let r = majority_baseline_with_folds(&labels, &folds);
        assert!((r.mean - 0.7).abs() < 1e-12);
        assert!(r.best_c.is_none());
    }

    #[test]
    fn balanced_training_fold_predicts_red() {
        let labels = [true, false, true, false, true, true];
        // training complement of fold {4, 5} is balanced
        let r = majority_baseline_with_folds(&labels, &[vec![4, 5], vec![0, 1, 2, 3]]);
        assert_eq!(r.per_fold_accuracy, vec![1.0, 0.5]);
    }

    #[test]
    fn all_red_is_perfect() {
        let labels = [true; 20];
        let folds = kfold_indices(20, 4, 0).unwrap();
        assert!(majority_baseline_with_folds(&labels, &folds)
            .per_fold_accuracy
            .iter()
            .all(|&a| a == 1.0));
    }

    #[test]
    fn nested_reports_modal_choice() {
        let set = separable(60);
        let scheme = EncodingScheme::new(Scheme::Player, 2, 1);
        let folds = kfold_indices(60, 3, 4).unwrap();
        let r = nested_cross_validate(&set, scheme, &[1e-6, 1e6], &folds, 3, 9, &CvOptions::default())
            .unwrap();
        assert_eq!(r.best_c, Some(1e-6));
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn mode_breaks_ties_low() {
        assert_eq!(mode(&[10.0, 1.0, 10.0, 1.0, 0.1]), 1.0);
        assert_eq!(mode(&[3.0]), 3.0);
    }
}
