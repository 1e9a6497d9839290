use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::basis::BSplineBasis;
use super::curve::FunctionalCurve;
use super::CurveSettings;
use crate::error::{Error, Result};

pub const MODEL_FILE_VERSION: u32 = 1;

/// Eigenvalues below this fraction of the largest are treated as numerical zero.
const RANK_TOLERANCE: f64 = 1e-15;

/// Metadata attached to each training curve.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveLabel {
    pub curve_id: String,
    pub speaker: String,
    pub group: String,
    pub condition: String,
    #[serde(default)]
    pub session: String,
}

/// Principal scores of one curve, in component order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub values: Vec<f64>,
    pub curve_id: Option<String>,
}

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            curve_id: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Functional PCA model: mean curve, L2-orthonormal eigenfunctions and the scores of
/// the curves it was fitted on.
#[derive(Debug, Clone)]
pub struct FpcaModel {
    basis: Arc<BSplineBasis>,
    settings: CurveSettings,
    mean: FunctionalCurve,
    components: Vec<FunctionalCurve>,
    eigenvalues: Vec<f64>,
    variance_fraction: Vec<f64>,
    training_scores: Vec<Vec<f64>>,
    labels: Vec<CurveLabel>,
    gram: DMatrix<f64>,
}

impl FpcaModel {
    pub fn basis(&self) -> &Arc<BSplineBasis> {
        &self.basis
    }

    pub fn settings(&self) -> &CurveSettings {
        &self.settings
    }

    pub fn mean(&self) -> &FunctionalCurve {
        &self.mean
    }

    pub fn components(&self) -> &[FunctionalCurve] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn variance_fraction(&self) -> &[f64] {
        &self.variance_fraction
    }

    /// One row per training curve, one column per component.
    pub fn training_scores(&self) -> &[Vec<f64>] {
        &self.training_scores
    }

    pub fn labels(&self) -> &[CurveLabel] {
        &self.labels
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Population standard deviation of the training scores of component `i`.
    pub fn score_sd(&self, i: usize) -> Option<f64> {
        if i >= self.n_components() || self.training_scores.is_empty() {
            return None;
        }
        let n = self.training_scores.len() as f64;
        let col: Vec<f64> = self.training_scores.iter().map(|r| r[i]).collect();
        let mean = col.iter().sum::<f64>() / n;
        Some((col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
    }

    /// Group labels present among the training curves, sorted.
    pub fn groups(&self) -> Vec<String> {
        let mut g: Vec<String> = self.labels.iter().map(|l| l.group.clone()).collect();
        g.sort();
        g.dedup();
        g
    }
}

/// Fits a functional PCA on curves sharing one basis.
///
/// The coefficient covariance `S` is turned into the covariance operator in the `L2`
/// metric through the Gram Cholesky factor `W = L Lᵀ`: the symmetric matrix `Lᵀ S L`
/// is diagonalized and its eigenvectors `u` mapped back to coefficients `b = L⁻ᵀ u`,
/// which are orthonormal under `W`. Scores use the population (1/N) normalization so
/// that the variance of each score column equals its eigenvalue.
pub fn fpca_fit(curves: &[FunctionalCurve], labels: Vec<CurveLabel>, settings: CurveSettings) -> Result<FpcaModel> {
    if curves.len() < 2 {
        return Err(Error::invalid(format!(
            "functional PCA needs at least two curves, got {}",
            curves.len()
        )));
    }
    if labels.len() != curves.len() {
        return Err(Error::invalid("one label per curve is required"));
    }
    let basis = curves[0].basis().clone();
    if curves.iter().any(|c| !c.same_basis(&curves[0])) {
        return Err(Error::BasisMismatch);
    }
    let n_curves = curves.len();
    let n = basis.n_basis();

    let coef = DMatrix::from_fn(n_curves, n, |i, j| curves[i].coefficients()[j]);
    let mean: DVector<f64> = coef.row_mean().transpose();
    let centered = DMatrix::from_fn(n_curves, n, |i, j| coef[(i, j)] - mean[j]);

    let gram = basis.gram_matrix();
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let weighted = &centered * &l;
    let operator = (weighted.transpose() * &weighted) / n_curves as f64;
    let operator = (&operator + operator.transpose()) * 0.5;
    let eig = SymmetricEigen::new(operator);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] > RANK_TOLERANCE * top && eig.eigenvalues[i] > 0.0)
        .take(n_curves - 1)
        .collect();

    let integrals = DVector::from_vec(basis.integrals());
    let lt = l.transpose();
    let mut components = Vec::with_capacity(keep.len());
    let mut eigenvalues = Vec::with_capacity(keep.len());
    for &i in &keep {
        let u = eig.eigenvectors.column(i).into_owned();
        let mut b = lt
            .solve_upper_triangular(&u)
            .ok_or_else(|| Error::Singular("Gram factor is singular".into()))?;
        orient(&mut b, &integrals);
        components.push(FunctionalCurve::new(basis.clone(), b.iter().copied().collect())?);
        eigenvalues.push(eig.eigenvalues[i]);
    }
    let total: f64 = eigenvalues.iter().sum();
    let variance_fraction = eigenvalues.iter().map(|e| e / total).collect();

    let mean_curve = FunctionalCurve::new(basis.clone(), mean.iter().copied().collect())?;
    let mut model = FpcaModel {
        basis,
        settings,
        mean: mean_curve,
        components,
        eigenvalues,
        variance_fraction,
        training_scores: Vec::new(),
        labels,
        gram,
    };
    model.training_scores = curves
        .iter()
        .map(|c| project_values(c, &model))
        .collect::<Result<_>>()?;
    Ok(model)
}

/// Sign convention: `∫ PC(t) dt >= 0`, or the first non-negligible coefficient positive
/// when the integral vanishes.
fn orient(b: &mut DVector<f64>, integrals: &DVector<f64>) {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    let integral = b.dot(integrals);
    let flip = if integral.abs() > 1e-10 * scale {
        integral < 0.0
    } else {
        b.iter()
            .find(|v| v.abs() > 1e-9 * scale)
            .is_some_and(|v| *v < 0.0)
    };
    if flip {
        b.neg_mut();
    }
}

fn project_values(curve: &FunctionalCurve, model: &FpcaModel) -> Result<Vec<f64>> {
    if !curve.same_basis(&model.mean) {
        return Err(Error::BasisMismatch);
    }
    let centered = curve.sub(&model.mean)?.coefficient_vector();
    let weighted = &model.gram * centered;
    Ok(model
        .components
        .iter()
        .map(|pc| pc.coefficient_vector().dot(&weighted))
        .collect())
}

/// Scores `s_i = ⟨curve − μ, PC_i⟩` in the `L2` inner product.
pub fn fpca_project(curve: &FunctionalCurve, model: &FpcaModel) -> Result<ScoreVector> {
    Ok(ScoreVector::new(project_values(curve, model)?))
}

/// `μ(t) + Σ_{i<n} s_i PC_i(t)` in coefficient space.
pub fn reconstruct(model: &FpcaModel, scores: &ScoreVector, n: usize) -> Result<FunctionalCurve> {
    if n > model.n_components() || n > scores.len() {
        return Err(Error::invalid(format!(
            "cannot use {n} components (model has {}, scores have {})",
            model.n_components(),
            scores.len()
        )));
    }
    let mut curve = model.mean.clone();
    for (pc, &s) in model.components.iter().zip(&scores.values).take(n) {
        curve = curve.add_scaled(pc, s)?;
    }
    Ok(curve)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    basis: BSplineBasis,
    settings: CurveSettings,
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    variance_fraction: Vec<f64>,
    training_scores: Vec<Vec<f64>>,
    labels: Vec<CurveLabel>,
    #[serde(default)]
    group_counts: BTreeMap<String, usize>,
}

impl FpcaModel {
    pub fn to_json(&self) -> Result<String> {
        let mut group_counts = BTreeMap::new();
        for l in &self.labels {
            *group_counts.entry(l.group.clone()).or_insert(0) += 1;
        }
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            basis: (*self.basis).clone(),
            settings: self.settings.clone(),
            mean: self.mean.coefficients().to_vec(),
            components: self.components.iter().map(|c| c.coefficients().to_vec()).collect(),
            eigenvalues: self.eigenvalues.clone(),
            variance_fraction: self.variance_fraction.clone(),
            training_scores: self.training_scores.clone(),
            labels: self.labels.clone(),
            group_counts,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::Format(format!(
                "model file version {} is not supported (expected {MODEL_FILE_VERSION})",
                file.version
            )));
        }
        let k = file.components.len();
        if file.eigenvalues.len() != k
            || file.variance_fraction.len() != k
            || file.training_scores.iter().any(|r| r.len() != k)
            || file.training_scores.len() != file.labels.len()
        {
            return Err(Error::Format("inconsistent model dimensions".into()));
        }
        let basis = Arc::new(file.basis);
        let mean = FunctionalCurve::new(basis.clone(), file.mean)?;
        let components = file
            .components
            .into_iter()
            .map(|c| FunctionalCurve::new(basis.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        let gram = basis.gram_matrix();
        Ok(FpcaModel {
            basis,
            settings: file.settings,
            mean,
            components,
            eigenvalues: file.eigenvalues,
            variance_fraction: file.variance_fraction,
            training_scores: file.training_scores,
            labels: file.labels,
            gram,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
