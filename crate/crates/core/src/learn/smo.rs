use serde::{Deserialize, Serialize};

use super::cache::KernelRows;
use super::{KernelSpec, SvmError};

pub const MODEL_VERSION: u32 = 1;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    /// Recorded in the model metadata only; the solver itself is deterministic.
    pub seed: u64,
    pub max_iter: usize,
}

impl SvmParams {
    pub fn new(kernel: KernelSpec, c: f64) -> Self {
        Self { kernel, c, tol: 1e-3, seed: 0, max_iter: 10_000_000 }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub n_samples: usize,
    pub n_features: usize,
    pub seed: u64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub version: u32,
    pub kernel: KernelSpec,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub bias: f64,
    pub dual_coefs: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
    pub train_meta: TrainMeta,
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.train_meta.n_features
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SvmError> {
        let m: SvmModel = serde_json::from_str(s).map_err(|e| SvmError::Format(e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(SvmError::Format(format!("unsupported version {}", m.version)));
        }
        if m.dual_coefs.len() != m.support_vectors.len() {
            return Err(SvmError::Format("coefficient count differs from support vector count".into()));
        }
        if m.support_vectors.iter().any(|sv| sv.len() != m.train_meta.n_features) {
            return Err(SvmError::Format("support vector dimension differs from n_features".into()));
        }
        Ok(m)
    }
}

/// Training result with the full dual vector, for inspection.
#[derive(Clone, Debug)]
pub struct SvmFit {
    pub model: SvmModel,
    pub alpha: Vec<f64>,
    pub support_indices: Vec<usize>,
}

pub fn svm_train(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmModel, SvmError> {
    svm_train_full(x, y, params).map(|f| f.model)
}

pub fn svm_train_full(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmFit, SvmError> {
    validate(x, y, params)?;
    let rows = KernelRows::new(x, params.kernel);
    Ok(solve(x, y, params, rows))
}

#[cfg(test)]
pub(crate) fn svm_train_with_cache_limits(
    x: &[Vec<f64>],
    y: &[i8],
    params: &SvmParams,
    full_limit: usize,
    lru_rows: usize,
) -> Result<SvmFit, SvmError> {
    validate(x, y, params)?;
    let rows = KernelRows::with_limits(x, params.kernel, full_limit, lru_rows);
    Ok(solve(x, y, params, rows))
}

fn validate(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<(), SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::LabelCount { rows: x.len(), labels: y.len() });
    }
    if x.len() < 2 {
        return Err(SvmError::TooFewSamples(x.len()));
    }
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(SvmError::InvalidParameter(format!("C must be positive, got {}", params.c)));
    }
    if !(params.tol.is_finite() && params.tol > 0.0) {
        return Err(SvmError::InvalidParameter(format!("tol must be positive, got {}", params.tol)));
    }
    if !params.kernel.is_valid() {
        return Err(SvmError::InvalidParameter("RBF gamma must be finite and positive".into()));
    }
    let d = x[0].len();
    for row in x {
        if row.len() != d {
            return Err(SvmError::DimMismatch { expected: d, actual: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFiniteInput);
        }
    }
    if let Some(&bad) = y.iter().find(|&&l| l != 1 && l != -1) {
        return Err(SvmError::BadLabel(bad));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(SvmError::DegenerateLabels);
    }
    Ok(())
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Maximal violating pair (i from the up set, j from the low set) and the gap m - M.
fn select_pair(yf: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> Option<(usize, usize, f64)> {
    let mut gmax = f64::NEG_INFINITY;
    let mut gmin = f64::INFINITY;
    let (mut bi, mut bj) = (usize::MAX, usize::MAX);
    for t in 0..alpha.len() {
        let v = -yf[t] * grad[t];
        if in_up(yf[t], alpha[t], c) && v > gmax {
            gmax = v;
            bi = t;
        }
        if in_low(yf[t], alpha[t], c) && v < gmin {
            gmin = v;
            bj = t;
        }
    }
    if bi == usize::MAX || bj == usize::MAX {
        return None;
    }
    Some((bi, bj, gmax - gmin))
}

fn solve(x: &[Vec<f64>], y: &[i8], params: &SvmParams, mut rows: KernelRows<'_>) -> SvmFit {
    let n = x.len();
    let c = params.c;
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let mut alpha = vec![0.0; n];
    // Gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
    let mut grad = vec![-1.0; n];
    let mut iterations = 0usize;
    #[cfg(debug_assertions)]
    let mut prev_obj = 0.0f64;

    while iterations < params.max_iter {
        let Some((i, j, gap)) = select_pair(&yf, &alpha, &grad, c) else {
            break;
        };
        if gap < params.tol {
            break;
        }
        iterations += 1;
        let ki = rows.row(i);
        let kj = rows.row(j);
        let (yi, yj) = (yf[i], yf[j]);
        let kii = rows.diag(i);
        let kjj = rows.diag(j);
        let kij = ki[j];
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let mut quad = kii + kjj - 2.0 * kij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_ai, old_aj);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let dai = (ai - old_ai) * yi;
        let daj = (aj - old_aj) * yj;
        for t in 0..n {
            grad[t] += yf[t] * (ki[t] * dai + kj[t] * daj);
        }
        #[cfg(debug_assertions)]
        {
            // f = 1/2 a'Qa - e'a = 1/2 sum a_t (G_t - 1); the dual objective is -f.
            let obj: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() * 0.5;
            let scale = 1.0 + obj.abs().max(prev_obj.abs());
            debug_assert!(obj <= prev_obj + 1e-9 * scale, "SMO step increased the primal-form objective");
            prev_obj = obj;
        }
    }

    let rho = compute_rho(&yf, &alpha, &grad, c);
    let kkt_residual = select_pair(&yf, &alpha, &grad, c).map_or(0.0, |(_, _, g)| g.max(0.0));
    let support_indices: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let model = SvmModel {
        version: MODEL_VERSION,
        kernel: params.kernel,
        c,
        tol: params.tol,
        bias: -rho,
        dual_coefs: support_indices.iter().map(|&t| alpha[t] * yf[t]).collect(),
        support_vectors: support_indices.iter().map(|&t| x[t].clone()).collect(),
        train_meta: TrainMeta { n_samples: n, n_features: x[0].len(), seed: params.seed, iterations, kkt_residual },
    };
    SvmFit { model, alpha, support_indices }
}

fn compute_rho(yf: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = yf[t] * grad[t];
        if alpha[t] >= c {
            if yf[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if yf[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

pub fn svm_decision(model: &SvmModel, x: &[f64]) -> Result<f64, SvmError> {
    let d = model.n_features();
    if x.len() != d {
        return Err(SvmError::DimMismatch { expected: d, actual: x.len() });
    }
    let s: f64 =
        model.support_vectors.iter().zip(&model.dual_coefs).map(|(sv, coef)| coef * model.kernel.eval(sv, x)).sum();
    Ok(s + model.bias)
}

/// Dual objective sum(a) - 1/2 a'Qa of a full dual vector.
pub fn dual_objective(x: &[Vec<f64>], y: &[i8], alpha: &[f64], kernel: KernelSpec) -> f64 {
    let n = x.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] == 0.0 {
                continue;
            }
            quad += alpha[i] * alpha[j] * f64::from(y[i]) * f64::from(y[j]) * kernel.eval(&x[i], &x[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation m(a) - M(a) of a dual vector, recomputing the gradient from scratch.
pub fn max_kkt_violation(x: &[Vec<f64>], y: &[i8], alpha: &[f64], kernel: KernelSpec, c: f64) -> f64 {
    let n = x.len();
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| yf[i] * yf[j] * kernel.eval(&x[i], &x[j]) * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    select_pair(&yf, alpha, &grad, c).map_or(0.0, |(_, _, g)| g.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rbf(g: f64) -> KernelSpec {
        KernelSpec::Rbf { gamma: g }
    }

    #[test]
    fn separable_1d() {
        let x = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
        let y = [-1, -1, 1, 1];
        let m = svm_train(&x, &y, &SvmParams::new(KernelSpec::Linear, 10.0)).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(svm_decision(&m, xi).unwrap().signum(), f64::from(yi));
        }
        // Hard-margin solution: w = 1, b = 0.
        assert!(svm_decision(&m, &[0.0]).unwrap().abs() < 1e-3);
    }

    #[test]
    fn degenerate_labels() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            svm_train(&x, &[1, 1], &SvmParams::new(KernelSpec::Linear, 1.0)),
            Err(SvmError::DegenerateLabels)
        ));
        assert!(matches!(
            svm_train(&[vec![f64::NAN], vec![1.0]], &[1, -1], &SvmParams::new(KernelSpec::Linear, 1.0)),
            Err(SvmError::NonFiniteInput)
        ));
    }

    #[test]
    fn decision_checks_dim() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let m = svm_train(&x, &[-1, 1], &SvmParams::new(rbf(1.0), 1.0)).unwrap();
        assert!(matches!(svm_decision(&m, &[0.0]), Err(SvmError::DimMismatch { expected: 2, actual: 1 })));
    }

    #[test]
    fn lru_cache_matches_full_gram() {
        let mut rng = crate::seed::rng(4);
        use rand::Rng;
        let x: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<i8> = x.iter().map(|r| if r[0] * r[1] > 0.0 { 1 } else { -1 }).collect();
        let p = SvmParams::new(rbf(2.0), 5.0);
        let full = svm_train_full(&x, &y, &p).unwrap();
        let lru = svm_train_with_cache_limits(&x, &y, &p, 10, 4).unwrap();
        assert_eq!(full.alpha, lru.alpha);
        assert_eq!(full.model, lru.model);
    }

    #[test]
    fn json_round_trip() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]];
        let m = svm_train(&x, &[1, 1, -1], &SvmParams::new(rbf(0.5), 2.0)).unwrap();
        let back = SvmModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        for key in ["version", "kernel", "C", "tol", "bias", "dual_coefs", "support_vectors"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
