//! Linear quantile regression under pinball loss, and ordinary least
//! squares. These two fits are the parametric engines behind every model
//! in the crate: tree nodes, leaves, and the global baselines.
//!
//! The quantile fit minimizes the mean pinball loss with an iteratively
//! reweighted least-squares scheme: the kink of the loss is replaced by a
//! quadratic of width `eps`, the weighted normal equations are solved, and
//! `eps` shrinks geometrically from `smoothing_start`. A final polishing
//! pass re-solves with a near-zero floor and snaps the intercept to the
//! exact empirical quantile of the residuals.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Estimation quantile, constrained to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r > 0.0 && r < 1.0 {
            Ok(Self(r))
        } else {
            Err(Error::InvalidInput(format!(
                "quantile level must satisfy 0 < r < 1, got {r}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for QuantileLevel {
    type Error = Error;
    fn try_from(r: f64) -> Result<Self> {
        Self::new(r)
    }
}

impl From<QuantileLevel> for f64 {
    fn from(r: QuantileLevel) -> f64 {
        r.0
    }
}

/// A fitted linear model `y = intercept + x · coefficients`, tagged with
/// the quantile it estimates and its mean training loss (pinball for
/// quantile fits, squared error for OLS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearQuantileModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub quantile: QuantileLevel,
    pub train_loss: f64,
}

impl LinearQuantileModel {
    /// Feature dimension the model was trained on.
    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }
}

/// Convergence controls for the iteratively reweighted solver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop once the loss decrease per iteration falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial smoothing width, in target units after internal
    /// standardization of `y`.
    pub smoothing_start: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            smoothing_start: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.smoothing_start.is_finite() && self.smoothing_start > 0.0) {
            return Err(Error::InvalidInput(format!(
                "smoothing_start must be > 0, got {}",
                self.smoothing_start
            )));
        }
        Ok(())
    }
}

/// Pinball (check) loss of a single residual.
///
/// Positive residuals are weighted by `r`, negative ones by `1 - r`; the
/// minimizer of its sum is the empirical r-quantile.
pub fn pinball_loss(residual: f64, r: QuantileLevel) -> Result<f64> {
    if !residual.is_finite() {
        return Err(Error::InvalidInput(format!(
            "residual must be finite, got {residual}"
        )));
    }
    Ok(pinball(residual, r.value()))
}

#[inline]
pub(crate) fn pinball(residual: f64, r: f64) -> f64 {
    if residual >= 0.0 {
        r * residual
    } else {
        (r - 1.0) * residual
    }
}

/// Mean pinball loss over paired observation/prediction vectors.
pub fn mean_pinball_loss(y_true: &[f64], y_pred: &[f64], r: QuantileLevel) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::EmptyData);
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    ensure_finite(y_true)?;
    ensure_finite(y_pred)?;
    let tau = r.value();
    let sum: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| pinball(t - p, tau))
        .sum();
    Ok(sum / y_true.len() as f64)
}

/// Evaluate `intercept + X · coefficients` row by row.
pub fn predict_linear(model: &LinearQuantileModel, x: &Array2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.ncols(),
        });
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            model.intercept
                + row
                    .iter()
                    .zip(&model.coefficients)
                    .map(|(v, c)| v * c)
                    .sum::<f64>()
        })
        .collect())
}

pub(crate) fn ensure_finite(values: &[f64]) -> Result<()> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value {} at index {pos}",
            values[pos]
        )));
    }
    Ok(())
}

pub(crate) fn ensure_finite_matrix(x: &Array2<f64>) -> Result<()> {
    if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite value {v} at row {i}, column {j}"
        )));
    }
    Ok(())
}

/// Lowest minimizer of `Σ pinball(v_i - t, r)` over `t`: the
/// `ceil(n * r)`-th order statistic of `values`.
pub(crate) fn empirical_quantile(values: &[f64], r: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let k = ((n as f64 * r).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Intercept-only model: the empirical r-quantile of `y`, with zero
/// coefficients in `d` feature directions. Used for nodes too small to
/// identify a full linear fit.
pub(crate) fn fit_intercept_only(y: &[f64], r: QuantileLevel, d: usize) -> LinearQuantileModel {
    let intercept = empirical_quantile(y, r.value());
    let tau = r.value();
    let train_loss = y.iter().map(|v| pinball(v - intercept, tau)).sum::<f64>() / y.len() as f64;
    LinearQuantileModel {
        intercept,
        coefficients: vec![0.0; d],
        quantile: r,
        train_loss,
    }
}

// Smoothing width shrink factor per iteration, and its hard floor.
const SMOOTHING_SHRINK: f64 = 0.5;
const SMOOTHING_MIN: f64 = 1e-14;
// Floor used by the polishing re-solve.
const POLISH_FLOOR: f64 = 1e-13;

/// Per-column affine rescaling applied to the design before solving; the
/// fitted coefficients are mapped back to original units on output.
struct Standardizer {
    y_mean: f64,
    y_scale: f64,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
}

impl Standardizer {
    fn from_data(x: &Array2<f64>, y: &[f64]) -> Self {
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let y_var = y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
        let y_scale = if y_var > 0.0 { y_var.sqrt() } else { 1.0 };
        let mut x_mean = Vec::with_capacity(x.ncols());
        let mut x_scale = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mu = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            x_mean.push(mu);
            x_scale.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self {
            y_mean,
            y_scale,
            x_mean,
            x_scale,
        }
    }
}

/// Design matrix in standardized coordinates with a leading intercept
/// column, stored flat row-major with stride `p = d + 1`.
struct WorkingProblem {
    z: Vec<f64>,
    ys: Vec<f64>,
    n: usize,
    p: usize,
}

impl WorkingProblem {
    fn new(x: &Array2<f64>, y: &[f64], std: &Standardizer) -> Self {
        let n = y.len();
        let d = x.ncols();
        let p = d + 1;
        let mut z = Vec::with_capacity(n * p);
        for i in 0..n {
            z.push(1.0);
            for j in 0..d {
                z.push((x[[i, j]] - std.x_mean[j]) / std.x_scale[j]);
            }
        }
        let ys = y.iter().map(|v| (v - std.y_mean) / std.y_scale).collect();
        Self { z, ys, n, p }
    }

    fn residuals_into(&self, beta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for i in 0..self.n {
            let row = &self.z[i * self.p..(i + 1) * self.p];
            let fit: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            out.push(self.ys[i] - fit);
        }
    }

    fn mean_pinball(&self, beta: &[f64], tau: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let row = &self.z[i * self.p..(i + 1) * self.p];
            let fit: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            total += pinball(self.ys[i] - fit, tau);
        }
        total / self.n as f64
    }

    /// One weighted normal-equation solve of the smoothed objective:
    /// `(Σ z zᵀ / m_i) β = Σ z (y_i / m_i + (2τ - 1))` with
    /// `m_i = max(|u_i|, eps)`.
    fn reweighted_solve(&self, residuals: &[f64], eps: f64, tau: f64) -> Vec<f64> {
        let p = self.p;
        let mut a = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        let shift = 2.0 * tau - 1.0;
        for i in 0..self.n {
            let w = 1.0 / residuals[i].abs().max(eps);
            let row = &self.z[i * p..(i + 1) * p];
            let target = w * self.ys[i] + shift;
            for r in 0..p {
                let zr = row[r];
                b[r] += zr * target;
                let wz = w * zr;
                for c in r..p {
                    a[r * p + c] += wz * row[c];
                }
            }
        }
        for r in 1..p {
            for c in 0..r {
                a[r * p + c] = a[c * p + r];
            }
        }
        linalg::solve_spsd(&a, &b, p).x
    }

    /// Plain least-squares solve, used to seed the iteration.
    fn least_squares_seed(&self) -> Vec<f64> {
        let p = self.p;
        let mut a = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        for i in 0..self.n {
            let row = &self.z[i * p..(i + 1) * p];
            for r in 0..p {
                b[r] += row[r] * self.ys[i];
                for c in r..p {
                    a[r * p + c] += row[r] * row[c];
                }
            }
        }
        for r in 1..p {
            for c in 0..r {
                a[r * p + c] = a[c * p + r];
            }
        }
        linalg::solve_spsd(&a, &b, p).x
    }

    /// Interpolating solution through the `p` rows of `basis`.
    fn vertex_for_basis(&self, basis: &[usize]) -> Option<Vec<f64>> {
        let p = self.p;
        let mut a = vec![0.0; p * p];
        let mut b = vec![0.0; p];
        for (slot, &i) in basis.iter().enumerate() {
            a[slot * p..(slot + 1) * p].copy_from_slice(&self.z[i * p..(i + 1) * p]);
            b[slot] = self.ys[i];
        }
        linalg::solve_square(&a, &b, p)
    }

    /// Greedy selection of `p` linearly independent rows, visited in order
    /// of increasing |residual|. Returns `None` when the design is rank
    /// deficient.
    fn independent_rows_by_residual(&self, residuals: &[f64]) -> Option<Vec<usize>> {
        let p = self.p;
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&i, &j| residuals[i].abs().partial_cmp(&residuals[j].abs()).unwrap());
        let mut basis = Vec::with_capacity(p);
        // Rows accepted so far, kept in eliminated form.
        let mut reduced: Vec<Vec<f64>> = Vec::with_capacity(p);
        let mut pivots: Vec<usize> = Vec::with_capacity(p);
        for &i in &order {
            let mut row = self.z[i * p..(i + 1) * p].to_vec();
            let norm = row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            for (r, &pc) in reduced.iter().zip(&pivots) {
                let f = row[pc] / r[pc];
                if f != 0.0 {
                    for c in 0..p {
                        row[c] -= f * r[c];
                    }
                }
            }
            let (piv_col, piv_val) = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(c, v)| (c, v.abs()))
                .unwrap();
            if piv_val > 1e-9 * (1.0 + norm) {
                basis.push(i);
                reduced.push(row);
                pivots.push(piv_col);
                if basis.len() == p {
                    return Some(basis);
                }
            }
        }
        None
    }

    /// Exact minimizer of `t -> Σ pinball(u_i - t * s_i)` with
    /// `s_i = z_i · delta`. The function is convex piecewise linear; the
    /// sweep finds the kink where the subderivative crosses zero and
    /// returns it together with the row that becomes binding there.
    fn exact_line_minimum(&self, residuals: &[f64], delta: &[f64], tau: f64) -> Option<(f64, usize)> {
        let p = self.p;
        let mut slopes = Vec::with_capacity(self.n);
        let mut max_abs = 0.0_f64;
        for i in 0..self.n {
            let row = &self.z[i * p..(i + 1) * p];
            let s: f64 = row.iter().zip(delta).map(|(a, b)| a * b).sum();
            max_abs = max_abs.max(s.abs());
            slopes.push(s);
        }
        if max_abs == 0.0 {
            return None;
        }
        let cutoff = 1e-12 * max_abs;
        let mut kinks: Vec<(f64, f64, usize)> = Vec::new();
        let mut derivative = 0.0;
        for (i, &s) in slopes.iter().enumerate() {
            if s.abs() <= cutoff {
                continue;
            }
            derivative += if s > 0.0 { -s * tau } else { -s * (tau - 1.0) };
            kinks.push((residuals[i] / s, s.abs(), i));
        }
        kinks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (t, jump, row) in kinks {
            derivative += jump;
            if derivative >= 0.0 {
                return Some((t, row));
            }
        }
        None
    }

    /// Vertex descent: starting from the iterate in `best`, walk over
    /// interpolation vertices (each defined by `p` binding rows) along
    /// exact line searches that relax one binding row at a time. The
    /// objective is convex and piecewise linear, so a vertex none of whose
    /// edges improve is a global minimizer.
    fn vertex_descent(&self, tau: f64, best: &mut [f64], best_loss: &mut f64) {
        const MAX_EXCHANGES: usize = 200;
        let p = self.p;
        if self.n < p {
            return;
        }
        let mut residuals = Vec::with_capacity(self.n);
        self.residuals_into(best, &mut residuals);
        let Some(mut basis) = self.independent_rows_by_residual(&residuals) else {
            return;
        };
        let Some(mut beta) = self.vertex_for_basis(&basis) else {
            return;
        };
        let mut loss = self.mean_pinball(&beta, tau);
        if loss < *best_loss {
            *best_loss = loss;
            best.copy_from_slice(&beta);
        }
        self.residuals_into(&beta, &mut residuals);

        let mut unit = vec![0.0; p];
        'rounds: for _ in 0..MAX_EXCHANGES {
            for slot in 0..p {
                // Edge direction that releases basis[slot] while keeping
                // the other binding rows interpolated.
                let mut a = vec![0.0; p * p];
                for (s, &i) in basis.iter().enumerate() {
                    a[s * p..(s + 1) * p].copy_from_slice(&self.z[i * p..(i + 1) * p]);
                }
                unit.fill(0.0);
                unit[slot] = 1.0;
                let Some(delta) = linalg::solve_square(&a, &unit, p) else {
                    continue;
                };
                let Some((t_star, entering)) = self.exact_line_minimum(&residuals, &delta, tau)
                else {
                    continue;
                };
                if t_star == 0.0 || basis.contains(&entering) {
                    continue;
                }
                let mut next_basis = basis.clone();
                next_basis[slot] = entering;
                let Some(next_beta) = self.vertex_for_basis(&next_basis) else {
                    continue;
                };
                let next_loss = self.mean_pinball(&next_beta, tau);
                if next_loss < loss - 1e-15 * (1.0 + loss) {
                    basis = next_basis;
                    beta = next_beta;
                    loss = next_loss;
                    if loss < *best_loss {
                        *best_loss = loss;
                        best.copy_from_slice(&beta);
                    }
                    self.residuals_into(&beta, &mut residuals);
                    continue 'rounds;
                }
            }
            break;
        }
    }

    /// Replace the intercept with the exact empirical quantile of the
    /// intercept-free residuals; never increases the loss.
    fn polish_intercept(&self, beta: &mut [f64], tau: f64) {
        let mut partial = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row = &self.z[i * self.p..(i + 1) * self.p];
            let slope_fit: f64 = row[1..]
                .iter()
                .zip(&beta[1..])
                .map(|(a, b)| a * b)
                .sum();
            partial.push(self.ys[i] - slope_fit);
        }
        beta[0] = empirical_quantile(&partial, tau);
    }
}

/// Fit a linear quantile regression by smoothed-pinball iteratively
/// reweighted least squares.
///
/// Rank-deficient designs are not an error: degenerate directions get
/// exactly zero coefficients and the fit degrades gracefully toward an
/// intercept-only empirical quantile.
pub fn fit_quantile_regression(
    x: &Array2<f64>,
    y: &[f64],
    r: QuantileLevel,
    cfg: &SolverConfig,
) -> Result<LinearQuantileModel> {
    cfg.validate()?;
    let n = x.nrows();
    if n == 0 || y.is_empty() {
        return Err(Error::EmptyData);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    ensure_finite_matrix(x)?;
    ensure_finite(y)?;

    let tau = r.value();
    let std = Standardizer::from_data(x, y);
    let problem = WorkingProblem::new(x, y, &std);

    let mut beta = problem.least_squares_seed();
    let mut best = beta.clone();
    let mut best_loss = problem.mean_pinball(&beta, tau);
    let mut prev_loss = best_loss;
    let mut eps = cfg.smoothing_start;
    let eps_converged = cfg.tolerance.max(1e-12);
    let mut residuals = Vec::with_capacity(n);

    for _ in 0..cfg.max_iterations {
        problem.residuals_into(&beta, &mut residuals);
        let next = problem.reweighted_solve(&residuals, eps, tau);
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        beta = next;
        let loss = problem.mean_pinball(&beta, tau);
        if loss < best_loss {
            best_loss = loss;
            best.copy_from_slice(&beta);
        }
        let improvement = (prev_loss - loss).abs();
        prev_loss = loss;
        if improvement < cfg.tolerance && eps <= eps_converged {
            break;
        }
        eps = (eps * SMOOTHING_SHRINK).max(SMOOTHING_MIN);
    }

    // Polishing pass: exact intercept step, one near-interpolating
    // re-solve, then vertex descent to the exact optimum.
    beta.copy_from_slice(&best);
    problem.polish_intercept(&mut beta, tau);
    let loss = problem.mean_pinball(&beta, tau);
    if loss <= best_loss {
        best_loss = loss;
        best.copy_from_slice(&beta);
    }
    problem.residuals_into(&beta, &mut residuals);
    let next = problem.reweighted_solve(&residuals, POLISH_FLOOR, tau);
    if next.iter().all(|v| v.is_finite()) {
        let loss = problem.mean_pinball(&next, tau);
        if loss < best_loss {
            best_loss = loss;
            best.copy_from_slice(&next);
        }
    }
    problem.vertex_descent(tau, &mut best, &mut best_loss);
    // Keep the exact-quantile intercept form whenever it ties the optimum,
    // so intercept-only quantiles come out exact.
    beta.copy_from_slice(&best);
    problem.polish_intercept(&mut beta, tau);
    if problem.mean_pinball(&beta, tau) <= best_loss {
        best.copy_from_slice(&beta);
    }

    // Map back to original units.
    let d = x.ncols();
    let mut coefficients = Vec::with_capacity(d);
    let mut intercept = std.y_mean + std.y_scale * best[0];
    for j in 0..d {
        let c = best[j + 1] * std.y_scale / std.x_scale[j];
        coefficients.push(c);
        intercept -= c * std.x_mean[j];
    }
    if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::FitFailure(
            "quantile regression produced non-finite coefficients".into(),
        ));
    }

    let model = LinearQuantileModel {
        intercept,
        coefficients,
        quantile: r,
        train_loss: 0.0,
    };
    let preds = predict_linear(&model, x)?;
    let train_loss = mean_pinball_loss(y, &preds, r)?;
    Ok(LinearQuantileModel {
        train_loss,
        ..model
    })
}

/// Ordinary least squares through the centered normal equations, with a
/// ridge-jitter fallback on singular systems. The `quantile` field is set
/// to 0.5 by convention and `train_loss` stores the mean squared error.
pub fn fit_ols(x: &Array2<f64>, y: &[f64]) -> Result<LinearQuantileModel> {
    let n = x.nrows();
    if n == 0 || y.is_empty() {
        return Err(Error::EmptyData);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    ensure_finite_matrix(x)?;
    ensure_finite(y)?;

    let d = x.ncols();
    let std = Standardizer::from_data(x, y);
    // Centered + scaled design needs no intercept column; the intercept
    // is recovered from the means afterwards.
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    let mut row = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            row[j] = (x[[i, j]] - std.x_mean[j]) / std.x_scale[j];
        }
        let ys = (y[i] - std.y_mean) / std.y_scale;
        for r in 0..d {
            b[r] += row[r] * ys;
            for c in r..d {
                a[r * d + c] += row[r] * row[c];
            }
        }
    }
    for r in 1..d {
        for c in 0..r {
            a[r * d + c] = a[c * d + r];
        }
    }
    let beta_s = if d > 0 {
        linalg::solve_with_ridge_fallback(&a, &b, d)
    } else {
        Vec::new()
    };

    let mut coefficients = Vec::with_capacity(d);
    let mut intercept = std.y_mean;
    for j in 0..d {
        let c = beta_s[j] * std.y_scale / std.x_scale[j];
        coefficients.push(c);
        intercept -= c * std.x_mean[j];
    }
    if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::FitFailure(
            "least squares produced non-finite coefficients".into(),
        ));
    }

    let model = LinearQuantileModel {
        intercept,
        coefficients,
        quantile: QuantileLevel::new(0.5).expect("0.5 is a valid level"),
        train_loss: 0.0,
    };
    let preds = predict_linear(&model, x)?;
    let mse = y
        .iter()
        .zip(&preds)
        .map(|(t, p)| (t - p).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok(LinearQuantileModel {
        train_loss: mse,
        ..model
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn q(r: f64) -> QuantileLevel {
        QuantileLevel::new(r).unwrap()
    }

    #[test]
    fn quantile_level_rejects_out_of_range() {
        assert!(QuantileLevel::new(0.0).is_err());
        assert!(QuantileLevel::new(1.0).is_err());
        assert!(QuantileLevel::new(-0.2).is_err());
        assert!(QuantileLevel::new(f64::NAN).is_err());
        assert!(QuantileLevel::new(0.5).is_ok());
    }

    #[test]
    fn pinball_loss_matches_definition() {
        assert_eq!(pinball_loss(0.0, q(0.5)).unwrap(), 0.0);
        assert!((pinball_loss(1.0, q(0.9)).unwrap() - 0.9).abs() < 1e-15);
        assert!((pinball_loss(-1.0, q(0.9)).unwrap() - 0.1).abs() < 1e-15);
        assert!((pinball_loss(-2.0, q(0.25)).unwrap() - 1.5).abs() < 1e-15);
        assert!(pinball_loss(f64::INFINITY, q(0.5)).is_err());
    }

    #[test]
    fn pinball_slopes_by_finite_difference() {
        // Piecewise-linear with slope r on the right, -(1-r) on the left.
        for &r in &[0.1, 0.5, 0.9] {
            let lvl = q(r);
            let h = 1e-6;
            let right = (pinball_loss(1.0 + h, lvl).unwrap() - pinball_loss(1.0, lvl).unwrap()) / h;
            let left =
                (pinball_loss(-1.0 + h, lvl).unwrap() - pinball_loss(-1.0, lvl).unwrap()) / h;
            assert!((right - r).abs() < 1e-6);
            assert!((left + (1.0 - r)).abs() < 1e-6);
        }
    }

    #[test]
    fn mean_pinball_examples() {
        let y = [1.0, 3.0];
        let p = [1.0, 3.0];
        assert_eq!(mean_pinball_loss(&y, &p, q(0.3)).unwrap(), 0.0);
        let zeros = [0.0, 0.0];
        let got = mean_pinball_loss(&y, &zeros, q(0.5)).unwrap();
        assert!((got - 1.0).abs() < 1e-15);
        assert!(mean_pinball_loss(&[], &[], q(0.5)).is_err());
        assert!(mean_pinball_loss(&y, &zeros[..1], q(0.5)).is_err());
    }

    #[test]
    fn intercept_only_returns_empirical_quantile() {
        let x = Array2::<f64>::zeros((5, 1));
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let m = fit_quantile_regression(&x, &y, q(0.5), &SolverConfig::default()).unwrap();
        assert!((m.intercept - 3.0).abs() < 1e-9, "intercept {}", m.intercept);
        assert!(m.coefficients[0].abs() < 1e-9);
    }

    #[test]
    fn perfect_line_has_zero_loss_at_any_quantile() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [1.0, 3.0, 5.0, 7.0];
        for &r in &[0.1, 0.5, 0.9] {
            let m = fit_quantile_regression(&x, &y, q(r), &SolverConfig::default()).unwrap();
            assert!((m.intercept - 1.0).abs() < 1e-6, "r={r} b0={}", m.intercept);
            assert!(
                (m.coefficients[0] - 2.0).abs() < 1e-6,
                "r={r} b1={}",
                m.coefficients[0]
            );
            assert!(m.train_loss < 1e-9, "r={r} loss={}", m.train_loss);
        }
    }

    #[test]
    fn empty_data_is_an_error() {
        let x = Array2::<f64>::zeros((0, 1));
        let y: [f64; 0] = [];
        assert!(matches!(
            fit_quantile_regression(&x, &y, q(0.5), &SolverConfig::default()),
            Err(Error::EmptyData)
        ));
        assert!(matches!(fit_ols(&x, &y), Err(Error::EmptyData)));
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [1.0, 3.0, 5.0, 7.0];
        let m = fit_ols(&x, &y).unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-10);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(m.train_loss < 1e-20);
    }

    #[test]
    fn ols_constant_target_gives_mean_intercept() {
        let x = array![[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]];
        let y = [7.0, 7.0, 7.0];
        let m = fit_ols(&x, &y).unwrap();
        assert!((m.intercept - 7.0).abs() < 1e-12);
        assert!(m.coefficients.iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn ols_singular_design_falls_back_to_ridge() {
        // Duplicate columns: the plain normal equations are singular.
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]];
        let y = [2.0, 4.0, 6.0, 8.0];
        let m = fit_ols(&x, &y).unwrap();
        let preds = predict_linear(&m, &x).unwrap();
        for (p, t) in preds.iter().zip(&y) {
            assert!((p - t).abs() < 1e-4, "pred {p} target {t}");
        }
    }

    #[test]
    fn predict_linear_examples() {
        let m = LinearQuantileModel {
            intercept: 1.0,
            coefficients: vec![2.0],
            quantile: q(0.5),
            train_loss: 0.0,
        };
        let x = array![[0.0], [1.0], [3.0]];
        assert_eq!(predict_linear(&m, &x).unwrap(), vec![1.0, 3.0, 7.0]);

        let constant = LinearQuantileModel {
            intercept: -2.5,
            coefficients: vec![0.0, 0.0],
            quantile: q(0.5),
            train_loss: 0.0,
        };
        let x2 = array![[5.0, 1.0], [9.0, -3.0]];
        assert_eq!(predict_linear(&constant, &x2).unwrap(), vec![-2.5, -2.5]);

        assert!(matches!(
            predict_linear(&m, &x2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn median_fit_beats_half_ols_mae() {
        // The median fit minimizes mean |residual| / 2 over linear models,
        // so it can be no worse than half the OLS fit's MAE.
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [6.0]];
        let y = [0.2, 1.4, 1.9, 3.3, 3.6, 5.5, 30.0];
        let med = fit_quantile_regression(&x, &y, q(0.5), &SolverConfig::default()).unwrap();
        let ols = fit_ols(&x, &y).unwrap();
        let ols_preds = predict_linear(&ols, &x).unwrap();
        let ols_mae = y
            .iter()
            .zip(&ols_preds)
            .map(|(t, p)| (t - p).abs())
            .sum::<f64>()
            / y.len() as f64;
        assert!(med.train_loss <= 0.5 * ols_mae + 1e-8);
    }

    #[test]
    fn coverage_of_fitted_quantiles() {
        // Deterministic pseudo-random single-feature data.
        let mut state = 1234_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 80;
        let xs: Vec<f64> = (0..n).map(|_| next() * 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + (next() - 0.5) * 6.0).collect();
        let x = Array2::from_shape_vec((n, 1), xs).unwrap();
        for &r in &[0.1, 0.5, 0.9] {
            let m = fit_quantile_regression(&x, &ys, q(r), &SolverConfig::default()).unwrap();
            let preds = predict_linear(&m, &x).unwrap();
            let negatives = ys
                .iter()
                .zip(&preds)
                .filter(|(t, p)| *t - **p < 0.0)
                .count() as f64;
            let slack = (m.dim() + 1) as f64;
            assert!(
                negatives >= r * n as f64 - slack && negatives <= r * n as f64 + slack,
                "r={r}: {negatives} negative residuals of {n}"
            );
        }
    }

    #[test]
    fn scaling_equivariance_of_loss() {
        let x = array![[0.5], [1.5], [2.0], [4.0], [5.5], [7.0]];
        let y = [1.0, 0.5, 2.5, 3.0, 2.0, 6.0];
        let scaled: Vec<f64> = y.iter().map(|v| v * 37.0).collect();
        for &r in &[0.25, 0.5, 0.75] {
            let base = fit_quantile_regression(&x, &y, q(r), &SolverConfig::default()).unwrap();
            let big = fit_quantile_regression(&x, &scaled, q(r), &SolverConfig::default()).unwrap();
            let ratio = big.train_loss / base.train_loss.max(1e-300);
            assert!(
                (ratio - 37.0).abs() < 1e-3,
                "r={r}: loss ratio {ratio} (base {} big {})",
                base.train_loss,
                big.train_loss
            );
        }
    }
}
