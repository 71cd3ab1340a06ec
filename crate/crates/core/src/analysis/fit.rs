use std::fmt;

use rand::Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::stats::{interval, BootstrapMethod, DEFAULT_BOOTSTRAPS};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::solvers::replica_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFamily {
    /// `y = a (x - b)^2 + c` with `x = ln effort`, `y = ln TTS`.
    QuadraticLog,
    /// `y = a x^-3 + b x + c - 4 (a^3 b)^(1/4) / 3^(3/4)`.
    HfsForm,
    /// `ln p_S = a ln t_f + b`.
    PowerLaw,
    /// `ln y = ln_a + b L`.
    ScalingExp,
    /// `ln y = ln_a + b ln L`.
    ScalingPoly,
    /// `ln y = a + b ln L + c L`.
    ScalingHybrid,
}

impl FitFamily {
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FitFamily::QuadraticLog | FitFamily::HfsForm | FitFamily::ScalingHybrid => &["a", "b", "c"],
            FitFamily::PowerLaw => &["a", "b"],
            FitFamily::ScalingExp | FitFamily::ScalingPoly => &["ln_a", "b"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitFamily::QuadraticLog => "quadratic_log",
            FitFamily::HfsForm => "hfs_form",
            FitFamily::PowerLaw => "power_law",
            FitFamily::ScalingExp => "scaling_exp",
            FitFamily::ScalingPoly => "scaling_poly",
            FitFamily::ScalingHybrid => "scaling_hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [
            FitFamily::QuadraticLog,
            FitFamily::HfsForm,
            FitFamily::PowerLaw,
            FitFamily::ScalingExp,
            FitFamily::ScalingPoly,
            FitFamily::ScalingHybrid,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::param(format!("unknown fit family {s:?}")))
    }

    /// Model value at `x` for parameters in `param_names` order. Scaling
    /// families take `L` and return `ln TTS`.
    pub fn eval<F: Real>(self, params: &[F], x: F) -> F {
        match self {
            FitFamily::QuadraticLog => params[0] * (x - params[1]).powi(2) + params[2],
            FitFamily::HfsForm => hfs_value(params[0], params[1], params[2], x),
            FitFamily::PowerLaw => params[0] * x.ln() + params[1],
            FitFamily::ScalingExp => params[0] + params[1] * x,
            FitFamily::ScalingPoly => params[0] + params[1] * x.ln(),
            FitFamily::ScalingHybrid => params[0] + params[1] * x.ln() + params[2] * x,
        }
    }
}

impl fmt::Display for FitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the intervals of a fit were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Student-t interval from the linearized covariance.
    Asymptotic,
    /// Percentile interval over refits to residual-resampled data.
    ResidualBootstrap,
    /// Percentile interval over refits to caller-supplied resampled data sets.
    Resampled,
    /// Value plus or minus a tabulated error.
    Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: DeserializeOwned"))]
pub struct FitParam<F> {
    pub name: String,
    pub value: F,
    pub ci: (F, F),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: DeserializeOwned"))]
pub struct FitResult<F = f64> {
    pub family: FitFamily,
    pub params: Vec<FitParam<F>>,
    pub ci_method: CiMethod,
    /// Root of the residual sum of squares; absent for tabulated fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_norm: Option<F>,
    pub n_points: usize,
    /// Optimal effort `e^b` for convex quadratic fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<F>,
    /// Optimal TTS `e^c` for convex quadratic fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tts_star: Option<F>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl<F: Real> FitResult<F> {
    fn assemble(family: FitFamily, values: &[F], ci: &[(F, F)], ci_method: CiMethod, residual_norm: F, n_points: usize) -> Self {
        let params = family
            .param_names()
            .iter()
            .zip(values)
            .zip(ci)
            .map(|((name, &value), &ci)| FitParam { name: (*name).to_string(), value, ci })
            .collect();
        Self { family, params, ci_method, residual_norm: Some(residual_norm), n_points, t_star: None, tts_star: None, flags: Vec::new() }
    }

    /// Stored fit from tabulated values and symmetric errors.
    pub fn reference(family: FitFamily, values: &[F], errors: &[F]) -> Result<Self> {
        let k = family.param_names().len();
        if values.len() != k || errors.len() != k {
            return Err(Error::data(format!("{family} needs {k} values and errors")));
        }
        let ci: Vec<(F, F)> = values.iter().zip(errors).map(|(&v, &e)| (v - e, v + e)).collect();
        let mut fit = Self::assemble(family, values, &ci, CiMethod::Reference, F::zero(), 0);
        fit.residual_norm = None;
        if family == FitFamily::QuadraticLog && values[0] > F::zero() {
            fit.t_star = Some(values[1].exp());
            fit.tts_star = Some(values[2].exp());
        }
        Ok(fit)
    }

    pub fn values(&self) -> Vec<F> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn param(&self, name: &str) -> Option<F> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn ci_of(&self, name: &str) -> Option<(F, F)> {
        self.params.iter().find(|p| p.name == name).map(|p| p.ci)
    }

    pub fn eval(&self, x: F) -> F {
        self.family.eval(&self.values(), x)
    }
}

/// How to attach intervals to a quadratic fit.
#[derive(Clone, Debug)]
pub enum QuadraticCi<F> {
    ResidualBootstrap { n_boot: usize, seed: u64 },
    /// Refit each resampled data set, e.g. built from gauge or instance resamples.
    Resampled(Vec<Vec<(F, F)>>),
}

impl<F> Default for QuadraticCi<F> {
    fn default() -> Self {
        QuadraticCi::ResidualBootstrap { n_boot: DEFAULT_BOOTSTRAPS, seed: 0 }
    }
}

/// Least squares for `y = a (x - b)^2 + c` on `(ln effort, ln TTS)` points,
/// with residual-bootstrap intervals.
pub fn fit_quadratic_log<F: Real>(points: &[(F, F)]) -> Result<FitResult<F>> {
    fit_quadratic_log_with(points, &QuadraticCi::default())
}

pub fn fit_quadratic_log_with<F: Real>(points: &[(F, F)], ci: &QuadraticCi<F>) -> Result<FitResult<F>> {
    if points.len() < 4 {
        return Err(Error::param(format!("quadratic fit needs at least 4 points, got {}", points.len())));
    }
    check_finite(points)?;
    let xs: Vec<F> = points.iter().map(|p| p.0).collect();
    let ys: Vec<F> = points.iter().map(|p| p.1).collect();
    let center = xs.iter().copied().sum::<F>() / F::from_usize_lossy(xs.len());
    let design: Vec<Vec<F>> = xs.iter().map(|&x| vec![(x - center).powi(2), x - center, F::one()]).collect();
    let lin = lstsq(&design, &ys)?;
    let values = quadratic_params(&lin.coef, center);

    let convex = values[0] > F::zero();
    let samples: Vec<[F; 3]> = match ci {
        QuadraticCi::ResidualBootstrap { n_boot, seed } => {
            let fitted: Vec<F> = design.iter().map(|row| dot(row, &lin.coef)).collect();
            let inflate = (F::from_usize_lossy(ys.len()) / F::from_usize_lossy(ys.len() - 3)).sqrt();
            let raw: Vec<F> = ys.iter().zip(&fitted).map(|(&y, &f)| y - f).collect();
            let shift = raw.iter().copied().sum::<F>() / F::from_usize_lossy(raw.len());
            let resid: Vec<F> = raw.iter().map(|&r| (r - shift) * inflate).collect();
            let mut out = Vec::with_capacity(*n_boot);
            let mut y_star = vec![F::zero(); ys.len()];
            for b in 0..*n_boot {
                let mut rng = replica_rng(*seed, b);
                for (slot, &f) in y_star.iter_mut().zip(&fitted) {
                    *slot = f + resid[rng.random_range(0..resid.len())];
                }
                if let Ok(l) = lstsq(&design, &y_star) {
                    out.push(quadratic_params(&l.coef, center));
                }
            }
            out
        }
        QuadraticCi::Resampled(sets) => sets
            .iter()
            .filter_map(|set| {
                let design: Vec<Vec<F>> = set.iter().map(|&(x, _)| vec![(x - center).powi(2), x - center, F::one()]).collect();
                let ys: Vec<F> = set.iter().map(|p| p.1).collect();
                lstsq(&design, &ys).ok().map(|l| quadratic_params(&l.coef, center))
            })
            .collect(),
    };
    // resamples that are not convex have no minimizer and are left out of b's interval
    let mut intervals = Vec::with_capacity(3);
    for k in 0..3 {
        let stats: Vec<F> = samples
            .iter()
            .filter(|s| k != 1 || s[0] > F::zero())
            .map(|s| s[k])
            .filter(|v| v.is_finite())
            .collect();
        if stats.is_empty() {
            intervals.push((F::nan(), F::nan()));
        } else {
            intervals.push(interval(values[k], &stats, BootstrapMethod::Percentile)?);
        }
    }
    let method = match ci {
        QuadraticCi::ResidualBootstrap { .. } => CiMethod::ResidualBootstrap,
        QuadraticCi::Resampled(_) => CiMethod::Resampled,
    };
    let mut fit = FitResult::assemble(FitFamily::QuadraticLog, &values, &intervals, method, lin.rss.sqrt(), points.len());
    if convex {
        fit.t_star = Some(values[1].exp());
        fit.tts_star = Some(values[2].exp());
    } else {
        fit.flags.push("non-convex: a <= 0, no optimal effort".into());
    }
    Ok(fit)
}

/// Map the centred polynomial `p2 u^2 + p1 u + p0`, `u = x - m`, to `(a, b, c)`.
fn quadratic_params<F: Real>(coef: &[F], center: F) -> [F; 3] {
    let (p2, p1, p0) = (coef[0], coef[1], coef[2]);
    let two = F::lit(2.0);
    [p2, center - p1 / (two * p2), p0 - p1 * p1 / (F::lit(4.0) * p2)]
}

/// `4 / 3^(3/4)`.
fn hfs_constant<F: Real>() -> F {
    F::lit(4.0) / F::lit(3.0).powf(F::lit(0.75))
}

fn hfs_value<F: Real>(a: F, b: F, c: F, x: F) -> F {
    a / (x * x * x) + b * x + c - hfs_constant::<F>() * (a * a * a * b).powf(F::lit(0.25))
}

/// Nonlinear least squares for the HFS form. Runs Levenberg-Marquardt in
/// `(ln a, ln b, c)` from a grid of starts and keeps the best.
pub fn fit_hfs_form<F: Real>(points: &[(F, F)]) -> Result<FitResult<F>> {
    if points.len() < 5 {
        return Err(Error::param(format!("HFS fit needs at least 5 points, got {}", points.len())));
    }
    check_finite(points)?;
    if points.iter().any(|&(x, _)| !(x > F::zero())) {
        return Err(Error::param("HFS fit needs x > 0 at every point"));
    }
    let k = hfs_constant::<F>();
    let quarter = F::lit(0.25);
    let model = |theta: &[F]| -> (Vec<F>, Vec<Vec<F>>) {
        let (a, b, c) = (theta[0].exp(), theta[1].exp(), theta[2]);
        let g = (a * a * a * b).powf(quarter);
        let mut r = Vec::with_capacity(points.len());
        let mut jac = Vec::with_capacity(points.len());
        for &(x, y) in points {
            let inv3 = F::one() / (x * x * x);
            r.push(a * inv3 + b * x + c - k * g - y);
            jac.push(vec![a * inv3 - F::lit(0.75) * k * g, b * x - quarter * k * g, F::one()]);
        }
        (r, jac)
    };
    let grid = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0];
    let mut best: Option<(F, Vec<F>)> = None;
    let mut any_converged = false;
    for &a0 in &grid {
        for &b0 in &grid {
            let (a0, b0) = (F::lit(a0), F::lit(b0));
            let c0 = points.iter().map(|&(x, y)| y - hfs_value(a0, b0, F::zero(), x)).sum::<F>()
                / F::from_usize_lossy(points.len());
            let start = [a0.ln(), b0.ln(), c0];
            let Ok(out) = levenberg_marquardt(&model, &start) else { continue };
            any_converged |= out.converged;
            if best.as_ref().is_none_or(|(cost, _)| out.cost < *cost) {
                best = Some((out.cost, out.theta));
            }
        }
    }
    let (cost, theta) = best.ok_or_else(|| Error::Fit("no start produced a finite HFS fit".into()))?;
    if !any_converged {
        return Err(Error::Fit(format!("HFS fit did not converge; best residual norm {}", cost.sqrt())));
    }
    let (a, b, c) = (theta[0].exp(), theta[1].exp(), theta[2]);
    let g = (a * a * a * b).powf(quarter);
    let design: Vec<Vec<F>> = points
        .iter()
        .map(|&(x, _)| {
            vec![F::one() / (x * x * x) - F::lit(0.75) * k * g / a, x - quarter * k * g / b, F::one()]
        })
        .collect();
    let values = [a, b, c];
    let ci = asymptotic_ci(&design, &values, cost, points.len())?;
    Ok(FitResult::assemble(FitFamily::HfsForm, &values, &ci, CiMethod::Asymptotic, cost.sqrt(), points.len()))
}

/// Linear fit of `ln p_S` against `ln t_f`.
pub fn fit_power_law<F: Real>(points: &[(F, F)]) -> Result<FitResult<F>> {
    if points.len() < 3 {
        return Err(Error::param("power-law fit needs at least 3 points"));
    }
    if points.iter().any(|&(t, p)| !(t > F::zero() && p > F::zero() && p <= F::one())) {
        return Err(Error::param("power-law fit needs t_f > 0 and 0 < p_S <= 1"));
    }
    let design: Vec<Vec<F>> = points.iter().map(|&(t, _)| vec![t.ln(), F::one()]).collect();
    let ys: Vec<F> = points.iter().map(|&(_, p)| p.ln()).collect();
    let mut fit = linear_fit(FitFamily::PowerLaw, &design, &ys)?;
    if fit.params[0].value > F::one() {
        fit.flags.push("a > 1: TTS ~ t_f^(1-a) decreases with t_f while p_S is small".into());
    }
    Ok(fit)
}

/// Scaling of `ln TTS*` with size `L`.
pub fn fit_scaling<F: Real>(points: &[(F, F)], family: FitFamily) -> Result<FitResult<F>> {
    let row = |l: F| -> Result<Vec<F>> {
        match family {
            FitFamily::ScalingExp => Ok(vec![F::one(), l]),
            FitFamily::ScalingPoly => Ok(vec![F::one(), l.ln()]),
            FitFamily::ScalingHybrid => Ok(vec![F::one(), l.ln(), l]),
            other => Err(Error::param(format!("{other} is not a scaling family"))),
        }
    };
    let k = family.param_names().len();
    if points.len() < k + 1 {
        return Err(Error::param(format!("{family} needs at least {} sizes, got {}", k + 1, points.len())));
    }
    check_finite(points)?;
    if points.iter().any(|&(l, _)| !(l > F::zero())) {
        return Err(Error::param("sizes must be positive"));
    }
    let design = points.iter().map(|&(l, _)| row(l)).collect::<Result<Vec<_>>>()?;
    let ys: Vec<F> = points.iter().map(|p| p.1).collect();
    linear_fit(family, &design, &ys)
}

fn linear_fit<F: Real>(family: FitFamily, design: &[Vec<F>], ys: &[F]) -> Result<FitResult<F>> {
    let lin = lstsq(design, ys)?;
    let ci = asymptotic_ci(design, &lin.coef, lin.rss, ys.len())?;
    Ok(FitResult::assemble(family, &lin.coef, &ci, CiMethod::Asymptotic, lin.rss.sqrt(), ys.len()))
}

/// Student-t 95% intervals from `s^2 (J^T J)^-1`.
fn asymptotic_ci<F: Real>(design: &[Vec<F>], values: &[F], rss: F, n: usize) -> Result<Vec<(F, F)>> {
    let p = values.len();
    let dof = n.saturating_sub(p);
    if dof == 0 {
        return Ok(values.iter().map(|&v| (v, v)).collect());
    }
    let cov = lstsq(design, &vec![F::zero(); n])?.xtx_inv;
    let s2 = rss / F::from_usize_lossy(dof);
    let t = StudentsT::new(0.0, 1.0, dof as f64)
        .map_err(|e| Error::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let half = F::lit(t) * (s2 * cov[k][k]).max(F::zero()).sqrt();
            (v - half, v + half)
        })
        .collect())
}

fn check_finite<F: Real>(points: &[(F, F)]) -> Result<()> {
    if points.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::param("fit points must be finite"));
    }
    Ok(())
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

struct LinearSolution<F> {
    coef: Vec<F>,
    /// `(X^T X)^-1`
    xtx_inv: Vec<Vec<F>>,
    rss: F,
}

/// Least squares by modified Gram-Schmidt QR of the design matrix.
fn lstsq<F: Real>(design: &[Vec<F>], ys: &[F]) -> Result<LinearSolution<F>> {
    let n = design.len();
    let p = design.first().map_or(0, Vec::len);
    if n < p || p == 0 {
        return Err(Error::Fit(format!("least squares with {n} rows and {p} columns")));
    }
    let mut q: Vec<Vec<F>> = (0..p).map(|k| design.iter().map(|row| row[k]).collect()).collect();
    let mut r = vec![vec![F::zero(); p]; p];
    for k in 0..p {
        for j in 0..k {
            let proj = dot(&q[j], &q[k]);
            r[j][k] = proj;
            let qj = q[j].clone();
            q[k].iter_mut().zip(&qj).for_each(|(v, &u)| *v -= proj * u);
        }
        let norm = dot(&q[k], &q[k]).sqrt();
        let scale = design.iter().map(|row| row[k].abs()).fold(F::zero(), F::max);
        if !(norm > F::epsilon() * F::lit(1e3) * scale.max(F::one())) {
            return Err(Error::Fit("design matrix is rank deficient".into()));
        }
        r[k][k] = norm;
        q[k].iter_mut().for_each(|v| *v = *v / norm);
    }
    let qty: Vec<F> = q.iter().map(|col| dot(col, ys)).collect();
    let mut coef = vec![F::zero(); p];
    for k in (0..p).rev() {
        let s = (k + 1..p).fold(qty[k], |acc, j| acc - r[k][j] * coef[j]);
        coef[k] = s / r[k][k];
    }
    // R^-1 by back substitution, then (X^T X)^-1 = R^-1 R^-T
    let mut rinv = vec![vec![F::zero(); p]; p];
    for col in 0..p {
        for k in (0..=col).rev() {
            let target = if k == col { F::one() } else { F::zero() };
            let s = (k + 1..=col).fold(target, |acc, j| acc - r[k][j] * rinv[j][col]);
            rinv[k][col] = s / r[k][k];
        }
    }
    let xtx_inv = (0..p)
        .map(|i| (0..p).map(|j| (0..p).map(|k| rinv[i][k] * rinv[j][k]).sum()).collect())
        .collect();
    let rss = design.iter().zip(ys).map(|(row, &y)| (y - dot(row, &coef)).powi(2)).sum();
    Ok(LinearSolution { coef, xtx_inv, rss })
}

struct LmOutcome<F> {
    theta: Vec<F>,
    cost: F,
    converged: bool,
}

/// Damped Gauss-Newton with Marquardt scaling. Stops when an accepted step
/// changes the cost by less than 1e-10 relative, or after 10^4 iterations.
fn levenberg_marquardt<F: Real>(model: &impl Fn(&[F]) -> (Vec<F>, Vec<Vec<F>>), start: &[F]) -> Result<LmOutcome<F>> {
    const MAX_ITER: usize = 10_000;
    let tol = F::lit(1e-10);
    let p = start.len();
    let mut theta = start.to_vec();
    let (mut r, mut jac) = model(&theta);
    let mut cost: F = r.iter().map(|&v| v * v).sum();
    if !cost.is_finite() {
        return Err(Error::Fit("non-finite residual at start".into()));
    }
    let mut lambda = F::lit(1e-3);
    for _ in 0..MAX_ITER {
        if cost == F::zero() {
            return Ok(LmOutcome { theta, cost, converged: true });
        }
        let mut jtj = vec![vec![F::zero(); p]; p];
        let mut jtr = vec![F::zero(); p];
        for (row, &ri) in jac.iter().zip(&r) {
            for a in 0..p {
                jtr[a] += row[a] * ri;
                for b in 0..p {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        loop {
            let mut damped = jtj.clone();
            for a in 0..p {
                damped[a][a] += lambda * jtj[a][a].max(F::epsilon());
            }
            let step = solve_dense(damped, jtr.iter().map(|&v| -v).collect());
            let trial: Option<Vec<F>> = step.map(|s| theta.iter().zip(&s).map(|(&t, &d)| t + d).collect());
            if let Some(trial) = trial {
                let (r_new, jac_new) = model(&trial);
                let c_new: F = r_new.iter().map(|&v| v * v).sum();
                if c_new.is_finite() && c_new <= cost {
                    let rel = (cost - c_new) / cost;
                    theta = trial;
                    r = r_new;
                    jac = jac_new;
                    cost = c_new;
                    lambda = (lambda / F::lit(10.0)).max(F::lit(1e-12));
                    if rel < tol {
                        return Ok(LmOutcome { theta, cost, converged: true });
                    }
                    break;
                }
            }
            lambda = lambda * F::lit(10.0);
            if lambda > F::lit(1e16) {
                // no descent direction left at working precision
                return Ok(LmOutcome { theta, cost, converged: true });
            }
        }
    }
    Ok(LmOutcome { theta, cost, converged: false })
}

/// Gaussian elimination with partial pivoting.
fn solve_dense<F: Real>(mut m: Vec<Vec<F>>, mut rhs: Vec<F>) -> Option<Vec<F>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if !(m[piv][col].abs() > F::zero()) {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let s = (i + 1..n).fold(rhs[i], |acc, j| acc - m[i][j] * x[j]);
        x[i] = s / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
