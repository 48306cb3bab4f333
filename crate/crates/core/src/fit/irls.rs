//! Logistic maximum likelihood by Newton / iteratively reweighted least
//! squares for the two-coefficient model `logit p = alpha0 + alpha1 * x`.

use crate::binary::BinaryTable;
use crate::error::{Error, Result};
use crate::model::{bernoulli_log_mass, logistic};

const MAX_ITER: usize = 50;
const SCORE_TOL: f64 = 1e-8;
const DIVERGENCE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsFit {
    pub alpha0: f64,
    pub alpha1: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Maximised Bernoulli log-likelihood.
    pub log_lik: f64,
    /// Inverse observed information at the estimate.
    pub covariance: [[f64; 2]; 2],
}

pub fn irls_fit(table: &BinaryTable) -> Result<IrlsFit> {
    let xs: Vec<f64> = table.rows.iter().map(|r| r.x).collect();
    let ys: Vec<bool> = table.rows.iter().map(|r| r.y).collect();
    irls_fit_xy(&xs, &ys)
}

/// Outcomes are separated when some threshold on `x` classifies every row,
/// allowing ties at the threshold (quasi-complete separation).
fn separated(xs: &[f64], ys: &[bool]) -> bool {
    let (mut min1, mut max1, mut min0, mut max0) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (&x, &y) in xs.iter().zip(ys) {
        if y {
            min1 = min1.min(x);
            max1 = max1.max(x);
        } else {
            min0 = min0.min(x);
            max0 = max0.max(x);
        }
    }
    // an empty class leaves infinities, which also counts as separated
    max0 <= min1 || max1 <= min0
}

struct Sums {
    score: [f64; 2],
    info: [[f64; 2]; 2],
    log_lik: f64,
}

fn sums(xs: &[f64], ys: &[bool], b0: f64, b1: f64) -> Sums {
    let mut s = Sums { score: [0.0; 2], info: [[0.0; 2]; 2], log_lik: 0.0 };
    for (&x, &y) in xs.iter().zip(ys) {
        let z = b0 + b1 * x;
        let p = logistic(z);
        let r = f64::from(u8::from(y)) - p;
        let w = p * (1.0 - p);
        s.score[0] += r;
        s.score[1] += x * r;
        s.info[0][0] += w;
        s.info[0][1] += w * x;
        s.info[1][1] += w * x * x;
        s.log_lik += bernoulli_log_mass(y, z);
    }
    s.info[1][0] = s.info[0][1];
    s
}

fn invert(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs() * m[1][1].abs();
    if !(det.is_finite() && det > 1e-14 * scale && det > 0.0) {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// Fits `logit P(y) = alpha0 + alpha1 * x` starting from zero.
///
/// The covariate is centred internally; convergence is judged on the score
/// in the original parameterisation (`max |score| < 1e-8`), with at most 50
/// Newton steps and step halving whenever the likelihood would decrease.
pub fn irls_fit_xy(xs: &[f64], ys: &[bool]) -> Result<IrlsFit> {
    if xs.len() != ys.len() {
        return Err(Error::Validation("covariate and outcome lengths differ".into()));
    }
    if xs.len() < 2 {
        return Err(Error::Validation(format!("need at least 2 rows, got {}", xs.len())));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("non-finite covariate".into()));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let centred: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    if centred.iter().all(|&c| c == 0.0) {
        return Err(Error::Singular("covariate is constant, slope not identifiable".into()));
    }
    if separated(xs, ys) {
        return Err(Error::Separation);
    }

    // centred intercept c0 = alpha0 + alpha1 * mean
    let (mut c0, mut c1) = (0.0, 0.0);
    let mut cur = sums(&centred, ys, c0, c1);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let s0 = cur.score[0];
        let s1 = cur.score[1] + mean * cur.score[0];
        if s0.abs().max(s1.abs()) < SCORE_TOL {
            converged = true;
            break;
        }
        if iterations == MAX_ITER {
            break;
        }
        iterations += 1;
        let inv = invert(cur.info).ok_or_else(|| Error::Singular("weighted design is rank deficient".into()))?;
        let d0 = inv[0][0] * cur.score[0] + inv[0][1] * cur.score[1];
        let d1 = inv[1][0] * cur.score[0] + inv[1][1] * cur.score[1];
        let mut step = 1.0;
        let mut next = sums(&centred, ys, c0 + d0, c1 + d1);
        let mut halvings = 0;
        // decreases at rounding level are not evidence of overshooting
        let floor = cur.log_lik - 1e-12 * (1.0 + cur.log_lik.abs());
        while next.log_lik < floor && halvings < 30 {
            step *= 0.5;
            halvings += 1;
            next = sums(&centred, ys, c0 + step * d0, c1 + step * d1);
        }
        if next.log_lik < floor {
            // no ascent possible at working precision
            break;
        }
        c0 += step * d0;
        c1 += step * d1;
        cur = next;
    }

    let alpha1 = c1;
    let alpha0 = c0 - c1 * mean;
    if !converged && (alpha0.abs() > DIVERGENCE || alpha1.abs() > DIVERGENCE) {
        return Err(Error::Separation);
    }
    // covariance of (alpha0, alpha1) from the centred one: A = [[1, -mean], [0, 1]]
    let cc = invert(cur.info).ok_or_else(|| Error::Singular("weighted design is rank deficient".into()))?;
    let v11 = cc[1][1];
    let v01 = cc[0][1] - mean * v11;
    let v00 = cc[0][0] - 2.0 * mean * cc[0][1] + mean * mean * v11;
    Ok(IrlsFit {
        alpha0,
        alpha1,
        converged,
        iterations,
        log_lik: cur.log_lik,
        covariance: [[v00, v01], [v01, v11]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn simulate(n: usize, a0: f64, a1: f64, seed: u64) -> (Vec<f64>, Vec<bool>) {
        let mut rng = rng_from_seed(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let ys = xs.iter().map(|&x| rng.random::<f64>() < logistic(a0 + a1 * x)).collect();
        (xs, ys)
    }

    #[test]
    fn intercept_only_data() {
        // y independent of a centred x, mean(y) = 1/4 exactly
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|k| ((k / 4) % 2) as f64 * 2.0 - 1.0).collect();
        let ys: Vec<bool> = (0..n).map(|k| k % 4 == 0).collect();
        let fit = irls_fit_xy(&xs, &ys).unwrap();
        assert!(fit.converged);
        assert!(fit.alpha1.abs() < 1e-3);
        assert!((fit.alpha0 - (0.25f64 / 0.75).ln()).abs() < 1e-3);
    }

    #[test]
    fn separation_detected() {
        let xs: Vec<f64> = (-5..5).map(f64::from).collect();
        let ys: Vec<bool> = xs.iter().map(|&x| x > 0.0).collect();
        assert!(matches!(irls_fit_xy(&xs, &ys), Err(Error::Separation)));
        let ys = vec![false; xs.len()];
        assert!(matches!(irls_fit_xy(&xs, &ys), Err(Error::Separation)));
        // ties at the boundary: quasi-complete
        let xs = [0.0, 1.0, 1.0, 2.0];
        let ys = [false, false, true, true];
        assert!(matches!(irls_fit_xy(&xs, &ys), Err(Error::Separation)));
    }

    #[test]
    fn constant_covariate_rejected() {
        let xs = [1.0; 6];
        let ys = [true, false, true, false, false, false];
        assert!(matches!(irls_fit_xy(&xs, &ys), Err(Error::Singular(_))));
        assert!(irls_fit_xy(&[1.0], &[true]).is_err());
    }

    #[test]
    fn first_order_conditions_and_permutation_invariance() {
        let (xs, ys) = simulate(3000, -1.0, 1.5, 8);
        let fit = irls_fit_xy(&xs, &ys).unwrap();
        assert!(fit.converged);
        let mut s = [0.0, 0.0];
        for (&x, &y) in xs.iter().zip(&ys) {
            let r = f64::from(u8::from(y)) - logistic(fit.alpha0 + fit.alpha1 * x);
            s[0] += r;
            s[1] += x * r;
        }
        assert!(s[0].abs() < 1e-8 && s[1].abs() < 1e-8, "{s:?}");

        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.reverse();
        idx.swap(0, 1500);
        let px: Vec<f64> = idx.iter().map(|&k| xs[k]).collect();
        let py: Vec<bool> = idx.iter().map(|&k| ys[k]).collect();
        let other = irls_fit_xy(&px, &py).unwrap();
        assert!((fit.alpha0 - other.alpha0).abs() < 1e-6);
        assert!((fit.alpha1 - other.alpha1).abs() < 1e-6);
    }

    #[test]
    fn covariance_positive_definite() {
        let (xs, ys) = simulate(500, 0.5, -0.7, 2);
        let c = irls_fit_xy(&xs, &ys).unwrap().covariance;
        assert!(c[0][0] > 0.0 && c[1][1] > 0.0);
        assert!(c[0][0] * c[1][1] - c[0][1] * c[1][0] > 0.0);
    }
}
