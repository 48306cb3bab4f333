//! Derivative-free maximum likelihood for the spatial ILM, used on its own
//! and to start the sampler near the posterior mode.

use crate::error::{Error, Result};
use crate::likelihood::IlmLikelihood;
use crate::model::IlmParams;

/// Minimises `f` with the Nelder-Mead simplex method.
pub fn nelder_mead<F>(f: F, start: &[f64], step: &[f64], max_evals: usize, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), f(start)));
    for k in 0..d {
        let mut p = start.to_vec();
        p[k] += step[k];
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut evals = d + 1;
    let key = |v: f64| if v.is_nan() { f64::INFINITY } else { v };

    while evals < max_evals {
        simplex.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)));
        let (lo, hi) = (key(simplex[0].1), key(simplex[d].1));
        if (hi - lo).abs() <= tol * (lo.abs() + tol) {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|(p, _)| p[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[d].0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = key(f(&xr));
        evals += 1;
        if fr < key(simplex[0].1) {
            let xe = along(-2.0);
            let fe = key(f(&xe));
            evals += 1;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < key(simplex[d - 1].1) {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < hi {
                let x = along(-0.5);
                let v = key(f(&x));
                (x, v)
            } else {
                let x = along(0.5);
                let v = key(f(&x));
                (x, v)
            };
            evals += 1;
            if fc < hi.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = best.iter().zip(&entry.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let v = key(f(&p));
                    *entry = (p, v);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)));
    simplex.swap_remove(0)
}

/// Maximum-likelihood fit of the spatial ILM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlmMle {
    pub params: IlmParams,
    pub log_lik: f64,
    /// Inverse of the numerical observed information in `(alpha, beta)`,
    /// when it is positive definite.
    pub covariance: Option<[[f64; 2]; 2]>,
}

/// Coarse grid over `(ln alpha, beta)` followed by Nelder-Mead refinement.
pub fn ilm_mle(lik: &IlmLikelihood, alpha_max: f64, beta_max: f64) -> Result<IlmMle> {
    let ll = |la: f64, b: f64| lik.log_likelihood(la.exp(), b).value;
    let la_hi = (0.98 * alpha_max).ln();
    let la_lo = la_hi - 12.0;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for ka in 0..=24 {
        let la = la_lo + (la_hi - la_lo) * f64::from(ka) / 24.0;
        for kb in 0..20 {
            let b = beta_max * (f64::from(kb) + 0.5) / 20.0;
            let v = ll(la, b);
            if v > best.0 {
                best = (v, la, b);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Validation("ILM likelihood is -inf over the whole search grid".into()));
    }
    let objective = |p: &[f64]| {
        if p[1] <= 0.0 || p[1] >= beta_max || p[0] >= alpha_max.ln() {
            f64::INFINITY
        } else {
            -ll(p[0], p[1])
        }
    };
    let (p, v) = nelder_mead(objective, &[best.1, best.2], &[0.25, 0.25], 600, 1e-12);
    let (alpha, beta) = (p[0].exp(), p[1]);
    let params = IlmParams::new(alpha, beta)?;

    // central-difference Hessian of the log-likelihood in (alpha, beta)
    let f = |a: f64, b: f64| lik.log_likelihood(a, b).value;
    let (ha, hb) = (1e-4 * alpha, 1e-4 * beta.max(1e-2));
    let f00 = f(alpha, beta);
    let faa = (f(alpha + ha, beta) - 2.0 * f00 + f(alpha - ha, beta)) / (ha * ha);
    let fbb = (f(alpha, beta + hb) - 2.0 * f00 + f(alpha, beta - hb)) / (hb * hb);
    let fab = (f(alpha + ha, beta + hb) - f(alpha + ha, beta - hb) - f(alpha - ha, beta + hb)
        + f(alpha - ha, beta - hb))
        / (4.0 * ha * hb);
    let (ia, ib, iab) = (-faa, -fbb, -fab);
    let det = ia * ib - iab * iab;
    let covariance = (ia > 0.0 && ib > 0.0 && det > 0.0 && det.is_finite())
        .then(|| [[ib / det, -iab / det], [-iab / det, ia / det]]);
    Ok(IlmMle { params, log_lik: -v, covariance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let (p, v) = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], 5000, 1e-15);
        assert!(v < 1e-8, "{v}");
        assert!((p[0] - 1.0).abs() < 1e-3 && (p[1] - 1.0).abs() < 1e-3);
    }
}
