//! Depth supervision: robust and L2 penalties, per-frame affine
//! alignment, and batch agreement reports between depth maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raycast::DepthMap;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct RobustLossParams<T> {
    /// Knee between the quadratic and logarithmic branches (scene units).
    pub gamma: T,
    /// Training-loss weight; carried as metadata only.
    pub lambda_robust: T,
}

impl<T: Real> Default for RobustLossParams<T> {
    fn default() -> Self {
        Self { gamma: T::lit(0.1), lambda_robust: T::lit(0.005) }
    }
}

impl<T: Real> RobustLossParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.lambda_robust >= T::zero()) {
            return Err(Error::InvalidArgument(format!("lambda_robust must be >= 0, got {}", self.lambda_robust)));
        }
        Ok(())
    }
}

/// Quadratic below `γ`, logarithmic above:
/// `0.5Δ²` if `Δ < γ`, else `γ²(0.5 + ln(Δ/γ))`, with `Δ = |d_ref − d_pred|`.
///
/// Returns the value and its derivative with respect to `d_pred`.
pub fn robust_depth_loss<T: Real>(d_ref: T, d_pred: T, gamma: T) -> (T, T) {
    let diff = d_pred - d_ref;
    let delta = diff.abs();
    let half = T::lit(0.5);
    if delta < gamma {
        (half * delta * delta, diff)
    } else {
        let g2 = gamma * gamma;
        (g2 * (half + (delta / gamma).ln()), g2 / delta * diff.signum())
    }
}

/// `(d_ref − d_pred)²`.
pub fn l2_depth_loss<T: Real>(d_ref: T, d_pred: T) -> T {
    let d = d_ref - d_pred;
    d * d
}

/// Affine map `α·raw + β` fitted to a target depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScaleShift<T> {
    pub alpha: T,
    pub beta: T,
    /// Sum of squared residuals over the valid pixels.
    pub residual: T,
    pub valid: usize,
    /// Raw depth was constant: `α = 0` and `β` is the target mean.
    pub degenerate: bool,
    pub frame_id: Option<i64>,
}

/// Least-squares `(α, β)` minimizing `Σ(α·raw + β − target)²` over pixels
/// that are unmasked and finite in both inputs.
pub fn fit_scale_shift<T: Real>(raw: &[T], target: &[T], mask: Option<&[bool]>) -> Result<ScaleShift<T>> {
    if raw.len() != target.len() || mask.is_some_and(|m| m.len() != raw.len()) {
        return Err(Error::InvalidArgument("raw, target and mask lengths differ".into()));
    }
    let pairs: Vec<(T, T)> = raw
        .iter()
        .zip(target)
        .enumerate()
        .filter(|&(i, (r, t))| mask.map_or(true, |m| m[i]) && r.is_finite() && t.is_finite())
        .map(|(_, (&r, &t))| (r, t))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Degenerate("no valid pixels to fit scale and shift".into()));
    }
    let n = T::from_usize_lossy(pairs.len());
    let mx = pairs.iter().map(|p| p.0).sum::<T>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let degenerate = !(sxx > T::zero());
    let (alpha, beta) = if degenerate { (T::zero(), my) } else { (sxy / sxx, my - sxy / sxx * mx) };
    let residual = pairs.iter().map(|&(x, y)| l2_depth_loss(y, alpha * x + beta)).sum();
    Ok(ScaleShift { alpha, beta, residual, valid: pairs.len(), degenerate, frame_id: None })
}

/// Agreement statistics for one depth-map pair or the aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub camera_id: Option<i64>,
    pub total_pixels: usize,
    pub valid_pixels: usize,
    pub valid_fraction: f64,
    /// `None` when no pixel is valid in both maps.
    pub mean_robust: Option<f64>,
    pub mean_abs_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub gamma: f64,
    pub lambda_robust: f64,
    pub maps: Vec<Agreement>,
    pub aggregate: Agreement,
}

impl DepthReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let mut out = String::from("camera_id,total_pixels,valid_pixels,valid_fraction,mean_robust,mean_abs_error\n");
        for a in self.maps.iter().chain(std::iter::once(&self.aggregate)) {
            let id = a.camera_id.map_or_else(|| "all".to_string(), |i| i.to_string());
            out.push_str(&format!(
                "{id},{},{},{:.17e},{},{}\n",
                a.total_pixels,
                a.valid_pixels,
                a.valid_fraction,
                opt(a.mean_robust),
                opt(a.mean_abs_error)
            ));
        }
        out
    }
}

fn summarize(camera_id: Option<i64>, total: usize, valid: usize, robust: f64, abs: f64) -> Agreement {
    let some = |s: f64| (valid > 0).then(|| s / valid as f64);
    Agreement {
        camera_id,
        total_pixels: total,
        valid_pixels: valid,
        valid_fraction: if total > 0 { valid as f64 / total as f64 } else { 0.0 },
        mean_robust: some(robust),
        mean_abs_error: some(abs),
    }
}

/// Mean robust loss and mean absolute error per map pair and over all
/// pixels, counting only pixels finite in both maps.
pub fn depth_agreement_report<T: Real>(
    reference: &[DepthMap<T>],
    predicted: &[DepthMap<T>],
    params: &RobustLossParams<T>,
) -> Result<DepthReport> {
    params.validate()?;
    if reference.len() != predicted.len() {
        return Err(Error::InvalidArgument(format!("{} reference maps vs {} predicted", reference.len(), predicted.len())));
    }
    let mut maps = Vec::with_capacity(reference.len());
    let (mut tot, mut val, mut rob, mut abs) = (0usize, 0usize, 0f64, 0f64);
    for (r, p) in reference.iter().zip(predicted) {
        if (r.width, r.height) != (p.width, p.height) {
            return Err(Error::InvalidArgument(format!(
                "camera {}: {}x{} reference vs {}x{} prediction",
                r.camera_id, r.width, r.height, p.width, p.height
            )));
        }
        let (mut v, mut sr, mut sa) = (0usize, 0f64, 0f64);
        for (&a, &b) in r.values().iter().zip(p.values()) {
            if a.is_finite() && b.is_finite() {
                v += 1;
                sr += robust_depth_loss(a, b, params.gamma).0.as_f64();
                sa += (a - b).abs().as_f64();
            }
        }
        let n = r.values().len();
        maps.push(summarize(Some(r.camera_id), n, v, sr, sa));
        tot += n;
        val += v;
        rob += sr;
        abs += sa;
    }
    Ok(DepthReport {
        gamma: params.gamma.as_f64(),
        lambda_robust: params.lambda_robust.as_f64(),
        maps,
        aggregate: summarize(None, tot, val, rob, abs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robust_closed_form() {
        assert_eq!(robust_depth_loss(1.0, 1.0, 0.1), (0.0, 0.0));
        let (v, _) = robust_depth_loss(1.0, 1.2, 0.1);
        assert!((v - 0.01 * (0.5 + 2f64.ln())).abs() < 1e-12);
        // Both branches meet at the knee: adjacent floats agree in value and slope.
        let (lo, dlo) = robust_depth_loss(0.0f64, 0.1f64.next_down(), 0.1);
        let (hi, dhi) = robust_depth_loss(0.0f64, 0.1, 0.1);
        assert!((lo - hi).abs() < 1e-12 && (dlo - dhi).abs() < 1e-12);
    }

    #[test]
    fn robust_is_even() {
        let (a, da) = robust_depth_loss(2.0, 2.5, 0.1);
        let (b, db) = robust_depth_loss(2.5, 2.0, 0.1);
        assert_eq!(a, b);
        assert_eq!(da, -db);
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_depth_loss(2.0, 2.0), 0.0);
        assert_eq!(l2_depth_loss(1.0, 3.0), 4.0);
        assert_eq!(l2_depth_loss(3.0, 1.0), 4.0);
    }

    #[test]
    fn fit_exact_and_degenerate() {
        let raw = [0.5, 1.0, 2.0, 4.0];
        let t: Vec<f64> = raw.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = fit_scale_shift(&raw, &t, None).unwrap();
        assert!((f.alpha - 2.0).abs() < 1e-12 && (f.beta - 1.0).abs() < 1e-12 && f.residual < 1e-20);
        let f = fit_scale_shift(&raw, &raw, None).unwrap();
        assert!((f.alpha - 1.0).abs() < 1e-12 && f.beta.abs() < 1e-12);
        let f = fit_scale_shift(&[3.0, 3.0], &[1.0, 2.0], None).unwrap();
        assert!(f.degenerate && f.alpha == 0.0 && f.beta == 1.5);
        assert!(fit_scale_shift(&[1.0, 2.0], &[1.0, 2.0], Some(&[false, false])).is_err());
        let f = fit_scale_shift(&[1.0, f64::INFINITY, 2.0], &[3.0, 0.0, 5.0], None).unwrap();
        assert_eq!(f.valid, 2);
        assert!((f.alpha - 2.0).abs() < 1e-12);
    }

    #[test]
    fn report_shapes() {
        let inf = f64::INFINITY;
        let a = DepthMap::new(2, 1, 0, vec![1.0, inf]).unwrap();
        let b = DepthMap::new(2, 1, 0, vec![1.5, 2.0]).unwrap();
        let r = depth_agreement_report(&[a.clone()], &[a.clone()], &RobustLossParams::default()).unwrap();
        assert_eq!(r.aggregate.mean_robust, Some(0.0));
        assert_eq!(r.aggregate.valid_fraction, 0.5);
        let r = depth_agreement_report(&[a.clone()], &[b], &RobustLossParams::default()).unwrap();
        assert_eq!(r.maps[0].mean_robust, Some(robust_depth_loss(1.0, 1.5, 0.1).0));
        let c = DepthMap::new(2, 1, 0, vec![inf, 1.0]).unwrap();
        let r = depth_agreement_report(&[a], &[c], &RobustLossParams::default()).unwrap();
        assert_eq!(r.aggregate.valid_fraction, 0.0);
        assert_eq!(r.aggregate.mean_robust, None);
        assert_eq!(r.to_csv().lines().count(), 3);
    }
}
