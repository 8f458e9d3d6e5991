//! Rewards and figures of merit computed from measured intensities.

use crate::error::{Error, Result};
use crate::optics::IntensityImage;

pub const PSNR_CAP_DB: f64 = 100.0;
pub const CLASS_SCORE_TEMPERATURE: f64 = 10.0;

/// Energy ratio of the target region; `degenerate` flags an all-dark frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FocusReward {
    pub value: f64,
    pub degenerate: bool,
}

/// `energies[target] / Σ energies`, or 0 (flagged) when every region is dark.
pub fn reward_focus(energies: &[f64], target: usize) -> Result<FocusReward> {
    if target >= energies.len() {
        return Err(Error::config(format!(
            "target region {target} out of range for {} regions",
            energies.len()
        )));
    }
    if energies.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Data("region energies must be non-negative".into()));
    }
    let total: f64 = energies.iter().sum();
    if total == 0.0 {
        return Ok(FocusReward {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(FocusReward {
        value: energies[target] / total,
        degenerate: false,
    })
}

/// Least-squares gain `⟨m, t⟩/⟨m, m⟩`, 0 for an all-zero measurement.
pub fn gain_fit(measured: &[f64], target: &[f64]) -> f64 {
    let mt: f64 = measured.iter().zip(target).map(|(m, t)| m * t).sum();
    let mm: f64 = measured.iter().map(|m| m * m).sum();
    if mm > 0.0 {
        mt / mm
    } else {
        0.0
    }
}

/// Mean squared error after scaling `measured` by the least-squares gain.
pub fn gain_fitted_mse(measured: &IntensityImage, target: &IntensityImage) -> Result<f64> {
    crate::Error::check_shape(target.shape(), measured.shape())?;
    let g = gain_fit(measured.data(), target.data());
    let n = measured.data().len() as f64;
    Ok(measured
        .data()
        .iter()
        .zip(target.data())
        .map(|(m, t)| (g * m - t).powi(2))
        .sum::<f64>()
        / n)
}

/// `−MSE(g*·measured, target)`.
pub fn reward_hologram(measured: &IntensityImage, target: &IntensityImage) -> Result<f64> {
    Ok(-gain_fitted_mse(measured, target)?)
}

/// `10·log₁₀(1/MSE)` after the gain fit, capped at 100 dB.
pub fn psnr(measured: &IntensityImage, target: &IntensityImage) -> Result<f64> {
    Ok(psnr_from_mse(gain_fitted_mse(measured, target)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse < 1e-10 {
        PSNR_CAP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB)
    }
}

/// Michelson contrast `(max − min)/(max + min)`, 0 for an all-zero profile.
pub fn contrast(profile: &[f64]) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::Data("contrast of an empty profile".into()));
    }
    if profile.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Data("contrast profile must be non-negative".into()));
    }
    let (lo, hi) = profile
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(if hi + lo == 0.0 { 0.0 } else { (hi - lo) / (hi + lo) })
}

/// Contrast along the horizontal slice through the image centre.
pub fn center_contrast(image: &IntensityImage) -> Result<f64> {
    contrast(image.row(image.shape().rows / 2))
}

/// `softmax(10·e/Σe)`; uniform when all energies are zero.
pub fn class_scores(energies: &[f64]) -> Result<Vec<f64>> {
    if energies.is_empty() || energies.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Data("class scores need non-negative energies".into()));
    }
    let total: f64 = energies.iter().sum();
    let n = energies.len() as f64;
    if total == 0.0 {
        return Ok(vec![1.0 / n; energies.len()]);
    }
    let logits: Vec<f64> = energies.iter().map(|e| CLASS_SCORE_TEMPERATURE * e / total).collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / z).collect())
}

/// Index of the largest value; the first on ties.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Shape;

    #[test]
    fn focus_examples() {
        let mut e = vec![0.0; 10];
        e[4] = 2.0;
        assert_eq!(reward_focus(&e, 4).unwrap().value, 1.0);
        assert!((reward_focus(&[1.0; 10], 7).unwrap().value - 0.1).abs() < 1e-15);
        let e = [3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(reward_focus(&e, 0).unwrap().value, 0.25);
        let dark = reward_focus(&[0.0; 10], 0).unwrap();
        assert!(dark.degenerate && dark.value == 0.0);
    }

    #[test]
    fn hologram_gain_and_dark_frame() {
        let shape = Shape::new(2, 2);
        let t = IntensityImage::new(shape, vec![0.0, 1.0, 0.5, 0.25]).unwrap();
        let m = IntensityImage::new(shape, t.data().iter().map(|v| 7.5 * v).collect()).unwrap();
        assert!(reward_hologram(&m, &t).unwrap().abs() < 1e-15);
        let dark = IntensityImage::zeros(shape);
        let mean_sq = t.data().iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert_eq!(reward_hologram(&dark, &t).unwrap(), -mean_sq);
    }

    #[test]
    fn psnr_examples() {
        let shape = Shape::new(2, 2);
        let t = IntensityImage::new(shape, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(psnr(&t, &t).unwrap(), PSNR_CAP_DB);
        assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-12);
        assert_eq!(psnr_from_mse(1.0), 0.0);
    }

    #[test]
    fn contrast_examples() {
        assert_eq!(contrast(&[2.0; 5]).unwrap(), 0.0);
        assert_eq!(contrast(&[0.0, 4.0, 1.0]).unwrap(), 1.0);
        assert_eq!(contrast(&[1.0, 3.0, 1.0, 3.0]).unwrap(), 0.5);
        assert_eq!(contrast(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn class_score_examples() {
        let mut e = vec![0.0; 10];
        e[6] = 1.0;
        let s = class_scores(&e).unwrap();
        assert_eq!(argmax(&s), 6);
        assert!(s.iter().enumerate().all(|(i, &v)| i == 6 || v < s[6]));
        for v in class_scores(&[3.0; 10]).unwrap() {
            assert!((v - 0.1).abs() < 1e-15);
        }
        assert_eq!(class_scores(&[0.0; 10]).unwrap(), vec![0.1; 10]);
    }
}
