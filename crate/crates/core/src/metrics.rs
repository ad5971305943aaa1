//! Scoring of decompositions: glottal formant frequency, determination
//! rate, spectral distortion and waveform correlation.

use num_complex::Complex64;

use crate::czt::{self, Decomposition, StrategyKind};
use crate::error::{Error, Result};

/// Everything recorded about one scored decomposition.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub strategy: StrategyKind,
    /// Estimated glottal formant frequency; `None` when the spectrum had no
    /// usable peak.
    pub fg_est: Option<f64>,
    /// Ground-truth glottal formant from the clean reference pulse.
    pub fg_ref: f64,
    pub fg_rel_error: Option<f64>,
    /// True iff the relative error is strictly below 20%.
    pub determined: bool,
    /// Spectral distortion against the reference open-phase pulse, dB.
    pub spectral_distortion: Option<f64>,
    /// False when fewer than 8 spectral bins survived the magnitude floor.
    pub sd_reliable: bool,
    /// Peak normalized cross-correlation between the anticausal wave and the
    /// reference open-phase derivative.
    pub ncc: Option<f64>,
    pub radius: f64,
    pub gap_width: Option<f64>,
    pub n_anticausal: usize,
    pub residual_max: f64,
    pub warnings: Vec<String>,
}

/// Fg relative errors below this threshold count as determined (strict
/// inequality: exactly 20% is *not* determined).
pub const DETERMINATION_THRESHOLD: f64 = 0.20;

/// Spectral bins below this fraction of either spectrum's peak are excluded
/// from the distortion integral.
pub const SD_MAGNITUDE_FLOOR: f64 = 1e-5;

/// Search ceiling for the glottal formant, Hz.
pub const FG_BAND_CAP_HZ: f64 = 1000.0;

/// Frequency of the anticausal magnitude-spectrum maximum over
/// (0, min(8·f0_hint, band_cap)], refined by quadratic interpolation of the
/// log magnitude over the peak's 3-bin neighborhood.
///
/// Returns `None` for a flat spectrum (no usable peak).
pub fn glottal_formant_frequency(
    spectrum: &[Complex64],
    sample_rate: f64,
    f0_hint: f64,
    band_cap_hz: f64,
) -> Option<f64> {
    let k = spectrum.len();
    if k < 8 || !(sample_rate > 0.0) || !(f0_hint > 0.0) {
        return None;
    }
    let f_max = (8.0 * f0_hint).min(band_cap_hz);
    let k_max = ((f_max * k as f64 / sample_rate).floor() as usize).clamp(1, k / 2);

    let mut best = 1usize;
    let mut best_mag = 0.0_f64;
    let mut min_mag = f64::INFINITY;
    for (i, v) in spectrum.iter().enumerate().take(k_max + 1).skip(1) {
        let m = v.norm();
        min_mag = min_mag.min(m);
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    if !(best_mag > 0.0) || best_mag - min_mag <= 1e-12 * best_mag {
        return None; // flat spectrum
    }

    // parabolic refinement on dB magnitudes
    let mut delta = 0.0;
    if best >= 1 && best + 1 < k {
        let db = |i: usize| 20.0 * spectrum[i].norm().max(f64::MIN_POSITIVE).log10();
        let (a, b, c) = (db(best - 1), db(best), db(best + 1));
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Some((best as f64 + delta) * sample_rate / k as f64)
}

/// Percentage of reports whose Fg was determined.
pub fn determination_rate(reports: &[MetricsReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::invalid("determination rate over empty collection"));
    }
    let determined = reports.iter().filter(|r| r.determined).count();
    Ok(100.0 * determined as f64 / reports.len() as f64)
}

/// Spectral distortion between two waves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdMeasure {
    /// RMS log-spectral distance in dB; `None` if no bin survived the floor.
    pub db: Option<f64>,
    pub valid_bins: usize,
    /// False when fewer than 8 bins contributed.
    pub reliable: bool,
}

/// RMS of 20·log10(|X(ω)|/|Y(ω)|) over K/2 uniform ω in (0, π].
///
/// Bins where either magnitude falls below 1e-5 of that spectrum's peak are
/// excluded; with `normalize_gain` the mean log-ratio is subtracted first so
/// the measure compares spectral shape, not level.
pub fn spectral_distortion(
    reference: &[f64],
    estimate: &[f64],
    k: usize,
    normalize_gain: bool,
) -> Result<SdMeasure> {
    if reference.iter().all(|&v| v == 0.0) || estimate.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateInput(
            "spectral distortion of an all-zero wave".into(),
        ));
    }
    let x = czt::chirp_transform_samples(reference, 1.0, k)?;
    let y = czt::chirp_transform_samples(estimate, 1.0, k)?;
    let peak_x = x.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let peak_y = y.iter().fold(0.0_f64, |m, v| m.max(v.norm()));

    let mut ratios = Vec::with_capacity(k / 2);
    for i in 1..=k / 2 {
        let mx = x[i].norm();
        let my = y[i].norm();
        if mx >= SD_MAGNITUDE_FLOOR * peak_x && my >= SD_MAGNITUDE_FLOOR * peak_y {
            ratios.push(20.0 * (mx / my).log10());
        }
    }
    if ratios.is_empty() {
        return Ok(SdMeasure {
            db: None,
            valid_bins: 0,
            reliable: false,
        });
    }
    if normalize_gain {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        for r in ratios.iter_mut() {
            *r -= mean;
        }
    }
    let ms = ratios.iter().map(|r| r * r).sum::<f64>() / ratios.len() as f64;
    Ok(SdMeasure {
        db: Some(ms.sqrt()),
        valid_bins: ratios.len(),
        reliable: ratios.len() >= 8,
    })
}

/// Peak |cross-correlation| over all lags, normalized by the energies.
/// Sign-insensitive: component gain conventions leave polarity undetermined.
pub fn normalized_cross_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let ea: f64 = a.iter().map(|v| v * v).sum();
    let eb: f64 = b.iter().map(|v| v * v).sum();
    if ea == 0.0 || eb == 0.0 || a.is_empty() || b.is_empty() {
        return None;
    }
    let norm = (ea * eb).sqrt();
    let mut best = 0.0_f64;
    let (na, nb) = (a.len() as i64, b.len() as i64);
    for lag in -(nb - 1)..na {
        let mut acc = 0.0;
        for i in 0..na {
            let j = i - lag;
            if j >= 0 && j < nb {
                acc += a[i as usize] * b[j as usize];
            }
        }
        best = best.max(acc.abs());
    }
    Some(best / norm)
}

/// Options shared by the scoring path.
#[derive(Debug, Clone, Copy)]
pub struct ScoreOptions {
    pub sample_rate: f64,
    pub f0_hint: f64,
    pub fg_band_cap_hz: f64,
    pub normalize_sd: bool,
}

/// Scores one decomposition against a clean reference open-phase pulse and
/// its reference Fg.
pub fn score_decomposition(
    decomp: &Decomposition,
    strategy: StrategyKind,
    reference_pulse: &[f64],
    fg_ref: f64,
    opts: &ScoreOptions,
) -> MetricsReport {
    let fg_est = glottal_formant_frequency(
        decomp.anticausal_spectrum(),
        opts.sample_rate,
        opts.f0_hint,
        opts.fg_band_cap_hz,
    );
    let fg_rel_error = fg_est.map(|f| (f - fg_ref).abs() / fg_ref);
    let determined = fg_rel_error.is_some_and(|e| e < DETERMINATION_THRESHOLD);

    let support = (decomp.n_anticausal() + 1).min(decomp.anticausal_wave().len());
    let estimate = &decomp.anticausal_wave()[..support];
    let k = decomp.grid_size();
    let (sd, sd_reliable) =
        match spectral_distortion(reference_pulse, estimate, k, opts.normalize_sd) {
            Ok(m) => (m.db, m.reliable),
            Err(_) => (None, false),
        };
    let ncc = normalized_cross_correlation(reference_pulse, estimate);

    MetricsReport {
        strategy,
        fg_est,
        fg_ref,
        fg_rel_error,
        determined,
        spectral_distortion: sd,
        sd_reliable,
        ncc,
        radius: decomp.radius(),
        gap_width: decomp.contour().gap_width(),
        n_anticausal: decomp.n_anticausal(),
        residual_max: decomp.residual_max(),
        warnings: decomp.warnings().iter().map(|w| w.to_string()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(determined: bool) -> MetricsReport {
        MetricsReport {
            strategy: StrategyKind::Unit,
            fg_est: Some(100.0),
            fg_ref: 100.0,
            fg_rel_error: Some(if determined { 0.1 } else { 0.3 }),
            determined,
            spectral_distortion: None,
            sd_reliable: false,
            ncc: None,
            radius: 1.0,
            gap_width: None,
            n_anticausal: 0,
            residual_max: 0.0,
            warnings: vec![],
        }
    }

    #[test]
    fn formant_peak_of_synthetic_resonance() {
        // single resonance at 150 Hz on a K = 4096 grid at 16 kHz
        let fs = 16000.0;
        let k = 4096;
        let f = 150.0;
        let r = 0.995_f64;
        let spectrum: Vec<Complex64> = (0..k)
            .map(|i| {
                let z =
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / k as f64);
                let pole = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * f / fs);
                ((z - pole) * (z - pole.conj())).inv()
            })
            .collect();
        let got = glottal_formant_frequency(&spectrum, fs, 100.0, 1000.0).unwrap();
        assert!(
            (got - f).abs() < 2.0 * fs / k as f64,
            "got {got} Hz, expected ~{f} Hz"
        );
    }

    #[test]
    fn formant_scaling_invariance() {
        let fs = 16000.0;
        let k = 1024;
        let spectrum: Vec<Complex64> = (0..k)
            .map(|i| Complex64::new(((i as f64 * 0.01).sin() + 1.5) * 0.3, 0.0))
            .collect();
        let a = glottal_formant_frequency(&spectrum, fs, 100.0, 1000.0);
        let scaled: Vec<Complex64> = spectrum.iter().map(|v| v * 1e6).collect();
        let b = glottal_formant_frequency(&scaled, fs, 100.0, 1000.0);
        assert_eq!(a, b);
    }

    #[test]
    fn flat_spectrum_has_no_formant() {
        let spectrum = vec![Complex64::new(1.0, 0.0); 512];
        assert_eq!(
            glottal_formant_frequency(&spectrum, 16000.0, 100.0, 1000.0),
            None
        );
    }

    #[test]
    fn determination_rate_thresholds() {
        let all_good: Vec<_> = (0..4).map(|_| report(true)).collect();
        assert_eq!(determination_rate(&all_good).unwrap(), 100.0);
        let all_bad: Vec<_> = (0..4).map(|_| report(false)).collect();
        assert_eq!(determination_rate(&all_bad).unwrap(), 0.0);
        let half: Vec<_> = (0..4).map(|i| report(i % 2 == 0)).collect();
        assert_eq!(determination_rate(&half).unwrap(), 50.0);
        assert!(determination_rate(&[]).is_err());
    }

    #[test]
    fn exact_twenty_percent_is_not_determined() {
        let rel: f64 = (120.0 - 100.0_f64).abs() / 100.0;
        assert!(!(rel < DETERMINATION_THRESHOLD));
        assert!(0.199_999 < DETERMINATION_THRESHOLD);
    }

    #[test]
    fn sd_identity_is_zero() {
        let x: Vec<f64> = (0..64)
            .map(|i| ((i as f64) * 0.2).sin() * (-(i as f64) / 20.0).exp())
            .collect();
        let m = spectral_distortion(&x, &x, 256, true).unwrap();
        assert!(m.db.unwrap().abs() < 1e-12);
        assert!(m.reliable);
    }

    #[test]
    fn sd_constant_gain() {
        let x: Vec<f64> = (0..64)
            .map(|i| ((i as f64) * 0.2).sin() * (-(i as f64) / 20.0).exp())
            .collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let normalized = spectral_distortion(&x, &y, 256, true).unwrap();
        assert!(normalized.db.unwrap().abs() < 1e-9);
        let raw = spectral_distortion(&x, &y, 256, false).unwrap();
        assert!((raw.db.unwrap() - 20.0 * 2.0_f64.log10()).abs() < 1e-6);
        assert!((raw.db.unwrap() - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn sd_is_symmetric() {
        let x: Vec<f64> = (0..50).map(|i| ((i as f64) * 0.31).sin()).collect();
        let y: Vec<f64> = (0..50).map(|i| ((i as f64) * 0.23).cos() * 0.8).collect();
        let a = spectral_distortion(&x, &y, 256, true).unwrap().db.unwrap();
        let b = spectral_distortion(&y, &x, 256, true).unwrap().db.unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn sd_rejects_zero_wave() {
        let x = vec![1.0, 2.0];
        assert!(spectral_distortion(&x, &[0.0, 0.0], 64, true).is_err());
    }

    #[test]
    fn ncc_detects_shifted_copy() {
        let a: Vec<f64> = (0..40).map(|i| ((i as f64) * 0.3).sin()).collect();
        let mut b = vec![0.0; 10];
        b.extend_from_slice(&a);
        let c = normalized_cross_correlation(&a, &b).unwrap();
        assert!(c > 0.999, "ncc {c}");
        // sign flip should not matter
        let neg: Vec<f64> = b.iter().map(|v| -v).collect();
        let cn = normalized_cross_correlation(&a, &neg).unwrap();
        assert!((c - cn).abs() < 1e-12);
    }
}
