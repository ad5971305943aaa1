//! Chirp Z-transform evaluation and causal/anticausal decomposition.
//!
//! A frame's roots are split at the contour |z| = R; zeros outside the
//! circle form the anticausal (maximum-phase) component, the glottal
//! open-phase estimate, while zeros inside form the causal (minimum-phase)
//! component, the vocal tract response modulated by the source return phase.
//! Evaluating on |z| = R is the Z-transform of x(n)·R^{-n} on the unit
//! circle, so spectra come from a modulated DFT.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::polyroots::{self, RootSet};
use crate::radius::{auto_radius, clamp_t_star, ideal_radius, unit_contour, ChirpContour};
use crate::signal::Frame;

/// Default spectrum grid size: at least 4x the longest frame at 16 kHz and
/// 60 Hz pitch, about 4 Hz of resolution for glottal-formant peak picking.
pub const DEFAULT_GRID: usize = 4096;

/// Roots closer than this to the contour are flagged and assigned causal.
pub const BOUNDARY_ROOT_TOL: f64 = 1e-9;

/// How the separation radius is chosen for one decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// R = 1 (traditional).
    Unit,
    /// Automatic gap detection in the sorted root moduli.
    Auto,
    /// Closed form from a known GCI offset (samples from window start).
    Ideal { t_star: f64 },
}

/// Strategy selector without per-frame data, e.g. for CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Unit,
    Auto,
    Ideal,
}

impl StrategyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyKind::Unit => "unit",
            StrategyKind::Auto => "auto",
            StrategyKind::Ideal => "ideal",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(StrategyKind::Unit),
            "auto" => Ok(StrategyKind::Auto),
            "ideal" => Ok(StrategyKind::Ideal),
            other => Err(Error::invalid(format!(
                "unknown strategy '{other}' (expected unit|auto|ideal)"
            ))),
        }
    }
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Unit => StrategyKind::Unit,
            Strategy::Auto => StrategyKind::Auto,
            Strategy::Ideal { .. } => StrategyKind::Ideal,
        }
    }
}

/// Which component of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Anticausal,
    Causal,
}

/// Non-fatal conditions recorded on a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A root sat within `BOUNDARY_ROOT_TOL` of the contour and was assigned
    /// to the causal side.
    BoundaryRoot { modulus: f64, radius: f64 },
    /// Inverse transform left more imaginary residue than expected from
    /// conjugate-closed roots.
    ImaginaryResidue { side: Side, ratio: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::BoundaryRoot { modulus, radius } => write!(
                f,
                "boundary-root: |Z| = {modulus:.9} within {BOUNDARY_ROOT_TOL:.0e} of R = {radius:.9}; assigned causal"
            ),
            Warning::ImaginaryResidue { side, ratio } => write!(
                f,
                "imaginary-residue: {:?} wave has imag/peak ratio {ratio:.2e}",
                side
            ),
        }
    }
}

/// Anticausal and causal component spectra and waveforms at radius R.
#[derive(Debug, Clone)]
pub struct Decomposition {
    anticausal_spectrum: Vec<Complex64>,
    causal_spectrum: Vec<Complex64>,
    anticausal_wave: Vec<f64>,
    causal_wave: Vec<f64>,
    contour: ChirpContour,
    n_anticausal: usize,
    n_causal: usize,
    residual_max: f64,
    warnings: Vec<Warning>,
}

impl Decomposition {
    pub fn anticausal_spectrum(&self) -> &[Complex64] {
        &self.anticausal_spectrum
    }

    pub fn causal_spectrum(&self) -> &[Complex64] {
        &self.causal_spectrum
    }

    /// Anticausal (maximum-phase) time sequence, shifted so time increases
    /// from index 0; length K with support on the first n_anticausal + 1
    /// samples.
    pub fn anticausal_wave(&self) -> &[f64] {
        &self.anticausal_wave
    }

    pub fn causal_wave(&self) -> &[f64] {
        &self.causal_wave
    }

    pub fn contour(&self) -> &ChirpContour {
        &self.contour
    }

    pub fn radius(&self) -> f64 {
        self.contour.radius()
    }

    pub fn n_anticausal(&self) -> usize {
        self.n_anticausal
    }

    pub fn n_causal(&self) -> usize {
        self.n_causal
    }

    pub fn grid_size(&self) -> usize {
        self.anticausal_spectrum.len()
    }

    /// Factorization residual inherited from the root finder.
    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }
}

fn fft_instance(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .unwrap();
    if forward {
        planner.plan_fft_forward(len)
    } else {
        planner.plan_fft_inverse(len)
    }
}

/// K-point chirp Z-transform of a raw sample slice on the circle |z| = R:
/// the DFT of x(n)·R^{-n} zero-padded to K.
pub fn chirp_transform_samples(samples: &[f64], radius: f64, k: usize) -> Result<Vec<Complex64>> {
    if k < samples.len() {
        return Err(Error::invalid(format!(
            "grid size {k} smaller than frame length {}",
            samples.len()
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("radius {radius} must be positive")));
    }
    // R^{-n} across the frame must stay inside f64 range.
    let span = samples.len() as f64 * radius.ln().abs();
    if span > 700.0 {
        return Err(Error::NumericalFailure(format!(
            "radius {radius} too extreme for frame length {} (modulation overflows)",
            samples.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    let inv_r = 1.0 / radius;
    let mut mod_factor = 1.0;
    for (slot, &x) in buf.iter_mut().zip(samples) {
        *slot = Complex64::new(x * mod_factor, 0.0);
        mod_factor *= inv_r;
    }
    fft_instance(k, true).process(&mut buf);
    Ok(buf)
}

/// Chirp Z-transform of a frame on the given contour.
pub fn chirp_ztransform(frame: &Frame, contour: &ChirpContour, k: usize) -> Result<Vec<Complex64>> {
    chirp_transform_samples(frame.samples(), contour.radius(), k)
}

/// Partitions roots by modulus against the contour radius. Roots within
/// `BOUNDARY_ROOT_TOL` of the circle go to the causal side with a warning.
pub fn split_roots(
    rootset: &RootSet,
    contour: &ChirpContour,
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Warning>) {
    let radius = contour.radius();
    let mut anticausal = Vec::new();
    let mut causal = Vec::new();
    let mut warnings = Vec::new();
    for &root in rootset.roots() {
        let modulus = root.norm();
        if (modulus - radius).abs() < BOUNDARY_ROOT_TOL {
            warnings.push(Warning::BoundaryRoot { modulus, radius });
            causal.push(root);
        } else if modulus > radius {
            anticausal.push(root);
        } else {
            causal.push(root);
        }
    }
    (anticausal, causal, warnings)
}

/// Evaluates one component's spectrum on the contour grid.
///
/// The anticausal side is the bare product Π (z - Z_m) over its group; the
/// causal side carries the gain and delay factor x(0)·z^{-(degree+delay)},
/// so the two sides multiply back to the frame transform. Products are
/// accumulated in log-magnitude/summed-phase form: a linear product over
/// ~500 roots would overflow doubles.
pub fn component_spectrum(
    group: &[Complex64],
    side: Side,
    rootset: &RootSet,
    contour: &ChirpContour,
    k: usize,
) -> Vec<Complex64> {
    match side {
        Side::Anticausal => {
            polyroots::root_product_on_circle(group, 1.0, 0, contour.radius(), k)
        }
        Side::Causal => polyroots::root_product_on_circle(
            group,
            rootset.gain(),
            -((rootset.degree() + rootset.delay()) as i64),
            contour.radius(),
            k,
        ),
    }
}

/// Inverse transform of a component spectrum back to a real sequence.
///
/// The anticausal component's energy lands at the buffer tail (negative
/// times wrap); it is circularly shifted so time increases from index 0.
/// Both sides are demodulated by the appropriate power of R over their
/// support, which is `support_len` samples; beyond it only rounding noise
/// remains and the output is zeroed. Excessive imaginary residue before
/// zeroing is reported as a warning.
pub fn reconstruct_wave(
    spectrum: &[Complex64],
    side: Side,
    support_len: usize,
    radius: f64,
) -> (Vec<f64>, Option<Warning>) {
    let k = spectrum.len();
    let mut buf = spectrum.to_vec();
    fft_instance(k, false).process(&mut buf);
    let scale = 1.0 / k as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }

    let rotation = match side {
        Side::Anticausal => support_len.saturating_sub(1), // n_anticausal
        Side::Causal => 0,
    };
    let mut peak = 0.0_f64;
    let mut imag_peak = 0.0_f64;
    let mut wave = vec![0.0; k];
    for (i, slot) in wave.iter_mut().enumerate().take(support_len.min(k)) {
        let src = buf[(i + k - rotation) % k];
        let demod = match side {
            Side::Anticausal => radius.powi(i as i32 - rotation as i32),
            Side::Causal => radius.powi(i as i32),
        };
        *slot = src.re * demod;
        peak = peak.max(src.re.abs() * demod);
        imag_peak = imag_peak.max(src.im.abs() * demod);
    }
    let warning = if peak > 0.0 && imag_peak > 1e-8 * peak {
        Some(Warning::ImaginaryResidue {
            side,
            ratio: imag_peak / peak,
        })
    } else {
        None
    };
    (wave, warning)
}

/// Full pipeline: root the frame, choose the contour per `strategy`, split,
/// evaluate both spectra and reconstruct both waveforms.
pub fn decompose(frame: &Frame, strategy: Strategy, k: usize) -> Result<Decomposition> {
    let rootset = polyroots::find_roots(frame)?;
    decompose_with_rootset(frame, &rootset, strategy, k)
}

/// Decomposition step reusing an already-computed root set, so several
/// strategies can share one factorization of the same frame.
pub fn decompose_with_rootset(
    frame: &Frame,
    rootset: &RootSet,
    strategy: Strategy,
    k: usize,
) -> Result<Decomposition> {
    let n = frame.samples().len();
    if k < n {
        return Err(Error::invalid(format!(
            "grid size {k} smaller than frame length {n}"
        )));
    }
    // frames may be as short as 2 samples; the bounds formula wants L >= 4
    let l = frame.window_length().max(4);
    let contour = match strategy {
        Strategy::Unit => unit_contour(l)?,
        Strategy::Auto => auto_radius(rootset, l)?,
        Strategy::Ideal { t_star } => ideal_radius(clamp_t_star(t_star, l), l)?,
    };

    let (anti_roots, causal_roots, mut warnings) = split_roots(rootset, &contour);
    let anticausal_spectrum =
        component_spectrum(&anti_roots, Side::Anticausal, rootset, &contour, k);
    let causal_spectrum = component_spectrum(&causal_roots, Side::Causal, rootset, &contour, k);

    let (anticausal_wave, warn_a) = reconstruct_wave(
        &anticausal_spectrum,
        Side::Anticausal,
        anti_roots.len() + 1,
        contour.radius(),
    );
    let (causal_wave, warn_c) =
        reconstruct_wave(&causal_spectrum, Side::Causal, n, contour.radius());
    warnings.extend(warn_a);
    warnings.extend(warn_c);

    Ok(Decomposition {
        anticausal_spectrum,
        causal_spectrum,
        anticausal_wave,
        causal_wave,
        contour,
        n_anticausal: anti_roots.len(),
        n_causal: causal_roots.len(),
        residual_max: rootset.residual_max(),
        warnings,
    })
}

/// Max relative deviation between the product of the component spectra and
/// the frame's chirp Z-transform, over bins above `1e-12` of the spectrum
/// peak. The completeness measure of a decomposition.
pub fn completeness_residual(frame: &Frame, decomp: &Decomposition) -> Result<f64> {
    let k = decomp.grid_size();
    let reference = chirp_ztransform(frame, decomp.contour(), k)?;
    let peak = reference.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let floor = 1e-12 * peak;
    let mut worst = 0.0_f64;
    for ((a, c), r) in decomp
        .anticausal_spectrum
        .iter()
        .zip(&decomp.causal_spectrum)
        .zip(&reference)
    {
        let mag = r.norm();
        if mag > floor {
            worst = worst.max((a * c - r).norm() / mag);
        }
    }
    Ok(worst)
}
