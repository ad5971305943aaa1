//! Synthetic benchmark: Liljencrants-Fant glottal pulse trains through
//! all-pole vowel filters, with controlled GCI-location perturbations.
//!
//! The test grid sweeps open quotient, asymmetry coefficient, pitch, vowel
//! and GCI error; each cell is synthesized, decomposed with one or more
//! strategies, and scored against the clean reference pulse.

use rayon::prelude::*;

use crate::czt::{self, Strategy, StrategyKind};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport, ScoreOptions};
use crate::polyroots;
use crate::signal::{extract_frame, GciSource, GciTrack, SampleBuffer};

/// LF glottal flow derivative parameters.
///
/// `qa` is the return-phase quotient expressed as a fraction of the closed
/// phase: Ta = qa·(1 - oq)·T0. With that convention the return-phase time
/// constant is solvable over the whole parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfParams {
    /// Open quotient, fraction of T0.
    pub oq: f64,
    /// Asymmetry coefficient, fraction of the open phase.
    pub alpha_m: f64,
    /// Fundamental frequency, Hz.
    pub f0: f64,
    /// Return-phase quotient (fraction of the closed phase).
    pub qa: f64,
    /// Excitation amplitude at the GCI.
    pub ee: f64,
}

impl LfParams {
    pub fn new(oq: f64, alpha_m: f64, f0: f64, qa: f64, ee: f64) -> Result<Self> {
        let p = Self {
            oq,
            alpha_m,
            f0,
            qa,
            ee,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.4..=0.9).contains(&self.oq) {
            return Err(Error::invalid(format!("oq {} outside [0.4, 0.9]", self.oq)));
        }
        if !(0.6..=0.9).contains(&self.alpha_m) {
            return Err(Error::invalid(format!(
                "alpha_m {} outside [0.6, 0.9]",
                self.alpha_m
            )));
        }
        if !(60.0..=180.0).contains(&self.f0) {
            return Err(Error::invalid(format!("f0 {} outside [60, 180] Hz", self.f0)));
        }
        if !(0.0..1.0).contains(&self.qa) {
            return Err(Error::invalid(format!("qa {} outside [0, 1)", self.qa)));
        }
        if !(self.ee > 0.0) {
            return Err(Error::invalid("ee must be positive"));
        }
        Ok(())
    }
}

/// Vowels available from the built-in formant table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vowel {
    A,
    E,
    I,
    U,
}

impl Vowel {
    pub const ALL: [Vowel; 4] = [Vowel::A, Vowel::E, Vowel::I, Vowel::U];

    pub fn as_str(&self) -> &'static str {
        match self {
            Vowel::A => "a",
            Vowel::E => "e",
            Vowel::I => "i",
            Vowel::U => "u",
        }
    }
}

impl std::fmt::Display for Vowel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Vowel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Vowel::A),
            "e" => Ok(Vowel::E),
            "i" => Ok(Vowel::I),
            "u" => Ok(Vowel::U),
            other => Err(Error::invalid(format!(
                "unknown vowel '{other}' (expected a|e|i|u)"
            ))),
        }
    }
}

/// Formant frequencies/bandwidths (Hz) of the 4-resonator cascade per vowel,
/// canonical male values. Bandwidths stay at or above 80 Hz so every
/// impulse response decays below 1e-4 of its peak within 50 ms.
pub const VOWEL_FORMANTS: [(Vowel, [(f64, f64); 4]); 4] = [
    (
        Vowel::A,
        [
            (700.0, 130.0),
            (1220.0, 90.0),
            (2600.0, 160.0),
            (3300.0, 250.0),
        ],
    ),
    (
        Vowel::E,
        [
            (480.0, 90.0),
            (1900.0, 100.0),
            (2500.0, 150.0),
            (3300.0, 250.0),
        ],
    ),
    (
        Vowel::I,
        [
            (280.0, 80.0),
            (2250.0, 120.0),
            (2900.0, 180.0),
            (3450.0, 280.0),
        ],
    ),
    (
        Vowel::U,
        [
            (310.0, 80.0),
            (870.0, 90.0),
            (2250.0, 160.0),
            (3350.0, 300.0),
        ],
    ),
];

/// One cell of the synthetic test grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestCondition {
    pub lf: LfParams,
    pub vowel: Vowel,
    /// GCI location error as a signed fraction of T0, in [-0.5, 0.5].
    pub gci_error: f64,
    pub sample_rate: u32,
}

impl TestCondition {
    pub fn validate(&self) -> Result<()> {
        self.lf.validate()?;
        if !(-0.5..=0.5).contains(&self.gci_error) {
            return Err(Error::invalid(format!(
                "gci_error {} outside [-0.5, 0.5]",
                self.gci_error
            )));
        }
        if self.sample_rate < 8000 {
            return Err(Error::invalid(
                "sample rate below 8 kHz cannot carry the formant table",
            ));
        }
        Ok(())
    }
}

/// A synthesized utterance with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticUtterance {
    pub speech: SampleBuffer,
    pub true_glottal_derivative: SampleBuffer,
    pub true_gcis: GciTrack,
    pub condition: TestCondition,
    /// Rounded pitch period in samples.
    pub t0_samples: usize,
    /// GCI offset within each period (= oq·T0), samples.
    pub te_offset: f64,
}

/// Solves eps·Ta = 1 - exp(-eps·Tcl) for the return-phase constant eps > 0.
/// Newton from 1/Ta with a bisection safeguard; requires Ta < Tcl.
fn solve_epsilon(ta: f64, tcl: f64) -> Result<f64> {
    if !(ta > 0.0 && tcl > ta) {
        return Err(Error::NumericalFailure(format!(
            "return phase needs 0 < Ta < Tcl (Ta = {ta}, Tcl = {tcl})"
        )));
    }
    let g = |e: f64| e * ta - 1.0 + (-e * tcl).exp();
    // g < 0 just above zero, g -> +inf; bracket then polish
    let mut lo = 1e-12 / tcl;
    let mut hi = 1.0 / ta;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 / ta {
            return Err(Error::NumericalFailure("epsilon bracket expansion failed".into()));
        }
    }
    let mut e = 1.0 / ta;
    for _ in 0..200 {
        let ge = g(e);
        if ge > 0.0 {
            hi = e;
        } else {
            lo = e;
        }
        let dg = ta - tcl * (-e * tcl).exp();
        let mut next = if dg != 0.0 { e - ge / dg } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - e).abs() <= 1e-12 * e.abs() {
            return Ok(next);
        }
        e = next;
    }
    Ok(e)
}

/// Return-phase samples for integer t in (te, T0), and their sum.
fn return_phase(lf: &LfParams, t0: f64, te: f64, eps: Option<f64>, ta: f64) -> (Vec<f64>, f64) {
    let tcl = t0 - te;
    let first = (te.floor() as usize) + 1;
    let last = t0.ceil() as usize; // exclusive
    let mut out = Vec::with_capacity(last.saturating_sub(first));
    let mut sum = 0.0;
    for n in first..last {
        let t = n as f64;
        let v = match eps {
            Some(e) => {
                let tail = (-e * tcl).exp();
                -(lf.ee / (e * ta)) * ((-e * (t - te)).exp() - tail)
            }
            // qa = 0: abrupt closure, no return phase
            None => 0.0,
        };
        out.push(v);
        sum += v;
    }
    (out, sum)
}

/// Open-phase sum Σ_{0<=n<=te} E0(a)·exp(a·n)·sin(wg·n) as a function of the
/// growth rate a, with E0 pinned so the value at te is -Ee.
fn open_phase_sum(lf: &LfParams, te: f64, wg: f64, alpha: f64) -> f64 {
    let sin_te = (wg * te).sin();
    let mut sum = 0.0;
    let mut n = 0.0;
    while n <= te {
        sum += (alpha * (n - te)).exp() * (wg * n).sin();
        n += 1.0;
    }
    -lf.ee * sum / sin_te
}

/// One period of the LF glottal flow derivative, sampled at integer offsets.
///
/// The growing-sinusoid rate alpha is solved so the sampled pulse sums to
/// zero over the period (net flow balance on the discrete grid); the
/// return-phase constant comes from the standard continuity relation.
pub fn lf_pulse(lf: &LfParams, t0_samples: usize) -> Result<Vec<f64>> {
    lf.validate()?;
    if t0_samples < 16 {
        return Err(Error::invalid(format!(
            "period of {t0_samples} samples too short"
        )));
    }
    let t0 = t0_samples as f64;
    let te = lf.oq * t0;
    let tp = lf.alpha_m * te;
    let tcl = t0 - te;
    let ta = lf.qa * tcl;
    let wg = std::f64::consts::PI / tp;

    let eps = if ta > 1e-9 * t0 {
        Some(solve_epsilon(ta, tcl)?)
    } else {
        None
    };
    let (ret, ret_sum) = return_phase(lf, t0, te, eps, ta);

    // Solve open_phase_sum(alpha) = -ret_sum. The sum runs from +inf (alpha
    // -> -inf) down toward 0- (alpha -> +inf); bracket by scanning.
    let target = -ret_sum;
    let f = |a: f64| open_phase_sum(lf, te, wg, a) - target;
    let scale = 1.0 / te;
    let mut bracket = None;
    let mut prev = (-60.0 * scale, f(-60.0 * scale));
    let mut x = -60.0;
    while x < 60.0 {
        x += 0.5;
        let a = x * scale;
        let fa = f(a);
        if prev.1.signum() != fa.signum() {
            bracket = Some((prev.0, a));
            break;
        }
        prev = (a, fa);
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::NumericalFailure("LF alpha bracket not found over scan range".into())
    })?;
    // safeguarded Newton (secant-slope variant) with bisection fallback
    let mut flo = f(lo);
    let mut alpha = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fa = f(alpha);
        if fa == 0.0 {
            break;
        }
        if fa.signum() == flo.signum() {
            lo = alpha;
            flo = fa;
        } else {
            hi = alpha;
        }
        let h = 1e-7 * scale.max(alpha.abs());
        let df = (f(alpha + h) - fa) / h;
        let mut next = if df != 0.0 { alpha - fa / df } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - alpha).abs() <= 1e-12 * scale.max(alpha.abs()) {
            alpha = next;
            break;
        }
        alpha = next;
    }

    let e0 = -lf.ee / ((alpha * te).exp() * (wg * te).sin());
    let mut pulse = Vec::with_capacity(t0_samples);
    for n in 0..t0_samples {
        let t = n as f64;
        if t <= te {
            pulse.push(e0 * (alpha * t).exp() * (wg * t).sin());
        } else {
            pulse.push(ret[n - (te.floor() as usize + 1)]);
        }
    }
    Ok(pulse)
}

/// Stable all-pole filter built as a cascade of 4 formant resonators.
#[derive(Debug, Clone, PartialEq)]
pub struct AllPoleFilter {
    /// Denominator 1 + a1 z^{-1} + ... + a8 z^{-8}; numerator is 1.
    denominator: Vec<f64>,
    sample_rate: u32,
}

impl AllPoleFilter {
    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    /// Direct-form recursion y[n] = x[n] - Σ a_k y[n-k], zero initial state.
    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let a = &self.denominator;
        let mut y = vec![0.0; input.len()];
        for n in 0..input.len() {
            let mut acc = input[n];
            for k in 1..a.len() {
                if n >= k {
                    acc -= a[k] * y[n - k];
                }
            }
            y[n] = acc;
        }
        y
    }

    /// Pole locations: roots of the denominator in z.
    pub fn poles(&self) -> Result<Vec<num_complex::Complex64>> {
        polyroots::polynomial_roots(&self.denominator)
    }

    /// |H(e^{j2πf/fs})| at one frequency.
    pub fn magnitude_at(&self, f_hz: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * f_hz / self.sample_rate as f64;
        let z_inv = num_complex::Complex64::from_polar(1.0, -omega);
        let mut a = num_complex::Complex64::new(0.0, 0.0);
        for &c in self.denominator.iter().rev() {
            a = a * z_inv + c;
        }
        1.0 / a.norm()
    }
}

/// All-pole coefficient set for a vowel at the given sample rate.
pub fn vowel_filter(vowel: Vowel, sample_rate: u32) -> Result<AllPoleFilter> {
    if sample_rate < 8000 {
        return Err(Error::invalid(
            "sample rate below 8 kHz cannot carry the formant table",
        ));
    }
    let fs = sample_rate as f64;
    let formants = VOWEL_FORMANTS
        .iter()
        .find(|(v, _)| *v == vowel)
        .map(|(_, f)| f)
        .expect("table covers every vowel");

    let mut denominator = vec![1.0];
    for &(f, b) in formants {
        let r = (-std::f64::consts::PI * b / fs).exp();
        let theta = 2.0 * std::f64::consts::PI * f / fs;
        let quad = [1.0, -2.0 * r * theta.cos(), r * r];
        let mut next = vec![0.0; denominator.len() + 2];
        for (i, &d) in denominator.iter().enumerate() {
            for (j, &q) in quad.iter().enumerate() {
                next[i + j] += d * q;
            }
        }
        denominator = next;
    }
    Ok(AllPoleFilter {
        denominator,
        sample_rate,
    })
}

/// Generates speech for one test condition: LF periods concatenated, passed
/// through the vowel filter; true GCIs recorded at each te instant and the
/// unfiltered glottal derivative kept as ground truth.
pub fn synthesize(condition: &TestCondition, duration_periods: usize) -> Result<SyntheticUtterance> {
    condition.validate()?;
    if duration_periods < 4 {
        return Err(Error::invalid("need at least 4 periods"));
    }
    let fs = condition.sample_rate;
    let t0_samples = (fs as f64 / condition.lf.f0).round() as usize;
    let pulse = lf_pulse(&condition.lf, t0_samples)?;
    let te_offset = condition.lf.oq * t0_samples as f64;

    let mut glottal = Vec::with_capacity(t0_samples * duration_periods);
    for _ in 0..duration_periods {
        glottal.extend_from_slice(&pulse);
    }
    let filter = vowel_filter(condition.vowel, fs)?;
    let speech = filter.filter(&glottal);

    let gcis: Vec<f64> = (0..duration_periods)
        .map(|k| k as f64 * t0_samples as f64 + te_offset)
        .collect();
    let len = glottal.len();
    Ok(SyntheticUtterance {
        speech: SampleBuffer::new(speech, fs)?,
        true_glottal_derivative: SampleBuffer::new(glottal, fs)?,
        true_gcis: GciTrack::new(gcis, GciSource::SyntheticGroundTruth, len)?,
        condition: *condition,
        t0_samples,
        te_offset,
    })
}

/// Analysis instant for a GCI location error expressed as a fraction of T0.
pub fn perturbed_gci(true_gci: f64, gci_error: f64, t0_samples: usize) -> f64 {
    true_gci + (gci_error * t0_samples as f64).round()
}

/// The clean reference: open-phase segment [0, te] of one LF pulse.
pub fn reference_open_phase(lf: &LfParams, t0_samples: usize) -> Result<Vec<f64>> {
    let pulse = lf_pulse(lf, t0_samples)?;
    let te = lf.oq * t0_samples as f64;
    let end = (te.round() as usize).min(pulse.len() - 1);
    Ok(pulse[..=end].to_vec())
}

/// The open-phase segment under the analysis window: sample j of the open
/// phase sits at window position T0 - te + j when the window is centered on
/// the GCI. Used as the spectral reference for the glottal formant so the
/// reference and the estimate see the same windowing.
pub fn windowed_open_phase(lf: &LfParams, t0_samples: usize) -> Result<Vec<f64>> {
    let raw = reference_open_phase(lf, t0_samples)?;
    let te = lf.oq * t0_samples as f64;
    let window_len = (2 * t0_samples) as f64;
    Ok(raw
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            v * crate::signal::blackman_value(t0_samples as f64 - te + j as f64, window_len)
        })
        .collect())
}

/// Ground-truth glottal formant for a condition: the same estimator, grid
/// and windowing the decomposition path sees, applied to one clean pulse.
pub fn reference_fg(
    lf: &LfParams,
    t0_samples: usize,
    sample_rate: f64,
    grid_size: usize,
    fg_band_cap_hz: f64,
) -> Result<f64> {
    let windowed = windowed_open_phase(lf, t0_samples)?;
    let spectrum = czt::chirp_transform_samples(&windowed, 1.0, grid_size)?;
    metrics::glottal_formant_frequency(&spectrum, sample_rate, lf.f0, fg_band_cap_hz).ok_or_else(
        || Error::DegenerateInput("reference pulse has no usable glottal formant".into()),
    )
}

/// Axis values of a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub oq: Vec<f64>,
    pub alpha_m: Vec<f64>,
    pub f0: Vec<f64>,
    pub vowels: Vec<Vowel>,
    /// Signed fractions of T0.
    pub gci_errors: Vec<f64>,
}

/// Inclusive start:step:stop expansion with a count-based grid so floating
/// point drift cannot change the cell count.
pub fn range_values(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::invalid(format!(
            "bad range {start}:{step}:{stop}"
        )));
    }
    let count = ((stop - start) / step).round() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

impl SweepGrid {
    /// The published test-condition box: 11 x 7 x 7 x 4 x 21 = 45,276 cells.
    pub fn full() -> Self {
        Self {
            oq: range_values(0.4, 0.05, 0.9).unwrap(),
            alpha_m: range_values(0.6, 0.05, 0.9).unwrap(),
            f0: range_values(60.0, 20.0, 180.0).unwrap(),
            vowels: Vowel::ALL.to_vec(),
            gci_errors: range_values(-0.5, 0.05, 0.5).unwrap(),
        }
    }

    /// Sub-sampled grid for desk-scale runs: 3 x 3 x 3 x 2 x 11 = 594 cells.
    pub fn desk() -> Self {
        Self {
            oq: vec![0.5, 0.65, 0.8],
            alpha_m: vec![0.65, 0.75, 0.85],
            f0: vec![60.0, 100.0, 180.0],
            vowels: vec![Vowel::A, Vowel::I],
            gci_errors: range_values(-0.5, 0.1, 0.5).unwrap(),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.oq.len() * self.alpha_m.len() * self.f0.len() * self.vowels.len()
            * self.gci_errors.len()
    }

    /// Voice combinations (everything except the GCI error axis), in grid
    /// order.
    fn voices(&self, qa: f64) -> Vec<(LfParams, Vowel)> {
        let mut out = Vec::new();
        for &oq in &self.oq {
            for &am in &self.alpha_m {
                for &f0 in &self.f0 {
                    for &vowel in &self.vowels {
                        out.push((
                            LfParams {
                                oq,
                                alpha_m: am,
                                f0,
                                qa,
                                ee: 1.0,
                            },
                            vowel,
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Knobs of the sweep harness.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub sample_rate: u32,
    pub qa: f64,
    pub duration_periods: usize,
    pub grid_size: usize,
    pub normalize_sd: bool,
    pub fg_band_cap_hz: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            qa: 0.1,
            duration_periods: 10,
            grid_size: czt::DEFAULT_GRID,
            normalize_sd: true,
            fg_band_cap_hz: metrics::FG_BAND_CAP_HZ,
        }
    }
}

/// One row of the sweep output: a condition, a strategy, and either a score
/// or the error that prevented it.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub condition: TestCondition,
    pub strategy: StrategyKind,
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

/// Runs the grid: cells execute in parallel, results merge in grid order
/// (oq, alpha_m, f0, vowel, gci_error, strategy). One frame is rooted once
/// and shared by all strategies. Individual cell failures are recorded,
/// never fatal.
pub fn run_sweep(
    grid: &SweepGrid,
    strategies: &[StrategyKind],
    opts: &SweepOptions,
) -> Vec<CellReport> {
    let voices = grid.voices(opts.qa);
    let per_voice: Vec<Vec<CellReport>> = voices
        .par_iter()
        .map(|&(lf, vowel)| sweep_voice(lf, vowel, &grid.gci_errors, strategies, opts))
        .collect();
    per_voice.into_iter().flatten().collect()
}

fn sweep_voice(
    lf: LfParams,
    vowel: Vowel,
    gci_errors: &[f64],
    strategies: &[StrategyKind],
    opts: &SweepOptions,
) -> Vec<CellReport> {
    let mut out = Vec::with_capacity(gci_errors.len() * strategies.len());
    let condition_of = |err: f64| TestCondition {
        lf,
        vowel,
        gci_error: err,
        sample_rate: opts.sample_rate,
    };
    let fail_all = |msg: String, out: &mut Vec<CellReport>| {
        for &err in gci_errors {
            for &s in strategies {
                out.push(CellReport {
                    condition: condition_of(err),
                    strategy: s,
                    metrics: None,
                    error: Some(msg.clone()),
                });
            }
        }
    };

    let utterance = match synthesize(&condition_of(0.0), opts.duration_periods) {
        Ok(u) => u,
        Err(e) => {
            fail_all(e.to_string(), &mut out);
            return out;
        }
    };
    let reference = match reference_open_phase(&lf, utterance.t0_samples) {
        Ok(r) => r,
        Err(e) => {
            fail_all(e.to_string(), &mut out);
            return out;
        }
    };
    let ref_spectrum =
        match czt::chirp_transform_samples(&reference, 1.0, opts.grid_size) {
            Ok(s) => s,
            Err(e) => {
                fail_all(e.to_string(), &mut out);
                return out;
            }
        };
    let fs = opts.sample_rate as f64;
    let fg_ref = match metrics::glottal_formant_frequency(&ref_spectrum, fs, lf.f0, opts.fg_band_cap_hz)
    {
        Some(f) => f,
        None => {
            fail_all("reference pulse has no usable glottal formant".into(), &mut out);
            return out;
        }
    };
    let score_opts = ScoreOptions {
        sample_rate: fs,
        f0_hint: lf.f0,
        fg_band_cap_hz: opts.fg_band_cap_hz,
        normalize_sd: opts.normalize_sd,
    };

    // analysis GCI: past the filter transient, with head and tail room for
    // +/- T0/2 perturbations
    let gci_index = (utterance.true_gcis.len() * 6 / 10).min(utterance.true_gcis.len() - 3);
    let true_gci = utterance.true_gcis.instants()[gci_index];
    let t0 = utterance.t0_samples;

    for &err in gci_errors {
        let condition = condition_of(err);
        let anchor = perturbed_gci(true_gci, err, t0);
        let frame = match extract_frame(&utterance.speech, anchor, t0 as f64) {
            Ok(f) => f,
            Err(e) => {
                for &s in strategies {
                    out.push(CellReport {
                        condition,
                        strategy: s,
                        metrics: None,
                        error: Some(e.to_string()),
                    });
                }
                continue;
            }
        };
        // true GCI position measured from the window start
        let t_star = true_gci - frame.anchor() as f64;
        let frame = frame.with_gci_offset(t_star);

        let rootset = match polyroots::find_roots(&frame) {
            Ok(r) => r,
            Err(e) => {
                for &s in strategies {
                    out.push(CellReport {
                        condition,
                        strategy: s,
                        metrics: None,
                        error: Some(e.to_string()),
                    });
                }
                continue;
            }
        };
        for &kind in strategies {
            let strategy = match kind {
                StrategyKind::Unit => Strategy::Unit,
                StrategyKind::Auto => Strategy::Auto,
                StrategyKind::Ideal => Strategy::Ideal { t_star },
            };
            match czt::decompose_with_rootset(&frame, &rootset, strategy, opts.grid_size) {
                Ok(decomp) => {
                    let report = metrics::score_decomposition(
                        &decomp,
                        kind,
                        &reference,
                        fg_ref,
                        &score_opts,
                    );
                    out.push(CellReport {
                        condition,
                        strategy: kind,
                        metrics: Some(report),
                        error: None,
                    });
                }
                Err(e) => out.push(CellReport {
                    condition,
                    strategy: kind,
                    metrics: None,
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    out
}

/// Per (gci_error, strategy) aggregation: the two benchmark curves.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub gci_error: f64,
    pub strategy: StrategyKind,
    pub cells: usize,
    /// Percentage of cells with a determined Fg; failed cells count against.
    pub determination_rate: f64,
    /// Mean spectral distortion over cells that produced a reliable SD.
    pub mean_sd: Option<f64>,
    /// Mean normalized cross-correlation where available.
    pub mean_ncc: Option<f64>,
}

/// Groups sweep reports by (gci_error, strategy), preserving first-seen
/// order of the error values and the given strategy order.
pub fn aggregate(reports: &[CellReport], strategies: &[StrategyKind]) -> Vec<AggregateRow> {
    let mut errors: Vec<f64> = Vec::new();
    for r in reports {
        if !errors.iter().any(|&e| e == r.condition.gci_error) {
            errors.push(r.condition.gci_error);
        }
    }
    let mut rows = Vec::new();
    for &err in &errors {
        for &s in strategies {
            let cell_reports: Vec<&CellReport> = reports
                .iter()
                .filter(|r| r.condition.gci_error == err && r.strategy == s)
                .collect();
            if cell_reports.is_empty() {
                continue;
            }
            let determined = cell_reports
                .iter()
                .filter(|r| r.metrics.as_ref().is_some_and(|m| m.determined))
                .count();
            let sds: Vec<f64> = cell_reports
                .iter()
                .filter_map(|r| r.metrics.as_ref())
                .filter(|m| m.sd_reliable)
                .filter_map(|m| m.spectral_distortion)
                .collect();
            let nccs: Vec<f64> = cell_reports
                .iter()
                .filter_map(|r| r.metrics.as_ref())
                .filter_map(|m| m.ncc)
                .collect();
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    None
                } else {
                    Some(v.iter().sum::<f64>() / v.len() as f64)
                }
            };
            rows.push(AggregateRow {
                gci_error: err,
                strategy: s,
                cells: cell_reports.len(),
                determination_rate: 100.0 * determined as f64 / cell_reports.len() as f64,
                mean_sd: mean(&sds),
                mean_ncc: mean(&nccs),
            });
        }
    }
    rows
}
