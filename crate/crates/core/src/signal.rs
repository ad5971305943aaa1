//! Sample buffers, Blackman windowing, GCI-anchored frame extraction and
//! EGG differencing.
//!
//! Analysis frames are pitch-synchronous: a Blackman window of length twice
//! the local pitch period, centered on a glottal closure instant (GCI).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Immutable mono signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SampleBuffer {
    /// Rejects a zero sample rate and non-finite samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample_rate must be positive"));
        }
        if let Some(pos) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Where a GCI track came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GciSource {
    MarkerFile,
    EggDerived,
    SyntheticGroundTruth,
}

/// Strictly increasing glottal closure instants, in samples (possibly
/// fractional).
#[derive(Debug, Clone, PartialEq)]
pub struct GciTrack {
    instants: Vec<f64>,
    source: GciSource,
}

impl GciTrack {
    /// `buffer_len` bounds the instants to the parent buffer's extent.
    pub fn new(instants: Vec<f64>, source: GciSource, buffer_len: usize) -> Result<Self> {
        for (i, w) in instants.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::invalid(format!(
                    "GCI instants must be strictly increasing (index {} -> {})",
                    i,
                    i + 1
                )));
            }
        }
        if let Some(&first) = instants.first() {
            let last = *instants.last().unwrap();
            if first < 0.0 || last > (buffer_len.saturating_sub(1)) as f64 {
                return Err(Error::OutOfRange(format!(
                    "GCI instants [{first}, {last}] exceed buffer extent 0..{}",
                    buffer_len
                )));
            }
        }
        Ok(Self { instants, source })
    }

    pub fn empty(source: GciSource) -> Self {
        Self {
            instants: Vec::new(),
            source,
        }
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn source(&self) -> GciSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    /// Local pitch period at track index `i`: half the distance between the
    /// two flanking GCIs, falling back to the one-sided difference at the
    /// track edges. Needs at least two instants.
    pub fn local_period(&self, i: usize) -> Result<f64> {
        let n = self.instants.len();
        if n < 2 {
            return Err(Error::invalid(
                "local period needs at least two GCI instants",
            ));
        }
        if i >= n {
            return Err(Error::OutOfRange(format!("GCI index {i} out of 0..{n}")));
        }
        let t0 = if i == 0 {
            self.instants[1] - self.instants[0]
        } else if i == n - 1 {
            self.instants[n - 1] - self.instants[n - 2]
        } else {
            (self.instants[i + 1] - self.instants[i - 1]) / 2.0
        };
        Ok(t0)
    }
}

/// A windowed, GCI-anchored slice of samples: the unit of analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    samples: Vec<f64>,
    anchor: usize,
    nominal_gci_offset: Option<f64>,
}

impl Frame {
    /// Builds a frame from already-windowed samples. `anchor` is the index of
    /// the window start in the parent buffer.
    pub fn from_windowed(
        samples: Vec<f64>,
        anchor: usize,
        nominal_gci_offset: Option<f64>,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("frame must hold at least 2 samples"));
        }
        Ok(Self {
            samples,
            anchor,
            nominal_gci_offset,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Window length L; equals the number of samples.
    pub fn window_length(&self) -> usize {
        self.samples.len()
    }

    /// Index of the window start in the parent buffer.
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// t*: GCI position in samples from the window start, when known.
    pub fn nominal_gci_offset(&self) -> Option<f64> {
        self.nominal_gci_offset
    }

    /// Overrides t*, e.g. with a ground-truth GCI position.
    pub fn with_gci_offset(mut self, t_star: f64) -> Self {
        self.nominal_gci_offset = Some(t_star);
        self
    }
}

/// Blackman window w(t) = 0.42 - 0.5 cos(2πt/L) + 0.08 cos(4πt/L) sampled at
/// t = 0..L-1.
///
/// Evaluated through cos(4x) = 2cos²(2x) - 1 so that w(0) is exactly 0.0 and
/// w(L/2) exactly 1.0 in f64; the trailing sample w(L-1) stays small but
/// nonzero, which downstream code treats as the endpoint "zero" tolerance.
pub fn blackman_window(len: usize) -> Result<Vec<f64>> {
    if len < 4 {
        return Err(Error::invalid(format!(
            "window length {len} too short (minimum 4)"
        )));
    }
    Ok((0..len)
        .map(|t| blackman_value(t as f64, len as f64))
        .collect())
}

/// The window evaluated at a (possibly fractional) position.
#[inline]
pub(crate) fn blackman_value(t: f64, len: f64) -> f64 {
    let c = (2.0 * PI * t / len).cos();
    (0.34 + 0.16 * c * c) - 0.5 * c
}

/// Extracts a Blackman-windowed frame of length 2·T0 centered on `gci`.
///
/// `gci` and `t0` are in samples and may be fractional; the window length is
/// rounded to the nearest even integer so the center lands on an integer
/// sample, and the GCI is rounded to the nearest sample for anchoring.
pub fn extract_frame(buffer: &SampleBuffer, gci: f64, t0: f64) -> Result<Frame> {
    if !(t0.is_finite() && t0 >= 16.0) {
        return Err(Error::invalid(format!(
            "pitch period {t0} samples too small (minimum 16)"
        )));
    }
    if !gci.is_finite() {
        return Err(Error::invalid("GCI must be finite"));
    }
    let half = t0.round() as i64;
    let len = (2 * half) as usize;
    let gci_round = gci.round() as i64;
    let start = gci_round - half;
    let end = gci_round + half; // exclusive
    if start < 0 || end > buffer.len() as i64 {
        return Err(Error::OutOfRange(format!(
            "window [{start}, {end}) exceeds buffer bounds [0, {})",
            buffer.len()
        )));
    }
    let window = blackman_window(len)?;
    let raw = &buffer.samples()[start as usize..end as usize];
    let samples: Vec<f64> = raw.iter().zip(&window).map(|(x, w)| x * w).collect();
    Frame::from_windowed(samples, start as usize, Some(half as f64))
}

/// First difference of an EGG signal, shifted by `delay_compensation`
/// samples. Positive delay moves the differenced EGG later in time (the
/// laryngograph leads the microphone). Length is preserved; samples shifted
/// in from outside the buffer are zero.
pub fn difference_egg(egg: &SampleBuffer, delay_compensation: i64) -> Result<SampleBuffer> {
    let n = egg.len();
    if delay_compensation.unsigned_abs() as usize >= n {
        return Err(Error::invalid(format!(
            "delay compensation {delay_compensation} exceeds buffer length {n}"
        )));
    }
    let x = egg.samples();
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let j = i as i64 - delay_compensation;
        if j >= 1 && (j as usize) < n {
            let j = j as usize;
            *slot = x[j] - x[j - 1];
        }
    }
    SampleBuffer::new(out, egg.sample_rate())
}

/// Picks GCIs as extrema of a differenced EGG signal.
///
/// Local maxima of |degg| above `threshold_ratio` times the global extremum
/// are kept, strongest first, subject to a refractory period of half the
/// median inter-peak distance. An input with no qualifying peak yields an
/// empty track.
pub fn gcis_from_diff_egg(degg: &SampleBuffer, threshold_ratio: f64) -> Result<GciTrack> {
    if !(0.0..=1.0).contains(&threshold_ratio) {
        return Err(Error::invalid(format!(
            "threshold ratio {threshold_ratio} outside [0, 1]"
        )));
    }
    let x = degg.samples();
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(GciTrack::empty(GciSource::EggDerived));
    }
    let threshold = threshold_ratio * peak;

    let mag = |i: usize| x[i].abs();
    let mut candidates: Vec<usize> = Vec::new();
    for i in 0..x.len() {
        let left = if i == 0 { f64::NEG_INFINITY } else { mag(i - 1) };
        let right = if i + 1 == x.len() {
            f64::NEG_INFINITY
        } else {
            mag(i + 1)
        };
        if mag(i) >= threshold && mag(i) >= left && mag(i) > right {
            candidates.push(i);
        }
    }
    if candidates.is_empty() {
        return Ok(GciTrack::empty(GciSource::EggDerived));
    }

    let refractory = if candidates.len() >= 2 {
        let mut gaps: Vec<f64> = candidates
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64)
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if gaps.len() % 2 == 1 {
            gaps[gaps.len() / 2]
        } else {
            (gaps[gaps.len() / 2 - 1] + gaps[gaps.len() / 2]) / 2.0
        };
        0.5 * median
    } else {
        0.0
    };

    // Strongest peak wins inside each refractory span; ties go to the
    // earlier instant so the result is deterministic.
    let mut order = candidates.clone();
    order.sort_by(|&a, &b| {
        mag(b)
            .partial_cmp(&mag(a))
            .unwrap()
            .then_with(|| a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept
            .iter()
            .all(|&k| (k as f64 - i as f64).abs() > refractory)
        {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    GciTrack::new(
        kept.into_iter().map(|i| i as f64).collect(),
        GciSource::EggDerived,
        degg.len(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blackman_endpoints_and_center() {
        for &len in &[32usize, 160, 161, 320] {
            let w = blackman_window(len).unwrap();
            assert_eq!(w[0], 0.0, "w(0) must be exactly zero");
            if len % 2 == 0 {
                assert_eq!(w[len / 2], 1.0, "w(L/2) must be exactly one");
            }
        }
    }

    #[test]
    fn blackman_quarter_point() {
        let len = 320;
        let w = blackman_window(len).unwrap();
        assert!((w[len / 4] - 0.34).abs() < 1e-12);
        assert!((w[3 * len / 4] - 0.34).abs() < 1e-12);
    }

    #[test]
    fn blackman_symmetry() {
        for &len in &[64usize, 161, 320] {
            let w = blackman_window(len).unwrap();
            for t in 1..len {
                let mirrored = blackman_value((len - t) as f64, len as f64);
                assert!(
                    (w[t] - mirrored).abs() < 1e-12,
                    "asymmetry at t={t}, L={len}"
                );
            }
        }
    }

    #[test]
    fn blackman_rejects_short() {
        assert!(matches!(
            blackman_window(3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn extract_frame_of_constant_is_window() {
        let buf = SampleBuffer::new(vec![1.0; 400], 16000).unwrap();
        let frame = extract_frame(&buf, 200.0, 80.0).unwrap();
        let w = blackman_window(160).unwrap();
        assert_eq!(frame.samples(), &w[..]);
        assert_eq!(frame.anchor(), 120);
        assert_eq!(frame.nominal_gci_offset(), Some(80.0));
    }

    #[test]
    fn extract_frame_is_pointwise_product() {
        let buf = SampleBuffer::new(
            (0..500).map(|i| ((i * 7919) % 100) as f64 / 50.0 - 1.0).collect(),
            8000,
        )
        .unwrap();
        let frame = extract_frame(&buf, 250.0, 100.0).unwrap();
        let w = blackman_window(200).unwrap();
        for (i, s) in frame.samples().iter().enumerate() {
            let expect = buf.samples()[frame.anchor() + i] * w[i];
            assert_eq!(*s, expect, "bit-exact product at {i}");
        }
    }

    #[test]
    fn extract_frame_out_of_range() {
        let buf = SampleBuffer::new(vec![0.5; 100], 16000).unwrap();
        assert!(matches!(
            extract_frame(&buf, 0.0, 40.0),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            extract_frame(&buf, 99.0, 40.0),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn extract_frame_small_period_rejected() {
        let buf = SampleBuffer::new(vec![0.5; 100], 16000).unwrap();
        assert!(matches!(
            extract_frame(&buf, 50.0, 8.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn frame_endpoints_near_zero() {
        let buf = SampleBuffer::new(vec![1.0; 400], 16000).unwrap();
        let frame = extract_frame(&buf, 200.0, 80.0).unwrap();
        let s = frame.samples();
        let peak = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = blackman_value(1.0, 160.0) * peak;
        assert_eq!(s[0], 0.0);
        assert!(s[s.len() - 1].abs() <= tol);
    }

    #[test]
    fn difference_of_ramp_is_constant() {
        let buf = SampleBuffer::new((0..64).map(|i| i as f64).collect(), 1000).unwrap();
        let d = difference_egg(&buf, 0).unwrap();
        assert_eq!(d.samples()[0], 0.0);
        assert!(d.samples()[1..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn difference_of_constant_is_zero() {
        let buf = SampleBuffer::new(vec![3.25; 64], 1000).unwrap();
        let d = difference_egg(&buf, 0).unwrap();
        assert!(d.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn difference_delay_shifts_content() {
        let mut x = vec![0.0; 32];
        x[10] = 1.0;
        let buf = SampleBuffer::new(x, 1000).unwrap();
        let d = difference_egg(&buf, 5).unwrap();
        // step edge at 10 -> diff peaks at 10, shifted to 15
        assert_eq!(d.samples()[15], 1.0);
        assert_eq!(d.samples()[16], -1.0);
    }

    #[test]
    fn difference_is_linear() {
        let xs = SampleBuffer::new((0..50).map(|i| (i as f64 * 0.37).sin()).collect(), 1).unwrap();
        let ys = SampleBuffer::new((0..50).map(|i| (i as f64 * 0.11).cos()).collect(), 1).unwrap();
        let (a, b) = (2.5, -1.25);
        let combined = SampleBuffer::new(
            xs.samples()
                .iter()
                .zip(ys.samples())
                .map(|(x, y)| a * x + b * y)
                .collect(),
            1,
        )
        .unwrap();
        let lhs = difference_egg(&combined, 0).unwrap();
        let dx = difference_egg(&xs, 0).unwrap();
        let dy = difference_egg(&ys, 0).unwrap();
        for i in 0..50 {
            let rhs = a * dx.samples()[i] + b * dy.samples()[i];
            assert!((lhs.samples()[i] - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn gci_detection_single_impulse() {
        let mut x = vec![0.0; 256];
        x[100] = -1.0;
        let buf = SampleBuffer::new(x, 16000).unwrap();
        let track = gcis_from_diff_egg(&buf, 0.5).unwrap();
        assert_eq!(track.instants(), &[100.0]);
    }

    #[test]
    fn gci_detection_empty_on_zero_input() {
        let buf = SampleBuffer::new(vec![0.0; 256], 16000).unwrap();
        let track = gcis_from_diff_egg(&buf, 0.5).unwrap();
        assert!(track.is_empty());
    }

    #[test]
    fn gci_detection_periodic_train() {
        let mut x = vec![0.0; 1600];
        for k in 0..10 {
            x[k * 160] = 1.0;
        }
        let buf = SampleBuffer::new(x, 16000).unwrap();
        let track = gcis_from_diff_egg(&buf, 0.5).unwrap();
        let expected: Vec<f64> = (0..10).map(|k| (k * 160) as f64).collect();
        assert_eq!(track.instants(), &expected[..]);
    }

    #[test]
    fn local_period_flanking_and_edges() {
        let track = GciTrack::new(
            vec![100.0, 260.0, 430.0],
            GciSource::MarkerFile,
            1000,
        )
        .unwrap();
        assert_eq!(track.local_period(0).unwrap(), 160.0);
        assert_eq!(track.local_period(1).unwrap(), 165.0);
        assert_eq!(track.local_period(2).unwrap(), 170.0);
    }

    #[test]
    fn gci_track_rejects_non_monotonic() {
        assert!(GciTrack::new(vec![10.0, 10.0], GciSource::MarkerFile, 100).is_err());
        assert!(GciTrack::new(vec![20.0, 10.0], GciSource::MarkerFile, 100).is_err());
    }
}
