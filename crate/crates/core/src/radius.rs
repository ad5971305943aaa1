//! Chirp-contour radius selection.
//!
//! Three ways to choose the circle that splits a frame's roots into causal
//! and anticausal groups: the classical unit circle, a closed form from the
//! known GCI position inside the window, and automatic detection of the
//! largest discontinuity in the sorted root moduli.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::polyroots::RootSet;

/// How a contour radius was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusMethod {
    /// R = 1, the traditional decomposition.
    Unit,
    /// Closed form from the true GCI offset t*.
    Ideal,
    /// Largest gap in the sorted root moduli.
    Auto,
}

impl std::fmt::Display for RadiusMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadiusMethod::Unit => write!(f, "unit"),
            RadiusMethod::Ideal => write!(f, "ideal"),
            RadiusMethod::Auto => write!(f, "auto"),
        }
    }
}

/// A circular separation contour |z| = R.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpContour {
    radius: f64,
    method: RadiusMethod,
    gap_width: Option<f64>,
    bounds: (f64, f64),
}

impl ChirpContour {
    /// Contour with an explicitly chosen radius; bounds come from the window
    /// length as usual.
    pub fn with_radius(
        radius: f64,
        method: RadiusMethod,
        window_length: usize,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("radius {radius} must be positive")));
        }
        Ok(Self {
            radius,
            method,
            gap_width: None,
            bounds: selection_bounds(window_length)?,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn method(&self) -> RadiusMethod {
        self.method
    }

    /// Width of the detected moduli gap; only set for the auto method.
    pub fn gap_width(&self) -> Option<f64> {
        self.gap_width
    }

    /// Search bounds [R_lo, R_hi] for the window length this contour was
    /// derived from.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }
}

/// Sorted root moduli with the index range falling inside the selection
/// bounds. The raw material of automatic radius detection.
#[derive(Debug, Clone)]
pub struct ModuliProfile {
    sorted_moduli: Vec<f64>,
    in_band: std::ops::Range<usize>,
    bounds: (f64, f64),
}

impl ModuliProfile {
    pub fn new(rootset: &RootSet, window_length: usize) -> Result<Self> {
        let bounds = selection_bounds(window_length)?;
        let mut sorted: Vec<f64> = rootset.roots().iter().map(|r| r.norm()).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let start = sorted.partition_point(|&m| m < bounds.0);
        let end = sorted.partition_point(|&m| m <= bounds.1);
        Ok(Self {
            sorted_moduli: sorted,
            in_band: start..end,
            bounds,
        })
    }

    pub fn sorted_moduli(&self) -> &[f64] {
        &self.sorted_moduli
    }

    pub fn in_band_indices(&self) -> std::ops::Range<usize> {
        self.in_band.clone()
    }

    fn in_band_moduli(&self) -> &[f64] {
        &self.sorted_moduli[self.in_band.clone()]
    }
}

/// Selection bounds [exp(-50π/(17L)), exp(+50π/(17L))]: the worst-case ideal
/// radii for a two-period window, reached when the nearest GCI sits at L/4 or
/// 3L/4.
pub fn selection_bounds(window_length: usize) -> Result<(f64, f64)> {
    if window_length < 4 {
        return Err(Error::invalid(format!(
            "window length {window_length} too short (minimum 4)"
        )));
    }
    let e = 50.0 * PI / (17.0 * window_length as f64);
    Ok(((-e).exp(), e.exp()))
}

/// Unit-circle contour (traditional decomposition).
pub fn unit_contour(window_length: usize) -> Result<ChirpContour> {
    Ok(ChirpContour {
        radius: 1.0,
        method: RadiusMethod::Unit,
        gap_width: None,
        bounds: selection_bounds(window_length)?,
    })
}

/// Radius that re-centers the effective analysis window on a GCI located
/// `t_star` samples after the window start.
///
/// Evaluates the closed form through its cotangent expression
/// exp[(2π/L)·(9c³+41c)/(9c²+25)] with c = cot(π·t*/L), which is finite and
/// exactly 1 at t* = L/2.
pub fn ideal_radius(t_star: f64, window_length: usize) -> Result<ChirpContour> {
    let l = window_length as f64;
    if !(t_star > 0.0 && t_star < l) {
        return Err(Error::invalid(format!(
            "t* = {t_star} outside (0, {l})"
        )));
    }
    let bounds = selection_bounds(window_length)?;
    let tau = PI * t_star / l;
    let c = tau.cos() / tau.sin();
    let ratio = (9.0 * c * c * c + 41.0 * c) / (9.0 * c * c + 25.0);
    let radius = (2.0 * PI / l * ratio).exp();
    Ok(ChirpContour {
        radius,
        method: RadiusMethod::Ideal,
        gap_width: None,
        bounds,
    })
}

/// Clamps a GCI offset to [L/4, 3L/4] before the ideal-radius form; with
/// two-period windows the nearest GCI always falls in that range.
pub fn clamp_t_star(t_star: f64, window_length: usize) -> f64 {
    let l = window_length as f64;
    t_star.clamp(l / 4.0, 3.0 * l / 4.0)
}

/// Detects the largest discontinuity of the sorted root moduli inside the
/// selection bounds and returns its midpoint as the radius.
///
/// The bounds themselves participate as sentinel gap edges, so a frame with
/// no in-band roots still yields a well-defined radius (the band midpoint).
/// Equal-width gaps break ties toward the midpoint closest to 1.
pub fn auto_radius(rootset: &RootSet, window_length: usize) -> Result<ChirpContour> {
    if rootset.degree() == 0 {
        return Err(Error::DegenerateInput("empty root set".into()));
    }
    let profile = ModuliProfile::new(rootset, window_length)?;
    let (r_lo, r_hi) = profile.bounds;

    let mut edges = Vec::with_capacity(profile.in_band_moduli().len() + 2);
    edges.push(r_lo);
    edges.extend_from_slice(profile.in_band_moduli());
    edges.push(r_hi);

    let mut best_width = f64::NEG_INFINITY;
    let mut best_mid = (r_lo + r_hi) / 2.0;
    for pair in edges.windows(2) {
        let width = pair[1] - pair[0];
        let mid = (pair[0] + pair[1]) / 2.0;
        let better = width > best_width
            || (width == best_width && (mid - 1.0).abs() < (best_mid - 1.0).abs());
        if better {
            best_width = width;
            best_mid = mid;
        }
    }
    Ok(ChirpContour {
        radius: best_mid,
        method: RadiusMethod::Auto,
        gap_width: Some(best_width),
        bounds: (r_lo, r_hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyroots::find_roots;
    use crate::signal::Frame;

    #[test]
    fn bounds_reciprocal_and_value() {
        let (lo, hi) = selection_bounds(320).unwrap();
        assert!((lo * hi - 1.0).abs() < 1e-15);
        assert!((hi - (50.0 * PI / (17.0 * 320.0)).exp()).abs() < 1e-15);
        assert!((hi - 1.029_295_85).abs() < 1e-7);
        assert!((lo - 0.971_537_96).abs() < 1e-7);
    }

    #[test]
    fn bounds_approach_one_for_long_windows() {
        let (lo, hi) = selection_bounds(1 << 20).unwrap();
        assert!((hi - 1.0) < 1e-5 && (1.0 - lo) < 1e-5);
    }

    #[test]
    fn ideal_radius_center_is_exactly_one() {
        for &l in &[160usize, 320, 534] {
            let c = ideal_radius(l as f64 / 2.0, l).unwrap();
            assert_eq!(c.radius(), 1.0);
        }
    }

    #[test]
    fn ideal_radius_quarter_points_hit_bounds() {
        let l = 320usize;
        let (lo, hi) = selection_bounds(l).unwrap();
        let quarter = ideal_radius(l as f64 / 4.0, l).unwrap();
        let three_quarter = ideal_radius(3.0 * l as f64 / 4.0, l).unwrap();
        assert!((quarter.radius() - hi).abs() < 1e-12);
        assert!((three_quarter.radius() - lo).abs() < 1e-12);
        assert!((quarter.radius() * three_quarter.radius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_radius_monotone_side() {
        let l = 320usize;
        for t in [90.0, 120.0, 150.0] {
            assert!(ideal_radius(t, l).unwrap().radius() > 1.0);
        }
        for t in [170.0, 200.0, 230.0] {
            assert!(ideal_radius(t, l).unwrap().radius() < 1.0);
        }
    }

    #[test]
    fn ideal_radius_rejects_out_of_window() {
        assert!(ideal_radius(0.0, 320).is_err());
        assert!(ideal_radius(320.0, 320).is_err());
        assert!(ideal_radius(-5.0, 320).is_err());
    }

    #[test]
    fn clamp_limits_to_central_half() {
        assert_eq!(clamp_t_star(10.0, 320), 80.0);
        assert_eq!(clamp_t_star(160.0, 320), 160.0);
        assert_eq!(clamp_t_star(300.0, 320), 240.0);
    }

    fn rootset_with_moduli(moduli: &[f64]) -> RootSet {
        // build a polynomial with real roots at the given moduli
        let coeffs = crate::dd::expand_roots(
            &moduli
                .iter()
                .map(|&m| num_complex::Complex64::new(m, 0.0))
                .collect::<Vec<_>>(),
            1.0,
        );
        let frame = Frame::from_windowed(coeffs.iter().map(|c| c.re).collect(), 0, None).unwrap();
        find_roots(&frame).unwrap()
    }

    #[test]
    fn auto_radius_picks_largest_gap_midpoint() {
        // band for L=64 is [0.8656, 1.1553]; the 0.98 -> 1.04 gap of 0.06 is
        // the widest among in-band neighbors and the sentinel edges
        let rs = rootset_with_moduli(&[
            0.5, 0.90, 0.93, 0.96, 0.98, 1.04, 1.08, 1.12, 2.0,
        ]);
        // clustered real roots limit recovery accuracy to ~1e-6 here
        let contour = auto_radius(&rs, 64).unwrap();
        assert!((contour.radius() - 1.01).abs() < 1e-6);
        assert!((contour.gap_width().unwrap() - 0.06).abs() < 1e-6);
    }

    #[test]
    fn auto_radius_sentinel_only() {
        // no roots inside the band at all
        let rs = rootset_with_moduli(&[0.5, 0.6, 1.8, 2.0]);
        let l = 512usize;
        let (lo, hi) = selection_bounds(l).unwrap();
        let contour = auto_radius(&rs, l).unwrap();
        assert!((contour.radius() - (lo + hi) / 2.0).abs() < 1e-15);
        assert!((contour.radius() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn auto_radius_invariant_to_root_order() {
        let rs = rootset_with_moduli(&[0.6, 0.99, 1.02, 1.7]);
        let contour = auto_radius(&rs, 64).unwrap();
        // same moduli, different construction order
        let rs2 = rootset_with_moduli(&[1.7, 1.02, 0.99, 0.6]);
        let contour2 = auto_radius(&rs2, 64).unwrap();
        assert!((contour.radius() - contour2.radius()).abs() < 1e-12);
    }

    #[test]
    fn cot_form_matches_literal_tan_form() {
        let l = 320usize;
        let lf = l as f64;
        let mut worst = 0.0_f64;
        for i in 1..1000 {
            let t_star = lf * i as f64 / 1000.0;
            if (t_star - lf / 2.0).abs() < 1e-9 {
                continue;
            }
            let got = ideal_radius(t_star, l).unwrap().radius();
            let t = (PI * t_star / lf).tan();
            let literal =
                (2.0 * PI / lf * (41.0 * t * t + 9.0) / (25.0 * t * t * t + 9.0 * t)).exp();
            worst = worst.max((got - literal).abs() / literal);
        }
        assert!(worst < 1e-12, "worst relative deviation {worst:.2e}");
    }
}
