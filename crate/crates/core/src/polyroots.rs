//! All zeros of a frame's Z-transform polynomial.
//!
//! For a frame (x(0)..x(N-1)) the Z-transform factors as
//! `X(z) = x(0) z^{-N+1} Π (z - Z_m)`; this module computes the Z_m for
//! degrees up to ~1100 and guards the result with an explicit residual check
//! on the factorization.
//!
//! The solver is simultaneous Aberth-Ehrlich iteration from initial
//! estimates on the Newton-polygon circles of the coefficient magnitudes,
//! with compensated (double-double) evaluation and a reversed-polynomial
//! form outside the unit disk. Windowed frames produce polynomials whose
//! leading coefficients sit many orders below the peak; companion-matrix
//! eigenvalues disintegrate on those, while the polygon initialization
//! lands every estimate near its root cluster.

use num_complex::Complex64;

use crate::czt;
use crate::dd;
use crate::error::{Error, Result};
use crate::radius;
use crate::signal::Frame;

/// Residual ceiling above which a factorization is rejected.
pub const RESIDUAL_LIMIT: f64 = 1e-6;

const MAX_REFINE_ITERS: usize = 50;
const MAX_GLOBAL_ITERS: usize = 400;
const REFINE_TOL: f64 = 1e-12;
/// Degree above which the polish stage evaluates the polynomial in
/// compensated (double-double) arithmetic. Plain Horner's noise floor near a
/// root scales with the coefficient mass, which for windowed frames and
/// root-product test polynomials alike is many orders above the per-root
/// sensitivity; compensation keeps Newton corrections meaningful.
const COMPENSATED_DEGREE: usize = 8;

/// The zeros of a frame's Z-transform plus the gain term.
#[derive(Debug, Clone)]
pub struct RootSet {
    roots: Vec<Complex64>,
    gain: f64,
    delay: usize,
    residual_max: f64,
}

impl RootSet {
    /// The Z-plane zeros Z_1..Z_degree (unordered).
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// First nonzero frame sample; the x(0) factor after delay re-anchoring.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Number of exact-zero leading samples dropped before rooting. They are
    /// a pure delay z^{-delay} carried by the causal component.
    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    /// Max factorization residual recorded by `verify_roots`.
    pub fn residual_max(&self) -> f64 {
        self.residual_max
    }

    /// Worst relative distance from any root's conjugate to its nearest
    /// counterpart. Near zero for real input frames.
    pub fn conjugate_closure_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in &self.roots {
            let conj = r.conj();
            let nearest = self
                .roots
                .iter()
                .map(|s| (s - conj).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest / (1.0 + r.norm()));
        }
        worst
    }
}

/// Computes all zeros of the frame polynomial and validates the
/// factorization residual.
///
/// Leading exact-zero samples are dropped as a pure delay (the gain
/// re-anchors on the first nonzero sample); trailing exact zeros become
/// roots at the origin.
pub fn find_roots(frame: &Frame) -> Result<RootSet> {
    let samples = frame.samples();
    if samples.len() < 2 {
        return Err(Error::invalid("frame needs at least 2 samples"));
    }
    if samples.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateInput("all-zero frame".into()));
    }
    let lead = samples.iter().take_while(|&&x| x == 0.0).count();
    let effective = &samples[lead..];
    let trail = effective.iter().rev().take_while(|&&x| x == 0.0).count();
    let poly = &effective[..effective.len() - trail];

    let mut roots = if poly.len() > 1 {
        polynomial_roots(poly)?
    } else {
        Vec::new()
    };
    roots.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(trail));

    let mut rootset = RootSet {
        roots,
        gain: poly[0],
        delay: lead,
        residual_max: f64::NAN,
    };
    let residual = verify_roots(frame, &rootset)?;
    rootset.residual_max = residual;
    if residual > RESIDUAL_LIMIT {
        return Err(Error::RootResidual {
            residual_max: residual,
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(rootset)
}

/// Roots of `c[0] z^n + c[1] z^{n-1} + ... + c[n]` with `c[0] != 0`.
///
/// Coefficients are scaled by their max magnitude; initial estimates come
/// from the Newton polygon and the Aberth-Ehrlich iteration runs against the
/// scaled coefficients (same roots).
pub fn polynomial_roots(coefficients: &[f64]) -> Result<Vec<Complex64>> {
    if coefficients.len() < 2 {
        return Err(Error::invalid("need at least a degree-1 polynomial"));
    }
    if coefficients[0] == 0.0 {
        return Err(Error::invalid("leading coefficient must be nonzero"));
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite polynomial coefficient"));
    }
    let scale = coefficients.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let scaled: Vec<f64> = coefficients.iter().map(|c| c / scale).collect();

    let degree = scaled.len() - 1;
    if degree == 1 {
        return Ok(vec![Complex64::new(-scaled[1] / scaled[0], 0.0)]);
    }
    let initial = initial_estimates(&scaled);
    let evaluator = NewtonEval::new(&scaled, degree > COMPENSATED_DEGREE);
    aberth_iterate(&evaluator, initial, MAX_GLOBAL_ITERS)
}

/// Initial root estimates on the Newton-polygon circles.
///
/// With a_k the coefficient of z^k, the upper convex hull of the points
/// (k, ln|a_k|) partitions the roots into clusters: each hull edge from k0
/// to k1 accounts for k1-k0 roots of modulus about
/// (|a_{k0}|/|a_{k1}|)^(1/(k1-k0)). Estimates are spread on those circles
/// with staggered phases, off the real axis.
fn initial_estimates(coefficients: &[f64]) -> Vec<Complex64> {
    let n = coefficients.len() - 1;
    // ascending power k; skip exact-zero coefficients
    let points: Vec<(f64, f64)> = (0..=n)
        .filter(|&k| coefficients[n - k] != 0.0)
        .map(|k| (k as f64, coefficients[n - k].abs().ln()))
        .collect();

    // upper convex hull by monotone chain over ascending k
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or below the chord a -> p
            let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let mut out = Vec::with_capacity(n);
    for (edge, w) in hull.windows(2).enumerate() {
        let (k0, l0) = w[0];
        let (k1, l1) = w[1];
        let count = (k1 - k0).round() as usize;
        let radius = ((l0 - l1) / (k1 - k0)).exp();
        for j in 0..count {
            let angle = 2.0 * std::f64::consts::PI
                * (j as f64 / count as f64 + edge as f64 / n as f64)
                + 0.7;
            out.push(Complex64::from_polar(radius, angle));
        }
    }
    out
}

fn horner_plain(coefficients: &[f64], z: Complex64) -> Complex64 {
    coefficients
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn eval_poly(coefficients: &[f64], z: Complex64, compensated: bool) -> Complex64 {
    if compensated {
        dd::horner_dd(coefficients, z)
    } else {
        horner_plain(coefficients, z)
    }
}

/// Newton ratio P(z)/P'(z) evaluated without overflow.
///
/// Window tapers put some frame zeros far outside the unit circle, where
/// powers of z at degree ~500 exceed f64 range. For |z| > 1 the ratio is
/// computed through the reversed polynomial Q(w) = w^n P(1/w) at w = 1/z:
/// P/P' = z·Q(w) / (n·Q(w) - w·Q'(w)), keeping every power inside the unit
/// disk. Returns `None` when the evaluated polynomial is exactly zero.
struct NewtonEval {
    /// P coefficients, descending powers of z.
    forward: Vec<f64>,
    /// P' coefficients.
    forward_deriv: Vec<f64>,
    /// Q = reversed coefficients, descending powers of w.
    reversed: Vec<f64>,
    /// Q' coefficients.
    reversed_deriv: Vec<f64>,
    compensated: bool,
}

impl NewtonEval {
    fn new(coefficients: &[f64], compensated: bool) -> Self {
        let degree = coefficients.len() - 1;
        let deriv = |c: &[f64]| -> Vec<f64> {
            let n = c.len() - 1;
            c[..n]
                .iter()
                .enumerate()
                .map(|(i, &v)| v * (n - i) as f64)
                .collect()
        };
        let forward = coefficients.to_vec();
        let reversed: Vec<f64> = coefficients.iter().rev().cloned().collect();
        let forward_deriv = deriv(&forward);
        let reversed_deriv = deriv(&reversed);
        let _ = degree;
        Self {
            forward,
            forward_deriv,
            reversed,
            reversed_deriv,
            compensated,
        }
    }

    fn degree(&self) -> usize {
        self.forward.len() - 1
    }

    fn newton_ratio(&self, z: Complex64) -> Option<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        if z.norm_sqr() <= 1.0 {
            let p = eval_poly(&self.forward, z, self.compensated);
            if p == zero {
                return None;
            }
            let dp = eval_poly(&self.forward_deriv, z, false);
            if dp == zero {
                return Some(Complex64::new(f64::INFINITY, 0.0));
            }
            Some(p / dp)
        } else {
            let w = z.inv();
            let q = eval_poly(&self.reversed, w, self.compensated);
            if q == zero {
                return None;
            }
            let dq = eval_poly(&self.reversed_deriv, w, false);
            let denom = self.degree() as f64 * q - w * dq;
            if denom == zero {
                return Some(Complex64::new(f64::INFINITY, 0.0));
            }
            Some(z * q / denom)
        }
    }
}

/// Simultaneous Aberth-Ehrlich correction of `initial_roots` against
/// `coefficients` (descending powers).
///
/// Iterates until the max per-root correction drops below 1e-12·|root| or 50
/// sweeps elapse. A stalled iteration is not an error — clustered roots stop
/// at the evaluation noise floor and the caller's residual check is the
/// arbiter — but non-finite intermediates are.
pub fn refine_roots(coefficients: &[f64], initial_roots: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = coefficients.len() - 1;
    if initial_roots.len() != degree {
        return Err(Error::invalid(format!(
            "expected {degree} initial roots, got {}",
            initial_roots.len()
        )));
    }
    if degree == 0 {
        return Ok(Vec::new());
    }
    let evaluator = NewtonEval::new(coefficients, degree > COMPENSATED_DEGREE);
    aberth_iterate(&evaluator, initial_roots.to_vec(), MAX_REFINE_ITERS)
}

fn aberth_iterate(
    evaluator: &NewtonEval,
    mut z: Vec<Complex64>,
    max_sweeps: usize,
) -> Result<Vec<Complex64>> {
    let degree = z.len();
    // Non-finite or coincident estimates would poison the repulsion term.
    for (i, zi) in z.iter_mut().enumerate() {
        if !zi.re.is_finite() || !zi.im.is_finite() {
            *zi = Complex64::from_polar(1e3, 0.1 + i as f64);
        }
    }
    for i in 1..degree {
        for j in 0..i {
            if z[i] == z[j] {
                let bump = 1e-8 * (1.0 + z[i].norm());
                z[i] += Complex64::new(bump, bump);
            }
        }
    }

    let mut converged = vec![false; degree];
    for _sweep in 0..max_sweeps {
        let mut max_rel = 0.0_f64;
        let mut active = 0usize;
        for i in 0..degree {
            if converged[i] {
                continue;
            }
            active += 1;
            let zi = z[i];
            let newton = match evaluator.newton_ratio(zi) {
                None => {
                    converged[i] = true; // exactly on a root
                    continue;
                }
                Some(n) if n.re.is_finite() && n.im.is_finite() => n,
                // derivative vanished; take a small deterministic step
                Some(_) => Complex64::new(1e-8 * (1.0 + zi.norm()), 0.0),
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let d = zi - zj;
                    if d != Complex64::new(0.0, 0.0) {
                        repulsion += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let mut correction = if denom.norm() < 1e-30 {
                newton
            } else {
                newton / denom
            };
            // Damp overshoots: an estimate far from the others gets a
            // repulsion that can cancel the Newton denominator and catapult
            // it across the whole root cloud.
            let cap = 0.5 * zi.norm().max(1e-3);
            if correction.norm() > cap {
                correction *= cap / correction.norm();
            }
            let updated = zi - correction;
            if !updated.re.is_finite() || !updated.im.is_finite() {
                return Err(Error::NumericalFailure(
                    "root refinement diverged to non-finite value".into(),
                ));
            }
            z[i] = updated;
            let rel = correction.norm() / zi.norm().max(f64::MIN_POSITIVE);
            if rel < REFINE_TOL {
                converged[i] = true;
            }
            max_rel = max_rel.max(rel);
        }
        if active == 0 || max_rel < REFINE_TOL {
            break;
        }
    }
    Ok(z)
}

/// Max relative residual of `X(z) = gain · z^{-degree} · Π (z - Z_m)` over
/// 1024-point (or denser, for long frames) grids on the two selection-annulus
/// boundary circles.
///
/// The left side is evaluated through the modulated-DFT identity, the right
/// side from the root product. Deviations on each circle are scaled by the
/// l1 mass of the modulated series, Σ|x(n)·R^{-n}|: that is both the
/// attainable maximum of |X| on the circle and the level at which machine
/// evaluation of either side bottoms out, so the quotient is a genuine
/// backward-error measure.
pub fn verify_roots(frame: &Frame, rootset: &RootSet) -> Result<f64> {
    let samples = frame.samples();
    let series = &samples[rootset.delay()..];
    if series.len() != rootset.degree() + 1 {
        return Err(Error::invalid(format!(
            "rootset degree {} inconsistent with frame of effective length {}",
            rootset.degree(),
            series.len()
        )));
    }
    // frames may be as short as 2 samples; the bounds formula wants L >= 4
    let (r_lo, r_hi) = radius::selection_bounds(frame.window_length().max(4))?;
    let k = series.len().next_power_of_two().max(1024);

    let mut worst = 0.0_f64;
    for &circle in &[r_lo, r_hi] {
        let dft = czt::chirp_transform_samples(series, circle, k)?;
        let product = root_product_on_circle(
            rootset.roots(),
            rootset.gain(),
            -(rootset.degree() as i64),
            circle,
            k,
        );
        let mut scale = 0.0;
        let mut modulation = 1.0;
        for &x in series {
            scale += (x * modulation).abs();
            modulation /= circle;
        }
        if scale == 0.0 {
            return Err(Error::DegenerateInput(
                "zero series on verification circle".into(),
            ));
        }
        let err = dft
            .iter()
            .zip(&product)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        worst = worst.max(err / scale);
    }
    Ok(worst)
}

/// Evaluates `gain · z^{z_exponent} · Π (z - root)` on the K-point uniform
/// grid of the circle |z| = radius, accumulating the product in
/// log-magnitude / summed-phase form so high degrees cannot overflow.
pub(crate) fn root_product_on_circle(
    roots: &[Complex64],
    gain: f64,
    z_exponent: i64,
    radius: f64,
    k: usize,
) -> Vec<Complex64> {
    let base_mag = gain.abs().ln() + z_exponent as f64 * radius.ln();
    let base_arg = if gain < 0.0 { std::f64::consts::PI } else { 0.0 };
    (0..k)
        .map(|j| {
            let omega = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let z = Complex64::from_polar(radius, omega);
            let mut log_mag = base_mag;
            let mut arg = base_arg + z_exponent as f64 * omega;
            for root in roots {
                let d = z - root;
                log_mag += d.norm().ln();
                arg += d.arg();
            }
            Complex64::from_polar(log_mag.exp(), arg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::expand_roots;
    use crate::testutil::{frame_of, random_annulus_roots, real_coeffs};

    /// Greedy root-to-root matching; adequate when generators are separated.
    fn max_match_error(found: &[Complex64], expected: &[Complex64]) -> f64 {
        let mut used = vec![false; expected.len()];
        let mut worst = 0.0_f64;
        for f in found {
            let mut best = f64::INFINITY;
            let mut best_j = 0;
            for (j, e) in expected.iter().enumerate() {
                if !used[j] {
                    let d = (f - e).norm() / e.norm().max(1.0);
                    if d < best {
                        best = d;
                        best_j = j;
                    }
                }
            }
            used[best_j] = true;
            worst = worst.max(best);
        }
        worst
    }

    #[test]
    fn quadratic_factorization() {
        let rs = find_roots(&frame_of(vec![1.0, -1.5, 0.5])).unwrap();
        assert_eq!(rs.degree(), 2);
        assert_eq!(rs.gain(), 1.0);
        let mut mods: Vec<f64> = rs.roots().iter().map(|r| r.re).collect();
        mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mods[0] - 0.5).abs() < 1e-12);
        assert!((mods[1] - 1.0).abs() < 1e-12);
        assert!(rs.roots().iter().all(|r| r.im.abs() < 1e-12));
    }

    #[test]
    fn impulse_with_trailing_zeros() {
        let rs = find_roots(&frame_of(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(rs.degree(), 3);
        assert_eq!(rs.gain(), 1.0);
        assert!(rs.roots().iter().all(|r| r.norm() == 0.0));
    }

    #[test]
    fn all_zero_frame_rejected() {
        assert!(matches!(
            find_roots(&frame_of(vec![0.0; 8])),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn recovers_known_degree_64_roots() {
        let roots = random_annulus_roots(64, 42);
        let coeffs = real_coeffs(&roots, 1.0);
        let rs = find_roots(&frame_of(coeffs)).unwrap();
        assert!(max_match_error(rs.roots(), &roots) < 1e-6);
    }

    #[test]
    fn delay_invariance() {
        let roots = random_annulus_roots(16, 7);
        let coeffs = real_coeffs(&roots, 1.0);
        let plain = find_roots(&frame_of(coeffs.clone())).unwrap();
        let mut delayed = vec![0.0; 3];
        delayed.extend_from_slice(&coeffs);
        let shifted = find_roots(&frame_of(delayed)).unwrap();
        assert_eq!(shifted.delay(), 3);
        assert_eq!(plain.degree(), shifted.degree());
        assert!(max_match_error(shifted.roots(), plain.roots()) < 1e-12);
    }

    #[test]
    fn scale_equivariance() {
        let roots = random_annulus_roots(32, 3);
        let coeffs = real_coeffs(&roots, 1.0);
        let base = find_roots(&frame_of(coeffs.clone())).unwrap();
        for &alpha in &[1e-6, 1e6] {
            let scaled: Vec<f64> = coeffs.iter().map(|c| c * alpha).collect();
            let rs = find_roots(&frame_of(scaled)).unwrap();
            assert!(max_match_error(rs.roots(), base.roots()) < 1e-9);
            assert!((rs.gain() - alpha * base.gain()).abs() <= 1e-9 * alpha * base.gain().abs());
        }
    }

    #[test]
    fn conjugate_closure_on_real_frames() {
        let roots = random_annulus_roots(63, 11);
        let coeffs = real_coeffs(&roots, 0.7);
        let rs = find_roots(&frame_of(coeffs)).unwrap();
        assert!(rs.conjugate_closure_defect() < 1e-6);
    }

    #[test]
    fn verify_detects_perturbed_root() {
        let roots = random_annulus_roots(16, 5);
        let coeffs = real_coeffs(&roots, 1.0);
        let frame = frame_of(coeffs);
        let good = find_roots(&frame).unwrap();
        assert!(good.residual_max() <= 1e-9);

        let mut bad_roots = good.roots().to_vec();
        bad_roots[0] += Complex64::new(1e-3, 0.0);
        let bad = RootSet {
            roots: bad_roots,
            gain: good.gain(),
            delay: good.delay(),
            residual_max: f64::NAN,
        };
        assert!(verify_roots(&frame, &bad).unwrap() > 1e-6);
    }

    #[test]
    fn refine_is_fixed_point_on_exact_roots() {
        let roots = random_annulus_roots(12, 19);
        let coeffs = real_coeffs(&roots, 1.0);
        let refined = refine_roots(&coeffs, &roots).unwrap();
        for (a, b) in refined.iter().zip(&roots) {
            assert!((a - b).norm() < 1e-14 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn refine_restores_perturbed_roots() {
        let roots = random_annulus_roots(32, 23);
        let coeffs = real_coeffs(&roots, 1.0);
        let perturbed: Vec<Complex64> = roots
            .iter()
            .map(|r| r + Complex64::new(1e-4, -1e-4))
            .collect();
        let refined = refine_roots(&coeffs, &perturbed).unwrap();
        let mut worst = 0.0_f64;
        for (a, b) in refined.iter().zip(&roots) {
            worst = worst.max((a - b).norm() / b.norm());
        }
        assert!(worst < 1e-10, "worst restoration error {worst:.2e}");
    }

    #[test]
    fn clustered_double_root() {
        // (z - 0.9)^2 = z^2 - 1.8 z + 0.81
        let rs = find_roots(&frame_of(vec![1.0, -1.8, 0.81])).unwrap();
        for r in rs.roots() {
            assert!((r - Complex64::new(0.9, 0.0)).norm() < 1e-5);
        }
    }

    #[test]
    fn roundtrip_expansion_recovers_coefficients() {
        let roots = random_annulus_roots(128, 77);
        let coeffs = real_coeffs(&roots, 1.0);
        let rs = find_roots(&frame_of(coeffs.clone())).unwrap();
        let re_expanded = expand_roots(rs.roots(), rs.gain());
        let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        for (a, b) in re_expanded.iter().zip(&coeffs) {
            assert!((a.re - b).abs() / scale < 1e-8);
            assert!(a.im.abs() / scale < 1e-8);
        }
    }
}
