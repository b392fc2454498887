//! Explicit trial families: cut-off extremal bubbles, anisotropic
//! Gaussians, negative-B witnesses and the large-mass sequence.
//!
//! The bubble family `v_ε = √c · φ(r) W_ε(r) / ‖φ W_ε‖₂` with
//! `W_ε = (ε/(ε²+r²))^{1/2}` concentrates at scale ε and its projected
//! energy approaches the Sobolev threshold like √ε from above; φ is a C¹
//! cubic smoothstep equal to 1 on the unit ball and 0 outside radius 2,
//! radially decreasing, so every functional of the bubble is finite and
//! grid-converged. Because the bubble is radial all its functionals are
//! one-dimensional integrals; [`bubble_scalars`] evaluates them by
//! adaptive quadrature, which stays accurate at concentration scales far
//! below what any affordable grid resolves.
//!
//! The large-mass sequence rescales a negative-B seed by `q·u(s·x)` so
//! that `‖u_n‖₂ = n` and `B(u_n) = -1`; mass scales like q²s⁻³ and both
//! interaction integrals like q⁴s⁻³, which pins (q, s) from the seed's
//! (mass, B) alone. The projection scale θ_n of u_n tends to 0 and the
//! projected energies decay like the square of the mass, which is the
//! quantitative engine behind γ(c) → 0.

use crate::error::{Error, Result};
use crate::fibering::{find_tstar, FiberCoefficients};
use crate::functionals::{classify, evaluate_with, CouplingPair, Regime};
use crate::grid_spectral::{Field, Grid, SpectralEngine};
use crate::numerics::{adaptive_simpson, adaptive_simpson_split};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Cutoff inner radius: φ ≡ 1 on the ball of this radius.
pub const BUBBLE_INNER_RADIUS: f64 = 1.0;
/// Cutoff outer radius: φ ≡ 0 outside this radius.
pub const BUBBLE_OUTER_RADIUS: f64 = 2.0;

/// Concentration scale and target mass of a cut-off bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub epsilon: f64,
    pub mass: f64,
}

impl BubbleParams {
    pub fn new(epsilon: f64, mass: f64) -> BubbleParams {
        BubbleParams { epsilon, mass }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Domain(format!(
                "bubble scale must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.mass > 0.0) {
            return Err(Error::Domain("bubble mass must be positive".into()));
        }
        Ok(())
    }
}

/// C¹ radially decreasing cutoff: 1 on r ≤ 1, 0 on r ≥ 2, cubic
/// smoothstep between.
fn cutoff(r: f64) -> f64 {
    if r <= BUBBLE_INNER_RADIUS {
        1.0
    } else if r >= BUBBLE_OUTER_RADIUS {
        0.0
    } else {
        let s = r - BUBBLE_INNER_RADIUS;
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

fn cutoff_derivative(r: f64) -> f64 {
    if r <= BUBBLE_INNER_RADIUS || r >= BUBBLE_OUTER_RADIUS {
        0.0
    } else {
        let s = r - BUBBLE_INNER_RADIUS;
        -(6.0 * s - 6.0 * s * s)
    }
}

fn bubble_profile(epsilon: f64, r: f64) -> f64 {
    cutoff(r) * (epsilon / (epsilon * epsilon + r * r)).sqrt()
}

/// Samples the normalized bubble `v_ε` on a grid.
///
/// Requires at least 4 samples across the concentration scale and a box
/// containing the cutoff support.
pub fn aubin_talenti_bubble(params: &BubbleParams, grid: &Arc<Grid>) -> Result<Field> {
    params.validate()?;
    let max_spacing = grid.spacing().iter().cloned().fold(0.0f64, f64::max);
    if max_spacing > params.epsilon / 4.0 {
        return Err(Error::Resolution(format!(
            "bubble scale {} needs spacing <= {:.3e}, grid has {:.3e}",
            params.epsilon,
            params.epsilon / 4.0,
            max_spacing
        )));
    }
    if grid.half_lengths().iter().any(|&l| l < BUBBLE_OUTER_RADIUS) {
        return Err(Error::Resolution(
            "box must contain the cutoff support (half-length >= 2)".into(),
        ));
    }
    let eps = params.epsilon;
    let mut field = Field::sample_real(grid, move |x| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        bubble_profile(eps, r)
    });
    field.normalize_mass(params.mass)?;
    Ok(field)
}

/// Continuum radial integrals of the unnormalized bubble profile.
#[derive(Debug, Clone, Copy)]
pub struct BubbleScalars {
    pub mass: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub sextic: f64,
}

/// Radial quadrature of mass, A, ‖·‖₄⁴ and ‖·‖₆⁶ for `φ W_ε`.
pub fn bubble_scalars(params: &BubbleParams) -> Result<BubbleScalars> {
    params.validate()?;
    let eps = params.epsilon;
    let u = |r: f64| bubble_profile(eps, r);
    let du = move |r: f64| {
        let d = eps * eps + r * r;
        cutoff_derivative(r) * (eps / d).sqrt() - cutoff(r) * eps.sqrt() * r * d.powf(-1.5)
    };
    let mut pts = vec![0.0, eps, 4.0 * eps, 16.0 * eps, BUBBLE_INNER_RADIUS, BUBBLE_OUTER_RADIUS];
    pts.retain(|&p| p <= BUBBLE_OUTER_RADIUS);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let tol = 1e-13;
    let sphere = 4.0 * PI;
    let mass = sphere * adaptive_simpson_split(&|r: f64| r * r * u(r).powi(2), &pts, tol);
    let kinetic = sphere * adaptive_simpson_split(&|r: f64| r * r * du(r).powi(2), &pts, tol);
    let quartic = sphere * adaptive_simpson_split(&|r: f64| r * r * u(r).powi(4), &pts, tol);
    let sextic = sphere * adaptive_simpson_split(&|r: f64| r * r * u(r).powi(6), &pts, tol);
    for (name, v) in [
        ("mass", mass),
        ("kinetic", kinetic),
        ("quartic", quartic),
        ("sextic", sextic),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Quadrature(format!("bubble {name} integral failed: {v}")));
        }
    }
    Ok(BubbleScalars {
        mass,
        kinetic,
        quartic,
        sextic,
    })
}

/// Projected bubble: fiber coefficients of the *normalized* bubble, the
/// projection scale and the projected energy, all on the quadrature
/// route (no grid involved, so arbitrarily small ε is reachable).
#[derive(Debug, Clone, Copy)]
pub struct ProjectedBubble {
    pub coefficients: FiberCoefficients,
    pub tstar: f64,
    pub energy: f64,
}

/// Projects `v_ε` onto V(c) and reports E(v_ε^{t*}).
///
/// The bubble is radial, so the dipolar integral vanishes and only λ1
/// enters B.
pub fn projected_bubble_energy(params: &BubbleParams, cp: CouplingPair) -> Result<ProjectedBubble> {
    let s = bubble_scalars(params)?;
    let k = params.mass / s.mass; // squared-amplitude normalization factor
    let coefficients = FiberCoefficients::new(
        k * s.kinetic,
        cp.lambda1 * k * k * s.quartic,
        k * k * k * s.sextic,
    );
    let tstar = find_tstar(coefficients)?;
    Ok(ProjectedBubble {
        coefficients,
        tstar,
        energy: coefficients.energy(tstar),
    })
}

/// Widths and target mass of a product Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub widths: [f64; 3],
    pub mass: f64,
}

impl GaussianParams {
    pub fn new(widths: [f64; 3], mass: f64) -> GaussianParams {
        GaussianParams { widths, mass }
    }
}

/// Samples the normalized Gaussian `∝ exp(-Σ x_i²/(2σ_i²))`.
///
/// Widths must be resolvable (σ ≥ 2h) and must fit the box (4σ ≤ L).
pub fn anisotropic_gaussian(params: &GaussianParams, grid: &Arc<Grid>) -> Result<Field> {
    if !(params.mass > 0.0) {
        return Err(Error::Domain("gaussian mass must be positive".into()));
    }
    for axis in 0..3 {
        let sigma = params.widths[axis];
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!("gaussian width must be positive, got {sigma}")));
        }
        let h = grid.spacing()[axis];
        let l = grid.half_lengths()[axis];
        if sigma < 2.0 * h {
            return Err(Error::Resolution(format!(
                "width {sigma} along axis {axis} under-resolved: spacing {h}"
            )));
        }
        if 4.0 * sigma > l {
            return Err(Error::Resolution(format!(
                "width {sigma} along axis {axis} does not fit half-length {l}"
            )));
        }
    }
    let w = params.widths;
    let mut field = Field::sample_real(grid, move |x| {
        (-(x[0] * x[0] / (w[0] * w[0]) + x[1] * x[1] / (w[1] * w[1]) + x[2] * x[2] / (w[2] * w[2]))
            / 2.0)
            .exp()
    });
    field.normalize_mass(params.mass)?;
    Ok(field)
}

/// Closed-form continuum moments of `a·exp(-Σ x_i²/(2σ_i²))`.
///
/// The dipolar integral requires axial symmetry (σ1 = σ2) and reduces to
/// a one-dimensional quadrature over the polar angle.
#[derive(Debug, Clone, Copy)]
pub struct GaussianMoments {
    pub mass: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub sextic: f64,
    /// `∫ (K*ρ)ρ`; None when the widths are not axisymmetric.
    pub dipolar: Option<f64>,
}

pub fn gaussian_moments(amplitude: f64, widths: [f64; 3]) -> GaussianMoments {
    let [s1, s2, s3] = widths;
    let a2 = amplitude * amplitude;
    let vol = s1 * s2 * s3;
    let mass = a2 * PI.powf(1.5) * vol;
    let kinetic = a2 * PI.powf(1.5) / 2.0 * (s2 * s3 / s1 + s1 * s3 / s2 + s1 * s2 / s3);
    let quartic = a2 * a2 * (PI / 2.0).powf(1.5) * vol;
    let sextic = a2 * a2 * a2 * (PI / 3.0).powf(1.5) * vol;
    let dipolar = if (s1 - s2).abs() <= 1e-14 * s1.max(s2) {
        let (sp, sz) = (s1, s3);
        let pref = a2 * a2 * PI.powi(3) * (sp * sp * sz).powi(2) / (2.0 * PI).powi(3)
            * 2.0
            * PI
            * (4.0 * PI / 3.0);
        let integrand = |c: f64| {
            let beta = sp * sp + (sz * sz - sp * sp) * c * c;
            (3.0 * c * c - 1.0) * PI.sqrt() * 2.0f64.powf(1.5) / (4.0 * beta.powf(1.5))
        };
        Some(pref * adaptive_simpson(&integrand, -1.0, 1.0, 1e-13))
    } else {
        None
    };
    GaussianMoments {
        mass,
        kinetic,
        quartic,
        sextic,
        dipolar,
    }
}

/// One member of the large-mass sequence, on the scalar route.
#[derive(Debug, Clone, Copy)]
pub struct LargeMassMember {
    pub index: u32,
    /// Amplitude factor of the rescale q·u(s·x).
    pub q: f64,
    /// Argument factor of the rescale.
    pub s: f64,
    /// Widths of the rescaled Gaussian.
    pub widths: [f64; 3],
    /// Amplitude of the rescaled Gaussian.
    pub amplitude: f64,
    /// Fiber coefficients of u_n (B is -1 by construction).
    pub coefficients: FiberCoefficients,
    /// Projection scale θ_n with Q(u_n^{θ_n}) = 0.
    pub theta: f64,
    /// E(u_n^{θ_n}).
    pub projected_energy: f64,
}

/// Default negative-B Gaussian seed orientation for a coupling.
pub fn default_seed_widths(cp: CouplingPair) -> [f64; 3] {
    if cp.lambda2 > 0.0 {
        [1.0, 1.0, 3.0]
    } else if cp.lambda2 < 0.0 {
        [1.5, 1.5, 0.6]
    } else {
        [1.0, 1.0, 1.0]
    }
}

/// Builds the n-th member of the sequence `‖u_n‖₂ = n`, `B(u_n) = -1`
/// from a Gaussian seed, entirely on continuum scalars.
pub fn large_mass_member(
    n: u32,
    cp: CouplingPair,
    seed_widths: [f64; 3],
    seed_amplitude: f64,
) -> Result<LargeMassMember> {
    if n == 0 {
        return Err(Error::Domain("sequence index must be positive".into()));
    }
    if classify(cp).regime != Regime::Unstable {
        return Err(Error::Domain(
            "large-mass sequence requires an unstable coupling".into(),
        ));
    }
    let m = gaussian_moments(seed_amplitude, seed_widths);
    let dipolar = m.dipolar.ok_or_else(|| {
        Error::Domain("large-mass seed must be axisymmetric (σ1 = σ2)".into())
    })?;
    let b0 = cp.lambda1 * m.quartic + cp.lambda2 * dipolar;
    if b0 >= 0.0 {
        return Err(Error::Domain(format!(
            "large-mass seed has B = {b0} >= 0; a negative-B seed is required"
        )));
    }
    let target_mass = (n as f64) * (n as f64);
    let q2 = m.mass / (target_mass * (-b0));
    let q = q2.sqrt();
    let s = (m.mass * m.mass / (target_mass * target_mass * (-b0))).powf(1.0 / 3.0);
    let a_n = m.kinetic * q2 / s;
    let c_n = m.sextic * q2 * q2 * q2 / (s * s * s);
    let coefficients = FiberCoefficients::new(a_n, -1.0, c_n);
    let theta = find_tstar(coefficients)?;
    Ok(LargeMassMember {
        index: n,
        q,
        s,
        widths: [
            seed_widths[0] / s,
            seed_widths[1] / s,
            seed_widths[2] / s,
        ],
        amplitude: q * seed_amplitude,
        coefficients,
        theta,
        projected_energy: coefficients.energy(theta),
    })
}

/// Samples u_n on a grid and verifies the construction discretely.
///
/// The grid must resolve the rescaled widths; the discrete mass and
/// interaction functional are checked against (n², -1).
pub fn large_mass_sequence(n: u32, cp: CouplingPair, grid: &Arc<Grid>) -> Result<Field> {
    let member = large_mass_member(n, cp, default_seed_widths(cp), 1.0)?;
    let w = member.widths;
    let amp = member.amplitude;
    for axis in 0..3 {
        let h = grid.spacing()[axis];
        let l = grid.half_lengths()[axis];
        if w[axis] < 2.0 * h || 4.0 * w[axis] > l {
            return Err(Error::Resolution(format!(
                "rescaled width {:.3} along axis {axis} not representable on spacing {h:.3}, half-length {l}",
                w[axis]
            )));
        }
    }
    let mut field = Field::sample_real(grid, move |x| {
        amp * (-(x[0] * x[0] / (w[0] * w[0])
            + x[1] * x[1] / (w[1] * w[1])
            + x[2] * x[2] / (w[2] * w[2]))
            / 2.0)
            .exp()
    });
    let target_mass = (n as f64) * (n as f64);
    field.normalize_mass(target_mass)?;
    let engine = SpectralEngine::new(grid);
    let report = evaluate_with(&engine, &field, cp)?;
    if (report.mass - target_mass).abs() > 1e-6 * target_mass {
        return Err(Error::Resolution(format!(
            "discrete mass {} deviates from n² = {target_mass}",
            report.mass
        )));
    }
    if (report.b + 1.0).abs() > 1e-6 {
        return Err(Error::Resolution(format!(
            "discrete interaction functional {} deviates from -1",
            report.b
        )));
    }
    Ok(field)
}

/// Searches a grid-resolvable Gaussian family for a state with B < 0
/// under an unstable coupling.
///
/// For λ2 > 0 the family elongates along the dipole axis (the spectral
/// weight descends toward d⁺ < 0), for λ2 < 0 it flattens (weight toward
/// d⁻ < 0), and for λ2 = 0, λ1 < 0 a radial state already works. The
/// reachable weight is limited by the largest aspect ratio the grid can
/// resolve.
pub fn unstable_witness(cp: CouplingPair, grid: &Arc<Grid>, mass: f64) -> Result<Field> {
    if classify(cp).regime != Regime::Unstable {
        return Err(Error::Domain(
            "negative-B witnesses exist only for unstable couplings".into(),
        ));
    }
    let engine = SpectralEngine::new(grid);
    let h = grid.spacing();
    let l = grid.half_lengths();
    let mut best: Option<(f64, Field)> = None;
    for aspect in [1.0, 2.0, 3.0, 4.0, 6.0, 8.0] {
        let widths = if cp.lambda2 >= 0.0 {
            let base = (2.0 * h[0].max(h[1])).max(l[0].min(l[1]) / 32.0);
            [base, base, base * aspect]
        } else {
            let base = (2.0 * h[2]).max(l[2] / 32.0);
            [base * aspect, base * aspect, base]
        };
        let fits = (0..3).all(|i| widths[i] >= 2.0 * h[i] && 4.0 * widths[i] <= l[i]);
        if !fits {
            continue;
        }
        let field = anisotropic_gaussian(&GaussianParams::new(widths, mass), grid)?;
        let report = evaluate_with(&engine, &field, cp)?;
        if report.b < 0.0 {
            return Ok(field);
        }
        if best.as_ref().map_or(true, |(b, _)| report.b < *b) {
            best = Some((report.b, field));
        }
        if cp.lambda2 == 0.0 {
            break;
        }
    }
    let reached = best.map(|(b, _)| b).unwrap_or(f64::NAN);
    Err(Error::Resolution(format!(
        "no negative-B state at grid-resolvable anisotropy for (λ1, λ2) = ({}, {}); best B = {reached:.3e}",
        cp.lambda1, cp.lambda2
    )))
}
