//! Scalar functionals of a state and the coupling-regime dichotomy.
//!
//! For a state u and couplings (λ1, λ2):
//!
//! ```text
//! A(u) = ‖∇u‖₂²
//! B(u) = λ1 ‖u‖₄⁴ + λ2 ∫ (K*|u|²)|u|² dx
//! C(u) = ‖u‖₆⁶
//! E(u) = ½A + ¼B - ⅙C
//! Q(u) = A + ¾B - C
//! ```
//!
//! B is evaluated entirely on the frequency side as
//! `(2π)^{-3} Σ (λ1 + λ2 K̂)|ρ̂|² dΞ` with ρ = |u|²; this is one code path
//! for both the contact and dipolar parts and makes the regime bounds
//! `d⁺ = λ1 - (4π/3)λ2`, `d⁻ = λ1 + (8π/3)λ2` pointwise visible: in the
//! stable regime the spectral weight is bounded below by min(d⁺, d⁻) > 0,
//! so B(u) > 0 for every nonzero state.
//!
//! All reductions use compensated summation in a fixed order, so results
//! are reproducible bit-for-bit across runs and thread counts.

use crate::error::{Error, Result};
use crate::grid_spectral::{Field, SpectralEngine, KDD};
use crate::io::float17;
use crate::numerics::{compensated_sum, Accumulator};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Contact coupling λ1 and dipolar coupling λ2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingPair {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl CouplingPair {
    pub fn new(lambda1: f64, lambda2: f64) -> CouplingPair {
        CouplingPair { lambda1, lambda2 }
    }

    /// Discriminant λ1 - (4π/3) λ2 (spectral weight at the transverse edge).
    pub fn d_plus(&self) -> f64 {
        self.lambda1 - KDD * self.lambda2
    }

    /// Discriminant λ1 + (8π/3) λ2 (spectral weight at the axial edge).
    pub fn d_minus(&self) -> f64 {
        self.lambda1 + 2.0 * KDD * self.lambda2
    }
}

/// Sign dichotomy of the interaction functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// B(u) < 0 is attainable; bound states can exist.
    Unstable,
    /// B(u) > 0 for every nonzero state; no nontrivial bound states.
    Stable,
    /// On the dividing lines; neither strict inequality holds.
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Unstable => "unstable",
            Regime::Stable => "stable",
            Regime::Boundary => "boundary",
        }
    }
}

/// Classification result with the discriminants retained for reporting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegimeClass {
    pub regime: Regime,
    pub d_plus: f64,
    pub d_minus: f64,
}

impl RegimeClass {
    pub fn to_json(&self) -> String {
        format!(
            "{{\"regime\":\"{}\",\"d_plus\":{},\"d_minus\":{}}}",
            self.regime.as_str(),
            float17(self.d_plus),
            float17(self.d_minus)
        )
    }
}

/// Classifies a coupling pair.
///
/// λ2 = 0 removes the dipolar term and the dichotomy reduces to the sign
/// of λ1; all cases with a vanishing discriminant are reported as
/// `Boundary` because the dichotomy is strict-inequality only.
pub fn classify(cp: CouplingPair) -> RegimeClass {
    let d_plus = cp.d_plus();
    let d_minus = cp.d_minus();
    let regime = if cp.lambda2 > 0.0 {
        if d_plus < 0.0 {
            Regime::Unstable
        } else if d_plus > 0.0 {
            Regime::Stable
        } else {
            Regime::Boundary
        }
    } else if cp.lambda2 < 0.0 {
        if d_minus < 0.0 {
            Regime::Unstable
        } else if d_minus > 0.0 {
            Regime::Stable
        } else {
            Regime::Boundary
        }
    } else if cp.lambda1 < 0.0 {
        Regime::Unstable
    } else if cp.lambda1 > 0.0 {
        Regime::Stable
    } else {
        Regime::Boundary
    };
    RegimeClass {
        regime,
        d_plus,
        d_minus,
    }
}

/// The six scalars (mass, A, B, C, E, Q) of one state.
///
/// `c` is the sextic norm ‖u‖₆⁶, not the mass constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub q: f64,
}

impl FunctionalReport {
    /// Rebuilds E and Q from (mass, A, B, C); keeps the four-scalar state
    /// and its derived combinations exactly consistent.
    pub fn from_parts(mass: f64, a: f64, b: f64, c: f64) -> FunctionalReport {
        FunctionalReport {
            mass,
            a,
            b,
            c,
            e: 0.5 * a + 0.25 * b - c / 6.0,
            q: a + 0.75 * b - c,
        }
    }

    /// Flat JSON object with 17-significant-digit decimal floats.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"mass\":{},\"A\":{},\"B\":{},\"C\":{},\"E\":{},\"Q\":{}}}",
            float17(self.mass),
            float17(self.a),
            float17(self.b),
            float17(self.c),
            float17(self.e),
            float17(self.q)
        )
    }
}

/// Contact and dipolar interaction integrals `(‖u‖₄⁴, ∫(K*ρ)ρ)`,
/// both from the density spectrum.
pub fn interaction_parts(engine: &SpectralEngine, u: &Field) -> Result<(f64, f64)> {
    let density = density_of(u);
    interaction_parts_of_density(engine, &density)
}

fn density_of(u: &Field) -> Field {
    let mut rho = u.clone();
    for v in rho.values_mut() {
        *v = Complex64::new(v.norm_sqr(), 0.0);
    }
    rho
}

fn interaction_parts_of_density(engine: &SpectralEngine, rho: &Field) -> Result<(f64, f64)> {
    let spectrum = engine.forward(rho)?;
    let mut quartic = Accumulator::new();
    let mut dipolar = Accumulator::new();
    for (v, &k) in spectrum
        .values()
        .iter()
        .zip(engine.multiplier().values())
    {
        let p = v.norm_sqr();
        quartic.add(p);
        dipolar.add(k * p);
    }
    let scale = engine.grid().freq_cell_volume() / (2.0 * PI).powi(3);
    Ok((quartic.value() * scale, dipolar.value() * scale))
}

/// Evaluates the full functional report of `u` under couplings `cp`.
pub fn evaluate_with(engine: &SpectralEngine, u: &Field, cp: CouplingPair) -> Result<FunctionalReport> {
    let mass = u.l2_norm_sqr();
    if !mass.is_finite() {
        return Err(Error::NonFinite { what: "mass" });
    }
    let spectrum = engine.forward(u)?;
    let a = engine.kinetic_from_spectrum(&spectrum);
    if !a.is_finite() {
        return Err(Error::NonFinite { what: "A" });
    }
    let (quartic, dipolar) = interaction_parts(engine, u)?;
    let b = cp.lambda1 * quartic + cp.lambda2 * dipolar;
    if !b.is_finite() {
        return Err(Error::NonFinite { what: "B" });
    }
    let c = compensated_sum(u.values().iter().map(|z| {
        let p = z.norm_sqr();
        p * p * p
    })) * u.grid().cell_volume();
    if !c.is_finite() {
        return Err(Error::NonFinite { what: "C" });
    }
    Ok(FunctionalReport::from_parts(mass, a, b, c))
}

/// One-shot wrapper around [`evaluate_with`].
pub fn evaluate(u: &Field, cp: CouplingPair) -> Result<FunctionalReport> {
    evaluate_with(&SpectralEngine::new(u.grid()), u, cp)
}

/// Energy gradient `G(u) = -Δu + λ1|u|²u + λ2(K*|u|²)u - |u|⁴u`.
///
/// The constraint multiplier β is excluded; `⟨G(u), v⟩` is the first
/// variation of E at u in direction v.
pub fn gradient_with(engine: &SpectralEngine, u: &Field, cp: CouplingPair) -> Result<Field> {
    let mut spectrum = engine.forward(u)?;
    for (v, &k2) in spectrum.values_mut().iter_mut().zip(engine.xi_sqr()) {
        *v *= k2;
    }
    let minus_lap = engine.inverse(&spectrum)?;
    let density = density_of(u);
    let trap = engine.dipolar_convolve(&density)?;
    let mut out = Field::zeros(engine.grid());
    for i in 0..out.values().len() {
        let ui = u.values()[i];
        let rho = density.values()[i].re;
        let nl = cp.lambda1 * rho + cp.lambda2 * trap.values()[i].re - rho * rho;
        out.values_mut()[i] = minus_lap.values()[i] + nl * ui;
    }
    if !out.is_finite() {
        return Err(Error::NonFinite { what: "gradient" });
    }
    Ok(out)
}

/// One-shot wrapper around [`gradient_with`].
pub fn gradient(u: &Field, cp: CouplingPair) -> Result<Field> {
    gradient_with(&SpectralEngine::new(u.grid()), u, cp)
}

/// Stationarity certificate `‖G(u) + βu‖₂ / ‖u‖₂`.
pub fn residual_with(engine: &SpectralEngine, u: &Field, beta: f64, cp: CouplingPair) -> Result<f64> {
    let mass = u.l2_norm_sqr();
    if mass <= 0.0 {
        return Err(Error::Domain("residual of the zero field".into()));
    }
    let g = gradient_with(engine, u, cp)?;
    let num = compensated_sum(
        g.values()
            .iter()
            .zip(u.values())
            .map(|(gi, ui)| (gi + beta * ui).norm_sqr()),
    ) * u.grid().cell_volume();
    Ok((num / mass).sqrt())
}

/// One-shot wrapper around [`residual_with`].
pub fn residual(u: &Field, beta: f64, cp: CouplingPair) -> Result<f64> {
    residual_with(&SpectralEngine::new(u.grid()), u, beta, cp)
}

/// Real L² pairing `Re ⟨a, b⟩ dV`.
pub fn inner_re(a: &Field, b: &Field) -> f64 {
    compensated_sum(
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x * y.conj()).re),
    ) * a.grid().cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_spectral::Grid;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn normalized_gaussian(grid: &Arc<Grid>) -> Field {
        let norm = PI.powf(-0.75);
        Field::sample_real(grid, move |x| {
            norm * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()
        })
    }

    #[test]
    fn zero_field_reports_zeros() {
        let grid = Grid::cubic(16, 4.0).unwrap();
        let r = evaluate(&Field::zeros(&grid), CouplingPair::new(-1.0, 0.5)).unwrap();
        assert_eq!(
            (r.mass, r.a, r.b, r.c, r.e, r.q),
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn normalized_gaussian_closed_forms() {
        let grid = Grid::cubic(64, 12.0).unwrap();
        let g = normalized_gaussian(&grid);
        let r = evaluate(&g, CouplingPair::new(1.0, 0.0)).unwrap();
        let quartic = (2.0 * PI).powf(-1.5);
        let sextic = 3.0f64.powf(-1.5) * PI.powi(-3);
        assert!((r.mass - 1.0).abs() <= 1e-12);
        assert!((r.a - 1.5).abs() <= 1e-10, "A = {}", r.a);
        assert!((r.b - quartic).abs() <= 1e-12, "B = {}", r.b);
        assert!((r.c - sextic).abs() <= 1e-12, "C = {}", r.c);
        assert!((r.e - (0.5 * r.a + 0.25 * r.b - r.c / 6.0)).abs() == 0.0);
        assert!((r.q - (r.a + 0.75 * r.b - r.c)).abs() == 0.0);
    }

    #[test]
    fn radial_state_makes_b_coupling_blind_in_lambda2() {
        let grid = Grid::cubic(32, 9.0).unwrap();
        let g = normalized_gaussian(&grid);
        let with_dipole = evaluate(&g, CouplingPair::new(-1.0, 2.0)).unwrap();
        let without = evaluate(&g, CouplingPair::new(-1.0, 0.0)).unwrap();
        assert!(
            (with_dipole.b - without.b).abs() <= 1e-9 * without.b.abs(),
            "{} vs {}",
            with_dipole.b,
            without.b
        );
    }

    #[test]
    fn classification_table() {
        assert_eq!(classify(CouplingPair::new(-1.0, 0.0)).regime, Regime::Unstable);
        assert_eq!(classify(CouplingPair::new(0.0, 1.0)).regime, Regime::Unstable);
        assert_eq!(classify(CouplingPair::new(10.0, 1.0)).regime, Regime::Stable);
        assert_eq!(classify(CouplingPair::new(0.0, 0.0)).regime, Regime::Boundary);
        assert_eq!(classify(CouplingPair::new(1.0, 0.0)).regime, Regime::Stable);
        assert_eq!(classify(CouplingPair::new(-1.0, -0.5)).regime, Regime::Unstable);
        assert_eq!(classify(CouplingPair::new(9.0, -1.0)).regime, Regime::Stable);
        // exact boundary line: λ1 = (4π/3) λ2
        assert_eq!(
            classify(CouplingPair::new(KDD, 1.0)).regime,
            Regime::Boundary
        );
        let rc = classify(CouplingPair::new(0.0, 1.0));
        assert_eq!(rc.d_plus, -KDD);
        assert_eq!(rc.d_minus, 2.0 * KDD);
    }

    #[test]
    fn gradient_of_zero_and_plane_wave_kinetic_part() {
        let grid = Grid::cubic(16, 3.0).unwrap();
        let cp = CouplingPair::new(-1.0, 1.0);
        let z = gradient(&Field::zeros(&grid), cp).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));

        let k0 = [grid.frequency(0, 2), grid.frequency(1, 1), grid.frequency(2, 3)];
        let k2 = k0[0] * k0[0] + k0[1] * k0[1] + k0[2] * k0[2];
        let amp = 1e-4; // keep the nonlinear terms at amp³ ~ 1e-12 scale
        let u = Field::sample(&grid, |x| {
            amp * Complex64::new(0.0, k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2]).exp()
        });
        let g = gradient(&u, CouplingPair::new(0.0, 0.0)).unwrap();
        let err = g
            .values()
            .iter()
            .zip(u.values())
            .fold(0.0f64, |m, (gi, ui)| m.max((gi - k2 * ui).norm()));
        assert!(err <= 1e-11 * amp * k2.max(1.0), "kinetic error {err}");
    }

    #[test]
    fn gradient_matches_central_differences_with_second_order() {
        let grid = Grid::cubic(24, 6.0).unwrap();
        let engine = SpectralEngine::new(&grid);
        let cp = CouplingPair::new(-1.0, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let (w1, w2) = (rng.gen_range(0.9..1.4), rng.gen_range(0.9..1.4));
            let u = Field::sample(&grid, |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                Complex64::new((-r2 / (2.0 * w1 * w1)).exp(), 0.3 * (-r2 / (2.0 * w2 * w2)).exp())
            });
            let v = Field::sample(&grid, |x| {
                let r2 = x[0] * x[0] / 1.1 + x[1] * x[1] + 0.8 * x[2] * x[2];
                Complex64::new(0.7 * (-r2 / 2.0).exp(), -0.2 * (-r2 / 1.7).exp() * x[0])
            });
            let g = gradient_with(&engine, &u, cp).unwrap();
            let directional = inner_re(&g, &v);
            let fd = |h: f64| {
                let mut up = u.clone();
                let mut um = u.clone();
                for i in 0..up.values().len() {
                    up.values_mut()[i] += h * v.values()[i];
                    um.values_mut()[i] -= h * v.values()[i];
                }
                let ep = evaluate_with(&engine, &up, cp).unwrap().e;
                let em = evaluate_with(&engine, &um, cp).unwrap().e;
                (ep - em) / (2.0 * h)
            };
            let scale = directional.abs();
            let e3 = (fd(1e-3) - directional).abs() / scale;
            let e4 = (fd(1e-4) - directional).abs() / scale;
            assert!(e4 <= 1e-6, "relative error at h=1e-4: {e4}");
            if e4 > 1e-11 {
                let ratio = e3 / e4;
                assert!(
                    (20.0..500.0).contains(&ratio),
                    "convergence ratio {ratio} (e3={e3}, e4={e4})"
                );
            }
        }
    }

    #[test]
    fn rayleigh_beta_minimizes_residual() {
        let grid = Grid::cubic(24, 6.0).unwrap();
        let engine = SpectralEngine::new(&grid);
        let cp = CouplingPair::new(-1.0, 0.3);
        let u = Field::sample_real(&grid, |x| {
            (-(x[0] * x[0] + 1.3 * x[1] * x[1] + 0.7 * x[2] * x[2]) / 2.0).exp()
        });
        let g = gradient_with(&engine, &u, cp).unwrap();
        let beta = -inner_re(&g, &u) / u.l2_norm_sqr();
        let at = |b: f64| residual_with(&engine, &u, b, cp).unwrap();
        let r0 = at(beta);
        assert!(r0 <= at(beta + 0.05) && r0 <= at(beta - 0.05));
    }

    #[test]
    fn residual_of_small_gaussian_is_the_linear_value() {
        // with β = 0 and couplings (0,0) the only surviving term beyond
        // -Δu is the quintic, which scales like amp⁴ relative; a 1e-3
        // amplitude makes it invisible at 1e-8
        let grid = Grid::cubic(64, 12.0).unwrap();
        let amp = 1e-3;
        let u = Field::sample_real(&grid, move |x| {
            amp * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()
        });
        let r = residual(&u, 0.0, CouplingPair::new(0.0, 0.0)).unwrap();
        let expected = 15.0f64.sqrt() / 2.0; // ‖Δg‖₂/‖g‖₂ for the unit Gaussian
        assert!(
            (r - expected).abs() <= 1e-8 * expected,
            "residual {r} vs {expected}"
        );
    }

    #[test]
    fn residual_rejects_zero_field() {
        let grid = Grid::cubic(16, 3.0).unwrap();
        assert!(matches!(
            residual(&Field::zeros(&grid), 0.0, CouplingPair::new(-1.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn energy_invariant_under_lattice_rotation_and_reflections() {
        let grid = Grid::cubic(24, 6.0).unwrap();
        let cp = CouplingPair::new(-0.8, 0.9);
        let u = Field::sample(&grid, |x| {
            Complex64::new(
                (-(0.9 * x[0] * x[0] + 1.2 * x[1] * x[1] + 0.6 * x[2] * x[2]) / 2.0).exp(),
                0.2 * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp() * x[1],
            )
        });
        let e0 = evaluate(&u, cp).unwrap().e;
        let n = grid.points();
        // rotation by 90° about x3: (x1, x2) -> (-x2, x1)
        let mut rot = Field::zeros(&grid);
        for i1 in 0..n[0] {
            for i2 in 0..n[1] {
                for i3 in 0..n[2] {
                    let j1 = (n[1] - i2) % n[1];
                    rot.values_mut()[grid.index(i1, i2, i3)] = u.values()[grid.index(j1, i1, i3)];
                }
            }
        }
        let er = evaluate(&rot, cp).unwrap().e;
        assert!((er - e0).abs() <= 1e-9 * e0.abs().max(1.0), "{er} vs {e0}");
        for axis in 0..3 {
            let mut refl = Field::zeros(&grid);
            for i1 in 0..n[0] {
                for i2 in 0..n[1] {
                    for i3 in 0..n[2] {
                        let mut j = [i1, i2, i3];
                        j[axis] = (n[axis] - j[axis]) % n[axis];
                        refl.values_mut()[grid.index(i1, i2, i3)] =
                            u.values()[grid.index(j[0], j[1], j[2])];
                    }
                }
            }
            let ef = evaluate(&refl, cp).unwrap().e;
            assert!((ef - e0).abs() <= 1e-9 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn stable_pairs_make_b_positive_on_random_fields() {
        let grid = Grid::cubic(16, 4.0).unwrap();
        let engine = SpectralEngine::new(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..25 {
            let u = Field::sample(&grid, |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                Complex64::new(
                    rng_free(x, 1.3) * (-r2 / 3.0).exp(),
                    rng_free(x, 2.1) * (-r2 / 2.0).exp(),
                )
            });
            let lambda2 = rng.gen_range(-1.5..1.5);
            let margin = rng.gen_range(0.1..2.0);
            let lambda1 = (KDD * lambda2).max(-2.0 * KDD * lambda2) + margin;
            let cp = CouplingPair::new(lambda1, lambda2);
            assert_eq!(classify(cp).regime, Regime::Stable);
            let r = evaluate_with(&engine, &u, cp).unwrap();
            assert!(r.b > 0.0, "B = {} for stable {:?}", r.b, cp);
        }
    }

    // deterministic pseudo-random smooth bump, free of RNG state
    fn rng_free(x: [f64; 3], k: f64) -> f64 {
        (k * x[0] + 0.7 * k * x[1] - 1.3 * x[2]).sin() + 0.3 * (0.5 * k * x[2]).cos()
    }

    #[test]
    fn report_json_has_17_significant_digits_and_round_trips() {
        let r = FunctionalReport::from_parts(1.0 / 3.0, 1.5, -0.062_499_999_999_312, 7e-3);
        let json = r.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["mass"].as_f64().unwrap(), r.mass);
        assert_eq!(parsed["A"].as_f64().unwrap(), r.a);
        assert_eq!(parsed["B"].as_f64().unwrap(), r.b);
        assert_eq!(parsed["C"].as_f64().unwrap(), r.c);
        assert_eq!(parsed["E"].as_f64().unwrap(), r.e);
        assert_eq!(parsed["Q"].as_f64().unwrap(), r.q);
    }
}
