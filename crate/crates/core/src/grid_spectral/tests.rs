use super::*;
use crate::numerics::compensated_sum;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian(width: f64) -> impl Fn([f64; 3]) -> f64 + Sync {
    move |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * width * width)).exp()
}

/// Random smooth field from a handful of low-frequency plane waves.
fn random_smooth_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let modes: Vec<([f64; 3], Complex64)> = (0..6)
        .map(|_| {
            let k = [
                grid.frequency(0, rng.gen_range(0..3)),
                grid.frequency(1, rng.gen_range(0..3)),
                grid.frequency(2, rng.gen_range(0..3)),
            ];
            let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (k, amp)
        })
        .collect();
    let env = gaussian(2.0);
    Field::sample(grid, move |x| {
        let mut z = Complex64::default();
        for (k, a) in &modes {
            let phase = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            z += a * Complex64::new(0.0, phase).exp();
        }
        z * env(x)
    })
}

#[test]
fn grid_rejects_bad_dimensions() {
    assert!(Grid::new([7, 8, 8], [1.0; 3]).is_err());
    assert!(Grid::new([10, 8, 8], [1.0; 3]).is_ok());
    assert!(Grid::new([8, 8, 8], [0.0, 1.0, 1.0]).is_err());
    assert!(Grid::new([8, 9, 8], [1.0; 3]).is_err());
    assert!(Grid::new([4, 4, 4], [1.0; 3]).is_err());
}

#[test]
fn dc_component_of_constant_field() {
    let grid = Grid::new([16, 16, 16], [1.5, 2.0, 2.5]).unwrap();
    let u = Field::sample_real(&grid, |_| 1.0);
    let su = forward_transform(&u).unwrap();
    let expected = 8.0 * 1.5 * 2.0 * 2.5;
    assert!((su.at_mode([0, 0, 0]).re - expected).abs() <= 1e-12 * expected);
    let off_dc_max = su
        .values()
        .iter()
        .skip(1)
        .fold(0.0f64, |m, z| m.max(z.norm()));
    // skip(1) drops exactly the (0,0,0) coefficient in FFT index order
    assert!(off_dc_max <= 1e-12 * expected);
}

#[test]
fn plane_wave_is_a_single_spike() {
    let grid = Grid::cubic(16, 3.0).unwrap();
    let k0 = [grid.frequency(0, 2), grid.frequency(1, 15), grid.frequency(2, 5)];
    let u = Field::sample(&grid, |x| {
        Complex64::new(0.0, k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2]).exp()
    });
    let su = forward_transform(&u).unwrap();
    let volume = 8.0 * 27.0;
    let spike = su.at_mode([2, 15 - 16, 5]);
    assert!((spike.re - volume).abs() <= 1e-10 * volume);
    assert!(spike.im.abs() <= 1e-10 * volume);
    let energy: f64 = sum_norm_sqr(su.values());
    assert!((energy - spike.norm_sqr()).abs() <= 1e-18 * energy * grid.len() as f64);
}

#[test]
fn gaussian_transform_matches_closed_form() {
    let grid = Grid::cubic(64, 12.0).unwrap();
    let u = Field::sample_real(&grid, gaussian(1.0));
    let su = forward_transform(&u).unwrap();
    let peak = (2.0 * std::f64::consts::PI).powf(1.5);
    let [n1, n2, n3] = grid.points();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let xi = [
                    grid.frequency(0, i1),
                    grid.frequency(1, i2),
                    grid.frequency(2, i3),
                ];
                let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                if k2 > 16.0 {
                    continue;
                }
                let expected = peak * (-k2 / 2.0).exp();
                let got = su.values()[grid.index(i1, i2, i3)];
                assert!(
                    (got.re - expected).abs() <= 1e-8 * expected && got.im.abs() <= 1e-8 * expected,
                    "mismatch at |xi|^2 = {k2}: got {got}, expected {expected}"
                );
            }
        }
    }
}

#[test]
fn round_trip_is_identity() {
    let grid = Grid::new([24, 16, 20], [3.0, 2.0, 2.5]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = random_smooth_field(&grid, &mut rng);
    let back = inverse_transform(&forward_transform(&u).unwrap()).unwrap();
    let scale = u.values().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let err = u
        .values()
        .iter()
        .zip(back.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    assert!(err <= 1e-12 * scale, "round-trip error {err}");
}

#[test]
fn plancherel_identity() {
    let grid = Grid::new([16, 24, 16], [2.0, 3.0, 2.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = random_smooth_field(&grid, &mut rng);
    let su = forward_transform(&u).unwrap();
    let lhs = u.l2_norm_sqr();
    let rhs = su.l2_norm_sqr();
    assert!((lhs - rhs).abs() <= 1e-12 * lhs);
}

#[test]
fn laplacian_of_plane_wave_and_constant() {
    let grid = Grid::cubic(16, 2.0).unwrap();
    let k0 = [grid.frequency(0, 3), grid.frequency(1, 14), grid.frequency(2, 1)];
    let k2 = k0[0] * k0[0] + k0[1] * k0[1] + k0[2] * k0[2];
    let u = Field::sample(&grid, |x| {
        Complex64::new(0.0, k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2]).exp()
    });
    let lap = laplacian(&u).unwrap();
    let err = lap
        .values()
        .iter()
        .zip(u.values())
        .fold(0.0f64, |m, (l, v)| m.max((l + k2 * v).norm()));
    assert!(err <= 1e-12 * k2.max(1.0));

    let c = Field::sample_real(&grid, |_| 4.2);
    let lapc = laplacian(&c).unwrap();
    let errc = lapc.values().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(errc <= 1e-12);
}

#[test]
fn laplacian_of_gaussian_matches_closed_form() {
    let grid = Grid::cubic(64, 12.0).unwrap();
    let u = Field::sample_real(&grid, gaussian(1.0));
    let lap = laplacian(&u).unwrap();
    // Δ e^{-r²/2} = (r²-3) e^{-r²/2}; compare on the interior |x| <= 4
    let [n1, n2, n3] = grid.points();
    let mut max_err = 0.0f64;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let x = [
                    grid.position(0, i1),
                    grid.position(1, i2),
                    grid.position(2, i3),
                ];
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                if r2 > 16.0 {
                    continue;
                }
                let expected = (r2 - 3.0) * (-r2 / 2.0).exp();
                let got = lap.values()[grid.index(i1, i2, i3)];
                max_err = max_err.max((got.re - expected).abs()).max(got.im.abs());
            }
        }
    }
    assert!(max_err <= 1e-8 * 3.0, "interior error {max_err}");
}

#[test]
fn multiplier_range_zero_mode_and_symmetries() {
    let grid = Grid::cubic(32, 7.0).unwrap();
    let m = DipolarMultiplier::new(&grid);
    let (lo, hi) = DipolarMultiplier::bounds();
    for &v in m.values() {
        assert!(v >= lo && v <= hi, "multiplier {v} outside [{lo}, {hi}]");
    }
    assert_eq!(m.values()[0], 0.0);
    // attained extremes: pure axial mode -> 8π/3, pure transverse -> -4π/3
    assert_eq!(m.values()[grid.index(0, 0, 1)], hi);
    assert_eq!(m.values()[grid.index(1, 0, 0)], lo);
    let [n1, n2, n3] = grid.points();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                let v = m.values()[grid.index(i1, i2, i3)];
                // swap xi1 <-> xi2
                assert_eq!(v, m.values()[grid.index(i2, i1, i3)]);
                // xi -> -xi (FFT index negation is i -> n - i mod n)
                let neg = |i: usize, n: usize| (n - i) % n;
                assert_eq!(
                    v,
                    m.values()[grid.index(neg(i1, n1), neg(i2, n2), neg(i3, n3))]
                );
            }
        }
    }
}

#[test]
fn dipolar_convolve_of_zero_is_zero() {
    let grid = Grid::cubic(16, 3.0).unwrap();
    let z = Field::zeros(&grid);
    let out = dipolar_convolve(&z).unwrap();
    assert!(out.values().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn dipolar_pairing_vanishes_on_radial_density() {
    let grid = Grid::cubic(32, 10.0).unwrap();
    let engine = SpectralEngine::new(&grid);
    let rho = Field::sample_real(&grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        (-r2).exp() + 0.4 * (-r2 / 2.25).exp()
    });
    let conv = engine.dipolar_convolve(&rho).unwrap();
    let pairing = compensated_sum(
        conv.values()
            .iter()
            .zip(rho.values())
            .map(|(a, b)| a.re * b.re),
    ) * grid.cell_volume();
    let quartic = compensated_sum(rho.values().iter().map(|z| z.re * z.re)) * grid.cell_volume();
    assert!(
        pairing.abs() <= 1e-9 * quartic,
        "radial pairing {pairing} vs quartic scale {quartic}"
    );
}

/// Continuum dipolar energy of an axisymmetric Gaussian density
/// ρ = a² exp(-(x1²+x2²)/sp² - x3²/sz²), by 1D quadrature over the polar
/// angle. Independent of the grid code path.
fn gaussian_dipolar_energy_oracle(a: f64, sp: f64, sz: f64) -> f64 {
    use crate::numerics::adaptive_simpson;
    use std::f64::consts::PI;
    let pref = a.powi(4) * PI.powi(3) * (sp * sp * sz).powi(2) / (2.0 * PI).powi(3)
        * 2.0
        * PI
        * (4.0 * PI / 3.0);
    let integrand = |c: f64| {
        let beta = sp * sp + (sz * sz - sp * sp) * c * c;
        (3.0 * c * c - 1.0) * PI.sqrt() * 2.0f64.powf(1.5) / (4.0 * beta.powf(1.5))
    };
    pref * adaptive_simpson(&integrand, -1.0, 1.0, 1e-13)
}

#[test]
fn anisotropic_dipolar_energy_matches_quadrature_oracle() {
    // cigar along the dipole axis: attractive (negative) energy;
    // pancake: repulsive (positive)
    let grid = Grid::new([48, 48, 64], [9.0, 9.0, 16.0]).unwrap();
    let engine = SpectralEngine::new(&grid);
    for (sp, sz) in [(1.0, 2.5), (1.8, 0.9)] {
        let rho = Field::sample_real(&grid, move |x| {
            (-(x[0] * x[0] + x[1] * x[1]) / (sp * sp) - x[2] * x[2] / (sz * sz)).exp()
        });
        let conv = engine.dipolar_convolve(&rho).unwrap();
        let pairing = compensated_sum(
            conv.values()
                .iter()
                .zip(rho.values())
                .map(|(a, b)| a.re * b.re),
        ) * grid.cell_volume();
        let oracle = gaussian_dipolar_energy_oracle(1.0, sp, sz);
        assert!(
            (pairing - oracle).abs() <= 1e-6 * oracle.abs(),
            "sp={sp} sz={sz}: grid {pairing} vs oracle {oracle}"
        );
        if sz > sp {
            assert!(pairing < 0.0);
        } else {
            assert!(pairing > 0.0);
        }
    }
}

#[test]
fn dipolar_energy_cross_checked_against_real_space_sum() {
    // Coarse-grid double sum of K(x-y)ρ(x)ρ(y) with the kernel truncated
    // to the box; the lattice's symmetric shells handle the principal
    // value. Low accuracy by construction, so the tolerance is loose.
    let grid = Grid::cubic(16, 5.0).unwrap();
    let engine = SpectralEngine::new(&grid);
    let (sp, sz) = (1.0, 2.0);
    let rho = Field::sample_real(&grid, move |x| {
        (-(x[0] * x[0] + x[1] * x[1]) / (sp * sp) - x[2] * x[2] / (sz * sz)).exp()
    });
    let conv = engine.dipolar_convolve(&rho).unwrap();
    let spectral = compensated_sum(
        conv.values()
            .iter()
            .zip(rho.values())
            .map(|(a, b)| a.re * b.re),
    ) * grid.cell_volume();

    let [n1, n2, n3] = grid.points();
    let mut points = Vec::with_capacity(grid.len());
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                points.push((
                    grid.position(0, i1),
                    grid.position(1, i2),
                    grid.position(2, i3),
                    rho.values()[grid.index(i1, i2, i3)].re,
                ));
            }
        }
    }
    let h2 = grid.cell_volume() * grid.cell_volume();
    let mut acc = Accumulator::new();
    for (i, &(x1, x2, x3, ri)) in points.iter().enumerate() {
        for (j, &(y1, y2, y3, rj)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let z = (x1 - y1, x2 - y2, x3 - y3);
            let r2 = z.0 * z.0 + z.1 * z.1 + z.2 * z.2;
            let k = (z.0 * z.0 + z.1 * z.1 - 2.0 * z.2 * z.2) / (r2 * r2 * r2.sqrt());
            acc.add(k * ri * rj);
        }
    }
    let direct = acc.value() * h2;
    assert!(spectral < 0.0 && direct < 0.0, "{spectral} vs {direct}");
    assert!(
        (spectral - direct).abs() <= 0.25 * spectral.abs(),
        "spectral {spectral} vs direct {direct}"
    );
}

#[test]
fn dipolar_convolve_is_linear_and_symmetric() {
    let grid = Grid::cubic(24, 6.0).unwrap();
    let engine = SpectralEngine::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mk = |rng: &mut ChaCha8Rng| {
        let widths = [
            rng.gen_range(0.8..1.6),
            rng.gen_range(0.8..1.6),
            rng.gen_range(0.8..1.6),
        ];
        let amp = rng.gen_range(0.3..1.5);
        Field::sample_real(&grid, move |x| {
            amp * (-(x[0] * x[0] / (widths[0] * widths[0])
                + x[1] * x[1] / (widths[1] * widths[1])
                + x[2] * x[2] / (widths[2] * widths[2])))
                .exp()
        })
    };
    for _ in 0..4 {
        let rho = mk(&mut rng);
        let sig = mk(&mut rng);
        let k_rho = engine.dipolar_convolve(&rho).unwrap();
        let k_sig = engine.dipolar_convolve(&sig).unwrap();
        let dot = |a: &Field, b: &Field| {
            compensated_sum(a.values().iter().zip(b.values()).map(|(x, y)| x.re * y.re))
                * grid.cell_volume()
        };
        let lhs = dot(&k_rho, &sig);
        let rhs = dot(&k_sig, &rho);
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
    }
}

#[test]
fn dipolar_convolve_commutes_with_lattice_reflections() {
    let grid = Grid::cubic(24, 6.0).unwrap();
    let engine = SpectralEngine::new(&grid);
    let rho = Field::sample_real(&grid, |x| {
        (-(0.7 * (x[0] - 0.5) * (x[0] - 0.5) + 1.1 * x[1] * x[1] + 0.5 * (x[2] + 0.7) * (x[2] + 0.7)))
            .exp()
    });
    let conv = engine.dipolar_convolve(&rho).unwrap();
    let n = grid.points();
    let reflect3 = |f: &Field| {
        let mut out = Field::zeros(&grid);
        for i1 in 0..n[0] {
            for i2 in 0..n[1] {
                for i3 in 0..n[2] {
                    let j3 = (n[2] - i3) % n[2];
                    out.values_mut()[grid.index(i1, i2, i3)] = f.values()[grid.index(i1, i2, j3)];
                }
            }
        }
        out
    };
    let swap12 = |f: &Field| {
        let mut out = Field::zeros(&grid);
        for i1 in 0..n[0] {
            for i2 in 0..n[1] {
                for i3 in 0..n[2] {
                    out.values_mut()[grid.index(i1, i2, i3)] = f.values()[grid.index(i2, i1, i3)];
                }
            }
        }
        out
    };
    for op in [&reflect3 as &dyn Fn(&Field) -> Field, &swap12] {
        let a = engine.dipolar_convolve(&op(&rho)).unwrap();
        let b = op(&conv);
        let scale = conv.values().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let err = a
            .values()
            .iter()
            .zip(b.values())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        assert!(err <= 1e-11 * scale, "equivariance error {err}");
    }
}

#[test]
fn operations_reject_mismatched_grids() {
    let g1 = Grid::cubic(16, 3.0).unwrap();
    let g2 = Grid::cubic(16, 4.0).unwrap();
    let engine = SpectralEngine::new(&g1);
    let u = Field::zeros(&g2);
    assert!(matches!(
        engine.forward(&u),
        Err(Error::GridMismatch(_))
    ));
    assert!(matches!(
        engine.dipolar_convolve(&u),
        Err(Error::GridMismatch(_))
    ));
}
