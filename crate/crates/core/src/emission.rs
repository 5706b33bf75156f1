//! Directional emission from a blockaded ensemble.
//!
//! The emission amplitude into wave vector `k_e` is
//! `(1/N) |sum_j exp(-i (k_tot - k_e) . r_j)|^2`, where `k_tot` is the sum
//! of the excitation and readout wave vectors.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::float;

pub type Vec3 = [f64; 3];

pub const RED_WAVELENGTH: f64 = 780e-9;
pub const BLUE_WAVELENGTH: f64 = 480e-9;
pub const DEFAULT_BLOCKADE_RADIUS: f64 = 10e-6;
pub const DEFAULT_ATOM_COUNT: usize = 2000;

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    float::sqrt(dot(a, a))
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Atom positions in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCloud {
    positions: Vec<Vec3>,
    radius: f64,
}

impl AtomCloud {
    /// Fails unless every position lies within `radius` of the centroid.
    pub fn new(positions: Vec<Vec3>, radius: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid!("cloud needs at least one atom"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid!("cloud radius must be positive, got {radius}"));
        }
        let cloud = AtomCloud { positions, radius };
        let c = cloud.centroid();
        // Allow a whisker of rounding in the centroid.
        if cloud.positions.iter().any(|&p| norm(sub(p, c)) > radius * (1.0 + 1e-9)) {
            return Err(invalid!("atom outside radius {radius} of the centroid"));
        }
        Ok(cloud)
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        let n = self.positions.len() as f64;
        let s = self.positions.iter().fold([0.0; 3], |acc, p| [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]);
        scale(s, 1.0 / n)
    }

    /// Rigidly shifted copy.
    pub fn translated(&self, offset: Vec3) -> AtomCloud {
        AtomCloud {
            positions: self.positions.iter().map(|&p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]]).collect(),
            radius: self.radius,
        }
    }
}

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = float::sqrt((1.0 - z * z).max(0.0));
    [s * float::cos(phi), s * float::sin(phi), z]
}

/// `n` atoms uniform in a ball of radius `radius` about the origin.
///
/// The ball is centred on the origin rather than the sample centroid, so for
/// small `n` an atom can sit slightly farther than `radius` from the
/// centroid; such draws are rejected and redrawn.
pub fn sample_cloud(n: usize, radius: f64, seed: u64) -> Result<AtomCloud> {
    if n == 0 {
        return Err(invalid!("cloud needs at least one atom"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid!("cloud radius must be positive, got {radius}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let positions: Vec<Vec3> = (0..n)
            .map(|_| {
                let r = radius * float::cbrt(rng.random::<f64>());
                scale(unit_vector(&mut rng), r)
            })
            .collect();
        if let Ok(cloud) = AtomCloud::new(positions, radius) {
            return Ok(cloud);
        }
    }
}

/// A plane wave of given wavelength; `sign` is +1 for absorption from the
/// beam and -1 for emission into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub wavelength: f64,
    pub direction: Vec3,
    pub sign: f64,
}

impl Beam {
    pub fn new(wavelength: f64, direction: Vec3, sign: f64) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(invalid!("wavelength must be positive, got {wavelength}"));
        }
        let n = norm(direction);
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid!("beam direction must be a nonzero vector"));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(invalid!("beam sign must be +1 or -1, got {sign}"));
        }
        Ok(Beam { wavelength, direction: scale(direction, 1.0 / n), sign })
    }

    /// Signed wave vector in rad/m.
    pub fn k(&self) -> Vec3 {
        scale(self.direction, self.sign * 2.0 * PI / self.wavelength)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveVectorSet {
    pub beams: Vec<Beam>,
    /// Emitted photon wave vector in rad/m.
    pub k_e: Vec3,
    pub emission_wavelength: f64,
}

impl WaveVectorSet {
    /// Seven beams on the z axis: red/blue excitation to the Rydberg level,
    /// blue/red transfer down to the memory, red/blue back up and the blue
    /// readout. `k_tot` is one red wave number along +z and `k_e` is set
    /// equal to it.
    pub fn collinear() -> Self {
        let z = [0.0, 0.0, 1.0];
        let beam = |wavelength, sign| Beam { wavelength, direction: z, sign };
        let beams = alloc::vec![
            beam(RED_WAVELENGTH, 1.0),
            beam(BLUE_WAVELENGTH, 1.0),
            beam(BLUE_WAVELENGTH, -1.0),
            beam(RED_WAVELENGTH, -1.0),
            beam(RED_WAVELENGTH, 1.0),
            beam(BLUE_WAVELENGTH, 1.0),
            beam(BLUE_WAVELENGTH, -1.0),
        ];
        let mut set = WaveVectorSet { beams, k_e: [0.0; 3], emission_wavelength: RED_WAVELENGTH };
        set.k_e = set.k_tot();
        set
    }

    pub fn k_tot(&self) -> Vec3 {
        self.beams.iter().fold([0.0; 3], |acc, b| {
            let k = b.k();
            [acc[0] + k[0], acc[1] + k[1], acc[2] + k[2]]
        })
    }

    pub fn emission_wave_number(&self) -> f64 {
        2.0 * PI / self.emission_wavelength
    }

    /// Same beams, photon emitted along `direction`.
    pub fn with_emission_direction(&self, direction: Vec3) -> Result<Self> {
        let n = norm(direction);
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid!("emission direction must be a nonzero vector"));
        }
        Ok(WaveVectorSet { k_e: scale(direction, self.emission_wave_number() / n), ..self.clone() })
    }

    /// Same beams, photon emitted exactly along `k_tot`.
    pub fn phase_matched(&self) -> Self {
        WaveVectorSet { k_e: self.k_tot(), ..self.clone() }
    }
}

/// `(1/N) |sum_j exp(-i (k_tot - k_e) . r_j)|^2`, in `[0, N]`.
pub fn emission_amplitude(cloud: &AtomCloud, kset: &WaveVectorSet) -> f64 {
    let dk = sub(kset.k_tot(), kset.k_e);
    let sum: Complex64 = cloud
        .positions
        .iter()
        .map(|&r| {
            let phase = -dot(dk, r);
            Complex64::new(float::cos(phase), float::sin(phase))
        })
        .sum();
    let n = cloud.len() as f64;
    (sum.norm_sqr() / n).clamp(0.0, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSample {
    pub index: u64,
    /// Cosine of the angle between `k_e` and `k_tot`.
    pub cos_angle: f64,
    pub amplitude: f64,
}

/// Amplitude for the `index`-th random emission direction. Each index has
/// its own random stream, so samples can be drawn in any order.
pub fn direction_sample(cloud: &AtomCloud, kset: &WaveVectorSet, seed: u64, index: u64) -> DirectionSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let dir = unit_vector(&mut rng);
    let k = kset.with_emission_direction(dir).expect("unit vector");
    let kt = kset.k_tot();
    let kt_norm = norm(kt);
    let cos_angle = if kt_norm > 0.0 { dot(dir, kt) / kt_norm } else { 0.0 };
    DirectionSample { index, cos_angle, amplitude: emission_amplitude(cloud, &k) }
}

pub fn direction_samples(cloud: &AtomCloud, kset: &WaveVectorSet, count: u64, seed: u64) -> Vec<DirectionSample> {
    (0..count).map(|i| direction_sample(cloud, kset, seed, i)).collect()
}

/// Phase-matched amplitude over the mean of the given random-direction
/// samples.
pub fn enhancement_from_samples(cloud: &AtomCloud, kset: &WaveVectorSet, samples: &[DirectionSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid!("need at least one random direction"));
    }
    let mean = samples.iter().map(|s| s.amplitude).sum::<f64>() / samples.len() as f64;
    Ok(emission_amplitude(cloud, &kset.phase_matched()) / mean)
}

pub fn enhancement_ratio(
    cloud: &AtomCloud,
    kset: &WaveVectorSet,
    num_random_directions: u64,
    seed: u64,
) -> Result<f64> {
    if num_random_directions < 1 {
        return Err(invalid!("need at least one random direction"));
    }
    enhancement_from_samples(cloud, kset, &direction_samples(cloud, kset, num_random_directions, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collinear_total_is_one_red_wave_number() {
        let k = WaveVectorSet::collinear();
        let kt = k.k_tot();
        assert_eq!(k.beams.len(), 7);
        assert!(kt[0] == 0.0 && kt[1] == 0.0);
        assert!((kt[2] - 2.0 * PI / RED_WAVELENGTH).abs() < 1e-6 * kt[2]);
        assert_eq!(k.k_e, kt);
        for b in &k.beams {
            assert!((norm(b.k()) - 2.0 * PI / b.wavelength).abs() < 1e-9 * norm(b.k()));
        }
    }

    #[test]
    fn default_cloud_fits_in_radius() {
        let c = sample_cloud(DEFAULT_ATOM_COUNT, DEFAULT_BLOCKADE_RADIUS, 7).unwrap();
        assert_eq!(c.len(), 2000);
        assert!(c.positions().iter().all(|&p| norm(p) <= DEFAULT_BLOCKADE_RADIUS));
        assert_eq!(c, sample_cloud(2000, DEFAULT_BLOCKADE_RADIUS, 7).unwrap());
        assert_ne!(c, sample_cloud(2000, DEFAULT_BLOCKADE_RADIUS, 8).unwrap());
    }

    #[test]
    fn rejects_bad_clouds() {
        assert!(sample_cloud(0, 1e-5, 1).is_err());
        assert!(sample_cloud(10, 0.0, 1).is_err());
        assert!(AtomCloud::new(alloc::vec![[0.0; 3], [3e-5, 0.0, 0.0]], 1e-5).is_err());
        assert!(Beam::new(780e-9, [0.0; 3], 1.0).is_err());
        assert!(WaveVectorSet::collinear().with_emission_direction([0.0; 3]).is_err());
    }

    #[test]
    fn phase_matched_amplitude_is_n() {
        let c = sample_cloud(500, DEFAULT_BLOCKADE_RADIUS, 1).unwrap();
        assert_eq!(emission_amplitude(&c, &WaveVectorSet::collinear()), 500.0);
    }

    #[test]
    fn single_atom_is_one_everywhere() {
        let c = sample_cloud(1, DEFAULT_BLOCKADE_RADIUS, 3).unwrap();
        let k = WaveVectorSet::collinear();
        for s in direction_samples(&c, &k, 20, 5) {
            assert!((s.amplitude - 1.0).abs() < 1e-12);
        }
        assert!((enhancement_ratio(&c, &k, 20, 5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_directions_average_to_one() {
        let c = sample_cloud(2000, DEFAULT_BLOCKADE_RADIUS, 11).unwrap();
        let s = direction_samples(&c, &WaveVectorSet::collinear(), 1000, 12);
        let mean = s.iter().map(|x| x.amplitude).sum::<f64>() / 1000.0;
        // Amplitudes are roughly exponential with unit mean: sd of the mean ~ 0.03.
        assert!((mean - 1.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn enhancement_scales_linearly() {
        let k = WaveVectorSet::collinear();
        let ns = [100usize, 500, 2000];
        let ratios: Vec<f64> = ns
            .iter()
            .map(|&n| enhancement_ratio(&sample_cloud(n, DEFAULT_BLOCKADE_RADIUS, 21).unwrap(), &k, 1000, 22).unwrap())
            .collect();
        for (&n, &r) in ns.iter().zip(&ratios) {
            assert!(r >= 0.5 * n as f64 && r <= 2.0 * n as f64, "N = {n}: {r}");
        }
        let xs: Vec<f64> = ns.iter().map(|&n| float::ln(n as f64)).collect();
        let ys: Vec<f64> = ratios.iter().map(|&r| float::ln(r)).collect();
        let slope = least_squares_slope(&xs, &ys);
        assert!((slope - 1.0).abs() < 0.1, "{slope}");
    }

    fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn amplitude_bounded_by_n(n in 1usize..200, seed in any::<u64>(), dir in prop::array::uniform3(-1.0f64..1.0)) {
            prop_assume!(norm(dir) > 1e-3);
            let c = sample_cloud(n, DEFAULT_BLOCKADE_RADIUS, seed).unwrap();
            let k = WaveVectorSet::collinear().with_emission_direction(dir).unwrap();
            let a = emission_amplitude(&c, &k);
            prop_assert!((0.0..=n as f64).contains(&a));
        }

        #[test]
        fn translation_leaves_amplitude_unchanged(
            seed in any::<u64>(),
            offset in prop::array::uniform3(-1e-4f64..1e-4),
            dir in prop::array::uniform3(-1.0f64..1.0),
        ) {
            prop_assume!(norm(dir) > 1e-3);
            let c = sample_cloud(50, DEFAULT_BLOCKADE_RADIUS, seed).unwrap();
            let k = WaveVectorSet::collinear().with_emission_direction(dir).unwrap();
            let a = emission_amplitude(&c, &k);
            let b = emission_amplitude(&c.translated(offset), &k);
            prop_assert!((a - b).abs() <= 1e-6 * a.max(1.0));
        }
    }
}
