use std::sync::Mutex;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{VelocityCoeffs, VelocityMode, VelocityModel};
use crate::error::{Error, Result};

const KNOTS_PER_CORRELATION_TIME: f64 = 8.0;

/// Band-limited flow whose scalar mode amplitudes are independent stationary
/// complex Ornstein-Uhlenbeck processes, attached to the divergence-free
/// direction `k_perp / |k|`.
///
/// The processes are sampled exactly on a knot lattice of spacing
/// `correlation_time / 8` and linearly interpolated in between, so paths are
/// continuous. Knots are generated lazily from a single seeded stream and
/// cached; evaluation at `t` depends only on `(seed, t)`.
#[derive(Debug)]
pub struct RandomBandFlow {
    band: usize,
    amplitude: f64,
    knot_spacing: f64,
    decay: f64,
    /// Half-plane representatives `(k1, k2, sigma, unit k_perp)`.
    reps: Vec<(i64, i64, f64, [f64; 2])>,
    state: Mutex<KnotCache>,
}

#[derive(Debug)]
struct KnotCache {
    rng: ChaCha8Rng,
    knots: Vec<Vec<Complex64>>,
}

impl RandomBandFlow {
    /// `amplitude` sets `E sum_k |u_hat(k)|^2 = amplitude^2 / 2`; mode
    /// variances fall off as `|k|^{-spectrum_decay}`.
    pub fn new(
        band: usize,
        spectrum_decay: f64,
        amplitude: f64,
        correlation_time: f64,
        seed: u64,
    ) -> Result<Self> {
        if band == 0 {
            return Err(Error::invalid("random band flow needs L >= 1"));
        }
        if !(amplitude > 0.0) || !(correlation_time > 0.0) || !spectrum_decay.is_finite() {
            return Err(Error::invalid(
                "random band flow needs positive amplitude and correlation time",
            ));
        }
        let l = band as i64;
        let mut reps = Vec::new();
        for k1 in -l..=l {
            for k2 in -l..=l {
                let m2 = k1 * k1 + k2 * k2;
                if m2 == 0 || m2 > l * l || !(k1 > 0 || (k1 == 0 && k2 > 0)) {
                    continue;
                }
                let m = (m2 as f64).sqrt();
                reps.push((
                    k1,
                    k2,
                    m.powf(-spectrum_decay / 2.0),
                    [-k2 as f64 / m, k1 as f64 / m],
                ));
            }
        }
        // each representative contributes 2 sigma^2 (itself and its conjugate)
        let total: f64 = reps.iter().map(|r| 2.0 * r.2 * r.2).sum();
        let norm = (amplitude * amplitude / 2.0 / total).sqrt();
        for r in &mut reps {
            r.2 *= norm;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = reps
            .iter()
            .map(|r| complex_normal(&mut rng) * r.2)
            .collect();
        Ok(Self {
            band,
            amplitude,
            knot_spacing: correlation_time / KNOTS_PER_CORRELATION_TIME,
            decay: (-1.0 / KNOTS_PER_CORRELATION_TIME).exp(),
            reps,
            state: Mutex::new(KnotCache {
                rng,
                knots: vec![first],
            }),
        })
    }

    fn scalar_amplitudes(&self, t: f64) -> Vec<Complex64> {
        let s = (t / self.knot_spacing).max(0.0);
        let n = s.floor() as usize;
        let frac = s - n as f64;
        let mut cache = self.state.lock().expect("knot cache poisoned");
        let innovation = (1.0 - self.decay * self.decay).sqrt();
        while cache.knots.len() < n + 2 {
            let last = cache.knots.last().expect("at least one knot").clone();
            let next = last
                .iter()
                .zip(&self.reps)
                .map(|(a, r)| a * self.decay + complex_normal(&mut cache.rng) * (innovation * r.2))
                .collect();
            cache.knots.push(next);
        }
        let (a, b) = (&cache.knots[n], &cache.knots[n + 1]);
        a.iter()
            .zip(b)
            .map(|(x, y)| x * (1.0 - frac) + y * frac)
            .collect()
    }
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

impl VelocityModel for RandomBandFlow {
    fn band_limit(&self) -> usize {
        self.band
    }

    fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn coefficients(&self, t: f64) -> VelocityCoeffs {
        let amps = self.scalar_amplitudes(t);
        let mut modes = Vec::with_capacity(2 * amps.len());
        for (a, &(k1, k2, _, dir)) in amps.iter().zip(&self.reps) {
            let c = [a * dir[0], a * dir[1]];
            modes.push(VelocityMode { k1, k2, coeff: c });
            modes.push(VelocityMode {
                k1: -k1,
                k2: -k2,
                coeff: [c[0].conj(), c[1].conj()],
            });
        }
        VelocityCoeffs::new(modes)
    }
}
