//! Single-particle stream-collide evolution on a periodic Cartesian lattice.
//!
//! A step multiplies each site's channel vector by `exp(-i eps^2 V(x)) S`
//! and then advects channel `k` along its velocity vector with periodic
//! wraparound. The collide phase is independent per site and the stream
//! phase is a fixed permutation, so both parallelize over sites; with the
//! `parallel` feature the hot loops run on rayon.

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::algebra::{CollisionMatrix, ModelParams, VelocityBasis};
use crate::error::{QlgaError, Result};

/// Complex channel amplitudes over lattice sites, site-major and
/// channel-minor, plus the step counter `tau`.
#[derive(Debug, Clone)]
pub struct WaveField {
    extents: Vec<usize>,
    channels: usize,
    amps: Vec<Complex64>,
    tau: u64,
}

impl WaveField {
    pub fn zeros(extents: &[usize], channels: usize) -> Self {
        let nsites: usize = extents.iter().product();
        Self {
            extents: extents.to_vec(),
            channels,
            amps: vec![Complex64::new(0.0, 0.0); nsites * channels],
            tau: 0,
        }
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn nsites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Flat site index of lattice coordinates (row-major).
    pub fn site_index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for (c, n) in coords.iter().zip(&self.extents) {
            idx = idx * n + c;
        }
        idx
    }

    /// Lattice coordinates of a flat site index.
    pub fn site_coords(&self, mut site: usize) -> Vec<usize> {
        let mut coords = vec![0; self.extents.len()];
        for a in (0..self.extents.len()).rev() {
            coords[a] = site % self.extents[a];
            site /= self.extents[a];
        }
        coords
    }

    pub fn get(&self, site: usize, channel: usize) -> Complex64 {
        self.amps[site * self.channels + channel]
    }

    pub fn set(&mut self, site: usize, channel: usize, value: Complex64) {
        self.amps[site * self.channels + channel] = value;
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(QlgaError::InvalidField(format!("cannot normalize field with norm {n}")));
        }
        for z in &mut self.amps {
            *z /= n;
        }
        Ok(())
    }
}

/// Real potential sampled once at the lattice sites.
#[derive(Debug, Clone)]
pub struct PotentialField {
    values: Vec<f64>,
}

impl PotentialField {
    pub fn constant(extents: &[usize], v0: f64) -> Result<Self> {
        Self::from_values(vec![v0; extents.iter().product()])
    }

    /// Sample `f` at unit-box coordinates `x_a = n_a / N_a`.
    pub fn from_fn(extents: &[usize], f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let nsites: usize = extents.iter().product();
        let dim = extents.len();
        let mut values = Vec::with_capacity(nsites);
        let mut coords = vec![0usize; dim];
        for _ in 0..nsites {
            let u: Vec<f64> = coords
                .iter()
                .zip(extents)
                .map(|(&c, &n)| c as f64 / n as f64)
                .collect();
            values.push(f(&u));
            for a in (0..dim).rev() {
                coords[a] += 1;
                if coords[a] < extents[a] {
                    break;
                }
                coords[a] = 0;
            }
        }
        Self::from_values(values)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QlgaError::InvalidField("potential contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Precomputed stream-collide update for one lattice geometry.
pub struct Stepper {
    extents: Vec<usize>,
    channels: usize,
    nsites: usize,
    collision: Vec<Complex64>,
    /// per-site phase `exp(-i eps^2 V(x))`, absent for V = 0
    phases: Option<Vec<Complex64>>,
    /// `neighbor_from[k * nsites + site]` = source site for channel `k`
    neighbor_from: Vec<u32>,
    scratch: Vec<Complex64>,
}

impl Stepper {
    /// Standard Cartesian model: velocity basis and collision matrix derived
    /// from the parameters, potential phase from `eps^2 V`.
    pub fn new(
        params: &ModelParams,
        extents: &[usize],
        potential: Option<&PotentialField>,
    ) -> Result<Self> {
        if extents.len() != params.dim() {
            return Err(QlgaError::InvalidField(format!(
                "{} extents given for a {}-dimensional model",
                extents.len(),
                params.dim()
            )));
        }
        let basis = VelocityBasis::new(params.dim());
        let cm = CollisionMatrix::build(params);
        Self::with_collision(
            extents,
            &basis.vectors(),
            &cm.s_rows(),
            params.epsilon(),
            potential,
        )
    }

    /// General constructor for an arbitrary unitary collision matrix and
    /// velocity set (row-major `collision` of size `channels^2`).
    pub fn with_collision(
        extents: &[usize],
        velocities: &[Vec<i64>],
        collision: &[Complex64],
        epsilon: f64,
        potential: Option<&PotentialField>,
    ) -> Result<Self> {
        let channels = velocities.len();
        if collision.len() != channels * channels {
            return Err(QlgaError::InvalidField(format!(
                "collision matrix has {} entries for {channels} channels",
                collision.len()
            )));
        }
        if extents.iter().any(|&n| n < 2) {
            return Err(QlgaError::InvalidField("extents must be >= 2 per axis".into()));
        }
        // unitarity of the collision matrix, rows orthonormal
        for i in 0..channels {
            for j in 0..channels {
                let dot: Complex64 = (0..channels)
                    .map(|k| collision[i * channels + k] * collision[j * channels + k].conj())
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).norm() > 1e-10 {
                    return Err(QlgaError::InvalidField(
                        "collision matrix is not unitary".into(),
                    ));
                }
            }
        }

        let nsites: usize = extents.iter().product();
        let dim = extents.len();
        let mut neighbor_from = vec![0u32; channels * nsites];
        let mut coords = vec![0usize; dim];
        for site in 0..nsites {
            for (k, v) in velocities.iter().enumerate() {
                let mut src = 0usize;
                for a in 0..dim {
                    let n = extents[a] as i64;
                    let c = (coords[a] as i64 - v[a]).rem_euclid(n) as usize;
                    src = src * extents[a] + c;
                }
                neighbor_from[k * nsites + site] = src as u32;
            }
            for a in (0..dim).rev() {
                coords[a] += 1;
                if coords[a] < extents[a] {
                    break;
                }
                coords[a] = 0;
            }
        }

        let phases = match potential {
            Some(p) => {
                if p.values().len() != nsites {
                    return Err(QlgaError::InvalidField(format!(
                        "potential has {} samples for {nsites} sites",
                        p.values().len()
                    )));
                }
                Some(
                    p.values()
                        .iter()
                        .map(|&v| Complex64::from_polar(1.0, -epsilon * epsilon * v))
                        .collect(),
                )
            }
            None => None,
        };

        Ok(Self {
            extents: extents.to_vec(),
            channels,
            nsites,
            collision: collision.to_vec(),
            phases,
            neighbor_from,
            scratch: vec![Complex64::new(0.0, 0.0); nsites * channels],
        })
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    /// Advance the field by one step: collide, then stream.
    pub fn step(&mut self, field: &mut WaveField) -> Result<()> {
        #[cfg(feature = "parallel")]
        {
            self.step_parallel(field)
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.step_sequential(field)
        }
    }

    pub fn step_sequential(&mut self, field: &mut WaveField) -> Result<()> {
        self.check_shape(field)?;
        let nch = self.channels;
        for (site, mid) in self.scratch.chunks_mut(nch).enumerate() {
            collide_site(
                mid,
                &field.amps[site * nch..(site + 1) * nch],
                &self.collision,
                self.phases.as_ref().map(|p| p[site]),
            );
        }
        for (site, out) in field.amps.chunks_mut(nch).enumerate() {
            for (k, o) in out.iter_mut().enumerate() {
                let src = self.neighbor_from[k * self.nsites + site] as usize;
                *o = self.scratch[src * nch + k];
            }
        }
        self.finish_step(field)
    }

    #[cfg(feature = "parallel")]
    pub fn step_parallel(&mut self, field: &mut WaveField) -> Result<()> {
        self.check_shape(field)?;
        let nch = self.channels;
        let amps = &field.amps;
        let collision = &self.collision;
        let phases = self.phases.as_deref();
        self.scratch
            .par_chunks_mut(nch)
            .enumerate()
            .for_each(|(site, mid)| {
                collide_site(
                    mid,
                    &amps[site * nch..(site + 1) * nch],
                    collision,
                    phases.map(|p| p[site]),
                );
            });
        let scratch = &self.scratch;
        let neighbor_from = &self.neighbor_from;
        let nsites = self.nsites;
        field
            .amps
            .par_chunks_mut(nch)
            .enumerate()
            .for_each(|(site, out)| {
                for (k, o) in out.iter_mut().enumerate() {
                    let src = neighbor_from[k * nsites + site] as usize;
                    *o = scratch[src * nch + k];
                }
            });
        self.finish_step(field)
    }

    fn check_shape(&self, field: &WaveField) -> Result<()> {
        if field.extents != self.extents || field.channels != self.channels {
            return Err(QlgaError::InvalidField(
                "field shape does not match the stepper geometry".into(),
            ));
        }
        Ok(())
    }

    fn finish_step(&self, field: &mut WaveField) -> Result<()> {
        field.tau += 1;
        let norm = field.norm_sq();
        if !norm.is_finite() {
            return Err(QlgaError::NonFinite {
                tau: field.tau,
                context: format!("field norm^2 = {norm}"),
            });
        }
        Ok(())
    }
}

#[inline]
fn collide_site(
    out: &mut [Complex64],
    input: &[Complex64],
    collision: &[Complex64],
    phase: Option<Complex64>,
) {
    let nch = input.len();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in input.iter().enumerate() {
            acc += collision[k * nch + j] * v;
        }
        *o = match phase {
            Some(p) => p * acc,
            None => acc,
        };
    }
}

/// The dephased total amplitude
/// `Psi(x) = mu^{-tau} (2d)^{-1/2} sum_k psi_k(x)`.
///
/// The `mu^{-tau}` factor is always applied, so the observable is
/// independent of the measurement cadence.
pub fn total_amplitude(field: &WaveField, mu: Complex64) -> Vec<Complex64> {
    let theta = mu.im.atan2(mu.re);
    let dephase = Complex64::from_polar(1.0, -theta * field.tau as f64);
    let scale = dephase / (field.channels as f64).sqrt();
    let nch = field.channels;
    field
        .amps
        .chunks(nch)
        .map(|site| site.iter().sum::<Complex64>() * scale)
        .collect()
}

/// Normalized plane wave with integer wavenumbers `l`, equal amplitude on
/// every channel: `psi_k(x) = (2d nsites)^{-1/2} exp(2 pi i sum_a l_a n_a / N_a)`.
pub fn init_plane_wave(extents: &[usize], dim: usize, l: &[i64]) -> Result<WaveField> {
    if extents.len() != dim || l.len() != dim {
        return Err(QlgaError::InvalidField(format!(
            "expected {dim} extents and wavenumbers, got {} and {}",
            extents.len(),
            l.len()
        )));
    }
    for (&la, &n) in l.iter().zip(extents) {
        if 2 * la.unsigned_abs() as usize >= n {
            return Err(QlgaError::Aliasing { l: la, n });
        }
    }
    let channels = 2 * dim;
    let mut field = WaveField::zeros(extents, channels);
    let nsites = field.nsites();
    let amp = 1.0 / ((channels * nsites) as f64).sqrt();
    for site in 0..nsites {
        let coords = field.site_coords(site);
        let phase: f64 = coords
            .iter()
            .zip(l)
            .zip(extents)
            .map(|((&c, &la), &n)| 2.0 * std::f64::consts::PI * la as f64 * c as f64 / n as f64)
            .sum();
        let v = Complex64::from_polar(amp, phase);
        for k in 0..channels {
            field.set(site, k, v);
        }
    }
    Ok(field)
}

/// Normalized Gaussian packet: all channels equal, envelope
/// `exp(-|x - c|^2 / (4 sigma^2)) exp(i p . x)` in unit-box coordinates
/// with minimum-image displacement.
pub fn gaussian_packet(
    extents: &[usize],
    dim: usize,
    center: &[f64],
    width: f64,
    momentum: &[f64],
) -> Result<WaveField> {
    if extents.len() != dim || center.len() != dim || momentum.len() != dim {
        return Err(QlgaError::InvalidField(
            "center, momentum, and extents must all have length d".into(),
        ));
    }
    let max_eps = extents.iter().map(|&n| 1.0 / n as f64).fold(0.0, f64::max);
    if width < 2.0 * max_eps {
        return Err(QlgaError::InvalidField(format!(
            "packet width {width} below twice the lattice spacing {max_eps}"
        )));
    }
    let channels = 2 * dim;
    let mut field = WaveField::zeros(extents, channels);
    let nsites = field.nsites();
    for site in 0..nsites {
        let coords = field.site_coords(site);
        let mut r2 = 0.0;
        let mut mom_phase = 0.0;
        for a in 0..dim {
            let x = coords[a] as f64 / extents[a] as f64;
            let mut dx = x - center[a];
            dx -= dx.round(); // minimum image in the unit box
            r2 += dx * dx;
            mom_phase += momentum[a] * x;
        }
        let v = Complex64::from_polar((-r2 / (4.0 * width * width)).exp(), mom_phase);
        for k in 0..channels {
            field.set(site, k, v);
        }
    }
    field.normalize()?;
    Ok(field)
}

/// A delta function: unit amplitude at one (site, channel) slot.
pub fn delta_field(extents: &[usize], channels: usize, coords: &[usize], channel: usize) -> WaveField {
    let mut field = WaveField::zeros(extents, channels);
    let site = field.site_index(coords);
    field.set(site, channel, Complex64::new(1.0, 0.0));
    field
}

/// Write the raw channel snapshot as CSV: one row per (site, channel) with
/// the lattice coordinates, channel index, and Re/Im parts.
pub fn write_snapshot_csv(field: &WaveField, w: &mut impl std::io::Write) -> Result<()> {
    let dim = field.extents().len();
    for a in 0..dim {
        write!(w, "x{a},")?;
    }
    writeln!(w, "k,re_psi,im_psi")?;
    for site in 0..field.nsites() {
        let coords = field.site_coords(site);
        for k in 0..field.channels() {
            for &c in &coords {
                write!(w, "{c},")?;
            }
            let z = field.get(site, k);
            writeln!(w, "{k},{:.16e},{:.16e}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Write the total-amplitude field as CSV: coordinates, Re/Im of Psi, |Psi|^2.
pub fn write_psi_csv(field: &WaveField, mu: Complex64, w: &mut impl std::io::Write) -> Result<()> {
    let dim = field.extents().len();
    let psi = total_amplitude(field, mu);
    for a in 0..dim {
        write!(w, "x{a},")?;
    }
    writeln!(w, "re_psi,im_psi,abs2_psi")?;
    for (site, z) in psi.iter().enumerate() {
        for &c in &field.site_coords(site) {
            write!(w, "{c},")?;
        }
        writeln!(w, "{:.16e},{:.16e},{:.16e}", z.re, z.im, z.norm_sqr())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ModelParams;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params_1d() -> ModelParams {
        ModelParams::new(1, c(0.0, -1.0), 1.0).unwrap()
    }

    fn random_field(extents: &[usize], channels: usize, seed: u64) -> WaveField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = WaveField::zeros(extents, channels);
        for z in f.amplitudes_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        f.normalize().unwrap();
        f
    }

    #[test]
    fn delta_step_1d() {
        let p = params_1d();
        let mut stepper = Stepper::new(&p, &[8], None).unwrap();
        let mut f = delta_field(&[8], 2, &[0], 0);
        stepper.step(&mut f).unwrap();
        // amplitude (1-i)/2 at x=1 channel 0, -(1+i)/2 at x=-1 channel 1
        assert!((f.get(1, 0) - c(0.5, -0.5)).norm() < 1e-14);
        assert!((f.get(7, 1) - c(-0.5, -0.5)).norm() < 1e-14);
        let rest: f64 = (0..8)
            .flat_map(|s| (0..2).map(move |k| (s, k)))
            .filter(|&(s, k)| !(s == 1 && k == 0) && !(s == 7 && k == 1))
            .map(|(s, k)| f.get(s, k).norm())
            .sum();
        assert!(rest < 1e-14);
    }

    #[test]
    fn norm_preserved_per_step() {
        let p = params_1d();
        let mut stepper = Stepper::new(&p, &[16], None).unwrap();
        let mut f = random_field(&[16], 2, 1);
        for _ in 0..50 {
            stepper.step(&mut f).unwrap();
            assert_abs_diff_eq!(f.norm_sq(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn four_step_expansion_1d() {
        // psi_1(x, t+4) from the explicit 4-step coefficients.
        let p = params_1d();
        let n = 32usize;
        let mut stepper = Stepper::new(&p, &[n], None).unwrap();
        let f0 = random_field(&[n], 2, 2);
        let mut f = f0.clone();
        for _ in 0..4 {
            stepper.step(&mut f).unwrap();
        }
        let at = |x: i64, k: usize| f0.get(x.rem_euclid(n as i64) as usize, k);
        for x in 0..n as i64 {
            let expect = (-at(x - 4, 0) + 3.0 * at(x - 2, 0) + at(x, 0) + at(x + 2, 0)) * 0.25
                + (at(x - 4, 1) - at(x - 2, 1) - at(x, 1) + at(x + 2, 1)) * c(0.0, 0.25);
            assert!(
                (f.get(x as usize, 0) - expect).norm() < 1e-13,
                "x = {x}"
            );
        }
    }

    #[test]
    fn step_is_linear() {
        let p = ModelParams::new(2, c(0.6, -0.8), 1.0).unwrap();
        let extents = [6, 6];
        let mut stepper = Stepper::new(&p, &extents, None).unwrap();
        let fa = random_field(&extents, 4, 3);
        let fb = random_field(&extents, 4, 4);
        let (a, b) = (c(0.3, -1.1), c(0.7, 0.2));

        let mut combined = WaveField::zeros(&extents, 4);
        for i in 0..combined.amplitudes().len() {
            combined.amplitudes_mut()[i] = a * fa.amplitudes()[i] + b * fb.amplitudes()[i];
        }
        let mut fa2 = fa.clone();
        let mut fb2 = fb.clone();
        stepper.step(&mut combined).unwrap();
        stepper.step(&mut fa2).unwrap();
        stepper.step(&mut fb2).unwrap();
        for i in 0..combined.amplitudes().len() {
            let expect = a * fa2.amplitudes()[i] + b * fb2.amplitudes()[i];
            assert!((combined.amplitudes()[i] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn translation_covariance_exact() {
        let p = params_1d();
        let n = 12usize;
        let mut stepper = Stepper::new(&p, &[n], None).unwrap();
        let f = random_field(&[n], 2, 5);
        // shift by one site
        let mut shifted = WaveField::zeros(&[n], 2);
        for s in 0..n {
            for k in 0..2 {
                shifted.set((s + 1) % n, k, f.get(s, k));
            }
        }
        let mut f1 = f.clone();
        stepper.step(&mut f1).unwrap();
        stepper.step(&mut shifted).unwrap();
        for s in 0..n {
            for k in 0..2 {
                assert_eq!(shifted.get((s + 1) % n, k), f1.get(s, k));
            }
        }
    }

    #[test]
    fn constant_potential_is_global_phase() {
        let p = ModelParams::new(2, c(0.0, -1.0), 1.0 / 8.0).unwrap();
        let extents = [8, 8];
        let v0 = 3.7;
        let potential = PotentialField::constant(&extents, v0).unwrap();
        let mut free = Stepper::new(&p, &extents, None).unwrap();
        let mut with_v = Stepper::new(&p, &extents, Some(&potential)).unwrap();
        let mut ff = random_field(&extents, 4, 6);
        let mut fv = ff.clone();
        let steps = 37;
        for _ in 0..steps {
            free.step(&mut ff).unwrap();
            with_v.step(&mut fv).unwrap();
        }
        let phase = Complex64::from_polar(1.0, -p.epsilon() * p.epsilon() * v0 * steps as f64);
        for i in 0..ff.amplitudes().len() {
            let expect = ff.amplitudes()[i] * phase;
            assert!((fv.amplitudes()[i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn total_amplitude_uniform_field() {
        let mut f = WaveField::zeros(&[4, 4], 4);
        let v = c(0.1, 0.2);
        for z in f.amplitudes_mut() {
            *z = v;
        }
        let psi = total_amplitude(&f, c(0.0, -1.0));
        for z in &psi {
            // tau = 0: Psi = sqrt(2d) * const
            assert!((z - v * 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn total_amplitude_dephase_cancels_every_four_steps() {
        let mu = c(0.0, -1.0);
        let mut f = WaveField::zeros(&[4], 2);
        f.set(0, 0, c(1.0, 0.0));
        f.tau = 4;
        let psi = total_amplitude(&f, mu);
        assert!((psi[0] - c(1.0, 0.0) / 2.0f64.sqrt()).norm() < 1e-12);
    }

    #[test]
    fn plane_wave_abs_psi_uniform_under_evolution() {
        let p = ModelParams::new(2, c(0.0, -1.0), 1.0 / 16.0).unwrap();
        let extents = [16, 16];
        let mut stepper = Stepper::new(&p, &extents, None).unwrap();
        let mut f = init_plane_wave(&extents, 2, &[2, 1]).unwrap();
        for _ in 0..40 {
            stepper.step(&mut f).unwrap();
        }
        let psi = total_amplitude(&f, p.mu());
        let mags: Vec<f64> = psi.iter().map(|z| z.norm()).collect();
        let first = mags[0];
        for m in &mags {
            assert_abs_diff_eq!(*m, first, epsilon = 1e-10);
        }
    }

    #[test]
    fn plane_wave_zero_mode_uniform_and_conjugate_pair_real() {
        let f = init_plane_wave(&[8, 8], 2, &[0, 0]).unwrap();
        let a0 = f.get(0, 0);
        assert!(f.amplitudes().iter().all(|z| (z - a0).norm() < 1e-15));

        let fp = init_plane_wave(&[8], 1, &[2]).unwrap();
        let fm = init_plane_wave(&[8], 1, &[-2]).unwrap();
        let mut sum = WaveField::zeros(&[8], 2);
        for i in 0..sum.amplitudes().len() {
            sum.amplitudes_mut()[i] = fp.amplitudes()[i] + fm.amplitudes()[i];
        }
        for z in total_amplitude(&sum, c(0.0, -1.0)) {
            assert!(z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_rejects_aliasing() {
        assert!(matches!(
            init_plane_wave(&[8], 1, &[4]),
            Err(QlgaError::Aliasing { l: 4, n: 8 })
        ));
        assert!(init_plane_wave(&[8], 1, &[3]).is_ok());
    }

    #[test]
    fn gaussian_packet_normalized_and_symmetric() {
        let f = gaussian_packet(&[64], 1, &[0.5], 0.05, &[0.0]).unwrap();
        assert_abs_diff_eq!(f.norm_sq(), 1.0, epsilon = 1e-12);
        let psi = total_amplitude(&f, c(0.0, -1.0));
        // reflection symmetry about the center site
        for i in 1..32 {
            let a = psi[32 - i].norm_sqr();
            let b = psi[32 + i].norm_sqr();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn gaussian_packet_rejects_thin_width() {
        assert!(gaussian_packet(&[16], 1, &[0.5], 0.01, &[0.0]).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        #[cfg(feature = "parallel")]
        {
            let p = ModelParams::new(2, c(0.28, 0.96), 1.0 / 10.0).unwrap();
            let extents = [10, 10];
            let mut s1 = Stepper::new(&p, &extents, None).unwrap();
            let mut s2 = Stepper::new(&p, &extents, None).unwrap();
            let mut fa = random_field(&extents, 4, 9);
            let mut fb = fa.clone();
            for _ in 0..20 {
                s1.step_sequential(&mut fa).unwrap();
                s2.step_parallel(&mut fb).unwrap();
            }
            for i in 0..fa.amplitudes().len() {
                assert_eq!(fa.amplitudes()[i], fb.amplitudes()[i]);
            }
        }
    }

    #[test]
    fn csv_exports_have_headers() {
        let f = init_plane_wave(&[4], 1, &[1]).unwrap();
        let mut buf = Vec::new();
        write_snapshot_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,k,re_psi,im_psi\n"));
        let mut buf = Vec::new();
        write_psi_csv(&f, c(0.0, -1.0), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,re_psi,im_psi,abs2_psi\n"));
    }
}
