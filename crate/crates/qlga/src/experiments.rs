//! Numerical experiments on the lattice model: plane-wave dispersion
//! measurement through time-series overlaps, and CSV reporting.

use num_complex::Complex64;

use crate::algebra::ModelParams;
use crate::engine::{init_plane_wave, total_amplitude, PotentialField, Stepper};
use crate::error::{QlgaError, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Overlap threshold below which a frequency sample is unreliable.
pub const OVERLAP_FLOOR: f64 = 1e-6;

/// Normalized overlap `<a, b> / <a, a>`.
pub fn overlap(reference: &[Complex64], current: &[Complex64]) -> Result<Complex64> {
    if reference.len() != current.len() {
        return Err(QlgaError::InvalidField(format!(
            "overlap of fields with {} and {} samples",
            reference.len(),
            current.len()
        )));
    }
    let denom: f64 = reference.iter().map(|z| z.norm_sqr()).sum();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(QlgaError::InvalidField(format!(
            "overlap reference has norm^2 = {denom}"
        )));
    }
    let num: Complex64 = reference
        .iter()
        .zip(current)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(num / denom)
}

/// One plane-wave dispersion measurement.
#[derive(Debug, Clone)]
pub struct DispersionRecord {
    pub n: usize,
    pub l: Vec<i64>,
    pub k_mag: f64,
    /// mean of the per-epoch frequency estimates (real part)
    pub omega_mean: f64,
    pub omega_std: f64,
    /// largest imaginary part seen in any estimate; should be noise-level
    pub omega_imag_max: f64,
    /// continuum prediction `|k|^2 / (2 m)`
    pub omega_pred: f64,
    pub samples: usize,
    /// true when some overlap fell below [`OVERLAP_FLOOR`]
    pub flagged: bool,
}

impl DispersionRecord {
    pub fn relative_error(&self) -> f64 {
        if self.omega_pred == 0.0 {
            self.omega_mean.abs()
        } else {
            (self.omega_mean - self.omega_pred).abs() / self.omega_pred.abs()
        }
    }
}

/// Evolve a plane wave with wavenumber vector `2 pi l` on an `n^dim`
/// periodic lattice (`eps = 1/n`, `dt = eps^2`) and estimate its temporal
/// frequency from overlaps sampled every `cadence` steps:
///
/// `omega = i / (cadence dt) * ln( S(t + cadence dt) / S(t) )`
///
/// with the complex-log branch chosen nearest the previous epoch's estimate.
pub fn measure_dispersion(
    dim: usize,
    mu: Complex64,
    n: usize,
    l: &[i64],
    epochs: usize,
    cadence: u64,
    potential: Option<&PotentialField>,
) -> Result<DispersionRecord> {
    if epochs < 2 || cadence == 0 {
        return Err(QlgaError::InvalidParams(
            "dispersion needs cadence >= 1 and at least 2 epochs".into(),
        ));
    }
    let params = ModelParams::new(dim, mu, 1.0 / n as f64)?;
    let extents = vec![n; dim];
    let mut field = init_plane_wave(&extents, dim, l)?;
    let mut stepper = Stepper::new(&params, &extents, potential)?;

    let dt = params.epsilon() * params.epsilon();
    let window = cadence as f64 * dt;
    let psi0 = total_amplitude(&field, mu);

    let mut prev_s = Complex64::new(1.0, 0.0);
    let mut prev_omega: Option<f64> = None;
    let mut omegas = Vec::with_capacity(epochs);
    let mut imag_max: f64 = 0.0;
    let mut flagged = false;

    for _ in 0..epochs {
        for _ in 0..cadence {
            stepper.step(&mut field)?;
        }
        let s = overlap(&psi0, &total_amplitude(&field, mu))?;
        if s.norm() < OVERLAP_FLOOR || prev_s.norm() < OVERLAP_FLOOR {
            flagged = true;
            prev_s = s;
            continue;
        }
        let ratio = s / prev_s;
        prev_s = s;
        let ln_mag = ratio.norm().ln();
        let mut arg = ratio.arg();
        // omega = i/(c dt) ln r = (-arg + i ln|r|)/(c dt); pick the branch of
        // arg (mod 2 pi) whose real frequency is nearest the previous one
        if let Some(prev) = prev_omega {
            let target = -prev * window;
            arg += std::f64::consts::TAU * ((target - arg) / std::f64::consts::TAU).round();
        }
        let omega_re = -arg / window;
        let omega_im = ln_mag / window;
        imag_max = imag_max.max(omega_im.abs());
        prev_omega = Some(omega_re);
        omegas.push(omega_re);
    }

    if omegas.len() < 2 {
        return Err(QlgaError::OverlapLost(prev_s.norm()));
    }
    let mean = omegas.iter().sum::<f64>() / omegas.len() as f64;
    let var = omegas.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / omegas.len() as f64;

    let k_sq: f64 = l
        .iter()
        .map(|&li| (std::f64::consts::TAU * li as f64).powi(2))
        .sum();
    Ok(DispersionRecord {
        n,
        l: l.to_vec(),
        k_mag: k_sq.sqrt(),
        omega_mean: mean,
        omega_std: var.sqrt(),
        omega_imag_max: imag_max,
        omega_pred: k_sq / (2.0 * params.mass()),
        samples: omegas.len(),
        flagged,
    })
}

/// Run [`measure_dispersion`] over a set of `(n, l)` combinations, in
/// parallel when the `parallel` feature is enabled.
pub fn dispersion_sweep(
    dim: usize,
    mu: Complex64,
    runs: &[(usize, Vec<i64>)],
    epochs: usize,
    cadence: u64,
) -> Result<Vec<DispersionRecord>> {
    let one = |(n, l): &(usize, Vec<i64>)| measure_dispersion(dim, mu, *n, l, epochs, cadence, None);
    #[cfg(feature = "parallel")]
    {
        runs.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        runs.iter().map(one).collect()
    }
}

/// Like [`dispersion_sweep`] but with a potential built from its string
/// spec (see [`crate::config`]) for each lattice size.
pub fn dispersion_sweep_with_potential(
    dim: usize,
    mu: Complex64,
    runs: &[(usize, Vec<i64>)],
    epochs: usize,
    cadence: u64,
    potential_spec: &str,
) -> Result<Vec<DispersionRecord>> {
    let one = |(n, l): &(usize, Vec<i64>)| {
        let extents = vec![*n; dim];
        let potential = crate::config::parse_potential(potential_spec, &extents)?;
        measure_dispersion(dim, mu, *n, l, epochs, cadence, potential.as_ref())
    };
    #[cfg(feature = "parallel")]
    {
        runs.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        runs.iter().map(one).collect()
    }
}

/// Dispersion records as CSV. `flagged` marks rows whose overlap decayed
/// below [`OVERLAP_FLOOR`]; their frequencies are unreliable.
pub fn write_dispersion_csv(
    records: &[DispersionRecord],
    w: &mut impl std::io::Write,
) -> Result<()> {
    let dim = records.first().map_or(0, |r| r.l.len());
    write!(w, "n,")?;
    for a in 0..dim {
        write!(w, "l{a},")?;
    }
    writeln!(w, "k_mag,omega_meas,omega_pred,stddev,imag_max,samples,flagged")?;
    for r in records {
        write!(w, "{},", r.n)?;
        for &li in &r.l {
            write!(w, "{li},")?;
        }
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            r.k_mag, r.omega_mean, r.omega_pred, r.omega_std, r.omega_imag_max, r.samples, r.flagged
        )?;
    }
    Ok(())
}
