//! Model-defining matrices for the unitary lattice-Boltzmann model on a
//! Cartesian lattice: the collision matrix `S`, its real diagonalizer `X`,
//! the eigenvalue diagonal `D`, and the mass/eigenvalue relation.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{QlgaError, Result};

/// Default tolerance for algebraic identities.
pub const ALG_TOL: f64 = 1e-12;

/// Distance from a degenerate eigenvalue below which construction is refused.
const DEGENERACY_TOL: f64 = 1e-12;

/// Parameters of the lattice model. Everything else derives from these.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    dim: usize,
    mu: Complex64,
    theta: f64,
    epsilon: f64,
}

impl ModelParams {
    /// Validate and build parameters from the distinguished collision
    /// eigenvalue `mu`, which must lie on the unit circle away from `+1`
    /// (the `nu` eigenvalue) and `-1` (the `lambda` eigenvalue).
    pub fn new(dim: usize, mu: Complex64, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(QlgaError::InvalidParams("dimension must be >= 1".into()));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(QlgaError::InvalidParams(format!(
                "lattice spacing must be positive, got {epsilon}"
            )));
        }
        if (mu.norm() - 1.0).abs() > ALG_TOL {
            return Err(QlgaError::InvalidParams(format!(
                "|mu| must be 1 within {ALG_TOL:.0e}, got |{mu}| = {}",
                mu.norm()
            )));
        }
        if (mu - Complex64::new(1.0, 0.0)).norm() < DEGENERACY_TOL {
            return Err(QlgaError::DegenerateEigenvalues(
                "mu = 1 collides with the unit eigenvalue; mass is undefined".into(),
            ));
        }
        if (mu + Complex64::new(1.0, 0.0)).norm() < DEGENERACY_TOL {
            return Err(QlgaError::DegenerateEigenvalues(
                "mu = -1 collides with the lambda = -1 eigenvalue".into(),
            ));
        }
        Ok(Self {
            dim,
            mu,
            theta: mu.im.atan2(mu.re),
            epsilon,
        })
    }

    /// Build parameters from the eigenvalue angle, `mu = exp(i theta)`.
    pub fn from_theta(dim: usize, theta: f64, epsilon: f64) -> Result<Self> {
        Self::new(dim, Complex64::from_polar(1.0, theta), epsilon)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    /// Angle of `mu` in (-pi, pi].
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of velocity channels, `2 d`.
    pub fn channels(&self) -> usize {
        2 * self.dim
    }

    /// Emergent particle mass, `m = d (cot theta - csc theta)`.
    ///
    /// Positive mass requires `theta < 0`; the sign is reported as-is.
    pub fn mass(&self) -> f64 {
        mass_from_mu(self.dim, self.theta)
    }
}

/// `m = d (cot theta - csc theta)`, computed through the numerically stable
/// equivalent `-d tan(theta / 2)`.
pub fn mass_from_mu(dim: usize, theta: f64) -> f64 {
    -(dim as f64) * (theta / 2.0).tan()
}

/// The `2d` lattice velocity vectors: channel `k < d` moves `+1` along axis
/// `k`, channel `k >= d` moves `-1` along axis `k - d` (lattice units).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityBasis {
    dim: usize,
}

impl VelocityBasis {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> usize {
        2 * self.dim
    }

    /// Velocity vector of channel `k` (0-based).
    pub fn vector(&self, k: usize) -> Vec<i64> {
        let mut v = vec![0i64; self.dim];
        if k < self.dim {
            v[k] = 1;
        } else {
            v[k - self.dim] = -1;
        }
        v
    }

    pub fn vectors(&self) -> Vec<Vec<i64>> {
        (0..self.channels()).map(|k| self.vector(k)).collect()
    }

    /// Diagonal of `C^alpha = diag(c_1^alpha, ..., c_2d^alpha)`
    /// for a 0-based axis `alpha`.
    pub fn c_diag(&self, alpha: usize) -> Vec<f64> {
        (0..self.channels())
            .map(|k| self.vector(k)[alpha] as f64)
            .collect()
    }
}

/// The collision matrix `S` together with its spectral decomposition
/// `S = X^T D X` (`X` real orthogonal, `D` diagonal).
#[derive(Debug, Clone)]
pub struct CollisionMatrix {
    s: Array2<Complex64>,
    x: Array2<f64>,
    d: Vec<Complex64>,
}

impl CollisionMatrix {
    /// Build `S`, `X`, `D` for validated parameters.
    pub fn build(params: &ModelParams) -> Self {
        Self::from_raw(params.dim(), params.mu())
    }

    /// Construct directly from `(d, mu)` without the degeneracy checks.
    /// The matrix formula is well defined for any `mu`; degenerate values
    /// only break the downstream `G`-solve.
    pub fn from_raw(dim: usize, mu: Complex64) -> Self {
        let n = 2 * dim;
        let off = (Complex64::new(1.0, 0.0) + mu) / (2.0 * dim as f64);
        let mut s = Array2::from_elem((n, n), off);
        for i in 0..n {
            let j = (i + dim) % n;
            s[(i, j)] = off - 1.0;
        }
        Self {
            s,
            x: diagonalizer(dim),
            d: eigenvalues(dim, mu),
        }
    }

    /// The `2d x 2d` unitary collision matrix.
    pub fn s(&self) -> &Array2<Complex64> {
        &self.s
    }

    /// Real orthogonal diagonalizer; rows are the symmetry eigenvectors.
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Diagonal of `D`: `mu` once, `+1` d times, `-1` (d - 1) times.
    pub fn d_diag(&self) -> &[Complex64] {
        &self.d
    }

    pub fn channels(&self) -> usize {
        self.s.nrows()
    }

    /// Row-major copy of `S` for hot loops.
    pub fn s_rows(&self) -> Vec<Complex64> {
        self.s.iter().copied().collect()
    }
}

/// Eigenvalue diagonal: `mu`, then `+1` with multiplicity `d`, then `-1`
/// with multiplicity `d - 1`.
fn eigenvalues(dim: usize, mu: Complex64) -> Vec<Complex64> {
    let mut d = Vec::with_capacity(2 * dim);
    d.push(mu);
    d.extend(std::iter::repeat_n(Complex64::new(1.0, 0.0), dim));
    d.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), dim - 1));
    d
}

/// The real orthogonal matrix whose rows span the three irreducible
/// representations of the lattice symmetry group: the symmetric vector,
/// the `d` difference vectors `e_a - e_{a+d}`, and `d - 1` zero-sum
/// vectors with equal components on each `+/-` pair.
fn diagonalizer(dim: usize) -> Array2<f64> {
    let n = 2 * dim;
    let mut x = Array2::zeros((n, n));
    let sym = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        x[(0, j)] = sym;
    }
    for a in 0..dim {
        x[(1 + a, a)] = std::f64::consts::FRAC_1_SQRT_2;
        x[(1 + a, a + dim)] = -std::f64::consts::FRAC_1_SQRT_2;
    }
    // Zero-sum row `a` (1-based) has `a` equal entries followed by `-a`,
    // duplicated over the +/- halves; norm^2 = 2 a (a + 1).
    for a in 1..dim {
        let norm = (2.0 * a as f64 * (a as f64 + 1.0)).sqrt();
        for b in 0..a {
            x[(dim + a, b)] = 1.0 / norm;
            x[(dim + a, b + dim)] = 1.0 / norm;
        }
        x[(dim + a, a)] = -(a as f64) / norm;
        x[(dim + a, a + dim)] = -(a as f64) / norm;
    }
    x
}

/// Residuals of the two closed-form unitarity identities for the
/// Cartesian collision matrix.
#[derive(Debug, Clone, Copy)]
pub struct UnitarityReport {
    /// |row-norm expression - 1|
    pub row_norm_residual: f64,
    /// |off-diagonal orthogonality expression|
    pub orthogonality_residual: f64,
}

impl UnitarityReport {
    pub fn max_residual(&self) -> f64 {
        self.row_norm_residual.max(self.orthogonality_residual)
    }
}

impl std::fmt::Display for UnitarityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "row_norm_residual: {:.3e}", self.row_norm_residual)?;
        write!(f, "orthogonality_residual: {:.3e}", self.orthogonality_residual)
    }
}

/// Evaluate the two displayed unitarity identities at raw `(d, mu)`.
/// Both vanish exactly when `|mu| = 1`; off-circle values of `mu` leave a
/// nonzero residual, which is reported rather than rejected.
pub fn check_unitarity_identities(dim: usize, mu: Complex64) -> UnitarityReport {
    let n = 2.0 * dim as f64;
    let denom = n * n;
    let one = Complex64::new(1.0, 0.0);
    let p = one + mu;
    let pc = one + mu.conj();
    let row_norm = ((n - 1.0) * p * pc + (p - n) * (pc - n)) / denom;
    let ortho = ((n - 2.0) * p * pc + p * (pc - n) + (p - n) * pc) / denom;
    UnitarityReport {
        row_norm_residual: (row_norm - one).norm(),
        orthogonality_residual: ortho.norm(),
    }
}
