//! Continuum-limit analysis: the `B^alpha` matrices, the `G`-solve, and the
//! effective second-order operator whose first row carries the emergent
//! Schrodinger coefficient `i / (2 m)`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::algebra::{CollisionMatrix, ModelParams, VelocityBasis, ALG_TOL};
use crate::error::{QlgaError, Result};

/// Tolerance for the cross-check between the direct conjugation and the
/// closed-form construction of `B^alpha`.
const B_CONSISTENCY_TOL: f64 = 1e-10;

/// `r(a) = 1 / sqrt(a (a + 1))`, the tail coefficient of the closed-form
/// `B^alpha` rows.
fn r(a: usize) -> f64 {
    1.0 / ((a * (a + 1)) as f64).sqrt()
}

/// Closed-form nonzero row of `B^alpha` for a 1-based axis `alpha`:
/// `(1/sqrt(d), 0^(d+alpha-2), -sqrt(alpha-1)/sqrt(alpha), r(alpha), ..., r(d-1))`.
fn closed_form_b_row(dim: usize, alpha: usize) -> Vec<f64> {
    let mut row = vec![0.0; 2 * dim];
    row[0] = 1.0 / (dim as f64).sqrt();
    row[dim + alpha - 1] = -(((alpha - 1) as f64).sqrt()) / (alpha as f64).sqrt();
    for (slot, a) in (dim + alpha..2 * dim).zip(alpha..) {
        row[slot] = r(a);
    }
    row
}

/// Compute the `d` matrices `B^alpha = X C^alpha X^T`, both by direct
/// conjugation and by the closed-form row formula; the two must agree.
pub fn compute_b(basis: &VelocityBasis, x: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
    let dim = basis.dim();
    let n = basis.channels();
    let mut out = Vec::with_capacity(dim);
    for alpha in 0..dim {
        let c = Array2::from_diag(&ndarray::Array1::from(basis.c_diag(alpha)));
        let direct = x.dot(&c).dot(&x.t());

        let mut closed = Array2::zeros((n, n));
        let row = closed_form_b_row(dim, alpha + 1);
        for (i, &v) in row.iter().enumerate() {
            closed[(alpha + 1, i)] = v;
            closed[(i, alpha + 1)] = v;
        }

        let dev = (&direct - &closed)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        if dev > B_CONSISTENCY_TOL {
            return Err(QlgaError::Inconsistent(format!(
                "B^{} conjugation vs closed form deviate by {dev:.3e}",
                alpha + 1
            )));
        }
        out.push(direct);
    }
    Ok(out)
}

/// Solve `G - D G D^{-1} = -B` entrywise: `G_ij = -B_ij / (1 - d_i d_j^*)`
/// wherever `B_ij != 0`, zero elsewhere. Uses `d_j^{-1} = d_j^*`, valid
/// only for a unitary `D`; asserted at entry.
pub fn solve_g(b: &Array2<f64>, d_diag: &[Complex64]) -> Result<Array2<Complex64>> {
    for (i, d) in d_diag.iter().enumerate() {
        if (d.norm() - 1.0).abs() > ALG_TOL {
            return Err(QlgaError::InvalidParams(format!(
                "D eigenvalue {i} is off the unit circle: |{d}| = {}",
                d.norm()
            )));
        }
    }
    let n = b.nrows();
    let mut g = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let bij = b[(i, j)];
            if bij.abs() <= ALG_TOL {
                continue;
            }
            let denom = Complex64::new(1.0, 0.0) - d_diag[i] * d_diag[j].conj();
            if denom.norm() < ALG_TOL {
                return Err(QlgaError::SingularSolve {
                    row: i,
                    col: j,
                    value: bij,
                });
            }
            g[(i, j)] = -bij / denom;
        }
    }
    Ok(g)
}

/// The effective operator family `M^{ab} = -B^a G^b - (1/2) X C^a C^b X^T`
/// together with its ingredients and the mass extracted from `M^{aa}[0,0]`.
#[derive(Debug, Clone)]
pub struct EffectiveOperator {
    pub b: Vec<Array2<f64>>,
    pub g: Vec<Array2<Complex64>>,
    /// `m[a][b]` is the coefficient matrix of `d_a d_b` at `tau = 0`.
    pub m: Vec<Vec<Array2<Complex64>>>,
    pub mass_extracted: f64,
}

fn to_complex(m: &Array2<f64>) -> Array2<Complex64> {
    m.mapv(|v| Complex64::new(v, 0.0))
}

/// Assemble the effective operator at `tau = 0` and extract the mass from
/// the `(0, 0)` entry of the diagonal blocks, `M^{aa}[0,0] = i / (2 m)`.
pub fn effective_operator(params: &ModelParams) -> Result<EffectiveOperator> {
    let dim = params.dim();
    let basis = VelocityBasis::new(dim);
    let cm = CollisionMatrix::build(params);
    let x = cm.x();
    let b = compute_b(&basis, x)?;
    let g: Vec<_> = b
        .iter()
        .map(|ba| solve_g(ba, cm.d_diag()))
        .collect::<Result<_>>()?;

    let xc = to_complex(x);
    let mut m = Vec::with_capacity(dim);
    for a in 0..dim {
        let ba = to_complex(&b[a]);
        let mut row = Vec::with_capacity(dim);
        for bb in 0..dim {
            let ca = Array2::from_diag(&ndarray::Array1::from(basis.c_diag(a)));
            let cb = Array2::from_diag(&ndarray::Array1::from(basis.c_diag(bb)));
            let cc = to_complex(&ca.dot(&cb));
            let second = xc.dot(&cc).dot(&xc.t());
            let mab = -ba.dot(&g[bb]) - second.mapv(|z| 0.5 * z);
            row.push(mab);
        }
        m.push(row);
    }

    // i / (2 M^{aa}[0,0]) should be the real mass; require consistency with
    // the closed-form eigenvalue relation.
    let m00 = m[0][0][(0, 0)];
    let extracted = Complex64::new(0.0, 1.0) / (2.0 * m00);
    let expected = params.mass();
    if extracted.im.abs() > 1e-10 || (extracted.re - expected).abs() > 1e-10 {
        return Err(QlgaError::Inconsistent(format!(
            "extracted mass {extracted} disagrees with d (cot - csc) = {expected}"
        )));
    }
    Ok(EffectiveOperator {
        b,
        g,
        m,
        mass_extracted: extracted.re,
    })
}

/// Hard-coded 2D and 3D reference matrices, evaluated at a given `mu`.
pub struct ReferenceMatrices {
    pub s: Array2<Complex64>,
    pub b: Vec<Array2<f64>>,
    pub g: Vec<Array2<Complex64>>,
}

/// The explicit 2D matrices.
pub fn reference_matrices_2d(mu: Complex64) -> ReferenceMatrices {
    let z = Complex64::new(0.0, 0.0);
    let q = 0.25;
    let p = mu + 1.0;
    let m3 = mu - 3.0;
    let s = Array2::from_shape_vec(
        (4, 4),
        vec![
            q * p, q * p, q * m3, q * p, //
            q * p, q * p, q * p, q * m3, //
            q * m3, q * p, q * p, q * p, //
            q * p, q * m3, q * p, q * p,
        ],
    )
    .unwrap();

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let b1 = Array2::from_shape_vec(
        (4, 4),
        vec![
            0.0, h, 0.0, 0.0, //
            h, 0.0, 0.0, h, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, h, 0.0, 0.0,
        ],
    )
    .unwrap();
    let b2 = Array2::from_shape_vec(
        (4, 4),
        vec![
            0.0, 0.0, h, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            h, 0.0, 0.0, -h, //
            0.0, 0.0, -h, 0.0,
        ],
    )
    .unwrap();

    let gm = -Complex64::new(h, 0.0) / (Complex64::new(1.0, 0.0) - mu);
    let gc = -Complex64::new(h, 0.0) / (Complex64::new(1.0, 0.0) - mu.conj());
    let gq = Complex64::new(-1.0 / (2.0 * std::f64::consts::SQRT_2), 0.0);
    let g1 = Array2::from_shape_vec(
        (4, 4),
        vec![
            z, gm, z, z, //
            gc, z, z, gq, //
            z, z, z, z, //
            z, gq, z, z,
        ],
    )
    .unwrap();
    let g2 = Array2::from_shape_vec(
        (4, 4),
        vec![
            z, z, gm, z, //
            z, z, z, z, //
            gc, z, z, -gq, //
            z, z, -gq, z,
        ],
    )
    .unwrap();

    ReferenceMatrices {
        s,
        b: vec![b1, b2],
        g: vec![g1, g2],
    }
}

/// The explicit 3D matrices.
pub fn reference_matrices_3d(mu: Complex64) -> ReferenceMatrices {
    let z = Complex64::new(0.0, 0.0);
    let q = 1.0 / 6.0;
    let p = mu + 1.0;
    let m5 = mu - 5.0;
    let mut s = Array2::from_elem((6, 6), q * p);
    for i in 0..6 {
        s[(i, (i + 3) % 6)] = q * m5;
    }

    let s3 = 1.0 / 3.0f64.sqrt();
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let s6 = 1.0 / 6.0f64.sqrt();
    let s23 = (2.0 / 3.0f64).sqrt();

    let mut b1 = Array2::zeros((6, 6));
    b1[(0, 1)] = s3;
    b1[(1, 0)] = s3;
    b1[(1, 4)] = s2;
    b1[(1, 5)] = s6;
    b1[(4, 1)] = s2;
    b1[(5, 1)] = s6;

    let mut b2 = Array2::zeros((6, 6));
    b2[(0, 2)] = s3;
    b2[(2, 0)] = s3;
    b2[(2, 4)] = -s2;
    b2[(2, 5)] = s6;
    b2[(4, 2)] = -s2;
    b2[(5, 2)] = s6;

    let mut b3 = Array2::zeros((6, 6));
    b3[(0, 3)] = s3;
    b3[(3, 0)] = s3;
    b3[(3, 5)] = -s23;
    b3[(5, 3)] = -s23;

    let gm = -Complex64::new(s3, 0.0) / (Complex64::new(1.0, 0.0) - mu);
    let gc = -Complex64::new(s3, 0.0) / (Complex64::new(1.0, 0.0) - mu.conj());

    let mut g1 = Array2::from_elem((6, 6), z);
    g1[(0, 1)] = gm;
    g1[(1, 0)] = gc;
    g1[(1, 4)] = Complex64::new(-1.0 / (2.0 * 2.0f64.sqrt()), 0.0);
    g1[(1, 5)] = Complex64::new(-1.0 / (2.0 * 6.0f64.sqrt()), 0.0);
    g1[(4, 1)] = g1[(1, 4)];
    g1[(5, 1)] = g1[(1, 5)];

    let mut g2 = Array2::from_elem((6, 6), z);
    g2[(0, 2)] = gm;
    g2[(2, 0)] = gc;
    g2[(2, 4)] = Complex64::new(1.0 / (2.0 * 2.0f64.sqrt()), 0.0);
    g2[(2, 5)] = Complex64::new(-1.0 / (2.0 * 6.0f64.sqrt()), 0.0);
    g2[(4, 2)] = g2[(2, 4)];
    g2[(5, 2)] = g2[(2, 5)];

    let mut g3 = Array2::from_elem((6, 6), z);
    g3[(0, 3)] = gm;
    g3[(3, 0)] = gc;
    g3[(3, 5)] = Complex64::new(s6, 0.0);
    g3[(5, 3)] = g3[(3, 5)];

    ReferenceMatrices {
        s,
        b: vec![b1, b2, b3],
        g: vec![g1, g2, g3],
    }
}

/// Maximum elementwise deviations of the computed `S`, `B^a`, `G^a` from the
/// hard-coded 2D/3D references at the given `mu`.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceReport {
    pub max_dev_s: f64,
    pub max_dev_b: f64,
    pub max_dev_g: f64,
}

impl ReferenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_dev_s.max(self.max_dev_b).max(self.max_dev_g)
    }
}

impl std::fmt::Display for ReferenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "max_dev_S: {:.3e}", self.max_dev_s)?;
        writeln!(f, "max_dev_B: {:.3e}", self.max_dev_b)?;
        write!(f, "max_dev_G: {:.3e}", self.max_dev_g)
    }
}

/// Compare the computed model matrices against the reference set.
pub fn verify_reference(dim: usize, mu: Complex64) -> Result<ReferenceReport> {
    let gold = match dim {
        2 => reference_matrices_2d(mu),
        3 => reference_matrices_3d(mu),
        _ => {
            return Err(QlgaError::InvalidParams(format!(
                "reference matrices exist only for d in {{2, 3}}, got {dim}"
            )))
        }
    };
    let basis = VelocityBasis::new(dim);
    let cm = CollisionMatrix::from_raw(dim, mu);
    let b = compute_b(&basis, cm.x())?;
    let g: Vec<_> = b
        .iter()
        .map(|ba| solve_g(ba, cm.d_diag()))
        .collect::<Result<_>>()?;

    let max_dev_s = (cm.s() - &gold.s)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let max_dev_b = b
        .iter()
        .zip(&gold.b)
        .flat_map(|(x, y)| (x - y).iter().map(|v| v.abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    let max_dev_g = g
        .iter()
        .zip(&gold.g)
        .flat_map(|(x, y)| (x - y).iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);

    Ok(ReferenceReport {
        max_dev_s,
        max_dev_b,
        max_dev_g,
    })
}

/// The three 2D coefficient matrices of the full `zeta` dynamics at
/// `tau = 0`: the `dx^2` block, the `dy^2` block, and the mixed `dx dy`
/// block. The lambda-sector entries are exposed as computed; their phases
/// average out over time rather than vanishing identically.
pub fn zeta_full_dynamics_2d(
    params: &ModelParams,
) -> Result<(Array2<Complex64>, Array2<Complex64>, Array2<Complex64>)> {
    if params.dim() != 2 {
        return Err(QlgaError::InvalidParams(format!(
            "zeta dynamics are tabulated for d = 2, got {}",
            params.dim()
        )));
    }
    let eff = effective_operator(params)?;
    let dxx = eff.m[0][0].clone();
    let dyy = eff.m[1][1].clone();
    let cross = &eff.m[0][1] + &eff.m[1][0];
    Ok((dxx, dyy, cross))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(dim: usize, mu: Complex64) -> ModelParams {
        ModelParams::new(dim, mu, 1.0).unwrap()
    }

    fn random_unit_mu(rng: &mut impl Rng) -> Complex64 {
        loop {
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let mu = Complex64::from_polar(1.0, theta);
            if (mu - 1.0).norm() > 1e-3 && (mu + 1.0).norm() > 1e-3 {
                return mu;
            }
        }
    }

    #[test]
    fn b_matrix_1d() {
        let basis = VelocityBasis::new(1);
        let cm = CollisionMatrix::from_raw(1, c(0.0, -1.0));
        let b = compute_b(&basis, cm.x()).unwrap();
        assert_eq!(b.len(), 1);
        let expect = [[0.0, 1.0], [1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(b[0][(i, j)], expect[i][j], epsilon = ALG_TOL);
            }
        }
    }

    #[test]
    fn b_matrices_symmetric_up_to_d5() {
        for dim in 1..=5 {
            let basis = VelocityBasis::new(dim);
            let cm = CollisionMatrix::from_raw(dim, c(0.6, 0.8));
            let b = compute_b(&basis, cm.x()).unwrap();
            for ba in &b {
                let dev = (ba - &ba.t())
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0, f64::max);
                assert!(dev < ALG_TOL);
            }
        }
    }

    #[test]
    fn g_matrix_1d() {
        let mu = c(0.0, -1.0);
        let basis = VelocityBasis::new(1);
        let cm = CollisionMatrix::from_raw(1, mu);
        let b = compute_b(&basis, cm.x()).unwrap();
        let g = solve_g(&b[0], cm.d_diag()).unwrap();
        let one = c(1.0, 0.0);
        assert!((g[(0, 1)] - (-one / (one - mu))).norm() < ALG_TOL);
        assert!((g[(1, 0)] - (-one / (one - mu.conj()))).norm() < ALG_TOL);
        assert!(g[(0, 0)].norm() < ALG_TOL && g[(1, 1)].norm() < ALG_TOL);
    }

    #[test]
    fn g_zero_for_zero_b() {
        let b = Array2::zeros((4, 4));
        let d = vec![c(0.0, -1.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)];
        let g = solve_g(&b, &d).unwrap();
        assert!(g.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn g_solve_reports_singular_position() {
        let mut b = Array2::zeros((2, 2));
        b[(0, 1)] = 1.0;
        let d = vec![c(1.0, 0.0), c(1.0, 0.0)];
        match solve_g(&b, &d) {
            Err(QlgaError::SingularSolve { row: 0, col: 1, .. }) => {}
            other => panic!("expected singular solve, got {other:?}"),
        }
    }

    #[test]
    fn g_satisfies_defining_equation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for dim in 1..=5 {
            let mu = random_unit_mu(&mut rng);
            let basis = VelocityBasis::new(dim);
            let cm = CollisionMatrix::from_raw(dim, mu);
            let b = compute_b(&basis, cm.x()).unwrap();
            for ba in &b {
                let g = solve_g(ba, cm.d_diag()).unwrap();
                // residual of G - D G D^{-1} + B
                let n = 2 * dim;
                let mut max_res = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        let di = cm.d_diag()[i];
                        let dj_inv = cm.d_diag()[j].conj();
                        let res = g[(i, j)] - di * g[(i, j)] * dj_inv + ba[(i, j)];
                        max_res = max_res.max(res.norm());
                    }
                }
                assert!(max_res < ALG_TOL, "d={dim} residual {max_res:.2e}");
            }
        }
    }

    #[test]
    fn effective_operator_first_row_and_mass() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for dim in 1..=5 {
            for _ in 0..20 {
                let mu = random_unit_mu(&mut rng);
                let p = params(dim, mu);
                let eff = effective_operator(&p).unwrap();
                assert_abs_diff_eq!(eff.mass_extracted, p.mass(), epsilon = 1e-10);
                let expect00 = c(0.0, 1.0) / (2.0 * p.mass());
                for a in 0..dim {
                    for b in 0..dim {
                        let mab = &eff.m[a][b];
                        for j in 0..2 * dim {
                            let expect = if a == b && j == 0 { expect00 } else { c(0.0, 0.0) };
                            assert!(
                                (mab[(0, j)] - expect).norm() < ALG_TOL,
                                "d={dim} a={a} b={b} col={j}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn effective_operator_examples() {
        let eff = effective_operator(&params(1, c(0.0, -1.0))).unwrap();
        assert!((eff.m[0][0][(0, 0)] - c(0.0, 0.5)).norm() < ALG_TOL);
        let eff = effective_operator(&params(2, c(0.0, -1.0))).unwrap();
        assert!((eff.m[0][0][(0, 0)] - c(0.0, 0.25)).norm() < ALG_TOL);
        assert!((eff.m[1][1][(0, 0)] - c(0.0, 0.25)).norm() < ALG_TOL);
    }

    #[test]
    fn inverse_one_minus_mu_identity() {
        // 1/(1-mu) = 1/2 + i sin(theta) / (2 (1 - cos(theta)))
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let theta: f64 = rng.random_range(0.05..3.0);
            let mu = Complex64::from_polar(1.0, theta);
            let lhs = c(1.0, 0.0) / (c(1.0, 0.0) - mu);
            let rhs = c(0.5, theta.sin() / (2.0 * (1.0 - theta.cos())));
            assert!((lhs - rhs).norm() < ALG_TOL);
        }
    }

    #[test]
    fn reference_2d_and_3d_match() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        for _ in 0..10 {
            let mu = random_unit_mu(&mut rng);
            for dim in [2, 3] {
                let report = verify_reference(dim, mu).unwrap();
                assert!(
                    report.max_deviation() < ALG_TOL,
                    "d={dim} mu={mu} dev {report}"
                );
            }
        }
        let report =
            verify_reference(3, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).unwrap();
        assert!(report.max_deviation() < ALG_TOL);
    }

    #[test]
    fn reference_detects_transposed_convention() {
        // Swapping the channel order (axis-interleaved instead of +/- blocks)
        // must show up as a large deviation against the references.
        let mu = c(0.0, -1.0);
        let gold = reference_matrices_2d(mu);
        let perm = [0usize, 2, 1, 3];
        let cm = CollisionMatrix::from_raw(2, mu);
        let mut dev = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                dev = dev.max((cm.s()[(perm[i], perm[j])] - gold.s[(i, j)]).norm());
            }
        }
        assert!(dev > 0.1);
    }

    #[test]
    fn zeta_dynamics_2d_structure() {
        let p = params(2, c(0.0, -1.0));
        let (dxx, dyy, cross) = zeta_full_dynamics_2d(&p).unwrap();
        // m = 2: i/(2m) = i/4
        assert!((dxx[(0, 0)] - c(0.0, 0.25)).norm() < ALG_TOL);
        assert!((dxx[(1, 1)] - c(0.0, -0.25)).norm() < ALG_TOL);
        assert!(dxx[(2, 2)].norm() < ALG_TOL);
        assert!((dxx[(3, 0)] - c(0.0, 0.25)).norm() < ALG_TOL); // (-mu)^tau = 1 at tau = 0
        assert!((dyy[(0, 0)] - c(0.0, 0.25)).norm() < ALG_TOL);
        assert!((dyy[(2, 2)] - c(0.0, -0.25)).norm() < ALG_TOL);
        assert!(dyy[(1, 1)].norm() < ALG_TOL);
        assert!((cross[(1, 2)] - c(0.0, -0.25)).norm() < ALG_TOL);
        assert!((cross[(2, 1)] - c(0.0, -0.25)).norm() < ALG_TOL);
        // first rows vanish beyond column 0
        for m in [&dxx, &dyy, &cross] {
            for j in 1..4 {
                assert!(m[(0, j)].norm() < ALG_TOL);
            }
        }
    }

    #[test]
    fn g_support_matches_b_support() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for dim in 2..=4 {
            let mu = random_unit_mu(&mut rng);
            let basis = VelocityBasis::new(dim);
            let cm = CollisionMatrix::from_raw(dim, mu);
            let b = compute_b(&basis, cm.x()).unwrap();
            for ba in &b {
                let g = solve_g(ba, cm.d_diag()).unwrap();
                for ((i, j), z) in g.indexed_iter() {
                    if z.norm() > 0.0 {
                        assert!(ba[(i, j)] != 0.0, "G nonzero off B's support at ({i},{j})");
                    }
                }
            }
        }
    }
}
