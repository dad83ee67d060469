//! Many-particle dynamics two ways: the distinguishable-particle
//! tensor-product lattice-Boltzmann update, and exact state-vector emulation
//! of the second-quantized quantum lattice-gas automaton
//! `|psi(t + dt)> = A K |psi(t)>` on the occupation-number basis.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64;

use crate::algebra::VelocityBasis;
use crate::error::{QlgaError, Result};

/// Default refusal threshold for state-vector storage.
pub const DEFAULT_AMPLITUDE_BUDGET: usize = 1 << 26;

const UNITARITY_TOL: f64 = 1e-12;

/// Occupation-number layout: one bit per (site, channel) slot, site-major,
/// channel 0 as the least significant bit within a site.
#[derive(Debug, Clone, PartialEq)]
pub struct FockLayout {
    extents: Vec<usize>,
    channels: usize,
    velocities: Vec<Vec<i64>>,
}

impl FockLayout {
    /// Cartesian layout with `2 d` channels per site.
    pub fn cartesian(extents: &[usize]) -> Result<Self> {
        let dim = extents.len();
        let basis = VelocityBasis::new(dim);
        Self::new(extents, basis.vectors())
    }

    pub fn new(extents: &[usize], velocities: Vec<Vec<i64>>) -> Result<Self> {
        let nsites: usize = extents.iter().product();
        let channels = velocities.len();
        if nsites * channels > 64 {
            return Err(QlgaError::InvalidParams(format!(
                "{} occupation bits exceed the 64-bit pattern encoding",
                nsites * channels
            )));
        }
        Ok(Self {
            extents: extents.to_vec(),
            channels,
            velocities,
        })
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

    pub fn nbits(&self) -> usize {
        self.nsites() * self.channels
    }

    pub fn bit(&self, site: usize, channel: usize) -> usize {
        site * self.channels + channel
    }

    pub fn site_coords(&self, mut site: usize) -> Vec<usize> {
        let mut coords = vec![0; self.extents.len()];
        for a in (0..self.extents.len()).rev() {
            coords[a] = site % self.extents[a];
            site /= self.extents[a];
        }
        coords
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        let mut idx = 0;
        for (c, n) in coords.iter().zip(&self.extents) {
            idx = idx * n + c;
        }
        idx
    }

    /// Advect every occupied slot one step along its channel velocity with
    /// periodic wraparound; a pure permutation of basis patterns.
    pub fn advect_pattern(&self, pattern: u64) -> u64 {
        let mut out = 0u64;
        let mut rest = pattern;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let site = b / self.channels;
            let k = b % self.channels;
            let coords = self.site_coords(site);
            let mut dest = 0usize;
            for a in 0..self.extents.len() {
                let n = self.extents[a] as i64;
                let c = (coords[a] as i64 + self.velocities[k][a]).rem_euclid(n) as usize;
                dest = dest * self.extents[a] + c;
            }
            out |= 1 << self.bit(dest, k);
        }
        out
    }

    /// Human-readable label, per-site tuples of occupation bits with the
    /// highest channel first: `|(s2,s1),(s2,s1),...>`.
    pub fn format_pattern(&self, pattern: u64) -> String {
        let mut out = String::from("|");
        for site in 0..self.nsites() {
            if site > 0 {
                out.push(',');
            }
            out.push('(');
            for k in (0..self.channels).rev() {
                let bit = (pattern >> self.bit(site, k)) & 1;
                out.push(if bit == 1 { '1' } else { '0' });
                if k > 0 {
                    out.push(',');
                }
            }
            out.push(')');
        }
        out.push('>');
        out
    }

    /// Inverse of [`format_pattern`](Self::format_pattern).
    pub fn parse_pattern(&self, text: &str) -> Result<u64> {
        let inner = text
            .trim()
            .strip_prefix('|')
            .and_then(|s| s.strip_suffix('>'))
            .ok_or_else(|| QlgaError::InvalidField(format!("bad basis label: {text}")))?;
        let mut pattern = 0u64;
        let mut site = 0usize;
        for tuple in inner.split("),(") {
            let tuple = tuple.trim_matches(|c| c == '(' || c == ')' || c == ',');
            let bits: Vec<&str> = tuple.split(',').collect();
            if bits.len() != self.channels || site >= self.nsites() {
                return Err(QlgaError::InvalidField(format!("bad basis label: {text}")));
            }
            for (pos, b) in bits.iter().enumerate() {
                let k = self.channels - 1 - pos;
                match b.trim() {
                    "0" => {}
                    "1" => pattern |= 1 << self.bit(site, k),
                    other => {
                        return Err(QlgaError::InvalidField(format!(
                            "bad occupation value {other:?} in {text}"
                        )))
                    }
                }
            }
            site += 1;
        }
        if site != self.nsites() {
            return Err(QlgaError::InvalidField(format!(
                "label covers {site} of {} sites: {text}",
                self.nsites()
            )));
        }
        Ok(pattern)
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Many-body amplitude vector over the occupation-number basis, stored
/// either sector-restricted (fixed particle number) or over the full Fock
/// space for tiny lattices.
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    layout: FockLayout,
    patterns: Vec<u64>,
    index: HashMap<u64, u32>,
    coeffs: Vec<Complex64>,
    tau: u64,
}

impl ManyBodyState {
    /// Zero state over the fixed-particle-number sector.
    pub fn sector(layout: FockLayout, particles: u32) -> Result<Self> {
        Self::sector_with_budget(layout, particles, DEFAULT_AMPLITUDE_BUDGET)
    }

    pub fn sector_with_budget(layout: FockLayout, particles: u32, budget: usize) -> Result<Self> {
        let nbits = layout.nbits() as u64;
        let count = binomial(nbits, particles as u64);
        if count > budget as u128 {
            return Err(QlgaError::MemoryBudget {
                requested: count.min(usize::MAX as u128) as usize,
                budget,
            });
        }
        let mut patterns = Vec::with_capacity(count as usize);
        if particles == 0 {
            patterns.push(0);
        } else if u64::from(particles) <= nbits {
            // Gosper's hack: iterate bit patterns of fixed popcount in order.
            let mut v: u64 = if particles == 64 {
                u64::MAX
            } else {
                (1u64 << particles) - 1
            };
            let limit: u64 = if nbits == 64 { u64::MAX } else { (1u64 << nbits) - 1 };
            loop {
                patterns.push(v);
                let t = v | (v - 1);
                let Some(tp1) = t.checked_add(1) else { break };
                let next = tp1 | (((!t & tp1) - 1) >> (v.trailing_zeros() + 1));
                if next > limit {
                    break;
                }
                v = next;
            }
        }
        Self::from_patterns(layout, patterns)
    }

    /// Zero state over the full `2^nbits` Fock space.
    pub fn full(layout: FockLayout) -> Result<Self> {
        let nbits = layout.nbits();
        if 1usize << nbits.min(63) > DEFAULT_AMPLITUDE_BUDGET {
            return Err(QlgaError::MemoryBudget {
                requested: 1 << nbits.min(63),
                budget: DEFAULT_AMPLITUDE_BUDGET,
            });
        }
        let patterns = (0..1u64 << nbits).collect();
        Self::from_patterns(layout, patterns)
    }

    fn from_patterns(layout: FockLayout, patterns: Vec<u64>) -> Result<Self> {
        let index = patterns
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i as u32))
            .collect();
        let coeffs = vec![Complex64::new(0.0, 0.0); patterns.len()];
        Ok(Self {
            layout,
            patterns,
            index,
            coeffs,
            tau: 0,
        })
    }

    /// Basis state with unit amplitude on one occupation pattern.
    pub fn basis_state(layout: FockLayout, pattern: u64) -> Result<Self> {
        let particles = pattern.count_ones();
        let mut state = Self::sector(layout, particles)?;
        let idx = state.index[&pattern] as usize;
        state.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn layout(&self) -> &FockLayout {
        &self.layout
    }

    pub fn patterns(&self) -> &[u64] {
        &self.patterns
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn amplitude(&self, pattern: u64) -> Complex64 {
        self.index
            .get(&pattern)
            .map(|&i| self.coeffs[i as usize])
            .unwrap_or_default()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(QlgaError::InvalidField(format!("cannot normalize state with norm {n}")));
        }
        for z in &mut self.coeffs {
            *z /= n;
        }
        Ok(())
    }

    /// Expected particle number, `sum_s popcount(s) |C_s|^2`.
    pub fn particle_number(&self) -> f64 {
        self.patterns
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| p.count_ones() as f64 * c.norm_sqr())
            .sum()
    }

    /// Advection `A`: permute basis patterns along the channel velocities.
    pub fn advect(&mut self) {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for (i, &p) in self.patterns.iter().enumerate() {
            let dest = self.layout.advect_pattern(p);
            out[self.index[&dest] as usize] = self.coeffs[i];
        }
        self.coeffs = out;
    }

    /// Collision `K = T x T x ... x T`, applied site by site without
    /// materializing the full matrix.
    pub fn collide(&mut self, t: &SiteCollisionT) -> Result<()> {
        if t.channels != self.layout.channels {
            return Err(QlgaError::InvalidField(format!(
                "collision matrix is for {} channels, layout has {}",
                t.channels, self.layout.channels
            )));
        }
        let m = self.layout.channels;
        let local_dim = 1usize << m;
        let mask = (local_dim - 1) as u64;
        // sparse columns: for each local pattern, the nonzero (target, value)
        let cols: Vec<Vec<(u64, Complex64)>> = (0..local_dim)
            .map(|lo| {
                (0..local_dim)
                    .filter(|&l2| t.matrix[l2 * local_dim + lo].norm() > 0.0)
                    .map(|l2| (l2 as u64, t.matrix[l2 * local_dim + lo]))
                    .collect()
            })
            .collect();

        let mut buf = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for site in 0..self.layout.nsites() {
            let shift = (site * m) as u32;
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (i, &p) in self.patterns.iter().enumerate() {
                let c = self.coeffs[i];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let lo = ((p >> shift) & mask) as usize;
                let base = p & !(mask << shift);
                for &(l2, v) in &cols[lo] {
                    let dest = base | (l2 << shift);
                    buf[self.index[&dest] as usize] += v * c;
                }
            }
            std::mem::swap(&mut self.coeffs, &mut buf);
        }
        Ok(())
    }

    /// Diagonal pair-potential phase: each coefficient is multiplied by
    /// `exp(-i eps^2 sum V(x_a, x_b))` over unordered pairs of occupied
    /// slots (slots at the same site contribute `V(x, x)`).
    pub fn apply_pair_potential(&mut self, u: &PairPotentialU) {
        let nsites = u.nsites;
        for (i, &p) in self.patterns.iter().enumerate() {
            let mut sites = Vec::with_capacity(p.count_ones() as usize);
            let mut rest = p;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                sites.push(b / self.layout.channels);
            }
            let mut sum = 0.0;
            for a in 0..sites.len() {
                for b in a + 1..sites.len() {
                    sum += u.v[sites[a] * nsites + sites[b]];
                }
            }
            if sum != 0.0 {
                self.coeffs[i] *= Complex64::from_polar(1.0, -u.epsilon * u.epsilon * sum);
            }
        }
    }

    /// One automaton step: collide, optional pair potential, then advect.
    pub fn qlga_step(&mut self, t: &SiteCollisionT, u: Option<&PairPotentialU>) -> Result<()> {
        self.collide(t)?;
        if let Some(u) = u {
            self.apply_pair_potential(u);
        }
        self.advect();
        self.tau += 1;
        let norm = self.norm_sq();
        if !norm.is_finite() {
            return Err(QlgaError::NonFinite {
                tau: self.tau,
                context: format!("many-body norm^2 = {norm}"),
            });
        }
        Ok(())
    }

    /// Probability that at least one occupied slot lies in the given sites.
    pub fn occupation_probability(&self, region: &[usize]) -> f64 {
        let mut mask = 0u64;
        let chan_mask = (1u64 << self.layout.channels) - 1;
        for &site in region {
            mask |= chan_mask << (site * self.layout.channels);
        }
        let empty: f64 = self
            .patterns
            .iter()
            .zip(&self.coeffs)
            .filter(|(p, _)| *p & mask == 0)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        (1.0 - empty).clamp(0.0, 1.0)
    }

    /// Expected occupation of each (site, channel) slot.
    pub fn marginal_density(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.nbits()];
        for (p, c) in self.patterns.iter().zip(&self.coeffs) {
            let w = c.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut rest = *p;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                out[b] += w;
            }
        }
        out
    }

    /// Density marginals as CSV, one row per (site, channel).
    pub fn write_density_csv(&self, w: &mut impl std::io::Write) -> Result<()> {
        let dim = self.layout.extents.len();
        for a in 0..dim {
            write!(w, "x{a},")?;
        }
        writeln!(w, "k,density")?;
        let density = self.marginal_density();
        for site in 0..self.layout.nsites() {
            let coords = self.layout.site_coords(site);
            for k in 0..self.layout.channels {
                for &c in &coords {
                    write!(w, "{c},")?;
                }
                writeln!(w, "{k},{:.16e}", density[self.layout.bit(site, k)])?;
            }
        }
        Ok(())
    }
}

/// The per-site collision matrix `T`, block diagonal in particle number.
#[derive(Debug, Clone)]
pub struct SiteCollisionT {
    channels: usize,
    matrix: Vec<Complex64>, // 2^m x 2^m, row-major
}

impl SiteCollisionT {
    /// The 1D form: `diag([1], [[a,b],[b,a]], [beta])` on the local basis
    /// `|(0,0)>, |(0,1)>, |(1,0)>, |(1,1)>` (global phase fixed to alpha = 1).
    pub fn one_dim(a: Complex64, b: Complex64, beta: Complex64) -> Result<Self> {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let matrix = vec![
            one, z, z, z, //
            z, a, b, z, //
            z, b, a, z, //
            z, z, z, beta,
        ];
        let t = Self { channels: 2, matrix };
        t.validate()?;
        Ok(t)
    }

    /// Lift a `2d x 2d` single-particle collision matrix into `T`: vacuum
    /// fixed, single-particle block equal to `S` on the one-hot local
    /// patterns, multi-particle blocks the identity by default.
    pub fn from_single_particle(s: &Array2<Complex64>) -> Result<Self> {
        let channels = s.nrows();
        if s.ncols() != channels {
            return Err(QlgaError::InvalidField("collision matrix must be square".into()));
        }
        let dim = 1usize << channels;
        let mut matrix = vec![Complex64::new(0.0, 0.0); dim * dim];
        for p in 0..dim {
            matrix[p * dim + p] = Complex64::new(1.0, 0.0);
        }
        for i in 0..channels {
            for j in 0..channels {
                let (pi, pj) = (1usize << i, 1usize << j);
                matrix[pi * dim + pj] = s[(i, j)];
            }
        }
        let t = Self { channels, matrix };
        t.validate()?;
        Ok(t)
    }

    /// Set the diagonal phase of a multi-particle local pattern; these
    /// components are unconstrained by the single-particle dynamics.
    pub fn set_block_phase(&mut self, local_pattern: u64, phase: Complex64) -> Result<()> {
        if local_pattern.count_ones() < 2 {
            return Err(QlgaError::InvalidField(
                "only multi-particle local patterns take free phases".into(),
            ));
        }
        let dim = 1usize << self.channels;
        if local_pattern as usize >= dim {
            return Err(QlgaError::InvalidField(format!(
                "local pattern {local_pattern} out of range for {} channels",
                self.channels
            )));
        }
        let p = local_pattern as usize;
        self.matrix[p * dim + p] = phase;
        self.validate()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    /// The single-particle block on the one-hot local patterns.
    pub fn single_particle_block(&self) -> Array2<Complex64> {
        let dim = 1usize << self.channels;
        Array2::from_shape_fn((self.channels, self.channels), |(i, j)| {
            self.matrix[(1usize << i) * dim + (1usize << j)]
        })
    }

    /// Unitarity and particle-number conservation at working tolerance.
    pub fn validate(&self) -> Result<()> {
        let dim = 1usize << self.channels;
        for i in 0..dim {
            for j in 0..dim {
                if i != j
                    && (i as u64).count_ones() != (j as u64).count_ones()
                    && self.matrix[i * dim + j].norm() > UNITARITY_TOL
                {
                    return Err(QlgaError::InvalidField(format!(
                        "T mixes particle-number sectors at ({i},{j})"
                    )));
                }
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                let dot: Complex64 = (0..dim)
                    .map(|k| self.matrix[i * dim + k] * self.matrix[j * dim + k].conj())
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).norm() > UNITARITY_TOL {
                    return Err(QlgaError::InvalidField(format!(
                        "T is not unitary: row product ({i},{j}) = {dot}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Symmetric interparticle potential tabulated over site pairs.
#[derive(Debug, Clone)]
pub struct PairPotentialU {
    nsites: usize,
    epsilon: f64,
    v: Vec<f64>,
}

impl PairPotentialU {
    /// Sample `f` at unit-box coordinate pairs; `f` must be symmetric.
    pub fn from_fn(
        extents: &[usize],
        epsilon: f64,
        f: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<Self> {
        let layout = FockLayout::new(extents, vec![vec![0; extents.len()]])?;
        let nsites = layout.nsites();
        let coord = |site: usize| -> Vec<f64> {
            layout
                .site_coords(site)
                .iter()
                .zip(extents)
                .map(|(&c, &n)| c as f64 / n as f64)
                .collect()
        };
        let mut v = vec![0.0; nsites * nsites];
        for x in 0..nsites {
            for y in 0..nsites {
                v[x * nsites + y] = f(&coord(x), &coord(y));
            }
        }
        Self::from_values(nsites, epsilon, v)
    }

    pub fn constant(extents: &[usize], epsilon: f64, v0: f64) -> Result<Self> {
        let nsites: usize = extents.iter().product();
        Self::from_values(nsites, epsilon, vec![v0; nsites * nsites])
    }

    pub fn from_values(nsites: usize, epsilon: f64, v: Vec<f64>) -> Result<Self> {
        if v.len() != nsites * nsites {
            return Err(QlgaError::InvalidField(format!(
                "pair potential table has {} entries for {nsites} sites",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(QlgaError::InvalidField("pair potential has non-finite values".into()));
        }
        for x in 0..nsites {
            for y in 0..x {
                if (v[x * nsites + y] - v[y * nsites + x]).abs() > 1e-12 {
                    return Err(QlgaError::InvalidField(format!(
                        "pair potential is not symmetric at sites ({x},{y})"
                    )));
                }
            }
        }
        Ok(Self { nsites, epsilon, v })
    }
}

/// Two distinguishable particles on a 1D periodic lattice, amplitudes
/// indexed by `(x, y, i, k)` with the direction pair flattened i-major.
#[derive(Debug, Clone)]
pub struct TwoParticleField {
    n: usize,
    amps: Vec<Complex64>,
    tau: u64,
}

impl TwoParticleField {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            amps: vec![Complex64::new(0.0, 0.0); n * n * 4],
            tau: 0,
        }
    }

    /// Product of two single-particle channel fields.
    pub fn product(n: usize, a: &[Complex64], b: &[Complex64]) -> Self {
        let mut f = Self::zeros(n);
        for x in 0..n {
            for y in 0..n {
                for i in 0..2 {
                    for k in 0..2 {
                        f.amps[(x * n + y) * 4 + i * 2 + k] = a[x * 2 + i] * b[y * 2 + k];
                    }
                }
            }
        }
        f
    }

    pub fn sites(&self) -> usize {
        self.n
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

    pub fn get(&self, x: usize, y: usize, i: usize, k: usize) -> Complex64 {
        self.amps[(x * self.n + y) * 4 + i * 2 + k]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Swap both the particle coordinates and the direction indices.
    pub fn exchanged(&self) -> Self {
        let mut out = Self::zeros(self.n);
        out.tau = self.tau;
        for x in 0..self.n {
            for y in 0..self.n {
                for i in 0..2 {
                    for k in 0..2 {
                        out.amps[(y * self.n + x) * 4 + k * 2 + i] = self.get(x, y, i, k);
                    }
                }
            }
        }
        out
    }

    /// Marginal position density of one particle (0 or 1).
    pub fn marginal_density(&self, particle: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for x in 0..self.n {
            for y in 0..self.n {
                let w: f64 = (0..4)
                    .map(|c| self.amps[(x * self.n + y) * 4 + c].norm_sqr())
                    .sum();
                out[if particle == 0 { x } else { y }] += w;
            }
        }
        out
    }
}

/// One update of the two-particle tensor model: apply `S (x) S`, then
/// advect both coordinates.
pub fn tensor_two_particle_step(field: &mut TwoParticleField, s: &Array2<Complex64>) -> Result<()> {
    if s.nrows() != 2 || s.ncols() != 2 {
        return Err(QlgaError::InvalidField(
            "two-particle step needs the 1D (2x2) collision matrix".into(),
        ));
    }
    let n = field.n;
    let vel = [1i64, -1];
    // kron(S, S), i-major
    let mut ss = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                for j in 0..2 {
                    ss[i * 2 + k][l * 2 + j] = s[(i, l)] * s[(k, j)];
                }
            }
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); field.amps.len()];
    for x in 0..n {
        for y in 0..n {
            let base = (x * n + y) * 4;
            let input = [
                field.amps[base],
                field.amps[base + 1],
                field.amps[base + 2],
                field.amps[base + 3],
            ];
            for i in 0..2 {
                for k in 0..2 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..4 {
                        acc += ss[i * 2 + k][c] * input[c];
                    }
                    let xd = (x as i64 + vel[i]).rem_euclid(n as i64) as usize;
                    let yd = (y as i64 + vel[k]).rem_euclid(n as i64) as usize;
                    out[(xd * n + yd) * 4 + i * 2 + k] = acc;
                }
            }
        }
    }
    field.amps = out;
    field.tau += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{CollisionMatrix, ModelParams};
    use crate::engine::{delta_field, Stepper, WaveField};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn s_1d_minus_i() -> Array2<Complex64> {
        CollisionMatrix::from_raw(1, c(0.0, -1.0)).s().clone()
    }

    fn random_state(mut state: ManyBodyState, seed: u64) -> ManyBodyState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for z in state.coefficients_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        state.normalize().unwrap();
        state
    }

    #[test]
    fn layout_rejects_oversized_encoding() {
        assert!(FockLayout::cartesian(&[40]).is_err()); // 80 bits
        assert!(FockLayout::cartesian(&[32]).is_ok()); // 64 bits
    }

    #[test]
    fn advection_worked_example() {
        // 4-site 1D lattice: A|(0,1),(0,0),(0,0),(1,1)> = |(0,1),(0,1),(1,0),(0,0)>
        let layout = FockLayout::cartesian(&[4]).unwrap();
        let before = layout.parse_pattern("|(0,1),(0,0),(0,0),(1,1)>").unwrap();
        let after = layout.advect_pattern(before);
        assert_eq!(layout.format_pattern(after), "|(0,1),(0,1),(1,0),(0,0)>");
    }

    #[test]
    fn pattern_text_round_trip() {
        let layout = FockLayout::cartesian(&[4]).unwrap();
        for pattern in [0u64, 1, 0b1100_0001, 0xFF] {
            let text = layout.format_pattern(pattern);
            assert_eq!(layout.parse_pattern(&text).unwrap(), pattern);
        }
    }

    #[test]
    fn vacuum_is_fixed_point() {
        let layout = FockLayout::cartesian(&[6]).unwrap();
        let mut state = ManyBodyState::basis_state(layout, 0).unwrap();
        let t = SiteCollisionT::from_single_particle(&s_1d_minus_i()).unwrap();
        state.qlga_step(&t, None).unwrap();
        assert!((state.amplitude(0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn advect_preserves_norm_and_number_on_random_states() {
        let layout = FockLayout::cartesian(&[5]).unwrap();
        let mut state = random_state(ManyBodyState::sector(layout, 3).unwrap(), 1);
        let n0 = state.particle_number();
        state.advect();
        assert_abs_diff_eq!(state.norm_sq(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(state.particle_number(), n0, epsilon = 1e-13);
    }

    #[test]
    fn identity_collision_is_identity() {
        let layout = FockLayout::cartesian(&[4]).unwrap();
        let eye = Array2::from_diag_elem(2, c(1.0, 0.0));
        let t = SiteCollisionT::from_single_particle(&eye).unwrap();
        let state = random_state(ManyBodyState::sector(layout, 2).unwrap(), 2);
        let mut after = state.clone();
        after.collide(&t).unwrap();
        for (a, b) in state.coefficients().iter().zip(after.coefficients()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn collide_conserves_number_expectation() {
        let layout = FockLayout::cartesian(&[4]).unwrap();
        let mut full = random_state(ManyBodyState::full(layout).unwrap(), 3);
        let t = SiteCollisionT::from_single_particle(&s_1d_minus_i()).unwrap();
        let n0 = full.particle_number();
        full.collide(&t).unwrap();
        assert_abs_diff_eq!(full.particle_number(), n0, epsilon = 1e-12);
        assert_abs_diff_eq!(full.norm_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_dim_t_constraints_enforced() {
        // a b* + a* b must vanish
        assert!(SiteCollisionT::one_dim(c(0.6, 0.0), c(0.8, 0.0), c(1.0, 0.0)).is_err());
        let t = SiteCollisionT::one_dim(c(0.6, 0.0), c(0.0, 0.8), c(1.0, 0.0)).unwrap();
        assert_eq!(t.channels(), 2);
        // |beta| must be 1
        assert!(SiteCollisionT::one_dim(c(0.6, 0.0), c(0.0, 0.8), c(0.5, 0.0)).is_err());
        // phase update re-checks
        let s = s_1d_minus_i();
        let mut t = SiteCollisionT::from_single_particle(&s).unwrap();
        t.set_block_phase(0b11, Complex64::from_polar(1.0, 0.4)).unwrap();
        assert!(t.set_block_phase(0b11, c(0.3, 0.0)).is_err());
        assert!(t.set_block_phase(0b01, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn single_particle_sector_matches_engine() {
        let params = ModelParams::new(1, c(0.0, -1.0), 1.0).unwrap();
        let n = 8usize;
        let layout = FockLayout::cartesian(&[n]).unwrap();
        let t = SiteCollisionT::from_single_particle(&s_1d_minus_i()).unwrap();
        let mut stepper = Stepper::new(&params, &[n], None).unwrap();

        // random one-particle superposition, 100 steps
        let mut state = random_state(ManyBodyState::sector(layout.clone(), 1).unwrap(), 3);
        let mut field = WaveField::zeros(&[n], 2);
        for (i, &p) in state.patterns().iter().enumerate() {
            let b = p.trailing_zeros() as usize;
            field.set(b / 2, b % 2, state.coefficients()[i]);
        }
        for _ in 0..100 {
            state.qlga_step(&t, None).unwrap();
            stepper.step(&mut field).unwrap();
        }
        for (i, &p) in state.patterns().iter().enumerate() {
            let b = p.trailing_zeros() as usize;
            let engine_amp = field.get(b / 2, b % 2);
            assert!(
                (state.coefficients()[i] - engine_amp).norm() < 1e-12,
                "pattern {}",
                layout.format_pattern(p)
            );
        }
    }

    #[test]
    fn two_far_packets_evolve_independently_before_overlap() {
        // two localized particles on 12 sites with beta = 1: marginals match
        // the sum of independent single-particle runs while separated
        let n = 12usize;
        let params = ModelParams::new(1, c(0.0, -1.0), 1.0).unwrap();
        let layout = FockLayout::cartesian(&[n]).unwrap();
        let t = SiteCollisionT::from_single_particle(&s_1d_minus_i()).unwrap();

        // particle A at site 2 moving right-ish, particle B at site 8
        let pattern = (1u64 << layout.bit(2, 0)) | (1u64 << layout.bit(8, 0));
        let mut state = ManyBodyState::basis_state(layout.clone(), pattern).unwrap();

        let mut fa = delta_field(&[n], 2, &[2], 0);
        let mut fb = delta_field(&[n], 2, &[8], 0);
        let mut sa = Stepper::new(&params, &[n], None).unwrap();
        let mut sb = Stepper::new(&params, &[n], None).unwrap();

        let steps = 2; // packets stay well separated
        for _ in 0..steps {
            state.qlga_step(&t, None).unwrap();
            sa.step(&mut fa).unwrap();
            sb.step(&mut fb).unwrap();
        }
        let density = state.marginal_density();
        for site in 0..n {
            for k in 0..2 {
                let independent = fa.get(site, k).norm_sqr() + fb.get(site, k).norm_sqr();
                assert_abs_diff_eq!(
                    density[layout.bit(site, k)],
                    independent,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn pair_potential_two_particle_phase() {
        let n = 6usize;
        let eps = 1.0 / n as f64;
        let v0 = 2.5;
        let layout = FockLayout::cartesian(&[n]).unwrap();
        let u = PairPotentialU::constant(&[n], eps, v0).unwrap();
        let pattern = (1u64 << layout.bit(1, 0)) | (1u64 << layout.bit(4, 1));
        let mut state = ManyBodyState::basis_state(layout, pattern).unwrap();
        state.apply_pair_potential(&u);
        let expect = Complex64::from_polar(1.0, -eps * eps * v0);
        assert!((state.amplitude(pattern) - expect).norm() < 1e-14);
    }

    #[test]
    fn pair_potential_identity_on_single_particle() {
        let n = 5usize;
        let layout = FockLayout::cartesian(&[n]).unwrap();
        let u = PairPotentialU::constant(&[n], 0.2, 7.0).unwrap();
        let mut state = random_state(ManyBodyState::sector(layout, 1).unwrap(), 5);
        let before = state.coefficients().to_vec();
        state.apply_pair_potential(&u);
        for (a, b) in before.iter().zip(state.coefficients()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pair_potential_same_site_pair_counts() {
        let n = 4usize;
        let eps = 0.25;
        let layout = FockLayout::cartesian(&[n]).unwrap();
        let u = PairPotentialU::constant(&[n], eps, 1.0).unwrap();
        // both slots of site 2 occupied: one same-site pair
        let pattern = (1u64 << layout.bit(2, 0)) | (1u64 << layout.bit(2, 1));
        let mut state = ManyBodyState::basis_state(layout, pattern).unwrap();
        state.apply_pair_potential(&u);
        let expect = Complex64::from_polar(1.0, -eps * eps);
        assert!((state.amplitude(pattern) - expect).norm() < 1e-14);
    }

    #[test]
    fn diagonal_phase_operators_commute_exactly() {
        let n = 5usize;
        let layout = FockLayout::cartesian(&[n]).unwrap();
        let u1 = PairPotentialU::constant(&[n], 0.2, 3.0).unwrap();
        let u2 = PairPotentialU::from_fn(&[n], 0.2, |x, y| (x[0] - y[0]).abs()).unwrap();
        let state = random_state(ManyBodyState::sector(layout, 2).unwrap(), 7);
        let mut ab = state.clone();
        ab.apply_pair_potential(&u1);
        ab.apply_pair_potential(&u2);
        let mut ba = state.clone();
        ba.apply_pair_potential(&u2);
        ba.apply_pair_potential(&u1);
        for (x, y) in ab.coefficients().iter().zip(ba.coefficients()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn occupation_probability_examples() {
        let n = 6usize;
        let layout = FockLayout::cartesian(&[n]).unwrap();
        // whole lattice with one particle
        let mut state = random_state(ManyBodyState::sector(layout.clone(), 1).unwrap(), 9);
        let all: Vec<usize> = (0..n).collect();
        assert_abs_diff_eq!(state.occupation_probability(&all), 1.0, epsilon = 1e-12);
        // vacuum
        let vac = ManyBodyState::basis_state(layout.clone(), 0).unwrap();
        assert_eq!(vac.occupation_probability(&all), 0.0);
        // uniform superposition over sites (channel 0): region of j sites -> j/n
        for z in state.coefficients_mut() {
            *z = c(0.0, 0.0);
        }
        let amp = c(1.0 / (n as f64).sqrt(), 0.0);
        for site in 0..n {
            let p = 1u64 << layout.bit(site, 0);
            let idx = state.patterns().iter().position(|&q| q == p).unwrap();
            state.coefficients_mut()[idx] = amp;
        }
        for j in 0..=n {
            let region: Vec<usize> = (0..j).collect();
            assert_abs_diff_eq!(
                state.occupation_probability(&region),
                j as f64 / n as f64,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn qlga_step_norm_and_sector_stability() {
        let layout = FockLayout::cartesian(&[6]).unwrap();
        let t = SiteCollisionT::from_single_particle(&s_1d_minus_i()).unwrap();
        let u = PairPotentialU::constant(&[6], 1.0 / 6.0, 4.0).unwrap();
        let mut state = random_state(ManyBodyState::sector(layout, 2).unwrap(), 11);
        for _ in 0..50 {
            state.qlga_step(&t, Some(&u)).unwrap();
            assert_abs_diff_eq!(state.norm_sq(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(state.particle_number(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn memory_budget_enforced() {
        let layout = FockLayout::cartesian(&[30]).unwrap(); // 60 bits
        match ManyBodyState::sector_with_budget(layout, 5, 1 << 20) {
            Err(QlgaError::MemoryBudget { .. }) => {}
            other => panic!("expected memory budget refusal, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn tensor_product_state_stays_product() {
        let n = 10usize;
        let s = s_1d_minus_i();
        let params = ModelParams::new(1, c(0.0, -1.0), 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let mut fa = WaveField::zeros(&[n], 2);
        let mut fb = WaveField::zeros(&[n], 2);
        for z in fa.amplitudes_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        for z in fb.amplitudes_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        fa.normalize().unwrap();
        fb.normalize().unwrap();

        let mut two = TwoParticleField::product(n, fa.amplitudes(), fb.amplitudes());
        let mut sa = Stepper::new(&params, &[n], None).unwrap();
        let mut sb = Stepper::new(&params, &[n], None).unwrap();
        for _ in 0..25 {
            tensor_two_particle_step(&mut two, &s).unwrap();
            sa.step(&mut fa).unwrap();
            sb.step(&mut fb).unwrap();
        }
        let product = TwoParticleField::product(n, fa.amplitudes(), fb.amplitudes());
        for (a, b) in two.amplitudes().iter().zip(product.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn tensor_norm_conserved_long_run() {
        let n = 8usize;
        let s = s_1d_minus_i();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut f = TwoParticleField::zeros(n);
        for z in f.amplitudes_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let norm = f.norm_sq().sqrt();
        for z in f.amplitudes_mut() {
            *z /= norm;
        }
        for _ in 0..1000 {
            tensor_two_particle_step(&mut f, &s).unwrap();
        }
        assert_abs_diff_eq!(f.norm_sq(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn tensor_evolution_commutes_with_exchange() {
        let n = 9usize;
        let s = s_1d_minus_i();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let mut f = TwoParticleField::zeros(n);
        for z in f.amplitudes_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        // symmetrize
        let ex = f.exchanged();
        for (z, w) in f.amplitudes_mut().iter_mut().zip(ex.amplitudes()) {
            *z += w;
        }
        let norm = f.norm_sq().sqrt();
        for z in f.amplitudes_mut() {
            *z /= norm;
        }
        for _ in 0..30 {
            tensor_two_particle_step(&mut f, &s).unwrap();
        }
        let ex = f.exchanged();
        for (a, b) in f.amplitudes().iter().zip(ex.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
