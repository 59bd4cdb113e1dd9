//! Lattice geometry and spectral representation of mean-zero fields on the
//! torus `[-pi, pi]^2`.
//!
//! Fields are stored as complex amplitudes `c_k` against the orthonormal
//! exponentials `exp(i k.x) / (2 pi)`, one entry per admissible wave vector.
//! Real-valuedness is the Hermitian symmetry `c_{-k} = conj(c_k)`.
//!
//! The same data has a real coordinate system matching the sine/cosine basis
//! of the torus: for `k` in the upper half-lattice the coordinate is the
//! coefficient of `sqrt(2) sin(k.x) / (2 pi)`, for `k` in the lower half it is
//! the coefficient of `sqrt(2) cos(k.x) / (2 pi)`. Both bases are orthonormal
//! in `L^2`, so every norm below is a plain weighted coefficient sum.
//!
//! Vorticity uses the convention `psi = d_2 u_1 - d_1 u_2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonzero point of the integer lattice `Z^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector {
    pub k1: i32,
    pub k2: i32,
}

impl WaveVector {
    pub fn new(k1: i32, k2: i32) -> Result<Self> {
        if k1 == 0 && k2 == 0 {
            return Err(Error::Domain("wave vector (0,0) is excluded (zero-mean fields)".into()));
        }
        Ok(WaveVector { k1, k2 })
    }

    pub fn norm_sq(&self) -> i64 {
        let (a, b) = (self.k1 as i64, self.k2 as i64);
        a * a + b * b
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Membership in the half-lattice `{k2 > 0} U {k2 = 0, k1 > 0}` carrying the sine modes.
    pub fn is_upper(&self) -> bool {
        self.k2 > 0 || (self.k2 == 0 && self.k1 > 0)
    }

    pub fn neg(&self) -> Self {
        WaveVector { k1: -self.k1, k2: -self.k2 }
    }

    fn sup_norm(&self) -> i32 {
        self.k1.abs().max(self.k2.abs())
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

/// Stokes eigenvalue `|k|^2` of the mode `k`.
pub fn eigenvalue(k: WaveVector) -> Result<f64> {
    if k.k1 == 0 && k.k2 == 0 {
        return Err(Error::Domain("eigenvalue requested for the excluded mode (0,0)".into()));
    }
    Ok(k.norm_sq() as f64)
}

/// Truncated lattice `{k : 0 < max(|k1|,|k2|) <= K}` in spectral order.
#[derive(Debug, PartialEq)]
pub struct SpectralGrid {
    cutoff: usize,
    modes: Vec<WaveVector>,
    eigenvalues: Vec<f64>,
    neg_index: Vec<usize>,
    dealias: Vec<bool>,
    // dense (2K+1)^2 table, usize::MAX for (0,0)
    lookup: Vec<usize>,
}

/// Builds the grid for cutoff `K >= 2`.
pub fn make_grid(cutoff: usize) -> Result<Arc<SpectralGrid>> {
    SpectralGrid::new(cutoff).map(Arc::new)
}

impl SpectralGrid {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::Config(format!("grid cutoff must be >= 2, got {cutoff}")));
        }
        if cutoff > 4096 {
            return Err(Error::Config(format!("grid cutoff {cutoff} is unreasonably large")));
        }
        let k = cutoff as i32;
        let mut modes = Vec::with_capacity((2 * cutoff + 1).pow(2) - 1);
        for k1 in -k..=k {
            for k2 in -k..=k {
                if k1 != 0 || k2 != 0 {
                    modes.push(WaveVector { k1, k2 });
                }
            }
        }
        modes.sort_by_key(|m| (m.norm_sq(), m.k1, m.k2));

        let side = 2 * cutoff + 1;
        let mut lookup = vec![usize::MAX; side * side];
        for (i, m) in modes.iter().enumerate() {
            lookup[Self::slot(cutoff, *m)] = i;
        }
        let neg_index = modes.iter().map(|m| lookup[Self::slot(cutoff, m.neg())]).collect();
        let dealias_cutoff = (2 * k) / 3;
        let dealias = modes.iter().map(|m| m.sup_norm() <= dealias_cutoff).collect();
        let eigenvalues = modes.iter().map(|m| m.norm_sq() as f64).collect();
        Ok(SpectralGrid { cutoff, modes, eigenvalues, neg_index, dealias, lookup })
    }

    fn slot(cutoff: usize, k: WaveVector) -> usize {
        let side = 2 * cutoff as i32 + 1;
        ((k.k1 + cutoff as i32) * side + (k.k2 + cutoff as i32)) as usize
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Largest sup-norm kept by the 2/3 dealiasing rule.
    pub fn dealias_cutoff(&self) -> usize {
        (2 * self.cutoff) / 3
    }

    /// Number of modes, `(2K+1)^2 - 1`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[WaveVector] {
        &self.modes
    }

    pub fn mode(&self, index: usize) -> WaveVector {
        self.modes[index]
    }

    /// Eigenvalue of the mode stored at zero-based `index`.
    pub fn eigenvalue_at(&self, index: usize) -> f64 {
        self.eigenvalues[index]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn neg_index(&self, index: usize) -> usize {
        self.neg_index[index]
    }

    pub fn is_dealiased(&self, index: usize) -> bool {
        self.dealias[index]
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    pub fn index_of(&self, k: WaveVector) -> Option<usize> {
        if k.sup_norm() > self.cutoff as i32 {
            return None;
        }
        match self.lookup[Self::slot(self.cutoff, k)] {
            usize::MAX => None,
            i => Some(i),
        }
    }

    /// `lambda_n` for the one-based spectral index `n`.
    pub fn ordered_eigenvalue(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.len() {
            return Err(Error::Domain(format!(
                "eigenvalue index {n} outside 1..={}",
                self.len()
            )));
        }
        Ok(self.eigenvalues[n - 1])
    }

    /// Largest eigenvalue on the grid, `2 K^2`.
    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("grid is never empty")
    }
}

/// `lambda_n` of `grid` for the one-based index `n`.
pub fn ordered_eigenvalue(n: usize, grid: &SpectralGrid) -> Result<f64> {
    grid.ordered_eigenvalue(n)
}

/// Function spaces of the scale `D(A^alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Space {
    /// `H = D(A^0)`, the velocity `L^2` norm.
    H,
    /// `V = D(A^{1/2})`.
    V,
    /// `D(A^alpha)` for arbitrary real `alpha`; `alpha = -1/2` is `V'`.
    Frac(f64),
}

impl Space {
    pub fn alpha(&self) -> f64 {
        match *self {
            Space::H => 0.0,
            Space::V => 0.5,
            Space::Frac(a) => a,
        }
    }

    /// Weight of `|psi_k|^2` for a mode of eigenvalue `lambda`: `|k|^{4 alpha - 2}`.
    fn vorticity_weight(&self, lambda: f64) -> f64 {
        match *self {
            Space::H => 1.0 / lambda,
            Space::V => 1.0,
            Space::Frac(a) => lambda.powf(2.0 * a - 1.0),
        }
    }

    /// Weight of `|u_k|^2` for a mode of eigenvalue `lambda`: `|k|^{4 alpha}`.
    fn velocity_weight(&self, lambda: f64) -> f64 {
        match *self {
            Space::H => 1.0,
            Space::V => lambda,
            Space::Frac(a) => lambda.powf(2.0 * a),
        }
    }
}

fn same_grid(a: &SpectralGrid, b: &SpectralGrid) -> Result<()> {
    if a.cutoff != b.cutoff {
        return Err(Error::Domain(format!(
            "grid mismatch: cutoff {} vs {}",
            a.cutoff, b.cutoff
        )));
    }
    Ok(())
}

/// Scalar vorticity, stored as truncated Fourier amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct VorticityField {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
}

impl VorticityField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        VorticityField { grid: Arc::clone(grid), coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Wraps raw amplitudes, rejecting anything that is not exactly Hermitian.
    pub fn from_coeffs(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        let field = VorticityField { grid: Arc::clone(grid), coeffs };
        if !field.is_hermitian(0.0) {
            return Err(Error::Domain("coefficients violate Hermitian symmetry".into()));
        }
        Ok(field)
    }

    pub(crate) fn from_coeffs_unchecked(grid: &Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        VorticityField { grid: Arc::clone(grid), coeffs }
    }

    /// Builds a field from its real (sine/cosine) vorticity coordinates.
    pub fn from_real_coords(grid: &Arc<SpectralGrid>, coords: &[f64]) -> Result<Self> {
        if coords.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} real coordinates, got {}",
                grid.len(),
                coords.len()
            )));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (i, m) in grid.modes().iter().enumerate() {
            if m.is_upper() {
                let j = grid.neg_index(i);
                let c = Complex64::new(coords[j], -coords[i]) * std::f64::consts::FRAC_1_SQRT_2;
                coeffs[i] = c;
                coeffs[j] = c.conj();
            }
        }
        Ok(VorticityField { grid: Arc::clone(grid), coeffs })
    }

    /// Builds a field from its coordinates along the orthonormal velocity
    /// eigenbasis `e_n` of `H` (coordinate `n` is the vorticity coordinate
    /// divided by `|k_n|`).
    pub fn from_h_coords(grid: &Arc<SpectralGrid>, coords: &[f64]) -> Result<Self> {
        if coords.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} H coordinates, got {}",
                grid.len(),
                coords.len()
            )));
        }
        let scaled: Vec<f64> =
            coords.iter().zip(grid.eigenvalues()).map(|(c, l)| c * l.sqrt()).collect();
        Self::from_real_coords(grid, &scaled)
    }

    /// Gaussian field whose `H` coordinates have standard deviation
    /// `amplitude * lambda^{-decay/2}`.
    pub fn random<R: Rng + ?Sized>(
        grid: &Arc<SpectralGrid>,
        rng: &mut R,
        amplitude: f64,
        decay: f64,
    ) -> Self {
        let coords: Vec<f64> = grid
            .eigenvalues()
            .iter()
            .map(|&l| {
                let z: f64 = rng.sample(StandardNormal);
                amplitude * l.powf(-0.5 * decay) * z
            })
            .collect();
        Self::from_h_coords(grid, &coords).expect("length matches grid")
    }

    /// Field equal to `value` times the unit `H` eigenvector of mode `k`.
    pub fn basis_vector(grid: &Arc<SpectralGrid>, k: WaveVector, value: f64) -> Result<Self> {
        let i = grid
            .index_of(k)
            .ok_or_else(|| Error::Domain(format!("mode {k} is not on the grid")))?;
        let mut h = vec![0.0; grid.len()];
        h[i] = value;
        Self::from_h_coords(grid, &h)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, k: WaveVector) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    /// Real vorticity coordinate of the mode at `index`.
    pub fn real_coord(&self, index: usize) -> f64 {
        let c = self.coeffs[index];
        if self.grid.mode(index).is_upper() {
            -std::f64::consts::SQRT_2 * c.im
        } else {
            std::f64::consts::SQRT_2 * c.re
        }
    }

    pub fn real_coords(&self) -> Vec<f64> {
        (0..self.coeffs.len()).map(|i| self.real_coord(i)).collect()
    }

    /// Coordinate along the velocity eigenvector `e_{index+1}`.
    pub fn h_coord(&self, index: usize) -> f64 {
        self.real_coord(index) / self.grid.eigenvalue_at(index).sqrt()
    }

    pub fn h_coords(&self) -> Vec<f64> {
        (0..self.coeffs.len()).map(|i| self.h_coord(i)).collect()
    }

    /// Adds `value` to the real vorticity coordinate of the mode at `index`.
    pub fn add_real_coord(&mut self, index: usize, value: f64) {
        let j = self.grid.neg_index(index);
        let s = value * std::f64::consts::FRAC_1_SQRT_2;
        if self.grid.mode(index).is_upper() {
            self.coeffs[index].im -= s;
            self.coeffs[j].im += s;
        } else {
            self.coeffs[index].re += s;
            self.coeffs[j].re += s;
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.coeffs.iter().enumerate().all(|(i, c)| {
            let d = *c - self.coeffs[self.grid.neg_index(i)].conj();
            d.norm() <= tol
        })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn norm_sq(&self, space: Space) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.eigenvalues())
            .map(|(c, &l)| space.vorticity_weight(l) * c.norm_sqr())
            .sum()
    }

    /// Norm of the associated velocity `biot_savart(self)` in `space`.
    pub fn norm(&self, space: Space) -> f64 {
        self.norm_sq(space).sqrt()
    }

    /// Scalar product of the associated velocities in `space`.
    pub fn inner(&self, other: &Self, space: Space) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(self.grid.eigenvalues())
            .map(|((a, b), &l)| space.vorticity_weight(l) * (a.conj() * b).re)
            .sum())
    }

    /// Plain `L^2` norm squared of the vorticity (enstrophy), equal to `|u|_V^2`.
    pub fn enstrophy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) -> Result<()> {
        same_grid(&self.grid, &x.grid)?;
        for (c, d) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += d * a;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    /// Copy with every mode outside the 2/3 dealiasing set zeroed.
    pub fn dealiased(&self) -> Self {
        let mut out = self.clone();
        for (c, &keep) in out.coeffs.iter_mut().zip(self.grid.dealias_mask()) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `P_N`: keeps the real coordinates of the first `n` ordered modes.
    pub fn project_low(&self, n: usize) -> Result<Self> {
        check_projection_range(&self.grid, n)?;
        let mut out = self.clone();
        // dropping the sine (cosine) coordinate of k clears Im (Re) of c_k and c_{-k}
        for i in n..self.grid.len() {
            let j = self.grid.neg_index(i);
            if self.grid.mode(i).is_upper() {
                out.coeffs[i].im = 0.0;
                out.coeffs[j].im = 0.0;
            } else {
                out.coeffs[i].re = 0.0;
                out.coeffs[j].re = 0.0;
            }
        }
        Ok(out)
    }
}

fn check_projection_range(grid: &SpectralGrid, n: usize) -> Result<()> {
    if n > grid.len() {
        return Err(Error::Domain(format!(
            "projection rank {n} exceeds mode count {}",
            grid.len()
        )));
    }
    Ok(())
}

/// Divergence-free velocity, two complex amplitudes per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<[Complex64; 2]>,
}

impl VelocityField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        let z = Complex64::new(0.0, 0.0);
        VelocityField { grid: Arc::clone(grid), coeffs: vec![[z, z]; grid.len()] }
    }

    /// Leray projection of arbitrary (Hermitian) vector amplitudes onto the
    /// divergence-free subspace: `u - k (k.u) / |k|^2`.
    pub fn leray(grid: &Arc<SpectralGrid>, raw: Vec<[Complex64; 2]>) -> Result<Self> {
        if raw.len() != grid.len() {
            return Err(Error::Domain(format!(
                "expected {} velocity coefficients, got {}",
                grid.len(),
                raw.len()
            )));
        }
        let coeffs = raw
            .into_iter()
            .zip(grid.modes())
            .map(|([a, b], m)| {
                let (k1, k2) = (m.k1 as f64, m.k2 as f64);
                let dot = (a * k1 + b * k2) / m.norm_sq() as f64;
                [a - dot * k1, b - dot * k2]
            })
            .collect();
        Ok(VelocityField { grid: Arc::clone(grid), coeffs })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[[Complex64; 2]] {
        &self.coeffs
    }

    /// `max_k |k . u_k|`, zero up to round-off for every constructed field.
    pub fn divergence_residual(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.modes())
            .map(|([a, b], m)| (a * m.k1 as f64 + b * m.k2 as f64).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.coeffs.iter().enumerate().all(|(i, [a, b])| {
            let [c, d] = self.coeffs[self.grid.neg_index(i)];
            (a - c.conj()).norm() <= tol && (b - d.conj()).norm() <= tol
        })
    }

    pub fn norm_sq(&self, space: Space) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.eigenvalues())
            .map(|([a, b], &l)| space.velocity_weight(l) * (a.norm_sqr() + b.norm_sqr()))
            .sum()
    }

    pub fn norm(&self, space: Space) -> f64 {
        self.norm_sq(space).sqrt()
    }

    pub fn inner(&self, other: &Self, space: Space) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .zip(self.grid.eigenvalues())
            .map(|(([a, b], [c, d]), &l)| {
                space.velocity_weight(l) * ((a.conj() * c).re + (b.conj() * d).re)
            })
            .sum())
    }

    pub fn scaled(&self, s: f64) -> Self {
        VelocityField {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().map(|[a, b]| [a * s, b * s]).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(VelocityField {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|([a, b], [c, d])| [a + c, b + d]).collect(),
        })
    }

    pub fn dealiased(&self) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let mut out = self.clone();
        for (c, &keep) in out.coeffs.iter_mut().zip(self.grid.dealias_mask()) {
            if !keep {
                *c = [z, z];
            }
        }
        out
    }

    /// `P_N` on velocities; acts through the vorticity since curl is diagonal.
    pub fn project_low(&self, n: usize) -> Result<Self> {
        Ok(biot_savart(&curl(self).project_low(n)?))
    }
}

/// Velocity with vorticity `psi`: `u_k = (-i k2, i k1) psi_k / |k|^2`.
pub fn biot_savart(psi: &VorticityField) -> VelocityField {
    let coeffs = psi
        .coeffs
        .iter()
        .zip(psi.grid.modes())
        .map(|(c, m)| {
            let s = c / m.norm_sq() as f64;
            [Complex64::new(0.0, -(m.k2 as f64)) * s, Complex64::new(0.0, m.k1 as f64) * s]
        })
        .collect();
    VelocityField { grid: Arc::clone(&psi.grid), coeffs }
}

/// `psi = d_2 u_1 - d_1 u_2` in spectral form.
pub fn curl(u: &VelocityField) -> VorticityField {
    let coeffs = u
        .coeffs
        .iter()
        .zip(u.grid.modes())
        .map(|([a, b], m)| {
            Complex64::new(0.0, m.k2 as f64) * a - Complex64::new(0.0, m.k1 as f64) * b
        })
        .collect();
    VorticityField { grid: Arc::clone(&u.grid), coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(k: usize) -> Arc<SpectralGrid> {
        make_grid(k).unwrap()
    }

    fn wv(a: i32, b: i32) -> WaveVector {
        WaveVector::new(a, b).unwrap()
    }

    // Brute-force enumeration of the box, independent of the grid's sort.
    fn enumerate_eigs(k: i32) -> Vec<i64> {
        let mut v = Vec::new();
        for a in -k..=k {
            for b in -k..=k {
                if a != 0 || b != 0 {
                    v.push((a * a + b * b) as i64);
                }
            }
        }
        v.sort();
        v
    }

    #[test]
    fn grid_sizes_and_first_shells() {
        let g = grid(2);
        assert_eq!(g.len(), 24);
        assert_eq!(g.ordered_eigenvalue(1).unwrap(), 1.0);
        let eigs: Vec<i64> = g.modes().iter().map(|m| m.norm_sq()).collect();
        assert_eq!(eigs, enumerate_eigs(2));
        assert_eq!(&eigs[..8], &[1, 1, 1, 1, 2, 2, 2, 2]);
        assert_eq!(g.ordered_eigenvalue(4).unwrap(), 1.0);
        assert_eq!(g.ordered_eigenvalue(5).unwrap(), 2.0);
        assert!(g.ordered_eigenvalue(0).is_err());
        assert!(g.ordered_eigenvalue(25).is_err());
        assert!(make_grid(1).is_err());
    }

    #[test]
    fn ordering_ties_are_lexicographic_and_closed_under_negation() {
        let g = grid(5);
        for w in g.modes().windows(2) {
            assert!((w[0].norm_sq(), w[0].k1, w[0].k2) < (w[1].norm_sq(), w[1].k1, w[1].k2));
        }
        assert_eq!(&g.modes()[..4], &[wv(-1, 0), wv(0, -1), wv(0, 1), wv(1, 0)]);
        for (i, m) in g.modes().iter().enumerate() {
            assert_eq!(g.mode(g.neg_index(i)), m.neg());
            assert_eq!(g.index_of(*m), Some(i));
        }
        assert_eq!(g.dealias_cutoff(), 3);
        assert_eq!(g.dealias_mask().iter().filter(|&&d| d).count(), 48);
    }

    #[test]
    fn eigenvalue_formula() {
        assert_eq!(eigenvalue(wv(1, 0)).unwrap(), 1.0);
        assert_eq!(eigenvalue(wv(1, 1)).unwrap(), 2.0);
        assert_eq!(eigenvalue(wv(2, 1)).unwrap(), 5.0);
        assert!(eigenvalue(WaveVector { k1: 0, k2: 0 }).is_err());
        assert!(WaveVector::new(0, 0).is_err());
    }

    #[test]
    fn projection_examples() {
        let g = grid(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = VorticityField::random(&g, &mut rng, 1.0, 0.0);
        let p = x.project_low(7).unwrap();
        assert_eq!(p.project_low(7).unwrap(), p);
        assert_eq!(x.project_low(g.len()).unwrap(), x);
        assert!(x.project_low(g.len() + 1).is_err());

        let mut shell2 = vec![0.0; g.len()];
        for (i, m) in g.modes().iter().enumerate() {
            if m.norm_sq() == 2 {
                shell2[i] = 1.0 + i as f64;
            }
        }
        let y = VorticityField::from_h_coords(&g, &shell2).unwrap();
        assert_eq!(y.project_low(4).unwrap().norm(Space::H), 0.0);
    }

    #[test]
    fn biot_savart_single_mode_and_zero() {
        let g = grid(4);
        assert_eq!(biot_savart(&VorticityField::zeros(&g)), VelocityField::zeros(&g));
        let mut coords = vec![0.0; g.len()];
        coords[g.index_of(wv(1, 0)).unwrap()] = 2.5;
        let psi = VorticityField::from_real_coords(&g, &coords).unwrap();
        let u = biot_savart(&psi);
        // |u|_H = |psi|_L2 / |k| with |k| = 1
        assert!((u.norm(Space::H) - psi.enstrophy().sqrt()).abs() < 1e-15);
        assert_eq!(curl(&u), psi);
    }

    #[test]
    fn shear_flow_has_single_mode_vorticity() {
        // u = (cos(2 x2), 0): u1 has amplitudes 2 pi / 2 at k = (0, +-2).
        let g = grid(4);
        let z = Complex64::new(0.0, 0.0);
        let mut raw = vec![[z, z]; g.len()];
        let amp = Complex64::new(std::f64::consts::PI, 0.0);
        raw[g.index_of(wv(0, 2)).unwrap()][0] = amp;
        raw[g.index_of(wv(0, -2)).unwrap()][0] = amp;
        let u = VelocityField::leray(&g, raw).unwrap();
        let psi = curl(&u);
        // psi = d2 u1 = -2 sin(2 x2): nonzero only at (0, +-2)
        for (i, m) in g.modes().iter().enumerate() {
            let c = psi.coeffs()[i];
            if m.k1 == 0 && m.k2.abs() == 2 {
                assert!((c.norm() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
            } else {
                assert_eq!(c.norm(), 0.0);
            }
        }
        // real coordinate of sin(2 x2) is -2 * |sin|_L2 = -2 * sqrt(2) pi
        let s = psi.real_coord(g.index_of(wv(0, 2)).unwrap());
        assert!((s + 2.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn norms_of_single_modes_and_zero() {
        let g = grid(4);
        let psi = VorticityField::basis_vector(&g, wv(2, 0), 3.0).unwrap();
        let h = psi.norm(Space::H);
        assert!((h - 3.0).abs() < 1e-14);
        assert!((psi.norm(Space::V) - 2.0 * h).abs() < 1e-14);
        assert!((psi.norm(Space::Frac(1.0)) - 4.0 * h).abs() < 1e-13);
        let z = VorticityField::zeros(&g);
        for s in [Space::H, Space::V, Space::Frac(0.25), Space::Frac(-0.5)] {
            assert_eq!(z.norm(s), 0.0);
            assert_eq!(biot_savart(&z).norm(s), 0.0);
        }
    }

    #[test]
    fn real_and_complex_norms_agree() {
        let g = grid(5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = VorticityField::random(&g, &mut rng, 1.0, 1.0);
        let h2: f64 = psi.h_coords().iter().map(|x| x * x).sum();
        assert!((h2 - psi.norm_sq(Space::H)).abs() < 1e-12 * h2);
        let y2: f64 = psi.real_coords().iter().map(|x| x * x).sum();
        assert!((y2 - psi.enstrophy()).abs() < 1e-12 * y2);
        let back = VorticityField::from_real_coords(&g, &psi.real_coords()).unwrap();
        assert!(back.sub(&psi).unwrap().enstrophy() < 1e-28 * y2);
    }

    #[test]
    fn from_coeffs_rejects_non_hermitian() {
        let g = grid(2);
        let mut c = vec![Complex64::new(0.0, 0.0); g.len()];
        c[0] = Complex64::new(1.0, 0.0);
        assert!(VorticityField::from_coeffs(&g, c).is_err());
        assert!(VorticityField::from_coeffs(&g, vec![]).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = VorticityField::zeros(&grid(2));
        let b = VorticityField::zeros(&grid(3));
        assert!(a.inner(&b, Space::H).is_err());
        assert!(a.sub(&b).is_err());
    }
}
