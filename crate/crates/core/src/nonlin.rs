//! The advection (bilinear) operator, evaluated pseudo-spectrally.
//!
//! Inputs are restricted to the 2/3 dealiasing set, products are formed on a
//! physical grid of `n x n` points with `n > K + 2 K_d`, so every retained
//! output mode is free of aliasing. On the dealiased modes the quadratic
//! cancellations `<B(u,v),v> = 0` and `<u.grad psi, psi> = 0` hold to
//! round-off.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{biot_savart, curl, SpectralGrid, Space, VelocityField, VorticityField};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest cutoff accepted by [`advect_oracle`].
pub const ORACLE_MAX_CUTOFF: usize = 8;

fn smooth_size(min: usize) -> usize {
    let mut n = min.max(2);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Scratch buffers and FFT plans for transform-based products on one grid.
pub struct AdvectionWorkspace {
    grid: Arc<SpectralGrid>,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    slots: Vec<usize>,
    bufs: [Vec<Complex64>; 3],
    transpose: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl AdvectionWorkspace {
    pub fn new(grid: &Arc<SpectralGrid>) -> Self {
        let n = smooth_size(grid.cutoff() + 2 * grid.dealias_cutoff() + 1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len =
            forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let wrap = |k: i32| k.rem_euclid(n as i32) as usize;
        let slots = grid.modes().iter().map(|m| wrap(m.k1) * n + wrap(m.k2)).collect();
        AdvectionWorkspace {
            grid: Arc::clone(grid),
            n,
            forward,
            inverse,
            slots,
            bufs: [vec![ZERO; n * n], vec![ZERO; n * n], vec![ZERO; n * n]],
            transpose: vec![ZERO; n * n],
            scratch: vec![ZERO; scratch_len],
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    /// Side length of the physical grid.
    pub fn physical_size(&self) -> usize {
        self.n
    }

    fn check(&self, grid: &SpectralGrid) -> Result<()> {
        if grid.cutoff() != self.grid.cutoff() {
            return Err(Error::Domain(format!(
                "workspace built for cutoff {}, field has cutoff {}",
                self.grid.cutoff(),
                grid.cutoff()
            )));
        }
        Ok(())
    }

    /// 2D transform of one buffer. Only wavenumbers in `[-band, band]` are
    /// nonzero on input (inverse) or read on output (forward), so the 1D
    /// transforms along rows outside that band are skipped.
    fn transform(&mut self, which: usize, inverse: bool, band: usize) {
        let n = self.n;
        let fft = if inverse { &self.inverse } else { &self.forward };
        let buf = &mut self.bufs[which];
        if inverse {
            process_band(fft.as_ref(), buf, n, band, &mut self.scratch);
        } else {
            fft.process_with_scratch(buf, &mut self.scratch);
        }
        for i in 0..n {
            for j in 0..n {
                self.transpose[j * n + i] = buf[i * n + j];
            }
        }
        if inverse {
            fft.process_with_scratch(&mut self.transpose, &mut self.scratch);
        } else {
            process_band(fft.as_ref(), &mut self.transpose, n, band, &mut self.scratch);
        }
        for i in 0..n {
            for j in 0..n {
                buf[j * n + i] = self.transpose[i * n + j];
            }
        }
    }

    /// Loads `lo + i hi` amplitudes of dealiased modes into a buffer.
    fn load<F>(&mut self, which: usize, mut amp: F)
    where
        F: FnMut(usize) -> Complex64,
    {
        let buf = &mut self.bufs[which];
        buf.iter_mut().for_each(|c| *c = ZERO);
        for (i, &slot) in self.slots.iter().enumerate() {
            if self.grid.is_dealiased(i) {
                buf[slot] = amp(i);
            }
        }
    }
}

/// Row transforms of an `n x n` buffer restricted to rows `0..=band` and
/// `n-band..n`.
fn process_band(fft: &dyn Fft<f64>, data: &mut [Complex64], n: usize, band: usize, scratch: &mut [Complex64]) {
    if 2 * band + 1 >= n {
        fft.process_with_scratch(data, scratch);
        return;
    }
    fft.process_with_scratch(&mut data[..(band + 1) * n], scratch);
    if band > 0 {
        fft.process_with_scratch(&mut data[(n - band) * n..], scratch);
    }
}

fn ik(k: i32) -> Complex64 {
    Complex64::new(0.0, k as f64)
}

/// Dealiased Galerkin projection of `biot_savart(psi_a) . grad psi_b`.
pub fn advect(
    psi_a: &VorticityField,
    psi_b: &VorticityField,
    ws: &mut AdvectionWorkspace,
) -> Result<VorticityField> {
    ws.check(psi_a.grid())?;
    ws.check(psi_b.grid())?;
    let grid = Arc::clone(&ws.grid);
    let modes = grid.modes();
    let (a, b) = (psi_a.coeffs(), psi_b.coeffs());

    // u1 + i u2 and d1 psi + i d2 psi; both halves are real fields.
    ws.load(0, |i| {
        let m = modes[i];
        let s = a[i] / m.norm_sq() as f64;
        let u1 = -ik(m.k2) * s;
        let u2 = ik(m.k1) * s;
        u1 + Complex64::i() * u2
    });
    ws.load(1, |i| {
        let m = modes[i];
        ik(m.k1) * b[i] + Complex64::i() * (ik(m.k2) * b[i])
    });
    let band = grid.dealias_cutoff();
    ws.transform(0, true, band);
    ws.transform(1, true, band);
    {
        let [b0, b1, _] = &mut ws.bufs;
        for (x, y) in b0.iter_mut().zip(b1.iter()) {
            *x = Complex64::new(x.re * y.re + x.im * y.im, 0.0);
        }
    }
    ws.transform(0, false, band);

    let norm = 1.0 / (2.0 * PI * (ws.n * ws.n) as f64);
    let out = ws
        .slots
        .iter()
        .enumerate()
        .map(|(i, &slot)| if grid.is_dealiased(i) { ws.bufs[0][slot] * norm } else { ZERO })
        .collect();
    Ok(VorticityField::from_coeffs_unchecked(&grid, out))
}

/// Largest speed `|u(x)|` of the dealiased velocity of `psi` on the
/// physical grid points.
pub fn max_speed(psi: &VorticityField, ws: &mut AdvectionWorkspace) -> Result<f64> {
    ws.check(psi.grid())?;
    let grid = Arc::clone(&ws.grid);
    let modes = grid.modes();
    let a = psi.coeffs();
    ws.load(0, |i| {
        let m = modes[i];
        let s = a[i] / m.norm_sq() as f64;
        -ik(m.k2) * s + Complex64::i() * (ik(m.k1) * s)
    });
    ws.transform(0, true, grid.dealias_cutoff());
    let peak = ws.bufs[0].iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    Ok(peak.sqrt() / (2.0 * PI))
}

/// Direct convolution-sum evaluation of [`advect`], without transforms.
///
/// Refused for cutoffs above [`ORACLE_MAX_CUTOFF`] (quartic cost).
pub fn advect_oracle(psi_a: &VorticityField, psi_b: &VorticityField) -> Result<VorticityField> {
    let grid = psi_a.grid();
    if grid.cutoff() != psi_b.grid().cutoff() {
        return Err(Error::Domain("oracle inputs live on different grids".into()));
    }
    if grid.cutoff() > ORACLE_MAX_CUTOFF {
        return Err(Error::Unsupported(format!(
            "convolution oracle refused for cutoff {} > {ORACLE_MAX_CUTOFF}",
            grid.cutoff()
        )));
    }
    let ua = biot_savart(&psi_a.dealiased());
    let b = psi_b.coeffs();
    let kept: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_dealiased(i)).collect();
    let mut out = vec![ZERO; grid.len()];
    for &i in &kept {
        let k = grid.mode(i);
        let mut acc = ZERO;
        for &p in &kept {
            let kp = grid.mode(p);
            let (q1, q2) = (k.k1 - kp.k1, k.k2 - kp.k2);
            if q1 == 0 && q2 == 0 {
                continue;
            }
            let Some(q) = grid.index_of(crate::spectral::WaveVector { k1: q1, k2: q2 }) else {
                continue;
            };
            if !grid.is_dealiased(q) {
                continue;
            }
            let [u1, u2] = ua.coeffs()[p];
            acc += (u1 * ik(q1) + u2 * ik(q2)) * b[q];
        }
        out[i] = acc / (2.0 * PI);
    }
    Ok(VorticityField::from_coeffs_unchecked(grid, out))
}

/// Velocity-form `B(u,v) = Leray[(u . grad) v]` on every grid mode, for the
/// dealiased parts of `u` and `v`.
pub fn bilinear(
    u: &VelocityField,
    v: &VelocityField,
    ws: &mut AdvectionWorkspace,
) -> Result<VelocityField> {
    ws.check(u.grid())?;
    ws.check(v.grid())?;
    let grid = Arc::clone(&ws.grid);
    let modes = grid.modes();
    let (uc, vc) = (u.coeffs(), v.coeffs());
    ws.load(0, |i| uc[i][0] + Complex64::i() * uc[i][1]);
    ws.load(1, |i| ik(modes[i].k1) * vc[i][0] + Complex64::i() * ik(modes[i].k2) * vc[i][0]);
    ws.load(2, |i| ik(modes[i].k1) * vc[i][1] + Complex64::i() * ik(modes[i].k2) * vc[i][1]);
    for w in 0..3 {
        ws.transform(w, true, grid.dealias_cutoff());
    }
    {
        let [b0, b1, b2] = &mut ws.bufs;
        for ((x, y), z) in b0.iter_mut().zip(b1.iter()).zip(b2.iter()) {
            let p1 = x.re * y.re + x.im * y.im;
            let p2 = x.re * z.re + x.im * z.im;
            *x = Complex64::new(p1, p2);
        }
    }
    ws.transform(0, false, grid.cutoff());

    let n = ws.n;
    let norm = 1.0 / (2.0 * PI * (n * n) as f64);
    let raw = ws
        .slots
        .iter()
        .zip(modes)
        .map(|(&slot, m)| {
            let neg = (-m.k1).rem_euclid(n as i32) as usize * n
                + (-m.k2).rem_euclid(n as i32) as usize;
            let p = ws.bufs[0][slot];
            let q = ws.bufs[0][neg].conj();
            [(p + q) * 0.5 * norm, (p - q) * Complex64::new(0.0, -0.5) * norm]
        })
        .collect();
    VelocityField::leray(&grid, raw)
}

/// The three quadratic cancellations, with the Cauchy-Schwarz scale of each.
#[derive(Clone, Debug, Serialize)]
pub struct PairingReport {
    /// `<B(u,v),v>`
    pub energy: f64,
    pub energy_scale: f64,
    /// `<B(u,v),z> + <B(u,z),v>`
    pub antisymmetry: f64,
    pub antisymmetry_scale: f64,
    /// `<u . grad psi, psi>` with `psi = curl v`
    pub enstrophy: f64,
    pub enstrophy_scale: f64,
}

impl PairingReport {
    fn rel(x: f64, scale: f64) -> f64 {
        if scale == 0.0 {
            x.abs()
        } else {
            x.abs() / scale
        }
    }

    /// Residuals divided by their natural scales.
    pub fn relative(&self) -> [f64; 3] {
        [
            Self::rel(self.energy, self.energy_scale),
            Self::rel(self.antisymmetry, self.antisymmetry_scale),
            Self::rel(self.enstrophy, self.enstrophy_scale),
        ]
    }

    pub fn max_relative(&self) -> f64 {
        self.relative().into_iter().fold(0.0, f64::max)
    }
}

/// Evaluates the cancellation identities on the dealiased parts of `u, v, z`.
pub fn pairing_checks(
    u: &VelocityField,
    v: &VelocityField,
    z: &VelocityField,
    ws: &mut AdvectionWorkspace,
) -> Result<PairingReport> {
    let (u, v, z) = (u.dealiased(), v.dealiased(), z.dealiased());
    let buv = bilinear(&u, &v, ws)?;
    let buz = bilinear(&u, &z, ws)?;
    let energy = buv.inner(&v, Space::H)?;
    let antisymmetry = buv.inner(&z, Space::H)? + buz.inner(&v, Space::H)?;
    let psi = curl(&v);
    let adv = advect(&curl(&u), &psi, ws)?;
    let enstrophy = adv.inner(&psi, Space::V)?;
    let (nb, nv, nz) = (buv.norm(Space::H), v.norm(Space::H), z.norm(Space::H));
    Ok(PairingReport {
        energy,
        energy_scale: nb * nv,
        antisymmetry,
        antisymmetry_scale: nb * nz + buz.norm(Space::H) * nv,
        enstrophy,
        enstrophy_scale: adv.enstrophy().sqrt() * psi.enstrophy().sqrt(),
    })
}

/// `|B(u,v)|_{V'} / (|u|_{D(A^1/4)} |v|_{D(A^1/4)})` on the dealiased parts.
pub fn giga_ratio(u: &VelocityField, v: &VelocityField, ws: &mut AdvectionWorkspace) -> Result<f64> {
    let (u, v) = (u.dealiased(), v.dealiased());
    let quarter = Space::Frac(0.25);
    let den = u.norm(quarter) * v.norm(quarter);
    if den == 0.0 {
        return Err(Error::Domain("ratio undefined for a zero (dealiased) field".into()));
    }
    let b = bilinear(&u, &v, ws)?;
    Ok(b.norm(Space::Frac(-0.5)) / den)
}
