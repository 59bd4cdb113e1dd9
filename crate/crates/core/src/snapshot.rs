//! Plain-text field snapshots.
//!
//! ```text
//! # vorticity snapshot
//! cutoff 4
//! normalization exp(ik.x)/2pi
//! time 0.5
//! k1 k2 re im
//! 1 0 -3.1e-1 0e0
//! ...
//! ```
//!
//! One row per grid mode in grid order. Floats use the shortest decimal
//! form that parses back to the same bits, so a write/read cycle is exact.
//! A stream is a concatenation of such blocks.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{make_grid, SpectralGrid, VorticityField, WaveVector};

pub const MAGIC: &str = "# vorticity snapshot";
/// Basis convention of the stored amplitudes.
pub const NORMALIZATION: &str = "exp(ik.x)/2pi";

pub fn write_snapshot<W: Write>(mut w: W, psi: &VorticityField, time: f64) -> Result<()> {
    let grid = psi.grid();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "cutoff {}", grid.cutoff())?;
    writeln!(w, "normalization {NORMALIZATION}")?;
    writeln!(w, "time {time:e}")?;
    writeln!(w, "k1 k2 re im")?;
    for (k, c) in grid.modes().iter().zip(psi.coeffs()) {
        writeln!(w, "{} {} {:e} {:e}", k.k1, k.k2, c.re, c.im)?;
    }
    Ok(())
}

fn parse_err(line: usize, what: impl std::fmt::Display) -> Error {
    Error::Parse(format!("snapshot line {line}: {what}"))
}

fn keyed<'a>(line: &'a str, key: &str, n: usize) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| parse_err(n, format!("expected `{key} ...`, found `{line}`")))
}

/// Reads every block of a snapshot stream. All blocks must share one cutoff;
/// `grid` is used when given, otherwise built from the first header.
pub fn read_snapshots<R: BufRead>(r: R, grid: Option<&Arc<SpectralGrid>>) -> Result<Vec<(f64, VorticityField)>> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut out = Vec::new();
    let mut grid = grid.cloned();
    while let Some((n, line)) = lines.next() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if line != MAGIC {
            return Err(parse_err(n, format!("expected `{MAGIC}`")));
        }
        let mut next = || -> Result<(usize, String)> {
            match lines.next() {
                Some((n, l)) => Ok((n, l?)),
                None => Err(Error::Parse("snapshot truncated".into())),
            }
        };
        let (n, l) = next()?;
        let cutoff: usize = keyed(&l, "cutoff", n)?.parse().map_err(|e| parse_err(n, e))?;
        let g = match &grid {
            Some(g) if g.cutoff() == cutoff => Arc::clone(g),
            Some(g) => return Err(parse_err(n, format!("cutoff {cutoff}, expected {}", g.cutoff()))),
            None => make_grid(cutoff)?,
        };
        grid = Some(Arc::clone(&g));
        let (n, l) = next()?;
        let norm = keyed(&l, "normalization", n)?;
        if norm != NORMALIZATION {
            return Err(parse_err(n, format!("unknown normalization `{norm}`")));
        }
        let (n, l) = next()?;
        let time: f64 = keyed(&l, "time", n)?.parse().map_err(|e| parse_err(n, e))?;
        let (n, l) = next()?;
        if l != "k1 k2 re im" {
            return Err(parse_err(n, "expected column header `k1 k2 re im`"));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); g.len()];
        let mut seen = vec![false; g.len()];
        for _ in 0..g.len() {
            let (n, l) = next()?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 {
                return Err(parse_err(n, "expected 4 columns"));
            }
            let k1: i32 = f[0].parse().map_err(|e| parse_err(n, e))?;
            let k2: i32 = f[1].parse().map_err(|e| parse_err(n, e))?;
            let re: f64 = f[2].parse().map_err(|e| parse_err(n, e))?;
            let im: f64 = f[3].parse().map_err(|e| parse_err(n, e))?;
            let k = WaveVector::new(k1, k2).map_err(|e| parse_err(n, e))?;
            let i = g.index_of(k).ok_or_else(|| parse_err(n, format!("mode {k} is off the grid")))?;
            if seen[i] {
                return Err(parse_err(n, format!("mode {k} repeated")));
            }
            seen[i] = true;
            coeffs[i] = Complex64::new(re, im);
        }
        out.push((time, VorticityField::from_coeffs(&g, coeffs)?));
    }
    Ok(out)
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<(f64, VorticityField)> {
    let mut all = read_snapshots(r, None)?;
    match all.len() {
        1 => Ok(all.remove(0)),
        n => Err(Error::Parse(format!("expected one snapshot, found {n}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), k in 2usize..7, amp in 1e-300f64..1e300, t in -1e6f64..1e6) {
            let g = make_grid(k).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = VorticityField::random(&g, &mut rng, amp, 1.3);
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &psi, t).unwrap();
            let (t2, back) = read_snapshot(buf.as_slice()).unwrap();
            prop_assert_eq!(t2.to_bits(), t.to_bits());
            for (a, b) in psi.coeffs().iter().zip(back.coeffs()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn streams_and_errors() {
        let g = make_grid(3).unwrap();
        let a = VorticityField::basis_vector(&g, WaveVector::new(1, 2).unwrap(), 0.1).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &a, 0.0).unwrap();
        write_snapshot(&mut buf, &a.scaled(2.0), 1.0).unwrap();
        let all = read_snapshots(buf.as_slice(), Some(&g)).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[1].1.coeffs(), a.scaled(2.0).coeffs());
        assert!(read_snapshot(buf.as_slice()).is_err());

        let text = String::from_utf8(buf).unwrap();
        let one: String = text.lines().take(5 + g.len()).map(|l| format!("{l}\n")).collect();
        let bad = one.replace("cutoff 3", "cutoff 4");
        assert!(matches!(read_snapshot(bad.as_bytes()), Err(Error::Parse(_))));
        let truncated: String = one.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(read_snapshot(truncated.as_bytes()).is_err());
        assert!(read_snapshots(one.as_bytes(), Some(&make_grid(2).unwrap())).is_err());
    }
}
