//! Smith normal form for small integer matrices.

/// Invariant factors `d_1 | d_2 | ...` of an integer matrix given as rows.
///
/// Zero factors are reported for rank deficiency; the list has
/// `min(rows, cols)` entries, all nonnegative.
pub fn invariant_factors(rows: &[Vec<i64>]) -> Vec<i64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    let mut a: Vec<Vec<i128>> = rows.iter().map(|row| row.iter().map(|&x| x as i128).collect()).collect();
    let mut out = Vec::with_capacity(r.min(c));

    for t in 0..r.min(c) {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(t) {
                for (j, &x) in row.iter().enumerate().skip(t) {
                    if x != 0 && best.is_none_or(|(bi, bj)| x.abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                out.extend(std::iter::repeat_n(0, r.min(c) - t));
                return out;
            };
            a.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            let p = a[t][t];

            let mut clean = true;
            for i in t + 1..r {
                let q = a[i][t] / p;
                for j in t..c {
                    a[i][j] -= q * a[t][j];
                }
                clean &= a[i][t] == 0;
            }
            for j in t + 1..c {
                let q = a[t][j] / p;
                for row in a.iter_mut().skip(t) {
                    row[j] -= q * row[t];
                }
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            // divisibility: fold any offending row into row t and retry
            if let Some(i) = (t + 1..r).find(|&i| (t + 1..c).any(|j| a[i][j] % p != 0)) {
                for j in t..c {
                    a[t][j] += a[i][j];
                }
                continue;
            }
            out.push(p.unsigned_abs() as i64);
            break;
        }
    }
    out
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
