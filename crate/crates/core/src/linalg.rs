//! Dense symmetric solves for the small normal-equation systems built by
//! the regression fits. Systems are (d+1)x(d+1), so plain elimination is
//! the right tool; no external solver needed.

/// Relative pivot threshold. A pivot below `PIVOT_THRESHOLD * max initial
/// diagonal` marks a degenerate direction, which receives a zero solution
/// component instead of an error.
pub(crate) const PIVOT_THRESHOLD: f64 = 1e-10;

/// Outcome of a semidefinite solve.
pub(crate) struct SpsdSolution {
    pub x: Vec<f64>,
    /// Number of non-degenerate pivots; `rank < p` means some directions
    /// were zeroed.
    pub rank: usize,
}

/// Solve `A x = b` for a symmetric positive semidefinite `A` (row-major,
/// `p * p`) by Gaussian elimination with symmetric diagonal pivoting.
///
/// Degenerate directions (pivot under the relative threshold) are excluded
/// from elimination and their solution components are exactly zero.
pub(crate) fn solve_spsd(a: &[f64], b: &[f64], p: usize) -> SpsdSolution {
    debug_assert_eq!(a.len(), p * p);
    debug_assert_eq!(b.len(), p);

    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();

    let scale = (0..p)
        .map(|i| a[i * p + i].abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let threshold = PIVOT_THRESHOLD * scale;

    let mut rank = p;
    for k in 0..p {
        // Largest remaining diagonal entry is the stable pivot for PSD systems.
        let mut piv = k;
        for i in (k + 1)..p {
            if m[i * p + i] > m[piv * p + piv] {
                piv = i;
            }
        }
        if m[piv * p + piv] <= threshold {
            rank = k;
            break;
        }
        if piv != k {
            for c in 0..p {
                m.swap(k * p + c, piv * p + c);
            }
            for r in 0..p {
                m.swap(r * p + k, r * p + piv);
            }
            rhs.swap(k, piv);
            perm.swap(k, piv);
        }
        let pivot = m[k * p + k];
        for i in (k + 1)..p {
            let f = m[i * p + k] / pivot;
            if f == 0.0 {
                continue;
            }
            for c in k..p {
                m[i * p + c] -= f * m[k * p + c];
            }
            rhs[i] -= f * rhs[k];
        }
    }

    let mut xp = vec![0.0; p];
    for k in (0..rank).rev() {
        let mut s = rhs[k];
        for c in (k + 1)..rank {
            s -= m[k * p + c] * xp[c];
        }
        xp[k] = s / m[k * p + k];
    }

    let mut x = vec![0.0; p];
    for k in 0..p {
        x[perm[k]] = xp[k];
    }
    SpsdSolution { x, rank }
}

/// Solve a general square system `A x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when the matrix is numerically
/// singular.
pub(crate) fn solve_square(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), p * p);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    for k in 0..p {
        let mut piv = k;
        for i in (k + 1)..p {
            if m[i * p + k].abs() > m[piv * p + k].abs() {
                piv = i;
            }
        }
        if m[piv * p + k].abs() <= PIVOT_THRESHOLD * scale {
            return None;
        }
        if piv != k {
            for c in 0..p {
                m.swap(k * p + c, piv * p + c);
            }
            rhs.swap(k, piv);
        }
        let pivot = m[k * p + k];
        for i in (k + 1)..p {
            let f = m[i * p + k] / pivot;
            if f == 0.0 {
                continue;
            }
            for c in k..p {
                m[i * p + c] -= f * m[k * p + c];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = rhs[k];
        for c in (k + 1)..p {
            s -= m[k * p + c] * x[c];
        }
        x[k] = s / m[k * p + k];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Solve a possibly singular symmetric system by adding a ridge term and
/// escalating it until the system becomes full rank.
pub(crate) fn solve_with_ridge_fallback(a: &[f64], b: &[f64], p: usize) -> Vec<f64> {
    let first = solve_spsd(a, b, p);
    if first.rank == p && first.x.iter().all(|v| v.is_finite()) {
        return first.x;
    }
    let mean_diag = (0..p).map(|i| a[i * p + i].abs()).sum::<f64>() / p as f64;
    let mut lambda = 1e-8 * mean_diag.max(f64::MIN_POSITIVE);
    let mut jittered = a.to_vec();
    loop {
        for i in 0..p {
            jittered[i * p + i] = a[i * p + i] + lambda;
        }
        let sol = solve_spsd(&jittered, b, p);
        if sol.rank == p && sol.x.iter().all(|v| v.is_finite()) {
            return sol.x;
        }
        lambda *= 100.0;
        if !lambda.is_finite() {
            return vec![0.0; p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent check: Gauss-Jordan with partial pivoting, no pivoting
    // tricks shared with the implementation above.
    fn gauss_jordan(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
        let mut m: Vec<f64> = Vec::with_capacity(p * (p + 1));
        for r in 0..p {
            m.extend_from_slice(&a[r * p..(r + 1) * p]);
            m.push(b[r]);
        }
        let w = p + 1;
        for col in 0..p {
            let piv = (col..p).max_by(|&i, &j| {
                m[i * w + col]
                    .abs()
                    .partial_cmp(&m[j * w + col].abs())
                    .unwrap()
            })?;
            if m[piv * w + col].abs() < 1e-12 {
                return None;
            }
            for c in 0..w {
                m.swap(col * w + c, piv * w + c);
            }
            let d = m[col * w + col];
            for c in 0..w {
                m[col * w + c] /= d;
            }
            for r in 0..p {
                if r == col {
                    continue;
                }
                let f = m[r * w + col];
                for c in 0..w {
                    m[r * w + c] -= f * m[col * w + c];
                }
            }
        }
        Some((0..p).map(|r| m[r * w + p]).collect())
    }

    fn spd_from_factor(g: &[f64], n: usize, p: usize) -> Vec<f64> {
        // A = GᵀG is symmetric positive semidefinite.
        let mut a = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                let mut s = 0.0;
                for k in 0..n {
                    s += g[k * p + i] * g[k * p + j];
                }
                a[i * p + j] = s;
            }
        }
        a
    }

    #[test]
    fn matches_gauss_jordan_on_random_spd_systems() {
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for p in 1..=6 {
            for _ in 0..20 {
                let n = p + 3;
                let g: Vec<f64> = (0..n * p).map(|_| next() * 4.0).collect();
                let a = spd_from_factor(&g, n, p);
                let b: Vec<f64> = (0..p).map(|_| next()).collect();
                let expected = gauss_jordan(&a, &b, p).expect("well conditioned");
                let got = solve_spsd(&a, &b, p);
                assert_eq!(got.rank, p);
                for i in 0..p {
                    assert!(
                        (got.x[i] - expected[i]).abs() < 1e-8,
                        "p={p} i={i}: {} vs {}",
                        got.x[i],
                        expected[i]
                    );
                }
            }
        }
    }

    #[test]
    fn zero_direction_gets_zero_component() {
        // Column 1 is identically zero: its solution entry must be exactly 0.
        let a = vec![4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 9.0];
        let b = vec![8.0, 0.0, 18.0];
        let sol = solve_spsd(&a, &b, 3);
        assert_eq!(sol.rank, 2);
        assert_eq!(sol.x[1], 0.0);
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.x[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_fallback_resolves_singular_system() {
        let a = vec![1.0, 1.0, 1.0, 1.0];
        let b = vec![2.0, 2.0];
        let x = solve_with_ridge_fallback(&a, &b, 2);
        assert!(x.iter().all(|v| v.is_finite()));
        // Residual of the consistent system stays small.
        let r0 = a[0] * x[0] + a[1] * x[1] - b[0];
        assert!(r0.abs() < 1e-5, "residual {r0}");
    }
}
