//! Unpivoted `LDLᵀ` on the envelope of a reverse Cuthill–McKee ordering.
//!
//! By Sylvester's law of inertia the signs of `D` count the eigenvalues of
//! `A − σI` below, at and above zero. This is the independent counter for
//! every eigenvalue count in the crate.

use std::collections::VecDeque;

use serde::Serialize;

use super::SymCsr;
use crate::error::{Error, Result};

/// Default cap on stored envelope entries (about 480 MB of `f64`).
pub const DEFAULT_ENVELOPE_CAP: usize = 60_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Inertia {
    pub negative: usize,
    /// Pivots with magnitude below the pivot tolerance.
    pub zero: usize,
    pub positive: usize,
}

/// Reverse Cuthill–McKee ordering; returns `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SymCsr) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited_global: &[bool]| -> (usize, usize) {
        // returns (eccentricity, a minimum-degree vertex in the last level)
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        let mut last = start;
        while let Some(x) = queue.pop_front() {
            last = x;
            for &y in a.row(x).0 {
                if y != x && !visited_global[y] && dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        let ecc = dist[last];
        let far = (0..n)
            .filter(|&v| dist[v] == ecc)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(last);
        (ecc, far)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start within this component
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(x) = queue.pop_front() {
            order.push(x);
            let mut next: Vec<usize> = a.row(x).0.iter().copied().filter(|&y| !visited[y]).collect();
            next.sort_by_key(|&y| (degree[y], y));
            for y in next {
                visited[y] = true;
                queue.push_back(y);
            }
        }
    }
    order.reverse();
    order
}

/// Number of stored strictly-lower envelope entries under `perm`.
pub fn envelope_size(a: &SymCsr, perm: &[usize]) -> usize {
    let n = a.dim();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    (0..n)
        .map(|i| {
            let first = a.row(perm[i]).0.iter().map(|&j| inv[j]).min().unwrap_or(i).min(i);
            i - first
        })
        .sum()
}

/// Inertia of `a − shift·I`. Pivots with `|d| <= pivot_tol` are counted as
/// zero and replaced by `pivot_tol` so the elimination can continue.
pub fn inertia(a: &SymCsr, shift: f64, pivot_tol: f64, cap: usize) -> Result<Inertia> {
    let n = a.dim();
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first = vec![0usize; n];
    let mut start = vec![0usize; n + 1];
    for i in 0..n {
        first[i] = a.row(perm[i]).0.iter().map(|&j| inv[j]).min().unwrap_or(i).min(i);
        start[i + 1] = start[i] + (i - first[i]);
    }
    let total = start[n];
    if total > cap {
        return Err(Error::EnvelopeTooLarge { entries: total, cap });
    }
    let mut data = vec![0.0f64; total];
    let mut d = vec![0.0f64; n];
    let mut out = Inertia::default();

    for i in 0..n {
        let fi = first[i];
        let (lo_i, hi_i) = (start[i], start[i + 1]);
        let mut diag = -shift;
        {
            let row = &mut data[lo_i..hi_i];
            let (c, v) = a.row(perm[i]);
            for (j, val) in c.iter().zip(v) {
                let jn = inv[*j];
                if jn < i {
                    row[jn - fi] = *val;
                } else if jn == i {
                    diag += *val;
                }
            }
        }
        for j in fi..i {
            let lo = fi.max(first[j]);
            if lo < j {
                let (before, rest) = data.split_at_mut(lo_i);
                let lj = &before[start[j] + (lo - first[j])..start[j] + (j - first[j])];
                let row = &mut rest[..hi_i - lo_i];
                let s: f64 = row[lo - fi..j - fi].iter().zip(lj).map(|(a, b)| a * b).sum();
                row[j - fi] -= s;
            }
        }
        let row = &mut data[lo_i..hi_i];
        for (k, entry) in row.iter_mut().enumerate() {
            let dk = d[fi + k];
            let l = *entry / dk;
            diag -= l * *entry;
            *entry = l;
        }
        if diag.abs() <= pivot_tol {
            out.zero += 1;
            d[i] = pivot_tol.max(f64::MIN_POSITIVE);
        } else {
            if diag < 0.0 {
                out.negative += 1;
            } else {
                out.positive += 1;
            }
            d[i] = diag;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> SymCsr {
        let mut diag = vec![2.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        let off: Vec<_> = (0..n - 1).map(|i| (i, i + 1, -1.0)).collect();
        SymCsr::from_parts(&diag, &off)
    }

    #[test]
    fn counts_match_known_path_spectrum() {
        // eigenvalues 2 - 2cos(pi k / n), k = 0..n-1
        let n = 12;
        let a = path_laplacian(n);
        let eig: Vec<f64> = (0..n).map(|k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
        for &shift in &[-0.5, 0.05, 0.7, 1.3, 2.01, 3.9, 4.5] {
            let expect = eig.iter().filter(|&&l| l < shift).count();
            let got = inertia(&a, shift, 1e-13, usize::MAX).unwrap();
            assert_eq!(got.negative, expect, "shift {shift}");
            assert_eq!(got.negative + got.zero + got.positive, n);
        }
    }

    #[test]
    fn zero_pivot_is_flagged() {
        let a = path_laplacian(4);
        let got = inertia(&a, 0.0, 1e-12, usize::MAX).unwrap();
        assert_eq!(got.zero, 1);
        assert_eq!(got.negative, 0);
    }

    #[test]
    fn rcm_is_a_permutation_and_respects_cap() {
        let a = path_laplacian(30);
        let mut p = reverse_cuthill_mckee(&a);
        assert_eq!(envelope_size(&a, &p), 29);
        p.sort_unstable();
        assert_eq!(p, (0..30).collect::<Vec<_>>());
        assert!(matches!(inertia(&a, 0.5, 1e-12, 5), Err(Error::EnvelopeTooLarge { .. })));
    }

    #[test]
    fn disconnected_blocks() {
        let a = SymCsr::from_parts(&[1.0, -1.0, 3.0, 2.0], &[(2, 3, 1.0)]);
        let got = inertia(&a, 0.0, 1e-12, usize::MAX).unwrap();
        assert_eq!((got.negative, got.zero, got.positive), (1, 0, 3));
    }
}
