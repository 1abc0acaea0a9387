//! Dense order-`p` tensors on `R^n` stored flat in row-major order:
//! entry `(i_1, ..., i_p)` sits at `Σ_k i_k n^{p-k}`.

/// `<x^{⊗p}, T>` by `p` successive contractions of the last mode.
pub fn contract_all(t: &[f64], n: usize, p: usize, x: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), n.pow(p as u32));
    let mut buf = contract_last(t, n, x);
    for _ in 1..p {
        buf = contract_last(&buf, n, x);
    }
    buf[0]
}

fn contract_last(t: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    t.chunks_exact(n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// `T(·, x, ..., x)`: contraction of every mode but the first.
pub fn contract_except_first(t: &[f64], n: usize, p: usize, x: &[f64]) -> Vec<f64> {
    let mut buf = contract_last(t, n, x);
    for _ in 2..p {
        buf = contract_last(&buf, n, x);
    }
    buf
}

/// `<x^{⊗p}, T>` from an explicitly materialised `x^{⊗p}`; a slow reference.
pub fn flat_inner(t: &[f64], n: usize, p: usize, x: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut idx = vec![0usize; p];
    for v in t {
        s += v * idx.iter().map(|&i| x[i]).product::<f64>();
        for k in (0..p).rev() {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    s
}

fn permutations(p: usize) -> Vec<Vec<usize>> {
    if p == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for perm in permutations(p - 1) {
        for pos in 0..p {
            let mut q = perm.clone();
            q.insert(pos, p - 1);
            out.push(q);
        }
    }
    out
}

/// Average of `T` over all `p!` mode permutations.
pub fn symmetrize(t: &[f64], n: usize, p: usize) -> Vec<f64> {
    let perms = permutations(p);
    let mut out = vec![0.0; t.len()];
    let mut idx = vec![0usize; p];
    for (flat, v) in t.iter().enumerate() {
        let mut rem = flat;
        for k in (0..p).rev() {
            idx[k] = rem % n;
            rem /= n;
        }
        for perm in &perms {
            let mut f = 0;
            for &k in perm {
                f = f * n + idx[k];
            }
            out[f] += v;
        }
    }
    let c = 1.0 / perms.len() as f64;
    out.iter_mut().for_each(|v| *v *= c);
    out
}

/// Result of one run of the symmetric power iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerResult {
    /// Best iterate seen.
    pub x: Vec<f64>,
    /// `<x^{⊗p}, T>` at `x`.
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Power iteration `x <- T(·,x,...,x) / |T(·,x,...,x)|` on a symmetric
/// tensor, keeping the best iterate. Stops when successive iterates differ
/// by less than `tol` in norm.
pub fn power_iteration(tsym: &[f64], n: usize, p: usize, x0: &[f64], max_iter: usize, tol: f64) -> PowerResult {
    let mut x = x0.to_vec();
    let mut best_x = x.clone();
    let mut best = contract_all(tsym, n, p, &x);
    for it in 1..=max_iter {
        let v = contract_except_first(tsym, n, p, &x);
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(nv > 0.0) || !nv.is_finite() {
            return PowerResult { x: best_x, value: best, converged: false, iterations: it };
        }
        let y: Vec<f64> = v.iter().map(|a| a / nv).collect();
        let diff = y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        x = y;
        let val = contract_all(tsym, n, p, &x);
        if val > best {
            best = val;
            best_x = x.clone();
        }
        if diff < tol {
            return PowerResult { x: best_x, value: best, converged: true, iterations: it };
        }
    }
    PowerResult { x: best_x, value: best, converged: false, iterations: max_iter }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{standard_normal_vec, uniform_sphere};
    use crate::rng::rng_from_seed;

    #[test]
    fn contraction_matches_flat_product() {
        let mut rng = rng_from_seed(1);
        for &(n, p) in &[(8usize, 3usize), (5, 4), (3, 5)] {
            let t = standard_normal_vec(n.pow(p as u32), &mut rng);
            let x = uniform_sphere(n, &mut rng);
            let a = contract_all(&t, n, p, &x);
            let b = flat_inner(&t, n, p, &x);
            assert!((a - b).abs() < 1e-9, "n={n} p={p}");
            let s = symmetrize(&t, n, p);
            assert!((contract_all(&s, n, p, &x) - a).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetrized_gradient() {
        let mut rng = rng_from_seed(2);
        let (n, p) = (6, 3);
        let t = symmetrize(&standard_normal_vec(n * n * n, &mut rng), n, p);
        let x = standard_normal_vec(n, &mut rng);
        let g = contract_except_first(&t, n, p, &x);
        let h = 1e-6;
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (contract_all(&t, n, p, &xp) - contract_all(&t, n, p, &xm)) / (2.0 * h);
            assert!((fd - p as f64 * g[i]).abs() < 1e-5 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
    }
}
