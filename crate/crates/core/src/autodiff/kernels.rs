//! Raw dense kernels behind the tape operations.
//!
//! Matrix products parallelize over output rows above a flop threshold; each
//! row is reduced sequentially, so results are bit-identical whether or not
//! the rayon path runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Products smaller than this run sequentially even with `parallel` enabled.
const PAR_MIN_MACS: usize = 1 << 18;

/// C[m,n] = A[m,k] * B[k,n].
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    {
        if m * k * n >= PAR_MIN_MACS && m > 1 {
            let mut c = vec![0.0; m * n];
            c.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                mm_row(a, b, k, n, i, row);
            });
            return c;
        }
    }
    matmul_sequential(a, b, m, k, n)
}

/// Sequential reference for [`matmul`], exposed for benchmarks.
pub fn matmul_sequential(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for (i, row) in c.chunks_mut(n).enumerate() {
        mm_row(a, b, k, n, i, row);
    }
    c
}

#[inline]
fn mm_row(a: &[f64], b: &[f64], k: usize, n: usize, i: usize, row: &mut [f64]) {
    for p in 0..k {
        let av = a[i * k + p];
        if av == 0.0 {
            continue;
        }
        let brow = &b[p * n..(p + 1) * n];
        for (c, &bv) in row.iter_mut().zip(brow) {
            *c += av * bv;
        }
    }
}

/// C[m,n] = A[m,k] * B[n,k]^T, without materializing the transpose.
pub fn matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let body = |i: usize, row: &mut [f64]| {
        let arow = &a[i * k..(i + 1) * k];
        for (j, c) in row.iter_mut().enumerate() {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = 0.0;
            for (av, bv) in arow.iter().zip(brow) {
                s += av * bv;
            }
            *c = s;
        }
    };
    #[cfg(feature = "parallel")]
    {
        if m * k * n >= PAR_MIN_MACS && m > 1 {
            let mut c = vec![0.0; m * n];
            c.par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, row)| body(i, row));
            return c;
        }
    }
    let mut c = vec![0.0; m * n];
    for (i, row) in c.chunks_mut(n).enumerate() {
        body(i, row);
    }
    c
}

/// C[k,n] = A[m,k]^T * B[m,n], without materializing the transpose.
pub fn matmul_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let body = |p: usize, row: &mut [f64]| {
        for i in 0..m {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[i * n..(i + 1) * n];
            for (c, &bv) in row.iter_mut().zip(brow) {
                *c += av * bv;
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        if m * k * n >= PAR_MIN_MACS && k > 1 {
            let mut c = vec![0.0; k * n];
            c.par_chunks_mut(n)
                .enumerate()
                .for_each(|(p, row)| body(p, row));
            return c;
        }
    }
    let mut c = vec![0.0; k * n];
    for (p, row) in c.chunks_mut(n).enumerate() {
        body(p, row);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn variants_agree_with_naive() {
        let a: Vec<f64> = (0..12).map(|i| i as f64 * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..20).map(|i| 0.7 - i as f64 * 0.1).collect();
        // a is 3x4, b is 4x5
        assert_eq!(matmul(&a, &b, 3, 4, 5), naive(&a, &b, 3, 4, 5));
        assert_eq!(matmul_sequential(&a, &b, 3, 4, 5), naive(&a, &b, 3, 4, 5));

        // nt: a 3x4 times (5x4)^T
        let bt: Vec<f64> = {
            let mut t = vec![0.0; 20];
            for r in 0..4 {
                for c in 0..5 {
                    t[c * 4 + r] = b[r * 5 + c];
                }
            }
            t
        };
        assert_eq!(matmul_nt(&a, &bt, 3, 4, 5), naive(&a, &b, 3, 4, 5));

        // tn: (4x3)^T times 4x5 -> transpose a first
        let at: Vec<f64> = {
            let mut t = vec![0.0; 12];
            for r in 0..3 {
                for c in 0..4 {
                    t[c * 3 + r] = a[r * 4 + c];
                }
            }
            t
        };
        assert_eq!(matmul_tn(&at, &b, 4, 3, 5), naive(&a, &b, 3, 4, 5));
    }
}
