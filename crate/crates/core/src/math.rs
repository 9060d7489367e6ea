//! Small dense kernels. Everything is f64 and row-major.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Logistic function, evaluated on the branch that cannot overflow.
#[inline]
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(s))`, stable for large |s|.
#[inline]
pub fn log_sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        -(-s).exp().ln_1p()
    } else {
        s - s.exp().ln_1p()
    }
}

/// `log(1 + exp(s))`.
#[inline]
pub fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `out += m · x` for a `rows × cols` matrix.
#[inline]
pub fn matvec_add(m: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out += mᵀ · y`.
#[inline]
pub fn matvec_t_add(m: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), cols);
    for (&yi, row) in y.iter().zip(m.chunks_exact(cols)) {
        if yi != 0.0 {
            axpy(yi, row, out);
        }
    }
}

/// `m += y ⊗ x`.
#[inline]
pub fn outer_add(m: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (&yi, row) in y.iter().zip(m.chunks_exact_mut(cols)) {
        if yi != 0.0 {
            axpy(yi, x, row);
        }
    }
}

#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_symmetry() {
        for k in -300..=300 {
            let s = k as f64 * 0.1;
            assert!((sigmoid(s) + sigmoid(-s) - 1.0).abs() <= 1e-15, "s={s}");
        }
    }

    #[test]
    fn sigmoid_extremes_do_not_overflow() {
        assert_eq!(sigmoid(700.0), 1.0);
        assert!(sigmoid(-700.0) > 0.0);
        assert!(log_sigmoid(-700.0).is_finite());
        assert!((log_sigmoid(-700.0) + 700.0).abs() < 1e-12);
        assert!(log_sigmoid(700.0) <= 0.0);
    }

    #[test]
    fn softplus_matches_log_sigmoid() {
        for k in -50..=50 {
            let s = k as f64 * 0.7;
            assert!((softplus(s) + log_sigmoid(-s)).abs() < 1e-12);
        }
    }

    #[test]
    fn log_sum_exp_shift() {
        let xs = [1.0, 2.0, -3.0];
        let shifted: Vec<f64> = xs.iter().map(|x| x + 500.0).collect();
        assert!((log_sum_exp(&shifted) - log_sum_exp(&xs) - 500.0).abs() < 1e-12);
    }

    #[test]
    fn transposed_matvec() {
        // [[1,2],[3,4],[5,6]]
        let m = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut out = [0.0; 3];
        matvec_add(&m, 2, &[1.0, -1.0], &mut out);
        assert_eq!(out, [-1.0, -1.0, -1.0]);
        let mut out_t = [0.0; 2];
        matvec_t_add(&m, 2, &[1.0, 0.0, 1.0], &mut out_t);
        assert_eq!(out_t, [6.0, 8.0]);
    }
}
