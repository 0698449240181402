//! Recursion-free reference values: Gram systems under `dA` and a
//! moment-based Gram–Schmidt.

use crate::divisor::DivisorSpec;
use crate::error::{Error, Result};
use crate::linear::{apply_connection_sequence, ConnectionCoefficients};
use crate::measure::MeasureSpec;
use crate::quadrature::{integrate_adaptive_many, AdaptiveOptions};
use crate::recurrence::RecurrenceCoefficients;
use crate::scalar::{Backend, Scalar};

/// Largest degree accepted by [`gram_schmidt_moments`].
pub const MAX_HANKEL_DEGREE: usize = 12;

/// Minimum precision used for Hankel solves.
pub const HANKEL_PRECISION: u32 = 256;

/// `G_ij = ∫ b_i b_j dA` for `lo ≤ i, j ≤ hi`, returned as a dense
/// `(hi-lo+1)²` matrix indexed from `lo`.
pub fn gram_block(
    rc: &RecurrenceCoefficients,
    measure: &MeasureSpec,
    divisor: &DivisorSpec,
    lo: usize,
    hi: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<Vec<Scalar>>> {
    assert!(lo <= hi, "empty Gram block");
    let a = measure.modified(divisor)?;
    let b = Backend::float(opts.precision);
    let table = rc.materialize(hi, b)?;
    let size = hi - lo + 1;
    let pairs: Vec<(usize, usize)> = (0..size).flat_map(|i| (i..size).map(move |j| (i, j))).collect();
    let norms = rc.squared_norms(hi)?;
    let scales = pairs
        .iter()
        .map(|&(i, j)| {
            let s = (norms[lo + i].to_f64() * norms[lo + j].to_f64()).sqrt();
            b.from_f64(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let f = |x: &Scalar| {
        let vals = table.eval_monic_sequence(hi, x)?;
        Ok(pairs.iter().map(|&(i, j)| &vals[lo + i] * &vals[lo + j]).collect())
    };
    let flat = integrate_adaptive_many(&a, &f, &scales, opts)?;
    let mut g = vec![vec![b.zero(); size]; size];
    for (&(i, j), v) in pairs.iter().zip(flat) {
        g[i][j] = v.clone();
        g[j][i] = v;
    }
    Ok(g)
}

/// The `m × m` Gram matrix `G_ij = ∫ b_i b_j dA`, `0 ≤ i, j < m`.
pub fn gram_matrix(
    rc: &RecurrenceCoefficients,
    measure: &MeasureSpec,
    divisor: &DivisorSpec,
    m: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<Vec<Scalar>>> {
    assert!(m >= 1, "Gram matrix needs m >= 1");
    gram_block(rc, measure, divisor, 0, m - 1, opts)
}

/// Connection coefficients `c_n^{(1)}..c_n^{(k)}`, `k = min(r, n)`, of
/// `a_n = b_n + Σ_j c_n^{(j)} b_{n-j}` from a Gram block `g` indexed from `lo`.
fn solve_from_gram(g: &[Vec<Scalar>], lo: usize, r: usize, n: usize) -> Result<Vec<Scalar>> {
    let k = r.min(n);
    if k == 0 {
        return Ok(Vec::new());
    }
    let at = |i: usize, j: usize| g[i - lo][j - lo].clone();
    let matrix: Vec<Vec<Scalar>> = (1..=k).map(|i| (1..=k).map(|j| at(n - j, n - i)).collect()).collect();
    let rhs: Vec<Scalar> = (1..=k).map(|i| -at(n, n - i)).collect();
    solve_linear(matrix, rhs).map_err(|e| match e {
        Error::OracleSingular(msg) => Error::OracleSingular(format!("degree {n}: {msg}")),
        other => other,
    })
}

/// Solves `⟨a_n, b_{n-i}⟩_A = 0`, `i = 1..min(r, n)`.
pub fn direct_connection(
    rc: &RecurrenceCoefficients,
    measure: &MeasureSpec,
    divisor: &DivisorSpec,
    r: usize,
    n: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<Scalar>> {
    assert!(r >= 1, "order must be at least 1");
    let lo = n.saturating_sub(r);
    let g = gram_block(rc, measure, divisor, lo, n, opts)?;
    solve_from_gram(&g, lo, r, n)
}

/// [`direct_connection`] for every `n = 1..=n_max` from one Gram matrix.
pub fn direct_connection_table(
    rc: &RecurrenceCoefficients,
    measure: &MeasureSpec,
    divisor: &DivisorSpec,
    r: usize,
    n_max: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<Vec<Scalar>>> {
    let g = gram_matrix(rc, measure, divisor, n_max + 1, opts)?;
    (1..=n_max).map(|n| solve_from_gram(&g, 0, r, n)).collect()
}

/// `|∫ a_i a_j dA| / √(∫ a_i² dA ∫ a_j² dA)` for `0 ≤ i, j ≤ m`, with
/// `a_n = b_n + κ_n b_{n-1} (+ λ_n b_{n-2})`. The diagonal is 1.
pub fn orthogonality_defects(
    rc: &RecurrenceCoefficients,
    cc: &ConnectionCoefficients,
    measure: &MeasureSpec,
    divisor: &DivisorSpec,
    m: usize,
    opts: &AdaptiveOptions,
) -> Result<Vec<Vec<f64>>> {
    let a = measure.modified(divisor)?;
    let b = Backend::float(opts.precision);
    let table = rc.materialize(m, b)?;
    let to_float = |v: &[Scalar]| v.iter().take(m).map(|x| x.to_backend(b)).collect::<Result<Vec<_>>>();
    let ccf = match cc.order() {
        1 => ConnectionCoefficients::linear(to_float(cc.kappas())?),
        _ => ConnectionCoefficients::quadratic(to_float(cc.kappas())?, to_float(cc.lambdas())?),
    };
    let size = m + 1;
    let pairs: Vec<(usize, usize)> = (0..size).flat_map(|i| (i..size).map(move |j| (i, j))).collect();
    let norms = rc.squared_norms(m)?;
    let scales = pairs
        .iter()
        .map(|&(i, j)| b.from_f64((norms[i].to_f64() * norms[j].to_f64()).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let f = |x: &Scalar| {
        let vals = apply_connection_sequence(&table, &ccf, m, x)?;
        Ok(pairs.iter().map(|&(i, j)| &vals[i] * &vals[j]).collect())
    };
    let flat = integrate_adaptive_many(&a, &f, &scales, opts)?;
    let mut g = vec![vec![0.0; size]; size];
    let mut diag = vec![0.0; size];
    for (&(i, j), v) in pairs.iter().zip(&flat) {
        if i == j {
            diag[i] = v.to_f64();
        }
    }
    for (&(i, j), v) in pairs.iter().zip(&flat) {
        let r = if i == j { 1.0 } else { v.abs().to_f64() / (diag[i] * diag[j]).sqrt() };
        g[i][j] = r;
        g[j][i] = r;
    }
    Ok(g)
}

/// Largest off-diagonal entry of [`orthogonality_defects`].
pub fn max_orthogonality_defect(defects: &[Vec<f64>]) -> f64 {
    defects
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, v)| *v))
        .fold(0.0, f64::max)
}

/// Moments `μ_k = ∫ x^k dA`, `k = 0..count-1`.
pub fn modified_moments(measure: &MeasureSpec, divisor: &DivisorSpec, count: usize, opts: &AdaptiveOptions) -> Result<Vec<Scalar>> {
    let a = measure.modified(divisor)?;
    let f = |x: &Scalar| {
        let mut out = Vec::with_capacity(count);
        let mut p = x.int_like(1);
        for _ in 0..count {
            out.push(p.clone());
            p = p * x;
        }
        Ok(out)
    };
    integrate_adaptive_many(&a, &f, &[], opts)
}

/// Monic degree-`n` polynomial (constant term first) orthogonal to
/// `1, x, ..., x^{n-1}` under the moment functional `μ_0..μ_{2n}`.
///
/// Rational moments are solved exactly; float moments at no less than
/// [`HANKEL_PRECISION`] bits.
pub fn gram_schmidt_moments(moments: &[Scalar], n: usize) -> Result<Vec<Scalar>> {
    if n > MAX_HANKEL_DEGREE {
        return Err(Error::OracleSingular(format!(
            "Hankel degree {n} exceeds the conditioning guard {MAX_HANKEL_DEGREE}"
        )));
    }
    if moments.len() < 2 * n + 1 {
        return Err(Error::InsufficientCoefficients {
            what: "moment",
            index: 2 * n,
            available: moments.len(),
        });
    }
    let backend = moments.iter().fold(Backend::Rational, |acc, m| acc.join(m.backend()));
    let backend = match backend {
        Backend::Rational => backend,
        Backend::Float { precision } => Backend::float(precision.max(HANKEL_PRECISION)),
    };
    let mu = moments
        .iter()
        .map(|m| m.to_backend(backend))
        .collect::<Result<Vec<_>>>()?;
    if n == 0 {
        return Ok(vec![backend.one()]);
    }
    let matrix: Vec<Vec<Scalar>> = (0..n).map(|i| (0..n).map(|j| mu[i + j].clone()).collect()).collect();
    let rhs: Vec<Scalar> = (0..n).map(|i| -&mu[i + n]).collect();
    let mut coeffs = solve_linear(matrix, rhs)?;
    coeffs.push(backend.one());
    Ok(coeffs)
}

/// Gaussian elimination with partial pivoting.
///
/// A pivot that is exactly zero, or below `n · 2^{-p/2}` times the largest
/// entry of its column in the float backend, is reported as singular.
pub fn solve_linear(mut a: Vec<Vec<Scalar>>, mut b: Vec<Scalar>) -> Result<Vec<Scalar>> {
    let n = b.len();
    assert_eq!(a.len(), n, "matrix and right-hand side sizes differ");
    for col in 0..n {
        let column_max = (col..n)
            .map(|r| a[r][col].abs())
            .reduce(Scalar::max)
            .expect("nonempty column");
        let pivot_row = (col..n)
            .find(|&r| a[r][col].abs() == column_max)
            .expect("maximum is attained");
        let tiny = match column_max.backend().precision() {
            None => column_max.is_zero(),
            Some(p) => {
                let scale = (0..n)
                    .flat_map(|r| a[r].iter().map(Scalar::abs).collect::<Vec<_>>())
                    .reduce(Scalar::max)
                    .expect("nonempty matrix");
                column_max.is_zero()
                    || column_max.to_f64() <= n as f64 * 2f64.powi(-(p as i32) / 2) * scale.to_f64()
            }
        };
        if tiny {
            return Err(Error::OracleSingular(format!("pivot {col} vanishes")));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..n {
            let factor = &a[r][col] / &a[col][col];
            if factor.is_zero() {
                continue;
            }
            for c in col..n {
                let v = &a[r][c] - &factor * &a[col][c];
                a[r][c] = v;
            }
            let v = &b[r] - &factor * &b[col];
            b[r] = v;
        }
    }
    let mut x = vec![b[0].int_like(0); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc = acc - &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Ok(x)
}
