//! Dense linear-algebra kernels shared by the design pipeline and the
//! simulator: Lyapunov solves, right pseudo-inverses, box-constrained linear
//! programs by vertex enumeration, and reference-model spectral constants.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalue real parts above this are treated as non-Hurwitz.
pub const HURWITZ_TOL: f64 = -1e-12;
/// Relative smallest-singular-value threshold for full-rank checks.
pub const RANK_TOL: f64 = 1e-10;
/// Feasibility tolerance for vertex enumeration.
pub const LP_FEAS_TOL: f64 = 1e-9;

/// Decay/overshoot constants of a stable reference model, used by the
/// convergence-set formulas.
#[derive(Debug, Clone, Copy)]
pub struct SpectralConstants {
    /// Decay rate: negated largest eigenvalue real part.
    pub sigma: f64,
    /// Negated smallest eigenvalue of the symmetric part.
    pub s_min: f64,
    /// Induced 2-norm.
    pub a_norm: f64,
    /// Overshoot constant (3/2)(1 + 4 a/sigma)^(r-1).
    pub m_const: f64,
    pub r_dim: usize,
}

/// Largest eigenvalue real part of a square matrix; `-inf` for 0x0.
pub fn max_re_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return f64::NEG_INFINITY;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Induced 2-norm (largest singular value).
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

fn require_hurwitz(a: &DMatrix<f64>, what: &str) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{what} must be square")));
    }
    let max_re = max_re_eigenvalue(a);
    if max_re >= HURWITZ_TOL {
        return Err(Error::NotHurwitz(format!(
            "{what} has an eigenvalue with real part {max_re:.3e}"
        )));
    }
    Ok(max_re)
}

/// Solve `A' P + P A = -Q` for symmetric positive definite `P` via the
/// vectorized r^2 x r^2 linear system.
pub fn solve_lyapunov(a_stable: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_hurwitz(a_stable, "Lyapunov A")?;
    let r = a_stable.nrows();
    if q.nrows() != r || q.ncols() != r {
        return Err(Error::Dimension(format!(
            "Q must be {r}x{r}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if (q - q.transpose()).amax() > 1e-10 * (1.0 + q.amax()) {
        return Err(Error::NotSpd("Q is not symmetric".into()));
    }
    if q.clone().symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::NotSpd("Q has a non-positive eigenvalue".into()));
    }

    // vec(A'P) = (I (x) A') vec(P), vec(PA) = (A' (x) I) vec(P), column-major.
    let at = a_stable.transpose();
    let eye = DMatrix::<f64>::identity(r, r);
    let system = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_iterator(r * r, (-q).iter().copied());
    let lu = system.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("vectorized Lyapunov system".into()))?;
    let p = DMatrix::from_iterator(r, r, sol.iter().copied());
    // symmetrize away round-off
    Ok((&p + p.transpose()) * 0.5)
}

/// Right pseudo-inverse `B' (B B')^-1` of a full-row-rank matrix.
pub fn right_pseudo_inverse(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sv = b.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if b.nrows() > b.ncols() || smin <= RANK_TOL * smax {
        return Err(Error::RankDeficient(format!(
            "{}x{} matrix with singular values in [{smin:.3e}, {smax:.3e}]",
            b.nrows(),
            b.ncols()
        )));
    }
    let bbt = b * b.transpose();
    let inv = bbt
        .try_inverse()
        .ok_or_else(|| Error::Singular("B B' inverse".into()))?;
    Ok(b.transpose() * inv)
}

fn combinations(pool: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > pool {
        return;
    }
    loop {
        f(&idx);
        // advance lexicographically
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + pool - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Maximize `c' v` over the polytope `{v : lo <= G v <= hi}` by enumerating
/// candidate vertices from all r-subsets of active constraints. Exact at the
/// small dimensions used here (r <= 4); rejects unbounded or empty polytopes.
pub fn box_lp_max(
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
) -> Result<f64> {
    let (m, r) = (g.nrows(), g.ncols());
    if c.len() != r || lo.len() != m || hi.len() != m {
        return Err(Error::Dimension("box_lp_max operands disagree".into()));
    }
    // bounded iff G has full column rank
    let sv = g.clone().svd(false, false).singular_values;
    if m < r || sv.min() <= RANK_TOL * sv.max().max(1.0) {
        return Err(Error::Unbounded);
    }

    // rows: a_i v <= b_i, stacking G v <= hi and -G v <= -lo
    let mut rows = DMatrix::<f64>::zeros(2 * m, r);
    let mut rhs = DVector::<f64>::zeros(2 * m);
    for i in 0..m {
        rows.row_mut(i).copy_from(&g.row(i));
        rhs[i] = hi[i];
        rows.row_mut(m + i).copy_from(&(-g.row(i)));
        rhs[m + i] = -lo[i];
    }

    let scale = rhs.amax().max(1.0);
    let mut best: Option<f64> = None;
    combinations(2 * m, r, &mut |idx| {
        let mut sub = DMatrix::<f64>::zeros(r, r);
        let mut sub_rhs = DVector::<f64>::zeros(r);
        for (k, &i) in idx.iter().enumerate() {
            sub.row_mut(k).copy_from(&rows.row(i));
            sub_rhs[k] = rhs[i];
        }
        if let Some(v) = sub.lu().solve(&sub_rhs) {
            if !v.iter().all(|x| x.is_finite()) {
                return;
            }
            let feasible = (0..2 * m).all(|i| rows.row(i).dot(&v.transpose()) <= rhs[i] + LP_FEAS_TOL * scale);
            if feasible {
                let val = c.dot(&v);
                best = Some(best.map_or(val, |b: f64| b.max(val)));
            }
        }
    });
    best.ok_or(Error::EmptyPolytope)
}

/// Spectral constants of a Hurwitz reference-model matrix.
pub fn spectral_constants(a_m: &DMatrix<f64>) -> Result<SpectralConstants> {
    let max_re = require_hurwitz(a_m, "A_m")?;
    let sigma = -max_re;
    let sym = (a_m + a_m.transpose()) * 0.5;
    let s_min = -sym.symmetric_eigenvalues().min();
    let a_norm = spectral_norm(a_m);
    let r_dim = a_m.nrows();
    let m_const = 1.5 * (1.0 + 4.0 * a_norm / sigma).powi(r_dim as i32 - 1);
    Ok(SpectralConstants {
        sigma,
        s_min,
        a_norm,
        m_const,
        r_dim,
    })
}

/// Certify constants `(k, xi)` with `||exp(A t)|| <= k exp(-xi t)`.
///
/// `xi` is 99% of the true decay rate; `k` is the maximum of
/// `||exp(A t)|| exp(xi t)` over a dense grid on `[0, 20/xi]`, inflated by 5%.
pub fn transition_decay_constants(a11: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a11.is_empty() {
        // no uncontrolled block: the bound is vacuous
        return Ok((0.0, f64::INFINITY));
    }
    let max_re = require_hurwitz(a11, "A_11")?;
    let xi = 0.99 * (-max_re);
    let step = xi / 100.0;
    let mut k_raw: f64 = 0.0;
    let mut t = 0.0;
    while t <= 20.0 / xi {
        let norm = spectral_norm(&(a11 * t).exp());
        k_raw = k_raw.max(norm * (xi * t).exp());
        t += step;
    }
    Ok((1.05 * k_raw, xi))
}
