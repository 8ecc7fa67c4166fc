//! Element-wise non-symmetric projection operator and its convex barrier
//! function. Adaptive parameters updated through [`proj_matrix`] stay inside
//! the per-element boxes, including boxes that are not symmetric about zero.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Per-element parameter boxes `[theta_min, theta_max]` with projection
/// tolerances `zeta`, all `r x m`.
#[derive(Debug, Clone)]
pub struct ProjectionBounds {
    pub theta_min: DMatrix<f64>,
    pub theta_max: DMatrix<f64>,
    pub zeta: DMatrix<f64>,
}

impl ProjectionBounds {
    /// Validates `theta_min < theta_max` and `0 < zeta < 0.5 (theta_max - theta_min)`.
    pub fn new(
        theta_min: DMatrix<f64>,
        theta_max: DMatrix<f64>,
        zeta: DMatrix<f64>,
    ) -> Result<Self> {
        if theta_min.shape() != theta_max.shape() || theta_min.shape() != zeta.shape() {
            return Err(Error::Dimension("projection bound shapes disagree".into()));
        }
        for i in 0..theta_min.nrows() {
            for j in 0..theta_min.ncols() {
                let w = theta_max[(i, j)] - theta_min[(i, j)];
                let z = zeta[(i, j)];
                if !(w > 0.0) || !(z > 0.0) || !(z < 0.5 * w) {
                    return Err(Error::InvalidBounds(format!(
                        "element ({i},{j}): width {w:.3e}, zeta {z:.3e}"
                    )));
                }
            }
        }
        Ok(Self {
            theta_min,
            theta_max,
            zeta,
        })
    }

    /// Box centered at `center` with per-element half-widths `half` and
    /// `zeta = zeta_frac * width`.
    pub fn centered(center: &DMatrix<f64>, half: &DMatrix<f64>, zeta_frac: f64) -> Result<Self> {
        let theta_min = center - half;
        let theta_max = center + half;
        let zeta = (&theta_max - &theta_min) * zeta_frac;
        Self::new(theta_min, theta_max, zeta)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.theta_min.shape()
    }

    /// True when every element lies in `[theta_min, theta_max]` within `tol`.
    pub fn contains(&self, theta: &DMatrix<f64>, tol: f64) -> bool {
        theta.shape() == self.shape()
            && theta
                .iter()
                .enumerate()
                .all(|(k, &t)| t >= self.theta_min[k] - tol && t <= self.theta_max[k] + tol)
    }

    /// True when every element lies strictly inside the box shrunk by `zeta`.
    pub fn contains_shrunk(&self, theta: &DMatrix<f64>) -> bool {
        theta.shape() == self.shape()
            && theta.iter().enumerate().all(|(k, &t)| {
                t > self.theta_min[k] + self.zeta[k] && t < self.theta_max[k] - self.zeta[k]
            })
    }

    /// Clamp `theta` into the box in place, returning how many elements moved.
    /// Used as the post-integration safety clamp.
    pub fn clamp(&self, theta: &mut DMatrix<f64>) -> usize {
        let mut moved = 0;
        for k in 0..theta.len() {
            let c = theta[k].clamp(self.theta_min[k], self.theta_max[k]);
            if c != theta[k] {
                theta[k] = c;
                moved += 1;
            }
        }
        moved
    }

    /// Root-sum-square of `(width - zeta)` over all elements: the worst-case
    /// Frobenius distance to an ideal parameter inside the shrunk box.
    pub fn theta_tilde_max(&self) -> f64 {
        self.theta_min
            .iter()
            .zip(self.theta_max.iter())
            .zip(self.zeta.iter())
            .map(|((&lo, &hi), &z)| (hi - lo - z).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Worst-case Frobenius distance to an ideal parameter that lies inside
    /// the element-wise boxes `[star_min, star_max]` but possibly outside this
    /// projection box.
    pub fn theta_tilde_cap(&self, star_min: &DMatrix<f64>, star_max: &DMatrix<f64>) -> f64 {
        self.theta_min
            .iter()
            .zip(self.theta_max.iter())
            .zip(star_min.iter().zip(star_max.iter()))
            .map(|((&lo, &hi), (&slo, &shi))| (shi - lo).abs().max((slo - hi).abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn check_element(lo: f64, hi: f64, z: f64) -> Result<()> {
    let denom = (hi - lo - z) * z;
    if denom.abs() < 1e-300 {
        return Err(Error::InvalidBounds(format!(
            "degenerate convex function denominator for box [{lo}, {hi}], zeta {z}"
        )));
    }
    Ok(())
}

/// Convex barrier `f(theta)`: zero at `theta_min + zeta` and `theta_max - zeta`,
/// one at the box edges.
pub fn convex_f(theta: f64, theta_min: f64, theta_max: f64, zeta: f64) -> Result<f64> {
    check_element(theta_min, theta_max, zeta)?;
    Ok((theta - theta_min - zeta) * (theta - theta_max + zeta)
        / ((theta_max - theta_min - zeta) * zeta))
}

/// Analytic derivative of [`convex_f`].
pub fn convex_f_grad(theta: f64, theta_min: f64, theta_max: f64, zeta: f64) -> Result<f64> {
    check_element(theta_min, theta_max, zeta)?;
    Ok((2.0 * theta - theta_min - theta_max) / ((theta_max - theta_min - zeta) * zeta))
}

/// Element-wise projection: scales the update by `(1 - f)` only when the
/// barrier is active (`f > 0`) and the update drives outward (`Y f' > 0`).
pub fn proj_element(theta: f64, y: f64, theta_min: f64, theta_max: f64, zeta: f64) -> Result<f64> {
    let f = convex_f(theta, theta_min, theta_max, zeta)?;
    let g = convex_f_grad(theta, theta_min, theta_max, zeta)?;
    if f > 0.0 && y * g > 0.0 {
        Ok(y * (1.0 - f))
    } else {
        Ok(y)
    }
}

/// Element-wise projection of a full update matrix.
pub fn proj_matrix(
    theta_v: &DMatrix<f64>,
    y: &DMatrix<f64>,
    bounds: &ProjectionBounds,
) -> Result<DMatrix<f64>> {
    if theta_v.shape() != bounds.shape() || y.shape() != bounds.shape() {
        return Err(Error::Dimension("proj_matrix shapes disagree".into()));
    }
    let mut out = y.clone();
    for k in 0..out.len() {
        out[k] = proj_element(
            theta_v[k],
            y[k],
            bounds.theta_min[k],
            bounds.theta_max[k],
            bounds.zeta[k],
        )?;
    }
    Ok(out)
}
