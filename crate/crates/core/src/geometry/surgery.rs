//! Conformal surgery factors and the smooth cutoffs they are built from.

use crate::error::{Error, Result};

/// Quintic smoothstep `10u^3 - 15u^4 + 6u^5`, clamped to `[0, 1]`.
#[inline]
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// C² cutoff equal to 1 on `[0, 1/4]` and 0 on `[1/2, ∞)`.
#[inline]
pub fn cutoff(r: f64) -> f64 {
    1.0 - smoothstep((r - 0.25) / 0.25)
}

/// C² bump `(1 - x²)³` on `|x| < 1`, zero outside.
#[inline]
pub fn bump_profile(x: f64) -> f64 {
    let q = 1.0 - x * x;
    if q <= 0.0 {
        0.0
    } else {
        q * q * q
    }
}

fn check_args(epsilon: f64, r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) || epsilon.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "surgery parameter must lie in [0, 1], got {epsilon}"
        )));
    }
    if r < 0.0 || r.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "radial coordinate must be non-negative, got {r}"
        )));
    }
    if epsilon == 0.0 && r == 0.0 {
        return Err(Error::SurgeryAtTip);
    }
    Ok(())
}

/// Conformal factor ψ(ε, r) that fills in a cusp at a marked point.
///
/// `r` is the Euclidean radius in the punctured-disk chart. For ε > 0 the
/// product ψ / (r² log² r) stays finite as r → 0, so the filled metric is
/// smooth at the centre. ψ(0, r) is identically 1.
pub fn surgery_factor_point(epsilon: f64, r: f64) -> Result<f64> {
    check_args(epsilon, r)?;
    if epsilon == 0.0 {
        return Ok(1.0);
    }
    let sigma = cutoff(r);
    if sigma == 0.0 {
        return Ok(1.0);
    }
    Ok(sigma * point_ratio(epsilon, r) + (1.0 - sigma))
}

/// `r² log² r / (ε² + (ε² + r²) log² √(ε² + r²))`, the bracket of the point factor.
#[inline]
fn point_ratio(epsilon: f64, r: f64) -> f64 {
    let e2 = epsilon * epsilon;
    let rho2 = e2 + r * r;
    let l = 0.5 * rho2.ln();
    let num = if r == 0.0 { 0.0 } else { let lr = r.ln(); r * r * lr * lr };
    num / (e2 + rho2 * l * l)
}

/// Filled-cap weight on the cylinder chart, `ψ(ε, e^{-σ}) / σ²`, for the cusp
/// coordinate σ > 0. Evaluated without forming the product so that it stays
/// accurate deep inside the cap where both factors are extreme.
pub fn filled_cap_weight(epsilon: f64, sigma_c: f64) -> f64 {
    let cusp = 1.0 / (sigma_c * sigma_c);
    if epsilon == 0.0 {
        return cusp;
    }
    let r = (-sigma_c).exp();
    let cut = cutoff(r);
    if cut == 0.0 {
        return cusp;
    }
    let e2 = epsilon * epsilon;
    let rho2 = e2 + r * r;
    let l = 0.5 * rho2.ln();
    // r² log² r / σ² = r² exactly, since log r = -σ.
    let capped = r * r / (e2 + rho2 * l * l);
    cut * capped + (1.0 - cut) * cusp
}

/// Conformal factor ψ(ε, r) that pushes a Dirichlet boundary circle out to a
/// hyperbolic funnel.
///
/// `r` is the collar coordinate (boundary at r = 0) and `f_value` the local
/// log-weight `f` of the metric `e^f (dr² + dθ²)`. The factor is
/// `exp(η(ε) ζ(r) [w - log(ε² + r²)])` with `w = -f`, so that
/// `(ε² + r²) ψ = e^w` wherever both cutoffs are 1, and ψ = 1 once ε > 1/2
/// or r > 1/2.
pub fn surgery_factor_boundary(epsilon: f64, r: f64, f_value: f64) -> Result<f64> {
    check_args(epsilon, r)?;
    Ok(boundary_factor_unchecked(epsilon, r, f_value))
}

#[inline]
pub(crate) fn boundary_log_factor(epsilon: f64, r: f64, f_value: f64) -> f64 {
    let gate = cutoff(epsilon) * cutoff(r);
    if gate == 0.0 {
        return 0.0;
    }
    gate * (-f_value - (epsilon * epsilon + r * r).ln())
}

#[inline]
fn boundary_factor_unchecked(epsilon: f64, r: f64, f_value: f64) -> f64 {
    boundary_log_factor(epsilon, r, f_value).exp()
}
