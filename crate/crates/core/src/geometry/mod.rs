//! Rotationally symmetric funnel/cusp/boundary surfaces as conformal
//! weights on a single cylinder chart `(s, θ) ∈ [s_min, s_max] × S¹`.
//!
//! The metric is `w(s) (ds² + dθ²)` with `w = e^{2φ}`. The compact core
//! occupies `s ∈ [0, core_length]`; the left end lives at `s < 0` and the
//! right end at `s > core_length`. Each end is described in its own outward
//! coordinate `τ` (`τ = -s` on the left, `τ = s - core_length` on the right).

mod profile;
pub mod surgery;

pub use profile::{build_weight, max_weight_ratio, relative_area, MetricProfile, TruncationNote};
pub use surgery::{filled_cap_weight, surgery_factor_boundary, surgery_factor_point};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary condition imposed where the chart is truncated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    Dirichlet,
    Neumann,
    /// Smooth-centre condition: Neumann for the rotation-invariant mode,
    /// Dirichlet for every other Fourier mode (`u ~ r^{|m|}`).
    Regular,
}

impl EndCondition {
    /// Whether the endpoint value is an unknown (Neumann) for Fourier mode `m`.
    pub fn is_free(self, m: u32) -> bool {
        match self {
            EndCondition::Dirichlet => false,
            EndCondition::Neumann => true,
            EndCondition::Regular => m == 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    Cusp,
    Funnel,
    DirichletBoundary,
    FilledCap,
}

/// Model for one end of the surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndModel {
    /// Cusp `(ds² + dθ²)/σ²` in the cusp coordinate `σ = junction + τ`.
    Cusp { junction: f64 },
    /// Cusp filled in by the point surgery with parameter `epsilon`.
    FilledCap { junction: f64, epsilon: f64 },
    /// Funnel `e^c (dy² + dθ²)/y²` with `y = scale - τ`; infinity is `y = 0`.
    Funnel { constant: f64, scale: f64 },
    /// Flat collar `e^f (dr² + dθ²)` with `r = collar_length - τ`; the
    /// Dirichlet boundary circle is `r = 0`.
    DirichletBoundary { collar_exponent: f64, collar_length: f64 },
}

impl EndModel {
    pub fn cusp() -> Self {
        EndModel::Cusp { junction: 2.0 }
    }

    pub fn filled_cap(epsilon: f64) -> Self {
        EndModel::FilledCap { junction: 2.0, epsilon }
    }

    pub fn funnel() -> Self {
        EndModel::Funnel { constant: 0.0, scale: 1.0 }
    }

    pub fn boundary() -> Self {
        EndModel::DirichletBoundary { collar_exponent: 0.0, collar_length: 1.0 }
    }

    pub fn kind(&self) -> EndKind {
        match self {
            EndModel::Cusp { .. } => EndKind::Cusp,
            EndModel::FilledCap { .. } => EndKind::FilledCap,
            EndModel::Funnel { .. } => EndKind::Funnel,
            EndModel::DirichletBoundary { .. } => EndKind::DirichletBoundary,
        }
    }

    /// Surgery parameter ε of a filled cap; 0 for every other end.
    pub fn cap_epsilon(&self) -> f64 {
        match *self {
            EndModel::FilledCap { epsilon, .. } => epsilon,
            _ => 0.0,
        }
    }

    /// Locally constant value of the conformal exponent at infinity of a funnel.
    pub fn funnel_constant(&self) -> f64 {
        match *self {
            EndModel::Funnel { constant, .. } => constant,
            EndModel::DirichletBoundary { collar_exponent, .. } => collar_exponent,
            _ => 0.0,
        }
    }

    fn cusp_junction(&self) -> Option<f64> {
        match *self {
            EndModel::Cusp { junction } | EndModel::FilledCap { junction, .. } => Some(junction),
            _ => None,
        }
    }

    /// Unperturbed log-weight `2φ` of the end model at outward coordinate τ.
    /// Valid on the end itself and on the blend zone inside the core.
    pub(crate) fn base_log_weight(&self, tau: f64) -> f64 {
        match *self {
            EndModel::Cusp { junction } | EndModel::FilledCap { junction, .. } => -2.0 * (junction + tau).ln(),
            EndModel::Funnel { constant, scale } => constant - 2.0 * (scale - tau).ln(),
            EndModel::DirichletBoundary { collar_exponent, .. } => collar_exponent,
        }
    }

    fn validate(&self, blend_width: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match *self {
            EndModel::Cusp { junction } | EndModel::FilledCap { junction, .. } => {
                if !(junction > blend_width) {
                    return bad(format!("cusp junction {junction} must exceed the blend width {blend_width}"));
                }
                let eps = self.cap_epsilon();
                if !(0.0..=1.0).contains(&eps) {
                    return bad(format!("cap epsilon {eps} outside [0, 1]"));
                }
            }
            EndModel::Funnel { constant, scale } => {
                if !(scale > 0.0) || !constant.is_finite() {
                    return bad(format!("funnel needs a positive scale and finite constant, got {scale}, {constant}"));
                }
            }
            EndModel::DirichletBoundary { collar_exponent, collar_length } => {
                if !(collar_length >= 0.5) || !collar_exponent.is_finite() {
                    return bad(format!("boundary collar must have length >= 1/2, got {collar_length}"));
                }
            }
        }
        Ok(())
    }
}

/// Compactly supported C² perturbation `amplitude · (1 - x²)³` of `2φ`,
/// with `x = (s - center)/radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpSpec {
    pub fn flat(center: f64) -> Self {
        BumpSpec { center, radius: 1.0, amplitude: 0.0 }
    }

    #[inline]
    pub fn log_perturbation(&self, s: f64) -> f64 {
        self.amplitude * surgery::bump_profile((s - self.center) / self.radius)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Conformal change `e^{ψ_F}` supported in the funnel ends: `ψ_F = constant`
/// for `y ≤ inner`, 0 for `y ≥ outer`, smoothstep in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunnelFactor {
    pub constant: f64,
    pub inner: f64,
    pub outer: f64,
}

impl FunnelFactor {
    #[inline]
    pub(crate) fn log_factor(&self, y: f64) -> f64 {
        self.constant * (1.0 - surgery::smoothstep((y - self.inner) / (self.outer - self.inner)))
    }
}

/// Declarative description of a surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub left: EndModel,
    pub right: EndModel,
    pub core_length: f64,
    #[serde(default = "default_blend")]
    pub blend_width: f64,
    pub bump: BumpSpec,
    #[serde(default)]
    pub boundary_surgery_epsilon: Option<f64>,
    #[serde(default)]
    pub funnel_factor: Option<FunnelFactor>,
}

fn default_blend() -> f64 {
    1.0
}

impl SurfaceSpec {
    /// Funnel on the left, cusp on the right, flat core of length 6.
    pub fn cusp_funnel() -> Self {
        SurfaceSpec {
            left: EndModel::funnel(),
            right: EndModel::cusp(),
            core_length: 6.0,
            blend_width: 1.0,
            bump: BumpSpec::flat(2.5),
            boundary_surgery_epsilon: None,
            funnel_factor: None,
        }
    }

    /// Flat cylinder `[0, length] × S¹` (in the chart shifted so the core
    /// starts at 0) with Dirichlet circles at both ends. Needs `length > 2`.
    pub fn flat_cylinder(length: f64) -> Self {
        let collar = EndModel::DirichletBoundary { collar_exponent: 0.0, collar_length: 0.5 };
        let core = length - 1.0;
        SurfaceSpec {
            left: collar,
            right: collar,
            core_length: core,
            blend_width: core / 8.0,
            bump: BumpSpec { center: core / 2.0, radius: core / 8.0, amplitude: 0.0 },
            boundary_surgery_epsilon: None,
            funnel_factor: None,
        }
    }

    pub fn with_bump(mut self, bump: BumpSpec) -> Self {
        self.bump = bump;
        self
    }

    pub fn with_right(mut self, end: EndModel) -> Self {
        self.right = end;
        self
    }

    pub fn with_left(mut self, end: EndModel) -> Self {
        self.left = end;
        self
    }

    /// Outer edge of the left-end support and inner edge of the right-end
    /// support (blend zones plus any surgery region reaching into the core).
    pub fn end_supports(&self) -> (f64, f64) {
        let b = self.blend_width;
        let l = self.core_length;
        let ln2 = std::f64::consts::LN_2;
        let mut left = b;
        let mut right = l - b;
        if let Some(j) = self.left.cusp_junction() {
            left = left.max(j - ln2);
        }
        if let Some(j) = self.right.cusp_junction() {
            right = right.min(l - j + ln2);
        }
        (left, right)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.core_length > 0.0) || !(self.blend_width > 0.0) {
            return bad("core length and blend width must be positive".into());
        }
        if 2.0 * self.blend_width >= self.core_length {
            return bad("blend zones overlap: core too short".into());
        }
        self.left.validate(self.blend_width)?;
        self.right.validate(self.blend_width)?;
        if !(self.bump.radius > 0.0) || !self.bump.amplitude.is_finite() {
            return bad("bump radius must be positive and amplitude finite".into());
        }
        let (lo, hi) = self.bump.support();
        let (left_edge, right_edge) = self.end_supports();
        if lo <= left_edge || hi >= right_edge {
            return bad(format!(
                "bump support [{lo}, {hi}] overlaps the end supports (free core is ({left_edge}, {right_edge}))"
            ));
        }
        if let Some(eps) = self.boundary_surgery_epsilon {
            if !(0.0..=1.0).contains(&eps) {
                return bad(format!("boundary surgery epsilon {eps} outside [0, 1]"));
            }
            let has_boundary = [self.left, self.right]
                .iter()
                .any(|e| e.kind() == EndKind::DirichletBoundary);
            if !has_boundary {
                return bad("boundary surgery requested without a Dirichlet boundary end".into());
            }
        }
        if let Some(ff) = self.funnel_factor {
            let funnels: Vec<f64> = [self.left, self.right]
                .iter()
                .filter_map(|e| match *e {
                    EndModel::Funnel { scale, .. } => Some(scale),
                    _ => None,
                })
                .collect();
            if funnels.is_empty() {
                return bad("funnel factor requested without a funnel end".into());
            }
            if !(ff.inner > 0.0 && ff.inner < ff.outer) || funnels.iter().any(|&s| ff.outer > s) {
                return bad("funnel factor transition must satisfy 0 < inner < outer <= scale".into());
            }
        }
        Ok(())
    }
}

/// Truncation radii for the non-compact ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Truncation {
    /// Metric distance from the core at which funnels are cut off.
    pub funnel_distance: f64,
    /// Cusp coordinate σ at which cusps are cut off.
    pub cusp_tip: f64,
    /// Cusp coordinate σ at which filled caps (ε > 0) are cut off.
    pub cap_tip: f64,
    /// Condition at a truncated cusp.
    pub cusp_condition: EndCondition,
    /// Metric distance (in the ε = 0 funnel picture) from `r = 1/4` at which a
    /// boundary collar undergoing surgery is cut off.
    pub boundary_distance: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            funnel_distance: 3.0,
            cusp_tip: 40.0,
            cap_tip: 14.0,
            cusp_condition: EndCondition::Regular,
            boundary_distance: 3.0,
        }
    }
}

impl Truncation {
    pub fn validate(&self) -> Result<()> {
        if !(self.funnel_distance > 0.0 && self.cusp_tip > 0.0 && self.cap_tip > 0.0 && self.boundary_distance > 0.0) {
            return Err(Error::InvalidSpec("truncation extents must be positive".into()));
        }
        Ok(())
    }
}
