use std::f64::consts::{LN_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::surgery::{boundary_log_factor, filled_cap_weight, smoothstep};
use super::{EndCondition, EndModel, SurfaceSpec, Truncation};
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Where and how each end was cut off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationNote {
    /// Outward extent τ of the left end (the chart starts at `s = -left_extent`).
    pub left_extent: f64,
    /// Outward extent τ of the right end (the chart stops at `s = core_length + right_extent`).
    pub right_extent: f64,
    pub left_condition: EndCondition,
    pub right_condition: EndCondition,
    pub truncation: Truncation,
}

/// A conformal weight `w(s) = e^{2φ(s)}` on a truncated cylinder chart.
///
/// The profile stores its declarative spec and evaluates the weight on
/// demand, so it is cheap to clone and share between workers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricProfile {
    spec: SurfaceSpec,
    note: TruncationNote,
    s_min: f64,
    s_max: f64,
}

fn end_truncation(end: &EndModel, spec: &SurfaceSpec, trunc: &Truncation) -> (f64, EndCondition) {
    match *end {
        EndModel::Funnel { constant, scale } => {
            let y_t = scale * (-trunc.funnel_distance * (-0.5 * constant).exp()).exp();
            (scale - y_t, EndCondition::Dirichlet)
        }
        EndModel::Cusp { junction } => (trunc.cusp_tip - junction, trunc.cusp_condition),
        EndModel::FilledCap { junction, epsilon } => {
            if epsilon > 0.0 {
                (trunc.cap_tip - junction, EndCondition::Regular)
            } else {
                (trunc.cusp_tip - junction, trunc.cusp_condition)
            }
        }
        EndModel::DirichletBoundary { collar_length, .. } => match spec.boundary_surgery_epsilon {
            None => (collar_length, EndCondition::Dirichlet),
            Some(_) => (collar_length - 0.25 * (-trunc.boundary_distance).exp(), EndCondition::Dirichlet),
        },
    }
}

/// Assembles the weight of `spec` and truncates its non-compact ends.
pub fn build_weight(spec: &SurfaceSpec, trunc: &Truncation) -> Result<MetricProfile> {
    spec.validate()?;
    trunc.validate()?;
    let (left_extent, left_condition) = end_truncation(&spec.left, spec, trunc);
    let (right_extent, right_condition) = end_truncation(&spec.right, spec, trunc);
    if !(left_extent > 0.0 && right_extent > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "truncation leaves an empty end: extents {left_extent}, {right_extent}"
        )));
    }
    let profile = MetricProfile {
        spec: *spec,
        note: TruncationNote {
            left_extent,
            right_extent,
            left_condition,
            right_condition,
            truncation: *trunc,
        },
        s_min: -left_extent,
        s_max: spec.core_length + right_extent,
    };
    Ok(profile)
}

impl MetricProfile {
    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn note(&self) -> &TruncationNote {
        &self.note
    }

    pub fn chart(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    pub fn conditions(&self) -> (EndCondition, EndCondition) {
        (self.note.left_condition, self.note.right_condition)
    }

    pub fn core(&self) -> (f64, f64) {
        (0.0, self.spec.core_length)
    }

    /// Same weight on a sub-chart `[s_min, s_max]` that still contains the core.
    /// Used to snap truncation points onto grid nodes.
    pub fn with_chart(&self, s_min: f64, s_max: f64) -> Result<Self> {
        let tol = 1e-12 * (1.0 + self.s_max.abs().max(self.s_min.abs()));
        if s_min < self.s_min - tol || s_max > self.s_max + tol || s_min >= 0.0 || s_max <= self.spec.core_length {
            return Err(Error::InvalidArgument(format!(
                "chart [{s_min}, {s_max}] is not a sub-chart of [{}, {}] containing the core",
                self.s_min, self.s_max
            )));
        }
        let mut out = self.clone();
        out.s_min = s_min;
        out.s_max = s_max;
        out.note.left_extent = -s_min;
        out.note.right_extent = s_max - self.spec.core_length;
        Ok(out)
    }

    /// `2φ(s) = log w(s)`.
    pub fn log_weight(&self, s: f64) -> f64 {
        let sp = &self.spec;
        let l = sp.core_length;
        let b = sp.blend_width;
        let mut lw = if s < 0.0 {
            sp.left.base_log_weight(-s)
        } else if s > l {
            sp.right.base_log_weight(s - l)
        } else {
            let mut v = 0.0;
            let bl = 1.0 - smoothstep(s / b);
            if bl > 0.0 {
                v += bl * sp.left.base_log_weight(-s);
            }
            let br = smoothstep((s - (l - b)) / b);
            if br > 0.0 {
                v += br * sp.right.base_log_weight(s - l);
            }
            v + sp.bump.log_perturbation(s)
        };
        lw += self.surgery_log(&sp.left, -s, lw);
        lw += self.surgery_log(&sp.right, s - l, lw);
        lw
    }

    #[inline]
    pub fn weight(&self, s: f64) -> f64 {
        self.log_weight(s).exp()
    }

    fn surgery_log(&self, end: &EndModel, tau: f64, base: f64) -> f64 {
        match *end {
            EndModel::FilledCap { junction, epsilon } if epsilon > 0.0 => {
                let sigma = junction + tau;
                if sigma > LN_2 {
                    filled_cap_weight(epsilon, sigma).ln() + 2.0 * sigma.ln()
                } else {
                    0.0
                }
            }
            EndModel::DirichletBoundary { collar_length, .. } => match self.spec.boundary_surgery_epsilon {
                Some(eps) => {
                    let r = collar_length - tau;
                    if (0.0..0.5).contains(&r) {
                        boundary_log_factor(eps, r, base)
                    } else {
                        0.0
                    }
                }
                None => 0.0,
            },
            EndModel::Funnel { scale, .. } => match self.spec.funnel_factor {
                Some(ff) => {
                    let y = scale - tau;
                    if y < ff.outer {
                        ff.log_factor(y)
                    } else {
                        0.0
                    }
                }
                None => 0.0,
            },
            _ => 0.0,
        }
    }

    pub fn sample(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&s| self.weight(s)).collect()
    }

    /// Breakpoints where the weight changes character; quadrature splits here.
    fn breakpoints(&self) -> Vec<f64> {
        let l = self.spec.core_length;
        let b = self.spec.blend_width;
        let mut pts = vec![self.s_min, 0.0, b, l - b, l, self.s_max];
        let (lo, hi) = self.spec.bump.support();
        pts.extend([lo, hi]);
        pts.retain(|&p| p >= self.s_min && p <= self.s_max);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// Total area `2π ∫ w ds` of the truncated surface.
    pub fn area(&self) -> f64 {
        self.integrate(|s| self.weight(s), 1e-10)
    }

    /// Axial metric distance `∫ √w ds` between two chart points.
    pub fn distance(&self, s0: f64, s1: f64) -> f64 {
        let (a, b) = if s0 <= s1 { (s0, s1) } else { (s1, s0) };
        adaptive_simpson(|s| self.weight(s).sqrt(), a, b, 1e-11, 16).value
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> f64 {
        let pts = self.breakpoints();
        let mut acc = 0.0;
        for w in pts.windows(2) {
            acc += adaptive_simpson(&f, w[0], w[1], tol, 16).value;
        }
        2.0 * PI * acc
    }

    /// Writes `(s, w)` samples at `nodes` as two-column CSV.
    pub fn write_csv<W: Write>(&self, nodes: &[f64], mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,w")?;
        for &s in nodes {
            writeln!(out, "{:.17e},{:.17e}", s, self.weight(s))?;
        }
        Ok(())
    }
}

fn charts_match(a: &MetricProfile, b: &MetricProfile) -> Result<()> {
    let (a0, a1) = a.chart();
    let (b0, b1) = b.chart();
    let tol = 1e-12 * (1.0 + a1.abs());
    if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol {
        return Err(Error::IncompatibleProfiles(format!(
            "charts differ: [{a0}, {a1}] vs [{b0}, {b1}]"
        )));
    }
    if a.conditions() != b.conditions() {
        return Err(Error::IncompatibleProfiles("truncation conditions differ".into()));
    }
    Ok(())
}

/// `2π ∫ (w_a - w_b) ds` for profiles that coincide outside their bumps.
pub fn relative_area(a: &MetricProfile, b: &MetricProfile) -> Result<f64> {
    charts_match(a, b)?;
    let (alo, ahi) = a.spec.bump.support();
    let (blo, bhi) = b.spec.bump.support();
    let lo = alo.min(blo);
    let hi = ahi.max(bhi);
    let (s0, s1) = a.chart();
    let probes = 4000;
    for i in 0..=probes {
        let s = s0 + (s1 - s0) * i as f64 / probes as f64;
        if s > lo && s < hi {
            continue;
        }
        let (wa, wb) = (a.weight(s), b.weight(s));
        if (wa - wb).abs() > 1e-12 * wa.abs().max(wb.abs()) {
            return Err(Error::IncompatibleProfiles(format!(
                "weights differ outside the compact core at s = {s}: {wa} vs {wb}"
            )));
        }
    }
    let q = adaptive_simpson(|s| a.weight(s) - b.weight(s), lo, hi, 1e-13, 16);
    Ok(2.0 * PI * q.value)
}

/// `max_s w_num(s) / w_den(s)` over the given nodes.
pub fn max_weight_ratio(num: &MetricProfile, den: &MetricProfile, nodes: &[f64]) -> f64 {
    nodes
        .iter()
        .map(|&s| num.weight(s) / den.weight(s))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BumpSpec, EndKind, FunnelFactor};
    use crate::quad::composite_simpson;

    fn bumped(amp: f64) -> SurfaceSpec {
        SurfaceSpec::cusp_funnel().with_bump(BumpSpec { center: 2.5, radius: 1.2, amplitude: amp })
    }

    #[test]
    fn zero_amplitude_bump_is_exactly_the_model() {
        let spec = SurfaceSpec {
            left: EndModel::boundary(),
            ..SurfaceSpec::cusp_funnel()
        };
        let flat = build_weight(&spec, &Truncation::default()).unwrap();
        let (s0, s1) = flat.chart();
        for i in 0..=500 {
            let s = s0 + (s1 - s0) * i as f64 / 500.0;
            if s > 6.0 {
                let sigma = s - 6.0 + 2.0;
                assert_eq!(flat.weight(s), (-2.0 * f64::ln(sigma)).exp());
            }
            if (1.0..=5.0).contains(&s) {
                assert_eq!(flat.weight(s), 1.0);
            }
        }
        assert_eq!(flat.conditions(), (EndCondition::Dirichlet, EndCondition::Regular));
    }

    #[test]
    fn bump_only_changes_the_core() {
        let a = build_weight(&bumped(0.3), &Truncation::default()).unwrap();
        let b = build_weight(&bumped(0.0), &Truncation::default()).unwrap();
        let (s0, s1) = a.chart();
        let mut max_dev: f64 = 0.0;
        for i in 0..=2000 {
            let s = s0 + (s1 - s0) * i as f64 / 2000.0;
            if !(0.0..=6.0).contains(&s) {
                max_dev = max_dev.max((a.weight(s) - b.weight(s)).abs());
            }
        }
        assert_eq!(max_dev, 0.0);
    }

    #[test]
    fn weight_matches_end_models() {
        let p = build_weight(&SurfaceSpec::cusp_funnel(), &Truncation::default()).unwrap();
        // funnel: y = 1 + s for s < 0
        for &s in &[-0.9, -0.5, -0.1] {
            let y: f64 = 1.0 + s;
            assert!((p.weight(s) - 1.0 / (y * y)).abs() < 1e-12 / (y * y));
        }
        // cusp: σ = s - 4
        for &s in &[6.5, 10.0, 30.0] {
            let sig: f64 = s - 4.0;
            assert!((p.weight(s) * sig * sig - 1.0).abs() < 1e-12);
        }
        let (s0, _) = p.chart();
        // funnel truncated at metric distance 3 from the core
        assert!((p.distance(s0, 0.0) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn filled_cap_at_zero_is_bitwise_cusp() {
        let cusp = build_weight(&SurfaceSpec::cusp_funnel(), &Truncation::default()).unwrap();
        let cap0 = build_weight(
            &SurfaceSpec::cusp_funnel().with_right(EndModel::filled_cap(0.0)),
            &Truncation::default(),
        )
        .unwrap();
        let (s0, s1) = cusp.chart();
        assert_eq!(cap0.chart(), cusp.chart());
        for i in 0..=1000 {
            let s = s0 + (s1 - s0) * i as f64 / 1000.0;
            assert_eq!(cusp.weight(s).to_bits(), cap0.weight(s).to_bits());
        }
    }

    #[test]
    fn filled_cap_decays_like_the_flat_disk() {
        let eps: f64 = 0.5;
        let p = build_weight(
            &SurfaceSpec::cusp_funnel().with_right(EndModel::filled_cap(eps)),
            &Truncation::default(),
        )
        .unwrap();
        assert_eq!(p.spec().right.kind(), EndKind::FilledCap);
        let c = 1.0 / (eps * eps + eps * eps * eps.ln().powi(2));
        let sigma = 12.0;
        let s = 6.0 - 2.0 + sigma;
        let expected = c * (-2.0 * sigma as f64).exp();
        assert!(((p.weight(s) - expected) / expected).abs() < 1e-6);
        assert_eq!(p.conditions().1, EndCondition::Regular);
        assert!((p.chart().1 - (6.0 - 2.0 + 14.0)).abs() < 1e-12);
    }

    #[test]
    fn boundary_surgery_turns_collar_into_funnel() {
        let spec = SurfaceSpec {
            left: EndModel::DirichletBoundary { collar_exponent: 0.3, collar_length: 1.0 },
            boundary_surgery_epsilon: Some(0.0),
            ..SurfaceSpec::cusp_funnel()
        };
        let p = build_weight(&spec, &Truncation::default()).unwrap();
        // r = 1 + s; for r < 1/4 the ε = 0 weight is exactly hyperbolic.
        for &r in &[0.2f64, 0.1, 0.05] {
            let s = r - 1.0;
            assert!((p.weight(s) * r * r - 1.0).abs() < 1e-12);
        }
        let (s0, _) = p.chart();
        assert!((p.distance(s0, -0.75) - 3.0).abs() < 1e-8);
        // outside the collar surgery region the weight is e^f
        assert!((p.weight(-0.4) - 0.3f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let overlapping = bumped(0.2).with_bump(BumpSpec { center: 4.5, radius: 0.5, amplitude: 0.2 });
        assert!(matches!(build_weight(&overlapping, &Truncation::default()), Err(Error::InvalidSpec(_))));
        let near_left = bumped(0.2).with_bump(BumpSpec { center: 1.2, radius: 0.5, amplitude: 0.2 });
        assert!(build_weight(&near_left, &Truncation::default()).is_err());
        let neg = Truncation { funnel_distance: -1.0, ..Truncation::default() };
        assert!(build_weight(&bumped(0.2), &neg).is_err());
        let no_boundary = SurfaceSpec { boundary_surgery_epsilon: Some(0.1), ..bumped(0.0) };
        assert!(build_weight(&no_boundary, &Truncation::default()).is_err());
    }

    #[test]
    fn relative_area_properties() {
        let t = Truncation::default();
        let a = build_weight(&bumped(0.3), &t).unwrap();
        let b = build_weight(&bumped(0.0), &t).unwrap();
        assert_eq!(relative_area(&a, &a).unwrap(), 0.0);
        let ab = relative_area(&a, &b).unwrap();
        let ba = relative_area(&b, &a).unwrap();
        assert_eq!(ab, -ba);
        // refinement oracle: composite Simpson at n and 2n on the bump support
        let f = |s: f64| a.weight(s) - b.weight(s);
        let i1 = 2.0 * PI * composite_simpson(f, 1.3, 3.7, 400);
        let i2 = 2.0 * PI * composite_simpson(f, 1.3, 3.7, 800);
        assert!((i1 - i2).abs() < 1e-9);
        assert!((ab - i2).abs() < 1e-10, "{ab} vs {i2}");
        // different ends are rejected
        let c = build_weight(&bumped(0.0).with_right(EndModel::filled_cap(0.3)), &t).unwrap();
        assert!(relative_area(&a, &c).is_err());
    }

    #[test]
    fn funnel_factor_is_supported_in_the_funnel() {
        let base = bumped(0.2);
        let tilted = SurfaceSpec {
            funnel_factor: Some(FunnelFactor { constant: 0.4, inner: 0.3, outer: 0.8 }),
            ..base
        };
        let t = Truncation::default();
        let p = build_weight(&base, &t).unwrap();
        let q = build_weight(&tilted, &t).unwrap();
        assert_eq!(p.chart(), q.chart());
        assert_eq!(p.weight(-0.1), q.weight(-0.1));
        assert!((q.weight(-0.8) / p.weight(-0.8) - 0.4f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn weight_positive_and_deterministic() {
        let specs = [
            bumped(0.3),
            bumped(-0.4).with_right(EndModel::filled_cap(0.05)),
            SurfaceSpec { left: EndModel::boundary(), boundary_surgery_epsilon: Some(0.2), ..bumped(0.1) },
        ];
        for spec in specs {
            let p = build_weight(&spec, &Truncation::default()).unwrap();
            let q = build_weight(&spec, &Truncation::default()).unwrap();
            let (s0, s1) = p.chart();
            for i in 0..=3000 {
                let s = s0 + (s1 - s0) * i as f64 / 3000.0;
                let w = p.weight(s);
                assert!(w > 0.0 && w.is_finite(), "{w} at {s}");
                assert_eq!(w.to_bits(), q.weight(s).to_bits());
            }
        }
    }
}
