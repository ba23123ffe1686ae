use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricProfile;

/// Ordered nodes `s_0 < s_1 < … < s_n` covering a profile chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidArgument("a grid needs at least three nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// `cells + 1` equally spaced nodes on `[s0, s1]`.
    pub fn uniform(s0: f64, s1: f64, cells: usize) -> Result<Self> {
        if !(s1 > s0) || cells < 2 {
            return Err(Error::InvalidArgument(format!("bad uniform grid [{s0}, {s1}] with {cells} cells")));
        }
        let h = (s1 - s0) / cells as f64;
        let mut nodes: Vec<f64> = (0..=cells).map(|i| s0 + h * i as f64).collect();
        nodes[cells] = s1;
        Self::from_nodes(nodes)
    }

    /// Nodes equidistributing the density `√w + kappa` over the profile chart,
    /// so cells have roughly equal metric length where `w` is large and a
    /// floor of resolution where it is small.
    pub fn adapted(profile: &MetricProfile, cells: usize, kappa: f64) -> Result<Self> {
        if cells < 2 || !(kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("adapted grid needs cells ≥ 2 and kappa > 0, got {cells}, {kappa}")));
        }
        let (s0, s1) = profile.chart();
        let fine = 64 * cells;
        let hf = (s1 - s0) / fine as f64;
        let rho = |s: f64| profile.weight(s).sqrt() + kappa;
        let mut cum = Vec::with_capacity(fine + 1);
        cum.push(0.0);
        let mut prev = rho(s0);
        for i in 1..=fine {
            let cur = rho(s0 + hf * i as f64);
            let last = *cum.last().unwrap();
            cum.push(last + 0.5 * hf * (prev + cur));
            prev = cur;
        }
        let total = cum[fine];
        let mut nodes = Vec::with_capacity(cells + 1);
        nodes.push(s0);
        let mut j = 0;
        for k in 1..cells {
            let target = total * k as f64 / cells as f64;
            while cum[j + 1] < target {
                j += 1;
            }
            let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
            nodes.push(s0 + hf * (j as f64 + frac));
        }
        nodes.push(s1);
        Self::from_nodes(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    /// Width of cell `i`, `s_{i+1} - s_i`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.cells()).map(|i| self.spacing(i)).fold(0.0, f64::max)
    }

    /// The common spacing if the grid is uniform to `1e-14` relative.
    pub fn uniform_spacing(&self) -> Option<f64> {
        let (a, b) = self.span();
        let h = (b - a) / self.cells() as f64;
        (0..self.cells()).all(|i| (self.spacing(i) - h).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs()))).then_some(h)
    }

    pub(crate) fn matches_chart(&self, profile: &MetricProfile) -> bool {
        let (a, b) = self.span();
        let (c, d) = profile.chart();
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        (a - c).abs() <= tol && (b - d).abs() <= tol
    }

    /// Restricts a family grid to a profile whose chart lies inside it: keeps
    /// the nodes inside the chart and snaps the chart onto the outermost kept
    /// nodes. Sharing one grid across a family keeps node sets nested.
    pub fn restrict_to(&self, profile: &MetricProfile) -> Result<(Grid, MetricProfile)> {
        let (c, d) = profile.chart();
        let tol = 1e-12 * (1.0 + c.abs().max(d.abs()));
        let kept: Vec<f64> = self.nodes.iter().cloned().filter(|&s| s >= c - tol && s <= d + tol).collect();
        if kept.len() < 3 {
            return Err(Error::InvalidArgument("profile chart holds fewer than three grid nodes".into()));
        }
        let (a, b) = (kept[0], *kept.last().unwrap());
        let snapped = profile.with_chart(a, b)?;
        Ok((Grid::from_nodes(kept)?, snapped))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_weight, EndModel, SurfaceSpec, Truncation};

    #[test]
    fn uniform_and_validation() {
        let g = Grid::uniform(0.0, std::f64::consts::PI, 4000).unwrap();
        assert_eq!(g.cells(), 4000);
        assert!(g.uniform_spacing().is_some());
        assert!(Grid::from_nodes(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Grid::uniform(1.0, 0.0, 10).is_err());
    }

    #[test]
    fn adapted_grid_spans_chart_and_concentrates() {
        let p = build_weight(&SurfaceSpec::cusp_funnel(), &Truncation::default()).unwrap();
        let g = Grid::adapted(&p, 2000, 0.5).unwrap();
        assert!(g.matches_chart(&p));
        // near the funnel truncation w is large, so cells are small
        let first = g.spacing(0);
        let last = g.spacing(g.cells() - 1);
        assert!(first < 0.1 * last);
    }

    #[test]
    fn restriction_to_shorter_cap() {
        let t = Truncation::default();
        let cusp = build_weight(&SurfaceSpec::cusp_funnel(), &t).unwrap();
        let cap = build_weight(&SurfaceSpec::cusp_funnel().with_right(EndModel::filled_cap(0.3)), &t).unwrap();
        let g = Grid::adapted(&cusp, 1000, 0.5).unwrap();
        let (gc, pc) = g.restrict_to(&cap).unwrap();
        assert!(gc.matches_chart(&pc));
        assert_eq!(&g.nodes()[..gc.nodes().len()], gc.nodes());
        assert!(pc.chart().1 <= cap.chart().1);
        let (gg, pp) = g.restrict_to(&cusp).unwrap();
        assert_eq!(gg, g);
        assert_eq!(pp.chart(), cusp.chart());
    }
}
