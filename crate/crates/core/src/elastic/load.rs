use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Time profile `a(t)` of the Dirichlet loading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    /// `a(t) = c0 + c1 t`
    Linear { c0: f64, c1: f64 },
    /// Piecewise-linear interpolation of samples; `ȧ` is piecewise constant and taken from
    /// the segment to the right of a knot.
    Table { times: Vec<f64>, values: Vec<f64> },
}

impl Amplitude {
    pub fn validate(&self) -> Result<()> {
        match self {
            Amplitude::Linear { c0, c1 } if c0.is_finite() && c1.is_finite() => Ok(()),
            Amplitude::Linear { .. } => Err(Error::Config("non-finite linear amplitude".into())),
            Amplitude::Table { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::Config("amplitude table needs at least two (t, a) rows".into()));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Config("amplitude table times must increase strictly".into()));
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::Config("non-finite amplitude table entry".into()));
                }
                Ok(())
            }
        }
    }

    fn segment(times: &[f64], t: f64) -> usize {
        let last = times.len() - 2;
        match times.iter().rposition(|&s| s <= t) {
            Some(k) => k.min(last),
            None => 0,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Amplitude::Linear { c0, c1 } => c0 + c1 * t,
            Amplitude::Table { times, values } => {
                let k = Self::segment(times, t);
                let s = (t - times[k]) / (times[k + 1] - times[k]);
                values[k] + s * (values[k + 1] - values[k])
            }
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Amplitude::Linear { c1, .. } => *c1,
            Amplitude::Table { times, values } => {
                let k = Self::segment(times, t);
                (values[k + 1] - values[k]) / (times[k + 1] - times[k])
            }
        }
    }

    /// `sup |ȧ|` over `[0, horizon]`.
    pub fn max_rate(&self, horizon: f64) -> f64 {
        match self {
            Amplitude::Linear { c1, .. } => c1.abs(),
            Amplitude::Table { times, values } => {
                let mut best: f64 = 0.0;
                for k in 0..times.len() - 1 {
                    if times[k + 1] <= 0.0 && k + 2 < times.len() || times[k] > horizon {
                        continue;
                    }
                    best = best.max(((values[k + 1] - values[k]) / (times[k + 1] - times[k])).abs());
                }
                best
            }
        }
    }

    /// Tabulated amplitudes have a piecewise-constant derivative.
    pub fn is_approximate(&self) -> bool {
        matches!(self, Amplitude::Table { .. })
    }
}

/// Dirichlet datum `g(t) = a(t) G` with `G` given by nodal values on every vertex (its P1
/// interpolant is the extension into the domain).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLoad {
    pub profile: Vec<f64>,
    pub amplitude: Amplitude,
    pub horizon: f64,
}

impl BoundaryLoad {
    pub fn new(mesh: &Mesh, profile: Vec<f64>, amplitude: Amplitude, horizon: f64) -> Result<Self> {
        if profile.len() != mesh.vertices().len() {
            return Err(Error::Config(format!(
                "load profile has {} values for {} vertices",
                profile.len(),
                mesh.vertices().len()
            )));
        }
        if profile.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite load profile value".into()));
        }
        if !(horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        amplitude.validate()?;
        Ok(BoundaryLoad { profile, amplitude, horizon })
    }

    /// Profile from a function of position.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64, amplitude: Amplitude, horizon: f64) -> Result<Self> {
        let profile = mesh.vertices().iter().map(|p| f(p.x, p.y)).collect();
        Self::new(mesh, profile, amplitude, horizon)
    }
}

/// `‖∇G‖_{L²(Ω)}` of the P1 interpolant of the profile on the uncut mesh.
pub fn profile_gradient_norm(mesh: &Mesh, profile: &[f64]) -> f64 {
    let mut sum = 0.0;
    for t in 0..mesh.triangles().len() {
        let tri = mesh.triangles()[t];
        let pts = tri.map(|v| mesh.vertices()[v]);
        let g = super::p1_gradient(&pts, [profile[tri[0]], profile[tri[1]], profile[tri[2]]]);
        sum += mesh.triangle_area(t) * (g[0] * g[0] + g[1] * g[1]);
    }
    sum.sqrt()
}

/// `C_P = sup_t ‖∇ġ(t)‖_{L²} · max(½|Ω|, 1)`, the constant in `|∂ₜE| ≤ C_P (E + 1)`.
pub fn power_bound_constant(load: &BoundaryLoad, mesh: &Mesh) -> f64 {
    load.amplitude.max_rate(load.horizon) * profile_gradient_norm(mesh, &load.profile) * (0.5 * mesh.area()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolation_and_rate() {
        let a = Amplitude::Table { times: vec![0.0, 1.0, 3.0], values: vec![0.0, 2.0, 1.0] };
        a.validate().unwrap();
        assert_eq!(a.value(0.5), 1.0);
        assert_eq!(a.value(2.0), 1.5);
        assert_eq!(a.rate(0.5), 2.0);
        assert_eq!(a.rate(1.0), -0.5);
        assert_eq!(a.rate(3.0), -0.5);
        assert_eq!(a.max_rate(3.0), 2.0);
        assert!(a.is_approximate());
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(Amplitude::Table { times: vec![0.0, 0.0], values: vec![0.0, 1.0] }.validate().is_err());
        assert!(Amplitude::Table { times: vec![0.0], values: vec![0.0] }.validate().is_err());
    }
}
