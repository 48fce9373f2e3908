//! The dissipation quasi-distance `d`, the viscous correction `δ` with its integral part `Δ`,
//! their sum `D = d + δ`, and variations along monotone chains.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{connected_components, dist_point_to_crack, h1_diff, CrackSet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationParams {
    /// Nucleation cost per new component in `d`.
    pub lambda: f64,
    /// Nucleation cost per new component in `δ`.
    pub mu: f64,
    /// Gauss–Legendre points per edge for the `Δ` integral.
    pub quadrature_order: usize,
}

impl DissipationParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        Self { lambda, mu, quadrature_order: 3 }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config("lambda must be positive".into()));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Config("mu must be positive".into()));
        }
        if self.quadrature_order == 0 {
            return Err(Error::Config("quadrature_order must be at least 1".into()));
        }
        Ok(self)
    }
}

/// A nonnegative cost that is `+∞` exactly when the defining inclusion fails.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum CostValue {
    Finite(f64),
    Infinite,
}

impl CostValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            CostValue::Finite(v) => Some(v),
            CostValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, CostValue::Infinite)
    }

    /// The finite value; panics on `+∞`.
    pub fn value(self) -> f64 {
        self.finite().expect("cost is +inf")
    }

    /// `+∞` maps to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn scale(self, c: f64) -> CostValue {
        match self {
            CostValue::Finite(v) => CostValue::Finite(c * v),
            CostValue::Infinite => CostValue::Infinite,
        }
    }
}

impl Add for CostValue {
    type Output = CostValue;
    fn add(self, rhs: CostValue) -> CostValue {
        match (self, rhs) {
            (CostValue::Finite(a), CostValue::Finite(b)) => CostValue::Finite(a + b),
            _ => CostValue::Infinite,
        }
    }
}

impl fmt::Display for CostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostValue::Finite(v) => write!(f, "{v}"),
            CostValue::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for CostValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CostValue::Finite(v) => s.serialize_f64(*v),
            CostValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for CostValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(CostValue::Finite(v)),
            Repr::Str(s) if s == "inf" => Ok(CostValue::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid cost '{s}'"))),
        }
    }
}

/// Count of components of `K` that do not touch `H`; `+∞` unless `H ⊆ K`.
pub fn alpha(h: &CrackSet, k: &CrackSet) -> CostValue {
    if !h.is_subset(k) {
        return CostValue::Infinite;
    }
    let touched = h.vertex_mask();
    let mesh = k.mesh();
    let fresh = connected_components(k)
        .iter()
        .filter(|c| {
            c.edges().all(|e| {
                let [a, b] = mesh.edge(e).v;
                !touched.contains(a) && !touched.contains(b)
            })
        })
        .count();
    CostValue::Finite(fresh as f64)
}

/// `d(H, K) = H¹(K \ H) + λ α(H, K)`.
pub fn dist_d(h: &CrackSet, k: &CrackSet, params: &DissipationParams) -> CostValue {
    match alpha(h, k) {
        CostValue::Finite(a) => CostValue::Finite(h1_diff(h, k) + params.lambda * a),
        CostValue::Infinite => CostValue::Infinite,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.reverse();
    rule
}

/// `Δ(H, K) = ∫_{K\H} dist(x, H) dH¹(x)` by per-edge Gauss–Legendre quadrature; `+∞` unless
/// `H ⊆ K`.
pub fn atw_integral(h: &CrackSet, k: &CrackSet, quadrature_order: usize) -> CostValue {
    if !h.is_subset(k) {
        return CostValue::Infinite;
    }
    let rule = gauss_legendre(quadrature_order);
    let mesh = k.mesh();
    let mut total = 0.0;
    for e in k.edges().filter(|&e| !h.contains(e)) {
        let (a, b) = mesh.edge_endpoints(e);
        let half = 0.5 * mesh.edge(e).length;
        let sum: f64 = rule.iter().map(|&(x, w)| w * dist_point_to_crack(&a.lerp(&b, 0.5 * (x + 1.0)), h)).sum();
        total += half * sum;
    }
    CostValue::Finite(total)
}

/// `δ(H, K) = Δ(H, K) + μ α(H, K)`.
pub fn delta_atw(h: &CrackSet, k: &CrackSet, params: &DissipationParams) -> CostValue {
    atw_integral(h, k, params.quadrature_order) + alpha(h, k).scale(params.mu)
}

/// `D(H, K) = d + δ = H¹(K \ H) + Δ(H, K) + (λ + μ) α(H, K)`.
pub fn big_d(h: &CrackSet, k: &CrackSet, params: &DissipationParams) -> CostValue {
    dist_d(h, k, params) + delta_atw(h, k, params)
}

/// An inclusion-increasing sequence of crack sets on one mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneChain(Vec<CrackSet>);

impl MonotoneChain {
    pub fn new(states: Vec<CrackSet>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("a chain needs at least one state".into()));
        }
        for w in states.windows(2) {
            w[0].check_same_mesh(&w[1])?;
            if !w[0].is_subset(&w[1]) {
                return Err(Error::Config("chain is not inclusion-increasing".into()));
            }
        }
        Ok(MonotoneChain(states))
    }

    /// Wraps states without checking inclusion; variations then report `+∞` on violations.
    pub fn new_unchecked(states: Vec<CrackSet>) -> Self {
        MonotoneChain(states)
    }

    pub fn states(&self) -> &[CrackSet] {
        &self.0
    }

    pub fn first(&self) -> &CrackSet {
        &self.0[0]
    }

    pub fn last(&self) -> &CrackSet {
        self.0.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variation {
    D,
    Alpha,
    H1,
}

/// Total variation of a monotone chain: the sum over consecutive pairs, which is the
/// supremum over refinements for these functionals.
pub fn var_along(chain: &MonotoneChain, which: Variation, params: &DissipationParams) -> CostValue {
    chain.states().windows(2).fold(CostValue::Finite(0.0), |acc, w| {
        let step = match which {
            Variation::D => dist_d(&w[0], &w[1], params),
            Variation::Alpha => alpha(&w[0], &w[1]),
            Variation::H1 if w[0].is_subset(&w[1]) => CostValue::Finite(h1_diff(&w[0], &w[1])),
            Variation::H1 => CostValue::Infinite,
        };
        acc + step
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::grid::{structured_rectangle, Diagonals};
    use crate::geometry::{EdgeSelector, Mesh, Point2};

    fn grid(n: usize, len: f64) -> Arc<Mesh> {
        Arc::new(structured_rectangle(0., 0., len, 1., n, n, Diagonals::Forward, &[EdgeSelector::All], None).unwrap())
    }

    fn seg(mesh: &Arc<Mesh>, p: (f64, f64), q: (f64, f64)) -> CrackSet {
        CrackSet::from_edges(mesh, mesh.edges_on_segment(Point2::new(p.0, p.1), Point2::new(q.0, q.1), 1e-9))
            .unwrap()
    }

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 1..=8 {
            let rule = gauss_legendre(n);
            assert_eq!(rule.len(), n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                let q: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn params_validation() {
        assert_eq!(DissipationParams::new(0.0, 1.0).unwrap_err().to_string(), "configuration error: lambda must be positive");
        assert!(DissipationParams::new(1.0, -1.0).is_err());
        assert!(DissipationParams::new(0.1, 0.1).is_ok());
    }

    #[test]
    fn alpha_counts_fresh_components() {
        let m = grid(4, 1.0);
        let empty = CrackSet::empty(&m);
        let k = seg(&m, (0., 0.), (0.5, 0.)).union(&seg(&m, (1., 0.5), (1., 1.))).union(&seg(&m, (0., 0.75), (0., 1.)));
        assert_eq!(alpha(&empty, &k), CostValue::Finite(3.0));
        assert_eq!(alpha(&k, &k), CostValue::Finite(0.0));
        assert_eq!(alpha(&k, &empty), CostValue::Infinite);
        let h = seg(&m, (0., 0.), (0.25, 0.));
        assert_eq!(alpha(&h, &k), CostValue::Finite(2.0));
    }

    #[test]
    fn d_far_component() {
        // mesh with horizontal edges of length 0.4
        let m = grid(5, 2.0);
        let h = seg(&m, (0., 0.), (0.4, 0.));
        let far = seg(&m, (1.6, 1.), (2.0, 1.));
        assert_eq!(far.len(), 1);
        let k = h.union(&far);
        let p = DissipationParams::new(0.1, 0.1).unwrap();
        let d = dist_d(&h, &k, &p).value();
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(dist_d(&k, &k, &p), CostValue::Finite(0.0));
        assert!(dist_d(&k, &h, &p).is_infinite());
    }

    #[test]
    fn collinear_extension_delta_is_half_square() {
        let m = grid(8, 1.0);
        let h = seg(&m, (0., 0.), (0.5, 0.));
        let k = seg(&m, (0., 0.), (0.875, 0.));
        let ell: f64 = 0.375;
        for order in 1..=5 {
            let delta = atw_integral(&h, &k, order).value();
            assert!((delta - ell * ell / 2.0).abs() < 1e-14, "order {order}: {delta}");
        }
        let p = DissipationParams::new(0.1, 0.1).unwrap();
        assert!((big_d(&h, &k, &p).value() - (ell + ell * ell / 2.0)).abs() < 1e-14);
        assert_eq!(delta_atw(&k, &k, &p), CostValue::Finite(0.0));
        assert_eq!(big_d(&k, &k, &p), CostValue::Finite(0.0));
    }

    #[test]
    fn var_along_small_chains() {
        let m = grid(4, 1.0);
        let p = DissipationParams::new(0.1, 0.1).unwrap();
        let e1 = seg(&m, (0., 0.), (0.25, 0.));
        let e2 = seg(&m, (0.75, 1.), (1., 1.));
        let single = MonotoneChain::new(vec![e1.clone()]).unwrap();
        assert_eq!(var_along(&single, Variation::D, &p), CostValue::Finite(0.0));
        let chain = MonotoneChain::new(vec![CrackSet::empty(&m), e1.clone(), e1.union(&e2)]).unwrap();
        assert_eq!(var_along(&chain, Variation::Alpha, &p), CostValue::Finite(2.0));
        assert!((var_along(&chain, Variation::H1, &p).value() - 0.5).abs() < 1e-15);
        let broken = MonotoneChain::new_unchecked(vec![e1.clone(), e2.clone()]);
        assert!(var_along(&broken, Variation::D, &p).is_infinite());
        assert!(MonotoneChain::new(vec![e1, e2]).is_err());
    }

    #[test]
    fn cost_value_serde() {
        let v = vec![CostValue::Finite(0.25), CostValue::Infinite];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[0.25,\"inf\"]");
        let back: Vec<CostValue> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
