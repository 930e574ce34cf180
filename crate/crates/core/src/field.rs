//! External force fields `F(x)` on the segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid points used to validate a declared monotonicity.
pub const MONOTONE_CHECK_POINTS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldSpec", into = "FieldSpec")]
pub struct ForceField {
    kind: FieldKind,
    monotone_nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    /// `F(x) = c0 + c1 * x`
    Affine { c0: f64, c1: f64 },
    /// Linear between knots, constant beyond the first and last knot.
    PiecewiseLinear(PiecewiseLinear),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    x: Vec<f64>,
    y: Vec<f64>,
    // integral from x[0] to x[i]
    cumulative: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("piecewise-linear field needs at least one knot"));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::domain("field knots must be finite"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::domain("field knots must have strictly increasing x"));
        }
        let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        let mut cumulative = vec![0.0; x.len()];
        for i in 1..x.len() {
            cumulative[i] = cumulative[i - 1] + 0.5 * (y[i - 1] + y[i]) * (x[i] - x[i - 1]);
        }
        Ok(Self { x, y, cumulative })
    }

    pub fn knots(&self) -> impl DoubleEndedIterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.y[0];
        }
        if x >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&xi| xi <= x) - 1;
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.y[i] + t * (self.y[i + 1] - self.y[i])
    }

    /// Integral from the first knot to `x` (signed).
    fn primitive(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.y[0] * (x - self.x[0]);
        }
        if x >= self.x[n - 1] {
            return self.cumulative[n - 1] + self.y[n - 1] * (x - self.x[n - 1]);
        }
        let i = self.x.partition_point(|&xi| xi <= x) - 1;
        self.cumulative[i] + 0.5 * (self.y[i] + self.eval(x)) * (x - self.x[i])
    }
}

impl ForceField {
    pub fn new(kind: FieldKind, monotone_nonincreasing: bool) -> Self {
        Self { kind, monotone_nonincreasing }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(FieldKind::Constant(value), true)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `F(x) = c0 + c1 x`; flagged non-increasing when `c1 <= 0`.
    pub fn affine(c0: f64, c1: f64) -> Self {
        Self::new(FieldKind::Affine { c0, c1 }, c1 <= 0.0)
    }

    /// Flagged non-increasing when the knot values do not increase.
    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self> {
        let pl = PiecewiseLinear::new(points)?;
        let monotone = pl.y.windows(2).all(|w| w[1] <= w[0]);
        Ok(Self::new(FieldKind::PiecewiseLinear(pl), monotone))
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn monotone_nonincreasing(&self) -> bool {
        self.monotone_nonincreasing
    }

    pub fn with_monotone_flag(mut self, flag: bool) -> Self {
        self.monotone_nonincreasing = flag;
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            FieldKind::Constant(c) => *c,
            FieldKind::Affine { c0, c1 } => c0 + c1 * x,
            FieldKind::PiecewiseLinear(pl) => pl.eval(x),
        }
    }

    /// `∫_0^x F(s) ds`.
    pub fn integral(&self, x: f64) -> f64 {
        match &self.kind {
            FieldKind::Constant(c) => c * x,
            FieldKind::Affine { c0, c1 } => c0 * x + 0.5 * c1 * x * x,
            FieldKind::PiecewiseLinear(pl) => pl.primitive(x) - pl.primitive(0.0),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            FieldKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// Mirror image under `x -> L - x`. Forces are vectors, so the mirrored
    /// field is `-F(L - x)`; monotonicity is preserved.
    pub fn reflected(&self, length: f64) -> Self {
        let kind = match &self.kind {
            FieldKind::Constant(c) => FieldKind::Constant(-c),
            FieldKind::Affine { c0, c1 } => FieldKind::Affine { c0: -c0 - c1 * length, c1: *c1 },
            FieldKind::PiecewiseLinear(pl) => {
                let pts: Vec<(f64, f64)> = pl.knots().rev().map(|(x, y)| (length - x, -y)).collect();
                FieldKind::PiecewiseLinear(
                    PiecewiseLinear::new(&pts).expect("mirrored knots stay ordered"),
                )
            }
        };
        Self::new(kind, self.monotone_nonincreasing)
    }

    /// First grid pair `(x_lo, x_hi)` on `[0, length]` with `F(x_lo) < F(x_hi)`.
    pub fn increase_on(&self, length: f64, samples: usize) -> Option<(f64, f64)> {
        let samples = samples.max(2);
        let grid = |i: usize| length * i as f64 / (samples - 1) as f64;
        let mut prev = (grid(0), self.eval(grid(0)));
        for i in 1..samples {
            let x = grid(i);
            let v = self.eval(x);
            if v > prev.1 {
                return Some((prev.0, x));
            }
            prev = (x, v);
        }
        None
    }

    pub fn is_nonincreasing_on(&self, length: f64) -> bool {
        self.increase_on(length, MONOTONE_CHECK_POINTS).is_none()
    }

    /// Checks the declared flag against a grid on `[0, length]`, and that
    /// knots lie inside the segment.
    pub fn validate(&self, length: f64) -> Result<()> {
        if let FieldKind::PiecewiseLinear(pl) = &self.kind {
            if pl.x.iter().any(|&x| x < 0.0 || x > length) {
                return Err(Error::domain(format!("field knots must lie in [0, {length}]")));
            }
        }
        if let FieldKind::Constant(c) | FieldKind::Affine { c0: c, .. } = self.kind {
            if !c.is_finite() {
                return Err(Error::domain("field coefficients must be finite"));
            }
        }
        if let FieldKind::Affine { c1, .. } = self.kind {
            if !c1.is_finite() {
                return Err(Error::domain("field coefficients must be finite"));
            }
        }
        if self.monotone_nonincreasing {
            if let Some((x_lo, x_hi)) = self.increase_on(length, MONOTONE_CHECK_POINTS) {
                return Err(Error::NotMonotone { x_lo, x_hi });
            }
        }
        Ok(())
    }

    /// `sup F` over `[0, length]` (exact: the extrema of every supported kind
    /// sit at knots or endpoints).
    pub fn sup_on(&self, length: f64) -> f64 {
        let mut best = self.eval(0.0).max(self.eval(length));
        if let FieldKind::PiecewiseLinear(pl) = &self.kind {
            for (x, y) in pl.knots() {
                if (0.0..=length).contains(&x) {
                    best = best.max(y);
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FieldSpec {
    Constant {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monotone_nonincreasing: Option<bool>,
    },
    Affine {
        c0: f64,
        c1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monotone_nonincreasing: Option<bool>,
    },
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        monotone_nonincreasing: Option<bool>,
    },
}

impl TryFrom<FieldSpec> for ForceField {
    type Error = Error;

    fn try_from(spec: FieldSpec) -> Result<Self> {
        let (field, flag) = match spec {
            FieldSpec::Constant { value, monotone_nonincreasing } => {
                (ForceField::constant(value), monotone_nonincreasing)
            }
            FieldSpec::Affine { c0, c1, monotone_nonincreasing } => {
                (ForceField::affine(c0, c1), monotone_nonincreasing)
            }
            FieldSpec::PiecewiseLinear { points, monotone_nonincreasing } => {
                (ForceField::piecewise_linear(&points)?, monotone_nonincreasing)
            }
        };
        Ok(match flag {
            Some(flag) => field.with_monotone_flag(flag),
            None => field,
        })
    }
}

impl From<ForceField> for FieldSpec {
    fn from(field: ForceField) -> Self {
        let flag = Some(field.monotone_nonincreasing);
        match field.kind {
            FieldKind::Constant(value) => FieldSpec::Constant { value, monotone_nonincreasing: flag },
            FieldKind::Affine { c0, c1 } => FieldSpec::Affine { c0, c1, monotone_nonincreasing: flag },
            FieldKind::PiecewiseLinear(pl) => FieldSpec::PiecewiseLinear {
                points: pl.knots().collect(),
                monotone_nonincreasing: flag,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluates_each_kind() {
        assert_eq!(ForceField::constant(1.5).eval(0.3), 1.5);
        assert_relative_eq!(ForceField::affine(1.0, -1.0).eval(0.25), 0.75);
        let pl = ForceField::piecewise_linear(&[(0.2, 2.0), (0.6, 0.0)]).unwrap();
        assert_eq!(pl.eval(0.0), 2.0);
        assert_relative_eq!(pl.eval(0.4), 1.0);
        assert_eq!(pl.eval(1.0), 0.0);
    }

    #[test]
    fn integrals_match_quadrature() {
        let fields = [
            ForceField::constant(-0.7),
            ForceField::affine(1.0, -1.0),
            ForceField::piecewise_linear(&[(0.1, 3.0), (0.3, -1.0), (0.8, 0.5)]).unwrap(),
        ];
        for field in &fields {
            for &x in &[0.0, 0.05, 0.2, 0.55, 0.9, 1.0] {
                // midpoint rule on a fine grid, independent of the closed forms
                let n = 200_000;
                let h = x / n as f64;
                let q: f64 = (0..n).map(|i| field.eval((i as f64 + 0.5) * h) * h).sum();
                assert!((field.integral(x) - q).abs() < 1e-8, "{field:?} at {x}");
            }
        }
    }

    #[test]
    fn monotone_flag_is_validated() {
        assert!(ForceField::affine(0.0, 1.0).with_monotone_flag(true).validate(1.0).is_err());
        assert!(ForceField::affine(1.0, -1.0).validate(1.0).is_ok());
        assert!(ForceField::affine(0.0, 1.0).validate(1.0).is_ok());
        let bumpy = ForceField::piecewise_linear(&[(0.0, 1.0), (0.5, 2.0), (1.0, 0.0)]).unwrap();
        assert!(!bumpy.monotone_nonincreasing());
        assert!(bumpy.clone().with_monotone_flag(true).validate(1.0).is_err());
        assert!(ForceField::piecewise_linear(&[(0.0, 1.0), (2.0, 0.0)]).unwrap().validate(1.0).is_err());
    }

    #[test]
    fn reflection_mirrors_force_vector() {
        let length = 2.0;
        let fields = [
            ForceField::constant(0.3),
            ForceField::affine(0.5, 2.0),
            ForceField::piecewise_linear(&[(0.0, 1.0), (0.5, 2.0), (2.0, -1.0)]).unwrap(),
        ];
        for field in &fields {
            let mirror = field.reflected(length);
            for i in 0..=20 {
                let x = length * i as f64 / 20.0;
                assert_relative_eq!(mirror.eval(x), -field.eval(length - x), epsilon = 1e-14);
            }
            assert_eq!(mirror.reflected(length), *field);
        }
    }

    #[test]
    fn sup_over_segment() {
        assert_eq!(ForceField::affine(1.0, -1.0).sup_on(1.0), 1.0);
        let pl = ForceField::piecewise_linear(&[(0.0, 0.0), (0.5, 3.0), (1.0, 1.0)]).unwrap();
        assert_eq!(pl.sup_on(1.0), 3.0);
    }

    #[test]
    fn serde_forms() {
        let f: ForceField = serde_json::from_str(r#"{"kind":"constant","value":1.0}"#).unwrap();
        assert_eq!(f, ForceField::constant(1.0));
        let f: ForceField = serde_json::from_str(r#"{"kind":"affine","c0":1.0,"c1":-1.0}"#).unwrap();
        assert!(f.monotone_nonincreasing());
        let f: ForceField = serde_json::from_str(
            r#"{"kind":"piecewise_linear","points":[[0,1],[1,0]],"monotone_nonincreasing":false}"#,
        )
        .unwrap();
        assert!(!f.monotone_nonincreasing());
        assert!(serde_json::from_str::<ForceField>(r#"{"kind":"constant","value":1,"x":2}"#).is_err());
        assert!(serde_json::from_str::<ForceField>(r#"{"kind":"cubic","value":1}"#).is_err());
        let back: ForceField = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }
}
