//! Chain parameters and static configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ForceField;
use crate::potential::PairLaw;

/// `N` identical particles of mass `m` on `[0, L]` with linear damping `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsSpec", into = "ParamsSpec")]
pub struct ChainParams {
    n_particles: usize,
    length: f64,
    mass: f64,
    damping: f64,
    law: PairLaw,
    field: ForceField,
}

impl ChainParams {
    pub fn new(
        n_particles: usize,
        length: f64,
        mass: f64,
        damping: f64,
        law: PairLaw,
        field: ForceField,
    ) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::domain(format!("need N >= 2 particles, got {n_particles}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::domain(format!("length must be positive, got {length}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::domain(format!("mass must be positive, got {mass}")));
        }
        if !(damping.is_finite() && damping >= 0.0) {
            return Err(Error::domain(format!("damping must be non-negative, got {damping}")));
        }
        field.validate(length)?;
        Ok(Self { n_particles, length, mass, damping, law, field })
    }

    /// Unit mass, no damping.
    pub fn statics(n_particles: usize, length: f64, law: PairLaw, field: ForceField) -> Result<Self> {
        Self::new(n_particles, length, 1.0, 0.0, law, field)
    }

    pub fn n(&self) -> usize {
        self.n_particles
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn law(&self) -> &PairLaw {
        &self.law
    }

    pub fn field(&self) -> &ForceField {
        &self.field
    }

    /// Mean spacing `L / (N - 1)` of a chain touching both walls.
    pub fn spacing(&self) -> f64 {
        self.length / (self.n_particles - 1) as f64
    }

    pub fn with_n(&self, n_particles: usize) -> Result<Self> {
        Self::new(n_particles, self.length, self.mass, self.damping, self.law.clone(), self.field.clone())
    }

    pub fn with_field(&self, field: ForceField) -> Result<Self> {
        Self::new(self.n_particles, self.length, self.mass, self.damping, self.law.clone(), field)
    }

    pub fn with_damping(&self, damping: f64) -> Result<Self> {
        Self::new(self.n_particles, self.length, self.mass, damping, self.law.clone(), self.field.clone())
    }

    /// The same chain seen through `x -> L - x`.
    pub fn reflected(&self) -> Self {
        Self { field: self.field.reflected(self.length), ..self.clone() }
    }

    /// `F` evaluated with its argument clamped to `[0, L]`.
    pub(crate) fn field_at(&self, x: f64) -> f64 {
        self.field.eval(x.clamp(0.0, self.length))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSpec {
    n: usize,
    #[serde(default = "one")]
    length: f64,
    #[serde(default = "one")]
    mass: f64,
    #[serde(default)]
    damping: f64,
    pair_law: PairLaw,
    field: ForceField,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<ParamsSpec> for ChainParams {
    type Error = Error;

    fn try_from(s: ParamsSpec) -> Result<Self> {
        ChainParams::new(s.n, s.length, s.mass, s.damping, s.pair_law, s.field)
    }
}

impl From<ChainParams> for ParamsSpec {
    fn from(p: ChainParams) -> Self {
        ParamsSpec {
            n: p.n_particles,
            length: p.length,
            mass: p.mass,
            damping: p.damping,
            pair_law: p.law,
            field: p.field,
        }
    }
}

/// Ordered particle positions `x_1 < ... < x_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    positions: Vec<f64>,
}

impl Configuration {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("positions must be finite"));
        }
        if let Some(i) = positions.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::domain(format!(
                "positions must be strictly increasing (x[{}] = {}, x[{}] = {})",
                i,
                positions[i],
                i + 1,
                positions[i + 1]
            )));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// The configuration seen through `x -> L - x` (order restored).
    pub fn mirrored(&self, length: f64) -> Self {
        Self { positions: self.positions.iter().rev().map(|x| length - x).collect() }
    }

    pub fn within(&self, length: f64) -> bool {
        match (self.positions.first(), self.positions.last()) {
            (Some(&first), Some(&last)) => first >= 0.0 && last <= length,
            _ => true,
        }
    }
}

/// `rho(X, Y) = sum_k |x_k - y_k|`.
pub fn distance(a: &Configuration, b: &Configuration) -> Result<f64> {
    distance_slices(a.positions(), b.positions())
}

pub(crate) fn distance_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "configurations differ in size ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize) -> Result<ChainParams> {
        ChainParams::statics(n, 1.0, PairLaw::unit_power(2.0).unwrap(), ForceField::zero())
    }

    #[test]
    fn validates_parameters() {
        assert!(params(1).is_err());
        assert!(params(2).is_ok());
        let law = PairLaw::unit_power(2.0).unwrap();
        assert!(ChainParams::new(3, 0.0, 1.0, 0.0, law.clone(), ForceField::zero()).is_err());
        assert!(ChainParams::new(3, 1.0, 0.0, 0.0, law.clone(), ForceField::zero()).is_err());
        assert!(ChainParams::new(3, 1.0, 1.0, -0.1, law.clone(), ForceField::zero()).is_err());
        let rising = ForceField::affine(0.0, 1.0).with_monotone_flag(true);
        assert!(matches!(
            ChainParams::new(3, 1.0, 1.0, 0.0, law, rising),
            Err(Error::NotMonotone { .. })
        ));
    }

    #[test]
    fn params_json() {
        let p: ChainParams = serde_json::from_str(
            r#"{"n":5,"length":2.0,"pair_law":{"kind":"power","a":2.0},"field":{"kind":"constant","value":1.0}}"#,
        )
        .unwrap();
        assert_eq!(p.n(), 5);
        assert_eq!(p.mass(), 1.0);
        assert_eq!(p.spacing(), 0.5);
        assert!(serde_json::from_str::<ChainParams>(
            r#"{"n":1,"pair_law":{"kind":"power","a":2.0},"field":{"kind":"constant","value":1.0}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<ChainParams>(
            r#"{"n":3,"extra":1,"pair_law":{"kind":"power","a":2.0},"field":{"kind":"constant","value":1.0}}"#
        )
        .is_err());
    }

    #[test]
    fn configuration_ordering() {
        assert!(Configuration::new(vec![0.0, 0.5, 1.0]).is_ok());
        assert!(Configuration::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(Configuration::new(vec![0.0, f64::NAN]).is_err());
        let c = Configuration::new(vec![0.0, 0.6, 1.0]).unwrap();
        let g = c.gaps();
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.4).abs() < 1e-15);
        assert_eq!(c.mirrored(1.0).positions(), &[0.0, 0.4, 1.0]);
    }

    #[test]
    fn distance_examples() {
        let a = Configuration::new(vec![0.0, 0.5, 1.0]).unwrap();
        let b = Configuration::new(vec![0.0, 0.6, 1.0]).unwrap();
        assert_eq!(distance(&a, &a).unwrap(), 0.0);
        assert!((distance(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        let c = Configuration::new(vec![0.0, 1.0]).unwrap();
        assert!(distance(&a, &c).is_err());
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(xs in proptest::collection::vec(-10.0f64..10.0, 1..20),
                                 ys in proptest::collection::vec(-10.0f64..10.0, 1..20)) {
            let n = xs.len().min(ys.len());
            let (a, b) = (&xs[..n], &ys[..n]);
            prop_assert_eq!(distance_slices(a, b).unwrap(), distance_slices(b, a).unwrap());
            prop_assert!(distance_slices(a, b).unwrap() >= 0.0);
        }
    }
}
