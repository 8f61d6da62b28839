//! Trainable angle groups shared by the encoder and classifier circuits.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Encoder angles: two pixel-value angles for the quadrant modules and two
/// for the aggregation module.
pub const GAMMA_LEN: usize = 4;
/// Variational block angles: four `T` modules of six angles each.
pub const THETA_LEN: usize = 24;
/// Classifier block angles: three `T` modules.
pub const PHI_LEN: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamGroup {
    Gamma,
    Theta,
    Phi,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 3] = [ParamGroup::Gamma, ParamGroup::Theta, ParamGroup::Phi];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Gamma => "gamma",
            ParamGroup::Theta => "theta",
            ParamGroup::Phi => "phi",
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            ParamGroup::Gamma => GAMMA_LEN,
            ParamGroup::Theta => THETA_LEN,
            ParamGroup::Phi => PHI_LEN,
        }
    }
}

/// A symbolic reference to one angle, e.g. `theta[5]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId {
    pub group: ParamGroup,
    pub index: usize,
}

impl ParamId {
    pub fn new(group: ParamGroup, index: usize) -> Self {
        Self { group, index }
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.group.name(), self.index)
    }
}

impl FromStr for ParamId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (name, rest) = s
            .split_once('[')
            .ok_or_else(|| format!("expected `group[index]`, got `{s}`"))?;
        let index = rest
            .strip_suffix(']')
            .and_then(|i| i.parse().ok())
            .ok_or_else(|| format!("bad index in `{s}`"))?;
        let group = ParamGroup::ALL
            .into_iter()
            .find(|g| g.name() == name)
            .ok_or_else(|| format!("unknown parameter group `{name}`"))?;
        Ok(Self { group, index })
    }
}

/// Concrete values for the three angle groups. A group left empty is
/// unbound; circuits referencing it fail to execute.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl ParameterSet {
    pub fn new(gamma: Vec<f64>, theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let set = Self { gamma, theta, phi };
        set.validate()?;
        Ok(set)
    }

    /// Checks that every non-empty group has its canonical length.
    pub fn validate(&self) -> Result<()> {
        for group in ParamGroup::ALL {
            let len = self.group(group).len();
            if len != 0 && len != group.len() {
                return Err(Error::Structural(format!(
                    "{} has {len} angles, expected {}",
                    group.name(),
                    group.len()
                )));
            }
        }
        Ok(())
    }

    pub fn group(&self, group: ParamGroup) -> &[f64] {
        match group {
            ParamGroup::Gamma => &self.gamma,
            ParamGroup::Theta => &self.theta,
            ParamGroup::Phi => &self.phi,
        }
    }

    pub fn group_mut(&mut self, group: ParamGroup) -> &mut Vec<f64> {
        match group {
            ParamGroup::Gamma => &mut self.gamma,
            ParamGroup::Theta => &mut self.theta,
            ParamGroup::Phi => &mut self.phi,
        }
    }

    pub fn get(&self, id: ParamId) -> Option<f64> {
        self.group(id.group).get(id.index).copied()
    }

    /// Uniform angles on `[-π, π)` for the requested groups; other groups stay empty.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, groups: &[ParamGroup]) -> Self {
        let mut set = Self::default();
        for &group in groups {
            *set.group_mut(group) = random_angles(rng, group.len());
        }
        set
    }
}

pub fn random_angles<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_id_round_trips_through_text() {
        let id = ParamId::new(ParamGroup::Theta, 17);
        assert_eq!(id.to_string(), "theta[17]");
        assert_eq!("theta[17]".parse::<ParamId>().unwrap(), id);
        assert!("beta[1]".parse::<ParamId>().is_err());
        assert!("phi[x]".parse::<ParamId>().is_err());
    }

    #[test]
    fn validation_checks_group_lengths() {
        assert!(ParameterSet::new(vec![0.0; 4], vec![], vec![]).is_ok());
        assert!(ParameterSet::new(vec![0.0; 3], vec![], vec![]).is_err());
        let mut rng = crate::seed::rng(1);
        let set = ParameterSet::random(&mut rng, &[ParamGroup::Theta, ParamGroup::Phi]);
        assert!(set.gamma.is_empty());
        assert_eq!(set.theta.len(), 24);
        assert!(set.phi.iter().all(|a| (-std::f64::consts::PI..std::f64::consts::PI).contains(a)));
    }
}
