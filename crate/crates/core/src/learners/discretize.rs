use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of grid points a box discretization may produce.
pub const DEFAULT_GRID_BUDGET: usize = 1_000_000;

/// A player's action set: a finite list of coordinate profiles, or a box
/// `[0, b]^d` that is played through its uniform discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActionSet {
    Finite {
        actions: Vec<Vec<f64>>,
    },
    Box {
        side: f64,
        dim: usize,
        lipschitz: f64,
        horizon: usize,
    },
}

impl ActionSet {
    pub fn finite(actions: Vec<Vec<f64>>) -> Result<Self> {
        let set = ActionSet::Finite { actions };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ActionSet::Finite { actions } => {
                if actions.is_empty() {
                    return Err(Error::input("action set is empty"));
                }
                for (i, a) in actions.iter().enumerate() {
                    if a.iter().any(|x| !x.is_finite()) {
                        return Err(Error::input(format!("action {i} has non-finite coordinates")));
                    }
                    if actions[..i].contains(a) {
                        return Err(Error::input(format!("action {i} duplicates an earlier action")));
                    }
                }
                Ok(())
            }
            ActionSet::Box {
                side,
                dim,
                lipschitz,
                horizon,
            } => grid_points_per_axis(*side, *dim, *lipschitz, *horizon).map(|_| ()),
        }
    }

    /// Finite list of action profiles, discretizing a box if needed.
    pub fn realize(&self, budget: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            ActionSet::Finite { actions } => {
                self.validate()?;
                Ok(actions.clone())
            }
            ActionSet::Box {
                side,
                dim,
                lipschitz,
                horizon,
            } => discretize_box(*side, *dim, *lipschitz, *horizon, budget),
        }
    }
}

/// `ceil(L · b · sqrt(d T))`, the per-axis grid resolution.
pub fn grid_points_per_axis(side: f64, dim: usize, lipschitz: f64, horizon: usize) -> Result<usize> {
    if !(side.is_finite() && side > 0.0) || !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::input("box side and Lipschitz constant must be positive"));
    }
    if dim == 0 || horizon == 0 {
        return Err(Error::input("box dimension and horizon must be positive"));
    }
    let m = (lipschitz * side * ((dim * horizon) as f64).sqrt()).ceil();
    Ok((m as usize).max(1))
}

/// Uniform cell-centred grid over `[0, b]^d` whose every box point has a grid
/// point within ℓ1 distance `sqrt(d/T) / L`. Point `j` on an axis sits at
/// `(j + ½) b / m`.
pub fn discretize_box(
    side: f64,
    dim: usize,
    lipschitz: f64,
    horizon: usize,
    budget: usize,
) -> Result<Vec<Vec<f64>>> {
    let m = grid_points_per_axis(side, dim, lipschitz, horizon)?;
    let total = (m as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
    if total > budget as u128 {
        return Err(Error::Capacity(format!(
            "discretization needs {m}^{dim} points, budget is {budget}"
        )));
    }
    let axis: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) * side / m as f64).collect();
    let mut points = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; dim];
    loop {
        points.push(idx.iter().map(|&j| axis[j]).collect());
        // odometer increment, last axis fastest
        let mut k = dim;
        loop {
            if k == 0 {
                return Ok(points);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
        }
    }
}
