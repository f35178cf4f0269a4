use serde::{Deserialize, Serialize};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;
/// Largest supported number of half-spaces in one family.
pub const MAX_FACETS: usize = 64;
/// Largest family handed to the exhaustive subfamily oracle.
pub const MAX_ORACLE_FACETS: usize = 12;

/// Every numeric threshold used by the library, in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// A point lies on a hyperplane when its residual is below this.
    pub incidence: f64,
    /// Smallest admissible eigenvalue / pivot for SPD and linear solves.
    pub spd_floor: f64,
    /// Points closer than this are merged.
    pub dedupe: f64,
    /// Normalized offsets up to `1 + contact` count as contacts.
    pub contact: f64,
    /// Target log-volume suboptimality of the inscribed ellipsoid.
    pub solver_gap: f64,
    /// Newton step cap for the inscribed ellipsoid solver.
    pub max_newton: usize,
    /// Residual allowed in the decomposition of the identity.
    pub decomposition: f64,
    /// Weights at or below this are dropped.
    pub weight_drop: f64,
    /// Containment / support tests.
    pub containment: f64,
    /// Feasibility re-check of computed ellipsoids and normalized offsets.
    pub feasibility: f64,
    /// Bound checks on the greedy basis and simplex volume.
    pub bound: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            incidence: 1e-9,
            spd_floor: 1e-12,
            dedupe: 1e-9,
            contact: 1e-7,
            solver_gap: 1e-9,
            max_newton: 500,
            decomposition: 1e-6,
            weight_drop: 1e-10,
            containment: 1e-8,
            feasibility: 1e-8,
            bound: 1e-9,
        }
    }
}

impl Tolerances {
    /// Loosen every threshold by `factor` (iteration cap untouched).
    pub fn scaled(&self, factor: f64) -> Tolerances {
        Tolerances {
            incidence: self.incidence * factor,
            spd_floor: self.spd_floor,
            dedupe: self.dedupe * factor,
            contact: self.contact * factor,
            solver_gap: self.solver_gap * factor,
            max_newton: self.max_newton,
            decomposition: self.decomposition * factor,
            weight_drop: self.weight_drop,
            containment: self.containment * factor,
            feasibility: self.feasibility * factor,
            bound: self.bound * factor,
        }
    }

    /// Tolerances used by the independent certificate checker.
    pub fn checker(&self) -> Tolerances {
        self.scaled(10.0)
    }
}
