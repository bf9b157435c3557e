//! Chance-constrained linear programs over complex decision variables.

pub mod ambiguity;
pub mod copula;
pub mod dist;
pub mod estimation;
pub mod joint;
pub mod moments;
