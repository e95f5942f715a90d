//! Operator models of quantum quaternion spheres and odd quantum spheres
//! on truncated sequence spaces.

pub mod fock;
pub mod fredholm;
pub mod qgroup;
pub mod relations;
pub mod report;
pub mod spheres;
