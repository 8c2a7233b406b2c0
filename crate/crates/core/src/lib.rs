//! Penner-type twist words on plumbings of spheres: branched tracks, transfer
//! matrices of fiber maps, limiting strands and the surface shadow.

pub mod diskdecomp;
pub mod geomlab;
pub mod lamsolve;
pub mod limits;
pub mod plumbing;
pub mod surface;
pub mod transfer;
pub mod twistsys;

pub use diskdecomp::{CarriedClass, Flavor, Group, Slot};
pub use plumbing::{Gluing, PlumbingGraph, PlumbingPoint, Sign, Sphere};
pub use transfer::{GeometryParams, MapAtom, Term, TransferMatrix};
pub use twistsys::{DiskChoice, DiskSign, Orientation, TwistFactor, TwistWord};
