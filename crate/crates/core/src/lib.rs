pub mod analysis;
pub mod cohomology;
pub mod pcgroup;
pub mod sequences;
pub mod zmod_linalg;
