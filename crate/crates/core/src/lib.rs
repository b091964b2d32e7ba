pub mod band;
pub mod eigen;
pub mod formats;
pub mod geometry;
pub mod linalg;
pub mod mds;
pub mod meshio;
pub mod operators;
pub mod oracle;
pub mod pipeline;
pub mod shapedna;
pub mod surfaces;
