//! Stereo camera localization constrained by planes from a prior LiDAR map.
//!
//! The library is organized around an offline and an online stage:
//!
//! * offline, a LiDAR point cloud is turned into a compact plane map:
//!   [`tensor_voting`] estimates a structure tensor per point and keeps the
//!   surface-like ("plate") points, [`plane_map`] clusters their normals,
//!   splits parallel surfaces apart and fits plane equations;
//! * online, [`optimizer`] runs a sliding-window bundle adjustment over
//!   stereo observations where landmarks associated to a map plane carry an
//!   extra coplanarity residual, solved by an in-repo sparse
//!   Levenberg-Marquardt with landmark Schur elimination.
//!
//! [`geometry`] supplies the SE(3) / pinhole machinery shared by everything,
//! [`synthetic`] generates ground-truth scenes for testing, [`evaluation`]
//! computes absolute trajectory error statistics, and [`io`] reads and writes
//! all on-disk formats.
//!
//! The long-form guide lives in `book/`; its code snippets are compiled as
//! doc-tests of this crate so they cannot drift out of sync.

pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod plane_map;
pub mod synthetic;
pub mod tensor_voting;

mod seed;
pub use seed::subseed;

#[cfg(doctest)]
mod book {
    // Every chapter of the mdbook guide is included as a doc comment here so
    // `cargo test --doc` runs the book's code blocks.
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $path))]
            mod $name {}
        };
    }

    chapter!(introduction, "introduction.md");
    chapter!(rigid_transforms, "rigid-transforms.md");
    chapter!(stereo_geometry, "stereo-geometry.md");
    chapter!(tensor_voting, "tensor-voting.md");
    chapter!(plane_maps, "plane-maps.md");
    chapter!(plane_constrained_ba, "plane-constrained-ba.md");
    chapter!(synthetic_scenes, "synthetic-scenes.md");
    chapter!(evaluation, "evaluation.md");
    chapter!(cli, "cli.md");
}
