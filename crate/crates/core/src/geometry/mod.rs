//! Domain polygon, boundary datum, source term and the assembled scene.

mod datum;
mod polygon;
mod scene;
mod source;

pub use datum::{
    datum_lipschitz, sample_boundary, BoundaryDatum, BoundarySample, DatumPiece, DatumPieceSpec, Expr, Height,
    PieceValue, PieceValueSpec,
};
pub use polygon::{segment_distance, segments_touch, Boundary};
pub use scene::{
    compile_source, unit_at_deg, ArcSpec, DatumSpec, DomainSpec, GridSpec, Location, Scene, SceneSpec, Tolerances,
    VertexSpec,
};
pub use source::{Source, SourceSpec};
