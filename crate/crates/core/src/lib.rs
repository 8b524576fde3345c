pub mod annotate;
pub mod cartography;
pub mod config;
pub mod corpus;
pub mod curriculum;
pub mod eval;
pub mod ingest;
pub mod labeler;
pub mod relation;
pub mod synth;
pub mod text;
pub mod trainer;

pub use relation::Relation;
