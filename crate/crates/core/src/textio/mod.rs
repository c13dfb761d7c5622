//! Text formats: models, regions, property queries and DOT export.

mod dot;
mod lexer;
mod model_format;
mod property;
mod region_format;

pub use dot::{to_dot, wfa_to_dot};
pub use lexer::parse_rational;
pub use model_format::{parse_model, serialize_model, serialize_wfa};
pub use property::{parse_property, Comparator, MeasureKind, PropertyQuery};
pub use region_format::{parse_region, serialize_region};

use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TextError {
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{0}")]
    Semantic(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
