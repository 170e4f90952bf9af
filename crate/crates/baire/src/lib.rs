//! Ultrametric embedding and search over m-adic digit codes.
//!
//! Scalars in the unit interval are encoded as fixed-precision base-B digit
//! sequences ([`codec`]). The longest-common-prefix metric over those
//! sequences ([`metric`]) is a 1-bounded ultrametric, and the hierarchy it
//! induces is materialized as per-level prefix bins in a single pass over the
//! data ([`index`]). On top of the index sit constant-probe nearest-neighbor
//! and distance queries, grid-style density clustering over the bins
//! ([`gridcluster`]), a random-projection front end for multidimensional
//! input ([`project`]), and evaluation baselines ([`eval`]).

pub mod codec;
pub mod error;
pub mod eval;
pub mod gridcluster;
pub mod index;
pub mod metric;
pub mod project;

pub use codec::{encode, normalize, truncate, DigitCode, NormalizationBounds};
pub use error::{Error, Result};
pub use index::MadicIndex;
pub use metric::{baire_distance, BaireProximity};
