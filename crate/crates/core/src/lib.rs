//! Coarse-grained word-sense inventories from definition matching.
//!
//! The pipeline: load WordNet senses and an external learner's dictionary,
//! ask a judge to rate definition pairs on a seven-point match scale, group
//! WordNet senses under the dictionary senses they match, then evaluate the
//! resulting inventory with sense-recognition experiments and WSD rescoring.

pub mod evalharness;
pub mod grouper;
pub mod judge;
pub mod lexicon;
pub mod util;
pub mod wordnet;
pub mod wsdscore;
