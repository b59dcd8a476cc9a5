//! Pixelwise fusion of background-subtraction outputs.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`] reads (or synthesizes) mask corpora laid out per category and video.
//! - [`histogram`] compresses every video into counts of joint detector patterns.
//! - [`metrics`] turns histograms and combiners into confusion counts, rates and
//!   category-weighted summaries.
//! - [`combine`] builds the combiners: majority vote, proportion of FG votes,
//!   averaged Bayes, behavior knowledge space, thresholding and mixtures.
//! - [`geometry`] computes achievable regions in the weighted ROC plane.
//! - [`search`] exhaustively scans algorithm selections for the best weighted F1.

pub mod combine;
pub mod corpus;
pub mod geometry;
pub mod histogram;
pub mod metrics;
pub mod search;

pub use combine::{CombineError, Combiner, ScoreTable, StochasticTable, TruthTable};
pub use corpus::{Corpus, CorpusError, Label, LabelMap, LoadOptions, VideoKey, VideoRef};
pub use geometry::{EnvelopeChain, Generator, GeometryError, Point, Zonogon};
pub use histogram::{HistogramError, PatternHistogram};
pub use metrics::{ConfusionCounts, HistogramSet, MetricsError, Rates, WeightedPerf};
pub use search::{SearchContext, SearchError, SearchResult, Selection, Strategy};
