//! Training, community detection, and community role analysis for layered
//! sigmoid networks.
//!
//! The pipeline has four stages:
//!
//! 1. [`trainer`] fits a fully-connected sigmoid network with L1-regularized
//!    stochastic steepest descent, so small weights are driven toward zero.
//! 2. [`adjacency`] thresholds the trained weights around each layer into
//!    four signed binary matrices (positive/negative, input-side/output-side).
//! 3. [`community`] clusters each layer's units by EM over a Bernoulli block
//!    model of those matrices: units in a community share connection
//!    patterns with the adjacent layers.
//! 4. [`roles`] quantifies what each community does through mean-substitution
//!    perturbation: how much each input dimension moves the community
//!    ([`roles::input_effect`]) and how much the community moves each output
//!    ([`roles::output_effect`]).
//!
//! [`datagen`] provides the three benchmark dataset families (modular
//! ground-truth networks, seasonal series, diagram images), [`linear`] an
//! ordinary least-squares baseline for the series task, and [`report`] the
//! full-pipeline runner behind the `lnncom` CLI.
//!
//! The narrative guide lives in `book/`; its code snippets compile and run as
//! doc-tests of this crate.
//!
//! ```
//! use lnn_community::community::{detect_all_layers, EmConfig};
//! use lnn_community::datagen::gen_ground_truth;
//! use lnn_community::eval::matched_accuracy;
//!
//! // A block-diagonal network decomposes into its modules exactly.
//! let gt = gen_ground_truth(3, 15, 2, 0);
//! let config = EmConfig { communities: 3, iterations: 80, restarts: 40, seed: 0 };
//! let assignments = detect_all_layers(&gt.params, 0.9, &config).unwrap();
//! for a in &assignments {
//!     assert_eq!(matched_accuracy(&a.communities, &gt.module_labels).unwrap(), 1.0);
//! }
//! ```

pub mod adjacency;
pub mod archive;
pub mod community;
pub mod config;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod linear;
pub mod matrix;
pub mod network;
pub mod report;
pub mod roles;
pub mod svg;
pub mod trainer;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use network::{Dataset, LayerTopology, NetworkParams};

/// The guide's code blocks, compiled and executed by `cargo test --doc` so
/// the book cannot drift from the library.
#[doc(hidden)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/networks-and-training.md")]
    pub mod networks_and_training {}
    #[doc = include_str!("../../../book/src/community-detection.md")]
    pub mod community_detection {}
    #[doc = include_str!("../../../book/src/community-roles.md")]
    pub mod community_roles {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    pub mod datasets {}
    #[doc = include_str!("../../../book/src/linear-baseline.md")]
    pub mod linear_baseline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
