//! Community detection in stochastic blockmodels by recursive spectral
//! bipartitioning, with a Tracy-Widom test on the top eigenvalue of the
//! centered adjacency matrix deciding when to stop.

pub mod eigen;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod hypothesis;
pub mod metrics;
pub mod partition;
pub mod random;
pub mod spectral;
pub mod stats;
pub mod tracy_widom;

pub use error::{Error, ErrorClass, Result};
pub use graph::{Graph, NodeSubset};
pub use hypothesis::{run_test, test_graph, TestConfig, TestReport};
pub use spectral::{StatisticVariant, TestStatistic};
pub use tracy_widom::{tw1_cdf, tw1_moments, tw1_quantile, tw1_survival, Tw1Distribution};
pub use metrics::{adjusted_rand_index, cluster_f_measure, hierarchical_f_measure};
pub use partition::{
    density_ordering, flatten_leaves, recursive_bipartition, spectral_bipartition, ClusterTree, PartitionConfig,
};
