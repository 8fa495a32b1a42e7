//! Actor collaboration networks and team-level network measures.

mod algo;
mod metrics;
mod snapshot;

pub use metrics::{
    actor_director_collab, average_degree, betweenness_stats, delta_avg_shortest_path, delta_clustering, heterogeneity,
    node_clustering, ActorDirectorCollab, BetweennessStats, Team,
};
pub use snapshot::{build_snapshots, BetweennessMode, CollabSnapshot, NodeId, SnapshotSet};
