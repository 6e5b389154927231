//! Dynamic structures: navigating nets and the incremental and fully
//! dynamic r-gather structures built on them.

mod fully;
mod incremental;
mod net;

pub use fully::DynRGather;
pub use incremental::IncrementalRGather;
pub use net::{Euclidean, Metric, NavigatingNet, NetDeletion, ROOT_TOP};

use std::collections::BTreeMap;

use crate::metric::{Center, Cluster, Clustering};

/// Answer to a cluster query: the center of the queried point and the radius
/// bound certified for the whole clustering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryAnswer {
    pub center: u64,
    pub radius_bound: f64,
}

/// Groups `(point, center)` pairs into a clustering.
pub(crate) fn clustering_from(assign: impl IntoIterator<Item = (u64, u64)>) -> Clustering {
    let mut by_center: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for (p, c) in assign {
        by_center.entry(c).or_default().push(p);
    }
    Clustering {
        clusters: by_center
            .into_iter()
            .map(|(c, members)| Cluster {
                center: Center::Point(c),
                members,
            })
            .collect(),
        outliers: Vec::new(),
    }
}
