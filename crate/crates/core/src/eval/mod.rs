//! Experiments on trained embeddings: link prediction, attribute
//! clustering, distance structure, and labelled point exports.

pub mod cluster;
pub mod distance;
pub mod linkpred;
pub mod logreg;

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub use cluster::{
    clustering_experiment, intra_cluster_ratio, kmeans, naive_clustering,
    random_clustering_baseline, Clustering, ClusteringConfig, ClusteringReport,
};
pub use distance::{
    covering_distance_experiment, implication_distance_experiment, CoveringReport, DistanceStats,
    ImplicationReport, NON_COVER_CAP,
};
pub use linkpred::{
    coauthor_graph, edge_features, link_prediction_experiment, negative_sample_edges,
    EmbeddingSource, LinkPredictionConfig, LinkPredictionReport, TemporalSplit,
};

/// CSV `x,y[,z],label`; points must have 2 or 3 coordinates.
pub fn scatter_csv(points: &[Vec<f64>], labels: &[String]) -> Result<String> {
    if points.len() != labels.len() {
        return Err(Error::Dimension {
            expected: points.len(),
            found: labels.len(),
        });
    }
    let d = points.first().map_or(2, Vec::len);
    if !(2..=3).contains(&d) || points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput(
            "scatter export needs 2 or 3 coordinates".into(),
        ));
    }
    let mut out = String::from(if d == 2 {
        "x,y,label\n"
    } else {
        "x,y,z,label\n"
    });
    for (p, l) in points.iter().zip(labels) {
        for v in p {
            let _ = write!(out, "{v},");
        }
        out.push_str(&csv_field(l));
        out.push('\n');
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_rows() {
        let csv = scatter_csv(
            &[vec![1.0, 2.0, 3.0], vec![0.5, 0.0, -1.0]],
            &["edible".into(), "other".into()],
        )
        .unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, vec!["x,y,z,label", "1,2,3,edible", "0.5,0,-1,other"]);
        assert!(scatter_csv(&[vec![1.0]], &["a".into()]).is_err());
        assert!(scatter_csv(&[vec![1.0, 2.0]], &[]).is_err());
        let q = scatter_csv(&[vec![1.0, 2.0]], &["a,b".into()]).unwrap();
        assert!(q.ends_with("\"a,b\"\n"));
    }
}
