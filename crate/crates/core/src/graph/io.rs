use serde::{Deserialize, Serialize};

use super::{GraphError, VertexKey, WeightedDigraph};

/// On-disk graph format:
/// `{"vertices":[ids...],"edges":[{"tail":id,"head":id,"weight":float},...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexKey>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub tail: VertexKey,
    pub head: VertexKey,
    pub weight: f64,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<WeightedDigraph<f64>, GraphError> {
        WeightedDigraph::build(
            self.vertices,
            self.edges.into_iter().map(|e| (e.tail, e.head, e.weight)),
        )
    }
}

impl From<&WeightedDigraph<f64>> for GraphFile {
    fn from(g: &WeightedDigraph<f64>) -> Self {
        GraphFile {
            vertices: g.labels().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    tail: g.label(e.tail).clone(),
                    head: g.label(e.head).clone(),
                    weight: e.weight,
                })
                .collect(),
        }
    }
}

impl WeightedDigraph<f64> {
    pub fn from_json_str(s: &str) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_str(s).map_err(|e| GraphError::Format(e.to_string()))?;
        file.into_graph()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&GraphFile::from(self)).expect("graph serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_mixed_vertex_ids() {
        let g = WeightedDigraph::from_json_str(
            r#"{"vertices":["a",2],"edges":[{"tail":"a","head":2,"weight":0.5},{"tail":2,"head":"a","weight":1.5}]}"#,
        )
        .unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.divergence(), vec![1.0, -1.0]);
        let again = WeightedDigraph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn rejects_bad_weights_and_syntax() {
        let zero = r#"{"vertices":[0,1],"edges":[{"tail":0,"head":1,"weight":0},{"tail":1,"head":0,"weight":1}]}"#;
        assert!(matches!(
            WeightedDigraph::from_json_str(zero),
            Err(GraphError::NonPositiveWeight { edge: 0, .. })
        ));
        // JSON has no NaN/inf literals; they fail at parse time
        let nan = r#"{"vertices":[0,1],"edges":[{"tail":0,"head":1,"weight":NaN}]}"#;
        assert!(matches!(
            WeightedDigraph::from_json_str(nan),
            Err(GraphError::Format(_))
        ));
        let huge = r#"{"vertices":[0,1],"edges":[{"tail":0,"head":1,"weight":1e999},{"tail":1,"head":0,"weight":1}]}"#;
        assert!(WeightedDigraph::from_json_str(huge).is_err());
    }
}
