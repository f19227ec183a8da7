//! JSON graph documents:
//! `{"vertices":["q1","q2"],"edges":[{"id":"a1","from":"q1","to":"q1","label":"b1"}, ...]}`.

use serde::{Deserialize, Serialize};

use super::{DirectedGraph, Graph, LabelledGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Parses and validates a graph document.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let doc: GraphDocument = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    doc.into_graph()
}

impl GraphDocument {
    pub fn into_graph(self) -> Result<Graph> {
        let index = |edge: &str, name: &str| {
            self.vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::DanglingEndpoint { edge: edge.to_string(), vertex: name.to_string() })
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push((e.id.clone(), index(&e.id, &e.from)?, index(&e.id, &e.to)?));
        }
        let base = DirectedGraph::new(self.vertices.clone(), edges)?;

        let labelled = self.edges.iter().filter(|e| e.label.is_some()).count();
        if labelled == 0 {
            return Ok(Graph::Plain(base));
        }
        if let Some(e) = self.edges.iter().find(|e| e.label.is_none()) {
            return Err(Error::PartialLabelling { edge: e.id.clone() });
        }
        let mut label_names: Vec<String> = Vec::new();
        let mut labelling = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let l = e.label.as_ref().expect("checked above");
            let id = match label_names.iter().position(|n| n == l) {
                Some(i) => i,
                None => {
                    label_names.push(l.clone());
                    label_names.len() - 1
                }
            };
            labelling.push(id);
        }
        Ok(Graph::Labelled(LabelledGraph::new(base, label_names, labelling)?))
    }

    pub fn from_graph(g: &Graph) -> Self {
        let base = g.base();
        let edges = (0..base.num_edges())
            .map(|a| EdgeDocument {
                id: base.edge_name(a).to_string(),
                from: base.vertex_name(base.source(a)).to_string(),
                to: base.vertex_name(base.goal(a)).to_string(),
                label: g.labelled().map(|lg| lg.label_names()[lg.label(a)].clone()),
            })
            .collect();
        Self { vertices: base.vertex_names().to_vec(), edges }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIB: &str = r#"{"vertices":["q1","q2"],"edges":[
        {"id":"a1","from":"q1","to":"q1"},
        {"id":"a2","from":"q1","to":"q2"},
        {"id":"a3","from":"q2","to":"q1"}]}"#;

    #[test]
    fn parses_fibonacci() {
        let g = parse_graph(FIB).unwrap();
        assert!(g.labelled().is_none());
        assert_eq!(g.base().num_vertices(), 2);
        assert_eq!(g.base().num_edges(), 3);
        assert_eq!(g.base().goal(1), 1);
    }

    #[test]
    fn parses_single_loop() {
        let g = parse_graph(r#"{"vertices":["q"],"edges":[{"id":"a","from":"q","to":"q"}]}"#).unwrap();
        assert_eq!(g.base().num_edges(), 1);
    }

    #[test]
    fn rejects_bad_documents() {
        let dangling = r#"{"vertices":["q1","q2"],"edges":[{"id":"a","from":"q1","to":"q6"}]}"#;
        assert!(matches!(parse_graph(dangling), Err(Error::DanglingEndpoint { .. })));
        let empty = r#"{"vertices":["q1"],"edges":[]}"#;
        assert!(matches!(parse_graph(empty), Err(Error::EmptyEdgeSet)));
        assert!(matches!(parse_graph("{not json"), Err(Error::Malformed(_))));
        let nondet = r#"{"vertices":["q"],"edges":[
            {"id":"a","from":"q","to":"q","label":"b"},
            {"id":"c","from":"q","to":"q","label":"b"}]}"#;
        assert!(matches!(parse_graph(nondet), Err(Error::NondeterministicLabelling { .. })));
        let partial = r#"{"vertices":["q"],"edges":[
            {"id":"a","from":"q","to":"q","label":"b"},
            {"id":"c","from":"q","to":"q"}]}"#;
        assert!(matches!(parse_graph(partial), Err(Error::PartialLabelling { .. })));
    }

    #[test]
    fn labelled_round_trip() {
        let text = r#"{"vertices":["q1","q2"],"edges":[
            {"id":"a1","from":"q1","to":"q1","label":"b1"},
            {"id":"a2","from":"q1","to":"q2","label":"b2"},
            {"id":"a3","from":"q2","to":"q1","label":"b1"}]}"#;
        let g = parse_graph(text).unwrap();
        let lg = g.labelled().unwrap();
        assert_eq!(lg.labelling(), &[0, 1, 0]);
        let again = parse_graph(&GraphDocument::from_graph(&g).to_json()).unwrap();
        assert_eq!(again, g);
    }
}
