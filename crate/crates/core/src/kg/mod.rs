//! Knowledge graphs, alignments and the functionality-weighted adjacency.

mod adjacency;
mod alignment;
mod io;

use std::collections::{HashMap, HashSet};

pub use adjacency::WeightedAdjacency;
pub use alignment::{split_seed, AlignmentRole, AlignmentSet};
pub use io::{
    load_alignment, load_entity_list, load_kg, load_kg_with_entities, write_alignment,
    write_entity_list, write_kg,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

/// A graph `(E, R, T)` with dense ids assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: HashMap<String, usize>,
    relation_ids: HashMap<String, usize>,
    triples: Vec<Triple>,
}

impl KnowledgeGraph {
    pub fn builder() -> KnowledgeGraphBuilder {
        KnowledgeGraphBuilder::default()
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity_label(&self, id: usize) -> &str {
        &self.entities[id]
    }

    pub fn relation_label(&self, id: usize) -> &str {
        &self.relations[id]
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entities
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relations
    }

    pub fn entity_id(&self, label: &str) -> Option<usize> {
        self.entity_ids.get(label).copied()
    }

    pub fn relation_id(&self, label: &str) -> Option<usize> {
        self.relation_ids.get(label).copied()
    }
}

/// Incremental construction; duplicate triples are collapsed, self-loops kept.
#[derive(Debug, Default)]
pub struct KnowledgeGraphBuilder {
    kg: KnowledgeGraph,
    seen: HashSet<Triple>,
}

impl KnowledgeGraphBuilder {
    pub fn entity(&mut self, label: &str) -> usize {
        intern(&mut self.kg.entities, &mut self.kg.entity_ids, label)
    }

    pub fn relation(&mut self, label: &str) -> usize {
        intern(&mut self.kg.relations, &mut self.kg.relation_ids, label)
    }

    /// Returns `true` if the triple was new.
    pub fn triple(&mut self, head: &str, relation: &str, tail: &str) -> bool {
        let head = self.entity(head);
        let relation = self.relation(relation);
        let tail = self.entity(tail);
        self.triple_ids(head, relation, tail)
    }

    /// Add a triple by ids already handed out by this builder.
    pub fn triple_ids(&mut self, head: usize, relation: usize, tail: usize) -> bool {
        assert!(head < self.kg.entities.len() && tail < self.kg.entities.len());
        assert!(relation < self.kg.relations.len());
        let t = Triple {
            head,
            relation,
            tail,
        };
        if self.seen.insert(t) {
            self.kg.triples.push(t);
            true
        } else {
            false
        }
    }

    pub fn num_triples(&self) -> usize {
        self.kg.triples.len()
    }

    pub fn build(self) -> KnowledgeGraph {
        self.kg
    }
}

fn intern(labels: &mut Vec<String>, ids: &mut HashMap<String, usize>, label: &str) -> usize {
    if let Some(&id) = ids.get(label) {
        return id;
    }
    let id = labels.len();
    labels.push(label.to_owned());
    ids.insert(label.to_owned(), id);
    id
}
