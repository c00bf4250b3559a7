//! Append-only solution history with derivation links, bookmarks, names and
//! the gallery order, plus the session document that persists them.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::constraints::SideConstraints;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::native::InstanceDocument;
use crate::solution::{Solution, SolutionDocument};

/// Records per history before appends are refused.
pub const HISTORY_CAP: usize = 10_000;

pub const SESSION_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(pub u64);

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Seeded,
    ManualEdit,
    ConstraintChange,
    Reoptimised,
    LoadedCopy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub record_id: RecordId,
    pub solution: Solution,
    pub constraints: SideConstraints,
    pub parents: BTreeSet<RecordId>,
    pub origin: Origin,
    pub name: String,
    pub bookmarked: bool,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GalleryKey {
    /// Ascending objective.
    Objective,
    /// Ascending spread of customers per vehicle, then objective.
    Workload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationArc {
    pub from: RecordId,
    pub to: RecordId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBar {
    pub record_id: RecordId,
    pub objective: f64,
    pub parent_arcs: Vec<DerivationArc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryGraph {
    records: Vec<SolutionRecord>,
    gallery_order: Vec<RecordId>,
    cap: usize,
}

impl Default for HistoryGraph {
    fn default() -> Self {
        Self::new()
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl HistoryGraph {
    pub fn new() -> Self {
        Self::with_cap(HISTORY_CAP)
    }

    pub fn with_cap(cap: usize) -> Self {
        Self {
            records: Vec::new(),
            gallery_order: Vec::new(),
            cap,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[SolutionRecord] {
        &self.records
    }

    pub fn get(&self, id: RecordId) -> Option<&SolutionRecord> {
        let index = usize::try_from(id.0).ok()?.checked_sub(1)?;
        self.records.get(index)
    }

    fn require(&self, id: RecordId) -> Result<&SolutionRecord> {
        self.get(id)
            .ok_or_else(|| Error::usage(format!("record {id} does not exist")))
    }

    fn require_mut(&mut self, id: RecordId) -> Result<&mut SolutionRecord> {
        self.require(id)?;
        Ok(&mut self.records[id.0 as usize - 1])
    }

    /// Appends a snapshot and returns its id. Seeded records take no
    /// parents; every other origin needs at least one.
    pub fn append(
        &mut self,
        solution: &Solution,
        constraints: &SideConstraints,
        parents: impl IntoIterator<Item = RecordId>,
        origin: Origin,
    ) -> Result<RecordId> {
        let parents: BTreeSet<RecordId> = parents.into_iter().collect();
        for &p in &parents {
            self.require(p)?;
        }
        match (origin, parents.is_empty()) {
            (Origin::Seeded, false) => return Err(Error::usage("seeded records have no parents")),
            (Origin::Seeded, true) | (_, false) => {}
            (_, true) => return Err(Error::usage("derived records need at least one parent")),
        }
        if self.records.len() >= self.cap {
            return Err(Error::State(format!("history is full ({} records)", self.cap)));
        }
        let record_id = RecordId(self.records.len() as u64 + 1);
        self.records.push(SolutionRecord {
            record_id,
            solution: solution.clone(),
            constraints: constraints.clone(),
            parents,
            origin,
            name: format!("Solution {}", record_id.0),
            bookmarked: false,
            created_at: now_ms(),
        });
        if origin == Origin::Seeded {
            self.gallery_order.push(record_id);
        }
        Ok(record_id)
    }

    pub fn bookmark(&mut self, id: RecordId, flag: bool) -> Result<&SolutionRecord> {
        let record = self.require_mut(id)?;
        record.bookmarked = flag;
        let seeded = record.origin == Origin::Seeded;
        let listed = self.gallery_order.contains(&id);
        if flag && !listed {
            self.gallery_order.push(id);
        } else if !flag && !seeded && listed {
            self.gallery_order.retain(|&g| g != id);
        }
        self.require(id)
    }

    pub fn rename(&mut self, id: RecordId, name: &str) -> Result<&SolutionRecord> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::usage("name must not be empty"));
        }
        self.require_mut(id)?.name = name.to_string();
        self.require(id)
    }

    pub fn gallery_order(&self) -> &[RecordId] {
        &self.gallery_order
    }

    /// Bookmarked and seeded records in gallery order.
    pub fn gallery(&self) -> Vec<&SolutionRecord> {
        self.gallery_order
            .iter()
            .map(|&id| self.get(id).expect("gallery ids exist"))
            .collect()
    }

    pub fn reorder_gallery(&mut self, key: GalleryKey) {
        let records = &self.records;
        let rec = |id: RecordId| &records[id.0 as usize - 1];
        self.gallery_order.sort_by(|&a, &b| {
            let (ra, rb) = (rec(a), rec(b));
            let by_objective = ra.solution.objective().total_cmp(&rb.solution.objective());
            let primary = match key {
                GalleryKey::Objective => by_objective,
                GalleryKey::Workload => ra
                    .solution
                    .workload_stats()
                    .imbalance()
                    .cmp(&rb.solution.workload_stats().imbalance())
                    .then(by_objective),
            };
            primary.then(a.cmp(&b))
        });
    }

    /// Moves a gallery entry to `position`, shifting the others.
    pub fn move_in_gallery(&mut self, id: RecordId, position: usize) -> Result<()> {
        let from = self
            .gallery_order
            .iter()
            .position(|&g| g == id)
            .ok_or_else(|| Error::usage(format!("record {id} is not in the gallery")))?;
        if position >= self.gallery_order.len() {
            return Err(Error::usage(format!(
                "position {position} is out of range for a gallery of {}",
                self.gallery_order.len()
            )));
        }
        let id = self.gallery_order.remove(from);
        self.gallery_order.insert(position, id);
        Ok(())
    }

    /// Replaces the gallery order; `order` must list every gallery member
    /// exactly once.
    pub fn set_gallery_order(&mut self, order: &[RecordId]) -> Result<()> {
        let current: BTreeSet<RecordId> = self.gallery_order.iter().copied().collect();
        let proposed: BTreeSet<RecordId> = order.iter().copied().collect();
        if proposed.len() != order.len() || proposed != current {
            return Err(Error::usage("gallery order must list every gallery record exactly once"));
        }
        self.gallery_order = order.to_vec();
        Ok(())
    }

    /// One bar per record in append order, with arcs from each parent.
    pub fn histogram_data(&self) -> Vec<HistogramBar> {
        self.records
            .iter()
            .map(|r| HistogramBar {
                record_id: r.record_id,
                objective: r.solution.objective(),
                parent_arcs: r
                    .parents
                    .iter()
                    .map(|&p| DerivationArc { from: p, to: r.record_id })
                    .collect(),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Session document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionDocument {
    pub version: u32,
    pub instance: InstanceDocument,
    pub records: Vec<RecordEntry>,
    pub gallery_order: Vec<RecordId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordEntry {
    pub record_id: RecordId,
    pub solution: SolutionDocument,
    pub parents: Vec<RecordId>,
    pub origin: Origin,
    pub name: String,
    pub bookmarked: bool,
    pub created_at: u64,
}

impl SessionDocument {
    pub fn new(instance: &ProblemInstance, history: &HistoryGraph) -> Self {
        Self {
            version: SESSION_VERSION,
            instance: InstanceDocument::from_instance(instance),
            records: history
                .records
                .iter()
                .map(|r| RecordEntry {
                    record_id: r.record_id,
                    solution: SolutionDocument::new(instance, &r.solution, &r.constraints),
                    parents: r.parents.iter().copied().collect(),
                    origin: r.origin,
                    name: r.name.clone(),
                    bookmarked: r.bookmarked,
                    created_at: r.created_at,
                })
                .collect(),
            gallery_order: history.gallery_order.clone(),
        }
    }

    /// Rebuilds the instance and history, validating every record.
    pub fn restore(self) -> Result<(ProblemInstance, HistoryGraph)> {
        if self.version != SESSION_VERSION {
            return Err(Error::load(
                "version",
                format!("unsupported version {} (expected {SESSION_VERSION})", self.version),
            ));
        }
        let instance = self
            .instance
            .into_instance()
            .map_err(|e| Error::load("instance", e.to_string()))?;
        let mut history = HistoryGraph::new();
        for (i, entry) in self.records.into_iter().enumerate() {
            let at = |field: &str| format!("records[{i}].{field}");
            if entry.record_id != RecordId(i as u64 + 1) {
                return Err(Error::load(
                    at("record_id"),
                    format!("expected {}, found {}", i + 1, entry.record_id),
                ));
            }
            let (solution, constraints) = entry
                .solution
                .into_solution(&instance)
                .map_err(|e| Error::load(at("solution"), e.to_string()))?;
            if entry.parents.iter().any(|p| *p >= entry.record_id) {
                return Err(Error::load(at("parents"), "parents must be earlier records"));
            }
            let parent_count = entry.parents.len();
            history
                .append(&solution, &constraints, entry.parents, entry.origin)
                .map_err(|e| Error::load(at("parents"), e.to_string()))?;
            let record = &mut history.records[i];
            if record.parents.len() != parent_count {
                return Err(Error::load(at("parents"), "duplicate parent"));
            }
            if entry.name.trim().is_empty() || entry.name.trim() != entry.name {
                return Err(Error::load(at("name"), "name must be non-empty and trimmed"));
            }
            record.name = entry.name;
            record.bookmarked = entry.bookmarked;
            record.created_at = entry.created_at;
        }
        let members: BTreeSet<RecordId> = history
            .records
            .iter()
            .filter(|r| r.bookmarked || r.origin == Origin::Seeded)
            .map(|r| r.record_id)
            .collect();
        let listed: BTreeSet<RecordId> = self.gallery_order.iter().copied().collect();
        if listed.len() != self.gallery_order.len() || listed != members {
            return Err(Error::load(
                "gallery_order",
                "must list every bookmarked or seeded record exactly once",
            ));
        }
        history.gallery_order = self.gallery_order;
        Ok((instance, history))
    }
}

/// Serialises the session as a versioned JSON document.
pub fn save_session(instance: &ProblemInstance, history: &HistoryGraph) -> String {
    serde_json::to_string_pretty(&SessionDocument::new(instance, history)).expect("serialisable")
}

pub fn load_session(text: &str) -> Result<(ProblemInstance, HistoryGraph)> {
    let doc: SessionDocument = serde_json::from_str(text)
        .map_err(|e| Error::load(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    doc.restore()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn toy_solution(instance: &ProblemInstance, routes: Vec<Vec<usize>>) -> Solution {
        Solution::new(instance, routes, &SideConstraints::new()).unwrap()
    }

    fn three_seeds() -> (ProblemInstance, HistoryGraph) {
        let inst = fixtures::toy3();
        let none = SideConstraints::new();
        let mut h = HistoryGraph::new();
        for routes in [vec![vec![0, 1], vec![2]], vec![vec![0, 1, 2], vec![]], vec![vec![0], vec![2, 1]]] {
            h.append(&toy_solution(&inst, routes), &none, [], Origin::Seeded).unwrap();
        }
        (inst, h)
    }

    #[test]
    fn first_record_is_one_and_children_link_parents() {
        let inst = fixtures::toy3();
        let none = SideConstraints::new();
        let mut h = HistoryGraph::new();
        let s = toy_solution(&inst, vec![vec![0, 1, 2], vec![]]);
        assert_eq!(h.append(&s, &none, [], Origin::Seeded).unwrap(), RecordId(1));
        let r2 = h.append(&s, &none, [RecordId(1)], Origin::ManualEdit).unwrap();
        assert_eq!(r2, RecordId(2));
        assert_eq!(h.get(r2).unwrap().parents, BTreeSet::from([RecordId(1)]));
        assert_eq!(h.get(r2).unwrap().name, "Solution 2");
        let err = h.append(&s, &none, [RecordId(99)], Origin::ManualEdit).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn parent_rules_by_origin() {
        let inst = fixtures::toy3();
        let none = SideConstraints::new();
        let mut h = HistoryGraph::new();
        let s = toy_solution(&inst, vec![vec![0, 1, 2], vec![]]);
        assert!(h.append(&s, &none, [], Origin::Reoptimised).is_err());
        h.append(&s, &none, [], Origin::Seeded).unwrap();
        assert!(h.append(&s, &none, [RecordId(1)], Origin::Seeded).is_err());
    }

    #[test]
    fn cap_is_an_error_not_an_eviction() {
        let inst = fixtures::toy3();
        let none = SideConstraints::new();
        let mut h = HistoryGraph::with_cap(2);
        let s = toy_solution(&inst, vec![vec![0, 1, 2], vec![]]);
        h.append(&s, &none, [], Origin::Seeded).unwrap();
        h.append(&s, &none, [], Origin::Seeded).unwrap();
        assert!(matches!(h.append(&s, &none, [], Origin::Seeded), Err(Error::State(_))));
        assert_eq!(h.len(), 2);
    }

    #[test]
    fn bookmark_and_rename_touch_annotations_only() {
        let (inst, mut h) = three_seeds();
        let s = h.get(RecordId(1)).unwrap().solution.clone();
        let child = h
            .append(&s, &SideConstraints::new(), [RecordId(1)], Origin::ManualEdit)
            .unwrap();
        assert_eq!(h.gallery().len(), 3);
        h.bookmark(child, true).unwrap();
        assert!(h.gallery().iter().any(|r| r.record_id == child));
        let before = h.get(RecordId(1)).unwrap().solution.objective();
        h.rename(RecordId(1), "balanced-4-4-4").unwrap();
        assert_eq!(h.get(RecordId(1)).unwrap().name, "balanced-4-4-4");
        assert_eq!(h.get(RecordId(1)).unwrap().solution.objective(), before);
        assert!(matches!(h.rename(RecordId(1), ""), Err(Error::Usage(_))));
        assert!(matches!(h.rename(RecordId(42), "x"), Err(Error::Usage(_))));
        assert!(matches!(h.bookmark(RecordId(42), true), Err(Error::Usage(_))));
        h.bookmark(child, false).unwrap();
        assert!(!h.gallery().iter().any(|r| r.record_id == child));
        // unbookmarking a seed keeps it in the gallery
        h.bookmark(RecordId(2), false).unwrap();
        assert_eq!(h.gallery().len(), 3);
        let _ = inst;
    }

    #[test]
    fn gallery_lists_seeds_in_seed_order() {
        let (_, h) = three_seeds();
        let ids: Vec<RecordId> = h.gallery().iter().map(|r| r.record_id).collect();
        assert_eq!(ids, vec![RecordId(1), RecordId(2), RecordId(3)]);
    }

    #[test]
    fn reorder_by_objective_sorts_ascending() {
        let (_, mut h) = three_seeds();
        h.reorder_gallery(GalleryKey::Objective);
        let objectives: Vec<f64> = h.gallery().iter().map(|r| r.solution.objective()).collect();
        assert!(objectives.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(objectives[0], 40.0);
    }

    #[test]
    fn manual_move_of_last_to_front() {
        let (_, mut h) = three_seeds();
        h.move_in_gallery(RecordId(3), 0).unwrap();
        assert_eq!(h.gallery_order(), &[RecordId(3), RecordId(1), RecordId(2)]);
        assert!(h.move_in_gallery(RecordId(3), 3).is_err());
        assert!(h.set_gallery_order(&[RecordId(1), RecordId(2)]).is_err());
        h.set_gallery_order(&[RecordId(2), RecordId(1), RecordId(3)]).unwrap();
        assert_eq!(h.gallery_order(), &[RecordId(2), RecordId(1), RecordId(3)]);
    }

    #[test]
    fn histogram_chain_and_branch() {
        assert!(HistoryGraph::new().histogram_data().is_empty());
        let inst = fixtures::toy3();
        let none = SideConstraints::new();
        let s = toy_solution(&inst, vec![vec![0, 1, 2], vec![]]);
        let mut chain = HistoryGraph::new();
        chain.append(&s, &none, [], Origin::Seeded).unwrap();
        chain.append(&s, &none, [RecordId(1)], Origin::ManualEdit).unwrap();
        chain.append(&s, &none, [RecordId(2)], Origin::Reoptimised).unwrap();
        let arcs: Vec<(u64, u64)> = chain
            .histogram_data()
            .iter()
            .flat_map(|b| b.parent_arcs.iter().map(|a| (a.from.0, a.to.0)))
            .collect();
        assert_eq!(arcs, vec![(1, 2), (2, 3)]);

        let mut branch = HistoryGraph::new();
        branch.append(&s, &none, [], Origin::Seeded).unwrap();
        branch.append(&s, &none, [RecordId(1)], Origin::ManualEdit).unwrap();
        branch.append(&s, &none, [RecordId(1)], Origin::ConstraintChange).unwrap();
        let arcs: Vec<(u64, u64)> = branch
            .histogram_data()
            .iter()
            .flat_map(|b| b.parent_arcs.iter().map(|a| (a.from.0, a.to.0)))
            .collect();
        assert_eq!(arcs, vec![(1, 2), (1, 3)]);
    }

    #[test]
    fn session_round_trip_keeps_annotations() {
        let (inst, mut h) = three_seeds();
        h.bookmark(RecordId(2), true).unwrap();
        h.rename(RecordId(3), "wide").unwrap();
        h.move_in_gallery(RecordId(3), 0).unwrap();
        let text = save_session(&inst, &h);
        let (inst2, h2) = load_session(&text).unwrap();
        assert_eq!(inst2, inst);
        assert_eq!(h2, h);
        assert_eq!(h2.histogram_data(), h.histogram_data());
    }

    #[test]
    fn truncated_and_mismatched_documents_fail_with_location() {
        let (inst, h) = three_seeds();
        let text = save_session(&inst, &h);
        let err = load_session(&text[..text.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::Load { .. }));
        let bumped = text.replacen("\"version\": 1", "\"version\": 2", 1);
        match load_session(&bumped).unwrap_err() {
            Error::Load { location, .. } => assert_eq!(location, "version"),
            other => panic!("unexpected {other:?}"),
        }
        let tampered = text.replacen("\"parents\": []", "\"parents\": [3]", 1);
        match load_session(&tampered).unwrap_err() {
            Error::Load { location, .. } => assert_eq!(location, "records[0].parents"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
