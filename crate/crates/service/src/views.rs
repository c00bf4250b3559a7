//! Response payloads.

use serde::{Deserialize, Serialize};
use vrptw_core::fixtures::FixtureMetadata;
use vrptw_core::provenance::{HistogramBar, HistoryGraph, Origin, RecordId, SolutionRecord};
use vrptw_core::{InstanceDocument, ProblemInstance, SolutionDocument};

use crate::state::{Session, Viewport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordView {
    pub record_id: RecordId,
    pub name: String,
    pub origin: Origin,
    pub parents: Vec<RecordId>,
    pub bookmarked: bool,
    pub created_at: u64,
    pub objective: f64,
    pub feasible: bool,
    pub solution: SolutionDocument,
}

impl RecordView {
    pub fn new(instance: &ProblemInstance, record: &SolutionRecord) -> Self {
        Self {
            record_id: record.record_id,
            name: record.name.clone(),
            origin: record.origin,
            parents: record.parents.iter().copied().collect(),
            bookmarked: record.bookmarked,
            created_at: record.created_at,
            objective: record.solution.objective(),
            feasible: record.solution.is_feasible(),
            solution: SolutionDocument::new(instance, &record.solution, &record.constraints),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewportView {
    pub viewport: Viewport,
    pub record: Option<RecordView>,
    pub job_id: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewportsView {
    pub left: ViewportView,
    pub right: ViewportView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub bars: Vec<HistogramBar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryView {
    pub order: Vec<RecordId>,
    pub records: Vec<RecordView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: u64,
    pub fixture: Option<String>,
    pub metadata: Option<FixtureMetadata>,
    pub instance: InstanceDocument,
    pub seeded: Vec<RecordId>,
    pub seeding_note: Option<String>,
    pub viewports: ViewportsView,
    pub history: HistoryView,
    pub gallery: GalleryView,
}

pub fn history_view(history: &HistoryGraph) -> HistoryView {
    HistoryView {
        bars: history.histogram_data(),
    }
}

pub fn gallery_view(instance: &ProblemInstance, history: &HistoryGraph) -> GalleryView {
    GalleryView {
        order: history.gallery_order().to_vec(),
        records: history.gallery().into_iter().map(|r| RecordView::new(instance, r)).collect(),
    }
}

pub fn viewport_view(session: &Session, viewport: Viewport) -> ViewportView {
    let slot = &session.viewports[viewport.index()];
    ViewportView {
        viewport,
        record: slot
            .record
            .and_then(|id| session.history.get(id))
            .map(|r| RecordView::new(&session.instance, r)),
        job_id: slot.job,
    }
}

pub fn session_view(session: &Session) -> SessionView {
    SessionView {
        session_id: session.id,
        fixture: session.fixture.clone(),
        metadata: session.metadata.clone(),
        instance: InstanceDocument::from_instance(&session.instance),
        seeded: session.seeded.clone(),
        seeding_note: session.seeding_note.clone(),
        viewports: ViewportsView {
            left: viewport_view(session, Viewport::Left),
            right: viewport_view(session, Viewport::Right),
        },
        history: history_view(&session.history),
        gallery: gallery_view(&session.instance, &session.history),
    }
}
