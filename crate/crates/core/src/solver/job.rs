//! Background solve jobs with cancellation and periodic progress events.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{improve_observed, reoptimise_observed, Phase, Progress, SearchObserver, SolveBudget, SolveOutcome, SolveStatus};
use crate::constraints::SideConstraints;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::solution::Solution;

/// Longest gap between two progress events while a job runs.
const TICK: Duration = Duration::from_millis(250);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Improve,
    Reoptimise,
}

#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub kind: JobKind,
    pub instance: Arc<ProblemInstance>,
    pub constraints: SideConstraints,
    pub start: Solution,
    pub budget: SolveBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressEvent {
    pub seq: u64,
    /// Seconds since the job started.
    pub elapsed: f64,
    pub iterations: u64,
    pub best_objective: Option<f64>,
    pub best_feasible: Option<bool>,
    pub phase: Phase,
    /// Set on the terminal event only.
    pub status: Option<SolveStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ProgressEvent {
    pub fn is_terminal(&self) -> bool {
        self.phase == Phase::Finished
    }
}

struct Shared {
    cancel: Arc<AtomicBool>,
    latest: Arc<Mutex<Option<Progress>>>,
}

impl SearchObserver for Shared {
    fn on_progress(&mut self, progress: &Progress) {
        *self.latest.lock().expect("progress lock") = Some(*progress);
    }

    fn should_stop(&self) -> bool {
        self.cancel.load(Ordering::Relaxed)
    }
}

pub struct SolveJob {
    cancel: Arc<AtomicBool>,
    events: Receiver<ProgressEvent>,
    coordinator: JoinHandle<Result<SolveOutcome>>,
}

impl SolveJob {
    /// Starts the solve on a worker thread.
    pub fn spawn(request: SolveRequest) -> Self {
        let cancel = Arc::new(AtomicBool::new(false));
        let latest = Arc::new(Mutex::new(None));
        let (event_tx, events) = mpsc::channel();
        let (done_tx, done_rx) = mpsc::channel();
        let started = Instant::now();

        let mut observer = Shared {
            cancel: cancel.clone(),
            latest: latest.clone(),
        };
        thread::spawn(move || {
            let r = &request;
            let outcome = match r.kind {
                JobKind::Improve => improve_observed(&r.instance, &r.constraints, &r.start, &r.budget, &mut observer),
                JobKind::Reoptimise => {
                    reoptimise_observed(&r.instance, &r.constraints, &r.start, &r.budget, &mut observer)
                }
            };
            let _ = done_tx.send(outcome);
        });

        let coordinator = thread::spawn(move || {
            let mut seq = 0u64;
            let mut emit = |progress: Option<Progress>, phase: Phase, status, message| {
                let event = ProgressEvent {
                    seq,
                    elapsed: started.elapsed().as_secs_f64(),
                    iterations: progress.map_or(0, |p| p.iterations),
                    best_objective: progress.map(|p| p.best_objective),
                    best_feasible: progress.map(|p| p.best_feasible),
                    phase,
                    status,
                    message,
                };
                seq += 1;
                let _ = event_tx.send(event);
            };
            emit(None, Phase::Started, None, None);
            loop {
                match done_rx.recv_timeout(TICK) {
                    Ok(outcome) => {
                        let progress = *latest.lock().expect("progress lock");
                        match &outcome {
                            Ok(o) => {
                                let progress = o.solution.as_ref().map(|s| Progress {
                                    elapsed: o.elapsed,
                                    iterations: o.iterations,
                                    best_objective: s.objective(),
                                    best_feasible: s.is_feasible(),
                                    phase: Phase::Finished,
                                });
                                emit(progress, Phase::Finished, Some(o.status), o.message.clone());
                            }
                            Err(e) => emit(progress, Phase::Finished, None, Some(e.to_string())),
                        }
                        return outcome;
                    }
                    Err(RecvTimeoutError::Timeout) => {
                        let progress = *latest.lock().expect("progress lock");
                        let phase = progress.map_or(Phase::Started, |p| p.phase);
                        emit(progress, phase, None, None);
                    }
                    Err(RecvTimeoutError::Disconnected) => {
                        let message = "solver worker stopped unexpectedly".to_string();
                        emit(None, Phase::Finished, None, Some(message.clone()));
                        return Err(Error::State(message));
                    }
                }
            }
        });

        Self {
            cancel,
            events,
            coordinator,
        }
    }

    /// Asks the job to stop; it winds down at the next poll.
    pub fn cancel(&self) {
        self.cancel.store(true, Ordering::Relaxed);
    }

    /// A flag that cancels the job when set.
    pub fn cancel_handle(&self) -> Arc<AtomicBool> {
        self.cancel.clone()
    }

    pub fn events(&self) -> &Receiver<ProgressEvent> {
        &self.events
    }

    /// Waits for the job to finish.
    pub fn wait(self) -> Result<SolveOutcome> {
        self.coordinator
            .join()
            .unwrap_or_else(|_| Err(Error::State("solver coordinator panicked".to_string())))
    }
}

/// Progress events of `job` in order, ending with the terminal event.
pub fn progress_stream(job: &SolveJob) -> impl Iterator<Item = ProgressEvent> + '_ {
    job.events.iter()
}
