//! Background evaluation runs on a bounded pool.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use tokio::sync::Semaphore;
use triz_core::eval::export::{export_report, import_report, ExportFormat};
use triz_core::eval::{EvalKind, EvalReport};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Job {
    pub id: String,
    pub kind: EvalKind,
    pub status: JobStatus,
    pub report_id: Option<String>,
    pub error: Option<ApiError>,
}

pub struct Jobs {
    next: AtomicU64,
    jobs: Mutex<BTreeMap<String, Job>>,
    reports: Mutex<BTreeMap<String, EvalReport>>,
    permits: Arc<Semaphore>,
    reports_dir: Option<PathBuf>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl Jobs {
    pub fn new(workers: usize, reports_dir: Option<PathBuf>) -> Self {
        Self { next: AtomicU64::new(1), jobs: Mutex::new(BTreeMap::new()), reports: Mutex::new(BTreeMap::new()), permits: Arc::new(Semaphore::new(workers.max(1))), reports_dir }
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.jobs.lock().unwrap().get(id).cloned()
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut Job)) {
        if let Some(job) = self.jobs.lock().unwrap().get_mut(id) {
            f(job);
        }
    }

    /// Queues `run` and returns the job as first recorded.
    pub fn submit(self: &Arc<Self>, kind: EvalKind, run: impl FnOnce() -> Result<EvalReport, ApiError> + Send + 'static) -> Job {
        let id = format!("job-{}", self.next.fetch_add(1, Ordering::SeqCst));
        let job = Job { id: id.clone(), kind, status: JobStatus::Queued, report_id: None, error: None };
        self.jobs.lock().unwrap().insert(id.clone(), job.clone());
        let jobs = Arc::clone(self);
        tokio::spawn(async move {
            let _permit = jobs.permits.clone().acquire_owned().await.expect("semaphore is never closed");
            jobs.update(&id, |j| j.status = JobStatus::Running);
            let outcome = match tokio::task::spawn_blocking(run).await {
                Ok(r) => r.and_then(|report| jobs.store(report)),
                Err(e) => Err(e.into()),
            };
            jobs.update(&id, |j| match outcome {
                Ok(report_id) => {
                    j.status = JobStatus::Succeeded;
                    j.report_id = Some(report_id);
                }
                Err(e) => {
                    j.status = JobStatus::Failed;
                    j.error = Some(e);
                }
            });
        });
        job
    }

    fn store(&self, report: EvalReport) -> Result<String, ApiError> {
        let id = report.id.clone();
        if let Some(dir) = &self.reports_dir {
            std::fs::create_dir_all(dir).map_err(|e| ApiError::internal(format!("{}: {e}", dir.display())))?;
            export_report(&report, ExportFormat::Json, &dir.join(format!("{id}.json")))?;
        }
        self.reports.lock().unwrap().insert(id.clone(), report);
        Ok(id)
    }

    pub fn report(&self, id: &str) -> Result<EvalReport, ApiError> {
        if let Some(r) = self.reports.lock().unwrap().get(id) {
            return Ok(r.clone());
        }
        let path = self.reports_dir.as_ref().filter(|_| valid_id(id)).map(|d| d.join(format!("{id}.json")));
        match path {
            Some(p) if p.exists() => Ok(import_report(&p)?),
            _ => Err(ApiError::not_found(format!("report {id}"))),
        }
    }

    /// Ids of reports held in memory or in the reports directory.
    pub fn report_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.reports.lock().unwrap().keys().cloned().collect();
        if let Some(entries) = self.reports_dir.as_ref().and_then(|d| std::fs::read_dir(d).ok()) {
            ids.extend(entries.filter_map(|e| e.ok()?.file_name().to_str()?.strip_suffix(".json").map(str::to_owned)));
        }
        ids.sort();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use triz_core::eval::{Aggregation, MatchMode};

    #[test]
    fn report_ids_are_restricted_to_safe_names() {
        assert!(valid_id("r-0123abcd"));
        for bad in ["", "../etc", "a/b", "r.json", &"x".repeat(65)] {
            assert!(!valid_id(bad), "{bad:?}");
        }
    }

    #[test]
    fn stored_reports_are_found_in_memory_and_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let jobs = Jobs::new(1, Some(dir.path().to_owned()));
        let mut report = EvalReport::new(EvalKind::Contradiction, "seed", Some(MatchMode::OrderedPair), Aggregation::Macro);
        report.finalize();
        let id = jobs.store(report.clone()).unwrap();
        assert_eq!(jobs.report(&id).unwrap(), report);
        let reopened = Jobs::new(1, Some(dir.path().to_owned()));
        assert_eq!(reopened.report(&id).unwrap(), report);
        assert_eq!(reopened.report_ids(), vec![id]);
        assert_eq!(reopened.report("../x").unwrap_err().code, "not_found");
    }

    #[tokio::test]
    async fn submitted_jobs_record_success_and_failure() {
        let jobs = Arc::new(Jobs::new(1, None));
        let ok = jobs.submit(EvalKind::Solution, || {
            let mut r = EvalReport::new(EvalKind::Solution, "seed", None, Aggregation::Macro);
            r.finalize();
            Ok(r)
        });
        let failed = jobs.submit(EvalKind::Solution, || Err(ApiError::invalid_input("nope")));
        assert_eq!(ok.status, JobStatus::Queued);
        for _ in 0..200 {
            if [&ok.id, &failed.id].iter().all(|id| matches!(jobs.get(id).unwrap().status, JobStatus::Succeeded | JobStatus::Failed)) {
                break;
            }
            tokio::time::sleep(std::time::Duration::from_millis(5)).await;
        }
        assert_eq!(jobs.get(&ok.id).unwrap().status, JobStatus::Succeeded);
        let f = jobs.get(&failed.id).unwrap();
        assert_eq!((f.status, f.error.unwrap().code), (JobStatus::Failed, "invalid_input"));
        assert!(jobs.get("job-99").is_none());
    }
}
