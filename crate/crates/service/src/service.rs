use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use scriptrate_core::aggregator::{build_report, new_file_id, Report};
use scriptrate_core::analyzer::{
    Analyzer, AnalyzerConfig, AnalyzerKind, MockBackend, SceneVerdict, TcpBackend,
};
use scriptrate_core::ingest::RawDocument;
use scriptrate_core::lexicon::{Lexicon, LexiconMatch};
use scriptrate_core::par::Parallelism;
use scriptrate_core::pipeline::{Pipeline, PipelineConfig};
use scriptrate_core::segmenter::{estimate_tokens, Scene};
use scriptrate_core::{Category, Confidence, Rating, VerdictSource};

use crate::error::ServiceError;
use crate::store::{AuditEntry, SessionRecord, Store, VerdictRow};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub retention: Duration,
    pub max_upload_bytes: usize,
    pub max_concurrent_uploads: usize,
    /// Chat requests must stay below this many estimated tokens.
    pub chat_token_limit: usize,
    pub analyzer: AnalyzerConfig,
    pub parallelism: Parallelism,
    pub lexicon: Lexicon,
    pub model_addr: Option<String>,
    pub mock: Option<MockBackend>,
    /// `None` keeps sessions in memory.
    pub db_path: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            retention: Duration::from_secs(24 * 3600),
            max_upload_bytes: 50 * 1024 * 1024,
            max_concurrent_uploads: 4,
            chat_token_limit: 500,
            analyzer: AnalyzerConfig::default(),
            parallelism: Parallelism::Auto,
            lexicon: Lexicon::default_rules(),
            model_addr: None,
            mock: None,
            db_path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub file_id: String,
    pub status: ProgressStatus,
    pub done: usize,
    pub total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatVerdict {
    pub rating: Rating,
    pub label: Option<Category>,
    pub why: String,
    pub anchors: Vec<LexiconMatch>,
    pub confidence: Confidence,
    pub source: VerdictSource,
    pub degraded: bool,
}

type Clock = Box<dyn Fn() -> i64 + Send + Sync>;

fn system_clock() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

/// Session-holding analysis service, independent of the HTTP layer.
pub struct Service {
    config: ServiceConfig,
    pipelines: HashMap<AnalyzerKind, Pipeline>,
    store: Mutex<Store>,
    progress: Mutex<HashMap<String, Progress>>,
    session_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    clock: Clock,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Service {
    pub fn new(config: ServiceConfig) -> Result<Service, ServiceError> {
        let store = match &config.db_path {
            Some(p) => Store::open(p)?,
            None => Store::in_memory()?,
        };
        let pipeline_config = PipelineConfig {
            parallelism: config.parallelism,
            ..PipelineConfig::default()
        };
        let mut pipelines = HashMap::new();
        let rules = Analyzer::rules(config.lexicon.clone(), config.analyzer.clone())?;
        pipelines.insert(AnalyzerKind::Rules, Pipeline::new(rules, pipeline_config));
        if let Some(addr) = &config.model_addr {
            let cfg = AnalyzerConfig {
                kind: AnalyzerKind::Model,
                ..config.analyzer.clone()
            };
            let analyzer = Analyzer::with_backend(config.lexicon.clone(), cfg, Box::new(TcpBackend::new(addr.clone())))?;
            pipelines.insert(AnalyzerKind::Model, Pipeline::new(analyzer, pipeline_config));
        }
        if let Some(mock) = &config.mock {
            let cfg = AnalyzerConfig {
                kind: AnalyzerKind::Mock,
                ..config.analyzer.clone()
            };
            let analyzer = Analyzer::with_backend(config.lexicon.clone(), cfg, Box::new(mock.clone()))?;
            pipelines.insert(AnalyzerKind::Mock, Pipeline::new(analyzer, pipeline_config));
        }
        Ok(Service {
            config,
            pipelines,
            store: Mutex::new(store),
            progress: Mutex::new(HashMap::new()),
            session_locks: Mutex::new(HashMap::new()),
            clock: Box::new(system_clock),
        })
    }

    /// Replaces the wall clock (unix seconds), for tests.
    pub fn with_clock(mut self, clock: impl Fn() -> i64 + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn pipeline(&self, kind: AnalyzerKind) -> Result<&Pipeline, ServiceError> {
        self.pipelines
            .get(&kind)
            .ok_or_else(|| ServiceError::BadRequest(format!("analyzer {kind:?} is not configured on this server")))
    }

    fn session_lock(&self, file_id: &str) -> Arc<Mutex<()>> {
        lock(&self.session_locks)
            .entry(file_id.to_string())
            .or_default()
            .clone()
    }

    pub fn handle_chat(&self, text: &str, kind: AnalyzerKind) -> Result<ChatVerdict, ServiceError> {
        if text.trim().is_empty() {
            return Err(ServiceError::BadRequest("text is empty".into()));
        }
        let tokens = estimate_tokens(text);
        if tokens >= self.config.chat_token_limit {
            return Err(ServiceError::PayloadTooLarge(format!(
                "chat text is about {tokens} tokens; the limit is {}. Use /upload for full documents",
                self.config.chat_token_limit
            )));
        }
        let lines = text.split('\n').count();
        let scene = Scene::new(0, String::new(), text.to_string(), (0, lines - 1));
        let outcome = self.pipeline(kind)?.analyzer().analyze_scene_or_fallback(&scene);
        let v = outcome.verdict;
        Ok(ChatVerdict {
            rating: v.rating,
            label: v.label,
            why: v.why,
            anchors: v.anchors,
            confidence: v.confidence,
            source: v.source,
            degraded: outcome.degraded,
        })
    }

    /// Registers an upload and returns its id; call [`Service::run_upload`]
    /// to process it.
    pub fn begin_upload(&self) -> String {
        let file_id = new_file_id();
        lock(&self.progress).insert(
            file_id.clone(),
            Progress {
                file_id: file_id.clone(),
                status: ProgressStatus::Pending,
                done: 0,
                total: 0,
                error: None,
            },
        );
        file_id
    }

    fn set_progress(&self, file_id: &str, f: impl FnOnce(&mut Progress)) {
        if let Some(p) = lock(&self.progress).get_mut(file_id) {
            f(p);
        }
    }

    /// Full analysis of an uploaded document. Returns the stored report.
    pub fn handle_upload(&self, filename: &str, bytes: Vec<u8>, kind: AnalyzerKind) -> Result<String, ServiceError> {
        let file_id = self.begin_upload();
        self.run_upload(&file_id, filename, bytes, kind)
    }

    pub fn run_upload(
        &self,
        file_id: &str,
        filename: &str,
        bytes: Vec<u8>,
        kind: AnalyzerKind,
    ) -> Result<String, ServiceError> {
        let result = self.analyze_and_store(file_id, filename, bytes, kind);
        match &result {
            Ok(_) => self.set_progress(file_id, |p| {
                p.status = ProgressStatus::Done;
                p.done = p.total;
            }),
            Err(e) => {
                let msg = e.to_string();
                self.set_progress(file_id, |p| {
                    p.status = ProgressStatus::Failed;
                    p.error = Some(msg);
                })
            }
        }
        result
    }

    fn analyze_and_store(
        &self,
        file_id: &str,
        filename: &str,
        bytes: Vec<u8>,
        kind: AnalyzerKind,
    ) -> Result<String, ServiceError> {
        if bytes.len() > self.config.max_upload_bytes {
            return Err(ServiceError::PayloadTooLarge(format!(
                "upload of {} bytes exceeds the {} byte limit",
                bytes.len(),
                self.config.max_upload_bytes
            )));
        }
        let pipeline = self.pipeline(kind)?;
        self.set_progress(file_id, |p| p.status = ProgressStatus::Running);
        let on_progress = |done: usize, total: usize| {
            self.set_progress(file_id, |p| {
                p.total = total;
                p.done = p.done.max(done);
            })
        };
        let raw = RawDocument::new(bytes, filename);
        let analysis = pipeline.run_with_progress(&raw, file_id.to_string(), &on_progress)?;
        let report_json = analysis.report.to_json();
        let verdicts = analysis
            .report
            .verdicts
            .iter()
            .map(|v| VerdictRow {
                current: v.clone(),
                machine: v.clone(),
            })
            .collect();
        let record = SessionRecord {
            file_id: file_id.to_string(),
            created_at: (self.clock)(),
            saved: false,
            filename: filename.to_string(),
            analyzer: kind,
            scenes: analysis.scenes,
            verdicts,
            report_json: report_json.clone(),
        };
        lock(&self.store).insert(&record)?;
        Ok(report_json)
    }

    pub fn report(&self, file_id: &str) -> Result<String, ServiceError> {
        lock(&self.store)
            .report_json(file_id)?
            .ok_or_else(|| not_found(file_id))
    }

    pub fn progress(&self, file_id: &str) -> Result<Progress, ServiceError> {
        if let Some(p) = lock(&self.progress).get(file_id) {
            return Ok(p.clone());
        }
        let record = lock(&self.store).load(file_id)?.ok_or_else(|| not_found(file_id))?;
        let total = record.scenes.len();
        Ok(Progress {
            file_id: file_id.to_string(),
            status: ProgressStatus::Done,
            done: total,
            total,
            error: None,
        })
    }

    fn load_for_update(&self, file_id: &str, index: usize) -> Result<SessionRecord, ServiceError> {
        let record = lock(&self.store).load(file_id)?.ok_or_else(|| not_found(file_id))?;
        if index >= record.scenes.len() {
            return Err(ServiceError::BadRequest(format!(
                "scene {index} out of range; the document has {} scenes",
                record.scenes.len()
            )));
        }
        Ok(record)
    }

    fn rebuild(record: &SessionRecord, degraded: bool) -> Result<String, ServiceError> {
        let current: Vec<SceneVerdict> = record.verdicts.iter().map(|r| r.current.clone()).collect();
        let report = build_report(record.file_id.clone(), &record.scenes, &current, degraded)?;
        Ok(report.to_json())
    }

    fn stored_report(record: &SessionRecord) -> Result<Report, ServiceError> {
        Report::from_json(&record.report_json).map_err(|e| ServiceError::Internal(e.to_string()))
    }

    /// Re-runs analysis for one scene, optionally with a new body. A human
    /// override stays in force unless `clear_override` is set.
    pub fn reanalyze_scene(
        &self,
        file_id: &str,
        index: usize,
        edited_body: Option<&str>,
        clear_override: bool,
    ) -> Result<(SceneVerdict, String), ServiceError> {
        let guard = self.session_lock(file_id);
        let _held = lock(&guard);
        let mut record = self.load_for_update(file_id, index)?;
        if let Some(body) = edited_body {
            record.scenes[index] = record.scenes[index].with_body(body);
        }
        let pipeline = self
            .pipelines
            .get(&record.analyzer)
            .or_else(|| self.pipelines.get(&AnalyzerKind::Rules))
            .expect("rules pipeline always present");
        let outcome = pipeline.analyzer().analyze_scene_or_fallback(&record.scenes[index]);

        let before = record.verdicts[index].current.clone();
        let row = &mut record.verdicts[index];
        row.machine = outcome.verdict;
        let keep_human = row.current.source == VerdictSource::Human && !clear_override;
        if !keep_human {
            row.current = row.machine.clone();
        }
        let row = row.clone();
        let degraded = Self::stored_report(&record)?.degraded || outcome.degraded;
        let report_json = Self::rebuild(&record, degraded)?;
        let action = if clear_override { "reanalyze_clear_override" } else { "reanalyze" };
        lock(&self.store).update_scene(
            file_id,
            index,
            &record.scenes,
            &row,
            &report_json,
            Some((action, "", (self.clock)(), &before)),
        )?;
        Ok((row.current, report_json))
    }

    /// Records a reviewer's verdict for one scene. The machine verdict is
    /// kept alongside and in the audit log.
    pub fn override_verdict(
        &self,
        file_id: &str,
        index: usize,
        rating: Rating,
        label: Option<Category>,
        note: &str,
    ) -> Result<String, ServiceError> {
        let guard = self.session_lock(file_id);
        let _held = lock(&guard);
        let mut record = self.load_for_update(file_id, index)?;
        let before = record.verdicts[index].current.clone();
        let machine = &record.verdicts[index].machine;
        let label = if rating == Rating::R0 { None } else { label.or(machine.label) };
        let why = if note.trim().is_empty() {
            format!("Reviewer set the rating to {rating}")
        } else {
            note.trim().to_string()
        };
        record.verdicts[index].current = SceneVerdict {
            scene_index: before.scene_index,
            rating,
            label,
            why,
            anchors: machine.anchors.clone(),
            confidence: Confidence::High,
            source: VerdictSource::Human,
        };
        let degraded = Self::stored_report(&record)?.degraded;
        let report_json = Self::rebuild(&record, degraded)?;
        let row = record.verdicts[index].clone();
        lock(&self.store).update_scene(
            file_id,
            index,
            &record.scenes,
            &row,
            &report_json,
            Some(("override", note, (self.clock)(), &before)),
        )?;
        Ok(report_json)
    }

    pub fn save(&self, file_id: &str) -> Result<(), ServiceError> {
        if lock(&self.store).mark_saved(file_id)? {
            Ok(())
        } else {
            Err(not_found(file_id))
        }
    }

    pub fn audit(&self, file_id: &str) -> Result<Vec<AuditEntry>, ServiceError> {
        let store = lock(&self.store);
        if store.report_json(file_id)?.is_none() {
            return Err(not_found(file_id));
        }
        store.audit(file_id)
    }

    /// Deletes unsaved sessions older than the retention period at `now`
    /// (unix seconds). Returns the number deleted.
    pub fn expire_sessions(&self, now: i64) -> Result<usize, ServiceError> {
        let cutoff = now - self.config.retention.as_secs() as i64;
        let deleted = lock(&self.store).delete_unsaved_before(cutoff)?;
        if deleted > 0 {
            let store = lock(&self.store);
            lock(&self.progress).retain(|id, p| {
                matches!(p.status, ProgressStatus::Pending | ProgressStatus::Running)
                    || matches!(store.report_json(id), Ok(Some(_)))
            });
        }
        Ok(deleted)
    }

    pub fn now(&self) -> i64 {
        (self.clock)()
    }
}

fn not_found(file_id: &str) -> ServiceError {
    ServiceError::NotFound(format!("no session {file_id}; it may have expired, upload the file again"))
}
