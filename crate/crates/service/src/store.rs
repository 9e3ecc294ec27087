//! SQLite persistence: one row per session, one per scene verdict, and an
//! append-only audit log.

use std::path::Path;

use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use scriptrate_core::analyzer::{AnalyzerKind, SceneVerdict};
use scriptrate_core::segmenter::Scene;

use crate::error::ServiceError;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS sessions (
    file_id     TEXT PRIMARY KEY,
    created_at  INTEGER NOT NULL,
    saved       INTEGER NOT NULL DEFAULT 0,
    filename    TEXT NOT NULL,
    analyzer    TEXT NOT NULL,
    scenes      TEXT NOT NULL,
    report      TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS verdicts (
    file_id     TEXT NOT NULL REFERENCES sessions(file_id) ON DELETE CASCADE,
    scene_index INTEGER NOT NULL,
    current     TEXT NOT NULL,
    machine     TEXT NOT NULL,
    PRIMARY KEY (file_id, scene_index)
);
CREATE TABLE IF NOT EXISTS audit (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    file_id     TEXT NOT NULL REFERENCES sessions(file_id) ON DELETE CASCADE,
    scene_index INTEGER NOT NULL,
    at          INTEGER NOT NULL,
    action      TEXT NOT NULL,
    note        TEXT NOT NULL,
    before      TEXT NOT NULL,
    after       TEXT NOT NULL
);
PRAGMA foreign_keys = ON;
";

/// Per-scene verdict state. `machine` is the latest analyzer output; it
/// differs from `current` only while a human override is in place.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub current: SceneVerdict,
    pub machine: SceneVerdict,
}

#[derive(Debug, Clone)]
pub struct SessionRecord {
    pub file_id: String,
    pub created_at: i64,
    pub saved: bool,
    pub filename: String,
    pub analyzer: AnalyzerKind,
    pub scenes: Vec<Scene>,
    pub verdicts: Vec<VerdictRow>,
    /// Serialized report, returned verbatim on reads.
    pub report_json: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub id: i64,
    pub scene_index: usize,
    pub at: i64,
    pub action: String,
    pub note: String,
    pub before: SceneVerdict,
    pub after: SceneVerdict,
}

pub struct Store {
    conn: Connection,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn from_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, ServiceError> {
    serde_json::from_str(s).map_err(|e| ServiceError::Internal(format!("corrupt stored JSON: {e}")))
}

fn kind_name(kind: AnalyzerKind) -> &'static str {
    match kind {
        AnalyzerKind::Rules => "rules",
        AnalyzerKind::Model => "model",
        AnalyzerKind::Mock => "mock",
    }
}

impl Store {
    pub fn open(path: &Path) -> Result<Store, ServiceError> {
        Store::init(Connection::open(path)?)
    }

    pub fn in_memory() -> Result<Store, ServiceError> {
        Store::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Store, ServiceError> {
        conn.execute_batch(SCHEMA)?;
        Ok(Store { conn })
    }

    pub fn insert(&mut self, s: &SessionRecord) -> Result<(), ServiceError> {
        let tx = self.conn.transaction()?;
        tx.execute(
            "INSERT INTO sessions (file_id, created_at, saved, filename, analyzer, scenes, report)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![
                s.file_id,
                s.created_at,
                s.saved,
                s.filename,
                kind_name(s.analyzer),
                to_json(&s.scenes),
                s.report_json
            ],
        )?;
        for (i, v) in s.verdicts.iter().enumerate() {
            tx.execute(
                "INSERT INTO verdicts (file_id, scene_index, current, machine) VALUES (?1, ?2, ?3, ?4)",
                params![s.file_id, i as i64, to_json(&v.current), to_json(&v.machine)],
            )?;
        }
        tx.commit()?;
        Ok(())
    }

    pub fn load(&self, file_id: &str) -> Result<Option<SessionRecord>, ServiceError> {
        let row = self
            .conn
            .query_row(
                "SELECT created_at, saved, filename, analyzer, scenes, report FROM sessions WHERE file_id = ?1",
                params![file_id],
                |r| {
                    Ok((
                        r.get::<_, i64>(0)?,
                        r.get::<_, bool>(1)?,
                        r.get::<_, String>(2)?,
                        r.get::<_, String>(3)?,
                        r.get::<_, String>(4)?,
                        r.get::<_, String>(5)?,
                    ))
                },
            )
            .optional()?;
        let Some((created_at, saved, filename, analyzer, scenes, report_json)) = row else {
            return Ok(None);
        };
        let mut stmt = self
            .conn
            .prepare("SELECT current, machine FROM verdicts WHERE file_id = ?1 ORDER BY scene_index")?;
        let verdicts = stmt
            .query_map(params![file_id], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?)))?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|(c, m)| {
                Ok(VerdictRow {
                    current: from_json(&c)?,
                    machine: from_json(&m)?,
                })
            })
            .collect::<Result<Vec<_>, ServiceError>>()?;
        Ok(Some(SessionRecord {
            file_id: file_id.to_string(),
            created_at,
            saved,
            filename,
            analyzer: analyzer
                .parse()
                .map_err(|_| ServiceError::Internal(format!("unknown stored analyzer {analyzer:?}")))?,
            scenes: from_json(&scenes)?,
            verdicts,
            report_json,
        }))
    }

    pub fn report_json(&self, file_id: &str) -> Result<Option<String>, ServiceError> {
        Ok(self
            .conn
            .query_row("SELECT report FROM sessions WHERE file_id = ?1", params![file_id], |r| r.get(0))
            .optional()?)
    }

    /// Writes back one scene, its verdicts and the rebuilt report, plus an
    /// audit entry, in one transaction.
    pub fn update_scene(
        &mut self,
        file_id: &str,
        index: usize,
        scenes: &[Scene],
        row: &VerdictRow,
        report_json: &str,
        audit: Option<(&str, &str, i64, &SceneVerdict)>,
    ) -> Result<(), ServiceError> {
        let tx = self.conn.transaction()?;
        tx.execute(
            "UPDATE sessions SET scenes = ?2, report = ?3 WHERE file_id = ?1",
            params![file_id, to_json(&scenes), report_json],
        )?;
        tx.execute(
            "UPDATE verdicts SET current = ?3, machine = ?4 WHERE file_id = ?1 AND scene_index = ?2",
            params![file_id, index as i64, to_json(&row.current), to_json(&row.machine)],
        )?;
        if let Some((action, note, at, before)) = audit {
            tx.execute(
                "INSERT INTO audit (file_id, scene_index, at, action, note, before, after)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
                params![file_id, index as i64, at, action, note, to_json(before), to_json(&row.current)],
            )?;
        }
        tx.commit()?;
        Ok(())
    }

    pub fn audit(&self, file_id: &str) -> Result<Vec<AuditEntry>, ServiceError> {
        let mut stmt = self.conn.prepare(
            "SELECT id, scene_index, at, action, note, before, after FROM audit WHERE file_id = ?1 ORDER BY id",
        )?;
        let rows = stmt
            .query_map(params![file_id], |r| {
                Ok((
                    r.get::<_, i64>(0)?,
                    r.get::<_, i64>(1)?,
                    r.get::<_, i64>(2)?,
                    r.get::<_, String>(3)?,
                    r.get::<_, String>(4)?,
                    r.get::<_, String>(5)?,
                    r.get::<_, String>(6)?,
                ))
            })?
            .collect::<Result<Vec<_>, _>>()?;
        rows.into_iter()
            .map(|(id, idx, at, action, note, before, after)| {
                Ok(AuditEntry {
                    id,
                    scene_index: idx as usize,
                    at,
                    action,
                    note,
                    before: from_json(&before)?,
                    after: from_json(&after)?,
                })
            })
            .collect()
    }

    pub fn mark_saved(&mut self, file_id: &str) -> Result<bool, ServiceError> {
        Ok(self
            .conn
            .execute("UPDATE sessions SET saved = 1 WHERE file_id = ?1", params![file_id])?
            > 0)
    }

    /// Deletes unsaved sessions created before `cutoff` and returns how
    /// many went.
    pub fn delete_unsaved_before(&mut self, cutoff: i64) -> Result<usize, ServiceError> {
        Ok(self
            .conn
            .execute("DELETE FROM sessions WHERE saved = 0 AND created_at < ?1", params![cutoff])?)
    }
}
