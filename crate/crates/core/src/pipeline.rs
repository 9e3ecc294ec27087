//! End-to-end analysis: decode, segment, analyse in batches, aggregate.

use crate::aggregator::{build_report, Report};
use crate::analyzer::{batch_scenes, Analyzer, SceneOutcome, SceneVerdict};
use crate::error::Result;
use crate::ingest::{load_document, DecodedDocument, RawDocument};
use crate::par::{Parallelism, ProgressCounter};
use crate::segmenter::{segment_with, Scene, SegmenterConfig};

#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineConfig {
    pub segmenter: SegmenterConfig,
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub document: DecodedDocument,
    pub scenes: Vec<Scene>,
    pub report: Report,
    /// Why each degraded scene fell back to rules, by scene index.
    pub failures: Vec<(usize, String)>,
}

#[derive(Debug)]
pub struct Pipeline {
    analyzer: Analyzer,
    config: PipelineConfig,
}

fn no_progress(_done: usize, _total: usize) {}

impl Pipeline {
    pub fn new(analyzer: Analyzer, config: PipelineConfig) -> Self {
        Pipeline { analyzer, config }
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn run(&self, raw: &RawDocument, file_id: String) -> Result<Analysis> {
        self.run_with_progress(raw, file_id, &no_progress)
    }

    /// Runs the whole pipeline. `progress(done, total)` is called with the
    /// scene total once segmentation is known and after every batch.
    pub fn run_with_progress(
        &self,
        raw: &RawDocument,
        file_id: String,
        progress: &(dyn Fn(usize, usize) + Sync),
    ) -> Result<Analysis> {
        let document = load_document(raw)?;
        let scenes = segment_with(&document, &self.config.segmenter);
        progress(0, scenes.len());
        let outcomes = self.analyze_scenes(&scenes, progress);
        let degraded = outcomes.iter().any(|o| o.degraded);
        let failures = outcomes
            .iter()
            .filter_map(|o| o.failure.clone().map(|f| (o.verdict.scene_index, f)))
            .collect();
        let verdicts: Vec<SceneVerdict> = outcomes.into_iter().map(|o| o.verdict).collect();
        let report = build_report(file_id, &scenes, &verdicts, degraded)?;
        Ok(Analysis {
            document,
            scenes,
            report,
            failures,
        })
    }

    /// Analyses scenes batch by batch, in parallel across batches. Results
    /// come back in scene order.
    pub fn analyze_scenes(&self, scenes: &[Scene], progress: &(dyn Fn(usize, usize) + Sync)) -> Vec<SceneOutcome> {
        let batches = batch_scenes(scenes, self.analyzer.config());
        let counter = ProgressCounter::new(scenes.len(), progress);
        self.config
            .parallelism
            .map(&batches, |batch| {
                let out = self.analyzer.analyze_batch(batch);
                counter.advance(batch.len());
                out
            })
            .into_iter()
            .flatten()
            .collect()
    }
}
