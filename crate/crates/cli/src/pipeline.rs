//! Configuration handling and the implementation behind every subcommand.
//!
//! All artifacts carry the hash of the configuration that produced them.
//! When an input artifact was made under a different configuration the
//! command still runs, but prints a provenance warning so mixed-origin
//! experiments stay visible.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use relcur_core::annotate::questionnaire::{default_questionnaire, question_subset, Questionnaire};
use relcur_core::annotate::remote::{AnnotatorEndpoint, RemoteAnnotator};
use relcur_core::annotate::synthetic::synthetic_annotate;
use relcur_core::annotate::{
    partition as partition_samples, sample_frames, AnnotationCache, CacheKey,
};
use relcur_core::eval::{evaluate_subsets, render_report};
use relcur_core::features::extract_features;
use relcur_core::generate::{generate, inject_label_noise, NoiseConfig};
use relcur_core::io::{
    config_hash, read_annotations, read_dataset, read_json_doc, read_latent_sidecar,
    write_annotations, write_dataset, write_json_doc, write_latent_sidecar, AnnotationMeta,
    EvalReportDoc, LabelSource, LatentRecord, SplitDoc, TrainReportDoc,
};
use relcur_core::label::build_reliability_records;
use relcur_core::rng::{derive_rng, derive_seed, id_salt, salts};
use relcur_core::train::train_curriculum;
use relcur_core::{
    Checkpoint, ClassifierModel, Dataset, Error, FeatureVector, GeneratorConfig, Regime, Result,
    TrainConfig, TrainReport, WeightConfig,
};

/// Oracle settings: how many frames each annotator sees, how much of the
/// questionnaire is asked, and where a remote oracle lives (when one does).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotatorSettings {
    /// Frames sampled per annotation request.
    pub frames: usize,
    /// How many questionnaire items to ask (a balanced subset of the full set).
    pub questions: usize,
    /// Remote endpoint URL; when unset the built-in synthetic oracle answers.
    pub endpoint: Option<String>,
    /// Retries per request before a sample is counted as failed.
    pub max_retries: usize,
    /// Per-request timeout for the remote transport.
    pub timeout_secs: u64,
}

impl Default for AnnotatorSettings {
    fn default() -> Self {
        Self {
            frames: 8,
            questions: 15,
            endpoint: None,
            max_retries: 2,
            timeout_secs: 30,
        }
    }
}

/// Everything a pipeline run needs, loadable from a single JSON file.
///
/// Unknown keys are rejected so typos fail fast instead of silently falling
/// back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub generator: GeneratorConfig,
    /// Held-out set size. The test set is drawn from seeds derived from the
    /// training seeds so the two splits never share random streams.
    pub n_test: usize,
    pub noise: NoiseConfig,
    pub annotator: AnnotatorSettings,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            n_test: 200,
            noise: NoiseConfig::default(),
            annotator: AnnotatorSettings::default(),
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Load and parse a configuration file. Any read or parse problem is a
    /// configuration error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid_config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid_config(format!("{}: {e}", path.display())))
    }

    /// Re-key every stochastic component off one seed (the `--seed` flag).
    pub fn override_seed(&mut self, seed: u64) {
        self.generator.seed = seed;
        self.noise.seed = seed;
        self.train.seed = seed;
        self.train.augment.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.noise.validate()?;
        self.train.validate()?;
        if self.annotator.frames == 0 {
            return Err(Error::invalid_config("annotator.frames must be at least 1"));
        }
        if self.n_test < self.generator.k {
            return Err(Error::invalid_config(format!(
                "n_test = {} cannot cover {} classes",
                self.n_test, self.generator.k
            )));
        }
        question_subset(&default_questionnaire(), self.annotator.questions).map(|_| ())
    }
}

/// Which labels evaluation scores against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelChoice {
    /// Pristine sidecar labels when the sidecar exists, observed otherwise.
    Auto,
    /// Require the pristine sidecar; fail when it is missing.
    Pristine,
    /// The labels stored in the dataset file, corruption included.
    Observed,
}

/// A validated configuration bound to an output directory and a resolved
/// oracle endpoint. Every subcommand runs through one of these.
pub struct Context {
    pub config: PipelineConfig,
    out: PathBuf,
    endpoint_url: Option<String>,
    hash: String,
}

impl Context {
    pub fn new(config: PipelineConfig, out: PathBuf, endpoint_url: Option<String>) -> Result<Self> {
        let hash = config_hash(&config)?;
        Ok(Self {
            config,
            out,
            endpoint_url,
            hash,
        })
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn warn_on_hash_mismatch(&self, file_hash: &str, path: &Path) {
        if file_hash != self.hash {
            eprintln!(
                "warning: {} was produced under config {}, current config is {}",
                path.display(),
                short_hash(file_hash),
                short_hash(&self.hash)
            );
        }
    }

    /// Generate train and test sets, corrupt their labels, and write blind
    /// dataset files plus pristine-label sidecars.
    pub fn generate(&self) -> Result<()> {
        self.write_split("train", &self.config.generator, &self.config.noise)?;

        let mut test_gen = self.config.generator.clone();
        test_gen.n_samples = self.config.n_test;
        test_gen.seed = derive_seed(self.config.generator.seed, salts::TEST_SET);
        // Disjoint id space: misdirected artifacts fail id checks loudly.
        test_gen.id_prefix.push('t');
        let mut test_noise = self.config.noise.clone();
        test_noise.seed = derive_seed(self.config.noise.seed, salts::TEST_SET);
        self.write_split("test", &test_gen, &test_noise)
    }

    fn write_split(
        &self,
        name: &str,
        gen_cfg: &GeneratorConfig,
        noise: &NoiseConfig,
    ) -> Result<()> {
        let clean = generate(gen_cfg)?;
        let (noisy, pristine) = inject_label_noise(&clean, noise)?;

        let data_path = self.out_path(&format!("{name}.jsonl"));
        write_dataset(&data_path, &noisy, &self.hash, false)?;

        let records: Vec<LatentRecord<f64>> = noisy
            .iter()
            .zip(&pristine)
            .map(|(sample, entry)| {
                Ok(LatentRecord {
                    id: entry.id.clone(),
                    pristine_label: entry.label.value(),
                    latent: sample.latent.clone().ok_or_else(|| {
                        Error::data_integrity(format!(
                            "generated sample {} carries no latent block",
                            sample.id
                        ))
                    })?,
                })
            })
            .collect::<Result<_>>()?;
        let sidecar = sibling(&data_path, "latent.jsonl");
        write_latent_sidecar(&sidecar, &records, &self.hash, noisy.num_classes())?;

        let flipped = noisy
            .iter()
            .zip(&pristine)
            .filter(|(s, e)| s.label != e.label)
            .count();
        println!(
            "{name}: {} samples, class counts {:?}, {flipped} labels corrupted -> {}",
            noisy.len(),
            noisy.class_counts(),
            data_path.display()
        );
        Ok(())
    }

    /// Annotate every sample of a dataset, reusing any annotations already
    /// on disk. Per-sample remote failures are reported and skipped; the
    /// partial output is still written before the command fails.
    pub fn annotate(&self, dataset: Option<PathBuf>) -> Result<()> {
        let data_path = dataset.unwrap_or_else(|| self.out_path("train.jsonl"));
        let (data, meta) = read_dataset::<f64>(&data_path)?;
        self.warn_on_hash_mismatch(&meta.config_hash, &data_path);

        let q = question_subset(&default_questionnaire(), self.config.annotator.questions)?;
        let frames = self.config.annotator.frames;
        let out_path = sibling(&data_path, "annotations.jsonl");

        let mut cache = AnnotationCache::new();
        if out_path.exists() {
            let (existing, ann_meta) = read_annotations(&out_path)?;
            self.warn_on_hash_mismatch(&ann_meta.config_hash, &out_path);
            if ann_meta.questionnaire_hash != q.content_hash() {
                eprintln!(
                    "warning: {} was made with a different questionnaire; \
                     cached entries that no longer match are ignored",
                    out_path.display()
                );
            }
            cache = AnnotationCache::from_entries(existing)?;
        }

        let outcome = match self.endpoint_url.clone() {
            Some(url) => self.annotate_remote(&data, &q, frames, &url, cache)?,
            None => self.annotate_synthetic(&data, &q, frames, cache)?,
        };

        let ann_meta = AnnotationMeta {
            config_hash: self.hash.clone(),
            questionnaire_version: q.version,
            questionnaire_hash: q.content_hash(),
            frames,
            n_questions: q.questions.len(),
        };
        write_annotations(&out_path, outcome.cache.entries(), &ann_meta)?;
        println!(
            "annotations: {} new, {} cached, {} failed -> {}",
            outcome.fresh,
            outcome.served,
            outcome.failed,
            out_path.display()
        );
        if outcome.failed > 0 {
            let detail = outcome
                .first_error
                .map(|e| e.to_string())
                .unwrap_or_else(|| "unknown".into());
            return Err(Error::AnnotationUnavailable(format!(
                "{} of {} samples could not be annotated; first error: {detail}",
                outcome.failed,
                data.len()
            )));
        }
        Ok(())
    }

    fn annotate_synthetic(
        &self,
        data: &Dataset,
        q: &Questionnaire,
        frames: usize,
        mut cache: AnnotationCache,
    ) -> Result<AnnotateOutcome> {
        let question_ids = q.ids();
        let mut fresh = 0;
        let mut served = 0;
        for sample in data.iter() {
            let key = CacheKey {
                sample_id: sample.id.clone(),
                frames,
                question_ids: question_ids.clone(),
            };
            if cache.get(&key).is_some() {
                served += 1;
                continue;
            }
            let mut rng = derive_rng(
                self.config.generator.seed,
                &[salts::ANNOTATE, id_salt(&sample.id)],
            );
            let result = synthetic_annotate(sample, &self.config.generator, q, frames, &mut rng)?;
            cache.insert(result);
            fresh += 1;
        }
        Ok(AnnotateOutcome {
            cache,
            fresh,
            served,
            failed: 0,
            first_error: None,
        })
    }

    fn annotate_remote(
        &self,
        data: &Dataset,
        q: &Questionnaire,
        frames: usize,
        url: &str,
        cache: AnnotationCache,
    ) -> Result<AnnotateOutcome> {
        let before = cache.len();
        let annotator = RemoteAnnotator::over_http(AnnotatorEndpoint {
            url: url.to_string(),
            max_retries: self.config.annotator.max_retries,
            timeout_secs: self.config.annotator.timeout_secs,
        });
        annotator.preload_cache(cache);

        let mut failed = 0;
        let mut first_error = None;
        for sample in data.iter() {
            let frame_refs: Vec<String> = sample_frames(sample.signal.num_frames(), frames)?
                .into_iter()
                .map(|i| format!("{}#{i}", sample.id))
                .collect();
            if let Err(err) = annotator.annotate(&sample.id, &frame_refs, q, data.num_classes()) {
                eprintln!("warning: annotation failed for sample {}: {err}", sample.id);
                failed += 1;
                if first_error.is_none() {
                    first_error = Some(err);
                }
            }
        }
        let cache = annotator.cache_snapshot();
        let fresh = cache.len().saturating_sub(before);
        let served = data.len().saturating_sub(failed + fresh);
        Ok(AnnotateOutcome {
            cache,
            fresh,
            served,
            failed,
            first_error,
        })
    }

    /// Split an annotated dataset into Accepted (oracle agrees with the
    /// stored label) and Rejected, and write the split document with a
    /// discrepancy histogram.
    pub fn partition(&self, dataset: Option<PathBuf>, annotations: Option<PathBuf>) -> Result<()> {
        let data_path = dataset.unwrap_or_else(|| self.out_path("train.jsonl"));
        let (data, meta) = read_dataset::<f64>(&data_path)?;
        self.warn_on_hash_mismatch(&meta.config_hash, &data_path);
        let ann_path = annotations.unwrap_or_else(|| sibling(&data_path, "annotations.jsonl"));
        let (anns, ann_meta) = read_annotations(&ann_path)?;
        self.warn_on_hash_mismatch(&ann_meta.config_hash, &ann_path);

        let result = partition_samples(data.samples(), &anns)?;

        let by_id: HashMap<&str, usize> = anns
            .iter()
            .map(|a| (a.sample_id.as_str(), a.predicted.value()))
            .collect();
        let mut histogram = vec![0usize; data.num_classes()];
        for sample in data.iter() {
            let predicted = by_id
                .get(sample.id.as_str())
                .expect("coverage checked by partition");
            histogram[sample.label.value().abs_diff(*predicted)] += 1;
        }

        let split_path = sibling(&data_path, "split.json");
        write_json_doc(
            &split_path,
            &SplitDoc::new(&result, histogram.clone(), &self.hash),
        )?;
        println!(
            "partition: {} accepted, {} rejected -> {}",
            result.accepted.len(),
            result.rejected.len(),
            split_path.display()
        );
        println!(
            "discrepancy histogram (0..{}): {histogram:?}",
            data.num_classes() - 1
        );
        Ok(())
    }

    /// Train one model per requested regime. With `sweep_alpha` the whole
    /// set of regimes is retrained at each grid value of the soft-label
    /// mass, and artifacts are tagged with the value.
    pub fn train(
        &self,
        dataset: Option<PathBuf>,
        annotations: Option<PathBuf>,
        regimes: &[Regime],
        sweep_alpha: bool,
    ) -> Result<()> {
        let data_path = dataset.unwrap_or_else(|| self.out_path("train.jsonl"));
        let (data, meta) = read_dataset::<f64>(&data_path)?;
        self.warn_on_hash_mismatch(&meta.config_hash, &data_path);

        let needs_annotations = sweep_alpha || regimes.iter().any(|r| *r != Regime::Baseline);
        let anns = if needs_annotations {
            let ann_path = annotations.unwrap_or_else(|| sibling(&data_path, "annotations.jsonl"));
            let (anns, ann_meta) = read_annotations(&ann_path)?;
            self.warn_on_hash_mismatch(&ann_meta.config_hash, &ann_path);
            anns
        } else {
            Vec::new()
        };

        let test = self.load_test_set()?;
        if let Some(set) = &test {
            println!(
                "test accuracy is against {} labels ({} samples)",
                label_source_name(set.source),
                set.labels.len()
            );
        }

        let alphas: Vec<f64> = if sweep_alpha {
            vec![0.5, 0.6, 0.7, 0.8, 0.9]
        } else {
            vec![self.config.train.alpha]
        };

        let mut rows: Vec<RunRow> = Vec::new();
        for &alpha in &alphas {
            let records = if needs_annotations {
                build_reliability_records(data.samples(), &anns, alpha, &self.config.train.weights)?
            } else {
                Vec::new()
            };
            for &regime in regimes {
                let mut cfg = self.config.train.clone();
                cfg.regime = regime;
                cfg.alpha = alpha;
                let (model, report) = train_curriculum(&data, &records, &cfg)?;
                for warning in &report.warnings {
                    eprintln!("warning: {warning}");
                }
                let tag = if sweep_alpha {
                    format!("{}-alpha-{alpha:.2}", regime.as_str())
                } else {
                    regime.as_str().to_string()
                };
                let ckpt_path = self.out_path(&format!("model-{tag}.json"));
                write_json_doc(&ckpt_path, &model.to_checkpoint(&self.hash))?;
                write_json_doc(
                    &self.out_path(&format!("train-report-{tag}.json")),
                    &TrainReportDoc {
                        config_hash: self.hash.clone(),
                        report: report.clone(),
                    },
                )?;
                let test_accuracy = test
                    .as_ref()
                    .map(|set| set.accuracy_of(&model))
                    .transpose()?;
                println!("trained {tag} -> {}", ckpt_path.display());
                rows.push(RunRow {
                    tag,
                    final_loss: final_epoch_loss(&report),
                    test_accuracy,
                });
            }
        }
        print_run_table(&rows);
        Ok(())
    }

    /// Score a checkpoint on a dataset, overall and per Accepted/Rejected
    /// subset, and write the report next to the checkpoint.
    pub fn evaluate(
        &self,
        checkpoint: Option<PathBuf>,
        dataset: Option<PathBuf>,
        split: Option<PathBuf>,
        labels: LabelChoice,
    ) -> Result<()> {
        let ckpt_path = checkpoint.unwrap_or_else(|| self.out_path("model-two_stage.json"));
        let ckpt: Checkpoint = read_json_doc(&ckpt_path)?;
        self.warn_on_hash_mismatch(&ckpt.config_hash, &ckpt_path);
        let model = ClassifierModel::from_checkpoint(&ckpt)?;

        let data_path = dataset.unwrap_or_else(|| self.out_path("test.jsonl"));
        let (data, meta) = read_dataset::<f64>(&data_path)?;
        self.warn_on_hash_mismatch(&meta.config_hash, &data_path);

        let split_path = split.unwrap_or_else(|| sibling(&data_path, "split.json"));
        let split_doc: SplitDoc = read_json_doc(&split_path)?;
        self.warn_on_hash_mismatch(&split_doc.config_hash, &split_path);
        let partition = split_doc.partition()?;

        let (label_vec, source) = self.labels_for(&data, &data_path, labels)?;
        let ids: Vec<String> = data.iter().map(|s| s.id.clone()).collect();
        let preds = data
            .iter()
            .map(|s| model.predict(&extract_features(&s.signal)?))
            .collect::<Result<Vec<_>>>()?;

        let report =
            evaluate_subsets::<f64>(&ids, &preds, &label_vec, data.num_classes(), &partition)?;
        let doc = EvalReportDoc {
            config_hash: self.hash.clone(),
            label_source: source,
            report,
        };
        let out_path = sibling(&ckpt_path, "eval.json");
        write_json_doc(&out_path, &doc)?;

        println!("labels: {}", label_source_name(source));
        print!("{}", render_report(&doc.report));
        println!("report -> {}", out_path.display());
        Ok(())
    }

    /// Retrain the configured regime across a grid of ambiguous-sample
    /// weights and report final loss and test accuracy per setting.
    pub fn sweep(&self, dataset: Option<PathBuf>, annotations: Option<PathBuf>) -> Result<()> {
        let data_path = dataset.unwrap_or_else(|| self.out_path("train.jsonl"));
        let (data, meta) = read_dataset::<f64>(&data_path)?;
        self.warn_on_hash_mismatch(&meta.config_hash, &data_path);
        let ann_path = annotations.unwrap_or_else(|| sibling(&data_path, "annotations.jsonl"));
        let (anns, ann_meta) = read_annotations(&ann_path)?;
        self.warn_on_hash_mismatch(&ann_meta.config_hash, &ann_path);

        let test = self.load_test_set()?;
        let grid = [0.25, 0.5, 0.75, 1.0];
        let mut entries = Vec::new();
        println!(
            "{:<18} {:>12} {:>10}",
            "ambiguous-weight", "final-loss", "test-acc"
        );
        for &ambiguous in &grid {
            let mut cfg = self.config.train.clone();
            cfg.weights = WeightConfig {
                confident: cfg.weights.confident,
                ambiguous,
            };
            let records =
                build_reliability_records(data.samples(), &anns, cfg.alpha, &cfg.weights)?;
            let (model, report) = train_curriculum(&data, &records, &cfg)?;
            let final_loss = final_epoch_loss(&report);
            let test_accuracy = test
                .as_ref()
                .map(|set| set.accuracy_of(&model))
                .transpose()?;
            println!(
                "{:<18} {:>12} {:>10}",
                format!("{ambiguous:.2}"),
                final_loss.map_or("-".to_string(), |l| format!("{l:.6}")),
                test_accuracy.map_or("-".to_string(), |a| format!("{a:.4}")),
            );
            entries.push(SweepEntry {
                ambiguous_weight: ambiguous,
                final_loss,
                test_accuracy,
            });
        }
        let doc = SweepDoc {
            config_hash: self.hash.clone(),
            regime: self.config.train.regime,
            alpha: self.config.train.alpha,
            entries,
        };
        let out_path = self.out_path("sweep-report.json");
        write_json_doc(&out_path, &doc)?;
        println!("sweep report -> {}", out_path.display());
        Ok(())
    }

    /// Load `out/test.jsonl` when present, preferring pristine sidecar
    /// labels, for the quick accuracy column of train/sweep tables.
    fn load_test_set(&self) -> Result<Option<TestSet>> {
        let path = self.out_path("test.jsonl");
        if !path.exists() {
            return Ok(None);
        }
        let (data, meta) = read_dataset::<f64>(&path)?;
        self.warn_on_hash_mismatch(&meta.config_hash, &path);
        let (labels, source) = self.labels_for(&data, &path, LabelChoice::Auto)?;
        let features = data
            .iter()
            .map(|s| extract_features(&s.signal))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(TestSet {
            features,
            labels,
            source,
        }))
    }

    /// Resolve the label vector for `data` according to `choice`. Pristine
    /// labels come from the `<stem>.latent.jsonl` sidecar next to the
    /// dataset file.
    fn labels_for(
        &self,
        data: &Dataset,
        data_path: &Path,
        choice: LabelChoice,
    ) -> Result<(Vec<usize>, LabelSource)> {
        let sidecar = sibling(data_path, "latent.jsonl");
        let use_pristine = match choice {
            LabelChoice::Observed => false,
            LabelChoice::Pristine => {
                if !sidecar.exists() {
                    return Err(Error::data_integrity(format!(
                        "pristine labels requested but {} does not exist",
                        sidecar.display()
                    )));
                }
                true
            }
            LabelChoice::Auto => sidecar.exists(),
        };
        if !use_pristine {
            return Ok((
                data.iter().map(|s| s.label.value()).collect(),
                LabelSource::Observed,
            ));
        }

        let (records, meta) = read_latent_sidecar::<f64>(&sidecar)?;
        self.warn_on_hash_mismatch(&meta.config_hash, &sidecar);
        let mut by_id: HashMap<&str, usize> = HashMap::with_capacity(records.len());
        for record in &records {
            if by_id
                .insert(record.id.as_str(), record.pristine_label)
                .is_some()
            {
                return Err(Error::data_integrity(format!(
                    "{} repeats sample id {}",
                    sidecar.display(),
                    record.id
                )));
            }
        }
        let labels = data
            .iter()
            .map(|s| {
                by_id.get(s.id.as_str()).copied().ok_or_else(|| {
                    Error::data_integrity(format!(
                        "{} has no pristine label for sample {}",
                        sidecar.display(),
                        s.id
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((labels, LabelSource::Pristine))
    }
}

/// What one annotation pass did, plus the cache to persist.
struct AnnotateOutcome {
    cache: AnnotationCache,
    fresh: usize,
    served: usize,
    failed: usize,
    first_error: Option<Error>,
}

/// A held-out set prepared for quick accuracy readouts.
struct TestSet {
    features: Vec<FeatureVector>,
    labels: Vec<usize>,
    source: LabelSource,
}

impl TestSet {
    fn accuracy_of(&self, model: &ClassifierModel) -> Result<f64> {
        let mut hits = 0usize;
        for (features, &label) in self.features.iter().zip(&self.labels) {
            if model.predict(features)? == label {
                hits += 1;
            }
        }
        Ok(hits as f64 / self.labels.len() as f64)
    }
}

/// One row of the train-command summary table.
struct RunRow {
    tag: String,
    final_loss: Option<f64>,
    test_accuracy: Option<f64>,
}

fn print_run_table(rows: &[RunRow]) {
    println!("{:<28} {:>12} {:>10}", "run", "final-loss", "test-acc");
    for row in rows {
        println!(
            "{:<28} {:>12} {:>10}",
            row.tag,
            row.final_loss
                .map_or("-".to_string(), |l| format!("{l:.6}")),
            row.test_accuracy
                .map_or("-".to_string(), |a| format!("{a:.4}")),
        );
    }
}

/// One sweep setting's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepEntry {
    ambiguous_weight: f64,
    final_loss: Option<f64>,
    test_accuracy: Option<f64>,
}

/// Persisted output of the sweep command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    config_hash: String,
    regime: Regime,
    alpha: f64,
    entries: Vec<SweepEntry>,
}

fn final_epoch_loss(report: &TrainReport) -> Option<f64> {
    report
        .stages
        .iter()
        .rev()
        .find_map(|s| s.epoch_losses.last().copied())
}

fn label_source_name(source: LabelSource) -> &'static str {
    match source {
        LabelSource::Pristine => "pristine",
        LabelSource::Observed => "observed",
    }
}

/// First 12 hex digits, enough to tell configurations apart in a warning.
fn short_hash(hash: &str) -> &str {
    &hash[..hash.len().min(12)]
}

/// Derive a sibling artifact path: `train.jsonl` plus `split.json` becomes
/// `train.split.json` in the same directory.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("artifact");
    path.with_file_name(format!("{stem}.{suffix}"))
}
