#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "halluc/corpus.hpp"
#include "halluc/eval.hpp"
#include "halluc/labeling.hpp"
#include "halluc/noising.hpp"

namespace halluc {

enum class Task { mt, summarization };
enum class InfillerKind { identity, stochastic, remote };

std::optional<Task> parse_task(std::string_view name);
std::optional<InfillerKind> parse_infiller(std::string_view name);

struct PipelineConfig {
    Task task = Task::mt;
    std::uint64_t seed = 1;
    NoiseConfig noise;
    TrainConfig train;
    Markers markers;
    InfillerKind infiller = InfillerKind::identity;
    std::string endpoint;
    std::size_t max_inflight = 8;
    std::size_t workers = 1;
    bool use_paraphrase = false;
    int beam_size = 4;
    double length_penalty = 3.0;

    std::string input;
    std::optional<BitextFormat> format;
    std::string output_dir;

    /// Task defaults: mt uses h_m/h_r 0.6/0.3, dropout 0.3, alpha 0.6;
    /// summarization uses 0.4/0.2, dropout 0.5, alpha 0.5.
    static PipelineConfig preset(Task task);

    /// Copies the seed into the noise and training configs.
    void apply_seed(std::uint64_t value);
};

struct SynthesisSummary {
    std::size_t records = 0;
    double mean_label_density = 0.0;
    double mean_mask_rate = 0.0;
    double mean_replace_rate = 0.0;
    std::size_t inserted_masks = 0;
    std::string train_path;
    std::string mlm_path;
    std::string noised_path;

    std::string to_text(const PipelineConfig& cfg) const;
};

/// Writes train.jsonl, mlm.jsonl and noised.tsv under cfg.output_dir.
SynthesisSummary cmd_synthesize(const PipelineConfig& cfg);

/// Serialized forms of the synthetic records (one JSON object per line).
std::string training_example_json(const SyntheticRecord& rec);
std::string mlm_example_json(const SyntheticRecord& rec);

/// Joins predictions onto gold records by id. An empty `pred_path` means the
/// gold file already carries the predictions. Writes the report to
/// `report_path` when non-empty.
EvalReport cmd_evaluate(const std::string& gold_path, const std::string& pred_path, const std::string& report_path);

/// Same join on in-memory records; throws InputError naming the first gold id
/// without a prediction, or the first unmatched prediction id.
std::vector<EvalRecord> join_predictions(const std::vector<EvalRecord>& gold, const std::vector<EvalRecord>& pred);

struct AgreementReport {
    std::size_t annotators = 0;
    std::size_t sentences = 0;
    std::size_t tokens = 0;
    std::optional<double> token_kappa;
    std::optional<double> sentence_kappa;
    std::size_t dropped_incomprehensible = 0;
    std::size_t benchmark_sentences = 0;

    std::string to_json() const;
};

/// Token-level (and, with ratings, sentence-level) Fleiss' kappa over k >= 2
/// annotation files; writes the majority-voted benchmark when
/// `benchmark_path` is non-empty.
AgreementReport cmd_agreement(const std::vector<std::string>& annotation_paths,
                              const std::vector<std::string>& rating_paths, const std::string& benchmark_path,
                              const std::string& report_path = {});

}  // namespace halluc
