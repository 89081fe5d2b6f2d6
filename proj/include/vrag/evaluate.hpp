#pragma once

#include "vrag/bm25.hpp"
#include "vrag/judge.hpp"
#include "vrag/pipeline.hpp"
#include "vrag/report.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vrag {

// Per-haystack embedding caches. Documents and questions live in separate
// files so a doc id can never shadow a question id.
class CacheDirectory {
public:
    struct Pair {
        EmbeddingCache docs;
        EmbeddingCache questions;
    };

    // Memory-only when root is empty.
    explicit CacheDirectory(std::filesystem::path root = {});

    Pair& for_haystack(const std::string& haystack_id);

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
    std::map<std::string, std::unique_ptr<Pair>> pairs_;
};

struct BenchmarkServices {
    std::vector<std::shared_ptr<EncoderClient>> encoders;
    std::shared_ptr<ChatClient> filter_client;
    std::shared_ptr<ChatClient> vqa_client;
    std::shared_ptr<ChatClient> judge_client;
};

struct BenchmarkOptions {
    PipelineOptions pipeline;

    // false: retrieval only, no filter or VQA calls unless
    // post_filter_recall asks for the filter pass.
    bool answer = true;

    bool eval_exact_match = true;
    bool eval_anls = true;
    bool eval_llm_judge = false;

    // Also record where the gt doc lands after the filter. Requires the
    // filter client; in answer mode it reuses the pipeline's filter pass.
    bool post_filter_recall = false;
};

struct BenchmarkOutput {
    RunReport report;
    // One trace per successfully answered question, manifest order.
    std::vector<StageTrace> traces;
    // Retrieval-only and BM25 runs: the fused ranking per successful
    // question, manifest order.
    std::vector<ScoredRanking> rankings;
    // Human-facing notes (judge exclusions, per-question failures).
    std::vector<std::string> warnings;
};

// Runs every question of the corpus in manifest order. Per-question failures
// land in that row's error field; the run itself only fails on configuration
// errors. `config_snapshot` is stored verbatim in the report.
BenchmarkOutput run_benchmark(const BenchmarkServices& services,
                              const BenchmarkOptions& options, const Corpus& corpus,
                              CacheDirectory& caches,
                              nlohmann::json config_snapshot);

// Retrieval-only sweep with BM25 over OCR text instead of dense encoders.
BenchmarkOutput run_bm25_benchmark(const Corpus& corpus, double k1, double b,
                                   nlohmann::json config_snapshot);

// Metric-only pass over precomputed predictions, manifest order. Questions
// with no prediction get an error row; predictions for unknown question ids
// are a ReferentialError.
BenchmarkOutput evaluate_answers(const BenchmarkServices& services,
                                 const BenchmarkOptions& options,
                                 const Corpus& corpus,
                                 const std::map<std::string, std::string>& answers,
                                 nlohmann::json config_snapshot);

// One ablation grid cell. Empty encoder_ids means all configured encoders.
struct AblationConfig {
    std::string label;
    std::vector<std::string> encoder_ids;
    bool filter_enabled = true;
    std::size_t k = 5;
};

struct AblationOutput {
    // Reports in grid order; a failed config carries the error in its
    // config["error"] and has no rows.
    std::vector<RunReport> reports;
    std::vector<std::string> warnings;
};

// Runs the grid sequentially against shared caches, so encoder-subset cells
// reuse embeddings computed by earlier cells. Each cell's report config gets
// "label" plus the effective knobs injected.
AblationOutput run_ablation(const BenchmarkServices& services,
                            const BenchmarkOptions& base,
                            const std::vector<AblationConfig>& grid,
                            const Corpus& corpus, CacheDirectory& caches,
                            const nlohmann::json& config_snapshot);

} // namespace vrag
