#include "vrag/evaluate.hpp"

#include "vrag/errors.hpp"
#include "vrag/metrics.hpp"
#include "vrag/strutil.hpp"

#include <algorithm>
#include <chrono>

namespace vrag {

using nlohmann::json;

CacheDirectory::CacheDirectory(std::filesystem::path root) : root_(std::move(root)) {}

CacheDirectory::Pair& CacheDirectory::for_haystack(const std::string& haystack_id) {
    auto it = pairs_.find(haystack_id);
    if (it != pairs_.end()) return *it->second;
    auto pair = std::make_unique<Pair>();
    if (!root_.empty()) {
        const std::string stem = sanitize_filename(haystack_id);
        pair->docs.open(root_ / ("docs_" + stem + ".ndjson"));
        pair->questions.open(root_ / ("questions_" + stem + ".ndjson"));
    }
    return *pairs_.emplace(haystack_id, std::move(pair)).first->second;
}

namespace {

void apply_answer_metrics(QuestionReport& row, const Question& question,
                          const BenchmarkServices& services,
                          const BenchmarkOptions& options,
                          std::vector<std::string>& warnings) {
    if (options.eval_exact_match) {
        row.em_evaluated = true;
        row.em_correct = exact_match(row.predicted, question.answers) == 1;
    }
    if (options.eval_anls) {
        row.anls_evaluated = true;
        row.anls_score = anls(row.predicted, question.answers);
        row.anls_correct = row.anls_score > 0.8;
    }
    if (options.eval_llm_judge) {
        try {
            JudgeVerdict verdict =
                llm_judge(*services.judge_client, question.id, question.text,
                          question.answers, row.predicted);
            row.judge_evaluated = true;
            row.judge_correct = verdict.correct;
            row.judge_unparseable = verdict.unparseable;
            row.judge_raw = verdict.raw_response;
            if (verdict.unparseable) {
                warnings.push_back("question \"" + question.id +
                                   "\": judge response \"" + verdict.raw_response +
                                   "\" is neither Correct nor Incorrect, excluded "
                                   "from the llm_judge aggregate");
            }
        } catch (const TransportError& e) {
            row.judge_evaluated = true;
            row.judge_unparseable = true;
            warnings.push_back("question \"" + question.id +
                               "\": judge call failed (" + e.what() +
                               "), excluded from the llm_judge aggregate");
        }
    }
}

} // namespace

BenchmarkOutput run_benchmark(const BenchmarkServices& services,
                              const BenchmarkOptions& options, const Corpus& corpus,
                              CacheDirectory& caches, json config_snapshot) {
    if (services.encoders.empty()) {
        throw ConfigError("benchmark: no encoders configured");
    }
    if (options.answer && !services.vqa_client) {
        throw ConfigError("benchmark: answer mode needs a VQA model");
    }
    if (options.answer && options.pipeline.filter_enabled &&
        !services.filter_client) {
        throw ConfigError("benchmark: filter enabled but no filter model");
    }
    if (options.post_filter_recall && !services.filter_client) {
        throw ConfigError("benchmark: post-filter recall needs a filter model");
    }
    if (options.eval_llm_judge && !services.judge_client) {
        throw ConfigError("benchmark: llm_judge metric needs a judge model");
    }
    if (options.pipeline.k > options.pipeline.m) {
        throw ConfigError("benchmark: k exceeds m");
    }

    const auto started = std::chrono::steady_clock::now();
    BenchmarkOutput out;
    out.report.config = std::move(config_snapshot);

    PipelineServices pipeline_services;
    pipeline_services.encoders = services.encoders;
    pipeline_services.filter_client = services.filter_client;
    pipeline_services.vqa_client = services.vqa_client;

    for (const Question& question : corpus.questions) {
        const Haystack& haystack = corpus.resolve_haystack(question.haystack);
        CacheDirectory::Pair& cache = caches.for_haystack(haystack.name());

        QuestionReport row;
        row.question_id = question.id;
        row.gt_doc_id = question.gt_doc_id;
        try {
            if (options.answer) {
                VragResult result =
                    run_vrag(pipeline_services, options.pipeline, question,
                             haystack, cache.docs, cache.questions);
                row.has_ranking = true;
                row.gt_rank = result.trace.fused.rank_of(question.gt_doc_id);
                if (options.post_filter_recall &&
                    options.pipeline.filter_enabled) {
                    row.has_post_filter = true;
                    row.gt_rank_post_filter =
                        result.trace.filtered.rank_of(question.gt_doc_id);
                }
                row.has_answer = true;
                row.predicted = result.answer.answer_text;
                row.context_doc_ids = result.answer.context_doc_ids;
                row.used_fallback = result.answer.used_fallback;
                apply_answer_metrics(row, question, services, options,
                                     out.warnings);
                out.traces.push_back(std::move(result.trace));
            } else {
                RetrievalTrace retrieval = retrieve_fused(
                    services.encoders, question, haystack, cache.docs,
                    cache.questions, options.pipeline.parallelism);
                row.has_ranking = true;
                row.gt_rank = retrieval.fused.rank_of(question.gt_doc_id);
                if (options.post_filter_recall) {
                    ScoredRanking shortlist =
                        top_m(retrieval.fused, options.pipeline.m);
                    FilterOutcome outcome = filter_stage(
                        *services.filter_client, question, shortlist, haystack,
                        options.pipeline.parallelism);
                    row.has_post_filter = true;
                    row.gt_rank_post_filter =
                        outcome.kept.rank_of(question.gt_doc_id);
                }
                out.rankings.push_back(std::move(retrieval.fused));
            }
        } catch (const Error& e) {
            row.error = e.what();
            out.warnings.push_back("question \"" + question.id + "\" failed: " +
                                   e.what());
        }
        out.report.per_question.push_back(std::move(row));
    }

    out.report.aggregates = compute_aggregates(out.report.per_question);
    out.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return out;
}

BenchmarkOutput run_bm25_benchmark(const Corpus& corpus, double k1, double b,
                                   json config_snapshot) {
    const auto started = std::chrono::steady_clock::now();
    BenchmarkOutput out;
    out.report.config = std::move(config_snapshot);

    std::map<std::string, Bm25Index> indexes;
    for (const Question& question : corpus.questions) {
        const Haystack& haystack = corpus.resolve_haystack(question.haystack);
        QuestionReport row;
        row.question_id = question.id;
        row.gt_doc_id = question.gt_doc_id;
        try {
            auto it = indexes.find(haystack.name());
            if (it == indexes.end()) {
                it = indexes.emplace(haystack.name(), Bm25Index::build(haystack, k1, b))
                         .first;
            }
            ScoredRanking ranking = it->second.rank(question.text, question.id);
            row.has_ranking = true;
            row.gt_rank = ranking.rank_of(question.gt_doc_id);
            out.rankings.push_back(std::move(ranking));
        } catch (const Error& e) {
            row.error = e.what();
            out.warnings.push_back("question \"" + question.id + "\" failed: " +
                                   e.what());
        }
        out.report.per_question.push_back(std::move(row));
    }

    out.report.aggregates = compute_aggregates(out.report.per_question);
    out.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return out;
}

BenchmarkOutput evaluate_answers(const BenchmarkServices& services,
                                 const BenchmarkOptions& options,
                                 const Corpus& corpus,
                                 const std::map<std::string, std::string>& answers,
                                 json config_snapshot) {
    if (options.eval_llm_judge && !services.judge_client) {
        throw ConfigError("eval: llm_judge metric needs a judge model");
    }
    for (const auto& [question_id, predicted] : answers) {
        (void)predicted;
        corpus.resolve_question(question_id);
    }

    const auto started = std::chrono::steady_clock::now();
    BenchmarkOutput out;
    out.report.config = std::move(config_snapshot);

    for (const Question& question : corpus.questions) {
        QuestionReport row;
        row.question_id = question.id;
        row.gt_doc_id = question.gt_doc_id;
        auto it = answers.find(question.id);
        if (it == answers.end()) {
            row.error = "no prediction for question \"" + question.id + "\"";
            out.warnings.push_back(row.error);
        } else {
            row.has_answer = true;
            row.predicted = it->second;
            try {
                apply_answer_metrics(row, question, services, options,
                                     out.warnings);
            } catch (const Error& e) {
                row.error = e.what();
                out.warnings.push_back("question \"" + question.id +
                                       "\" failed: " + e.what());
            }
        }
        out.report.per_question.push_back(std::move(row));
    }

    out.report.aggregates = compute_aggregates(out.report.per_question);
    out.report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return out;
}

AblationOutput run_ablation(const BenchmarkServices& services,
                            const BenchmarkOptions& base,
                            const std::vector<AblationConfig>& grid,
                            const Corpus& corpus, CacheDirectory& caches,
                            const json& config_snapshot) {
    if (grid.empty()) {
        throw ConfigError("ablation: empty grid");
    }
    AblationOutput out;
    for (const AblationConfig& cell : grid) {
        json cell_config = config_snapshot;
        cell_config["label"] = cell.label;
        cell_config["filter_enabled"] = cell.filter_enabled;
        cell_config["k"] = cell.k;

        BenchmarkServices cell_services = services;
        if (!cell.encoder_ids.empty()) {
            cell_services.encoders.clear();
            for (const auto& id : cell.encoder_ids) {
                auto found = std::find_if(
                    services.encoders.begin(), services.encoders.end(),
                    [&](const auto& enc) { return enc->encoder_id() == id; });
                if (found == services.encoders.end()) {
                    throw ConfigError("ablation \"" + cell.label +
                                      "\": unknown encoder \"" + id + "\"");
                }
                cell_services.encoders.push_back(*found);
            }
        }
        json enabled = json::array();
        for (const auto& enc : cell_services.encoders) {
            enabled.push_back(enc->encoder_id());
        }
        cell_config["encoders_enabled"] = std::move(enabled);

        BenchmarkOptions cell_options = base;
        cell_options.pipeline.filter_enabled = cell.filter_enabled;
        cell_options.pipeline.k = cell.k;

        try {
            BenchmarkOutput run = run_benchmark(cell_services, cell_options,
                                                corpus, caches, cell_config);
            for (auto& w : run.warnings) {
                out.warnings.push_back("[" + cell.label + "] " + w);
            }
            out.reports.push_back(std::move(run.report));
        } catch (const Error& e) {
            RunReport failed;
            cell_config["error"] = e.what();
            failed.config = std::move(cell_config);
            failed.aggregates = compute_aggregates(failed.per_question);
            out.reports.push_back(std::move(failed));
            out.warnings.push_back("[" + cell.label + "] config failed: " +
                                   e.what());
        }
    }
    return out;
}

} // namespace vrag
