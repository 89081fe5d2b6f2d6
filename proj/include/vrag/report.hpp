#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace vrag {

// One row per question. Absent stages keep their has_* flag false and are
// omitted from the serialized row, so aggregates stay recomputable from the
// file alone.
struct QuestionReport {
    std::string question_id;
    std::string gt_doc_id;

    bool has_ranking = false;
    std::size_t gt_rank = 0;               // 1-based; 0 = absent from ranking

    bool has_post_filter = false;
    std::size_t gt_rank_post_filter = 0;   // 0 = filtered out

    bool has_answer = false;
    std::string predicted;
    std::vector<std::string> context_doc_ids;
    bool used_fallback = false;

    bool em_evaluated = false;
    bool em_correct = false;

    bool anls_evaluated = false;
    double anls_score = 0.0;
    bool anls_correct = false;

    bool judge_evaluated = false;
    bool judge_correct = false;
    bool judge_unparseable = false;
    std::string judge_raw;

    std::string error;                     // non-empty = question failed
};

struct RunReport {
    nlohmann::json config = nlohmann::json::object();
    std::vector<QuestionReport> per_question;
    std::map<std::string, double> aggregates;
    double elapsed_seconds = 0.0;          // console only, never serialized
};

// Aggregate keys appear only when at least one row feeds them:
//   recall@{1,3,5}, post_filter_recall@{1,3,5}, exact_match, anls,
//   anls_mean_score, llm_judge, llm_judge_unparseable.
// question_count and failed_questions are always present. Failed rows are
// excluded from every metric denominator.
std::map<std::string, double> compute_aggregates(
    const std::vector<QuestionReport>& rows);

nlohmann::json question_to_json(const QuestionReport& row);
QuestionReport question_from_json(const nlohmann::json& j);

// Deterministic bytes: sorted keys, two-space indent, trailing newline.
std::string serialize_report(const RunReport& report);

void write_report(const RunReport& report, const std::filesystem::path& path);

// Parses and re-derives the aggregates from the rows; any mismatch with the
// stored aggregates is a ParseError.
RunReport load_report(const std::filesystem::path& path);

} // namespace vrag
