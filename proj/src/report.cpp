#include "vrag/report.hpp"

#include "vrag/errors.hpp"
#include "vrag/io.hpp"

namespace vrag {

using nlohmann::json;

std::map<std::string, double> compute_aggregates(
    const std::vector<QuestionReport>& rows) {
    std::map<std::string, double> agg;

    std::size_t failed = 0;
    std::size_t n_ranked = 0, n_pf = 0, n_em = 0, n_anls = 0;
    std::size_t n_judged = 0, n_judge_unparseable = 0;
    std::size_t hits1 = 0, hits3 = 0, hits5 = 0;
    std::size_t pf1 = 0, pf3 = 0, pf5 = 0;
    std::size_t em_hits = 0, anls_hits = 0, judge_hits = 0;
    double anls_sum = 0.0;

    for (const auto& row : rows) {
        if (!row.error.empty()) {
            ++failed;
            continue;
        }
        if (row.has_ranking) {
            ++n_ranked;
            if (row.gt_rank >= 1 && row.gt_rank <= 1) ++hits1;
            if (row.gt_rank >= 1 && row.gt_rank <= 3) ++hits3;
            if (row.gt_rank >= 1 && row.gt_rank <= 5) ++hits5;
        }
        if (row.has_post_filter) {
            ++n_pf;
            if (row.gt_rank_post_filter >= 1 && row.gt_rank_post_filter <= 1) ++pf1;
            if (row.gt_rank_post_filter >= 1 && row.gt_rank_post_filter <= 3) ++pf3;
            if (row.gt_rank_post_filter >= 1 && row.gt_rank_post_filter <= 5) ++pf5;
        }
        if (row.em_evaluated) {
            ++n_em;
            if (row.em_correct) ++em_hits;
        }
        if (row.anls_evaluated) {
            ++n_anls;
            anls_sum += row.anls_score;
            if (row.anls_correct) ++anls_hits;
        }
        if (row.judge_evaluated) {
            if (row.judge_unparseable) {
                ++n_judge_unparseable;
            } else {
                ++n_judged;
                if (row.judge_correct) ++judge_hits;
            }
        }
    }

    auto ratio = [](std::size_t num, std::size_t den) {
        return static_cast<double>(num) / static_cast<double>(den);
    };

    agg["question_count"] = static_cast<double>(rows.size());
    agg["failed_questions"] = static_cast<double>(failed);
    if (n_ranked > 0) {
        agg["recall@1"] = ratio(hits1, n_ranked);
        agg["recall@3"] = ratio(hits3, n_ranked);
        agg["recall@5"] = ratio(hits5, n_ranked);
    }
    if (n_pf > 0) {
        agg["post_filter_recall@1"] = ratio(pf1, n_pf);
        agg["post_filter_recall@3"] = ratio(pf3, n_pf);
        agg["post_filter_recall@5"] = ratio(pf5, n_pf);
    }
    if (n_em > 0) agg["exact_match"] = ratio(em_hits, n_em);
    if (n_anls > 0) {
        agg["anls"] = ratio(anls_hits, n_anls);
        agg["anls_mean_score"] = anls_sum / static_cast<double>(n_anls);
    }
    if (n_judged > 0) agg["llm_judge"] = ratio(judge_hits, n_judged);
    if (n_judge_unparseable > 0) {
        agg["llm_judge_unparseable"] = static_cast<double>(n_judge_unparseable);
    }
    return agg;
}

json question_to_json(const QuestionReport& row) {
    json j = json::object();
    j["question_id"] = row.question_id;
    j["gt_doc_id"] = row.gt_doc_id;
    if (row.has_ranking) j["gt_rank"] = row.gt_rank;
    if (row.has_post_filter) j["gt_rank_post_filter"] = row.gt_rank_post_filter;
    if (row.has_answer) {
        j["predicted"] = row.predicted;
        j["context_doc_ids"] = row.context_doc_ids;
        j["used_fallback"] = row.used_fallback;
    }
    if (row.em_evaluated) j["exact_match"] = row.em_correct;
    if (row.anls_evaluated) {
        j["anls_score"] = row.anls_score;
        j["anls_correct"] = row.anls_correct;
    }
    if (row.judge_evaluated) {
        if (row.judge_unparseable) {
            j["llm_judge_unparseable"] = true;
            j["llm_judge_raw"] = row.judge_raw;
        } else {
            j["llm_judge_correct"] = row.judge_correct;
        }
    }
    if (!row.error.empty()) j["error"] = row.error;
    return j;
}

QuestionReport question_from_json(const json& j) {
    if (!j.is_object() || !j.contains("question_id") || !j.contains("gt_doc_id")) {
        throw ParseError("report row: missing question_id or gt_doc_id");
    }
    QuestionReport row;
    row.question_id = j.at("question_id").get<std::string>();
    row.gt_doc_id = j.at("gt_doc_id").get<std::string>();
    if (j.contains("gt_rank")) {
        row.has_ranking = true;
        row.gt_rank = j.at("gt_rank").get<std::size_t>();
    }
    if (j.contains("gt_rank_post_filter")) {
        row.has_post_filter = true;
        row.gt_rank_post_filter = j.at("gt_rank_post_filter").get<std::size_t>();
    }
    if (j.contains("predicted")) {
        row.has_answer = true;
        row.predicted = j.at("predicted").get<std::string>();
        row.context_doc_ids =
            j.value("context_doc_ids", std::vector<std::string>{});
        row.used_fallback = j.value("used_fallback", false);
    }
    if (j.contains("exact_match")) {
        row.em_evaluated = true;
        row.em_correct = j.at("exact_match").get<bool>();
    }
    if (j.contains("anls_score")) {
        row.anls_evaluated = true;
        row.anls_score = j.at("anls_score").get<double>();
        row.anls_correct = j.value("anls_correct", false);
    }
    if (j.contains("llm_judge_correct")) {
        row.judge_evaluated = true;
        row.judge_correct = j.at("llm_judge_correct").get<bool>();
    } else if (j.value("llm_judge_unparseable", false)) {
        row.judge_evaluated = true;
        row.judge_unparseable = true;
        row.judge_raw = j.value("llm_judge_raw", std::string());
    }
    row.error = j.value("error", std::string());
    return row;
}

std::string serialize_report(const RunReport& report) {
    json doc = json::object();
    doc["config"] = report.config;
    json rows = json::array();
    for (const auto& row : report.per_question) {
        rows.push_back(question_to_json(row));
    }
    doc["per_question"] = std::move(rows);
    json agg = json::object();
    for (const auto& [key, value] : report.aggregates) agg[key] = value;
    doc["aggregates"] = std::move(agg);
    return doc.dump(2) + "\n";
}

void write_report(const RunReport& report, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_report(report));
}

RunReport load_report(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("config") ||
        !doc.contains("per_question") || !doc.contains("aggregates")) {
        throw ParseError(path.string() +
                         ": report must carry config, per_question, aggregates");
    }
    RunReport report;
    report.config = doc.at("config");
    if (!doc.at("per_question").is_array()) {
        throw ParseError(path.string() + ": per_question must be an array");
    }
    for (const auto& j : doc.at("per_question")) {
        try {
            report.per_question.push_back(question_from_json(j));
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": bad report row: " + e.what());
        }
    }
    for (const auto& [key, value] : doc.at("aggregates").items()) {
        if (!value.is_number()) {
            throw ParseError(path.string() + ": aggregate \"" + key +
                             "\" is not a number");
        }
        report.aggregates[key] = value.get<double>();
    }
    auto recomputed = compute_aggregates(report.per_question);
    if (recomputed != report.aggregates) {
        throw ParseError(path.string() +
                         ": stored aggregates disagree with per-question rows");
    }
    return report;
}

} // namespace vrag
