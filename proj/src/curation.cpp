#include "vrag/curation.hpp"

#include "vrag/errors.hpp"
#include "vrag/io.hpp"
#include "vrag/judge.hpp"
#include "vrag/parallel.hpp"
#include "vrag/strutil.hpp"

#include <algorithm>

#include <json.hpp>

namespace vrag {

using nlohmann::json;

const char* to_string(Stage1Result r) {
    switch (r) {
        case Stage1Result::general: return "general";
        case Stage1Result::specific: return "specific";
        case Stage1Result::unparseable: return "unparseable";
    }
    return "unparseable";
}

const char* to_string(Disposition d) {
    switch (d) {
        case Disposition::kept: return "kept";
        case Disposition::removed: return "removed";
        case Disposition::worklist: return "worklist";
    }
    return "worklist";
}

std::string build_classify_prompt(std::string_view question_text) {
    std::string prompt;
    prompt += "You are an evaluator tasked with identifying if a question is "
              "specific or general. A general question seeks commonly known or "
              "widely applicable information without unique identifiers, e.g., "
              "\"Who is the person standing in the ground?\" A specific "
              "question, however, requests unique information about a "
              "particular individual, event, or object, e.g., \"What is the "
              "Social Security Number of Charles Yarbrough?\" Based on these "
              "definitions, determine if the following question is general or "
              "specific: ";
    prompt += question_text;
    prompt += ".";
    return prompt;
}

Stage1Result classify_general(ChatClient& client, const Question& question) {
    ChatRequest req;
    req.kind = ChatKind::classify;
    req.question_id = question.id;
    req.text = build_classify_prompt(question.text);
    const std::string raw = client.complete(req);
    const bool specific = contains_ci(raw, "specific");
    const bool general = contains_ci(raw, "general");
    if (specific == general) return Stage1Result::unparseable;
    return specific ? Stage1Result::specific : Stage1Result::general;
}

std::vector<IdentifierHit> identifier_search(
    const Haystack& haystack, const std::vector<std::string>& identifiers,
    const std::string& gt_doc_id) {
    std::vector<IdentifierHit> hits;
    std::vector<std::string> needles;
    needles.reserve(identifiers.size());
    for (const auto& ident : identifiers) {
        needles.push_back(to_lower_ascii(collapse_whitespace(ident)));
    }
    for (const Document& doc : haystack.documents()) {
        if (doc.id == gt_doc_id || !doc.ocr_text.has_value()) continue;
        const std::string text = to_lower_ascii(collapse_whitespace(*doc.ocr_text));
        for (std::size_t i = 0; i < needles.size(); ++i) {
            if (needles[i].empty()) continue;
            if (text.find(needles[i]) != std::string::npos) {
                hits.push_back(IdentifierHit{doc.id, identifiers[i]});
            }
        }
    }
    return hits;
}

bool knowledge_filter(ChatClient& answerer, ChatClient& judge,
                      const Question& question) {
    ChatRequest req;
    req.kind = ChatKind::knowledge;
    req.question_id = question.id;
    req.text = question.text + ", answer briefly.";
    const std::string response = answerer.complete(req);
    JudgeVerdict verdict = llm_judge(judge, question.id, question.text,
                                     question.answers, response);
    if (verdict.unparseable) {
        throw ProtocolError("knowledge filter: judge response \"" +
                            verdict.raw_response +
                            "\" is neither Correct nor Incorrect");
    }
    return verdict.correct;
}

std::size_t CurationResult::kept_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) {
            return r.final == Disposition::kept;
        }));
}

std::size_t CurationResult::removed_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) {
            return r.final == Disposition::removed;
        }));
}

std::size_t CurationResult::worklist_count() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) {
            return r.final == Disposition::worklist;
        }));
}

std::map<std::string, std::vector<std::string>> load_identifiers(
    const std::filesystem::path& path) {
    std::map<std::string, std::vector<std::string>> out;
    for_each_ndjson(path, [&](std::size_t line_no, const json& j) {
        if (!j.contains("question_id") || !j["question_id"].is_string() ||
            !j.contains("identifiers") || !j["identifiers"].is_array()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected {\"question_id\", \"identifiers\": [...]}");
        }
        std::vector<std::string> idents;
        for (const auto& v : j["identifiers"]) {
            if (!v.is_string()) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": identifiers must be strings");
            }
            idents.push_back(v.get<std::string>());
        }
        out[j["question_id"].get<std::string>()] = std::move(idents);
    });
    return out;
}

std::map<std::string, Decision> load_decisions(const std::filesystem::path& path) {
    std::map<std::string, Decision> out;
    for_each_ndjson(path, [&](std::size_t line_no, const json& j) {
        if (!j.contains("question_id") || !j["question_id"].is_string() ||
            !j.contains("decision") || !j["decision"].is_string()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected {\"question_id\", \"decision\"}");
        }
        const std::string d = j["decision"].get<std::string>();
        if (d == "clear") {
            out[j["question_id"].get<std::string>()] = Decision::clear;
        } else if (d == "remove") {
            out[j["question_id"].get<std::string>()] = Decision::remove;
        } else {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": decision must be \"clear\" or \"remove\", got \"" +
                             d + "\"");
        }
    });
    return out;
}

namespace {

const std::vector<std::string> kNoIdentifiers;

void curate_one(const Question& question, const Haystack& haystack,
                const CurationServices& services,
                const std::vector<std::string>& identifiers,
                const std::map<std::string, Decision>& decisions,
                CurationRecord& record) {
    record.question_id = question.id;
    auto decision = decisions.find(question.id);

    record.stage1_ran = true;
    try {
        record.stage1 = classify_general(*services.classifier, question);
    } catch (const TransportError&) {
        record.stage1 = Stage1Result::unparseable;
    }
    if (record.stage1 == Stage1Result::general) {
        record.final = Disposition::removed;
        record.reason = "stage 1: classified general";
        return;
    }
    if (record.stage1 == Stage1Result::unparseable) {
        if (decision == decisions.end()) {
            record.final = Disposition::worklist;
            record.reason = "stage 1: classification unparseable";
            return;
        }
        if (decision->second == Decision::remove) {
            record.final = Disposition::removed;
            record.reason = "stage 1: unparseable, removed by manual decision";
            return;
        }
        // cleared: treat as specific and continue
    }

    record.stage2_ran = true;
    record.stage2_hits = identifier_search(haystack, identifiers,
                                           question.gt_doc_id);
    if (!record.stage2_hits.empty()) {
        if (decision == decisions.end()) {
            record.final = Disposition::worklist;
            record.reason = "stage 2: identifier hits in other documents";
            return;
        }
        if (decision->second == Decision::remove) {
            record.final = Disposition::removed;
            record.reason = "stage 2: ambiguous, removed by manual decision";
            return;
        }
        record.stage2_cleared = true;
    }

    record.stage3_ran = true;
    try {
        record.knowledge_answerable =
            knowledge_filter(*services.answerer, *services.judge, question);
    } catch (const Error& e) {
        record.final = Disposition::worklist;
        record.reason = std::string("stage 3: service failure (") + e.what() + ")";
        return;
    }
    if (record.knowledge_answerable) {
        record.final = Disposition::removed;
        record.reason = "stage 3: answerable from general knowledge";
        return;
    }

    record.final = Disposition::kept;
    record.reason = "";
}

} // namespace

CurationResult run_curation(const Corpus& corpus, const CurationServices& services,
                            const std::map<std::string, std::vector<std::string>>&
                                identifiers,
                            const std::map<std::string, Decision>& decisions,
                            int parallelism) {
    if (!services.classifier || !services.answerer || !services.judge) {
        throw ConfigError("curation: classifier, answerer and judge services "
                          "are all required");
    }
    for (const auto& [question_id, idents] : identifiers) {
        (void)idents;
        corpus.resolve_question(question_id);
    }
    for (const auto& [question_id, decision] : decisions) {
        (void)decision;
        corpus.resolve_question(question_id);
    }

    CurationResult result;
    result.records.resize(corpus.questions.size());

    parallel_for(corpus.questions.size(), parallelism, [&](std::size_t i) {
        const Question& question = corpus.questions[i];
        const Haystack& haystack = corpus.resolve_haystack(question.haystack);
        auto ident = identifiers.find(question.id);
        curate_one(question, haystack, services,
                   ident == identifiers.end() ? kNoIdentifiers : ident->second,
                   decisions, result.records[i]);
    });

    for (std::size_t i = 0; i < corpus.questions.size(); ++i) {
        if (result.records[i].final == Disposition::kept) {
            result.kept.push_back(corpus.questions[i]);
        }
    }
    return result;
}

std::string record_to_ndjson_line(const CurationRecord& record) {
    json j = json::object();
    j["question_id"] = record.question_id;
    if (record.stage1_ran) j["stage1"] = to_string(record.stage1);
    if (record.stage2_ran) {
        json hits = json::array();
        for (const auto& hit : record.stage2_hits) {
            hits.push_back({{"doc_id", hit.doc_id}, {"identifier", hit.identifier}});
        }
        j["stage2_hits"] = std::move(hits);
        if (record.stage2_cleared) j["stage2_cleared"] = true;
    }
    if (record.stage3_ran && record.final != Disposition::worklist) {
        j["knowledge_answerable"] = record.knowledge_answerable;
    }
    j["final"] = to_string(record.final);
    if (!record.reason.empty()) j["reason"] = record.reason;
    return j.dump();
}

std::string worklist_to_ndjson(const CurationResult& result) {
    std::string out;
    for (const auto& record : result.records) {
        if (record.final != Disposition::worklist) continue;
        json j = json::object();
        j["question_id"] = record.question_id;
        j["cause"] = record.reason;
        if (!record.stage2_hits.empty()) {
            json hits = json::array();
            for (const auto& hit : record.stage2_hits) {
                hits.push_back(
                    {{"doc_id", hit.doc_id}, {"identifier", hit.identifier}});
            }
            j["hits"] = std::move(hits);
        }
        out += j.dump();
        out += "\n";
    }
    return out;
}

} // namespace vrag
