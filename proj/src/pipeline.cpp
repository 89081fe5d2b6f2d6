#include "vrag/pipeline.hpp"

#include "vrag/errors.hpp"
#include "vrag/parallel.hpp"
#include "vrag/strutil.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace vrag {

using nlohmann::json;

const char* const kFilterPrompt =
    "Can this image provide answers to this question? Respond only with yes or no";

const char* const kVqaInstruction =
    "Answer the question using a single word or phrase.";

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::yes: return "yes";
        case Verdict::no: return "no";
        case Verdict::unparseable: return "unparseable";
    }
    return "unparseable";
}

Verdict parse_verdict(std::string_view raw) {
    std::string token = first_token(raw);
    if (token == "yes") return Verdict::yes;
    if (token == "no") return Verdict::no;
    return Verdict::unparseable;
}

FilterOutcome filter_stage(ChatClient& client, const Question& question,
                           const ScoredRanking& candidates, const Haystack& haystack,
                           int parallelism) {
    if (candidates.entries.empty()) {
        throw StageError("filter", "no candidates for question \"" + question.id + "\"");
    }
    const std::string prompt = "Question: " + question.text + "\n" + kFilterPrompt;

    FilterOutcome outcome;
    outcome.verdicts.resize(candidates.entries.size());

    parallel_for(candidates.entries.size(), parallelism, [&](std::size_t i) {
        const auto& entry = candidates.entries[i];
        const Document& doc = haystack.resolve(entry.doc_id);
        FilterVerdict& fv = outcome.verdicts[i];
        fv.doc_id = entry.doc_id;
        ChatRequest req;
        req.kind = ChatKind::filter;
        req.question_id = question.id;
        req.text = prompt;
        req.images.push_back(ChatImageRef{doc.id, doc.image_path});
        try {
            fv.raw_response = client.complete(req);
        } catch (const TransportError& e) {
            fv.transport_error = e.what();
        }
        fv.verdict = parse_verdict(fv.raw_response);
    });

    std::size_t failures = 0;
    for (const auto& fv : outcome.verdicts) {
        if (!fv.transport_error.empty()) ++failures;
    }
    if (failures == outcome.verdicts.size()) {
        throw StageError("filter", "every candidate call failed for question \"" +
                                       question.id + "\" (" +
                                       outcome.verdicts.front().transport_error + ")");
    }

    outcome.kept.question_id = candidates.question_id;
    for (std::size_t i = 0; i < candidates.entries.size(); ++i) {
        if (outcome.verdicts[i].verdict != Verdict::no) {
            outcome.kept.entries.push_back(candidates.entries[i]);
        }
    }
    return outcome;
}

VqaAnswer vqa_stage(ChatClient& client, const Question& question,
                    const ScoredRanking& filtered, const ScoredRanking& prefilter,
                    std::size_t k, const Haystack& haystack) {
    if (k == 0) throw ConfigError("vqa: k must be >= 1");
    if (prefilter.entries.empty()) {
        throw StageError("vqa", "empty pre-filter ranking for question \"" +
                                    question.id + "\"");
    }
    VqaAnswer answer;
    answer.question_id = question.id;
    const ScoredRanking* source = &filtered;
    if (filtered.entries.empty()) {
        source = &prefilter;
        answer.used_fallback = true;
    }
    const std::size_t n = std::min(k, source->entries.size());
    ChatRequest req;
    req.kind = ChatKind::vqa;
    req.question_id = question.id;
    req.text = question.text + "\n" + kVqaInstruction;
    for (std::size_t i = 0; i < n; ++i) {
        const Document& doc = haystack.resolve(source->entries[i].doc_id);
        answer.context_doc_ids.push_back(doc.id);
        req.images.push_back(ChatImageRef{doc.id, doc.image_path});
    }
    if (req.images.size() > client.max_images_per_call()) {
        throw ConfigError("vqa: context of " + std::to_string(req.images.size()) +
                          " images exceeds the model limit of " +
                          std::to_string(client.max_images_per_call()));
    }
    std::string raw;
    try {
        raw = client.complete(req);
    } catch (const TransportError& e) {
        throw StageError("vqa", "question \"" + question.id + "\": " + e.what());
    }
    answer.answer_text = collapse_whitespace(raw);
    return answer;
}

RetrievalTrace retrieve_fused(
    const std::vector<std::shared_ptr<EncoderClient>>& configured,
    const Question& question, const Haystack& haystack,
    EmbeddingCache& doc_cache, EmbeddingCache& question_cache, int parallelism) {
    if (configured.empty()) {
        throw ConfigError("retrieve: no encoders configured");
    }

    // Stable encoder order regardless of configuration order.
    std::vector<EncoderClient*> encoders;
    encoders.reserve(configured.size());
    std::set<std::string> seen;
    for (const auto& enc : configured) {
        if (!seen.insert(enc->encoder_id()).second) {
            throw ConfigError("retrieve: duplicate encoder id \"" +
                              enc->encoder_id() + "\"");
        }
        encoders.push_back(enc.get());
    }
    std::sort(encoders.begin(), encoders.end(),
              [](const EncoderClient* a, const EncoderClient* b) {
                  return a->encoder_id() < b->encoder_id();
              });

    RetrievalTrace trace;
    ScoreMatrix matrix;
    matrix.question_id = question.id;
    for (EncoderClient* enc : encoders) {
        HaystackEmbeddings docs;
        Embedding q_emb;
        try {
            docs = embed_haystack(*enc, haystack, doc_cache, parallelism);
            q_emb = embed_text_cached(*enc, question_cache, question.text, question.id);
        } catch (const Error& e) {
            throw StageError("embed", e.what());
        }
        if (!docs.complete()) {
            std::string failed;
            for (const auto& [doc_id, err] : docs.failures) {
                (void)err;
                if (!failed.empty()) failed += ", ";
                failed += doc_id;
            }
            throw StageError("embed", "encoder \"" + enc->encoder_id() +
                                          "\" failed on documents: " + failed);
        }
        auto scores = score_haystack(q_emb, docs.by_doc, enc->encoder_id());
        trace.encoder_rankings.emplace_back(enc->encoder_id(),
                                            rank_scores(question.id, scores));
        matrix.per_encoder.emplace(enc->encoder_id(), std::move(scores));
    }
    trace.fused = fuse_average(matrix);
    return trace;
}

VragResult run_vrag(const PipelineServices& services, const PipelineOptions& options,
                    const Question& question, const Haystack& haystack,
                    EmbeddingCache& doc_cache, EmbeddingCache& question_cache) {
    if (!services.vqa_client) {
        throw ConfigError("run: no VQA model configured");
    }
    if (options.filter_enabled && !services.filter_client) {
        throw ConfigError("run: filter enabled but no filter model configured");
    }
    if (options.k > options.m) {
        throw ConfigError("run: k exceeds m");
    }

    StageTrace trace;
    trace.question_id = question.id;
    trace.question_text = question.text;
    trace.m = options.m;
    trace.k = options.k;
    trace.filter_enabled = options.filter_enabled;

    RetrievalTrace retrieval =
        retrieve_fused(services.encoders, question, haystack, doc_cache,
                       question_cache, options.parallelism);
    trace.encoder_rankings = std::move(retrieval.encoder_rankings);
    trace.fused = std::move(retrieval.fused);
    trace.shortlist = top_m(trace.fused, options.m);

    if (options.filter_enabled) {
        FilterOutcome outcome = filter_stage(*services.filter_client, question,
                                             trace.shortlist, haystack,
                                             options.parallelism);
        trace.verdicts = std::move(outcome.verdicts);
        trace.filtered = std::move(outcome.kept);
    } else {
        trace.filtered = trace.shortlist;
    }

    VqaAnswer answer = vqa_stage(*services.vqa_client, question, trace.filtered,
                                 trace.shortlist, options.k, haystack);
    trace.context_doc_ids = answer.context_doc_ids;
    trace.used_fallback = answer.used_fallback;
    trace.raw_answer = answer.answer_text;

    return VragResult{std::move(answer), std::move(trace)};
}

namespace {

std::string entries_json(const ScoredRanking& ranking) {
    std::string out = "[";
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        if (i > 0) out += ",";
        out += "{\"doc_id\":" + json(ranking.entries[i].doc_id).dump() +
               ",\"score\":" + format_double17(ranking.entries[i].score) + "}";
    }
    out += "]";
    return out;
}

} // namespace

std::string trace_to_ndjson(const StageTrace& trace) {
    std::string out;
    out += "{\"stage\":\"question\",\"question_id\":" + json(trace.question_id).dump() +
           ",\"text\":" + json(trace.question_text).dump() + "}\n";
    for (const auto& [encoder_id, ranking] : trace.encoder_rankings) {
        out += "{\"stage\":\"encoder_ranking\",\"encoder_id\":" +
               json(encoder_id).dump() + ",\"entries\":" + entries_json(ranking) +
               "}\n";
    }
    out += "{\"stage\":\"fused_ranking\",\"entries\":" + entries_json(trace.fused) +
           "}\n";
    out += "{\"stage\":\"top_m\",\"m\":" + std::to_string(trace.m) +
           ",\"entries\":" + entries_json(trace.shortlist) + "}\n";
    for (const auto& fv : trace.verdicts) {
        out += "{\"stage\":\"filter_verdict\",\"doc_id\":" + json(fv.doc_id).dump() +
               ",\"raw_response\":" + json(fv.raw_response).dump() +
               ",\"verdict\":\"" + to_string(fv.verdict) + "\"";
        if (!fv.transport_error.empty()) {
            out += ",\"transport_error\":" + json(fv.transport_error).dump();
        }
        out += "}\n";
    }
    out += "{\"stage\":\"filtered_ranking\",\"filter_enabled\":";
    out += trace.filter_enabled ? "true" : "false";
    out += ",\"entries\":" + entries_json(trace.filtered) + "}\n";
    out += "{\"stage\":\"context\",\"k\":" + std::to_string(trace.k) + ",\"doc_ids\":[";
    for (std::size_t i = 0; i < trace.context_doc_ids.size(); ++i) {
        if (i > 0) out += ",";
        out += json(trace.context_doc_ids[i]).dump();
    }
    out += "],\"fallback\":";
    out += trace.used_fallback ? "true" : "false";
    out += "}\n";
    out += "{\"stage\":\"answer\",\"question_id\":" + json(trace.question_id).dump() +
           ",\"text\":" + json(trace.raw_answer).dump() + "}\n";
    return out;
}

} // namespace vrag
