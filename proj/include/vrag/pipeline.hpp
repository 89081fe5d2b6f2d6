#pragma once

#include "vrag/chat.hpp"
#include "vrag/corpus.hpp"
#include "vrag/embedding_cache.hpp"
#include "vrag/retrieval.hpp"

#include <memory>
#include <string>
#include <vector>

namespace vrag {

enum class Verdict { yes, no, unparseable };

const char* to_string(Verdict v);

/// Case-fold, strip punctuation/whitespace, look at the first token:
/// "yes" -> yes, "no" -> no, anything else (including empty) -> unparseable.
Verdict parse_verdict(std::string_view raw);

struct FilterVerdict {
    std::string doc_id;
    std::string raw_response;
    Verdict verdict; // always parse_verdict(raw_response)
    /// Non-empty when the service call failed; raw_response is then empty
    /// and the verdict is unparseable, which keeps the candidate.
    std::string transport_error;
};

struct FilterOutcome {
    /// Order-preserving subsequence of the candidates: exactly the docs
    /// whose verdict is yes or unparseable, original scores untouched.
    ScoredRanking kept;
    /// One verdict per candidate, in candidate order.
    std::vector<FilterVerdict> verdicts;
};

/// Relevance filter: one call per candidate pairing the question with that
/// single image. Transport failures keep the candidate (logged); only a
/// failure of every candidate is a stage error.
FilterOutcome filter_stage(ChatClient& client, const Question& question,
                           const ScoredRanking& candidates, const Haystack& haystack,
                           int parallelism = 8);

struct VqaAnswer {
    std::string question_id;
    std::string answer_text;
    std::vector<std::string> context_doc_ids; // the images shown, <= k
    bool used_fallback = false;               // filtered list was empty
};

/// Answer over the top-k of the filtered list; falls back to the top-k of the
/// pre-filter list when the filter removed everything. One service call with
/// all context images.
VqaAnswer vqa_stage(ChatClient& client, const Question& question,
                    const ScoredRanking& filtered, const ScoredRanking& prefilter,
                    std::size_t k, const Haystack& haystack);

/// Default instruction appended to the question for the answering model.
extern const char* const kVqaInstruction;
/// Relevance prompt posed per candidate image.
extern const char* const kFilterPrompt;

struct PipelineOptions {
    std::size_t m = 60;
    std::size_t k = 5;
    bool filter_enabled = true;
    int parallelism = 8;
};

struct PipelineServices {
    std::vector<std::shared_ptr<EncoderClient>> encoders;
    std::shared_ptr<ChatClient> filter_client; // required when the filter is on
    std::shared_ptr<ChatClient> vqa_client;
};

/// Everything needed to reconstruct each intermediate stage of one run.
struct StageTrace {
    std::string question_id;
    std::string question_text;
    std::size_t m = 0;
    std::size_t k = 0;
    bool filter_enabled = true;
    std::vector<std::pair<std::string, ScoredRanking>> encoder_rankings;
    ScoredRanking fused;
    ScoredRanking shortlist; // fused cut to the top m
    std::vector<FilterVerdict> verdicts; // empty when the filter is off
    ScoredRanking filtered;              // == shortlist when the filter is off
    std::vector<std::string> context_doc_ids;
    bool used_fallback = false;
    std::string raw_answer;
};

struct VragResult {
    VqaAnswer answer;
    StageTrace trace;
};

struct RetrievalTrace {
    std::vector<std::pair<std::string, ScoredRanking>> encoder_rankings;
    ScoredRanking fused;
};

/// The retrieval half on its own: embed every document and the question
/// through the caches, score per encoder, fuse. Encoders are processed in
/// encoder_id order whatever order they were configured in.
RetrievalTrace retrieve_fused(
    const std::vector<std::shared_ptr<EncoderClient>>& encoders,
    const Question& question, const Haystack& haystack,
    EmbeddingCache& doc_cache, EmbeddingCache& question_cache,
    int parallelism = 8);

/// The full pipeline for one question: embed (through the caches), score per
/// encoder, fuse, cut to top-m, filter, cut to top-k, answer. Deterministic
/// byte-for-byte given fixed services and caches. Stage failures surface as
/// StageError with the stage name.
VragResult run_vrag(const PipelineServices& services, const PipelineOptions& options,
                    const Question& question, const Haystack& haystack,
                    EmbeddingCache& doc_cache, EmbeddingCache& question_cache);

/// Newline-delimited JSON rendering of a trace; identical traces produce
/// identical bytes on every platform.
std::string trace_to_ndjson(const StageTrace& trace);

} // namespace vrag
