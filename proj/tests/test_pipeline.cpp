#include <doctest.h>

#include "vrag/errors.hpp"
#include "vrag/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace vrag;
using nlohmann::json;

namespace {

Haystack docs_haystack(std::size_t n) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = "doc-" + std::to_string(i);
        docs.push_back({id, "img/" + id + ".png", std::nullopt});
    }
    return Haystack("hs", std::move(docs));
}

Question make_question(std::string id = "q1") {
    Question q;
    q.id = std::move(id);
    q.text = "What is the total?";
    q.answers = {"42"};
    q.gt_doc_id = "doc-0";
    q.haystack = "hs";
    return q;
}

ScoredRanking ranking_of(const std::vector<std::string>& doc_ids) {
    ScoredRanking r;
    r.question_id = "q1";
    double score = 1.0;
    for (const auto& id : doc_ids) {
        r.entries.push_back({id, score});
        score -= 0.01;
    }
    return r;
}

// Records every request and answers from a doc_id -> response map.
class CapturingChat : public ChatClient {
public:
    explicit CapturingChat(std::map<std::string, std::string> by_doc = {},
                           std::string fallback = "yes")
        : by_doc_(std::move(by_doc)), fallback_(std::move(fallback)) {}

    const std::string& model_id() const override { return model_id_; }
    std::size_t max_images_per_call() const override { return 64; }

    std::string complete(const ChatRequest& request) override {
        std::lock_guard lock(mutex_);
        requests.push_back(request);
        ++count_;
        if (!request.images.empty()) {
            auto it = by_doc_.find(request.images.front().doc_id);
            if (it != by_doc_.end()) {
                if (it->second == "<fail>") throw TransportError("scripted outage");
                return it->second;
            }
        }
        return fallback_;
    }

    std::uint64_t request_count() const override { return count_; }
    std::uint64_t request_count(ChatKind) const override { return count_; }

    std::vector<ChatRequest> requests;

private:
    std::string model_id_ = "capture";
    std::map<std::string, std::string> by_doc_;
    std::string fallback_;
    std::mutex mutex_;
    std::uint64_t count_ = 0;
};

} // namespace

TEST_CASE("parse_verdict reads the first token") {
    CHECK(parse_verdict("yes") == Verdict::yes);
    CHECK(parse_verdict("Yes") == Verdict::yes);
    CHECK(parse_verdict("YES.") == Verdict::yes);
    CHECK(parse_verdict("Yes, it can") == Verdict::yes);
    CHECK(parse_verdict(" no.") == Verdict::no);
    CHECK(parse_verdict("No") == Verdict::no);
    CHECK(parse_verdict("certainly") == Verdict::unparseable);
    CHECK(parse_verdict("") == Verdict::unparseable);
    CHECK(parse_verdict("n o") == Verdict::unparseable);
    CHECK(parse_verdict("maybe yes") == Verdict::unparseable);
}

TEST_CASE("prompt constants") {
    CHECK(std::string(kFilterPrompt) ==
          "Can this image provide answers to this question? Respond only with yes or no");
    CHECK(std::string(kVqaInstruction) ==
          "Answer the question using a single word or phrase.");
}

TEST_CASE("filter_stage sends one single-image call per candidate") {
    Haystack hs = docs_haystack(3);
    Question q = make_question();
    auto candidates = ranking_of({"doc-0", "doc-1", "doc-2"});
    CapturingChat chat;

    auto outcome = filter_stage(chat, q, candidates, hs, 1);
    REQUIRE(chat.requests.size() == 3);
    std::set<std::string> seen_docs;
    for (const auto& request : chat.requests) {
        CHECK(request.kind == ChatKind::filter);
        CHECK(request.question_id == "q1");
        CHECK(request.text ==
              "Question: What is the total?\n" + std::string(kFilterPrompt));
        REQUIRE(request.images.size() == 1);
        seen_docs.insert(request.images[0].doc_id);
        CHECK(request.images[0].image_path ==
              "img/" + request.images[0].doc_id + ".png");
    }
    CHECK(seen_docs == std::set<std::string>{"doc-0", "doc-1", "doc-2"});
    CHECK(outcome.kept.entries == candidates.entries); // all yes
}

TEST_CASE("filter_stage keeps yes and unparseable, drops no") {
    Haystack hs = docs_haystack(4);
    Question q = make_question();
    auto candidates = ranking_of({"doc-0", "doc-1", "doc-2", "doc-3"});
    CapturingChat chat({{"doc-0", "no"},
                        {"doc-1", "Yes, definitely"},
                        {"doc-2", "cannot tell"},
                        {"doc-3", "No."}});

    auto outcome = filter_stage(chat, q, candidates, hs, 2);
    REQUIRE(outcome.verdicts.size() == 4);
    CHECK(outcome.verdicts[0].verdict == Verdict::no);
    CHECK(outcome.verdicts[1].verdict == Verdict::yes);
    CHECK(outcome.verdicts[2].verdict == Verdict::unparseable);
    CHECK(outcome.verdicts[3].verdict == Verdict::no);
    CHECK(outcome.verdicts[2].raw_response == "cannot tell");

    REQUIRE(outcome.kept.entries.size() == 2);
    CHECK(outcome.kept.entries[0].doc_id == "doc-1");
    CHECK(outcome.kept.entries[1].doc_id == "doc-2");
    // scores survive untouched
    CHECK(outcome.kept.entries[0].score == candidates.entries[1].score);
}

TEST_CASE("filter_stage keeps candidates whose call failed") {
    Haystack hs = docs_haystack(3);
    Question q = make_question();
    auto candidates = ranking_of({"doc-0", "doc-1", "doc-2"});
    CapturingChat chat(std::map<std::string, std::string>{{"doc-1", "<fail>"},
                                                          {"doc-2", "no"}});

    auto outcome = filter_stage(chat, q, candidates, hs, 1);
    REQUIRE(outcome.verdicts.size() == 3);
    CHECK(outcome.verdicts[1].transport_error.find("scripted outage") !=
          std::string::npos);
    CHECK(outcome.verdicts[1].raw_response == "");
    CHECK(outcome.verdicts[1].verdict == Verdict::unparseable);
    CHECK(outcome.verdicts[0].transport_error == "");

    REQUIRE(outcome.kept.entries.size() == 2);
    CHECK(outcome.kept.entries[0].doc_id == "doc-0");
    CHECK(outcome.kept.entries[1].doc_id == "doc-1"); // kept despite the outage
}

TEST_CASE("filter_stage fails only when every candidate call failed") {
    Haystack hs = docs_haystack(2);
    Question q = make_question();
    auto candidates = ranking_of({"doc-0", "doc-1"});
    CapturingChat chat(std::map<std::string, std::string>{{"doc-0", "<fail>"},
                                                          {"doc-1", "<fail>"}});
    CHECK_THROWS_AS(filter_stage(chat, q, candidates, hs, 1), StageError);

    CapturingChat empty_ok;
    ScoredRanking no_candidates;
    no_candidates.question_id = "q1";
    CHECK_THROWS_AS(filter_stage(empty_ok, q, no_candidates, hs, 1), StageError);
}

TEST_CASE("filter_stage kept list is an order-preserving subsequence") {
    std::mt19937_64 rng(404);
    Haystack hs = docs_haystack(12);
    Question q = make_question();
    const char* responses[] = {"yes", "no", "garbled", "<fail>"};

    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < 1 + rng() % 12; ++i) {
            ids.push_back("doc-" + std::to_string(i));
        }
        std::map<std::string, std::string> script;
        bool any_alive = false;
        for (const auto& id : ids) {
            std::string r = responses[rng() % 4];
            if (r != "<fail>") any_alive = true;
            script[id] = r;
        }
        if (!any_alive) script[ids[0]] = "yes";

        auto candidates = ranking_of(ids);
        CapturingChat chat(script);
        auto outcome = filter_stage(chat, q, candidates, hs, 4);

        // exactly the non-"no" candidates, in candidate order
        std::vector<RankedEntry> expected;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (script[ids[i]] != "no") expected.push_back(candidates.entries[i]);
        }
        CHECK(outcome.kept.entries == expected);
        REQUIRE(outcome.verdicts.size() == ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            CHECK(outcome.verdicts[i].doc_id == ids[i]);
        }
    }
}

TEST_CASE("vqa_stage shows the top-k filtered images") {
    Haystack hs = docs_haystack(8);
    Question q = make_question();
    auto prefilter = ranking_of({"doc-0", "doc-1", "doc-2", "doc-3", "doc-4",
                                 "doc-5", "doc-6"});
    auto filtered = ranking_of({"doc-1", "doc-3", "doc-4", "doc-5", "doc-6", "doc-2"});
    CapturingChat chat({}, "  the answer\nis 42  ");

    auto answer = vqa_stage(chat, q, filtered, prefilter, 5, hs);
    CHECK(answer.question_id == "q1");
    CHECK_FALSE(answer.used_fallback);
    CHECK(answer.context_doc_ids ==
          std::vector<std::string>{"doc-1", "doc-3", "doc-4", "doc-5", "doc-6"});
    CHECK(answer.answer_text == "the answer is 42"); // whitespace collapsed

    REQUIRE(chat.requests.size() == 1);
    const auto& request = chat.requests[0];
    CHECK(request.kind == ChatKind::vqa);
    CHECK(request.text == "What is the total?\n" + std::string(kVqaInstruction));
    REQUIRE(request.images.size() == 5);
    CHECK(request.images[0].doc_id == "doc-1");
}

TEST_CASE("vqa_stage falls back to the pre-filter list when filtering emptied it") {
    Haystack hs = docs_haystack(4);
    Question q = make_question();
    auto prefilter = ranking_of({"doc-2", "doc-0", "doc-3", "doc-1"});
    ScoredRanking empty;
    empty.question_id = "q1";
    CapturingChat chat({}, "fallback answer");

    auto answer = vqa_stage(chat, q, empty, prefilter, 3, hs);
    CHECK(answer.used_fallback);
    CHECK(answer.context_doc_ids ==
          std::vector<std::string>{"doc-2", "doc-0", "doc-3"});

    // fewer candidates than k: context is min(k, N)
    auto short_prefilter = ranking_of({"doc-1"});
    auto small = vqa_stage(chat, q, empty, short_prefilter, 5, hs);
    CHECK(small.used_fallback);
    CHECK(small.context_doc_ids == std::vector<std::string>{"doc-1"});
}

TEST_CASE("vqa_stage error cases") {
    Haystack hs = docs_haystack(3);
    Question q = make_question();
    auto prefilter = ranking_of({"doc-0", "doc-1"});
    CapturingChat chat;

    ScoredRanking empty;
    CHECK_THROWS_AS(vqa_stage(chat, q, prefilter, prefilter, 0, hs), ConfigError);
    CHECK_THROWS_AS(vqa_stage(chat, q, empty, empty, 3, hs), StageError);

    CapturingChat down(std::map<std::string, std::string>{{"doc-0", "<fail>"}});
    CHECK_THROWS_AS(vqa_stage(down, q, prefilter, prefilter, 2, hs), StageError);
}

TEST_CASE("run_vrag composes the full pipeline deterministically") {
    Haystack hs = docs_haystack(10);
    Question q = make_question();

    PipelineServices services;
    services.encoders = {std::make_shared<MockEncoderClient>("clip", 32),
                         std::make_shared<MockEncoderClient>("siglip", 32),
                         std::make_shared<MockEncoderClient>("openclip", 32)};
    auto chat = std::make_shared<MockChatClient>("lmm");
    chat->set_kind_default(ChatKind::filter, "yes");
    chat->set_kind_default(ChatKind::vqa, "42");
    services.filter_client = chat;
    services.vqa_client = chat;

    PipelineOptions options;
    options.m = 6;
    options.k = 3;
    options.parallelism = 4;

    EmbeddingCache doc_cache, question_cache;
    auto result = run_vrag(services, options, q, hs, doc_cache, question_cache);

    // encoder rankings are complete, sorted by encoder id
    REQUIRE(result.trace.encoder_rankings.size() == 3);
    CHECK(result.trace.encoder_rankings[0].first == "clip");
    CHECK(result.trace.encoder_rankings[1].first == "openclip");
    CHECK(result.trace.encoder_rankings[2].first == "siglip");
    for (const auto& [id, ranking] : result.trace.encoder_rankings) {
        CHECK(ranking.size() == 10);
    }

    // fused equals fuse_average over the per-encoder scores
    ScoreMatrix matrix;
    matrix.question_id = q.id;
    for (const auto& [id, ranking] : result.trace.encoder_rankings) {
        for (const auto& entry : ranking.entries) {
            matrix.per_encoder[id][entry.doc_id] = entry.score;
        }
    }
    auto fused = fuse_average(matrix);
    CHECK(result.trace.fused.entries == fused.entries);

    // shortlist is the top-m cut, context the top-k of the filtered list
    CHECK(result.trace.shortlist.entries ==
          top_m(fused, options.m).entries);
    CHECK(result.trace.filtered.entries == result.trace.shortlist.entries);
    REQUIRE(result.answer.context_doc_ids.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(result.answer.context_doc_ids[i] ==
              result.trace.filtered.entries[i].doc_id);
    }
    CHECK(result.answer.answer_text == "42");
    CHECK_FALSE(result.answer.used_fallback);
    CHECK(result.trace.verdicts.size() == 6); // one per shortlist candidate

    // a second run from fresh caches is identical
    EmbeddingCache dc2, qc2;
    auto again = run_vrag(services, options, q, hs, dc2, qc2);
    CHECK(trace_to_ndjson(again.trace) == trace_to_ndjson(result.trace));
}

TEST_CASE("run_vrag with the filter disabled answers over the fused top-k") {
    Haystack hs = docs_haystack(7);
    Question q = make_question();

    PipelineServices services;
    services.encoders = {std::make_shared<MockEncoderClient>("clip", 16)};
    auto chat = std::make_shared<MockChatClient>("lmm");
    chat->set_default_response("answer");
    services.vqa_client = chat; // no filter client needed

    PipelineOptions options;
    options.m = 5;
    options.k = 2;
    options.filter_enabled = false;

    EmbeddingCache dc, qc;
    auto result = run_vrag(services, options, q, hs, dc, qc);
    CHECK(chat->request_count(ChatKind::filter) == 0);
    CHECK(result.trace.verdicts.empty());
    CHECK(result.trace.filtered.entries == result.trace.shortlist.entries);
    REQUIRE(result.answer.context_doc_ids.size() == 2);
    CHECK(result.answer.context_doc_ids[0] == result.trace.fused.entries[0].doc_id);
    CHECK(result.answer.context_doc_ids[1] == result.trace.fused.entries[1].doc_id);
}

TEST_CASE("run_vrag all-no filter falls back to the pre-filter shortlist") {
    Haystack hs = docs_haystack(5);
    Question q = make_question();

    PipelineServices services;
    services.encoders = {std::make_shared<MockEncoderClient>("clip", 16)};
    auto chat = std::make_shared<MockChatClient>("lmm");
    chat->set_kind_default(ChatKind::filter, "no");
    chat->set_kind_default(ChatKind::vqa, "still answered");
    services.filter_client = chat;
    services.vqa_client = chat;

    PipelineOptions options;
    options.m = 4;
    options.k = 3;

    EmbeddingCache dc, qc;
    auto result = run_vrag(services, options, q, hs, dc, qc);
    CHECK(result.answer.used_fallback);
    CHECK(result.trace.filtered.entries.empty());
    REQUIRE(result.answer.context_doc_ids.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(result.answer.context_doc_ids[i] ==
              result.trace.shortlist.entries[i].doc_id);
    }
}

TEST_CASE("run_vrag configuration errors") {
    Haystack hs = docs_haystack(3);
    Question q = make_question();
    EmbeddingCache dc, qc;

    PipelineServices services;
    services.encoders = {std::make_shared<MockEncoderClient>("clip", 16)};
    auto chat = std::make_shared<MockChatClient>("lmm");
    chat->set_default_response("yes");
    services.filter_client = chat;
    services.vqa_client = chat;

    SUBCASE("k greater than m") {
        PipelineOptions options;
        options.m = 2;
        options.k = 5;
        CHECK_THROWS_AS(run_vrag(services, options, q, hs, dc, qc), ConfigError);
    }
    SUBCASE("no vqa client") {
        services.vqa_client = nullptr;
        CHECK_THROWS_AS(run_vrag(services, PipelineOptions{}, q, hs, dc, qc),
                        ConfigError);
    }
    SUBCASE("filter on, no filter client") {
        services.filter_client = nullptr;
        CHECK_THROWS_AS(run_vrag(services, PipelineOptions{}, q, hs, dc, qc),
                        ConfigError);
    }
    SUBCASE("no encoders") {
        services.encoders.clear();
        CHECK_THROWS_AS(run_vrag(services, PipelineOptions{}, q, hs, dc, qc),
                        ConfigError);
    }
    SUBCASE("duplicate encoder ids") {
        services.encoders.push_back(std::make_shared<MockEncoderClient>("clip", 16));
        CHECK_THROWS_AS(run_vrag(services, PipelineOptions{}, q, hs, dc, qc),
                        ConfigError);
    }
}

TEST_CASE("retrieve_fused surfaces embedding failures as an embed StageError") {
    class DownEncoder : public EncoderClient {
    public:
        const std::string& encoder_id() const override { return id_; }
        std::size_t dim() const override { return 4; }
        Embedding embed_text(const std::string&, const std::string&) override {
            throw TransportError("encoder offline");
        }
        Embedding embed_image(const std::string&, const std::string&) override {
            throw TransportError("encoder offline");
        }
        std::uint64_t request_count() const override { return 0; }

    private:
        std::string id_ = "down";
    };

    Haystack hs = docs_haystack(3);
    Question q = make_question();
    EmbeddingCache dc, qc;
    std::vector<std::shared_ptr<EncoderClient>> encoders = {
        std::make_shared<DownEncoder>()};
    try {
        retrieve_fused(encoders, q, hs, dc, qc, 1);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "embed");
    }
}

TEST_CASE("trace_to_ndjson renders every stage as parseable lines") {
    Haystack hs = docs_haystack(6);
    Question q = make_question();

    PipelineServices services;
    services.encoders = {std::make_shared<MockEncoderClient>("clip", 16),
                         std::make_shared<MockEncoderClient>("siglip", 16)};
    auto chat = std::make_shared<MockChatClient>("lmm");
    chat->set_kind_default(ChatKind::filter, "yes");
    chat->set_kind_default(ChatKind::vqa, "final");
    services.filter_client = chat;
    services.vqa_client = chat;

    PipelineOptions options;
    options.m = 4;
    options.k = 2;

    EmbeddingCache dc, qc;
    auto result = run_vrag(services, options, q, hs, dc, qc);
    std::string ndjson = trace_to_ndjson(result.trace);

    std::vector<std::string> stages;
    std::istringstream in(ndjson);
    std::string line;
    while (std::getline(in, line)) {
        REQUIRE_FALSE(line.empty());
        json obj = json::parse(line);
        REQUIRE(obj.contains("stage"));
        stages.push_back(obj["stage"].get<std::string>());
        if (obj["stage"] == "question") {
            CHECK(obj["question_id"] == "q1");
            CHECK(obj["text"] == "What is the total?");
        }
        if (obj["stage"] == "top_m") CHECK(obj["m"] == 4);
        if (obj["stage"] == "context") {
            CHECK(obj["k"] == 2);
            CHECK(obj["fallback"] == false);
            CHECK(obj["doc_ids"].size() == 2);
        }
        if (obj["stage"] == "answer") CHECK(obj["text"] == "final");
    }

    std::vector<std::string> want_order = {"question", "encoder_ranking",
                                           "encoder_ranking", "fused_ranking",
                                           "top_m"};
    REQUIRE(stages.size() >= want_order.size());
    for (std::size_t i = 0; i < want_order.size(); ++i) {
        CHECK(stages[i] == want_order[i]);
    }
    CHECK(std::count(stages.begin(), stages.end(), "filter_verdict") == 4);
    CHECK(stages[stages.size() - 3] == "filtered_ranking");
    CHECK(stages[stages.size() - 2] == "context");
    CHECK(stages.back() == "answer");
}
