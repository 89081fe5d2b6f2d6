// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Run with --write-golden to refresh the committed golden bytes after an
// intentional behavior change.

#include "vrag/bm25.hpp"
#include "vrag/corpus.hpp"
#include "vrag/curation.hpp"
#include "vrag/errors.hpp"
#include "vrag/evaluate.hpp"
#include "vrag/metrics.hpp"
#include "vrag/pipeline.hpp"
#include "vrag/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

using namespace vrag;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool g_write_golden = false;

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

fs::path fixture(const std::string& rel) {
    return fs::path(VRAG_FIXTURES_DIR) / rel;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write " + path.string());
    out << bytes;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Fused ranking vs a brute-force oracle.

std::string criterion_ranking_oracle() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20260822);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::uniform_int_distribution<int> grid(-4, 4);
    std::bernoulli_distribution quantize(0.5);

    std::size_t tie_instances = 0;
    for (int inst = 0; inst < 200; ++inst) {
        std::size_t n_docs = 1 + rng() % 50;
        std::size_t n_enc = 1 + rng() % 3;
        std::size_t m = 1 + rng() % 60;
        bool all_equal = false;
        switch (inst) { // pinned edge shapes; the rest stay random
            case 0: n_docs = 1, n_enc = 1, m = 1; break;
            case 1: n_docs = 50, n_enc = 3, m = 60; break;
            case 2: n_docs = 5, n_enc = 2, m = 1; break;
            case 3: n_docs = 20, n_enc = 3, m = 10, all_equal = true; break;
        }

        ScoreMatrix matrix;
        matrix.question_id = "q" + std::to_string(inst);
        for (std::size_t e = 0; e < n_enc; ++e) {
            auto& scores = matrix.per_encoder[std::string("enc-") +
                                              static_cast<char>('a' + e)];
            for (std::size_t d = 0; d < n_docs; ++d) {
                char doc_id[16];
                std::snprintf(doc_id, sizeof(doc_id), "doc-%02zu", d);
                double s = quantize(rng) ? grid(rng) / 4.0 : uniform(rng);
                scores[doc_id] = all_equal ? 0.25 : s;
            }
        }

        // Brute-force oracle: per-document mean in encoder-id order, then a
        // stable sort under the same (score desc, doc_id asc) key.
        std::vector<RankedEntry> oracle;
        for (const auto& [doc_id, first_score] : matrix.per_encoder.begin()->second) {
            (void)first_score;
            double sum = 0.0;
            for (const auto& [encoder_id, scores] : matrix.per_encoder) {
                (void)encoder_id;
                sum += scores.at(doc_id);
            }
            oracle.push_back(
                RankedEntry{doc_id, sum / static_cast<double>(n_enc)});
        }
        std::stable_sort(oracle.begin(), oracle.end(),
                         [](const RankedEntry& a, const RankedEntry& b) {
                             if (a.score != b.score) return a.score > b.score;
                             return a.doc_id < b.doc_id;
                         });

        ScoredRanking fused = fuse_average(matrix);
        std::set<double> distinct;
        for (const auto& entry : fused.entries) distinct.insert(entry.score);
        if (distinct.size() < fused.entries.size()) ++tie_instances;

        if (oracle.size() > m) oracle.resize(m);
        ScoredRanking got = top_m(fused, m);
        require(got.entries.size() == oracle.size(),
                fmt("instance %d: size %zu, oracle %zu", inst,
                    got.entries.size(), oracle.size()));
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            require(got.entries[i].doc_id == oracle[i].doc_id &&
                        got.entries[i].score == oracle[i].score,
                    fmt("instance %d rank %zu: got %s/%.17g, oracle %s/%.17g",
                        inst, i + 1, got.entries[i].doc_id.c_str(),
                        got.entries[i].score, oracle[i].doc_id.c_str(),
                        oracle[i].score));
        }
    }

    const double secs = seconds_since(start);
    require(tie_instances >= 10, fmt("only %zu instances had exact score ties",
                                     tie_instances));
    require(secs < 5.0, fmt("took %.2fs, budget is 5s", secs));
    return fmt("200 instances (N<=50, 1-3 encoders), %zu with exact ties, %.2fs",
               tie_instances, secs);
}

// ---------------------------------------------------------------------------
// 2. Cosine vs a naive scalar reference.

std::string criterion_cosine() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> uniform(-1.0f, 1.0f);

    double max_delta = 0.0;
    for (int pair = 0; pair < 1000; ++pair) {
        const std::size_t dim = 2 + rng() % 511;
        Embedding a{{}, "a", "enc"};
        Embedding b{{}, "b", "enc"};
        for (std::size_t i = 0; i < dim; ++i) {
            a.vector.push_back(uniform(rng));
            b.vector.push_back(uniform(rng));
        }
        a.vector[0] = a.vector[0] == 0.0f ? 0.5f : a.vector[0];
        b.vector[0] = b.vector[0] == 0.0f ? 0.5f : b.vector[0];

        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            dot += static_cast<double>(a.vector[i]) * static_cast<double>(b.vector[i]);
        }
        for (float v : a.vector) na += static_cast<double>(v) * v;
        for (float v : b.vector) nb += static_cast<double>(v) * v;
        const double naive = dot / (std::sqrt(na) * std::sqrt(nb));

        max_delta = std::max(max_delta, std::fabs(cosine(a, b) - naive));
        require(max_delta <= 1e-12,
                fmt("pair %d (dim %zu): |cosine - naive| = %.3g", pair, dim,
                    max_delta));
        require(std::fabs(cosine(a, a) - 1.0) <= 1e-12,
                fmt("pair %d: cosine(v, v) = %.17g", pair, cosine(a, a)));
    }

    Embedding zero{std::vector<float>(8, 0.0f), "z", "enc"};
    Embedding unit{std::vector<float>(8, 1.0f), "u", "enc"};
    bool threw = false;
    try {
        cosine(zero, unit);
    } catch (const DegenerateInputError&) {
        threw = true;
    }
    require(threw, "zero-norm vector did not raise DegenerateInputError");

    Embedding shorter{std::vector<float>(4, 1.0f), "s", "enc"};
    threw = false;
    try {
        cosine(shorter, unit);
    } catch (const DegenerateInputError&) {
        threw = true;
    }
    require(threw, "length mismatch did not raise DegenerateInputError");

    return fmt("1000 pairs (dims 2-512), max |delta| = %.1e; self-cosine and "
               "zero-vector guards hold",
               max_delta);
}

// ---------------------------------------------------------------------------
// 3. recall@k hand counts and monotonicity.

std::string criterion_recall() {
    const std::vector<std::size_t> ranks = {1, 2, 0, 7, 3};
    require(recall_at_k(ranks, 1) == 1.0 / 5.0, "recall@1 of {1,2,0,7,3}");
    require(recall_at_k(ranks, 3) == 3.0 / 5.0, "recall@3 of {1,2,0,7,3}");
    require(recall_at_k(ranks, 5) == 3.0 / 5.0, "recall@5 of {1,2,0,7,3}");
    require(recall_at_k(ranks, 7) == 4.0 / 5.0, "recall@7 of {1,2,0,7,3}");
    require(recall_at_k({0, 0, 0}, 5) == 0.0, "all-absent ranks");
    require(recall_at_k({1, 1}, 1) == 1.0, "all-first ranks");
    require(recall_at_k({4}, 3) == 0.0, "rank 4 misses k=3");
    require(recall_at_k({4}, 4) == 1.0, "rank 4 hits k=4");

    std::mt19937_64 rng(41);
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 1 + rng() % 30;
        std::vector<std::size_t> sample;
        std::size_t present = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sample.push_back(rng() % 41); // 0 = absent, else rank 1..40
            if (sample.back() != 0) ++present;
        }
        double prev = 0.0;
        for (std::size_t k = 1; k <= 40; ++k) {
            const double r = recall_at_k(sample, k);
            require(r >= prev, fmt("instance %d: recall@%zu < recall@%zu", inst,
                                   k, k - 1));
            prev = r;
        }
        require(prev == static_cast<double>(present) / static_cast<double>(n),
                fmt("instance %d: recall@40 misses the present fraction", inst));
    }
    return "8 hand-counted fractions exact; monotone in k on 100 random "
           "instances";
}

// ---------------------------------------------------------------------------
// 4. BM25 vs the hand formula.

std::vector<std::string> simple_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            out.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

// Direct transcription of the Okapi formula over (id, text) pairs, sharing
// nothing with the index implementation.
double oracle_bm25(const std::vector<std::pair<std::string, std::string>>& docs,
                   const std::string& query, const std::string& doc_id,
                   double k1, double b) {
    std::map<std::string, std::map<std::string, std::size_t>> tf_by_doc;
    std::map<std::string, std::size_t> lengths;
    std::size_t total_len = 0;
    for (const auto& [id, text] : docs) {
        auto tokens = simple_tokens(text);
        lengths[id] = tokens.size();
        total_len += tokens.size();
        for (const auto& t : tokens) ++tf_by_doc[id][t];
    }
    const double n_docs = static_cast<double>(docs.size());
    const double avgdl = static_cast<double>(total_len) / n_docs;
    const double dl = static_cast<double>(lengths.at(doc_id));

    double total = 0.0;
    for (const auto& term : simple_tokens(query)) {
        std::size_t df = 0;
        for (const auto& [id, tf] : tf_by_doc) {
            (void)id;
            if (tf.count(term)) ++df;
        }
        const auto& doc_tf = tf_by_doc[doc_id];
        auto it = doc_tf.find(term);
        if (df == 0 || it == doc_tf.end()) continue;
        const double idf =
            std::log((n_docs - static_cast<double>(df) + 0.5) /
                         (static_cast<double>(df) + 0.5) +
                     1.0);
        const double tf_d = static_cast<double>(it->second);
        total += idf * (tf_d * (k1 + 1.0)) /
                 (tf_d + k1 * (1.0 - b + b * dl / avgdl));
    }
    return total;
}

Haystack haystack_from(const std::string& name,
                       const std::vector<std::pair<std::string, std::string>>& docs) {
    std::vector<Document> documents;
    for (const auto& [id, text] : docs) {
        documents.push_back(Document{id, id + ".png", text});
    }
    return Haystack(name, std::move(documents));
}

std::string criterion_bm25() {
    const std::vector<std::pair<std::string, std::string>> docs = {
        {"d1", "annual report for year 2021"},
        {"d2", "invoice grand total 42 dollars"},
        {"d3", "total total total"},
        {"d4", "signed by smith yesterday"},
        {"d5", "quarterly revenue figures"},
    };
    const std::vector<std::string> queries = {
        "total",
        "What is the total?",
        "annual report",
        "TOTAL",
        "signed smith",
        "revenue",
        "quarterly revenue figures",
        "42 dollars",
        "year 2021 report",
        "invoice",
        "total invoice grand",
        "smith",
        "the",
        "for",
        "yesterday quarterly",
        "Total, total; TOTAL!",
        "report report",
        "grand total dollars invoice 42",
        "2021",
        "figures revenue quarterly",
    };
    require(queries.size() == 20, "query list drifted");

    std::size_t comparisons = 0;
    for (const auto [k1, b] : {std::pair{1.2, 0.75}, std::pair{1.5, 0.2}}) {
        const Bm25Index index = Bm25Index::build(haystack_from("hs", docs), k1, b);
        for (const auto& query : queries) {
            for (const auto& [doc_id, text] : docs) {
                (void)text;
                const double got = index.score(query, doc_id);
                const double want = oracle_bm25(docs, query, doc_id, k1, b);
                require(std::fabs(got - want) <= 1e-9,
                        fmt("k1=%.2f b=%.2f query \"%s\" doc %s: %.12f vs "
                            "oracle %.12f",
                            k1, b, query.c_str(), doc_id.c_str(), got, want));
                ++comparisons;
            }
        }
        for (const auto& [doc_id, text] : docs) {
            (void)text;
            require(index.score("", doc_id) == 0.0, "empty query must score 0");
            require(index.score("zebra", doc_id) == 0.0,
                    "unseen term must score 0");
        }
    }

    // 2-doc corpus where score("a", d1) reduces to ln 2 by hand.
    const std::vector<std::pair<std::string, std::string>> tiny = {
        {"d1", "a b"}, {"d2", "b c"}};
    const Bm25Index tiny_index = Bm25Index::build(haystack_from("tiny", tiny));
    const double ln2_score = tiny_index.score("a", "d1");
    require(std::fabs(ln2_score - std::log(2.0)) <= 1e-9,
            fmt("ln 2 example: got %.12f", ln2_score));
    require(std::fabs(oracle_bm25(tiny, "a", "d1", 1.2, 0.75) - ln2_score) <= 1e-9,
            "oracle disagrees on the ln 2 example");

    return fmt("%zu score comparisons within 1e-9 over two parameter sets; "
               "ln 2 example and zero cases hold",
               comparisons);
}

// ---------------------------------------------------------------------------
// 5. Edit distance vs an exhaustive recursive oracle.

std::size_t lev_memo(const std::string& a, const std::string& b) {
    const std::size_t w = b.size() + 1;
    std::vector<int> memo((a.size() + 1) * w, -1);
    struct Rec {
        const std::string& a;
        const std::string& b;
        std::vector<int>& memo;
        std::size_t w;
        int go(std::size_t i, std::size_t j) {
            if (i == 0) return static_cast<int>(j);
            if (j == 0) return static_cast<int>(i);
            int& m = memo[i * w + j];
            if (m >= 0) return m;
            const int cost = a[i - 1] == b[j - 1] ? 0 : 1;
            int best = go(i - 1, j - 1) + cost;
            best = std::min(best, go(i - 1, j) + 1);
            best = std::min(best, go(i, j - 1) + 1);
            return m = best;
        }
    } rec{a, b, memo, w};
    return static_cast<std::size_t>(rec.go(a.size(), b.size()));
}

std::size_t lev_pure(std::string_view a, std::string_view b) {
    if (a.empty()) return b.size();
    if (b.empty()) return a.size();
    const std::size_t cost = a.back() == b.back() ? 0 : 1;
    const auto sa = a.substr(0, a.size() - 1);
    const auto sb = b.substr(0, b.size() - 1);
    return std::min({lev_pure(sa, b) + 1, lev_pure(a, sb) + 1,
                     lev_pure(sa, sb) + cost});
}

std::vector<std::string> all_abc_strings(std::size_t max_len) {
    std::vector<std::string> out = {""};
    std::vector<std::string> layer = {""};
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::vector<std::string> next;
        for (const auto& s : layer) {
            for (char c : {'a', 'b', 'c'}) {
                next.push_back(s + c);
                out.push_back(next.back());
            }
        }
        layer = std::move(next);
    }
    return out;
}

std::string criterion_edit_distance() {
    const auto start = std::chrono::steady_clock::now();

    const auto short_strings = all_abc_strings(4);
    for (const auto& a : short_strings) {
        for (const auto& b : short_strings) {
            require(lev_memo(a, b) == lev_pure(a, b),
                    fmt("memoized oracle disagrees with pure recursion on "
                        "(\"%s\", \"%s\")",
                        a.c_str(), b.c_str()));
        }
    }

    const auto strings = all_abc_strings(6);
    std::size_t pairs = 0;
    for (const auto& a : strings) {
        for (const auto& b : strings) {
            const std::size_t want = lev_memo(a, b);
            require(levenshtein(a, b) == want,
                    fmt("levenshtein(\"%s\", \"%s\") = %zu, oracle %zu",
                        a.c_str(), b.c_str(), levenshtein(a, b), want));
            ++pairs;
        }
    }

    const double kitten = anls_raw("kitten", "sitting");
    require(std::fabs(kitten - (1.0 - 3.0 / 7.0)) <= 1e-12,
            fmt("kitten/sitting raw score %.17g", kitten));

    // 1 edit over length 5 lands exactly on the 0.8 threshold, which must
    // clamp; one edit over length 10 (0.9) must survive.
    require(anls_raw("abcde", "abcdx") == 0.8, "threshold pair drifted off 0.8");
    require(anls("abcde", {"abcdx"}) == 0.0, "score exactly 0.8 must clamp to 0");
    require(std::fabs(anls("abcdefghij", {"abcdefghix"}) - 0.9) <= 1e-12,
            "score 0.9 must pass the threshold");

    return fmt("%zu pairs (len<=6 over {a,b,c}) match the oracle; kitten/sitting "
               "and the strict 0.8 clamp hold, %.2fs",
               pairs, seconds_since(start));
}

// ---------------------------------------------------------------------------
// 6. Filter subsequence property and the all-"no" fallback.

std::string criterion_filter_subsequence() {
    std::mt19937_64 rng(99);
    const std::vector<std::string> yes_forms = {"yes", "Yes, clearly."};
    const std::vector<std::string> no_forms = {"no", "No."};
    const std::vector<std::string> junk_forms = {"maybe", "", "unclear image",
                                                 "perhaps yes"};

    std::size_t kept_total = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t n = 1 + rng() % 20;
        std::vector<Document> docs;
        ScoredRanking candidates;
        candidates.question_id = "fq";
        MockChatClient mock("filter-mock");
        std::vector<int> rolls;
        for (std::size_t d = 0; d < n; ++d) {
            char doc_id[16];
            std::snprintf(doc_id, sizeof(doc_id), "f-doc-%02zu", d);
            docs.push_back(Document{doc_id, std::string(doc_id) + ".png", {}});
            candidates.entries.push_back(
                RankedEntry{doc_id, 1.0 - 0.01 * static_cast<double>(d)});
            const int roll = static_cast<int>(rng() % 3);
            rolls.push_back(roll);
            const auto& forms = roll == 0 ? yes_forms : roll == 1 ? no_forms
                                                                  : junk_forms;
            mock.add_response(ChatKind::filter, "fq", doc_id,
                              forms[rng() % forms.size()]);
        }
        Haystack haystack("filter-hs", docs);
        Question question{"fq", "is the page relevant?", {"yes"}, docs[0].id,
                          "filter-hs"};

        const FilterOutcome outcome = filter_stage(mock, question, candidates,
                                                   haystack, inst % 2 ? 1 : 8);
        require(outcome.verdicts.size() == n, fmt("instance %d: verdict count",
                                                  inst));
        std::vector<RankedEntry> expected;
        for (std::size_t d = 0; d < n; ++d) {
            const Verdict v = outcome.verdicts[d].verdict;
            require(outcome.verdicts[d].doc_id == candidates.entries[d].doc_id,
                    fmt("instance %d: verdict %zu out of candidate order", inst, d));
            require(v == (rolls[d] == 0   ? Verdict::yes
                          : rolls[d] == 1 ? Verdict::no
                                          : Verdict::unparseable),
                    fmt("instance %d doc %zu: verdict does not match the script",
                        inst, d));
            if (v != Verdict::no) expected.push_back(candidates.entries[d]);
        }
        require(outcome.kept.entries == expected,
                fmt("instance %d: kept list is not the yes+unparseable "
                    "subsequence",
                    inst));
        kept_total += expected.size();
    }

    // All-"no" scripts empty the shortlist; answering falls back to the
    // pre-filter top k.
    for (const std::size_t k : {std::size_t{5}, std::size_t{12}}) {
        const std::size_t n = 7;
        std::vector<Document> docs;
        ScoredRanking prefilter;
        prefilter.question_id = "fq";
        MockChatClient mock("filter-mock");
        mock.set_kind_default(ChatKind::filter, "no");
        mock.set_kind_default(ChatKind::vqa, "nothing relevant");
        for (std::size_t d = 0; d < n; ++d) {
            char doc_id[16];
            std::snprintf(doc_id, sizeof(doc_id), "f-doc-%02zu", d);
            docs.push_back(Document{doc_id, std::string(doc_id) + ".png", {}});
            prefilter.entries.push_back(
                RankedEntry{doc_id, 1.0 - 0.01 * static_cast<double>(d)});
        }
        Haystack haystack("filter-hs", docs);
        Question question{"fq", "is the page relevant?", {"yes"}, docs[0].id,
                          "filter-hs"};
        const FilterOutcome outcome =
            filter_stage(mock, question, prefilter, haystack);
        require(outcome.kept.entries.empty(), "all-no script must empty the list");
        const VqaAnswer answer =
            vqa_stage(mock, question, outcome.kept, prefilter, k, haystack);
        require(answer.used_fallback, "empty filtered list must set the fallback");
        require(answer.context_doc_ids.size() == std::min(k, n),
                fmt("fallback context size %zu, want min(%zu, %zu)",
                    answer.context_doc_ids.size(), k, n));
        for (std::size_t i = 0; i < answer.context_doc_ids.size(); ++i) {
            require(answer.context_doc_ids[i] == prefilter.entries[i].doc_id,
                    "fallback context must be the pre-filter prefix");
        }
    }

    return fmt("200 random verdict scripts (%zu docs kept) preserve order and "
               "membership; all-\"no\" falls back to min(k, N) docs",
               kept_total);
}

// ---------------------------------------------------------------------------
// 7. Golden end-to-end run.

struct GoldenRun {
    std::string report_bytes;
    std::string trace_bytes;
    BenchmarkOutput output;
    std::shared_ptr<MockChatClient> lmm;
};

GoldenRun run_golden(const Corpus& corpus, bool filter_enabled) {
    BenchmarkServices services;
    services.encoders = {std::make_shared<MockEncoderClient>("clip", 64),
                         std::make_shared<MockEncoderClient>("openclip", 64, 7),
                         std::make_shared<MockEncoderClient>("siglip", 64, 13)};
    auto lmm = MockChatClient::from_script(fixture("golden/lmm_script.ndjson"),
                                           "golden-lmm");
    services.filter_client = lmm;
    services.vqa_client = lmm;

    BenchmarkOptions options;
    options.pipeline.m = 60;
    options.pipeline.k = 5;
    options.pipeline.filter_enabled = filter_enabled;

    json snapshot = json::object();
    snapshot["fixture"] = "golden";
    snapshot["encoders"] = {"clip", "openclip", "siglip"};
    snapshot["m"] = 60;
    snapshot["k"] = 5;
    snapshot["filter_enabled"] = filter_enabled;

    CacheDirectory caches;
    GoldenRun run;
    run.output = run_benchmark(services, options, corpus, caches, snapshot);
    run.report_bytes = serialize_report(run.output.report);
    for (const auto& trace : run.output.traces) {
        run.trace_bytes += trace_to_ndjson(trace);
    }
    run.lmm = lmm;
    return run;
}

std::string criterion_golden_run() {
    const Corpus corpus = load_manifest(fixture("golden/manifest.ndjson"));
    const GoldenRun first = run_golden(corpus, true);

    if (g_write_golden) {
        write_file(fixture("golden/expected_report.json"), first.report_bytes);
        write_file(fixture("golden/expected_traces.ndjson"), first.trace_bytes);
        return fmt("wrote %zu report bytes and %zu trace bytes",
                   first.report_bytes.size(), first.trace_bytes.size());
    }

    require(first.output.warnings.empty(), "golden run emitted warnings");
    require(first.output.report.per_question.size() == 3 &&
                first.output.traces.size() == 3,
            "golden run must answer all three questions");
    const auto& rows = first.output.report.per_question;
    require(rows[0].context_doc_ids.size() == 3,
            "g-q1 keeps exactly three docs through the filter");
    require(rows[1].used_fallback, "g-q2's all-\"no\" script must fall back");

    const GoldenRun second = run_golden(corpus, true);
    require(second.report_bytes == first.report_bytes &&
                second.trace_bytes == first.trace_bytes,
            "repeated runs differ");

    const std::string want_report = read_file(fixture("golden/expected_report.json"));
    const std::string want_traces =
        read_file(fixture("golden/expected_traces.ndjson"));
    require(first.report_bytes == want_report,
            fmt("report drifted from the committed golden (%zu vs %zu bytes)",
                first.report_bytes.size(), want_report.size()));
    require(first.trace_bytes == want_traces,
            fmt("traces drifted from the committed golden (%zu vs %zu bytes)",
                first.trace_bytes.size(), want_traces.size()));

    // Filter off: the context must become the top k of the fused ranking,
    // reproduced here with an independent retrieval pass.
    const GoldenRun unfiltered = run_golden(corpus, false);
    require(unfiltered.lmm->request_count(ChatKind::filter) == 0,
            "filter-off run still called the filter");
    std::vector<std::shared_ptr<EncoderClient>> encoders = {
        std::make_shared<MockEncoderClient>("clip", 64),
        std::make_shared<MockEncoderClient>("openclip", 64, 7),
        std::make_shared<MockEncoderClient>("siglip", 64, 13)};
    CacheDirectory caches;
    auto& cache_pair = caches.for_haystack("golden-hs");
    for (std::size_t i = 0; i < corpus.questions.size(); ++i) {
        const RetrievalTrace retrieval = retrieve_fused(
            encoders, corpus.questions[i], corpus.haystacks[0], cache_pair.docs,
            cache_pair.questions);
        const ScoredRanking want = top_m(retrieval.fused, 5);
        const auto& context = unfiltered.output.traces[i].context_doc_ids;
        require(context.size() == want.entries.size(),
                "filter-off context size must be min(k, N)");
        for (std::size_t r = 0; r < context.size(); ++r) {
            require(context[r] == want.entries[r].doc_id,
                    fmt("question %zu: filter-off context differs from "
                        "top_m(fused, k) at rank %zu",
                        i, r + 1));
        }
        require(unfiltered.output.traces[i].verdicts.empty(),
                "filter-off trace must carry no verdicts");
    }

    return fmt("report (%zu bytes) and traces (%zu bytes) byte-identical across "
               "runs and to the committed goldens; filter-off context == "
               "top_m(fused, k)",
               first.report_bytes.size(), first.trace_bytes.size());
}

// ---------------------------------------------------------------------------
// 8. Ablation k-sweep direction.

// Returns fixed unit-ish vectors per subject so the fused order is handcrafted.
class FixedEncoder : public EncoderClient {
public:
    FixedEncoder(std::string encoder_id,
                 std::map<std::string, std::vector<float>> by_subject)
        : encoder_id_(std::move(encoder_id)), by_subject_(std::move(by_subject)) {}

    const std::string& encoder_id() const override { return encoder_id_; }
    std::size_t dim() const override { return 2; }

    Embedding embed_text(const std::string& text,
                         const std::string& subject_id) override {
        (void)text;
        return lookup(subject_id);
    }
    Embedding embed_image(const std::string& image_path,
                          const std::string& subject_id) override {
        (void)image_path;
        return lookup(subject_id);
    }
    std::uint64_t request_count() const override { return requests_.load(); }

private:
    Embedding lookup(const std::string& subject_id) {
        requests_.fetch_add(1);
        return Embedding{by_subject_.at(subject_id), subject_id, encoder_id_};
    }

    std::string encoder_id_;
    std::map<std::string, std::vector<float>> by_subject_;
    std::atomic<std::uint64_t> requests_{0};
};

// Answers correctly exactly when the ground-truth page is among the images.
class GtConditionedVqa : public ChatClient {
public:
    explicit GtConditionedVqa(
        std::map<std::string, std::pair<std::string, std::string>> per_question)
        : per_question_(std::move(per_question)) {}

    const std::string& model_id() const override { return model_id_; }
    std::size_t max_images_per_call() const override { return 16; }

    std::string complete(const ChatRequest& request) override {
        total_.fetch_add(1);
        if (request.kind == ChatKind::vqa) vqa_.fetch_add(1);
        const auto& [gt_doc, answer] = per_question_.at(request.question_id);
        for (const auto& image : request.images) {
            if (image.doc_id == gt_doc) return answer;
        }
        return "the shown pages do not contain it";
    }

    std::uint64_t request_count() const override { return total_.load(); }
    std::uint64_t request_count(ChatKind kind) const override {
        return kind == ChatKind::vqa ? vqa_.load() : 0;
    }

private:
    std::string model_id_ = "gt-conditioned-vqa";
    std::map<std::string, std::pair<std::string, std::string>> per_question_;
    std::atomic<std::uint64_t> total_{0};
    std::atomic<std::uint64_t> vqa_{0};
};

std::string criterion_ablation_direction() {
    // Five docs on a fan of directions; both questions sit on the x axis, so
    // the cosine order is a-doc-1 > a-doc-2 > a-doc-3 > a-doc-4 > a-doc-5 and
    // the ground truth a-doc-3 lands at fused rank 3.
    std::map<std::string, std::vector<float>> vectors = {
        {"a-doc-1", {0.985f, 0.174f}}, {"a-doc-2", {0.940f, 0.342f}},
        {"a-doc-3", {0.866f, 0.500f}}, {"a-doc-4", {0.766f, 0.643f}},
        {"a-doc-5", {0.643f, 0.766f}}, {"a-q1", {1.0f, 0.0f}},
        {"a-q2", {1.0f, 0.0f}},
    };
    std::vector<Document> docs;
    for (int d = 1; d <= 5; ++d) {
        const std::string id = "a-doc-" + std::to_string(d);
        docs.push_back(Document{id, id + ".png", {}});
    }
    Corpus corpus;
    corpus.haystacks.push_back(Haystack("abl-hs", std::move(docs)));
    corpus.questions = {
        Question{"a-q1", "What is stamped on the form?", {"alpha"}, "a-doc-3",
                 "abl-hs"},
        Question{"a-q2", "Which code is circled?", {"beta"}, "a-doc-3", "abl-hs"},
    };

    auto vqa = std::make_shared<GtConditionedVqa>(
        std::map<std::string, std::pair<std::string, std::string>>{
            {"a-q1", {"a-doc-3", "alpha"}},
            {"a-q2", {"a-doc-3", "beta"}},
        });
    BenchmarkServices services;
    services.encoders = {std::make_shared<FixedEncoder>("fixed", vectors)};
    services.vqa_client = vqa;

    BenchmarkOptions base;
    base.pipeline.m = 60;
    base.pipeline.filter_enabled = false;
    base.eval_anls = false;

    const std::vector<AblationConfig> grid = {
        {"k=1", {}, false, 1}, {"k=3", {}, false, 3}, {"k=5", {}, false, 5}};
    CacheDirectory caches;
    const AblationOutput out = run_ablation(services, base, grid, corpus, caches,
                                            json{{"fixture", "ablation"}});
    require(out.warnings.empty(), "ablation emitted warnings");
    require(out.reports.size() == 3, "expected one report per grid cell");

    const std::vector<double> want_em = {0.0, 1.0, 1.0};
    for (std::size_t cell = 0; cell < 3; ++cell) {
        const RunReport& report = out.reports[cell];
        require(report.per_question.size() == 2, "both questions must run");
        for (const auto& row : report.per_question) {
            require(row.error.empty(), "question failed: " + row.error);
            require(row.gt_rank == 3,
                    fmt("%s: gt rank %zu, the fixture pins it at 3",
                        report.config.at("label").get<std::string>().c_str(),
                        row.gt_rank));
            require(row.context_doc_ids.size() ==
                        std::min<std::size_t>(grid[cell].k, 5),
                    "context must hold min(k, N) docs");
        }
        require(report.aggregates.at("exact_match") == want_em[cell],
                fmt("%s: exact_match %.2f, want %.2f",
                    report.config.at("label").get<std::string>().c_str(),
                    report.aggregates.at("exact_match"), want_em[cell]));
        require(report.aggregates.at("recall@1") == 0.0 &&
                    report.aggregates.at("recall@3") == 1.0,
                "retrieval side of the sweep drifted");
    }
    require(vqa->request_count(ChatKind::vqa) == 6,
            "each cell must answer both questions exactly once");

    return "gt pinned at fused rank 3: exact_match 0% at k=1, 100% at k=3 and "
           "k=5";
}

// ---------------------------------------------------------------------------
// 9. Curation partition and stage ordering.

std::string criterion_curation_partition() {
    const Corpus corpus = load_manifest(fixture("curation/manifest.ndjson"));
    require(corpus.questions.size() == 10, "curation fixture drifted");
    auto lmm = MockChatClient::from_script(fixture("curation/lmm_script.ndjson"));
    const CurationServices services{lmm, lmm, lmm};
    const auto identifiers = load_identifiers(fixture("curation/identifiers.ndjson"));
    const auto decisions = load_decisions(fixture("curation/decisions.ndjson"));

    const CurationResult result =
        run_curation(corpus, services, identifiers, decisions);
    require(result.records.size() == 10, "one record per question");
    require(result.kept_count() == 3 && result.removed_count() == 4 &&
                result.worklist_count() == 3,
            fmt("partition %zu/%zu/%zu, want 3/4/3", result.kept_count(),
                result.removed_count(), result.worklist_count()));
    require(result.kept_count() + result.removed_count() +
                    result.worklist_count() ==
                corpus.questions.size(),
            "dispositions must partition the input");
    for (std::size_t i = 0; i < corpus.questions.size(); ++i) {
        require(result.records[i].question_id == corpus.questions[i].id,
                "records must stay in manifest order");
    }
    std::vector<std::string> kept_ids;
    for (const auto& q : result.kept) kept_ids.push_back(q.id);
    require(kept_ids == std::vector<std::string>{"q-unparse-clear", "q-hit-clear",
                                                 "q-keep"},
            "kept set drifted");

    const std::map<std::string, std::string> want_reasons = {
        {"q-general", "stage 1: classified general"},
        {"q-unparse-remove", "stage 1: unparseable, removed by manual decision"},
        {"q-unparse-clear", ""},
        {"q-unparse-work", "stage 1: classification unparseable"},
        {"q-hit-remove", "stage 2: ambiguous, removed by manual decision"},
        {"q-hit-clear", ""},
        {"q-hit-work", "stage 2: identifier hits in other documents"},
        {"q-know", "stage 3: answerable from general knowledge"},
        {"q-keep", ""},
        {"q-svcfail",
         "stage 3: service failure (chat model \"mock-lmm\": scripted failure "
         "for knowledge/q-svcfail)"},
    };
    for (const auto& record : result.records) {
        require(record.reason == want_reasons.at(record.question_id),
                fmt("%s: reason \"%s\"", record.question_id.c_str(),
                    record.reason.c_str()));
    }
    for (const auto& record : result.records) {
        if (record.question_id.rfind("q-hit-", 0) == 0) {
            require(record.stage2_hits.size() == 1 &&
                        record.stage2_hits[0].doc_id == "cdoc-2",
                    record.question_id + ": identifier hit must be cdoc-2");
        }
    }

    // Stage ordering via the shared mock's per-kind counters: 10 classify
    // calls, stage 3 reached by exactly 5 questions, the judge skipped when
    // the answerer already failed.
    require(lmm->request_count(ChatKind::classify) == 10,
            fmt("classify calls: %llu",
                static_cast<unsigned long long>(
                    lmm->request_count(ChatKind::classify))));
    require(lmm->request_count(ChatKind::knowledge) == 5,
            fmt("knowledge calls: %llu",
                static_cast<unsigned long long>(
                    lmm->request_count(ChatKind::knowledge))));
    require(lmm->request_count(ChatKind::judge) == 4,
            fmt("judge calls: %llu", static_cast<unsigned long long>(
                                         lmm->request_count(ChatKind::judge))));

    // A stage-1 removal alone must trigger zero stage-3 traffic.
    Corpus only_general;
    only_general.haystacks = corpus.haystacks;
    only_general.questions = {corpus.resolve_question("q-general")};
    auto fresh = MockChatClient::from_script(fixture("curation/lmm_script.ndjson"));
    const CurationResult solo = run_curation(only_general, {fresh, fresh, fresh},
                                             {}, {});
    require(solo.removed_count() == 1, "q-general alone must be removed");
    require(!solo.records[0].stage2_ran && !solo.records[0].stage3_ran,
            "stage flags must show stages 2 and 3 never ran");
    require(fresh->request_count(ChatKind::classify) == 1 &&
                fresh->request_count(ChatKind::knowledge) == 0 &&
                fresh->request_count(ChatKind::judge) == 0,
            "a stage-1 removal must make zero stage-3 calls");

    return "10 questions split 3 kept / 4 removed / 3 worklist with exact "
           "reasons; call counters prove the stage order";
}

struct Criterion {
    const char* name;
    std::function<std::string()> run;
};

} // namespace

int main(int argc, char** argv) {
    g_write_golden = argc > 1 && std::string(argv[1]) == "--write-golden";

    const std::vector<Criterion> criteria = {
        {"fused ranking matches a brute-force oracle", criterion_ranking_oracle},
        {"cosine matches a naive scalar reference", criterion_cosine},
        {"recall@k counts hits exactly and is monotone", criterion_recall},
        {"bm25 matches the hand formula", criterion_bm25},
        {"edit distance matches an exhaustive oracle", criterion_edit_distance},
        {"filter keeps an order-preserving subsequence", criterion_filter_subsequence},
        {"golden end-to-end run is byte-stable", criterion_golden_run},
        {"ablation k-sweep reproduces the accuracy direction",
         criterion_ablation_direction},
        {"curation partitions its input in stage order",
         criterion_curation_partition},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        try {
            const std::string detail = criterion.run();
            std::printf("[PASS] %-52s %s\n", criterion.name, detail.c_str());
        } catch (const std::exception& e) {
            ++failed;
            std::printf("[FAIL] %-52s %s\n", criterion.name, e.what());
        }
    }
    std::printf("[SKIP] %-52s %s\n", "live-endpoint retrieval reproduction",
                "needs real encoder/LMM endpoints; procedure documented in "
                "README.md under \"Integration run\"");

    std::printf("\nacceptance: %zu of %zu executable criteria passed, 1 "
                "documented-only criterion skipped\n",
                criteria.size() - static_cast<std::size_t>(failed),
                criteria.size());
    return failed == 0 ? 0 : 1;
}
