#include "vrag/retrieval.hpp"

#include "vrag/errors.hpp"
#include "vrag/strutil.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace vrag {

std::size_t ScoredRanking::rank_of(const std::string& doc_id) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].doc_id == doc_id) return i + 1;
    }
    return 0;
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.vector.size() != b.vector.size()) {
        throw DegenerateInputError("cosine: length mismatch (" +
                                   std::to_string(a.vector.size()) + " vs " +
                                   std::to_string(b.vector.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.vector.size(); ++i) {
        double x = a.vector[i];
        double y = b.vector[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) {
        throw DegenerateInputError("cosine: zero-norm vector");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::map<std::string, double> score_haystack(
    const Embedding& q_emb, const std::map<std::string, Embedding>& doc_embs,
    const std::string& encoder_id) {
    if (q_emb.encoder_id != encoder_id) {
        throw DegenerateInputError("score_haystack: question embedding is from \"" +
                                   q_emb.encoder_id + "\", expected \"" + encoder_id +
                                   "\"");
    }
    std::map<std::string, double> scores;
    for (const auto& [doc_id, emb] : doc_embs) {
        if (emb.encoder_id != encoder_id) {
            throw DegenerateInputError("score_haystack: document \"" + doc_id +
                                       "\" embedding is from \"" + emb.encoder_id +
                                       "\", expected \"" + encoder_id + "\"");
        }
        scores.emplace(doc_id, cosine(q_emb, emb));
    }
    return scores;
}

ScoredRanking rank_scores(const std::string& question_id,
                          const std::map<std::string, double>& scores) {
    ScoredRanking ranking;
    ranking.question_id = question_id;
    ranking.entries.reserve(scores.size());
    for (const auto& [doc_id, score] : scores) {
        ranking.entries.push_back(RankedEntry{doc_id, score});
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(),
              [](const RankedEntry& a, const RankedEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.doc_id < b.doc_id;
              });
    return ranking;
}

ScoredRanking fuse_average(const ScoreMatrix& matrix) {
    if (matrix.per_encoder.empty()) {
        throw DegenerateInputError("fuse_average: no encoders");
    }
    const auto& first = matrix.per_encoder.begin()->second;
    for (const auto& [encoder_id, scores] : matrix.per_encoder) {
        if (scores.size() != first.size()) {
            throw DegenerateInputError("fuse_average: encoder \"" + encoder_id +
                                       "\" scored " + std::to_string(scores.size()) +
                                       " documents, expected " +
                                       std::to_string(first.size()));
        }
        for (const auto& [doc_id, score] : scores) {
            if (!std::isfinite(score)) {
                throw DegenerateInputError("fuse_average: non-finite score for \"" +
                                           doc_id + "\"");
            }
            if (first.find(doc_id) == first.end()) {
                throw DegenerateInputError("fuse_average: document \"" + doc_id +
                                           "\" missing from encoder \"" +
                                           matrix.per_encoder.begin()->first + "\"");
            }
        }
    }
    // Accumulate per document in encoder-id order (map order), divide once;
    // the reduction order is fixed so fused values are bit-reproducible.
    std::map<std::string, double> fused;
    for (const auto& [doc_id, score] : first) {
        (void)score;
        fused[doc_id] = 0.0;
    }
    for (const auto& [encoder_id, scores] : matrix.per_encoder) {
        (void)encoder_id;
        for (const auto& [doc_id, score] : scores) {
            fused[doc_id] += score;
        }
    }
    const double n = static_cast<double>(matrix.per_encoder.size());
    for (auto& [doc_id, score] : fused) {
        (void)doc_id;
        score /= n;
    }
    return rank_scores(matrix.question_id, fused);
}

ScoredRanking top_m(const ScoredRanking& ranking, std::size_t m) {
    if (m == 0) {
        throw DegenerateInputError("top_m: m must be >= 1");
    }
    ScoredRanking out;
    out.question_id = ranking.question_id;
    std::size_t n = std::min(m, ranking.entries.size());
    out.entries.assign(ranking.entries.begin(), ranking.entries.begin() + n);
    return out;
}

std::string ranking_to_ndjson(const ScoredRanking& ranking) {
    std::string out;
    const std::string qid = nlohmann::json(ranking.question_id).dump();
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto& e = ranking.entries[i];
        out += "{\"question_id\":" + qid;
        out += ",\"rank\":" + std::to_string(i + 1);
        out += ",\"doc_id\":" + nlohmann::json(e.doc_id).dump();
        out += ",\"score\":" + format_double17(e.score) + "}\n";
    }
    return out;
}

} // namespace vrag
