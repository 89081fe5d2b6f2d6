#pragma once

#include "vrag/encoder.hpp"

#include <map>
#include <string>
#include <vector>

namespace vrag {

/// Per-encoder similarity scores for one question against a haystack.
struct ScoreMatrix {
    std::string question_id;
    /// encoder_id -> (doc_id -> score). Every enabled encoder must hold a
    /// score for every document before fusion.
    std::map<std::string, std::map<std::string, double>> per_encoder;
};

struct RankedEntry {
    std::string doc_id;
    double score;

    bool operator==(const RankedEntry&) const = default;
};

/// Ordered (doc_id, score) list, strictly sorted by score descending with
/// doc_id ascending as the tie-break, so the order is total and reproducible.
struct ScoredRanking {
    std::string question_id;
    std::vector<RankedEntry> entries;

    std::size_t size() const { return entries.size(); }

    /// 1-based rank of doc_id, or 0 when absent.
    std::size_t rank_of(const std::string& doc_id) const;
};

/// Cosine similarity accumulated in 64-bit regardless of storage precision.
/// Throws DegenerateInputError on length mismatch or a zero-norm input.
double cosine(const Embedding& a, const Embedding& b);

/// Score one question embedding against every document embedding of one
/// encoder. All encoder ids must agree; a pure function of its inputs.
std::map<std::string, double> score_haystack(
    const Embedding& q_emb, const std::map<std::string, Embedding>& doc_embs,
    const std::string& encoder_id);

/// Sort a raw score map into a ranking (score desc, doc_id asc).
ScoredRanking rank_scores(const std::string& question_id,
                          const std::map<std::string, double>& scores);

/// Unweighted arithmetic mean across encoders, then ranked. Requires at
/// least one encoder and a complete matrix.
ScoredRanking fuse_average(const ScoreMatrix& matrix);

/// First min(m, N) entries, order preserved. m must be >= 1.
ScoredRanking top_m(const ScoredRanking& ranking, std::size_t m);

/// Debug/golden dump: one JSON line per entry with the score rendered at 17
/// significant digits, identical bytes for identical rankings.
std::string ranking_to_ndjson(const ScoredRanking& ranking);

} // namespace vrag
