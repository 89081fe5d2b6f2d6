#pragma once

#include "vrag/retrieval.hpp"

#include <map>
#include <string>
#include <vector>

namespace vrag {

class Haystack;

/// Inverted index over OCR text for the text-retrieval baseline.
/// Tokenization: split on non-alphanumeric code points, ASCII case-folded,
/// no stemming or stopwords. Immutable after build; scoring is pure.
class Bm25Index {
public:
    struct Posting {
        std::string doc_id;
        std::size_t term_freq;
    };

    /// Documents without OCR text are indexed as empty (counted, not fatal).
    /// k1/b are the Okapi parameters. Throws on an empty haystack.
    static Bm25Index build(const Haystack& haystack, double k1 = 1.2, double b = 0.75);

    /// Okapi score of one document for a query:
    ///   sum over query tokens of IDF(t) * tf*(k1+1) / (tf + k1*(1-b+b*dl/avgdl))
    /// with IDF(t) = ln((N-df+0.5)/(df+0.5) + 1), nonnegative by construction.
    /// Unknown doc_id throws; empty/unseen queries score exactly 0.
    double score(const std::string& query, const std::string& doc_id) const;

    /// Score every document and sort (score desc, doc_id asc).
    ScoredRanking rank(const std::string& query,
                       const std::string& question_id = {}) const;

    double k1() const { return k1_; }
    double b() const { return b_; }
    double avgdl() const { return avgdl_; }
    std::size_t doc_count() const { return doc_lengths_.size(); }
    std::size_t docs_without_ocr() const { return docs_without_ocr_; }

    const std::map<std::string, std::vector<Posting>>& postings() const {
        return postings_;
    }
    const std::map<std::string, std::size_t>& doc_lengths() const {
        return doc_lengths_;
    }

private:
    Bm25Index() = default;

    double term_doc_score(const std::string& term, const std::string& doc_id) const;

    std::map<std::string, std::vector<Posting>> postings_;
    std::map<std::string, std::size_t> doc_lengths_;
    double avgdl_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
    std::size_t docs_without_ocr_ = 0;
};

} // namespace vrag
