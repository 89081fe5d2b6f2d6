#include "vrag/bm25.hpp"

#include "vrag/corpus.hpp"
#include "vrag/errors.hpp"
#include "vrag/strutil.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace vrag {

Bm25Index Bm25Index::build(const Haystack& haystack, double k1, double b) {
    if (haystack.size() == 0) {
        throw DegenerateInputError("bm25: empty haystack");
    }
    Bm25Index index;
    index.k1_ = k1;
    index.b_ = b;
    std::size_t total_len = 0;
    for (const auto& doc : haystack.documents()) {
        std::vector<std::string> tokens;
        if (doc.ocr_text.has_value()) {
            tokens = tokenize(*doc.ocr_text);
        } else {
            ++index.docs_without_ocr_;
        }
        index.doc_lengths_[doc.id] = tokens.size();
        total_len += tokens.size();
        std::unordered_map<std::string, std::size_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, freq] : tf) {
            index.postings_[term].push_back(Posting{doc.id, freq});
        }
    }
    // Postings were appended in document order, which may differ between
    // manifests with identical content; normalize by doc_id so the index is
    // a function of corpus content only.
    for (auto& [term, list] : index.postings_) {
        (void)term;
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b2) {
                      return a.doc_id < b2.doc_id;
                  });
    }
    index.avgdl_ =
        static_cast<double>(total_len) / static_cast<double>(index.doc_lengths_.size());
    return index;
}

double Bm25Index::term_doc_score(const std::string& term,
                                 const std::string& doc_id) const {
    auto post_it = postings_.find(term);
    if (post_it == postings_.end()) return 0.0;
    const auto& list = post_it->second;
    std::size_t tf = 0;
    for (const auto& p : list) {
        if (p.doc_id == doc_id) {
            tf = p.term_freq;
            break;
        }
    }
    if (tf == 0) return 0.0;
    const double n_docs = static_cast<double>(doc_lengths_.size());
    const double df = static_cast<double>(list.size());
    const double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
    const double dl = static_cast<double>(doc_lengths_.at(doc_id));
    const double tf_d = static_cast<double>(tf);
    const double denom = tf_d + k1_ * (1.0 - b_ + b_ * dl / avgdl_);
    return idf * (tf_d * (k1_ + 1.0)) / denom;
}

double Bm25Index::score(const std::string& query, const std::string& doc_id) const {
    if (doc_lengths_.find(doc_id) == doc_lengths_.end()) {
        throw ReferentialError("bm25: unknown document \"" + doc_id + "\"");
    }
    double total = 0.0;
    for (const auto& term : tokenize(query)) {
        total += term_doc_score(term, doc_id);
    }
    return total;
}

ScoredRanking Bm25Index::rank(const std::string& query,
                              const std::string& question_id) const {
    std::map<std::string, double> scores;
    std::vector<std::string> terms = tokenize(query);
    for (const auto& [doc_id, len] : doc_lengths_) {
        (void)len;
        double total = 0.0;
        for (const auto& term : terms) {
            total += term_doc_score(term, doc_id);
        }
        scores.emplace(doc_id, total);
    }
    return rank_scores(question_id, scores);
}

} // namespace vrag
