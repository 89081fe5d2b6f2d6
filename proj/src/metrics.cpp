#include "vrag/metrics.hpp"

#include "vrag/errors.hpp"
#include "vrag/strutil.hpp"

#include <algorithm>
#include <numeric>

namespace vrag {

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<char32_t> ca = utf8_decode(a);
    std::vector<char32_t> cb = utf8_decode(b);
    if (ca.size() < cb.size()) std::swap(ca, cb);
    const std::size_t n = cb.size();
    if (n == 0) return ca.size();

    std::vector<std::size_t> row(n + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= ca.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            std::size_t above = row[j];
            std::size_t cost = (ca[i - 1] == cb[j - 1]) ? 0 : 1;
            row[j] = std::min({above + 1, row[j - 1] + 1, diag + cost});
            diag = above;
        }
    }
    return row[n];
}

int exact_match(std::string_view prediction, const std::vector<std::string>& targets) {
    if (targets.empty()) {
        throw DegenerateInputError("exact_match: no targets");
    }
    const std::string p = normalize_answer(prediction, true);
    for (const auto& t : targets) {
        if (p == normalize_answer(t, true)) return 1;
    }
    return 0;
}

double anls_raw(std::string_view prediction, std::string_view target) {
    const std::string p = normalize_answer(prediction, false);
    const std::string t = normalize_answer(target, false);
    if (p.empty() && t.empty()) return 1.0;
    const std::size_t lp = utf8_decode(p).size();
    const std::size_t lt = utf8_decode(t).size();
    const std::size_t longer = std::max(lp, lt);
    if (longer == 0) return 1.0;
    const std::size_t dist = levenshtein(p, t);
    return 1.0 - static_cast<double>(dist) / static_cast<double>(longer);
}

double anls(std::string_view prediction, const std::vector<std::string>& targets) {
    if (targets.empty()) {
        throw DegenerateInputError("anls: no targets");
    }
    double best = 0.0;
    for (const auto& t : targets) {
        double s = anls_raw(prediction, t);
        if (s <= 0.8) s = 0.0;
        best = std::max(best, s);
    }
    return best;
}

double recall_at_k(const std::vector<std::size_t>& gt_ranks, std::size_t k) {
    if (gt_ranks.empty()) {
        throw DegenerateInputError("recall_at_k: no rankings");
    }
    if (k == 0) {
        throw DegenerateInputError("recall_at_k: k must be >= 1");
    }
    std::size_t hits = 0;
    for (std::size_t rank : gt_ranks) {
        if (rank >= 1 && rank <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(gt_ranks.size());
}

} // namespace vrag
