#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vrag {

// Edit distance over Unicode code points, not bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 when the normalized prediction equals any normalized target, else 0.
// Normalization: case fold, whitespace collapse, trailing . ! ? stripped.
int exact_match(std::string_view prediction, const std::vector<std::string>& targets);

// Average Normalized Levenshtein Similarity against the best-matching target.
// Normalization: case fold and whitespace collapse only. A per-target score of
// 0.8 or below is clamped to zero before taking the max.
double anls(std::string_view prediction, const std::vector<std::string>& targets);

// Per-target similarity without the threshold clamp, exposed for diagnostics.
double anls_raw(std::string_view prediction, std::string_view target);

// Fraction of rankings whose gt_doc_rank is a value in [1, k]. Rankings where
// the ground truth is absent (rank 0) never count as hits.
double recall_at_k(const std::vector<std::size_t>& gt_ranks, std::size_t k);

} // namespace vrag
