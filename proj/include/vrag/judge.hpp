#pragma once

#include "vrag/chat.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace vrag {

enum class JudgeParse { correct, incorrect, unparseable };

const char* to_string(JudgeParse p);

// Leading-token scan: "Correct", "correct.", "Incorrect -- ..." all parse;
// anything else is unparseable.
JudgeParse parse_judge_response(std::string_view raw);

struct JudgeVerdict {
    std::string question_id;
    std::string metric;        // "exact_match" | "anls" | "llm_judge"
    bool correct = false;
    double detail = 0.0;       // ANLS similarity where applicable
    bool unparseable = false;  // llm_judge only: response was neither verdict
    std::string raw_response;  // llm_judge only
};

// Renders the evaluation prompt with the question, targets and prediction
// slotted into the Input block. Multiple targets are joined with " | ".
std::string build_judge_prompt(std::string_view question,
                               const std::vector<std::string>& targets,
                               std::string_view predicted);

// One judge call at temperature 0. Unparseable responses are recorded on the
// verdict rather than thrown; transport errors propagate.
JudgeVerdict llm_judge(ChatClient& judge_client, std::string_view question_id,
                       std::string_view question,
                       const std::vector<std::string>& targets,
                       std::string_view predicted);

} // namespace vrag
