#include "vrag/judge.hpp"

#include "vrag/errors.hpp"
#include "vrag/strutil.hpp"

namespace vrag {

const char* to_string(JudgeParse p) {
    switch (p) {
        case JudgeParse::correct: return "correct";
        case JudgeParse::incorrect: return "incorrect";
        case JudgeParse::unparseable: return "unparseable";
    }
    return "unparseable";
}

JudgeParse parse_judge_response(std::string_view raw) {
    std::string token = first_token(raw);
    if (token == "correct") return JudgeParse::correct;
    if (token == "incorrect") return JudgeParse::incorrect;
    return JudgeParse::unparseable;
}

std::string build_judge_prompt(std::string_view question,
                               const std::vector<std::string>& targets,
                               std::string_view predicted) {
    if (targets.empty()) {
        throw DegenerateInputError("llm_judge: no targets");
    }
    std::string true_answer;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (i > 0) true_answer += " | ";
        true_answer += targets[i];
    }
    std::string prompt;
    prompt += "Task: You are an evaluator. Compare the Predicted Answer with the "
              "True Answer and determine if the Predicted Answer is Correct or "
              "Incorrect.\n";
    prompt += "Instructions:\n";
    prompt += "- If the Predicted Answer provides the same information or a "
              "reasonable interpretation of the True Answer, respond with "
              "Correct.\n";
    prompt += "- If the Predicted Answer does not match or does not reasonably "
              "interpret the True Answer, respond with Incorrect.\n";
    prompt += "Important: Answer only with Correct or Incorrect—no "
              "explanations.\n";
    prompt += "Input:\n";
    prompt += "- Question: ";
    prompt += question;
    prompt += "\n- True Answer: ";
    prompt += true_answer;
    prompt += "\n- Predicted Answer: ";
    prompt += predicted;
    return prompt;
}

JudgeVerdict llm_judge(ChatClient& judge_client, std::string_view question_id,
                       std::string_view question,
                       const std::vector<std::string>& targets,
                       std::string_view predicted) {
    ChatRequest req;
    req.kind = ChatKind::judge;
    req.question_id = std::string(question_id);
    req.text = build_judge_prompt(question, targets, predicted);
    req.temperature = 0.0;

    JudgeVerdict verdict;
    verdict.question_id = std::string(question_id);
    verdict.metric = "llm_judge";
    verdict.raw_response = judge_client.complete(req);
    switch (parse_judge_response(verdict.raw_response)) {
        case JudgeParse::correct:
            verdict.correct = true;
            break;
        case JudgeParse::incorrect:
            verdict.correct = false;
            break;
        case JudgeParse::unparseable:
            verdict.unparseable = true;
            break;
    }
    return verdict;
}

} // namespace vrag
