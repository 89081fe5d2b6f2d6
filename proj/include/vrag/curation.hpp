#pragma once

#include "vrag/chat.hpp"
#include "vrag/corpus.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vrag {

enum class Stage1Result { general, specific, unparseable };

const char* to_string(Stage1Result r);

std::string build_classify_prompt(std::string_view question_text);

// Stage 1: is the question general or specific? The response is scanned
// case-insensitively for "specific" / "general"; both or neither present is
// unparseable and routes to manual review.
Stage1Result classify_general(ChatClient& client, const Question& question);

struct IdentifierHit {
    std::string doc_id;
    std::string identifier;

    bool operator==(const IdentifierHit&) const = default;
};

// Stage 2: case-insensitive, whitespace-collapsed substring search for each
// identifier across every document except the ground truth. Documents
// without OCR text cannot hit.
std::vector<IdentifierHit> identifier_search(
    const Haystack& haystack, const std::vector<std::string>& identifiers,
    const std::string& gt_doc_id);

// Stage 3: can the question be answered from knowledge alone? Asks the
// answerer the bare question plus ", answer briefly." and judges the reply
// against the targets. True means the question gets removed.
bool knowledge_filter(ChatClient& answerer, ChatClient& judge,
                      const Question& question);

enum class Disposition { kept, removed, worklist };

const char* to_string(Disposition d);

struct CurationRecord {
    std::string question_id;

    bool stage1_ran = false;
    Stage1Result stage1 = Stage1Result::unparseable;

    bool stage2_ran = false;
    std::vector<IdentifierHit> stage2_hits;
    bool stage2_cleared = false; // human decision resolved the hits

    bool stage3_ran = false;
    bool knowledge_answerable = false;

    Disposition final = Disposition::worklist;
    std::string reason;
};

enum class Decision { clear, remove };

struct CurationServices {
    std::shared_ptr<ChatClient> classifier; // stage 1
    std::shared_ptr<ChatClient> answerer;   // stage 3, bare question
    std::shared_ptr<ChatClient> judge;      // stage 3, comparison
};

struct CurationResult {
    std::vector<CurationRecord> records; // manifest order, one per question
    std::vector<Question> kept;          // manifest order

    std::size_t kept_count() const;
    std::size_t removed_count() const;
    std::size_t worklist_count() const;
};

// Identifiers file: one {"question_id", "identifiers": [...]} per line.
// Questions with no entry have nothing to search and clear stage 2 vacuously.
std::map<std::string, std::vector<std::string>> load_identifiers(
    const std::filesystem::path& path);

// Decisions file: one {"question_id", "decision": "clear"|"remove"} per line.
std::map<std::string, Decision> load_decisions(const std::filesystem::path& path);

// The three stages in order for every question. A question removed at one
// stage never reaches the next; service failures route the question to the
// worklist instead of aborting the run. Human decisions resolve stage-1
// unparseables and stage-2 hits.
CurationResult run_curation(const Corpus& corpus, const CurationServices& services,
                            const std::map<std::string, std::vector<std::string>>&
                                identifiers,
                            const std::map<std::string, Decision>& decisions,
                            int parallelism = 8);

// Worklist entries and records as newline-delimited JSON.
std::string record_to_ndjson_line(const CurationRecord& record);
std::string worklist_to_ndjson(const CurationResult& result);

} // namespace vrag
