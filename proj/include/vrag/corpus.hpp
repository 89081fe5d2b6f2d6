#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace vrag {

/// One haystack item: an image on disk, optionally paired with extracted text.
struct Document {
    std::string id;
    std::string image_path;
    std::optional<std::string> ocr_text;
};

/// A named document collection. Iteration order is manifest order.
class Haystack {
public:
    Haystack() = default;
    Haystack(std::string name, std::vector<Document> documents);

    const std::string& name() const { return name_; }
    const std::vector<Document>& documents() const { return documents_; }
    std::size_t size() const { return documents_.size(); }

    /// nullptr when the id is unknown.
    const Document* find(const std::string& doc_id) const;

    /// Throws ReferentialError when the id is unknown.
    const Document& resolve(const std::string& doc_id) const;

    /// Replaces a document's OCR text; the document must exist.
    void set_ocr_text(const std::string& doc_id, std::string text);

private:
    std::string name_;
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Question {
    std::string id;
    std::string text;
    std::vector<std::string> answers; // non-empty
    std::string gt_doc_id;
    std::string haystack; // name reference
};

/// A parsed manifest: haystacks in first-mention order plus all questions in
/// file order, with every reference already validated.
struct Corpus {
    std::vector<Haystack> haystacks;
    std::vector<Question> questions;

    const Haystack* find_haystack(const std::string& name) const;
    const Haystack& resolve_haystack(const std::string& name) const;

    const Question* find_question(const std::string& question_id) const;
    const Question& resolve_question(const std::string& question_id) const;

    /// Questions belonging to one haystack, in manifest order.
    std::vector<const Question*> questions_for(const std::string& haystack_name) const;
};

/// Parse a newline-delimited JSON manifest. Every line is an object with a
/// "kind" of "document" or "question"; see the README for the exact fields.
/// Throws ParseError (with line number), DuplicateIdError, or ReferentialError.
Corpus load_manifest(const std::filesystem::path& path);

struct OcrAttachResult {
    std::size_t attached = 0;
    std::size_t missing = 0;
    /// doc_id -> error description (file present but not valid UTF-8).
    std::vector<std::pair<std::string, std::string>> errors;
};

/// Attach `<ocr_dir>/<doc_id>.txt` sidecar files to the haystack in place.
/// Documents without a sidecar are left untouched; per-file errors are
/// collected, not thrown.
OcrAttachResult attach_ocr(Haystack& haystack, const std::filesystem::path& ocr_dir);

/// Serialize back to manifest lines (documents of each haystack, then
/// questions), used by the curation pipeline to emit filtered manifests.
std::string to_manifest(const Corpus& corpus);
std::string question_to_manifest_line(const Question& q);

} // namespace vrag
