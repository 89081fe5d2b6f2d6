#include "vrag/corpus.hpp"

#include "vrag/errors.hpp"
#include "vrag/io.hpp"
#include "vrag/strutil.hpp"

#include <fstream>
#include <unordered_set>

namespace vrag {

namespace fs = std::filesystem;
using nlohmann::json;

Haystack::Haystack(std::string name, std::vector<Document> documents)
    : name_(std::move(name)), documents_(std::move(documents)) {
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        auto [it, inserted] = index_.emplace(documents_[i].id, i);
        if (!inserted) {
            throw DuplicateIdError("duplicate document id \"" + documents_[i].id +
                                   "\" in haystack \"" + name_ + "\"");
        }
    }
    if (documents_.empty()) {
        throw ParseError("haystack \"" + name_ + "\" has no documents");
    }
}

const Document* Haystack::find(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    return it == index_.end() ? nullptr : &documents_[it->second];
}

const Document& Haystack::resolve(const std::string& doc_id) const {
    const Document* doc = find(doc_id);
    if (!doc) {
        throw ReferentialError("document id \"" + doc_id +
                               "\" not found in haystack \"" + name_ + "\"");
    }
    return *doc;
}

void Haystack::set_ocr_text(const std::string& doc_id, std::string text) {
    auto it = index_.find(doc_id);
    if (it == index_.end()) {
        throw ReferentialError("document id \"" + doc_id +
                               "\" not found in haystack \"" + name_ + "\"");
    }
    documents_[it->second].ocr_text = std::move(text);
}

const Haystack* Corpus::find_haystack(const std::string& name) const {
    for (const auto& h : haystacks) {
        if (h.name() == name) return &h;
    }
    return nullptr;
}

const Haystack& Corpus::resolve_haystack(const std::string& name) const {
    const Haystack* h = find_haystack(name);
    if (!h) throw ReferentialError("haystack \"" + name + "\" not found");
    return *h;
}

const Question* Corpus::find_question(const std::string& question_id) const {
    for (const auto& q : questions) {
        if (q.id == question_id) return &q;
    }
    return nullptr;
}

const Question& Corpus::resolve_question(const std::string& question_id) const {
    const Question* q = find_question(question_id);
    if (!q) throw ReferentialError("question \"" + question_id + "\" not found");
    return *q;
}

std::vector<const Question*> Corpus::questions_for(const std::string& haystack_name) const {
    std::vector<const Question*> out;
    for (const auto& q : questions) {
        if (q.haystack == haystack_name) out.push_back(&q);
    }
    return out;
}

namespace {

std::string require_string(const json& obj, const char* key, std::size_t line_no,
                           const fs::path& path) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": missing or non-string field \"" + key + "\"");
    }
    return it->get<std::string>();
}

} // namespace

Corpus load_manifest(const fs::path& path) {
    struct PendingHaystack {
        std::vector<Document> documents;
        std::unordered_set<std::string> ids;
    };
    std::vector<std::string> haystack_order;
    std::unordered_map<std::string, PendingHaystack> pending;
    std::vector<Question> questions;
    std::unordered_set<std::string> question_ids;

    for_each_ndjson(path, [&](std::size_t line_no, const json& obj) {
        const std::string kind = require_string(obj, "kind", line_no, path);
        const std::string haystack = require_string(obj, "haystack", line_no, path);
        const std::string id = require_string(obj, "id", line_no, path);
        if (id.empty()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": empty id");
        }
        if (kind == "document") {
            std::string image_path = require_string(obj, "image_path", line_no, path);
            if (image_path.empty()) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": empty image_path for document \"" + id + "\"");
            }
            auto it = pending.find(haystack);
            if (it == pending.end()) {
                haystack_order.push_back(haystack);
                it = pending.emplace(haystack, PendingHaystack{}).first;
            }
            if (!it->second.ids.insert(id).second) {
                throw DuplicateIdError(path.string() + ":" + std::to_string(line_no) +
                                       ": duplicate document id \"" + id +
                                       "\" in haystack \"" + haystack + "\"");
            }
            std::optional<std::string> ocr_text;
            if (auto ocr = obj.find("ocr_text"); ocr != obj.end()) {
                if (!ocr->is_string()) {
                    throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                     ": ocr_text must be a string");
                }
                ocr_text = ocr->get<std::string>();
            }
            it->second.documents.push_back(
                Document{id, std::move(image_path), std::move(ocr_text)});
        } else if (kind == "question") {
            Question q;
            q.id = id;
            q.haystack = haystack;
            q.text = require_string(obj, "text", line_no, path);
            q.gt_doc_id = require_string(obj, "gt_doc_id", line_no, path);
            auto answers = obj.find("answers");
            if (answers == obj.end() || !answers->is_array() || answers->empty()) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": question \"" + id +
                                 "\" needs a non-empty answers array");
            }
            for (const auto& a : *answers) {
                if (!a.is_string()) {
                    throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                     ": non-string answer for question \"" + id + "\"");
                }
                q.answers.push_back(a.get<std::string>());
            }
            if (!question_ids.insert(id).second) {
                throw DuplicateIdError(path.string() + ":" + std::to_string(line_no) +
                                       ": duplicate question id \"" + id + "\"");
            }
            questions.push_back(std::move(q));
        } else {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": unknown kind \"" + kind + "\"");
        }
    });

    Corpus corpus;
    corpus.haystacks.reserve(haystack_order.size());
    for (const auto& name : haystack_order) {
        corpus.haystacks.emplace_back(name, std::move(pending[name].documents));
    }
    corpus.questions = std::move(questions);

    for (const auto& q : corpus.questions) {
        const Haystack* h = corpus.find_haystack(q.haystack);
        if (!h) {
            throw ReferentialError("question \"" + q.id +
                                   "\" references unknown haystack \"" + q.haystack +
                                   "\"");
        }
        if (!h->find(q.gt_doc_id)) {
            throw ReferentialError("question \"" + q.id +
                                   "\" references unknown gt_doc_id \"" + q.gt_doc_id +
                                   "\" in haystack \"" + q.haystack + "\"");
        }
    }
    return corpus;
}

OcrAttachResult attach_ocr(Haystack& haystack, const fs::path& ocr_dir) {
    OcrAttachResult result;
    for (const auto& doc : haystack.documents()) {
        fs::path sidecar = ocr_dir / (doc.id + ".txt");
        std::error_code ec;
        if (!fs::exists(sidecar, ec) || ec) {
            ++result.missing;
            continue;
        }
        std::string text;
        try {
            text = read_file(sidecar);
        } catch (const Error& e) {
            result.errors.emplace_back(doc.id, e.what());
            continue;
        }
        if (!is_valid_utf8(text)) {
            result.errors.emplace_back(doc.id, sidecar.string() + ": not valid UTF-8");
            continue;
        }
        haystack.set_ocr_text(doc.id, std::move(text));
        ++result.attached;
    }
    return result;
}

std::string question_to_manifest_line(const Question& q) {
    json obj;
    obj["kind"] = "question";
    obj["haystack"] = q.haystack;
    obj["id"] = q.id;
    obj["text"] = q.text;
    obj["answers"] = q.answers;
    obj["gt_doc_id"] = q.gt_doc_id;
    return obj.dump();
}

std::string to_manifest(const Corpus& corpus) {
    std::string out;
    for (const auto& h : corpus.haystacks) {
        for (const auto& doc : h.documents()) {
            json obj;
            obj["kind"] = "document";
            obj["haystack"] = h.name();
            obj["id"] = doc.id;
            obj["image_path"] = doc.image_path;
            if (doc.ocr_text.has_value()) obj["ocr_text"] = *doc.ocr_text;
            out += obj.dump();
            out += '\n';
        }
    }
    for (const auto& q : corpus.questions) {
        out += question_to_manifest_line(q);
        out += '\n';
    }
    return out;
}

} // namespace vrag
