#include "vrag/config.hpp"
#include "vrag/curation.hpp"
#include "vrag/errors.hpp"
#include "vrag/evaluate.hpp"
#include "vrag/io.hpp"
#include "vrag/metrics.hpp"
#include "vrag/strutil.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string manifest;
    std::string out_dir;
    std::string encoders_csv;
    std::string cache_dir;
    std::size_t m = 0;
    std::size_t k = 0;
    bool filter_on = false;
    bool filter_off = false;
    int parallelism = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;

    CLI::Option* m_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* parallelism_opt = nullptr;
    CLI::Option* cache_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool needs_manifest) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    auto* manifest =
        cmd->add_option("--manifest", args.manifest, "corpus manifest (ndjson)");
    if (needs_manifest) manifest->required();
    cmd->add_option("--encoders", args.encoders_csv,
                    "comma-separated encoder subset");
    args.m_opt = cmd->add_option("--m", args.m, "similarity shortlist size");
    args.k_opt = cmd->add_option("--k", args.k, "VQA context size");
    cmd->add_flag("--filter", args.filter_on, "force the relevance filter on");
    cmd->add_flag("--no-filter", args.filter_off, "disable the relevance filter");
    args.parallelism_opt =
        cmd->add_option("--parallelism", args.parallelism, "worker threads");
    args.cache_opt =
        cmd->add_option("--cache-dir", args.cache_dir, "embedding cache directory");
    args.seed_opt = cmd->add_option("--seed", args.seed,
                                    "seed mixed into mock encoder vectors");
}

vrag::PipelineConfig effective_config(const CommonArgs& args) {
    vrag::PipelineConfig config = args.config_path.empty()
                                      ? vrag::default_config()
                                      : vrag::load_config_file(args.config_path);
    if (args.m_opt && args.m_opt->count() > 0) config.m = args.m;
    if (args.k_opt && args.k_opt->count() > 0) config.k = args.k;
    if (args.filter_on && args.filter_off) {
        throw vrag::ConfigError("--filter and --no-filter are mutually exclusive");
    }
    if (args.filter_on) config.filter_enabled = true;
    if (args.filter_off) config.filter_enabled = false;
    if (args.parallelism_opt && args.parallelism_opt->count() > 0) {
        config.parallelism = args.parallelism;
    }
    if (args.cache_opt && args.cache_opt->count() > 0) {
        config.cache_dir = args.cache_dir;
    }
    if (args.seed_opt && args.seed_opt->count() > 0) config.seed = args.seed;

    if (!args.encoders_csv.empty()) {
        std::vector<vrag::EncoderConfig> subset;
        std::string csv = args.encoders_csv;
        std::size_t start = 0;
        while (start <= csv.size()) {
            std::size_t comma = csv.find(',', start);
            std::string id = csv.substr(
                start, comma == std::string::npos ? std::string::npos
                                                  : comma - start);
            if (!id.empty()) {
                auto found = std::find_if(
                    config.encoders.begin(), config.encoders.end(),
                    [&](const auto& enc) { return enc.encoder_id == id; });
                if (found == config.encoders.end()) {
                    throw vrag::ConfigError("--encoders: unknown encoder \"" + id +
                                            "\"");
                }
                subset.push_back(*found);
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (subset.empty()) {
            throw vrag::ConfigError("--encoders selected no encoders");
        }
        config.encoders = std::move(subset);
    }

    vrag::apply_env_overrides(config);
    config.validate();
    return config;
}

vrag::BenchmarkOptions benchmark_options(const vrag::PipelineConfig& config) {
    vrag::BenchmarkOptions options;
    options.pipeline.m = config.m;
    options.pipeline.k = config.k;
    options.pipeline.filter_enabled = config.filter_enabled;
    options.pipeline.parallelism = config.parallelism;
    return options;
}

void write_snapshot(const vrag::PipelineConfig& config, const fs::path& out_dir,
                    const json& extra) {
    json snapshot = config.snapshot();
    for (const auto& [key, value] : extra.items()) snapshot[key] = value;
    vrag::write_file_atomic(out_dir / "config_snapshot.json",
                            snapshot.dump(2) + "\n");
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void print_recall_header() {
    std::printf("%-32s %8s %8s %8s\n", "", "R@1", "R@3", "R@5");
}

void print_recall_row(const std::string& label,
                      const std::map<std::string, double>& agg,
                      const char* prefix = "recall@") {
    auto pct = [&](const std::string& key) -> std::string {
        auto it = agg.find(key);
        if (it == agg.end()) return "-";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", it->second * 100.0);
        return buf;
    };
    std::printf("%-32s %8s %8s %8s\n", label.c_str(),
                pct(std::string(prefix) + "1").c_str(),
                pct(std::string(prefix) + "3").c_str(),
                pct(std::string(prefix) + "5").c_str());
}

std::string rankings_dump(const std::vector<vrag::ScoredRanking>& rankings) {
    std::string out;
    for (const auto& r : rankings) out += vrag::ranking_to_ndjson(r);
    return out;
}

void attach_ocr_if_given(vrag::Corpus& corpus, const std::string& ocr_dir) {
    if (ocr_dir.empty()) return;
    for (auto& haystack : corpus.haystacks) {
        vrag::OcrAttachResult result = vrag::attach_ocr(haystack, ocr_dir);
        for (const auto& [doc_id, err] : result.errors) {
            std::cerr << "warning: OCR for \"" << doc_id << "\": " << err << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// embed
// ---------------------------------------------------------------------------

int cmd_embed(const CommonArgs& args) {
    vrag::PipelineConfig config = effective_config(args);
    if (config.cache_dir.empty()) {
        throw vrag::ConfigError("embed: a cache directory is required "
                                "(--cache-dir or config cache_dir)");
    }
    vrag::Corpus corpus = vrag::load_manifest(args.manifest);
    vrag::BenchmarkServices services = vrag::build_services(config);
    vrag::CacheDirectory caches{fs::path(config.cache_dir)};

    bool failed = false;
    for (const auto& encoder : services.encoders) {
        std::size_t fetched = 0, cached = 0;
        std::vector<std::string> failures;
        for (auto& haystack : corpus.haystacks) {
            auto& cache = caches.for_haystack(haystack.name());
            vrag::HaystackEmbeddings docs = vrag::embed_haystack(
                *encoder, haystack, cache.docs, config.parallelism);
            fetched += docs.fetched;
            cached += docs.served_from_cache;
            for (const auto& [doc_id, err] : docs.failures) {
                failures.push_back(doc_id + " (" + err + ")");
            }
            for (const auto* question : corpus.questions_for(haystack.name())) {
                try {
                    bool hit = cache.questions.contains(encoder->encoder_id(),
                                                        question->id);
                    vrag::embed_text_cached(*encoder, cache.questions,
                                            question->text, question->id);
                    hit ? ++cached : ++fetched;
                } catch (const vrag::Error& e) {
                    failures.push_back(question->id + " (" + e.what() + ")");
                }
            }
        }
        std::printf("encoder %-16s %zu written, %zu cached\n",
                    encoder->encoder_id().c_str(), fetched, cached);
        if (!failures.empty()) {
            failed = true;
            std::cerr << "encoder " << encoder->encoder_id() << " failed on:";
            for (const auto& f : failures) std::cerr << " " << f;
            std::cerr << "\n";
        }
    }
    return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// retrieve
// ---------------------------------------------------------------------------

struct RetrieveArgs {
    CommonArgs common;
    std::string ocr_dir;
    bool no_fusion = false;
    bool bm25 = false;
    bool post_filter = false;
    double k1 = 1.2;
    double b = 0.75;
};

int finish_retrieval_run(const vrag::BenchmarkOutput& output,
                         const std::string& label, const fs::path& out_dir,
                         const std::string& suffix) {
    print_warnings(output.warnings);
    if (!out_dir.empty()) {
        vrag::write_file_atomic(out_dir / ("rankings" + suffix + ".ndjson"),
                                rankings_dump(output.rankings));
        vrag::write_report(output.report, out_dir / ("report" + suffix + ".json"));
    }
    print_recall_row(label, output.report.aggregates);
    auto failed = output.report.aggregates.find("failed_questions");
    return (failed != output.report.aggregates.end() && failed->second > 0) ? 1 : 0;
}

int cmd_retrieve(const RetrieveArgs& args) {
    vrag::PipelineConfig config = effective_config(args.common);
    vrag::Corpus corpus = vrag::load_manifest(args.common.manifest);
    fs::path out_dir = args.common.out_dir;

    print_recall_header();
    int exit_code = 0;

    if (args.bm25) {
        attach_ocr_if_given(corpus, args.ocr_dir);
        json snapshot = config.snapshot();
        snapshot["mode"] = "bm25";
        snapshot["k1"] = args.k1;
        snapshot["b"] = args.b;
        vrag::BenchmarkOutput output =
            vrag::run_bm25_benchmark(corpus, args.k1, args.b, snapshot);
        exit_code = finish_retrieval_run(output, "bm25", out_dir, "_bm25");
    } else {
        vrag::BenchmarkServices services = vrag::build_services(config);
        vrag::CacheDirectory caches{fs::path(config.cache_dir)};
        vrag::BenchmarkOptions options = benchmark_options(config);
        options.answer = false;
        options.post_filter_recall = args.post_filter;

        if (args.no_fusion) {
            for (const auto& encoder : services.encoders) {
                vrag::BenchmarkServices single = services;
                single.encoders = {encoder};
                json snapshot = config.snapshot();
                snapshot["mode"] = "single_encoder";
                snapshot["encoder"] = encoder->encoder_id();
                vrag::BenchmarkOutput output = vrag::run_benchmark(
                    single, options, corpus, caches, snapshot);
                int rc = finish_retrieval_run(
                    output, encoder->encoder_id(), out_dir,
                    "_" + vrag::sanitize_filename(encoder->encoder_id()));
                if (rc != 0) exit_code = rc;
            }
        } else {
            json snapshot = config.snapshot();
            snapshot["mode"] = "fused";
            vrag::BenchmarkOutput output =
                vrag::run_benchmark(services, options, corpus, caches, snapshot);
            exit_code = finish_retrieval_run(output, "fused", out_dir, "");
            if (args.post_filter) {
                print_recall_row("fused+filter", output.report.aggregates,
                                 "post_filter_recall@");
            }
        }
    }

    if (!out_dir.empty()) write_snapshot(config, out_dir, json::object());
    return exit_code;
}

// ---------------------------------------------------------------------------
// answer
// ---------------------------------------------------------------------------

struct AnswerArgs {
    CommonArgs common;
    bool llm_judge = false;
};

std::string answers_dump(const vrag::RunReport& report) {
    std::string out;
    for (const auto& row : report.per_question) {
        if (!row.has_answer) continue;
        json j = json::object();
        j["question_id"] = row.question_id;
        j["answer"] = row.predicted;
        j["context_doc_ids"] = row.context_doc_ids;
        j["used_fallback"] = row.used_fallback;
        out += j.dump();
        out += "\n";
    }
    return out;
}

int cmd_answer(const AnswerArgs& args) {
    vrag::PipelineConfig config = effective_config(args.common);
    vrag::Corpus corpus = vrag::load_manifest(args.common.manifest);
    if (args.common.out_dir.empty()) {
        throw vrag::ConfigError("answer: --out directory is required");
    }
    fs::path out_dir = args.common.out_dir;

    vrag::BenchmarkServices services = vrag::build_services(config);
    vrag::CacheDirectory caches{fs::path(config.cache_dir)};
    vrag::BenchmarkOptions options = benchmark_options(config);
    options.eval_llm_judge = args.llm_judge;
    options.post_filter_recall = config.filter_enabled;

    json snapshot = config.snapshot();
    snapshot["mode"] = "answer";
    vrag::BenchmarkOutput output =
        vrag::run_benchmark(services, options, corpus, caches, snapshot);
    print_warnings(output.warnings);

    vrag::write_file_atomic(out_dir / "answers.ndjson", answers_dump(output.report));
    vrag::write_report(output.report, out_dir / "report.json");
    for (const auto& trace : output.traces) {
        vrag::write_file_atomic(
            out_dir / "traces" /
                (vrag::sanitize_filename(trace.question_id) + ".ndjson"),
            vrag::trace_to_ndjson(trace));
    }
    write_snapshot(config, out_dir, json{{"mode", "answer"}});

    print_recall_header();
    print_recall_row("fused", output.report.aggregates);
    for (const char* key : {"exact_match", "anls", "llm_judge"}) {
        auto it = output.report.aggregates.find(key);
        if (it != output.report.aggregates.end()) {
            std::printf("%-32s %8.2f\n", key, it->second * 100.0);
        }
    }
    auto failed = output.report.aggregates.find("failed_questions");
    return (failed != output.report.aggregates.end() && failed->second > 0) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    CommonArgs common;
    std::string answers_path;
    std::string metric = "all";
};

int cmd_eval(const EvalArgs& args) {
    vrag::PipelineConfig config = effective_config(args.common);
    vrag::Corpus corpus = vrag::load_manifest(args.common.manifest);
    if (args.metric != "all" && args.metric != "exact_match" &&
        args.metric != "anls" && args.metric != "llm_judge") {
        throw vrag::ConfigError(
            "eval: --metric must be all, exact_match, anls or llm_judge");
    }

    std::map<std::string, std::string> answers;
    vrag::for_each_ndjson(args.answers_path, [&](std::size_t line_no,
                                                 const json& j) {
        if (!j.contains("question_id") || !j["question_id"].is_string() ||
            !j.contains("answer") || !j["answer"].is_string()) {
            throw vrag::ParseError(args.answers_path + ":" +
                                   std::to_string(line_no) +
                                   ": expected {\"question_id\", \"answer\"}");
        }
        answers[j["question_id"].get<std::string>()] =
            j["answer"].get<std::string>();
    });

    vrag::BenchmarkServices services = vrag::build_services(config);
    vrag::BenchmarkOptions options = benchmark_options(config);
    options.eval_exact_match = args.metric == "all" || args.metric == "exact_match";
    options.eval_anls = args.metric == "all" || args.metric == "anls";
    options.eval_llm_judge = args.metric == "all" || args.metric == "llm_judge";

    json snapshot = config.snapshot();
    snapshot["mode"] = "eval";
    snapshot["metric"] = args.metric;
    vrag::BenchmarkOutput output =
        vrag::evaluate_answers(services, options, corpus, answers, snapshot);
    print_warnings(output.warnings);

    if (!args.common.out_dir.empty()) {
        fs::path out_dir = args.common.out_dir;
        vrag::write_report(output.report, out_dir / "report.json");
        write_snapshot(config, out_dir, json{{"mode", "eval"}});
    }
    for (const char* key : {"exact_match", "anls", "anls_mean_score", "llm_judge"}) {
        auto it = output.report.aggregates.find(key);
        if (it != output.report.aggregates.end()) {
            std::printf("%-32s %8.2f\n", key, it->second * 100.0);
        }
    }
    auto failed = output.report.aggregates.find("failed_questions");
    return (failed != output.report.aggregates.end() && failed->second > 0) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
    CommonArgs common;
    std::string grid_path;
    std::string sweep_k = "1,3,5";
    bool sweep_filter = false;
    bool sweep_encoders = false;
};

std::vector<std::size_t> parse_k_list(const std::string& csv) {
    std::vector<std::size_t> ks;
    std::size_t start = 0;
    while (start <= csv.size()) {
        std::size_t comma = csv.find(',', start);
        std::string tok = csv.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) {
            try {
                std::size_t pos = 0;
                unsigned long v = std::stoul(tok, &pos);
                if (pos != tok.size() || v == 0) throw std::invalid_argument(tok);
                ks.push_back(v);
            } catch (const std::exception&) {
                throw vrag::ConfigError("--sweep-k: bad value \"" + tok + "\"");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (ks.empty()) throw vrag::ConfigError("--sweep-k selected no values");
    return ks;
}

std::vector<vrag::AblationConfig> build_grid(const AblateArgs& args,
                                             const vrag::PipelineConfig& config) {
    std::vector<vrag::AblationConfig> grid;
    if (!args.grid_path.empty()) {
        json doc;
        try {
            doc = json::parse(vrag::read_file(args.grid_path));
        } catch (const json::exception& e) {
            throw vrag::ParseError(args.grid_path + ": " + e.what());
        }
        if (!doc.is_array()) {
            throw vrag::ParseError(args.grid_path + ": grid must be a JSON array");
        }
        for (const auto& j : doc) {
            vrag::AblationConfig cell;
            cell.filter_enabled = j.value("filter_enabled", config.filter_enabled);
            cell.k = j.value("k", config.k);
            cell.encoder_ids =
                j.value("encoders", std::vector<std::string>{});
            std::string enc_label = cell.encoder_ids.empty()
                                        ? std::string("all")
                                        : cell.encoder_ids.front();
            for (std::size_t i = 1; i < cell.encoder_ids.size(); ++i) {
                enc_label += "+" + cell.encoder_ids[i];
            }
            cell.label = j.value(
                "label", "enc=" + enc_label +
                             ",filter=" + (cell.filter_enabled ? "on" : "off") +
                             ",k=" + std::to_string(cell.k));
            grid.push_back(std::move(cell));
        }
        if (grid.empty()) {
            throw vrag::ConfigError(args.grid_path + ": grid is empty");
        }
        return grid;
    }

    std::vector<std::vector<std::string>> encoder_sets;
    if (args.sweep_encoders) {
        for (const auto& enc : config.encoders) {
            encoder_sets.push_back({enc.encoder_id});
        }
        if (config.encoders.size() > 1) encoder_sets.push_back({});
    } else {
        encoder_sets.push_back({});
    }
    std::vector<bool> filters;
    if (args.sweep_filter) {
        filters = {false, true};
    } else {
        filters = {config.filter_enabled};
    }
    std::vector<std::size_t> ks = parse_k_list(args.sweep_k);

    for (const auto& encoders : encoder_sets) {
        for (bool filter : filters) {
            for (std::size_t k : ks) {
                vrag::AblationConfig cell;
                cell.encoder_ids = encoders;
                cell.filter_enabled = filter;
                cell.k = k;
                cell.label = "enc=" +
                             (encoders.empty() ? std::string("all")
                                               : encoders.front()) +
                             ",filter=" + (filter ? "on" : "off") +
                             ",k=" + std::to_string(k);
                grid.push_back(std::move(cell));
            }
        }
    }
    return grid;
}

int cmd_ablate(const AblateArgs& args) {
    vrag::PipelineConfig config = effective_config(args.common);
    vrag::Corpus corpus = vrag::load_manifest(args.common.manifest);
    if (args.common.out_dir.empty()) {
        throw vrag::ConfigError("ablate: --out directory is required");
    }
    fs::path out_dir = args.common.out_dir;

    vrag::BenchmarkServices services = vrag::build_services(config);
    vrag::CacheDirectory caches{fs::path(config.cache_dir)};
    vrag::BenchmarkOptions base = benchmark_options(config);

    std::vector<vrag::AblationConfig> grid = build_grid(args, config);
    for (const auto& cell : grid) {
        if (cell.k > config.m) {
            throw vrag::ConfigError("ablate: cell \"" + cell.label +
                                    "\" has k > m");
        }
    }

    vrag::AblationOutput output = vrag::run_ablation(
        services, base, grid, corpus, caches, config.snapshot());
    print_warnings(output.warnings);

    bool any_failed = false;
    std::printf("%-32s %8s %8s %8s %8s %8s\n", "", "R@1", "R@3", "R@5", "EM",
                "ANLS");
    for (const auto& report : output.reports) {
        const std::string label = report.config.value("label", std::string("?"));
        vrag::write_report(report,
                           out_dir / ("report_" + vrag::sanitize_filename(label) +
                                      ".json"));
        if (report.config.contains("error")) {
            any_failed = true;
            std::printf("%-32s failed: %s\n", label.c_str(),
                        report.config["error"].get<std::string>().c_str());
            continue;
        }
        auto pct = [&](const char* key) -> std::string {
            auto it = report.aggregates.find(key);
            if (it == report.aggregates.end()) return "-";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.2f", it->second * 100.0);
            return buf;
        };
        std::printf("%-32s %8s %8s %8s %8s %8s\n", label.c_str(),
                    pct("recall@1").c_str(), pct("recall@3").c_str(),
                    pct("recall@5").c_str(), pct("exact_match").c_str(),
                    pct("anls").c_str());
        auto failed = report.aggregates.find("failed_questions");
        if (failed != report.aggregates.end() && failed->second > 0) {
            any_failed = true;
        }
    }
    write_snapshot(config, out_dir, json{{"mode", "ablate"}});
    return any_failed ? 1 : 0;
}

// ---------------------------------------------------------------------------
// curate
// ---------------------------------------------------------------------------

struct CurateArgs {
    CommonArgs common;
    std::string identifiers_path;
    std::string decisions_path;
    std::string ocr_dir;
};

int cmd_curate(const CurateArgs& args) {
    vrag::PipelineConfig config = effective_config(args.common);
    vrag::Corpus corpus = vrag::load_manifest(args.common.manifest);
    if (args.common.out_dir.empty()) {
        throw vrag::ConfigError("curate: --out directory is required");
    }
    fs::path out_dir = args.common.out_dir;
    attach_ocr_if_given(corpus, args.ocr_dir);

    std::map<std::string, std::vector<std::string>> identifiers;
    if (!args.identifiers_path.empty()) {
        identifiers = vrag::load_identifiers(args.identifiers_path);
    }
    std::map<std::string, vrag::Decision> decisions;
    if (!args.decisions_path.empty()) {
        decisions = vrag::load_decisions(args.decisions_path);
    }

    vrag::BenchmarkServices services = vrag::build_services(config);
    vrag::CurationServices curation =
        vrag::build_curation_services(config, services);

    vrag::CurationResult result = vrag::run_curation(
        corpus, curation, identifiers, decisions, config.parallelism);

    vrag::Corpus kept = corpus;
    kept.questions = result.kept;
    vrag::write_file_atomic(out_dir / "kept_manifest.ndjson",
                            vrag::to_manifest(kept));
    vrag::write_file_atomic(out_dir / "worklist.ndjson",
                            vrag::worklist_to_ndjson(result));
    std::string records;
    for (const auto& record : result.records) {
        records += vrag::record_to_ndjson_line(record);
        records += "\n";
    }
    vrag::write_file_atomic(out_dir / "records.ndjson", records);
    write_snapshot(config, out_dir, json{{"mode", "curate"}});

    std::printf("curated %zu questions: %zu kept, %zu removed, %zu on the "
                "worklist\n",
                result.records.size(), result.kept_count(),
                result.removed_count(), result.worklist_count());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented visual-document QA engine"};
    app.require_subcommand(1);

    CommonArgs embed_args;
    CLI::App* embed = app.add_subcommand("embed", "populate the embedding caches");
    add_common_flags(embed, embed_args, true);

    RetrieveArgs retrieve_args;
    CLI::App* retrieve =
        app.add_subcommand("retrieve", "rank documents and report recall");
    add_common_flags(retrieve, retrieve_args.common, true);
    retrieve->add_option("--out", retrieve_args.common.out_dir,
                         "output directory for rankings and reports");
    retrieve->add_option("--ocr-dir", retrieve_args.ocr_dir,
                         "sidecar OCR directory (bm25)");
    retrieve->add_flag("--no-fusion", retrieve_args.no_fusion,
                       "rank with each encoder separately");
    retrieve->add_flag("--bm25", retrieve_args.bm25, "BM25 over OCR text");
    retrieve->add_flag("--post-filter-recall", retrieve_args.post_filter,
                       "also report recall after the relevance filter");
    retrieve->add_option("--k1", retrieve_args.k1, "BM25 k1")
        ->check(CLI::PositiveNumber);
    retrieve->add_option("--b", retrieve_args.b, "BM25 b")
        ->check(CLI::Range(0.0, 1.0));

    AnswerArgs answer_args;
    CLI::App* answer = app.add_subcommand("answer", "run the full QA pipeline");
    add_common_flags(answer, answer_args.common, true);
    answer->add_option("--out", answer_args.common.out_dir, "output directory")
        ->required();
    answer->add_flag("--llm-judge", answer_args.llm_judge,
                     "also score answers with the judge model");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "score precomputed answers");
    add_common_flags(eval, eval_args.common, true);
    eval->add_option("--answers", eval_args.answers_path,
                     "answers ndjson from a previous run")
        ->required();
    eval->add_option("--metric", eval_args.metric,
                     "all | exact_match | anls | llm_judge");
    eval->add_option("--out", eval_args.common.out_dir, "output directory");

    AblateArgs ablate_args;
    CLI::App* ablate = app.add_subcommand("ablate", "run an ablation grid");
    add_common_flags(ablate, ablate_args.common, true);
    ablate->add_option("--out", ablate_args.common.out_dir, "output directory")
        ->required();
    ablate->add_option("--grid", ablate_args.grid_path,
                       "JSON grid file (list of cells)");
    ablate->add_option("--sweep-k", ablate_args.sweep_k,
                       "comma-separated k values");
    ablate->add_flag("--sweep-filter", ablate_args.sweep_filter,
                     "sweep the filter on and off");
    ablate->add_flag("--sweep-encoders", ablate_args.sweep_encoders,
                     "sweep each encoder alone plus the full ensemble");

    CurateArgs curate_args;
    CLI::App* curate =
        app.add_subcommand("curate", "run the question-curation pipeline");
    add_common_flags(curate, curate_args.common, true);
    curate->add_option("--out", curate_args.common.out_dir, "output directory")
        ->required();
    curate->add_option("--identifiers", curate_args.identifiers_path,
                       "per-question identifiers ndjson");
    curate->add_option("--decisions", curate_args.decisions_path,
                       "manual decisions ndjson");
    curate->add_option("--ocr-dir", curate_args.ocr_dir,
                       "sidecar OCR directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (embed->parsed()) return cmd_embed(embed_args);
        if (retrieve->parsed()) return cmd_retrieve(retrieve_args);
        if (answer->parsed()) return cmd_answer(answer_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (ablate->parsed()) return cmd_ablate(ablate_args);
        if (curate->parsed()) return cmd_curate(curate_args);
    } catch (const vrag::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const vrag::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const vrag::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
