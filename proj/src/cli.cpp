#include "coret/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coret/callgraph.hpp"
#include "coret/chunker.hpp"
#include "coret/error.hpp"
#include "coret/evaldata.hpp"
#include "coret/lexical.hpp"
#include "coret/metrics.hpp"
#include "coret/provider.hpp"
#include "coret/retriever.hpp"
#include "coret/training.hpp"

#ifndef CORET_VERSION
#define CORET_VERSION "0.0.0"
#endif

namespace coret::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

// Content digest of a file, or of every regular file below a directory.
std::string digest(const fs::path& p) {
    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(p))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::uint64_t h = fnv1a64("");
        for (const auto& f : files) {
            h = fnv1a64(fs::relative(f, p).generic_string(), h);
            h = fnv1a64(read_bytes(f), h);
        }
        return "fnv1a64:" + hex64(h);
    }
    return "fnv1a64:" + hex64(fnv1a64(read_bytes(p)));
}

void make_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::ofstream open_out(const fs::path& p) {
    make_parent(p);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

// Per-invocation state shared by the handlers.
struct Run {
    std::vector<std::string> argv;
    std::uint64_t seed = kDefaultSeed;
    std::map<std::string, std::string> inputs;  // path -> digest
    std::vector<std::string> outputs;
    json extra = json::object();
    std::string started;

    void input(const fs::path& p) {
        if (!p.empty() && p != "none") inputs[p.generic_string()] = digest(p);
    }
};

json option_snapshot(const CLI::App& sub) {
    json cfg = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        std::string name = opt->get_name(false, true);
        if (name.empty() || name == "--help" || name == "-h") continue;
        if (name.rfind("--", 0) == 0) name = name.substr(2);
        auto res = opt->reduced_results();
        bool flag = opt->get_expected_max() == 0 || opt->get_type_size() == 0;
        if (flag) {
            cfg[name] = opt->count() > 0;
        } else if (opt->count() == 0) {
            cfg[name] = opt->get_default_str().empty() ? json(nullptr) : json(opt->get_default_str());
        } else {
            cfg[name] = res.size() == 1 ? json(res.front()) : json(res);
        }
    }
    return cfg;
}

void write_manifest(const Run& run, const CLI::App& sub, const fs::path& out) {
    json m;
    m["tool"] = "coret";
    m["version"] = CORET_VERSION;
    m["command_line"] = run.argv;
    m["subcommand"] = sub.get_name();
    m["config"] = option_snapshot(sub);
    m["seed"] = run.seed;
    m["inputs"] = run.inputs;
    m["outputs"] = run.outputs;
    if (!run.extra.empty()) m["details"] = run.extra;
    m["started_at"] = run.started;
    m["finished_at"] = utc_now();
    auto path = out;
    path += ".manifest.json";
    auto f = open_out(path);
    f << m.dump(2) << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string item; std::getline(in, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

ChunkSet load_chunks(Run& run, const fs::path& p) {
    run.input(p);
    auto imports = imports_path(p);
    if (fs::exists(imports)) run.input(imports);
    return load_chunk_set(p);
}

// Prepared directory or raw instance file.
std::vector<TrainingInstance> load_dataset(Run& run, const fs::path& p, const ChunkerConfig& cfg, std::ostream& err) {
    run.input(p);
    if (fs::is_directory(p)) return load_prepared(p);
    auto raw = load_raw_instances(p);
    for (const auto& r : raw)
        if (fs::is_directory(r.repo_root)) run.input(r.repo_root);
    BuildReport report;
    auto data = build_instances(raw, cfg, &report);
    for (const auto& d : report.discarded) err << "discarded " << d.instance_id << ": " << d.reason << '\n';
    for (const auto& f : report.failed) err << "failed " << f.instance_id << ": " << f.reason << '\n';
    return data;
}

json ranking_json(const RankedRetrieval& r) {
    json out = json::array();
    for (std::size_t i = 0; i < r.ranked.size(); ++i)
        out.push_back({{"rank", i + 1}, {"chunk_id", r.ranked[i].chunk_id}, {"score", r.ranked[i].score}});
    return out;
}

void write_ranking(const RankedRetrieval& r, std::ostream& out) {
    for (const auto& row : ranking_json(r)) out << row.dump() << '\n';
}

ContextMap contexts_for(const ChunkSet& set, const CallGraph& graph, std::size_t budget, Direction dir) {
    ContextMap out;
    for (const auto& c : set.chunks) out.emplace(c.chunk_id, assemble_context(c, graph, set, budget, dir));
    return out;
}

ChunkSet without_paths(ChunkSet set) {
    for (auto& c : set.chunks) c.rendered_text = render_chunk(c, false);
    return set;
}

}  // namespace

std::unique_ptr<Embedder> make_embedder(const std::string& spec, std::uint64_t seed) {
    if (spec == "toy") return std::make_unique<ToyEmbedder>(ToyEmbedderParams::initialize(kDefaultVocabSize, kDefaultEmbeddingDim, seed));
    if (spec.rfind("toy:", 0) == 0) return std::make_unique<ToyEmbedder>(load_params(spec.substr(4)));
    if (spec.rfind("provider:", 0) == 0) return std::make_unique<ProviderEmbedder>(provider_handshake(spec.substr(9)));
    throw CLI::ValidationError("--embedder", "expected toy, toy:<params-file> or provider:<URL>, got " + spec);
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Repository retrieval toolkit: chunking, call graphs, dense and BM25 retrieval, evaluation, toy training",
                 "coret"};
    app.set_version_flag("--version", std::string(CORET_VERSION));
    app.require_subcommand(1);

    Run run;
    for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
    run.started = utc_now();

    auto seed_opt = [&](CLI::App* sub) {
        sub->add_option("--seed", run.seed, "RNG seed")->capture_default_str();
    };

    // chunk
    struct {
        std::string repo, out, repo_id, include, exclude;
        bool no_path = false;
    } chunk;
    auto* c_chunk = app.add_subcommand("chunk", "Split a repository into chunks (JSON lines)");
    c_chunk->add_option("--repo", chunk.repo, "Repository root")->required();
    c_chunk->add_option("--out", chunk.out, "Chunk store to write")->required();
    c_chunk->add_option("--repo-id", chunk.repo_id, "Repository id (default: directory name)");
    c_chunk->add_option("--include-globs", chunk.include, "Comma-separated globs to keep");
    c_chunk->add_option("--exclude-globs", chunk.exclude, "Comma-separated globs to drop (replaces the defaults)");
    c_chunk->add_flag("--no-path-prefix", chunk.no_path, "Do not prefix rendered text with the file path");
    seed_opt(c_chunk);

    // graph
    struct {
        std::string chunks, out;
    } graph;
    auto* c_graph = app.add_subcommand("graph", "Build the call graph of a chunk store");
    c_graph->add_option("--chunks", graph.chunks, "Chunk store")->required();
    c_graph->add_option("--out", graph.out, "Graph file to write")->required();
    seed_opt(c_graph);

    // context
    struct {
        std::string chunks, graph, out, chunk_id, direction = "down";
        std::size_t budget = kDefaultContextBudget;
    } context;
    auto* c_context = app.add_subcommand("context", "Assemble call-graph contexts");
    c_context->add_option("--chunks", context.chunks, "Chunk store")->required();
    c_context->add_option("--graph", context.graph, "Graph file")->required();
    c_context->add_option("--budget", context.budget, "Character budget per context")->capture_default_str();
    c_context->add_option("--direction", context.direction, "down, up or both")->capture_default_str();
    c_context->add_option("--chunk-id", context.chunk_id, "Only this chunk");
    c_context->add_option("--out", context.out, "Output file (default: stdout)");
    seed_opt(c_context);

    // index
    struct {
        std::string chunks, graph, embedder = "toy", out;
        std::size_t budget = kDefaultContextBudget;
        bool no_path = false;
    } index;
    auto* c_index = app.add_subcommand("index", "Embed every chunk into an index file");
    c_index->add_option("--chunks", index.chunks, "Chunk store")->required();
    c_index->add_option("--graph", index.graph, "Graph file; embeds call-graph contexts when given");
    c_index->add_option("--budget", index.budget, "Context budget")->capture_default_str();
    c_index->add_option("--embedder", index.embedder, "toy | toy:<params> | provider:<URL>")->capture_default_str();
    c_index->add_flag("--no-path-prefix", index.no_path, "Strip file paths from chunk text before embedding");
    c_index->add_option("--out", index.out, "Index file to write")->required();
    seed_opt(c_index);

    // query
    struct {
        std::string index, bm25, q, embedder = "toy", out;
        std::size_t k = 20;
    } query;
    auto* c_query = app.add_subcommand("query", "Retrieve the top-k chunks for a query");
    c_query->add_option("--index", query.index, "Index file, or none with --bm25")->required();
    c_query->add_option("--bm25", query.bm25, "Chunk store to rank lexically");
    c_query->add_option("--q", query.q, "Query text")->required();
    c_query->add_option("--k", query.k, "Number of results")->capture_default_str()->check(CLI::PositiveNumber);
    c_query->add_option("--embedder", query.embedder, "Embedder that built the index")->capture_default_str();
    c_query->add_option("--out", query.out, "Output file (default: stdout)");
    seed_opt(c_query);

    // eval
    struct {
        std::string data, index_glob, embedder = "toy", out, ks = "5,20", metrics = "recall,mrr,perfect",
                                      levels = "chunk,file";
        bool no_path = false, bm25 = false, use_context = false;
        std::size_t budget = kDefaultContextBudget;
    } eval;
    auto* c_eval = app.add_subcommand("eval", "Evaluate retrieval over a prepared dataset");
    c_eval->add_option("--data", eval.data, "Prepared directory")->required();
    c_eval->add_option("--index-glob", eval.index_glob,
                       "Index path pattern; '*' is replaced by the repo id (default: index in memory)");
    c_eval->add_option("--embedder", eval.embedder, "Query embedder (and index embedder when in memory)")
        ->capture_default_str();
    c_eval->add_flag("--bm25", eval.bm25, "Rank with BM25 instead of embeddings");
    c_eval->add_flag("--use-context", eval.use_context, "Embed call-graph contexts when indexing in memory");
    c_eval->add_option("--budget", eval.budget, "Context budget")->capture_default_str();
    c_eval->add_option("--ks", eval.ks, "Comma-separated cut-offs")->capture_default_str();
    c_eval->add_option("--metrics", eval.metrics, "recall,mrr,perfect")->capture_default_str();
    c_eval->add_option("--level", eval.levels, "chunk,file")->capture_default_str();
    c_eval->add_flag("--no-path-prefix", eval.no_path, "Evaluate chunk text without file paths");
    c_eval->add_option("--out", eval.out, "CSV file (default: stdout)");
    seed_opt(c_eval);

    // stats
    struct {
        std::string data, out;
    } stats;
    auto* c_stats = app.add_subcommand("stats", "Dataset statistics as JSON");
    c_stats->add_option("--data", stats.data, "Instance file or prepared directory")->required();
    c_stats->add_option("--out", stats.out, "Output file (default: stdout)");
    seed_opt(c_stats);

    // ingest
    struct {
        std::string data, out;
    } ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Chunk repositories and map patches to ground truth");
    c_ingest->add_option("--data", ingest.data, "Instance file")->required();
    c_ingest->add_option("--out", ingest.out, "Prepared directory to write")->required();
    seed_opt(c_ingest);

    // train-toy
    struct {
        std::string data, config, out, history;
    } train;
    auto* c_train = app.add_subcommand("train-toy", "Train the toy embedder");
    c_train->add_option("--data", train.data, "Instance file or prepared directory")->required();
    c_train->add_option("--config", train.config, "key = value config file");
    c_train->add_option("--out", train.out, "Parameter file to write")->required();
    c_train->add_option("--history", train.history, "History CSV (default: <out>.history.csv)");
    seed_opt(c_train);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e, out, err);
        if (rc != 0 && dynamic_cast<const CLI::RequiredError*>(&e) && app.get_subcommands().empty())
            err << app.help();
        return rc == 0 ? kOk : kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        if (sub == c_chunk) {
            ChunkerConfig cfg;
            if (!chunk.include.empty()) cfg.include_globs = split_list(chunk.include);
            if (c_chunk->count("--exclude-globs")) cfg.exclude_globs = split_list(chunk.exclude);
            cfg.include_path = !chunk.no_path;
            run.input(chunk.repo);
            auto set = chunk_repository(chunk.repo, cfg, chunk.repo_id);
            for (const auto& s : set.skipped_files) err << "skipped " << s.path << ": " << s.reason << '\n';
            make_parent(chunk.out);
            save_chunk_set(set, chunk.out);
            run.outputs = {chunk.out, imports_path(chunk.out).generic_string()};
            run.extra = {{"chunks", set.chunks.size()}, {"skipped_files", set.skipped_files.size()}};
            write_manifest(run, *sub, chunk.out);
        } else if (sub == c_graph) {
            auto set = load_chunks(run, graph.chunks);
            auto g = build_call_graph(set);
            make_parent(graph.out);
            save_graph(g, graph.out);
            run.outputs = {graph.out};
            run.extra = {{"edges", g.edge_count()},
                         {"call_sites", g.diagnostics.call_sites},
                         {"resolved_sites", g.diagnostics.resolved_sites},
                         {"unresolved_sites", g.diagnostics.unresolved_sites}};
            write_manifest(run, *sub, graph.out);
        } else if (sub == c_context) {
            auto set = load_chunks(run, context.chunks);
            run.input(context.graph);
            auto g = load_graph(context.graph, set);
            Direction dir = direction_from_string(context.direction);
            std::ostringstream buf;
            for (const auto& c : set.chunks) {
                if (!context.chunk_id.empty() && c.chunk_id != context.chunk_id) continue;
                auto ctx = assemble_context(c, g, set, context.budget, dir);
                json spans = json::array();
                for (const auto& s : ctx.segment_spans)
                    spans.push_back({s.begin, s.end, s.kind == SegmentKind::Base ? "base" : "neighbor"});
                buf << json{{"chunk_id", ctx.base_chunk_id},
                            {"context_text", ctx.context_text},
                            {"segment_spans", spans},
                            {"neighbor_ids", ctx.included_neighbor_ids}}
                           .dump()
                    << '\n';
            }
            if (!context.chunk_id.empty() && buf.str().empty()) throw DataError("unknown chunk id " + context.chunk_id);
            if (context.out.empty()) {
                out << buf.str();
            } else {
                open_out(context.out) << buf.str();
                run.outputs = {context.out};
                write_manifest(run, *sub, context.out);
            }
        } else if (sub == c_index) {
            auto set = load_chunks(run, index.chunks);
            if (index.no_path) set = without_paths(std::move(set));
            if (index.embedder.rfind("toy:", 0) == 0) run.input(index.embedder.substr(4));
            auto emb = make_embedder(index.embedder, run.seed);
            std::optional<ContextMap> ctx;
            if (!index.graph.empty()) {
                run.input(index.graph);
                auto g = load_graph(index.graph, set);
                ctx = contexts_for(set, g, index.budget, Direction::Downstream);
            }
            auto idx = build_index(set, ctx ? &*ctx : nullptr, *emb);
            for (const auto& x : idx.excluded) err << "excluded " << x.chunk_id << ": " << x.reason << '\n';
            make_parent(index.out);
            save_index(idx, index.out);
            run.outputs = {index.out};
            run.extra = {{"entries", idx.entries.size()}, {"excluded", idx.excluded.size()}, {"fingerprint", idx.fingerprint}};
            write_manifest(run, *sub, index.out);
        } else if (sub == c_query) {
            RankedRetrieval r;
            if (query.index == "none") {
                if (query.bm25.empty()) throw CLI::ValidationError("--index none", "needs --bm25 <chunks-file>");
                auto set = load_chunks(run, query.bm25);
                r = bm25_rank(bm25_build(set), query.q, query.k);
            } else {
                run.input(query.index);
                auto idx = load_index(query.index);
                auto emb = make_embedder(query.embedder, run.seed);
                if (emb->fingerprint() != idx.fingerprint)
                    throw DataError("index was built by " + idx.fingerprint + ", query embedder is " + emb->fingerprint());
                r = top_k(idx, emb->embed(query.q), query.k);
            }
            if (query.out.empty()) {
                write_ranking(r, out);
            } else {
                auto f = open_out(query.out);
                write_ranking(r, f);
                run.outputs = {query.out};
                write_manifest(run, *sub, query.out);
            }
        } else if (sub == c_eval) {
            EvalOptions opts;
            opts.ks.clear();
            for (const auto& k : split_list(eval.ks)) {
                std::size_t v = std::stoul(k);
                if (v == 0) throw CLI::ValidationError("--ks", "cut-offs must be positive");
                opts.ks.push_back(v);
            }
            opts.metrics.clear();
            for (const auto& m : split_list(eval.metrics)) opts.metrics.push_back(metric_from_string(m));
            opts.levels.clear();
            for (const auto& l : split_list(eval.levels)) opts.levels.push_back(level_from_string(l));

            auto data = load_dataset(run, eval.data, ChunkerConfig{}, err);
            std::unique_ptr<Embedder> emb;
            if (!eval.bm25) emb = make_embedder(eval.embedder, run.seed);
            if (eval.embedder.rfind("toy:", 0) == 0) run.input(eval.embedder.substr(4));

            // One ranking source per repository.
            std::map<const ChunkSet*, ChunkSet> texts;
            std::map<const ChunkSet*, Index> indices;
            std::map<const ChunkSet*, Bm25Stats> lexical;
            std::map<std::string, RankedRetrieval, std::less<>> rankings;
            std::vector<EvalInstance> instances;
            for (const auto& inst : data) {
                const ChunkSet* key = inst.chunks.get();
                if (!texts.count(key)) texts.emplace(key, eval.no_path ? without_paths(*inst.chunks) : *inst.chunks);
                const ChunkSet& set = texts.at(key);
                RankedRetrieval r;
                if (eval.bm25) {
                    if (!lexical.count(key)) lexical.emplace(key, bm25_build(set));
                    r = bm25_rank(lexical.at(key), inst.query_text, set.chunks.size());
                } else {
                    if (!indices.count(key)) {
                        Index idx;
                        if (!eval.index_glob.empty()) {
                            std::string p = eval.index_glob;
                            auto star = p.find('*');
                            if (star == std::string::npos) throw CLI::ValidationError("--index-glob", "needs a '*'");
                            p.replace(star, 1, set.repo_id);
                            run.input(p);
                            idx = load_index(p);
                            if (idx.fingerprint != emb->fingerprint())
                                throw DataError(p + " was built by " + idx.fingerprint + ", query embedder is " +
                                                emb->fingerprint());
                            if (idx.include_path == eval.no_path)
                                throw DataError(p + (idx.include_path ? " has" : " lacks") +
                                                " path prefixes; rebuild it or adjust --no-path-prefix");
                        } else {
                            std::optional<ContextMap> ctx;
                            if (eval.use_context) {
                                const CallGraph& g = inst.graph ? *inst.graph : build_call_graph(set);
                                ctx = contexts_for(set, g, eval.budget, Direction::Downstream);
                            }
                            idx = build_index(set, ctx ? &*ctx : nullptr, *emb);
                        }
                        indices.emplace(key, std::move(idx));
                    }
                    const Index& idx = indices.at(key);
                    r = top_k(idx, emb->embed(inst.query_text), std::max<std::size_t>(1, idx.entries.size()));
                }
                r.query_id = inst.instance_id;
                rankings.emplace(inst.instance_id, std::move(r));
                instances.push_back({inst.instance_id, inst.gt_ids, &set});
            }
            auto result = evaluate(instances, rankings, opts);
            if (eval.out.empty()) {
                write_eval_csv(result, out);
            } else {
                auto f = open_out(eval.out);
                write_eval_csv(result, f);
                run.outputs = {eval.out};
                run.extra = {{"instances", result.instance_count}};
                write_manifest(run, *sub, eval.out);
            }
        } else if (sub == c_stats) {
            auto data = load_dataset(run, stats.data, ChunkerConfig{}, err);
            std::string doc = stats_to_json(dataset_stats(data));
            if (stats.out.empty()) {
                out << doc << '\n';
            } else {
                open_out(stats.out) << doc << '\n';
                run.outputs = {stats.out};
                write_manifest(run, *sub, stats.out);
            }
        } else if (sub == c_ingest) {
            run.input(ingest.data);
            auto raw = load_raw_instances(ingest.data);
            for (const auto& r : raw)
                if (fs::is_directory(r.repo_root)) run.input(r.repo_root);
            BuildReport report;
            auto data = build_instances(raw, ChunkerConfig{}, &report);
            save_prepared(data, ingest.out);
            json rep = {{"kept", data.size()}, {"discarded", json::array()}, {"failed", json::array()},
                        {"warnings", report.warnings}};
            for (const auto& d : report.discarded) rep["discarded"].push_back({{"instance_id", d.instance_id}, {"reason", d.reason}});
            for (const auto& f : report.failed) rep["failed"].push_back({{"instance_id", f.instance_id}, {"reason", f.reason}});
            open_out(fs::path(ingest.out) / "report.json") << rep.dump(2) << '\n';
            err << "kept " << data.size() << ", discarded " << report.discarded.size() << ", failed "
                << report.failed.size() << '\n';
            run.outputs = {ingest.out};
            run.extra = rep;
            fs::path dir = fs::path(ingest.out).lexically_normal();
            if (dir.filename().empty()) dir = dir.parent_path();
            write_manifest(run, *sub, dir);
        } else if (sub == c_train) {
            TrainingConfig cfg;
            if (!train.config.empty()) {
                run.input(train.config);
                cfg = load_training_config(train.config);
            }
            // An explicit --seed wins over the config file.
            if (c_train->count("--seed")) cfg.rng_seed = run.seed;
            run.seed = cfg.rng_seed;
            auto data = load_dataset(run, train.data, ChunkerConfig{}, err);
            std::string history = train.history.empty() ? train.out + ".history.csv" : train.history;
            TrainResult result;
            int rc = kOk;
            try {
                result = train_toy(data, cfg);
            } catch (const TrainingDiverged& e) {
                err << "error: " << e.what() << "; writing the last good parameters\n";
                result = e.last_good();
                rc = kDataError;
            }
            make_parent(train.out);
            save_params(result.params, train.out);
            {
                auto f = open_out(history);
                write_history_csv(result.history, f);
            }
            run.outputs = {train.out, history};
            run.extra = {{"training", to_key_values(cfg)},
                         {"train_instances", result.train_ids.size()},
                         {"eval_instances", result.eval_ids.size()},
                         {"fingerprint", result.params.fingerprint()}};
            write_manifest(run, *sub, train.out);
            return rc;
        }
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << '\n' << sub->help();
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}

}  // namespace coret::cli
