#include "coret/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace coret {
namespace {

std::vector<std::size_t> gt_indices(const TrainingInstance& inst) {
    std::vector<std::size_t> out;
    for (const auto& id : inst.gt_ids) {
        auto idx = inst.chunks->index_of(id);
        if (!idx) throw DataError("instance " + inst.instance_id + " names unknown chunk " + id);
        out.push_back(*idx);
    }
    return out;
}

// Draws min(n, pool.size()) elements without replacement (partial shuffle).
std::vector<ChunkRef> draw(std::vector<ChunkRef> pool, std::size_t n, std::mt19937_64& rng) {
    n = std::min(n, pool.size());
    for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + uniform_below(rng, pool.size() - i)]);
    pool.resize(n);
    return pool;
}

double log_sum_exp(std::span<const double> xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Embeddings of the chunks touched in one step, with the gradient of the
// step loss with respect to each output vector.
class ChunkWork {
public:
    using BagFn = std::function<const TokenBag&(ChunkRef)>;

    ChunkWork(const ToyEmbedderParams& params, BagFn bag) : params_(params), bag_(std::move(bag)) {}

    const EmbeddingVector& embed(ChunkRef ref) {
        auto it = entries_.find(ref);
        if (it == entries_.end()) {
            Entry e{embed_bag(params_, bag_(ref)), std::vector<double>(params_.dim, 0.0)};
            it = entries_.emplace(ref, std::move(e)).first;
            order_.push_back(ref);
        }
        return it->second.trace.output;
    }

    void add_grad(ChunkRef ref, std::span<const double> g, double scale) {
        auto& acc = entries_.at(ref).grad_out;
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += scale * g[j];
    }

    void flush(ToyGradient& grad) {
        // First-use order, not address order, keeps the sums reproducible.
        for (ChunkRef ref : order_) {
            const Entry& e = entries_.at(ref);
            backprop_embedding(params_, bag_(ref), e.trace, e.grad_out, grad);
        }
    }

private:
    struct Entry {
        EmbeddingTrace trace;
        std::vector<double> grad_out;
    };
    const ToyEmbedderParams& params_;
    BagFn bag_;
    std::map<ChunkRef, Entry> entries_;
    std::vector<ChunkRef> order_;
};

// Scores one instance, adds weight * d(loss)/d(embedding) for the query
// (backpropagated immediately) and the chunks (accumulated in `work`).
SoftmaxTerms instance_terms(const ToyEmbedderParams& params, const TokenBag& query_bag,
                            std::span<const ChunkRef> positives, std::span<const ChunkRef> negatives, double tau,
                            double weight, ChunkWork& work, ToyGradient* grad) {
    EmbeddingTrace q = embed_bag(params, query_bag);
    std::vector<double> pos, neg;
    for (ChunkRef r : positives) pos.push_back(dot(q.output.values, work.embed(r).values));
    for (ChunkRef r : negatives) neg.push_back(dot(q.output.values, work.embed(r).values));
    SoftmaxTerms terms = sampled_softmax(pos, neg, tau);
    if (!grad) return terms;

    std::vector<double> gq(params.dim, 0.0);
    auto route = [&](ChunkRef r, double ds) {
        if (ds == 0.0) return;
        const auto& c = work.embed(r).values;
        for (std::size_t j = 0; j < params.dim; ++j) gq[j] += ds * c[j];
        work.add_grad(r, q.output.values, weight * ds);
    };
    for (std::size_t i = 0; i < positives.size(); ++i) route(positives[i], terms.d_pos[i]);
    for (std::size_t i = 0; i < negatives.size(); ++i) route(negatives[i], terms.d_neg[i]);
    for (double& x : gq) x *= weight;
    backprop_embedding(params, query_bag, q, gq, *grad);
    return terms;
}

std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error("not a boolean: " + v);
}

std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

// Per-repository inputs reused across steps.
struct Features {
    const TrainingConfig& cfg;
    std::map<const ChunkSet*, std::vector<TokenBag>> bags;
    std::map<const ChunkSet*, std::unique_ptr<Bm25Stats>> bm25;
    std::map<const TrainingInstance*, TokenBag> queries;
    std::map<const TrainingInstance*, std::vector<ChunkRef>> positives;

    explicit Features(const TrainingConfig& c) : cfg(c) {}

    void add(const TrainingInstance& inst) {
        const ChunkSet* set = inst.chunks.get();
        if (!bags.contains(set)) {
            std::vector<TokenBag> v;
            v.reserve(set->chunks.size());
            for (std::size_t i = 0; i < set->chunks.size(); ++i) {
                ChunkText t = training_text(inst, i, cfg.use_call_graph_context, cfg.context_budget);
                v.push_back(make_token_bag(t.text, t.spans, cfg.vocab_size, cfg.max_tokens));
            }
            bags.emplace(set, std::move(v));
            if (cfg.negative_source == NegativeSource::InInstancePlusBm25)
                bm25.emplace(set, std::make_unique<Bm25Stats>(bm25_build(*set, {}, cfg.vocab_size)));
        }
        queries.emplace(&inst, make_token_bag(inst.query_text, {}, cfg.vocab_size, cfg.max_tokens));
        std::vector<ChunkRef> pos;
        for (std::size_t idx : gt_indices(inst)) pos.push_back({set, idx});
        positives.emplace(&inst, std::move(pos));
    }

    const TokenBag& bag(ChunkRef r) const { return bags.at(r.set)[r.index]; }
    const Bm25Stats* bm25_for(const TrainingInstance& inst) const {
        auto it = bm25.find(inst.chunks.get());
        return it == bm25.end() ? nullptr : it->second.get();
    }
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    // splitmix64 over the combined words
    std::uint64_t x = a ^ (b * 0x9e3779b97f4a7c15ULL) ^ (c * 0xbf58476d1ce4e5b9ULL);
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool finite(const ToyGradient& g) { return std::isfinite(g.norm()); }

}  // namespace

std::string_view to_string(NegativeSource s) {
    switch (s) {
    case NegativeSource::InInstance: return "in_instance";
    case NegativeSource::AcrossInstance: return "across_instance";
    case NegativeSource::InInstancePlusBm25: return "in_instance_plus_bm25";
    }
    return "?";
}

NegativeSource negative_source_from_string(std::string_view text) {
    if (text == "in_instance") return NegativeSource::InInstance;
    if (text == "across_instance") return NegativeSource::AcrossInstance;
    if (text == "in_instance_plus_bm25") return NegativeSource::InInstancePlusBm25;
    throw Error("unknown negative source: " + std::string(text));
}

TrainingConfig parse_training_config(std::istream& in) {
    TrainingConfig cfg;
    std::string line;
    std::size_t ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(ln) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        try {
            if (key == "tau") cfg.tau = std::stod(v);
            else if (key == "num_negatives") cfg.num_negatives = std::stoull(v);
            else if (key == "negative_source") cfg.negative_source = negative_source_from_string(v);
            else if (key == "bm25_negatives") cfg.bm25_negatives = std::stoull(v);
            else if (key == "learning_rate") cfg.learning_rate = std::stod(v);
            else if (key == "epochs") cfg.epochs = std::stoull(v);
            else if (key == "batch_size") cfg.batch_size = std::stoull(v);
            else if (key == "rng_seed") cfg.rng_seed = std::stoull(v);
            else if (key == "use_call_graph_context") cfg.use_call_graph_context = parse_bool(v);
            else if (key == "context_budget") cfg.context_budget = std::stoull(v);
            else if (key == "vocab_size") cfg.vocab_size = static_cast<std::uint32_t>(std::stoul(v));
            else if (key == "dim") cfg.dim = static_cast<std::uint32_t>(std::stoul(v));
            else if (key == "max_tokens") cfg.max_tokens = std::stoull(v);
            else if (key == "eval_fraction") cfg.eval_fraction = std::stod(v);
            else if (key == "threads") cfg.threads = std::stoull(v);
            else throw Error("config line " + std::to_string(ln) + ": unknown key " + key);
        } catch (const std::invalid_argument&) {
            throw Error("config line " + std::to_string(ln) + ": bad value for " + key);
        } catch (const std::out_of_range&) {
            throw Error("config line " + std::to_string(ln) + ": value out of range for " + key);
        }
    }
    if (!(cfg.tau > 0.0)) throw Error("tau must be positive");
    if (cfg.batch_size == 0) throw Error("batch_size must be positive");
    if (cfg.eval_fraction < 0.0 || cfg.eval_fraction >= 1.0) throw Error("eval_fraction must be in [0, 1)");
    return cfg;
}

TrainingConfig load_training_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    return parse_training_config(in);
}

std::map<std::string, std::string> to_key_values(const TrainingConfig& cfg) {
    return {{"tau", format_double(cfg.tau)},
            {"num_negatives", std::to_string(cfg.num_negatives)},
            {"negative_source", std::string(to_string(cfg.negative_source))},
            {"bm25_negatives", std::to_string(cfg.bm25_negatives)},
            {"learning_rate", format_double(cfg.learning_rate)},
            {"epochs", std::to_string(cfg.epochs)},
            {"batch_size", std::to_string(cfg.batch_size)},
            {"rng_seed", std::to_string(cfg.rng_seed)},
            {"use_call_graph_context", cfg.use_call_graph_context ? "true" : "false"},
            {"context_budget", std::to_string(cfg.context_budget)},
            {"vocab_size", std::to_string(cfg.vocab_size)},
            {"dim", std::to_string(cfg.dim)},
            {"max_tokens", std::to_string(cfg.max_tokens)},
            {"eval_fraction", format_double(cfg.eval_fraction)},
            {"threads", std::to_string(cfg.threads)}};
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw Error("empty range");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % n;
}

std::vector<ChunkRef> sample_negatives(const TrainingInstance& inst, std::span<const TrainingInstance* const> batch,
                                       std::size_t n, NegativeSource source, std::size_t bm25_negatives,
                                       std::mt19937_64& rng, const Bm25Stats* bm25) {
    const ChunkSet* own = inst.chunks.get();
    auto gt = gt_indices(inst);
    std::set<std::size_t> gt_set(gt.begin(), gt.end());
    auto in_instance_pool = [&] {
        std::vector<ChunkRef> pool;
        for (std::size_t i = 0; i < own->chunks.size(); ++i)
            if (!gt_set.contains(i)) pool.push_back({own, i});
        return pool;
    };
    if (n == 0) return {};

    switch (source) {
    case NegativeSource::InInstance: return draw(in_instance_pool(), n, rng);
    case NegativeSource::AcrossInstance: {
        std::vector<ChunkRef> pool;
        std::set<ChunkRef> seen;
        bool other = false;
        for (const TrainingInstance* b : batch) {
            if (b == &inst) continue;
            other = true;
            auto b_gt = gt_indices(*b);
            std::set<std::size_t> b_gt_set(b_gt.begin(), b_gt.end());
            for (std::size_t i = 0; i < b->chunks->chunks.size(); ++i) {
                if (b_gt_set.contains(i)) continue;
                if (b->chunks.get() == own && gt_set.contains(i)) continue;
                if (seen.insert({b->chunks.get(), i}).second) pool.push_back({b->chunks.get(), i});
            }
        }
        if (!other) throw Error("needs ≥2 instances");
        return draw(std::move(pool), n, rng);
    }
    case NegativeSource::InInstancePlusBm25: {
        if (!bm25) throw Error("BM25 statistics required for in_instance_plus_bm25");
        std::vector<ChunkRef> out;
        std::set<std::size_t> taken;
        for (const auto& id : mine_hard_negatives(*bm25, inst.query_text, inst.gt_ids, std::max<std::size_t>(1, std::min(bm25_negatives, n)))) {
            if (out.size() >= std::min(bm25_negatives, n)) break;
            auto idx = own->index_of(id);
            if (!idx) throw Error("BM25 statistics do not match the instance repository");
            out.push_back({own, *idx});
            taken.insert(*idx);
        }
        std::vector<ChunkRef> rest;
        for (const auto& r : in_instance_pool())
            if (!taken.contains(r.index)) rest.push_back(r);
        for (const auto& r : draw(std::move(rest), n - out.size(), rng)) out.push_back(r);
        return out;
    }
    }
    return {};
}

SoftmaxTerms sampled_softmax(std::span<const double> pos_scores, std::span<const double> neg_scores, double tau) {
    if (!(tau > 0.0)) throw Error("tau must be positive");
    if (pos_scores.empty()) throw Error("no positives");
    SoftmaxTerms t;
    const double np = static_cast<double>(pos_scores.size());
    t.d_pos.assign(pos_scores.size(), 0.0);
    t.d_neg.assign(neg_scores.size(), 0.0);
    std::vector<double> logits(neg_scores.size() + 1);
    for (std::size_t j = 0; j < neg_scores.size(); ++j) logits[j + 1] = neg_scores[j] / tau;
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
        logits[0] = pos_scores[i] / tau;
        double lse = log_sum_exp(logits);
        double lp = logits[0] - lse;
        t.log_probs.push_back(lp);
        t.value -= lp / np;
        // d(-lp)/d s_p = -(1 - softmax_p)/tau ; d(-lp)/d s_b = softmax_b / tau
        t.d_pos[i] -= (1.0 - std::exp(lp)) / (tau * np);
        for (std::size_t j = 0; j < neg_scores.size(); ++j)
            t.d_neg[j] += std::exp(logits[j + 1] - lse) / (tau * np);
    }
    return t;
}

ChunkText training_text(const TrainingInstance& inst, std::size_t index, bool use_context, std::size_t budget) {
    const Chunk& c = inst.chunks->chunks.at(index);
    if (!use_context) return {c.rendered_text, {}};
    std::shared_ptr<const CallGraph> graph = inst.graph;
    if (!graph) graph = std::make_shared<CallGraph>(build_call_graph(*inst.chunks));
    auto ctx = assemble_context(c, *graph, *inst.chunks, std::max(budget, c.rendered_text.size()));
    return {std::move(ctx.context_text), std::move(ctx.segment_spans)};
}

LossReport instance_loss(const ToyEmbedderParams& params, const TrainingInstance& inst,
                         std::span<const ChunkRef> negatives, double tau, ToyGradient* grad, bool use_context,
                         std::size_t budget) {
    std::map<ChunkRef, TokenBag> bags;
    auto bag = [&](ChunkRef r) -> const TokenBag& {
        auto it = bags.find(r);
        if (it == bags.end()) {
            TrainingInstance view = inst;
            if (r.set != inst.chunks.get()) {
                // Across-instance negatives come from a foreign repository.
                view.chunks = std::shared_ptr<const ChunkSet>(std::shared_ptr<const ChunkSet>(), r.set);
                view.graph = nullptr;
            }
            ChunkText t = training_text(view, r.index, use_context, budget);
            it = bags.emplace(r, make_token_bag(t.text, t.spans, params.vocab_size, params.max_tokens)).first;
        }
        return it->second;
    };
    std::vector<ChunkRef> positives;
    for (std::size_t idx : gt_indices(inst)) positives.push_back({inst.chunks.get(), idx});
    for (const auto& n : negatives)
        if (n.set == inst.chunks.get() && std::find(positives.begin(), positives.end(), n) != positives.end())
            throw Error("negative set contains a ground-truth chunk of " + inst.instance_id);

    ChunkWork work(params, bag);
    ToyGradient local;
    TokenBag qbag = make_token_bag(inst.query_text, {}, params.vocab_size, params.max_tokens);
    SoftmaxTerms terms = instance_terms(params, qbag, positives, negatives, tau, 1.0, work, grad ? &local : nullptr);
    if (!std::isfinite(terms.value)) throw Error("non-finite loss for instance " + inst.instance_id);

    LossReport report;
    report.value = terms.value;
    report.log_probs = std::move(terms.log_probs);
    for (const auto& n : negatives) report.negative_ids.push_back(n.chunk().chunk_id);
    if (grad) {
        work.flush(local);
        report.grad_norm = local.norm();
        grad->merge(local, 1.0);
    }
    return report;
}

double full_normalizer_loss(const ToyEmbedderParams& params, const TrainingInstance& inst, double tau,
                            bool use_context, std::size_t budget) {
    if (!(tau > 0.0)) throw Error("tau must be positive");
    auto q = toy_embed(params, inst.query_text);
    std::vector<double> logits;
    for (std::size_t i = 0; i < inst.chunks->chunks.size(); ++i) {
        ChunkText t = training_text(inst, i, use_context, budget);
        logits.push_back(dot(q.values, toy_embed(params, t.text, t.spans).values) / tau);
    }
    double log_gamma = log_sum_exp(logits);
    auto gt = gt_indices(inst);
    double total = 0.0;
    for (std::size_t idx : gt) total += logits[idx] - log_gamma;
    double value = -total / static_cast<double>(gt.size());
    if (!std::isfinite(value)) throw Error("non-finite loss for instance " + inst.instance_id);
    return value;
}

void write_history_csv(const std::vector<HistoryRow>& history, std::ostream& out) {
    out << "epoch,mean_loss,recall@5,recall@20\n";
    out << std::setprecision(10);
    for (const auto& h : history) {
        out << h.epoch << ',' << h.mean_loss << ',';
        if (std::isfinite(h.recall5)) out << h.recall5;
        out << ',';
        if (std::isfinite(h.recall20)) out << h.recall20;
        out << '\n';
    }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(std::size_t n, double eval_fraction,
                                                                             std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(mix_seed(seed, 0x5eed, 0));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
    std::size_t held = static_cast<std::size_t>(std::floor(eval_fraction * static_cast<double>(n)));
    if (held >= n) held = n - 1;
    std::vector<std::size_t> eval(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(eval.begin(), eval.end());
    std::sort(train.begin(), train.end());
    return {train, eval};
}

std::map<std::string, RankedRetrieval, std::less<>> rank_instances(const ToyEmbedderParams& params,
                                                                   std::span<const TrainingInstance> instances,
                                                                   bool use_context, std::size_t budget) {
    std::map<const ChunkSet*, std::vector<EmbeddingVector>> repo_vectors;
    std::map<std::string, RankedRetrieval, std::less<>> out;
    for (const auto& inst : instances) {
        auto it = repo_vectors.find(inst.chunks.get());
        if (it == repo_vectors.end()) {
            std::vector<EmbeddingVector> vecs;
            for (std::size_t i = 0; i < inst.chunks->chunks.size(); ++i) {
                ChunkText t = training_text(inst, i, use_context, budget);
                vecs.push_back(toy_embed(params, t.text, t.spans));
            }
            it = repo_vectors.emplace(inst.chunks.get(), std::move(vecs)).first;
        }
        auto q = toy_embed(params, inst.query_text);
        RankedRetrieval r;
        r.query_id = inst.instance_id;
        for (std::size_t i = 0; i < it->second.size(); ++i)
            r.ranked.push_back({inst.chunks->chunks[i].chunk_id, dot(q.values, it->second[i].values)});
        std::sort(r.ranked.begin(), r.ranked.end(), ranks_before);
        out[inst.instance_id] = std::move(r);
    }
    return out;
}

EvalResult evaluate_toy(const ToyEmbedderParams& params, std::span<const TrainingInstance> instances,
                        const EvalOptions& options, bool use_context, std::size_t budget) {
    auto rankings = rank_instances(params, instances, use_context, budget);
    std::vector<EvalInstance> eval;
    for (const auto& inst : instances) eval.push_back({inst.instance_id, inst.gt_ids, inst.chunks.get()});
    return evaluate(eval, rankings, options);
}

TrainResult train_toy(const std::vector<TrainingInstance>& dataset, const TrainingConfig& cfg) {
    auto params = ToyEmbedderParams::initialize(cfg.vocab_size, cfg.dim, cfg.rng_seed);
    params.max_tokens = cfg.max_tokens;
    return train_toy(dataset, cfg, std::move(params));
}

TrainResult train_toy(const std::vector<TrainingInstance>& dataset, const TrainingConfig& cfg,
                      ToyEmbedderParams init) {
    if (dataset.empty()) throw Error("training dataset is empty");
    if (!(cfg.tau > 0.0)) throw Error("tau must be positive");
    if (cfg.batch_size == 0) throw Error("batch_size must be positive");

    TrainResult result;
    result.params = std::move(init);
    ToyEmbedderParams& params = result.params;
    if (params.vocab_size != cfg.vocab_size || params.dim != cfg.dim)
        throw Error("initial parameters do not match the configured vocabulary and dimension");

    auto [train_pos, eval_pos] = split_dataset(dataset.size(), cfg.eval_fraction, cfg.rng_seed);
    std::vector<TrainingInstance> held_out;
    for (std::size_t i : train_pos) result.train_ids.push_back(dataset[i].instance_id);
    for (std::size_t i : eval_pos) {
        result.eval_ids.push_back(dataset[i].instance_id);
        held_out.push_back(dataset[i]);
    }

    Features features(cfg);
    for (std::size_t i : train_pos) features.add(dataset[i]);

    EvalOptions eval_opts;
    eval_opts.ks = {5, 20};
    eval_opts.metrics = {Metric::Recall};
    eval_opts.levels = {Level::Chunk};
    auto held_out_recall = [&](HistoryRow& row) {
        if (held_out.empty()) {
            row.recall5 = row.recall20 = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        auto r = evaluate_toy(params, held_out, eval_opts, cfg.use_call_graph_context, cfg.context_budget);
        row.recall5 = r.mean(Level::Chunk, Metric::Recall, 5);
        row.recall20 = r.mean(Level::Chunk, Metric::Recall, 20);
    };

    const std::size_t steps_per_epoch = (train_pos.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = std::max<std::size_t>(1, steps_per_epoch * cfg.epochs);
    auto bag_fn = [&features](ChunkRef r) -> const TokenBag& { return features.bag(r); };

    // One pass over a batch; returns the summed instance losses.
    auto run_batch = [&](std::span<const TrainingInstance* const> batch, std::uint64_t step_seed, ToyGradient* grad) {
        ChunkWork work(params, bag_fn);
        double weight = 1.0 / static_cast<double>(batch.size());
        double total = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const TrainingInstance& inst = *batch[b];
            std::mt19937_64 rng(mix_seed(cfg.rng_seed, step_seed, b));
            auto negatives = sample_negatives(inst, batch, cfg.num_negatives, cfg.negative_source,
                                              cfg.bm25_negatives, rng, features.bm25_for(inst));
            if (cfg.negative_source == NegativeSource::AcrossInstance) {
                // Foreign chunks need their own bags.
                for (const auto& n : negatives)
                    if (!features.bags.contains(n.set))
                        throw Error("across-instance negative from an unknown repository");
            }
            auto terms = instance_terms(params, features.queries.at(&inst), features.positives.at(&inst), negatives,
                                        cfg.tau, weight, work, grad);
            if (!std::isfinite(terms.value))
                throw TrainingDiverged("non-finite loss for instance " + inst.instance_id, result);
            total += terms.value;
        }
        if (grad) work.flush(*grad);
        return total;
    };

    std::vector<const TrainingInstance*> train_ptrs;
    for (std::size_t i : train_pos) train_ptrs.push_back(&dataset[i]);

    // Epoch 0: loss and recall of the initial parameters.
    {
        HistoryRow row;
        double total = 0.0;
        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            std::size_t begin = s * cfg.batch_size, end = std::min(train_ptrs.size(), begin + cfg.batch_size);
            total += run_batch({train_ptrs.data() + begin, end - begin}, mix_seed(0, s, 0xe0), nullptr);
        }
        row.mean_loss = total / static_cast<double>(train_ptrs.size());
        held_out_recall(row);
        result.history.push_back(row);
    }

    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<const TrainingInstance*> order = train_ptrs;
        std::mt19937_64 shuffle_rng(mix_seed(cfg.rng_seed, epoch, 0x5417));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(shuffle_rng, i)]);

        double total = 0.0;
        for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
            std::size_t begin = s * cfg.batch_size, end = std::min(order.size(), begin + cfg.batch_size);
            ToyGradient grad;
            total += run_batch({order.data() + begin, end - begin}, step + 1, &grad);
            if (!finite(grad)) throw TrainingDiverged("non-finite gradient at step " + std::to_string(step), result);
            double lr = cfg.learning_rate * 0.5 *
                        (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps)));
            // Keep the touched rows so a step that overflows can be undone.
            std::vector<std::pair<std::uint32_t, std::vector<double>>> saved;
            for (const auto& [id, g] : grad.rows) {
                auto r = params.row(id);
                saved.emplace_back(id, std::vector<double>(r.begin(), r.end()));
            }
            auto saved_offsets = params.segment_offsets;
            grad.apply(params, lr);
            bool ok = std::all_of(params.segment_offsets.begin(), params.segment_offsets.end(),
                                  [](double x) { return std::isfinite(x); });
            for (const auto& [id, g] : grad.rows)
                for (double x : params.row(id)) ok = ok && std::isfinite(x);
            if (!ok) {
                for (const auto& [id, row] : saved) std::copy(row.begin(), row.end(), params.row(id).begin());
                params.segment_offsets = saved_offsets;
                throw TrainingDiverged("non-finite parameters after step " + std::to_string(step), result);
            }
        }
        HistoryRow row;
        row.epoch = epoch;
        row.mean_loss = total / static_cast<double>(order.size());
        held_out_recall(row);
        result.history.push_back(row);
    }
    return result;
}

}  // namespace coret
