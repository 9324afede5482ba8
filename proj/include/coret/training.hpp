#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "coret/embedding.hpp"
#include "coret/error.hpp"
#include "coret/evaldata.hpp"
#include "coret/lexical.hpp"
#include "coret/metrics.hpp"

namespace coret {

enum class NegativeSource { InInstance, AcrossInstance, InInstancePlusBm25 };

std::string_view to_string(NegativeSource s);
NegativeSource negative_source_from_string(std::string_view text);

struct TrainingConfig {
    double tau = 0.05;
    std::size_t num_negatives = 1024;
    NegativeSource negative_source = NegativeSource::InInstance;
    std::size_t bm25_negatives = 0;
    double learning_rate = 5e-4;
    std::size_t epochs = 10;
    std::size_t batch_size = 8;
    std::uint64_t rng_seed = 0;
    bool use_call_graph_context = false;
    std::size_t context_budget = kDefaultContextBudget;
    std::uint32_t vocab_size = kDefaultVocabSize;
    std::uint32_t dim = kDefaultEmbeddingDim;
    std::size_t max_tokens = kDefaultMaxTokens;
    double eval_fraction = 0.2;  // held-out share of the dataset
    std::size_t threads = 1;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys are errors.
TrainingConfig parse_training_config(std::istream& in);
TrainingConfig load_training_config(const std::filesystem::path& path);
std::map<std::string, std::string> to_key_values(const TrainingConfig& cfg);

// A chunk of some instance's repository.
struct ChunkRef {
    const ChunkSet* set = nullptr;
    std::size_t index = 0;

    const Chunk& chunk() const { return set->chunks[index]; }
    friend bool operator==(const ChunkRef&, const ChunkRef&) = default;
    friend auto operator<=>(const ChunkRef&, const ChunkRef&) = default;
};

// Unbiased integer in [0, n).
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

// `batch` holds the instances sharing the step (it may include `inst`);
// `bm25` is needed for InInstancePlusBm25. Never returns a GT chunk of
// `inst`. Throws Error("needs ≥2 instances") for AcrossInstance when the
// batch has no other instance.
std::vector<ChunkRef> sample_negatives(const TrainingInstance& inst, std::span<const TrainingInstance* const> batch,
                                       std::size_t n, NegativeSource source, std::size_t bm25_negatives,
                                       std::mt19937_64& rng, const Bm25Stats* bm25 = nullptr);

// Sampled-softmax terms shared by the loss functions. Positive p is scored
// against {p} ∪ negatives; d_pos/d_neg are derivatives of `value` with
// respect to the raw scores.
struct SoftmaxTerms {
    double value = 0.0;
    std::vector<double> log_probs;
    std::vector<double> d_pos;
    std::vector<double> d_neg;
};

SoftmaxTerms sampled_softmax(std::span<const double> pos_scores, std::span<const double> neg_scores, double tau);

struct LossReport {
    double value = 0.0;
    std::vector<double> log_probs;  // per positive, GT order
    std::vector<std::string> negative_ids;
    double grad_norm = 0.0;
};

// Text and segment spans a chunk is embedded from during training.
struct ChunkText {
    std::string text;
    std::vector<SegmentSpan> spans;
};
ChunkText training_text(const TrainingInstance& inst, std::size_t index, bool use_context, std::size_t budget);

// Sampled softmax loss over one negative set; accumulates the exact gradient
// into `grad` when given. Throws Error naming the instance on a non-finite
// value.
LossReport instance_loss(const ToyEmbedderParams& params, const TrainingInstance& inst,
                         std::span<const ChunkRef> negatives, double tau, ToyGradient* grad = nullptr,
                         bool use_context = false, std::size_t budget = kDefaultContextBudget);

// Full softmax loss with the exact normalizer over every chunk of the repository.
double full_normalizer_loss(const ToyEmbedderParams& params, const TrainingInstance& inst, double tau,
                            bool use_context = false, std::size_t budget = kDefaultContextBudget);

struct HistoryRow {
    std::size_t epoch = 0;  // 0 = before the first step
    double mean_loss = 0.0;
    double recall5 = 0.0;
    double recall20 = 0.0;
};

void write_history_csv(const std::vector<HistoryRow>& history, std::ostream& out);

struct TrainResult {
    ToyEmbedderParams params;
    std::vector<HistoryRow> history;
    std::vector<std::string> train_ids;
    std::vector<std::string> eval_ids;
};

// Thrown when a loss or gradient turns non-finite; carries the parameters
// from before the failing step.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, TrainResult last_good)
        : Error(what), last_good_(std::make_shared<TrainResult>(std::move(last_good))) {}
    const TrainResult& last_good() const { return *last_good_; }

private:
    std::shared_ptr<TrainResult> last_good_;
};

// Deterministic split of instance positions into (train, held-out).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_dataset(std::size_t n, double eval_fraction,
                                                                             std::uint64_t seed);

// Plain gradient descent with cosine learning-rate decay.
TrainResult train_toy(const std::vector<TrainingInstance>& dataset, const TrainingConfig& cfg);
// Continues from `init` instead of a fresh initialization.
TrainResult train_toy(const std::vector<TrainingInstance>& dataset, const TrainingConfig& cfg,
                      ToyEmbedderParams init);

// Ranks every chunk of each instance's repository with the toy embedder.
std::map<std::string, RankedRetrieval, std::less<>> rank_instances(const ToyEmbedderParams& params,
                                                                   std::span<const TrainingInstance> instances,
                                                                   bool use_context = false,
                                                                   std::size_t budget = kDefaultContextBudget);
EvalResult evaluate_toy(const ToyEmbedderParams& params, std::span<const TrainingInstance> instances,
                        const EvalOptions& options, bool use_context = false,
                        std::size_t budget = kDefaultContextBudget);

}  // namespace coret
