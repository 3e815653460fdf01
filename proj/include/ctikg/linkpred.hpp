#pragma once

#include "ctikg/kg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace ctikg::linkpred {

// Entity table E (ne x d_e), relation table R (nr x d_r), core tensor W
// (d_e x d_r x d_e), all doubles in memory; checkpoints store float32.
struct TuckerModel {
    int ne = 0, nr = 0, de = 0, dr = 0;
    std::vector<double> E;  // row-major ne x de
    std::vector<double> R;  // nr x dr
    std::vector<double> W;  // (i*dr + j)*de + k

    double& e(int ent, int k) { return E[static_cast<size_t>(ent) * de + k]; }
    double e(int ent, int k) const { return E[static_cast<size_t>(ent) * de + k]; }
    double& r(int rel, int j) { return R[static_cast<size_t>(rel) * dr + j]; }
    double r(int rel, int j) const { return R[static_cast<size_t>(rel) * dr + j]; }
    double& w(int i, int j, int k) {
        return W[(static_cast<size_t>(i) * dr + j) * de + k];
    }
    double w(int i, int j, int k) const {
        return W[(static_cast<size_t>(i) * dr + j) * de + k];
    }

    static TuckerModel init(int ne, int nr, int de, int dr, uint64_t seed);

    void save(const std::string& path) const;
    static TuckerModel load(const std::string& path);
};

enum class TrainStrategy { OneToN, NegSampling };
enum class Optimizer { Adam, Sgd };

struct TrainConfig {
    int d_e = 50;
    int d_r = 50;
    int batch_size = 64;
    double learning_rate = 0.001;
    int epochs = 500;
    TrainStrategy strategy = TrainStrategy::OneToN;
    int negatives = 10;  // per positive, NegSampling only
    double label_smoothing = 0.1;
    double input_dropout = 0.3;
    double hidden_dropout1 = 0.4;
    double hidden_dropout2 = 0.5;
    bool train_both_directions = true;  // also fit head queries per epoch
    Optimizer optimizer = Optimizer::Adam;
    uint64_t seed = 20;
    bool use_openmp = true;
};

struct TrainResult {
    TuckerModel model;
    std::vector<double> loss_trace;  // mean batch loss per epoch
};

struct EmptyTrainSet : std::runtime_error {
    EmptyTrainSet() : std::runtime_error("training set is empty") {}
};
struct EmptyTestSet : std::runtime_error {
    EmptyTestSet() : std::runtime_error("test set is empty") {}
};
struct IndexOutOfRange : std::runtime_error {
    IndexOutOfRange() : std::runtime_error("entity or relation id out of range") {}
};

// Trilinear form W x1 e_h x2 w_r x3 e_t.
double score(const TuckerModel& m, int h, int r, int t);

TrainResult train(const std::vector<kg::IdTriple>& train_triples, int ne, int nr,
                  const TrainConfig& config);

// ---------------------------------------------------------------------------
// Kernels. The serial variants are the reference implementation; the
// parallel variants must produce identical results and exist for speed.

namespace kernels {

// 1-N rows for one direction: anchor is h for tail queries, t for head
// queries; positives are the true completions.
struct BatchRows {
    std::vector<int> anchor;
    std::vector<int> rel;
    std::vector<std::vector<int>> positives;
    bool tail_mode = true;
};

struct Grads {
    std::vector<double> E, R, W;
    void resize_like(const TuckerModel& m);
    void zero();
};

// Optional inverted-dropout masks, one row each of width d_e: input mask on
// the anchor embedding, two hidden masks on the contracted vector.
struct DropoutMasks {
    std::vector<std::vector<double>> input, hidden1, hidden2;
};

double loss_and_grads_serial(const TuckerModel& m, const BatchRows& rows,
                             const DropoutMasks* masks, double label_smoothing, Grads* grads);
double loss_and_grads_parallel(const TuckerModel& m, const BatchRows& rows,
                               const DropoutMasks* masks, double label_smoothing, Grads* grads);

std::vector<double> score_all_serial(const TuckerModel& m, int anchor, int rel, bool tail_mode);
std::vector<double> score_all_parallel(const TuckerModel& m, int anchor, int rel,
                                       bool tail_mode);

}  // namespace kernels

// ---------------------------------------------------------------------------
// Rank-based evaluation

enum class RankSetting { Raw, Filtered };

using TripleSet = std::unordered_set<uint64_t>;

uint64_t triple_key(int h, int r, int t);  // ids must stay below 2^21
TripleSet make_triple_set(const std::vector<kg::IdTriple>& triples);

// Rank of the true entity among all candidates: 1 + #strictly-better +
// ceil(ties/2). Filtered ranking drops other known-true candidates first.
int rank_tail(const TuckerModel& m, int h, int r, int true_t, const TripleSet& known,
              RankSetting setting);
int rank_head(const TuckerModel& m, int r, int t, const TripleSet& known, int true_h,
              RankSetting setting);
int rank_from_scores(const std::vector<double>& scores, int true_id,
                     const std::vector<char>& excluded);

struct DirectionMetrics {
    double mrr = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    double hits30 = 0.0;
    size_t queries = 0;
};

struct RankReport {
    DirectionMetrics head, tail, both;
    RankSetting setting = RankSetting::Filtered;

    std::string to_json() const;
    std::string to_table() const;  // Head / Tail / Both blocks
};

RankReport evaluate(const TuckerModel& m, const std::vector<kg::IdTriple>& test,
                    const TripleSet& known, RankSetting setting, bool use_openmp = true);

// Builds a report from externally produced per-query ranks.
RankReport report_from_ranks(const std::vector<int>& head_ranks,
                             const std::vector<int>& tail_ranks, RankSetting setting);

// Max relative error between analytic gradients and central finite
// differences (step 1e-5) of the batch BCE loss. Intended for small dims.
double gradient_check(const TuckerModel& m, const kernels::BatchRows& rows,
                      double label_smoothing = 0.1);

}  // namespace ctikg::linkpred
