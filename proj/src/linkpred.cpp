#include "ctikg/linkpred.hpp"

#include "ctikg/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

using json = nlohmann::json;

namespace ctikg::linkpred {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable BCE on a logit.
double bce(double logit, double target) {
    return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace

TuckerModel TuckerModel::init(int ne, int nr, int de, int dr, uint64_t seed) {
    TuckerModel m;
    m.ne = ne;
    m.nr = nr;
    m.de = de;
    m.dr = dr;
    m.E.resize(static_cast<size_t>(ne) * de);
    m.R.resize(static_cast<size_t>(nr) * dr);
    m.W.resize(static_cast<size_t>(de) * dr * de);
    util::Rng rng(seed);
    for (double& v : m.E) v = 0.1 * rng.next_normal();
    for (double& v : m.R) v = 0.1 * rng.next_normal();
    for (double& v : m.W) v = rng.next_double() - 0.5;
    return m;
}

// ---------------------------------------------------------------------------
// Checkpoint: versioned header then row-major little-endian float32 E, R, W.

namespace {
constexpr char kMagic[8] = {'C', 'T', 'I', 'K', 'G', 'T', 'K', 'R'};
constexpr uint32_t kVersion = 1;

void write_f32(std::ofstream& out, const std::vector<double>& v) {
    std::vector<float> buf(v.begin(), v.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void read_f32(std::ifstream& in, std::vector<double>& v, size_t n) {
    std::vector<float> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint truncated");
    v.assign(buf.begin(), buf.end());
}
}  // namespace

void TuckerModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    uint32_t v32[3] = {kVersion, static_cast<uint32_t>(de), static_cast<uint32_t>(dr)};
    out.write(reinterpret_cast<const char*>(v32), sizeof(v32));
    uint64_t counts[2] = {static_cast<uint64_t>(ne), static_cast<uint64_t>(nr)};
    out.write(reinterpret_cast<const char*>(counts), sizeof(counts));
    write_f32(out, E);
    write_f32(out, R);
    write_f32(out, W);
}

TuckerModel TuckerModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a model checkpoint: " + path);
    uint32_t v32[3];
    in.read(reinterpret_cast<char*>(v32), sizeof(v32));
    if (v32[0] != kVersion) throw std::runtime_error("unsupported checkpoint version");
    uint64_t counts[2];
    in.read(reinterpret_cast<char*>(counts), sizeof(counts));
    TuckerModel m;
    m.de = static_cast<int>(v32[1]);
    m.dr = static_cast<int>(v32[2]);
    m.ne = static_cast<int>(counts[0]);
    m.nr = static_cast<int>(counts[1]);
    read_f32(in, m.E, static_cast<size_t>(m.ne) * m.de);
    read_f32(in, m.R, static_cast<size_t>(m.nr) * m.dr);
    read_f32(in, m.W, static_cast<size_t>(m.de) * m.dr * m.de);
    return m;
}

// ---------------------------------------------------------------------------
// Kernels

namespace kernels {

void Grads::resize_like(const TuckerModel& m) {
    E.assign(m.E.size(), 0.0);
    R.assign(m.R.size(), 0.0);
    W.assign(m.W.size(), 0.0);
}

void Grads::zero() {
    std::fill(E.begin(), E.end(), 0.0);
    std::fill(R.begin(), R.end(), 0.0);
    std::fill(W.begin(), W.end(), 0.0);
}

namespace {

// Projects the (masked) anchor embedding through W and the relation row:
// tail mode gives the vector dotted against tail embeddings, head mode the
// one dotted against head embeddings. Also yields m_buf[j*de + o] (the
// W-contraction against the anchor) used for the relation gradient.
void project_anchor(const TuckerModel& mdl, const double* x, int rel, bool tail_mode,
                    double* m_buf, double* q) {
    const int de = mdl.de, dr = mdl.dr;
    std::fill(m_buf, m_buf + static_cast<size_t>(dr) * de, 0.0);
    if (tail_mode) {
        // m[j][k] = sum_i x[i] W[i,j,k]
        for (int i = 0; i < de; ++i) {
            const double xi = x[i];
            if (xi == 0.0) continue;
            const double* wrow = &mdl.W[static_cast<size_t>(i) * dr * de];
            for (int j = 0; j < dr; ++j)
                for (int k = 0; k < de; ++k) m_buf[static_cast<size_t>(j) * de + k] += xi * wrow[static_cast<size_t>(j) * de + k];
        }
    } else {
        // m[j][i] = sum_k W[i,j,k] x[k]
        for (int i = 0; i < de; ++i) {
            const double* wrow = &mdl.W[static_cast<size_t>(i) * dr * de];
            for (int j = 0; j < dr; ++j) {
                double acc = 0.0;
                const double* wjk = wrow + static_cast<size_t>(j) * de;
                for (int k = 0; k < de; ++k) acc += wjk[k] * x[k];
                m_buf[static_cast<size_t>(j) * de + i] = acc;
            }
        }
    }
    for (int o = 0; o < de; ++o) q[o] = 0.0;
    for (int j = 0; j < dr; ++j) {
        const double rj = mdl.r(rel, j);
        const double* mj = m_buf + static_cast<size_t>(j) * de;
        for (int o = 0; o < de; ++o) q[o] += rj * mj[o];
    }
}

// dx[i] = sum_{j,o} W-contraction of dq against the non-anchor mode.
void backproject(const TuckerModel& mdl, const double* dq, int rel, bool tail_mode, double* dx) {
    const int de = mdl.de, dr = mdl.dr;
    for (int i = 0; i < de; ++i) dx[i] = 0.0;
    if (tail_mode) {
        // dx[i] = sum_j R[j] sum_k W[i,j,k] dq[k]
        for (int i = 0; i < de; ++i) {
            const double* wrow = &mdl.W[static_cast<size_t>(i) * dr * de];
            double acc = 0.0;
            for (int j = 0; j < dr; ++j) {
                const double* wjk = wrow + static_cast<size_t>(j) * de;
                double inner = 0.0;
                for (int k = 0; k < de; ++k) inner += wjk[k] * dq[k];
                acc += mdl.r(rel, j) * inner;
            }
            dx[i] = acc;
        }
    } else {
        // dx[k] = sum_j R[j] sum_i dq[i] W[i,j,k]
        for (int i = 0; i < de; ++i) {
            const double di = dq[i];
            if (di == 0.0) continue;
            const double* wrow = &mdl.W[static_cast<size_t>(i) * dr * de];
            for (int j = 0; j < dr; ++j) {
                const double c = di * mdl.r(rel, j);
                const double* wjk = wrow + static_cast<size_t>(j) * de;
                for (int k = 0; k < de; ++k) dx[k] += c * wjk[k];
            }
        }
    }
}

struct RowBuffers {
    std::vector<double> x, q2, dq, dx, g, m_buf;
};

// Shared forward/backward for one row; logits gradient g is left for the
// caller-specific entity-gradient accumulation.
double row_forward(const TuckerModel& mdl, const BatchRows& rows, const DropoutMasks* masks,
                   double label_smoothing, double inv_norm, size_t b, RowBuffers& buf) {
    const int de = mdl.de, ne = mdl.ne;
    const int anchor = rows.anchor[b];
    const int rel = rows.rel[b];

    buf.x.assign(static_cast<size_t>(de), 0.0);
    for (int i = 0; i < de; ++i) buf.x[i] = mdl.e(anchor, i);
    if (masks)
        for (int i = 0; i < de; ++i) buf.x[i] *= masks->input[b][i];

    buf.m_buf.resize(static_cast<size_t>(mdl.dr) * de);
    std::vector<double> q(de);
    project_anchor(mdl, buf.x.data(), rel, rows.tail_mode, buf.m_buf.data(), q.data());

    buf.q2 = q;
    if (masks)
        for (int i = 0; i < de; ++i)
            buf.q2[i] *= masks->hidden1[b][i] * masks->hidden2[b][i];

    // Smoothed multi-hot targets: y' = (1-ls)y + ls/ne.
    const double neg_target = label_smoothing / ne;
    const double pos_target = 1.0 - label_smoothing + neg_target;

    buf.g.assign(static_cast<size_t>(ne), 0.0);
    std::vector<char> is_pos(ne, 0);
    for (int t : rows.positives[b]) is_pos[t] = 1;

    double loss = 0.0;
    for (int c = 0; c < ne; ++c) {
        double logit = 0.0;
        const double* ec = &mdl.E[static_cast<size_t>(c) * de];
        for (int k = 0; k < de; ++k) logit += buf.q2[k] * ec[k];
        const double target = is_pos[c] ? pos_target : neg_target;
        loss += bce(logit, target) * inv_norm;
        buf.g[c] = (sigmoid(logit) - target) * inv_norm;
    }

    // dq2 then chain back through the dropout masks.
    buf.dq.assign(static_cast<size_t>(de), 0.0);
    for (int c = 0; c < ne; ++c) {
        const double gc = buf.g[c];
        if (gc == 0.0) continue;
        const double* ec = &mdl.E[static_cast<size_t>(c) * de];
        for (int k = 0; k < de; ++k) buf.dq[k] += gc * ec[k];
    }
    if (masks)
        for (int k = 0; k < de; ++k)
            buf.dq[k] *= masks->hidden1[b][k] * masks->hidden2[b][k];

    buf.dx.assign(static_cast<size_t>(de), 0.0);
    backproject(mdl, buf.dq.data(), rel, rows.tail_mode, buf.dx.data());
    if (masks)
        for (int i = 0; i < de; ++i) buf.dx[i] *= masks->input[b][i];
    return loss;
}

}  // namespace

double loss_and_grads_serial(const TuckerModel& mdl, const BatchRows& rows,
                             const DropoutMasks* masks, double label_smoothing, Grads* grads) {
    const int de = mdl.de, dr = mdl.dr, ne = mdl.ne;
    const size_t B = rows.anchor.size();
    const double inv_norm = 1.0 / (static_cast<double>(B) * ne);

    double loss = 0.0;
    RowBuffers buf;
    for (size_t b = 0; b < B; ++b) {
        loss += row_forward(mdl, rows, masks, label_smoothing, inv_norm, b, buf);
        if (!grads) continue;

        // Candidate-side entity gradients.
        for (int c = 0; c < ne; ++c) {
            const double gc = buf.g[c];
            if (gc == 0.0) continue;
            double* ge = &grads->E[static_cast<size_t>(c) * de];
            for (int k = 0; k < de; ++k) ge[k] += gc * buf.q2[k];
        }
        // Anchor-side entity gradient.
        double* ga = &grads->E[static_cast<size_t>(rows.anchor[b]) * de];
        for (int i = 0; i < de; ++i) ga[i] += buf.dx[i];
        // Relation gradient via the stored W-contraction.
        double* gr = &grads->R[static_cast<size_t>(rows.rel[b]) * dr];
        for (int j = 0; j < dr; ++j) {
            const double* mj = buf.m_buf.data() + static_cast<size_t>(j) * de;
            double acc = 0.0;
            for (int o = 0; o < de; ++o) acc += mj[o] * buf.dq[o];
            gr[j] += acc;
        }
        // Core tensor gradient: outer product of the two mode vectors with
        // the relation row.
        const double* iside = rows.tail_mode ? buf.x.data() : buf.dq.data();
        const double* kside = rows.tail_mode ? buf.dq.data() : buf.x.data();
        for (int i = 0; i < de; ++i) {
            const double ci = iside[i];
            if (ci == 0.0) continue;
            double* gw = &grads->W[static_cast<size_t>(i) * dr * de];
            for (int j = 0; j < dr; ++j) {
                const double cij = ci * mdl.r(rows.rel[b], j);
                double* gwk = gw + static_cast<size_t>(j) * de;
                for (int k = 0; k < de; ++k) gwk[k] += cij * kside[k];
            }
        }
    }
    return loss;
}

double loss_and_grads_parallel(const TuckerModel& mdl, const BatchRows& rows,
                               const DropoutMasks* masks, double label_smoothing, Grads* grads) {
    const int de = mdl.de, dr = mdl.dr, ne = mdl.ne;
    const int B = static_cast<int>(rows.anchor.size());
    const double inv_norm = 1.0 / (static_cast<double>(B) * ne);

    // Per-row state, filled in parallel; gradient accumulation below is
    // either parallel over disjoint output rows or serial over the batch,
    // so the result does not depend on the thread count.
    std::vector<std::vector<double>> x_all(B), q2_all(B), dq_all(B), dx_all(B), g_all(B),
        m_all(B);
    std::vector<double> loss_all(B, 0.0);

#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
        RowBuffers buf;
        loss_all[b] = row_forward(mdl, rows, masks, label_smoothing, inv_norm, b, buf);
        x_all[b] = std::move(buf.x);
        q2_all[b] = std::move(buf.q2);
        dq_all[b] = std::move(buf.dq);
        dx_all[b] = std::move(buf.dx);
        g_all[b] = std::move(buf.g);
        m_all[b] = std::move(buf.m_buf);
    }

    double loss = 0.0;
    for (int b = 0; b < B; ++b) loss += loss_all[b];
    if (!grads) return loss;

    // Candidate-side entity gradients: parallel over entities.
#pragma omp parallel for schedule(static)
    for (int c = 0; c < ne; ++c) {
        double* ge = &grads->E[static_cast<size_t>(c) * de];
        for (int b = 0; b < B; ++b) {
            const double gc = g_all[b][c];
            if (gc == 0.0) continue;
            const double* q2 = q2_all[b].data();
            for (int k = 0; k < de; ++k) ge[k] += gc * q2[k];
        }
    }

    // Anchor and relation gradients collide across rows; accumulate serially.
    for (int b = 0; b < B; ++b) {
        double* ga = &grads->E[static_cast<size_t>(rows.anchor[b]) * de];
        for (int i = 0; i < de; ++i) ga[i] += dx_all[b][i];
        double* gr = &grads->R[static_cast<size_t>(rows.rel[b]) * dr];
        for (int j = 0; j < dr; ++j) {
            const double* mj = m_all[b].data() + static_cast<size_t>(j) * de;
            double acc = 0.0;
            for (int o = 0; o < de; ++o) acc += mj[o] * dq_all[b][o];
            gr[j] += acc;
        }
    }

    // Core tensor: parallel over the first mode.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < de; ++i) {
        double* gw = &grads->W[static_cast<size_t>(i) * dr * de];
        for (int b = 0; b < B; ++b) {
            const double* iside = rows.tail_mode ? x_all[b].data() : dq_all[b].data();
            const double* kside = rows.tail_mode ? dq_all[b].data() : x_all[b].data();
            const double ci = iside[i];
            if (ci == 0.0) continue;
            for (int j = 0; j < dr; ++j) {
                const double cij = ci * mdl.r(rows.rel[b], j);
                double* gwk = gw + static_cast<size_t>(j) * de;
                for (int k = 0; k < de; ++k) gwk[k] += cij * kside[k];
            }
        }
    }
    return loss;
}

std::vector<double> score_all_serial(const TuckerModel& mdl, int anchor, int rel,
                                     bool tail_mode) {
    if (anchor < 0 || anchor >= mdl.ne || rel < 0 || rel >= mdl.nr) throw IndexOutOfRange();
    const int de = mdl.de, ne = mdl.ne;
    std::vector<double> x(de), q(de), m_buf(static_cast<size_t>(mdl.dr) * de);
    for (int i = 0; i < de; ++i) x[i] = mdl.e(anchor, i);
    project_anchor(mdl, x.data(), rel, tail_mode, m_buf.data(), q.data());
    std::vector<double> scores(ne, 0.0);
    for (int c = 0; c < ne; ++c) {
        const double* ec = &mdl.E[static_cast<size_t>(c) * de];
        double acc = 0.0;
        for (int k = 0; k < de; ++k) acc += q[k] * ec[k];
        scores[c] = acc;
    }
    return scores;
}

std::vector<double> score_all_parallel(const TuckerModel& mdl, int anchor, int rel,
                                       bool tail_mode) {
    if (anchor < 0 || anchor >= mdl.ne || rel < 0 || rel >= mdl.nr) throw IndexOutOfRange();
    const int de = mdl.de, ne = mdl.ne;
    std::vector<double> x(de), q(de), m_buf(static_cast<size_t>(mdl.dr) * de);
    for (int i = 0; i < de; ++i) x[i] = mdl.e(anchor, i);
    project_anchor(mdl, x.data(), rel, tail_mode, m_buf.data(), q.data());
    std::vector<double> scores(ne, 0.0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < ne; ++c) {
        const double* ec = &mdl.E[static_cast<size_t>(c) * de];
        double acc = 0.0;
        for (int k = 0; k < de; ++k) acc += q[k] * ec[k];
        scores[c] = acc;
    }
    return scores;
}

}  // namespace kernels

double score(const TuckerModel& m, int h, int r, int t) {
    if (h < 0 || h >= m.ne || t < 0 || t >= m.ne || r < 0 || r >= m.nr)
        throw IndexOutOfRange();
    std::vector<double> x(m.de), q(m.de), m_buf(static_cast<size_t>(m.dr) * m.de);
    for (int i = 0; i < m.de; ++i) x[i] = m.e(h, i);
    kernels::project_anchor(m, x.data(), r, /*tail_mode=*/true, m_buf.data(), q.data());
    double acc = 0.0;
    for (int k = 0; k < m.de; ++k) acc += q[k] * m.e(t, k);
    return acc;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct AdamState {
    std::vector<double> m, v;
    void resize(size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, int step, bool use_openmp) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(b1, step);
    const double bc2 = 1.0 - std::pow(b2, step);
    const ptrdiff_t n = static_cast<ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static) if (use_openmp)
    for (ptrdiff_t i = 0; i < n; ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        params[i] -= lr * (state.m[i] / bc1) / (std::sqrt(state.v[i] / bc2) + eps);
    }
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double lr,
              bool use_openmp) {
    const ptrdiff_t n = static_cast<ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static) if (use_openmp)
    for (ptrdiff_t i = 0; i < n; ++i) params[i] -= lr * grads[i];
}

// Rows grouped by (anchor, relation); ordered map keeps construction
// deterministic.
std::vector<std::pair<std::pair<int, int>, std::vector<int>>> group_rows(
    const std::vector<kg::IdTriple>& triples, bool tail_mode) {
    std::map<std::pair<int, int>, std::vector<int>> groups;
    for (const kg::IdTriple& t : triples) {
        if (tail_mode) groups[{t[0], t[1]}].push_back(t[2]);
        else groups[{t[2], t[1]}].push_back(t[0]);
    }
    std::vector<std::pair<std::pair<int, int>, std::vector<int>>> out;
    out.reserve(groups.size());
    for (auto& [key, positives] : groups) {
        std::sort(positives.begin(), positives.end());
        positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
        out.emplace_back(key, std::move(positives));
    }
    return out;
}

kernels::DropoutMasks draw_masks(util::Rng& rng, size_t batch, int de, const TrainConfig& cfg) {
    kernels::DropoutMasks masks;
    auto draw = [&](double rate) {
        std::vector<double> mask(de, 1.0);
        if (rate > 0.0) {
            const double scale = 1.0 / (1.0 - rate);
            for (int i = 0; i < de; ++i) mask[i] = rng.next_double() < rate ? 0.0 : scale;
        }
        return mask;
    };
    for (size_t b = 0; b < batch; ++b) {
        masks.input.push_back(draw(cfg.input_dropout));
        masks.hidden1.push_back(draw(cfg.hidden_dropout1));
        masks.hidden2.push_back(draw(cfg.hidden_dropout2));
    }
    return masks;
}

// Negative-sampling alternative to 1-N: BCE over the positive and k sampled
// corruptions. Serial; the default strategy is the 1-N kernel.
double negsample_batch(const TuckerModel& mdl, const std::vector<kg::IdTriple>& batch,
                       bool tail_mode, int negatives, double label_smoothing, util::Rng& rng,
                       kernels::Grads* grads) {
    const int de = mdl.de, dr = mdl.dr;
    const size_t cand_count = static_cast<size_t>(negatives) + 1;
    const double inv_norm = 1.0 / (static_cast<double>(batch.size()) * cand_count);
    const double neg_target = label_smoothing / cand_count;
    const double pos_target = 1.0 - label_smoothing + neg_target;

    double loss = 0.0;
    std::vector<double> x(de), q(de), dq(de), dx(de);
    std::vector<double> m_buf(static_cast<size_t>(dr) * de);
    for (const kg::IdTriple& triple : batch) {
        const int anchor = tail_mode ? triple[0] : triple[2];
        const int rel = triple[1];
        const int truth = tail_mode ? triple[2] : triple[0];

        std::vector<int> cands{truth};
        for (int s = 0; s < negatives; ++s)
            cands.push_back(static_cast<int>(rng.next_below(mdl.ne)));

        for (int i = 0; i < de; ++i) x[i] = mdl.e(anchor, i);
        kernels::project_anchor(mdl, x.data(), rel, tail_mode, m_buf.data(), q.data());

        std::fill(dq.begin(), dq.end(), 0.0);
        for (size_t ci = 0; ci < cands.size(); ++ci) {
            const int c = cands[ci];
            const double* ec = &mdl.E[static_cast<size_t>(c) * de];
            double logit = 0.0;
            for (int k = 0; k < de; ++k) logit += q[k] * ec[k];
            const double target = ci == 0 ? pos_target : neg_target;
            loss += bce(logit, target) * inv_norm;
            const double g = (sigmoid(logit) - target) * inv_norm;
            if (!grads) continue;
            double* ge = &grads->E[static_cast<size_t>(c) * de];
            for (int k = 0; k < de; ++k) {
                ge[k] += g * q[k];
                dq[k] += g * ec[k];
            }
        }
        if (!grads) continue;

        kernels::backproject(mdl, dq.data(), rel, tail_mode, dx.data());
        double* ga = &grads->E[static_cast<size_t>(anchor) * de];
        for (int i = 0; i < de; ++i) ga[i] += dx[i];
        double* gr = &grads->R[static_cast<size_t>(rel) * dr];
        for (int j = 0; j < dr; ++j) {
            const double* mj = m_buf.data() + static_cast<size_t>(j) * de;
            double acc = 0.0;
            for (int o = 0; o < de; ++o) acc += mj[o] * dq[o];
            gr[j] += acc;
        }
        const double* iside = tail_mode ? x.data() : dq.data();
        const double* kside = tail_mode ? dq.data() : x.data();
        for (int i = 0; i < de; ++i) {
            const double ci = iside[i];
            if (ci == 0.0) continue;
            double* gw = &grads->W[static_cast<size_t>(i) * dr * de];
            for (int j = 0; j < dr; ++j) {
                const double cij = ci * mdl.r(rel, j);
                double* gwk = gw + static_cast<size_t>(j) * de;
                for (int k = 0; k < de; ++k) gwk[k] += cij * kside[k];
            }
        }
    }
    return loss;
}

}  // namespace

TrainResult train(const std::vector<kg::IdTriple>& train_triples, int ne, int nr,
                  const TrainConfig& config) {
    if (train_triples.empty()) throw EmptyTrainSet();
    for (const kg::IdTriple& t : train_triples)
        if (t[0] < 0 || t[0] >= ne || t[2] < 0 || t[2] >= ne || t[1] < 0 || t[1] >= nr)
            throw IndexOutOfRange();

    TrainResult result;
    result.model = TuckerModel::init(ne, nr, config.d_e, config.d_r, config.seed);
    TuckerModel& model = result.model;

    util::Rng rng(config.seed ^ 0xd1b54a32d192ed03ull);

    auto tail_groups = group_rows(train_triples, /*tail_mode=*/true);
    auto head_groups = group_rows(train_triples, /*tail_mode=*/false);

    AdamState adam_e, adam_r, adam_w;
    adam_e.resize(model.E.size());
    adam_r.resize(model.R.size());
    adam_w.resize(model.W.size());
    int step = 0;

    kernels::Grads grads;
    grads.resize_like(model);

    const bool any_dropout =
        config.input_dropout > 0.0 || config.hidden_dropout1 > 0.0 || config.hidden_dropout2 > 0.0;

    auto apply_update = [&](double /*loss*/) {
        ++step;
        if (config.optimizer == Optimizer::Adam) {
            adam_step(model.E, grads.E, adam_e, config.learning_rate, step, config.use_openmp);
            adam_step(model.R, grads.R, adam_r, config.learning_rate, step, config.use_openmp);
            adam_step(model.W, grads.W, adam_w, config.learning_rate, step, config.use_openmp);
        } else {
            sgd_step(model.E, grads.E, config.learning_rate, config.use_openmp);
            sgd_step(model.R, grads.R, config.learning_rate, config.use_openmp);
            sgd_step(model.W, grads.W, config.learning_rate, config.use_openmp);
        }
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        int batches = 0;

        if (config.strategy == TrainStrategy::OneToN) {
            auto run_direction = [&](const auto& groups, bool tail_mode) {
                std::vector<size_t> order(groups.size());
                std::iota(order.begin(), order.end(), size_t{0});
                rng.shuffle(order);
                for (size_t start = 0; start < order.size();
                     start += static_cast<size_t>(config.batch_size)) {
                    const size_t end =
                        std::min(order.size(), start + static_cast<size_t>(config.batch_size));
                    kernels::BatchRows rows;
                    rows.tail_mode = tail_mode;
                    for (size_t idx = start; idx < end; ++idx) {
                        const auto& [key, positives] = groups[order[idx]];
                        rows.anchor.push_back(key.first);
                        rows.rel.push_back(key.second);
                        rows.positives.push_back(positives);
                    }
                    kernels::DropoutMasks masks;
                    if (any_dropout)
                        masks = draw_masks(rng, rows.anchor.size(), config.d_e, config);
                    grads.zero();
                    const double loss =
                        config.use_openmp
                            ? kernels::loss_and_grads_parallel(
                                  model, rows, any_dropout ? &masks : nullptr,
                                  config.label_smoothing, &grads)
                            : kernels::loss_and_grads_serial(model, rows,
                                                             any_dropout ? &masks : nullptr,
                                                             config.label_smoothing, &grads);
                    apply_update(loss);
                    epoch_loss += loss;
                    ++batches;
                }
            };
            run_direction(tail_groups, true);
            if (config.train_both_directions) run_direction(head_groups, false);
        } else {
            std::vector<kg::IdTriple> shuffled = train_triples;
            rng.shuffle(shuffled);
            for (size_t start = 0; start < shuffled.size();
                 start += static_cast<size_t>(config.batch_size)) {
                const size_t end =
                    std::min(shuffled.size(), start + static_cast<size_t>(config.batch_size));
                std::vector<kg::IdTriple> batch(shuffled.begin() + start, shuffled.begin() + end);
                grads.zero();
                double loss = negsample_batch(model, batch, true, config.negatives,
                                              config.label_smoothing, rng, &grads);
                if (config.train_both_directions)
                    loss += negsample_batch(model, batch, false, config.negatives,
                                            config.label_smoothing, rng, &grads);
                apply_update(loss);
                epoch_loss += loss;
                ++batches;
            }
        }
        result.loss_trace.push_back(batches ? epoch_loss / batches : 0.0);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Rank-based evaluation

uint64_t triple_key(int h, int r, int t) {
    return (static_cast<uint64_t>(h) << 42) | (static_cast<uint64_t>(r) << 21) |
           static_cast<uint64_t>(t);
}

TripleSet make_triple_set(const std::vector<kg::IdTriple>& triples) {
    TripleSet set;
    set.reserve(triples.size() * 2);
    for (const kg::IdTriple& t : triples) set.insert(triple_key(t[0], t[1], t[2]));
    return set;
}

int rank_from_scores(const std::vector<double>& scores, int true_id,
                     const std::vector<char>& excluded) {
    const double s = scores[true_id];
    int above = 0, tied = 0;
    for (size_t c = 0; c < scores.size(); ++c) {
        if (static_cast<int>(c) == true_id || (!excluded.empty() && excluded[c])) continue;
        if (scores[c] > s) ++above;
        else if (scores[c] == s) ++tied;
    }
    // Expected rank under random tie-breaking, rounded up.
    return above + 1 + (tied + 1) / 2;
}

int rank_tail(const TuckerModel& m, int h, int r, int true_t, const TripleSet& known,
              RankSetting setting) {
    std::vector<double> scores = kernels::score_all_serial(m, h, r, /*tail_mode=*/true);
    std::vector<char> excluded;
    if (setting == RankSetting::Filtered) {
        excluded.assign(m.ne, 0);
        for (int c = 0; c < m.ne; ++c)
            if (c != true_t && known.count(triple_key(h, r, c))) excluded[c] = 1;
    }
    return rank_from_scores(scores, true_t, excluded);
}

int rank_head(const TuckerModel& m, int r, int t, const TripleSet& known, int true_h,
              RankSetting setting) {
    std::vector<double> scores = kernels::score_all_serial(m, t, r, /*tail_mode=*/false);
    std::vector<char> excluded;
    if (setting == RankSetting::Filtered) {
        excluded.assign(m.ne, 0);
        for (int c = 0; c < m.ne; ++c)
            if (c != true_h && known.count(triple_key(c, r, t))) excluded[c] = 1;
    }
    return rank_from_scores(scores, true_h, excluded);
}

namespace {

DirectionMetrics metrics_from_ranks(const std::vector<int>& ranks) {
    DirectionMetrics m;
    m.queries = ranks.size();
    if (ranks.empty()) return m;
    for (int r : ranks) {
        m.mrr += 1.0 / r;
        if (r <= 3) m.hits3 += 1.0;
        if (r <= 10) m.hits10 += 1.0;
        if (r <= 30) m.hits30 += 1.0;
    }
    const double n = static_cast<double>(ranks.size());
    m.mrr /= n;
    m.hits3 /= n;
    m.hits10 /= n;
    m.hits30 /= n;
    return m;
}

}  // namespace

RankReport report_from_ranks(const std::vector<int>& head_ranks,
                             const std::vector<int>& tail_ranks, RankSetting setting) {
    RankReport report;
    report.setting = setting;
    report.head = metrics_from_ranks(head_ranks);
    report.tail = metrics_from_ranks(tail_ranks);
    std::vector<int> pooled = head_ranks;  // "Both" pools every query
    pooled.insert(pooled.end(), tail_ranks.begin(), tail_ranks.end());
    report.both = metrics_from_ranks(pooled);
    return report;
}

RankReport evaluate(const TuckerModel& m, const std::vector<kg::IdTriple>& test,
                    const TripleSet& known, RankSetting setting, bool use_openmp) {
    if (test.empty()) throw EmptyTestSet();
    const int n = static_cast<int>(test.size());
    std::vector<int> head_ranks(n), tail_ranks(n);
#pragma omp parallel for schedule(dynamic) if (use_openmp)
    for (int i = 0; i < n; ++i) {
        const kg::IdTriple& t = test[i];
        tail_ranks[i] = rank_tail(m, t[0], t[1], t[2], known, setting);
        head_ranks[i] = rank_head(m, t[1], t[2], known, t[0], setting);
    }
    return report_from_ranks(head_ranks, tail_ranks, setting);
}

std::string RankReport::to_json() const {
    json j;
    j["setting"] = setting == RankSetting::Filtered ? "filtered" : "raw";
    auto block = [](const DirectionMetrics& m) {
        json b;
        b["mrr"] = m.mrr;
        b["hits@3"] = m.hits3;
        b["hits@10"] = m.hits10;
        b["hits@30"] = m.hits30;
        b["queries"] = m.queries;
        return b;
    };
    j["head"] = block(head);
    j["tail"] = block(tail);
    j["both"] = block(both);
    return j.dump(2);
}

std::string RankReport::to_table() const {
    std::ostringstream out;
    out << "link prediction (" << (setting == RankSetting::Filtered ? "filtered" : "raw")
        << " ranking)\n";
    out << "block   H@3     H@10    H@30    MRR     queries\n";
    auto row = [&](const char* name, const DirectionMetrics& m) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-6s  %.4f  %.4f  %.4f  %.4f  %zu\n", name, m.hits3,
                      m.hits10, m.hits30, m.mrr, m.queries);
        out << buf;
    };
    row("Head", head);
    row("Tail", tail);
    row("Both", both);
    return out.str();
}

// ---------------------------------------------------------------------------
// Gradient check

double gradient_check(const TuckerModel& m, const kernels::BatchRows& rows,
                      double label_smoothing) {
    kernels::Grads grads;
    grads.resize_like(m);
    kernels::loss_and_grads_serial(m, rows, nullptr, label_smoothing, &grads);

    TuckerModel probe = m;
    constexpr double h = 1e-5;
    double max_err = 0.0;
    auto check_tensor = [&](std::vector<double>& params, const std::vector<double>& analytic) {
        for (size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + h;
            const double up =
                kernels::loss_and_grads_serial(probe, rows, nullptr, label_smoothing, nullptr);
            params[i] = saved - h;
            const double down =
                kernels::loss_and_grads_serial(probe, rows, nullptr, label_smoothing, nullptr);
            params[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double denom = std::max(1.0, std::abs(analytic[i]) + std::abs(numeric));
            max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
        }
    };
    check_tensor(probe.E, grads.E);
    check_tensor(probe.R, grads.R);
    check_tensor(probe.W, grads.W);
    return max_err;
}

}  // namespace ctikg::linkpred
