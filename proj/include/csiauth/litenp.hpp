#pragma once

// LiteNP-Net: three bias-free linear embeddings whose inner products with the
// stacked real/imaginary CSI rebuild the NP quadratic form, followed by a
// sigmoid. Trained with a squared-hinge contrastive loss and RMSprop.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "csiauth/detector.hpp"
#include "csiauth/io.hpp"
#include "csiauth/metrics.hpp"
#include "csiauth/stats.hpp"

namespace csiauth {

struct LiteNpModel {
    int m_prime = 0;
    int e_b = 0;
    int e_c = 0;
    std::uint64_t seed = 0;
    RMatrix W_A;   // 2M' x 2M'
    RMatrix W_B1;  // E_B x 2M'
    RMatrix W_B2;  // 2M' x E_B
    RMatrix W_C1;  // E_C x 2M'
    RMatrix W_C2;  // 2M' x E_C

    int input_dim() const { return 2 * m_prime; }

    std::size_t parameter_count() const {
        return static_cast<std::size_t>(W_A.size() + W_B1.size() + W_B2.size() + W_C1.size() + W_C2.size());
    }

    bool all_finite() const {
        return W_A.allFinite() && W_B1.allFinite() && W_B2.allFinite() && W_C1.allFinite() &&
               W_C2.allFinite();
    }

    bool operator==(const LiteNpModel&) const = default;
};

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 32;
    int max_epochs = 5000;
    int patience = 20;
    double margin = 1.0;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;

    void validate() const {
        require(learning_rate > 0.0, "train: learning_rate must be > 0");
        require(batch_size > 0, "train: batch_size must be > 0");
        require(max_epochs > 0, "train: max_epochs must be > 0");
        require(patience > 0, "train: patience must be > 0");
        require(margin > 0.0, "train: margin must be > 0");
        require(rmsprop_decay > 0.0 && rmsprop_decay < 1.0, "train: rmsprop_decay must lie in (0, 1)");
        require(rmsprop_epsilon > 0.0, "train: rmsprop_epsilon must be > 0");
        require(validation_fraction > 0.0 && validation_fraction < 1.0,
                "train: validation_fraction must lie in (0, 1)");
    }
};

struct ForwardResult {
    double q;  // pre-activation, the learned quadratic form
    double s;  // sigmoid(q)
};

inline double sigmoid(double q) {
    if (q >= 0.0) return 1.0 / (1.0 + std::exp(-q));
    const double e = std::exp(q);
    return e / (1.0 + e);
}

namespace detail {

inline RMatrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    RMatrix W(rows, cols);
    // fill row-major so the draw order matches the on-disk layout
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) W(r, c) = u(rng);
    return W;
}

}  // namespace detail

inline LiteNpModel init_model(int m_prime, int e_b, int e_c, std::uint64_t seed) {
    require(m_prime > 0 && e_b > 0 && e_c > 0, "init_model: dimensions must be positive");
    Rng rng = substream(seed, Stream::model_init);
    LiteNpModel m;
    m.m_prime = m_prime;
    m.e_b = e_b;
    m.e_c = e_c;
    m.seed = seed;
    const int d = 2 * m_prime;
    m.W_A = detail::glorot_uniform(d, d, rng);
    m.W_B1 = detail::glorot_uniform(e_b, d, rng);
    m.W_B2 = detail::glorot_uniform(d, e_b, rng);
    m.W_C1 = detail::glorot_uniform(e_c, d, rng);
    m.W_C2 = detail::glorot_uniform(d, e_c, rng);
    return m;
}

inline LiteNpModel zero_model(int m_prime, int e_b, int e_c) {
    LiteNpModel m = init_model(m_prime, e_b, e_c, 0);
    m.W_A.setZero();
    m.W_B1.setZero();
    m.W_B2.setZero();
    m.W_C1.setZero();
    m.W_C2.setZero();
    return m;
}

/// Weights that reproduce a given detector: W_A = A', and B', C' split by
/// SVD into (U S) * V^T truncated to the latent widths. Exact whenever
/// rank(B') <= E_B and rank(C') <= E_C.
inline LiteNpModel plant_detector(const RealCoefficients& c, int e_b, int e_c) {
    const auto d = c.A.rows();
    require(d % 2 == 0 && c.B.rows() == d && c.C.rows() == d, "plant_detector: bad coefficient shapes");
    require(e_b <= d && e_c <= d, "plant_detector: latent width exceeds input width");
    LiteNpModel m = zero_model(static_cast<int>(d / 2), e_b, e_c);
    m.W_A = c.A;
    auto factor = [](const RMatrix& K, int e, RMatrix& outer, RMatrix& inner) {
        Eigen::JacobiSVD<RMatrix> svd(K, Eigen::ComputeFullU | Eigen::ComputeFullV);
        outer = svd.matrixU().leftCols(e) * svd.singularValues().head(e).asDiagonal();
        inner = svd.matrixV().leftCols(e).transpose();
    };
    factor(c.B, e_b, m.W_B2, m.W_B1);
    factor(c.C, e_c, m.W_C2, m.W_C1);
    return m;
}

inline ForwardResult forward(const LiteNpModel& m, const RVector& x0, const RVector& x1) {
    require(x0.size() == m.input_dim() && x1.size() == m.input_dim(), "forward: dimension mismatch");
    const double q = x1.dot(m.W_A * x1) + x0.dot(m.W_B2 * (m.W_B1 * x1)) + x0.dot(m.W_C2 * (m.W_C1 * x0));
    return {q, sigmoid(q)};
}

inline ForwardResult forward(const LiteNpModel& m, const CsiMeasurement& prev, const CsiMeasurement& next) {
    return forward(m, realify_vector(prev), realify_vector(next));
}

/// v * max(0, eta - s)^2 + (1 - v) * s^2
inline double contrastive_loss(double s, int v, double eta) {
    const double hinge = std::max(0.0, eta - s);
    return v * hinge * hinge + (1 - v) * s * s;
}

inline double contrastive_loss_grad(double s, int v, double eta) {
    return -2.0 * v * std::max(0.0, eta - s) + 2.0 * (1 - v) * s;
}

struct Gradients {
    RMatrix A, B1, B2, C1, C2;
    double loss = 0.0;  // mean batch loss at the evaluated weights
};

/// Realified pairs stored column-wise for batched evaluation.
struct PreparedData {
    RMatrix X0;  // 2M' x N, previous measurements
    RMatrix X1;  // 2M' x N, next measurements
    std::vector<int> labels;

    Eigen::Index size() const { return X0.cols(); }
};

inline PreparedData prepare(std::span<const Sample> samples) {
    PreparedData d;
    if (samples.empty()) return d;
    const Eigen::Index dim = 2 * samples.front().u.previous.size();
    d.X0.resize(dim, static_cast<Eigen::Index>(samples.size()));
    d.X1.resize(dim, static_cast<Eigen::Index>(samples.size()));
    d.labels.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        require(s.u.previous.size() * 2 == dim && s.u.next.size() * 2 == dim,
                "prepare: inconsistent measurement lengths");
        require(s.v == 0 || s.v == 1, "prepare: labels must be 0 or 1");
        d.X0.col(static_cast<Eigen::Index>(i)) = realify_vector(s.u.previous);
        d.X1.col(static_cast<Eigen::Index>(i)) = realify_vector(s.u.next);
        d.labels.push_back(s.v);
    }
    return d;
}

namespace detail {

struct BatchForward {
    RVector q;
    RMatrix HB;  // W_B1 X1
    RMatrix HC;  // W_C1 X0
};

inline BatchForward batch_forward(const LiteNpModel& m, const RMatrix& X0, const RMatrix& X1) {
    require(X0.rows() == m.input_dim() && X1.rows() == m.input_dim(), "model/data dimension mismatch");
    BatchForward f;
    f.HB = m.W_B1 * X1;
    f.HC = m.W_C1 * X0;
    f.q = ((m.W_A * X1).cwiseProduct(X1)).colwise().sum().transpose() +
          ((m.W_B2 * f.HB).cwiseProduct(X0)).colwise().sum().transpose() +
          ((m.W_C2 * f.HC).cwiseProduct(X0)).colwise().sum().transpose();
    return f;
}

inline Gradients batch_gradients(const LiteNpModel& m, const RMatrix& X0, const RMatrix& X1,
                                 std::span<const int> labels, double eta) {
    const Eigen::Index n = X0.cols();
    require(n > 0, "gradients: empty batch");
    const BatchForward f = batch_forward(m, X0, X1);
    RVector g(n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = sigmoid(f.q[i]);
        const int v = labels[static_cast<std::size_t>(i)];
        loss += contrastive_loss(s, v, eta);
        g[i] = contrastive_loss_grad(s, v, eta) * s * (1.0 - s) / static_cast<double>(n);
    }
    const RMatrix X0g = X0 * g.asDiagonal();
    Gradients out;
    out.loss = loss / static_cast<double>(n);
    out.A = (X1 * g.asDiagonal()) * X1.transpose();
    out.B2 = X0g * f.HB.transpose();
    out.B1 = (m.W_B2.transpose() * X0g) * X1.transpose();
    out.C2 = X0g * f.HC.transpose();
    out.C1 = (m.W_C2.transpose() * X0g) * X0.transpose();
    return out;
}

inline double batch_loss(const LiteNpModel& m, const RMatrix& X0, const RMatrix& X1,
                         std::span<const int> labels, double eta) {
    const RVector q = batch_forward(m, X0, X1).q;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i)
        loss += contrastive_loss(sigmoid(q[i]), labels[static_cast<std::size_t>(i)], eta);
    return loss / static_cast<double>(q.size());
}

}  // namespace detail

/// Analytic gradients of the mean contrastive loss over the batch.
inline Gradients gradients(const LiteNpModel& m, std::span<const Sample> batch, double eta) {
    require(!batch.empty(), "gradients: empty batch");
    const PreparedData d = prepare(batch);
    return detail::batch_gradients(m, d.X0, d.X1, d.labels, eta);
}

inline double mean_loss(const LiteNpModel& m, std::span<const Sample> batch, double eta) {
    require(!batch.empty(), "mean_loss: empty batch");
    const PreparedData d = prepare(batch);
    return detail::batch_loss(m, d.X0, d.X1, d.labels, eta);
}

struct RmspropState {
    RMatrix A, B1, B2, C1, C2;

    static RmspropState zeros_like(const LiteNpModel& m) {
        return {RMatrix::Zero(m.W_A.rows(), m.W_A.cols()), RMatrix::Zero(m.W_B1.rows(), m.W_B1.cols()),
                RMatrix::Zero(m.W_B2.rows(), m.W_B2.cols()), RMatrix::Zero(m.W_C1.rows(), m.W_C1.cols()),
                RMatrix::Zero(m.W_C2.rows(), m.W_C2.cols())};
    }
};

inline void rmsprop_step(LiteNpModel& m, RmspropState& state, const Gradients& g, const TrainConfig& cfg) {
    auto update = [&](RMatrix& w, RMatrix& cache, const RMatrix& grad) {
        cache = cfg.rmsprop_decay * cache + (1.0 - cfg.rmsprop_decay) * grad.cwiseAbs2();
        w.array() -= cfg.learning_rate * grad.array() / (cache.array().sqrt() + cfg.rmsprop_epsilon);
    };
    update(m.W_A, state.A, g.A);
    update(m.W_B1, state.B1, g.B1);
    update(m.W_B2, state.B2, g.B2);
    update(m.W_C1, state.C1, g.C1);
    update(m.W_C2, state.C2, g.C2);
}

struct EpochRecord {
    int epoch;
    double train_loss;
    double val_loss;
};

struct TrainResult {
    LiteNpModel model;  // weights at the best validation loss
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    bool early_stopped = false;
};

namespace detail {

inline RMatrix gather_cols(const RMatrix& X, std::span<const std::size_t> idx) {
    RMatrix out(X.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(idx[j]));
    return out;
}

// Stratified hold-out: the same fraction of each label goes to validation.
inline void stratified_holdout(const std::vector<int>& labels, double fraction, Rng& rng,
                               std::vector<std::size_t>& train, std::vector<std::size_t>& val) {
    for (int label : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, idx.size() > 1 ? idx.size() - 1 : 1);
        val.insert(val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
}

}  // namespace detail

/// Minibatch RMSprop with early stopping on validation loss.
inline TrainResult train(LiteNpModel model, std::span<const Sample> dataset, const TrainConfig& cfg,
                         std::ostream* log = nullptr) {
    cfg.validate();
    const PreparedData data = prepare(dataset);
    std::size_t n_pos = 0;
    for (int v : data.labels) n_pos += static_cast<std::size_t>(v);
    require(n_pos > 0 && n_pos < data.labels.size(), "train: dataset must contain both labels");
    require(data.X0.rows() == model.input_dim(), "train: model/data dimension mismatch");

    Rng split_rng = substream(cfg.seed, Stream::split);
    std::vector<std::size_t> train_idx, val_idx;
    detail::stratified_holdout(data.labels, cfg.validation_fraction, split_rng, train_idx, val_idx);
    require(!train_idx.empty() && !val_idx.empty(), "train: dataset too small to hold out validation");

    const RMatrix V0 = detail::gather_cols(data.X0, val_idx);
    const RMatrix V1 = detail::gather_cols(data.X1, val_idx);
    std::vector<int> val_labels;
    for (auto i : val_idx) val_labels.push_back(data.labels[i]);

    Rng order_rng = substream(cfg.seed, Stream::training);
    RmspropState state = RmspropState::zeros_like(model);
    TrainResult result;
    result.model = model;
    int since_best = 0;
    std::vector<std::size_t> order = train_idx;
    std::vector<int> batch_labels;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            batch_labels.clear();
            for (auto i : idx) batch_labels.push_back(data.labels[i]);
            const Gradients g = detail::batch_gradients(model, detail::gather_cols(data.X0, idx),
                                                        detail::gather_cols(data.X1, idx), batch_labels,
                                                        cfg.margin);
            loss_sum += g.loss * static_cast<double>(idx.size());
            rmsprop_step(model, state, g, cfg);
        }
        require(model.all_finite(), "train: weights diverged (non-finite values)");
        const double train_loss = loss_sum / static_cast<double>(order.size());
        const double val_loss = detail::batch_loss(model, V0, V1, val_labels, cfg.margin);
        result.history.push_back({epoch, train_loss, val_loss});
        if (log) *log << "epoch " << epoch << " train " << train_loss << " val " << val_loss << '\n';
        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

/// Score of each sample, order preserved. `score` is s = sigmoid(q).
inline std::vector<ScoredSample> score_dataset(const LiteNpModel& m, std::span<const Sample> samples) {
    std::vector<ScoredSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({forward(m, s.u.previous, s.u.next).s, s.v});
    return out;
}

/// Same ranking as score_dataset but reports q, which does not saturate in
/// floating point for large |q|.
inline std::vector<ScoredSample> score_dataset_logits(const LiteNpModel& m, std::span<const Sample> samples) {
    std::vector<ScoredSample> out;
    out.reserve(samples.size());
    if (samples.empty()) return out;
    const PreparedData d = prepare(samples);
    const RVector q = detail::batch_forward(m, d.X0, d.X1).q;
    for (Eigen::Index i = 0; i < q.size(); ++i) out.push_back({q[i], d.labels[static_cast<std::size_t>(i)]});
    return out;
}

// Model file: "LITENP01", u64 M', E_B, E_C, seed, then W_A, W_B1, W_B2, W_C1,
// W_C2 row-major little-endian doubles.
inline void save_model(std::ostream& os, const LiteNpModel& m) {
    io::write_magic(os, "LITENP01");
    io::write_u64(os, static_cast<std::uint64_t>(m.m_prime));
    io::write_u64(os, static_cast<std::uint64_t>(m.e_b));
    io::write_u64(os, static_cast<std::uint64_t>(m.e_c));
    io::write_u64(os, m.seed);
    io::write_matrix(os, m.W_A);
    io::write_matrix(os, m.W_B1);
    io::write_matrix(os, m.W_B2);
    io::write_matrix(os, m.W_C1);
    io::write_matrix(os, m.W_C2);
}

inline LiteNpModel load_model(std::istream& is, const std::string& name = "model") {
    io::expect_magic(is, "LITENP01", name);
    LiteNpModel m;
    const auto mp = io::read_u64(is), eb = io::read_u64(is), ec = io::read_u64(is);
    require(mp > 0 && mp < 1 << 15 && eb > 0 && eb < 1 << 16 && ec > 0 && ec < 1 << 16,
            name + ": implausible dimensions");
    m.m_prime = static_cast<int>(mp);
    m.e_b = static_cast<int>(eb);
    m.e_c = static_cast<int>(ec);
    m.seed = io::read_u64(is);
    const Eigen::Index d = 2 * m.m_prime;
    m.W_A = io::read_matrix(is, d, d);
    m.W_B1 = io::read_matrix(is, m.e_b, d);
    m.W_B2 = io::read_matrix(is, d, m.e_b);
    m.W_C1 = io::read_matrix(is, m.e_c, d);
    m.W_C2 = io::read_matrix(is, d, m.e_c);
    return m;
}

inline void save_model(const std::string& path, const LiteNpModel& m) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "cannot open " + path + " for writing");
    save_model(os, m);
    require(static_cast<bool>(os), "write failed: " + path);
}

inline LiteNpModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "cannot open " + path);
    return load_model(is, path);
}

inline void write_history_csv(std::ostream& os, std::span<const EpochRecord> history) {
    os << "epoch,train_loss,val_loss\n";
    for (const auto& r : history)
        os << r.epoch << ',' << io::format_double(r.train_loss) << ',' << io::format_double(r.val_loss) << '\n';
}

}  // namespace csiauth
