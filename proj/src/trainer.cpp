#include "xrr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xrr/error.hpp"

namespace xrr {

void TrainingInstance::validate() const {
    if (query_features.empty()) throw FormatError("training instance has no query features");
    if (positive_features.size() != query_features.size()) {
        throw FormatError("positive features disagree with query feature dimension");
    }
    if (negative_ids.size() != negative_features.size()) {
        throw FormatError("negative ids and features disagree in count");
    }
    for (std::size_t j = 0; j < negative_ids.size(); ++j) {
        if (negative_ids[j] == positive_id) {
            throw FormatError("positive document '" + positive_id +
                              "' appears among the negatives");
        }
        if (negative_features[j].size() != query_features.size()) {
            throw FormatError("negative features disagree with query feature dimension");
        }
    }
}

// ---------------------------------------------------------------------------
// ToyEncoder

ToyEncoder::ToyEncoder(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed)
    : in_dim_(in_dim) {
    if (in_dim == 0 || out_dim == 0) throw ConfigError("encoder dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> init(0.0, 1.0 / std::sqrt(static_cast<double>(in_dim)));
    weights_.assign(out_dim, std::vector<double>(in_dim));
    for (auto& row : weights_) {
        for (double& w : row) w = init(rng);
    }
}

ToyEncoder::ToyEncoder(Matrix weights) : weights_(std::move(weights)) {
    if (weights_.empty() || weights_.front().empty()) {
        throw ConfigError("encoder weights must be a non-empty matrix");
    }
    in_dim_ = weights_.front().size();
    for (const auto& row : weights_) {
        if (row.size() != in_dim_) throw ConfigError("encoder weight rows have ragged sizes");
        for (double w : row) {
            if (!std::isfinite(w)) throw ConfigError("encoder weights must be finite");
        }
    }
}

std::vector<double> ToyEncoder::project(const std::vector<double>& features) const {
    if (features.size() != in_dim_) {
        throw FormatError("feature vector has dimension " + std::to_string(features.size()) +
                          ", encoder expects " + std::to_string(in_dim_));
    }
    std::vector<double> out(weights_.size(), 0.0);
    for (std::size_t a = 0; a < weights_.size(); ++a) {
        const auto& row = weights_[a];
        double sum = 0;
        for (std::size_t b = 0; b < in_dim_; ++b) sum += row[b] * features[b];
        out[a] = sum;
    }
    return out;
}

EmbeddingVector ToyEncoder::encode(const std::vector<double>& features) const {
    EmbeddingVector raw(project(features));
    if (raw.norm() == 0.0) throw FormatError("encoder produced a zero-norm embedding");
    return raw.normalized();
}

// ---------------------------------------------------------------------------
// InfoNCE loss

double infonce_loss(const EmbeddingVector& query, const EmbeddingVector& positive,
                    const std::vector<EmbeddingVector>& negatives, double tau) {
    if (tau <= 0) throw ConfigError("tau must be positive");
    if (negatives.empty()) throw FormatError("InfoNCE needs at least one negative");

    double z_pos = cosine_score(query, positive) / tau;
    std::vector<double> z_neg;
    z_neg.reserve(negatives.size());
    double z_max = z_pos;
    for (const EmbeddingVector& neg : negatives) {
        double z = cosine_score(query, neg) / tau;
        z_neg.push_back(z);
        z_max = std::max(z_max, z);
    }

    if (z_pos == z_max) {
        // log1p keeps precision when the positive dominates and the loss
        // is far below 1.
        double sum = 0;
        for (double z : z_neg) sum += std::exp(z - z_pos);
        return std::log1p(sum);
    }
    double sum = std::exp(z_pos - z_max);
    for (double z : z_neg) sum += std::exp(z - z_max);
    return (z_max - z_pos) + std::log(sum);
}

// ---------------------------------------------------------------------------
// Batch loss and gradient

std::vector<std::vector<double>> pooled_negatives(const std::vector<TrainingInstance>& batch,
                                                  std::size_t instance) {
    const TrainingInstance& self = batch[instance];
    std::vector<std::vector<double>> pool = self.negative_features;
    for (std::size_t other = 0; other < batch.size(); ++other) {
        if (other == instance) continue;
        if (batch[other].positive_id == self.positive_id) continue;
        pool.push_back(batch[other].positive_features);
    }
    return pool;
}

double batch_loss(const ToyEncoder& encoder, const std::vector<TrainingInstance>& batch,
                  double tau) {
    if (batch.empty()) throw FormatError("batch is empty");
    double total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        batch[i].validate();
        EmbeddingVector q = encoder.encode(batch[i].query_features);
        EmbeddingVector pos = encoder.encode(batch[i].positive_features);
        std::vector<EmbeddingVector> negs;
        for (const auto& features : pooled_negatives(batch, i)) {
            negs.push_back(encoder.encode(features));
        }
        total += infonce_loss(q, pos, negs, tau);
    }
    return total / static_cast<double>(batch.size());
}

namespace {

/// dW += scale * outer(g, x).
void accumulate_outer(Matrix& grad, const std::vector<double>& g, const std::vector<double>& x,
                      double scale) {
    for (std::size_t a = 0; a < g.size(); ++a) {
        double ga = g[a] * scale;
        if (ga == 0) continue;
        auto& row = grad[a];
        for (std::size_t b = 0; b < x.size(); ++b) row[b] += ga * x[b];
    }
}

struct Encoded {
    std::vector<double> raw;   // W x
    EmbeddingVector unit;      // normalized
    double norm;
};

Encoded encode_full(const ToyEncoder& encoder, const std::vector<double>& features) {
    std::vector<double> raw = encoder.project(features);
    EmbeddingVector v(raw);
    double norm = v.norm();
    if (norm == 0.0) throw FormatError("encoder produced a zero-norm embedding");
    return {std::move(raw), v.normalized(), norm};
}

} // namespace

Matrix infonce_grad(const ToyEncoder& encoder, const std::vector<TrainingInstance>& batch,
                    double tau) {
    if (batch.empty()) throw FormatError("batch is empty");
    if (tau <= 0) throw ConfigError("tau must be positive");

    Matrix grad(encoder.out_dim(), std::vector<double>(encoder.in_dim(), 0.0));
    double inv_batch = 1.0 / static_cast<double>(batch.size());

    for (std::size_t i = 0; i < batch.size(); ++i) {
        batch[i].validate();
        const TrainingInstance& inst = batch[i];
        Encoded q = encode_full(encoder, inst.query_features);

        std::vector<std::vector<double>> doc_features = pooled_negatives(batch, i);
        doc_features.insert(doc_features.begin(), inst.positive_features);
        if (doc_features.size() < 2) throw FormatError("InfoNCE needs at least one negative");

        std::vector<Encoded> docs;
        docs.reserve(doc_features.size());
        std::vector<double> z(doc_features.size());
        double z_max = -1e300;
        for (std::size_t d = 0; d < doc_features.size(); ++d) {
            docs.push_back(encode_full(encoder, doc_features[d]));
            double s = 0;
            for (std::size_t a = 0; a < encoder.out_dim(); ++a) {
                s += q.unit[a] * docs[d].unit[a];
            }
            z[d] = s / tau;
            z_max = std::max(z_max, z[d]);
        }
        double denom = 0;
        for (double zd : z) denom += std::exp(zd - z_max);
        std::vector<double> dL_ds(doc_features.size());
        for (std::size_t d = 0; d < doc_features.size(); ++d) {
            double p = std::exp(z[d] - z_max) / denom;
            dL_ds[d] = (d == 0 ? p - 1.0 : p) / tau;
        }

        // Query-side chain: sum over documents first, one outer product.
        std::vector<double> g_query(encoder.out_dim(), 0.0);
        for (std::size_t d = 0; d < doc_features.size(); ++d) {
            double s = z[d] * tau;
            for (std::size_t a = 0; a < encoder.out_dim(); ++a) {
                g_query[a] += dL_ds[d] * (docs[d].unit[a] - s * q.unit[a]) / q.norm;
            }
        }
        accumulate_outer(grad, g_query, inst.query_features, inv_batch);

        // Document-side chains.
        std::vector<double> g_doc(encoder.out_dim());
        for (std::size_t d = 0; d < doc_features.size(); ++d) {
            double s = z[d] * tau;
            for (std::size_t a = 0; a < encoder.out_dim(); ++a) {
                g_doc[a] = dL_ds[d] * (q.unit[a] - s * docs[d].unit[a]) / docs[d].norm;
            }
            accumulate_outer(grad, g_doc, doc_features[d], inv_batch);
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Hard-negative mining

std::vector<std::string> mine_hard_negatives(const Bm25Index& index, const Query& query,
                                             const Qrels& qrels, int m,
                                             std::vector<std::string>* warnings) {
    if (m < 0) throw ConfigError("negative count must be non-negative");
    if (m == 0) return {};
    RankedList ranking =
        index.search(query.retrieval_text(), static_cast<int>(index.doc_count()), query.id);
    std::vector<std::string> mined;
    for (const ScoredDoc& entry : ranking.entries()) {
        if (qrels.grade(query.id, entry.doc_id) > 0) continue;
        mined.push_back(entry.doc_id);
        if (mined.size() == static_cast<std::size_t>(m)) break;
    }
    if (mined.size() < static_cast<std::size_t>(m) && warnings) {
        warnings->push_back("query '" + query.id + "': only " + std::to_string(mined.size()) +
                            " of " + std::to_string(m) + " hard negatives available");
    }
    return mined;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train_toy(ToyEncoder encoder, const std::vector<TrainingInstance>& instances,
                      double tau, int steps, double learning_rate, int batch_size) {
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (instances.empty()) throw FormatError("no training instances");
    if (batch_size < 0) throw ConfigError("batch_size must be non-negative");

    std::size_t chunk = batch_size == 0 ? instances.size()
                                        : static_cast<std::size_t>(batch_size);
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(steps));

    for (int step = 0; step < steps; ++step) {
        double loss = batch_loss(encoder, instances, tau);
        if (!std::isfinite(loss)) {
            throw Error("training diverged: non-finite loss at step " + std::to_string(step));
        }
        trace.push_back(loss);
        for (std::size_t start = 0; start < instances.size(); start += chunk) {
            std::size_t end = std::min(start + chunk, instances.size());
            std::vector<TrainingInstance> batch(instances.begin() + start,
                                                instances.begin() + end);
            Matrix grad = infonce_grad(encoder, batch, tau);
            for (std::size_t a = 0; a < grad.size(); ++a) {
                for (std::size_t b = 0; b < grad[a].size(); ++b) {
                    encoder.weights()[a][b] -= learning_rate * grad[a][b];
                }
            }
        }
    }
    return {std::move(encoder), std::move(trace)};
}

} // namespace xrr
