#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xrr/core.hpp"
#include "xrr/retriever.hpp"

namespace xrr {

/// One contrastive example: query features, a positive document, and M
/// mined hard negatives (feature vectors plus ids for deduplication).
struct TrainingInstance {
    std::string query_id;
    std::vector<double> query_features;
    std::string positive_id;
    std::vector<double> positive_features;
    std::vector<std::string> negative_ids;
    std::vector<std::vector<double>> negative_features;

    /// Throws FormatError when the positive appears among the negatives
    /// or the id/feature lists disagree.
    void validate() const;
};

using Matrix = std::vector<std::vector<double>>;  // rows = output dim

/// Linear map over fixed features followed by unit normalization.
class ToyEncoder {
public:
    ToyEncoder(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);
    explicit ToyEncoder(Matrix weights);

    /// W x, unnormalized.
    std::vector<double> project(const std::vector<double>& features) const;

    /// normalize(W x); throws on a zero-norm projection.
    EmbeddingVector encode(const std::vector<double>& features) const;

    std::size_t in_dim() const { return in_dim_; }
    std::size_t out_dim() const { return weights_.size(); }
    const Matrix& weights() const { return weights_; }
    Matrix& weights() { return weights_; }

private:
    std::size_t in_dim_;
    Matrix weights_;
};

/// InfoNCE over cosine scores at temperature tau, computed with
/// max-subtraction so small tau cannot overflow.
double infonce_loss(const EmbeddingVector& query, const EmbeddingVector& positive,
                    const std::vector<EmbeddingVector>& negatives, double tau);

/// Negative pool for one batch member: its own hard negatives plus the
/// positives of the other instances (skipping ids equal to its own
/// positive). Returned as feature vectors.
std::vector<std::vector<double>> pooled_negatives(const std::vector<TrainingInstance>& batch,
                                                  std::size_t instance);

/// Mean InfoNCE over the batch with pooled negatives.
double batch_loss(const ToyEncoder& encoder, const std::vector<TrainingInstance>& batch,
                  double tau);

/// Analytic gradient of batch_loss with respect to the encoder weights.
Matrix infonce_grad(const ToyEncoder& encoder, const std::vector<TrainingInstance>& batch,
                    double tau);

/// Top-M BM25-ranked documents with relevance grade 0 for the query, in
/// rank order. Shortfalls return what exists and record a warning.
std::vector<std::string> mine_hard_negatives(const Bm25Index& index, const Query& query,
                                             const Qrels& qrels, int m,
                                             std::vector<std::string>* warnings = nullptr);

struct TrainResult {
    ToyEncoder encoder;
    std::vector<double> trace;  // loss before each update
};

/// Plain gradient descent. batch_size 0 treats the instance list as one
/// batch; otherwise consecutive chunks of batch_size are stepped through
/// in order each step. Throws on a non-finite loss.
TrainResult train_toy(ToyEncoder encoder, const std::vector<TrainingInstance>& instances,
                      double tau, int steps, double learning_rate, int batch_size = 0);

} // namespace xrr
