#pragma once

// The adapted network and its training machinery: a small tanh MLP with an
// optional affine bottleneck, hand-written reverse-mode gradients for the
// adaptation objective, momentum SGD with per-group learning-rate scales,
// and the polynomial trade-off schedule.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "alt/numerics.hpp"
#include "alt/objectives.hpp"
#include "alt/rng.hpp"

namespace alt {

struct LinearLayer {
    Matrix w; // out x in
    Vector b; // out

    bool operator==(const LinearLayer&) const = default;
};

// Network: x -> tanh(l1) -> tanh(l2) -> [bottleneck affine] -> classifier.
// The embedding z fed to the classifier (and stored in the feature bank) is
// the bottleneck output when bottleneck_dim > 0, the l2 activation otherwise.
struct ModelParams {
    std::size_t input_dim = 2;
    std::size_t hidden_dim = 64;
    std::size_t feature_dim = 32;
    std::size_t bottleneck_dim = 16; // 0 disables the bottleneck
    std::size_t num_classes = 2;

    LinearLayer l1;
    LinearLayer l2;
    LinearLayer bottleneck;
    LinearLayer classifier;

    // Update scales: l1 + l2 form the backbone group, bottleneck + classifier
    // the head group. The head trains 10x slower than the backbone by
    // default; see the config reference for the alternate convention.
    double backbone_lr_scale = 0.05;
    double head_lr_scale = 0.005;

    bool has_bottleneck() const { return bottleneck_dim > 0; }

    /// Width of z: the classifier input and the bank's column count.
    std::size_t embedding_dim() const {
        return has_bottleneck() ? bottleneck_dim : feature_dim;
    }

    bool operator==(const ModelParams&) const = default;
};

/// Fresh parameters with uniform fan-balanced weights and zero biases.
/// Draw order is fixed (l1, l2, bottleneck, classifier) for reproducibility.
ModelParams make_model(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t feature_dim, std::size_t bottleneck_dim,
                       std::size_t num_classes, Rng& rng);

// Per-sample activations kept for reverse mode. h1/h2 are post-tanh.
struct Forward {
    Vector h1;
    Vector h2;
    Vector z;      // embedding (raw, un-normalized)
    Vector logits;
    Vector p;      // softmax(logits)
};

/// Single forward pass. Throws on input dimension mismatch.
Forward forward(const ModelParams& params, std::span<const double> x);

/// Forward over every row of inputs. Either output may be null to skip it;
/// z_out gets N x embedding_dim raw embeddings, p_out gets N x C probabilities.
void forward_batch(const ModelParams& params, const Matrix& inputs,
                   Matrix* z_out, Matrix* p_out);

// Gradient (or velocity) storage, shaped exactly like the parameters.
struct ModelGrads {
    LinearLayer l1;
    LinearLayer l2;
    LinearLayer bottleneck;
    LinearLayer classifier;
};

ModelGrads zero_grads(const ModelParams& params);

/// Accumulates d(loss)/d(params) into grads for one sample, given the
/// gradient w.r.t. the probability vector p.
void backward_from_probs(const ModelParams& params, std::span<const double> x,
                         const Forward& cache, std::span<const double> dp,
                         ModelGrads& grads);

/// Same, given the gradient w.r.t. the logits.
void backward_from_logits(const ModelParams& params, std::span<const double> x,
                          const Forward& cache, std::span<const double> dlogits,
                          ModelGrads& grads);

// One adaptation batch with every non-differentiated quantity frozen in:
// bank neighbor predictions and weights, the inner/outlier split, and the
// pseudo-label snapshot of the weak-view predictions. Loss evaluation at any
// nearby parameter point reuses these constants, which is what makes the
// analytic gradients finite-difference checkable.
struct AdaptBatch {
    Matrix clean;                       // B x input_dim, un-augmented inputs
    Matrix strong;                      // B x input_dim, strong views
    std::vector<BankNeighbors> neighbors; // per sample; consulted for inner rows
    std::vector<std::uint8_t> outlier;  // per sample; 1 routes to consistency
    Matrix pseudo;                      // B x C frozen weak-view probabilities
    double lambda = 1.0;
    std::size_t k = 0;                  // expected neighbor count per inner row
    bool hard_air = true;
    bool dispersion_sep = true;
};

/// Objective value at params: clustering + consistency + lambda * dispersion.
/// Inner rows contribute the clustering and dispersion terms through their
/// clean view; outlier rows contribute the consistency term through their
/// strong view against the frozen pseudo-labels.
LossReport adapt_loss(const ModelParams& params, const AdaptBatch& batch);

/// Loss plus d(total)/d(params) in one reverse pass.
std::pair<LossReport, ModelGrads> adapt_loss_gradients(const ModelParams& params,
                                                       const AdaptBatch& batch);

/// Mean label-smoothed cross entropy over the batch, with gradients
/// accumulated into grads. Used for supervised source training.
double supervised_loss_gradients(const ModelParams& params, const Matrix& inputs,
                                 std::span<const std::size_t> labels,
                                 double smoothing, ModelGrads& grads);

struct OptimizerState {
    ModelGrads velocity;
    std::size_t t = 0;
    std::size_t max_iter = 1;
    double lr = 0.001;
    double momentum = 0.9;
    double weight_decay = 0.005;
};

OptimizerState make_optimizer(const ModelParams& params, std::size_t max_iter,
                              double lr, double momentum, double weight_decay);

/// Classic momentum step per parameter group g with scale s_g:
///   v <- momentum * v + (grad + weight_decay * theta)
///   theta <- theta - lr * s_g * v
/// Weight decay enters the velocity, not the raw step. lr * s_g = 0 leaves
/// the group's parameters bit-identical. Increments t.
void sgd_update(ModelParams& params, const ModelGrads& grads, OptimizerState& opt);

/// Trade-off weight (1 + 10 * iter/max_iter)^(-beta_sched); 1 at iter = 0,
/// non-increasing in iter. Throws if max_iter = 0 or iter > max_iter.
double lambda_schedule(std::size_t iter, std::size_t max_iter, double beta_sched);

} // namespace alt
