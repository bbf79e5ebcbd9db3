#include "alt/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace alt {

namespace {

Vector affine(const LinearLayer& layer, std::span<const double> x) {
    Vector y(layer.b);
    for (std::size_t r = 0; r < layer.w.rows; ++r)
        y[r] += dot(layer.w.row(r), x);
    return y;
}

// W^T g for backpropagation through an affine map.
Vector affine_t(const LinearLayer& layer, std::span<const double> g) {
    Vector y(layer.w.cols, 0.0);
    for (std::size_t r = 0; r < layer.w.rows; ++r) {
        const double gr = g[r];
        auto row = layer.w.row(r);
        for (std::size_t c = 0; c < layer.w.cols; ++c) y[c] += gr * row[c];
    }
    return y;
}

void accumulate_affine(LinearLayer& grad, std::span<const double> g,
                       std::span<const double> x) {
    for (std::size_t r = 0; r < grad.w.rows; ++r) {
        auto row = grad.w.row(r);
        for (std::size_t c = 0; c < grad.w.cols; ++c) row[c] += g[r] * x[c];
        grad.b[r] += g[r];
    }
}

void tanh_inplace(Vector& v) {
    for (double& x : v) x = std::tanh(x);
}

LinearLayer init_layer(std::size_t out, std::size_t in, Rng& rng) {
    LinearLayer layer{Matrix(out, in), Vector(out, 0.0)};
    const double s = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.w.data) w = rng.uniform(-s, s);
    return layer;
}

LinearLayer zero_like(const LinearLayer& layer) {
    return {Matrix(layer.w.rows, layer.w.cols), Vector(layer.b.size(), 0.0)};
}

} // namespace

ModelParams make_model(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t feature_dim, std::size_t bottleneck_dim,
                       std::size_t num_classes, Rng& rng) {
    if (input_dim == 0 || hidden_dim == 0 || feature_dim == 0)
        throw std::invalid_argument("make_model: layer widths must be positive");
    if (num_classes < 2)
        throw std::invalid_argument("make_model: need at least 2 classes");
    ModelParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.feature_dim = feature_dim;
    p.bottleneck_dim = bottleneck_dim;
    p.num_classes = num_classes;
    p.l1 = init_layer(hidden_dim, input_dim, rng);
    p.l2 = init_layer(feature_dim, hidden_dim, rng);
    if (bottleneck_dim > 0)
        p.bottleneck = init_layer(bottleneck_dim, feature_dim, rng);
    p.classifier = init_layer(num_classes, p.embedding_dim(), rng);
    return p;
}

Forward forward(const ModelParams& params, std::span<const double> x) {
    if (x.size() != params.input_dim)
        throw std::invalid_argument("forward: expected input of size " +
                                    std::to_string(params.input_dim) + ", got " +
                                    std::to_string(x.size()));
    Forward f;
    f.h1 = affine(params.l1, x);
    tanh_inplace(f.h1);
    f.h2 = affine(params.l2, f.h1);
    tanh_inplace(f.h2);
    f.z = params.has_bottleneck() ? affine(params.bottleneck, f.h2) : f.h2;
    f.logits = affine(params.classifier, f.z);
    f.p = softmax(f.logits);
    return f;
}

void forward_batch(const ModelParams& params, const Matrix& inputs,
                   Matrix* z_out, Matrix* p_out) {
    if (z_out) *z_out = Matrix(inputs.rows, params.embedding_dim());
    if (p_out) *p_out = Matrix(inputs.rows, params.num_classes);
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        const Forward f = forward(params, inputs.row(i));
        if (z_out)
            std::copy(f.z.begin(), f.z.end(), z_out->row(i).begin());
        if (p_out)
            std::copy(f.p.begin(), f.p.end(), p_out->row(i).begin());
    }
}

ModelGrads zero_grads(const ModelParams& params) {
    return {zero_like(params.l1), zero_like(params.l2),
            zero_like(params.bottleneck), zero_like(params.classifier)};
}

void backward_from_logits(const ModelParams& params, std::span<const double> x,
                          const Forward& cache, std::span<const double> dlogits,
                          ModelGrads& grads) {
    accumulate_affine(grads.classifier, dlogits, cache.z);
    Vector g = affine_t(params.classifier, dlogits);
    if (params.has_bottleneck()) {
        accumulate_affine(grads.bottleneck, g, cache.h2);
        g = affine_t(params.bottleneck, g);
    }
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] *= 1.0 - cache.h2[i] * cache.h2[i];
    accumulate_affine(grads.l2, g, cache.h1);
    g = affine_t(params.l2, g);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] *= 1.0 - cache.h1[i] * cache.h1[i];
    accumulate_affine(grads.l1, g, x);
}

void backward_from_probs(const ModelParams& params, std::span<const double> x,
                         const Forward& cache, std::span<const double> dp,
                         ModelGrads& grads) {
    // Softmax Jacobian applied to dp: dlogits = p * (dp - <p, dp>).
    const double mean = dot(cache.p, dp);
    Vector dlogits(dp.size());
    for (std::size_t i = 0; i < dp.size(); ++i)
        dlogits[i] = cache.p[i] * (dp[i] - mean);
    backward_from_logits(params, x, cache, dlogits, grads);
}

namespace {

struct BatchSplit {
    std::vector<std::size_t> inner;
    std::vector<std::size_t> outlier;
};

BatchSplit split_batch(const AdaptBatch& batch) {
    BatchSplit s;
    for (std::size_t i = 0; i < batch.outlier.size(); ++i)
        (batch.outlier[i] ? s.outlier : s.inner).push_back(i);
    return s;
}

void validate_batch(const ModelParams& params, const AdaptBatch& batch) {
    const std::size_t b = batch.clean.rows;
    if (batch.clean.cols != params.input_dim || batch.strong.cols != params.input_dim)
        throw std::invalid_argument("adapt batch: view width != model input_dim");
    if (batch.strong.rows != b || batch.outlier.size() != b ||
        batch.neighbors.size() != b)
        throw std::invalid_argument("adapt batch: per-sample field lengths differ");
    if (batch.pseudo.rows != b || batch.pseudo.cols != params.num_classes)
        throw std::invalid_argument("adapt batch: pseudo-label shape mismatch");
    if (!std::isfinite(batch.lambda))
        throw std::invalid_argument("adapt batch: non-finite lambda");
}

// Loss pieces shared by value-only and gradient evaluation. strong_preds has
// valid rows only at outlier positions.
struct BatchEval {
    BatchSplit split;
    std::vector<Forward> clean;  // filled at inner positions
    std::vector<Forward> strong; // filled at outlier positions
    Matrix inner_preds;          // |inner| x C
    Matrix strong_preds;         // B x C
    LossReport report;
};

BatchEval evaluate_batch(const ModelParams& params, const AdaptBatch& batch) {
    validate_batch(params, batch);
    BatchEval e;
    e.split = split_batch(batch);
    const std::size_t c = params.num_classes;

    e.clean.resize(batch.clean.rows);
    e.inner_preds = Matrix(e.split.inner.size(), c);
    std::vector<BankNeighbors> inner_neighbors;
    inner_neighbors.reserve(e.split.inner.size());
    for (std::size_t s = 0; s < e.split.inner.size(); ++s) {
        const std::size_t i = e.split.inner[s];
        e.clean[i] = forward(params, batch.clean.row(i));
        std::copy(e.clean[i].p.begin(), e.clean[i].p.end(),
                  e.inner_preds.row(s).begin());
        inner_neighbors.push_back(batch.neighbors[i]);
    }

    e.strong.resize(batch.strong.rows);
    e.strong_preds = Matrix(batch.strong.rows, c, 1.0 / static_cast<double>(c));
    for (const std::size_t i : e.split.outlier) {
        e.strong[i] = forward(params, batch.strong.row(i));
        std::copy(e.strong[i].p.begin(), e.strong[i].p.end(),
                  e.strong_preds.row(i).begin());
    }

    const double alr = alr_loss(e.inner_preds, inner_neighbors, batch.k);
    const double sep = sep_loss(e.inner_preds, batch.dispersion_sep);
    const double air =
        air_loss(batch.pseudo, e.strong_preds, e.split.outlier, batch.hard_air);
    e.report = total_loss(alr, sep, air, batch.lambda, e.split.inner.size(),
                          e.split.outlier.size());
    return e;
}

} // namespace

LossReport adapt_loss(const ModelParams& params, const AdaptBatch& batch) {
    return evaluate_batch(params, batch).report;
}

std::pair<LossReport, ModelGrads> adapt_loss_gradients(const ModelParams& params,
                                                       const AdaptBatch& batch) {
    BatchEval e = evaluate_batch(params, batch);
    ModelGrads grads = zero_grads(params);
    const std::size_t c = params.num_classes;

    // Dispersion couples every inner pair; the per-sample gradient needs the
    // batch sum of inner predictions.
    Vector pred_sum(c, 0.0);
    for (std::size_t s = 0; s < e.inner_preds.rows; ++s)
        for (std::size_t j = 0; j < c; ++j) pred_sum[j] += e.inner_preds.at(s, j);
    const bool sep_active = e.inner_preds.rows >= 2;
    const double sep_sign = batch.dispersion_sep ? 1.0 : -1.0;

    for (std::size_t s = 0; s < e.split.inner.size(); ++s) {
        const std::size_t i = e.split.inner[s];
        Vector dp(c, 0.0);
        const BankNeighbors& nb = batch.neighbors[i];
        for (std::size_t j = 0; j < nb.preds.rows; ++j) {
            auto row = nb.preds.row(j);
            for (std::size_t cc = 0; cc < c; ++cc)
                dp[cc] -= nb.weights[j] * row[cc];
        }
        if (sep_active) {
            const double scale = 2.0 * batch.lambda * sep_sign;
            for (std::size_t cc = 0; cc < c; ++cc)
                dp[cc] += scale * (pred_sum[cc] - e.inner_preds.at(s, cc));
        }
        backward_from_probs(params, batch.clean.row(i), e.clean[i], dp, grads);
    }

    if (!e.split.outlier.empty()) {
        const double inv = 1.0 / static_cast<double>(e.split.outlier.size());
        for (const std::size_t i : e.split.outlier) {
            Vector dlogits(e.strong[i].p);
            if (batch.hard_air) {
                dlogits[argmax(batch.pseudo.row(i))] -= 1.0;
            } else {
                for (std::size_t cc = 0; cc < c; ++cc)
                    dlogits[cc] -= batch.pseudo.at(i, cc);
            }
            for (double& g : dlogits) g *= inv;
            backward_from_logits(params, batch.strong.row(i), e.strong[i], dlogits,
                                 grads);
        }
    }

    return {e.report, std::move(grads)};
}

double supervised_loss_gradients(const ModelParams& params, const Matrix& inputs,
                                 std::span<const std::size_t> labels,
                                 double smoothing, ModelGrads& grads) {
    if (labels.size() != inputs.rows)
        throw std::invalid_argument("supervised_loss_gradients: label count mismatch");
    if (smoothing < 0.0 || smoothing >= 1.0)
        throw std::invalid_argument("supervised_loss_gradients: smoothing outside [0,1)");
    if (inputs.rows == 0) return 0.0;
    const std::size_t c = params.num_classes;
    const double inv = 1.0 / static_cast<double>(inputs.rows);
    double loss = 0.0;
    Vector target(c);
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        if (labels[i] >= c)
            throw std::out_of_range("supervised_loss_gradients: label " +
                                    std::to_string(labels[i]) + " out of range");
        const Forward f = forward(params, inputs.row(i));
        std::fill(target.begin(), target.end(), smoothing / static_cast<double>(c));
        target[labels[i]] += 1.0 - smoothing;
        loss += cross_entropy(target, f.p) * inv;
        Vector dlogits(f.p);
        for (std::size_t cc = 0; cc < c; ++cc)
            dlogits[cc] = (dlogits[cc] - target[cc]) * inv;
        backward_from_logits(params, inputs.row(i), f, dlogits, grads);
    }
    return loss;
}

OptimizerState make_optimizer(const ModelParams& params, std::size_t max_iter,
                              double lr, double momentum, double weight_decay) {
    if (max_iter == 0)
        throw std::invalid_argument("make_optimizer: max_iter must be positive");
    OptimizerState opt;
    opt.velocity = zero_grads(params);
    opt.max_iter = max_iter;
    opt.lr = lr;
    opt.momentum = momentum;
    opt.weight_decay = weight_decay;
    return opt;
}

namespace {

void sgd_layer(LinearLayer& layer, const LinearLayer& grad, LinearLayer& velocity,
               const OptimizerState& opt, double group_scale) {
    if (grad.w.rows != layer.w.rows || grad.w.cols != layer.w.cols ||
        grad.b.size() != layer.b.size())
        throw std::invalid_argument("sgd_update: gradient shape mismatch");
    const double step = opt.lr * group_scale;
    auto apply = [&](double& theta, const double g, double& v) {
        v = opt.momentum * v + (g + opt.weight_decay * theta);
        if (step != 0.0) theta -= step * v;
    };
    for (std::size_t i = 0; i < layer.w.data.size(); ++i)
        apply(layer.w.data[i], grad.w.data[i], velocity.w.data[i]);
    for (std::size_t i = 0; i < layer.b.size(); ++i)
        apply(layer.b[i], grad.b[i], velocity.b[i]);
}

} // namespace

void sgd_update(ModelParams& params, const ModelGrads& grads, OptimizerState& opt) {
    sgd_layer(params.l1, grads.l1, opt.velocity.l1, opt, params.backbone_lr_scale);
    sgd_layer(params.l2, grads.l2, opt.velocity.l2, opt, params.backbone_lr_scale);
    sgd_layer(params.bottleneck, grads.bottleneck, opt.velocity.bottleneck, opt,
              params.head_lr_scale);
    sgd_layer(params.classifier, grads.classifier, opt.velocity.classifier, opt,
              params.head_lr_scale);
    ++opt.t;
}

double lambda_schedule(std::size_t iter, std::size_t max_iter, double beta_sched) {
    if (max_iter == 0)
        throw std::invalid_argument("lambda_schedule: max_iter must be positive");
    if (iter > max_iter)
        throw std::invalid_argument("lambda_schedule: iter beyond max_iter");
    if (beta_sched < 0.0)
        throw std::invalid_argument("lambda_schedule: negative exponent");
    const double progress =
        static_cast<double>(iter) / static_cast<double>(max_iter);
    return std::pow(1.0 + 10.0 * progress, -beta_sched);
}

} // namespace alt
