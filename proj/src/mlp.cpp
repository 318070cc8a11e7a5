#include "karma/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "karma/rng.hpp"
#include "karma/text_format.hpp"

namespace karma::mlp {

namespace {

constexpr const char* kMagic = "karma-mlp";
constexpr int kFormatVersion = 1;

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw invalid_argument(std::string("non-finite value in ") + what);
    }
}

void dense_forward(const DenseLayer& layer, std::span<const double> x, FeatureVector& y, bool relu) {
    y.assign(layer.b.begin(), layer.b.end());
    const double* w = layer.w.data();
    for (std::size_t i = 0; i < layer.in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = w + i * layer.out;
        for (std::size_t j = 0; j < layer.out; ++j) y[j] += xi * row[j];
    }
    if (relu) {
        for (double& v : y) v = v > 0.0 ? v : 0.0;
    }
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

void TrainOpts::validate() const {
    if (!(learning_rate > 0.0)) throw invalid_argument("learning_rate must be > 0");
    if (batch_size < 1) throw invalid_argument("batch_size must be >= 1");
}

Gradients Gradients::zeros_like(const MlpModel& m) {
    Gradients g;
    for (const auto& l : m.layers) {
        g.w.emplace_back(l.w.size(), 0.0);
        g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

void Gradients::set_zero() {
    for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
}

void Gradients::scale(double k) {
    for (auto& v : w)
        for (double& x : v) x *= k;
    for (auto& v : b)
        for (double& x : v) x *= k;
}

MlpModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw invalid_argument("an MLP needs at least 2 layer dims");
    for (auto d : layer_dims) {
        if (d < 1) throw invalid_argument("layer dims must be >= 1");
    }
    MlpModel m;
    m.layer_dims = layer_dims;
    m.seed = seed;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        DenseLayer layer;
        layer.in = layer_dims[l];
        layer.out = layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        layer.w.resize(layer.in * layer.out);
        for (double& w : layer.w) w = rng.uniform(-limit, limit);
        layer.b.assign(layer.out, 0.0);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

FeatureVector forward(const MlpModel& m, std::span<const double> x) {
    ForwardCache cache;
    return forward(m, x, cache);
}

FeatureVector forward(const MlpModel& m, std::span<const double> x, ForwardCache& cache) {
    if (x.size() != m.input_dim()) {
        throw invalid_argument("input has " + std::to_string(x.size()) + " features, model expects " +
                               std::to_string(m.input_dim()));
    }
    cache.activations.resize(m.layers.size() + 1);
    cache.activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const bool hidden = l + 1 < m.layers.size();
        dense_forward(m.layers[l], cache.activations[l], cache.activations[l + 1], hidden);
    }
    return cache.activations.back();
}

FeatureVector backward(const MlpModel& m, const ForwardCache& cache, std::span<const double> grad_output,
                       Gradients& grads) {
    if (grad_output.size() != m.output_dim()) throw invalid_argument("output gradient has wrong size");
    FeatureVector delta(grad_output.begin(), grad_output.end());
    FeatureVector prev;
    for (std::size_t l = m.layers.size(); l-- > 0;) {
        const auto& layer = m.layers[l];
        const auto& a = cache.activations[l];
        auto& gw = grads.w[l];
        auto& gb = grads.b[l];
        for (std::size_t j = 0; j < layer.out; ++j) gb[j] += delta[j];
        prev.assign(layer.in, 0.0);
        for (std::size_t i = 0; i < layer.in; ++i) {
            const double ai = a[i];
            const double* row = layer.w.data() + i * layer.out;
            double* grow = gw.data() + i * layer.out;
            double acc = 0.0;
            for (std::size_t j = 0; j < layer.out; ++j) {
                grow[j] += ai * delta[j];
                acc += row[j] * delta[j];
            }
            // Hidden activations are ReLU outputs: derivative is 1 where positive.
            prev[i] = (l > 0 && ai <= 0.0) ? 0.0 : acc;
        }
        delta.swap(prev);
    }
    return delta;
}

double mse_loss(const MlpModel& m, std::span<const Sample> batch) {
    if (batch.empty()) throw invalid_argument("empty batch");
    double total = 0.0;
    for (const auto& s : batch) {
        const auto out = forward(m, s.x);
        if (s.y.size() != out.size()) throw invalid_argument("target has wrong size");
        for (std::size_t j = 0; j < out.size(); ++j) total += (out[j] - s.y[j]) * (out[j] - s.y[j]);
    }
    return total / static_cast<double>(batch.size());
}

Gradients mse_gradient(const MlpModel& m, std::span<const double> x, std::span<const double> y) {
    ForwardCache cache;
    const auto out = forward(m, x, cache);
    if (y.size() != out.size()) throw invalid_argument("target has wrong size");
    FeatureVector g(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) g[j] = 2.0 * (out[j] - y[j]);
    auto grads = Gradients::zeros_like(m);
    backward(m, cache, g, grads);
    return grads;
}

AdamOptimizer::AdamOptimizer(const MlpModel& m, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(Gradients::zeros_like(m)),
      v_(Gradients::zeros_like(m)) {}

void AdamOptimizer::step(MlpModel& model, const Gradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](std::vector<double>& p, const std::vector<double>& grad, std::vector<double>& m1,
                      std::vector<double>& m2) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            m1[k] = beta1_ * m1[k] + (1.0 - beta1_) * grad[k];
            m2[k] = beta2_ * m2[k] + (1.0 - beta2_) * grad[k] * grad[k];
            p[k] -= lr_ * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps_);
        }
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        update(model.layers[l].w, g.w[l], m_.w[l], v_.w[l]);
        update(model.layers[l].b, g.b[l], m_.b[l], v_.b[l]);
    }
}

MlpTrainer::MlpTrainer(MlpModel& model, const TrainOpts& opts)
    : model_(model),
      adam_((opts.validate(), model), opts.learning_rate, opts.beta1, opts.beta2, opts.epsilon),
      grads_(Gradients::zeros_like(model)) {}

double MlpTrainer::train_step(std::span<const Sample> batch) {
    if (batch.empty()) throw invalid_argument("empty batch");
    for (const auto& s : batch) {
        check_finite(s.x, "batch input");
        check_finite(s.y, "batch target");
        if (s.y.size() != model_.output_dim()) throw invalid_argument("target has wrong size");
    }
    grads_.set_zero();
    ForwardCache cache;
    FeatureVector g;
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const auto& s : batch) {
        const auto out = forward(model_, s.x, cache);
        g.resize(out.size());
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double e = out[j] - s.y[j];
            loss += e * e;
            g[j] = 2.0 * e * inv_n;
        }
        backward(model_, cache, g, grads_);
    }
    adam_.step(model_, grads_);
    return loss * inv_n;
}

double gradient_check(const MlpModel& m, std::span<const double> x, std::span<const double> y, double h,
                      const GradientFn& analytic) {
    if (!(h > 0.0)) throw invalid_argument("finite-difference step must be > 0");
    const Gradients g = analytic(m, x, y);
    MlpModel probe = m;
    auto loss_at = [&](const MlpModel& model) {
        const auto out = forward(model, x);
        double l = 0.0;
        for (std::size_t j = 0; j < out.size(); ++j) l += (out[j] - y[j]) * (out[j] - y[j]);
        return l;
    };
    double worst = 0.0;
    auto compare = [&](double a, double n) {
        const double diff = std::abs(a - n);
        if (diff == 0.0) return;
        const double denom = std::max(std::abs(a) + std::abs(n), 1e-8);
        worst = std::max(worst, diff / denom);
    };
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        for (int which = 0; which < 2; ++which) {
            auto& params = which == 0 ? probe.layers[l].w : probe.layers[l].b;
            const auto& grad = which == 0 ? g.w[l] : g.b[l];
            for (std::size_t k = 0; k < params.size(); ++k) {
                const double orig = params[k];
                params[k] = orig + h;
                const double up = loss_at(probe);
                params[k] = orig - h;
                const double down = loss_at(probe);
                params[k] = orig;
                compare(grad[k], (up - down) / (2.0 * h));
            }
        }
    }
    return worst;
}

void save_model(std::ostream& out, const MlpModel& m) {
    out << kMagic << ' ' << kFormatVersion << '\n';
    out << "dims " << m.layer_dims.size();
    for (auto d : m.layer_dims) out << ' ' << d;
    out << '\n' << "seed " << m.seed << '\n';
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        out << 'W' << l;
        for (double w : m.layers[l].w) out << ' ' << text::format_double(w);
        out << '\n' << 'b' << l;
        for (double b : m.layers[l].b) out << ' ' << text::format_double(b);
        out << '\n';
    }
}

MlpModel load_model(std::istream& in) {
    std::string line;
    auto next_fields = [&](const std::string& tag) {
        if (!std::getline(in, line)) throw io_error("truncated model file, expected " + tag);
        auto f = text::split_ws(line);
        if (f.empty() || f[0] != tag) throw io_error("malformed model file, expected " + tag);
        return f;
    };
    auto header = next_fields(kMagic);
    if (header.size() != 2 || text::parse_int(header[1]) != kFormatVersion) {
        throw io_error("unsupported model format version");
    }
    auto dims = next_fields("dims");
    const auto count = static_cast<std::size_t>(text::parse_int(dims.at(1)));
    if (dims.size() != count + 2) throw io_error("malformed dims line");
    std::vector<std::size_t> layer_dims;
    for (std::size_t i = 0; i < count; ++i) layer_dims.push_back(static_cast<std::size_t>(text::parse_int(dims[i + 2])));
    auto seed = next_fields("seed");
    MlpModel m = init_model(layer_dims, 0);
    m.seed = static_cast<std::uint64_t>(std::stoull(std::string(seed.at(1))));
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto w = next_fields("W" + std::to_string(l));
        if (w.size() != m.layers[l].w.size() + 1) throw io_error("weight count mismatch in layer " + std::to_string(l));
        for (std::size_t k = 0; k < m.layers[l].w.size(); ++k) m.layers[l].w[k] = text::parse_double(w[k + 1]);
        auto b = next_fields("b" + std::to_string(l));
        if (b.size() != m.layers[l].b.size() + 1) throw io_error("bias count mismatch in layer " + std::to_string(l));
        for (std::size_t k = 0; k < m.layers[l].b.size(); ++k) m.layers[l].b[k] = text::parse_double(b[k + 1]);
    }
    return m;
}

}  // namespace karma::mlp
