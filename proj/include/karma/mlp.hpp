#ifndef KARMA_MLP_HPP
#define KARMA_MLP_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "karma/core_model.hpp"

namespace karma::mlp {

// Weights are stored in x (in x out), row-major: w[i * out + j].
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> w;
    std::vector<double> b;

    bool operator==(const DenseLayer&) const = default;
};

/// Fully connected network: ReLU on hidden layers, identity on the output.
struct MlpModel {
    std::vector<std::size_t> layer_dims;
    std::vector<DenseLayer> layers;
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t parameter_count() const;

    bool operator==(const MlpModel&) const = default;
};

struct TrainOpts {
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t epochs = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Sample {
    FeatureVector x;
    FeatureVector y;
};

// Post-activation values per layer; activations[0] is the input.
struct ForwardCache {
    std::vector<FeatureVector> activations;
};

struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static Gradients zeros_like(const MlpModel& m);
    void set_zero();
    void scale(double k);
};

// Glorot-uniform weights, zero biases; deterministic per seed.
MlpModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

FeatureVector forward(const MlpModel& m, std::span<const double> x);
FeatureVector forward(const MlpModel& m, std::span<const double> x, ForwardCache& cache);

// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
// Returns d(loss)/d(input).
FeatureVector backward(const MlpModel& m, const ForwardCache& cache, std::span<const double> grad_output,
                       Gradients& grads);

// (1/N) * sum_i ||m(x_i) - y_i||^2
double mse_loss(const MlpModel& m, std::span<const Sample> batch);

// Gradient of the single-sample squared error ||m(x) - y||^2.
Gradients mse_gradient(const MlpModel& m, std::span<const double> x, std::span<const double> y);

class AdamOptimizer {
public:
    AdamOptimizer(const MlpModel& m, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);

    void step(MlpModel& m, const Gradients& g);
    void set_learning_rate(double lr) { lr_ = lr; }
    std::uint64_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    Gradients m_, v_;
};

/// Owns the optimizer state for repeated MSE steps on one model.
class MlpTrainer {
public:
    MlpTrainer(MlpModel& model, const TrainOpts& opts);

    // One Adam step on the batch MSE; returns the loss before the update.
    // Throws on NaN inputs or dimension mismatch.
    double train_step(std::span<const Sample> batch);

private:
    MlpModel& model_;
    AdamOptimizer adam_;
    Gradients grads_;
};

using GradientFn = std::function<Gradients(const MlpModel&, std::span<const double>, std::span<const double>)>;

// Max relative error between `analytic` and central differences of the
// squared error over every parameter.
double gradient_check(const MlpModel& m, std::span<const double> x, std::span<const double> y, double h,
                      const GradientFn& analytic = mse_gradient);

void save_model(std::ostream& out, const MlpModel& m);
MlpModel load_model(std::istream& in);

}  // namespace karma::mlp

#endif  // KARMA_MLP_HPP
