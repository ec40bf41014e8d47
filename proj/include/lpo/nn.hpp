#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lpo/rng.hpp"

namespace lpo {

enum class Act { Identity, Tanh, Relu };

std::string act_name(Act a);
Act act_from_name(const std::string& s);

struct Layer {
    int in = 0;
    int out = 0;
    bool has_bias = true;
    Act act = Act::Identity;
    std::vector<double> w; // out x in, row-major
    std::vector<double> b; // empty when has_bias is false
};

struct Mlp {
    std::vector<Layer> layers;

    int input_dim() const { return layers.front().in; }
    int output_dim() const { return layers.back().out; }
    std::size_t param_count() const;

    // widths = {in, h1, ..., out}; acts has one entry per layer.
    // Initialization is uniform in +-sqrt(6/(fan_in+fan_out)).
    static Mlp make(const std::vector<int>& widths, const std::vector<Act>& acts,
                    bool bias, Rng& rng);
};

struct ForwardCache {
    std::vector<std::vector<double>> inputs; // input to each layer
    std::vector<std::vector<double>> pre;    // pre-activation per layer
};

std::vector<double> forward(const Mlp& net, std::span<const double> input);
std::vector<double> forward(const Mlp& net, std::span<const double> input,
                            ForwardCache& cache);

struct MlpGrads {
    std::vector<std::vector<double>> dw, db;
    std::vector<double> dinput;

    static MlpGrads zeros_like(const Mlp& net);
    void add(const MlpGrads& other);
    void scale(double s);
    double squared_norm() const; // parameter gradients only
};

MlpGrads backward(const Mlp& net, const ForwardCache& cache,
                  std::span<const double> output_gradient);

// Rescales parameter gradients so their global L2 norm is at most max_norm.
void clip_grad_norm(MlpGrads& grads, double max_norm);

struct AdamState {
    double lr = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> mw, vw, mb, vb;

    static AdamState make(const Mlp& net, double lr, double weight_decay);
};

// Adam with decoupled weight decay; increments the step count.
void adam_step(AdamState& state, Mlp& net, const MlpGrads& grads);

std::vector<double> softmax(std::span<const double> logits);

// Returns the loss and writes d(loss)/d(logits) into dlogits.
double softmax_cross_entropy(std::span<const double> logits, int target,
                             std::span<double> dlogits);

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

} // namespace lpo
