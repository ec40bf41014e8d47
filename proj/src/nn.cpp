#include "lpo/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lpo {

std::string act_name(Act a) {
    switch (a) {
        case Act::Identity: return "identity";
        case Act::Tanh: return "tanh";
        case Act::Relu: return "relu";
    }
    throw std::logic_error("unknown activation");
}

Act act_from_name(const std::string& s) {
    if (s == "identity") return Act::Identity;
    if (s == "tanh") return Act::Tanh;
    if (s == "relu") return Act::Relu;
    throw std::invalid_argument("unknown activation: " + s);
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

Mlp Mlp::make(const std::vector<int>& widths, const std::vector<Act>& acts,
              bool bias, Rng& rng) {
    if (widths.size() < 2 || acts.size() != widths.size() - 1) {
        throw std::invalid_argument("Mlp::make: widths/acts size mismatch");
    }
    Mlp net;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        Layer l;
        l.in = widths[k];
        l.out = widths[k + 1];
        l.act = acts[k];
        l.has_bias = bias;
        const double bound = std::sqrt(6.0 / (l.in + l.out));
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        for (auto& w : l.w) w = (2.0 * rng.uniform() - 1.0) * bound;
        if (bias) l.b.assign(static_cast<std::size_t>(l.out), 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

namespace {

double activate(Act a, double x) {
    switch (a) {
        case Act::Identity: return x;
        case Act::Tanh: return std::tanh(x);
        case Act::Relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

double activate_grad(Act a, double pre) {
    switch (a) {
        case Act::Identity: return 1.0;
        case Act::Tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Act::Relu: return pre > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

} // namespace

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
    ForwardCache cache;
    return forward(net, input, cache);
}

std::vector<double> forward(const Mlp& net, std::span<const double> input,
                            ForwardCache& cache) {
    if (static_cast<int>(input.size()) != net.input_dim()) {
        throw std::invalid_argument("forward: input dimension mismatch");
    }
    cache.inputs.clear();
    cache.pre.clear();
    std::vector<double> x(input.begin(), input.end());
    for (const auto& l : net.layers) {
        cache.inputs.push_back(x);
        std::vector<double> pre(static_cast<std::size_t>(l.out), 0.0);
        for (int o = 0; o < l.out; ++o) {
            double acc = l.has_bias ? l.b[static_cast<std::size_t>(o)] : 0.0;
            const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
            for (int i = 0; i < l.in; ++i) acc += wrow[i] * x[static_cast<std::size_t>(i)];
            pre[static_cast<std::size_t>(o)] = acc;
        }
        x.resize(pre.size());
        for (std::size_t o = 0; o < pre.size(); ++o) x[o] = activate(l.act, pre[o]);
        cache.pre.push_back(std::move(pre));
    }
    return x;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
    MlpGrads g;
    for (const auto& l : net.layers) {
        g.dw.emplace_back(l.w.size(), 0.0);
        g.db.emplace_back(l.b.size(), 0.0);
    }
    g.dinput.assign(static_cast<std::size_t>(net.input_dim()), 0.0);
    return g;
}

void MlpGrads::add(const MlpGrads& other) {
    for (std::size_t k = 0; k < dw.size(); ++k) {
        for (std::size_t i = 0; i < dw[k].size(); ++i) dw[k][i] += other.dw[k][i];
        for (std::size_t i = 0; i < db[k].size(); ++i) db[k][i] += other.db[k][i];
    }
    for (std::size_t i = 0; i < dinput.size(); ++i) dinput[i] += other.dinput[i];
}

void MlpGrads::scale(double s) {
    for (auto& v : dw)
        for (auto& x : v) x *= s;
    for (auto& v : db)
        for (auto& x : v) x *= s;
    for (auto& x : dinput) x *= s;
}

double MlpGrads::squared_norm() const {
    double n = 0.0;
    for (const auto& v : dw)
        for (double x : v) n += x * x;
    for (const auto& v : db)
        for (double x : v) n += x * x;
    return n;
}

MlpGrads backward(const Mlp& net, const ForwardCache& cache,
                  std::span<const double> output_gradient) {
    if (cache.inputs.size() != net.layers.size()) {
        throw std::invalid_argument("backward: cache does not match network");
    }
    if (static_cast<int>(output_gradient.size()) != net.output_dim()) {
        throw std::invalid_argument("backward: output gradient dimension mismatch");
    }
    MlpGrads g = MlpGrads::zeros_like(net);
    std::vector<double> dy(output_gradient.begin(), output_gradient.end());
    for (int k = static_cast<int>(net.layers.size()) - 1; k >= 0; --k) {
        const auto& l = net.layers[static_cast<std::size_t>(k)];
        const auto& pre = cache.pre[static_cast<std::size_t>(k)];
        const auto& in = cache.inputs[static_cast<std::size_t>(k)];
        if (static_cast<int>(in.size()) != l.in) {
            throw std::invalid_argument("backward: stale cache");
        }
        std::vector<double> dpre(static_cast<std::size_t>(l.out));
        for (int o = 0; o < l.out; ++o) {
            dpre[static_cast<std::size_t>(o)] =
                dy[static_cast<std::size_t>(o)] * activate_grad(l.act, pre[static_cast<std::size_t>(o)]);
        }
        auto& dw = g.dw[static_cast<std::size_t>(k)];
        for (int o = 0; o < l.out; ++o) {
            const double d = dpre[static_cast<std::size_t>(o)];
            double* drow = &dw[static_cast<std::size_t>(o) * l.in];
            for (int i = 0; i < l.in; ++i) drow[i] = d * in[static_cast<std::size_t>(i)];
        }
        if (l.has_bias) {
            auto& db = g.db[static_cast<std::size_t>(k)];
            for (int o = 0; o < l.out; ++o) db[static_cast<std::size_t>(o)] = dpre[static_cast<std::size_t>(o)];
        }
        std::vector<double> dx(static_cast<std::size_t>(l.in), 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double d = dpre[static_cast<std::size_t>(o)];
            const double* wrow = &l.w[static_cast<std::size_t>(o) * l.in];
            for (int i = 0; i < l.in; ++i) dx[static_cast<std::size_t>(i)] += d * wrow[i];
        }
        dy = std::move(dx);
    }
    g.dinput = std::move(dy);
    return g;
}

void clip_grad_norm(MlpGrads& grads, double max_norm) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (auto& v : grads.dw)
            for (auto& x : v) x *= s;
        for (auto& v : grads.db)
            for (auto& x : v) x *= s;
    }
}

AdamState AdamState::make(const Mlp& net, double lr, double weight_decay) {
    AdamState s;
    s.lr = lr;
    s.weight_decay = weight_decay;
    for (const auto& l : net.layers) {
        s.mw.emplace_back(l.w.size(), 0.0);
        s.vw.emplace_back(l.w.size(), 0.0);
        s.mb.emplace_back(l.b.size(), 0.0);
        s.vb.emplace_back(l.b.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v,
                 const AdamState& s, double bc1, double bc2, bool decay) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
        if (decay && s.weight_decay != 0.0) p[i] -= s.lr * s.weight_decay * p[i];
    }
}

} // namespace

void adam_step(AdamState& state, Mlp& net, const MlpGrads& grads) {
    if (grads.dw.size() != net.layers.size()) {
        throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        auto& l = net.layers[k];
        if (grads.dw[k].size() != l.w.size() || grads.db[k].size() != l.b.size()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        }
        adam_update(l.w, grads.dw[k], state.mw[k], state.vw[k], state, bc1, bc2, true);
        if (l.has_bias) {
            // No weight decay on biases.
            adam_update(l.b, grads.db[k], state.mb[k], state.vb[k], state, bc1, bc2, false);
        }
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    double mx = logits[0];
    for (double x : logits) mx = std::max(mx, x);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (auto& x : out) x /= sum;
    return out;
}

double softmax_cross_entropy(std::span<const double> logits, int target,
                             std::span<double> dlogits) {
    if (target < 0 || target >= static_cast<int>(logits.size())) {
        throw std::invalid_argument("softmax_cross_entropy: target out of range");
    }
    const auto p = softmax(logits);
    for (std::size_t i = 0; i < logits.size(); ++i) dlogits[i] = p[i];
    dlogits[static_cast<std::size_t>(target)] -= 1.0;
    const double pt = std::max(p[static_cast<std::size_t>(target)], 1e-300);
    return -std::log(pt);
}

nlohmann::json mlp_to_json(const Mlp& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers) {
        layers.push_back({{"in", l.in},
                          {"out", l.out},
                          {"bias", l.has_bias},
                          {"act", act_name(l.act)},
                          {"w", l.w},
                          {"b", l.b}});
    }
    return {{"format", "mlp-v1"}, {"layers", layers}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "mlp-v1") {
        throw std::invalid_argument("mlp_from_json: unknown checkpoint format");
    }
    Mlp net;
    for (const auto& jl : j.at("layers")) {
        Layer l;
        l.in = jl.at("in").get<int>();
        l.out = jl.at("out").get<int>();
        l.has_bias = jl.at("bias").get<bool>();
        l.act = act_from_name(jl.at("act").get<std::string>());
        l.w = jl.at("w").get<std::vector<double>>();
        l.b = jl.at("b").get<std::vector<double>>();
        if (l.w.size() != static_cast<std::size_t>(l.in) * l.out ||
            (l.has_bias && l.b.size() != static_cast<std::size_t>(l.out))) {
            throw std::invalid_argument("mlp_from_json: shape metadata mismatch");
        }
        net.layers.push_back(std::move(l));
    }
    if (net.layers.empty()) throw std::invalid_argument("mlp_from_json: no layers");
    for (std::size_t k = 0; k + 1 < net.layers.size(); ++k) {
        if (net.layers[k].out != net.layers[k + 1].in) {
            throw std::invalid_argument("mlp_from_json: inconsistent layer dims");
        }
    }
    return net;
}

} // namespace lpo
