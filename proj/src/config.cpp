#include "lpo/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace lpo {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: field '") + key + "': " + e.what());
    }
}

const json& get_object(const json& j, const char* key, const json& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_object()) {
        throw ConfigError(std::string("config: field '") + key + "' must be an object");
    }
    return j.at(key);
}

const json kEmpty = json::object();

OracleSpec parse_oracle(const json& j) {
    OracleSpec s;
    s.kind = get_or<std::string>(j, "kind", s.kind);
    if (s.kind != "nk" && s.kind != "csv" && s.kind != "predictor") {
        throw ConfigError("config: oracle.kind must be nk, csv, or predictor");
    }
    s.path = get_or<std::string>(j, "path", s.path);
    s.normalize = get_or<bool>(j, "normalize", s.normalize);
    s.miss_policy = get_or<std::string>(j, "miss_policy", s.miss_policy);
    if (s.miss_policy != "strict" && s.miss_policy != "nearest") {
        throw ConfigError("config: oracle.miss_policy must be strict or nearest");
    }
    const json& p = get_object(j, "predictor", kEmpty);
    s.predictor.hidden = get_or<int>(p, "hidden", s.predictor.hidden);
    s.predictor.epochs = get_or<int>(p, "epochs", s.predictor.epochs);
    s.predictor.batch_size = get_or<int>(p, "batch_size", s.predictor.batch_size);
    s.predictor.lr = get_or<double>(p, "lr", s.predictor.lr);
    s.predictor.weight_decay = get_or<double>(p, "weight_decay", s.predictor.weight_decay);
    s.predictor.holdout_fraction =
        get_or<double>(p, "holdout_fraction", s.predictor.holdout_fraction);
    return s;
}

json oracle_to_json(const OracleSpec& s) {
    return {{"kind", s.kind},
            {"path", s.path},
            {"normalize", s.normalize},
            {"miss_policy", s.miss_policy},
            {"predictor",
             {{"hidden", s.predictor.hidden},
              {"epochs", s.predictor.epochs},
              {"batch_size", s.predictor.batch_size},
              {"lr", s.predictor.lr},
              {"weight_decay", s.predictor.weight_decay},
              {"holdout_fraction", s.predictor.holdout_fraction}}}};
}

BandSpec parse_band(const json& j) {
    BandSpec b;
    b.name = get_or<std::string>(j, "name", b.name);
    if (b.name != "medium" && b.name != "hard" && b.name != "custom") {
        throw ConfigError("config: band.name must be medium, hard, or custom");
    }
    b.lo = get_or<double>(j, "lo", b.lo);
    b.hi = get_or<double>(j, "hi", b.hi);
    if (b.name == "custom" && !(b.lo >= 0.0 && b.lo < b.hi && b.hi <= 100.0)) {
        throw ConfigError("config: custom band needs 0 <= lo < hi <= 100");
    }
    return b;
}

EnvConfig parse_env(const json& j) {
    EnvConfig e;
    e.delta = get_or<double>(j, "delta", e.delta);
    e.t_ep = get_or<int>(j, "t_ep", e.t_ep);
    e.m_step = get_or<int>(j, "m_step", e.m_step);
    e.m_total = get_or<int>(j, "m_total", e.m_total);
    e.m_decode = get_or<int>(j, "m_decode", e.m_decode);
    e.R = get_or<int>(j, "R", e.R);
    try {
        e.validate();
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("config: env: ") + ex.what());
    }
    return e;
}

PpoConfig parse_ppo(const json& j) {
    PpoConfig p;
    p.clip = get_or<double>(j, "clip", p.clip);
    p.gamma = get_or<double>(j, "gamma", p.gamma);
    p.lam = get_or<double>(j, "lam", p.lam);
    p.update_epochs = get_or<int>(j, "update_epochs", p.update_epochs);
    p.minibatch = get_or<int>(j, "minibatch", p.minibatch);
    p.lr = get_or<double>(j, "lr", p.lr);
    p.vf_coef = get_or<double>(j, "vf_coef", p.vf_coef);
    p.ent_coef = get_or<double>(j, "ent_coef", p.ent_coef);
    p.max_grad_norm = get_or<double>(j, "max_grad_norm", p.max_grad_norm);
    p.rounds = get_or<int>(j, "rounds", p.rounds);
    p.oracle_calls = get_or<int>(j, "oracle_calls", p.oracle_calls);
    try {
        p.validate();
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("config: ppo: ") + ex.what());
    }
    return p;
}

FrontierBuffer::Params parse_buffer(const json& j) {
    FrontierBuffer::Params b;
    b.capacity = get_or<std::size_t>(j, "capacity", b.capacity);
    b.epsilon_init = get_or<double>(j, "epsilon_init", b.epsilon_init);
    b.epsilon_floor = get_or<double>(j, "epsilon_floor", b.epsilon_floor);
    b.epsilon_decay = get_or<double>(j, "epsilon_decay", b.epsilon_decay);
    b.update_period = get_or<long>(j, "update_period", b.update_period);
    b.softmax_temperature =
        get_or<double>(j, "softmax_temperature", b.softmax_temperature);
    if (b.capacity < 1) throw ConfigError("config: buffer.capacity must be >= 1");
    return b;
}

VedTrainConfig parse_ved_train(const json& j) {
    VedTrainConfig v;
    v.augment = get_or<int>(j, "augment", v.augment);
    v.expected_mutations = get_or<double>(j, "expected_mutations", v.expected_mutations);
    v.holdout_fraction = get_or<double>(j, "holdout_fraction", v.holdout_fraction);
    v.epochs = get_or<int>(j, "epochs", v.epochs);
    v.batch_size = get_or<int>(j, "batch_size", v.batch_size);
    v.lr = get_or<double>(j, "lr", v.lr);
    v.weight_decay = get_or<double>(j, "weight_decay", v.weight_decay);
    v.arch.R = get_or<int>(j, "R", v.arch.R);
    v.arch.enc_hidden = get_or<int>(j, "enc_hidden", v.arch.enc_hidden);
    v.arch.dec_hidden = get_or<int>(j, "dec_hidden", v.arch.dec_hidden);
    return v;
}

BaselineConfig parse_baseline(const json& j) {
    BaselineConfig b;
    b.top_k = get_or<std::size_t>(j, "top_k", b.top_k);
    b.mutation_rate = get_or<double>(j, "mutation_rate", b.mutation_rate);
    b.kappa = get_or<double>(j, "kappa", b.kappa);
    b.parents = get_or<int>(j, "parents", b.parents);
    b.mutation_radius = get_or<int>(j, "mutation_radius", b.mutation_radius);
    b.sigma0 = get_or<double>(j, "sigma0", b.sigma0);
    return b;
}

} // namespace

std::pair<double, double> BandSpec::range() const {
    if (name == "medium") return {20.0, 40.0};
    if (name == "hard") return {10.0, 30.0};
    return {lo, hi};
}

TaskConfig parse_task_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: root must be a JSON object");
    const auto schema = get_or<std::string>(j, "schema", "");
    if (schema != kTaskConfigSchema) {
        throw ConfigError(std::string("config: schema must be '") + kTaskConfigSchema +
                          "', got '" + schema + "'");
    }
    TaskConfig c;
    c.method = get_or<std::string>(j, "method", c.method);
    static const char* kMethods[] = {"latprotrl", "cmaes-onehot", "cmaes-ved",
                                     "greedy",    "pex-style",    "random"};
    bool known = false;
    for (const auto* m : kMethods) known = known || c.method == m;
    if (!known) throw ConfigError("config: unknown method '" + c.method + "'");

    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.workers = get_or<int>(j, "workers", c.workers);
    if (c.workers < 1) throw ConfigError("config: workers must be >= 1");
    c.out = get_or<std::string>(j, "out", c.out);

    c.oracle = parse_oracle(get_object(j, "oracle", kEmpty));
    const json& d = get_object(j, "dataset", kEmpty);
    c.dataset.path = get_or<std::string>(d, "path", "");
    c.dataset.normalize = get_or<bool>(d, "normalize", true);
    c.band = parse_band(get_object(j, "band", kEmpty));

    const json& ved = get_object(j, "ved", kEmpty);
    c.ved_checkpoint = get_or<std::string>(ved, "checkpoint", "");
    c.ved_train = parse_ved_train(get_object(ved, "train", kEmpty));

    c.campaign.method = c.method;
    c.campaign.env = parse_env(get_object(j, "env", kEmpty));
    c.campaign.ppo = parse_ppo(get_object(j, "ppo", kEmpty));
    c.campaign.buffer = parse_buffer(get_object(j, "buffer", kEmpty));
    const json& abl = get_object(j, "ablation", kEmpty);
    c.campaign.no_buffer = get_or<bool>(abl, "no_buffer", false);
    c.campaign.no_calibration = get_or<bool>(abl, "no_calibration", false);
    c.campaign.state_action_mode =
        get_or<std::string>(abl, "state_action_mode", "lat/lat");
    if (c.campaign.state_action_mode != "lat/lat" &&
        c.campaign.state_action_mode != "lat/mut" &&
        c.campaign.state_action_mode != "seq/mut") {
        throw ConfigError("config: state_action_mode must be lat/lat, lat/mut, or seq/mut");
    }
    c.campaign.predictor_timesteps =
        get_or<long>(j, "predictor_timesteps", c.campaign.predictor_timesteps);
    c.campaign.policy_hidden = get_or<int>(j, "policy_hidden", c.campaign.policy_hidden);
    c.campaign.seed = c.seed;

    c.baseline = parse_baseline(get_object(j, "baseline", kEmpty));
    c.baseline.rounds = c.campaign.ppo.rounds;
    c.baseline.seed = c.seed;

    const json& land = get_object(j, "landscape", kEmpty);
    c.landscape.L = get_or<int>(land, "L", c.landscape.L);
    c.landscape.K = get_or<int>(land, "K", c.landscape.K);
    c.landscape.vocab = get_or<std::string>(land, "vocab", c.landscape.vocab);
    c.landscape.seed = get_or<std::uint64_t>(land, "seed", c.landscape.seed);
    c.landscape.samples = get_or<int>(land, "samples", c.landscape.samples);
    return c;
}

TaskConfig load_task_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return parse_task_config(j);
}

nlohmann::json task_config_to_json(const TaskConfig& c) {
    const auto& e = c.campaign.env;
    const auto& p = c.campaign.ppo;
    const auto& b = c.campaign.buffer;
    const auto& v = c.ved_train;
    return {
        {"schema", kTaskConfigSchema},
        {"method", c.method},
        {"seed", c.seed},
        {"workers", c.workers},
        {"out", c.out},
        {"oracle", oracle_to_json(c.oracle)},
        {"dataset", {{"path", c.dataset.path}, {"normalize", c.dataset.normalize}}},
        {"band", {{"name", c.band.name}, {"lo", c.band.lo}, {"hi", c.band.hi}}},
        {"ved",
         {{"checkpoint", c.ved_checkpoint},
          {"train",
           {{"augment", v.augment},
            {"expected_mutations", v.expected_mutations},
            {"holdout_fraction", v.holdout_fraction},
            {"epochs", v.epochs},
            {"batch_size", v.batch_size},
            {"lr", v.lr},
            {"weight_decay", v.weight_decay},
            {"R", v.arch.R},
            {"enc_hidden", v.arch.enc_hidden},
            {"dec_hidden", v.arch.dec_hidden}}}}},
        {"env",
         {{"delta", e.delta},
          {"t_ep", e.t_ep},
          {"m_step", e.m_step},
          {"m_total", e.m_total},
          {"m_decode", e.m_decode},
          {"R", e.R}}},
        {"ppo",
         {{"clip", p.clip},
          {"gamma", p.gamma},
          {"lam", p.lam},
          {"update_epochs", p.update_epochs},
          {"minibatch", p.minibatch},
          {"lr", p.lr},
          {"vf_coef", p.vf_coef},
          {"ent_coef", p.ent_coef},
          {"max_grad_norm", p.max_grad_norm},
          {"rounds", p.rounds},
          {"oracle_calls", p.oracle_calls}}},
        {"buffer",
         {{"capacity", b.capacity},
          {"epsilon_init", b.epsilon_init},
          {"epsilon_floor", b.epsilon_floor},
          {"epsilon_decay", b.epsilon_decay},
          {"update_period", b.update_period},
          {"softmax_temperature", b.softmax_temperature}}},
        {"ablation",
         {{"no_buffer", c.campaign.no_buffer},
          {"no_calibration", c.campaign.no_calibration},
          {"state_action_mode", c.campaign.state_action_mode}}},
        {"predictor_timesteps", c.campaign.predictor_timesteps},
        {"policy_hidden", c.campaign.policy_hidden},
        {"baseline",
         {{"top_k", c.baseline.top_k},
          {"mutation_rate", c.baseline.mutation_rate},
          {"kappa", c.baseline.kappa},
          {"parents", c.baseline.parents},
          {"mutation_radius", c.baseline.mutation_radius},
          {"sigma0", c.baseline.sigma0}}},
        {"landscape",
         {{"L", c.landscape.L},
          {"K", c.landscape.K},
          {"vocab", c.landscape.vocab},
          {"seed", c.landscape.seed},
          {"samples", c.landscape.samples}}},
    };
}

} // namespace lpo
