#include "nmuon/bench/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

namespace nmuon::bench {

namespace {

constexpr std::array kExperiments{Experiment::Verify, Experiment::Spike, Experiment::ScoreStudy, Experiment::Plans,
                                  Experiment::Train};
constexpr std::array kKinds{OptimizerKind::GD, OptimizerKind::Muon, OptimizerKind::NewtonMuon, OptimizerKind::AdamW};
constexpr std::array kModes{TrainMode::Quadratic, TrainMode::Mlp};
constexpr std::array kActivations{Activation::Relu, Activation::Tanh, Activation::Gelu};
constexpr std::array kLosses{Loss::Mse, Loss::CrossEntropy};
constexpr std::array kInputs{InputModel::Isotropic, InputModel::Spiked, InputModel::Stretched};

const char* const kOptimizerPrefix = "optimizer:";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

template <class E, std::size_t K>
E lookup(const std::array<E, K>& all, const std::string& s, const std::string& where) {
    for (E e : all)
        if (to_string(e) == s) return e;
    std::string expected;
    for (E e : all) expected += (expected.empty() ? "" : ", ") + to_string(e);
    throw ConfigError(where + ": unknown value '" + s + "' (expected one of " + expected + ")");
}

Experiment parse_enum(const std::string& s, const std::string& w, Experiment*) { return lookup(kExperiments, s, w); }
OptimizerKind parse_enum(const std::string& s, const std::string& w, OptimizerKind*) { return lookup(kKinds, s, w); }
TrainMode parse_enum(const std::string& s, const std::string& w, TrainMode*) { return lookup(kModes, s, w); }
Activation parse_enum(const std::string& s, const std::string& w, Activation*) { return lookup(kActivations, s, w); }
Loss parse_enum(const std::string& s, const std::string& w, Loss*) { return lookup(kLosses, s, w); }
InputModel parse_enum(const std::string& s, const std::string& w, InputModel*) { return lookup(kInputs, s, w); }

template <class Fn>
auto rethrow_with(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

ActivationModel parse_enum(const std::string& s, const std::string& w, ActivationModel*) {
    return rethrow_with(w, [&] { return activation_model_from_string(s); });
}
SignBackend parse_enum(const std::string& s, const std::string& w, SignBackend*) {
    return rethrow_with(w, [&] { return sign_backend_from_string(s); });
}
InverseBackend parse_enum(const std::string& s, const std::string& w, InverseBackend*) {
    return rethrow_with(w, [&] { return inverse_backend_from_string(s); });
}

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

template <class T>
T parse_value(const std::string& raw, const std::string& where) {
    const std::string s = trim(raw);
    if constexpr (std::is_same_v<T, bool>) {
        if (s == "true") return true;
        if (s == "false") return false;
        throw ConfigError(where + ": expected true or false, got '" + raw + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
        return s;
    } else if constexpr (std::is_enum_v<T>) {
        return parse_enum(s, where, static_cast<T*>(nullptr));
    } else if constexpr (is_vector<T>::value) {
        T out;
        for (const auto& item : split_list(s)) out.push_back(parse_value<typename T::value_type>(item, where));
        return out;
    } else {
        T v{};
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
            throw ConfigError(where + ": expected a number, got '" + raw + "'");
        if constexpr (std::is_floating_point_v<T>) {
            if (!std::isfinite(v)) throw ConfigError(where + ": value must be finite");
        }
        return v;
    }
}

template <class T>
std::string format_value(const T& v) {
    if constexpr (std::is_same_v<T, bool>) {
        return v ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
        return v;
    } else if constexpr (std::is_enum_v<T>) {
        return to_string(v);
    } else if constexpr (is_vector<T>::value) {
        std::string out;
        for (const auto& x : v) out += (out.empty() ? "" : ", ") + format_value(x);
        return out;
    } else {
        char buf[64];
        const auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    }
}

class SectionReader {
public:
    explicit SectionReader(const Section& s) : s_(s), used_(s.entries.size(), false) {}

    template <class T>
    void operator()(const char* key, T& target) {
        bool found = false;
        for (std::size_t i = 0; i < s_.entries.size(); ++i) {
            if (s_.entries[i].first != key) continue;
            const std::string where = "[" + s_.name + "] " + key;
            if (found) throw ConfigError(where + ": duplicate key");
            found = true;
            used_[i] = true;
            target = parse_value<T>(s_.entries[i].second, where);
        }
    }

    void finish() const {
        for (std::size_t i = 0; i < used_.size(); ++i)
            if (!used_[i]) throw ConfigError("unknown key '" + s_.entries[i].first + "' in [" + s_.name + "]");
    }

private:
    const Section& s_;
    std::vector<bool> used_;
};

class SectionWriter {
public:
    explicit SectionWriter(std::string name) { s_.name = std::move(name); }

    template <class T>
    SectionWriter& operator()(const char* key, const T& v) {
        s_.entries.emplace_back(key, format_value(v));
        return *this;
    }

    Section done() { return std::move(s_); }

private:
    Section s_;
};

// Field lists shared by reader and writer.
template <class V>
void experiment_fields(V& v, auto& c) {
    v("type", c.experiment);
    v("seed", c.seed);
    v("output", c.output);
}
template <class V>
void dims_fields(V& v, auto& c) {
    v("m", c.m);
    v("n", c.n);
    v("N", c.N);
    v("r", c.r);
    v("kappa", c.kappa);
}
template <class V>
void spectrum_fields(V& v, auto& c) {
    v("lambda_max", c.lambda_max);
    v("lambda_min", c.lambda_min);
    v("p", c.p);
}
template <class V>
void spike_fields(V& v, auto& c) {
    v("kappas", c.kappas);
    v("eps_ratio", c.eps_ratio);
    v("max_steps", c.max_steps);
}
template <class V>
void study_fields(V& v, auto& c) {
    v("trials", c.trials);
    v("activation", c.activation);
    v("threads", c.threads);
}
template <class V>
void train_fields(V& v, auto& c) {
    v("mode", c.mode);
    v("target", c.target);
}
template <class V>
void schedule_fields(V& v, auto& s) {
    v("total_steps", s.total_steps);
    v("warmup", s.warmup);
    v("min_ratio", s.min_ratio);
}
template <class V>
void mlp_fields(V& v, auto& s) {
    v("widths", s.widths);
    v("activation", s.activation);
    v("residual", s.residual);
    v("loss", s.loss);
    v("input", s.input);
    v("input_kappa", s.input_kappa);
    v("batch", s.batch);
    v("samples", s.samples);
    v("loss_threshold", s.loss_threshold);
}
template <class V>
void optimizer_fields(V& v, auto& o) {
    v("variant", o.kind);
    v("lr", o.lr);
    v("mu", o.mu);
    v("weight_decay", o.weight_decay);
    v("ewma_beta", o.ewma_beta);
    v("ridge_gamma", o.ridge_gamma);
    v("refresh_k", o.refresh_k);
    v("blocks", o.blocks);
    v("sign_backend", o.sign_backend);
    v("inverse_backend", o.inverse_backend);
    v("beta1", o.beta1);
    v("beta2", o.beta2);
    v("eps", o.eps);
    v("greedy", o.greedy);
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

bool valid_label(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

// Keys whose JSON form is an array.
bool is_list_key(const std::string& key) { return key == "kappas" || key == "widths"; }

}  // namespace

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::Verify: return "verify";
        case Experiment::Spike: return "spike";
        case Experiment::ScoreStudy: return "score-study";
        case Experiment::Plans: return "plans";
        case Experiment::Train: return "train";
    }
    return "?";
}

std::string to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::GD: return "gd";
        case OptimizerKind::Muon: return "muon";
        case OptimizerKind::NewtonMuon: return "newton-muon";
        case OptimizerKind::AdamW: return "adamw";
    }
    return "?";
}

std::string to_string(TrainMode m) { return m == TrainMode::Quadratic ? "quadratic" : "mlp"; }

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Gelu: return "gelu";
    }
    return "?";
}

std::string to_string(Loss l) { return l == Loss::Mse ? "mse" : "cross-entropy"; }

std::string to_string(InputModel i) {
    switch (i) {
        case InputModel::Isotropic: return "isotropic";
        case InputModel::Spiked: return "spiked";
        case InputModel::Stretched: return "stretched";
    }
    return "?";
}

// ------------------------------------------------------------ OptimizerBlock

MatrixVariant OptimizerBlock::variant() const {
    const bool ns5 = sign_backend == SignBackend::NewtonSchulz5;
    switch (kind) {
        case OptimizerKind::GD: return MatrixVariant::GD;
        case OptimizerKind::Muon: return ns5 ? MatrixVariant::MuonNs5 : MatrixVariant::MuonSvd;
        case OptimizerKind::NewtonMuon: return ns5 ? MatrixVariant::NewtonMuonNs5 : MatrixVariant::NewtonMuonSvd;
        case OptimizerKind::AdamW: break;
    }
    throw ConfigError("optimizer '" + label + "': adamw has no matrix variant");
}

MatrixOptimizerConfig OptimizerBlock::matrix_config() const {
    MatrixOptimizerConfig c;
    c.variant = variant();
    c.lr = lr;
    c.mu = mu;
    c.weight_decay = weight_decay;
    c.precond = {ewma_beta, ridge_gamma, refresh_k, blocks, inverse_backend};
    return c;
}

AdamWConfig OptimizerBlock::adamw_config() const { return {lr, beta1, beta2, eps, weight_decay}; }

// ------------------------------------------------------------ validation

ScoreStudyConfig ExperimentConfig::study_config() const {
    ScoreStudyConfig c;
    c.m = m;
    c.n = n;
    c.N = N;
    c.kappa = kappa;
    c.spectrum = spectrum();
    c.trials = trials;
    c.seed = seed;
    c.activation = activation;
    return c;
}

void ExperimentConfig::validate() const {
    require(!output.empty(), "[experiment] output must not be empty");
    require(m >= 1 && n >= 1 && N >= 1, "[dims] m, n and N must be >= 1");
    require(kappa > 0.0, "[dims] kappa must be > 0");
    require(threads >= 1, "[study] threads must be >= 1");

    switch (experiment) {
        case Experiment::Verify:
        case Experiment::Plans: break;
        case Experiment::Spike:
            require(!kappas.empty(), "[spike] kappas must not be empty");
            for (double k : kappas) require(k > 1.0, "[spike] every kappa must be > 1");
            require(eps_ratio > 1.0, "[spike] eps_ratio must be > 1");
            require(max_steps >= 1, "[spike] max_steps must be >= 1");
            require(r >= 1 && r <= m && r + 1 <= n, "[dims] spike runs need 1 <= r <= m and r <= n - 1");
            break;
        case Experiment::ScoreStudy: study_config().validate(); break;
        case Experiment::Train: {
            require(!optimizers.empty(), "train needs at least one [optimizer:<label>] section");
            require(schedule.total_steps >= 1, "[schedule] total_steps must be >= 1");
            require(schedule.warmup <= schedule.total_steps, "[schedule] warmup must not exceed total_steps");
            require(schedule.min_ratio >= 0.0 && schedule.min_ratio <= 1.0, "[schedule] min_ratio must lie in [0, 1]");
            if (mode == TrainMode::Quadratic) {
                require(kappa > 1.0, "[dims] quadratic training needs kappa > 1");
                require(r >= 1 && r <= m && r + 1 <= n, "[dims] quadratic training needs 1 <= r <= m and r <= n - 1");
                require(target > 0.0, "[train] target must be > 0");
                require(N >= n, "[dims] quadratic training needs N >= n");
            } else {
                const auto& w = mlp.widths;
                require(w.size() >= 2, "[mlp] widths needs at least an input and an output width");
                require(w.size() <= 9, "[mlp] widths allows at most 8 layers");
                for (auto x : w) require(x >= 1, "[mlp] widths must be >= 1");
                require(mlp.batch >= 1 && mlp.samples >= mlp.batch, "[mlp] need 1 <= batch <= samples");
                require(mlp.input_kappa >= 1.0, "[mlp] input_kappa must be >= 1");
                require(mlp.loss_threshold > 0.0, "[mlp] loss_threshold must be > 0");
                require(mlp.loss == Loss::Mse || w.back() >= 2, "[mlp] cross-entropy needs an output width >= 2");
            }
            break;
        }
    }

    std::set<std::string> labels;
    for (const auto& o : optimizers) {
        const std::string where = "[optimizer:" + o.label + "] ";
        require(valid_label(o.label), "optimizer labels use letters, digits, '-' and '_' only");
        require(labels.insert(o.label).second, where + "duplicate optimizer label");
        require(o.lr >= 0.0, where + "lr must be >= 0");
        require(o.weight_decay >= 0.0, where + "weight_decay must be >= 0");
        if (o.kind == OptimizerKind::AdamW) {
            require(o.beta1 >= 0.0 && o.beta1 < 1.0 && o.beta2 >= 0.0 && o.beta2 < 1.0,
                    where + "beta1 and beta2 must lie in [0, 1)");
            require(o.eps > 0.0, where + "eps must be > 0");
            require(!o.greedy, where + "adamw has no greedy step");
        } else {
            require(o.mu >= 0.0 && o.mu < 1.0, where + "mu must lie in [0, 1)");
        }
        if (o.kind == OptimizerKind::NewtonMuon) {
            require(o.ewma_beta >= 0.0 && o.ewma_beta < 1.0, where + "ewma_beta must lie in [0, 1)");
            require(o.ridge_gamma > 0.0, where + "ridge_gamma must be > 0");
            require(o.refresh_k >= 1, where + "refresh_k must be >= 1");
            require(o.blocks >= 1, where + "blocks must be >= 1");
        }
        if (o.greedy) require(mode == TrainMode::Quadratic, where + "greedy steps exist only in quadratic mode");
    }
}

// ------------------------------------------------------------ documents

Document read_ini(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("INI parse error: ") + e.what());
    }
    Document doc;
    for (const auto& [name, sec] : tree) {
        if (sec.empty()) throw ConfigError("key '" + name + "' appears outside any section");
        Section s{name, {}};
        for (const auto& [key, val] : sec) {
            if (!val.empty()) throw ConfigError("nested keys are not supported in [" + name + "]");
            s.entries.emplace_back(key, val.data());
        }
        doc.push_back(std::move(s));
    }
    return doc;
}

Document read_json(const std::string& text) {
    using json = nlohmann::ordered_json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("JSON config must be an object of sections");
    auto scalar = [](const json& v, const std::string& where) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw ConfigError(where + ": expected a string, number or boolean");
    };
    Document doc;
    for (const auto& [name, sec] : root.items()) {
        if (!sec.is_object()) throw ConfigError("JSON section '" + name + "' must be an object");
        Section s{name, {}};
        for (const auto& [key, val] : sec.items()) {
            const std::string where = "[" + name + "] " + key;
            if (val.is_array()) {
                std::string joined;
                for (const auto& x : val) joined += (joined.empty() ? "" : ", ") + scalar(x, where);
                s.entries.emplace_back(key, joined);
            } else {
                s.entries.emplace_back(key, scalar(val, where));
            }
        }
        doc.push_back(std::move(s));
    }
    return doc;
}

ExperimentConfig from_document(const Document& doc) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    for (const Section& sec : doc) {
        if (!seen.insert(sec.name).second) throw ConfigError("duplicate section [" + sec.name + "]");
        SectionReader rd(sec);
        if (sec.name == "experiment") {
            experiment_fields(rd, cfg);
        } else if (sec.name == "dims") {
            dims_fields(rd, cfg);
        } else if (sec.name == "spectrum") {
            spectrum_fields(rd, cfg);
        } else if (sec.name == "spike") {
            spike_fields(rd, cfg);
        } else if (sec.name == "study") {
            study_fields(rd, cfg);
        } else if (sec.name == "train") {
            train_fields(rd, cfg);
        } else if (sec.name == "schedule") {
            schedule_fields(rd, cfg.schedule);
        } else if (sec.name == "mlp") {
            mlp_fields(rd, cfg.mlp);
        } else if (sec.name.rfind(kOptimizerPrefix, 0) == 0) {
            OptimizerBlock b;
            b.label = sec.name.substr(std::string(kOptimizerPrefix).size());
            optimizer_fields(rd, b);
            cfg.optimizers.push_back(std::move(b));
        } else {
            throw ConfigError("unknown section [" + sec.name + "]");
        }
        rd.finish();
    }
    cfg.validate();
    return cfg;
}

Document to_document(const ExperimentConfig& cfg) {
    Document doc;
    auto add = [&](const char* name, auto&& fields) {
        SectionWriter w(name);
        fields(w);
        doc.push_back(w.done());
    };
    add("experiment", [&](SectionWriter& w) { experiment_fields(w, cfg); });
    add("dims", [&](SectionWriter& w) { dims_fields(w, cfg); });
    add("spectrum", [&](SectionWriter& w) { spectrum_fields(w, cfg); });
    add("spike", [&](SectionWriter& w) { spike_fields(w, cfg); });
    add("study", [&](SectionWriter& w) { study_fields(w, cfg); });
    add("train", [&](SectionWriter& w) { train_fields(w, cfg); });
    add("schedule", [&](SectionWriter& w) { schedule_fields(w, cfg.schedule); });
    add("mlp", [&](SectionWriter& w) { mlp_fields(w, cfg.mlp); });
    for (const auto& o : cfg.optimizers) {
        SectionWriter w(kOptimizerPrefix + o.label);
        optimizer_fields(w, o);
        doc.push_back(w.done());
    }
    return doc;
}

std::string to_ini(const ExperimentConfig& cfg) {
    std::ostringstream out;
    bool first = true;
    for (const Section& s : to_document(cfg)) {
        if (!first) out << '\n';
        first = false;
        out << '[' << s.name << "]\n";
        for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
    }
    return out.str();
}

std::string to_json(const ExperimentConfig& cfg) {
    using json = nlohmann::ordered_json;
    auto typed = [](const std::string& v) -> json {
        if (v == "true" || v == "false") return v == "true";
        if (!v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return std::stoull(v);
        double d{};
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
        if (!v.empty() && ec == std::errc{} && ptr == v.data() + v.size()) return d;
        return v;
    };
    json root = json::object();
    for (const Section& s : to_document(cfg)) {
        json sec = json::object();
        for (const auto& [k, v] : s.entries) {
            if (is_list_key(k)) {
                json arr = json::array();
                for (const auto& item : split_list(v)) arr.push_back(typed(item));
                sec[k] = std::move(arr);
            } else if (k == "output" || k == "label") {
                sec[k] = v;
            } else {
                sec[k] = typed(v);
            }
        }
        root[s.name] = std::move(sec);
    }
    return root.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool is_json = first != std::string::npos && text[first] == '{';
    return from_document(is_json ? read_json(text) : read_ini(text));
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ------------------------------------------------------------ presets

namespace {

OptimizerBlock block(std::string label, OptimizerKind kind, double lr) {
    OptimizerBlock b;
    b.label = std::move(label);
    b.kind = kind;
    b.lr = lr;
    return b;
}

ExperimentConfig study_preset(std::size_t n_samples, double p) {
    ExperimentConfig c;
    c.experiment = Experiment::ScoreStudy;
    c.output = "out/score-study";
    c.m = c.n = 128;
    c.N = n_samples;
    c.kappa = 64.0;
    c.lambda_max = 1.0;
    c.lambda_min = 1e-4;
    c.p = p;
    c.trials = 64;
    c.threads = 4;
    return c;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"verify",        "plans",          "spike-table",     "baseline-study", "uniform-study",
            "smalln-study",  "isotropic-study", "quadratic-desk", "record4-desk"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    if (name == "verify") {
        c.output = "out/verify";
    } else if (name == "plans") {
        c.experiment = Experiment::Plans;
        c.output = "out/plans";
    } else if (name == "spike-table") {
        c.experiment = Experiment::Spike;
        c.output = "out/spike";
        c.m = c.n = 32;
        c.r = 1;
    } else if (name == "baseline-study") {
        c = study_preset(2048, 0.3);
    } else if (name == "uniform-study") {
        c = study_preset(2048, 2.4);
    } else if (name == "smalln-study") {
        c = study_preset(256, 0.3);
    } else if (name == "isotropic-study") {
        c = study_preset(256, 0.3);
        c.m = c.n = 256;
        c.lambda_min = 1.0;
        c.activation = ActivationModel::Isotropic;
        c.trials = 16;
    } else if (name == "quadratic-desk") {
        c.experiment = Experiment::Train;
        c.output = "out/quadratic";
        c.mode = TrainMode::Quadratic;
        c.m = 24;
        c.n = 32;
        c.r = 5;
        c.kappa = 64.0;
        c.target = 1e-3;
        c.schedule = {1000, 0, 1.0};
        for (auto [label, kind] : {std::pair{"gd", OptimizerKind::GD}, {"muon", OptimizerKind::Muon},
                                   {"newton-muon", OptimizerKind::NewtonMuon}}) {
            OptimizerBlock b = block(label, kind, 0.0);
            b.mu = 0.0;
            b.greedy = true;
            if (kind == OptimizerKind::NewtonMuon) {
                b.ewma_beta = 0.0;
                b.ridge_gamma = 1e-8;
                b.refresh_k = 1;
            }
            c.optimizers.push_back(b);
        }
        c.optimizers.push_back(block("adamw", OptimizerKind::AdamW, 0.01));
    } else if (name == "record4-desk") {
        c.experiment = Experiment::Train;
        c.output = "out/record4";
        c.mode = TrainMode::Mlp;
        c.mlp = MlpSpec{};
        c.mlp.widths = {32, 64, 64, 64, 8};
        c.mlp.input_kappa = 32.0;
        c.mlp.samples = 2048;
        c.mlp.loss_threshold = 0.05;
        c.schedule = {2000, 100, 0.1};
        c.optimizers.push_back(block("adamw", OptimizerKind::AdamW, 3e-3));
        c.optimizers.push_back(block("gd", OptimizerKind::GD, 0.1));
        c.optimizers.back().mu = 0.9;
        c.optimizers.push_back(block("muon", OptimizerKind::Muon, 0.02));
        c.optimizers.back().sign_backend = SignBackend::NewtonSchulz5;
        OptimizerBlock nm = block("newton-muon", OptimizerKind::NewtonMuon, 0.02);
        nm.sign_backend = SignBackend::NewtonSchulz5;
        nm.ewma_beta = 0.95;
        nm.ridge_gamma = 0.2;
        nm.refresh_k = 32;
        c.optimizers.push_back(nm);
    } else {
        std::string names;
        for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
    }
    c.validate();
    return c;
}

}  // namespace nmuon::bench
