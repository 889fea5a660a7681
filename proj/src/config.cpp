#include "distreg/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "distreg/errors.hpp"
#include "distreg/rng.hpp"
#include "nlohmann/json.hpp"

namespace distreg::cli {

using json = nlohmann::json;

std::string dataset_kind_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::InverseSquare: return "inverse-square";
        case DatasetKind::TwoPath: return "two-path";
        case DatasetKind::UnimodalLinear: return "unimodal-linear";
        case DatasetKind::Csv: return "csv";
    }
    return "?";
}

DatasetKind dataset_kind_from_name(const std::string& name) {
    if (name == "inverse-square") return DatasetKind::InverseSquare;
    if (name == "two-path") return DatasetKind::TwoPath;
    if (name == "unimodal-linear") return DatasetKind::UnimodalLinear;
    if (name == "csv") return DatasetKind::Csv;
    throw ConfigError("unknown dataset kind '" + name + "'");
}

double DataSpec::effective_noise_sd() const {
    if (noise_sd >= 0.0) return noise_sd;
    switch (kind) {
        case DatasetKind::TwoPath: return 0.3;
        default: return 0.5;
    }
}

std::uint64_t DataSpec::effective_split_seed() const {
    return split_seed != 0 ? split_seed : derive_seed(seed, 101);
}

models::HeadKind default_head_for(losses::Family family) {
    switch (family) {
        case losses::Family::GaussianNll: return models::HeadKind::Gaussian;
        case losses::Family::MdnNll: return models::HeadKind::Mixture;
        case losses::Family::Pinball: return models::HeadKind::Quantile;
        default: return models::HeadKind::Scalar;
    }
}

void RunConfig::validate() const {
    if (schema != 1) throw ConfigError("unsupported schema version");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (model.batch_norm && batch_size < 2)
        throw ConfigError("batch_size must be >= 2 with batch norm enabled");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (eval_cadence < 1) throw ConfigError("eval_cadence must be >= 1");
    loss.validate();
    if (model.head != default_head_for(loss.family))
        throw ConfigError("loss family '" + losses::family_name(loss.family) +
                          "' requires head '" + models::head_name(default_head_for(loss.family)) +
                          "', got '" + models::head_name(model.head) + "'");
    if (model.head == models::HeadKind::Quantile &&
        model.quantile_count != loss.quantile_levels.size())
        throw ConfigError("quantile head arity does not match quantile levels");
    if (data.kind == DatasetKind::Csv && data.csv_path.empty())
        throw ConfigError("csv dataset requires csv_path");
    if (data.separation && (*data.separation < 0.0 || *data.separation > 1.0))
        throw ConfigError("separation must lie in [0,1]");
    const double rsum = data.split_ratios[0] + data.split_ratios[1] + data.split_ratios[2];
    if (std::abs(rsum - 1.0) > 1e-9) throw ConfigError("split_ratios must sum to 1");
}

std::vector<std::uint64_t> SweepSpec::resolve_seeds(std::uint64_t base_seed) const {
    if (!seed_values.empty()) return seed_values;
    const std::size_t count = num_seeds > 0 ? num_seeds : 1;
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(base_seed, i);
    return seeds;
}

namespace {

struct KeyValue {
    std::string section, key, value;
    int line = 0;
};

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::vector<KeyValue> tokenize(const std::string& text, const std::string& origin) {
    std::vector<KeyValue> out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // strip comments (# or ;) outside of values containing them is not supported
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(origin, line_no, "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
        KeyValue kv;
        kv.section = section;
        kv.key = trim(line.substr(0, eq));
        kv.value = trim(line.substr(eq + 1));
        kv.line = line_no;
        if (kv.key.empty()) fail(origin, line_no, "empty key");
        out.push_back(std::move(kv));
    }
    return out;
}

double parse_double(const KeyValue& kv, const std::string& origin) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
    if (ec != std::errc{} || ptr != kv.value.data() + kv.value.size())
        fail(origin, kv.line, "expected a number for '" + kv.key + "', got '" + kv.value + "'");
    return v;
}

std::uint64_t parse_u64(const KeyValue& kv, const std::string& origin) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(kv.value.data(), kv.value.data() + kv.value.size(), v);
    if (ec != std::errc{} || ptr != kv.value.data() + kv.value.size())
        fail(origin, kv.line, "expected a nonnegative integer for '" + kv.key + "'");
    return v;
}

bool parse_bool(const KeyValue& kv, const std::string& origin) {
    if (kv.value == "true" || kv.value == "1") return true;
    if (kv.value == "false" || kv.value == "0") return false;
    fail(origin, kv.line, "expected true/false for '" + kv.key + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

std::vector<double> parse_double_list(const KeyValue& kv, const std::string& origin) {
    std::vector<double> out;
    for (const auto& item : split_list(kv.value)) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size())
            fail(origin, kv.line, "expected a number list for '" + kv.key + "'");
        out.push_back(v);
    }
    if (out.empty()) fail(origin, kv.line, "empty list for '" + kv.key + "'");
    return out;
}

std::vector<std::size_t> parse_size_list(const KeyValue& kv, const std::string& origin) {
    std::vector<std::size_t> out;
    for (double v : parse_double_list(kv, origin)) {
        if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
            fail(origin, kv.line, "expected positive integers for '" + kv.key + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace

Experiment parse_experiment_text(const std::string& text, const std::string& origin) {
    Experiment exp;
    RunConfig& cfg = exp.run;
    bool head_set = false;
    bool dropout_set = false;
    // Weights default to the out-of-the-box alpha=1, beta=0 setting; an
    // explicit variant key applies the named coupling on top.
    losses::Variant variant = losses::Variant::Custom;
    double alpha = 1.0, beta = 0.0, epsilon = 1e-8;
    bool schema_seen = false;

    for (const KeyValue& kv : tokenize(text, origin)) {
        const std::string& s = kv.section;
        const std::string& k = kv.key;
        if (s.empty()) {
            if (k == "schema") {
                cfg.schema = static_cast<int>(parse_u64(kv, origin));
                schema_seen = true;
            } else if (k == "label") {
                cfg.label = kv.value;
            } else {
                fail(origin, kv.line, "unknown key '" + k + "'");
            }
        } else if (s == "data") {
            if (k == "kind") {
                try {
                    cfg.data.kind = dataset_kind_from_name(kv.value);
                } catch (const ConfigError& e) {
                    fail(origin, kv.line, e.what());
                }
            } else if (k == "n") cfg.data.n = parse_u64(kv, origin);
            else if (k == "seed") cfg.data.seed = parse_u64(kv, origin);
            else if (k == "noise_sd") cfg.data.noise_sd = parse_double(kv, origin);
            else if (k == "radius") cfg.data.radius = parse_double(kv, origin);
            else if (k == "slope") cfg.data.slope = parse_double(kv, origin);
            else if (k == "csv_path") cfg.data.csv_path = kv.value;
            else if (k == "target_column") cfg.data.target_column = kv.value;
            else if (k == "feature_columns") cfg.data.feature_columns = split_list(kv.value);
            else if (k == "split_ratios") {
                const auto r = parse_double_list(kv, origin);
                if (r.size() != 3) fail(origin, kv.line, "split_ratios needs 3 values");
                cfg.data.split_ratios = {r[0], r[1], r[2]};
            } else if (k == "split_seed") cfg.data.split_seed = parse_u64(kv, origin);
            else if (k == "separation") cfg.data.separation = parse_double(kv, origin);
            else fail(origin, kv.line, "unknown key 'data." + k + "'");
        } else if (s == "model") {
            if (k == "hidden") cfg.model.hidden = parse_size_list(kv, origin);
            else if (k == "activation") {
                try {
                    cfg.model.activation = models::activation_from_name(kv.value);
                } catch (const ConfigError& e) {
                    fail(origin, kv.line, e.what());
                }
            } else if (k == "dropout") {
                cfg.model.dropout = parse_double_list(kv, origin);
                dropout_set = true;
            } else if (k == "batch_norm") cfg.model.batch_norm = parse_bool(kv, origin);
            else if (k == "head") {
                try {
                    cfg.model.head = models::head_from_name(kv.value);
                } catch (const ConfigError& e) {
                    fail(origin, kv.line, e.what());
                }
                head_set = true;
            } else if (k == "components") cfg.model.mixture_components = parse_u64(kv, origin);
            else fail(origin, kv.line, "unknown key 'model." + k + "'");
        } else if (s == "loss") {
            if (k == "family") {
                try {
                    cfg.loss.family = losses::family_from_name(kv.value);
                } catch (const ConfigError& e) {
                    fail(origin, kv.line, e.what());
                }
            } else if (k == "variant") {
                try {
                    variant = losses::variant_from_name(kv.value);
                } catch (const ConfigError& e) {
                    fail(origin, kv.line, e.what());
                }
            } else if (k == "alpha") alpha = parse_double(kv, origin);
            else if (k == "beta") beta = parse_double(kv, origin);
            else if (k == "epsilon") epsilon = parse_double(kv, origin);
            else if (k == "quantiles") cfg.loss.quantile_levels = parse_double_list(kv, origin);
            else fail(origin, kv.line, "unknown key 'loss." + k + "'");
        } else if (s == "train") {
            if (k == "epochs") cfg.epochs = parse_u64(kv, origin);
            else if (k == "batch_size") cfg.batch_size = parse_u64(kv, origin);
            else if (k == "lr") cfg.lr = parse_double(kv, origin);
            else if (k == "weight_decay") cfg.weight_decay = parse_double(kv, origin);
            else if (k == "seed") cfg.seed = parse_u64(kv, origin);
            else if (k == "eval_cadence") cfg.eval_cadence = parse_u64(kv, origin);
            else fail(origin, kv.line, "unknown key 'train." + k + "'");
        } else if (s == "metrics") {
            if (k == "js_bins") cfg.metrics.js_bins = static_cast<int>(parse_u64(kv, origin));
            else if (k == "kde_points") cfg.metrics.kde_points = parse_u64(kv, origin);
            else fail(origin, kv.line, "unknown key 'metrics." + k + "'");
        } else if (s == "sweep") {
            if (!exp.sweep) exp.sweep.emplace();
            if (k == "separation_values") exp.sweep->separation_values = parse_double_list(kv, origin);
            else if (k == "alpha_values") exp.sweep->alpha_values = parse_double_list(kv, origin);
            else if (k == "families") exp.sweep->families = split_list(kv.value);
            else if (k == "seed_values") {
                for (const auto& item : split_list(kv.value)) {
                    std::uint64_t v = 0;
                    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
                    if (ec != std::errc{} || ptr != item.data() + item.size())
                        fail(origin, kv.line, "expected integer list for 'seed_values'");
                    exp.sweep->seed_values.push_back(v);
                }
            } else if (k == "num_seeds") exp.sweep->num_seeds = parse_u64(kv, origin);
            else fail(origin, kv.line, "unknown key 'sweep." + k + "'");
        } else {
            fail(origin, kv.line, "unknown section '" + s + "'");
        }
    }
    if (!schema_seen) throw ConfigError(origin + ": missing required key 'schema'");

    // Resolve the loss spec through the variant coupling.
    cfg.loss =
        losses::LossSpec::make(cfg.loss.family, variant, alpha, beta, epsilon, cfg.loss.quantile_levels);
    if (!head_set) cfg.model.head = default_head_for(cfg.loss.family);
    cfg.model.quantile_count = cfg.loss.quantile_levels.size();
    if (!dropout_set || cfg.model.dropout.size() == 1) {
        const double rate = dropout_set ? cfg.model.dropout[0] : 0.1;
        cfg.model.dropout.assign(cfg.model.hidden.size(), rate);
    }
    if (cfg.model.dropout.size() != cfg.model.hidden.size())
        throw ConfigError(origin + ": dropout needs one rate per hidden layer (or a single rate)");
    cfg.validate();
    return exp;
}

Experiment load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_text(ss.str(), path);
}

std::string canonical_config_json(const RunConfig& cfg) {
    json j;
    j["schema"] = cfg.schema;
    j["label"] = cfg.label;
    j["data"] = {{"kind", dataset_kind_name(cfg.data.kind)},
                 {"n", cfg.data.n},
                 {"seed", cfg.data.seed},
                 {"noise_sd", cfg.data.effective_noise_sd()},
                 {"split_ratios", cfg.data.split_ratios},
                 {"split_seed", cfg.data.effective_split_seed()}};
    if (cfg.data.kind == DatasetKind::TwoPath) j["data"]["radius"] = cfg.data.radius;
    if (cfg.data.kind == DatasetKind::UnimodalLinear) j["data"]["slope"] = cfg.data.slope;
    if (cfg.data.kind == DatasetKind::Csv) {
        j["data"]["csv_path"] = cfg.data.csv_path;
        j["data"]["target_column"] = cfg.data.target_column;
        j["data"]["feature_columns"] = cfg.data.feature_columns;
    }
    if (cfg.data.separation) j["data"]["separation"] = *cfg.data.separation;
    j["model"] = {{"hidden", cfg.model.hidden},
                  {"activation", models::activation_name(cfg.model.activation)},
                  {"dropout", cfg.model.dropout},
                  {"batch_norm", cfg.model.batch_norm},
                  {"head", models::head_name(cfg.model.head)}};
    if (cfg.model.head == models::HeadKind::Mixture)
        j["model"]["components"] = cfg.model.mixture_components;
    j["loss"] = {{"family", losses::family_name(cfg.loss.family)},
                 {"variant", losses::variant_name(cfg.loss.variant)},
                 {"alpha", cfg.loss.alpha},
                 {"beta", cfg.loss.beta},
                 {"epsilon", cfg.loss.epsilon}};
    if (cfg.loss.family == losses::Family::Pinball)
        j["loss"]["quantiles"] = cfg.loss.quantile_levels;
    j["metrics"] = {{"js_bins", cfg.metrics.js_bins}, {"kde_points", cfg.metrics.kde_points}};
    j["train"] = {{"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size},
                  {"lr", cfg.lr},
                  {"weight_decay", cfg.weight_decay},
                  {"seed", cfg.seed},
                  {"eval_cadence", cfg.eval_cadence}};
    return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
    const std::string bytes = canonical_config_json(cfg);
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a 64
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace distreg::cli
