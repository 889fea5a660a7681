#include "distreg/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "distreg/adam.hpp"
#include "distreg/errors.hpp"
#include "distreg/losses.hpp"
#include "distreg/metrics.hpp"
#include "nlohmann/json.hpp"

namespace distreg::trainer {

using json = nlohmann::json;

namespace {

// Distinct RNG stream tags derived from the run seed.
enum StreamTag : std::uint64_t { kInit = 1, kShuffle = 2, kDropout = 3, kSampling = 4 };

bool all_finite(const Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!std::isfinite(m[i])) return false;
    return true;
}

// Non-finite network outputs mean the optimizer blew up; callers record the
// divergence instead of tripping downstream loss contracts.
bool head_output_finite(const models::HeadOutput& out) {
    switch (out.kind) {
        case models::HeadKind::Scalar: return all_finite(out.scalar.value());
        case models::HeadKind::Gaussian:
            return all_finite(out.mu.value()) && all_finite(out.log_var.value());
        case models::HeadKind::Quantile: return all_finite(out.quantiles.value());
        case models::HeadKind::Mixture:
            return all_finite(out.pi_logits.value()) && all_finite(out.mixture_mu.value()) &&
                   all_finite(out.sigma.value());
    }
    return false;
}

ad::Var loss_for(const models::HeadOutput& out, const std::vector<double>& target,
                 const losses::LossSpec& spec) {
    switch (spec.family) {
        case losses::Family::CompositeWasserstein:
        case losses::Family::CompositeCramer:
            return losses::composite_loss(out.scalar, target, spec);
        case losses::Family::Mse: return losses::mse_loss(out.scalar, target);
        case losses::Family::GaussianNll: return losses::gaussian_nll(out.mu, out.log_var, target);
        case losses::Family::MdnNll:
            return losses::mdn_nll(out.pi_logits, out.mixture_mu, out.sigma, target);
        case losses::Family::Pinball:
            return losses::pinball_loss(out.quantiles, target, spec.quantile_levels);
    }
    throw ContractError("unhandled loss family");
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw ContractError("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

data::Dataset assemble_dataset(const cli::DataSpec& spec) {
    data::Dataset ds;
    switch (spec.kind) {
        case cli::DatasetKind::InverseSquare:
            ds = data::gen_inverse_square(spec.n, spec.effective_noise_sd(), spec.seed);
            break;
        case cli::DatasetKind::TwoPath:
            ds = data::gen_two_path(spec.n, spec.radius, spec.effective_noise_sd(), spec.seed);
            break;
        case cli::DatasetKind::UnimodalLinear:
            ds = data::gen_unimodal_linear(spec.n, spec.slope, spec.effective_noise_sd(), spec.seed);
            break;
        case cli::DatasetKind::Csv:
            ds = data::load_csv(spec.csv_path, spec.target_column, spec.feature_columns);
            break;
    }
    data::assign_split(ds, spec.split_ratios, spec.effective_split_seed());
    if (spec.separation) data::inject_separation(ds, *spec.separation, spec.seed);
    data::zscore_fit_transform(ds);
    return ds;
}

std::string EpochRecord::to_json_line() const {
    json j;
    j["epoch"] = epoch;
    j["train_loss"] = train_loss;
    if (val_rmse) j["val_rmse"] = *val_rmse;
    return j.dump();
}

std::string MetricsReport::to_json() const {
    json j;
    j["schema"] = 1;
    j["label"] = label;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["loss_family"] = loss_family;
    j["dataset"] = dataset;
    j["diverged"] = diverged;
    j["metrics"] = {{"test_loss", test_loss},
                    {"rmse", rmse},
                    {"mae", mae},
                    {"wasserstein", wasserstein},
                    {"js", js},
                    {"bc_target", bc_target},
                    {"bc_pred", bc_pred},
                    {"delta_bc", delta_bc},
                    {"val_rmse", val_rmse}};
    j["provenance"] = {{"split_ratios", split_ratios},
                       {"split_seed", split_seed},
                       {"last_batch_policy", last_batch_policy},
                       {"shuffle", "per-epoch-splitmix"},
                       {"scaler_y_mean", scaler_y_mean},
                       {"scaler_y_std", scaler_y_std}};
    j["config"] = config_json.empty() ? json::object() : json::parse(config_json);
    return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    const json j = json::parse(text);
    MetricsReport r;
    r.label = j.at("label").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.loss_family = j.at("loss_family").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.diverged = j.at("diverged").get<bool>();
    const json& m = j.at("metrics");
    r.test_loss = m.at("test_loss").get<double>();
    r.rmse = m.at("rmse").get<double>();
    r.mae = m.at("mae").get<double>();
    r.wasserstein = m.at("wasserstein").get<double>();
    r.js = m.at("js").get<double>();
    r.bc_target = m.at("bc_target").get<double>();
    r.bc_pred = m.at("bc_pred").get<double>();
    r.delta_bc = m.at("delta_bc").get<double>();
    r.val_rmse = m.at("val_rmse").get<double>();
    const json& p = j.at("provenance");
    r.split_ratios = p.at("split_ratios").get<std::array<double, 3>>();
    r.split_seed = p.at("split_seed").get<std::uint64_t>();
    r.last_batch_policy = p.at("last_batch_policy").get<std::string>();
    r.scaler_y_mean = p.at("scaler_y_mean").get<double>();
    r.scaler_y_std = p.at("scaler_y_std").get<double>();
    r.config_json = j.at("config").dump();
    return r;
}

RunResult train(const cli::RunConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    data::Dataset ds = assemble_dataset(cfg.data);

    models::ModelSpec mspec = cfg.model;
    mspec.input_dim = ds.dim();
    mspec.quantile_count = cfg.loss.quantile_levels.size();
    Rng init_rng(derive_seed(cfg.seed, kInit));
    auto model = std::make_unique<models::Model>(mspec, init_rng);
    Rng dropout_rng(derive_seed(cfg.seed, kDropout));

    ad::Adam::Options opt_opts;
    opt_opts.lr = cfg.lr;
    opt_opts.weight_decay = cfg.weight_decay;
    ad::Adam optimizer(model->parameters(), opt_opts);

    const bool drop_last = cfg.model.batch_norm;  // incomplete batches break BN variance
    const std::vector<std::size_t>& train_idx = ds.split.train;
    const Matrix val_X = ds.gather_features(ds.split.val);
    const std::vector<double> val_y = ds.gather_targets(ds.split.val);

    RunResult result;
    result.report.label = cfg.label;
    result.report.config_hash = cli::config_hash(cfg);
    result.report.seed = cfg.seed;
    result.report.loss_family =
        losses::family_name(cfg.loss.family) +
        (cfg.loss.is_composite() ? "-" + losses::variant_name(cfg.loss.variant) : "");
    result.report.dataset = cli::dataset_kind_name(cfg.data.kind);
    result.report.split_ratios = cfg.data.split_ratios;
    result.report.split_seed = cfg.data.effective_split_seed();
    result.report.last_batch_policy = drop_last ? "drop" : "keep";
    result.report.scaler_y_mean = ds.scaler_y.mean[0];
    result.report.scaler_y_std = ds.scaler_y.stddev[0];
    result.report.config_json = cli::canonical_config_json(cfg);

    bool diverged = false;
    for (std::size_t epoch = 1; epoch <= cfg.epochs && !diverged; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        Rng shuffle_rng(derive_seed(derive_seed(cfg.seed, kShuffle), epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            if (drop_last && end - start < cfg.batch_size) break;
            if (end - start < 1) break;
            const std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            const Matrix X = ds.gather_features(batch);
            const std::vector<double> y = ds.gather_targets(batch);

            models::HeadOutput out = model->forward(X, models::Mode::Train, dropout_rng);
            if (!head_output_finite(out)) {
                diverged = true;  // MDN-style instability: record, do not hide
                break;
            }
            ad::Var loss = loss_for(out, y, cfg.loss);
            const double loss_value = loss.scalar_value();
            if (!std::isfinite(loss_value)) {
                diverged = true;
                break;
            }
            if (cfg.loss.is_composite() &&
                !(loss_value >= 0.0 && loss_value < cfg.loss.composite_bound()))
                throw ContractError("composite loss " + std::to_string(loss_value) +
                                    " escaped [0, 1+alpha+beta)");
            ad::backward(loss);
            optimizer.step();
            loss_sum += loss_value;
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
        if (!diverged && (epoch % cfg.eval_cadence == 0 || epoch == cfg.epochs)) {
            const std::vector<double> val_pred = model->predict_point(val_X);
            rec.val_rmse = metrics::rmse(val_pred, val_y);
        }
        if (on_epoch) on_epoch(rec);
        result.epoch_log.push_back(rec);
    }

    MetricsReport& rep = result.report;
    rep.diverged = diverged;
    if (!diverged) {
        const Matrix test_X = ds.gather_features(ds.split.test);
        const std::vector<double> test_y = ds.gather_targets(ds.split.test);

        // native-family loss over the whole test split, eval mode
        models::HeadOutput test_out = model->forward_eval(test_X);
        rep.test_loss = loss_for(test_out, test_y, cfg.loss).scalar_value();
        if (!std::isfinite(rep.test_loss)) rep.diverged = true;

        const std::vector<double> point_pred = model->predict_point(test_X);
        rep.rmse = metrics::rmse(point_pred, test_y);
        rep.mae = metrics::mae(point_pred, test_y);

        Rng sampling_rng(derive_seed(cfg.seed, kSampling));
        const std::vector<double> pred_sample = model->predict_sample(test_X, sampling_rng);
        rep.wasserstein = metrics::exact_wasserstein(pred_sample, test_y);
        rep.js = metrics::js_divergence(pred_sample, test_y, cfg.metrics.js_bins);
        rep.bc_target = metrics::bimodality_coefficient(test_y);
        rep.bc_pred = metrics::bimodality_coefficient(pred_sample);
        rep.delta_bc = std::fabs(rep.bc_target - rep.bc_pred);
        for (auto it = result.epoch_log.rbegin(); it != result.epoch_log.rend(); ++it)
            if (it->val_rmse) {
                rep.val_rmse = *it->val_rmse;
                break;
            }

        // density curves for plots
        const double bandwidth =
            std::max(metrics::scott_bandwidth(test_y), metrics::scott_bandwidth(pred_sample));
        result.kde_grid = metrics::density_grid(test_y, pred_sample, bandwidth, cfg.metrics.kde_points);
        result.target_density = metrics::kde_density(test_y, result.kde_grid, bandwidth);
        result.pred_density = metrics::kde_density(pred_sample, result.kde_grid, bandwidth);
        result.test_targets = test_y;
        result.test_pred_sample = pred_sample;
    }

    rep.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.model = std::move(model);
    return result;
}

std::vector<cli::RunConfig> expand_sweep(const cli::RunConfig& base, const cli::SweepSpec& spec) {
    // Absent axes contribute the base config's single point.
    std::vector<std::optional<double>> separations;
    if (spec.separation_values.empty())
        separations.push_back(base.data.separation);
    else
        for (double s : spec.separation_values) separations.emplace_back(s);

    std::vector<double> alphas =
        spec.alpha_values.empty() ? std::vector<double>{base.loss.alpha} : spec.alpha_values;

    struct FamilyChoice {
        losses::Family family;
        losses::Variant variant;
    };
    std::vector<FamilyChoice> families;
    if (spec.families.empty()) {
        families.push_back({base.loss.family, base.loss.variant});
    } else {
        for (const std::string& name : spec.families) {
            // "family" or "family:variant"
            const auto colon = name.find(':');
            FamilyChoice fc;
            fc.family = losses::family_from_name(colon == std::string::npos
                                                     ? name
                                                     : name.substr(0, colon));
            fc.variant = colon == std::string::npos
                             ? losses::Variant::Custom
                             : losses::variant_from_name(name.substr(colon + 1));
            families.push_back(fc);
        }
    }
    const std::vector<std::uint64_t> seeds = spec.resolve_seeds(base.seed);

    std::vector<cli::RunConfig> configs;
    for (const auto& sep : separations)
        for (const FamilyChoice& fc : families)
            for (double alpha : alphas)
                for (std::uint64_t seed : seeds) {
                    cli::RunConfig cfg = base;
                    cfg.data.separation = sep;
                    cfg.seed = seed;
                    cfg.loss = losses::LossSpec::make(fc.family, fc.variant, alpha, base.loss.beta,
                                                      base.loss.epsilon, base.loss.quantile_levels);
                    cfg.model.head = cli::default_head_for(fc.family);
                    cfg.model.quantile_count = cfg.loss.quantile_levels.size();
                    configs.push_back(std::move(cfg));
                }
    std::sort(configs.begin(), configs.end(),
              [](const cli::RunConfig& a, const cli::RunConfig& b) {
                  return cli::config_hash(a) < cli::config_hash(b);
              });
    return configs;
}

SweepResult sweep(const cli::RunConfig& base, const cli::SweepSpec& spec, std::size_t jobs) {
    const std::vector<cli::RunConfig> configs = expand_sweep(base, spec);
    SweepResult result;
    result.rows.resize(configs.size());

    if (jobs < 1) jobs = 1;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            result.rows[i].config = configs[i];
            try {
                result.rows[i].report = train(configs[i]).report;
            } catch (const std::exception&) {
                // a failed run is recorded as diverged; the sweep continues
                MetricsReport& r = result.rows[i].report;
                r.label = configs[i].label;
                r.config_hash = cli::config_hash(configs[i]);
                r.seed = configs[i].seed;
                r.loss_family = losses::family_name(configs[i].loss.family);
                r.dataset = cli::dataset_kind_name(configs[i].data.kind);
                r.config_json = cli::canonical_config_json(configs[i]);
                r.diverged = true;
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Aggregate over seeds: group rows by their config with the seed removed.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        cli::RunConfig key = configs[i];
        key.seed = 0;
        const std::string key_hash = cli::config_hash(key);
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == key_hash; });
        if (it == groups.end()) {
            groups.push_back({key_hash, {i}});
        } else {
            it->second.push_back(i);
        }
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    for (const auto& [key_hash, rows] : groups) {
        SweepResult::Aggregate agg;
        agg.grid_hash = key_hash;
        const cli::RunConfig& first = configs[rows.front()];
        agg.label = first.label;
        agg.separation = first.data.separation.value_or(0.0);
        agg.alpha = first.loss.alpha;
        agg.family = losses::family_name(first.loss.family) +
                     (first.loss.is_composite() ? "-" + losses::variant_name(first.loss.variant) : "");
        std::vector<double> rmses, w1s, jss, dbcs, losses_;
        for (std::size_t i : rows) {
            const MetricsReport& r = result.rows[i].report;
            ++agg.runs;
            if (r.diverged) {
                ++agg.diverged;
                continue;
            }
            rmses.push_back(r.rmse);
            w1s.push_back(r.wasserstein);
            jss.push_back(r.js);
            dbcs.push_back(r.delta_bc);
            losses_.push_back(r.test_loss);
        }
        if (!rmses.empty()) {
            agg.median_rmse = median(rmses);
            agg.mean_rmse = 0.0;
            for (double v : rmses) agg.mean_rmse += v;
            agg.mean_rmse /= static_cast<double>(rmses.size());
            agg.median_wasserstein = median(w1s);
            agg.median_js = median(jss);
            agg.median_delta_bc = median(dbcs);
            agg.median_test_loss = median(losses_);
        }
        result.aggregates.push_back(std::move(agg));
    }
    return result;
}

}  // namespace distreg::trainer
