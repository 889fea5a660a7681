#include <string>

#include "distreg/config.hpp"
#include "doctest.h"

using namespace distreg;
using namespace distreg::cli;

namespace {

const char* kFullConfig = R"(
schema = 1
label = demo

[data]
kind = two-path
n = 2000
seed = 9
noise_sd = 0.3
radius = 5
split_ratios = 0.7, 0.15, 0.15

[model]
hidden = 64, 32
activation = gelu
dropout = 0.1
batch_norm = false

[loss]
family = wasserstein
variant = default

[train]
epochs = 50
batch_size = 64
lr = 0.001
seed = 4
)";

}  // namespace

TEST_CASE("parse: full config resolves defaults and coupling") {
    const Experiment exp = parse_experiment_text(kFullConfig);
    const RunConfig& cfg = exp.run;
    CHECK(cfg.label == "demo");
    CHECK(cfg.data.kind == DatasetKind::TwoPath);
    CHECK(cfg.data.n == 2000);
    CHECK(cfg.loss.family == losses::Family::CompositeWasserstein);
    CHECK(cfg.loss.alpha == 1.0);
    CHECK(cfg.loss.beta == 0.0);
    CHECK(cfg.model.head == models::HeadKind::Scalar);  // inferred from the family
    CHECK(cfg.model.dropout == std::vector<double>{0.1, 0.1});  // broadcast
    CHECK(cfg.seed == 4);
    CHECK(!exp.sweep);
}

TEST_CASE("parse: unknown keys and sections carry line numbers") {
    const std::string bad = "schema = 1\n\n[data]\nkind = two-path\nbogus = 1\n";
    try {
        parse_experiment_text(bad, "test.ini");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("test.ini:5") != std::string::npos);
        CHECK(msg.find("bogus") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_experiment_text("schema = 1\n[nosuch]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_text("schema = 1\n[data]\nkind == two-path\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_text("label = x\n"), ConfigError);  // missing schema
    CHECK_THROWS_AS(parse_experiment_text("schema = 2\n"), ConfigError);
}

TEST_CASE("parse: value validation errors") {
    CHECK_THROWS_AS(parse_experiment_text("schema = 1\n[data]\nn = not-a-number\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_text("schema = 1\n[data]\nseparation = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_text("schema = 1\n[data]\nsplit_ratios = 0.5,0.5\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_experiment_text("schema = 1\n[train]\nepochs = 0\n"), ConfigError);
    CHECK_THROWS_AS(
        parse_experiment_text("schema = 1\n[loss]\nfamily = mse\n[model]\nhead = gaussian\n"),
        ConfigError);
    CHECK_THROWS_AS(parse_experiment_text("schema = 1\n[data]\nkind = csv\n"), ConfigError);
}

TEST_CASE("parse: variant coupling from the file") {
    const Experiment simple = parse_experiment_text(
        "schema = 1\n[loss]\nfamily = cramer\nvariant = simple\nalpha = 0.5\n");
    CHECK(simple.run.loss.alpha == 0.5);
    CHECK(simple.run.loss.beta == 0.0);

    const Experiment range = parse_experiment_text(
        "schema = 1\n[loss]\nfamily = wasserstein\nvariant = range\nalpha = 0.8\n");
    CHECK(range.run.loss.beta == doctest::Approx(0.4));

    const Experiment custom =
        parse_experiment_text("schema = 1\n[loss]\nfamily = wasserstein\nalpha = 2\nbeta = 0.3\n");
    CHECK(custom.run.loss.alpha == 2.0);
    CHECK(custom.run.loss.beta == 0.3);
}

TEST_CASE("parse: pinball levels flow into the model arity") {
    const Experiment exp = parse_experiment_text(
        "schema = 1\n[loss]\nfamily = pinball\nquantiles = 0.05, 0.5, 0.95\n");
    CHECK(exp.run.model.head == models::HeadKind::Quantile);
    CHECK(exp.run.model.quantile_count == 3);
    CHECK(exp.run.loss.quantile_levels == std::vector<double>{0.05, 0.5, 0.95});
}

TEST_CASE("parse: sweep section") {
    const std::string text = R"(
schema = 1
[data]
kind = unimodal-linear
[loss]
family = mse
[sweep]
separation_values = 0, 0.5, 1
families = wasserstein:default, mse
seed_values = 1, 2, 3, 4, 5
)";
    const Experiment exp = parse_experiment_text(text);
    REQUIRE(exp.sweep.has_value());
    CHECK(exp.sweep->separation_values == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(exp.sweep->families == std::vector<std::string>{"wasserstein:default", "mse"});
    CHECK(exp.sweep->seed_values.size() == 5);
}

TEST_CASE("config hash: stable under key reordering, sensitive to values") {
    const Experiment a = parse_experiment_text(
        "schema = 1\n[data]\nkind = two-path\nn = 100\nseed = 3\n[loss]\nfamily = mse\n");
    const Experiment b = parse_experiment_text(
        "schema = 1\n[loss]\nfamily = mse\n[data]\nseed = 3\nn = 100\nkind = two-path\n");
    CHECK(config_hash(a.run) == config_hash(b.run));
    CHECK(canonical_config_json(a.run) == canonical_config_json(b.run));

    const Experiment c = parse_experiment_text(
        "schema = 1\n[data]\nkind = two-path\nn = 101\nseed = 3\n[loss]\nfamily = mse\n");
    CHECK(config_hash(a.run) != config_hash(c.run));

    // hash is 16 lowercase hex chars
    const std::string h = config_hash(a.run);
    CHECK(h.size() == 16);
    for (char ch : h) CHECK(((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f')));
}

TEST_CASE("comments and blank lines are ignored") {
    const Experiment exp = parse_experiment_text(
        "# top comment\nschema = 1\n\n; alt comment\n[data]\nkind = two-path  # trailing\n");
    CHECK(exp.run.data.kind == DatasetKind::TwoPath);
}
