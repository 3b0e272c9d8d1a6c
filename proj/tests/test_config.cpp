#include "smd/config.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace smd;

namespace {

std::size_t error_line(const std::string& text, const std::vector<std::pair<std::string, std::string>>& ov = {}) {
    try {
        parse_config(text, ov);
    } catch (const ConfigError& e) {
        return e.line();
    }
    ADD_FAILURE() << "expected a ConfigError";
    return 0;
}

std::string error_text(const std::string& text, const std::vector<std::pair<std::string, std::string>>& ov = {}) {
    try {
        parse_config(text, ov);
    } catch (const ConfigError& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected a ConfigError";
    return {};
}

}  // namespace

TEST(Config, EmptyTextGivesDefaultProblem) {
    const ExperimentConfig c = parse_config("");
    EXPECT_EQ(c.problem.id, "sgd_conv");
    EXPECT_EQ(c.problem.p, 1000u);
    EXPECT_EQ(c.mirror.kind, "quadratic");
    EXPECT_EQ(c.step.kind, "s1");
    const ExperimentConfig d = parse_config("{}");
    EXPECT_EQ(config_to_json(c), config_to_json(d));
}

TEST(Config, DefaultsPerProblem) {
    EXPECT_EQ(default_config("ct").mirror.kind, "nonneg_quadratic");
    EXPECT_EQ(default_config("ct").problem.n, 256u);
    EXPECT_EQ(default_config("ct").sampler.b, 400u);
    EXPECT_EQ(default_config("entropy").mirror.kind, "entropy_simplex");
    EXPECT_EQ(default_config("entropy").run.metrics, std::vector<std::string>{"l1_sq"});
    EXPECT_EQ(default_config("sparse").mirror.kind, "elastic_net");
    EXPECT_DOUBLE_EQ(default_config("sparse").mirror.beta, 80.0);
    EXPECT_EQ(default_config("tv").mirror.kind, "product");
    EXPECT_THROW(default_config("nope"), ConfigError);
}

TEST(Config, FileValuesOverrideDefaults) {
    const auto c = parse_config(R"({"problem": {"id": "sparse", "params": {"p": 300}},
                                    "step": {"kind": "s3", "tau": 1.5},
                                    "sampler": {"b": 4}})");
    EXPECT_EQ(c.problem.id, "sparse");
    EXPECT_EQ(c.problem.p, 300u);
    EXPECT_EQ(c.problem.kernel, "power_kernel");
    EXPECT_EQ(c.step.kind, "s3");
    EXPECT_DOUBLE_EQ(c.step.tau, 1.5);
    EXPECT_EQ(c.sampler.b, 4u);
}

TEST(Config, UnknownKeyReportsItsLine) {
    const std::string text = "{\n  \"problem\": {\"id\": \"ct\"},\n  \"run\": {\n    \"itres\": 5\n  }\n}\n";
    EXPECT_EQ(error_line(text), 4u);
    EXPECT_NE(error_text(text).find("run.itres"), std::string::npos);
    EXPECT_NE(error_text(text).find("line 4"), std::string::npos);
}

TEST(Config, UnknownTopLevelKey) {
    EXPECT_EQ(error_line("{\"labl\": 1}"), 1u);
    EXPECT_NO_THROW(parse_config("{\"label\": \"anything\"}"));
}

TEST(Config, BadValueReportsItsLine) {
    const std::string text = "{\n\"step\": {\n\"kind\": \"s9\"}}";
    EXPECT_EQ(error_line(text), 3u);
    EXPECT_NE(error_text(text).find("step.kind"), std::string::npos);
    EXPECT_EQ(error_line("{\n\"run\": {\"iters\": -3}}"), 2u);
    EXPECT_EQ(error_line("{\n\n\"noise\": {\"delta_rel\": \"big\"}}"), 3u);
}

TEST(Config, MalformedJsonReportsItsLine) {
    const std::string text = "{\n  \"problem\": {\"id\": \"ct\"},\n  \"run\": {\"iters\" 5}\n}\n";
    EXPECT_EQ(error_line(text), 3u);
    EXPECT_NE(error_text(text).find("malformed JSON"), std::string::npos);
}

TEST(Config, CommandLineOverrides) {
    const auto c = parse_config(R"({"run": {"iters": 10}})",
                                {{"run.iters", "25"}, {"problem.id", "entropy"}, {"output.dir", "res/a"}});
    EXPECT_EQ(c.run.iters, 25u);
    EXPECT_EQ(c.problem.id, "entropy");
    EXPECT_EQ(c.output.dir, "res/a");
}

TEST(Config, OverrideErrorsAreLabelled) {
    const std::string msg = error_text("{}", {{"step.kind", "s7"}});
    EXPECT_EQ(msg.rfind("--set", 0), 0u) << msg;
    EXPECT_EQ(error_line("{}", {{"step.kind", "s7"}}), 0u);
    EXPECT_THROW(parse_config("{}", {{"run.bogus", "1"}}), ConfigError);
}

TEST(Config, ProductMapOnlyForTv) {
    EXPECT_THROW(parse_config(R"({"problem": {"id": "tv"}, "mirror": {"kind": "quadratic"}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"mirror": {"kind": "product"}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"problem": {"id": "tv"}, "mirror": {"beta": 0}})"), ConfigError);
    EXPECT_NO_THROW(parse_config(R"({"problem": {"id": "tv"}})"));
}

TEST(Config, CrossFieldChecks) {
    EXPECT_THROW(parse_config(R"({"sampler": {"kind": "cyclic", "b": 2}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"rate": {"rows": 5, "b": 6}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"rate": {"deltas": [0.1]}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"rate": {"band": [1.3, 0.7]}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"run": {"metrics": ["rel_l2", "mse"]}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"step": {"tau": 0.5}})"), ConfigError);
}

TEST(Config, ResolvedJsonRoundTrips) {
    for (const std::string id : {"sgd_conv", "ct", "entropy", "sparse", "tv"}) {
        ExperimentConfig c = default_config(id);
        c.run.master_seed = 99;
        c.step.kind = "s3";
        c.step.tau = 1.25;
        const std::string once = config_to_json(c);
        const std::string twice = config_to_json(parse_config(once));
        EXPECT_EQ(once, twice) << id;
    }
}

TEST(Config, SplitOverride) {
    EXPECT_EQ(split_override("a.b=c"), (std::pair<std::string, std::string>{"a.b", "c"}));
    EXPECT_EQ(split_override("x=1=2"), (std::pair<std::string, std::string>{"x", "1=2"}));
    EXPECT_EQ(split_override("x="), (std::pair<std::string, std::string>{"x", ""}));
    EXPECT_THROW(split_override("novalue"), ConfigError);
    EXPECT_THROW(split_override("=3"), ConfigError);
}
