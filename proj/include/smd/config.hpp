#pragma once

#include "smd/engine.hpp"
#include "smd/noise.hpp"
#include "smd/stepsize.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smd {

// Raised for schema violations; `line` is 1-based in the config text (0 = unknown).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, std::size_t line = 0) : std::runtime_error(msg), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ProblemSpec {
    std::string id = "sgd_conv";      // sgd_conv | ct | entropy | sparse | tv
    std::size_t p = 0;                // integral problems: sample count
    std::size_t n = 0;                // ct: grid side
    std::size_t angles = 0;
    std::size_t rays = 0;
    std::string kernel;               // integral problems; empty = the problem's own
    std::string truth;
};

struct MirrorSpec {
    std::string kind;                 // quadratic | nonneg_quadratic | entropy_simplex | elastic_net | product
    double beta = 0.0;
    std::string weights;              // quadrature | unit
};

struct StepSpec {
    std::string kind = "s2";          // s1 | s2 | s3
    double mu0 = 1.0;
    double mu1 = 0.0;                 // 0 = default cap
    double tau = 1.0;
    double t = 0.0;                   // s1 constant; 0 = table mu0 / ||A_i||^2
    bool strict = true;               // reject rules outside their hypotheses
};

struct SamplerSpec {
    std::string kind = "uniform";     // uniform | cyclic
    std::size_t b = 1;
};

struct NoiseConfig {
    NoiseSpec spec;
    bool fresh = false;               // redraw noise for every run
};

struct RunSpec {
    std::size_t iters = 1000;
    std::size_t K = 1;
    StopSpec stop;
    std::vector<std::string> metrics; // rel_l2 | l1_sq | bregman | residual
    std::uint64_t master_seed = 1;
    bool same_seed = false;           // every run uses master_seed (test hook)
};

struct OutputSpec {
    std::string dir = "out";
    std::size_t trace_every = 1;
    std::size_t full_residual_every = 0;
};

struct RateSpec {
    std::size_t rows = 30;
    std::size_t cols = 40;
    double s_max = 1.0;
    double s_min = 1e-3;
    std::uint64_t operator_seed = 7;
    std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
    double c = 1.0;
    std::size_t K = 20;
    std::size_t b = 1;
    double t = 0.0;                   // 0 = 1 / max_i ||A_i||^2
    double band_lo = 0.7;
    double band_hi = 1.3;
    bool fresh_noise = true;
};

struct ExperimentConfig {
    ProblemSpec problem;
    MirrorSpec mirror;
    StepSpec step;
    SamplerSpec sampler;
    NoiseConfig noise;
    RunSpec run;
    OutputSpec output;
    RateSpec rate;
};

// Parses and validates; unset fields get the problem's defaults.
// `overrides` are dotted-path assignments applied before validation.
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Defaults for a problem id with no config file.
ExperimentConfig default_config(const std::string& problem_id);

// Fully resolved config as pretty JSON.
std::string config_to_json(const ExperimentConfig& cfg);

// "a.b=c" -> ("a.b", "c")
std::pair<std::string, std::string> split_override(const std::string& assignment);

}  // namespace smd
