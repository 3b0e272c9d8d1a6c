#include "smd/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>

namespace smd {

using nlohmann::json;

namespace {

struct Context {
    const std::string& text;
    std::set<std::string> overridden;

    // line of the dotted key in the raw text, found by walking quoted names
    std::size_t line_of(const std::string& path) const {
        if (overridden.count(path))
            return 0;
        std::size_t pos = 0;
        std::size_t start = 0;
        while (start <= path.size()) {
            const std::size_t dot = path.find('.', start);
            const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            const std::size_t found = text.find('"' + key + '"', pos);
            if (found == std::string::npos)
                return 0;
            pos = found + key.size() + 2;
            if (dot == std::string::npos)
                break;
            start = dot + 1;
        }
        return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
    }

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        const std::size_t line = line_of(path);
        std::string where = line ? "line " + std::to_string(line) + ": " : (overridden.count(path) ? "--set " : "");
        throw ConfigError(where + path + ": " + msg, line);
    }
};

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"", {"label", "problem", "mirror", "step", "sampler", "noise", "run", "output", "rate"}},
        {"problem", {"id", "params"}},
        {"problem.params", {"p", "n", "angles", "rays", "kernel", "truth"}},
        {"mirror", {"kind", "beta", "weights"}},
        {"step", {"kind", "mu0", "mu1", "tau", "t", "strict"}},
        {"sampler", {"kind", "b"}},
        {"noise", {"model", "delta_rel", "seed", "fresh"}},
        {"run", {"iters", "K", "stop", "metrics", "master_seed", "same_seed"}},
        {"run.stop", {"kind", "n", "c", "exponent", "tau"}},
        {"output", {"dir", "trace_every", "full_residual_every"}},
        {"rate", {"rows", "cols", "s_max", "s_min", "operator_seed", "deltas", "c", "K", "b", "t", "band",
                  "fresh_noise"}},
    };
    return s;
}

void check_keys(const json& node, const std::string& path, const Context& ctx) {
    auto it = schema().find(path);
    if (it == schema().end())
        return;
    if (!node.is_object())
        ctx.fail(path.empty() ? "(root)" : path, "expected an object");
    for (const auto& [key, value] : node.items()) {
        const std::string child = path.empty() ? key : path + "." + key;
        if (!it->second.count(key))
            ctx.fail(child, "unknown key");
        if (schema().count(child))
            check_keys(value, child, ctx);
    }
}

const json* find(const json& root, const std::string& path) {
    const json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key))
            return nullptr;
        node = &(*node)[key];
        if (dot == std::string::npos)
            return node;
        start = dot + 1;
    }
}

void get(const json& root, const std::string& path, const Context& ctx, std::string& out,
         const std::set<std::string>& allowed = {}) {
    const json* v = find(root, path);
    if (!v)
        return;
    if (!v->is_string())
        ctx.fail(path, "expected a string");
    out = v->get<std::string>();
    if (!allowed.empty() && !allowed.count(out)) {
        std::string opts;
        for (const auto& a : allowed)
            opts += (opts.empty() ? "" : ", ") + a;
        ctx.fail(path, "'" + out + "' is not one of " + opts);
    }
}

void get(const json& root, const std::string& path, const Context& ctx, double& out, double lo, bool lo_strict) {
    const json* v = find(root, path);
    if (!v)
        return;
    if (!v->is_number())
        ctx.fail(path, "expected a number");
    const double d = v->get<double>();
    if (lo_strict ? !(d > lo) : !(d >= lo))
        ctx.fail(path, std::string("must be ") + (lo_strict ? "> " : ">= ") + std::to_string(lo));
    out = d;
}

template <class Int>
void get_int(const json& root, const std::string& path, const Context& ctx, Int& out, std::uint64_t lo) {
    const json* v = find(root, path);
    if (!v)
        return;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        ctx.fail(path, "expected a nonnegative integer");
    const auto u = v->get<std::uint64_t>();
    if (u < lo)
        ctx.fail(path, "must be >= " + std::to_string(lo));
    out = static_cast<Int>(u);
}

void get(const json& root, const std::string& path, const Context& ctx, bool& out) {
    const json* v = find(root, path);
    if (!v)
        return;
    if (!v->is_boolean())
        ctx.fail(path, "expected true or false");
    out = v->get<bool>();
}

void set_path(json& root, const std::string& path, const json& value) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty())
            throw ConfigError("--set " + path + ": empty key");
        if (!node->is_object())
            *node = json::object();
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace

std::pair<std::string, std::string> split_override(const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    return {assignment.substr(0, eq), assignment.substr(eq + 1)};
}

ExperimentConfig default_config(const std::string& id) {
    ExperimentConfig c;
    c.problem.id = id;
    c.noise.spec = {NoiseModel::gaussian, 0.01, 2024};
    c.run.metrics = {"rel_l2"};
    if (id == "sgd_conv") {
        c.problem.p = 1000;
        c.problem.kernel = "convolution_61";
        c.problem.truth = "sines";
        c.mirror = {"quadratic", 0.0, "quadrature"};
        c.step.kind = "s1";
        c.run.iters = 100000;
    } else if (id == "ct") {
        c.problem.n = 256;
        c.problem.angles = 90;
        c.problem.rays = 367;
        c.mirror = {"nonneg_quadratic", 0.0, "unit"};
        c.sampler.b = 400;
        c.run.iters = 600;
    } else if (id == "entropy") {
        c.problem.p = 1000;
        c.problem.kernel = "gauss_0064";
        c.problem.truth = "density";
        c.mirror = {"entropy_simplex", 0.0, "quadrature"};
        c.run.iters = 100000;
        c.run.metrics = {"l1_sq"};
    } else if (id == "sparse") {
        c.problem.p = 1000;
        c.problem.kernel = "power_kernel";
        c.problem.truth = "spikes";
        c.mirror = {"elastic_net", 80.0, "quadrature"};
        c.run.iters = 100000;
    } else if (id == "tv") {
        c.problem.p = 1000;
        c.problem.kernel = "gauss_0064";
        c.problem.truth = "plateaus";
        c.mirror = {"product", 400.0, "unit"};
        c.run.iters = 500000;
    } else {
        throw ConfigError("unknown problem id '" + id + "'");
    }
    return c;
}

ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    json root;
    try {
        root = json::parse(text.empty() ? std::string("{}") : text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const std::size_t line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n')) + 1;
        throw ConfigError("line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")", line);
    }
    Context ctx{text, {}};
    for (const auto& [path, raw] : overrides) {
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;
        }
        set_path(root, path, value);
        ctx.overridden.insert(path);
    }
    check_keys(root, "", ctx);

    std::string id = "sgd_conv";
    get(root, "problem.id", ctx, id, {"sgd_conv", "ct", "entropy", "sparse", "tv"});
    ExperimentConfig c = default_config(id);

    auto& P = c.problem;
    get_int(root, "problem.params.p", ctx, P.p, 2);
    get_int(root, "problem.params.n", ctx, P.n, 8);
    get_int(root, "problem.params.angles", ctx, P.angles, 1);
    get_int(root, "problem.params.rays", ctx, P.rays, 1);
    get(root, "problem.params.kernel", ctx, P.kernel, {"convolution_61", "gauss_0064", "power_kernel", "constant"});
    get(root, "problem.params.truth", ctx, P.truth, {"sines", "density", "spikes", "plateaus", "zero"});

    auto& M = c.mirror;
    get(root, "mirror.kind", ctx, M.kind,
        {"quadratic", "nonneg_quadratic", "entropy_simplex", "elastic_net", "product"});
    get(root, "mirror.beta", ctx, M.beta, 0.0, false);
    get(root, "mirror.weights", ctx, M.weights, {"quadrature", "unit"});
    if ((id == "tv") != (M.kind == "product"))
        ctx.fail("mirror.kind", id == "tv" ? "problem 'tv' uses the product map" : "the product map is only for 'tv'");
    if (id == "tv" && !(M.beta > 0.0))
        ctx.fail("mirror.beta", "must be > 0 for the tv problem");

    auto& S = c.step;
    get(root, "step.kind", ctx, S.kind, {"s1", "s2", "s3"});
    get(root, "step.mu0", ctx, S.mu0, 0.0, true);
    get(root, "step.mu1", ctx, S.mu1, 0.0, false);
    get(root, "step.tau", ctx, S.tau, 1.0, false);
    get(root, "step.t", ctx, S.t, 0.0, false);
    get(root, "step.strict", ctx, S.strict);

    get(root, "sampler.kind", ctx, c.sampler.kind, {"uniform", "cyclic"});
    get_int(root, "sampler.b", ctx, c.sampler.b, 1);
    if (c.sampler.kind == "cyclic" && c.sampler.b != 1)
        ctx.fail("sampler.b", "the cyclic sampler uses batch size 1");

    std::string model = to_string(c.noise.spec.model);
    get(root, "noise.model", ctx, model, {"gaussian", "uniform"});
    c.noise.spec.model = model == "gaussian" ? NoiseModel::gaussian : NoiseModel::uniform;
    get(root, "noise.delta_rel", ctx, c.noise.spec.delta_rel, 0.0, false);
    get_int(root, "noise.seed", ctx, c.noise.spec.seed, 0);
    get(root, "noise.fresh", ctx, c.noise.fresh);

    auto& R = c.run;
    get_int(root, "run.iters", ctx, R.iters, 1);
    get_int(root, "run.K", ctx, R.K, 1);
    get_int(root, "run.master_seed", ctx, R.master_seed, 0);
    get(root, "run.same_seed", ctx, R.same_seed);
    std::string stop = "fixed";
    get(root, "run.stop.kind", ctx, stop, {"fixed", "a_priori", "discrepancy"});
    R.stop.kind = stop == "fixed" ? StopKind::fixed : stop == "a_priori" ? StopKind::a_priori : StopKind::discrepancy_all;
    get_int(root, "run.stop.n", ctx, R.stop.n, 0);
    get(root, "run.stop.c", ctx, R.stop.c, 0.0, true);
    get(root, "run.stop.exponent", ctx, R.stop.exponent, 0.0, true);
    get(root, "run.stop.tau", ctx, R.stop.tau, 1.0, false);
    if (const json* m = find(root, "run.metrics")) {
        if (!m->is_array() || m->empty())
            ctx.fail("run.metrics", "expected a non-empty array of metric names");
        R.metrics.clear();
        for (const auto& e : *m) {
            static const std::set<std::string> known{"rel_l2", "l1_sq", "bregman", "residual"};
            if (!e.is_string() || !known.count(e.get<std::string>()))
                ctx.fail("run.metrics", "metrics are rel_l2, l1_sq, bregman, residual");
            R.metrics.push_back(e.get<std::string>());
        }
    }

    get(root, "output.dir", ctx, c.output.dir);
    get_int(root, "output.trace_every", ctx, c.output.trace_every, 1);
    get_int(root, "output.full_residual_every", ctx, c.output.full_residual_every, 0);

    auto& Q = c.rate;
    get_int(root, "rate.rows", ctx, Q.rows, 1);
    get_int(root, "rate.cols", ctx, Q.cols, 1);
    get(root, "rate.s_max", ctx, Q.s_max, 0.0, true);
    get(root, "rate.s_min", ctx, Q.s_min, 0.0, true);
    get_int(root, "rate.operator_seed", ctx, Q.operator_seed, 0);
    get(root, "rate.c", ctx, Q.c, 0.0, true);
    get_int(root, "rate.K", ctx, Q.K, 1);
    get_int(root, "rate.b", ctx, Q.b, 1);
    get(root, "rate.t", ctx, Q.t, 0.0, false);
    get(root, "rate.fresh_noise", ctx, Q.fresh_noise);
    if (Q.b > Q.rows)
        ctx.fail("rate.b", "batch size exceeds the row count");
    if (Q.s_min > Q.s_max)
        ctx.fail("rate.s_min", "must not exceed s_max");
    if (const json* d = find(root, "rate.deltas")) {
        if (!d->is_array() || d->size() < 2)
            ctx.fail("rate.deltas", "expected at least two noise levels");
        Q.deltas.clear();
        for (const auto& e : *d) {
            if (!e.is_number() || !(e.get<double>() > 0.0))
                ctx.fail("rate.deltas", "noise levels must be positive numbers");
            Q.deltas.push_back(e.get<double>());
        }
    }
    if (const json* band = find(root, "rate.band")) {
        if (!band->is_array() || band->size() != 2 || !(*band)[0].is_number() || !(*band)[1].is_number() ||
            !((*band)[0].get<double>() < (*band)[1].get<double>()))
            ctx.fail("rate.band", "expected [lo, hi] with lo < hi");
        Q.band_lo = (*band)[0].get<double>();
        Q.band_hi = (*band)[1].get<double>();
    }
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    json params = {{"kernel", c.problem.kernel}, {"truth", c.problem.truth}};
    if (c.problem.id == "ct")
        params = {{"n", c.problem.n}, {"angles", c.problem.angles}, {"rays", c.problem.rays}};
    else
        params["p"] = c.problem.p;
    j["problem"] = {{"id", c.problem.id}, {"params", params}};
    j["mirror"] = {{"kind", c.mirror.kind}, {"beta", c.mirror.beta}, {"weights", c.mirror.weights}};
    j["step"] = {{"kind", c.step.kind}, {"mu0", c.step.mu0}, {"mu1", c.step.mu1},
                 {"tau", c.step.tau},   {"t", c.step.t},     {"strict", c.step.strict}};
    j["sampler"] = {{"kind", c.sampler.kind}, {"b", c.sampler.b}};
    j["noise"] = {{"model", to_string(c.noise.spec.model)},
                  {"delta_rel", c.noise.spec.delta_rel},
                  {"seed", c.noise.spec.seed},
                  {"fresh", c.noise.fresh}};
    const char* stop = c.run.stop.kind == StopKind::fixed      ? "fixed"
                       : c.run.stop.kind == StopKind::a_priori ? "a_priori"
                                                               : "discrepancy";
    j["run"] = {{"iters", c.run.iters},
                {"K", c.run.K},
                {"stop",
                 {{"kind", stop},
                  {"n", c.run.stop.n},
                  {"c", c.run.stop.c},
                  {"exponent", c.run.stop.exponent},
                  {"tau", c.run.stop.tau}}},
                {"metrics", c.run.metrics},
                {"master_seed", c.run.master_seed},
                {"same_seed", c.run.same_seed}};
    j["output"] = {{"dir", c.output.dir},
                   {"trace_every", c.output.trace_every},
                   {"full_residual_every", c.output.full_residual_every}};
    j["rate"] = {{"rows", c.rate.rows},   {"cols", c.rate.cols},         {"s_max", c.rate.s_max},
                 {"s_min", c.rate.s_min}, {"operator_seed", c.rate.operator_seed},
                 {"deltas", c.rate.deltas}, {"c", c.rate.c},             {"K", c.rate.K},
                 {"b", c.rate.b},         {"t", c.rate.t},               {"band", {c.rate.band_lo, c.rate.band_hi}},
                 {"fresh_noise", c.rate.fresh_noise}};
    return j.dump(2);
}

}  // namespace smd
