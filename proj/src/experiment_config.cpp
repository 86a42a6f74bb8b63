#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "otlab/errors.hpp"
#include "otlab/experiments.hpp"

namespace otlab {

namespace {

struct Sections {
    bool dists = false, net = false, ots = false, gan = false, eval = false, example1 = false, sr = false,
         fv = false, replicates = false;
};

Sections sections_for(ExperimentKind k)
{
    Sections s;
    switch (k) {
    case ExperimentKind::bench_gaussian:
    case ExperimentKind::bias_sweep: s.dists = s.net = s.ots = s.gan = s.eval = s.replicates = true; break;
    case ExperimentKind::example1: s.net = s.ots = s.example1 = true; break;
    case ExperimentKind::toy_sr: s.net = s.ots = s.eval = s.sr = s.replicates = true; break;
    case ExperimentKind::fv_check: s.fv = true; break;
    }
    return s;
}

std::size_t get_size(TableReader& r, const std::string& key, std::size_t fallback)
{
    return static_cast<std::size_t>(r.get_uint(key, fallback));
}

std::size_t get_positive(TableReader& r, const std::string& key, std::size_t fallback)
{
    std::size_t v = get_size(r, key, fallback);
    if (v == 0)
        throw ConfigError(r.path() + "." + key + " must be >= 1");
    return v;
}

double get_positive_double(TableReader& r, const std::string& key, double fallback)
{
    double v = r.get_double(key, fallback);
    if (!(v > 0))
        throw ConfigError(r.path() + "." + key + " must be > 0");
    return v;
}

void require_one_of(const TableReader& r, const std::string& key, const std::string& v,
                    std::initializer_list<const char*> allowed)
{
    for (const char* a : allowed)
        if (v == a)
            return;
    std::string list;
    for (const char* a : allowed)
        list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError(r.path() + "." + key + " = \"" + v + "\" is not one of: " + list);
}

DistSpec read_dist(TableReader r)
{
    DistSpec d;
    d.kind = r.get_string("kind", d.kind);
    require_one_of(r, "kind", d.kind, {"gaussian", "random-spd"});
    if (d.kind == "gaussian") {
        d.mean = r.get_doubles("mean", {});
        d.cov = r.get_matrix("cov");
        if (d.mean.empty() || d.cov.size() != d.mean.size() || d.cov.front().size() != d.mean.size())
            throw ConfigError(r.path() + ": cov must be a square matrix matching the mean");
    } else {
        d.dim = get_positive(r, "dim", d.dim);
    }
    r.finish();
    return d;
}

ConfigValue::Table write_dist(const DistSpec& d)
{
    ConfigValue::Table t{{"kind", d.kind}};
    if (d.kind == "gaussian") {
        t["mean"] = to_config(d.mean);
        t["cov"] = to_config(d.cov);
    } else {
        t["dim"] = static_cast<std::int64_t>(d.dim);
    }
    return t;
}

ConfigValue size_value(std::size_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

std::string experiment_name(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::bench_gaussian: return "bench-gaussian";
    case ExperimentKind::example1: return "example1";
    case ExperimentKind::bias_sweep: return "bias-sweep";
    case ExperimentKind::toy_sr: return "toy-sr";
    case ExperimentKind::fv_check: return "fv-check";
    }
    return "?";
}

ExperimentKind parse_experiment_name(const std::string& name)
{
    for (auto k : {ExperimentKind::bench_gaussian, ExperimentKind::example1, ExperimentKind::bias_sweep,
                   ExperimentKind::toy_sr, ExperimentKind::fv_check})
        if (experiment_name(k) == name)
            return k;
    throw ConfigError("unknown experiment \"" + name +
                      "\" (expected bench-gaussian, example1, bias-sweep, toy-sr or fv-check)");
}

ExperimentConfig config_from_table(const ConfigValue::Table& table)
{
    TableReader top(table, "");
    ExperimentConfig c;
    if (!top.has("experiment"))
        throw ConfigError("missing key experiment");
    c.experiment = parse_experiment_name(top.get_string("experiment", ""));
    Sections s = sections_for(c.experiment);
    c.seed = top.get_uint("seed", c.seed);
    c.output_dir = top.get_string("output_dir", c.output_dir);
    if (s.replicates) {
        c.replicates = get_positive(top, "replicates", c.replicates);
        c.workers = get_size(top, "workers", c.workers);
    }

    auto section = [&](const char* name, bool allowed) -> std::optional<TableReader> {
        if (!top.has(name))
            return std::nullopt;
        if (!allowed)
            throw ConfigError("section [" + std::string(name) + "] is not used by experiment " +
                              experiment_name(c.experiment));
        return top.table(name);
    };

    if (s.dists) {
        if (!top.has("source") || !top.has("target"))
            throw ConfigError("experiment " + experiment_name(c.experiment) + " needs [source] and [target]");
        c.source = read_dist(*section("source", true));
        c.target = read_dist(*section("target", true));
    } else {
        section("source", false);
        section("target", false);
    }
    if (auto r = section("net", s.net)) {
        c.net.width = get_positive(*r, "width", c.net.width);
        c.net.depth = get_positive(*r, "depth", c.net.depth);
        c.net.leaky_slope = r->get_double("leaky_slope", c.net.leaky_slope);
        r->finish();
    }
    if (auto r = section("ots", s.ots)) {
        c.ots.k_T = get_positive(*r, "k_T", c.ots.k_T);
        c.ots.lr_f = get_positive_double(*r, "lr_f", c.ots.lr_f);
        c.ots.lr_T = get_positive_double(*r, "lr_T", c.ots.lr_T);
        c.ots.batch = get_positive(*r, "batch", c.ots.batch);
        c.ots.total_f_iters = get_positive(*r, "total_f_iters", c.ots.total_f_iters);
        c.ots.cost = r->get_string("cost", c.ots.cost);
        require_one_of(*r, "cost", c.ots.cost, {"quadratic", "mse", "mae", "feature"});
        c.ots.k_c = get_size(*r, "k_c", c.ots.k_c);
        r->finish();
    }
    if (auto r = section("gan", s.gan)) {
        c.gan.lambdas = r->get_doubles("lambdas", c.gan.lambdas);
        for (double l : c.gan.lambdas)
            if (!(l >= 0))
                throw ConfigError("gan.lambdas must be >= 0");
        c.gan.lambda_gp = r->get_double("lambda_gp", c.gan.lambda_gp);
        if (!(c.gan.lambda_gp >= 0))
            throw ConfigError("gan.lambda_gp must be >= 0");
        c.gan.disc_iters_per_gen = get_positive(*r, "disc_iters_per_gen", c.gan.disc_iters_per_gen);
        c.gan.lr = get_positive_double(*r, "lr", c.gan.lr);
        c.gan.beta1 = r->get_double("beta1", c.gan.beta1);
        c.gan.beta2 = r->get_double("beta2", c.gan.beta2);
        c.gan.batch = get_positive(*r, "batch", c.gan.batch);
        c.gan.total_gen_iters = get_positive(*r, "total_gen_iters", c.gan.total_gen_iters);
        r->finish();
    }
    if (auto r = section("eval", s.eval)) {
        c.eval.n_samples = get_positive(*r, "n_samples", c.eval.n_samples);
        c.eval.mmd_samples = get_positive(*r, "mmd_samples", c.eval.mmd_samples);
        c.eval.lemma_batch = get_positive(*r, "lemma_batch", c.eval.lemma_batch);
        c.eval.palette_resamples = get_positive(*r, "palette_resamples", c.eval.palette_resamples);
        r->finish();
    }
    if (auto r = section("example1", s.example1)) {
        auto& e = c.example1;
        e.lambdas = r->get_doubles("lambdas", e.lambdas);
        for (double l : e.lambdas)
            if (!(l > 0 && l < 2))
                throw ConfigError("example1.lambdas must lie in (0, 2)");
        e.step = get_positive_double(*r, "step", e.step);
        e.tol = get_positive_double(*r, "tol", e.tol);
        e.max_iters = get_positive(*r, "max_iters", e.max_iters);
        e.gan_lambda = r->get_double("gan_lambda", e.gan_lambda);
        e.gan_lr = get_positive_double(*r, "gan_lr", e.gan_lr);
        e.gan_iters = get_positive(*r, "gan_iters", e.gan_iters);
        e.gan_content = r->get_string("gan_content", e.gan_content);
        require_one_of(*r, "gan_content", e.gan_content, {"quadratic", "mse", "mae"});
        r->finish();
    }
    if (auto r = section("sr", s.sr)) {
        auto& e = c.sr;
        e.signal_dim = get_positive(*r, "signal_dim", e.signal_dim);
        e.blur_width = get_positive(*r, "blur_width", e.blur_width);
        e.stride = get_positive(*r, "stride", e.stride);
        e.smoothing_width = get_positive_double(*r, "smoothing_width", e.smoothing_width);
        e.upsampler = r->get_string("upsampler", e.upsampler);
        require_one_of(*r, "upsampler", e.upsampler, {"linear", "nearest"});
        r->finish();
        if (e.signal_dim % e.stride != 0)
            throw ConfigError("sr.signal_dim must be divisible by sr.stride");
    }
    if (auto r = section("fv", s.fv)) {
        auto& e = c.fv;
        e.instances = get_positive(*r, "instances", e.instances);
        e.support_size = get_positive(*r, "support_size", e.support_size);
        e.dim = get_positive(*r, "dim", e.dim);
        e.eps_min = get_positive_double(*r, "eps_min", e.eps_min);
        e.eps_max = get_positive_double(*r, "eps_max", e.eps_max);
        e.eps_points = get_positive(*r, "eps_points", e.eps_points);
        r->finish();
        if (e.support_size < 2 || e.support_size > 64)
            throw ConfigError("fv.support_size must be in [2, 64]");
        if (!(e.eps_min < e.eps_max && e.eps_max <= 0.1) || e.eps_points < 5)
            throw ConfigError("fv grid must satisfy 0 < eps_min < eps_max <= 0.1 with eps_points >= 5");
    }
    top.finish();
    return c;
}

ExperimentConfig parse_config(const std::string& text) { return config_from_table(parse_toml(text)); }

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ConfigValue::Table config_to_table(const ExperimentConfig& c)
{
    Sections s = sections_for(c.experiment);
    ConfigValue::Table t;
    t["experiment"] = experiment_name(c.experiment);
    t["seed"] = static_cast<std::int64_t>(c.seed);
    t["output_dir"] = c.output_dir;
    if (s.replicates) {
        t["replicates"] = size_value(c.replicates);
        t["workers"] = size_value(c.workers);
    }
    if (s.dists) {
        t["source"] = write_dist(c.source);
        t["target"] = write_dist(c.target);
    }
    if (s.net)
        t["net"] = ConfigValue::Table{{"width", size_value(c.net.width)},
                                      {"depth", size_value(c.net.depth)},
                                      {"leaky_slope", c.net.leaky_slope}};
    if (s.ots)
        t["ots"] = ConfigValue::Table{{"k_T", size_value(c.ots.k_T)},
                                      {"lr_f", c.ots.lr_f},
                                      {"lr_T", c.ots.lr_T},
                                      {"batch", size_value(c.ots.batch)},
                                      {"total_f_iters", size_value(c.ots.total_f_iters)},
                                      {"cost", c.ots.cost},
                                      {"k_c", size_value(c.ots.k_c)}};
    if (s.gan)
        t["gan"] = ConfigValue::Table{{"lambdas", to_config(c.gan.lambdas)},
                                      {"lambda_gp", c.gan.lambda_gp},
                                      {"disc_iters_per_gen", size_value(c.gan.disc_iters_per_gen)},
                                      {"lr", c.gan.lr},
                                      {"beta1", c.gan.beta1},
                                      {"beta2", c.gan.beta2},
                                      {"batch", size_value(c.gan.batch)},
                                      {"total_gen_iters", size_value(c.gan.total_gen_iters)}};
    if (s.eval)
        t["eval"] = ConfigValue::Table{{"n_samples", size_value(c.eval.n_samples)},
                                       {"mmd_samples", size_value(c.eval.mmd_samples)},
                                       {"lemma_batch", size_value(c.eval.lemma_batch)},
                                       {"palette_resamples", size_value(c.eval.palette_resamples)}};
    if (s.example1)
        t["example1"] = ConfigValue::Table{{"lambdas", to_config(c.example1.lambdas)},
                                           {"step", c.example1.step},
                                           {"tol", c.example1.tol},
                                           {"max_iters", size_value(c.example1.max_iters)},
                                           {"gan_lambda", c.example1.gan_lambda},
                                           {"gan_lr", c.example1.gan_lr},
                                           {"gan_iters", size_value(c.example1.gan_iters)},
                                           {"gan_content", c.example1.gan_content}};
    if (s.sr)
        t["sr"] = ConfigValue::Table{{"signal_dim", size_value(c.sr.signal_dim)},
                                     {"blur_width", size_value(c.sr.blur_width)},
                                     {"stride", size_value(c.sr.stride)},
                                     {"smoothing_width", c.sr.smoothing_width},
                                     {"upsampler", c.sr.upsampler}};
    if (s.fv)
        t["fv"] = ConfigValue::Table{{"instances", size_value(c.fv.instances)},
                                     {"support_size", size_value(c.fv.support_size)},
                                     {"dim", size_value(c.fv.dim)},
                                     {"eps_min", c.fv.eps_min},
                                     {"eps_max", c.fv.eps_max},
                                     {"eps_points", size_value(c.fv.eps_points)}};
    return t;
}

std::string canonical_config_text(const ExperimentConfig& cfg) { return write_toml(config_to_table(cfg)); }

std::string git_blob_sha1(const std::string& text)
{
    std::string blob = "blob " + std::to_string(text.size());
    blob.push_back('\0');
    blob += text;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1)
        throw Error("SHA-1 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

}  // namespace otlab
