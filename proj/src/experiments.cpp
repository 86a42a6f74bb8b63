#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "otlab/errors.hpp"
#include "otlab/experiments.hpp"
#include "otlab/oracles.hpp"

namespace otlab {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::string lambda_label(double l)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", l);
    return buf;
}

Eigen::VectorXd to_vector(const std::vector<double>& v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& m)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.empty() ? 0 : m[0].size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m[i].size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
    return out;
}

// Resolved Gaussian parameters; random-spd specs are drawn here.
struct GaussianParams {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

GaussianParams resolve_gaussian(const DistSpec& d, std::uint64_t spec_seed)
{
    if (d.kind == "gaussian")
        return {to_vector(d.mean), to_matrix(d.cov)};
    if (d.kind != "random-spd")
        throw ConfigError("this experiment needs gaussian or random-spd distributions, got " + d.kind);
    Rng rng = make_rng(spec_seed, "random-spd");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    const auto n = static_cast<Eigen::Index>(d.dim);
    GaussianParams g{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i)
        g.mean(i) = unif(rng);
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            a(i, j) = normal(rng);
    g.cov = a * a.transpose() / static_cast<double>(n) + 0.25 * Eigen::MatrixXd::Identity(n, n);
    g.cov = 0.5 * (g.cov + g.cov.transpose());
    return g;
}

std::vector<std::size_t> net_dims(const NetSpec& n, std::size_t in, std::size_t out)
{
    if (n.depth < 1)
        throw ConfigError("net.depth must be >= 1");
    std::vector<std::size_t> dims{in};
    for (std::size_t l = 1; l < n.depth; ++l)
        dims.push_back(n.width);
    dims.push_back(out);
    return dims;
}

CostFn base_cost(const std::string& name, std::size_t dim, std::uint64_t seed)
{
    if (name == "quadratic")
        return CostFn::quadratic();
    if (name == "mse")
        return CostFn::mse();
    if (name == "mae")
        return CostFn::mae();
    if (name == "feature")
        return CostFn::feature(dim, 3, 32, derive_seed(seed, "feature-cost"));
    throw ConfigError("unknown cost " + name);
}

OtsConfig ots_config(const OtsSpec& s, CostFn cost)
{
    OtsConfig c;
    c.k_T = s.k_T;
    c.lr_f = s.lr_f;
    c.lr_T = s.lr_T;
    c.batch = s.batch;
    c.total_f_iters = s.total_f_iters;
    c.cost = std::move(cost);
    if (s.k_c > 0)
        c.k_c = s.k_c;
    return c;
}

MetricReport simple_metric(std::string name, double value, std::size_t n = 0, std::optional<std::uint64_t> seed = {})
{
    return {std::move(name), value, 0, n, seed, {}};
}

RunReport start_report(const ExperimentConfig& cfg)
{
    RunReport r;
    r.experiment = experiment_name(cfg.experiment);
    r.seed = cfg.seed;
    r.config_text = canonical_config_text(cfg);
    r.config_hash = git_blob_sha1(r.config_text);
    return r;
}

std::uint64_t replicate_seed(const ExperimentConfig& cfg, std::size_t r)
{
    return derive_seed(cfg.seed, "replicate", r);
}

// ---------------------------------------------------------------------------
// Gaussian benchmark cells

struct BenchCell {
    std::size_t replicate = 0;
    bool is_ots = true;
    double lambda = 0;
    bool diverged = false;
    std::string error;
    double l2_uvp = nan_value, mmd2 = nan_value, transport_cost = nan_value, saddle = nan_value;
    double direct_cost = nan_value, coupling_cost = nan_value, bures = nan_value;
    TrainTrace trace;

    std::string label() const
    {
        return "r" + std::to_string(replicate) + "/" + (is_ots ? std::string("ots") : "gan@" + lambda_label(lambda));
    }
    std::string trace_name() const
    {
        return "r" + std::to_string(replicate) + "_" + (is_ots ? std::string("ots") : "gan_lambda" + lambda_label(lambda));
    }
};

void run_bench_cell(const ExperimentConfig& cfg, BenchCell& cell)
{
    const std::uint64_t rep = replicate_seed(cfg, cell.replicate);
    GaussianParams gp = resolve_gaussian(cfg.source, derive_seed(rep, "source-spec"));
    GaussianParams gq = resolve_gaussian(cfg.target, derive_seed(rep, "target-spec"));
    if (gp.mean.size() != gq.mean.size())
        throw ConfigError("source and target must have the same dimension");
    const auto d = static_cast<std::size_t>(gp.mean.size());
    const std::uint64_t cs = derive_seed(rep, cell.label());
    cell.bures = bures_wasserstein2(gp.mean, gp.cov, gq.mean, gq.cov);

    Distribution P = Distribution::gaussian(gp.mean, gp.cov, derive_seed(cs, "P"));
    Distribution Q = Distribution::gaussian(gq.mean, gq.cov, derive_seed(cs, "Q"));
    Mlp T(net_dims(cfg.net, d, d), cfg.net.leaky_slope, derive_seed(cs, "T"), MapHead::identity());
    T.zero_output_layer();
    Mlp f(net_dims(cfg.net, d, 1), cfg.net.leaky_slope, derive_seed(cs, "f"));
    CostFn content = base_cost(cfg.ots.cost, d, rep);

    Mlp trained = T;
    Mlp potential = f;
    try {
        if (cell.is_ots) {
            OtsResult r = train_ots(P, Q, f, T, ots_config(cfg.ots, content));
            trained = std::move(r.T);
            potential = std::move(r.f);
            cell.trace = std::move(r.trace);
        } else {
            GanConfig g;
            g.lambda = cell.lambda;
            g.lambda_gp = cfg.gan.lambda_gp;
            g.disc_iters_per_gen = cfg.gan.disc_iters_per_gen;
            g.lr = cfg.gan.lr;
            g.beta1 = cfg.gan.beta1;
            g.beta2 = cfg.gan.beta2;
            g.batch = cfg.gan.batch;
            g.total_gen_iters = cfg.gan.total_gen_iters;
            g.seed = derive_seed(cs, "gp");
            GanResult r = train_gan(P, Q, T, f, g, content);
            trained = std::move(r.T);
            cell.trace = std::move(r.trace);
        }
    } catch (const DivergenceError& e) {
        cell.diverged = true;
        cell.error = e.what();
        cell.trace = e.trace();
        return;
    }

    // Evaluation streams depend on the replicate only, so cells are compared on the same draws.
    const std::uint64_t ev = derive_seed(rep, "eval");
    AnalyticMap t_star = gaussian_ot_map(gp.mean, gp.cov, gq.mean, gq.cov);
    cell.l2_uvp = l2_uvp(as_map(trained), t_star, P, Q, cfg.eval.n_samples, ev).value;
    cell.transport_cost = transport_cost_estimate(as_map(trained), P, CostFn::quadratic(), cfg.eval.n_samples, ev).value;

    Distribution pe = P.with_stream(derive_seed(ev, "mmd-p"));
    Distribution qe = Q.with_stream(derive_seed(ev, "mmd-q"));
    Tensor y = qe.sample(cfg.eval.mmd_samples);
    Tensor tx = trained.apply(pe.sample(cfg.eval.mmd_samples));
    Kernel k = Kernel::median_heuristic(y, qe.sample(cfg.eval.mmd_samples));
    cell.mmd2 = mmd2(tx, y, k);

    Distribution pl = P.with_stream(derive_seed(ev, "lemma"));
    Tensor xb = pl.sample(std::min(cfg.eval.lemma_batch, max_discrete_ot_points));
    Tensor txb = trained.apply(xb);
    cell.direct_cost = mean(content.eval(xb, txb));
    cell.coupling_cost = discrete_ot(xb, txb, content).total_cost;

    if (cell.is_ots) {
        Distribution ps = P.with_stream(derive_seed(ev, "saddle-p"));
        Distribution qs = Q.with_stream(derive_seed(ev, "saddle-q"));
        cell.saddle = saddle_value(potential, trained, CostFn::quadratic(), ps, qs, cfg.eval.n_samples);
    }
}

std::vector<BenchCell> run_bench_cells(const ExperimentConfig& cfg)
{
    std::vector<BenchCell> cells;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        BenchCell ots;
        ots.replicate = r;
        cells.push_back(ots);
        for (double l : cfg.gan.lambdas) {
            BenchCell g;
            g.replicate = r;
            g.is_ots = false;
            g.lambda = l;
            cells.push_back(g);
        }
    }
    std::vector<std::function<void()>> tasks;
    for (auto& c : cells)
        tasks.push_back([&cfg, &c] { run_bench_cell(cfg, c); });
    run_pool(std::move(tasks), cfg.workers);
    return cells;
}

void bench_into_report(const ExperimentConfig& cfg, const std::vector<BenchCell>& cells, RunReport& report)
{
    CsvTable table;
    table.name = "bench";
    table.comment = "one row per trained map; lambda is N/A for the OT solver; transport_cost and bures_w2 use "
                    "the squared Euclidean cost; direct/coupling costs use the content cost on one batch";
    table.columns = {"replicate", "method", "lambda", "l2_uvp", "mmd2", "transport_cost", "bures_w2",
                     "direct_cost", "coupling_cost", "status"};
    const std::uint64_t n = cfg.eval.n_samples;
    for (const auto& c : cells) {
        table.rows.push_back({std::to_string(c.replicate), c.is_ots ? "ots" : "gan",
                              c.is_ots ? "N/A" : format_number(c.lambda), format_number(c.l2_uvp),
                              format_number(c.mmd2), format_number(c.transport_cost), format_number(c.bures),
                              format_number(c.direct_cost), format_number(c.coupling_cost),
                              c.diverged ? "diverged" : "ok"});
        report.traces.push_back({c.trace_name(), c.trace});
        if (c.is_ots)
            report.metrics.push_back(simple_metric("r" + std::to_string(c.replicate) + "/bures_w2", c.bures));
        if (c.diverged) {
            report.notes.push_back(c.label() + ": " + c.error);
            continue;
        }
        const std::uint64_t ev = derive_seed(replicate_seed(cfg, c.replicate), "eval");
        report.metrics.push_back({c.label() + "/l2_uvp", c.l2_uvp, 0, n, ev, {}});
        report.metrics.push_back({c.label() + "/transport_cost", c.transport_cost, 0, n, ev, {}});
        report.metrics.push_back({c.label() + "/mmd2", c.mmd2, 0, cfg.eval.mmd_samples, ev, {}});
        report.metrics.push_back({c.label() + "/direct_cost", c.direct_cost, 0, cfg.eval.lemma_batch, ev, {}});
        report.metrics.push_back({c.label() + "/coupling_cost", c.coupling_cost, 0, cfg.eval.lemma_batch, ev, {}});
        if (c.is_ots) {
            report.metrics.push_back({c.label() + "/saddle_value", c.saddle, 0, n, ev, {}});
        }
    }
    report.tables.push_back(std::move(table));
}

bool majority(std::size_t passed, std::size_t total) { return 2 * passed > total; }

}  // namespace

RunReport run_bench_gaussian(const ExperimentConfig& cfg)
{
    auto t0 = Clock::now();
    RunReport report = start_report(cfg);
    auto cells = run_bench_cells(cfg);
    bench_into_report(cfg, cells, report);
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return report;
}

RunReport run_bias_sweep(const ExperimentConfig& cfg)
{
    if (cfg.gan.lambdas.empty())
        throw ConfigError("bias-sweep needs a non-empty gan.lambdas list");
    auto t0 = Clock::now();
    RunReport report = start_report(cfg);
    auto cells = run_bench_cells(cfg);
    bench_into_report(cfg, cells, report);

    const double lambda_max = *std::max_element(cfg.gan.lambdas.begin(), cfg.gan.lambdas.end());
    std::size_t pass_a = 0, pass_b = 0, pass_c = 0, pass_lemma = 0;
    CsvTable table;
    table.name = "bias_checks";
    table.comment = "per replicate: best lambda by l2_uvp; (a) uvp(lambda_max) >= 2 uvp(best); (b) ots uvp <= best "
                    "gan uvp; (c) every lambda > 0 has larger mmd2 than ots; lemma: direct cost within 5% of the optimal coupling cost at best";
    table.columns = {"replicate", "best_lambda", "best_uvp", "max_lambda_uvp", "ots_uvp", "a", "b", "c", "lemma1"};
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        const BenchCell* ots = nullptr;
        const BenchCell* best = nullptr;
        const BenchCell* top = nullptr;
        bool any_diverged = false;
        for (const auto& c : cells) {
            if (c.replicate != r)
                continue;
            any_diverged = any_diverged || c.diverged;
            if (c.is_ots) {
                ots = &c;
            } else if (!c.diverged) {
                if (!best || c.l2_uvp < best->l2_uvp)
                    best = &c;
                if (c.lambda == lambda_max)
                    top = &c;
            }
        }
        bool a = false, b = false, cc = false, lemma = false;
        if (ots && !ots->diverged && best) {
            a = top && top->l2_uvp >= 2.0 * best->l2_uvp;
            b = ots->l2_uvp <= best->l2_uvp;
            cc = !any_diverged;
            for (const auto& c : cells)
                if (c.replicate == r && !c.is_ots && c.lambda > 0)
                    cc = cc && c.mmd2 > ots->mmd2;
            lemma = best->direct_cost - best->coupling_cost <= 0.05 * best->coupling_cost;
        }
        pass_a += a;
        pass_b += b;
        pass_c += cc;
        pass_lemma += lemma;
        std::string rs = "r" + std::to_string(r);
        report.checks.push_back({rs + "/a", a, ""});
        report.checks.push_back({rs + "/b", b, ""});
        report.checks.push_back({rs + "/c", cc, ""});
        report.checks.push_back({rs + "/lemma1", lemma, ""});
        if (best)
            report.metrics.push_back(simple_metric(rs + "/best_lambda", best->lambda));
        table.rows.push_back({std::to_string(r), best ? format_number(best->lambda) : "nan",
                              best ? format_number(best->l2_uvp) : "nan", top ? format_number(top->l2_uvp) : "nan",
                              ots ? format_number(ots->l2_uvp) : "nan", a ? "pass" : "fail", b ? "pass" : "fail",
                              cc ? "pass" : "fail", lemma ? "pass" : "fail"});
    }
    const std::size_t R = cfg.replicates;
    auto detail = [R](std::size_t k) { return std::to_string(k) + "/" + std::to_string(R) + " replicates"; };
    report.checks.push_back({"majority/a", majority(pass_a, R), detail(pass_a)});
    report.checks.push_back({"majority/b", majority(pass_b, R), detail(pass_b)});
    report.checks.push_back({"majority/c", majority(pass_c, R), detail(pass_c)});
    report.checks.push_back({"all/lemma1", pass_lemma == R, detail(pass_lemma)});
    report.tables.push_back(std::move(table));
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return report;
}

RunReport run_example1(const ExperimentConfig& cfg)
{
    auto t0 = Clock::now();
    RunReport report = start_report(cfg);
    const auto& e = cfg.example1;

    CsvTable sol;
    sol.name = "example1";
    sol.comment = "direct minimiser of the two-atom regularised objective against the closed form";
    sol.columns = {"lambda", "t0_solver", "t2_solver", "t0_exact", "t2_exact", "abs_err"};
    Example1Options opt{e.step, e.tol, e.max_iters};
    for (double l : e.lambdas) {
        auto [t0s, t2s] = solve_example1(l, opt);
        auto [t0e, t2e] = example1_solution(l);
        double err = std::max(std::fabs(t0s - t0e), std::fabs(t2s - t2e));
        std::string key = "lambda=" + lambda_label(l);
        report.metrics.push_back(simple_metric(key + "/t0", t0s));
        report.metrics.push_back(simple_metric(key + "/t2", t2s));
        report.metrics.push_back(simple_metric(key + "/abs_err", err));
        sol.rows.push_back({format_number(l), format_number(t0s), format_number(t2s), format_number(t0e),
                            format_number(t2e), format_number(err)});
    }
    report.tables.push_back(std::move(sol));

    Tensor xs({2, 1}, {0.0, 2.0});
    Tensor ys({2, 1}, {1.0, 3.0});
    DiscretePlan plan = discrete_ot(xs, ys, CostFn::quadratic());
    double oracle0 = ys[plan.assignment[0]], oracle2 = ys[plan.assignment[1]];
    report.metrics.push_back(simple_metric("oracle/T0", oracle0));
    report.metrics.push_back(simple_metric("oracle/T2", oracle2));

    Distribution P = Distribution::discrete_atoms(xs, {0.5, 0.5}, derive_seed(cfg.seed, "P"));
    Distribution Q = Distribution::discrete_atoms(ys, {0.5, 0.5}, derive_seed(cfg.seed, "Q"));
    Mlp T(net_dims(cfg.net, 1, 1), cfg.net.leaky_slope, derive_seed(cfg.seed, "T"), MapHead::identity());
    T.zero_output_layer();
    Mlp f(net_dims(cfg.net, 1, 1), cfg.net.leaky_slope, derive_seed(cfg.seed, "f"));
    OtsResult ots = train_ots(P, Q, f, T, ots_config(cfg.ots, base_cost(cfg.ots.cost, 1, cfg.seed)));
    Tensor t_ots = ots.T.apply(xs);
    report.metrics.push_back(simple_metric("ots/T0", t_ots[0]));
    report.metrics.push_back(simple_metric("ots/T2", t_ots[1]));
    report.traces.push_back({"ots", std::move(ots.trace)});

    Mlp G(net_dims(cfg.net, 1, 1), cfg.net.leaky_slope, derive_seed(cfg.seed, "G"), MapHead::identity());
    G.zero_output_layer();
    ExactGanConfig gc{e.gan_lambda, e.gan_lr, e.gan_iters};
    ExactGanResult gan = train_gan_exact_w2(P, Q, G, gc, base_cost(e.gan_content, 1, cfg.seed));
    Tensor t_gan = gan.T.apply(xs);
    report.metrics.push_back(simple_metric("gan/T0", t_gan[0]));
    report.metrics.push_back(simple_metric("gan/T2", t_gan[1]));
    report.metrics.push_back(simple_metric("gan/objective", gan.objective.back()));

    CsvTable maps;
    maps.name = "example1_maps";
    maps.comment = "learned images of the atoms 0 and 2; gan uses the exact W2^2 discrepancy plus the content term";
    maps.columns = {"method", "lambda", "T0", "T2", "reference_T0", "reference_T2"};
    maps.rows.push_back({"oracle", "N/A", format_number(oracle0), format_number(oracle2), "1", "3"});
    maps.rows.push_back({"ots", "N/A", format_number(t_ots[0]), format_number(t_ots[1]), format_number(oracle0),
                         format_number(oracle2)});
    std::string gref0 = "nan", gref2 = "nan";
    if (e.gan_lambda > 0 && e.gan_lambda < 2 && e.gan_content == "mae") {
        auto [a, b] = example1_solution(e.gan_lambda);
        gref0 = format_number(a);
        gref2 = format_number(b);
    }
    maps.rows.push_back({"gan", format_number(e.gan_lambda), format_number(t_gan[0]), format_number(t_gan[1]), gref0,
                         gref2});
    report.tables.push_back(std::move(maps));
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return report;
}

namespace {

struct SrCell {
    std::size_t replicate = 0;
    MetricReport pv_ots, pv_hr, pv_base;
    double mmd_ots = 0, mmd_base = 0, cost_ots = 0;
    TrainTrace trace;
};

void run_sr_cell(const ExperimentConfig& cfg, SrCell& cell)
{
    const std::uint64_t rep = replicate_seed(cfg, cell.replicate);
    const auto& s = cfg.sr;
    SrPair pair = make_sr_pair(s.signal_dim, Degradation::box(s.blur_width, s.stride), derive_seed(rep, "sr-pair"),
                               s.smoothing_width);
    const std::size_t n_lr = pair.lr.dim(), n_hr = pair.hr.dim();
    Upsampler up(s.upsampler == "linear" ? Upsampler::Kind::linear : Upsampler::Kind::nearest, n_hr / n_lr);
    Mlp T(net_dims(cfg.net, n_lr, n_hr), cfg.net.leaky_slope, derive_seed(rep, "T"), MapHead::upsample(up));
    T.zero_output_layer();
    Mlp f(net_dims(cfg.net, n_hr, 1), cfg.net.leaky_slope, derive_seed(rep, "f"));
    CostFn base = base_cost(cfg.ots.cost, n_hr, rep);
    CostFn cost = cfg.ots.k_c > 0 ? CostFn::dynamic(base, FrozenMap::from_upsampler(n_lr, up))
                                  : CostFn::composite_upsample(base, up);
    OtsResult r = train_ots(pair.lr, pair.hr, f, T, ots_config(cfg.ots, cost));
    cell.trace = std::move(r.trace);

    const std::uint64_t ev = derive_seed(rep, "eval");
    Distribution lr_e = pair.lr.with_stream(derive_seed(ev, "lr"));
    Distribution hr_e = pair.hr.with_stream(derive_seed(ev, "hr"));
    const std::size_t n = cfg.eval.n_samples;
    Tensor x = lr_e.sample(n);
    Tensor y = hr_e.sample(n);
    Tensor tx = r.T.apply(x);
    Tensor bx = up.apply(x);
    const std::size_t pr = cfg.eval.palette_resamples;
    cell.pv_ots = palette_variance(tx, derive_seed(ev, "palette-ots"), pr);
    cell.pv_hr = palette_variance(y, derive_seed(ev, "palette-hr"), pr);
    cell.pv_base = palette_variance(bx, derive_seed(ev, "palette-base"), pr);

    const std::size_t m = std::min(cfg.eval.mmd_samples, n);
    Tensor ym = y.rows_range(0, m);
    Kernel k = Kernel::median_heuristic(ym, hr_e.sample(m));
    cell.mmd_ots = mmd2(tx.rows_range(0, m), ym, k);
    cell.mmd_base = mmd2(bx.rows_range(0, m), ym, k);
    cell.cost_ots = mean(CostFn::composite_upsample(CostFn::mse(), up).eval(x, tx));
}

}  // namespace

RunReport run_toy_sr(const ExperimentConfig& cfg)
{
    auto t0 = Clock::now();
    RunReport report = start_report(cfg);
    std::vector<SrCell> cells(cfg.replicates);
    std::vector<std::function<void()>> tasks;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        cells[r].replicate = r;
        tasks.push_back([&cfg, &cells, r] { run_sr_cell(cfg, cells[r]); });
    }
    run_pool(std::move(tasks), cfg.workers);

    CsvTable table;
    table.name = "toy_sr";
    table.comment = "palette variance is the mean per-coordinate variance over row resamples (mean and std); "
                    "baseline is the plain upsampler; transport_cost is mean MSE(Up(x), T(x))";
    table.columns = {"replicate", "method", "palette_variance", "palette_std", "mmd2", "transport_cost"};
    std::size_t closer = 0;
    for (const auto& c : cells) {
        std::string rs = "r" + std::to_string(c.replicate);
        auto named = [&](MetricReport m, const std::string& who) {
            m.name = rs + "/palette/" + who;
            return m;
        };
        report.metrics.push_back(named(c.pv_ots, "ots"));
        report.metrics.push_back(named(c.pv_hr, "hr"));
        report.metrics.push_back(named(c.pv_base, "baseline"));
        report.metrics.push_back({rs + "/mmd2/ots", c.mmd_ots, 0, cfg.eval.mmd_samples, {}, {}});
        report.metrics.push_back({rs + "/mmd2/baseline", c.mmd_base, 0, cfg.eval.mmd_samples, {}, {}});
        report.metrics.push_back({rs + "/transport_cost/ots", c.cost_ots, 0, cfg.eval.n_samples, {}, {}});
        table.rows.push_back({std::to_string(c.replicate), "hr", format_number(c.pv_hr.value),
                              format_number(c.pv_hr.spread), "0", "N/A"});
        table.rows.push_back({std::to_string(c.replicate), "ots", format_number(c.pv_ots.value),
                              format_number(c.pv_ots.spread), format_number(c.mmd_ots), format_number(c.cost_ots)});
        table.rows.push_back({std::to_string(c.replicate), "baseline", format_number(c.pv_base.value),
                              format_number(c.pv_base.spread), format_number(c.mmd_base), "0"});
        bool ok = std::fabs(c.pv_ots.value - c.pv_hr.value) < std::fabs(c.pv_base.value - c.pv_hr.value);
        closer += ok;
        report.checks.push_back({rs + "/palette_closer", ok, ""});
        report.checks.push_back({rs + "/baseline_shrinks", c.pv_base.value < c.pv_hr.value, ""});
        report.traces.push_back({rs + "_ots", c.trace});
    }
    report.checks.push_back({"all/palette_closer", closer == cfg.replicates,
                             std::to_string(closer) + "/" + std::to_string(cfg.replicates) + " replicates"});
    report.tables.push_back(std::move(table));
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return report;
}

RunReport run_fv_check(const ExperimentConfig& cfg)
{
    auto t0 = Clock::now();
    RunReport report = start_report(cfg);
    const auto& s = cfg.fv;
    std::vector<double> grid = log_grid(s.eps_min, s.eps_max, s.eps_points);

    CsvTable table;
    table.name = "fv_slopes";
    table.comment = "fitted log-log slope of D(Q + eps (P - Q), Q) against eps on random discrete instances";
    table.columns = {"instance", "kl_slope", "mmd2_slope", "w2_slope"};
    double min_kl = std::numeric_limits<double>::infinity(), min_mmd = min_kl;
    double w2_sum = 0;
    for (std::size_t i = 0; i < s.instances; ++i) {
        Rng rng = make_rng(derive_seed(cfg.seed, "fv-instance", i), "instance");
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.5, 1.5);
        Tensor support({s.support_size, s.dim});
        for (std::size_t k = 0; k < support.size(); ++k)
            support[k] = normal(rng);
        std::vector<double> q(s.support_size), p(s.support_size);
        double sq = 0, sp = 0;
        for (std::size_t k = 0; k < s.support_size; ++k) {
            q[k] = unif(rng);
            p[k] = unif(rng);
            sq += q[k];
            sp += p[k];
        }
        for (std::size_t k = 0; k < s.support_size; ++k) {
            q[k] /= sq;
            p[k] /= sp;
        }
        double kl = fv_slope(Discrepancy::kl, support, q, p, grid).slope;
        double mm = fv_slope(Discrepancy::mmd2, support, q, p, grid).slope;
        double w2 = fv_slope(Discrepancy::w2, support, q, p, grid).slope;
        min_kl = std::min(min_kl, kl);
        min_mmd = std::min(min_mmd, mm);
        w2_sum += w2;
        std::string key = "instance" + std::to_string(i);
        report.metrics.push_back(simple_metric(key + "/kl_slope", kl));
        report.metrics.push_back(simple_metric(key + "/mmd2_slope", mm));
        report.metrics.push_back(simple_metric(key + "/w2_slope", w2));
        table.rows.push_back({std::to_string(i), format_number(kl), format_number(mm), format_number(w2)});
    }
    report.metrics.push_back(simple_metric("min_kl_slope", min_kl));
    report.metrics.push_back(simple_metric("min_mmd2_slope", min_mmd));
    report.metrics.push_back(simple_metric("mean_w2_slope", w2_sum / static_cast<double>(s.instances)));

    // Two-atom instance with a known expansion: KL((1/2 + e', 1/2 - e') || (1/2, 1/2)) ~ 2 e'^2.
    {
        Tensor support({2, 1}, {0.0, 1.0});
        const double delta = 0.25;
        FvSlope two = fv_slope(Discrepancy::kl, support, {0.5, 0.5}, {0.5 + delta, 0.5 - delta}, grid);
        double worst = 0;
        for (std::size_t k = 0; k < two.eps.size(); ++k) {
            double ep = two.eps[k] * delta;
            worst = std::max(worst, std::fabs(two.values[k] / (2 * ep * ep) - 1.0));
        }
        report.metrics.push_back(simple_metric("two_atom/kl_slope", two.slope));
        report.metrics.push_back(simple_metric("two_atom/kl_taylor_rel_err", worst));
        FvSlope w2 = fv_slope(Discrepancy::w2, support, {0.5, 0.5}, {0.5 + delta, 0.5 - delta}, grid);
        report.metrics.push_back(simple_metric("two_atom/w2_slope", w2.slope));
    }
    report.checks.push_back({"kl_slope>=1.9", min_kl >= 1.9, format_number(min_kl)});
    report.checks.push_back({"mmd2_slope>=1.9", min_mmd >= 1.9, format_number(min_mmd)});
    report.tables.push_back(std::move(table));
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return report;
}

RunReport run_experiment(const ExperimentConfig& cfg)
{
    switch (cfg.experiment) {
    case ExperimentKind::bench_gaussian: return run_bench_gaussian(cfg);
    case ExperimentKind::example1: return run_example1(cfg);
    case ExperimentKind::bias_sweep: return run_bias_sweep(cfg);
    case ExperimentKind::toy_sr: return run_toy_sr(cfg);
    case ExperimentKind::fv_check: return run_fv_check(cfg);
    }
    throw ContractError("unknown experiment");
}

}  // namespace otlab
