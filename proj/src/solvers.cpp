#include "otlab/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "otlab/oracles.hpp"

namespace otlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_maps(const Distribution& P, const Distribution& Q, const Mlp& critic, const Mlp& T, const char* what)
{
    if (critic.output_dim() != 1)
        throw DimensionError(std::string(what) + ": potential must have output dim 1, got " +
                             std::to_string(critic.output_dim()));
    if (critic.input_dim() != Q.dim())
        throw DimensionError(std::string(what) + ": potential input dim does not match dim(Y)");
    if (T.input_dim() != P.dim() || T.output_dim() != Q.dim())
        throw DimensionError(std::string(what) + ": map must send dim(X)=" + std::to_string(P.dim()) +
                             " to dim(Y)=" + std::to_string(Q.dim()));
}

void guard(double loss, double limit, const char* name, std::size_t iter, const TrainTrace& trace)
{
    if (!std::isfinite(loss) || std::fabs(loss) > limit) {
        std::ostringstream os;
        os << "training diverged at iteration " << iter << ": " << name << " = " << loss;
        throw DivergenceError(os.str(), trace);
    }
}

}  // namespace

OtsResult train_ots(Distribution& P, Distribution& Q, Mlp f, Mlp T, const OtsConfig& cfg)
{
    if (cfg.k_T < 1)
        throw ConfigError("k_T must be >= 1");
    if (cfg.batch < 1 || cfg.total_f_iters < 1)
        throw ConfigError("batch and total_f_iters must be >= 1");
    if (cfg.k_c && *cfg.k_c == 0)
        throw ConfigError("k_c must be >= 1 when set");
    if (cfg.k_c && cfg.cost.kind() != CostFn::Kind::dynamic)
        throw ConfigError("k_c is set but the cost is not dynamic");
    check_maps(P, Q, f, T, "train_ots");

    Adam opt_f(f.parameters(), {.lr = cfg.lr_f});
    Adam opt_T(T.parameters(), {.lr = cfg.lr_T});
    CostFn cost = cfg.cost;
    TrainTrace trace;
    trace.ots.reserve(cfg.total_f_iters);
    const auto start = Clock::now();

    for (std::size_t it = 0; it < cfg.total_f_iters; ++it) {
        OtsTraceRow row;
        row.iter = it;
        try {
            {
                Tensor x = P.sample(cfg.batch);
                Tensor y = Q.sample(cfg.batch);
                Tape tape;
                Var fx = f.forward(tape, tape.constant(T.apply(x)));
                Var fy = f.forward(tape, tape.constant(y));
                Var loss = sub(mean(fx), mean(fy));
                row.loss_f = loss.value().item();
                tape.backward(loss);
                opt_f.step();
            }
            for (std::size_t k = 0; k < cfg.k_T; ++k) {
                Tensor x = P.sample(cfg.batch);
                Tape tape;
                Var tx = T.forward(tape, tape.constant(x));
                Var loss = sub(mean(cost.eval(tape, x, tx)), mean(f.forward_frozen(tape, tx)));
                row.loss_T = loss.value().item();
                tape.backward(loss);
                opt_T.step();
            }
        } catch (const DivergenceError&) {
            throw;
        } catch (const NumericError& e) {
            trace.ots.push_back(row);
            throw DivergenceError(std::string("training produced a non-finite value: ") + e.what(), trace);
        }
        row.wall_seconds = seconds_since(start);
        trace.ots.push_back(row);
        guard(row.loss_f, cfg.divergence_limit, "loss_f", it, trace);
        guard(row.loss_T, cfg.divergence_limit, "loss_T", it, trace);
        if (cfg.k_c && (it + 1) % *cfg.k_c == 0)
            cost = refresh_dynamic(cost, T);
    }
    return {std::move(T), std::move(f), std::move(trace), cost};
}

double saddle_value(const Mlp& f, const Mlp& T, const CostFn& cost, Distribution& P, Distribution& Q,
                    std::size_t n)
{
    Tensor x = P.sample(n);
    Tensor y = Q.sample(n);
    Tensor tx = T.apply(x);
    return mean(f.apply(y)) + mean(cost.eval(x, tx)) - mean(f.apply(tx));
}

GanResult train_gan(Distribution& P, Distribution& Q, Mlp gen, Mlp disc, const GanConfig& cfg,
                    const CostFn& content_cost)
{
    if (!(cfg.lambda >= 0))
        throw ConfigError("content weight lambda must be >= 0");
    if (!(cfg.lambda_gp >= 0))
        throw ConfigError("lambda_gp must be >= 0");
    if (cfg.disc_iters_per_gen < 1 || cfg.batch < 1 || cfg.total_gen_iters < 1)
        throw ConfigError("disc_iters_per_gen, batch and total_gen_iters must be >= 1");
    check_maps(P, Q, disc, gen, "train_gan");

    const AdamOptions adam{.lr = cfg.lr, .beta1 = cfg.beta1, .beta2 = cfg.beta2};
    Adam opt_d(disc.parameters(), adam);
    Adam opt_g(gen.parameters(), adam);
    TrainTrace trace;
    trace.gan.reserve(cfg.total_gen_iters);
    const auto start = Clock::now();
    const std::size_t B = cfg.batch;
    const std::size_t d = Q.dim();
    // Interpolation weights come from their own stream so the data streams stay aligned.
    Rng mix_rng = make_rng(cfg.seed, "gp-mix");
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (std::size_t it = 0; it < cfg.total_gen_iters; ++it) {
        GanTraceRow row;
        row.iter = it;
        try {
            for (std::size_t k = 0; k < cfg.disc_iters_per_gen; ++k) {
                Tensor x = P.sample(B);
                Tensor y = Q.sample(B);
                Tensor tx = gen.apply(x);
                Tensor xhat({B, d});
                for (std::size_t i = 0; i < B; ++i) {
                    double u = unif(mix_rng);
                    for (std::size_t j = 0; j < d; ++j)
                        xhat.at(i, j) = u * tx.at(i, j) + (1.0 - u) * y.at(i, j);
                }
                Tape tape;
                Var wdist = sub(mean(disc.forward(tape, tape.constant(tx))), mean(disc.forward(tape, tape.constant(y))));
                Var g = disc.input_gradient(tape, xhat);
                Var norms = sqrt(shift(row_sum(square(g)), 1e-12));
                Var gp = mean(square(shift(norms, -1.0)));
                Var loss = add(wdist, scale(gp, cfg.lambda_gp));
                row.loss_disc = loss.value().item();
                row.gp = gp.value().item();
                tape.backward(loss);
                opt_d.step();
            }
            {
                Tensor x = P.sample(B);
                Tape tape;
                Var tx = gen.forward(tape, tape.constant(x));
                Var loss = scale(mean(disc.forward_frozen(tape, tx)), -1.0);
                if (cfg.lambda > 0)
                    loss = add(loss, scale(mean(content_cost.eval(tape, x, tx)), cfg.lambda));
                row.loss_gen = loss.value().item();
                tape.backward(loss);
                opt_g.step();
            }
        } catch (const DivergenceError&) {
            throw;
        } catch (const NumericError& e) {
            trace.gan.push_back(row);
            throw DivergenceError(std::string("training produced a non-finite value: ") + e.what(), trace);
        }
        row.wall_seconds = seconds_since(start);
        trace.gan.push_back(row);
        guard(row.loss_disc, cfg.divergence_limit, "loss_disc", it, trace);
        guard(row.loss_gen, cfg.divergence_limit, "loss_gen", it, trace);
    }
    return {std::move(gen), std::move(disc), std::move(trace)};
}

double discrete_w2(const Tensor& xs, const std::vector<double>& wx, const Tensor& ys, const std::vector<double>& wy)
{
    if (xs.cols() != ys.cols())
        throw DimensionError("discrete_w2: point dims differ");
    if (wx.size() != xs.rows() || wy.size() != ys.rows())
        throw DimensionError("discrete_w2: weights do not match point counts");
    Eigen::MatrixXd c = CostFn::quadratic().pairwise(xs, ys);
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(wx.data(), static_cast<Eigen::Index>(wx.size()));
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(wy.data(), static_cast<Eigen::Index>(wy.size()));
    return solve_transportation(a, b, c).cost;
}

ExactGanResult train_gan_exact_w2(const Distribution& P, const Distribution& Q, Mlp gen,
                                  const ExactGanConfig& cfg, const CostFn& content_cost)
{
    if (P.kind() != Distribution::Kind::discrete_atoms || Q.kind() != Distribution::Kind::discrete_atoms)
        throw ContractError("exact W2 generator training needs discrete P and Q");
    if (!(cfg.lambda >= 0))
        throw ConfigError("content weight lambda must be >= 0");
    if (gen.input_dim() != P.dim() || gen.output_dim() != Q.dim())
        throw DimensionError("train_gan_exact_w2: map dims do not match P and Q");

    const Tensor& xs = P.atoms();
    const Tensor& ys = Q.atoms();
    const auto& wx = P.weights();
    const auto& wy = Q.weights();
    const std::size_t n = xs.rows(), m = ys.rows(), d = ys.cols();
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(wx.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(wy.data(), static_cast<Eigen::Index>(m));
    Tensor wcol({n}, wx);

    ExactGanResult out{std::move(gen), {}};
    Adam opt(out.T.parameters(), {.lr = cfg.lr});
    out.objective.reserve(cfg.iters);
    for (std::size_t it = 0; it < cfg.iters; ++it) {
        Tensor tx = out.T.apply(xs);
        TransportPlan plan = solve_transportation(a, b, CostFn::quadratic().pairwise(tx, ys));
        // d W2^2 / d T(x_i) = sum_j pi_ij * 2 (T(x_i) - y_j)
        Tensor g({n, d});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double pij = plan.flow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                for (std::size_t k = 0; k < d; ++k)
                    g.at(i, k) += pij * 2.0 * (tx.at(i, k) - ys.at(j, k));
            }
        Tape tape;
        Var txv = out.T.forward(tape, tape.constant(xs));
        Var surrogate = sum(mul(tape.constant(g), txv));
        Var content = sum(mul(tape.constant(wcol), content_cost.eval(tape, xs, txv)));
        Var loss = add(surrogate, scale(content, cfg.lambda));
        out.objective.push_back(plan.cost + cfg.lambda * content.value().item());
        tape.backward(loss);
        opt.step();
    }
    return out;
}

double example1_objective(double lambda, double t0, double t2)
{
    double A = 0.5 * (t0 - 1) * (t0 - 1) + 0.5 * (t2 - 3) * (t2 - 3);
    double B = 0.5 * (t0 - 3) * (t0 - 3) + 0.5 * (t2 - 1) * (t2 - 1);
    return std::min(A, B) + lambda * (0.5 * std::fabs(t0) + 0.5 * std::fabs(2 - t2));
}

std::pair<double, double> solve_example1(double lambda, const Example1Options& opt)
{
    if (!(lambda > 0.0 && lambda < 2.0))
        throw DomainError("solve_example1 needs 0 < lambda < 2");
    auto sign = [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };
    double t0 = 0.0, t2 = 2.0;
    std::vector<std::pair<double, double>> path{{t0, t2}};
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        double A = 0.5 * (t0 - 1) * (t0 - 1) + 0.5 * (t2 - 3) * (t2 - 3);
        double B = 0.5 * (t0 - 3) * (t0 - 3) + 0.5 * (t2 - 1) * (t2 - 1);
        double g0, g2;
        if (A <= B) {
            g0 = t0 - 1;
            g2 = t2 - 3;
        } else {
            g0 = t0 - 3;
            g2 = t2 - 1;
        }
        g0 += 0.5 * lambda * sign(t0);
        g2 -= 0.5 * lambda * sign(2 - t2);
        double n0 = t0 - opt.step * g0;
        double n2 = t2 - opt.step * g2;
        double moved = std::hypot(n0 - t0, n2 - t2);
        t0 = n0;
        t2 = n2;
        path.emplace_back(t0, t2);
        if (moved < opt.tol)
            return {t0, t2};
    }
    std::ostringstream os;
    os << "solve_example1 did not converge after " << opt.max_iters << " iterations (last point " << t0 << ", "
       << t2 << ")";
    throw ConvergenceError(os.str(), std::move(path));
}

}  // namespace otlab
