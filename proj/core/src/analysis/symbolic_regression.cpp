#include "tetris/analysis/symbolic_regression.hpp"

#include "tetris/error.hpp"
#include "tetris/parallel.hpp"
#include "tetris/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace tetris {

void SrConfig::validate() const
{
    auto rate = [](double r, const char* name) {
        if (!(r >= 0.0 && r <= 1.0)) {
            throw InvalidArgument(std::string("sr ") + name + " must be in [0, 1]");
        }
    };
    rate(crossover_rate, "crossover_rate");
    rate(subtree_mutation_rate, "subtree_mutation_rate");
    rate(point_mutation_rate, "point_mutation_rate");
    if (crossover_rate + subtree_mutation_rate + point_mutation_rate > 1.0 + 1e-12) {
        throw InvalidArgument("sr operator rates sum to more than 1");
    }
    if (generations < 1) {
        throw InvalidArgument("sr generations must be >= 1");
    }
    if (population < 4) {
        throw InvalidArgument("sr population must be >= 4");
    }
    if (tournament_size < 1 || tournament_size > population) {
        throw InvalidArgument("sr tournament size must be in [1, population]");
    }
    if (max_complexity < 1 || initial_complexity < 1) {
        throw InvalidArgument("sr complexities must be >= 1");
    }
    if (parsimony < 0.0) {
        throw InvalidArgument("sr parsimony must be >= 0");
    }
    if (elite < 0 || elite >= population) {
        throw InvalidArgument("sr elite must be in [0, population)");
    }
    if (constant_interval < 1) {
        throw InvalidArgument("sr constant interval must be >= 1");
    }
}

double mean_squared_error(const Expression& expression, std::span<const double> features, std::size_t rows,
                          std::size_t variables, std::span<const double> target)
{
    std::vector<double> out;
    if (!expression.evaluate_rows(features, rows, variables, out)) {
        return std::numeric_limits<double>::infinity();
    }
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double d = out[r] - target[r];
        s += d * d;
    }
    const double mse = s / static_cast<double>(rows);
    return std::isfinite(mse) ? mse : std::numeric_limits<double>::infinity();
}

Expression polish_constants(const Expression& expression, std::span<const double> features, std::size_t rows,
                            std::size_t variables, std::span<const double> target, int iterations)
{
    const auto pos = expression.constant_positions();
    if (pos.empty() || rows == 0) {
        return expression;
    }
    const Eigen::Index p = static_cast<Eigen::Index>(pos.size());
    const Eigen::Index n = static_cast<Eigen::Index>(rows);
    Expression cur = expression;
    double cur_mse = mean_squared_error(cur, features, rows, variables, target);
    if (!std::isfinite(cur_mse)) {
        return expression;
    }
    double mu = 1e-3;
    std::vector<double> base;
    std::vector<double> shifted;
    for (int it = 0; it < iterations; ++it) {
        cur.evaluate_rows(features, rows, variables, base);
        Eigen::MatrixXd jac(n, p);
        Eigen::VectorXd res(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            res(r) = target[static_cast<std::size_t>(r)] - base[static_cast<std::size_t>(r)];
        }
        bool ok = true;
        for (Eigen::Index j = 0; j < p && ok; ++j) {
            Expression e = cur;
            double& c = e.nodes()[pos[static_cast<std::size_t>(j)]].value;
            const double h = 1e-7 * std::max(1.0, std::abs(c));
            c += h;
            ok = e.evaluate_rows(features, rows, variables, shifted);
            for (Eigen::Index r = 0; r < n && ok; ++r) {
                jac(r, j) = (shifted[static_cast<std::size_t>(r)] - base[static_cast<std::size_t>(r)]) / h;
            }
        }
        if (!ok || !jac.allFinite()) {
            break;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * res;
        bool improved = false;
        for (int tries = 0; tries < 8 && !improved; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal().array() += mu * (jtj.diagonal().array() + 1e-12);
            const Eigen::VectorXd step = a.completeOrthogonalDecomposition().solve(jtr);
            if (!step.allFinite()) {
                mu *= 10.0;
                continue;
            }
            Expression trial = cur;
            for (Eigen::Index j = 0; j < p; ++j) {
                trial.nodes()[pos[static_cast<std::size_t>(j)]].value += step(j);
            }
            const double m = mean_squared_error(trial, features, rows, variables, target);
            if (m < cur_mse) {
                const double gain = cur_mse - m;
                cur = std::move(trial);
                cur_mse = m;
                mu = std::max(mu * 0.3, 1e-12);
                improved = true;
                if (gain <= 1e-15 * std::max(cur_mse, 1e-300)) {
                    return cur;
                }
            } else {
                mu *= 10.0;
            }
        }
        if (!improved || cur_mse == 0.0) {
            break;
        }
    }
    return cur;
}

namespace {

struct Individual {
    Expression expression;
    double mse = std::numeric_limits<double>::infinity();
    double score = std::numeric_limits<double>::infinity();
};

class Engine {
public:
    Engine(std::span<const double> features, std::size_t rows, std::size_t variables, std::span<const double> target,
           const SrConfig& config)
        : x_(features), rows_(rows), vars_(variables), y_(target), cfg_(config), rng_(Rng::stream(config.seed, 0x5e))
    {
        double mean = 0.0;
        for (double v : y_) {
            mean += v;
        }
        mean /= static_cast<double>(rows_);
        for (double v : y_) {
            var_ += (v - mean) * (v - mean);
        }
        var_ /= static_cast<double>(rows_);
        scale_ = std::sqrt(var_) + std::abs(mean);
        hall_[1] = SrCandidate{Expression::constant(mean), var_, 1};
    }

    SrResult run()
    {
        std::vector<Individual> pop(static_cast<std::size_t>(cfg_.population));
        for (auto& ind : pop) {
            ind.expression = random_tree(1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(cfg_.initial_complexity))));
        }
        score(pop);
        int gen = 0;
        for (gen = 1; gen <= cfg_.generations; ++gen) {
            std::sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.score < b.score; });
            std::vector<Individual> next;
            next.reserve(pop.size());
            for (int e = 0; e < cfg_.elite; ++e) {
                next.push_back(pop[static_cast<std::size_t>(e)]);
            }
            while (next.size() < pop.size()) {
                next.push_back(Individual{offspring(pop)});
            }
            pop = std::move(next);
            if (gen % cfg_.constant_interval == 0) {
                score(pop);
                optimize_constants(pop);
            }
            score(pop);
            if (solved()) {
                break;
            }
        }
        return finish(std::min(gen, cfg_.generations));
    }

private:
    Expression random_leaf()
    {
        if (rng_.bernoulli(0.6)) {
            return Expression::variable(static_cast<int>(rng_.below(vars_)));
        }
        return Expression::constant(random_constant());
    }

    double random_constant()
    {
        return rng_.bernoulli(0.5) ? std::round(rng_.uniform(-3.0, 3.0) * 10.0) / 10.0 : rng_.normal() * scale_;
    }

    Op random_operator()
    {
        static constexpr Op ops[] = {Op::add, Op::sub, Op::mul, Op::div, Op::abs, Op::square};
        return ops[rng_.below(6)];
    }

    // Tree with at most `budget` nodes.
    Expression random_tree(int budget)
    {
        if (budget <= 1 || rng_.bernoulli(0.25)) {
            return random_leaf();
        }
        Op op = random_operator();
        if (arity(op) == 2 && budget < 3) {
            op = rng_.bernoulli(0.5) ? Op::abs : Op::square;
        }
        if (arity(op) == 1) {
            return Expression::unary(op, random_tree(budget - 1));
        }
        const int left = 1 + static_cast<int>(rng_.below(static_cast<std::uint64_t>(budget - 2)));
        Expression l = random_tree(left);
        Expression r = random_tree(budget - 1 - l.complexity());
        return Expression::binary(op, l, r);
    }

    const Individual& tournament(const std::vector<Individual>& pop)
    {
        const Individual* best = nullptr;
        for (int t = 0; t < cfg_.tournament_size; ++t) {
            const Individual& c = pop[rng_.below(pop.size())];
            if (best == nullptr || c.score < best->score) {
                best = &c;
            }
        }
        return *best;
    }

    Expression offspring(const std::vector<Individual>& pop)
    {
        const Expression& parent = tournament(pop).expression;
        const double u = rng_.uniform();
        Expression child;
        if (u < cfg_.crossover_rate) {
            const Expression& other = tournament(pop).expression;
            const std::size_t at = rng_.below(parent.nodes().size());
            child = parent.replaced(at, other.subtree(rng_.below(other.nodes().size())));
        } else if (u < cfg_.crossover_rate + cfg_.subtree_mutation_rate) {
            const std::size_t at = rng_.below(parent.nodes().size());
            const int room = cfg_.max_complexity - parent.complexity() +
                             static_cast<int>(parent.subtree_end(at) - at);
            child = parent.replaced(at, random_tree(std::max(1, std::min(room, cfg_.initial_complexity))));
        } else if (u < cfg_.crossover_rate + cfg_.subtree_mutation_rate + cfg_.point_mutation_rate) {
            child = point_mutation(parent);
        } else {
            child = parent;
        }
        if (child.complexity() > cfg_.max_complexity) {
            return parent;
        }
        return child.folded();
    }

    Expression point_mutation(const Expression& parent)
    {
        Expression child = parent;
        Node& n = child.nodes()[rng_.below(child.nodes().size())];
        switch (n.op) {
        case Op::constant:
            n.value = rng_.bernoulli(0.5) ? n.value * (1.0 + 0.1 * rng_.normal()) : random_constant();
            break;
        case Op::variable:
            if (rng_.bernoulli(0.3)) {
                n = Node{Op::constant, 0, random_constant()};
            } else {
                n.variable = static_cast<int>(rng_.below(vars_));
            }
            break;
        case Op::abs:
        case Op::square:
            n.op = n.op == Op::abs ? Op::square : Op::abs;
            break;
        default: {
            static constexpr Op bin[] = {Op::add, Op::sub, Op::mul, Op::div};
            n.op = bin[rng_.below(4)];
        }
        }
        return child;
    }

    void score(std::vector<Individual>& pop)
    {
        parallel_for(pop.size(), [&](std::size_t i) {
            Individual& ind = pop[i];
            ind.mse = mean_squared_error(ind.expression, x_, rows_, vars_, y_);
            const double norm = var_ > 0.0 ? ind.mse / var_ : ind.mse;
            ind.score = norm + cfg_.parsimony * ind.expression.complexity();
            if (!std::isfinite(ind.score)) {
                ind.score = std::numeric_limits<double>::infinity();
            }
        });
        for (const Individual& ind : pop) {
            remember(ind.expression, ind.mse);
        }
    }

    void remember(const Expression& e, double mse)
    {
        if (!std::isfinite(mse)) {
            return;
        }
        const int c = e.complexity();
        auto it = hall_.find(c);
        if (it == hall_.end() || mse < it->second.mse) {
            hall_[c] = SrCandidate{e, mse, c};
        }
    }

    // Multiplicative random perturbations of the constants, accepted when
    // they lower the MSE.
    void optimize_constants(std::vector<Individual>& pop)
    {
        std::sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) { return a.score < b.score; });
        const std::size_t count = std::min<std::size_t>(pop.size(), 16);
        for (std::size_t i = 0; i < count; ++i) {
            Individual& ind = pop[i];
            const auto pos = ind.expression.constant_positions();
            if (pos.empty() || !std::isfinite(ind.mse)) {
                continue;
            }
            for (int step = 0; step < 20; ++step) {
                Expression trial = ind.expression;
                for (std::size_t p : pos) {
                    double& c = trial.nodes()[p].value;
                    const double sigma = step < 10 ? 0.1 : 0.01;
                    c = c * (1.0 + sigma * rng_.normal()) + sigma * 0.1 * rng_.normal();
                }
                const double m = mean_squared_error(trial, x_, rows_, vars_, y_);
                if (m < ind.mse) {
                    ind.expression = std::move(trial);
                    ind.mse = m;
                }
            }
        }
        for (auto& [c, cand] : hall_) {
            cand.expression = polish_constants(cand.expression, x_, rows_, vars_, y_, 10);
            cand.mse = mean_squared_error(cand.expression, x_, rows_, vars_, y_);
        }
    }

    bool solved() const
    {
        for (const auto& [c, cand] : hall_) {
            if (cand.mse <= 1e-24 * std::max(1.0, var_)) {
                return true;
            }
        }
        return false;
    }

    SrResult finish(int generations)
    {
        std::map<int, SrCandidate> polished;
        for (const auto& [c, cand] : hall_) {
            SrCandidate p = cand;
            p.expression = polish_constants(cand.expression, x_, rows_, vars_, y_, 100).folded();
            p.complexity = p.expression.complexity();
            p.mse = mean_squared_error(p.expression, x_, rows_, vars_, y_);
            if (!std::isfinite(p.mse) || p.mse > cand.mse) {
                p = cand;
            }
            auto it = polished.find(p.complexity);
            if (it == polished.end() || p.mse < it->second.mse) {
                polished[p.complexity] = p;
            }
        }
        SrResult r;
        r.generations_run = generations;
        double best = std::numeric_limits<double>::infinity();
        for (auto& [c, cand] : polished) {
            if (cand.mse < best) {
                best = cand.mse;
                r.pareto.push_back(cand);
            }
        }
        return r;
    }

    std::span<const double> x_;
    std::size_t rows_;
    std::size_t vars_;
    std::span<const double> y_;
    SrConfig cfg_;
    Rng rng_;
    double var_ = 0.0;
    double scale_ = 1.0;
    std::map<int, SrCandidate> hall_;
};

} // namespace

SrResult sr_fit(std::span<const double> features, std::size_t rows, std::size_t variables,
                std::span<const double> target, const SrConfig& config)
{
    config.validate();
    if (rows < 10) {
        throw InvalidArgument("symbolic regression needs at least 10 data points, got " + std::to_string(rows));
    }
    if (variables < 1) {
        throw InvalidArgument("symbolic regression needs at least one feature");
    }
    if (features.size() != rows * variables || target.size() != rows) {
        throw InvalidArgument("symbolic regression: feature and target sizes disagree");
    }
    for (double v : features) {
        if (!std::isfinite(v)) {
            throw NumericalError("symbolic regression: non-finite feature");
        }
    }
    for (double v : target) {
        if (!std::isfinite(v)) {
            throw NumericalError("symbolic regression: non-finite target");
        }
    }
    if (std::all_of(target.begin(), target.end(), [&](double v) { return v == target[0]; })) {
        SrResult r;
        r.pareto.push_back(SrCandidate{Expression::constant(target[0]), 0.0, 1});
        return r;
    }
    return Engine(features, rows, variables, target, config).run();
}

} // namespace tetris
