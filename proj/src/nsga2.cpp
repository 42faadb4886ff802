#include "hydroquad/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hydroquad/errors.hpp"
#include "hydroquad/rng.hpp"

namespace hydroquad {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd sanitize(Eigen::VectorXd obj, int n_objectives) {
    if (obj.size() != n_objectives || !obj.allFinite())
        return Eigen::VectorXd::Constant(n_objectives, kInf);
    return obj;
}

// Binary tournament on (rank, crowding); the first pick wins ties.
int tournament(const std::vector<Nsga2Individual>& pop, Rng& rng) {
    const int a = static_cast<int>(rng.uniform_index(pop.size()));
    const int b = static_cast<int>(rng.uniform_index(pop.size()));
    if (pop[b].rank < pop[a].rank) return b;
    if (pop[a].rank == pop[b].rank && pop[b].crowding > pop[a].crowding) return b;
    return a;
}

double sbx_child(double y1, double y2, double lo, double hi, double eta, double u,
                 bool second) {
    // Bounded simulated binary crossover, one child at a time.
    const double span = y2 - y1;
    const double edge = second ? hi - y2 : y1 - lo;
    const double beta = 1.0 + 2.0 * edge / span;
    const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
    double betaq;
    if (u <= 1.0 / alpha)
        betaq = std::pow(u * alpha, 1.0 / (eta + 1.0));
    else
        betaq = std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
    const double c = second ? 0.5 * ((y1 + y2) + betaq * span)
                            : 0.5 * ((y1 + y2) - betaq * span);
    return std::clamp(c, lo, hi);
}

double polynomial_mutate(double y, double lo, double hi, double eta, double u) {
    const double range = hi - lo;
    double deltaq;
    if (u < 0.5) {
        const double xy = 1.0 - (y - lo) / range;
        const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(xy, eta + 1.0);
        deltaq = std::pow(val, 1.0 / (eta + 1.0)) - 1.0;
    } else {
        const double xy = 1.0 - (hi - y) / range;
        const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(xy, eta + 1.0);
        deltaq = 1.0 - std::pow(val, 1.0 / (eta + 1.0));
    }
    return std::clamp(y + deltaq * range, lo, hi);
}

void rank_and_crowd(std::vector<Nsga2Individual>& pop,
                    std::vector<std::vector<int>>& fronts) {
    std::vector<Eigen::VectorXd> objs(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) objs[i] = pop[i].objectives;
    fronts = nondominated_sort(objs);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        std::vector<Eigen::VectorXd> front_objs;
        front_objs.reserve(fronts[r].size());
        for (int i : fronts[r]) front_objs.push_back(pop[static_cast<std::size_t>(i)].objectives);
        const std::vector<double> dist = crowding_distance(front_objs);
        for (std::size_t k = 0; k < fronts[r].size(); ++k) {
            pop[static_cast<std::size_t>(fronts[r][k])].rank = static_cast<int>(r);
            pop[static_cast<std::size_t>(fronts[r][k])].crowding = dist[k];
        }
    }
}

} // namespace

bool dominates(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) > b(i)) return false;
        if (a(i) < b(i)) strict = true;
    }
    return strict;
}

std::vector<std::vector<int>> nondominated_sort(
    const std::vector<Eigen::VectorXd>& objectives) {
    const int n = static_cast<int>(objectives.size());
    std::vector<std::vector<int>> dominated(static_cast<std::size_t>(n));
    std::vector<int> dom_count(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> fronts(1);

    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(objectives[static_cast<std::size_t>(p)],
                          objectives[static_cast<std::size_t>(q)]))
                dominated[static_cast<std::size_t>(p)].push_back(q);
            else if (dominates(objectives[static_cast<std::size_t>(q)],
                               objectives[static_cast<std::size_t>(p)]))
                ++dom_count[static_cast<std::size_t>(p)];
        }
        if (dom_count[static_cast<std::size_t>(p)] == 0) fronts[0].push_back(p);
    }
    while (!fronts.back().empty()) {
        std::vector<int> next;
        for (int p : fronts.back())
            for (int q : dominated[static_cast<std::size_t>(p)])
                if (--dom_count[static_cast<std::size_t>(q)] == 0) next.push_back(q);
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

std::vector<double> crowding_distance(const std::vector<Eigen::VectorXd>& front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), kInf);
        return dist;
    }
    const Eigen::Index m = front.front().size();
    std::vector<std::size_t> order(n);
    for (Eigen::Index obj = 0; obj < m; ++obj) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return front[a](obj) < front[b](obj);
        });
        dist[order.front()] = kInf;
        dist[order.back()] = kInf;
        const double range = front[order.back()](obj) - front[order.front()](obj);
        if (!(range > 0.0) || !std::isfinite(range)) continue;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double gap = front[order[i + 1]](obj) - front[order[i - 1]](obj);
            const double c = gap / range;
            if (std::isnan(c)) continue; // between two infeasibles
            if (std::isinf(c))
                dist[order[i]] = kInf;
            else if (std::isfinite(dist[order[i]]))
                dist[order[i]] += c;
        }
    }
    return dist;
}

Nsga2Result nsga2_run(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                      int n_objectives, const ObjectiveFn& evaluate,
                      const Nsga2Config& cfg, const GenerationCallback& on_generation) {
    const Eigen::Index genes = lower.size();
    if (genes == 0 || upper.size() != genes)
        throw ConfigError("gene bounds must be nonempty and equally sized");
    for (Eigen::Index i = 0; i < genes; ++i)
        if (!(lower(i) < upper(i))) throw ConfigError("each lower bound must be below its upper");
    if (cfg.population < 2 || cfg.population % 2 != 0)
        throw ConfigError("population must be even and at least 2");
    if (cfg.generations < 0) throw ConfigError("generations must be nonnegative");
    if (n_objectives < 1) throw ConfigError("need at least one objective");

    const double pm =
        cfg.mutation_prob < 0.0 ? 1.0 / static_cast<double>(genes) : cfg.mutation_prob;
    Rng rng(cfg.seed);

    Nsga2Result result;
    std::vector<Nsga2Individual> pop(static_cast<std::size_t>(cfg.population));
    for (Nsga2Individual& ind : pop) {
        ind.genes.resize(genes);
        for (Eigen::Index i = 0; i < genes; ++i)
            ind.genes(i) = rng.uniform(lower(i), upper(i));
        ind.objectives = sanitize(evaluate(ind.genes), n_objectives);
        result.archive.push_back(ind);
    }
    std::vector<std::vector<int>> fronts;
    rank_and_crowd(pop, fronts);
    if (on_generation) on_generation(0, pop);

    for (int gen = 0; gen < cfg.generations; ++gen) {
        // Variation: tournament parents, SBX pairs, per-gene mutation.
        std::vector<Nsga2Individual> offspring;
        offspring.reserve(pop.size());
        while (offspring.size() < pop.size()) {
            const Nsga2Individual& p1 = pop[static_cast<std::size_t>(tournament(pop, rng))];
            const Nsga2Individual& p2 = pop[static_cast<std::size_t>(tournament(pop, rng))];
            Eigen::VectorXd c1 = p1.genes, c2 = p2.genes;
            if (rng.uniform() < cfg.crossover_prob) {
                for (Eigen::Index i = 0; i < genes; ++i) {
                    if (rng.uniform() >= 0.5) continue;
                    const double y1 = std::min(c1(i), c2(i));
                    const double y2 = std::max(c1(i), c2(i));
                    if (y2 - y1 < 1e-14) continue;
                    const double u = rng.uniform();
                    double a = sbx_child(y1, y2, lower(i), upper(i), cfg.sbx_eta, u, false);
                    double b = sbx_child(y1, y2, lower(i), upper(i), cfg.sbx_eta, u, true);
                    if (rng.uniform() < 0.5) std::swap(a, b);
                    c1(i) = a;
                    c2(i) = b;
                }
            }
            for (Eigen::VectorXd* c : {&c1, &c2})
                for (Eigen::Index i = 0; i < genes; ++i)
                    if (rng.uniform() < pm)
                        (*c)(i) = polynomial_mutate((*c)(i), lower(i), upper(i), cfg.pm_eta,
                                                    rng.uniform());
            for (const Eigen::VectorXd& c : {c1, c2}) {
                if (offspring.size() >= pop.size()) break;
                Nsga2Individual ind;
                ind.genes = c;
                ind.objectives = sanitize(evaluate(ind.genes), n_objectives);
                offspring.push_back(ind);
                result.archive.push_back(std::move(ind));
            }
        }

        // Elitist (mu + lambda) environmental selection.
        std::vector<Nsga2Individual> merged = pop;
        merged.insert(merged.end(), offspring.begin(), offspring.end());
        std::vector<std::vector<int>> merged_fronts;
        rank_and_crowd(merged, merged_fronts);

        std::vector<Nsga2Individual> next;
        next.reserve(pop.size());
        for (const std::vector<int>& front : merged_fronts) {
            if (next.size() + front.size() <= pop.size()) {
                for (int i : front) next.push_back(merged[static_cast<std::size_t>(i)]);
            } else {
                std::vector<int> by_crowding = front;
                std::stable_sort(by_crowding.begin(), by_crowding.end(), [&](int a, int b) {
                    return merged[static_cast<std::size_t>(a)].crowding >
                           merged[static_cast<std::size_t>(b)].crowding;
                });
                for (int i : by_crowding) {
                    if (next.size() >= pop.size()) break;
                    next.push_back(merged[static_cast<std::size_t>(i)]);
                }
            }
            if (next.size() >= pop.size()) break;
        }
        pop = std::move(next);
        rank_and_crowd(pop, fronts);
        if (on_generation) on_generation(gen + 1, pop);
    }

    result.population = std::move(pop);
    result.fronts = std::move(fronts);
    return result;
}

} // namespace hydroquad
