#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mfeo/common.hpp"
#include "mfeo/rng.hpp"

namespace mfeo::mlo {

using Vec = std::vector<double>;
using FeatureMask = std::vector<std::uint8_t>;
using Evaluator = std::function<double(const Vec&)>;

struct Bounds {
    Vec lo, hi;

    static Bounds uniform(std::size_t dim, double lo_value, double hi_value) {
        Bounds b;
        b.lo.assign(dim, lo_value);
        b.hi.assign(dim, hi_value);
        return b;
    }

    std::size_t dim() const { return lo.size(); }

    void validate() const {
        if (lo.empty() || lo.size() != hi.size()) {
            throw ConfigError("mlo: bounds must be nonempty and equal length");
        }
        for (std::size_t j = 0; j < lo.size(); ++j) {
            if (!(lo[j] < hi[j])) throw ConfigError("mlo: bounds require lo < hi per dimension");
        }
    }

    void clamp(Vec& v) const {
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = std::min(hi[j], std::max(lo[j], v[j]));
        }
    }
};

enum class Gender { kMale, kFemale };

struct Lion {
    Vec position;
    Vec velocity;
    double fitness = -std::numeric_limits<double>::infinity();
    Vec pbest_position;
    double pbest_fitness = -std::numeric_limits<double>::infinity();
    Gender gender = Gender::kMale;
    int pride = -1;  // -1 = nomad

    // per-iteration bookkeeping for Eqs. 10-11
    double pbest_at_iter_start = -std::numeric_limits<double>::infinity();
    int success = 0;

    bool is_nomad() const { return pride < 0; }
};

struct MloConfig {
    int pop_size = 50;
    int prides = 4;
    double nomad_fraction = 0.2;
    double female_fraction = 0.8;
    double roaming_fraction = 0.2;
    double mating_prob = 0.3;
    double immigration_rate = 0.4;
    double phi1 = 1.5;
    double phi2 = 1.5;
    double velocity_clamp = 0.2;  // fraction of (hi - lo) per coordinate
    double mutation_prob = 0.05;
    int max_iters = 100;
    std::uint64_t seed = 0;
    Bounds bounds;

    void validate() const {
        if (pop_size < 4) throw ConfigError("mlo: pop_size must be >= 4");
        if (prides < 1) throw ConfigError("mlo: prides must be >= 1");
        for (double f : {nomad_fraction, female_fraction, roaming_fraction, mating_prob,
                         immigration_rate}) {
            if (!(f > 0.0 && f < 1.0)) throw ConfigError("mlo: fractions must lie in (0,1)");
        }
        if (!(phi1 > 0.0) || !(phi2 > 0.0)) throw ConfigError("mlo: phi1 and phi2 must be > 0");
        if (!(velocity_clamp > 0.0)) throw ConfigError("mlo: velocity_clamp must be > 0");
        if (mutation_prob < 0.0 || mutation_prob > 1.0) {
            throw ConfigError("mlo: mutation_prob must lie in [0,1]");
        }
        if (max_iters < 0) throw ConfigError("mlo: max_iters must be >= 0");
        bounds.validate();
    }
};

struct HistoryEntry {
    int iteration = 0;
    double best_fitness = 0.0;
    Vec best_position;
    double mean_fitness = 0.0;
};

struct BestHistory {
    std::vector<HistoryEntry> entries;
    Vec gbest_position;
    double gbest_fitness = -std::numeric_limits<double>::infinity();
};

enum class Phase { kEvaluate, kHunt, kSafePlace, kRoam, kMate, kVelocityUpdate, kMaintain };

using Observer = std::function<void(Phase, int iteration, const std::vector<Lion>&)>;

// ---------------------------------------------------------------------------
// Low-level operators. Each consumes rng draws in the documented order so
// recorded-draw oracles can replay them.

namespace detail {

inline std::string position_string(const Vec& v) {
    std::ostringstream out;
    out << "(";
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (j) out << ", ";
        if (j == 8 && v.size() > 9) {
            out << "...";
            break;
        }
        out << v[j];
    }
    out << ")";
    return out.str();
}

inline double norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace detail

// Fitness wrapper; the whole module maximizes.
inline double evaluate(const Vec& position, const Evaluator& evaluator) {
    const double f = evaluator(position);
    if (!std::isfinite(f)) {
        throw DataError("mlo: evaluator returned a non-finite value at " +
                        detail::position_string(position));
    }
    return f;
}

// Eq. 8: wing hunter jumps to a uniform point between itself and the prey,
// per coordinate; equal coordinates stay (degenerate interval, no draw).
inline Vec wing_hunter_move(const Vec& hunter, const Vec& prey, Rng& rng) {
    Vec out = hunter;
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (hunter[j] < prey[j]) {
            out[j] = rng.uniform(hunter[j], prey[j]);
        } else if (hunter[j] > prey[j]) {
            out[j] = rng.uniform(prey[j], hunter[j]);
        }
    }
    return out;
}

// Eq. 7: prey escapes an improving hunter; one scalar rand per escape.
// improvement is %I, the relative fitness improvement.
inline Vec prey_escape(const Vec& prey, const Vec& hunter, double improvement, Rng& rng) {
    const double r = rng.uniform();
    Vec out = prey;
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = prey[j] + r * improvement * (prey[j] - hunter[j]);
    }
    return out;
}

// Eq. 12
inline int tournament_size(int success_count) {
    return std::max(2, static_cast<int>(std::ceil(success_count / 2.0)));
}

// Eq. 9. Draw order: d gaussians for {SP2} (only when d >= 2 and the distance
// is nonzero), then u ~ U(0,1), w ~ U(-1,1), theta ~ U(-pi/6, pi/6).
// {SP1} points from the female toward the selected position, {SP2} is a
// random unit vector orthogonal to it (zero in 1-D), and d = D.
inline Vec safe_place_move(const Vec& female, const Vec& selected, Rng& rng) {
    constexpr double kPi6 = 3.14159265358979323846 / 6.0;
    const std::size_t dim = female.size();
    Vec direction(dim);
    for (std::size_t j = 0; j < dim; ++j) direction[j] = selected[j] - female[j];
    const double distance = detail::norm(direction);
    if (distance == 0.0) return female;
    for (double& x : direction) x /= distance;

    Vec ortho(dim, 0.0);
    if (dim >= 2) {
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            ortho[j] = rng.normal(0.0, 1.0);
            dot += ortho[j] * direction[j];
        }
        for (std::size_t j = 0; j < dim; ++j) ortho[j] -= dot * direction[j];
        const double n = detail::norm(ortho);
        if (n > 1e-12) {
            for (double& x : ortho) x /= n;
        } else {
            std::fill(ortho.begin(), ortho.end(), 0.0);
        }
    }

    const double u = rng.uniform();
    const double w = rng.uniform(-1.0, 1.0);
    const double theta = rng.uniform(-kPi6, kPi6);
    Vec out(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        out[j] = female[j] + 2.0 * distance * u * direction[j] +
                 w * std::tan(theta) * distance * ortho[j];
    }
    return out;
}

// Eq. 13: one step of length U(0, 2D) toward the territory point. The D = 0
// case still consumes its draw (U(0,0) = 0).
inline Vec roam_step(const Vec& male, const Vec& territory_point, Rng& rng) {
    Vec direction(male.size());
    for (std::size_t j = 0; j < male.size(); ++j) direction[j] = territory_point[j] - male[j];
    const double distance = detail::norm(direction);
    const double step = rng.uniform(0.0, 2.0 * distance);
    Vec out = male;
    if (distance > 0.0) {
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += step * direction[j] / distance;
        }
    }
    return out;
}

// Eq. 15 with fitness expressed as cost. The printed ratio assumes positive
// costs; |best_cost| keeps the intent for negative costs and best_cost = 0
// pins the probability to its 0.6 cap.
inline double nomad_jump_prob(double cost, double best_cost) {
    const double denom = std::abs(best_cost);
    if (denom <= 1e-12) return 0.6;
    const double excess = (cost - best_cost) / denom;
    return 0.1 + std::min(0.5, std::max(0.0, excess));
}

// Eq. 14: coordinate kept when rand_j > prob, else redrawn uniformly.
inline void nomad_scatter(Vec& position, double prob, const Bounds& bounds, Rng& rng) {
    for (std::size_t j = 0; j < position.size(); ++j) {
        if (rng.uniform() <= prob) position[j] = rng.uniform(bounds.lo[j], bounds.hi[j]);
    }
}

// Eqs. 16-17: offspring pair before mutation. males holds the selected
// resident males (ties to SU_i = 1); the blend mirrors chi <-> 1-chi.
inline std::pair<Vec, Vec> mate_blend(const Vec& female, const std::vector<const Vec*>& males,
                                      double chi) {
    const double share = 1.0 / static_cast<double>(males.size());
    Vec off1(female.size()), off2(female.size());
    for (std::size_t j = 0; j < female.size(); ++j) {
        double male_mean = 0.0;
        for (const Vec* m : males) male_mean += (*m)[j] * share;
        off1[j] = chi * female[j] + (1.0 - chi) * male_mean;
        off2[j] = (1.0 - chi) * female[j] + chi * male_mean;
    }
    return {off1, off2};
}

// Each gene redraws uniformly in bounds with probability prob.
inline void mutate(Vec& genes, double prob, const Bounds& bounds, Rng& rng) {
    for (std::size_t j = 0; j < genes.size(); ++j) {
        if (rng.uniform() < prob) genes[j] = rng.uniform(bounds.lo[j], bounds.hi[j]);
    }
}

// Eqs. 18-19 with explicit r1, r2 so fixtures can substitute scalars.
inline void velocity_position_step(Lion& lion, const Vec& gbest, const MloConfig& cfg, double r1,
                                   double r2) {
    for (std::size_t j = 0; j < lion.position.size(); ++j) {
        double v = lion.velocity[j] + cfg.phi1 * r1 * (lion.pbest_position[j] - lion.position[j]) +
                   cfg.phi2 * r2 * (gbest[j] - lion.position[j]);
        const double vmax = cfg.velocity_clamp * (cfg.bounds.hi[j] - cfg.bounds.lo[j]);
        v = std::min(vmax, std::max(-vmax, v));
        lion.velocity[j] = v;
        lion.position[j] += v;
    }
    cfg.bounds.clamp(lion.position);
}

inline void velocity_position_update(Lion& lion, const Vec& gbest, const MloConfig& cfg,
                                     Rng& rng) {
    const double r1 = rng.uniform();
    const double r2 = rng.uniform();
    velocity_position_step(lion, gbest, cfg, r1, r2);
}

// Decodes a position into a feature mask: coordinates normalized to [0,1] by
// the bounds, selected when above the threshold. An empty mask forces the
// highest coordinate on.
inline FeatureMask binarize(const Vec& position, const Bounds& bounds, double threshold) {
    FeatureMask mask(position.size(), 0);
    bool any = false;
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < position.size(); ++j) {
        const double normalized = (position[j] - bounds.lo[j]) / (bounds.hi[j] - bounds.lo[j]);
        if (normalized > threshold) {
            mask[j] = 1;
            any = true;
        }
        if (normalized > best_value) {
            best_value = normalized;
            best = j;
        }
    }
    if (!any) mask[best] = 1;
    return mask;
}

inline std::size_t mask_count(const FeatureMask& mask) {
    std::size_t n = 0;
    for (auto b : mask) n += b != 0;
    return n;
}

// ---------------------------------------------------------------------------
// The composed optimizer.

namespace detail {

class Run {
public:
    Run(const MloConfig& cfg, Evaluator evaluator, Observer observer)
        : cfg_(cfg), evaluator_(std::move(evaluator)), observer_(std::move(observer)),
          rng_(cfg.seed) {}

    BestHistory operator()() {
        cfg_.validate();
        init_population();
        refresh_gbest();
        push_history(0);
        for (int t = 1; t <= cfg_.max_iters; ++t) {
            iteration_ = t;
            evaluate_phase();
            hunt_phase();
            safe_place_phase();
            roam_phase();
            mate_phase();
            velocity_phase();
            refresh_gbest();
            maintain_phase();
            update_success_flags();
            push_history(t);
        }
        return std::move(history_);
    }

private:
    MloConfig cfg_;
    Evaluator evaluator_;
    Observer observer_;
    Rng rng_;
    std::vector<Lion> pop_;
    std::vector<std::vector<std::size_t>> hunters_by_pride_;
    BestHistory history_;
    int iteration_ = 0;

    std::size_t dim() const { return cfg_.bounds.dim(); }

    void notify(Phase phase) {
        if (observer_) observer_(phase, iteration_, pop_);
    }

    double eval_lion(Lion& lion) {
        double f;
        try {
            f = evaluate(lion.position, evaluator_);
        } catch (const std::exception& e) {
            throw StageError("mlo: evaluation failed at iteration " +
                             std::to_string(iteration_) + ": " + e.what());
        }
        lion.fitness = f;
        if (f > lion.pbest_fitness) {
            lion.pbest_fitness = f;
            lion.pbest_position = lion.position;
        }
        return f;
    }

    void init_population() {
        const int n = cfg_.pop_size;
        int nomads = static_cast<int>(std::lround(n * cfg_.nomad_fraction));
        nomads = std::max(1, std::min(nomads, n - 2));

        pop_.assign(static_cast<std::size_t>(n), Lion{});
        for (auto& lion : pop_) {
            lion.position.resize(dim());
            for (std::size_t j = 0; j < dim(); ++j) {
                lion.position[j] = rng_.uniform(cfg_.bounds.lo[j], cfg_.bounds.hi[j]);
            }
            lion.velocity.assign(dim(), 0.0);
        }

        std::vector<std::size_t> order(pop_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng_.shuffle(order);

        // first `nomads` of the shuffled order roam; the rest fill prides
        // round-robin
        std::vector<std::vector<std::size_t>> pride_members(
            static_cast<std::size_t>(cfg_.prides));
        for (std::size_t k = 0; k < order.size(); ++k) {
            Lion& lion = pop_[order[k]];
            if (k < static_cast<std::size_t>(nomads)) {
                lion.pride = -1;
            } else {
                const int p = static_cast<int>((k - nomads) % cfg_.prides);
                lion.pride = p;
                pride_members[static_cast<std::size_t>(p)].push_back(order[k]);
            }
        }

        // pride gender ratio female_fraction, at least one male when possible;
        // nomads reverse the ratio
        for (const auto& members : pride_members) {
            if (members.empty()) continue;
            std::size_t females = static_cast<std::size_t>(
                std::lround(cfg_.female_fraction * static_cast<double>(members.size())));
            if (members.size() >= 2) {
                females = std::min(females, members.size() - 1);
                females = std::max<std::size_t>(females, 1);
            }
            for (std::size_t k = 0; k < members.size(); ++k) {
                pop_[members[k]].gender = k < females ? Gender::kFemale : Gender::kMale;
            }
        }
        std::size_t nomad_females = static_cast<std::size_t>(
            std::lround((1.0 - cfg_.female_fraction) * static_cast<double>(nomads)));
        std::size_t seen = 0;
        for (std::size_t k = 0; k < static_cast<std::size_t>(nomads); ++k) {
            pop_[order[k]].gender = seen++ < nomad_females ? Gender::kFemale : Gender::kMale;
        }

        for (auto& lion : pop_) {
            lion.fitness = -std::numeric_limits<double>::infinity();
            lion.pbest_fitness = -std::numeric_limits<double>::infinity();
            eval_lion(lion);
            lion.pbest_at_iter_start = lion.pbest_fitness;
            lion.success = 0;
        }
    }

    std::vector<std::size_t> pride_indices(int pride) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < pop_.size(); ++i) {
            if (pop_[i].pride == pride) out.push_back(i);
        }
        return out;
    }

    std::vector<std::size_t> nomad_indices() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < pop_.size(); ++i) {
            if (pop_[i].is_nomad()) out.push_back(i);
        }
        return out;
    }

    void evaluate_phase() {
        for (auto& lion : pop_) {
            eval_lion(lion);
            lion.pbest_at_iter_start = lion.pbest_fitness;
        }
        notify(Phase::kEvaluate);
    }

    // Step 2. Each pride's hunting females split into three groups; the
    // group with the highest cumulative fitness is the center and stays put
    // (the paper moves only the wings), wings jump per Eq. 8 and an improving
    // hunter makes the prey escape per Eq. 7.
    void hunt_phase() {
        hunters_by_pride_.assign(static_cast<std::size_t>(cfg_.prides), {});
        for (int p = 0; p < cfg_.prides; ++p) {
            const auto members = pride_indices(p);
            std::vector<std::size_t> females;
            for (auto i : members) {
                if (pop_[i].gender == Gender::kFemale) females.push_back(i);
            }
            if (females.empty()) continue;

            std::vector<std::size_t> hunters;
            for (auto i : females) {
                if (rng_.bernoulli(0.5)) hunters.push_back(i);
            }
            if (hunters.empty()) hunters.push_back(females[rng_.uniform_index(females.size())]);
            rng_.shuffle(hunters);
            hunters_by_pride_[static_cast<std::size_t>(p)] = hunters;

            const std::size_t n = hunters.size();
            const std::size_t base = n / 3, rem = n % 3;
            const std::size_t sizes[3] = {base + (rem > 0), base + (rem > 1), base};
            double group_fitness[3];
            std::size_t start = 0;
            int center = 0;
            double best_sum = -std::numeric_limits<double>::infinity();
            for (int g = 0; g < 3; ++g) {
                double sum = 0.0;
                for (std::size_t k = 0; k < sizes[g]; ++k) sum += pop_[hunters[start + k]].fitness;
                group_fitness[g] = sizes[g] ? sum : -std::numeric_limits<double>::infinity();
                if (sizes[g] && group_fitness[g] > best_sum) {
                    best_sum = group_fitness[g];
                    center = g;
                }
                start += sizes[g];
            }

            Vec prey(dim(), 0.0);
            for (auto i : hunters) {
                for (std::size_t j = 0; j < dim(); ++j) prey[j] += pop_[i].position[j] / n;
            }

            start = 0;
            for (int g = 0; g < 3; ++g) {
                for (std::size_t k = 0; k < sizes[g]; ++k) {
                    const std::size_t i = hunters[start + k];
                    if (g == center) continue;
                    Lion& hunter = pop_[i];
                    const double old_fitness = hunter.fitness;
                    hunter.position = wing_hunter_move(hunter.position, prey, rng_);
                    cfg_.bounds.clamp(hunter.position);
                    const double new_fitness = eval_lion(hunter);
                    if (new_fitness > old_fitness) {
                        double improvement;
                        if (std::abs(old_fitness) <= 1e-12) {
                            improvement = 1.0;
                        } else {
                            improvement = (new_fitness - old_fitness) / std::abs(old_fitness);
                        }
                        prey = prey_escape(prey, hunter.position, improvement, rng_);
                        cfg_.bounds.clamp(prey);
                    }
                }
                start += sizes[g];
            }
        }
        notify(Phase::kHunt);
    }

    // Step 3. Females that stayed home move toward a tournament-selected
    // best position; the tournament size follows Eq. 12 from the previous
    // iteration's success count.
    void safe_place_phase() {
        for (int p = 0; p < cfg_.prides; ++p) {
            const auto members = pride_indices(p);
            if (members.empty()) continue;
            int successes = 0;
            for (auto i : members) successes += pop_[i].success;
            const std::size_t size =
                std::min<std::size_t>(static_cast<std::size_t>(tournament_size(successes)),
                                      members.size());

            const auto& hunters = hunters_by_pride_[static_cast<std::size_t>(p)];
            for (auto i : members) {
                const Lion& lion = pop_[i];
                if (lion.gender != Gender::kFemale) continue;
                if (std::find(hunters.begin(), hunters.end(), i) != hunters.end()) continue;

                // tournament over pride pbest positions
                std::vector<std::size_t> pool = members;
                std::size_t winner = pool[0];
                double winner_fitness = -std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < size; ++k) {
                    const std::size_t pick = rng_.uniform_index(pool.size() - k);
                    std::swap(pool[pick], pool[pool.size() - 1 - k]);
                    const std::size_t cand = pool[pool.size() - 1 - k];
                    if (pop_[cand].pbest_fitness > winner_fitness ||
                        (pop_[cand].pbest_fitness == winner_fitness && cand < winner)) {
                        winner_fitness = pop_[cand].pbest_fitness;
                        winner = cand;
                    }
                }

                Lion& female = pop_[i];
                female.position =
                    safe_place_move(female.position, pop_[winner].pbest_position, rng_);
                cfg_.bounds.clamp(female.position);
                eval_lion(female);
            }
        }
        notify(Phase::kSafePlace);
    }

    // Step 4. Resident males visit a roaming_fraction share of their pride's
    // territory (Eq. 13); nomads scatter coordinate-wise per Eqs. 14-15.
    void roam_phase() {
        for (int p = 0; p < cfg_.prides; ++p) {
            const auto members = pride_indices(p);
            if (members.empty()) continue;
            for (auto i : members) {
                if (pop_[i].gender != Gender::kMale) continue;
                const std::size_t visits = static_cast<std::size_t>(std::ceil(
                    cfg_.roaming_fraction * static_cast<double>(members.size())));
                std::vector<std::size_t> pool = members;
                for (std::size_t k = 0; k < std::min(visits, pool.size()); ++k) {
                    const std::size_t pick = rng_.uniform_index(pool.size() - k);
                    std::swap(pool[pick], pool[pool.size() - 1 - k]);
                    const std::size_t target = pool[pool.size() - 1 - k];
                    Lion& male = pop_[i];
                    male.position =
                        roam_step(male.position, pop_[target].pbest_position, rng_);
                    cfg_.bounds.clamp(male.position);
                    eval_lion(male);
                }
            }
        }

        const auto nomads = nomad_indices();
        if (!nomads.empty()) {
            double best_cost = std::numeric_limits<double>::infinity();
            for (auto i : nomads) best_cost = std::min(best_cost, -pop_[i].fitness);
            for (auto i : nomads) {
                Lion& nomad = pop_[i];
                const double prob = nomad_jump_prob(-nomad.fitness, best_cost);
                nomad_scatter(nomad.position, prob, cfg_.bounds, rng_);
                eval_lion(nomad);
            }
        }
        notify(Phase::kRoam);
    }

    // Step 5. Eqs. 16-17 blends plus mutation; offspring join the mother's
    // pride, one of each gender in random order.
    void mate_phase() {
        std::vector<Lion> offspring;
        for (int p = 0; p < cfg_.prides; ++p) {
            const auto members = pride_indices(p);
            std::vector<std::size_t> females, males;
            for (auto i : members) {
                (pop_[i].gender == Gender::kFemale ? females : males).push_back(i);
            }
            if (males.empty()) continue;  // no resident males: skip silently

            for (auto fi : females) {
                if (!rng_.bernoulli(cfg_.mating_prob)) continue;
                std::vector<const Vec*> selected;
                for (auto mi : males) {
                    if (rng_.bernoulli(0.5)) selected.push_back(&pop_[mi].position);
                }
                if (selected.empty()) {
                    selected.push_back(&pop_[males[rng_.uniform_index(males.size())]].position);
                }
                double chi = rng_.normal(0.5, 0.1);
                chi = std::min(1.0, std::max(0.0, chi));
                auto [cub1, cub2] = mate_blend(pop_[fi].position, selected, chi);
                mutate(cub1, cfg_.mutation_prob, cfg_.bounds, rng_);
                mutate(cub2, cfg_.mutation_prob, cfg_.bounds, rng_);
                cfg_.bounds.clamp(cub1);
                cfg_.bounds.clamp(cub2);

                const bool first_female = rng_.bernoulli(0.5);
                for (int c = 0; c < 2; ++c) {
                    Lion cub;
                    cub.position = c == 0 ? std::move(cub1) : std::move(cub2);
                    cub.velocity.assign(dim(), 0.0);
                    cub.gender = (c == 0) == first_female ? Gender::kFemale : Gender::kMale;
                    cub.pride = p;
                    offspring.push_back(std::move(cub));
                }
            }
        }
        for (auto& cub : offspring) {
            eval_lion(cub);
            cub.pbest_at_iter_start = cub.pbest_fitness;
            pop_.push_back(std::move(cub));
        }
        notify(Phase::kMate);
    }

    // Step 6. PSO velocity/position update applied to every lion.
    void velocity_phase() {
        for (auto& lion : pop_) {
            velocity_position_update(lion, history_.gbest_position, cfg_, rng_);
        }
        notify(Phase::kVelocityUpdate);
    }

    void refresh_gbest() {
        for (const auto& lion : pop_) {
            if (lion.pbest_fitness > history_.gbest_fitness) {
                history_.gbest_fitness = lion.pbest_fitness;
                history_.gbest_position = lion.pbest_position;
            }
        }
    }

    // Weakest-nomads-first culling restores pop_size; the nomad pool is kept
    // alive by converting one weakest eligible resident when it empties
    // (residents may become nomads and vice versa). Females then migrate
    // between prides at immigration_rate.
    void maintain_phase() {
        while (pop_.size() > static_cast<std::size_t>(cfg_.pop_size)) {
            std::size_t victim = pop_.size();
            double worst = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < pop_.size(); ++i) {
                if (pop_[i].is_nomad() && pop_[i].fitness <= worst) {
                    worst = pop_[i].fitness;
                    victim = i;
                }
            }
            if (victim == pop_.size()) {
                for (std::size_t i = 0; i < pop_.size(); ++i) {
                    if (pop_[i].fitness <= worst) {
                        worst = pop_[i].fitness;
                        victim = i;
                    }
                }
            }
            pop_.erase(pop_.begin() + static_cast<std::ptrdiff_t>(victim));
        }

        if (nomad_indices().empty()) {
            std::size_t convert = pop_.size();
            double worst = std::numeric_limits<double>::infinity();
            for (int p = 0; p < cfg_.prides; ++p) {
                const auto members = pride_indices(p);
                std::size_t pride_males = 0;
                for (auto i : members) pride_males += pop_[i].gender == Gender::kMale;
                for (auto i : members) {
                    const bool male = pop_[i].gender == Gender::kMale;
                    const bool eligible = (male && pride_males >= 2) ||
                                          (!male && members.size() >= 3);
                    if (eligible && pop_[i].fitness < worst) {
                        worst = pop_[i].fitness;
                        convert = i;
                    }
                }
            }
            if (convert < pop_.size()) pop_[convert].pride = -1;
        }

        if (cfg_.prides >= 2) {
            for (auto& lion : pop_) {
                if (lion.is_nomad() || lion.gender != Gender::kFemale) continue;
                if (!rng_.bernoulli(cfg_.immigration_rate)) continue;
                std::size_t target = rng_.uniform_index(static_cast<std::size_t>(cfg_.prides - 1));
                if (static_cast<int>(target) >= lion.pride) ++target;
                lion.pride = static_cast<int>(target);
            }
        }
        notify(Phase::kMaintain);
    }

    void update_success_flags() {
        for (auto& lion : pop_) {
            lion.success = lion.pbest_fitness > lion.pbest_at_iter_start ? 1 : 0;
        }
    }

    void push_history(int iteration) {
        HistoryEntry entry;
        entry.iteration = iteration;
        entry.best_fitness = history_.gbest_fitness;
        entry.best_position = history_.gbest_position;
        double mean = 0.0;
        for (const auto& lion : pop_) mean += lion.fitness;
        entry.mean_fitness = mean / static_cast<double>(pop_.size());
        history_.entries.push_back(std::move(entry));
    }
};

}  // namespace detail

// Runs the optimizer: per iteration, fitness evaluation, hunting, safe-place
// move, roaming, mating, velocity/position update, pbest/gbest refresh and
// population maintenance. Maximizes; fully deterministic given cfg.
inline BestHistory run(const MloConfig& cfg, const Evaluator& evaluator,
                       const Observer& observer = nullptr) {
    return detail::Run(cfg, evaluator, observer)();
}

}  // namespace mfeo::mlo
