#pragma once

#include <unordered_map>

#include "multifix/gp/tree.hpp"

namespace multifix::gp {

enum class Task { classification, regression };

struct GpDataset {
    FeatureMatrix x;
    std::vector<float> y;
    Task task = Task::classification;
    int n_classes = 2;
};

inline int round_to_class(float v, int n_classes) {
    long r = std::lroundf(v);
    if (r < 0) r = 0;
    if (r > n_classes - 1) r = n_classes - 1;
    return static_cast<int>(r);
}

// Classification fitness is balanced accuracy of the rounded/clamped tree
// output; regression fitness is negative MSE. Higher is better in both.
inline double fitness_from_outputs(const std::vector<float>& out, const GpDataset& ds) {
    if (ds.task == Task::regression) {
        double acc = 0.0;
        for (size_t i = 0; i < out.size(); ++i) {
            double d = static_cast<double>(out[i]) - ds.y[i];
            acc += d * d;
        }
        return -acc / static_cast<double>(out.size());
    }
    std::vector<int> correct(static_cast<size_t>(ds.n_classes), 0), total(static_cast<size_t>(ds.n_classes), 0);
    for (size_t i = 0; i < out.size(); ++i) {
        int truth = static_cast<int>(ds.y[i]);
        total[static_cast<size_t>(truth)]++;
        if (round_to_class(out[i], ds.n_classes) == truth) correct[static_cast<size_t>(truth)]++;
    }
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < ds.n_classes; ++c) {
        if (total[static_cast<size_t>(c)] == 0) continue;
        ++present;
        sum += static_cast<double>(correct[static_cast<size_t>(c)]) / total[static_cast<size_t>(c)];
    }
    return present > 0 ? sum / present : 0.0;
}

struct EvalCounter {
    int64_t used = 0;
    int64_t budget = 0;  // 0 = unlimited
    bool exhausted() const { return budget > 0 && used >= budget; }
};

inline double evaluate_fitness(const Tree& t, const GpDataset& ds, EvalCounter& evals,
                               std::vector<float>& scratch_out) {
    if (ds.x.rows == 0) throw DataError("gp: empty dataset");
    ++evals.used;
    t.eval(ds.x, scratch_out);
    return fitness_from_outputs(scratch_out, ds);
}

inline double evaluate_tree_fitness(const Tree& t, const GpDataset& ds) {
    EvalCounter ev;
    std::vector<float> out;
    return evaluate_fitness(t, ds, ev, out);
}

// ---------------------------------------------------------------------------
// linkage tree (FOS) learned from per-position symbol statistics
// ---------------------------------------------------------------------------

struct LinkageTree {
    // subsets in construction order: singletons first, merged clusters after,
    // the last entry is the full index set
    std::vector<std::vector<int>> subsets;
};

// pairwise mutual information of node symbols, then average-linkage
// agglomeration (UPGMA) over the MI similarity
inline LinkageTree learn_linkage_tree(const std::vector<Tree>& pop) {
    if (pop.size() < 2) throw ConfigError("linkage: population must hold at least 2 trees");
    int p = static_cast<int>(pop[0].nodes.size());
    int n = static_cast<int>(pop.size());

    // dense per-position categorical codes
    std::vector<std::vector<int>> code(static_cast<size_t>(p), std::vector<int>(static_cast<size_t>(n)));
    std::vector<int> vocab(static_cast<size_t>(p));
    {
        std::unordered_map<uint64_t, int> dict;
        for (int i = 0; i < p; ++i) {
            dict.clear();
            for (int j = 0; j < n; ++j) {
                uint64_t k = pop[static_cast<size_t>(j)].nodes[static_cast<size_t>(i)].key();
                auto [it, fresh] = dict.emplace(k, static_cast<int>(dict.size()));
                code[static_cast<size_t>(i)][static_cast<size_t>(j)] = it->second;
            }
            vocab[static_cast<size_t>(i)] = static_cast<int>(dict.size());
        }
    }

    auto entropy = [&](const std::vector<int>& counts) {
        double h = 0.0;
        for (int c : counts) {
            if (c == 0) continue;
            double q = static_cast<double>(c) / n;
            h -= q * std::log(q);
        }
        return h;
    };

    std::vector<double> hsingle(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) {
        std::vector<int> counts(static_cast<size_t>(vocab[static_cast<size_t>(i)]), 0);
        for (int j = 0; j < n; ++j) counts[static_cast<size_t>(code[static_cast<size_t>(i)][static_cast<size_t>(j)])]++;
        hsingle[static_cast<size_t>(i)] = entropy(counts);
    }

    std::vector<std::vector<double>> mi(static_cast<size_t>(p), std::vector<double>(static_cast<size_t>(p), 0.0));
    std::vector<int> joint;
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            int vi = vocab[static_cast<size_t>(i)], vj = vocab[static_cast<size_t>(j)];
            joint.assign(static_cast<size_t>(vi) * vj, 0);
            for (int s = 0; s < n; ++s)
                joint[static_cast<size_t>(code[static_cast<size_t>(i)][static_cast<size_t>(s)]) * vj +
                      code[static_cast<size_t>(j)][static_cast<size_t>(s)]]++;
            double hj = entropy(joint);
            double v = hsingle[static_cast<size_t>(i)] + hsingle[static_cast<size_t>(j)] - hj;
            mi[static_cast<size_t>(i)][static_cast<size_t>(j)] = mi[static_cast<size_t>(j)][static_cast<size_t>(i)] =
                v;
        }
    }

    LinkageTree fos;
    struct Cluster {
        std::vector<int> members;
        bool alive = true;
    };
    std::vector<Cluster> clusters;
    for (int i = 0; i < p; ++i) {
        clusters.push_back({{i}, true});
        fos.subsets.push_back({i});
    }
    // average-linkage similarity between clusters, maintained incrementally
    std::vector<std::vector<double>> sim(static_cast<size_t>(2 * p - 1),
                                         std::vector<double>(static_cast<size_t>(2 * p - 1), 0.0));
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sim[static_cast<size_t>(i)][static_cast<size_t>(j)] = mi[static_cast<size_t>(i)][static_cast<size_t>(j)];

    std::vector<int> alive;
    for (int i = 0; i < p; ++i) alive.push_back(i);
    while (alive.size() > 1) {
        // find the most similar pair (deterministic tie-break on indices)
        int bi = 0, bj = 1;
        double best = -1e300;
        for (size_t a = 0; a < alive.size(); ++a)
            for (size_t b = a + 1; b < alive.size(); ++b) {
                double v = sim[static_cast<size_t>(alive[a])][static_cast<size_t>(alive[b])];
                if (v > best) {
                    best = v;
                    bi = alive[a];
                    bj = alive[b];
                }
            }
        int ni = static_cast<int>(clusters.size());
        Cluster merged;
        merged.members = clusters[static_cast<size_t>(bi)].members;
        merged.members.insert(merged.members.end(), clusters[static_cast<size_t>(bj)].members.begin(),
                              clusters[static_cast<size_t>(bj)].members.end());
        std::sort(merged.members.begin(), merged.members.end());
        double wi = static_cast<double>(clusters[static_cast<size_t>(bi)].members.size());
        double wj = static_cast<double>(clusters[static_cast<size_t>(bj)].members.size());
        clusters.push_back(merged);
        fos.subsets.push_back(merged.members);
        // UPGMA similarity update
        std::vector<int> next_alive;
        for (int a : alive) {
            if (a == bi || a == bj) continue;
            double v = (wi * sim[static_cast<size_t>(a)][static_cast<size_t>(bi)] +
                        wj * sim[static_cast<size_t>(a)][static_cast<size_t>(bj)]) /
                       (wi + wj);
            sim[static_cast<size_t>(a)][static_cast<size_t>(ni)] = v;
            sim[static_cast<size_t>(ni)][static_cast<size_t>(a)] = v;
            next_alive.push_back(a);
        }
        next_alive.push_back(ni);
        alive = next_alive;
    }
    return fos;
}

// structural sanity used by tests and asserted cheaply after each learn
inline bool fos_invariants_hold(const LinkageTree& fos, int template_size) {
    if (static_cast<int>(fos.subsets.size()) != 2 * template_size - 1) return false;
    for (int i = 0; i < template_size; ++i)
        if (fos.subsets[static_cast<size_t>(i)] != std::vector<int>{i}) return false;
    if (static_cast<int>(fos.subsets.back().size()) != template_size) return false;
    return true;
}

// ---------------------------------------------------------------------------
// gene-pool optimal mixing
// ---------------------------------------------------------------------------

struct GomResult {
    Tree tree{2};
    double fit = 0.0;
};

// For each FOS subset in random order, copy the donor's symbols and keep the
// change only if fitness does not worsen.
inline GomResult gom_step(const Tree& recipient, double recipient_fit, const std::vector<Tree>& pop,
                          const LinkageTree& fos, const GpDataset& ds, Rng& rng, EvalCounter& evals) {
    GomResult res{recipient, recipient_fit};
    std::vector<int> order = iota_indices(static_cast<int>(fos.subsets.size()));
    rng.shuffle(order);
    std::vector<float> out;
    std::vector<std::pair<int, Symbol>> backup;
    for (int oi : order) {
        if (evals.exhausted()) break;
        const auto& subset = fos.subsets[static_cast<size_t>(oi)];
        const Tree& donor = pop[static_cast<size_t>(rng.uniform_int(static_cast<int>(pop.size())))];
        backup.clear();
        for (int idx : subset) {
            if (!(res.tree.nodes[static_cast<size_t>(idx)] == donor.nodes[static_cast<size_t>(idx)])) {
                backup.emplace_back(idx, res.tree.nodes[static_cast<size_t>(idx)]);
                res.tree.nodes[static_cast<size_t>(idx)] = donor.nodes[static_cast<size_t>(idx)];
            }
        }
        if (backup.empty()) continue;
        double f = evaluate_fitness(res.tree, ds, evals, out);
        if (f >= res.fit) {
            res.fit = f;
        } else {
            for (auto& [idx, sym] : backup) res.tree.nodes[static_cast<size_t>(idx)] = sym;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// populations and the interleaved multistart scheme
// ---------------------------------------------------------------------------

struct Population {
    std::vector<Tree> trees;
    std::vector<double> fits;
    Tree best{2};
    double best_fit = -1e300;
    int generations = 0;
    bool alive = true;

    bool converged() const {
        for (size_t i = 1; i < trees.size(); ++i)
            if (!(trees[i] == trees[0])) return false;
        return true;
    }
};

struct ImsConfig {
    std::vector<int> depths{2, 3, 4};
    int base_population = 64;
    int max_population = 1024;
    int max_generations = 512;  // per population
    int new_population_every = 4;
    int64_t eval_budget = 400000;  // total tree evaluations per run
    double perfect_fitness = 1.0;  // early stop (classification)
};

struct RunReport {
    Tree best{2};
    double best_fit = -1e300;
    int best_active_nodes = 0;
    int64_t evals_used = 0;
    std::vector<double> best_per_depth;
};

namespace detail {

struct ImsState {
    std::vector<Population> pops;
    const OperatorSet* set;
    const GpDataset* ds;
    int depth;
    Rng* rng;
    EvalCounter* evals;
    const ImsConfig* cfg;
    Tree global_best{2};
    double global_best_fit = -1e300;
    bool done = false;

    void consider(const Tree& t, double f) {
        if (f > global_best_fit ||
            (f == global_best_fit && t.active_count() < global_best.active_count())) {
            global_best = t;
            global_best_fit = f;
        }
        if (ds->task == Task::classification && f >= cfg->perfect_fitness) done = true;
    }

    void spawn(int size) {
        Population p;
        p.best = Tree(depth);
        for (int i = 0; i < size; ++i) {
            Tree t(depth);
            t.random_init(*set, *rng);
            p.trees.push_back(std::move(t));
        }
        std::vector<float> out;
        p.fits.resize(p.trees.size());
        for (size_t i = 0; i < p.trees.size(); ++i) {
            p.fits[i] = evaluate_fitness(p.trees[i], *ds, *evals, out);
            if (p.fits[i] > p.best_fit) {
                p.best_fit = p.fits[i];
                p.best = p.trees[i];
            }
            consider(p.trees[i], p.fits[i]);
        }
        pops.push_back(std::move(p));
    }

    void one_generation(size_t pi) {
        Population& p = pops[pi];
        LinkageTree fos = learn_linkage_tree(p.trees);
        std::vector<Tree> next;
        std::vector<double> next_fits;
        next.reserve(p.trees.size());
        for (size_t i = 0; i < p.trees.size(); ++i) {
            if (evals->exhausted() || done) break;
            GomResult r = gom_step(p.trees[i], p.fits[i], p.trees, fos, *ds, *rng, *evals);
            consider(r.tree, r.fit);
            if (r.fit > p.best_fit) {
                p.best_fit = r.fit;
                p.best = r.tree;
            }
            next.push_back(std::move(r.tree));
            next_fits.push_back(r.fit);
        }
        if (next.size() == p.trees.size()) {
            p.trees = std::move(next);
            p.fits = std::move(next_fits);
        }
        p.generations++;
        if (p.generations >= cfg->max_generations || p.converged()) p.alive = false;
    }

    // run one generation of population i; every new_population_every
    // generations give the next larger population a turn (creating it lazily)
    void advance(size_t pi) {
        if (done || evals->exhausted()) return;
        if (pi >= pops.size()) {
            int size = cfg->base_population << pi;
            if (size > cfg->max_population) return;
            spawn(size);
            if (done || evals->exhausted()) return;
        }
        if (!pops[pi].alive) return;
        one_generation(pi);
        kill_dominated();
        if (pops[pi].generations % cfg->new_population_every == 0) advance(pi + 1);
    }

    // a smaller population dies when any larger one has caught up with it
    void kill_dominated() {
        for (size_t i = 0; i < pops.size(); ++i) {
            if (!pops[i].alive) continue;
            for (size_t j = i + 1; j < pops.size(); ++j) {
                if (pops[j].generations > 0 && pops[j].best_fit >= pops[i].best_fit) {
                    pops[i].alive = false;
                    break;
                }
            }
        }
    }

    bool any_alive_or_spawnable() const {
        for (const auto& p : pops)
            if (p.alive) return true;
        return (cfg->base_population << pops.size()) <= cfg->max_population;
    }

    size_t smallest_alive() const {
        for (size_t i = 0; i < pops.size(); ++i)
            if (pops[i].alive) return i;
        return pops.size();
    }
};

}  // namespace detail

// Interleaved multistart over doubling population sizes, repeated for each
// configured template depth; returns the best tree found anywhere.
inline RunReport run_ims(const GpDataset& ds, const OperatorSet& set, const ImsConfig& cfg, uint64_t seed) {
    RunReport report;
    EvalCounter evals;
    evals.budget = cfg.eval_budget;
    int64_t used_before = 0;
    for (size_t di = 0; di < cfg.depths.size(); ++di) {
        detail::ImsState st;
        Rng rng(rng_stream(seed, {0x905ea, static_cast<uint64_t>(cfg.depths[di])}));
        st.set = &set;
        st.ds = &ds;
        st.depth = cfg.depths[di];
        st.rng = &rng;
        st.evals = &evals;
        st.cfg = &cfg;
        // every depth gets an equal share of the remaining budget
        int64_t depth_cap =
            cfg.eval_budget > 0
                ? used_before + (cfg.eval_budget - used_before) / static_cast<int64_t>(cfg.depths.size() - di)
                : 0;

        st.spawn(cfg.base_population);
        while (!st.done && !evals.exhausted() && (depth_cap == 0 || evals.used < depth_cap)) {
            size_t base = st.smallest_alive();
            if (base == st.pops.size()) {
                if (!st.any_alive_or_spawnable()) break;
                st.spawn(cfg.base_population << st.pops.size());
                continue;
            }
            st.advance(base);
        }
        if (st.global_best_fit > report.best_fit ||
            (st.global_best_fit == report.best_fit &&
             st.global_best.active_count() < report.best.active_count())) {
            report.best = st.global_best;
            report.best_fit = st.global_best_fit;
        }
        report.best_per_depth.push_back(st.global_best_fit);
        used_before = evals.used;
        if (st.done) break;  // perfect fitness; smaller depths were tried first
    }
    report.evals_used = evals.used;
    report.best_active_nodes = report.best.active_count();
    return report;
}

struct MultiSeedResult {
    Tree best{2};
    double best_fit = -1e300;
    int best_seed = 0;
    std::vector<double> per_seed_fit;
};

// n_seeds independent runs; the winner is the best training fitness, ties
// broken by smaller active tree, then by lower seed index.
inline MultiSeedResult fit_multiseed(const GpDataset& ds, const OperatorSet& set, const ImsConfig& cfg,
                                     uint64_t master_seed, int n_seeds = 5) {
    MultiSeedResult res;
    for (int s = 0; s < n_seeds; ++s) {
        RunReport r = run_ims(ds, set, cfg, rng_stream(master_seed, {0x5eed, static_cast<uint64_t>(s)}));
        res.per_seed_fit.push_back(r.best_fit);
        bool better = r.best_fit > res.best_fit ||
                      (r.best_fit == res.best_fit && r.best_active_nodes < res.best.active_count());
        if (s == 0 || better) {
            res.best = r.best;
            res.best_fit = r.best_fit;
            res.best_seed = s;
        }
    }
    return res;
}

}  // namespace multifix::gp
