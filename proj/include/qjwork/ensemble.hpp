// Parallel execution of trajectory ensembles
//
// Trajectory indices are cut into fixed-size chunks handed out through an
// atomic counter. Per-trajectory results land at their own index and
// per-chunk population sums are merged in chunk order afterwards, so the
// output does not depend on the number of workers or on scheduling.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "qjwork/jump_engine.hpp"
#include "qjwork/model.hpp"
#include "qjwork/stats.hpp"

namespace qjwork {

struct EnsembleOptions {
    int workers = 1;
    std::size_t chunk_size = 1024;
    EngineOptions engine;
    /// Orders n' for which W^(n') is evaluated. Empty means the dynamics order.
    std::vector<int> work_orders;
    bool keep_records = false;
};

struct EnsembleResult {
    int order = 0;
    std::int64_t n_traj = 0;
    double delta_f = 0.0;
    std::map<int, std::vector<double>> work;  // keyed by n'
    std::vector<double> entropy;              // R per trajectory
    std::int64_t infinite_entropy = 0;
    double max_identity_residual = 0.0;       // max |R - beta (W^(n) - dF)|
    std::int64_t total_jumps = 0;

    std::vector<double> pop_t;
    std::vector<double> pop_mean;
    std::vector<double> pop_sem;

    std::vector<TrajectoryRecord> records;

    WorkEnsemble work_ensemble(int n_prime) const {
        WorkEnsemble e;
        e.dynamics_order = order;
        e.work_order = n_prime;
        e.samples = work.at(n_prime);
        return e;
    }
};

template <class ChunkFn>
void for_each_chunk(std::int64_t n_items, std::size_t chunk_size, int workers, ChunkFn&& fn) {
    const std::size_t chunk = std::max<std::size_t>(1, chunk_size);
    const auto n_chunks =
        static_cast<std::size_t>((n_items + static_cast<std::int64_t>(chunk) - 1) /
                                 static_cast<std::int64_t>(chunk));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            const std::uint64_t first = c * chunk;
            const std::size_t count =
                std::min<std::size_t>(chunk, static_cast<std::size_t>(n_items) - first);
            try {
                fn(c, first, count);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_chunks);
                return;
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(n_chunks)));
    if (n_threads == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

inline EnsembleResult run_ensemble(const SystemConfig& cfg, int order,
                                   const EnsembleOptions& opt = {}) {
    const TrajectoryEngine engine(cfg, order, opt.engine);
    const std::int64_t n = cfg.n_traj;
    const auto n_sz = static_cast<std::size_t>(n);

    EnsembleResult res;
    res.order = order;
    res.n_traj = n;
    res.delta_f = free_energy_difference(cfg, cfg.t_init(), cfg.t_final());
    std::vector<int> orders = opt.work_orders.empty() ? std::vector<int>{order} : opt.work_orders;
    for (int np : orders) res.work[checked_order(np)].assign(n_sz, 0.0);
    res.entropy.assign(n_sz, 0.0);
    if (opt.keep_records) res.records.resize(n_sz);

    const std::size_t chunk = std::max<std::size_t>(1, opt.chunk_size);
    const std::size_t n_chunks = (n_sz + chunk - 1) / chunk;
    std::vector<PopulationSums> chunk_pops(n_chunks);
    std::vector<double> chunk_residual(n_chunks, 0.0);
    std::vector<std::int64_t> chunk_infinite(n_chunks, 0);
    std::vector<std::int64_t> chunk_jumps(n_chunks, 0);

    for_each_chunk(n, chunk, opt.workers, [&](std::size_t c, std::uint64_t first, std::size_t count) {
        ChunkResult out = engine.run(first, count);
        double resid = 0.0;
        std::int64_t inf = 0;
        std::int64_t jumps = 0;
        for (auto& rec : out.records) {
            const auto i = static_cast<std::size_t>(rec.index);
            for (auto& [np, samples] : res.work) samples[i] = reassign_work(rec, np, cfg);
            const EntropyProduction ep = entropy_production(rec, cfg);
            res.entropy[i] = ep.R;
            if (!ep.finite) {
                ++inf;
            } else {
                resid = std::max(resid, std::abs(ep.R - cfg.beta * (rec.work() - res.delta_f)));
            }
            jumps += static_cast<std::int64_t>(rec.events.size());
            if (opt.keep_records) res.records[i] = std::move(rec);
        }
        chunk_pops[c] = std::move(out.populations);
        chunk_residual[c] = resid;
        chunk_infinite[c] = inf;
        chunk_jumps[c] = jumps;
    });

    PopulationSums pops;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        pops.merge(chunk_pops[c]);
        res.max_identity_residual = std::max(res.max_identity_residual, chunk_residual[c]);
        res.infinite_entropy += chunk_infinite[c];
        res.total_jumps += chunk_jumps[c];
    }

    const std::size_t points = engine.population_points();
    for (std::size_t i = 0; i < points; ++i) {
        MeanAccumulator acc;
        acc.count = n;
        acc.sum = pops.sum[i];
        acc.sum_sq = pops.sum_sq[i];
        const Estimate e = acc.estimate();
        res.pop_t.push_back(engine.population_time(i));
        res.pop_mean.push_back(e.mean);
        res.pop_sem.push_back(e.sem);
    }
    return res;
}

} // namespace qjwork
