// parallel.hpp — index-parallel loops with deterministic reductions.
//
// Workers only ever write to disjoint, index-addressed slots; reductions run
// afterwards over the materialized values in a fixed pairwise order.  Results
// are therefore bit-identical for any thread count.

#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace qtbias {

// Effective worker count: request > 0 wins, then QTBIAS_THREADS, then
// hardware concurrency; always >= 1.
int resolve_threads(int requested = 0);

// Fixed-tree pairwise summation.
double pairwise_sum(std::span<const double> xs);

template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = n * w / workers;
            const std::size_t hi = n * (w + 1) / workers;
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace qtbias
