#include "qtbias/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace qtbias {

int resolve_threads(int requested) {
    if (requested > 0) return std::min(requested, 256);
    if (const char* env = std::getenv("QTBIAS_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return std::min(n, 256);
        } catch (...) {
            // fall through to hardware default
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace qtbias
