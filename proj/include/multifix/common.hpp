#pragma once

#include <algorithm>
#include <atomic>
#include <cstdarg>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace multifix {

// Error taxonomy. The CLI maps these to exit codes (config 2, data 3, numeric 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};
// Dimension mismatches name the offending layer/operation in the message.
struct ShapeError : ConfigError {
    using ConfigError::ConfigError;
};

inline std::string format(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[1024];
    vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}

// Deterministic PRNG. All randomness in the project flows from a master seed
// through rng_stream() paths, so re-runs are bit-reproducible and worker
// count never changes results.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive an independent stream id from a master seed and a path of indices
// (e.g. {cell, fold, epoch}).
inline uint64_t rng_stream(uint64_t master, std::initializer_list<uint64_t> path) {
    uint64_t s = master ^ 0xd1b54a32d192ed03ULL;
    for (uint64_t p : path) {
        s ^= splitmix64(s) + p;
        s = splitmix64(s);
    }
    return s;
}

class Rng {
  public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // [0, 1)
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int uniform_int(int n) {
        // multiply-shift; bias is negligible for the ranges used here
        return static_cast<int>((static_cast<__uint128_t>(next_u64()) * static_cast<__uint128_t>(n)) >> 64);
    }

    // standard normal via Box-Muller (no spare caching, keeps streams simple)
    double normal() {
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    Rng fork(uint64_t tag) { return Rng(rng_stream(state_, {tag, 0x5eedf0c5ULL})); }

  private:
    uint64_t state_;
};

inline std::vector<int> iota_indices(int n) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

// Runs fn(0..n-1) on `jobs` workers. Tasks must be independent (each writes
// its own output slot and derives its own rng stream), so results are
// identical for any worker count.
template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// FNV-1a, used for provenance hashes of config text.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_hex(uint64_t v) {
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

// Canonical float formatting: shortest form that round-trips a float32.
// Expression strings and CSV output rely on this being deterministic.
inline std::string format_float(float v) {
    for (int prec = 1; prec <= 9; ++prec) {
        char buf[64];
        snprintf(buf, sizeof(buf), "%.*g", prec, static_cast<double>(v));
        if (strtof(buf, nullptr) == v) return std::string(buf);
    }
    char buf[64];
    snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return std::string(buf);
}

}  // namespace multifix
